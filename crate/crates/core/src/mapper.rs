//! Runtime local-work-size selection and workload distribution.
//!
//! The runtime splits the global iteration space equally across cores. Inside
//! a core, consecutive blocks of `lws` iterations go to the lanes of warp 0,
//! then warp 1, and so on; once every warp of the core is loaded, assignment
//! spills over into the next sequential kernel call.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::device::{hardware_parallelism, DeviceConfig, Workload};

/// Hardware-aware local work size: `ceil(gws / hp)`, never below 1.
///
/// Rounding up keeps every workload inside a single kernel call.
pub fn optimal_lws(gws: u64, hp: u64) -> u64 {
    assert!(gws >= 1 && hp >= 1, "gws and hp must be positive");
    gws.div_ceil(hp)
}

/// Number of sequential kernel calls needed: `ceil(gws / (hp · lws))`.
pub fn kernel_call_count(gws: u64, hp: u64, lws: u64) -> u64 {
    assert!(gws >= 1 && hp >= 1 && lws >= 1, "arguments must be positive");
    let per_call = u128::from(hp) * u128::from(lws);
    u128::from(gws).div_ceil(per_call) as u64
}

/// One warp's share of a kernel call.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WarpLaunch {
    pub core_id: u32,
    pub warp_id: u32,
    pub call_index: u32,
    pub thread_mask: u64,
    /// Iterations per lane; 0 for lanes outside `thread_mask`.
    pub iterations_per_thread: Vec<u64>,
    /// Global index of each lane's first iteration; 0 for inactive lanes.
    pub first_iteration: Vec<u64>,
}

impl WarpLaunch {
    pub fn total_iterations(&self) -> u64 {
        self.iterations_per_thread.iter().sum()
    }

    /// Iterations of the busiest lane; the warp loops this many times.
    pub fn max_iterations(&self) -> u64 {
        self.iterations_per_thread.iter().copied().max().unwrap_or(0)
    }

    /// Lanes still active on loop iteration `iter` (0-based).
    pub fn mask_at_iteration(&self, iter: u64) -> u64 {
        self.iterations_per_thread
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > iter)
            .fold(0u64, |mask, (lane, _)| mask | (1u64 << lane))
    }
}

/// Every warp launch of a workload, ordered by `(call, core, warp)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaunchPlan {
    pub device: DeviceConfig,
    pub workload: Workload,
    pub launches: Vec<WarpLaunch>,
    pub kernel_calls: u32,
}

/// Contiguous per-core chunks `(start, len)`; the first `gws % cores` cores
/// get one extra iteration.
pub fn core_chunks(gws: u64, cores: u32) -> Vec<(u64, u64)> {
    let cores = u64::from(cores);
    let base = gws / cores;
    let extra = gws % cores;
    let mut start = 0;
    (0..cores)
        .map(|c| {
            let len = base + u64::from(c < extra);
            let chunk = (start, len);
            start += len;
            chunk
        })
        .collect()
}

pub fn distribute(workload: &Workload, device: &DeviceConfig) -> LaunchPlan {
    let lws = workload.lws();
    let threads = u64::from(device.threads_per_warp());
    let warps = u64::from(device.warps_per_core());

    let mut launches = Vec::new();
    for (core, (chunk_start, chunk_len)) in core_chunks(workload.gws(), device.cores()).into_iter().enumerate() {
        let slots = chunk_len.div_ceil(lws);
        let warp_launches = slots.div_ceil(threads);
        for launch_idx in 0..warp_launches {
            let mut iterations = vec![0u64; threads as usize];
            let mut first = vec![0u64; threads as usize];
            let mut mask = 0u64;
            for lane in 0..threads {
                let slot = launch_idx * threads + lane;
                if slot >= slots {
                    break;
                }
                let offset = slot * lws;
                iterations[lane as usize] = lws.min(chunk_len - offset);
                first[lane as usize] = chunk_start + offset;
                mask |= 1u64 << lane;
            }
            launches.push(WarpLaunch {
                core_id: core as u32,
                warp_id: (launch_idx % warps) as u32,
                call_index: (launch_idx / warps) as u32,
                thread_mask: mask,
                iterations_per_thread: iterations,
                first_iteration: first,
            });
        }
    }
    launches.sort_by_key(|l| (l.call_index, l.core_id, l.warp_id));
    let kernel_calls = launches.iter().map(|l| l.call_index + 1).max().unwrap_or(1);

    LaunchPlan {
        device: *device,
        workload: *workload,
        launches,
        kernel_calls,
    }
}

impl LaunchPlan {
    pub fn total_iterations(&self) -> u64 {
        self.launches.iter().map(WarpLaunch::total_iterations).sum()
    }

    /// Call count derived per core from its chunk size. Equals `kernel_calls`.
    pub fn expected_calls(&self) -> u64 {
        core_chunks(self.workload.gws(), self.device.cores())
            .iter()
            .filter(|(_, len)| *len > 0)
            .map(|(_, len)| len.div_ceil(self.device.lanes_per_core() * self.workload.lws()))
            .max()
            .unwrap_or(1)
    }

    /// Line-oriented text form: a header, then
    /// `call,core,warp,0b<mask>,<lane counts separated by spaces>` per launch.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# simtmap-plan v1 device={} gws={} lws={} calls={}",
            self.device,
            self.workload.gws(),
            self.workload.lws(),
            self.kernel_calls
        );
        for l in &self.launches {
            let counts: Vec<String> = l.iterations_per_thread.iter().map(u64::to_string).collect();
            let width = self.device.threads_per_warp() as usize;
            let _ = writeln!(
                out,
                "{},{},{},0b{:0width$b},{}",
                l.call_index,
                l.core_id,
                l.warp_id,
                l.thread_mask,
                counts.join(" "),
            );
        }
        out
    }
}

impl fmt::Display for LaunchPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Convenience: distribute with the optimal local work size for `gws`.
pub fn optimal_workload(gws: u64, device: &DeviceConfig) -> Workload {
    let lws = optimal_lws(gws, hardware_parallelism(device));
    Workload::new(gws, lws).expect("optimal lws never exceeds gws")
}
