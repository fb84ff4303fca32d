//! Cycle-approximate SIMT execution.
//!
//! Kernel calls run back to back, separated by a fixed dispatch overhead.
//! Inside a call every core runs independently: each cycle it issues up to
//! `issue_width_per_core` instructions, picking ready warps round-robin
//! starting after the warp that issued last. A warp has one instruction in
//! flight; issuing an instruction of class `K` keeps the warp busy for
//! `latency(K)` cycles.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{hardware_parallelism, DeviceConfig};
use crate::kernels::{Instr, InstrClass, KernelInstance, Section};
use crate::mapper::{LaunchPlan, WarpLaunch};
use crate::trace::TraceRecord;

pub const DEFAULT_CYCLE_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("launch targets core {core} but the device has {cores} cores")]
    CoreOutOfRange { core: u32, cores: u32 },
    #[error("launch targets warp {warp} but the device has {warps} warps per core")]
    WarpOutOfRange { warp: u32, warps: u32 },
    #[error("launch on core {core} warp {warp} has {lanes} lanes, device warps have {threads}")]
    LaneCountMismatch {
        core: u32,
        warp: u32,
        lanes: usize,
        threads: u32,
    },
    #[error("launch on core {core} warp {warp} call {call} has an inconsistent thread mask")]
    BadMask { core: u32, warp: u32, call: u32 },
    #[error("core {core} warp {warp} is launched twice in call {call}")]
    DuplicateLaunch { core: u32, warp: u32, call: u32 },
    #[error("plan covers gws {plan} but the kernel instance has gws {kernel}")]
    GwsMismatch { plan: u64, kernel: u64 },
    #[error("simulation exceeded the cycle budget of {0} cycles")]
    CycleBudgetExceeded(u64),
    #[error("invalid latency model: {0}")]
    InvalidLatency(String),
}

/// Per-class instruction latencies and dispatch costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyModel {
    pub alu_cycles: u64,
    pub load_cycles: u64,
    pub store_cycles: u64,
    pub branch_cycles: u64,
    pub irregular_load_multiplier: f64,
    pub call_overhead_cycles: u64,
    pub issue_width_per_core: u32,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            alu_cycles: 1,
            load_cycles: 20,
            store_cycles: 4,
            branch_cycles: 2,
            irregular_load_multiplier: 4.0,
            call_overhead_cycles: 200,
            issue_width_per_core: 1,
        }
    }
}

impl LatencyModel {
    /// Every latency 1, no dispatch overhead.
    pub fn unit() -> Self {
        Self {
            alu_cycles: 1,
            load_cycles: 1,
            store_cycles: 1,
            branch_cycles: 1,
            irregular_load_multiplier: 1.0,
            call_overhead_cycles: 0,
            issue_width_per_core: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("alu", self.alu_cycles),
            ("load", self.load_cycles),
            ("store", self.store_cycles),
            ("branch", self.branch_cycles),
            ("issue-width", u64::from(self.issue_width_per_core)),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(SimError::InvalidLatency(format!("{name} must be >= 1")));
            }
        }
        if !(self.irregular_load_multiplier.is_finite() && self.irregular_load_multiplier > 0.0) {
            return Err(SimError::InvalidLatency("irregular multiplier must be > 0".into()));
        }
        Ok(())
    }

    /// Barriers are not synchronizing in this model and cost one ALU slot.
    pub fn latency(&self, instr: &Instr) -> u64 {
        match instr.class {
            InstrClass::Alu | InstrClass::Barrier => self.alu_cycles,
            InstrClass::Load if instr.irregular => {
                ((self.load_cycles as f64 * self.irregular_load_multiplier).round() as u64).max(1)
            }
            InstrClass::Load => self.load_cycles,
            InstrClass::Store => self.store_cycles,
            InstrClass::Branch => self.branch_cycles,
        }
    }

    /// Applies a `key=value` override. Keys: `alu`, `load`, `store`,
    /// `branch`, `irregular`, `overhead`, `issue-width`.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), String> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {spec:?}"))?;
        let int = || {
            value
                .trim()
                .parse::<u64>()
                .map_err(|_| format!("{key}: expected a non-negative integer, got {value:?}"))
        };
        match key.trim() {
            "alu" => self.alu_cycles = int()?,
            "load" => self.load_cycles = int()?,
            "store" => self.store_cycles = int()?,
            "branch" => self.branch_cycles = int()?,
            "overhead" => self.call_overhead_cycles = int()?,
            "issue-width" => {
                self.issue_width_per_core = u32::try_from(int()?).map_err(|_| "issue-width out of range".to_string())?
            }
            "irregular" => {
                self.irregular_load_multiplier = value
                    .trim()
                    .parse()
                    .map_err(|_| format!("irregular: expected a number, got {value:?}"))?
            }
            other => return Err(format!(
                "unknown latency key {other:?} (expected alu, load, store, branch, irregular, overhead, issue-width)"
            )),
        }
        self.validate().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub total_cycles: u64,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
    /// Duration of each kernel call, from its first issue slot to the
    /// completion of its last instruction.
    pub per_call_cycles: Vec<u64>,
    /// Lane-instructions over available lane-issue slots.
    pub utilization: f64,
    pub issued_instructions: u64,
    pub lane_instructions: u64,
}

impl fmt::Display for SimResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cycles={} calls={} issued={} utilization={:.4}",
            self.total_cycles,
            self.per_call_cycles.len(),
            self.issued_instructions,
            self.utilization
        )
    }
}

struct Op {
    class: InstrClass,
    latency: u64,
    section: Section,
}

struct Program {
    ops: Vec<Op>,
    prologue: u64,
    body: u64,
    loop_overhead: u64,
    epilogue: u64,
}

impl Program {
    fn new(kernel: &KernelInstance, latency: &LatencyModel) -> Self {
        let t = &kernel.template;
        Self {
            ops: t
                .iter()
                .map(|i| Op {
                    class: i.class,
                    latency: latency.latency(i),
                    section: i.section.clone(),
                })
                .collect(),
            prologue: t.prologue.len() as u64,
            body: t.body.len() as u64,
            loop_overhead: t.loop_overhead.len() as u64,
            epilogue: t.epilogue.len() as u64,
        }
    }

    fn iteration_len(&self) -> u64 {
        self.body + self.loop_overhead
    }
}

struct WarpState<'a> {
    launch: &'a WarpLaunch,
    iterations: u64,
    step: u64,
    steps: u64,
    busy_until: u64,
    cached_iter: u64,
    cached_mask: u64,
}

impl<'a> WarpState<'a> {
    fn new(launch: &'a WarpLaunch, program: &Program, start: u64) -> Self {
        let iterations = launch.max_iterations();
        Self {
            launch,
            iterations,
            step: 0,
            steps: program.prologue + iterations * program.iteration_len() + program.epilogue,
            busy_until: start,
            cached_iter: 0,
            cached_mask: launch.mask_at_iteration(0),
        }
    }

    fn done(&self) -> bool {
        self.step >= self.steps
    }

    /// PC and active mask of the next instruction.
    fn next(&mut self, program: &Program) -> (u32, u64) {
        let s = self.step;
        if s < program.prologue {
            return (s as u32, self.launch.thread_mask);
        }
        let s = s - program.prologue;
        let looped = self.iterations * program.iteration_len();
        if s < looped {
            let iter = s / program.iteration_len();
            let offset = s % program.iteration_len();
            if iter != self.cached_iter {
                self.cached_iter = iter;
                self.cached_mask = self.launch.mask_at_iteration(iter);
            }
            return ((program.prologue + offset) as u32, self.cached_mask);
        }
        let e = s - looped;
        (
            (program.prologue + program.iteration_len() + e) as u32,
            self.launch.thread_mask,
        )
    }
}

fn validate_plan(device: &DeviceConfig, kernel: &KernelInstance, plan: &LaunchPlan) -> Result<(), SimError> {
    if plan.workload.gws() != kernel.gws {
        return Err(SimError::GwsMismatch {
            plan: plan.workload.gws(),
            kernel: kernel.gws,
        });
    }
    let mut seen = HashSet::new();
    for l in &plan.launches {
        if l.core_id >= device.cores() {
            return Err(SimError::CoreOutOfRange {
                core: l.core_id,
                cores: device.cores(),
            });
        }
        if l.warp_id >= device.warps_per_core() {
            return Err(SimError::WarpOutOfRange {
                warp: l.warp_id,
                warps: device.warps_per_core(),
            });
        }
        if l.iterations_per_thread.len() != device.threads_per_warp() as usize {
            return Err(SimError::LaneCountMismatch {
                core: l.core_id,
                warp: l.warp_id,
                lanes: l.iterations_per_thread.len(),
                threads: device.threads_per_warp(),
            });
        }
        if l.thread_mask == 0 || l.thread_mask != l.mask_at_iteration(0) {
            return Err(SimError::BadMask {
                core: l.core_id,
                warp: l.warp_id,
                call: l.call_index,
            });
        }
        if !seen.insert((l.call_index, l.core_id, l.warp_id)) {
            return Err(SimError::DuplicateLaunch {
                core: l.core_id,
                warp: l.warp_id,
                call: l.call_index,
            });
        }
    }
    Ok(())
}

struct CoreOutcome {
    end: u64,
    issued: u64,
    lanes: u64,
}

#[allow(clippy::too_many_arguments)]
fn run_core(
    core: u32,
    call: u32,
    launches: &[&WarpLaunch],
    program: &Program,
    width: u32,
    start: u64,
    cap: u64,
    trace: Option<&mut Vec<TraceRecord>>,
) -> Result<CoreOutcome, SimError> {
    let mut warps: Vec<WarpState> = launches.iter().map(|l| WarpState::new(l, program, start)).collect();
    let n = warps.len();
    let mut trace = trace;
    let mut outcome = CoreOutcome {
        end: start,
        issued: 0,
        lanes: 0,
    };
    let mut last = n - 1;
    let mut cycle = start;
    let mut remaining = n;
    while remaining > 0 {
        if cycle > cap {
            return Err(SimError::CycleBudgetExceeded(cap));
        }
        let mut issued_now = 0;
        let from = last;
        for off in 1..=n {
            let idx = (from + off) % n;
            let w = &mut warps[idx];
            if w.done() || w.busy_until > cycle {
                continue;
            }
            let (pc, mask) = w.next(program);
            let op = &program.ops[pc as usize];
            w.busy_until = cycle + op.latency;
            w.step += 1;
            outcome.end = outcome.end.max(w.busy_until);
            outcome.issued += 1;
            outcome.lanes += u64::from(mask.count_ones());
            if w.done() {
                remaining -= 1;
            }
            if let Some(records) = trace.as_deref_mut() {
                records.push(TraceRecord {
                    cycle,
                    core_id: core,
                    warp_id: w.launch.warp_id,
                    call_index: call,
                    pc,
                    thread_mask: mask,
                    section: op.section.clone(),
                    instr_class: op.class,
                });
            }
            last = idx;
            issued_now += 1;
            if issued_now == width {
                break;
            }
        }
        let next_ready = warps
            .iter()
            .filter(|w| !w.done())
            .map(|w| w.busy_until)
            .min()
            .unwrap_or(cycle + 1);
        cycle = next_ready.max(cycle + 1);
    }
    Ok(outcome)
}

/// Runs `plan` on `device` with a cycle budget of [`DEFAULT_CYCLE_CAP`].
pub fn simulate(
    device: &DeviceConfig,
    kernel: &KernelInstance,
    plan: &LaunchPlan,
    latency: &LatencyModel,
    trace_enabled: bool,
) -> Result<SimResult, SimError> {
    simulate_with_cap(device, kernel, plan, latency, trace_enabled, DEFAULT_CYCLE_CAP)
}

pub fn simulate_with_cap(
    device: &DeviceConfig,
    kernel: &KernelInstance,
    plan: &LaunchPlan,
    latency: &LatencyModel,
    trace_enabled: bool,
    cycle_cap: u64,
) -> Result<SimResult, SimError> {
    latency.validate()?;
    validate_plan(device, kernel, plan)?;
    let program = Program::new(kernel, latency);

    let mut trace = Vec::new();
    let mut per_call_cycles = Vec::with_capacity(plan.kernel_calls as usize);
    let mut issued = 0u64;
    let mut lanes = 0u64;
    let mut call_start = 0u64;
    let mut total_cycles = 0u64;

    let mut rest = plan.launches.as_slice();
    for call in 0..plan.kernel_calls {
        let split = rest.partition_point(|l| l.call_index == call);
        let (in_call, tail) = rest.split_at(split);
        rest = tail;

        let mut call_end = call_start;
        let mut cursor = in_call;
        while let Some(first) = cursor.first() {
            let core = first.core_id;
            let len = cursor.partition_point(|l| l.core_id == core);
            let (on_core, tail) = cursor.split_at(len);
            cursor = tail;
            let launches: Vec<&WarpLaunch> = on_core.iter().collect();
            let outcome = run_core(
                core,
                call,
                &launches,
                &program,
                latency.issue_width_per_core,
                call_start,
                cycle_cap,
                trace_enabled.then_some(&mut trace),
            )?;
            call_end = call_end.max(outcome.end);
            issued += outcome.issued;
            lanes += outcome.lanes;
        }
        if call_end > cycle_cap {
            return Err(SimError::CycleBudgetExceeded(cycle_cap));
        }
        per_call_cycles.push(call_end - call_start);
        total_cycles = call_end;
        call_start = call_end + latency.call_overhead_cycles;
    }
    trace.sort_unstable_by_key(|r| (r.cycle, r.core_id, r.warp_id));

    let capacity = total_cycles as f64 * hardware_parallelism(device) as f64 * f64::from(latency.issue_width_per_core);
    let utilization = if capacity > 0.0 { lanes as f64 / capacity } else { 0.0 };

    Ok(SimResult {
        total_cycles,
        trace,
        per_call_cycles,
        utilization,
        issued_instructions: issued,
        lane_instructions: lanes,
    })
}
