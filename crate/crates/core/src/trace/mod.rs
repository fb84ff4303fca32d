//! Instruction-issue traces: on-disk format, parsing and metrics.
//!
//! The format is line-oriented text:
//!
//! ```text
//! # simtmap-trace v1
//! cycle,core,warp,call,pc,0b<mask>,<section>,<class>
//! ```
//!
//! Records are written in `(cycle, core, warp)` order. Readers ignore any
//! fields after the eighth.

mod timeline;

use std::collections::{BTreeMap, HashSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::device::{DeviceConfig, MappingScenario, Workload};
use crate::kernels::{InstrClass, Section};

pub use timeline::{render_timeline, render_timelines, TimelinePanel};

pub const TRACE_HEADER: &str = "# simtmap-trace v1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line 1: missing header {TRACE_HEADER:?}")]
    MissingHeader,
    #[error("line {line}: field {field}: {message}")]
    Malformed {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("empty trace")]
    Empty,
}

/// One instruction issue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub cycle: u64,
    pub core_id: u32,
    pub warp_id: u32,
    pub call_index: u32,
    pub pc: u32,
    pub thread_mask: u64,
    pub section: Section,
    pub instr_class: InstrClass,
}

impl TraceRecord {
    fn sort_key(&self) -> (u64, u32, u32) {
        (self.cycle, self.core_id, self.warp_id)
    }
}

/// Writes `records` in canonical order and returns the number of bytes written.
pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<usize> {
    let mut ordered: Vec<&TraceRecord> = records.iter().collect();
    if !records.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key()) {
        ordered.sort_by_key(|r| r.sort_key());
    }
    let mut buf = String::with_capacity(32 * (records.len() + 1));
    buf.push_str(TRACE_HEADER);
    buf.push('\n');
    for r in ordered {
        use std::fmt::Write as _;
        let _ = writeln!(
            buf,
            "{},{},{},{},{},0b{:b},{},{}",
            r.cycle, r.core_id, r.warp_id, r.call_index, r.pc, r.thread_mask, r.section, r.instr_class
        );
    }
    out.write_all(buf.as_bytes())?;
    out.flush()?;
    Ok(buf.len())
}

pub fn trace_to_string(records: &[TraceRecord]) -> String {
    let mut out = Vec::new();
    write_trace(records, &mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("trace text is ASCII")
}

const FIELDS: [&str; 8] = ["cycle", "core", "warp", "call", "pc", "mask", "section", "class"];

fn parse_line(line: &str, line_no: usize) -> Result<TraceRecord, TraceError> {
    let mut parts = line.split(',');
    let mut next = |idx: usize| {
        parts.next().ok_or(TraceError::Malformed {
            line: line_no,
            field: FIELDS[idx],
            message: "missing".into(),
        })
    };
    let raw: [&str; 8] = [
        next(0)?,
        next(1)?,
        next(2)?,
        next(3)?,
        next(4)?,
        next(5)?,
        next(6)?,
        next(7)?,
    ];
    let bad = |idx: usize, message: String| TraceError::Malformed {
        line: line_no,
        field: FIELDS[idx],
        message,
    };
    fn int<T: std::str::FromStr>(s: &str) -> Result<T, String> {
        s.trim().parse().map_err(|_| format!("expected an integer, got {s:?}"))
    }
    let mask_text = raw[5].trim();
    let digits = mask_text
        .strip_prefix("0b")
        .ok_or_else(|| bad(5, format!("expected 0b<binary>, got {mask_text:?}")))?;
    if digits.is_empty() || digits.len() > 64 {
        return Err(bad(5, format!("expected 1..=64 binary digits, got {mask_text:?}")));
    }
    let thread_mask = u64::from_str_radix(digits, 2).map_err(|_| bad(5, format!("not binary: {mask_text:?}")))?;
    if thread_mask == 0 {
        return Err(bad(5, "mask has no active lanes".into()));
    }
    Ok(TraceRecord {
        cycle: int(raw[0]).map_err(|m| bad(0, m))?,
        core_id: int(raw[1]).map_err(|m| bad(1, m))?,
        warp_id: int(raw[2]).map_err(|m| bad(2, m))?,
        call_index: int(raw[3]).map_err(|m| bad(3, m))?,
        pc: int(raw[4]).map_err(|m| bad(4, m))?,
        thread_mask,
        section: raw[6].trim().parse().map_err(|m| bad(6, m))?,
        instr_class: raw[7].trim().parse().map_err(|m| bad(7, m))?,
    })
}

/// Inverse of [`write_trace`].
pub fn parse_trace<R: BufRead>(source: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut lines = source.lines();
    match lines.next() {
        Some(Ok(first)) if first.trim_end() == TRACE_HEADER => {}
        Some(Err(e)) => return Err(e.into()),
        _ => return Err(TraceError::MissingHeader),
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_line(&line, idx + 2)?);
    }
    Ok(records)
}

pub fn parse_trace_str(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    parse_trace(text.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetrics {
    /// Issue span: last issue cycle + 1.
    pub total_cycles: u64,
    pub kernel_calls: u32,
    /// Issues per `(core, warp)`.
    pub issues_per_warp: BTreeMap<(u32, u32), u64>,
    /// Mean active lanes over body records.
    pub mean_active_lanes: f64,
    /// Lane-instructions over `span × hp × observed issue width`.
    pub utilization: f64,
    pub section_cycle_histogram: BTreeMap<Section, u64>,
    pub inferred_scenario: MappingScenario,
}

/// Derives utilization and mapping numbers from a single run's trace.
///
/// The scenario is read off the trace alone: more than one call means
/// multiple calls; a single call in which every lane of every warp of every
/// core ran exactly `lws` body iterations is a full call; anything else is an
/// underutilized call.
pub fn compute_metrics(
    records: &[TraceRecord],
    device: &DeviceConfig,
    workload: &Workload,
) -> Result<TraceMetrics, TraceError> {
    let last = records.iter().map(|r| r.cycle).max().ok_or(TraceError::Empty)?;
    let total_cycles = last + 1;
    let kernel_calls = records.iter().map(|r| r.call_index).max().unwrap_or(0) + 1;

    let mut issues_per_warp = BTreeMap::new();
    let mut section_cycle_histogram = BTreeMap::new();
    let mut per_slot: BTreeMap<(u32, u64), u64> = BTreeMap::new();
    let mut lane_instructions = 0u64;
    let mut body_pcs = HashSet::new();
    let mut body_records = 0u64;
    let mut body_lanes = 0u64;
    // (core, warp, lane) -> body lane-instructions
    let mut lane_body: BTreeMap<(u32, u32, u32), u64> = BTreeMap::new();

    for r in records {
        *issues_per_warp.entry((r.core_id, r.warp_id)).or_insert(0) += 1;
        *section_cycle_histogram.entry(r.section.clone()).or_insert(0) += 1;
        *per_slot.entry((r.core_id, r.cycle)).or_insert(0) += 1;
        let active = u64::from(r.thread_mask.count_ones());
        lane_instructions += active;
        if r.section.is_body() {
            body_pcs.insert(r.pc);
            body_records += 1;
            body_lanes += active;
            let mut mask = r.thread_mask;
            while mask != 0 {
                let lane = mask.trailing_zeros();
                *lane_body.entry((r.core_id, r.warp_id, lane)).or_insert(0) += 1;
                mask &= mask - 1;
            }
        }
    }

    let width = per_slot.values().copied().max().unwrap_or(1);
    let hp = crate::device::hardware_parallelism(device);
    let utilization = lane_instructions as f64 / (total_cycles as f64 * hp as f64 * width as f64);
    let mean_active_lanes = if body_records == 0 {
        0.0
    } else {
        body_lanes as f64 / body_records as f64
    };

    let inferred_scenario = if kernel_calls > 1 {
        MappingScenario::MultipleCalls
    } else {
        let body_len = body_pcs.len() as u64;
        let expected = body_len * workload.lws();
        let in_device = lane_body.keys().all(|&(core, warp, lane)| {
            core < device.cores() && warp < device.warps_per_core() && lane < device.threads_per_warp()
        });
        let all_lanes = in_device && lane_body.len() as u64 == hp;
        if body_len > 0 && all_lanes && lane_body.values().all(|&n| n == expected) {
            MappingScenario::SingleCallFull
        } else {
            MappingScenario::SingleCallUnderutilized
        }
    };

    Ok(TraceMetrics {
        total_cycles,
        kernel_calls,
        issues_per_warp,
        mean_active_lanes,
        utilization,
        section_cycle_histogram,
        inferred_scenario,
    })
}

impl TraceMetrics {
    /// One-line `key=value` summary.
    pub fn summary_line(&self) -> String {
        format!(
            "calls={} scenario={} cycles={} warps={} mean_active_lanes={:.3} utilization={:.4}",
            self.kernel_calls,
            self.inferred_scenario,
            self.total_cycles,
            self.issues_per_warp.len(),
            self.mean_active_lanes,
            self.utilization
        )
    }
}
