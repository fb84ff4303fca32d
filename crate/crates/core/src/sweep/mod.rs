//! Design-space sweep: kernels × device configurations × mapping strategies.
//!
//! Every combination is mapped, simulated without tracing, and compared
//! against the hardware-aware mapping of the same kernel on the same device.
//! Results are reported per combination and summarized per
//! `(kernel, strategy)` as mean ratio, worst ratio and fraction of ratios
//! below 1.

mod plot;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{classify_scenario, hardware_parallelism, DeviceConfig, MappingScenario, Workload};
use crate::kernels::{load_kernel_file, lookup, KernelDescriptor, KernelInstance, ProblemSize};
use crate::mapper::{distribute, optimal_lws};
use crate::sim::{simulate, LatencyModel};

pub use plot::render_distribution;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("strategy list must include optimal (it is the ratio denominator)")]
    MissingOptimal,
    #[error("sweep grid is empty: {0}")]
    EmptyGrid(&'static str),
    #[error("invalid device in grid: {0}")]
    Device(#[from] crate::device::DeviceError),
    #[error("unknown kernel {0:?}")]
    UnknownKernel(String),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
    #[error("unknown preset {0:?} (available: desk, full)")]
    UnknownPreset(String),
    #[error("grid file: {0}")]
    GridFile(String),
    #[error("report has no ratios to plot")]
    NothingToPlot,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MappingStrategy {
    /// `lws = ceil(gws / hp)`.
    Optimal,
    /// `lws = 1`.
    Naive,
    /// Constant `lws`, clamped to `gws`.
    Fixed(u64),
}

impl MappingStrategy {
    pub const DEFAULT_FIXED: u64 = 32;

    pub fn lws_for(&self, gws: u64, device: &DeviceConfig) -> u64 {
        match *self {
            MappingStrategy::Optimal => optimal_lws(gws, hardware_parallelism(device)),
            MappingStrategy::Naive => 1,
            MappingStrategy::Fixed(k) => k.min(gws),
        }
    }
}

impl fmt::Display for MappingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MappingStrategy::Optimal => f.pad("optimal"),
            MappingStrategy::Naive => f.pad("naive"),
            MappingStrategy::Fixed(k) => f.pad(&format!("fixed{k}")),
        }
    }
}

impl FromStr for MappingStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "optimal" => Ok(MappingStrategy::Optimal),
            "naive" => Ok(MappingStrategy::Naive),
            "fixed" => Ok(MappingStrategy::Fixed(Self::DEFAULT_FIXED)),
            other => {
                let k = other
                    .strip_prefix("fixed")
                    .and_then(|k| k.parse::<u64>().ok())
                    .ok_or_else(|| format!("unknown strategy {other:?} (expected optimal, naive, fixed<k>)"))?;
                if k == 0 {
                    return Err("fixed lws must be >= 1".into());
                }
                Ok(MappingStrategy::Fixed(k))
            }
        }
    }
}

impl Serialize for MappingStrategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MappingStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone)]
pub struct KernelCase {
    pub kernel: KernelDescriptor,
    pub size: ProblemSize,
}

impl KernelCase {
    pub fn builtin(name: &str, size: ProblemSize) -> Result<Self, SweepError> {
        let kernel = lookup(name).ok_or_else(|| SweepError::UnknownKernel(name.to_string()))?;
        Ok(Self { kernel, size })
    }
}

#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub cores: Vec<u32>,
    pub warps: Vec<u32>,
    pub threads: Vec<u32>,
    pub kernels: Vec<KernelCase>,
    pub latency: LatencyModel,
}

fn builtin_cases(sizes: &[(&str, ProblemSize)]) -> Vec<KernelCase> {
    sizes
        .iter()
        .map(|(name, size)| KernelCase::builtin(name, *size).expect("builtin kernel"))
        .collect()
}

impl SweepGrid {
    /// 27 configurations: cores ∈ {1,2,4}, warps and threads ∈ {2,4,8}.
    pub fn desk() -> Self {
        Self {
            cores: vec![1, 2, 4],
            warps: vec![2, 4, 8],
            threads: vec![2, 4, 8],
            kernels: builtin_cases(&[
                ("vecadd", ProblemSize::n(1024)),
                ("saxpy", ProblemSize::n(1024)),
                ("sgemm-tile", ProblemSize::mnk(32, 32, 16)),
                ("gaussian-blur-1d", ProblemSize::n(1024)),
                ("nearest-neighbor", ProblemSize::n(1024)),
                (
                    "gcn-aggregate",
                    ProblemSize {
                        n: 512,
                        m: None,
                        k: Some(4),
                    },
                ),
                ("dnn-dense-layer", ProblemSize::mnk(64, 8, 16)),
            ]),
            latency: LatencyModel::default(),
        }
    }

    /// 175 configurations from 1c2w2t to 64c32w32t.
    pub fn full() -> Self {
        Self {
            cores: vec![1, 2, 4, 8, 16, 32, 64],
            warps: vec![2, 4, 8, 16, 32],
            threads: vec![2, 4, 8, 16, 32],
            kernels: builtin_cases(&[
                ("vecadd", ProblemSize::n(16384)),
                ("saxpy", ProblemSize::n(16384)),
                ("sgemm-tile", ProblemSize::mnk(128, 128, 16)),
                ("gaussian-blur-1d", ProblemSize::n(16384)),
                ("nearest-neighbor", ProblemSize::n(16384)),
                (
                    "gcn-aggregate",
                    ProblemSize {
                        n: 8192,
                        m: None,
                        k: Some(4),
                    },
                ),
                ("dnn-dense-layer", ProblemSize::mnk(256, 32, 16)),
            ]),
            latency: LatencyModel::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self, SweepError> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            other => Err(SweepError::UnknownPreset(other.to_string())),
        }
    }

    pub fn devices(&self) -> Result<Vec<DeviceConfig>, SweepError> {
        let mut out = Vec::with_capacity(self.cores.len() * self.warps.len() * self.threads.len());
        for &c in &self.cores {
            for &w in &self.warps {
                for &t in &self.threads {
                    out.push(DeviceConfig::new(c, w, t)?);
                }
            }
        }
        Ok(out)
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.cores.is_empty() {
            return Err(SweepError::EmptyGrid("no core counts"));
        }
        if self.warps.is_empty() {
            return Err(SweepError::EmptyGrid("no warp counts"));
        }
        if self.threads.is_empty() {
            return Err(SweepError::EmptyGrid("no thread counts"));
        }
        if self.kernels.is_empty() {
            return Err(SweepError::EmptyGrid("no kernels"));
        }
        self.devices()?;
        Ok(())
    }

    /// Reads a TOML grid description:
    ///
    /// ```toml
    /// cores = [1, 2]
    /// warps = [2, 4]
    /// threads = [4]
    ///
    /// [[kernels]]
    /// name = "vecadd"
    /// n = 256
    ///
    /// [[kernels]]
    /// file = "my.kernel"   # relative to the grid file
    /// n = 128
    ///
    /// [latency]
    /// load_cycles = 30
    /// ```
    pub fn from_toml_file(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self, SweepError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct KernelEntry {
            name: Option<String>,
            file: Option<String>,
            n: u64,
            m: Option<u64>,
            k: Option<u64>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct GridFile {
            cores: Vec<u32>,
            warps: Vec<u32>,
            threads: Vec<u32>,
            kernels: Vec<KernelEntry>,
            #[serde(default)]
            latency: LatencyModel,
        }
        let file: GridFile = toml::from_str(text).map_err(|e| SweepError::GridFile(e.to_string()))?;
        let mut kernels = Vec::new();
        for entry in file.kernels {
            let size = ProblemSize {
                n: entry.n,
                m: entry.m,
                k: entry.k,
            };
            let case = match (entry.name, entry.file) {
                (Some(name), None) => KernelCase::builtin(&name, size)?,
                (None, Some(file)) => KernelCase {
                    kernel: load_kernel_file(&base.join(file))?,
                    size,
                },
                _ => {
                    return Err(SweepError::GridFile(
                        "each kernel needs exactly one of name or file".into(),
                    ))
                }
            };
            kernels.push(case);
        }
        file.latency
            .validate()
            .map_err(|e| SweepError::GridFile(e.to_string()))?;
        let grid = Self {
            cores: file.cores,
            warps: file.warps,
            threads: file.threads,
            kernels,
            latency: file.latency,
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub lws: u64,
    pub total_cycles: u64,
    pub kernel_calls: u32,
    pub scenario: MappingScenario,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub kernel: String,
    pub problem: ProblemSize,
    pub device: DeviceConfig,
    pub strategy: MappingStrategy,
    pub gws: Option<u64>,
    pub result: Option<RunSummary>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEntry {
    pub kernel: String,
    pub problem: ProblemSize,
    pub device: DeviceConfig,
    pub strategy: MappingStrategy,
    /// `cycles(strategy) / cycles(optimal)` on the same kernel and device.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyStats {
    pub kernel: String,
    pub problem: ProblemSize,
    pub strategy: MappingStrategy,
    pub count: usize,
    pub mean: f64,
    pub worst: f64,
    /// Fraction of ratios strictly below 1, in `[0, 1]`.
    pub fraction_below_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub latency: LatencyModel,
    pub rows: Vec<SweepRow>,
    pub ratios: Vec<RatioEntry>,
    pub stats: Vec<StrategyStats>,
}

fn run_one(
    kernel: &KernelInstance,
    device: &DeviceConfig,
    strategy: MappingStrategy,
    latency: &LatencyModel,
) -> Result<RunSummary, String> {
    let lws = strategy.lws_for(kernel.gws, device);
    let workload = Workload::new(kernel.gws, lws).map_err(|e| e.to_string())?;
    let plan = distribute(&workload, device);
    let result = simulate(device, kernel, &plan, latency, false).map_err(|e| e.to_string())?;
    Ok(RunSummary {
        lws,
        total_cycles: result.total_cycles,
        kernel_calls: plan.kernel_calls,
        scenario: classify_scenario(&workload, device),
    })
}

/// Runs every combination, in parallel, and assembles the report in input
/// order: kernel-major, then device, then strategy.
pub fn run_sweep(grid: &SweepGrid, strategies: &[MappingStrategy]) -> Result<SweepReport, SweepError> {
    if !strategies.contains(&MappingStrategy::Optimal) {
        return Err(SweepError::MissingOptimal);
    }
    grid.validate()?;
    let devices = grid.devices()?;
    let mut unique = Vec::new();
    for s in strategies {
        if !unique.contains(s) {
            unique.push(*s);
        }
    }
    let instances: Vec<Result<KernelInstance, String>> = grid
        .kernels
        .iter()
        .map(|case| case.kernel.instantiate(&case.size).map_err(|e| e.to_string()))
        .collect();

    let unique = &unique;
    let devices_ref = &devices;
    let combos: Vec<(usize, &DeviceConfig, MappingStrategy)> = (0..grid.kernels.len())
        .flat_map(|k| {
            devices_ref
                .iter()
                .flat_map(move |d| unique.iter().map(move |s| (k, d, *s)))
        })
        .collect();

    let rows: Vec<SweepRow> = combos
        .par_iter()
        .map(|&(k, device, strategy)| {
            let case = &grid.kernels[k];
            let (gws, outcome) = match &instances[k] {
                Ok(inst) => (Some(inst.gws), run_one(inst, device, strategy, &grid.latency)),
                Err(e) => (None, Err(e.clone())),
            };
            let (result, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e)),
            };
            SweepRow {
                kernel: case.kernel.name().to_string(),
                problem: case.size,
                device: *device,
                strategy,
                gws,
                result,
                error,
            }
        })
        .collect();

    let ratios = ratios_from_rows(&rows, unique.len());
    let stats = summarize_ratios(&ratios);
    Ok(SweepReport {
        latency: grid.latency.clone(),
        rows,
        ratios,
        stats,
    })
}

/// Rows arrive in groups of `per_group` strategies sharing one
/// `(kernel, device)`; each group's optimal row is the denominator.
fn ratios_from_rows(rows: &[SweepRow], per_group: usize) -> Vec<RatioEntry> {
    let mut ratios = Vec::new();
    for group in rows.chunks(per_group) {
        let Some(base) = group
            .iter()
            .find(|r| r.strategy == MappingStrategy::Optimal)
            .and_then(|r| r.result.as_ref())
        else {
            continue;
        };
        for row in group.iter().filter(|r| r.strategy != MappingStrategy::Optimal) {
            if let Some(res) = &row.result {
                ratios.push(RatioEntry {
                    kernel: row.kernel.clone(),
                    problem: row.problem,
                    device: row.device,
                    strategy: row.strategy,
                    ratio: res.total_cycles as f64 / base.total_cycles as f64,
                });
            }
        }
    }
    ratios
}

fn summarize_ratios(ratios: &[RatioEntry]) -> Vec<StrategyStats> {
    let mut stats: Vec<StrategyStats> = Vec::new();
    let mut below: Vec<usize> = Vec::new();
    for r in ratios {
        let idx = stats
            .iter()
            .position(|s| s.kernel == r.kernel && s.problem == r.problem && s.strategy == r.strategy);
        let idx = match idx {
            Some(i) => i,
            None => {
                stats.push(StrategyStats {
                    kernel: r.kernel.clone(),
                    problem: r.problem,
                    strategy: r.strategy,
                    count: 0,
                    mean: 0.0,
                    worst: f64::NEG_INFINITY,
                    fraction_below_one: 0.0,
                });
                below.push(0);
                stats.len() - 1
            }
        };
        let s = &mut stats[idx];
        s.count += 1;
        s.mean += r.ratio;
        s.worst = s.worst.max(r.ratio);
        below[idx] += usize::from(r.ratio < 1.0);
    }
    for (s, below) in stats.iter_mut().zip(below) {
        s.mean /= s.count as f64;
        s.fraction_below_one = below as f64 / s.count as f64;
    }
    stats
}

/// Mean, worst and share of ratios below 1 for each `(kernel, strategy)`.
pub fn summarize(report: &SweepReport) -> StatsTable {
    StatsTable {
        stats: summarize_ratios(&report.ratios),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsTable {
    pub stats: Vec<StrategyStats>,
}

impl StatsTable {
    pub fn get(&self, kernel: &str, strategy: MappingStrategy) -> Option<&StrategyStats> {
        self.stats.iter().find(|s| s.kernel == kernel && s.strategy == strategy)
    }

    pub const COLUMNS: [&'static str; 6] = ["kernel", "strategy", "mean", "worst", "below_one_pct", "count"];
}

impl fmt::Display for StatsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:<10} {:>8} {:>8} {:>13} {:>6}",
            "kernel", "strategy", "mean", "worst", "below_one_pct", "count"
        )?;
        for s in &self.stats {
            writeln!(
                f,
                "{:<18} {:<10} {:>8.3} {:>8.3} {:>12.1}% {:>6}",
                s.kernel,
                s.strategy.to_string(),
                s.mean,
                s.worst,
                100.0 * s.fraction_below_one,
                s.count
            )?;
        }
        Ok(())
    }
}

/// CSV column order.
pub const CSV_COLUMNS: [&str; 12] = [
    "kernel",
    "problem",
    "device",
    "strategy",
    "gws",
    "lws",
    "total_cycles",
    "kernel_calls",
    "scenario",
    "ratio",
    "error",
    "hp",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    kernel: &'a str,
    problem: String,
    device: String,
    strategy: String,
    gws: Option<u64>,
    lws: Option<u64>,
    total_cycles: Option<u64>,
    kernel_calls: Option<u32>,
    scenario: Option<&'static str>,
    ratio: Option<f64>,
    error: Option<&'a str>,
    hp: u64,
}

impl SweepReport {
    pub fn ratio_of(&self, kernel: &str, device: &DeviceConfig, strategy: MappingStrategy) -> Option<f64> {
        self.ratios
            .iter()
            .find(|r| r.kernel == kernel && r.device == *device && r.strategy == strategy)
            .map(|r| r.ratio)
    }

    /// One row per combination; columns as in [`CSV_COLUMNS`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SweepError> {
        let mut writer = csv::Writer::from_writer(out);
        for row in &self.rows {
            let ratio = self
                .ratios
                .iter()
                .find(|r| {
                    r.kernel == row.kernel
                        && r.problem == row.problem
                        && r.device == row.device
                        && r.strategy == row.strategy
                })
                .map(|r| r.ratio)
                .or_else(|| (row.strategy == MappingStrategy::Optimal && row.result.is_some()).then_some(1.0));
            writer.serialize(CsvRow {
                kernel: &row.kernel,
                problem: row.problem.to_string(),
                device: row.device.to_string(),
                strategy: row.strategy.to_string(),
                gws: row.gws,
                lws: row.result.as_ref().map(|r| r.lws),
                total_cycles: row.result.as_ref().map(|r| r.total_cycles),
                kernel_calls: row.result.as_ref().map(|r| r.kernel_calls),
                scenario: row.result.as_ref().map(|r| r.scenario.as_str()),
                ratio,
                error: row.error.as_deref(),
                hp: hardware_parallelism(&row.device),
            })?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), SweepError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_config_grid(device: &str, kernel: &str, size: ProblemSize) -> SweepGrid {
        let d: DeviceConfig = device.parse().unwrap();
        SweepGrid {
            cores: vec![d.cores()],
            warps: vec![d.warps_per_core()],
            threads: vec![d.threads_per_warp()],
            kernels: vec![KernelCase::builtin(kernel, size).unwrap()],
            latency: LatencyModel::default(),
        }
    }

    const FIG2: [MappingStrategy; 3] = [
        MappingStrategy::Optimal,
        MappingStrategy::Naive,
        MappingStrategy::Fixed(32),
    ];

    #[test]
    fn strategy_names() {
        for s in ["optimal", "naive", "fixed32", "fixed7"] {
            assert_eq!(s.parse::<MappingStrategy>().unwrap().to_string(), s);
        }
        assert_eq!("fixed".parse::<MappingStrategy>().unwrap(), MappingStrategy::Fixed(32));
        assert!("fixed0".parse::<MappingStrategy>().is_err());
        assert!("greedy".parse::<MappingStrategy>().is_err());
    }

    #[test]
    fn fixed_is_clamped_to_gws() {
        let d: DeviceConfig = "1c2w4t".parse().unwrap();
        assert_eq!(MappingStrategy::Fixed(32).lws_for(8, &d), 8);
        assert_eq!(MappingStrategy::Fixed(32).lws_for(128, &d), 32);
        assert_eq!(MappingStrategy::Optimal.lws_for(128, &d), 16);
    }

    #[test]
    fn vecadd_single_config() {
        let grid = one_config_grid("1c2w4t", "vecadd", ProblemSize::n(128));
        let report = run_sweep(&grid, &FIG2).unwrap();
        assert_eq!(report.rows.len(), 3);
        let d: DeviceConfig = "1c2w4t".parse().unwrap();
        assert!(report.ratio_of("vecadd", &d, MappingStrategy::Naive).unwrap() > 1.0);
        assert!(report.ratio_of("vecadd", &d, MappingStrategy::Fixed(32)).unwrap() > 1.0);
    }

    #[test]
    fn naive_equals_optimal_when_hp_exceeds_gws() {
        let grid = SweepGrid {
            cores: vec![2, 4],
            warps: vec![4],
            threads: vec![8],
            kernels: vec![KernelCase::builtin("vecadd", ProblemSize::n(32)).unwrap()],
            latency: LatencyModel::default(),
        };
        let report = run_sweep(&grid, &FIG2).unwrap();
        for r in report.ratios.iter().filter(|r| r.strategy == MappingStrategy::Naive) {
            assert_eq!(r.ratio, 1.0);
        }
        for pair in report.rows.chunks(3) {
            assert_eq!(pair[0].result, pair[1].result);
        }
    }

    #[test]
    fn optimal_only_gives_rows_without_ratios() {
        let grid = one_config_grid("1c2w4t", "vecadd", ProblemSize::n(128));
        let report = run_sweep(&grid, &[MappingStrategy::Optimal]).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.ratios.is_empty());
        assert!(report.stats.is_empty());
    }

    #[test]
    fn optimal_is_required() {
        let grid = one_config_grid("1c2w4t", "vecadd", ProblemSize::n(128));
        assert!(matches!(
            run_sweep(&grid, &[MappingStrategy::Naive]),
            Err(SweepError::MissingOptimal)
        ));
    }

    #[test]
    fn failures_become_error_rows() {
        let grid = one_config_grid("1c2w4t", "vecadd", ProblemSize::n(0));
        let report = run_sweep(&grid, &FIG2).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows.iter().all(|r| r.error.is_some() && r.result.is_none()));
        assert!(report.ratios.is_empty());
    }

    fn entry(ratio: f64) -> RatioEntry {
        RatioEntry {
            kernel: "k".into(),
            problem: ProblemSize::n(1),
            device: "1c1w1t".parse().unwrap(),
            strategy: MappingStrategy::Naive,
            ratio,
        }
    }

    #[test]
    fn stats_arithmetic() {
        let s = &summarize_ratios(&[entry(2.0)])[0];
        assert_eq!((s.mean, s.worst, s.fraction_below_one), (2.0, 2.0, 0.0));
        let s = &summarize_ratios(&[entry(0.5), entry(1.5)])[0];
        assert_eq!((s.mean, s.worst, s.fraction_below_one), (1.0, 1.5, 0.5));
    }

    #[test]
    fn csv_has_documented_columns() {
        let grid = one_config_grid("1c2w4t", "vecadd", ProblemSize::n(128));
        let report = run_sweep(&grid, &FIG2).unwrap();
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let first = lines.next().unwrap();
        assert!(first.starts_with("vecadd,n=128,1c2w4t,optimal,128,16,"), "{first}");
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn json_mirrors_report() {
        let grid = one_config_grid("1c2w4t", "vecadd", ProblemSize::n(128));
        let report = run_sweep(&grid, &FIG2).unwrap();
        let mut out = Vec::new();
        report.write_json(&mut out).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(value["rows"].as_array().unwrap().len(), 3);
        assert_eq!(value["rows"][0]["device"], "1c2w4t");
        assert_eq!(value["rows"][0]["result"]["scenario"], "single-call-full");
        assert_eq!(value["stats"][0]["strategy"], "naive");
    }

    #[test]
    fn toml_grid() {
        let text = r#"
cores = [1, 2]
warps = [2]
threads = [4]

[[kernels]]
name = "vecadd"
n = 64

[latency]
load_cycles = 30
"#;
        let grid = SweepGrid::from_toml_str(text, Path::new(".")).unwrap();
        assert_eq!(grid.devices().unwrap().len(), 2);
        assert_eq!(grid.latency.load_cycles, 30);
        assert_eq!(grid.latency.alu_cycles, 1);
        assert!(SweepGrid::from_toml_str("cores = []\nwarps=[1]\nthreads=[1]\nkernels=[]", Path::new(".")).is_err());
        let bad_kernel = "cores=[1]\nwarps=[1]\nthreads=[1]\n[[kernels]]\nname=\"nope\"\nn=4\n";
        assert!(matches!(
            SweepGrid::from_toml_str(bad_kernel, Path::new(".")),
            Err(SweepError::UnknownKernel(_))
        ));
    }

    #[test]
    fn presets() {
        assert_eq!(SweepGrid::desk().devices().unwrap().len(), 27);
        assert_eq!(SweepGrid::full().devices().unwrap().len(), 175);
        assert!(matches!(SweepGrid::preset("huge"), Err(SweepError::UnknownPreset(_))));
    }
}
