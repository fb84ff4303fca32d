//! Command-line front end.
//!
//! ```text
//! simtmap run    --device 1c2w4t --kernel vecadd --n 128 --strategy optimal [--trace] [--timeline]
//! simtmap trace  run.trace --device 1c2w4t --lws 1 [--kernel vecadd --n 128] [--timeline]
//! simtmap sweep  --preset desk --strategies naive,fixed32
//! simtmap kernels list
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 simulation error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::device::{classify_scenario, DeviceConfig, Workload};
use crate::kernels::{
    builtin_catalog, load_kernel_file, lookup, KernelDescriptor, KernelError, ProblemSize, SectionMap,
};
use crate::mapper::distribute;
use crate::sim::{simulate, LatencyModel};
use crate::sweep::{render_distribution, run_sweep, summarize, MappingStrategy, SweepError, SweepGrid};
use crate::trace::{compute_metrics, parse_trace, render_timeline, write_trace, TraceError, TraceRecord};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SIM: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Simulation(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Simulation(_) => EXIT_SIM,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Simulation(m) => m,
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::UnknownPreset(_) | SweepError::UnknownKernel(_) | SweepError::MissingOptimal => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "simtmap",
    version,
    about = "Work-size mapping and SIMT execution model for small RISC-V GPGPUs"
)]
pub struct Cli {
    /// Directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    /// Format of machine-readable output written to stdout.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Reserved. The model is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the command's data artifact to stdout instead of a file.
    #[arg(long, global = true)]
    stdout: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map and simulate one kernel on one device.
    Run(RunArgs),
    /// Analyze a trace file.
    Trace(TraceArgs),
    /// Sweep kernels, devices and mapping strategies.
    Sweep(SweepArgs),
    /// Kernel catalog.
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
}

#[derive(Debug, Subcommand)]
enum KernelsAction {
    /// List builtin kernels.
    List,
}

#[derive(Debug, Args)]
struct KernelSource {
    /// Builtin kernel name.
    #[arg(long, conflicts_with = "kernel_file")]
    kernel: Option<String>,
    /// Kernel description file.
    #[arg(long)]
    kernel_file: Option<PathBuf>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
}

impl KernelSource {
    fn given(&self) -> bool {
        self.kernel.is_some() || self.kernel_file.is_some()
    }

    fn descriptor(&self) -> Result<KernelDescriptor, CliError> {
        match (&self.kernel, &self.kernel_file) {
            (Some(name), _) => lookup(name).ok_or_else(|| {
                let names: Vec<String> = builtin_catalog().iter().map(|k| k.name().to_string()).collect();
                CliError::Usage(format!(
                    "--kernel: unknown kernel {name:?} (available: {})",
                    names.join(", ")
                ))
            }),
            (None, Some(path)) => load_kernel_file(path).map_err(|e| CliError::Data(format!("--kernel-file: {e}"))),
            (None, None) => Err(CliError::Usage("one of --kernel or --kernel-file is required".into())),
        }
    }

    fn size(&self) -> ProblemSize {
        ProblemSize {
            n: self.n.unwrap_or(128),
            m: self.m,
            k: self.k,
        }
    }
}

fn kernel_error(e: KernelError) -> CliError {
    match e {
        KernelError::InvalidProblemSize { .. } | KernelError::Overflow { .. } => {
            CliError::Usage(format!("problem size: {e}"))
        }
        other => CliError::Data(other.to_string()),
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Device in <cores>c<warps>w<threads>t form.
    #[arg(long)]
    device: String,
    #[command(flatten)]
    source: KernelSource,
    /// optimal, naive or fixed<k>. Defaults to optimal.
    #[arg(long, conflicts_with = "lws")]
    strategy: Option<String>,
    /// Explicit local work size.
    #[arg(long)]
    lws: Option<u64>,
    /// Latency override, e.g. load=30. Repeatable.
    #[arg(long = "latency", value_name = "CLASS=VALUE")]
    latency: Vec<String>,
    /// Record and write the issue trace.
    #[arg(long)]
    trace: bool,
    /// Render the issue timeline as SVG.
    #[arg(long)]
    timeline: bool,
    /// Print the launch plan.
    #[arg(long)]
    plan: bool,
}

#[derive(Debug, Args)]
struct TraceArgs {
    /// Trace file.
    input: PathBuf,
    #[arg(long)]
    device: String,
    /// Local work size of the traced run.
    #[arg(long)]
    lws: u64,
    /// Global work size; inferred from body records when omitted.
    #[arg(long)]
    gws: Option<u64>,
    /// Section map source (optional).
    #[command(flatten)]
    source: KernelSource,
    #[arg(long)]
    timeline: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Grid preset: desk or full.
    #[arg(long, conflicts_with = "grid")]
    preset: Option<String>,
    /// TOML grid description.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Comma-separated strategies compared against optimal.
    #[arg(long, default_value = "naive,fixed32")]
    strategies: String,
    #[arg(long = "latency", value_name = "CLASS=VALUE")]
    latency: Vec<String>,
}

fn parse_device(text: &str) -> Result<DeviceConfig, CliError> {
    text.parse().map_err(|e| CliError::Usage(format!("--device: {e}")))
}

fn latency_model(base: LatencyModel, overrides: &[String]) -> Result<LatencyModel, CliError> {
    let mut model = base;
    for o in overrides {
        model
            .apply_override(o)
            .map_err(|e| CliError::Usage(format!("--latency: {e}")))?;
    }
    Ok(model)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    /// Human-readable lines go to stdout unless stdout carries data.
    fn human(&mut self, to_stdout: bool, line: &str) {
        if to_stdout {
            let _ = writeln!(self.out, "{line}");
        } else {
            let _ = writeln!(self.err, "{line}");
        }
    }
}

fn cmd_run(cli: &Cli, args: &RunArgs, io: &mut Io) -> Result<(), CliError> {
    let device = parse_device(&args.device)?;
    let descriptor = args.source.descriptor()?;
    let kernel = descriptor.instantiate(&args.source.size()).map_err(kernel_error)?;
    let latency = latency_model(LatencyModel::default(), &args.latency)?;

    let lws = match (args.lws, &args.strategy) {
        (Some(lws), _) => lws,
        (None, strategy) => {
            let strategy: MappingStrategy = strategy
                .as_deref()
                .unwrap_or("optimal")
                .parse()
                .map_err(|e| CliError::Usage(format!("--strategy: {e}")))?;
            strategy.lws_for(kernel.gws, &device)
        }
    };
    let workload = Workload::new(kernel.gws, lws).map_err(|e| CliError::Usage(format!("--lws: {e}")))?;
    let plan = distribute(&workload, &device);
    let want_trace = args.trace || args.timeline;
    let result =
        simulate(&device, &kernel, &plan, &latency, want_trace).map_err(|e| CliError::Simulation(e.to_string()))?;

    let summary = format!(
        "lws={} scenario={} calls={} cycles={} utilization={:.4}",
        lws,
        classify_scenario(&workload, &device),
        plan.kernel_calls,
        result.total_cycles,
        result.utilization
    );
    let human_on_stdout = !cli.stdout;
    io.human(
        human_on_stdout,
        &format!("kernel={} device={} gws={}", kernel.name, device, kernel.gws),
    );
    io.human(human_on_stdout, &summary);
    if args.plan {
        io.human(human_on_stdout, plan.to_text().trim_end());
    }

    let stem = format!("{}_{}_lws{}", kernel.name, device, lws);
    if cli.stdout {
        if args.trace {
            write_trace(&result.trace, &mut *io.out).map_err(|e| CliError::Data(e.to_string()))?;
        } else {
            write_run_record(
                cli.format,
                &kernel.name,
                &device,
                &workload,
                plan.kernel_calls,
                &result,
                io.out,
            )?;
        }
    } else if args.trace {
        ensure_dir(&cli.output_dir)?;
        let path = cli.output_dir.join(format!("{stem}.trace"));
        let file = fs::File::create(&path).map_err(|e| io_error(&path, e))?;
        write_trace(&result.trace, std::io::BufWriter::new(file)).map_err(|e| io_error(&path, e))?;
        let _ = writeln!(io.err, "wrote {}", path.display());
    }
    if args.timeline {
        ensure_dir(&cli.output_dir)?;
        let path = cli.output_dir.join(format!("{stem}.svg"));
        write_file(&path, render_timeline(&result.trace, &kernel.section_map).as_bytes())?;
        let _ = writeln!(io.err, "wrote {}", path.display());
    }
    Ok(())
}

fn write_run_record(
    format: OutputFormat,
    kernel: &str,
    device: &DeviceConfig,
    workload: &Workload,
    calls: u32,
    result: &crate::sim::SimResult,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let scenario = classify_scenario(workload, device);
    let written = match format {
        OutputFormat::Json => {
            let value = serde_json::json!({
                "kernel": kernel,
                "device": device,
                "gws": workload.gws(),
                "lws": workload.lws(),
                "scenario": scenario,
                "kernel_calls": calls,
                "total_cycles": result.total_cycles,
                "per_call_cycles": result.per_call_cycles,
                "utilization": result.utilization,
            });
            writeln!(out, "{value}")
        }
        OutputFormat::Csv => writeln!(
            out,
            "kernel,device,gws,lws,scenario,kernel_calls,total_cycles,utilization\n{},{},{},{},{},{},{},{}",
            kernel,
            device,
            workload.gws(),
            workload.lws(),
            scenario,
            calls,
            result.total_cycles,
            result.utilization
        ),
    };
    written.map_err(|e| CliError::Data(e.to_string()))
}

/// `gws` as body lane-instructions over body length.
fn infer_gws(records: &[TraceRecord]) -> Option<u64> {
    let mut pcs = std::collections::BTreeSet::new();
    let mut lanes = 0u64;
    for r in records.iter().filter(|r| r.section.is_body()) {
        pcs.insert(r.pc);
        lanes += u64::from(r.thread_mask.count_ones());
    }
    (!pcs.is_empty()).then(|| lanes / pcs.len() as u64)
}

fn cmd_trace(cli: &Cli, args: &TraceArgs, io: &mut Io) -> Result<(), CliError> {
    let device = parse_device(&args.device)?;
    let file = fs::File::open(&args.input).map_err(|e| io_error(&args.input, e))?;
    let records =
        parse_trace(BufReader::new(file)).map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    if records.is_empty() {
        return Err(CliError::Data(format!(
            "{}: {}",
            args.input.display(),
            TraceError::Empty
        )));
    }
    let section_map = if args.source.given() {
        let kernel = args
            .source
            .descriptor()?
            .instantiate(&args.source.size())
            .map_err(kernel_error)?;
        for (idx, r) in records.iter().enumerate() {
            if kernel.section_map.lookup(r.pc) != Some(&r.section) {
                return Err(CliError::Data(format!(
                    "{}: line {}: section {} does not match pc {} of kernel {}",
                    args.input.display(),
                    idx + 2,
                    r.section,
                    r.pc,
                    kernel.name
                )));
            }
        }
        kernel.section_map
    } else {
        SectionMap::from_entries(records.iter().map(|r| (r.pc, r.section.clone())))
    };
    let gws = match args.gws {
        Some(g) => g,
        None => infer_gws(&records)
            .ok_or_else(|| CliError::Usage("--gws: cannot infer from a trace without body records".into()))?,
    };
    let workload = Workload::new(gws, args.lws).map_err(|e| CliError::Usage(format!("--lws/--gws: {e}")))?;
    let metrics = compute_metrics(&records, &device, &workload).map_err(|e| CliError::Data(e.to_string()))?;

    let _ = writeln!(io.out, "{}", metrics.summary_line());
    for ((core, warp), n) in &metrics.issues_per_warp {
        let _ = writeln!(io.out, "  core {core} warp {warp}: {n} issues");
    }
    for (section, n) in &metrics.section_cycle_histogram {
        let _ = writeln!(io.out, "  {section}: {n}");
    }
    if args.timeline {
        ensure_dir(&cli.output_dir)?;
        let stem = args.input.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        let path = cli.output_dir.join(format!("{stem}.svg"));
        write_file(&path, render_timeline(&records, &section_map).as_bytes())?;
        let _ = writeln!(io.err, "wrote {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs, io: &mut Io) -> Result<(), CliError> {
    let mut grid = match (&args.preset, &args.grid) {
        (_, Some(path)) => SweepGrid::from_toml_file(path).map_err(|e| match e {
            SweepError::Io(io) => io_error(path, io),
            other => other.into(),
        })?,
        (preset, None) => SweepGrid::preset(preset.as_deref().unwrap_or("desk"))?,
    };
    grid.latency = latency_model(grid.latency, &args.latency)?;
    let mut strategies = vec![MappingStrategy::Optimal];
    for s in args.strategies.split(',').filter(|s| !s.trim().is_empty()) {
        let s: MappingStrategy = s.parse().map_err(|e| CliError::Usage(format!("--strategies: {e}")))?;
        if !strategies.contains(&s) {
            strategies.push(s);
        }
    }
    let devices = grid.devices()?.len();
    let _ = writeln!(
        io.err,
        "sweeping {} kernels x {} configurations x {} strategies",
        grid.kernels.len(),
        devices,
        strategies.len()
    );

    if !cli.stdout {
        ensure_dir(&cli.output_dir)?;
    }
    let report = run_sweep(&grid, &strategies)?;
    let table = summarize(&report);
    let failures = report.rows.iter().filter(|r| r.error.is_some()).count();

    if cli.stdout {
        match cli.format {
            OutputFormat::Csv => report.write_csv(&mut *io.out)?,
            OutputFormat::Json => report.write_json(&mut *io.out)?,
        }
        let _ = write!(io.err, "{table}");
    } else {
        let csv_path = cli.output_dir.join("sweep.csv");
        let file = fs::File::create(&csv_path).map_err(|e| io_error(&csv_path, e))?;
        report.write_csv(std::io::BufWriter::new(file))?;
        let json_path = cli.output_dir.join("sweep.json");
        let file = fs::File::create(&json_path).map_err(|e| io_error(&json_path, e))?;
        report.write_json(std::io::BufWriter::new(file))?;
        let mut written = vec![csv_path, json_path];
        if !report.ratios.is_empty() {
            let svg_path = cli.output_dir.join("distribution.svg");
            write_file(&svg_path, render_distribution(&report)?.as_bytes())?;
            written.push(svg_path);
        }
        let _ = write!(io.out, "{table}");
        for p in written {
            let _ = writeln!(io.err, "wrote {}", p.display());
        }
    }
    let _ = writeln!(
        io.err,
        "{} configurations, {} rows, {} failed",
        devices,
        report.rows.len(),
        failures
    );
    Ok(())
}

fn cmd_kernels_list(io: &mut Io) {
    for k in builtin_catalog() {
        let _ = writeln!(io.out, "{:<18} {}", k.name(), k.summary());
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io { out, err };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(&cli, args, &mut io),
        Command::Trace(args) => cmd_trace(&cli, args, &mut io),
        Command::Sweep(args) => cmd_sweep(&cli, args, &mut io),
        Command::Kernels {
            action: KernelsAction::List,
        } => {
            cmd_kernels_list(&mut io);
            Ok(())
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.err, "error: {}", e.message());
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["simtmap"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn run_optimal_prints_mapping() {
        let (code, out, _) = invoke(&[
            "run",
            "--device",
            "1c2w4t",
            "--kernel",
            "vecadd",
            "--n",
            "128",
            "--strategy",
            "optimal",
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("lws=16 scenario=single-call-full calls=1"), "{out}");
    }

    #[test]
    fn run_explicit_lws() {
        let (code, out, _) = invoke(&[
            "run", "--device", "1c2w4t", "--kernel", "vecadd", "--n", "128", "--lws", "64",
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("scenario=single-call-underutilized"), "{out}");
    }

    #[test]
    fn bad_device_is_usage_error() {
        let (code, _, err) = invoke(&["run", "--device", "0c1w1t", "--kernel", "vecadd"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--device") && err.contains("cores must be >= 1"), "{err}");
    }

    #[test]
    fn strategy_and_lws_conflict() {
        let (code, _, _) = invoke(&[
            "run",
            "--device",
            "1c2w4t",
            "--kernel",
            "vecadd",
            "--lws",
            "4",
            "--strategy",
            "naive",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn lws_above_gws_is_usage_error() {
        let (code, _, err) = invoke(&[
            "run", "--device", "1c2w4t", "--kernel", "vecadd", "--n", "8", "--lws", "9",
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--lws"), "{err}");
    }

    #[test]
    fn unknown_kernel_lists_catalog() {
        let (code, _, err) = invoke(&["run", "--device", "1c2w4t", "--kernel", "fft"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("vecadd"), "{err}");
    }

    #[test]
    fn cycle_budget_is_simulation_error() {
        let (code, _, _) = invoke(&[
            "run",
            "--device",
            "1c1w1t",
            "--kernel",
            "vecadd",
            "--n",
            "4",
            "--latency",
            "overhead=2000000000",
            "--lws",
            "1",
        ]);
        assert_eq!(code, EXIT_SIM);
    }

    #[test]
    fn kernels_list() {
        let (code, out, _) = invoke(&["kernels", "list"]);
        assert_eq!(code, 0);
        assert!(out.lines().any(|l| l.starts_with("sgemm-tile")));
    }

    #[test]
    fn unknown_preset_lists_presets() {
        let (code, _, err) = invoke(&["sweep", "--preset", "huge"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("desk") && err.contains("full"), "{err}");
    }

    #[test]
    fn run_json_record_to_stdout() {
        let (code, out, err) = invoke(&[
            "--stdout", "--format", "json", "run", "--device", "1c2w4t", "--kernel", "vecadd", "--n", "128",
        ]);
        assert_eq!(code, 0);
        let value: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(value["lws"], 16);
        assert!(err.contains("scenario=single-call-full"));
    }
}
