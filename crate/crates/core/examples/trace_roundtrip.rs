//! Writes a trace, reads it back and derives the mapping from the trace
//! alone.

use simtmap::kernels::lookup;
use simtmap::trace::{parse_trace_str, trace_to_string};
use simtmap::{
    classify_scenario, compute_metrics, distribute, simulate, DeviceConfig, LatencyModel, ProblemSize, Workload,
};

fn main() {
    let device: DeviceConfig = "2c2w4t".parse().unwrap();
    let kernel = lookup("saxpy").unwrap().instantiate(&ProblemSize::n(40)).unwrap();
    let workload = Workload::new(kernel.gws, 2).unwrap();
    let plan = distribute(&workload, &device);
    let result = simulate(&device, &kernel, &plan, &LatencyModel::default(), true).unwrap();

    let text = trace_to_string(&result.trace);
    println!("{}", text.lines().take(8).collect::<Vec<_>>().join("\n"));
    println!("... {} records\n", result.trace.len());

    let parsed = parse_trace_str(&text).expect("own output parses");
    assert_eq!(parsed, result.trace);

    let metrics = compute_metrics(&parsed, &device, &workload).unwrap();
    println!("{}", metrics.summary_line());
    println!("expected scenario: {}", classify_scenario(&workload, &device));
    for ((core, warp), issues) in &metrics.issues_per_warp {
        println!("  c{core} w{warp}: {issues} issues");
    }
    for (section, n) in &metrics.section_cycle_histogram {
        println!("  {section:<14} {n}");
    }
}
