//! Renders the four vecadd mappings of 1c2w4t as stacked timelines on a
//! shared time axis.
//!
//!     cargo run --example timelines -- vecadd_timelines.svg

use simtmap::kernels::lookup;
use simtmap::trace::{render_timelines, TimelinePanel};
use simtmap::{classify_scenario, distribute, simulate, DeviceConfig, LatencyModel, ProblemSize, Workload};

fn main() -> std::io::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "vecadd_timelines.svg".into());
    let device: DeviceConfig = "1c2w4t".parse().unwrap();
    let kernel = lookup("vecadd").unwrap().instantiate(&ProblemSize::n(128)).unwrap();

    let runs: Vec<_> = [1u64, 16, 32, 64]
        .into_iter()
        .map(|lws| {
            let workload = Workload::new(kernel.gws, lws).unwrap();
            let plan = distribute(&workload, &device);
            let r = simulate(&device, &kernel, &plan, &LatencyModel::default(), true).unwrap();
            let title = format!(
                "lws={lws}  {}  {} cycles",
                classify_scenario(&workload, &device),
                r.total_cycles
            );
            (title, r.trace)
        })
        .collect();
    let panels: Vec<TimelinePanel> = runs
        .iter()
        .map(|(title, trace)| TimelinePanel {
            title: title.clone(),
            records: trace,
            section_map: &kernel.section_map,
        })
        .collect();
    std::fs::write(&out, render_timelines(&panels))?;
    println!("wrote {out}");
    Ok(())
}
