//! Loads a kernel description from a text file and compares mappings.
//!
//!     cargo run --example custom_kernel -- crates/core/examples/stencil.kernel 2048

use std::path::PathBuf;

use simtmap::kernels::load_kernel_file;
use simtmap::{distribute, simulate, DeviceConfig, LatencyModel, MappingStrategy, ProblemSize, Workload};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/stencil.kernel"));
    let n: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2048);

    let descriptor = load_kernel_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let kernel = descriptor.instantiate(&ProblemSize::n(n)).unwrap();
    println!(
        "{} ({} instructions, body {})",
        kernel.name,
        kernel.template.len(),
        kernel.template.body.len()
    );
    for (range, section) in kernel.section_map.ranges() {
        println!("  pc {:>2}..{:<2} {section}", range.start, range.end);
    }

    let device: DeviceConfig = "2c4w4t".parse().unwrap();
    for strategy in [
        MappingStrategy::Optimal,
        MappingStrategy::Naive,
        MappingStrategy::Fixed(32),
    ] {
        let lws = strategy.lws_for(kernel.gws, &device);
        let plan = distribute(&Workload::new(kernel.gws, lws).unwrap(), &device);
        let r = simulate(&device, &kernel, &plan, &LatencyModel::default(), false).unwrap();
        println!("{strategy:<8} lws={lws:<4} {r}");
    }
}
