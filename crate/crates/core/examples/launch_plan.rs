//! Prints the per-warp launch plan: which lanes are active in which call
//! and how many iterations each lane loops over.
//!
//!     cargo run --example launch_plan -- 2c2w4t 37 3

use simtmap::{distribute, DeviceConfig, Workload};

fn main() {
    let mut args = std::env::args().skip(1);
    let device: DeviceConfig = args
        .next()
        .as_deref()
        .unwrap_or("2c2w4t")
        .parse()
        .expect("device like 2c2w4t");
    let gws: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(37);
    let lws: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);

    let plan = distribute(&Workload::new(gws, lws).expect("lws <= gws"), &device);
    print!("{}", plan.to_text());

    println!();
    for launch in &plan.launches {
        let ranges: Vec<String> = launch
            .first_iteration
            .iter()
            .zip(&launch.iterations_per_thread)
            .filter(|(_, n)| **n > 0)
            .map(|(first, n)| format!("{first}..{}", first + n))
            .collect();
        println!(
            "call {} core {} warp {}: {}",
            launch.call_index,
            launch.core_id,
            launch.warp_id,
            ranges.join(" ")
        );
    }
}
