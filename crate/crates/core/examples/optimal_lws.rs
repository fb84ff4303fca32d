//! Picks the local work size for a few devices and shows which mapping
//! regime each choice lands in.
//!
//!     cargo run --example optimal_lws -- 4096

use simtmap::{classify_scenario, hardware_parallelism, kernel_call_count, optimal_lws, DeviceConfig, Workload};

fn main() {
    let gws: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(128);
    println!("gws = {gws}");
    println!("{:<10} {:>6} {:>6} {:>6}  scenario", "device", "hp", "lws", "calls");
    for spec in ["1c2w4t", "1c4w8t", "2c4w8t", "4c8w8t", "16c16w32t"] {
        let device: DeviceConfig = spec.parse().unwrap();
        let hp = hardware_parallelism(&device);
        let lws = optimal_lws(gws, hp);
        let scenario = classify_scenario(&Workload::new(gws, lws).unwrap(), &device);
        println!(
            "{spec:<10} {hp:>6} {lws:>6} {:>6}  {scenario}",
            kernel_call_count(gws, hp, lws)
        );
    }

    // the same device with hand-picked sizes
    let device: DeviceConfig = "1c2w4t".parse().unwrap();
    println!("\n1c2w4t, every power of two:");
    let mut lws = 1;
    while lws <= gws {
        let w = Workload::new(gws, lws).unwrap();
        println!(
            "  lws={lws:<5} calls={:<4} {}",
            kernel_call_count(gws, hardware_parallelism(&device), lws),
            classify_scenario(&w, &device)
        );
        lws *= 2;
    }
}
