//! Simulates vecadd on 1c2w4t under four local work sizes and prints cycles,
//! calls and utilization for each.

use simtmap::kernels::lookup;
use simtmap::{classify_scenario, distribute, simulate, DeviceConfig, LatencyModel, ProblemSize, Workload};

fn main() {
    let device: DeviceConfig = "1c2w4t".parse().unwrap();
    let kernel = lookup("vecadd").unwrap().instantiate(&ProblemSize::n(128)).unwrap();
    let latency = LatencyModel::default();
    println!("latencies: {latency:?}\n");

    for lws in [1, 16, 32, 64] {
        let workload = Workload::new(kernel.gws, lws).unwrap();
        let plan = distribute(&workload, &device);
        let result = simulate(&device, &kernel, &plan, &latency, false).unwrap();
        println!(
            "lws={lws:<3} {:<26} {result}",
            classify_scenario(&workload, &device).to_string()
        );
    }

    // without call overhead the multi-call penalty mostly disappears
    let mut cheap = latency.clone();
    cheap.apply_override("overhead=0").unwrap();
    let plan = distribute(&Workload::new(128, 1).unwrap(), &device);
    let r = simulate(&device, &kernel, &plan, &cheap, false).unwrap();
    println!("\nlws=1 with overhead=0: {} cycles", r.total_cycles);
}
