use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;

use simtmap::kernels::lookup;
use simtmap::mapper::{core_chunks, kernel_call_count};
use simtmap::trace::{parse_trace_str, trace_to_string};
use simtmap::{
    classify_scenario, compute_metrics, distribute, hardware_parallelism, optimal_lws, simulate, DeviceConfig,
    KernelInstance, LatencyModel, MappingScenario, ProblemSize, Workload,
};

fn device() -> impl Strategy<Value = DeviceConfig> {
    (1u32..=8, 1u32..=8, 1u32..=16).prop_map(|(c, w, t)| DeviceConfig::new(c, w, t).unwrap())
}

fn workload(max_gws: u64) -> impl Strategy<Value = Workload> {
    (1..=max_gws).prop_flat_map(|gws| (1..=gws).prop_map(move |lws| Workload::new(gws, lws).unwrap()))
}

fn small_kernel() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "vecadd",
        "saxpy",
        "gaussian-blur-1d",
        "nearest-neighbor",
        "gcn-aggregate",
    ])
}

fn latency() -> impl Strategy<Value = LatencyModel> {
    (1u64..=4, 1u64..=30, 1u64..=8, 1u64..=3, 0u64..=300, 1u32..=3).prop_map(
        |(alu, load, store, branch, overhead, width)| LatencyModel {
            alu_cycles: alu,
            load_cycles: load,
            store_cycles: store,
            branch_cycles: branch,
            irregular_load_multiplier: 2.0,
            call_overhead_cycles: overhead,
            issue_width_per_core: width,
        },
    )
}

fn instance(name: &str, gws: u64) -> KernelInstance {
    lookup(name).unwrap().instantiate(&ProblemSize::n(gws)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exactly_one_scenario(w in workload(5000), d in device()) {
        let hp = hardware_parallelism(&d);
        let s = classify_scenario(&w, &d);
        let product = w.lws() * hp;
        let holds = [
            (product < w.gws(), MappingScenario::MultipleCalls),
            (product == w.gws(), MappingScenario::SingleCallFull),
            (product > w.gws(), MappingScenario::SingleCallUnderutilized),
        ];
        prop_assert_eq!(holds.iter().filter(|(b, _)| *b).count(), 1);
        prop_assert!(holds.iter().any(|(b, v)| *b && *v == s));
    }

    #[test]
    fn optimal_is_never_multiple_calls(gws in 1u64..100_000, d in device()) {
        let lws = optimal_lws(gws, hardware_parallelism(&d));
        prop_assert_ne!(classify_scenario(&Workload::new(gws, lws).unwrap(), &d), MappingScenario::MultipleCalls);
    }

    #[test]
    fn hp_is_monotone(c in 1u32..32, w in 1u32..32, t in 1u32..63) {
        let base = hardware_parallelism(&DeviceConfig::new(c, w, t).unwrap());
        prop_assert!(hardware_parallelism(&DeviceConfig::new(c + 1, w, t).unwrap()) >= base);
        prop_assert!(hardware_parallelism(&DeviceConfig::new(c, w + 1, t).unwrap()) >= base);
        prop_assert!(hardware_parallelism(&DeviceConfig::new(c, w, t + 1).unwrap()) >= base);
    }

    #[test]
    fn device_string_round_trips(d in device()) {
        let back: DeviceConfig = d.to_string().parse().unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn plan_conserves_iterations(w in workload(20_000), d in device()) {
        let plan = distribute(&w, &d);
        prop_assert_eq!(plan.launches.iter().map(|l| l.total_iterations()).sum::<u64>(), w.gws());
        // every global index assigned exactly once
        let mut covered: Vec<(u64, u64)> = plan
            .launches
            .iter()
            .flat_map(|l| l.first_iteration.iter().zip(&l.iterations_per_thread).filter(|(_, n)| **n > 0).map(|(s, n)| (*s, *n)))
            .collect();
        covered.sort();
        let mut next = 0;
        for (start, n) in covered {
            prop_assert_eq!(start, next);
            next += n;
        }
        prop_assert_eq!(next, w.gws());
    }

    #[test]
    fn call_count_matches_per_core_form(w in workload(20_000), d in device()) {
        let plan = distribute(&w, &d);
        let per_core_lanes = u64::from(d.warps_per_core()) * u64::from(d.threads_per_warp());
        let expected = core_chunks(w.gws(), d.cores())
            .iter()
            .filter(|(_, len)| *len > 0)
            .map(|(_, len)| len.div_ceil(per_core_lanes * w.lws()))
            .max()
            .unwrap();
        prop_assert_eq!(u64::from(plan.kernel_calls), expected);
        let observed = plan.launches.iter().map(|l| l.call_index).max().unwrap() + 1;
        prop_assert_eq!(observed, plan.kernel_calls);
        if w.gws() % u64::from(d.cores()) == 0 {
            prop_assert_eq!(u64::from(plan.kernel_calls), kernel_call_count(w.gws(), hardware_parallelism(&d), w.lws()));
        }
    }

    #[test]
    fn optimal_lws_gives_one_call(gws in 1u64..200_000, d in device()) {
        let lws = optimal_lws(gws, hardware_parallelism(&d));
        prop_assert_eq!(distribute(&Workload::new(gws, lws).unwrap(), &d).kernel_calls, 1);
    }

    #[test]
    fn chunks_are_balanced(gws in 1u64..100_000, cores in 1u32..64) {
        let chunks = core_chunks(gws, cores);
        prop_assert_eq!(chunks.len(), cores as usize);
        prop_assert!(chunks.windows(2).all(|p| p[0].1 >= p[1].1 && p[0].1 - p[1].1 <= 1));
        prop_assert!(chunks.windows(2).all(|p| p[0].0 + p[0].1 == p[1].0));
    }

    #[test]
    fn distribute_is_pure(w in workload(5000), d in device()) {
        prop_assert_eq!(distribute(&w, &d), distribute(&w, &d));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulator_invariants(name in small_kernel(), gws in 1u64..400, lws_seed in 1u64..64, d in device(), lat in latency()) {
        let kernel = instance(name, gws);
        let w = Workload::new(kernel.gws, lws_seed.min(kernel.gws)).unwrap();
        let plan = distribute(&w, &d);
        let r = simulate(&d, &kernel, &plan, &lat, true).unwrap();

        // work conservation
        let body_len = kernel.template.body.len() as u64;
        let body_lanes: u64 = r.trace.iter().filter(|t| t.section.is_body()).map(|t| u64::from(t.thread_mask.count_ones())).sum();
        prop_assert_eq!(body_lanes, kernel.gws * body_len);

        // per-warp monotonicity
        let mut last: HashMap<(u32, u32, u32), u64> = HashMap::new();
        for t in &r.trace {
            if let Some(prev) = last.insert((t.core_id, t.warp_id, t.call_index), t.cycle) {
                prop_assert!(t.cycle > prev);
            }
        }

        // issue width
        let mut slots: HashMap<(u32, u64), u32> = HashMap::new();
        for t in &r.trace {
            *slots.entry((t.core_id, t.cycle)).or_default() += 1;
        }
        prop_assert!(slots.values().all(|&n| n <= lat.issue_width_per_core));

        // sequential calls
        let mut spans: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for t in &r.trace {
            let e = spans.entry(t.call_index).or_insert((t.cycle, t.cycle));
            e.0 = e.0.min(t.cycle);
            e.1 = e.1.max(t.cycle);
        }
        let spans: Vec<(u64, u64)> = spans.into_values().collect();
        for pair in spans.windows(2) {
            prop_assert!(pair[1].0 >= pair[0].1 + lat.call_overhead_cycles);
        }

        prop_assert!(r.utilization > 0.0 && r.utilization <= 1.0 + 1e-12);

        // trace round trip and scenario self-evidence
        prop_assert_eq!(&parse_trace_str(&trace_to_string(&r.trace)).unwrap(), &r.trace);
        let metrics = compute_metrics(&r.trace, &d, &w).unwrap();
        prop_assert_eq!(metrics.inferred_scenario, classify_scenario(&w, &d));
        prop_assert_eq!(metrics.issues_per_warp.values().sum::<u64>(), r.trace.len() as u64);
        prop_assert!(metrics.utilization <= 1.0 + 1e-12);

        // determinism
        let again = simulate(&d, &kernel, &plan, &lat, true).unwrap();
        prop_assert_eq!(again, r);
    }
}

#[test]
fn more_warps_hide_load_latency() {
    let kernel = instance("vecadd", 128);
    let lat = LatencyModel::default();
    let two: DeviceConfig = "1c2w4t".parse().unwrap();
    let one: DeviceConfig = "1c1w4t".parse().unwrap();
    let overlapped = simulate(
        &two,
        &kernel,
        &distribute(&Workload::new(128, 16).unwrap(), &two),
        &lat,
        false,
    )
    .unwrap();
    let serial = simulate(
        &one,
        &kernel,
        &distribute(&Workload::new(128, 32).unwrap(), &one),
        &lat,
        false,
    )
    .unwrap();
    // same 128 iterations; two warps overlap their load stalls
    assert!(
        overlapped.total_cycles < serial.total_cycles,
        "{} vs {}",
        overlapped.total_cycles,
        serial.total_cycles
    );
}

#[test]
fn sweep_is_reproducible() {
    use simtmap::{run_sweep, MappingStrategy, SweepGrid};
    let grid = SweepGrid::desk();
    let strategies = [
        MappingStrategy::Optimal,
        MappingStrategy::Naive,
        MappingStrategy::Fixed(32),
    ];
    let json = |_| {
        let mut buf = Vec::new();
        run_sweep(&grid, &strategies).unwrap().write_json(&mut buf).unwrap();
        buf
    };
    assert_eq!(json(0), json(1));
}
