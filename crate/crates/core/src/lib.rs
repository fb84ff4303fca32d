//! Hardware-aware work-size mapping for small SIMT GPGPUs.
//!
//! The crate models how a Vortex-style OpenCL runtime spreads a kernel's
//! global work across cores, warps and threads, picks the local work size
//! from the device's parallelism at runtime, simulates the resulting
//! instruction issue cycle by cycle, and sweeps device configurations to
//! compare the hardware-aware choice against naive and fixed mappings.
//!
//! ```
//! use simtmap::{distribute, hardware_parallelism, optimal_lws, DeviceConfig, Workload};
//!
//! let device: DeviceConfig = "1c2w4t".parse().unwrap();
//! let lws = optimal_lws(128, hardware_parallelism(&device));
//! assert_eq!(lws, 16);
//! let plan = distribute(&Workload::new(128, lws).unwrap(), &device);
//! assert_eq!(plan.kernel_calls, 1);
//! ```
//!
//! Runnable walkthroughs of each capability live under `examples/`.

pub mod cli;
pub mod device;
pub mod kernels;
pub mod mapper;
pub mod sim;
mod svg;
pub mod sweep;
pub mod trace;

pub use device::{classify_scenario, hardware_parallelism, DeviceConfig, DeviceError, MappingScenario, Workload};
pub use kernels::{builtin_catalog, InstrClass, KernelDescriptor, KernelInstance, ProblemSize, Section, SectionMap};
pub use mapper::{distribute, kernel_call_count, optimal_lws, LaunchPlan, WarpLaunch};
pub use sim::{simulate, LatencyModel, SimError, SimResult};
pub use sweep::{run_sweep, summarize, MappingStrategy, SweepGrid, SweepReport};
pub use trace::{compute_metrics, parse_trace, write_trace, TraceMetrics, TraceRecord};
