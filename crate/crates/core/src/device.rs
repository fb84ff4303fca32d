//! Hardware configuration and workload descriptors.
//!
//! A [`DeviceConfig`] describes the parallelism of a Vortex-style GPGPU as
//! `cores × warps per core × threads per warp`. A [`Workload`] pairs the
//! global work size of a kernel enqueue with the local work size, i.e. the
//! number of iterations each hardware thread loops over per kernel call.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Widest warp representable: thread masks are stored in a `u64`.
pub const MAX_THREADS_PER_WARP: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeviceError {
    #[error("cores must be >= 1")]
    ZeroCores,
    #[error("warps per core must be >= 1")]
    ZeroWarps,
    #[error("threads per warp must be >= 1")]
    ZeroThreads,
    #[error("threads per warp must be <= {MAX_THREADS_PER_WARP}, got {0}")]
    TooManyThreads(u32),
    #[error("invalid device string {0:?}: expected <cores>c<warps>w<threads>t, e.g. 1c2w4t")]
    Syntax(String),
    #[error("global work size must be >= 1")]
    ZeroGws,
    #[error("local work size must be >= 1")]
    ZeroLws,
    #[error("local work size {lws} exceeds global work size {gws}")]
    LwsExceedsGws { gws: u64, lws: u64 },
}

/// Hardware parallelism descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeviceConfig {
    cores: u32,
    warps_per_core: u32,
    threads_per_warp: u32,
}

impl DeviceConfig {
    pub fn new(cores: u32, warps_per_core: u32, threads_per_warp: u32) -> Result<Self, DeviceError> {
        if cores == 0 {
            return Err(DeviceError::ZeroCores);
        }
        if warps_per_core == 0 {
            return Err(DeviceError::ZeroWarps);
        }
        if threads_per_warp == 0 {
            return Err(DeviceError::ZeroThreads);
        }
        if threads_per_warp > MAX_THREADS_PER_WARP {
            return Err(DeviceError::TooManyThreads(threads_per_warp));
        }
        Ok(Self {
            cores,
            warps_per_core,
            threads_per_warp,
        })
    }

    pub fn cores(&self) -> u32 {
        self.cores
    }

    pub fn warps_per_core(&self) -> u32 {
        self.warps_per_core
    }

    pub fn threads_per_warp(&self) -> u32 {
        self.threads_per_warp
    }

    /// Lanes hosted by one core: `warps_per_core × threads_per_warp`.
    pub fn lanes_per_core(&self) -> u64 {
        u64::from(self.warps_per_core) * u64::from(self.threads_per_warp)
    }

    /// Mask with every lane of a warp set.
    pub fn full_mask(&self) -> u64 {
        if self.threads_per_warp == 64 {
            u64::MAX
        } else {
            (1u64 << self.threads_per_warp) - 1
        }
    }
}

/// Total number of work items the device hosts at once.
pub fn hardware_parallelism(device: &DeviceConfig) -> u64 {
    u64::from(device.cores) * device.lanes_per_core()
}

impl fmt::Display for DeviceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!(
            "{}c{}w{}t",
            self.cores, self.warps_per_core, self.threads_per_warp
        ))
    }
}

impl FromStr for DeviceConfig {
    type Err = DeviceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || DeviceError::Syntax(s.to_string());
        let (cores, rest) = s.split_once('c').ok_or_else(syntax)?;
        let (warps, rest) = rest.split_once('w').ok_or_else(syntax)?;
        let threads = rest.strip_suffix('t').ok_or_else(syntax)?;
        let field = |digits: &str| -> Result<u32, DeviceError> {
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(syntax());
            }
            digits.parse().map_err(|_| syntax())
        };
        DeviceConfig::new(field(cores)?, field(warps)?, field(threads)?)
    }
}

impl Serialize for DeviceConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DeviceConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A kernel's global work size together with the chosen local work size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Workload {
    gws: u64,
    lws: u64,
}

impl Workload {
    pub fn new(gws: u64, lws: u64) -> Result<Self, DeviceError> {
        if gws == 0 {
            return Err(DeviceError::ZeroGws);
        }
        if lws == 0 {
            return Err(DeviceError::ZeroLws);
        }
        if lws > gws {
            return Err(DeviceError::LwsExceedsGws { gws, lws });
        }
        Ok(Self { gws, lws })
    }

    pub fn gws(&self) -> u64 {
        self.gws
    }

    pub fn lws(&self) -> u64 {
        self.lws
    }
}

/// The three regimes a mapping can fall into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingScenario {
    /// More warps are spawned than the hardware hosts; the runtime issues
    /// several sequential kernel calls.
    MultipleCalls,
    /// Every lane is loaded once, in a single call.
    SingleCallFull,
    /// A single call, but some lanes idle for part or all of it.
    SingleCallUnderutilized,
}

impl MappingScenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            MappingScenario::MultipleCalls => "multiple-calls",
            MappingScenario::SingleCallFull => "single-call-full",
            MappingScenario::SingleCallUnderutilized => "single-call-underutilized",
        }
    }
}

impl fmt::Display for MappingScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// Compares `lws · hp` against `gws` in exact integer arithmetic.
pub fn classify_scenario(workload: &Workload, device: &DeviceConfig) -> MappingScenario {
    let capacity = u128::from(workload.lws) * u128::from(hardware_parallelism(device));
    match capacity.cmp(&u128::from(workload.gws)) {
        std::cmp::Ordering::Less => MappingScenario::MultipleCalls,
        std::cmp::Ordering::Equal => MappingScenario::SingleCallFull,
        std::cmp::Ordering::Greater => MappingScenario::SingleCallUnderutilized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev(c: u32, w: u32, t: u32) -> DeviceConfig {
        DeviceConfig::new(c, w, t).unwrap()
    }

    #[test]
    fn parallelism_is_product() {
        assert_eq!(hardware_parallelism(&dev(1, 2, 4)), 8);
        assert_eq!(hardware_parallelism(&dev(1, 1, 1)), 1);
        assert_eq!(hardware_parallelism(&dev(64, 32, 32)), 65536);
    }

    #[test]
    fn zero_fields_rejected() {
        assert_eq!(DeviceConfig::new(0, 1, 1), Err(DeviceError::ZeroCores));
        assert_eq!(DeviceConfig::new(1, 0, 1), Err(DeviceError::ZeroWarps));
        assert_eq!(DeviceConfig::new(1, 1, 0), Err(DeviceError::ZeroThreads));
        assert_eq!(DeviceConfig::new(1, 1, 65), Err(DeviceError::TooManyThreads(65)));
        assert!(DeviceConfig::new(1, 1, 64).is_ok());
    }

    #[test]
    fn device_string_form() {
        let d: DeviceConfig = "1c2w4t".parse().unwrap();
        assert_eq!(d, dev(1, 2, 4));
        assert_eq!(d.to_string(), "1c2w4t");
        assert_eq!("64c32w32t".parse::<DeviceConfig>().unwrap(), dev(64, 32, 32));
        assert_eq!("0c1w1t".parse::<DeviceConfig>(), Err(DeviceError::ZeroCores));
        for bad in ["", "1c2w4", "c2w4t", "1c2x4t", "1c-2w4t", "1c2w4tt", "1 c2w4t"] {
            assert!(
                matches!(bad.parse::<DeviceConfig>(), Err(DeviceError::Syntax(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn full_mask_widths() {
        assert_eq!(dev(1, 1, 4).full_mask(), 0b1111);
        assert_eq!(dev(1, 1, 64).full_mask(), u64::MAX);
    }

    #[test]
    fn workload_invariants() {
        assert!(Workload::new(128, 16).is_ok());
        assert_eq!(Workload::new(0, 1), Err(DeviceError::ZeroGws));
        assert_eq!(Workload::new(4, 0), Err(DeviceError::ZeroLws));
        assert_eq!(Workload::new(4, 5), Err(DeviceError::LwsExceedsGws { gws: 4, lws: 5 }));
    }

    #[test]
    fn three_scenarios_on_vecadd_example() {
        let d = dev(1, 2, 4);
        let s = |lws| classify_scenario(&Workload::new(128, lws).unwrap(), &d);
        assert_eq!(s(1), MappingScenario::MultipleCalls);
        assert_eq!(s(16), MappingScenario::SingleCallFull);
        assert_eq!(s(32), MappingScenario::SingleCallUnderutilized);
        assert_eq!(s(64), MappingScenario::SingleCallUnderutilized);
    }

    #[test]
    fn non_divisible_boundary() {
        // 13 * 8 = 104 > 100, 12 * 8 = 96 < 100
        let d = dev(1, 2, 4);
        let s = |lws| classify_scenario(&Workload::new(100, lws).unwrap(), &d);
        assert_eq!(s(12), MappingScenario::MultipleCalls);
        assert_eq!(s(13), MappingScenario::SingleCallUnderutilized);
    }

    #[test]
    fn device_serde_uses_string_form() {
        let json = serde_json::to_string(&dev(2, 4, 8)).unwrap();
        assert_eq!(json, "\"2c4w8t\"");
        let back: DeviceConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, dev(2, 4, 8));
    }
}
