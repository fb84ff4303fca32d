//! Parameterized kernel models.
//!
//! A kernel is not executed functionally. It is an instruction-count model:
//! a prologue issued once per kernel call, a body and loop-overhead block
//! issued once per iteration, and an epilogue issued once per call. Every
//! instruction carries an [`InstrClass`] (which fixes its latency) and a
//! [`Section`] tag used to label trace records.
//!
//! Template PCs are laid out as `prologue ++ body ++ loop_overhead ++ epilogue`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("kernel {kernel}: {param} must be >= 1")]
    InvalidProblemSize { kernel: String, param: &'static str },
    #[error("kernel {kernel}: global work size {gws} overflows")]
    Overflow { kernel: String, gws: u128 },
    #[error("kernel {0}: body needs at least one load or store and at least one alu instruction")]
    EmptyBody(String),
    #[error("kernel file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read kernel file {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstrClass {
    Alu,
    Load,
    Store,
    Branch,
    Barrier,
}

impl InstrClass {
    pub const ALL: [InstrClass; 5] = [
        InstrClass::Alu,
        InstrClass::Load,
        InstrClass::Store,
        InstrClass::Branch,
        InstrClass::Barrier,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InstrClass::Alu => "alu",
            InstrClass::Load => "load",
            InstrClass::Store => "store",
            InstrClass::Branch => "branch",
            InstrClass::Barrier => "barrier",
        }
    }
}

impl fmt::Display for InstrClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstrClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InstrClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown instruction class {s:?}"))
    }
}

/// Semantic tag of a template instruction.
///
/// `Part` is a named sub-section of the body (written `body.<name>`); it
/// counts as body for every metric that looks at body records.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Section {
    Init,
    Dispatch,
    Body,
    Part(Arc<str>),
    LoopOverhead,
    Epilogue,
}

impl Section {
    pub fn part(name: &str) -> Self {
        Section::Part(Arc::from(name))
    }

    pub fn is_body(&self) -> bool {
        matches!(self, Section::Body | Section::Part(_))
    }

    fn phase(&self) -> Phase {
        match self {
            Section::Init | Section::Dispatch => Phase::Prologue,
            Section::Body | Section::Part(_) => Phase::Body,
            Section::LoopOverhead => Phase::LoopOverhead,
            Section::Epilogue => Phase::Epilogue,
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Section::Init => f.write_str("init"),
            Section::Dispatch => f.write_str("dispatch"),
            Section::Body => f.write_str("body"),
            Section::Part(name) => write!(f, "body.{name}"),
            Section::LoopOverhead => f.write_str("loop-overhead"),
            Section::Epilogue => f.write_str("epilogue"),
        }
    }
}

fn valid_part_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_')
}

impl FromStr for Section {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "init" => Section::Init,
            "dispatch" => Section::Dispatch,
            "body" => Section::Body,
            "loop-overhead" => Section::LoopOverhead,
            "epilogue" => Section::Epilogue,
            other => match other.strip_prefix("body.") {
                Some(name) if valid_part_name(name) => Section::part(name),
                _ => return Err(format!("unknown section {s:?}")),
            },
        })
    }
}

impl Serialize for Section {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Section {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Prologue,
    Body,
    LoopOverhead,
    Epilogue,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instr {
    pub class: InstrClass,
    pub section: Section,
    /// Irregular (gather-style) access; loads pay the irregular multiplier.
    pub irregular: bool,
}

impl Instr {
    pub fn new(class: InstrClass, section: Section) -> Self {
        Self {
            class,
            section,
            irregular: false,
        }
    }

    pub fn irregular(mut self) -> Self {
        self.irregular = true;
        self
    }
}

/// The immutable instruction stream replayed by the simulator.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Template {
    pub prologue: Vec<Instr>,
    pub body: Vec<Instr>,
    pub loop_overhead: Vec<Instr>,
    pub epilogue: Vec<Instr>,
}

impl Template {
    pub fn len(&self) -> usize {
        self.prologue.len() + self.body.len() + self.loop_overhead.len() + self.epilogue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn body_start(&self) -> u32 {
        self.prologue.len() as u32
    }

    pub fn loop_overhead_start(&self) -> u32 {
        self.body_start() + self.body.len() as u32
    }

    pub fn epilogue_start(&self) -> u32 {
        self.loop_overhead_start() + self.loop_overhead.len() as u32
    }

    /// Instruction at `pc` in the flat layout.
    pub fn instr(&self, pc: u32) -> Option<&Instr> {
        self.iter().nth(pc as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Instr> {
        self.prologue
            .iter()
            .chain(&self.body)
            .chain(&self.loop_overhead)
            .chain(&self.epilogue)
    }

    pub fn section_map(&self) -> SectionMap {
        let mut ranges: Vec<(Range<u32>, Section)> = Vec::new();
        for (pc, instr) in self.iter().enumerate() {
            let pc = pc as u32;
            match ranges.last_mut() {
                Some((range, section)) if *section == instr.section && range.end == pc => range.end = pc + 1,
                _ => ranges.push((pc..pc + 1, instr.section.clone())),
            }
        }
        SectionMap { ranges }
    }

    fn validate(&self, kernel: &str) -> Result<(), KernelError> {
        let has_mem = self
            .body
            .iter()
            .any(|i| matches!(i.class, InstrClass::Load | InstrClass::Store));
        let has_alu = self.body.iter().any(|i| i.class == InstrClass::Alu);
        if has_mem && has_alu {
            Ok(())
        } else {
            Err(KernelError::EmptyBody(kernel.to_string()))
        }
    }
}

/// Disjoint PC ranges, each tagged with its section, covering the template.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SectionMap {
    ranges: Vec<(Range<u32>, Section)>,
}

impl SectionMap {
    /// Builds a map from observed `(pc, section)` pairs, e.g. from a trace.
    /// PCs never observed stay unmapped.
    pub fn from_entries<I: IntoIterator<Item = (u32, Section)>>(entries: I) -> Self {
        let by_pc: BTreeMap<u32, Section> = entries.into_iter().collect();
        let mut ranges: Vec<(Range<u32>, Section)> = Vec::new();
        for (pc, section) in by_pc {
            match ranges.last_mut() {
                Some((range, s)) if *s == section && range.end == pc => range.end = pc + 1,
                _ => ranges.push((pc..pc + 1, section)),
            }
        }
        SectionMap { ranges }
    }

    pub fn lookup(&self, pc: u32) -> Option<&Section> {
        let idx = self.ranges.partition_point(|(r, _)| r.end <= pc);
        self.ranges.get(idx).filter(|(r, _)| r.contains(&pc)).map(|(_, s)| s)
    }

    pub fn ranges(&self) -> &[(Range<u32>, Section)] {
        &self.ranges
    }

    pub fn len_pcs(&self) -> u32 {
        self.ranges.last().map_or(0, |(r, _)| r.end)
    }

    /// Sections in first-appearance order, without duplicates.
    pub fn sections(&self) -> Vec<Section> {
        let mut seen = Vec::new();
        for (_, s) in &self.ranges {
            if !seen.contains(s) {
                seen.push(s.clone());
            }
        }
        seen
    }
}

/// Problem parameters. Kernels read the ones they need; `m` and `k`
/// default to `n` when absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemSize {
    pub n: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
}

impl ProblemSize {
    pub fn n(n: u64) -> Self {
        Self { n, m: None, k: None }
    }

    pub fn mnk(m: u64, n: u64, k: u64) -> Self {
        Self {
            n,
            m: Some(m),
            k: Some(k),
        }
    }

    pub fn m_or_n(&self) -> u64 {
        self.m.unwrap_or(self.n)
    }

    pub fn k_or_n(&self) -> u64 {
        self.k.unwrap_or(self.n)
    }
}

impl fmt::Display for ProblemSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}", self.n)?;
        if let Some(m) = self.m {
            write!(f, " m={m}")?;
        }
        if let Some(k) = self.k {
            write!(f, " k={k}")?;
        }
        Ok(())
    }
}

/// A kernel bound to a concrete problem size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelInstance {
    pub name: String,
    pub gws: u64,
    pub template: Template,
    pub section_map: SectionMap,
}

type BuildFn = dyn Fn(&ProblemSize) -> Result<(u64, Template), KernelError> + Send + Sync;

#[derive(Clone)]
pub struct KernelDescriptor {
    name: String,
    summary: String,
    build: Arc<BuildFn>,
}

impl fmt::Debug for KernelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelDescriptor")
            .field("name", &self.name)
            .field("summary", &self.summary)
            .finish_non_exhaustive()
    }
}

impl KernelDescriptor {
    pub fn new<F>(name: impl Into<String>, summary: impl Into<String>, build: F) -> Self
    where
        F: Fn(&ProblemSize) -> Result<(u64, Template), KernelError> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            summary: summary.into(),
            build: Arc::new(build),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn summary(&self) -> &str {
        &self.summary
    }

    pub fn gws_of(&self, size: &ProblemSize) -> Result<u64, KernelError> {
        (self.build)(size).map(|(gws, _)| gws)
    }

    pub fn instantiate(&self, size: &ProblemSize) -> Result<KernelInstance, KernelError> {
        let (gws, template) = (self.build)(size)?;
        template.validate(&self.name)?;
        let section_map = template.section_map();
        Ok(KernelInstance {
            name: self.name.clone(),
            gws,
            template,
            section_map,
        })
    }
}

// -- builtin catalog ---------------------------------------------------------

use InstrClass::{Alu, Branch, Load, Store};

fn run(class: InstrClass, section: &Section, count: usize) -> impl Iterator<Item = Instr> + '_ {
    std::iter::repeat_with(move || Instr::new(class, section.clone())).take(count)
}

/// Kernel-argument load plus global-id computation, shared by every builtin.
fn standard_prologue() -> Vec<Instr> {
    vec![
        Instr::new(Load, Section::Init),
        Instr::new(Alu, Section::Init),
        Instr::new(Alu, Section::Dispatch),
        Instr::new(Alu, Section::Dispatch),
    ]
}

fn standard_loop_overhead() -> Vec<Instr> {
    vec![
        Instr::new(Alu, Section::LoopOverhead),
        Instr::new(Branch, Section::LoopOverhead),
    ]
}

fn standard_epilogue() -> Vec<Instr> {
    vec![Instr::new(Branch, Section::Epilogue)]
}

fn with_body(body: Vec<Instr>) -> Template {
    Template {
        prologue: standard_prologue(),
        body,
        loop_overhead: standard_loop_overhead(),
        epilogue: standard_epilogue(),
    }
}

fn require(kernel: &str, param: &'static str, value: u64) -> Result<u64, KernelError> {
    if value == 0 {
        Err(KernelError::InvalidProblemSize {
            kernel: kernel.to_string(),
            param,
        })
    } else {
        Ok(value)
    }
}

fn product(kernel: &str, a: u64, b: u64) -> Result<u64, KernelError> {
    a.checked_mul(b).ok_or_else(|| KernelError::Overflow {
        kernel: kernel.to_string(),
        gws: u128::from(a) * u128::from(b),
    })
}

fn vecadd(size: &ProblemSize) -> Result<(u64, Template), KernelError> {
    let n = require("vecadd", "n", size.n)?;
    let load = Section::part("load");
    let body = vec![
        Instr::new(Load, load.clone()),
        Instr::new(Load, load),
        Instr::new(Alu, Section::part("add")),
        Instr::new(Store, Section::part("store")),
    ];
    Ok((n, with_body(body)))
}

fn saxpy(size: &ProblemSize) -> Result<(u64, Template), KernelError> {
    let n = require("saxpy", "n", size.n)?;
    let load = Section::part("load");
    let fma = Section::part("scale-add");
    let body = vec![
        Instr::new(Load, load.clone()),
        Instr::new(Load, load),
        Instr::new(Alu, fma.clone()),
        Instr::new(Alu, fma),
        Instr::new(Store, Section::part("store")),
    ];
    Ok((n, with_body(body)))
}

/// One `k`-step of a dot product: two operand loads, multiply-accumulate and
/// two address increments.
fn inner_product(k: u64, section: &Section) -> Vec<Instr> {
    let mut body = Vec::with_capacity(k as usize * 5);
    for _ in 0..k {
        body.extend(run(Load, section, 2));
        body.extend(run(Alu, section, 3));
    }
    body
}

fn sgemm_tile(size: &ProblemSize) -> Result<(u64, Template), KernelError> {
    let m = require("sgemm-tile", "m", size.m_or_n())?;
    let n = require("sgemm-tile", "n", size.n)?;
    let k = require("sgemm-tile", "k", size.k_or_n())?;
    let mut body = inner_product(k, &Section::part("inner-product"));
    body.push(Instr::new(Store, Section::part("store")));
    Ok((product("sgemm-tile", m, n)?, with_body(body)))
}

const BLUR_TAPS: usize = 5;

fn gaussian_blur_1d(size: &ProblemSize) -> Result<(u64, Template), KernelError> {
    let n = require("gaussian-blur-1d", "n", size.n)?;
    let gather = Section::part("gather");
    let convolve = Section::part("convolve");
    let mut body: Vec<Instr> = run(Load, &gather, BLUR_TAPS).collect();
    body.extend(run(Alu, &convolve, BLUR_TAPS + 1));
    body.push(Instr::new(Store, Section::part("store")));
    Ok((n, with_body(body)))
}

fn nearest_neighbor(size: &ProblemSize) -> Result<(u64, Template), KernelError> {
    let n = require("nearest-neighbor", "n", size.n)?;
    let distance = Section::part("distance");
    let compare = Section::part("compare");
    let mut body: Vec<Instr> = run(Load, &distance, 2).collect();
    body.extend(run(Alu, &distance, 4));
    body.extend(run(Alu, &compare, 2));
    body.push(Instr::new(Store, Section::part("store")));
    Ok((n, with_body(body)))
}

fn gcn_aggregate(size: &ProblemSize) -> Result<(u64, Template), KernelError> {
    let n = require("gcn-aggregate", "n", size.n)?;
    let degree = require("gcn-aggregate", "k", size.k.unwrap_or(4))?;
    let gather = Section::part("gather");
    let mut body = Vec::new();
    for _ in 0..degree {
        body.push(Instr::new(Load, gather.clone()));
        body.push(Instr::new(Load, gather.clone()).irregular());
        body.push(Instr::new(Alu, gather.clone()));
    }
    body.push(Instr::new(Alu, Section::part("normalize")));
    body.push(Instr::new(Store, Section::part("store")));
    Ok((n, with_body(body)))
}

fn dnn_dense_layer(size: &ProblemSize) -> Result<(u64, Template), KernelError> {
    let outputs = require("dnn-dense-layer", "m", size.m_or_n())?;
    let batch = require("dnn-dense-layer", "n", size.n)?;
    let inputs = require("dnn-dense-layer", "k", size.k_or_n())?;
    let mut body = inner_product(inputs, &Section::part("inner-product"));
    let bias = Section::part("bias");
    body.push(Instr::new(Load, bias.clone()));
    body.push(Instr::new(Alu, bias));
    body.extend(run(Alu, &Section::part("activation"), 2));
    body.push(Instr::new(Store, Section::part("store")));
    Ok((product("dnn-dense-layer", outputs, batch)?, with_body(body)))
}

/// The builtin kernels, in a stable order.
pub fn builtin_catalog() -> Vec<KernelDescriptor> {
    vec![
        KernelDescriptor::new("vecadd", "c[i] = a[i] + b[i]; gws = n", vecadd),
        KernelDescriptor::new("saxpy", "y[i] = a*x[i] + y[i]; gws = n", saxpy),
        KernelDescriptor::new(
            "sgemm-tile",
            "one output element per iteration, k-step dot product; gws = m*n",
            sgemm_tile,
        ),
        KernelDescriptor::new(
            "gaussian-blur-1d",
            "5-tap stencil with overlapping loads; gws = n",
            gaussian_blur_1d,
        ),
        KernelDescriptor::new(
            "nearest-neighbor",
            "distance to a query point plus a compare chain; gws = n",
            nearest_neighbor,
        ),
        KernelDescriptor::new(
            "gcn-aggregate",
            "neighbor feature gather with irregular loads, degree k (default 4); gws = n",
            gcn_aggregate,
        ),
        KernelDescriptor::new(
            "dnn-dense-layer",
            "dense layer: inner product over k inputs, bias, activation; gws = m*n",
            dnn_dense_layer,
        ),
    ]
}

pub fn lookup(name: &str) -> Option<KernelDescriptor> {
    builtin_catalog().into_iter().find(|k| k.name() == name)
}

// -- kernel files ------------------------------------------------------------

/// Parses the declarative kernel format.
///
/// ```text
/// # comment
/// [init]
/// load
/// alu
/// [body.load]
/// load
/// load irregular
/// [body]
/// alu
/// store
/// [loop-overhead]
/// alu
/// branch
/// [epilogue]
/// branch
/// ```
///
/// Sections may appear in any order and repeat; instructions are grouped by
/// phase (prologue, body, loop overhead, epilogue) keeping file order within
/// each phase. The resulting kernel has `gws = n`.
pub fn parse_kernel_text(name: &str, text: &str) -> Result<KernelDescriptor, KernelError> {
    let mut phases: BTreeMap<u8, Vec<Instr>> = BTreeMap::new();
    let mut current: Option<Section> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| KernelError::Parse { line: line_no, message };
        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err(format!("unterminated section header {line:?}")))?;
            current = Some(header.trim().parse().map_err(err)?);
            continue;
        }
        let section = current
            .clone()
            .ok_or_else(|| err("instruction before any [section] header".to_string()))?;
        let mut words = line.split_whitespace();
        let class: InstrClass = words.next().unwrap_or_default().parse().map_err(err)?;
        let mut instr = Instr::new(class, section.clone());
        match words.next() {
            None => {}
            Some("irregular") => instr = instr.irregular(),
            Some(other) => return Err(err(format!("unknown modifier {other:?}"))),
        }
        if let Some(extra) = words.next() {
            return Err(err(format!("unexpected token {extra:?}")));
        }
        let key = match section.phase() {
            Phase::Prologue => 0,
            Phase::Body => 1,
            Phase::LoopOverhead => 2,
            Phase::Epilogue => 3,
        };
        phases.entry(key).or_default().push(instr);
    }
    let mut take = |key| phases.remove(&key).unwrap_or_default();
    let template = Template {
        prologue: take(0),
        body: take(1),
        loop_overhead: take(2),
        epilogue: take(3),
    };
    template.validate(name)?;
    let owned = name.to_string();
    Ok(KernelDescriptor::new(
        name,
        "loaded from kernel file; gws = n",
        move |size| {
            let n = require(&owned, "n", size.n)?;
            Ok((n, template.clone()))
        },
    ))
}

/// Loads a kernel file; the kernel is named after the file stem.
pub fn load_kernel_file(path: &Path) -> Result<KernelDescriptor, KernelError> {
    let text = std::fs::read_to_string(path).map_err(|e| KernelError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom");
    parse_kernel_text(name, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(instrs: &[Instr]) -> Vec<InstrClass> {
        instrs.iter().map(|i| i.class).collect()
    }

    #[test]
    fn catalog_has_required_kernels() {
        let names: Vec<String> = builtin_catalog().iter().map(|k| k.name().to_string()).collect();
        for required in [
            "vecadd",
            "saxpy",
            "sgemm-tile",
            "gaussian-blur-1d",
            "nearest-neighbor",
            "gcn-aggregate",
            "dnn-dense-layer",
        ] {
            assert!(names.iter().any(|n| n == required), "{required} missing");
        }
        assert!(lookup("no-such-kernel").is_none());
    }

    #[test]
    fn vecadd_shape() {
        let k = lookup("vecadd").unwrap().instantiate(&ProblemSize::n(128)).unwrap();
        assert_eq!(k.gws, 128);
        assert_eq!(classes(&k.template.body), vec![Load, Load, Alu, Store]);
        assert_eq!(k.template.loop_overhead.len(), 2);
        let one = lookup("vecadd").unwrap().instantiate(&ProblemSize::n(1)).unwrap();
        assert_eq!(one.gws, 1);
    }

    #[test]
    fn sgemm_gws_counts_outputs() {
        let k = lookup("sgemm-tile").unwrap();
        let inst = k.instantiate(&ProblemSize::mnk(16, 16, 16)).unwrap();
        assert_eq!(inst.gws, 256);
        // one store per output element
        let stores = inst.template.body.iter().filter(|i| i.class == Store).count();
        assert_eq!(stores, 1);
        let loads = inst.template.body.iter().filter(|i| i.class == Load).count();
        let alus = inst.template.body.iter().filter(|i| i.class == Alu).count();
        assert!(alus > loads);
        assert_eq!(k.gws_of(&ProblemSize::n(16)).unwrap(), 256);
    }

    #[test]
    fn invalid_sizes_rejected() {
        for kernel in builtin_catalog() {
            let err = kernel.instantiate(&ProblemSize::n(0)).unwrap_err();
            assert!(
                matches!(err, KernelError::InvalidProblemSize { .. }),
                "{}",
                kernel.name()
            );
        }
        let err = lookup("sgemm-tile")
            .unwrap()
            .instantiate(&ProblemSize::mnk(4, 4, 0))
            .unwrap_err();
        assert_eq!(err.to_string(), "kernel sgemm-tile: k must be >= 1");
    }

    #[test]
    fn gcn_loads_are_irregular() {
        let k = lookup("gcn-aggregate")
            .unwrap()
            .instantiate(&ProblemSize::n(64))
            .unwrap();
        assert!(k.template.body.iter().any(|i| i.irregular && i.class == Load));
    }

    #[test]
    fn section_maps_are_total_and_disjoint() {
        for kernel in builtin_catalog() {
            let inst = kernel.instantiate(&ProblemSize::n(8)).unwrap();
            let map = &inst.section_map;
            assert_eq!(map.len_pcs() as usize, inst.template.len());
            let mut next = 0;
            for (range, _) in map.ranges() {
                assert_eq!(range.start, next);
                next = range.end;
            }
            for (pc, instr) in inst.template.iter().enumerate() {
                assert_eq!(map.lookup(pc as u32), Some(&instr.section));
            }
            assert_eq!(map.lookup(map.len_pcs()), None);
        }
    }

    #[test]
    fn section_names_round_trip() {
        for s in [
            "init",
            "dispatch",
            "body",
            "body.inner-product",
            "loop-overhead",
            "epilogue",
        ] {
            assert_eq!(s.parse::<Section>().unwrap().to_string(), s);
        }
        assert!("body.".parse::<Section>().is_err());
        assert!("Body".parse::<Section>().is_err());
    }

    #[test]
    fn kernel_file_parses() {
        let text = "\
# custom copy kernel
[init]
load
[body.copy]
load irregular
[body]
alu
store
[loop-overhead]
alu
branch
[epilogue]
branch
";
        let desc = parse_kernel_text("copy", text).unwrap();
        let inst = desc.instantiate(&ProblemSize::n(32)).unwrap();
        assert_eq!(inst.gws, 32);
        assert_eq!(classes(&inst.template.body), vec![Load, Alu, Store]);
        assert!(inst.template.body[0].irregular);
        assert_eq!(inst.template.body[0].section, Section::part("copy"));
        assert_eq!(inst.section_map.lookup(1), Some(&Section::part("copy")));
    }

    #[test]
    fn kernel_file_errors_name_line() {
        let err = parse_kernel_text("x", "[body]\nload\nmul\n").unwrap_err();
        assert_eq!(
            err,
            KernelError::Parse {
                line: 3,
                message: "unknown instruction class \"mul\"".into()
            }
        );
        let err = parse_kernel_text("x", "alu\n").unwrap_err();
        assert!(matches!(err, KernelError::Parse { line: 1, .. }));
        let err = parse_kernel_text("x", "[body]\nalu\n").unwrap_err();
        assert_eq!(err, KernelError::EmptyBody("x".into()));
        let err = parse_kernel_text("x", "[bogus]\n").unwrap_err();
        assert!(matches!(err, KernelError::Parse { line: 1, .. }));
    }
}
