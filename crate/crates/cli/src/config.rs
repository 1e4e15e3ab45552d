//! Experiment configuration files.
//!
//! One `key = value` entry per line, `#` starts a comment. Keys carry a section
//! prefix (`scenario.`, `algorithm.`, `run.`, `output.`, and one section per command).
//! `scenario = x` and `algorithm = x` are shorthands for the `.name` keys. Every entry
//! must be used by the selected command; anything else is reported as unknown.
//!
//! ```text
//! command = track
//! scenario = periodic_1d
//! algorithm = forward
//! algorithm.eta = 1
//! run.horizon = 10
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use tvvi_core::algorithms::{Algorithm, SlotIndexing, StepSchedule, DEFAULT_DIVERGENCE_THRESHOLD};
use tvvi_core::dynamics::{CellGrid, ClassifyOptions, EtaGrid, ScanConfig, StarScanConfig, DEFAULT_ORBIT_THRESHOLD};
use tvvi_core::scenarios::{build_scenario, BuiltScenario, Params, ScenarioId, ScenarioMeta};
use tvvi_core::vi::SAMPLING_HALF_WIDTH;

use crate::error::{ConfigErrors, FieldError};
use crate::table::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Track,
    Bounds,
    Bifurcation,
    Orbit,
    Star,
    Verify,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Track, Command::Bounds, Command::Bifurcation, Command::Orbit, Command::Star, Command::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Command::Track => "track",
            Command::Bounds => "bounds",
            Command::Bifurcation => "bifurcation",
            Command::Orbit => "orbit",
            Command::Star => "star",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
            format!("unknown command `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub params: Params,
}

impl ScenarioSpec {
    pub fn build(&self) -> tvvi_core::Result<BuiltScenario> {
        build_scenario(self.id, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub horizon: usize,
    pub seed: u64,
    /// Initial play; zeros when absent.
    pub z1: Option<Vec<f64>>,
    pub divergence_threshold: f64,
    pub fail_on_divergence: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            horizon: 100,
            seed: 0,
            z1: None,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
            fail_on_divergence: false,
        }
    }
}

/// Guarantee compared against a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Tracking error of a contractive single-iterate method.
    Contractive,
    /// Dynamic regret of the cyclic learner.
    Cyclic,
    FixedRegret,
    FixedTracking,
    /// Tracking error of the adaptive aggregation.
    Adaptive,
    /// Lower bound against the adaptive adversary.
    Lower,
}

impl BoundKind {
    const ALL: [BoundKind; 6] = [
        BoundKind::Contractive,
        BoundKind::Cyclic,
        BoundKind::FixedRegret,
        BoundKind::FixedTracking,
        BoundKind::Adaptive,
        BoundKind::Lower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Contractive => "contractive",
            BoundKind::Cyclic => "cyclic",
            BoundKind::FixedRegret => "fixed_regret",
            BoundKind::FixedTracking => "fixed_tracking",
            BoundKind::Adaptive => "adaptive",
            BoundKind::Lower => "lower",
        }
    }

    /// Whether the guarantee is on regret rather than tracking error.
    pub fn on_regret(self) -> bool {
        matches!(self, BoundKind::Cyclic | BoundKind::FixedRegret)
    }
}

impl FromStr for BoundKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        BoundKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = BoundKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown bound `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Constants of a bound that do not depend on the run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSpec {
    pub kind: BoundKind,
    /// Contraction factor for [`BoundKind::Contractive`].
    pub c: Option<f64>,
    /// Period `k` of the sequence.
    pub period: Option<usize>,
    pub mu: Option<f64>,
    pub lip: Option<f64>,
    pub gbound: Option<f64>,
    pub diameter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationSpec {
    pub x0: f64,
    /// Rotation of the per-step maps before composing.
    pub phase: usize,
    pub scan: ScanConfig,
}

impl Default for BifurcationSpec {
    fn default() -> Self {
        BifurcationSpec { x0: -0.1, phase: 0, scan: ScanConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitMode {
    Iterate,
    Newton,
    Period3,
}

impl FromStr for OrbitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "iterate" => Ok(OrbitMode::Iterate),
            "newton" => Ok(OrbitMode::Newton),
            "period3" => Ok(OrbitMode::Period3),
            _ => Err(format!("unknown mode `{s}` (expected iterate, newton or period3)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSpec {
    pub mode: OrbitMode,
    pub eta: f64,
    pub phase: usize,
    /// Start point; its first coordinate seeds Newton.
    pub x0: Vec<f64>,
    pub n_steps: usize,
    pub threshold: f64,
    pub period: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub lo: f64,
    pub hi: f64,
    pub n_grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarOutput {
    Summary,
    Series,
    Tail,
}

impl FromStr for StarOutput {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "summary" => Ok(StarOutput::Summary),
            "series" => Ok(StarOutput::Series),
            "tail" => Ok(StarOutput::Tail),
            _ => Err(format!("unknown output `{s}` (expected summary, series or tail)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarSpec {
    pub etas: Vec<f64>,
    pub output: StarOutput,
    /// Seed is taken from `run.seed`.
    pub scan: StarScanConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySpec {
    pub samples: usize,
    pub half_width: f64,
    /// Largest accepted gradient deviation relative to `max(1, field scale)`.
    pub grad_tol: f64,
    /// Rounds checked for sequences without a period.
    pub rounds: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { samples: 1000, half_width: SAMPLING_HALF_WIDTH, grad_tol: 1e-6, rounds: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    /// Standard output when absent.
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub scenario: ScenarioSpec,
    pub algorithm: Option<Algorithm>,
    pub run: RunSpec,
    pub bounds: Option<BoundsSpec>,
    pub bifurcation: Option<BifurcationSpec>,
    pub orbit: Option<OrbitSpec>,
    pub star: Option<StarSpec>,
    pub verify: Option<VerifySpec>,
    pub output: OutputSpec,
}

struct Entry {
    line: usize,
    value: String,
}

/// Key-value entries with use tracking and error collection.
struct Entries {
    map: BTreeMap<String, Entry>,
    used: BTreeSet<String>,
    errors: Vec<FieldError>,
}

impl Entries {
    fn lex(text: &str) -> Self {
        let mut e = Entries { map: BTreeMap::new(), used: BTreeSet::new(), errors: Vec::new() };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                e.errors.push(FieldError {
                    field: content.to_string(),
                    message: "expected `key = value`".into(),
                    line: Some(line),
                });
                continue;
            };
            let key = match key.trim() {
                "scenario" => "scenario.name".to_string(),
                "algorithm" => "algorithm.name".to_string(),
                k => k.to_string(),
            };
            if key.is_empty() || key.contains(char::is_whitespace) {
                e.errors.push(FieldError { field: key, message: "malformed key".into(), line: Some(line) });
                continue;
            }
            if let Some(prev) = e.map.get(&key) {
                e.errors.push(FieldError {
                    field: key,
                    message: format!("duplicate entry (first on line {})", prev.line),
                    line: Some(line),
                });
                continue;
            }
            e.map.insert(key, Entry { line, value: value.trim().to_string() });
        }
        e
    }

    fn error(&mut self, field: &str, message: impl Into<String>) {
        let line = self.map.get(field).map(|e| e.line);
        self.errors.push(FieldError { field: field.to_string(), message: message.into(), line });
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        let v = self.map.get(key)?.value.clone();
        self.used.insert(key.to_string());
        Some(v)
    }

    /// Parsed value, with `check` applied; records an error and returns `None` on failure.
    fn opt<T, E>(&mut self, key: &str, check: impl Fn(&T) -> Result<(), &'static str>) -> Option<T>
    where
        T: FromStr<Err = E>,
        E: Display,
    {
        let raw = self.raw(key)?;
        match raw.parse::<T>() {
            Ok(v) => match check(&v) {
                Ok(()) => Some(v),
                Err(msg) => {
                    self.error(key, format!("{msg}, got `{raw}`"));
                    None
                }
            },
            Err(e) => {
                self.error(key, format!("cannot parse `{raw}`: {e}"));
                None
            }
        }
    }

    fn get<T, E>(&mut self, key: &str, default: T, check: impl Fn(&T) -> Result<(), &'static str>) -> T
    where
        T: FromStr<Err = E>,
        E: Display,
    {
        self.opt(key, check).unwrap_or(default)
    }

    fn require<T, E>(&mut self, key: &str, check: impl Fn(&T) -> Result<(), &'static str>) -> Option<T>
    where
        T: FromStr<Err = E>,
        E: Display,
    {
        if !self.has(key) {
            self.error(key, "required");
            return None;
        }
        self.opt(key, check)
    }

    fn list(&mut self, key: &str) -> Option<Vec<f64>> {
        let raw = self.raw(key)?;
        let parsed: Result<Vec<f64>, _> = raw.split(',').map(|p| p.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) => Some(v),
            _ => {
                self.error(key, format!("expected a comma-separated list of finite numbers, got `{raw}`"));
                None
            }
        }
    }

    /// Value from the file, else from the scenario, else a "missing constant" error.
    fn constant(&mut self, key: &str, fallback: Option<f64>, what: &str) -> Option<f64> {
        if self.has(key) {
            return self.opt(key, positive);
        }
        if fallback.is_none() {
            self.error(key, format!("missing {what}: the scenario does not provide it"));
        }
        fallback
    }
}

fn positive(v: &f64) -> Result<(), &'static str> {
    if *v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err("must be positive")
    }
}

fn positive_count(v: &usize) -> Result<(), &'static str> {
    if *v > 0 {
        Ok(())
    } else {
        Err("must be at least 1")
    }
}

fn finite(v: &f64) -> Result<(), &'static str> {
    if v.is_finite() {
        Ok(())
    } else {
        Err("must be finite")
    }
}

fn fraction(v: &f64) -> Result<(), &'static str> {
    if (0.0..=1.0).contains(v) {
        Ok(())
    } else {
        Err("must lie in [0, 1]")
    }
}

fn any<T>(_: &T) -> Result<(), &'static str> {
    Ok(())
}

const ALGORITHMS: [&str; 5] = ["forward", "resolvent", "cyclic", "meta_fixed", "meta_adaptive"];

fn parse_algorithm(e: &mut Entries, meta: &ScenarioMeta, built: Option<&BuiltScenario>) -> Option<Algorithm> {
    let name: String = e.require("algorithm.name", any)?;
    let algo = match name.as_str() {
        "forward" => Algorithm::ContractiveForward { eta: e.require("algorithm.eta", positive)? },
        "resolvent" => Algorithm::Resolvent,
        "cyclic" => {
            let period = match meta.period {
                Some(p) if !e.has("algorithm.period") => p,
                _ => e.require("algorithm.period", positive_count)?,
            };
            let schedule: String = e.get("algorithm.schedule", "inverse_mu".to_string(), any);
            let schedule = match schedule.as_str() {
                "inverse_mu" => {
                    StepSchedule::InverseMuT(e.constant("algorithm.mu", meta.mu, "strong-monotonicity constant")?)
                }
                "constant" => StepSchedule::Constant(e.require("algorithm.eta", positive)?),
                other => {
                    e.error(
                        "algorithm.schedule",
                        format!("unknown schedule `{other}` (expected inverse_mu or constant)"),
                    );
                    return None;
                }
            };
            let indexing: String = e.get("algorithm.indexing", "shifted".to_string(), any);
            let indexing = match indexing.as_str() {
                "shifted" => SlotIndexing::Shifted,
                "literal" => SlotIndexing::Literal,
                other => {
                    e.error("algorithm.indexing", format!("unknown indexing `{other}` (expected shifted or literal)"));
                    return None;
                }
            };
            Algorithm::CyclicFb { period, schedule, indexing }
        }
        "meta_fixed" => {
            let k = e.require("algorithm.k", positive_count);
            let mu = e.constant("algorithm.mu", meta.mu, "strong-monotonicity constant");
            let gbound = e.constant("algorithm.gbound", meta.gbound, "operator bound G");
            let domain_d = built.and_then(|b| b.domain.diameter());
            let diameter = e.constant("algorithm.diameter", meta.diameter.or(domain_d), "domain diameter D");
            Algorithm::MetaFixed { k: k?, mu: mu?, diameter: Some(diameter?), gbound: gbound? }
        }
        "meta_adaptive" => {
            let k = e.require("algorithm.k", positive_count);
            let mu = e.constant("algorithm.mu", meta.mu, "strong-monotonicity constant");
            let lip = e.constant("algorithm.lip", meta.lip, "Lipschitz constant");
            Algorithm::MetaAdaptive { k: k?, mu: mu?, lip: lip? }
        }
        other => {
            e.error(
                "algorithm.name",
                format!("unknown algorithm `{other}` (expected one of {})", ALGORITHMS.join(", ")),
            );
            return None;
        }
    };
    Some(algo)
}

fn default_bound(algo: &Algorithm, scenario: ScenarioId) -> BoundKind {
    if scenario == ScenarioId::LowerBoundAdversary {
        return BoundKind::Lower;
    }
    match algo {
        Algorithm::ContractiveForward { .. } | Algorithm::Resolvent => BoundKind::Contractive,
        Algorithm::CyclicFb { .. } => BoundKind::Cyclic,
        Algorithm::MetaFixed { .. } => BoundKind::FixedRegret,
        Algorithm::MetaAdaptive { .. } => BoundKind::Adaptive,
    }
}

/// `√(1 − 2ημ + η²L²)` for a forward step, `1/(1 + μ)` for the resolvent.
fn contraction_factor(algo: &Algorithm, meta: &ScenarioMeta) -> Option<f64> {
    let mu = meta.mu?;
    match *algo {
        Algorithm::ContractiveForward { eta } => {
            let lip = meta.lip?;
            let c2 = 1.0 - 2.0 * eta * mu + eta * eta * lip * lip;
            (c2 > 0.0).then(|| c2.sqrt())
        }
        Algorithm::Resolvent => Some(1.0 / (1.0 + mu)),
        _ => None,
    }
}

fn parse_bounds(e: &mut Entries, algo: &Algorithm, scenario: ScenarioId, built: &BuiltScenario) -> Option<BoundsSpec> {
    let meta = &built.meta;
    let kind = e.get("bounds.kind", default_bound(algo, scenario), any);
    let mut spec = BoundsSpec { kind, c: None, period: None, mu: None, lip: None, gbound: None, diameter: None };
    let algo_period = match algo {
        Algorithm::CyclicFb { period, .. } => Some(*period),
        _ => None,
    };
    let algo_mu = match algo {
        Algorithm::CyclicFb { schedule: StepSchedule::InverseMuT(mu), .. }
        | Algorithm::MetaFixed { mu, .. }
        | Algorithm::MetaAdaptive { mu, .. } => Some(*mu),
        _ => None,
    };
    let diameter = meta.diameter.or_else(|| built.domain.diameter());
    match kind {
        BoundKind::Contractive => {
            if !matches!(algo, Algorithm::ContractiveForward { .. } | Algorithm::Resolvent) {
                e.error("bounds.kind", "the contractive bound needs algorithm forward or resolvent");
                return None;
            }
            let unit = |c: &f64| if *c > 0.0 && *c < 1.0 { Ok(()) } else { Err("must lie in (0, 1)") };
            let c = match e.opt::<f64, _>("bounds.c", unit) {
                Some(c) => c,
                None if e.has("bounds.c") => return None,
                None => match contraction_factor(algo, meta) {
                    Some(c) if c < 1.0 => c,
                    _ => {
                        let msg =
                            "missing contraction factor: the step is not a contraction for the scenario's μ and L";
                        e.error("bounds.c", msg);
                        return None;
                    }
                },
            };
            spec.c = Some(c);
        }
        BoundKind::Cyclic => {
            spec.period = Some(match algo_period {
                Some(p) if !e.has("bounds.period") => p,
                _ => e.require("bounds.period", positive_count)?,
            });
            spec.mu = Some(e.constant("bounds.mu", algo_mu.or(meta.mu), "strong-monotonicity constant")?);
            spec.gbound = Some(e.constant("bounds.gbound", meta.gbound, "operator bound G")?);
        }
        BoundKind::FixedRegret | BoundKind::FixedTracking | BoundKind::Adaptive => {
            if !matches!(algo, Algorithm::MetaFixed { .. } | Algorithm::MetaAdaptive { .. }) {
                e.error("bounds.kind", format!("`{}` needs a meta algorithm", kind.name()));
                return None;
            }
            spec.period = Some(match meta.period {
                Some(p) if !e.has("bounds.period") => p,
                _ => e.require("bounds.period", positive_count)?,
            });
            if kind == BoundKind::Adaptive {
                let (mu, lip) = match *algo {
                    Algorithm::MetaAdaptive { mu, lip, .. } => (Some(mu), Some(lip)),
                    _ => (meta.mu, meta.lip),
                };
                spec.mu = Some(e.constant("bounds.mu", mu, "strong-monotonicity constant")?);
                spec.lip = Some(e.constant("bounds.lip", lip, "Lipschitz constant")?);
            } else {
                let (mu, g, d) = match *algo {
                    Algorithm::MetaFixed { mu, gbound, diameter, .. } => (Some(mu), Some(gbound), diameter),
                    _ => (meta.mu, meta.gbound, diameter),
                };
                spec.mu = Some(e.constant("bounds.mu", mu, "strong-monotonicity constant")?);
                spec.gbound = Some(e.constant("bounds.gbound", g, "operator bound G")?);
                spec.diameter = Some(e.constant("bounds.diameter", d, "domain diameter D")?);
            }
        }
        BoundKind::Lower => {
            spec.diameter = Some(e.constant("bounds.diameter", diameter, "domain diameter D")?);
        }
    }
    Some(spec)
}

fn parse_bifurcation(e: &mut Entries) -> BifurcationSpec {
    let d = BifurcationSpec::default();
    let c = d.scan.classify;
    let etas = match e.list("bifurcation.etas") {
        Some(v) => EtaGrid::Explicit(v),
        None => {
            let EtaGrid::Uniform { lo, hi, n } = d.scan.etas else { unreachable!() };
            EtaGrid::Uniform {
                lo: e.get("bifurcation.eta_lo", lo, finite),
                hi: e.get("bifurcation.eta_hi", hi, positive),
                n: e.get("bifurcation.eta_n", n, positive_count),
            }
        }
    };
    BifurcationSpec {
        x0: e.get("bifurcation.x0", d.x0, finite),
        phase: e.get("bifurcation.phase", d.phase, any),
        scan: ScanConfig {
            etas,
            cells: CellGrid {
                lo: e.get("bifurcation.cell_lo", d.scan.cells.lo, finite),
                hi: e.get("bifurcation.cell_hi", d.scan.cells.hi, finite),
                n_cells: e.get("bifurcation.n_cells", d.scan.cells.n_cells, positive_count),
            },
            classify: ClassifyOptions {
                n_steps: e.get("bifurcation.n_steps", c.n_steps, positive_count),
                burn_in: e.get("bifurcation.burn_in", c.burn_in, any),
                tol: e.get("bifurcation.tol", c.tol, positive),
                max_period: e.get("bifurcation.max_period", c.max_period, positive_count),
                threshold: e.get("bifurcation.threshold", c.threshold, positive),
            },
        },
    }
}

fn parse_orbit(e: &mut Entries, dim: usize) -> Option<OrbitSpec> {
    let mode = e.get("orbit.mode", OrbitMode::Iterate, any);
    let eta = e.require("orbit.eta", positive);
    let x0 = e.list("orbit.x0").unwrap_or_else(|| vec![-0.1; dim]);
    if x0.len() != dim {
        e.error("orbit.x0", format!("expected {dim} coordinates"));
    }
    if mode != OrbitMode::Iterate && dim != 1 {
        e.error("orbit.mode", "newton and period3 need a one-dimensional scenario");
    }
    Some(OrbitSpec {
        mode,
        eta: eta?,
        phase: e.get("orbit.phase", 0, any),
        x0,
        n_steps: e.get("orbit.n_steps", 200, positive_count),
        threshold: e.get("orbit.threshold", DEFAULT_ORBIT_THRESHOLD, positive),
        period: e.get("orbit.period", 1, positive_count),
        tol: e.get("orbit.tol", 1e-10, positive),
        max_iter: e.get("orbit.max_iter", 100, positive_count),
        lo: e.get("orbit.lo", -2.5, finite),
        hi: e.get("orbit.hi", 2.5, finite),
        n_grid: e.get("orbit.n_grid", 2001, positive_count),
    })
}

fn parse_star(e: &mut Entries, seed: u64) -> Option<StarSpec> {
    if !e.has("star.eta") {
        e.error("star.eta", "required");
    }
    let etas = e.list("star.eta");
    if let Some(v) = &etas {
        if v.iter().any(|x| *x <= 0.0) {
            e.error("star.eta", "step sizes must be positive");
        }
    }
    let d = StarScanConfig::default();
    let scan = StarScanConfig {
        n_samples: e.get("star.n_samples", d.n_samples, positive_count),
        half_width: e.get("star.half_width", d.half_width, positive),
        n_steps: e.get("star.n_steps", d.n_steps, positive_count),
        tail_fraction: e.get("star.tail_fraction", d.tail_fraction, fraction),
        seed,
        threshold: e.get("star.threshold", d.threshold, positive),
        radial_eps: e.get("star.radial_eps", d.radial_eps, positive),
        segment_points: e.get("star.segment_points", d.segment_points, positive_count),
        segment_coverage: e.get("star.segment_coverage", d.segment_coverage, fraction),
        probe_stride: e.get("star.probe_stride", d.probe_stride, positive_count),
    };
    Some(StarSpec { etas: etas?, output: e.get("star.output", StarOutput::Summary, any), scan })
}

fn parse_verify(e: &mut Entries) -> VerifySpec {
    let d = VerifySpec::default();
    VerifySpec {
        samples: e.get("verify.samples", d.samples, positive_count),
        half_width: e.get("verify.half_width", d.half_width, positive),
        grad_tol: e.get("verify.grad_tol", d.grad_tol, positive),
        rounds: e.get("verify.rounds", d.rounds, positive_count),
    }
}

fn scenario_params(e: &mut Entries) -> Params {
    let keys: Vec<String> =
        e.map.keys().filter(|k| k.starts_with("scenario.") && *k != "scenario.name").cloned().collect();
    let mut params = Params::new();
    for k in keys {
        let v = e.raw(&k).unwrap_or_default();
        params.insert(&k["scenario.".len()..], v);
    }
    params
}

fn default_scenario(command: Command) -> Option<ScenarioId> {
    match command {
        Command::Bifurcation | Command::Orbit => Some(ScenarioId::Chaos1d),
        Command::Star => Some(ScenarioId::Star2d),
        _ => None,
    }
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut e = Entries::lex(text);
    let command: Option<Command> = e.require("command", any);
    let format = e.get("output.format", Format::Csv, any);
    let path = e.raw("output.path").map(PathBuf::from);
    let seed = e.get("run.seed", 0u64, any);
    let params = scenario_params(&mut e);

    let Some(command) = command else {
        return Err(ConfigErrors(e.errors));
    };

    let id = match (e.opt::<ScenarioId, _>("scenario.name", any), default_scenario(command)) {
        (Some(id), _) => Some(id),
        (None, d) if !e.has("scenario.name") => {
            if d.is_none() {
                e.error("scenario.name", format!("required for command `{}`", command.name()));
            }
            d
        }
        _ => None,
    };
    let built = id.and_then(|id| match build_scenario(id, &params) {
        Ok(b) => Some(b),
        Err(tvvi_core::Error::Config { field, reason }) => {
            let field = if field.starts_with("scenario") { field } else { format!("scenario.{field}") };
            e.error(&field, reason);
            None
        }
        Err(err) => {
            e.error("scenario.name", err.to_string());
            None
        }
    });
    let meta = built.as_ref().map(|b| b.meta.clone()).unwrap_or_default();
    let dim = built.as_ref().map(|b| b.sequence.dim());

    let mut run = RunSpec { seed, ..RunSpec::default() };
    let mut algorithm = None;
    let mut bounds = None;
    let (mut bifurcation, mut orbit, mut star, mut verify) = (None, None, None, None);
    match command {
        Command::Track | Command::Bounds => {
            run.horizon = e.get("run.horizon", run.horizon, positive_count);
            run.divergence_threshold = e.get("run.divergence_threshold", run.divergence_threshold, positive);
            run.fail_on_divergence = e.get("run.fail_on_divergence", false, any);
            run.z1 = e.list("run.z1");
            if let (Some(z1), Some(dim)) = (&run.z1, dim) {
                if z1.len() != dim {
                    e.error("run.z1", format!("expected {dim} coordinates"));
                }
            }
            algorithm = parse_algorithm(&mut e, &meta, built.as_ref());
            if command == Command::Bounds {
                if let (Some(algo), Some(id), Some(b)) = (&algorithm, id, &built) {
                    bounds = parse_bounds(&mut e, algo, id, b);
                }
            }
        }
        Command::Bifurcation => {
            if dim.is_some_and(|d| d != 1) {
                e.error("scenario.name", "bifurcation scans need a one-dimensional scenario");
            }
            bifurcation = Some(parse_bifurcation(&mut e));
        }
        Command::Orbit => {
            run.fail_on_divergence = e.get("run.fail_on_divergence", false, any);
            orbit = dim.and_then(|d| parse_orbit(&mut e, d));
        }
        Command::Star => {
            run.fail_on_divergence = e.get("run.fail_on_divergence", false, any);
            star = parse_star(&mut e, seed);
        }
        Command::Verify => verify = Some(parse_verify(&mut e)),
    }
    if matches!(command, Command::Bifurcation | Command::Orbit | Command::Star)
        && meta.period.is_none()
        && built.is_some()
    {
        e.error("scenario.name", format!("command `{}` needs a periodic scenario", command.name()));
    }

    let unknown: Vec<String> = e.map.keys().filter(|k| !e.used.contains(*k)).cloned().collect();
    for k in unknown {
        e.error(&k, format!("unknown key for command `{}`", command.name()));
    }
    if !e.errors.is_empty() {
        e.errors.sort_by_key(|f| f.line.unwrap_or(usize::MAX));
        return Err(ConfigErrors(e.errors));
    }
    Ok(ExperimentConfig {
        command,
        scenario: ScenarioSpec { id: id.expect("checked"), params },
        algorithm,
        run,
        bounds,
        bifurcation,
        orbit,
        star,
        verify,
        output: OutputSpec { path, format },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_track() {
        let cfg = parse_config(
            "command = track\nscenario = periodic_1d\nalgorithm = forward\nalgorithm.eta = 1\nrun.horizon = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.command, Command::Track);
        assert_eq!(cfg.scenario.id, ScenarioId::Periodic1d);
        assert_eq!(cfg.algorithm, Some(Algorithm::ContractiveForward { eta: 1.0 }));
        assert_eq!(cfg.run.horizon, 10);
        assert_eq!(cfg.output, OutputSpec::default());
    }

    #[test]
    fn negative_eta_names_the_field() {
        let err = parse_config("command = track\nscenario = periodic_1d\nalgorithm = forward\nalgorithm.eta = -1\n")
            .unwrap_err();
        assert_eq!(err.fields(), vec!["algorithm.eta"]);
        assert_eq!(err.0[0].line, Some(4));
    }

    #[test]
    fn bifurcation_defaults() {
        let cfg = parse_config("command = bifurcation\n").unwrap();
        assert_eq!(cfg.scenario.id, ScenarioId::Chaos1d);
        let b = cfg.bifurcation.unwrap();
        assert_eq!(b.x0, -0.1);
        assert_eq!(b.scan.etas, EtaGrid::Uniform { lo: 0.0, hi: 8.0, n: 3000 });
        assert_eq!(b.scan.cells, CellGrid { lo: -10.0, hi: 10.0, n_cells: 1000 });
        let c = b.scan.classify;
        assert_eq!((c.n_steps, c.burn_in, c.threshold), (2000, 1000, 1000.0));
    }

    #[test]
    fn collects_every_error() {
        let text = "command = track\nscenario = nowhere\nalgorithm = sideways\nrun.horizon = 0\nfoo.bar = 1\nrun.horizon = 3\n";
        let err = parse_config(text).unwrap_err();
        let fields = err.fields();
        for f in ["scenario.name", "algorithm.name", "run.horizon", "foo.bar"] {
            assert!(fields.contains(&f), "{f} missing from {fields:?}");
        }
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn keys_of_other_commands_are_unknown() {
        let err = parse_config("command = bifurcation\nalgorithm.eta = 1\n").unwrap_err();
        assert_eq!(err.fields(), vec!["algorithm.eta"]);
        let err = parse_config("command = verify\nscenario = chaos_1d\nstar.eta = 1\n").unwrap_err();
        assert_eq!(err.fields(), vec!["star.eta"]);
    }

    #[test]
    fn missing_constants() {
        let err =
            parse_config("command = track\nscenario = quadratic_drift\nalgorithm = meta_fixed\nalgorithm.k = 2\n")
                .unwrap_err();
        let fields = err.fields();
        assert!(fields.contains(&"algorithm.gbound") && fields.contains(&"algorithm.diameter"));
        let ok = parse_config(
            "command = track\nscenario = quadratic_drift\nalgorithm = meta_fixed\nalgorithm.k = 2\nalgorithm.gbound = 3\nalgorithm.diameter = 4\n",
        )
        .unwrap();
        assert_eq!(ok.algorithm, Some(Algorithm::MetaFixed { k: 2, mu: 1.0, diameter: Some(4.0), gbound: 3.0 }));
    }

    #[test]
    fn scenario_params_are_forwarded_and_checked() {
        let cfg = parse_config("command = verify\nscenario = quadratic_drift\nscenario.b = 0.5\n").unwrap();
        assert_eq!(cfg.scenario.params.get("b"), Some("0.5"));
        let err = parse_config("command = verify\nscenario = chaos_1d\nscenario.zeta = 1\n").unwrap_err();
        assert_eq!(err.fields(), vec!["scenario.zeta"]);
    }

    #[test]
    fn bounds_defaults_follow_the_algorithm() {
        let cfg = parse_config("command = bounds\nscenario = periodic_1d\nscenario.radius = 1\nalgorithm = cyclic\n")
            .unwrap();
        let b = cfg.bounds.unwrap();
        assert_eq!((b.kind, b.period, b.mu, b.gbound), (BoundKind::Cyclic, Some(2), Some(1.0), Some(8.0)));
        let cfg =
            parse_config("command = bounds\nscenario = quadratic_drift\nalgorithm = forward\nalgorithm.eta = 0.5\n")
                .unwrap();
        let b = cfg.bounds.unwrap();
        assert_eq!(b.kind, BoundKind::Contractive);
        assert!((b.c.unwrap() - 0.5).abs() < 1e-15);
        let err = parse_config("command = bounds\nscenario = periodic_1d\nalgorithm = forward\nalgorithm.eta = 1\n")
            .unwrap_err();
        assert_eq!(err.fields(), vec!["bounds.c"]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\ncommand = orbit   # trailing\norbit.eta = 3.9\norbit.mode = newton\norbit.period = 4\n";
        let cfg = parse_config(text).unwrap();
        let o = cfg.orbit.unwrap();
        assert_eq!((o.mode, o.eta, o.period, o.x0.clone()), (OrbitMode::Newton, 3.9, 4, vec![-0.1]));
        assert!(parse_config("command\n").is_err());
        assert!(parse_config("").unwrap_err().fields() == vec!["command"]);
    }

    #[test]
    fn star_and_orbit_validation() {
        let err = parse_config("command = star\nstar.eta = 1, -2\n").unwrap_err();
        assert_eq!(err.fields(), vec!["star.eta"]);
        let err =
            parse_config("command = orbit\nscenario = star_2d\norbit.eta = 1\norbit.mode = period3\n").unwrap_err();
        assert_eq!(err.fields(), vec!["orbit.mode"]);
        let err = parse_config("command = bifurcation\nscenario = quadratic_drift\n").unwrap_err();
        assert_eq!(err.fields(), vec!["scenario.name"]);
    }
}
