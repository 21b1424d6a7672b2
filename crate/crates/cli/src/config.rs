//! TOML experiment configuration.
//!
//! Parsing never stops at the first problem: every unknown key, malformed
//! value and missing field is collected, each tagged with its dotted field
//! name and, where it can be found, the line it sits on.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use alab_core::estimators::ProbabilityMode;
use alab_core::{Boundary, Ensemble, FiniteVolume, FreeOperator, HalfOpenInterval, McConfig, Measure};
use serde::Serialize;
use toml::{Table, Value};

/// Experiment names accepted in the `experiment` field, with a one-line summary.
pub const EXPERIMENTS: &[(&str, &str)] = &[
    ("wegner", "mean eigenvalue count in I against Q(|I|)|Λ|"),
    ("minami", "pair statistics N1 N2 - min(N1,N2) and, for nested pairs, N1(N2 - 1)"),
    ("generalized", "sigma-ordered falling products over up to five intervals"),
    ("probability", "P{N >= n}, the staircase event, or the two-interval distance bound"),
    ("spectral-avg", "rank-one spectral averages against Q_mu(|I|) by quadrature"),
    ("appendix-a", "rank-one identity, (a, b) inequality, averaged resolvent, Lebesgue average"),
    ("truncation", "a counting statistic under truncated couplings as the cutoff grows"),
    ("multiplicity", "probability of N eigenvalues in a window of length L^-q, per scale"),
    ("spacings", "unfolded level spacings against Exp(1) (diagnostic, never fails the run)"),
    ("oracle-suite", "inertia counts against full diagonalization, and rank-one interlacing"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Wegner,
    Minami,
    Generalized,
    Probability,
    SpectralAvg,
    AppendixA,
    Truncation,
    Multiplicity,
    Spacings,
    OracleSuite,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Wegner => "wegner",
            Experiment::Minami => "minami",
            Experiment::Generalized => "generalized",
            Experiment::Probability => "probability",
            Experiment::SpectralAvg => "spectral-avg",
            Experiment::AppendixA => "appendix-a",
            Experiment::Truncation => "truncation",
            Experiment::Multiplicity => "multiplicity",
            Experiment::Spacings => "spacings",
            Experiment::OracleSuite => "oracle-suite",
        }
    }

    fn needs_lattice(self) -> bool {
        matches!(
            self,
            Experiment::Wegner
                | Experiment::Minami
                | Experiment::Generalized
                | Experiment::Probability
                | Experiment::Truncation
                | Experiment::Spacings
        )
    }

    fn needs_measure(self) -> bool {
        !matches!(self, Experiment::OracleSuite)
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "wegner" => Experiment::Wegner,
            "minami" => Experiment::Minami,
            "generalized" => Experiment::Generalized,
            "probability" => Experiment::Probability,
            "spectral-avg" => Experiment::SpectralAvg,
            "appendix-a" => Experiment::AppendixA,
            "truncation" => Experiment::Truncation,
            "multiplicity" => Experiment::Multiplicity,
            "spacings" => Experiment::Spacings,
            "oracle-suite" => Experiment::OracleSuite,
            other => {
                let names: Vec<&str> = EXPERIMENTS.iter().map(|(n, _)| *n).collect();
                return Err(format!("unknown experiment {other:?}; valid names: {}", names.join(", ")));
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub sides: Vec<usize>,
    pub free: String,
    pub boundary: Boundary,
    pub measures: Vec<Measure>,
}

impl EnsembleSpec {
    pub fn free_operator(&self) -> FreeOperator {
        match self.free.as_str() {
            "laplacian" => FreeOperator::laplacian(self.boundary),
            _ => FreeOperator::adjacency(self.boundary),
        }
    }

    pub fn build(&self) -> alab_core::Result<Ensemble> {
        Ensemble::new(
            FiniteVolume::new(self.sides.clone())?,
            self.free_operator(),
            self.measures.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

/// Experiment-specific settings; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    /// `n` values for `P{N >= n}`.
    pub n: Vec<usize>,
    pub mode: ProbabilityMode,
    pub cutoffs: Vec<f64>,
    /// Statistic followed by `truncation`: `wegner` or `minami`.
    pub statistic: Experiment,
    pub k_min: u32,
    pub k_max: u32,
    pub margin: f64,
    pub dimension: usize,
    pub model_size: usize,
    /// Seed of the random rank-one model; the Monte Carlo seed when absent.
    pub model_seed: Option<u64>,
    pub energies: Vec<f64>,
    pub eps: Vec<f64>,
    pub kappa: Vec<f64>,
    pub depth: u32,
    pub tolerance: f64,
    /// Half-width of the Lebesgue window; derived from `H_0` when absent.
    pub window: Option<f64>,
    pub matrices: u64,
    pub intervals_per: usize,
    pub configurations: u64,
}

impl Params {
    fn defaults() -> Self {
        Self {
            n: vec![2],
            mode: ProbabilityMode::SingleN,
            cutoffs: vec![1.0, 2.0, 3.0, 4.0],
            statistic: Experiment::Wegner,
            k_min: 3,
            k_max: 5,
            margin: 0.1,
            dimension: 1,
            model_size: 8,
            model_seed: None,
            energies: vec![0.5],
            eps: vec![0.01],
            kappa: vec![1.0],
            depth: 40,
            tolerance: 1e-7,
            window: None,
            matrices: 200,
            intervals_per: 10,
            configurations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub ensemble: Option<EnsembleSpec>,
    pub intervals: Vec<HalfOpenInterval>,
    pub mc: McConfig,
    pub output: OutputSpec,
    pub params: Params,
}

impl ExperimentConfig {
    /// A configuration for the built-in oracle suites.
    pub fn oracle_suite(seed: u64) -> Self {
        Self {
            experiment: Experiment::OracleSuite,
            ensemble: None,
            intervals: Vec::new(),
            mc: McConfig::new(1, seed).with_workers(default_workers()),
            output: OutputSpec::default(),
            params: Params::defaults(),
        }
    }
}

/// One configuration problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

const TOP_KEYS: &[&str] = &["experiment", "intervals", "ensemble", "mc", "output", "params"];
const ENSEMBLE_KEYS: &[&str] = &["sides", "free", "boundary", "measure", "measures"];
const MC_KEYS: &[&str] = &["seed", "samples", "confidence", "workers", "bound_scale"];
const OUTPUT_KEYS: &[&str] = &["csv", "json"];
const PARAM_KEYS: &[&str] = &[
    "n",
    "mode",
    "cutoffs",
    "statistic",
    "k_min",
    "k_max",
    "margin",
    "dimension",
    "model_size",
    "model_seed",
    "energies",
    "eps",
    "kappa",
    "depth",
    "tolerance",
    "window",
    "matrices",
    "intervals_per",
    "configurations",
];

struct Collector<'a> {
    text: &'a str,
    errors: Vec<ConfigError>,
}

impl<'a> Collector<'a> {
    fn push(&mut self, section: Option<&str>, key: &str, message: impl Into<String>) {
        let field = match section {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        };
        self.errors.push(ConfigError {
            line: line_of(self.text, section, key),
            field,
            message: message.into(),
        });
    }

    fn table<'t>(&mut self, root: &'t Table, key: &str) -> Option<&'t Table> {
        match root.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.push(None, key, "expected a table");
                None
            }
        }
    }

    fn unknown_keys(&mut self, section: Option<&str>, table: &Table, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.push(section, key, format!("unknown key; expected one of {}", allowed.join(", ")));
            }
        }
    }

    fn string(&mut self, section: Option<&str>, t: &Table, key: &str) -> Option<String> {
        match t.get(key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.push(section, key, "expected a string");
                None
            }
        }
    }

    fn unsigned(&mut self, section: Option<&str>, t: &Table, key: &str) -> Option<u64> {
        match t.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.push(section, key, "expected a nonnegative integer");
                None
            }
        }
    }

    fn float(&mut self, section: Option<&str>, t: &Table, key: &str) -> Option<f64> {
        match t.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.push(section, key, "expected a number");
                None
            }
        }
    }

    fn list<T>(
        &mut self,
        section: Option<&str>,
        t: &Table,
        key: &str,
        item: impl Fn(&Value) -> Option<T>,
        what: &str,
    ) -> Option<Vec<T>> {
        let v = t.get(key)?;
        let items: Vec<&Value> = match v {
            Value::Array(a) => a.iter().collect(),
            other => vec![other],
        };
        let parsed: Option<Vec<T>> = items.iter().map(|x| item(x)).collect();
        if parsed.is_none() || items.is_empty() {
            self.push(section, key, format!("expected a nonempty list of {what}"));
        }
        parsed.filter(|p| !p.is_empty())
    }

    fn floats(&mut self, section: Option<&str>, t: &Table, key: &str) -> Option<Vec<f64>> {
        self.list(
            section,
            t,
            key,
            |v| match v {
                Value::Float(x) => Some(*x),
                Value::Integer(i) => Some(*i as f64),
                _ => None,
            },
            "numbers",
        )
    }

    fn unsigneds(&mut self, section: Option<&str>, t: &Table, key: &str) -> Option<Vec<u64>> {
        self.list(
            section,
            t,
            key,
            |v| match v {
                Value::Integer(i) if *i >= 0 => Some(*i as u64),
                _ => None,
            },
            "nonnegative integers",
        )
    }

    fn strings(&mut self, section: Option<&str>, t: &Table, key: &str) -> Option<Vec<String>> {
        self.list(
            section,
            t,
            key,
            |v| match v {
                Value::String(s) => Some(s.clone()),
                _ => None,
            },
            "strings",
        )
    }
}

/// Line (1-based) of `key = ...` inside `[section]`, or at top level.
fn line_of(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.split(']').next().map(|s| s.trim().to_string());
            continue;
        }
        if current.as_deref() != section {
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            if k.trim().trim_matches('"') == key {
                return Some(i + 1);
            }
        }
    }
    None
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigErrors(vec![ConfigError {
            field: "<document>".into(),
            line,
            message: e.message().to_string(),
        }])
    })?;
    let mut c = Collector {
        text,
        errors: Vec::new(),
    };
    c.unknown_keys(None, &root, TOP_KEYS);

    let experiment = match c.string(None, &root, "experiment") {
        None => {
            if !root.contains_key("experiment") {
                c.push(None, "experiment", "missing");
            }
            None
        }
        Some(name) => match name.parse::<Experiment>() {
            Ok(e) => Some(e),
            Err(msg) => {
                c.push(None, "experiment", msg);
                None
            }
        },
    };

    // mc
    let mc_table = c.table(&root, "mc");
    let empty = Table::new();
    let mc_t = mc_table.unwrap_or(&empty);
    let sec = Some("mc");
    c.unknown_keys(sec, mc_t, MC_KEYS);
    let seed = c.unsigned(sec, mc_t, "seed");
    if !mc_t.contains_key("seed") {
        c.push(sec, "seed", "missing; a seed is mandatory");
    }
    let samples = c.unsigned(sec, mc_t, "samples").unwrap_or(1000);
    if samples == 0 {
        c.push(sec, "samples", "must be positive");
    }
    let confidence = c.float(sec, mc_t, "confidence").unwrap_or(0.99);
    if !(confidence > 0.0 && confidence < 1.0) {
        c.push(sec, "confidence", format!("must lie in ]0,1[, got {confidence}"));
    }
    let workers = c
        .unsigned(sec, mc_t, "workers")
        .map_or_else(default_workers, |w| w as usize);
    let bound_scale = c.float(sec, mc_t, "bound_scale").unwrap_or(1.0);
    if !(bound_scale >= 0.0 && bound_scale.is_finite()) {
        c.push(sec, "bound_scale", "must be finite and nonnegative");
    }
    let mut mc = McConfig::new(samples, seed.unwrap_or(0))
        .with_confidence(confidence)
        .with_workers(workers);
    mc.bound_scale = bound_scale;

    // intervals
    let mut intervals = Vec::new();
    if let Some(v) = root.get("intervals") {
        match v {
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    let field = format!("intervals[{i}]");
                    match item.as_str().map(str::parse::<HalfOpenInterval>) {
                        Some(Ok(iv)) => intervals.push(iv),
                        Some(Err(e)) => c.push(None, "intervals", format!("{field}: {e}")),
                        None => c.push(None, "intervals", format!("{field}: expected a string \"]a,b]\"")),
                    }
                }
            }
            _ => c.push(None, "intervals", "expected an array of \"]a,b]\" strings"),
        }
    }

    // ensemble
    let ensemble = match c.table(&root, "ensemble") {
        None => None,
        Some(t) => parse_ensemble(&mut c, t),
    };

    // output
    let mut output = OutputSpec::default();
    if let Some(t) = c.table(&root, "output") {
        let sec = Some("output");
        c.unknown_keys(sec, t, OUTPUT_KEYS);
        output.csv = c.string(sec, t, "csv").map(PathBuf::from);
        output.json = c.string(sec, t, "json").map(PathBuf::from);
    }

    // params
    let mut params = Params::defaults();
    if let Some(t) = c.table(&root, "params") {
        parse_params(&mut c, t, &mut params);
    }

    if let Some(exp) = experiment {
        check_requirements(&mut c, exp, ensemble.as_ref(), &intervals, &params);
    }

    if c.errors.is_empty() {
        Ok(ExperimentConfig {
            experiment: experiment.expect("no errors"),
            ensemble,
            intervals,
            mc,
            output,
            params,
        })
    } else {
        Err(ConfigErrors(c.errors))
    }
}

fn parse_ensemble(c: &mut Collector<'_>, t: &Table) -> Option<EnsembleSpec> {
    let sec = Some("ensemble");
    c.unknown_keys(sec, t, ENSEMBLE_KEYS);
    let before = c.errors.len();
    let sides = c
        .unsigneds(sec, t, "sides")
        .map(|v| v.into_iter().map(|x| x as usize).collect::<Vec<_>>())
        .unwrap_or_default();
    if sides.contains(&0) {
        c.push(sec, "sides", "every side must be positive");
    }
    let free = c.string(sec, t, "free").unwrap_or_else(|| "adjacency".into());
    if !matches!(free.as_str(), "adjacency" | "laplacian") {
        c.push(sec, "free", format!("expected adjacency or laplacian, got {free:?}"));
    }
    let boundary = match c.string(sec, t, "boundary").as_deref() {
        None | Some("simple") => Boundary::Simple,
        Some("periodic") => Boundary::Periodic,
        Some(other) => {
            c.push(sec, "boundary", format!("expected simple or periodic, got {other:?}"));
            Boundary::Simple
        }
    };
    let mut texts = Vec::new();
    if let Some(m) = c.string(sec, t, "measure") {
        texts.push(("measure", m));
    }
    if let Some(ms) = c.strings(sec, t, "measures") {
        texts.extend(ms.into_iter().map(|m| ("measures", m)));
    }
    if t.contains_key("measure") && t.contains_key("measures") {
        c.push(sec, "measures", "give either measure or measures, not both");
    }
    let mut measures = Vec::new();
    for (key, text) in texts {
        match text.parse::<Measure>() {
            Ok(m) => measures.push(m),
            Err(e) => c.push(sec, key, format!("{text:?}: {e}")),
        }
    }
    if measures.is_empty() && c.errors.len() == before {
        c.push(sec, "measure", "missing");
    }
    if c.errors.len() > before {
        return None;
    }
    Some(EnsembleSpec {
        sides,
        free,
        boundary,
        measures,
    })
}

fn parse_params(c: &mut Collector<'_>, t: &Table, p: &mut Params) {
    let sec = Some("params");
    c.unknown_keys(sec, t, PARAM_KEYS);
    if let Some(n) = c.unsigneds(sec, t, "n") {
        if n.contains(&0) {
            c.push(sec, "n", "n must be at least 1");
        }
        p.n = n.into_iter().map(|x| x as usize).collect();
    }
    if let Some(mode) = c.string(sec, t, "mode") {
        p.mode = match mode.as_str() {
            "single-n" => ProbabilityMode::SingleN,
            "staircase" => ProbabilityMode::Staircase,
            "pair-distance" => ProbabilityMode::PairDistance,
            other => {
                c.push(sec, "mode", format!("expected single-n, staircase or pair-distance, got {other:?}"));
                p.mode
            }
        };
    }
    if let Some(cut) = c.floats(sec, t, "cutoffs") {
        if cut.iter().any(|m| !(*m > 0.0)) {
            c.push(sec, "cutoffs", "cutoffs must be positive");
        }
        p.cutoffs = cut;
    }
    if let Some(s) = c.string(sec, t, "statistic") {
        match s.as_str() {
            "wegner" => p.statistic = Experiment::Wegner,
            "minami" => p.statistic = Experiment::Minami,
            other => c.push(sec, "statistic", format!("expected wegner or minami, got {other:?}")),
        }
    }
    if let Some(k) = c.unsigned(sec, t, "k_min") {
        p.k_min = k.min(u32::MAX as u64) as u32;
    }
    if let Some(k) = c.unsigned(sec, t, "k_max") {
        p.k_max = k.min(u32::MAX as u64) as u32;
    }
    if p.k_min > p.k_max || p.k_max > 20 {
        c.push(sec, "k_max", format!("need k_min <= k_max <= 20, got {}..{}", p.k_min, p.k_max));
    }
    if let Some(m) = c.float(sec, t, "margin") {
        if !(m > 0.0) {
            c.push(sec, "margin", "must be positive");
        }
        p.margin = m;
    }
    if let Some(d) = c.unsigned(sec, t, "dimension") {
        if d == 0 {
            c.push(sec, "dimension", "must be positive");
        }
        p.dimension = d as usize;
    }
    if let Some(n) = c.unsigned(sec, t, "model_size") {
        if n == 0 || n > 64 {
            c.push(sec, "model_size", "must lie in 1..=64");
        }
        p.model_size = n as usize;
    }
    if let Some(s) = c.unsigned(sec, t, "model_seed") {
        p.model_seed = Some(s);
    }
    if let Some(e) = c.floats(sec, t, "energies") {
        p.energies = e;
    }
    for (key, slot) in [("eps", &mut p.eps), ("kappa", &mut p.kappa)] {
        if let Some(v) = c.floats(sec, t, key) {
            if v.iter().any(|x| !(*x > 0.0)) {
                c.push(sec, key, "values must be positive");
            }
            *slot = v;
        }
    }
    if let Some(d) = c.unsigned(sec, t, "depth") {
        if d == 0 {
            c.push(sec, "depth", "must be at least 1");
        }
        p.depth = d.min(64) as u32;
    }
    if let Some(tol) = c.float(sec, t, "tolerance") {
        if !(tol > 0.0) {
            c.push(sec, "tolerance", "must be positive");
        }
        p.tolerance = tol;
    }
    if let Some(w) = c.float(sec, t, "window") {
        if !(w > 0.0) {
            c.push(sec, "window", "must be positive");
        }
        p.window = Some(w);
    }
    if let Some(m) = c.unsigned(sec, t, "matrices") {
        p.matrices = m;
    }
    if let Some(m) = c.unsigned(sec, t, "intervals_per") {
        p.intervals_per = m as usize;
    }
    if let Some(m) = c.unsigned(sec, t, "configurations") {
        p.configurations = m;
    }
}

fn check_requirements(
    c: &mut Collector<'_>,
    exp: Experiment,
    ensemble: Option<&EnsembleSpec>,
    intervals: &[HalfOpenInterval],
    params: &Params,
) {
    if exp.needs_measure() && ensemble.is_none() && c.errors.iter().all(|e| !e.field.starts_with("ensemble")) {
        c.push(None, "ensemble", format!("{} needs an [ensemble] table with a measure", exp.name()));
    }
    if let Some(e) = ensemble {
        if exp.needs_lattice() {
            if e.sides.is_empty() {
                c.push(Some("ensemble"), "sides", format!("{} needs the box sides", exp.name()));
            } else if let Err(err) = e.build() {
                c.push(Some("ensemble"), "measures", err.to_string());
            }
        }
        if exp == Experiment::Multiplicity && e.measures.len() != 1 {
            c.push(Some("ensemble"), "measures", "multiplicity takes a single measure");
        }
    }
    let count = intervals.len();
    let malformed = c.errors.iter().any(|e| e.field == "intervals");
    let need = |c: &mut Collector<'_>, ok: bool, what: &str| {
        if !ok && !malformed {
            c.push(None, "intervals", format!("{} needs {what}, got {count}", exp.name()));
        }
    };
    match exp {
        Experiment::Wegner | Experiment::SpectralAvg => need(c, count >= 1, "at least one interval"),
        Experiment::Minami => need(c, count == 1 || count == 2, "one or two intervals"),
        Experiment::Generalized => need(c, (1..=5).contains(&count), "one to five intervals"),
        Experiment::Probability => match params.mode {
            ProbabilityMode::SingleN => need(c, count == 1, "exactly one interval for single-n"),
            ProbabilityMode::Staircase => need(c, (1..=5).contains(&count), "one to five intervals"),
            ProbabilityMode::PairDistance => need(c, count == 2, "exactly two intervals"),
        },
        Experiment::Truncation => match params.statistic {
            Experiment::Minami => need(c, count == 1 || count == 2, "one or two intervals"),
            _ => need(c, count == 1, "exactly one interval"),
        },
        Experiment::Multiplicity | Experiment::Spacings => need(c, count == 1, "exactly one interval"),
        Experiment::AppendixA | Experiment::OracleSuite => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WEGNER: &str = r#"
experiment = "wegner"
intervals = ["]-0.025,0.025]"]

[ensemble]
sides = [32]
measure = "uniform(0,1)"

[mc]
seed = 7
samples = 100
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(WEGNER).unwrap();
        assert_eq!(cfg.experiment, Experiment::Wegner);
        assert_eq!(cfg.mc.confidence, 0.99);
        assert_eq!(cfg.mc.workers, default_workers());
        assert_eq!(cfg.mc.bound_scale, 1.0);
        assert_eq!(cfg.ensemble.unwrap().free, "adjacency");
    }

    #[test]
    fn reversed_interval_names_field() {
        let text = WEGNER.replace("]-0.025,0.025]", "]0.4,0.2]");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].field, "intervals");
        assert!(err.0[0].message.contains("intervals[0]"));
        assert_eq!(err.0[0].line, Some(3));
    }

    #[test]
    fn unknown_experiment_lists_names() {
        let text = WEGNER.replace("\"wegner\"", "\"wegnr\"");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0[0].message.contains("spectral-avg"));
    }

    #[test]
    fn all_errors_are_collected() {
        let text = r#"
experiment = "wegner"
color = "blue"
intervals = ["]1,0]", "]0,1]"]

[ensemble]
sides = [4]
measure = "uniform(0,1)"
shape = 3

[mc]
samples = 10
"#;
        let err = parse_config(text).unwrap_err();
        let fields: Vec<&str> = err.0.iter().map(|e| e.field.as_str()).collect();
        assert!(fields.contains(&"color"));
        assert!(fields.contains(&"ensemble.shape"));
        assert!(fields.contains(&"mc.seed"));
        assert!(fields.contains(&"intervals"));
        let seed = err.0.iter().find(|e| e.field == "mc.seed").unwrap();
        assert!(seed.message.contains("mandatory"));
        let shape = err.0.iter().find(|e| e.field == "ensemble.shape").unwrap();
        assert_eq!(shape.line, Some(9));
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config("experiment = \"wegner\"\nmc = [\n").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(err.0[0].line.is_some());
    }

    #[test]
    fn interval_arity_by_experiment() {
        let text = WEGNER.replace("\"wegner\"", "\"probability\"").replace(
            "[mc]",
            "[params]\nmode = \"pair-distance\"\n\n[mc]",
        );
        let err = parse_config(&text).unwrap_err();
        assert!(err.0[0].message.contains("exactly two"));
    }
}
