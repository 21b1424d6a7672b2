//! Experiment dispatch and report emission.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use alab_core::eigencount::HalfOpenInterval;
use alab_core::estimators::{
    check_generalized, check_minami_pair, check_probability, check_wegner, sample_rng,
    truncation_convergence, with_workers, BoundReport, McConfig, ProbabilityMode, Statistic,
};
use alab_core::experiments::{
    counting_oracle_suite, default_fit_scales, event_b_probability, interlacing_suite,
    plan_with_fit, spacing_statistics, OracleSummary,
};
use alab_core::measures::holder_fit;
use alab_core::rank_one::{
    ab_pair, averaged_im_resolvent, bounded_density_average, optimize_kappa, resolvent_pair,
    spectral_average, Complex64, Quadrature, RankOneModel,
};
use alab_core::Measure;
use anyhow::{anyhow, Context, Result};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};

/// Threshold on the spacing p-value below which the diagnostic is flagged.
pub const SPACING_P_THRESHOLD: f64 = 0.01;

/// A scalar comparison `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub experiment: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// Whether a failure changes the exit status.
    #[serde(skip)]
    pub gating: bool,
}

impl Comparison {
    fn gating(experiment: impl Into<String>, lhs: f64, rhs: f64, pass: bool) -> Self {
        Self {
            experiment: experiment.into(),
            lhs,
            rhs,
            pass,
            gating: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub reports: Vec<BoundReport>,
    pub comparisons: Vec<Comparison>,
    pub details: Value,
}

impl RunOutcome {
    /// True when every report and every gating comparison passes.
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
            && self.comparisons.iter().filter(|c| c.gating).all(|c| c.pass)
    }

    /// One line per report or comparison.
    pub fn summary_lines(&self) -> Vec<String> {
        let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
        let mut lines: Vec<String> = self
            .reports
            .iter()
            .map(|r| {
                format!(
                    "{} {} n={} samples={} mean={:.6} ci=[{:.6}, {:.6}] bound={:.6} ratio={:.4}",
                    verdict(r.pass),
                    r.experiment,
                    r.degree,
                    r.samples,
                    r.empirical_mean,
                    r.ci_low,
                    r.ci_high,
                    r.bound,
                    r.ratio
                )
            })
            .collect();
        lines.extend(self.comparisons.iter().map(|c| {
            let tag = if c.gating { verdict(c.pass) } else if c.pass { "NOTE" } else { "WARN" };
            format!("{tag} {} lhs={:.6e} rhs={:.6e}", c.experiment, c.lhs, c.rhs)
        }));
        lines
    }

    /// CSV: bound reports as `experiment,n,samples,empirical,ci_low,ci_high,bound,ratio,pass`,
    /// otherwise comparisons as `experiment,lhs,rhs,pass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if !self.reports.is_empty() || self.comparisons.is_empty() {
            w.write_record([
                "experiment", "n", "samples", "empirical", "ci_low", "ci_high", "bound", "ratio", "pass",
            ])?;
            for r in &self.reports {
                w.write_record([
                    r.experiment.clone(),
                    r.degree.to_string(),
                    r.samples.to_string(),
                    r.empirical_mean.to_string(),
                    r.ci_low.to_string(),
                    r.ci_high.to_string(),
                    r.bound.to_string(),
                    r.ratio.to_string(),
                    r.pass.to_string(),
                ])?;
            }
        } else {
            w.write_record(["experiment", "lhs", "rhs", "pass"])?;
            for c in &self.comparisons {
                w.write_record([
                    c.experiment.clone(),
                    c.lhs.to_string(),
                    c.rhs.to_string(),
                    c.pass.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// JSON mirror with the configuration echo; the timestamp lives only here.
    pub fn to_json(&self, config: &ExperimentConfig) -> Value {
        json!({
            "timestamp": chrono::Utc::now().to_rfc3339(),
            "config": config,
            "all_pass": self.all_pass(),
            "reports": self.reports,
            "comparisons": self.comparisons,
            "details": self.details,
        })
    }
}

pub fn write_artifacts(config: &ExperimentConfig, outcome: &RunOutcome) -> Result<()> {
    if let Some(path) = &config.output.csv {
        let file = create(path)?;
        outcome
            .write_csv(file)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &config.output.json {
        let file = create(path)?;
        serde_json::to_writer_pretty(file, &outcome.to_json(config))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

/// Runs the configured experiment on a pool of `mc.workers` threads.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutcome> {
    let mut inner = config.clone();
    inner.mc.workers = 0;
    with_workers(config.mc.workers, || dispatch(&inner))?
        .with_context(|| format!("experiment {}", config.experiment.name()))
}

fn dispatch(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    match cfg.experiment {
        Experiment::Wegner => wegner(cfg),
        Experiment::Minami => minami(cfg),
        Experiment::Generalized => generalized(cfg),
        Experiment::Probability => probability(cfg),
        Experiment::Truncation => truncation(cfg),
        Experiment::Multiplicity => multiplicity(cfg),
        Experiment::Spacings => Ok(spacings(cfg)),
        Experiment::SpectralAvg => spectral_avg(cfg),
        Experiment::AppendixA => appendix_a(cfg),
        Experiment::OracleSuite => oracle_suite(cfg),
    }
}

fn ensemble(cfg: &ExperimentConfig) -> Result<alab_core::Ensemble> {
    let spec = cfg
        .ensemble
        .as_ref()
        .ok_or_else(|| anyhow!("missing [ensemble]"))?;
    Ok(spec.build()?)
}

fn measures(cfg: &ExperimentConfig) -> Result<&[Measure]> {
    cfg.ensemble
        .as_ref()
        .map(|e| e.measures.as_slice())
        .ok_or_else(|| anyhow!("missing [ensemble]"))
}

fn renamed(mut r: BoundReport, name: String) -> BoundReport {
    r.experiment = name;
    r
}

fn only_reports(reports: Vec<BoundReport>, details: Value) -> RunOutcome {
    RunOutcome {
        reports,
        comparisons: Vec::new(),
        details,
    }
}

fn wegner(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let e = ensemble(cfg)?;
    let reports = cfg
        .intervals
        .iter()
        .enumerate()
        .map(|(k, i)| Ok(renamed(check_wegner(&e, i, &cfg.mc)?, format!("wegner:I{k}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(only_reports(reports, json!({ "sites": e.sites() })))
}

fn pair(cfg: &ExperimentConfig) -> (HalfOpenInterval, HalfOpenInterval) {
    let first = cfg.intervals[0];
    (first, *cfg.intervals.get(1).unwrap_or(&first))
}

fn minami(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let e = ensemble(cfg)?;
    let (a, b) = pair(cfg);
    let r = check_minami_pair(&e, &a, &b, &cfg.mc)?;
    let mut reports = vec![r.general];
    reports.extend(r.nested);
    Ok(only_reports(reports, json!({ "sites": e.sites(), "nested": a.is_subset_of(&b) })))
}

fn generalized(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let e = ensemble(cfg)?;
    let r = check_generalized(&e, &cfg.intervals, &cfg.mc)?;
    let details = json!({
        "sites": e.sites(),
        "m_lower_bound": r.m_lower_bound(),
        "observed_sigmas": r.observed_sigmas,
    });
    let mut reports = vec![r.factorial];
    reports.extend(r.nested);
    Ok(only_reports(reports, details))
}

fn probability(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let e = ensemble(cfg)?;
    let reports = match cfg.params.mode {
        ProbabilityMode::SingleN => cfg
            .params
            .n
            .iter()
            .map(|&n| {
                let r = check_probability(&e, &cfg.intervals, ProbabilityMode::SingleN, n, &cfg.mc)?;
                Ok(renamed(r, format!("probability-single-n:n{n}")))
            })
            .collect::<Result<Vec<_>>>()?,
        mode => vec![check_probability(&e, &cfg.intervals, mode, 0, &cfg.mc)?],
    };
    Ok(only_reports(reports, json!({ "sites": e.sites() })))
}

fn truncation(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let e = ensemble(cfg)?;
    let statistic = match cfg.params.statistic {
        Experiment::Minami => {
            let (a, b) = pair(cfg);
            Statistic::MinamiPair(a, b)
        }
        _ => Statistic::Wegner(cfg.intervals[0]),
    };
    let study = truncation_convergence(&e, &statistic, &cfg.params.cutoffs, &cfg.mc)?;
    let rows: Vec<Value> = study
        .rows
        .iter()
        .map(|r| {
            json!({
                "cutoff": r.cutoff,
                "normalizer": r.normalizer,
                "mean": r.report.empirical_mean,
                "difference": r.difference,
                "combined_radius": r.combined_radius,
            })
        })
        .collect();
    let mut reports = vec![renamed(study.baseline.clone(), "truncation:baseline".into())];
    reports.extend(
        study
            .rows
            .iter()
            .map(|r| renamed(r.report.clone(), format!("truncation:M{}", r.cutoff))),
    );
    Ok(only_reports(reports, json!({ "rows": rows })))
}

fn multiplicity(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let spec = cfg
        .ensemble
        .as_ref()
        .ok_or_else(|| anyhow!("missing [ensemble]"))?;
    let p = &cfg.params;
    let measure = &spec.measures[0];
    let fit = holder_fit(measure, &default_fit_scales())?;
    let plan = plan_with_fit(measure, fit, p.dimension, cfg.intervals[0], p.k_min..=p.k_max, p.margin)?
        .with_free(spec.free_operator());
    let mut reports = Vec::new();
    let mut scales = Vec::new();
    for &side in &plan.scales {
        let r = event_b_probability(&plan, side, &cfg.mc)?;
        scales.push(json!({
            "side": side,
            "frequency": r.empirical_mean,
            "bound": r.bound,
            "covering_intervals": plan.covering(side)?.count,
        }));
        reports.push(renamed(r, format!("event-b:L{side}")));
    }
    let details = json!({
        "plan": plan,
        "scale_exponent": plan.scale_exponent(),
        "scales": scales,
    });
    Ok(only_reports(reports, details))
}

fn spacings(cfg: &ExperimentConfig) -> RunOutcome {
    let result = ensemble(cfg).and_then(|e| Ok(spacing_statistics(&e, &cfg.intervals[0], &cfg.mc)?));
    let (comparison, details) = match result {
        Ok(s) => (
            Comparison {
                experiment: "spacings-ks-pvalue".into(),
                lhs: SPACING_P_THRESHOLD,
                rhs: s.p_value,
                pass: s.p_value > SPACING_P_THRESHOLD,
                gating: false,
            },
            json!({ "spacings": s.count, "ks_distance": s.ks_distance, "p_value": s.p_value }),
        ),
        Err(err) => (
            Comparison {
                experiment: "spacings-ks-pvalue".into(),
                lhs: SPACING_P_THRESHOLD,
                rhs: f64::NAN,
                pass: false,
                gating: false,
            },
            json!({ "error": err.to_string() }),
        ),
    };
    RunOutcome {
        reports: Vec::new(),
        comparisons: vec![comparison],
        details,
    }
}

fn model(cfg: &ExperimentConfig) -> Result<RankOneModel> {
    let seed = cfg.params.model_seed.unwrap_or(cfg.mc.seed);
    Ok(RankOneModel::random(cfg.params.model_size, &mut sample_rng(seed, 0))?)
}

fn quadrature(cfg: &ExperimentConfig) -> Quadrature {
    Quadrature {
        max_depth: cfg.params.depth,
        tolerance: cfg.params.tolerance,
    }
}

fn spectral_avg(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let m = model(cfg)?;
    let quad = quadrature(cfg);
    let mut comparisons = Vec::new();
    let mut kappa = Vec::new();
    for (j, mu) in measures(cfg)?.iter().enumerate() {
        for (k, i) in cfg.intervals.iter().enumerate() {
            let r = spectral_average(&m, mu, i, &quad)?;
            comparisons.push(Comparison::gating(format!("spectral-avg:mu{j}:I{k}"), r.value, r.bound, r.pass));
            if let Ok(opt) = optimize_kappa(mu, i.len()) {
                kappa.push(json!({ "measure": mu, "interval": i, "optimum": opt }));
            }
        }
    }
    Ok(RunOutcome {
        reports: Vec::new(),
        comparisons,
        details: json!({ "model_size": m.dim(), "kappa": kappa }),
    })
}

fn appendix_a(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let m = model(cfg)?;
    let quad = quadrature(cfg);
    let checks = cfg.mc.samples;
    let seed = cfg.mc.seed;

    let mut worst_gap: f64 = 0.0;
    let mut worst_b: f64 = f64::INFINITY;
    for i in 0..checks {
        let mut rng = sample_rng(seed, i);
        let omega = rng.random_range(-5.0..5.0);
        let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(1e-3..1.0));
        let (direct, identity) = resolvent_pair(&m, omega, z)?;
        worst_gap = worst_gap.max((direct - identity).norm() / (1.0 + identity.norm()));
        let (e, eps, kappa) = (
            rng.random_range(-3.0..3.0),
            rng.random_range(1e-3..1.0),
            2f64.powf(rng.random_range(-4.0..4.0)),
        );
        let (_, b) = ab_pair(&m, e, eps, kappa)?;
        worst_b = worst_b.min(2.0 * b / kappa);
    }
    let mut comparisons = vec![
        Comparison::gating("appendix-a:rank1", worst_gap, 1e-10, worst_gap <= 1e-10),
        Comparison::gating("appendix-a:b1", 1.0, worst_b, worst_b >= 1.0 - 1e-12),
    ];
    for (j, mu) in measures(cfg)?.iter().enumerate() {
        for &e in &cfg.params.energies {
            for &eps in &cfg.params.eps {
                for &kappa in &cfg.params.kappa {
                    let r = averaged_im_resolvent(&m, mu, e, eps, kappa, &quad)?;
                    comparisons.push(Comparison::gating(
                        format!("appendix-a:genav:mu{j}:E{e}:eps{eps}:kappa{kappa}"),
                        r.lhs,
                        r.rhs,
                        r.pass,
                    ));
                }
            }
        }
    }
    for (k, i) in cfg.intervals.iter().enumerate() {
        let needed = m.norm_bound() + i.lo().abs().max(i.hi().abs());
        let w = cfg.params.window.unwrap_or(10.0 * needed + 1.0);
        let r = bounded_density_average(&m, i, w, &quad)?;
        comparisons.push(Comparison::gating(
            format!("appendix-a:lebesgue:I{k}"),
            r.lebesgue_value,
            r.bound,
            r.pass,
        ));
    }
    Ok(RunOutcome {
        reports: Vec::new(),
        comparisons,
        details: json!({ "model_size": m.dim(), "identity_checks": checks }),
    })
}

fn oracle_row(s: &OracleSummary) -> Comparison {
    Comparison::gating(format!("oracle:{}", s.name), s.failures as f64, 0.0, s.pass())
}

fn oracle_suite(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let p = &cfg.params;
    let counting = counting_oracle_suite(p.matrices, p.intervals_per, cfg.mc.seed)?;
    let interlacing = interlacing_suite(p.configurations, cfg.mc.seed)?;
    Ok(RunOutcome {
        reports: Vec::new(),
        comparisons: vec![oracle_row(&counting), oracle_row(&interlacing)],
        details: json!({ "suites": [counting, interlacing] }),
    })
}

/// Applies command-line overrides on top of a parsed configuration.
pub fn apply_overrides(
    config: &mut ExperimentConfig,
    seed: Option<u64>,
    samples: Option<u64>,
    workers: Option<usize>,
    csv: Option<std::path::PathBuf>,
    json: Option<std::path::PathBuf>,
) -> Result<()> {
    if let Some(s) = seed {
        config.mc.seed = s;
    }
    if let Some(n) = samples {
        config.mc.samples = n;
    }
    if let Some(w) = workers {
        config.mc.workers = w;
    }
    if csv.is_some() {
        config.output.csv = csv;
    }
    if json.is_some() {
        config.output.json = json;
    }
    McConfig::validate(&config.mc)?;
    Ok(())
}
