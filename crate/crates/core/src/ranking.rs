//! Omega-at-hurdle ranking of projects and the Ω(μ*) sensitivity curves.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cashflow::ScenarioSet;
use crate::distribution::{
    crossing_with, omega_sign, validate_grid, Crossing, EmpiricalDistribution, OmegaResult,
    OmegaValue, Summary,
};
use crate::error::{AppraiseError, Result};
use crate::metrics::{evaluate, thresholds, EvaluationResult, HurdleSpec};
use crate::term_structure::YieldCurve;

/// Relative spread under which per-scenario thresholds count as one value.
const THRESHOLD_SPREAD_TOLERANCE: f64 = 1e-12;
/// Half-width of the slope stencil as a fraction of the metric's std.
const SLOPE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Npv,
    Mu,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Npv => "npv",
            Metric::Mu => "mu",
        }
    }

    fn of(&self, e: &EvaluationResult) -> f64 {
        match self {
            Metric::Npv => e.npv,
            Metric::Mu => e.annualized_return,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = AppraiseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "npv" => Ok(Metric::Npv),
            "mu" => Ok(Metric::Mu),
            other => Err(AppraiseError::InvalidSpec {
                field: "metric".into(),
                message: format!("unknown metric `{other}`, expected npv or mu"),
            }),
        }
    }
}

/// A project's per-scenario evaluations against one yield curve.
#[derive(Debug, Clone)]
pub struct EvaluatedProject {
    id: String,
    horizon: usize,
    evaluations: Vec<EvaluationResult>,
    weights: Vec<f64>,
    npv: EmpiricalDistribution,
    mu: EmpiricalDistribution,
}

impl EvaluatedProject {
    pub fn new(set: &ScenarioSet, curve: &YieldCurve) -> Result<Self> {
        Self::evaluate_with(set, curve, true)
    }

    /// `parallel = false` evaluates on the calling thread; output is the same.
    pub fn evaluate_with(set: &ScenarioSet, curve: &YieldCurve, parallel: bool) -> Result<Self> {
        let evaluations: Vec<EvaluationResult> = if parallel {
            set.scenarios()
                .par_iter()
                .map(|s| evaluate(s, curve))
                .collect::<Result<_>>()?
        } else {
            set.scenarios()
                .iter()
                .map(|s| evaluate(s, curve))
                .collect::<Result<_>>()?
        };
        Self::from_parts(
            set.project_id(),
            set.horizon(),
            evaluations,
            set.weights().to_vec(),
        )
    }

    pub fn from_parts(
        id: impl Into<String>,
        horizon: usize,
        evaluations: Vec<EvaluationResult>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let npv = EmpiricalDistribution::new(
            evaluations.iter().map(|e| e.npv).collect(),
            weights.clone(),
        )?;
        let mu = EmpiricalDistribution::new(
            evaluations.iter().map(|e| e.annualized_return).collect(),
            weights.clone(),
        )?;
        Ok(Self {
            id: id.into(),
            horizon,
            evaluations,
            weights,
            npv,
            mu,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// In scenario order.
    pub fn evaluations(&self) -> &[EvaluationResult] {
        &self.evaluations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn distribution(&self, metric: Metric) -> &EmpiricalDistribution {
        match metric {
            Metric::Npv => &self.npv,
            Metric::Mu => &self.mu,
        }
    }

    /// The hurdle expressed in `metric` units, one value per scenario.
    pub fn scenario_thresholds(
        &self,
        hurdle: HurdleSpec,
        metric: Metric,
        curve: &YieldCurve,
    ) -> Result<Vec<f64>> {
        let mut last: Option<(f64, f64)> = None;
        self.evaluations
            .iter()
            .map(|e| {
                let basis = e.basis_outlay();
                if let Some((b, v)) = last {
                    if b == basis {
                        return Ok(v);
                    }
                }
                let set = thresholds(hurdle, basis, curve, self.horizon)?;
                let v = match metric {
                    Metric::Npv => set.npv_star,
                    Metric::Mu => set.mu_star,
                };
                last = Some((basis, v));
                Ok(v)
            })
            .collect()
    }

    /// Ω of `metric` at the hurdle.
    pub fn omega_at(
        &self,
        hurdle: HurdleSpec,
        metric: Metric,
        curve: &YieldCurve,
    ) -> Result<HurdleOmega> {
        let per_scenario = self.scenario_thresholds(hurdle, metric, curve)?;
        let dist = self.distribution(metric);
        let (lo, hi) = per_scenario
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if hi - lo <= THRESHOLD_SPREAD_TOLERANCE * lo.abs().max(hi.abs()).max(1.0) {
            let result = dist.omega(per_scenario[0]);
            return Ok(HurdleOmega {
                threshold: per_scenario[0],
                threshold_varies: false,
                result,
                slope: slope(dist, per_scenario[0]),
            });
        }
        // Outlay differs across scenarios, so each scenario carries its own
        // threshold: rank on the excess over it, evaluated at zero.
        let excess = EmpiricalDistribution::new(
            self.evaluations
                .iter()
                .zip(&per_scenario)
                .map(|(e, t)| metric.of(e) - t)
                .collect(),
            self.weights.clone(),
        )?;
        let reported = self
            .weights
            .iter()
            .zip(&per_scenario)
            .map(|(w, t)| w * t)
            .sum();
        let mut result = excess.omega(0.0);
        result.threshold = reported;
        Ok(HurdleOmega {
            threshold: reported,
            threshold_varies: true,
            result,
            slope: slope(&excess, 0.0),
        })
    }
}

/// Ω at a hurdle. When scenarios have different outlays `threshold` is the
/// probability-weighted mean of the per-scenario thresholds and
/// `threshold_varies` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurdleOmega {
    pub threshold: f64,
    pub threshold_varies: bool,
    pub result: OmegaResult,
    pub slope: Option<f64>,
}

/// Central-difference `dΩ/dΛ`, `None` when Ω is not finite on both sides.
fn slope(dist: &EmpiricalDistribution, at: f64) -> Option<f64> {
    let std = dist.summarize().std_dev;
    if !(std > 0.0) {
        return None;
    }
    let h = SLOPE_STEP * std;
    match (dist.omega(at - h).omega, dist.omega(at + h).omega) {
        (OmegaValue::Finite(lo), OmegaValue::Finite(hi)) => Some((hi - lo) / (2.0 * h)),
        _ => None,
    }
}

/// Ω at each `μ*` of `mu_grid`. The `threshold` field of every point holds
/// the grid value.
pub fn omega_vs_hurdle(
    project: &EvaluatedProject,
    metric: Metric,
    curve: &YieldCurve,
    mu_grid: &[f64],
) -> Result<Vec<OmegaResult>> {
    validate_grid(mu_grid)?;
    mu_grid
        .iter()
        .map(|&mu| {
            let mut r = project.omega_at(HurdleSpec::MuStar(mu), metric, curve)?.result;
            r.threshold = mu;
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingEntry {
    /// 1-based position in the order.
    pub rank: usize,
    pub project_id: String,
    pub threshold: f64,
    pub threshold_varies: bool,
    pub omega: OmegaValue,
    pub call: f64,
    pub put: f64,
    /// `Ω >= 1`.
    pub accept: bool,
    pub summary: Summary,
    /// Local `dΩ/dΛ` at the hurdle; diagnostic only, not used in the order.
    pub omega_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCrossing {
    pub project_a: String,
    pub project_b: String,
    /// Brackets in `μ*`.
    pub intervals: Vec<Crossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingReport {
    pub hurdle: HurdleSpec,
    pub metric: Metric,
    pub entries: Vec<RankingEntry>,
    pub order: Vec<String>,
    /// Projects whose Ω is indeterminate at the hurdle.
    pub excluded: Vec<String>,
    pub warnings: Vec<String>,
    pub crossings: Vec<PairCrossing>,
}

/// Ranks by Ω at the hurdle, best first. Infinite Ω sorts above every
/// finite value. Ties go to the higher mean, then the lower standard
/// deviation, then the smaller id; two infinite values compare on call
/// first. Indeterminate projects are dropped with a warning.
///
/// With `mu_grid`, every pair of ranked projects also gets the `μ*`
/// intervals where their Ω curves cross.
pub fn rank(
    projects: &[EvaluatedProject],
    curve: &YieldCurve,
    hurdle: HurdleSpec,
    metric: Metric,
    mu_grid: Option<&[f64]>,
) -> Result<RankingReport> {
    if projects.is_empty() {
        return Err(AppraiseError::EmptySet);
    }
    let scored: Vec<(HurdleOmega, Summary)> = projects
        .par_iter()
        .map(|p| {
            let h = p.omega_at(hurdle, metric, curve)?;
            Ok((h, p.distribution(metric).summarize()))
        })
        .collect::<Result<_>>()?;

    let mut candidates = Vec::new();
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    for (p, (h, summary)) in projects.iter().zip(scored) {
        if !h.result.omega.is_determinate() {
            warnings.push(format!(
                "project {}: Ω indeterminate at threshold {}, excluded",
                p.id(),
                h.threshold
            ));
            excluded.push(p.id().to_string());
            continue;
        }
        candidates.push(RankingEntry {
            rank: 0,
            project_id: p.id().to_string(),
            threshold: h.threshold,
            threshold_varies: h.threshold_varies,
            omega: h.result.omega,
            call: h.result.call,
            put: h.result.put,
            accept: accepts(&h.result.omega),
            summary,
            omega_slope: h.slope,
        });
    }
    if candidates.is_empty() {
        return Err(AppraiseError::NoRankableProject);
    }
    excluded.sort();
    warnings.sort();
    let entries = order_entries(candidates);
    let order = entries.iter().map(|e| e.project_id.clone()).collect();

    let crossings = match mu_grid {
        Some(grid) => {
            let mut ranked: Vec<&EvaluatedProject> = projects
                .iter()
                .filter(|p| !excluded.iter().any(|x| x == p.id()))
                .collect();
            ranked.sort_by(|a, b| a.id().cmp(b.id()));
            pair_crossings(&ranked, metric, curve, grid)?
        }
        None => Vec::new(),
    };

    Ok(RankingReport {
        hurdle,
        metric,
        entries,
        order,
        excluded,
        warnings,
        crossings,
    })
}

fn accepts(omega: &OmegaValue) -> bool {
    match *omega {
        OmegaValue::Finite(v) => v >= 1.0,
        OmegaValue::Infinite => true,
        OmegaValue::Indeterminate => false,
    }
}

fn pair_crossings(
    projects: &[&EvaluatedProject],
    metric: Metric,
    curve: &YieldCurve,
    grid: &[f64],
) -> Result<Vec<PairCrossing>> {
    let curves: Vec<Vec<OmegaResult>> = projects
        .par_iter()
        .map(|p| omega_vs_hurdle(p, metric, curve, grid))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for i in 0..projects.len() {
        for j in i + 1..projects.len() {
            let (a, b) = (projects[i], projects[j]);
            let intervals = crossing_with(&curves[i], &curves[j], |mu| {
                let hurdle = HurdleSpec::MuStar(mu);
                match (a.omega_at(hurdle, metric, curve), b.omega_at(hurdle, metric, curve)) {
                    (Ok(x), Ok(y)) => omega_sign(&x.result.omega, &y.result.omega),
                    _ => 0,
                }
            })?;
            out.push(PairCrossing {
                project_a: a.id().to_string(),
                project_b: b.id().to_string(),
                intervals,
            });
        }
    }
    Ok(out)
}

/// Sorts best first and assigns ranks. Exact values give a total order
/// first; runs of finite Ω within the tie tolerance of their leader are then
/// re-ordered by the tie-break, so the result does not depend on input order.
fn order_entries(mut entries: Vec<RankingEntry>) -> Vec<RankingEntry> {
    entries.sort_by(exact_order);
    let mut out = Vec::with_capacity(entries.len());
    let mut rest = entries.into_iter().peekable();
    while let Some(leader) = rest.next() {
        let mut group = vec![leader];
        while let Some(next) = rest.peek() {
            if group[0].omega.partial_cmp_value(&next.omega) == Some(Ordering::Equal) {
                group.push(rest.next().unwrap());
            } else {
                break;
            }
        }
        group.sort_by(tie_break);
        out.extend(group);
    }
    for (i, e) in out.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    out
}

fn exact_order(a: &RankingEntry, b: &RankingEntry) -> Ordering {
    let key = |e: &RankingEntry| match e.omega {
        OmegaValue::Infinite => f64::INFINITY,
        other => other.as_f64(),
    };
    key(b).total_cmp(&key(a)).then_with(|| tie_break(a, b))
}

fn tie_break(a: &RankingEntry, b: &RankingEntry) -> Ordering {
    let calls = if matches!(a.omega, OmegaValue::Infinite) && matches!(b.omega, OmegaValue::Infinite)
    {
        b.call.total_cmp(&a.call)
    } else {
        Ordering::Equal
    };
    calls
        .then_with(|| b.summary.mean.total_cmp(&a.summary.mean))
        .then_with(|| a.summary.std_dev.total_cmp(&b.summary.std_dev))
        .then_with(|| a.project_id.cmp(&b.project_id))
}

/// Ranks bare distributions, each at its own threshold.
pub fn rank_distributions(
    candidates: &[(String, EmpiricalDistribution, f64)],
) -> Result<Vec<RankingEntry>> {
    let entries: Vec<RankingEntry> = candidates
        .iter()
        .filter_map(|(id, dist, t)| {
            let r = dist.omega(*t);
            r.omega.is_determinate().then(|| RankingEntry {
                rank: 0,
                project_id: id.clone(),
                threshold: *t,
                threshold_varies: false,
                omega: r.omega,
                call: r.call,
                put: r.put,
                accept: accepts(&r.omega),
                summary: dist.summarize(),
                omega_slope: slope(dist, *t),
            })
        })
        .collect();
    if entries.is_empty() {
        return Err(AppraiseError::NoRankableProject);
    }
    Ok(order_entries(entries))
}
