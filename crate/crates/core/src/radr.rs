//! Conventional risk-adjusted discount rate valuation on vertically averaged
//! cash flows, with its certainty-equivalent decomposition and the implied
//! separation scale `Λ^RADR`.

use serde::{Deserialize, Serialize};

use crate::cashflow::{compensated_sum, CashFlowScenario, ScenarioSet};
use crate::error::{AppraiseError, Result};
use crate::metrics::mirr;

/// How intermediate negative flows are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadrMode {
    /// Reject any negative flow after `t = 0`.
    #[default]
    CanonicalStrict,
    /// Discount every mean flow at `k`, whatever its sign, and finance mean
    /// outflows at `k` inside MIRR.
    PaperTable4,
}

impl RadrMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RadrMode::CanonicalStrict => "canonical-strict",
            RadrMode::PaperTable4 => "paper-table4",
        }
    }
}

impl std::str::FromStr for RadrMode {
    type Err = AppraiseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical-strict" => Ok(RadrMode::CanonicalStrict),
            "paper-table4" => Ok(RadrMode::PaperTable4),
            other => Err(AppraiseError::InvalidSpec {
                field: "mode".into(),
                message: format!("unknown mode `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadrInput<'a> {
    pub scenario_set: &'a ScenarioSet,
    /// Flat riskless rate `r`.
    pub riskless_rate: f64,
    /// Risk-adjusted rate `k >= r`.
    pub radr_rate: f64,
    pub mode: RadrMode,
}

impl RadrInput<'_> {
    fn validate(&self) -> Result<()> {
        for (field, rate) in [("r", self.riskless_rate), ("k", self.radr_rate)] {
            if !rate.is_finite() || rate <= -1.0 {
                return Err(AppraiseError::InvalidSpec {
                    field: field.into(),
                    message: format!("rate must be finite and > -1, got {rate}"),
                });
            }
        }
        if self.radr_rate < self.riskless_rate {
            return Err(AppraiseError::InvalidSpec {
                field: "k".into(),
                message: format!(
                    "risk-adjusted rate {} is below the riskless rate {}",
                    self.radr_rate, self.riskless_rate
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadrResult {
    /// `⟨F_t⟩` for `t = 0..T`.
    pub mean_flows: Vec<f64>,
    pub npv_at_k: f64,
    pub mirr_at_k: f64,
    pub mean_npv_at_r: f64,
    pub lambda_radr: f64,
    /// `((1 + r) / (1 + k))^t` for `t = 1..T`.
    pub alpha_factors: Vec<f64>,
    pub accept: bool,
    pub mode: RadrMode,
}

/// Weighted per-tenor mean of the flows, `t = 0` included.
pub fn vertical_average(set: &ScenarioSet) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(AppraiseError::EmptySet);
    }
    let width = set.horizon() + 1;
    let mut means = Vec::with_capacity(width);
    let mut terms = Vec::with_capacity(set.len());
    for t in 0..width {
        terms.clear();
        terms.extend(
            set.scenarios()
                .iter()
                .zip(set.weights())
                .map(|(s, w)| w * s.flows()[t]),
        );
        // order-independent sum
        terms.sort_by(f64::total_cmp);
        means.push(compensated_sum(terms.iter().copied()));
    }
    Ok(means)
}

fn check_canonical(set: &ScenarioSet) -> Result<()> {
    for (i, s) in set.scenarios().iter().enumerate() {
        if let Some((t, &value)) = s.flows().iter().enumerate().skip(1).find(|(_, f)| **f < 0.0) {
            return Err(AppraiseError::NonCanonical {
                scenario: i,
                tenor: t,
                value,
            });
        }
    }
    Ok(())
}

pub fn radr_valuation(input: &RadrInput<'_>) -> Result<RadrResult> {
    input.validate()?;
    if input.mode == RadrMode::CanonicalStrict {
        check_canonical(input.scenario_set)?;
    }
    let mean_flows = vertical_average(input.scenario_set)?;
    let r = input.riskless_rate;
    let k = input.radr_rate;
    let outlay = -mean_flows[0];

    let mut at_k = Vec::with_capacity(mean_flows.len());
    let mut at_r = Vec::with_capacity(mean_flows.len());
    let mut risky_part = Vec::with_capacity(mean_flows.len());
    let mut alpha_factors = Vec::with_capacity(mean_flows.len() - 1);
    for (t, &flow) in mean_flows.iter().enumerate().skip(1) {
        let riskless_df = (1.0 + r).powi(t as i32).recip();
        let alpha = ((1.0 + r) / (1.0 + k)).powi(t as i32);
        at_k.push(flow * (1.0 + k).powi(t as i32).recip());
        at_r.push(flow * riskless_df);
        risky_part.push((1.0 - alpha) * flow * riskless_df);
        alpha_factors.push(alpha);
    }
    let npv_at_k = compensated_sum(at_k) - outlay;
    let mean_npv_at_r = compensated_sum(at_r) - outlay;
    let lambda_radr = compensated_sum(risky_part);
    let mirr_at_k = mirr(&CashFlowScenario::new(mean_flows.clone())?, k, k)?;

    Ok(RadrResult {
        mean_flows,
        npv_at_k,
        mirr_at_k,
        mean_npv_at_r,
        lambda_radr,
        alpha_factors,
        accept: npv_at_k > 0.0,
        mode: input.mode,
    })
}

/// The three RADR acceptance predicates evaluated side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub npv_positive: bool,
    pub mirr_above_k: bool,
    pub mean_npv_above_lambda: bool,
    /// `NPV(⟨F⟩|k)`.
    pub npv_margin: f64,
    /// `MIRR(⟨F⟩|k) - k`.
    pub mirr_margin: f64,
    /// `⟨NPV(F|r)⟩ - Λ^RADR`.
    pub lambda_margin: f64,
}

impl EquivalenceReport {
    pub fn consistent(&self) -> bool {
        self.npv_positive == self.mirr_above_k && self.mirr_above_k == self.mean_npv_above_lambda
    }
}

/// Evaluates `NPV(⟨F⟩|k) > 0`, `MIRR(⟨F⟩|k) > k` and `⟨NPV(F|r)⟩ > Λ^RADR`.
/// Margins within rounding noise of zero count as equality.
pub fn equivalence_check(input: &RadrInput<'_>) -> Result<EquivalenceReport> {
    check_canonical(input.scenario_set)?;
    let res = radr_valuation(input)?;
    let scale: f64 = res.mean_flows.iter().map(|f| f.abs()).sum::<f64>().max(1.0);
    let money_tol = 1e-12 * scale;
    let rate_tol = 1e-12 * (1.0 + input.radr_rate.abs());
    let npv_margin = res.npv_at_k;
    let mirr_margin = res.mirr_at_k - input.radr_rate;
    let lambda_margin = res.mean_npv_at_r - res.lambda_radr;
    Ok(EquivalenceReport {
        npv_positive: npv_margin > money_tol,
        mirr_above_k: mirr_margin > rate_tol,
        mean_npv_above_lambda: lambda_margin > money_tol,
        npv_margin,
        mirr_margin,
        lambda_margin,
    })
}
