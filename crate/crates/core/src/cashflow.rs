//! Cash-flow streams, their positive/negative split and the riskless
//! replicating portfolio for a single realization.

use serde::{Deserialize, Serialize};

use crate::error::{AppraiseError, Result};
use crate::term_structure::YieldCurve;

/// Tolerance on the sum of scenario weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// One realization `(F_0, F_1, ..., F_T)` of a project's cash flows.
///
/// `F_0` is the initial flow and must not be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashFlowScenario {
    flows: Vec<f64>,
}

impl CashFlowScenario {
    pub fn new(flows: Vec<f64>) -> Result<Self> {
        if flows.len() < 2 {
            return Err(AppraiseError::InvalidScenario(
                "a scenario needs F_0 and at least one future flow".into(),
            ));
        }
        if let Some(t) = flows.iter().position(|f| !f.is_finite()) {
            return Err(AppraiseError::InvalidScenario(format!(
                "flow at t={t} is not finite"
            )));
        }
        if flows[0] > 0.0 {
            return Err(AppraiseError::InvalidScenario(format!(
                "initial flow F_0 = {} must not be positive",
                flows[0]
            )));
        }
        Ok(Self { flows })
    }

    pub fn horizon(&self) -> usize {
        self.flows.len() - 1
    }

    /// All flows, `F_0` first.
    pub fn flows(&self) -> &[f64] {
        &self.flows
    }

    /// Flows at `t = 1..T`.
    pub fn future_flows(&self) -> &[f64] {
        &self.flows[1..]
    }

    pub fn initial_outlay(&self) -> f64 {
        (-self.flows[0]).max(0.0)
    }

    pub fn split(&self) -> SplitStream {
        let future = self.future_flows();
        SplitStream {
            initial_outlay: self.initial_outlay(),
            positive: future.iter().map(|f| f.max(0.0)).collect(),
            negative: future.iter().map(|f| (-f).max(0.0)).collect(),
        }
    }

    /// Builds the riskless bond portfolios that fund the future outlays and
    /// reproduce the future inflows of this realization.
    pub fn replicate(&self, curve: &YieldCurve) -> Result<ReplicationDecomposition> {
        let horizon = self.horizon();
        if curve.horizon() < horizon {
            return Err(AppraiseError::HorizonMismatch {
                expected: horizon,
                found: curve.horizon(),
            });
        }
        let split = self.split();
        let mut partial_outlays = Vec::with_capacity(horizon);
        let mut bond_notionals = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            let growth = curve.growth(t)?;
            partial_outlays.push(split.negative[t - 1] / growth);
            bond_notionals.push(split.positive[t - 1] / growth);
        }
        let additional_outlay: f64 = partial_outlays.iter().sum();
        let certainty_equivalent_outlay: f64 = bond_notionals.iter().sum();
        Ok(ReplicationDecomposition {
            initial_outlay: split.initial_outlay,
            additional_outlay,
            total_outlay: split.initial_outlay + additional_outlay,
            partial_outlays,
            bond_notionals,
            certainty_equivalent_outlay,
        })
    }
}

/// `F = F⁺ - F⁻` for `t >= 1`, plus the initial outlay `I_0 = max(-F_0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStream {
    pub initial_outlay: f64,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl SplitStream {
    /// `F⁺_t - F⁻_t` for `t = 1..T`.
    pub fn recombine(&self) -> Vec<f64> {
        self.positive
            .iter()
            .zip(&self.negative)
            .map(|(p, n)| p - n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationDecomposition {
    /// `I_0`.
    pub initial_outlay: f64,
    /// `PV(F⁻ | R)`.
    pub additional_outlay: f64,
    /// `I_0^(t) = F⁻_t / (1 + R_t)`.
    pub partial_outlays: Vec<f64>,
    /// `I_0 + PV(F⁻ | R)`.
    pub total_outlay: f64,
    /// `B_t = F⁺_t / (1 + R_t)`.
    pub bond_notionals: Vec<f64>,
    /// `PV(F⁺ | R)`, the riskless outlay that reproduces the inflows.
    pub certainty_equivalent_outlay: f64,
}

/// `Σ_t flows[t-1] / (1 + r_t)^t` over `t = 1..flows.len()`.
pub fn present_value(flows: &[f64], curve: &YieldCurve) -> Result<f64> {
    if flows.len() > curve.horizon() {
        return Err(AppraiseError::HorizonMismatch {
            expected: flows.len(),
            found: curve.horizon(),
        });
    }
    let mut pv = 0.0;
    for (i, f) in flows.iter().enumerate() {
        pv += f * curve.discount_factor(i + 1)?;
    }
    Ok(pv)
}

/// A project's set of equally-horizoned scenarios with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    project_id: String,
    horizon: usize,
    scenarios: Vec<CashFlowScenario>,
    weights: Vec<f64>,
}

impl ScenarioSet {
    /// Uniform weights when `weights` is `None`.
    pub fn new(
        project_id: impl Into<String>,
        scenarios: Vec<CashFlowScenario>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let first = scenarios.first().ok_or(AppraiseError::EmptySet)?;
        let horizon = first.horizon();
        if let Some(bad) = scenarios.iter().find(|s| s.horizon() != horizon) {
            return Err(AppraiseError::HorizonMismatch {
                expected: horizon,
                found: bad.horizon(),
            });
        }
        let weights = match weights {
            Some(w) => {
                validate_weights(&w, scenarios.len())?;
                w
            }
            None => vec![1.0 / scenarios.len() as f64; scenarios.len()],
        };
        Ok(Self {
            project_id: project_id.into(),
            horizon,
            scenarios,
            weights,
        })
    }

    pub fn project_id(&self) -> &str {
        &self.project_id
    }

    pub fn with_project_id(mut self, project_id: impl Into<String>) -> Self {
        self.project_id = project_id.into();
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn scenarios(&self) -> &[CashFlowScenario] {
        &self.scenarios
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

pub(crate) fn validate_weights(weights: &[f64], expected_len: usize) -> Result<()> {
    if weights.len() != expected_len {
        return Err(AppraiseError::LengthMismatch {
            expected: expected_len,
            found: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(AppraiseError::InvalidWeights(format!(
            "weight {w} is negative or not finite"
        )));
    }
    let total = compensated_sum(weights.iter().copied());
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(AppraiseError::InvalidWeights(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Neumaier summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scenario(flows: &[f64]) -> CashFlowScenario {
        CashFlowScenario::new(flows.to_vec()).unwrap()
    }

    #[test]
    fn split_two_period_stream() {
        let s = scenario(&[-200.0, 350.0, -100.0]).split();
        assert_eq!(s.initial_outlay, 200.0);
        assert_eq!(s.positive, vec![350.0, 0.0]);
        assert_eq!(s.negative, vec![0.0, 100.0]);

        let s = scenario(&[-100.0, 0.0, 0.0]).split();
        assert_eq!(s.initial_outlay, 100.0);
        assert_eq!(s.positive, vec![0.0, 0.0]);
        assert_eq!(s.negative, vec![0.0, 0.0]);

        let s = scenario(&[0.0, -50.0, 50.0]).split();
        assert_eq!(s.initial_outlay, 0.0);
        assert_eq!(s.positive, vec![0.0, 50.0]);
        assert_eq!(s.negative, vec![50.0, 0.0]);
    }

    #[test]
    fn rejects_invalid_scenarios() {
        assert!(CashFlowScenario::new(vec![10.0, 5.0]).is_err());
        assert!(CashFlowScenario::new(vec![-10.0]).is_err());
        assert!(CashFlowScenario::new(vec![-10.0, f64::NAN]).is_err());
    }

    #[test]
    fn replicate_two_period_stream() {
        let curve = YieldCurve::flat(0.05, 2).unwrap();
        let r = scenario(&[-200.0, 350.0, -100.0]).replicate(&curve).unwrap();
        assert_relative_eq!(r.additional_outlay, 100.0 / 1.1025, max_relative = 1e-14);
        assert_relative_eq!(r.additional_outlay, 90.702_947_845_805, max_relative = 1e-12);
        assert_relative_eq!(r.total_outlay, 290.702_947_845_805, max_relative = 1e-12);
        assert_relative_eq!(r.bond_notionals[0], 333.333_333_333_333, max_relative = 1e-12);
        assert_eq!(r.bond_notionals[1], 0.0);
        assert_relative_eq!(r.certainty_equivalent_outlay, 350.0 / 1.05, max_relative = 1e-14);
    }

    #[test]
    fn replicate_edge_cases() {
        let curve = YieldCurve::flat(0.05, 3).unwrap();
        let r = scenario(&[-80.0, 10.0, 20.0, 30.0]).replicate(&curve).unwrap();
        assert_eq!(r.additional_outlay, 0.0);
        assert_eq!(r.total_outlay, 80.0);

        let zero = YieldCurve::flat(0.0, 2).unwrap();
        let r = scenario(&[-10.0, 0.0, -100.0]).replicate(&zero).unwrap();
        assert_eq!(r.additional_outlay, 100.0);

        let short = YieldCurve::flat(0.05, 1).unwrap();
        assert!(matches!(
            scenario(&[-10.0, 1.0, 2.0]).replicate(&short),
            Err(AppraiseError::HorizonMismatch { .. })
        ));
    }

    #[test]
    fn present_value_examples() {
        let curve = YieldCurve::flat(0.05, 3).unwrap();
        assert_relative_eq!(present_value(&[350.0, 0.0], &curve).unwrap(), 333.333_333_333_333, max_relative = 1e-12);
        assert_eq!(present_value(&[0.0, 0.0, 0.0], &curve).unwrap(), 0.0);
        assert_relative_eq!(present_value(&[105.0], &curve).unwrap(), 100.0, max_relative = 1e-14);
        assert!(present_value(&[1.0; 4], &curve).is_err());
    }

    #[test]
    fn scenario_set_validation() {
        let a = scenario(&[-1.0, 2.0]);
        let b = scenario(&[-1.0, 2.0, 3.0]);
        assert!(ScenarioSet::new("p", vec![], None).is_err());
        assert!(ScenarioSet::new("p", vec![a.clone(), b], None).is_err());
        assert!(ScenarioSet::new("p", vec![a.clone(), a.clone()], Some(vec![0.5, 0.6])).is_err());
        assert!(ScenarioSet::new("p", vec![a.clone(), a.clone()], Some(vec![1.5, -0.5])).is_err());
        let set = ScenarioSet::new("p", vec![a.clone(), a.clone(), a], None).unwrap();
        assert_eq!(set.weights(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn replicate_ignores_weights() {
        let curve = YieldCurve::flat(0.03, 2).unwrap();
        let s = scenario(&[-50.0, 40.0, -5.0]);
        let a = ScenarioSet::new("a", vec![s.clone(), s.clone()], Some(vec![0.1, 0.9])).unwrap();
        let b = ScenarioSet::new("b", vec![s.clone(), s], None).unwrap();
        let ra: Vec<_> = a.scenarios().iter().map(|s| s.replicate(&curve).unwrap()).collect();
        let rb: Vec<_> = b.scenarios().iter().map(|s| s.replicate(&curve).unwrap()).collect();
        assert_eq!(ra, rb);
    }

    proptest! {
        #[test]
        fn split_recombine_and_complementarity(
            head in -1000.0f64..0.0,
            tail in prop::collection::vec(-1000.0f64..1000.0, 1..20),
        ) {
            let mut flows = vec![head];
            flows.extend(&tail);
            let s = scenario(&flows).split();
            prop_assert_eq!(s.recombine(), tail);
            for (p, n) in s.positive.iter().zip(&s.negative) {
                prop_assert!(*p >= 0.0 && *n >= 0.0);
                prop_assert_eq!(p * n, 0.0);
            }
        }

        #[test]
        fn replication_invariants(
            rates in prop::collection::vec(-0.05f64..0.2, 1..15),
            tail in prop::collection::vec(-500.0f64..500.0, 15),
            head in -1000.0f64..0.0,
        ) {
            let curve = YieldCurve::new(rates).unwrap();
            let horizon = curve.horizon();
            let mut flows = vec![head];
            flows.extend(&tail[..horizon]);
            let s = scenario(&flows);
            let split = s.split();
            let rep = s.replicate(&curve).unwrap();
            for t in 1..=horizon {
                let g = curve.growth(t).unwrap();
                let neg = split.negative[t - 1];
                let pos = split.positive[t - 1];
                prop_assert!((rep.partial_outlays[t - 1] * g - neg).abs() <= 1e-10 * neg.max(1.0));
                prop_assert!((rep.bond_notionals[t - 1] * g - pos).abs() <= 1e-10 * pos.max(1.0));
            }
            let sum: f64 = rep.partial_outlays.iter().sum();
            prop_assert!((rep.total_outlay - (rep.initial_outlay + sum)).abs() <= 1e-12 * rep.total_outlay.max(1.0));

            // PV/FV consistency through the forward curve
            let fwd = curve.forward_curve(horizon).unwrap();
            let fv = fwd.future_value(&split.positive).unwrap();
            let pv = present_value(&split.positive, &curve).unwrap();
            let expected = pv * curve.growth(horizon).unwrap();
            prop_assert!((fv - expected).abs() <= 1e-10 * expected.abs().max(1e-300));
        }
    }
}
