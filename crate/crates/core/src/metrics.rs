//! Per-scenario project characteristics, risk premiums over the riskless
//! replication, MIRR, and the conversion between return and NPV hurdles.

use serde::{Deserialize, Serialize};

use crate::cashflow::{CashFlowScenario, ReplicationDecomposition};
use crate::error::{AppraiseError, Result};
use crate::term_structure::YieldCurve;

/// Characteristics of one cash-flow realization measured against its
/// riskless replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationResult {
    /// `PV(F⁺|R) - I_0^tot`.
    pub npv: f64,
    /// `Π_T = FV(F⁺|R^f) - I_0^tot`.
    pub terminal_profit: f64,
    /// `M_T = FV(F⁺|R^f) / I_0^tot - 1`.
    pub terminal_return: f64,
    /// `μ` with `(1 + μ)^T = 1 + M_T`.
    pub annualized_return: f64,
    /// `NPV / I_0^tot`.
    pub profitability_index: f64,
    pub premium_npv: f64,
    /// `(1 + R_T) * PI`.
    pub premium_return: f64,
    /// `FV(F⁺|R^f)`.
    pub terminal_value: f64,
    /// Riskless cumulative rate `R_T` at the scenario horizon.
    pub riskless_terminal_return: f64,
    pub replication: ReplicationDecomposition,
}

impl EvaluationResult {
    /// `M_T - R_T`; equals [`premium_return`](Self::premium_return) through
    /// the replication identity.
    pub fn premium_return_from_terminal(&self) -> f64 {
        self.terminal_return - self.riskless_terminal_return
    }

    /// `I_0 + Σ I_0^(t)`, the outlay used to convert between NPV and return
    /// hurdles.
    pub fn basis_outlay(&self) -> f64 {
        self.replication.total_outlay
    }
}

pub fn evaluate(scenario: &CashFlowScenario, curve: &YieldCurve) -> Result<EvaluationResult> {
    let horizon = scenario.horizon();
    let replication = scenario.replicate(curve)?;
    let total = replication.total_outlay;
    if total <= 0.0 {
        return Err(AppraiseError::ZeroTotalOutlay);
    }
    let positive = scenario.split().positive;
    let terminal_value = curve.forward_curve(horizon)?.future_value(&positive)?;
    let terminal_growth = curve.growth(horizon)?;

    let npv = replication.certainty_equivalent_outlay - total;
    let gross = terminal_value / total;
    let annualized_return = if gross > 0.0 {
        gross.powf(1.0 / horizon as f64) - 1.0
    } else {
        -1.0
    };
    let profitability_index = npv / total;
    Ok(EvaluationResult {
        npv,
        terminal_profit: terminal_value - total,
        terminal_return: gross - 1.0,
        annualized_return,
        profitability_index,
        premium_npv: npv,
        premium_return: terminal_growth * profitability_index,
        terminal_value,
        riskless_terminal_return: terminal_growth - 1.0,
        replication,
    })
}

/// Annualized return implied by `npv` over `basis_outlay`:
/// `(1 + μ)^T = (1 + r_T)^T (npv / basis + 1)`.
pub fn mu_from_npv(npv: f64, basis_outlay: f64, curve: &YieldCurve, horizon: usize) -> Result<f64> {
    if !(basis_outlay > 0.0) {
        return Err(AppraiseError::ZeroTotalOutlay);
    }
    let ratio = 1.0 + npv / basis_outlay;
    if !(ratio > 0.0) {
        return Err(AppraiseError::ReturnUndefined { ratio });
    }
    let rate = curve.annual_rate(horizon)?;
    Ok((1.0 + rate) * ratio.powf(1.0 / horizon as f64) - 1.0)
}

/// Inverse of [`mu_from_npv`].
pub fn npv_from_mu(mu: f64, basis_outlay: f64, curve: &YieldCurve, horizon: usize) -> Result<f64> {
    if !(basis_outlay > 0.0) {
        return Err(AppraiseError::ZeroTotalOutlay);
    }
    if !(mu > -1.0) || !mu.is_finite() {
        return Err(AppraiseError::InvalidHurdle(format!(
            "annualized return {mu} must be finite and > -1"
        )));
    }
    let rate = curve.annual_rate(horizon)?;
    let ratio = ((1.0 + mu) / (1.0 + rate)).powi(horizon as i32);
    Ok((ratio - 1.0) * basis_outlay)
}

/// Investor hurdle, expressed in whichever quantity management fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum HurdleSpec {
    /// Required premium over the riskless rate at the horizon: `μ* = r_T + Δ*`.
    DeltaMu(f64),
    MuStar(f64),
    NpvStar(f64),
    /// Minimal acceptable terminal profit `Π*`.
    ProfitStar(f64),
}

impl HurdleSpec {
    pub fn value(&self) -> f64 {
        match *self {
            HurdleSpec::DeltaMu(v)
            | HurdleSpec::MuStar(v)
            | HurdleSpec::NpvStar(v)
            | HurdleSpec::ProfitStar(v) => v,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HurdleSpec::DeltaMu(_) => "delta_mu",
            HurdleSpec::MuStar(_) => "mu_star",
            HurdleSpec::NpvStar(_) => "npv_star",
            HurdleSpec::ProfitStar(_) => "profit_star",
        }
    }
}

/// Mutually consistent return and NPV hurdles for one basis outlay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSet {
    pub mu_star: f64,
    pub npv_star: f64,
    pub delta_mu: f64,
    pub basis_outlay: f64,
}

pub fn thresholds(
    hurdle: HurdleSpec,
    basis_outlay: f64,
    curve: &YieldCurve,
    horizon: usize,
) -> Result<ThresholdSet> {
    let value = hurdle.value();
    if !value.is_finite() {
        return Err(AppraiseError::InvalidHurdle(format!(
            "{} must be finite, got {value}",
            hurdle.kind()
        )));
    }
    if !(basis_outlay > 0.0) {
        return Err(AppraiseError::ZeroTotalOutlay);
    }
    let rate = curve.annual_rate(horizon)?;
    let (mu_star, npv_star) = match hurdle {
        HurdleSpec::DeltaMu(delta) => {
            let mu = rate + delta;
            (mu, npv_from_mu(mu, basis_outlay, curve, horizon)?)
        }
        HurdleSpec::MuStar(mu) => (mu, npv_from_mu(mu, basis_outlay, curve, horizon)?),
        HurdleSpec::NpvStar(npv) => (mu_from_npv(npv, basis_outlay, curve, horizon)?, npv),
        HurdleSpec::ProfitStar(profit) => {
            // Π = (NPV + I) (1 + R_T) - I
            let growth = curve.growth(horizon)?;
            let npv = (profit + basis_outlay) / growth - basis_outlay;
            (mu_from_npv(npv, basis_outlay, curve, horizon)?, npv)
        }
    };
    Ok(ThresholdSet {
        mu_star,
        npv_star,
        delta_mu: mu_star - rate,
        basis_outlay,
    })
}

/// Modified internal rate of return with flat reinvestment rate `k` and
/// financing rate `d`; the initial outlay counts as `F⁻_0`.
pub fn mirr(scenario: &CashFlowScenario, reinvest_rate: f64, finance_rate: f64) -> Result<f64> {
    for (field, rate) in [("reinvest_rate", reinvest_rate), ("finance_rate", finance_rate)] {
        if !rate.is_finite() || rate <= -1.0 {
            return Err(AppraiseError::InvalidSpec {
                field: field.into(),
                message: format!("rate must be finite and > -1, got {rate}"),
            });
        }
    }
    let horizon = scenario.horizon();
    let split = scenario.split();
    let mut grown = 0.0;
    let mut financed = split.initial_outlay;
    for t in 1..=horizon {
        grown += split.positive[t - 1] * (1.0 + reinvest_rate).powi((horizon - t) as i32);
        financed += split.negative[t - 1] / (1.0 + finance_rate).powi(t as i32);
    }
    if !(financed > 0.0) {
        return Err(AppraiseError::ZeroDenominator);
    }
    Ok((grown / financed).powf(1.0 / horizon as f64) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scenario(flows: &[f64]) -> CashFlowScenario {
        CashFlowScenario::new(flows.to_vec()).unwrap()
    }

    fn flat5() -> YieldCurve {
        YieldCurve::flat(0.05, 2).unwrap()
    }

    /// NPV by discounting the signed flows directly.
    fn direct_npv(flows: &[f64], rate: f64) -> f64 {
        flows
            .iter()
            .enumerate()
            .map(|(t, f)| f / (1.0 + rate).powi(t as i32))
            .sum()
    }

    #[test]
    fn evaluate_two_period_mean_stream() {
        let flows = [-200.0, 350.0, -100.0];
        let e = evaluate(&scenario(&flows), &flat5()).unwrap();
        assert_relative_eq!(e.npv, direct_npv(&flows, 0.05), max_relative = 1e-12);
        assert!((e.npv - 42.63).abs() < 5e-3);
        assert!((e.annualized_return - 0.1244).abs() < 5e-5);
        assert!((e.profitability_index - 0.1467).abs() < 1e-4);
        assert!((e.premium_return - 0.1617).abs() < 5e-5);
        assert_eq!(e.premium_npv, e.npv);
        assert_relative_eq!(e.terminal_value, 367.5, max_relative = 1e-14);
        assert_relative_eq!(e.terminal_profit, 367.5 - 290.702_947_845_805, max_relative = 1e-11);
    }

    #[test]
    fn evaluate_left_skewed_median_stream() {
        let flows = [-200.0, 370.0, -100.0];
        let e = evaluate(&scenario(&flows), &flat5()).unwrap();
        assert_relative_eq!(e.npv, direct_npv(&flows, 0.05), max_relative = 1e-12);
        assert!((e.npv - 61.68).abs() < 5e-3);
    }

    #[test]
    fn riskless_replication_has_no_premium() {
        let curve = YieldCurve::new(vec![0.03, 0.04, 0.045]).unwrap();
        let bonds = [10.0, 25.0, 70.0];
        let mut flows = vec![-bonds.iter().sum::<f64>()];
        for (t, b) in bonds.iter().enumerate() {
            flows.push(b * curve.growth(t + 1).unwrap());
        }
        let e = evaluate(&scenario(&flows), &curve).unwrap();
        assert!(e.npv.abs() < 1e-12);
        assert!((e.annualized_return - 0.045).abs() < 1e-12);
        assert!(e.premium_return.abs() < 1e-12);
    }

    #[test]
    fn total_loss_reports_minus_one() {
        let e = evaluate(&scenario(&[-100.0, -10.0, 0.0]), &flat5()).unwrap();
        assert_eq!(e.annualized_return, -1.0);
        assert_eq!(e.terminal_return, -1.0);
    }

    #[test]
    fn zero_outlay_is_an_error() {
        let err = evaluate(&scenario(&[0.0, 10.0, 5.0]), &flat5()).unwrap_err();
        assert!(matches!(err, AppraiseError::ZeroTotalOutlay));
    }

    #[test]
    fn mu_from_npv_examples() {
        let curve = flat5();
        assert_relative_eq!(mu_from_npv(0.0, 290.70, &curve, 2).unwrap(), 0.05, max_relative = 1e-14);
        assert!((mu_from_npv(42.63, 290.70, &curve, 2).unwrap() - 0.1244).abs() < 5e-5);
        assert!((mu_from_npv(58.01, 290.70, &curve, 2).unwrap() - 0.15).abs() < 5e-5);
        assert!(matches!(
            mu_from_npv(-300.0, 290.70, &curve, 2),
            Err(AppraiseError::ReturnUndefined { .. })
        ));
        assert!(mu_from_npv(1.0, 0.0, &curve, 2).is_err());
    }

    #[test]
    fn thresholds_ten_point_premium() {
        let curve = flat5();
        let basis = 200.0 + 100.0 / 1.1025;
        let ts = thresholds(HurdleSpec::DeltaMu(0.10), basis, &curve, 2).unwrap();
        assert_relative_eq!(ts.mu_star, 0.15, max_relative = 1e-15);
        // hand evaluation: (1.15² / 1.05² - 1) * basis
        let expected = (1.3225 / 1.1025 - 1.0) * basis;
        assert_relative_eq!(ts.npv_star, expected, max_relative = 1e-12);
        assert!((ts.npv_star - 58.01).abs() < 5e-3);
    }

    #[test]
    fn thresholds_degenerate_and_inverse() {
        let curve = flat5();
        let ts = thresholds(HurdleSpec::DeltaMu(0.0), 290.7, &curve, 2).unwrap();
        assert_eq!(ts.npv_star, 0.0);
        assert_eq!(ts.mu_star, 0.05);
        let ts = thresholds(HurdleSpec::NpvStar(0.0), 290.7, &curve, 2).unwrap();
        assert!(ts.delta_mu.abs() < 1e-15);
        assert!(thresholds(HurdleSpec::MuStar(f64::NAN), 290.7, &curve, 2).is_err());
        assert!(thresholds(HurdleSpec::MuStar(-1.5), 290.7, &curve, 2).is_err());
    }

    #[test]
    fn profit_hurdle_matches_terminal_profit() {
        let curve = flat5();
        let e = evaluate(&scenario(&[-200.0, 380.0, -100.0]), &curve).unwrap();
        let ts = thresholds(HurdleSpec::ProfitStar(e.terminal_profit), e.basis_outlay(), &curve, 2).unwrap();
        assert_relative_eq!(ts.npv_star, e.npv, max_relative = 1e-10);
        assert_relative_eq!(ts.mu_star, e.annualized_return, max_relative = 1e-10);
    }

    #[test]
    fn hurdle_json_shape() {
        let h: HurdleSpec = serde_json::from_str(r#"{"kind":"delta_mu","value":0.1}"#).unwrap();
        assert_eq!(h, HurdleSpec::DeltaMu(0.1));
    }

    #[test]
    fn mirr_averaged_streams() {
        let m = mirr(&scenario(&[-200.0, 350.0, -100.0]), 0.15, 0.15).unwrap();
        // (350 * 1.15 / (200 + 100 / 1.15²))^(1/2) - 1
        let oracle = (402.5f64 / (200.0 + 100.0 / 1.3225)).sqrt() - 1.0;
        assert_relative_eq!(m, oracle, max_relative = 1e-14);
        assert!((m - 0.208).abs() < 5e-4);
        let m = mirr(&scenario(&[-200.0, 355.0, -100.0]), 0.15, 0.15).unwrap();
        assert!((m - 0.217).abs() < 5e-4);
        let m = mirr(&scenario(&[-100.0, 110.0]), 0.3, 0.7).unwrap();
        assert_relative_eq!(m, 0.1, max_relative = 1e-12);
        assert!(matches!(
            mirr(&scenario(&[0.0, 110.0]), 0.1, 0.1),
            Err(AppraiseError::ZeroDenominator)
        ));
    }

    fn flows_strategy() -> impl Strategy<Value = Vec<f64>> {
        (10.0f64..1000.0, prop::collection::vec(-300.0f64..800.0, 1..12)).prop_map(|(i0, tail)| {
            let mut v = vec![-i0];
            v.extend(tail);
            v
        })
    }

    proptest! {
        #[test]
        fn evaluation_invariants(
            flows in flows_strategy(),
            rates in prop::collection::vec(-0.02f64..0.2, 12),
        ) {
            let s = scenario(&flows);
            let curve = YieldCurve::new(rates[..s.horizon()].to_vec()).unwrap();
            let e = evaluate(&s, &curve).unwrap();
            let t = s.horizon() as i32;
            let total = e.replication.total_outlay;
            prop_assert!(((1.0 + e.annualized_return).powi(t) - (1.0 + e.terminal_return)).abs()
                <= 1e-10 * (1.0 + e.terminal_return).abs().max(1e-12));
            prop_assert!((e.premium_return - e.premium_return_from_terminal()).abs() <= 1e-10 * (1.0 + e.premium_return.abs()));
            prop_assert!((e.terminal_profit - (e.terminal_value - total)).abs() <= 1e-8 * total);
            let signed_pv = crate::cashflow::present_value(s.future_flows(), &curve).unwrap() - s.initial_outlay();
            prop_assert!((e.npv - signed_pv).abs() <= 1e-9 * total);
        }

        #[test]
        fn flat_curve_mu_equals_mirr(flows in flows_strategy(), r in -0.02f64..0.25) {
            let s = scenario(&flows);
            let curve = YieldCurve::flat(r, s.horizon()).unwrap();
            let e = evaluate(&s, &curve).unwrap();
            prop_assume!(e.terminal_value > 0.0);
            let m = mirr(&s, r, r).unwrap();
            prop_assert!((e.annualized_return - m).abs() <= 1e-10);
        }

        #[test]
        fn mu_npv_round_trip(
            npv in -250.0f64..2000.0,
            basis in 10.0f64..1000.0,
            r in -0.02f64..0.2,
            horizon in 1usize..30,
        ) {
            prop_assume!(1.0 + npv / basis > 1e-3);
            let curve = YieldCurve::flat(r, horizon).unwrap();
            let mu = mu_from_npv(npv, basis, &curve, horizon).unwrap();
            let back = npv_from_mu(mu, basis, &curve, horizon).unwrap();
            prop_assert!((back - npv).abs() <= 1e-10 * npv.abs().max(basis));
        }

        #[test]
        fn threshold_equivalence(flows in flows_strategy(), delta in -0.05f64..0.3, r in 0.0f64..0.1) {
            let s = scenario(&flows);
            let curve = YieldCurve::flat(r, s.horizon()).unwrap();
            let e = evaluate(&s, &curve).unwrap();
            let ts = thresholds(HurdleSpec::DeltaMu(delta), e.basis_outlay(), &curve, s.horizon()).unwrap();
            let npv_gap = e.npv - ts.npv_star;
            let mu_gap = e.annualized_return - ts.mu_star;
            prop_assume!(npv_gap.abs() > 1e-9 * e.basis_outlay());
            prop_assert_eq!(npv_gap > 0.0, mu_gap > 0.0);
        }

        #[test]
        fn npv_monotone_in_flows(flows in flows_strategy(), bump in 0.0f64..100.0, idx in 0usize..12) {
            let s = scenario(&flows);
            let curve = YieldCurve::flat(0.05, s.horizon()).unwrap();
            let base = evaluate(&s, &curve).unwrap().npv;
            let t = 1 + idx % s.horizon();
            let mut up = flows.clone();
            up[t] += bump;
            prop_assert!(evaluate(&scenario(&up), &curve).unwrap().npv >= base - 1e-9);
            let mut costlier = flows.clone();
            costlier[0] -= bump + 1.0;
            prop_assert!(evaluate(&scenario(&costlier), &curve).unwrap().npv < base);
        }
    }

    #[test]
    fn threshold_equivalence_sweep() {
        let curve = flat5();
        let basis = 200.0 + 100.0 / 1.1025;
        let ts = thresholds(HurdleSpec::DeltaMu(0.10), basis, &curve, 2).unwrap();
        let critical_inflow = (ts.npv_star + basis) * 1.05;
        for step in -50..=50 {
            let inflow = critical_inflow + step as f64 * 0.37;
            let e = evaluate(&scenario(&[-200.0, inflow, -100.0]), &curve).unwrap();
            if step == 0 {
                assert!((e.annualized_return - ts.mu_star).abs() < 1e-12);
                continue;
            }
            assert_eq!(e.npv > ts.npv_star, e.annualized_return > ts.mu_star, "step {step}");
        }
    }
}
