//! Scenario sets: loading them from CSV and generating them from a
//! moment-matched distribution for a single stochastic cash flow.
//!
//! # Random streams
//!
//! Scenario `i` draws from its own ChaCha8 stream: the generator is keyed by
//! `seed` (expanded with `SeedableRng::seed_from_u64`) and positioned on
//! stream number `i`. Draw `i` therefore depends only on `(seed, i)`, never on
//! the order in which scenarios are produced or on the number of workers.
//! Normal variates come from `rand_distr::StandardNormal`.

use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cashflow::{CashFlowScenario, ScenarioSet};
use crate::error::{AppraiseError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ShiftedLognormal,
    MirroredShiftedLognormal,
    Normal,
    /// Two-point distribution matching mean, standard deviation and skewness.
    Discrete,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::ShiftedLognormal => "shifted_lognormal",
            Family::MirroredShiftedLognormal => "mirrored_shifted_lognormal",
            Family::Normal => "normal",
            Family::Discrete => "discrete",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = AppraiseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shifted_lognormal" => Ok(Family::ShiftedLognormal),
            "mirrored_shifted_lognormal" => Ok(Family::MirroredShiftedLognormal),
            "normal" => Ok(Family::Normal),
            "discrete" => Ok(Family::Discrete),
            other => Err(AppraiseError::InvalidSpec {
                field: "family".into(),
                message: format!(
                    "unknown family `{other}`; expected shifted_lognormal, \
                     mirrored_shifted_lognormal, normal or discrete"
                ),
            }),
        }
    }
}

/// Recipe for a synthetic scenario set: a fixed cash-flow template with one
/// stochastic slot drawn from a distribution with the target moments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub mean: f64,
    pub std: f64,
    pub skew: f64,
    /// `F_0..F_T`; `None` marks the stochastic flow.
    pub template: Vec<Option<f64>>,
    pub n: usize,
    pub seed: u64,
}

#[derive(Deserialize)]
struct RawGeneratorSpec {
    family: String,
    mean: f64,
    std: f64,
    #[serde(default)]
    skew: f64,
    template: Vec<Option<f64>>,
    n: usize,
    seed: u64,
}

impl GeneratorSpec {
    /// Parses the JSON generator block.
    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        let raw: RawGeneratorSpec = serde_json::from_value(value)?;
        let spec = Self {
            family: raw.family.parse()?,
            mean: raw.mean,
            std: raw.std,
            skew: raw.skew,
            template: raw.template,
            n: raw.n,
            seed: raw.seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family.as_str(),
            "mean": self.mean,
            "std": self.std,
            "skew": self.skew,
            "template": self.template,
            "n": self.n,
            "seed": self.seed,
        })
    }

    /// Index of the stochastic flow in the template.
    pub fn stochastic_slot(&self) -> Result<usize> {
        let mut slots = self.template.iter().enumerate().filter(|(_, f)| f.is_none());
        let slot = slots.next().map(|(i, _)| i);
        match (slot, slots.next()) {
            (Some(i), None) if i >= 1 => Ok(i),
            (Some(_), None) => Err(invalid("template", "the stochastic slot must be at t >= 1")),
            _ => Err(invalid("template", "exactly one entry must be null")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.template.len() < 2 {
            return Err(invalid("template", "needs at least F_0 and F_1"));
        }
        self.stochastic_slot()?;
        if self.template.iter().flatten().any(|f| !f.is_finite()) {
            return Err(invalid("template", "fixed flows must be finite"));
        }
        if matches!(self.template[0], Some(f0) if f0 > 0.0) {
            return Err(invalid("template", "F_0 must not be positive"));
        }
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !self.mean.is_finite() {
            return Err(invalid("mean", "must be finite"));
        }
        if !self.skew.is_finite() {
            return Err(invalid("skew", "must be finite"));
        }
        if self.family == Family::MirroredShiftedLognormal && self.skew > 0.0 {
            return Err(invalid("skew", "mirrored family requires negative skewness"));
        }
        Ok(())
    }
}

fn invalid(field: &str, message: &str) -> AppraiseError {
    AppraiseError::InvalidSpec {
        field: field.into(),
        message: message.into(),
    }
}

/// Distribution parameters reproducing a `(mean, std, skew)` target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MatchedParams {
    /// `X = shift + exp(mu_log + sigma_log Z)`, or `shift - exp(..)` when mirrored.
    ShiftedLognormal {
        shift: f64,
        mu_log: f64,
        sigma_log: f64,
        mirror: bool,
    },
    Normal { mean: f64, std: f64 },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint { low: f64, high: f64, p_high: f64 },
}

impl MatchedParams {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MatchedParams::ShiftedLognormal {
                shift,
                mu_log,
                sigma_log,
                mirror,
            } => {
                let z: f64 = rng.sample(StandardNormal);
                let tail = (mu_log + sigma_log * z).exp();
                if mirror {
                    shift - tail
                } else {
                    shift + tail
                }
            }
            MatchedParams::Normal { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            MatchedParams::TwoPoint { low, high, p_high } => {
                let u: f64 = rng.random();
                if u < p_high {
                    high
                } else {
                    low
                }
            }
        }
    }
}

/// Solves `(y² + 3) y = s` for `y = sqrt(w - 1) >= 0` by bisection; this is
/// the lognormal skewness equation `(w + 2) sqrt(w - 1) = s`.
fn lognormal_skew_root(s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(AppraiseError::NoSolution(format!(
            "lognormal skewness must be non-zero, got {s}"
        )));
    }
    let f = |y: f64| (y * y + 3.0) * y - s;
    // f(0) = -s < 0 and f(s / 3) = (s / 3)^3 > 0
    let (mut lo, mut hi) = (0.0f64, s / 3.0);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(hi).abs() < f(lo).abs() { hi } else { lo })
}

pub fn moment_match(family: Family, mean: f64, std: f64, skew: f64) -> Result<MatchedParams> {
    if !(std > 0.0) || !std.is_finite() {
        return Err(AppraiseError::NonPositiveStd(std));
    }
    match family {
        Family::ShiftedLognormal | Family::MirroredShiftedLognormal => {
            let y = lognormal_skew_root(skew.abs())?;
            let w = 1.0 + y * y;
            let sigma_log = (y * y).ln_1p().sqrt();
            // variance (w - 1) w e^{2m} = std²; the lognormal mean e^m sqrt(w) = std / y
            let mu_log = (std / (y * w.sqrt())).ln();
            let tail_mean = std / y;
            let mirror = skew < 0.0;
            let shift = if mirror { mean + tail_mean } else { mean - tail_mean };
            Ok(MatchedParams::ShiftedLognormal {
                shift,
                mu_log,
                sigma_log,
                mirror,
            })
        }
        Family::Normal => Ok(MatchedParams::Normal { mean, std }),
        Family::Discrete => {
            // Bernoulli(q) standardized has skewness (1 - 2q) / sqrt(q (1 - q))
            let p_high = 0.5 * (1.0 - skew / (skew * skew + 4.0).sqrt());
            let spread = (p_high * (1.0 - p_high)).sqrt();
            Ok(MatchedParams::TwoPoint {
                low: mean - std * p_high / spread,
                high: mean + std * (1.0 - p_high) / spread,
                p_high,
            })
        }
    }
}

/// Counter-based source of per-scenario random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededStream {
    seed: u64,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for scenario `index`.
    pub fn substream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Generates `spec.n` scenarios, in parallel across scenario indices.
pub fn generate(spec: &GeneratorSpec) -> Result<ScenarioSet> {
    generate_with(spec, true)
}

/// As [`generate`], choosing serial or parallel execution; both give
/// identical output.
pub fn generate_with(spec: &GeneratorSpec, parallel: bool) -> Result<ScenarioSet> {
    spec.validate()?;
    let slot = spec.stochastic_slot()?;
    let params = moment_match(spec.family, spec.mean, spec.std, spec.skew)?;
    let stream = SeededStream::new(spec.seed);
    let base: Vec<f64> = spec.template.iter().map(|f| f.unwrap_or(0.0)).collect();

    let build = |i: usize| {
        let mut flows = base.clone();
        flows[slot] = params.sample(&mut stream.substream(i as u64));
        CashFlowScenario::new(flows)
    };
    let scenarios = if parallel {
        (0..spec.n).into_par_iter().map(build).collect::<Result<Vec<_>>>()?
    } else {
        (0..spec.n).map(build).collect::<Result<Vec<_>>>()?
    };
    ScenarioSet::new("generated", scenarios, None)
}

pub fn load_scenarios(path: impl AsRef<Path>, horizon: usize) -> Result<ScenarioSet> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenarios".into());
    let file = std::fs::File::open(path)?;
    load_scenarios_from_reader(file, horizon, id)
}

/// Reads a `t0,...,tT` scenario CSV with an optional leading `weight` column.
pub fn load_scenarios_from_reader<R: Read>(
    reader: R,
    horizon: usize,
    project_id: impl Into<String>,
) -> Result<ScenarioSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let weighted = headers.get(0) == Some("weight");
    let offset = usize::from(weighted);
    let flow_cols = headers.len() - offset;
    if flow_cols != horizon + 1 {
        return Err(AppraiseError::HorizonMismatch {
            expected: horizon,
            found: flow_cols.saturating_sub(1),
        });
    }
    for (t, name) in headers.iter().skip(offset).enumerate() {
        if name != format!("t{t}") {
            return Err(AppraiseError::Parse {
                row: 1,
                column: t + offset + 1,
                message: format!("expected header `t{t}`, found `{name}`"),
            });
        }
    }

    let mut scenarios = Vec::new();
    let mut weights = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        if rec.len() != headers.len() {
            return Err(AppraiseError::Parse {
                row,
                column: rec.len().min(headers.len()) + 1,
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        let mut values = Vec::with_capacity(rec.len());
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| AppraiseError::Parse {
                row,
                column: c + 1,
                message: format!("`{field}` is not a number"),
            })?;
            values.push(v);
        }
        if weighted {
            weights.push(values.remove(0));
        }
        let scenario = CashFlowScenario::new(values).map_err(|e| AppraiseError::Parse {
            row,
            column: offset + 1,
            message: e.to_string(),
        })?;
        scenarios.push(scenario);
    }
    ScenarioSet::new(project_id, scenarios, weighted.then_some(weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Closed-form moments of `shift ± exp(N(m, s²))`.
    fn lognormal_moments(shift: f64, m: f64, s: f64, mirror: bool) -> (f64, f64, f64) {
        let w = (s * s).exp();
        let ln_mean = (m + s * s / 2.0).exp();
        let var = (w - 1.0) * (2.0 * m + s * s).exp();
        let skew = (w + 2.0) * (w - 1.0).sqrt();
        if mirror {
            (shift - ln_mean, var.sqrt(), -skew)
        } else {
            (shift + ln_mean, var.sqrt(), skew)
        }
    }

    fn check_match(mean: f64, std: f64, skew: f64) {
        let family = if skew < 0.0 {
            Family::MirroredShiftedLognormal
        } else {
            Family::ShiftedLognormal
        };
        let MatchedParams::ShiftedLognormal {
            shift,
            mu_log,
            sigma_log,
            mirror,
        } = moment_match(family, mean, std, skew).unwrap()
        else {
            panic!("wrong family");
        };
        let (m, s, k) = lognormal_moments(shift, mu_log, sigma_log, mirror);
        assert!((m - mean).abs() <= 1e-9 * mean.abs().max(std));
        assert_relative_eq!(s, std, max_relative = 1e-9);
        assert_relative_eq!(k, skew, max_relative = 1e-9);
    }

    #[test]
    fn matches_right_and_left_skewed_targets() {
        check_match(350.0, 40.0, 2.7);
        check_match(355.0, 40.0, -2.8);
        check_match(0.0, 1.0, 0.05);
        check_match(-10.0, 3.0, 12.0);
    }

    #[test]
    fn skew_root_agrees_with_cardano() {
        for s in [1e-4, 0.3, 2.7, 2.8, 40.0] {
            let q: f64 = s / 2.0;
            let d = (q * q + 1.0).sqrt();
            let cardano = (q + d).cbrt() + (q - d).cbrt();
            assert_relative_eq!(lognormal_skew_root(s).unwrap(), cardano, max_relative = 1e-10);
        }
    }

    #[test]
    fn small_skew_degenerates_towards_normal() {
        let sig = |s: f64| match moment_match(Family::ShiftedLognormal, 0.0, 1.0, s).unwrap() {
            MatchedParams::ShiftedLognormal { sigma_log, .. } => sigma_log,
            _ => unreachable!(),
        };
        assert!(sig(1e-3) < sig(1e-1));
        assert!(sig(1e-6) < 1e-6);
    }

    #[test]
    fn moment_match_errors() {
        assert!(matches!(
            moment_match(Family::ShiftedLognormal, 1.0, 0.0, 1.0),
            Err(AppraiseError::NonPositiveStd(_))
        ));
        assert!(matches!(
            moment_match(Family::ShiftedLognormal, 1.0, 1.0, 0.0),
            Err(AppraiseError::NoSolution(_))
        ));
    }

    #[test]
    fn two_point_matches_moments() {
        for (mean, std, skew) in [(10.0, 2.0, 0.0), (350.0, 40.0, 2.7), (355.0, 40.0, -2.8)] {
            let MatchedParams::TwoPoint { low, high, p_high } =
                moment_match(Family::Discrete, mean, std, skew).unwrap()
            else {
                panic!()
            };
            let m = p_high * high + (1.0 - p_high) * low;
            let v = p_high * (high - m).powi(2) + (1.0 - p_high) * (low - m).powi(2);
            let k = (p_high * (high - m).powi(3) + (1.0 - p_high) * (low - m).powi(3)) / v.powf(1.5);
            assert_relative_eq!(m, mean, max_relative = 1e-12);
            assert_relative_eq!(v.sqrt(), std, max_relative = 1e-12);
            assert!((k - skew).abs() < 1e-10);
        }
    }

    fn spec(n: usize, seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            family: Family::ShiftedLognormal,
            mean: 350.0,
            std: 40.0,
            skew: 2.7,
            template: vec![Some(-200.0), None, Some(-100.0)],
            n,
            seed,
        }
    }

    #[test]
    fn single_scenario_is_deterministic() {
        let a = generate(&spec(1, 7)).unwrap();
        let b = generate(&spec(1, 7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
        assert_eq!(a.scenarios()[0].flows()[0], -200.0);
        assert_eq!(a.scenarios()[0].flows()[2], -100.0);
    }

    #[test]
    fn parallel_equals_serial() {
        let s = spec(5000, 99);
        assert_eq!(generate_with(&s, true).unwrap(), generate_with(&s, false).unwrap());
    }

    #[test]
    fn substream_is_a_function_of_seed_and_index() {
        let stream = SeededStream::new(42);
        let a: u64 = stream.substream(17).random();
        let _: u64 = stream.substream(3).random();
        let b: u64 = stream.substream(17).random();
        assert_eq!(a, b);
        let c: u64 = stream.substream(18).random();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_moments_track_targets() {
        for (family, mean, skew, seed) in [
            (Family::ShiftedLognormal, 350.0, 2.7, 42),
            (Family::MirroredShiftedLognormal, 355.0, -2.8, 43),
            (Family::Normal, 350.0, 0.0, 1),
        ] {
            let s = GeneratorSpec {
                family,
                mean,
                skew,
                ..spec(100_000, seed)
            };
            let f1: Vec<f64> = generate(&s).unwrap().scenarios().iter().map(|c| c.flows()[1]).collect();
            let sum = crate::EmpiricalDistribution::uniform(f1).unwrap().summarize();
            assert!((sum.mean - mean).abs() < 0.02 * mean);
            assert!((sum.std_dev - 40.0).abs() < 0.02 * 40.0);
            let k = sum.skewness.unwrap();
            if skew == 0.0 {
                assert!(k.abs() < 0.05);
            } else {
                assert!((k - skew).abs() < 0.05 * skew.abs(), "{family:?}: skew {k}");
            }
        }
    }

    #[test]
    fn mirrored_output_reflects_unmirrored() {
        let right = spec(200, 5);
        let mut left = right.clone();
        left.family = Family::MirroredShiftedLognormal;
        left.skew = -2.7;
        let r = generate(&right).unwrap();
        let l = generate(&left).unwrap();
        for (a, b) in r.scenarios().iter().zip(l.scenarios()) {
            let expected = 2.0 * 350.0 - a.flows()[1];
            assert!((b.flows()[1] - expected).abs() <= 1e-9 * expected.abs());
        }
    }

    #[test]
    fn spec_json_parsing() {
        let v = serde_json::json!({
            "family": "shifted_lognormal", "mean": 350.0, "std": 40.0, "skew": 2.7,
            "template": [-200.0, null, -100.0], "n": 10, "seed": 1
        });
        let s = GeneratorSpec::from_json_value(v).unwrap();
        assert_eq!(s.stochastic_slot().unwrap(), 1);
        assert_eq!(GeneratorSpec::from_json_value(s.to_json_value()).unwrap(), s);

        let bad = serde_json::json!({
            "family": "pareto", "mean": 350.0, "std": 40.0, "skew": 2.7,
            "template": [-200.0, null, -100.0], "n": 10, "seed": 1
        });
        let err = GeneratorSpec::from_json_value(bad).unwrap_err();
        assert!(matches!(err, AppraiseError::InvalidSpec { ref field, .. } if field == "family"));

        let two_slots = serde_json::json!({
            "family": "normal", "mean": 1.0, "std": 1.0,
            "template": [-1.0, null, null], "n": 10, "seed": 1
        });
        assert!(GeneratorSpec::from_json_value(two_slots).is_err());
    }

    #[test]
    fn load_csv_variants() {
        let set = load_scenarios_from_reader("t0,t1,t2\n-200,300,-100\n-200,400,-100\n".as_bytes(), 2, "p").unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.horizon(), 2);
        assert_eq!(set.weights(), &[0.5, 0.5]);

        let set = load_scenarios_from_reader(
            "weight,t0,t1\n0.25,-1,2\n0.75,-1,3\n".as_bytes(),
            1,
            "w",
        )
        .unwrap();
        assert_eq!(set.weights(), &[0.25, 0.75]);

        let err = load_scenarios_from_reader("t0,t1,t2\n-200,300,-100\n-200,400\n".as_bytes(), 2, "p").unwrap_err();
        assert!(matches!(err, AppraiseError::Parse { row: 3, .. }), "{err}");

        let err = load_scenarios_from_reader("t0,t1\n-1,2\n".as_bytes(), 2, "p").unwrap_err();
        assert!(matches!(err, AppraiseError::HorizonMismatch { .. }));

        let err = load_scenarios_from_reader("weight,t0,t1\n0.5,-1,2\n0.6,-1,3\n".as_bytes(), 1, "p").unwrap_err();
        assert!(matches!(err, AppraiseError::InvalidWeights(_)));

        let err = load_scenarios_from_reader("t0,t1\n-1,abc\n".as_bytes(), 1, "p").unwrap_err();
        assert!(matches!(err, AppraiseError::Parse { row: 2, column: 2, .. }));
    }
}
