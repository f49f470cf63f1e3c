//! Investment appraisal against a riskless replicating alternative.
//!
//! Each cash-flow scenario of a project is compared with the riskless bond
//! portfolio that reproduces it. The resulting NPV, terminal-return and
//! risk-premium distributions are ranked with the Omega measure at an
//! investor hurdle, and cross-checked against a conventional risk-adjusted
//! discount rate valuation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cashflow;
pub mod distribution;
pub mod error;
pub mod metrics;
pub mod radr;
pub mod ranking;
pub mod report;
pub mod scenario;
pub mod term_structure;

pub use cashflow::{present_value, CashFlowScenario, ReplicationDecomposition, ScenarioSet, SplitStream};
pub use distribution::{crossing, crossing_with, linear_grid, Crossing, EmpiricalDistribution, OmegaResult, OmegaValue, Summary};
pub use error::{AppraiseError, Result};
pub use metrics::{evaluate, mirr, mu_from_npv, npv_from_mu, thresholds, EvaluationResult, HurdleSpec, ThresholdSet};
pub use radr::{equivalence_check, radr_valuation, vertical_average, EquivalenceReport, RadrInput, RadrMode, RadrResult};
pub use ranking::{omega_vs_hurdle, rank, rank_distributions, EvaluatedProject, HurdleOmega, Metric, PairCrossing, RankingEntry, RankingReport};
pub use term_structure::{ForwardCurve, YieldCurve};
pub use scenario::{generate, generate_with, load_scenarios, moment_match, Family, GeneratorSpec, MatchedParams, SeededStream};
