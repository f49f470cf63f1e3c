//! Riskless term structure: annualized zero rates on an integer tenor grid,
//! discount factors and the forward rates used to carry intermediate cash to
//! the project horizon.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{csv_parse_error, AppraiseError, Result};

/// Annualized riskless zero rates `r_1..r_T` on contiguous integer tenors.
///
/// Cumulative rates are always derived from the stored annual rates.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldCurve {
    rates: Vec<f64>,
}

impl YieldCurve {
    /// Builds a curve from `rates[t - 1] = r_t`.
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(AppraiseError::InvalidCurve("curve has no tenors".into()));
        }
        for (i, &r) in rates.iter().enumerate() {
            if !r.is_finite() || r <= -1.0 {
                return Err(AppraiseError::InvalidCurve(format!(
                    "rate at tenor {} must be finite and > -1, got {r}",
                    i + 1
                )));
            }
        }
        Ok(Self { rates })
    }

    pub fn flat(rate: f64, horizon: usize) -> Result<Self> {
        Self::new(vec![rate; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Annual rate `r_t`.
    pub fn annual_rate(&self, t: usize) -> Result<f64> {
        self.check_tenor(t)?;
        Ok(self.rates[t - 1])
    }

    /// `(1 + r_t)^t`, with growth 1 at `t = 0`.
    pub fn growth(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Ok(1.0);
        }
        let r = self.annual_rate(t)?;
        Ok((1.0 + r).powi(t as i32))
    }

    /// Cumulative rate `R_t = (1 + r_t)^t - 1`.
    pub fn cumulative_rate(&self, t: usize) -> Result<f64> {
        self.check_tenor(t)?;
        self.growth(t).map(|g| g - 1.0)
    }

    /// `1 / (1 + r_t)^t`; accepts `t = 0`.
    pub fn discount_factor(&self, t: usize) -> Result<f64> {
        self.growth(t).map(|g| 1.0 / g)
    }

    /// Forward rates that carry cash received at `t` to horizon `horizon`.
    pub fn forward_curve(&self, horizon: usize) -> Result<ForwardCurve> {
        if horizon == 0 || horizon > self.horizon() {
            return Err(AppraiseError::HorizonOutOfRange {
                requested: horizon,
                available: self.horizon(),
            });
        }
        let terminal = self.growth(horizon)?;
        let mut rates = Vec::with_capacity(horizon);
        for t in 1..horizon {
            rates.push(terminal / self.growth(t)? - 1.0);
        }
        // cash received at the horizon is not reinvested
        rates.push(0.0);
        Ok(ForwardCurve { horizon, rates })
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    /// Parses a `tenor,rate` CSV. Tenors must cover `1..=T` without gaps.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            tenor: usize,
            rate: f64,
        }

        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["tenor", "rate"] {
            return Err(AppraiseError::Parse {
                row: 1,
                column: 1,
                message: "curve header must be `tenor,rate`".into(),
            });
        }
        let mut rows: Vec<Option<f64>> = Vec::new();
        for (i, rec) in rdr.deserialize::<Row>().enumerate() {
            let row = rec.map_err(|e| csv_parse_error(e, i + 2))?;
            if row.tenor == 0 {
                return Err(AppraiseError::InvalidCurve("tenor 0 is not allowed".into()));
            }
            if rows.len() < row.tenor {
                rows.resize(row.tenor, None);
            }
            if rows[row.tenor - 1].replace(row.rate).is_some() {
                return Err(AppraiseError::InvalidCurve(format!(
                    "duplicate tenor {}",
                    row.tenor
                )));
            }
        }
        let rates = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or(AppraiseError::MissingTenor { tenor: i + 1 }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rates)
    }

    fn check_tenor(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon() {
            Err(AppraiseError::TenorOutOfRange {
                tenor: t,
                horizon: self.horizon(),
            })
        } else {
            Ok(())
        }
    }
}

/// Total forward rates `R^f_{T-t}` from each `t = 1..T` to the horizon `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCurve {
    horizon: usize,
    rates: Vec<f64>,
}

impl ForwardCurve {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `R^f_{T-t}`; zero at `t = T`.
    pub fn rate_from(&self, t: usize) -> Result<f64> {
        if t == 0 || t > self.horizon {
            return Err(AppraiseError::TenorOutOfRange {
                tenor: t,
                horizon: self.horizon,
            });
        }
        Ok(self.rates[t - 1])
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Value at the horizon of `flows[t - 1]` received at `t`, each carried
    /// forward at `R^f_{T-t}`.
    pub fn future_value(&self, flows: &[f64]) -> Result<f64> {
        if flows.len() != self.horizon {
            return Err(AppraiseError::LengthMismatch {
                expected: self.horizon,
                found: flows.len(),
            });
        }
        Ok(flows
            .iter()
            .zip(&self.rates)
            .map(|(f, r)| f * (1.0 + r))
            .sum())
    }
}
