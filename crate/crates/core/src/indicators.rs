//! Speculative-pressure index, crisis labels and the feature panel.
//!
//! The pressure index combines standardized monthly percentage changes:
//!
//! ```text
//! ISP_t = z(%dER)_t + z(%dIR)_t - z(%dReserves)_t
//! ```
//!
//! and a month is a crisis when `ISP_t > mean + k * std` (strict), with
//! population moments over the whole sample.

use crate::dataset::{Label, SupervisedSet};
use crate::error::{Error, Result};
use crate::panel::{
    IndicatorPanel, YearMonth, EQUITY_INDEX, EXCHANGE_RATE, INFLATION, INTEREST_RATE, INTL_RESERVES, OIL_PRICE,
    REAL_DOMESTIC_CREDIT,
};

/// Threshold multiplier for crisis months.
pub const CRISIS_K: f64 = 1.5;
/// Threshold multiplier for financially fragile months.
pub const FRAGILE_K: f64 = 1.0;
/// Smoothing parameter for monthly data.
pub const DEFAULT_HP_LAMBDA: f64 = 14400.0;

pub const FEATURE_NAMES: [&str; 7] = [
    "real_domestic_credit_pct",
    "intl_reserves_pct",
    "inflation",
    "oil_price_pct",
    "equity_index_pct",
    "exchange_rate_pct",
    "er_overvaluation",
];

/// `(s[t] - s[t-1]) / s[t-1]`; one element shorter than the input.
pub fn pct_change(series: &[f64]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "percentage change needs at least 2 values, got {}",
            series.len()
        )));
    }
    series
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            if w[0] == 0.0 {
                Err(Error::ZeroDenominator { index: i })
            } else {
                Ok((w[1] - w[0]) / w[0])
            }
        })
        .collect()
}

/// Population mean and standard deviation (two-pass).
pub fn mean_std(series: &[f64]) -> (f64, f64) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `(s - mean) / std` with the population standard deviation.
pub fn standardize(series: &[f64]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "standardization needs at least 2 values, got {}",
            series.len()
        )));
    }
    if series.iter().all(|&v| v == series[0]) {
        return Err(Error::ConstantSeries);
    }
    let (mean, std) = mean_std(series);
    if std.is_nan() || std <= 0.0 {
        return Err(Error::ConstantSeries);
    }
    Ok(series.iter().map(|v| (v - mean) / std).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IspSeries {
    /// Months of the index (the panel's months without the first one).
    pub dates: Vec<YearMonth>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

fn pct_of(panel: &IndicatorPanel, name: &str) -> Result<Vec<f64>> {
    pct_change(panel.series(name)?).map_err(|e| match e {
        Error::ZeroDenominator { index } => Error::InvalidPanel(format!("{name} is zero at {}", panel.dates()[index])),
        other => other,
    })
}

fn standardized_change(panel: &IndicatorPanel, name: &str) -> Result<Vec<f64>> {
    standardize(&pct_of(panel, name)?).map_err(|e| match e {
        Error::ConstantSeries => Error::InvalidPanel(format!("{name} changes are constant and cannot be standardized")),
        other => other,
    })
}

pub fn compute_isp(panel: &IndicatorPanel) -> Result<IspSeries> {
    let er = standardized_change(panel, EXCHANGE_RATE)?;
    let ir = standardized_change(panel, INTEREST_RATE)?;
    let res = standardized_change(panel, INTL_RESERVES)?;
    let values: Vec<f64> = er.iter().zip(&ir).zip(&res).map(|((e, i), r)| e + i - r).collect();
    let (mean, std) = mean_std(&values);
    Ok(IspSeries {
        dates: panel.dates()[1..].to_vec(),
        values,
        mean,
        std,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrisisFlags {
    pub dates: Vec<YearMonth>,
    pub flags: Vec<bool>,
    pub k: f64,
    pub threshold: f64,
}

impl CrisisFlags {
    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn crisis_months(&self) -> Vec<YearMonth> {
        self.dates
            .iter()
            .zip(&self.flags)
            .filter(|(_, &f)| f)
            .map(|(d, _)| *d)
            .collect()
    }
}

pub fn label_crises(isp: &IspSeries, k: f64) -> Result<CrisisFlags> {
    if !k.is_finite() {
        return Err(Error::InvalidParameter("threshold multiplier must be finite".into()));
    }
    if isp.std.is_nan() || isp.std <= 0.0 {
        return Err(Error::InvalidParameter("pressure index has zero variance".into()));
    }
    let threshold = isp.mean + k * isp.std;
    Ok(CrisisFlags {
        dates: isp.dates.clone(),
        flags: isp.values.iter().map(|&v| v > threshold).collect(),
        k,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpDecomposition {
    pub trend: Vec<f64>,
    pub cycle: Vec<f64>,
}

/// Hodrick-Prescott decomposition.
///
/// The trend minimises `sum (s_t - tau_t)^2 + lambda * sum (tau_{t+1} - 2 tau_t + tau_{t-1})^2`.
/// With `D` the second-difference operator the cycle `c = s - tau` solves
/// `(I + lambda D'D) c = lambda D'D s`, a symmetric positive definite
/// pentadiagonal system factored here by banded Cholesky. Solving for the
/// cycle makes it vanish exactly for linear input.
pub fn hp_filter(series: &[f64], lambda: f64) -> Result<HpDecomposition> {
    let n = series.len();
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "HP filter needs at least 4 values, got {n}"
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "HP lambda must be positive, got {lambda}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }

    // Bands of D'D: main diagonal, first and second super-diagonals.
    let mut d0 = vec![0.0; n];
    let mut d1 = vec![0.0; n - 1];
    let mut d2 = vec![0.0; n - 2];
    const ROW: [f64; 3] = [1.0, -2.0, 1.0];
    for r in 0..n - 2 {
        for a in 0..3 {
            d0[r + a] += ROW[a] * ROW[a];
            if a < 2 {
                d1[r + a] += ROW[a] * ROW[a + 1];
            }
        }
        d2[r] += ROW[0] * ROW[2];
    }

    let second_diff: Vec<f64> = series.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let mut rhs = vec![0.0; n];
    for (r, &v) in second_diff.iter().enumerate() {
        for a in 0..3 {
            rhs[r + a] += lambda * ROW[a] * v;
        }
    }

    let a0: Vec<f64> = d0.iter().map(|v| 1.0 + lambda * v).collect();
    let a1: Vec<f64> = d1.iter().map(|v| lambda * v).collect();
    let a2: Vec<f64> = d2.iter().map(|v| lambda * v).collect();
    let cycle = solve_pentadiagonal_spd(&a0, &a1, &a2, &rhs);
    let trend = series.iter().zip(&cycle).map(|(s, c)| s - c).collect();
    Ok(HpDecomposition { trend, cycle })
}

// Cholesky `A = L L'` for a symmetric matrix with bandwidth 2, then two triangular solves.
fn solve_pentadiagonal_spd(a0: &[f64], a1: &[f64], a2: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = a0.len();
    let mut l0 = vec![0.0; n]; // L[i][i]
    let mut l1 = vec![0.0; n]; // L[i][i-1]
    let mut l2 = vec![0.0; n]; // L[i][i-2]
    for i in 0..n {
        if i >= 2 {
            l2[i] = a2[i - 2] / l0[i - 2];
        }
        if i >= 1 {
            let cross = if i >= 2 { l2[i] * l1[i - 1] } else { 0.0 };
            l1[i] = (a1[i - 1] - cross) / l0[i - 1];
        }
        l0[i] = (a0[i] - l1[i] * l1[i] - l2[i] * l2[i]).sqrt();
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut v = rhs[i];
        if i >= 1 {
            v -= l1[i] * z[i - 1];
        }
        if i >= 2 {
            v -= l2[i] * z[i - 2];
        }
        z[i] = v / l0[i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = z[i];
        if i + 1 < n {
            v -= l1[i + 1] * x[i + 1];
        }
        if i + 2 < n {
            v -= l2[i + 2] * x[i + 2];
        }
        x[i] = v / l0[i];
    }
    x
}

/// Feature rows aligned to the index months.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub dates: Vec<YearMonth>,
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Standardizes each column in place; columns with (near) zero spread become zero.
    pub fn standardize_columns(&mut self) {
        for j in 0..self.names.len() {
            let col = self.column(j);
            let (mean, std) = mean_std(&col);
            let scale = mean.abs().max(1.0);
            for row in &mut self.rows {
                row[j] = if std > 1e-12 * scale {
                    (row[j] - mean) / std
                } else {
                    0.0
                };
            }
        }
    }
}

/// Builds the seven features in [`FEATURE_NAMES`] order.
///
/// Inflation enters as a level; the exchange-rate overvaluation is the HP
/// cycle of the log exchange rate; every other variable is a monthly
/// percentage change. The first month is dropped so rows line up with the
/// pressure index.
pub fn build_features(panel: &IndicatorPanel, hp_lambda: f64) -> Result<FeatureMatrix> {
    let credit = pct_of(panel, REAL_DOMESTIC_CREDIT)?;
    let reserves = pct_of(panel, INTL_RESERVES)?;
    let inflation = &panel.series(INFLATION)?[1..];
    let oil = pct_of(panel, OIL_PRICE)?;
    let equity = pct_of(panel, EQUITY_INDEX)?;
    let er_levels = panel.series(EXCHANGE_RATE)?;
    let er = pct_of(panel, EXCHANGE_RATE)?;
    let log_er: Vec<f64> = er_levels.iter().map(|v| v.ln()).collect();
    let overvaluation = hp_filter(&log_er, hp_lambda)?.cycle;

    let rows = (0..er.len())
        .map(|t| {
            vec![
                credit[t],
                reserves[t],
                inflation[t],
                oil[t],
                equity[t],
                er[t],
                overvaluation[t + 1],
            ]
        })
        .collect();
    Ok(FeatureMatrix {
        dates: panel.dates()[1..].to_vec(),
        names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

/// Pairs feature row `t` with the crisis flag of month `t + horizon`
/// (crisis = -1, calm = +1). Horizon 1 drops the final row.
pub fn make_supervised(features: &FeatureMatrix, flags: &CrisisFlags, horizon: usize) -> Result<SupervisedSet> {
    if horizon > 1 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be 0 or 1, got {horizon}"
        )));
    }
    if features.dates != flags.dates {
        return Err(Error::InvalidParameter(
            "features and crisis flags cover different months".into(),
        ));
    }
    let n = features.rows.len().saturating_sub(horizon);
    let x = features.rows[..n].to_vec();
    let y = flags.flags[horizon..horizon + n]
        .iter()
        .map(|&crisis| if crisis { Label::Crisis } else { Label::NonCrisis })
        .collect();
    SupervisedSet::new(x, y, horizon)
}
