//! Kernel functions and Gram matrices.
//!
//! Three Mercer kernels are supported:
//!
//! ```text
//! linear      k(x, z) = <x, z>
//! polynomial  k(x, z) = (<x, z> + m)^p
//! gaussian    k(x, z) = exp(-|x - z|^2 / (2 sigma^2))
//! ```
//!
//! Every formula is symmetric in its arguments term by term, so
//! `eval(x, z)` and `eval(z, x)` agree bit for bit.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Polynomial offset used when a spec string omits `m`.
pub const DEFAULT_POLY_OFFSET: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, offset: f64 },
    Gaussian { sigma: f64 },
}

/// Total order used to prefer simpler kernels: linear, then polynomials by
/// degree, then gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Complexity {
    Linear,
    Polynomial(u32),
    Gaussian,
}

impl KernelSpec {
    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        let spec = KernelSpec::Polynomial { degree, offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        let spec = KernelSpec::Gaussian { sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, offset } => {
                if degree < 1 {
                    return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
                }
                if !offset.is_finite() {
                    return Err(Error::InvalidParameter("polynomial offset must be finite".into()));
                }
                Ok(())
            }
            KernelSpec::Gaussian { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "gaussian width must be positive and finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn complexity(&self) -> Complexity {
        match *self {
            KernelSpec::Linear => Complexity::Linear,
            KernelSpec::Polynomial { degree, .. } => Complexity::Polynomial(degree),
            KernelSpec::Gaussian { .. } => Complexity::Gaussian,
        }
    }

    pub fn polynomial_degree(&self) -> Option<u32> {
        match *self {
            KernelSpec::Polynomial { degree, .. } => Some(degree),
            _ => None,
        }
    }

    /// Evaluates `k(x, z)`, checking dimensions and finiteness.
    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::InvalidParameter("kernel inputs must be non-empty".into()));
        }
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: z.len(),
            });
        }
        if x.iter().chain(z).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(self.eval_unchecked(x, z))
    }

    /// Evaluates `k(x, z)` assuming equal, non-zero dimensions and finite inputs.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Polynomial { degree, offset } => powi(dot(x, z) + offset, degree),
            KernelSpec::Gaussian { sigma } => {
                let sq: f64 = x
                    .iter()
                    .zip(z)
                    .map(|(a, b)| {
                        let d = a - b;
                        d * d
                    })
                    .sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

#[inline]
fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

// Repeated multiplication; `f64::powi` is not guaranteed to be exact for p = 1.
#[inline]
fn powi(base: f64, exp: u32) -> f64 {
    let mut acc = base;
    for _ in 1..exp {
        acc *= base;
    }
    acc
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial { degree, offset } => write!(f, "poly:p={degree},m={offset}"),
            KernelSpec::Gaussian { sigma } => write!(f, "rbf:sigma={sigma}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `linear`, `poly:p=<int>[,m=<real>]` or `rbf:sigma=<real>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidKernelSpec(s.to_string());
        let s_trim = s.trim();
        if s_trim == "linear" {
            return Ok(KernelSpec::Linear);
        }
        let (family, params) = s_trim.split_once(':').ok_or_else(bad)?;
        let mut degree = None;
        let mut offset = None;
        let mut sigma = None;
        for kv in params.split(',') {
            let (key, value) = kv.split_once('=').ok_or_else(bad)?;
            match (family, key.trim()) {
                ("poly", "p") if degree.is_none() => degree = Some(value.trim().parse::<u32>().map_err(|_| bad())?),
                ("poly", "m") if offset.is_none() => offset = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
                ("rbf", "sigma") if sigma.is_none() => sigma = Some(value.trim().parse::<f64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let spec = match family {
            "poly" => KernelSpec::Polynomial {
                degree: degree.ok_or_else(bad)?,
                offset: offset.unwrap_or(DEFAULT_POLY_OFFSET),
            },
            "rbf" => KernelSpec::Gaussian {
                sigma: sigma.ok_or_else(bad)?,
            },
            _ => return Err(bad()),
        };
        spec.validate().map_err(|_| bad())?;
        Ok(spec)
    }
}

/// Dense symmetric kernel matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Builds `G[i][j] = k(X_i, X_j)`. The upper triangle is computed and mirrored.
pub fn gram_matrix(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<GramMatrix> {
    spec.validate()?;
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidParameter("gram matrix needs at least one point".into()))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::InvalidParameter("kernel inputs must be non-empty".into()));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    let n = points.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(&points[i], &points[j]);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(GramMatrix { n, data })
}
