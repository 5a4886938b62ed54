//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j k(X_i, X_j)
//! s.t.   0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! The decision function is `f(X) = sum_j a_j y_j k(X_j, X) - b`.
//!
//! Training runs in two phases. The first is Platt's heuristic loop: scan for a
//! KKT violator, pair it with the free multiplier maximising `|E_1 - E_2|`,
//! and fall back to scans over the free and then all multipliers. The loop
//! judges violations against its running threshold `b`, so it can stop while
//! a threshold-independent violation remains. The second phase repairs that
//! with second-order working-pair selection until the maximal violating pair
//! gap is within `kkt_tol`. The bias is then recomputed from the unbounded support vectors,
//! which puts every KKT clause within `kkt_tol`.
//!
//! Errors are cached as `F_i = sum_j a_j y_j K_ij - y_i`, independent of `b`,
//! and refreshed from scratch every [`CACHE_REFRESH_INTERVAL`] updates.

use crate::dataset::{Label, SupervisedSet};
use crate::error::{Error, Result, SolverDiagnostics};
use crate::kernels::{gram_matrix, GramMatrix, KernelSpec};

/// Multipliers above `SUPPORT_THRESHOLD_FACTOR * min(C, max alpha)` count as
/// support vectors. Scaling by the largest multiplier keeps the cut meaningful
/// when large kernel values push every multiplier far below `C`.
pub const SUPPORT_THRESHOLD_FACTOR: f64 = 1e-8;

/// Box bound used for the hard-margin case.
pub const HARD_MARGIN_C: f64 = 1e6;

pub const DEFAULT_KKT_TOL: f64 = 1e-3;

pub const CACHE_REFRESH_INTERVAL: usize = 1000;

/// Polishing budget per sample per heuristic pass.
pub const POLISH_STEPS_PER_PASS: usize = 10;

// Relative change below which a pair step counts as no progress.
const STEP_EPS: f64 = 1e-12;

// Curvature used in place of a non-positive `eta` when ranking pairs.
const ETA_FLOOR: f64 = 1e-12;

// Relative distance from a bound treated as rounding noise.
const SNAP_EPS: f64 = 1e-12;

fn snap(a: f64, c: f64, scale: f64) -> Option<f64> {
    if a != 0.0 && a.abs() <= scale {
        Some(0.0)
    } else if a != c && (c - a).abs() <= scale {
        Some(c)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Upper bound `C` on every multiplier.
    pub c: f64,
    pub kkt_tol: f64,
    /// Sweep budget; `None` means `10 * N`.
    pub max_passes: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: HARD_MARGIN_C,
            kkt_tol: DEFAULT_KKT_TOL,
            max_passes: None,
        }
    }
}

impl SolverConfig {
    pub fn with_c(c: f64) -> Self {
        SolverConfig {
            c,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.kkt_tol > 0.0 && self.kkt_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kkt_tol must be positive, got {}",
                self.kkt_tol
            )));
        }
        if self.max_passes == Some(0) {
            return Err(Error::InvalidParameter("max_passes must be positive".into()));
        }
        Ok(())
    }

    pub fn passes_for(&self, n: usize) -> usize {
        self.max_passes.unwrap_or(10 * n.max(1))
    }

    /// Pair-step budget of the polishing phase. Large `C` with a
    /// low-rank kernel can need many thousands of steps per sample.
    pub fn polish_steps_for(&self, n: usize) -> usize {
        self.passes_for(n)
            .saturating_mul(n.max(1))
            .saturating_mul(POLISH_STEPS_PER_PASS)
    }

    pub fn support_threshold(&self, alphas: &[f64]) -> f64 {
        let largest = alphas.iter().copied().fold(0.0, f64::max);
        SUPPORT_THRESHOLD_FACTOR * self.c.min(largest)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Dual objective at `alphas`.
    pub objective: f64,
    pub support_indices: Vec<usize>,
    /// Number of successful pair updates.
    pub iterations: usize,
    /// Outer sweeps of the heuristic phase.
    pub passes: usize,
    /// Threshold-independent KKT gap at termination (`<= kkt_tol`).
    pub kkt_gap: f64,
    pub c: f64,
}

/// Trains on `data` by SMO. Both classes must be present.
pub fn train(data: &SupervisedSet, kernel: &KernelSpec, cfg: &SolverConfig) -> Result<DualSolution> {
    cfg.validate()?;
    kernel.validate()?;
    if !data.has_both_classes() {
        return Err(Error::DegenerateLabels);
    }
    let gram = gram_matrix(kernel, &data.x)?;
    train_with_gram(&gram, &data.y, cfg)
}

/// Trains against a precomputed Gram matrix.
pub fn train_with_gram(gram: &GramMatrix, labels: &[Label], cfg: &SolverConfig) -> Result<DualSolution> {
    cfg.validate()?;
    if gram.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: gram.len(),
            found: labels.len(),
        });
    }
    let has_pos = labels.contains(&Label::NonCrisis);
    let has_neg = labels.contains(&Label::Crisis);
    if !(has_pos && has_neg) {
        return Err(Error::DegenerateLabels);
    }

    let mut smo = Smo::new(gram, labels, cfg.c);
    let n = labels.len();
    let max_passes = cfg.passes_for(n);
    smo.platt_loop(cfg.kkt_tol / 2.0, max_passes);
    smo.polish(cfg.kkt_tol, cfg.polish_steps_for(n))?;

    let bias = bias_from_errors(&smo.errors, &smo.alpha, &smo.y, cfg.c, cfg.kkt_tol)?;
    let threshold = cfg.support_threshold(&smo.alpha);
    let support_indices = smo
        .alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > threshold)
        .map(|(i, _)| i)
        .collect();
    let (_, _, gap) = smo.max_violating_pair();
    debug_assert!(
        smo.alpha.iter().all(|a| (0.0..=cfg.c).contains(a)),
        "multiplier outside [0, C]"
    );
    debug_assert!(
        smo.alpha.iter().zip(&smo.y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-10,
        "equality constraint drifted"
    );
    Ok(DualSolution {
        objective: smo.objective(),
        alphas: smo.alpha,
        bias,
        support_indices,
        iterations: smo.iterations,
        passes: smo.passes,
        kkt_gap: gap.max(0.0),
        c: cfg.c,
    })
}

/// `sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j k(X_i, X_j)`.
pub fn dual_objective(alphas: &[f64], data: &SupervisedSet, kernel: &KernelSpec) -> Result<f64> {
    if alphas.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: alphas.len(),
        });
    }
    let gram = gram_matrix(kernel, &data.x)?;
    let y = data.signs();
    Ok(objective_with_gram(&gram, &y, alphas))
}

fn objective_with_gram(gram: &GramMatrix, y: &[f64], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut linear = 0.0;
    let mut quad = 0.0;
    for i in 0..n {
        linear += alphas[i];
        if alphas[i] == 0.0 {
            continue;
        }
        let row = gram.row(i);
        let mut acc = 0.0;
        for j in 0..n {
            acc += alphas[j] * y[j] * row[j];
        }
        quad += alphas[i] * y[i] * acc;
    }
    linear - 0.5 * quad
}

/// Bias `b` for the decision function `f(X) = sum_j a_j y_j k(X_j, X) - b`.
///
/// Averages `sum_j a_j y_j k(X_j, X_i) - y_i` over unbounded support vectors
/// (`0 < a_i < C`). Without any, returns the midpoint of the interval of
/// thresholds satisfying KKT; an interval empty by more than `tol` is an error.
pub fn compute_bias(alphas: &[f64], data: &SupervisedSet, kernel: &KernelSpec, c: f64, tol: f64) -> Result<f64> {
    if alphas.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: alphas.len(),
        });
    }
    let gram = gram_matrix(kernel, &data.x)?;
    let y = data.signs();
    let errors = errors_from_scratch(&gram, &y, alphas);
    bias_from_errors(&errors, alphas, &y, c, tol)
}

fn errors_from_scratch(gram: &GramMatrix, y: &[f64], alphas: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut errors: Vec<f64> = y.iter().map(|v| -v).collect();
    for j in 0..n {
        if alphas[j] == 0.0 {
            continue;
        }
        let w = alphas[j] * y[j];
        for (e, k) in errors.iter_mut().zip(gram.row(j)) {
            *e += w * k;
        }
    }
    errors
}

// Membership in the "up" set: the multiplier can move so that y_i * a_i decreases.
#[inline]
fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

#[inline]
fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn bias_from_errors(errors: &[f64], alphas: &[f64], y: &[f64], c: f64, tol: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    // KKT-feasible thresholds are [max over up-set of F, min over low-set of F].
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..errors.len() {
        let a = alphas[i];
        if a > 0.0 && a < c {
            sum += errors[i];
            count += 1;
        }
        if in_up(a, y[i], c) {
            lower = lower.max(errors[i]);
        }
        if in_low(a, y[i], c) {
            upper = upper.min(errors[i]);
        }
    }
    if count > 0 {
        return Ok(sum / count as f64);
    }
    if lower > upper + tol || !lower.is_finite() || !upper.is_finite() {
        return Err(Error::EmptyBiasInterval { lower, upper });
    }
    Ok(0.5 * (lower + upper))
}

struct Smo<'a> {
    gram: &'a GramMatrix,
    y: Vec<f64>,
    c: f64,
    alpha: Vec<f64>,
    errors: Vec<f64>,
    b: f64,
    iterations: usize,
    passes: usize,
    since_refresh: usize,
    cursor: usize,
}

impl<'a> Smo<'a> {
    fn new(gram: &'a GramMatrix, labels: &[Label], c: f64) -> Self {
        let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
        let errors = y.iter().map(|v| -v).collect();
        Smo {
            gram,
            alpha: vec![0.0; y.len()],
            y,
            c,
            errors,
            b: 0.0,
            iterations: 0,
            passes: 0,
            since_refresh: 0,
            cursor: 0,
        }
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn refresh(&mut self) {
        self.errors = errors_from_scratch(self.gram, &self.y, &self.alpha);
        self.since_refresh = 0;
    }

    fn objective(&self) -> f64 {
        objective_with_gram(self.gram, &self.y, &self.alpha)
    }

    fn diagnostics(&self) -> SolverDiagnostics {
        let (_, _, gap) = self.max_violating_pair();
        SolverDiagnostics {
            iterations: self.iterations,
            passes: self.passes,
            kkt_gap: gap,
            objective: self.objective(),
        }
    }

    fn platt_loop(&mut self, tol: f64, max_passes: usize) {
        let n = self.n();
        let mut examine_all = true;
        let mut changed = 0usize;
        while (changed > 0 || examine_all) && self.passes < max_passes {
            self.passes += 1;
            changed = 0;
            if examine_all {
                for i in 0..n {
                    changed += usize::from(self.examine(i, tol));
                }
            } else {
                for i in 0..n {
                    if self.is_free(i) {
                        changed += usize::from(self.examine(i, tol));
                    }
                }
            }
            if examine_all {
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
    }

    fn examine(&mut self, i2: usize, tol: f64) -> bool {
        let y2 = self.y[i2];
        let a2 = self.alpha[i2];
        let r2 = (self.errors[i2] - self.b) * y2;
        if !((r2 < -tol && a2 < self.c) || (r2 > tol && a2 > 0.0)) {
            return false;
        }
        let n = self.n();
        let e2 = self.errors[i2];

        let mut best: Option<(usize, f64)> = None;
        let mut n_free = 0usize;
        for i in 0..n {
            if self.is_free(i) {
                n_free += 1;
                let d = (self.errors[i] - e2).abs();
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((i, d));
                }
            }
        }
        if n_free > 1 {
            if let Some((i1, _)) = best {
                if self.take_step(i1, i2, false) {
                    return true;
                }
            }
        }

        self.cursor = (self.cursor + 1) % n;
        let start = self.cursor;
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.is_free(i1) && self.take_step(i1, i2, false) {
                return true;
            }
        }
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.take_step(i1, i2, false) {
                return true;
            }
        }
        false
    }

    /// Jointly optimises `alpha[i1]` and `alpha[i2]`. With `force`, any
    /// non-zero change is accepted.
    fn take_step(&mut self, i1: usize, i2: usize, force: bool) -> bool {
        if i1 == i2 {
            return false;
        }
        let c = self.c;
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (f1, f2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;

        let (lo, hi) = if s < 0.0 {
            ((a2_old - a1_old).max(0.0), (c + a2_old - a1_old).min(c))
        } else {
            ((a1_old + a2_old - c).max(0.0), (a1_old + a2_old).min(c))
        };
        if hi <= lo {
            return false;
        }

        let k11 = self.gram.get(i1, i1);
        let k22 = self.gram.get(i2, i2);
        let k12 = self.gram.get(i1, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2 = if eta > 0.0 {
            (a2_old + y2 * (f1 - f2) / eta).clamp(lo, hi)
        } else {
            // Objective (minimisation form) at the two ends of the segment.
            let g1 = y1 * f1 - a1_old * k11 - s * a2_old * k12;
            let g2 = y2 * f2 - s * a1_old * k12 - a2_old * k22;
            let l1 = a1_old + s * (a2_old - lo);
            let h1 = a1_old + s * (a2_old - hi);
            let lobj = l1 * g1 + lo * g2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12;
            let hobj = h1 * g1 + hi * g2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if lobj < hobj - STEP_EPS {
                lo
            } else if lobj > hobj + STEP_EPS {
                hi
            } else {
                a2_old
            }
        };

        let mut a1 = a1_old + s * (a2_old - a2);
        // Land exactly on a bound when rounding leaves a multiplier a hair
        // away from it, moving the partner by the same amount.
        let scale = SNAP_EPS * a1_old.max(a2_old).max(a2).max(f64::MIN_POSITIVE);
        if let Some(bound) = snap(a1, c, scale) {
            a1 = bound;
            a2 = a2_old + s * (a1_old - a1);
        } else if let Some(bound) = snap(a2, c, scale) {
            a2 = bound;
            a1 = a1_old + s * (a2_old - a2);
        }
        let a1 = a1.clamp(0.0, c);
        let a2 = a2.clamp(0.0, c);
        let delta = (a2 - a2_old).abs().max((a1 - a1_old).abs());
        if delta == 0.0 || (!force && delta < STEP_EPS * (a2 + a2_old + STEP_EPS)) {
            return false;
        }

        let d1 = (a1 - a1_old) * y1;
        let d2 = (a2 - a2_old) * y2;
        let r1 = self.gram.row(i1);
        let r2 = self.gram.row(i2);
        for ((e, k1), k2) in self.errors.iter_mut().zip(r1).zip(r2) {
            *e += d1 * k1 + d2 * k2;
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;

        let free1 = a1 > 0.0 && a1 < c;
        let free2 = a2 > 0.0 && a2 < c;
        self.b = if free1 {
            self.errors[i1]
        } else if free2 {
            self.errors[i2]
        } else {
            0.5 * (self.errors[i1] + self.errors[i2])
        };

        self.iterations += 1;
        self.since_refresh += 1;
        if self.since_refresh >= CACHE_REFRESH_INTERVAL {
            self.refresh();
        }
        true
    }

    /// `(i_up, j_low, F[i_up] - F[j_low])`; the gap is `-inf` when either set is empty.
    fn max_violating_pair(&self) -> (usize, usize, f64) {
        let mut up = (usize::MAX, f64::NEG_INFINITY);
        let mut low = (usize::MAX, f64::INFINITY);
        for i in 0..self.n() {
            let (a, y, e) = (self.alpha[i], self.y[i], self.errors[i]);
            if in_up(a, y, self.c) && e > up.1 {
                up = (i, e);
            }
            if in_low(a, y, self.c) && e < low.1 {
                low = (i, e);
            }
        }
        if up.0 == usize::MAX || low.0 == usize::MAX {
            return (up.0, low.0, f64::NEG_INFINITY);
        }
        (up.0, low.0, up.1 - low.1)
    }

    /// Partner for `i` among low-set indices with `F_j < F_i`, chosen to
    /// maximise the second-order gain `(F_i - F_j)^2 / eta_ij`.
    fn second_order_partner(&self, i: usize) -> usize {
        let fi = self.errors[i];
        let row = self.gram.row(i);
        let kii = row[i];
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (j, &kij) in row.iter().enumerate() {
            let fj = self.errors[j];
            if fj >= fi || !in_low(self.alpha[j], self.y[j], self.c) {
                continue;
            }
            let eta = (kii + self.gram.get(j, j) - 2.0 * kij).max(ETA_FLOOR);
            let gain = (fi - fj) * (fi - fj) / eta;
            if gain > best.1 {
                best = (j, gain);
            }
        }
        best.0
    }

    fn polish(&mut self, tol: f64, max_steps: usize) -> Result<()> {
        self.refresh();
        let mut steps = 0usize;
        loop {
            let (i, j, gap) = self.max_violating_pair();
            if gap <= tol {
                if self.since_refresh == 0 {
                    return Ok(());
                }
                self.refresh();
                continue;
            }
            if steps >= max_steps {
                return Err(Error::NonConvergence(Box::new(self.diagnostics())));
            }
            steps += 1;
            let partner = self.second_order_partner(i);
            if partner != usize::MAX && partner != j && self.take_step(i, partner, false) {
                continue;
            }
            if !self.take_step(i, j, false) && !self.take_step(i, j, true) {
                return Err(Error::NonConvergence(Box::new(self.diagnostics())));
            }
        }
    }
}
