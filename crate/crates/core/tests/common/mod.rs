//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use crisisvm::kernels::{gram_matrix, KernelSpec};
use crisisvm::panel::{IndicatorPanel, YearMonth, RAW_SERIES};
use crisisvm::smo::DualSolution;
use crisisvm::{Label, SupervisedSet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random points labelled by a random hyperplane; `noise` flips labels.
pub fn random_problem(seed: u64, n: usize, d: usize, noise: f64) -> SupervisedSet {
    let mut r = rng(seed);
    loop {
        let w: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.gen_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<Label> = x
            .iter()
            .map(|p| {
                let s: f64 = p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + 0.1;
                let flip = r.gen::<f64>() < noise;
                if (s >= 0.0) != flip {
                    Label::NonCrisis
                } else {
                    Label::Crisis
                }
            })
            .collect();
        let set = SupervisedSet::new(x, y, 0).unwrap();
        if set.has_both_classes() {
            return set;
        }
    }
}

/// Two clusters separated by a clear gap along the first axis.
pub fn separable_problem(seed: u64, n: usize, d: usize) -> SupervisedSet {
    let mut r = rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { Label::NonCrisis } else { Label::Crisis };
        let mut p: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        p[0] = label.sign() * r.gen_range(0.5..2.0);
        x.push(p);
        y.push(label);
    }
    SupervisedSet::new(x, y, 0).unwrap()
}

pub fn objective(alphas: &[f64], q: &DMatrix<f64>) -> f64 {
    let a = DVector::from_column_slice(alphas);
    a.sum() - 0.5 * (a.transpose() * q * &a)[(0, 0)]
}

fn signed_gram(data: &SupervisedSet, kernel: &KernelSpec) -> DMatrix<f64> {
    let n = data.len();
    let g = gram_matrix(kernel, &data.x).unwrap();
    let y = data.signs();
    DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * g.get(i, j))
}

/// Exact optimum of the box-constrained dual by enumerating which multipliers
/// sit at 0, at C, or free, solving the equality-constrained stationarity
/// system on each face and keeping the best feasible point.
pub fn qp_oracle(data: &SupervisedSet, kernel: &KernelSpec, c: f64) -> (f64, Vec<f64>) {
    let n = data.len();
    assert!(n <= 8, "enumeration oracle is exponential");
    let q = signed_gram(data, kernel);
    let y = data.signs();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        let mut state = vec![0u8; n];
        let mut k = code;
        for s in state.iter_mut() {
            *s = (k % 3) as u8;
            k /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                let fixed: f64 = (0..n).filter(|j| state[*j] != 2).map(|j| q[(i, j)] * alpha[j]).sum();
                rhs[r] = 1.0 - fixed;
            }
            rhs[m] = -(0..n).filter(|j| state[*j] != 2).map(|j| y[j] * alpha[j]).sum::<f64>();
            let svd = a.clone().svd(true, true);
            let Ok(sol) = svd.solve(&rhs, 1e-12) else { continue };
            if (&a * &sol - &rhs).amax() > 1e-8 {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        if alpha.iter().any(|&v| v < -1e-10 || v > c + 1e-10) {
            continue;
        }
        let eq: f64 = alpha.iter().zip(&y).map(|(a, b)| a * b).sum();
        if eq.abs() > 1e-8 {
            continue;
        }
        let value = objective(&alpha, &q);
        if value > best.0 {
            best = (value, alpha);
        }
    }
    best
}

/// Straight-line dual objective.
pub fn dual_value(alphas: &[f64], data: &SupervisedSet, kernel: &KernelSpec) -> f64 {
    objective(alphas, &signed_gram(data, kernel))
}

pub fn assert_feasible(sol: &DualSolution, c: f64) {
    for (i, &a) in sol.alphas.iter().enumerate() {
        assert!((0.0..=c).contains(&a), "alpha[{i}] = {a} outside [0, {c}]");
    }
}

pub fn equality_residual(sol: &DualSolution, data: &SupervisedSet) -> f64 {
    sol.alphas
        .iter()
        .zip(data.signs())
        .map(|(a, y)| a * y)
        .sum::<f64>()
        .abs()
}

/// Largest violation of the KKT clauses for `f(x) = sum a y k - b`.
pub fn kkt_residual(sol: &DualSolution, data: &SupervisedSet, kernel: &KernelSpec, c: f64) -> f64 {
    let y = data.signs();
    let mut worst: f64 = 0.0;
    for i in 0..data.len() {
        let f: f64 = (0..data.len())
            .map(|j| sol.alphas[j] * y[j] * kernel.eval(&data.x[j], &data.x[i]).unwrap())
            .sum::<f64>()
            - sol.bias;
        let margin = y[i] * f;
        let a = sol.alphas[i];
        let violation = if a <= 0.0 {
            1.0 - margin
        } else if a >= c {
            margin - 1.0
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    worst
}

pub fn decision(sol: &DualSolution, data: &SupervisedSet, kernel: &KernelSpec, x: &[f64]) -> f64 {
    let y = data.signs();
    (0..data.len())
        .map(|j| sol.alphas[j] * y[j] * kernel.eval(&data.x[j], x).unwrap())
        .sum::<f64>()
        - sol.bias
}

pub fn min_eigenvalue(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    m.symmetric_eigen().eigenvalues.min()
}

/// Trend of the Hodrick-Prescott filter from the dense normal equations.
pub fn hp_trend_dense(s: &[f64], lambda: f64) -> Vec<f64> {
    let n = s.len();
    let mut d = DMatrix::zeros(n - 2, n);
    for t in 0..n - 2 {
        d[(t, t)] = 1.0;
        d[(t, t + 1)] = -2.0;
        d[(t, t + 2)] = 1.0;
    }
    let a = DMatrix::identity(n, n) + (d.transpose() * &d) * lambda;
    let b = DVector::from_column_slice(s);
    let chol = a.cholesky().expect("HP system is positive definite");
    chol.solve(&b).iter().copied().collect()
}

pub fn all_kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::Linear,
        KernelSpec::polynomial(1, 1.0).unwrap(),
        KernelSpec::polynomial(2, 1.0).unwrap(),
        KernelSpec::polynomial(3, 1.0).unwrap(),
        KernelSpec::polynomial(4, 0.5).unwrap(),
        KernelSpec::polynomial(5, 1.0).unwrap(),
        KernelSpec::gaussian(0.5).unwrap(),
        KernelSpec::gaussian(1.0).unwrap(),
        KernelSpec::gaussian(2.0).unwrap(),
    ]
}

fn nsr_or_inf(nsr: Option<f64>) -> f64 {
    nsr.unwrap_or(f64::INFINITY)
}

/// Checks that no successful record beats the chosen one under the selection
/// rule. Returns a description of the first dominating record, if any.
pub fn dominating_record(result: &crisisvm::selection::SweepResult) -> Option<String> {
    let chosen = result.chosen_fit();
    let chosen_kernel = result.chosen_record().kernel;
    let any_separates = result
        .records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .any(|f| f.train.confusion.errors() == 0);
    if any_separates && chosen.train.confusion.errors() != 0 {
        return Some("chosen record does not separate although another does".into());
    }
    let key = |fit: &crisisvm::selection::CandidateFit, kernel: &KernelSpec, idx: usize| {
        let train = if any_separates { 0.0 } else { nsr_or_inf(fit.train.nsr) };
        (
            train,
            nsr_or_inf(fit.test.nsr),
            kernel.complexity(),
            fit.model.support_vectors().len(),
            idx,
        )
    };
    let best = key(chosen, &chosen_kernel, result.chosen);
    for (i, r) in result.records.iter().enumerate() {
        let Ok(fit) = &r.outcome else { continue };
        if any_separates && fit.train.confusion.errors() != 0 {
            continue;
        }
        let k = key(fit, &r.kernel, i);
        if k.partial_cmp(&best) == Some(std::cmp::Ordering::Less) {
            return Some(format!("record {i} ({} C={}) beats the chosen one", r.kernel, r.c));
        }
    }
    None
}

/// Smooth panel with a single exchange-rate jump at `spike`.
pub fn impulse_panel(n: usize, spike: usize) -> IndicatorPanel {
    let dates = YearMonth::succession(YearMonth::new(2000, 1).unwrap(), n);
    let mut series = BTreeMap::new();
    for (j, name) in RAW_SERIES.iter().enumerate() {
        let mut level = 10.0 + j as f64;
        let values: Vec<f64> = (0..n)
            .map(|t| {
                if t > 0 {
                    let mut g = 0.001 * ((t as f64) * (0.7 + 0.3 * j as f64)).sin();
                    if *name == "exchange_rate" && t == spike {
                        g = 0.5;
                    }
                    level *= 1.0 + g;
                }
                level
            })
            .collect();
        series.insert(name.to_string(), values);
    }
    IndicatorPanel::new(dates, series).unwrap()
}
