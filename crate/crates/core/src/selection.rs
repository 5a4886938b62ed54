//! Kernel and `C` selection.
//!
//! Every `(kernel, C)` candidate is trained on a chronological prefix. Among
//! candidates with zero training errors, the one with the lowest test NSR
//! wins, ties going to the simpler kernel and then the fewer support
//! vectors. If nothing separates the training data, the lowest training NSR
//! wins, then the lowest test NSR. Undefined NSR sorts after every value.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::dataset::SupervisedSet;
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, KernelSpec};
use crate::metrics::EvaluationReport;
use crate::model::TrainedModel;
use crate::smo::{train_with_gram, SolverConfig, DEFAULT_KKT_TOL};

pub fn default_candidates() -> Vec<KernelSpec> {
    let mut out = vec![KernelSpec::Linear];
    out.extend((1..=5).map(|degree| KernelSpec::Polynomial { degree, offset: 1.0 }));
    out.extend([0.5, 1.0, 2.0].map(|sigma| KernelSpec::Gaussian { sigma }));
    out
}

pub fn default_c_grid() -> Vec<f64> {
    vec![1.0, 10.0, 100.0, 1000.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub candidates: Vec<KernelSpec>,
    pub c_grid: Vec<f64>,
    /// Rows `[0, cut)` train, `[cut, N)` test.
    pub cut: usize,
    pub kkt_tol: f64,
    /// Worker threads for candidate training; results do not depend on it.
    pub jobs: usize,
}

impl SweepConfig {
    pub fn new(cut: usize) -> Self {
        SweepConfig {
            candidates: default_candidates(),
            c_grid: default_c_grid(),
            cut,
            kkt_tol: DEFAULT_KKT_TOL,
            jobs: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one kernel".into()));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter("C grid must be non-empty and positive".into()));
        }
        for k in &self.candidates {
            k.validate()?;
        }
        Ok(())
    }
}

/// Chronological split: rows before `cut` train, the rest test.
pub fn split_train_test(data: &SupervisedSet, cut: usize) -> Result<(SupervisedSet, SupervisedSet)> {
    if cut < 2 || cut >= data.len() {
        return Err(Error::InvalidParameter(format!(
            "cut must satisfy 2 <= cut < {}, got {cut}",
            data.len()
        )));
    }
    let train = data.subset(&(0..cut).collect::<Vec<_>>());
    if !train.has_both_classes() {
        return Err(Error::DegenerateLabels);
    }
    let test = data.subset(&(cut..data.len()).collect::<Vec<_>>());
    Ok((train, test))
}

#[derive(Debug, Clone)]
pub struct CandidateFit {
    pub model: TrainedModel,
    pub train: EvaluationReport,
    pub test: EvaluationReport,
    pub iterations: usize,
}

impl CandidateFit {
    /// Zero training misclassifications.
    pub fn separates(&self) -> bool {
        self.train.confusion.errors() == 0
    }

    pub fn support_vectors(&self) -> usize {
        self.model.support_vectors().len()
    }
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub kernel: KernelSpec,
    pub c: f64,
    /// Training failure messages are kept so the table can show them.
    pub outcome: std::result::Result<CandidateFit, String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub chosen: usize,
    pub n_train: usize,
    pub n_test: usize,
}

impl SweepResult {
    pub fn chosen_record(&self) -> &SweepRecord {
        &self.records[self.chosen]
    }

    pub fn chosen_fit(&self) -> &CandidateFit {
        self.records[self.chosen]
            .outcome
            .as_ref()
            .expect("chosen record trained successfully")
    }

    /// One row per candidate; the chosen row is marked with `*`.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>3} {:1} {:<18} {:>8} {:>5} {:>5} {:>9} {:>8} {:>8} {:>8} {:>9}",
            "#", "", "kernel", "C", "order", "sv", "train_nsr", "sens_pct", "spec_pct", "acc_pct", "test_nsr"
        );
        for (i, rec) in self.records.iter().enumerate() {
            let mark = if i == self.chosen { "*" } else { "" };
            let order = rec
                .kernel
                .polynomial_degree()
                .map_or_else(|| "-".to_string(), |p| p.to_string());
            match &rec.outcome {
                Ok(fit) => {
                    let _ = writeln!(
                        out,
                        "{:>3} {:1} {:<18} {:>8} {:>5} {:>5} {:>9} {:>8.2} {:>8.2} {:>8.2} {:>9}",
                        i,
                        mark,
                        rec.kernel.to_string(),
                        rec.c,
                        order,
                        fit.support_vectors(),
                        fit.train.nsr_text(),
                        100.0 * fit.test.sensitivity,
                        100.0 * fit.test.specificity,
                        100.0 * fit.test.accuracy,
                        fit.test.nsr_text(),
                    );
                }
                Err(msg) => {
                    let _ = writeln!(
                        out,
                        "{:>3} {:1} {:<18} {:>8} {:>5} failed: {}",
                        i,
                        mark,
                        rec.kernel.to_string(),
                        rec.c,
                        order,
                        msg
                    );
                }
            }
        }
        out
    }
}

fn fit_kernel(
    kernel: KernelSpec,
    c_grid: &[f64],
    kkt_tol: f64,
    train: &SupervisedSet,
    test: &SupervisedSet,
    feature_names: &[String],
) -> Vec<SweepRecord> {
    let gram = match gram_matrix(&kernel, &train.x) {
        Ok(g) => g,
        Err(e) => {
            return c_grid
                .iter()
                .map(|&c| SweepRecord {
                    kernel,
                    c,
                    outcome: Err(e.to_string()),
                })
                .collect()
        }
    };
    c_grid
        .iter()
        .map(|&c| {
            let cfg = SolverConfig {
                c,
                kkt_tol,
                max_passes: None,
            };
            let outcome = train_with_gram(&gram, &train.y, &cfg)
                .and_then(|sol| {
                    let model = TrainedModel::from_solution(&sol, train, kernel, &cfg, feature_names.to_vec())?;
                    let train_report = model.evaluate(train)?;
                    let test_report = model.evaluate(test)?;
                    Ok(CandidateFit {
                        model,
                        train: train_report,
                        test: test_report,
                        iterations: sol.iterations,
                    })
                })
                .map_err(|e| e.to_string());
            SweepRecord { kernel, c, outcome }
        })
        .collect()
}

pub fn run_sweep(data: &SupervisedSet, cfg: &SweepConfig, feature_names: &[String]) -> Result<SweepResult> {
    cfg.validate()?;
    let (train, test) = split_train_test(data, cfg.cut)?;

    let per_kernel: Vec<Vec<SweepRecord>> = if cfg.jobs <= 1 {
        cfg.candidates
            .iter()
            .map(|&k| fit_kernel(k, &cfg.c_grid, cfg.kkt_tol, &train, &test, feature_names))
            .collect()
    } else {
        let mut slots: Vec<Option<Vec<SweepRecord>>> = vec![None; cfg.candidates.len()];
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.jobs.min(cfg.candidates.len()))
                .map(|worker| {
                    let (train, test) = (&train, &test);
                    scope.spawn(move || {
                        cfg.candidates
                            .iter()
                            .enumerate()
                            .skip(worker)
                            .step_by(cfg.jobs)
                            .map(|(i, &k)| (i, fit_kernel(k, &cfg.c_grid, cfg.kkt_tol, train, test, feature_names)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, recs) in h.join().expect("sweep worker panicked") {
                    slots[i] = Some(recs);
                }
            }
        });
        slots
            .into_iter()
            .map(|s| s.expect("every candidate assigned"))
            .collect()
    };
    let records: Vec<SweepRecord> = per_kernel.into_iter().flatten().collect();

    let chosen = select(&records).ok_or_else(|| {
        Error::AllCandidatesFailed(
            records
                .iter()
                .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("{} C={}: {e}", r.kernel, r.c)))
                .collect(),
        )
    })?;
    Ok(SweepResult {
        records,
        chosen,
        n_train: train.len(),
        n_test: test.len(),
    })
}

/// Index of the record preferred by the selection rule, or `None` if every candidate failed.
pub fn select(records: &[SweepRecord]) -> Option<usize> {
    let fits: Vec<(usize, &SweepRecord, &CandidateFit)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.outcome.as_ref().ok().map(|f| (i, r, f)))
        .collect();
    let any_separates = fits.iter().any(|(_, _, f)| f.separates());
    fits.into_iter()
        .filter(|(_, _, f)| !any_separates || f.separates())
        .min_by(|a, b| {
            let primary = if any_separates {
                Ordering::Equal
            } else {
                a.2.train.nsr_key().total_cmp(&b.2.train.nsr_key())
            };
            primary
                .then(a.2.test.nsr_key().total_cmp(&b.2.test.nsr_key()))
                .then(a.1.kernel.complexity().cmp(&b.1.kernel.complexity()))
                .then(a.2.support_vectors().cmp(&b.2.support_vectors()))
                .then(a.0.cmp(&b.0))
        })
        .map(|(i, _, _)| i)
}
