//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::cell::RefCell;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use crisisvm::data_io::load_panel_file;
use crisisvm::indicators::hp_filter;
use crisisvm::kernels::{gram_matrix, KernelSpec};
use crisisvm::metrics::{rates, ConfusionMatrix};
use crisisvm::pipeline::{prepare, PipelineConfig};
use crisisvm::selection::{run_sweep, SweepConfig};
use crisisvm::{DualSolution, Label, SolverConfig, SupervisedSet};
use rand::Rng;

type Outcome = Result<String, String>;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

thread_local! {
    static FEASIBILITY: RefCell<(usize, Vec<String>)> = const { RefCell::new((0, Vec::new())) };
}

/// Trains and records whether the solution is dual feasible.
fn train(data: &SupervisedSet, kernel: &KernelSpec, cfg: &SolverConfig) -> Result<DualSolution, String> {
    let sol = crisisvm::train(data, kernel, cfg).map_err(|e| e.to_string())?;
    let boxed = sol.alphas.iter().all(|a| (0.0..=cfg.c).contains(a));
    let residual = equality_residual(&sol, data);
    FEASIBILITY.with(|f| {
        let mut f = f.borrow_mut();
        f.0 += 1;
        if !boxed || residual > 1e-10 {
            f.1.push(format!("{kernel} C={}: box {boxed}, |sum a y| {residual:.3e}", cfg.c));
        }
    });
    Ok(sol)
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn metric_arithmetic() -> Outcome {
    let r = rates(&ConfusionMatrix {
        tp: 209,
        tn: 14,
        fp: 1,
        fn_: 8,
    })
    .map_err(|e| e.to_string())?;
    let block = r.render(None, None);
    for line in [
        "sensitivity_pct: 96.31",
        "specificity_pct: 93.33",
        "accuracy_pct: 96.12",
    ] {
        ensure(block.lines().any(|l| l == line), || {
            format!("missing '{line}' in report")
        })?;
    }
    let nsr = r.nsr.ok_or("NSR undefined")?;
    ensure((nsr - 0.0395).abs() <= 0.001, || format!("NSR {nsr}"))?;
    Ok(format!("96.31 / 93.33 / 96.12, NSR {nsr:.4}"))
}

fn nsr_identity() -> Outcome {
    let mut r = rng(2);
    let mut defined = 0;
    for i in 0..1000 {
        let cm = ConfusionMatrix {
            tp: r.gen_range(0..300),
            tn: r.gen_range(0..40),
            fp: r.gen_range(0..40),
            fn_: r.gen_range(0..300),
        };
        if cm.total() == 0 {
            continue;
        }
        let rep = rates(&cm).map_err(|e| e.to_string())?;
        match rep.nsr {
            Some(v) => {
                defined += 1;
                let want = (1.0 - rep.sensitivity) / rep.specificity;
                ensure((v - want).abs() <= 1e-12, || format!("matrix {i}: {v} vs {want}"))?;
            }
            None => ensure(rep.specificity == 0.0, || {
                format!("matrix {i}: undefined NSR with specificity > 0")
            })?,
        }
    }
    Ok(format!("1000 matrices, {defined} with defined NSR"))
}

fn analytic_two_point() -> Outcome {
    let start = Instant::now();
    let data = SupervisedSet::new(vec![vec![0.0], vec![2.0]], vec![Label::Crisis, Label::NonCrisis], 0)
        .map_err(|e| e.to_string())?;
    let kernel = KernelSpec::Linear;
    let sol = train(&data, &kernel, &SolverConfig::with_c(1000.0))?;
    ensure(
        (sol.alphas[0] - 0.5).abs() <= 1e-6 && (sol.alphas[1] - 0.5).abs() <= 1e-6,
        || format!("alpha {:?}", sol.alphas),
    )?;
    ensure((sol.bias - 1.0).abs() <= 1e-6, || format!("b {}", sol.bias))?;
    for (x, want) in [(0.0, -1.0), (1.0, 0.0), (2.0, 1.0)] {
        let f = decision(&sol, &data, &kernel, &[x]);
        ensure((f - want).abs() <= 1e-6, || format!("f({x}) = {f}"))?;
    }
    within(Duration::from_secs(1), start)?;
    Ok("alpha (0.5, 0.5), b 1, f = -1/0/+1".into())
}

fn oracle_and_kkt() -> Outcome {
    let start = Instant::now();
    let mut worst_obj: f64 = 0.0;
    for seed in 0..25u64 {
        let n = 3 + seed as usize % 4;
        let data = random_problem(100 + seed, n, 2, 0.2);
        let kernel = [
            KernelSpec::Linear,
            KernelSpec::Polynomial { degree: 2, offset: 1.0 },
            KernelSpec::Gaussian { sigma: 1.0 },
        ][seed as usize % 3];
        let c = [1.0, 10.0, 1000.0][seed as usize % 3];
        let sol = train(&data, &kernel, &SolverConfig::with_c(c))?;
        let (best, _) = qp_oracle(&data, &kernel, c);
        let diff = (sol.objective - best).abs();
        ensure(diff <= 1e-4, || format!("seed {seed}: objective off by {diff}"))?;
        worst_obj = worst_obj.max(diff);
    }
    let mut worst_kkt: f64 = 0.0;
    for seed in 0..20u64 {
        let n = 20 + (seed as usize * 7) % 31;
        let d = 1 + seed as usize % 5;
        let (noise, kernel) = if seed % 2 == 0 {
            (
                0.0,
                [
                    KernelSpec::Linear,
                    KernelSpec::Polynomial { degree: 2, offset: 1.0 },
                    KernelSpec::Gaussian { sigma: 1.0 },
                ][(seed as usize / 2) % 3],
            )
        } else {
            (
                0.15,
                KernelSpec::Gaussian {
                    sigma: [0.5, 1.0, 2.0][(seed as usize / 2) % 3],
                },
            )
        };
        let data = random_problem(500 + seed, n, d, noise);
        for c in [1.0, 10.0, 1000.0] {
            let sol = train(&data, &kernel, &SolverConfig::with_c(c))?;
            let r = kkt_residual(&sol, &data, &kernel, c);
            ensure(r <= 1e-3, || format!("seed {seed} C {c}: KKT residual {r}"))?;
            worst_kkt = worst_kkt.max(r);
        }
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!(
        "25 oracle problems (max gap {worst_obj:.1e}), 60 KKT runs (max residual {worst_kkt:.1e})"
    ))
}

fn dual_feasibility() -> Outcome {
    FEASIBILITY.with(|f| {
        let f = f.borrow();
        match f.1.first() {
            Some(msg) => Err(format!("{} of {} runs infeasible, first: {msg}", f.1.len(), f.0)),
            None if f.0 == 0 => Err("no training runs recorded".into()),
            None => Ok(format!("{} training runs checked", f.0)),
        }
    })
}

fn support_vector_sufficiency() -> Outcome {
    for seed in 0..10u64 {
        let data = separable_problem(900 + seed, 30, 3);
        let kernel = [KernelSpec::Linear, KernelSpec::Polynomial { degree: 3, offset: 1.0 }][seed as usize % 2];
        let cfg = SolverConfig::default();
        let full = train(&data, &kernel, &cfg)?;
        let reduced_data = data.subset(&full.support_indices);
        let reduced = train(&reduced_data, &kernel, &cfg)?;
        for (i, x) in data.x.iter().enumerate() {
            let a = Label::from_decision(decision(&full, &data, &kernel, x));
            let b = Label::from_decision(decision(&reduced, &reduced_data, &kernel, x));
            ensure(a == b, || format!("seed {seed}: prediction {i} changed"))?;
        }
    }
    Ok("10 problems, predictions identical".into())
}

fn mercer() -> Outcome {
    let mut worst = f64::INFINITY;
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let n = 5 + (seed as usize * 11) % 46;
        let d = 1 + seed as usize % 7;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| r.gen_range(-1.5..1.5)).collect())
            .collect();
        for kernel in all_kernels() {
            let g = gram_matrix(&kernel, &points).map_err(|e| e.to_string())?;
            let min = min_eigenvalue(&g.to_rows());
            ensure(min >= -1e-8, || format!("seed {seed} {kernel}: {min}"))?;
            worst = worst.min(min);
        }
    }
    Ok(format!("20 point sets x 9 kernels, min eigenvalue {worst:.1e}"))
}

fn hp() -> Outcome {
    for lambda in [100.0, 1600.0, 14400.0] {
        let line: Vec<f64> = (0..120).map(|t| 2.0 + 0.3 * t as f64).collect();
        for s in [line, vec![5.0; 120]] {
            let cycle = hp_filter(&s, lambda).map_err(|e| e.to_string())?.cycle;
            let m = cycle.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            ensure(m <= 1e-8, || format!("lambda {lambda}: cycle {m}"))?;
        }
    }
    let mut r = rng(14400);
    let s: Vec<f64> = (0..232)
        .map(|t| (t as f64 / 12.0).sin() + r.gen_range(-0.5..0.5))
        .collect();
    let trend = hp_filter(&s, 14400.0).map_err(|e| e.to_string())?.trend;
    let dense = hp_trend_dense(&s, 14400.0);
    let diff = trend.iter().zip(&dense).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    ensure(diff <= 1e-8, || format!("trend differs from dense solve by {diff}"))?;
    Ok(format!("zero cycles, dense oracle diff {diff:.1e}"))
}

struct SweepRun {
    stdout: String,
    table: Vec<u8>,
    model: Vec<u8>,
    elapsed: Duration,
}

fn sweep_run(dir: &Path) -> Result<SweepRun, String> {
    fs::write(dir.join("panel.cfg"), include_str!("data/panel.cfg")).map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<String, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_crisisvm"))
            .args(args)
            .current_dir(dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    };
    run(&["synth", "--config", "panel.cfg", "--seed", "7", "--output", "panel.csv"])?;
    let start = Instant::now();
    let stdout = run(&[
        "sweep",
        "--input",
        "panel.csv",
        "--horizon",
        "0",
        "--cut",
        "216",
        "--model",
        "chosen.model",
        "--table",
        "table.txt",
    ])?;
    let elapsed = start.elapsed();
    let read = |name: &str| fs::read(dir.join(name)).map_err(|e| e.to_string());
    Ok(SweepRun {
        stdout,
        table: read("table.txt")?,
        model: read("chosen.model")?,
        elapsed,
    })
}

fn summary_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let prefix = format!("{key}: ");
    text.lines().find_map(|l| l.strip_prefix(prefix.as_str()))
}

fn pipeline_end_to_end(dir: &Path) -> Outcome {
    let run = sweep_run(dir)?;
    ensure(run.elapsed < Duration::from_secs(60), || {
        format!("sweep took {:?}", run.elapsed)
    })?;
    let nsr = summary_value(&run.stdout, "training_nsr").ok_or("no training_nsr line")?;
    ensure(nsr == "0.0000", || format!("training NSR {nsr}"))?;

    let panel = load_panel_file(dir.join("panel.csv")).map_err(|e| e.to_string())?;
    let prepared = prepare(&panel, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let episodes = include_str!("data/panel.cfg")
        .lines()
        .filter(|l| l.starts_with("episode="))
        .count();
    ensure(episodes >= 2, || format!("{episodes} episodes"))?;
    let result =
        run_sweep(&prepared.data, &SweepConfig::new(216), &prepared.feature_names()).map_err(|e| e.to_string())?;
    ensure(result.render_table().as_bytes() == run.table.as_slice(), || {
        "library and CLI tables differ".into()
    })?;
    if let Some(msg) = dominating_record(&result) {
        return Err(msg);
    }
    Ok(format!(
        "{} months, {} episodes, chose {} C={} in {:.2?}",
        panel.len(),
        episodes,
        result.chosen_record().kernel,
        result.chosen_record().c,
        run.elapsed
    ))
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let a = sweep_run(first)?;
    let b = sweep_run(second)?;
    ensure(a.table == b.table, || "sweep tables differ".into())?;
    ensure(a.model == b.model, || "model files differ".into())?;
    ensure(a.stdout == b.stdout, || "summaries differ".into())?;
    Ok(format!(
        "tables ({} bytes) and models ({} bytes) identical",
        a.table.len(),
        a.model.len()
    ))
}

fn horizon_alignment() -> Outcome {
    let panel = impulse_panel(40, 20);
    let mut cfg = PipelineConfig::default();
    let h0 = prepare(&panel, &cfg).map_err(|e| e.to_string())?;
    cfg.horizon = 1;
    let h1 = prepare(&panel, &cfg).map_err(|e| e.to_string())?;
    let crises = |d: &SupervisedSet| -> Vec<usize> { (0..d.len()).filter(|&i| d.y[i] == Label::Crisis).collect() };
    let (c0, c1) = (crises(&h0.data), crises(&h1.data));
    ensure(c0.len() == 1, || format!("impulse flagged {c0:?}"))?;
    ensure(c1 == vec![c0[0] - 1], || format!("horizon 0 {c0:?}, horizon 1 {c1:?}"))?;
    ensure(h1.data.len() + 1 == h0.data.len(), || {
        format!("N {} vs {}", h0.data.len(), h1.data.len())
    })?;
    ensure(h0.data.x[..h1.data.len()] == h1.data.x[..], || {
        "feature rows moved".into()
    })?;
    Ok(format!(
        "crisis row {} -> {}, N {} -> {}",
        c0[0],
        c1[0],
        h0.data.len(),
        h1.data.len()
    ))
}

fn main() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().expect("temp dir")).collect();
    let criteria: Vec<Criterion> = vec![
        ("metric arithmetic", Box::new(metric_arithmetic)),
        ("NSR formula identity", Box::new(nsr_identity)),
        ("SMO analytic two-point", Box::new(analytic_two_point)),
        ("SMO oracle and KKT", Box::new(oracle_and_kkt)),
        ("dual feasibility", Box::new(dual_feasibility)),
        ("support-vector sufficiency", Box::new(support_vector_sufficiency)),
        ("Mercer PSD", Box::new(mercer)),
        ("HP filter", Box::new(hp)),
        ("pipeline end-to-end", Box::new(|| pipeline_end_to_end(dirs[0].path()))),
        ("determinism", Box::new(|| determinism(dirs[1].path(), dirs[2].path()))),
        ("horizon-1 alignment", Box::new(horizon_alignment)),
    ];
    // Feasibility is judged over every run, so it goes after the training criteria.
    let order = [0, 1, 2, 3, 5, 6, 7, 8, 9, 10, 4];
    let mut results: Vec<Option<Outcome>> = (0..criteria.len()).map(|_| None).collect();
    for i in order {
        results[i] = Some((criteria[i].1)());
    }
    let mut failed = 0;
    for (i, ((name, _), outcome)) in criteria.iter().zip(results).enumerate() {
        match outcome.expect("every criterion ran") {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
