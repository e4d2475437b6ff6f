//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any fails.

#![allow(clippy::needless_range_loop)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cospace::data::{onehot_encode, ModalityMatrix, PairedDataset};
use cospace::eval::{
    compute_metrics, fit_model, run_experiment, ConfusionMatrix, EvaluationReport, ExperimentConfig, Method,
    MethodParams, PipelineOptions,
};
use cospace::graph::{build_laplacian, build_supervised_adjacency};
use cospace::linalg::{orthogonality_error, project_rows_orthonormal};
use cospace::solver::{
    fit_cospace, solve_p_ridge, solve_p_sparse, supervised_system, AdmmConfig, GramForms, SolverConfig,
};
use cospace::synth::{generate, SynthSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, pass: String, fail: String) -> Outcome {
    if cond {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn onehot_random(c: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(c, m);
    for j in 0..m {
        y[(rng.gen_range(0..c), j)] = 1.0;
    }
    y
}

fn synth_data(spec: &SynthSpec) -> PairedDataset {
    let ds = generate(spec).expect("synth");
    PairedDataset::new(ds.x1, ds.x2, ds.labels).expect("dataset")
}

/// Gaussian elimination with partial pivoting; solves `M x = rhs` column by column.
fn gauss_solve(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    let mut b: Vec<Vec<f64>> = (0..n).map(|i| (0..rhs.ncols()).map(|j| rhs[(i, j)]).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            for k in 0..b[r].len() {
                b[r][k] -= f * b[col][k];
            }
        }
    }
    let mut x = vec![vec![0.0; rhs.ncols()]; n];
    for r in (0..n).rev() {
        for k in 0..rhs.ncols() {
            let mut s = b[r][k];
            for j in r + 1..n {
                s -= a[r][j] * x[j][k];
            }
            x[r][k] = s / a[r][r];
        }
    }
    DMatrix::from_fn(n, rhs.ncols(), |i, j| x[i][j])
}

/// Normal equations `P (QQᵀ + αI) = ỸQᵀ` built with explicit loops.
fn ridge_oracle(q: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let (d, m, c) = (q.nrows(), q.ncols(), y.nrows());
    let mut g = DMatrix::zeros(d, d);
    let mut r = DMatrix::zeros(c, d);
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] = (0..m).map(|k| q[(i, k)] * q[(j, k)]).sum::<f64>() + if i == j { alpha } else { 0.0 };
        }
    }
    for i in 0..c {
        for j in 0..d {
            r[(i, j)] = (0..m).map(|k| y[(i, k)] * q[(j, k)]).sum();
        }
    }
    // P G = R  <=>  G Pᵀ = Rᵀ (G symmetric)
    gauss_solve(&g, &r.transpose()).transpose()
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn orthogonality() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let ds = generate(&SynthSpec {
            latent_dim: 5,
            d1: 8,
            d2: 6,
            num_classes: 3,
            per_class: 34,
            seed,
            ..SynthSpec::default()
        })
        .map_err(|e| e.to_string())?;
        // exactly N = 100 samples
        let keep: Vec<usize> = (0..100).collect();
        let x1 = ds.x1.select_samples(&keep).map_err(|e| e.to_string())?;
        let x2 = ds.x2.select_samples(&keep).map_err(|e| e.to_string())?;
        let labels = ds.labels.select(&keep).map_err(|e| e.to_string())?;
        let config = if seed % 2 == 0 {
            SolverConfig::ridge(5, 0.1, 0.1)
        } else {
            SolverConfig::sparse(5, 0.1, 0.1)
        };
        let model = fit_cospace(&x1, &x2, &labels, &config).map_err(|e| e.to_string())?;
        worst = worst.max(orthogonality_error(&model.theta));
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-6 && elapsed <= Duration::from_secs(60),
        format!("max ||ΘΘᵀ-I||_F = {worst:.2e} over 20 fits in {:.2?}", elapsed),
        format!("max ||ΘΘᵀ-I||_F = {worst:.2e}, elapsed {:.2?} (limits 1e-6, 60 s)", elapsed),
    )
}

fn ridge_step() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let c = rng.gen_range(2..=5);
        let d = rng.gen_range(1..=10);
        let m = rng.gen_range(d + 1..=60);
        let alpha = 10f64.powf(rng.gen_range(-3.0..1.0));
        let q = uniform(d, m, &mut rng);
        let y = onehot_random(c, m, &mut rng);
        let p = solve_p_ridge(&q, &y, alpha).map_err(|e| e.to_string())?;
        worst = worst.max(rel_diff(&p, &ridge_oracle(&q, &y, alpha)));
    }
    check(
        worst <= 1e-9,
        format!("max relative error {worst:.2e} over 50 instances"),
        format!("max relative error {worst:.2e} > 1e-9"),
    )
}

fn sparse_step() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let admm = AdmmConfig::default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c = rng.gen_range(2..=5);
        let d = rng.gen_range(1..=8);
        let m = rng.gen_range(d + 2..=40);
        // orthonormal rows: QQᵀ = I, so P = soft(ỸQᵀ, α)
        let q = project_rows_orthonormal(&uniform(d, m, &mut rng)).map_err(|e| e.to_string())?;
        let y = onehot_random(c, m, &mut rng);
        let alpha = rng.gen_range(0.0..1.0);
        let step = solve_p_sparse(&q, &y, alpha, &admm).map_err(|e| e.to_string())?;
        let yqt = &y * q.transpose();
        let closed = yqt.map(|v| v.signum() * (v.abs() - alpha).max(0.0));
        worst = worst.max((&step.p - closed).amax());
    }
    let mut worst_ls = 0.0f64;
    for _ in 0..20 {
        let c = rng.gen_range(2..=5);
        let d = rng.gen_range(1..=8);
        let m = rng.gen_range(d + 2..=40);
        let q = uniform(d, m, &mut rng);
        let y = onehot_random(c, m, &mut rng);
        let step = solve_p_sparse(&q, &y, 0.0, &admm).map_err(|e| e.to_string())?;
        worst_ls = worst_ls.max((&step.p - ridge_oracle(&q, &y, 0.0)).amax());
    }
    check(
        worst <= 1e-6 && worst_ls <= 1e-6,
        format!("soft-threshold max error {worst:.2e}; alpha=0 least-squares max error {worst_ls:.2e}"),
        format!("soft-threshold max error {worst:.2e}, least-squares max error {worst_ls:.2e} (limit 1e-6)"),
    )
}

fn objective_behaviour() -> Outcome {
    let mut max_iters = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let (d1, d2, c) = (rng.gen_range(4..10), rng.gen_range(3..8), rng.gen_range(2..5));
        let n = rng.gen_range(30..80);
        let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
        let means1 = uniform(d1, c, &mut rng) * 2.0;
        let means2 = uniform(d2, c, &mut rng) * 2.0;
        let x1 = DMatrix::from_fn(d1, n, |r, i| means1[(r, labels[i])] + rng.gen_range(-1.0..1.0));
        let x2 = DMatrix::from_fn(d2, n, |r, i| means2[(r, labels[i])] + rng.gen_range(-1.0..1.0));
        let x1 = ModalityMatrix::new(x1, 1).map_err(|e| e.to_string())?;
        let x2 = ModalityMatrix::new(x2, 2).map_err(|e| e.to_string())?;
        let enc = onehot_encode(&labels, c).map_err(|e| e.to_string())?;
        let dim = rng.gen_range(1..=d2);
        let config = SolverConfig::ridge(dim, 10f64.powf(rng.gen_range(-2.0..1.0)), 10f64.powf(rng.gen_range(-2.0..1.0)));
        let model = fit_cospace(&x1, &x2, &enc, &config).map_err(|e| e.to_string())?;
        let h = &model.history;
        for (t, w) in h.windows(2).enumerate() {
            if w[1] > w[0] + 1e-6 * (1.0 + w[0]) {
                return Err(format!("instance {seed}: E rises at step {t}: {} -> {}", w[0], w[1]));
            }
        }
        let last = h.len() - 1;
        let stopped_by_rule = last >= 1 && (h[last - 1] - h[last]).abs() / h[last].max(1e-12) < 1e-4;
        if !model.converged || !stopped_by_rule || model.iterations_used > 200 {
            return Err(format!(
                "instance {seed}: converged={} after {} iterations",
                model.converged, model.iterations_used
            ));
        }
        max_iters = max_iters.max(model.iterations_used);
    }
    Ok(format!("10 instances monotone, all stopped by the relative-change rule (max {max_iters} iterations)"))
}

fn laplacian_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut row, mut asym, mut min_eig, mut trace) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let m = rng.gen_range(2..=40);
        let c = rng.gen_range(1..=5).min(m);
        let mut labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..c)).collect();
        labels[..c].copy_from_slice(&(0..c).collect::<Vec<_>>());
        let w = build_supervised_adjacency(&labels, c).map_err(|e| e.to_string())?;
        let l = build_laplacian(&w).map_err(|e| e.to_string())?;
        let lm = l.matrix();
        for i in 0..m {
            row = row.max(lm.row(i).sum().abs());
        }
        asym = asym.max((lm - lm.transpose()).amax());
        min_eig = min_eig.min(lm.clone().symmetric_eigen().eigenvalues.min());

        let k = rng.gen_range(1..4);
        let z = uniform(k, m, &mut rng);
        let lhs = (&z * lm * z.transpose()).trace();
        let ww = w.weights();
        let mut rhs = 0.0;
        for i in 0..m {
            for j in 0..m {
                rhs += ww[(i, j)] * (z.column(i) - z.column(j)).norm_squared();
            }
        }
        rhs *= 0.5;
        trace = trace.max((lhs - rhs).abs() / rhs.abs().max(1e-12));
    }
    let ok = row <= 1e-10 && asym == 0.0 && min_eig >= -1e-10 && trace <= 1e-8;
    let detail = format!(
        "max |row sum| {row:.1e}, max asymmetry {asym:.1e}, min eigenvalue {min_eig:.1e}, trace identity rel err {trace:.1e}"
    );
    check(ok, detail.clone(), detail)
}

fn metrics_oracle() -> Outcome {
    let cm = ConfusionMatrix::from_counts(vec![vec![40, 10], vec![20, 30]]).map_err(|e| e.to_string())?;
    let r = compute_metrics(&cm).map_err(|e| e.to_string())?;
    if r.oa != 0.7 || r.aa != 0.7 || r.kappa != 0.4 {
        return Err(format!("[[40,10],[20,30]] gave OA {} AA {} kappa {}", r.oa, r.aa, r.kappa));
    }
    // a single class puts all mass in one cell (p_e = 1), where kappa is defined as 0
    for c in 2..=6 {
        let counts: Vec<Vec<u64>> = (0..c)
            .map(|i| (0..c).map(|j| if i == j { 3 + 7 * i as u64 } else { 0 }).collect())
            .collect();
        let r = compute_metrics(&ConfusionMatrix::from_counts(counts).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        if r.kappa != 1.0 || r.oa != 1.0 || r.aa != 1.0 {
            return Err(format!("perfect {c}-class diagonal gave kappa {}", r.kappa));
        }
    }
    Ok("OA 0.7, AA 0.7, kappa 0.4 exactly; kappa 1 on perfect diagonals".into())
}

fn gradient_check() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        // Θ is 2 x 4: two features per modality
        let n = 12;
        let c = 3;
        let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
        let x1 = ModalityMatrix::new(uniform(2, n, &mut rng), 1).map_err(|e| e.to_string())?;
        let x2 = ModalityMatrix::new(uniform(2, n, &mut rng), 2).map_err(|e| e.to_string())?;
        let enc = onehot_encode(&labels, c).map_err(|e| e.to_string())?;
        let sys = supervised_system(&x1, &x2, &enc).map_err(|e| e.to_string())?;
        let forms = GramForms::new(&sys);
        let theta = uniform(2, 4, &mut rng);
        let p = uniform(c, 2, &mut rng);
        let beta = rng.gen_range(0.1..2.0);
        let f = |t: &DMatrix<f64>| {
            // direct evaluation from the stacked data, independent of the Gram forms
            let q = t * sys.x_tilde();
            0.5 * (sys.y_tilde() - &p * &q).norm_squared()
                + 0.5 * beta * (&q * sys.laplacian() * q.transpose()).trace()
        };
        let grad = forms.smooth_gradient(&theta, &p, beta);
        let h = 1e-6;
        let mut fd = DMatrix::zeros(2, 4);
        for i in 0..2 {
            for j in 0..4 {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[(i, j)] += h;
                dn[(i, j)] -= h;
                fd[(i, j)] = (f(&up) - f(&dn)) / (2.0 * h);
            }
        }
        worst = worst.max(rel_diff(&grad, &fd));
    }
    check(
        worst <= 1e-5,
        format!("max relative error {worst:.2e} over 5 seeds"),
        format!("max relative error {worst:.2e} > 1e-5"),
    )
}

/// Mean modality-2 test OA per seed for the methods being compared.
fn synthetic_ordering() -> Outcome {
    let start = Instant::now();
    let opts = PipelineOptions::default();
    let with_dim = MethodParams {
        dim: 5,
        ..MethodParams::default()
    };
    let (mut l2_wins, mut lsma_wins) = (0, 0);
    let mut rows = Vec::new();
    for seed in 0..10u64 {
        let data = synth_data(&SynthSpec {
            latent_dim: 5,
            d1: 12,
            d2: 9,
            num_classes: 4,
            per_class: 300,
            noise1: 0.5,
            noise2: 0.5,
            seed,
            ..SynthSpec::default()
        });
        let config = ExperimentConfig {
            replications: 5,
            per_class: 50,
            seed: 1000 * seed,
            test_modality: 2,
        };
        let oa = |m: Method| -> Result<f64, String> {
            run_experiment(&data, m, &with_dim, &opts, &config)
                .map(|o| o.aggregate.oa)
                .map_err(|e| e.to_string())
        };
        let (raw, l2, lusma, lsma) = (oa(Method::Raw)?, oa(Method::CospaceL2)?, oa(Method::Lusma)?, oa(Method::Lsma)?);
        l2_wins += usize::from(l2 > raw);
        lsma_wins += usize::from(lsma >= lusma);
        rows.push(format!("{seed}:{raw:.4}/{l2:.4}/{lusma:.4}/{lsma:.4}"));
    }
    let elapsed = start.elapsed();
    let ok = l2_wins >= 8 && lsma_wins >= 8 && elapsed <= Duration::from_secs(600);
    let detail = format!(
        "l2 > raw in {l2_wins}/10, L-SMA >= L-USMA in {lsma_wins}/10 seeds, {:.1?} [seed:raw/l2/lusma/lsma {}]",
        elapsed,
        rows.join(" ")
    );
    check(ok, detail.clone(), detail)
}

fn sparsity() -> Outcome {
    let data = synth_data(&SynthSpec {
        per_class: 40,
        seed: 21,
        ..SynthSpec::default()
    });
    let nnz = |alpha: f64| -> Result<usize, String> {
        let m = fit_cospace(&data.x1, &data.x2, &data.labels, &SolverConfig::sparse(5, alpha, 0.1))
            .map_err(|e| e.to_string())?;
        Ok(m.p.iter().filter(|v| v.abs() > 1e-8).count())
    };
    let (strong, weak) = (nnz(10.0)?, nnz(0.01)?);
    check(
        strong <= weak,
        format!("nnz(P) = {strong} at alpha 10, {weak} at alpha 0.01"),
        format!("nnz(P) = {strong} at alpha 10 exceeds {weak} at alpha 0.01"),
    )
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<EvaluationReport>, String> {
        let data = synth_data(&SynthSpec {
            per_class: 60,
            seed: 4,
            ..SynthSpec::default()
        });
        let mut out = Vec::new();
        for method in Method::ALL {
            let params = MethodParams {
                dim: 5,
                ..MethodParams::default()
            };
            let model = fit_model(&data, method, &params, &PipelineOptions::default()).map_err(|e| e.to_string())?;
            let (report, _) = model.evaluate(2, &data.x2, data.labels.labels()).map_err(|e| e.to_string())?;
            out.push(report);
        }
        Ok(out)
    };
    let (a, b) = (run()?, run()?);
    let same = a == b
        && a.iter()
            .zip(&b)
            .all(|(x, y)| x.oa.to_bits() == y.oa.to_bits() && x.kappa.to_bits() == y.kappa.to_bits());
    check(
        same,
        format!("identical metrics across two runs for {} methods", a.len()),
        "metrics differ between two identical runs".into(),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("orthogonality", orthogonality),
        ("ridge-step-oracle", ridge_step),
        ("sparse-step-oracle", sparse_step),
        ("objective-behaviour", objective_behaviour),
        ("laplacian-suite", laplacian_suite),
        ("metrics-oracle", metrics_oracle),
        ("finite-difference-gradient", gradient_check),
        ("synthetic-ordering", synthetic_ordering),
        ("sparsity", sparsity),
        ("end-to-end-determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        ran += 1;
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
