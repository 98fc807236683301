//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lorank_core::analysis::{
    bound_terms, kernel_complexity, spectrum_report, BoundConstants, BoundInputs, ConcentrationNorm,
};
use lorank_core::data::{make_splits, synth_planted_subspace, BatchIterator, PlantedSubspace, SplitFractions};
use lorank_core::linalg::{kernel_eigenvalues, svd, DenseMatrix};
use lorank_core::lrfl::{
    approx_tnn, batch_loss, batch_regularizer, exact_tnn, full_regularizer, rank_from_gamma, reg_feature_gradient,
    train, OptimizerKind, Preset, RegularizerState, TrainConfig,
};
use lorank_core::metrics::{mean_auc, roc_auc};
use lorank_core::model::{self, extract_features, predict_proba, ExtractorSpec, ModelParams};
use lorank_core::rng::{stream, Purpose};
use lorank_core::tuning::{GridSpec, DEFAULT_ETAS, DEFAULT_GAMMAS};
use lorank_oracle::{central_difference, exhaustive_complexity, pairwise_auc, singular_values_via_eigen};
use rand::Rng;

type Check = Result<String, String>;

fn rng(seed: u64) -> impl Rng {
    stream(seed ^ 0xacce_97a9, Purpose::Synth, 777)
}

fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

fn binary_labels(r: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| f64::from(u8::from(r.random_bool(0.5))))
}

fn to_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn svd_oracle() -> Check {
    let mut r = rng(1);
    let (mut recon, mut ortho, mut sv) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..200 {
        let rows = r.random_range(1..=50);
        let cols = r.random_range(1..=50);
        let m = random_matrix(&mut r, rows, cols);
        let f = svd(&m).map_err(|e| format!("case {case}: {e}"))?;
        recon = recon.max(max_abs_diff(&f.reconstruct(), &m) / m.max_abs());
        for q in [&f.u, &f.v] {
            ortho = ortho.max(max_abs_diff(&q.t_matmul(q).unwrap(), &DenseMatrix::identity(q.cols())));
        }
        let oracle = singular_values_via_eigen(&to_rows(&m));
        for (s, o) in f.sigma.iter().zip(&oracle) {
            sv = sv.max((s - o).abs() / o.max(f64::MIN_POSITIVE));
        }
    }
    ensure(recon <= 1e-6 && ortho <= 1e-8 && sv <= 1e-6, || {
        format!("reconstruction {recon:.1e}, orthonormality {ortho:.1e}, singular values {sv:.1e}")
    })?;
    Ok(format!(
        "200 matrices; max reconstruction {recon:.1e}, orthonormality {ortho:.1e}, sigma rel {sv:.1e}"
    ))
}

fn regularizer_exactness() -> Check {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(1..=40);
        let d = r.random_range(1..=40);
        let f = random_matrix(&mut r, n, d);
        let t = r.random_range(0..=n.min(d));
        let state = RegularizerState::from_features(&f, t, 1.0, 1, 0).map_err(|e| e.to_string())?;
        let gap = (approx_tnn(&f, &state).unwrap() - exact_tnn(&f, t).unwrap()).abs();
        worst = worst.max(gap);
    }
    ensure(worst <= 1e-8, || format!("max |approx - exact| = {worst:.2e}"))?;
    Ok(format!("100 pairs; max |approx - exact| = {worst:.1e}"))
}

fn flatten(p: &ModelParams) -> Vec<f64> {
    p.tensors().iter().flat_map(|(_, t)| t.as_slice().to_vec()).collect()
}

fn unflatten(p: &mut ModelParams, x: &[f64]) {
    let mut offset = 0;
    for t in p.tensors_mut() {
        let len = t.as_slice().len();
        t.as_mut_slice().copy_from_slice(&x[offset..offset + len]);
        offset += len;
    }
}

fn gradient_fidelity() -> Check {
    let specs = [
        ExtractorSpec::Identity,
        ExtractorSpec::Linear { out_dim: None },
        ExtractorSpec::Linear { out_dim: Some(4) },
        ExtractorSpec::Mlp {
            hidden: 6,
            out_dim: Some(4),
        },
    ];
    let mut worst = 0.0f64;
    for spec in specs {
        for seed in 0..50 {
            let mut r = rng(300 + seed);
            let (n, d, c) = (8, 5, 3);
            let x = random_matrix(&mut r, n, d);
            let y = binary_labels(&mut r, n, c);
            let mut params = ModelParams::init(spec, d, c, &mut r).unwrap();
            for v in params.head.as_mut_slice() {
                *v = r.random_range(-1.0..1.0);
            }
            let k = params.feature_dim();
            let pool = 20;
            let snapshot = random_matrix(&mut r, pool, k);
            let t = r.random_range(0..=k.min(pool));
            let state = RegularizerState::from_features(&snapshot, t, r.random_range(0.0..2.0), 1, 0).unwrap();
            let rows: Vec<usize> = (0..n).map(|_| r.random_range(0..pool)).collect();
            let reg_grad = reg_feature_gradient(&state, &rows).unwrap();
            let analytic: Vec<f64> = model::grads(&params, &x, &y, &reg_grad)
                .unwrap()
                .tensors
                .iter()
                .flat_map(|t| t.as_slice().to_vec())
                .collect();
            let mut probe = params.clone();
            let numeric = central_difference(
                |v| {
                    unflatten(&mut probe, v);
                    batch_loss(&probe, &x, &y, &rows, &state).unwrap()
                },
                &flatten(&params),
                1e-5,
            );
            for (a, num) in analytic.iter().zip(&numeric) {
                let rel = (a - num).abs() / a.abs().max(num.abs()).max(1e-3);
                worst = worst.max(rel);
            }
        }
    }
    ensure(worst <= 1e-5, || format!("max relative gradient error {worst:.2e}"))?;
    Ok(format!("4 extractors x 50 instances; max relative error {worst:.1e}"))
}

fn epoch_sum_identity() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut r = rng(400 + seed);
        let n = r.random_range(10..=80);
        let d = r.random_range(2..=12);
        let x = random_matrix(&mut r, n, d);
        let params = ModelParams::init(ExtractorSpec::Linear { out_dim: None }, d, 2, &mut r).unwrap();
        // The extractor is frozen, so every batch sees rows of the same F.
        let f = extract_features(&params, &x).unwrap();
        let stale = random_matrix(&mut r, n, d);
        let t = r.random_range(0..=n.min(d));
        let state = RegularizerState::from_features(&stale, t, 0.25, 5, 0).unwrap();
        let rows: Vec<usize> = (0..n).collect();
        let batch_size = r.random_range(1..=n);
        let mut weighted = 0.0;
        for batch in BatchIterator::new(&rows, batch_size, seed, 1).unwrap() {
            let fb = extract_features(&params, &x.row_slice(&batch).unwrap()).unwrap();
            weighted += batch.len() as f64 * batch_regularizer(&fb, &batch, &state).unwrap();
        }
        let full = full_regularizer(&f, &state).unwrap();
        worst = worst.max((weighted - full).abs() / full.abs().max(f64::MIN_POSITIVE));
    }
    ensure(worst <= 1e-9, || format!("max relative gap {worst:.2e}"))?;
    Ok(format!("20 epochs; max relative gap {worst:.1e}"))
}

fn auc_oracle() -> Check {
    let s = [0.9, 0.8, 0.3, 0.2];
    let worked = roc_auc(&s, &[true, false, true, false]).map_err(|e| e.to_string())?;
    ensure(worked == 0.75, || format!("worked example gave {worked}"))?;
    let mut r = rng(5);
    let mut checked = 0;
    while checked < 1000 {
        let len = r.random_range(2..=50);
        // Few distinct levels so ties are common.
        let levels = r.random_range(1..=len);
        let scores: Vec<f64> = (0..len)
            .map(|_| r.random_range(0..levels) as f64 / levels as f64)
            .collect();
        let labels: Vec<bool> = (0..len).map(|_| r.random_bool(0.4)).collect();
        let Some(oracle) = pairwise_auc(&scores, &labels) else {
            continue;
        };
        let got = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
        ensure(got == oracle, || format!("instance {checked}: {got} vs {oracle}"))?;
        checked += 1;
    }
    Ok("1000 instances exact; worked example 0.75".into())
}

fn kernel_complexity_check() -> Check {
    let mut r = rng(6);
    for case in 0..100 {
        let len = r.random_range(0..=40);
        let mut lambdas: Vec<f64> = (0..len).map(|_| r.random_range(0.0..2.0f64).powi(3)).collect();
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let n = r.random_range(1..=1000);
        let got = kernel_complexity(&lambdas, n).map_err(|e| e.to_string())?;
        let want = exhaustive_complexity(&lambdas, n);
        ensure(got == want, || format!("case {case}: {got:?} vs {want:?}"))?;
    }
    for (ratio, n) in [(0.5, 10), (0.9, 200), (0.1, 3), (0.99, 1000)] {
        let lambdas: Vec<f64> = (0..30).map(|i| f64::powi(ratio, i)).collect();
        let got = kernel_complexity(&lambdas, n).unwrap();
        let want = exhaustive_complexity(&lambdas, n);
        ensure(got == want, || format!("decay {ratio}: {got:?} vs {want:?}"))?;
    }
    // Exact ties: the smaller h is reported.
    ensure(kernel_complexity(&[1.0], 1).unwrap() == (1.0, 0), || {
        "tie [1], n=1".into()
    })?;
    ensure(kernel_complexity(&[4.0, 0.0, 0.0], 4).unwrap() == (0.25, 1), || {
        "tie [4,0,0], n=4".into()
    })?;
    Ok("100 random spectra and 4 decaying spectra match exhaustive search; ties take smaller h".into())
}

struct ArmResult {
    tnn: f64,
    tail_mass: f64,
    mauc: f64,
    tail_sigma: Vec<f64>,
}

fn run_arm(seed: u64, eta_reg: f64) -> Result<ArmResult, String> {
    let data = synth_planted_subspace(PlantedSubspace {
        n: 400,
        d: 40,
        classes: 3,
        k_signal: 5,
        noise_scale: 1.0,
        seed,
    })
    .map_err(|e| e.to_string())?;
    let plan = make_splits(
        data.len(),
        seed,
        SplitFractions {
            test: 0.25,
            ..SplitFractions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let train_set = data.subset(&plan.train).unwrap();
    let test_set = data.subset(&plan.test).unwrap();
    let config = TrainConfig {
        epochs: 100,
        batch_size: 64,
        learning_rate_init: 1e-2,
        learning_rate_final: 1e-4,
        optimizer: OptimizerKind::Adam,
        gamma: 0.2,
        eta_reg,
        extractor: ExtractorSpec::Linear { out_dim: None },
        seed,
        ..TrainConfig::default()
    };
    let (params, log) = train(&train_set, &config).map_err(|f| f.error.to_string())?;
    let f = extract_features(&params, train_set.features()).unwrap();
    let rank = rank_from_gamma(config.gamma, f.rows(), f.cols()).unwrap();
    let lambdas = kernel_eigenvalues(&f).unwrap();
    let report = spectrum_report(&f, train_set.labels(), ConcentrationNorm::L1).unwrap();
    let scores = predict_proba(&params, test_set.features()).unwrap();
    let _ = log;
    Ok(ArmResult {
        tnn: exact_tnn(&f, rank).unwrap(),
        tail_mass: lambdas[5..].iter().sum(),
        mauc: mean_auc(&scores, test_set.labels()).unwrap().mean,
        tail_sigma: report.tail_sigma_sum,
    })
}

fn directional_experiment() -> Check {
    let (mut a, mut b, mut diff) = (0, 0, 0.0);
    let mut spectrum_note = String::new();
    for seed in 0..10u64 {
        let lrfl = run_arm(seed, 1e-3)?;
        let base = run_arm(seed, 0.0)?;
        a += usize::from(lrfl.tnn < base.tnn);
        b += usize::from(lrfl.tail_mass < base.tail_mass);
        diff += lrfl.mauc - base.mauc;
        println!(
            "    seed {seed}: tnn {:.3} vs {:.3}  tail mass {:.4} vs {:.4}  mAUC {:.6} vs {:.6}",
            lrfl.tnn, base.tnn, lrfl.tail_mass, base.tail_mass, lrfl.mauc, base.mauc
        );
        if seed == 0 {
            spectrum_note = format!(
                "seed 0 tail sigma sum at T=8: {:.3} vs {:.3}",
                lrfl.tail_sigma[8], base.tail_sigma[8]
            );
        }
    }
    let mean_diff = diff / 10.0;
    let summary = format!("(a) {a}/10  (b) {b}/10  (c) mean mAUC difference {mean_diff:+.2e}; {spectrum_note}");
    let failed: Vec<&str> = [(a >= 9, "a"), (b >= 9, "b"), (mean_diff >= 0.0, "c")]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, name)| name)
        .collect();
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(format!("part {} failed: {summary}", failed.join(", ")))
    }
}

fn lorank(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lorank"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("lorank {}: {}", args[0], String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn artifacts(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n == "trainlog.jsonl" || n == "checkpoint.json" || n.ends_with(".lrfm"))
        .collect();
    names.sort();
    names
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    lorank(&[
        "synth",
        "--n",
        "120",
        "--d",
        "12",
        "--classes",
        "3",
        "--seed",
        "3",
        "--out",
        &p("data"),
    ])?;
    lorank(&[
        "train",
        "--features",
        &p("data/features.csv"),
        "--labels",
        &p("data/labels.csv"),
        "--extractor",
        "mlp",
        "--hidden",
        "8",
        "--epochs",
        "10",
        "--batch-size",
        "32",
        "--lr",
        "0.01",
        "--gamma",
        "0.3",
        "--eta",
        "0.01",
        "--refresh-period",
        "3",
        "--seed",
        "11",
        "--out",
        &p("first"),
    ])?;
    lorank(&["replay", "--manifest", &p("first/manifest.json"), "--out", &p("second")])?;
    let (first, second) = (tmp.path().join("first"), tmp.path().join("second"));
    let names = artifacts(&first);
    ensure(names == artifacts(&second), || {
        "replay wrote a different file set".into()
    })?;
    ensure(names.len() >= 3, || format!("missing artifacts: {names:?}"))?;
    for name in &names {
        let (x, y) = (
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
        );
        ensure(x == y, || format!("{name} differs"))?;
    }
    Ok(format!(
        "train + replay produced identical bytes for {}",
        names.join(", ")
    ))
}

fn protocol_fidelity() -> Check {
    ensure(DEFAULT_GAMMAS == [0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.15, 0.2], || {
        format!("gamma grid {DEFAULT_GAMMAS:?}")
    })?;
    ensure(DEFAULT_ETAS == [5e-4, 1e-3, 2.5e-3, 5e-3, 1e-2], || {
        format!("eta grid {DEFAULT_ETAS:?}")
    })?;
    let grid = GridSpec::default();
    ensure(grid.folds == 5 && grid.cv_fraction == 0.2, || {
        format!("cv protocol {} folds on {}", grid.folds, grid.cv_fraction)
    })?;
    let t = rank_from_gamma(0.05, 10_000, 768).map_err(|e| e.to_string())?;
    ensure(t == 39, || format!("rank rule gave {t}"))?;
    let expected = [("nih", 0.05, 5e-4), ("covidx", 0.003, 1e-3), ("chexpert", 0.05, 1e-3)];
    for (name, gamma, eta) in expected {
        let preset = Preset::from_name(name).ok_or_else(|| format!("preset {name} missing"))?;
        let c = TrainConfig::default().with_preset(preset);
        ensure(c.gamma == gamma && c.eta_reg == eta, || {
            format!("{name}: ({}, {})", c.gamma, c.eta_reg)
        })?;
    }
    Ok("grids, 5-fold on 20%, T = 39, three presets".into())
}

fn bound_behavior() -> Check {
    let mut r = rng(10);
    for case in 0..20 {
        let n = r.random_range(4..=15);
        let d = r.random_range(1..=8);
        let f = random_matrix(&mut r, n, d);
        let y = binary_labels(&mut r, n, 2);
        let lambdas = kernel_eigenvalues(&f).unwrap();
        let rank = svd(&f).unwrap().numerical_rank(1e-10);
        let lambda_r = lambdas[rank - 1];
        // 0 < lr * lambda_r < 1 and lr * lambda_1 < 1.
        let lr = r.random_range(0.05..0.95) / lambdas[0].max(lambda_r);
        let terms: Vec<f64> = (1..=8)
            .map(|t| {
                let inputs = BoundInputs {
                    lr,
                    iterations: t,
                    x: 1.0,
                    constants: BoundConstants::default(),
                };
                bound_terms(&f, &y, inputs).map(|b| b.optimization_term)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure(terms.windows(2).all(|w| w[1] < w[0]), || {
            format!("case {case}: {terms:?}")
        })?;
    }
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = r.random_range(2..=10);
        let d = n + r.random_range(0..=6);
        let f = random_matrix(&mut r, n, d);
        let y = binary_labels(&mut r, n, 3);
        let inputs = BoundInputs {
            lr: 0.1,
            iterations: 5,
            x: 1.0,
            constants: BoundConstants::default(),
        };
        let b = bound_terms(&f, &y, inputs).map_err(|e| e.to_string())?;
        ensure(b.rank == n, || format!("rank {} for n = {n}", b.rank))?;
        worst = worst.max(b.label_residual);
    }
    ensure(worst <= 1e-8, || format!("label residual {worst:.2e} at full rank"))?;
    Ok(format!(
        "optimization term decreasing on 20 instances; full-rank residual <= {worst:.1e}"
    ))
}

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            name: "1 SVD oracle equivalence",
            budget: Some(Duration::from_secs(10)),
            check: svd_oracle,
        },
        Criterion {
            name: "2 regularizer exactness",
            budget: Some(Duration::from_secs(5)),
            check: regularizer_exactness,
        },
        Criterion {
            name: "3 gradient fidelity",
            budget: Some(Duration::from_secs(30)),
            check: gradient_fidelity,
        },
        Criterion {
            name: "4 epoch-sum identity",
            budget: None,
            check: epoch_sum_identity,
        },
        Criterion {
            name: "5 AUC oracle",
            budget: None,
            check: auc_oracle,
        },
        Criterion {
            name: "6 kernel complexity",
            budget: None,
            check: kernel_complexity_check,
        },
        Criterion {
            name: "7 directional experiment",
            budget: Some(Duration::from_secs(300)),
            check: directional_experiment,
        },
        Criterion {
            name: "8 determinism",
            budget: None,
            check: determinism,
        },
        Criterion {
            name: "9 hyperparameter protocol",
            budget: None,
            check: protocol_fidelity,
        },
        Criterion {
            name: "10 bound-term behavior",
            budget: None,
            check: bound_behavior,
        },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(budget)) if elapsed > budget => Err(format!("took {elapsed:.1?}, budget {budget:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:<28} {:>8.2?}  {detail}", c.name, elapsed),
            Err(why) => {
                failures += 1;
                println!("FAIL  {:<28} {:>8.2?}  {why}", c.name, elapsed);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
