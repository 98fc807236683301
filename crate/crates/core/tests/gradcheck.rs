mod common;

use common::{binary_labels, random_matrix, rng};
use lorank_core::lrfl::{batch_loss, reg_feature_gradient, RegularizerState};
use lorank_core::model::{self, ExtractorSpec, ModelParams};
use lorank_core::DenseMatrix;
use lorank_oracle::central_difference;
use rand::Rng;

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

fn check(spec: ExtractorSpec, seed: u64) {
    let mut r = rng(seed);
    let (n, d, c) = (8, 5, 3);
    let x = random_matrix(&mut r, n, d);
    let y = binary_labels(&mut r, n, c);
    let mut params = ModelParams::init(spec, d, c, &mut r).unwrap();
    // Non-zero head so extractor gradients are exercised.
    for v in params.head.as_mut_slice() {
        *v = r.random_range(-1.0..1.0);
    }
    let k = params.feature_dim();
    let snapshot = random_matrix(&mut r, 20, k);
    let t = r.random_range(0..=k.min(20));
    let state = RegularizerState::from_features(&snapshot, t, r.random_range(0.0..2.0), 1, 0).unwrap();
    let rows: Vec<usize> = (0..n).map(|_| r.random_range(0..20)).collect();

    let reg_grad = reg_feature_gradient(&state, &rows).unwrap();
    let analytic: Vec<f64> = model::grads(&params, &x, &y, &reg_grad)
        .unwrap()
        .tensors
        .iter()
        .flat_map(|t| t.as_slice().to_vec())
        .collect();

    let theta = flatten(&params);
    let mut probe = params.clone();
    let numeric = central_difference(
        |v| {
            unflatten(&mut probe, v);
            batch_loss(&probe, &x, &y, &rows, &state).unwrap()
        },
        &theta,
        1e-5,
    );
    assert_eq!(analytic.len(), numeric.len());
    for (i, (a, num)) in analytic.iter().zip(&numeric).enumerate() {
        let scale = a.abs().max(num.abs()).max(1e-3);
        assert!(
            (a - num).abs() <= 1e-5 * scale,
            "{spec:?} seed {seed} coord {i}: {a} vs {num}"
        );
    }
}

#[test]
fn identity_extractor() {
    for seed in 0..50 {
        check(ExtractorSpec::Identity, seed);
    }
}

#[test]
fn linear_extractor() {
    for seed in 0..50 {
        check(ExtractorSpec::Linear { out_dim: Some(4) }, seed);
        check(ExtractorSpec::Linear { out_dim: None }, 1000 + seed);
    }
}

#[test]
fn mlp_extractor() {
    for seed in 0..50 {
        check(
            ExtractorSpec::Mlp {
                hidden: 6,
                out_dim: Some(4),
            },
            seed,
        );
    }
}

#[test]
fn loss_matches_oracle_bce() {
    let mut r = rng(77);
    let x = random_matrix(&mut r, 6, 3);
    let y = binary_labels(&mut r, 6, 2);
    let mut params = ModelParams::init(ExtractorSpec::Identity, 3, 2, &mut r).unwrap();
    params.head = random_matrix(&mut r, 3, 2);
    let logits = x.matmul(&params.head).unwrap();
    let mut expected = 0.0;
    for i in 0..6 {
        for j in 0..2 {
            let p = 1.0 / (1.0 + (-logits.get(i, j)).exp());
            expected += lorank_oracle::bce(p, y.get(i, j));
        }
    }
    expected /= 6.0;
    let p = model::predict_proba(&params, &x).unwrap();
    let ours = model::bce_loss(&p, &y).unwrap();
    assert!((ours - expected).abs() <= 1e-12);
    let zero = DenseMatrix::zeros(6, 3);
    assert!(model::grads(&params, &x, &y, &zero).unwrap().tensors.len() == 1);
}
