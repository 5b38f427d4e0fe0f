mod common;

use common::{max_abs_diff, random_matrix};
use pcadp_core::pca::{fit, inverse, reduce};
use pcadp_core::{Error, Matrix, PcaModel};

fn reconstruction_mse(batch: &Matrix, model: &PcaModel, d: usize, lambda: f64) -> f64 {
    let red = reduce(model, batch, d).unwrap();
    let back = inverse(model, &red, lambda).unwrap();
    let diff = back.sub(batch).unwrap();
    diff.as_slice().iter().map(|v| v * v).sum::<f64>() / batch.rows() as f64
}

#[test]
fn full_rank_round_trip() {
    let batch = random_matrix(20, 64, 255.0, 1);
    let model = fit(&batch).unwrap();
    assert_eq!(model.rank(), 19);
    let red = reduce(&model, &batch, model.rank()).unwrap();
    let back = inverse(&model, &red, 1e-8).unwrap();
    assert!(max_abs_diff(back.as_slice(), batch.as_slice()) <= 1e-5 * 255.0);
}

#[test]
fn truncation_error_is_tail_energy() {
    let batch = random_matrix(20, 64, 255.0, 2);
    let model = fit(&batch).unwrap();
    for d in [1, 3, 8, 15, 18] {
        let expected: f64 = model.eigenvalues()[d..].iter().sum::<f64>() / 20.0;
        let got = reconstruction_mse(&batch, &model, d, 1e-8);
        assert!((got - expected).abs() <= 0.02 * expected, "d {d}: {got} vs {expected}");
    }
}

#[test]
fn error_shrinks_with_d() {
    let batch = random_matrix(30, 40, 255.0, 3);
    let model = fit(&batch).unwrap();
    let errors: Vec<f64> = (1..=model.rank())
        .map(|d| reconstruction_mse(&batch, &model, d, 1e-6))
        .collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{errors:?}");
}

#[test]
fn reduced_norms_match_centered_norms_at_full_rank() {
    let batch = random_matrix(6, 10, 1.0, 4);
    let model = fit(&batch).unwrap();
    let red = reduce(&model, &batch, model.rank()).unwrap();
    for i in 0..6 {
        let centered: f64 = batch.row(i).iter().zip(model.mean()).map(|(x, m)| (x - m).powi(2)).sum();
        let reduced: f64 = red.row(i).iter().map(|v| v * v).sum();
        assert!((centered.sqrt() - reduced.sqrt()).abs() <= 1e-8);
    }
}

#[test]
fn rank_is_capped_by_duplicates() {
    let base = random_matrix(3, 12, 255.0, 5);
    let rows: Vec<Vec<f64>> = (0..9).map(|i| base.row(i % 3).to_vec()).collect();
    let batch = Matrix::from_rows(&rows).unwrap();
    let model = fit(&batch).unwrap();
    assert_eq!(model.rank(), 2);
    assert!(reduce(&model, &batch, 3).is_err());
}

#[test]
fn identical_rows_are_degenerate() {
    let rows = vec![vec![7.0; 16]; 5];
    let batch = Matrix::from_rows(&rows).unwrap();
    assert!(matches!(fit(&batch), Err(Error::Degenerate(_))));
}

#[test]
fn model_file_round_trip() {
    let batch = random_matrix(8, 20, 255.0, 6);
    let model = fit(&batch).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    model.save(&path).unwrap();
    assert_eq!(PcaModel::load(&path).unwrap(), model);
    let mut bytes = model.to_bytes();
    bytes.pop();
    assert!(PcaModel::from_bytes(&bytes).is_err());
}
