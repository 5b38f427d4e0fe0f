#![allow(dead_code)]

use std::path::{Path, PathBuf};

use pcadp_core::imageio::load_idx;
use pcadp_core::{ImageDatabase, Matrix};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Entries uniform on `[0, scale)`.
pub fn random_matrix(rows: usize, cols: usize, scale: f64, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let data = (0..rows * cols).map(|_| uniform(&mut r) * scale).collect();
    Matrix::new(rows, cols, data).unwrap()
}

pub fn random_symmetric(n: usize, seed: u64) -> Matrix {
    let a = random_matrix(n, n, 2.0, seed);
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = a[(i, j)] + a[(j, i)] - 2.0;
        }
    }
    s
}

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-subset")
}

pub fn mnist_test() -> ImageDatabase {
    let d = data_dir();
    load_idx(&d.join("t10k-images-idx3-ubyte"), &d.join("t10k-labels-idx1-ubyte")).unwrap()
}

pub fn mnist_train() -> ImageDatabase {
    let d = data_dir();
    load_idx(&d.join("train-images-idx3-ubyte"), &d.join("train-labels-idx1-ubyte")).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Every file under `dir` with its bytes, sorted by name.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Independent IDX image reader: header fields by fixed offsets, then raw rows.
pub fn reference_idx_images(path: &Path, count: usize) -> Vec<Vec<u8>> {
    let bytes = std::fs::read(path).unwrap();
    let be = |o: usize| u32::from_be_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize;
    assert_eq!(be(0), 0x0803);
    let (rows, cols) = (be(8), be(12));
    (0..count.min(be(4)))
        .map(|i| bytes[16 + i * rows * cols..16 + (i + 1) * rows * cols].to_vec())
        .collect()
}

pub fn reference_idx_labels(path: &Path) -> Vec<u8> {
    let bytes = std::fs::read(path).unwrap();
    assert_eq!(&bytes[..4], &[0, 0, 8, 1]);
    bytes[8..].to_vec()
}

/// Image with random dimensions in `1..=max_side`, gray or RGB.
pub fn random_image(rng: &mut ChaCha8Rng, max_side: u64) -> pcadp_core::Image {
    let w = (rng.next_u64() % max_side + 1) as usize;
    let h = (rng.next_u64() % max_side + 1) as usize;
    let c = if rng.next_u64().is_multiple_of(2) { 1 } else { 3 };
    let shape = pcadp_core::ImageShape::new(w, h, c).unwrap();
    let pixels = (0..shape.len()).map(|_| rng.next_u64() as u8).collect();
    pcadp_core::Image::new(shape, pixels).unwrap()
}
