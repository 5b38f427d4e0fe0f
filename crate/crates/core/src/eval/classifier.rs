//! Multinomial logistic regression on raw pixel intensities, the inspector
//! used to measure how much class information survives privatization.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::imageio::{Image, ImageDatabase};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Seeds the small random weight initialization.
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    /// `classes x (s + 1)`; the last column is the bias.
    weights: Matrix,
    class_names: Vec<String>,
    pub settings: TrainSettings,
    pub final_loss: f64,
    pub train_accuracy: f64,
}

impl LinearClassifier {
    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn input_len(&self) -> usize {
        self.weights.cols() - 1
    }

    /// Class scores for one image.
    pub fn logits(&self, img: &Image) -> Vec<f64> {
        let x = features(img);
        self.weights
            .row_iter()
            .map(|w| affine(w, &x))
            .collect()
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn predict(&self, img: &Image) -> usize {
        argmax(&self.logits(img))
    }
}

fn features(img: &Image) -> Vec<f64> {
    img.pixels().iter().map(|&p| f64::from(p) / 255.0).collect()
}

fn affine(w: &[f64], x: &[f64]) -> f64 {
    let (bias, weights) = w.split_last().expect("weights include a bias");
    bias + weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Full-batch gradient descent on the softmax cross-entropy, inputs scaled to `[0, 1]`.
pub fn train_classifier(train: &ImageDatabase, settings: &TrainSettings) -> Result<LinearClassifier> {
    let mut present = vec![false; train.num_classes()];
    for &l in train.labels() {
        present[l] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::invalid("training set needs at least 2 classes"));
    }
    if !(settings.learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let k = train.num_classes();
    let s = train.shape().expect("non-empty").len();
    let n = train.len();
    let xs: Vec<Vec<f64>> = train.images().iter().map(features).collect();

    let mut rng = ChaCha20Rng::seed_from_u64(settings.seed);
    let init: Vec<f64> = (0..k * (s + 1))
        .map(|_| ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 1e-3)
        .collect();
    let mut weights = Matrix::new(k, s + 1, init)?;

    let mut grad = vec![0.0; k * (s + 1)];
    let mut probs = vec![0.0; k];
    let mut loss = 0.0;
    for _ in 0..settings.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        loss = 0.0;
        for (x, &label) in xs.iter().zip(train.labels()) {
            softmax_into(&weights, x, &mut probs);
            loss -= probs[label].max(1e-300).ln();
            for (c, &p) in probs.iter().enumerate() {
                let delta = p - if c == label { 1.0 } else { 0.0 };
                let g = &mut grad[c * (s + 1)..(c + 1) * (s + 1)];
                for (gj, xj) in g.iter_mut().zip(x) {
                    *gj += delta * xj;
                }
                g[s] += delta;
            }
        }
        loss /= n as f64;
        let step = settings.learning_rate / n as f64;
        for c in 0..k {
            for (w, g) in weights.row_mut(c).iter_mut().zip(&grad[c * (s + 1)..(c + 1) * (s + 1)]) {
                *w -= step * g;
            }
        }
    }
    if weights.as_slice().iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("classifier training"));
    }

    let mut clf = LinearClassifier {
        weights,
        class_names: train.class_names().to_vec(),
        settings: *settings,
        final_loss: loss,
        train_accuracy: 0.0,
    };
    clf.train_accuracy = evaluate(&clf, train)?;
    Ok(clf)
}

fn softmax_into(weights: &Matrix, x: &[f64], out: &mut [f64]) {
    for (o, w) in out.iter_mut().zip(weights.row_iter()) {
        *o = affine(w, x);
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Fraction of images whose predicted class equals their label.
pub fn evaluate(clf: &LinearClassifier, test: &ImageDatabase) -> Result<f64> {
    let shape = test
        .shape()
        .ok_or_else(|| Error::invalid("cannot evaluate on an empty test set"))?;
    if shape.len() != clf.input_len() {
        return Err(Error::invalid(format!(
            "classifier expects {} inputs, test images have {}",
            clf.input_len(),
            shape.len()
        )));
    }
    let correct = test
        .images()
        .iter()
        .zip(test.labels())
        .filter(|(img, &l)| clf.predict(img) == l)
        .count();
    Ok(correct as f64 / test.len() as f64)
}
