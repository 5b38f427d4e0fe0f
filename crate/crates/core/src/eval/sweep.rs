//! Privacy-accuracy sweeps over a grid of privacy budgets and retained
//! dimensions, with CSV and SVG emitters.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::classifier::{evaluate, train_classifier, LinearClassifier, TrainSettings};
use super::metrics::distortion;
use crate::dpmech::PrivacyParams;
use crate::error::{Error, Result};
use crate::imageio::ImageDatabase;
use crate::pca::{PcaModel, DEFAULT_LAMBDA_INV};
use crate::pipeline::{assemble, fit_batches, privatize_with_models, split_batches, DatasetFingerprint};

pub const CSV_HEADER: &str = "epsilon,d,accuracy_private,accuracy_vanilla,mse_mean,psnr_mean,status";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub epsilons: Vec<f64>,
    pub ds: Vec<usize>,
    pub lambda_inv: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            epsilons: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            ds: vec![10, 20, 50, 100],
            lambda_inv: DEFAULT_LAMBDA_INV,
            seed: PrivacyParams::DEFAULT_SEED,
            batch_size: PrivacyParams::DEFAULT_BATCH_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub epsilon: f64,
    pub d: usize,
    /// NaN for failed cells, like the distortion columns.
    pub accuracy_private: f64,
    pub accuracy_vanilla: f64,
    pub mse_mean: f64,
    pub psnr_mean: f64,
    pub status: CellStatus,
}

impl SweepCell {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Grid order: epsilon-major, then d.
    pub cells: Vec<SweepCell>,
    pub dataset_id: String,
    pub classifier_id: String,
    pub seed: u64,
}

/// Noise seed for one grid cell, a function of the master seed and the cell
/// coordinates only.
pub fn cell_seed(master: u64, epsilon: f64, d: usize) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ epsilon.to_bits());
    splitmix64(h ^ d as u64)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains the inspector once on `train`, then sweeps the grid on `test`.
pub fn sweep(
    train: &ImageDatabase,
    test: &ImageDatabase,
    settings: &SweepSettings,
    train_settings: &TrainSettings,
) -> Result<(LinearClassifier, SweepResult)> {
    let clf = train_classifier(train, train_settings)?;
    let result = sweep_with_classifier(&clf, test, settings)?;
    Ok((clf, result))
}

pub fn sweep_with_classifier(
    clf: &LinearClassifier,
    test: &ImageDatabase,
    settings: &SweepSettings,
) -> Result<SweepResult> {
    if settings.epsilons.is_empty() || settings.ds.is_empty() {
        return Err(Error::invalid("sweep needs at least one epsilon and one d"));
    }
    let vanilla = evaluate(clf, test)?;
    let ranges = split_batches(test, settings.batch_size)?;
    // PCA fits depend only on the data, so every cell shares them
    let models = fit_batches(test, &ranges);

    let grid: Vec<(f64, usize)> = settings
        .epsilons
        .iter()
        .flat_map(|&e| settings.ds.iter().map(move |&d| (e, d)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(epsilon, d)| {
            let outcome = models
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|m| run_cell(clf, test, &ranges, m, epsilon, d, settings).map_err(|e| e.to_string()));
            match outcome {
                Ok((acc, mse, psnr)) => SweepCell {
                    epsilon,
                    d,
                    accuracy_private: acc,
                    accuracy_vanilla: vanilla,
                    mse_mean: mse,
                    psnr_mean: psnr,
                    status: CellStatus::Ok,
                },
                Err(msg) => SweepCell {
                    epsilon,
                    d,
                    accuracy_private: f64::NAN,
                    accuracy_vanilla: vanilla,
                    mse_mean: f64::NAN,
                    psnr_mean: f64::NAN,
                    status: CellStatus::Failed(msg),
                },
            }
        })
        .collect();

    Ok(SweepResult {
        cells,
        dataset_id: DatasetFingerprint::of(test).sha256[..16].to_string(),
        classifier_id: classifier_id(clf),
        seed: settings.seed,
    })
}

fn run_cell(
    clf: &LinearClassifier,
    test: &ImageDatabase,
    ranges: &[std::ops::Range<usize>],
    models: &[PcaModel],
    epsilon: f64,
    d: usize,
    settings: &SweepSettings,
) -> Result<(f64, f64, f64)> {
    let params = PrivacyParams {
        epsilon,
        d,
        lambda_inv: settings.lambda_inv,
        seed: cell_seed(settings.seed, epsilon, d),
        batch_size: settings.batch_size,
    };
    let batches = privatize_with_models(test, ranges, models, &params)?;
    let private = assemble(test, &batches)?;
    let acc = evaluate(clf, &private)?;
    let dist = distortion(test, &private)?;
    let n = dist.len() as f64;
    let mse = dist.iter().map(|d| d.mse).sum::<f64>() / n;
    let psnr = dist.iter().map(|d| d.psnr).sum::<f64>() / n;
    Ok((acc, mse, psnr))
}

fn classifier_id(clf: &LinearClassifier) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for w in clf.weights().as_slice() {
        h.update(w.to_le_bytes());
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for c in &self.cells {
            let status = match &c.status {
                CellStatus::Ok => "ok",
                CellStatus::Failed(_) => "failed",
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                c.epsilon,
                c.d,
                fmt_num(c.accuracy_private),
                fmt_num(c.accuracy_vanilla),
                fmt_num(c.mse_mean),
                fmt_num(c.psnr_mean),
                status
            );
        }
        s
    }

    pub fn cell(&self, epsilon: f64, d: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.epsilon == epsilon && c.d == d)
    }

    /// Distinct epsilons in grid order.
    pub fn epsilons(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.epsilon) {
                out.push(c.epsilon);
            }
        }
        out
    }

    pub fn ds(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.d) {
                out.push(c.d);
            }
        }
        out
    }

    /// Private accuracy averaged over successful `d` cells, per epsilon.
    pub fn mean_accuracy_by_epsilon(&self) -> Vec<(f64, f64)> {
        self.epsilons()
            .into_iter()
            .map(|e| {
                let accs: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.epsilon == e && c.is_ok())
                    .map(|c| c.accuracy_private)
                    .collect();
                let mean = if accs.is_empty() {
                    f64::NAN
                } else {
                    accs.iter().sum::<f64>() / accs.len() as f64
                };
                (e, mean)
            })
            .collect()
    }

    /// Accuracy against epsilon, one polyline per d, with the vanilla accuracy
    /// as a dashed horizontal reference.
    pub fn accuracy_svg(&self) -> String {
        const W: f64 = 720.0;
        const H: f64 = 440.0;
        const LEFT: f64 = 60.0;
        const RIGHT: f64 = 130.0;
        const TOP: f64 = 30.0;
        const BOTTOM: f64 = 50.0;
        const COLORS: [&str; 8] = [
            "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
        ];

        let mut eps = self.epsilons();
        eps.sort_by(f64::total_cmp);
        let log = eps.first().is_some_and(|&e| e > 0.0) && eps.len() > 1;
        let xv = |e: f64| if log { e.log10() } else { e };
        let (x0, x1) = (xv(eps[0]), xv(*eps.last().unwrap()));
        let span = if x1 > x0 { x1 - x0 } else { 1.0 };
        let px = |e: f64| LEFT + (xv(e) - x0) / span * (W - LEFT - RIGHT);
        let py = |a: f64| TOP + (1.0 - a) * (H - TOP - BOTTOM);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            H - BOTTOM,
            W - RIGHT,
            H - BOTTOM
        );
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
            H - BOTTOM
        );
        for tick in 0..=10 {
            let a = tick as f64 / 10.0;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.1}" text-anchor="end">{a:.1}</text>"#,
                LEFT - 6.0,
                py(a) + 4.0
            );
        }
        for &e in &eps {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{e}</text>"#,
                px(e),
                H - BOTTOM + 16.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">privacy budget epsilon{}</text>"#,
            LEFT + (W - LEFT - RIGHT) / 2.0,
            H - 12.0,
            if log { " (log scale)" } else { "" }
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">test accuracy</text>"#,
            H / 2.0,
            H / 2.0
        );

        if let Some(vanilla) = self.cells.first().map(|c| c.accuracy_vanilla) {
            let _ = writeln!(
                s,
                r#"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="black" stroke-dasharray="6 4"/>"#,
                W - RIGHT,
                y = py(vanilla)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.1}">vanilla {:.4}</text>"#,
                W - RIGHT + 8.0,
                py(vanilla) + 4.0,
                vanilla
            );
        }
        for (i, d) in self.ds().into_iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let mut pts: Vec<(f64, f64)> = self
                .cells
                .iter()
                .filter(|c| c.d == d && c.is_ok())
                .map(|c| (c.epsilon, c.accuracy_private))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let points: Vec<String> = pts
                .iter()
                .map(|&(e, a)| format!("{:.1},{:.1}", px(e), py(a)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                points.join(" ")
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">d = {d}</text>"#,
                W - RIGHT + 8.0,
                TOP + 20.0 + 16.0 * i as f64
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(epsilon: f64, d: usize, acc: f64) -> SweepCell {
        SweepCell {
            epsilon,
            d,
            accuracy_private: acc,
            accuracy_vanilla: 0.9,
            mse_mean: 12.5,
            psnr_mean: 30.0,
            status: CellStatus::Ok,
        }
    }

    fn result() -> SweepResult {
        let mut failed = cell(1.0, 20, f64::NAN);
        failed.status = CellStatus::Failed("d too large".into());
        failed.mse_mean = f64::NAN;
        failed.psnr_mean = f64::NAN;
        SweepResult {
            cells: vec![cell(1.0, 10, 0.2), failed, cell(10.0, 10, 0.7), cell(10.0, 20, 0.8)],
            dataset_id: "x".into(),
            classifier_id: "y".into(),
            seed: 0,
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let csv = result().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "1,10,0.2,0.9,12.5,30,ok");
        assert_eq!(lines[2], "1,20,,0.9,,,failed");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn averages_skip_failed_cells() {
        let means = result().mean_accuracy_by_epsilon();
        assert_eq!(means[0], (1.0, 0.2));
        assert!((means[1].1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn svg_has_one_polyline_per_d_and_reference() {
        let svg = result().accuracy_svg();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn cell_seeds_depend_on_coordinates_only() {
        assert_eq!(cell_seed(7, 5.0, 20), cell_seed(7, 5.0, 20));
        assert_ne!(cell_seed(7, 5.0, 20), cell_seed(7, 5.0, 10));
        assert_ne!(cell_seed(7, 5.0, 20), cell_seed(7, 2.0, 20));
        assert_ne!(cell_seed(7, 5.0, 20), cell_seed(8, 5.0, 20));
    }
}
