//! End-to-end privatization: batch, fit, reduce, noise, invert, quantize, write.

mod config;
mod manifest;

pub use config::parse_key_values;
pub use manifest::{BatchRecord, DatasetFingerprint, RunManifest};

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::dpmech::{privatize, NoiseProfile, NoiseStream, PrivacyParams};
use crate::error::{Error, Result};
use crate::imageio::{save_netpbm, unflatten, Image, ImageDatabase};
use crate::pca::{fit, inverse, reduce, PcaModel, ReducedBatch};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Splits `0..n` into contiguous batches of `batch_size`. A trailing batch with
/// fewer than two images is merged into the one before it.
pub fn batch_ranges(n: usize, batch_size: usize) -> Result<Vec<Range<usize>>> {
    if batch_size < 2 {
        return Err(Error::invalid(format!(
            "batch_size must be at least 2, got {batch_size}"
        )));
    }
    if n < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 images to privatize, got {n}"
        )));
    }
    let mut ranges: Vec<Range<usize>> = (0..n)
        .step_by(batch_size)
        .map(|start| start..(start + batch_size).min(n))
        .collect();
    if ranges.len() > 1 && ranges.last().is_some_and(|r| r.len() < 2) {
        let tail = ranges.pop().unwrap();
        ranges.last_mut().unwrap().end = tail.end;
    }
    Ok(ranges)
}

pub fn split_batches(db: &ImageDatabase, batch_size: usize) -> Result<Vec<Range<usize>>> {
    batch_ranges(db.len(), batch_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizedBatch {
    pub index: usize,
    pub range: Range<usize>,
    pub rank: usize,
    pub reduced_noised: ReducedBatch,
    pub reconstructed: Vec<Image>,
    pub profile: NoiseProfile,
    /// Mean squared pixel error of `reconstructed` against the source images.
    pub mse: f64,
    /// Uniform draws consumed by the noise stream.
    pub draws: u64,
}

/// Fits one PCA model per batch.
pub fn fit_batches(db: &ImageDatabase, ranges: &[Range<usize>]) -> Result<Vec<PcaModel>> {
    let fits: Vec<Result<PcaModel>> = ranges
        .par_iter()
        .enumerate()
        .map(|(i, r)| fit(&db.flattened(r.clone())).map_err(|e| e.at_stage(i, "fit")))
        .collect();
    fits.into_iter().collect()
}

/// Reduces, noises and reconstructs one batch with an already fitted model.
pub fn privatize_batch(
    db: &ImageDatabase,
    index: usize,
    range: Range<usize>,
    model: &PcaModel,
    params: &PrivacyParams,
) -> Result<PrivatizedBatch> {
    let shape = db
        .shape()
        .ok_or_else(|| Error::invalid("empty database"))?;
    let rows = db.flattened(range.clone());
    let reduced = reduce(model, &rows, params.d).map_err(|e| e.at_stage(index, "reduce"))?;
    let mut rng = NoiseStream::new(params.seed, index as u64);
    let (noised, profile) =
        privatize(&reduced, params, &mut rng).map_err(|e| e.at_stage(index, "privatize"))?;
    let restored = inverse(model, &noised, params.lambda_inv)
        .map_err(|e| e.at_stage(index, "inverse"))?;

    let mut reconstructed = Vec::with_capacity(range.len());
    let mut sq_err = 0.0;
    for (values, src) in restored.row_iter().zip(&db.images()[range.clone()]) {
        let img = unflatten(values, shape).map_err(|e| e.at_stage(index, "reshape"))?;
        sq_err += img
            .pixels()
            .iter()
            .zip(src.pixels())
            .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
            .sum::<f64>();
        reconstructed.push(img);
    }
    let mse = sq_err / (range.len() * shape.len()) as f64;
    Ok(PrivatizedBatch {
        index,
        range,
        rank: model.rank(),
        reduced_noised: noised,
        reconstructed,
        profile,
        mse,
        draws: rng.draws(),
    })
}

/// Runs every batch against pre-fitted models. Parallel and serial execution
/// give identical results; on failure the error of the lowest batch index wins.
pub fn privatize_with_models(
    db: &ImageDatabase,
    ranges: &[Range<usize>],
    models: &[PcaModel],
    params: &PrivacyParams,
) -> Result<Vec<PrivatizedBatch>> {
    params.validate()?;
    if ranges.len() != models.len() {
        return Err(Error::invalid(format!(
            "{} batches but {} models",
            ranges.len(),
            models.len()
        )));
    }
    let out: Vec<Result<PrivatizedBatch>> = ranges
        .par_iter()
        .zip(models)
        .enumerate()
        .map(|(i, (r, m))| privatize_batch(db, i, r.clone(), m, params))
        .collect();
    out.into_iter().collect()
}

/// Privatizes a whole database in memory.
pub fn privatize_in_memory(
    db: &ImageDatabase,
    params: &PrivacyParams,
) -> Result<Vec<PrivatizedBatch>> {
    params.validate()?;
    let ranges = split_batches(db, params.batch_size)?;
    let models = fit_batches(db, &ranges)?;
    privatize_with_models(db, &ranges, &models, params)
}

/// Reassembles privatized batches into a database with the source labels.
pub fn assemble(db: &ImageDatabase, batches: &[PrivatizedBatch]) -> Result<ImageDatabase> {
    let images = batches
        .iter()
        .flat_map(|b| b.reconstructed.iter().cloned())
        .collect();
    db.with_images(images)
}

/// File name of output image `index`: zero-padded index, then class name.
pub fn output_name(db: &ImageDatabase, index: usize) -> String {
    let width = db.len().saturating_sub(1).to_string().len().max(5);
    let label = &db.class_names()[db.labels()[index]];
    let ext = match db.shape() {
        Some(s) if s.channels == 3 => "ppm",
        _ => "pgm",
    };
    format!("{index:0width$}_{label}.{ext}")
}

/// Privatizes `db` and writes the images plus `manifest.txt` to `out_dir`.
///
/// Everything is first written to a staging directory next to `out_dir` and
/// renamed into place only once the manifest is complete, so a failed run
/// leaves `out_dir` exactly as it was.
pub fn privatize_database(
    db: &ImageDatabase,
    params: &PrivacyParams,
    out_dir: &Path,
) -> Result<RunManifest> {
    let started = unix_now();
    let batches = privatize_in_memory(db, params)?;

    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: started,
        params: *params,
        dataset: DatasetFingerprint::of(db),
        batches: batches.iter().map(BatchRecord::from).collect(),
    };

    let staging = staging_dir(out_dir);
    let result = (|| -> Result<()> {
        if staging.exists() {
            std::fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        std::fs::create_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        for batch in &batches {
            for (offset, img) in batch.reconstructed.iter().enumerate() {
                let idx = batch.range.start + offset;
                save_netpbm(img, &staging.join(output_name(db, idx)))
                    .map_err(|e| e.at_stage(batch.index, "write"))?;
            }
        }
        manifest.finished_unix = unix_now();
        let path = staging.join(MANIFEST_FILE);
        std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
        if out_dir.exists() {
            std::fs::remove_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        }
        std::fs::rename(&staging, out_dir).map_err(|e| Error::io(out_dir, e))
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_dir_all(&staging);
        return Err(e);
    }
    Ok(manifest)
}

fn staging_dir(out_dir: &Path) -> PathBuf {
    let name = out_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out_dir.with_file_name(format!(".{name}.partial"))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::ImageShape;

    #[test]
    fn batch_partition_examples() {
        assert_eq!(batch_ranges(250, 100).unwrap(), vec![0..100, 100..200, 200..250]);
        assert_eq!(batch_ranges(201, 100).unwrap(), vec![0..100, 100..201]);
        assert_eq!(batch_ranges(100, 100).unwrap(), vec![0..100]);
        assert_eq!(batch_ranges(3, 2).unwrap(), vec![0..3]);
        assert_eq!(batch_ranges(2, 100).unwrap(), vec![0..2]);
    }

    #[test]
    fn batch_partition_errors() {
        assert!(batch_ranges(1, 100).is_err());
        assert!(batch_ranges(10, 1).is_err());
    }

    #[test]
    fn output_names_pad_and_label() {
        let img = Image::new(ImageShape::gray(1, 1), vec![0]).unwrap();
        let db = ImageDatabase::new(
            vec![img.clone(), img],
            vec![1, 0],
            vec!["zero".into(), "one".into()],
        )
        .unwrap();
        assert_eq!(output_name(&db, 0), "00000_one.pgm");
        assert_eq!(output_name(&db, 1), "00001_zero.pgm");
    }

    #[test]
    fn staging_is_a_sibling() {
        assert_eq!(staging_dir(Path::new("/tmp/run/out")), Path::new("/tmp/run/.out.partial"));
    }
}
