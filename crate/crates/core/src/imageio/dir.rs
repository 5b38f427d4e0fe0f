//! Folder ingestion driven by a `filename,label` manifest.
//!
//! Blank lines and `#` comments are ignored, except for the directive
//! `#resize=WxH`, which nearest-neighbour resamples every image after decoding.

use std::collections::BTreeSet;
use std::path::Path;

use super::{load_netpbm, Image, ImageDatabase};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirManifest {
    /// `(filename, label)` in file order.
    pub entries: Vec<(String, String)>,
    pub resize: Option<(usize, usize)>,
}

pub fn parse_dir_manifest(text: &str) -> Result<DirManifest> {
    let mut manifest = DirManifest::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(spec) = line.strip_prefix("#resize=") {
            let parsed = spec
                .split_once('x')
                .and_then(|(w, h)| Some((w.trim().parse().ok()?, h.trim().parse().ok()?)))
                .filter(|&(w, h): &(usize, usize)| w > 0 && h > 0);
            manifest.resize = Some(parsed.ok_or_else(|| {
                Error::invalid(format!("line {}: bad resize directive {spec:?}", lineno + 1))
            })?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (file, label) = line.split_once(',').ok_or_else(|| {
            Error::invalid(format!("line {}: expected filename,label", lineno + 1))
        })?;
        let (file, label) = (file.trim(), label.trim());
        if file.is_empty() || label.is_empty() {
            return Err(Error::invalid(format!(
                "line {}: empty filename or label",
                lineno + 1
            )));
        }
        manifest.entries.push((file.to_string(), label.to_string()));
    }
    Ok(manifest)
}

/// Loads every listed P5/P6 file under `dir`.
///
/// Images are ordered by filename bytes; class names are the sorted distinct
/// labels and each image's label is its index among them.
pub fn load_image_dir(dir: &Path, manifest_path: &Path) -> Result<ImageDatabase> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let mut manifest = parse_dir_manifest(&text)?;
    manifest.entries.sort_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
    if let Some(dup) = manifest.entries.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid(format!("{} listed twice", dup[0].0)));
    }

    let class_names: Vec<String> = manifest
        .entries
        .iter()
        .map(|(_, l)| l.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut images: Vec<Image> = Vec::with_capacity(manifest.entries.len());
    let mut labels = Vec::with_capacity(manifest.entries.len());
    for (file, label) in &manifest.entries {
        let img = load_netpbm(&dir.join(file))?;
        images.push(match manifest.resize {
            Some((w, h)) => img.resize_nearest(w, h),
            None => img,
        });
        labels.push(class_names.binary_search(label).expect("label collected above"));
    }

    if let Some(first) = images.first().map(Image::shape) {
        let offenders: Vec<String> = manifest
            .entries
            .iter()
            .zip(&images)
            .filter(|(_, img)| img.shape() != first)
            .map(|((file, _), img)| format!("{file} ({})", img.shape()))
            .collect();
        if !offenders.is_empty() {
            return Err(Error::Heterogeneous { offenders });
        }
    }
    ImageDatabase::new(images, labels, class_names)
}
