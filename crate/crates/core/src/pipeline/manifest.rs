//! The run manifest: a line-oriented record of everything needed to reproduce
//! and audit a privatization run.

use std::fmt::Write as _;
use std::ops::Range;

use sha2::{Digest, Sha256};

use super::PrivatizedBatch;
use crate::dpmech::{NoiseProfile, PrivacyParams};
use crate::error::{Error, Result};
use crate::imageio::{ImageDatabase, ImageShape};

const HEADER: &str = "# pcadp run manifest";
const NOISE_COLUMNS: &str = "attribute,sensitivity,scale";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFingerprint {
    /// SHA-256 over shape, labels and pixels.
    pub sha256: String,
    pub shape: ImageShape,
    pub n: usize,
}

impl DatasetFingerprint {
    pub fn of(db: &ImageDatabase) -> Self {
        let shape = db.shape().unwrap_or(ImageShape::gray(0, 0));
        let mut h = Sha256::new();
        for v in [shape.width, shape.height, shape.channels, db.len()] {
            h.update((v as u64).to_le_bytes());
        }
        for (img, &label) in db.images().iter().zip(db.labels()) {
            h.update(db.class_names()[label].as_bytes());
            h.update([0u8]);
            h.update(img.pixels());
        }
        let sha256 = h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Self {
            sha256,
            shape,
            n: db.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub index: usize,
    pub range: Range<usize>,
    pub rank: usize,
    pub mse: f64,
    pub draws: u64,
    pub profile: NoiseProfile,
}

impl From<&PrivatizedBatch> for BatchRecord {
    fn from(b: &PrivatizedBatch) -> Self {
        Self {
            index: b.index,
            range: b.range.clone(),
            rank: b.rank,
            mse: b.mse,
            draws: b.draws,
            profile: b.profile.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub params: PrivacyParams,
    pub dataset: DatasetFingerprint,
    pub batches: Vec<BatchRecord>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let ds = &self.dataset;
        let _ = writeln!(s, "{HEADER}");
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "tool_version={}", self.tool_version);
        let _ = writeln!(s, "started_unix={}", self.started_unix);
        let _ = writeln!(s, "finished_unix={}", self.finished_unix);
        let _ = writeln!(s, "\n[params]");
        let _ = writeln!(s, "epsilon={}", p.epsilon);
        let _ = writeln!(s, "d={}", p.d);
        let _ = writeln!(s, "lambda_inv={}", p.lambda_inv);
        let _ = writeln!(s, "seed={}", p.seed);
        let _ = writeln!(s, "batch_size={}", p.batch_size);
        let _ = writeln!(s, "\n[dataset]");
        let _ = writeln!(s, "sha256={}", ds.sha256);
        let _ = writeln!(s, "shape={}", ds.shape);
        let _ = writeln!(s, "n={}", ds.n);
        for b in &self.batches {
            let _ = writeln!(s, "\n[batch {}]", b.index);
            let _ = writeln!(s, "range={}..{}", b.range.start, b.range.end);
            let _ = writeln!(s, "rank={}", b.rank);
            let _ = writeln!(s, "mse={}", b.mse);
            let _ = writeln!(s, "draws={}", b.draws);
            let _ = writeln!(s, "{NOISE_COLUMNS}");
            for (l, (sens, scale)) in b
                .profile
                .sensitivities
                .iter()
                .zip(&b.profile.scales)
                .enumerate()
            {
                let _ = writeln!(s, "{l},{sens},{scale}");
            }
        }
        s
    }

    /// Manifest text with the timestamp lines removed, for reproducibility checks.
    pub fn text_without_timestamps(&self) -> String {
        strip_timestamps(&self.to_text())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Format {
            field: "manifest",
            offset: line as u64,
            message: msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == HEADER => {}
            _ => return Err(err(0, "missing manifest header".into())),
        }

        let mut section = String::new();
        let mut kv = std::collections::HashMap::new();
        let mut batches: Vec<BatchRecord> = Vec::new();
        let mut batch_fields: Vec<std::collections::HashMap<String, String>> = Vec::new();

        for (no, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.to_string();
                if let Some(idx) = name.strip_prefix("batch ") {
                    let index = idx
                        .parse()
                        .map_err(|_| err(no, format!("bad batch index {idx:?}")))?;
                    batches.push(BatchRecord {
                        index,
                        range: 0..0,
                        rank: 0,
                        mse: 0.0,
                        draws: 0,
                        profile: NoiseProfile {
                            sensitivities: Vec::new(),
                            scales: Vec::new(),
                        },
                    });
                    batch_fields.push(Default::default());
                }
                continue;
            }
            if section.starts_with("batch ") {
                if line == NOISE_COLUMNS {
                    continue;
                }
                if let Some((k, v)) = line.split_once('=') {
                    batch_fields
                        .last_mut()
                        .unwrap()
                        .insert(k.to_string(), v.to_string());
                } else {
                    let cols: Vec<&str> = line.split(',').collect();
                    let b = batches.last_mut().unwrap();
                    if cols.len() != 3 || cols[0].parse::<usize>().ok() != Some(b.profile.scales.len()) {
                        return Err(err(no, format!("bad noise row {line:?}")));
                    }
                    let num = |s: &str| s.parse::<f64>().map_err(|_| err(no, format!("bad number {s:?}")));
                    b.profile.sensitivities.push(num(cols[1])?);
                    b.profile.scales.push(num(cols[2])?);
                }
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(no, format!("expected key=value, got {line:?}")))?;
            kv.insert(format!("{section}.{k}"), v.to_string());
        }

        fn get<T: std::str::FromStr>(
            map: &std::collections::HashMap<String, String>,
            key: &str,
        ) -> Result<T> {
            map.get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Format {
                    field: "manifest",
                    offset: 0,
                    message: format!("missing or malformed {key}"),
                })
        }

        for (b, fields) in batches.iter_mut().zip(&batch_fields) {
            let range: String = get(fields, "range")?;
            let (lo, hi) = range
                .split_once("..")
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .ok_or_else(|| err(0, format!("bad range {range:?}")))?;
            b.range = lo..hi;
            b.rank = get(fields, "rank")?;
            b.mse = get(fields, "mse")?;
            b.draws = get(fields, "draws")?;
        }

        let shape: String = get(&kv, "dataset.shape")?;
        let dims: Vec<usize> = shape.split('x').filter_map(|v| v.parse().ok()).collect();
        if dims.len() != 3 {
            return Err(err(0, format!("bad shape {shape:?}")));
        }
        Ok(Self {
            tool_version: get(&kv, "run.tool_version")?,
            started_unix: get(&kv, "run.started_unix")?,
            finished_unix: get(&kv, "run.finished_unix")?,
            params: PrivacyParams {
                epsilon: get(&kv, "params.epsilon")?,
                d: get(&kv, "params.d")?,
                lambda_inv: get(&kv, "params.lambda_inv")?,
                seed: get(&kv, "params.seed")?,
                batch_size: get(&kv, "params.batch_size")?,
            },
            dataset: DatasetFingerprint {
                sha256: get(&kv, "dataset.sha256")?,
                shape: ImageShape::new(dims[0], dims[1], dims[2])?,
                n: get(&kv, "dataset.n")?,
            },
            batches,
        })
    }

    /// Checks the structural invariants: batch ranges partition `0..n` and
    /// every noise profile has `d` entries.
    pub fn validate(&self) -> Result<()> {
        let mut next = 0;
        for (i, b) in self.batches.iter().enumerate() {
            if b.index != i || b.range.start != next || b.range.end <= b.range.start {
                return Err(Error::invalid(format!("batch {i} breaks the partition")));
            }
            next = b.range.end;
            if b.profile.sensitivities.len() != self.params.d || b.profile.scales.len() != self.params.d {
                return Err(Error::invalid(format!(
                    "batch {i} noise profile does not have d = {} entries",
                    self.params.d
                )));
            }
            if b.draws > (b.range.len() * self.params.d) as u64 {
                return Err(Error::invalid(format!("batch {i} consumed too many draws")));
            }
        }
        if next != self.dataset.n {
            return Err(Error::invalid(format!(
                "batches cover {next} of {} images",
                self.dataset.n
            )));
        }
        Ok(())
    }

    /// Short human-readable digest.
    pub fn summary(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "tool version   {}", self.tool_version);
        let _ = writeln!(
            s,
            "dataset        {} images of {} (sha256 {})",
            self.dataset.n, self.dataset.shape, self.dataset.sha256
        );
        let _ = writeln!(
            s,
            "params         epsilon={} d={} lambda_inv={} seed={} batch_size={}",
            p.epsilon, p.d, p.lambda_inv, p.seed, p.batch_size
        );
        let _ = writeln!(s, "batches        {}", self.batches.len());
        for b in &self.batches {
            let mean_scale = b.profile.scales.iter().sum::<f64>() / b.profile.scales.len().max(1) as f64;
            let _ = writeln!(
                s,
                "  batch {:>3}  images {:>5}..{:<5}  rank {:>4}  mse {:>10.3}  mean scale {:.4}",
                b.index, b.range.start, b.range.end, b.rank, b.mse, mean_scale
            );
        }
        s
    }
}

pub(crate) fn strip_timestamps(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("started_unix=") && !l.starts_with("finished_unix="))
        .map(|l| format!("{l}\n"))
        .collect()
}
