//! Settings merged from an optional `key=value` file and command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use pcadp_core::pipeline::parse_key_values;
use pcadp_core::pca::DEFAULT_LAMBDA_INV;
use pcadp_core::{Error, PrivacyParams, Result};

/// Every recognised key, in help order.
pub const KEYS: &[&str] = &[
    "epsilon",
    "d",
    "lambda_inv",
    "seed",
    "batch_size",
    "idx_images",
    "idx_labels",
    "image_dir",
    "manifest",
    "out",
    "epsilons",
    "ds",
    "montage_rows",
    "montage_cols",
    "train_idx_images",
    "train_idx_labels",
];

pub const DEFAULT_EPSILONS: &str = "1,2,5,10,20,50,100";
pub const DEFAULT_DS: &str = "10,20,50,100";
pub const DEFAULT_MONTAGE_ROWS: usize = 2;
pub const DEFAULT_MONTAGE_COLS: usize = 5;

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Default, Args)]
pub struct KeyArgs {
    /// key=value file; flags override its values
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Privacy budget per attribute
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Retained PCA dimensions
    #[arg(long)]
    pub d: Option<String>,
    /// Ridge term of the regularized inverse [default: 1e-6]
    #[arg(long)]
    pub lambda_inv: Option<String>,
    /// Master noise seed [default: 0]
    #[arg(long)]
    pub seed: Option<String>,
    /// Images per PCA batch [default: 100]
    #[arg(long)]
    pub batch_size: Option<String>,
    /// IDX image file
    #[arg(long, value_name = "PATH")]
    pub idx_images: Option<String>,
    /// IDX label file
    #[arg(long, value_name = "PATH")]
    pub idx_labels: Option<String>,
    /// Folder of PGM/PPM images (needs --manifest)
    #[arg(long, value_name = "DIR")]
    pub image_dir: Option<String>,
    /// filename,label list for --image-dir; for inspect, the run manifest
    #[arg(long, value_name = "PATH")]
    pub manifest: Option<String>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
    /// Comma list of budgets [default: 1,2,5,10,20,50,100]
    #[arg(long)]
    pub epsilons: Option<String>,
    /// Comma list of dimensions [default: 10,20,50,100]
    #[arg(long)]
    pub ds: Option<String>,
    /// Montage grid rows [default: 2]
    #[arg(long)]
    pub montage_rows: Option<String>,
    /// Montage grid columns [default: 5]
    #[arg(long)]
    pub montage_cols: Option<String>,
    /// IDX training images for sweep; without them the input is split 2:1
    #[arg(long, value_name = "PATH")]
    pub train_idx_images: Option<String>,
    /// IDX training labels for sweep
    #[arg(long, value_name = "PATH")]
    pub train_idx_labels: Option<String>,
}

impl KeyArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 16] {
        [
            ("epsilon", &self.epsilon),
            ("d", &self.d),
            ("lambda_inv", &self.lambda_inv),
            ("seed", &self.seed),
            ("batch_size", &self.batch_size),
            ("idx_images", &self.idx_images),
            ("idx_labels", &self.idx_labels),
            ("image_dir", &self.image_dir),
            ("manifest", &self.manifest),
            ("out", &self.out),
            ("epsilons", &self.epsilons),
            ("ds", &self.ds),
            ("montage_rows", &self.montage_rows),
            ("montage_cols", &self.montage_cols),
            ("train_idx_images", &self.train_idx_images),
            ("train_idx_labels", &self.train_idx_labels),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
    /// Relative paths from the config file resolve against its directory.
    base: Option<PathBuf>,
    from_file: Vec<String>,
}

impl Settings {
    pub fn resolve(args: &KeyArgs) -> Result<Self> {
        let mut settings = Settings::default();
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let values = parse_key_values(&text)?;
            if let Some(bad) = values.keys().find(|k| !KEYS.contains(&k.as_str())) {
                return Err(Error::invalid(format!(
                    "{}: unknown key {bad:?}",
                    path.display()
                )));
            }
            settings.from_file = values.keys().cloned().collect();
            settings.values = values;
            settings.base = path.parent().map(Path::to_path_buf);
        }
        for (key, value) in args.flags() {
            if let Some(v) = value {
                settings.values.insert(key.to_string(), v.clone());
                settings.from_file.retain(|k| k != key);
            }
        }
        Ok(settings)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::invalid(format!("{key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::invalid(format!("missing required setting --{}", key.replace('_', "-"))))
    }

    pub fn list<T: FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>> {
        let raw = self.raw(key).unwrap_or(default);
        let items: Vec<T> = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::invalid(format!("{key}: cannot parse {s:?}")))
            })
            .collect::<Result<_>>()?;
        if items.is_empty() {
            return Err(Error::invalid(format!("{key} is empty")));
        }
        Ok(items)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = PathBuf::from(self.raw(key)?);
        match &self.base {
            Some(base) if raw.is_relative() && self.from_file.iter().any(|k| k == key) => {
                Some(base.join(raw))
            }
            _ => Some(raw),
        }
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key)
            .ok_or_else(|| Error::invalid(format!("missing required setting --{}", key.replace('_', "-"))))
    }

    /// Privacy parameters with the documented defaults filled in.
    pub fn privacy(&self, epsilon: f64, d: usize) -> Result<PrivacyParams> {
        let params = PrivacyParams {
            epsilon,
            d,
            lambda_inv: self.get("lambda_inv")?.unwrap_or(DEFAULT_LAMBDA_INV),
            seed: self.get("seed")?.unwrap_or(PrivacyParams::DEFAULT_SEED),
            batch_size: self.get("batch_size")?.unwrap_or(PrivacyParams::DEFAULT_BATCH_SIZE),
        };
        params.validate()?;
        Ok(params)
    }
}
