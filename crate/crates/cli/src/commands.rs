use std::path::{Path, PathBuf};

use pcadp_core::eval::{
    cell_seed, sweep, write_montage, SweepSettings, TrainSettings,
};
use pcadp_core::imageio::{load_idx, load_image_dir};
use pcadp_core::pipeline::{assemble, privatize_in_memory, MANIFEST_FILE};
use pcadp_core::{privatize_database, Error, ImageDatabase, Result, RunManifest};

use crate::config::{
    Settings, DEFAULT_DS, DEFAULT_EPSILONS, DEFAULT_MONTAGE_COLS, DEFAULT_MONTAGE_ROWS,
};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_SVG: &str = "accuracy.svg";

/// Loads the input database from either the IDX pair or an image folder.
fn load_input(s: &Settings) -> Result<ImageDatabase> {
    let idx = (s.path("idx_images"), s.path("idx_labels"));
    let dir = s.path("image_dir");
    match (idx, dir) {
        ((Some(images), Some(labels)), None) => load_idx(&images, &labels),
        ((None, None), Some(dir)) => {
            let manifest = s.require_path("manifest")?;
            load_image_dir(&dir, &manifest)
        }
        ((None, None), None) => Err(Error::invalid(
            "no input: give --idx-images and --idx-labels, or --image-dir and --manifest",
        )),
        ((Some(_), None), None) | ((None, Some(_)), None) => {
            Err(Error::invalid("--idx-images and --idx-labels must be given together"))
        }
        (_, Some(_)) => Err(Error::invalid("give either IDX files or --image-dir, not both")),
    }
}

pub fn privatize(s: &Settings) -> Result<()> {
    let params = s.privacy(s.require("epsilon")?, s.require("d")?)?;
    let out = s.require_path("out")?;
    let db = load_input(s)?;
    let manifest = privatize_database(&db, &params, &out)?;
    for b in &manifest.batches {
        eprintln!(
            "batch {:>3}  images {}..{}  rank {}  mse {:.3}",
            b.index, b.range.start, b.range.end, b.rank, b.mse
        );
    }
    eprintln!("wrote {} images and {MANIFEST_FILE} to {}", db.len(), out.display());
    Ok(())
}

pub fn sweep_cmd(s: &Settings) -> Result<()> {
    let out = s.require_path("out")?;
    let probe = s.privacy(1.0, 1)?;
    let settings = SweepSettings {
        epsilons: s.list("epsilons", DEFAULT_EPSILONS)?,
        ds: s.list("ds", DEFAULT_DS)?,
        lambda_inv: probe.lambda_inv,
        seed: probe.seed,
        batch_size: probe.batch_size,
    };
    let input = load_input(s)?;
    let (train, test) = match (s.path("train_idx_images"), s.path("train_idx_labels")) {
        (Some(images), Some(labels)) => (load_idx(&images, &labels)?, input),
        (None, None) => {
            let cut = input.len() * 2 / 3;
            (input.subset(0..cut)?, input.subset(cut..input.len())?)
        }
        _ => {
            return Err(Error::invalid(
                "--train-idx-images and --train-idx-labels must be given together",
            ))
        }
    };
    eprintln!("training on {} images, testing on {}", train.len(), test.len());
    let (clf, result) = sweep(&train, &test, &settings, &TrainSettings::default())?;
    eprintln!(
        "classifier train accuracy {:.4}, final loss {:.4}",
        clf.train_accuracy, clf.final_loss
    );
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_file(&out.join(SWEEP_CSV), &result.to_csv())?;
    write_file(&out.join(SWEEP_SVG), &result.accuracy_svg())?;
    for c in &result.cells {
        match &c.status {
            pcadp_core::eval::CellStatus::Ok => eprintln!(
                "epsilon {:>6}  d {:>4}  accuracy {:.4}  psnr {:.2}",
                c.epsilon, c.d, c.accuracy_private, c.psnr_mean
            ),
            pcadp_core::eval::CellStatus::Failed(msg) => {
                eprintln!("epsilon {:>6}  d {:>4}  failed: {msg}", c.epsilon, c.d)
            }
        }
    }
    print!("{}", result.to_csv());
    Ok(())
}

pub fn montage_cmd(s: &Settings) -> Result<()> {
    let out = s.require_path("out")?;
    let epsilons: Vec<f64> = s.list("epsilons", DEFAULT_EPSILONS)?;
    let ds: Vec<usize> = s.list("ds", DEFAULT_DS)?;
    let rows = s.get("montage_rows")?.unwrap_or(DEFAULT_MONTAGE_ROWS);
    let cols = s.get("montage_cols")?.unwrap_or(DEFAULT_MONTAGE_COLS);
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("montage grid must be at least 1x1"));
    }
    let db = load_input(s)?;
    let shown = (rows * cols).min(db.len());
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let ext = if db.shape().is_some_and(|sh| sh.channels == 3) { "ppm" } else { "pgm" };

    write_montage(&db.images()[..shown], rows, cols, &out.join(format!("original.{ext}")))?;
    for &epsilon in &epsilons {
        for &d in &ds {
            let mut params = s.privacy(epsilon, d)?;
            params.seed = cell_seed(params.seed, epsilon, d);
            let private = assemble(&db, &privatize_in_memory(&db, &params)?)?;
            let path = out.join(format!("eps{epsilon}_d{d}.{ext}"));
            write_montage(&private.images()[..shown], rows, cols, &path)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn inspect(s: &Settings) -> Result<()> {
    let path: PathBuf = match (s.path("manifest"), s.path("out")) {
        (Some(m), _) => m,
        (None, Some(out)) => out.join(MANIFEST_FILE),
        (None, None) => return Err(Error::invalid("give --manifest or --out")),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest = RunManifest::parse(&text)?;
    manifest.validate()?;
    print!("{}", manifest.summary());
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
