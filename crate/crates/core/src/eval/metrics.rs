use crate::error::{Error, Result};
use crate::imageio::{Image, ImageDatabase};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distortion {
    pub mse: f64,
    /// `10 log10(255² / mse)`; `f64::INFINITY` when the images are identical.
    pub psnr: f64,
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

pub fn image_mse(a: &Image, b: &Image) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::invalid(format!(
            "cannot compare {} with {}",
            a.shape(),
            b.shape()
        )));
    }
    let total: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum();
    Ok(total / a.pixels().len().max(1) as f64)
}

/// Per-image MSE and PSNR between matched databases.
pub fn distortion(original: &ImageDatabase, privatized: &ImageDatabase) -> Result<Vec<Distortion>> {
    if original.len() != privatized.len() {
        return Err(Error::invalid(format!(
            "{} originals but {} privatized images",
            original.len(),
            privatized.len()
        )));
    }
    original
        .images()
        .iter()
        .zip(privatized.images())
        .map(|(a, b)| {
            let mse = image_mse(a, b)?;
            Ok(Distortion {
                mse,
                psnr: psnr_from_mse(mse),
            })
        })
        .collect()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("spearman needs two equal-length series of 2+ values"));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    Ok(pearson(&rx, &ry))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let (mut va, mut vb) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::ImageShape;

    fn db(values: &[u8]) -> ImageDatabase {
        let images = values
            .iter()
            .map(|&v| Image::new(ImageShape::gray(1, 1), vec![v]).unwrap())
            .collect();
        ImageDatabase::new(images, vec![0; values.len()], vec!["c".into()]).unwrap()
    }

    #[test]
    fn identical_is_zero_and_infinite() {
        let a = db(&[3, 200]);
        for d in distortion(&a, &a).unwrap() {
            assert_eq!(d.mse, 0.0);
            assert_eq!(d.psnr, f64::INFINITY);
        }
    }

    #[test]
    fn black_vs_white() {
        let d = distortion(&db(&[0]), &db(&[255])).unwrap()[0];
        assert_eq!(d.mse, 65025.0);
        assert_eq!(d.psnr, 0.0);
    }

    #[test]
    fn mse_is_symmetric_and_checks_shape() {
        let (a, b) = (db(&[10, 20, 30]), db(&[13, 2, 30]));
        assert_eq!(distortion(&a, &b).unwrap(), distortion(&b, &a).unwrap());
        assert!(distortion(&a, &db(&[1])).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        // ranks with ties: y -> [1.5, 1.5, 3]
        let r = spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 9.0]).unwrap();
        assert!((r - 0.8660254037844387).abs() < 1e-12);
        assert!(spearman(&[1.0], &[1.0]).is_err());
    }
}
