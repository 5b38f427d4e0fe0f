//! Images, image databases, and the codecs that load and store them.

mod dir;
mod idx;
mod netpbm;

pub use dir::{load_image_dir, parse_dir_manifest, DirManifest};
pub use idx::{decode_idx, encode_idx_images, encode_idx_labels, load_idx};
pub use netpbm::{
    decode_netpbm, encode_netpbm, load_netpbm, save_netpbm, save_pgm, save_ppm,
};

use std::ops::Range;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Width, height and channel count of an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageShape {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
        })
    }

    pub fn gray(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            channels: 1,
        }
    }

    /// Number of attributes `width * height * channels`.
    pub fn len(&self) -> usize {
        self.width * self.height * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for ImageShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.width, self.height, self.channels)
    }
}

/// An 8-bit image. Color pixels are stored channel-planar: the whole red
/// plane, then green, then blue, each plane row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    shape: ImageShape,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(shape: ImageShape, pixels: Vec<u8>) -> Result<Self> {
        let shape = ImageShape::new(shape.width, shape.height, shape.channels)?;
        if pixels.len() != shape.len() {
            return Err(Error::invalid(format!(
                "{shape} image needs {} samples, got {}",
                shape.len(),
                pixels.len()
            )));
        }
        Ok(Self { shape, pixels })
    }

    pub fn shape(&self) -> ImageShape {
        self.shape
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn plane(&self, channel: usize) -> &[u8] {
        let n = self.shape.width * self.shape.height;
        &self.pixels[channel * n..(channel + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize, channel: usize) -> u8 {
        let plane = self.shape.width * self.shape.height;
        self.pixels[channel * plane + y * self.shape.width + x]
    }

    /// Nearest-neighbour resampling to `width x height`.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Image {
        let src = self.shape;
        let shape = ImageShape {
            width,
            height,
            channels: src.channels,
        };
        let mut pixels = Vec::with_capacity(shape.len());
        for c in 0..src.channels {
            for y in 0..height {
                let sy = (y * src.height) / height.max(1);
                for x in 0..width {
                    let sx = (x * src.width) / width.max(1);
                    pixels.push(self.get(sx, sy, c));
                }
            }
        }
        Image { shape, pixels }
    }
}

/// Attribute vector of an image: every sample as an `f64` in `[0, 255]`,
/// channel-planar and row-major within each plane.
pub fn flatten(img: &Image) -> Vec<f64> {
    img.pixels.iter().map(|&p| f64::from(p)).collect()
}

/// Quantizes an attribute vector back into an image: clamp to `[0, 255]`,
/// then round half up.
pub fn unflatten(values: &[f64], shape: ImageShape) -> Result<Image> {
    if values.len() != shape.len() {
        return Err(Error::invalid(format!(
            "{shape} image needs {} attributes, got {}",
            shape.len(),
            values.len()
        )));
    }
    let pixels = values.iter().map(|&v| quantize(v)).collect();
    Image::new(shape, pixels)
}

pub(crate) fn quantize(v: f64) -> u8 {
    // NaN casts to 0
    (v.clamp(0.0, 255.0) + 0.5).floor() as u8
}

/// Ordered, shape-homogeneous images with one class label each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageDatabase {
    images: Vec<Image>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl ImageDatabase {
    pub fn new(images: Vec<Image>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(first) = images.first() {
            let offenders: Vec<String> = images
                .iter()
                .enumerate()
                .filter(|(_, img)| img.shape != first.shape)
                .map(|(i, img)| format!("#{i} ({})", img.shape))
                .collect();
            if !offenders.is_empty() {
                return Err(Error::Heterogeneous { offenders });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::invalid(format!(
                "label {bad} has no class name ({} classes)",
                class_names.len()
            )));
        }
        Ok(Self {
            images,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Shape shared by every image, `None` when empty.
    pub fn shape(&self) -> Option<ImageShape> {
        self.images.first().map(Image::shape)
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn subset(&self, range: Range<usize>) -> Result<ImageDatabase> {
        if range.start > range.end || range.end > self.len() {
            return Err(Error::invalid(format!(
                "range {range:?} out of bounds for {} images",
                self.len()
            )));
        }
        Ok(Self {
            images: self.images[range.clone()].to_vec(),
            labels: self.labels[range].to_vec(),
            class_names: self.class_names.clone(),
        })
    }

    /// Same images with replacement labels (class names unchanged).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<ImageDatabase> {
        Self::new(self.images.clone(), labels, self.class_names.clone())
    }

    /// Same labels with replacement images.
    pub fn with_images(&self, images: Vec<Image>) -> Result<ImageDatabase> {
        Self::new(images, self.labels.clone(), self.class_names.clone())
    }

    /// `n x s` matrix of flattened images for rows in `range`.
    pub fn flattened(&self, range: Range<usize>) -> Matrix {
        let s = self.shape().map_or(0, |sh| sh.len());
        let mut data = Vec::with_capacity(range.len() * s);
        for img in &self.images[range.clone()] {
            data.extend(img.pixels.iter().map(|&p| f64::from(p)));
        }
        Matrix::from_vec_unchecked(range.len(), s, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flatten_gray_row_major() {
        let img = Image::new(ImageShape::gray(2, 2), vec![1, 2, 3, 4]).unwrap();
        assert_eq!(flatten(&img), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn flatten_lengths() {
        let mnist = Image::new(ImageShape::gray(28, 28), vec![0; 784]).unwrap();
        assert_eq!(flatten(&mnist).len(), 784);
        let face = Image::new(ImageShape::new(80, 80, 3).unwrap(), vec![0; 19200]).unwrap();
        assert_eq!(flatten(&face).len(), 19200);
    }

    #[test]
    fn unflatten_clamps_and_rounds_half_up() {
        let img = unflatten(&[255.7, -3.2, 127.5, 0.49], ImageShape::gray(4, 1)).unwrap();
        assert_eq!(img.pixels(), &[255, 0, 128, 0]);
    }

    #[test]
    fn unflatten_length_mismatch() {
        assert!(matches!(
            unflatten(&[1.0; 3], ImageShape::gray(2, 2)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn database_rejects_mixed_shapes() {
        let a = Image::new(ImageShape::gray(2, 2), vec![0; 4]).unwrap();
        let b = Image::new(ImageShape::gray(1, 4), vec![0; 4]).unwrap();
        let err = ImageDatabase::new(vec![a, b], vec![0, 0], vec!["x".into()]).unwrap_err();
        assert!(matches!(err, Error::Heterogeneous { ref offenders } if offenders.len() == 1));
    }

    #[test]
    fn database_rejects_label_count_mismatch() {
        let a = Image::new(ImageShape::gray(1, 1), vec![0]).unwrap();
        assert!(ImageDatabase::new(vec![a], vec![], vec!["x".into()]).is_err());
    }

    #[test]
    fn resize_nearest_downsamples() {
        let img = Image::new(ImageShape::gray(4, 2), vec![1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        let small = img.resize_nearest(2, 1);
        assert_eq!(small.pixels(), &[1, 3]);
        let rgb = Image::new(ImageShape::new(2, 2, 3).unwrap(), (0..12).collect()).unwrap();
        assert_eq!(rgb.resize_nearest(1, 1).pixels(), &[0, 4, 8]);
    }

    proptest! {
        #[test]
        fn flatten_unflatten_roundtrip(w in 1usize..6, h in 1usize..6, color in any::<bool>(), pixels in proptest::collection::vec(any::<u8>(), 75)) {
            let c = if color { 3 } else { 1 };
            let shape = ImageShape::new(w, h, c).unwrap();
            let img = Image::new(shape, pixels[..shape.len()].to_vec()).unwrap();
            prop_assert_eq!(unflatten(&flatten(&img), shape).unwrap(), img);
        }

        #[test]
        fn quantize_is_identity_on_integers(v in 0u8..=255) {
            prop_assert_eq!(quantize(f64::from(v)), v);
        }
    }
}
