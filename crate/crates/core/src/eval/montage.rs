use std::path::Path;

use crate::error::{Error, Result};
use crate::imageio::{save_netpbm, Image, ImageShape};

/// Separator intensity between tiles.
pub const SEPARATOR: u8 = 255;

/// Tiles `images` row-major into a `rows x cols` grid with 1-pixel separators.
/// Unused cells stay black.
pub fn montage(images: &[Image], rows: usize, cols: usize) -> Result<Image> {
    let first = images
        .first()
        .ok_or_else(|| Error::invalid("montage needs at least one image"))?;
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("montage grid must be at least 1x1"));
    }
    if images.len() > rows * cols {
        return Err(Error::invalid(format!(
            "{} images do not fit a {rows}x{cols} grid",
            images.len()
        )));
    }
    let tile = first.shape();
    if let Some((i, img)) = images.iter().enumerate().find(|(_, i)| i.shape() != tile) {
        return Err(Error::invalid(format!(
            "montage image {i} is {}, expected {tile}",
            img.shape()
        )));
    }
    let width = cols * tile.width + cols - 1;
    let height = rows * tile.height + rows - 1;
    let shape = ImageShape::new(width, height, tile.channels)?;
    let plane = width * height;
    let mut pixels = vec![SEPARATOR; shape.len()];
    for c in 0..tile.channels {
        for gy in 0..rows {
            for gx in 0..cols {
                let idx = gy * cols + gx;
                let x0 = gx * (tile.width + 1);
                let y0 = gy * (tile.height + 1);
                for y in 0..tile.height {
                    let dst = c * plane + (y0 + y) * width + x0;
                    let row = &mut pixels[dst..dst + tile.width];
                    match images.get(idx) {
                        Some(img) => {
                            let src = &img.plane(c)[y * tile.width..(y + 1) * tile.width];
                            row.copy_from_slice(src);
                        }
                        None => row.fill(0),
                    }
                }
            }
        }
    }
    Image::new(shape, pixels)
}

pub fn write_montage(images: &[Image], rows: usize, cols: usize, path: &Path) -> Result<()> {
    save_netpbm(&montage(images, rows, cols)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::encode_netpbm;

    fn tile(v: u8) -> Image {
        Image::new(ImageShape::gray(2, 3), vec![v; 6]).unwrap()
    }

    #[test]
    fn single_tile_is_identity() {
        let img = Image::new(ImageShape::gray(2, 2), vec![1, 2, 3, 4]).unwrap();
        assert_eq!(montage(std::slice::from_ref(&img), 1, 1).unwrap(), img);
    }

    #[test]
    fn two_by_two_layout() {
        let m = montage(&[tile(1), tile(2), tile(3), tile(4)], 2, 2).unwrap();
        assert_eq!((m.width(), m.height()), (5, 7));
        assert_eq!(m.get(0, 0, 0), 1);
        assert_eq!(m.get(2, 0, 0), SEPARATOR);
        assert_eq!(m.get(3, 0, 0), 2);
        assert_eq!(m.get(0, 3, 0), SEPARATOR);
        assert_eq!(m.get(4, 6, 0), 4);
    }

    #[test]
    fn deterministic_bytes_and_padding() {
        let a = encode_netpbm(&montage(&[tile(9), tile(8), tile(7)], 2, 2).unwrap());
        let b = encode_netpbm(&montage(&[tile(9), tile(8), tile(7)], 2, 2).unwrap());
        assert_eq!(a, b);
        let m = montage(&[tile(9)], 1, 2).unwrap();
        assert_eq!(m.get(4, 0, 0), 0);
    }

    #[test]
    fn color_tiles_keep_planes() {
        let rgb = Image::new(ImageShape::new(1, 1, 3).unwrap(), vec![10, 20, 30]).unwrap();
        let m = montage(&[rgb.clone(), rgb], 1, 2).unwrap();
        assert_eq!(m.plane(1), &[20, SEPARATOR, 20]);
    }

    #[test]
    fn rejects_heterogeneous_and_overflow() {
        let other = Image::new(ImageShape::gray(3, 3), vec![0; 9]).unwrap();
        assert!(montage(&[tile(1), other], 1, 2).is_err());
        assert!(montage(&[tile(1), tile(2)], 1, 1).is_err());
        assert!(montage(&[], 1, 1).is_err());
    }
}
