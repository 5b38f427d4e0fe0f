//! Binary PGM (P5) and PPM (P6) with maxval 255.
//!
//! The writer emits exactly `P5\n<w> <h>\n255\n` followed by raw samples. The
//! reader also accepts arbitrary header whitespace and `#` comments, but the
//! payload size must match the header exactly.

use std::path::Path;

use super::{Image, ImageShape};
use crate::error::{Error, Result};

pub fn encode_netpbm(img: &Image) -> Vec<u8> {
    let shape = img.shape();
    let magic = if shape.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", shape.width, shape.height).into_bytes();
    if shape.channels == 1 {
        out.extend_from_slice(img.pixels());
    } else {
        let planes = [img.plane(0), img.plane(1), img.plane(2)];
        out.reserve(shape.len());
        for i in 0..shape.width * shape.height {
            out.extend(planes.iter().map(|p| p[i]));
        }
    }
    out
}

fn write(img: &Image, path: &Path) -> Result<()> {
    std::fs::write(path, encode_netpbm(img)).map_err(|e| Error::io(path, e))
}

/// Writes a grayscale image as P5.
pub fn save_pgm(img: &Image, path: &Path) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::invalid(format!(
            "PGM needs a 1-channel image, got {} channels",
            img.channels()
        )));
    }
    write(img, path)
}

/// Writes a color image as P6.
pub fn save_ppm(img: &Image, path: &Path) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::invalid(format!(
            "PPM needs a 3-channel image, got {} channels",
            img.channels()
        )));
    }
    write(img, path)
}

/// P5 or P6 depending on the channel count.
pub fn save_netpbm(img: &Image, path: &Path) -> Result<()> {
    write(img, path)
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &'static str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or("");
        text.parse().map_err(|_| Error::Format {
            field,
            offset: start as u64,
            message: "expected a decimal number".into(),
        })
    }
}

/// Decodes P5/P6 bytes. Color samples come back channel-planar.
pub fn decode_netpbm(bytes: &[u8]) -> Result<Image> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => {
            return Err(Error::Format {
                field: "magic",
                offset: 0,
                message: "expected P5 or P6".into(),
            })
        }
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Format {
            field: "maxval",
            offset: h.pos as u64,
            message: format!("only maxval 255 is supported, got {maxval}"),
        });
    }
    if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format {
            field: "maxval",
            offset: h.pos as u64,
            message: "missing whitespace before payload".into(),
        });
    }
    let start = h.pos + 1;
    let shape = ImageShape {
        width,
        height,
        channels,
    };
    let payload = &bytes[start..];
    if payload.len() != shape.len() {
        return Err(Error::Format {
            field: "payload",
            offset: start as u64,
            message: format!("{} bytes for a {shape} image", payload.len()),
        });
    }
    let pixels = if channels == 1 {
        payload.to_vec()
    } else {
        let n = width * height;
        let mut planar = vec![0u8; shape.len()];
        for (i, rgb) in payload.chunks_exact(3).enumerate() {
            for (c, &v) in rgb.iter().enumerate() {
                planar[c * n + i] = v;
            }
        }
        planar
    };
    Image::new(shape, pixels)
}

pub fn load_netpbm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_netpbm(&bytes).map_err(|e| Error::Codec {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_pgm_bytes() {
        let img = Image::new(ImageShape::gray(1, 1), vec![0]).unwrap();
        assert_eq!(encode_netpbm(&img), b"P5\n1 1\n255\n\x00");
    }

    #[test]
    fn ppm_interleaves_on_disk() {
        let img = Image::new(ImageShape::new(2, 1, 3).unwrap(), vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(encode_netpbm(&img), b"P6\n2 1\n255\n\x01\x03\x05\x02\x04\x06");
    }

    #[test]
    fn ppm_rejects_gray_and_pgm_rejects_color() {
        let dir = tempfile::tempdir().unwrap();
        let gray = Image::new(ImageShape::gray(1, 1), vec![7]).unwrap();
        let color = Image::new(ImageShape::new(1, 1, 3).unwrap(), vec![1, 2, 3]).unwrap();
        assert!(matches!(
            save_ppm(&gray, &dir.path().join("a.ppm")),
            Err(Error::InvalidInput(_))
        ));
        assert!(save_pgm(&color, &dir.path().join("a.pgm")).is_err());
    }

    #[test]
    fn header_comments_accepted() {
        let img = decode_netpbm(b"P5 # made by hand\n2\n# h\n1 255\n\x05\x06").unwrap();
        assert_eq!(img.pixels(), &[5, 6]);
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(decode_netpbm(b"P5\n2 2\n255\n\x00\x00\x00").is_err());
        assert!(decode_netpbm(b"P5\n1 1\n255\n\x00\x00").is_err());
        assert!(decode_netpbm(b"P5\n1 1\n65535\n\x00\x00").is_err());
        assert!(decode_netpbm(b"P2\n1 1\n255\n0").is_err());
    }

    #[test]
    fn io_error_carries_path() {
        let err = load_netpbm(Path::new("/nonexistent/x.pgm")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.pgm"));
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(w in 1usize..9, h in 1usize..9, color in any::<bool>(), pixels in proptest::collection::vec(any::<u8>(), 8 * 8 * 3)) {
            let shape = ImageShape::new(w, h, if color { 3 } else { 1 }).unwrap();
            let img = Image::new(shape, pixels[..shape.len()].to_vec()).unwrap();
            prop_assert_eq!(decode_netpbm(&encode_netpbm(&img)).unwrap(), img);
        }
    }
}
