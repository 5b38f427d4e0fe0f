//! MNIST-style IDX files: big-endian headers, unsigned-byte payloads.

use std::path::Path;

use super::{Image, ImageDatabase, ImageShape};
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
const NUM_CLASSES: usize = 10;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn u32(&mut self, field: &'static str) -> Result<u32> {
        let chunk = self.take(4, field)?;
        Ok(u32::from_be_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]))
    }

    fn take(&mut self, len: usize, field: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format {
                field,
                offset: self.pos as u64,
                message: format!(
                    "truncated: need {len} bytes, {} available",
                    self.bytes.len() - self.pos
                ),
            }),
        }
    }

    fn finish(&self, field: &'static str) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format {
                field,
                offset: self.pos as u64,
                message: format!("{} trailing bytes", self.bytes.len() - self.pos),
            });
        }
        Ok(())
    }
}

fn expect_magic(r: &mut Reader<'_>, field: &'static str, want: u32) -> Result<()> {
    let got = r.u32(field)?;
    if got != want {
        return Err(Error::Format {
            field,
            offset: 0,
            message: format!("magic 0x{got:08x}, expected 0x{want:08x}"),
        });
    }
    Ok(())
}

/// Decodes an IDX image file and its label file into a grayscale database.
pub fn decode_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<ImageDatabase> {
    let mut ir = Reader::new(image_bytes);
    expect_magic(&mut ir, "image magic", IMAGE_MAGIC)?;
    let count = ir.u32("image count")? as usize;
    let rows = ir.u32("image rows")? as usize;
    let cols = ir.u32("image cols")? as usize;

    let mut lr = Reader::new(label_bytes);
    expect_magic(&mut lr, "label magic", LABEL_MAGIC)?;
    let label_count = lr.u32("label count")? as usize;
    if label_count != count {
        return Err(Error::Format {
            field: "label count",
            offset: 4,
            message: format!("{label_count} labels for {count} images"),
        });
    }

    let shape = ImageShape::gray(cols, rows);
    let payload_len = count.checked_mul(shape.len()).ok_or_else(|| Error::Format {
        field: "image count",
        offset: 4,
        message: "declared payload size overflows".into(),
    })?;
    let payload = ir.take(payload_len, "image payload")?;
    ir.finish("image payload")?;
    let label_payload = lr.take(count, "label payload")?;
    lr.finish("label payload")?;

    let mut labels = Vec::with_capacity(count);
    for (i, &l) in label_payload.iter().enumerate() {
        if usize::from(l) >= NUM_CLASSES {
            return Err(Error::Format {
                field: "label payload",
                offset: 8 + i as u64,
                message: format!("label {l} outside 0-9"),
            });
        }
        labels.push(usize::from(l));
    }
    let images = payload
        .chunks_exact(shape.len().max(1))
        .take(count)
        .map(|px| Image::new(shape, px.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let class_names = (0..NUM_CLASSES).map(|c| c.to_string()).collect();
    ImageDatabase::new(images, labels, class_names)
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<ImageDatabase> {
    let images = std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels = std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    decode_idx(&images, &labels)
}

/// Encodes grayscale images as an IDX image file.
pub fn encode_idx_images(images: &[Image]) -> Result<Vec<u8>> {
    let shape = images.first().map_or(ImageShape::gray(0, 0), Image::shape);
    if images.iter().any(|i| i.shape() != shape) || shape.channels != 1 {
        return Err(Error::invalid("IDX images must be grayscale and equally sized"));
    }
    let mut out = Vec::with_capacity(16 + images.len() * shape.len());
    for v in [IMAGE_MAGIC, images.len() as u32, shape.height as u32, shape.width as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img.pixels());
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[usize]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        let b = u8::try_from(l)
            .ok()
            .filter(|&b| usize::from(b) < NUM_CLASSES)
            .ok_or_else(|| Error::invalid(format!("label {l} outside 0-9")))?;
        out.push(b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images_file(count: u32, rows: u32, cols: u32, payload: usize) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IMAGE_MAGIC, count, rows, cols] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend((0..payload).map(|i| (i % 251) as u8));
        b
    }

    fn labels_file(count: u32) -> Vec<u8> {
        let mut b = LABEL_MAGIC.to_be_bytes().to_vec();
        b.extend_from_slice(&count.to_be_bytes());
        b.extend((0..count).map(|i| (i % 10) as u8));
        b
    }

    #[test]
    fn decodes_header_and_payload() {
        let db = decode_idx(&images_file(3, 2, 4, 24), &labels_file(3)).unwrap();
        assert_eq!(db.len(), 3);
        assert_eq!(db.shape(), Some(ImageShape::gray(4, 2)));
        assert_eq!(db.labels(), &[0, 1, 2]);
        assert_eq!(db.images()[1].pixels(), &[8, 9, 10, 11, 12, 13, 14, 15]);
    }

    #[test]
    fn header_dims_for_mnist_test_set() {
        let db = decode_idx(&images_file(10000, 28, 28, 10000 * 784), &labels_file(10000)).unwrap();
        assert_eq!(db.len(), 10000);
        assert_eq!(db.shape(), Some(ImageShape::gray(28, 28)));
    }

    #[test]
    fn label_file_with_image_magic_is_rejected() {
        let mut labels = labels_file(3);
        labels[3] = 0x03;
        let err = decode_idx(&images_file(3, 2, 2, 12), &labels).unwrap_err();
        assert!(matches!(err, Error::Format { field: "label magic", .. }), "{err}");
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let err = decode_idx(&images_file(100, 1, 1, 100), &labels_file(99)).unwrap_err();
        assert!(matches!(err, Error::Format { field: "label count", .. }), "{err}");
    }

    #[test]
    fn truncated_payload_names_offset() {
        let err = decode_idx(&images_file(2, 2, 2, 7), &labels_file(2)).unwrap_err();
        match err {
            Error::Format { field, offset, .. } => {
                assert_eq!(field, "image payload");
                assert_eq!(offset, 16);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        assert!(decode_idx(&images_file(1, 1, 1, 2), &labels_file(1)).is_err());
    }

    #[test]
    fn label_out_of_range_rejected() {
        let mut labels = labels_file(1);
        labels[8] = 10;
        assert!(decode_idx(&images_file(1, 1, 1, 1), &labels).is_err());
    }

    #[test]
    fn encode_decode_agree() {
        let db = decode_idx(&images_file(4, 3, 2, 24), &labels_file(4)).unwrap();
        let again = decode_idx(
            &encode_idx_images(db.images()).unwrap(),
            &encode_idx_labels(db.labels()).unwrap(),
        )
        .unwrap();
        assert_eq!(again, db);
    }
}
