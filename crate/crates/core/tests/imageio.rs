mod common;

use common::{data_dir, mnist_test, random_image, reference_idx_images, reference_idx_labels, rng};
use pcadp_core::imageio::{
    decode_idx, decode_netpbm, encode_idx_images, encode_idx_labels, encode_netpbm, load_image_dir,
    load_netpbm, save_netpbm, save_pgm,
};
use pcadp_core::{Error, Image, ImageShape};
use proptest::prelude::*;

#[test]
fn netpbm_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(9);
    for i in 0..100 {
        let img = random_image(&mut r, 40);
        let path = dir.path().join(format!("{i}.pnm"));
        save_netpbm(&img, &path).unwrap();
        assert_eq!(load_netpbm(&path).unwrap(), img);
    }
}

#[test]
fn idx_matches_reference_reader() {
    let d = data_dir();
    let db = mnist_test();
    let expected = reference_idx_images(&d.join("t10k-images-idx3-ubyte"), 100);
    for (img, pixels) in db.images().iter().zip(&expected) {
        assert_eq!(img.pixels(), pixels.as_slice());
        assert_eq!(img.shape(), ImageShape::gray(28, 28));
    }
    let labels = reference_idx_labels(&d.join("t10k-labels-idx1-ubyte"));
    for (i, &l) in db.labels().iter().enumerate() {
        assert_eq!(db.class_names()[l], labels[i].to_string());
    }
}

#[test]
fn idx_encode_decode_round_trip() {
    let db = mnist_test().subset(0..50).unwrap();
    let labels: Vec<usize> = db.labels().to_vec();
    let images = encode_idx_images(db.images()).unwrap();
    let back = decode_idx(&images, &encode_idx_labels(&labels).unwrap()).unwrap();
    assert_eq!(back.images(), db.images());
    assert_eq!(back.labels(), db.labels());
}

#[test]
fn idx_errors_name_the_field() {
    let db = mnist_test().subset(0..3).unwrap();
    let mut images = encode_idx_images(db.images()).unwrap();
    let labels = encode_idx_labels(db.labels()).unwrap();
    images[3] = 0x01;
    match decode_idx(&images, &labels).unwrap_err() {
        Error::Format { offset, .. } => assert_eq!(offset, 0),
        other => panic!("{other}"),
    }
    images[3] = 0x03;
    images.truncate(images.len() - 1);
    assert!(matches!(decode_idx(&images, &labels), Err(Error::Format { .. })));
    let short_labels = encode_idx_labels(&db.labels()[..2]).unwrap();
    let full = encode_idx_images(db.images()).unwrap();
    assert!(decode_idx(&full, &short_labels).is_err());
}

#[test]
fn folder_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let gray = |v: u8| Image::new(ImageShape::gray(4, 3), vec![v; 12]).unwrap();
    save_pgm(&gray(10), &dir.path().join("b.pgm")).unwrap();
    save_pgm(&gray(20), &dir.path().join("a.pgm")).unwrap();
    save_pgm(&gray(30), &dir.path().join("c.pgm")).unwrap();
    let manifest = dir.path().join("labels.csv");
    std::fs::write(&manifest, "# faces\nb.pgm,bob\na.pgm,alice\nc.pgm,bob\n").unwrap();
    let db = load_image_dir(dir.path(), &manifest).unwrap();
    assert_eq!(db.class_names(), ["alice", "bob"]);
    assert_eq!(db.labels(), [0, 1, 1]);
    assert_eq!(db.images()[0].pixels()[0], 20);

    std::fs::write(&manifest, "#resize=2x2\na.pgm,alice\nb.pgm,bob\n").unwrap();
    let db = load_image_dir(dir.path(), &manifest).unwrap();
    assert_eq!(db.shape(), Some(ImageShape::gray(2, 2)));

    save_pgm(&Image::new(ImageShape::gray(5, 3), vec![0; 15]).unwrap(), &dir.path().join("d.pgm")).unwrap();
    std::fs::write(&manifest, "a.pgm,alice\nd.pgm,dan\n").unwrap();
    match load_image_dir(dir.path(), &manifest).unwrap_err() {
        Error::Heterogeneous { offenders } => assert!(offenders.iter().any(|o| o.contains("d.pgm"))),
        other => panic!("{other}"),
    }

    std::fs::write(dir.path().join("broken.pgm"), b"P5\n4 3\n255\n\x00").unwrap();
    std::fs::write(&manifest, "broken.pgm,x\n").unwrap();
    assert!(matches!(load_image_dir(dir.path(), &manifest), Err(Error::Codec { .. })));
}

proptest! {
    #[test]
    fn netpbm_bytes_round_trip(w in 1usize..12, h in 1usize..12, rgb in any::<bool>(), seed in any::<u64>()) {
        let c = if rgb { 3 } else { 1 };
        let shape = ImageShape::new(w, h, c).unwrap();
        let mut state = seed;
        let pixels = (0..shape.len()).map(|_| { state = state.wrapping_mul(6364136223846793005).wrapping_add(1); (state >> 56) as u8 }).collect();
        let img = Image::new(shape, pixels).unwrap();
        let bytes = encode_netpbm(&img);
        prop_assert_eq!(decode_netpbm(&bytes).unwrap(), img);
    }
}
