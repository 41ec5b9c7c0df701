mod common;

use proptest::prelude::*;
use vacgan::datasets::idx::{IdxFile, IMAGES_MAGIC, LABELS_MAGIC};
use vacgan::datasets::{load_mnist, DataError};

#[test]
fn fabricated_single_image_parses_exactly() {
    let (img, lab) = common::fabricated_idx_pair();
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("img"), dir.path().join("lab"));
    std::fs::write(&ip, &img).unwrap();
    std::fs::write(&lp, &lab).unwrap();
    let batch = load_mnist(&ip, &lp).unwrap();
    assert_eq!(batch.len(), 1);
    assert_eq!(batch.labels, vec![7]);
    assert_eq!(batch.features.shape(), &[1, 784]);
    for (k, &v) in batch.features.data().iter().enumerate() {
        assert_eq!(v, (k % 256) as f64 / 255.0);
    }
    let parsed = IdxFile::parse(&img).unwrap();
    assert_eq!(parsed.magic, IMAGES_MAGIC);
    assert_eq!(IdxFile::parse(&lab).unwrap().magic, LABELS_MAGIC);
    assert_eq!(parsed.to_bytes(), img);
}

#[test]
fn bad_magic_is_rejected_with_offset_and_file() {
    let (mut img, lab) = common::fabricated_idx_pair();
    img[2] = 0x09;
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("img"), dir.path().join("lab"));
    std::fs::write(&ip, &img).unwrap();
    std::fs::write(&lp, &lab).unwrap();
    let err = load_mnist(&ip, &lp).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("byte offset 0") && msg.contains("img"), "{msg}");
    assert!(matches!(IdxFile::parse(&img), Err(DataError::BadMagic { offset: 0, .. })));
}

#[test]
fn out_of_range_label_reports_its_offset() {
    let (img, mut lab) = common::fabricated_idx_pair();
    lab[8] = 10;
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = (dir.path().join("img"), dir.path().join("lab"));
    std::fs::write(&ip, &img).unwrap();
    std::fs::write(&lp, &lab).unwrap();
    let msg = load_mnist(&ip, &lp).unwrap_err().to_string();
    assert!(msg.contains("byte offset 8"), "{msg}");
}

proptest! {
    #[test]
    fn write_then_parse_round_trips(dims in prop::collection::vec(1u32..6, 1..4), seed in any::<u8>()) {
        let len: usize = dims.iter().map(|&d| d as usize).product();
        let payload: Vec<u8> = (0..len).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
        let f = IdxFile::new(dims.clone(), payload).unwrap();
        let back = IdxFile::parse(&f.to_bytes()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn every_truncation_is_an_error(cut in 0usize..20) {
        let bytes = IdxFile::new(vec![2, 2], vec![1, 2, 3, 4]).unwrap().to_bytes();
        prop_assume!(cut < bytes.len());
        prop_assert!(IdxFile::parse(&bytes[..cut]).is_err());
    }
}

#[test]
fn real_mnist_when_present() {
    if !common::mnist_available() {
        eprintln!("MNIST files not found under {}; skipping", common::mnist_dir().display());
        return;
    }
    let (train, test) = vacgan::datasets::load_mnist_dir(&common::mnist_dir()).unwrap();
    assert_eq!((train.len(), test.len()), (60000, 10000));
    assert!(train.features.data().iter().all(|v| (0.0..=1.0).contains(v)));
}
