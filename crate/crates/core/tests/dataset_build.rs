//! End-to-end dataset builds over small synthetic PNG videos.

use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use vjig::dataset::{build_dataset, verify_dataset, BuildConfig};
use vjig::io::manifest::{Manifest, TupleStatus, MANIFEST_FILE};
use vjig::io::shard::{read_shard_as, PixelEncoding};
use vjig::sampler::{generate_sp, SamplerParams};
use vjig::tuples::{parse_tuple_list, Regime};
use vjig::{Error, GridSpec, PermutationSet};

const H: u32 = 40;
const W: u32 = 46;

fn noise_frame(path: &Path, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let img = RgbImage::from_fn(W, H, |_, _| Rgb([rng.gen(), rng.gen(), rng.gen()]));
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    img.save(path).unwrap();
}

/// `videos` of `frames` noise frames each, named `vNN/fNN.png`.
fn frames_dir(videos: usize, frames: usize) -> TempDir {
    let dir = TempDir::new().unwrap();
    for v in 0..videos {
        for f in 0..frames {
            noise_frame(&dir.path().join(format!("v{v:02}/f{f:02}.png")), (v * 100 + f) as u64);
        }
    }
    dir
}

fn quad_list(videos: usize) -> String {
    (0..videos)
        .map(|v| format!("v{v:02} v{v:02}/f00.png v{v:02}/f01.png v{v:02}/f02.png v{v:02}/f03.png\n"))
        .collect()
}

fn small_set(seed: u64) -> PermutationSet {
    generate_sp(&SamplerParams::spatial(10, 4, 3, seed)).unwrap().0
}

fn config(frames: &Path, out: &Path) -> BuildConfig {
    let mut cfg = BuildConfig::new(frames, out, 11);
    cfg.grid = GridSpec::new(32, 2, 2, 8).unwrap();
    cfg.shard_size = 5;
    cfg
}

fn shard_bytes(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "vjz"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn quadruple_build_verifies_and_is_reproducible() {
    let frames = frames_dir(3, 4);
    let entries = parse_tuple_list(&quad_list(3)).unwrap();
    let set = small_set(1);
    let out_a = TempDir::new().unwrap();
    let out_b = TempDir::new().unwrap();

    let summary = build_dataset(&config(frames.path(), out_a.path()), &entries, &set).unwrap();
    assert_eq!((summary.built, summary.skipped), (12, 0));
    assert_eq!(summary.manifest.shards.len(), 3);
    assert_eq!(summary.manifest.shards.iter().map(|s| s.records).sum::<u64>(), 12);
    let checked = verify_dataset(out_a.path(), &set).unwrap();
    assert_eq!((checked.shards, checked.records), (3, 12));

    let ids: Vec<&str> = summary.manifest.tuples.iter().map(|t| t.tuple_id.as_str()).collect();
    assert_eq!(ids[..4], ["v00#0", "v00#1", "v00#2", "v00#3"]);
    assert_eq!(summary.manifest.tuples[2].frames, ["v00/f00.png", "v00/f02.png", "v00/f03.png"]);

    build_dataset(&config(frames.path(), out_b.path()), &entries, &set).unwrap();
    assert_eq!(shard_bytes(out_a.path()), shard_bytes(out_b.path()));
    let manifest_a = std::fs::read(out_a.path().join(MANIFEST_FILE)).unwrap();
    let manifest_b = std::fs::read(out_b.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest_a, manifest_b);
}

#[test]
fn raw_patches_are_windows_of_the_source_frames() {
    let frames = frames_dir(2, 4);
    let entries = parse_tuple_list(&quad_list(2)).unwrap();
    let set = small_set(2);
    let out = TempDir::new().unwrap();
    let mut cfg = config(frames.path(), out.path());
    cfg.encoding = PixelEncoding::Raw8;
    cfg.center_crop = true;
    cfg.gray_prob = 0.0;
    let summary = build_dataset(&cfg, &entries, &set).unwrap();

    let (cy, cx) = (((H - 32) / 2) as usize, ((W - 32) / 2) as usize);
    let mut checked = 0;
    for shard in &summary.manifest.shards {
        for rec in read_shard_as::<u8>(&out.path().join(&shard.file)).unwrap() {
            let entry = summary.manifest.tuples.iter().find(|t| t.tuple_id == rec.tuple_id).unwrap();
            let row = set.rows()[rec.label as usize].as_slice();
            for (pos, patch) in rec.patches.iter().enumerate() {
                let s = patch.source;
                let canonical = s.frame as usize * 4 + s.cell_row as usize * 2 + s.cell_col as usize;
                assert_eq!(canonical + 1, row[pos] as usize);
                assert!(s.jitter_y <= 8 && s.jitter_x <= 8);
                let img = image::open(frames.path().join(&entry.frames[s.frame as usize])).unwrap().to_rgb8();
                let (oy, ox) = (cy + s.cell_row as usize * 16 + s.jitter_y as usize, cx + s.cell_col as usize * 16 + s.jitter_x as usize);
                for y in 0..8 {
                    for x in 0..8 {
                        let px = img.get_pixel((ox + x) as u32, (oy + y) as u32).0;
                        for (c, &v) in px.iter().enumerate() {
                            assert_eq!(patch.pixels.get(y, x, c), v);
                        }
                    }
                }
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 8);
}

#[test]
fn unreadable_frame_skips_only_the_tuples_using_it() {
    let frames = frames_dir(2, 4);
    std::fs::write(frames.path().join("v01/f03.png"), b"not a png").unwrap();
    let entries = parse_tuple_list(&quad_list(2)).unwrap();
    let set = small_set(3);
    let out = TempDir::new().unwrap();
    let summary = build_dataset(&config(frames.path(), out.path()), &entries, &set).unwrap();
    assert_eq!((summary.built, summary.skipped), (5, 3));
    assert!((summary.skipped_fraction() - 3.0 / 8.0).abs() < 1e-12);
    let skipped: Vec<&str> = summary
        .manifest
        .tuples
        .iter()
        .filter(|t| matches!(t.status, TupleStatus::Skipped { .. }))
        .map(|t| t.tuple_id.as_str())
        .collect();
    assert_eq!(skipped, ["v01#1", "v01#2", "v01#3"]);
    assert_eq!(verify_dataset(out.path(), &set).unwrap().records, 5);
}

#[test]
fn fixed_index_regime_skips_short_videos() {
    let frames = TempDir::new().unwrap();
    for f in 0..12 {
        noise_frame(&frames.path().join(format!("long/img{f:02}.png")), f);
    }
    for f in 0..6 {
        noise_frame(&frames.path().join(format!("short/img{f:02}.png")), 50 + f);
    }
    let entries = parse_tuple_list("long\nshort\n").unwrap();
    let set = small_set(4);
    let out = TempDir::new().unwrap();
    let mut cfg = config(frames.path(), out.path());
    cfg.regime = Regime::FixedIndex;
    let summary = build_dataset(&cfg, &entries, &set).unwrap();
    assert_eq!((summary.built, summary.skipped), (1, 1));
    let long = &summary.manifest.tuples[0];
    assert_eq!(long.tuple_id, "long#0");
    assert_eq!(long.frames, ["long/img00.png", "long/img04.png", "long/img09.png"]);
    match &summary.manifest.tuples[1].status {
        TupleStatus::Skipped { reason } => assert!(reason.contains("6 frames"), "{reason}"),
        other => panic!("short video was not skipped: {other:?}"),
    }
    verify_dataset(out.path(), &set).unwrap();
}

#[test]
fn verifying_against_another_set_is_stale() {
    let frames = frames_dir(1, 4);
    let entries = parse_tuple_list(&quad_list(1)).unwrap();
    let out = TempDir::new().unwrap();
    build_dataset(&config(frames.path(), out.path()), &entries, &small_set(5)).unwrap();
    match verify_dataset(out.path(), &small_set(6)) {
        Err(Error::StalePermutation { .. }) => {}
        other => panic!("expected a stale permutation error, got {other:?}"),
    }
}

#[test]
fn tampered_shard_fails_verification() {
    let frames = frames_dir(1, 4);
    let entries = parse_tuple_list(&quad_list(1)).unwrap();
    let set = small_set(7);
    let out = TempDir::new().unwrap();
    build_dataset(&config(frames.path(), out.path()), &entries, &set).unwrap();
    let path = out.path().join("shard-00000.vjz");
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(verify_dataset(out.path(), &set), Err(Error::Checksum(_))));
}

#[test]
fn manifest_records_configuration_and_png_debug_output() {
    let frames = frames_dir(1, 4);
    let entries = parse_tuple_list(&quad_list(1)).unwrap();
    let set = small_set(8);
    let out = TempDir::new().unwrap();
    let mut cfg = config(frames.path(), out.path());
    cfg.png_debug = true;
    cfg.epoch = 3;
    cfg.flags = vec!["--epoch".into(), "3".into()];
    build_dataset(&cfg, &entries, &set).unwrap();

    let manifest = Manifest::read(&out.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!((manifest.n_p, manifest.n_f, manifest.epoch, manifest.seed), (4, 3, 3, 11));
    assert_eq!(manifest.encoding, "norm32");
    assert_eq!(manifest.flags, ["--epoch", "3"]);
    for ordinal in 0..4 {
        for pos in 0..12 {
            let png = out.path().join(format!("png/v00_{ordinal}/{pos:02}.png"));
            let img = image::open(&png).unwrap();
            assert_eq!((img.width(), img.height()), (8, 8));
        }
    }
}

#[test]
fn shape_mismatch_is_rejected() {
    let frames = frames_dir(1, 4);
    let entries = parse_tuple_list(&quad_list(1)).unwrap();
    let out = TempDir::new().unwrap();
    let wrong_frames = generate_sp(&SamplerParams::spatial(4, 4, 2, 0)).unwrap().0;
    assert!(matches!(
        build_dataset(&config(frames.path(), out.path()), &entries, &wrong_frames),
        Err(Error::InvalidArgument(_))
    ));
    let mut cfg = config(frames.path(), out.path());
    cfg.grid = GridSpec::new(30, 3, 3, 6).unwrap();
    assert!(matches!(build_dataset(&cfg, &entries, &small_set(0)), Err(Error::InvalidArgument(_))));
}
