//! Dataset assembly: tuple list + extracted frames + permutation set in,
//! puzzle shards + manifest out; and the matching verification pass.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{crop_frame, maybe_grayscale, sample_patches, GrayScope, GridSpec, Patch, Pixels};
use crate::io::manifest::{Manifest, ShardEntry, TupleEntry, TupleStatus, MANIFEST_FILE};
use crate::io::shard::{read_shard, write_shard, PixelEncoding, ShardData};
use crate::perm::PermutationSet;
use crate::puzzle::{build_record, canonical_order, verify_record_with_digest, PermDigest, PuzzleRecord};
use crate::rng::{keyed, KeyedRng};
use crate::tuples::{expand_quadruple, fixed_index_tuple, FrameTuple, Regime, TupleListEntry, TupleOutcome};

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub dataset_name: String,
    pub grid: GridSpec,
    pub regime: Regime,
    /// 1-based frame indices for the fixed-index regime.
    pub fixed_indices: Vec<usize>,
    pub gray_prob: f64,
    pub gray_scope: GrayScope,
    /// Center crops instead of random ones.
    pub center_crop: bool,
    pub seed: u64,
    pub epoch: u64,
    pub encoding: PixelEncoding,
    pub shard_size: usize,
    pub frames_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Permutation file path as given by the user, echoed into the manifest.
    pub perm_file: String,
    pub flags: Vec<String>,
    /// Also write every raw patch as PNG under `out_dir/png/`.
    pub png_debug: bool,
}

impl BuildConfig {
    pub fn new(frames_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>, seed: u64) -> Self {
        BuildConfig {
            dataset_name: "video-jigsaw".into(),
            grid: GridSpec::default(),
            regime: Regime::QuadrupleExpand,
            fixed_indices: crate::tuples::DEFAULT_FIXED_INDICES.to_vec(),
            gray_prob: 0.5,
            gray_scope: GrayScope::Tuple,
            center_crop: false,
            seed,
            epoch: 0,
            encoding: PixelEncoding::Norm32,
            shard_size: 4096,
            frames_dir: frames_dir.into(),
            out_dir: out_dir.into(),
            perm_file: String::new(),
            flags: Vec::new(),
            png_debug: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildSummary {
    pub manifest: Manifest,
    pub built: usize,
    pub skipped: usize,
}

impl BuildSummary {
    pub fn skipped_fraction(&self) -> f64 {
        let total = self.built + self.skipped;
        if total == 0 {
            0.0
        } else {
            self.skipped as f64 / total as f64
        }
    }
}

enum Planned {
    Tuple(FrameTuple),
    Skipped(TupleEntry),
}

fn plan_tuples(cfg: &BuildConfig, entries: &[TupleListEntry]) -> Result<Vec<Planned>> {
    let mut planned = Vec::new();
    for entry in entries {
        let skipped = |reason: String| {
            warn!("skipping {}: {reason}", entry.video_id);
            Planned::Skipped(TupleEntry {
                tuple_id: format!("{}#0", entry.video_id),
                video_id: entry.video_id.clone(),
                frames: entry.frame_refs.clone(),
                status: TupleStatus::Skipped { reason },
            })
        };
        match cfg.regime {
            Regime::QuadrupleExpand => match expand_quadruple(&entry.video_id, &entry.frame_refs) {
                Ok(tuples) => planned.extend(tuples.into_iter().map(Planned::Tuple)),
                Err(e) => planned.push(skipped(e.to_string())),
            },
            Regime::FixedIndex => {
                let frames = if entry.frame_refs.is_empty() {
                    list_video_frames(&cfg.frames_dir, &entry.video_id)?
                } else {
                    entry.frame_refs.clone()
                };
                match fixed_index_tuple(&entry.video_id, &frames, &cfg.fixed_indices)? {
                    TupleOutcome::Built(t) => planned.push(Planned::Tuple(t)),
                    TupleOutcome::Skipped { reason, .. } => planned.push(skipped(reason)),
                }
            }
        }
    }
    Ok(planned)
}

/// Image files in `frames_dir/video_id`, sorted by name, as paths relative
/// to `frames_dir`.
fn list_video_frames(frames_dir: &Path, video_id: &str) -> Result<Vec<String>> {
    let dir = frames_dir.join(video_id);
    let Ok(read) = std::fs::read_dir(&dir) else {
        return Ok(Vec::new());
    };
    let mut names: Vec<String> = read
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| {
            let lower = n.to_ascii_lowercase();
            lower.ends_with(".png") || lower.ends_with(".jpg") || lower.ends_with(".jpeg")
        })
        .collect();
    names.sort();
    Ok(names.into_iter().map(|n| format!("{video_id}/{n}")).collect())
}

pub fn load_frame(path: &Path) -> Result<Pixels<u8>> {
    let img = image::open(path).map_err(|e| Error::Image { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(Pixels::from_rgb_image(&img.to_rgb8()))
}

/// Crops, samples, projects to gray and shuffles one tuple.
pub fn process_tuple(
    tuple: &FrameTuple,
    cfg: &BuildConfig,
    set: &PermutationSet,
) -> Result<PuzzleRecord<u8>> {
    let tuple_id = tuple.tuple_id();
    let mut rng = keyed(cfg.seed, "pipeline", tuple_id.as_bytes());
    let mut per_frame = Vec::with_capacity(tuple.n_f());
    for (k, frame_ref) in tuple.frames.iter().enumerate() {
        let image = load_frame(&cfg.frames_dir.join(&frame_ref.path))?;
        let crop = if cfg.center_crop {
            crop_frame::<_, KeyedRng>(&image, &cfg.grid, None)?
        } else {
            crop_frame(&image, &cfg.grid, Some(&mut rng))?
        };
        let mut patches = sample_patches(&crop, &cfg.grid, k as u16, &mut rng)?;
        if cfg.gray_scope == GrayScope::Frame {
            maybe_grayscale(&mut patches, cfg.gray_prob, &mut rng)?;
        }
        per_frame.push(patches);
    }
    let mut canonical: Vec<Patch<u8>> = canonical_order(per_frame)?;
    if cfg.gray_scope == GrayScope::Tuple {
        maybe_grayscale(&mut canonical, cfg.gray_prob, &mut rng)?;
    }
    build_record(&tuple_id, canonical, set, cfg.seed, cfg.epoch)
}

fn shard_name(index: usize) -> String {
    format!("shard-{index:05}.vjz")
}

/// Builds the dataset described by `cfg` and writes shards plus manifest.
pub fn build_dataset(cfg: &BuildConfig, entries: &[TupleListEntry], set: &PermutationSet) -> Result<BuildSummary> {
    if cfg.grid.n_p() != set.n_p() {
        return Err(Error::invalid(format!(
            "grid has {} cells per frame, permutation set expects n_p = {}",
            cfg.grid.n_p(),
            set.n_p()
        )));
    }
    let tuple_len = match cfg.regime {
        Regime::QuadrupleExpand => 3,
        Regime::FixedIndex => cfg.fixed_indices.len(),
    };
    if tuple_len != set.n_f() {
        return Err(Error::invalid(format!(
            "{} regime yields {tuple_len} frames per tuple, permutation set expects n_f = {}",
            cfg.regime,
            set.n_f()
        )));
    }
    if cfg.shard_size == 0 {
        return Err(Error::invalid("shard size must be at least 1"));
    }
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let digest = PermDigest::of(set);

    let mut tuples = Vec::new();
    let mut entries_out = Vec::new();
    for p in plan_tuples(cfg, entries)? {
        match p {
            Planned::Tuple(t) => tuples.push(t),
            Planned::Skipped(e) => entries_out.push(e),
        }
    }
    tuples.sort_by_key(FrameTuple::tuple_id);
    if let Some(w) = tuples.windows(2).find(|w| w[0].tuple_id() == w[1].tuple_id()) {
        return Err(Error::invalid(format!("duplicate tuple id {}", w[0].tuple_id())));
    }

    let mut shards = Vec::new();
    let mut pending: Vec<PuzzleRecord<u8>> = Vec::new();
    let mut flush = |pending: &mut Vec<PuzzleRecord<u8>>, entries_out: &mut Vec<TupleEntry>, by_id: &HashMap<String, &FrameTuple>| -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let name = shard_name(shards.len());
        let path = cfg.out_dir.join(&name);
        match cfg.encoding {
            PixelEncoding::Raw8 => write_shard(pending, &path)?,
            PixelEncoding::Norm32 => {
                let normalized: Vec<PuzzleRecord<f32>> = pending.par_iter().map(|r| r.normalized()).collect();
                write_shard(&normalized, &path)?
            }
        };
        if cfg.png_debug {
            write_png_debug(&cfg.out_dir, pending)?;
        }
        for rec in pending.iter() {
            let t = by_id[&rec.tuple_id];
            entries_out.push(TupleEntry {
                tuple_id: rec.tuple_id.clone(),
                video_id: t.video_id.clone(),
                frames: t.frames.iter().map(|f| f.path.clone()).collect(),
                status: TupleStatus::Built { shard: name.clone(), label: rec.label },
            });
        }
        info!("wrote {} records to {}", pending.len(), path.display());
        shards.push(ShardEntry { file: name, records: pending.len() as u64 });
        pending.clear();
        Ok(())
    };

    let by_id: HashMap<String, &FrameTuple> = tuples.iter().map(|t| (t.tuple_id(), t)).collect();
    for batch in tuples.chunks(cfg.shard_size) {
        let results: Vec<(String, Result<PuzzleRecord<u8>>)> =
            batch.par_iter().map(|t| (t.tuple_id(), process_tuple(t, cfg, set))).collect();
        for (tuple_id, result) in results {
            match result {
                Ok(rec) => {
                    pending.push(rec);
                    if pending.len() == cfg.shard_size {
                        flush(&mut pending, &mut entries_out, &by_id)?;
                    }
                }
                Err(e) => {
                    warn!("skipping tuple {tuple_id}: {e}");
                    let t = by_id[&tuple_id];
                    entries_out.push(TupleEntry {
                        tuple_id,
                        video_id: t.video_id.clone(),
                        frames: t.frames.iter().map(|f| f.path.clone()).collect(),
                        status: TupleStatus::Skipped { reason: e.to_string() },
                    });
                }
            }
        }
    }
    flush(&mut pending, &mut entries_out, &by_id)?;
    entries_out.sort_by(|a, b| a.tuple_id.cmp(&b.tuple_id));

    let manifest = Manifest {
        dataset_name: cfg.dataset_name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        regime: cfg.regime,
        n_f: set.n_f(),
        n_p: set.n_p(),
        grid: cfg.grid,
        gray_prob: cfg.gray_prob,
        gray_scope: cfg.gray_scope,
        encoding: cfg.encoding.as_str().to_string(),
        seed: cfg.seed,
        epoch: cfg.epoch,
        perm_set_digest: digest.to_hex(),
        perm_file: cfg.perm_file.clone(),
        flags: cfg.flags.clone(),
        shards,
        tuples: entries_out,
    };
    manifest.check()?;
    manifest.write(&cfg.out_dir.join(MANIFEST_FILE))?;
    let built = manifest.built_count();
    let skipped = manifest.skipped_count();
    Ok(BuildSummary { manifest, built, skipped })
}

fn write_png_debug(out_dir: &Path, records: &[PuzzleRecord<u8>]) -> Result<()> {
    for rec in records {
        let dir = out_dir.join("png").join(rec.tuple_id.replace('#', "_"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (pos, patch) in rec.patches.iter().enumerate() {
            let path = dir.join(format!("{pos:02}.png"));
            let img = patch.pixels.to_rgb_image().ok_or_else(|| Error::invalid("PNG export needs RGB patches"))?;
            img.save(&path).map_err(|e| Error::Image { path: path.clone(), message: e.to_string() })?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifySummary {
    pub shards: usize,
    pub records: usize,
}

/// Re-reads every shard listed in the manifest under `out_dir` and checks
/// each record against `set`.
pub fn verify_dataset(out_dir: &Path, set: &PermutationSet) -> Result<VerifySummary> {
    let manifest = Manifest::read(&out_dir.join(MANIFEST_FILE))?;
    let digest = PermDigest::of(set);
    if manifest.perm_set_digest != digest.to_hex() {
        return Err(Error::StalePermutation { expected: manifest.perm_set_digest.clone(), found: digest.to_hex() });
    }
    manifest.check()?;
    let mut expected: HashMap<&str, (&str, u32)> = manifest
        .tuples
        .iter()
        .filter_map(|t| match &t.status {
            TupleStatus::Built { shard, label } => Some((t.tuple_id.as_str(), (shard.as_str(), *label))),
            TupleStatus::Skipped { .. } => None,
        })
        .collect();

    let mut records = 0;
    for shard in &manifest.shards {
        let (header, data) = read_shard(&out_dir.join(&shard.file))?;
        if header.record_count != shard.records {
            return Err(Error::Verification(format!("{}: manifest lists {} records", shard.file, shard.records)));
        }
        let checked: Vec<(String, u32, bool)> = match &data {
            ShardData::Raw8(recs) => check_all(recs, set, &digest)?,
            ShardData::Norm32(recs) => check_all(recs, set, &digest)?,
        };
        for (tuple_id, label, ok) in checked {
            if !ok {
                return Err(Error::Verification(format!("record {tuple_id} in {} does not restore", shard.file)));
            }
            match expected.remove(tuple_id.as_str()) {
                Some((s, l)) if s == shard.file && l == label => {}
                Some(_) => {
                    return Err(Error::Verification(format!("record {tuple_id} disagrees with the manifest")));
                }
                None => {
                    return Err(Error::Verification(format!("record {tuple_id} is unknown or duplicated")));
                }
            }
            records += 1;
        }
    }
    if let Some(missing) = expected.keys().next() {
        return Err(Error::Verification(format!("built tuple {missing} has no record")));
    }
    Ok(VerifySummary { shards: manifest.shards.len(), records })
}

fn check_all<T: Clone + Sync>(
    recs: &[PuzzleRecord<T>],
    set: &PermutationSet,
    digest: &PermDigest,
) -> Result<Vec<(String, u32, bool)>> {
    recs.par_iter()
        .map(|r| Ok((r.tuple_id.clone(), r.label, verify_record_with_digest(r, set, digest)?)))
        .collect()
}
