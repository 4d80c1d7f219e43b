//! Frame geometry and patch preprocessing: crop, grid, jittered patch
//! sampling, grayscale projection and per-patch normalization.
//!
//! Stage order is fixed by the types: grayscale projection only accepts raw
//! 8-bit patches, and normalization turns them into float patches.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Patch sizes a 224/112 grid accepts out of the box.
pub const STANDARD_PATCH_SIZES: [usize; 3] = [64, 80, 100];

/// Standard deviation (input scale) below which a patch is treated as constant.
pub const CONSTANT_PATCH_STD: f64 = 1e-6;

/// BT.601 luma weights for R, G, B.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub crop: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub patch: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { crop: 224, grid_rows: 2, grid_cols: 2, patch: 64 }
    }
}

impl GridSpec {
    pub fn new(crop: usize, grid_rows: usize, grid_cols: usize, patch: usize) -> Result<Self> {
        if crop == 0 || grid_rows == 0 || grid_cols == 0 || patch == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        if !crop.is_multiple_of(grid_rows) || !crop.is_multiple_of(grid_cols) {
            return Err(Error::invalid(format!("crop {crop} is not divisible by a {grid_rows}x{grid_cols} grid")));
        }
        if crop / grid_rows != crop / grid_cols {
            return Err(Error::invalid("grid cells must be square"));
        }
        let cell = crop / grid_rows;
        if patch > cell {
            return Err(Error::invalid(format!("patch {patch} larger than cell {cell}")));
        }
        Ok(GridSpec { crop, grid_rows, grid_cols, patch })
    }

    pub fn cell(&self) -> usize {
        self.crop / self.grid_rows
    }

    /// Patches per frame.
    pub fn n_p(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// Largest jitter offset per axis; offsets lie in `0..=max_jitter()`.
    pub fn max_jitter(&self) -> usize {
        self.cell() - self.patch
    }
}

/// Dense `H×W×C` pixel buffer in row-major, channel-interleaved order.
#[derive(Debug, Clone, PartialEq)]
pub struct Pixels<T> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Copy> Pixels<T> {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "buffer of {} values does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Pixels { height, width, channels, data })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Self {
        Pixels { height, width, channels, data: vec![value; height * width * channels] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Copies the `h×w` window with top-left corner `(y, x)`.
    pub fn window(&self, y: usize, x: usize, h: usize, w: usize) -> Pixels<T> {
        assert!(y + h <= self.height && x + w <= self.width, "window out of bounds");
        let row_len = w * self.channels;
        let mut data = Vec::with_capacity(h * row_len);
        for row in y..y + h {
            let start = (row * self.width + x) * self.channels;
            data.extend_from_slice(&self.data[start..start + row_len]);
        }
        Pixels { height: h, width: w, channels: self.channels, data }
    }
}

impl Pixels<u8> {
    pub fn from_rgb_image(img: &image::RgbImage) -> Self {
        Pixels {
            height: img.height() as usize,
            width: img.width() as usize,
            channels: 3,
            data: img.as_raw().clone(),
        }
    }

    pub fn to_rgb_image(&self) -> Option<image::RgbImage> {
        if self.channels != 3 {
            return None;
        }
        image::RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
    }
}

/// Where a patch came from: frame position in the tuple, grid cell, and the
/// jitter offset of the patch inside its cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchSource {
    pub frame: u16,
    pub cell_row: u16,
    pub cell_col: u16,
    pub jitter_y: u16,
    pub jitter_x: u16,
}

impl PatchSource {
    /// Canonical sort key: frame, then row-major cell.
    pub fn canonical_key(&self) -> (u16, u16, u16) {
        (self.frame, self.cell_row, self.cell_col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch<T> {
    pub pixels: Pixels<T>,
    pub source: PatchSource,
}

/// Cuts the `crop×crop` window. With an rng the window position is uniform
/// over all valid positions; without one the window is centered.
pub fn crop_frame<T: Copy, R: Rng + ?Sized>(image: &Pixels<T>, spec: &GridSpec, rng: Option<&mut R>) -> Result<Pixels<T>> {
    let (y, x) = crop_origin(image, spec, rng)?;
    Ok(image.window(y, x, spec.crop, spec.crop))
}

/// Top-left corner `crop_frame` would use.
pub fn crop_origin<T: Copy, R: Rng + ?Sized>(
    image: &Pixels<T>,
    spec: &GridSpec,
    rng: Option<&mut R>,
) -> Result<(usize, usize)> {
    if image.height() < spec.crop || image.width() < spec.crop {
        return Err(Error::invalid(format!(
            "image {}x{} is smaller than crop {}",
            image.height(),
            image.width(),
            spec.crop
        )));
    }
    let (dy, dx) = (image.height() - spec.crop, image.width() - spec.crop);
    Ok(match rng {
        Some(rng) => (rng.gen_range(0..=dy), rng.gen_range(0..=dx)),
        None => (dy / 2, dx / 2),
    })
}

/// One jittered patch per grid cell, in row-major cell order.
pub fn sample_patches<T: Copy, R: Rng + ?Sized>(
    crop: &Pixels<T>,
    spec: &GridSpec,
    frame: u16,
    rng: &mut R,
) -> Result<Vec<Patch<T>>> {
    if crop.height() != spec.crop || crop.width() != spec.crop {
        return Err(Error::invalid(format!(
            "crop is {}x{}, grid expects {}",
            crop.height(),
            crop.width(),
            spec.crop
        )));
    }
    let cell = spec.cell();
    let jitter = spec.max_jitter();
    let mut patches = Vec::with_capacity(spec.n_p());
    for row in 0..spec.grid_rows {
        for col in 0..spec.grid_cols {
            let jy = rng.gen_range(0..=jitter);
            let jx = rng.gen_range(0..=jitter);
            patches.push(Patch {
                pixels: crop.window(row * cell + jy, col * cell + jx, spec.patch, spec.patch),
                source: PatchSource {
                    frame,
                    cell_row: row as u16,
                    cell_col: col as u16,
                    jitter_y: jy as u16,
                    jitter_x: jx as u16,
                },
            });
        }
    }
    Ok(patches)
}

/// Granularity of the grayscale decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrayScope {
    /// One draw per tuple; all frames share it.
    #[default]
    Tuple,
    /// One draw per frame.
    Frame,
}

impl std::str::FromStr for GrayScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tuple" => Ok(GrayScope::Tuple),
            "frame" => Ok(GrayScope::Frame),
            other => Err(Error::invalid(format!("unknown gray scope {other:?}"))),
        }
    }
}

/// Luma of one RGB pixel, rounded to 8 bits.
pub fn luma(rgb: [u8; 3]) -> u8 {
    let y: f64 = rgb.iter().zip(LUMA).map(|(&c, w)| c as f64 * w).sum();
    y.round().clamp(0.0, 255.0) as u8
}

/// With probability `probability`, replaces every pixel of every patch by its
/// luma replicated across channels. One draw covers the whole slice.
/// Returns whether the projection was applied.
pub fn maybe_grayscale<R: Rng + ?Sized>(patches: &mut [Patch<u8>], probability: f64, rng: &mut R) -> Result<bool> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::invalid(format!("grayscale probability {probability} outside [0, 1]")));
    }
    // always draw, so later draws do not shift with the probability
    let draw: f64 = rng.gen();
    if draw >= probability {
        return Ok(false);
    }
    for patch in patches.iter_mut() {
        to_grayscale(&mut patch.pixels);
    }
    Ok(true)
}

pub fn to_grayscale(pixels: &mut Pixels<u8>) {
    if pixels.channels() < 3 {
        return;
    }
    let channels = pixels.channels();
    for px in pixels.data_mut().chunks_exact_mut(channels) {
        let y = luma([px[0], px[1], px[2]]);
        px[..3].fill(y);
    }
}

/// Standardizes a patch to zero mean and unit standard deviation, with the
/// statistics taken jointly over all pixels and channels (population std).
/// A patch whose std is below [`CONSTANT_PATCH_STD`] becomes all zeros.
pub fn normalize_patch<S, T>(patch: &Patch<S>) -> Patch<T>
where
    S: Copy + ToPrimitive,
    T: Float + FromPrimitive,
{
    Patch { pixels: normalize_pixels(&patch.pixels), source: patch.source }
}

pub fn normalize_pixels<S, T>(pixels: &Pixels<S>) -> Pixels<T>
where
    S: Copy + ToPrimitive,
    T: Float + FromPrimitive,
{
    let values: Vec<f64> = pixels.data().iter().map(|v| v.to_f64().unwrap_or(0.0)).collect();
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let data = if std < CONSTANT_PATCH_STD {
        vec![T::zero(); values.len()]
    } else {
        values.iter().map(|v| T::from_f64((v - mean) / std).unwrap()).collect()
    };
    Pixels { height: pixels.height(), width: pixels.width(), channels: pixels.channels(), data }
}

/// Mean and population standard deviation of a pixel buffer.
pub fn moments<T: Copy + ToPrimitive>(pixels: &Pixels<T>) -> (f64, f64) {
    let n = pixels.data().len().max(1) as f64;
    let mean = pixels.data().iter().map(|v| v.to_f64().unwrap()).sum::<f64>() / n;
    let var = pixels.data().iter().map(|v| (v.to_f64().unwrap() - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
