//! Spatio-temporal jigsaw puzzles for self-supervised video pretraining.
//!
//! The crate covers the whole pipeline upstream of a network: diverse
//! permutation-set sampling ([`sampler`]), frame geometry and patch
//! preprocessing ([`frame`]), tuple construction from frame sequences
//! ([`tuples`]), puzzle records with permutation-index labels ([`puzzle`]),
//! and the on-disk formats ([`io`]).
//!
//! Pixel and normalization code is generic over the scalar type; the aliases
//! below name the concrete instantiations used by the shard formats.

pub mod dataset;
pub mod error;
pub mod frame;
pub mod io;
pub mod perm;
pub mod puzzle;
pub mod rng;
pub mod sampler;
pub mod tuples;

pub use error::{Error, Result};
pub use frame::{GrayScope, GridSpec, Patch, PatchSource, Pixels};
pub use perm::{diversity, hamming, is_block_coherent, DiversityStats, Permutation, PermutationSet, SamplerMode};
pub use puzzle::{PermDigest, PuzzleRecord};
pub use sampler::{SamplerParams, SamplerReport};
pub use tuples::{FrameRef, FrameTuple, Regime};

/// Exact rational used for mean Hamming distances.
pub type Rational = num_rational::Ratio<u64>;

/// 8-bit patch as cut from a frame.
pub type RawPatch = Patch<u8>;
/// Single-precision normalized patch (the `norm32` shard encoding).
pub type NormPatch = Patch<f32>;
/// Double-precision normalized patch.
pub type NormPatch64 = Patch<f64>;

pub type RawImage = Pixels<u8>;
pub type RawRecord = PuzzleRecord<u8>;
pub type NormRecord = PuzzleRecord<f32>;
