//! Puzzle shard binary format, version 1. All integers little-endian.
//!
//! ```text
//! header   magic "VJZ1" | version u32 | encoding u8 | byte order u8 (0 = LE) | reserved u16
//!          | height u32 | width u32 | channels u32 | patches per record u32 | record count u64
//! record   body length u64 | body
//! body     tuple id length u32 | tuple id bytes | label u32 | set digest [32]
//!          | per patch: frame, cell row, cell col, jitter y, jitter x (u16 each) | pixels
//! trailer  CRC-32 of every preceding byte, u32
//! ```
//!
//! Pixels are `u8` for `raw8` and `f32` for `norm32`, in `H×W×C` order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{Patch, PatchSource, Pixels};
use crate::puzzle::{PermDigest, PuzzleRecord};

pub const MAGIC: [u8; 4] = *b"VJZ1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 1 + 2 + 4 * 4 + 8;
const TRAILER_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelEncoding {
    Raw8 = 0,
    Norm32 = 1,
}

impl PixelEncoding {
    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(PixelEncoding::Raw8),
            1 => Ok(PixelEncoding::Norm32),
            other => Err(Error::Format(format!("unknown pixel encoding {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PixelEncoding::Raw8 => "raw8",
            PixelEncoding::Norm32 => "norm32",
        }
    }
}

impl std::str::FromStr for PixelEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw8" => Ok(PixelEncoding::Raw8),
            "norm32" => Ok(PixelEncoding::Norm32),
            other => Err(Error::invalid(format!("unknown pixel encoding {other:?}"))),
        }
    }
}

/// Pixel scalars with a fixed shard encoding.
pub trait ShardPixel: Copy + Sized {
    const ENCODING: PixelEncoding;
    const SIZE: usize;
    fn put(self, out: &mut Vec<u8>);
    fn take(bytes: &[u8]) -> Self;
}

impl ShardPixel for u8 {
    const ENCODING: PixelEncoding = PixelEncoding::Raw8;
    const SIZE: usize = 1;

    fn put(self, out: &mut Vec<u8>) {
        out.push(self);
    }

    fn take(bytes: &[u8]) -> Self {
        bytes[0]
    }
}

impl ShardPixel for f32 {
    const ENCODING: PixelEncoding = PixelEncoding::Norm32;
    const SIZE: usize = 4;

    fn put(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn take(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes[..4].try_into().unwrap())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardHeader {
    pub version: u32,
    pub encoding: PixelEncoding,
    pub height: u32,
    pub width: u32,
    pub channels: u32,
    pub patches_per_record: u32,
    pub record_count: u64,
}

/// Records read back from a shard, typed by the stored encoding.
#[derive(Debug, Clone, PartialEq)]
pub enum ShardData {
    Raw8(Vec<PuzzleRecord<u8>>),
    Norm32(Vec<PuzzleRecord<f32>>),
}

impl ShardData {
    pub fn len(&self) -> usize {
        match self {
            ShardData::Raw8(r) => r.len(),
            ShardData::Norm32(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Serializes records into shard bytes.
pub fn encode_shard<P: ShardPixel>(records: &[PuzzleRecord<P>]) -> Result<(ShardHeader, Vec<u8>)> {
    let first = records.first().ok_or_else(|| Error::invalid("cannot write an empty shard"))?;
    let first_patch = first.patches.first().ok_or_else(|| Error::invalid("record without patches"))?;
    let (h, w, c) = first_patch.pixels.dims();
    let per_record = first.patches.len();
    for rec in records {
        if rec.patches.len() != per_record || rec.patches.iter().any(|p| p.pixels.dims() != (h, w, c)) {
            return Err(Error::invalid(format!("record {} has heterogeneous patch dimensions", rec.tuple_id)));
        }
    }
    let header = ShardHeader {
        version: VERSION,
        encoding: P::ENCODING,
        height: h as u32,
        width: w as u32,
        channels: c as u32,
        patches_per_record: per_record as u32,
        record_count: records.len() as u64,
    };

    let mut out = Vec::with_capacity(HEADER_LEN + records.len() * (per_record * (10 + h * w * c * P::SIZE) + 64));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&header.version.to_le_bytes());
    out.push(header.encoding as u8);
    out.push(0);
    out.extend_from_slice(&0u16.to_le_bytes());
    for v in [header.height, header.width, header.channels, header.patches_per_record] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&header.record_count.to_le_bytes());

    let mut body = Vec::new();
    for rec in records {
        body.clear();
        body.extend_from_slice(&(rec.tuple_id.len() as u32).to_le_bytes());
        body.extend_from_slice(rec.tuple_id.as_bytes());
        body.extend_from_slice(&rec.label.to_le_bytes());
        body.extend_from_slice(&rec.perm_set_digest.0);
        for patch in &rec.patches {
            let s = patch.source;
            for v in [s.frame, s.cell_row, s.cell_col, s.jitter_y, s.jitter_x] {
                body.extend_from_slice(&v.to_le_bytes());
            }
            for &px in patch.pixels.data() {
                px.put(&mut body);
            }
        }
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(&body);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok((header, out))
}

pub fn write_shard<P: ShardPixel>(records: &[PuzzleRecord<P>], path: &Path) -> Result<ShardHeader> {
    let (header, bytes) = encode_shard(records)?;
    super::write_file(path, &bytes)?;
    Ok(header)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("unexpected end of data at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Validates magic, version and checksum, then parses the header.
pub fn decode_header(bytes: &[u8]) -> Result<ShardHeader> {
    if bytes.len() >= 4 && bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, not a puzzle shard".into()));
    }
    if bytes.len() >= 8 {
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::UnsupportedVersion { found: version, supported: VERSION });
        }
    }
    if bytes.len() < HEADER_LEN + TRAILER_LEN {
        return Err(Error::Checksum(format!("shard truncated to {} bytes", bytes.len())));
    }
    let (payload, trailer) = bytes.split_at(bytes.len() - TRAILER_LEN);
    let stored = u32::from_le_bytes(trailer.try_into().unwrap());
    let actual = crc32fast::hash(payload);
    if stored != actual {
        return Err(Error::Checksum(format!("stored {stored:08x}, computed {actual:08x}")));
    }
    let mut cur = Cursor { bytes: payload, pos: 8 };
    let encoding = PixelEncoding::from_byte(cur.take(1)?[0])?;
    if cur.take(1)?[0] != 0 {
        return Err(Error::Format("only little-endian shards are supported".into()));
    }
    cur.u16()?;
    Ok(ShardHeader {
        version: VERSION,
        encoding,
        height: cur.u32()?,
        width: cur.u32()?,
        channels: cur.u32()?,
        patches_per_record: cur.u32()?,
        record_count: cur.u64()?,
    })
}

fn decode_records<P: ShardPixel>(bytes: &[u8], header: &ShardHeader) -> Result<Vec<PuzzleRecord<P>>> {
    let (h, w, c) = (header.height as usize, header.width as usize, header.channels as usize);
    let pixel_count = h * w * c;
    let payload = &bytes[..bytes.len() - TRAILER_LEN];
    let mut cur = Cursor { bytes: payload, pos: HEADER_LEN };
    let mut records = Vec::with_capacity(header.record_count.min(1 << 16) as usize);
    for _ in 0..header.record_count {
        let len = cur.u64()? as usize;
        let mut body = Cursor { bytes: cur.take(len)?, pos: 0 };
        let id_len = body.u32()? as usize;
        let tuple_id = String::from_utf8(body.take(id_len)?.to_vec())
            .map_err(|_| Error::Format("tuple id is not UTF-8".into()))?;
        let label = body.u32()?;
        let digest = PermDigest(body.take(32)?.try_into().unwrap());
        let mut patches = Vec::with_capacity(header.patches_per_record as usize);
        for _ in 0..header.patches_per_record {
            let source = PatchSource {
                frame: body.u16()?,
                cell_row: body.u16()?,
                cell_col: body.u16()?,
                jitter_y: body.u16()?,
                jitter_x: body.u16()?,
            };
            let raw = body.take(pixel_count * P::SIZE)?;
            let data = raw.chunks_exact(P::SIZE).map(P::take).collect();
            patches.push(Patch { pixels: Pixels::new(h, w, c, data)?, source });
        }
        if body.pos != len {
            return Err(Error::Format(format!("record {tuple_id} has {} trailing bytes", len - body.pos)));
        }
        records.push(PuzzleRecord { tuple_id, patches, label, perm_set_digest: digest });
    }
    if cur.pos != payload.len() {
        return Err(Error::Format("data after the declared record count".into()));
    }
    Ok(records)
}

pub fn decode_shard(bytes: &[u8]) -> Result<(ShardHeader, ShardData)> {
    let header = decode_header(bytes)?;
    let data = match header.encoding {
        PixelEncoding::Raw8 => ShardData::Raw8(decode_records(bytes, &header)?),
        PixelEncoding::Norm32 => ShardData::Norm32(decode_records(bytes, &header)?),
    };
    Ok((header, data))
}

pub fn read_shard(path: &Path) -> Result<(ShardHeader, ShardData)> {
    decode_shard(&super::read_file(path)?)
}

/// Reads a shard whose encoding must match `P`.
pub fn read_shard_as<P: ShardPixel>(path: &Path) -> Result<Vec<PuzzleRecord<P>>> {
    let bytes = super::read_file(path)?;
    let header = decode_header(&bytes)?;
    if header.encoding != P::ENCODING {
        return Err(Error::Format(format!(
            "shard holds {} pixels, {} requested",
            header.encoding.as_str(),
            P::ENCODING.as_str()
        )));
    }
    decode_records(&bytes, &header)
}
