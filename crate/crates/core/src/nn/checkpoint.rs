//! Binary checkpoint layout (all integers u32 little-endian):
//!
//! ```text
//! "MSCE" | version | arch (0 srcnn, 1 espcn) | scale | n_records
//! n_records × { name_len | name (utf-8) | ndim | dims… | f32 LE values }
//! crc32 (IEEE) of every preceding byte
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Architecture, Conv2d, Model};
use crate::resample::Scale;
use crate::{CheckpointError, Error, Result, Tensor};

pub const MAGIC: &[u8; 4] = b"MSCE";
pub const VERSION: u32 = 1;

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn encode(model: &Model<f32>) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, VERSION);
    put_u32(&mut buf, model.arch().tag());
    put_u32(&mut buf, model.scale().get() as u32);
    put_u32(&mut buf, (model.layers().len() * 2) as u32);
    for layer in model.layers() {
        for (suffix, t) in [("weight", &layer.conv.weight), ("bias", &layer.conv.bias)] {
            let name = format!("{}.{}", layer.name, suffix);
            put_u32(&mut buf, name.len() as u32);
            buf.extend_from_slice(name.as_bytes());
            put_u32(&mut buf, t.shape().len() as u32);
            for &d in t.shape() {
                put_u32(&mut buf, d as u32);
            }
            for v in t.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let crc = crc32fast::hash(&buf);
    put_u32(&mut buf, crc);
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| CheckpointError::BadShape(String::from("record runs past end of file")))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Model<f32>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    if bytes.len() < 8 {
        return Err(CheckpointError::CrcMismatch { stored: 0, computed: crc32fast::hash(&bytes[..bytes.len().min(4)]) }.into());
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes([tail[0], tail[1], tail[2], tail[3]]);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CheckpointError::CrcMismatch { stored, computed }.into());
    }

    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version).into());
    }
    let tag = r.u32()?;
    let arch = Architecture::from_tag(tag).ok_or_else(|| CheckpointError::BadShape(format!("unknown architecture tag {tag}")))?;
    let scale_raw = r.u32()? as usize;
    let scale = Scale::new(scale_raw).map_err(|_| CheckpointError::BadShape(format!("unsupported scale {scale_raw}")))?;
    let count = r.u32()? as usize;
    if count != 6 {
        return Err(CheckpointError::BadShape(format!("expected 6 parameter records, found {count}")).into());
    }

    let mut tensors = Vec::with_capacity(count);
    for i in 0..count {
        let expected = format!("conv{}.{}", i / 2 + 1, if i % 2 == 0 { "weight" } else { "bias" });
        let len = r.u32()? as usize;
        let name = core::str::from_utf8(r.take(len)?).map_err(|_| CheckpointError::BadShape(String::from("record name is not utf-8")))?;
        if name != expected {
            return Err(CheckpointError::BadShape(format!("expected record `{expected}`, found `{name}`")).into());
        }
        let ndim = r.u32()? as usize;
        if ndim != if i % 2 == 0 { 4 } else { 1 } {
            return Err(CheckpointError::BadShape(format!("`{name}` has {ndim} dimensions")).into());
        }
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let n = n.ok_or_else(|| CheckpointError::BadShape(format!("`{name}` shape overflows")))?;
        let raw = r.take(n.checked_mul(4).ok_or_else(|| CheckpointError::BadShape(format!("`{name}` too large")))?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        tensors.push(Tensor::new(&shape, data).map_err(|e| CheckpointError::BadShape(format!("`{name}`: {e}")))?);
    }
    if r.pos != body.len() {
        return Err(CheckpointError::BadShape(format!("{} trailing bytes", body.len() - r.pos)).into());
    }

    let mut convs = Vec::with_capacity(3);
    let mut it = tensors.into_iter();
    while let (Some(w), Some(b)) = (it.next(), it.next()) {
        convs.push(Conv2d::from_parts(w, b).map_err(|e| CheckpointError::BadShape(format!("{e}")))?);
    }
    Model::from_convs(arch, scale, convs).map_err(|e| match e {
        Error::Checkpoint(c) => c.into(),
        other => CheckpointError::BadShape(format!("{other}")).into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelSpec;

    fn sample() -> Model<f32> {
        Model::new(&ModelSpec::small(Architecture::Espcn, Scale::new(3).unwrap()), 9)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = sample();
        let bytes = encode(&m);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[..4], b"MSCE");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &3u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &6u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &12u32.to_le_bytes());
        assert_eq!(&bytes[24..36], b"conv1.weight");
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode(&sample());
        let mut flipped = bytes.clone();
        flipped[40] ^= 0x10;
        assert!(matches!(decode(&flipped), Err(Error::Checkpoint(CheckpointError::CrcMismatch { .. }))));

        let truncated = &bytes[..bytes.len() - 7];
        assert!(matches!(decode(truncated), Err(Error::Checkpoint(CheckpointError::CrcMismatch { .. }))));

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(decode(&magic), Err(Error::Checkpoint(CheckpointError::BadMagic))));
    }

    #[test]
    fn version_checked_after_crc() {
        let mut bytes = encode(&sample());
        bytes.truncate(bytes.len() - 4);
        bytes[4] = 2;
        let crc = crc32fast::hash(&bytes);
        bytes.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(Error::Checkpoint(CheckpointError::UnsupportedVersion(2)))));
    }
}
