//! Middlebury `.flo` files: `PIEH`, little-endian `u32` width and height,
//! then `height * width` interleaved `(u, v)` `f32` pairs in row-major order.

use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PIEH";

/// One dense flow field.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    /// `(u, v)` per pixel, row-major.
    pub uv: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn magnitudes(&self) -> impl Iterator<Item = f32> + '_ {
        self.uv.iter().map(|[u, v]| u.hypot(*v))
    }
}

/// Parse a `.flo` byte stream.
pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < 12 {
        return Err(Error::format(Some(bytes.len() as u64), "truncated .flo header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(Some(0), "bad .flo magic, expected PIEH"));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (width, height) = (word(4), word(8));
    if width == 0 || height == 0 {
        return Err(Error::format(Some(4), format!("degenerate .flo size {width}x{height}")));
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::format(Some(4), "flo dimensions overflow"))?;
    let body = &bytes[12..];
    if body.len() < need {
        return Err(Error::format(
            Some(bytes.len() as u64),
            format!("truncated .flo payload: {} of {need} bytes", body.len()),
        ));
    }
    let mut uv = Vec::with_capacity(width * height);
    for (i, px) in body[..need].chunks_exact(8).enumerate() {
        let u = f32::from_le_bytes(px[..4].try_into().unwrap());
        let v = f32::from_le_bytes(px[4..].try_into().unwrap());
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::format(Some(12 + 8 * i as u64), "non-finite flow vector"));
        }
        uv.push([u, v]);
    }
    Ok(FlowField { width, height, uv })
}

pub fn encode_flo(f: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * f.uv.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(f.width as u32).to_le_bytes());
    out.extend_from_slice(&(f.height as u32).to_le_bytes());
    for [u, v] in &f.uv {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes).map_err(|e| e.with_path(path))
}

pub fn write_flo(path: &Path, f: &FlowField) -> Result<()> {
    if f.uv.len() != f.width * f.height {
        return Err(Error::invalid("flow vector count does not match its size"));
    }
    std::fs::write(path, encode_flo(f)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(w: usize, h: usize, uv: [f32; 2]) -> FlowField {
        FlowField {
            width: w,
            height: h,
            uv: vec![uv; w * h],
        }
    }

    #[test]
    fn zero_and_pythagorean() {
        let z = decode_flo(&encode_flo(&field(3, 2, [0.0, 0.0]))).unwrap();
        assert!(z.magnitudes().all(|m| m == 0.0));
        let f = decode_flo(&encode_flo(&field(4, 3, [3.0, 4.0]))).unwrap();
        assert!(f.magnitudes().all(|m| m == 5.0));
    }

    #[test]
    fn header_layout() {
        let b = encode_flo(&field(2, 1, [1.0, -1.0]));
        assert_eq!(&b[..4], b"PIEH");
        assert_eq!(&b[4..8], &2u32.to_le_bytes());
        assert_eq!(&b[8..12], &1u32.to_le_bytes());
        assert_eq!(b.len(), 12 + 16);
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode_flo(b"PIE").is_err());
        let mut b = encode_flo(&field(2, 2, [1.0, 1.0]));
        b[0] = b'X';
        assert!(matches!(decode_flo(&b), Err(Error::Format { offset: Some(0), .. })));
        let b = encode_flo(&field(2, 2, [1.0, 1.0]));
        assert!(decode_flo(&b[..b.len() - 1]).is_err());
    }
}
