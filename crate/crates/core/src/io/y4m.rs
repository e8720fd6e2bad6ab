use std::path::Path;

use super::{dequantize_u8, frame_rgb8};
use crate::error::{Error, Result};
use crate::video::{Dims, Video};

const MAGIC: &[u8] = b"YUV4MPEG2";
const FRAME: &[u8] = b"FRAME";
/// Longest header or frame line accepted.
const MAX_LINE: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl Default for FrameRate {
    fn default() -> Self {
        FrameRate { num: 25, den: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct Y4mVideo {
    pub video: Video,
    pub rate: FrameRate,
}

// Full-range BT.601.
fn rgb_to_ycbcr(rgb: [u8; 3]) -> [u8; 3] {
    let [r, g, b] = rgb.map(|x| x as f64);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    [y, cb, cr].map(to_u8)
}

fn ycbcr_to_rgb(ycc: [u8; 3]) -> [u8; 3] {
    let y = ycc[0] as f64;
    let cb = ycc[1] as f64 - 128.0;
    let cr = ycc[2] as f64 - 128.0;
    [y + 1.402 * cr, y - 0.344_136 * cb - 0.714_136 * cr, y + 1.772 * cb].map(to_u8)
}

fn to_u8(x: f64) -> u8 {
    // the nudge keeps exact halves from rounding down after matrix error
    (x + 0.5 + 1e-9).floor().clamp(0.0, 255.0) as u8
}

fn line(bytes: &[u8], start: usize) -> Result<&[u8]> {
    let rest = &bytes[start..];
    match rest.iter().take(MAX_LINE).position(|&b| b == b'\n') {
        Some(n) => Ok(&rest[..n]),
        None => Err(Error::format(Some(start as u64), "unterminated header line")),
    }
}

fn parse_dim(tok: &[u8], at: usize, what: &str) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::format(Some(at as u64), format!("bad {what}")))
}

fn parse_rate(tok: &[u8], at: usize) -> Result<FrameRate> {
    let s = std::str::from_utf8(tok).map_err(|_| Error::format(Some(at as u64), "bad frame rate"))?;
    let (n, d) = s
        .split_once(':')
        .ok_or_else(|| Error::format(Some(at as u64), "frame rate must be N:D"))?;
    match (n.parse(), d.parse()) {
        (Ok(num), Ok(den)) if den > 0 => Ok(FrameRate { num, den }),
        _ => Err(Error::format(Some(at as u64), "bad frame rate")),
    }
}

/// Parse a y4m stream. Only 8-bit 4:4:4 (`C444`) is supported.
pub fn decode_y4m(bytes: &[u8]) -> Result<Y4mVideo> {
    if !bytes.starts_with(MAGIC) {
        return Err(Error::format(Some(0), "missing YUV4MPEG2 signature"));
    }
    let header = line(bytes, 0)?;
    let (mut w, mut h, mut rate, mut chroma) = (None, None, FrameRate::default(), None);
    let mut at = MAGIC.len();
    for tok in header[MAGIC.len()..].split(|&b| b == b' ') {
        let pos = at;
        at += tok.len() + 1;
        let Some((&tag, val)) = tok.split_first() else { continue };
        match tag {
            b'W' => w = Some(parse_dim(val, pos, "width")?),
            b'H' => h = Some(parse_dim(val, pos, "height")?),
            b'F' => rate = parse_rate(val, pos)?,
            b'C' => chroma = Some((val, pos)),
            b'I' | b'A' | b'X' => {}
            _ => return Err(Error::format(Some(pos as u64), format!("unknown header field {:?}", tag as char))),
        }
    }
    let (w, h) = match (w, h) {
        (Some(w), Some(h)) => (w, h),
        _ => return Err(Error::format(Some(0), "header lacks W or H")),
    };
    match chroma {
        Some((b"444", _)) => {}
        Some((c, pos)) => {
            return Err(Error::format(
                Some(pos as u64),
                format!("unsupported chroma C{}", String::from_utf8_lossy(c)),
            ))
        }
        None => return Err(Error::format(Some(0), "unsupported chroma (default 4:2:0)")),
    }
    let plane = w
        .checked_mul(h)
        .filter(|p| p.checked_mul(3).is_some())
        .ok_or_else(|| Error::format(Some(0), "frame size overflows"))?;

    let mut pos = header.len() + 1;
    let mut data = Vec::new();
    let mut frames = 0;
    while pos < bytes.len() {
        let marker = line(bytes, pos)?;
        if !marker.starts_with(FRAME) || !matches!(marker.get(FRAME.len()), None | Some(b' ')) {
            return Err(Error::format(Some(pos as u64), "expected FRAME marker"));
        }
        pos += marker.len() + 1;
        let body = bytes
            .get(pos..pos + 3 * plane)
            .ok_or_else(|| Error::format(Some(bytes.len() as u64), format!("truncated frame {}", frames + 1)))?;
        let (ys, rest) = body.split_at(plane);
        let (cbs, crs) = rest.split_at(plane);
        data.reserve(3 * plane);
        for i in 0..plane {
            let rgb = ycbcr_to_rgb([ys[i], cbs[i], crs[i]]);
            data.extend(rgb.map(dequantize_u8));
        }
        pos += 3 * plane;
        frames += 1;
    }
    if frames == 0 {
        return Err(Error::format(Some(pos as u64), "stream has no frames"));
    }
    Ok(Y4mVideo {
        video: Video::from_raw(Dims::new(frames, h, w), 3, data),
        rate,
    })
}

pub fn encode_y4m(v: &Video, rate: FrameRate) -> Result<Vec<u8>> {
    let plane = v.height() * v.width();
    let mut out = format!(
        "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C444\n",
        v.width(),
        v.height(),
        rate.num,
        rate.den
    )
    .into_bytes();
    out.reserve(v.frames() * (6 + 3 * plane));
    for t in 0..v.frames() {
        let rgb = frame_rgb8(v, t)?;
        let mut planes = vec![0u8; 3 * plane];
        for (i, px) in rgb.chunks_exact(3).enumerate() {
            let ycc = rgb_to_ycbcr([px[0], px[1], px[2]]);
            for (p, b) in ycc.into_iter().enumerate() {
                planes[p * plane + i] = b;
            }
        }
        out.extend_from_slice(b"FRAME\n");
        out.extend(planes);
    }
    Ok(out)
}

pub fn read_y4m(path: &Path) -> Result<Y4mVideo> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_y4m(&bytes).map_err(|e| e.with_path(path))
}

pub fn write_y4m(path: &Path, v: &Video, rate: FrameRate) -> Result<()> {
    std::fs::write(path, encode_y4m(v, rate)?).map_err(|e| Error::io(path, e))
}
