use std::path::Path;

use super::{dequantize_u8, frame_rgb8};
use crate::error::{Error, Result};
use crate::video::{Dims, Video};

const PREFIX: &str = "frame_";

/// `frame_0001.ppm` for index 1.
pub fn frame_name(index: usize) -> String {
    format!("{PREFIX}{index:04}.ppm")
}

/// Parse one binary PPM image into a one-frame video.
pub fn decode_ppm(bytes: &[u8]) -> Result<Video> {
    let mut p = HeaderCursor { bytes, pos: 0 };
    if bytes.get(..2) != Some(b"P6") {
        return Err(Error::format(Some(0), "missing P6 magic"));
    }
    p.pos = 2;
    let width = p.number("width")?;
    let height = p.number("height")?;
    let maxval = p.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(Some(p.pos as u64), format!("maxval {maxval} unsupported (need 255)")));
    }
    if width == 0 || height == 0 {
        return Err(Error::format(Some(p.pos as u64), "zero image size"));
    }
    match bytes.get(p.pos) {
        Some(b) if b.is_ascii_whitespace() => p.pos += 1,
        _ => return Err(Error::format(Some(p.pos as u64), "expected whitespace after maxval")),
    }
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::format(Some(p.pos as u64), "image size overflows"))?;
    let body = &bytes[p.pos..];
    if body.len() < need {
        return Err(Error::format(
            Some(bytes.len() as u64),
            format!("truncated pixel data: {} of {need} bytes", body.len()),
        ));
    }
    let data = body[..need].iter().map(|&b| dequantize_u8(b)).collect();
    Ok(Video::from_raw(Dims::new(1, height, width), 3, data))
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let before = self.pos;
        self.skip_space();
        if self.pos == before {
            return Err(Error::format(Some(self.pos as u64), format!("expected whitespace before {what}")));
        }
        let start = self.pos;
        let mut n: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos).filter(|b| b.is_ascii_digit()) {
            n = n
                .checked_mul(10)
                .and_then(|n| n.checked_add((b - b'0') as usize))
                .ok_or_else(|| Error::format(Some(start as u64), format!("{what} too large")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::format(Some(start as u64), format!("expected {what}")));
        }
        Ok(n)
    }
}

pub fn encode_ppm(v: &Video, t: usize) -> Result<Vec<u8>> {
    let mut out = format!("P6\n{} {}\n255\n", v.width(), v.height()).into_bytes();
    out.extend(frame_rgb8(v, t)?);
    Ok(out)
}

fn frame_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix(PREFIX)?.strip_suffix(".ppm")?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Read `frame_0001.ppm`, `frame_0002.ppm`, ... from `dir`. Numbering must
/// start at 1 with no gaps, and all frames must share one size.
pub fn read_ppm_dir(dir: &Path) -> Result<Video> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut frames = Vec::new();
    for e in entries {
        let e = e.map_err(|e| Error::io(dir, e))?;
        if let Some(i) = e.file_name().to_str().and_then(frame_index) {
            frames.push((i, e.path()));
        }
    }
    frames.sort();
    if frames.is_empty() {
        return Err(Error::Format {
            path: Some(dir.into()),
            offset: None,
            message: format!("no {PREFIX}NNNN.ppm frames"),
        });
    }
    for (expect, (i, path)) in (1..).zip(&frames) {
        if *i != expect {
            let message = if *i < expect {
                format!("frame number {i} appears twice")
            } else {
                format!("missing frame {} (next present is {})", frame_name(expect), path.display())
            };
            return Err(Error::Format {
                path: Some(dir.into()),
                offset: None,
                message,
            });
        }
    }
    let mut data = Vec::new();
    let mut size: Option<Dims> = None;
    for (_, path) in &frames {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let f = decode_ppm(&bytes).map_err(|e| e.with_path(path))?;
        match size {
            None => size = Some(f.dims()),
            Some(s) if s != f.dims() => {
                return Err(Error::Format {
                    path: Some(path.clone()),
                    offset: None,
                    message: format!(
                        "frame is {}x{} but earlier frames are {}x{}",
                        f.width(),
                        f.height(),
                        s.w,
                        s.h
                    ),
                })
            }
            Some(_) => {}
        }
        data.extend(f.into_data());
    }
    let s = size.expect("at least one frame");
    Ok(Video::from_raw(Dims::new(frames.len(), s.h, s.w), 3, data))
}

/// Write every frame of `v` into `dir`, creating it if needed.
pub fn write_ppm_dir(dir: &Path, v: &Video) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in 0..v.frames() {
        let path = dir.join(frame_name(t + 1));
        std::fs::write(&path, encode_ppm(v, t)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let mut b = b"P6 # made by hand\n2\t1\n# depth\n255\n".to_vec();
        b.extend([0, 128, 255, 255, 0, 0]);
        let v = decode_ppm(&b).unwrap();
        assert_eq!(v.dims(), Dims::new(1, 1, 2));
        assert_eq!(v.get(0, 0, 0, 2), 1.0);
        assert_eq!(v.get(0, 0, 1, 0), 1.0);
    }

    #[test]
    fn rejects_bad_headers() {
        for bad in [&b"P3\n1 1\n255\n"[..], b"P6\n1 1\n65535\n\0\0\0\0\0\0", b"P6\n1 1\n255\n\0", b"P6\n0 1\n255\n", b"P6"] {
            assert!(matches!(decode_ppm(bad), Err(Error::Format { .. })));
        }
    }

    #[test]
    fn frame_names() {
        assert_eq!(frame_name(1), "frame_0001.ppm");
        assert_eq!(frame_index("frame_0012.ppm"), Some(12));
        assert_eq!(frame_index("frame_12345.ppm"), Some(12345));
        assert_eq!(frame_index("frame_.ppm"), None);
        assert_eq!(frame_index("frame_+1.ppm"), None);
    }
}
