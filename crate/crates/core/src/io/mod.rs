//! 8-bit video files: y4m streams (4:4:4) and directories of P6 PPM frames.
//!
//! Samples map to `[0, 1]` as `v / 255` on read and as
//! `round_half_up(v * 255)`, clamped, on write.

mod ppm;
mod y4m;

pub use ppm::{decode_ppm, encode_ppm, frame_name, read_ppm_dir, write_ppm_dir};
pub use y4m::{decode_y4m, encode_y4m, read_y4m, write_y4m, FrameRate, Y4mVideo};

use std::path::Path;

use crate::error::{Error, Result};
use crate::video::Video;

/// 8-bit code of a `[0, 1]` sample.
pub fn quantize_u8(x: f32) -> u8 {
    (x as f64 * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn dequantize_u8(b: u8) -> f32 {
    b as f32 / 255.0
}

/// Interleaved 8-bit RGB for frame `t`. One-channel videos are written as
/// gray.
pub(crate) fn frame_rgb8(v: &Video, t: usize) -> Result<Vec<u8>> {
    let frame = v.frame(t);
    match v.channels() {
        3 => Ok(frame.iter().map(|&x| quantize_u8(x)).collect()),
        1 => Ok(frame
            .iter()
            .flat_map(|&x| {
                let q = quantize_u8(x);
                [q, q, q]
            })
            .collect()),
        c => Err(Error::invalid(format!("cannot write a {c}-channel video"))),
    }
}

/// Read a y4m file or a PPM frame directory, chosen by whether `path` is a
/// directory.
pub fn read_video(path: &Path) -> Result<Video> {
    if path.is_dir() {
        read_ppm_dir(path)
    } else {
        Ok(read_y4m(path)?.video)
    }
}

/// Write a `.y4m` file, or a PPM frame directory for any other path.
pub fn write_video(v: &Video, path: &Path) -> Result<()> {
    if is_y4m(path) {
        write_y4m(path, v, FrameRate::default())
    } else {
        write_ppm_dir(path, v)
    }
}

pub fn is_y4m(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m"))
}
