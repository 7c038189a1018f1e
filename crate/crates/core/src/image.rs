use std::io::{Read, Write};

use crate::error::{OpticsError, Result};
use crate::field::IntensityMap;

/// 8-bit grey image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image8 {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image8 {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(OpticsError::validation(format!(
                "{width}x{height} image cannot hold {} pixels",
                pixels.len()
            )));
        }
        Ok(Image8 {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Area-average a square image down (or up) to `out x out`, returning
    /// values in [0, 1].
    pub fn resize_area(&self, out: usize) -> Result<Vec<f64>> {
        if self.width != self.height {
            return Err(OpticsError::validation("area resize needs a square image"));
        }
        let n = self.width;
        let src: Vec<f64> = self.pixels.iter().map(|&p| p as f64 / 255.0).collect();
        let w = area_weights(n, 0.0, n as f64, out);
        Ok(resample_separable(&src, n, &w))
    }

    /// Binary PGM (`P5`, maxval 255).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn read_pgm<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let mut pos = 0;
        let mut header = [0usize; 3];
        if buf.get(..2) != Some(b"P5") {
            return Err(OpticsError::Format("not a binary PGM (missing P5 magic)".into()));
        }
        pos += 2;
        for slot in header.iter_mut() {
            *slot = next_header_number(&buf, &mut pos)?;
        }
        // exactly one whitespace byte separates maxval from the raster
        pos += 1;
        let [width, height, maxval] = header;
        if maxval != 255 {
            return Err(OpticsError::Format(format!("unsupported PGM maxval {maxval}")));
        }
        let raster = buf
            .get(pos..pos + width * height)
            .ok_or_else(|| OpticsError::Format("truncated PGM raster".into()))?;
        Image8::new(width, height, raster.to_vec())
    }
}

fn next_header_number(buf: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match buf.get(*pos) {
            Some(b'#') => {
                while !matches!(buf.get(*pos), Some(b'\n') | None) {
                    *pos += 1;
                }
            }
            Some(c) if c.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(OpticsError::Format("truncated PGM header".into())),
        }
    }
    let start = *pos;
    while buf.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&buf[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| OpticsError::Format("malformed PGM header".into()))
}

/// For each output cell, the input cells it overlaps and their area fraction.
///
/// Coordinates are in input-pixel units: input cell `i` spans `[i, i + 1)`,
/// the window spans `[start, start + width)`.
pub(crate) fn area_weights(n_in: usize, start: f64, width: f64, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let q = width / n_out as f64;
    (0..n_out)
        .map(|j| {
            let lo = start + j as f64 * q;
            let hi = lo + q;
            let first = lo.floor().max(0.0) as usize;
            let last = (hi.ceil() as usize).min(n_in);
            (first..last)
                .filter_map(|i| {
                    let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                    (overlap > 0.0).then_some((i, overlap / q))
                })
                .collect()
        })
        .collect()
}

pub(crate) fn resample_separable(src: &[f64], n_in: usize, w: &[Vec<(usize, f64)>]) -> Vec<f64> {
    let n_out = w.len();
    // x pass on every input row, then y pass
    let mut tmp = vec![0.0; n_in * n_out];
    for iy in 0..n_in {
        let row = &src[iy * n_in..(iy + 1) * n_in];
        for (jx, wx) in w.iter().enumerate() {
            tmp[iy * n_out + jx] = wx.iter().map(|&(i, a)| a * row[i]).sum();
        }
    }
    let mut out = vec![0.0; n_out * n_out];
    for (jy, wy) in w.iter().enumerate() {
        for &(iy, a) in wy {
            let trow = &tmp[iy * n_out..(iy + 1) * n_out];
            for (o, t) in out[jy * n_out..(jy + 1) * n_out].iter_mut().zip(trow) {
                *o += a * t;
            }
        }
    }
    out
}

/// Render an intensity map as a CCD-like frame.
///
/// Takes the central `crop_extent x crop_extent` window (aligned to the grid's
/// cell boundaries, so a full-extent crop at the native size is the identity
/// resampling), area-averages it onto `out_size x out_size` pixels and min-max
/// stretches the result to 0..=255. A map whose resampled values are all equal
/// (to 1e-12 relative) renders as all-zero pixels.
pub fn render_image(map: &IntensityMap, out_size: usize, crop_extent: f64) -> Result<Image8> {
    let grid = map.grid();
    if out_size < 8 {
        return Err(OpticsError::validation(format!(
            "rendered image must be at least 8 px wide, got {out_size}"
        )));
    }
    if !(crop_extent > 0.0 && crop_extent <= grid.extent() * (1.0 + 1e-12)) {
        return Err(OpticsError::validation(format!(
            "crop of {crop_extent} m does not fit the {} m grid",
            grid.extent()
        )));
    }
    let n = grid.n();
    let width_px = (crop_extent / grid.pitch()).min(n as f64);
    let start = (n as f64 - width_px) / 2.0;
    let w = area_weights(n, start, width_px, out_size);
    let resampled = resample_separable(map.values(), n, &w);
    Ok(Image8 {
        width: out_size,
        height: out_size,
        pixels: normalize_to_u8(&resampled),
    })
}

fn normalize_to_u8(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if span.is_nan() || span <= 1e-12 * hi.abs().max(lo.abs()) {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}
