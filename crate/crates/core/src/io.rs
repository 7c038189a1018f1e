//! Little-endian binary container for fields, intensity maps and phase
//! screens.
//!
//! Header, 32 bytes: `"OAMF"`, version `u32`, `n` `u32`, payload kind `u32`,
//! extent `f64`, wavelength `f64` (0 when not applicable). Row-major `f64`
//! payload follows: `(re, im)` pairs for fields, single values otherwise.
//! Screens append `u32` 1 plus a parameter block, or `u32` 0.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{OpticsError, Result};
use crate::field::{ComplexField, IntensityMap};
use crate::grid::GridSpec;
use crate::turbulence::{PhaseScreen, TurbulenceParams};

pub const MAGIC: &[u8; 4] = b"OAMF";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum PayloadKind {
    Field = 0,
    Intensity = 1,
    Screen = 2,
}

impl PayloadKind {
    fn from_u32(v: u32) -> Result<Self> {
        match v {
            0 => Ok(PayloadKind::Field),
            1 => Ok(PayloadKind::Intensity),
            2 => Ok(PayloadKind::Screen),
            _ => Err(OpticsError::Format(format!("unknown payload kind {v}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub kind: PayloadKind,
    pub grid: GridSpec,
    pub wavelength: f64,
}

fn write_header<W: Write>(w: &mut W, h: &Header) -> Result<()> {
    let n = u32::try_from(h.grid.n()).map_err(|_| OpticsError::Format("grid too large".into()))?;
    let mut buf = Vec::with_capacity(32);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&(h.kind as u32).to_le_bytes());
    buf.extend_from_slice(&h.grid.extent().to_le_bytes());
    buf.extend_from_slice(&h.wavelength.to_le_bytes());
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

/// Decode and check the 32-byte header.
pub fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(OpticsError::Format("missing OAMF magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(OpticsError::Format(format!("unsupported container version {version}")));
    }
    let n = read_u32(r)? as usize;
    let kind = PayloadKind::from_u32(read_u32(r)?)?;
    let extent = read_f64(r)?;
    let wavelength = read_f64(r)?;
    let grid = GridSpec::new(n, extent).map_err(|e| OpticsError::Format(e.to_string()))?;
    Ok(Header { kind, grid, wavelength })
}

fn expect_kind(h: &Header, kind: PayloadKind) -> Result<()> {
    if h.kind == kind {
        Ok(())
    } else {
        Err(OpticsError::Format(format!("expected {kind:?} payload, found {:?}", h.kind)))
    }
}

fn write_f64s<W: Write>(w: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut buf = Vec::new();
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn write_field<W: Write>(mut w: W, field: &ComplexField) -> Result<()> {
    write_header(
        &mut w,
        &Header {
            kind: PayloadKind::Field,
            grid: *field.grid(),
            wavelength: field.wavelength(),
        },
    )?;
    write_f64s(&mut w, field.values().iter().flat_map(|c| [c.re, c.im]))
}

pub fn read_field<R: Read>(mut r: R) -> Result<ComplexField> {
    let h = read_header(&mut r)?;
    expect_kind(&h, PayloadKind::Field)?;
    let raw = read_f64s(&mut r, 2 * h.grid.len())?;
    let values = raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    ComplexField::new(h.grid, h.wavelength, values)
}

pub fn write_intensity<W: Write>(mut w: W, map: &IntensityMap) -> Result<()> {
    write_header(
        &mut w,
        &Header {
            kind: PayloadKind::Intensity,
            grid: *map.grid(),
            wavelength: 0.0,
        },
    )?;
    write_f64s(&mut w, map.values().iter().copied())
}

pub fn read_intensity<R: Read>(mut r: R) -> Result<IntensityMap> {
    let h = read_header(&mut r)?;
    expect_kind(&h, PayloadKind::Intensity)?;
    IntensityMap::new(h.grid, read_f64s(&mut r, h.grid.len())?)
}

/// `wavelength` is recorded in the header (0 if unknown).
pub fn write_screen<W: Write>(mut w: W, screen: &PhaseScreen, wavelength: f64) -> Result<()> {
    write_header(
        &mut w,
        &Header {
            kind: PayloadKind::Screen,
            grid: *screen.grid(),
            wavelength,
        },
    )?;
    write_f64s(&mut w, screen.values().iter().copied())?;
    match (screen.params(), screen.r0()) {
        (Some(p), Some(r0)) => {
            w.write_all(&1u32.to_le_bytes())?;
            write_f64s(&mut w, [p.cn2, p.z, p.kappa0, p.kappam].into_iter())?;
            w.write_all(&p.seed.to_le_bytes())?;
            w.write_all(&p.subharmonics.to_le_bytes())?;
            write_f64s(&mut w, std::iter::once(r0))?;
        }
        _ => w.write_all(&0u32.to_le_bytes())?,
    }
    Ok(())
}

pub fn read_screen<R: Read>(mut r: R) -> Result<PhaseScreen> {
    let h = read_header(&mut r)?;
    expect_kind(&h, PayloadKind::Screen)?;
    let screen = PhaseScreen::from_values(h.grid, read_f64s(&mut r, h.grid.len())?)?;
    match read_u32(&mut r)? {
        0 => Ok(screen),
        1 => {
            let v = read_f64s(&mut r, 4)?;
            let seed = read_u64(&mut r)?;
            let subharmonics = read_u32(&mut r)?;
            let r0 = read_f64(&mut r)?;
            let params = TurbulenceParams {
                cn2: v[0],
                z: v[1],
                kappa0: v[2],
                kappam: v[3],
                seed,
                subharmonics,
            };
            params.validate().map_err(|e| OpticsError::Format(e.to_string()))?;
            Ok(screen.with_params(params, r0))
        }
        f => Err(OpticsError::Format(format!("bad screen parameter flag {f}"))),
    }
}
