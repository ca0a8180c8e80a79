//! Snapshot export.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes  "SPDESNAP"
//! version  u32      1
//! band     u32      n
//! dt       f64
//! stride   u64      grid steps between frames
//! frames   u64      number of frames F
//! seed     u64
//! hit      i64      hit grid index, -1 if none
//! F × { time f64, (2n+1)² × [re_x, im_x, re_y, im_y] f64 }
//! ```
//!
//! Coefficients are stored row by row in `ky = -n..=n`, `kx = -n..=n` order.

use std::io::{Read, Write};

use rustfft::num_complex::Complex64;

use super::PathRecord;
use crate::spaces::SpectralField;
use crate::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"SPDESNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub band: usize,
    pub dt: f64,
    pub stride: u64,
    pub seed: u64,
    pub hit_index: Option<u64>,
    pub frames: Vec<(f64, SpectralField)>,
}

pub fn write_snapshots<W: Write>(record: &PathRecord, mut w: W) -> Result<()> {
    let n = record.level();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&record.dt().to_le_bytes())?;
    w.write_all(&(record.snapshot_stride() as u64).to_le_bytes())?;
    w.write_all(&(record.snapshots.len() as u64).to_le_bytes())?;
    w.write_all(&record.seed.to_le_bytes())?;
    w.write_all(&record.hit_index().map_or(-1i64, |j| j as i64).to_le_bytes())?;
    let mut buf = Vec::with_capacity((2 * n + 1).pow(2) * 32 + 8);
    for (f, s) in record.snapshots.iter().enumerate() {
        buf.clear();
        buf.extend_from_slice(&record.time(f * record.snapshot_stride()).to_le_bytes());
        let s = s.with_band(n);
        for c in s.raw() {
            for z in c {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshots<R: Read>(mut r: R) -> Result<SnapshotFile> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let band = u32::from_le_bytes(take(&mut r)?) as usize;
    let dt = f64::from_le_bytes(take(&mut r)?);
    let stride = u64::from_le_bytes(take(&mut r)?);
    let count = u64::from_le_bytes(take(&mut r)?);
    let seed = u64::from_le_bytes(take(&mut r)?);
    let hit = i64::from_le_bytes(take(&mut r)?);
    if band > 4096 || count > (1 << 32) {
        return Err(Error::Snapshot("implausible header".into()));
    }
    let mut frames = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let t = f64::from_le_bytes(take(&mut r)?);
        let mut f = SpectralField::zeros(band);
        for c in f.raw_mut() {
            for z in c.iter_mut() {
                let re = f64::from_le_bytes(take(&mut r)?);
                let im = f64::from_le_bytes(take(&mut r)?);
                *z = Complex64::new(re, im);
            }
        }
        frames.push((t, f));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes".into()));
    }
    Ok(SnapshotFile { band, dt, stride, seed, hit_index: (hit >= 0).then_some(hit as u64), frames })
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Snapshot("truncated file".into()),
        _ => Error::Io(e),
    })
}

fn take<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    read_exact(r, &mut b)?;
    Ok(b)
}

/// Norm series as CSV: `t,normU,normH,normV,uh,hv,hit`.
///
/// `uh` and `hv` are the stopped functionals; `hit` is 1 from the hit onwards.
pub fn write_norm_csv<W: Write>(record: &PathRecord, mut w: W) -> Result<()> {
    writeln!(w, "t,normU,normH,normV,uh,hv,hit")?;
    let u = record.norms.squared(crate::Space::U);
    let h = record.norms.squared(crate::Space::H);
    let v = record.norms.squared(crate::Space::V);
    let uh = record.uh_stopped_series();
    let hv = record.hv_stopped_series();
    let hit = record.hit_index();
    for j in 0..u.len() {
        let flag = u8::from(hit.is_some_and(|h| j >= h));
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            record.time(j),
            u[j].sqrt(),
            h[j].sqrt(),
            v[j].sqrt(),
            uh[j],
            hv[j],
            flag
        )?;
    }
    w.flush()?;
    Ok(())
}
