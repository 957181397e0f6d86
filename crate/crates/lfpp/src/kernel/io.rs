//! Kernel tabulation export: CSV (r, K(r)) and the LFPK binary format.
//!
//! LFPK layout: magic "LFPK", u32 version, u32 d, f64 epsilon, u64 n,
//! then n little-endian (f64, f64) pairs.

use super::{KernelError, RadialKernel};
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"LFPK";
const VERSION: u32 = 1;

pub fn write_kernel_binary<W: Write>(kernel: &RadialKernel, w: &mut W) -> Result<(), KernelError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&kernel.dimension_d.to_le_bytes())?;
    w.write_all(&kernel.epsilon.to_le_bytes())?;
    w.write_all(&(kernel.radius_grid.len() as u64).to_le_bytes())?;
    for (&r, &v) in kernel.radius_grid.iter().zip(&kernel.values) {
        w.write_all(&r.to_le_bytes())?;
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads back (d, epsilon, pairs). Exists for the CLI cache and round-trip
/// checks; a full RadialKernel is only rebuilt from a bump.
pub fn read_kernel_binary<R: Read>(
    r: &mut R,
) -> Result<(u32, f64, Vec<(f64, f64)>), KernelError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(KernelError::Format("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(KernelError::Format(format!("unsupported version {version}")));
    }
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4);
    r.read_exact(&mut b8)?;
    let epsilon = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        let rad = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let val = f64::from_le_bytes(b8);
        pairs.push((rad, val));
    }
    Ok((d, epsilon, pairs))
}

pub fn write_kernel_csv<W: Write>(kernel: &RadialKernel, w: &mut W) -> Result<(), KernelError> {
    writeln!(w, "r,K(r)")?;
    for (&r, &v) in kernel.radius_grid.iter().zip(&kernel.values) {
        writeln!(w, "{r:.17e},{v:.17e}")?;
    }
    Ok(())
}
