//! Field dump format. LFPF layout: magic "LFPF", u32 version, u32 d,
//! u32 n_per_axis, f64 spacing, f64 epsilon, u8 sampler_id, u64 seed,
//! then n^d little-endian f64 values in row-major order.

use super::{FieldError, FieldSample, GridSpec, SamplerKind};
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"LFPF";
const VERSION: u32 = 1;

pub fn write_field_binary<W: Write>(field: &FieldSample, w: &mut W) -> Result<(), FieldError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&field.grid.dimension_d.to_le_bytes())?;
    w.write_all(&(field.grid.n_per_axis as u32).to_le_bytes())?;
    w.write_all(&field.grid.spacing.to_le_bytes())?;
    w.write_all(&field.epsilon.to_le_bytes())?;
    w.write_all(&[field.sampler.id()])?;
    w.write_all(&field.seed.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_binary<R: Read>(r: &mut R) -> Result<FieldSample, FieldError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(FieldError::Format("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(FieldError::Format("unsupported version".into()));
    }
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let spacing = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let epsilon = f64::from_le_bytes(b8);
    r.read_exact(&mut b1)?;
    let sampler = SamplerKind::from_id(b1[0])
        .ok_or_else(|| FieldError::Format(format!("unknown sampler id {}", b1[0])))?;
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    let grid = GridSpec::new(d, n, spacing)?;
    let mut values = Vec::with_capacity(grid.total_sites());
    for _ in 0..grid.total_sites() {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok(FieldSample {
        grid,
        values,
        epsilon,
        anchor: None,
        sampler,
        seed,
    })
}

/// CSV of a sphere-average trace (columns: r, h_r).
pub fn write_sphere_trace_csv<W: Write>(
    trace: &[(f64, f64)],
    w: &mut W,
) -> Result<(), FieldError> {
    writeln!(w, "r,h_r")?;
    for (r, h) in trace {
        writeln!(w, "{r:.17e},{h:.17e}")?;
    }
    Ok(())
}
