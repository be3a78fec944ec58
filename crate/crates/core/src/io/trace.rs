//! Binary trace files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `TBTR` |
//! | 2     | format version (`u16`) |
//! | 8     | sample period in femtoseconds (`u64`) |
//! | 8     | sample count (`u64`) |
//! | 1     | mode code: 0 probe, 1 conjugate, 2 shot noise |
//! | 1     | quadrature code: 0 X, 1 Y |
//! | 8     | seed tag (`u64`) |
//! | 8·n   | samples, IEEE-754 `f64` |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{Quadrature, QuadratureTrace, TraceMode};

pub const MAGIC: &[u8; 4] = b"TBTR";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

const FS_PER_S: f64 = 1e15;

pub fn encode_trace(trace: &QuadratureTrace) -> Result<Vec<u8>> {
    let fs = trace.sample_period_s * FS_PER_S;
    if !(fs.is_finite() && fs >= 1.0 && fs < u64::MAX as f64) || (fs - fs.round()).abs() > 1e-3 {
        return Err(Error::invalid(
            "sample_period",
            format!("{} s is not a whole number of femtoseconds", trace.sample_period_s),
        ));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * trace.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(fs.round() as u64).to_le_bytes());
    out.extend_from_slice(&(trace.len() as u64).to_le_bytes());
    out.push(trace.mode.code());
    out.push(trace.quadrature.code());
    out.extend_from_slice(&trace.seed_tag.to_le_bytes());
    for s in &trace.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_trace(bytes: &[u8], path: &Path) -> Result<QuadratureTrace> {
    let bad = |reason: String| Error::format(path, reason);
    if bytes.len() < 6 {
        return Err(bad(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic (not a TBTR trace file)".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8-byte slice"));
    let period_fs = u64_at(6);
    let count = u64_at(14);
    let mode = TraceMode::from_code(bytes[22]).ok_or_else(|| bad(format!("unknown mode code {}", bytes[22])))?;
    let quadrature =
        Quadrature::from_code(bytes[23]).ok_or_else(|| bad(format!("unknown quadrature code {}", bytes[23])))?;
    let seed_tag = u64_at(24);
    if period_fs == 0 {
        return Err(bad("sample period is zero".into()));
    }
    let body = &bytes[HEADER_LEN..];
    let expected = count
        .checked_mul(8)
        .ok_or_else(|| bad(format!("sample count {count} overflows")))?;
    if (body.len() as u64) < expected {
        return Err(bad(format!(
            "truncated: header promises {count} samples, file holds {}",
            body.len() / 8
        )));
    }
    if body.len() as u64 != expected {
        return Err(bad(format!(
            "{} trailing bytes after {count} samples",
            body.len() as u64 - expected
        )));
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(QuadratureTrace {
        samples,
        sample_period_s: period_fs as f64 / FS_PER_S,
        mode,
        quadrature,
        seed_tag,
    })
}

pub fn write_trace(path: &Path, trace: &QuadratureTrace) -> Result<()> {
    write_atomic(path, &encode_trace(trace)?)
}

/// Reads a whole trace or fails; never returns a partial trace.
pub fn read_trace(path: &Path) -> Result<QuadratureTrace> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_trace(&bytes, path)
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
