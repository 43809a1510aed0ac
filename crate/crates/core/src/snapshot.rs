//! Snapshot lines: one JSON object per saved state, with the wavefunction as
//! base64 of interleaved little-endian `f64` re/im pairs.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Leg;
use crate::grid::{ComplexField, Grid};

pub const ENCODING: &str = "f64le-interleaved-base64";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDescriptor {
    pub dims: usize,
    pub lengths: Vec<f64>,
    pub points: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotLine {
    pub t: f64,
    pub leg: Leg,
    pub grid: GridDescriptor,
    pub encoding: String,
    pub psi: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub leg: Leg,
    pub psi: ComplexField,
}

pub fn encode(s: &Snapshot) -> String {
    let g = s.psi.grid();
    let mut bytes = Vec::with_capacity(16 * g.len());
    for c in s.psi.values() {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    let line = SnapshotLine {
        t: s.t,
        leg: s.leg,
        grid: GridDescriptor {
            dims: g.dims(),
            lengths: g.lengths().to_vec(),
            points: g.points().to_vec(),
        },
        encoding: ENCODING.into(),
        psi: STANDARD.encode(bytes),
    };
    serde_json::to_string(&line).expect("snapshot serializes")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Snapshot(msg.into())
}

pub fn decode(line: &str) -> Result<Snapshot> {
    let l: SnapshotLine = serde_json::from_str(line.trim()).map_err(|e| bad(e.to_string()))?;
    if l.encoding != ENCODING {
        return Err(bad(format!("unsupported encoding `{}`", l.encoding)));
    }
    if !l.t.is_finite() {
        return Err(bad("non-finite time"));
    }
    let d = &l.grid;
    if d.lengths.len() != d.dims || d.points.len() != d.dims {
        return Err(bad("grid descriptor is inconsistent"));
    }
    let g = Grid::new(&d.lengths, &d.points).map_err(|e| bad(e.to_string()))?;
    let bytes = STANDARD.decode(l.psi.as_bytes()).map_err(|e| bad(e.to_string()))?;
    if bytes.len() != 16 * g.len() {
        return Err(bad(format!("expected {} bytes, got {}", 16 * g.len(), bytes.len())));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    let values: Vec<Complex64> = bytes.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    if values.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(bad("non-finite sample"));
    }
    Ok(Snapshot {
        t: l.t,
        leg: l.leg,
        psi: ComplexField::new(&g, values)?,
    })
}

/// Decodes every non-blank line.
pub fn decode_all(text: &str) -> Result<Vec<Snapshot>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(decode).collect()
}
