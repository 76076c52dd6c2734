//! Polymetric files: a manifest followed by one field blob per component.
//!
//! ```text
//! magic   "PMP1"
//! u32     component count
//! per component: u32 positive, u32 negative, u8 scheme (0 central2, 1 central4, 2 spectral)
//! per component: field blob (see `grid::io`)
//! ```

use crate::cone::{validate_polymetric, Inertia, MetricField, Polymetric};
use crate::error::{Error, Result};
use crate::grid::io::{decode_field, encode_field};
use crate::grid::{Scheme, TensorField};

pub const POLYMETRIC_MAGIC: &[u8; 4] = b"PMP1";

/// Raw contents of a polymetric file, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymetricBlob {
    pub components: Vec<TensorField>,
    pub inertias: Vec<Inertia>,
    pub schemes: Vec<Scheme>,
}

impl PolymetricBlob {
    pub fn into_polymetric(self) -> Result<Polymetric> {
        let p = validate_polymetric(self.components, &self.inertias)?;
        let metrics = p.components().iter().zip(&self.schemes).map(|(g, &s)| g.clone().with_scheme(s)).collect();
        Polymetric::from_metrics(metrics)
    }
}

fn scheme_code(s: Scheme) -> u8 {
    match s {
        Scheme::Central2 => 0,
        Scheme::Central4 => 1,
        Scheme::Spectral => 2,
    }
}

pub fn encode_metrics(metrics: &[MetricField]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(POLYMETRIC_MAGIC);
    out.extend_from_slice(&(metrics.len() as u32).to_le_bytes());
    for g in metrics {
        let i = g.declared_inertia();
        out.extend_from_slice(&(i.positive as u32).to_le_bytes());
        out.extend_from_slice(&(i.negative as u32).to_le_bytes());
        out.push(scheme_code(g.scheme()));
    }
    for g in metrics {
        out.extend_from_slice(&encode_field(g.components()));
    }
    out
}

pub fn encode_polymetric(p: &Polymetric) -> Vec<u8> {
    encode_metrics(p.components())
}

fn u32_at(buf: &[u8], pos: usize) -> Result<u32> {
    buf.get(pos..pos + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Format("truncated polymetric manifest".into()))
}

pub fn decode_polymetric(buf: &[u8]) -> Result<PolymetricBlob> {
    if buf.get(..4) != Some(POLYMETRIC_MAGIC.as_slice()) {
        return Err(Error::Format("bad polymetric magic".into()));
    }
    let count = u32_at(buf, 4)? as usize;
    if count == 0 {
        return Err(Error::Format("polymetric with no components".into()));
    }
    let mut pos = 8;
    let mut inertias = Vec::with_capacity(count);
    let mut schemes = Vec::with_capacity(count);
    for _ in 0..count {
        let p = u32_at(buf, pos)? as usize;
        let q = u32_at(buf, pos + 4)? as usize;
        let code = *buf.get(pos + 8).ok_or_else(|| Error::Format("truncated polymetric manifest".into()))?;
        schemes.push(match code {
            0 => Scheme::Central2,
            1 => Scheme::Central4,
            2 => Scheme::Spectral,
            c => return Err(Error::Format(format!("unknown scheme code {c}"))),
        });
        inertias.push(Inertia::new(p, q));
        pos += 9;
    }
    let mut components = Vec::with_capacity(count);
    for _ in 0..count {
        let (t, used) = decode_field(&buf[pos..])?;
        pos += used;
        components.push(t);
    }
    if pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes after the last component", buf.len() - pos)));
    }
    Ok(PolymetricBlob { components, inertias, schemes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use std::sync::Arc;

    #[test]
    fn round_trip_keeps_inertias_and_schemes() {
        let g = models::bumpy_torus(12, 0.2).unwrap();
        let chart = g.chart().clone();
        let l = models::constant_diagonal(&chart, &[1.0, -1.0], Inertia::new(1, 1)).unwrap();
        let blob = encode_metrics(&[g.clone(), l.clone()]);
        let back = decode_polymetric(&blob).unwrap();
        assert_eq!(back.inertias, vec![Inertia::riemannian(2), Inertia::new(1, 1)]);
        assert_eq!(back.schemes, vec![Scheme::Spectral, Scheme::Central4]);
        let p = back.into_polymetric().unwrap();
        assert_eq!(p.components()[0], g);
        assert_eq!(p.components()[1].components(), l.components());
        assert!(Arc::ptr_eq(p.chart(), p.components()[1].chart()) || **p.chart() == *chart);
    }

    #[test]
    fn corrupt_files_rejected() {
        let g = models::flat_torus(8).unwrap();
        let blob = encode_metrics(&[g]);
        assert!(decode_polymetric(&blob[..blob.len() - 1]).is_err());
        assert!(decode_polymetric(b"PMF1").is_err());
        let mut extra = blob.clone();
        extra.push(0);
        assert!(decode_polymetric(&extra).is_err());
        let mut wrong = blob;
        wrong[8] = 0;
        wrong[12] = 0;
        // declared (0,0) no longer matches the data
        assert!(matches!(decode_polymetric(&wrong).unwrap().into_polymetric(), Err(Error::InertiaMismatch { .. })));
    }
}
