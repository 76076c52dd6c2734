//! Flat binary layout for sampled fields.
//!
//! ```text
//! magic   "PMF1"
//! u8      dim
//! u8      contravariant rank
//! u8      covariant rank
//! u8      symmetric flag (0/1)
//! per axis: u32 resolution, u8 periodic flag, f64 lo, f64 hi
//! payload: nodes x components, row-major, f64
//! ```
//! All multi-byte values are little-endian.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Chart, ScalarField, TensorField};

pub const FIELD_MAGIC: &[u8; 4] = b"PMF1";

pub fn encode_field(t: &TensorField) -> Vec<u8> {
    let chart = t.chart();
    let mut out = Vec::with_capacity(8 + chart.dim() * 21 + t.data().len() * 8);
    out.extend_from_slice(FIELD_MAGIC);
    out.push(chart.dim() as u8);
    out.push(t.contravariant() as u8);
    out.push(t.covariant() as u8);
    out.push(t.is_symmetric() as u8);
    for a in 0..chart.dim() {
        out.extend_from_slice(&(chart.resolution()[a] as u32).to_le_bytes());
        out.push(chart.is_periodic(a) as u8);
        out.extend_from_slice(&chart.bounds()[a].0.to_le_bytes());
        out.extend_from_slice(&chart.bounds()[a].1.to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_scalar(f: &ScalarField) -> Vec<u8> {
    let t = TensorField::from_raw(f.chart().clone(), 0, 0, false, f.values().to_vec());
    encode_field(&t)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated field blob".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Decodes one field blob starting at `buf[0]`; returns the field and the
/// number of bytes consumed.
pub fn decode_field(buf: &[u8]) -> Result<(TensorField, usize)> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != FIELD_MAGIC {
        return Err(Error::Format("bad field magic".into()));
    }
    let dim = r.u8()? as usize;
    let contra = r.u8()? as usize;
    let cov = r.u8()? as usize;
    let symmetric = r.u8()? != 0;
    let mut res = Vec::with_capacity(dim);
    let mut per = Vec::with_capacity(dim);
    let mut bounds = Vec::with_capacity(dim);
    for _ in 0..dim {
        res.push(r.u32()? as usize);
        per.push(r.u8()? != 0);
        let lo = r.f64()?;
        let hi = r.f64()?;
        bounds.push((lo, hi));
    }
    let chart = Arc::new(Chart::new(dim, &bounds, &res, &per)?);
    let count = chart.len() * dim.pow((contra + cov) as u32);
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        data.push(r.f64()?);
    }
    let t = TensorField::new(chart, contra, cov, symmetric, data)?;
    Ok((t, r.pos))
}

/// Plain-text dump: one line per node, coordinates then components.
pub fn text_dump(t: &TensorField) -> String {
    let chart = t.chart();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# dim={} type=({},{}) resolution={:?} periodic={:?}",
        chart.dim(),
        t.contravariant(),
        t.covariant(),
        chart.resolution(),
        chart.periodic()
    );
    for node in 0..chart.len() {
        let coords = chart.node_coords(node);
        let line: Vec<String> =
            coords.iter().chain(t.at(node).iter()).map(|v| format!("{v:.17e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn blob_round_trip(n in 8usize..12, lo in -3.0f64..0.0, len in 0.5f64..4.0, periodic: bool, seed in 0u64..1000) {
            let chart = Arc::new(Chart::new(2, &[(lo, lo + len), (0.0, 1.0)], &[n, 9], &[periodic, false]).unwrap());
            let t = TensorField::symmetric_from_fn(&chart, |x, g| {
                g[0] = 1.0 + x[0] * x[0];
                g[1] = (seed as f64 * 0.37 + x[1]).sin();
                g[3] = 2.0;
            });
            let blob = encode_field(&t);
            let (back, used) = decode_field(&blob).unwrap();
            prop_assert_eq!(used, blob.len());
            prop_assert_eq!(back, t);
        }
    }

    #[test]
    fn truncated_blob_rejected() {
        let chart = Arc::new(Chart::torus(1, 8).unwrap());
        let f = ScalarField::constant(&chart, 2.0);
        let blob = encode_scalar(&f);
        assert!(decode_field(&blob[..blob.len() - 3]).is_err());
        assert!(text_dump(&decode_field(&blob).unwrap().0).lines().count() == 9);
    }
}
