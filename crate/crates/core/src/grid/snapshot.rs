//! Binary field snapshots.
//!
//! A record is one text header line `nx ny hx hy name ncomp` followed by
//! `nx·ny·ncomp` little-endian `f64` values, cells in row-major order with
//! components interleaved. Several records may be concatenated in one file.

use std::io::{BufRead, Write};

use super::{Bc, Field, Grid2D};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub grid: Grid2D,
    pub name: String,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl Record {
    pub fn into_field<const N: usize>(self, bc: Bc) -> Result<Field<N>> {
        if self.ncomp != N {
            return Err(Error::Snapshot(format!(
                "record `{}` has {} components, expected {N}",
                self.name, self.ncomp
            )));
        }
        let data = self
            .data
            .chunks_exact(N)
            .map(|c| std::array::from_fn(|k| c[k]))
            .collect();
        Field::from_data(self.grid, bc, data)
    }
}

pub fn write_field<const N: usize>(w: &mut impl Write, name: &str, f: &Field<N>) -> Result<()> {
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::Snapshot(format!("invalid record name `{name}`")));
    }
    let g = f.grid();
    writeln!(w, "{} {} {} {} {} {}", g.nx, g.ny, g.hx, g.hy, name, N)?;
    let mut buf = Vec::with_capacity(g.len() * N * 8);
    for v in f.data() {
        for c in v {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads the next record, or `None` at a clean end of input.
pub fn read_record(r: &mut impl BufRead) -> Result<Option<Record>> {
    let mut header = String::new();
    if r.read_line(&mut header)? == 0 {
        return Ok(None);
    }
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 {
        return Err(Error::Snapshot(format!("bad header `{}`", header.trim_end())));
    }
    let bad = |what: &str| Error::Snapshot(format!("bad {what} in header `{}`", header.trim_end()));
    let nx: usize = parts[0].parse().map_err(|_| bad("nx"))?;
    let ny: usize = parts[1].parse().map_err(|_| bad("ny"))?;
    let hx: f64 = parts[2].parse().map_err(|_| bad("hx"))?;
    let hy: f64 = parts[3].parse().map_err(|_| bad("hy"))?;
    let ncomp: usize = parts[5].parse().map_err(|_| bad("component count"))?;
    let grid = Grid2D::from_spacing(nx, ny, hx, hy)?;
    let mut bytes = vec![0u8; grid.len() * ncomp * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Snapshot(format!("truncated payload for `{}`: {e}", parts[4])))?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Some(Record {
        grid,
        name: parts[4].to_string(),
        ncomp,
        data,
    }))
}

pub fn read_all(r: &mut impl BufRead) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    while let Some(rec) = read_record(r)? {
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ScalarField2D, SymTensorField2D};
    use crate::symcalc::SymMat2;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid2D::new(5, 7, 0.3, 1.0 / 3.0).unwrap();
        let s = ScalarField2D::scalar(g, |x, y| (x * 1e3).sin() / (y + 1e-300));
        let t = SymTensorField2D::tensor(g, |x, y| SymMat2::new(x.exp(), -y / 7.0, 1e-17 * x));
        let mut buf = Vec::new();
        write_field(&mut buf, "rho", &s).unwrap();
        write_field(&mut buf, "T", &t).unwrap();
        let recs = read_all(&mut buf.as_slice()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].grid, g);
        let s2: ScalarField2D = recs[0].clone().into_field(Bc::ScalarNeumann).unwrap();
        let t2: SymTensorField2D = recs[1].clone().into_field(Bc::TensorNeumann).unwrap();
        for (a, b) in s.data().iter().zip(s2.data()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
        }
        assert_eq!(t, t2);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let g = Grid2D::new(4, 4, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, "eta", &ScalarField2D::zeros(g, Bc::ScalarNeumann)).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_all(&mut buf.as_slice()), Err(Error::Snapshot(_))));
    }
}
