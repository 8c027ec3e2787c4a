//! CSV and binary serialization of results.
//!
//! CSV files are comma separated with a header row, LF line endings and
//! floats printed with 17 significant digits, so that identical results give
//! identical bytes.
//!
//! Binary grids use this little-endian layout:
//!
//! ```text
//! offset  size         content
//! 0       8            magic "RLGRID01"
//! 8       8            u64 n_rows
//! 16      8            u64 n_cols
//! 24      8            f64 t
//! 32      8*n_rows     f64 row axis
//! ...     8*n_cols     f64 column axis
//! ...     8*n_rows*n_cols  f64 values, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const GRID_MAGIC: &[u8; 8] = b"RLGRID01";

/// Float formatting used in every CSV: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// CSV writer with the house dialect.
pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Writes `header` and `rows` to `path`.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(std::fs::File::create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// A tabulated function of two variables at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub t: f64,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    /// Row-major, `rows.len() * cols.len()` values.
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(t: f64, rows: Vec<f64>, cols: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows.len() * cols.len() {
            return Err(Error::Format(format!(
                "grid has {} values for {}x{} axes",
                values.len(),
                rows.len(),
                cols.len()
            )));
        }
        Ok(Self { t, rows, cols, values })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols.len() + j]
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&(self.rows.len() as u64).to_le_bytes())?;
        w.write_all(&(self.cols.len() as u64).to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        for v in self.rows.iter().chain(&self.cols).chain(&self.values) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != GRID_MAGIC {
            return Err(Error::Format("not a grid file (bad magic)".into()));
        }
        let mut b = [0u8; 8];
        let mut u64_ = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let n_rows = u64_(&mut r)? as usize;
        let n_cols = u64_(&mut r)? as usize;
        let n = n_rows
            .checked_mul(n_cols)
            .and_then(|v| v.checked_add(n_rows + n_cols + 1))
            .ok_or_else(|| Error::Format("grid dimensions overflow".into()))?;
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        if raw.len() != 8 * n {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                8 * n,
                raw.len()
            )));
        }
        let mut vals = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let t = vals.next().unwrap();
        let rows: Vec<f64> = vals.by_ref().take(n_rows).collect();
        let cols: Vec<f64> = vals.by_ref().take(n_cols).collect();
        let values: Vec<f64> = vals.collect();
        Self::new(t, rows, cols, values)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Long-format CSV `t,<row>,<col>,value,err` with the given axis names.
    pub fn save_csv(&self, path: &Path, row_name: &str, col_name: &str, err: Option<&[f64]>) -> Result<()> {
        let nc = self.cols.len();
        let rows = (0..self.values.len()).map(|k| {
            let (i, j) = (k / nc, k % nc);
            vec![
                fmt_f64(self.t),
                fmt_f64(self.rows[i]),
                fmt_f64(self.cols[j]),
                fmt_f64(self.values[k]),
                fmt_f64(err.map_or(0.0, |e| e[k])),
            ]
        });
        write_csv(path, &["t", row_name, col_name, "value", "err"], rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let g = Grid::new(1.0, vec![0.0, 1.0], vec![2.0], vec![3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * (2 + 1 + 2));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(Grid::read_binary(&bad[..]).is_err());
        assert!(Grid::read_binary(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn csv_uses_lf() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        Grid::new(1.0, vec![0.0], vec![1.0], vec![0.25])
            .unwrap()
            .save_csv(&p, "x", "u", None)
            .unwrap();
        let s = std::fs::read_to_string(&p).unwrap();
        assert!(!s.contains('\r'));
        assert_eq!(s.lines().next().unwrap(), "t,x,u,value,err");
    }

    proptest! {
        #[test]
        fn binary_round_trip(
            t in -1e6..1e6f64,
            rows in prop::collection::vec(-1e300..1e300f64, 0..6),
            cols in prop::collection::vec(-1e300..1e300f64, 0..6),
            seed in any::<u64>(),
        ) {
            let n = rows.len() * cols.len();
            let values: Vec<f64> = (0..n).map(|k| f64::from_bits(seed.wrapping_mul(k as u64 + 1) >> 2)).collect();
            let g = Grid::new(t, rows, cols, values).unwrap();
            let mut buf = Vec::new();
            g.write_binary(&mut buf).unwrap();
            let back = Grid::read_binary(&buf[..]).unwrap();
            prop_assert_eq!(back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            g.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(back.rows, g.rows);
            prop_assert_eq!(back.cols, g.cols);
            prop_assert_eq!(back.t, g.t);
        }
    }
}
