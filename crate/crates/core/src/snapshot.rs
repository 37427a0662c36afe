//! Field snapshots: a little-endian binary dump and a CSV slice for plotting.
//!
//! Binary layout: magic `DWSN`, version `u32`, `n: u32`, `N: u32`, `L: f64`,
//! `t: f64`, then the `Nⁿ` physical values as `f64` in row-major order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::torus::Grid;

pub const MAGIC: [u8; 4] = *b"DWSN";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn new(grid: Grid, t: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, t, values })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.n as u32).to_le_bytes())?;
        w.write_all(&(self.grid.size as u32).to_le_bytes())?;
        w.write_all(&self.grid.half_length.to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Snapshot("bad magic bytes".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let n = read_u32(&mut r)? as usize;
        let size = read_u32(&mut r)? as usize;
        let half_length = read_f64(&mut r)?;
        let t = read_f64(&mut r)?;
        let grid = Grid::new(n, size, half_length).map_err(|e| Error::Snapshot(e.to_string()))?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            values.push(read_f64(&mut r)?);
        }
        Ok(Self { grid, t, values })
    }

    /// `x,u` along the first axis; for `n = 2` the row through `y = 0`.
    pub fn write_csv_slice<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "u"])?;
        let size = self.grid.size;
        let row = if self.grid.n == 2 { size / 2 } else { 0 };
        for i in 0..size {
            let v = if self.grid.n == 2 {
                self.values[i * size + row]
            } else {
                self.values[i]
            };
            out.write_record([self.grid.coordinate(i).to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
