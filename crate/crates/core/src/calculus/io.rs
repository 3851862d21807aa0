//! Binary container for [`GridFunction`]. All fields are little-endian:
//!
//! | offset | type        | content                         |
//! |--------|-------------|---------------------------------|
//! | 0      | `[u8; 4]`   | magic `GRGF`                    |
//! | 4      | `u32`       | format version, currently 1     |
//! | 8      | `u32` × 5   | `d1, d2, n_x, n_y, k_max`       |
//! | 28     | `f64` × 2   | `x_extent, y_extent`            |
//! | 44     | `u64`       | sample count `n_x^d1 · n_y^d2`  |
//! | 52     | `f64` × 2·N | samples `(re, im)`, row-major   |

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

use super::grid::{GridFunction, GridSpec};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GRGF";
pub const FORMAT_VERSION: u32 = 1;

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit the header")))
}

pub fn write_grid_function(mut w: impl Write, f: &GridFunction) -> Result<()> {
    let s = &f.spec;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    for (v, what) in [(s.d1, "d1"), (s.d2, "d2"), (s.n_x, "n_x"), (s.n_y, "n_y"), (s.k_max, "k_max")] {
        w.write_u32::<LittleEndian>(to_u32(v, what)?)?;
    }
    w.write_f64::<LittleEndian>(s.x_extent)?;
    w.write_f64::<LittleEndian>(s.y_extent)?;
    w.write_u64::<LittleEndian>(f.values.len() as u64)?;
    for v in &f.values {
        w.write_f64::<LittleEndian>(v.re)?;
        w.write_f64::<LittleEndian>(v.im)?;
    }
    Ok(())
}

pub fn read_grid_function(mut r: impl Read) -> Result<GridFunction> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut head = [0usize; 5];
    for h in &mut head {
        *h = r.read_u32::<LittleEndian>()? as usize;
    }
    let x_extent = r.read_f64::<LittleEndian>()?;
    let y_extent = r.read_f64::<LittleEndian>()?;
    let spec = GridSpec { d1: head[0], d2: head[1], n_x: head[2], n_y: head[3], k_max: head[4], x_extent, y_extent };
    spec.validate().map_err(|e| Error::Format(e.to_string()))?;
    let count = r.read_u64::<LittleEndian>()?;
    if count != spec.len() as u64 {
        return Err(Error::Format(format!("sample count {count} does not match the header grid ({})", spec.len())));
    }
    let mut values = Vec::with_capacity(spec.len());
    for _ in 0..count {
        let re = r.read_f64::<LittleEndian>()?;
        let im = r.read_f64::<LittleEndian>()?;
        values.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after samples".into()));
    }
    GridFunction::new(spec, values)
}

pub fn save_grid_function(path: impl AsRef<Path>, f: &GridFunction) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_grid_function(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn load_grid_function(path: impl AsRef<Path>) -> Result<GridFunction> {
    read_grid_function(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let spec = GridSpec::new(2, 1, 1.25, 3.5, 3, 4, 7).unwrap();
        let f = GridFunction::from_fn(spec, |x, y| Complex64::new(x[0].sin() / 3.0, (x[1] * y[0]).exp()));
        let mut buf = Vec::new();
        write_grid_function(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 52 + 16 * spec.len());
        let g = read_grid_function(buf.as_slice()).unwrap();
        assert_eq!(g.spec, f.spec);
        assert!(f.values.iter().zip(&g.values).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    }

    #[test]
    fn rejects_malformed_input() {
        let spec = GridSpec::new(1, 1, 1.0, 1.0, 2, 2, 0).unwrap();
        let mut buf = Vec::new();
        write_grid_function(&mut buf, &GridFunction::zeros(spec)).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_grid_function(bad.as_slice()), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[44] = 5;
        assert!(matches!(read_grid_function(bad.as_slice()), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(read_grid_function(long.as_slice()).is_err());
        assert!(read_grid_function(&buf[..buf.len() - 1]).is_err());
    }
}
