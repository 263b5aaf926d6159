//! File formats: the portable "TNSR" binary tensor format and plain CSV for
//! matrices.
//!
//! TNSR layout: magic bytes `TNSR`, version byte 1, unsigned 32-bit
//! little-endian order n, n unsigned 32-bit dims, then the data as 64-bit
//! little-endian IEEE-754 scalars in canonical order. Matrices are order-2
//! tensors in the same format.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::Matrix;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"TNSR";
const VERSION: u8 = 1;

pub fn write_tensor<W: Write>(w: &mut W, t: &Tensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for &x in t.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad TNSR magic".into()));
    }
    let mut ver = [0u8; 1];
    r.read_exact(&mut ver)?;
    if ver[0] != VERSION {
        return Err(Error::Format(format!("unsupported TNSR version {}", ver[0])));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let order = u32::from_le_bytes(buf4) as usize;
    if order == 0 || order > 64 {
        return Err(Error::Format(format!("implausible tensor order {order}")));
    }
    let mut shape = Vec::with_capacity(order);
    for _ in 0..order {
        r.read_exact(&mut buf4)?;
        shape.push(u32::from_le_bytes(buf4) as usize);
    }
    let len: usize = shape.iter().product();
    let mut data = Vec::with_capacity(len);
    let mut buf8 = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf8)?;
        data.push(f64::from_le_bytes(buf8));
    }
    Tensor::new(shape, data)
}

pub fn save_tensor(path: &Path, t: &Tensor) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_tensor(&mut f, t)
}

pub fn load_tensor(path: &Path) -> Result<Tensor> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_tensor(&mut f)
}

pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    save_tensor(path, &Tensor::from_matrix(m))
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let t = load_tensor(path)?;
    t.to_matrix()
}

/// Plain CSV matrix: one row per line, comma-separated.
pub fn write_matrix_csv<W: Write>(w: &mut W, m: &Matrix) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv<R: Read>(r: &mut R) -> Result<Matrix> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::Format(format!("csv line {}: {e}", lineno + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("empty csv matrix".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Format("ragged csv matrix".into()));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn load_matrix_auto(path: &Path) -> Result<Matrix> {
    if path.extension().map(|e| e == "csv").unwrap_or(false) {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        read_matrix_csv(&mut f)
    } else {
        load_matrix(path)
    }
}

pub fn save_matrix_auto(path: &Path, m: &Matrix) -> Result<()> {
    if path.extension().map(|e| e == "csv").unwrap_or(false) {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_matrix_csv(&mut f, m)
    } else {
        save_matrix(path, m)
    }
}
