//! Versioned binary container for trained models.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic   4 bytes  "ELMW"
//! version u32      1
//! activ   u8       0 = tanh
//! trained u8       0/1: output weights present
//! n_hidden u32 / input_dim u32 / output_dim u32
//! init_seed u64
//! W f64 row-major (n_hidden x input_dim)
//! b f64           (n_hidden)
//! Upsilon f64 row-major (output_dim x n_hidden), if trained
//! ```

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::elm::ElmModel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ELMW";
const VERSION: u32 = 1;
const ACT_TANH: u8 = 0;

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    Ok(())
}

/// Serializes a model (trained or not) to `path`.
pub fn save_model<P: AsRef<Path>>(model: &ElmModel, path: P) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let (wmat, b, upsilon) = model.weights();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[ACT_TANH, upsilon.is_some() as u8])?;
    w.write_all(&(model.n_hidden() as u32).to_le_bytes())?;
    w.write_all(&(model.input_dim() as u32).to_le_bytes())?;
    w.write_all(&(model.output_dim() as u32).to_le_bytes())?;
    w.write_all(&model.init_seed().to_le_bytes())?;
    write_matrix(&mut w, wmat)?;
    for v in b.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Some(u) = upsilon {
        write_matrix(&mut w, u)?;
    }
    w.flush()?;
    Ok(())
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("model file is truncated".into()))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(self.f64()?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &data))
    }
}

/// Deserializes a model written by [`save_model`].
pub fn load_model<P: AsRef<Path>>(path: P) -> Result<ElmModel> {
    let mut r = Reader { inner: std::io::BufReader::new(std::fs::File::open(path)?) };

    let magic: [u8; 4] = r.bytes()?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:02x?}")));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let [activation, trained] = r.bytes::<2>()?;
    if activation != ACT_TANH {
        return Err(Error::Format(format!("unknown activation id {activation}")));
    }
    if trained > 1 {
        return Err(Error::Format(format!("bad trained flag {trained}")));
    }
    let n_hidden = r.u32()? as usize;
    let input_dim = r.u32()? as usize;
    let output_dim = r.u32()? as usize;
    if n_hidden == 0 || input_dim == 0 || output_dim == 0 {
        return Err(Error::Format("zero model dimension".into()));
    }
    let init_seed = r.u64()?;

    let w = r.matrix(n_hidden, input_dim)?;
    let b = DVector::from_iterator(
        n_hidden,
        (0..n_hidden).map(|_| r.f64()).collect::<Result<Vec<_>>>()?,
    );
    let upsilon = if trained == 1 { Some(r.matrix(output_dim, n_hidden)?) } else { None };

    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after model payload".into()));
    }
    Ok(ElmModel::from_parts(w, b, upsilon, output_dim, init_seed))
}
