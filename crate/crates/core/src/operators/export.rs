//! Binary operator layout: `u64` order `n` (little endian), one kind byte
//! (`0` real, `1` complex), then the lower triangle row by row as `f64`
//! little-endian values, complex entries interleaved as `re, im`.

use std::io::{Read, Write};

use faer::{c64, Mat};

use crate::error::{Error, Result};

use super::{AssembledOperator, OperatorMatrix};

pub fn write_operator<W: Write>(out: &mut W, op: &AssembledOperator) -> Result<()> {
    let n = op.size();
    out.write_all(&(n as u64).to_le_bytes())?;
    match &op.matrix {
        OperatorMatrix::Real(m) => {
            out.write_all(&[0])?;
            for i in 0..n {
                for j in 0..=i {
                    out.write_all(&m[(i, j)].to_le_bytes())?;
                }
            }
        }
        OperatorMatrix::Complex(m) => {
            out.write_all(&[1])?;
            for i in 0..n {
                for j in 0..=i {
                    out.write_all(&m[(i, j)].re.to_le_bytes())?;
                    out.write_all(&m[(i, j)].im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_operator_sidecar<W: Write>(out: &mut W, op: &AssembledOperator) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &op.metadata)?;
    writeln!(out)?;
    Ok(())
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads the matrix back, filling the upper triangle by (conjugate) symmetry.
pub fn read_operator<R: Read>(input: &mut R) -> Result<OperatorMatrix> {
    let mut header = [0u8; 9];
    input.read_exact(&mut header)?;
    let n = u64::from_le_bytes(header[..8].try_into().expect("8 bytes")) as usize;
    match header[8] {
        0 => {
            let mut m = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let x = read_f64(input)?;
                    m[(i, j)] = x;
                    m[(j, i)] = x;
                }
            }
            Ok(OperatorMatrix::Real(m))
        }
        1 => {
            let mut m = Mat::<c64>::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let z = c64::new(read_f64(input)?, read_f64(input)?);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            Ok(OperatorMatrix::Complex(m))
        }
        k => Err(Error::Parse(format!("unknown matrix kind byte {k}"))),
    }
}
