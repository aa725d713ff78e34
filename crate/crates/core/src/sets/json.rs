//! JSON form of a line zonotope. Matrices are `{"rows", "cols", "data"}` objects with
//! row-major data; every number is written with 17 significant digits so finite values
//! round-trip bit-exactly.

use std::fmt::Write as _;

use serde::Deserialize;

use super::LineZonotope;
use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
#[allow(non_snake_case)]
struct RawSet {
    M: RawMatrix,
    G: RawMatrix,
    c: Vec<f64>,
    S: RawMatrix,
    A: RawMatrix,
    b: Vec<f64>,
}

/// Formats a double with 17 significant digits; negative zero prints as zero.
pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn write_array(out: &mut String, it: impl Iterator<Item = f64>) {
    out.push('[');
    for (k, v) in it.enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        out.push_str(&fmt_f64(v));
    }
    out.push(']');
}

fn write_matrix(out: &mut String, m: &Mat) {
    let _ = write!(out, "{{\"rows\": {}, \"cols\": {}, \"data\": ", m.nrows(), m.ncols());
    let (r, c) = m.shape();
    write_array(out, (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])));
    out.push('}');
}

fn to_matrix(raw: RawMatrix, name: &str) -> Result<Mat> {
    if raw.data.len() != raw.rows * raw.cols {
        return Err(Error::InvalidArgument(format!(
            "matrix {name}: {} entries for a {}x{} shape",
            raw.data.len(),
            raw.rows,
            raw.cols
        )));
    }
    Ok(Mat::from_row_slice(raw.rows, raw.cols, &raw.data))
}

impl LineZonotope {
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{{\"n\": {}, \"n_lines\": {}, \"n_generators\": {}, \"n_constraints\": {},\n",
            self.dim(),
            self.num_lines(),
            self.num_generators(),
            self.num_constraints()
        );
        for (name, m) in [("M", &self.m), ("G", &self.g)] {
            let _ = write!(s, " \"{name}\": ");
            write_matrix(&mut s, m);
            s.push_str(",\n");
        }
        s.push_str(" \"c\": ");
        write_array(&mut s, self.c.iter().copied());
        s.push_str(",\n");
        for (name, m) in [("S", &self.s), ("A", &self.a)] {
            let _ = write!(s, " \"{name}\": ");
            write_matrix(&mut s, m);
            s.push_str(",\n");
        }
        s.push_str(" \"b\": ");
        write_array(&mut s, self.b.iter().copied());
        s.push_str("\n}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSet =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("line zonotope json: {e}")))?;
        Self::new(
            to_matrix(raw.M, "M")?,
            to_matrix(raw.G, "G")?,
            Vector::from_vec(raw.c),
            to_matrix(raw.S, "S")?,
            to_matrix(raw.A, "A")?,
            Vector::from_vec(raw.b),
        )
    }
}
