//! JSON encoding of complex matrices as nested `[re, im]` pairs, shared by the
//! way-point, operator and span-report files.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matspace::{c, CMatrix};

pub type EncodedMatrix = Vec<Vec<[f64; 2]>>;

pub fn encode(m: &CMatrix) -> EncodedMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn decode(n: usize, rows: &EncodedMatrix) -> Result<CMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("expected a {n}x{n} complex matrix")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

/// A single operator document: `{"n": N, "entries": [[[re, im], …], …]}`.
/// Real entries may be given as plain numbers via `real` instead.
#[derive(Debug, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<EncodedMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real: Option<Vec<Vec<f64>>>,
}

pub fn load_operator<R: Read>(source: R) -> Result<CMatrix> {
    let doc: OperatorDoc = serde_json::from_reader(source)?;
    match (&doc.entries, &doc.real) {
        (Some(e), None) => decode(doc.n, e),
        (None, Some(r)) => {
            if r.len() != doc.n || r.iter().any(|row| row.len() != doc.n) {
                return Err(Error::Parse(format!("expected a {0}x{0} real matrix", doc.n)));
            }
            Ok(CMatrix::from_fn(doc.n, doc.n, |i, j| c(r[i][j], 0.0)))
        }
        _ => Err(Error::Parse("operator needs exactly one of `entries` or `real`".into())),
    }
}

pub fn save_operator<W: Write>(m: &CMatrix, mut sink: W) -> Result<()> {
    let doc = OperatorDoc { n: m.nrows(), entries: Some(encode(m)), real: None };
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    sink.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matspace::pauli;

    #[test]
    fn operator_roundtrip_and_real_form() {
        let y = pauli::y();
        let mut buf = Vec::new();
        save_operator(&y, &mut buf).unwrap();
        assert_eq!(load_operator(buf.as_slice()).unwrap(), y);
        let x = load_operator(r#"{"n":2,"real":[[0,1],[1,0]]}"#.as_bytes()).unwrap();
        assert_eq!(x, pauli::x());
        assert!(load_operator(r#"{"n":3,"real":[[0,1],[1,0]]}"#.as_bytes()).is_err());
        assert!(load_operator(r#"{"n":2}"#.as_bytes()).is_err());
    }
}
