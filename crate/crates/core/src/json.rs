//! JSON carriers for kets and operators, and serde adaptors that encode
//! complex numbers as `[re, im]` pairs. Floats go through shortest
//! round-trip formatting, so values re-parse bit-identically.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::tensor::{Ket, Operator, Shape};

pub const SCHEMA_VERSION: u32 = 1;

fn default_version() -> u32 {
    SCHEMA_VERSION
}

pub fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Domain(format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})")));
    }
    Ok(())
}

pub type Pair = [f64; 2];

pub fn vec_to_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn pairs_to_vec(p: &[Pair]) -> CVector {
    CVector::from_iterator(p.len(), p.iter().map(|[re, im]| c(*re, *im)))
}

pub fn mat_to_rows(m: &CMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn rows_to_mat(rows: &[Vec<Pair>]) -> Result<CMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(n, cols, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        vec_to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CVector, D::Error> {
        let p: Vec<Pair> = Vec::deserialize(d)?;
        Ok(pairs_to_vec(&p))
    }
}

pub mod cvec_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[CVector], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(vec_to_pairs).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CVector>, D::Error> {
        let p: Vec<Vec<Pair>> = Vec::deserialize(d)?;
        Ok(p.iter().map(|x| pairs_to_vec(x)).collect())
    }
}

pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        mat_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows: Vec<Vec<Pair>> = Vec::deserialize(d)?;
        rows_to_mat(&rows).map_err(serde::de::Error::custom)
    }
}

pub mod cmat_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(mat_to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let rows: Vec<Vec<Vec<Pair>>> = Vec::deserialize(d)?;
        rows.iter()
            .map(|r| rows_to_mat(r).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// `{"shape": [..], "entries": [[re, im], ..]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KetJson {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    pub shape: Shape,
    pub entries: Vec<Pair>,
}

/// `{"shape": [..], "rows": [[[re, im], ..], ..]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    pub shape: Shape,
    pub rows: Vec<Vec<Pair>>,
}

impl From<&Ket> for KetJson {
    fn from(k: &Ket) -> Self {
        KetJson { schema_version: SCHEMA_VERSION, shape: k.shape.clone(), entries: vec_to_pairs(&k.entries) }
    }
}

impl From<Ket> for KetJson {
    fn from(k: Ket) -> Self {
        KetJson::from(&k)
    }
}

impl TryFrom<KetJson> for Ket {
    type Error = Error;

    fn try_from(j: KetJson) -> Result<Ket> {
        check_version(j.schema_version)?;
        Ket::new(pairs_to_vec(&j.entries), j.shape)
    }
}

impl From<&Operator> for OperatorJson {
    fn from(o: &Operator) -> Self {
        OperatorJson { schema_version: SCHEMA_VERSION, shape: o.shape.clone(), rows: mat_to_rows(&o.matrix) }
    }
}

impl From<Operator> for OperatorJson {
    fn from(o: Operator) -> Self {
        OperatorJson::from(&o)
    }
}

impl TryFrom<OperatorJson> for Operator {
    type Error = Error;

    fn try_from(j: OperatorJson) -> Result<Operator> {
        check_version(j.schema_version)?;
        let m = rows_to_mat(&j.rows)?;
        Operator::new(m, j.shape)
    }
}

/// A ket given either as a full ket object or as a bare entry list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KetOrEntries {
    Ket(KetJson),
    Entries(Vec<Pair>),
}

impl KetOrEntries {
    pub fn into_vector(self) -> Result<CVector> {
        match self {
            KetOrEntries::Ket(k) => Ok(Ket::try_from(k)?.entries),
            KetOrEntries::Entries(e) => Ok(pairs_to_vec(&e)),
        }
    }
}

/// Byte offset of a 1-based (line, column) position in `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len();
    }
    offset
}

pub fn parse_str<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    parse_str(&text, &path.display().to_string())
}

pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn save<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = to_string(value)?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn load_ket(path: &Path) -> Result<Ket> {
    Ket::try_from(load::<KetJson>(path)?)
}

pub fn load_operator(path: &Path) -> Result<Operator> {
    Operator::try_from(load::<OperatorJson>(path)?)
}
