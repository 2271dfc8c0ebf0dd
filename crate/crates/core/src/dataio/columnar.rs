//! DTC1: a minimal little-endian columnar container.
//!
//! ```text
//! "DTC1" | u32 version | u32 N | u32 p | u32 label_block_len
//! p × (N × f32)                                  embedded columns
//! label block (label_block_len bytes):
//!   repeated { u32 name_len | name | u8 kind | payload }
//!     kind 0: N × u16 codes | u32 n_categories | n × (u32 len | utf8)
//!     kind 1: N × f32
//! names block (optional): u32 len | p × (u32 len | utf8)
//! ```
//!
//! Each embedded column is contiguous, so a reader can forward one column at
//! a time without decoding the rest.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{default_names, Dataset, LabelColumn};
use crate::error::{Result, TourError};

pub const COLUMNAR_MAGIC: [u8; 4] = *b"DTC1";
pub const COLUMNAR_VERSION: u32 = 1;

const KIND_CATEGORICAL: u8 = 0;
const KIND_CONTINUOUS: u8 = 1;

pub fn save_columnar(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| TourError::file(path, e))?;
    let mut w = BufWriter::new(file);
    write_columnar(ds, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_columnar(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| TourError::file(path, e))?;
    read_columnar(&mut file)
}

fn to_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| TourError::InvalidArgument(format!("{what} {n} exceeds u32")))
}

fn put_str(buf: &mut Vec<u8>, s: &str) -> Result<()> {
    buf.extend_from_slice(&to_u32(s.len(), "string length")?.to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
    Ok(())
}

fn encode_labels(labels: &[LabelColumn]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for label in labels {
        put_str(&mut buf, label.name())?;
        match label {
            LabelColumn::Categorical {
                codes, categories, ..
            } => {
                buf.push(KIND_CATEGORICAL);
                for c in codes {
                    buf.extend_from_slice(&c.to_le_bytes());
                }
                buf.extend_from_slice(&to_u32(categories.len(), "category count")?.to_le_bytes());
                for c in categories {
                    put_str(&mut buf, c)?;
                }
            }
            LabelColumn::Continuous { values, .. } => {
                buf.push(KIND_CONTINUOUS);
                for v in values {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    Ok(buf)
}

pub fn write_columnar<W: Write>(ds: &Dataset, w: &mut W) -> Result<()> {
    let labels = encode_labels(ds.labels())?;
    w.write_all(&COLUMNAR_MAGIC)?;
    w.write_all(&COLUMNAR_VERSION.to_le_bytes())?;
    w.write_all(&to_u32(ds.n_rows(), "row count")?.to_le_bytes())?;
    w.write_all(&to_u32(ds.n_dims(), "column count")?.to_le_bytes())?;
    w.write_all(&to_u32(labels.len(), "label block length")?.to_le_bytes())?;
    let mut bytes = Vec::with_capacity(ds.n_rows() * 4);
    for col in ds.columns() {
        bytes.clear();
        for v in col {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes)?;
    }
    w.write_all(&labels)?;
    let mut names = Vec::new();
    for n in ds.dim_names() {
        put_str(&mut names, n)?;
    }
    w.write_all(&to_u32(names.len(), "names block length")?.to_le_bytes())?;
    w.write_all(&names)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(TourError::TruncatedFile)?;
        if end > self.buf.len() {
            return Err(TourError::TruncatedFile);
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| TourError::Schema("invalid UTF-8 in name".into()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or(TourError::TruncatedFile)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn read_columnar<R: Read>(r: &mut R) -> Result<Dataset> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, pos: 0 };
    let magic = c.take(4).map_err(|_| TourError::BadMagic)?;
    if magic != COLUMNAR_MAGIC {
        return Err(TourError::BadMagic);
    }
    let version = c.u32()?;
    if version != COLUMNAR_VERSION {
        return Err(TourError::VersionUnsupported(version));
    }
    let n = c.u32()? as usize;
    let p = c.u32()? as usize;
    let label_len = c.u32()? as usize;
    if n == 0 {
        return Err(TourError::EmptyDataset);
    }
    let columns = (0..p).map(|_| c.f32s(n)).collect::<Result<Vec<_>>>()?;

    let block = c.take(label_len)?;
    let mut lc = Cursor { buf: block, pos: 0 };
    let mut labels = Vec::new();
    while lc.remaining() > 0 {
        let name = lc.string()?;
        match lc.u8()? {
            KIND_CATEGORICAL => {
                let codes = lc
                    .take(n * 2)?
                    .chunks_exact(2)
                    .map(|b| u16::from_le_bytes([b[0], b[1]]))
                    .collect();
                let count = lc.u32()? as usize;
                let categories = (0..count).map(|_| lc.string()).collect::<Result<Vec<_>>>()?;
                labels.push(LabelColumn::Categorical {
                    name,
                    codes,
                    categories,
                });
            }
            KIND_CONTINUOUS => labels.push(LabelColumn::Continuous {
                name,
                values: lc.f32s(n)?,
            }),
            k => return Err(TourError::Schema(format!("unknown label kind {k}"))),
        }
    }

    let dim_names = if c.remaining() == 0 {
        default_names(p)
    } else {
        let len = c.u32()? as usize;
        let mut nc = Cursor {
            buf: c.take(len)?,
            pos: 0,
        };
        (0..p).map(|_| nc.string()).collect::<Result<Vec<_>>>()?
    };
    Dataset::new(columns, dim_names, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::new(
            vec![vec![1.0, -2.5, 3.25], vec![0.0, f32::MIN_POSITIVE, 7.0]],
            vec!["a".into(), "b".into()],
            vec![
                LabelColumn::Categorical {
                    name: "kind".into(),
                    codes: vec![0, 1, 0],
                    categories: vec!["x".into(), "y".into()],
                },
                LabelColumn::Continuous {
                    name: "score".into(),
                    values: vec![0.5, 0.25, -1.0],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = sample();
        let mut bytes = Vec::new();
        write_columnar(&ds, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"DTC1");
        let back = read_columnar(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn every_truncation_is_reported() {
        let mut bytes = Vec::new();
        write_columnar(&sample(), &mut bytes).unwrap();
        // the names block is optional, so cut inside everything before it
        let names_at = bytes.len() - (4 + 2 * 5);
        for cut in 4..names_at {
            let err = read_columnar(&mut &bytes[..cut]).unwrap_err();
            assert!(matches!(err, TourError::TruncatedFile), "cut {cut}: {err:?}");
        }
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            read_columnar(&mut &b"XXXX\x01\0\0\0"[..]),
            Err(TourError::BadMagic)
        ));
        let mut v = b"DTC1".to_vec();
        v.extend_from_slice(&7u32.to_le_bytes());
        assert!(matches!(
            read_columnar(&mut v.as_slice()),
            Err(TourError::VersionUnsupported(7))
        ));
        let mut v = b"DTC1".to_vec();
        for x in [1u32, 0, 3, 0] {
            v.extend_from_slice(&x.to_le_bytes());
        }
        assert!(matches!(
            read_columnar(&mut v.as_slice()),
            Err(TourError::EmptyDataset)
        ));
    }

    #[test]
    fn names_block_is_optional() {
        let ds = sample().with_labels(Vec::new()).unwrap();
        let mut bytes = Vec::new();
        write_columnar(&ds, &mut bytes).unwrap();
        let bare = &bytes[..bytes.len() - (4 + 2 * 5)];
        let back = read_columnar(&mut &bare[..]).unwrap();
        assert_eq!(back.columns(), ds.columns());
        assert_eq!(back.dim_names(), &["d0", "d1"]);
    }
}
