//! Session wire format.
//!
//! Control messages are JSON text frames tagged by `"type"`; each carries a
//! `seq` number. Bulk messages are binary frames with a 16-byte header
//! (`u32` magic, `u32` kind, `u64` payload length, little-endian) whose
//! payload starts with the `u64` sequence number.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{ColorEncoding, Combine, Mode};
use crate::error::{Result, TourError};
use crate::strategies::RotationAxis;

pub const PROTOCOL_VERSION: u32 = 1;
pub const FRAME_MAGIC: u32 = u32::from_le_bytes(*b"DTF1");
pub const HEADER_LEN: usize = 16;
/// Upper bound on the size of one binary frame, header included.
pub const MAX_FRAME_BYTES: usize = 4 * 1024 * 1024;

pub const KIND_DATA_CHUNK: u32 = 1;
pub const KIND_BASIS: u32 = 2;
pub const KIND_SELECTION: u32 = 3;
pub const KIND_PREVIEWS: u32 = 4;

/// Data-chunk column carrying interleaved `x, y` positions under the 2D
/// colormap's reference keyframe.
pub const REFERENCE_COLUMN: u32 = 0xFFFF_FFFE;

const CHUNK_PREFIX: usize = 40;
const SELECTION_PREFIX: usize = 16;

/// One message on the channel.
#[derive(Clone, Debug, PartialEq)]
pub enum Frame {
    Text(String),
    Binary(Vec<u8>),
}

impl Frame {
    pub fn len(&self) -> usize {
        match self {
            Frame::Text(s) => s.len(),
            Frame::Binary(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    SetT {
        t: f64,
    },
    SetMode {
        mode: Mode,
    },
    Drag {
        dim: usize,
        direction: [f64; 2],
    },
    RotateResidual {
        angle: f64,
        #[serde(default)]
        about: RotationAxis,
    },
    Lasso {
        polygon: Vec<[f64; 2]>,
        #[serde(default)]
        combine: Combine,
    },
    LabelSelect {
        column: String,
        values: Vec<String>,
        #[serde(default)]
        combine: Combine,
    },
    ClearSelection {},
    SetEncoding {
        encoding: ColorEncoding,
    },
    Play {
        speed: f64,
    },
    Pause {},
    RequestPreviews {},
    RequestSnapshot {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        format: Option<String>,
    },
    SetFrameBudget {
        hz: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelMeta {
    pub name: String,
    /// `"categorical"` or `"continuous"`.
    pub kind: String,
    #[serde(default)]
    pub categories: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyframeMeta {
    pub label: String,
    pub loadings: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub protocol: u32,
    pub n: u64,
    pub p: u32,
    pub dim_names: Vec<String>,
    pub labels: Vec<LabelMeta>,
    pub keyframes: Vec<KeyframeMeta>,
    pub segment_lengths: Vec<f64>,
    pub keyframe_positions: Vec<f64>,
    pub total_length: f64,
    pub cyclic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateUpdate {
    pub t: f64,
    pub mode: Mode,
    pub playing: bool,
    pub speed: f64,
    pub encoding: ColorEncoding,
    pub frame_budget_hz: f64,
}

/// One slice of a column. Embedded columns `0..p` are `f32` little-endian;
/// label columns `p..p+L` start with a kind byte (0 = `u16` codes,
/// 1 = `f32` values).
#[derive(Clone, Debug, PartialEq)]
pub struct DataChunk {
    pub column: u32,
    pub part: u32,
    pub parts: u32,
    pub offset: u64,
    pub total_len: u64,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisUpdate {
    pub t: f64,
    /// Row-major p×2.
    pub rows: Vec<[f32; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionUpdate {
    /// `true` when `bytes` is the full mask rather than an XOR delta.
    pub full: bool,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreviewsPayload {
    pub rows: Vec<u32>,
    /// One N'×2 set of positions per keyframe.
    pub positions: Vec<Vec<[f32; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlMessage {
    Hello(Hello),
    State(StateUpdate),
    Error {
        code: String,
        message: String,
        fatal: bool,
    },
    SnapshotWritten {
        path: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ServerMessage {
    Control(ControlMessage),
    DataChunk(DataChunk),
    Basis(BasisUpdate),
    Selection(SelectionUpdate),
    Previews(PreviewsPayload),
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    seq: u64,
    #[serde(flatten)]
    body: T,
}

fn violation(msg: impl Into<String>) -> TourError {
    TourError::ProtocolViolation(msg.into())
}

pub fn encode_client(seq: u64, msg: &ClientMessage) -> Frame {
    Frame::Text(serde_json::to_string(&Envelope { seq, body: msg }).expect("client message serializes"))
}

pub fn decode_client(frame: &Frame) -> Result<(u64, ClientMessage)> {
    let Frame::Text(text) = frame else {
        return Err(violation("clients send text frames only"));
    };
    let mut value: BTreeMap<String, serde_json::Value> =
        serde_json::from_str(text).map_err(|e| violation(format!("malformed JSON: {e}")))?;
    let seq = value
        .remove("seq")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| violation("missing or invalid seq"))?;
    let msg = serde_json::from_value(serde_json::Value::Object(value.into_iter().collect()))
        .map_err(|e| violation(format!("bad message: {e}")))?;
    Ok((seq, msg))
}

fn header(kind: u32, payload_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
    out.extend_from_slice(&FRAME_MAGIC.to_le_bytes());
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&(payload_len as u64).to_le_bytes());
    out
}

pub fn encode_server(seq: u64, msg: &ServerMessage) -> Frame {
    match msg {
        ServerMessage::Control(c) => {
            Frame::Text(serde_json::to_string(&Envelope { seq, body: c }).expect("control message serializes"))
        }
        ServerMessage::DataChunk(c) => {
            let mut out = header(KIND_DATA_CHUNK, CHUNK_PREFIX + c.bytes.len());
            out.extend_from_slice(&seq.to_le_bytes());
            out.extend_from_slice(&c.column.to_le_bytes());
            out.extend_from_slice(&c.part.to_le_bytes());
            out.extend_from_slice(&c.parts.to_le_bytes());
            out.extend_from_slice(&0u32.to_le_bytes());
            out.extend_from_slice(&c.offset.to_le_bytes());
            out.extend_from_slice(&c.total_len.to_le_bytes());
            out.extend_from_slice(&c.bytes);
            Frame::Binary(out)
        }
        ServerMessage::Basis(b) => {
            let mut out = header(KIND_BASIS, 16 + 8 * b.rows.len());
            out.extend_from_slice(&seq.to_le_bytes());
            out.extend_from_slice(&b.t.to_le_bytes());
            for r in &b.rows {
                out.extend_from_slice(&r[0].to_le_bytes());
                out.extend_from_slice(&r[1].to_le_bytes());
            }
            Frame::Binary(out)
        }
        ServerMessage::Selection(s) => {
            let mut out = header(KIND_SELECTION, SELECTION_PREFIX + s.bytes.len());
            out.extend_from_slice(&seq.to_le_bytes());
            out.extend_from_slice(&u32::from(s.full).to_le_bytes());
            out.extend_from_slice(&0u32.to_le_bytes());
            out.extend_from_slice(&s.bytes);
            Frame::Binary(out)
        }
        ServerMessage::Previews(p) => {
            let m = p.rows.len();
            let mut out = header(KIND_PREVIEWS, 16 + 4 * m + 8 * m * p.positions.len());
            out.extend_from_slice(&seq.to_le_bytes());
            out.extend_from_slice(&(p.positions.len() as u32).to_le_bytes());
            out.extend_from_slice(&(m as u32).to_le_bytes());
            for r in &p.rows {
                out.extend_from_slice(&r.to_le_bytes());
            }
            for set in &p.positions {
                for xy in set {
                    out.extend_from_slice(&xy[0].to_le_bytes());
                    out.extend_from_slice(&xy[1].to_le_bytes());
                }
            }
            Frame::Binary(out)
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(violation("binary payload too short"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_server(frame: &Frame) -> Result<(u64, ServerMessage)> {
    let bytes = match frame {
        Frame::Text(text) => {
            let env: Envelope<ControlMessage> =
                serde_json::from_str(text).map_err(|e| violation(format!("bad control message: {e}")))?;
            return Ok((env.seq, ServerMessage::Control(env.body)));
        }
        Frame::Binary(b) => b,
    };
    let mut r = Reader { buf: bytes };
    if r.u32()? != FRAME_MAGIC {
        return Err(violation("bad frame magic"));
    }
    let kind = r.u32()?;
    let len = r.u64()? as usize;
    if r.buf.len() != len {
        return Err(violation(format!("frame declares {len} bytes, carries {}", r.buf.len())));
    }
    let seq = r.u64()?;
    let msg = match kind {
        KIND_DATA_CHUNK => {
            let column = r.u32()?;
            let part = r.u32()?;
            let parts = r.u32()?;
            r.u32()?;
            let offset = r.u64()?;
            let total_len = r.u64()?;
            ServerMessage::DataChunk(DataChunk {
                column,
                part,
                parts,
                offset,
                total_len,
                bytes: r.buf.to_vec(),
            })
        }
        KIND_BASIS => {
            let t = r.f64()?;
            if !r.buf.len().is_multiple_of(8) {
                return Err(violation("basis payload is not a whole number of rows"));
            }
            let mut rows = Vec::with_capacity(r.buf.len() / 8);
            while !r.buf.is_empty() {
                rows.push([r.f32()?, r.f32()?]);
            }
            ServerMessage::Basis(BasisUpdate { t, rows })
        }
        KIND_SELECTION => {
            let full = r.u32()? != 0;
            r.u32()?;
            ServerMessage::Selection(SelectionUpdate {
                full,
                bytes: r.buf.to_vec(),
            })
        }
        KIND_PREVIEWS => {
            let k = r.u32()? as usize;
            let m = r.u32()? as usize;
            let rows = (0..m).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let mut positions = Vec::with_capacity(k);
            for _ in 0..k {
                positions.push((0..m).map(|_| Ok([r.f32()?, r.f32()?])).collect::<Result<Vec<_>>>()?);
            }
            if !r.buf.is_empty() {
                return Err(violation("trailing bytes in previews frame"));
            }
            ServerMessage::Previews(PreviewsPayload { rows, positions })
        }
        other => return Err(violation(format!("unknown frame kind {other}"))),
    };
    Ok((seq, msg))
}

/// Splits one column payload into chunks whose encoded frames stay within
/// `max_frame` bytes.
pub fn chunk_column(column: u32, bytes: &[u8], max_frame: usize) -> Vec<DataChunk> {
    let room = max_frame.saturating_sub(HEADER_LEN + CHUNK_PREFIX).max(1);
    let pieces: Vec<&[u8]> = if bytes.is_empty() {
        vec![&[][..]]
    } else {
        bytes.chunks(room).collect()
    };
    let parts = pieces.len() as u32;
    let mut offset = 0u64;
    pieces
        .into_iter()
        .enumerate()
        .map(|(i, piece)| {
            let c = DataChunk {
                column,
                part: i as u32,
                parts,
                offset,
                total_len: bytes.len() as u64,
                bytes: piece.to_vec(),
            };
            offset += piece.len() as u64;
            c
        })
        .collect()
}

/// Reassembles columns from in-order chunks.
#[derive(Debug, Default)]
pub struct ChunkAssembler {
    pending: BTreeMap<u32, (u32, Vec<u8>)>,
}

impl ChunkAssembler {
    /// Adds one chunk; returns the column payload once its last part arrives.
    pub fn push(&mut self, chunk: DataChunk) -> Result<Option<(u32, Vec<u8>)>> {
        let entry = self
            .pending
            .entry(chunk.column)
            .or_insert_with(|| (0, Vec::with_capacity(chunk.total_len as usize)));
        if chunk.part != entry.0 || chunk.offset != entry.1.len() as u64 {
            return Err(violation(format!(
                "column {} chunk {} out of order",
                chunk.column, chunk.part
            )));
        }
        entry.0 += 1;
        entry.1.extend_from_slice(&chunk.bytes);
        if entry.0 == chunk.parts {
            let (_, bytes) = self.pending.remove(&chunk.column).expect("entry present");
            if bytes.len() as u64 != chunk.total_len {
                return Err(violation("reassembled column has the wrong length"));
            }
            return Ok(Some((chunk.column, bytes)));
        }
        Ok(None)
    }

    pub fn is_idle(&self) -> bool {
        self.pending.is_empty()
    }
}
