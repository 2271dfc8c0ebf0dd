use std::collections::VecDeque;
use std::path::PathBuf;

use super::protocol::*;
use crate::dataio::LabelColumn;
use crate::engine::{Engine, Mode, Selection, SnapshotFormat};
use crate::error::{Result, TourError};
use crate::strategies::{DragOutcome, DragTarget};

pub const DEFAULT_FRAME_BUDGET_HZ: f64 = 120.0;
const LOG_CAPACITY: usize = 1 << 20;

#[derive(Clone, Debug)]
pub struct SessionOptions {
    pub frame_budget_hz: f64,
    /// Where `request_snapshot` writes; `None` disables snapshots.
    pub snapshot_dir: Option<PathBuf>,
    pub max_frame_bytes: usize,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            frame_budget_hz: DEFAULT_FRAME_BUDGET_HZ,
            snapshot_dir: None,
            max_frame_bytes: MAX_FRAME_BYTES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Inbound,
    Outbound,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogEntry {
    pub direction: Direction,
    pub kind: &'static str,
    pub seq: u64,
    pub bytes: usize,
}

/// Sizes and kinds of recent frames in both directions.
#[derive(Clone, Debug, Default)]
pub struct ProtocolLog {
    entries: VecDeque<LogEntry>,
}

impl ProtocolLog {
    fn record(&mut self, entry: LogEntry) {
        if self.entries.len() == LOG_CAPACITY {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn entries(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter()
    }

    pub fn outbound_of(&self, kind: &str) -> impl Iterator<Item = &LogEntry> + '_ {
        let kind = kind.to_string();
        self.entries
            .iter()
            .filter(move |e| e.direction == Direction::Outbound && e.kind == kind)
    }
}

fn server_kind(msg: &ServerMessage) -> &'static str {
    match msg {
        ServerMessage::Control(ControlMessage::Hello(_)) => "hello",
        ServerMessage::Control(ControlMessage::State(_)) => "state",
        ServerMessage::Control(ControlMessage::Error { .. }) => "error",
        ServerMessage::Control(ControlMessage::SnapshotWritten { .. }) => "snapshot_written",
        ServerMessage::DataChunk(_) => "data_chunk",
        ServerMessage::Basis(_) => "basis",
        ServerMessage::Selection(_) => "selection",
        ServerMessage::Previews(_) => "previews",
    }
}

fn client_kind(msg: &ClientMessage) -> &'static str {
    match msg {
        ClientMessage::SetT { .. } => "set_t",
        ClientMessage::SetMode { .. } => "set_mode",
        ClientMessage::Drag { .. } => "drag",
        ClientMessage::RotateResidual { .. } => "rotate_residual",
        ClientMessage::Lasso { .. } => "lasso",
        ClientMessage::LabelSelect { .. } => "label_select",
        ClientMessage::ClearSelection {} => "clear_selection",
        ClientMessage::SetEncoding { .. } => "set_encoding",
        ClientMessage::Play { .. } => "play",
        ClientMessage::Pause {} => "pause",
        ClientMessage::RequestPreviews {} => "request_previews",
        ClientMessage::RequestSnapshot { .. } => "request_snapshot",
        ClientMessage::SetFrameBudget { .. } => "set_frame_budget",
    }
}

/// Encodes a label column as a data-chunk payload.
pub fn label_payload(label: &LabelColumn) -> Vec<u8> {
    match label {
        LabelColumn::Categorical { codes, .. } => {
            let mut out = Vec::with_capacity(1 + 2 * codes.len());
            out.push(0);
            codes.iter().for_each(|c| out.extend_from_slice(&c.to_le_bytes()));
            out
        }
        LabelColumn::Continuous { values, .. } => {
            let mut out = Vec::with_capacity(1 + 4 * values.len());
            out.push(1);
            values.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
            out
        }
    }
}

fn f32_payload(values: impl Iterator<Item = f32>) -> Vec<u8> {
    values.flat_map(f32::to_le_bytes).collect()
}

/// Transport-independent server side of one client connection.
#[derive(Debug)]
pub struct Session {
    engine: Engine,
    options: SessionOptions,
    out_seq: u64,
    last_client_seq: Option<u64>,
    sent_selection: Selection,
    basis_dirty: bool,
    since_basis: f64,
    closed: bool,
    log: ProtocolLog,
}

impl Session {
    pub fn new(engine: Engine, options: SessionOptions) -> Self {
        let sent_selection = engine.state().selection.clone();
        Self {
            engine,
            options,
            out_seq: 0,
            last_client_seq: None,
            sent_selection,
            basis_dirty: false,
            since_basis: f64::INFINITY,
            closed: false,
            log: ProtocolLog::default(),
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn log(&self) -> &ProtocolLog {
        &self.log
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn emit(&mut self, msg: ServerMessage, out: &mut Vec<Frame>) {
        self.out_seq += 1;
        let frame = encode_server(self.out_seq, &msg);
        self.log.record(LogEntry {
            direction: Direction::Outbound,
            kind: server_kind(&msg),
            seq: self.out_seq,
            bytes: frame.len(),
        });
        out.push(frame);
    }

    fn emit_column(&mut self, column: u32, bytes: &[u8], out: &mut Vec<Frame>) {
        for chunk in chunk_column(column, bytes, self.options.max_frame_bytes) {
            self.emit(ServerMessage::DataChunk(chunk), out);
        }
    }

    fn emit_basis(&mut self, out: &mut Vec<Frame>) {
        let state = self.engine.state();
        let msg = ServerMessage::Basis(BasisUpdate {
            t: state.t,
            rows: state
                .current_basis
                .rows()
                .iter()
                .map(|r| [r[0] as f32, r[1] as f32])
                .collect(),
        });
        self.emit(msg, out);
        self.basis_dirty = false;
        self.since_basis = 0.0;
    }

    fn emit_state(&mut self, out: &mut Vec<Frame>) {
        let s = self.engine.state();
        let msg = ControlMessage::State(StateUpdate {
            t: s.t,
            mode: s.mode,
            playing: s.playback.playing,
            speed: s.playback.speed,
            encoding: s.color_encoding.clone(),
            frame_budget_hz: self.options.frame_budget_hz,
        });
        self.emit(ServerMessage::Control(msg), out);
    }

    fn emit_error(&mut self, err: &TourError, fatal: bool, out: &mut Vec<Frame>) {
        let msg = ControlMessage::Error {
            code: err.code().to_string(),
            message: err.to_string(),
            fatal,
        };
        self.emit(ServerMessage::Control(msg), out);
        if fatal {
            self.closed = true;
        }
    }

    fn emit_selection_delta(&mut self, out: &mut Vec<Frame>) {
        let current = self.engine.state().selection.clone();
        if current != self.sent_selection {
            let bytes = current.xor_bytes(&self.sent_selection);
            self.emit(ServerMessage::Selection(SelectionUpdate { full: false, bytes }), out);
            self.sent_selection = current;
        }
    }

    /// Hello, the full dataset as column chunks, then the initial state and basis.
    pub fn open(&mut self) -> Vec<Frame> {
        let mut out = Vec::new();
        let ds = self.engine.shared_dataset();
        let path = self.engine.path();
        let hello = Hello {
            protocol: PROTOCOL_VERSION,
            n: ds.n_rows() as u64,
            p: ds.n_dims() as u32,
            dim_names: ds.dim_names().to_vec(),
            labels: ds
                .labels()
                .iter()
                .map(|l| match l {
                    LabelColumn::Categorical { name, categories, .. } => LabelMeta {
                        name: name.clone(),
                        kind: "categorical".into(),
                        categories: categories.clone(),
                    },
                    LabelColumn::Continuous { name, .. } => LabelMeta {
                        name: name.clone(),
                        kind: "continuous".into(),
                        categories: Vec::new(),
                    },
                })
                .collect(),
            keyframes: path
                .sequence()
                .keyframes()
                .iter()
                .map(|k| KeyframeMeta {
                    label: k.label.clone(),
                    loadings: k.loadings.clone(),
                })
                .collect(),
            segment_lengths: path.segment_lengths().to_vec(),
            keyframe_positions: path.keyframe_positions(),
            total_length: path.total_length(),
            cyclic: path.cyclic(),
        };
        self.emit(ServerMessage::Control(ControlMessage::Hello(hello)), &mut out);
        for (j, col) in ds.columns().iter().enumerate() {
            self.emit_column(j as u32, &f32_payload(col.iter().copied()), &mut out);
        }
        for (i, label) in ds.labels().iter().enumerate() {
            self.emit_column((ds.n_dims() + i) as u32, &label_payload(label), &mut out);
        }
        self.emit_state(&mut out);
        self.emit_basis(&mut out);
        out
    }

    /// Processes one inbound frame. Protocol violations produce a fatal
    /// error and close the session; engine errors are reported and survived.
    pub fn handle(&mut self, frame: &Frame) -> Vec<Frame> {
        let mut out = Vec::new();
        if self.closed {
            return out;
        }
        let (seq, msg) = match decode_client(frame) {
            Ok(v) => v,
            Err(e) => {
                self.log.record(LogEntry {
                    direction: Direction::Inbound,
                    kind: "invalid",
                    seq: 0,
                    bytes: frame.len(),
                });
                self.emit_error(&e, true, &mut out);
                return out;
            }
        };
        self.log.record(LogEntry {
            direction: Direction::Inbound,
            kind: client_kind(&msg),
            seq,
            bytes: frame.len(),
        });
        if self.last_client_seq.is_some_and(|last| seq <= last) {
            let e = TourError::ProtocolViolation(format!("sequence number {seq} is not increasing"));
            self.emit_error(&e, true, &mut out);
            return out;
        }
        self.last_client_seq = Some(seq);
        if let Err(e) = self.dispatch(msg, &mut out) {
            let fatal = matches!(e, TourError::ProtocolViolation(_));
            self.emit_error(&e, fatal, &mut out);
        }
        self.emit_selection_delta(&mut out);
        out
    }

    fn dispatch(&mut self, msg: ClientMessage, out: &mut Vec<Frame>) -> Result<()> {
        match msg {
            ClientMessage::SetT { t } => {
                let mode = self.engine.state().mode;
                self.engine.scrub(t)?;
                self.basis_dirty = true;
                if mode != self.engine.state().mode {
                    self.emit_state(out);
                }
            }
            ClientMessage::SetMode { mode } => {
                self.engine.set_mode(mode)?;
                if mode == Mode::Manual {
                    self.basis_dirty = true;
                }
                self.emit_state(out);
            }
            ClientMessage::Drag { dim, direction } => {
                let target = DragTarget::clamped(dim, direction);
                let entering = self.engine.state().mode != Mode::Manual;
                if let DragOutcome::Updated(_) = self.engine.drag(target)? {
                    self.basis_dirty = true;
                }
                if entering {
                    self.emit_state(out);
                }
            }
            ClientMessage::RotateResidual { angle, about } => {
                let entering = self.engine.state().mode != Mode::Manual;
                self.engine.rotate_residual(angle, about)?;
                self.basis_dirty = true;
                if entering {
                    self.emit_state(out);
                }
            }
            ClientMessage::Lasso { polygon, combine } => self.engine.lasso(&polygon, combine)?,
            ClientMessage::LabelSelect {
                column,
                values,
                combine,
            } => self.engine.label_select(&column, &values, combine)?,
            ClientMessage::ClearSelection {} => self.engine.clear_selection(),
            ClientMessage::SetEncoding { encoding } => {
                self.engine.set_encoding(encoding)?;
                self.emit_state(out);
                if let crate::engine::ColorEncoding::Twod { reference } = self.engine.state().color_encoding {
                    let proj = self.engine.reference_positions(reference)?;
                    let bytes = f32_payload(proj.xy.iter().flat_map(|p| [p[0], p[1]]));
                    self.emit_column(REFERENCE_COLUMN, &bytes, out);
                }
            }
            ClientMessage::Play { speed } => {
                self.engine.play(speed)?;
                self.emit_state(out);
            }
            ClientMessage::Pause {} => {
                self.engine.pause();
                self.emit_state(out);
            }
            ClientMessage::RequestPreviews {} => {
                let previews = self.engine.previews()?;
                let payload = PreviewsPayload {
                    rows: previews.rows.iter().map(|&r| r as u32).collect(),
                    positions: previews.projections.into_iter().map(|p| p.xy).collect(),
                };
                self.emit(ServerMessage::Previews(payload), out);
            }
            ClientMessage::RequestSnapshot { name, format } => {
                let dir = self
                    .options
                    .snapshot_dir
                    .clone()
                    .ok_or_else(|| TourError::InvalidArgument("snapshots are disabled".into()))?;
                let name = name.unwrap_or_else(|| format!("snapshot-{}.csv", self.out_seq + 1));
                if name.is_empty()
                    || name.starts_with('.')
                    || !name.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c))
                {
                    return Err(TourError::InvalidArgument(format!("bad snapshot name '{name}'")));
                }
                let path = dir.join(&name);
                let format = match format {
                    Some(f) => f.parse()?,
                    None => SnapshotFormat::from_path(&path),
                };
                self.engine.snapshot(&path, format)?;
                let msg = ControlMessage::SnapshotWritten {
                    path: path.display().to_string(),
                };
                self.emit(ServerMessage::Control(msg), out);
            }
            ClientMessage::SetFrameBudget { hz } => {
                if !(hz.is_finite() && hz > 0.0) {
                    return Err(TourError::InvalidArgument(format!("frame budget {hz}")));
                }
                self.options.frame_budget_hz = hz;
                self.emit_state(out);
            }
        }
        Ok(())
    }

    /// Advances time by `dt` seconds and emits a basis update if one is due
    /// under the frame budget.
    pub fn advance(&mut self, dt: f64) -> Vec<Frame> {
        let mut out = Vec::new();
        if self.closed {
            return out;
        }
        match self.engine.tick(dt) {
            Ok(changed) => self.basis_dirty |= changed,
            Err(e) => self.emit_error(&e, false, &mut out),
        }
        self.since_basis += dt;
        if self.basis_dirty && self.since_basis >= 1.0 / self.options.frame_budget_hz {
            self.emit_basis(&mut out);
        }
        out
    }

    /// Emits any pending basis update immediately.
    pub fn flush(&mut self) -> Vec<Frame> {
        let mut out = Vec::new();
        if self.basis_dirty && !self.closed {
            self.emit_basis(&mut out);
        }
        out
    }

    /// Seconds until the next frame-budget slot.
    pub fn frame_interval(&self) -> f64 {
        1.0 / self.options.frame_budget_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Dataset;
    use crate::engine::EngineOptions;
    use crate::geometry::{orthonormality_drift, Basis};
    use crate::tourpath::{Keyframe, KeyframeSequence, TourPath};

    fn session(n: usize) -> Session {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin(), t.cos(), (2.0 * t).sin(), (0.5 * t).cos()]
            })
            .collect();
        let ds = Dataset::from_rows(&rows).unwrap();
        let kfs = [(0, 1), (1, 2), (2, 3)]
            .iter()
            .map(|&(a, b)| Keyframe::new(Basis::canonical(4, a, b).unwrap(), format!("e{a}e{b}")))
            .collect();
        let path = TourPath::compile(KeyframeSequence::new(kfs, true).unwrap()).unwrap();
        Session::new(Engine::new(ds, path, EngineOptions::default()).unwrap(), SessionOptions::default())
    }

    fn send(s: &mut Session, seq: u64, msg: ClientMessage) -> Vec<(u64, ServerMessage)> {
        s.handle(&encode_client(seq, &msg))
            .iter()
            .map(|f| decode_server(f).unwrap())
            .collect()
    }

    #[test]
    fn open_starts_with_hello() {
        let mut s = session(50);
        let frames: Vec<_> = s.open().iter().map(|f| decode_server(f).unwrap()).collect();
        let ServerMessage::Control(ControlMessage::Hello(h)) = &frames[0].1 else {
            panic!("hello first")
        };
        assert_eq!((h.n, h.p, h.keyframes.len()), (50, 4, 3));
        let sum: f64 = h.segment_lengths.iter().sum();
        assert!((sum - h.total_length).abs() < 1e-6);
        let chunks = frames.iter().filter(|(_, m)| matches!(m, ServerMessage::DataChunk(_))).count();
        assert_eq!(chunks, 4);
        assert!(frames.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(matches!(frames.last().unwrap().1, ServerMessage::Basis(_)));
    }

    #[test]
    fn set_t_is_coalesced() {
        let mut s = session(20);
        s.open();
        for (i, t) in [0.1, 0.2, 0.25].into_iter().enumerate() {
            assert!(send(&mut s, i as u64 + 1, ClientMessage::SetT { t }).is_empty());
        }
        let out: Vec<_> = s.flush().iter().map(|f| decode_server(f).unwrap().1).collect();
        let [ServerMessage::Basis(b)] = &out[..] else {
            panic!("one basis update")
        };
        assert_eq!(b.t, 0.25);
        let rows: Vec<[f64; 2]> = b.rows.iter().map(|r| [r[0] as f64, r[1] as f64]).collect();
        assert!(orthonormality_drift(&rows) < 1e-6);
        assert!(s.flush().is_empty());
    }

    #[test]
    fn advance_respects_budget() {
        let mut s = session(20);
        s.open();
        send(&mut s, 1, ClientMessage::Play { speed: 0.1 });
        let emitted: usize = (0..100).map(|_| s.advance(0.001).len()).sum();
        assert!((8..=13).contains(&emitted), "{emitted}");
    }

    #[test]
    fn malformed_closes() {
        let mut s = session(10);
        s.open();
        let out = s.handle(&Frame::Text("{\"seq\":1,\"type\":\"bogus\"}".into()));
        let (_, ServerMessage::Control(ControlMessage::Error { fatal: true, .. })) = decode_server(&out[0]).unwrap()
        else {
            panic!("fatal error")
        };
        assert!(s.is_closed());
        assert!(s.handle(&encode_client(2, &ClientMessage::Pause {})).is_empty());
    }

    #[test]
    fn stale_seq_closes() {
        let mut s = session(10);
        s.open();
        send(&mut s, 5, ClientMessage::Pause {});
        send(&mut s, 5, ClientMessage::Pause {});
        assert!(s.is_closed());
    }

    #[test]
    fn engine_errors_are_not_fatal() {
        let mut s = session(10);
        s.open();
        let out = send(
            &mut s,
            1,
            ClientMessage::Lasso {
                polygon: vec![[0.0, 0.0]],
                combine: Default::default(),
            },
        );
        let [(_, ServerMessage::Control(ControlMessage::Error { code, fatal: false, .. }))] = &out[..] else {
            panic!("{out:?}")
        };
        assert_eq!(code, "bad_polygon");
        assert!(!s.is_closed());
    }

    #[test]
    fn lasso_sends_delta() {
        let mut s = session(40);
        s.open();
        let square = vec![[-5.0, -5.0], [5.0, -5.0], [5.0, 5.0], [-5.0, 5.0]];
        let out = send(
            &mut s,
            1,
            ClientMessage::Lasso {
                polygon: square,
                combine: Default::default(),
            },
        );
        let [(_, ServerMessage::Selection(sel))] = &out[..] else {
            panic!("{out:?}")
        };
        assert!(!sel.full);
        let mask = Selection::from_bytes(40, &sel.bytes).unwrap();
        assert_eq!(mask.count(), 40);
        let out = send(&mut s, 2, ClientMessage::ClearSelection {});
        let [(_, ServerMessage::Selection(sel))] = &out[..] else {
            panic!("{out:?}")
        };
        assert_eq!(Selection::from_bytes(40, &sel.bytes).unwrap().count(), 40);
    }

    #[test]
    fn snapshot_names_are_sanitized() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = session(10);
        s.options.snapshot_dir = Some(dir.path().to_path_buf());
        s.open();
        let bad = send(
            &mut s,
            1,
            ClientMessage::RequestSnapshot {
                name: Some("../escape.csv".into()),
                format: None,
            },
        );
        assert!(matches!(bad[0].1, ServerMessage::Control(ControlMessage::Error { .. })));
        let ok = send(
            &mut s,
            2,
            ClientMessage::RequestSnapshot {
                name: Some("view.csv".into()),
                format: None,
            },
        );
        assert!(matches!(ok[0].1, ServerMessage::Control(ControlMessage::SnapshotWritten { .. })));
        assert!(dir.path().join("view.csv").exists());
    }
}
