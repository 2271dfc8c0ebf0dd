//! End-to-end session over a real socket.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use dtour::dataio::Dataset;
use dtour::geometry::{orthonormality_drift, Basis};
use dtour::service::protocol::*;
use dtour::service::{ServeOptions, Server};
use dtour::tourpath::{Keyframe, KeyframeSequence, TourPath};
use dtour::TourError;
use tungstenite::{Message, WebSocket};

fn fixture() -> (Dataset, TourPath) {
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|i| {
            let t = i as f64 * 0.05;
            vec![t.sin(), t.cos(), (3.0 * t).sin(), 0.1 * t, (0.7 * t).cos()]
        })
        .collect();
    let ds = Dataset::from_rows(&rows).unwrap();
    let kfs = [(0, 1), (1, 2), (2, 3), (3, 4)]
        .iter()
        .map(|&(a, b)| Keyframe::new(Basis::canonical(5, a, b).unwrap(), format!("{a}-{b}")))
        .collect();
    (ds, TourPath::compile(KeyframeSequence::new(kfs, true).unwrap()).unwrap())
}

struct Running {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Drop for Running {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
    }
}

fn start() -> Running {
    let (ds, path) = fixture();
    let opts = ServeOptions {
        addr: "127.0.0.1:0".into(),
        ..ServeOptions::default()
    };
    let server = Server::bind(ds, path, opts).unwrap();
    let addr = server.local_addr().unwrap();
    let stop = Arc::new(AtomicBool::new(false));
    let s = stop.clone();
    let handle = thread::spawn(move || server.run_until(s).unwrap());
    Running {
        addr,
        stop,
        handle: Some(handle),
    }
}

fn connect(addr: SocketAddr) -> WebSocket<tungstenite::stream::MaybeTlsStream<TcpStream>> {
    let (ws, _) = tungstenite::connect(format!("ws://{addr}/ws")).unwrap();
    if let tungstenite::stream::MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    }
    ws
}

fn next(ws: &mut WebSocket<tungstenite::stream::MaybeTlsStream<TcpStream>>) -> Option<(u64, ServerMessage)> {
    loop {
        match ws.read() {
            Ok(Message::Text(t)) => return Some(decode_server(&Frame::Text(t.to_string())).unwrap()),
            Ok(Message::Binary(b)) => return Some(decode_server(&Frame::Binary(b.to_vec())).unwrap()),
            Ok(Message::Close(_)) | Err(_) => return None,
            Ok(_) => continue,
        }
    }
}

fn send(ws: &mut WebSocket<tungstenite::stream::MaybeTlsStream<TcpStream>>, seq: u64, msg: &ClientMessage) {
    let Frame::Text(text) = encode_client(seq, msg) else {
        unreachable!()
    };
    ws.send(Message::text(text)).unwrap();
}

#[test]
fn connect_scrub_and_close() {
    let server = start();
    let mut ws = connect(server.addr);

    let (first_seq, ServerMessage::Control(ControlMessage::Hello(hello))) = next(&mut ws).unwrap() else {
        panic!("hello must come first")
    };
    assert_eq!((hello.n, hello.p, hello.keyframes.len()), (300, 5, 4));
    let sum: f64 = hello.segment_lengths.iter().sum();
    assert!((sum - hello.total_length).abs() < 1e-6);

    let mut asm = ChunkAssembler::default();
    let mut columns = Vec::new();
    let mut last_seq = first_seq;
    loop {
        let (seq, msg) = next(&mut ws).unwrap();
        assert!(seq > last_seq);
        last_seq = seq;
        match msg {
            ServerMessage::DataChunk(c) => columns.extend(asm.push(c).unwrap()),
            ServerMessage::Basis(_) => break,
            ServerMessage::Control(ControlMessage::State(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(columns.len(), 5);
    let (ds, _) = fixture();
    for (j, bytes) in columns {
        let col: Vec<f32> = bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        assert_eq!(col, ds.column(j as usize));
    }

    send(&mut ws, 1, &ClientMessage::SetT { t: 0.25 });
    let basis = loop {
        match next(&mut ws).unwrap() {
            (_, ServerMessage::Basis(b)) => break b,
            _ => continue,
        }
    };
    assert_eq!(basis.t, 0.25);
    let rows: Vec<[f64; 2]> = basis.rows.iter().map(|r| [r[0] as f64, r[1] as f64]).collect();
    assert!(orthonormality_drift(&rows) < 1e-6);

    let second = tungstenite::connect(format!("ws://{}/ws", server.addr));
    match second {
        Err(tungstenite::Error::Http(resp)) => assert_eq!(resp.status().as_u16(), 409),
        other => panic!("second client should be refused, got {:?}", other.map(|_| ())),
    }

    ws.send(Message::text("{\"seq\":2,\"type\":\"teleport\"}")).unwrap();
    let mut saw_fatal = false;
    while let Some((_, msg)) = next(&mut ws) {
        if let ServerMessage::Control(ControlMessage::Error { fatal, code, .. }) = msg {
            assert!(fatal);
            assert_eq!(code, "protocol_violation");
            saw_fatal = true;
        }
    }
    assert!(saw_fatal);
}

#[test]
fn http_serves_placeholder() {
    let server = start();
    let mut s = TcpStream::connect(server.addr).unwrap();
    s.write_all(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n").unwrap();
    let mut body = String::new();
    s.read_to_string(&mut body).unwrap();
    assert!(body.starts_with("HTTP/1.1 200"));
    assert!(body.contains("<html"));

    let mut s = TcpStream::connect(server.addr).unwrap();
    s.write_all(b"GET /../../etc/passwd HTTP/1.1\r\nHost: x\r\n\r\n").unwrap();
    let mut body = String::new();
    s.read_to_string(&mut body).unwrap();
    assert!(body.starts_with("HTTP/1.1 404"));
}

#[test]
fn port_in_use_is_bind_failure() {
    let server = start();
    let (ds, path) = fixture();
    let opts = ServeOptions {
        addr: server.addr.to_string(),
        ..ServeOptions::default()
    };
    assert!(matches!(Server::bind(ds, path, opts), Err(TourError::BindFailure { .. })));
}
