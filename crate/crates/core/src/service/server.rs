use std::io::{ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use tungstenite::{Message, WebSocket};

use super::protocol::Frame;
use super::session::{Session, SessionOptions};
use crate::dataio::Dataset;
use crate::engine::{Engine, EngineOptions};
use crate::error::{Result, TourError};
use crate::tourpath::TourPath;

const PLACEHOLDER_INDEX: &str = include_str!("../../assets/placeholder.html");
const MAX_REQUEST_HEAD: usize = 16 * 1024;
const ACCEPT_POLL: Duration = Duration::from_millis(20);

#[derive(Clone, Debug)]
pub struct ServeOptions {
    pub addr: String,
    /// Static UI bundle; a built-in placeholder page is served when absent.
    pub ui_dir: Option<PathBuf>,
    pub engine: EngineOptions,
    pub session: SessionOptions,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:7700".into(),
            ui_dir: None,
            engine: EngineOptions::default(),
            session: SessionOptions::default(),
        }
    }
}

struct Shared {
    dataset: Arc<Dataset>,
    path: TourPath,
    options: ServeOptions,
    client_active: AtomicBool,
    stop: Arc<AtomicBool>,
}

/// A bound session endpoint. HTTP requests serve the UI; one WebSocket
/// client at a time drives a [`Session`].
pub struct Server {
    listener: TcpListener,
    shared: Arc<Shared>,
}

impl Server {
    pub fn bind(dataset: impl Into<Arc<Dataset>>, path: TourPath, options: ServeOptions) -> Result<Self> {
        let dataset = dataset.into();
        Engine::new(dataset.clone(), path.clone(), options.engine.clone())?;
        let listener = TcpListener::bind(&options.addr).map_err(|source| TourError::BindFailure {
            addr: options.addr.clone(),
            source,
        })?;
        Ok(Self {
            listener,
            shared: Arc::new(Shared {
                dataset,
                path,
                options,
                client_active: AtomicBool::new(false),
                stop: Arc::new(AtomicBool::new(false)),
            }),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Blocks until the process is interrupted.
    pub fn run(self) -> Result<()> {
        let stop = self.shared.stop.clone();
        self.run_until(stop)
    }

    /// Serves until `stop` becomes true.
    pub fn run_until(self, stop: Arc<AtomicBool>) -> Result<()> {
        self.listener.set_nonblocking(true)?;
        info!("listening on {}", self.local_addr()?);
        let mut workers = Vec::new();
        while !stop.load(Ordering::Relaxed) {
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    debug!("connection from {peer}");
                    let shared = self.shared.clone();
                    let stop = stop.clone();
                    workers.push(thread::spawn(move || {
                        if let Err(e) = handle_connection(stream, &shared, &stop) {
                            debug!("connection from {peer} ended: {e}");
                        }
                    }));
                    workers.retain(|w: &thread::JoinHandle<()>| !w.is_finished());
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
                Err(e) => return Err(e.into()),
            }
        }
        for w in workers {
            let _ = w.join();
        }
        Ok(())
    }
}

/// Binds and serves until interrupted.
pub fn serve(dataset: impl Into<Arc<Dataset>>, path: TourPath, options: ServeOptions) -> Result<()> {
    Server::bind(dataset, path, options)?.run()
}

struct RequestHead {
    method: String,
    target: String,
    websocket: bool,
}

fn peek_request(stream: &TcpStream) -> Result<Option<RequestHead>> {
    let mut buf = vec![0u8; MAX_REQUEST_HEAD];
    let deadline = Instant::now() + Duration::from_secs(5);
    loop {
        let n = stream.peek(&mut buf)?;
        if n == 0 {
            return Ok(None);
        }
        let mut headers = [httparse::EMPTY_HEADER; 64];
        let mut req = httparse::Request::new(&mut headers);
        match req.parse(&buf[..n]) {
            Ok(httparse::Status::Complete(_)) => {
                let websocket = req.headers.iter().any(|h| {
                    h.name.eq_ignore_ascii_case("upgrade")
                        && std::str::from_utf8(h.value).is_ok_and(|v| v.trim().eq_ignore_ascii_case("websocket"))
                });
                return Ok(Some(RequestHead {
                    method: req.method.unwrap_or("GET").to_string(),
                    target: req.path.unwrap_or("/").to_string(),
                    websocket,
                }));
            }
            Ok(httparse::Status::Partial) if n < buf.len() && Instant::now() < deadline => {
                thread::sleep(Duration::from_millis(5));
            }
            Ok(httparse::Status::Partial) => return Ok(None),
            Err(e) => return Err(TourError::ProtocolViolation(format!("bad HTTP request: {e}"))),
        }
    }
}

fn handle_connection(stream: TcpStream, shared: &Shared, stop: &AtomicBool) -> Result<()> {
    stream.set_nonblocking(false)?;
    let Some(head) = peek_request(&stream)? else {
        return Ok(());
    };
    if !head.websocket {
        return serve_static(stream, &head, shared.options.ui_dir.as_deref());
    }
    if shared.client_active.swap(true, Ordering::AcqRel) {
        let mut stream = stream;
        drain_head(&mut stream)?;
        return respond(&mut stream, "409 Conflict", "text/plain", b"a client is already connected\n", true);
    }
    let result = run_session(stream, shared, stop);
    shared.client_active.store(false, Ordering::Release);
    result
}

fn run_session(stream: TcpStream, shared: &Shared, stop: &AtomicBool) -> Result<()> {
    let mut ws = tungstenite::accept(stream).map_err(|e| TourError::ProtocolViolation(format!("handshake: {e}")))?;
    let engine = Engine::new(shared.dataset.clone(), shared.path.clone(), shared.options.engine.clone())?;
    let mut session = Session::new(engine, shared.options.session.clone());
    send_all(&mut ws, session.open())?;
    let mut last = Instant::now();
    loop {
        let interval = Duration::from_secs_f64(session.frame_interval().clamp(0.001, 0.1));
        ws.get_ref().set_read_timeout(Some(interval))?;
        let reply = match ws.read() {
            Ok(Message::Text(text)) => session.handle(&Frame::Text(text.to_string())),
            Ok(Message::Binary(bytes)) => session.handle(&Frame::Binary(bytes.to_vec())),
            Ok(Message::Close(_)) => break,
            Ok(_) => Vec::new(),
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                Vec::new()
            }
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => break,
            Err(e) => return Err(TourError::ProtocolViolation(e.to_string())),
        };
        send_all(&mut ws, reply)?;
        let now = Instant::now();
        send_all(&mut ws, session.advance((now - last).as_secs_f64()))?;
        last = now;
        if session.is_closed() || stop.load(Ordering::Relaxed) {
            let _ = ws.close(None);
            let _ = ws.flush();
            break;
        }
    }
    Ok(())
}

fn send_all(ws: &mut WebSocket<TcpStream>, frames: Vec<Frame>) -> Result<()> {
    if frames.is_empty() {
        return Ok(());
    }
    for frame in frames {
        let msg = match frame {
            Frame::Text(t) => Message::text(t),
            Frame::Binary(b) => Message::binary(b),
        };
        ws.write(msg).map_err(ws_error)?;
    }
    ws.flush().map_err(ws_error)
}

fn ws_error(e: tungstenite::Error) -> TourError {
    match e {
        tungstenite::Error::Io(io) => TourError::Io(io),
        other => TourError::ProtocolViolation(other.to_string()),
    }
}

fn drain_head(stream: &mut TcpStream) -> Result<()> {
    let mut buf = vec![0u8; MAX_REQUEST_HEAD];
    let n = stream.peek(&mut buf)?;
    let end = buf[..n]
        .windows(4)
        .position(|w| w == b"\r\n\r\n")
        .map_or(n, |p| p + 4);
    stream.read_exact(&mut buf[..end])?;
    Ok(())
}

fn respond(stream: &mut TcpStream, status: &str, content_type: &str, body: &[u8], with_body: bool) -> Result<()> {
    let head = format!(
        "HTTP/1.1 {status}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes())?;
    if with_body {
        stream.write_all(body)?;
    }
    stream.flush()?;
    Ok(())
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("wasm") => "application/wasm",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

/// Maps a request target onto a file under `root`, refusing anything that
/// would leave it.
fn resolve_static(root: &Path, target: &str) -> Option<PathBuf> {
    let path = target.split(['?', '#']).next().unwrap_or("/");
    let rel = Path::new(path.trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    let mut full = root.join(rel);
    if full.is_dir() {
        full.push("index.html");
    }
    let root = root.canonicalize().ok()?;
    let full = full.canonicalize().ok()?;
    full.starts_with(&root).then_some(full)
}

fn serve_static(mut stream: TcpStream, head: &RequestHead, ui_dir: Option<&Path>) -> Result<()> {
    drain_head(&mut stream)?;
    let with_body = head.method != "HEAD";
    if head.method != "GET" && head.method != "HEAD" {
        return respond(&mut stream, "405 Method Not Allowed", "text/plain", b"method not allowed\n", with_body);
    }
    let is_index = matches!(head.target.split('?').next(), Some("/" | "/index.html"));
    if let Some(root) = ui_dir {
        if let Some(file) = resolve_static(root, &head.target) {
            match std::fs::read(&file) {
                Ok(body) => return respond(&mut stream, "200 OK", content_type(&file), &body, with_body),
                Err(e) => warn!("reading {}: {e}", file.display()),
            }
        }
    }
    if is_index {
        return respond(&mut stream, "200 OK", "text/html; charset=utf-8", PLACEHOLDER_INDEX.as_bytes(), with_body);
    }
    respond(&mut stream, "404 Not Found", "text/plain", b"not found\n", with_body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_paths_stay_inside_root() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("index.html"), "hi").unwrap();
        std::fs::create_dir(dir.path().join("js")).unwrap();
        std::fs::write(dir.path().join("js/app.js"), "x").unwrap();
        let root = dir.path();
        assert!(resolve_static(root, "/").unwrap().ends_with("index.html"));
        assert!(resolve_static(root, "/js/app.js?v=2").unwrap().ends_with("app.js"));
        assert!(resolve_static(root, "/../etc/passwd").is_none());
        assert!(resolve_static(root, "/js/../../x").is_none());
        assert!(resolve_static(root, "/missing.js").is_none());
    }
}
