//! Serving a tour session to a browser client.

pub mod protocol;
mod server;
mod session;

pub use server::{serve, ServeOptions, Server};
pub use session::{label_payload, Direction, LogEntry, ProtocolLog, Session, SessionOptions, DEFAULT_FRAME_BUDGET_HZ};
