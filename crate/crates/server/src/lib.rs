//! Label server and command line for the alqa pipeline.

pub mod api;
pub mod commands;
pub mod render;
pub mod run;
pub mod session;

pub use api::{router, AppState};
pub use run::{serve, spawn_loop, ServeOptions, ServerLabeler};
pub use session::{SessionState, SessionStore};
