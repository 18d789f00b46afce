//! Entanglement dynamics of two cavities leaking into two reservoirs, with
//! genuine multipartite entanglement quantified by a semidefinite program.

pub mod channel;
pub mod error;
pub mod families;
pub mod gme;
pub mod negativity;
pub mod qstate;
pub mod sdp;
pub mod sweep;

pub use error::{Error, Result};
