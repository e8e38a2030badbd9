//! Secure user-centric cell formation for multi-AP indoor VLC networks.
//!
//! Each slot, every user's secure cell (power split between data and
//! artificial noise, plus a precoder) is tuned by a particle swarm against a
//! drift-plus-penalty objective; a greedy independent-set pass over the
//! interference graph then picks which cells transmit.

pub mod channel;
pub mod config;
pub mod effective_rate;
pub mod error;
pub mod experiment;
pub mod lyapunov;
pub mod output;
pub mod pso;
pub mod rng;
pub mod scenario;
pub mod scheduler;
pub mod secrecy;
pub mod sim;

pub use error::{Error, Result};
