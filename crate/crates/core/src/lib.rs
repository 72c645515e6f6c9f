//! Firing-rate theory and initialisation tools for discrete-time spiking
//! networks of leaky integrate-and-fire neurons.

pub mod correction;
pub mod error;
pub mod math;
pub mod rng;
pub mod sim;
pub mod theory;
pub mod surrogate;
pub mod fp;
pub mod backprop;
pub mod init;

pub use error::{Error, Result};
