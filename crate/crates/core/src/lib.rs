pub mod ensemble;
pub mod error;
pub mod phase_space;
pub mod quadrature;
pub mod sfa;
pub mod observables;
pub mod spectra;
pub mod toy;
mod trig;

pub use error::{Error, Result};
