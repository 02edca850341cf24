pub mod allocator;
pub mod conic;
pub mod cyclesim;
pub mod error;
pub mod fixtures;
pub mod poly;
pub mod powertrain;
pub mod sos;

pub use error::{Error, Result};
pub use poly::Polynomial;
