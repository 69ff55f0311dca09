pub mod develop;
pub mod epstein;
pub mod error;
pub mod hyp3;
pub mod io;
pub mod ode;
pub mod poly;
pub mod qdiff;
pub mod trees;

pub use error::{Error, Result};
pub use hyp3::C64;
