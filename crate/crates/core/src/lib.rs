pub mod acceptance;
pub mod bandop;
pub mod cli;
pub mod coin;
pub mod error;
pub mod export;
pub mod phases;
pub mod regions;
pub mod spectra;
pub mod symbol;
pub mod walk;

pub use error::{Error, Result};
pub use num_complex::Complex64;
