pub mod error;
pub mod gpe;
pub mod grid;
pub mod hydro;
pub mod lighthill;
pub mod linear;
pub mod madelung;
pub mod residual;
pub mod scenario;

pub use error::{Error, Result};
