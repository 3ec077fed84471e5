pub mod assembly;
pub mod bessel;
pub mod cli;
pub mod error;
pub mod fem;
pub mod material;
pub mod plate;
pub mod segment;
