pub mod arak;
pub mod concentration;
pub mod constants;
pub mod distributions;
pub mod gap;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod rational;
pub mod recovery;
