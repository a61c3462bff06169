//! Brute-force oracles and seeded property campaigns.

mod campaign;
mod checks;
mod deviations;
mod gen;

pub use campaign::*;
pub use checks::*;
pub use deviations::*;
pub use gen::*;
