//! Wasserstein distances on the flat torus and two-sample goodness-of-fit
//! tests built on them.
//!
//! The geometric and transport layers ([`torus`], [`ot`], [`circle`]) are
//! generic over the scalar through [`Real`]; the statistical layers
//! ([`gof`], [`sim`], [`io`]) work in `f64`. Concrete aliases for both
//! precisions are exported below.

pub mod circle;
pub mod error;
pub mod gof;
pub mod io;
pub mod num;
pub mod ot;
pub mod rng;
pub mod sim;
pub mod torus;

pub use error::{Error, Result};
pub use num::Real;

pub type TorusPoint64 = torus::TorusPoint<f64>;
pub type TorusPoint32 = torus::TorusPoint<f32>;
pub type TorusSample64 = torus::TorusSample<f64>;
pub type TorusSample32 = torus::TorusSample<f32>;
pub type CostMatrix64 = ot::CostMatrix<f64>;
pub type CostMatrix32 = ot::CostMatrix<f32>;
pub type TransportResult64 = ot::TransportResult<f64>;
pub type TransportResult32 = ot::TransportResult<f32>;
pub type CircularSample64 = circle::CircularSample<f64>;
pub type CircularSample32 = circle::CircularSample<f32>;
pub type CutResult64 = circle::CutResult<f64>;
pub type CutResult32 = circle::CutResult<f32>;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
