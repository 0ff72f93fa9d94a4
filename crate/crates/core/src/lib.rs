//! Exact counting and circle-method numerics for inhomogeneous Vinogradov systems
//! `sum_i x_i^j - x_{s+i}^j = h_j`, `1 <= j <= k`, with `1 <= x_i <= X`.

pub mod budget;
pub mod circle;
pub mod countmap;
pub mod counting;
pub mod error;
pub mod exponents;
pub mod expsums;
pub mod shiftpoly;
pub mod suites;
pub mod summation;
pub mod types;

pub use budget::Budget;
pub use countmap::{convolve, correlate, CountMap, MapKind, MapMeta};
pub use counting::{count_j, LadderResult, LadderTemplate, Method};
pub use error::{Error, Result};
pub use types::{power_sum_vector, ExactCount, HTuple, PowerSumVec, SystemParams};
