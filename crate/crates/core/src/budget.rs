use serde::{Deserialize, Serialize};

/// Resource caps. Jobs whose estimated cost exceeds a cap are refused
/// before any work starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Distinct entries in any single count map.
    pub max_entries: u64,
    /// Leaves of a brute-force enumeration.
    pub max_enumeration: u64,
    /// Grid points of a lattice evaluation (DFT moments, lattice quadrature,
    /// singular-series terms).
    pub max_grid: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_entries: 50_000_000,
            max_enumeration: 200_000_000,
            max_grid: 50_000_000,
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget {
            max_entries: u64::MAX,
            max_enumeration: u64::MAX,
            max_grid: u64::MAX,
        }
    }
}
