//! Tangles, full closures, k-flowers and partial (k,S)-trees for
//! connectivity systems on small ground sets.

pub mod closure;
pub mod error;
pub mod flower;
pub mod io;
pub mod ktree;
mod memo;
pub mod oracle;
pub mod rank;
pub mod subset;
pub mod system;
pub mod tangle;

pub use error::{Error, Result};
pub use rank::{build_r8_rank, RankFunction, RankSource};
pub use subset::{GroundSet, SubsetMask};
pub use system::{ConnectivitySystem, SystemKind};
pub use tangle::{canonical_vertical_tangle, enumerate_tangles, verify_tangle, Tangle};
