//! Segment-then-aggregate decomposition for iterative vehicle routing
//! re-optimization.
//!
//! Stable runs of a routing solution are collapsed into hypernodes, the smaller
//! problem is re-optimized with a warm-started local search, and the result is
//! expanded back with an exact objective offset.

pub mod backbone;
pub mod error;
pub mod driver;
pub mod fsta;
pub mod gen_io;
pub mod model;
pub mod segmenter;

pub use error::{Error, Result};

/// Derives an independent seed for a numbered sub-stream (splitmix64 finalizer).
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
