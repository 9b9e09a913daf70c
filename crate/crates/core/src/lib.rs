//! Numerical toolkit for twisted moments of Dirichlet L-function
//! approximations over even primitive characters.
//!
//! The library computes the twisted moment sum S(h, k) by exact finite
//! summation (two independent paths: character enumeration and a divisor-sum
//! collapse), evaluates the zero- and one-swap prediction terms by truncated
//! Euler products and contour quadrature, and machine-checks the arithmetic
//! identities the prediction engine is built on.
//!
//! Modules:
//! - [`shifts`]: multiset shift arithmetic and generalized divisor functions;
//! - [`characters`]: exact Dirichlet character tables, pair sums, Gauss sums;
//! - [`kernels`]: complex gamma/zeta, the functional-equation factor, smooth
//!   windows and their Mellin transforms;
//! - [`quadrature`]: adaptive vertical-line contour integration;
//! - [`recipe`]: the swap-term prediction engine and its Euler products;
//! - [`moment`]: the exact moment sum, its split, and full run reports;
//! - [`identities`]: randomized identity suites;
//! - [`config`]: run configuration.

pub mod arith;
pub mod characters;
pub mod config;
pub mod identities;
pub mod kernels;
pub mod linecache;
pub mod moment;
pub mod par;
pub mod quadrature;
pub mod recipe;
pub mod shifts;

pub use config::{default_shifts, default_split, MomentConfig};
pub use moment::{run_moment, MomentReport};
pub use quadrature::Certified;
pub use shifts::ShiftSet;

/// Configure the global thread pool size; call once at startup. No-op when
/// built without the `parallel` feature.
pub fn configure_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
}
