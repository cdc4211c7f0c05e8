//! Nonlocal scale-`r` p-energies on weighted point clouds.
//!
//! A [`PointCloudSpace`] discretizes a doubling metric measure space. On it the
//! crate evaluates the scale-`r` energies
//!
//! ```text
//! E_{p,r}(f) = r^{-p} Σ_x μ_x ⨍_{B(x,r)} |f(y) - f(x)|^p dμ(y)
//! ```
//!
//! together with their localized versions, the pairing form, the scale-`r`
//! p-Laplacian and a Dirichlet solver, Lipschitz partition-of-unity
//! approximations, energy measures, Poincaré diagnostics and `p = 1`
//! total-variation functionals.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`space`] | point clouds, ball queries, generators, doubling diagnostics |
//! | [`covers`] | maximal ε-nets, overlap counts, tent partitions of unity |
//! | [`energy`] | `E_{p,r}`, localized energy, pairing, r-sweeps with extrapolation |
//! | [`lipschitz`] | partition-of-unity approximation `f_ε`, discrete Lip, maximal function |
//! | [`laplacian`] | scale-`r` p-Laplacian, Dirichlet descent, minimizer sweeps |
//! | [`measures`] | energy measures on cells, Poincaré checks, cutoffs, fundamental estimate |
//! | [`bv`] | nonlocal total variation, perimeter, Lipschitz-relaxed TV bound |
//! | [`io`] | CSV/JSON file formats |

pub mod bv;
pub mod covers;
pub mod energy;
pub mod error;
pub mod field;
pub mod fit;
pub mod io;
pub mod laplacian;
pub mod lipschitz;
pub mod measures;
pub mod space;
pub mod sum;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use space::{
    build_space, circle_grid, doubling_estimate, interval_grid, random_cloud, torus2d_grid, BallGraph, BallQuery,
    DoublingEstimate, IndexSet, MetricKind, PointCloudSpace, PointSource, Sampler, StreamingBalls,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
