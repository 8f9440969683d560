//! Deep, narrow ReLU networks that compute piecewise-affine functions exactly.
//!
//! The crate is organised bottom-up:
//!
//! - [`affine`]: affine maps, max-affine functions and their differences.
//! - [`net`]: the feed-forward ReLU network type, evaluation and the JSON file format.
//! - [`compile_convex`]: max-affine function with `N` pieces to a width `d+1` net with `N` blocks.
//! - [`compile_dc`]: difference of max-affine functions to a width `d+3` net with `2(M+N)` blocks.
//! - [`deepen`]: one-hidden-layer net to an equivalent width `d+2` net.
//! - [`simplex`]: piecewise-linear interpolation on the Kuhn triangulation of a uniform grid.
//! - [`dc_decompose`]: splitting such an interpolant into a difference of convex parts.
//! - [`maxaffine_fit`]: tangent-plane under-approximation of convex Lipschitz targets.
//!
//! [`registry`], [`scan`] and [`pipeline`] glue these into the end-to-end constructions used
//! by the command-line tool.
//!
//! All guarantees are stated on the unit cube `[0,1]^d`.

pub mod affine;
pub mod compile_convex;
pub mod compile_dc;
pub mod dc_decompose;
pub mod deepen;
pub mod error;
pub mod maxaffine_fit;
pub mod net;
pub mod pipeline;
pub mod registry;
pub mod scan;
pub mod simplex;

pub use affine::{AffineFunctional, AffineMap, DcFn, MaxAffineFn};
pub use error::{Error, Result};
pub use net::{Activation, Layer, NetMetrics, OutputMode, ReluNet};

/// Default absolute tolerance for comparisons on `[0,1]^d`-scale data.
pub const DEFAULT_TOL: f64 = 1e-9;
