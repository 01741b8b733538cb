//! Preferential dynamic attachment circuits.
//!
//! A circuit of index `m` grows by inserting one node per step; the new
//! node chooses `m` parents with replacement, each with probability
//! proportional to one plus its current outdegree. The crate provides a
//! sampler, exact oracles, closed-form moments of the color counts and of
//! node degrees, martingale checks, and a Monte Carlo harness.
//!
//! Everything numeric is generic over [`Scalar`]; [`Exact`] runs on big
//! rationals and [`Float`] on `f64`.

pub mod analytic;
pub mod combin;
pub mod degree;
pub mod dist;
pub mod error;
pub mod martingale;
pub mod mc;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod verify;

use num_rational::BigRational;

pub use analytic::{CovMatrix, MomentVector, SecondMoments, StepMoments, Sym2};
pub use degree::{DegreeMomentReport, RegimeSpec};
pub use dist::{CountTable, DistTable, PairTable};
pub use error::{Error, Result};
pub use martingale::{MartingaleMatrices, Mat2};
pub use mc::{clt_check, run_sim, CltCheck, SimConfig, SimReport};
pub use model::{CircuitState, Color, ColorCounts, SampleTrace};
pub use scalar::Scalar;

pub type Exact = BigRational;
pub type Float = f64;
pub type Float32 = f32;

pub type ExactPairTable = PairTable<Exact>;
pub type ExactCountTable = CountTable<Exact>;
pub type ExactCov = CovMatrix<Exact>;
pub type FloatCov = CovMatrix<Float>;
