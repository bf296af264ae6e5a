//! Surface-induced Rydberg line shifts probed by ladder EIT.
//!
//! The crate covers the full analysis chain: quantum-defect atomic
//! structure ([`atomic`]), dc Stark polarizabilities ([`stark`]), the EIT
//! lineshape ([`eit`]), a Levenberg–Marquardt fitter ([`lsq`]), spectrum
//! analysis and field inference ([`analysis`]), the adsorbate dipole-patch
//! field model ([`patch`]), and file-based orchestration ([`pipeline`]).

pub mod atomic;
pub mod quad;
pub mod special;
pub mod units;

pub use atomic::{HalfInt, QuantumDefectTable, RadialGrid, RydbergState};
pub mod analysis;
pub mod eit;
pub mod lsq;
pub mod patch;
pub mod pipeline;
pub mod stark;
