//! Manifold optimization of BS beamforming and IRS reflection phases for
//! multi-user downlink rate maximization.
//!
//! The crate is organised bottom-up:
//!
//! * [`manifolds`] – the complex trace-one sphere and the complex oblique
//!   (unit-modulus) manifold with projection, retraction and transport.
//! * [`gcg`] – geometric conjugate-gradient ascent over any [`manifolds::Manifold`].
//! * [`channel`] – Saleh-Valenzuela channel synthesis, UPA steering vectors,
//!   path loss and probabilistic blocking.
//! * [`rates`] – SINR, per-user rate, weighted sum-rate and weighted min-rate.
//! * [`sumrate`] – alternating sphere/oblique optimization of the weighted
//!   sum-rate (DOMALO), including the inter-IRS cascade and phase quantization.
//! * [`maxmin`] – the smoothed Dinkelbach-type max-min scheme (S-DOMALO).
//! * [`baselines`] – MRT/ZF/MMSE beamformers and the comparison loops.

pub mod baselines;
mod blocks;
pub mod channel;
pub mod error;
pub mod gcg;
pub mod manifolds;
pub mod maxmin;
mod objective;
pub mod rates;
pub mod report;
pub mod sumrate;
pub mod system;

pub use blocks::{physical_beamformer, InitialPoint, PhaseUpdate};
pub use error::{Error, Result};
pub use rates::LinkModel;
pub use report::{Iterate, OuterTermination, SolveReport, Solution};
pub use system::{BeamformerMatrix, SystemConfig};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;
