//! Quantum phase-space probability densities on 1-D grids.
//!
//! Two rival constructions of a phase-space density F(x,p) for a pure state:
//!
//! * **Rule B** — the point-split (Wigner) construction: Fourier transform of
//!   the characteristic function `Z(x,δx) = ψ*(x−δx/2)ψ(x+δx/2)` in the
//!   displacement variable. Negative for excited states.
//! * **Rule A** — the factorized positive construction
//!   `F(x,p) = |ψ(x)|²·|φ(p)|²`, the product of the position and momentum
//!   marginal densities. Non-negative by construction.
//!
//! Both reproduce the lateral moments ⟨xⁿ⟩ and ⟨pᵐ⟩ of ordinary quantum
//! mechanics; they differ on mixed products ⟨xⁿpᵐ⟩, which is what the
//! [`moments`] module quantifies (harmonic-oscillator expectation table,
//! energy dispersions). The [`density`] module also realizes the generalized
//! kernel family that interpolates between the two constructions, and
//! [`dynamics`] provides split-operator propagation with Ehrenfest,
//! continuity, momentum-transport, and Madelung residual diagnostics.
//!
//! Grid-parallel inner loops run on rayon when the `parallel` feature
//! (default) is enabled; disable it for a fully sequential build.

pub mod density;
pub mod dynamics;
mod error;
mod fft;
pub mod grid;
mod interp;
pub mod moments;
mod parallel;
pub mod potential;
pub mod specfun;
pub mod states;
pub mod verify;

pub use error::{Error, Result};
pub use grid::Grid1D;
pub use potential::Potential;
pub use states::OscillatorParams;
