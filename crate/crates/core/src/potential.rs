//! Potential energy functions for the dynamics and residual diagnostics.

/// One-dimensional potential with an analytic derivative.
#[derive(Debug, Clone)]
pub enum Potential {
    /// V(x) = ½ m ω² x²
    Harmonic { mass: f64, omega: f64 },
    /// V(x) = λ x⁴
    Quartic { lambda: f64 },
    /// V(x) = Σ_k coeffs[k] x^k
    Polynomial { coeffs: Vec<f64> },
}

impl Potential {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Potential::Harmonic { mass, omega } => 0.5 * mass * omega * omega * x * x,
            Potential::Quartic { lambda } => lambda * x.powi(4),
            Potential::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Potential::Harmonic { mass, omega } => mass * omega * omega * x,
            Potential::Quartic { lambda } => 4.0 * lambda * x.powi(3),
            Potential::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * x + k as f64 * c;
                }
                acc
            }
        }
    }

    /// Polynomial degree of the potential.
    pub fn degree(&self) -> usize {
        match self {
            Potential::Harmonic { .. } => 2,
            Potential::Quartic { .. } => 4,
            Potential::Polynomial { coeffs } => {
                coeffs
                    .iter()
                    .rposition(|&c| c != 0.0)
                    .unwrap_or(0)
            }
        }
    }
}
