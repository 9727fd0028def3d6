//! Real scalar abstraction the whole crate is generic over.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating-point scalar underlying all operators and probabilities.
///
/// Implemented by `f32` and `f64` through the blanket impl below. Tolerances
/// throughout the crate are stated on the `f64` scale; `f32` works but cannot
/// meet them.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` constant (tolerances, closed-form values) into `Self`.
    fn real(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant not representable in this scalar type")
    }

    /// Lossy view as `f64`, for diagnostics and serialization.
    fn approx_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + NumAssign + FromPrimitive + Sum<T> + Debug + Display + Send + Sync + 'static
{
}

/// Complex number over the crate scalar.
pub type C<S> = Complex<S>;

/// Real constant lifted to a complex value.
pub fn cre<S: Scalar>(v: f64) -> C<S> {
    Complex::new(S::real(v), S::zero())
}

/// Numerical tolerances, fixed on the `f64` scale.
pub mod tol {
    /// Gate on eigenvalues and Hermiticity deviations.
    pub const EIG: f64 = 1e-10;
    /// General comparison tolerance for derived quantities.
    pub const CMP: f64 = 1e-9;
    /// Simplex pivot and feasibility tolerance.
    pub const LP: f64 = 1e-9;
    /// Slack allowed on the vertex side of a re-verified certificate.
    pub const CERT_VERTEX: f64 = 1e-12;
    /// Branch probabilities at or below this are impossible branches.
    pub const BRANCH_PROB: f64 = 1e-12;
}
