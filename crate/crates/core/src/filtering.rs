//! Local filtering ρ ↦ (M⊗N)ρ(M⊗N)†/p and complement-filter construction.

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::quantum::{BipartiteState, Side};
use crate::scalar::{tol, Scalar};

/// One party's filter M with the contraction M†M ≤ I.
///
/// Filters violating the contraction by at most `tol::CMP` are rescaled by the
/// square root of the top eigenvalue of M†M; larger violations are rejected.
#[derive(Debug, Clone)]
pub struct LocalFilter<S: Scalar> {
    side: Side,
    matrix: Operator<S>,
}

impl<S: Scalar> LocalFilter<S> {
    pub fn new(side: Side, matrix: Operator<S>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "filter must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let gram = matrix.adjoint().mul_mat(&matrix)?;
        let (values, _) = gram.hermitian_eig()?;
        let top = values.first().copied().unwrap_or_else(S::zero);
        if top > S::one() + S::real(tol::CMP) {
            return Err(Error::ContractionViolated {
                top_eigenvalue: top.approx_f64(),
            });
        }
        let matrix = if top > S::one() {
            matrix.scale_re(S::one() / top.sqrt())
        } else {
            matrix
        };
        Ok(Self { side, matrix })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn matrix(&self) -> &Operator<S> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Complement filter M̃ = sqrt(I − M†M), so M†M + M̃†M̃ = I.
    pub fn complement(&self) -> Result<LocalFilter<S>> {
        let gram = self.matrix.adjoint().mul_mat(&self.matrix)?;
        let gap = &Operator::identity(self.dim()) - &gram;
        let root = gap.psd_sqrt()?;
        Ok(LocalFilter {
            side: self.side,
            matrix: root,
        })
    }
}

/// Free-function spelling of [`LocalFilter::complement`].
pub fn complement_filter<S: Scalar>(filter: &LocalFilter<S>) -> Result<LocalFilter<S>> {
    filter.complement()
}

/// Apply local filters to both sides: returns the normalized filtered state
/// and the success probability p = tr(M†M ⊗ N†N ρ).
///
/// Branches with p ≤ `tol::BRANCH_PROB` are impossible and rejected.
pub fn apply_filters<S: Scalar>(
    state: &BipartiteState<S>,
    m_a: &LocalFilter<S>,
    n_b: &LocalFilter<S>,
) -> Result<(BipartiteState<S>, S)> {
    if m_a.side() != Side::A || n_b.side() != Side::B {
        return Err(Error::DimensionMismatch(
            "apply_filters takes an A-side filter then a B-side filter".into(),
        ));
    }
    if m_a.dim() != state.side_dim(Side::A) || n_b.dim() != state.side_dim(Side::B) {
        return Err(Error::DimensionMismatch(format!(
            "filters act on {}x{} but the state sides are {}x{}",
            m_a.dim(),
            n_b.dim(),
            state.side_dim(Side::A),
            state.side_dim(Side::B)
        )));
    }
    let kraus = m_a.matrix().tensor(n_b.matrix());
    let unnormalized = state.matrix().sandwich(&kraus)?;
    let prob = unnormalized.trace().re;
    if prob <= S::real(tol::BRANCH_PROB) {
        return Err(Error::ZeroSuccessProbability);
    }
    let filtered = unnormalized.scale_re(S::one() / prob).hermitized();
    let out = BipartiteState::assemble(filtered, state.space().clone(), state.split())?;
    Ok((out, prob))
}
