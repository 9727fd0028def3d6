//! Validated quantum objects: bipartite density operators, POVMs, and
//! dichotomic observables.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::operator::{partial_trace, FactorSpace, Operator};
use crate::scalar::{tol, Scalar};

/// The two parties of a bipartite scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Density operator on a factored bipartite space.
///
/// The factor list is partitioned into a contiguous A-side prefix and a B-side
/// suffix (`split` = number of A-side factors). Canonical protocol layouts
/// keep A-side records left of the A system and B-side records right of the
/// B system, so a prefix split always suffices.
#[derive(Debug, Clone)]
pub struct BipartiteState<S: Scalar> {
    space: FactorSpace,
    split: usize,
    matrix: Operator<S>,
}

impl<S: Scalar> BipartiteState<S> {
    /// Fully validated constructor: Hermitian within `tol::EIG`, eigenvalues
    /// ≥ −`tol::EIG`, trace 1 within `tol::EIG`, dimensions consistent.
    pub fn new(matrix: Operator<S>, space: FactorSpace, split: usize) -> Result<Self> {
        let state = Self::assemble(matrix, space, split)?;
        let (values, _) = state.matrix.hermitian_eig()?;
        if let Some(&min) = values.last() {
            if min < -S::real(tol::EIG) {
                return Err(Error::NotPsd {
                    min_eigenvalue: min.approx_f64(),
                });
            }
        }
        Ok(state)
    }

    /// Cheap-check constructor for states that are PSD by construction
    /// (Kraus-map outputs): verifies shape, Hermiticity, and trace only.
    /// Positivity remains a predicate computed on demand via [`Self::new`].
    pub(crate) fn assemble(matrix: Operator<S>, space: FactorSpace, split: usize) -> Result<Self> {
        if split == 0 || split >= space.len() {
            return Err(Error::InvalidDimension(format!(
                "partition must leave factors on both sides (split {split} of {})",
                space.len()
            )));
        }
        if !matrix.is_square() || matrix.rows() != space.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "state matrix is {}x{} but the factor space has total dimension {}",
                matrix.rows(),
                matrix.cols(),
                space.total_dim()
            )));
        }
        let dev = matrix.hermiticity_deviation();
        if dev > S::real(tol::EIG) {
            return Err(Error::NotHermitian {
                deviation: dev.approx_f64(),
            });
        }
        let tr = matrix.trace();
        if (tr.re - S::one()).abs() > S::real(tol::EIG) || tr.im.abs() > S::real(tol::EIG) {
            return Err(Error::TraceNotOne {
                trace: tr.re.approx_f64(),
            });
        }
        Ok(Self {
            space,
            split,
            matrix,
        })
    }

    pub fn matrix(&self) -> &Operator<S> {
        &self.matrix
    }

    pub fn space(&self) -> &FactorSpace {
        &self.space
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn side_labels(&self, side: Side) -> &[String] {
        match side {
            Side::A => &self.space.labels()[..self.split],
            Side::B => &self.space.labels()[self.split..],
        }
    }

    pub fn side_dims(&self, side: Side) -> &[usize] {
        match side {
            Side::A => &self.space.dims()[..self.split],
            Side::B => &self.space.dims()[self.split..],
        }
    }

    pub fn side_dim(&self, side: Side) -> usize {
        self.side_dims(side).iter().product()
    }

    /// Partial trace onto the listed factors; the partition follows the kept
    /// labels.
    pub fn reduce(&self, keep: &[&str]) -> Result<BipartiteState<S>> {
        let reduced = partial_trace(&self.matrix, &self.space, keep)?;
        let sub = self.space.retain(keep)?;
        let kept_a = self.space.labels()[..self.split]
            .iter()
            .filter(|l| keep.contains(&l.as_str()))
            .count();
        Self::assemble(reduced, sub, kept_a)
    }

    /// Expectation value tr(ρ O) of a Hermitian operator.
    pub fn expectation(&self, op: &Operator<S>) -> Result<S> {
        Ok(self.matrix.trace_product(op)?.re)
    }
}

/// `validate_state` spelled as a free function; see [`BipartiteState::new`].
pub fn validate_state<S: Scalar>(
    matrix: Operator<S>,
    space: FactorSpace,
    split: usize,
) -> Result<BipartiteState<S>> {
    BipartiteState::new(matrix, space, split)
}

/// Normalized projector |ψ⟩⟨ψ| from a (possibly unnormalized) amplitude vector.
pub fn pure_state<S: Scalar>(
    amplitudes: &[Complex<S>],
    space: FactorSpace,
    split: usize,
) -> Result<BipartiteState<S>> {
    let norm_sq: S = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    if norm_sq <= S::real(1e-300) {
        return Err(Error::ZeroVector);
    }
    let scale = S::one() / norm_sq.sqrt();
    let normalized: Vec<Complex<S>> = amplitudes
        .iter()
        .map(|z| z * Complex::new(scale, S::zero()))
        .collect();
    let ket = Operator::ket(&normalized);
    let proj = ket.mul_mat(&ket.adjoint())?;
    BipartiteState::assemble(proj, space, split)
}

/// Measurement on one party: positive operators summing to identity.
///
/// Outcome labels are the 1-based indices `1..=len` when displayed; code uses
/// 0-based positions.
#[derive(Debug, Clone)]
pub struct Povm<S: Scalar> {
    side: Side,
    elements: Vec<Operator<S>>,
}

impl<S: Scalar> Povm<S> {
    pub fn new(side: Side, elements: Vec<Operator<S>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidDimension("POVM has no outcomes".into()));
        }
        let dim = elements[0].rows();
        let mut sum = Operator::zeros(dim, dim);
        for el in &elements {
            if !el.is_square() || el.rows() != dim {
                return Err(Error::DimensionMismatch(
                    "POVM elements must be square and share one dimension".into(),
                ));
            }
            let (values, _) = el.hermitian_eig()?;
            if let Some(&min) = values.last() {
                if min < -S::real(tol::EIG) {
                    return Err(Error::NotPsd {
                        min_eigenvalue: min.approx_f64(),
                    });
                }
            }
            sum = &sum + el;
        }
        let dev = sum.max_abs_diff(&Operator::identity(dim));
        if dev > S::real(tol::CMP) {
            return Err(Error::PovmIncomplete {
                deviation: dev.approx_f64(),
            });
        }
        Ok(Self { side, elements })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn element(&self, outcome: usize) -> &Operator<S> {
        &self.elements[outcome]
    }

    pub fn elements(&self) -> &[Operator<S>] {
        &self.elements
    }
}

/// Hermitian observable with spectrum in {+1, −1} (possibly degenerate);
/// equivalently O² = I within `tol::CMP`.
#[derive(Debug, Clone)]
pub struct DichotomicObservable<S: Scalar> {
    matrix: Operator<S>,
}

impl<S: Scalar> DichotomicObservable<S> {
    pub fn new(matrix: Operator<S>) -> Result<Self> {
        let dev = matrix.hermiticity_deviation();
        if !matrix.is_square() || dev > S::real(tol::EIG) {
            return Err(Error::NotHermitian {
                deviation: dev.approx_f64(),
            });
        }
        let squared = matrix.mul_mat(&matrix)?;
        let gap = squared.max_abs_diff(&Operator::identity(matrix.rows()));
        if gap > S::real(tol::CMP) {
            return Err(Error::SpectrumNotDichotomic {
                deviation: gap.approx_f64(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Operator<S> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Two-outcome POVM {(I+O)/2, (I−O)/2}; outcome 0 is the +1 eigenspace.
pub fn observable_to_povm<S: Scalar>(obs: &DichotomicObservable<S>, side: Side) -> Povm<S> {
    let id = Operator::identity(obs.dim());
    let plus = (&id + obs.matrix()).scale_re(S::real(0.5));
    let minus = (&id - obs.matrix()).scale_re(S::real(0.5));
    Povm::new(side, vec![plus, minus]).expect("projections of a dichotomic observable form a POVM")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;

    fn c(re: f64, im: f64) -> C<f64> {
        Complex::new(re, im)
    }

    fn two_qubit_space() -> FactorSpace {
        FactorSpace::new(vec![("A", 2), ("B", 2)]).unwrap()
    }

    #[test]
    fn maximally_mixed_state_is_valid() {
        let rho = Operator::<f64>::identity(4).scale_re(0.25);
        let state = BipartiteState::new(rho, two_qubit_space(), 1).unwrap();
        assert_eq!(state.side_dim(Side::A), 2);
        assert_eq!(state.side_dim(Side::B), 2);
    }

    #[test]
    fn trace_deficit_is_rejected_by_name() {
        let rho = Operator::<f64>::identity(4).scale_re(0.225); // trace 0.9
        let err = BipartiteState::new(rho, two_qubit_space(), 1).unwrap_err();
        assert!(err.to_string().contains("trace not 1"), "got: {err}");
    }

    #[test]
    fn non_psd_is_rejected_by_name() {
        let rho = Operator::<f64>::diag_real(&[0.6, 0.6, -0.1, -0.1]);
        let err = BipartiteState::new(rho, two_qubit_space(), 1).unwrap_err();
        assert!(err.to_string().contains("not PSD"), "got: {err}");
    }

    #[test]
    fn non_hermitian_is_rejected_by_name() {
        let mut rho = Operator::<f64>::identity(4).scale_re(0.25);
        rho[(0, 1)] = c(0.1, 0.0);
        let err = BipartiteState::new(rho, two_qubit_space(), 1).unwrap_err();
        assert!(err.to_string().contains("not Hermitian"), "got: {err}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let rho = Operator::<f64>::identity(3).scale_re(1.0 / 3.0);
        let err = BipartiteState::new(rho, two_qubit_space(), 1).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn pure_state_normalizes_and_rejects_zero() {
        let space = FactorSpace::new(vec![("A", 3), ("B", 3)]).unwrap();
        let mut amps = vec![c(0.0, 0.0); 9];
        amps[0] = c(1.0, 0.0);
        amps[4] = c(1.0, 0.0); // unnormalized (|00⟩ + |11⟩)
        let psi = pure_state(&amps, space.clone(), 1).unwrap();
        assert!((psi.matrix().trace().re - 1.0).abs() < 1e-14);
        let (values, _) = psi.matrix().hermitian_eig().unwrap();
        assert!((values[0] - 1.0).abs() < 1e-14); // rank 1

        let zeros = vec![c(0.0, 0.0); 9];
        assert!(matches!(
            pure_state(&zeros, space, 1),
            Err(Error::ZeroVector)
        ));

        let qubit = FactorSpace::new(vec![("A", 2), ("B", 1)]).unwrap();
        let ket0 = pure_state(&[c(1.0, 0.0), c(0.0, 0.0)], qubit, 1).unwrap();
        assert!((ket0.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn povm_must_sum_to_identity() {
        let p0 = Operator::<f64>::basis_projector(2, 0);
        let p1 = Operator::<f64>::basis_projector(2, 1);
        assert!(Povm::new(Side::A, vec![p0.clone(), p1]).is_ok());
        let err = Povm::new(Side::A, vec![p0.clone(), p0]).unwrap_err();
        assert!(matches!(err, Error::PovmIncomplete { .. }));
    }

    #[test]
    fn observable_to_povm_qubit_sigma_z() {
        let sz = DichotomicObservable::new(Operator::<f64>::diag_real(&[1.0, -1.0])).unwrap();
        let povm = observable_to_povm(&sz, Side::A);
        assert!(
            povm.element(0)
                .max_abs_diff(&Operator::basis_projector(2, 0))
                < 1e-15
        );
        assert!(
            povm.element(1)
                .max_abs_diff(&Operator::basis_projector(2, 1))
                < 1e-15
        );
    }

    #[test]
    fn degenerate_identity_observable_is_accepted() {
        let id = DichotomicObservable::new(Operator::<f64>::identity(3)).unwrap();
        let povm = observable_to_povm(&id, Side::B);
        assert!(povm.element(0).max_abs_diff(&Operator::identity(3)) < 1e-15);
        assert!(povm.element(1).max_abs() < 1e-15);
    }

    #[test]
    fn non_dichotomic_spectrum_is_rejected() {
        let err = DichotomicObservable::new(Operator::<f64>::diag_real(&[1.0, 0.5])).unwrap_err();
        assert!(matches!(err, Error::SpectrumNotDichotomic { .. }));
    }

    #[test]
    fn povm_expectation_matches_observable_on_random_pairs() {
        // tr(ρO) equals the ±1-weighted POVM expectation, 100 seeded pairs
        let mut seed = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for trial in 0..100 {
            let dim = 2 + trial % 7; // dimensions 2 through 8
            let g = Operator::from_fn(dim, dim, |_, _| c(next(), next()));
            let psd = g.mul_mat(&g.adjoint()).unwrap().hermitized();
            let tr = psd.trace().re;
            let rho = psd.scale_re(1.0 / tr);

            let h = Operator::from_fn(dim, dim, |_, _| c(next(), next())).hermitized();
            let (values, vectors) = h.hermitian_eig().unwrap();
            let signs: Vec<f64> = values
                .iter()
                .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let obs_matrix = vectors
                .mul_mat(&Operator::diag_real(&signs))
                .unwrap()
                .mul_mat(&vectors.adjoint())
                .unwrap()
                .hermitized();
            let obs = DichotomicObservable::new(obs_matrix.clone()).unwrap();
            let povm = observable_to_povm(&obs, Side::A);

            let direct = rho.trace_product(&obs_matrix).unwrap().re;
            let via_povm = rho.trace_product(povm.element(0)).unwrap().re
                - rho.trace_product(povm.element(1)).unwrap().re;
            assert!((direct - via_povm).abs() < 1e-9);
        }
    }

    #[test]
    fn povm_total_probability_is_one_on_states() {
        let rho = Operator::<f64>::diag_real(&[0.5, 0.1, 0.2, 0.2]);
        let state = BipartiteState::new(rho, two_qubit_space(), 1).unwrap();
        let sx = DichotomicObservable::new(
            Operator::new(
                2,
                2,
                vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            )
            .unwrap(),
        )
        .unwrap();
        let povm = observable_to_povm(&sx, Side::A);
        let full: f64 = (0..povm.len())
            .map(|i| {
                let op = povm.element(i).tensor(&Operator::identity(2));
                state.expectation(&op).unwrap()
            })
            .sum();
        assert!((full - 1.0).abs() < 1e-9);
    }
}
