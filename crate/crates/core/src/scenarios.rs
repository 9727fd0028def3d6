//! The canonical two-qutrit example family and its end-to-end reproduction
//! report: filter, reveal by two bits, evaluate CHSH, certify nonlocality by
//! LP, and undo everything with partial traces.

use num_complex::Complex;

use crate::behavior::lift_povm;
use crate::error::{Error, Result};
use crate::filtering::{apply_filters, LocalFilter};
use crate::locc::{certify_nonlocal, reveal_two_bits, trace_out_records, ProtocolTranscript};
use crate::operator::{trace_distance, FactorSpace, Operator};
use crate::polytope::{BellInequality, MembershipResult};
use crate::quantum::{observable_to_povm, BipartiteState, Povm, Side};
use crate::scalar::Scalar;
use crate::witness::{chsh_value, filtered_block_observables, paper_observables, ChshSettings};

/// Largest admissible mixing parameter of the example family: p ≤ 1/18 keeps
/// the state positive.
pub fn max_mixing<S: Scalar>() -> S {
    S::one() / S::real(18.0)
}

/// The worked example at mixing parameter p: the two-qutrit state
/// p|ψ⟩⟨ψ| + p M⊗Ñ + q M̃⊗N + 4q M̃⊗Ñ with q = (1−3p)/6, its filters,
/// the two-bit protocol output, and the certifying observables.
#[derive(Debug, Clone)]
pub struct PaperExample<S: Scalar> {
    pub p: S,
    pub q: S,
    pub state: BipartiteState<S>,
    pub filter_a: LocalFilter<S>,
    pub filter_b: LocalFilter<S>,
    pub two_bit_state: BipartiteState<S>,
    pub transcript: ProtocolTranscript<S>,
    pub settings: ChshSettings<S>,
}

fn truncation_filter<S: Scalar>() -> Operator<S> {
    Operator::diag_real(&[S::one(), S::one(), S::zero()])
}

/// Build the full example at mixing parameter 0 < p ≤ 1/18.
pub fn build_paper_state<S: Scalar>(p: S) -> Result<PaperExample<S>> {
    let limit = max_mixing::<S>() + S::real(1e-12);
    if !(p > S::zero() && p <= limit) {
        return Err(Error::ParameterOutOfRange(format!(
            "p out of range: need 0 < p ≤ 1/18, got {}",
            p.approx_f64()
        )));
    }
    let q = (S::one() - S::real(3.0) * p) / S::real(6.0);

    let m = truncation_filter::<S>();
    let m_tilde = Operator::basis_projector(3, 2);
    let amp = Complex::new(S::one() / S::real(2.0).sqrt(), S::zero());
    let mut psi = vec![Complex::new(S::zero(), S::zero()); 9];
    psi[0] = amp; // |0⟩|0'⟩
    psi[4] = amp; // |1⟩|1'⟩
    let ket = Operator::ket(&psi);
    let psi_proj = ket.mul_mat(&ket.adjoint())?;

    let rho = &(&psi_proj.scale_re(p) + &m.tensor(&m_tilde).scale_re(p))
        + &(&m_tilde.tensor(&m).scale_re(q) + &m_tilde.tensor(&m_tilde).scale_re(S::real(4.0) * q));
    let space = FactorSpace::new(vec![("A", 3), ("B", 3)])?;
    let state = BipartiteState::new(rho, space, 1)?;

    let filter_a = LocalFilter::new(Side::A, m.clone())?;
    let filter_b = LocalFilter::new(Side::B, m)?;
    let (two_bit_state, transcript) = reveal_two_bits(&state, &filter_a, &filter_b)?;
    let settings = paper_observables(p)?;
    Ok(PaperExample {
        p,
        q,
        state,
        filter_a,
        filter_b,
        two_bit_state,
        transcript,
        settings,
    })
}

/// The POVMs certifying the two-bit output: the filtered-block qutrit
/// measurements lifted onto the record pairs, forced to the +1 outcome off
/// the kept block.
#[allow(clippy::type_complexity)]
pub fn lifted_paper_povms<S: Scalar>() -> Result<(Vec<Povm<S>>, Vec<Povm<S>>)> {
    let [a1, a2, b1, b2] = filtered_block_observables::<S>()?;
    let record_zero = Operator::basis_projector(4, 0);
    let lift = |obs, side| -> Result<Povm<S>> {
        lift_povm(&observable_to_povm(&obs, side), &record_zero, 0)
    };
    Ok((
        vec![lift(a1, Side::A)?, lift(a2, Side::A)?],
        vec![lift(b1, Side::B)?, lift(b2, Side::B)?],
    ))
}

/// Closed-form CHSH value of the two-bit output: 2p(√2 − 1) + 2.
pub fn chsh_closed_form<S: Scalar>(p: S) -> S {
    S::real(2.0) * p * (S::real(2.0).sqrt() - S::one()) + S::real(2.0)
}

/// One row of the reproduction report.
#[derive(Debug, Clone)]
pub struct Report<S: Scalar> {
    pub p: S,
    pub q: S,
    pub success_probability: S,
    pub chsh_value: S,
    pub chsh_closed_form: S,
    pub chsh_abs_diff: S,
    pub nonlocal: bool,
    pub certificate: Option<BellInequality<S>>,
    /// Certificate margin rescaled to the CHSH vertex range.
    pub certificate_margin: Option<S>,
    pub roundtrip_distance: S,
    pub bits_a_to_b: usize,
    pub bits_b_to_a: usize,
}

/// Run the whole pipeline at one mixing parameter.
pub fn reproduce_report<S: Scalar>(p: S) -> Result<Report<S>> {
    let example = build_paper_state(p)?;
    let (_, success_probability) =
        apply_filters(&example.state, &example.filter_a, &example.filter_b)?;

    let value = chsh_value(&example.two_bit_state, &example.settings)?;
    let closed = chsh_closed_form(p);
    let diff = (value - closed).abs();

    let (povms_a, povms_b) = lifted_paper_povms()?;
    let membership = certify_nonlocal(&example.two_bit_state, &povms_a, &povms_b)?;
    let behavior =
        crate::behavior::behavior_from_state(&example.two_bit_state, &povms_a, &povms_b)?;
    let (nonlocal, certificate, certificate_margin) = match membership {
        MembershipResult::Inside { .. } => (false, None, None),
        MembershipResult::Outside { certificate } => {
            let margin = certificate.normalized_margin(&behavior)?;
            (true, Some(certificate), Some(margin))
        }
    };

    let records: Vec<&str> = example
        .two_bit_state
        .space()
        .labels()
        .iter()
        .map(|l| l.as_str())
        .filter(|l| !example.state.space().labels().iter().any(|orig| orig == l))
        .collect();
    let recovered = trace_out_records(&example.two_bit_state, &records)?;
    let roundtrip_distance = trace_distance(recovered.matrix(), example.state.matrix())?;

    Ok(Report {
        p,
        q: example.q,
        success_probability,
        chsh_value: value,
        chsh_closed_form: closed,
        chsh_abs_diff: diff,
        nonlocal,
        certificate,
        certificate_margin,
        roundtrip_distance,
        bits_a_to_b: example.transcript.bits_a_to_b(),
        bits_b_to_a: example.transcript.bits_b_to_a(),
    })
}

/// Reports on an n-point grid over (0, 1/18], largest parameter last.
pub fn report_grid<S: Scalar>(points: usize) -> Result<Vec<Report<S>>> {
    if points == 0 {
        return Err(Error::ParameterOutOfRange("grid needs ≥ 1 point".into()));
    }
    (1..=points)
        .map(|i| {
            let p = max_mixing::<S>() * S::from_usize(i).expect("grid index fits the scalar")
                / S::from_usize(points).expect("grid size fits the scalar");
            reproduce_report(p)
        })
        .collect()
}
