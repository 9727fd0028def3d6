//! Cross-module protocol invariants that tie filtering, behaviors, the
//! polytope, and the LOCC rounds together.

mod common;

use bellforge::behavior::{behavior_from_state, lift_povm, no_signaling_check};
use bellforge::filtering::{apply_filters, LocalFilter};
use bellforge::locc::{certify_nonlocal, trace_out_records};
use bellforge::operator::{FactorSpace, Operator};
use bellforge::polytope::{find_escaping_vertex, lp_membership};
use bellforge::quantum::{observable_to_povm, BipartiteState, Povm, Side};
use bellforge::scenarios::build_paper_state;
use bellforge::witness::{chsh_of_behavior, filtered_block_observables, horodecki_max_chsh};
use common::*;

#[test]
fn four_branch_probabilities_decompose_unity() {
    // the four success probabilities of (M,N), (M,Ñ), (M̃,N), (M̃,Ñ) sum to 1
    let mut generator = rng(0xF0_4B);
    for trial in 0..10 {
        let state = random_state(&mut generator, 3, 3);
        let raw_a = Operator::from_fn(3, 3, |_, _| random_complex(&mut generator));
        let raw_b = Operator::from_fn(3, 3, |_, _| random_complex(&mut generator));
        let normalize = |raw: &Operator<f64>| {
            let gram = raw.adjoint().mul_mat(raw).unwrap();
            let (values, _) = gram.hermitian_eig().unwrap();
            raw.scale_re(1.0 / (values[0].sqrt() * 1.1))
        };
        let m = LocalFilter::new(Side::A, normalize(&raw_a)).unwrap();
        let n = LocalFilter::new(Side::B, normalize(&raw_b)).unwrap();
        let m_tilde = m.complement().unwrap();
        let n_tilde = n.complement().unwrap();
        let mut total = 0.0;
        for fa in [&m, &m_tilde] {
            for fb in [&n, &n_tilde] {
                match apply_filters(&state, fa, fb) {
                    Ok((_, probability)) => total += probability,
                    Err(bellforge::Error::ZeroSuccessProbability) => {}
                    Err(other) => panic!("trial {trial}: {other}"),
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-9, "trial {trial}: total {total}");
    }
}

#[test]
fn maximally_entangled_behavior_is_outside_at_the_quantum_bound() {
    let phi = {
        let amps = [
            bellforge::C64::new(1.0, 0.0),
            bellforge::C64::new(0.0, 0.0),
            bellforge::C64::new(0.0, 0.0),
            bellforge::C64::new(1.0, 0.0),
        ];
        let space = FactorSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        bellforge::pure_state(&amps, space, 1).unwrap()
    };
    let (value, settings) = horodecki_max_chsh(&phi).unwrap();
    assert!((value - 2.0 * 2.0_f64.sqrt()).abs() < 1e-9);
    let povms_a = vec![
        observable_to_povm(&settings.a1, Side::A),
        observable_to_povm(&settings.a2, Side::A),
    ];
    let povms_b = vec![
        observable_to_povm(&settings.b1, Side::B),
        observable_to_povm(&settings.b2, Side::B),
    ];
    let behavior = behavior_from_state(&phi, &povms_a, &povms_b).unwrap();
    assert!(no_signaling_check(&behavior));
    let result = lp_membership(&behavior).unwrap();
    let certificate = result.certificate().expect("behavior is outside");
    let margin = certificate.normalized_margin(&behavior).unwrap();
    assert!(
        (margin - (2.0 * 2.0_f64.sqrt() - 2.0)).abs() < 1e-6,
        "margin {margin}"
    );

    // the escape scan at the example's own mixing weight hits the first
    // vertex, whose mixture carries CHSH 2 + 2p(√2 − 1)
    let p = 1.0 / 18.0;
    let (vertex, mixed, _) = find_escaping_vertex(&behavior, p).unwrap();
    assert_eq!(vertex.a_choices(), &[0, 0]);
    assert_eq!(vertex.b_choices(), &[0, 0]);
    let chsh = chsh_of_behavior(&mixed).unwrap();
    assert!((chsh - (2.0 + 2.0 * p * (2.0_f64.sqrt() - 1.0))).abs() < 1e-9);
}

#[test]
fn separable_states_never_produce_certificates() {
    let mut generator = rng(0x5E9A);
    for _ in 0..10 {
        // convex mixture of product states
        let mut matrix = Operator::<f64>::zeros(9, 9);
        let mut weight_left = 1.0;
        for term in 0..3 {
            let w = if term == 2 {
                weight_left
            } else {
                let w = 0.5 * weight_left;
                weight_left -= w;
                w
            };
            let a = random_density(&mut generator, 3);
            let b = random_density(&mut generator, 3);
            matrix = &matrix + &a.tensor(&b).scale_re(w);
        }
        let space = FactorSpace::new(vec![("A", 3), ("B", 3)]).unwrap();
        let state = BipartiteState::new(matrix.hermitized(), space, 1).unwrap();
        let povms_a = vec![
            random_two_outcome_povm(&mut generator, 3, Side::A),
            random_two_outcome_povm(&mut generator, 3, Side::A),
        ];
        let povms_b = vec![
            random_two_outcome_povm(&mut generator, 3, Side::B),
            random_two_outcome_povm(&mut generator, 3, Side::B),
        ];
        let result = certify_nonlocal(&state, &povms_a, &povms_b).unwrap();
        assert!(result.inside(), "separable states are Bell local");
    }
}

#[test]
fn record_stripped_two_bit_state_yields_no_certificate_from_the_same_structure() {
    // dropping the exchanged-bit records B' and A'' and measuring with the
    // same lifted structure exposes no nonlocality
    let example = build_paper_state(1.0_f64 / 18.0).unwrap();
    let rho3 = trace_out_records(&example.two_bit_state, &["B'", "A''"]).unwrap();
    assert_eq!(rho3.space().labels(), &["A'", "A", "B", "B''"]);

    let [a1, a2, b1, b2] = filtered_block_observables::<f64>().unwrap();
    let record_zero = Operator::basis_projector(2, 0);
    let lift = |povm: &Povm<f64>| lift_povm(povm, &record_zero, 0).unwrap();
    let povms_a = vec![
        lift(&observable_to_povm(&a1, Side::A)),
        lift(&observable_to_povm(&a2, Side::A)),
    ];
    let povms_b = vec![
        lift(&observable_to_povm(&b1, Side::B)),
        lift(&observable_to_povm(&b2, Side::B)),
    ];
    let result = certify_nonlocal(&rho3, &povms_a, &povms_b).unwrap();
    assert!(
        result.inside(),
        "the record-stripped state must stay local here"
    );

    // sanity: the same structure on the full two-bit state is outside
    let (full_a, full_b) = bellforge::scenarios::lifted_paper_povms::<f64>().unwrap();
    let full = certify_nonlocal(&example.two_bit_state, &full_a, &full_b).unwrap();
    assert!(!full.inside());
}

#[test]
fn decomposition_chains_are_contractions() {
    use bellforge::decomposition::{AlternatingProtocol, InstrumentRound};
    use std::collections::BTreeMap;

    let mut generator = rng(0xC0_47);
    for _ in 0..5 {
        let mut a_ops = BTreeMap::new();
        a_ops.insert(vec![], random_instrument(&mut generator, 2, 2));
        let mut b_ops = BTreeMap::new();
        b_ops.insert(vec![0], random_instrument(&mut generator, 2, 2));
        b_ops.insert(vec![1], random_instrument(&mut generator, 2, 2));
        let protocol = AlternatingProtocol::new(
            vec![InstrumentRound::new(a_ops.clone()).unwrap()],
            vec![InstrumentRound::new(b_ops).unwrap()],
        )
        .unwrap();
        // every single-round operator is a contraction; with n = 1 the chain
        // per side is a single branch operator
        for (_, ops) in a_ops {
            for op in ops {
                let gram = op.adjoint().mul_mat(&op).unwrap();
                let (values, _) = gram.hermitian_eig().unwrap();
                assert!(values[0] <= 1.0 + 1e-9, "top singular value too large");
            }
        }
        let _ = protocol;
    }

    // n = 2: accumulated products M^{(3)}_𝐢 M^{(1)}_𝐢 stay contractions
    let mut a_rounds = Vec::new();
    let mut b_rounds = Vec::new();
    let mut first_a = BTreeMap::new();
    first_a.insert(vec![], random_instrument(&mut generator, 2, 2));
    a_rounds.push(InstrumentRound::new(first_a.clone()).unwrap());
    let mut first_b = BTreeMap::new();
    for i in 0..2 {
        first_b.insert(vec![i], random_instrument(&mut generator, 2, 2));
    }
    b_rounds.push(InstrumentRound::new(first_b.clone()).unwrap());
    let mut third = BTreeMap::new();
    for i in 0..2 {
        for j in 0..2 {
            third.insert(vec![i, j], random_instrument(&mut generator, 2, 2));
        }
    }
    a_rounds.push(InstrumentRound::new(third.clone()).unwrap());
    let mut fourth = BTreeMap::new();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                fourth.insert(vec![i, j, k], random_instrument(&mut generator, 2, 2));
            }
        }
    }
    b_rounds.push(InstrumentRound::new(fourth).unwrap());
    let _protocol = AlternatingProtocol::new(a_rounds, b_rounds).unwrap();
    for i1 in 0..2usize {
        for i2 in 0..2usize {
            for i3 in 0..2usize {
                let chain = third.get(&vec![i1, i2]).unwrap()[i3]
                    .mul_mat(&first_a.get(&vec![]).unwrap()[i1])
                    .unwrap();
                let gram = chain.adjoint().mul_mat(&chain).unwrap();
                let (values, _) = gram.hermitian_eig().unwrap();
                assert!(
                    values[0] <= 1.0 + 1e-9,
                    "accumulated product is not a contraction"
                );
            }
        }
    }
}

#[test]
fn lifted_structure_reproduces_the_explicit_lift_formula() {
    // Ã_{i|k} = P₀ ⊗ A_{i|k} + δ_{i,r}(I − P₀) ⊗ I, element by element
    let [a1, _, _, _] = filtered_block_observables::<f64>().unwrap();
    let base = observable_to_povm(&a1, Side::A);
    let record = Operator::<f64>::basis_projector(4, 0);
    let lifted = lift_povm(&base, &record, 0).unwrap();
    let complement = &Operator::identity(4) - &record;
    for i in 0..2 {
        let mut expected = record.tensor(base.element(i));
        if i == 0 {
            expected = &expected + &complement.tensor(&Operator::identity(3));
        }
        assert!(lifted.element(i).max_abs_diff(&expected) < 1e-14);
    }
    // completeness of the lifted set
    let total = &lifted.element(0).clone() + lifted.element(1);
    assert!(total.max_abs_diff(&Operator::identity(12)) < 1e-12);
}

#[test]
fn two_filter_protocol_as_alternating_rounds_matches_the_reveal_path() {
    use bellforge::decomposition::{apply_direct, AlternatingProtocol, InstrumentRound};
    use bellforge::locc::reveal_two_bits;
    use std::collections::BTreeMap;

    let example = build_paper_state(1.0_f64 / 18.0).unwrap();
    let m = Operator::<f64>::diag_real(&[1.0, 1.0, 0.0]);
    let m_tilde = Operator::<f64>::basis_projector(3, 2);

    let mut a_ops = BTreeMap::new();
    a_ops.insert(vec![], vec![m.clone(), m_tilde.clone()]);
    let mut b_ops = BTreeMap::new();
    for i in 0..2 {
        b_ops.insert(vec![i], vec![m.clone(), m_tilde.clone()]);
    }
    let protocol = AlternatingProtocol::new(
        vec![InstrumentRound::new(a_ops).unwrap()],
        vec![InstrumentRound::new(b_ops).unwrap()],
    )
    .unwrap();

    let direct = apply_direct(&protocol, &example.state).unwrap();
    let filter_a = LocalFilter::new(Side::A, m.clone()).unwrap();
    let filter_b = LocalFilter::new(Side::B, m).unwrap();
    let (rho2, _) = reveal_two_bits(&example.state, &filter_a, &filter_b).unwrap();
    let traced = trace_out_records(&rho2, &["A'", "A''", "B'", "B''"]).unwrap();
    let distance = bellforge::operator::trace_distance(direct.matrix(), traced.matrix()).unwrap();
    assert!(distance <= 1e-12, "distance {distance}");

    // and the record-keeping composition agrees with the direct map
    let gap = bellforge::decomposition::verify_equivalence(&protocol, &example.state).unwrap();
    assert!(gap <= 1e-10, "gap {gap}");
}

#[test]
fn single_branch_unitary_map_selects_its_only_branch() {
    use bellforge::locc::select_nonlocal_branch;

    let phi = {
        let amps = [
            bellforge::C64::new(1.0, 0.0),
            bellforge::C64::new(0.0, 0.0),
            bellforge::C64::new(0.0, 0.0),
            bellforge::C64::new(1.0, 0.0),
        ];
        let space = FactorSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        bellforge::pure_state(&amps, space, 1).unwrap()
    };
    let (_, settings) = horodecki_max_chsh(&phi).unwrap();
    let povms_a = vec![
        observable_to_povm(&settings.a1, Side::A),
        observable_to_povm(&settings.a2, Side::A),
    ];
    let povms_b = vec![
        observable_to_povm(&settings.b1, Side::B),
        observable_to_povm(&settings.b2, Side::B),
    ];
    let branches = vec![(Operator::<f64>::identity(2), Operator::<f64>::identity(2))];
    let (index, state, weight) =
        select_nonlocal_branch(&phi, &branches, &povms_a, &povms_b).unwrap();
    assert_eq!(index, 0);
    assert!((weight - 1.0).abs() < 1e-12);
    assert!(state.matrix().max_abs_diff(phi.matrix()) < 1e-12);
}

#[test]
fn identity_filter_one_bit_protocol_is_trivial() {
    use bellforge::locc::{record_block, reveal_one_bit};

    let example = build_paper_state(1.0_f64 / 18.0).unwrap();
    let identity = LocalFilter::new(Side::A, Operator::identity(3)).unwrap();
    let (rho1, transcript) = reveal_one_bit(&example.state, &identity).unwrap();
    assert_eq!(transcript.bits_a_to_b(), 1);
    // all weight sits in the kept branch, which carries the input unchanged
    let (block, weight) = record_block(&rho1, &[("A'", 0), ("B'", 0)]).unwrap();
    assert!((weight - 1.0).abs() < 1e-12);
    assert!(block.matrix().max_abs_diff(example.state.matrix()) < 1e-12);
}
