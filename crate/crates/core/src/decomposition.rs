//! Alternating-round LOCC maps expressed two ways: directly as a Kraus sum
//! over outcome histories, and as a composition of record-keeping one-way
//! rounds. Tracing the records off the composition must recover the direct
//! map.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::locc::{apply_one_way, Branch, Direction, OneWayRound};
use crate::operator::{partial_trace, trace_distance, FactorSpace, Operator};
use crate::quantum::{BipartiteState, Side};
use crate::scalar::{tol, Scalar};

/// Cap on the composed space dimension; protocols beyond it are rejected
/// rather than attempted.
pub const COMPOSED_DIM_CAP: usize = 4096;

/// One round of an alternating protocol: branch operators indexed by the full
/// outcome history of the earlier rounds.
#[derive(Debug, Clone)]
pub struct InstrumentRound<S: Scalar> {
    branch_count: usize,
    rows: usize,
    cols: usize,
    ops: BTreeMap<Vec<usize>, Vec<Operator<S>>>,
}

impl<S: Scalar> InstrumentRound<S> {
    /// Branch operators per history prefix; every prefix must carry the same
    /// number of branches with identical shapes satisfying Σ F†F = I.
    pub fn new(ops: BTreeMap<Vec<usize>, Vec<Operator<S>>>) -> Result<Self> {
        let first = ops
            .values()
            .next()
            .ok_or_else(|| Error::InvalidDimension("instrument round has no prefixes".into()))?;
        let branch_count = first.len();
        if branch_count == 0 {
            return Err(Error::InvalidDimension(
                "instrument round has no branches".into(),
            ));
        }
        let rows = first[0].rows();
        let cols = first[0].cols();
        for branch_ops in ops.values() {
            if branch_ops.len() != branch_count {
                return Err(Error::DimensionMismatch(
                    "every history prefix needs the same branch count".into(),
                ));
            }
            let mut completeness = Operator::zeros(cols, cols);
            for op in branch_ops {
                if op.rows() != rows || op.cols() != cols {
                    return Err(Error::DimensionMismatch(
                        "all branch operators of a round must share their shape".into(),
                    ));
                }
                completeness = &completeness + &op.adjoint().mul_mat(op)?;
            }
            let dev = completeness.max_abs_diff(&Operator::identity(cols));
            if dev > S::real(tol::CMP) {
                return Err(Error::KrausIncomplete {
                    deviation: dev.approx_f64(),
                });
            }
        }
        Ok(Self {
            branch_count,
            rows,
            cols,
            ops,
        })
    }

    pub fn branch_count(&self) -> usize {
        self.branch_count
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn op(&self, prefix: &[usize], branch: usize) -> Result<&Operator<S>> {
        self.ops
            .get(prefix)
            .map(|v| &v[branch])
            .ok_or_else(|| Error::IndexOutOfRange(format!("missing history prefix {prefix:?}")))
    }

    pub fn prefixes(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.ops.keys()
    }
}

/// An alternating LOCC protocol of n round pairs: A measures on odd rounds,
/// B on even rounds, with operators that may depend on the full outcome
/// history.
#[derive(Debug, Clone)]
pub struct AlternatingProtocol<S: Scalar> {
    a_rounds: Vec<InstrumentRound<S>>,
    b_rounds: Vec<InstrumentRound<S>>,
}

impl<S: Scalar> AlternatingProtocol<S> {
    pub fn new(
        a_rounds: Vec<InstrumentRound<S>>,
        b_rounds: Vec<InstrumentRound<S>>,
    ) -> Result<Self> {
        if a_rounds.is_empty() || a_rounds.len() != b_rounds.len() {
            return Err(Error::InvalidDimension(
                "need n ≥ 1 round pairs, alternating A then B".into(),
            ));
        }
        let protocol = Self { a_rounds, b_rounds };
        // dimension chains per side
        for j in 1..protocol.a_rounds.len() {
            if protocol.a_rounds[j].cols() != protocol.a_rounds[j - 1].rows() {
                return Err(Error::DimensionMismatch(format!(
                    "A-side round {j} expects dimension {} but the previous round outputs {}",
                    protocol.a_rounds[j].cols(),
                    protocol.a_rounds[j - 1].rows()
                )));
            }
            if protocol.b_rounds[j].cols() != protocol.b_rounds[j - 1].rows() {
                return Err(Error::DimensionMismatch(format!(
                    "B-side round {j} expects dimension {} but the previous round outputs {}",
                    protocol.b_rounds[j].cols(),
                    protocol.b_rounds[j - 1].rows()
                )));
            }
        }
        // every round must cover exactly the histories of the earlier rounds
        let counts = protocol.branch_counts();
        for r in 0..protocol.round_count() {
            let round = protocol.round(r);
            let expected: usize = counts[..r].iter().product();
            let mut seen = 0usize;
            for prefix in round.prefixes() {
                if prefix.len() != r {
                    return Err(Error::IndexOutOfRange(format!(
                        "round {r} has a prefix of length {}",
                        prefix.len()
                    )));
                }
                for (s, &digit) in prefix.iter().enumerate() {
                    if digit >= counts[s] {
                        return Err(Error::IndexOutOfRange(format!(
                            "prefix digit {digit} exceeds branch count {}",
                            counts[s]
                        )));
                    }
                }
                seen += 1;
            }
            if seen != expected {
                return Err(Error::IndexOutOfRange(format!(
                    "round {r} covers {seen} histories, expected {expected}"
                )));
            }
        }
        Ok(protocol)
    }

    pub fn pairs(&self) -> usize {
        self.a_rounds.len()
    }

    pub fn round_count(&self) -> usize {
        2 * self.a_rounds.len()
    }

    pub fn a_rounds(&self) -> &[InstrumentRound<S>] {
        &self.a_rounds
    }

    pub fn b_rounds(&self) -> &[InstrumentRound<S>] {
        &self.b_rounds
    }

    /// Round by 0-based global index: even → A side, odd → B side.
    pub fn round(&self, r: usize) -> &InstrumentRound<S> {
        if r.is_multiple_of(2) {
            &self.a_rounds[r / 2]
        } else {
            &self.b_rounds[r / 2]
        }
    }

    /// Branch counts d_r per global round.
    pub fn branch_counts(&self) -> Vec<usize> {
        (0..self.round_count())
            .map(|r| self.round(r).branch_count())
            .collect()
    }

    fn outcome_tuples(&self) -> Vec<Vec<usize>> {
        let counts = self.branch_counts();
        let total: usize = counts.iter().product();
        let mut tuples = Vec::with_capacity(total);
        for mut flat in 0..total {
            let mut tuple = vec![0usize; counts.len()];
            for (r, &d) in counts.iter().enumerate().rev() {
                tuple[r] = flat % d;
                flat /= d;
            }
            tuples.push(tuple);
        }
        tuples
    }

    /// Product of one side's branch operators along an outcome history, later
    /// rounds multiplying on the left.
    fn side_chain(&self, side: Side, tuple: &[usize]) -> Result<Operator<S>> {
        let parity = match side {
            Side::A => 0,
            Side::B => 1,
        };
        let mut chain: Option<Operator<S>> = None;
        for r in (parity..self.round_count()).step_by(2) {
            let op = self.round(r).op(&tuple[..r], tuple[r])?;
            chain = Some(match chain {
                None => op.clone(),
                Some(prev) => op.mul_mat(&prev)?,
            });
        }
        Ok(chain.expect("protocols have at least one round per side"))
    }
}

/// Λ(ρ) = Σ_𝐢 K_𝐢 ρ K_𝐢† summed over all outcome histories, with
/// K_𝐢 the product of per-side chains.
pub fn apply_direct<S: Scalar>(
    protocol: &AlternatingProtocol<S>,
    state: &BipartiteState<S>,
) -> Result<BipartiteState<S>> {
    if state.space().len() != 2 || state.split() != 1 {
        return Err(Error::DimensionMismatch(
            "alternating protocols act on one factor per side".into(),
        ));
    }
    if protocol.a_rounds[0].cols() != state.side_dim(Side::A)
        || protocol.b_rounds[0].cols() != state.side_dim(Side::B)
    {
        return Err(Error::DimensionMismatch(format!(
            "protocol starts on {}|{} but the state is {}|{}",
            protocol.a_rounds[0].cols(),
            protocol.b_rounds[0].cols(),
            state.side_dim(Side::A),
            state.side_dim(Side::B)
        )));
    }
    let out_a = protocol.a_rounds.last().expect("nonempty").rows();
    let out_b = protocol.b_rounds.last().expect("nonempty").rows();
    let mut out = Operator::zeros(out_a * out_b, out_a * out_b);
    for tuple in protocol.outcome_tuples() {
        let ka = protocol.side_chain(Side::A, &tuple)?;
        let kb = protocol.side_chain(Side::B, &tuple)?;
        let kraus = ka.tensor(&kb);
        out = &out + &state.matrix().sandwich(&kraus)?;
    }
    let labels = state.space().labels();
    let space = FactorSpace::new(vec![(labels[0].clone(), out_a), (labels[1].clone(), out_b)])?;
    BipartiteState::assemble(out.hermitized(), space, 1)
}

/// The record-keeping composition Φ = Λ_{2n} ∘ … ∘ Λ_1: each round controls
/// on that side's earlier records, applies its branch operator, and stores
/// the outcome in a fresh ancilla pair.
#[derive(Debug, Clone)]
pub struct ComposedMap<S: Scalar> {
    rounds: Vec<OneWayRound<S>>,
    total_space: FactorSpace,
}

impl<S: Scalar> ComposedMap<S> {
    pub fn rounds(&self) -> &[OneWayRound<S>] {
        &self.rounds
    }

    /// Factor layout of the output for base labels "A" and "B".
    pub fn total_space(&self) -> &FactorSpace {
        &self.total_space
    }

    /// Fold the one-way rounds over a state.
    pub fn apply(&self, state: &BipartiteState<S>) -> Result<BipartiteState<S>> {
        let mut current = state.clone();
        for round in &self.rounds {
            current = apply_one_way(&current, round)?;
        }
        Ok(current)
    }
}

/// Build the one-way realization of an alternating protocol. Fails when the
/// composed space would exceed [`COMPOSED_DIM_CAP`].
pub fn build_composed<S: Scalar>(protocol: &AlternatingProtocol<S>) -> Result<ComposedMap<S>> {
    let counts = protocol.branch_counts();
    let ancilla: usize = counts.iter().map(|d| d * d).product();
    let base = protocol.a_rounds.last().expect("nonempty").rows()
        * protocol.b_rounds.last().expect("nonempty").rows();
    let total = base.saturating_mul(ancilla);
    if total > COMPOSED_DIM_CAP {
        return Err(Error::DimensionCapExceeded {
            dim: total,
            cap: COMPOSED_DIM_CAP,
        });
    }

    let mut rounds = Vec::with_capacity(protocol.round_count());
    for r in 0..protocol.round_count() {
        let round = protocol.round(r);
        let mut branches = Vec::new();
        let mut prefixes: Vec<Vec<usize>> = round.prefixes().cloned().collect();
        prefixes.sort();
        for prefix in &prefixes {
            for branch in 0..round.branch_count() {
                let op = round.op(prefix, branch)?;
                // controls on this side's earlier records, in creation order
                let mut control = Operator::identity(1);
                for (s, &digit) in prefix.iter().enumerate() {
                    control = control.tensor(&Operator::basis_projector(counts[s], digit));
                }
                let kraus = if r % 2 == 0 {
                    control.tensor(op) // A side: records left of the system
                } else {
                    op.tensor(&control) // B side: system left of the records
                };
                branches.push(Branch {
                    kraus,
                    record_label: branch.to_string(),
                });
            }
        }
        let direction = if r % 2 == 0 {
            Direction::AToB
        } else {
            Direction::BToA
        };
        let (sender_label, receiver_label) = if r % 2 == 0 {
            (format!("A'{}", r + 1), format!("B'{}", r + 1))
        } else {
            (format!("B'{}", r + 1), format!("A'{}", r + 1))
        };
        rounds.push(OneWayRound::new(
            direction,
            branches,
            sender_label,
            receiver_label,
        )?);
    }

    // canonical layout for base labels A and B
    let mut factors: Vec<(String, usize)> = Vec::new();
    for (r, &d) in counts.iter().enumerate() {
        factors.push((format!("A'{}", r + 1), d));
    }
    factors.push((
        "A".into(),
        protocol.a_rounds.last().expect("nonempty").rows(),
    ));
    factors.push((
        "B".into(),
        protocol.b_rounds.last().expect("nonempty").rows(),
    ));
    for (r, &d) in counts.iter().enumerate() {
        factors.push((format!("B'{}", r + 1), d));
    }
    let total_space = FactorSpace::new(factors)?;
    Ok(ComposedMap {
        rounds,
        total_space,
    })
}

/// Trace distance between the ancilla-traced composition and the direct map:
/// tr_{records} Φ(ρ) versus Λ(ρ). The contract is ≤ 1e−10 for exact-arithmetic
/// protocols of moderate size.
pub fn verify_equivalence<S: Scalar>(
    protocol: &AlternatingProtocol<S>,
    state: &BipartiteState<S>,
) -> Result<S> {
    if state.space().len() != 2 || state.split() != 1 {
        return Err(Error::DimensionMismatch(
            "alternating protocols act on one factor per side".into(),
        ));
    }
    let composed = build_composed(protocol)?;
    let phi = composed.apply(state)?;
    let a_label = state.space().labels()[0].as_str();
    let b_label = state.space().labels()[1].as_str();
    let reduced = partial_trace(phi.matrix(), phi.space(), &[a_label, b_label])?;
    let direct = apply_direct(protocol, state)?;
    trace_distance(&reduced, direct.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn all_prefixes(counts: &[usize]) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for &d in counts {
            let mut next = Vec::new();
            for p in &out {
                for digit in 0..d {
                    let mut q = p.clone();
                    q.push(digit);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    fn identity_round(dim: usize, prior_counts: &[usize]) -> InstrumentRound<f64> {
        let mut ops = BTreeMap::new();
        for p in all_prefixes(prior_counts) {
            ops.insert(p, vec![Operator::identity(dim)]);
        }
        InstrumentRound::new(ops).unwrap()
    }

    fn qubit_state(entries: [f64; 4]) -> BipartiteState<f64> {
        let space = FactorSpace::new(vec![("A", 2), ("B", 2)]).unwrap();
        BipartiteState::new(Operator::diag_real(&entries), space, 1).unwrap()
    }

    #[test]
    fn trivial_single_branch_protocol_is_the_identity() {
        let a1 = identity_round(2, &[]);
        let b2 = identity_round(2, &[1]);
        let protocol = AlternatingProtocol::new(vec![a1], vec![b2]).unwrap();
        let rho = qubit_state([0.4, 0.3, 0.2, 0.1]);
        let out = apply_direct(&protocol, &rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-14);
        let distance = verify_equivalence(&protocol, &rho).unwrap();
        assert!(distance < 1e-14);
    }

    #[test]
    fn composed_dimension_bookkeeping() {
        // n = 1, d₁ = d₂ = 2 on qubits: 2⁴ records × 2 × 2 base = 64
        let protocol = two_filter_protocol();
        let composed = build_composed(&protocol).unwrap();
        assert_eq!(composed.total_space().total_dim(), 64);
        assert_eq!(
            composed.total_space().labels(),
            &["A'1", "A'2", "A", "B", "B'1", "B'2"]
        );
    }

    /// n = 1 protocol with projector instruments on both qubits.
    fn two_filter_protocol() -> AlternatingProtocol<f64> {
        let p0 = Operator::<f64>::basis_projector(2, 0);
        let p1 = Operator::<f64>::basis_projector(2, 1);
        let mut a_ops = BTreeMap::new();
        a_ops.insert(vec![], vec![p0.clone(), p1.clone()]);
        let mut b_ops = BTreeMap::new();
        b_ops.insert(vec![0], vec![p0.clone(), p1.clone()]);
        b_ops.insert(vec![1], vec![p1.clone(), p0.clone()]); // history-dependent
        AlternatingProtocol::new(
            vec![InstrumentRound::new(a_ops).unwrap()],
            vec![InstrumentRound::new(b_ops).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn direct_and_composed_paths_agree_on_projector_instruments() {
        let protocol = two_filter_protocol();
        let rho = qubit_state([0.4, 0.3, 0.2, 0.1]);
        let distance = verify_equivalence(&protocol, &rho).unwrap();
        assert!(distance <= 1e-12, "distance {distance}");
    }

    #[test]
    fn history_prefixes_must_cover_every_outcome() {
        let p0 = Operator::<f64>::basis_projector(2, 0);
        let p1 = Operator::<f64>::basis_projector(2, 1);
        let mut a_ops = BTreeMap::new();
        a_ops.insert(vec![], vec![p0.clone(), p1.clone()]);
        let mut b_ops = BTreeMap::new();
        b_ops.insert(vec![0], vec![p0, p1]); // missing history [1]
        let err = AlternatingProtocol::new(
            vec![InstrumentRound::new(a_ops).unwrap()],
            vec![InstrumentRound::new(b_ops).unwrap()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange(_)));
    }

    #[test]
    fn dimension_cap_is_enforced() {
        // qutrits with 3-outcome rounds: 3·3·(3·3)² = way past 4096 with n = 2
        let mut prefixes0 = BTreeMap::new();
        let third: Vec<Operator<f64>> = (0..3).map(|i| Operator::basis_projector(3, i)).collect();
        prefixes0.insert(vec![], third.clone());
        let a1 = InstrumentRound::new(prefixes0).unwrap();
        let mut prefixes1 = BTreeMap::new();
        for i in 0..3 {
            prefixes1.insert(vec![i], third.clone());
        }
        let b2 = InstrumentRound::new(prefixes1).unwrap();
        let mut prefixes2 = BTreeMap::new();
        for i in 0..3 {
            for j in 0..3 {
                prefixes2.insert(vec![i, j], third.clone());
            }
        }
        let a3 = InstrumentRound::new(prefixes2).unwrap();
        let mut prefixes3 = BTreeMap::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    prefixes3.insert(vec![i, j, k], third.clone());
                }
            }
        }
        let b4 = InstrumentRound::new(prefixes3).unwrap();
        let protocol = AlternatingProtocol::new(vec![a1, a3], vec![b2, b4]).unwrap();
        assert!(matches!(
            build_composed(&protocol),
            Err(Error::DimensionCapExceeded { .. })
        ));
    }

    #[test]
    fn composed_output_is_block_diagonal_over_records() {
        let protocol = two_filter_protocol();
        let rho = qubit_state([0.4, 0.3, 0.2, 0.1]);
        let composed = build_composed(&protocol).unwrap();
        let phi = composed.apply(&rho).unwrap();
        // records live at strides: factors A'1 A'2 A B B'1 B'2
        let dims = phi.space().dims().to_vec();
        let strides = phi.space().strides();
        let digit = |flat: usize, f: usize| (flat / strides[f]) % dims[f];
        let record_factors = [0usize, 1, 4, 5];
        let m = phi.matrix();
        for r in 0..m.rows() {
            for c in 0..m.cols() {
                if record_factors.iter().any(|&f| digit(r, f) != digit(c, f))
                    && m[(r, c)].norm() > 1e-10
                {
                    panic!("off-block entry at ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn random_instrument_round_trip() {
        // seeded random two-branch isometry instruments, n = 1
        let mut seed = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut random_instrument = |dim: usize, branches: usize| -> Vec<Operator<f64>> {
            let stacked = branches * dim;
            let mut columns: Vec<Vec<Complex<f64>>> = Vec::new();
            for _ in 0..dim {
                let mut col: Vec<Complex<f64>> =
                    (0..stacked).map(|_| Complex::new(next(), next())).collect();
                for prev in &columns {
                    let overlap: Complex<f64> =
                        prev.iter().zip(col.iter()).map(|(p, c)| p.conj() * c).sum();
                    for (ci, pi) in col.iter_mut().zip(prev.iter()) {
                        *ci -= overlap * pi;
                    }
                }
                let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                for z in col.iter_mut() {
                    *z /= norm;
                }
                columns.push(col);
            }
            (0..branches)
                .map(|b| Operator::from_fn(dim, dim, |r, c| columns[c][b * dim + r]))
                .collect()
        };
        for _ in 0..5 {
            let mut a_ops = BTreeMap::new();
            a_ops.insert(vec![], random_instrument(2, 2));
            let mut b_ops = BTreeMap::new();
            b_ops.insert(vec![0], random_instrument(2, 2));
            b_ops.insert(vec![1], random_instrument(2, 2));
            let protocol = AlternatingProtocol::new(
                vec![InstrumentRound::new(a_ops).unwrap()],
                vec![InstrumentRound::new(b_ops).unwrap()],
            )
            .unwrap();
            let rho = qubit_state([0.4, 0.3, 0.2, 0.1]);
            let out = apply_direct(&protocol, &rho).unwrap();
            assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
            let distance = verify_equivalence(&protocol, &rho).unwrap();
            assert!(distance <= 1e-10, "distance {distance}");
        }
    }
}
