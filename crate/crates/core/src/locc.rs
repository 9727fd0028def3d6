//! One-way LOCC instruments and the constructive protocols built from them:
//! the two-bit two-filter protocol, the one-bit single-filter protocol,
//! separable-branch selection, and record bookkeeping.
//!
//! Canonical factor layout: A-side records accumulate left of the A system in
//! creation order, B-side records right of the B system, so two rounds on a
//! plain bipartite state produce A′ A″ A | B B′ B″.

use crate::behavior::behavior_from_state;
use crate::error::{Error, Result};
use crate::filtering::LocalFilter;
use crate::operator::{FactorSpace, Operator};
use crate::polytope::{lp_membership, MembershipResult};
use crate::quantum::{BipartiteState, Povm, Side};
use crate::scalar::{tol, Scalar};

/// Direction of a one-way round: the sender measures, the receiver records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AToB,
    BToA,
}

impl Direction {
    pub fn sender(self) -> Side {
        match self {
            Direction::AToB => Side::A,
            Direction::BToA => Side::B,
        }
    }
}

/// One Kraus branch of an instrument together with the record value it
/// broadcasts. Branches may share a record value; the transmitted alphabet is
/// the set of distinct labels.
#[derive(Debug, Clone)]
pub struct Branch<S: Scalar> {
    pub kraus: Operator<S>,
    pub record_label: String,
}

/// A one-way LOCC round: an instrument on the sender's side whose outcome is
/// recorded in one fresh ancilla per side.
#[derive(Debug, Clone)]
pub struct OneWayRound<S: Scalar> {
    direction: Direction,
    branches: Vec<Branch<S>>,
    sender_record_label: String,
    receiver_record_label: String,
    record_values: Vec<String>,
}

impl<S: Scalar> OneWayRound<S> {
    pub fn new(
        direction: Direction,
        branches: Vec<Branch<S>>,
        sender_record_label: impl Into<String>,
        receiver_record_label: impl Into<String>,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidDimension("a round needs branches".into()));
        }
        let cols = branches[0].kraus.cols();
        let rows = branches[0].kraus.rows();
        let mut completeness = Operator::zeros(cols, cols);
        for branch in &branches {
            if branch.kraus.cols() != cols || branch.kraus.rows() != rows {
                return Err(Error::DimensionMismatch(
                    "all branches of a round must share their dimensions".into(),
                ));
            }
            let gram = branch.kraus.adjoint().mul_mat(&branch.kraus)?;
            completeness = &completeness + &gram;
        }
        let dev = completeness.max_abs_diff(&Operator::identity(cols));
        if dev > S::real(tol::CMP) {
            return Err(Error::KrausIncomplete {
                deviation: dev.approx_f64(),
            });
        }
        let mut record_values = Vec::new();
        for branch in &branches {
            if !record_values.contains(&branch.record_label) {
                record_values.push(branch.record_label.clone());
            }
        }
        Ok(Self {
            direction,
            branches,
            sender_record_label: sender_record_label.into(),
            receiver_record_label: receiver_record_label.into(),
            record_values,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn branches(&self) -> &[Branch<S>] {
        &self.branches
    }

    /// Dimension of each record ancilla: the number of distinct record values.
    pub fn record_dim(&self) -> usize {
        self.record_values.len()
    }

    pub fn sender_record_dim(&self) -> usize {
        self.record_dim()
    }

    pub fn receiver_record_dim(&self) -> usize {
        self.record_dim()
    }

    /// Classical bits transmitted: ⌈log₂(record alphabet)⌉.
    pub fn bits(&self) -> usize {
        let d = self.record_dim();
        let mut bits = 0usize;
        while (1usize << bits) < d {
            bits += 1;
        }
        bits
    }

    fn record_value(&self, branch: usize) -> usize {
        self.record_values
            .iter()
            .position(|v| *v == self.branches[branch].record_label)
            .expect("record values cover every branch")
    }
}

/// Accounting of a protocol run: the rounds applied, per-direction bit
/// totals, and the final factor layout.
#[derive(Debug, Clone)]
pub struct ProtocolTranscript<S: Scalar> {
    rounds: Vec<OneWayRound<S>>,
    bits_a_to_b: usize,
    bits_b_to_a: usize,
    final_space: FactorSpace,
}

impl<S: Scalar> ProtocolTranscript<S> {
    fn new(rounds: Vec<OneWayRound<S>>, final_space: FactorSpace) -> Self {
        let mut bits_a_to_b = 0;
        let mut bits_b_to_a = 0;
        for round in &rounds {
            match round.direction() {
                Direction::AToB => bits_a_to_b += round.bits(),
                Direction::BToA => bits_b_to_a += round.bits(),
            }
        }
        Self {
            rounds,
            bits_a_to_b,
            bits_b_to_a,
            final_space,
        }
    }

    pub fn rounds(&self) -> &[OneWayRound<S>] {
        &self.rounds
    }

    pub fn bits_a_to_b(&self) -> usize {
        self.bits_a_to_b
    }

    pub fn bits_b_to_a(&self) -> usize {
        self.bits_b_to_a
    }

    pub fn final_space(&self) -> &FactorSpace {
        &self.final_space
    }
}

/// Apply a one-way round: ρ ↦ Σ_i R_i ⊗ (F_i ρ F_i†) ⊗ S_i with the sender's
/// Kraus acting on that party's whole side and both fresh records holding the
/// broadcast value.
///
/// Rectangular branches are supported when the sender side carries a single
/// system factor (A side: last factor; B side: first): the dimension change
/// is attributed to it.
pub fn apply_one_way<S: Scalar>(
    state: &BipartiteState<S>,
    round: &OneWayRound<S>,
) -> Result<BipartiteState<S>> {
    let split = state.split();
    let sender = round.direction().sender();
    let sender_dim = state.side_dim(sender);
    let kraus_cols = round.branches[0].kraus.cols();
    let kraus_rows = round.branches[0].kraus.rows();
    if kraus_cols != sender_dim {
        return Err(Error::DimensionMismatch(format!(
            "round branches act on dimension {kraus_cols} but the sender side is {sender_dim}"
        )));
    }

    // factor dims after the instrument, before records are appended
    let mut mid_dims: Vec<usize> = state.space().dims().to_vec();
    if kraus_rows != kraus_cols {
        let sys_pos = match sender {
            Side::A => split - 1,
            Side::B => split,
        };
        let passive = sender_dim / mid_dims[sys_pos];
        if !kraus_rows.is_multiple_of(passive) {
            return Err(Error::DimensionMismatch(format!(
                "rectangular branch rows {kraus_rows} do not factor over the sender's records"
            )));
        }
        mid_dims[sys_pos] = kraus_rows / passive;
    }
    let mid_space = FactorSpace::new(
        state
            .space()
            .labels()
            .iter()
            .cloned()
            .zip(mid_dims.iter().copied())
            .collect(),
    )?;

    let rec_dim = round.record_dim();
    let (a_rec_label, b_rec_label) = match round.direction() {
        Direction::AToB => (&round.sender_record_label, &round.receiver_record_label),
        Direction::BToA => (&round.receiver_record_label, &round.sender_record_label),
    };
    let with_a_rec = mid_space.insert(split - 1, a_rec_label.clone(), rec_dim)?;
    let out_space = with_a_rec.insert(with_a_rec.len(), b_rec_label.clone(), rec_dim)?;
    let out_split = split + 1;

    // position of each mid factor inside the output layout
    let n = mid_space.len();
    let out_position = |f: usize| -> usize {
        if f < split - 1 {
            f
        } else if f == split - 1 {
            split
        } else {
            f + 1
        }
    };
    let out_strides = out_space.strides();
    let mid_strides = mid_space.strides();
    let mid_dim_total = mid_space.total_dim();
    let mut lookup = vec![0usize; mid_dim_total];
    for (flat, slot) in lookup.iter_mut().enumerate() {
        let mut rem = flat;
        let mut offset = 0usize;
        for f in 0..n {
            let digit = rem / mid_strides[f];
            rem %= mid_strides[f];
            offset += digit * out_strides[out_position(f)];
        }
        *slot = offset;
    }
    let a_rec_stride = out_strides[split - 1];
    let b_rec_stride = out_strides[out_space.len() - 1];

    let out_dim = out_space.total_dim();
    let mut out = Operator::zeros(out_dim, out_dim);
    for (idx, branch) in round.branches.iter().enumerate() {
        let full_kraus = match sender {
            Side::A => branch
                .kraus
                .tensor(&Operator::identity(state.side_dim(Side::B))),
            Side::B => Operator::identity(state.side_dim(Side::A)).tensor(&branch.kraus),
        };
        let mid = state.matrix().sandwich(&full_kraus)?;
        let v = round.record_value(idx);
        let rec_offset = v * a_rec_stride + v * b_rec_stride;
        for r in 0..mid.rows() {
            let out_r = lookup[r] + rec_offset;
            for c in 0..mid.cols() {
                let z = mid[(r, c)];
                if z.re.is_zero() && z.im.is_zero() {
                    continue;
                }
                out[(out_r, lookup[c] + rec_offset)] += z;
            }
        }
    }
    BipartiteState::assemble(out, out_space, out_split)
}

fn fresh_record_label(space: &FactorSpace, base: &str) -> String {
    let mut label = base.to_string();
    while space.labels().contains(&label) {
        label.push('\'');
    }
    label
}

fn system_label<S: Scalar>(state: &BipartiteState<S>, side: Side) -> String {
    let labels = state.side_labels(side);
    match side {
        Side::A => labels.last().expect("sides are nonempty").clone(),
        Side::B => labels.first().expect("sides are nonempty").clone(),
    }
}

/// The two-bit protocol: an A→B round with {M, M̃} followed by a B→A round
/// with {N, Ñ}. The output lives on A′ A″ A | B B′ B″ and carries the four
/// filtered operators in the four record blocks.
pub fn reveal_two_bits<S: Scalar>(
    state: &BipartiteState<S>,
    m_a: &LocalFilter<S>,
    n_b: &LocalFilter<S>,
) -> Result<(BipartiteState<S>, ProtocolTranscript<S>)> {
    if m_a.side() != Side::A || n_b.side() != Side::B {
        return Err(Error::DimensionMismatch(
            "reveal_two_bits takes an A-side filter then a B-side filter".into(),
        ));
    }
    if m_a.dim() != state.side_dim(Side::A) || n_b.dim() != state.side_dim(Side::B) {
        return Err(Error::DimensionMismatch(format!(
            "filters act on {}|{} but the state sides are {}|{}",
            m_a.dim(),
            n_b.dim(),
            state.side_dim(Side::A),
            state.side_dim(Side::B)
        )));
    }
    let m_tilde = m_a.complement()?;
    let n_tilde = n_b.complement()?;

    let a_base = format!("{}'", system_label(state, Side::A));
    let b_base = format!("{}'", system_label(state, Side::B));
    let round1 = OneWayRound::new(
        Direction::AToB,
        vec![
            Branch {
                kraus: m_a.matrix().clone(),
                record_label: "0".into(),
            },
            Branch {
                kraus: m_tilde.matrix().clone(),
                record_label: "1".into(),
            },
        ],
        fresh_record_label(state.space(), &a_base),
        fresh_record_label(state.space(), &b_base),
    )?;
    let mid = apply_one_way(state, &round1)?;

    // N acts on the original B system; the round-1 record rides along
    let rec1_dim = mid.side_dim(Side::B) / n_b.dim();
    let n_full = n_b.matrix().tensor(&Operator::identity(rec1_dim));
    let n_tilde_full = n_tilde.matrix().tensor(&Operator::identity(rec1_dim));
    let round2 = OneWayRound::new(
        Direction::BToA,
        vec![
            Branch {
                kraus: n_full,
                record_label: "0".into(),
            },
            Branch {
                kraus: n_tilde_full,
                record_label: "1".into(),
            },
        ],
        fresh_record_label(mid.space(), &b_base),
        fresh_record_label(mid.space(), &a_base),
    )?;
    let out = apply_one_way(&mid, &round2)?;
    let transcript = ProtocolTranscript::new(vec![round1, round2], out.space().clone());
    Ok((out, transcript))
}

/// The one-bit protocol: a single A→B round with {M, M̃}.
pub fn reveal_one_bit<S: Scalar>(
    state: &BipartiteState<S>,
    m_a: &LocalFilter<S>,
) -> Result<(BipartiteState<S>, ProtocolTranscript<S>)> {
    if m_a.side() != Side::A {
        return Err(Error::DimensionMismatch(
            "reveal_one_bit filters the A side".into(),
        ));
    }
    if m_a.dim() != state.side_dim(Side::A) {
        return Err(Error::DimensionMismatch(format!(
            "filter acts on {} but the state's A side is {}",
            m_a.dim(),
            state.side_dim(Side::A)
        )));
    }
    let m_tilde = m_a.complement()?;
    let a_base = format!("{}'", system_label(state, Side::A));
    let b_base = format!("{}'", system_label(state, Side::B));
    let round = OneWayRound::new(
        Direction::AToB,
        vec![
            Branch {
                kraus: m_a.matrix().clone(),
                record_label: "0".into(),
            },
            Branch {
                kraus: m_tilde.matrix().clone(),
                record_label: "1".into(),
            },
        ],
        fresh_record_label(state.space(), &a_base),
        fresh_record_label(state.space(), &b_base),
    )?;
    let out = apply_one_way(state, &round)?;
    let transcript = ProtocolTranscript::new(vec![round], out.space().clone());
    Ok((out, transcript))
}

/// Behavior of the state under the given POVMs, then polytope membership:
/// an outside verdict is a nonlocality certificate for the state.
pub fn certify_nonlocal<S: Scalar>(
    state: &BipartiteState<S>,
    povms_a: &[Povm<S>],
    povms_b: &[Povm<S>],
) -> Result<MembershipResult<S>> {
    let behavior = behavior_from_state(state, povms_a, povms_b)?;
    lp_membership(&behavior)
}

/// Scan the branches of a separable map Σᵢ (Mᵢ⊗Nᵢ)·(Mᵢ⊗Nᵢ)† for the first
/// one whose normalized output behavior leaves the local polytope.
///
/// Requires the aggregate output behavior to be outside; convexity then
/// guarantees a nonlocal branch exists.
pub fn select_nonlocal_branch<S: Scalar>(
    state: &BipartiteState<S>,
    separable_branches: &[(Operator<S>, Operator<S>)],
    povms_a: &[Povm<S>],
    povms_b: &[Povm<S>],
) -> Result<(usize, BipartiteState<S>, S)> {
    if separable_branches.is_empty() {
        return Err(Error::InvalidDimension("no branches given".into()));
    }
    let (da, db) = (state.side_dim(Side::A), state.side_dim(Side::B));
    let mut completeness = Operator::zeros(da * db, da * db);
    for (m, n) in separable_branches {
        if m.cols() != da || n.cols() != db || !m.is_square() || !n.is_square() {
            return Err(Error::DimensionMismatch(
                "separable branches must be square on the state's sides".into(),
            ));
        }
        let gram = m.adjoint().mul_mat(m)?.tensor(&n.adjoint().mul_mat(n)?);
        completeness = &completeness + &gram;
    }
    let dev = completeness.max_abs_diff(&Operator::identity(da * db));
    if dev > S::real(tol::CMP) {
        return Err(Error::KrausIncomplete {
            deviation: dev.approx_f64(),
        });
    }

    let mut aggregate = Operator::zeros(state.dim(), state.dim());
    let mut weighted: Vec<(S, Operator<S>)> = Vec::with_capacity(separable_branches.len());
    for (m, n) in separable_branches {
        let kraus = m.tensor(n);
        let unnormalized = state.matrix().sandwich(&kraus)?;
        aggregate = &aggregate + &unnormalized;
        let weight = unnormalized.trace().re;
        weighted.push((weight, unnormalized));
    }
    let aggregate_state =
        BipartiteState::assemble(aggregate.hermitized(), state.space().clone(), state.split())?;
    let aggregate_behavior = behavior_from_state(&aggregate_state, povms_a, povms_b)?;
    if lp_membership(&aggregate_behavior)?.inside() {
        return Err(Error::AggregateBehaviorLocal);
    }

    for (index, (weight, unnormalized)) in weighted.iter().enumerate() {
        if *weight <= S::real(tol::BRANCH_PROB) {
            continue;
        }
        let branch_state = BipartiteState::assemble(
            unnormalized.scale_re(S::one() / *weight).hermitized(),
            state.space().clone(),
            state.split(),
        )?;
        let behavior = behavior_from_state(&branch_state, povms_a, povms_b)?;
        if !lp_membership(&behavior)?.inside() {
            return Ok((index, branch_state, *weight));
        }
    }
    Err(Error::NoNonlocalBranch)
}

/// Trace out the listed factors (typically records); the partition follows
/// the kept labels. Dropping nothing returns the state unchanged.
pub fn trace_out_records<S: Scalar>(
    state: &BipartiteState<S>,
    drop: &[&str],
) -> Result<BipartiteState<S>> {
    for label in drop {
        state.space().position(label)?;
    }
    if drop.is_empty() {
        return Ok(state.clone());
    }
    let keep: Vec<&str> = state
        .space()
        .labels()
        .iter()
        .map(|l| l.as_str())
        .filter(|l| !drop.contains(l))
        .collect();
    state.reduce(&keep)
}

/// Project onto a joint record assignment, normalize, and drop the assigned
/// factors. Returns the conditional block state and its weight.
pub fn record_block<S: Scalar>(
    state: &BipartiteState<S>,
    assignments: &[(&str, usize)],
) -> Result<(BipartiteState<S>, S)> {
    let mut projector = Operator::identity(1);
    for (f, label) in state.space().labels().iter().enumerate() {
        let dim = state.space().dims()[f];
        let factor_proj = match assignments.iter().find(|(l, _)| l == label) {
            Some(&(_, value)) => {
                if value >= dim {
                    return Err(Error::IndexOutOfRange(format!(
                        "record value {value} exceeds factor {label} of dimension {dim}"
                    )));
                }
                Operator::basis_projector(dim, value)
            }
            None => Operator::identity(dim),
        };
        projector = projector.tensor(&factor_proj);
    }
    for (label, _) in assignments {
        state.space().position(label)?;
    }
    let sandwiched = state.matrix().sandwich(&projector)?;
    let weight = sandwiched.trace().re;
    if weight <= S::real(tol::BRANCH_PROB) {
        return Err(Error::ZeroSuccessProbability);
    }
    let keep: Vec<&str> = state
        .space()
        .labels()
        .iter()
        .map(|l| l.as_str())
        .filter(|l| !assignments.iter().any(|(a, _)| a == l))
        .collect();
    let reduced = crate::operator::partial_trace(&sandwiched, state.space(), &keep)?;
    let sub = state.space().retain(&keep)?;
    let kept_a = state
        .side_labels(Side::A)
        .iter()
        .filter(|l| keep.contains(&l.as_str()))
        .count();
    let block = BipartiteState::assemble(
        reduced.scale_re(S::one() / weight).hermitized(),
        sub,
        kept_a,
    )?;
    Ok((block, weight))
}
