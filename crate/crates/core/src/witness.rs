//! CHSH evaluation, the canonical filtered-example observables on the
//! record-extended spaces, and the two-qubit correlation-matrix criterion for
//! finding maximal CHSH settings.

use num_complex::Complex;

use crate::behavior::Behavior;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::quantum::{BipartiteState, DichotomicObservable, Side};
use crate::scalar::{tol, Scalar};

/// Two dichotomic observables per side.
#[derive(Debug, Clone)]
pub struct ChshSettings<S: Scalar> {
    pub a1: DichotomicObservable<S>,
    pub a2: DichotomicObservable<S>,
    pub b1: DichotomicObservable<S>,
    pub b2: DichotomicObservable<S>,
}

/// ⟨A₁(B₁+B₂) + A₂(B₁−B₂)⟩ on a bipartite state.
///
/// A value beyond the quantum maximum 2√2 signals tolerance drift and is
/// reported as a warning, never masked.
pub fn chsh_value<S: Scalar>(state: &BipartiteState<S>, s: &ChshSettings<S>) -> Result<S> {
    let (da, db) = (state.side_dim(Side::A), state.side_dim(Side::B));
    if s.a1.dim() != da || s.a2.dim() != da || s.b1.dim() != db || s.b2.dim() != db {
        return Err(Error::DimensionMismatch(format!(
            "settings act on {}|{} but the state sides are {da}|{db}",
            s.a1.dim(),
            s.b1.dim()
        )));
    }
    let b_sum = s.b1.matrix() + s.b2.matrix();
    let b_diff = s.b1.matrix() - s.b2.matrix();
    let op = &s.a1.matrix().tensor(&b_sum) + &s.a2.matrix().tensor(&b_diff);
    let value = state.expectation(&op)?;
    let tsirelson = S::real(2.0) * S::real(2.0).sqrt() + S::real(tol::CMP);
    if value.abs() > tsirelson {
        eprintln!(
            "warning: CHSH value {} exceeds the quantum bound 2√2",
            value.approx_f64()
        );
    }
    Ok(value)
}

/// CHSH functional of a 2-setting/2-outcome behavior, outcome 0 ↔ +1:
/// E(0,0) + E(0,1) + E(1,0) − E(1,1).
pub fn chsh_of_behavior<S: Scalar>(behavior: &Behavior<S>) -> Result<S> {
    let sc = behavior.scenario();
    if sc.outcomes_a() != [2, 2] || sc.outcomes_b() != [2, 2] {
        return Err(Error::DimensionMismatch(
            "CHSH needs two settings with two outcomes per side".into(),
        ));
    }
    let correlator = |k: usize, l: usize| {
        behavior.prob(k, l, 0, 0) - behavior.prob(k, l, 0, 1) - behavior.prob(k, l, 1, 0)
            + behavior.prob(k, l, 1, 1)
    };
    Ok(correlator(0, 0) + correlator(0, 1) + correlator(1, 0) - correlator(1, 1))
}

/// σ₁ = |0⟩⟨0| − |1⟩⟨1| on a three-level system.
pub fn qutrit_sigma1<S: Scalar>() -> Operator<S> {
    Operator::diag_real(&[S::one(), -S::one(), S::zero()])
}

/// σ₂ = |0⟩⟨1| + |1⟩⟨0| on a three-level system.
pub fn qutrit_sigma2<S: Scalar>() -> Operator<S> {
    let mut op = Operator::zeros(3, 3);
    op[(0, 1)] = Complex::new(S::one(), S::zero());
    op[(1, 0)] = Complex::new(S::one(), S::zero());
    op
}

/// The qutrit observables measured on the filtered block: σ_k + M̃ for the A
/// side and [σ′₁ + (3−2l)σ′₂]/√2 + Ñ for the B side (l ∈ {1, 2}).
pub fn filtered_block_observables<S: Scalar>() -> Result<[DichotomicObservable<S>; 4]> {
    let m_tilde = Operator::basis_projector(3, 2);
    let a1 = DichotomicObservable::new(&qutrit_sigma1::<S>() + &m_tilde)?;
    let a2 = DichotomicObservable::new(&qutrit_sigma2::<S>() + &m_tilde)?;
    let inv_sqrt2 = S::one() / S::real(2.0).sqrt();
    let b_of = |sign: S| -> Result<DichotomicObservable<S>> {
        let combo =
            (&qutrit_sigma1::<S>() + &qutrit_sigma2::<S>().scale_re(sign)).scale_re(inv_sqrt2);
        DichotomicObservable::new(&combo + &m_tilde)
    };
    Ok([a1, a2, b_of(S::one())?, b_of(-S::one())?])
}

/// The dichotomic observables certifying the two-bit protocol output on the
/// 12-dimensional record-extended sides:
/// A_k = P₀ ⊗ (σ_k + M̃) + P̃ ⊗ I and
/// B_l = ([σ′₁ + (3−2l)σ′₂]/√2 + Ñ) ⊗ Q₀ + I ⊗ Q̃.
///
/// The parameter is unused by the observables themselves; it is kept so the
/// signature mirrors the state-family constructor.
pub fn paper_observables<S: Scalar>(_p: S) -> Result<ChshSettings<S>> {
    let [qa1, qa2, qb1, qb2] = filtered_block_observables::<S>()?;
    let rec0 = Operator::basis_projector(4, 0); // |0⟩⟨0| ⊗ |0⟩⟨0| on a record pair
    let rec_rest = &Operator::identity(4) - &rec0;
    let sys_id = Operator::identity(3);

    let lift_a = |obs: &DichotomicObservable<S>| {
        DichotomicObservable::new(&rec0.tensor(obs.matrix()) + &rec_rest.tensor(&sys_id))
    };
    let lift_b = |obs: &DichotomicObservable<S>| {
        DichotomicObservable::new(&obs.matrix().tensor(&rec0) + &sys_id.tensor(&rec_rest))
    };
    Ok(ChshSettings {
        a1: lift_a(&qa1)?,
        a2: lift_a(&qa2)?,
        b1: lift_b(&qb1)?,
        b2: lift_b(&qb2)?,
    })
}

/// Eigendecomposition of a real symmetric 3×3 matrix by Jacobi rotations.
/// Returns eigenvalues descending with matching eigenvector columns.
#[allow(clippy::needless_range_loop)]
fn sym_eig3<S: Scalar>(m: [[S; 3]; 3]) -> ([S; 3], [[S; 3]; 3]) {
    let mut a = m;
    let mut v = [[S::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = S::one();
    }
    for _ in 0..60 {
        let mut off = S::zero();
        for p in 0..3 {
            for q in (p + 1)..3 {
                off = off.max(a[p][q].abs());
            }
        }
        if off <= S::epsilon() * S::real(8.0) {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..3 {
                let apq = a[p][q];
                if apq.abs() <= S::epsilon() {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (S::real(2.0) * apq);
                let t = {
                    let sgn = if tau < S::zero() { -S::one() } else { S::one() };
                    sgn / (tau.abs() + (S::one() + tau * tau).sqrt())
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;
                for r in 0..3 {
                    let arp = a[r][p];
                    let arq = a[r][q];
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for col in 0..3 {
                    let apc = a[p][col];
                    let aqc = a[q][col];
                    a[p][col] = c * apc - s * aqc;
                    a[q][col] = s * apc + c * aqc;
                }
                for r in 0..3 {
                    let vrp = v[r][p];
                    let vrq = v[r][q];
                    v[r][p] = c * vrp - s * vrq;
                    v[r][q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).expect("finite eigenvalues"));
    let values = [
        a[order[0]][order[0]],
        a[order[1]][order[1]],
        a[order[2]][order[2]],
    ];
    let mut vectors = [[S::zero(); 3]; 3];
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..3 {
            vectors[r][new_col] = v[r][old_col];
        }
    }
    (values, vectors)
}

fn pauli_dot<S: Scalar>(direction: [S; 3]) -> Operator<S> {
    let [x, y, z] = direction;
    let mut op = Operator::zeros(2, 2);
    op[(0, 0)] = Complex::new(z, S::zero());
    op[(1, 1)] = Complex::new(-z, S::zero());
    op[(0, 1)] = Complex::new(x, -y);
    op[(1, 0)] = Complex::new(x, y);
    op
}

fn normalize3<S: Scalar>(v: [S; 3]) -> Option<[S; 3]> {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if norm <= S::real(1e-12) {
        None
    } else {
        Some([v[0] / norm, v[1] / norm, v[2] / norm])
    }
}

/// Maximal CHSH value of a two-qubit state over all dichotomic settings:
/// 2√(t₁ + t₂) for the two largest eigenvalues of TᵀT, with T the Pauli
/// correlation matrix. Also returns explicit settings attaining it.
pub fn horodecki_max_chsh<S: Scalar>(state: &BipartiteState<S>) -> Result<(S, ChshSettings<S>)> {
    if state.side_dim(Side::A) != 2 || state.side_dim(Side::B) != 2 {
        return Err(Error::DimensionMismatch(
            "the correlation-matrix criterion needs two qubits".into(),
        ));
    }
    let paulis: [Operator<S>; 3] = [
        pauli_dot([S::one(), S::zero(), S::zero()]),
        pauli_dot([S::zero(), S::one(), S::zero()]),
        pauli_dot([S::zero(), S::zero(), S::one()]),
    ];
    let mut t = [[S::zero(); 3]; 3];
    for (i, pa) in paulis.iter().enumerate() {
        for (j, pb) in paulis.iter().enumerate() {
            t[i][j] = state.expectation(&pa.tensor(pb))?;
        }
    }
    // M = TᵀT
    let mut m = [[S::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = S::zero();
            for row in &t {
                acc += row[i] * row[j];
            }
            m[i][j] = acc;
        }
    }
    let (values, vectors) = sym_eig3(m);
    let (l1, l2) = (values[0].max(S::zero()), values[1].max(S::zero()));
    let value = S::real(2.0) * (l1 + l2).sqrt();

    let v1 = [vectors[0][0], vectors[1][0], vectors[2][0]];
    let v2 = [vectors[0][1], vectors[1][1], vectors[2][1]];
    let total = l1 + l2;
    let (c, s) = if total <= S::real(1e-24) {
        (S::one(), S::zero())
    } else {
        ((l1 / total).sqrt(), (l2 / total).sqrt())
    };
    let b1_dir = normalize3([
        c * v1[0] + s * v2[0],
        c * v1[1] + s * v2[1],
        c * v1[2] + s * v2[2],
    ])
    .unwrap_or([S::zero(), S::zero(), S::one()]);
    let b2_dir = normalize3([
        c * v1[0] - s * v2[0],
        c * v1[1] - s * v2[1],
        c * v1[2] - s * v2[2],
    ])
    .unwrap_or([S::zero(), S::zero(), S::one()]);

    let apply_t = |v: [S; 3]| {
        let mut out = [S::zero(); 3];
        for (i, o) in out.iter_mut().enumerate() {
            for (k, &vk) in v.iter().enumerate() {
                *o += t[i][k] * vk;
            }
        }
        out
    };
    // a_i = T v_i / σ_i; degenerate directions fall back to an orthonormal pair
    let a1_dir = normalize3(apply_t(v1)).unwrap_or([S::zero(), S::zero(), S::one()]);
    let a2_dir = normalize3(apply_t(v2)).unwrap_or_else(|| {
        // any unit vector orthogonal to a1
        let trial = if a1_dir[0].abs() < S::real(0.9) {
            [S::one(), S::zero(), S::zero()]
        } else {
            [S::zero(), S::one(), S::zero()]
        };
        let dot = trial[0] * a1_dir[0] + trial[1] * a1_dir[1] + trial[2] * a1_dir[2];
        normalize3([
            trial[0] - dot * a1_dir[0],
            trial[1] - dot * a1_dir[1],
            trial[2] - dot * a1_dir[2],
        ])
        .expect("orthogonal complement of a unit vector is nonzero")
    });

    let settings = ChshSettings {
        a1: DichotomicObservable::new(pauli_dot(a1_dir))?,
        a2: DichotomicObservable::new(pauli_dot(a2_dir))?,
        b1: DichotomicObservable::new(pauli_dot(b1_dir))?,
        b2: DichotomicObservable::new(pauli_dot(b2_dir))?,
    };
    Ok((value, settings))
}
