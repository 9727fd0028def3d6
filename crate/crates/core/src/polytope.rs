//! Membership of behaviors in the local polytope: LP feasibility over the
//! deterministic vertices, with convex-weight witnesses inside and re-verified
//! Bell-inequality certificates outside.

use crate::behavior::{deterministic_behavior, mix_with_vertex, Behavior, DeterministicStrategy};
use crate::error::{Error, Result};
use crate::scalar::{tol, Scalar};
use crate::simplex::{minimize_with_slack_start, phase1_feasibility, MinOutcome, Phase1Outcome};

/// Largest vertex count for which the certificate is tightened by a second,
/// witness-maximizing LP; beyond it the Farkas certificate is returned as is.
const WITNESS_LP_VERTEX_LIMIT: u128 = 1024;

/// Deterministic range width the normalized certificate is scaled to; the
/// CHSH functional spans exactly this width on the vertices, so normalized
/// margins compare directly with CHSH violations.
const NORMALIZED_RANGE: f64 = 4.0;

/// Separating hyperplane s·p + s₀ with s·d_λ + s₀ ≤ 0 on every deterministic
/// vertex: a Bell inequality in shifted form.
#[derive(Debug, Clone)]
pub struct BellInequality<S: Scalar> {
    pub coefficients: Vec<S>,
    pub offset: S,
}

impl<S: Scalar> BellInequality<S> {
    /// s·p + s₀ on a behavior table.
    pub fn evaluate(&self, behavior: &Behavior<S>) -> S {
        let dot: S = self
            .coefficients
            .iter()
            .zip(behavior.values().iter())
            .map(|(&s, &p)| s * p)
            .sum();
        dot + self.offset
    }

    /// s·d_λ + s₀ on a deterministic strategy, evaluated sparsely.
    pub fn evaluate_vertex(&self, behavior: &Behavior<S>, strategy: &DeterministicStrategy) -> S {
        let sc = behavior.scenario();
        let mut dot = S::zero();
        for (k, &r) in strategy.a_choices().iter().enumerate() {
            for (l, &s) in strategy.b_choices().iter().enumerate() {
                dot += self.coefficients[sc.index(k, l, r, s)];
            }
        }
        dot + self.offset
    }

    /// Margin rescaled so the inequality spans the CHSH vertex range: the
    /// vertex maximum maps to 0 and the vertex range to width 4. On the CHSH
    /// facet this recovers (CHSH value − 2).
    pub fn normalized_margin(&self, behavior: &Behavior<S>) -> Result<S> {
        let mut vmax = S::neg_infinity();
        let mut vmin = S::infinity();
        for vertex in behavior.scenario().vertices() {
            let v = self.evaluate_vertex(behavior, &vertex);
            vmax = vmax.max(v);
            vmin = vmin.min(v);
        }
        let width = vmax - vmin;
        if width <= S::real(1e-300) {
            return Err(Error::Numerical(
                "certificate is constant on the vertices".into(),
            ));
        }
        Ok((self.evaluate(behavior) - vmax) * S::real(NORMALIZED_RANGE) / width)
    }
}

/// Verdict of the local-polytope membership LP. A behavior is inside exactly
/// when it is a convex mixture of deterministic vertices.
#[derive(Debug, Clone)]
pub enum MembershipResult<S: Scalar> {
    /// Convex weights over the vertices in enumeration order, reproducing the
    /// behavior within 1e−8 max norm.
    Inside { weights: Vec<S> },
    /// Re-verified separating Bell inequality with violation margin > `tol::LP`.
    Outside { certificate: BellInequality<S> },
}

impl<S: Scalar> MembershipResult<S> {
    pub fn inside(&self) -> bool {
        matches!(self, MembershipResult::Inside { .. })
    }

    pub fn weights(&self) -> Option<&[S]> {
        match self {
            MembershipResult::Inside { weights } => Some(weights),
            MembershipResult::Outside { .. } => None,
        }
    }

    pub fn certificate(&self) -> Option<&BellInequality<S>> {
        match self {
            MembershipResult::Inside { .. } => None,
            MembershipResult::Outside { certificate } => Some(certificate),
        }
    }
}

fn shift_valid<S: Scalar>(
    mut cert: BellInequality<S>,
    behavior: &Behavior<S>,
) -> Option<BellInequality<S>> {
    // force validity on the vertex side, then demand a real margin
    let mut vmax = S::neg_infinity();
    for vertex in behavior.scenario().vertices() {
        vmax = vmax.max(cert.evaluate_vertex(behavior, &vertex));
    }
    if vmax > S::zero() {
        cert.offset -= vmax;
    }
    if cert.evaluate(behavior) > S::real(tol::LP) {
        Some(cert)
    } else {
        None
    }
}

/// Best separating inequality at the normalized scale: maximize s·b + s₀
/// subject to −4 ≤ s·d_λ + s₀ ≤ 0 over all vertices.
fn witness_certificate<S: Scalar>(behavior: &Behavior<S>) -> Result<Option<BellInequality<S>>> {
    let sc = behavior.scenario();
    let entries = sc.table_len();
    // free variables via splitting: s = u − v, s₀ = w − z
    let n = 2 * entries + 2;
    let mut rows = Vec::with_capacity(2 * sc.vertex_count() as usize);
    let mut rhs = Vec::with_capacity(rows.capacity());
    for vertex in sc.vertices() {
        let mut upper = vec![S::zero(); n];
        for (k, &r) in vertex.a_choices().iter().enumerate() {
            for (l, &s) in vertex.b_choices().iter().enumerate() {
                let idx = sc.index(k, l, r, s);
                upper[idx] = S::one();
                upper[entries + idx] = -S::one();
            }
        }
        upper[2 * entries] = S::one();
        upper[2 * entries + 1] = -S::one();
        let lower: Vec<S> = upper.iter().map(|&v| -v).collect();
        rows.push(upper);
        rhs.push(S::zero());
        rows.push(lower);
        rhs.push(S::real(NORMALIZED_RANGE));
    }
    let mut objective = vec![S::zero(); n];
    for (j, &p) in behavior.values().iter().enumerate() {
        objective[j] = -p;
        objective[entries + j] = p;
    }
    objective[2 * entries] = -S::one();
    objective[2 * entries + 1] = S::one();

    match minimize_with_slack_start(&objective, &rows, &rhs)? {
        MinOutcome::Optimal { x } => {
            let coefficients: Vec<S> = (0..entries).map(|j| x[j] - x[entries + j]).collect();
            let offset = x[2 * entries] - x[2 * entries + 1];
            Ok(Some(BellInequality {
                coefficients,
                offset,
            }))
        }
        // behaviors off the no-signaling affine hull make this LP unbounded
        MinOutcome::Unbounded => Ok(None),
    }
}

/// Decide membership of a behavior in the local polytope by phase-1 simplex
/// over the deterministic vertices.
///
/// Inside: returns convex weights (enumeration order) that are re-verified to
/// reproduce the behavior. Outside: extracts a separating inequality from the
/// Farkas dual, optionally tightens it by a witness-maximization LP, and
/// re-verifies it against every vertex before returning.
pub fn lp_membership<S: Scalar>(behavior: &Behavior<S>) -> Result<MembershipResult<S>> {
    let sc = behavior.scenario();
    let vertex_count = sc.vertex_count();
    if vertex_count > crate::behavior::VERTEX_CAP {
        return Err(Error::VertexCapExceeded {
            vertices: vertex_count,
            cap: crate::behavior::VERTEX_CAP,
        });
    }
    let entries = sc.table_len();
    let n_vertices = vertex_count as usize;

    // rows: one per behavior entry plus the normalization row; columns: one
    // per vertex in enumeration order
    let mut rows = vec![vec![S::zero(); n_vertices]; entries + 1];
    for (col, vertex) in sc.vertices().enumerate() {
        for (k, &r) in vertex.a_choices().iter().enumerate() {
            for (l, &s) in vertex.b_choices().iter().enumerate() {
                rows[sc.index(k, l, r, s)][col] = S::one();
            }
        }
        rows[entries][col] = S::one();
    }
    let mut rhs: Vec<S> = behavior
        .values()
        .iter()
        .map(|&p| p.max(S::zero()))
        .collect();
    rhs.push(S::one());

    match phase1_feasibility(&rows, &rhs)? {
        Phase1Outcome::Feasible { x } => {
            let weights: Vec<S> = x.iter().map(|&w| w.max(S::zero())).collect();
            // soundness: the weights must actually reproduce the behavior
            let mut residual = S::zero();
            for (idx, row) in rows.iter().enumerate() {
                let rebuilt: S = row.iter().zip(weights.iter()).map(|(&a, &w)| a * w).sum();
                residual = residual.max((rebuilt - rhs[idx]).abs());
            }
            if residual > S::real(1e-8) {
                return Err(Error::Numerical(format!(
                    "membership weights leave residual {:e}",
                    residual.approx_f64()
                )));
            }
            Ok(MembershipResult::Inside { weights })
        }
        Phase1Outcome::Infeasible {
            farkas,
            infeasibility,
        } => {
            let raw = BellInequality {
                coefficients: farkas[..entries].to_vec(),
                offset: farkas[entries],
            };
            let farkas_cert = shift_valid(raw, behavior);
            let improved = if vertex_count <= WITNESS_LP_VERTEX_LIMIT {
                witness_certificate(behavior)?.and_then(|c| shift_valid(c, behavior))
            } else {
                None
            };
            let best = match (improved, farkas_cert) {
                (Some(w), Some(f)) => {
                    let wm = w.normalized_margin(behavior).unwrap_or(S::neg_infinity());
                    let fm = f.normalized_margin(behavior).unwrap_or(S::neg_infinity());
                    if wm >= fm {
                        w
                    } else {
                        f
                    }
                }
                (Some(w), None) => w,
                (None, Some(f)) => f,
                (None, None) => {
                    return Err(Error::Numerical(format!(
                        "infeasible LP (residual {:e}) produced no verifiable certificate",
                        infeasibility.approx_f64()
                    )))
                }
            };
            // exhaustive re-verification: arithmetic errors must not be silent
            for vertex in sc.vertices() {
                let v = best.evaluate_vertex(behavior, &vertex);
                if v > S::real(tol::CERT_VERTEX) {
                    return Err(Error::Numerical(format!(
                        "certificate leaks onto a vertex by {:e}",
                        v.approx_f64()
                    )));
                }
            }
            if best.evaluate(behavior) <= S::real(tol::LP) {
                return Err(Error::Numerical(
                    "certificate margin did not survive re-verification".into(),
                ));
            }
            Ok(MembershipResult::Outside { certificate: best })
        }
    }
}

/// Scan vertices in enumeration order for the first λ whose mixture
/// p·b + (1−p)·d_λ stays outside the local polytope.
///
/// The input behavior must itself be outside; closedness of the polytope
/// guarantees a hit, so exhaustion signals a numerical-tolerance failure.
pub fn find_escaping_vertex<S: Scalar>(
    behavior: &Behavior<S>,
    weight: S,
) -> Result<(DeterministicStrategy, Behavior<S>, MembershipResult<S>)> {
    if !(weight > S::zero() && weight <= S::one()) {
        return Err(Error::WeightOutOfRange {
            weight: weight.approx_f64(),
        });
    }
    if lp_membership(behavior)?.inside() {
        return Err(Error::BehaviorIsLocal);
    }
    for vertex in behavior.scenario().vertices() {
        let mixed = mix_with_vertex(behavior, weight, &vertex)?;
        let result = lp_membership(&mixed)?;
        if !result.inside() {
            return Ok((vertex, mixed, result));
        }
    }
    Err(Error::NoEscapingVertex)
}

/// Convenience oracle used in tests and reports: rebuild a behavior from
/// membership weights.
pub fn behavior_from_weights<S: Scalar>(
    scenario: &crate::behavior::Scenario,
    weights: &[S],
) -> Result<Behavior<S>> {
    if weights.len() != scenario.vertex_count() as usize {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} vertices",
            weights.len(),
            scenario.vertex_count()
        )));
    }
    let mut probs = vec![S::zero(); scenario.table_len()];
    for (vertex, &w) in scenario.vertices().zip(weights.iter()) {
        let d: Behavior<S> = deterministic_behavior(scenario, &vertex)?;
        for (p, &dv) in probs.iter_mut().zip(d.values().iter()) {
            *p += w * dv;
        }
    }
    Behavior::new(scenario.clone(), probs)
}
