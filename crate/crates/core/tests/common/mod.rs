//! Shared helpers for the integration suites: seeded random quantum objects
//! and an independent facet oracle for the 2-setting/2-outcome polytope.

// each test binary compiles its own copy and uses a different subset
#![allow(dead_code)]

use bellforge::behavior::Behavior;
use bellforge::operator::{FactorSpace, Operator};
use bellforge::quantum::{BipartiteState, DichotomicObservable, Povm, Side};
use bellforge::C64;
use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random pure state on d_a × d_b from uniform amplitudes.
pub fn random_pure_state(rng: &mut ChaCha8Rng, d_a: usize, d_b: usize) -> BipartiteState<f64> {
    let amps: Vec<C64> = (0..d_a * d_b).map(|_| random_complex(rng)).collect();
    let space = FactorSpace::new(vec![("A", d_a), ("B", d_b)]).unwrap();
    bellforge::pure_state(&amps, space, 1).unwrap()
}

/// Random full-rank density operator G G† / tr.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> Operator<f64> {
    let g = Operator::from_fn(dim, dim, |_, _| random_complex(rng));
    let psd = g.mul_mat(&g.adjoint()).unwrap().hermitized();
    let trace = psd.trace().re;
    psd.scale_re(1.0 / trace)
}

pub fn random_state(rng: &mut ChaCha8Rng, d_a: usize, d_b: usize) -> BipartiteState<f64> {
    let matrix = random_density(rng, d_a * d_b);
    let space = FactorSpace::new(vec![("A", d_a), ("B", d_b)]).unwrap();
    BipartiteState::new(matrix, space, 1).unwrap()
}

/// Random ±1 observable: sign function of a random Hermitian matrix.
pub fn random_dichotomic(rng: &mut ChaCha8Rng, dim: usize) -> DichotomicObservable<f64> {
    let h = Operator::from_fn(dim, dim, |_, _| random_complex(rng)).hermitized();
    let (values, vectors) = h.hermitian_eig().unwrap();
    let signs: Vec<f64> = values
        .iter()
        .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let matrix = vectors
        .mul_mat(&Operator::diag_real(&signs))
        .unwrap()
        .mul_mat(&vectors.adjoint())
        .unwrap()
        .hermitized();
    DichotomicObservable::new(matrix).unwrap()
}

/// Random two-outcome POVM {E, I − E} with E drawn by rescaling a random
/// Hermitian matrix into [0, I].
pub fn random_two_outcome_povm(rng: &mut ChaCha8Rng, dim: usize, side: Side) -> Povm<f64> {
    let h = Operator::from_fn(dim, dim, |_, _| random_complex(rng)).hermitized();
    let (values, vectors) = h.hermitian_eig().unwrap();
    let (max, min) = (values[0], values[values.len() - 1]);
    let scaled: Vec<f64> = if max - min < 1e-12 {
        vec![0.5; values.len()]
    } else {
        values.iter().map(|v| (v - min) / (max - min)).collect()
    };
    let effect = vectors
        .mul_mat(&Operator::diag_real(&scaled))
        .unwrap()
        .mul_mat(&vectors.adjoint())
        .unwrap()
        .hermitized();
    let rest = &Operator::identity(dim) - &effect;
    Povm::new(side, vec![effect, rest]).unwrap()
}

/// Random k-branch instrument {F_i} with Σ F_i†F_i = I, from a Gram-Schmidt
/// orthonormalized (k·dim) × dim stack.
pub fn random_instrument(rng: &mut ChaCha8Rng, dim: usize, branches: usize) -> Vec<Operator<f64>> {
    let stacked = branches * dim;
    let mut columns: Vec<Vec<C64>> = Vec::new();
    for _ in 0..dim {
        let mut col: Vec<C64> = (0..stacked).map(|_| random_complex(rng)).collect();
        for prev in &columns {
            let overlap: C64 = prev.iter().zip(col.iter()).map(|(p, c)| p.conj() * c).sum();
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
}

/// Independent membership oracle for no-signaling 2×2×2×2 behaviors: local
/// iff all eight CHSH sign variants stay within the classical bound.
pub fn chsh_facet_oracle_inside(b: &Behavior<f64>) -> bool {
    let e = |k: usize, l: usize| {
        b.prob(k, l, 0, 0) - b.prob(k, l, 0, 1) - b.prob(k, l, 1, 0) + b.prob(k, l, 1, 1)
    };
    let es = [e(0, 0), e(0, 1), e(1, 0), e(1, 1)];
    for signs in 0..16u32 {
        let sv: Vec<f64> = (0..4)
            .map(|i| if signs & (1 << i) != 0 { -1.0 } else { 1.0 })
            .collect();
        if sv.iter().product::<f64>() > 0.0 {
            continue;
        }
        let value: f64 = es.iter().zip(sv.iter()).map(|(e, s)| e * s).sum();
        if value > 2.0 + 1e-9 {
            return false;
        }
    }
    true
}
