//! Dense complex-matrix algebra: tensor products, partial traces, Hermitian
//! eigendecomposition, PSD square roots, and trace distance.
//!
//! Row-major storage. The Kronecker convention is fixed repo-wide: the left
//! factor is index-major, so `tensor(a, b)[(ia*br+ib, ja*bc+jb)] = a[(ia,ja)]*b[(ib,jb)]`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{tol, Scalar, C};

/// Dense complex matrix with explicit row/column dimensions.
///
/// The universal carrier for states, filters, POVM elements, and observables.
/// Hermiticity, positivity, and unitarity are predicates computed on demand,
/// never assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<S: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<C<S>>,
}

impl<S: Scalar> Operator<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<C<S>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimension(format!(
                "operator dimensions must be positive (got {rows}x{cols})"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "entry count {} does not equal rows × cols = {}",
                data.len(),
                rows * cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(S::zero(), S::zero()); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim, dim);
        for i in 0..dim {
            out[(i, i)] = Complex::new(S::one(), S::zero());
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<S>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Column vector |i⟩ in a `dim`-dimensional space.
    pub fn basis_ket(dim: usize, index: usize) -> Self {
        let mut out = Self::zeros(dim, 1);
        out[(index, 0)] = Complex::new(S::one(), S::zero());
        out
    }

    /// Rank-one projector |i⟩⟨i|.
    pub fn basis_projector(dim: usize, index: usize) -> Self {
        let mut out = Self::zeros(dim, dim);
        out[(index, index)] = Complex::new(S::one(), S::zero());
        out
    }

    /// Column vector from amplitudes.
    pub fn ket(amplitudes: &[C<S>]) -> Self {
        Self {
            rows: amplitudes.len(),
            cols: 1,
            data: amplitudes.to_vec(),
        }
    }

    /// Diagonal square matrix from real entries.
    pub fn diag_real(entries: &[S]) -> Self {
        let mut out = Self::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            out[(i, i)] = Complex::new(v, S::zero());
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C<S>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, factor: C<S>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: S) -> Self {
        self.scale(Complex::new(factor, S::zero()))
    }

    pub fn trace(&self) -> C<S> {
        debug_assert!(self.is_square());
        (0..self.rows)
            .map(|i| self[(i, i)])
            .fold(Complex::new(S::zero(), S::zero()), |acc, z| acc + z)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> S {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(S::zero(), |a, b| a.max(b))
    }

    /// Largest entrywise difference |self − other|.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(S::zero(), |a, b| a.max(b))
    }

    /// Max deviation from Hermiticity, max_ij |a_ij − conj(a_ji)|.
    pub fn hermiticity_deviation(&self) -> S {
        debug_assert!(self.is_square());
        let mut dev = S::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tolerance: S) -> bool {
        self.is_square() && self.hermiticity_deviation() <= tolerance
    }

    /// Average with the adjoint; cleans rounding noise off a matrix that is
    /// Hermitian in exact arithmetic.
    pub fn hermitized(&self) -> Self {
        let half = Complex::new(S::real(0.5), S::zero());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * half
        })
    }

    /// Matrix product with a skip for exactly-zero entries; protocol operators
    /// are mostly projector-structured, so the skip pays off.
    pub fn mul_mat(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik.re.is_zero() && aik.im.is_zero() {
                    continue;
                }
                let row_out = i * other.cols;
                let row_b = k * other.cols;
                for j in 0..other.cols {
                    out.data[row_out + j] += aik * other.data[row_b + j];
                }
            }
        }
        Ok(out)
    }

    /// K · self · K†.
    pub fn sandwich(&self, k: &Self) -> Result<Self> {
        k.mul_mat(self)?.mul_mat(&k.adjoint())
    }

    /// tr(self · other), computed entrywise without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<C<S>> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "trace of product needs {}x{} · {}x{} to be square",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = Complex::new(S::zero(), S::zero());
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        Ok(acc)
    }

    /// Kronecker product with `self`'s indices major.
    pub fn tensor(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for ia in 0..self.rows {
            for ja in 0..self.cols {
                let a = self[(ia, ja)];
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                for ib in 0..other.rows {
                    let r = ia * other.rows + ib;
                    for jb in 0..other.cols {
                        out.data[r * cols + ja * other.cols + jb] = a * other[(ib, jb)];
                    }
                }
            }
        }
        out
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues sorted descending and the matching unitary whose
    /// columns are eigenvectors. The input must be Hermitian within `tol::EIG`.
    pub fn hermitian_eig(&self) -> Result<(Vec<S>, Operator<S>)> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let dev = self.hermiticity_deviation();
        if dev > S::real(tol::EIG) {
            return Err(Error::NotHermitian {
                deviation: dev.approx_f64(),
            });
        }

        let n = self.rows;
        let mut a = self.hermitized();
        let mut v = Self::identity(n);

        let scale = a.max_abs().max(S::one());
        let stop = scale * S::epsilon() * S::real(n as f64);

        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let g = a[(p, q)];
                    let mag = g.norm();
                    if mag <= stop {
                        continue;
                    }
                    rotated = true;

                    // Unitary 2x2 rotation zeroing a_pq. Phase w = g/|g| turns
                    // the pivot block into a real symmetric one.
                    let w = g / mag;
                    let alpha = a[(p, p)].re;
                    let beta = a[(q, q)].re;
                    let tau = (beta - alpha) / (S::real(2.0) * mag);
                    let t = if tau.is_zero() {
                        S::one()
                    } else {
                        let sgn = if tau < S::zero() { -S::one() } else { S::one() };
                        sgn / (tau.abs() + (S::one() + tau * tau).sqrt())
                    };
                    let c = S::one() / (S::one() + t * t).sqrt();
                    let s = t * c;

                    let cc = Complex::new(c, S::zero());
                    let sw = w * s; // J[p][q]
                    let msw = -(w.conj() * s); // J[q][p]

                    // Rows/cols p and q of A (A ← J†AJ), Hermitian maintained.
                    for r in 0..n {
                        if r == p || r == q {
                            continue;
                        }
                        let arp = a[(r, p)];
                        let arq = a[(r, q)];
                        let new_rp = arp * cc + arq * msw;
                        let new_rq = arp * sw + arq * cc;
                        a[(r, p)] = new_rp;
                        a[(p, r)] = new_rp.conj();
                        a[(r, q)] = new_rq;
                        a[(q, r)] = new_rq.conj();
                    }
                    let two_cs_mag = S::real(2.0) * c * s * mag;
                    let app = c * c * alpha + s * s * beta - two_cs_mag;
                    let aqq = s * s * alpha + c * c * beta + two_cs_mag;
                    a[(p, p)] = Complex::new(app, S::zero());
                    a[(q, q)] = Complex::new(aqq, S::zero());
                    a[(p, q)] = Complex::new(S::zero(), S::zero());
                    a[(q, p)] = Complex::new(S::zero(), S::zero());

                    // Accumulate eigenvectors: V ← V·J.
                    for r in 0..n {
                        let vrp = v[(r, p)];
                        let vrq = v[(r, q)];
                        v[(r, p)] = vrp * cc + vrq * msw;
                        v[(r, q)] = vrp * sw + vrq * cc;
                    }
                }
            }
            if !rotated {
                break;
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let eig: Vec<S> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| eig[j].partial_cmp(&eig[i]).expect("eigenvalues are finite"));

        let values: Vec<S> = order.iter().map(|&i| eig[i]).collect();
        let vectors = Self::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok((values, vectors))
    }

    /// Unique PSD square root. Eigenvalues below `−tol::EIG` are rejected;
    /// negative ones within tolerance are clamped to zero.
    pub fn psd_sqrt(&self) -> Result<Operator<S>> {
        let (values, vectors) = self.hermitian_eig()?;
        let gate = -S::real(tol::EIG);
        let mut roots = Vec::with_capacity(values.len());
        for &ev in &values {
            if ev < gate {
                return Err(Error::NotPsd {
                    min_eigenvalue: ev.approx_f64(),
                });
            }
            roots.push(if ev > S::zero() { ev.sqrt() } else { S::zero() });
        }
        let scaled = Self::from_fn(self.rows, self.cols, |r, c| {
            vectors[(r, c)] * Complex::new(roots[c], S::zero())
        });
        Ok(scaled.mul_mat(&vectors.adjoint())?.hermitized())
    }
}

impl<S: Scalar> Index<(usize, usize)> for Operator<S> {
    type Output = C<S>;
    fn index(&self, (r, c): (usize, usize)) -> &C<S> {
        &self.data[r * self.cols + c]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Operator<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<S> {
        &mut self.data[r * self.cols + c]
    }
}

impl<S: Scalar> Add for &Operator<S> {
    type Output = Operator<S>;
    fn add(self, rhs: &Operator<S>) -> Operator<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<S: Scalar> Sub for &Operator<S> {
    type Output = Operator<S>;
    fn sub(self, rhs: &Operator<S>) -> Operator<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<S: Scalar> Neg for &Operator<S> {
    type Output = Operator<S>;
    fn neg(self) -> Operator<S> {
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| -z).collect(),
        }
    }
}

impl<S: Scalar> Mul for &Operator<S> {
    type Output = Operator<S>;
    fn mul(self, rhs: &Operator<S>) -> Operator<S> {
        self.mul_mat(rhs).expect("operator dimension mismatch")
    }
}

/// Half the sum of the absolute eigenvalues of `a − b`.
pub fn trace_distance<S: Scalar>(a: &Operator<S>, b: &Operator<S>) -> Result<S> {
    if (a.rows, a.cols) != (b.rows, b.cols) || !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance needs equal square operators, got {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let diff = a - b;
    let (values, _) = diff.hermitian_eig()?;
    let sum: S = values.iter().map(|v| v.abs()).sum();
    Ok(sum * S::real(0.5))
}

/// Ordered tensor factors of a composite Hilbert space: unique labels with
/// their dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSpace {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl FactorSpace {
    pub fn new<L: Into<String>>(factors: Vec<(L, usize)>) -> Result<Self> {
        let mut labels = Vec::with_capacity(factors.len());
        let mut dims = Vec::with_capacity(factors.len());
        for (label, dim) in factors {
            let label = label.into();
            if dim == 0 {
                return Err(Error::InvalidDimension(format!(
                    "factor {label} has dimension 0"
                )));
            }
            if labels.contains(&label) {
                return Err(Error::DuplicateLabel { label });
            }
            labels.push(label);
            dims.push(dim);
        }
        if labels.is_empty() {
            return Err(Error::InvalidDimension("factor space is empty".into()));
        }
        Ok(Self { labels, dims })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel {
                label: label.to_string(),
            })
    }

    /// Sub-space of the factors whose labels are listed, in original order.
    pub fn retain(&self, keep: &[&str]) -> Result<Self> {
        for label in keep {
            self.position(label)?;
        }
        let factors: Vec<(String, usize)> = self
            .labels
            .iter()
            .zip(self.dims.iter())
            .filter(|(l, _)| keep.contains(&l.as_str()))
            .map(|(l, d)| (l.clone(), *d))
            .collect();
        Self::new(factors)
    }

    /// New space with a factor inserted at `index`.
    pub fn insert(&self, index: usize, label: impl Into<String>, dim: usize) -> Result<Self> {
        let mut factors: Vec<(String, usize)> = self
            .labels
            .iter()
            .cloned()
            .zip(self.dims.iter().copied())
            .collect();
        factors.insert(index, (label.into(), dim));
        Self::new(factors)
    }

    /// New space with one factor's dimension replaced.
    pub fn with_dim(&self, index: usize, dim: usize) -> Result<Self> {
        let mut factors: Vec<(String, usize)> = self
            .labels
            .iter()
            .cloned()
            .zip(self.dims.iter().copied())
            .collect();
        factors[index].1 = dim;
        Self::new(factors)
    }

    /// Row-major strides of the factors.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.dims[i + 1];
        }
        strides
    }
}

/// Trace over every factor not listed in `keep`; kept factors stay in their
/// original order and the trace is preserved.
pub fn partial_trace<S: Scalar>(
    op: &Operator<S>,
    space: &FactorSpace,
    keep: &[&str],
) -> Result<Operator<S>> {
    if !op.is_square() || op.rows() != space.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but the factor space has total dimension {}",
            op.rows(),
            op.cols(),
            space.total_dim()
        )));
    }
    let mut keep_positions = Vec::with_capacity(keep.len());
    for label in keep {
        keep_positions.push(space.position(label)?);
    }
    keep_positions.sort_unstable();
    keep_positions.dedup();
    if keep_positions.is_empty() {
        return Err(Error::InvalidDimension(
            "partial trace must keep at least one factor".into(),
        ));
    }

    let strides = space.strides();
    let dims = space.dims();
    let traced_positions: Vec<usize> = (0..dims.len())
        .filter(|p| !keep_positions.contains(p))
        .collect();

    let keep_dims: Vec<usize> = keep_positions.iter().map(|&p| dims[p]).collect();
    let traced_dims: Vec<usize> = traced_positions.iter().map(|&p| dims[p]).collect();
    let keep_total: usize = keep_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product();

    // Flat offset of a mixed-radix index over the selected positions.
    let offset_of = |flat: usize, sel_dims: &[usize], sel_positions: &[usize]| -> usize {
        let mut rem = flat;
        let mut offset = 0usize;
        for k in (0..sel_dims.len()).rev() {
            let digit = rem % sel_dims[k];
            rem /= sel_dims[k];
            offset += digit * strides[sel_positions[k]];
        }
        offset
    };

    let keep_offsets: Vec<usize> = (0..keep_total)
        .map(|f| offset_of(f, &keep_dims, &keep_positions))
        .collect();
    let traced_offsets: Vec<usize> = (0..traced_total)
        .map(|f| offset_of(f, &traced_dims, &traced_positions))
        .collect();

    let mut out = Operator::zeros(keep_total, keep_total);
    for (r, &ro) in keep_offsets.iter().enumerate() {
        for (c, &co) in keep_offsets.iter().enumerate() {
            let mut acc = Complex::new(S::zero(), S::zero());
            for &to in &traced_offsets {
                acc += op[(ro + to, co + to)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}
