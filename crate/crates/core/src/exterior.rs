//! Simple k-vectors and k-covectors over ℝⁿ.
//!
//! A [`SimpleKVector`] is kept in factored form (an `n × k` matrix whose
//! columns are the factors), so that its oriented span can always be
//! recovered. A [`KCovector`] is stored densely on the lexicographic basis
//! `e*_{i₁} ∧ … ∧ e*_{i_k}`, `i₁ < … < i_k`, of `Λᵏ(ℝⁿ)*`.

use nalgebra::{DMatrix, DVector};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Errors raised by the exterior algebra layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected (n={expected_n}, k={expected_k}), got (n={n}, k={k})")]
    DimensionMismatch {
        expected_n: usize,
        expected_k: usize,
        n: usize,
        k: usize,
    },
    #[error("invalid grade k={k} for ambient dimension n={n}")]
    InvalidGrade { n: usize, k: usize },
    #[error("k-vector is zero (factors are linearly dependent)")]
    Degenerate,
    #[error("components do not describe a simple k-vector (residual {residual:e})")]
    NotSimple { residual: f64 },
}

/// Binomial coefficient C(n, k).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All k-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Position of a sorted index set in the lexicographic basis.
pub fn basis_index(n: usize, set: &[usize]) -> Option<usize> {
    combinations(n, set.len()).iter().position(|s| s == set)
}

/// k×k minors of an `n × k` matrix, rows taken in lexicographic order.
///
/// For a factor matrix this is the Plücker coordinate vector of the wedge of
/// its columns.
pub fn minors(m: &DMatrix<f64>) -> Vec<f64> {
    let (n, k) = m.shape();
    if k == 0 {
        return vec![1.0];
    }
    combinations(n, k)
        .iter()
        .map(|rows| small_det(m, rows))
        .collect()
}

fn small_det(m: &DMatrix<f64>, rows: &[usize]) -> f64 {
    let k = rows.len();
    match k {
        1 => m[(rows[0], 0)],
        2 => m[(rows[0], 0)] * m[(rows[1], 1)] - m[(rows[0], 1)] * m[(rows[1], 0)],
        3 => {
            let a = |i: usize, j: usize| m[(rows[i], j)];
            a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
        }
        _ => DMatrix::from_fn(k, k, |i, j| m[(rows[i], j)]).determinant(),
    }
}

/// A decomposable k-vector `v₁ ∧ … ∧ v_k` in ℝⁿ, kept in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleKVector {
    factors: DMatrix<f64>,
}

/// Orthonormal, orientation-preserving basis of the span of a simple
/// k-vector together with its (positive) Euclidean magnitude.
#[derive(Debug, Clone)]
pub struct OrientedFrame {
    /// `n × k`, orthonormal columns, same orientation as the factors.
    pub basis: DMatrix<f64>,
    /// Euclidean magnitude `sqrt(det(FᵀF))` of the k-vector.
    pub magnitude: f64,
}

impl SimpleKVector {
    /// Build from a list of k factor vectors of equal length n.
    pub fn new(factors: &[DVector<f64>]) -> Result<Self, AlgebraError> {
        let k = factors.len();
        let n = factors.first().map(|f| f.len()).unwrap_or(0);
        if k == 0 || n < k {
            return Err(AlgebraError::InvalidGrade { n, k });
        }
        if let Some(bad) = factors.iter().find(|f| f.len() != n) {
            return Err(AlgebraError::DimensionMismatch {
                expected_n: n,
                expected_k: k,
                n: bad.len(),
                k,
            });
        }
        Ok(Self {
            factors: DMatrix::from_columns(factors),
        })
    }

    /// Build from an `n × k` matrix whose columns are the factors.
    pub fn from_matrix(factors: DMatrix<f64>) -> Result<Self, AlgebraError> {
        let (n, k) = factors.shape();
        if k == 0 || n < k {
            return Err(AlgebraError::InvalidGrade { n, k });
        }
        Ok(Self { factors })
    }

    /// Basis k-vector `e_{i₁} ∧ … ∧ e_{i_k}`.
    pub fn basis(n: usize, indices: &[usize]) -> Result<Self, AlgebraError> {
        let k = indices.len();
        if k == 0 || n < k || indices.iter().any(|&i| i >= n) {
            return Err(AlgebraError::InvalidGrade { n, k });
        }
        Self::from_matrix(DMatrix::from_fn(n, k, |i, j| {
            if i == indices[j] {
                1.0
            } else {
                0.0
            }
        }))
    }

    /// Recover a factorization from Plücker components.
    ///
    /// The span is the kernel of `v ↦ v ∧ ω`; factors are an orthonormal
    /// basis of it rescaled so that the largest component matches.
    pub fn from_components(n: usize, k: usize, comps: &[f64]) -> Result<Self, AlgebraError> {
        if k == 0 || k > n {
            return Err(AlgebraError::InvalidGrade { n, k });
        }
        if comps.len() != binomial(n, k) {
            return Err(AlgebraError::DimensionMismatch {
                expected_n: n,
                expected_k: k,
                n,
                k: comps.len(),
            });
        }
        let scale = comps.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale == 0.0 {
            return Err(AlgebraError::Degenerate);
        }
        let basis = if k == n {
            DMatrix::identity(n, n)
        } else {
            // Matrix of v ↦ v ∧ ω into Λ^{k+1}.
            let sets_k = combinations(n, k);
            let sets_k1 = combinations(n, k + 1);
            let mut wedge = DMatrix::<f64>::zeros(sets_k1.len(), n);
            for (row, big) in sets_k1.iter().enumerate() {
                for (pos, &i) in big.iter().enumerate() {
                    let rest: Vec<usize> = big.iter().copied().filter(|&j| j != i).collect();
                    let c = sets_k.iter().position(|s| *s == rest).unwrap();
                    let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                    wedge[(row, i)] += sign * comps[c] / scale;
                }
            }
            let svd = (wedge.transpose() * &wedge).symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| svd.eigenvalues[a].partial_cmp(&svd.eigenvalues[b]).unwrap());
            let residual = svd.eigenvalues[order[k - 1]].max(0.0).sqrt();
            if residual > 1e-6 {
                return Err(AlgebraError::NotSimple { residual });
            }
            DMatrix::from_fn(n, k, |i, j| svd.eigenvectors[(i, order[j])])
        };
        let probe = minors(&basis);
        let (imax, _) = comps
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (i, c)| if c.abs() > bv { (i, c.abs()) } else { (bi, bv) });
        if probe[imax].abs() < 1e-300 {
            return Err(AlgebraError::Degenerate);
        }
        let t = comps[imax] / probe[imax];
        let mut factors = basis;
        factors.column_mut(0).scale_mut(t);
        let out = Self { factors };
        let check = out.components();
        let residual = check
            .iter()
            .zip(comps)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        if residual > 1e-8 {
            return Err(AlgebraError::NotSimple { residual });
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.factors.nrows()
    }

    pub fn grade(&self) -> usize {
        self.factors.ncols()
    }

    pub fn factors(&self) -> &DMatrix<f64> {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> DVector<f64> {
        self.factors.column(i).into_owned()
    }

    /// `t · a`, realized by scaling the first factor.
    pub fn scaled(&self, t: f64) -> Self {
        let mut factors = self.factors.clone();
        factors.column_mut(0).scale_mut(t);
        Self { factors }
    }

    /// Same k-vector with factors `i` and `j` swapped, i.e. `-a`.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut factors = self.factors.clone();
        factors.swap_columns(i, j);
        Self { factors }
    }

    /// Plücker coordinates on the lexicographic basis of Λᵏℝⁿ.
    pub fn components(&self) -> Vec<f64> {
        minors(&self.factors)
    }

    /// Euclidean magnitude (square root of the Gram determinant).
    pub fn magnitude(&self) -> f64 {
        let gram = self.factors.transpose() * &self.factors;
        gram.determinant().max(0.0).sqrt()
    }

    /// Orthonormal basis of the span with the orientation of the factors
    /// (Gram–Schmidt via QR with positive diagonal).
    pub fn span_basis(&self) -> Result<OrientedFrame, AlgebraError> {
        let scale = self.factors.amax();
        if scale == 0.0 {
            return Err(AlgebraError::Degenerate);
        }
        let qr = self.factors.clone().qr();
        let mut q = qr.q();
        let r = qr.r();
        let mut magnitude = 1.0;
        for j in 0..self.grade() {
            let d = r[(j, j)];
            if d.abs() <= 1e-13 * scale {
                return Err(AlgebraError::Degenerate);
            }
            if d < 0.0 {
                q.column_mut(j).neg_mut();
            }
            magnitude *= d.abs();
        }
        Ok(OrientedFrame { basis: q, magnitude })
    }
}

/// A k-covector on ℝⁿ, stored densely on the lexicographic basis.
#[derive(Debug, Clone, PartialEq)]
pub struct KCovector {
    n: usize,
    k: usize,
    components: Vec<f64>,
}

impl KCovector {
    pub fn new(n: usize, k: usize, components: Vec<f64>) -> Result<Self, AlgebraError> {
        if k > n {
            return Err(AlgebraError::InvalidGrade { n, k });
        }
        if components.len() != binomial(n, k) {
            return Err(AlgebraError::DimensionMismatch {
                expected_n: n,
                expected_k: k,
                n,
                k: components.len(),
            });
        }
        Ok(Self { n, k, components })
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            components: vec![0.0; binomial(n, k)],
        }
    }

    /// Basis covector `e*_{i₁} ∧ … ∧ e*_{i_k}` (indices sorted ascending).
    pub fn basis(n: usize, indices: &[usize]) -> Result<Self, AlgebraError> {
        let k = indices.len();
        let pos = basis_index(n, indices).ok_or(AlgebraError::InvalidGrade { n, k })?;
        let mut out = Self::zeros(n, k);
        out.components[pos] = 1.0;
        Ok(out)
    }

    /// `e*_1 ∧ … ∧ e*_n`.
    pub fn determinant_form(n: usize) -> Self {
        Self {
            n,
            k: n,
            components: vec![1.0],
        }
    }

    /// Wedge of the columns of an `n × k` matrix, read as 1-covectors.
    pub fn wedge_of(covectors: &DMatrix<f64>) -> Self {
        let (n, k) = covectors.shape();
        Self {
            n,
            k,
            components: minors(covectors),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grade(&self) -> usize {
        self.k
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Evaluate on a simple k-vector.
    pub fn pair(&self, a: &SimpleKVector) -> Result<f64, AlgebraError> {
        if a.dim() != self.n || a.grade() != self.k {
            return Err(AlgebraError::DimensionMismatch {
                expected_n: self.n,
                expected_k: self.k,
                n: a.dim(),
                k: a.grade(),
            });
        }
        Ok(self.pair_components(&a.components()))
    }

    /// Evaluate on raw Plücker components (no dimension check beyond length).
    pub fn pair_components(&self, comps: &[f64]) -> f64 {
        self.components.iter().zip(comps).map(|(x, y)| x * y).sum()
    }

    /// Evaluate on the wedge of the columns of an `n × k` matrix.
    pub fn eval_on(&self, vectors: &DMatrix<f64>) -> f64 {
        debug_assert_eq!(vectors.shape(), (self.n, self.k));
        self.pair_components(&minors(vectors))
    }

    pub fn axpy(&mut self, t: f64, other: &KCovector) {
        debug_assert_eq!((self.n, self.k), (other.n, other.k));
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            *a += t * b;
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        Self {
            n: self.n,
            k: self.k,
            components: self.components.iter().map(|c| t * c).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &KCovector) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Add for &KCovector {
    type Output = KCovector;
    fn add(self, rhs: &KCovector) -> KCovector {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &KCovector {
    type Output = KCovector;
    fn sub(self, rhs: &KCovector) -> KCovector {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &KCovector {
    type Output = KCovector;
    fn mul(self, t: f64) -> KCovector {
        self.scale(t)
    }
}

impl Neg for &KCovector {
    type Output = KCovector;
    fn neg(self) -> KCovector {
        self.scale(-1.0)
    }
}

/// `pair(xi, a)`; see [`KCovector::pair`].
pub fn pair(xi: &KCovector, a: &SimpleKVector) -> Result<f64, AlgebraError> {
    xi.pair(a)
}
