//! Dense square complex matrices.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::scalar::{abs, cone, creal, czero, Complex, Real};
use crate::{Error, Result};

/// Dense square complex matrix.
///
/// Traces are always normalized so that the identity has trace one, and the
/// inner product is `<a, b> = tr(a* b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    data: DMatrix<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn from_dmatrix(data: DMatrix<Complex<T>>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                found: data.ncols(),
            });
        }
        if data.nrows() == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        Ok(Self { data })
    }

    pub(crate) fn wrap(data: DMatrix<Complex<T>>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(DMatrix::from_element(dim, dim, czero()))
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(DMatrix::from_fn(dim, dim, |i, j| if i == j { cone() } else { czero() }))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        Self::wrap(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a square.
    pub fn from_row_major(dim: usize, entries: &[Complex<T>]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self::wrap(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let entries: Vec<Complex<T>> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| creal(T::lit(x))))
            .collect();
        Self::from_row_major(dim, &entries)
    }

    pub fn diagonal(entries: &[Complex<T>]) -> Self {
        let d = entries.len();
        Self::from_fn(d, |i, j| if i == j { entries[i] } else { czero() })
    }

    /// The matrix unit `E_ij`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.data[(i, j)] = cone();
        m
    }

    /// Cyclic shift `S e_j = e_{j+1 mod n}`.
    pub fn shift(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == (j + 1) % dim { cone() } else { czero() })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex<T>) {
        self.data[(i, j)] = z;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex<T>> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex<T>> {
        self.data
    }

    pub fn row_major(&self) -> Vec<Complex<T>> {
        let d = self.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.data[(i, j)])
            .collect()
    }

    /// Column-major entries; the coordinate vector used for span computations.
    pub fn entries(&self) -> &[Complex<T>] {
        self.data.as_slice()
    }

    pub fn vectorize(&self) -> DVector<Complex<T>> {
        DVector::from_column_slice(self.data.as_slice())
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.data.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self::wrap(self.data.transpose())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::wrap(self.data.map(|z| z * s))
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self::wrap(self.data.map(|z| z * creal(s)))
    }

    /// `self + s * other`, in place.
    pub fn axpy(&mut self, s: Complex<T>, other: &Self) {
        assert_eq!(self.dim(), other.dim(), "axpy dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * *b;
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::wrap(self.data.kronecker(&other.data))
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[Self]) -> Self {
        let d: usize = blocks.iter().map(Self::dim).sum();
        let mut out = Self::zeros(d);
        let mut off = 0;
        for b in blocks {
            out.data
                .view_mut((off, off), (b.dim(), b.dim()))
                .copy_from(&b.data);
            off += b.dim();
        }
        out
    }

    /// Normalized trace, `tr(1) = 1`.
    pub fn trace(&self) -> Complex<T> {
        let d = self.dim();
        let mut s = czero::<T>();
        for i in 0..d {
            s += self.data[(i, i)];
        }
        s * creal(T::one() / T::lit(d as f64))
    }

    /// `tr(self* other)` with the normalized trace.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        let mut s = czero::<T>();
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            s += a.conj() * *b;
        }
        s * creal(T::one() / T::lit(self.dim() as f64))
    }

    /// Unnormalized Frobenius norm.
    pub fn frobenius(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(abs(*z)))
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> T {
        self.data
            .clone()
            .singular_values()
            .iter()
            .cloned()
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn singular_values(&self) -> Vec<T> {
        let mut s: Vec<T> = self.data.clone().singular_values().iter().cloned().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        s
    }

    /// Number of singular values above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.singular_values()
            .into_iter()
            .filter(|s| s.as_f64() > threshold)
            .count()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(T::lit(0.5))
    }

    /// Distance of `self* self` and `self self*` from the identity (Frobenius).
    pub fn unitary_residual(&self) -> f64 {
        let id = Self::identity(self.dim());
        let a = (&(&self.adjoint() * self) - &id).frobenius();
        let b = (&(self * &self.adjoint()) - &id).frobenius();
        a.max(b).as_f64()
    }

    pub fn hermitian_residual(&self) -> f64 {
        (self - &self.adjoint()).frobenius().as_f64()
    }

    /// Worst of `||p^2 - p||` and `||p* - p||`.
    pub fn projection_residual(&self) -> f64 {
        let idem = (&(self * self) - self).frobenius().as_f64();
        idem.max(self.hermitian_residual())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_residual() < tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() < tol
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.projection_residual() < tol
    }

    /// `||self - s * 1||` (Frobenius).
    pub fn distance_to_scalar(&self, s: Complex<T>) -> f64 {
        let mut m = self.clone();
        for i in 0..self.dim() {
            m.data[(i, i)] -= s;
        }
        m.frobenius().as_f64()
    }

    /// Spectral decomposition of the Hermitian part: eigenvalues in ascending
    /// order with matching orthonormal eigenvector columns.
    pub fn eigh(&self) -> (Vec<T>, DMatrix<Complex<T>>) {
        let h = self.hermitian_part().data;
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), order.len(), |r, cidx| {
            eig.eigenvectors[(r, order[cidx])]
        });
        (values, vectors)
    }

    /// Orthogonal projection onto the span of the given orthonormal columns.
    pub fn projector_from_columns(cols: &DMatrix<Complex<T>>) -> Self {
        Self::wrap(cols * cols.adjoint())
    }

    /// Spectral projection of the Hermitian part onto its `rank` largest
    /// eigenvalues.
    pub fn top_eigenprojection(&self, rank: usize) -> Self {
        let d = self.dim();
        if rank == 0 {
            return Self::zeros(d);
        }
        if rank >= d {
            return Self::identity(d);
        }
        let (_, vecs) = self.eigh();
        let cols = vecs.columns(d - rank, rank).into_owned();
        Self::projector_from_columns(&cols)
    }

    pub fn cast<S: Real>(&self) -> ComplexMatrix<S> {
        ComplexMatrix::wrap(
            self.data
                .map(|z| Complex::new(S::lit(z.re.as_f64()), S::lit(z.im.as_f64()))),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim(), rhs.dim(), "product dimension mismatch");
        ComplexMatrix::wrap(&self.data * &rhs.data)
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim(), rhs.dim(), "sum dimension mismatch");
        ComplexMatrix::wrap(&self.data + &rhs.data)
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim(), rhs.dim(), "difference dimension mismatch");
        ComplexMatrix::wrap(&self.data - &rhs.data)
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        ComplexMatrix::wrap(-&self.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    type M = ComplexMatrix<f64>;

    #[test]
    fn normalized_trace_and_inner_product() {
        let id = M::identity(3);
        assert_eq!(id.trace(), c(1.0, 0.0));
        let e = M::unit(3, 0, 0);
        assert!((e.trace().re - 1.0 / 3.0).abs() < 1e-15);
        // <sqrt(d) E_ij, sqrt(d) E_ij> = 1
        let f = e.scale_real(3f64.sqrt());
        assert!((f.inner(&f).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shift_is_unitary_and_cycles() {
        let s = M::shift(4);
        assert!(s.is_unitary(1e-14));
        let s4 = &(&s * &s) * &(&s * &s);
        assert!(s4.distance_to_scalar(c(1.0, 0.0)) < 1e-15);
        assert_eq!(s.get(1, 0), c(1.0, 0.0));
    }

    #[test]
    fn predicates() {
        let p = M::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        assert!(p.is_projection(1e-14));
        assert!(p.is_hermitian(1e-14));
        assert!(!p.is_unitary(1e-3));
        let n = M::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(!n.is_hermitian(1e-3));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(M::from_row_major(2, &[c(1.0, 0.0); 3]).is_err());
        assert!(M::from_row_major(0, &[]).is_err());
        assert!(M::from_row_major(1, &[c(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn top_eigenprojection_picks_largest_eigenvalues() {
        let h = M::diagonal(&[c(0.1, 0.0), c(3.0, 0.0), c(-1.0, 0.0), c(2.0, 0.0)]);
        let p = h.top_eigenprojection(2);
        let expect = M::diagonal(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((&p - &expect).frobenius() < 1e-12);
    }

    #[test]
    fn kron_and_direct_sum_dimensions() {
        let a = M::shift(2);
        let b = M::identity(3);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 6);
        assert_eq!(k.get(3, 0), c(1.0, 0.0));
        let d = M::direct_sum(&[a.clone(), b.clone()]);
        assert_eq!(d.dim(), 5);
        assert_eq!(d.get(4, 4), c(1.0, 0.0));
        assert_eq!(d.get(0, 1), c(1.0, 0.0));
    }

    #[test]
    fn works_in_single_precision() {
        let s = ComplexMatrix::<f32>::shift(3);
        assert!(s.is_unitary(1e-5));
        assert!((s.trace().re).abs() < 1e-6);
    }
}
