//! Unital *-subalgebras of a full matrix algebra, their trace-preserving
//! conditional expectations, the basic construction and Markov traces.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::matrix::ComplexMatrix;
use crate::scalar::{cone, creal, czero, Complex, Real};
use crate::{Error, Rational, Result, Settings};

/// Gap factor above the rank threshold inside which a residual norm counts as
/// numerically ambiguous.
const AMBIGUITY_GAP: f64 = 1e3;

/// The normalized trace on `M_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceForm {
    pub ambient_dim: usize,
}

impl TraceForm {
    pub fn new(ambient_dim: usize) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
        }
        Ok(Self { ambient_dim })
    }

    /// Factor applied to the matrix trace so that `tr(1) = 1`.
    pub fn normalization(&self) -> Rational {
        Rational::new(BigInt::from(1), BigInt::from(self.ambient_dim))
    }

    pub fn trace<T: Real>(&self, x: &ComplexMatrix<T>) -> Result<Complex<T>> {
        check_dim(self.ambient_dim, x)?;
        Ok(x.trace())
    }

    pub fn inner<T: Real>(&self, a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<Complex<T>> {
        check_dim(self.ambient_dim, a)?;
        check_dim(self.ambient_dim, b)?;
        Ok(a.inner(b))
    }
}

fn check_dim<T: Real>(expected: usize, x: &ComplexMatrix<T>) -> Result<()> {
    if x.dim() != expected {
        Err(Error::DimensionMismatch {
            expected,
            found: x.dim(),
        })
    } else {
        Ok(())
    }
}

/// Incremental Gram-Schmidt under the normalized trace inner product.
struct Orthonormalizer<T: Real> {
    basis: Vec<ComplexMatrix<T>>,
    threshold: f64,
    ambiguous: bool,
}

impl<T: Real> Orthonormalizer<T> {
    fn new(ambient_dim: usize, settings: &Settings) -> Self {
        Self {
            basis: Vec::new(),
            threshold: settings.tolerance * ambient_dim as f64,
            ambiguous: false,
        }
    }

    fn residual_norm(x: &ComplexMatrix<T>) -> f64 {
        x.inner(x).re.max(T::zero()).sqrt().as_f64()
    }

    /// Adds `candidate` if it leaves the current span; returns whether it did.
    fn push(&mut self, candidate: &ComplexMatrix<T>) -> bool {
        let norm = Self::residual_norm(candidate);
        if norm == 0.0 || !norm.is_finite() {
            return false;
        }
        let mut v = candidate.scale_real(T::lit(1.0 / norm));
        for _ in 0..2 {
            for q in &self.basis {
                let coeff = q.inner(&v);
                v.axpy(-coeff, q);
            }
        }
        let r = Self::residual_norm(&v);
        if r <= self.threshold {
            return false;
        }
        if r < self.threshold * AMBIGUITY_GAP {
            self.ambiguous = true;
        }
        self.basis.push(v.scale_real(T::lit(1.0 / r)));
        true
    }
}

/// Dimension of the linear span of `elements`, with the same rank threshold
/// as subalgebra generation.
pub fn span_dimension<T: Real>(
    elements: &[ComplexMatrix<T>],
    ambient_dim: usize,
    settings: &Settings,
) -> Result<usize> {
    let mut on = Orthonormalizer::new(ambient_dim, settings);
    for e in elements {
        check_dim(ambient_dim, e)?;
        on.push(e);
    }
    if on.ambiguous {
        return Err(Error::DegenerateBasis {
            effective_dim: on.basis.len(),
        });
    }
    Ok(on.basis.len())
}

/// A unital *-subalgebra of `M_d`, stored as a trace-orthonormal spanning set.
#[derive(Clone, Debug)]
pub struct StarSubalgebra<T: Real> {
    ambient_dim: usize,
    basis: Vec<ComplexMatrix<T>>,
}

impl<T: Real> StarSubalgebra<T> {
    /// `C 1` inside `M_d`.
    pub fn scalars(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: vec![ComplexMatrix::identity(ambient_dim)],
        }
    }

    /// All of `M_d`, with the scaled matrix units `sqrt(d) E_ij` as basis
    /// (row-major order).
    pub fn full(ambient_dim: usize) -> Self {
        let s = T::lit((ambient_dim as f64).sqrt());
        let basis = (0..ambient_dim)
            .flat_map(|i| (0..ambient_dim).map(move |j| (i, j)))
            .map(|(i, j)| ComplexMatrix::unit(ambient_dim, i, j).scale_real(s))
            .collect();
        Self { ambient_dim, basis }
    }

    /// The diagonal matrices `Delta_d`.
    pub fn diagonal(ambient_dim: usize) -> Self {
        let s = T::lit((ambient_dim as f64).sqrt());
        let basis = (0..ambient_dim)
            .map(|i| ComplexMatrix::unit(ambient_dim, i, i).scale_real(s))
            .collect();
        Self { ambient_dim, basis }
    }

    /// Orthonormalizes the span of `elements` together with the unit, then
    /// checks that the span is closed under products and adjoints.
    pub fn from_spanning_set(
        ambient_dim: usize,
        elements: &[ComplexMatrix<T>],
        settings: &Settings,
    ) -> Result<Self> {
        let alg = Self::span_with_unit(ambient_dim, elements, settings)?;
        let residual = alg.closure_residual();
        if residual >= settings.tolerance * ambient_dim as f64 {
            return Err(Error::NotContained {
                what: "products and adjoints of basis elements".into(),
                container: "their span".into(),
                residual,
            });
        }
        Ok(alg)
    }

    pub(crate) fn span_with_unit(
        ambient_dim: usize,
        elements: &[ComplexMatrix<T>],
        settings: &Settings,
    ) -> Result<Self> {
        settings.check_dim(ambient_dim)?;
        let mut on = Orthonormalizer::new(ambient_dim, settings);
        on.push(&ComplexMatrix::identity(ambient_dim));
        for e in elements {
            check_dim(ambient_dim, e)?;
            on.push(e);
        }
        if on.ambiguous {
            return Err(Error::DegenerateBasis {
                effective_dim: on.basis.len(),
            });
        }
        Ok(Self {
            ambient_dim,
            basis: on.basis,
        })
    }

    /// The smallest unital *-subalgebra of `M_d` containing `generators`.
    ///
    /// The span is closed under left multiplication by the generators and
    /// their adjoints, starting from the unit; rank decisions use the
    /// threshold `tolerance * ambient_dim`.
    pub fn generate(
        generators: &[ComplexMatrix<T>],
        ambient_dim: usize,
        settings: &Settings,
    ) -> Result<Self> {
        settings.check_dim(ambient_dim)?;
        for g in generators {
            check_dim(ambient_dim, g)?;
        }
        let mut gens: Vec<ComplexMatrix<T>> = Vec::with_capacity(2 * generators.len());
        for g in generators {
            gens.push(g.clone());
            if !g.is_hermitian(settings.tolerance) {
                gens.push(g.adjoint());
            }
        }
        let mut on = Orthonormalizer::new(ambient_dim, settings);
        on.push(&ComplexMatrix::identity(ambient_dim));
        for g in &gens {
            on.push(g);
        }
        let mut next = 0;
        while next < on.basis.len() {
            let b = on.basis[next].clone();
            for g in &gens {
                let prod = g * &b;
                on.push(&prod);
            }
            next += 1;
        }
        if on.ambiguous {
            return Err(Error::DegenerateBasis {
                effective_dim: on.basis.len(),
            });
        }
        Ok(Self {
            ambient_dim,
            basis: on.basis,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Vector-space dimension.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix<T>] {
        &self.basis
    }

    /// `true` when the span contains the unit.
    pub fn contains_unit(&self, tol: f64) -> bool {
        self.containment_residual(&ComplexMatrix::identity(self.ambient_dim))
            .map(|r| r < tol)
            .unwrap_or(false)
    }

    /// Trace-preserving conditional expectation: the orthogonal projection
    /// onto the span under `<a, b> = tr(a* b)`.
    pub fn expectation(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        check_dim(self.ambient_dim, x)?;
        let mut out = ComplexMatrix::zeros(self.ambient_dim);
        for b in &self.basis {
            out.axpy(b.inner(x), b);
        }
        Ok(out)
    }

    /// Conditional expectation preserving the trace `x -> tr(density x)`.
    ///
    /// `density` must be positive definite and commute with the algebra the
    /// argument lives in; it is normalized here so that the trace is a state.
    pub fn expectation_weighted(
        &self,
        x: &ComplexMatrix<T>,
        density: &ComplexMatrix<T>,
    ) -> Result<ComplexMatrix<T>> {
        check_dim(self.ambient_dim, x)?;
        check_dim(self.ambient_dim, density)?;
        let k = self.basis.len();
        let rho = density.scale(cone::<T>() / density.trace());
        let rho_basis: Vec<ComplexMatrix<T>> = self.basis.iter().map(|b| &rho * b).collect();
        // <a, b>_rho = tr(rho a* b) = tr(a* (rho b)) when rho is central
        let gram = DMatrix::from_fn(k, k, |i, j| self.basis[i].inner(&rho_basis[j]));
        let rho_x = &rho * x;
        let rhs = nalgebra::DVector::from_fn(k, |i, _| self.basis[i].inner(&rho_x));
        let coeffs = gram
            .lu()
            .solve(&rhs)
            .ok_or(Error::DegenerateBasis { effective_dim: k })?;
        let mut out = ComplexMatrix::zeros(self.ambient_dim);
        for (b, cf) in self.basis.iter().zip(coeffs.iter()) {
            out.axpy(*cf, b);
        }
        Ok(out)
    }

    /// `||x - E(x)||` in the normalized trace norm.
    pub fn containment_residual(&self, x: &ComplexMatrix<T>) -> Result<f64> {
        let e = self.expectation(x)?;
        let diff = x - &e;
        Ok(diff.inner(&diff).re.max(T::zero()).sqrt().as_f64())
    }

    /// Worst containment residual of `other`'s basis in `self`.
    pub fn inclusion_residual(&self, other: &StarSubalgebra<T>) -> Result<f64> {
        if other.ambient_dim != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: other.ambient_dim,
            });
        }
        other
            .basis
            .iter()
            .map(|b| self.containment_residual(b))
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
    }

    /// Largest deviation of the basis Gram matrix from the identity.
    pub fn gram_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { cone() } else { czero() };
                worst = worst.max(crate::scalar::abs(a.inner(b) - target).as_f64());
            }
        }
        worst
    }

    /// Worst residual of products and adjoints of basis elements leaving the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in &self.basis {
            worst = worst.max(self.containment_residual(&a.adjoint()).unwrap_or(f64::INFINITY));
            for b in &self.basis {
                worst = worst.max(self.containment_residual(&(a * b)).unwrap_or(f64::INFINITY));
            }
        }
        worst
    }

    /// `u A u*` for a unitary `u`.
    pub fn conjugate(&self, u: &ComplexMatrix<T>, settings: &Settings) -> Result<Self> {
        check_dim(self.ambient_dim, u)?;
        let ua = u.adjoint();
        let images: Vec<ComplexMatrix<T>> =
            self.basis.iter().map(|b| &(u * b) * &ua).collect();
        Self::span_with_unit(self.ambient_dim, &images, settings)
    }

    /// The center `A ∩ A'`, as a subalgebra.
    pub fn center(&self, settings: &Settings) -> Result<Self> {
        let k = self.basis.len();
        // c in the kernel of c -> ([sum c_i b_i, b_j])_j
        let comms: Vec<Vec<ComplexMatrix<T>>> = self
            .basis
            .iter()
            .map(|bi| self.basis.iter().map(|bj| bi.commutator(bj)).collect())
            .collect();
        let gram = DMatrix::from_fn(k, k, |i, l| {
            let mut s = czero::<T>();
            for j in 0..k {
                s += comms[i][j].inner(&comms[l][j]);
            }
            s
        });
        let gram = ComplexMatrix::from_dmatrix(gram)?;
        let (vals, vecs) = gram.eigh();
        let threshold = settings.tolerance * self.ambient_dim as f64;
        let mut elements = Vec::new();
        for (idx, v) in vals.iter().enumerate() {
            if v.as_f64().abs() <= threshold {
                let mut z = ComplexMatrix::zeros(self.ambient_dim);
                for i in 0..k {
                    z.axpy(vecs[(i, idx)], &self.basis[i]);
                }
                elements.push(z);
            }
        }
        Self::span_with_unit(self.ambient_dim, &elements, settings)
    }

    /// Minimal projections of an abelian algebra, via the spectral projections
    /// of a generic self-adjoint element.
    pub fn minimal_projections_abelian(&self, settings: &Settings) -> Result<Vec<ComplexMatrix<T>>> {
        let mut h = ComplexMatrix::zeros(self.ambient_dim);
        for (i, b) in self.basis.iter().enumerate() {
            // fixed incommensurable weights keep the eigenvalues generic and the
            // output deterministic
            let w = ((i as f64 + 1.0) * 0.618_033_988_749_894_9).fract() + 0.5;
            h.axpy(creal(T::lit(w)), &b.hermitian_part());
        }
        spectral_projections(&h, settings)
    }

    /// Central projections and block sizes of the simple summands.
    pub fn blocks(&self, settings: &Settings) -> Result<Vec<Block<T>>> {
        let center = self.center(settings)?;
        let mut blocks = Vec::new();
        for z in center.minimal_projections_abelian(settings)? {
            let za: Vec<ComplexMatrix<T>> = self.basis.iter().map(|b| &z * b).collect();
            let mut on = Orthonormalizer::new(self.ambient_dim, settings);
            for x in &za {
                on.push(x);
            }
            let block_dim = on.basis.len();
            let size = (block_dim as f64).sqrt().round() as usize;
            if size * size != block_dim {
                return Err(Error::DegenerateBasis {
                    effective_dim: block_dim,
                });
            }
            let rank = z.trace().re.as_f64() * self.ambient_dim as f64;
            let rank = rank.round() as usize;
            blocks.push(Block {
                size,
                multiplicity: rank / size.max(1),
                central_projection: z,
            });
        }
        Ok(blocks)
    }
}

/// One simple summand `M_size` of a subalgebra, repeated `multiplicity` times
/// in the ambient representation.
#[derive(Clone, Debug)]
pub struct Block<T: Real> {
    pub size: usize,
    pub multiplicity: usize,
    pub central_projection: ComplexMatrix<T>,
}

/// Spectral projections of a Hermitian matrix, grouping eigenvalues closer
/// than `sqrt(tolerance)`.
pub(crate) fn spectral_projections<T: Real>(
    h: &ComplexMatrix<T>,
    settings: &Settings,
) -> Result<Vec<ComplexMatrix<T>>> {
    let (vals, vecs) = h.eigh();
    let gap = settings.tolerance.sqrt();
    let d = h.dim();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=d {
        if i == d || (vals[i] - vals[i - 1]).as_f64() > gap {
            let cols = vecs.columns(start, i - start).into_owned();
            out.push(ComplexMatrix::projector_from_columns(&cols));
            start = i;
        }
    }
    Ok(out)
}

/// Result of the basic construction for `small ⊂ big ⊂ M_d`.
///
/// `big` acts by left multiplication on `L^2(big, tr)`, identified with
/// `C^m` through `big`'s orthonormal basis.
#[derive(Clone, Debug)]
pub struct BasicConstruction<T: Real> {
    big: StarSubalgebra<T>,
    pub represented_small: StarSubalgebra<T>,
    pub represented_big: StarSubalgebra<T>,
    pub jones_projection: ComplexMatrix<T>,
    pub tower: StarSubalgebra<T>,
}

impl<T: Real> BasicConstruction<T> {
    /// Left multiplication by `x ∈ big` as an operator on `L^2(big)`.
    pub fn represent(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        represent_left(&self.big, x)
    }

    /// Dimension of `L^2(big)`.
    pub fn hilbert_dim(&self) -> usize {
        self.big.dim()
    }

    /// Worst `||e1 x e1 - E_small(x) e1||` over `big`'s basis.
    pub fn jones_relation_residual(&self, small: &StarSubalgebra<T>) -> Result<f64> {
        let e = &self.jones_projection;
        let mut worst = 0.0f64;
        for b in self.big.basis() {
            let lx = self.represent(b)?;
            let lhs = &(e * &lx) * e;
            let ex = small.expectation(b)?;
            let rhs = &self.represent(&ex)? * e;
            worst = worst.max((&lhs - &rhs).frobenius().as_f64());
        }
        Ok(worst)
    }
}

fn represent_left<T: Real>(big: &StarSubalgebra<T>, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    check_dim(big.ambient_dim(), x)?;
    let basis = big.basis();
    let images: Vec<ComplexMatrix<T>> = basis.iter().map(|b| x * b).collect();
    Ok(ComplexMatrix::from_fn(basis.len(), |i, j| basis[i].inner(&images[j])))
}

/// Jones' basic construction `⟨big, e1⟩` for `small ⊂ big` with the
/// normalized trace.
pub fn basic_construction<T: Real>(
    small: &StarSubalgebra<T>,
    big: &StarSubalgebra<T>,
    trace: &TraceForm,
    settings: &Settings,
) -> Result<BasicConstruction<T>> {
    if trace.ambient_dim != big.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: big.ambient_dim(),
            found: trace.ambient_dim,
        });
    }
    let residual = big.inclusion_residual(small)?;
    if residual >= settings.tolerance {
        return Err(Error::NotContained {
            what: "small algebra".into(),
            container: "big algebra".into(),
            residual,
        });
    }
    let m = big.dim();
    settings.check_dim(m)?;

    // coordinates of small's orthonormal basis inside L^2(big)
    let coords: Vec<Vec<Complex<T>>> = small
        .basis()
        .iter()
        .map(|s| big.basis().iter().map(|b| b.inner(s)).collect())
        .collect();
    let jones = ComplexMatrix::from_fn(m, |i, j| {
        let mut acc = czero::<T>();
        for c in &coords {
            acc += c[i] * c[j].conj();
        }
        acc
    });

    let big_images: Vec<ComplexMatrix<T>> = big
        .basis()
        .iter()
        .map(|b| represent_left(big, b))
        .collect::<Result<_>>()?;
    let small_images: Vec<ComplexMatrix<T>> = small
        .basis()
        .iter()
        .map(|b| represent_left(big, b))
        .collect::<Result<_>>()?;
    let represented_big = StarSubalgebra::span_with_unit(m, &big_images, settings)?;
    let represented_small = StarSubalgebra::span_with_unit(m, &small_images, settings)?;

    let mut gens = big_images;
    gens.push(jones.clone());
    let tower = StarSubalgebra::generate(&gens, m, settings)?;

    Ok(BasicConstruction {
        big: big.clone(),
        represented_small,
        represented_big,
        jones_projection: jones,
        tower,
    })
}

/// Inclusion matrix of a unital inclusion `B ⊂ A` of multi-matrix algebras.
///
/// Rows index the simple summands of `B`, columns those of `A`; entry
/// `(i, j)` is the multiplicity of the `i`-th summand of `B` in the `j`-th
/// summand of `A`. `big_block_sizes` are the matrix sizes of `A`'s summands
/// and fix the normalization of the returned trace vector; when absent every
/// size is taken to be one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionData {
    pub inclusion_matrix: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_block_sizes: Option<Vec<u32>>,
}

/// Markov trace of a connected inclusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovTrace {
    /// Trace of a minimal projection in each summand of the larger algebra.
    pub trace_vector: Vec<f64>,
    /// The same trace restricted to the smaller algebra (`Λ t`).
    pub restricted_vector: Vec<f64>,
    /// `||Λ||^2`.
    pub modulus: f64,
    /// `||Λ^t Λ t - modulus t|| / ||modulus t||`.
    pub residual: f64,
}

impl InclusionData {
    pub fn new(inclusion_matrix: Vec<Vec<u32>>) -> Self {
        Self {
            inclusion_matrix,
            big_block_sizes: None,
        }
    }

    pub fn with_block_sizes(mut self, sizes: Vec<u32>) -> Self {
        self.big_block_sizes = Some(sizes);
        self
    }

    fn shape(&self) -> Result<(usize, usize)> {
        let rows = self.inclusion_matrix.len();
        let cols = self.inclusion_matrix.first().map(Vec::len).unwrap_or(0);
        if rows == 0 || cols == 0 || self.inclusion_matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter(
                "inclusion matrix must be a non-empty rectangle".into(),
            ));
        }
        Ok((rows, cols))
    }

    /// Whether the bipartite Bratteli diagram is connected.
    pub fn is_connected(&self) -> Result<bool> {
        let (rows, cols) = self.shape()?;
        let mut seen = vec![false; rows + cols];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            let neighbours: Vec<usize> = if v < rows {
                (0..cols)
                    .filter(|&j| self.inclusion_matrix[v][j] > 0)
                    .map(|j| rows + j)
                    .collect()
            } else {
                (0..rows)
                    .filter(|&i| self.inclusion_matrix[i][v - rows] > 0)
                    .collect()
            };
            for w in neighbours {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        Ok(seen.into_iter().all(|s| s))
    }
}

/// The unique Markov trace of a connected inclusion: the Perron-Frobenius
/// eigenvector of `Λ^t Λ`, normalized so the trace of the unit is one.
pub fn markov_trace(inclusion: &InclusionData) -> Result<MarkovTrace> {
    let (rows, cols) = inclusion.shape()?;
    if !inclusion.is_connected()? {
        return Err(Error::Disconnected);
    }
    let lam = DMatrix::from_fn(rows, cols, |i, j| inclusion.inclusion_matrix[i][j] as f64);
    let gram = lam.transpose() * &lam;
    let eig = gram.clone().symmetric_eigen();
    let (top, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    let mut t: Vec<f64> = eig.eigenvectors.column(top).iter().cloned().collect();
    if t.iter().sum::<f64>() < 0.0 {
        t.iter_mut().for_each(|x| *x = -*x);
    }
    // power-iteration polish on the primitive matrix
    let mut modulus = eig.eigenvalues[top];
    for _ in 0..4 {
        let v = nalgebra::DVector::from_vec(t.clone());
        let w = &gram * &v;
        modulus = w.dot(&v) / v.dot(&v);
        let norm = w.norm();
        t = w.iter().map(|x| x / norm).collect();
    }
    let sizes: Vec<f64> = match &inclusion.big_block_sizes {
        Some(s) if s.len() == cols => s.iter().map(|&x| x as f64).collect(),
        Some(s) => {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: s.len(),
            })
        }
        None => vec![1.0; cols],
    };
    let total: f64 = t.iter().zip(&sizes).map(|(a, b)| a * b).sum();
    let t: Vec<f64> = t.iter().map(|x| x / total).collect();
    if t.iter().any(|&x| x <= 0.0) {
        return Err(Error::Disconnected);
    }
    let tv = nalgebra::DVector::from_vec(t.clone());
    let resid = (&gram * &tv - &tv * modulus).norm() / (tv.norm() * modulus);
    let restricted: Vec<f64> = (&lam * &tv).iter().cloned().collect();
    Ok(MarkovTrace {
        trace_vector: t,
        restricted_vector: restricted,
        modulus,
        residual: resid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;

    type M = ComplexMatrix<f64>;
    type A = StarSubalgebra<f64>;

    fn s() -> Settings {
        Settings::default()
    }

    #[test]
    fn expectation_onto_diagonal() {
        let x = M::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let e = A::diagonal(2).expectation(&x).unwrap();
        let expect = M::from_real_rows(&[&[1.0, 0.0], &[0.0, 4.0]]).unwrap();
        assert!((&e - &expect).frobenius() < 1e-14);
    }

    #[test]
    fn expectation_onto_scalars_is_trace() {
        let x = M::from_fn(3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let e = A::scalars(3).expectation(&x).unwrap();
        assert!(e.distance_to_scalar(x.trace()) < 1e-14);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let x = M::identity(3);
        assert!(matches!(
            A::diagonal(2).expectation(&x),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn block_average_expectation() {
        // Delta_n ⊗ M_d ⊃ C ⊗ M_d: (x_1, ..., x_n) -> (1/n) sum x_j
        let n = 3;
        let d = 2;
        let settings = s();
        let blocks: Vec<M> = (0..n)
            .map(|j| M::from_fn(d, |a, b| c((j * 7 + a * 3 + b) as f64, (j + a) as f64 * 0.5)))
            .collect();
        let x = M::direct_sum(&blocks);
        let target: Vec<M> = A::full(d)
            .basis()
            .iter()
            .map(|b| M::identity(n).kron(b))
            .collect();
        let sub = A::from_spanning_set(n * d, &target, &settings).unwrap();
        let e = sub.expectation(&x).unwrap();
        let mut avg = M::zeros(d);
        for b in &blocks {
            avg.axpy(c(1.0 / n as f64, 0.0), b);
        }
        let expect = M::identity(n).kron(&avg);
        assert!((&e - &expect).frobenius() < 1e-12);
    }

    #[test]
    fn generate_from_nothing_is_scalars() {
        let a = A::generate(&[], 3, &s()).unwrap();
        assert_eq!(a.dim(), 1);
    }

    #[test]
    fn generate_from_e12_is_everything() {
        let a = A::generate(&[M::unit(2, 0, 1)], 2, &s()).unwrap();
        assert_eq!(a.dim(), 4);
        assert!(a.closure_residual() < 1e-12);
        assert!(a.gram_residual() < 1e-12);
    }

    #[test]
    fn generate_diagonal_projection() {
        let a = A::generate(&[M::unit(3, 0, 0)], 3, &s()).unwrap();
        // span{E_11, 1 - E_11}
        assert_eq!(a.dim(), 2);
    }

    #[test]
    fn basic_construction_of_scalars_in_diagonal_is_m2() {
        let small = A::scalars(2);
        let big = A::diagonal(2);
        let bc = basic_construction(&small, &big, &TraceForm::new(2).unwrap(), &s()).unwrap();
        assert_eq!(bc.tower.dim(), 4);
        let center = bc.tower.center(&s()).unwrap();
        assert_eq!(center.dim(), 1);
    }

    #[test]
    fn basic_construction_diagonal_in_full() {
        for n in 2..=4 {
            let settings = s();
            let small = A::diagonal(n);
            let big = A::full(n);
            let bc = basic_construction(&small, &big, &TraceForm::new(n).unwrap(), &settings)
                .unwrap();
            let e1 = &bc.jones_projection;
            assert!(e1.is_projection(1e-12));
            // E_{M_n}(e1) = (1/n) 1
            let ee = bc.represented_big.expectation(e1).unwrap();
            assert!(ee.distance_to_scalar(c(1.0 / n as f64, 0.0)) < 1e-12);
            assert!(bc.jones_relation_residual(&small).unwrap() < 1e-12);
            // commutant of the right Delta_n action on L^2(M_n): n copies of M_n
            assert_eq!(bc.tower.dim(), n * n * n);
        }
    }

    #[test]
    fn basic_construction_trivial_inclusion() {
        let big = A::diagonal(3);
        let bc = basic_construction(&big, &big, &TraceForm::new(3).unwrap(), &s()).unwrap();
        assert!(bc.jones_projection.distance_to_scalar(c(1.0, 0.0)) < 1e-12);
        assert_eq!(bc.tower.dim(), big.dim());
    }

    #[test]
    fn basic_construction_rejects_non_inclusion() {
        let small = A::full(2);
        let big = A::diagonal(2);
        assert!(matches!(
            basic_construction(&small, &big, &TraceForm::new(2).unwrap(), &s()),
            Err(Error::NotContained { .. })
        ));
    }

    #[test]
    fn center_and_blocks() {
        let settings = s();
        assert_eq!(A::full(3).center(&settings).unwrap().dim(), 1);
        assert_eq!(A::diagonal(3).center(&settings).unwrap().dim(), 3);
        // Delta_1 ⊕ M_2 inside M_3
        let mut gens = vec![M::unit(3, 0, 0)];
        gens.push(M::unit(3, 1, 2));
        let a = A::generate(&gens, 3, &settings).unwrap();
        assert_eq!(a.dim(), 5);
        let mut sizes: Vec<usize> = a.blocks(&settings).unwrap().iter().map(|b| b.size).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2]);
    }

    #[test]
    fn markov_trace_examples() {
        // C ⊂ Delta_n: row of ones
        let m = markov_trace(&InclusionData::new(vec![vec![1; 4]])).unwrap();
        assert!((m.modulus - 4.0).abs() < 1e-12);
        assert!(m.trace_vector.iter().all(|t| (t - 0.25).abs() < 1e-12));
        // C ⊂ M_n
        let m = markov_trace(&InclusionData::new(vec![vec![3]]).with_block_sizes(vec![3])).unwrap();
        assert!((m.modulus - 9.0).abs() < 1e-12);
        assert!((m.trace_vector[0] - 1.0 / 3.0).abs() < 1e-12);
        // identity 1x1
        let m = markov_trace(&InclusionData::new(vec![vec![1]])).unwrap();
        assert!((m.modulus - 1.0).abs() < 1e-12);
        assert_eq!(m.trace_vector, vec![1.0]);
    }

    #[test]
    fn markov_trace_rejects_disconnected() {
        let inc = InclusionData::new(vec![vec![1, 0], vec![0, 1]]);
        assert!(matches!(markov_trace(&inc), Err(Error::Disconnected)));
    }

    #[test]
    fn weighted_expectation_onto_scalars() {
        let settings = s();
        // trace giving weight 1/2 to each minimal projection of
        // span{diag(1,0,0), diag(0,1,1)}
        let rho = M::diagonal(&[c(1.5, 0.0), c(0.75, 0.0), c(0.75, 0.0)]);
        let p = M::unit(3, 0, 0);
        let sc = A::scalars(3);
        let e = sc.expectation_weighted(&p, &rho).unwrap();
        assert!(e.distance_to_scalar(c(0.5, 0.0)) < 1e-12);
        let _ = settings;
    }
}
