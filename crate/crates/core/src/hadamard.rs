//! Complex Hadamard and bi-unitary matrices, the spin and vertex model
//! commuting squares, and the spin-model tower unitaries.

use std::sync::Arc;

use crate::algebra::StarSubalgebra;
use crate::commuting_square::QuadrupleOfAlgebras;
use crate::matrix::ComplexMatrix;
use crate::report::Report;
use crate::scalar::{abs, c, cone, creal, czero, root_of_unity, Complex, Real};
use crate::{Error, Result, Settings};

/// Unimodularity and `u u* - n 1` residuals of a candidate Hadamard matrix.
pub fn verify_hadamard<T: Real>(m: &ComplexMatrix<T>, tol: f64) -> Report {
    let n = m.dim();
    let unimodular = m
        .entries()
        .iter()
        .map(|z| (abs(*z).as_f64() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut gram = m * &m.adjoint();
    for i in 0..n {
        let z = gram.get(i, i) - c(n as f64, 0.0);
        gram.set(i, i, z);
    }
    Report::new("hadamard", tol)
        .bound("unimodularity", unimodular)
        .bound("u u* - n 1", gram.frobenius().as_f64())
}

/// A complex Hadamard matrix: unimodular entries and `u u* = n 1`.
#[derive(Clone, Debug)]
pub struct HadamardMatrix<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> HadamardMatrix<T> {
    pub fn new(matrix: ComplexMatrix<T>, tol: f64) -> Result<Self> {
        let report = verify_hadamard(&matrix, tol);
        if !report.pass {
            return Err(Error::NotHadamard(format!(
                "worst residual {:.3e} exceeds tolerance {tol:.1e}",
                report.worst()
            )));
        }
        Ok(Self { matrix })
    }

    /// The Fourier matrix `F_n`, entry `(j, k) = ω^{jk}` with `ω = exp(2πi/n)`.
    pub fn fourier(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Fourier matrix needs n >= 1".into()));
        }
        let matrix = ComplexMatrix::from_fn(n, |j, k| root_of_unity((j * k) as i64, n));
        Ok(Self { matrix })
    }

    /// `self ⊗ other`, again Hadamard.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    pub fn order(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// The unitary `u / sqrt(n)`.
    pub fn normalized(&self) -> ComplexMatrix<T> {
        self.matrix
            .scale_real(T::lit(1.0 / (self.order() as f64).sqrt()))
    }
}

/// Block transpose in `M_n ⊗ M_k`: entry `(αa, βb)` of the output is entry
/// `(βa, αb)` of the input, with row index `α k + a`.
pub fn block_transpose<T: Real>(w: &ComplexMatrix<T>, n: usize, k: usize) -> Result<ComplexMatrix<T>> {
    if n == 0 || k == 0 || w.dim() != n * k {
        return Err(Error::DimensionMismatch {
            expected: n * k,
            found: w.dim(),
        });
    }
    Ok(ComplexMatrix::from_fn(n * k, |row, col| {
        let (alpha, a) = (row / k, row % k);
        let (beta, b) = (col / k, col % k);
        w.get(beta * k + a, alpha * k + b)
    }))
}

/// Unitarity residuals of `w` and of its block transpose.
pub fn verify_biunitary<T: Real>(w: &ComplexMatrix<T>, n: usize, k: usize, tol: f64) -> Result<Report> {
    let wt = block_transpose(w, n, k)?;
    Ok(Report::new("biunitary", tol)
        .bound("w unitarity", w.unitary_residual())
        .bound("block transpose unitarity", wt.unitary_residual()))
}

/// A unitary in `M_n ⊗ M_k` whose block transpose is also unitary.
#[derive(Clone, Debug)]
pub struct BiUnitaryMatrix<T: Real> {
    n: usize,
    k: usize,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> BiUnitaryMatrix<T> {
    pub fn new(matrix: ComplexMatrix<T>, n: usize, k: usize, tol: f64) -> Result<Self> {
        let report = verify_biunitary(&matrix, n, k, tol)?;
        if !report.pass {
            return Err(Error::NotBiUnitary(format!(
                "worst residual {:.3e} exceeds tolerance {tol:.1e}",
                report.worst()
            )));
        }
        Ok(Self { n, k, matrix })
    }

    pub fn identity(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            matrix: ComplexMatrix::identity(n * k),
        }
    }

    /// `x ⊗ y` for unitaries `x ∈ M_n`, `y ∈ M_k`; its block transpose is `xᵗ ⊗ y`.
    pub fn tensor(x: &ComplexMatrix<T>, y: &ComplexMatrix<T>, tol: f64) -> Result<Self> {
        Self::new(x.kron(y), x.dim(), y.dim(), tol)
    }

    /// `Σ_α E_αα ⊗ w_α` for unitaries `w_α ∈ M_k`, fixed by the block transpose.
    pub fn block_diagonal(blocks: &[ComplexMatrix<T>], tol: f64) -> Result<Self> {
        let k = blocks.first().map(ComplexMatrix::dim).unwrap_or(0);
        Self::new(ComplexMatrix::direct_sum(blocks), blocks.len(), k, tol)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }
}

/// The flip `e_α ⊗ e_a -> e_a ⊗ e_α` on `C^2 ⊗ C^2`: unitary, but its block
/// transpose is twice a rank-one projection.
pub fn flip_counterexample<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(4, |row, col| {
        let (alpha, a) = (row / 2, row % 2);
        let (beta, b) = (col / 2, col % 2);
        if alpha == b && a == beta {
            cone()
        } else {
            czero()
        }
    })
}

/// `(C ⊂ Δ_n, Ad_u(Δ_n) ⊂ M_n)` for a complex Hadamard matrix `u`.
pub fn spin_square<T: Real>(u: &HadamardMatrix<T>, settings: &Settings) -> Result<QuadrupleOfAlgebras<T>> {
    HadamardMatrix::new(u.matrix.clone(), settings.tolerance)?;
    let n = u.order();
    settings.check_dim(n)?;
    let q = StarSubalgebra::diagonal(n).conjugate(&u.normalized(), settings)?;
    QuadrupleOfAlgebras::new(
        StarSubalgebra::scalars(n),
        StarSubalgebra::diagonal(n),
        q,
        StarSubalgebra::full(n),
        settings,
    )
}

/// `(C ⊂ M_n ⊗ C, Ad_v(C ⊗ M_k) ⊂ M_n ⊗ M_k)` for a bi-unitary `v`.
pub fn vertex_square<T: Real>(v: &BiUnitaryMatrix<T>, settings: &Settings) -> Result<QuadrupleOfAlgebras<T>> {
    BiUnitaryMatrix::new(v.matrix.clone(), v.n, v.k, settings.tolerance)?;
    let (n, k) = (v.n, v.k);
    settings.check_dim(n * k)?;
    let ik = ComplexMatrix::identity(k);
    let in_ = ComplexMatrix::identity(n);
    let p_gens: Vec<ComplexMatrix<T>> = StarSubalgebra::<T>::full(n)
        .basis()
        .iter()
        .map(|x| x.kron(&ik))
        .collect();
    let q_gens: Vec<ComplexMatrix<T>> = StarSubalgebra::<T>::full(k)
        .basis()
        .iter()
        .map(|y| in_.kron(y))
        .collect();
    let p = StarSubalgebra::span_with_unit(n * k, &p_gens, settings)?;
    let q = StarSubalgebra::span_with_unit(n * k, &q_gens, settings)?.conjugate(&v.matrix, settings)?;
    QuadrupleOfAlgebras::new(
        StarSubalgebra::scalars(n * k),
        p,
        q,
        StarSubalgebra::full(n * k),
        settings,
    )
}

#[derive(Clone, Debug)]
enum Core<T: Real> {
    Dense(Arc<ComplexMatrix<T>>),
    Diagonal(Arc<Vec<Complex<T>>>),
}

impl<T: Real> Core<T> {
    fn dim(&self) -> usize {
        match self {
            Core::Dense(m) => m.dim(),
            Core::Diagonal(d) => d.len(),
        }
    }
}

/// `I_left ⊗ core ⊗ I_right`.
#[derive(Clone, Debug)]
struct Factor<T: Real> {
    left: usize,
    core: Core<T>,
    right: usize,
}

impl<T: Real> Factor<T> {
    fn dim(&self) -> usize {
        self.left * self.core.dim() * self.right
    }

    /// Applies the factor (or its adjoint) to `cols` stacked vectors.
    fn apply(&self, x: &mut Vec<Complex<T>>, scratch: &mut Vec<Complex<T>>, cols: usize, adjoint: bool) {
        let c = self.core.dim();
        let r = self.right;
        let blocks = cols * self.left;
        match &self.core {
            Core::Diagonal(d) => {
                for blk in 0..blocks {
                    let base = blk * c * r;
                    for (xo, z) in d.iter().enumerate() {
                        let z = if adjoint { z.conj() } else { *z };
                        for v in &mut x[base + xo * r..base + (xo + 1) * r] {
                            *v *= z;
                        }
                    }
                }
            }
            Core::Dense(m) => {
                // coefficient (xo, xi) at xo * c + xi
                let coeffs: Vec<Complex<T>> = (0..c * c)
                    .map(|idx| {
                        let (xo, xi) = (idx / c, idx % c);
                        if adjoint {
                            m.get(xi, xo).conj()
                        } else {
                            m.get(xo, xi)
                        }
                    })
                    .collect();
                scratch.clear();
                scratch.resize(x.len(), czero());
                if r == 1 {
                    for (out, inp) in scratch.chunks_exact_mut(c).zip(x.chunks_exact(c)) {
                        for (o, row) in out.iter_mut().zip(coeffs.chunks_exact(c)) {
                            let mut acc = czero::<T>();
                            for (a, v) in row.iter().zip(inp) {
                                acc += *a * *v;
                            }
                            *o = acc;
                        }
                    }
                } else {
                    for blk in 0..blocks {
                        let base = blk * c * r;
                        for xo in 0..c {
                            let out = &mut scratch[base + xo * r..base + (xo + 1) * r];
                            for xi in 0..c {
                                let a = coeffs[xo * c + xi];
                                let inp = &x[base + xi * r..base + (xi + 1) * r];
                                for (o, v) in out.iter_mut().zip(inp) {
                                    *o += a * *v;
                                }
                            }
                        }
                    }
                }
                std::mem::swap(x, scratch);
            }
        }
    }
}

/// One tower unitary, kept as an ordered product of Kronecker factors.
#[derive(Clone, Debug)]
pub struct StageUnitary<T: Real> {
    dim: usize,
    factors: Vec<Factor<T>>,
}

impl<T: Real> StageUnitary<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of Kronecker factors in the stored product.
    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    /// Applies the unitary (or its adjoint) to `cols` column vectors stored
    /// one after another in `x`.
    pub fn apply(&self, x: &mut Vec<Complex<T>>, cols: usize, adjoint: bool) {
        assert_eq!(x.len(), cols * self.dim, "buffer size");
        let mut scratch = Vec::new();
        if adjoint {
            for f in &self.factors {
                f.apply(x, &mut scratch, cols, true);
            }
        } else {
            for f in self.factors.iter().rev() {
                f.apply(x, &mut scratch, cols, false);
            }
        }
    }

    /// Dense matrix of the product.
    pub fn materialize(&self, settings: &Settings) -> Result<ComplexMatrix<T>> {
        settings.check_dim(self.dim)?;
        let d = self.dim;
        let mut x = identity_columns(d, 0, d);
        self.apply(&mut x, d, false);
        Ok(ComplexMatrix::wrap(nalgebra::DMatrix::from_vec(d, d, x)))
    }

    /// Sum over factors of the core unitarity residuals.
    pub fn factor_residual(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| match &f.core {
                Core::Dense(m) => m.unitary_residual(),
                Core::Diagonal(d) => d
                    .iter()
                    .map(|z| (abs(*z).as_f64() - 1.0).abs())
                    .fold(0.0, f64::max),
            })
            .sum()
    }

    /// `max_i ||U* U e_i - e_i||_2` over all `dim` standard basis vectors,
    /// processed in batches of `batch` columns.
    pub fn unitarity_residual(&self, batch: usize) -> f64 {
        let d = self.dim;
        let batch = batch.clamp(1, d);
        let mut worst = 0.0f64;
        let mut start = 0;
        while start < d {
            let cols = batch.min(d - start);
            let mut x = identity_columns(d, start, cols);
            self.apply(&mut x, cols, false);
            self.apply(&mut x, cols, true);
            for col in 0..cols {
                let v = &x[col * d..(col + 1) * d];
                let mut s = 0.0;
                for (i, z) in v.iter().enumerate() {
                    let target = if i == start + col { 1.0 } else { 0.0 };
                    let re = z.re.as_f64() - target;
                    let im = z.im.as_f64();
                    s += re * re + im * im;
                }
                worst = worst.max(s.sqrt());
            }
            start += cols;
        }
        worst
    }
}

fn identity_columns<T: Real>(d: usize, start: usize, cols: usize) -> Vec<Complex<T>> {
    let mut x = vec![czero::<T>(); d * cols];
    for col in 0..cols {
        x[col * d + start + col] = cone();
    }
    x
}

/// The spin-model tower unitaries `u_0, ..., u_K` of a Hadamard matrix.
///
/// With `w = u / sqrt(n)`, `u_0 = w`, `u_{2k+1} = (I_n ⊗ u_{2k})(D_u ⊗ I_{n^k})`
/// and `u_{2k} = u_{2k-1}(w ⊗ I_{n^k})`, where
/// `D_u = sqrt(n) Σ conj(w_ij) E_ii ⊗ E_jj` has unimodular diagonal entries.
/// `u_j` acts on `C^{n^{⌈j/2⌉+1}}`.
#[derive(Clone, Debug)]
pub struct SpinTower<T: Real> {
    hadamard: HadamardMatrix<T>,
    d_u: ComplexMatrix<T>,
    stages: Vec<StageUnitary<T>>,
}

impl<T: Real> SpinTower<T> {
    pub fn new(u: &HadamardMatrix<T>, stages: usize, settings: &Settings) -> Result<Self> {
        let u = HadamardMatrix::new(u.matrix.clone(), settings.tolerance)?;
        let n = u.order();
        for j in 0..=stages {
            let d = stage_dim(n, j).ok_or(Error::DimensionCap {
                requested: usize::MAX,
                cap: settings.dimension_cap,
            })?;
            settings.check_dim(d)?;
        }
        let w = Arc::new(u.normalized());
        let diag: Vec<Complex<T>> = (0..n * n)
            .map(|idx| u.matrix.get(idx / n, idx % n).conj())
            .collect();
        let d_u = ComplexMatrix::diagonal(&diag);
        let diag = Arc::new(diag);

        let mut out: Vec<StageUnitary<T>> = Vec::with_capacity(stages + 1);
        out.push(StageUnitary {
            dim: n,
            factors: vec![Factor {
                left: 1,
                core: Core::Dense(w.clone()),
                right: 1,
            }],
        });
        for j in 1..=stages {
            let prev = &out[j - 1];
            let k = (j - 1) / 2;
            let pow = n.pow(k as u32);
            let stage = if j % 2 == 1 {
                let mut factors: Vec<Factor<T>> = prev
                    .factors
                    .iter()
                    .map(|f| Factor {
                        left: f.left * n,
                        core: f.core.clone(),
                        right: f.right,
                    })
                    .collect();
                factors.push(Factor {
                    left: 1,
                    core: Core::Diagonal(diag.clone()),
                    right: pow,
                });
                StageUnitary {
                    dim: prev.dim * n,
                    factors,
                }
            } else {
                let pow = n.pow((j / 2) as u32);
                let mut factors = prev.factors.clone();
                factors.push(Factor {
                    left: 1,
                    core: Core::Dense(w.clone()),
                    right: pow,
                });
                StageUnitary {
                    dim: prev.dim,
                    factors,
                }
            };
            debug_assert!(stage.factors.iter().all(|f| f.dim() == stage.dim));
            out.push(stage);
        }
        Ok(Self {
            hadamard: u,
            d_u,
            stages: out,
        })
    }

    pub fn hadamard(&self) -> &HadamardMatrix<T> {
        &self.hadamard
    }

    pub fn d_u(&self) -> &ComplexMatrix<T> {
        &self.d_u
    }

    pub fn stages(&self) -> &[StageUnitary<T>] {
        &self.stages
    }

    pub fn stage(&self, j: usize) -> Option<&StageUnitary<T>> {
        self.stages.get(j)
    }

    /// Dense re-check of the defining recursion at stage `j >= 1`.
    pub fn recursion_residual(&self, j: usize, settings: &Settings) -> Result<f64> {
        if j == 0 || j >= self.stages.len() {
            return Err(Error::InvalidParameter(format!("no recursion step at stage {j}")));
        }
        let n = self.hadamard.order();
        let cur = self.stages[j].materialize(settings)?;
        let prev = self.stages[j - 1].materialize(settings)?;
        let expect = if j % 2 == 1 {
            let k = (j - 1) / 2;
            let lhs = ComplexMatrix::identity(n).kron(&prev);
            let rhs = self.d_u.kron(&ComplexMatrix::identity(n.pow(k as u32)));
            &lhs * &rhs
        } else {
            let k = j / 2;
            let rhs = self
                .hadamard
                .normalized()
                .kron(&ComplexMatrix::identity(n.pow(k as u32)));
            &prev * &rhs
        };
        Ok((&cur - &expect).frobenius().as_f64())
    }

    /// `max_i ||(u_j* u_j - 1) e_i||_2` for every stage.
    ///
    /// The products `u_j* u_j` are evaluated from the inside out along the
    /// recursion, so `u_{2k+1}* u_{2k+1} = B* (1 ⊗ u_{2k}* u_{2k}) B` with
    /// `B = D_u ⊗ 1` and `u_{2k}* u_{2k} = C* (u_{2k-1}* u_{2k-1}) C` with
    /// `C = w ⊗ 1`; each step costs `O(n dim^2)`.
    pub fn gram_residuals(&self) -> Vec<f64> {
        let n = self.hadamard.order();
        let w = self.hadamard.normalized();
        let diag: Vec<Complex<T>> = (0..n * n).map(|i| self.d_u.get(i, i)).collect();
        let mut gram = Gram::from_matrix(&(&w.adjoint() * &w));
        let mut out = vec![gram.residual()];
        for j in 1..self.stages.len() {
            if j % 2 == 1 {
                let pow = n.pow(((j - 1) / 2) as u32);
                gram = gram.lift(n);
                gram.conjugate_diagonal(|idx| diag[idx / pow]);
            } else {
                let pow = n.pow((j / 2) as u32);
                gram.conjugate_leading(&w, pow);
            }
            out.push(gram.residual());
        }
        out
    }

    /// Unitarity of `D_u` and of every stage; stages of dimension at most
    /// `dense_limit` are also checked by applying `u_j* u_j` to every basis
    /// vector and by re-evaluating the defining recursion densely.
    pub fn verify(&self, settings: &Settings, dense_limit: usize) -> Result<Report> {
        let mut report = Report::new("spin tower", settings.tolerance)
            .bound("D_u unitarity", self.d_u.unitary_residual());
        for (j, g) in self.gram_residuals().into_iter().enumerate() {
            report = report.bound(&format!("u_{j:02} unitarity"), g);
            let s = &self.stages[j];
            if s.dim <= dense_limit {
                report = report.bound(&format!("u_{j:02} applied unitarity"), s.unitarity_residual(4));
                if j > 0 {
                    report = report.bound(
                        &format!("u_{j:02} recursion"),
                        self.recursion_residual(j, settings)?,
                    );
                }
            }
        }
        Ok(report)
    }
}

/// Dense column-major Gram matrix used by [`SpinTower::gram_residuals`].
struct Gram<T: Real> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Gram<T> {
    fn from_matrix(m: &ComplexMatrix<T>) -> Self {
        Self {
            dim: m.dim(),
            data: m.entries().to_vec(),
        }
    }

    /// `1_n ⊗ self`.
    fn lift(&self, n: usize) -> Self {
        let d = self.dim;
        let big = n * d;
        let mut data = vec![czero::<T>(); big * big];
        for blk in 0..n {
            for col in 0..d {
                let dst = (blk * d + col) * big + blk * d;
                data[dst..dst + d].copy_from_slice(&self.data[col * d..(col + 1) * d]);
            }
        }
        Self { dim: big, data }
    }

    /// `self -> B* self B` for the diagonal `B` with entries `b(idx)`.
    fn conjugate_diagonal(&mut self, b: impl Fn(usize) -> Complex<T>) {
        let d = self.dim;
        let entries: Vec<Complex<T>> = (0..d).map(b).collect();
        for (col, bc) in entries.iter().enumerate() {
            for (z, br) in self.data[col * d..(col + 1) * d].iter_mut().zip(&entries) {
                *z = br.conj() * *z * *bc;
            }
        }
    }

    /// `self -> C* self C` for `C = w ⊗ 1_pow`.
    fn conjugate_leading(&mut self, w: &ComplexMatrix<T>, pow: usize) {
        let d = self.dim;
        let n = w.dim();
        debug_assert_eq!(n * pow, d);
        // right multiplication: column (β, t) <- Σ_γ column (γ, t) w_γβ
        let mut h = vec![czero::<T>(); d * d];
        for beta in 0..n {
            for t in 0..pow {
                let dst = (beta * pow + t) * d;
                for gamma in 0..n {
                    let a = w.get(gamma, beta);
                    let src = (gamma * pow + t) * d;
                    for r in 0..d {
                        h[dst + r] += a * self.data[src + r];
                    }
                }
            }
        }
        // left multiplication by C*: row (α, s) <- Σ_γ conj(w_γα) row (γ, s)
        let coeffs: Vec<Complex<T>> = (0..n * n).map(|i| w.get(i % n, i / n).conj()).collect();
        for col in 0..d {
            let column = &h[col * d..(col + 1) * d];
            let out = &mut self.data[col * d..(col + 1) * d];
            for alpha in 0..n {
                let o = &mut out[alpha * pow..(alpha + 1) * pow];
                o.iter_mut().for_each(|z| *z = czero());
                for gamma in 0..n {
                    let a = coeffs[alpha * n + gamma];
                    for (z, v) in o.iter_mut().zip(&column[gamma * pow..(gamma + 1) * pow]) {
                        *z += a * *v;
                    }
                }
            }
        }
    }

    /// `max_i ||(self - 1) e_i||_2`.
    fn residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for col in 0..d {
            let mut s = 0.0;
            for (r, z) in self.data[col * d..(col + 1) * d].iter().enumerate() {
                let re = z.re.as_f64() - if r == col { 1.0 } else { 0.0 };
                let im = z.im.as_f64();
                s += re * re + im * im;
            }
            worst = worst.max(s.sqrt());
        }
        worst
    }
}

/// `n^{⌈j/2⌉+1}`, or `None` on overflow.
pub fn stage_dim(n: usize, j: usize) -> Option<usize> {
    n.checked_pow((j.div_ceil(2) + 1) as u32)
}

/// Largest stage index whose unitary fits under `cap`.
pub fn max_stage_under_cap(n: usize, cap: usize) -> Option<usize> {
    if n < 1 || n > cap {
        return None;
    }
    if n == 1 {
        return Some(usize::MAX);
    }
    let mut j = 0;
    while stage_dim(n, j + 1).is_some_and(|d| d <= cap) {
        j += 1;
    }
    Some(j)
}

/// Character diagonals `diag(ω^{jk})_k` for `j = 0..n`.
pub fn characters<T: Real>(n: usize) -> Vec<ComplexMatrix<T>> {
    (0..n)
        .map(|j| {
            let d: Vec<Complex<T>> = (0..n).map(|k| root_of_unity((j * k) as i64, n)).collect();
            ComplexMatrix::diagonal(&d)
        })
        .collect()
}

/// Weyl unitaries `X^a Z^b` in row-major order over `(a, b)`, with `X` the
/// cyclic shift and `Z = diag(ω^k)`.
pub fn weyl_unitaries<T: Real>(n: usize) -> Vec<ComplexMatrix<T>> {
    let x = ComplexMatrix::<T>::shift(n);
    let zd: Vec<Complex<T>> = (0..n).map(|k| root_of_unity(k as i64, n)).collect();
    let z = ComplexMatrix::diagonal(&zd);
    let mut out = Vec::with_capacity(n * n);
    let mut xa = ComplexMatrix::identity(n);
    for _ in 0..n {
        let mut zb = ComplexMatrix::identity(n);
        for _ in 0..n {
            out.push(&xa * &zb);
            zb = &zb * &z;
        }
        xa = &xa * &x;
    }
    out
}

/// A diagonal unitary with the given phases (in turns).
pub fn phase_diagonal<T: Real>(turns: &[f64]) -> ComplexMatrix<T> {
    let d: Vec<Complex<T>> = turns
        .iter()
        .map(|t| {
            let a = std::f64::consts::TAU * t;
            c(a.cos(), a.sin())
        })
        .collect();
    ComplexMatrix::diagonal(&d)
}

/// A real rotation in `M_2`.
pub fn rotation<T: Real>(theta: f64) -> ComplexMatrix<T> {
    let (s, co) = theta.sin_cos();
    ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) | (1, 1) => creal(T::lit(co)),
        (0, 1) => creal(T::lit(-s)),
        _ => creal(T::lit(s)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    fn s() -> Settings {
        Settings::default()
    }

    #[test]
    fn fourier_small_orders() {
        let f1 = HadamardMatrix::<f64>::fourier(1).unwrap();
        assert_eq!(f1.matrix().get(0, 0), c(1.0, 0.0));
        let f2 = HadamardMatrix::<f64>::fourier(2).unwrap();
        let expect = M::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap();
        assert!((f2.matrix() - &expect).frobenius() < 1e-15);
        for n in 1..=9 {
            let f = HadamardMatrix::<f64>::fourier(n).unwrap();
            assert!(verify_hadamard(f.matrix(), 1e-10).pass);
            assert!(f.normalized().is_unitary(1e-12));
        }
        assert!(HadamardMatrix::<f64>::fourier(0).is_err());
    }

    #[test]
    fn non_hadamard_rejected() {
        assert!(!verify_hadamard(&M::identity(2), 1e-10).pass);
        let ones = M::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert!(!verify_hadamard(&ones, 1e-10).pass);
        assert!(HadamardMatrix::new(ones, 1e-10).is_err());
    }

    #[test]
    fn tensor_of_hadamards() {
        let f = HadamardMatrix::<f64>::fourier(2).unwrap();
        let g = HadamardMatrix::<f64>::fourier(3).unwrap();
        assert!(verify_hadamard(f.tensor(&g).matrix(), 1e-10).pass);
    }

    #[test]
    fn block_transpose_rules() {
        let x = M::from_fn(2, |i, j| c(i as f64 + 1.0, j as f64 * 2.0 - 1.0));
        let y = M::from_fn(3, |i, j| c((i * 3 + j) as f64, 0.5));
        let bt = block_transpose(&x.kron(&y), 2, 3).unwrap();
        assert!((&bt - &x.transpose().kron(&y)).frobenius() < 1e-14);
        let id = M::identity(6);
        assert!((&block_transpose(&id, 2, 3).unwrap() - &id).frobenius() < 1e-15);
        assert!(block_transpose(&id, 4, 2).is_err());
    }

    #[test]
    fn biunitary_examples() {
        let tol = 1e-10;
        assert!(verify_biunitary(&M::identity(4), 2, 2, tol).unwrap().pass);
        let u = HadamardMatrix::<f64>::fourier(2).unwrap().normalized();
        let v = rotation::<f64>(0.3);
        assert!(BiUnitaryMatrix::tensor(&u, &v, tol).is_ok());
        let flip = flip_counterexample::<f64>();
        assert!(flip.is_unitary(tol));
        let r = verify_biunitary(&flip, 2, 2, tol).unwrap();
        assert!(!r.pass);
        assert!(BiUnitaryMatrix::new(flip, 2, 2, tol).is_err());
    }

    #[test]
    fn spin_square_rejects_identity() {
        let u = HadamardMatrix {
            matrix: M::identity(2),
        };
        assert!(matches!(spin_square(&u, &s()), Err(Error::NotHadamard(_))));
    }

    #[test]
    fn tower_dimensions_and_recursion() {
        let f = HadamardMatrix::<f64>::fourier(2).unwrap();
        let tower = SpinTower::new(&f, 4, &s()).unwrap();
        let dims: Vec<usize> = tower.stages().iter().map(|s| s.dim()).collect();
        assert_eq!(dims, vec![2, 4, 4, 8, 8]);
        let report = tower.verify(&s(), 64).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(tower.d_u().is_unitary(1e-12));
        // stage 0 is the normalized matrix itself
        let u0 = tower.stages()[0].materialize(&s()).unwrap();
        assert!((&u0 - &f.normalized()).frobenius() < 1e-15);
    }

    #[test]
    fn tower_respects_cap() {
        let f = HadamardMatrix::<f64>::fourier(3).unwrap();
        let settings = s().with_cap(27);
        assert!(SpinTower::new(&f, 4, &settings).is_ok());
        assert!(matches!(
            SpinTower::new(&f, 5, &settings),
            Err(Error::DimensionCap { .. })
        ));
        assert_eq!(max_stage_under_cap(3, 27), Some(4));
        assert_eq!(max_stage_under_cap(2, 4096), Some(22));
    }

    #[test]
    fn weyl_and_characters_are_unitary() {
        for w in weyl_unitaries::<f64>(3) {
            assert!(w.is_unitary(1e-12));
        }
        for ch in characters::<f64>(4) {
            assert!(ch.is_unitary(1e-12));
        }
    }
}
