//! Pimsner-Popa bases: verification of every flavor, the `μ_j` unitary basis
//! of the basic construction, unitary orthonormal bases for `C ⊂ A` with `A`
//! simple or abelian, and the `Σ m* m` witness for `d_ob`.

use crate::algebra::{spectral_projections, BasicConstruction, StarSubalgebra};
use crate::hadamard::weyl_unitaries;
use crate::matrix::ComplexMatrix;
use crate::report::Report;
use crate::scalar::{c, cone, creal, czero, root_of_unity, Complex, Real};
use crate::{Error, Result, Settings};

/// A finite family of elements of `ambient`, to be tested as a basis over
/// `sub`.
///
/// When `density` is set, the conditional expectation onto `sub` preserves
/// the trace `x -> tr(density x)` instead of the normalized ambient trace.
#[derive(Clone, Debug)]
pub struct BasisCandidate<T: Real> {
    pub elements: Vec<ComplexMatrix<T>>,
    pub sub: StarSubalgebra<T>,
    pub ambient: StarSubalgebra<T>,
    pub density: Option<ComplexMatrix<T>>,
}

/// Verified properties of a [`BasisCandidate`].
#[derive(Clone, Debug)]
pub struct BasisFlags {
    /// `x = Σ λ_j E(λ_j* x)` on the ambient basis.
    pub right: bool,
    /// `x = Σ λ_j* E(λ_j x)`: the adjoints form a right basis.
    pub left: bool,
    /// `E(λ_i* λ_j) = δ_ij 1`.
    pub orthonormal: bool,
    /// `E(λ_i λ_j*) = δ_ij 1`.
    pub left_orthonormal: bool,
    /// Orthonormal basis whose adjoints are an orthonormal basis too.
    pub two_sided: bool,
    pub unitary: bool,
    pub report: Report,
}

impl<T: Real> BasisCandidate<T> {
    pub fn new(elements: Vec<ComplexMatrix<T>>, sub: StarSubalgebra<T>, ambient: StarSubalgebra<T>) -> Self {
        Self {
            elements,
            sub,
            ambient,
            density: None,
        }
    }

    pub fn with_density(mut self, density: ComplexMatrix<T>) -> Self {
        self.density = Some(density);
        self
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// The conditional expectation onto `sub` used by every check.
    pub fn expectation(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        match &self.density {
            Some(rho) => self.sub.expectation_weighted(x, rho),
            None => self.sub.expectation(x),
        }
    }
}

fn orthonormality_residual<T: Real>(
    b: &BasisCandidate<T>,
    product: impl Fn(&ComplexMatrix<T>, &ComplexMatrix<T>) -> ComplexMatrix<T>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, a) in b.elements.iter().enumerate() {
        for (j, bb) in b.elements.iter().enumerate() {
            let e = b.expectation(&product(a, bb))?;
            let target = if i == j { cone() } else { czero() };
            worst = worst.max(e.distance_to_scalar(target));
        }
    }
    Ok(worst)
}

/// Checks every basis flavor; each flag is true iff its residual is below
/// the tolerance.
pub fn verify_basis<T: Real>(b: &BasisCandidate<T>, settings: &Settings) -> Result<BasisFlags> {
    let tol = settings.tolerance;
    for (idx, e) in b.elements.iter().enumerate() {
        let r = b.ambient.containment_residual(e)?;
        if r >= tol {
            return Err(Error::NotContained {
                what: format!("basis element {idx}"),
                container: "ambient algebra".into(),
                residual: r,
            });
        }
    }
    let adjoints: Vec<ComplexMatrix<T>> = b.elements.iter().map(ComplexMatrix::adjoint).collect();
    let mut right = 0.0f64;
    let mut left = 0.0f64;
    for x in b.ambient.basis() {
        let mut rx = ComplexMatrix::zeros(x.dim());
        let mut lx = ComplexMatrix::zeros(x.dim());
        for (l, la) in b.elements.iter().zip(&adjoints) {
            rx = &rx + &(l * &b.expectation(&(la * x))?);
            lx = &lx + &(la * &b.expectation(&(l * x))?);
        }
        right = right.max((x - &rx).frobenius().as_f64());
        left = left.max((x - &lx).frobenius().as_f64());
    }
    let on = orthonormality_residual(b, |a, bb| &a.adjoint() * bb)?;
    let lon = orthonormality_residual(b, |a, bb| a * &bb.adjoint())?;
    let unitary = b
        .elements
        .iter()
        .map(ComplexMatrix::unitary_residual)
        .fold(0.0, f64::max);
    let report = Report::new("basis", tol)
        .info("right completeness", right)
        .info("left completeness", left)
        .info("orthonormality", on)
        .info("left orthonormality", lon)
        .info("unitarity", unitary);
    let flags = BasisFlags {
        right: right < tol,
        left: left < tol,
        orthonormal: on < tol,
        left_orthonormal: lon < tol,
        two_sided: right < tol && left < tol && on < tol && lon < tol,
        unitary: !b.elements.is_empty() && unitary < tol,
        report,
    };
    Ok(flags)
}

/// The unitaries `μ_j = Σ_k ω^{jk} λ_k e_1 λ_k*` together with their checks.
#[derive(Clone, Debug)]
pub struct MuConstruction<T: Real> {
    pub unitaries: Vec<ComplexMatrix<T>>,
    pub report: Report,
}

fn basis_projections<T: Real>(
    b: &BasisCandidate<T>,
    bc: &BasicConstruction<T>,
) -> Result<Vec<ComplexMatrix<T>>> {
    let e = &bc.jones_projection;
    b.elements
        .iter()
        .map(|l| {
            let rl = bc.represent(l)?;
            Ok(&(&rl * e) * &rl.adjoint())
        })
        .collect()
}

fn partition_check<T: Real>(projections: &[ComplexMatrix<T>], dim: usize, tol: f64) -> Result<f64> {
    let mut total = ComplexMatrix::zeros(dim);
    for p in projections {
        total = &total + p;
    }
    let residual = total.distance_to_scalar(cone());
    if residual >= tol {
        return Err(Error::NotABasis { residual });
    }
    Ok(residual)
}

/// Builds a unitary orthonormal basis of the basic construction over `N`
/// from a two-sided orthonormal basis of `M` over `N`.
///
/// `bc` must be the basic construction of `b.sub ⊂ b.ambient`. Orthonormality
/// is measured with the expectation onto the represented copy of `N`, which
/// preserves the normalized trace on `L^2(M)`.
pub fn mu_unitaries<T: Real>(
    b: &BasisCandidate<T>,
    bc: &BasicConstruction<T>,
    settings: &Settings,
) -> Result<MuConstruction<T>> {
    let tol = settings.tolerance;
    let flags = verify_basis(b, settings)?;
    let projections = basis_projections(b, bc)?;
    let m = bc.hilbert_dim();
    let partition = partition_check(&projections, m, tol)?;
    if !(flags.two_sided && flags.orthonormal) {
        return Err(Error::Precondition(format!(
            "basis is not two-sided orthonormal (worst residual {:.3e})",
            flags.report.worst()
        )));
    }
    let n = b.len();
    let mus: Vec<ComplexMatrix<T>> = (0..n)
        .map(|j| {
            let mut mu = ComplexMatrix::zeros(m);
            for (k, p) in projections.iter().enumerate() {
                mu.axpy(root_of_unity((j * k) as i64, n), p);
            }
            mu
        })
        .collect();

    let unitarity = mus.iter().map(ComplexMatrix::unitary_residual).fold(0.0, f64::max);
    let tower = mus
        .iter()
        .map(|mu| bc.tower.containment_residual(mu))
        .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))?;
    let mut orth = 0.0f64;
    let mut identity = 0.0f64;
    for (s, ms) in mus.iter().enumerate() {
        let msa = ms.adjoint();
        for (t, mt) in mus.iter().enumerate() {
            let prod = &msa * mt;
            let e = bc.represented_small.expectation(&prod)?;
            let target = if s == t { cone() } else { czero() };
            orth = orth.max(e.distance_to_scalar(target));
            let mut rhs = ComplexMatrix::zeros(m);
            for (u, p) in projections.iter().enumerate() {
                let k = ((t as i64 - s as i64) * u as i64).rem_euclid(n as i64);
                rhs.axpy(root_of_unity(k, n), p);
            }
            identity = identity.max((&prod - &rhs).frobenius().as_f64());
        }
    }
    let report = Report::new("mu unitaries", tol)
        .bound("partition of unity", partition)
        .bound("unitarity", unitarity)
        .bound("tower containment", tower)
        .bound("E_N orthonormality", orth)
        .bound("product identity", identity);
    Ok(MuConstruction {
        unitaries: mus,
        report,
    })
}

/// For a unitary basis `u_1..u_n` of `M` over `N`, the partial sums
/// `Σ_{i≤m} u_i e_1 u_i*` are projections with `E_M`-value `m/n`.
pub fn partial_sum_projections<T: Real>(
    b: &BasisCandidate<T>,
    bc: &BasicConstruction<T>,
    settings: &Settings,
) -> Result<Report> {
    let projections = basis_projections(b, bc)?;
    let n = projections.len();
    let dim = bc.hilbert_dim();
    let mut report = Report::new("partial sums", settings.tolerance);
    let mut q = ComplexMatrix::zeros(dim);
    for (i, p) in projections.iter().enumerate() {
        q = &q + p;
        let m = i + 1;
        let e = bc.represented_big.expectation(&q)?;
        report = report
            .bound(&format!("m={m} projection"), q.projection_residual())
            .bound(
                &format!("m={m} expectation"),
                e.distance_to_scalar(c(m as f64 / n as f64, 0.0)),
            );
    }
    Ok(report)
}

/// A unitary orthonormal basis of `A` over `C 1` for the Markov trace of
/// `C ⊂ A`, when `A` is simple (Weyl unitaries) or abelian (characters).
pub fn unitary_onb_scalar_inclusion<T: Real>(
    a: &StarSubalgebra<T>,
    settings: &Settings,
) -> Result<BasisCandidate<T>> {
    let d = a.ambient_dim();
    let center = a.center(settings)?;
    let scalars = StarSubalgebra::scalars(d);
    if center.dim() == a.dim() {
        let proj = a.minimal_projections_abelian(settings)?;
        let k = proj.len();
        let elements: Vec<ComplexMatrix<T>> = (0..k)
            .map(|j| {
                let mut x = ComplexMatrix::zeros(d);
                for (l, p) in proj.iter().enumerate() {
                    x.axpy(root_of_unity((j * l) as i64, k), p);
                }
                x
            })
            .collect();
        let ranks: Vec<f64> = proj.iter().map(|p| p.trace().re.as_f64() * d as f64).collect();
        let uniform = ranks.iter().all(|r| (r - ranks[0]).abs() < 0.5);
        let mut basis = BasisCandidate::new(elements, scalars, a.clone());
        if !uniform {
            let mut rho = ComplexMatrix::zeros(d);
            for (p, r) in proj.iter().zip(&ranks) {
                rho.axpy(creal(T::lit(d as f64 / (k as f64 * r))), p);
            }
            basis = basis.with_density(rho);
        }
        return Ok(basis);
    }
    if center.dim() != 1 {
        return Err(Error::OutOfScope(format!(
            "algebra with {}-dimensional center is neither simple nor abelian",
            center.dim()
        )));
    }
    let units = matrix_units(a, settings)?;
    let k = units.len();
    let weyl = weyl_unitaries::<T>(k);
    let elements = weyl
        .iter()
        .map(|w| {
            let mut x = ComplexMatrix::zeros(d);
            for i in 0..k {
                for j in 0..k {
                    let z = w.get(i, j);
                    if z != czero() {
                        x.axpy(z, &units[i][j]);
                    }
                }
            }
            x
        })
        .collect();
    Ok(BasisCandidate::new(elements, scalars, a.clone()))
}

/// A system of matrix units `E_ij` for a simple algebra `A ≅ M_k`.
fn matrix_units<T: Real>(a: &StarSubalgebra<T>, settings: &Settings) -> Result<Vec<Vec<ComplexMatrix<T>>>> {
    let d = a.ambient_dim();
    // a generic Hermitian element has simple spectrum in each irreducible
    // copy; an unlucky weight choice can merge two eigenvalues, so retry
    let mut found = None;
    let mut effective_dim = 0;
    for step in [0.754_877_666_246_692_7, std::f64::consts::SQRT_2 - 1.0, std::f64::consts::FRAC_1_PI] {
        let mut h = ComplexMatrix::zeros(d);
        for (i, b) in a.basis().iter().enumerate() {
            let w = ((i as f64 + 1.0) * step).fract() + 0.25;
            h.axpy(creal(T::lit(w)), &b.hermitian_part());
        }
        let p = spectral_projections(&h, settings)?;
        effective_dim = p.len() * p.len();
        if effective_dim == a.dim() {
            found = Some(p);
            break;
        }
    }
    let p = found.ok_or(Error::DegenerateBasis { effective_dim })?;
    let k = p.len();
    // generic element used to link the minimal projections
    let mut g = ComplexMatrix::zeros(d);
    for (i, b) in a.basis().iter().enumerate() {
        let w = ((i as f64 + 1.0) * 0.569_840_290_998_053_3).fract() + 0.25;
        g.axpy(c(w, 1.0 - w), b);
    }
    let mut first_row: Vec<ComplexMatrix<T>> = Vec::with_capacity(k);
    for pi in &p {
        let x = &(&p[0] * &g) * pi;
        // x = λ e_{1i} with e_{1i}* e_{1i} = p_i
        let scale = (x.inner(&x).re / pi.trace().re).sqrt();
        if scale.as_f64() < settings.tolerance {
            return Err(Error::DegenerateBasis { effective_dim: first_row.len() });
        }
        let mut e = x.scale_real(T::one() / scale);
        // fix the phase so that e_11 = p_1
        if first_row.is_empty() {
            let ph: Complex<T> = e.trace() / pi.trace();
            e = e.scale(ph.conj() / creal(crate::scalar::abs(ph)));
        }
        first_row.push(e);
    }
    let units = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| &first_row[i].adjoint() * &first_row[j])
                .collect()
        })
        .collect();
    Ok(units)
}

/// `||Σ m_j* m_j||`, an upper witness for `d_ob` of the inclusion.
pub fn d_ob_value<T: Real>(b: &BasisCandidate<T>, settings: &Settings) -> Result<f64> {
    let flags = verify_basis(b, settings)?;
    if !(flags.right && flags.orthonormal) {
        return Err(Error::Precondition(format!(
            "d_ob needs a right orthonormal basis (worst residual {:.3e})",
            flags.report.worst()
        )));
    }
    let d = b.ambient.ambient_dim();
    let mut total = ComplexMatrix::zeros(d);
    for m in &b.elements {
        total = &total + &(&m.adjoint() * m);
    }
    Ok(total.operator_norm().as_f64())
}

/// Powers `S^k`, `k = 0..n`, of the cyclic shift: a unitary two-sided
/// orthonormal basis of `M_n` over `Δ_n`.
pub fn shift_basis<T: Real>(n: usize) -> BasisCandidate<T> {
    let s = ComplexMatrix::<T>::shift(n);
    let mut elements = Vec::with_capacity(n);
    let mut p = ComplexMatrix::identity(n);
    for _ in 0..n {
        elements.push(p.clone());
        p = &p * &s;
    }
    BasisCandidate::new(elements, StarSubalgebra::diagonal(n), StarSubalgebra::full(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{basic_construction, TraceForm};

    type A = StarSubalgebra<f64>;

    fn s() -> Settings {
        Settings::default()
    }

    #[test]
    fn shift_basis_has_every_flag() {
        for n in 2..=4 {
            let f = verify_basis(&shift_basis::<f64>(n), &s()).unwrap();
            assert!(f.right && f.left && f.orthonormal && f.two_sided && f.unitary, "{f:?}");
        }
    }

    #[test]
    fn unit_alone_is_orthonormal_but_incomplete() {
        let b = BasisCandidate::new(vec![ComplexMatrix::<f64>::identity(2)], A::diagonal(2), A::full(2));
        let f = verify_basis(&b, &s()).unwrap();
        assert!(f.orthonormal);
        assert!(!f.right);
    }

    #[test]
    fn weyl_basis_over_scalars() {
        let b = BasisCandidate::new(weyl_unitaries::<f64>(3), A::scalars(3), A::full(3));
        let f = verify_basis(&b, &s()).unwrap();
        assert!(f.right && f.orthonormal && f.unitary && f.two_sided);
        assert!((d_ob_value(&b, &s()).unwrap() - 9.0).abs() < 1e-10);
    }

    #[test]
    fn element_outside_ambient() {
        let b = BasisCandidate::new(vec![ComplexMatrix::<f64>::shift(2)], A::scalars(2), A::diagonal(2));
        assert!(matches!(verify_basis(&b, &s()), Err(Error::NotContained { .. })));
    }

    #[test]
    fn mu_for_small_shift_bases() {
        for n in 2..=3 {
            let b = shift_basis::<f64>(n);
            let bc = basic_construction(&b.sub, &b.ambient, &TraceForm::new(n).unwrap(), &s()).unwrap();
            let mu = mu_unitaries(&b, &bc, &s()).unwrap();
            assert_eq!(mu.unitaries.len(), n);
            assert!(mu.report.pass, "{:?}", mu.report);
            // μ_0 is the identity by completeness
            assert!(mu.unitaries[0].distance_to_scalar(c(1.0, 0.0)) < 1e-10);
            assert!(partial_sum_projections(&b, &bc, &s()).unwrap().pass);
        }
    }

    #[test]
    fn mu_detects_missing_element() {
        let mut b = shift_basis::<f64>(3);
        b.elements.pop();
        let bc = basic_construction(&b.sub, &b.ambient, &TraceForm::new(3).unwrap(), &s()).unwrap();
        assert!(matches!(mu_unitaries(&b, &bc, &s()), Err(Error::NotABasis { .. })));
    }

    #[test]
    fn onb_for_diagonal_and_full() {
        let b = unitary_onb_scalar_inclusion(&A::diagonal(3), &s()).unwrap();
        assert_eq!(b.len(), 3);
        let f = verify_basis(&b, &s()).unwrap();
        assert!(f.unitary && f.orthonormal && f.two_sided);

        let b = unitary_onb_scalar_inclusion(&A::full(2), &s()).unwrap();
        assert_eq!(b.len(), 4);
        let f = verify_basis(&b, &s()).unwrap();
        assert!(f.unitary && f.orthonormal && f.two_sided, "{f:?}");
    }

    #[test]
    fn onb_for_simple_with_multiplicity() {
        // 1 ⊗ M_2 inside M_4
        let gens: Vec<ComplexMatrix<f64>> = A::full(2)
            .basis()
            .iter()
            .map(|x| ComplexMatrix::identity(2).kron(x))
            .collect();
        let a = A::generate(&gens, 4, &s()).unwrap();
        let b = unitary_onb_scalar_inclusion(&a, &s()).unwrap();
        let f = verify_basis(&b, &s()).unwrap();
        assert!(f.unitary && f.orthonormal && f.two_sided, "{f:?}");
    }

    #[test]
    fn onb_for_abelian_with_unequal_ranks() {
        // span{diag(1,0,0), diag(0,1,1)}: Markov trace gives each projection 1/2
        let a = A::generate(&[ComplexMatrix::unit(3, 0, 0)], 3, &s()).unwrap();
        let b = unitary_onb_scalar_inclusion(&a, &s()).unwrap();
        assert!(b.density.is_some());
        let f = verify_basis(&b, &s()).unwrap();
        assert!(f.unitary && f.orthonormal && f.two_sided, "{f:?}");
    }

    #[test]
    fn onb_rejects_mixed_algebra() {
        let a = A::generate(&[ComplexMatrix::unit(3, 0, 0), ComplexMatrix::unit(3, 1, 2)], 3, &s())
            .unwrap();
        assert!(matches!(
            unitary_onb_scalar_inclusion(&a, &s()),
            Err(Error::OutOfScope(_))
        ));
    }

    #[test]
    fn d_ob_of_shift_basis_is_index() {
        for n in 2..=5 {
            let v = d_ob_value(&shift_basis::<f64>(n), &s()).unwrap();
            assert!((v - n as f64).abs() < 1e-10);
        }
    }
}
