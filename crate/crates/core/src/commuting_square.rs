//! Commuting squares: `E_P E_Q = E_Q E_P = E_N` on `M`, non-degeneracy, and
//! the transfer of orthonormal bases across a commuting square.

use crate::algebra::{span_dimension, StarSubalgebra, TraceForm};
use crate::matrix::ComplexMatrix;
use crate::pimsner_popa::{verify_basis, BasisCandidate};
use crate::report::Report;
use crate::scalar::Real;
use crate::{Error, Result, Settings};

/// `N ⊂ P, Q ⊂ M` inside one ambient `M_d` with the normalized trace.
#[derive(Clone, Debug)]
pub struct QuadrupleOfAlgebras<T: Real> {
    pub n: StarSubalgebra<T>,
    pub p: StarSubalgebra<T>,
    pub q: StarSubalgebra<T>,
    pub m: StarSubalgebra<T>,
    pub trace: TraceForm,
}

impl<T: Real> QuadrupleOfAlgebras<T> {
    /// Checks the four containments `N ⊂ P`, `N ⊂ Q`, `P ⊂ M`, `Q ⊂ M`.
    pub fn new(
        n: StarSubalgebra<T>,
        p: StarSubalgebra<T>,
        q: StarSubalgebra<T>,
        m: StarSubalgebra<T>,
        settings: &Settings,
    ) -> Result<Self> {
        let d = m.ambient_dim();
        let trace = TraceForm::new(d)?;
        let pairs = [("N", &n, "P", &p), ("N", &n, "Q", &q), ("P", &p, "M", &m), ("Q", &q, "M", &m)];
        for (small_name, small, big_name, big) in pairs {
            let residual = big.inclusion_residual(small)?;
            if residual >= settings.tolerance {
                return Err(Error::NotContained {
                    what: small_name.into(),
                    container: big_name.into(),
                    residual,
                });
            }
        }
        Ok(Self { n, p, q, m, trace })
    }

    pub fn ambient_dim(&self) -> usize {
        self.trace.ambient_dim
    }

    /// Evaluates `E_P E_Q - E_N` and `E_Q E_P - E_N` on every basis element of
    /// `M`; the report also records which basis element was worst.
    pub fn is_commuting_square(&self, tol: f64) -> Result<Report> {
        let mut pq = 0.0f64;
        let mut qp = 0.0f64;
        let mut worst = (0usize, 0.0f64);
        for (idx, x) in self.m.basis().iter().enumerate() {
            let en = self.n.expectation(x)?;
            let a = (&self.p.expectation(&self.q.expectation(x)?)? - &en).frobenius().as_f64();
            let b = (&self.q.expectation(&self.p.expectation(x)?)? - &en).frobenius().as_f64();
            pq = pq.max(a);
            qp = qp.max(b);
            if a.max(b) > worst.1 {
                worst = (idx, a.max(b));
            }
        }
        Ok(Report::new("commuting square", tol)
            .bound("E_P E_Q - E_N", pq)
            .bound("E_Q E_P - E_N", qp)
            .info("worst basis element", worst.0 as f64))
    }

    /// Dimension of `span{p q}` over the bases of `P` and `Q`, compared with
    /// `dim M`.
    pub fn is_nondegenerate(&self, settings: &Settings) -> Result<Report> {
        let products: Vec<ComplexMatrix<T>> = self
            .p
            .basis()
            .iter()
            .flat_map(|a| self.q.basis().iter().map(move |b| a * b))
            .collect();
        let span = span_dimension(&products, self.ambient_dim(), settings)?;
        let target = self.m.dim();
        let mut report = Report::new("non-degenerate", settings.tolerance)
            .info("span dimension", span as f64)
            .info("dim M", target as f64);
        report.pass = span == target;
        Ok(report)
    }

    /// Checks that an orthonormal basis of `P` over `N` is an orthonormal
    /// basis of `M` over `Q`.
    pub fn basis_transfer_check(&self, elements: &[ComplexMatrix<T>], settings: &Settings) -> Result<Report> {
        let square = self.is_commuting_square(settings.tolerance)?;
        if !square.pass {
            return Err(Error::Precondition(format!(
                "quadruple is not a commuting square (residual {:.3e})",
                square.worst()
            )));
        }
        let lower = BasisCandidate::new(elements.to_vec(), self.n.clone(), self.p.clone());
        let flags = verify_basis(&lower, settings)?;
        if !(flags.right && flags.orthonormal) {
            return Err(Error::Precondition(format!(
                "not an orthonormal basis of P over N (residual {:.3e})",
                flags.report.worst()
            )));
        }
        let upper = BasisCandidate::new(elements.to_vec(), self.q.clone(), self.m.clone());
        let flags = verify_basis(&upper, settings)?;
        let mut report = Report::new("basis transfer", settings.tolerance);
        for key in ["right completeness", "orthonormality"] {
            report = report.bound(key, flags.report.residuals[key]);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::{characters, spin_square, HadamardMatrix};

    type A = StarSubalgebra<f64>;

    #[test]
    fn equal_middle_algebras_do_not_commute() {
        let s = Settings::default();
        let q = QuadrupleOfAlgebras::new(A::scalars(2), A::diagonal(2), A::diagonal(2), A::full(2), &s)
            .unwrap();
        assert!(!q.is_commuting_square(1e-10).unwrap().pass);
        let nd = q.is_nondegenerate(&s).unwrap();
        assert!(!nd.pass);
        assert_eq!(nd.residuals["span dimension"], 2.0);
    }

    #[test]
    fn p_equal_m_needs_q_equal_n() {
        let s = Settings::default();
        let q = QuadrupleOfAlgebras::new(A::diagonal(3), A::full(3), A::diagonal(3), A::full(3), &s)
            .unwrap();
        assert!(q.is_commuting_square(1e-10).unwrap().pass);
        let q = QuadrupleOfAlgebras::new(A::scalars(3), A::full(3), A::diagonal(3), A::full(3), &s)
            .unwrap();
        assert!(!q.is_commuting_square(1e-10).unwrap().pass);
    }

    #[test]
    fn containment_violation_is_reported() {
        let s = Settings::default();
        let r = QuadrupleOfAlgebras::new(A::full(2), A::diagonal(2), A::diagonal(2), A::full(2), &s);
        assert!(matches!(r, Err(Error::NotContained { .. })));
    }

    #[test]
    fn character_basis_transfers_in_spin_square() {
        let s = Settings::default();
        for n in 2..=5 {
            let u = HadamardMatrix::<f64>::fourier(n).unwrap();
            let sq = spin_square(&u, &s).unwrap();
            let r = sq.basis_transfer_check(&characters(n), &s).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn trivial_square_transfers_unit() {
        let s = Settings::default();
        let q = QuadrupleOfAlgebras::new(A::scalars(2), A::scalars(2), A::scalars(2), A::scalars(2), &s)
            .unwrap();
        let one = vec![ComplexMatrix::identity(2)];
        assert!(q.basis_transfer_check(&one, &s).unwrap().pass);
    }

    #[test]
    fn non_commuting_square_is_a_precondition_failure() {
        let s = Settings::default();
        let q = QuadrupleOfAlgebras::new(A::scalars(2), A::diagonal(2), A::diagonal(2), A::full(2), &s)
            .unwrap();
        assert!(matches!(
            q.basis_transfer_check(&characters(2), &s),
            Err(Error::Precondition(_))
        ));
    }
}
