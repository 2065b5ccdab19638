//! Writing `β 1_N` as a sum of `r` projections: the exact feasibility test,
//! closed-form constructions, a numerical solver, a brute-force oracle for
//! `N <= 3`, and certificates for the grid-stage Λ elements built from such
//! sums.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::lambda::{band_contains, check_gamma_range, format_rational, sigma_membership, Model, SigmaWitness};
use crate::matrix::ComplexMatrix;
use crate::report::Report;
use crate::scalar::{c, creal, Complex, Real};
use crate::{Error, Rational, Result, Settings};

fn rational_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn small(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `N β` as an integer, if it is one.
fn total_rank(beta: &Rational, dim: usize) -> Option<usize> {
    let t = beta * small(dim as u64);
    if t.is_integer() && !t.is_negative() {
        t.to_integer().to_usize()
    } else {
        None
    }
}

/// Ranks of the `r` projections. Stored in non-increasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankProfile {
    ranks: Vec<usize>,
    dim: usize,
    beta: Rational,
}

impl RankProfile {
    pub fn new(mut ranks: Vec<usize>, dim: usize, beta: Rational) -> Result<Self> {
        if ranks.is_empty() || dim == 0 {
            return Err(Error::InvalidParameter("profile needs r >= 1 and N >= 1".into()));
        }
        if let Some(&bad) = ranks.iter().find(|&&k| k > dim) {
            return Err(Error::InvalidParameter(format!("rank {bad} exceeds dimension {dim}")));
        }
        let total = total_rank(&beta, dim).ok_or_else(|| {
            Error::InvalidParameter(format!("N β = {dim}·{} is not a nonnegative integer", format_rational(&beta)))
        })?;
        let sum: usize = ranks.iter().sum();
        if sum != total {
            return Err(Error::InvalidParameter(format!("ranks sum to {sum}, trace needs {total}")));
        }
        ranks.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { ranks, dim, beta })
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    /// Up to `limit` profiles, most balanced first: ordered by largest rank,
    /// then lexicographically.
    pub fn enumerate(r: usize, beta: &Rational, dim: usize, limit: usize) -> Result<Vec<Self>> {
        if r == 0 || dim == 0 {
            return Err(Error::InvalidParameter("r and N must be positive".into()));
        }
        let total = total_rank(beta, dim).ok_or_else(|| {
            Error::InvalidParameter(format!("N β = {dim}·{} is not a nonnegative integer", format_rational(beta)))
        })?;
        let mut out: Vec<Vec<usize>> = Vec::new();
        if total > r * dim {
            return Ok(Vec::new());
        }
        let lowest = total.div_ceil(r);
        for top in lowest..=dim.min(total) {
            let mut prefix = vec![top];
            fill(r - 1, total - top, top, &mut prefix, &mut out, limit);
            if out.len() >= limit {
                break;
            }
        }
        out.truncate(limit);
        Ok(out
            .into_iter()
            .map(|ranks| Self {
                ranks,
                dim,
                beta: beta.clone(),
            })
            .collect())
    }
}

// Non-increasing completions of `prefix` by `slots` ranks <= cap summing to
// `remaining`, in lexicographic order.
fn fill(slots: usize, remaining: usize, cap: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) {
    if out.len() >= limit {
        return;
    }
    if slots == 0 {
        if remaining == 0 {
            out.push(prefix.clone());
        }
        return;
    }
    if remaining > slots * cap {
        return;
    }
    let low = remaining.div_ceil(slots);
    for k in low..=cap.min(remaining) {
        prefix.push(k);
        fill(slots - 1, remaining - k, k, prefix, out, limit);
        prefix.pop();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleResiduals {
    /// Largest `||p² - p||`.
    pub idempotency: f64,
    /// Largest `||p* - p||`.
    pub hermiticity: f64,
    /// `||Σ p - β 1||`.
    pub sum: f64,
}

impl TupleResiduals {
    pub fn worst(&self) -> f64 {
        self.idempotency.max(self.hermiticity).max(self.sum)
    }
}

/// `r` projections on `C^N` meant to sum to `β 1`. Zero and identity
/// members are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionTuple<T: Real> {
    projections: Vec<ComplexMatrix<T>>,
    beta: Rational,
}

impl<T: Real> ProjectionTuple<T> {
    pub fn new(projections: Vec<ComplexMatrix<T>>, beta: Rational) -> Result<Self> {
        let first = projections
            .first()
            .ok_or_else(|| Error::InvalidParameter("a tuple needs at least one projection".into()))?;
        let dim = first.dim();
        if let Some(p) = projections.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        if beta.is_negative() {
            return Err(Error::InvalidParameter("β must be nonnegative".into()));
        }
        Ok(Self { projections, beta })
    }

    pub fn r(&self) -> usize {
        self.projections.len()
    }

    pub fn dim(&self) -> usize {
        self.projections[0].dim()
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    pub fn projections(&self) -> &[ComplexMatrix<T>] {
        &self.projections
    }

    pub fn into_projections(self) -> Vec<ComplexMatrix<T>> {
        self.projections
    }

    pub fn sum(&self) -> ComplexMatrix<T> {
        let mut s = ComplexMatrix::zeros(self.dim());
        for p in &self.projections {
            s = &s + p;
        }
        s
    }

    pub fn residuals(&self) -> TupleResiduals {
        let mut idempotency = 0.0f64;
        let mut hermiticity = 0.0f64;
        for p in &self.projections {
            idempotency = idempotency.max((&(p * p) - p).frobenius().as_f64());
            hermiticity = hermiticity.max(p.hermitian_residual());
        }
        let sum = self.sum().distance_to_scalar(creal(T::lit(rational_f64(&self.beta))));
        TupleResiduals {
            idempotency,
            hermiticity,
            sum,
        }
    }

    pub fn report(&self, tol: f64) -> Report {
        let r = self.residuals();
        Report::new("projection sum", tol)
            .bound("idempotency", r.idempotency)
            .bound("hermiticity", r.hermiticity)
            .bound("sum", r.sum)
    }

    /// The report, or a precondition error if any residual reaches `tol`.
    pub fn validate(&self, tol: f64) -> Result<Report> {
        let report = self.report(tol);
        if report.pass {
            Ok(report)
        } else {
            Err(Error::Precondition(format!(
                "projection tuple residual {:.3e} exceeds {tol:e}",
                report.worst()
            )))
        }
    }

    /// Ranks by singular-value threshold.
    pub fn ranks(&self, threshold: f64) -> Vec<usize> {
        self.projections.iter().map(|p| p.rank(threshold)).collect()
    }

    /// `p_i ↦ 1 - p_i`, a tuple for `r - β`.
    pub fn complement(&self) -> Self {
        let id = ComplexMatrix::identity(self.dim());
        Self {
            projections: self.projections.iter().map(|p| &id - p).collect(),
            beta: small(self.r() as u64) - &self.beta,
        }
    }

    /// `1_m ⊗ p_i`.
    pub fn amplify(&self, m: usize) -> Self {
        let id = ComplexMatrix::identity(m);
        Self {
            projections: self.projections.iter().map(|p| id.kron(p)).collect(),
            beta: self.beta.clone(),
        }
    }

    /// Appends `identities` copies of `1` and `zeros` copies of `0`.
    pub fn pad(&self, identities: usize, zeros: usize) -> Self {
        let d = self.dim();
        let mut projections = self.projections.clone();
        projections.extend((0..identities).map(|_| ComplexMatrix::identity(d)));
        projections.extend((0..zeros).map(|_| ComplexMatrix::zeros(d)));
        Self {
            projections,
            beta: &self.beta + small(identities as u64),
        }
    }

    pub fn cast<S: Real>(&self) -> ProjectionTuple<S> {
        ProjectionTuple {
            projections: self.projections.iter().map(|p| p.cast()).collect(),
            beta: self.beta.clone(),
        }
    }
}

/// Outcome of the exact test, with the clause that decided it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    pub reason: String,
}

/// `β 1_N` is a sum of `r` projections iff `β ∈ Σ_r` and `N β ∈ ℕ`.
pub fn feasibility(r: usize, beta: &Rational, dim: usize) -> Result<Feasibility> {
    if r == 0 || dim == 0 {
        return Err(Error::InvalidParameter("r and N must be positive".into()));
    }
    let b = format_rational(beta);
    let witness = sigma_membership(beta, r as u64)?;
    let integral = total_rank(beta, dim).is_some();
    let (feasible, reason) = match (&witness, integral) {
        (SigmaWitness::Outside { below, above }, _) => {
            let near = |x: &Option<Rational>| x.as_ref().map(format_rational).unwrap_or_else(|| "-".into());
            (
                false,
                format!("{b} is not in Σ_{r} (nearest members {} and {})", near(below), near(above)),
            )
        }
        (_, false) => (false, format!("N β = {dim}·{b} is not an integer")),
        (SigmaWitness::Interval, true) => (true, format!("{b} lies in the middle interval of Σ_{r}")),
        (
            SigmaWitness::Ladder {
                start,
                step,
                reflected,
            },
            true,
        ) => (
            true,
            format!(
                "{b} is {}term {step} of the Σ_{r} ladder from {start}",
                if *reflected { "r minus " } else { "" }
            ),
        ),
    };
    Ok(Feasibility { feasible, reason })
}

fn require_feasible(r: usize, beta: &Rational, dim: usize) -> Result<()> {
    let f = feasibility(r, beta, dim)?;
    if f.feasible {
        Ok(())
    } else {
        Err(Error::Infeasible(f.reason))
    }
}

/// `m` rank-one projections on `C²` with Bloch vectors at equal angles in a
/// plane; they sum to `(m/2) 1` for `m >= 2`.
pub fn equiangular<T: Real>(m: usize) -> Vec<ComplexMatrix<T>> {
    (0..m)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let (s, co) = theta.sin_cos();
            ComplexMatrix::from_fn(2, |a, b| match (a, b) {
                (0, 0) | (1, 1) => c(0.5, 0.0),
                (0, 1) => c(0.5 * co, -0.5 * s),
                _ => c(0.5 * co, 0.5 * s),
            })
        })
        .collect()
}

/// Closed-form tuple for `(r, β, N)`, or `None` when no move applies.
///
/// Integer `β`: identities and zeros. Half-integer `β = a + m/2` with odd
/// `m >= 3` and even `N`: `m` equiangular rank-one projections amplified to
/// `C^N`, padded with `a` identities and zeros. Other values fall through to
/// [`solve_sum`].
pub fn exact_construct<T: Real>(r: usize, beta: &Rational, dim: usize) -> Result<Option<ProjectionTuple<T>>> {
    require_feasible(r, beta, dim)?;
    if beta.is_integer() {
        let b = beta.to_integer().to_usize().unwrap_or(0);
        let base = ProjectionTuple::new(vec![ComplexMatrix::identity(dim)], small(1))?;
        let t = if b == 0 {
            ProjectionTuple::new(vec![ComplexMatrix::zeros(dim); r], beta.clone())?
        } else {
            base.pad(b - 1, r - b)
        };
        return Ok(Some(t));
    }
    let twice = beta * small(2);
    if !twice.is_integer() || !dim.is_multiple_of(2) {
        return Ok(None);
    }
    if beta * small(2) > small(r as u64) {
        return Ok(exact_construct::<T>(r, &(small(r as u64) - beta), dim)?.map(|t| t.complement()));
    }
    let twice = twice.to_integer().to_usize().unwrap_or(0);
    // a + m/2 = β with m = 3; a + m <= r keeps the padding nonnegative
    if twice < 3 || (twice - 3) / 2 + 3 > r {
        return Ok(None);
    }
    let a = (twice - 3) / 2;
    let core = ProjectionTuple::new(equiangular::<T>(3), Rational::new(BigInt::from(3), BigInt::from(2)))?;
    Ok(Some(core.amplify(dim / 2).pad(a, r - 3 - a)))
}

/// Controls for [`solve_sum`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Target for `||Σ p - β 1||`.
    pub tolerance: f64,
    pub max_restarts: usize,
    /// Alternating-projection sweeps per restart.
    pub max_iterations: usize,
    /// Restarts spent on one rank profile before moving to the next.
    pub restarts_per_profile: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_restarts: 50,
            max_iterations: 4000,
            restarts_per_profile: 5,
            seed: 0,
        }
    }
}

/// A solution together with how it was found.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub tuple: ProjectionTuple<f64>,
    pub ranks: Vec<usize>,
    /// Zero-based restart that succeeded.
    pub restart: usize,
    /// Sum residual when alternating projections stopped.
    pub pre_polish_residual: f64,
    pub residual: f64,
}

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    ComplexMatrix::from_dmatrix(a).map(|m| m.hermitian_part()).unwrap_or_else(|_| ComplexMatrix::zeros(dim))
}

fn sum_residual(ps: &[ComplexMatrix<f64>], beta: f64) -> (ComplexMatrix<f64>, f64) {
    let d = ps[0].dim();
    let mut s = ComplexMatrix::zeros(d);
    for p in ps {
        s = &s + p;
    }
    let r = &s - &ComplexMatrix::identity(d).scale_real(beta);
    let norm = r.frobenius();
    (r, norm)
}

// Σ_i [p_i, [p_i, z]] for projections p_i.
fn newton_operator(ps: &[ComplexMatrix<f64>], z: &ComplexMatrix<f64>) -> ComplexMatrix<f64> {
    let mut out = ComplexMatrix::zeros(z.dim());
    for p in ps {
        let pz = p * z;
        let zp = z * p;
        let pzp = &pz * p;
        out = &out + &(&(&pz + &zp) - &pzp.scale_real(2.0));
    }
    out
}

fn re_inner(a: &ComplexMatrix<f64>, b: &ComplexMatrix<f64>) -> f64 {
    a.entries().iter().zip(b.entries()).map(|(x, y)| (x.conj() * y).re).sum()
}

// Conjugate gradients for (L + shift) z = rhs on Hermitian matrices. L is
// only semi-definite near degenerate solutions; the shift keeps the step
// from blowing up along its near-kernel.
fn conjugate_gradient(ps: &[ComplexMatrix<f64>], shift: f64, rhs: &ComplexMatrix<f64>, iterations: usize) -> ComplexMatrix<f64> {
    let mut z = ComplexMatrix::zeros(rhs.dim());
    let mut res = rhs.clone();
    let mut dir = res.clone();
    let mut rr = re_inner(&res, &res);
    let stop = rr * 1e-28;
    for _ in 0..iterations {
        if rr <= stop {
            break;
        }
        let mut ld = newton_operator(ps, &dir);
        ld.axpy(c(shift, 0.0), &dir);
        let curvature = re_inner(&dir, &ld);
        if curvature <= 0.0 {
            break;
        }
        let step = rr / curvature;
        z.axpy(c(step, 0.0), &dir);
        res.axpy(c(-step, 0.0), &ld);
        let next = re_inner(&res, &res);
        dir = &res + &dir.scale_real(next / rr);
        rr = next;
    }
    z
}

// exp(i h) for Hermitian h.
fn exp_i(h: &ComplexMatrix<f64>) -> ComplexMatrix<f64> {
    let (vals, vecs) = h.hermitian_part().eigh();
    let phases: Vec<Complex<f64>> = vals.iter().map(|&l| Complex::new(l.cos(), l.sin())).collect();
    let d = ComplexMatrix::diagonal(&phases);
    let v = ComplexMatrix::wrap(vecs);
    &(&v * &d) * &v.adjoint()
}

/// Newton steps along unitary orbits: solves `Σ [p_i,[p_i,Z]] = -(Σp - β)`
/// (shifted by the current residual) and conjugates `p_i` by `exp(i Y_i)`
/// with `Y_i = i [p_i, Z]`. Stops when no damped step reduces the residual.
fn newton_polish(ps: &mut Vec<ComplexMatrix<f64>>, beta: f64, steps: usize) -> f64 {
    let (mut r, mut norm) = sum_residual(ps, beta);
    let cg_iterations = 4 * ps[0].dim() * ps[0].dim();
    for _ in 0..steps {
        if norm < 1e-14 {
            break;
        }
        let z = conjugate_gradient(ps, norm, &(-&r), cg_iterations);
        let mut accepted = false;
        for damping in [1.0, 0.5, 0.25] {
            let next: Vec<ComplexMatrix<f64>> = ps
                .iter()
                .map(|p| {
                    let y = p.commutator(&z).scale(c(0.0, damping));
                    let u = exp_i(&y);
                    (&(&u * p) * &u.adjoint()).hermitian_part()
                })
                .collect();
            let (nr, nn) = sum_residual(&next, beta);
            if nn < norm {
                *ps = next;
                r = nr;
                norm = nn;
                accepted = true;
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    norm
}

fn alternating(ranks: &[usize], beta: f64, options: &SolverOptions, rng: &mut ChaCha8Rng, dim: usize) -> (Vec<ComplexMatrix<f64>>, f64) {
    let r = ranks.len() as f64;
    let mut ps: Vec<ComplexMatrix<f64>> = ranks
        .iter()
        .map(|&k| random_hermitian(dim, rng).top_eigenprojection(k))
        .collect();
    let (mut res, mut norm) = sum_residual(&ps, beta);
    let mut checkpoint = norm;
    for it in 0..options.max_iterations {
        // hand over to Newton well before linear convergence would get there
        if norm < 1e-4 {
            break;
        }
        let shift = res.scale_real(1.0 / r);
        ps = ps
            .iter()
            .zip(ranks)
            .map(|(p, &k)| (p - &shift).top_eigenprojection(k))
            .collect();
        (res, norm) = sum_residual(&ps, beta);
        if (it + 1) % 200 == 0 {
            if norm > 0.99 * checkpoint {
                break;
            }
            checkpoint = norm;
        }
    }
    (ps, norm)
}

/// Numerical search for `r` projections summing to `β 1_N`.
///
/// Each restart draws random projections of the profile's ranks, runs
/// alternating projections between the fixed-rank manifolds and the affine
/// constraint, then polishes with Newton steps. Profiles are tried most
/// balanced first unless one is given. Deterministic for a given seed.
pub fn solve_sum(r: usize, beta: &Rational, dim: usize, profile: Option<&RankProfile>, options: &SolverOptions) -> Result<SolveOutcome> {
    require_feasible(r, beta, dim)?;
    let profiles = match profile {
        Some(p) => {
            if p.ranks().len() != r || p.dim() != dim || p.beta() != beta {
                return Err(Error::InvalidParameter("rank profile does not match (r, β, N)".into()));
            }
            vec![p.clone()]
        }
        None => {
            let per = options.restarts_per_profile.max(1);
            RankProfile::enumerate(r, beta, dim, options.max_restarts.div_ceil(per).max(1))?
        }
    };
    if profiles.is_empty() {
        return Err(Error::Infeasible("no rank profile matches the trace".into()));
    }
    let b = rational_f64(beta);
    let per = if profile.is_some() {
        options.max_restarts.max(1)
    } else {
        options.restarts_per_profile.max(1)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best = f64::INFINITY;
    for restart in 0..options.max_restarts {
        let Some(prof) = profiles.get(restart / per) else {
            break;
        };
        let (mut ps, pre) = alternating(prof.ranks(), b, options, &mut rng, dim);
        let norm = if pre < 1e-1 { newton_polish(&mut ps, b, 60) } else { pre };
        best = best.min(norm);
        if norm < options.tolerance {
            let tuple = ProjectionTuple::new(ps, beta.clone())?;
            return Ok(SolveOutcome {
                tuple,
                ranks: prof.ranks().to_vec(),
                restart,
                pre_polish_residual: pre,
                residual: norm,
            });
        }
    }
    Err(Error::NotFound {
        restarts: options.max_restarts,
        best_residual: best,
    })
}

/// Verdict of [`brute_force_oracle`].
#[derive(Clone, Debug)]
pub struct OracleVerdict {
    pub feasible: bool,
    /// The case analysis that decided it.
    pub sketch: String,
    /// Explicit tuple for feasible cases with `N <= 2`.
    pub witness: Option<ProjectionTuple<f64>>,
}

/// Decides feasibility for `N <= 3` by enumerating how many members are
/// `0`, `1`, rank one and (for `N = 3`) rank two, without using `Σ_r`.
///
/// - `N = 1`: members are 0 or 1.
/// - `N = 2`: rank-one members are `(1 + v·σ)/2` with unit `v`, and unit
///   vectors sum to zero iff there are none or at least two of them.
/// - `N = 3`: writing rank-two members as `1 - q`, the condition becomes
///   `Σ q_j - Σ q'_k = c 1`. A positive matrix of integer trace `m` and rank
///   at most `m` is a sum of `m` rank-one projections, so the case is
///   feasible iff `c = 0` with equal counts, or `c > 0` with at least three
///   rank-one members, or `c < 0` with at least three rank-two members.
pub fn brute_force_oracle(r: usize, beta: &Rational, dim: usize) -> Result<OracleVerdict> {
    if r == 0 || dim == 0 {
        return Err(Error::InvalidParameter("r and N must be positive".into()));
    }
    if dim > 3 {
        return Err(Error::OutOfScope(format!("brute-force oracle covers N <= 3, got {dim}")));
    }
    let b = format_rational(beta);
    let Some(total) = total_rank(beta, dim) else {
        return Ok(OracleVerdict {
            feasible: false,
            sketch: format!("trace: N β = {dim}·{b} is not a nonnegative integer"),
            witness: None,
        });
    };
    match dim {
        1 => {
            let feasible = total <= r;
            let witness = if feasible {
                Some(identity_zero_tuple(1, total, r, beta)?)
            } else {
                None
            };
            Ok(OracleVerdict {
                feasible,
                sketch: if feasible {
                    format!("{total} ones and {} zeros", r - total)
                } else {
                    format!("at most {r} ones sum to less than {b}")
                },
                witness,
            })
        }
        2 => {
            // a identities, m rank-one, 2a + m = total
            for a in 0..=(total / 2).min(r) {
                let m = total - 2 * a;
                if m == 1 || a + m > r {
                    continue;
                }
                let witness = two_dim_witness(a, m, r, beta)?;
                return Ok(OracleVerdict {
                    feasible: true,
                    sketch: format!("{a} identities, {m} rank-one with Bloch vectors summing to 0, {} zeros", r - a - m),
                    witness: Some(witness),
                });
            }
            Ok(OracleVerdict {
                feasible: false,
                sketch: format!(
                    "every split of trace {total} into identities and rank-one members either exceeds {r} members or leaves a single rank-one member, whose Bloch vector cannot vanish"
                ),
                witness: None,
            })
        }
        _ => {
            for a in 0..=r {
                for m2 in 0..=(r - a) {
                    for m1 in 0..=(r - a - m2) {
                        if 3 * a + 2 * m2 + m1 != total {
                            continue;
                        }
                        // c = β - a - m2, with 3c = m1 - m2
                        let c3 = m1 as i64 - m2 as i64;
                        let ok = (c3 == 0 && m1 == m2) || (c3 > 0 && m1 >= 3) || (c3 < 0 && m2 >= 3);
                        if ok {
                            return Ok(OracleVerdict {
                                feasible: true,
                                sketch: format!(
                                    "{a} identities, {m1} rank-one, {m2} rank-two, {} zeros; Σq - Σq' = ({c3}/3) 1 is solvable",
                                    r - a - m1 - m2
                                ),
                                witness: None,
                            });
                        }
                    }
                }
            }
            Ok(OracleVerdict {
                feasible: false,
                sketch: format!("no count of 0, rank-one, rank-two and 1 members with trace {total} admits Σq - Σq' = c 1"),
                witness: None,
            })
        }
    }
}

fn identity_zero_tuple(dim: usize, ones: usize, r: usize, beta: &Rational) -> Result<ProjectionTuple<f64>> {
    let mut ps = vec![ComplexMatrix::identity(dim); ones];
    ps.extend(vec![ComplexMatrix::zeros(dim); r - ones]);
    ProjectionTuple::new(ps, beta.clone())
}

fn two_dim_witness(a: usize, m: usize, r: usize, beta: &Rational) -> Result<ProjectionTuple<f64>> {
    let mut ps = vec![ComplexMatrix::identity(2); a];
    let mut rest = m;
    if rest % 2 == 1 {
        ps.extend(equiangular(3));
        rest -= 3;
    }
    let pair = equiangular::<f64>(2);
    for _ in 0..rest / 2 {
        ps.extend(pair.iter().cloned());
    }
    ps.extend(vec![ComplexMatrix::zeros(2); r - a - m]);
    ProjectionTuple::new(ps, beta.clone())
}

/// One `d×d` block of an element of `Δ_{2n} ⊗ M_d`, stored symbolically.
#[derive(Clone, Debug, PartialEq)]
pub enum Block<T: Real> {
    Zero,
    Identity,
    /// `1_multiplicity ⊗ core`.
    Amplified(Arc<ComplexMatrix<T>>),
}

/// Block-diagonal element whose blocks are all of the form `1_mult ⊗ x`
/// with `x` on `C^core_dim`, so the full matrix is never built.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagonal<T: Real> {
    pub multiplicity: usize,
    pub core_dim: usize,
    pub blocks: Vec<Block<T>>,
}

impl<T: Real> BlockDiagonal<T> {
    pub fn block_dim(&self) -> usize {
        self.multiplicity * self.core_dim
    }

    fn core(&self, b: &Block<T>) -> ComplexMatrix<T> {
        match b {
            Block::Zero => ComplexMatrix::zeros(self.core_dim),
            Block::Identity => ComplexMatrix::identity(self.core_dim),
            Block::Amplified(x) => (**x).clone(),
        }
    }

    /// Core of `(1/len) Σ blocks`, the trace-preserving expectation onto
    /// `1 ⊗ M_d`.
    pub fn expectation_core(&self) -> ComplexMatrix<T> {
        let mut s = ComplexMatrix::zeros(self.core_dim);
        for b in &self.blocks {
            s = &s + &self.core(b);
        }
        s.scale_real(T::lit(1.0 / self.blocks.len() as f64))
    }

    /// Largest Frobenius distance of a block from being a projection.
    pub fn projection_residual(&self) -> f64 {
        let scale = (self.multiplicity as f64).sqrt();
        self.blocks
            .iter()
            .map(|b| match b {
                Block::Amplified(x) => x.projection_residual() * scale,
                _ => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// The full block-diagonal matrix, subject to the dimension cap.
    pub fn materialize(&self, settings: &Settings) -> Result<ComplexMatrix<T>> {
        settings.check_dim(self.blocks.len() * self.block_dim())?;
        let id = ComplexMatrix::identity(self.multiplicity);
        let blocks: Vec<ComplexMatrix<T>> = self.blocks.iter().map(|b| id.kron(&self.core(b))).collect();
        Ok(ComplexMatrix::direct_sum(&blocks))
    }
}

/// Certified Λ element at a grid stage: `E(q̃) = α 1` for the block element
/// `q̃` built from a four-term projection sum.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaCertificate {
    pub model: Model,
    pub stage: u32,
    pub i: u64,
    pub alpha: Rational,
    /// `β` of the base tuple, i.e. `4α` for the seed value `α`.
    pub base_beta: Rational,
    /// Band test for the model's own index.
    pub in_band: bool,
    /// Band tests keyed by index.
    pub band: BTreeMap<String, bool>,
    pub residuals: BTreeMap<String, f64>,
    pub projections: Vec<ComplexMatrix<f64>>,
    pub provenance: String,
}

impl LambdaCertificate {
    /// Rebuilds the certificate from its stored projections and checks that
    /// it reproduces itself.
    pub fn revalidate(&self, settings: &Settings) -> Result<Report> {
        let base = ProjectionTuple::new(self.projections.clone(), self.base_beta.clone())?;
        let again = certify_lambda_element(self.model, self.stage, &base, self.i, settings)?;
        let mut report = Report::new("certificate", settings.tolerance);
        for (k, v) in &again.residuals {
            report = report.bound(k, *v);
        }
        report.pass &= again.alpha == self.alpha && again.in_band == self.in_band && again.band == self.band;
        Ok(report)
    }
}

/// Builds `q̃_i = (q_1, .., q_4, 1 × i, 0, ..)` in `Δ_{2n} ⊗ M_{(2n)^{2k}}`
/// with `q_j = 1 ⊗ p_j`, where `p_1..p_4` on `C^{4^k}` sum to `4α 1`, and
/// verifies `E(q̃_i) = ((4α + i)/2n) 1` blockwise.
///
/// The model is `spin:2n` or `vertex:2n`; `0 <= i <= 2n - 4`.
pub fn certify_lambda_element(model: Model, stage: u32, base: &ProjectionTuple<f64>, i: u64, settings: &Settings) -> Result<LambdaCertificate> {
    let order = match model {
        Model::Spin(m) | Model::Vertex(m) => m,
        Model::UnitaryOnb(_) => {
            return Err(Error::OutOfScope("grid certificates need a spin or vertex model".into()));
        }
    };
    if order % 2 != 0 {
        return Err(Error::InvalidParameter(format!("model order {order} must be even")));
    }
    let n = order / 2;
    check_gamma_range(n, i)?;
    if stage == 0 {
        return Err(Error::InvalidParameter("stage must be at least 1".into()));
    }
    if base.r() != 4 {
        return Err(Error::InvalidParameter(format!("base tuple has {} projections, need 4", base.r())));
    }
    let core_dim = 4usize
        .checked_pow(stage)
        .ok_or_else(|| Error::InvalidParameter("stage too large".into()))?;
    if base.dim() != core_dim {
        return Err(Error::DimensionMismatch {
            expected: core_dim,
            found: base.dim(),
        });
    }
    settings.check_dim(core_dim)?;
    let base_report = base.validate(settings.tolerance)?;
    let multiplicity = (n as usize)
        .checked_pow(2 * stage)
        .ok_or_else(|| Error::InvalidParameter("stage too large".into()))?;

    let mut blocks: Vec<Block<f64>> = base.projections().iter().map(|p| Block::Amplified(Arc::new(p.clone()))).collect();
    blocks.extend((0..i).map(|_| Block::Identity));
    blocks.resize(2 * n as usize, Block::Zero);
    let element = BlockDiagonal {
        multiplicity,
        core_dim,
        blocks,
    };

    let alpha = (base.beta() + small(i)) / small(2 * n);
    let e = element.expectation_core();
    let expectation = e.distance_to_scalar(creal(rational_f64(&alpha))) * (multiplicity as f64).sqrt();

    let mut residuals = BTreeMap::new();
    residuals.insert("expectation".to_string(), expectation);
    residuals.insert("block projection".to_string(), element.projection_residual());
    for (k, v) in base_report.residuals {
        residuals.insert(format!("base {k}"), v);
    }

    let small_index = small(2 * n);
    let big_index = small(4 * n * n);
    let mut band = BTreeMap::new();
    band.insert(format_rational(&small_index), band_contains(&small_index, &alpha)?);
    band.insert(format_rational(&big_index), band_contains(&big_index, &alpha)?);
    let in_band = band_contains(&model.index(), &alpha)?;

    Ok(LambdaCertificate {
        model,
        stage,
        i,
        alpha,
        base_beta: base.beta().clone(),
        in_band,
        band,
        residuals,
        projections: base.projections().to_vec(),
        provenance: format!(
            "grid stage {stage}: q_j = 1 ⊗ p_j in Δ_{} ⊗ M_{}, padded with {i} identities",
            2 * n,
            (2 * n).pow(2 * stage)
        ),
    })
}
