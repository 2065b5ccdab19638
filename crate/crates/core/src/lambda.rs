//! Exact arithmetic for relative-dimension sets: the band test, the
//! continued-fraction ladders of `Σ_r`, the `Φ_4` iteration, the explicit
//! families for spin, vertex and unitary-basis models, Popa's orbit and the
//! ζ-matrix.
//!
//! Everything here is exact; floating point never enters.

use std::collections::BTreeSet;
use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Rational, Result};

/// An exact ordered field usable by the Λ-set arithmetic.
pub trait ExactScalar: Clone + Ord + Signed + Display + Debug {
    fn int(i: i64) -> Self;
    fn frac(p: i64, q: i64) -> Self;
}

impl<I> ExactScalar for Ratio<I>
where
    I: Integer + Clone + Signed + Display + Debug + From<i64>,
{
    fn int(i: i64) -> Self {
        Ratio::from_integer(I::from(i))
    }

    fn frac(p: i64, q: i64) -> Self {
        Ratio::new(I::from(p), I::from(q))
    }
}

/// `α(1-α)`.
pub fn band_product<E: ExactScalar>(alpha: &E) -> E {
    alpha.clone() * (E::one() - alpha.clone())
}

/// `t < α < 1-t` with `t(1-t) = 1/index`, decided as `α(1-α) > 1/index`.
pub fn band_contains<E: ExactScalar>(index: &E, alpha: &E) -> Result<bool> {
    if *index <= E::int(4) {
        return Err(Error::InvalidParameter(format!(
            "band is empty unless index > 4, got {index}"
        )));
    }
    if alpha.is_negative() || *alpha > E::one() {
        return Err(Error::InvalidParameter(format!("α = {alpha} is not in [0, 1]")));
    }
    Ok(band_product(alpha) * index.clone() > E::one())
}

/// Orbits of `0` and `1` under `x -> 1 + 1/(n-1-x)`, truncated once a term
/// would exceed `n/2` (or hit the pole) or after `depth` terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ladder<E> {
    pub from_zero: Vec<E>,
    pub from_one: Vec<E>,
}

fn ladder_step<E: ExactScalar>(n: u64, x: &E) -> Option<E> {
    let den = E::int(n as i64 - 1) - x.clone();
    if den.is_zero() {
        None
    } else {
        Some(E::one() + E::one() / den)
    }
}

fn ladder_orbit<E: ExactScalar>(n: u64, start: E, depth: usize) -> Vec<E> {
    let half = E::frac(n as i64, 2);
    let mut out = Vec::new();
    let mut x = start;
    while out.len() < depth && x <= half {
        out.push(x.clone());
        match ladder_step(n, &x) {
            Some(next) if next > x => x = next,
            _ => break,
        }
    }
    out
}

pub fn lambda_ladder<E: ExactScalar>(n: u64, depth: usize) -> Ladder<E> {
    Ladder {
        from_zero: ladder_orbit(n, E::zero(), depth),
        from_one: ladder_orbit(n, E::one(), depth),
    }
}

/// `Φ_4(x) = 1 + 1/(3-x)`.
pub fn phi4<E: ExactScalar>(x: &E) -> E {
    E::one() + E::one() / (E::int(3) - x.clone())
}

/// `Φ_4^{(k)}(1)` by literal iteration.
pub fn phi4_iterate<E: ExactScalar>(k: u64) -> E {
    let mut x = E::one();
    for _ in 0..k {
        x = phi4(&x);
    }
    x
}

/// `Φ_4^{(k)}(1) = (2k+1)/(k+1)`.
pub fn phi4_closed_form<E: ExactScalar>(k: u64) -> E {
    E::frac(2 * k as i64 + 1, k as i64 + 1)
}

/// `β_m = Φ_4^{(2^m-1)}(1) = (2^{m+1}-1)/2^m`.
pub fn beta_m(m: u32) -> Rational {
    let p = BigInt::one() << m;
    Rational::new((p.clone() << 1u32) - 1, p)
}

/// `β_m` for `m = 1..=max_m` by iterating `Φ_4` from 1 and sampling at the
/// iteration counts `2^m - 1`.
pub fn beta_by_iteration(max_m: u32) -> Vec<Rational> {
    let mut out = Vec::with_capacity(max_m as usize);
    let mut x = Rational::one();
    let mut steps: u64 = 0;
    for m in 1..=max_m {
        let target = (1u64 << m) - 1;
        while steps < target {
            x = phi4(&x);
            steps += 1;
        }
        out.push(x.clone());
    }
    out
}

/// Which part of `Σ_r` certified (or failed to certify) a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SigmaWitness<E> {
    /// `α(r-α) >= r`: the middle interval `[rt, r-rt]`.
    Interval,
    /// Term `step` of the ladder started at `start` (0 or 1); `reflected`
    /// when the term is `r - α`.
    Ladder { start: u8, step: usize, reflected: bool },
    /// Not in `Σ_r`; the closest ladder terms on either side of
    /// `min(α, r-α)` when they exist.
    Outside { below: Option<E>, above: Option<E> },
}

impl<E> SigmaWitness<E> {
    pub fn is_member(&self) -> bool {
        !matches!(self, SigmaWitness::Outside { .. })
    }
}

/// Exact decision of `α ∈ Σ_r`, the set of `β` for which `β 1` is a finite
/// sum of `r` projections.
pub fn sigma_membership<E: ExactScalar>(alpha: &E, r: u64) -> Result<SigmaWitness<E>> {
    if r == 0 {
        return Err(Error::InvalidParameter("r must be at least 1".into()));
    }
    let re = E::int(r as i64);
    if alpha.is_negative() || *alpha > re {
        return Ok(SigmaWitness::Outside {
            below: None,
            above: None,
        });
    }
    let reflected = alpha.clone() * E::int(2) > re;
    let a = if reflected {
        re.clone() - alpha.clone()
    } else {
        alpha.clone()
    };
    if r >= 4 && a.clone() * (re.clone() - a.clone()) >= re {
        return Ok(SigmaWitness::Interval);
    }
    // a lies strictly below the lower fixed point (or r < 4 and the ladders
    // are finite), so each increasing ladder passes a in finitely many steps
    let mut below: Option<E> = None;
    let mut above: Option<E> = None;
    for (start, seed) in [(0u8, E::zero()), (1u8, E::one())] {
        let half = E::frac(r as i64, 2);
        let mut x = seed;
        let mut step = 0usize;
        while x <= half {
            if x == a {
                return Ok(SigmaWitness::Ladder {
                    start,
                    step,
                    reflected,
                });
            }
            if x > a {
                if above.as_ref().is_none_or(|b| x < *b) {
                    above = Some(x.clone());
                }
                break;
            }
            if below.as_ref().is_none_or(|b| x > *b) {
                below = Some(x.clone());
            }
            match ladder_step(r, &x) {
                Some(next) if next > x => x = next,
                _ => break,
            }
            step += 1;
        }
    }
    Ok(SigmaWitness::Outside { below, above })
}

/// `γ_{m,i} = (2 - 2^{-m} + i)/(2n)`.
pub fn gamma(n: u64, i: u64, m: u32) -> Result<Rational> {
    check_gamma_range(n, i)?;
    let two_m = BigInt::one() << m;
    let num = (BigInt::from(2 + i) * &two_m) - BigInt::one();
    Ok(Rational::new(num, two_m * BigInt::from(2 * n)))
}

/// `γ_{m,i}` as `(4 α_m + i)/(2n)` with `α_m = β_m / 4`.
pub fn gamma_from_beta(n: u64, i: u64, m: u32) -> Result<Rational> {
    check_gamma_range(n, i)?;
    Ok((beta_m(m) + Rational::from_integer(BigInt::from(i))) / Rational::from_integer(BigInt::from(2 * n)))
}

/// `lim_m γ_{m,i} = (2+i)/(2n)`.
pub fn gamma_limit(n: u64, i: u64) -> Result<Rational> {
    check_gamma_range(n, i)?;
    Ok(Rational::new(BigInt::from(2 + i), BigInt::from(2 * n)))
}

pub(crate) fn check_gamma_range(n: u64, i: u64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("γ needs n >= 3, got {n}")));
    }
    if i > 2 * n - 4 {
        return Err(Error::InvalidParameter(format!(
            "i = {i} outside 0..={} for n = {n}",
            2 * n - 4
        )));
    }
    Ok(())
}

/// Popa's step `g(x) = (1/index)/(1-x)`.
pub fn popa_step<E: ExactScalar>(index: &E, x: &E) -> E {
    E::one() / (index.clone() * (E::one() - x.clone()))
}

/// The two-step map `G = g∘g`, equal to `x -> (index - 1/(1-x))^{-1}`.
pub fn popa_double_step<E: ExactScalar>(index: &E, x: &E) -> E {
    E::one() / (index.clone() - E::one() / (E::one() - x.clone()))
}

/// One term of Popa's orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitTerm<E> {
    pub step: usize,
    pub value: E,
}

impl<E> OrbitTerm<E> {
    /// Even steps stay in the original inclusion; odd steps belong to the
    /// next one in the tower.
    pub fn is_even(&self) -> bool {
        self.step.is_multiple_of(2)
    }
}

/// `α_0 = seed`, `α_{m+1} = g(α_m)`, for a seed with `t < seed < 1/2`.
pub fn popa_orbit<E: ExactScalar>(index: &E, seed: &E, steps: usize) -> Result<Vec<OrbitTerm<E>>> {
    if !band_contains(index, seed)? || *seed >= E::frac(1, 2) {
        return Err(Error::InvalidParameter(format!(
            "seed {seed} is not strictly between t and 1/2 for index {index}"
        )));
    }
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = seed.clone();
    for step in 0..=steps {
        out.push(OrbitTerm {
            step,
            value: x.clone(),
        });
        x = popa_step(index, &x);
    }
    Ok(out)
}

/// Rows `m`, columns `k`: entry `G^k(γ_{m,i})` with `G` the two-step map
/// for index `2n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaMatrix {
    pub n: u64,
    pub i: u64,
    pub ms: Vec<u32>,
    pub ks: Vec<usize>,
    pub entries: Vec<Vec<Rational>>,
}

impl ZetaMatrix {
    /// Whether all entries are pairwise distinct.
    pub fn pairwise_distinct(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.entries.iter().flatten().all(|v| seen.insert(v.clone()))
    }
}

pub fn zeta_matrix(n: u64, i: u64, ms: std::ops::RangeInclusive<u32>, ks: std::ops::RangeInclusive<usize>) -> Result<ZetaMatrix> {
    check_gamma_range(n, i)?;
    let index = Rational::from_integer(BigInt::from(2 * n));
    let ms: Vec<u32> = ms.collect();
    let ks: Vec<usize> = ks.collect();
    let kmax = ks.iter().copied().max().unwrap_or(0);
    let mut entries = Vec::with_capacity(ms.len());
    for &m in &ms {
        let mut chain = Vec::with_capacity(kmax + 1);
        let mut x = gamma(n, i, m)?;
        for _ in 0..=kmax {
            chain.push(x.clone());
            x = popa_double_step(&index, &x);
        }
        entries.push(ks.iter().map(|&k| chain[k].clone()).collect());
    }
    Ok(ZetaMatrix {
        n,
        i,
        ms,
        ks,
        entries,
    })
}

/// Formats a rational as `"p/q"`.
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(p, q))
        }
        None => Ok(Rational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod rational_string {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Decimal expansion of `x` truncated to `digits` places.
pub fn to_decimal(x: &Rational, digits: usize) -> String {
    let neg = x.is_negative();
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (x.abs() * Rational::from_integer(scale)).floor().to_integer();
    let s = scaled.to_string();
    let s = if s.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - s.len()), s)
    } else {
        s
    };
    let (int, frac) = s.split_at(s.len() - digits);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

/// Rational bracket `[lo, hi]` of width at most `2^{-bits}` around the band
/// edge `t < 1/2` with `t(1-t) = 1/index`.
pub fn band_edge_bracket(index: &Rational, bits: u32) -> Result<(Rational, Rational)> {
    if *index <= Rational::from_integer(BigInt::from(4)) {
        return Err(Error::InvalidParameter(format!(
            "band edge is only defined for index > 4, got {index}"
        )));
    }
    let target = Rational::one() / index.clone();
    let mut lo = Rational::zero();
    let mut hi = Rational::new(BigInt::one(), BigInt::from(2));
    for _ in 0..bits {
        let mid = (lo.clone() + hi.clone()) / Rational::from_integer(BigInt::from(2));
        if band_product(&mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// The models whose Λ families are known explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Spin model of an `n×n` complex Hadamard matrix, index `n`.
    Spin(u64),
    /// Vertex model of an `n²×n²` bi-unitary matrix, index `n²`.
    Vertex(u64),
    /// An inclusion of index `n` with a unitary orthonormal basis.
    UnitaryOnb(u64),
}

impl Model {
    pub fn index(&self) -> Rational {
        let v = match *self {
            Model::Spin(n) | Model::UnitaryOnb(n) => n,
            Model::Vertex(n) => n * n,
        };
        Rational::from_integer(BigInt::from(v))
    }

    pub fn order(&self) -> u64 {
        match *self {
            Model::Spin(n) | Model::Vertex(n) | Model::UnitaryOnb(n) => n,
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    /// `spin:6`, `vertex:3` or `onb:4`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected kind:n, got {s:?}")))?;
        let n: u64 = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad model order in {s:?}")))?;
        if n == 0 {
            return Err(Error::InvalidParameter("model order must be positive".into()));
        }
        match kind.trim() {
            "spin" => Ok(Model::Spin(n)),
            "vertex" => Ok(Model::Vertex(n)),
            "onb" | "unitary_onb" => Ok(Model::UnitaryOnb(n)),
            other => Err(Error::Parse(format!("unknown model kind {other:?}"))),
        }
    }
}

impl Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::Spin(n) => write!(f, "spin:{n}"),
            Model::Vertex(n) => write!(f, "vertex:{n}"),
            Model::UnitaryOnb(n) => write!(f, "onb:{n}"),
        }
    }
}

/// A claimed element of Λ for a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaFamilyElement {
    #[serde(with = "rational_string")]
    pub value: Rational,
    pub family: String,
    pub provenance: String,
    pub in_band: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Which families [`known_families`] emits and how deep the sequences go.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySelection {
    pub multiples: bool,
    pub midpoint: bool,
    pub reciprocals: bool,
    pub gamma: bool,
    pub popa: bool,
    pub zeta: bool,
    /// `m = 1..=gamma_depth` for γ and ζ rows.
    pub gamma_depth: u32,
    /// Popa steps (even steps are emitted) and ζ columns `k = 1..=depth`.
    pub orbit_depth: usize,
}

impl FamilySelection {
    pub fn all() -> Self {
        Self {
            multiples: true,
            midpoint: true,
            reciprocals: true,
            gamma: true,
            popa: true,
            zeta: true,
            gamma_depth: 3,
            orbit_depth: 2,
        }
    }

    pub fn none() -> Self {
        Self {
            multiples: false,
            midpoint: false,
            reciprocals: false,
            gamma: false,
            popa: false,
            zeta: false,
            gamma_depth: 3,
            orbit_depth: 2,
        }
    }

    /// Comma-separated family names, or `all`.
    pub fn parse(spec: &str) -> Result<Self> {
        if spec.trim() == "all" {
            return Ok(Self::all());
        }
        let mut sel = Self::none();
        for name in spec.split(',') {
            match name.trim() {
                "multiples" => sel.multiples = true,
                "midpoint" => sel.midpoint = true,
                "reciprocal" | "reciprocals" => sel.reciprocals = true,
                "gamma" => sel.gamma = true,
                "popa" => sel.popa = true,
                "zeta" => sel.zeta = true,
                other => return Err(Error::Parse(format!("unknown family {other:?}"))),
            }
        }
        Ok(sel)
    }
}

struct Emitter {
    index: Rational,
    out: Vec<LambdaFamilyElement>,
}

impl Emitter {
    fn push(&mut self, value: Rational, family: String, provenance: &str, mut notes: Vec<String>) {
        let in_band = match band_contains(&self.index, &value) {
            Ok(b) => b,
            Err(_) => {
                notes.push("band is empty for index <= 4".into());
                false
            }
        };
        self.out.push(LambdaFamilyElement {
            value,
            family,
            provenance: provenance.into(),
            in_band,
            notes,
        });
    }
}

fn q(p: u64, q: u64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// The explicit Λ families of a model, closed under `α -> 1-α`.
pub fn known_families(model: Model, selection: &FamilySelection) -> Result<Vec<LambdaFamilyElement>> {
    let n = model.order();
    let index = model.index();
    let mut em = Emitter {
        index: index.clone(),
        out: Vec::new(),
    };
    let band_defined = index > Rational::from_integer(BigInt::from(4));

    if selection.multiples {
        let provenance = match model {
            Model::Spin(_) => "rank-k diagonal projections conjugated by the Hadamard matrix",
            Model::Vertex(_) => "rank-k projections in the first tensor leg",
            Model::UnitaryOnb(_) => "partial sums of u_i e_1 u_i* for a unitary orthonormal basis",
        };
        for k in 0..=n {
            em.push(q(k, n), format!("multiples(k={k})"), provenance, vec![]);
        }
    }

    if selection.midpoint && matches!(model, Model::Spin(_)) {
        let k = n.div_ceil(2);
        let mut notes = vec![];
        if n <= 4 {
            notes.push("band membership asserted only for n > 4".into());
        }
        em.push(q(k, n), format!("midpoint(k={k})"), "k = floor((n+1)/2) multiple of 1/n", notes);
    }

    if selection.reciprocals {
        match model {
            Model::Spin(_) => {
                for k in 1..=n {
                    let asserted = n > 4 && (2..=n.saturating_sub(2)).contains(&k);
                    let note = if asserted {
                        "band membership asserted for 2 <= k <= n-2 (band edge t < 1/2)"
                    } else {
                        "outside the range where band membership is asserted"
                    };
                    em.push(
                        q(1, k),
                        format!("reciprocal(k={k})"),
                        "amplification of k/n by the index",
                        vec![note.into()],
                    );
                    em.push(
                        q(k - 1, k),
                        format!("reciprocal_complement(k={k})"),
                        "complement of the amplified k/n",
                        vec![note.into()],
                    );
                }
            }
            Model::Vertex(_) => {
                for k in 1..=n {
                    let asserted = n > 2 && k < n;
                    let note = if asserted {
                        "band membership asserted for 1 <= k <= n-1 (band edge t < 1/2)"
                    } else {
                        "outside the range where band membership is asserted"
                    };
                    em.push(
                        q(1, n * k),
                        format!("reciprocal(k={k})"),
                        "amplification of k/n by the index",
                        vec![note.into()],
                    );
                    em.push(
                        q(n * k - 1, n * k),
                        format!("reciprocal_complement(k={k})"),
                        "complement of 1/(nk)",
                        vec![
                            note.into(),
                            "emitted as 1 - 1/(nk); the value (nk-1)/k exceeds 1 and cannot be a relative dimension".into(),
                        ],
                    );
                }
            }
            Model::UnitaryOnb(_) => {}
        }
    }

    // γ and ζ need index 2n' (spin) or (2n')² (vertex) with n' >= 3
    let half = match model {
        Model::Spin(n) | Model::Vertex(n) if n % 2 == 0 && n >= 6 => Some(n / 2),
        _ => None,
    };
    if let Some(h) = half {
        let provenance = match model {
            Model::Spin(_) => "grid-stage projection sums with index 2n",
            _ => "grid-stage projection sums with index (2n)^2",
        };
        if selection.gamma {
            for i in 0..=(2 * h - 4) {
                for m in 1..=selection.gamma_depth {
                    em.push(gamma(h, i, m)?, format!("gamma(m={m},i={i})"), provenance, vec![]);
                }
            }
        }
        if selection.zeta && selection.orbit_depth > 0 {
            // the two-step orbit uses the index of the model itself
            for i in 0..=(2 * h - 4) {
                for m in 1..=selection.gamma_depth {
                    let mut x = gamma(h, i, m)?;
                    for k in 1..=selection.orbit_depth {
                        x = popa_double_step(&index, &x);
                        em.push(
                            x.clone(),
                            format!("zeta(m={m},i={i},k={k})"),
                            "two-step Popa orbit of gamma",
                            vec![],
                        );
                    }
                }
            }
        }
    }

    if selection.popa && band_defined && selection.orbit_depth > 0 {
        let seeds: Vec<Rational> = match model {
            Model::Spin(n) => (3..=n).map(|k| q(1, k)).collect(),
            Model::Vertex(n) => (1..=n).map(|k| q(1, n * k)).collect(),
            Model::UnitaryOnb(_) => vec![],
        };
        for seed in seeds {
            let admissible = band_contains(&index, &seed)? && seed < q(1, 2);
            if !admissible {
                continue;
            }
            let orbit = popa_orbit(&index, &seed, 2 * selection.orbit_depth)?;
            for term in orbit.iter().filter(|t| t.is_even() && t.step > 0) {
                em.push(
                    term.value.clone(),
                    format!("popa_orbit(seed={},step={})", format_rational(&seed), term.step),
                    "even Popa iterate",
                    vec![],
                );
            }
        }
    }

    // closure under complements
    let present: BTreeSet<Rational> = em.out.iter().map(|e| e.value.clone()).collect();
    let mut extra = Vec::new();
    let mut added = BTreeSet::new();
    for e in &em.out {
        let c = Rational::one() - e.value.clone();
        if !present.contains(&c) && added.insert(c.clone()) {
            extra.push((c, format!("complement({})", e.family)));
        }
    }
    for (value, family) in extra {
        em.push(value, family, "complement 1 - p of a projection", vec![]);
    }
    Ok(em.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::frac(p, q)
    }

    #[test]
    fn band_examples() {
        let six = Rational::int(6);
        assert!(band_contains(&six, &r(1, 4)).unwrap());
        assert!(!band_contains(&six, &r(1, 6)).unwrap());
        assert!(band_contains(&r(9, 2), &r(1, 2)).unwrap());
        assert!(band_contains(&Rational::int(4), &r(1, 2)).is_err());
        assert!(band_contains(&six, &r(3, 2)).is_err());
    }

    #[test]
    fn ladder_prefixes() {
        let l = lambda_ladder::<Rational>(4, 4);
        assert_eq!(l.from_one, vec![r(1, 1), r(3, 2), r(5, 3), r(7, 4)]);
        assert_eq!(l.from_zero[..3], [r(0, 1), r(4, 3), r(8, 5)]);
        let l5 = lambda_ladder::<Rational>(5, 3);
        assert_eq!(l5.from_one[1], r(4, 3));
        // r = 3: finite ladders
        let l3 = lambda_ladder::<Rational>(3, 10);
        assert_eq!(l3.from_zero, vec![r(0, 1), r(3, 2)]);
        assert_eq!(l3.from_one, vec![r(1, 1)]);
    }

    #[test]
    fn ladder_works_with_machine_rationals() {
        let l = lambda_ladder::<Ratio<i64>>(4, 3);
        assert_eq!(l.from_one[2], Ratio::new(5, 3));
    }

    #[test]
    fn phi4_examples() {
        assert_eq!(phi4_closed_form::<Rational>(0), r(1, 1));
        assert_eq!(phi4_closed_form::<Rational>(1), r(3, 2));
        assert_eq!(phi4_iterate::<Rational>(3), r(7, 4));
        assert_eq!(beta_m(2), r(7, 4));
        assert_eq!(beta_by_iteration(4), vec![beta_m(1), beta_m(2), beta_m(3), beta_m(4)]);
    }

    #[test]
    fn sigma_examples() {
        assert!(sigma_membership(&r(3, 2), 4).unwrap().is_member());
        assert!(!sigma_membership(&r(1, 2), 4).unwrap().is_member());
        assert_eq!(sigma_membership(&r(2, 1), 4).unwrap(), SigmaWitness::Interval);
        assert!(sigma_membership(&r(5, 2), 4).unwrap().is_member());
        let members: Vec<Rational> = (0..=12)
            .map(|k| r(k, 4))
            .filter(|a| sigma_membership(a, 3).unwrap().is_member())
            .collect();
        assert_eq!(members, vec![r(0, 1), r(1, 1), r(3, 2), r(2, 1), r(3, 1)]);
        // r = 5: interval [5t, 5 - 5t] with 5t ≈ 1.38
        assert_eq!(sigma_membership(&r(3, 2), 5).unwrap(), SigmaWitness::Interval);
        assert!(!sigma_membership(&r(1, 2), 5).unwrap().is_member());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(3, 0, 1).unwrap(), r(1, 4));
        assert_eq!(gamma_limit(3, 0).unwrap(), r(1, 3));
        assert_eq!(gamma(3, 2, 1).unwrap(), r(7, 12));
        assert!(band_contains(&Rational::int(6), &r(7, 12)).unwrap());
        assert!(gamma(3, 3, 1).is_err());
        for m in 1..6 {
            assert_eq!(gamma(4, 2, m).unwrap(), gamma_from_beta(4, 2, m).unwrap());
        }
    }

    #[test]
    fn popa_examples() {
        let six = Rational::int(6);
        let orbit = popa_orbit(&six, &r(1, 4), 20).unwrap();
        assert_eq!(orbit[1].value, r(2, 9));
        assert_eq!(orbit[2].value, r(3, 14));
        assert!(orbit.iter().all(|t| band_contains(&six, &t.value).unwrap()));
        assert!(orbit.windows(2).all(|w| w[1].value < w[0].value));
        assert!(popa_orbit(&six, &r(1, 6), 3).is_err());
        assert!(popa_orbit(&six, &r(1, 2), 3).is_err());
    }

    #[test]
    fn zeta_examples() {
        let z = zeta_matrix(3, 0, 1..=1, 0..=2).unwrap();
        assert_eq!(z.entries[0], vec![r(1, 4), r(3, 14), r(11, 52)]);
        for i in 0..=2 {
            assert!(zeta_matrix(3, i, 1..=5, 0..=5).unwrap().pairwise_distinct());
        }
    }

    #[test]
    fn double_step_is_two_single_steps() {
        let idx = Rational::int(8);
        for x in [r(1, 5), r(1, 3), r(2, 7)] {
            assert_eq!(popa_double_step(&idx, &x), popa_step(&idx, &popa_step(&idx, &x)));
        }
    }

    #[test]
    fn rational_strings_round_trip() {
        assert_eq!(format_rational(&r(2, 1)), "2/1");
        assert_eq!(parse_rational(" 7/4 ").unwrap(), r(7, 4));
        assert_eq!(parse_rational("3").unwrap(), r(3, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn decimals_and_band_edge() {
        assert_eq!(to_decimal(&r(1, 4), 3), "0.250");
        assert_eq!(to_decimal(&r(-7, 2), 1), "-3.5");
        assert_eq!(to_decimal(&r(22, 7), 0), "3");
        let (lo, hi) = band_edge_bracket(&Rational::int(6), 60).unwrap();
        assert!(band_product(&lo) < r(1, 6) && band_product(&hi) >= r(1, 6));
        // t = (1 - sqrt(1/3))/2 ≈ 0.2113248654
        assert!(to_decimal(&lo, 10).starts_with("0.211324865"));
    }

    #[test]
    fn spin6_families() {
        let fam = known_families(Model::Spin(6), &FamilySelection::all()).unwrap();
        let has = |v: Rational, prefix: &str| {
            fam.iter().any(|e| e.value == v && e.family.starts_with(prefix))
        };
        assert!(has(r(1, 2), "midpoint"));
        assert!(has(r(1, 4), "reciprocal(k=4)"));
        assert!(has(r(1, 4), "gamma(m=1,i=0)"));
        let quarter = fam.iter().find(|e| e.family == "reciprocal(k=4)").unwrap();
        assert!(quarter.in_band);
        let values: BTreeSet<Rational> = fam.iter().map(|e| e.value.clone()).collect();
        for v in &values {
            assert!(values.contains(&(Rational::one() - v.clone())));
        }
    }

    #[test]
    fn vertex3_families() {
        let fam = known_families(Model::Vertex(3), &FamilySelection::all()).unwrap();
        let e = fam.iter().find(|e| e.family == "reciprocal(k=2)").unwrap();
        assert_eq!(e.value, r(1, 6));
        assert!(e.in_band);
        assert!(fam.iter().all(|e| e.value <= Rational::one()));
    }

    #[test]
    fn model_parsing() {
        assert_eq!("spin:6".parse::<Model>().unwrap(), Model::Spin(6));
        assert_eq!("vertex:3".parse::<Model>().unwrap(), Model::Vertex(3));
        assert_eq!("onb:4".parse::<Model>().unwrap(), Model::UnitaryOnb(4));
        assert!("spin".parse::<Model>().is_err());
        assert!("torus:3".parse::<Model>().is_err());
    }

    proptest! {
        #[test]
        fn band_is_symmetric(p in 0i64..=200, idx in 5i64..40) {
            let a = r(p, 200);
            let index = Rational::int(idx);
            prop_assert_eq!(
                band_contains(&index, &a).unwrap(),
                band_contains(&index, &(Rational::one() - a.clone())).unwrap()
            );
        }

        #[test]
        fn popa_sign_identity(p in 1i64..999, idx in 5i64..30) {
            // g(x) - x has the sign of 1/index - x(1-x)
            let x = r(p, 1000);
            let index = Rational::int(idx);
            let lhs = popa_step(&index, &x) - x.clone();
            let rhs = Rational::one() / index - band_product(&x);
            prop_assert_eq!(lhs.signum(), rhs.signum());
        }

        #[test]
        fn ladder_terms_stay_below_interval(n in 4u64..12) {
            let l = lambda_ladder::<Rational>(n, 12);
            let nr = Rational::int(n as i64);
            for seq in [&l.from_zero, &l.from_one] {
                prop_assert!(seq.windows(2).all(|w| w[0] < w[1]));
                for x in seq.iter() {
                    prop_assert!(x.clone() * (nr.clone() - x.clone()) < nr);
                }
            }
        }
    }
}
