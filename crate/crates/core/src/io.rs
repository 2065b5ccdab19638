//! JSON formats for matrices, algebras, bases, projection tuples and
//! certificates.
//!
//! Matrices are `{"dim": d, "entries": [[re, im], ...]}` in row-major order.
//! Rationals are strings `"p/q"`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::StarSubalgebra;
use crate::commuting_square::QuadrupleOfAlgebras;
use crate::lambda::{format_rational, parse_rational, Model};
use crate::matrix::ComplexMatrix;
use crate::pimsner_popa::BasisCandidate;
use crate::projection_sums::{LambdaCertificate, ProjectionTuple};
use crate::scalar::Complex;
use crate::{Error, Result, Settings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix<f64>> for MatrixJson {
    fn from(m: &ComplexMatrix<f64>) -> Self {
        Self {
            dim: m.dim(),
            entries: m.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<ComplexMatrix<f64>> {
        let entries: Vec<Complex<f64>> = self.entries.iter().map(|&[re, im]| Complex::new(re, im)).collect();
        ComplexMatrix::from_row_major(self.dim, &entries)
    }
}

fn matrices(list: &[MatrixJson]) -> Result<Vec<ComplexMatrix<f64>>> {
    list.iter().map(MatrixJson::to_matrix).collect()
}

fn to_json_list(list: &[ComplexMatrix<f64>]) -> Vec<MatrixJson> {
    list.iter().map(MatrixJson::from).collect()
}

/// A matrix plus the factorization `n·k` of its size, for bi-unitaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiUnitaryJson {
    pub n: usize,
    pub k: usize,
    #[serde(flatten)]
    pub matrix: MatrixJson,
}

/// A unital *-subalgebra of `M_{ambient_dim}`, given by exactly one of: a
/// spanning set closed under products, generators, or a standard `kind`
/// (`"scalars"`, `"diagonal"`, `"full"`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubalgebraJson {
    pub ambient_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

impl SubalgebraJson {
    pub fn from_subalgebra(a: &StarSubalgebra<f64>) -> Self {
        Self {
            ambient_dim: a.ambient_dim(),
            basis: Some(to_json_list(a.basis())),
            ..Default::default()
        }
    }

    pub fn to_subalgebra(&self, settings: &Settings) -> Result<StarSubalgebra<f64>> {
        let d = self.ambient_dim;
        settings.check_dim(d)?;
        match (&self.basis, &self.generators, &self.kind) {
            (Some(b), None, None) => StarSubalgebra::from_spanning_set(d, &matrices(b)?, settings),
            (None, Some(g), None) => StarSubalgebra::generate(&matrices(g)?, d, settings),
            (None, None, Some(kind)) => match kind.as_str() {
                "scalars" => Ok(StarSubalgebra::scalars(d)),
                "diagonal" => Ok(StarSubalgebra::diagonal(d)),
                "full" => Ok(StarSubalgebra::full(d)),
                other => Err(Error::Parse(format!("unknown subalgebra kind {other:?}"))),
            },
            _ => Err(Error::Parse(
                "subalgebra needs exactly one of \"basis\", \"generators\" or \"kind\"".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleJson {
    #[serde(rename = "N")]
    pub n: SubalgebraJson,
    #[serde(rename = "P")]
    pub p: SubalgebraJson,
    #[serde(rename = "Q")]
    pub q: SubalgebraJson,
    #[serde(rename = "M")]
    pub m: SubalgebraJson,
}

impl QuadrupleJson {
    pub fn from_quadruple(q: &QuadrupleOfAlgebras<f64>) -> Self {
        Self {
            n: SubalgebraJson::from_subalgebra(&q.n),
            p: SubalgebraJson::from_subalgebra(&q.p),
            q: SubalgebraJson::from_subalgebra(&q.q),
            m: SubalgebraJson::from_subalgebra(&q.m),
        }
    }

    pub fn to_quadruple(&self, settings: &Settings) -> Result<QuadrupleOfAlgebras<f64>> {
        QuadrupleOfAlgebras::new(
            self.n.to_subalgebra(settings)?,
            self.p.to_subalgebra(settings)?,
            self.q.to_subalgebra(settings)?,
            self.m.to_subalgebra(settings)?,
            settings,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisJson {
    pub elements: Vec<MatrixJson>,
    pub sub: SubalgebraJson,
    pub ambient: SubalgebraJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<MatrixJson>,
}

impl BasisJson {
    pub fn from_candidate(b: &BasisCandidate<f64>) -> Self {
        Self {
            elements: to_json_list(&b.elements),
            sub: SubalgebraJson::from_subalgebra(&b.sub),
            ambient: SubalgebraJson::from_subalgebra(&b.ambient),
            density: b.density.as_ref().map(MatrixJson::from),
        }
    }

    pub fn to_candidate(&self, settings: &Settings) -> Result<BasisCandidate<f64>> {
        let mut b = BasisCandidate::new(
            matrices(&self.elements)?,
            self.sub.to_subalgebra(settings)?,
            self.ambient.to_subalgebra(settings)?,
        );
        if let Some(d) = &self.density {
            b = b.with_density(d.to_matrix()?);
        }
        Ok(b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleJson {
    pub r: usize,
    pub beta: String,
    pub dim: usize,
    pub projections: Vec<MatrixJson>,
}

impl TupleJson {
    pub fn from_tuple(t: &ProjectionTuple<f64>) -> Self {
        Self {
            r: t.r(),
            beta: format_rational(t.beta()),
            dim: t.dim(),
            projections: to_json_list(t.projections()),
        }
    }

    /// Parses and checks the declared `r` and `dim`; residuals are left to
    /// the caller.
    pub fn to_tuple(&self) -> Result<ProjectionTuple<f64>> {
        let t = ProjectionTuple::new(matrices(&self.projections)?, parse_rational(&self.beta)?)?;
        if t.r() != self.r {
            return Err(Error::Parse(format!("declared r = {} but {} projections given", self.r, t.r())));
        }
        if t.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: t.dim(),
            });
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub model: String,
    pub stage: u32,
    pub i: u64,
    pub alpha: String,
    pub base_beta: String,
    pub in_band: bool,
    pub band: BTreeMap<String, bool>,
    pub residuals: BTreeMap<String, f64>,
    pub projections: Vec<MatrixJson>,
    pub provenance: String,
}

impl CertificateJson {
    pub fn from_certificate(c: &LambdaCertificate) -> Self {
        Self {
            model: c.model.to_string(),
            stage: c.stage,
            i: c.i,
            alpha: format_rational(&c.alpha),
            base_beta: format_rational(&c.base_beta),
            in_band: c.in_band,
            band: c.band.clone(),
            residuals: c.residuals.clone(),
            projections: to_json_list(&c.projections),
            provenance: c.provenance.clone(),
        }
    }

    pub fn to_certificate(&self) -> Result<LambdaCertificate> {
        Ok(LambdaCertificate {
            model: self.model.parse::<Model>()?,
            stage: self.stage,
            i: self.i,
            alpha: parse_rational(&self.alpha)?,
            base_beta: parse_rational(&self.base_beta)?,
            in_band: self.in_band,
            band: self.band.clone(),
            residuals: self.residuals.clone(),
            projections: matrices(&self.projections)?,
            provenance: self.provenance.clone(),
        })
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline; map keys are ordered, so equal
/// values always give equal bytes.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection_sums::{certify_lambda_element, exact_construct};
    use crate::Rational;

    #[test]
    fn matrix_round_trip() {
        let m = ComplexMatrix::<f64>::from_fn(3, |i, j| Complex::new(i as f64, -(j as f64)));
        let j = MatrixJson::from(&m);
        assert_eq!(j.entries[1], [0.0, -1.0]);
        let text = serde_json::to_string(&j).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn subalgebra_forms() {
        let s = Settings::default();
        let kind: SubalgebraJson = serde_json::from_str(r#"{"ambient_dim": 3, "kind": "diagonal"}"#).unwrap();
        assert_eq!(kind.to_subalgebra(&s).unwrap().dim(), 3);
        let gen = SubalgebraJson {
            ambient_dim: 2,
            generators: Some(vec![MatrixJson::from(&ComplexMatrix::shift(2))]),
            ..Default::default()
        };
        assert_eq!(gen.to_subalgebra(&s).unwrap().dim(), 2);
        let both = SubalgebraJson {
            kind: Some("full".into()),
            ..gen
        };
        assert!(matches!(both.to_subalgebra(&s), Err(Error::Parse(_))));
    }

    #[test]
    fn tuple_and_certificate_round_trip() {
        let s = Settings::default();
        let t = exact_construct::<f64>(4, &Rational::new(3.into(), 2.into()), 4).unwrap().unwrap();
        let j = TupleJson::from_tuple(&t);
        assert_eq!(j.beta, "3/2");
        assert_eq!(j.to_tuple().unwrap(), t);
        let cert = certify_lambda_element(Model::Spin(6), 1, &t, 1, &s).unwrap();
        let text = to_json_string(&CertificateJson::from_certificate(&cert)).unwrap();
        let back: CertificateJson = serde_json::from_str(&text).unwrap();
        let loaded = back.to_certificate().unwrap();
        assert_eq!(loaded, cert);
        assert!(loaded.revalidate(&s).unwrap().pass);
    }
}
