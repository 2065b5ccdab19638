use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use subfactor_core::algebra::{basic_construction, TraceForm};
use subfactor_core::hadamard::{
    flip_counterexample, max_stage_under_cap, spin_square, verify_biunitary, verify_hadamard, vertex_square,
    BiUnitaryMatrix, HadamardMatrix, SpinTower,
};
use subfactor_core::io::{
    read_json, to_json_string, BasisJson, BiUnitaryJson, CertificateJson, MatrixJson, QuadrupleJson, TupleJson,
};
use subfactor_core::lambda::{
    band_contains, band_edge_bracket, format_rational, known_families, parse_rational, to_decimal, zeta_matrix,
    FamilySelection, Model,
};
use subfactor_core::pimsner_popa::{d_ob_value, mu_unitaries, partial_sum_projections, shift_basis, verify_basis};
use subfactor_core::projection_sums::{
    certify_lambda_element, exact_construct, feasibility, solve_sum, RankProfile, SolverOptions,
};
use subfactor_core::report::Report;
use subfactor_core::{Basis, Error, Quadruple, Rational, Settings};

#[derive(Parser, Debug)]
#[command(name = "subfactor", version, about = "Finite-dimensional subfactor computations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Verification tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Largest matrix size ever materialized.
    #[arg(long, global = true, default_value_t = 4096)]
    cap: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write JSON here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HadamardSource {
    /// Matrix JSON file.
    file: Option<PathBuf>,
    /// Use the Fourier matrix of this order instead of a file.
    #[arg(long, conflicts_with = "file")]
    fourier: Option<usize>,
}

#[derive(Args, Debug)]
struct BasisSource {
    /// Basis JSON file.
    file: Option<PathBuf>,
    /// Use the cyclic-shift basis of M_n over the diagonal instead.
    #[arg(long, conflicts_with = "file")]
    shift: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a matrix is complex Hadamard.
    VerifyHadamard(HadamardSource),
    /// Check that an (nk)×(nk) matrix is bi-unitary.
    VerifyBiunitary {
        /// Bi-unitary JSON file (matrix plus "n" and "k").
        file: Option<PathBuf>,
        /// Built-in example: "flip" (unitary, not bi-unitary).
        #[arg(long, conflicts_with = "file")]
        example: Option<String>,
    },
    /// Build the spin-model square of a Hadamard matrix and check it.
    SpinSquare(HadamardSource),
    /// Check the spin-model tower unitaries up to a stage.
    SpinTower {
        #[command(flatten)]
        source: HadamardSource,
        /// Last stage; defaults to the largest one under the cap.
        #[arg(long)]
        stages: Option<usize>,
        /// Stages up to this size are also checked densely.
        #[arg(long, default_value_t = 256)]
        dense_limit: usize,
    },
    /// Commuting-square and non-degeneracy checks for a quadruple.
    CheckSquare {
        /// Quadruple JSON file; a bi-unitary file with --vertex.
        file: PathBuf,
        /// Treat the file as a bi-unitary matrix and check its vertex square.
        #[arg(long)]
        vertex: bool,
    },
    /// Classify a Pimsner-Popa basis candidate.
    VerifyBasis(BasisSource),
    /// Build the unitary basis of the basic construction from a two-sided basis.
    MuConstruct(BasisSource),
    /// Norm of Σ m* m for an orthonormal basis.
    Dob(BasisSource),
    /// Known relative dimensions for a model.
    LambdaEnumerate {
        /// spin:n, vertex:n or onb:n.
        #[arg(long)]
        model: String,
        /// Comma-separated families or "all".
        #[arg(long, default_value = "all")]
        families: String,
        #[arg(long)]
        gamma_depth: Option<u32>,
        #[arg(long)]
        orbit_depth: Option<usize>,
    },
    /// Exact test α(1-α) > 1/index.
    Band {
        #[arg(long)]
        index: String,
        #[arg(long)]
        alpha: String,
    },
    /// ζ-matrix of iterated two-step orbits of γ_{m,i}.
    Zeta {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        i: u64,
        #[arg(long, default_value_t = 5)]
        m: u32,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Write β·1 as a sum of r projections.
    SolveProjections {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        dim: usize,
        /// Comma-separated ranks, e.g. 7,7,7,7.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        /// Skip closed-form constructions.
        #[arg(long)]
        numeric: bool,
    },
    /// Certify a grid-stage relative dimension, or re-check a certificate.
    Certify {
        /// spin:2n or vertex:2n.
        #[arg(long, required_unless_present = "check")]
        model: Option<String>,
        #[arg(long, default_value_t = 1)]
        stage: u32,
        #[arg(long, default_value_t = 0)]
        i: u64,
        /// Tuple JSON with r = 4 on C^{4^stage}.
        #[arg(long, required_unless_present = "check")]
        base: Option<PathBuf>,
        /// Certificate JSON to re-validate.
        #[arg(long, conflicts_with_all = ["model", "base"])]
        check: Option<PathBuf>,
    },
    /// Relative dimensions and band edges as plot-ready rows.
    PlotData {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 30)]
        digits: usize,
        /// Emit CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
}

/// JSON payload plus whether every check passed.
struct Outcome {
    body: Value,
    pass: bool,
}

impl Outcome {
    fn ok(body: Value) -> Self {
        Self { body, pass: true }
    }

    fn report(report: &Report) -> Self {
        Self {
            body: json!(report),
            pass: report.pass,
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn load_hadamard(src: &HadamardSource, settings: &Settings) -> Result<HadamardMatrix<f64>, Error> {
    match (&src.file, src.fourier) {
        (Some(path), None) => {
            let m: MatrixJson = read_json(path)?;
            HadamardMatrix::new(m.to_matrix()?, settings.tolerance)
        }
        (None, Some(n)) => {
            settings.check_dim(n)?;
            HadamardMatrix::fourier(n)
        }
        _ => Err(usage("give a matrix file or --fourier n")),
    }
}

fn load_biunitary(path: &Path, settings: &Settings) -> Result<BiUnitaryMatrix<f64>, Error> {
    let b: BiUnitaryJson = read_json(path)?;
    BiUnitaryMatrix::new(b.matrix.to_matrix()?, b.n, b.k, settings.tolerance)
}

fn load_basis(src: &BasisSource, settings: &Settings) -> Result<Basis, Error> {
    match (&src.file, src.shift) {
        (Some(path), None) => read_json::<BasisJson>(path)?.to_candidate(settings),
        (None, Some(n)) => {
            settings.check_dim(n * n)?;
            Ok(shift_basis(n))
        }
        _ => Err(usage("give a basis file or --shift n")),
    }
}

fn square_outcome(q: &Quadruple, settings: &Settings) -> Result<Outcome, Error> {
    let square = q.is_commuting_square(settings.tolerance)?;
    let nondegenerate = q.is_nondegenerate(settings)?;
    let pass = square.pass && nondegenerate.pass;
    Ok(Outcome {
        body: json!({
            "dims": {"N": q.n.dim(), "P": q.p.dim(), "Q": q.q.dim(), "M": q.m.dim(), "ambient": q.ambient_dim()},
            "commuting_square": square,
            "nondegenerate": nondegenerate,
            "pass": pass,
        }),
        pass,
    })
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let g = &cli.global;
    let settings = Settings::new(g.tol, g.cap)?;
    match &cli.command {
        Command::VerifyHadamard(src) => {
            let m = match (&src.file, src.fourier) {
                (Some(path), None) => read_json::<MatrixJson>(path)?.to_matrix()?,
                _ => load_hadamard(src, &settings)?.matrix().clone(),
            };
            Ok(Outcome::report(&verify_hadamard(&m, settings.tolerance)))
        }
        Command::VerifyBiunitary { file, example } => {
            let (m, n, k) = match (file, example.as_deref()) {
                (Some(path), None) => {
                    let b: BiUnitaryJson = read_json(path)?;
                    (b.matrix.to_matrix()?, b.n, b.k)
                }
                (None, Some("flip")) => (flip_counterexample(), 2, 2),
                (None, Some(other)) => return Err(usage(format!("unknown example {other:?}"))),
                _ => return Err(usage("give a bi-unitary file or --example flip")),
            };
            Ok(Outcome::report(&verify_biunitary(&m, n, k, settings.tolerance)?))
        }
        Command::SpinSquare(src) => {
            let u = load_hadamard(src, &settings)?;
            settings.check_dim(u.order() * u.order())?;
            square_outcome(&spin_square(&u, &settings)?, &settings)
        }
        Command::SpinTower {
            source,
            stages,
            dense_limit,
        } => {
            let u = load_hadamard(source, &settings)?;
            let last = match stages {
                Some(s) => *s,
                None => max_stage_under_cap(u.order(), settings.dimension_cap)
                    .ok_or_else(|| usage("matrix order exceeds the cap"))?
                    .min(64),
            };
            let tower = SpinTower::new(&u, last, &settings)?;
            let report = tower.verify(&settings, *dense_limit)?;
            Ok(Outcome {
                body: json!({"stages": last, "report": report}),
                pass: report.pass,
            })
        }
        Command::CheckSquare { file, vertex } => {
            let q = if *vertex {
                vertex_square(&load_biunitary(file, &settings)?, &settings)?
            } else {
                read_json::<QuadrupleJson>(file)?.to_quadruple(&settings)?
            };
            square_outcome(&q, &settings)
        }
        Command::VerifyBasis(src) => {
            let b = load_basis(src, &settings)?;
            let f = verify_basis(&b, &settings)?;
            Ok(Outcome::ok(json!({
                "size": b.len(),
                "right": f.right,
                "left": f.left,
                "orthonormal": f.orthonormal,
                "left_orthonormal": f.left_orthonormal,
                "two_sided": f.two_sided,
                "unitary": f.unitary,
                "report": f.report,
            })))
        }
        Command::MuConstruct(src) => {
            let b = load_basis(src, &settings)?;
            let trace = TraceForm::new(b.ambient.ambient_dim())?;
            let bc = basic_construction(&b.sub, &b.ambient, &trace, &settings)?;
            let mu = mu_unitaries(&b, &bc, &settings)?;
            let partial = partial_sum_projections(&b, &bc, &settings)?;
            let pass = mu.report.pass && partial.pass;
            Ok(Outcome {
                body: json!({
                    "count": mu.unitaries.len(),
                    "dim": bc.hilbert_dim(),
                    "mu": mu.report,
                    "partial_sums": partial,
                    "pass": pass,
                }),
                pass,
            })
        }
        Command::Dob(src) => {
            let b = load_basis(src, &settings)?;
            let value = d_ob_value(&b, &settings)?;
            let gap = (value - b.len() as f64).abs();
            Ok(Outcome {
                body: json!({"d_ob": value, "size": b.len(), "gap": gap}),
                pass: gap < settings.tolerance,
            })
        }
        Command::LambdaEnumerate {
            model,
            families,
            gamma_depth,
            orbit_depth,
        } => {
            let model: Model = model.parse()?;
            let mut sel = FamilySelection::parse(families)?;
            if let Some(d) = gamma_depth {
                sel.gamma_depth = *d;
            }
            if let Some(d) = orbit_depth {
                sel.orbit_depth = *d;
            }
            let elements = known_families(model, &sel)?;
            Ok(Outcome::ok(json!({
                "model": model.to_string(),
                "index": format_rational(&model.index()),
                "elements": elements,
            })))
        }
        Command::Band { index, alpha } => {
            let index = parse_rational(index)?;
            let alpha = parse_rational(alpha)?;
            let in_band = band_contains(&index, &alpha)?;
            Ok(Outcome::ok(json!({
                "index": format_rational(&index),
                "alpha": format_rational(&alpha),
                "in_band": in_band,
            })))
        }
        Command::Zeta { n, i, m, k } => {
            let z = zeta_matrix(*n, *i, 1..=*m, 1..=*k)?;
            let rows: Vec<Vec<String>> = z.entries.iter().map(|r| r.iter().map(format_rational).collect()).collect();
            Ok(Outcome::ok(json!({
                "n": z.n,
                "i": z.i,
                "m": z.ms,
                "k": z.ks,
                "entries": rows,
                "pairwise_distinct": z.pairwise_distinct(),
            })))
        }
        Command::SolveProjections {
            r,
            beta,
            dim,
            profile,
            restarts,
            numeric,
        } => {
            let beta = parse_rational(beta)?;
            settings.check_dim(*dim)?;
            let feas = feasibility(*r, &beta, *dim)?;
            if !feas.feasible {
                return Err(Error::Infeasible(feas.reason));
            }
            let profile = profile
                .as_deref()
                .map(|p| parse_profile(p, *dim, &beta))
                .transpose()?;
            let exact = if *numeric || profile.is_some() {
                None
            } else {
                exact_construct::<f64>(*r, &beta, *dim)?
            };
            let (tuple, method) = match exact {
                Some(t) => (t, "exact"),
                None => {
                    let opts = SolverOptions {
                        max_restarts: *restarts,
                        seed: g.seed,
                        ..SolverOptions::default()
                    };
                    (solve_sum(*r, &beta, *dim, profile.as_ref(), &opts)?.tuple, "solver")
                }
            };
            let report = tuple.report(settings.tolerance);
            let mut body = json!(TupleJson::from_tuple(&tuple));
            body["method"] = json!(method);
            body["feasibility"] = json!(feas.reason);
            body["ranks"] = json!(tuple.ranks(1e-6));
            body["report"] = json!(report);
            Ok(Outcome {
                body,
                pass: report.pass,
            })
        }
        Command::Certify {
            model,
            stage,
            i,
            base,
            check,
        } => {
            if let Some(path) = check {
                let cert = read_json::<CertificateJson>(path)?.to_certificate()?;
                let report = cert.revalidate(&settings)?;
                return Ok(Outcome::report(&report));
            }
            let (Some(model), Some(base)) = (model, base) else {
                return Err(usage("certify needs --model and --base, or --check"));
            };
            let model: Model = model.parse()?;
            let tuple = read_json::<TupleJson>(base)?.to_tuple()?;
            let cert = certify_lambda_element(model, *stage, &tuple, *i, &settings)?;
            let pass = cert.residuals.values().all(|v| *v < settings.tolerance);
            Ok(Outcome {
                body: json!(CertificateJson::from_certificate(&cert)),
                pass,
            })
        }
        Command::PlotData { model, digits, csv } => plot_data(model, *digits, *csv),
    }
}

fn parse_profile(spec: &str, dim: usize, beta: &Rational) -> Result<RankProfile, Error> {
    let ranks = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad rank {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    RankProfile::new(ranks, dim, beta.clone())
}

fn plot_data(model: &str, digits: usize, csv: bool) -> Result<Outcome, Error> {
    let model: Model = model.parse()?;
    let index = model.index();
    let elements = known_families(model, &FamilySelection::all())?;
    // 4 bits per decimal digit is more than enough for the printed width
    let bits = (4 * digits + 8) as u32;
    let edges = match band_edge_bracket(&index, bits) {
        Ok((lo, hi)) => {
            let one = Rational::from_integer(1.into());
            Some((lo.clone(), hi.clone(), &one - &hi, &one - &lo))
        }
        Err(_) => None,
    };
    if csv {
        let mut text = String::from("alpha,exact,family,in_band\n");
        for e in &elements {
            text.push_str(&format!(
                "{},{},{},{}\n",
                to_decimal(&e.value, digits),
                format_rational(&e.value),
                e.family,
                e.in_band
            ));
        }
        if let Some((t_lo, _, u_lo, _)) = &edges {
            text.push_str(&format!("{},{},band edge t,true\n", to_decimal(t_lo, digits), format_rational(t_lo)));
            text.push_str(&format!("{},{},band edge 1-t,true\n", to_decimal(u_lo, digits), format_rational(u_lo)));
        }
        return Ok(Outcome::ok(Value::String(text)));
    }
    let rows: Vec<Value> = elements
        .iter()
        .map(|e| {
            json!({
                "alpha": to_decimal(&e.value, digits),
                "exact": format_rational(&e.value),
                "family": e.family,
                "in_band": e.in_band,
            })
        })
        .collect();
    let band = edges.map(|(t_lo, t_hi, u_lo, u_hi)| {
        json!({
            "t": {"decimal": to_decimal(&t_lo, digits), "lower": format_rational(&t_lo), "upper": format_rational(&t_hi)},
            "one_minus_t": {"decimal": to_decimal(&u_lo, digits), "lower": format_rational(&u_lo), "upper": format_rational(&u_hi)},
        })
    });
    Ok(Outcome::ok(json!({
        "model": model.to_string(),
        "index": format_rational(&index),
        "rows": rows,
        "band_edges": band,
    })))
}

/// Errors caused by the input rather than by a failed check.
fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse(_)
            | Error::Json(_)
            | Error::InvalidParameter(_)
            | Error::DimensionCap { .. }
            | Error::DimensionMismatch { .. }
            | Error::OutOfScope(_)
    )
}

fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let text = match &outcome.body {
                Value::String(s) => Ok(s.clone()),
                v => to_json_string(v),
            };
            let written = text.map_err(|e| e.to_string()).and_then(|t| {
                emit(&t, cli.global.out.as_deref()).map_err(|e| e.to_string())
            });
            match written {
                Ok(()) if outcome.pass => ExitCode::SUCCESS,
                Ok(()) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage_error(&e) { 2 } else { 1 })
        }
    }
}
