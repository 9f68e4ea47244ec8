//! Command-line interface.
//!
//! Exit codes: 0 when every evaluated identity passes, 1 when any identity
//! check fails, 2 on usage or expression parse errors, 3 on numerical
//! errors (singular fundamental tensor).

use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::connections::{coefficients, curvature, torsion, ConnectionKind};
use crate::frontend::expr::ExprField;
use crate::frontend::report::{diffs_to_table, report_to_json, report_to_table};
use crate::frontend::sampling::{sample_points, sample_points_generic};
use crate::frontend::zoo::{builtin_metric, ZooMetric};
use crate::jets::{ScalarField, TangentPoint};
use crate::verify::{compare_connections, run_suite, MetricTraits, Tolerances};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "finsler",
    about = "Finsler geometry engine: spray, Barthel connection, the four fundamental linear connections, and an identity verification suite",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConnectionArg {
    Berwald,
    Cartan,
    Chern,
    Hashiguchi,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhatArg {
    Coeffs,
    Torsion,
    Curvature,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Print connection component tables at one point.
    Compute {
        /// Metric: builtin name, "randers:b1,b2,..", or "expr:<energy>".
        #[arg(long)]
        metric: String,
        /// Point as "x1,..,xn;y1,..,yn".
        #[arg(long)]
        point: String,
        #[arg(long, value_enum, default_value = "all")]
        connection: ConnectionArg,
        #[arg(long, value_enum, default_value = "all")]
        what: WhatArg,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Run the identity suite over seeded sample points.
    Verify {
        #[arg(long)]
        metric: String,
        /// Dimension n (builtins and expressions).
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Number of sample points.
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Sampling seed; the FINSLER_SEED environment variable overrides.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Tolerance for identities that close inside the Taylor engine.
        #[arg(long, default_value_t = 1e-8)]
        tol_exact: f64,
        /// Tolerance for identities comparing independent routes.
        #[arg(long, default_value_t = 1e-6)]
        tol_oracle: f64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Print the pairwise connection differences at one point.
    Compare {
        #[arg(long)]
        metric: String,
        #[arg(long)]
        point: String,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

struct ResolvedMetric {
    name: String,
    field: Arc<dyn ScalarField>,
    zoo: Option<Arc<ZooMetric>>,
}

fn resolve_metric(text: &str, n: usize) -> Result<ResolvedMetric, Error> {
    if let Some(source) = text.strip_prefix("expr:") {
        let field = ExprField::parse(source, n)?;
        return Ok(ResolvedMetric {
            name: text.to_string(),
            field,
            zoo: None,
        });
    }
    let (name, params) = match text.split_once(':') {
        Some((name, params)) => {
            let parsed: Result<Vec<f64>, _> = params.split(',').map(str::parse::<f64>).collect();
            let parsed = parsed.map_err(|e| {
                crate::frontend::zoo::MetricError::BadParams(format!(
                    "bad parameter list {params:?}: {e}"
                ))
            })?;
            (name, parsed)
        }
        None => (text, Vec::new()),
    };
    let zoo = builtin_metric(name, &params, n)?;
    Ok(ResolvedMetric {
        name: text.to_string(),
        field: zoo.clone() as Arc<dyn ScalarField>,
        zoo: Some(zoo),
    })
}

fn parse_point(text: &str) -> Result<TangentPoint, Error> {
    let err = |msg: String| crate::jets::JetError::Domain(msg);
    let (xs, ys) = text.split_once(';').ok_or_else(|| {
        err(format!(
            "point {text:?} lacks the ';' separating base and fiber"
        ))
    })?;
    let parse_list = |part: &str| -> Result<Vec<f64>, Error> {
        part.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| err(format!("bad coordinate {t:?}: {e}")).into())
            })
            .collect()
    };
    Ok(TangentPoint::new(parse_list(xs)?, parse_list(ys)?)?)
}

fn classify_error(e: &Error) -> i32 {
    match e {
        Error::Expr(_) | Error::Metric(_) => EXIT_USAGE,
        Error::Geometry(_) | Error::Jet(_) => EXIT_NUMERICAL,
    }
}

fn kinds_for(arg: ConnectionArg) -> Vec<ConnectionKind> {
    match arg {
        ConnectionArg::Berwald => vec![ConnectionKind::Berwald],
        ConnectionArg::Cartan => vec![ConnectionKind::Cartan],
        ConnectionArg::Chern => vec![ConnectionKind::Chern],
        ConnectionArg::Hashiguchi => vec![ConnectionKind::Hashiguchi],
        ConnectionArg::All => ConnectionKind::ALL.to_vec(),
    }
}

fn fmt3(label: &str, t: &crate::util::T3, out: &mut String) {
    let n = t.len();
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                out.push_str(&format!(
                    "{label}^{}_{}{} = {}\n",
                    h + 1,
                    i + 1,
                    j + 1,
                    t[h][i][j]
                ));
            }
        }
    }
}

fn fmt4(label: &str, t: &crate::util::T4, out: &mut String) {
    let n = t.len();
    for i in 0..n {
        for h in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push_str(&format!(
                        "{label}^{}_{}{}{} = {}\n",
                        i + 1,
                        h + 1,
                        j + 1,
                        k + 1,
                        t[i][h][j][k]
                    ));
                }
            }
        }
    }
}

fn run_compute(
    metric: &str,
    point: &str,
    connection: ConnectionArg,
    what: WhatArg,
    format: Format,
) -> Result<i32, Error> {
    let p = parse_point(point)?;
    let resolved = resolve_metric(metric, p.dim())?;
    let field = resolved.field.as_ref();
    let spray = crate::geometry::nonlinear_connection(field, &p)?;
    let mut json = serde_json::Map::new();
    let mut table = String::new();
    table.push_str(&format!("metric: {}   point: {}\n", resolved.name, point));
    if matches!(what, WhatArg::Coeffs | WhatArg::All) {
        table.push_str("spray and nonlinear connection:\n");
        for (h, g) in spray.g.iter().enumerate() {
            table.push_str(&format!("G^{} = {}\n", h + 1, g));
        }
        for (h, row) in spray.n.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                table.push_str(&format!("N^{}_{} = {}\n", h + 1, i + 1, v));
            }
        }
        json.insert("spray".into(), serde_json::json!(spray.g));
        json.insert("nonlinear_connection".into(), serde_json::json!(spray.n));
    }
    for kind in kinds_for(connection) {
        let kname = kind.name();
        let mut kind_json = serde_json::Map::new();
        if matches!(what, WhatArg::Coeffs | WhatArg::All) {
            let co = coefficients(kind, field, &p)?;
            table.push_str(&format!("{kname} coefficients:\n"));
            fmt3("V", &co.v, &mut table);
            fmt3("H", &co.h, &mut table);
            kind_json.insert("vertical".into(), serde_json::json!(co.v));
            kind_json.insert("horizontal".into(), serde_json::json!(co.h));
        }
        if matches!(what, WhatArg::Torsion | WhatArg::All) {
            let t = torsion(kind, field, &p)?;
            table.push_str(&format!("{kname} torsion blocks:\n"));
            fmt3("R", &t.hh, &mut table);
            fmt3("Tv", &t.hv_v, &mut table);
            fmt3("Th", &t.hv_h, &mut table);
            kind_json.insert("torsion_hh".into(), serde_json::json!(t.hh));
            kind_json.insert("torsion_hv_vertical".into(), serde_json::json!(t.hv_v));
            kind_json.insert("torsion_hv_horizontal".into(), serde_json::json!(t.hv_h));
        }
        if matches!(what, WhatArg::Curvature | WhatArg::All) {
            let c = curvature(kind, field, &p)?;
            table.push_str(&format!("{kname} curvature blocks:\n"));
            fmt4("R", &c.rh, &mut table);
            fmt4("P", &c.phv, &mut table);
            fmt4("Q", &c.qv, &mut table);
            kind_json.insert("rh".into(), serde_json::json!(c.rh));
            kind_json.insert("phv".into(), serde_json::json!(c.phv));
            kind_json.insert("qv".into(), serde_json::json!(c.qv));
        }
        json.insert(kname.into(), serde_json::Value::Object(kind_json));
    }
    match format {
        Format::Table => print!("{table}"),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::Value::Object(json)).unwrap()
        ),
    }
    Ok(EXIT_OK)
}

fn run_verify(
    metric: &str,
    dim: usize,
    n_points: usize,
    seed_arg: u64,
    tol_exact: f64,
    tol_oracle: f64,
    format: Format,
) -> Result<i32, Error> {
    let seed = match std::env::var("FINSLER_SEED") {
        Ok(s) => s.parse::<u64>().map_err(|e| {
            crate::frontend::zoo::MetricError::BadParams(format!("FINSLER_SEED {s:?}: {e}"))
        })?,
        Err(_) => seed_arg,
    };
    let resolved = resolve_metric(metric, dim)?;
    let (points, traits_) = match &resolved.zoo {
        Some(zoo) => (
            sample_points(zoo, n_points, seed),
            MetricTraits {
                riemannian: zoo.is_riemannian(),
                locally_minkowski: zoo.is_locally_minkowski(),
                witness_point: zoo.witness_point(),
            },
        ),
        None => (
            sample_points_generic(dim, n_points, seed),
            MetricTraits::default(),
        ),
    };
    let tol = Tolerances {
        exact: tol_exact,
        oracle: tol_oracle,
        ..Tolerances::default()
    };
    let report = run_suite(
        resolved.field.clone(),
        &resolved.name,
        &traits_,
        &points,
        seed,
        &tol,
    );
    match format {
        Format::Table => print!("{}", report_to_table(&report)),
        Format::Json => print!("{}", report_to_json(&report)),
    }
    if !report.all_passed() {
        Ok(EXIT_CHECK_FAILED)
    } else if report.any_errored() {
        Ok(EXIT_NUMERICAL)
    } else {
        Ok(EXIT_OK)
    }
}

fn run_compare(metric: &str, point: &str, format: Format) -> Result<i32, Error> {
    let p = parse_point(point)?;
    let resolved = resolve_metric(metric, p.dim())?;
    let diffs = compare_connections(resolved.field.as_ref(), &p)?;
    match format {
        Format::Table => print!("{}", diffs_to_table(&diffs)),
        Format::Json => println!("{}", serde_json::to_string_pretty(&diffs).unwrap()),
    }
    let worst = diffs.pairs.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    Ok(if worst <= 1e-8 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

/// Entry point; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version on stdout with success
            let code = if e.exit_code() == 0 { 0 } else { EXIT_USAGE };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Compute {
            metric,
            point,
            connection,
            what,
            format,
        } => run_compute(&metric, &point, connection, what, format),
        Command::Verify {
            metric,
            dim,
            points,
            seed,
            tol_exact,
            tol_oracle,
            format,
        } => run_verify(&metric, dim, points, seed, tol_exact, tol_oracle, format),
        Command::Compare {
            metric,
            point,
            format,
        } => run_compare(&metric, &point, format),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify_error(&e)
        }
    }
}
