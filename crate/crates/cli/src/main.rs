//! `bergdecomp`: scenario runner for monomial-map Bergman kernel decompositions.
//!
//! Exit codes: 0 pass, 1 residual failure, 2 input error, 3 resource cap,
//! 4 point outside the evaluation domain.

mod cache;
mod error;
mod parse;
mod scenario;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use bergdecomp::group::{build_group_with_cap, DEFAULT_ORDER_CAP};
use bergdecomp::intlin::{smith_normal_form, IntMatrix};
use bergdecomp::laurent::LaurentPolynomial;
use bergdecomp::monomial::{eval_phi, fiber};
use bergdecomp::projection::{Projector, SampledFunction};

use cache::{KernelCache, Source};
use error::{CliError, CliResult};
use parse::{fmt_complex, fmt_point, parse_matrix, parse_pair, parse_point};
use scenario::{Body, Scenario};
use verify::Overrides;

const SHIPPED: &[(&str, &str)] = &[
    ("disk_z2", include_str!("../scenarios/disk_z2.toml")),
    ("ellipsoid_p2q2", include_str!("../scenarios/ellipsoid_p2q2.toml")),
    ("hartogs_p1q1", include_str!("../scenarios/hartogs_p1q1.toml")),
    ("hartogs_p2q1", include_str!("../scenarios/hartogs_p2q1.toml")),
    ("monomial_ball", include_str!("../scenarios/monomial_ball.toml")),
    ("strict_inequality", include_str!("../scenarios/strict_inequality.toml")),
];

#[derive(Parser)]
#[command(name = "bergdecomp", version, about = "Monomial-map decompositions of weighted Bergman kernels")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Kernel truncation tolerance (overrides the scenario)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for sampled points and test functions (overrides the scenario)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest shell degree a kernel series may reach
    #[arg(long, global = true)]
    max_degree: Option<i64>,
    /// Format of standard output
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Directory for cached kernel series
    #[arg(long, global = true, env = "BERGDECOMP_CACHE")]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Smith normal form S·A·T = Λ
    Snf {
        #[arg(long)]
        matrix: String,
    },
    /// Deck group, coset representatives and character table
    Group {
        #[arg(long)]
        matrix: String,
        /// Largest group order accepted
        #[arg(long, default_value_t = DEFAULT_ORDER_CAP)]
        cap: u64,
    },
    /// Preimages of a point under the monomial map
    Fiber {
        #[arg(long)]
        matrix: String,
        /// Comma-separated coordinates, e.g. "0.3+0.1i,0.5"
        #[arg(long)]
        point: String,
    },
    /// Character components of a seeded Laurent polynomial at a point
    Project {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        point: String,
        /// Number of Laurent terms, exponents drawn from [-3, 3]
        #[arg(long, default_value_t = 6)]
        terms: usize,
    },
    /// Evaluate a kernel of a scenario
    Kernel {
        scenario: PathBuf,
        /// "z;w" or a single point for the diagonal
        #[arg(long)]
        at: String,
        /// lhs, rhs:<character index>, or target (domain2 with weight2)
        #[arg(long, default_value = "lhs")]
        role: String,
    },
    /// Run every check of a scenario
    Verify {
        scenario: PathBuf,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// List, print or run a shipped scenario
    Example {
        name: Option<String>,
        /// Print the scenario file instead of running it
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        out: ReportArgs,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Write the JSON report here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the residual table here
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(g: &Global, text: String, value: serde_json::Value) -> CliResult<ExitCode> {
    let mut out = std::io::stdout().lock();
    let res = match g.output {
        Output::Text => write!(out, "{text}"),
        Output::Json => writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json")),
    };
    res.map_err(|e| CliError::Io(e.to_string()))?;
    Ok(ExitCode::SUCCESS)
}

fn matrix(s: &str) -> CliResult<IntMatrix> {
    let rows = parse_matrix(s).map_err(CliError::Parse)?;
    IntMatrix::new(rows).map_err(|e| CliError::Parse(format!("matrix: {e}")))
}

fn point(s: &str, n: usize) -> CliResult<bergdecomp::monomial::ComplexPoint> {
    let z = parse_point(s).map_err(CliError::Parse)?;
    if z.n() != n {
        return Err(CliError::Parse(format!("point has {} coordinates, expected {n}", z.n())));
    }
    Ok(z)
}

fn run(cli: &Cli) -> CliResult<ExitCode> {
    let g = &cli.global;
    let cache = KernelCache::new(g.cache_dir.clone());
    match &cli.command {
        Command::Snf { matrix: m } => {
            let a = matrix(m)?;
            let d = smith_normal_form(&a);
            let lambda: Vec<String> = d.lambda.iter().map(|x| x.to_string()).collect();
            let text = format!("S = {}\nLambda = diag({})\nT = {}\ninvariant factors: {}\n", d.s, lambda.join(","), d.t, lambda.join(" "));
            emit(g, text, json!({ "schema": verify::SCHEMA, "s": d.s, "lambda": lambda, "t": d.t, "verified": d.verify(&a) }))
        }
        Command::Group { matrix: m, cap } => {
            let a = matrix(m)?;
            let grp = build_group_with_cap(&a, *cap)?;
            let ga = grp.reps_ga_i64();
            let gat = grp.reps_gat_i64();
            let table: Vec<Vec<String>> = grp.character_table().iter().map(|r| r.iter().map(|p| p.to_string()).collect()).collect();
            let orth = grp.check_orthogonality();
            let mut text = format!(
                "order {}\ninvariant factors: {}\n",
                grp.order,
                grp.invariant_factors().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
            );
            text.push_str(&format!("G_A representatives: {ga:?}\ncharacter labels (G_At): {gat:?}\n"));
            text.push_str("character table (rows: characters, entries: theta with value exp(2 pi i theta)):\n");
            for (b, row) in gat.iter().zip(&table) {
                text.push_str(&format!("  {b:?}: {}\n", row.join(" ")));
            }
            text.push_str(&format!("orthogonality: {}\n", if orth.exact_pass { "exact" } else { "FAILED" }));
            let value = json!({
                "schema": verify::SCHEMA, "order": grp.order,
                "invariant_factors": grp.invariant_factors().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                "reps_ga": ga, "reps_gat": gat, "character_table": table, "orthogonality": orth,
            });
            emit(g, text, value)?;
            Ok(if orth.exact_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Fiber { matrix: m, point: p } => {
            let a = matrix(m)?;
            let grp = build_group_with_cap(&a, DEFAULT_ORDER_CAP)?;
            let w = point(p, a.n())?;
            let ys = fiber(&grp, &w)?;
            let mut text = format!("{} preimages of {}\n", ys.len(), fmt_point(&w));
            let mut worst = 0.0f64;
            for y in &ys {
                worst = worst.max(eval_phi(&a, y)?.dist(&w));
                text.push_str(&format!("  {}\n", fmt_point(y)));
            }
            text.push_str(&format!("max |Phi(y) - w| = {worst:.2e}\n"));
            let pts: Vec<String> = ys.iter().map(fmt_point).collect();
            emit(g, text, json!({ "schema": verify::SCHEMA, "point": fmt_point(&w), "fiber": pts, "max_image_error": worst }))
        }
        Command::Project { matrix: m, point: p, terms } => {
            let a = matrix(m)?;
            let grp = build_group_with_cap(&a, DEFAULT_ORDER_CAP)?;
            let z = point(p, a.n())?;
            let poly = LaurentPolynomial::random_window(a.n(), *terms, g.seed.unwrap_or(0));
            let f = SampledFunction::new(bergdecomp::domains::ReinhardtDomain::polydisk(a.n()), move |z| poly.eval(z));
            let proj = Projector::new(&grp);
            let fz = f.eval(&z)?;
            let w = eval_phi(&a, &z)?;
            let mut sum = Complex64::new(0.0, 0.0);
            let mut text = format!("f(z) = {}\n", fmt_complex(fz));
            let mut rows = Vec::new();
            for chi in &grp.reps_gat {
                let pz = proj.project(&chi.m, &f, &z)?;
                let tb = proj.transport_via(&chi.m, &proj.character_row(&chi.m)?, &f, &w, 0)?;
                sum += pz;
                let b = chi.to_i64();
                text.push_str(&format!("  chi {b:?}: Pi f(z) = {}, T_b f(Phi z) = {}\n", fmt_complex(pz), fmt_complex(tb)));
                rows.push(json!({ "b": b, "projection": [pz.re, pz.im], "transport": [tb.re, tb.im] }));
            }
            let gap = (sum - fz).norm() / fz.norm().max(1.0);
            text.push_str(&format!("|sum - f(z)| = {gap:.2e}\n"));
            emit(g, text, json!({ "schema": verify::SCHEMA, "f": [fz.re, fz.im], "characters": rows, "completeness": gap }))
        }
        Command::Kernel { scenario, at, role } => kernel(g, &cache, &Scenario::load(scenario)?, at, role),
        Command::Verify { scenario, out } => verify_cmd(g, &cache, &Scenario::load(scenario)?, out),
        Command::Example { name, print, out } => {
            let Some(name) = name else {
                let names: Vec<&str> = SHIPPED.iter().map(|(n, _)| *n).collect();
                return emit(g, format!("{}\n", names.join("\n")), json!(names));
            };
            let (_, text) = SHIPPED
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| CliError::Parse(format!("no shipped scenario named {name:?}")))?;
            if *print {
                print!("{text}");
                return Ok(ExitCode::SUCCESS);
            }
            verify_cmd(g, &cache, &Scenario::parse(text, &format!("example:{name}"))?, out)
        }
    }
}

fn kernel(g: &Global, cache: &KernelCache, s: &Scenario, at: &str, role: &str) -> CliResult<ExitCode> {
    let Body::Decomposition(d) = &s.body else {
        return Err(CliError::Parse(format!("{}: kernel evaluation needs a decomposition scenario", s.origin)));
    };
    let mut opts = s.kernel_options(g.max_degree);
    if let Some(t) = g.tol {
        opts.tol = t;
    }
    let (dom, weight) = match role {
        "lhs" => (d.d1.clone(), d.omega1.clone()),
        "target" => (d.d2.clone(), d.omega2.clone()),
        r => {
            let i = r
                .strip_prefix("rhs:")
                .and_then(|i| i.parse::<usize>().ok())
                .filter(|&i| i < d.group.order)
                .ok_or_else(|| CliError::Parse(format!("role must be lhs, target or rhs:<0..{}>, got {r:?}", d.group.order)))?;
            (d.d2.clone(), d.eta(i)?)
        }
    };
    let (z, w) = parse_pair(at).map_err(CliError::Parse)?;
    for p in [&z, &w] {
        if p.n() != dom.n {
            return Err(CliError::Parse(format!("point has {} coordinates, expected {}", p.n(), dom.n)));
        }
    }
    let (k, src) = cache.get(&dom, &weight, &opts)?;
    eprintln!("kernel {}", if src == Source::Cached { "read from cache" } else { "built" });
    let v = k.eval(&z, &w)?;
    let text = format!(
        "B({}; {}) = {}\ndegree {}, tail {:e}, terms {}\nvalid on: {}\n",
        fmt_point(&z),
        fmt_point(&w),
        fmt_complex(v),
        k.truncation.degree,
        k.truncation.tail_bound,
        k.terms.len(),
        k.validity.describe()
    );
    let value = json!({
        "schema": verify::SCHEMA, "role": role, "z": fmt_point(&z), "w": fmt_point(&w),
        "value": [v.re, v.im], "truncation": k.truncation, "validity": k.validity.describe(),
    });
    emit(g, text, value)
}

fn write_file(path: &Path, f: impl FnOnce(&mut std::fs::File) -> CliResult<()>) -> CliResult<()> {
    let mut file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    f(&mut file)
}

fn verify_cmd(g: &Global, cache: &KernelCache, s: &Scenario, out: &ReportArgs) -> CliResult<ExitCode> {
    let ov = Overrides { tol: g.tol, seed: g.seed, max_degree: g.max_degree };
    let report = verify::run(s, cache, &ov)?;
    if let Some(p) = &out.report {
        write_file(p, |f| {
            serde_json::to_writer_pretty(&mut *f, &report).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(f).map_err(|e| CliError::Io(e.to_string()))
        })?;
    }
    if let Some(p) = &out.csv {
        write_file(p, |f| verify::write_csv(&report, f))?;
    }
    let value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    emit(g, verify::summary(&report), value)?;
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
