//! Runs the checks of a scenario and assembles the JSON and CSV reports.

use num_complex::Complex64;
use serde::Serialize;

use bergdecomp::bergman::{KernelOptions, KernelSeries, Truncation};
use bergdecomp::identities::{
    bell_fiber_residual, corollary_inequality, decomposition_residual, diagonal_residual, monomial_ball_estimate, DecompositionScenario,
    MappingReport, ScenarioKernels,
};
use bergdecomp::laurent::LaurentPolynomial;
use bergdecomp::monomial::{eval_phi, ComplexPoint};
use bergdecomp::projection::{norm_identity_residual, SampledFunction};
use bergdecomp::rational::fmt_q;
use bergdecomp::Error as CoreError;

use crate::cache::KernelCache;
use crate::error::{CliError, CliResult};
use crate::parse::{fmt_complex, fmt_point};
use crate::scenario::{Body, Check, Kind, MonomialBallSpec, Scenario};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub max_degree: Option<i64>,
}

#[derive(Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub timestamp: String,
    pub scenario: ScenarioInfo,
    pub settings: Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupInfo>,
    pub kernels: Vec<KernelInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingReport>,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub monomial_ball: Vec<BallCase>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub source: String,
    pub sha256: String,
    pub kind: Kind,
}

#[derive(Serialize)]
pub struct Settings {
    pub mode: bergdecomp::identities::Mode,
    pub kernel_tol: f64,
    pub quad_tol: f64,
    pub residual_tol: f64,
    pub seed: u64,
    pub max_degree: i64,
    pub norm_method: bergdecomp::bergman::NormMethod,
}

#[derive(Serialize)]
pub struct GroupInfo {
    pub order: usize,
    pub invariant_factors: Vec<String>,
    pub characters: Vec<CharacterInfo>,
}

#[derive(Serialize)]
pub struct CharacterInfo {
    pub index: usize,
    pub b: Vec<String>,
    pub eta_mu: Vec<String>,
    pub eta_scale: String,
}

#[derive(Serialize)]
pub struct KernelInfo {
    pub role: String,
    pub weight_mu: Vec<String>,
    pub terms: usize,
    pub truncation: Truncation,
    pub validity: String,
}

impl KernelInfo {
    fn of(role: impl Into<String>, k: &KernelSeries) -> Self {
        Self {
            role: role.into(),
            weight_mu: k.weight.mu.iter().map(fmt_q).collect(),
            terms: k.terms.len(),
            truncation: k.truncation.clone(),
            validity: k.validity.describe(),
        }
    }
}

#[derive(Serialize)]
pub struct CheckResult {
    pub check: Check,
    /// What a row must satisfy.
    pub criterion: String,
    pub passed: bool,
    /// Largest residual; for the inequality, the smallest relative slack.
    pub worst: f64,
    pub rows: Vec<Row>,
}

#[derive(Serialize, Clone)]
pub struct Row {
    pub point: String,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub terms: Vec<Complex64>,
    pub residual: f64,
    pub ok: bool,
    /// Quadrature error estimates of the two sides, when integrals are involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_error: Option<[f64; 2]>,
}

#[derive(Serialize, Clone)]
pub struct BallCase {
    pub delta: [String; 3],
    pub product_model: f64,
    pub pullback: f64,
    pub reference: f64,
    pub ratio: f64,
    pub doubled_pullback: f64,
    pub change_factor: f64,
    pub passed: bool,
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn finish(check: Check, criterion: String, rows: Vec<Row>) -> CheckResult {
    let worst = if check == Check::Inequality {
        rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min)
    } else {
        rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    };
    CheckResult { check, criterion, passed: rows.iter().all(|r| r.ok), worst, rows }
}

pub fn run(s: &Scenario, cache: &KernelCache, ov: &Overrides) -> CliResult<Report> {
    let mut tolerances = s.tolerances.clone();
    if let Some(t) = ov.tol {
        tolerances.kernel_tol = t;
    }
    let seed = ov.seed.unwrap_or(s.points.seed);
    let opts = {
        let mut o = s.kernel_options(ov.max_degree);
        o.tol = tolerances.kernel_tol;
        o
    };
    let mut report = Report {
        schema: SCHEMA,
        tool: "bergdecomp",
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        scenario: ScenarioInfo { name: s.name.clone(), source: s.origin.clone(), sha256: s.sha256.clone(), kind: s.kind },
        settings: Settings {
            mode: s.mode,
            kernel_tol: tolerances.kernel_tol,
            quad_tol: tolerances.quad_tol,
            residual_tol: tolerances.residual_tol,
            seed,
            max_degree: opts.max_degree,
            norm_method: opts.method,
        },
        group: None,
        kernels: Vec::new(),
        mapping: None,
        checks: Vec::new(),
        monomial_ball: Vec::new(),
        passed: false,
    };
    match &s.body {
        Body::MonomialBall(spec) => run_ball(spec, &opts, &mut report)?,
        Body::Decomposition(d) => run_decomposition(s, d, cache, &opts, seed, tolerances.residual_tol, &mut report)?,
    }
    report.passed = report.checks.iter().all(|c| c.passed)
        && report.mapping.as_ref().is_none_or(|m| m.passed())
        && report.monomial_ball.iter().all(|c| c.passed);
    Ok(report)
}

fn run_ball(spec: &MonomialBallSpec, opts: &KernelOptions, report: &mut Report) -> CliResult<()> {
    let two = bergdecomp::rational::qi(2);
    for case in &spec.cases {
        let [d1, d2, d3] = [&case.0[0], &case.0[1], &case.0[2]];
        let base = monomial_ball_estimate([d1, d2, d3], opts)?;
        let doubled = monomial_ball_estimate([&(d1 * &two), d2, d3], opts)?;
        let change = base.pullback.max(doubled.pullback) / base.pullback.min(doubled.pullback);
        let [rlo, rhi] = spec.ratio_band;
        let [clo, chi] = spec.doubling_band;
        report.monomial_ball.push(BallCase {
            passed: (rlo..=rhi).contains(&base.ratio) && (clo..=chi).contains(&change),
            delta: base.delta,
            product_model: base.product_model,
            pullback: base.pullback,
            reference: base.reference,
            ratio: base.ratio,
            doubled_pullback: doubled.pullback,
            change_factor: change,
        });
    }
    Ok(())
}

/// Kernels for a decomposition scenario, fetched through the cache.
pub fn scenario_kernels(d: &DecompositionScenario, cache: &KernelCache, opts: &KernelOptions) -> CliResult<ScenarioKernels> {
    let lhs = cache.get(&d.d1, &d.omega1, opts)?.0;
    let rhs = (0..d.group.order)
        .map(|i| Ok(cache.get(&d.d2, &d.eta(i)?, opts)?.0))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(ScenarioKernels { lhs, rhs })
}

pub fn points(s: &Scenario, d: &DecompositionScenario, k: &ScenarioKernels, seed: u64) -> CliResult<Vec<ComplexPoint>> {
    if s.points.explicit.is_empty() {
        return Ok(d.sample_points(k, s.points.count, seed, s.points.scale)?);
    }
    let pts = s.explicit_points();
    for z in &pts {
        if z.n() != d.a().n() {
            return Err(CliError::Parse(format!("point {} has {} coordinates, expected {}", fmt_point(z), z.n(), d.a().n())));
        }
        if !d.point_is_valid(k, z)? {
            return Err(CoreError::OutsideValidity(format!("{} not in [{}]", fmt_point(z), k.lhs.validity.describe())).into());
        }
    }
    Ok(pts)
}

fn run_decomposition(
    s: &Scenario,
    d: &DecompositionScenario,
    cache: &KernelCache,
    opts: &KernelOptions,
    seed: u64,
    tol: f64,
    report: &mut Report,
) -> CliResult<()> {
    report.group = Some(GroupInfo {
        order: d.group.order,
        invariant_factors: d.group.invariant_factors().iter().map(|x| x.to_string()).collect(),
        characters: (0..d.group.order)
            .map(|i| {
                let eta = d.eta(i)?;
                Ok(CharacterInfo {
                    index: i,
                    b: d.b_choices[i].iter().map(|x| x.to_string()).collect(),
                    eta_mu: eta.mu.iter().map(fmt_q).collect(),
                    eta_scale: fmt_q(&eta.scale),
                })
            })
            .collect::<CliResult<_>>()?,
    });
    report.mapping = Some(d.validate_mapping(500, seed)?);
    let k = scenario_kernels(d, cache, opts)?;
    report.kernels.push(KernelInfo::of("lhs", &k.lhs));
    for (i, r) in k.rhs.iter().enumerate() {
        report.kernels.push(KernelInfo::of(format!("rhs[{i}]"), r));
    }
    let pts = points(s, d, &k, seed)?;
    let pair = |i: usize| (&pts[i], &pts[(i + 1) % pts.len()]);
    for check in &s.checks {
        let result = match check {
            Check::Decomposition => {
                let rows = (0..pts.len())
                    .map(|i| {
                        let (z, w) = pair(i);
                        let r = decomposition_residual(d, &k, z, w)?;
                        Ok(Row {
                            point: format!("{};{}", fmt_point(z), fmt_point(w)),
                            lhs: r.lhs,
                            rhs: r.rhs,
                            terms: r.terms,
                            residual: r.residual,
                            ok: r.residual < tol,
                            quad_error: None,
                        })
                    })
                    .collect::<CliResult<_>>()?;
                finish(*check, format!("|LHS - RHS| / |LHS| < {tol:e}"), rows)
            }
            Check::Diagonal => {
                let rows = pts
                    .iter()
                    .map(|z| {
                        let r = diagonal_residual(d, &k, z)?;
                        Ok(Row {
                            point: fmt_point(z),
                            lhs: real(r.lhs),
                            rhs: real(r.rhs),
                            terms: r.terms.iter().map(|&t| real(t)).collect(),
                            residual: r.residual,
                            ok: r.residual < tol && r.terms_nonnegative,
                            quad_error: None,
                        })
                    })
                    .collect::<CliResult<_>>()?;
                finish(*check, format!("relative residual < {tol:e} and every term >= 0"), rows)
            }
            Check::Bell => {
                let (k2, _) = cache.get(&d.d2, &d.omega2, opts)?;
                report.kernels.push(KernelInfo::of("target", &k2));
                let rows = (0..pts.len())
                    .map(|i| {
                        let (z, y) = pair(i);
                        let v = eval_phi(d.a(), y)?;
                        let r = bell_fiber_residual(&d.group, &k2, &k.lhs, z, &v)?;
                        Ok(Row {
                            point: format!("{};{}", fmt_point(z), fmt_point(&v)),
                            lhs: r.lhs,
                            rhs: r.rhs,
                            terms: Vec::new(),
                            residual: r.residual,
                            ok: r.residual < tol,
                            quad_error: None,
                        })
                    })
                    .collect::<CliResult<_>>()?;
                finish(*check, format!("|LHS - RHS| / |LHS| < {tol:e}"), rows)
            }
            Check::Inequality => {
                let (full, _) = cache.get(&d.d1.with_axes_deleted(false), &d.omega1, opts)?;
                report.kernels.push(KernelInfo::of("full-lhs", &full));
                let rows = pts
                    .iter()
                    .map(|z| {
                        let r = corollary_inequality(d, &full, &k, z)?;
                        Ok(Row {
                            point: fmt_point(z),
                            lhs: real(r.lhs),
                            rhs: real(r.rhs),
                            terms: Vec::new(),
                            residual: r.relative_slack,
                            ok: r.holds && r.relative_slack > tol,
                            quad_error: None,
                        })
                    })
                    .collect::<CliResult<_>>()?;
                finish(*check, format!("relative slack (RHS - LHS) / RHS > {tol:e}"), rows)
            }
            Check::NormIdentity => {
                let tf = &s.test_function;
                let poly = LaurentPolynomial::random_polynomial(d.a().n(), tf.terms, tf.degree, tf.seed);
                let f = SampledFunction::from_laurent(d.d1.clone(), poly);
                let quad = s.quadrature();
                let rows = (0..d.group.order)
                    .map(|i| {
                        let r = norm_identity_residual(&d.group, &d.b_choices[i], &f, &d.omega1, &d.d1, &d.d2, &d.omega2, &quad)?;
                        Ok(Row {
                            point: format!("chi[{i}]"),
                            lhs: real(r.lhs),
                            rhs: real(r.rhs),
                            terms: Vec::new(),
                            residual: r.residual,
                            ok: r.residual < tol,
                            quad_error: Some([r.lhs_error, r.rhs_error]),
                        })
                    })
                    .collect::<CliResult<_>>()?;
                finish(*check, format!("relative difference of squared norms < {tol:e}"), rows)
            }
        };
        report.checks.push(result);
    }
    Ok(())
}

/// Residual table: `check, point, lhs, rhs, term_0.., residual`, or the
/// per-case table of a monomial-ball scenario.
pub fn write_csv<W: std::io::Write>(report: &Report, out: W) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let err = |e: csv::Error| CliError::Io(e.to_string());
    if report.scenario.kind == Kind::MonomialBall {
        w.write_record(["delta", "product_model", "pullback", "reference", "ratio", "doubled_pullback", "change_factor", "passed"]).map_err(err)?;
        for c in &report.monomial_ball {
            w.write_record([
                c.delta.join(" "),
                format!("{:e}", c.product_model),
                format!("{:e}", c.pullback),
                format!("{:e}", c.reference),
                format!("{:e}", c.ratio),
                format!("{:e}", c.doubled_pullback),
                format!("{:e}", c.change_factor),
                c.passed.to_string(),
            ])
            .map_err(err)?;
        }
    } else {
        let width = report.checks.iter().flat_map(|c| &c.rows).map(|r| r.terms.len()).max().unwrap_or(0);
        let mut header = vec!["check".to_string(), "point".into(), "lhs".into(), "rhs".into()];
        header.extend((0..width).map(|i| format!("term_{i}")));
        header.push("residual".into());
        w.write_record(&header).map_err(err)?;
        for c in &report.checks {
            let name = serde_json::to_value(c.check).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            for r in &c.rows {
                let mut rec = vec![name.clone(), r.point.clone(), fmt_complex(r.lhs), fmt_complex(r.rhs)];
                rec.extend((0..width).map(|i| r.terms.get(i).map_or(String::new(), |t| fmt_complex(*t))));
                rec.push(format!("{:e}", r.residual));
                w.write_record(&rec).map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Short human-readable summary.
pub fn summary(report: &Report) -> String {
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let mut out = format!("scenario {} (sha256 {})\n", report.scenario.name, &report.scenario.sha256[..12]);
    if let Some(g) = &report.group {
        out.push_str(&format!("  group order {}, invariant factors [{}]\n", g.order, g.invariant_factors.join(", ")));
    }
    for k in &report.kernels {
        out.push_str(&format!(
            "  kernel {}: {} terms, degree {}, tail {:.1e}\n",
            k.role, k.terms, k.truncation.degree, k.truncation.tail_bound
        ));
    }
    if let Some(m) = &report.mapping {
        out.push_str(&format!(
            "  mapping: {} ({} forward, {} fiber samples)\n",
            mark(m.passed()),
            m.forward_checked,
            m.backward_checked
        ));
        for f in &m.failures {
            out.push_str(&format!("    {f}\n"));
        }
    }
    for c in &report.checks {
        let name = serde_json::to_value(c.check).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let label = if c.check == Check::Inequality { "min" } else { "max" };
        out.push_str(&format!("  {name}: {} {label} {:.2e} over {} rows ({})\n", mark(c.passed), c.worst, c.rows.len(), c.criterion));
    }
    for c in &report.monomial_ball {
        out.push_str(&format!(
            "  delta ({}): {} ratio {:.3}, doubling factor {:.3}\n",
            c.delta.join(", "),
            mark(c.passed),
            c.ratio,
            c.change_factor
        ));
    }
    out.push_str(mark(report.passed));
    out.push('\n');
    out
}
