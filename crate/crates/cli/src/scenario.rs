//! Declarative scenario files.
//!
//! ```toml
//! name = "disk_z2"
//! matrix = [[2]]
//! mode = "full-domains"
//! domain1 = { type = "disk" }
//! domain2 = { type = "disk" }
//! weight2 = { mu = ["0"], scale = "1" }
//! checks = ["decomposition", "diagonal", "bell"]
//!
//! [points]
//! count = 100
//! seed = 2024
//! scale = 0.7
//!
//! [tolerances]
//! kernel_tol = 1e-12
//! residual_tol = 1e-8
//! ```
//!
//! Exact quantities (radii, powers, weight exponents) are `"p/q"` strings or
//! integers so that they survive parsing exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use bergdecomp::bergman::{KernelOptions, NormMethod};
use bergdecomp::domains::{MonomialConstraint, RadialFactor, ReinhardtDomain, WeightSpec};
use bergdecomp::identities::{DecompositionScenario, Mode};
use bergdecomp::intlin::IntMatrix;
use bergdecomp::monomial::ComplexPoint;
use bergdecomp::quadrature::QuadratureSpec;
use bergdecomp::rational::{serde_q, serde_qvec, Q};

use crate::error::{CliError, CliResult};
use crate::parse::parse_point;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    #[default]
    Decomposition,
    MonomialBall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Off-diagonal identity at pairs of sample points.
    Decomposition,
    /// Diagonal identity, including nonnegativity of every term.
    Diagonal,
    /// Transformation rule of the kernel under the proper map.
    Bell,
    /// Full-domain diagonal strictly below the axes-deleted sum.
    Inequality,
    /// `‖Π_χ f‖ = ‖T_b f‖` by quadrature for a seeded polynomial `f`.
    NormIdentity,
}

fn default_checks() -> Vec<Check> {
    vec![Check::Decomposition, Check::Diagonal]
}

fn one() -> Q {
    Q::from_integer(1.into())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disk {
        #[serde(with = "serde_q", default = "one")]
        radius: Q,
    },
    Annulus {
        #[serde(with = "serde_q")]
        inner: Q,
        #[serde(with = "serde_q", default = "one")]
        outer: Q,
    },
    Polydisk {
        n: usize,
    },
    Ball {
        n: usize,
    },
    Ellipsoid {
        #[serde(with = "serde_qvec")]
        powers: Vec<Q>,
    },
    Hartogs {
        p: i64,
        q: i64,
    },
    Product {
        factors: Vec<RadialFactor>,
    },
    MonomialRegion {
        constraints: Vec<MonomialConstraint>,
    },
}

impl DomainSpec {
    pub fn build(&self) -> bergdecomp::Result<ReinhardtDomain> {
        Ok(match self {
            DomainSpec::Disk { radius } => ReinhardtDomain::product(vec![RadialFactor::Disk { radius: radius.clone() }])?,
            DomainSpec::Annulus { inner, outer } => ReinhardtDomain::annulus(inner.clone(), outer.clone())?,
            DomainSpec::Polydisk { n } => ReinhardtDomain::polydisk(*n),
            DomainSpec::Ball { n } => ReinhardtDomain::ball(*n),
            DomainSpec::Ellipsoid { powers } => ReinhardtDomain::ellipsoid(powers.clone())?,
            DomainSpec::Hartogs { p, q } => ReinhardtDomain::hartogs(*p, *q)?,
            DomainSpec::Product { factors } => ReinhardtDomain::product(factors.clone())?,
            DomainSpec::MonomialRegion { constraints } => ReinhardtDomain::monomial_region(constraints.clone())?,
        })
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PointsSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    /// Coordinates as `"a+bi,c+di"`; replaces sampling when present.
    #[serde(default)]
    pub explicit: Vec<String>,
}

fn default_count() -> usize {
    20
}

fn default_scale() -> f64 {
    0.7
}

impl Default for PointsSpec {
    fn default() -> Self {
        Self { count: default_count(), seed: 0, scale: default_scale(), explicit: Vec::new() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub kernel_tol: f64,
    pub quad_tol: f64,
    pub residual_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { kernel_tol: 1e-10, quad_tol: 1e-8, residual_tol: 1e-8 }
    }
}

/// Seeded polynomial for the norm identity.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TestFunction {
    pub terms: usize,
    pub degree: i64,
    pub seed: u64,
    pub points_per_axis: usize,
    pub angular_points: usize,
}

impl Default for TestFunction {
    fn default() -> Self {
        Self { terms: 8, degree: 4, seed: 6, points_per_axis: 16, angular_points: 12 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct Deltas(#[serde(with = "serde_qvec")] pub Vec<Q>);

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonomialBallSpec {
    /// `[δ₁, δ₂, δ₃]` per case; each case is also run with `δ₁` doubled.
    pub cases: Vec<Deltas>,
    #[serde(default = "ratio_band")]
    pub ratio_band: [f64; 2],
    #[serde(default = "doubling_band")]
    pub doubling_band: [f64; 2],
}

fn ratio_band() -> [f64; 2] {
    [0.02, 50.0]
}

fn doubling_band() -> [f64; 2] {
    [1.2, 4.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    kind: Kind,
    matrix: Option<Vec<Vec<i64>>>,
    domain1: Option<DomainSpec>,
    domain2: Option<DomainSpec>,
    weight2: Option<WeightSpec>,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    norm_method: NormMethod,
    #[serde(default = "default_checks")]
    checks: Vec<Check>,
    #[serde(default)]
    points: PointsSpec,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    b_overrides: BTreeMap<String, Vec<i64>>,
    #[serde(default)]
    test_function: TestFunction,
    monomial_ball: Option<MonomialBallSpec>,
}

pub enum Body {
    Decomposition(Box<DecompositionScenario>),
    MonomialBall(MonomialBallSpec),
}

pub struct Scenario {
    pub name: String,
    pub origin: String,
    /// Hex SHA-256 of the file text.
    pub sha256: String,
    pub kind: Kind,
    pub mode: Mode,
    pub norm_method: NormMethod,
    pub checks: Vec<Check>,
    pub points: PointsSpec,
    pub tolerances: Tolerances,
    pub test_function: TestFunction,
    pub body: Body,
}

/// Line of the first `key = …` assignment or `[key]` header, for diagnostics.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        let header = t.strip_prefix('[').map(|r| r.trim_start_matches('[').trim_start());
        let assigned = t.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='));
        assigned || header.is_some_and(|h| h.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with([']', '.'])))
    })
    .map(|i| i + 1)
}

impl Scenario {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let anchored = |key: &str, msg: String| {
            let at = line_of(text, key).map_or(String::new(), |l| format!(", line {l}"));
            CliError::Parse(format!("{origin}{at}: {key}: {msg}"))
        };
        let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Parse(format!("{origin}: {}", e.to_string().trim_end())))?;
        let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        for (i, p) in raw.points.explicit.iter().enumerate() {
            parse_point(p).map_err(|e| anchored("explicit", format!("point {i}: {e}")))?;
        }
        if raw.points.explicit.is_empty() && raw.points.count == 0 {
            return Err(anchored("count", "at least one point is required".into()));
        }
        let t = &raw.tolerances;
        for (k, v) in [("kernel_tol", t.kernel_tol), ("quad_tol", t.quad_tol), ("residual_tol", t.residual_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(anchored(k, format!("must be positive, got {v}")));
            }
        }
        let body = match raw.kind {
            Kind::MonomialBall => {
                let spec = raw.monomial_ball.clone().ok_or_else(|| anchored("kind", "missing [monomial_ball] table".into()))?;
                if spec.cases.is_empty() {
                    return Err(anchored("monomial_ball", "no cases".into()));
                }
                if let Some(c) = spec.cases.iter().find(|c| c.0.len() != 3) {
                    return Err(anchored("cases", format!("each case needs three entries, got {}", c.0.len())));
                }
                Body::MonomialBall(spec)
            }
            Kind::Decomposition => {
                let rows = raw.matrix.as_ref().ok_or_else(|| anchored("name", "missing matrix".into()))?;
                let a = IntMatrix::from_i64(rows).map_err(|e| anchored("matrix", e.to_string()))?;
                let dom = |key: &str, d: &Option<DomainSpec>| -> CliResult<ReinhardtDomain> {
                    let spec = d.as_ref().ok_or_else(|| anchored("name", format!("missing {key}")))?;
                    spec.build().map_err(|e| anchored(key, e.to_string()))
                };
                let d1 = dom("domain1", &raw.domain1)?;
                let d2 = dom("domain2", &raw.domain2)?;
                let omega2 = raw.weight2.clone().unwrap_or_else(|| WeightSpec::unit(a.n()));
                if omega2.n() != a.n() {
                    return Err(anchored("weight2", format!("expected {} exponents, got {}", a.n(), omega2.n())));
                }
                let mut overrides = BTreeMap::new();
                for (k, b) in &raw.b_overrides {
                    let i: usize = k.parse().map_err(|_| anchored("b_overrides", format!("key {k:?} is not a character index")))?;
                    overrides.insert(i, b.clone());
                }
                let s = DecompositionScenario::new(&a, d1, d2, omega2, raw.mode, &overrides).map_err(|e| match e {
                    bergdecomp::Error::GroupTooLarge { .. } => CliError::Core(e),
                    bergdecomp::Error::Dimension { .. } => anchored("domain1", e.to_string()),
                    e if !overrides.is_empty() && e.to_string().contains("represent") => anchored("b_overrides", e.to_string()),
                    e => anchored("mode", e.to_string()),
                })?;
                if raw.checks.contains(&Check::Inequality) && raw.mode != Mode::AxesDeleted {
                    return Err(anchored("checks", "the inequality check needs mode = \"axes-deleted\"".into()));
                }
                Body::Decomposition(Box::new(s))
            }
        };
        Ok(Self {
            name: raw.name,
            origin: origin.to_string(),
            sha256,
            kind: raw.kind,
            mode: raw.mode,
            norm_method: raw.norm_method,
            checks: raw.checks,
            points: raw.points,
            tolerances: raw.tolerances,
            test_function: raw.test_function,
            body,
        })
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn kernel_options(&self, max_degree: Option<i64>) -> KernelOptions {
        let mut o = KernelOptions::with_tol(self.tolerances.kernel_tol);
        o.method = self.norm_method;
        o.quadrature.refinement_tol = self.tolerances.quad_tol;
        if let Some(d) = max_degree {
            o.max_degree = d;
        }
        o
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            points_per_axis: self.test_function.points_per_axis,
            refinement_tol: self.tolerances.quad_tol,
            angular_points: self.test_function.angular_points,
            ..QuadratureSpec::default()
        }
    }

    pub fn explicit_points(&self) -> Vec<ComplexPoint> {
        self.points.explicit.iter().filter_map(|p| parse_point(p).ok()).collect()
    }
}
