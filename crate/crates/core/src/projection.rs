//! Character projections `Π_χ` and the transport operator `T_b`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::Serialize;

use crate::domains::{eta_weight, ReinhardtDomain, WeightSpec};
use crate::group::{CosetRep, GroupData};
use crate::intlin::check_len;
use crate::laurent::LaurentPolynomial;
use crate::monomial::{eval_f_int, principal_preimage, ComplexPoint};
use crate::quadrature::{integrate_domain, QuadratureSpec};
use crate::{Error, Result};

pub type Evaluator = Arc<dyn Fn(&ComplexPoint) -> Result<Complex64> + Send + Sync>;

/// A black-box function on a domain. The evaluator must accept every
/// off-axes point of the domain and its orbit under the deck group.
#[derive(Clone)]
pub struct SampledFunction {
    pub evaluator: Evaluator,
    pub domain: ReinhardtDomain,
}

impl std::fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledFunction").field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl SampledFunction {
    pub fn new(domain: ReinhardtDomain, f: impl Fn(&ComplexPoint) -> Result<Complex64> + Send + Sync + 'static) -> Self {
        Self { evaluator: Arc::new(f), domain }
    }

    pub fn from_laurent(domain: ReinhardtDomain, p: LaurentPolynomial) -> Self {
        Self::new(domain, move |z| p.eval(z))
    }

    pub fn zero(domain: ReinhardtDomain) -> Self {
        Self::new(domain, |_| Ok(Complex64::new(0.0, 0.0)))
    }

    pub fn eval(&self, z: &ComplexPoint) -> Result<Complex64> {
        (self.evaluator)(z)
    }
}

/// Group data converted to floating phases once, for repeated projections.
pub struct Projector<'a> {
    pub g: &'a GroupData,
    actions: Vec<Vec<Complex64>>,
}

impl<'a> Projector<'a> {
    pub fn new(g: &'a GroupData) -> Self {
        Self { g, actions: g.action_phases() }
    }

    /// `χ_b([m])` for every representative `m` of `𝔾_A`.
    pub fn character_row(&self, b: &[BigInt]) -> Result<Vec<Complex64>> {
        self.g.reps_ga.iter().map(|m| Ok(self.g.character_value(b, &m.m)?.to_complex())).collect()
    }

    /// `f(ξ([m]) ⊗ z)` over the representatives.
    pub fn orbit_values(&self, f: &SampledFunction, z: &ComplexPoint) -> Result<Vec<Complex64>> {
        check_len(self.g.n(), z.n())?;
        if !z.is_off_axes() {
            return Err(Error::Domain("projections are evaluated at off-axes points".into()));
        }
        self.actions.iter().map(|xi| f.eval(&z.hadamard(xi))).collect()
    }

    pub fn project_row(&self, row: &[Complex64], f: &SampledFunction, z: &ComplexPoint) -> Result<Complex64> {
        let vals = self.orbit_values(f, z)?;
        Ok(average(row, &vals))
    }

    pub fn project(&self, b: &[BigInt], f: &SampledFunction, z: &ComplexPoint) -> Result<Complex64> {
        self.project_row(&self.character_row(b)?, f, z)
    }

    /// `Π_{χ_b}[f](z_i)·F_b(z_i)` at the `i`-th point of the fiber over `w`.
    pub fn transport_via(&self, b: &[BigInt], row: &[Complex64], f: &SampledFunction, w: &ComplexPoint, i: usize) -> Result<Complex64> {
        let xi = self
            .actions
            .get(i)
            .ok_or_else(|| Error::Argument(format!("fiber index {i} out of range (order {})", self.g.order)))?;
        let z = principal_preimage(self.g, w)?.hadamard(xi);
        let bi = crate::domains::to_i64_vec(b)?;
        Ok(self.project_row(row, f, &z)? * eval_f_int(&bi, &z)?)
    }
}

fn average(row: &[Complex64], vals: &[Complex64]) -> Complex64 {
    let s: Complex64 = row.iter().zip(vals).map(|(c, v)| c * v).sum();
    s / row.len() as f64
}

/// `Π_χ[f](z) = (1/#𝔾_A) Σ_m χ([m]) f(ξ([m]) ⊗ z)`, with `chi` a representative in `𝔾_{Aᵗ}`.
pub fn project_chi(g: &GroupData, chi: &CosetRep, f: &SampledFunction, z: &ComplexPoint) -> Result<Complex64> {
    Projector::new(g).project(&chi.m, f, z)
}

/// `T_b[f](w)`, evaluated through the principal preimage of `w`.
pub fn transport_tb(g: &GroupData, b: &[BigInt], f: &SampledFunction, w: &ComplexPoint) -> Result<Complex64> {
    transport_tb_via(g, b, f, w, 0)
}

/// `T_b[f](w)` evaluated through the `i`-th fiber point; independent of `i`.
pub fn transport_tb_via(g: &GroupData, b: &[BigInt], f: &SampledFunction, w: &ComplexPoint, i: usize) -> Result<Complex64> {
    let p = Projector::new(g);
    p.transport_via(b, &p.character_row(b)?, f, w, i)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ProjectionReport {
    /// `|Σ_χ Π_χ f − f|`
    pub completeness: f64,
    /// `|Π_χ f(ξ(h)⊗z) − χ(h)⁻¹ Π_χ f(z)|`
    pub equivariance: f64,
    /// `|Π_{χ₁}Π_{χ₂} f − δ Π_{χ₁} f|`
    pub idempotence: f64,
    /// `|Π_{χ_b} f·F_b` at `ξ(h)⊗z` minus the same at `z|`
    pub invariance: f64,
    pub max_deviation: f64,
    pub points: usize,
}

/// Deviations are relative to `max(1, max |f|)` over the orbits visited.
pub fn check_projection_algebra(g: &GroupData, f: &SampledFunction, points: &[ComplexPoint]) -> Result<ProjectionReport> {
    let p = Projector::new(g);
    let nn = g.order;
    let table: Vec<Vec<Complex64>> = g.character_table().iter().map(|r| r.iter().map(|x| x.to_complex()).collect()).collect();
    let bs: Vec<Vec<i64>> = g.reps_gat_i64();
    let mut rep = ProjectionReport { points: points.len(), ..Default::default() };
    for z in points {
        let base = p.orbit_values(f, z)?;
        // shifted[h][m] = f(ξ(m) ⊗ ξ(h) ⊗ z)
        let shifted: Vec<Vec<Complex64>> = p.actions.iter().map(|xi| p.orbit_values(f, &z.hadamard(xi))).collect::<Result<_>>()?;
        let scale = base.iter().chain(shifted.iter().flatten()).map(|v| v.norm()).fold(1.0, f64::max);
        let fz = f.eval(z)?;
        let p0: Vec<Complex64> = table.iter().map(|row| average(row, &base)).collect();
        let ph: Vec<Vec<Complex64>> = table.iter().map(|row| shifted.iter().map(|v| average(row, v)).collect()).collect();

        let total: Complex64 = p0.iter().sum();
        rep.completeness = rep.completeness.max((total - fz).norm() / scale);
        for c in 0..nn {
            let fb0 = eval_f_int(&bs[c], z)?;
            for h in 0..nn {
                let dev = (ph[c][h] - table[c][h].conj() * p0[c]).norm() / scale;
                rep.equivariance = rep.equivariance.max(dev);
                let zh = z.hadamard(&p.actions[h]);
                let dev = (ph[c][h] * eval_f_int(&bs[c], &zh)? - p0[c] * fb0).norm() / (scale * fb0.norm().max(1.0));
                rep.invariance = rep.invariance.max(dev);
            }
            for c2 in 0..nn {
                let twice = average(&table[c], &ph[c2]);
                let want = if c == c2 { p0[c] } else { Complex64::new(0.0, 0.0) };
                rep.idempotence = rep.idempotence.max((twice - want).norm() / scale);
            }
        }
    }
    rep.max_deviation = rep.completeness.max(rep.equivariance).max(rep.idempotence).max(rep.invariance);
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormIdentityReport {
    /// `∫_{D1} |Π_χ f|² ω₁ dV`
    pub lhs: f64,
    /// `∫_{D2} |T_b f|² η_b dV`
    pub rhs: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    pub residual: f64,
}

/// Both sides of the norm identity `‖Π_χ f‖_{ω₁} = ‖T_b f‖_{η_b}` by quadrature.
#[allow(clippy::too_many_arguments)]
pub fn norm_identity_residual(
    g: &GroupData,
    b: &[BigInt],
    f: &SampledFunction,
    omega1: &WeightSpec,
    d1: &ReinhardtDomain,
    d2: &ReinhardtDomain,
    omega2: &WeightSpec,
    quad: &QuadratureSpec,
) -> Result<NormIdentityReport> {
    let expected = crate::domains::pullback_weight(omega2, &g.a)?;
    if expected.mu != omega1.mu {
        return Err(Error::Argument("omega1 must be the pullback omega2 ∘ Φ_A".into()));
    }
    let p = Projector::new(g);
    let row = p.character_row(b)?;
    let eta = eta_weight(b, &g.a, omega2)?;
    // Errors are judged against ‖f‖², so a vanishing component still terminates.
    let full = integrate_domain(d1, &|z| Ok(f.eval(z)?.norm_sqr() * omega1.eval(z)), quad)?.value;
    let quad = &QuadratureSpec { absolute_tol: quad.absolute_tol.max(quad.refinement_tol * full), ..quad.clone() };
    let lhs = integrate_domain(d1, &|z| Ok(p.project_row(&row, f, z)?.norm_sqr() * omega1.eval(z)), quad)?;
    let rhs = integrate_domain(d2, &|w| Ok(p.transport_via(b, &row, f, w, 0)?.norm_sqr() * eta.eval(w)), quad)?;
    let denom = lhs.value.abs().max(rhs.value.abs());
    let residual = if denom == 0.0 { 0.0 } else { (lhs.value - rhs.value).abs() / denom };
    Ok(NormIdentityReport { lhs: lhs.value, rhs: rhs.value, lhs_error: lhs.error, rhs_error: rhs.error, residual })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParsevalReport {
    pub total: f64,
    pub parts: Vec<f64>,
    pub residual: f64,
}

/// `Σ_χ ‖Π_χ f‖² = ‖f‖²` in `L²(d, ω)`.
pub fn parseval_residual(g: &GroupData, f: &SampledFunction, d: &ReinhardtDomain, w: &WeightSpec, quad: &QuadratureSpec) -> Result<ParsevalReport> {
    let p = Projector::new(g);
    let total = integrate_domain(d, &|z| Ok(f.eval(z)?.norm_sqr() * w.eval(z)), quad)?.value;
    let quad = &QuadratureSpec { absolute_tol: quad.absolute_tol.max(quad.refinement_tol * total), ..quad.clone() };
    let parts: Vec<f64> = g
        .reps_gat
        .iter()
        .map(|chi| {
            let row = p.character_row(&chi.m)?;
            Ok(integrate_domain(d, &|z| Ok(p.project_row(&row, f, z)?.norm_sqr() * w.eval(z)), quad)?.value)
        })
        .collect::<Result<_>>()?;
    let sum: f64 = parts.iter().sum();
    let residual = if total == 0.0 { sum.abs() } else { (sum - total).abs() / total };
    Ok(ParsevalReport { total, parts, residual })
}
