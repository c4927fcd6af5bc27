//! Weighted Bergman kernels of Reinhardt domains as monomial series.
//!
//! On a Reinhardt domain the monomials `F_k` are orthogonal for any monomial
//! weight, so `B(z, w) = Σ_k F_k(z)·conj(F_k(w)) / ‖F_k‖²`. Norms are radial
//! integrals with closed forms for every supported shape; the series is
//! truncated on expanding shells `max_j |k_j| = s` until a geometric tail
//! estimate at probe points of the validity region falls below the tolerance.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::domains::{RadialFactor, ReinhardtDomain, Shape, WeightSpec};
use crate::intlin::{check_len, rational_inverse};
use crate::monomial::{cpowi, positive_power, ComplexPoint};
use crate::quadrature::{integrate_shadow, QuadratureSpec};
use crate::rational::{qi, rational_pow, serde_qopt, to_f64, Q};
use crate::{Error, Result};

use std::f64::consts::PI;

/// `‖F_k‖²`; `exact` holds the rational `q` with `‖F_k‖² = q·πⁿ` when one exists.
#[derive(Clone, Debug, PartialEq)]
pub enum NormValue {
    Finite { value: f64, exact: Option<Q> },
    Infinite,
}

impl NormValue {
    pub fn value(&self) -> f64 {
        match self {
            NormValue::Finite { value, .. } => *value,
            NormValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, NormValue::Finite { .. })
    }
}

/// `1/‖F_k‖²`; `exact` holds `q` with coefficient `q·π⁻ⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    #[serde(with = "serde_qopt", default)]
    pub exact: Option<Q>,
    pub value: f64,
}

impl Coefficient {
    /// Exact when both sides are exact, bitwise on the floating value otherwise.
    pub fn same_as(&self, o: &Coefficient) -> bool {
        match (&self.exact, &o.exact) {
            (Some(a), Some(b)) => a == b,
            (None, None) => self.value.to_bits() == o.value.to_bits(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub k: Vec<i64>,
    pub coeff: Coefficient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    #[default]
    Analytic,
    Quadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityOptions {
    /// Evaluation is allowed up to `shrink` times the outer size along each direction.
    pub shrink: f64,
    /// Relative distance kept from an axis when the series has negative powers there.
    pub floor: f64,
}

impl Default for ValidityOptions {
    fn default() -> Self {
        Self { shrink: 0.8, floor: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub tol: f64,
    pub max_degree: i64,
    pub min_degree: i64,
    pub validity: ValidityOptions,
    pub method: NormMethod,
    pub quadrature: QuadratureSpec,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_degree: 200,
            min_degree: 3,
            validity: ValidityOptions::default(),
            method: NormMethod::Analytic,
            quadrature: QuadratureSpec { refinement_tol: 1e-12, ..QuadratureSpec::default() },
        }
    }
}

impl KernelOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Compact region where the truncated series is trusted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ValidityRegion {
    /// `lower_j ≤ |z_j| ≤ upper_j`
    Radial { lower: Vec<Option<f64>>, upper: Vec<f64> },
    /// `Σ (|z_j|/shrink)^{2p_j} ≤ 1` and `|z_j| ≥ lower_j`
    Ellipsoid { powers: Vec<f64>, shrink: f64, lower: Vec<Option<f64>> },
    /// `lower_j ≤ |F_{p_j}(z)| ≤ upper_j`
    Monomial { p: Vec<Vec<i64>>, lower: Vec<Option<f64>>, upper: Vec<f64> },
}

impl ValidityRegion {
    pub fn contains(&self, z: &ComplexPoint) -> bool {
        let r = z.moduli();
        let inside = |x: f64, lo: &Option<f64>, hi: f64| x <= hi && lo.is_none_or(|l| x >= l);
        match self {
            ValidityRegion::Radial { lower, upper } => (0..r.len()).all(|j| inside(r[j], &lower[j], upper[j])),
            ValidityRegion::Ellipsoid { powers, shrink, lower } => {
                let s: f64 = r.iter().zip(powers).map(|(x, p)| (x / shrink).powf(2.0 * p)).sum();
                s <= 1.0 && (0..r.len()).all(|j| lower[j].is_none_or(|l| r[j] >= l))
            }
            ValidityRegion::Monomial { p, lower, upper } => p.iter().enumerate().all(|(j, row)| {
                if r.iter().zip(row).any(|(&x, &e)| x == 0.0 && e < 0) {
                    return false;
                }
                let v: f64 = r.iter().zip(row).map(|(x, &e)| x.powi(e as i32)).product();
                inside(v, &lower[j], upper[j])
            }),
        }
    }

    pub fn describe(&self) -> String {
        let fmt_lo = |l: &Option<f64>| l.map_or("0".to_string(), |x| format!("{x}"));
        match self {
            ValidityRegion::Radial { lower, upper } => (0..upper.len())
                .map(|j| format!("{} <= |z{}| <= {}", fmt_lo(&lower[j]), j + 1, upper[j]))
                .collect::<Vec<_>>()
                .join(", "),
            ValidityRegion::Ellipsoid { powers, shrink, lower } => {
                let mut s = format!("sum (|z_j|/{shrink})^(2p_j) <= 1 with p = {powers:?}");
                for (j, l) in lower.iter().enumerate() {
                    if let Some(l) = l {
                        s.push_str(&format!(", |z{}| >= {l}", j + 1));
                    }
                }
                s
            }
            ValidityRegion::Monomial { p, lower, upper } => (0..upper.len())
                .map(|j| format!("{} <= |z^{:?}| <= {}", fmt_lo(&lower[j]), p[j], upper[j]))
                .collect::<Vec<_>>()
                .join(", "),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Outermost shell `max_j |k_j|` included.
    pub degree: i64,
    /// Estimated relative tail at the worst probe point.
    pub tail_bound: f64,
    pub tol: f64,
    pub probes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSeries {
    pub domain: ReinhardtDomain,
    pub weight: WeightSpec,
    pub terms: Vec<Term>,
    pub truncation: Truncation,
    pub validity: ValidityRegion,
}

/// Closed-form `‖F_k‖²_ω` over `d`.
pub fn monomial_norm(d: &ReinhardtDomain, w: &WeightSpec, k: &[i64]) -> Result<NormValue> {
    check_len(d.n, w.n())?;
    check_len(d.n, k.len())?;
    let n = d.n;
    // Integrand ∏ r_j^{a_j − 1} with a = 2k + 2μ + 2.
    let a: Vec<Q> = k.iter().zip(&w.mu).map(|(&k, m)| qi(2 * k + 2) + m * qi(2)).collect();
    let pre = &w.scale * qi(1 << n);
    let finish = |exact: Option<Q>, value: f64| {
        let pin = PI.powi(n as i32);
        match exact {
            Some(e) => NormValue::Finite { value: to_f64(&e) * pin, exact: Some(e) },
            None => NormValue::Finite { value: value * pin, exact: None },
        }
    };
    match &d.shape {
        Shape::Product { factors } => {
            let mut exact = Some(pre.clone());
            let mut value = to_f64(&pre);
            for (f, a) in factors.iter().zip(&a) {
                let (lo, hi) = (f.lower(), f.upper().clone());
                let Some((e, v)) = power_integral(&lo, &hi, a) else { return Ok(NormValue::Infinite) };
                exact = exact.zip(e).map(|(x, y)| x * y);
                value *= v;
            }
            Ok(finish(exact, value))
        }
        Shape::Ellipsoid { powers } => {
            // u_j = r_j^{2p_j} turns the region into the simplex: Dirichlet integral.
            let alpha: Vec<Q> = a.iter().zip(powers).map(|(a, p)| a / (p * qi(2))).collect();
            if alpha.iter().any(|x| !x.is_positive()) {
                return Ok(NormValue::Infinite);
            }
            let jac: Q = powers.iter().map(|p| (p * qi(2)).recip()).product();
            let total: Q = alpha.iter().sum();
            let exact = if alpha.iter().all(|x| x.is_integer()) {
                let num: BigInt = alpha.iter().map(|x| factorial(&(x.to_integer() - 1))).product();
                Some(&pre * &jac * Q::new(num, factorial(&total.to_integer())))
            } else {
                None
            };
            let lg: f64 = alpha.iter().map(|x| ln_gamma(to_f64(x))).sum::<f64>() - ln_gamma(1.0 + to_f64(&total));
            Ok(finish(exact, to_f64(&(&pre * &jac)) * lg.exp()))
        }
        Shape::MonomialRegion { constraints } => {
            // v = F_P(r): ∫ ∏ r^{a−1} dr = |det P|⁻¹ ∏ ∫ v_j^{β_j − 1} dv_j with β = a·P⁻¹.
            let pm = d.constraint_matrix().expect("validated at construction");
            let beta = rational_inverse(&pm).left_mul(&a);
            let mut exact = Some(&pre / Q::from_integer(pm.det().abs()));
            let mut value = to_f64(exact.as_ref().unwrap());
            for (c, b) in constraints.iter().zip(&beta) {
                let lo = c.lower.clone().unwrap_or_else(Q::zero);
                let Some((e, v)) = power_integral(&lo, &c.upper, b) else { return Ok(NormValue::Infinite) };
                exact = exact.zip(e).map(|(x, y)| x * y);
                value *= v;
            }
            Ok(finish(exact, value))
        }
    }
}

/// `∫_lo^hi x^{a−1} dx`, with an exact value when it is rational; `None` if divergent.
fn power_integral(lo: &Q, hi: &Q, a: &Q) -> Option<(Option<Q>, f64)> {
    if lo.is_zero() {
        if !a.is_positive() {
            return None;
        }
        let e = rational_pow(hi, a).map(|p| p / a);
        return Some((e, to_f64(hi).powf(to_f64(a)) / to_f64(a)));
    }
    if a.is_zero() {
        return Some((None, (to_f64(hi) / to_f64(lo)).ln()));
    }
    let e = rational_pow(hi, a).zip(rational_pow(lo, a)).map(|(h, l)| (h - l) / a);
    let af = to_f64(a);
    Some((e, (to_f64(hi).powf(af) - to_f64(lo).powf(af)) / af))
}

fn factorial(n: &BigInt) -> BigInt {
    let n = n.to_u64().expect("small factorial argument");
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// `‖F_k‖²_ω` by adaptive quadrature over the radial shadow. Divergence is
/// decided by the exponent conditions, never by the quadrature itself.
pub fn monomial_norm_quadrature(d: &ReinhardtDomain, w: &WeightSpec, k: &[i64], q: &QuadratureSpec) -> Result<NormValue> {
    if !monomial_norm(d, w, k)?.is_finite() {
        return Ok(NormValue::Infinite);
    }
    let a: Vec<f64> = k.iter().zip(w.mu_f64()).map(|(&k, m)| 2.0 * k as f64 + 2.0 * m + 1.0).collect();
    let g = |r: &[f64]| Ok(positive_power(r, &a));
    let est = integrate_shadow(d, &g, q)?;
    let pre = to_f64(&w.scale) * (2.0 * PI).powi(d.n as i32);
    Ok(NormValue::Finite { value: pre * est.value, exact: None })
}

/// Lattice points with `max_j |k_j| = s`, lexicographic.
pub fn shell(n: usize, s: i64) -> Vec<Vec<i64>> {
    fn rec(n: usize, s: i64, attained: bool, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == n {
            if attained {
                out.push(prefix.clone());
            }
            return;
        }
        let last = prefix.len() + 1 == n;
        for x in -s..=s {
            let hit = x.abs() == s;
            if last && !attained && !hit {
                continue;
            }
            prefix.push(x);
            rec(n, s, attained || hit, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, s, false, &mut Vec::new(), &mut out);
    out
}

/// Positive radial probe points on the boundary of the validity region.
fn probe_points(d: &ReinhardtDomain, v: &ValidityOptions) -> Vec<Vec<f64>> {
    let corners = |ranges: &[(f64, f64)]| -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for &(lo, hi) in ranges {
            out = out
                .into_iter()
                .flat_map(|p: Vec<f64>| {
                    [lo, hi].into_iter().map(move |x| {
                        let mut p = p.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        out
    };
    match &d.shape {
        Shape::Product { factors } => {
            let ranges: Vec<(f64, f64)> = factors
                .iter()
                .map(|f| {
                    let hi = v.shrink * to_f64(f.upper());
                    match f {
                        RadialFactor::Annulus { inner, .. } => (to_f64(inner) / v.shrink, hi),
                        _ => (v.floor * hi, hi),
                    }
                })
                .collect();
            corners(&ranges)
        }
        Shape::Ellipsoid { powers } => {
            let n = d.n;
            let grid = 12usize;
            let mut out = Vec::new();
            for u in simplex_grid(n, grid) {
                out.push(
                    u.iter()
                        .zip(powers)
                        .map(|(&u, p)| (v.shrink * u.powf(1.0 / (2.0 * to_f64(p)))).max(v.floor * v.shrink))
                        .collect(),
                );
            }
            out
        }
        Shape::MonomialRegion { constraints } => {
            let inv = rational_inverse(&d.constraint_matrix().unwrap()).to_f64();
            let ranges: Vec<(f64, f64)> = constraints
                .iter()
                .map(|c| {
                    let hi = v.shrink * to_f64(&c.upper);
                    let l = c.lower_f64();
                    (if l > 0.0 { l / v.shrink } else { v.floor * hi }, hi)
                })
                .collect();
            corners(&ranges).into_iter().map(|vv| inv.iter().map(|row| positive_power(&vv, row)).collect()).collect()
        }
    }
}

fn simplex_grid(n: usize, g: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, g: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.iter().map(|&x| x as f64 / g as f64).collect());
            prefix.pop();
            return;
        }
        for x in 0..=left {
            prefix.push(x);
            rec(n, left - x, g, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, g, g, &mut Vec::new(), &mut out);
    out
}

fn coefficient_for(d: &ReinhardtDomain, w: &WeightSpec, k: &[i64], opts: &KernelOptions) -> Result<Option<Coefficient>> {
    let norm = match opts.method {
        NormMethod::Analytic => monomial_norm(d, w, k)?,
        NormMethod::Quadrature => monomial_norm_quadrature(d, w, k, &opts.quadrature)?,
    };
    Ok(match norm {
        NormValue::Infinite => None,
        NormValue::Finite { value, exact } => {
            if !(value > 0.0) {
                return Err(Error::Domain(format!("non-positive norm for exponent {k:?}")));
            }
            Some(Coefficient { exact: exact.map(|e| e.recip()), value: 1.0 / value })
        }
    })
}

/// Builds the truncated monomial series of `B_D(·,·; ω)`.
///
/// On a domain meeting an axis (and not axes-deleted) only monomials that are
/// holomorphic across that axis, `k_j ≥ 0`, belong to the Bergman space.
pub fn build_kernel(d: &ReinhardtDomain, w: &WeightSpec, opts: &KernelOptions) -> Result<KernelSeries> {
    check_len(d.n, w.n())?;
    if !w.scale.is_positive() {
        return Err(Error::Argument("weight scale must be positive".into()));
    }
    let n = d.n;
    let holo: Vec<bool> = (0..n).map(|j| d.axis_meets(j)).collect();
    let probes = probe_points(d, &opts.validity);
    let logs: Vec<Vec<f64>> = probes.iter().map(|r| r.iter().map(|x| 2.0 * x.ln()).collect()).collect();
    let mut terms: Vec<Term> = Vec::new();
    let mut partial = vec![0.0; probes.len()];
    let mut prev = vec![0.0; probes.len()];
    let mut tail = f64::INFINITY;

    for s in 0..=opts.max_degree {
        let ks: Vec<Vec<i64>> = shell(n, s).into_iter().filter(|k| k.iter().zip(&holo).all(|(&x, &h)| !h || x >= 0)).collect();
        let coeffs: Vec<Result<Option<Coefficient>>> = ks.par_iter().map(|k| coefficient_for(d, w, k, opts)).collect();
        let mut shell_sum = vec![0.0; probes.len()];
        for (k, c) in ks.into_iter().zip(coeffs) {
            let Some(c) = c? else { continue };
            for (acc, lr) in shell_sum.iter_mut().zip(&logs) {
                let e: f64 = k.iter().zip(lr).map(|(&k, l)| k as f64 * l).sum();
                *acc += c.value * e.exp();
            }
            terms.push(Term { k, coeff: c });
        }
        for (p, v) in partial.iter_mut().zip(&shell_sum) {
            *p += v;
        }
        tail = shell_sum
            .iter()
            .zip(&prev)
            .zip(&partial)
            .map(|((&cur, &before), &tot)| {
                if cur == 0.0 && before == 0.0 {
                    return if tot > 0.0 { 0.0 } else { f64::INFINITY };
                }
                let rho = cur / before;
                if before == 0.0 || rho >= 1.0 {
                    f64::INFINITY
                } else {
                    cur * rho / (1.0 - rho) / tot
                }
            })
            .fold(0.0, f64::max);
        if s >= opts.min_degree && tail <= opts.tol && !terms.is_empty() {
            let validity = validity_region(d, &terms, &opts.validity);
            return Ok(KernelSeries {
                domain: d.clone(),
                weight: w.clone(),
                terms,
                truncation: Truncation { degree: s, tail_bound: tail, tol: opts.tol, probes: probes.len() },
                validity,
            });
        }
        prev = shell_sum;
    }
    Err(Error::Truncation { degree: opts.max_degree, tail, tol: opts.tol })
}

fn validity_region(d: &ReinhardtDomain, terms: &[Term], v: &ValidityOptions) -> ValidityRegion {
    let n = d.n;
    let neg = |e: &dyn Fn(&[i64]) -> Vec<f64>| -> Vec<bool> {
        let mut out = vec![false; n];
        for t in terms {
            for (o, x) in out.iter_mut().zip(e(&t.k)) {
                *o |= x < -1e-12;
            }
        }
        out
    };
    match &d.shape {
        Shape::Product { factors } => {
            let negs = neg(&|k| k.iter().map(|&x| x as f64).collect());
            let upper: Vec<f64> = factors.iter().map(|f| v.shrink * to_f64(f.upper())).collect();
            let lower = factors
                .iter()
                .zip(&upper)
                .zip(&negs)
                .map(|((f, hi), &ng)| match f {
                    RadialFactor::Annulus { inner, .. } => Some(to_f64(inner) / v.shrink),
                    _ => ng.then_some(v.floor * hi),
                })
                .collect();
            ValidityRegion::Radial { lower, upper }
        }
        Shape::Ellipsoid { powers } => {
            let negs = neg(&|k| k.iter().map(|&x| x as f64).collect());
            ValidityRegion::Ellipsoid {
                powers: powers.iter().map(to_f64).collect(),
                shrink: v.shrink,
                lower: negs.iter().map(|&ng| ng.then_some(v.floor * v.shrink)).collect(),
            }
        }
        Shape::MonomialRegion { constraints } => {
            let inv = rational_inverse(&d.constraint_matrix().unwrap()).to_f64();
            // Exponents in v-coordinates: e = k·P⁻¹.
            let negs = neg(&|k| (0..n).map(|j| (0..n).map(|i| k[i] as f64 * inv[i][j]).sum()).collect());
            let upper: Vec<f64> = constraints.iter().map(|c| v.shrink * to_f64(&c.upper)).collect();
            let lower = constraints
                .iter()
                .zip(&upper)
                .zip(&negs)
                .map(|((c, hi), &ng)| {
                    let l = c.lower_f64();
                    if l > 0.0 {
                        Some(l / v.shrink)
                    } else {
                        ng.then_some(v.floor * hi)
                    }
                })
                .collect();
            ValidityRegion::Monomial { p: constraints.iter().map(|c| c.p.clone()).collect(), lower, upper }
        }
    }
}

impl KernelSeries {
    pub fn n(&self) -> usize {
        self.domain.n
    }

    pub fn check_point(&self, z: &ComplexPoint) -> Result<()> {
        check_len(self.n(), z.n())?;
        if !self.domain.contains(z) || !self.validity.contains(z) {
            return Err(Error::OutsideValidity(format!(
                "point ({}) outside validity region [{}]",
                z.0.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(", "),
                self.validity.describe()
            )));
        }
        Ok(())
    }

    /// `B(z, w) = Σ c_k F_k(z)·conj(F_k(w))`.
    pub fn eval(&self, z: &ComplexPoint, w: &ComplexPoint) -> Result<Complex64> {
        self.check_point(z)?;
        self.check_point(w)?;
        self.eval_unchecked(z, w)
    }

    /// Series evaluation without the validity check.
    pub fn eval_unchecked(&self, z: &ComplexPoint, w: &ComplexPoint) -> Result<Complex64> {
        let n = self.n();
        let u: Vec<Complex64> = z.0.iter().zip(&w.0).map(|(a, b)| a * b.conj()).collect();
        let mut lo = vec![0i64; n];
        let mut hi = vec![0i64; n];
        for t in &self.terms {
            for j in 0..n {
                lo[j] = lo[j].min(t.k[j]);
                hi[j] = hi[j].max(t.k[j]);
            }
        }
        let tables: Vec<Vec<Complex64>> = (0..n)
            .map(|j| {
                let mut tab = vec![Complex64::new(0.0, 0.0); (hi[j] - lo[j] + 1) as usize];
                let mut p = cpowi(u[j], lo[j])?;
                for slot in tab.iter_mut() {
                    *slot = p;
                    p *= u[j];
                }
                if lo[j] < 0 {
                    // Recompute non-negative powers directly to avoid drift through 0.
                    for k in 0..=hi[j] {
                        tab[(k - lo[j]) as usize] = cpowi(u[j], k)?;
                    }
                }
                Ok(tab)
            })
            .collect::<Result<_>>()?;
        let mut sum = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut prod = Complex64::new(t.coeff.value, 0.0);
            for j in 0..n {
                prod *= tables[j][(t.k[j] - lo[j]) as usize];
            }
            sum += prod;
        }
        Ok(sum)
    }

    /// `B(z, z)`, real and non-negative.
    pub fn diag(&self, z: &ComplexPoint) -> Result<f64> {
        Ok(self.eval(z, z)?.re)
    }

    /// Largest single normalized monomial `|F_k(z)|²/‖F_k‖²`, a lower bound for the diagonal.
    pub fn max_single_term(&self, z: &ComplexPoint) -> Result<f64> {
        self.check_point(z)?;
        let r = z.moduli();
        Ok(self
            .terms
            .iter()
            .map(|t| t.coeff.value * r.iter().zip(&t.k).map(|(x, &k)| x.powi(2 * k as i32)).product::<f64>())
            .fold(0.0, f64::max))
    }

    pub fn coefficient_map(&self) -> BTreeMap<Vec<i64>, Coefficient> {
        self.terms.iter().map(|t| (t.k.clone(), t.coeff.clone())).collect()
    }
}

pub fn kernel_eval(k: &KernelSeries, z: &ComplexPoint, w: &ComplexPoint) -> Result<Complex64> {
    k.eval(z, w)
}

pub fn kernel_diag(k: &KernelSeries, z: &ComplexPoint) -> Result<f64> {
    k.diag(z)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CoefficientDiff {
    pub only_in_first: Vec<Vec<i64>>,
    pub only_in_second: Vec<Vec<i64>>,
    pub mismatched: Vec<Vec<i64>>,
    pub compared_degree: i64,
}

impl CoefficientDiff {
    pub fn is_identical(&self) -> bool {
        self.only_in_first.is_empty() && self.only_in_second.is_empty() && self.mismatched.is_empty()
    }
}

/// Term-by-term comparison on the common shells `max_j |k_j| ≤ min(degrees)`.
pub fn diff_coefficients(a: &KernelSeries, b: &KernelSeries) -> CoefficientDiff {
    let deg = a.truncation.degree.min(b.truncation.degree);
    let within = |k: &Vec<i64>| k.iter().all(|x| x.abs() <= deg);
    let ma = a.coefficient_map();
    let mb = b.coefficient_map();
    let mut out = CoefficientDiff { compared_degree: deg, ..Default::default() };
    for (k, c) in ma.iter().filter(|(k, _)| within(k)) {
        match mb.get(k) {
            None => out.only_in_first.push(k.clone()),
            Some(d) if !c.same_as(d) => out.mismatched.push(k.clone()),
            _ => {}
        }
    }
    out.only_in_second = mb.keys().filter(|k| within(k) && !ma.contains_key(*k)).cloned().collect();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::MonomialConstraint;
    use crate::quadrature::integrate_domain;
    use crate::rational::q;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk_closed_form(z: Complex64, w: Complex64) -> Complex64 {
        (1.0 - z * w.conj()).powi(-2) / PI
    }

    #[test]
    fn disk_norm_examples() {
        let d = ReinhardtDomain::unit_disk();
        let NormValue::Finite { value, exact } = monomial_norm(&d, &WeightSpec::unit(1), &[0]).unwrap() else { panic!() };
        assert_eq!(exact, Some(qi(1)));
        assert!((value - PI).abs() < 1e-15);
        let even = WeightSpec { mu: vec![q(-1, 2)], scale: q(1, 2) };
        let odd = WeightSpec { mu: vec![qi(0)], scale: q(1, 2) };
        for k in 0..6 {
            // Oracle: 2π·(1/2)·∫₀¹ r^{2k} dr and 2π·(1/2)·∫₀¹ r^{2k+1} dr.
            let e = monomial_norm(&d, &even, &[k]).unwrap();
            assert_eq!(e, NormValue::Finite { value: PI / (2 * k + 1) as f64, exact: Some(q(1, 2 * k + 1)) });
            let o = monomial_norm(&d, &odd, &[k]).unwrap().value();
            assert!((o - PI / (2 * k + 2) as f64).abs() < 1e-15);
        }
        assert_eq!(monomial_norm(&d, &WeightSpec::unit(1), &[-1]).unwrap(), NormValue::Infinite);
    }

    #[test]
    fn analytic_norms_match_quadrature() {
        let qs = QuadratureSpec { refinement_tol: 1e-13, ..QuadratureSpec::default() };
        let cases: Vec<(ReinhardtDomain, WeightSpec, Vec<i64>)> = vec![
            (ReinhardtDomain::ellipsoid(vec![qi(2), qi(2)]).unwrap(), WeightSpec::unit(2), vec![1, 2]),
            (ReinhardtDomain::ellipsoid(vec![qi(2), qi(3)]).unwrap(), WeightSpec::monomial(vec![q(-1, 2), q(-2, 3)]), vec![0, 3]),
            (ReinhardtDomain::ball(2), WeightSpec::monomial(vec![q(-1, 2), qi(0)]), vec![2, 0]),
            (ReinhardtDomain::annulus(q(1, 3), qi(2)).unwrap(), WeightSpec::unit(1), vec![-3]),
            (ReinhardtDomain::annulus(q(1, 3), qi(2)).unwrap(), WeightSpec::unit(1), vec![-1]),
            (ReinhardtDomain::hartogs(2, 1).unwrap(), WeightSpec::unit(2), vec![1, -1]),
            (
                ReinhardtDomain::monomial_region(vec![
                    MonomialConstraint { p: vec![1, 1], lower: Some(q(1, 4)), upper: qi(1) },
                    MonomialConstraint { p: vec![0, 1], lower: Some(q(1, 2)), upper: qi(1) },
                ])
                .unwrap(),
                WeightSpec::monomial(vec![qi(0), qi(3)]),
                vec![2, -1],
            ),
        ];
        for (d, w, k) in cases {
            let a = monomial_norm(&d, &w, &k).unwrap().value();
            let b = monomial_norm_quadrature(&d, &w, &k, &qs).unwrap().value();
            assert!((a - b).abs() <= 1e-10 * a, "{k:?} on {:?}: {a} vs {b}", d.shape);
        }
    }

    #[test]
    fn exact_ellipsoid_norm() {
        // Ball, ω ≡ 1, k = 0: volume π²/2 with α = (1,1): 2²·(1/2)²·Γ(1)²/Γ(3) = 1/2.
        let NormValue::Finite { exact, .. } = monomial_norm(&ReinhardtDomain::ball(2), &WeightSpec::unit(2), &[0, 0]).unwrap() else { panic!() };
        assert_eq!(exact, Some(q(1, 2)));
    }

    #[test]
    fn disk_kernel_examples() {
        let k = build_kernel(&ReinhardtDomain::unit_disk(), &WeightSpec::unit(1), &KernelOptions::default()).unwrap();
        for t in k.terms.iter().take(10) {
            assert_eq!(t.coeff.exact, Some(qi(t.k[0] + 1)));
        }
        let o = ComplexPoint::real(&[0.0]);
        assert!((k.diag(&o).unwrap() - 1.0 / PI).abs() < 1e-15);
        let v = k.eval(&ComplexPoint::real(&[0.5]), &ComplexPoint::real(&[0.2])).unwrap();
        assert!((v - c(1.0 / (PI * 0.81), 0.0)).norm() < 1e-10);
        let (z, w) = (c(0.3, -0.4), c(-0.5, 0.1));
        let got = k.eval(&ComplexPoint::new(vec![z]), &ComplexPoint::new(vec![w])).unwrap();
        assert!((got - disk_closed_form(z, w)).norm() < 1e-11);
        let small = build_kernel(&ReinhardtDomain::disk(q(1, 2)), &WeightSpec::unit(1), &KernelOptions::default()).unwrap();
        assert!((small.diag(&o).unwrap() - 4.0 / PI).abs() < 1e-14);
        assert!(small.diag(&o).unwrap() > k.diag(&o).unwrap());
        assert!(matches!(k.eval(&ComplexPoint::real(&[0.9]), &o), Err(Error::OutsideValidity(_))));
    }

    #[test]
    fn annulus_and_polydisk_coefficients() {
        let d = ReinhardtDomain::annulus(q(1, 2), qi(2)).unwrap();
        let k = build_kernel(&d, &WeightSpec::unit(1), &KernelOptions::default()).unwrap();
        for t in &k.terms {
            let kk = t.k[0];
            let want = if kk == -1 {
                1.0 / (2.0 * PI * 4f64.ln())
            } else {
                let a = (2 * kk + 2) as f64;
                1.0 / (2.0 * PI * (2f64.powf(a) - 0.5f64.powf(a)) / a)
            };
            assert!((t.coeff.value - want).abs() <= 1e-14 * want);
        }
        assert!(k.terms.iter().any(|t| t.k[0] < -1));
        let pd = build_kernel(&ReinhardtDomain::polydisk(2), &WeightSpec::unit(2), &KernelOptions::default()).unwrap();
        for t in pd.terms.iter().take(20) {
            assert_eq!(t.coeff.exact, Some(qi((t.k[0] + 1) * (t.k[1] + 1))));
        }
    }

    #[test]
    fn hermitian_positive_and_extremal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let domains = vec![
            (ReinhardtDomain::polydisk(2), WeightSpec::unit(2)),
            (ReinhardtDomain::ball(2), WeightSpec::monomial(vec![q(-1, 2), qi(0)])),
            (ReinhardtDomain::hartogs(1, 1).unwrap(), WeightSpec::unit(2)),
            (ReinhardtDomain::annulus(q(1, 4), qi(1)).unwrap(), WeightSpec::unit(1)),
        ];
        for (d, w) in domains {
            let k = build_kernel(&d, &w, &KernelOptions::with_tol(1e-10)).unwrap();
            let pts = d.sample_points(0.7, 50, rng.gen());
            for pair in pts.windows(2) {
                let a = k.eval(&pair[0], &pair[1]).unwrap();
                let b = k.eval(&pair[1], &pair[0]).unwrap();
                assert!((a - b.conj()).norm() <= 1e-14 * a.norm().max(1.0));
                let dz = k.diag(&pair[0]).unwrap();
                assert!(dz > 0.0);
                assert!(k.max_single_term(&pair[0]).unwrap() <= dz * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn hartogs_kernel_matches_closed_form() {
        let k = build_kernel(&ReinhardtDomain::hartogs(1, 1).unwrap(), &WeightSpec::unit(2), &KernelOptions::default()).unwrap();
        let pts = k.domain.sample_points(0.7, 20, 4);
        for z in &pts {
            for w in &pts[..3] {
                let s = z.0[1] * w.0[1].conj();
                let t = z.0[0] * w.0[0].conj();
                let want = s / (PI * PI * (s - t).powi(2) * (1.0 - s).powi(2));
                let got = k.eval(z, w).unwrap();
                assert!((got - want).norm() <= 1e-9 * want.norm(), "{got} vs {want}");
            }
        }
    }

    #[test]
    fn reproducing_property_on_monomials() {
        let d = ReinhardtDomain::unit_disk();
        let w = WeightSpec::monomial(vec![q(-1, 2)]);
        let k = build_kernel(&d, &w, &KernelOptions::with_tol(1e-12)).unwrap();
        let z = ComplexPoint::new(vec![c(0.2, 0.1)]);
        let qs = QuadratureSpec { refinement_tol: 1e-10, angular_points: 24, ..QuadratureSpec::default() };
        for kk in [[0i64], [2], [5]] {
            let f = |x: &ComplexPoint| crate::monomial::eval_f_int(&kk, x);
            // Two rotated real parts so that neither projection integrates to exactly zero.
            let part = |rot: Complex64| {
                integrate_domain(&d, &|x| Ok((rot * k.eval_unchecked(&z, x)? * f(x)?).re * w.eval(x)), &qs).unwrap().value
            };
            let (p, m) = (Complex64::from_polar(1.0, -PI / 4.0), Complex64::from_polar(1.0, -3.0 * PI / 4.0));
            let want = f(&z).unwrap();
            assert!((part(p) - (p * want).re).abs() < 1e-9, "{kk:?}");
            assert!((part(m) - (m * want).re).abs() < 1e-9, "{kk:?}");
        }
    }

    #[test]
    fn truncation_cap_reported() {
        let opts = KernelOptions { max_degree: 3, tol: 1e-14, ..KernelOptions::default() };
        assert!(matches!(
            build_kernel(&ReinhardtDomain::unit_disk(), &WeightSpec::unit(1), &opts),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn shells_partition_the_lattice() {
        assert_eq!(shell(1, 0), vec![vec![0]]);
        assert_eq!(shell(1, 2), vec![vec![-2], vec![2]]);
        assert_eq!(shell(2, 1).len(), 8);
        assert_eq!(shell(3, 2).len(), 125 - 27);
    }

    #[test]
    fn artifact_round_trip() {
        let k = build_kernel(&ReinhardtDomain::hartogs(2, 1).unwrap(), &WeightSpec::unit(2), &KernelOptions::with_tol(1e-6)).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        let back: KernelSeries = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        assert!(diff_coefficients(&k, &back).is_identical());
    }
}
