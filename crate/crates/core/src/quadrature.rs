//! Globally adaptive Gauss–Legendre quadrature over radial shadows.
//!
//! One-dimensional integrals bisect the panel with the largest error estimate
//! (the gap between a panel's rule and the rule on its two halves) until the
//! summed estimate meets the relative tolerance. Shadows are integrated as
//! nested 1D integrals with variable inner bounds; angular directions use the
//! trapezoid rule, which is exact for trigonometric polynomials of low degree.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::domains::{RadialFactor, ReinhardtDomain, Shape};
use crate::intlin::rational_inverse;
use crate::monomial::{positive_power, ComplexPoint};
use crate::rational::to_f64;
use crate::{Error, Result};

use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre order used on every panel.
    pub points_per_axis: usize,
    /// Relative tolerance on the summed error estimate.
    pub refinement_tol: f64,
    /// Maximum number of panel bisections per one-dimensional integral.
    pub max_refinements: usize,
    /// Trapezoid points per angular direction.
    pub angular_points: usize,
    /// Absolute error accepted regardless of the relative test; for integrands
    /// that may vanish identically up to rounding.
    #[serde(default)]
    pub absolute_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { points_per_axis: 20, refinement_tol: 1e-10, max_refinements: 400, angular_points: 16, absolute_tol: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
type Rule = Arc<Vec<(f64, f64)>>;

fn rule(order: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().unwrap();
    guard
        .entry(order)
        .or_insert_with(|| {
            let gl = GaussLegendre::new(NonZeroUsize::new(order.max(1)).unwrap());
            Arc::new(gl.as_node_weight_pairs().to_vec())
        })
        .clone()
}

/// Returns `(∫f, ∫|f|)` on `[a, b]`.
fn apply(nodes: &[(f64, f64)], f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let (mut s, mut m) = (0.0, 0.0);
    for &(x, w) in nodes {
        let v = w * f(c + h * x)?;
        s += v;
        m += v.abs();
    }
    Ok((s * h, m * h.abs()))
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    mag: f64,
    err: f64,
}

impl Panel {
    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn make_panel(nodes: &[(f64, f64)], f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64, whole: f64) -> Result<Panel> {
    let m = 0.5 * (a + b);
    let (left, lm) = apply(nodes, f, a, m)?;
    let (right, rm) = apply(nodes, f, m, b)?;
    Ok(Panel { a, b, left, right, mag: lm + rm, err: (whole - left - right).abs() })
}

/// `∫_a^b f` to accuracy `spec.refinement_tol` relative to `∫_a^b |f|`.
pub fn integrate_1d(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Argument("integration bounds must be finite".into()));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let nodes = rule(spec.points_per_axis);
    let (whole, _) = apply(&nodes, f, a, b)?;
    let mut heap = BinaryHeap::new();
    heap.push(make_panel(&nodes, f, a, b, whole)?);
    let mut splits = 0;
    loop {
        let value: f64 = heap.iter().map(Panel::value).sum();
        let error: f64 = heap.iter().map(|p| p.err).sum();
        // Relative to ∫|f| so that integrals cancelling to zero still terminate.
        let mag: f64 = heap.iter().map(|p| p.mag).sum::<f64>().max(value.abs());
        if !value.is_finite() {
            return Err(Error::Quadrature { achieved: f64::INFINITY, requested: spec.refinement_tol });
        }
        if error <= spec.refinement_tol * mag || error <= spec.absolute_tol {
            return Ok(Estimate { value, error });
        }
        if splits >= spec.max_refinements {
            return Err(Error::Quadrature { achieved: error / mag, requested: spec.refinement_tol });
        }
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::Quadrature { achieved: error / mag, requested: spec.refinement_tol });
        }
        heap.push(make_panel(&nodes, f, worst.a, m, worst.left)?);
        heap.push(make_panel(&nodes, f, m, worst.b, worst.right)?);
        splits += 1;
    }
}

/// `∫_shadow g(r) dr` over the radial shadow of `d` (Lebesgue measure on `ℝⁿ₊`).
pub fn integrate_shadow(d: &ReinhardtDomain, g: &dyn Fn(&[f64]) -> Result<f64>, spec: &QuadratureSpec) -> Result<Estimate> {
    match &d.shape {
        Shape::Product { factors } => {
            let bounds: Vec<(f64, f64)> = factors
                .iter()
                .map(|f| match f {
                    RadialFactor::Annulus { inner, outer } => (to_f64(inner), to_f64(outer)),
                    _ => (0.0, to_f64(f.upper())),
                })
                .collect();
            nest(d.n, &mut Vec::new(), &|_, j| Ok(bounds[j]), g, spec)
        }
        Shape::Ellipsoid { powers } => {
            let p: Vec<f64> = powers.iter().map(|x| 2.0 * to_f64(x)).collect();
            nest_ellipsoid(&p, &mut Vec::new(), g, spec)
        }
        Shape::MonomialRegion { constraints } => {
            let pm = d.constraint_matrix().expect("validated at construction");
            let det = to_f64(&crate::Q::from_integer(pm.det().clone())).abs();
            let inv = rational_inverse(&pm).to_f64();
            let bounds: Vec<(f64, f64)> = constraints.iter().map(|c| (c.lower_f64(), to_f64(&c.upper))).collect();
            // r = F_{P⁻¹}(v) and dr = ∏r / (|det P| ∏v) dv.
            let gv = |v: &[f64]| {
                let r: Vec<f64> = inv.iter().map(|row| positive_power(v, row)).collect();
                let jac = r.iter().product::<f64>() / (det * v.iter().product::<f64>());
                Ok(g(&r)? * jac)
            };
            nest(d.n, &mut Vec::new(), &|_, j| Ok(bounds[j]), &gv, spec)
        }
    }
}

/// Nested integration over `Σ r_j^{p_j} < 1`. The bound of the next variable
/// behaves like `(hi − r_j)^{1/p_{j+1}}` near `hi`; writing `r_j = hi·(1 − τ^m)`
/// with `m = p_{j+1}` makes it smooth in `τ`.
fn nest_ellipsoid(p: &[f64], prefix: &mut Vec<f64>, g: &dyn Fn(&[f64]) -> Result<f64>, spec: &QuadratureSpec) -> Result<Estimate> {
    let j = prefix.len();
    let used: f64 = prefix.iter().zip(p).map(|(r, e)| r.powf(*e)).sum();
    let hi = (1.0 - used).max(0.0).powf(1.0 / p[j]);
    if j + 1 == p.len() {
        let mut f = |x: f64| {
            prefix.push(x);
            let v = g(prefix);
            prefix.pop();
            v
        };
        return integrate_1d(&mut f, 0.0, hi, spec);
    }
    let m = p[j + 1];
    let mut f = |t: f64| {
        prefix.push(hi * (1.0 - t.powf(m)));
        let v = nest_ellipsoid(p, prefix, g, spec);
        prefix.pop();
        v.map(|e| e.value * hi * m * t.powf(m - 1.0))
    };
    integrate_1d(&mut f, 0.0, 1.0, spec)
}

type Bounds<'a> = dyn Fn(&[f64], usize) -> Result<(f64, f64)> + 'a;

fn nest(n: usize, prefix: &mut Vec<f64>, bounds: &Bounds<'_>, g: &dyn Fn(&[f64]) -> Result<f64>, spec: &QuadratureSpec) -> Result<Estimate> {
    let j = prefix.len();
    let (lo, hi) = bounds(prefix, j)?;
    if j + 1 == n {
        let mut f = |x: f64| {
            prefix.push(x);
            let v = g(prefix);
            prefix.pop();
            v
        };
        return integrate_1d(&mut f, lo, hi, spec);
    }
    let mut f = |x: f64| {
        prefix.push(x);
        let v = nest(n, prefix, bounds, g, spec);
        prefix.pop();
        v.map(|e| e.value)
    };
    integrate_1d(&mut f, lo, hi, spec)
}

/// Mean of `f(r ⊗ e^{2πiθ})` over the trapezoid grid on the torus.
pub fn torus_mean(r: &[f64], f: &dyn Fn(&ComplexPoint) -> Result<f64>, m: usize) -> Result<f64> {
    let n = r.len();
    let total = m.pow(n as u32);
    let mut idx = vec![0usize; n];
    let mut sum = 0.0;
    for _ in 0..total {
        let theta: Vec<f64> = idx.iter().map(|&k| k as f64 / m as f64).collect();
        sum += f(&ComplexPoint::from_polar(r, &theta))?;
        for k in idx.iter_mut() {
            *k += 1;
            if *k < m {
                break;
            }
            *k = 0;
        }
    }
    Ok(sum / total as f64)
}

/// `∫_D f dV` in polar coordinates: `(2π)ⁿ ∫_shadow ∏r · mean_θ f dr`.
pub fn integrate_domain(d: &ReinhardtDomain, f: &dyn Fn(&ComplexPoint) -> Result<f64>, spec: &QuadratureSpec) -> Result<Estimate> {
    let vol = TAU.powi(d.n as i32);
    let g = |r: &[f64]| Ok(vol * r.iter().product::<f64>() * torus_mean(r, f, spec.angular_points)?);
    integrate_shadow(d, &g, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::MonomialConstraint;
    use crate::rational::{q, qi};
    use std::f64::consts::PI;

    #[test]
    fn smooth_and_singular_1d() {
        let spec = QuadratureSpec::default();
        let e = integrate_1d(&mut |x| Ok(x.exp()), 0.0, 1.0, &spec).unwrap();
        assert!((e.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        let e = integrate_1d(&mut |x| Ok(x.powf(-0.5)), 0.0, 1.0, &spec).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9, "{}", e.value);
        let e = integrate_1d(&mut |_| Ok(0.0), 0.0, 1.0, &spec).unwrap();
        assert_eq!(e.value, 0.0);
        let tight = QuadratureSpec { max_refinements: 2, ..spec };
        assert!(matches!(integrate_1d(&mut |x| Ok(x.powf(-0.9)), 0.0, 1.0, &tight), Err(Error::Quadrature { .. })));
    }

    #[test]
    fn volumes() {
        let spec = QuadratureSpec::default();
        let one = |_: &ComplexPoint| Ok(1.0);
        let disk = integrate_domain(&ReinhardtDomain::unit_disk(), &one, &spec).unwrap();
        assert!((disk.value - PI).abs() < 1e-12);
        let ball = integrate_domain(&ReinhardtDomain::ball(2), &one, &spec).unwrap();
        assert!((ball.value - PI * PI / 2.0).abs() < 1e-9, "{}", ball.value);
        let ann = integrate_domain(&ReinhardtDomain::annulus(q(1, 2), qi(2)).unwrap(), &one, &spec).unwrap();
        assert!((ann.value - PI * (4.0 - 0.25)).abs() < 1e-12);
        // Hartogs triangle: vol = π²/2.
        let h = integrate_domain(&ReinhardtDomain::hartogs(1, 1).unwrap(), &one, &spec).unwrap();
        assert!((h.value - PI * PI / 2.0).abs() < 1e-9, "{}", h.value);
        let region = ReinhardtDomain::monomial_region(vec![
            MonomialConstraint { p: vec![1, 1], lower: Some(q(1, 4)), upper: qi(1) },
            MonomialConstraint { p: vec![0, 1], lower: Some(q(1, 2)), upper: qi(1) },
        ])
        .unwrap();
        // Oracle: ∫_{1/2}^1 ∫_{1/(4r₂)}^{1/r₂} r₁ r₂ dr₁ dr₂ · (2π)² = (2π)²·(15/32)·ln 2.
        let v = integrate_domain(&region, &one, &spec).unwrap();
        let want = 4.0 * PI * PI * (15.0 / 32.0) * 2f64.ln();
        assert!((v.value - want).abs() < 1e-9 * want, "{} vs {want}", v.value);
    }

    #[test]
    fn angular_average_of_monomials() {
        let f = |z: &ComplexPoint| Ok((z.0[0].powi(3) * z.0[1].conj()).re);
        assert!(torus_mean(&[0.5, 0.7], &f, 16).unwrap().abs() < 1e-15);
        let g = |z: &ComplexPoint| Ok(z.0[0].norm_sqr());
        assert!((torus_mean(&[0.5, 0.7], &g, 16).unwrap() - 0.25).abs() < 1e-15);
    }
}
