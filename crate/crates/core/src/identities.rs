//! Kernel decomposition identities for monomial maps `Φ_A: D1 → D2`.
//!
//! For each character `χ` of the deck group with representative `b`,
//! `B_{D1}(z, w; ω₁) = Σ_χ F_{−b}(z)·B_{D2}(Φ_A z, Φ_A w; η_b)·conj(F_{−b}(w))`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bergman::{build_kernel, KernelOptions, KernelSeries};
use crate::domains::{
    admissible_representative, eta_weight, is_admissible, pullback_weight, to_i64_vec, RadialFactor, ReinhardtDomain, WeightSpec,
};
use crate::group::{build_group, GroupData};
use crate::intlin::{bigvec, in_row_span, IntMatrix};
use crate::monomial::{eval_f_int, eval_phi, fiber, jacobian_det, ComplexPoint};
use crate::rational::{fmt_q, q, to_f64, Q};
use crate::{Error, Result};

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Both domains with the coordinate hyperplanes removed.
    #[default]
    AxesDeleted,
    /// Full domains; requires admissible weights on both sides.
    FullDomains,
}

#[derive(Clone, Debug)]
pub struct DecompositionScenario {
    pub group: GroupData,
    pub d1: ReinhardtDomain,
    pub d2: ReinhardtDomain,
    pub omega1: WeightSpec,
    pub omega2: WeightSpec,
    /// One representative per character, in the order of `group.reps_gat`.
    pub b_choices: Vec<Vec<BigInt>>,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MappingReport {
    pub forward_checked: usize,
    pub backward_checked: usize,
    pub failures: Vec<String>,
}

impl MappingReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl DecompositionScenario {
    /// `overrides` maps a character index to its chosen representative `b`.
    pub fn new(
        a: &IntMatrix,
        d1: ReinhardtDomain,
        d2: ReinhardtDomain,
        omega2: WeightSpec,
        mode: Mode,
        overrides: &BTreeMap<usize, Vec<i64>>,
    ) -> Result<Self> {
        for d in [&d1, &d2] {
            if d.n != a.n() {
                return Err(Error::Dimension { expected: a.n(), got: d.n });
            }
        }
        let group = build_group(a)?;
        let (d1, d2) = match mode {
            Mode::AxesDeleted => (d1.with_axes_deleted(true), d2.with_axes_deleted(true)),
            Mode::FullDomains => (d1, d2),
        };
        let omega1 = pullback_weight(&omega2, a)?;
        if let Some(&i) = overrides.keys().find(|&&i| i >= group.order) {
            return Err(Error::Argument(format!("character index {i} out of range (order {})", group.order)));
        }
        let mut b_choices = Vec::with_capacity(group.order);
        for (i, chi) in group.reps_gat.iter().enumerate() {
            let b = match overrides.get(&i) {
                Some(b) => {
                    if b.len() != a.n() {
                        return Err(Error::Dimension { expected: a.n(), got: b.len() });
                    }
                    bigvec(b)
                }
                None => admissible_representative(chi, a, &omega2, &d2)?,
            };
            let diff: Vec<BigInt> = b.iter().zip(&chi.m).map(|(x, y)| x - y).collect();
            if !in_row_span(a, &diff)? {
                return Err(Error::Argument(format!("b = {b:?} does not represent character {i}")));
            }
            b_choices.push(b);
        }
        let s = Self { group, d1, d2, omega1, omega2, b_choices, mode };
        if mode == Mode::FullDomains {
            if !is_admissible(&s.omega1, &s.d1) {
                return Err(Error::Argument("omega1 is not admissible on D1".into()));
            }
            for i in 0..s.group.order {
                if !is_admissible(&s.eta(i)?, &s.d2) {
                    return Err(Error::Argument(format!("eta_b for character {i} is not admissible on D2")));
                }
            }
        }
        Ok(s)
    }

    pub fn a(&self) -> &IntMatrix {
        &self.group.a
    }

    pub fn eta(&self, i: usize) -> Result<WeightSpec> {
        eta_weight(&self.b_choices[i], self.a(), &self.omega2)
    }

    pub fn b_i64(&self, i: usize) -> Result<Vec<i64>> {
        to_i64_vec(&self.b_choices[i])
    }

    /// Forward containment `Φ_A(z) ∈ D2` with the orbit of `z` inside `D1`, and
    /// fibers over points of `D2` inside `D1`, on seeded samples.
    pub fn validate_mapping(&self, count: usize, seed: u64) -> Result<MappingReport> {
        let mut failures = Vec::new();
        let scale = 0.98;
        let fwd = self.d1.sample_points(scale, count, seed);
        let actions = self.group.action_phases();
        for z in &fwd {
            if !self.d2.contains(&eval_phi(self.a(), z)?) {
                failures.push(format!("Phi_A({:?}) outside D2", z.0));
            }
            if let Some(xi) = actions.iter().find(|xi| !self.d1.contains(&z.hadamard(xi))) {
                failures.push(format!("orbit image {:?} of {:?} outside D1", z.hadamard(xi).0, z.0));
            }
        }
        let back = self.d2.sample_points(scale, count, seed ^ 0x9e37_79b9);
        for w in &back {
            for z in fiber(&self.group, w)? {
                if !self.d1.contains(&z) {
                    failures.push(format!("fiber point {:?} over {:?} outside D1", z.0, w.0));
                }
            }
        }
        failures.truncate(20);
        Ok(MappingReport { forward_checked: fwd.len(), backward_checked: back.len(), failures })
    }

    /// `B_{D1}(·,·;ω₁)` and one `B_{D2}(·,·;η_b)` per character, built in parallel.
    pub fn build_kernels(&self, opts: &KernelOptions) -> Result<ScenarioKernels> {
        let etas: Vec<WeightSpec> = (0..self.group.order).map(|i| self.eta(i)).collect::<Result<_>>()?;
        let (lhs, rhs) = rayon::join(
            || build_kernel(&self.d1, &self.omega1, opts),
            || etas.par_iter().map(|e| build_kernel(&self.d2, e, opts)).collect::<Result<Vec<_>>>(),
        );
        Ok(ScenarioKernels { lhs: lhs?, rhs: rhs? })
    }

    /// The full-domain kernel `B_{D1}(·,·;ω₁)` used on the left of the inequality.
    pub fn build_full_lhs(&self, opts: &KernelOptions) -> Result<KernelSeries> {
        build_kernel(&self.d1.with_axes_deleted(false), &self.omega1, opts)
    }

    /// Seeded points of the `scale`-shrunk `D1` at which every kernel of `k` is valid.
    pub fn sample_points(&self, k: &ScenarioKernels, count: usize, seed: u64, scale: f64) -> Result<Vec<ComplexPoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..200 {
            for z in self.d1.sample_points(scale, count, rng.gen()) {
                if self.point_is_valid(k, &z)? {
                    out.push(z);
                    if out.len() == count {
                        return Ok(out);
                    }
                }
            }
        }
        Err(Error::OutsideValidity(format!(
            "only {} of {count} sampled points lie in every validity region [{}]",
            out.len(),
            k.lhs.validity.describe()
        )))
    }

    pub fn point_is_valid(&self, k: &ScenarioKernels, z: &ComplexPoint) -> Result<bool> {
        if k.lhs.check_point(z).is_err() {
            return Ok(false);
        }
        let w = eval_phi(self.a(), z)?;
        Ok(k.rhs.iter().all(|r| r.check_point(&w).is_ok()))
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioKernels {
    pub lhs: KernelSeries,
    pub rhs: Vec<KernelSeries>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `F_{−b}(z)·B_{D2}(Φz, Φw; η_b)·conj(F_{−b}(w))` per character.
    pub terms: Vec<Complex64>,
    pub residual: f64,
}

fn neg(b: &[i64]) -> Vec<i64> {
    b.iter().map(|x| -x).collect()
}

fn rhs_terms(s: &DecompositionScenario, k: &ScenarioKernels, z: &ComplexPoint, w: &ComplexPoint) -> Result<Vec<Complex64>> {
    let (pz, pw) = (eval_phi(s.a(), z)?, eval_phi(s.a(), w)?);
    (0..s.group.order)
        .map(|i| {
            let nb = neg(&s.b_i64(i)?);
            Ok(eval_f_int(&nb, z)? * k.rhs[i].eval(&pz, &pw)? * eval_f_int(&nb, w)?.conj())
        })
        .collect()
}

fn relative(a: Complex64, b: Complex64) -> f64 {
    let d = a.norm().max(b.norm());
    if d == 0.0 {
        0.0
    } else {
        (a - b).norm() / a.norm().max(f64::MIN_POSITIVE)
    }
}

/// `|LHS − RHS|/|LHS|` for the off-diagonal identity at `(z, w)`.
pub fn decomposition_residual(s: &DecompositionScenario, k: &ScenarioKernels, z: &ComplexPoint, w: &ComplexPoint) -> Result<DecompositionReport> {
    let lhs = k.lhs.eval(z, w)?;
    let terms = rhs_terms(s, k, z, w)?;
    let rhs: Complex64 = terms.iter().sum();
    Ok(DecompositionReport { lhs, rhs, terms, residual: relative(lhs, rhs) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalReport {
    pub lhs: f64,
    pub rhs: f64,
    pub terms: Vec<f64>,
    pub residual: f64,
    pub terms_nonnegative: bool,
}

/// The diagonal identity at `z`; every term is `|F_{−b}(z)|²·B_{D2}(Φz, Φz; η_b) ≥ 0`.
pub fn diagonal_residual(s: &DecompositionScenario, k: &ScenarioKernels, z: &ComplexPoint) -> Result<DiagonalReport> {
    let lhs = k.lhs.diag(z)?;
    let terms: Vec<f64> = rhs_terms(s, k, z, z)?.iter().map(|t| t.re).collect();
    let rhs: f64 = terms.iter().sum();
    Ok(DiagonalReport {
        lhs,
        rhs,
        terms_nonnegative: terms.iter().all(|&t| t >= 0.0),
        residual: relative(Complex64::new(lhs, 0.0), Complex64::new(rhs, 0.0)),
        terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    /// `B_{D1}(z, z; ω₁)` on the full domain.
    pub lhs: f64,
    /// `Σ_χ |F_{−b}(z)|² B_{D2*}(Φz, Φz; η_b)`.
    pub rhs: f64,
    pub slack: f64,
    pub relative_slack: f64,
    pub holds: bool,
}

/// Compares the full-domain diagonal with the axes-deleted decomposition sum.
pub fn corollary_inequality(s: &DecompositionScenario, full_lhs: &KernelSeries, k: &ScenarioKernels, z: &ComplexPoint) -> Result<InequalityReport> {
    if s.mode != Mode::AxesDeleted {
        return Err(Error::Argument("the inequality compares against an axes-deleted scenario".into()));
    }
    let lhs = full_lhs.diag(z)?;
    let rhs: f64 = rhs_terms(s, k, z, z)?.iter().map(|t| t.re).sum();
    let slack = rhs - lhs;
    Ok(InequalityReport { lhs, rhs, slack, relative_slack: slack / rhs, holds: lhs <= rhs * (1.0 + 1e-10) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// `Σ_i B₁(z, Ψ_i(v))·conj(det JΨ_i(v))` against `det JΦ_A(z)·B₂(Φ_A z, v)`,
/// with the fiber points as `Ψ_i(v)` and `det JΨ_i(v) = 1/det JΦ_A(Ψ_i(v))`.
pub fn bell_fiber_residual(g: &GroupData, k2: &KernelSeries, k1: &KernelSeries, z: &ComplexPoint, v: &ComplexPoint) -> Result<BellReport> {
    let mut lhs = Complex64::new(0.0, 0.0);
    for y in fiber(g, v)? {
        let jpsi = jacobian_det(&g.a, &y)?.inv();
        lhs += k1.eval(z, &y)? * jpsi.conj();
    }
    let rhs = jacobian_det(&g.a, z)? * k2.eval(&eval_phi(&g.a, z)?, v)?;
    Ok(BellReport { lhs, rhs, residual: relative(lhs, rhs) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonomialBallReport {
    pub delta: [String; 3],
    /// `B_{D×W}(𝟏, 𝟏)` for the comparable product, disk of radius `δ₃` times annulus.
    pub product_model: f64,
    /// The kernel of `Φ_A⁻¹(D×W)` at `𝟏` through the decomposition with `A = [[1,1],[0,1]]`.
    pub pullback: f64,
    /// `δ₃⁻¹ log(δ₁δ₂)`
    pub reference: f64,
    /// `pullback / reference`
    pub ratio: f64,
}

/// The monomial-ball diagonal at `𝟏` for `3/2 < δ₁, δ₂` and `0 < δ₃ < 1/2`.
pub fn monomial_ball_estimate(delta: [&Q; 3], opts: &KernelOptions) -> Result<MonomialBallReport> {
    let [d1, d2, d3] = delta;
    let three_halves = q(3, 2);
    if !(d1 > &three_halves && d2 > &three_halves && d3 > &q(0, 1) && d3 < &q(1, 2)) {
        return Err(Error::Argument("monomial ball requires 3/2 < δ1, δ2 and 0 < δ3 < 1/2".into()));
    }
    let a = IntMatrix::from_i64(&[vec![1, 1], vec![0, 1]])?;
    // Trivial deck group: the only character has b = 0 and η_0 = |w₂|^{2c₂}.
    let eta = eta_weight(&bigvec(&[0, 0]), &a, &WeightSpec::unit(2))?;
    if !eta.mu[0].eq(&q(0, 1)) {
        return Err(Error::Unsupported("the disk factor must carry the trivial weight".into()));
    }
    let annulus = ReinhardtDomain::product(vec![RadialFactor::Annulus { inner: d1.recip(), outer: d2.clone() }])?;
    let one = ComplexPoint::real(&[1.0]);
    let plain = build_kernel(&annulus, &WeightSpec::unit(1), opts)?.diag(&one)?;
    let weighted = build_kernel(&annulus, &WeightSpec { mu: vec![eta.mu[1].clone()], scale: eta.scale.clone() }, opts)?.diag(&one)?;
    // Any disk at its centre: 1/(π δ₃²).
    let disk = 1.0 / (PI * to_f64(d3).powi(2));
    let reference = (to_f64(d1) * to_f64(d2)).ln() / to_f64(d3);
    let pullback = disk * weighted;
    Ok(MonomialBallReport {
        delta: [fmt_q(d1), fmt_q(d2), fmt_q(d3)],
        product_model: disk * plain,
        pullback,
        reference,
        ratio: pullback / reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::MonomialConstraint;
    use crate::rational::qi;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn disk_scenario(mode: Mode) -> DecompositionScenario {
        let a = IntMatrix::from_i64(&[vec![2]]).unwrap();
        let d = ReinhardtDomain::unit_disk();
        DecompositionScenario::new(&a, d.clone(), d, WeightSpec::unit(1), mode, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn disk_weights_are_the_even_and_odd_ones() {
        let s = disk_scenario(Mode::FullDomains);
        let etas: Vec<WeightSpec> = (0..2).map(|i| s.eta(i).unwrap()).collect();
        assert!(etas.contains(&WeightSpec { mu: vec![q(-1, 2)], scale: q(1, 2) }));
        assert!(etas.contains(&WeightSpec { mu: vec![qi(0)], scale: q(1, 2) }));
        assert!(s.validate_mapping(500, 1).unwrap().passed());
    }

    #[test]
    fn disk_identity_and_closed_form() {
        let s = disk_scenario(Mode::FullDomains);
        let k = s.build_kernels(&KernelOptions::default()).unwrap();
        let pts = s.sample_points(&k, 10, 3, 0.7).unwrap();
        for z in &pts {
            for w in &pts {
                let r = decomposition_residual(&s, &k, z, w).unwrap();
                let closed = (1.0 - z.0[0] * w.0[0].conj()).powi(-2) / PI;
                assert!((r.rhs - closed).norm() < 1e-9 * closed.norm(), "{r:?}");
                assert!(r.residual < 1e-10);
            }
        }
        let half = ComplexPoint::real(&[0.5]);
        let d = diagonal_residual(&s, &k, &half).unwrap();
        assert!((d.lhs - 1.0 / (PI * 0.75f64.powi(2))).abs() < 1e-12);
        assert!(d.terms_nonnegative && d.residual < 1e-12);
    }

    #[test]
    fn residual_shrinks_with_tolerance() {
        let s = disk_scenario(Mode::FullDomains);
        // Close to the edge of the right-hand validity region so truncation dominates.
        let pts: Vec<ComplexPoint> = (0..10).map(|i| ComplexPoint::from_polar(&[0.85 + 0.004 * i as f64], &[0.13 * i as f64])).collect();
        let mut last = f64::INFINITY;
        for tol in [1e-2, 1e-4, 1e-6] {
            let k = s.build_kernels(&KernelOptions::with_tol(tol)).unwrap();
            let worst = pts
                .windows(2)
                .map(|p| {
                    let exact = (1.0 - p[0].0[0] * p[1].0[0].conj()).powi(-2) / PI;
                    let rhs: Complex64 = rhs_terms(&s, &k, &p[0], &p[1]).unwrap().iter().sum();
                    (rhs - exact).norm() / exact.norm()
                })
                .fold(0.0, f64::max);
            assert!(worst < last, "tol {tol}: {worst} vs {last}");
            last = worst;
        }
    }

    #[test]
    fn bell_identity_on_the_disk() {
        let s = disk_scenario(Mode::FullDomains);
        let k = build_kernel(&s.d1, &WeightSpec::unit(1), &KernelOptions::default()).unwrap();
        let z = ComplexPoint::new(vec![c(0.3, 0.4)]);
        let v = ComplexPoint::new(vec![c(-0.2, 0.25)]);
        let r = bell_fiber_residual(&s.group, &k, &k, &z, &v).unwrap();
        // The displayed identity written out with the closed form.
        let bd = |a: Complex64, b: Complex64| (1.0 - a * b.conj()).powi(-2) / PI;
        let sq = v.0[0].sqrt();
        let want = 2.0 * z.0[0] * bd(z.0[0] * z.0[0], v.0[0]);
        let lhs = (bd(z.0[0], sq) - bd(z.0[0], -sq)) / (2.0 * sq.conj());
        assert!((lhs - want).norm() < 1e-12 * want.norm());
        assert!((r.lhs - want).norm() < 1e-9 * want.norm() && r.residual < 1e-9, "{r:?}");
    }

    #[test]
    fn identity_matrix_is_exact() {
        let a = IntMatrix::identity(2);
        let d = ReinhardtDomain::ball(2);
        let s = DecompositionScenario::new(&a, d.clone(), d.clone(), WeightSpec::unit(2), Mode::FullDomains, &BTreeMap::new()).unwrap();
        let k = s.build_kernels(&KernelOptions::with_tol(1e-8)).unwrap();
        let z = ComplexPoint::new(vec![c(0.2, 0.1), c(0.3, -0.1)]);
        assert_eq!(decomposition_residual(&s, &k, &z, &z).unwrap().residual, 0.0);
        let r = bell_fiber_residual(&s.group, &k.lhs, &k.lhs, &z, &z).unwrap();
        assert!(r.residual < 1e-15);
        let sd = DecompositionScenario::new(&a, d.clone(), d, WeightSpec::unit(2), Mode::AxesDeleted, &BTreeMap::new()).unwrap();
        let kd = sd.build_kernels(&KernelOptions::with_tol(1e-8)).unwrap();
        let full = sd.build_full_lhs(&KernelOptions::with_tol(1e-8)).unwrap();
        let ineq = corollary_inequality(&sd, &full, &kd, &z).unwrap();
        assert!(ineq.holds && ineq.slack == 0.0, "{ineq:?}");
    }

    #[test]
    fn scenario_rejects_bad_inputs() {
        let a = IntMatrix::from_i64(&[vec![2]]).unwrap();
        let d = ReinhardtDomain::unit_disk();
        let mut o = BTreeMap::new();
        o.insert(0, vec![1]);
        o.insert(1, vec![1]);
        assert!(DecompositionScenario::new(&a, d.clone(), d.clone(), WeightSpec::unit(1), Mode::AxesDeleted, &o).is_err());
        let heavy = WeightSpec::monomial(vec![q(1, 2)]);
        assert!(DecompositionScenario::new(&a, d.clone(), d, heavy, Mode::FullDomains, &BTreeMap::new()).is_err());
    }

    #[test]
    fn pulled_back_weight_inequality_is_strict() {
        let a = IntMatrix::from_i64(&[vec![1, 1], vec![0, 1]]).unwrap();
        let d1 = ReinhardtDomain::monomial_region(vec![
            MonomialConstraint { p: vec![1, 1], lower: None, upper: qi(1) },
            MonomialConstraint { p: vec![0, 1], lower: None, upper: qi(1) },
        ])
        .unwrap();
        let omega2 = WeightSpec::monomial(vec![qi(0), qi(3)]);
        let s = DecompositionScenario::new(&a, d1, ReinhardtDomain::polydisk(2), omega2, Mode::AxesDeleted, &BTreeMap::new()).unwrap();
        assert_eq!(s.omega1.mu, vec![qi(0), qi(3)]);
        let opts = KernelOptions::with_tol(1e-8);
        let k = s.build_kernels(&opts).unwrap();
        let full = s.build_full_lhs(&opts).unwrap();
        for z in s.sample_points(&k, 5, 2, 0.7).unwrap() {
            let r = corollary_inequality(&s, &full, &k, &z).unwrap();
            assert!(r.holds && r.relative_slack > 1e-6, "{r:?}");
            assert!(decomposition_residual(&s, &k, &z, &z).unwrap().residual < 1e-6);
        }
    }

    #[test]
    fn monomial_ball_ranges_and_monotonicity() {
        let opts = KernelOptions::with_tol(1e-10);
        assert!(monomial_ball_estimate([&qi(1), &qi(2), &q(1, 4)], &opts).is_err());
        let a = monomial_ball_estimate([&qi(2), &qi(2), &q(1, 4)], &opts).unwrap();
        let b = monomial_ball_estimate([&qi(2), &qi(2), &q(1, 5)], &opts).unwrap();
        assert!(b.pullback > a.pullback && b.product_model > a.product_model);
        assert!(a.ratio > 1.0 / 50.0 && a.ratio < 50.0, "{a:?}");
    }
}
