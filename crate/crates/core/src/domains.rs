//! Reinhardt domains, monomial weights and the weight transform `b ↦ c(b) ↦ η_b`.
//!
//! Only the radial shadow `{ (|z_1|, …, |z_n|) }` matters for membership, so
//! every shape is described in radial coordinates.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::group::CosetRep;
use crate::intlin::{check_len, rational_inverse, IntMatrix, RatMatrix};
use crate::monomial::{positive_power, ComplexPoint};
use crate::rational::{ceil, qi, serde_q, serde_qopt, serde_qvec, to_f64, Q};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RadialFactor {
    /// `r < radius`
    Disk {
        #[serde(with = "serde_q")]
        radius: Q,
    },
    /// `inner < r < outer`
    Annulus {
        #[serde(with = "serde_q")]
        inner: Q,
        #[serde(with = "serde_q")]
        outer: Q,
    },
    /// `0 < r < radius`
    PuncturedDisk {
        #[serde(with = "serde_q")]
        radius: Q,
    },
}

impl RadialFactor {
    /// Outer radius.
    pub fn upper(&self) -> &Q {
        match self {
            RadialFactor::Disk { radius } | RadialFactor::PuncturedDisk { radius } => radius,
            RadialFactor::Annulus { outer, .. } => outer,
        }
    }

    /// Inner radius; zero for disks.
    pub fn lower(&self) -> Q {
        match self {
            RadialFactor::Annulus { inner, .. } => inner.clone(),
            _ => Q::zero(),
        }
    }

    fn contains(&self, r: f64) -> bool {
        match self {
            RadialFactor::Disk { radius } => r < to_f64(radius),
            RadialFactor::PuncturedDisk { radius } => r > 0.0 && r < to_f64(radius),
            RadialFactor::Annulus { inner, outer } => r > to_f64(inner) && r < to_f64(outer),
        }
    }
}

/// `lower < F_p(r) < upper`; a missing lower bound admits `F_p(r) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialConstraint {
    pub p: Vec<i64>,
    #[serde(with = "serde_qopt", default)]
    pub lower: Option<Q>,
    #[serde(with = "serde_q")]
    pub upper: Q,
}

impl MonomialConstraint {
    /// Lower end of the `F_p` range as a number (0 when absent).
    pub fn lower_f64(&self) -> f64 {
        self.lower.as_ref().map_or(0.0, to_f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Product { factors: Vec<RadialFactor> },
    /// `n` constraints with linearly independent exponent rows.
    MonomialRegion { constraints: Vec<MonomialConstraint> },
    /// `Σ r_j^{2p_j} < 1`
    Ellipsoid {
        #[serde(with = "serde_qvec")]
        powers: Vec<Q>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReinhardtDomain {
    pub n: usize,
    pub shape: Shape,
    #[serde(default)]
    pub axes_deleted: bool,
}

impl ReinhardtDomain {
    pub fn new(shape: Shape, axes_deleted: bool) -> Result<Self> {
        let n = match &shape {
            Shape::Product { factors } => {
                for f in factors {
                    let ok = match f {
                        RadialFactor::Disk { radius } | RadialFactor::PuncturedDisk { radius } => radius.is_positive(),
                        RadialFactor::Annulus { inner, outer } => !inner.is_negative() && inner < outer,
                    };
                    if !ok {
                        return Err(Error::Argument(format!("invalid radial factor {f:?}")));
                    }
                }
                factors.len()
            }
            Shape::Ellipsoid { powers } => {
                if powers.iter().any(|p| !p.is_positive()) {
                    return Err(Error::Argument("ellipsoid powers must be positive".into()));
                }
                powers.len()
            }
            Shape::MonomialRegion { constraints } => {
                let n = constraints.len();
                for c in constraints {
                    check_len(n, c.p.len()).map_err(|_| {
                        Error::Unsupported("monomial regions need exactly n constraints on n coordinates".into())
                    })?;
                    let lo = c.lower.clone().unwrap_or_else(Q::zero);
                    if lo.is_negative() || !c.upper.is_positive() || lo >= c.upper {
                        return Err(Error::Argument(format!("invalid monomial constraint bounds {c:?}")));
                    }
                }
                let rows: Vec<Vec<i64>> = constraints.iter().map(|c| c.p.clone()).collect();
                IntMatrix::from_i64(&rows).map_err(|_| {
                    Error::Unsupported("monomial constraint exponents must be linearly independent".into())
                })?;
                n
            }
        };
        if n == 0 {
            return Err(Error::Argument("domain dimension must be positive".into()));
        }
        Ok(Self { n, shape, axes_deleted })
    }

    pub fn disk(radius: Q) -> Self {
        Self::new(Shape::Product { factors: vec![RadialFactor::Disk { radius }] }, false).unwrap()
    }

    pub fn unit_disk() -> Self {
        Self::disk(qi(1))
    }

    pub fn polydisk(n: usize) -> Self {
        Self::product(vec![RadialFactor::Disk { radius: qi(1) }; n]).unwrap()
    }

    pub fn product(factors: Vec<RadialFactor>) -> Result<Self> {
        Self::new(Shape::Product { factors }, false)
    }

    pub fn annulus(inner: Q, outer: Q) -> Result<Self> {
        Self::product(vec![RadialFactor::Annulus { inner, outer }])
    }

    pub fn ellipsoid(powers: Vec<Q>) -> Result<Self> {
        Self::new(Shape::Ellipsoid { powers }, false)
    }

    pub fn ball(n: usize) -> Self {
        Self::ellipsoid(vec![qi(1); n]).unwrap()
    }

    pub fn monomial_region(constraints: Vec<MonomialConstraint>) -> Result<Self> {
        Self::new(Shape::MonomialRegion { constraints }, false)
    }

    /// The generalized Hartogs triangle `0 < |z₁|^p < |z₂|^q < 1`.
    pub fn hartogs(p: i64, q: i64) -> Result<Self> {
        Self::new(
            Shape::MonomialRegion {
                constraints: vec![
                    MonomialConstraint { p: vec![p, -q], lower: Some(Q::zero()), upper: qi(1) },
                    MonomialConstraint { p: vec![0, q], lower: None, upper: qi(1) },
                ],
            },
            true,
        )
    }

    pub fn with_axes_deleted(&self, deleted: bool) -> Self {
        Self { axes_deleted: deleted, ..self.clone() }
    }

    /// Exponent matrix of a monomial region.
    pub fn constraint_matrix(&self) -> Option<IntMatrix> {
        match &self.shape {
            Shape::MonomialRegion { constraints } => {
                IntMatrix::from_i64(&constraints.iter().map(|c| c.p.clone()).collect::<Vec<_>>()).ok()
            }
            _ => None,
        }
    }

    pub fn contains(&self, z: &ComplexPoint) -> bool {
        if z.n() != self.n || (self.axes_deleted && !z.is_off_axes()) {
            return false;
        }
        self.contains_radial(&z.moduli())
    }

    /// Membership of the radial shadow.
    pub fn contains_radial(&self, r: &[f64]) -> bool {
        if r.len() != self.n || r.iter().any(|x| !(*x >= 0.0)) {
            return false;
        }
        match &self.shape {
            Shape::Product { factors } => factors.iter().zip(r).all(|(f, &x)| f.contains(x)),
            Shape::Ellipsoid { powers } => {
                powers.iter().zip(r).map(|(p, &x)| x.powf(2.0 * to_f64(p))).sum::<f64>() < 1.0
            }
            Shape::MonomialRegion { constraints } => constraints.iter().all(|c| {
                let mut v = 1.0;
                for (&e, &x) in c.p.iter().zip(r) {
                    if x == 0.0 {
                        if e < 0 {
                            return false;
                        }
                        if e > 0 {
                            v = 0.0;
                        }
                    } else {
                        v *= x.powi(e as i32);
                    }
                }
                match &c.lower {
                    Some(l) => v > to_f64(l) && v < to_f64(&c.upper),
                    None => v < to_f64(&c.upper),
                }
            }),
        }
    }

    /// Whether the hyperplane `{z_j = 0}` meets the domain.
    pub fn axis_meets(&self, j: usize) -> bool {
        if self.axes_deleted {
            return false;
        }
        match &self.shape {
            Shape::Product { factors } => matches!(factors[j], RadialFactor::Disk { .. }),
            Shape::Ellipsoid { .. } => true,
            // With r_j = 0 every constraint involving r_j has F_p = 0 (needs no lower
            // bound) or is undefined (negative exponent). Constraints without r_j are
            // independent rows, hence jointly satisfiable.
            Shape::MonomialRegion { constraints } => constraints.iter().all(|c| match c.p[j] {
                0 => true,
                e if e > 0 => c.lower.is_none(),
                _ => false,
            }),
        }
    }

    pub fn meets_any_axis(&self) -> bool {
        (0..self.n).any(|j| self.axis_meets(j))
    }

    /// Coordinate-wise bounds of the radial shadow, `None` if unbounded.
    pub fn radial_bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        match &self.shape {
            Shape::Product { factors } => Some(factors.iter().map(|f| (to_f64(&f.lower()), to_f64(f.upper()))).collect()),
            Shape::Ellipsoid { .. } => Some(vec![(0.0, 1.0); self.n]),
            Shape::MonomialRegion { constraints } => {
                let inv = rational_inverse(&self.constraint_matrix()?).to_f64();
                (0..self.n)
                    .map(|i| {
                        let mut hi = 1.0;
                        let mut lo = 1.0;
                        for (j, c) in constraints.iter().enumerate() {
                            let e = inv[i][j];
                            let (l, u) = (c.lower_f64(), to_f64(&c.upper));
                            if e > 0.0 {
                                hi *= u.powf(e);
                                lo *= l.powf(e);
                            } else if e < 0.0 {
                                if l == 0.0 {
                                    return None;
                                }
                                hi *= l.powf(e);
                                lo *= u.powf(e);
                            }
                        }
                        Some((lo, hi))
                    })
                    .collect()
            }
        }
    }

    /// Seeded off-axes points from the compact sub-region scaled by `scale`.
    ///
    /// Radii stay at least `0.1·scale` of the outer size so that the points keep a
    /// margin from the coordinate hyperplanes.
    pub fn sample_points(&self, scale: f64, count: usize, seed: u64) -> Vec<ComplexPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let Some(r) = self.sample_radial(scale, &mut rng) else { continue };
            let theta: Vec<f64> = (0..self.n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let z = ComplexPoint::from_polar(&r, &theta);
            if self.contains(&z) {
                out.push(z);
            }
        }
        out
    }

    fn sample_radial(&self, s: f64, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        match &self.shape {
            Shape::Product { factors } => Some(
                factors
                    .iter()
                    .map(|f| {
                        let (lo, hi) = match f {
                            RadialFactor::Annulus { inner, outer } => (to_f64(inner) / s, s * to_f64(outer)),
                            _ => (0.1 * s * to_f64(f.upper()), s * to_f64(f.upper())),
                        };
                        rng.gen_range(lo..=hi)
                    })
                    .collect(),
            ),
            Shape::Ellipsoid { powers } => {
                let r: Vec<f64> = (0..self.n).map(|_| rng.gen_range(0.1 * s..s)).collect();
                let t: f64 = r.iter().zip(powers).map(|(x, p)| (x / s).powf(2.0 * to_f64(p))).sum();
                (t < 1.0).then_some(r)
            }
            Shape::MonomialRegion { constraints } => {
                let inv = rational_inverse(&self.constraint_matrix()?).to_f64();
                let v: Vec<f64> = constraints
                    .iter()
                    .map(|c| {
                        let u = to_f64(&c.upper);
                        let lo = (c.lower_f64() / s).max(0.1 * s * u);
                        rng.gen_range(lo..=s * u)
                    })
                    .collect();
                Some(inv.iter().map(|row| positive_power(&v, row)).collect())
            }
        }
    }
}

/// `ω(z) = scale·∏ |z_j|^{2μ_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(with = "serde_qvec")]
    pub mu: Vec<Q>,
    #[serde(with = "serde_q")]
    pub scale: Q,
}

impl WeightSpec {
    pub fn unit(n: usize) -> Self {
        Self { mu: vec![Q::zero(); n], scale: Q::one() }
    }

    pub fn monomial(mu: Vec<Q>) -> Self {
        Self { mu, scale: Q::one() }
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu_f64(&self) -> Vec<f64> {
        self.mu.iter().map(to_f64).collect()
    }

    pub fn eval(&self, z: &ComplexPoint) -> f64 {
        let two_mu: Vec<f64> = self.mu.iter().map(|m| 2.0 * to_f64(m)).collect();
        to_f64(&self.scale) * positive_power(&z.moduli(), &two_mu)
    }
}

/// `c(b) = (1 − b)·A⁻¹ − 1`.
pub fn weight_c(b: &[BigInt], a: &IntMatrix) -> Result<Vec<Q>> {
    weight_c_with(b, &rational_inverse(a))
}

fn weight_c_with(b: &[BigInt], inv: &RatMatrix) -> Result<Vec<Q>> {
    check_len(inv.n(), b.len())?;
    let v: Vec<Q> = b.iter().map(|x| Q::from_integer(BigInt::one() - x)).collect();
    Ok(inv.left_mul(&v).into_iter().map(|x| x - Q::one()).collect())
}

/// `η_b = |det A|⁻¹ |F_c|² ω₂`.
pub fn eta_weight(b: &[BigInt], a: &IntMatrix, omega2: &WeightSpec) -> Result<WeightSpec> {
    check_len(a.n(), omega2.n())?;
    let c = weight_c(b, a)?;
    Ok(WeightSpec {
        mu: c.iter().zip(&omega2.mu).map(|(c, m)| c + m).collect(),
        scale: &omega2.scale / Q::from_integer(a.det().abs()),
    })
}

/// `ω₁ = ω₂ ∘ Φ_A`, i.e. `μ₁ = μ₂·A` with the same scale.
pub fn pullback_weight(omega2: &WeightSpec, a: &IntMatrix) -> Result<WeightSpec> {
    check_len(a.n(), omega2.n())?;
    let n = a.n();
    let mu = (0..n)
        .map(|j| (0..n).map(|i| &omega2.mu[i] * Q::from_integer(a.get(i, j).clone())).sum())
        .collect();
    Ok(WeightSpec { mu, scale: omega2.scale.clone() })
}

/// The admissibility test `μ_j < 1/2` on every axis meeting the domain.
pub fn is_admissible(w: &WeightSpec, d: &ReinhardtDomain) -> bool {
    let half = Q::new(BigInt::one(), BigInt::from(2));
    (0..d.n).all(|j| !d.axis_meets(j) || w.mu[j] < half)
}

/// Whether every square-integrable holomorphic function on the axes-deleted
/// domain extends across the axes: `μ_j ≤ 0` on every axis meeting the domain.
///
/// This is the sharp condition; for `0 < μ_j < 1/2` the function `z_j^{-1}` is
/// square integrable near the axis.
pub fn extends_across_axes(w: &WeightSpec, d: &ReinhardtDomain) -> bool {
    (0..d.n).all(|j| !d.axis_meets(j) || !w.mu[j].is_positive())
}

/// A representative `b = b* + m·A` of the character `chi` whose weight `η_b`
/// has `c_j + μ_j ∈ (−1, 0]` on every axis meeting `d2`.
///
/// Shifting by `m·A` lowers `c` by `m`, so `m_j = ⌈c(b*)_j + μ_j⌉` on those axes
/// and `0` elsewhere.
pub fn admissible_representative(
    chi: &CosetRep,
    a: &IntMatrix,
    omega2: &WeightSpec,
    d2: &ReinhardtDomain,
) -> Result<Vec<BigInt>> {
    check_len(a.n(), chi.m.len())?;
    let c = weight_c(&chi.m, a)?;
    let m: Vec<BigInt> = (0..a.n())
        .map(|j| if d2.axis_meets(j) { ceil(&(&c[j] + &omega2.mu[j])) } else { BigInt::zero() })
        .collect();
    let shift = a.left_mul(&m)?;
    Ok(chi.m.iter().zip(shift).map(|(x, y)| x + y).collect())
}

pub fn to_i64_vec(v: &[BigInt]) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| x.to_i64().ok_or_else(|| Error::Argument("integer exceeds machine range".into())))
        .collect()
}
