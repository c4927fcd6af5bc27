//! Monomials `F_b`, monomial maps `Φ_A`, their Jacobians and fibers.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::group::GroupData;
use crate::intlin::{check_len, IntMatrix};
use crate::rational::{to_f64, Q};
use crate::{Error, Result};

use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint(pub Vec<Complex64>);

impl ComplexPoint {
    pub fn new(z: Vec<Complex64>) -> Self {
        ComplexPoint(z)
    }

    pub fn real(x: &[f64]) -> Self {
        ComplexPoint(x.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_polar(r: &[f64], theta: &[f64]) -> Self {
        ComplexPoint(r.iter().zip(theta).map(|(&r, &t)| Complex64::from_polar(r, TAU * t)).collect())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    /// Every coordinate is nonzero, i.e. the point avoids the coordinate hyperplanes.
    pub fn is_off_axes(&self) -> bool {
        self.0.iter().all(|z| z.norm() > 0.0)
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm()).collect()
    }

    pub fn dist(&self, o: &ComplexPoint) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hadamard(&self, o: &[Complex64]) -> ComplexPoint {
        ComplexPoint(self.0.iter().zip(o).map(|(a, b)| a * b).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exponent {
    Int(Vec<i64>),
    Real(Vec<Q>),
}

impl Exponent {
    pub fn len(&self) -> usize {
        match self {
            Exponent::Int(v) => v.len(),
            Exponent::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `z^k` by binary exponentiation; negative powers invert the positive one.
pub fn cpowi(z: Complex64, k: i64) -> Result<Complex64> {
    if k < 0 && z.is_zero() {
        return Err(Error::Domain("zero coordinate raised to a negative power".into()));
    }
    let mut base = z;
    let mut e = k.unsigned_abs();
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    Ok(if k < 0 { acc.inv() } else { acc })
}

/// `F_b(z) = ∏ z_j^{b_j}`.
pub fn eval_f(b: &Exponent, z: &ComplexPoint) -> Result<Complex64> {
    check_len(z.n(), b.len())?;
    match b {
        Exponent::Int(b) => eval_f_int(b, z),
        Exponent::Real(b) => {
            let mut acc = Complex64::new(1.0, 0.0);
            for (bj, zj) in b.iter().zip(&z.0) {
                if bj.is_integer() {
                    acc *= cpowi(*zj, bj.to_integer().to_i64().ok_or_else(|| Error::Argument("exponent too large".into()))?)?;
                } else if zj.im == 0.0 && zj.re > 0.0 {
                    acc *= (to_f64(bj) * zj.re.ln()).exp();
                } else {
                    return Err(Error::Domain("non-integer exponent on a non-positive-real coordinate".into()));
                }
            }
            Ok(acc)
        }
    }
}

pub fn eval_f_int(b: &[i64], z: &ComplexPoint) -> Result<Complex64> {
    check_len(z.n(), b.len())?;
    b.iter().zip(&z.0).try_fold(Complex64::new(1.0, 0.0), |acc, (&k, &zj)| Ok(acc * cpowi(zj, k)?))
}

/// `∏ r_j^{b_j}` for positive reals and real exponents, via `exp(Σ b ln r)`.
pub fn positive_power(r: &[f64], b: &[f64]) -> f64 {
    r.iter().zip(b).map(|(r, b)| if *b == 0.0 { 0.0 } else { b * r.ln() }).sum::<f64>().exp()
}

/// `Φ_A(z)`: component `j` is `F_{a_j}(z)` for the j-th row `a_j`.
pub fn eval_phi(a: &IntMatrix, z: &ComplexPoint) -> Result<ComplexPoint> {
    check_len(a.n(), z.n())?;
    let rows = rows_i64(a)?;
    eval_phi_rows(&rows, z)
}

pub fn eval_phi_rows(rows: &[Vec<i64>], z: &ComplexPoint) -> Result<ComplexPoint> {
    Ok(ComplexPoint(rows.iter().map(|r| eval_f_int(r, z)).collect::<Result<_>>()?))
}

pub fn rows_i64(a: &IntMatrix) -> Result<Vec<Vec<i64>>> {
    a.to_i64().ok_or_else(|| Error::Argument("matrix entries exceed machine range".into()))
}

/// `det(A)·F_{1·A−1}(z)`.
pub fn jacobian_det(a: &IntMatrix, z: &ComplexPoint) -> Result<Complex64> {
    check_len(a.n(), z.n())?;
    let rows = rows_i64(a)?;
    let n = a.n();
    let e: Vec<i64> = (0..n).map(|j| rows.iter().map(|r| r[j]).sum::<i64>() - 1).collect();
    let d = a.det().to_f64().unwrap();
    Ok(eval_f_int(&e, z)? * d)
}

/// `z = r ⊗ exp(2πiθ)` with `θ_j ∈ [0,1)`.
pub fn polar(z: &ComplexPoint) -> Result<(Vec<f64>, Vec<f64>)> {
    if !z.is_off_axes() {
        return Err(Error::Domain("polar form needs an off-axes point".into()));
    }
    let r = z.moduli();
    let theta = z
        .0
        .iter()
        .map(|c| {
            let t = c.arg() / TAU;
            let t = if t < 0.0 { t + 1.0 } else { t };
            if t >= 1.0 { 0.0 } else { t }
        })
        .collect();
    Ok((r, theta))
}

/// The principal preimage `Φ_{A⁻¹}(ρ) ⊗ exp(2πi φ·(A⁻¹)ᵗ)` of `w = ρ ⊗ exp(2πiφ)`.
pub fn principal_preimage(g: &GroupData, w: &ComplexPoint) -> Result<ComplexPoint> {
    check_len(g.n(), w.n())?;
    let (rho, phi) = polar(w)?;
    let inv = g.ainv.to_f64();
    let n = g.n();
    let z = (0..n)
        .map(|i| {
            let modulus = positive_power(&rho, &inv[i]);
            let arg: f64 = (0..n).map(|l| phi[l] * inv[i][l]).sum();
            Complex64::from_polar(modulus, TAU * arg)
        })
        .collect();
    Ok(ComplexPoint(z))
}

/// `Φ_A⁻¹(w)` as the `𝔾_A`-orbit of the principal preimage, in coset-rep order.
pub fn fiber(g: &GroupData, w: &ComplexPoint) -> Result<Vec<ComplexPoint>> {
    let z0 = principal_preimage(g, w)?;
    Ok(g.action_phases().iter().map(|xi| z0.hadamard(xi)).collect())
}

/// `ξ([m]) ⊗ z`.
pub fn action_apply(g: &GroupData, m: &[BigInt], z: &ComplexPoint) -> Result<ComplexPoint> {
    check_len(g.n(), z.n())?;
    if !z.is_off_axes() {
        return Err(Error::Domain("the action is applied to off-axes points".into()));
    }
    let xi: Vec<Complex64> = g.xi_phases(m)?.iter().map(|p| p.to_complex()).collect();
    Ok(z.hadamard(&xi))
}
