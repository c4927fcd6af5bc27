//! Exact integer and rational linear algebra.
//!
//! Everything here is arbitrary precision. The Smith normal form is computed
//! by gcd-driven elimination with explicit accumulation of the unimodular
//! factors, so `S·A·T = diag(λ)` can be checked entry by entry.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::rational::Q;
use crate::{Error, Result};

/// Non-singular square integer matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMatrix {
    rows: Vec<Vec<BigInt>>,
    det: BigInt,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Argument("empty matrix".into()));
        }
        for r in &rows {
            if r.len() != n {
                return Err(Error::Dimension { expected: n, got: r.len() });
            }
        }
        let det = bareiss_det(&rows);
        if det.is_zero() {
            return Err(Error::Singular);
        }
        Ok(Self { rows, det })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: identity_rows(n), det: BigInt::one() }
    }

    pub fn diag(d: &[i64]) -> Result<Self> {
        let n = d.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { d[i] } else { 0 }).collect())
            .collect::<Vec<Vec<i64>>>();
        Self::from_i64(&rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    pub fn transpose(&self) -> Self {
        let n = self.n();
        let rows = (0..n).map(|i| (0..n).map(|j| self.rows[j][i].clone()).collect()).collect();
        Self { rows, det: self.det.clone() }
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let rows = mat_mul(&self.rows, &other.rows);
        IntMatrix { rows, det: &self.det * &other.det }
    }

    /// Integer adjugate, `adj(A) = det(A)·A⁻¹`.
    pub fn adjugate(&self) -> Vec<Vec<BigInt>> {
        let inv = rational_inverse(self);
        let d = Q::from_integer(self.det.clone());
        inv.rows
            .iter()
            .map(|r| r.iter().map(|x| (x * &d).to_integer()).collect())
            .collect()
    }

    pub fn to_i64(&self) -> Option<Vec<Vec<i64>>> {
        self.rows.iter().map(|r| r.iter().map(|x| x.to_i64()).collect()).collect()
    }

    /// Row vector times matrix, `v·A`.
    pub fn left_mul(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        check_len(self.n(), v.len())?;
        Ok(vec_mat(v, &self.rows))
    }

    pub fn is_unimodular(&self) -> bool {
        self.det.abs().is_one()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, x) in r.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.rows.iter().map(|r| r.iter().map(int_json).collect::<Vec<_>>()))
    }
}

fn int_json(x: &BigInt) -> IntJson {
    match x.to_i64() {
        Some(v) => IntJson::Small(v),
        None => IntJson::Big(x.to_string()),
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum IntJson {
    Small(i64),
    Big(String),
}

/// Square rational matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatMatrix {
    pub rows: Vec<Vec<Q>>,
}

impl RatMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.rows[i][j]
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.iter().map(crate::rational::to_f64).collect()).collect()
    }

    /// Row vector times matrix over the rationals.
    pub fn left_mul(&self, v: &[Q]) -> Vec<Q> {
        let n = self.n();
        (0..n).map(|j| (0..n).map(|i| &v[i] * &self.rows[i][j]).sum()).collect()
    }

    pub fn mul_int_left(&self, a: &IntMatrix) -> RatMatrix {
        let n = self.n();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| Q::from_integer(a.get(i, k).clone()) * &self.rows[k][j]).sum())
                    .collect()
            })
            .collect();
        RatMatrix { rows }
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, r)| {
            r.iter().enumerate().all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() })
        })
    }
}

/// Unimodular `S`, `T` and invariant factors with `S·A·T = diag(λ)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SmithDecomposition {
    pub s: IntMatrix,
    pub t: IntMatrix,
    pub lambda: Vec<BigInt>,
}

impl SmithDecomposition {
    /// Checks every invariant against `a` exactly.
    pub fn verify(&self, a: &IntMatrix) -> bool {
        let n = a.n();
        let prod = mat_mul(&mat_mul(self.s.rows(), a.rows()), self.t.rows());
        let diag_ok = (0..n).all(|i| {
            (0..n).all(|j| if i == j { prod[i][j] == self.lambda[i] } else { prod[i][j].is_zero() })
        });
        let chain_ok = self.lambda.iter().all(|l| l.is_positive())
            && self.lambda.windows(2).all(|w| (&w[1] % &w[0]).is_zero());
        let prod_ok = self.lambda.iter().fold(BigInt::one(), |acc, l| acc * l) == a.det().abs();
        diag_ok && chain_ok && prod_ok && self.s.is_unimodular() && self.t.is_unimodular()
    }
}

pub fn smith_normal_form(a: &IntMatrix) -> SmithDecomposition {
    let n = a.n();
    let mut m = a.rows.clone();
    let mut s = identity_rows(n);
    let mut t = identity_rows(n);

    for p in 0..n {
        loop {
            // Smallest nonzero |entry| in the trailing block; ties by row then column.
            let mut best: Option<(usize, usize)> = None;
            for i in p..n {
                for j in p..n {
                    if m[i][j].is_zero() {
                        continue;
                    }
                    match best {
                        Some((bi, bj)) if m[i][j].abs() >= m[bi][bj].abs() => {}
                        _ => best = Some((i, j)),
                    }
                }
            }
            let (pi, pj) = best.expect("non-singular matrix has a nonzero trailing block");
            m.swap(p, pi);
            s.swap(p, pi);
            swap_cols(&mut m, p, pj);
            swap_cols(&mut t, p, pj);

            let mut dirty = false;
            for i in p + 1..n {
                if m[i][p].is_zero() {
                    continue;
                }
                let q = m[i][p].div_floor(&m[p][p]);
                add_row(&mut m, i, p, &-&q);
                add_row(&mut s, i, p, &-&q);
                dirty |= !m[i][p].is_zero();
            }
            for j in p + 1..n {
                if m[p][j].is_zero() {
                    continue;
                }
                let q = m[p][j].div_floor(&m[p][p]);
                add_col(&mut m, j, p, &-&q);
                add_col(&mut t, j, p, &-&q);
                dirty |= !m[p][j].is_zero();
            }
            if dirty {
                continue;
            }
            // Divisibility: fold an offending row into the pivot row and retry.
            let offending = (p + 1..n).find(|&i| (p + 1..n).any(|j| !(&m[i][j] % &m[p][p]).is_zero()));
            match offending {
                Some(i) => {
                    add_row(&mut m, p, i, &BigInt::one());
                    add_row(&mut s, p, i, &BigInt::one());
                }
                None => break,
            }
        }
        if m[p][p].is_negative() {
            for x in m[p].iter_mut() {
                *x = -&*x;
            }
            for x in s[p].iter_mut() {
                *x = -&*x;
            }
        }
    }

    let lambda = (0..n).map(|i| m[i][i].clone()).collect();
    let s = IntMatrix { det: bareiss_det(&s), rows: s };
    let t = IntMatrix { det: bareiss_det(&t), rows: t };
    SmithDecomposition { s, t, lambda }
}

/// Exact inverse by Gauss–Jordan elimination over the rationals.
pub fn rational_inverse(a: &IntMatrix) -> RatMatrix {
    let n = a.n();
    let mut m: Vec<Vec<Q>> = a.rows.iter().map(|r| r.iter().map(|x| Q::from_integer(x.clone())).collect()).collect();
    let mut inv: Vec<Vec<Q>> = identity_rows(n)
        .into_iter()
        .map(|r| r.into_iter().map(Q::from_integer).collect())
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| !m[r][c].is_zero()).expect("non-singular");
        m.swap(c, piv);
        inv.swap(c, piv);
        let d = m[c][c].clone();
        for j in 0..n {
            m[c][j] = &m[c][j] / &d;
            inv[c][j] = &inv[c][j] / &d;
        }
        for r in 0..n {
            if r == c || m[r][c].is_zero() {
                continue;
            }
            let f = m[r][c].clone();
            for j in 0..n {
                let dm = &f * &m[c][j];
                m[r][j] -= dm;
                let di = &f * &inv[c][j];
                inv[r][j] -= di;
            }
        }
    }
    RatMatrix { rows: inv }
}

/// Whether `v` lies in the integer row span `{ m·A : m ∈ ℤⁿ }`.
///
/// The module `𝔠(A)` generated by the columns of `A` is the row span of `Aᵗ`,
/// so `𝔠(A)` membership is `in_row_span(&a.transpose(), v)` and `𝔠(Aᵗ)`
/// membership is `in_row_span(&a, v)`.
pub fn in_row_span(a: &IntMatrix, v: &[BigInt]) -> Result<bool> {
    check_len(a.n(), v.len())?;
    let inv = rational_inverse(a);
    let vq: Vec<Q> = v.iter().map(|x| Q::from_integer(x.clone())).collect();
    Ok(inv.left_mul(&vq).iter().all(|x| x.is_integer()))
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

pub fn vec_mat(v: &[BigInt], m: &[Vec<BigInt>]) -> Vec<BigInt> {
    let n = m.first().map_or(0, |r| r.len());
    (0..n).map(|j| v.iter().zip(m).map(|(x, r)| x * &r[j]).sum()).collect()
}

pub fn bigvec(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn identity_rows(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    a.iter().map(|r| vec_mat(r, b)).collect()
}

fn swap_cols(m: &mut [Vec<BigInt>], a: usize, b: usize) {
    for r in m.iter_mut() {
        r.swap(a, b);
    }
}

/// `row[dst] += f · row[src]`
fn add_row(m: &mut [Vec<BigInt>], dst: usize, src: usize, f: &BigInt) {
    let add: Vec<BigInt> = m[src].iter().map(|x| x * f).collect();
    for (x, a) in m[dst].iter_mut().zip(add) {
        *x += a;
    }
}

/// `col[dst] += f · col[src]`
fn add_col(m: &mut [Vec<BigInt>], dst: usize, src: usize, f: &BigInt) {
    for r in m.iter_mut() {
        let a = &r[src] * f;
        r[dst] += a;
    }
}

fn bareiss_det(rows: &[Vec<BigInt>]) -> BigInt {
    let n = rows.len();
    let mut m = rows.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}
