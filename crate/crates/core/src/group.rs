//! The deck group `𝔾_A = ℤⁿ/𝔠(A)` and its characters, indexed by `𝔾_{Aᵗ}`.
//!
//! Representatives come from the Smith normal form `S·A·T = Λ`:
//! `ι([m]) = (m·Sᵗ)_j mod λ_j` identifies `𝔾_A` with `⊕ ℤ/λ_j`, and the
//! canonical representative of a residue tuple `k` is `k·(Sᵗ)⁻¹`. The dual
//! quotient uses the same decomposition with `S' = Tᵗ`.

use std::collections::HashSet;
use std::ops::{Add, Neg};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::intlin::{check_len, rational_inverse, smith_normal_form, vec_mat, IntMatrix, RatMatrix, SmithDecomposition};
use crate::rational::{fmt_q, Q};
use crate::{Error, Result};

pub const DEFAULT_ORDER_CAP: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Quotient {
    /// `𝔾_A = ℤⁿ/𝔠(A)`, the group acting on points.
    GA,
    /// `𝔾_{Aᵗ} = ℤⁿ/𝔠(Aᵗ)`, labelling characters.
    GAt,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CosetRep {
    pub m: Vec<BigInt>,
    pub parent: Quotient,
}

impl CosetRep {
    pub fn to_i64(&self) -> Vec<i64> {
        self.m.iter().map(|x| x.to_i64().expect("representative fits in i64")).collect()
    }
}

/// A point `e^{2πiθ}` of the circle stored as the exact rational `θ mod 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Phase(Q);

impl Phase {
    pub fn new(theta: Q) -> Self {
        let f = &theta - theta.floor();
        Phase(f)
    }

    pub fn zero() -> Self {
        Phase(Q::zero())
    }

    pub fn value(&self) -> &Q {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_complex(&self) -> Complex64 {
        let t = std::f64::consts::TAU * crate::rational::to_f64(&self.0);
        Complex64::new(t.cos(), t.sin())
    }
}

impl Add for Phase {
    type Output = Phase;
    fn add(self, o: Phase) -> Phase {
        Phase::new(self.0 + o.0)
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase::new(-self.0)
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&fmt_q(&self.0))
    }
}

#[derive(Clone, Debug)]
pub struct GroupData {
    pub a: IntMatrix,
    pub order: usize,
    pub reps_ga: Vec<CosetRep>,
    pub reps_gat: Vec<CosetRep>,
    pub ainv: RatMatrix,
    pub snf: SmithDecomposition,
    lambda: Vec<BigInt>,
    /// `det(A)·A⁻¹`
    adj: Vec<Vec<BigInt>>,
    det: BigInt,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalityReport {
    pub exact_pass: bool,
    pub max_deviation: f64,
    pub pairs_checked: usize,
}

pub fn build_group(a: &IntMatrix) -> Result<GroupData> {
    build_group_with_cap(a, DEFAULT_ORDER_CAP)
}

pub fn build_group_with_cap(a: &IntMatrix, cap: u64) -> Result<GroupData> {
    let det = a.det().clone();
    let order_big = det.abs();
    if order_big > BigInt::from(cap) {
        return Err(Error::GroupTooLarge { order: order_big.to_string(), cap });
    }
    let order = order_big.to_usize().expect("capped order fits");
    let snf = smith_normal_form(a);
    let lambda = snf.lambda.clone();

    // (Sᵗ)⁻¹ = (S⁻¹)ᵗ and T⁻¹ are integral because S, T are unimodular.
    let s_inv_t = integral(&rational_inverse(&snf.s)).transpose_rows();
    let t_inv = integral(&rational_inverse(&snf.t));
    let tuples = residue_tuples(&lambda);
    let reps_ga = tuples
        .iter()
        .map(|k| CosetRep { m: vec_mat(k, &s_inv_t.0), parent: Quotient::GA })
        .collect();
    let reps_gat = tuples
        .iter()
        .map(|k| CosetRep { m: vec_mat(k, &t_inv.0), parent: Quotient::GAt })
        .collect();

    Ok(GroupData {
        a: a.clone(),
        order,
        reps_ga,
        reps_gat,
        ainv: rational_inverse(a),
        adj: a.adjugate(),
        det,
        snf,
        lambda,
    })
}

struct Rows(Vec<Vec<BigInt>>);

impl Rows {
    fn transpose_rows(self) -> Rows {
        let n = self.0.len();
        Rows((0..n).map(|i| (0..n).map(|j| self.0[j][i].clone()).collect()).collect())
    }
}

fn integral(m: &RatMatrix) -> Rows {
    Rows(m.rows.iter().map(|r| r.iter().map(|x| x.to_integer()).collect()).collect())
}

/// All tuples in `∏ [0, λ_j)`, lexicographic with the first coordinate slowest.
fn residue_tuples(lambda: &[BigInt]) -> Vec<Vec<BigInt>> {
    let mut out = vec![Vec::new()];
    for l in lambda {
        let l = l.to_i64().expect("capped invariant factor");
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..l).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(BigInt::from(x));
                    p
                })
            })
            .collect();
    }
    out
}

impl GroupData {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn invariant_factors(&self) -> &[BigInt] {
        &self.lambda
    }

    /// `ι([m]) = (m·Sᵗ)_j mod λ_j`.
    pub fn iota(&self, m: &[BigInt]) -> Result<Vec<BigInt>> {
        check_len(self.n(), m.len())?;
        let st = self.snf.s.transpose();
        Ok(reduce(&vec_mat(m, st.rows()), &self.lambda))
    }

    /// The dual map on `𝔾_{Aᵗ}`, `(b·T)_j mod λ_j`.
    pub fn iota_t(&self, b: &[BigInt]) -> Result<Vec<BigInt>> {
        check_len(self.n(), b.len())?;
        Ok(reduce(&vec_mat(b, self.snf.t.rows()), &self.lambda))
    }

    fn tuple_index(&self, k: &[BigInt]) -> usize {
        k.iter().zip(&self.lambda).fold(0usize, |acc, (x, l)| {
            acc * l.to_usize().unwrap() + x.to_usize().unwrap()
        })
    }

    /// Position of `[m]` in `reps_ga`.
    pub fn index_of(&self, m: &[BigInt]) -> Result<usize> {
        Ok(self.tuple_index(&self.iota(m)?))
    }

    /// Position of `[[b]]` in `reps_gat`.
    pub fn index_of_t(&self, b: &[BigInt]) -> Result<usize> {
        Ok(self.tuple_index(&self.iota_t(b)?))
    }

    /// `θ` with `ξ_j([m]) = e^{2πiθ}`, i.e. `⟨m, e_j·A⁻¹⟩ mod 1` (j is 0-based).
    pub fn xi_phase(&self, m: &[BigInt], j: usize) -> Result<Phase> {
        check_len(self.n(), m.len())?;
        if j >= self.n() {
            return Err(Error::Argument(format!("axis index {j} out of range")));
        }
        let t: BigInt = m.iter().zip(&self.adj[j]).map(|(x, y)| x * y).sum();
        Ok(Phase::new(Q::new(t, self.det.clone())))
    }

    pub fn xi_phases(&self, m: &[BigInt]) -> Result<Vec<Phase>> {
        (0..self.n()).map(|j| self.xi_phase(m, j)).collect()
    }

    /// `χ_b([m]) = exp(2πi⟨m, b·A⁻¹⟩)`, for any integer representatives.
    pub fn character_value(&self, b: &[BigInt], m: &[BigInt]) -> Result<Phase> {
        check_len(self.n(), b.len())?;
        check_len(self.n(), m.len())?;
        Ok(Phase::new(Q::new(self.pairing(b, m), self.det.clone())))
    }

    /// `b·adj(A)·mᵗ`
    fn pairing(&self, b: &[BigInt], m: &[BigInt]) -> BigInt {
        let u = vec_mat(b, &self.adj);
        u.iter().zip(m).map(|(x, y)| x * y).sum()
    }

    /// Character table as residues mod `|det A|`: entry `[χ][g]` is `D·θ`.
    pub fn character_residues(&self) -> Vec<Vec<u64>> {
        let d = self.det.abs();
        let sign = self.det.signum();
        self.reps_gat
            .iter()
            .map(|b| {
                let u = vec_mat(&b.m, &self.adj);
                self.reps_ga
                    .iter()
                    .map(|g| {
                        let t: BigInt = u.iter().zip(&g.m).map(|(x, y)| x * y).sum::<BigInt>() * &sign;
                        t.mod_floor(&d).to_u64().unwrap()
                    })
                    .collect()
            })
            .collect()
    }

    /// Exact rational character table, rows indexed by `reps_gat`.
    pub fn character_table(&self) -> Vec<Vec<Phase>> {
        let d = self.det.abs();
        self.character_residues()
            .into_iter()
            .map(|r| r.into_iter().map(|x| Phase::new(Q::new(BigInt::from(x), d.clone()))).collect())
            .collect()
    }

    /// Row and column orthogonality of the character table.
    ///
    /// The exact verdict uses the fact that `g ↦ θ₁(g) − θ₂(g)` is a
    /// homomorphism into `ℤ/D`: its values must cover a subgroup uniformly, and
    /// the phase sum is `order` for the trivial image and `0` otherwise.
    pub fn check_orthogonality(&self) -> OrthogonalityReport {
        let table = self.character_residues();
        let d = self.det.abs().to_u64().unwrap();
        let n = self.order;
        let roots: Vec<Complex64> = (0..d)
            .map(|r| Complex64::from_polar(1.0, std::f64::consts::TAU * r as f64 / d as f64))
            .collect();
        let mut exact_pass = true;
        let mut max_dev = 0.0f64;
        let mut counts = vec![0usize; d as usize];
        let mut pairs = 0;

        let mut judge = |values: &mut dyn Iterator<Item = u64>, expected: usize| {
            counts.iter_mut().for_each(|c| *c = 0);
            let mut sum = Complex64::new(0.0, 0.0);
            for v in values {
                counts[v as usize] += 1;
                sum += roots[v as usize];
            }
            let exact = exact_sum(&counts, d, n);
            max_dev = max_dev.max((sum - Complex64::new(expected as f64, 0.0)).norm());
            exact == Some(expected)
        };

        for i in 0..n {
            for j in 0..n {
                let mut it = (0..n).map(|g| (table[i][g] + d - table[j][g]) % d);
                exact_pass &= judge(&mut it, if i == j { n } else { 0 });
                pairs += 1;
            }
        }
        for g in 0..n {
            let mut it = (0..n).map(|c| table[c][g]);
            exact_pass &= judge(&mut it, if g == 0 { n } else { 0 });
        }
        OrthogonalityReport { exact_pass, max_deviation: max_dev, pairs_checked: pairs }
    }

    /// Every character equals `∏ ξ_k^{b_k}`, checked exactly.
    pub fn check_generators(&self) -> bool {
        let table = self.character_table();
        self.reps_gat.iter().zip(&table).all(|(b, row)| {
            self.reps_ga.iter().zip(row).all(|(g, want)| {
                let xs = self.xi_phases(&g.m).unwrap();
                let got = b
                    .m
                    .iter()
                    .zip(xs)
                    .fold(Phase::zero(), |acc, (bk, x)| acc + Phase::new(x.value() * Q::from_integer(bk.clone())));
                &got == want
            })
        })
    }

    /// Distinct elements of `𝔾_A` act by distinct phase vectors.
    pub fn check_faithful(&self) -> bool {
        let set: HashSet<Vec<Phase>> = self.reps_ga.iter().map(|g| self.xi_phases(&g.m).unwrap()).collect();
        set.len() == self.order
    }

    /// Representatives of `𝔾_A` as machine integers.
    pub fn reps_ga_i64(&self) -> Vec<Vec<i64>> {
        self.reps_ga.iter().map(CosetRep::to_i64).collect()
    }

    /// Representatives of `𝔾_{Aᵗ}` as machine integers.
    pub fn reps_gat_i64(&self) -> Vec<Vec<i64>> {
        self.reps_gat.iter().map(CosetRep::to_i64).collect()
    }

    /// Floating phases `ξ([m])` for every element of `reps_ga`.
    pub fn action_phases(&self) -> Vec<Vec<Complex64>> {
        self.reps_ga
            .iter()
            .map(|g| self.xi_phases(&g.m).unwrap().iter().map(Phase::to_complex).collect())
            .collect()
    }
}

fn reduce(v: &[BigInt], lambda: &[BigInt]) -> Vec<BigInt> {
    v.iter().zip(lambda).map(|(x, l)| x.mod_floor(l)).collect()
}

/// Exact value of `Σ e^{2πi v/D}` over a multiset given by `counts`, provided it
/// is the value distribution of a homomorphism (uniform over a subgroup).
fn exact_sum(counts: &[usize], d: u64, total: usize) -> Option<usize> {
    let support: Vec<u64> = (0..d).filter(|&v| counts[v as usize] > 0).collect();
    let g = support.iter().fold(d, |acc, &v| acc.gcd(&v));
    let size = (d / g) as usize;
    if !total.is_multiple_of(size) {
        return None;
    }
    let each = total / size;
    let uniform = (0..d).all(|v| counts[v as usize] == if v % g == 0 { each } else { 0 });
    if !uniform {
        return None;
    }
    Some(if size == 1 { total } else { 0 })
}

/// Adds `k` copies of `a`'s rows to `m` within the lattice `𝔠(Aᵗ)` or `𝔠(A)`.
pub fn shift_in_module(a: &IntMatrix, parent: Quotient, m: &[BigInt], k: &[BigInt]) -> Vec<BigInt> {
    let base = match parent {
        Quotient::GA => a.transpose(),
        Quotient::GAt => a.clone(),
    };
    let s = vec_mat(k, base.rows());
    m.iter().zip(s).map(|(x, y)| x + y).collect()
}

pub fn is_identity_rep(r: &CosetRep) -> bool {
    r.m.iter().all(|x| x.is_zero())
}

pub fn unit_vector(n: usize, j: usize) -> Vec<BigInt> {
    (0..n).map(|i| if i == j { BigInt::one() } else { BigInt::zero() }).collect()
}
