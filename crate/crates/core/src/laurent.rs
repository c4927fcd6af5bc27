//! Seeded Laurent polynomials used as test functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::monomial::{eval_f_int, ComplexPoint};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentPolynomial {
    pub n: usize,
    pub terms: Vec<(Vec<i64>, Complex64)>,
}

impl LaurentPolynomial {
    /// `count` terms with exponents drawn from `[lo, hi]ⁿ` and coefficients in the unit square.
    pub fn random(n: usize, count: usize, lo: i64, hi: i64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = (0..count)
            .map(|_| {
                let k = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (k, c)
            })
            .collect();
        Self { n, terms }
    }

    /// The default test window `[−3, 3]ⁿ`.
    pub fn random_window(n: usize, count: usize, seed: u64) -> Self {
        Self::random(n, count, -3, 3, seed)
    }

    /// Holomorphic polynomial with total degree at most `degree`.
    pub fn random_polynomial(n: usize, count: usize, degree: i64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = (0..count)
            .map(|_| {
                let mut left = degree;
                let k = (0..n)
                    .map(|_| {
                        let e = rng.gen_range(0..=left);
                        left -= e;
                        e
                    })
                    .collect();
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (k, c)
            })
            .collect();
        Self { n, terms }
    }

    pub fn monomial(k: Vec<i64>) -> Self {
        Self { n: k.len(), terms: vec![(k, Complex64::new(1.0, 0.0))] }
    }

    pub fn eval(&self, z: &ComplexPoint) -> Result<Complex64> {
        self.terms.iter().try_fold(Complex64::new(0.0, 0.0), |acc, (k, c)| Ok(acc + c * eval_f_int(k, z)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_in_window() {
        let p = LaurentPolynomial::random_window(2, 10, 5);
        assert_eq!(p, LaurentPolynomial::random_window(2, 10, 5));
        assert!(p.terms.iter().all(|(k, _)| k.iter().all(|e| (-3..=3).contains(e))));
        let q = LaurentPolynomial::random_polynomial(2, 10, 4, 1);
        assert!(q.terms.iter().all(|(k, _)| k.iter().all(|&e| e >= 0) && k.iter().sum::<i64>() <= 4));
    }

    #[test]
    fn evaluates_monomials() {
        let p = LaurentPolynomial::monomial(vec![2, -1]);
        let v = p.eval(&ComplexPoint::real(&[3.0, 2.0])).unwrap();
        assert!((v - Complex64::new(4.5, 0.0)).norm() < 1e-15);
    }
}
