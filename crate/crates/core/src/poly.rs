//! Exact polynomials in the weight-count basis.
//!
//! A [`CountPoly`] of degree `n` with coefficients `c[0..=n]` is the function
//! `p(x) = sum_e c[e] x^e (1-x)^(n-e)`: the measure of a set of length-`n`
//! patterns under the product Bernoulli(x) law, when `c[e]` counts the set's
//! members of weight `e`. Coefficients are exact integers; floating point
//! enters only in [`CountPoly::eval`] and [`CountPoly::integral`].

use std::ops::{Add, AddAssign};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CountPoly {
    coeffs: Vec<i128>,
}

impl CountPoly {
    /// The zero polynomial expressed at `degree`.
    pub fn zero(degree: usize) -> Self {
        Self { coeffs: vec![0; degree + 1] }
    }

    pub fn from_counts<T: Into<i128> + Copy>(counts: &[T]) -> Self {
        assert!(!counts.is_empty(), "a count polynomial needs at least one coefficient");
        Self { coeffs: counts.iter().map(|&c| c.into()).collect() }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn add_count(&mut self, weight: usize, count: i128) {
        self.coeffs[weight] += count;
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.degree();
        let y = 1.0 - x;
        // Terms evaluated independently; with nonnegative counts there is no
        // cancellation to guard against.
        let mut terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(e, &c)| c as f64 * pow_u(x, e) * pow_u(y, n - e))
            .collect();
        terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        terms.iter().sum()
    }

    /// Exact derivative, one degree lower:
    /// `d/dx sum c_e x^e (1-x)^(n-e) = sum_e ((e+1) c_{e+1} - (n-e) c_e) x^e (1-x)^(n-1-e)`.
    pub fn derivative(&self) -> CountPoly {
        let n = self.degree();
        if n == 0 {
            return CountPoly::zero(0);
        }
        let coeffs = (0..n)
            .map(|e| (e as i128 + 1) * self.coeffs[e + 1] - (n - e) as i128 * self.coeffs[e])
            .collect();
        CountPoly { coeffs }
    }

    /// Same function expressed at degree + 1 (multiplication by `x + (1-x)`).
    pub fn elevate(&self) -> CountPoly {
        let n = self.degree();
        let mut coeffs = vec![0; n + 2];
        for (e, &c) in self.coeffs.iter().enumerate() {
            coeffs[e] += c;
            coeffs[e + 1] += c;
        }
        CountPoly { coeffs }
    }

    pub fn elevate_to(&self, degree: usize) -> CountPoly {
        assert!(degree >= self.degree(), "cannot lower the degree of a count polynomial");
        let mut p = self.clone();
        while p.degree() < degree {
            p = p.elevate();
        }
        p
    }

    /// Multiplication by `x`, one degree higher.
    pub fn mul_x(&self) -> CountPoly {
        let mut coeffs = vec![0; self.coeffs.len() + 1];
        coeffs[1..].copy_from_slice(&self.coeffs);
        CountPoly { coeffs }
    }

    /// Multiplication by `1 - x`, one degree higher.
    pub fn mul_one_minus_x(&self) -> CountPoly {
        let mut coeffs = self.coeffs.clone();
        coeffs.push(0);
        CountPoly { coeffs }
    }

    pub fn scale(&self, k: i128) -> CountPoly {
        CountPoly { coeffs: self.coeffs.iter().map(|c| c * k).collect() }
    }

    /// `integral_0^1 p(x) dx = sum_e c_e / ((n+1) C(n,e))`.
    pub fn integral(&self) -> f64 {
        let n = self.degree();
        let mut terms: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(e, &c)| c as f64 / ((n + 1) as f64 * binomial(n, e) as f64))
            .collect();
        terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        terms.iter().sum()
    }

    /// Exact polynomial equality, comparing at a common degree.
    pub fn same_function(&self, other: &CountPoly) -> bool {
        let d = self.degree().max(other.degree());
        self.elevate_to(d) == other.elevate_to(d)
    }

    /// Coefficients in the monomial basis `sum_k a_k x^k`.
    pub fn to_monomial(&self) -> Vec<i128> {
        let n = self.degree();
        let mut out = vec![0i128; n + 1];
        for (e, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            // x^e (1-x)^(n-e) = sum_k C(n-e,k) (-1)^k x^(e+k)
            for k in 0..=(n - e) {
                let b = binomial(n - e, k) as i128;
                let sign = if k % 2 == 0 { 1 } else { -1 };
                out[e + k] += sign * b * c;
            }
        }
        out
    }
}

impl Add for &CountPoly {
    type Output = CountPoly;

    fn add(self, rhs: &CountPoly) -> CountPoly {
        let d = self.degree().max(rhs.degree());
        let a = self.elevate_to(d);
        let b = rhs.elevate_to(d);
        CountPoly { coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect() }
    }
}

impl AddAssign<&CountPoly> for CountPoly {
    fn add_assign(&mut self, rhs: &CountPoly) {
        *self = &*self + rhs;
    }
}

#[inline]
pub(crate) fn pow_u(x: f64, k: usize) -> f64 {
    x.powi(k as i32)
}

/// Binomial coefficient, exact while the running product fits in `u128`
/// (any `k` for `n <= 62`).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_matches_closed_forms() {
        // x^3 at degree 3
        let cube = CountPoly::from_counts(&[0i64, 0, 0, 1]);
        assert!((cube.eval(0.5) - 0.125).abs() < 1e-15);
        // 3x^2(1-x) + x^3
        let spc = CountPoly::from_counts(&[0i64, 0, 3, 1]);
        assert!((spc.eval(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_is_exact() {
        let spc = CountPoly::from_counts(&[0i64, 0, 3, 1]);
        // d/dx (3x^2 - 2x^3) = 6x - 6x^2
        let d = spc.derivative();
        for &x in &[0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!((d.eval(x) - (6.0 * x - 6.0 * x * x)).abs() < 1e-14);
        }
    }

    #[test]
    fn elevation_preserves_function() {
        let p = CountPoly::from_counts(&[1i64, 4, 2]);
        let q = p.elevate_to(5);
        for &x in &[0.0, 0.3, 0.7, 1.0] {
            assert!((p.eval(x) - q.eval(x)).abs() < 1e-14);
        }
        assert!(p.same_function(&q));
        assert_eq!(p.to_monomial(), q.to_monomial()[..3].to_vec());
    }

    #[test]
    fn integral_of_bernstein_terms() {
        // integral of x^2 over [0,1]
        let sq = CountPoly::from_counts(&[0i64, 0, 1]);
        assert!((sq.integral() - 1.0 / 3.0).abs() < 1e-15);
        // binomial counts are the constant function 1
        let full = CountPoly::from_counts(&[1i64, 3, 3, 1]);
        assert!((full.integral() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(22, 11), 705_432);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(62, 31), 465_428_353_255_261_088);
    }
}
