//! Multiset shift arithmetic and generalized divisor functions.
//!
//! A [`ShiftSet`] is a finite multiset of small complex shifts. For a multiset
//! `E = {xi_1, ..., xi_r}` the generalized divisor function is
//! `tau_E(m) = sum over m_1*...*m_r = m of m_1^{-xi_1} * ... * m_r^{-xi_r}`,
//! with `tau_{}(1) = 1` and `tau_{}(m) = 0` otherwise. Values at prime powers
//! determine everything by multiplicativity.

use crate::arith;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ShiftError {
    #[error("shift {0} has modulus {1:.3} > 1")]
    ShiftTooLarge(usize, f64),
    #[error("tau is undefined at m = 0")]
    ZeroArgument,
    #[error("prime-power exponent {0} below -1")]
    BadExponent(i64),
}

/// Finite multiset of complex shifts in canonical (re, im) lexicographic order.
///
/// Multiset equality is decidable because the element list is kept sorted;
/// equality of elements is exact on the f64 bit patterns, which is the right
/// notion here since sets are built from explicit constants and exact
/// arithmetic on them.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSet {
    shifts: Vec<Complex64>,
}

fn canonical_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap()
        .then(a.im.partial_cmp(&b.im).unwrap())
}

impl ShiftSet {
    /// Build a shift set, validating that every shift has modulus <= 1.
    pub fn new(shifts: Vec<Complex64>) -> Result<Self, ShiftError> {
        for (i, s) in shifts.iter().enumerate() {
            if s.norm() > 1.0 {
                return Err(ShiftError::ShiftTooLarge(i, s.norm()));
            }
        }
        Ok(Self::new_unchecked(shifts))
    }

    /// Internal constructor for evaluation sets (s-translates on contours can
    /// have large imaginary parts and are exempt from the modulus check).
    pub(crate) fn new_unchecked(mut shifts: Vec<Complex64>) -> Self {
        shifts.sort_by(canonical_order);
        Self { shifts }
    }

    pub fn from_reals(shifts: &[f64]) -> Result<Self, ShiftError> {
        Self::new(shifts.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn empty() -> Self {
        Self { shifts: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn shifts(&self) -> &[Complex64] {
        &self.shifts
    }

    /// The multiset with `s` added to each element.
    pub fn shift_by(&self, s: Complex64) -> ShiftSet {
        ShiftSet::new_unchecked(self.shifts.iter().map(|z| z + s).collect())
    }

    /// The multiset with each element negated.
    pub fn negate(&self) -> ShiftSet {
        ShiftSet::new_unchecked(self.shifts.iter().map(|z| -z).collect())
    }

    /// Multiset sum: multiplicities add.
    pub fn union(&self, other: &ShiftSet) -> ShiftSet {
        let mut v = self.shifts.clone();
        v.extend_from_slice(&other.shifts);
        ShiftSet::new_unchecked(v)
    }

    /// Multiset difference with multiplicities floored at zero.
    pub fn difference(&self, other: &ShiftSet) -> ShiftSet {
        let mut v = self.shifts.clone();
        for z in &other.shifts {
            if let Some(pos) = v.iter().position(|w| w == z) {
                v.remove(pos);
            }
        }
        ShiftSet::new_unchecked(v)
    }

    /// Remove one occurrence of `z`; no-op if absent.
    pub fn remove_one(&self, z: Complex64) -> ShiftSet {
        let mut v = self.shifts.clone();
        if let Some(pos) = v.iter().position(|w| *w == z) {
            v.remove(pos);
        }
        ShiftSet::new_unchecked(v)
    }

    pub fn with_element(&self, z: Complex64) -> ShiftSet {
        let mut v = self.shifts.clone();
        v.push(z);
        ShiftSet::new_unchecked(v)
    }

    pub fn max_modulus(&self) -> f64 {
        self.shifts.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// tau_E(m) for m >= 1, multiplicative over the prime factorization.
    pub fn tau(&self, m: u64) -> Result<Complex64, ShiftError> {
        if m == 0 {
            return Err(ShiftError::ZeroArgument);
        }
        let mut acc = Complex64::new(1.0, 0.0);
        for (p, a) in arith::factorize(m) {
            acc *= tau_prime_power(&self.shifts, p, a as i64)?;
        }
        Ok(acc)
    }

    /// tau_E(p^a); `a = -1` returns 0 by convention, `a < -1` is an error.
    pub fn tau_pp(&self, p: u64, a: i64) -> Result<Complex64, ShiftError> {
        tau_prime_power(&self.shifts, p, a)
    }

    /// Dense table of tau_E(m) for 1 <= m <= limit, index m (index 0 unused).
    pub fn tau_table(&self, limit: u64) -> Vec<Complex64> {
        let n = limit as usize;
        let mut table = vec![Complex64::new(0.0, 0.0); n + 1];
        if n == 0 {
            return table;
        }
        table[1] = Complex64::new(1.0, 0.0);
        if n == 1 {
            return table;
        }
        // smallest prime factor sieve, then multiplicativity
        let mut spf = vec![0u32; n + 1];
        for p in 2..=n {
            if spf[p] == 0 {
                let mut m = p;
                while m <= n {
                    if spf[m] == 0 {
                        spf[m] = p as u32;
                    }
                    m += p;
                }
            }
        }
        for m in 2..=n {
            let p = spf[m] as u64;
            let mut rest = m as u64;
            let mut a = 0i64;
            while rest % p == 0 {
                rest /= p;
                a += 1;
            }
            let local = tau_prime_power(&self.shifts, p, a).expect("a >= 1");
            table[m] = local * table[rest as usize];
        }
        table
    }
}

/// tau at a prime power for a raw element list (no modulus validation).
pub(crate) fn tau_prime_power(
    shifts: &[Complex64],
    p: u64,
    a: i64,
) -> Result<Complex64, ShiftError> {
    if a == -1 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if a < -1 {
        return Err(ShiftError::BadExponent(a));
    }
    let table = tau_powers_raw(shifts, p, a as usize);
    Ok(table[a as usize])
}

/// Full table tau_E(p^j) for j = 0..=max, for a raw element list.
///
/// Computed as the coefficients of prod over xi in E of 1/(1 - p^{-xi} x),
/// built by the first-order recurrence `new[j] = old[j] + p^{-xi} * new[j-1]`.
pub(crate) fn tau_powers_raw(shifts: &[Complex64], p: u64, max: usize) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); max + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    if shifts.is_empty() {
        return coeffs;
    }
    let lp = (p as f64).ln();
    let mut first = true;
    for xi in shifts {
        let w = (-xi * lp).exp(); // p^{-xi}
        if first {
            // 1/(1 - w x) directly: coeffs[j] = w^j
            let mut acc = Complex64::new(1.0, 0.0);
            for c in coeffs.iter_mut().skip(1) {
                acc *= w;
                *c = acc;
            }
            first = false;
        } else {
            for j in 1..=max {
                let prev = coeffs[j - 1];
                coeffs[j] += w * prev;
            }
        }
    }
    coeffs
}

/// Coefficient of x^a in
/// `prod_{rho in F} (1 - p^{-rho} x) * prod_{xi in E} (1 - p^{-xi} x)^{-1}`,
/// i.e. the p-power Dirichlet coefficient of
/// `prod_{xi in E} zeta(xi + s) / prod_{rho in F} zeta(rho + s)`.
pub fn ratio_coeff(e: &ShiftSet, f: &ShiftSet, p: u64, a: u32) -> Complex64 {
    ratio_coeff_raw(e.shifts(), f.shifts(), p, a)
}

pub(crate) fn ratio_coeff_raw(
    e: &[Complex64],
    f: &[Complex64],
    p: u64,
    a: u32,
) -> Complex64 {
    let a = a as usize;
    let lp = (p as f64).ln();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); a + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    // numerator: multiply by (1 - p^{-rho} x) for each rho in F
    for rho in f {
        let w = (-rho * lp).exp();
        for j in (1..=a).rev() {
            let prev = coeffs[j - 1];
            coeffs[j] -= w * prev;
        }
    }
    // denominator: divide by (1 - p^{-xi} x), i.e. multiply by the geometric series
    for xi in e {
        let w = (-xi * lp).exp();
        for j in 1..=a {
            let prev = coeffs[j - 1];
            coeffs[j] += w * prev;
        }
    }
    coeffs[a]
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Brute-force oracle: enumerate all ordered factorizations of m into
    /// |E| parts and sum the shift powers directly.
    fn tau_oracle(shifts: &[Complex64], m: u64) -> Complex64 {
        fn rec(shifts: &[Complex64], m: u64) -> Complex64 {
            if shifts.is_empty() {
                return if m == 1 { c(1.0, 0.0) } else { c(0.0, 0.0) };
            }
            let xi = shifts[0];
            let rest = &shifts[1..];
            let mut acc = c(0.0, 0.0);
            for d in crate::arith::divisors(m) {
                let w = (-xi * (d as f64).ln()).exp();
                acc += w * rec(rest, m / d);
            }
            acc
        }
        rec(shifts, m)
    }

    #[test]
    fn shift_set_examples() {
        let a = ShiftSet::new(vec![c(0.3, 0.1)]).unwrap();
        let shifted = a.shift_by(c(0.2, -0.1));
        assert_eq!(shifted.shifts(), &[c(0.5, 0.0)]);
        assert!(ShiftSet::empty().shift_by(c(0.4, 0.0)).is_empty());
        let twice = ShiftSet::new(vec![c(0.1, 0.0), c(0.1, 0.0)]).unwrap();
        let ts = twice.shift_by(c(0.2, 0.0));
        assert_eq!(ts.len(), 2);
        for z in ts.shifts() {
            assert!((z - c(0.3, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_large_shift() {
        let err = ShiftSet::new(vec![c(1.5, 0.0)]).unwrap_err();
        assert!(matches!(err, ShiftError::ShiftTooLarge(0, _)));
    }

    #[test]
    fn tau_divisor_count() {
        // {0,0} gives the ordinary divisor-counting function
        let e = ShiftSet::from_reals(&[0.0, 0.0]).unwrap();
        assert!((e.tau(12).unwrap() - c(6.0, 0.0)).norm() < 1e-14);
        assert!((e.tau(1).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn tau_empty_set() {
        let e = ShiftSet::empty();
        assert_eq!(e.tau(1).unwrap(), c(1.0, 0.0));
        assert_eq!(e.tau(7).unwrap(), c(0.0, 0.0));
        assert!(e.tau(0).is_err());
    }

    #[test]
    fn tau_singleton_power() {
        let alpha = c(0.25, -0.3);
        let e = ShiftSet::new(vec![alpha]).unwrap();
        let expect = (-alpha * (8f64).ln()).exp();
        assert!((e.tau(8).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn tau_factoring_identity_at_8() {
        let alpha = c(0.2, 0.1);
        let s = c(0.15, -0.05);
        let e = ShiftSet::new(vec![alpha]).unwrap();
        let es = e.shift_by(s);
        let lhs = es.tau(8).unwrap();
        let rhs = (-s * (8f64).ln()).exp() * e.tau(8).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn tau_pp_conventions() {
        let e = ShiftSet::from_reals(&[0.0, 0.0]).unwrap();
        for a in 0..6i64 {
            assert!((e.tau_pp(5, a).unwrap() - c(a as f64 + 1.0, 0.0)).norm() < 1e-13);
        }
        assert_eq!(e.tau_pp(5, -1).unwrap(), c(0.0, 0.0));
        assert!(e.tau_pp(5, -2).is_err());
        // tau_E(p^0) = 1 for any E
        let f = ShiftSet::new(vec![c(0.3, 0.2), c(-0.1, 0.4), c(0.0, -0.9)]).unwrap();
        assert!((f.tau_pp(7, 0).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        // two-element first power: p^{-alpha} + p^{-beta}
        let g = ShiftSet::new(vec![c(0.2, 0.3), c(-0.4, 0.1)]).unwrap();
        let lp = (7f64).ln();
        let expect = (-c(0.2, 0.3) * lp).exp() + (-c(-0.4, 0.1) * lp).exp();
        assert!((g.tau_pp(7, 1).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn tau_matches_bruteforce_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let r = rng.gen_range(0..4usize);
            let shifts: Vec<Complex64> = (0..r)
                .map(|_| c(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)))
                .collect();
            let e = ShiftSet::new(shifts.clone()).unwrap();
            let m = rng.gen_range(1..400u64);
            let got = e.tau(m).unwrap();
            let want = tau_oracle(&shifts, m);
            assert!(
                (got - want).norm() < 1e-10 * (1.0 + want.norm()),
                "m={m} shifts={shifts:?} got={got} want={want}"
            );
        }
    }

    #[test]
    fn tau_table_matches_pointwise() {
        let e = ShiftSet::new(vec![c(0.11, 0.05), c(-0.2, 0.0)]).unwrap();
        let table = e.tau_table(300);
        for m in 1..=300u64 {
            assert!((table[m as usize] - e.tau(m).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn ratio_coeff_zeta_over_zeta() {
        let e = ShiftSet::from_reals(&[0.0]).unwrap();
        let f = ShiftSet::from_reals(&[0.0]).unwrap();
        assert!((ratio_coeff(&e, &f, 3, 0) - c(1.0, 0.0)).norm() < 1e-15);
        for a in 1..6 {
            assert!(ratio_coeff(&e, &f, 3, a).norm() < 1e-15);
        }
    }

    #[test]
    fn ratio_coeff_inverse_zeta_is_mobius() {
        let e = ShiftSet::empty();
        let f = ShiftSet::from_reals(&[0.0]).unwrap();
        assert!((ratio_coeff(&e, &f, 5, 1) - c(-1.0, 0.0)).norm() < 1e-15);
        assert!(ratio_coeff(&e, &f, 5, 2).norm() < 1e-15);
    }

    #[test]
    fn ratio_coeff_swap_identity() {
        // I_{A u {-beta}, {alpha}}(p^a) = tau_{A \ {alpha} u {-beta}}(p^a) for alpha in A
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let alpha = c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            let extra = c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            let beta = c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
            let a_set = ShiftSet::new(vec![alpha, extra]).unwrap();
            let e = a_set.with_element(-beta);
            let f = ShiftSet::new(vec![alpha]).unwrap();
            let swapped = a_set.remove_one(alpha).with_element(-beta);
            for pw in 0..6u32 {
                let lhs = ratio_coeff(&e, &f, 3, pw);
                let rhs = swapped.tau_pp(3, pw as i64).unwrap();
                assert!((lhs - rhs).norm() < 1e-11 * (1.0 + rhs.norm()));
            }
        }
    }

    proptest! {
        #[test]
        fn prop_tau_multiplicative(
            re1 in -0.6f64..0.6, im1 in -0.6f64..0.6,
            re2 in -0.6f64..0.6, im2 in -0.6f64..0.6,
            m in 1u64..60, n in 1u64..60,
        ) {
            prop_assume!(crate::arith::gcd(m, n) == 1);
            let e = ShiftSet::new(vec![c(re1, im1), c(re2, im2)]).unwrap();
            let lhs = e.tau(m * n).unwrap();
            let rhs = e.tau(m).unwrap() * e.tau(n).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }

        #[test]
        fn prop_tau_factoring(
            re1 in -0.5f64..0.5, im1 in -0.5f64..0.5,
            sre in -0.4f64..0.4, sim in -0.4f64..0.4,
            m in 1u64..200,
        ) {
            let e = ShiftSet::new(vec![c(re1, im1), c(-re1, im1 / 2.0)]).unwrap();
            let s = c(sre, sim);
            let lhs = e.shift_by(s).tau(m).unwrap();
            let rhs = (-s * (m as f64).ln()).exp() * e.tau(m).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }

        #[test]
        fn prop_remove_element_recursion(
            re1 in -0.5f64..0.5, im1 in -0.5f64..0.5,
            re2 in -0.5f64..0.5, im2 in -0.5f64..0.5,
            a in 0i64..8,
        ) {
            // tau_E(p^a) = tau_{E\{gamma}}(p^a) + p^{-gamma} tau_E(p^{a-1})
            let gamma = c(re1, im1);
            let e = ShiftSet::new(vec![gamma, c(re2, im2)]).unwrap();
            let p = 5u64;
            let lhs = e.tau_pp(p, a).unwrap();
            let rhs = e.remove_one(gamma).tau_pp(p, a).unwrap()
                + (-gamma * (p as f64).ln()).exp() * e.tau_pp(p, a - 1).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + lhs.norm()));
        }

        #[test]
        fn prop_ratio_coeff_empty_denominator_is_tau(
            re1 in -0.5f64..0.5, im1 in -0.5f64..0.5,
            re2 in -0.5f64..0.5, im2 in -0.5f64..0.5,
            a in 0u32..8,
        ) {
            let e = ShiftSet::new(vec![c(re1, im1), c(re2, im2)]).unwrap();
            let lhs = ratio_coeff(&e, &ShiftSet::empty(), 3, a);
            let rhs = e.tau_pp(3, a as i64).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + rhs.norm()));
        }
    }
}
