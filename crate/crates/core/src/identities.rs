//! Randomized machine checks of the arithmetic identities the prediction
//! engine relies on: pair-sum orthogonality in divisor form, the tau
//! manipulation rules, and the Euler-product functional equations.

use crate::arith;
use crate::characters;
use crate::par;
use crate::recipe::{g_product, k_product, EulerTruncation};
use crate::shifts::ShiftSet;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub worst_error: f64,
    pub tolerance: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn random_shift(rng: &mut impl Rng, scale: f64) -> Complex64 {
    c(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

fn random_set(rng: &mut impl Rng, len: usize, scale: f64) -> ShiftSet {
    ShiftSet::new((0..len).map(|_| random_shift(rng, scale)).collect()).unwrap()
}

const SMALL_PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Pair-sum orthogonality: character-table enumeration against the exact
/// divisor-sum form, for all moduli up to `q_max` and `pairs_per_q` random
/// coprime pairs each; both the even and the odd versions.
pub fn pair_sum_suite(q_max: u64, pairs_per_q: usize, seed: u64, odd: bool) -> SuiteResult {
    let name = if odd { "pair-sum-odd" } else { "pair-sum-even" };
    let moduli: Vec<u64> = (1..=q_max).collect();
    let results = par::map_collect(&moduli, |&q| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (q << 16) ^ odd as u64);
        let table = characters::character_table(q).unwrap();
        let mut worst: f64 = 0.0;
        let mut cases = 0usize;
        let mut failures = 0usize;
        for _ in 0..pairs_per_q {
            let m = rng.gen_range(1..=6 * q.max(2));
            let n = rng.gen_range(1..=6 * q.max(2));
            if arith::gcd(m * n, q) != 1 {
                continue;
            }
            let mut lhs = ZERO;
            for chi in &table.chars {
                if chi.is_primitive() && (chi.even != odd) {
                    let vm = chi.value_exact(&table.group, m as i64).unwrap();
                    let vn = chi.value_exact(&table.group, n as i64).unwrap();
                    lhs += vm.to_complex() * vn.conj().to_complex();
                }
            }
            let rhs = if odd {
                characters::odd_pair_sum_divisor_form(q, m, n).unwrap()
            } else {
                characters::pair_sum_divisor_form(q, m, n).unwrap()
            };
            let err = (lhs - c(rhs, 0.0)).norm();
            cases += 1;
            if err > 1e-10 {
                failures += 1;
            }
            worst = worst.max(err);
        }
        (cases, failures, worst)
    });
    let mut out = SuiteResult {
        name,
        cases: 0,
        failures: 0,
        worst_error: 0.0,
        tolerance: 1e-10,
    };
    for (cs, fl, w) in results {
        out.cases += cs;
        out.failures += fl;
        out.worst_error = out.worst_error.max(w);
    }
    out
}

fn run_cases<F>(name: &'static str, cases: usize, tolerance: f64, seed: u64, f: F) -> SuiteResult
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    let idx: Vec<u64> = (0..cases as u64).collect();
    let errs = par::map_collect(&idx, |&i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i.wrapping_mul(0x9E3779B97F4A7C15)));
        f(&mut rng)
    });
    let worst = errs.iter().cloned().fold(0.0f64, f64::max);
    SuiteResult {
        name,
        cases,
        failures: errs.iter().filter(|&&e| e > tolerance).count(),
        worst_error: worst,
        tolerance,
    }
}

/// tau(E, mn) = tau(E, m) tau(E, n) for coprime m, n.
pub fn tau_multiplicativity_suite(cases: usize, seed: u64) -> SuiteResult {
    run_cases("tau-multiplicativity", cases, 1e-10, seed, |rng| {
        let len = rng.gen_range(0..=3);
        let e = random_set(rng, len, 0.4);
        loop {
            let m = rng.gen_range(1..400u64);
            let n = rng.gen_range(1..400u64);
            if arith::gcd(m, n) == 1 {
                let lhs = e.tau(m * n).unwrap();
                let rhs = e.tau(m).unwrap() * e.tau(n).unwrap();
                return (lhs - rhs).norm();
            }
        }
    })
}

/// tau_{E + s}(m) = m^{-s} tau_E(m).
pub fn tau_factoring_suite(cases: usize, seed: u64) -> SuiteResult {
    run_cases("tau-factoring", cases, 1e-10, seed, |rng| {
        let len = rng.gen_range(0..=3);
        let e = random_set(rng, len, 0.4);
        let s = random_shift(rng, 0.4);
        let m = rng.gen_range(1..1000u64);
        let lhs = e.shift_by(s).tau(m).unwrap();
        let rhs = (-s * (m as f64).ln()).exp() * e.tau(m).unwrap();
        (lhs - rhs).norm()
    })
}

/// tau_E(p^m) = tau_{E \ gamma}(p^m) + p^{-gamma} tau_E(p^{m-1}).
pub fn tau_remove_element_suite(cases: usize, seed: u64) -> SuiteResult {
    run_cases("tau-remove-element", cases, 1e-10, seed, |rng| {
        let len = rng.gen_range(1..=3);
        let e = random_set(rng, len, 0.3);
        let gamma = e.shifts()[rng.gen_range(0..len)];
        let p = SMALL_PRIMES[rng.gen_range(0..SMALL_PRIMES.len())];
        let m = rng.gen_range(0..=8i64);
        let lhs = e.tau_pp(p, m).unwrap();
        let rhs = e.remove_one(gamma).tau_pp(p, m).unwrap()
            + (-gamma * (p as f64).ln()).exp() * e.tau_pp(p, m - 1).unwrap();
        (lhs - rhs).norm()
    })
}

/// The cross-term identity behind the residue matching:
/// t1 b0 + a0 t2 - a0 b0 = t1 t2 - p^{alpha+beta} t1' t2'
/// in the swapped-set tau values, with an optional deliberate corruption used
/// as a negative control.
pub fn tau_cross_term_suite(cases: usize, seed: u64, corrupt: bool) -> SuiteResult {
    run_cases("tau-cross-term", cases, 1e-10, seed, move |rng| {
        let na = rng.gen_range(1..=3);
        let nb = rng.gen_range(1..=3);
        let a = random_set(rng, na, 0.15);
        let b = random_set(rng, nb, 0.15);
        let alpha = a.shifts()[rng.gen_range(0..na)];
        let beta = b.shifts()[rng.gen_range(0..nb)];
        let p = SMALL_PRIMES[rng.gen_range(0..SMALL_PRIMES.len())];
        let j = rng.gen_range(0..=6i64);
        let l = rng.gen_range(0..=6i64);
        let lnp = (p as f64).ln();
        let a_sw = a.remove_one(alpha).with_element(-beta);
        let b_sw = b.remove_one(beta).with_element(-alpha);
        let a_rm = a.remove_one(alpha);
        let b_rm = b.remove_one(beta);
        let mut lhs = a_sw.tau_pp(p, j).unwrap() * b_rm.tau_pp(p, l).unwrap()
            + a_rm.tau_pp(p, j).unwrap() * b_sw.tau_pp(p, l).unwrap()
            - a_rm.tau_pp(p, j).unwrap() * b_rm.tau_pp(p, l).unwrap();
        if corrupt {
            lhs += c(1e-6, 0.0);
        }
        let rhs = a_sw.tau_pp(p, j).unwrap() * b_sw.tau_pp(p, l).unwrap()
            - ((alpha + beta) * lnp).exp()
                * a_sw.tau_pp(p, j - 1).unwrap()
                * b_sw.tau_pp(p, l - 1).unwrap();
        (lhs - rhs).norm()
    })
}

/// The four-term expansion of the swapped-set pair in unswapped values.
pub fn tau_four_term_suite(cases: usize, seed: u64) -> SuiteResult {
    run_cases("tau-four-term", cases, 1e-10, seed, |rng| {
        let na = rng.gen_range(1..=3);
        let nb = rng.gen_range(1..=3);
        let a = random_set(rng, na, 0.15);
        let b = random_set(rng, nb, 0.15);
        let alpha = a.shifts()[rng.gen_range(0..na)];
        let beta = b.shifts()[rng.gen_range(0..nb)];
        let p = SMALL_PRIMES[rng.gen_range(0..SMALL_PRIMES.len())];
        let j = rng.gen_range(0..=6i64);
        let l = rng.gen_range(0..=6i64);
        let lnp = (p as f64).ln();
        let ep = |z: Complex64| (z * lnp).exp();
        let a_sw = a.remove_one(alpha).with_element(-beta);
        let b_rm = b.remove_one(beta);
        let a_ext = a.with_element(-beta);
        let lhs = a_sw.tau_pp(p, j).unwrap() * b_rm.tau_pp(p, l).unwrap();
        let one_m = ONE - ep(-alpha - beta);
        let rhs = one_m * a_ext.tau_pp(p, j).unwrap() * b.tau_pp(p, l).unwrap()
            + ep(-alpha - beta) * a.tau_pp(p, j).unwrap() * b.tau_pp(p, l).unwrap()
            - ep(-beta) * a.tau_pp(p, j).unwrap() * b.tau_pp(p, l - 1).unwrap()
            - one_m * a_ext.tau_pp(p, j - 1).unwrap() * b.tau_pp(p, l - 1).unwrap();
        (lhs - rhs).norm()
    })
}

/// Truncated check of the series rearrangement
/// p^{(1/2-beta)(j-l)} sum_{m+j < n+l} tau_A tau_B p^{-m beta - n(1-beta)}
///   = sum_{m+j = n+l} (tau_{A u {-beta}} - tau_A) tau_B p^{-(m+n)/2},
/// both sides truncated at M = 40 with p >= 11.
pub fn tau_series_suite(cases: usize, seed: u64) -> SuiteResult {
    run_cases("tau-series-convolution", cases, 1e-10, seed, |rng| {
        let na = rng.gen_range(1..=2);
        let nb = rng.gen_range(1..=2);
        let a = random_set(rng, na, 0.25);
        let b = random_set(rng, nb, 0.25);
        let beta = random_shift(rng, 0.25);
        let p = [11u64, 13, 17, 19][rng.gen_range(0..4)];
        let j = rng.gen_range(0..=4i64) as i64;
        let l = rng.gen_range(0..=4i64) as i64;
        let m_cut = 40i64;
        let lnp = (p as f64).ln();
        let ep = |z: Complex64| (z * lnp).exp();
        let mut lhs = ZERO;
        for m in 0..=m_cut {
            for n in 0..=m_cut {
                if m + j < n + l {
                    lhs += a.tau_pp(p, m).unwrap()
                        * b.tau_pp(p, n).unwrap()
                        * ep(-beta * m as f64 - (ONE - beta) * n as f64);
                }
            }
        }
        lhs *= ep((c(0.5, 0.0) - beta) * (j - l) as f64);
        let a_ext = a.with_element(-beta);
        let mut rhs = ZERO;
        for m in 0..=m_cut {
            let n = m + j - l;
            if n < 0 || n > m_cut {
                continue;
            }
            rhs += (a_ext.tau_pp(p, m).unwrap() - a.tau_pp(p, m).unwrap())
                * b.tau_pp(p, n).unwrap()
                * (p as f64).powf(-0.5 * (m + n) as f64);
        }
        (lhs - rhs).norm()
    })
}

fn random_twists(rng: &mut impl Rng) -> (u64, u64) {
    let choices = [1u64, 2, 3, 4, 5, 6, 9, 10, 12];
    (
        choices[rng.gen_range(0..choices.len())],
        choices[rng.gen_range(0..choices.len())],
    )
}

/// Shift-translation functional equation of the one-swap Euler product:
/// K(s1, s2, w) = (h/k)^{s1} K(0, s1+s2, w).
pub fn k_functional_suite(cases: usize, seed: u64, trunc: &EulerTruncation) -> SuiteResult {
    let trunc = *trunc;
    run_cases("k-shift-identity", cases, 1e-8, seed, move |rng| {
        let na = rng.gen_range(1..=2);
        let nb = rng.gen_range(1..=2);
        let a = random_set(rng, na, 0.02);
        let b = random_set(rng, nb, 0.02);
        let alpha = a.shifts()[rng.gen_range(0..na)];
        let beta = b.shifts()[rng.gen_range(0..nb)];
        let (h, k) = random_twists(rng);
        let s1 = c(rng.gen_range(-0.04..0.04), rng.gen_range(-2.0..2.0));
        let s2 = c(rng.gen_range(-0.2..0.04), rng.gen_range(-2.0..2.0));
        if !(-0.25..=0.1).contains(&(s1 + s2).re) {
            return 0.0;
        }
        let w = c(rng.gen_range(1.7..2.4), rng.gen_range(-2.0..2.0));
        if (w - 1.0 + alpha + s1 + beta + s2).re < 0.56 {
            return 0.0;
        }
        let lhs = match k_product(s1, s2, w, &a, &b, alpha, beta, h, k, &trunc) {
            Ok(v) => v.value,
            Err(_) => return 0.0,
        };
        let rhs = match k_product(ZERO, s1 + s2, w, &a, &b, alpha, beta, h, k, &trunc) {
            Ok(v) => v.value,
            Err(_) => return 0.0,
        };
        let rhs = ((h as f64 / k as f64).ln() * s1).exp() * rhs;
        (lhs - rhs).norm() / rhs.norm().max(1.0)
    })
}

/// The residue-side/recipe-side Euler product identity
/// h^{-1/2+alpha} k^{-1/2+beta} G(2-alpha-beta) = K(0, 0, 2-alpha-beta),
/// its w = 2 variant, and the shifted-B rewriting.
pub fn gk_identity_suite(cases: usize, seed: u64, trunc: &EulerTruncation) -> SuiteResult {
    let trunc = *trunc;
    run_cases("gk-identity", cases, 1e-6, seed, move |rng| {
        let na = rng.gen_range(1..=2);
        let nb = rng.gen_range(1..=2);
        let a = random_set(rng, na, 0.02);
        let b = random_set(rng, nb, 0.02);
        let alpha = a.shifts()[rng.gen_range(0..na)];
        let beta = b.shifts()[rng.gen_range(0..nb)];
        let (h, k) = random_twists(rng);
        let lh = (h as f64).ln();
        let lk = (k as f64).ln();
        let mut worst: f64 = 0.0;

        // main identity at w = 2 - alpha - beta
        let w = c(2.0, 0.0) - alpha - beta;
        let g = g_product(w, alpha, beta, &a, &b, h, k, &trunc).unwrap().value;
        let kk = k_product(ZERO, ZERO, w, &a, &b, alpha, beta, h, k, &trunc)
            .unwrap()
            .value;
        let lhs = ((alpha - 0.5) * lh).exp() * ((beta - 0.5) * lk).exp() * g;
        worst = worst.max((lhs - kk).norm() / kk.norm().max(1e-12));

        // variant at w = 2: h^{-1/2+alpha} k^{-1/2-alpha} G(2) = K(0, -alpha-beta, 2)
        let g2 = g_product(c(2.0, 0.0), alpha, beta, &a, &b, h, k, &trunc)
            .unwrap()
            .value;
        let k2 = k_product(ZERO, -alpha - beta, c(2.0, 0.0), &a, &b, alpha, beta, h, k, &trunc)
            .unwrap()
            .value;
        let lhs2 = ((alpha - 0.5) * lh).exp() * ((-alpha - 0.5) * lk).exp() * g2;
        worst = worst.max((lhs2 - k2).norm() / k2.norm().max(1e-12));

        // shifted-B rewriting:
        // G(2-alpha-beta+a*+b*, alpha, beta; A, B) =
        // G(same w, alpha, beta-a*-b*; A, B - (a*+b*))
        let astar = a.shifts()[rng.gen_range(0..na)];
        let bstar = b.shifts()[rng.gen_range(0..nb)];
        let wstar = c(2.0, 0.0) - alpha - beta + astar + bstar;
        let lhs3 = g_product(wstar, alpha, beta, &a, &b, h, k, &trunc).unwrap().value;
        let b_shift = b.shift_by(-astar - bstar);
        let rhs3 = g_product(
            wstar,
            alpha,
            beta - astar - bstar,
            &a,
            &b_shift,
            h,
            k,
            &trunc,
        )
        .unwrap()
        .value;
        // the rewriting holds at 1e-8; scale it onto the suite's 1e-6 budget
        let err3 = (lhs3 - rhs3).norm() / rhs3.norm().max(1e-12);
        worst = worst.max(err3 * 100.0);
        worst
    })
}

/// Run every suite with sensible per-suite case counts derived from `cases`.
pub fn run_all(seed: u64, cases: usize, corrupt: bool) -> Vec<SuiteResult> {
    if cases == 0 {
        return Vec::new();
    }
    let trunc = EulerTruncation::default();
    let small_trunc = EulerTruncation::new(2000, 30, 0.4).unwrap();
    let pair_q = 300.min(40 + cases as u64 / 10);
    let pair_cases = (cases / 200).clamp(2, 50);
    let euler_cases = (cases / 200).clamp(3, 50);
    vec![
        pair_sum_suite(pair_q, pair_cases, seed, false),
        pair_sum_suite(pair_q, pair_cases, seed, true),
        tau_multiplicativity_suite(cases, seed ^ 1),
        tau_factoring_suite(cases, seed ^ 2),
        tau_remove_element_suite(cases, seed ^ 3),
        tau_cross_term_suite(cases, seed ^ 4, corrupt),
        tau_four_term_suite(cases, seed ^ 5),
        tau_series_suite(cases.min(2000), seed ^ 6),
        k_functional_suite(euler_cases, seed ^ 7, &small_trunc),
        gk_identity_suite((euler_cases / 2).max(2), seed ^ 8, &trunc),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_term_suite_passes_and_corruption_fails() {
        let ok = tau_cross_term_suite(300, 11, false);
        assert_eq!(ok.failures, 0, "worst {}", ok.worst_error);
        let bad = tau_cross_term_suite(300, 11, true);
        assert!(bad.failures > 0);
    }

    #[test]
    fn four_term_and_series_suites_pass() {
        let r = tau_four_term_suite(300, 5);
        assert_eq!(r.failures, 0, "worst {}", r.worst_error);
        let r = tau_series_suite(60, 5);
        assert_eq!(r.failures, 0, "worst {}", r.worst_error);
    }

    #[test]
    fn pair_sum_suites_pass_small() {
        let r = pair_sum_suite(40, 10, 3, false);
        assert_eq!(r.failures, 0, "worst {}", r.worst_error);
        let r = pair_sum_suite(40, 10, 3, true);
        assert_eq!(r.failures, 0, "worst {}", r.worst_error);
    }
}
