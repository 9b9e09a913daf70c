//! Piecewise-Chebyshev interpolation of a function restricted to a vertical
//! line. Mellin transforms and gamma-factor lines get re-evaluated at huge
//! numbers of nearby quadrature nodes; interpolating them once per line makes
//! the contour integrals cheap without touching their accuracy budget.

use num_complex::Complex64;
use std::f64::consts::PI;

const DEGREE: usize = 32;

struct Segment {
    a: f64,
    b: f64,
    coeffs: Vec<Complex64>,
}

impl Segment {
    fn eval(&self, t: f64) -> Complex64 {
        let x = (2.0 * t - (self.a + self.b)) / (self.b - self.a);
        let mut b1 = Complex64::new(0.0, 0.0);
        let mut b2 = Complex64::new(0.0, 0.0);
        for &ck in self.coeffs.iter().skip(1).rev() {
            let tmp = 2.0 * x * b1 - b2 + ck;
            b2 = b1;
            b1 = tmp;
        }
        x * b1 - b2 + 0.5 * self.coeffs[0]
    }
}

fn cheb_nodes(a: f64, b: f64) -> Vec<f64> {
    (0..=DEGREE)
        .map(|k| {
            let x = (PI * k as f64 / DEGREE as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * x
        })
        .collect()
}

fn cheb_coeffs(values: &[Complex64]) -> Vec<Complex64> {
    // type-I DCT (naive); the degree is small and fixed
    let n = DEGREE;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    for (j, cj) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.5 * (values[0] + if j % 2 == 0 { values[n] } else { -values[n] });
        for (k, &vk) in values.iter().enumerate().take(n).skip(1) {
            acc += vk * (PI * (j * k) as f64 / n as f64).cos();
        }
        *cj = acc * (2.0 / n as f64);
    }
    coeffs
}

/// Interpolant of t -> f(sigma + i t) on [-t_max, t_max].
pub struct VerticalLineCache {
    sigma: f64,
    t_max: f64,
    /// f(sigma - it) = conj f(sigma + it); only t >= 0 is stored.
    conj_symmetric: bool,
    segments: Vec<Segment>,
}

impl VerticalLineCache {
    /// Build with absolute interpolation tolerance `tol`.
    pub fn build<F: Fn(Complex64) -> Complex64>(
        f: F,
        sigma: f64,
        t_max: f64,
        tol: f64,
        conj_symmetric: bool,
    ) -> Self {
        let lo = if conj_symmetric { 0.0 } else { -t_max };
        let mut segments = Vec::new();
        let mut stack = vec![(lo, t_max)];
        while let Some((a, b)) = stack.pop() {
            let nodes = cheb_nodes(a, b);
            let values: Vec<Complex64> =
                nodes.iter().map(|&t| f(Complex64::new(sigma, t))).collect();
            let coeffs = cheb_coeffs(&values);
            let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let tail: f64 = coeffs[DEGREE - 3..=DEGREE]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            if tail <= tol + 1e-14 * scale || b - a < 1e-3 {
                segments.push(Segment { a, b, coeffs });
            } else {
                let mid = 0.5 * (a + b);
                stack.push((mid, b));
                stack.push((a, mid));
            }
        }
        segments.sort_by(|s, t| s.a.partial_cmp(&t.a).unwrap());
        VerticalLineCache {
            sigma,
            t_max,
            conj_symmetric,
            segments,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Interpolated f(sigma + it); t is clamped to the cached range (the
    /// quadrature never asks beyond its own truncation, which matches).
    pub fn eval(&self, t: f64) -> Complex64 {
        let (tq, conj) = if self.conj_symmetric && t < 0.0 {
            (-t, true)
        } else {
            (t, false)
        };
        let lo = self.segments.first().map(|s| s.a).unwrap_or(0.0);
        let tq = tq.clamp(lo, self.t_max);
        let idx = self
            .segments
            .partition_point(|s| s.a <= tq)
            .saturating_sub(1);
        let seg = &self.segments[idx];
        let v = seg.eval(tq);
        if conj {
            v.conj()
        } else {
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interpolates_mellin_transform() {
        let v = kernels::Window::main_v();
        let cache =
            VerticalLineCache::build(|s| v.mellin(s).unwrap(), 0.05, 120.0, 1e-11, true);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let t = rng.gen_range(-120.0..120.0);
            let want = v.mellin(Complex64::new(0.05, t)).unwrap();
            let got = cache.eval(t);
            assert!((got - want).norm() < 1e-9, "t={t} got={got} want={want}");
        }
    }

    #[test]
    fn interpolates_chi_factor_line() {
        let alpha = 0.02;
        let base = Complex64::new(0.5 + alpha, 0.0);
        let cache = VerticalLineCache::build(
            |s| kernels::chi_factor(base + s).unwrap(),
            0.05,
            80.0,
            1e-11,
            true,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let t = rng.gen_range(-80.0..80.0);
            let want = kernels::chi_factor(base + Complex64::new(0.05, t)).unwrap();
            let got = cache.eval(t);
            assert!(
                (got - want).norm() < 1e-8 * want.norm().max(1.0),
                "t={t} got={got} want={want}"
            );
        }
    }
}
