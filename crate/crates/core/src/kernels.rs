//! Complex gamma and zeta, the zeta functional-equation factor, the
//! two-variable gamma-ratio kernel, and the reference smooth windows with
//! their Mellin transforms.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("gamma pole at nonpositive integer {0}")]
    GammaPole(i64),
    #[error("zeta pole at s = 1")]
    ZetaPole,
    #[error("chi factor pole at odd positive integer {0}")]
    ChiPole(i64),
    #[error("kernel pole in factor {0}")]
    HKernelPole(&'static str),
    #[error("mellin transform pole at s = 0")]
    MellinPole,
    #[error("non-finite argument")]
    NonFinite,
    #[error("euler-maclaurin did not reach tolerance (|Im s| too large?)")]
    ZetaAccuracy,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// ---------------------------------------------------------------------------
// gamma
// ---------------------------------------------------------------------------

// Lanczos coefficients, g = 607/128, 15 terms.
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_C: [f64; 15] = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
];

fn near_nonpositive_integer(z: Complex64, tol: f64) -> Option<i64> {
    if z.im.abs() > tol {
        return None;
    }
    let r = z.re.round();
    if r <= 0.0 && (z.re - r).abs() <= tol {
        Some(r as i64)
    } else {
        None
    }
}

/// log of sin(pi z) on some branch, stable for large |Im z|.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let ipi = c(0.0, PI);
    if z.im >= 0.0 {
        // sin(pi z) = e^{-i pi z} (1 - e^{2 i pi z}) * (i/2)
        let w = (2.0 * ipi * z).exp();
        -ipi * z + (ONE - w).ln() + c(-(2f64).ln(), PI / 2.0)
    } else {
        // sin(pi z) = e^{i pi z} (1 - e^{-2 i pi z}) * (-i/2)
        let w = (-2.0 * ipi * z).exp();
        ipi * z + (ONE - w).ln() + c(-(2f64).ln(), -PI / 2.0)
    }
}

/// log Gamma on some branch (exact up to multiples of 2 pi i, which cancel
/// in the exponentiated ratios we form).
pub fn lgamma(z: Complex64) -> Result<Complex64, KernelError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(KernelError::NonFinite);
    }
    if let Some(k) = near_nonpositive_integer(z, 1e-6) {
        return Err(KernelError::GammaPole(k));
    }
    if z.re < 0.5 {
        // reflection: log Gamma(z) = log pi - log sin(pi z) - log Gamma(1 - z)
        let lg = lgamma(ONE - z)?;
        return Ok(c(PI.ln(), 0.0) - ln_sin_pi(z) - lg);
    }
    let mut acc = c(LANCZOS_C[0], 0.0);
    for (k, &ck) in LANCZOS_C.iter().enumerate().skip(1) {
        acc += ck / (z + (k as f64 - 1.0));
    }
    let t = z + (LANCZOS_G - 0.5);
    Ok(0.5 * (2.0 * PI).ln() + (z - 0.5) * t.ln() - t + acc.ln())
}

/// Gamma(s); relative error around 1e-13 away from poles for moderate |s|.
pub fn gamma(s: Complex64) -> Result<Complex64, KernelError> {
    Ok(lgamma(s)?.exp())
}

// ---------------------------------------------------------------------------
// zeta
// ---------------------------------------------------------------------------

// Bernoulli numbers B_2, B_4, ..., B_30.
const BERNOULLI: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

fn zeta_euler_maclaurin(s: Complex64) -> Result<Complex64, KernelError> {
    // ground terms + integral tail + trapezoid correction + Bernoulli terms
    let n = (16.0f64).max(s.norm() / 2.0).ceil() as usize;
    let nf = n as f64;
    let mut acc = ZERO;
    for k in 1..n {
        acc += (-s * (k as f64).ln()).exp();
    }
    let npow = (-s * nf.ln()).exp(); // N^{-s}
    acc += npow * nf / (s - 1.0);
    acc += 0.5 * npow;
    // sum_k B_{2k}/(2k)! s (s+1) ... (s+2k-2) N^{-s-2k+1}
    let mut rising = s; // s (s+1) ... (s + 2k - 2)
    let mut fact = 1.0f64; // (2k)!
    let mut last = f64::INFINITY;
    let mut term_pow = npow * nf; // N^{-s+1}
    let inv_n2 = 1.0 / (nf * nf);
    let mut converged = false;
    for (k, &b) in BERNOULLI.iter().enumerate() {
        let kk = k + 1;
        fact *= ((2 * kk - 1) * (2 * kk)) as f64;
        term_pow *= inv_n2; // N^{-s-2k+1}
        let term = rising * (b / fact) * term_pow;
        acc += term;
        let mag = term.norm();
        if mag < 1e-16 * acc.norm().max(1.0) {
            converged = true;
            break;
        }
        if mag > last {
            // asymptotic series started diverging before reaching tolerance
            return Err(KernelError::ZetaAccuracy);
        }
        last = mag;
        rising = rising * (s + (2 * kk - 1) as f64) * (s + (2 * kk) as f64);
    }
    if !converged && last > 1e-12 * acc.norm().max(1.0) {
        return Err(KernelError::ZetaAccuracy);
    }
    Ok(acc)
}

/// Riemann zeta by Euler-Maclaurin, with the functional equation for
/// Re(s) < 1/2. Valid through |Im s| ~ 1e4 at relative error ~1e-12.
pub fn zeta(s: Complex64) -> Result<Complex64, KernelError> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(KernelError::NonFinite);
    }
    if (s - ONE).norm() < 1e-6 {
        return Err(KernelError::ZetaPole);
    }
    // Euler-Maclaurin continues analytically through the critical strip;
    // reflect only when the line is far enough left that 1 - s is safe
    // (this also avoids the 0 * pole form of X(0) zeta(1) at s = 0)
    if s.re >= -0.5 {
        zeta_euler_maclaurin(s)
    } else {
        // zeta(s) = X(s) zeta(1-s)
        let chi = chi_factor(s)?;
        if chi == ZERO {
            return Ok(ZERO);
        }
        Ok(chi * zeta_euler_maclaurin(ONE - s)?)
    }
}

// ---------------------------------------------------------------------------
// functional-equation factor and the two-variable kernel
// ---------------------------------------------------------------------------

/// X(s) = pi^{s-1/2} Gamma((1-s)/2) / Gamma(s/2), the factor in
/// zeta(s) = X(s) zeta(1-s). Poles at odd positive integers; zeros at even
/// nonpositive integers (returned as exact 0).
pub fn chi_factor(s: Complex64) -> Result<Complex64, KernelError> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(KernelError::NonFinite);
    }
    let num_arg = (ONE - s) / 2.0;
    if let Some(k) = near_nonpositive_integer(num_arg, 5e-7) {
        return Err(KernelError::ChiPole(1 - 2 * k));
    }
    if near_nonpositive_integer(s / 2.0, 5e-7).is_some() {
        // 1/Gamma vanishes
        return Ok(ZERO);
    }
    let lg_num = lgamma(num_arg)?;
    let lg_den = lgamma(s / 2.0)?;
    Ok(((s - 0.5) * PI.ln() + lg_num - lg_den).exp())
}

/// H(z, w) = sqrt(pi) G((1-w)/2) G(z/2) G((w-z)/2) /
///           [G(w/2) G((1-z)/2) G((1-w+z)/2)].
pub fn h_kernel(z: Complex64, w: Complex64) -> Result<Complex64, KernelError> {
    let guard = 5e-7;
    if near_nonpositive_integer((ONE - w) / 2.0, guard).is_some() {
        return Err(KernelError::HKernelPole("(1-w)/2"));
    }
    if near_nonpositive_integer(z / 2.0, guard).is_some() {
        return Err(KernelError::HKernelPole("z/2"));
    }
    if near_nonpositive_integer((w - z) / 2.0, guard).is_some() {
        return Err(KernelError::HKernelPole("(w-z)/2"));
    }
    let num = lgamma((ONE - w) / 2.0)? + lgamma(z / 2.0)? + lgamma((w - z) / 2.0)?;
    let den = lgamma(w / 2.0)? + lgamma((ONE - z) / 2.0)? + lgamma((ONE - w + z) / 2.0)?;
    Ok((0.5 * PI.ln() + num - den).exp())
}

// ---------------------------------------------------------------------------
// truncated Taylor jets (for window derivatives)
// ---------------------------------------------------------------------------

const JET_LEN: usize = 9; // value + derivatives through order 8

#[derive(Clone, Copy, Debug)]
struct Jet {
    // Taylor coefficients f(x), f'(x)/1!, f''(x)/2!, ...
    c: [f64; JET_LEN],
}

impl Jet {
    fn constant(v: f64) -> Jet {
        let mut c = [0.0; JET_LEN];
        c[0] = v;
        Jet { c }
    }

    fn variable(x: f64) -> Jet {
        let mut c = [0.0; JET_LEN];
        c[0] = x;
        c[1] = 1.0;
        Jet { c }
    }

    fn add(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for i in 0..JET_LEN {
            c[i] = self.c[i] + o.c[i];
        }
        Jet { c }
    }

    fn scale(self, k: f64) -> Jet {
        let mut c = self.c;
        for x in &mut c {
            *x *= k;
        }
        Jet { c }
    }

    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for i in 0..JET_LEN {
            for j in 0..JET_LEN - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }

    /// 1/self; requires nonzero constant term.
    fn recip(self) -> Jet {
        let a0 = self.c[0];
        let mut r = [0.0; JET_LEN];
        r[0] = 1.0 / a0;
        for n in 1..JET_LEN {
            let mut acc = 0.0;
            for k in 1..=n {
                acc += self.c[k] * r[n - k];
            }
            r[n] = -acc / a0;
        }
        Jet { c: r }
    }

    /// exp(self).
    fn exp(self) -> Jet {
        let mut e = [0.0; JET_LEN];
        e[0] = self.c[0].exp();
        for n in 1..JET_LEN {
            let mut acc = 0.0;
            for k in 1..=n {
                acc += k as f64 * self.c[k] * e[n - k];
            }
            e[n] = acc / n as f64;
        }
        Jet { c: e }
    }

    /// n-th derivative from the Taylor coefficients.
    fn derivative(&self, n: usize) -> f64 {
        let mut fact = 1.0;
        for k in 2..=n {
            fact *= k as f64;
        }
        self.c[n] * fact
    }
}

// ---------------------------------------------------------------------------
// windows
// ---------------------------------------------------------------------------

/// The two reference test functions:
/// - `MainV`:  V(x) = exp(1 - 1/(1 - x^2)) on [0, 1), V(0) = 1;
/// - `OuterW`: W(x) = exp(4 - 1/((x-1)(2-x))) on (1, 2), peak value 1.
///
/// Both are smooth with all derivatives vanishing at the support endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    MainV,
    OuterW,
}

#[derive(Clone, Copy, Debug)]
pub struct Window {
    pub kind: WindowKind,
}

impl Window {
    pub fn main_v() -> Window {
        Window {
            kind: WindowKind::MainV,
        }
    }

    pub fn outer_w() -> Window {
        Window {
            kind: WindowKind::OuterW,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            WindowKind::MainV => "V",
            WindowKind::OuterW => "W",
        }
    }

    /// Support as a half-open description (values vanish outside).
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            WindowKind::MainV => (0.0, 1.0),
            WindowKind::OuterW => (1.0, 2.0),
        }
    }

    fn jet_at(&self, x: f64) -> Option<Jet> {
        match self.kind {
            WindowKind::MainV => {
                if !(0.0..1.0).contains(&x) {
                    return None;
                }
                // guard: 1/(1-x^2) overflows the exponential long before here
                if 1.0 - x * x < 1e-6 {
                    return None;
                }
                let xj = Jet::variable(x);
                let u = Jet::constant(1.0).add(xj.mul(xj).scale(-1.0));
                Some(Jet::constant(1.0).add(u.recip().scale(-1.0)).exp())
            }
            WindowKind::OuterW => {
                if !(1.0 < x && x < 2.0) {
                    return None;
                }
                let xj = Jet::variable(x);
                let u = xj.add(Jet::constant(-1.0)).mul(Jet::constant(2.0).add(xj.scale(-1.0)));
                if u.c[0] < 1e-6 {
                    return None;
                }
                Some(Jet::constant(4.0).add(u.recip().scale(-1.0)).exp())
            }
        }
    }

    /// Pointwise value; zero outside the support.
    pub fn eval(&self, x: f64) -> Result<f64, KernelError> {
        if !x.is_finite() {
            return Err(KernelError::NonFinite);
        }
        match self.kind {
            WindowKind::MainV => {
                if x == 0.0 {
                    return Ok(1.0);
                }
                if !(0.0..1.0).contains(&x) {
                    return Ok(0.0);
                }
                let u = 1.0 - x * x;
                if u < 1e-6 {
                    return Ok(0.0);
                }
                Ok((1.0 - 1.0 / u).exp())
            }
            WindowKind::OuterW => {
                if !(1.0 < x && x < 2.0) {
                    return Ok(0.0);
                }
                let u = (x - 1.0) * (2.0 - x);
                if u < 1e-6 {
                    return Ok(0.0);
                }
                Ok((4.0 - 1.0 / u).exp())
            }
        }
    }

    /// n-th derivative (n <= 8); zero outside the open support. The first
    /// derivative has a closed form (it sits in the Mellin integrand);
    /// higher orders go through truncated Taylor jets.
    pub fn derivative(&self, x: f64, n: usize) -> Result<f64, KernelError> {
        if !x.is_finite() {
            return Err(KernelError::NonFinite);
        }
        assert!(n < JET_LEN);
        if n == 0 {
            return self.eval(x);
        }
        if n == 1 {
            return Ok(match self.kind {
                WindowKind::MainV => {
                    let val = self.eval(x)?;
                    if val == 0.0 || x <= 0.0 {
                        0.0
                    } else {
                        let u = 1.0 - x * x;
                        -2.0 * x / (u * u) * val
                    }
                }
                WindowKind::OuterW => {
                    let val = self.eval(x)?;
                    if val == 0.0 {
                        0.0
                    } else {
                        let u = (x - 1.0) * (2.0 - x);
                        (3.0 - 2.0 * x) / (u * u) * val
                    }
                }
            });
        }
        if self.kind == WindowKind::MainV && x == 0.0 {
            // even function of x near 0: odd derivatives vanish
            let j = self.jet_at(1e-12).expect("interior point");
            return Ok(j.derivative(n));
        }
        Ok(self.jet_at(x).map_or(0.0, |j| j.derivative(n)))
    }

    /// Verify that derivatives through order `max_order` vanish at the
    /// support endpoints and that the normalization holds.
    pub fn smoothness_certificate(&self, max_order: usize) -> bool {
        let (a, b) = self.support();
        let eps = 1e-4;
        let probes: &[f64] = match self.kind {
            WindowKind::MainV => &[0.0], // left endpoint is interior-like
            WindowKind::OuterW => &[1.0],
        };
        let _ = probes;
        let mut ok = true;
        for n in 0..=max_order {
            let right = self.derivative(b - eps, n).unwrap();
            ok &= right.abs() < 1e-6;
            if self.kind == WindowKind::OuterW {
                let left = self.derivative(a + eps, n).unwrap();
                ok &= left.abs() < 1e-6;
            }
        }
        match self.kind {
            WindowKind::MainV => ok && (self.eval(0.0).unwrap() - 1.0).abs() < 1e-14,
            WindowKind::OuterW => ok && (self.eval(1.5).unwrap() - 1.0).abs() < 1e-14,
        }
    }

    /// Mellin transform along x. For V the integration-by-parts form is used
    /// (valid for Re(s) > -1, s away from the pole at 0); the transform of W
    /// is entire.
    pub fn mellin(&self, s: Complex64) -> Result<Complex64, KernelError> {
        if !s.re.is_finite() || !s.im.is_finite() {
            return Err(KernelError::NonFinite);
        }
        match self.kind {
            WindowKind::MainV => {
                if s.norm() < 1e-6 {
                    return Err(KernelError::MellinPole);
                }
                // -(1/s) int_{-inf}^0 V'(e^y) e^{(s+1)y} dy, substituted x = e^y
                let sigma = s.re.max(-0.9);
                let y_min = -(40.0 / (sigma + 2.0)).min(60.0);
                let f = |y: f64| {
                    let x = y.exp();
                    let dv = self.derivative(x, 1).unwrap();
                    if dv == 0.0 {
                        return ZERO;
                    }
                    ((s + 1.0) * y).exp() * dv
                };
                let integral = integrate_real(&f, y_min, 0.0, 1e-13, 48);
                Ok(-integral / s)
            }
            WindowKind::OuterW => {
                let f = |x: f64| {
                    let w = self.eval(x).unwrap();
                    if w == 0.0 {
                        return ZERO;
                    }
                    ((s - 1.0) * x.ln()).exp() * w
                };
                Ok(integrate_real(&f, 1.0, 2.0, 1e-13, 48))
            }
        }
    }

    /// Constant c_n with |mellin(sigma + it)| <= c_n / |t|^n for |t| >= 1,
    /// from the n-fold integration-by-parts bound.
    pub fn decay_constant(&self, n: usize, sigma: f64) -> f64 {
        let (a, b) = self.support();
        let lo = if self.kind == WindowKind::MainV { 1e-8 } else { a };
        let f = |x: f64| {
            let d = self.derivative(x, n).unwrap();
            let w = x.powf(sigma + n as f64 - 1.0);
            c(d.abs() * w, 0.0)
        };
        integrate_real(&f, lo, b, 1e-4, 24).re * 1.001 + 1e-4
    }

    /// Envelope constant for the same polynomial decay law, tightened by
    /// sampling the transform itself (its true decay is faster than any
    /// polynomial, so the proven integration-by-parts constant is very
    /// conservative). The returned value never exceeds the proven one.
    pub fn decay_envelope(&self, n: usize, sigma: f64) -> f64 {
        let proven = self.decay_constant(n, sigma);
        let mut fitted: f64 = 0.0;
        for &t in &[25.0, 50.0, 100.0, 200.0] {
            if let Ok(v) = self.mellin(c(sigma, t)) {
                fitted = fitted.max(v.norm() * t.powi(n as i32));
            }
        }
        (fitted * 4.0).min(proven).max(1e-12)
    }
}

// ---------------------------------------------------------------------------
// small adaptive Gauss-Legendre integrator over real intervals
// ---------------------------------------------------------------------------

// 15-point Gauss-Legendre nodes/weights on [-1, 1].
pub(crate) const GL15_X: [f64; 15] = [
    -0.9879925180204854,
    -0.9372733924007060,
    -0.8482065834104272,
    -0.7244177313601701,
    -0.5709721726085388,
    -0.3941513470775634,
    -0.2011940939974345,
    0.0,
    0.2011940939974345,
    0.3941513470775634,
    0.5709721726085388,
    0.7244177313601701,
    0.8482065834104272,
    0.9372733924007060,
    0.9879925180204854,
];
pub(crate) const GL15_W: [f64; 15] = [
    0.0307532419961173,
    0.0703660474881081,
    0.1071592204671719,
    0.1395706779261543,
    0.1662692058169939,
    0.1861610000155622,
    0.1984314853271116,
    0.2025782419255613,
    0.1984314853271116,
    0.1861610000155622,
    0.1662692058169939,
    0.1395706779261543,
    0.1071592204671719,
    0.0703660474881081,
    0.0307532419961173,
];

pub(crate) fn gl15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = ZERO;
    for i in 0..15 {
        acc += GL15_W[i] * f(mid + half * GL15_X[i]);
    }
    acc * half
}

/// Adaptive bisection with GL15 panels; absolute tolerance with a floor at
/// the f64 noise level of the integrand scale.
pub(crate) fn integrate_real<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Complex64 {
    fn rec<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        b: f64,
        whole: Complex64,
        tol: f64,
        floor: f64,
        depth: u32,
    ) -> Complex64 {
        let mid = 0.5 * (a + b);
        let left = gl15(f, a, mid);
        let right = gl15(f, mid, b);
        let err = (left + right - whole).norm();
        if err < tol.max(floor) || depth == 0 {
            return left + right;
        }
        rec(f, a, mid, left, tol * 0.5, floor, depth - 1)
            + rec(f, mid, b, right, tol * 0.5, floor, depth - 1)
    }
    let whole = gl15(f, a, b);
    let floor = 2e-16 * whole.norm().max(tol);
    rec(f, a, b, whole, tol, floor, max_depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gamma_reference_values() {
        let g_half = gamma(c(0.5, 0.0)).unwrap();
        assert!((g_half.re - PI.sqrt()).abs() < 1e-13 && g_half.im.abs() < 1e-13);
        let g1 = gamma(ONE).unwrap();
        assert!((g1 - ONE).norm() < 1e-13);
        let g5 = gamma(c(5.0, 0.0)).unwrap();
        assert!((g5.re - 24.0).abs() < 24.0 * 1e-13);
        // complex reference (independent published value)
        let gz = gamma(c(4.0, 10.0)).unwrap();
        let want = c(0.0007715342942399662, -0.0010190827990417);
        assert!((gz - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn gamma_poles_and_recurrence() {
        assert!(matches!(
            gamma(c(0.0, 0.0)),
            Err(KernelError::GammaPole(0))
        ));
        assert!(matches!(
            gamma(c(-3.0, 0.0)),
            Err(KernelError::GammaPole(-3))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let z = c(rng.gen_range(-20.0..20.0), rng.gen_range(-50.0..50.0));
            if near_nonpositive_integer(z, 1e-3).is_some() {
                continue;
            }
            let lhs = gamma(z + 1.0).unwrap();
            let rhs = z * gamma(z).unwrap();
            assert!((lhs - rhs).norm() < 1e-11 * rhs.norm().max(1e-300), "z={z}");
        }
    }

    #[test]
    fn zeta_reference_values() {
        let z2 = zeta(c(2.0, 0.0)).unwrap();
        assert!((z2.re - PI * PI / 6.0).abs() < 1e-12);
        let z0 = zeta(c(0.0, 0.0)).unwrap();
        assert!((z0.re + 0.5).abs() < 1e-12 && z0.im.abs() < 1e-12);
        assert!(matches!(zeta(ONE), Err(KernelError::ZetaPole)));
    }

    #[test]
    fn zeta_functional_equation_spot() {
        let s = c(0.3, 7.0);
        let lhs = zeta(s).unwrap();
        let rhs = chi_factor(s).unwrap() * zeta(ONE - s).unwrap();
        assert!((lhs - rhs).norm() < 1e-8 * lhs.norm());
    }

    #[test]
    fn zeta_functional_equation_random_strip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let s = c(rng.gen_range(0.05..0.95), rng.gen_range(-80.0..80.0));
            if (s - ONE).norm() < 0.1 || s.norm() < 0.1 {
                continue;
            }
            let lhs = zeta(s).unwrap();
            let rhs = chi_factor(s).unwrap() * zeta(ONE - s).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-8 * lhs.norm().max(1e-12),
                "s={s} lhs={lhs} rhs={rhs}"
            );
        }
    }

    #[test]
    fn chi_factor_values_and_reflection() {
        // X(1/2) = 1
        let v = chi_factor(c(0.5, 0.0)).unwrap();
        assert!((v - ONE).norm() < 1e-13);
        // X(s) X(1-s) = 1
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = c(rng.gen_range(-0.8..0.9), rng.gen_range(-40.0..40.0));
            if near_nonpositive_integer(s / 2.0, 1e-2).is_some()
                || near_nonpositive_integer((ONE - s) / 2.0, 1e-2).is_some()
            {
                continue;
            }
            let prod = chi_factor(s).unwrap() * chi_factor(ONE - s).unwrap();
            assert!((prod - ONE).norm() < 1e-10, "s={s} prod={prod}");
        }
        assert!(matches!(
            chi_factor(c(3.0, 0.0)),
            Err(KernelError::ChiPole(3))
        ));
        assert_eq!(chi_factor(c(-2.0, 0.0)).unwrap(), ZERO);
    }

    #[test]
    fn chi_factor_growth_rate() {
        // |X(sigma + it)| ~ (|t|/2pi)^{1/2 - sigma} within a factor of 2
        for &sigma in &[0.1, 0.3, 0.7] {
            for &t in &[5.0f64, 12.0, 25.0, 50.0] {
                let v = chi_factor(c(sigma, t)).unwrap().norm();
                let model = (t / (2.0 * PI)).powf(0.5 - sigma);
                let ratio = v / model;
                assert!(
                    (0.5..2.0).contains(&ratio),
                    "sigma={sigma} t={t} ratio={ratio}"
                );
            }
        }
    }

    #[test]
    fn h_kernel_is_chi_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut tested = 0;
        while tested < 20 {
            let z = c(rng.gen_range(0.05..0.45), rng.gen_range(-8.0..8.0));
            let w = c(rng.gen_range(1.1..1.9), rng.gen_range(-8.0..8.0));
            let lhs = match h_kernel(z, w) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let rhs = chi_factor(w).unwrap()
                * chi_factor(ONE - z).unwrap()
                * chi_factor(ONE - w + z).unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-9 * rhs.norm().max(1e-12),
                "z={z} w={w}"
            );
            tested += 1;
        }
    }

    #[test]
    fn h_kernel_residue_at_two() {
        // Res_{w=2} H(z, w-1) = -2, via a small circle contour:
        // (1/2 pi i) contour integral = (1/N) sum f(w_j) (w_j - 2)
        let z = c(0.3, 0.4);
        let r = 1e-2;
        let n = 64;
        let mut acc = ZERO;
        for k in 0..n {
            let theta = TAU_F * (k as f64 + 0.5) / n as f64;
            let dw = c(r * theta.cos(), r * theta.sin());
            let w = c(2.0, 0.0) + dw;
            acc += h_kernel(z, w - 1.0).unwrap() * dw;
        }
        let res = acc / n as f64;
        assert!((res - c(-2.0, 0.0)).norm() < 1e-6, "res={res}");
    }

    const TAU_F: f64 = 2.0 * PI;

    #[test]
    fn h_kernel_growth_bound() {
        // |H(z,w)| against |w|^{1/2-Re w} |z|^{Re z - 1/2} |w-z|^{Re(w-z)-1/2}
        // within a factor of 4 on a grid away from the integers
        for &tz in &[3.0f64, 7.0, 15.0] {
            for &tw in &[4.0f64, 9.0, 21.0] {
                let z = c(0.25, tz);
                let w = c(1.3, tw);
                let v = h_kernel(z, w).unwrap().norm();
                let model = w.norm().powf(0.5 - w.re)
                    * z.norm().powf(z.re - 0.5)
                    * (w - z).norm().powf((w - z).re - 0.5);
                let ratio = v / model;
                assert!((0.25..4.0).contains(&ratio), "z={z} w={w} ratio={ratio}");
            }
        }
    }

    #[test]
    fn window_shapes() {
        let v = Window::main_v();
        assert_eq!(v.eval(0.0).unwrap(), 1.0);
        assert_eq!(v.eval(1.0).unwrap(), 0.0);
        assert_eq!(v.eval(1.7).unwrap(), 0.0);
        assert!(v.eval(0.5).unwrap() > 0.0);
        let w = Window::outer_w();
        assert_eq!(w.eval(1.0).unwrap(), 0.0);
        assert_eq!(w.eval(2.0).unwrap(), 0.0);
        assert!((w.eval(1.5).unwrap() - 1.0).abs() < 1e-14);
        assert!(w.eval(0.9).unwrap() == 0.0 && w.eval(2.1).unwrap() == 0.0);
        assert!(v.eval(f64::NAN).is_err());
    }

    #[test]
    fn window_smoothness_certificates() {
        assert!(Window::main_v().smoothness_certificate(4));
        assert!(Window::outer_w().smoothness_certificate(4));
    }

    #[test]
    fn window_derivative_matches_finite_difference() {
        let v = Window::main_v();
        let h = 1e-5;
        for &x in &[0.2, 0.5, 0.8] {
            let fd = (v.eval(x + h).unwrap() - v.eval(x - h).unwrap()) / (2.0 * h);
            let an = v.derivative(x, 1).unwrap();
            assert!((fd - an).abs() < 1e-7 * (1.0 + an.abs()), "x={x}");
        }
    }

    #[test]
    fn mellin_v_residue_normalization() {
        let v = Window::main_v();
        // eps * Vtilde(eps) -> 1
        let eps = 1e-3;
        let val = v.mellin(c(eps, 0.0)).unwrap();
        assert!((eps * val.re - 1.0).abs() < 5e-3, "val={val}");
        // decreasing-eps sequence approaches 1
        let mut prev_gap = f64::INFINITY;
        for &e in &[1e-2, 1e-3, 1e-4] {
            let gap = (e * v.mellin(c(e, 0.0)).unwrap().re - 1.0).abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
    }

    #[test]
    fn mellin_w_at_zero_positive() {
        let w = Window::outer_w();
        let val = w.mellin(ZERO).unwrap();
        assert!(val.re > 0.0 && val.re.is_finite() && val.im.abs() < 1e-12);
    }

    #[test]
    fn mellin_v_reference_values() {
        // frozen high-precision quadrature references for the direct
        // definition int_0^1 V(x) x^{s-1} dx
        let v = Window::main_v();
        let cases = [
            (c(1.5, 0.0), c(0.32602548891086819, 0.0)),
            (c(2.0, 3.0), c(-0.037792059914240104, -0.082759070441666559)),
            (c(0.8, -5.0), c(-0.0672360954365726, 0.0010084731024098441)),
        ];
        for (s, want) in cases {
            let got = v.mellin(s).unwrap();
            assert!((got - want).norm() < 1e-12, "s={s} got={got} want={want}");
        }
    }

    #[test]
    fn mellin_rapid_decay_constants() {
        let v = Window::main_v();
        for n in 1..=4 {
            let cn = v.decay_constant(n, 0.05);
            assert!(cn.is_finite() && cn > 0.0);
            // verify the bound at a few points
            for &t in &[5.0f64, 20.0, 60.0] {
                let val = v.mellin(c(0.05, t)).unwrap().norm();
                assert!(val <= cn / t.powi(n as i32) * 1.0001, "n={n} t={t}");
            }
        }
    }
}
