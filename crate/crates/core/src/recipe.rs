//! The moment-prediction engine: truncated Euler products, the zero- and
//! one-swap prediction terms by contour integration, and the confluent
//! circle-contour evaluator used when shifts collide.
//!
//! The key performance fact, proved by the same shift-translation identities
//! the identity suite checks, is that every Euler-product and zeta factor of
//! the swap-term integrand depends on s1 and s2 only through u = s1 + s2,
//! apart from an elementary (h/k)^{s1}-type factor. The double contour
//! integral is therefore evaluated as an outer u-integral of the expensive
//! arithmetic factors times an inner one-dimensional convolution of window
//! transforms, with the transforms interpolated along their fixed lines.

use crate::characters::even_primitive_count;
use crate::config::MomentConfig;
use crate::kernels::{self, Window};
use crate::linecache::VerticalLineCache;
use crate::par;
use crate::quadrature::{line_integral, Certified, DecayCertificate, LinePlan, QuadError};
use crate::shifts::{tau_powers_raw, ShiftSet};
use crate::arith;
use num_complex::Complex64;
use std::sync::Mutex;
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Fixed abscissa for the "(eps)" admissibility checks of the Euler-product
/// lemma regimes.
pub const EPS_REGIME: f64 = 0.05;

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("swap count {0} not supported (only 0 and 1)")]
    BadSwapCount(u32),
    #[error("swap element not a member of the shift set")]
    SwapNotMember,
    #[error("shifts of A u B are not pairwise distinct; use the confluent evaluator i1_confluent")]
    RepeatedShifts,
    #[error("convergence condition {0} violated")]
    Convergence(&'static str),
    #[error("w = {0} outside the admissible strip [1+eps, 5/2-eps]")]
    Strip(Complex64),
    #[error("contour configuration error: {0}")]
    Contour(String),
    #[error("truncation too small: {0}")]
    Truncation(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Kernel(#[from] kernels::KernelError),
}

/// Euler-product truncation parameters.
#[derive(Clone, Copy, Debug)]
pub struct EulerTruncation {
    /// Prime cutoff P.
    pub prime_cutoff: u64,
    /// Local series cutoff M.
    pub series_cutoff: usize,
    /// Exponent margin delta_0 > 0 entering the tail certificate
    /// exp(c * sum_{p > P} p^{-1-delta_0}) - 1.
    pub delta0: f64,
}

impl Default for EulerTruncation {
    fn default() -> Self {
        EulerTruncation {
            prime_cutoff: 10_000,
            series_cutoff: 60,
            delta0: 0.4,
        }
    }
}

impl EulerTruncation {
    pub fn new(prime_cutoff: u64, series_cutoff: usize, delta0: f64) -> Result<Self, RecipeError> {
        if prime_cutoff < 100 {
            return Err(RecipeError::Truncation("prime cutoff must be >= 100".into()));
        }
        if series_cutoff < 10 {
            return Err(RecipeError::Truncation("series cutoff must be >= 10".into()));
        }
        if !(delta0 > 0.0) {
            return Err(RecipeError::Truncation("delta0 must be positive".into()));
        }
        Ok(EulerTruncation {
            prime_cutoff,
            series_cutoff,
            delta0,
        })
    }

    /// Upper bound for sum_{p > P} p^{-1-delta0}.
    pub fn tail_sum(&self) -> f64 {
        let p = self.prime_cutoff as f64;
        p.powf(-self.delta0) / (self.delta0 * p.ln())
    }

    /// Multiplicative tail certificate for a product whose local factors are
    /// within c * p^{-1-delta0} of 1 beyond the cutoff.
    pub fn tail_bound(&self, c: f64) -> f64 {
        (c * self.tail_sum()).exp_m1()
    }
}

/// Which swap term and which elements are exchanged.
#[derive(Clone, Debug)]
pub struct SwapTermSpec {
    pub a: ShiftSet,
    pub b: ShiftSet,
    /// For the one-swap term: the exchanged pair (alpha, beta).
    pub swap: Option<(Complex64, Complex64)>,
}

impl SwapTermSpec {
    pub fn zero_swap(a: ShiftSet, b: ShiftSet) -> SwapTermSpec {
        SwapTermSpec { a, b, swap: None }
    }

    pub fn one_swap(
        a: ShiftSet,
        b: ShiftSet,
        alpha: Complex64,
        beta: Complex64,
    ) -> Result<SwapTermSpec, RecipeError> {
        if !a.shifts().contains(&alpha) || !b.shifts().contains(&beta) {
            return Err(RecipeError::SwapNotMember);
        }
        Ok(SwapTermSpec {
            a,
            b,
            swap: Some((alpha, beta)),
        })
    }

    pub fn swap_count(&self) -> u32 {
        self.swap.map_or(0, |_| 1)
    }

    /// Element lists of the two tau-multisets entering the local factors at
    /// the contour point (s1, s2).
    fn local_sets(&self, s1: Complex64, s2: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
        match self.swap {
            None => (
                self.a.shifts().iter().map(|&x| x + s1).collect(),
                self.b.shifts().iter().map(|&x| x + s2).collect(),
            ),
            Some((alpha, beta)) => {
                let mut ea: Vec<Complex64> = self
                    .a
                    .remove_one(alpha)
                    .shifts()
                    .iter()
                    .map(|&x| x + s1)
                    .collect();
                ea.push(-beta - s2);
                let mut eb: Vec<Complex64> = self
                    .b
                    .remove_one(beta)
                    .shifts()
                    .iter()
                    .map(|&x| x + s2)
                    .collect();
                eb.push(-alpha - s1);
                (ea, eb)
            }
        }
    }
}

/// Divisibility class of a prime relative to the modulus q and the twist hk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisibilityClass {
    /// p | q: the bare zeta-compensator.
    Modulus,
    /// p | hk: the twisted diagonal series.
    Twist,
    /// p coprime to q h k.
    Generic,
}

fn cpow(base_ln: f64, e: Complex64) -> Complex64 {
    (e * base_ln).exp()
}

/// Compensator prod_{gamma in EA, delta in EB} (1 - p^{-1-gamma-delta}).
fn compensator(ea: &[Complex64], eb: &[Complex64], lnp: f64) -> Complex64 {
    let mut acc = ONE;
    for &g in ea {
        for &d in eb {
            acc *= ONE - cpow(lnp, -ONE - g - d);
        }
    }
    acc
}

/// One local factor of the swap-term Euler product, with a truncation-tail
/// estimate for the local series.
pub fn local_factor_i(
    p: u64,
    class: DivisibilityClass,
    spec: &SwapTermSpec,
    s1: Complex64,
    s2: Complex64,
    h: u64,
    k: u64,
    trunc: &EulerTruncation,
) -> Result<(Complex64, f64), RecipeError> {
    let lnp = (p as f64).ln();
    let (ea, eb) = spec.local_sets(s1, s2);
    let comp = compensator(&ea, &eb, lnp);
    match class {
        DivisibilityClass::Modulus => Ok((comp, 0.0)),
        DivisibilityClass::Generic => {
            let m = trunc.series_cutoff;
            let ta = tau_powers_raw(&ea, p, m);
            let tb = tau_powers_raw(&eb, p, m);
            let mut acc = ZERO;
            let mut tail = 0.0;
            let mut prev = f64::INFINITY;
            let mut w = ONE;
            let invp = 1.0 / p as f64;
            for i in 0..=m {
                let term = ta[i] * tb[i] * w;
                acc += term;
                let mag = term.norm();
                if i >= 2 && mag < 1e-17 * acc.norm().max(1e-300) {
                    tail = 0.0;
                    break;
                }
                if i >= 1 {
                    let ratio = (mag / prev.max(1e-300)).min(0.9);
                    tail = mag * ratio / (1.0 - ratio);
                }
                prev = mag;
                w *= invp;
            }
            Ok((comp * acc, tail * comp.norm()))
        }
        DivisibilityClass::Twist => {
            let hp = ord_p(h, p);
            let kp = ord_p(k, p);
            let dm = kp.saturating_sub(hp) as usize;
            let dn = hp.saturating_sub(kp) as usize;
            let m = trunc.series_cutoff;
            let ta = tau_powers_raw(&ea, p, m + dm);
            let tb = tau_powers_raw(&eb, p, m + dn);
            let sq = (p as f64).sqrt().recip();
            let mut acc = ZERO;
            let mut tail = 0.0;
            let mut prev = f64::INFINITY;
            // p^{-(m+n)/2} over m = nu + dm, n = nu + dn
            let mut w = sq.powi((dm + dn) as i32);
            for nu in 0..=m {
                let term = ta[nu + dm] * tb[nu + dn] * w;
                acc += term;
                let mag = term.norm();
                if nu >= 2 && mag < 1e-17 * acc.norm().max(1e-300) {
                    tail = 0.0;
                    break;
                }
                if nu >= 1 {
                    let ratio = (mag / prev.max(1e-300)).min(0.9);
                    tail = mag * ratio / (1.0 - ratio);
                }
                prev = mag;
                w *= sq * sq;
            }
            Ok((comp * acc, tail * comp.norm()))
        }
    }
}

fn ord_p(n: u64, p: u64) -> u32 {
    let mut n = n;
    let mut a = 0;
    while n % p == 0 && n > 0 {
        n /= p;
        a += 1;
    }
    a
}

// ---------------------------------------------------------------------------
// the K Euler product and its functional-equation regime
// ---------------------------------------------------------------------------

fn check_k_regime(
    s1: Complex64,
    s2: Complex64,
    w: Complex64,
    alpha: Complex64,
    beta: Complex64,
) -> Result<(), RecipeError> {
    let eps = EPS_REGIME;
    if (w - 1.0 + alpha + s1 + beta + s2).re < 0.5 + eps {
        return Err(RecipeError::Convergence(
            "(i) Re(w - 1 + alpha + s1 + beta + s2) >= 1/2 + eps",
        ));
    }
    let u = (s1 + s2).re;
    if !(-0.5 + 5.0 * eps <= u && u <= 2.0 * eps) {
        return Err(RecipeError::Convergence(
            "(ii) -1/2 + 5 eps <= Re(s1 + s2) <= 2 eps",
        ));
    }
    if s1.re.abs() > eps && s2.re.abs() > eps {
        return Err(RecipeError::Convergence(
            "(iii) |Re s1| <= eps or |Re s2| <= eps",
        ));
    }
    Ok(())
}

/// The one-swap Euler product K(s1, s2, w; A, B, alpha, beta, h, k),
/// truncated at the prime cutoff, with a multiplicative tail certificate.
#[allow(clippy::too_many_arguments)]
pub fn k_product(
    s1: Complex64,
    s2: Complex64,
    w: Complex64,
    a: &ShiftSet,
    b: &ShiftSet,
    alpha: Complex64,
    beta: Complex64,
    h: u64,
    k: u64,
    trunc: &EulerTruncation,
) -> Result<Certified, RecipeError> {
    check_k_regime(s1, s2, w, alpha, beta)?;
    let spec = SwapTermSpec::one_swap(a.clone(), b.clone(), alpha, beta)?;
    let (ea, eb) = spec.local_sets(s1, s2);
    let w1 = w - 1.0 + alpha + s1 + beta + s2;
    let w2 = w + alpha + s1 + beta + s2;
    let primes = arith::primes_up_to(trunc.prime_cutoff);
    let mut acc = ONE;
    let mut c_meas: f64 = 0.0;
    let half_p = trunc.prime_cutoff / 2;
    for &p in &primes {
        let lnp = (p as f64).ln();
        let pf = p as f64;
        let head = ONE - cpow(lnp, -w1);
        let local = if h % p == 0 || k % p == 0 {
            let (lf, _) = local_factor_i(
                p,
                DivisibilityClass::Twist,
                &spec,
                s1,
                s2,
                h,
                k,
                trunc,
            )?;
            head * lf
        } else {
            let comp = compensator(&ea, &eb, lnp);
            let geo_arg = ONE - w2; // 1 - w - alpha - s1 - beta - s2
            // bracket = 1 + (p-2) p^{-w2} + (1-1/p)^2 p^{2(1-w2)}/(1-p^{1-w2}) + sum
            let mut bracket = ONE
                + (pf - 2.0) * cpow(lnp, -w2)
                + (1.0 - 1.0 / pf) * (1.0 - 1.0 / pf) * cpow(lnp, 2.0 * geo_arg)
                    / (ONE - cpow(lnp, geo_arg));
            let m = trunc.series_cutoff;
            let ta = tau_powers_raw(&ea, p, m);
            let tb = tau_powers_raw(&eb, p, m);
            let mut wpow = 1.0 / pf;
            for i in 1..=m {
                let term = ta[i] * tb[i] * wpow;
                bracket += term;
                if term.norm() < 1e-17 * bracket.norm().max(1e-300) {
                    break;
                }
                wpow /= pf;
            }
            head * comp * bracket
        };
        if p > half_p {
            c_meas = c_meas.max((local - ONE).norm() * pf.powf(1.0 + trunc.delta0));
        }
        acc *= local;
    }
    let tail = trunc.tail_bound(c_meas.max(1e-12));
    Ok(Certified::new(acc, acc.norm() * tail))
}

// ---------------------------------------------------------------------------
// the G Euler product
// ---------------------------------------------------------------------------

/// The residue-side Euler product G(w, alpha, beta; A, B, h, k), truncated at
/// the prime cutoff, with a multiplicative tail certificate.
#[allow(clippy::too_many_arguments)]
pub fn g_product(
    w: Complex64,
    alpha: Complex64,
    beta: Complex64,
    a: &ShiftSet,
    b: &ShiftSet,
    h: u64,
    k: u64,
    trunc: &EulerTruncation,
) -> Result<Certified, RecipeError> {
    let eps = EPS_REGIME;
    if !(1.0 + eps <= w.re && w.re <= 2.5 - eps) {
        return Err(RecipeError::Strip(w));
    }
    if !a.shifts().contains(&alpha) || !b.shifts().contains(&beta) {
        return Err(RecipeError::SwapNotMember);
    }
    let a_rest = a.remove_one(alpha);
    let b_rest = b.remove_one(beta);
    let m_cut = trunc.series_cutoff;
    let primes = arith::primes_up_to(trunc.prime_cutoff);
    let mut acc = ONE;
    let mut c_meas: f64 = 0.0;
    let half_p = trunc.prime_cutoff / 2;
    for &p in &primes {
        let pf = p as f64;
        let lnp = pf.ln();
        let pw = cpow(lnp, w);
        // the three finite products shared by both divisibility classes
        let mut prods = ONE;
        for &ah in a_rest.shifts() {
            for &bh in b_rest.shifts() {
                prods *= ONE - cpow(lnp, -(c(3.0, 0.0) + ah + bh - alpha - beta - w));
            }
        }
        for &ah in a.shifts() {
            prods *= ONE - cpow(lnp, -(ONE + ah - alpha));
        }
        for &bh in b.shifts() {
            prods *= ONE - cpow(lnp, -(ONE + bh - beta));
        }
        let cplus = ONE + pw / (pf * pf * (pf - 1.0)) - 1.0 / (pf - 1.0);
        let cminus = ONE - pw / (pf * pf);
        let ta = tau_powers_raw(a.shifts(), p, m_cut + 8);
        let tb = tau_powers_raw(b.shifts(), p, m_cut + 8);
        let local = if h % p == 0 || k % p == 0 {
            let hp = ord_p(h, p) as i64;
            let kp = ord_p(k, p) as i64;
            let g3 = cpow(lnp, -(ONE - alpha)); // p^{-(1-alpha)} for m
            let g2 = cpow(lnp, -(ONE - beta)); // p^{-(1-beta)} for n
            let pw1 = cpow(lnp, w - 1.0); // p^{w-1}
            let mut diag = ZERO;
            let mut off = ZERO;
            for m in 0..=m_cut {
                for n in 0..=m_cut {
                    let min_mn = (m as i64 + hp).min(n as i64 + kp);
                    let term = ta[m]
                        * tb[n]
                        * g3.powu(m as u32)
                        * g2.powu(n as u32)
                        * pw1.powu(min_mn as u32);
                    if m as i64 + hp == n as i64 + kp {
                        diag += term;
                    } else {
                        off += term;
                    }
                }
            }
            prods * (cplus * diag + cminus * off)
        } else {
            let piece1 = (ONE - cpow(lnp, -w))
                * (ONE + (cpow(lnp, w - 1.0) - 1.0) / (pf * (pf - 1.0)));
            let r = cpow(lnp, -(c(3.0, 0.0) - alpha - beta - w));
            let mut piece2 = ZERO;
            let mut rp = r;
            for m in 1..=m_cut {
                let term = ta[m] * tb[m] * rp;
                piece2 += term;
                if term.norm() < 1e-17 * piece2.norm().max(1e-300) {
                    break;
                }
                rp *= r;
            }
            piece2 *= cplus;
            let g1 = cpow(lnp, -(c(2.0, 0.0) - alpha - w));
            let g2 = cpow(lnp, -(ONE - beta));
            let mut piece3 = ZERO;
            for m in 0..=m_cut {
                let base = ta[m] * g1.powu(m as u32);
                if base.norm() < 1e-20 {
                    continue;
                }
                let mut gn = g2.powu(m as u32 + 1);
                for n in (m + 1)..=(m + 1 + m_cut) {
                    let term = base * tb[n.min(m_cut + 8)] * gn;
                    if n <= m_cut + 8 {
                        piece3 += term;
                    }
                    if term.norm() < 1e-18 * piece3.norm().max(1e-300) {
                        break;
                    }
                    gn *= g2;
                }
            }
            piece3 *= cminus;
            let g3 = cpow(lnp, -(ONE - alpha));
            let g4 = cpow(lnp, -(c(2.0, 0.0) - beta - w));
            let mut piece4 = ZERO;
            for n in 0..=m_cut {
                let base = tb[n] * g4.powu(n as u32);
                if base.norm() < 1e-20 {
                    continue;
                }
                let mut gm = g3.powu(n as u32 + 1);
                for m in (n + 1)..=(n + 1 + m_cut) {
                    let term = base * ta[m.min(m_cut + 8)] * gm;
                    if m <= m_cut + 8 {
                        piece4 += term;
                    }
                    if term.norm() < 1e-18 * piece4.norm().max(1e-300) {
                        break;
                    }
                    gm *= g3;
                }
            }
            piece4 *= cminus;
            prods * (piece1 + piece2 + piece3 + piece4)
        };
        if p > half_p && h % p != 0 && k % p != 0 {
            c_meas = c_meas.max((local - ONE).norm() * pf.powf(1.0 + trunc.delta0));
        }
        acc *= local;
    }
    let tail = trunc.tail_bound(c_meas.max(1e-12));
    Ok(Certified::new(acc, acc.norm() * tail))
}

// ---------------------------------------------------------------------------
// swap-term computation (the prediction terms)
// ---------------------------------------------------------------------------

/// Per-prime constants for the u-line evaluation of one swap term.
struct PrimeData {
    p: f64,
    lnp: f64,
    /// Base tau tables: tau_{A or A\alpha}(p^i), tau_{B or B\beta}(p^i).
    ta: Vec<Complex64>,
    tb: Vec<Complex64>,
    /// coefficients c giving compensator factors (1 - c z), z = p^{-u}
    comp_z: Vec<Complex64>,
    /// u-free compensator factor (one-swap only)
    comp_const: Complex64,
    /// coefficient c giving a factor (1 - c / z) (one-swap only)
    comp_invz: Option<Complex64>,
    /// p^{beta} (one-swap: geometric ratio of the A-side is p^{beta}/z)
    ratio_a: Complex64,
    /// p^{alpha} (one-swap: geometric ratio of the B-side)
    ratio_b: Complex64,
    /// For p | hk: (dm, dn, p^{-(dm+dn)/2}) with the index offsets of the
    /// constrained series.
    twist: Option<(usize, usize, f64)>,
}

struct QData {
    lnq: f64,
    weight: f64,
    prime_idx: Vec<usize>,
}

struct TermEvaluator {
    one_swap: Option<(Complex64, Complex64)>,
    x_ln: f64,
    sigma1: f64,
    sigma_u: f64,
    t_inner: f64,
    t_outer_cap: f64,
    tol_inner: f64,
    inner_decay: DecayCertificate,
    primes: Vec<PrimeData>,
    n_correction_primes: usize,
    qdata: Vec<QData>,
    /// exponents e with a factor zeta(1 + e + u)
    zeta_pairs: Vec<Complex64>,
    /// exponent e with a factor zeta(1 - e - u) (one-swap)
    zeta_neg: Option<Complex64>,
    /// u-free zeta products (one-swap)
    zeta_const: Complex64,
    /// ln of the (h/k)-type ratio entering the inner integrand
    ratio_ln: f64,
    v1: VerticalLineCache,
    v2: VerticalLineCache,
    chi1: Option<VerticalLineCache>,
    chi2: Option<VerticalLineCache>,
    worst_inner: Mutex<f64>,
    series_floor: f64,
}

impl TermEvaluator {
    fn inner(&self, u: Complex64) -> Complex64 {
        let integrand = |s1: Complex64| {
            let t1 = s1.im;
            let t2 = u.im - t1;
            let mut v = self.v1.eval(t1) * self.v2.eval(t2);
            if let (Some(c1), Some(c2)) = (&self.chi1, &self.chi2) {
                v *= c1.eval(t1) * c2.eval(t2);
            }
            if self.ratio_ln != 0.0 {
                v *= (s1 * self.ratio_ln).exp();
            }
            v
        };
        let plan = LinePlan {
            sigma: self.sigma1,
            t_max: self.t_inner,
            tol: self.tol_inner,
            max_depth: 24,
            decay: self.inner_decay,
            parallel: false,
        };
        match line_integral(&integrand, &plan) {
            Ok(cert) => {
                let mut w = self.worst_inner.lock().unwrap();
                if cert.error > *w {
                    *w = cert.error;
                }
                cert.value
            }
            Err(QuadError::Accuracy { value, achieved, .. }) => {
                let mut w = self.worst_inner.lock().unwrap();
                if achieved > *w {
                    *w = achieved;
                }
                value
            }
            Err(_) => c(f64::NAN, 0.0),
        }
    }

    /// Local factor data at one prime for a given z = p^{-u}: returns
    /// (local, series) where local = comp * series.
    fn local_at(&self, pd: &PrimeData, z: Complex64) -> (Complex64, Complex64) {
        let mut comp = pd.comp_const;
        for &cc in &pd.comp_z {
            comp *= ONE - cc * z;
        }
        if let Some(c4) = pd.comp_invz {
            comp *= ONE - c4 / z;
        }
        let invp = 1.0 / pd.p;
        let series = match self.one_swap {
            None => {
                // sum_m tau_A tau_B (z/p)^m
                let w = z * invp;
                let mut acc = ONE;
                let mut wp = ONE;
                let mut prev = f64::INFINITY;
                for m in 1..pd.ta.len() {
                    wp *= w;
                    let term = pd.ta[m] * pd.tb[m] * wp;
                    acc += term;
                    let mag = term.norm();
                    if m >= 2 && (mag < 1e-17 * acc.norm().max(1e-300) || mag > prev && mag < 1e-14)
                    {
                        break;
                    }
                    prev = mag;
                }
                acc
            }
            Some(_) => {
                let aa = pd.ratio_a / z;
                let bb = pd.ratio_b;
                let mut arr_a = ONE; // tau tables start at 1
                let mut arr_b = ONE;
                let mut zp = ONE;
                let mut pp = 1.0;
                let mut acc = ONE;
                for m in 1..pd.ta.len() {
                    zp *= z;
                    pp *= invp;
                    arr_a = pd.ta[m] + aa * arr_a;
                    arr_b = pd.tb[m] * zp + bb * arr_b;
                    let term = arr_a * arr_b * pp;
                    acc += term;
                    if m >= 2 && term.norm() < 1e-17 * acc.norm().max(1e-300) {
                        break;
                    }
                }
                acc
            }
        };
        (comp * series, series)
    }

    /// Local factor at a p | hk prime.
    fn twist_local_at(&self, pd: &PrimeData, z: Complex64) -> Complex64 {
        let (dm, dn, norm) = pd.twist.expect("twist prime");
        let mut comp = pd.comp_const;
        for &cc in &pd.comp_z {
            comp *= ONE - cc * z;
        }
        if let Some(c4) = pd.comp_invz {
            comp *= ONE - c4 / z;
        }
        let invp = 1.0 / pd.p;
        match self.one_swap {
            None => {
                // p^{-(dm + dn)/2} z^{dn} sum_nu tau_A[nu+dm] tau_B[nu+dn] (z/p)^nu
                let w = z * invp;
                let mut acc = ZERO;
                let mut wp = ONE;
                let nu_max = pd.ta.len() - 1 - dm.max(dn);
                for nu in 0..=nu_max {
                    let term = pd.ta[nu + dm] * pd.tb[nu + dn] * wp;
                    acc += term;
                    if nu >= 2 && term.norm() < 1e-17 * acc.norm().max(1e-300) {
                        break;
                    }
                    wp *= w;
                }
                comp * acc * norm * z.powu(dn as u32)
            }
            Some(_) => {
                // sum over m = nu + dm, n = nu + dn of arrA[m] arrB[n] p^{-(m+n)/2}
                let aa = pd.ratio_a / z;
                let bb = pd.ratio_b;
                let len = pd.ta.len();
                let mut arr_a = vec![ZERO; len];
                let mut arr_b = vec![ZERO; len];
                arr_a[0] = ONE;
                arr_b[0] = ONE;
                let mut zp = ONE;
                for m in 1..len {
                    zp *= z;
                    arr_a[m] = pd.ta[m] + aa * arr_a[m - 1];
                    arr_b[m] = pd.tb[m] * zp + bb * arr_b[m - 1];
                }
                let sq = pd.p.sqrt().recip();
                let mut w = sq.powi((dm + dn) as i32);
                let mut acc = ZERO;
                let nu_max = len - 1 - dm.max(dn);
                for nu in 0..=nu_max {
                    let term = arr_a[nu + dm] * arr_b[nu + dn] * w;
                    acc += term;
                    if nu >= 2 && term.norm() < 1e-17 * acc.norm().max(1e-300) {
                        break;
                    }
                    w *= sq * sq;
                }
                comp * acc
            }
        }
    }

    fn outer(&self, u: Complex64) -> Complex64 {
        // zeta factors
        let mut zpart = self.zeta_const;
        for &e in &self.zeta_pairs {
            zpart *= match kernels::zeta(ONE + e + u) {
                Ok(v) => v,
                Err(_) => return c(f64::NAN, 0.0),
            };
        }
        if let Some(e) = self.zeta_neg {
            zpart *= match kernels::zeta(ONE - e - u) {
                Ok(v) => v,
                Err(_) => return c(f64::NAN, 0.0),
            };
        }
        // Euler product over generic primes; keep per-prime corrections for
        // the q-sum over the first `n_correction_primes` primes
        let mut big = ONE;
        let mut corr = vec![ONE; self.n_correction_primes];
        for (i, pd) in self.primes.iter().enumerate() {
            let z = (-u * pd.lnp).exp();
            if pd.twist.is_some() {
                big *= self.twist_local_at(pd, z);
            } else {
                let (local, series) = self.local_at(pd, z);
                big *= local;
                if i < self.n_correction_primes {
                    corr[i] = if series.norm() > self.series_floor {
                        series.finv()
                    } else {
                        ONE
                    };
                }
            }
        }
        // q-sum
        let mut qsum = ZERO;
        match self.one_swap {
            None => {
                for qd in &self.qdata {
                    let mut term = c(qd.weight, 0.0);
                    for &i in &qd.prime_idx {
                        term *= corr[i];
                    }
                    qsum += term;
                }
            }
            Some((alpha, beta)) => {
                for qd in &self.qdata {
                    let mut term = (-(alpha + beta + u) * qd.lnq).exp().scale(qd.weight);
                    for &i in &qd.prime_idx {
                        term *= corr[i];
                    }
                    qsum += term;
                }
            }
        }
        (u * self.x_ln).exp() * zpart * big * qsum * self.inner(u)
    }

    /// Measure the local-factor deviation constant for the tail certificate
    /// at a real point of the line.
    fn measure_tail_constant(&self, trunc: &EulerTruncation) -> f64 {
        let u = c(self.sigma_u, 0.0);
        let half = trunc.prime_cutoff as f64 / 2.0;
        let mut cm: f64 = 0.0;
        for pd in &self.primes {
            if pd.p > half && pd.twist.is_none() {
                let z = (-u * pd.lnp).exp();
                let (local, _) = self.local_at(pd, z);
                cm = cm.max((local - ONE).norm() * pd.p.powf(1.0 + trunc.delta0));
            }
        }
        cm.max(1e-12)
    }
}

fn min_pair_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

fn build_qdata(
    cfg: &MomentConfig,
    primes: &[PrimeData],
    n_correction: usize,
) -> Vec<QData> {
    let w = Window::outer_w();
    let mut out = Vec::new();
    for q in cfg.modulus_range() {
        if arith::gcd(q, cfg.h * cfg.k) != 1 {
            continue;
        }
        let wq = w.eval(q as f64 / cfg.q_scale).unwrap();
        if wq == 0.0 {
            continue;
        }
        let weight = wq * even_primitive_count(q);
        if weight == 0.0 {
            continue;
        }
        let mut prime_idx = Vec::new();
        for (p, _) in arith::factorize(q) {
            let idx = primes
                .partition_point(|pd| (pd.p as u64) < p)
                .min(n_correction.saturating_sub(1));
            debug_assert_eq!(primes[idx].p as u64, p);
            prime_idx.push(idx);
        }
        out.push(QData {
            lnq: (q as f64).ln(),
            weight,
            prime_idx,
        });
    }
    out
}

/// Build the per-prime constant tables for one swap term.
fn build_primes(
    spec: &SwapTermSpec,
    h: u64,
    k: u64,
    trunc: &EulerTruncation,
) -> Vec<PrimeData> {
    let primes = arith::primes_up_to(trunc.prime_cutoff);
    let g = arith::gcd(h, k);
    let (hq, kq) = (h / g, k / g);
    let m_len = trunc.series_cutoff.min(48) + 9;
    primes
        .iter()
        .map(|&p| {
            let pf = p as f64;
            let lnp = pf.ln();
            let twist = if h % p == 0 || k % p == 0 {
                match spec.swap {
                    None => {
                        // offsets ord_p(K), ord_p(H) with K = k/(h,k), H = h/(h,k)
                        let dm = ord_p(kq, p) as usize;
                        let dn = ord_p(hq, p) as usize;
                        let norm = pf.powf(-0.5 * (dm + dn) as f64);
                        Some((dm, dn, norm))
                    }
                    Some(_) => {
                        // m + ord_p(h) = n + ord_p(k)
                        let hp = ord_p(h, p) as usize;
                        let kp = ord_p(k, p) as usize;
                        Some((kp.saturating_sub(hp), hp.saturating_sub(kp), 1.0))
                    }
                }
            } else {
                None
            };
            match spec.swap {
                None => {
                    let ta = tau_powers_raw(spec.a.shifts(), p, m_len - 1);
                    let tb = tau_powers_raw(spec.b.shifts(), p, m_len - 1);
                    let mut comp_z = Vec::new();
                    for &al in spec.a.shifts() {
                        for &be in spec.b.shifts() {
                            comp_z.push(cpow(lnp, -ONE - al - be));
                        }
                    }
                    PrimeData {
                        p: pf,
                        lnp,
                        ta,
                        tb,
                        comp_z,
                        comp_const: ONE,
                        comp_invz: None,
                        ratio_a: ONE,
                        ratio_b: ONE,
                        twist,
                    }
                }
                Some((alpha, beta)) => {
                    let a_rest = spec.a.remove_one(alpha);
                    let b_rest = spec.b.remove_one(beta);
                    let ta = tau_powers_raw(a_rest.shifts(), p, m_len - 1);
                    let tb = tau_powers_raw(b_rest.shifts(), p, m_len - 1);
                    let mut comp_z = Vec::new();
                    for &ap in a_rest.shifts() {
                        for &bp in b_rest.shifts() {
                            comp_z.push(cpow(lnp, -ONE - ap - bp));
                        }
                    }
                    let mut comp_const = ONE;
                    for &ap in a_rest.shifts() {
                        comp_const *= ONE - cpow(lnp, -ONE - ap + alpha);
                    }
                    for &bp in b_rest.shifts() {
                        comp_const *= ONE - cpow(lnp, -ONE - bp + beta);
                    }
                    PrimeData {
                        p: pf,
                        lnp,
                        ta,
                        tb,
                        comp_z,
                        comp_const,
                        comp_invz: Some(cpow(lnp, -ONE + alpha + beta)),
                        ratio_a: cpow(lnp, beta),
                        ratio_b: cpow(lnp, alpha),
                        twist,
                    }
                }
            }
        })
        .collect()
}

/// Sample |f| outward along the line until the certified tail of a local
/// polynomial fit drops under `budget`; returns the truncation and the fit.
fn fit_truncation<F: FnMut(f64) -> f64>(
    mut sample: F,
    budget: f64,
    t_lo: f64,
    t_cap: f64,
) -> (f64, DecayCertificate) {
    let mut t = t_lo;
    let mut prev = sample(t).max(1e-300);
    loop {
        let tn = t * 1.5;
        let val = sample(tn).max(1e-300);
        let slope = ((prev / val).ln() / 1.5f64.ln()).clamp(2.0, 12.0);
        let n = (slope.round() as u32).max(2);
        let cert = DecayCertificate::new(n, val * tn.powi(n as i32) * 4.0);
        if cert.tail(tn) <= budget || tn >= t_cap {
            return (tn, cert);
        }
        prev = val;
        t = tn;
    }
}

/// Contour abscissas for one swap term: the inner line and the u-line kept
/// right of every shift-induced pole of the zeta factors.
fn plan_sigmas(cfg: &MomentConfig, term: &SwapTermSpec) -> Result<(f64, f64), RecipeError> {
    let sigma1 = cfg.epsilon;
    let mut max_pole: f64 = 0.0;
    match term.swap {
        None => {
            for &al in term.a.shifts() {
                for &be in term.b.shifts() {
                    max_pole = max_pole.max((-(al + be)).re);
                }
            }
        }
        Some((alpha, beta)) => {
            max_pole = max_pole.max((alpha + beta).re.max(-(alpha + beta).re));
            for &al in term.a.remove_one(alpha).shifts() {
                for &be in term.b.remove_one(beta).shifts() {
                    max_pole = max_pole.max((-(al + be)).re);
                }
            }
        }
    }
    let sigma_u = (2.0 * cfg.epsilon).max(max_pole + 0.05);
    let max_re_shift = term
        .a
        .shifts()
        .iter()
        .chain(term.b.shifts())
        .map(|z| z.re.abs())
        .fold(0.0, f64::max);
    if sigma_u > 0.45 - max_re_shift {
        return Err(RecipeError::Contour(format!(
            "u-line abscissa {sigma_u:.3} collides with the gamma-factor poles"
        )));
    }
    Ok((sigma1, sigma_u))
}

fn build_term_evaluator(
    cfg: &MomentConfig,
    term: &SwapTermSpec,
) -> Result<TermEvaluator, RecipeError> {
    let (sigma1, sigma_u) = plan_sigmas(cfg, term)?;
    let h = cfg.h;
    let k = cfg.k;
    let g = arith::gcd(h, k);
    let v = Window::main_v();
    let sigma2 = sigma_u - sigma1;

    // single-line truncation of the window transform, from its sampled
    // envelope; this bounds both the inner line and the outer decay scale
    let v1_at0 = v.mellin(c(sigma1, 0.0))?.norm();
    let (t_single, bare_cert) = fit_truncation(
        |t| v.mellin(c(sigma1, t)).map(|z| z.norm()).unwrap_or(0.0),
        (cfg.quad_tol * 1e-2 * v1_at0).max(1e-14),
        16.0,
        2400.0,
    );
    let t_outer_cap = t_single + 32.0;
    let t_inner = t_single + t_outer_cap;
    let cache_span = t_inner + 16.0;

    let cache_tol = 1e-12;
    let v1 = VerticalLineCache::build(|s| v.mellin(s).unwrap(), sigma1, cache_span, cache_tol, true);
    let v2 = VerticalLineCache::build(|s| v.mellin(s).unwrap(), sigma2, cache_span, cache_tol, true);
    let (chi1, chi2, ratio_ln, zeta_pairs, zeta_neg, zeta_const) = match term.swap {
        None => {
            let mut pairs = Vec::new();
            for &al in term.a.shifts() {
                for &be in term.b.shifts() {
                    pairs.push(al + be);
                }
            }
            let ratio_ln = ((h / g) as f64 / (k / g) as f64).ln();
            (None, None, ratio_ln, pairs, None, ONE)
        }
        Some((alpha, beta)) => {
            let base1 = c(0.5, 0.0) + alpha;
            let chi1 = VerticalLineCache::build(
                |s| kernels::chi_factor(base1 + s).unwrap(),
                sigma1,
                cache_span,
                cache_tol,
                alpha.im == 0.0,
            );
            let base2 = c(0.5, 0.0) + beta;
            let chi2 = VerticalLineCache::build(
                |s| kernels::chi_factor(base2 + s).unwrap(),
                sigma2,
                cache_span,
                cache_tol,
                beta.im == 0.0,
            );
            let mut pairs = Vec::new();
            for &al in term.a.remove_one(alpha).shifts() {
                for &be in term.b.remove_one(beta).shifts() {
                    pairs.push(al + be);
                }
            }
            let mut zc = ONE;
            for &al in term.a.remove_one(alpha).shifts() {
                zc *= kernels::zeta(ONE + al - alpha)?;
            }
            for &be in term.b.remove_one(beta).shifts() {
                zc *= kernels::zeta(ONE + be - beta)?;
            }
            let ratio_ln = (h as f64 / k as f64).ln();
            (
                Some(chi1),
                Some(chi2),
                ratio_ln,
                pairs,
                Some(alpha + beta),
                zc,
            )
        }
    };
    let primes = build_primes(term, h, k, &cfg.truncation);
    let two_q = (2.0 * cfg.q_scale).ceil() as u64;
    if cfg.truncation.prime_cutoff < two_q {
        return Err(RecipeError::Truncation(format!(
            "prime cutoff {} below 2Q = {two_q}",
            cfg.truncation.prime_cutoff
        )));
    }
    let n_correction = primes.partition_point(|pd| (pd.p as u64) <= two_q);
    let qdata = build_qdata(cfg, &primes, n_correction);
    // inner certificate: bare window fit times bounds on the other factors
    let v_sup_2 = v.mellin(c(sigma2, 0.0)).map(|z| z.norm()).unwrap_or(1.0);
    let chi_sup = match term.swap {
        None => 1.0,
        Some((alpha, beta)) => {
            let c1 = kernels::chi_factor(c(0.5 + sigma1, 0.0) + alpha)
                .map(|z| z.norm())
                .unwrap_or(2.0);
            let c2 = kernels::chi_factor(c(0.5 + sigma2, 0.0) + beta)
                .map(|z| z.norm())
                .unwrap_or(2.0);
            (c1 * c2 * 1.5).max(1.0)
        }
    };
    let inner_decay = DecayCertificate::new(
        bare_cert.n,
        bare_cert.c * v_sup_2 * chi_sup * (h as f64 / k as f64).max(k as f64 / h as f64).powf(sigma1) * 2.0,
    );
    Ok(TermEvaluator {
        one_swap: term.swap,
        x_ln: cfg.x().ln(),
        sigma1,
        sigma_u,
        t_inner,
        t_outer_cap,
        tol_inner: 1e-10,
        inner_decay,
        primes,
        n_correction_primes: n_correction,
        qdata,
        zeta_pairs,
        zeta_neg,
        zeta_const,
        ratio_ln,
        v1,
        v2,
        chi1,
        chi2,
        worst_inner: Mutex::new(0.0),
        series_floor: 1e-14,
    })
}

/// One swap term of the prediction, for the exchanged pair baked into `term`.
fn swap_term_value(cfg: &MomentConfig, term: &SwapTermSpec) -> Result<Certified, RecipeError> {
    let mut ev = build_term_evaluator(cfg, term)?;
    // probe the scale on the real axis to convert the relative target into
    // absolute budgets
    let inner_probe = ev.inner(c(ev.sigma_u, 0.0)).norm().max(1e-300);
    let probe = ev.outer(c(ev.sigma_u, 0.0)).norm();
    let scale = (probe * 4.0).max(1e-12);
    let tol_abs = cfg.quad_tol * scale;
    let rest_scale = probe / inner_probe;
    ev.tol_inner =
        (tol_abs * std::f64::consts::PI / (4.0 * ev.t_outer_cap * rest_scale.max(1e-300))).max(1e-14);
    let c_meas = ev.measure_tail_constant(&cfg.truncation);
    *ev.worst_inner.lock().unwrap() = 0.0;

    // outer truncation from the sampled integrand envelope
    let (t_outer, outer_cert) = fit_truncation(
        |t| ev.outer(c(ev.sigma_u, t)).norm(),
        0.1 * tol_abs,
        16.0,
        ev.t_outer_cap,
    );
    *ev.worst_inner.lock().unwrap() = 0.0;
    let plan = LinePlan {
        sigma: ev.sigma_u,
        t_max: t_outer,
        tol: tol_abs,
        max_depth: 26,
        decay: outer_cert,
        parallel: true,
    };
    let f = |u: Complex64| ev.outer(u);
    let cert = match line_integral(&f, &plan) {
        Ok(cert) => cert,
        Err(QuadError::Accuracy {
            value, achieved, ..
        }) => Certified::new(value, achieved),
        Err(e) => return Err(e.into()),
    };
    let inner_worst = *ev.worst_inner.lock().unwrap();
    let tail_rel = cfg.truncation.tail_bound(c_meas);
    let error = cert.error
        + inner_worst * rest_scale * 2.0 * plan.t_max / (2.0 * std::f64::consts::PI)
        + cert.value.norm() * tail_rel;
    Ok(Certified::new(cert.value, error))
}

/// The l-swap prediction term (l = 0 or 1) for the configured moment.
///
/// For l = 1 the shifts of A u B must be pairwise distinct; coincident shifts
/// are handled by [`i1_confluent`].
pub fn compute_i(l: u32, h: u64, k: u64, cfg: &MomentConfig) -> Result<Certified, RecipeError> {
    let mut cfg = cfg.clone();
    cfg.h = h;
    cfg.k = k;
    match l {
        0 => swap_term_value(&cfg, &SwapTermSpec::zero_swap(cfg.a.clone(), cfg.b.clone())),
        1 => {
            let all: Vec<Complex64> = cfg
                .a
                .shifts()
                .iter()
                .chain(cfg.b.shifts())
                .copied()
                .collect();
            if min_pair_gap(&all) < 1e-6 {
                return Err(RecipeError::RepeatedShifts);
            }
            let mut total = ZERO;
            let mut err = 0.0;
            for &alpha in cfg.a.shifts() {
                for &beta in cfg.b.shifts() {
                    let term = SwapTermSpec::one_swap(cfg.a.clone(), cfg.b.clone(), alpha, beta)?;
                    let cert = swap_term_value(&cfg, &term)?;
                    total += cert.value;
                    err += cert.error;
                }
            }
            Ok(Certified::new(total, err))
        }
        other => Err(RecipeError::BadSwapCount(other)),
    }
}

// ---------------------------------------------------------------------------
// confluent one-swap evaluator (circle contours)
// ---------------------------------------------------------------------------

struct ConfluentPrime {
    p: f64,
    lnp: f64,
    ta: Vec<Complex64>,
    tb: Vec<Complex64>,
    /// p^{-1-alpha-beta} for all pairs
    cab: Vec<Complex64>,
    /// p^{-1-alpha} per alpha and p^{-1-beta} per beta
    ca: Vec<Complex64>,
    cb: Vec<Complex64>,
    /// offsets for p | hk
    twist: Option<(usize, usize)>,
}

/// The one-swap term via the circle-contour representation with
/// Dirichlet-series ratio coefficients: valid for any shifts (including
/// repeats), at the cost of two extra trapezoid contours.
pub fn i1_confluent(h: u64, k: u64, cfg: &MomentConfig) -> Result<Certified, RecipeError> {
    let mut cfg = cfg.clone();
    cfg.h = h;
    cfg.k = k;
    let eps = cfg.epsilon;
    let max_shift = cfg.a.max_modulus().max(cfg.b.max_modulus());
    let radius = (eps / 4.0).max(1.6 * max_shift);
    // circles must enclose the shift poles with a safe margin
    for &s in cfg.a.shifts().iter().chain(cfg.b.shifts()) {
        if (s.norm() - radius).abs() < 2e-3 {
            return Err(RecipeError::Contour(format!(
                "circle radius {radius:.4} touches shift {s}"
            )));
        }
        if s.norm() > radius {
            return Err(RecipeError::Contour(format!(
                "circle radius {radius:.4} fails to enclose shift {s}"
            )));
        }
    }
    let mut max_pole: f64 = 0.0;
    for &al in cfg.a.shifts() {
        for &be in cfg.b.shifts() {
            max_pole = max_pole.max((-(al + be)).re);
        }
    }
    let sigma_u = (2.0 * eps).max(2.0 * radius + 0.05).max(max_pole + 0.05);
    if sigma_u > 0.42 - radius {
        return Err(RecipeError::Contour(format!(
            "u-line abscissa {sigma_u:.3} incompatible with circle radius {radius:.3}"
        )));
    }
    let sigma1 = eps;
    let sigma2 = sigma_u - sigma1;
    let v = Window::main_v();
    let tol_rel = cfg.quad_tol.max(1e-7);
    let c5_1 = v.decay_envelope(5, sigma1);
    let c5_2 = v.decay_envelope(5, sigma2);
    let t_inner = DecayCertificate::new(5, c5_1 * 40.0)
        .truncation_for(0.02)
        .clamp(40.0, 400.0);
    let t_outer = DecayCertificate::new(5, c5_2 * 400.0)
        .truncation_for(0.02)
        .clamp(60.0, 400.0);
    let cache_tol = 1e-11;
    let v1 = VerticalLineCache::build(|s| v.mellin(s).unwrap(), sigma1, t_inner + 4.0, cache_tol, true);
    let v2 = VerticalLineCache::build(
        |s| v.mellin(s).unwrap(),
        sigma2,
        t_outer + t_inner + 8.0,
        cache_tol,
        true,
    );
    let n_nodes = cfg.circle_nodes.max(8);
    let nodes: Vec<Complex64> = (0..n_nodes)
        .map(|j| {
            let th = std::f64::consts::TAU * (j as f64 + 0.5) / n_nodes as f64;
            c(radius * th.cos(), radius * th.sin())
        })
        .collect();
    // gamma-factor caches per circle node
    let chi_z: Vec<VerticalLineCache> = nodes
        .iter()
        .map(|&z| {
            VerticalLineCache::build(
                move |s| kernels::chi_factor(c(0.5, 0.0) - z + s).unwrap(),
                sigma1,
                t_inner + 4.0,
                cache_tol,
                false,
            )
        })
        .collect();
    let chi_y: Vec<VerticalLineCache> = nodes
        .iter()
        .map(|&y| {
            VerticalLineCache::build(
                move |s| kernels::chi_factor(c(0.5, 0.0) - y + s).unwrap(),
                sigma2,
                t_outer + t_inner + 8.0,
                cache_tol,
                false,
            )
        })
        .collect();

    let trunc = cfg.truncation;
    let two_q = (2.0 * cfg.q_scale).ceil() as u64;
    if trunc.prime_cutoff < two_q {
        return Err(RecipeError::Truncation(format!(
            "prime cutoff {} below 2Q = {two_q}",
            trunc.prime_cutoff
        )));
    }
    let g = arith::gcd(h, k);
    let (hq, kq) = (h / g, k / g);
    let m_len = trunc.series_cutoff.min(40) + 9;
    let primes: Vec<ConfluentPrime> = arith::primes_up_to(trunc.prime_cutoff)
        .iter()
        .map(|&p| {
            let pf = p as f64;
            let lnp = pf.ln();
            let ta = tau_powers_raw(cfg.a.shifts(), p, m_len - 1);
            let tb = tau_powers_raw(cfg.b.shifts(), p, m_len - 1);
            let mut cab = Vec::new();
            for &al in cfg.a.shifts() {
                for &be in cfg.b.shifts() {
                    cab.push(cpow(lnp, -ONE - al - be));
                }
            }
            let ca = cfg
                .a
                .shifts()
                .iter()
                .map(|&al| cpow(lnp, -ONE - al))
                .collect();
            let cb = cfg
                .b
                .shifts()
                .iter()
                .map(|&be| cpow(lnp, -ONE - be))
                .collect();
            let twist = if h % p == 0 || k % p == 0 {
                Some((ord_p(kq, p) as usize, ord_p(hq, p) as usize))
            } else {
                None
            };
            ConfluentPrime {
                p: pf,
                lnp,
                ta,
                tb,
                cab,
                ca,
                cb,
                twist,
            }
        })
        .collect();
    let n_correction = primes.partition_point(|pd| (pd.p as u64) <= two_q);
    let w_window = Window::outer_w();
    let qdata: Vec<(f64, f64, Vec<usize>)> = cfg
        .modulus_range()
        .filter_map(|q| {
            if arith::gcd(q, h * k) != 1 {
                return None;
            }
            let wq = w_window.eval(q as f64 / cfg.q_scale).unwrap();
            if wq == 0.0 {
                return None;
            }
            let weight = wq * even_primitive_count(q);
            if weight == 0.0 {
                return None;
            }
            let idx: Vec<usize> = arith::factorize(q)
                .iter()
                .map(|&(p, _)| primes.partition_point(|pd| (pd.p as u64) < p))
                .collect();
            Some(((q as f64).ln(), weight, idx))
        })
        .collect();

    let x_ln = cfg.x().ln();
    let h_ln = (h as f64).ln();
    let hk_ratio_ln = ((h / g) as f64 / (k / g) as f64).ln();
    let shifts_a: Vec<Complex64> = cfg.a.shifts().to_vec();
    let shifts_b: Vec<Complex64> = cfg.b.shifts().to_vec();

    // evaluation of the u-line integral for a fixed circle-node pair
    let eval_pair = |jy: usize, jz: usize| -> Certified {
        let y = nodes[jy];
        let z = nodes[jz];
        // u-free zeta factors
        let mut zconst = ONE;
        for &al in &shifts_a {
            zconst *= kernels::zeta(ONE + al + z).unwrap();
        }
        for &be in &shifts_b {
            zconst *= kernels::zeta(ONE + be + y).unwrap();
        }
        // p^{-y}, p^{-z} per prime
        let pows: Vec<(Complex64, Complex64)> = primes
            .iter()
            .map(|pd| ((-y * pd.lnp).exp(), (-z * pd.lnp).exp()))
            .collect();
        let inner_decay = DecayCertificate::new(5, c5_1 * 400.0);
        let inner_plan = LinePlan {
            sigma: sigma1,
            t_max: t_inner,
            tol: tol_rel * 1e-2,
            max_depth: 22,
            decay: inner_decay,
            parallel: false,
        };
        let outer_plan = LinePlan {
            sigma: sigma_u,
            t_max: t_outer,
            tol: tol_rel,
            max_depth: 22,
            decay: DecayCertificate::new(5, c5_2 * 4000.0),
            parallel: false,
        };
        let chi1 = &chi_z[jz];
        let chi2 = &chi_y[jy];
        let integrand = |u: Complex64| -> Complex64 {
            // zeta part
            let mut num = zconst;
            for &al in &shifts_a {
                for &be in &shifts_b {
                    num *= match kernels::zeta(ONE + al + be + u) {
                        Ok(v) => v,
                        Err(_) => return c(f64::NAN, 0.0),
                    };
                }
            }
            let zsum = y + z - u;
            num *= match (kernels::zeta(ONE + zsum), kernels::zeta(ONE - zsum)) {
                (Ok(v1), Ok(v2)) => v1 * v2,
                _ => return c(f64::NAN, 0.0),
            };
            let mut den = ONE;
            for &al in &shifts_a {
                den *= match kernels::zeta(ONE + al + u - y) {
                    Ok(v) => v,
                    Err(_) => return c(f64::NAN, 0.0),
                };
            }
            for &be in &shifts_b {
                den *= match kernels::zeta(ONE + be + u - z) {
                    Ok(v) => v,
                    Err(_) => return c(f64::NAN, 0.0),
                };
            }
            // Euler product
            let mut big = ONE;
            let mut corr = vec![ONE; n_correction];
            for (i, pd) in primes.iter().enumerate() {
                let (zy, zz) = pows[i];
                let z1 = (-u * pd.lnp).exp();
                let py = zy.finv(); // p^{y}
                let pz = zz.finv(); // p^{z}
                let local = local_confluent(pd, z1, zy, zz, py, pz, pd.twist);
                big *= local;
                if i < n_correction {
                    let p0 = p0_factor(pd, z1, zy, zz);
                    let series = local / p0;
                    if series.norm() > 1e-14 {
                        corr[i] = series.finv();
                    }
                }
            }
            // q-sum
            let mut qsum = ZERO;
            for (lnq, weight, idx) in &qdata {
                let mut term = ((y + z - u) * *lnq).exp().scale(*weight);
                for &i in idx {
                    term *= corr[i];
                }
                qsum += term;
            }
            // inner s1 integral
            let inner_integrand = |s1: Complex64| {
                let t1 = s1.im;
                let t2 = u.im - t1;
                v1.eval(t1)
                    * v2.eval(t2)
                    * chi1.eval(t1)
                    * chi2.eval(t2)
                    * (s1 * hk_ratio_ln).exp()
            };
            let inner = match line_integral(&inner_integrand, &inner_plan) {
                Ok(cert) => cert.value,
                Err(QuadError::Accuracy { value, .. }) => value,
                Err(_) => return c(f64::NAN, 0.0),
            };
            (u * x_ln).exp() * (-u * h_ln).exp() * num / den * big * qsum * inner
        };
        match line_integral(&integrand, &outer_plan) {
            Ok(cert) => cert,
            Err(QuadError::Accuracy {
                value, achieved, ..
            }) => Certified::new(value, achieved),
            Err(_) => Certified::new(c(f64::NAN, 0.0), f64::INFINITY),
        }
    };

    let flat: Vec<(usize, usize)> = (0..n_nodes)
        .flat_map(|j| (0..n_nodes).map(move |k2| (j, k2)))
        .collect();
    let certs: Vec<Certified> = par::map_collect(&flat, |&(j, k2)| eval_pair(j, k2));
    let mut full = ZERO;
    let mut half = ZERO;
    let mut err = 0.0;
    for (idx, &(j, k2)) in flat.iter().enumerate() {
        let w = nodes[j] * nodes[k2] / (n_nodes * n_nodes) as f64;
        full += certs[idx].value * w;
        err += certs[idx].error * w.norm();
        if j % 2 == 0 && k2 % 2 == 0 {
            half += certs[idx].value * nodes[j] * nodes[k2] / ((n_nodes / 2) * (n_nodes / 2)) as f64;
        }
    }
    let circle_err = (full - half).norm();
    Ok(Certified::new(full, err + circle_err))
}

/// The finite local factor P0 at one prime, through
/// z1 = p^{-u}, zy = p^{-y}, zz = p^{-z}.
fn p0_factor(pd: &ConfluentPrime, z1: Complex64, zy: Complex64, zz: Complex64) -> Complex64 {
    let pf = pd.p;
    let mut p0: Complex64 = c((1.0 - 1.0 / pf).powi(-2), 0.0);
    p0 *= ONE - (zy * zz / z1) / pf;
    p0 *= ONE - (z1 / (zy * zz)) / pf;
    for &cc in &pd.cab {
        p0 *= ONE - cc * z1;
    }
    for &cc in &pd.ca {
        p0 *= ONE - cc * zz;
    }
    for &cc in &pd.cb {
        p0 *= ONE - cc * zy;
    }
    for &cc in &pd.ca {
        p0 = p0 / (ONE - cc * z1 / zy);
    }
    for &cc in &pd.cb {
        p0 = p0 / (ONE - cc * z1 / zz);
    }
    p0
}

/// Local factor of the confluent Euler product at one prime: P0 times the
/// ratio-coefficient series.
fn local_confluent(
    pd: &ConfluentPrime,
    z1: Complex64,
    zy: Complex64,
    zz: Complex64,
    py: Complex64,
    pz: Complex64,
    twist: Option<(usize, usize)>,
) -> Complex64 {
    let pf = pd.p;
    let p0 = p0_factor(pd, z1, zy, zz);
    // I_{A u {y-u}, {-z}}(p^m) = tauext_a[m] - p^z tauext_a[m-1], where
    // tauext_a[m] = sum_j ta[m-j] (p^{u-y})^j; similarly on the B side
    let ra = zy / z1;
    let rb = zz / z1;
    let len = pd.ta.len();
    let mut ext_a = vec![ZERO; len];
    let mut ext_b = vec![ZERO; len];
    ext_a[0] = ONE;
    ext_b[0] = ONE;
    for m in 1..len {
        ext_a[m] = pd.ta[m] + ra * ext_a[m - 1];
        ext_b[m] = pd.tb[m] + rb * ext_b[m - 1];
    }
    let ia = |m: usize| -> Complex64 {
        if m == 0 {
            ONE
        } else {
            ext_a[m] - pz * ext_a[m - 1]
        }
    };
    let ib = |n: usize| -> Complex64 {
        if n == 0 {
            ONE
        } else {
            ext_b[n] - py * ext_b[n - 1]
        }
    };
    let invp = 1.0 / pf;
    match twist {
        None => {
            // sum_m IA(p^m) IB(p^m) p^{-m(1+u)}
            let w = z1 * invp;
            let mut acc = ZERO;
            let mut wp = ONE;
            for m in 0..len {
                let term = ia(m) * ib(m) * wp;
                acc += term;
                if m >= 2 && term.norm() < 1e-16 * acc.norm().max(1e-300) {
                    break;
                }
                wp *= w;
            }
            p0 * acc
        }
        Some((dm, dn)) => {
            // K^{-s1} H^{-s2} handled outside; here
            // sum_nu IA(p^{nu+dm}) IB(p^{nu+dn}) p^{-nu u} p^{-(2nu+dm+dn)/2}
            let sq = pf.sqrt().recip();
            let mut acc = ZERO;
            let mut w = c(sq.powi((dm + dn) as i32), 0.0);
            let nu_max = len - 1 - dm.max(dn);
            for nu in 0..=nu_max {
                let term = ia(nu + dm) * ib(nu + dn) * w;
                acc += term;
                if nu >= 2 && term.norm() < 1e-16 * acc.norm().max(1e-300) {
                    break;
                }
                w *= z1 * invp;
            }
            p0 * acc
        }
    }
}
