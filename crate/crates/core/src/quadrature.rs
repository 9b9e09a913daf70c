//! Adaptive contour integration along vertical lines.
//!
//! Integrals (1/2 pi i) int_{sigma - iT}^{sigma + iT} f(s) ds are computed by
//! adaptive bisection with Gauss-Legendre panels; the truncation height T
//! comes from a caller-supplied polynomial decay certificate
//! |f(sigma + it)| <= C / |t|^n for |t| >= T, whose tail is added to the
//! reported error estimate.

use crate::kernels::{GL15_W, GL15_X};
use crate::par;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("panel depth exhausted: achieved {achieved:.3e}, requested {requested:.3e}")]
    Accuracy {
        value: Complex64,
        achieved: f64,
        requested: f64,
    },
    #[error("invalid plan: {0}")]
    BadPlan(String),
}

/// A value together with an absolute error certificate.
#[derive(Clone, Copy, Debug)]
pub struct Certified {
    pub value: Complex64,
    pub error: f64,
}

impl Certified {
    pub fn new(value: Complex64, error: f64) -> Self {
        Certified { value, error }
    }
}

/// Certificate |f(sigma + it)| <= c / |t|^n for |t| beyond the truncation.
#[derive(Clone, Copy, Debug)]
pub struct DecayCertificate {
    pub n: u32,
    pub c: f64,
}

impl DecayCertificate {
    pub fn new(n: u32, c: f64) -> Self {
        assert!(n >= 2, "need decay exponent n >= 2 for a finite tail");
        DecayCertificate { n, c }
    }

    /// Tail bound for (1/2 pi) * 2 * int_T^inf C t^{-n} dt.
    pub fn tail(&self, t: f64) -> f64 {
        2.0 * self.c / ((self.n as f64 - 1.0) * t.powi(self.n as i32 - 1) * 2.0 * PI)
    }

    /// Smallest truncation with tail <= budget.
    pub fn truncation_for(&self, budget: f64) -> f64 {
        let nm1 = self.n as f64 - 1.0;
        (2.0 * self.c / (nm1 * 2.0 * PI * budget)).powf(1.0 / nm1)
    }
}

/// Plan for one vertical-line integral.
#[derive(Clone, Copy, Debug)]
pub struct LinePlan {
    /// Real part of the line.
    pub sigma: f64,
    /// Truncation height.
    pub t_max: f64,
    /// Absolute tolerance for the panel recursion.
    pub tol: f64,
    /// Maximum bisection depth per top-level panel.
    pub max_depth: u32,
    /// Decay certificate behind the truncation.
    pub decay: DecayCertificate,
    /// Evaluate top-level panels on the thread pool.
    pub parallel: bool,
}

impl LinePlan {
    /// Choose T so the certified tail is at most 10% of `tol`.
    pub fn from_decay(sigma: f64, tol: f64, decay: DecayCertificate) -> LinePlan {
        let t = decay.truncation_for(0.1 * tol).max(8.0);
        LinePlan {
            sigma,
            t_max: t,
            tol,
            max_depth: 28,
            decay,
            parallel: false,
        }
    }

    pub fn with_parallel(mut self, on: bool) -> LinePlan {
        self.parallel = on;
        self
    }

    pub fn with_t_max(mut self, t: f64) -> LinePlan {
        self.t_max = t;
        self
    }

    fn validate(&self) -> Result<(), QuadError> {
        if !(self.t_max > 0.0) {
            return Err(QuadError::BadPlan("t_max must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(QuadError::BadPlan("tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn gl15_line<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    sigma: f64,
    a: f64,
    b: f64,
) -> Complex64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..15 {
        acc += GL15_W[i] * f(Complex64::new(sigma, mid + half * GL15_X[i]));
    }
    acc * half
}

struct PanelOutcome {
    value: Complex64,
    estimate: f64,
    converged: bool,
}

fn adapt_panel<F: Fn(Complex64) -> Complex64 + ?Sized>(
    f: &F,
    sigma: f64,
    a: f64,
    b: f64,
    whole: Complex64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> PanelOutcome {
    let mid = 0.5 * (a + b);
    let left = gl15_line(f, sigma, a, mid);
    let right = gl15_line(f, sigma, mid, b);
    let err = (left + right - whole).norm();
    if err <= tol.max(floor) {
        return PanelOutcome {
            value: left + right,
            estimate: err,
            converged: true,
        };
    }
    if depth == 0 {
        return PanelOutcome {
            value: left + right,
            estimate: err,
            converged: false,
        };
    }
    let l = adapt_panel(f, sigma, a, mid, left, 0.5 * tol, floor, depth - 1);
    let r = adapt_panel(f, sigma, mid, b, right, 0.5 * tol, floor, depth - 1);
    PanelOutcome {
        value: l.value + r.value,
        estimate: l.estimate + r.estimate,
        converged: l.converged && r.converged,
    }
}

/// Top-level panel boundaries: unit-ish spacing near 0 growing geometrically
/// outward, symmetric about 0. Deterministic for a given T.
fn panel_grid(t_max: f64) -> Vec<f64> {
    let mut pos = vec![0.0f64];
    let mut x = 0.0;
    let mut step = 1.0f64.min(t_max / 4.0).max(t_max / 4096.0);
    while x < t_max {
        x = (x + step).min(t_max);
        pos.push(x);
        step *= 1.5;
    }
    let mut grid: Vec<f64> = pos.iter().rev().map(|v| -v).collect();
    grid.pop();
    grid.extend(pos);
    grid
}

/// (1/2 pi i) int f(s) ds along the plan's vertical line, with the certified
/// tail added to the error estimate.
pub fn line_integral<F: Fn(Complex64) -> Complex64 + Sync + ?Sized>(
    f: &F,
    plan: &LinePlan,
) -> Result<Certified, QuadError> {
    plan.validate()?;
    let grid = panel_grid(plan.t_max);
    let n_panels = grid.len() - 1;
    let per_panel_tol = plan.tol / n_panels as f64;
    // noise floor: panel estimates below the f64 resolution of the coarse
    // mass are accepted rather than bisected without end
    let coarse_mass: f64 = (0..n_panels)
        .map(|i| gl15_line(f, plan.sigma, grid[i], grid[i + 1]).norm())
        .sum();
    let floor = 4e-16 * coarse_mass.max(per_panel_tol * 1e-3);

    let run_panel = |i: usize| {
        let (a, b) = (grid[i], grid[i + 1]);
        let whole = gl15_line(f, plan.sigma, a, b);
        adapt_panel(f, plan.sigma, a, b, whole, per_panel_tol, floor, plan.max_depth)
    };

    let outcomes: Vec<PanelOutcome> = if plan.parallel {
        par::map_range(n_panels, run_panel)
    } else {
        (0..n_panels).map(run_panel).collect()
    };

    let values: Vec<Complex64> = outcomes.iter().map(|o| o.value).collect();
    let total = par::pairwise_sum(&values);
    let estimate: f64 = outcomes.iter().map(|o| o.estimate).sum();
    let converged = outcomes.iter().all(|o| o.converged);
    let tail = plan.decay.tail(plan.t_max);

    // ds = i dt, and the normalization is 1/(2 pi i): net factor 1/(2 pi)
    let value = total / (2.0 * PI);
    let error = estimate / (2.0 * PI) + tail;
    if !converged {
        return Err(QuadError::Accuracy {
            value,
            achieved: error,
            requested: plan.tol,
        });
    }
    Ok(Certified::new(value, error))
}

/// Iterated vertical-line integral in d variables (d = 1, 2, 3): plans[0] is
/// the outermost line. Inner error estimates inflate the outer certificate.
pub fn nested_line_integral<F>(f: &F, plans: &[LinePlan]) -> Result<Certified, QuadError>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    assert!(
        (1..=3).contains(&plans.len()),
        "supported dimensions: 1..=3"
    );
    nested_inner(f, plans, &mut Vec::new())
}

fn nested_inner<F>(
    f: &F,
    plans: &[LinePlan],
    prefix: &mut Vec<Complex64>,
) -> Result<Certified, QuadError>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    use std::sync::Mutex;
    let plan = plans[0];
    if plans.len() == 1 {
        let g = |s: Complex64| {
            let mut args = prefix.clone();
            args.push(s);
            f(&args)
        };
        return line_integral(&g, &plan);
    }
    let worst_inner = Mutex::new(0.0f64);
    let prefix_snapshot = prefix.clone();
    let g = |s: Complex64| {
        let mut args = prefix_snapshot.clone();
        args.push(s);
        match nested_inner(f, &plans[1..], &mut args) {
            Ok(cert) => {
                let mut w = worst_inner.lock().unwrap();
                if cert.error > *w {
                    *w = cert.error;
                }
                cert.value
            }
            Err(QuadError::Accuracy { value, achieved, .. }) => {
                let mut w = worst_inner.lock().unwrap();
                if achieved > *w {
                    *w = achieved;
                }
                value
            }
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    let outer = line_integral(&g, &plan)?;
    let inner_err = *worst_inner.lock().unwrap();
    // the inner estimate integrates along the outer line with measure dt/2pi
    let inflated = outer.error + inner_err * 2.0 * plan.t_max / (2.0 * PI);
    Ok(Certified::new(outer.value, inflated))
}
