//! Run configuration shared by the direct-moment and recipe paths.

use crate::recipe::EulerTruncation;
use crate::shifts::ShiftSet;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("eta = {0} outside the admissible range (1, 2)")]
    EtaOutOfRange(f64),
    #[error("twists h, k must be positive")]
    ZeroTwist,
    #[error("split parameter C = {0} must be >= 1")]
    BadSplit(f64),
    #[error("scale Q = {0} must be positive")]
    BadScale(f64),
    #[error("line abscissa epsilon = {0} outside [0.01, 0.2]")]
    BadEpsilon(f64),
}

/// Parameters of one moment computation: scale, polynomial length exponent,
/// shift sets, twists, split point, and numerical knobs.
#[derive(Clone, Debug)]
pub struct MomentConfig {
    pub q_scale: f64,
    pub eta: f64,
    pub a: ShiftSet,
    pub b: ShiftSet,
    pub h: u64,
    pub k: u64,
    /// Split point C for the L/D/U decomposition.
    pub split_c: f64,
    pub truncation: EulerTruncation,
    /// Relative tolerance target for the contour integrals.
    pub quad_tol: f64,
    /// Abscissa of the "small" vertical lines.
    pub epsilon: f64,
    /// Trapezoid nodes per circle contour in the confluent evaluator.
    pub circle_nodes: usize,
}

impl MomentConfig {
    pub fn new(
        q_scale: f64,
        eta: f64,
        a: ShiftSet,
        b: ShiftSet,
        h: u64,
        k: u64,
    ) -> Result<Self, ConfigError> {
        if !(q_scale > 0.0) {
            return Err(ConfigError::BadScale(q_scale));
        }
        if !(1.0 < eta && eta < 2.0) {
            return Err(ConfigError::EtaOutOfRange(eta));
        }
        if h == 0 || k == 0 {
            return Err(ConfigError::ZeroTwist);
        }
        let split_c = default_split(q_scale, eta);
        Ok(MomentConfig {
            q_scale,
            eta,
            a,
            b,
            h,
            k,
            split_c,
            truncation: EulerTruncation::default(),
            quad_tol: 1e-6,
            epsilon: 0.05,
            circle_nodes: 24,
        })
    }

    pub fn with_split(mut self, c: f64) -> Result<Self, ConfigError> {
        if !(c >= 1.0) {
            return Err(ConfigError::BadSplit(c));
        }
        self.split_c = c;
        Ok(self)
    }

    pub fn with_truncation(mut self, t: EulerTruncation) -> Self {
        self.truncation = t;
        self
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    /// Dirichlet polynomial length X = Q^eta.
    pub fn x(&self) -> f64 {
        self.q_scale.powf(self.eta)
    }

    /// Moduli q in the support of W(q/Q), ascending.
    pub fn modulus_range(&self) -> std::ops::RangeInclusive<u64> {
        let lo = self.q_scale.floor() as u64 + 1;
        let hi = (2.0 * self.q_scale).ceil() as u64 - 1;
        lo..=hi.max(lo)
    }
}

/// The split point used by the asymptotic analysis, C = Q^{1 - eta/2},
/// floored at 1.
pub fn default_split(q_scale: f64, eta: f64) -> f64 {
    q_scale.powf(1.0 - eta / 2.0).max(1.0).round()
}

/// Default shift layout: moduli 2^nu * C0 / log Q on alternating real
/// directions, the A-set taking the first `na` slots and the B-set the next
/// `nb`. Keeps all pairwise sums and differences away from zero.
pub fn default_shifts(q_scale: f64, na: usize, nb: usize) -> (ShiftSet, ShiftSet) {
    let c0 = 0.05;
    let lq = q_scale.ln().max(1.0);
    let mut sign = 1.0;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for nu in 1..=na {
        a.push(Complex64::new(
            sign * (2.0f64).powi(nu as i32) * c0 / lq,
            0.0,
        ));
        sign = -sign;
    }
    for nu in 1..=nb {
        b.push(Complex64::new(
            sign * (2.0f64).powi((na + nu) as i32) * c0 / lq,
            0.0,
        ));
        sign = -sign;
    }
    (
        ShiftSet::new(a).expect("default shifts are small"),
        ShiftSet::new(b).expect("default shifts are small"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_eta() {
        let (a, b) = default_shifts(100.0, 1, 1);
        assert!(matches!(
            MomentConfig::new(100.0, 2.5, a.clone(), b.clone(), 1, 1),
            Err(ConfigError::EtaOutOfRange(_))
        ));
        assert!(MomentConfig::new(100.0, 1.2, a, b, 1, 1).is_ok());
    }

    #[test]
    fn default_shift_layout() {
        let (a, b) = default_shifts(100.0, 1, 1);
        let lq = 100.0f64.ln();
        assert!((a.shifts()[0].re - 0.1 / lq).abs() < 1e-15);
        assert!((b.shifts()[0].re + 0.2 / lq).abs() < 1e-15);
        let (a2, b2) = default_shifts(100.0, 2, 2);
        assert_eq!(a2.len(), 2);
        assert_eq!(b2.len(), 2);
        // all distinct
        let mut all: Vec<f64> = a2
            .shifts()
            .iter()
            .chain(b2.shifts())
            .map(|z| z.re)
            .collect();
        all.sort_by(|x, y| x.partial_cmp(y).unwrap());
        all.dedup();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn modulus_range_matches_window_support() {
        let (a, b) = default_shifts(50.0, 1, 1);
        let cfg = MomentConfig::new(50.0, 1.3, a, b, 1, 1).unwrap();
        let r = cfg.modulus_range();
        assert_eq!(*r.start(), 51);
        assert_eq!(*r.end(), 99);
    }
}
