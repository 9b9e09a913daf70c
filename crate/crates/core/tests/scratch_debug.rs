// temporary debug probes; removed before finalizing
use lfmoments::config::default_shifts;
use lfmoments::identities;
use lfmoments::recipe::{self, EulerTruncation};
use lfmoments::shifts::ShiftSet;
use lfmoments::MomentConfig;
use num_complex::Complex64;
use std::time::Instant;

fn c(re: f64, im: f64) -> Complex64 { Complex64::new(re, im) }

#[test]
fn probe_k_g() {
    let trunc = EulerTruncation::new(2000, 30, 0.4).unwrap();
    let t0 = Instant::now();
    let r = identities::k_functional_suite(10, 7, &trunc);
    println!("k-functional: cases={} failures={} worst={:.3e} ({:?})", r.cases, r.failures, r.worst_error, t0.elapsed());
    let t0 = Instant::now();
    let r = identities::gk_identity_suite(5, 7, &trunc);
    println!("gk-identity: cases={} failures={} worst={:.3e} ({:?})", r.cases, r.failures, r.worst_error, t0.elapsed());

    // K/G single config direct check with default truncation
    let a = ShiftSet::from_reals(&[0.01, -0.03]).unwrap();
    let b = ShiftSet::from_reals(&[0.02, -0.04]).unwrap();
    let alpha = c(0.01, 0.0);
    let beta = c(0.02, 0.0);
    let (h, k) = (6u64, 5u64);
    let trunc10k = EulerTruncation::default();
    let w = c(2.0, 0.0) - alpha - beta;
    let g = recipe::g_product(w, alpha, beta, &a, &b, h, k, &trunc10k).unwrap();
    let kk = recipe::k_product(c(0.0,0.0), c(0.0,0.0), w, &a, &b, alpha, beta, h, k, &trunc10k).unwrap();
    let lhs = ((alpha - 0.5) * (h as f64).ln()).exp() * ((beta - 0.5) * (k as f64).ln()).exp() * g.value;
    println!("GK main: lhs={} K={} rel gap={:.3e} tails g={:.2e} k={:.2e}", lhs, kk.value, (lhs - kk.value).norm()/kk.value.norm(), g.error, kk.error);

    // P stability for g_product
    let trunc30k = EulerTruncation::new(30_000, 60, 0.4).unwrap();
    let g2 = recipe::g_product(w, alpha, beta, &a, &b, h, k, &trunc30k).unwrap();
    println!("g P=1e4 {} vs P=3e4 {}: move={:.3e} tail_cert={:.3e}", g.value, g2.value, (g.value - g2.value).norm(), g.error);
}

#[test]
fn probe_confluent() {
    let (a, b) = default_shifts(40.0, 1, 1);
    let mut cfg = MomentConfig::new(40.0, 1.2, a, b, 1, 1).unwrap();
    cfg.truncation = EulerTruncation::new(1500, 30, 0.4).unwrap();
    cfg.quad_tol = 1e-5;
    cfg.circle_nodes = 24;
    let t0 = Instant::now();
    let i1 = recipe::compute_i(1, 1, 1, &cfg).unwrap();
    println!("compute_i(1) = {} err {:.3e} ({:?})", i1.value, i1.error, t0.elapsed());
    let t0 = Instant::now();
    match recipe::i1_confluent(1, 1, &cfg) {
        Ok(conf) => println!("i1_confluent = {} err {:.3e} ({:?}) gap={:.3e}", conf.value, conf.error, t0.elapsed(), (conf.value - i1.value).norm()),
        Err(e) => println!("i1_confluent error: {e}"),
    }
    // all-zero shifts: finite value
    let a0 = ShiftSet::from_reals(&[0.0]).unwrap();
    let b0 = ShiftSet::from_reals(&[0.0]).unwrap();
    let mut cfg0 = MomentConfig::new(40.0, 1.2, a0, b0, 1, 1).unwrap();
    cfg0.truncation = EulerTruncation::new(1500, 30, 0.4).unwrap();
    cfg0.quad_tol = 1e-5;
    let t0 = Instant::now();
    match recipe::i1_confluent(1, 1, &cfg0) {
        Ok(conf) => println!("i1_confluent(A=B={{0}}) = {} err {:.3e} ({:?})", conf.value, conf.error, t0.elapsed()),
        Err(e) => println!("i1_confluent zero error: {e}"),
    }
}
