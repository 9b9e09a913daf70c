//! Exact finite computation of the twisted moment sum and its
//! large-divisor / diagonal / off-diagonal split, by two independent paths:
//! brute-force character enumeration and the divisor-sum collapse of the
//! even-primitive pair sum.

use crate::arith;
use crate::characters::{character_table, CharacterTable};
use crate::config::MomentConfig;
use crate::kernels::Window;
use crate::par::{self, CompensatedSum};
use crate::quadrature::Certified;
use crate::recipe::{self, RecipeError};
use num_complex::Complex64;
use std::collections::HashMap;
use std::time::Instant;
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("character enumeration too large (work {0} exceeds {1}); use the divisor path")]
    ScaleGuard(u64, u64),
    #[error("complementary-modulus budget exceeded after {0} character tables")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Recipe(#[from] RecipeError),
}

/// Weight table w[m] = tau_E(m) V(m/X) / sqrt(m) for 1 <= m < X.
fn weight_table(shifts: &crate::shifts::ShiftSet, x: f64) -> Vec<Complex64> {
    let v = Window::main_v();
    let limit = if x <= 1.0 { 0 } else { (x.ceil() as u64).max(1) };
    let tau = shifts.tau_table(limit);
    let mut w = vec![ZERO; limit as usize + 1];
    for m in 1..=limit as usize {
        let vx = v.eval(m as f64 / x).unwrap();
        if vx != 0.0 {
            w[m] = tau[m] * (vx / (m as f64).sqrt());
        }
    }
    w
}

/// Brute-force moment sum by direct enumeration of the even primitive
/// characters of every modulus in the window support.
pub fn compute_s_characters(cfg: &MomentConfig) -> Result<Complex64, MomentError> {
    let work: u64 = cfg.modulus_range().map(arith::phi).sum();
    const GUARD: u64 = 10_000_000;
    if work > GUARD {
        return Err(MomentError::ScaleGuard(work, GUARD));
    }
    let x = cfg.x();
    let wa = weight_table(&cfg.a, x);
    let wb = weight_table(&cfg.b, x);
    let w_win = Window::outer_w();
    let moduli: Vec<u64> = cfg
        .modulus_range()
        .filter(|&q| arith::gcd(q, cfg.h * cfg.k) == 1)
        .collect();
    let partials = par::map_collect(&moduli, |&q| {
        let wq = w_win.eval(q as f64 / cfg.q_scale).unwrap();
        if wq == 0.0 {
            return ZERO;
        }
        let table = character_table(q).expect("q >= 1");
        let mut acc = CompensatedSum::new();
        for chi in &table.chars {
            if !(chi.even && chi.is_primitive()) {
                continue;
            }
            let vh = chi.eval(&table.group, cfg.h as i64);
            let vk = chi.eval(&table.group, cfg.k as i64).conj();
            if vh == ZERO || vk == ZERO {
                continue;
            }
            let mut pa = CompensatedSum::new();
            let mut pb = CompensatedSum::new();
            for m in 1..wa.len().min(wb.len()) {
                if arith::gcd(m as u64, q) != 1 {
                    continue;
                }
                let cm = chi.eval(&table.group, m as i64);
                if wa[m] != ZERO {
                    pa.add(wa[m] * cm);
                }
                if wb[m] != ZERO {
                    pb.add(wb[m] * cm.conj());
                }
            }
            acc.add(vh * vk * pa.value() * pb.value());
        }
        acc.value() * wq
    });
    Ok(par::pairwise_sum(&partials))
}

/// One (q, c, d) traversal of the divisor-collapsed sum. The sink receives
/// fully scaled subtotal contributions classified by the cofactor c and the
/// diagonal condition m h = n k.
fn divisor_traversal<F>(cfg: &MomentConfig, mut sink: F)
where
    F: FnMut(u64, bool, Complex64),
{
    let x = cfg.x();
    let wa = weight_table(&cfg.a, x);
    let wb = weight_table(&cfg.b, x);
    let w_win = Window::outer_w();
    let hk = cfg.h * cfg.k;
    let moduli: Vec<u64> = cfg
        .modulus_range()
        .filter(|&q| arith::gcd(q, hk) == 1)
        .collect();
    // per-q partials computed in parallel, consumed in ascending q order
    type Partial = Vec<(u64, Complex64, Complex64)>; // (c, diag, offdiag)
    let partials: Vec<Partial> = par::map_collect(&moduli, |&q| {
        let wq = w_win.eval(q as f64 / cfg.q_scale).unwrap();
        let mut out: Partial = Vec::new();
        if wq == 0.0 {
            return out;
        }
        let mmax = wa.len() - 1;
        let nmax = wb.len() - 1;
        if mmax == 0 || nmax == 0 {
            return out;
        }
        let mut coprime = vec![false; mmax.max(nmax) + 1];
        for (i, flag) in coprime.iter_mut().enumerate().skip(1) {
            *flag = arith::gcd(i as u64, q) == 1;
        }
        for d in arith::divisors(q) {
            let cfac = q / d;
            let mu = arith::mobius(cfac);
            if mu == 0 {
                continue;
            }
            let scale = 0.5 * wq * arith::phi(d) as f64 * mu as f64;
            let kinv = arith::mod_inverse(cfg.k % d, d).expect("gcd(k, d) = 1");
            let hmod = cfg.h % d;
            let mut diag = CompensatedSum::new();
            let mut off = CompensatedSum::new();
            for m in 1..=mmax {
                if !coprime[m] || wa[m] == ZERO {
                    continue;
                }
                let mh = m as u64 * cfg.h;
                let r_minus = (m as u64 % d) * hmod % d * kinv % d; // n with d | mh - nk
                let r_plus = (d - r_minus) % d; // n with d | mh + nk
                for (r, minus_branch) in [(r_minus, true), (r_plus, false)] {
                    let start = if r == 0 { d } else { r } as usize;
                    let mut n = start;
                    while n <= nmax {
                        if coprime[n] && wb[n] != ZERO {
                            let term = wa[m] * wb[n];
                            if n as u64 * cfg.k == mh {
                                diag.add(term);
                            } else {
                                off.add(term);
                            }
                        }
                        n += d as usize;
                    }
                    let _ = minus_branch;
                }
            }
            out.push((cfac, diag.value() * scale, off.value() * scale));
        }
        out
    });
    for partial in partials {
        for (cfac, diag, off) in partial {
            sink(cfac, true, diag);
            sink(cfac, false, off);
        }
    }
}

/// The moment sum via the divisor-sum form of the character orthogonality.
pub fn compute_s_divisor(cfg: &MomentConfig) -> Complex64 {
    let mut parts: Vec<Complex64> = Vec::new();
    divisor_traversal(cfg, |_c, _diag, v| parts.push(v));
    par::pairwise_sum(&parts)
}

/// The split S = L + D + U: c > C, (c <= C, diagonal), (c <= C, rest).
pub fn split_ldu(cfg: &MomentConfig) -> (Complex64, Complex64, Complex64) {
    let c_split = cfg.split_c;
    let mut l_parts = Vec::new();
    let mut d_parts = Vec::new();
    let mut u_parts = Vec::new();
    divisor_traversal(cfg, |cfac, diag, v| {
        if cfac as f64 > c_split {
            l_parts.push(v);
        } else if diag {
            d_parts.push(v);
        } else {
            u_parts.push(v);
        }
    });
    (
        par::pairwise_sum(&l_parts),
        par::pairwise_sum(&d_parts),
        par::pairwise_sum(&u_parts),
    )
}

/// Report of the complementary-modulus recomputation of the off-diagonal sum.
#[derive(Clone, Debug)]
pub struct ComplementaryReport {
    pub u_direct: Complex64,
    pub u_complementary: Complex64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub tables_built: usize,
    pub complete: bool,
}

/// Recompute the off-diagonal part by switching each divisor d | mh +- nk to
/// the complementary modulus and detecting the divisibility with full
/// character sums mod e*a*l, exactly as the off-diagonal analysis rewrites it.
pub fn complementary_modulus_check(
    cfg: &MomentConfig,
    sample_budget: usize,
) -> Result<ComplementaryReport, MomentError> {
    let x = cfg.x();
    let wa = weight_table(&cfg.a, x);
    let wb = weight_table(&cfg.b, x);
    let w_win = Window::outer_w();
    let (_, _, u_direct) = split_ldu(cfg);

    let mut tables: HashMap<u64, CharacterTable> = HashMap::new();
    let mut tables_built = 0usize;
    let mut complete = true;
    let mut acc = CompensatedSum::new();
    let mmax = wa.len().saturating_sub(1);
    let nmax = wb.len().saturating_sub(1);
    let hk = cfg.h * cfg.k;
    'outer: for cfac in 1..=(cfg.split_c as u64) {
        if arith::gcd(cfac, hk) != 1 || arith::mobius(cfac) == 0 {
            continue;
        }
        let mu_c = arith::mobius(cfac) as f64;
        for m in 1..=mmax {
            if wa[m] == ZERO || arith::gcd(m as u64, cfac) != 1 {
                continue;
            }
            for n in 1..=nmax {
                if wb[n] == ZERO || arith::gcd(n as u64, cfac) != 1 {
                    continue;
                }
                let mh = m as u64 * cfg.h;
                let nk = n as u64 * cfg.k;
                if mh == nk {
                    continue;
                }
                let g = arith::gcd(mh, nk);
                let (mh_g, nk_g) = (mh / g, nk / g);
                // two copies: (sign = +1) |mh + nk| with psi-bar at -nk/g,
                //             (sign = -1) |mh - nk| with psi-bar at +nk/g
                for sign in [1i64, -1i64] {
                    let t_abs = if sign > 0 {
                        mh + nk
                    } else {
                        mh.abs_diff(nk)
                    };
                    // l range fixed by the support of W
                    let ratio = cfac as f64 * t_abs as f64 / (g as f64 * cfg.q_scale);
                    let l_lo = (ratio / 2.0).floor().max(1.0) as u64;
                    let l_hi = ratio.ceil() as u64;
                    for l in l_lo..=l_hi {
                        let wval =
                            w_win.eval(ratio / l as f64).unwrap();
                        if wval == 0.0 {
                            continue;
                        }
                        // e-sum: restricted to squarefree e coprime to g;
                        // the character sum vanishes unless e*a*l | (mh +- nk)/g
                        let t_g = t_abs / g;
                        for e in arith::divisors(t_g) {
                            if arith::gcd(e, g) != 1 || arith::mobius(e) == 0 || e * l > t_g {
                                continue;
                            }
                            let mu_e = arith::mobius(e) as f64;
                            for a in arith::divisors(g) {
                                if arith::mobius(a) == 0 {
                                    continue;
                                }
                                let modulus = e * a * l;
                                if arith::gcd(modulus, mh_g * nk_g) != 1 {
                                    continue;
                                }
                                let mu_a = arith::mobius(a) as f64;
                                let table = match tables.get(&modulus) {
                                    Some(t) => t,
                                    None => {
                                        tables_built += 1;
                                        if tables_built > sample_budget {
                                            complete = false;
                                            break 'outer;
                                        }
                                        tables
                                            .entry(modulus)
                                            .or_insert_with(|| character_table(modulus).unwrap())
                                    }
                                };
                                let phi_m = table.group.order as f64;
                                let mut char_sum = ZERO;
                                for chi in &table.chars {
                                    let vm = chi.eval(&table.group, mh_g as i64);
                                    let vn =
                                        chi.eval(&table.group, -sign * nk_g as i64).conj();
                                    char_sum += vm * vn;
                                }
                                let weight = mu_c * mu_e / e as f64 * mu_a
                                    * (t_abs as f64 / (g as f64 * l as f64))
                                    * wval
                                    / phi_m;
                                acc.add(
                                    wa[m] * wb[n] * char_sum * (0.5 * weight),
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    let u_comp = acc.value();
    let abs_gap = (u_comp - u_direct).norm();
    Ok(ComplementaryReport {
        u_direct,
        u_complementary: u_comp,
        abs_gap,
        rel_gap: abs_gap / u_direct.norm().max(1e-300),
        tables_built,
        complete,
    })
}

/// Full record of one moment computation: the exact sum, its split, and the
/// prediction terms with certificates and timings.
#[derive(Clone, Debug)]
pub struct MomentReport {
    pub q_scale: f64,
    pub eta: f64,
    pub h: u64,
    pub k: u64,
    pub s: Complex64,
    pub l_part: Complex64,
    pub d_part: Complex64,
    pub u_part: Complex64,
    pub i0: Certified,
    pub i1: Certified,
    pub residual: f64,
    pub rel_residual: f64,
    pub secs_s: f64,
    pub secs_i0: f64,
    pub secs_i1: f64,
}

/// Run the full pipeline for one configuration: divisor-path moment sum and
/// split, zero- and one-swap predictions (falling back to the confluent
/// contour evaluator when shifts collide), residuals and timings.
pub fn run_moment(cfg: &MomentConfig) -> Result<MomentReport, MomentError> {
    let t0 = Instant::now();
    let (l_part, d_part, u_part) = split_ldu(cfg);
    let s = l_part + d_part + u_part;
    let secs_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let i0 = recipe::compute_i(0, cfg.h, cfg.k, cfg)?;
    let secs_i0 = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let i1 = match recipe::compute_i(1, cfg.h, cfg.k, cfg) {
        Ok(cert) => cert,
        Err(RecipeError::RepeatedShifts) => recipe::i1_confluent(cfg.h, cfg.k, cfg)?,
        Err(e) => return Err(e.into()),
    };
    let secs_i1 = t2.elapsed().as_secs_f64();

    let predicted = i0.value + i1.value;
    let residual = (s - predicted).norm();
    Ok(MomentReport {
        q_scale: cfg.q_scale,
        eta: cfg.eta,
        h: cfg.h,
        k: cfg.k,
        s,
        l_part,
        d_part,
        u_part,
        i0,
        i1,
        residual,
        rel_residual: residual / predicted.norm().max(1e-300),
        secs_s,
        secs_i0,
        secs_i1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_shifts;
    use crate::shifts::ShiftSet;

    fn small_cfg(q: f64, eta: f64, h: u64, k: u64) -> MomentConfig {
        let a = ShiftSet::from_reals(&[0.0]).unwrap();
        let b = ShiftSet::from_reals(&[0.0]).unwrap();
        MomentConfig::new(q, eta, a, b, h, k).unwrap()
    }

    #[test]
    fn tiny_x_gives_zero() {
        // eta near 1 at tiny Q keeps X < 1, so every V(m/X) weight vanishes
        let a = ShiftSet::from_reals(&[0.0]).unwrap();
        let b = ShiftSet::from_reals(&[0.0]).unwrap();
        let cfg = MomentConfig::new(0.9, 1.01, a, b, 1, 1).unwrap();
        assert_eq!(compute_s_characters(&cfg).unwrap(), ZERO);
        assert_eq!(compute_s_divisor(&cfg), ZERO);
    }

    #[test]
    fn character_and_divisor_paths_agree() {
        let cfg = small_cfg(20.0, 1.2, 1, 1);
        let s_char = compute_s_characters(&cfg).unwrap();
        let s_div = compute_s_divisor(&cfg);
        assert!(
            (s_char - s_div).norm() <= 1e-10 * s_div.norm().max(1.0),
            "char {s_char} div {s_div}"
        );
    }

    #[test]
    fn swap_symmetry_of_s() {
        // S(h, k; A, B) = S(k, h; B, A) for real shifts
        let (a, b) = default_shifts(25.0, 1, 1);
        let cfg = MomentConfig::new(25.0, 1.3, a.clone(), b.clone(), 2, 1).unwrap();
        let mut swapped = MomentConfig::new(25.0, 1.3, b, a, 1, 2).unwrap();
        swapped.split_c = cfg.split_c;
        let s1 = compute_s_divisor(&cfg);
        let s2 = compute_s_divisor(&swapped);
        assert!(
            (s1 - s2).norm() <= 1e-10 * s1.norm().max(1.0),
            "s1={s1} s2={s2}"
        );
    }

    #[test]
    fn split_sums_to_total() {
        for c_split in [1.0, 2.0, 5.0] {
            let cfg = small_cfg(30.0, 1.2, 2, 1).with_split(c_split).unwrap();
            let (l, d, u) = split_ldu(&cfg);
            let s = compute_s_divisor(&cfg);
            assert!(
                (l + d + u - s).norm() <= 1e-10 * s.norm().max(1.0),
                "C={c_split}"
            );
        }
    }

    #[test]
    fn large_split_empties_l() {
        let cfg = small_cfg(20.0, 1.2, 1, 1).with_split(64.0).unwrap();
        let (l, _, _) = split_ldu(&cfg);
        assert_eq!(l, ZERO);
    }

    #[test]
    fn twist_sharing_all_moduli_vanishes() {
        let a = ShiftSet::from_reals(&[0.0]).unwrap();
        let b = ShiftSet::from_reals(&[0.0]).unwrap();
        // every q in (6, 12) shares a prime with 462 = 2*3*7*11
        let cfg = MomentConfig::new(6.0, 1.4, a, b, 462, 1).unwrap();
        assert_eq!(compute_s_divisor(&cfg), ZERO);
    }

    #[test]
    fn complementary_modulus_matches_direct() {
        let cfg = small_cfg(10.0, 1.2, 1, 1);
        let rep = complementary_modulus_check(&cfg, 100_000).unwrap();
        assert!(rep.complete);
        assert!(
            rep.rel_gap <= 1e-9,
            "gap {} direct {} comp {}",
            rep.rel_gap,
            rep.u_direct,
            rep.u_complementary
        );
    }
}
