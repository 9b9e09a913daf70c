//! Exact Dirichlet character arithmetic mod q.
//!
//! The unit group (Z/qZ)* is decomposed into cyclic factors via CRT over the
//! prime powers of q (with the two-generator structure at 2^k, k >= 3).
//! Character values are tracked as exact rational exponents of roots of unity
//! and only converted to complex at use sites, so the orthogonality and
//! pair-sum identities hold to rounding error.

use crate::arith;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CharError {
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("arguments must be coprime to the modulus (gcd({0}, {1}) > 1)")]
    NotCoprime(u64, u64),
}

/// Generators of (Z/qZ)* with their orders; total order is phi(q).
#[derive(Clone, Debug)]
pub struct UnitGroupStructure {
    pub modulus: u64,
    /// (residue, order) per cyclic factor.
    pub generators: Vec<(u64, u64)>,
    pub order: u64,
    /// residue coprime to q -> exponent vector on the generators
    dlog: HashMap<u64, Vec<u64>>,
}

fn primitive_root_mod_prime_power(p: u64, a: u32) -> u64 {
    // find a primitive root mod p, lift to p^a
    let order = p - 1;
    let factors = arith::factorize(order);
    let mut g = 2u64;
    loop {
        if arith::gcd(g, p) == 1
            && factors
                .iter()
                .all(|&(f, _)| arith::pow_mod(g, order / f, p) != 1)
        {
            break;
        }
        g += 1;
    }
    if a == 1 {
        return g;
    }
    // g generates mod p^a unless g^{p-1} = 1 mod p^2, in which case g + p does
    let p2 = p * p;
    if arith::pow_mod(g, p - 1, p2) == 1 {
        g += p;
    }
    g % p.pow(a)
}

/// CRT lift: residue equal to `r` mod pk and 1 mod q/pk.
fn crt_lift(r: u64, pk: u64, q: u64) -> u64 {
    let rest = q / pk;
    if rest == 1 {
        return r % q;
    }
    // x = r mod pk, x = 1 mod rest
    let inv = arith::mod_inverse(rest % pk, pk).expect("coprime CRT parts");
    let t = (r % pk + pk - 1 % pk) % pk;
    let x = (1 + rest as u128 * (t as u128 * inv as u128 % pk as u128)) % q as u128;
    x as u64
}

/// Decompose (Z/qZ)* into cyclic generators.
pub fn unit_group(q: u64) -> Result<UnitGroupStructure, CharError> {
    if q == 0 {
        return Err(CharError::ZeroModulus);
    }
    let mut generators: Vec<(u64, u64)> = Vec::new();
    for (p, a) in arith::factorize(q) {
        let pk = p.pow(a);
        if p == 2 {
            match a {
                1 => {}
                2 => generators.push((crt_lift(3, 4, q), 2)),
                _ => {
                    generators.push((crt_lift(pk - 1, pk, q), 2));
                    generators.push((crt_lift(5, pk, q), pk / 4));
                }
            }
        } else {
            let g = primitive_root_mod_prime_power(p, a);
            generators.push((crt_lift(g, pk, q), arith::phi(pk)));
        }
    }
    let order: u64 = generators.iter().map(|&(_, o)| o).product();
    debug_assert_eq!(order, arith::phi(q));

    // enumerate the group once to invert the exponent map
    let mut dlog = HashMap::with_capacity(order as usize);
    let k = generators.len();
    let mut exps = vec![0u64; k];
    let mut residue = 1u64 % q;
    // iterate mixed-radix counter; maintain residue incrementally per digit
    let mut residues_stack: Vec<u64> = vec![1 % q; k + 1];
    loop {
        dlog.insert(residue, exps.clone());
        // increment
        let mut i = k;
        loop {
            if i == 0 {
                // done
                let structure = UnitGroupStructure {
                    modulus: q,
                    generators,
                    order,
                    dlog,
                };
                return Ok(structure);
            }
            i -= 1;
            exps[i] += 1;
            if exps[i] < generators[i].1 {
                let base = residues_stack[i];
                let g = generators[i].0;
                let mut r = base;
                for _ in 0..exps[i] {
                    r = (r as u128 * g as u128 % q as u128) as u64;
                }
                residues_stack[i + 1] = r;
                for j in i + 1..k {
                    exps[j] = 0;
                    residues_stack[j + 1] = residues_stack[j];
                }
                residue = residues_stack[k];
                break;
            }
            exps[i] = 0;
        }
    }
}

impl UnitGroupStructure {
    pub fn exponents_of(&self, n: u64) -> Option<&Vec<u64>> {
        let r = n % self.modulus;
        self.dlog.get(&r)
    }
}

/// A Dirichlet character mod q, stored as exponents on the unit-group
/// generators. chi(gen_i) = exp(2 pi i * exps[i] / ord_i).
#[derive(Clone, Debug)]
pub struct Character {
    pub modulus: u64,
    pub exps: Vec<u64>,
    pub even: bool,
    pub conductor: u64,
}

/// Exact rational angle r (mod 1) as (num, den); chi(n) = e^{2 pi i r}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootOfUnity {
    pub num: u64,
    pub den: u64,
}

impl RootOfUnity {
    pub fn to_complex(self) -> Complex64 {
        let theta = TAU * self.num as f64 / self.den as f64;
        Complex64::new(theta.cos(), theta.sin())
    }

    pub fn conj(self) -> RootOfUnity {
        RootOfUnity {
            num: (self.den - self.num % self.den) % self.den,
            den: self.den,
        }
    }

    pub fn is_one(self) -> bool {
        self.num % self.den == 0
    }
}

impl Character {
    /// Exact character value as a root of unity; None when gcd(n, q) > 1
    /// (the value is 0 there).
    pub fn value_exact(&self, group: &UnitGroupStructure, n: i64) -> Option<RootOfUnity> {
        let q = self.modulus as i64;
        let r = n.rem_euclid(q) as u64;
        let exps_n = group.exponents_of(r)?;
        // angle = sum exps[i] * e_i / ord_i mod 1, on the common denominator
        let den: u64 = group.generators.iter().map(|&(_, o)| o).fold(1, |acc, o| {
            acc / arith::gcd(acc, o) * o
        });
        let mut num: u64 = 0;
        for (i, &(_, ord)) in group.generators.iter().enumerate() {
            let contrib = (self.exps[i] as u128 * exps_n[i] as u128 % ord as u128) as u64;
            num = (num + contrib * (den / ord)) % den;
        }
        Some(RootOfUnity { num, den })
    }

    /// chi(n) as a complex number (0 when gcd(n, q) > 1).
    pub fn eval(&self, group: &UnitGroupStructure, n: i64) -> Complex64 {
        match self.value_exact(group, n) {
            Some(r) => r.to_complex(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus
    }

    pub fn is_principal(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }
}

/// A character table: the group structure plus all phi(q) characters in a
/// deterministic (mixed-radix) order.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub group: UnitGroupStructure,
    pub chars: Vec<Character>,
}

/// Build all phi(q) characters mod q with parity and conductor filled in.
pub fn character_table(q: u64) -> Result<CharacterTable, CharError> {
    let group = unit_group(q)?;
    let k = group.generators.len();
    let mut chars = Vec::with_capacity(group.order as usize);
    let mut exps = vec![0u64; k];
    loop {
        let mut chi = Character {
            modulus: q,
            exps: exps.clone(),
            even: true,
            conductor: 1,
        };
        chi.even = {
            let v = chi.value_exact(&group, -1).expect("-1 is a unit");
            v.is_one()
        };
        chi.conductor = conductor_of(&chi, &group);
        chars.push(chi);
        // increment mixed radix
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(CharacterTable { group, chars });
            }
            i -= 1;
            exps[i] += 1;
            if exps[i] < group.generators[i].1 {
                break;
            }
            exps[i] = 0;
        }
    }
}

/// Minimal divisor f of q such that chi is trivial on the kernel of
/// (Z/qZ)* -> (Z/fZ)*.
fn conductor_of(chi: &Character, group: &UnitGroupStructure) -> u64 {
    let q = chi.modulus;
    if q == 1 {
        return 1;
    }
    'divisors: for f in arith::divisors(q) {
        let mut n = 1u64;
        while n <= q {
            if n % f == 1 % f && arith::gcd(n, q) == 1 {
                let v = chi.value_exact(group, n as i64).unwrap();
                if !v.is_one() {
                    continue 'divisors;
                }
            }
            n += 1;
        }
        return f;
    }
    q
}

impl CharacterTable {
    /// Gauss sum G(chi) = sum over a mod q of chi(a) e(a/q).
    pub fn gauss_sum(&self, chi: &Character) -> Complex64 {
        let q = self.group.modulus;
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..q {
            if arith::gcd(a, q) == 1 {
                let theta = TAU * a as f64 / q as f64;
                acc += chi.eval(&self.group, a as i64) * Complex64::new(theta.cos(), theta.sin());
            }
        }
        acc
    }
}

/// Sum of chi(m) conj(chi(n)) over all even primitive characters mod q,
/// by direct enumeration of the character table.
pub fn even_primitive_pair_sum(q: u64, m: u64, n: u64) -> Result<Complex64, CharError> {
    if q == 0 {
        return Err(CharError::ZeroModulus);
    }
    if arith::gcd(m * n, q) != 1 {
        return Err(CharError::NotCoprime(m * n, q));
    }
    let table = character_table(q)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for chi in &table.chars {
        if chi.even && chi.is_primitive() {
            let vm = chi.value_exact(&table.group, m as i64).unwrap();
            let vn = chi.value_exact(&table.group, n as i64).unwrap();
            acc += vm.to_complex() * vn.conj().to_complex();
        }
    }
    Ok(acc)
}

/// Same sum over the odd primitive characters.
pub fn odd_primitive_pair_sum(q: u64, m: u64, n: u64) -> Result<Complex64, CharError> {
    if q == 0 {
        return Err(CharError::ZeroModulus);
    }
    if arith::gcd(m * n, q) != 1 {
        return Err(CharError::NotCoprime(m * n, q));
    }
    let table = character_table(q)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for chi in &table.chars {
        if !chi.even && chi.is_primitive() {
            let vm = chi.value_exact(&table.group, m as i64).unwrap();
            let vn = chi.value_exact(&table.group, n as i64).unwrap();
            acc += vm.to_complex() * vn.conj().to_complex();
        }
    }
    Ok(acc)
}

/// Divisor-sum form of the even-primitive pair sum:
/// (1/2) [ sum_{d|q, d|m-n} phi(d) mu(q/d) + sum_{d|q, d|m+n} phi(d) mu(q/d) ],
/// in exact integer arithmetic.
pub fn pair_sum_divisor_form(q: u64, m: u64, n: u64) -> Result<f64, CharError> {
    if q == 0 {
        return Err(CharError::ZeroModulus);
    }
    if arith::gcd(m.wrapping_mul(n), q) != 1 {
        return Err(CharError::NotCoprime(m * n, q));
    }
    let diff = m as i64 - n as i64;
    let sum = (m + n) as i64;
    let mut total = 0i64;
    for d in arith::divisors(q) {
        let di = d as i64;
        let mu = arith::mobius(q / d);
        if mu == 0 {
            continue;
        }
        let phi_d = arith::phi(d) as i64;
        if diff % di == 0 {
            total += phi_d * mu;
        }
        if sum % di == 0 {
            total += phi_d * mu;
        }
    }
    Ok(total as f64 / 2.0)
}

/// Divisor-sum form of the odd-primitive pair sum:
/// (1/2) sum_{d|q, d|m-n} phi(d) mu(q/d) - (1/2) sum_{d|q, d|m+n} phi(d) mu(q/d).
pub fn odd_pair_sum_divisor_form(q: u64, m: u64, n: u64) -> Result<f64, CharError> {
    if q == 0 {
        return Err(CharError::ZeroModulus);
    }
    if arith::gcd(m.wrapping_mul(n), q) != 1 {
        return Err(CharError::NotCoprime(m * n, q));
    }
    let diff = m as i64 - n as i64;
    let sum = (m + n) as i64;
    let mut total = 0i64;
    for d in arith::divisors(q) {
        let di = d as i64;
        let mu = arith::mobius(q / d);
        if mu == 0 {
            continue;
        }
        let phi_d = arith::phi(d) as i64;
        if diff % di == 0 {
            total += phi_d * mu;
        }
        if sum % di == 0 {
            total -= phi_d * mu;
        }
    }
    Ok(total as f64 / 2.0)
}

/// Number of even primitive characters mod q (the pair sum at m = n = 1),
/// exact and cheap; used by the recipe's q-sums.
pub fn even_primitive_count(q: u64) -> f64 {
    pair_sum_divisor_form(q, 1, 1).expect("1 is coprime to everything")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_group_small_moduli() {
        // q = 5: single generator of order 4
        let g5 = unit_group(5).unwrap();
        assert_eq!(g5.generators.len(), 1);
        assert_eq!(g5.generators[0].1, 4);
        // brute-force generation check
        let (g, _) = g5.generators[0];
        let mut seen: Vec<u64> = (0..4).map(|e| arith::pow_mod(g, e, 5)).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![1, 2, 3, 4]);

        // q = 8: two generators of order 2
        let g8 = unit_group(8).unwrap();
        let mut orders: Vec<u64> = g8.generators.iter().map(|&(_, o)| o).collect();
        orders.sort_unstable();
        assert_eq!(orders, vec![2, 2]);
        assert_eq!(g8.order, 4);

        // q = 1: trivial group
        let g1 = unit_group(1).unwrap();
        assert!(g1.generators.is_empty());
        assert_eq!(g1.order, 1);

        assert!(unit_group(0).is_err());
    }

    #[test]
    fn unit_group_bijection_up_to_200() {
        for q in 1..=200u64 {
            let g = unit_group(q).unwrap();
            assert_eq!(g.order, arith::phi(q), "q={q}");
            let mut count = 0;
            for n in 0..q.max(1) {
                if arith::gcd(n.max(1), q) == 1 && (n != 0 || q == 1) {
                    assert!(g.exponents_of(n.max(1) % q.max(1)).is_some() || q == 1);
                    count += 1;
                }
            }
            if q > 1 {
                assert_eq!(count, arith::phi(q), "q={q}");
            }
        }
    }

    #[test]
    fn character_table_counts() {
        // q = 8: 4 characters, exactly 1 even and primitive
        let t = character_table(8).unwrap();
        assert_eq!(t.chars.len(), 4);
        let even_prim = t
            .chars
            .iter()
            .filter(|c| c.even && c.is_primitive())
            .count();
        assert_eq!(even_prim, 1);

        // q = 5: 4 characters, exactly 1 even and primitive (the quadratic one)
        let t = character_table(5).unwrap();
        assert_eq!(t.chars.len(), 4);
        let ep: Vec<&Character> = t
            .chars
            .iter()
            .filter(|c| c.even && c.is_primitive())
            .collect();
        assert_eq!(ep.len(), 1);
        // the quadratic character sends the generator to -1
        let v = ep[0].eval(&t.group, t.group.generators[0].0 as i64);
        assert!((v - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        // q = 1: single trivial character, even and primitive by convention
        let t = character_table(1).unwrap();
        assert_eq!(t.chars.len(), 1);
        assert!(t.chars[0].even && t.chars[0].is_primitive());
    }

    #[test]
    fn char_values_basic() {
        // principal character mod 6 at 3 -> 0
        let t = character_table(6).unwrap();
        let principal = t.chars.iter().find(|c| c.is_principal()).unwrap();
        assert_eq!(principal.eval(&t.group, 3), Complex64::new(0.0, 0.0));
        // chi(1) = 1 for every character
        for chi in &t.chars {
            assert!((chi.eval(&t.group, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        // quadratic character mod 5 at 2 -> -1
        let t5 = character_table(5).unwrap();
        let quad = t5
            .chars
            .iter()
            .find(|c| c.even && c.is_primitive())
            .unwrap();
        assert!((quad.eval(&t5.group, 2) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn pair_sum_examples() {
        assert!((even_primitive_pair_sum(5, 1, 1).unwrap().re - 1.0).abs() < 1e-12);
        assert!((even_primitive_pair_sum(5, 2, 1).unwrap().re - (-1.0)).abs() < 1e-12);
        assert!((even_primitive_pair_sum(1, 1, 1).unwrap().re - 1.0).abs() < 1e-12);
        assert!((pair_sum_divisor_form(1, 1, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((pair_sum_divisor_form(5, 2, 1).unwrap() - (-1.0)).abs() < 1e-15);
        assert!((pair_sum_divisor_form(8, 1, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(even_primitive_pair_sum(6, 3, 1).is_err());
    }

    #[test]
    fn pair_sum_matches_divisor_form_small() {
        for q in 1..=60u64 {
            for (m, n) in [(1u64, 1u64), (2, 1), (3, 2), (7, 4), (11, 6)] {
                if arith::gcd(m * n, q) != 1 {
                    continue;
                }
                let lhs = even_primitive_pair_sum(q, m, n).unwrap();
                let rhs = pair_sum_divisor_form(q, m, n).unwrap();
                assert!(
                    (lhs - Complex64::new(rhs, 0.0)).norm() < 1e-10,
                    "q={q} m={m} n={n} lhs={lhs} rhs={rhs}"
                );
                let lhs_odd = odd_primitive_pair_sum(q, m, n).unwrap();
                let rhs_odd = odd_pair_sum_divisor_form(q, m, n).unwrap();
                assert!(
                    (lhs_odd - Complex64::new(rhs_odd, 0.0)).norm() < 1e-10,
                    "odd q={q} m={m} n={n}"
                );
            }
        }
    }

    #[test]
    fn gauss_sum_modulus_for_primitive() {
        for q in 2..=100u64 {
            let t = character_table(q).unwrap();
            for chi in &t.chars {
                if chi.is_primitive() {
                    let g = t.gauss_sum(chi);
                    assert!(
                        (g.norm() - (q as f64).sqrt()).abs() < 1e-8,
                        "q={q} exps={:?} |G|={}",
                        chi.exps,
                        g.norm()
                    );
                }
            }
        }
    }

    #[test]
    fn conductor_idempotence() {
        // the primitive character of conductor f induces chi on units mod q
        for q in 2..=60u64 {
            let t = character_table(q).unwrap();
            for chi in &t.chars {
                let f = chi.conductor;
                let tf = character_table(f).unwrap();
                // find the inducing character by matching on units mod q
                let mut found = false;
                'search: for psi in &tf.chars {
                    if !psi.is_primitive() {
                        continue;
                    }
                    for n in 1..=q {
                        if arith::gcd(n, q) == 1 {
                            let a = chi.eval(&t.group, n as i64);
                            let b = psi.eval(&tf.group, n as i64);
                            if (a - b).norm() > 1e-9 {
                                continue 'search;
                            }
                        }
                    }
                    found = true;
                    break;
                }
                assert!(found, "q={q} exps={:?} f={f}", chi.exps);
            }
        }
    }
}
