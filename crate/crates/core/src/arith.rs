//! Elementary number-theoretic helpers shared across the crate.

/// Sieve of Eratosthenes up to `n` inclusive.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut is_comp = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if !is_comp[p] {
            out.push(p as u64);
            let mut m = p * p;
            while m <= n {
                is_comp[m] = true;
                m += p;
            }
        }
    }
    out
}

/// Prime factorization by trial division, as (prime, exponent) pairs in
/// increasing prime order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut a = 0u32;
            while n % p == 0 {
                n /= p;
                a += 1;
            }
            out.push((p, a));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn gcd(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Euler totient.
pub fn phi(n: u64) -> u64 {
    let mut out = n;
    for (p, _) in factorize(n) {
        out -= out / p;
    }
    out
}

/// Moebius function.
pub fn mobius(n: u64) -> i64 {
    if n == 1 {
        return 1;
    }
    let f = factorize(n);
    if f.iter().any(|&(_, a)| a > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// All divisors of `n`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, a) in factorize(n) {
        let prev = out.clone();
        let mut pk = 1u64;
        for _ in 0..a {
            pk *= p;
            out.extend(prev.iter().map(|d| d * pk));
        }
    }
    out.sort_unstable();
    out
}

/// Modular inverse of `a` mod `m` for gcd(a, m) = 1.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        let t = old_r - q * r;
        old_r = r;
        r = t;
        let t = old_s - q * s;
        old_s = s;
        s = t;
    }
    if old_r.abs() != 1 {
        return None;
    }
    let inv = (old_s * old_r.signum()).rem_euclid(m as i128);
    Some(inv as u64)
}

/// Fast modular exponentiation.
pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    b %= m;
    loop {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % m as u128) as u64;
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
    }
    acc
}

/// ord(n) in (Z/mZ)* with gcd(n, m) = 1.
pub fn multiplicative_order(n: u64, m: u64) -> u64 {
    if m == 1 {
        return 1;
    }
    let group = phi(m);
    let mut ord = group;
    for (p, _) in factorize(group) {
        while ord % p == 0 && pow_mod(n, ord / p, m) == 1 {
            ord /= p;
        }
    }
    ord
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sieve_and_factorize_agree() {
        let ps = primes_up_to(100);
        assert_eq!(ps.len(), 25);
        for n in 2..500u64 {
            let f = factorize(n);
            let m: u64 = f.iter().map(|&(p, a)| p.pow(a)).product();
            assert_eq!(m, n);
        }
    }

    #[test]
    fn totient_divisor_sum() {
        // sum over d|n of phi(d) = n
        for n in 1..200u64 {
            let s: u64 = divisors(n).into_iter().map(phi).sum();
            assert_eq!(s, n);
        }
    }

    #[test]
    fn mobius_convolution_is_identity() {
        for n in 1..200u64 {
            let s: i64 = divisors(n).into_iter().map(mobius).sum();
            assert_eq!(s, if n == 1 { 1 } else { 0 });
        }
    }

    #[test]
    fn inverse_round_trip() {
        for m in 2..60u64 {
            for a in 1..m {
                if gcd(a, m) == 1 {
                    let inv = mod_inverse(a, m).unwrap();
                    assert_eq!(a * inv % m, 1 % m);
                }
            }
        }
    }
}
