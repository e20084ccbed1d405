//! Small exact integer helpers shared by the arithmetic modules.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

/// a^e mod m with u128 intermediates; m must be nonzero and < 2^64.
pub fn pow_mod(a: u64, mut e: u64, m: u64) -> u64 {
    assert!(m > 0);
    if m == 1 {
        return 0;
    }
    let mut base = (a % m) as u128;
    let m = m as u128;
    let mut acc: u128 = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc as u64
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Multiplicative order of a modulo m. Panics unless gcd(a, m) = 1.
pub fn mult_order(a: u64, m: u64) -> u64 {
    assert!(m >= 1);
    if m == 1 {
        return 1;
    }
    let a = a % m;
    assert_eq!(gcd(a, m), 1, "order undefined: gcd({a}, {m}) != 1");
    let mut x = a;
    let mut ord = 1u64;
    while x != 1 {
        x = ((x as u128 * a as u128) % m as u128) as u64;
        ord += 1;
        assert!(ord <= m, "order search exceeded modulus");
    }
    ord
}

/// Inverse of a modulo m for machine words, None if gcd(a, m) != 1.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    assert!(m > 0);
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

/// Inverse of a modulo m for big integers, None if gcd(a, m) != 1.
pub fn inv_mod_big(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let (mut r0, mut r1) = (BigInt::from(m.clone()), BigInt::from(a % m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while !r1.is_zero() {
        let q = &r0 / &r1;
        let r = &r0 - &q * &r1;
        r0 = std::mem::replace(&mut r1, r);
        let t = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t);
    }
    if !r0.is_one() {
        return None;
    }
    let m_int = BigInt::from(m.clone());
    let t = ((t0 % &m_int) + &m_int) % &m_int;
    Some(t.to_biguint().unwrap())
}

/// The unique x mod m1*m2 with x = r1 (mod m1) and x = r2 (mod m2).
/// Panics unless m1 and m2 are coprime.
pub fn crt(r1: u64, m1: u64, r2: u64, m2: u64) -> u64 {
    assert_eq!(gcd(m1, m2), 1, "crt needs coprime moduli");
    let m1_inv = inv_mod(m1 % m2, m2).expect("coprime");
    // x = r1 + m1 * ((r2 - r1) * m1^-1 mod m2)
    let diff = ((r2 as i128 - r1 as i128).rem_euclid(m2 as i128)) as u128;
    let t = diff * m1_inv as u128 % m2 as u128;
    (r1 as u128 + m1 as u128 * t) as u64
}

/// Least primitive root modulo an odd prime p (brute-force order check).
pub fn primitive_root(p: u64) -> u64 {
    assert!(p >= 3);
    for g in 2..p {
        if mult_order(g, p) == p - 1 {
            return g;
        }
    }
    unreachable!("no primitive root found; p = {p} is not prime")
}

/// v_p of a nonzero big integer.
pub fn big_valuation(n: &BigUint, p: u64) -> u32 {
    assert!(!n.is_zero());
    let p = BigUint::from(p);
    let mut n = n.clone();
    let mut v = 0u32;
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    v
}

/// Coefficients of the m-th cyclotomic polynomial, constant term first.
///
/// Computed by exact division: Phi_m = (X^m - 1) / prod_{e | m, e < m} Phi_e.
pub fn cyclotomic_polynomial(m: u64) -> Vec<BigInt> {
    fn rec(m: u64, memo: &mut HashMap<u64, Vec<BigInt>>) -> Vec<BigInt> {
        if let Some(v) = memo.get(&m) {
            return v.clone();
        }
        let mut num = vec![BigInt::zero(); m as usize + 1];
        num[0] = -BigInt::one();
        num[m as usize] = BigInt::one();
        for e in 1..m {
            if m % e == 0 {
                let d = rec(e, memo);
                num = poly_div_exact_monic(&num, &d);
            }
        }
        memo.insert(m, num.clone());
        num
    }
    assert!(m >= 1);
    rec(m, &mut HashMap::new())
}

/// Exact quotient of a by the monic polynomial b over Z; panics on a nonzero
/// remainder (callers only divide when divisibility is a theorem).
fn poly_div_exact_monic(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    assert!(b.last().map(|c| c.is_one()).unwrap_or(false), "divisor must be monic");
    let db = b.len() - 1;
    let mut rem = a.to_vec();
    assert!(rem.len() >= b.len());
    let dq = rem.len() - b.len();
    let mut quot = vec![BigInt::zero(); dq + 1];
    for i in (db..rem.len()).rev() {
        let c = std::mem::take(&mut rem[i]);
        if c.is_zero() {
            continue;
        }
        let shift = i - db;
        quot[shift] = c.clone();
        for (j, bj) in b.iter().enumerate().take(db) {
            let t = &c * bj;
            rem[shift + j] -= t;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "division was not exact");
    quot
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_mod_basics() {
        assert_eq!(pow_mod(3, 57, 229), 1);
        assert_eq!(pow_mod(3, 19, 229), 134);
        assert_eq!(pow_mod(2, 10, 1000), 24);
        assert_eq!(pow_mod(7, 0, 13), 1);
    }

    #[test]
    fn orders() {
        assert_eq!(mult_order(3, 13), 3);
        assert_eq!(mult_order(3, 229), 57);
        assert_eq!(mult_order(5, 44), 5);
        assert_eq!(mult_order(2, 7), 3);
        assert_eq!(mult_order(1, 99), 1);
    }

    #[test]
    fn inverses() {
        assert_eq!(inv_mod(2, 27), Some(14));
        assert_eq!(inv_mod(6, 9), None);
        for a in 1..23u64 {
            let i = inv_mod(a, 23).unwrap();
            assert_eq!(a * i % 23, 1);
        }
        let m = BigUint::from(3u32).pow(10);
        let a = BigUint::from(12346u32);
        let i = inv_mod_big(&a, &m).unwrap();
        assert!((a * i % m).is_one());
    }

    #[test]
    fn crt_basics() {
        let x = crt(2, 13, 4, 27);
        assert_eq!(x % 13, 2);
        assert_eq!(x % 27, 4);
        assert!(x < 13 * 27);
        assert_eq!(crt(0, 5, 0, 7), 0);
    }

    #[test]
    fn cyclotomic_small() {
        let as_i64 = |v: Vec<BigInt>| -> Vec<i64> {
            v.iter().map(|c| i64::try_from(c).unwrap()).collect()
        };
        assert_eq!(as_i64(cyclotomic_polynomial(1)), vec![-1, 1]);
        assert_eq!(as_i64(cyclotomic_polynomial(2)), vec![1, 1]);
        assert_eq!(as_i64(cyclotomic_polynomial(3)), vec![1, 1, 1]);
        assert_eq!(as_i64(cyclotomic_polynomial(4)), vec![1, 0, 1]);
        assert_eq!(as_i64(cyclotomic_polynomial(12)), vec![1, 0, -1, 0, 1]);
        // Phi_q(1) = q for prime q
        for q in [5u64, 13, 229] {
            let phi = cyclotomic_polynomial(q);
            let at_one: BigInt = phi.iter().sum();
            assert_eq!(at_one, BigInt::from(q));
        }
        // degree is Euler phi
        assert_eq!(cyclotomic_polynomial(44).len() - 1, 20);
        assert_eq!(cyclotomic_polynomial(27).len() - 1, 18);
    }

    #[test]
    fn big_valuation_counts_powers() {
        assert_eq!(big_valuation(&BigUint::from(18u32), 3), 2);
        assert_eq!(big_valuation(&BigUint::from(1u32), 3), 0);
        assert_eq!(big_valuation(&BigUint::from(3u32).pow(7), 3), 7);
    }
}
