//! Dirichlet characters, Kronecker symbols, exact cyclotomic rationals,
//! and generalized Bernoulli numbers.
//!
//! Characters are stored as exponent tables: chi(a) = zeta_o^e with o the
//! character order, so values stay exact in Q(zeta_o) ([`CycQ`]) and embed
//! into Z_p through Teichmueller roots of unity whenever o divides p - 1.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::padic::{self, PadicElement};
use crate::zarith;
use crate::{Error, Result};

/// The Kronecker symbol (a | n), extending the Jacobi symbol to all n.
pub fn kronecker_symbol(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut acc = 1i32;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            acc = -acc;
        }
    }
    let mut twos = 0u32;
    let mut n = n as u64;
    while n % 2 == 0 {
        n /= 2;
        twos += 1;
    }
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        // (a | 2) = +1 for a = +-1 mod 8, -1 for a = +-3 mod 8
        let r = a.rem_euclid(8);
        if twos % 2 == 1 && (r == 3 || r == 5) {
            acc = -acc;
        }
    }
    acc * jacobi(a, n)
}

/// Jacobi symbol (a | n) for odd n > 0.
fn jacobi(a: i64, mut n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    if n == 1 {
        return 1;
    }
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut t = 1i32;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// True when d is a fundamental discriminant (of a quadratic field).
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let squarefree = |m: i64| {
        let m = m.unsigned_abs();
        let mut q = 2u64;
        while q * q <= m {
            if m % (q * q) == 0 {
                return false;
            }
            q += 1;
        }
        true
    };
    match d.rem_euclid(4) {
        1 => squarefree(d),
        0 => {
            let m = d / 4;
            let r = m.rem_euclid(4);
            (r == 2 || r == 3) && squarefree(m)
        }
        _ => false,
    }
}

/// A Dirichlet character of finite order, stored by exponent table:
/// chi(a) = zeta_order^exps[a] on units, 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirichletCharacter {
    modulus: u64,
    order: u64,
    exps: Vec<Option<u64>>,
}

/// The quadratic character attached to a fundamental discriminant d,
/// a primitive character mod |d| with chi(a) = (d | a).
pub fn quadratic_character(d: i64) -> Result<DirichletCharacter> {
    if !is_fundamental_discriminant(d) {
        return Err(Error::Input(format!(
            "{d} is not a fundamental discriminant"
        )));
    }
    let modulus = d.unsigned_abs();
    let exps = (0..modulus)
        .map(|a| match kronecker_symbol(d, a as i64) {
            1 => Some(0),
            -1 => Some(1),
            _ => None,
        })
        .collect();
    Ok(DirichletCharacter {
        modulus,
        order: 2,
        exps,
    })
}

impl DirichletCharacter {
    /// A character of the given order on the cyclic group (Z/q)^* for an odd
    /// prime q, sending the least primitive root to zeta_order.
    pub fn cyclic(q: u64, order: u64) -> Result<DirichletCharacter> {
        let is_prime = q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0);
        if q < 3 || q % 2 == 0 || !is_prime {
            return Err(Error::Input(format!(
                "cyclic character needs an odd prime modulus, got {q}"
            )));
        }
        if order < 1 || (q - 1) % order != 0 {
            return Err(Error::Input(format!(
                "order {order} does not divide {}",
                q - 1
            )));
        }
        let g = zarith::primitive_root(q);
        let mut exps = vec![None; q as usize];
        let mut x = 1u64;
        for t in 0..q - 1 {
            exps[x as usize] = Some(t % order);
            x = x * g % q;
        }
        Ok(DirichletCharacter {
            modulus: q,
            order,
            exps,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// e with chi(a) = zeta_order^e, or None when gcd(a, modulus) > 1.
    pub fn exponent(&self, a: u64) -> Option<u64> {
        self.exps[(a % self.modulus) as usize]
    }

    /// chi(a) as an integer in {-1, 0, 1}; only for orders 1 and 2.
    pub fn value_quadratic(&self, a: u64) -> i32 {
        assert!(self.order <= 2, "value_quadratic needs a quadratic character");
        match self.exponent(a) {
            None => 0,
            Some(0) => 1,
            Some(_) => -1,
        }
    }

    pub fn is_even(&self) -> bool {
        self.exponent(self.modulus - 1) == Some(0)
    }

    /// chi(a) in Z_p through the Teichmueller lift; the character order must
    /// divide p - 1 so its values land in Q_p at all.
    pub fn padic_value(&self, a: u64, p: u64, k: u32) -> Result<PadicElement> {
        match self.exponent(a) {
            None => Ok(PadicElement::zero(p, k)),
            Some(e) => {
                let z = padic_root_of_unity(self.order, p, k)?;
                Ok(z.pow_u(e))
            }
        }
    }

    /// The complex conjugate character.
    pub fn conjugate(&self) -> DirichletCharacter {
        DirichletCharacter {
            modulus: self.modulus,
            order: self.order,
            exps: self
                .exps
                .iter()
                .map(|e| e.map(|e| (self.order - e) % self.order))
                .collect(),
        }
    }
}

/// A primitive order-th root of unity in Z_p (requires order | p - 1),
/// as a power of the Teichmueller lift of a primitive root mod p.
pub fn padic_root_of_unity(order: u64, p: u64, k: u32) -> Result<PadicElement> {
    if order == 0 || (p - 1) % order != 0 {
        return Err(Error::Hypothesis(format!(
            "no primitive {order}-th root of unity in Z_{p}: order must divide p - 1"
        )));
    }
    let g = zarith::primitive_root(p);
    Ok(padic::teichmuller(g, p, k)?.pow_u((p - 1) / order))
}

/// An exact element of Q(zeta_n): coefficients on 1, zeta, ...,
/// zeta^(phi(n)-1), reduced mod the n-th cyclotomic polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycQ {
    order: u64,
    coeffs: Vec<BigRational>,
}

impl CycQ {
    pub fn zero(order: u64) -> CycQ {
        assert!(order >= 1);
        let phi = zarith::cyclotomic_polynomial(order).len() - 1;
        CycQ {
            order,
            coeffs: vec![BigRational::zero(); phi],
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Add scale * zeta^e.
    pub fn add_scaled_root(&mut self, e: u64, scale: &BigRational) {
        let e = (e % self.order) as usize;
        if e < self.coeffs.len() {
            self.coeffs[e] += scale;
            return;
        }
        // reduce X^e mod the cyclotomic polynomial
        let phi = zarith::cyclotomic_polynomial(self.order);
        let d = phi.len() - 1;
        let mut rep = vec![BigRational::zero(); d];
        rep[0] = BigRational::one();
        for _ in 0..e {
            // multiply by X
            let top = rep[d - 1].clone();
            for i in (1..d).rev() {
                rep[i] = rep[i - 1].clone();
            }
            rep[0] = BigRational::zero();
            if !top.is_zero() {
                for (i, c) in phi.iter().enumerate().take(d) {
                    rep[i] -= &top * BigRational::from(c.clone());
                }
            }
        }
        for (i, r) in rep.into_iter().enumerate() {
            self.coeffs[i] += r * scale;
        }
    }

    /// The value as a rational, when all higher coordinates vanish.
    pub fn rational(&self) -> Option<BigRational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Embed into Z_p via zeta_order -> Teichmueller root (order | p - 1).
    /// The result's precision accounts for powers of p in denominators.
    pub fn padic_embed(&self, p: u64, k: u32) -> Result<PadicElement> {
        let z = padic_root_of_unity(self.order, p, k)?;
        let mut acc = PadicElement::zero(p, k);
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let x = padic::embed_rational(c, p, k)?;
            acc = &acc + &(&x * &z.pow_u(j as u64));
        }
        Ok(acc)
    }
}

/// Bernoulli numbers B_0..B_n (B_1 = -1/2), by the defining recursion.
pub fn bernoulli_numbers(n: u64) -> Vec<BigRational> {
    let n = n as usize;
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    // sum_{j=0}^{m} C(m+1, j) B_j = 0 for m >= 1
    for m in 1..=n {
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one(); // C(m+1, 0)
        for (j, bj) in b.iter().enumerate() {
            acc += bj * BigRational::from(binom.clone());
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        // binom is now C(m+1, m)
        b.push(-acc / BigRational::from(binom));
    }
    b
}

/// The generalized Bernoulli number B_{n, chi} as an exact element of
/// Q(zeta_order): f^(n-1) * sum_a chi(a) B_n(a/f) over a mod f = modulus.
pub fn generalized_bernoulli(n: u64, chi: &DirichletCharacter) -> CycQ {
    let f = chi.modulus();
    let bern = bernoulli_numbers(n);
    // f^n B_n(a/f) = sum_k C(n,k) B_k f^k a^(n-k), evaluated by Horner in a;
    // the f^(n-1) prefactor then becomes division by a single f.
    let mut horner_coeffs: Vec<BigRational> = Vec::with_capacity(n as usize + 1);
    let mut binom = BigInt::one();
    let mut fpow = BigRational::one();
    let f_rat = BigRational::from(BigInt::from(f));
    for k in 0..=n {
        horner_coeffs.push(BigRational::from(binom.clone()) * &bern[k as usize] * &fpow);
        binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
        fpow *= &f_rat;
    }
    let mut out = CycQ::zero(chi.order());
    for a in 1..f {
        let Some(e) = chi.exponent(a) else { continue };
        let a_rat = BigRational::from(BigInt::from(a));
        let mut val = BigRational::zero();
        for c in horner_coeffs.iter() {
            val = val * &a_rat + c;
        }
        out.add_scaled_root(e, &(val / &f_rat));
    }
    out
}
