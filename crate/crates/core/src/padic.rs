//! Exact arithmetic in Z_p and its unramified extensions Z_p[zeta_m].
//!
//! An element is a coefficient vector on the power basis of a fixed monic
//! irreducible factor of the m-th cyclotomic polynomial mod p, with every
//! coefficient an exact residue mod p^K. All ring operations are exact
//! integer arithmetic on representatives; the stored precision exponent `K`
//! records how many p-adic digits of the value are meaningful and binary
//! operations take the minimum of the operands' precisions, so absolute
//! precision never silently improves.
//!
//! The extension degree is d = ord_m(p) and the basis modulus is pinned to
//! the lexicographically least irreducible factor of Phi_m mod p (trivial
//! lift, coefficients in [0, p)), which makes every element representation
//! reproducible across runs.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::zarith;
use crate::{Error, Result};

/// p-adic valuation of an element known mod p^K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    /// Some digit below the precision cap is nonzero; v_p is exactly this.
    Exact(u32),
    /// The element is 0 mod p^K; the true valuation is K or larger.
    AtLeast(u32),
}

impl Valuation {
    /// The exact valuation, or an error if it is hidden by the precision cap.
    pub fn expect_exact(self, what: &str) -> Result<u32> {
        match self {
            Valuation::Exact(v) => Ok(v),
            Valuation::AtLeast(k) => Err(Error::PrecisionExhausted(format!(
                "{what}: valuation is >= {k}, not resolvable at this precision"
            ))),
        }
    }
}

/// The ring Z_p[zeta_m] presented as Z_p[X] / (g) for a fixed monic
/// irreducible factor g of Phi_m mod p, trivially lifted.
#[derive(Debug, PartialEq, Eq)]
pub struct UnramifiedBasis {
    p: u64,
    m: u64,
    /// Monic, length d+1, coefficients in [0, p). The lexicographically
    /// least irreducible factor of Phi_m mod p, so deterministic in (p, m).
    modulus: Vec<u64>,
}

impl UnramifiedBasis {
    /// Build the unramified extension containing the m-th roots of unity.
    /// Requires p an odd prime not dividing m.
    pub fn new(p: u64, m: u64) -> Result<Arc<UnramifiedBasis>> {
        if p < 3 || !is_small_prime(p) {
            return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
        }
        if m == 0 || zarith::gcd(p, m) != 1 {
            return Err(Error::Hypothesis(format!(
                "root-of-unity level m = {m} must be positive and prime to p = {p}"
            )));
        }
        let d = zarith::mult_order(p % m, m) as usize;
        let phi: Vec<u64> = zarith::cyclotomic_polynomial(m)
            .iter()
            .map(|c| {
                let r = c % BigInt::from(p);
                let r = if r.sign() == num_bigint::Sign::Minus {
                    r + BigInt::from(p)
                } else {
                    r
                };
                r.to_u64().unwrap()
            })
            .collect();
        // Phi_m mod p is squarefree with all irreducible factors of degree d,
        // so equal-degree splitting is the whole factorization.
        let mut rng = ChaCha8Rng::seed_from_u64(p.wrapping_mul(0x9e3779b97f4a7c15) ^ m);
        let factors = fpoly::equal_degree_factor(&phi, d, p, &mut rng);
        let modulus = factors
            .into_iter()
            .min()
            .expect("Phi_m mod p has at least one factor");
        Ok(Arc::new(UnramifiedBasis { p, m, modulus }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// The root-of-unity level m.
    pub fn level(&self) -> u64 {
        self.m
    }

    /// Extension degree over Q_p.
    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    /// The element 0 at precision k.
    pub fn zero(self: &Arc<Self>, k: u32) -> PadicElement {
        PadicElement {
            p: self.p,
            k,
            coeffs: vec![BigUint::zero(); self.degree()],
            basis: Some(self.clone()),
        }
    }

    /// The integer n embedded at precision k.
    pub fn constant(self: &Arc<Self>, k: u32, n: &BigInt) -> PadicElement {
        let mut z = self.zero(k);
        z.coeffs[0] = reduce_int(n, &pk_modulus(self.p, k));
        z
    }

    /// The element with the given integer coordinates, reduced mod p^k.
    pub fn element(self: &Arc<Self>, k: u32, coords: &[BigInt]) -> PadicElement {
        assert!(coords.len() <= self.degree(), "coordinate vector too long");
        let pk = pk_modulus(self.p, k);
        let mut z = self.zero(k);
        for (i, c) in coords.iter().enumerate() {
            z.coeffs[i] = reduce_int(c, &pk);
        }
        z
    }

    /// An exact primitive m-th root of unity at precision k, the Hensel lift
    /// of the basis generator to a root of X^m - 1.
    pub fn zeta(self: &Arc<Self>, k: u32) -> PadicElement {
        assert!(k >= 1);
        // the class of X is a simple root of X^m - 1 mod p
        let mut z = self.zero(k);
        if self.degree() == 1 {
            // modulus is X - c; the generator is the residue c
            z.coeffs[0] = BigUint::from(self.modulus[0]);
            let pk = pk_modulus(self.p, k);
            z.coeffs[0] = (&pk - &z.coeffs[0]) % &pk;
        } else {
            z.coeffs[1] = BigUint::one();
        }
        let one = self.constant(k, &BigInt::one());
        let m_scalar = BigInt::from(self.m);
        for _ in 0..(2 * (k.ilog2() + 2)) {
            let fz = &z.pow_u(self.m) - &one;
            if fz.is_zero() {
                return z;
            }
            let deriv = z.pow_u(self.m - 1).scale(&m_scalar);
            let step = &fz * &deriv.inverse().expect("m * zeta^(m-1) is a unit");
            z = &z - &step;
        }
        panic!("Newton iteration for zeta_{} did not converge", self.m);
    }

    /// Traces Tr(x^j) of basis generator powers, j < d, mod p^k, by the
    /// Newton identities on the modulus (no Frobenius matrix needed).
    fn power_traces(&self, k: u32) -> Vec<BigUint> {
        let d = self.degree();
        let pk = pk_modulus(self.p, k);
        let a = |i: usize| BigUint::from(self.modulus[i]);
        let mut s = Vec::with_capacity(d);
        s.push(BigUint::from(d as u64) % &pk);
        for j in 1..d {
            let mut acc = BigUint::from(j as u64) * a(d - j);
            for i in 1..j {
                acc += a(d - i) * &s[j - i];
            }
            acc %= &pk;
            s.push((&pk - acc) % &pk);
        }
        s
    }
}

/// An element of Z_p or of an unramified extension, known mod p^K.
#[derive(Clone, PartialEq, Eq)]
pub struct PadicElement {
    p: u64,
    k: u32,
    /// Length = extension degree (1 when basis is None), entries < p^K.
    coeffs: Vec<BigUint>,
    basis: Option<Arc<UnramifiedBasis>>,
}

impl fmt::Debug for PadicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.len() == 1 {
            write!(f, "{} (mod {}^{})", self.coeffs[0], self.p, self.k)
        } else {
            write!(f, "{:?} (mod {}^{})", self.coeffs, self.p, self.k)
        }
    }
}

impl PadicElement {
    /// The integer n as an element of Z_p at precision k.
    pub fn integer(p: u64, k: u32, n: &BigInt) -> PadicElement {
        assert!(k >= 1);
        PadicElement {
            p,
            k,
            coeffs: vec![reduce_int(n, &pk_modulus(p, k))],
            basis: None,
        }
    }

    pub fn zero(p: u64, k: u32) -> PadicElement {
        Self::integer(p, k, &BigInt::zero())
    }

    pub fn one(p: u64, k: u32) -> PadicElement {
        Self::integer(p, k, &BigInt::one())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Absolute precision exponent: the value is known mod p^K.
    pub fn precision(&self) -> u32 {
        self.k
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    /// The canonical representative in [0, p^K) of an element of Z_p.
    /// Errors on proper extension elements; see [`PadicElement::to_base`].
    pub fn residue(&self) -> Result<BigUint> {
        if self.coeffs.len() != 1 {
            return Err(Error::Internal(
                "residue() on a proper extension element".into(),
            ));
        }
        Ok(self.coeffs[0].clone())
    }

    /// Truncate to a smaller precision.
    pub fn reduce_precision(&self, k: u32) -> PadicElement {
        assert!(k >= 1 && k <= self.k, "can only reduce precision");
        let pk = pk_modulus(self.p, k);
        PadicElement {
            p: self.p,
            k,
            coeffs: self.coeffs.iter().map(|c| c % &pk).collect(),
            basis: self.basis.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// True when the two values agree mod p^k (both must be known that far).
    pub fn congruent_mod(&self, other: &PadicElement, k: u32) -> bool {
        assert!(self.k >= k && other.k >= k, "operands not known mod p^k");
        self.compatible(other);
        let pk = pk_modulus(self.p, k);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .all(|(a, b)| a % &pk == b % &pk)
    }

    pub fn valuation(&self) -> Valuation {
        let mut best: Option<u32> = None;
        for c in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            // unramified: v of the element is the min over coordinates
            let v = zarith::big_valuation(c, self.p);
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        match best {
            Some(v) => Valuation::Exact(v),
            None => Valuation::AtLeast(self.k),
        }
    }

    fn compatible(&self, other: &PadicElement) {
        assert_eq!(self.p, other.p, "mixed primes");
        let bm = |b: &Option<Arc<UnramifiedBasis>>| b.as_ref().map(|b| b.m);
        assert_eq!(bm(&self.basis), bm(&other.basis), "mixed coefficient rings");
    }

    fn binop(&self, other: &PadicElement, f: impl Fn(&BigUint, &BigUint, &BigUint) -> BigUint) -> PadicElement {
        self.compatible(other);
        let k = self.k.min(other.k);
        let pk = pk_modulus(self.p, k);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| f(&(a % &pk), &(b % &pk), &pk))
            .collect();
        PadicElement {
            p: self.p,
            k,
            coeffs,
            basis: self.basis.clone(),
        }
    }

    /// Multiply by an integer scalar.
    pub fn scale(&self, n: &BigInt) -> PadicElement {
        let pk = pk_modulus(self.p, self.k);
        let n = reduce_int(n, &pk);
        PadicElement {
            p: self.p,
            k: self.k,
            coeffs: self.coeffs.iter().map(|c| c * &n % &pk).collect(),
            basis: self.basis.clone(),
        }
    }

    pub fn pow_u(&self, e: u64) -> PadicElement {
        self.pow_big(&BigUint::from(e))
    }

    pub fn pow_big(&self, e: &BigUint) -> PadicElement {
        let mut acc = match &self.basis {
            Some(b) => b.constant(self.k, &BigInt::one()),
            None => PadicElement::one(self.p, self.k),
        };
        let mut base = self.clone();
        let bits = e.bits();
        for i in 0..bits {
            if e.bit(i) {
                acc = &acc * &base;
            }
            if i + 1 < bits {
                base = &base * &base;
            }
        }
        acc
    }

    /// Inverse of a unit (valuation 0): mod-p inverse via extended gcd, then
    /// Newton lifting y <- y(2 - ay).
    pub fn inverse(&self) -> Result<PadicElement> {
        let p = self.p;
        let residue: Vec<u64> = self
            .coeffs
            .iter()
            .map(|c| (c % BigUint::from(p)).to_u64().unwrap())
            .collect();
        let inv0: Vec<u64> = match &self.basis {
            None => {
                let r = residue[0];
                vec![zarith::inv_mod(r, p).ok_or_else(|| {
                    Error::Hypothesis("inverse of a non-unit in Z_p".into())
                })?]
            }
            Some(b) => {
                let mut a = residue.clone();
                fpoly::trim(&mut a);
                fpoly::inv_mod_poly(&a, &b.modulus, p).ok_or_else(|| {
                    Error::Hypothesis("inverse of a non-unit in the extension".into())
                })?
            }
        };
        let mut y = match &self.basis {
            Some(b) => {
                let coords: Vec<BigInt> = inv0.iter().map(|&c| BigInt::from(c)).collect();
                b.element(self.k, &coords)
            }
            None => PadicElement::integer(p, self.k, &BigInt::from(inv0[0])),
        };
        let two = match &self.basis {
            Some(b) => b.constant(self.k, &BigInt::from(2)),
            None => PadicElement::integer(p, self.k, &BigInt::from(2)),
        };
        for _ in 0..=self.k.ilog2() + 1 {
            y = &y * &(&two - &(self * &y));
        }
        let check = self * &y;
        let one = match &self.basis {
            Some(b) => b.constant(self.k, &BigInt::one()),
            None => PadicElement::one(p, self.k),
        };
        if check != one {
            return Err(Error::Internal("inverse lifting failed".into()));
        }
        Ok(y)
    }

    /// Exact division by p^s; requires valuation >= s and costs s digits of
    /// absolute precision.
    pub fn divide_by_p_exact(&self, s: u32) -> Result<PadicElement> {
        if s == 0 {
            return Ok(self.clone());
        }
        if self.k <= s {
            return Err(Error::PrecisionExhausted(format!(
                "dividing by p^{s} leaves no digits at precision {}",
                self.k
            )));
        }
        let ps = pk_modulus(self.p, s);
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            if !(c % &ps).is_zero() {
                return Err(Error::Internal(format!(
                    "division by p^{s} is not exact (valuation too small)"
                )));
            }
            coeffs.push(c / &ps);
        }
        Ok(PadicElement {
            p: self.p,
            k: self.k - s,
            coeffs,
            basis: self.basis.clone(),
        })
    }

    /// Absolute trace down to Q_p, via Newton-identity power sums of the
    /// basis modulus.
    pub fn trace(&self) -> PadicElement {
        match &self.basis {
            None => self.clone(),
            Some(b) => {
                let s = b.power_traces(self.k);
                let pk = pk_modulus(self.p, self.k);
                let mut acc = BigUint::zero();
                for (c, t) in self.coeffs.iter().zip(&s) {
                    acc += c * t;
                }
                PadicElement {
                    p: self.p,
                    k: self.k,
                    coeffs: vec![acc % &pk],
                    basis: None,
                }
            }
        }
    }

    /// Reinterpret an extension element that actually lies in Z_p (all basis
    /// coordinates above the constant vanish mod p^K) as an element of Z_p.
    pub fn to_base(&self) -> Result<PadicElement> {
        if self.coeffs[1..].iter().any(|c| !c.is_zero()) {
            return Err(Error::Internal(
                "element does not descend to Q_p at this precision".into(),
            ));
        }
        Ok(PadicElement {
            p: self.p,
            k: self.k,
            coeffs: vec![self.coeffs[0].clone()],
            basis: None,
        })
    }
}

impl std::ops::Add for &PadicElement {
    type Output = PadicElement;
    fn add(self, rhs: &PadicElement) -> PadicElement {
        self.binop(rhs, |a, b, pk| (a + b) % pk)
    }
}

impl std::ops::Sub for &PadicElement {
    type Output = PadicElement;
    fn sub(self, rhs: &PadicElement) -> PadicElement {
        self.binop(rhs, |a, b, pk| (pk + a - b) % pk)
    }
}

impl std::ops::Mul for &PadicElement {
    type Output = PadicElement;
    fn mul(self, rhs: &PadicElement) -> PadicElement {
        self.compatible(rhs);
        let k = self.k.min(rhs.k);
        let pk = pk_modulus(self.p, k);
        let d = self.coeffs.len();
        if d == 1 {
            let c = (&self.coeffs[0] % &pk) * (&rhs.coeffs[0] % &pk) % &pk;
            return PadicElement {
                p: self.p,
                k,
                coeffs: vec![c],
                basis: self.basis.clone(),
            };
        }
        let basis = self.basis.as_ref().expect("degree > 1 has a basis");
        let mut prod = vec![BigUint::zero(); 2 * d - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let a = a % &pk;
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                prod[i + j] += &a * b;
            }
        }
        for c in prod.iter_mut() {
            *c %= &pk;
        }
        // reduce by the monic modulus; exact over Z/p^k
        for i in (d..=2 * d - 2).rev() {
            let c = std::mem::take(&mut prod[i]);
            if c.is_zero() {
                continue;
            }
            let shift = i - d;
            for (j, &mj) in basis.modulus.iter().enumerate().take(d) {
                if mj == 0 {
                    continue;
                }
                let t = &c * BigUint::from(mj) % &pk;
                prod[shift + j] = (&prod[shift + j] + &pk - t) % &pk;
            }
        }
        prod.truncate(d);
        PadicElement {
            p: self.p,
            k,
            coeffs: prod,
            basis: self.basis.clone(),
        }
    }
}

impl std::ops::Neg for &PadicElement {
    type Output = PadicElement;
    fn neg(self) -> PadicElement {
        let pk = pk_modulus(self.p, self.k);
        PadicElement {
            p: self.p,
            k: self.k,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| if c.is_zero() { BigUint::zero() } else { &pk - c })
                .collect(),
            basis: self.basis.clone(),
        }
    }
}

/// The Teichmueller representative of a mod p at precision k: the unique
/// (p-1)-st root of unity congruent to a mod p, computed as a^(p^k) mod p^k.
/// Rejects a ≡ 0 mod p, which has no multiplicative representative.
pub fn teichmuller(a: u64, p: u64, k: u32) -> Result<PadicElement> {
    assert!(k >= 1);
    if a % p == 0 {
        return Err(Error::Input(format!(
            "teichmuller({a}) undefined: argument divisible by {p}"
        )));
    }
    let pk = pk_modulus(p, k);
    let w = BigUint::from(a % p).modpow(&pk, &pk);
    Ok(PadicElement {
        p,
        k,
        coeffs: vec![w],
        basis: None,
    })
}

/// The p-adic logarithm of a 1-unit u (u ≡ 1 mod p), for odd p.
///
/// The series is evaluated exactly on representatives with an internal
/// precision bump covering the divisions, and the result is certified to the
/// full input precision (for odd p and v(u - 1) >= 1 the logarithm loses no
/// absolute precision). Units not congruent to 1 are rejected; use
/// `padic_log_unit` for those.
pub fn padic_log(u: &PadicElement) -> Result<PadicElement> {
    if u.p < 3 {
        return Err(Error::Hypothesis("padic_log requires odd p".into()));
    }
    match u.valuation() {
        Valuation::Exact(0) => {}
        _ => return Err(Error::Hypothesis("padic_log requires a unit".into())),
    }
    let one = match &u.basis {
        Some(b) => b.constant(u.k, &BigInt::one()),
        None => PadicElement::one(u.p, u.k),
    };
    match (u - &one).valuation() {
        Valuation::Exact(v) if v >= 1 => {}
        Valuation::AtLeast(_) => {}
        _ => {
            return Err(Error::Input(
                "padic_log requires a 1-unit (argument is not 1 mod p)".into(),
            ))
        }
    }
    padic_log_unit(u)
}

/// The p-adic logarithm of an arbitrary unit u, for odd p.
///
/// General units are reduced to 1-units by log(u) = log(u^(q-1)) / (q-1)
/// with q the residue field size (this kills the Teichmueller part, so the
/// result is the logarithm of the 1-unit component of u).
pub fn padic_log_unit(u: &PadicElement) -> Result<PadicElement> {
    if u.p < 3 {
        return Err(Error::Hypothesis("padic_log requires odd p".into()));
    }
    match u.valuation() {
        Valuation::Exact(0) => {}
        _ => return Err(Error::Hypothesis("padic_log requires a unit".into())),
    }
    let k = u.k;
    let d = u.coeffs.len();
    let one = match &u.basis {
        Some(b) => b.constant(k, &BigInt::one()),
        None => PadicElement::one(u.p, k),
    };
    // pass to a 1-unit
    let (w, exponent_divisor) = {
        let z = u - &one;
        match z.valuation() {
            Valuation::Exact(v) if v >= 1 => (u.clone(), None),
            Valuation::AtLeast(_) => return Ok(&one - &one),
            _ => {
                let q1 = pk_modulus(u.p, d as u32) - BigUint::one();
                (u.pow_big(&q1), Some(q1))
            }
        }
    };
    let z = &w - &one;
    if z.is_zero() {
        // w = 1 to working precision, so log vanishes mod p^k
        return Ok(&one - &one);
    }
    let v = match z.valuation() {
        Valuation::Exact(v) => v,
        Valuation::AtLeast(_) => unreachable!(),
    };
    debug_assert!(v >= 1);
    // terms z^i/i for i >= i_max all have valuation >= k:
    // i*v - log_p(i) is increasing in i since v >= 1
    let mut i_max = 1u64;
    while (i_max as i64) * (v as i64) - (ilog_p(i_max, u.p) as i64) < k as i64 {
        i_max += 1;
    }
    let bump = ilog_p(i_max, u.p) + 1;
    let kk = k + bump;
    // lift the exact representative unchanged to the bumped precision
    let z_lift = PadicElement {
        p: u.p,
        k: kk,
        coeffs: z.coeffs.clone(),
        basis: z.basis.clone(),
    };
    let mut sum = match &z_lift.basis {
        Some(b) => b.zero(kk),
        None => PadicElement::zero(u.p, kk),
    };
    let pkk = pk_modulus(u.p, kk);
    let mut zpow = z_lift.clone();
    for i in 1..i_max {
        // term = (-1)^(i+1) z^i / i
        let s = if i == 1 { 0 } else { zarith::big_valuation(&BigUint::from(i), u.p) };
        let unit_part = BigUint::from(i) / pk_modulus(u.p, s);
        let inv_unit = zarith::inv_mod_big(&unit_part, &pkk).expect("unit part invertible");
        let term = zpow.divide_by_p_exact(s)?;
        // term now has precision kk - s >= k; rescale into the kk accumulator
        let term = PadicElement {
            p: u.p,
            k: kk,
            coeffs: term.coeffs.iter().map(|c| c * &inv_unit % &pkk).collect(),
            basis: term.basis.clone(),
        };
        if i % 2 == 1 {
            sum = &sum + &term;
        } else {
            sum = &sum - &term;
        }
        if i + 1 < i_max {
            zpow = &zpow * &z_lift;
        }
    }
    let mut out = sum.reduce_precision(k);
    if let Some(q1) = exponent_divisor {
        let pk = pk_modulus(u.p, k);
        let inv = zarith::inv_mod_big(&(&q1 % &pk), &pk).expect("q-1 is a unit");
        out = PadicElement {
            p: u.p,
            k,
            coeffs: out.coeffs.iter().map(|c| c * &inv % &pk).collect(),
            basis: out.basis.clone(),
        };
    }
    Ok(out)
}

/// Embed a p-integral rational into Z_p at precision k. Rationals are kept
/// in lowest terms, so p dividing the denominator means the value genuinely
/// lies outside Z_p and is rejected.
pub fn embed_rational(r: &num_rational::BigRational, p: u64, k: u32) -> Result<PadicElement> {
    let den = r
        .denom()
        .to_biguint()
        .expect("BigRational keeps the denominator positive");
    if (&den % BigUint::from(p)).is_zero() {
        return Err(Error::Hypothesis(format!(
            "rational {r} is not a {p}-adic integer"
        )));
    }
    let pk = pk_modulus(p, k);
    let inv = zarith::inv_mod_big(&(&den % &pk), &pk)
        .expect("denominator prime to p is invertible");
    let num = reduce_int(r.numer(), &pk);
    Ok(PadicElement {
        p,
        k,
        coeffs: vec![num * inv % &pk],
        basis: None,
    })
}

/// Lift a simple root a0 of g mod p to a root of g mod p^k by Newton
/// iteration. Errors if g(a0) != 0 mod p, or if g'(a0) = 0 mod p (the root
/// is ramified or ambiguous and plain Hensel lifting does not apply).
pub fn hensel_root(g: &[BigInt], a0: u64, p: u64, k: u32) -> Result<PadicElement> {
    assert!(k >= 1);
    let eval = |z: &BigUint, m: &BigUint, poly: &[BigInt]| -> BigUint {
        let mut acc = BigInt::zero();
        let zi = BigInt::from(z.clone());
        for c in poly.iter().rev() {
            acc = acc * &zi + c;
            acc %= BigInt::from(m.clone());
        }
        reduce_int(&acc, m)
    };
    let deriv: Vec<BigInt> = g
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigInt::from(i))
        .collect();
    let p_big = BigUint::from(p);
    let a0_big = BigUint::from(a0 % p);
    if !eval(&a0_big, &p_big, g).is_zero() {
        return Err(Error::Input(format!("{a0} is not a root of g mod {p}")));
    }
    if eval(&a0_big, &p_big, &deriv).is_zero() {
        return Err(Error::Hypothesis(
            "root is ramified or ambiguous: g'(a0) = 0 mod p".into(),
        ));
    }
    let pk = pk_modulus(p, k);
    let mut z = a0_big;
    for _ in 0..=k.ilog2() + 1 {
        let gz = eval(&z, &pk, g);
        if gz.is_zero() {
            break;
        }
        let gpz = eval(&z, &pk, &deriv);
        let inv = zarith::inv_mod_big(&gpz, &pk).expect("g'(z) stays a unit");
        z = (&z + &pk - gz * inv % &pk) % &pk;
    }
    if !eval(&z, &pk, g).is_zero() {
        return Err(Error::Internal("Newton iteration did not converge".into()));
    }
    Ok(PadicElement {
        p,
        k,
        coeffs: vec![z],
        basis: None,
    })
}

/// A primitive m-th root of unity in the smallest unramified extension of Z_p
/// that contains one, together with the degree of that extension.
///
/// The degree is the multiplicative order of p mod m; for m | p - 1 the root
/// lands in Z_p itself and coincides with a Teichmueller value.
pub fn unramified_embed_root_of_unity(m: u64, p: u64, k: u32) -> Result<(usize, PadicElement)> {
    let basis = UnramifiedBasis::new(p, m)?;
    let zeta = basis.zeta(k);
    Ok((basis.degree(), zeta))
}

pub(crate) fn pk_modulus(p: u64, k: u32) -> BigUint {
    BigUint::from(p).pow(k)
}

fn reduce_int(n: &BigInt, pk: &BigUint) -> BigUint {
    let m = BigInt::from(pk.clone());
    let r = ((n % &m) + &m) % &m;
    r.to_biguint().unwrap()
}

/// floor(log_p(n)) for n >= 1.
fn ilog_p(n: u64, p: u64) -> u32 {
    let mut v = 0;
    let mut t = p;
    while t <= n {
        v += 1;
        t = t.saturating_mul(p);
    }
    v
}

pub(crate) fn is_small_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Dense polynomial arithmetic over F_p (p an odd machine-word prime),
/// just enough for factoring cyclotomic polynomials: coefficient vectors
/// carry no trailing zeros and the zero polynomial is the empty vector.
mod fpoly {
    use num_bigint::BigUint;
    use num_traits::One;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    use crate::zarith;

    pub fn trim(v: &mut Vec<u64>) {
        while v.last() == Some(&0) {
            v.pop();
        }
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                let t = (ai as u128 * bj as u128 + out[i + j] as u128) % p as u128;
                out[i + j] = t as u64;
            }
        }
        trim(&mut out);
        out
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let mut out = vec![0u64; n];
        for i in 0..n {
            let ai = a.get(i).copied().unwrap_or(0);
            let bi = b.get(i).copied().unwrap_or(0);
            out[i] = (ai + p - bi) % p;
        }
        trim(&mut out);
        out
    }

    /// Quotient and remainder; b need not be monic.
    pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        assert!(!b.is_empty(), "division by zero polynomial");
        if a.len() < b.len() {
            return (vec![], a.to_vec());
        }
        let lead_inv = zarith::inv_mod(*b.last().unwrap(), p).expect("p prime");
        let mut rem = a.to_vec();
        let db = b.len() - 1;
        let mut quot = vec![0u64; a.len() - db];
        for i in (db..a.len()).rev() {
            let c = rem[i] as u128 * lead_inv as u128 % p as u128;
            if c == 0 {
                continue;
            }
            quot[i - db] = c as u64;
            for (j, &bj) in b.iter().enumerate() {
                let t = c * bj as u128 % p as u128;
                let idx = i - db + j;
                rem[idx] = ((rem[idx] as u128 + p as u128 - t) % p as u128) as u64;
            }
        }
        trim(&mut rem);
        trim(&mut quot);
        (quot, rem)
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        divrem(a, b, p).1
    }

    pub fn make_monic(mut a: Vec<u64>, p: u64) -> Vec<u64> {
        trim(&mut a);
        if let Some(&lead) = a.last() {
            if lead != 1 {
                let inv = zarith::inv_mod(lead, p).expect("p prime") as u128;
                for c in a.iter_mut() {
                    *c = (*c as u128 * inv % p as u128) as u64;
                }
            }
        }
        a
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = std::mem::replace(&mut b, r);
        }
        make_monic(a, p)
    }

    pub fn pow_mod(base: &[u64], e: &BigUint, f: &[u64], p: u64) -> Vec<u64> {
        let mut acc = vec![1u64];
        let mut b = rem(base, f, p);
        let bits = e.bits();
        for i in 0..bits {
            if e.bit(i) {
                acc = rem(&mul(&acc, &b, p), f, p);
            }
            if i + 1 < bits {
                b = rem(&mul(&b, &b, p), f, p);
            }
        }
        acc
    }

    /// Inverse of a mod f in F_p[x] by extended Euclid; None when the gcd is
    /// not constant (for irreducible f that means a = 0 mod f).
    pub fn inv_mod_poly(a: &[u64], f: &[u64], p: u64) -> Option<Vec<u64>> {
        let mut r0 = f.to_vec();
        let mut r1 = rem(a, f, p);
        let mut t0: Vec<u64> = vec![];
        let mut t1: Vec<u64> = vec![1];
        while !r1.is_empty() {
            let (q, r) = divrem(&r0, &r1, p);
            r0 = std::mem::replace(&mut r1, r);
            let qt = mul(&q, &t1, p);
            let t = sub(&t0, &qt, p);
            t0 = std::mem::replace(&mut t1, t);
        }
        if r0.len() != 1 {
            return None;
        }
        let s = zarith::inv_mod(r0[0], p).expect("p prime");
        Some(
            t0.iter()
                .map(|&c| (c as u128 * s as u128 % p as u128) as u64)
                .collect(),
        )
    }

    /// Cantor-Zassenhaus equal-degree splitting of a squarefree monic f
    /// whose irreducible factors all have degree d. Output is sorted by
    /// coefficient vector so the caller's choice of factor is deterministic
    /// regardless of the RNG path.
    pub fn equal_degree_factor(f: &[u64], d: usize, p: u64, rng: &mut ChaCha8Rng) -> Vec<Vec<u64>> {
        let f = make_monic(f.to_vec(), p);
        assert!(f.len() > 1 && (f.len() - 1) % d == 0);
        let e = (BigUint::from(p).pow(d as u32) - BigUint::one()) >> 1;
        let mut stack = vec![f];
        let mut out = vec![];
        while let Some(g) = stack.pop() {
            let dg = g.len() - 1;
            if dg == d {
                out.push(g);
                continue;
            }
            loop {
                let r: Vec<u64> = (0..dg).map(|_| rng.gen_range(0..p)).collect();
                let mut r = r;
                trim(&mut r);
                if r.is_empty() {
                    continue;
                }
                let h = pow_mod(&r, &e, &g, p);
                let h1 = sub(&h, &[1], p);
                let w = gcd(&h1, &g, p);
                if !w.is_empty() && w.len() - 1 > 0 && w.len() < g.len() {
                    let (q, rr) = divrem(&g, &w, p);
                    debug_assert!(rr.is_empty());
                    stack.push(w);
                    stack.push(make_monic(q, p));
                    break;
                }
            }
        }
        out.sort();
        out
    }

    #[cfg(test)]
    mod tests {
        use super::*;
        use rand::SeedableRng;

        #[test]
        fn divrem_roundtrip() {
            let p = 7;
            let a = vec![1, 2, 3, 4, 5];
            let b = vec![2, 0, 1];
            let (q, r) = divrem(&a, &b, p);
            let mut back = mul(&q, &b, p);
            for (i, c) in r.iter().enumerate() {
                back[i] = (back[i] + c) % p;
            }
            trim(&mut back);
            let mut a_t = a.clone();
            trim(&mut a_t);
            assert_eq!(back, a_t);
            assert!(r.len() < b.len());
        }

        #[test]
        fn inverse_mod_irreducible() {
            // x^2 + 1 is irreducible mod 7
            let f = vec![1, 0, 1];
            let a = vec![3, 2];
            let inv = inv_mod_poly(&a, &f, 7).unwrap();
            let prod = rem(&mul(&a, &inv, 7), &f, 7);
            assert_eq!(prod, vec![1]);
        }

        #[test]
        fn splits_phi_13_mod_3_into_cubics() {
            let phi: Vec<u64> = vec![1; 13]; // Phi_13 = 1 + x + ... + x^12
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let factors = equal_degree_factor(&phi, 3, 3, &mut rng);
            assert_eq!(factors.len(), 4);
            for g in &factors {
                assert_eq!(g.len(), 4);
                assert_eq!(*g.last().unwrap(), 1);
            }
            // the product of the factors is Phi_13 again
            let mut prod = vec![1u64];
            for g in &factors {
                prod = mul(&prod, g, 3);
            }
            let phi_mod: Vec<u64> = phi.iter().map(|&c| c % 3).collect();
            assert_eq!(prod, phi_mod);
        }
    }
}
