//! Exact cyclotomic numbers and the tower of circular units of a real
//! quadratic field at a split odd prime.
//!
//! Elements of Z[x]/(x^m - 1) with integer coefficients model Z[zeta_m]
//! without any floating or p-adic arithmetic: multiplication is cyclic
//! convolution, the Galois action permutes exponents, and two vectors
//! represent the same cyclotomic integer exactly when their difference is
//! divisible by the m-th cyclotomic polynomial. On top of this the module
//! builds the tower units eta_n as exact fractions, checks their norm
//! compatibility down the tower, extracts quadratic coordinates of the
//! bottom unit, embeds it into Z_p through a deterministic Hensel root of
//! x^2 - D, and measures the index of the circular 1-units inside the
//! local 1-units.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::characters::{quadratic_character, DirichletCharacter};
use crate::padic::{self, PadicElement, Valuation};
use crate::zarith;
use crate::{Error, Result};

/// Hard cap on the cyclic level m; convolutions beyond it are refused.
const MAX_LEVEL: u64 = 1 << 14;

/// Single-coefficient growth guard. Exact norms grow their coefficients
/// exponentially in the subgroup size; the cap turns runaway inputs into
/// an error instead of silently eating memory.
const MAX_COEFF_BITS: u64 = 1 << 20;

fn cyclotomic_poly(m: u64) -> Arc<Vec<BigInt>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<BigInt>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().expect("poisoned cache").get(&m) {
        return v.clone();
    }
    let fresh = Arc::new(zarith::cyclotomic_polynomial(m));
    cache
        .lock()
        .expect("poisoned cache")
        .entry(m)
        .or_insert(fresh)
        .clone()
}

/// Remainder of a modulo the monic polynomial b, ascending coefficients.
fn poly_rem_monic(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let db = b.len() - 1;
    debug_assert!(b[db].is_one());
    let mut rem = a.to_vec();
    if rem.len() <= db {
        rem.resize(db, BigInt::zero());
        return rem;
    }
    for i in (db..rem.len()).rev() {
        let c = std::mem::take(&mut rem[i]);
        if c.is_zero() {
            continue;
        }
        let shift = i - db;
        for (j, bj) in b.iter().enumerate().take(db) {
            let t = &c * bj;
            rem[shift + j] -= t;
        }
    }
    rem.truncate(db);
    rem
}

/// An exact element of Z[x]/(x^m - 1), the ambient ring for cyclotomic
/// integers of level m. Two vectors denote the same cyclotomic integer
/// when they agree at a primitive m-th root of unity, which the equality
/// helpers test by exact division.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclotomicElement {
    level: u64,
    coeffs: Vec<BigInt>,
}

impl CyclotomicElement {
    pub fn new(level: u64, coeffs: &[BigInt]) -> Result<CyclotomicElement> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::Input(format!(
                "cyclic level {level} outside 1..={MAX_LEVEL}"
            )));
        }
        if coeffs.len() != level as usize {
            return Err(Error::Input(format!(
                "coefficient vector has length {}, level is {level}",
                coeffs.len()
            )));
        }
        Ok(CyclotomicElement {
            level,
            coeffs: coeffs.to_vec(),
        })
    }

    pub fn constant(level: u64, c: &BigInt) -> Result<CyclotomicElement> {
        let mut coeffs = vec![BigInt::zero(); level as usize];
        if level > 0 {
            coeffs[0] = c.clone();
        }
        CyclotomicElement::new(level, &coeffs)
    }

    pub fn one(level: u64) -> Result<CyclotomicElement> {
        CyclotomicElement::constant(level, &BigInt::one())
    }

    /// The monomial x^e, exponent read cyclically.
    pub fn monomial(level: u64, e: u64) -> Result<CyclotomicElement> {
        if level == 0 || level > MAX_LEVEL {
            return Err(Error::Input(format!(
                "cyclic level {level} outside 1..={MAX_LEVEL}"
            )));
        }
        let mut coeffs = vec![BigInt::zero(); level as usize];
        coeffs[(e % level) as usize] = BigInt::one();
        CyclotomicElement::new(level, &coeffs)
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    fn check_growth(&self) -> Result<()> {
        if self.coeffs.iter().any(|c| c.magnitude().bits() > MAX_COEFF_BITS) {
            return Err(Error::Internal(
                "coefficient blowup in exact cyclic arithmetic".into(),
            ));
        }
        Ok(())
    }

    fn same_level(&self, other: &CyclotomicElement) -> Result<()> {
        if self.level != other.level {
            return Err(Error::Input(format!(
                "mixed cyclic levels {} and {}",
                self.level, other.level
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &CyclotomicElement) -> Result<CyclotomicElement> {
        self.same_level(other)?;
        let coeffs: Vec<BigInt> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        CyclotomicElement::new(self.level, &coeffs)
    }

    pub fn sub(&self, other: &CyclotomicElement) -> Result<CyclotomicElement> {
        self.same_level(other)?;
        let coeffs: Vec<BigInt> = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        CyclotomicElement::new(self.level, &coeffs)
    }

    /// Cyclic convolution. The side with fewer nonzero coefficients drives
    /// the outer loop, so sparse factors cost O(level) per nonzero term.
    pub fn mul(&self, other: &CyclotomicElement) -> Result<CyclotomicElement> {
        self.same_level(other)?;
        let m = self.level as usize;
        let (outer, inner) = {
            let nz = |e: &CyclotomicElement| e.coeffs.iter().filter(|c| !c.is_zero()).count();
            if nz(self) <= nz(other) {
                (self, other)
            } else {
                (other, self)
            }
        };
        let mut out = vec![BigInt::zero(); m];
        for (i, ci) in outer.coeffs.iter().enumerate() {
            if ci.is_zero() {
                continue;
            }
            for (j, cj) in inner.coeffs.iter().enumerate() {
                if cj.is_zero() {
                    continue;
                }
                let k = (i + j) % m;
                out[k] += ci * cj;
            }
        }
        let out = CyclotomicElement::new(self.level, &out)?;
        out.check_growth()?;
        Ok(out)
    }

    /// Multiplication by 1 - x^e: a single shift and subtract.
    fn mul_one_minus_power(&self, e: u64) -> CyclotomicElement {
        let m = self.level as usize;
        let e = (e % self.level) as usize;
        let mut out = self.coeffs.clone();
        for i in 0..m {
            let t = &self.coeffs[i];
            if !t.is_zero() {
                out[(i + e) % m] -= t;
            }
        }
        CyclotomicElement {
            level: self.level,
            coeffs: out,
        }
    }

    /// Image under the ring automorphism x -> x^a; a must be a unit mod the
    /// level so that the map permutes the power basis.
    pub fn galois(&self, a: u64) -> Result<CyclotomicElement> {
        let m = self.level;
        if zarith::gcd(a % m, m) != 1 {
            return Err(Error::Input(format!(
                "exponent {a} is not invertible mod {m}"
            )));
        }
        let mut out = vec![BigInt::zero(); m as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[((i as u64 * a) % m) as usize] = c.clone();
        }
        CyclotomicElement::new(m, &out)
    }

    /// Reinterprets the element at a multiple level through x -> x^t,
    /// matching the inclusion of root-of-unity groups.
    pub fn include_to_level(&self, new_level: u64) -> Result<CyclotomicElement> {
        if new_level == 0 || new_level % self.level != 0 {
            return Err(Error::Input(format!(
                "level {new_level} does not contain level {}",
                self.level
            )));
        }
        if new_level > MAX_LEVEL {
            return Err(Error::Input(format!(
                "cyclic level {new_level} outside 1..={MAX_LEVEL}"
            )));
        }
        let t = (new_level / self.level) as usize;
        let mut out = vec![BigInt::zero(); new_level as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i * t] = c.clone();
        }
        CyclotomicElement::new(new_level, &out)
    }

    /// The image under x -> 1: the sum of the coefficients.
    pub fn eval_at_one(&self) -> BigInt {
        self.coeffs.iter().sum()
    }

    fn residue_mod_cyclotomic(&self) -> Vec<BigInt> {
        poly_rem_monic(&self.coeffs, &cyclotomic_poly(self.level))
    }

    /// True when self and other evaluate to the same number at a primitive
    /// level-th root of unity.
    pub fn equal_as_cyclotomic(&self, other: &CyclotomicElement) -> Result<bool> {
        let diff = self.sub(other)?;
        Ok(diff.residue_mod_cyclotomic().iter().all(|c| c.is_zero()))
    }

    /// The rational integer this element equals at a primitive root, if it
    /// is rational at all.
    pub fn as_constant(&self) -> Option<BigInt> {
        let mut r = self.residue_mod_cyclotomic();
        if r.len() <= 1 {
            return Some(r.pop().unwrap_or_else(BigInt::zero));
        }
        if r[1..].iter().all(|c| c.is_zero()) {
            Some(r.swap_remove(0))
        } else {
            None
        }
    }
}

/// The product prod_{h in H} (1 - x^{a h}) at level m: the norm of
/// 1 - zeta_m^a down to the subfield fixed by the subgroup H of (Z/m)^*.
/// H must really be a subgroup so that the result is H-invariant.
pub fn cyclotomic_number(m: u64, a: u64, subgroup: &[u64]) -> Result<CyclotomicElement> {
    if m < 2 || m > MAX_LEVEL {
        return Err(Error::Input(format!("level {m} outside 2..={MAX_LEVEL}")));
    }
    if a % m == 0 {
        return Err(Error::Input(
            "exponent divisible by the level: 1 - zeta^a degenerates to 0".into(),
        ));
    }
    if subgroup.is_empty() {
        return Err(Error::Input("empty subgroup".into()));
    }
    let reduced: HashSet<u64> = subgroup.iter().map(|&h| h % m).collect();
    if reduced.len() != subgroup.len() {
        return Err(Error::Input("repeated subgroup elements".into()));
    }
    for &h in &reduced {
        if zarith::gcd(h, m) != 1 {
            return Err(Error::Input(format!("{h} is not a unit mod {m}")));
        }
    }
    if !reduced.contains(&1) {
        return Err(Error::Input("subgroup does not contain 1".into()));
    }
    for &x in &reduced {
        for &y in &reduced {
            if !reduced.contains(&(x * y % m)) {
                return Err(Error::Input(format!(
                    "set is not closed under multiplication: {x} * {y} escapes"
                )));
            }
        }
    }
    let mut out = CyclotomicElement::one(m)?;
    for &h in &reduced {
        out = out.mul_one_minus_power((a % m) * h % m);
    }
    out.check_growth()?;
    Ok(out)
}

fn split_field_data(d: i64, p: u64) -> Result<(DirichletCharacter, u64)> {
    let chi = quadratic_character(d)?;
    if !chi.is_even() {
        return Err(Error::Hypothesis(format!(
            "D = {d} is imaginary; the construction needs a real quadratic field"
        )));
    }
    if p < 3 || !padic::is_small_prime(p) {
        return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
    }
    let f = chi.modulus();
    if chi.value_quadratic(p) != 1 {
        return Err(Error::Hypothesis(format!(
            "p = {p} is inert or ramified for D = {d}: only split primes are supported"
        )));
    }
    Ok((chi, f))
}

/// Exponents in (Z/(f p^{n+1}))^* fixing the n-th tower layer: pairs of a
/// character-kernel unit mod f and a Teichmueller lift mod p^{n+1}.
fn tower_fixer(chi: &DirichletCharacter, f: u64, p: u64, n: u32) -> Vec<u64> {
    let pe = p.pow(n + 1);
    let torsion: Vec<u64> = (1..p).map(|w| zarith::pow_mod(w, p.pow(n), pe)).collect();
    let mut out = Vec::new();
    for u in 1..f {
        if chi.value_quadratic(u) != 1 {
            continue;
        }
        for &v in &torsion {
            out.push(zarith::crt(u, f, v, pe));
        }
    }
    out
}

/// A tower unit of the real quadratic field of discriminant D at the split
/// odd prime p, held as an exact fraction of two cyclic-convolution norms
/// at level f p^{n+1}. Numerator over denominator realizes the twist by
/// 1 - sigma that projects onto the nontrivial character eigenspace, and
/// is kept unexpanded because every downstream use is multiplicative.
#[derive(Debug, Clone)]
pub struct EtaUnit {
    disc: i64,
    conductor: u64,
    p: u64,
    level: u32,
    sigma: u64,
    num: CyclotomicElement,
    den: CyclotomicElement,
}

impl EtaUnit {
    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Tower layer n.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// The cyclic level f p^{n+1} the representation lives at.
    pub fn cyclotomic_level(&self) -> u64 {
        self.num.level()
    }

    pub fn numerator(&self) -> &CyclotomicElement {
        &self.num
    }

    pub fn denominator(&self) -> &CyclotomicElement {
        &self.den
    }

    /// The unit as an exact element of the quadratic field itself. Only the
    /// bottom layer lies in it; higher layers are refused.
    pub fn as_field_element(&self) -> Result<QuadraticUnitRep> {
        if self.level != 0 {
            return Err(Error::Input(format!(
                "layer {} of the tower leaves the quadratic field",
                self.level
            )));
        }
        unit_from_kernel_norm(&self.num, self.sigma, self.disc)
    }
}

/// Builds the layer-n tower unit exactly. Refuses non-split primes and
/// levels beyond the convolution budget.
pub fn eta(n: u32, d: i64, p: u64) -> Result<EtaUnit> {
    let (chi, f) = split_field_data(d, p)?;
    let pe = p
        .checked_pow(n + 1)
        .ok_or_else(|| Error::Input(format!("p^{} overflows", n + 1)))?;
    let m = f
        .checked_mul(pe)
        .filter(|&m| m <= MAX_LEVEL)
        .ok_or_else(|| {
            Error::Input(format!(
                "cyclic level f p^{} for D = {d} exceeds the exact convolution budget",
                n + 1
            ))
        })?;
    let fixer = tower_fixer(&chi, f, p, n);
    let num = cyclotomic_number(m, 1, &fixer)?;
    let s = (2..f)
        .find(|&u| chi.value_quadratic(u) == -1)
        .expect("a nontrivial character has a non-kernel unit");
    let sigma = zarith::crt(s, f, 1, pe);
    let den = num.galois(sigma)?;
    Ok(EtaUnit {
        disc: d,
        conductor: f,
        p,
        level: n,
        sigma,
        num,
        den,
    })
}

/// Checks that the norm from the upper tower layer to the lower one carries
/// the upper unit exactly onto the lower unit. The norm is the product of
/// Galois conjugates over 1-unit coset representatives; the comparison
/// cross-multiplies the two fractions and tests equality of cyclotomic
/// integers at the upper level.
pub fn norm_relation_holds(upper: &EtaUnit, lower: &EtaUnit) -> Result<bool> {
    if upper.disc != lower.disc || upper.p != lower.p {
        return Err(Error::Input(
            "norm relation needs the same field and prime on both sides".into(),
        ));
    }
    if upper.level <= lower.level {
        return Err(Error::Input(
            "the norm goes from a higher tower layer to a lower one".into(),
        ));
    }
    let p = upper.p;
    let f = upper.conductor;
    let pe_up = p.pow(upper.level + 1);
    let m_up = f * pe_up;
    let steps = p.pow(upper.level - lower.level);
    let gen = 1 + p.pow(lower.level + 1);
    let mut rep = 1u64;
    let mut norm_num = CyclotomicElement::one(m_up)?;
    let mut norm_den = CyclotomicElement::one(m_up)?;
    for _ in 0..steps {
        let g = zarith::crt(1, f, rep, pe_up);
        norm_num = norm_num.mul(&upper.num.galois(g)?)?;
        norm_den = norm_den.mul(&upper.den.galois(g)?)?;
        rep = rep * gen % pe_up;
    }
    let low_num = lower.num.include_to_level(m_up)?;
    let low_den = lower.den.include_to_level(m_up)?;
    let lhs = norm_num.mul(&low_den)?;
    let rhs = norm_den.mul(&low_num)?;
    lhs.equal_as_cyclotomic(&rhs)
}

/// A unit of the real quadratic field of discriminant D in exact
/// half-integer coordinates: the value is (a + b sqrt(D)) / 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticUnitRep {
    disc: i64,
    a: BigInt,
    b: BigInt,
}

impl QuadraticUnitRep {
    /// Validates that (a + b sqrt(D)) / 2 is an algebraic integer of the
    /// maximal order: for odd D the coordinates must share a parity, for
    /// even D the first must be even.
    pub fn new(disc: i64, a: BigInt, b: BigInt) -> Result<QuadraticUnitRep> {
        let ok = if disc % 2 == 0 {
            a.is_even()
        } else {
            a.is_even() == b.is_even()
        };
        if !ok {
            return Err(Error::Input(format!(
                "({a} + {b} sqrt({disc})) / 2 is not an algebraic integer"
            )));
        }
        Ok(QuadraticUnitRep { disc, a, b })
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    /// Field norm to Q, exact: (a^2 - D b^2) / 4.
    pub fn norm(&self) -> BigInt {
        let four_n = &self.a * &self.a - BigInt::from(self.disc) * &self.b * &self.b;
        debug_assert!((&four_n % BigInt::from(4)).is_zero());
        four_n / 4
    }

    pub fn is_plus_minus_one(&self) -> bool {
        self.b.is_zero() && self.a.magnitude() == &BigUint::from(2u32)
    }
}

/// Exact coordinates of a kernel-invariant cyclotomic integer inside the
/// quadratic field: trace t, norm nrm and root coefficient y >= 0 with the
/// element equal to (t + y sqrt(D)) / 2. Either choice of sign of y names
/// one of the two conjugate embeddings; taking y >= 0 keeps the result
/// deterministic, and every downstream quantity is conjugation-symmetric.
fn quadratic_parts(
    elt: &CyclotomicElement,
    sigma: u64,
    disc: i64,
) -> Result<(BigInt, BigInt, BigInt)> {
    let conj = elt.galois(sigma)?;
    let t = elt.add(&conj)?.as_constant().ok_or_else(|| {
        Error::Internal("trace of a kernel-invariant element is not rational".into())
    })?;
    let nrm = elt.mul(&conj)?.as_constant().ok_or_else(|| {
        Error::Internal("norm of a kernel-invariant element is not rational".into())
    })?;
    let delta = &t * &t - BigInt::from(4) * &nrm;
    let (q, r) = delta.div_rem(&BigInt::from(disc));
    if !r.is_zero() || q.is_negative() {
        return Err(Error::Internal(
            "discriminant of the quadratic element does not match the field".into(),
        ));
    }
    let y = q.magnitude().sqrt();
    if &(&y * &y) != q.magnitude() {
        return Err(Error::Internal(
            "root coefficient of the quadratic element is not integral".into(),
        ));
    }
    Ok((t, nrm, BigInt::from(y)))
}

/// Twists the kernel norm A into the unit A / sigma(A) = A^2 / N(A) and
/// returns it in exact half-integer coordinates, verifying norm 1.
fn unit_from_kernel_norm(
    a_elt: &CyclotomicElement,
    sigma: u64,
    disc: i64,
) -> Result<QuadraticUnitRep> {
    let (t, nrm, y) = quadratic_parts(a_elt, sigma, disc)?;
    if nrm.is_zero() {
        return Err(Error::Internal("kernel norm vanishes".into()));
    }
    // A = (t + y sqrt(D))/2, so A^2 = ((2 nrm + D y^2) + t y sqrt(D)) / 2
    // and the unit is A^2 / nrm; integrality of the division is forced by
    // the unit being an algebraic integer
    let a_num = BigInt::from(2) * &nrm + BigInt::from(disc) * &y * &y;
    let b_num = &t * &y;
    let (a, ra) = a_num.div_rem(&nrm);
    let (b, rb) = b_num.div_rem(&nrm);
    if !ra.is_zero() || !rb.is_zero() {
        return Err(Error::Internal(
            "twisted unit has non-integral coordinates".into(),
        ));
    }
    let rep = QuadraticUnitRep::new(disc, a, b)?;
    if rep.norm() != BigInt::one() {
        return Err(Error::Internal("twisted element is not a norm-one unit".into()));
    }
    Ok(rep)
}

/// The bottom circular unit taken at the conductor level itself: the
/// character-kernel norm of 1 - zeta_f, twisted into the nontrivial
/// eigenspace. Its local logarithm measures the bottom layer of the
/// circular-unit index, so it is returned in exact quadratic coordinates.
pub fn eta_base(d: i64, p: u64) -> Result<QuadraticUnitRep> {
    let (chi, f) = split_field_data(d, p)?;
    if f > MAX_LEVEL {
        return Err(Error::Input(format!(
            "conductor {f} exceeds the exact convolution budget"
        )));
    }
    let kernel: Vec<u64> = (1..f).filter(|&u| chi.value_quadratic(u) == 1).collect();
    let a_elt = cyclotomic_number(f, 1, &kernel)?;
    let sigma = (2..f)
        .find(|&u| chi.value_quadratic(u) == -1)
        .expect("a nontrivial character has a non-kernel unit");
    unit_from_kernel_norm(&a_elt, sigma, d)
}

/// Embeds a quadratic-field element into Z_p at one of the two primes
/// above the split prime p: sqrt(D) goes to the Hensel lift of the
/// smallest positive square root of D mod p. The conjugate prime is the
/// composite with conjugation, so this choice is a pure normalization.
pub fn embed_quadratic(u: &QuadraticUnitRep, p: u64, precision: u32) -> Result<PadicElement> {
    if p < 3 || !padic::is_small_prime(p) {
        return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
    }
    let dmod = u.disc.rem_euclid(p as i64) as u64;
    if dmod == 0 {
        return Err(Error::Hypothesis(format!(
            "p = {p} ramifies in the field of discriminant {}",
            u.disc
        )));
    }
    let r = (1..p).find(|&r| r * r % p == dmod).ok_or_else(|| {
        Error::Hypothesis(format!(
            "{} is not a square mod {p}: the prime is inert",
            u.disc
        ))
    })?;
    let root = padic::hensel_root(
        &[BigInt::from(-u.disc), BigInt::zero(), BigInt::one()],
        r,
        p,
        precision,
    )?;
    let a = PadicElement::integer(p, precision, &u.a);
    let b = PadicElement::integer(p, precision, &u.b);
    let half = PadicElement::integer(p, precision, &BigInt::from(2)).inverse()?;
    Ok(&(&a + &(&b * &root)) * &half)
}

/// Local image of a bottom-layer tower unit.
pub fn embed_eta_local(eta: &EtaUnit, precision: u32) -> Result<PadicElement> {
    embed_quadratic(&eta.as_field_element()?, eta.p, precision)
}

/// Order of the quotient of the local 1-units by the closure of the bottom
/// circular unit: p^(v-1), where v is the valuation of the local logarithm
/// of the Teichmueller-corrected image. The logarithm of a 1-unit has
/// valuation at least 1, and v is demanded to sit strictly inside the
/// certified precision so the order is exact.
pub fn b0_order(d: i64, p: u64, precision: u32) -> Result<BigUint> {
    let rep = eta_base(d, p)?;
    if rep.is_plus_minus_one() {
        return Err(Error::Hypothesis(
            "the bottom circular unit is trivial: the index degenerates".into(),
        ));
    }
    let image = embed_quadratic(&rep, p, precision)?;
    let lg = padic::padic_log_unit(&image)?;
    let v = match lg.valuation() {
        Valuation::Exact(v) => v,
        Valuation::AtLeast(_) => {
            return Err(Error::PrecisionExhausted(
                "local logarithm of the circular unit vanishes to working precision".into(),
            ))
        }
    };
    if v + 2 >= precision {
        return Err(Error::PrecisionExhausted(format!(
            "log valuation {v} is too close to the working precision {precision}"
        )));
    }
    debug_assert!(v >= 1);
    Ok(BigUint::from(p).pow(v - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::{tate_cohomology, GroupModule};
    use crate::lfunction::lp_at_one_log;
    use proptest::prelude::*;

    #[test]
    fn full_group_norm_is_the_level_for_prime_levels() {
        for q in [5u64, 7, 13] {
            let all: Vec<u64> = (1..q).collect();
            let n = cyclotomic_number(q, 1, &all).unwrap();
            assert_eq!(n.as_constant(), Some(BigInt::from(q)));
        }
    }

    #[test]
    fn trivial_subgroup_returns_the_binomial() {
        let e = cyclotomic_number(12, 5, &[1]).unwrap();
        let mut want = vec![BigInt::zero(); 12];
        want[0] = BigInt::one();
        want[5] = -BigInt::one();
        assert_eq!(e.coeffs(), &want[..]);
    }

    #[test]
    fn kernel_norm_at_level_twelve_matches_convolution_oracle() {
        let n = cyclotomic_number(12, 1, &[1, 11]).unwrap();
        // (1 - x)(1 - x^11) = 1 - x - x^11 + x^12 folds to 2 - x - x^11
        let mut want = vec![BigInt::zero(); 12];
        want[0] = BigInt::from(2);
        want[1] = -BigInt::one();
        want[11] = -BigInt::one();
        assert_eq!(n.coeffs(), &want[..]);
        assert_eq!(n.galois(11).unwrap(), n, "invariant under inversion");
    }

    #[test]
    fn cyclotomic_number_rejects_degenerate_input() {
        assert!(matches!(cyclotomic_number(12, 24, &[1]), Err(Error::Input(_))));
        assert!(matches!(cyclotomic_number(12, 1, &[1, 2]), Err(Error::Input(_))));
        assert!(matches!(
            cyclotomic_number(12, 1, &[1, 5, 7]),
            Err(Error::Input(_))
        ));
        assert!(matches!(cyclotomic_number(12, 1, &[5, 7]), Err(Error::Input(_))));
    }

    #[test]
    fn equality_sees_through_the_cyclic_rewriting() {
        // at a primitive 5th root the powers sum to zero
        let ones = CyclotomicElement::new(5, &vec![BigInt::one(); 5]).unwrap();
        assert_eq!(ones.as_constant(), Some(BigInt::zero()));
        // wraparound of exponents
        let a = CyclotomicElement::monomial(5, 3).unwrap();
        let b = CyclotomicElement::monomial(5, 4).unwrap();
        let c = CyclotomicElement::monomial(5, 2).unwrap();
        assert!(a.mul(&b).unwrap().equal_as_cyclotomic(&c).unwrap());
        // 1 + x + x^2 + x^3 + x^4 + (constant -5) is not zero at the root
        let shifted = ones
            .sub(&CyclotomicElement::constant(5, &BigInt::from(5)).unwrap())
            .unwrap();
        assert_eq!(shifted.as_constant(), Some(BigInt::from(-5)));
    }

    #[test]
    fn eta_gates_on_the_splitting_hypothesis() {
        // inert
        assert!(matches!(eta(0, 5, 3), Err(Error::Hypothesis(_))));
        assert!(matches!(eta(0, 40, 7), Err(Error::Hypothesis(_))));
        // ramified
        assert!(matches!(eta(0, 12, 3), Err(Error::Hypothesis(_))));
        // even prime
        assert!(matches!(eta(0, 13, 2), Err(Error::Hypothesis(_))));
        // imaginary field
        assert!(matches!(eta(0, -4, 3), Err(Error::Hypothesis(_))));
        // non-fundamental discriminant
        assert!(matches!(eta(0, 20, 3), Err(Error::Input(_))));
        // split cases construct
        assert!(eta(0, 13, 3).is_ok());
        assert!(eta(0, 40, 3).is_ok());
    }

    #[test]
    fn bottom_layer_units_have_norm_one() {
        for (d, p) in [(13i64, 3u64), (229, 3), (44, 5)] {
            // at a split prime the bottom tower unit collapses to 1: the
            // norm down from the p-divisible level inserts the factor
            // (1 - zeta_f^p)/(1 - zeta_f), whose kernel norm cancels
            let e = eta(0, d, p).unwrap();
            let rep = e.as_field_element().unwrap();
            assert_eq!(rep.norm(), BigInt::one(), "D = {d}");
            assert!(rep.is_plus_minus_one(), "D = {d}");
            assert_eq!(rep.a(), &BigInt::from(2), "D = {d}");
            // the conductor-level unit does not degenerate
            let base = eta_base(d, p).unwrap();
            assert_eq!(base.norm(), BigInt::one(), "D = {d}");
            assert!(!base.is_plus_minus_one(), "D = {d}");
        }
        // deeper layers leave the quadratic field
        assert!(matches!(
            eta(1, 13, 3).unwrap().as_field_element(),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn norm_relations_hold_down_the_tower() {
        for (d, p, n_top) in [(13i64, 3u64, 2u32), (28, 3, 2), (44, 5, 1)] {
            let units: Vec<EtaUnit> = (0..=n_top).map(|n| eta(n, d, p).unwrap()).collect();
            for hi in 1..=n_top as usize {
                for lo in 0..hi {
                    assert!(
                        norm_relation_holds(&units[hi], &units[lo]).unwrap(),
                        "D = {d}, p = {p}, {hi} -> {lo}"
                    );
                }
            }
        }
    }

    #[test]
    fn norm_relation_for_the_large_conductor_case() {
        let e1 = eta(1, 229, 3).unwrap();
        let e0 = eta(0, 229, 3).unwrap();
        assert!(norm_relation_holds(&e1, &e0).unwrap());
    }

    #[test]
    fn norm_relation_validates_its_arguments() {
        let e1 = eta(1, 13, 3).unwrap();
        let e0 = eta(0, 13, 3).unwrap();
        assert!(matches!(
            norm_relation_holds(&e0, &e1),
            Err(Error::Input(_))
        ));
        let other = eta(0, 28, 3).unwrap();
        assert!(matches!(
            norm_relation_holds(&e1, &other),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn embedding_fixes_rational_numbers() {
        let rat = QuadraticUnitRep::new(13, BigInt::from(14), BigInt::zero()).unwrap();
        let img = embed_quadratic(&rat, 3, 6).unwrap();
        assert_eq!(img, PadicElement::integer(3, 6, &BigInt::from(7)));
    }

    #[test]
    fn embedded_unit_is_a_local_unit_and_conjugation_inverts_it() {
        let rep = eta_base(229, 3).unwrap();
        let img = embed_quadratic(&rep, 3, 8).unwrap();
        assert_eq!(img.valuation(), Valuation::Exact(0));

        // the conjugate embedding sends sqrt(D) to the other root, i.e. it
        // embeds the conjugate unit; the two images must multiply to 1
        let conj = QuadraticUnitRep::new(229, rep.a().clone(), -rep.b().clone()).unwrap();
        let img_conj = embed_quadratic(&conj, 3, 8).unwrap();
        assert_eq!(&img * &img_conj, PadicElement::one(3, 8));
    }

    #[test]
    fn embedding_refuses_inert_and_ramified_primes() {
        let rep = QuadraticUnitRep::new(13, BigInt::from(11), BigInt::from(3)).unwrap();
        assert!(matches!(embed_quadratic(&rep, 5, 6), Err(Error::Hypothesis(_))));
        assert!(matches!(embed_quadratic(&rep, 13, 6), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn bottom_index_orders_match_the_lvalue_valuations() {
        for (d, p, want) in [(13i64, 3u64, 1u32), (229, 3, 3), (44, 5, 1)] {
            let order = b0_order(d, p, 10).unwrap();
            assert_eq!(order, BigUint::from(want), "D = {d}, p = {p}");

            let chi = quadratic_character(d).unwrap();
            let lp = lp_at_one_log(&chi, p, 8).unwrap();
            let v = lp.valuation().expect_exact("L-value valuation").unwrap();
            assert_eq!(
                order,
                BigUint::from(p).pow(v),
                "index order vs L-value p-part, D = {d}"
            );
        }
    }

    #[test]
    fn tower_unit_modules_have_the_pinned_cohomology() {
        // the bottom unit generates a trivial module, the layer-n unit an
        // augmentation-ideal module; their nonvanishing cohomology is cyclic
        // of order p^(n-m) and the complementary degrees vanish
        let p = 3u64;
        for (n, m) in [(1u32, 0u32), (2, 0), (2, 1), (3, 0)] {
            let size = BigUint::from(p).pow(n - m);
            let bottom = GroupModule::trivial(p, 9, n).unwrap();
            let h0 = tate_cohomology(0, &bottom, m).unwrap();
            assert!(h0.is_cyclic_of(&size), "trivial H^0, n = {n}, m = {m}");
            let hm1 = tate_cohomology(-1, &bottom, m).unwrap();
            assert!(hm1.is_trivial(), "trivial H^-1, n = {n}, m = {m}");

            let layer = GroupModule::augmentation_ideal(p, 9, n).unwrap();
            let h0 = tate_cohomology(0, &layer, m).unwrap();
            assert!(h0.is_trivial(), "augmentation H^0, n = {n}, m = {m}");
            let hm1 = tate_cohomology(-1, &layer, m).unwrap();
            assert!(hm1.is_cyclic_of(&size), "augmentation H^-1, n = {n}, m = {m}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn convolution_ring_laws(
            level in 2u64..24,
            xs in proptest::collection::vec(-6i64..=6, 24),
            ys in proptest::collection::vec(-6i64..=6, 24),
            a in 1u64..24,
        ) {
            let take = |v: &[i64]| -> Vec<BigInt> {
                (0..level as usize).map(|i| BigInt::from(v[i])).collect()
            };
            let x = CyclotomicElement::new(level, &take(&xs)).unwrap();
            let y = CyclotomicElement::new(level, &take(&ys)).unwrap();
            prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
            // evaluation at 1 is a ring homomorphism
            prop_assert_eq!(
                x.mul(&y).unwrap().eval_at_one(),
                x.eval_at_one() * y.eval_at_one()
            );
            // the Galois action is a ring automorphism when defined
            if zarith::gcd(a % level, level) == 1 {
                let lhs = x.mul(&y).unwrap().galois(a).unwrap();
                let rhs = x.galois(a).unwrap().mul(&y.galois(a).unwrap()).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
