//! Truncated arithmetic in the one-variable Iwasawa algebra and orders of
//! its finite quotients.
//!
//! Elements are polynomials over Z/p^K cut at a fixed degree bound N, read
//! as approximations to power series in T = gamma_0 - 1. The layer
//! polynomials omega_n = (1+T)^(p^n) - 1 and the ratios
//! nu_(n,m) = omega_n / omega_m generate the relation ideals of the tower;
//! a quotient by an ideal containing some omega_n is finitely presented on
//! the power basis of rank p^n, and its order falls out of a Smith
//! reduction of stacked multiplication matrices.

use crate::cohomology::{mult_matrix, omega_tail, GroupModule};
use crate::linalg::{max_precision, PkMat};
use crate::padic::is_small_prime;
use crate::zarith::inv_mod;
use crate::{tate_cohomology, Error, FiniteAbelianGroup, Result};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::ToPrimitive;
use std::fmt;

/// Largest power basis this module will build matrices over.
const MAX_BASIS: u64 = 1 << 16;

/// Polynomial over Z/p^K with degrees below a fixed bound N, i.e. an
/// element of (Z/p^K)[T]/(T^N).
///
/// Products are truncated at T^N, so the bound must be chosen with the
/// intended degrees in mind; `omega` and `nu` refuse bounds that cannot
/// hold their exact coefficients.
#[derive(Debug, Clone)]
pub struct IwasawaPoly {
    p: u64,
    k: u32,
    bound: usize,
    // ascending coefficients, trimmed, entries reduced mod p^k
    coeffs: Vec<u64>,
}

/// Equality compares the coefficient ring and the coefficients; the degree
/// bound is a capacity, not part of the value.
impl PartialEq for IwasawaPoly {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k && self.coeffs == other.coeffs
    }
}

impl Eq for IwasawaPoly {}

fn validate_ring(p: u64, k: u32, bound: usize) -> Result<()> {
    if p < 3 || !is_small_prime(p) {
        return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
    }
    let w = max_precision(p);
    if k == 0 || k > w {
        return Err(Error::Input(format!(
            "precision K = {k} outside the supported range 1..={w} for p = {p}"
        )));
    }
    if bound == 0 || bound > (1 << 20) {
        return Err(Error::Input(format!(
            "degree bound {bound} outside the supported range 1..={}",
            1 << 20
        )));
    }
    Ok(())
}

fn valuation_u64(p: u64, k: u32, c: u64) -> u32 {
    if c == 0 {
        return k;
    }
    let mut c = c;
    let mut v = 0;
    while c % p == 0 {
        c /= p;
        v += 1;
    }
    v
}

impl IwasawaPoly {
    fn pk(&self) -> u64 {
        self.p.pow(self.k)
    }

    fn trim(coeffs: &mut Vec<u64>) {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
    }

    fn from_raw(p: u64, k: u32, bound: usize, mut coeffs: Vec<u64>) -> IwasawaPoly {
        Self::trim(&mut coeffs);
        IwasawaPoly { p, k, bound, coeffs }
    }

    /// Builds a polynomial from ascending integer coefficients, reducing
    /// them mod p^K.
    pub fn new(p: u64, k: u32, bound: usize, coeffs: &[BigInt]) -> Result<IwasawaPoly> {
        validate_ring(p, k, bound)?;
        if coeffs.len() > bound {
            return Err(Error::Input(format!(
                "{} coefficients exceed the degree bound {bound}",
                coeffs.len()
            )));
        }
        let pk = BigInt::from(p.pow(k));
        let reduced = coeffs
            .iter()
            .map(|c| c.mod_floor(&pk).to_u64().expect("residue fits in u64"))
            .collect();
        Ok(Self::from_raw(p, k, bound, reduced))
    }

    /// Convenience constructor from small ascending integer coefficients.
    pub fn from_i64(p: u64, k: u32, bound: usize, coeffs: &[i64]) -> Result<IwasawaPoly> {
        let big: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
        Self::new(p, k, bound, &big)
    }

    /// Builds a polynomial from ascending residues already reduced mod p^K.
    pub fn from_residues(p: u64, k: u32, bound: usize, residues: &[u64]) -> Result<IwasawaPoly> {
        validate_ring(p, k, bound)?;
        if residues.len() > bound {
            return Err(Error::Input(format!(
                "{} coefficients exceed the degree bound {bound}",
                residues.len()
            )));
        }
        let pk = p.pow(k);
        Ok(Self::from_raw(
            p,
            k,
            bound,
            residues.iter().map(|&c| c % pk).collect(),
        ))
    }

    pub fn zero(p: u64, k: u32, bound: usize) -> Result<IwasawaPoly> {
        Self::from_residues(p, k, bound, &[])
    }

    pub fn one(p: u64, k: u32, bound: usize) -> Result<IwasawaPoly> {
        Self::from_residues(p, k, bound, &[1])
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.k
    }

    pub fn degree_bound(&self) -> usize {
        self.bound
    }

    /// Ascending coefficients with trailing zeros trimmed.
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Coefficient of T^i as a residue mod p^K, zero beyond the stored
    /// degree.
    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the residue representative, None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn constant_term(&self) -> u64 {
        self.coeff(0)
    }

    /// p-adic valuation of the constant term, saturating at K when the
    /// residue vanishes.
    pub fn constant_term_valuation(&self) -> u32 {
        valuation_u64(self.p, self.k, self.constant_term())
    }

    /// True when the polynomial is invertible in (Z/p^K)[T]/(T^N), i.e.
    /// its constant term is a unit mod p.
    pub fn is_unit(&self) -> bool {
        self.constant_term() % self.p != 0
    }

    /// True when the leading coefficient is a unit and every lower
    /// coefficient is divisible by p. Unit constants count as the
    /// degree-zero case.
    pub fn is_distinguished(&self) -> bool {
        let Some(d) = self.degree() else {
            return false;
        };
        self.coeffs[d] % self.p != 0 && self.coeffs[..d].iter().all(|&c| c % self.p == 0)
    }

    fn check_same_ring(&self, other: &IwasawaPoly) -> Result<()> {
        if self.p != other.p || self.k != other.k {
            return Err(Error::Input(format!(
                "mixed coefficient rings: Z/{}^{} vs Z/{}^{}",
                self.p, self.k, other.p, other.k
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &IwasawaPoly) -> Result<IwasawaPoly> {
        self.check_same_ring(other)?;
        let pk = self.pk();
        let len = self.coeffs.len().max(other.coeffs.len());
        let sum = (0..len)
            .map(|i| (self.coeff(i) + other.coeff(i)) % pk)
            .collect();
        Ok(Self::from_raw(
            self.p,
            self.k,
            self.bound.max(other.bound),
            sum,
        ))
    }

    pub fn sub(&self, other: &IwasawaPoly) -> Result<IwasawaPoly> {
        self.check_same_ring(other)?;
        let pk = self.pk();
        let len = self.coeffs.len().max(other.coeffs.len());
        let diff = (0..len)
            .map(|i| (self.coeff(i) + pk - other.coeff(i)) % pk)
            .collect();
        Ok(Self::from_raw(
            self.p,
            self.k,
            self.bound.max(other.bound),
            diff,
        ))
    }

    /// Product truncated below the larger of the two degree bounds.
    pub fn mul(&self, other: &IwasawaPoly) -> Result<IwasawaPoly> {
        self.check_same_ring(other)?;
        let bound = self.bound.max(other.bound);
        if self.is_zero() || other.is_zero() {
            return Ok(Self::from_raw(self.p, self.k, bound, Vec::new()));
        }
        let pk = self.pk() as u128;
        let len = (self.coeffs.len() + other.coeffs.len() - 1).min(bound);
        let mut buf = vec![0u128; len];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 || i >= len {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                buf[i + j] = (buf[i + j] + a as u128 * b as u128) % pk;
            }
        }
        Ok(Self::from_raw(
            self.p,
            self.k,
            bound,
            buf.iter().map(|&c| c as u64).collect(),
        ))
    }

    fn div_rem(&self, divisor: &IwasawaPoly) -> Result<(IwasawaPoly, IwasawaPoly)> {
        self.check_same_ring(divisor)?;
        let Some(dd) = divisor.degree() else {
            return Err(Error::Input("division by zero polynomial".into()));
        };
        let pk = self.pk();
        let Some(linv) = inv_mod(divisor.coeffs[dd], pk) else {
            return Err(Error::Input(
                "divisor leading coefficient is not a unit".into(),
            ));
        };
        let bound = self.bound.max(divisor.bound);
        let n = match self.degree() {
            Some(n) if n >= dd => n,
            _ => {
                return Ok((
                    Self::from_raw(self.p, self.k, bound, Vec::new()),
                    self.clone(),
                ))
            }
        };
        let mut rem = self.coeffs.clone();
        let mut quo = vec![0u64; n - dd + 1];
        for i in (0..=n - dd).rev() {
            let c = ((rem[dd + i] as u128 * linv as u128) % pk as u128) as u64;
            quo[i] = c;
            if c == 0 {
                continue;
            }
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                let t = (c as u128 * dc as u128) % pk as u128;
                rem[i + j] = ((rem[i + j] as u128 + pk as u128 - t) % pk as u128) as u64;
            }
        }
        Ok((
            Self::from_raw(self.p, self.k, bound, quo),
            Self::from_raw(self.p, self.k, bound, rem),
        ))
    }

    /// Quotient by a divisor with unit leading coefficient; the division
    /// must be exact at working precision.
    pub fn div_exact(&self, divisor: &IwasawaPoly) -> Result<IwasawaPoly> {
        let (q, r) = self.div_rem(divisor)?;
        if !r.is_zero() {
            return Err(Error::Input(
                "division is not exact at working precision".into(),
            ));
        }
        Ok(q)
    }

    /// Evaluation at an integer point, as a residue mod p^K.
    pub fn eval(&self, x: i64) -> u64 {
        let pk = self.pk();
        let xr = BigInt::from(x)
            .mod_floor(&BigInt::from(pk))
            .to_u64()
            .expect("residue fits in u64");
        let mut acc: u64 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = ((acc as u128 * xr as u128 + c as u128) % pk as u128) as u64;
        }
        acc
    }
}

impl fmt::Display for IwasawaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => write!(f, "T")?,
                (1, c) => write!(f, "{c}*T")?,
                (i, 1) => write!(f, "T^{i}")?,
                (i, c) => write!(f, "{c}*T^{i}")?,
            }
        }
        Ok(())
    }
}

/// The layer polynomial omega_n = (1+T)^(p^n) - 1, with exact binomial
/// coefficients reduced mod p^K.
pub fn omega(p: u64, k: u32, bound: usize, n: u32) -> Result<IwasawaPoly> {
    validate_ring(p, k, bound)?;
    let g = basis_size(p, n)?;
    if g >= bound as u64 {
        return Err(Error::Input(format!(
            "degree bound {bound} cannot hold omega_{n} of degree {g}"
        )));
    }
    let g = g as usize;
    let pk = p.pow(k);
    // Pascal triangle row p^n mod p^K
    let mut row = vec![0u64; g + 1];
    row[0] = 1 % pk;
    for _ in 0..g {
        for j in (1..=g).rev() {
            row[j] = (row[j] + row[j - 1]) % pk;
        }
    }
    row[0] = 0;
    Ok(IwasawaPoly::from_raw(p, k, bound, row))
}

/// The ratio nu_(n,m) = omega_n / omega_m for n >= m >= 0; the division is
/// exact. Its constant term is p^(n-m).
pub fn nu(p: u64, k: u32, bound: usize, n: u32, m: u32) -> Result<IwasawaPoly> {
    if m > n {
        return Err(Error::Input(format!(
            "tower levels must satisfy n >= m, got n = {n}, m = {m}"
        )));
    }
    if m == n {
        return IwasawaPoly::one(p, k, bound);
    }
    let top = omega(p, k, bound, n)?;
    let bot = omega(p, k, bound, m)?;
    let q = top.div_exact(&bot)?;
    debug_assert_eq!(q.constant_term_valuation().min(k), (n - m).min(k));
    Ok(q)
}

fn basis_size(p: u64, level: u32) -> Result<u64> {
    let mut g: u64 = 1;
    for _ in 0..level {
        g = g.checked_mul(p).filter(|&g| g <= MAX_BASIS).ok_or_else(|| {
            Error::Input(format!(
                "power basis of rank p^{level} exceeds the supported size {MAX_BASIS}"
            ))
        })?;
    }
    Ok(g)
}

/// Coefficients of f reduced mod omega, on the power basis 1..T^(g-1).
/// `tail` is the reduction of T^g.
fn reduce_mod_omega(f: &IwasawaPoly, g: usize, tail: &[u64]) -> Vec<u64> {
    let pk = f.pk() as u128;
    let len = f.coeffs.len().max(g);
    let mut buf: Vec<u128> = vec![0; len];
    for (i, &c) in f.coeffs.iter().enumerate() {
        buf[i] = c as u128;
    }
    for d in (g..len).rev() {
        let c = buf[d];
        if c == 0 {
            continue;
        }
        buf[d] = 0;
        for i in 1..g {
            if tail[i] != 0 {
                buf[d - g + i] = (buf[d - g + i] + c * tail[i] as u128) % pk;
            }
        }
    }
    buf[..g].iter().map(|&c| c as u64).collect()
}

/// Order of a quotient by an ideal, as resolved at working precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotientOrder {
    /// The quotient is finite with this exact order.
    Finite(BigUint),
    /// The relation lattice is rank deficient mod p^K: the quotient is
    /// infinite, or finite of order at least p^K.
    InfiniteAtPrecision,
}

impl QuotientOrder {
    pub fn is_finite(&self) -> bool {
        matches!(self, QuotientOrder::Finite(_))
    }
}

fn uniform_ring(ideal: &[IwasawaPoly]) -> Result<(u64, u32)> {
    let first = ideal
        .first()
        .ok_or_else(|| Error::Input("empty generator list".into()))?;
    for f in ideal {
        first.check_same_ring(f)?;
    }
    Ok((first.p, first.k))
}

fn stacked_relation_matrices(
    ideal: &[IwasawaPoly],
    p: u64,
    k: u32,
    g: usize,
    tail: &[u64],
) -> Vec<PkMat> {
    let mut blocks = Vec::new();
    for f in ideal {
        let v = reduce_mod_omega(f, g, tail);
        if v.iter().any(|&c| c != 0) {
            blocks.push(mult_matrix(&v, tail, p, k));
        }
    }
    blocks
}

/// Order of Lambda / (ideal + (omega_n)), computed on the power basis of
/// rank p^n by Smith reduction of the stacked multiplication matrices of
/// the generators.
///
/// Finite orders of at least p^(K-2) are refused: that close to the
/// working precision the elementary divisors are no longer certified.
pub fn quotient_order(ideal: &[IwasawaPoly], omega_level: u32) -> Result<QuotientOrder> {
    let (p, k) = uniform_ring(ideal)?;
    if k < 3 {
        return Err(Error::Input(format!(
            "precision K = {k} is too shallow to certify an order, need K >= 3"
        )));
    }
    let g = basis_size(p, omega_level)? as usize;
    let tail = omega_tail(p, k, g);
    let blocks = stacked_relation_matrices(ideal, p, k, g, &tail);
    if blocks.is_empty() {
        // the ideal vanishes mod omega, the quotient is free of rank p^n
        return Ok(QuotientOrder::InfiniteAtPrecision);
    }
    let refs: Vec<&PkMat> = blocks.iter().collect();
    let snf = PkMat::hstack(&refs).snf(false, false);
    let mut sum: u64 = 0;
    for j in 0..g {
        let v = snf.vals.get(j).copied().unwrap_or(k);
        if v >= k {
            return Ok(QuotientOrder::InfiniteAtPrecision);
        }
        sum += v as u64;
    }
    if sum >= (k - 2) as u64 {
        return Err(Error::PrecisionExhausted(format!(
            "quotient order p^{sum} reaches the certification bound p^{}",
            k - 2
        )));
    }
    Ok(QuotientOrder::Finite(BigUint::from(p).pow(sum as u32)))
}

/// Whether f generates, together with nu_(n,0) = omega_n/T, an ideal of
/// finite index in Lambda at working precision.
///
/// Equivalently, f has no common zero with omega_n/T that the precision
/// can see. Precision exhaustion propagates as an error: the answer is
/// indeterminate rather than false.
pub fn coprimality_check(f: &IwasawaPoly, omega_level: u32) -> Result<bool> {
    if f.is_zero() {
        return Err(Error::Input("zero polynomial has no coprimality".into()));
    }
    let g = basis_size(f.p, omega_level)?;
    let nu_n = nu(f.p, f.k, g as usize + 2, omega_level, 0)?;
    match quotient_order(&[f.clone(), nu_n], omega_level)? {
        QuotientOrder::Finite(_) => Ok(true),
        QuotientOrder::InfiniteAtPrecision => Ok(false),
    }
}

/// A quotient of Lambda by an ideal containing omega_n, carried as a
/// module over the layer group of level n with gamma_0 acting as
/// multiplication by 1 + T.
#[derive(Debug, Clone)]
pub struct LambdaQuotientModule {
    omega_level: u32,
    ideal: Vec<IwasawaPoly>,
    module: GroupModule,
}

impl LambdaQuotientModule {
    /// Presents Lambda / (ideal + (omega_n)) on the power basis of rank
    /// p^n. The generators are reduced mod omega_n and contribute their
    /// multiplication matrices as relation columns, so the module order
    /// equals `quotient_order` of the same data.
    pub fn new(omega_level: u32, ideal: Vec<IwasawaPoly>) -> Result<LambdaQuotientModule> {
        let (p, k) = uniform_ring(&ideal)?;
        let g = basis_size(p, omega_level)? as usize;
        let tail = omega_tail(p, k, g);
        let blocks = stacked_relation_matrices(&ideal, p, k, g, &tail);
        let mut rels: Vec<Vec<BigInt>> = Vec::new();
        for b in &blocks {
            for j in 0..g {
                rels.push(b.col(j).iter().map(|&c| BigInt::from(c)).collect());
            }
        }
        let module = GroupModule::from_omega_basis(p, k, omega_level, rels)?;
        Ok(LambdaQuotientModule {
            omega_level,
            ideal,
            module,
        })
    }

    pub fn omega_level(&self) -> u32 {
        self.omega_level
    }

    pub fn ideal(&self) -> &[IwasawaPoly] {
        &self.ideal
    }

    pub fn group_module(&self) -> &GroupModule {
        &self.module
    }

    /// Order of the underlying abelian group, as resolved at precision.
    pub fn order(&self) -> Result<QuotientOrder> {
        quotient_order(&self.ideal, self.omega_level)
    }
}

/// Tate cohomology of the layer subgroup of level m on the tower module
/// Lambda / (f, omega_n/T).
///
/// Requires n > m and f coprime to omega_n/T at working precision. Once
/// p^(n-m) is at least p^(v+1), where v is the valuation of f(0), both
/// degrees are cyclic of order p^v, matching the level zero closed form.
pub fn bn_model_cohomology(
    f: &IwasawaPoly,
    n: u32,
    m: u32,
    q: i64,
) -> Result<FiniteAbelianGroup> {
    if m >= n {
        return Err(Error::Input(format!(
            "tower levels must satisfy n > m, got n = {n}, m = {m}"
        )));
    }
    if !coprimality_check(f, n)? {
        return Err(Error::Hypothesis(format!(
            "polynomial shares a zero with omega_{n}/T at precision, the tower module is not finite"
        )));
    }
    let g = basis_size(f.p, n)?;
    let nu_n = nu(f.p, f.k, g as usize + 2, n, 0)?;
    let model = LambdaQuotientModule::new(n, vec![f.clone(), nu_n])?;
    tate_cohomology(q, model.group_module(), m)
}

/// The level zero closed form Z_p / f(0), as a finite cyclic p-group.
///
/// Refused when f(0) vanishes to within two digits of the working
/// precision, since the valuation is then not certified.
pub fn b0_model(f: &IwasawaPoly) -> Result<FiniteAbelianGroup> {
    let v = f.constant_term_valuation();
    if v + 2 >= f.k {
        return Err(Error::PrecisionExhausted(format!(
            "constant term has valuation {v} at precision K = {}",
            f.k
        )));
    }
    Ok(FiniteAbelianGroup::from_p_exponents(f.p, &[v]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zarith::{big_valuation, pow_mod};
    use num_traits::{One, Zero};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(p: u64, k: u32, coeffs: &[i64]) -> IwasawaPoly {
        IwasawaPoly::from_i64(p, k, 1 << 12, coeffs).unwrap()
    }

    #[test]
    fn omega_and_nu_small_cases() {
        let w0 = omega(3, 9, 8, 0).unwrap();
        assert_eq!(w0.coeffs(), &[0, 1]);
        assert_eq!(w0.to_string(), "T");

        let w1 = omega(3, 9, 8, 1).unwrap();
        assert_eq!(w1.coeffs(), &[0, 3, 3, 1]);
        assert_eq!(w1.to_string(), "T^3 + 3*T^2 + 3*T");

        // omega_2 evaluates as (1+x)^9 - 1
        let w2 = omega(3, 9, 16, 2).unwrap();
        assert_eq!(w2.degree(), Some(9));
        for x in [0i64, 1, 2, 5] {
            let expect = (pow_mod((1 + x) as u64, 9, 3u64.pow(9)) + 3u64.pow(9) - 1) % 3u64.pow(9);
            assert_eq!(w2.eval(x), expect);
        }

        // nu constant terms are p^(n-m)
        for (p, k, n, m) in [(3, 9, 1, 0), (3, 9, 2, 0), (3, 9, 2, 1), (3, 9, 3, 1), (5, 10, 2, 1)]
        {
            let bound = (p as usize).pow(n) + 2;
            let v = nu(p, k, bound, n, m).unwrap();
            assert_eq!(v.constant_term(), p.pow(n - m) % p.pow(k));
        }
        assert!(nu(3, 9, 8, 1, 1).unwrap().is_unit());
        assert_eq!(nu(3, 9, 8, 1, 1).unwrap().coeffs(), &[1]);

        // the bound must hold the full degree
        assert!(matches!(omega(3, 9, 9, 2), Err(Error::Input(_))));
        assert!(omega(3, 9, 10, 2).is_ok());
    }

    #[test]
    fn division_is_exact_or_rejected() {
        let w1 = omega(3, 12, 40, 1).unwrap();
        let w2 = omega(3, 12, 40, 2).unwrap();
        let n21 = nu(3, 12, 40, 2, 1).unwrap();
        assert_eq!(n21.mul(&w1).unwrap(), w2);

        let n20 = nu(3, 12, 40, 2, 0).unwrap();
        let t = poly(3, 12, &[0, 1]);
        assert_eq!(n20.mul(&t).unwrap(), w2);

        // remainder must vanish
        let not_root = poly(3, 12, &[-1, 1]);
        assert!(matches!(w2.div_exact(&not_root), Err(Error::Input(_))));

        // divisor leading coefficient must be a unit
        let bad = poly(3, 12, &[1, 3]);
        assert!(matches!(w2.div_exact(&bad), Err(Error::Input(_))));
    }

    #[test]
    fn distinguished_and_unit_flags() {
        assert!(poly(3, 9, &[-3, 1]).is_distinguished());
        assert!(!poly(3, 9, &[-3, 1]).is_unit());
        assert!(!poly(3, 9, &[-1, 1]).is_distinguished());
        assert!(poly(3, 9, &[-1, 1]).is_unit());
        assert!(omega(3, 9, 8, 1).unwrap().is_distinguished());
        assert!(poly(3, 9, &[2]).is_distinguished());
        assert!(!poly(3, 9, &[3]).is_distinguished());
        assert!(!poly(3, 9, &[]).is_distinguished());
        assert!(!poly(3, 9, &[0, 3, 1, 6]).is_distinguished());
    }

    #[test]
    fn quotient_order_small_examples() {
        // (p^2, T) cuts out Z/p^2
        let i1 = vec![poly(3, 9, &[9]), poly(3, 9, &[0, 1])];
        assert_eq!(
            quotient_order(&i1, 1).unwrap(),
            QuotientOrder::Finite(BigUint::from(9u32))
        );

        // (T - 3, omega_2/T): evaluation at T = 3 has valuation 2
        let i2 = vec![poly(3, 16, &[-3, 1]), nu(3, 16, 12, 2, 0).unwrap()];
        assert_eq!(
            quotient_order(&i2, 2).unwrap(),
            QuotientOrder::Finite(BigUint::from(9u32))
        );

        // the unit ideal
        let i3 = vec![poly(3, 9, &[1])];
        assert_eq!(
            quotient_order(&i3, 2).unwrap(),
            QuotientOrder::Finite(BigUint::one())
        );

        // a principal ideal with infinite quotient
        let i4 = vec![nu(3, 9, 12, 2, 0).unwrap()];
        assert_eq!(
            quotient_order(&i4, 2).unwrap(),
            QuotientOrder::InfiniteAtPrecision
        );

        // the zero ideal
        let i5 = vec![poly(3, 9, &[])];
        assert_eq!(
            quotient_order(&i5, 1).unwrap(),
            QuotientOrder::InfiniteAtPrecision
        );

        assert!(matches!(quotient_order(&[], 1), Err(Error::Input(_))));
        let mixed = vec![poly(3, 9, &[1]), poly(3, 10, &[1])];
        assert!(matches!(quotient_order(&mixed, 1), Err(Error::Input(_))));

        // shallow precision refuses a nontrivial order
        let i6 = vec![poly(3, 3, &[-3, 1]), nu(3, 3, 12, 2, 0).unwrap()];
        assert!(matches!(
            quotient_order(&i6, 2),
            Err(Error::PrecisionExhausted(_))
        ));
    }

    // Exact integer resultant via the Sylvester matrix and fraction free
    // elimination, used as an independent oracle for quotient orders.

    fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
        let n = a.len();
        if n == 0 {
            return BigInt::one();
        }
        let mut denom = BigInt::one();
        for c in 0..n - 1 {
            if a[c][c].is_zero() {
                let Some(r) = (c + 1..n).find(|&r| !a[r][c].is_zero()) else {
                    return BigInt::zero();
                };
                a.swap(c, r);
                // negating the moved row cancels the sign of the swap
                for x in a[c].iter_mut() {
                    *x = -x.clone();
                }
            }
            for r in c + 1..n {
                for j in c + 1..n {
                    let t = (&a[r][j] * &a[c][c] - &a[r][c] * &a[c][j]) / &denom;
                    a[r][j] = t;
                }
                a[r][c] = BigInt::zero();
            }
            denom = a[c][c].clone();
        }
        a[n - 1][n - 1].clone()
    }

    fn sylvester_resultant(f: &[BigInt], g: &[BigInt]) -> BigInt {
        let d1 = f.len() - 1;
        let d2 = g.len() - 1;
        let n = d1 + d2;
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for i in 0..d2 {
            for (j, c) in f.iter().rev().enumerate() {
                m[i][i + j] = c.clone();
            }
        }
        for i in 0..d1 {
            for (j, c) in g.iter().rev().enumerate() {
                m[d2 + i][i + j] = c.clone();
            }
        }
        bareiss_det(m)
    }

    fn integer_nu(p: u64, n: u32) -> Vec<BigInt> {
        let g = p.pow(n) as usize;
        let mut row = vec![BigInt::zero(); g + 1];
        row[0] = BigInt::one();
        for _ in 0..g {
            for j in (1..=g).rev() {
                let t = &row[j] + &row[j - 1];
                row[j] = t;
            }
        }
        row[1..].to_vec()
    }

    #[test]
    fn quotient_order_matches_resultant_valuation() {
        let fs: Vec<Vec<i64>> = vec![
            vec![-3, 1],
            vec![-9, 1],
            vec![-1, 1],
            vec![3, 9, 1],
            vec![9, 3, 1],
            vec![-6, 1],
        ];
        for n in 1..=3u32 {
            let nu_int = integer_nu(3, n);
            for fc in &fs {
                let f_int: Vec<BigInt> = fc.iter().map(|&c| BigInt::from(c)).collect();
                let res = sylvester_resultant(&f_int, &nu_int);
                assert!(!res.is_zero());
                let v = big_valuation(res.magnitude(), 3);

                let f = poly(3, 16, fc);
                let ideal = vec![f, nu(3, 16, 3usize.pow(n) + 2, n, 0).unwrap()];
                assert_eq!(
                    quotient_order(&ideal, n).unwrap(),
                    QuotientOrder::Finite(BigUint::from(3u32).pow(v)),
                    "f = {fc:?}, n = {n}, expected 3^{v}"
                );
            }
        }
    }

    #[test]
    fn coprimality_examples() {
        assert!(coprimality_check(&poly(3, 16, &[-3, 1]), 1).unwrap());
        assert!(coprimality_check(&poly(3, 16, &[-3, 1]), 2).unwrap());
        // T itself is fine: nu(0) = p^n is nonzero
        assert!(coprimality_check(&poly(3, 16, &[0, 1]), 2).unwrap());
        // omega_n/T shares all its zeros with itself
        let n20 = nu(3, 16, 12, 2, 0).unwrap();
        assert!(!coprimality_check(&n20, 2).unwrap());
        // a unit is coprime to everything
        assert!(coprimality_check(&poly(3, 16, &[2]), 3).unwrap());

        assert!(matches!(
            coprimality_check(&poly(3, 16, &[]), 1),
            Err(Error::Input(_))
        ));
        // indeterminate at shallow precision
        assert!(matches!(
            coprimality_check(&poly(3, 4, &[-9, 1]), 2),
            Err(Error::PrecisionExhausted(_))
        ));
    }

    #[test]
    fn b0_model_examples() {
        assert!(b0_model(&poly(3, 9, &[1])).unwrap().is_trivial());
        assert!(b0_model(&poly(3, 9, &[2, 5, 1])).unwrap().is_trivial());

        let g = b0_model(&poly(3, 9, &[-3, 1])).unwrap();
        assert!(g.is_cyclic_of(&BigUint::from(3u32)));

        let g = b0_model(&poly(3, 9, &[-9, 1])).unwrap();
        assert!(g.is_cyclic_of(&BigUint::from(9u32)));

        assert!(matches!(
            b0_model(&poly(3, 9, &[0, 1])),
            Err(Error::PrecisionExhausted(_))
        ));
        // valuation 2 needs K >= 5
        assert!(matches!(
            b0_model(&poly(3, 4, &[-9, 1])),
            Err(Error::PrecisionExhausted(_))
        ));
        assert!(b0_model(&poly(3, 5, &[-9, 1])).is_ok());
    }

    #[test]
    fn bn_model_matches_level_zero_closed_form() {
        // a unit ideal collapses the whole tower module
        for q in [-1, 0] {
            let h = bn_model_cohomology(&poly(3, 12, &[2, 1]), 2, 0, q).unwrap();
            assert!(h.is_trivial());
        }

        // f = T - 3 four levels up, one level in
        let f = poly(3, 12, &[-3, 1]);
        let oracle = b0_model(&f).unwrap();
        assert!(oracle.is_cyclic_of(&BigUint::from(3u32)));
        for q in [-1, 0] {
            let h = bn_model_cohomology(&f, 4, 1, q).unwrap();
            assert_eq!(h, oracle, "q = {q}");
        }
    }

    #[test]
    fn bn_model_synthetic_family_small() {
        for u in [1i64, 2] {
            for e in [0u32, 1] {
                for m in [0u32, 1] {
                    let n = e + 2 + m;
                    let f = poly(3, 12, &[-u * 3i64.pow(e), 1]);
                    let oracle = b0_model(&f).unwrap();
                    for q in [0i64, -1] {
                        let h = bn_model_cohomology(&f, n, m, q).unwrap();
                        assert_eq!(h, oracle, "u = {u}, e = {e}, n = {n}, m = {m}, q = {q}");
                    }
                }
            }
        }

        // one case away from p = 3
        let f = poly(5, 10, &[-5, 1]);
        let oracle = b0_model(&f).unwrap();
        assert!(oracle.is_cyclic_of(&BigUint::from(5u32)));
        for q in [0i64, -1] {
            assert_eq!(bn_model_cohomology(&f, 3, 0, q).unwrap(), oracle);
        }
    }

    #[test]
    fn bn_model_stabilizes_once_group_exceeds_constant_term() {
        // v(f(0)) = 2: the groups settle at Z/9 from n - m = 2 onwards
        let f = poly(3, 14, &[-9, 1]);
        for q in [0i64, -1] {
            let at2 = bn_model_cohomology(&f, 2, 0, q).unwrap();
            let at3 = bn_model_cohomology(&f, 3, 0, q).unwrap();
            let at4 = bn_model_cohomology(&f, 4, 0, q).unwrap();
            assert!(at3.is_cyclic_of(&BigUint::from(9u32)), "q = {q}");
            assert_eq!(at2, at3, "q = {q}");
            assert_eq!(at3, at4, "q = {q}");
        }

        // v(f(0)) = 3 at n = 3 is already saturated, and stable to n = 4
        let f = poly(3, 14, &[-27, 1]);
        for q in [0i64, -1] {
            let at3 = bn_model_cohomology(&f, 3, 0, q).unwrap();
            let at4 = bn_model_cohomology(&f, 4, 0, q).unwrap();
            assert!(at3.is_cyclic_of(&BigUint::from(27u32)), "q = {q}");
            assert_eq!(at3, at4, "q = {q}");
        }
    }

    #[test]
    fn random_distinguished_models_have_matching_cyclic_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x1a5a);
        let mut checked = 0;
        for _ in 0..8 {
            let d = rng.gen_range(1..=2u32);
            let e = rng.gen_range(1..=2u32);
            let u = rng.gen_range(1..=2u64);
            let m = if e == 1 { rng.gen_range(0..=1u32) } else { 0 };
            let n = e + 2 + m;
            let mut coeffs: Vec<i64> = vec![(u * 3u64.pow(e)) as i64];
            for _ in 1..d {
                coeffs.push(3 * rng.gen_range(0..9i64));
            }
            coeffs.push(1);
            let f = IwasawaPoly::from_i64(3, 14, 1 << 12, &coeffs).unwrap();
            assert!(f.is_distinguished());
            if !coprimality_check(&f, n).unwrap() {
                continue;
            }
            let h0 = bn_model_cohomology(&f, n, m, 0).unwrap();
            let h1 = bn_model_cohomology(&f, n, m, -1).unwrap();
            let expect = BigUint::from(3u32).pow(e);
            assert_eq!(h0.order(), expect, "f = {f}, n = {n}, m = {m}");
            assert!(h1.is_cyclic_of(&expect), "f = {f}, n = {n}, m = {m}");
            checked += 1;
        }
        assert!(checked >= 5);
    }

    #[test]
    fn lambda_quotient_module_order_matches_bigint_smith() {
        let ideal = vec![poly(3, 16, &[-3, 1]), nu(3, 16, 12, 2, 0).unwrap()];
        let model = LambdaQuotientModule::new(2, ideal).unwrap();
        assert_eq!(model.group_module().gens(), 9);
        assert_eq!(model.omega_level(), 2);
        assert_eq!(
            model.order().unwrap(),
            QuotientOrder::Finite(BigUint::from(9u32))
        );

        // the same stacked columns through the exact integer Smith form
        let g = 9usize;
        let tail = omega_tail(3, 16, g);
        let blocks = stacked_relation_matrices(model.ideal(), 3, 16, g, &tail);
        let mut rows: Vec<Vec<BigInt>> = vec![Vec::new(); g];
        for b in &blocks {
            for i in 0..g {
                for j in 0..g {
                    rows[i].push(BigInt::from(b.at(i, j)));
                }
            }
        }
        let (divisors, _, _) = crate::smith_normal_form(&rows, 3, 16).unwrap();
        let mut order = BigUint::one();
        for d in divisors.iter().take(g) {
            assert!(*d < BigUint::from(3u32).pow(16));
            order *= d;
        }
        assert_eq!(order, BigUint::from(9u32));
    }

    #[test]
    fn tower_level_validation() {
        let f = poly(3, 12, &[-3, 1]);
        assert!(matches!(
            bn_model_cohomology(&f, 1, 1, 0),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            bn_model_cohomology(&f, 0, 0, 0),
            Err(Error::Input(_))
        ));
        // a generator of the cut ideal is rejected as non coprime
        let n20 = nu(3, 16, 12, 2, 0).unwrap();
        assert!(matches!(
            bn_model_cohomology(&n20, 2, 0, 0),
            Err(Error::Hypothesis(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ring_laws_hold(
            a in proptest::collection::vec(-40i64..40, 0..6),
            b in proptest::collection::vec(-40i64..40, 0..6),
            c in proptest::collection::vec(-40i64..40, 0..6),
        ) {
            let pa = poly(3, 9, &a);
            let pb = poly(3, 9, &b);
            let pc = poly(3, 9, &c);
            let lhs = pa.add(&pb).unwrap().mul(&pc).unwrap();
            let rhs = pa.mul(&pc).unwrap().add(&pb.mul(&pc).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(pa.mul(&pb).unwrap(), pb.mul(&pa).unwrap());

            // division by a monic factor undoes multiplication
            let mut monic = b.clone();
            monic.push(1);
            let pm = poly(3, 9, &monic);
            let prod = pa.mul(&pm).unwrap();
            prop_assert_eq!(prod.div_exact(&pm).unwrap(), pa);
        }
    }
}
