//! Two independent evaluators of the p-adic L-value at 1 attached to an
//! even character in the split case chi(p) = 1, cross validated against
//! each other.
//!
//! The log formula route works in the unramified extension Z_p[zeta_f]:
//! since chi(p) = 1 the character is constant on Frobenius orbits, so the
//! twisted sum of logarithms collapses to logs of orbit norms, which all
//! lie in Z_p, and the Gauss sum itself is Frobenius invariant and
//! descends. The interpolation route never leaves Q: it evaluates the
//! attached power series at geometric nodes through exact generalized
//! Bernoulli numbers and recovers the value at 0 by Newton divided
//! differences, with every precision loss tracked by the element
//! arithmetic itself.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};

use crate::characters::{generalized_bernoulli, DirichletCharacter};
use crate::iwasawa::IwasawaPoly;
use crate::linalg::max_precision;
use crate::padic::{self, is_small_prime, PadicElement, UnramifiedBasis, Valuation};
use crate::zarith;
use crate::{Error, Result};

/// Which evaluator produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpMethod {
    LogFormula,
    Interpolation,
}

impl std::fmt::Display for LpMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpMethod::LogFormula => write!(f, "log"),
            LpMethod::Interpolation => write!(f, "interp"),
        }
    }
}

/// The value at 1 of the p-adic L-series of a character, with its
/// certified precision and the method that produced it.
#[derive(Debug, Clone)]
pub struct LpValue {
    chi_modulus: u64,
    chi_order: u64,
    p: u64,
    value: PadicElement,
    requested_precision: u32,
    method: LpMethod,
}

impl LpValue {
    pub fn chi_modulus(&self) -> u64 {
        self.chi_modulus
    }

    pub fn chi_order(&self) -> u64 {
        self.chi_order
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// The value as an element of Z_p at the certified precision.
    pub fn value(&self) -> &PadicElement {
        &self.value
    }

    /// Certified absolute precision exponent of the value.
    pub fn precision(&self) -> u32 {
        self.value.precision()
    }

    pub fn requested_precision(&self) -> u32 {
        self.requested_precision
    }

    pub fn method(&self) -> LpMethod {
        self.method
    }

    pub fn valuation(&self) -> Valuation {
        self.value.valuation()
    }

    /// True when interpolation loss ate more than half the requested
    /// digits; the value is still correct at its certified precision.
    pub fn is_degraded(&self) -> bool {
        self.precision() < self.requested_precision - self.requested_precision / 2
    }

    /// Congruence with another evaluation of the same value at the shared
    /// certified precision.
    pub fn agrees_with(&self, other: &LpValue) -> Result<bool> {
        if self.chi_modulus != other.chi_modulus
            || self.chi_order != other.chi_order
            || self.p != other.p
        {
            return Err(Error::Input(
                "comparing values of different L-series".into(),
            ));
        }
        let k = self.precision().min(other.precision());
        Ok(self.value.congruent_mod(&other.value, k))
    }
}

fn validate_split_character(chi: &DirichletCharacter, p: u64, precision: u32) -> Result<()> {
    if p < 3 || !is_small_prime(p) {
        return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
    }
    if precision < 3 {
        return Err(Error::Input(format!(
            "precision K = {precision} is too shallow, need K >= 3"
        )));
    }
    if chi.order() < 2 {
        return Err(Error::Hypothesis("the trivial character is excluded".into()));
    }
    if !chi.is_even() {
        return Err(Error::Hypothesis(
            "odd characters have no real cyclotomic theory here".into(),
        ));
    }
    if chi.modulus() % p == 0 {
        return Err(Error::Hypothesis(format!(
            "p = {p} divides the conductor {}",
            chi.modulus()
        )));
    }
    if (p - 1) % chi.order() != 0 {
        return Err(Error::Hypothesis(format!(
            "character order {} does not divide p - 1 = {}, values leave Z_p",
            chi.order(),
            p - 1
        )));
    }
    if chi.exponent(p) != Some(0) {
        return Err(Error::Hypothesis(format!(
            "chi({p}) != 1: only the split case is supported"
        )));
    }
    Ok(())
}

/// The Gauss sum of chi and the chi-bar weighted sum of logarithms of
/// 1 - zeta_f^a, both descended to Z_p.
///
/// The weighted log sum collapses along Frobenius orbits: chi is constant
/// on them, so each orbit contributes chi-bar(a) times the log of the
/// orbit norm of 1 - zeta_f^a, already an element of Z_p.
fn gauss_sum_and_log_sum(
    chi: &DirichletCharacter,
    p: u64,
    kk: u32,
) -> Result<(PadicElement, PadicElement)> {
    let f = chi.modulus();
    let basis = UnramifiedBasis::new(p, f)?;
    let zeta = basis.zeta(kk);
    let one = basis.constant(kk, &BigInt::one());

    let mut pows = Vec::with_capacity(f as usize);
    pows.push(one.clone());
    for a in 1..f as usize {
        pows.push(&pows[a - 1] * &zeta);
    }

    let mut tau = basis.zero(kk);
    for a in 1..f {
        if chi.exponent(a).is_none() {
            continue;
        }
        let cv = chi.padic_value(a, p, kk)?.residue()?;
        tau = &tau + &pows[a as usize].scale(&BigInt::from(cv));
    }
    let tau = tau.to_base()?;

    let chibar = chi.conjugate();
    let mut seen = vec![false; f as usize];
    let mut total = PadicElement::zero(p, kk);
    for a in 1..f {
        if seen[a as usize] || chi.exponent(a).is_none() {
            continue;
        }
        let mut norm = one.clone();
        let mut b = a;
        loop {
            seen[b as usize] = true;
            norm = &norm * &(&one - &pows[b as usize]);
            b = b * (p % f) % f;
            if b == a {
                break;
            }
        }
        let norm = norm.to_base()?;
        let log_norm = padic::padic_log_unit(&norm)?;
        let cv = chibar.padic_value(a, p, kk)?;
        total = &total + &(&cv * &log_norm);
    }
    Ok((tau, total))
}

/// Evaluates the L-value at 1 by the logarithm formula
/// -(1 - chi(p)/p) (tau(chi)/f) sum_a chi-bar(a) log_p(1 - zeta_f^a),
/// entirely through exact arithmetic in the unramified extension.
pub fn lp_at_one_log(chi: &DirichletCharacter, p: u64, precision: u32) -> Result<LpValue> {
    validate_split_character(chi, p, precision)?;
    let kk = precision + 2;
    let (tau, log_sum) = gauss_sum_and_log_sum(chi, p, kk)?;

    // the log sum has valuation >= 1; the Euler factor (p-1)/p consumes
    // exactly that guaranteed digit
    let shifted = log_sum.divide_by_p_exact(1)?;
    let f_inv = PadicElement::integer(p, kk - 1, &BigInt::from(chi.modulus())).inverse()?;
    let value = &(&shifted * &tau) * &f_inv;
    let value = -&value.scale(&BigInt::from(p - 1));
    debug_assert_eq!(value.degree(), 1);
    Ok(LpValue {
        chi_modulus: chi.modulus(),
        chi_order: chi.order(),
        p,
        value: value.reduce_precision(precision),
        requested_precision: precision,
        method: LpMethod::LogFormula,
    })
}

/// Newton divided differences dd[r] over the given nodes; divisions by
/// node differences are exact and charge their valuation to the result's
/// precision.
fn divided_differences(xs: &[PadicElement], ys: &[PadicElement]) -> Result<Vec<PadicElement>> {
    let mut level = ys.to_vec();
    let mut out = vec![level[0].clone()];
    for r in 1..xs.len() {
        let mut next = Vec::with_capacity(level.len() - 1);
        for i in 0..level.len() - 1 {
            let num = &level[i + 1] - &level[i];
            let den = &xs[i + r] - &xs[i];
            let v = den
                .valuation()
                .expect_exact("interpolation node difference")?;
            let den_unit = den.divide_by_p_exact(v)?;
            let num_shift = num.divide_by_p_exact(v)?;
            next.push(&num_shift * &den_unit.inverse()?);
        }
        out.push(next[0].clone());
        level = next;
    }
    Ok(out)
}

/// Expand the Newton form sum_r dd[r] prod_{i<r} (T - x_i) into ascending
/// monomial coefficients.
fn newton_monomials(xs: &[PadicElement], dd: &[PadicElement]) -> Vec<PadicElement> {
    let j = dd.len();
    let mut poly = vec![dd[j - 1].clone()];
    for r in (0..j - 1).rev() {
        let mut next = Vec::with_capacity(poly.len() + 1);
        next.push(dd[r].clone());
        next.extend(poly.iter().cloned());
        for (i, c) in poly.iter().enumerate() {
            let t = &xs[r] * c;
            next[i] = &next[i] - &t;
        }
        poly = next;
    }
    poly
}

/// The exact value of the attached series at the node kappa^((p-1)j) - 1:
/// -(1 - chi(p) p^(n-1)) B_(n,chi) / n at n = (p-1) j.
fn node_value(chi: &DirichletCharacter, p: u64, kk: u32, j: u32) -> Result<PadicElement> {
    let n = (p - 1) * j as u64;
    let bern = generalized_bernoulli(n, chi).padic_embed(p, kk)?;
    let one = PadicElement::one(p, kk);
    let p_pow = PadicElement::integer(p, kk, &BigInt::from(p).pow((n - 1) as u32));
    let factor = &one - &p_pow;
    let v = zarith::big_valuation(&BigUint::from(n), p);
    let unit = BigUint::from(n) / BigUint::from(p).pow(v);
    let scaled = (&bern * &factor).divide_by_p_exact(v)?;
    let inv = zarith::inv_mod_big(&unit, &padic::pk_modulus(p, kk - v)).expect("unit part");
    Ok(-&scaled.scale(&BigInt::from(inv)))
}

/// Evaluates the L-value at 1 by sampling the attached Iwasawa series at
/// geometric nodes kappa^((p-1)j) - 1, kappa = 1 + p, through exact
/// generalized Bernoulli numbers, and interpolating back to 0.
///
/// Also returns the truncated series itself, in the tower variable T, for
/// use as a relation polynomial. Its certified coefficient precision is
/// the minimum surviving the divided differences.
pub fn lp_at_one_interpolate(
    chi: &DirichletCharacter,
    p: u64,
    precision: u32,
    points: u32,
) -> Result<(LpValue, IwasawaPoly)> {
    validate_split_character(chi, p, precision)?;
    if points < 2 {
        return Err(Error::Input(format!(
            "interpolation needs at least 2 points, got {points}"
        )));
    }
    let kk = precision + points + 4;
    let pkk = padic::pk_modulus(p, kk);
    let kappa = BigUint::from(1 + p);

    let mut xs = Vec::with_capacity(points as usize);
    let mut ys = Vec::with_capacity(points as usize);
    for j in 1..=points {
        let n = (p - 1) * j as u64;
        let node = kappa.modpow(&BigUint::from(n), &pkk) + (&pkk - BigUint::one());
        xs.push(PadicElement::integer(p, kk, &BigInt::from(node % &pkk)));
        ys.push(node_value(chi, p, kk, j)?);
    }

    let dd = divided_differences(&xs, &ys)?;
    let coeffs = newton_monomials(&xs, &dd);

    // stopping at J points leaves a tail dd[J] * prod_j (0 - x_j) whose
    // valuation is at least sum_j v(x_j) = J + v_p(J!)
    let truncation: u32 = (1..=points)
        .map(|j| 1 + zarith::big_valuation(&BigUint::from(j), p))
        .sum();
    let value = coeffs[0].clone();
    let certified = precision.min(value.precision()).min(truncation);
    let value = value.reduce_precision(certified);

    let k_poly = coeffs
        .iter()
        .map(|c| c.precision())
        .min()
        .expect("at least one coefficient")
        .min(precision)
        .min(max_precision(p));
    let residues: Vec<u64> = coeffs
        .iter()
        .map(|c| {
            let r = c.reduce_precision(k_poly).residue().expect("base element");
            r.to_u64().expect("residue fits in u64")
        })
        .collect();
    let bound = (points as usize + 2).max(8);
    let series = IwasawaPoly::from_residues(p, k_poly, bound, &residues)?;

    Ok((
        LpValue {
            chi_modulus: chi.modulus(),
            chi_order: chi.order(),
            p,
            value,
            requested_precision: precision,
            method: LpMethod::Interpolation,
        },
        series,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::quadratic_character;
    use num_rational::BigRational;
    use num_traits::Zero;

    #[test]
    fn split_hypotheses_are_enforced() {
        let chi13 = quadratic_character(13).unwrap();
        // inert prime
        assert!(matches!(
            lp_at_one_log(&chi13, 5, 8),
            Err(Error::Hypothesis(_))
        ));
        // p divides the conductor
        assert!(matches!(
            lp_at_one_log(&chi13, 13, 8),
            Err(Error::Hypothesis(_))
        ));
        // odd character
        let odd = quadratic_character(-4).unwrap();
        assert!(matches!(
            lp_at_one_log(&odd, 3, 8),
            Err(Error::Hypothesis(_))
        ));
        // trivial character
        let triv = DirichletCharacter::cyclic(7, 1).unwrap();
        assert!(matches!(
            lp_at_one_log(&triv, 3, 8),
            Err(Error::Hypothesis(_))
        ));
        // order does not divide p - 1
        let chi4 = DirichletCharacter::cyclic(17, 4).unwrap();
        assert!(matches!(
            lp_at_one_log(&chi4, 3, 8),
            Err(Error::Hypothesis(_))
        ));
        assert!(matches!(
            lp_at_one_interpolate(&chi13, 3, 8, 1),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn gauss_sum_squares_to_the_conductor() {
        // tau(chi)^2 = chi(-1) f for a primitive quadratic character
        for (d, p) in [(13i64, 3u64), (5, 11), (44, 5)] {
            let chi = quadratic_character(d).unwrap();
            let (tau, _) = gauss_sum_and_log_sum(&chi, p, 9).unwrap();
            assert_eq!(tau.degree(), 1, "tau descends to Z_{p}");
            let f_elt = PadicElement::integer(p, 9, &BigInt::from(d));
            assert_eq!(&tau * &tau, f_elt, "d = {d}, p = {p}");
        }
    }

    #[test]
    fn log_sum_terms_have_positive_valuation() {
        let chi = quadratic_character(13).unwrap();
        let (_, s) = gauss_sum_and_log_sum(&chi, 3, 9).unwrap();
        match s.valuation() {
            Valuation::Exact(v) => assert!(v >= 1),
            Valuation::AtLeast(v) => assert!(v >= 1),
        }
    }

    #[test]
    fn dual_methods_agree_and_pin_valuations() {
        // (D, p, expected valuation of the value at 1)
        for (d, p, expect) in [(13i64, 3u64, 0u32), (229, 3, 1), (44, 5, 0)] {
            let chi = quadratic_character(d).unwrap();
            let by_log = lp_at_one_log(&chi, p, 8).unwrap();
            let (by_interp, _) = lp_at_one_interpolate(&chi, p, 8, 6).unwrap();
            assert!(by_log.agrees_with(&by_interp).unwrap(), "D = {d}, p = {p}");
            assert!(by_interp.precision() >= 6, "D = {d}, p = {p}");
            assert_eq!(by_log.value().degree(), 1);
            assert_eq!(
                by_log.valuation(),
                Valuation::Exact(expect),
                "log method, D = {d}, p = {p}"
            );
            assert_eq!(
                by_interp.valuation(),
                Valuation::Exact(expect),
                "interpolation, D = {d}, p = {p}"
            );
            // rescaling by the unit part of the Euler factor moves nothing
            let rescaled = by_log
                .value()
                .scale(&BigInt::from(zarith::inv_mod(p - 1, p.pow(8)).unwrap()));
            assert_eq!(rescaled.valuation(), by_log.valuation());
        }
    }

    #[test]
    fn order_four_character_agrees_across_methods() {
        let chi = DirichletCharacter::cyclic(17, 4).unwrap();
        assert_eq!(chi.exponent(13), Some(0), "13 splits for this character");
        let by_log = lp_at_one_log(&chi, 13, 5).unwrap();
        let (by_interp, _) = lp_at_one_interpolate(&chi, 13, 5, 4).unwrap();
        assert!(by_log.agrees_with(&by_interp).unwrap());
        assert_eq!(by_log.valuation(), by_interp.valuation());
    }

    #[test]
    fn interpolating_constant_data_returns_the_constant() {
        let p = 3;
        let kk = 10;
        let c = PadicElement::integer(p, kk, &BigInt::from(7));
        let xs: Vec<PadicElement> = (1..=5u32)
            .map(|j| PadicElement::integer(p, kk, &BigInt::from(3 * j as i64)))
            .collect();
        let ys = vec![c.clone(); 5];
        let dd = divided_differences(&xs, &ys).unwrap();
        assert_eq!(dd[0], c);
        for d in &dd[1..] {
            assert!(d.is_zero());
        }
        let coeffs = newton_monomials(&xs, &dd);
        assert_eq!(coeffs[0].residue().unwrap(), BigUint::from(7u32));
    }

    #[test]
    fn point_count_is_well_posed() {
        let chi = quadratic_character(13).unwrap();
        let (v4, _) = lp_at_one_interpolate(&chi, 3, 8, 4).unwrap();
        let (v6, _) = lp_at_one_interpolate(&chi, 3, 8, 6).unwrap();
        assert!(v4.agrees_with(&v6).unwrap());
        assert!(!v6.is_degraded());
    }

    #[test]
    fn truncated_series_passes_leave_one_out() {
        let chi = quadratic_character(13).unwrap();
        let p = 3u64;
        let (_, series) = lp_at_one_interpolate(&chi, p, 10, 6).unwrap();
        let k_poly = series.precision();
        assert!(k_poly >= 4);

        // evaluate the truncated series at the held-out seventh node
        let kk = 20;
        let pkk = padic::pk_modulus(p, kk);
        let node = BigUint::from(1 + p).modpow(&BigUint::from((p - 1) * 7), &pkk)
            - BigUint::one();
        let node_res = (&node % padic::pk_modulus(p, k_poly)).to_string();
        let got = series.eval(node_res.parse::<i64>().unwrap());

        let expect = node_value(&chi, p, kk, 7).unwrap();
        let expect_res = expect.reduce_precision(4).residue().unwrap();
        // the interpolation tail at a new node has valuation >= point count
        assert_eq!(
            BigUint::from(got) % padic::pk_modulus(p, 4),
            expect_res,
            "series disagrees with the exact node value mod 3^4"
        );
    }

    // Exponential generating function oracle for the Bernoulli values the
    // interpolation path consumes: sum_a chi(a) t e^(at) / (e^(ft) - 1)
    // expanded with exact rationals.

    fn egf_bernoulli_chi(d: i64, upto: usize) -> Vec<BigRational> {
        let chi = quadratic_character(d).unwrap();
        let f = chi.modulus();
        let terms = upto + 2;
        let fact: Vec<BigRational> = {
            let mut v = vec![BigRational::one()];
            for i in 1..=terms {
                let last = v[i - 1].clone();
                v.push(last * BigRational::from(BigInt::from(i)));
            }
            v
        };
        // denominator (e^(ft) - 1)/t = sum_{m>=0} f^(m+1) t^m / (m+1)!
        let den: Vec<BigRational> = (0..terms)
            .map(|m| {
                BigRational::from(BigInt::from(f).pow(m as u32 + 1)) / &fact[m + 1]
            })
            .collect();
        // numerator sum_a chi(a) e^(at) = sum_m (sum_a chi(a) a^m) t^m / m!
        let num: Vec<BigRational> = (0..terms)
            .map(|m| {
                let mut s = BigInt::zero();
                for a in 1..f {
                    let c = chi.value_quadratic(a);
                    if c != 0 {
                        let am = BigInt::from(a).pow(m as u32);
                        s += BigInt::from(c) * am;
                    }
                }
                BigRational::from(s) / &fact[m]
            })
            .collect();
        // series division q = num / den, den[0] = f is invertible
        let mut q = vec![BigRational::zero(); terms];
        for m in 0..terms {
            let mut acc = num[m].clone();
            for i in 0..m {
                acc -= &q[i] * &den[m - i];
            }
            q[m] = acc / &den[0];
        }
        // B_(n,chi) = n! q_n
        (0..=upto).map(|n| &q[n] * &fact[n]).collect()
    }

    #[test]
    fn generalized_bernoulli_matches_egf_oracle() {
        for d in [5i64, 13, 8] {
            let chi = quadratic_character(d).unwrap();
            let oracle = egf_bernoulli_chi(d, 6);
            for n in 1..=6u64 {
                let direct = generalized_bernoulli(n, &chi)
                    .rational()
                    .expect("quadratic values are rational");
                assert_eq!(direct, oracle[n as usize], "D = {d}, n = {n}");
            }
        }
    }
}
