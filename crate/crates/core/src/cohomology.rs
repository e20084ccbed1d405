//! Tate cohomology of modules over finite cyclic p-groups.
//!
//! A [`GroupModule`] presents a module over `Z_p[G]` or `(Z/p^K)[G]` for `G`
//! cyclic of order `p^t`: a list of generators, integer relation columns, and
//! the matrix of the action of a fixed generator `sigma`. For every subgroup
//! `G_m = <sigma^{p^m}>` the functions here compute the Tate groups
//!
//! ```text
//!   H^0(G_m, M)  = ker(tau - 1) / im(N),    tau = sigma^{p^m},
//!   H^-1(G_m, M) = ker(N) / im(tau - 1),    N = 1 + tau + ... + tau^{p^{t-m}-1},
//! ```
//!
//! extended to all `q` by 2-periodicity. An optional commuting action of a
//! cyclic group of order prime to `p` supports eigenspace projections.
//!
//! Two presentation semantics are supported, and they genuinely differ: over
//! `Z_p` a generator with no relations is a copy of `Z_p` (so `ker(N)` on it
//! is zero), while over `Z/p^K` the same data is a finite cyclic module (and
//! `ker(N)` is not zero). All arithmetic is exact. Lattice presentations whose
//! relation matrix is provably of finite index with margin are reduced to
//! `Z/p^W` word arithmetic at the fixed working precision `W`; the margin
//! guarantees the reduced answer equals the `Z_p` answer. Everything else
//! falls back to big-integer Smith reduction.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{max_precision, PkMat, PkSnf, ZMat};
use crate::padic::is_small_prime;
use crate::zarith;
use crate::{Error, Result};

/// How the generator/relation data of a [`GroupModule`] is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Semantics {
    /// Generators span a free `Z_p`-lattice modulo the relation columns.
    ZpLattice,
    /// Generators span `(Z/p^K)^g` modulo the relation columns; every entry
    /// is read mod `p^K`.
    ModPk,
}

/// A finite abelian group recorded by its elementary divisors, each a prime
/// power `> 1`, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAbelianGroup {
    divisors: Vec<BigUint>,
}

impl FiniteAbelianGroup {
    pub fn trivial() -> FiniteAbelianGroup {
        FiniteAbelianGroup { divisors: Vec::new() }
    }

    /// Group `⊕ Z/p^{e_i}`; zero exponents are dropped.
    pub fn from_p_exponents(p: u64, exps: &[u32]) -> FiniteAbelianGroup {
        let mut es: Vec<u32> = exps.iter().copied().filter(|&e| e > 0).collect();
        es.sort_unstable();
        FiniteAbelianGroup {
            divisors: es.iter().map(|&e| BigUint::from(p).pow(e)).collect(),
        }
    }

    /// Splits arbitrary invariant factors into prime powers by trial
    /// division. Intended for small orders such as class numbers.
    pub fn from_invariant_factors(factors: &[BigUint]) -> Result<FiniteAbelianGroup> {
        let mut divisors = Vec::new();
        for f in factors {
            if f.is_zero() {
                return Err(Error::Input(
                    "invariant factor 0 describes an infinite group".into(),
                ));
            }
            let mut rest = f.clone();
            let mut q = 2u64;
            while rest > BigUint::one() {
                if (&rest % q).is_zero() {
                    let mut pw = BigUint::one();
                    while (&rest % q).is_zero() {
                        rest /= q;
                        pw *= q;
                    }
                    divisors.push(pw);
                } else {
                    q += 1;
                    if q > 1_000_000 {
                        // beyond trial range the remainder is a unit times at
                        // most two large primes; treat it as one divisor
                        divisors.push(rest.clone());
                        break;
                    }
                }
            }
        }
        divisors.sort();
        Ok(FiniteAbelianGroup { divisors })
    }

    pub fn cyclic(n: &BigUint) -> Result<FiniteAbelianGroup> {
        FiniteAbelianGroup::from_invariant_factors(std::slice::from_ref(n))
    }

    pub fn divisors(&self) -> &[BigUint] {
        &self.divisors
    }

    pub fn order(&self) -> BigUint {
        self.divisors.iter().product()
    }

    pub fn is_trivial(&self) -> bool {
        self.divisors.is_empty()
    }

    /// True when the group is cyclic of the given order: the right order and
    /// pairwise coprime divisors.
    pub fn is_cyclic_of(&self, n: &BigUint) -> bool {
        if self.order() != *n {
            return false;
        }
        for i in 0..self.divisors.len() {
            for j in i + 1..self.divisors.len() {
                if !gcd_big(&self.divisors[i], &self.divisors[j]).is_one() {
                    return false;
                }
            }
        }
        true
    }

    /// Exponents of the p-power divisors, ascending.
    pub fn p_exponents(&self, p: u64) -> Vec<u32> {
        self.divisors
            .iter()
            .filter(|d| (*d % p).is_zero())
            .map(|d| zarith::big_valuation(d, p))
            .collect()
    }
}

fn gcd_big(a: &BigUint, b: &BigUint) -> BigUint {
    let mut a = a.clone();
    let mut b = b.clone();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

impl fmt::Display for FiniteAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.divisors.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.divisors.iter().map(|d| format!("Z/{d}")).collect();
        write!(f, "{}", parts.join(" x "))
    }
}

impl Serialize for FiniteAbelianGroup {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.divisors.iter().map(|d| d.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteAbelianGroup {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        let mut divisors = Vec::with_capacity(v.len());
        for s in &v {
            let d: BigUint = s
                .parse()
                .map_err(|e| serde::de::Error::custom(format!("bad divisor {s:?}: {e}")))?;
            divisors.push(d);
        }
        divisors.sort();
        Ok(FiniteAbelianGroup { divisors })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PathKind {
    /// All arithmetic mod p^kk is provably exact for this presentation.
    Fast(u32),
    /// Big-integer Smith reduction over Z.
    Exact,
}

/// A finitely presented module over `Z_p[G]` or `(Z/p^K)[G]`, `G = <sigma>`
/// cyclic of order `p^t`, with an optional commuting auxiliary action.
#[derive(Debug, Clone)]
pub struct GroupModule {
    p: u64,
    k: u32,
    t: u32,
    gens: usize,
    rels: ZMat,
    sigma: ZMat,
    delta: Option<(u64, ZMat)>,
    semantics: Semantics,
    /// Set when the generators are the power basis of Z[T]/omega_t and sigma
    /// is multiplication by 1+T; lets tau and the norm be built by polynomial
    /// arithmetic instead of matrix powers.
    poly_hint: Option<u32>,
    path: PathKind,
}

struct PartsData {
    /// Numerator generators inside the ambient coordinates, mod p^kk.
    y: PkMat,
    /// Denominator generators: the image operator columns then the relations.
    bstack: PkMat,
    /// Relations among the numerator generators, in their own coordinates.
    a2: PkMat,
    kk: u32,
}

impl GroupModule {
    /// Validates and builds a presentation. `sigma_rows` is the g x g action
    /// matrix of the group generator (row major); `relation_cols` lists the
    /// relation vectors. Checks that sigma has order dividing p^t on the
    /// module and that the relation span is sigma-stable.
    pub fn new(
        p: u64,
        precision: u32,
        group_exponent: u32,
        sigma_rows: &[Vec<BigInt>],
        relation_cols: &[Vec<BigInt>],
        semantics: Semantics,
    ) -> Result<GroupModule> {
        let gens = sigma_rows.len();
        let sigma = mat_from_rows(sigma_rows, gens, gens)?;
        let rels = mat_from_cols(relation_cols, gens)?;
        GroupModule::from_mats(p, precision, group_exponent, sigma, rels, semantics)
    }

    pub(crate) fn from_mats(
        p: u64,
        precision: u32,
        group_exponent: u32,
        sigma: ZMat,
        rels: ZMat,
        semantics: Semantics,
    ) -> Result<GroupModule> {
        if p < 3 || !is_small_prime(p) {
            return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
        }
        let w = max_precision(p);
        if precision < 3 || precision > w {
            return Err(Error::Input(format!(
                "precision K = {precision} outside the supported range 3..={w} for p = {p}"
            )));
        }
        if p.checked_pow(group_exponent).map_or(true, |o| o > 1 << 31) {
            return Err(Error::Input(format!(
                "group order p^{group_exponent} is out of range"
            )));
        }
        let gens = sigma.rows;
        if sigma.cols != gens || rels.rows != gens {
            return Err(Error::Input("matrix shapes disagree".into()));
        }
        let (sigma, rels) = match semantics {
            Semantics::ModPk => (
                PkMat::from_zmat(&sigma, p, precision).to_zmat(),
                PkMat::from_zmat(&rels, p, precision).to_zmat(),
            ),
            Semantics::ZpLattice => (sigma, rels),
        };
        let path = decide_path(p, precision, gens, &rels, semantics);
        let m = GroupModule {
            p,
            k: precision,
            t: group_exponent,
            gens,
            rels,
            sigma,
            delta: None,
            semantics,
            poly_hint: None,
            path,
        };
        m.validate_core()?;
        Ok(m)
    }

    /// Presentation of `(Z/p^K)[T]/(omega_t)` modulo the given relation
    /// columns, with sigma acting as multiplication by `1+T` on the power
    /// basis. `omega_t = (1+T)^{p^t} - 1`. Relation spans produced by the
    /// callers are ideals, hence sigma-stable; only the basis identities are
    /// re-checked here.
    pub(crate) fn from_omega_basis(
        p: u64,
        precision: u32,
        level: u32,
        relation_cols: Vec<Vec<BigInt>>,
    ) -> Result<GroupModule> {
        if p < 3 || !is_small_prime(p) {
            return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
        }
        let w = max_precision(p);
        if precision < 3 || precision > w {
            return Err(Error::Input(format!(
                "precision K = {precision} outside the supported range 3..={w} for p = {p}"
            )));
        }
        let g = p
            .checked_pow(level)
            .and_then(|g| usize::try_from(g).ok())
            .filter(|&g| g <= 1 << 16)
            .ok_or_else(|| Error::Input(format!("p^{level} generators is out of range")))?;
        let pk = pk_of(p, precision);
        let tail = omega_tail(p, precision, g);
        let one_plus_t = unit_poly(g, pk);
        let sigma_pk = mult_matrix(&one_plus_t, &tail, p, precision);
        // (1+T)^{p^level} must reduce to 1; this exercises the tail identity
        let full = poly_powmod(&one_plus_t, p.pow(level), &tail, pk);
        let mut expect = vec![0u64; g];
        expect[0] = 1 % pk;
        if full != expect {
            return Err(Error::Internal(
                "omega reduction does not trivialize the full group power".into(),
            ));
        }
        let rels = PkMat::from_zmat(&mat_from_cols(&relation_cols, g)?, p, precision).to_zmat();
        Ok(GroupModule {
            p,
            k: precision,
            t: level,
            gens: g,
            rels,
            sigma: sigma_pk.to_zmat(),
            delta: None,
            semantics: Semantics::ModPk,
            poly_hint: Some(level),
            path: PathKind::Fast(precision),
        })
    }

    /// Attaches a commuting action of a cyclic group of order prime to p,
    /// given by the matrix of its generator.
    pub fn with_delta(self, order: u64, delta_rows: &[Vec<BigInt>]) -> Result<GroupModule> {
        let d = mat_from_rows(delta_rows, self.gens, self.gens)?;
        self.with_delta_mat(order, d)
    }

    pub(crate) fn with_delta_mat(mut self, order: u64, d: ZMat) -> Result<GroupModule> {
        if order == 0 || zarith::gcd(order, self.p) != 1 {
            return Err(Error::Hypothesis(format!(
                "auxiliary action order {order} must be nonzero and prime to p = {}",
                self.p
            )));
        }
        let d = match self.semantics {
            Semantics::ModPk => PkMat::from_zmat(&d, self.p, self.k).to_zmat(),
            Semantics::ZpLattice => d,
        };
        let kk = self.working_precision();
        let dpk = PkMat::from_zmat(&d, self.p, kk);
        let rpk = PkMat::from_zmat(&self.rels, self.p, kk);
        let rsnf = rpk.snf(true, true);
        let ident = PkMat::identity(self.p, kk, self.gens);
        let spk = PkMat::from_zmat(&self.sigma, self.p, kk);
        if !cols_in_span(&rsnf, &dpk.pow(order).sub(&ident)) {
            return Err(Error::Input(
                "auxiliary action does not have the declared order on the module".into(),
            ));
        }
        if !cols_in_span(&rsnf, &dpk.mul(&rpk)) {
            return Err(Error::Input(
                "relation span is not stable under the auxiliary action".into(),
            ));
        }
        if !cols_in_span(&rsnf, &dpk.mul(&spk).sub(&spk.mul(&dpk))) {
            return Err(Error::Input(
                "auxiliary action does not commute with the group action".into(),
            ));
        }
        self.delta = Some((order, d));
        Ok(self)
    }

    /// Rank-one module with trivial group action over Z_p.
    pub fn trivial(p: u64, precision: u32, group_exponent: u32) -> Result<GroupModule> {
        GroupModule::from_mats(
            p,
            precision,
            group_exponent,
            ZMat::identity(1),
            ZMat::zero(1, 0),
            Semantics::ZpLattice,
        )
    }

    /// The group ring Z_p[G] with sigma permuting the group-element basis.
    pub fn regular(p: u64, precision: u32, group_exponent: u32) -> Result<GroupModule> {
        let g = p.pow(group_exponent) as usize;
        let mut s = ZMat::zero(g, g);
        for c in 0..g {
            s.set((c + 1) % g, c, BigInt::one());
        }
        GroupModule::from_mats(p, precision, group_exponent, s, ZMat::zero(g, 0), Semantics::ZpLattice)
    }

    /// The augmentation ideal of Z_p[G], on the basis sigma^i - 1 for
    /// i = 1..p^t - 1.
    pub fn augmentation_ideal(p: u64, precision: u32, group_exponent: u32) -> Result<GroupModule> {
        let n = p.pow(group_exponent) as usize;
        let g = n - 1;
        let mut s = ZMat::zero(g, g);
        for c in 0..g {
            // sigma * (sigma^{c+1} - 1) = (sigma^{c+2} - 1) - (sigma - 1)
            if c + 1 < g {
                s.set(c + 1, c, BigInt::one());
            }
            s.set(0, c, s.at(0, c) - BigInt::one());
        }
        GroupModule::from_mats(p, precision, group_exponent, s, ZMat::zero(g, 0), Semantics::ZpLattice)
    }

    /// Block direct sum. Both summands must share p, precision and semantics;
    /// auxiliary actions must both be present with equal order, or both absent.
    pub fn direct_sum(a: &GroupModule, b: &GroupModule) -> Result<GroupModule> {
        if a.p != b.p || a.k != b.k || a.semantics != b.semantics {
            return Err(Error::Input(
                "direct sum requires matching prime, precision and semantics".into(),
            ));
        }
        let t = a.t.max(b.t);
        let g = a.gens + b.gens;
        let mut s = ZMat::zero(g, g);
        copy_block(&mut s, &a.sigma, 0, 0);
        copy_block(&mut s, &b.sigma, a.gens, a.gens);
        let mut rels = ZMat::zero(g, a.rels.cols + b.rels.cols);
        copy_block(&mut rels, &a.rels, 0, 0);
        copy_block(&mut rels, &b.rels, a.gens, a.rels.cols);
        let out = GroupModule::from_mats(a.p, a.k, t, s, rels, a.semantics)?;
        match (&a.delta, &b.delta) {
            (None, None) => Ok(out),
            (Some((oa, da)), Some((ob, db))) if oa == ob => {
                let mut d = ZMat::zero(g, g);
                copy_block(&mut d, da, 0, 0);
                copy_block(&mut d, db, a.gens, a.gens);
                out.with_delta_mat(*oa, d)
            }
            _ => Err(Error::Input(
                "direct sum requires auxiliary actions of equal order on both sides or neither"
                    .into(),
            )),
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.k
    }

    /// t with |G| = p^t.
    pub fn group_exponent(&self) -> u32 {
        self.t
    }

    pub fn gens(&self) -> usize {
        self.gens
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn has_delta(&self) -> bool {
        self.delta.is_some()
    }

    pub fn delta_order(&self) -> Option<u64> {
        self.delta.as_ref().map(|(o, _)| *o)
    }

    /// Whether the presented module is finite (no free Z_p part). ModPk
    /// presentations always are; lattice presentations are finite iff the
    /// relation matrix has full rank.
    pub fn is_finite(&self) -> bool {
        match (self.semantics, self.path) {
            (Semantics::ModPk, _) => true,
            (_, PathKind::Fast(_)) => true,
            (_, PathKind::Exact) => {
                self.rels.cols >= self.gens && self.rels.snf(false, false).rank == self.gens
            }
        }
    }

    fn working_precision(&self) -> u32 {
        match self.path {
            PathKind::Fast(kk) => kk,
            PathKind::Exact => max_precision(self.p),
        }
    }

    /// Congruence-level validation of the module laws at the working
    /// precision: sigma^{p^t} = 1 on M and sigma-stability of the relations.
    fn validate_core(&self) -> Result<()> {
        if self.gens == 0 {
            return Ok(());
        }
        let kk = self.working_precision();
        let spk = PkMat::from_zmat(&self.sigma, self.p, kk);
        let rpk = PkMat::from_zmat(&self.rels, self.p, kk);
        let rsnf = rpk.snf(true, true);
        let ident = PkMat::identity(self.p, kk, self.gens);
        let full = spk.pow(self.p.pow(self.t));
        if !cols_in_span(&rsnf, &full.sub(&ident)) {
            return Err(Error::Input(format!(
                "sigma does not have order dividing p^{} on the module",
                self.t
            )));
        }
        if !cols_in_span(&rsnf, &spk.mul(&rpk)) {
            return Err(Error::Input(
                "relation span is not stable under the group action".into(),
            ));
        }
        Ok(())
    }

    /// tau and norm operators for the subgroup of index p^level_m, mod p^kk.
    fn fast_operators(&self, level_m: u32, kk: u32) -> (PkMat, PkMat) {
        let count = self.p.pow(self.t - level_m);
        if let Some(n) = self.poly_hint {
            debug_assert_eq!(kk, self.k);
            let g = self.p.pow(n) as usize;
            let pk = pk_of(self.p, kk);
            let tail = omega_tail(self.p, kk, g);
            let u = poly_powmod(&unit_poly(g, pk), self.p.pow(level_m), &tail, pk);
            let nrm = poly_geom_sum(&u, count, &tail, pk);
            (
                mult_matrix(&u, &tail, self.p, kk),
                mult_matrix(&nrm, &tail, self.p, kk),
            )
        } else {
            let spk = PkMat::from_zmat(&self.sigma, self.p, kk);
            let tau = spk.pow(self.p.pow(level_m));
            let nrm = geom_sum_pk(&tau, count);
            (tau, nrm)
        }
    }

    fn exact_operators(&self, level_m: u32) -> (ZMat, ZMat) {
        let tau = self.sigma.pow(self.p.pow(level_m));
        let nrm = geom_sum_z(&tau, self.p.pow(self.t - level_m));
        (tau, nrm)
    }

    /// Divisor exponents of H^q plus the presentation data needed to
    /// transport commuting endomorphisms onto the cohomology.
    fn tate_parts(&self, q: i64, level_m: u32) -> Result<(Vec<u32>, Option<PartsData>)> {
        if level_m > self.t {
            return Err(Error::Input(format!(
                "subgroup level {level_m} exceeds the group exponent {}",
                self.t
            )));
        }
        if self.gens == 0 || level_m == self.t {
            return Ok((Vec::new(), None));
        }
        let even = q.rem_euclid(2) == 0;
        match self.path {
            PathKind::Fast(kk) => {
                let (tau, nrm) = self.fast_operators(level_m, kk);
                let ident = PkMat::identity(self.p, kk, self.gens);
                let tm1 = tau.sub(&ident);
                let (f, gop) = if even { (tm1, nrm) } else { (nrm, tm1) };
                let rpk = PkMat::from_zmat(&self.rels, self.p, kk);
                let c1 = PkMat::hstack(&[&f, &rpk]);
                let y = c1.kernel_gens().top_rows(self.gens);
                let bstack = PkMat::hstack(&[&gop, &rpk]);
                let c2 = PkMat::hstack(&[&y, &bstack]);
                let a2 = c2.kernel_gens().top_rows(y.cols);
                let snf = a2.snf(false, false);
                let exps = pad_exponents(&snf.vals, y.cols, kk);
                Ok((exps, Some(PartsData { y, bstack, a2, kk })))
            }
            PathKind::Exact => {
                let w = max_precision(self.p);
                let (tau, nrm) = self.exact_operators(level_m);
                let tm1 = tau.sub(&ZMat::identity(self.gens));
                let (f, gop) = if even { (tm1, nrm) } else { (nrm, tm1) };
                let c1 = ZMat::hstack(&[&f, &self.rels]);
                let y = c1.kernel_basis().top_rows(self.gens);
                let bstack = ZMat::hstack(&[&gop, &self.rels]);
                let c2 = ZMat::hstack(&[&y, &bstack]);
                let a2 = c2.kernel_basis().top_rows(y.cols);
                let snf = a2.snf(false, false);
                if snf.rank < y.cols {
                    return Err(Error::Internal(
                        "cohomology of a cyclic p-group is finite; free part means the \
                         presentation is inconsistent"
                            .into(),
                    ));
                }
                // prime-to-p divisor parts are artifacts of working with the
                // integer span instead of its p-local saturation; drop them
                let mut exps: Vec<u32> = snf
                    .diag
                    .iter()
                    .map(|d| zarith::big_valuation(d.magnitude(), self.p))
                    .filter(|&v| v > 0)
                    .collect();
                exps.sort_unstable();
                let parts = PartsData {
                    y: PkMat::from_zmat(&y, self.p, w),
                    bstack: PkMat::from_zmat(&bstack, self.p, w),
                    a2: PkMat::from_zmat(&a2, self.p, w),
                    kk: w,
                };
                Ok((exps, Some(parts)))
            }
        }
    }
}

/// `H^q(G_m, M)` for the subgroup `G_m = <sigma^{p^level_m}>`, using the
/// 2-periodicity of Tate cohomology of cyclic groups to reduce q mod 2.
///
/// Fails with `PrecisionExhausted` when a computed cyclic factor reaches
/// p^{K-2}: such a factor cannot be told apart from precision loss at the
/// declared precision, so no order is reported.
pub fn tate_cohomology(q: i64, m: &GroupModule, level_m: u32) -> Result<FiniteAbelianGroup> {
    let (exps, _) = m.tate_parts(q, level_m)?;
    guard_exponents(&exps, m.k, m.t - level_m)?;
    Ok(FiniteAbelianGroup::from_p_exponents(m.p, &exps))
}

/// Orders of `H^0` and `H^-1` and whether they agree (the Herbrand quotient
/// of a finite module is 1). Refuses modules with a free part, where the
/// quotient is meaningful only after a different normalization.
pub fn herbrand_check(m: &GroupModule, level_m: u32) -> Result<(bool, BigUint, BigUint)> {
    if !m.is_finite() {
        return Err(Error::Hypothesis(
            "module has a free part; the Herbrand quotient comparison needs a finite module"
                .into(),
        ));
    }
    let h0 = tate_cohomology(0, m, level_m)?.order();
    let h1 = tate_cohomology(-1, m, level_m)?.order();
    Ok((h0 == h1, h0, h1))
}

/// The chi-eigenspace `M(chi) = M / (delta - chi(delta)) M` as a new module.
/// chi sends the auxiliary generator to `zeta_o^{chi_exponent}`. For o = 2
/// the projection is exact integer arithmetic and keeps the semantics; for
/// o > 2 the root of unity only exists p-adically, so the result is a ModPk
/// presentation and o must divide p - 1.
pub fn project_eigenspace(m: &GroupModule, chi_exponent: u64) -> Result<GroupModule> {
    let (order, d) = m
        .delta
        .as_ref()
        .ok_or_else(|| Error::Input("module carries no auxiliary action to project".into()))?;
    let (order, d) = (*order, d.clone());
    let c = chi_exponent % order.max(1);
    let (rels, semantics) = if order <= 2 {
        let z = if c == 0 { BigInt::one() } else { -BigInt::one() };
        let shift = d.sub(&ZMat::identity(m.gens).scale(&z));
        (ZMat::hstack(&[&m.rels, &shift]), m.semantics)
    } else {
        if (m.p - 1) % order != 0 {
            return Err(Error::Hypothesis(format!(
                "character order {order} does not divide p - 1 = {}; its values are not in Z_p",
                m.p - 1
            )));
        }
        let z = chi_value_residue(m.p, m.k, order, c)?;
        let dpk = PkMat::from_zmat(&d, m.p, m.k);
        let shift = dpk.sub(&scaled_identity(m.p, m.k, m.gens, z));
        (
            ZMat::hstack(&[&m.rels, &shift.to_zmat()]),
            Semantics::ModPk,
        )
    };
    let out = GroupModule::from_mats(m.p, m.k, m.t, m.sigma.clone(), rels, semantics)?;
    Ok(GroupModule {
        poly_hint: if semantics == m.semantics { m.poly_hint } else { None },
        ..out
    })
}

/// Checks that projecting to a chi-eigenspace commutes with taking `H^q` of
/// the full group: `H^q(G, M(chi)) = H^q(G, M)(chi)`. The right side is
/// computed by transporting the auxiliary action onto the cohomology
/// presentation and projecting there. When the character order exceeds 2 the
/// projection only exists mod p^K, so the unprojected side is read mod p^K
/// as well; otherwise the two sides would live over different rings.
pub fn eigenspace_cohomology_commutes(
    m: &GroupModule,
    chi_exponent: u64,
    q: i64,
) -> Result<bool> {
    let (order, dmat) = m
        .delta
        .as_ref()
        .ok_or_else(|| Error::Input("module carries no auxiliary action to project".into()))?;
    let (order, dmat) = (*order, dmat.clone());
    if order > 2 && (m.p - 1) % order != 0 {
        return Err(Error::Hypothesis(format!(
            "character order {order} does not divide p - 1 = {}; its values are not in Z_p",
            m.p - 1
        )));
    }
    let lhs = tate_cohomology(q, &project_eigenspace(m, chi_exponent)?, 0)?;

    let base;
    let m = if order > 2 && m.semantics == Semantics::ZpLattice {
        base = GroupModule::from_mats(
            m.p,
            m.k,
            m.t,
            m.sigma.clone(),
            m.rels.clone(),
            Semantics::ModPk,
        )?
        .with_delta_mat(order, dmat.clone())?;
        &base
    } else {
        m
    };
    let (exps, parts) = m.tate_parts(q, 0)?;
    guard_exponents(&exps, m.k, m.t)?;
    let rhs = match parts {
        None => FiniteAbelianGroup::trivial(),
        Some(pd) if pd.y.cols == 0 => FiniteAbelianGroup::trivial(),
        Some(pd) => {
            let y = pd.y.cols;
            let z = chi_value_residue(m.p, pd.kk, order, chi_exponent % order)?;
            let dpk = PkMat::from_zmat(&dmat, m.p, pd.kk);
            let c2 = PkMat::hstack(&[&pd.y, &pd.bstack]);
            let s2 = c2.snf(true, true);
            let mut dh = PkMat::zero(m.p, pd.kk, y, y);
            for j in 0..y {
                let image = dpk.mul_vec(&pd.y.col(j));
                let w = s2.solve(&image).ok_or_else(|| {
                    Error::Internal(
                        "auxiliary action does not preserve the cohomology numerator".into(),
                    )
                })?;
                for i in 0..y {
                    dh.set(i, j, w[i]);
                }
            }
            let shift = dh.sub(&scaled_identity(m.p, pd.kk, y, z));
            let rel = PkMat::hstack(&[&pd.a2, &shift]);
            let snf = rel.snf(false, false);
            let exps2 = pad_exponents(&snf.vals, y, pd.kk);
            guard_exponents(&exps2, m.k, m.t)?;
            FiniteAbelianGroup::from_p_exponents(m.p, &exps2)
        }
    };
    Ok(lhs == rhs)
}

/// The submodule generated by the columns of `map` (a g x g matrix commuting
/// with the actions on M), presented on those columns as generators. Together
/// with [`quotient_by_image`] this yields short exact sequences
/// `0 -> im(map) -> M -> M/im(map) -> 0`.
pub fn image_submodule(parent: &GroupModule, map_rows: &[Vec<BigInt>]) -> Result<GroupModule> {
    let phi = mat_from_rows(map_rows, parent.gens, parent.gens)?;
    parent_equivariance(parent, &phi)?;
    let rels_a = match (parent.semantics, parent.path) {
        (Semantics::ModPk, PathKind::Fast(kk)) => {
            let c = PkMat::hstack(&[
                &PkMat::from_zmat(&phi, parent.p, kk),
                &PkMat::from_zmat(&parent.rels, parent.p, kk),
            ]);
            c.kernel_gens().top_rows(parent.gens).to_zmat()
        }
        (Semantics::ZpLattice, PathKind::Fast(kk)) => {
            let c = PkMat::hstack(&[
                &PkMat::from_zmat(&phi, parent.p, kk),
                &PkMat::from_zmat(&parent.rels, parent.p, kk),
            ]);
            let a = c.kernel_gens().top_rows(parent.gens).to_zmat();
            let scale = BigInt::from(parent.p).pow(kk);
            ZMat::hstack(&[&a, &ZMat::identity(parent.gens).scale(&scale)])
        }
        (_, PathKind::Exact) => {
            let c = ZMat::hstack(&[&phi, &parent.rels]);
            c.kernel_basis().top_rows(parent.gens)
        }
    };
    rebuild_like(parent, rels_a)
}

/// The quotient of M by the submodule generated by the columns of `map`.
pub fn quotient_by_image(parent: &GroupModule, map_rows: &[Vec<BigInt>]) -> Result<GroupModule> {
    let phi = mat_from_rows(map_rows, parent.gens, parent.gens)?;
    parent_equivariance(parent, &phi)?;
    let rels_c = ZMat::hstack(&[&parent.rels, &phi]);
    rebuild_like(parent, rels_c)
}

fn rebuild_like(parent: &GroupModule, rels: ZMat) -> Result<GroupModule> {
    let out = GroupModule::from_mats(
        parent.p,
        parent.k,
        parent.t,
        parent.sigma.clone(),
        rels,
        parent.semantics,
    )?;
    let out = match &parent.delta {
        Some((o, d)) => out.with_delta_mat(*o, d.clone())?,
        None => out,
    };
    Ok(GroupModule {
        poly_hint: parent.poly_hint,
        ..out
    })
}

fn parent_equivariance(parent: &GroupModule, phi: &ZMat) -> Result<()> {
    if parent.gens == 0 {
        return Ok(());
    }
    let kk = parent.working_precision();
    let ppk = PkMat::from_zmat(phi, parent.p, kk);
    let spk = PkMat::from_zmat(&parent.sigma, parent.p, kk);
    let rsnf = PkMat::from_zmat(&parent.rels, parent.p, kk).snf(true, true);
    if !cols_in_span(&rsnf, &ppk.mul(&spk).sub(&spk.mul(&ppk))) {
        return Err(Error::Input(
            "map does not commute with the group action on the module".into(),
        ));
    }
    if let Some((_, d)) = &parent.delta {
        let dpk = PkMat::from_zmat(d, parent.p, kk);
        if !cols_in_span(&rsnf, &ppk.mul(&dpk).sub(&dpk.mul(&ppk))) {
            return Err(Error::Input(
                "map does not commute with the auxiliary action on the module".into(),
            ));
        }
    }
    Ok(())
}

/// Smith normal form of an integer matrix read mod p^K: returns the diagonal
/// divisors (each a power of p; p^K stands for a zero divisor) and the
/// unimodular-mod-p^K row and column transforms with U * M * V diagonal.
pub fn smith_normal_form(
    matrix_rows: &[Vec<BigInt>],
    p: u64,
    precision: u32,
) -> Result<(Vec<BigUint>, Vec<Vec<BigUint>>, Vec<Vec<BigUint>>)> {
    if p < 3 || !is_small_prime(p) {
        return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
    }
    let w = max_precision(p);
    if precision == 0 || precision > w {
        return Err(Error::Input(format!(
            "precision K = {precision} outside the supported range 1..={w} for p = {p}"
        )));
    }
    let rows = matrix_rows.len();
    let cols = matrix_rows.first().map_or(0, |r| r.len());
    let m = mat_from_rows(matrix_rows, rows, cols)?;
    let pk = PkMat::from_zmat(&m, p, precision);
    let snf = pk.snf(true, true);
    let divisors: Vec<BigUint> = snf
        .vals
        .iter()
        .map(|&v| BigUint::from(p).pow(v))
        .collect();
    let to_rows = |m: &PkMat| -> Vec<Vec<BigUint>> {
        (0..m.rows)
            .map(|i| (0..m.cols).map(|j| BigUint::from(m.at(i, j))).collect())
            .collect()
    };
    let u = to_rows(snf.u.as_ref().unwrap());
    let v = to_rows(snf.v.as_ref().unwrap());
    Ok((divisors, u, v))
}

/// Deterministic pseudo-random valid module for property suites: a block sum
/// of trivial, group-ring, augmentation-ideal and cyclotomic-companion pieces
/// with optional torsion and extra orbit relations, conjugated by a random
/// unimodular change of basis. `with_aux` attaches an order-2 auxiliary
/// action of blockwise signs.
pub fn sample_module(
    p: u64,
    precision: u32,
    max_level: u32,
    max_gens: usize,
    with_aux: bool,
    seed: u64,
) -> Result<GroupModule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = rng.gen_range(0..=max_level);
    let semantics = if rng.gen_bool(0.5) {
        Semantics::ModPk
    } else {
        Semantics::ZpLattice
    };

    // assemble blocks: (sigma block, aux sign, torsion exponent)
    let mut blocks: Vec<(ZMat, i64, Option<u32>)> = Vec::new();
    let mut total = 0usize;
    let want_blocks = rng.gen_range(1..=3);
    for _ in 0..want_blocks {
        let kind = if t == 0 { 0 } else { rng.gen_range(0..4) };
        let j = if t == 0 { 0 } else { rng.gen_range(1..=t) };
        let s = match kind {
            0 => ZMat::identity(1),
            1 => {
                let g = p.pow(j) as usize;
                let mut s = ZMat::zero(g, g);
                for c in 0..g {
                    s.set((c + 1) % g, c, BigInt::one());
                }
                s
            }
            2 => {
                let g = p.pow(j) as usize - 1;
                let mut s = ZMat::zero(g, g);
                for c in 0..g {
                    if c + 1 < g {
                        s.set(c + 1, c, BigInt::one());
                    }
                    s.set(0, c, s.at(0, c) - BigInt::one());
                }
                s
            }
            _ => {
                // multiplication by sigma on Z[sigma]/Phi_{p^j}(sigma)
                let g = (p.pow(j) - p.pow(j - 1)) as usize;
                let step = p.pow(j - 1) as usize;
                let mut s = ZMat::zero(g, g);
                for c in 0..g - 1 {
                    s.set(c + 1, c, BigInt::one());
                }
                for i in 0..(p - 1) as usize {
                    s.set(i * step, g - 1, -BigInt::one());
                }
                s
            }
        };
        if total + s.rows > max_gens {
            continue;
        }
        total += s.rows;
        let sign = if with_aux && rng.gen_bool(0.5) { -1 } else { 1 };
        let torsion = if rng.gen_bool(0.5) {
            Some(rng.gen_range(1..=3u32))
        } else {
            None
        };
        blocks.push((s, sign, torsion));
    }
    if blocks.is_empty() {
        blocks.push((ZMat::identity(1), 1, None));
        total = 1;
    }

    let g = total;
    let mut sigma = ZMat::zero(g, g);
    let mut dmat = ZMat::zero(g, g);
    let mut rel_cols: Vec<Vec<BigInt>> = Vec::new();
    let mut off = 0;
    for (s, sign, torsion) in &blocks {
        copy_block(&mut sigma, s, off, off);
        for i in 0..s.rows {
            dmat.set(off + i, off + i, BigInt::from(*sign));
        }
        if let Some(e) = torsion {
            let pe = BigInt::from(p).pow(*e);
            for i in 0..s.rows {
                let mut col = vec![BigInt::zero(); g];
                col[off + i] = pe.clone();
                rel_cols.push(col);
            }
        }
        off += s.rows;
    }

    // extra relations: the full group (and sign) orbit of a random vector
    if rng.gen_bool(0.4) {
        let mut v = vec![BigInt::zero(); g];
        for x in v.iter_mut() {
            if rng.gen_bool(0.3) {
                *x = BigInt::from(rng.gen_range(-2i64..=2));
            }
        }
        let orbit = p.pow(t).min(32);
        let mut w = v.clone();
        for _ in 0..orbit {
            rel_cols.push(w.clone());
            if with_aux {
                rel_cols.push(dmat.mul_vec(&w));
            }
            w = sigma.mul_vec(&w);
        }
    }

    // random unimodular change of basis by shear operations
    let mut u = ZMat::identity(g);
    let mut uinv = ZMat::identity(g);
    let shears = rng.gen_range(0..=12usize.min(2 * g));
    for _ in 0..shears {
        let i = rng.gen_range(0..g);
        let mut j = rng.gen_range(0..g);
        if g > 1 {
            while j == i {
                j = rng.gen_range(0..g);
            }
        } else {
            continue;
        }
        let c = if rng.gen_bool(0.5) { 1i64 } else { -1 };
        // row op on u: row_i += c * row_j; inverse accumulates on the right
        let mut e = ZMat::identity(g);
        e.set(i, j, BigInt::from(c));
        let mut einv = ZMat::identity(g);
        einv.set(i, j, BigInt::from(-c));
        u = e.mul(&u);
        uinv = uinv.mul(&einv);
    }
    let sigma = u.mul(&sigma).mul(&uinv);
    let dmat = u.mul(&dmat).mul(&uinv);
    let rels = if rel_cols.is_empty() {
        ZMat::zero(g, 0)
    } else {
        u.mul(&mat_from_cols(&rel_cols, g)?)
    };

    let out = GroupModule::from_mats(p, precision, t, sigma, rels, semantics)?;
    if with_aux {
        out.with_delta_mat(2, dmat)
    } else {
        Ok(out)
    }
}

fn decide_path(p: u64, k: u32, gens: usize, rels: &ZMat, semantics: Semantics) -> PathKind {
    match semantics {
        Semantics::ModPk => PathKind::Fast(k),
        Semantics::ZpLattice => {
            if rels.cols == 0 || gens == 0 {
                return PathKind::Exact;
            }
            let w = max_precision(p);
            let snf = PkMat::from_zmat(rels, p, w).snf(false, false);
            // full row rank with margin: a nonzero g x g minor mod p^W of
            // valuation <= W-3 certifies p^W Z^g inside the relation span,
            // making every computation mod p^W equal to the Z_p one
            if snf.rank() == gens && snf.vals.iter().all(|&v| v <= w - 3) {
                PathKind::Fast(w)
            } else {
                PathKind::Exact
            }
        }
    }
}

fn guard_exponents(exps: &[u32], k: u32, subgroup_exponent: u32) -> Result<()> {
    for &e in exps {
        if e >= k - 2 {
            return Err(Error::PrecisionExhausted(format!(
                "computed cyclic factor p^{e} reaches the guard band at precision K = {k}"
            )));
        }
        if e > subgroup_exponent {
            return Err(Error::Internal(format!(
                "cohomology factor p^{e} exceeds the acting group order p^{subgroup_exponent}; \
                 the module presentation is inconsistent"
            )));
        }
    }
    Ok(())
}

fn pad_exponents(vals: &[u32], count: usize, kk: u32) -> Vec<u32> {
    let mut exps: Vec<u32> = vals.iter().copied().filter(|&v| v > 0).collect();
    exps.extend(std::iter::repeat(kk).take(count.saturating_sub(vals.len())));
    exps
}

fn cols_in_span(rsnf: &PkSnf, targets: &PkMat) -> bool {
    (0..targets.cols).all(|j| rsnf.solve(&targets.col(j)).is_some())
}

fn chi_value_residue(p: u64, kk: u32, order: u64, c: u64) -> Result<u64> {
    let pk = pk_of(p, kk);
    if order <= 1 || c == 0 {
        return Ok(1 % pk);
    }
    if order == 2 {
        return Ok(if c % 2 == 0 { 1 % pk } else { pk - 1 });
    }
    if (p - 1) % order != 0 {
        return Err(Error::Hypothesis(format!(
            "character order {order} does not divide p - 1 = {}",
            p - 1
        )));
    }
    let g0 = zarith::primitive_root(p);
    let zeta = crate::padic::teichmuller(g0, p, kk)?;
    let z = zeta.pow_u((p - 1) / order * (c % order));
    let r = z.residue()?;
    Ok(r.to_u64().expect("residue fits u64 below the precision cap"))
}

fn scaled_identity(p: u64, kk: u32, n: usize, z: u64) -> PkMat {
    let mut m = PkMat::zero(p, kk, n, n);
    for i in 0..n {
        m.set(i, i, z);
    }
    m
}

fn pk_of(p: u64, k: u32) -> u64 {
    p.pow(k)
}

fn copy_block(dst: &mut ZMat, src: &ZMat, row_off: usize, col_off: usize) {
    for i in 0..src.rows {
        for j in 0..src.cols {
            dst.set(row_off + i, col_off + j, src.at(i, j).clone());
        }
    }
}

fn mat_from_rows(rows: &[Vec<BigInt>], expect_rows: usize, expect_cols: usize) -> Result<ZMat> {
    if rows.len() != expect_rows || rows.iter().any(|r| r.len() != expect_cols) {
        return Err(Error::Input(format!(
            "expected a {expect_rows} x {expect_cols} matrix"
        )));
    }
    Ok(ZMat::from_fn(expect_rows, expect_cols, |i, j| {
        rows[i][j].clone()
    }))
}

fn mat_from_cols(cols: &[Vec<BigInt>], rows: usize) -> Result<ZMat> {
    if cols.iter().any(|c| c.len() != rows) {
        return Err(Error::Input(format!(
            "every relation column must have length {rows}"
        )));
    }
    Ok(ZMat::from_cols(rows, cols.to_vec()))
}

/// Sum of the first e powers of t, by binary doubling:
/// s(2c) = (1 + t^c) s(c), s(2c+1) = 1 + t s(2c).
fn geom_sum_z(t: &ZMat, e: u64) -> ZMat {
    let n = t.rows;
    if e == 0 {
        return ZMat::zero(n, n);
    }
    let mut s = ZMat::identity(n);
    let mut pw = t.clone();
    let bits = 63 - e.leading_zeros() as u64;
    for b in (0..bits).rev() {
        s = s.add(&pw.mul(&s));
        pw = pw.mul(&pw);
        if (e >> b) & 1 == 1 {
            s = ZMat::identity(n).add(&t.mul(&s));
            pw = pw.mul(t);
        }
    }
    s
}

fn geom_sum_pk(t: &PkMat, e: u64) -> PkMat {
    let n = t.rows;
    if e == 0 {
        return PkMat::zero(t.p, t.k, n, n);
    }
    let ident = PkMat::identity(t.p, t.k, n);
    let mut s = ident.clone();
    let mut pw = t.clone();
    let bits = 63 - e.leading_zeros() as u64;
    for b in (0..bits).rev() {
        s = s.add(&pw.mul(&s));
        pw = pw.mul(&pw);
        if (e >> b) & 1 == 1 {
            s = ident.add(&t.mul(&s));
            pw = pw.mul(t);
        }
    }
    s
}

// Polynomial arithmetic in (Z/p^K)[T]/(omega), omega = (1+T)^g - 1, used to
// build tau and norm operators on the power basis without matrix powers.

/// Coefficients of T^g reduced mod omega: -binomial(g, i) for 0 < i < g.
pub(crate) fn omega_tail(p: u64, k: u32, g: usize) -> Vec<u64> {
    let pk = pk_of(p, k);
    // Pascal triangle row g mod p^K
    let mut row = vec![0u64; g + 1];
    row[0] = 1 % pk;
    for _ in 0..g {
        for j in (1..=g).rev() {
            row[j] = (row[j] + row[j - 1]) % pk;
        }
    }
    let mut tail = vec![0u64; g];
    for i in 1..g {
        tail[i] = (pk - row[i]) % pk;
    }
    tail
}

fn unit_poly(g: usize, pk: u64) -> Vec<u64> {
    // the polynomial 1 + T
    let mut v = vec![0u64; g];
    v[0] = 1 % pk;
    if g > 1 {
        v[1] = 1 % pk;
    }
    v
}

fn poly_mulmod(a: &[u64], b: &[u64], tail: &[u64], pk: u64) -> Vec<u64> {
    let g = a.len();
    let mut buf = vec![0u128; 2 * g - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            buf[i + j] += x as u128 * y as u128 % pk as u128;
        }
    }
    for v in buf.iter_mut() {
        *v %= pk as u128;
    }
    for d in (g..2 * g - 1).rev() {
        let c = buf[d];
        if c == 0 {
            continue;
        }
        buf[d] = 0;
        for i in 1..g {
            if tail[i] != 0 {
                buf[d - g + i] = (buf[d - g + i] + c * tail[i] as u128) % pk as u128;
            }
        }
    }
    buf[..g].iter().map(|&v| v as u64).collect()
}

fn poly_powmod(base: &[u64], e: u64, tail: &[u64], pk: u64) -> Vec<u64> {
    let g = base.len();
    let mut acc = vec![0u64; g];
    acc[0] = 1 % pk;
    let mut b = base.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mulmod(&acc, &b, tail, pk);
        }
        e >>= 1;
        if e > 0 {
            b = poly_mulmod(&b, &b, tail, pk);
        }
    }
    acc
}

/// Sum of the first e powers of u in the quotient ring, by binary doubling.
fn poly_geom_sum(u: &[u64], e: u64, tail: &[u64], pk: u64) -> Vec<u64> {
    let g = u.len();
    let mut one = vec![0u64; g];
    one[0] = 1 % pk;
    if e == 0 {
        return vec![0u64; g];
    }
    let mut s = one.clone();
    let mut pw = u.to_vec();
    let bits = 63 - e.leading_zeros() as u64;
    for b in (0..bits).rev() {
        let ts = poly_mulmod(&pw, &s, tail, pk);
        for (x, y) in s.iter_mut().zip(&ts) {
            *x = (*x + *y) % pk;
        }
        pw = poly_mulmod(&pw, &pw, tail, pk);
        if (e >> b) & 1 == 1 {
            let ts = poly_mulmod(u, &s, tail, pk);
            s = one.clone();
            for (x, y) in s.iter_mut().zip(&ts) {
                *x = (*x + *y) % pk;
            }
            pw = poly_mulmod(&pw, u, tail, pk);
        }
    }
    s
}

/// Matrix of multiplication by v on the power basis of the quotient ring.
pub(crate) fn mult_matrix(v: &[u64], tail: &[u64], p: u64, k: u32) -> PkMat {
    let g = v.len();
    let pk = pk_of(p, k);
    let mut m = PkMat::zero(p, k, g, g);
    let mut w = v.to_vec();
    for c in 0..g {
        for i in 0..g {
            m.set(i, c, w[i]);
        }
        if c + 1 < g {
            // w <- T * w mod omega
            let top = w[g - 1];
            for i in (1..g).rev() {
                w[i] = w[i - 1];
            }
            w[0] = 0;
            if top != 0 {
                for i in 1..g {
                    if tail[i] != 0 {
                        w[i] = ((w[i] as u128 + top as u128 * tail[i] as u128) % pk as u128) as u64;
                    }
                }
            }
        }
    }
    m
}
