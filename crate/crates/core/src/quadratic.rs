//! Real quadratic fields: fundamental units by continued fractions, narrow
//! and wide class groups through reduced indefinite forms, the order of the
//! class of a split prime, and the comparison of the class number with the
//! index of the circular unit inside the full unit group.
//!
//! Everything is exact. The continued fraction of a reduced quadratic
//! irrational is purely periodic and one period's convergents assemble the
//! fundamental unit; reduced forms fall into reduction cycles that list the
//! narrow classes; Dirichlet composition gives the group law; the wide
//! group is the quotient by the class that flips the sign of the norm.
//! Floating point appears only as a hint when sizing the exponent that
//! relates the circular unit to the fundamental unit, and every hinted
//! exponent is confirmed by exact arithmetic before it is reported.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::characters::is_fundamental_discriminant;
use crate::cyclotomic::{eta_base, QuadraticUnitRep};
use crate::{Error, Result};

/// Bound on discriminants accepted by the exact routines. Form coefficients
/// stay within i64 and composition within i128 below it.
const MAX_DISC: i64 = 1_000_000;

fn validate_real_fundamental(d: i64) -> Result<()> {
    if d <= 0 {
        return Err(Error::Hypothesis(format!(
            "discriminant {d} is not positive: the field has no fundamental unit"
        )));
    }
    if d > MAX_DISC {
        return Err(Error::Input(format!(
            "discriminant {d} exceeds the supported bound {MAX_DISC}"
        )));
    }
    if !is_fundamental_discriminant(d) {
        return Err(Error::Input(format!("{d} is not a fundamental discriminant")));
    }
    Ok(())
}

/// The fundamental unit (a + b sqrt(D)) / 2 > 1 of the maximal order,
/// together with its norm and the continued fraction period that produced
/// it. The norm is -1 exactly when the period is odd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FundamentalUnit {
    disc: i64,
    a: BigInt,
    b: BigInt,
    norm: i32,
    period: u32,
}

impl FundamentalUnit {
    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }

    pub fn b(&self) -> &BigInt {
        &self.b
    }

    pub fn norm(&self) -> i32 {
        self.norm
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    /// Natural logarithm of the unit, the regulator of the field.
    pub fn regulator(&self) -> f64 {
        // eps = (a + b sqrt(D)) / 2 with both coordinates positive, so
        // ln eps = ln a + ln(1 + (b/a) sqrt(D)) - ln 2 and the ratio b/a
        // is moderate even when the coordinates themselves are huge
        let la = big_ln(&self.a);
        let lb = big_ln(&self.b);
        la + (lb - la + 0.5 * (self.disc as f64).ln()).exp().ln_1p() - std::f64::consts::LN_2
    }
}

/// ln of a positive big integer, exact to f64 roundoff.
fn big_ln(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().expect("small magnitude").ln();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_f64().expect("53-bit window");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Computes the fundamental unit by expanding the purely periodic
/// continued fraction of a reduced irrational of discriminant D and
/// folding one full period of convergents.
pub fn fundamental_unit(d: i64) -> Result<FundamentalUnit> {
    validate_real_fundamental(d)?;
    // the reduced seed: floor(sqrt(d/4)) + sqrt(d/4) for even D, else
    // (b0 + sqrt(D))/2 with b0 the largest odd integer below sqrt(D)
    let (radicand, p0, q0) = if d % 4 == 0 {
        let r = (d / 4) as u64;
        (r, r.sqrt() as i64, 1i64)
    } else {
        let r = d as u64;
        let s = r.sqrt() as i64;
        (r, s - (1 - s % 2), 2i64)
    };
    let sqrt_floor = radicand.sqrt() as i64;
    let (mut pp, mut qq) = (p0, q0);
    let mut quotients: Vec<i64> = Vec::new();
    loop {
        let a = (pp + sqrt_floor).div_euclid(qq);
        quotients.push(a);
        pp = a * qq - pp;
        qq = (radicand as i64 - pp * pp) / qq;
        if (pp, qq) == (p0, q0) {
            break;
        }
        if quotients.len() > 4 * (d as usize) {
            return Err(Error::Internal(format!(
                "continued fraction of discriminant {d} failed to close"
            )));
        }
    }
    let period = quotients.len() as u32;
    // denominator convergents q_{-1} = 0, q_0 = 1 fold the period into
    // eps = q_{l-1} omega + q_{l-2}
    let mut q_prev = BigInt::zero();
    let mut q_cur = BigInt::one();
    for &a in &quotients[1..] {
        let next = BigInt::from(a) * &q_cur + &q_prev;
        q_prev = std::mem::replace(&mut q_cur, next);
    }
    // omega in half-coordinates: ((2 p0 + sqrt(D))/2 for even D comes from
    // sqrt(D) = 2 sqrt(d/4); odd D has omega = (p0 + sqrt(D))/2 directly
    let (oa, ob) = if d % 4 == 0 {
        (BigInt::from(2 * p0), BigInt::one())
    } else {
        (BigInt::from(p0), BigInt::one())
    };
    let a = &oa * &q_cur + BigInt::from(2) * &q_prev;
    let b = ob * &q_cur;
    let four_norm = &a * &a - BigInt::from(d) * &b * &b;
    let norm = if four_norm == BigInt::from(4) {
        1
    } else if four_norm == BigInt::from(-4) {
        -1
    } else {
        return Err(Error::Internal(format!(
            "period fold for discriminant {d} is not a unit"
        )));
    };
    if norm != if period % 2 == 0 { 1 } else { -1 } {
        return Err(Error::Internal(format!(
            "unit norm disagrees with the period parity for discriminant {d}"
        )));
    }
    Ok(FundamentalUnit {
        disc: d,
        a,
        b,
        norm,
        period,
    })
}

/// Multiplies two elements (a + b sqrt(D))/2 in exact half-coordinates.
fn half_mul(d: i64, x: &(BigInt, BigInt), y: &(BigInt, BigInt)) -> (BigInt, BigInt) {
    let a = (&x.0 * &y.0 + BigInt::from(d) * &x.1 * &y.1) / 2;
    let b = (&x.0 * &y.1 + &x.1 * &y.0) / 2;
    (a, b)
}

/// Raises a unit of norm +-1 to an integer power, exact.
fn unit_pow(d: i64, base: &(BigInt, BigInt), norm: i32, e: i64) -> (BigInt, BigInt) {
    let mut x = if e < 0 {
        // inverse of a unit u is N(u) times the conjugate
        let s = BigInt::from(norm);
        (&base.0 * &s, -(&base.1 * &s))
    } else {
        base.clone()
    };
    let mut k = e.unsigned_abs();
    let mut acc = (BigInt::from(2), BigInt::zero());
    while k > 0 {
        if k & 1 == 1 {
            acc = half_mul(d, &acc, &x);
        }
        k >>= 1;
        if k > 0 {
            x = half_mul(d, &x, &x);
        }
    }
    acc
}

/// A binary quadratic form a x^2 + b xy + c y^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl Form {
    fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }
}

fn is_reduced(f: &Form, d: i64) -> bool {
    // 0 < b < sqrt(D) and sqrt(D) - 2|a| < b < sqrt(D) + 2|a|, in exact
    // integer form since D is never a perfect square here
    if f.b <= 0 || f.b * f.b >= d {
        return false;
    }
    let t = f.b + 2 * f.a.abs();
    if t * t <= d {
        return false;
    }
    let s = 2 * f.a.abs() - f.b;
    s <= 0 || s * s < d
}

/// One step of the reduction walk. On a reduced form it advances along the
/// form's cycle; on an arbitrary form, iterating it terminates in a
/// reduced one.
fn rho(f: &Form, d: i64, sqrt_floor: i64) -> Form {
    let c = f.c;
    let ac = c.abs();
    debug_assert!(ac > 0);
    let modulus = 2 * ac;
    // target range for the new middle coefficient
    let high = if ac * ac > d { ac } else { sqrt_floor };
    let low = high - modulus + 1;
    let r0 = (-f.b).rem_euclid(modulus);
    let r = low + (r0 - low).rem_euclid(modulus);
    debug_assert!(low <= r && r <= high && (r + f.b) % modulus == 0);
    let rc = ((r as i128 * r as i128 - d as i128) / (4 * c as i128)) as i64;
    Form { a: c, b: r, c: rc }
}

fn reduce(mut f: Form, d: i64, sqrt_floor: i64) -> Form {
    // the walk contracts |c| geometrically until it enters a cycle, so
    // this many steps always suffice for i64-sized inputs
    for _ in 0..64 + 4 * (64 - d.leading_zeros() as usize) {
        if is_reduced(&f, d) {
            return f;
        }
        f = rho(&f, d, sqrt_floor);
    }
    unreachable!("reduction walk failed to terminate");
}

/// All reduced forms of discriminant d > 0.
fn reduced_forms(d: i64) -> Vec<Form> {
    let mut out = Vec::new();
    let start = if d % 2 == 0 { 2 } else { 1 };
    let mut b = start;
    while b * b < d {
        let t = (d - b * b) / 4;
        let mut u = 1;
        while u * u <= t {
            if t % u == 0 {
                for cand in [u, t / u] {
                    // (sqrt(D) - b)/2 < cand < (sqrt(D) + b)/2, exactly
                    let lo = 2 * cand + b;
                    let hi = 2 * cand - b;
                    if lo * lo > d && (hi <= 0 || hi * hi < d) {
                        out.push(Form { a: cand, b, c: -(t / cand) });
                        out.push(Form { a: -cand, b, c: t / cand });
                    }
                    if u == t / u {
                        break;
                    }
                }
            }
            u += 1;
        }
        b += 2;
    }
    out.sort();
    out.dedup();
    out
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Extended gcd: returns (g, x, y) with a x + b y = g >= 0.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        return if a < 0 { (-a, -1, 0) } else { (a, 1, 0) };
    }
    let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
    (g, y, x - a.div_euclid(b) * y)
}

/// Dirichlet composition of two forms of the same discriminant, reduced.
/// The second form is first moved within its proper equivalence class to a
/// representative whose leading coefficient is coprime to the first's.
fn compose(f1: &Form, f2: &Form, d: i64, sqrt_floor: i64) -> Result<Form> {
    let g2 = if gcd_i128(f1.a as i128, f2.a as i128) == 1 {
        *f2
    } else {
        transform_coprime(f2, f1.a)?
    };
    let (a1, b1) = (f1.a as i128, f1.b as i128);
    let (a2, b2) = (g2.a as i128, g2.b as i128);
    // B = b1 mod 2 a1, B = b2 mod 2 a2; the moduli share only the factor 2
    // and the residues agree mod 2, so a solution exists mod 2 a1 a2
    let (g, x, _) = ext_gcd(2 * a1, 2 * a2);
    debug_assert_eq!(g, 2);
    debug_assert_eq!((b1 - b2).rem_euclid(2), 0);
    let m = 2 * a1 * a2;
    let step = (b2 - b1) / g * x;
    let big_b = (b1 + 2 * a1 * step).rem_euclid(m.abs());
    debug_assert_eq!((big_b - b1).rem_euclid((2 * a1).abs()), 0);
    debug_assert_eq!((big_b - b2).rem_euclid((2 * a2).abs()), 0);
    let aa = a1 * a2;
    let cc = (big_b * big_b - d as i128) / (4 * aa);
    let raw = Form {
        a: i64::try_from(aa).map_err(|_| Error::Internal("composition overflow".into()))?,
        b: i64::try_from(big_b).map_err(|_| Error::Internal("composition overflow".into()))?,
        c: i64::try_from(cc).map_err(|_| Error::Internal("composition overflow".into()))?,
    };
    debug_assert_eq!(raw.disc(), d);
    Ok(reduce(raw, d, sqrt_floor))
}

/// Finds a properly equivalent form whose leading coefficient is coprime
/// to the given modulus, by searching small proper representations.
fn transform_coprime(f: &Form, modulus: i64) -> Result<Form> {
    let m = modulus as i128;
    for radius in 1..=24i128 {
        for x in -radius..=radius {
            for y in -radius..=radius {
                if x.abs().max(y.abs()) != radius && radius > 1 {
                    continue;
                }
                if gcd_i128(x, y) != 1 {
                    continue;
                }
                let v = f.a as i128 * x * x + f.b as i128 * x * y + f.c as i128 * y * y;
                if v == 0 || gcd_i128(v, m) != 1 {
                    continue;
                }
                // complete (x, y) to a determinant-one matrix
                let (g, w, u) = ext_gcd(x, y);
                debug_assert_eq!(g, 1);
                let (bu, bw) = (-u, w);
                let (a, b, c) = (f.a as i128, f.b as i128, f.c as i128);
                let nb = 2 * a * x * bu + b * (x * bw + bu * y) + 2 * c * y * bw;
                let nc = a * bu * bu + b * bu * bw + c * bw * bw;
                let out = Form {
                    a: i64::try_from(v).map_err(|_| Error::Internal("transform overflow".into()))?,
                    b: i64::try_from(nb).map_err(|_| Error::Internal("transform overflow".into()))?,
                    c: i64::try_from(nc).map_err(|_| Error::Internal("transform overflow".into()))?,
                };
                debug_assert_eq!(out.disc(), f.disc());
                return Ok(out);
            }
        }
    }
    Err(Error::Internal(format!(
        "no representation of a value coprime to {modulus} found near the origin"
    )))
}

/// Invariant factors of a finite abelian group from the multiset of its
/// element orders, smallest factor first, each dividing the next.
fn invariants_from_orders(orders: &[u64]) -> Vec<u64> {
    let n = orders.len() as u64;
    if n == 1 {
        return Vec::new();
    }
    let mut partitions: Vec<(u64, Vec<u32>)> = Vec::new();
    let mut rank = 0usize;
    let mut n_rem = n;
    let mut q = 2u64;
    while q * q <= n_rem {
        if n_rem % q == 0 {
            while n_rem % q == 0 {
                n_rem /= q;
            }
            partitions.push((q, order_partition(orders, q)));
        }
        q += 1;
    }
    if n_rem > 1 {
        partitions.push((n_rem, order_partition(orders, n_rem)));
    }
    for (_, part) in &partitions {
        rank = rank.max(part.len());
    }
    let mut factors = vec![1u64; rank];
    for (q, part) in &partitions {
        // align the largest exponents with the largest invariant factor
        for (i, &e) in part.iter().enumerate() {
            factors[rank - 1 - i] *= q.pow(e);
        }
    }
    factors
}

/// The partition of the q-part: exponents of the elementary divisors of
/// the Sylow q-subgroup, largest first, recovered from counts of solutions
/// of x^(q^k) = 1.
fn order_partition(orders: &[u64], q: u64) -> Vec<u32> {
    // m_k = v_q(#{x : x^(q^k) = 1}); the sequence is strictly increasing
    // until it reaches v_q of the group order and then stays there
    let mut ms: Vec<u32> = vec![0];
    loop {
        let qk = q.pow(ms.len() as u32);
        let mut c = orders.iter().filter(|&&o| qk % o == 0).count() as u64;
        let mut v = 0u32;
        while c % q == 0 {
            c /= q;
            v += 1;
        }
        debug_assert_eq!(c, 1, "solution count of x^(q^k) = 1 is a power of q");
        if v == *ms.last().expect("seeded") {
            break;
        }
        ms.push(v);
    }
    // the k-th increment counts elementary divisors with exponent >= k;
    // the conjugate partition lists the exponents, largest first
    let d: Vec<u32> = ms.windows(2).map(|w| w[1] - w[0]).collect();
    (0..d.first().copied().unwrap_or(0))
        .map(|i| d.iter().filter(|&&dj| dj > i).count() as u32)
        .collect()
}

/// Narrow and wide class groups of a real quadratic field, with the
/// fundamental unit. Narrow classes are reduction cycles of reduced
/// indefinite forms; the wide group is the quotient by the class of a
/// norm minus-one form, which is trivial exactly when the fundamental
/// unit has norm -1.
#[derive(Debug, Clone)]
pub struct ClassGroup {
    disc: i64,
    sqrt_floor: i64,
    reps: Vec<Form>,
    cycle_of: HashMap<Form, usize>,
    identity: usize,
    flip: usize,
    narrow_orders: Vec<u64>,
    narrow_invariants: Vec<u64>,
    wide_members: Vec<usize>,
    wide_orders: Vec<u64>,
    wide_invariants: Vec<u64>,
    unit: FundamentalUnit,
}

impl ClassGroup {
    pub fn compute(d: i64) -> Result<ClassGroup> {
        validate_real_fundamental(d)?;
        let unit = fundamental_unit(d)?;
        let sqrt_floor = (d as u64).sqrt() as i64;
        let forms = reduced_forms(d);
        let mut cycle_of: HashMap<Form, usize> = HashMap::new();
        let mut cycles: Vec<Vec<Form>> = Vec::new();
        for &f in &forms {
            if cycle_of.contains_key(&f) {
                continue;
            }
            let idx = cycles.len();
            let mut cycle = Vec::new();
            let mut cur = f;
            loop {
                cycle_of.insert(cur, idx);
                cycle.push(cur);
                cur = rho(&cur, d, sqrt_floor);
                debug_assert!(is_reduced(&cur, d));
                if cur == f {
                    break;
                }
            }
            cycles.push(cycle);
        }
        let reps: Vec<Form> = cycles
            .iter()
            .map(|cycle| *cycle.iter().min().expect("nonempty cycle"))
            .collect();
        // principal form (1, b0, (b0^2 - D)/4) with the largest b0 < sqrt(D)
        // of the right parity; the norm minus-one companion leads with -1
        let b0 = sqrt_floor - ((sqrt_floor ^ d) & 1);
        let principal = Form { a: 1, b: b0, c: (b0 * b0 - d) / 4 };
        debug_assert!(is_reduced(&principal, d));
        let identity = cycle_of[&principal];
        let flip_form = reduce(Form { a: -1, b: b0, c: (d - b0 * b0) / 4 }, d, sqrt_floor);
        let flip = cycle_of[&flip_form];
        if (flip == identity) != (unit.norm() == -1) {
            return Err(Error::Internal(format!(
                "norm of the fundamental unit and the sign class disagree for {d}"
            )));
        }
        let h = reps.len();
        let mut group = ClassGroup {
            disc: d,
            sqrt_floor,
            reps,
            cycle_of,
            identity,
            flip,
            narrow_orders: Vec::new(),
            narrow_invariants: Vec::new(),
            wide_members: Vec::new(),
            wide_orders: Vec::new(),
            wide_invariants: Vec::new(),
            unit,
        };
        let mut narrow_orders = Vec::with_capacity(h);
        for i in 0..h {
            narrow_orders.push(group.class_order(i, false)?);
        }
        group.narrow_orders = narrow_orders;
        group.narrow_invariants = invariants_from_orders(&group.narrow_orders);
        // the wide group keeps one member of each pair {x, x * flip}
        let mut seen = vec![false; h];
        let mut members = Vec::new();
        for i in 0..h {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            seen[group.compose_classes(i, group.flip)?] = true;
            members.push(i);
        }
        group.wide_members = members;
        let mut wide_orders = Vec::new();
        for &i in &group.wide_members.clone() {
            wide_orders.push(group.class_order(i, true)?);
        }
        group.wide_orders = wide_orders;
        group.wide_invariants = invariants_from_orders(&group.wide_orders);
        Ok(group)
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn narrow_order(&self) -> u64 {
        self.reps.len() as u64
    }

    pub fn wide_order(&self) -> u64 {
        self.wide_members.len() as u64
    }

    pub fn narrow_invariants(&self) -> &[u64] {
        &self.narrow_invariants
    }

    pub fn wide_invariants(&self) -> &[u64] {
        &self.wide_invariants
    }

    pub fn unit(&self) -> &FundamentalUnit {
        &self.unit
    }

    /// Canonical representative forms of the narrow classes.
    pub fn narrow_representatives(&self) -> &[Form] {
        &self.reps
    }

    /// Index of the narrow class containing the given form.
    pub fn class_of(&self, f: &Form) -> Result<usize> {
        if f.disc() != self.disc {
            return Err(Error::Input(format!(
                "form of discriminant {} in the group of discriminant {}",
                f.disc(),
                self.disc
            )));
        }
        if f.a == 0 || f.c == 0 {
            return Err(Error::Input("degenerate form with a zero outer coefficient".into()));
        }
        let red = reduce(*f, self.disc, self.sqrt_floor);
        Ok(self.cycle_of[&red])
    }

    /// Composition on narrow class indices.
    pub fn compose_classes(&self, i: usize, j: usize) -> Result<usize> {
        let f = compose(&self.reps[i], &self.reps[j], self.disc, self.sqrt_floor)?;
        Ok(self.cycle_of[&f])
    }

    fn is_wide_identity(&self, i: usize) -> bool {
        i == self.identity || i == self.flip
    }

    /// Order of a narrow class, or of its image in the wide quotient.
    fn class_order(&self, i: usize, wide: bool) -> Result<u64> {
        let mut x = i;
        for k in 1..=2 * self.reps.len() as u64 {
            let done = if wide {
                self.is_wide_identity(x)
            } else {
                x == self.identity
            };
            if done {
                return Ok(k);
            }
            x = self.compose_classes(x, i)?;
        }
        Err(Error::Internal("class order exceeded the group order".into()))
    }

    /// Order of the class of a prime ideal above a split prime p in the
    /// wide class group, restricted to its p-part.
    pub fn prime_class_order(&self, p: u64) -> Result<u64> {
        let d = self.disc;
        if p < 3 || p > 1 << 20 || !crate::padic::is_small_prime(p) {
            return Err(Error::Hypothesis(format!("p = {p} must be an odd prime")));
        }
        if d.rem_euclid(p as i64) == 0 {
            return Err(Error::Hypothesis(format!("p = {p} ramifies in discriminant {d}")));
        }
        let dm = d.rem_euclid(p as i64) as u64;
        let r = (0..p).find(|&r| r * r % p == dm).ok_or_else(|| {
            Error::Hypothesis(format!("{d} is not a square mod {p}: the prime is inert"))
        })?;
        // lift the square root mod p to the right parity mod 4p
        let mut b = r as i64;
        if (b & 1) != (d & 1) {
            b += p as i64;
        }
        debug_assert_eq!((b * b - d).rem_euclid(4 * p as i64), 0);
        let form = Form { a: p as i64, b, c: (b * b - d) / (4 * p as i64) };
        let class = self.class_of(&form)?;
        let mut x = class;
        let mut order = 1u64;
        while !self.is_wide_identity(x) {
            x = self.compose_classes(x, class)?;
            order += 1;
            if order > 2 * self.reps.len() as u64 {
                return Err(Error::Internal("prime class order runaway".into()));
            }
        }
        let mut ppart = 1u64;
        let mut o = order;
        while o % p == 0 {
            o /= p;
            ppart *= p;
        }
        Ok(ppart)
    }
}

/// Outcome of comparing the class number with the exponent that writes the
/// circular unit as a power of the fundamental unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitIndexComparison {
    pub disc: i64,
    pub p: u64,
    /// Wide class number.
    pub class_number: u64,
    /// Exponent e with circular unit = (+-1) eps^e, confirmed exactly.
    pub unit_exponent: i64,
    pub class_valuation: u32,
    pub exponent_valuation: u32,
    pub matched: bool,
}

fn valuation_u64(mut n: u64, p: u64) -> u32 {
    debug_assert!(n > 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Writes the bottom circular unit as a signed power of the fundamental
/// unit and compares p-adic valuations of that exponent and of the wide
/// class number. A floating point quotient of logarithms sizes the
/// exponent; exact half-coordinate arithmetic then confirms it, so a wrong
/// hint fails loudly instead of mismatching silently.
pub fn unit_index_comparison(d: i64, p: u64) -> Result<UnitIndexComparison> {
    let circ = eta_base(d, p)?;
    if circ.is_plus_minus_one() {
        return Err(Error::Internal(
            "the circular unit degenerated to a root of unity".into(),
        ));
    }
    let group = ClassGroup::compute(d)?;
    let eps = group.unit().clone();
    let reg = eps.regulator();
    let ln_circ = ln_abs_unit(&circ);
    let e_hint = (ln_circ / reg).round() as i64;
    let base = (eps.a().clone(), eps.b().clone());
    let mut exponent = None;
    for e in [e_hint, e_hint - 1, e_hint + 1] {
        let pw = unit_pow(d, &base, eps.norm(), e);
        if &pw.0 == circ.a() && &pw.1 == circ.b()
            || pw.0 == -circ.a() && pw.1 == -circ.b()
        {
            exponent = Some(e);
            break;
        }
    }
    let e = exponent.ok_or_else(|| {
        Error::Internal(format!(
            "circular unit of discriminant {d} is not a power of the fundamental unit"
        ))
    })?;
    if e == 0 {
        return Err(Error::Internal(
            "circular unit matched exponent zero despite being nontrivial".into(),
        ));
    }
    let h = group.wide_order();
    let cv = valuation_u64(h, p);
    let ev = valuation_u64(e.unsigned_abs(), p);
    Ok(UnitIndexComparison {
        disc: d,
        p,
        class_number: h,
        unit_exponent: e,
        class_valuation: cv,
        exponent_valuation: ev,
        matched: cv == ev,
    })
}

/// ln |(a + b sqrt(D))/2| for a norm +-1 unit, stable for huge coordinates.
fn ln_abs_unit(u: &QuadraticUnitRep) -> f64 {
    let (a, b) = (u.a(), u.b());
    let d = u.disc();
    if a.is_zero() || b.is_zero() {
        let side = if a.is_zero() {
            big_ln(&b.abs()) + 0.5 * (d as f64).ln()
        } else {
            big_ln(&a.abs())
        };
        return side - std::f64::consts::LN_2;
    }
    if a.sign() == b.sign() {
        let la = big_ln(&a.abs());
        let lb = big_ln(&b.abs());
        la + (lb - la + 0.5 * (d as f64).ln()).exp().ln_1p() - std::f64::consts::LN_2
    } else {
        // mixed signs cancel catastrophically; the conjugate has aligned
        // signs and norm +-1 makes |u| the reciprocal of its magnitude
        let conj = QuadraticUnitRep::new(d, a.clone(), -b.clone()).expect("conjugate");
        -ln_abs_unit(&conj)
    }
}
