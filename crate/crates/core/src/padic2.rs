//! Exact p-adic predicates on nonzero rationals.
//!
//! Everything here works on exact [`Rat`] values: a valuation and a unit
//! residue are all any of the predicates need, so no truncated p-adic
//! expansion is ever formed.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number in lowest terms with a positive denominator.
pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let t = s.trim();
    Rat::from_str(t).map_err(|_| Error::Parse(format!("not a rational literal: {s:?}")))
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

fn int_val(n: &BigInt, p: &BigInt) -> (i64, BigInt) {
    let mut v = 0;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(p);
        if !r.is_zero() {
            return (v, m);
        }
        m = q;
        v += 1;
    }
}

/// Valuation and unit part `x / p^v`, split into numerator and denominator.
fn split(x: &Rat, p: u64) -> Result<(i64, BigInt, BigInt)> {
    if x.is_zero() {
        return Err(Error::Domain("valuation of zero"));
    }
    check_prime(p)?;
    let pb = BigInt::from(p);
    let (vn, un) = if p == 2 {
        let tz = x.numer().trailing_zeros().unwrap_or(0);
        (tz as i64, x.numer() >> tz)
    } else {
        int_val(x.numer(), &pb)
    };
    let (vd, ud) = if p == 2 {
        let tz = x.denom().trailing_zeros().unwrap_or(0);
        (tz as i64, x.denom() >> tz)
    } else {
        int_val(x.denom(), &pb)
    };
    Ok((vn - vd, un, ud))
}

/// The p-adic valuation of a nonzero rational.
pub fn vp(x: &Rat, p: u64) -> Result<i64> {
    split(x, p).map(|(v, _, _)| v)
}

/// `v_2`, the most common case.
pub fn v2(x: &Rat) -> Result<i64> {
    vp(x, 2)
}

/// `(x / p^vp(x)) mod p^k`, as a representative in `[0, p^k)`.
pub fn unit_part_mod(x: &Rat, p: u64, k: u32) -> Result<BigInt> {
    let (_, un, ud) = split(x, p)?;
    let modulus = BigInt::from(p).pow(k);
    let inv = mod_inverse(&ud, &modulus).ok_or(Error::Domain("denominator not invertible"))?;
    Ok((un * inv).mod_floor(&modulus))
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let g = a.mod_floor(m).extended_gcd(m);
    if g.gcd.is_one() {
        Some(g.x.mod_floor(m))
    } else if m.is_one() {
        Some(BigInt::zero())
    } else {
        None
    }
}

/// Unit residue mod 8 of a 2-adic unit part, as 1, 3, 5 or 7.
fn unit_mod8(x: &Rat) -> Result<(i64, u8)> {
    let (v, un, ud) = split(x, 2)?;
    let n = un.mod_floor(&BigInt::from(8)).to_u8().unwrap_or(0);
    let d = ud.mod_floor(&BigInt::from(8)).to_u8().unwrap_or(0);
    // Odd residues mod 8 are their own inverses.
    Ok((v, (n * d) % 8))
}

/// A class of `Q_2^* / Q_2^{*2}`, named by its canonical representative in
/// `{1, 5, -1, -5, 2, 10, -2, -10}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SquareClass2 {
    odd_valuation: bool,
    /// Unit part mod 8; one of 1, 3, 5, 7.
    unit: u8,
}

impl SquareClass2 {
    pub const ONE: Self = Self::from_parts(false, 1);
    pub const FIVE: Self = Self::from_parts(false, 5);
    pub const MINUS_ONE: Self = Self::from_parts(false, 7);
    pub const MINUS_FIVE: Self = Self::from_parts(false, 3);
    pub const TWO: Self = Self::from_parts(true, 1);
    pub const TEN: Self = Self::from_parts(true, 5);
    pub const MINUS_TWO: Self = Self::from_parts(true, 7);
    pub const MINUS_TEN: Self = Self::from_parts(true, 3);

    /// All eight classes in canonical order.
    pub const ALL: [Self; 8] = [
        Self::ONE,
        Self::FIVE,
        Self::MINUS_ONE,
        Self::MINUS_FIVE,
        Self::TWO,
        Self::TEN,
        Self::MINUS_TWO,
        Self::MINUS_TEN,
    ];

    const fn from_parts(odd_valuation: bool, unit: u8) -> Self {
        Self { odd_valuation, unit }
    }

    /// Class of `2^v * w` where `w` is an odd integer residue mod 8.
    pub fn from_valuation_and_unit(v: i64, unit_mod8: u8) -> Self {
        debug_assert!(unit_mod8 % 2 == 1);
        Self::from_parts(v.rem_euclid(2) == 1, unit_mod8 % 8)
    }

    pub fn from_representative(r: i64) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.representative() == r)
    }

    pub fn representative(self) -> i64 {
        let u = match self.unit {
            1 => 1,
            5 => 5,
            7 => -1,
            _ => -5,
        };
        if self.odd_valuation {
            2 * u
        } else {
            u
        }
    }

    pub fn as_rat(self) -> Rat {
        rat(self.representative())
    }

    pub fn has_odd_valuation(self) -> bool {
        self.odd_valuation
    }

    pub fn is_unit_class(self) -> bool {
        !self.odd_valuation
    }

    pub fn unit_residue(self) -> u8 {
        self.unit
    }

    pub fn mul(self, other: Self) -> Self {
        Self::from_parts(
            self.odd_valuation ^ other.odd_valuation,
            (self.unit * other.unit) % 8,
        )
    }

    pub fn neg(self) -> Self {
        self.mul(Self::MINUS_ONE)
    }
}

impl fmt::Display for SquareClass2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.representative())
    }
}

impl fmt::Debug for SquareClass2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SquareClass2({})", self.representative())
    }
}

impl FromStr for SquareClass2 {
    type Err = Error;

    /// Accepts any nonzero rational literal and returns its class.
    fn from_str(s: &str) -> Result<Self> {
        square_class_2(&parse_rat(s)?)
    }
}

impl Serialize for SquareClass2 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.representative().to_string())
    }
}

impl<'de> Deserialize<'de> for SquareClass2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn square_class_2(x: &Rat) -> Result<SquareClass2> {
    let (v, u) = unit_mod8(x)?;
    Ok(SquareClass2::from_valuation_and_unit(v, u))
}

/// Whether `x` is a square in `Q_2`.
pub fn is_square_2(x: &Rat) -> Result<bool> {
    Ok(square_class_2(x)? == SquareClass2::ONE)
}

/// Quadratic defect type of a 2-adic unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitDefectClass {
    Square,
    MinimalDefect,
    NonMinimal,
}

pub fn classify_unit_defect(u: &Rat) -> Result<UnitDefectClass> {
    let (v, r) = unit_mod8(u)?;
    if v != 0 {
        return Err(Error::Argument("not a unit".into()));
    }
    Ok(match r {
        1 => UnitDefectClass::Square,
        5 => UnitDefectClass::MinimalDefect,
        _ => UnitDefectClass::NonMinimal,
    })
}

/// The 2-adic Hilbert symbol `(a, b)_2`.
pub fn hilbert_2(a: &Rat, b: &Rat) -> Result<i8> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::Domain("Hilbert symbol of zero"));
    }
    let (alpha, u) = unit_mod8(a)?;
    let (beta, v) = unit_mod8(b)?;
    Ok(hilbert_2_parts(alpha, u, beta, v))
}

/// `(2^alpha u, 2^beta v)_2` from valuations and unit residues mod 8.
pub(crate) fn hilbert_2_parts(alpha: i64, u: u8, beta: i64, v: u8) -> i8 {
    let eps = |x: u8| ((x % 4) == 3) as u8;
    let omega = |x: u8| (x == 3 || x == 5) as u8;
    let e = eps(u) * eps(v)
        + (alpha.rem_euclid(2) as u8) * omega(v)
        + (beta.rem_euclid(2) as u8) * omega(u);
    if e.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Legendre symbol of an integer modulo an odd prime (0 when `p | x`).
pub fn legendre(x: &BigInt, p: u64) -> i8 {
    let pb = BigInt::from(p);
    let r = x.mod_floor(&pb);
    if r.is_zero() {
        return 0;
    }
    let e = r.modpow(&BigInt::from((p - 1) / 2), &pb);
    if e.is_one() {
        1
    } else {
        -1
    }
}

/// The Hilbert symbol `(a, b)_p` at an odd prime.
pub fn hilbert_p(a: &Rat, b: &Rat, p: u64) -> Result<i8> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::Domain("Hilbert symbol of zero"));
    }
    if p.is_multiple_of(2) {
        return Err(Error::Argument(format!("hilbert_p needs an odd prime, got {p}")));
    }
    let (alpha, un, ud) = split(a, p)?;
    let (beta, vn, vd) = split(b, p)?;
    let leg_u = legendre(&un, p) * legendre(&ud, p);
    let leg_v = legendre(&vn, p) * legendre(&vd, p);
    let mut s: i8 = 1;
    // (-1)^(alpha beta (p-1)/2)
    if alpha.rem_euclid(2) == 1 && beta.rem_euclid(2) == 1 && p % 4 == 3 {
        s = -s;
    }
    if beta.rem_euclid(2) == 1 {
        s *= leg_u;
    }
    if alpha.rem_euclid(2) == 1 {
        s *= leg_v;
    }
    Ok(s)
}

/// The real Hilbert symbol: `-1` exactly when both arguments are negative.
pub fn hilbert_real(a: &Rat, b: &Rat) -> Result<i8> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::Domain("Hilbert symbol of zero"));
    }
    Ok(if a.is_negative() && b.is_negative() { -1 } else { 1 })
}

/// A place of `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Finite(u64),
    Infinite,
}

impl Place {
    pub fn hilbert(self, a: &Rat, b: &Rat) -> Result<i8> {
        match self {
            Place::Infinite => hilbert_real(a, b),
            Place::Finite(2) => hilbert_2(a, b),
            Place::Finite(p) => hilbert_p(a, b, p),
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Finite(p) => write!(f, "{p}"),
            Place::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Place {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "oo" => Ok(Place::Infinite),
            t => {
                let p: u64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("not a place: {s:?}")))?;
                check_prime(p)?;
                Ok(Place::Finite(p))
            }
        }
    }
}

/// Least positive quadratic nonresidue modulo an odd prime.
pub fn least_nonresidue(p: u64) -> Result<u64> {
    check_prime(p)?;
    if p == 2 {
        return Err(Error::Argument("no quadratic nonresidue mod 2".into()));
    }
    Ok((2..p)
        .find(|&n| legendre(&BigInt::from(n), p) == -1)
        .expect("odd primes have nonresidues"))
}

/// Sign of a nonzero rational as used by the real place.
pub fn is_positive(x: &Rat) -> bool {
    x.numer().sign() == Sign::Plus
}

pub(crate) mod rat_string {
    //! Serde adapter: rationals travel as exact decimal/fraction strings.
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Lit {
            Str(String),
            Int(i64),
        }
        match Lit::deserialize(d)? {
            Lit::Str(s) => parse_rat(&s).map_err(serde::de::Error::custom),
            Lit::Int(n) => Ok(rat(n)),
        }
    }
}
