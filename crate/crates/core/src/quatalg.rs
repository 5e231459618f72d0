//! Arithmetic in the quaternion division algebra `D = (pi, Delta / Q_2)` and
//! its maximal order, in the basis `{1, w, i, i*w}` with `w = (1 + j) / 2`.
//!
//! Internally an element is a pair `lo + i * hi` with `lo, hi` in `Q[w]`,
//! `w^2 = w + delta`. Multiplication only needs `w^2 = w + delta` and
//! `s * i = i * conj(s)` for `s` in `Q[w]`; the coordinate norm formula in
//! [`reduced_norm`] is kept as an independent route.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::padic2::{self, parse_rat, rat, square_class_2, v2, Rat, SquareClass2};

/// Parameters `(pi, delta)` of `D = (pi, 1 + 4 delta)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AlgebraParams {
    pi: Rat,
    delta: Rat,
}

impl AlgebraParams {
    pub fn new(pi: Rat, delta: Rat) -> Result<Self> {
        if pi.is_zero() || v2(&pi)? != 1 {
            return Err(Error::InvalidParams(format!("pi = {pi} must have 2-adic valuation 1")));
        }
        if delta.is_zero() || v2(&delta)? != 0 {
            return Err(Error::InvalidParams(format!("delta = {delta} must be a 2-adic unit")));
        }
        let big_delta = rat(1) + rat(4) * &delta;
        if padic2::classify_unit_defect(&big_delta)? != padic2::UnitDefectClass::MinimalDefect {
            return Err(Error::InvalidParams(format!(
                "1 + 4*delta = {big_delta} is not of minimal quadratic defect"
            )));
        }
        Ok(Self { pi, delta })
    }

    /// `pi = 2`, `delta = 1`: the algebra `(2, 5 / Q_2)`.
    pub fn standard() -> Self {
        Self { pi: rat(2), delta: rat(1) }
    }

    pub fn pi(&self) -> &Rat {
        &self.pi
    }

    pub fn delta(&self) -> &Rat {
        &self.delta
    }

    /// `Delta = j^2 = 1 + 4 delta`.
    pub fn big_delta(&self) -> Rat {
        rat(1) + rat(4) * &self.delta
    }

    pub fn zero(&self) -> Quat {
        Quat::new(self, rat(0), rat(0), rat(0), rat(0))
    }

    pub fn one(&self) -> Quat {
        Quat::from_scalar(self, rat(1))
    }

    pub fn w(&self) -> Quat {
        Quat::from_ints(self, [0, 1, 0, 0])
    }

    pub fn i(&self) -> Quat {
        Quat::from_ints(self, [0, 0, 1, 0])
    }

    pub fn iw(&self) -> Quat {
        Quat::from_ints(self, [0, 0, 0, 1])
    }

    /// `j = 2w - 1`.
    pub fn j(&self) -> Quat {
        Quat::from_ints(self, [-1, 2, 0, 0])
    }
}

impl Default for AlgebraParams {
    fn default() -> Self {
        Self::standard()
    }
}

/// `x + y*w` in `Q[w]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OmegaElt {
    pub x: Rat,
    pub y: Rat,
}

impl OmegaElt {
    pub fn new(x: Rat, y: Rat) -> Self {
        Self { x, y }
    }

    fn zero() -> Self {
        Self::new(rat(0), rat(0))
    }

    fn add(&self, o: &Self) -> Self {
        Self::new(&self.x + &o.x, &self.y + &o.y)
    }

    fn sub(&self, o: &Self) -> Self {
        Self::new(&self.x - &o.x, &self.y - &o.y)
    }

    fn scale(&self, c: &Rat) -> Self {
        Self::new(&self.x * c, &self.y * c)
    }

    fn mul(&self, o: &Self, delta: &Rat) -> Self {
        let yy = &self.y * &o.y;
        Self::new(
            &self.x * &o.x + delta * &yy,
            &self.x * &o.y + &self.y * &o.x + yy,
        )
    }

    /// `conj(w) = 1 - w`.
    pub fn conj(&self) -> Self {
        Self::new(&self.x + &self.y, -&self.y)
    }

    pub fn norm(&self, delta: &Rat) -> Rat {
        &self.x * &self.x + &self.x * &self.y - delta * &self.y * &self.y
    }

    fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
}

impl fmt::Display for OmegaElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*w", self.x, self.y)
    }
}

/// An element `a + b*w + c*i + d*i*w` of `D`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quat {
    params: AlgebraParams,
    lo: OmegaElt,
    hi: OmegaElt,
}

impl Quat {
    pub fn new(params: &AlgebraParams, a: Rat, b: Rat, c: Rat, d: Rat) -> Self {
        Self {
            params: params.clone(),
            lo: OmegaElt::new(a, b),
            hi: OmegaElt::new(c, d),
        }
    }

    pub fn from_ints(params: &AlgebraParams, coords: [i64; 4]) -> Self {
        let [a, b, c, d] = coords.map(rat);
        Self::new(params, a, b, c, d)
    }

    pub fn from_scalar(params: &AlgebraParams, s: Rat) -> Self {
        Self::new(params, s, rat(0), rat(0), rat(0))
    }

    /// `lo + i * hi`.
    pub fn from_parts(params: &AlgebraParams, lo: OmegaElt, hi: OmegaElt) -> Self {
        Self { params: params.clone(), lo, hi }
    }

    pub fn params(&self) -> &AlgebraParams {
        &self.params
    }

    /// Coordinates in the ordered basis `{1, w, i, i*w}`.
    pub fn coords(&self) -> [&Rat; 4] {
        [&self.lo.x, &self.lo.y, &self.hi.x, &self.hi.y]
    }

    pub fn is_zero(&self) -> bool {
        self.lo.is_zero() && self.hi.is_zero()
    }

    /// Membership in the maximal order: every coordinate is 2-integral.
    pub fn is_integral(&self) -> bool {
        self.coords().iter().all(|c| c.is_zero() || v2(c).is_ok_and(|v| v >= 0))
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self::from_parts(&self.params, self.lo.scale(c), self.hi.scale(c))
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.params == other.params {
            Ok(())
        } else {
            Err(Error::ParamsMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_parts(&self.params, self.lo.add(&other.lo), self.hi.add(&other.hi)))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_parts(&self.params, self.lo.sub(&other.lo), self.hi.sub(&other.hi)))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let delta = &self.params.delta;
        let pi = &self.params.pi;
        // (x0 + i y0)(x1 + i y1) = (x0 x1 + pi conj(y0) y1) + i (conj(x0) y1 + y0 x1)
        let lo = self
            .lo
            .mul(&other.lo, delta)
            .add(&self.hi.conj().mul(&other.hi, delta).scale(pi));
        let hi = self
            .lo
            .conj()
            .mul(&other.hi, delta)
            .add(&self.hi.mul(&other.lo, delta));
        Ok(Self::from_parts(&self.params, lo, hi))
    }

    pub fn conj(&self) -> Self {
        quat_conj(self)
    }

    pub fn norm(&self) -> Rat {
        reduced_norm(self)
    }

    pub fn trace(&self) -> Rat {
        reduced_trace(self)
    }
}

impl fmt::Display for Quat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.coords();
        write!(f, "{a} + {b}*w + {c}*i + {d}*i*w")
    }
}

impl fmt::Debug for Quat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Quat({self}; pi={}, delta={})", self.params.pi, self.params.delta)
    }
}

// Operator forms panic when the operands live in different algebras; use the
// `try_*` methods where that can happen.
impl Add for &Quat {
    type Output = Quat;
    fn add(self, rhs: &Quat) -> Quat {
        self.try_add(rhs).expect("quaternions from different algebras")
    }
}

impl Sub for &Quat {
    type Output = Quat;
    fn sub(self, rhs: &Quat) -> Quat {
        self.try_sub(rhs).expect("quaternions from different algebras")
    }
}

impl Mul for &Quat {
    type Output = Quat;
    fn mul(self, rhs: &Quat) -> Quat {
        self.try_mul(rhs).expect("quaternions from different algebras")
    }
}

impl Neg for &Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        self.scale(&rat(-1))
    }
}

pub fn quat_mul(x: &Quat, y: &Quat) -> Result<Quat> {
    x.try_mul(y)
}

/// Canonical involution: `(a, b, c, d) -> (a + b, -b, -c, -d)`.
pub fn quat_conj(q: &Quat) -> Quat {
    Quat::from_parts(&q.params, q.lo.conj(), OmegaElt::zero().sub(&q.hi))
}

/// `T(q) = 2a + b`.
pub fn reduced_trace(q: &Quat) -> Rat {
    rat(2) * &q.lo.x + &q.lo.y
}

/// `N(q) = a^2 + ab - delta b^2 - pi (c^2 + cd - delta d^2)`.
pub fn reduced_norm(q: &Quat) -> Rat {
    let [a, b, c, d] = q.coords();
    let delta = &q.params.delta;
    let pi = &q.params.pi;
    a * a + a * b - delta * b * b - pi * (c * c + c * d - delta * d * d)
}

/// Scalar part of `q * conj(q)`, computed by multiplication.
pub fn norm_via_product(q: &Quat) -> Rat {
    let p = q * &q.conj();
    p.lo.x
}

/// `nu(q) = v_2(N(q))`; `nu(i) = 1`, `nu(2) = 2`.
pub fn d_valuation(q: &Quat) -> Result<i64> {
    if q.is_zero() {
        return Err(Error::Domain("valuation of zero"));
    }
    v2(&reduced_norm(q))
}

/// Nonzero with trace zero.
pub fn is_pure(q: &Quat) -> bool {
    !q.is_zero() && reduced_trace(q).is_zero()
}

/// `z = a1 - r a1 conj(r)`.
pub fn z_of(a1: &Quat, r: &Quat) -> Result<Quat> {
    if !is_pure(a1) {
        return Err(Error::NotPure);
    }
    a1.check(r)?;
    let rot = &(r * a1) * &r.conj();
    Ok(a1 - &rot)
}

/// `0, 1, -1, 2, -2, ..., n, -n`.
fn box_order(n: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=n).flat_map(|k| [k, -k]))
}

/// First integral pure quaternion `b*j + c*i + d*i*w` whose norm lies in the
/// class `target`, searched by increasing box `max(|b|,|c|,|d|) = n` and
/// lexicographically within a box (coordinates ordered `0, 1, -1, 2, ...`).
///
/// Unit targets get a unit norm (`N(q) = target mod 8`); odd-valuation targets
/// get `v_2(N(q)) = 1` with the unit part matching mod 8 (`N(q) = target mod
/// 16` when `pi = 2`).
pub fn pure_with_norm_class(params: &AlgebraParams, target: SquareClass2) -> Result<Quat> {
    if target == SquareClass2::MINUS_ONE {
        return Err(Error::Unrepresentable(target));
    }
    let want_v = target.has_odd_valuation() as i64;
    let j = params.j();
    let (i, iw) = (params.i(), params.iw());
    for n in 0i64..=64 {
        for b in box_order(n) {
            for c in box_order(n) {
                for d in box_order(n) {
                    if b.abs().max(c.abs()).max(d.abs()) != n {
                        continue;
                    }
                    let q = &(&j.scale(&rat(b)) + &i.scale(&rat(c))) + &iw.scale(&rat(d));
                    if q.is_zero() {
                        continue;
                    }
                    let nq = reduced_norm(&q);
                    if v2(&nq)? == want_v && square_class_2(&nq)? == target {
                        return Ok(q);
                    }
                }
            }
        }
    }
    Err(Error::Unrepresentable(target))
}

/// A pure quaternion `i_p = i * alpha` with `alpha` in `Z[w]` and
/// `i_p^2 = p`, for a prime `p` of `Q_2`.
///
/// `i_p^2 = pi * N(alpha)`, so `alpha` must have norm `p / pi`. The first
/// such `alpha` in the same box order as [`pure_with_norm_class`] is used; when no
/// exact solution exists in the box, the first `alpha` with `N(alpha)`
/// congruent to `p / pi` mod 16 is returned, which puts `i_p^2` in
/// `p * Q_2^{*2}`.
pub fn i_pi(params: &AlgebraParams, p: &Rat) -> Result<(Quat, OmegaElt)> {
    if p.is_zero() || v2(p)? != 1 {
        return Err(Error::Argument(format!("{p} is not a prime of Q_2")));
    }
    let target = p / &params.pi;
    const BOX: i64 = 24;
    let mut fallback = None;
    for n in 0..=BOX {
        for x in box_order(n) {
            for y in box_order(n) {
                if x.abs().max(y.abs()) != n {
                    continue;
                }
                let alpha = OmegaElt::new(rat(x), rat(y));
                let nm = alpha.norm(&params.delta);
                if nm.is_zero() {
                    continue;
                }
                if nm == target {
                    let q = Quat::from_parts(params, OmegaElt::zero(), alpha.clone());
                    return Ok((q, alpha));
                }
                if fallback.is_none()
                    && v2(&nm)? == 0
                    && padic2::unit_part_mod(&nm, 2, 4)? == padic2::unit_part_mod(&target, 2, 4)?
                {
                    fallback = Some(alpha);
                }
            }
        }
    }
    let alpha = fallback.ok_or_else(|| Error::Argument(format!("no i_p found for p = {p}")))?;
    Ok((Quat::from_parts(params, OmegaElt::zero(), alpha.clone()), alpha))
}

/// Parse a quaternion literal.
///
/// Accepts the rendered form `a + b*w + c*i + d*i*w` and compact forms such as
/// `j+ij`, `-1-4i-4iw`, `1-14w-i-10iw` or `4*(-1+2w-4i-7iw)`. Basis symbols:
/// `w` (also `ω`), `i`, `iw`/`i*w`, `j = 2w - 1`, `ij`/`i*j = 2iw - i`.
pub fn parse_quat(params: &AlgebraParams, s: &str) -> Result<Quat> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let compact = compact.replace('ω', "w");
    let err = || Error::Parse(format!("bad quaternion literal: {s:?}"));
    if let Some(open) = compact.find('(') {
        if !compact.ends_with(')') {
            return Err(err());
        }
        let head = compact[..open].trim_end_matches('*');
        let factor = match head {
            "" | "+" => rat(1),
            "-" => rat(-1),
            h => parse_rat(h).map_err(|_| err())?,
        };
        let inner = parse_sum(params, &compact[open + 1..compact.len() - 1]).ok_or_else(err)?;
        return Ok(inner.scale(&factor));
    }
    parse_sum(params, &compact).ok_or_else(err)
}

fn parse_sum(params: &AlgebraParams, s: &str) -> Option<Quat> {
    if s.is_empty() {
        return None;
    }
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = s.as_bytes();
    for k in 1..bytes.len() {
        // split before +/- that are not part of "*-" or "/-"
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'*' | b'/' | b'+' | b'-') {
            terms.push(&s[start..k]);
            start = k;
        }
    }
    terms.push(&s[start..]);
    let mut acc = params.zero();
    for t in terms {
        acc = &acc + &parse_term(params, t)?;
    }
    Some(acc)
}

fn parse_term(params: &AlgebraParams, t: &str) -> Option<Quat> {
    let (sign, body) = match t.as_bytes().first()? {
        b'+' => (rat(1), &t[1..]),
        b'-' => (rat(-1), &t[1..]),
        _ => (rat(1), t),
    };
    let split = body
        .find(|c: char| c.is_ascii_alphabetic())
        .unwrap_or(body.len());
    let (coef, basis) = body.split_at(split);
    let coef = coef.trim_end_matches('*');
    let coef = if coef.is_empty() { rat(1) } else { parse_rat(coef).ok()? };
    let unit = match basis.replace('*', "").as_str() {
        "" => params.one(),
        "w" => params.w(),
        "i" => params.i(),
        "iw" => params.iw(),
        "j" => params.j(),
        "ij" => &params.i() * &params.j(),
        _ => return None,
    };
    Some(unit.scale(&(sign * coef)))
}

impl FromStr for Quat {
    type Err = Error;

    /// Parses in the standard algebra `pi = 2, delta = 1`.
    fn from_str(s: &str) -> Result<Self> {
        parse_quat(&AlgebraParams::standard(), s)
    }
}

/// JSON form `{"pi": "2", "delta": "1", "coords": ["a", "b", "c", "d"]}`.
#[derive(Serialize, Deserialize)]
struct QuatJson {
    #[serde(with = "padic2::rat_string", default = "two")]
    pi: Rat,
    #[serde(with = "padic2::rat_string", default = "one")]
    delta: Rat,
    coords: [RatLit; 4],
}

fn two() -> Rat {
    rat(2)
}

fn one() -> Rat {
    rat(1)
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct RatLit(#[serde(with = "padic2::rat_string")] Rat);

impl Serialize for Quat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let [a, b, c, d] = self.coords().map(|x| RatLit(x.clone()));
        QuatJson {
            pi: self.params.pi.clone(),
            delta: self.params.delta.clone(),
            coords: [a, b, c, d],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = QuatJson::deserialize(d)?;
        let params = AlgebraParams::new(j.pi, j.delta).map_err(serde::de::Error::custom)?;
        let [a, b, c, dd] = j.coords.map(|l| l.0);
        Ok(Quat::new(&params, a, b, c, dd))
    }
}

/// Whether every coordinate is an integer (not just 2-integral).
pub fn has_integer_coords(q: &Quat) -> bool {
    q.coords().iter().all(|c| c.is_integer())
}

/// Coordinates as machine integers when they all are small integers.
pub fn int_coords(q: &Quat) -> Option<[i64; 4]> {
    use num_traits::ToPrimitive;
    let mut out = [0i64; 4];
    for (o, c) in out.iter_mut().zip(q.coords()) {
        if !c.is_integer() {
            return None;
        }
        *o = c.to_integer().to_i64()?;
    }
    Some(out)
}
