//! Evaluation of the k-star conditions in `Z / 2^64`.
//!
//! Every quantity involved (`N(1 - r)`, the coordinates of `z`, `N(z)`) is an
//! integer polynomial in the coordinates of `r`, `a1`, `pi` and `delta`, all
//! of which are 2-adic integers. Reducing mod `2^64` is a ring homomorphism,
//! so wrapping `u64` arithmetic gives these values mod `2^64` exactly. A value
//! `x` with `v_2(x) + 3 <= k` has its square class determined by `x mod 2^k`;
//! that is all the conditions need. Values too divisible to classify fall
//! back to exact arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::padic2::{hilbert_2_parts, Rat, SquareClass2};

use super::{kstar_check, KStarInstance};
use crate::quatalg::Quat;

type Q4 = [u64; 4];

/// Reduction of a 2-adic integer `n / d` (odd `d`) into `Z / 2^64`.
fn rat_mod_2_64(x: &Rat) -> Option<u64> {
    let d = x.denom();
    if d.is_even() {
        return None;
    }
    let m = BigInt::from(1u8) << 64;
    let n = x.numer().mod_floor(&m).to_u64()?;
    let d = d.mod_floor(&m).to_u64()?;
    Some(n.wrapping_mul(inverse_odd(d)))
}

fn inverse_odd(d: u64) -> u64 {
    // Newton iteration: each step doubles the number of correct low bits.
    let mut x = d;
    for _ in 0..6 {
        x = x.wrapping_mul(2u64.wrapping_sub(d.wrapping_mul(x)));
    }
    x
}

/// The precomputed, instance-dependent part of the kernel.
#[derive(Clone, Debug)]
pub(crate) struct Kernel {
    pi: u64,
    delta: u64,
    a1: Q4,
    /// `2t + v_2(N(a1))`.
    threshold: u32,
    /// Class of `N(1 - r)` (indexed by [`class_index`]) -> condition holds.
    hilbert_ok: [bool; 8],
    /// The one class of `N(z)` that makes `N(z) N(a1)` a square.
    square_target: SquareClass2,
}

/// Bits of `x mod 2^k` that determine its class: `v + 3 <= k`.
const CLASSIFY_MARGIN: u32 = 3;

fn class_index(c: SquareClass2) -> usize {
    (c.has_odd_valuation() as usize) * 4 + (c.unit_residue() as usize >> 1)
}

fn class_of(x: u64) -> SquareClass2 {
    let v = x.trailing_zeros();
    SquareClass2::from_valuation_and_unit(v as i64, ((x >> v) & 7) as u8)
}

/// What `x mod 2^k` tells about `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Known {
    /// Valuation and class are determined.
    Class(u32, SquareClass2),
    /// Only the valuation is determined.
    Valuation(u32),
    /// `x = 0 mod 2^k`.
    Divisible,
}

fn known(x: u64, k: u32) -> Known {
    let v = x.trailing_zeros();
    if v >= k {
        Known::Divisible
    } else if v + CLASSIFY_MARGIN <= k {
        Known::Class(v, class_of(x))
    } else {
        Known::Valuation(v)
    }
}

/// Three-valued verdict on a residue class of candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Verdict {
    Pass,
    Fail,
    Undecided,
}

impl Kernel {
    /// `None` unless the instance is integral (so all data reduce mod `2^64`).
    pub(crate) fn new(inst: &KStarInstance) -> Option<Self> {
        let params = inst.a1().params();
        let pi = rat_mod_2_64(params.pi())?;
        let delta = rat_mod_2_64(params.delta())?;
        let c = inst.a1().coords();
        let a1 = [
            rat_mod_2_64(c[0])?,
            rat_mod_2_64(c[1])?,
            rat_mod_2_64(c[2])?,
            rat_mod_2_64(c[3])?,
        ];
        let na1 = inst.norm_class();
        let minus_na1 = na1.neg();
        let mut hilbert_ok = [false; 8];
        for c in SquareClass2::ALL {
            hilbert_ok[class_index(c)] = hilbert_2_parts(
                c.has_odd_valuation() as i64,
                c.unit_residue(),
                minus_na1.has_odd_valuation() as i64,
                minus_na1.unit_residue(),
            ) == -1;
        }
        let threshold = u32::try_from(inst.integral_threshold()).ok()?;
        Some(Self {
            pi,
            delta,
            a1,
            threshold,
            hilbert_ok,
            // classes are their own inverses
            square_target: na1,
        })
    }

    fn omega_mul(&self, x0: u64, x1: u64, y0: u64, y1: u64) -> (u64, u64) {
        let x1y1 = x1.wrapping_mul(y1);
        (
            x0.wrapping_mul(y0).wrapping_add(self.delta.wrapping_mul(x1y1)),
            x0.wrapping_mul(y1).wrapping_add(x1.wrapping_mul(y0)).wrapping_add(x1y1),
        )
    }

    fn mul(&self, x: &Q4, y: &Q4) -> Q4 {
        // (x0 + i x1)(y0 + i y1) = x0 y0 + pi conj(x1) y1 + i (conj(x0) y1 + x1 y0)
        let (ll0, ll1) = self.omega_mul(x[0], x[1], y[0], y[1]);
        let (hh0, hh1) = self.omega_mul(x[2].wrapping_add(x[3]), x[3].wrapping_neg(), y[2], y[3]);
        let (lh0, lh1) = self.omega_mul(x[0].wrapping_add(x[1]), x[1].wrapping_neg(), y[2], y[3]);
        let (hl0, hl1) = self.omega_mul(x[2], x[3], y[0], y[1]);
        [
            ll0.wrapping_add(self.pi.wrapping_mul(hh0)),
            ll1.wrapping_add(self.pi.wrapping_mul(hh1)),
            lh0.wrapping_add(hl0),
            lh1.wrapping_add(hl1),
        ]
    }

    fn norm(&self, x: &Q4) -> u64 {
        let lo = x[0]
            .wrapping_mul(x[0])
            .wrapping_add(x[0].wrapping_mul(x[1]))
            .wrapping_sub(self.delta.wrapping_mul(x[1]).wrapping_mul(x[1]));
        let hi = x[2]
            .wrapping_mul(x[2])
            .wrapping_add(x[2].wrapping_mul(x[3]))
            .wrapping_sub(self.delta.wrapping_mul(x[3]).wrapping_mul(x[3]));
        lo.wrapping_sub(self.pi.wrapping_mul(hi))
    }

    /// `(N(1 - r), N(z)) mod 2^64`.
    pub(crate) fn norms(&self, r: [u64; 4]) -> (u64, u64) {
        let one_minus_r = [
            1u64.wrapping_sub(r[0]),
            r[1].wrapping_neg(),
            r[2].wrapping_neg(),
            r[3].wrapping_neg(),
        ];
        let rbar = [
            r[0].wrapping_add(r[1]),
            r[1].wrapping_neg(),
            r[2].wrapping_neg(),
            r[3].wrapping_neg(),
        ];
        let ra = self.mul(&r, &self.a1);
        let rar = self.mul(&ra, &rbar);
        let z = [
            self.a1[0].wrapping_sub(rar[0]),
            self.a1[1].wrapping_sub(rar[1]),
            self.a1[2].wrapping_sub(rar[2]),
            self.a1[3].wrapping_sub(rar[3]),
        ];
        (self.norm(&one_minus_r), self.norm(&z))
    }

    /// Verdict on all `r' = r (mod 2^k)`, from the representative `r`.
    pub(crate) fn classify(&self, r: [u64; 4], k: u32) -> Verdict {
        debug_assert!(k <= 64);
        let (n1mr, nz) = self.norms(r);
        let mut undecided = false;
        match known(n1mr, k) {
            Known::Class(_, c) => {
                if !self.hilbert_ok[class_index(c)] {
                    return Verdict::Fail;
                }
            }
            _ => undecided = true,
        }
        match known(nz, k) {
            Known::Class(v, c) => {
                if v < self.threshold || c != self.square_target {
                    return Verdict::Fail;
                }
            }
            Known::Valuation(v) => {
                if v < self.threshold {
                    return Verdict::Fail;
                }
                undecided = true;
            }
            Known::Divisible => undecided = true,
        }
        if undecided {
            Verdict::Undecided
        } else {
            Verdict::Pass
        }
    }

    /// Exact verdict on the single candidate `r`.
    pub(crate) fn passes(&self, inst: &KStarInstance, r: [u64; 4]) -> bool {
        match self.classify(r, 64) {
            Verdict::Pass => true,
            Verdict::Fail => false,
            Verdict::Undecided => exact_passes(inst, r),
        }
    }
}

/// Exact check of one candidate; used when values are too divisible for the
/// modular kernel (including the degenerate `r = 1` and `z = 0`).
pub(crate) fn exact_passes(inst: &KStarInstance, r: [u64; 4]) -> bool {
    let q = candidate(inst, r);
    kstar_check(inst, &q).map(|rep| rep.passes()).unwrap_or(false)
}

pub(crate) fn candidate(inst: &KStarInstance, r: [u64; 4]) -> Quat {
    let c = r.map(|x| Rat::from_integer(BigInt::from(x)));
    let [a, b, c, d] = c;
    Quat::new(inst.a1().params(), a, b, c, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic2::{rat, ratio};
    use crate::quatalg::{i_pi, parse_quat, reduced_norm, z_of, AlgebraParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn to_u64(x: &Rat) -> u64 {
        rat_mod_2_64(x).unwrap()
    }

    #[test]
    fn inverse() {
        for d in [1u64, 3, 5, 7, 12345, u64::MAX] {
            assert_eq!(d.wrapping_mul(inverse_odd(d)), 1);
        }
        assert_eq!(rat_mod_2_64(&ratio(1, 3)).unwrap().wrapping_mul(3), 1);
        assert_eq!(rat_mod_2_64(&rat(-1)), Some(u64::MAX));
        assert_eq!(rat_mod_2_64(&ratio(1, 2)), None);
    }

    #[test]
    fn norms_agree_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let algebras = [
            AlgebraParams::standard(),
            AlgebraParams::new(rat(-2), rat(1)).unwrap(),
            AlgebraParams::new(rat(10), rat(-3)).unwrap(),
            AlgebraParams::new(ratio(2, 3), ratio(5, 7)).unwrap(),
        ];
        for params in &algebras {
            for a1 in ["j+ij", "i+j", "i", "3j-5iw", "1/3*(j)"] {
                let a1 = parse_quat(params, a1).unwrap();
                let inst = KStarInstance::new(a1.clone(), 2).unwrap();
                let kernel = Kernel::new(&inst).unwrap();
                for _ in 0..200 {
                    let r: [u64; 4] = std::array::from_fn(|_| rng.gen_range(0..1 << 12));
                    let q = candidate(&inst, r);
                    let (n1mr, nz) = kernel.norms(r);
                    let one_minus_r = &params.one() - &q;
                    assert_eq!(n1mr, to_u64(&reduced_norm(&one_minus_r)));
                    assert_eq!(nz, to_u64(&reduced_norm(&z_of(&a1, &q).unwrap())));
                }
            }
        }
    }

    #[test]
    fn verdict_matches_kstar_check() {
        let params = AlgebraParams::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (i10, _) = i_pi(&params, &rat(10)).unwrap();
        for a1 in [parse_quat(&params, "j+ij").unwrap(), parse_quat(&params, "i+j").unwrap(), i10] {
            for t in 1..=4 {
                let inst = KStarInstance::new(a1.clone(), t).unwrap();
                let kernel = Kernel::new(&inst).unwrap();
                for _ in 0..500 {
                    let r: [u64; 4] = std::array::from_fn(|_| rng.gen_range(0..32));
                    let exact = kstar_check(&inst, &candidate(&inst, r)).unwrap().passes();
                    assert_eq!(kernel.passes(&inst, r), exact, "{a1} t={t} r={r:?}");
                }
            }
        }
    }

    #[test]
    fn residue_verdicts_are_sound() {
        // A decided class must agree with every member.
        let params = AlgebraParams::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = KStarInstance::new(parse_quat(&params, "j+ij").unwrap(), 2).unwrap();
        let kernel = Kernel::new(&inst).unwrap();
        let mut decided = 0;
        for _ in 0..2000 {
            let k = rng.gen_range(1..=6);
            let r0: [u64; 4] = std::array::from_fn(|_| rng.gen_range(0..1 << k));
            let verdict = kernel.classify(r0, k);
            if verdict == Verdict::Undecided {
                continue;
            }
            decided += 1;
            for _ in 0..8 {
                let r: [u64; 4] = std::array::from_fn(|i| r0[i] + (rng.gen_range(0..64u64) << k));
                assert_eq!(kernel.passes(&inst, r), verdict == Verdict::Pass);
            }
        }
        assert!(decided > 100);
    }
}
