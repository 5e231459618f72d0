//! The k-star conditions for a binary lattice `<a1> _|_ <2^t a1>` and the
//! bounded witness search that decides whether its spinor image is all of
//! `Q_2^*`.
//!
//! A candidate `r` in the maximal order satisfies the k-star conditions when
//!
//! 1. `(N(1 - r), -N(a1))_2 = -1`,
//! 2. `N(z) N(a1)` is a nonzero square, where `z = a1 - r a1 conj(r)`,
//! 3. `v_2(N(z)) >= 2t + v_2(N(a1))`.
//!
//! Such an `r` exists iff `H(L) = Q_2^*`; otherwise `H(L) = N(Q_2(a1)^*)`.
//! Existence only depends on `r` modulo `2^u` for `u = t + 6`, which turns the
//! question into a finite scan of `[0, 2^u)^4`.

mod kernel;
mod scan;
pub mod tables;

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64};
use std::sync::Arc;
use std::time::Duration;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic2::{hilbert_2, is_square_2, square_class_2, v2, Rat, SquareClass2};
use crate::quatalg::{d_valuation, is_pure, reduced_norm, z_of, Quat};
use crate::spinor_table::SpinorImage;

pub use scan::naive_search;
pub use tables::{verify_witness_tables, verify_witness_tables_with, TableReport, WitnessTables};

/// Largest admissible bound exponent; keeps a candidate's lexicographic key in
/// 64 bits.
pub const MAX_BOUND: u32 = 16;

/// A binary lattice `<a1> _|_ <eps 2^t a1>`, reduced to the data the k-star
/// conditions depend on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KStarInstance {
    a1: Quat,
    t: u32,
    norm_a1: Rat,
}

impl KStarInstance {
    /// `a1` must be pure and `t >= 1`. Scans additionally need `a1` integral
    /// with `nu(a1) <= 1`; see [`KStarInstance::is_normalized`].
    pub fn new(a1: Quat, t: u32) -> Result<Self> {
        if !is_pure(&a1) {
            return Err(Error::NotPure);
        }
        if t == 0 {
            return Err(Error::Argument("t must be positive".into()));
        }
        let norm_a1 = reduced_norm(&a1);
        Ok(Self { a1, t, norm_a1 })
    }

    pub fn a1(&self) -> &Quat {
        &self.a1
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn norm_a1(&self) -> &Rat {
        &self.norm_a1
    }

    pub fn norm_class(&self) -> SquareClass2 {
        square_class_2(&self.norm_a1).expect("pure nonzero quaternion has nonzero norm")
    }

    pub fn nu_a1(&self) -> i64 {
        d_valuation(&self.a1).expect("nonzero")
    }

    /// Integral with `nu(a1) in {0, 1}`, the normalization the search bounds
    /// assume.
    pub fn is_normalized(&self) -> bool {
        self.a1.is_integral() && matches!(self.nu_a1(), 0 | 1)
    }

    /// `2t + v_2(N(a1))`, the least admissible `v_2(N(z))`.
    pub fn integral_threshold(&self) -> i64 {
        2 * self.t as i64 + self.nu_a1()
    }

    pub fn with_t(&self, t: u32) -> Result<Self> {
        Self::new(self.a1.clone(), t)
    }
}

/// Outcome of checking one candidate `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KStarReport {
    pub cond_hilbert: bool,
    pub cond_square: bool,
    pub cond_integral: bool,
    /// `r = 1` or `z = 0`: no rotation arises from this `r`.
    pub degenerate: bool,
    pub z: Quat,
    pub nz: Rat,
    pub n1mr: Rat,
    /// Class of `N(a1) N(1 - r)`, the spinor norm of the associated rotation.
    pub spinor_class: Option<SquareClass2>,
}

impl KStarReport {
    pub fn passes(&self) -> bool {
        self.cond_hilbert && self.cond_square && self.cond_integral
    }
}

pub fn kstar_check(inst: &KStarInstance, r: &Quat) -> Result<KStarReport> {
    if r.params() != inst.a1.params() {
        return Err(Error::ParamsMismatch);
    }
    if !r.is_integral() {
        return Err(Error::NotIntegral);
    }
    let one_minus_r = &r.params().one() - r;
    let n1mr = reduced_norm(&one_minus_r);
    let z = z_of(&inst.a1, r)?;
    let nz = reduced_norm(&z);
    if n1mr.is_zero() || nz.is_zero() {
        return Ok(KStarReport {
            cond_hilbert: false,
            cond_square: false,
            cond_integral: false,
            degenerate: true,
            spinor_class: if n1mr.is_zero() {
                None
            } else {
                Some(square_class_2(&(&n1mr * &inst.norm_a1))?)
            },
            z,
            nz,
            n1mr,
        });
    }
    let cond_hilbert = hilbert_2(&n1mr, &-&inst.norm_a1)? == -1;
    let cond_square = is_square_2(&(&nz * &inst.norm_a1))?;
    let cond_integral = v2(&nz)? >= 2 * inst.t as i64 + v2(&inst.norm_a1)?;
    Ok(KStarReport {
        cond_hilbert,
        cond_square,
        cond_integral,
        degenerate: false,
        spinor_class: Some(square_class_2(&(&n1mr * &inst.norm_a1))?),
        z,
        nz,
        n1mr,
    })
}

/// Which result makes an empty scan of `[0, 2^u)^4` conclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundJustification {
    /// `u >= t + 6`: valid for every normalized instance.
    General,
    /// `u >= t + 3` for unit-norm `a1` in the classes `{1, 5}` with
    /// `t in {3, 4}`.
    RefinedUnitNorm,
    /// An empty scan at this bound proves nothing.
    Unjustified,
}

impl BoundJustification {
    pub fn tag(self) -> &'static str {
        match self {
            Self::General => "general bound u >= t+6",
            Self::RefinedUnitNorm => "refined bound u >= t+3 (unit norm class 1 or 5, t in {3,4})",
            Self::Unjustified => "unjustified",
        }
    }

    pub fn is_conclusive(self) -> bool {
        self != Self::Unjustified
    }
}

impl fmt::Display for BoundJustification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// `t + 6`, or `t + 3` when `refined`. The refined bound is only conclusive
/// where [`bound_justification`] says so.
pub fn default_bound(inst: &KStarInstance, refined: bool) -> u32 {
    if refined {
        inst.t + 3
    } else {
        inst.t + 6
    }
}

pub fn bound_justification(inst: &KStarInstance, u: u32) -> BoundJustification {
    if !inst.is_normalized() {
        return BoundJustification::Unjustified;
    }
    let t = inst.t;
    if u >= t + 6 {
        return BoundJustification::General;
    }
    let class = inst.norm_class();
    if u >= t + 3
        && (t == 3 || t == 4)
        && inst.nu_a1() == 0
        && (class == SquareClass2::ONE || class == SquareClass2::FIVE)
    {
        return BoundJustification::RefinedUnitNorm;
    }
    BoundJustification::Unjustified
}

/// How the candidate space is traversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Refine residue classes mod `2^k` and drop every class on which the
    /// conditions are already decided.
    #[default]
    Pruned,
    /// Evaluate every candidate in lexicographic order.
    Flat,
}

#[derive(Clone, Debug, Default)]
pub struct SearchConfig {
    pub parallelism: usize,
    pub strategy: Strategy,
    /// Cap on individually evaluated candidates.
    pub max_evaluations: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Cooperative cancellation.
    pub cancel: Option<Arc<AtomicBool>>,
    /// Candidates covered so far (evaluated or pruned); grows monotonically.
    pub progress: Option<Arc<AtomicU64>>,
}

impl SearchConfig {
    pub fn with_parallelism(parallelism: usize) -> Self {
        Self {
            parallelism,
            ..Self::default()
        }
    }

    pub fn strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Found,
    Exhausted,
    Aborted,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    /// Lexicographically smallest passing `(a, b, c, d)` in `[0, 2^u)^4`.
    pub witness: Option<Quat>,
    pub witness_coords: Option<[u32; 4]>,
    pub bound_exponent: u32,
    /// Position of the scan in lexicographic order: the witness's rank plus
    /// one, or the whole space when none exists. Independent of strategy and
    /// parallelism.
    pub candidates_scanned: u128,
    /// Candidates that were actually evaluated one by one.
    pub evaluated: u64,
    /// Candidates covered (evaluated or pruned) when the scan stopped.
    pub covered: u128,
    pub strategy: Strategy,
    pub justification: BoundJustification,
    pub elapsed: Duration,
}

impl SearchOutcome {
    pub fn total(&self) -> u128 {
        1u128 << (4 * self.bound_exponent)
    }
}

/// Scan `[0, 2^u)^4` with the default (pruned) strategy.
pub fn search_witness(inst: &KStarInstance, u: u32, parallelism: usize) -> Result<SearchOutcome> {
    search_witness_with(inst, u, &SearchConfig::with_parallelism(parallelism))
}

pub fn search_witness_with(inst: &KStarInstance, u: u32, config: &SearchConfig) -> Result<SearchOutcome> {
    if u == 0 || u > MAX_BOUND {
        return Err(Error::BoundOutOfRange(u));
    }
    if !inst.a1.is_integral() {
        return Err(Error::NotIntegral);
    }
    scan::run(inst, u, config)
}

/// `Full` when the scan finds a witness, `N(Q_2(a1)^*)` when a conclusive
/// scan comes back empty.
pub fn decide_h_binary(inst: &KStarInstance, u: u32, config: &SearchConfig) -> Result<(SpinorImage, SearchOutcome)> {
    let outcome = search_witness_with(inst, u, config)?;
    match outcome.status {
        SearchStatus::Found => Ok((SpinorImage::Full, outcome)),
        SearchStatus::Aborted => Err(Error::Aborted {
            covered: outcome.covered,
            total: outcome.total(),
        }),
        SearchStatus::Exhausted => {
            if !outcome.justification.is_conclusive() {
                return Err(Error::UnjustifiedBound { bound: u });
            }
            Ok((SpinorImage::norm_group_of(inst.a1())?, outcome))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic2::rat;
    use crate::quatalg::{i_pi, parse_quat, AlgebraParams};

    fn q(s: &str) -> Quat {
        parse_quat(&AlgebraParams::standard(), s).unwrap()
    }

    fn inst(a1: &str, t: u32) -> KStarInstance {
        KStarInstance::new(q(a1), t).unwrap()
    }

    #[test]
    fn unit_norm_witness() {
        let rep = kstar_check(&inst("j+ij", 2), &q("1+2iw")).unwrap();
        assert!(rep.passes());
        assert_eq!(rep.n1mr, rat(8));
        assert_eq!(&rep.nz * rat(5), rat(16 * 25));
    }

    #[test]
    fn prime_norm_witness() {
        let params = AlgebraParams::standard();
        for p in [10, -10] {
            let (a1, _) = i_pi(&params, &rat(p)).unwrap();
            let rep = kstar_check(&KStarInstance::new(a1.clone(), 4).unwrap(), &q("15+8w")).unwrap();
            assert!(rep.passes(), "p = {p}");
            assert_eq!(&rep.nz * a1.norm(), rat(1024 * 25 * (1 + 8 * 38)));
        }
    }

    #[test]
    fn degenerate_candidates() {
        let rep = kstar_check(&inst("j+ij", 2), &q("1")).unwrap();
        assert!(rep.degenerate && !rep.passes());
        assert!(!rep.cond_hilbert && !rep.cond_square && !rep.cond_integral);
        // r = -1 fixes a1 as well: z = a1 - a1 = 0.
        let rep = kstar_check(&inst("j+ij", 2), &q("-1")).unwrap();
        assert!(rep.degenerate && rep.nz.is_zero());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(KStarInstance::new(q("1+j"), 2), Err(Error::NotPure));
        assert!(KStarInstance::new(q("j"), 0).is_err());
        let half = parse_quat(&AlgebraParams::standard(), "1/2").unwrap();
        assert_eq!(kstar_check(&inst("j", 1), &half), Err(Error::NotIntegral));
        assert_eq!(search_witness(&inst("j", 1), 0, 1).unwrap_err(), Error::BoundOutOfRange(0));
        assert_eq!(search_witness(&inst("j", 1), 17, 1).unwrap_err(), Error::BoundOutOfRange(17));
    }

    #[test]
    fn bounds() {
        assert_eq!(default_bound(&inst("j+ij", 4), true), 7);
        assert_eq!(default_bound(&inst("j+ij", 2), false), 8);
        assert_eq!(default_bound(&inst("j+ij", 1), true), 4);
        assert_eq!(bound_justification(&inst("j+ij", 4), 7), BoundJustification::RefinedUnitNorm);
        assert_eq!(bound_justification(&inst("i+j", 3), 6), BoundJustification::RefinedUnitNorm);
        assert_eq!(bound_justification(&inst("j+ij", 2), 5), BoundJustification::Unjustified);
        assert_eq!(bound_justification(&inst("i", 4), 7), BoundJustification::Unjustified);
        assert_eq!(bound_justification(&inst("i", 4), 10), BoundJustification::General);
        // class -5 is the minimal-defect class, outside the refined statement
        assert_eq!(bound_justification(&inst("j", 3), 6), BoundJustification::Unjustified);
        // not normalized: nu(2 (j+ij)) = 4
        assert_eq!(bound_justification(&inst("2j+2ij", 3), 12), BoundJustification::Unjustified);
    }

    #[test]
    fn decisions() {
        let cfg = SearchConfig::with_parallelism(2);
        let (img, out) = decide_h_binary(&inst("j+ij", 2), 5, &cfg).unwrap();
        assert_eq!(img, SpinorImage::Full);
        assert!(out.witness.is_some());
        let (img, _) = decide_h_binary(&inst("i", 3), 6, &cfg).unwrap();
        assert_eq!(img, SpinorImage::Full);
        let (img, out) = decide_h_binary(&inst("j+ij", 3), 6, &cfg).unwrap();
        assert_eq!(img, SpinorImage::NormGroup(SquareClass2::MINUS_FIVE));
        assert_eq!(out.justification, BoundJustification::RefinedUnitNorm);
        // an empty scan below any justified bound is refused
        assert_eq!(
            decide_h_binary(&inst("j+ij", 3), 5, &cfg).unwrap_err(),
            Error::UnjustifiedBound { bound: 5 }
        );
    }
}
