//! Spinor images `H(L)` of lattices over `Q_2` in an already split form
//! `L = <a_1> _|_ ... _|_ <a_n> _|_ (s binary indecomposables)`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic2::{hilbert_2, rat_string, square_class_2, Rat, SquareClass2};
use crate::quatalg::{d_valuation, is_pure, reduced_norm, AlgebraParams, Quat};
use crate::spinor_search::{
    decide_h_binary, default_bound, BoundJustification, KStarInstance, SearchConfig, SearchOutcome,
};

/// `H(L)` modulo squares: everything, or the norm group of a quadratic
/// extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpinorImage {
    Full,
    /// `{x : (x, d)_2 = 1}`, the norms from `Q_2(sqrt d)`; `d` is never the
    /// trivial class. `NormGroup(5)` is `Z_2^* Q_2^{*2}`.
    NormGroup(SquareClass2),
}

impl SpinorImage {
    pub fn norm_group(d: SquareClass2) -> Result<Self> {
        if d == SquareClass2::ONE {
            return Err(Error::Argument("norm group of the trivial class".into()));
        }
        Ok(Self::NormGroup(d))
    }

    /// `N(Q_2(a)^*)` for a pure quaternion `a`, i.e. the norm group of
    /// `Q_2(sqrt(-N(a)))`.
    pub fn norm_group_of(a: &Quat) -> Result<Self> {
        if !is_pure(a) || a.is_zero() {
            return Err(Error::NotPure);
        }
        Self::norm_group(square_class_2(&-reduced_norm(a))?)
    }

    pub fn contains_class(self, c: SquareClass2) -> bool {
        match self {
            Self::Full => true,
            Self::NormGroup(d) => hilbert_2(&c.as_rat(), &d.as_rat()) == Ok(1),
        }
    }

    /// The canonical classes in the image.
    pub fn members(self) -> Vec<SquareClass2> {
        SquareClass2::ALL.into_iter().filter(|&c| self.contains_class(c)).collect()
    }

    pub fn is_full(self) -> bool {
        self == Self::Full
    }
}

impl fmt::Display for SpinorImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => f.write_str("Q_2^*"),
            Self::NormGroup(d) if *d == SquareClass2::FIVE => f.write_str("Z_2^* Q_2^*2"),
            Self::NormGroup(d) => write!(f, "N(Q_2(sqrt({d}))^*)"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "image", rename_all = "snake_case")]
enum ImageRepr {
    Full,
    NormGroup { d: SquareClass2 },
}

impl Serialize for SpinorImage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Self::Full => ImageRepr::Full,
            Self::NormGroup(d) => ImageRepr::NormGroup { d },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpinorImage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ImageRepr::deserialize(d)? {
            ImageRepr::Full => Ok(Self::Full),
            ImageRepr::NormGroup { d } => Self::norm_group(d).map_err(serde::de::Error::custom),
        }
    }
}

pub fn image_contains(img: SpinorImage, x: &Rat) -> Result<bool> {
    if x.is_zero() {
        return Err(Error::Domain("membership of zero"));
    }
    Ok(img.contains_class(square_class_2(x)?))
}

/// A lattice given by its rank-1 components `<a_m>` and the number of binary
/// indecomposable components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeDescriptor {
    components: Vec<Quat>,
    rank2_count: u32,
}

impl LatticeDescriptor {
    /// Components are reordered by increasing valuation.
    pub fn new(components: Vec<Quat>, rank2_count: u32) -> Result<Self> {
        if let Some(first) = components.first() {
            if components.iter().any(|a| a.params() != first.params()) {
                return Err(Error::ParamsMismatch);
            }
        }
        let mut keyed = Vec::with_capacity(components.len());
        for a in components {
            if a.is_zero() || !is_pure(&a) {
                return Err(Error::InvalidLattice(format!("component {a} is not a nonzero pure quaternion")));
            }
            keyed.push((d_valuation(&a)?, a));
        }
        keyed.sort_by_key(|(v, _)| *v);
        Ok(Self {
            components: keyed.into_iter().map(|(_, a)| a).collect(),
            rank2_count,
        })
    }

    /// `<a> _|_ <2^t a>`.
    pub fn binary(a: Quat, t: u32) -> Result<Self> {
        let b = a.scale(&Rat::from_integer(BigInt::one() << t));
        Self::new(vec![a, b], 0)
    }

    pub fn components(&self) -> &[Quat] {
        &self.components
    }

    pub fn rank2_count(&self) -> u32 {
        self.rank2_count
    }

    pub fn scaled(&self, c: &Rat) -> Result<Self> {
        Self::new(self.components.iter().map(|a| a.scale(c)).collect(), self.rank2_count)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: LatticeJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LatticeJson::from(self)).expect("lattice serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct ComponentJson {
    coords: [RatString; 4],
    #[serde(default)]
    scale_shift: i32,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct RatString(#[serde(with = "rat_string")] Rat);

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    #[serde(default = "schema_one")]
    schema: u32,
    #[serde(with = "rat_string", default = "two")]
    pi: Rat,
    #[serde(with = "rat_string", default = "one")]
    delta: Rat,
    components: Vec<ComponentJson>,
    #[serde(default)]
    rank2_count: u32,
}

fn schema_one() -> u32 {
    1
}

fn two() -> Rat {
    Rat::from_integer(2.into())
}

fn one() -> Rat {
    Rat::one()
}

impl TryFrom<LatticeJson> for LatticeDescriptor {
    type Error = Error;

    fn try_from(raw: LatticeJson) -> Result<Self> {
        if raw.schema != 1 {
            return Err(Error::Parse(format!("unsupported schema {}", raw.schema)));
        }
        let params = AlgebraParams::new(raw.pi, raw.delta)?;
        let components = raw
            .components
            .into_iter()
            .map(|c| {
                let [a, b, cc, d] = c.coords.map(|x| x.0);
                let shift = if c.scale_shift >= 0 {
                    Rat::from_integer(BigInt::one() << c.scale_shift as u32)
                } else {
                    Rat::new(BigInt::one(), BigInt::one() << c.scale_shift.unsigned_abs())
                };
                Quat::new(&params, a, b, cc, d).scale(&shift)
            })
            .collect();
        Self::new(components, raw.rank2_count)
    }
}

impl From<&LatticeDescriptor> for LatticeJson {
    fn from(desc: &LatticeDescriptor) -> Self {
        let params = desc
            .components
            .first()
            .map(|a| a.params().clone())
            .unwrap_or_default();
        Self {
            schema: 1,
            pi: params.pi().clone(),
            delta: params.delta().clone(),
            components: desc
                .components
                .iter()
                .map(|a| ComponentJson {
                    coords: a.coords().map(|x| RatString(x.clone())),
                    scale_shift: 0,
                })
                .collect(),
            rank2_count: desc.rank2_count,
        }
    }
}

/// The invariants the table is indexed by.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub s: u32,
    /// Square classes of `N(a_m)`.
    pub classes: BTreeSet<SquareClass2>,
    /// Least valuation gap between consecutive rank-1 components, in units of
    /// the valuation on `D`; `None` for fewer than two components.
    pub mu: Option<i64>,
}

pub fn classify(desc: &LatticeDescriptor) -> Result<Classification> {
    let mut classes = BTreeSet::new();
    for a in &desc.components {
        let c = square_class_2(&reduced_norm(a))?;
        if c == SquareClass2::MINUS_ONE {
            return Err(Error::InvalidLattice("a pure quaternion cannot have norm -1".into()));
        }
        classes.insert(c);
    }
    let vals = desc
        .components
        .iter()
        .map(d_valuation)
        .collect::<Result<Vec<_>>>()?;
    let mu = vals.windows(2).map(|w| w[1] - w[0]).min();
    Ok(Classification {
        s: desc.rank2_count,
        classes,
        mu,
    })
}

/// The row of the classification table a verdict comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableRow {
    /// `s != 0`.
    RankTwoPresent,
    /// More than one norm class among the rank-1 components.
    SeveralClasses,
    /// The single class is `-Delta`.
    MinimalDefect,
    /// The single class is `-u`, `u` a unit of non-minimal defect, `mu < 6`.
    UnitBelow,
    UnitAbove,
    /// The single class is prime, `mu <= 8`.
    PrimeBelow,
    PrimeAbove,
}

impl TableRow {
    pub fn description(self) -> &'static str {
        match self {
            Self::RankTwoPresent => "s != 0",
            Self::SeveralClasses => "|A| > 1",
            Self::MinimalDefect => "A = {-Delta}",
            Self::UnitBelow => "A = {-u}, 0 <= mu < nu(8)",
            Self::UnitAbove => "A = {-u}, mu >= nu(8)",
            Self::PrimeBelow => "A = {pi}, 0 <= mu <= nu(16)",
            Self::PrimeAbove => "A = {pi}, mu > nu(16)",
        }
    }
}

impl fmt::Display for TableRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.description())
    }
}

/// `nu(8)`: the unit-class threshold.
pub const UNIT_THRESHOLD: i64 = 6;
/// `nu(16)`: the prime-class threshold.
pub const PRIME_THRESHOLD: i64 = 8;

pub fn spinor_image(desc: &LatticeDescriptor) -> Result<SpinorImage> {
    spinor_image_with_row(desc).map(|(img, _)| img)
}

pub fn spinor_image_with_row(desc: &LatticeDescriptor) -> Result<(SpinorImage, TableRow)> {
    let cls = classify(desc)?;
    if cls.s != 0 {
        return Ok((SpinorImage::Full, TableRow::RankTwoPresent));
    }
    if cls.classes.len() > 1 {
        return Ok((SpinorImage::Full, TableRow::SeveralClasses));
    }
    let Some(&class) = cls.classes.first() else {
        return Err(Error::InvalidLattice("empty lattice".into()));
    };
    let norm_group = SpinorImage::norm_group(class.neg())?;
    // mu = infinity lands in the norm-group rows
    let mu = cls.mu.unwrap_or(i64::MAX);
    Ok(if class == SquareClass2::MINUS_FIVE {
        (SpinorImage::NormGroup(SquareClass2::FIVE), TableRow::MinimalDefect)
    } else if class.is_unit_class() {
        if mu < UNIT_THRESHOLD {
            (SpinorImage::Full, TableRow::UnitBelow)
        } else {
            (norm_group, TableRow::UnitAbove)
        }
    } else if mu <= PRIME_THRESHOLD {
        (SpinorImage::Full, TableRow::PrimeBelow)
    } else {
        (norm_group, TableRow::PrimeAbove)
    })
}

/// A from-scratch verdict for a binary lattice `<a1> _|_ <a2>` with
/// `N(a2) in N(a1) Q_2^{*2}`, by witness search rather than the table.
#[derive(Clone, Debug)]
pub struct SearchVerdict {
    pub image: SpinorImage,
    /// The rescaled instance that was searched.
    pub instance: KStarInstance,
    pub outcome: SearchOutcome,
    pub justification: BoundJustification,
}

/// `bound` defaults to the general bound, or the refined one when `refined`.
pub fn spinor_image_by_search(
    desc: &LatticeDescriptor,
    bound: Option<u32>,
    refined: bool,
    config: &SearchConfig,
) -> Result<SearchVerdict> {
    let inst = binary_instance(desc)?;
    let u = bound.unwrap_or_else(|| default_bound(&inst, refined));
    let (image, outcome) = decide_h_binary(&inst, u, config)?;
    Ok(SearchVerdict {
        image,
        justification: outcome.justification,
        instance: inst,
        outcome,
    })
}

/// The normalized k-star instance of a binary lattice with one norm class.
pub fn binary_instance(desc: &LatticeDescriptor) -> Result<KStarInstance> {
    let [a1, _] = desc.components() else {
        return Err(Error::InvalidLattice("search verdicts need exactly two rank-1 components".into()));
    };
    if desc.rank2_count != 0 {
        return Err(Error::InvalidLattice("search verdicts need s = 0".into()));
    }
    let cls = classify(desc)?;
    if cls.classes.len() != 1 {
        return Err(Error::InvalidLattice("components have different norm classes".into()));
    }
    let gap = cls.mu.expect("two components");
    if gap == 0 || gap % 2 != 0 {
        return Err(Error::InvalidLattice(format!("valuation gap {gap} is not a positive even number")));
    }
    // Rescale by a power of 2 so that nu(a1) is 0 or 1.
    let shift = d_valuation(a1)?.div_euclid(2);
    let scale = if shift >= 0 {
        Rat::new(BigInt::one(), BigInt::one() << shift as u32)
    } else {
        Rat::from_integer(BigInt::one() << shift.unsigned_abs())
    };
    KStarInstance::new(a1.scale(&scale), (gap / 2) as u32)
}
