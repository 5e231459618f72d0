//! Spinor class fields over `Q`.
//!
//! A global lattice is described by its local spinor images `H_v`, each given
//! by a list of generators of `H_v Q_v^{*2} / Q_v^{*2}`. The spinor class
//! field is the largest multiquadratic field `Sigma` such that every `H_v` lies
//! in the local norms from `Sigma`; `Q(sqrt m)` is inside it iff
//! `(g, m)_v = 1` for every generator `g` of every `H_v`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic2::{hilbert_2, hilbert_p, is_prime, least_nonresidue, parse_rat, rat, Rat};
use crate::quatalg::{parse_quat, AlgebraParams};
use crate::spinor_table::{spinor_image, LatticeDescriptor, SpinorImage};

/// What the lattice imposes at the real place.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealCondition {
    /// `H_inf = R^*`, so `Sigma` is real: only `m > 0` are admitted.
    #[default]
    Positive,
    /// No condition at the real place.
    Unconstrained,
}

impl FromStr for RealCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "positive" => Ok(Self::Positive),
            "unconstrained" => Ok(Self::Unconstrained),
            other => Err(Error::Parse(format!("unknown condition at inf: {other:?}"))),
        }
    }
}

impl fmt::Display for RealCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Positive => "positive",
            Self::Unconstrained => "unconstrained",
        })
    }
}

/// Local images at finitely many places. Absent odd primes default to the
/// unit classes `Z_p^* Q_p^{*2}`, an absent 2 to `Z_2^* Q_2^{*2}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalImageSpec {
    entries: BTreeMap<u64, Vec<Rat>>,
    real: RealCondition,
}

impl LocalImageSpec {
    pub fn new(real: RealCondition) -> Self {
        Self {
            entries: BTreeMap::new(),
            real,
        }
    }

    pub fn with_place(mut self, p: u64, generators: Vec<Rat>) -> Result<Self> {
        self.set_place(p, generators)?;
        Ok(self)
    }

    pub fn set_place(&mut self, p: u64, generators: Vec<Rat>) -> Result<()> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if generators.is_empty() {
            return Err(Error::Argument(format!("empty generator list at {p}")));
        }
        if generators.iter().any(Zero::is_zero) {
            return Err(Error::Argument(format!("zero generator at {p}")));
        }
        self.entries.insert(p, generators);
        Ok(())
    }

    /// Sets `H_2` from a spinor image computed by the local classification.
    pub fn with_image_at_2(self, img: SpinorImage) -> Result<Self> {
        let gens = img.members().into_iter().map(|c| c.as_rat()).collect();
        self.with_place(2, gens)
    }

    pub fn real(&self) -> RealCondition {
        self.real
    }

    pub fn places(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.keys().copied()
    }

    /// Generators of `H_p`, defaults included.
    pub fn generators(&self, p: u64) -> Result<Vec<Rat>> {
        if let Some(g) = self.entries.get(&p) {
            return Ok(g.clone());
        }
        if p == 2 {
            Ok(vec![rat(-1), rat(5)])
        } else {
            Ok(vec![rat(least_nonresidue(p)? as i64)])
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SpecJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.schema != 1 {
            return Err(Error::Parse(format!("unsupported schema {}", raw.schema)));
        }
        let mut spec = Self::default();
        for (place, value) in raw.places {
            match (place.trim(), value) {
                ("inf", PlaceJson::Real(c)) => spec.real = c.parse()?,
                ("inf", PlaceJson::Generators(_)) => {
                    return Err(Error::Parse("inf takes \"positive\" or \"unconstrained\"".into()))
                }
                (p, PlaceJson::Generators(gens)) => {
                    let p: u64 = p.parse().map_err(|_| Error::Parse(format!("bad place {p:?}")))?;
                    let gens = gens.iter().map(|g| parse_rat(g)).collect::<Result<Vec<_>>>()?;
                    spec.set_place(p, gens)?;
                }
                (p, PlaceJson::Real(_)) => return Err(Error::Parse(format!("place {p} needs a generator list"))),
            }
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let mut places: BTreeMap<String, PlaceJson> = self
            .entries
            .iter()
            .map(|(p, g)| (p.to_string(), PlaceJson::Generators(g.iter().map(|x| x.to_string()).collect())))
            .collect();
        places.insert("inf".into(), PlaceJson::Real(self.real.to_string()));
        serde_json::to_string_pretty(&SpecJson { schema: 1, places }).expect("spec serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    #[serde(default = "schema_one")]
    schema: u32,
    places: BTreeMap<String, PlaceJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PlaceJson {
    Real(String),
    Generators(Vec<String>),
}

fn schema_one() -> u32 {
    1
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn check_squarefree(m: i64) -> Result<()> {
    if m == 0 || m == 1 {
        return Err(Error::Argument(format!("m = {m} does not define a quadratic field")));
    }
    let mut n = m.unsigned_abs();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p * p) {
            return Err(Error::NotSquarefree(m));
        }
        if n.is_multiple_of(p) {
            n /= p;
        }
        p += 1;
    }
    Ok(())
}

/// Whether `Q(sqrt m)` lies in the spinor class field.
pub fn field_in_sigma(spec: &LocalImageSpec, m: i64) -> Result<bool> {
    check_squarefree(m)?;
    if spec.real == RealCondition::Positive && m < 0 {
        return Ok(false);
    }
    let mut places: BTreeSet<u64> = spec.places().collect();
    places.insert(2);
    places.extend(prime_factors(m.unsigned_abs()));
    let mr = rat(m);
    for p in places {
        for g in spec.generators(p)? {
            let symbol = if p == 2 { hilbert_2(&g, &mr)? } else { hilbert_p(&g, &mr, p)? };
            if symbol != 1 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFieldResult {
    /// Every squarefree `m != 1` over the support with `Q(sqrt m)` inside
    /// `Sigma`.
    pub discriminants: Vec<i64>,
    /// A basis of those `m` modulo squares; `Sigma = Q(sqrt g : g in basis)`.
    pub generators: Vec<i64>,
    pub spinor_genera: u64,
    /// Equal to `spinor_genera`, present only when class and spinor genus
    /// are known to coincide.
    pub class_number: Option<u64>,
}

impl ClassFieldResult {
    pub fn describe_field(&self) -> String {
        if self.generators.is_empty() {
            "Q".into()
        } else {
            let roots: Vec<String> = self.generators.iter().map(|g| format!("sqrt({g})")).collect();
            format!("Q({})", roots.join(", "))
        }
    }
}

/// `Sigma` from the candidates `Q(sqrt m)` with `m` built from `-1` and the
/// primes of `support`. `indefinite` asserts that class and spinor genus
/// coincide, which turns the number of spinor genera into a class number.
pub fn spinor_class_field(spec: &LocalImageSpec, support: &[u64], indefinite: bool) -> Result<ClassFieldResult> {
    let mut primes: BTreeSet<u64> = BTreeSet::new();
    for &p in support {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        primes.insert(p);
    }
    if !primes.contains(&2) {
        return Err(Error::Argument("support must contain 2".into()));
    }
    if let Some(p) = spec.places().find(|p| !primes.contains(p)) {
        return Err(Error::Argument(format!("support is missing {p}, which the spec constrains")));
    }
    let mut base: Vec<i64> = vec![-1];
    for p in primes {
        base.push(i64::try_from(p).map_err(|_| Error::Argument(format!("prime {p} too large")))?);
    }
    if base.len() > 20 {
        return Err(Error::Argument("support too large".into()));
    }
    let n = base.len();
    let product = |mask: u32| -> Option<i64> {
        (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .try_fold(1i64, |acc, i| acc.checked_mul(base[i]))
    };
    let mut admitted = Vec::new();
    for mask in 1u32..(1 << n) {
        let m = product(mask).ok_or_else(|| Error::Argument("candidate discriminant overflows".into()))?;
        if m != 1 && field_in_sigma(spec, m)? {
            admitted.push(mask);
        }
    }
    // Admitted masks (with 0) form a subspace of F_2^n; take its reduced basis.
    let mut basis: Vec<u32> = Vec::new();
    for &mask in &admitted {
        let mut v = mask;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            if i != j {
                let top = 31 - basis[j].leading_zeros();
                if basis[i] >> top & 1 == 1 {
                    basis[i] ^= basis[j];
                }
            }
        }
    }
    let spinor_genera = 1u64 << basis.len();
    debug_assert_eq!(admitted.len() as u64 + 1, spinor_genera);
    let mut discriminants: Vec<i64> = admitted.iter().map(|&m| product(m).expect("checked")).collect();
    discriminants.sort_unstable();
    let mut generators: Vec<i64> = basis.iter().map(|&m| product(m).expect("checked")).collect();
    generators.sort_unstable();
    Ok(ClassFieldResult {
        discriminants,
        generators,
        spinor_genera,
        class_number: indefinite.then_some(spinor_genera),
    })
}

/// The lattice `<i+j> _|_ <8(i+j)>` in `(2, 5 / Q)`: `H_2` from the local
/// table, `H_7` containing the spinor norm 3 of a product of two reflections,
/// and a real spinor class field.
pub fn worked_example_one() -> Result<LocalImageSpec> {
    let params = AlgebraParams::standard();
    let a = parse_quat(&params, "i+j")?;
    let img = spinor_image(&LatticeDescriptor::binary(a, 3)?)?;
    LocalImageSpec::new(RealCondition::Positive)
        .with_image_at_2(img)?
        .with_place(7, vec![rat(3), rat(-1)])
}

/// The lattice `<i> _|_ <2^t i>` in `(2, 5 / Q)`, unimodular away from 2.
pub fn worked_example_two(t: u32) -> Result<LocalImageSpec> {
    let params = AlgebraParams::standard();
    let img = spinor_image(&LatticeDescriptor::binary(params.i(), t)?)?;
    LocalImageSpec::new(RealCondition::Positive).with_image_at_2(img)
}
