//! The published witness tables, re-checked from scratch.
//!
//! Three tables are shipped:
//!
//! * `pair`: for unit-norm `q` and `t in {3, 4}`, two elements `r1`, `r2` with
//!   `nu(1 - r1) = 2`, `nu(1 - r2) = 1`, `N(z) N(q)` a square and
//!   `N(z) / N(2^t q)` a 2-adic unit;
//! * `unit_norm`: k-star witnesses for `a1 in {j+ij, i+j}` at `t = 2`, with the
//!   stated `N(1 - r)`, `z` and `N(z) N(a1)`;
//! * `prime_norm`: the witness `15 + 8w` for `a1 = i_pi`, `pi in {+-2, +-10}`,
//!   at `t = 4`.
//!
//! Witnesses for `t` must also pass for every smaller `t`; rows check that too.

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::padic2::{is_square_2, parse_rat, v2, Rat};
use crate::quatalg::{d_valuation, i_pi, parse_quat, reduced_norm, z_of, AlgebraParams, Quat};

use super::{kstar_check, KStarInstance};

const EMBEDDED: &str = include_str!("../../data/witness_tables.json");

fn de_u32<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u32, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(u32),
        Str(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(n) => Ok(n),
        Raw::Str(s) => s.trim().parse().map_err(serde::de::Error::custom),
    }
}

fn ser_u32<S: serde::Serializer>(n: &u32, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRow {
    pub a1: String,
    #[serde(deserialize_with = "de_u32", serialize_with = "ser_u32")]
    pub t: u32,
    pub r1: String,
    pub r2: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitNormRow {
    pub a1: String,
    #[serde(deserialize_with = "de_u32", serialize_with = "ser_u32")]
    pub t: u32,
    pub r: String,
    pub n1mr: String,
    pub z: String,
    pub nz_na1: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeNormRow {
    pub pi: Vec<String>,
    #[serde(deserialize_with = "de_u32", serialize_with = "ser_u32")]
    pub t: u32,
    pub r: String,
    pub n1mr: String,
    /// `z` divided on the left by `i_pi`, an element of `Q(w)`.
    pub z_over_i_pi: String,
    pub nz_na1: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessTables {
    pub schema: u32,
    pub pair: Vec<PairRow>,
    pub unit_norm: Vec<UnitNormRow>,
    pub prime_norm: Vec<PrimeNormRow>,
}

impl WitnessTables {
    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED).expect("embedded witness tables parse")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let tables: Self = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if tables.schema != 1 {
            return Err(Error::Parse(format!("unsupported schema {}", tables.schema)));
        }
        Ok(tables)
    }
}

/// One named check on a row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowReport {
    pub table: &'static str,
    pub label: String,
    pub a1: String,
    #[serde(serialize_with = "ser_u32")]
    pub t: u32,
    pub r: String,
    /// Recomputed values; absent when the row could not be parsed.
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub n1mr: Option<Rat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_rat")]
    pub nz_na1: Option<Rat>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

mod opt_rat {
    use super::Rat;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_str(&x.to_string()),
            None => s.serialize_none(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableReport {
    pub rows: Vec<RowReport>,
}

impl TableReport {
    pub fn all_pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RowReport> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

pub fn verify_witness_tables() -> TableReport {
    verify_witness_tables_with(&WitnessTables::embedded())
}

pub fn verify_witness_tables_with(tables: &WitnessTables) -> TableReport {
    let params = AlgebraParams::standard();
    let mut rows = Vec::new();
    for row in &tables.pair {
        for (which, r, nu) in [("r1", &row.r1, 2), ("r2", &row.r2, 1)] {
            let mut rep = RowReport::new("pair", format!("q = {}, t = {}, {which}", row.a1, row.t), &row.a1, row.t, r);
            if let Err(e) = pair_checks(&params, row, r, nu, &mut rep) {
                rep.fail("parse", e);
            }
            rows.push(rep.finish());
        }
    }
    for row in &tables.unit_norm {
        let mut rep = RowReport::new("unit_norm", format!("a1 = {}, t = {}", row.a1, row.t), &row.a1, row.t, &row.r);
        if let Err(e) = unit_norm_checks(&params, row, &mut rep) {
            rep.fail("parse", e);
        }
        rows.push(rep.finish());
    }
    for row in &tables.prime_norm {
        for p in &row.pi {
            let mut rep = RowReport::new("prime_norm", format!("a1 = i_{p}, t = {}", row.t), &format!("i_{p}"), row.t, &row.r);
            if let Err(e) = prime_norm_checks(&params, row, p, &mut rep) {
                rep.fail("parse", e);
            }
            rows.push(rep.finish());
        }
    }
    TableReport { rows }
}

impl RowReport {
    fn new(table: &'static str, label: String, a1: &str, t: u32, r: &str) -> Self {
        Self {
            table,
            label,
            a1: a1.to_string(),
            t,
            r: r.to_string(),
            n1mr: None,
            z: None,
            nz_na1: None,
            checks: Vec::new(),
            pass: false,
        }
    }

    fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push(Check { name: name.into(), pass });
    }

    fn fail(&mut self, name: &str, e: Error) {
        self.check(format!("{name}: {e}"), false);
    }

    fn finish(mut self) -> Self {
        self.pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        self
    }

    fn record(&mut self, a1: &Quat, r: &Quat) -> Result<(Rat, Quat, Rat)> {
        let n1mr = reduced_norm(&(&r.params().one() - r));
        let z = z_of(a1, r)?;
        let nz_na1 = reduced_norm(&z) * reduced_norm(a1);
        self.n1mr = Some(n1mr.clone());
        self.z = Some(z.to_string());
        self.nz_na1 = Some(nz_na1.clone());
        Ok((n1mr, z, nz_na1))
    }

    /// The witness passes the k-star conditions at `t` and at every smaller
    /// positive `t`.
    fn kstar_down_to_one(&mut self, a1: &Quat, t: u32, r: &Quat) -> Result<()> {
        for s in (1..=t).rev() {
            let pass = kstar_check(&KStarInstance::new(a1.clone(), s)?, r)?.passes();
            self.check(format!("k-star conditions at t = {s}"), pass);
        }
        Ok(())
    }
}

fn pair_checks(params: &AlgebraParams, row: &PairRow, r: &str, nu: i64, rep: &mut RowReport) -> Result<()> {
    let q = parse_quat(params, &row.a1)?;
    let r = parse_quat(params, r)?;
    let (_, z, nz_nq) = rep.record(&q, &r)?;
    rep.check("r integral", r.is_integral());
    rep.check(format!("nu(1 - r) = {nu}"), d_valuation(&(&params.one() - &r)).ok() == Some(nu));
    rep.check("N(z) N(q) is a square", !nz_nq.is_zero() && is_square_2(&nz_nq)?);
    // N(z) / N(2^t q) is a unit
    let nz = reduced_norm(&z);
    let unit = !nz.is_zero() && v2(&nz)? == 2 * row.t as i64 + v2(&reduced_norm(&q))?;
    rep.check("N(z) / N(2^t q) is a unit", unit);
    Ok(())
}

fn unit_norm_checks(params: &AlgebraParams, row: &UnitNormRow, rep: &mut RowReport) -> Result<()> {
    let a1 = parse_quat(params, &row.a1)?;
    let r = parse_quat(params, &row.r)?;
    let (n1mr, z, nz_na1) = rep.record(&a1, &r)?;
    rep.check(format!("N(1 - r) = {}", row.n1mr), n1mr == parse_rat(&row.n1mr)?);
    rep.check(format!("z = {}", row.z), z == parse_quat(params, &row.z)?);
    rep.check(format!("N(z) N(a1) = {}", row.nz_na1), nz_na1 == parse_rat(&row.nz_na1)?);
    rep.kstar_down_to_one(&a1, row.t, &r)
}

fn prime_norm_checks(params: &AlgebraParams, row: &PrimeNormRow, p: &str, rep: &mut RowReport) -> Result<()> {
    let (a1, alpha) = i_pi(params, &parse_rat(p)?)?;
    rep.a1 = format!("i_{p} = i*({alpha})");
    let r = parse_quat(params, &row.r)?;
    let (n1mr, z, nz_na1) = rep.record(&a1, &r)?;
    let x = parse_quat(params, &row.z_over_i_pi)?;
    rep.check(format!("N(1 - r) = {}", row.n1mr), n1mr == parse_rat(&row.n1mr)?);
    rep.check(format!("z = i_{p} ({})", row.z_over_i_pi), z == &a1 * &x);
    rep.check(format!("N(z) N(a1) = {}", row.nz_na1), nz_na1 == parse_rat(&row.nz_na1)?);
    rep.check(format!("i_{p}^2 = {p}"), &a1 * &a1 == Quat::from_scalar(params, parse_rat(p)?));
    rep.kstar_down_to_one(&a1, row.t, &r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_tables_pass() {
        let report = verify_witness_tables();
        for row in &report.rows {
            assert!(row.pass, "{row:#?}");
        }
        assert_eq!(report.rows.len(), 8 + 2 + 4);
    }

    #[test]
    fn corrupted_row_fails() {
        let mut tables = WitnessTables::embedded();
        tables.unit_norm[0].nz_na1 = "401".into();
        tables.pair[2].r1 = "-1-4i".into();
        let report = verify_witness_tables_with(&tables);
        let failed: Vec<_> = report.failures().map(|r| r.label.clone()).collect();
        assert_eq!(failed, ["q = i+j, t = 3, r1", "a1 = j+ij, t = 2"]);
        assert!(!report.all_pass());
    }

    #[test]
    fn unparsable_row_is_reported() {
        let mut tables = WitnessTables::embedded();
        tables.prime_norm[0].r = "15+8x".into();
        let report = verify_witness_tables_with(&tables);
        assert_eq!(report.failures().count(), 2);
    }

    #[test]
    fn schema_checked() {
        assert!(WitnessTables::from_json(r#"{"schema":2,"pair":[],"unit_norm":[],"prime_norm":[]}"#).is_err());
        assert!(WitnessTables::from_json("not json").is_err());
    }
}
