//! Canonical requests and their evaluation. A report carries its request, so
//! feeding a report back through [`execute`] reproduces its verdict.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use quatspin::genus_global::{spinor_class_field, LocalImageSpec};
use quatspin::quatalg::{reduced_norm, Quat};
use quatspin::spinor_search::tables::{verify_witness_tables_with, WitnessTables};
use quatspin::spinor_search::{
    kstar_check, search_witness_with, KStarInstance, SearchConfig, SearchOutcome, SearchStatus, Strategy, MAX_BOUND,
};
use quatspin::spinor_table::{spinor_image_by_search, spinor_image_with_row, LatticeDescriptor};
use quatspin::{Error, SpinorImage};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::reproduce::{self, Tier};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", content = "inputs", rename_all = "kebab-case")]
pub enum Request {
    KstarCheck {
        a1: Quat,
        #[serde(with = "num")]
        t: u32,
        r: Quat,
    },
    Search {
        a1: Quat,
        #[serde(with = "num")]
        t: u32,
        #[serde(with = "num")]
        bound: u32,
        strategy: Strategy,
    },
    VerifyTables {
        tables: WitnessTables,
    },
    SpinorImage {
        lattice: Value,
        search: bool,
    },
    ClassField {
        spec: Value,
        support: Vec<String>,
        indefinite: bool,
    },
    Reproduce {
        tier: Tier,
        tables: WitnessTables,
    },
}

impl Request {
    pub fn name(&self) -> &'static str {
        match self {
            Self::KstarCheck { .. } => "kstar-check",
            Self::Search { .. } => "search",
            Self::VerifyTables { .. } => "verify-tables",
            Self::SpinorImage { .. } => "spinor-image",
            Self::ClassField { .. } => "class-field",
            Self::Reproduce { .. } => "reproduce",
        }
    }
}

mod num {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &u32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
        String::deserialize(d)?.trim().parse().map_err(D::Error::custom)
    }
}

/// Resource settings; they never change a completed verdict, so they are not
/// part of the request.
#[derive(Clone, Debug, Default)]
pub struct Limits {
    pub jobs: usize,
    pub progress: bool,
    pub max_evaluations: Option<u64>,
    pub time_limit: Option<Duration>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Mismatch,
    Aborted,
}

#[derive(Clone, Debug)]
pub struct Response {
    pub verdict: Value,
    pub citations: Vec<String>,
    pub status: Status,
}

pub fn s<T: ToString>(x: T) -> Value {
    Value::String(x.to_string())
}

pub fn image_json(img: SpinorImage) -> Value {
    match img {
        SpinorImage::Full => json!({ "image": "full", "group": img.to_string() }),
        SpinorImage::NormGroup(d) => json!({ "image": "norm_group", "d": s(d), "group": img.to_string() }),
    }
}

pub fn coords_json(q: &Quat) -> Value {
    Value::Array(q.coords().iter().map(s).collect())
}

impl Limits {
    pub fn search_config(&self, strategy: Strategy) -> SearchConfig {
        SearchConfig {
            parallelism: self.jobs,
            strategy,
            max_evaluations: self.max_evaluations,
            time_limit: self.time_limit,
            cancel: None,
            progress: None,
        }
    }

    /// Runs `f` with a progress heartbeat on standard error when requested.
    pub fn observe<T>(&self, total: Option<u128>, mut config: SearchConfig, f: impl FnOnce(&SearchConfig) -> T) -> T {
        if !self.progress {
            return f(&config);
        }
        let counter = Arc::new(AtomicU64::new(0));
        config.progress = Some(counter.clone());
        let done = AtomicBool::new(false);
        thread::scope(|scope| {
            scope.spawn(|| {
                while !done.load(Ordering::Relaxed) {
                    thread::sleep(Duration::from_millis(250));
                    let covered = counter.load(Ordering::Relaxed);
                    match total {
                        Some(total) => eprintln!("progress: {covered} / {total}"),
                        None => eprintln!("progress: {covered}"),
                    }
                }
            });
            let out = f(&config);
            done.store(true, Ordering::Relaxed);
            out
        })
    }
}

pub fn outcome_json(out: &SearchOutcome) -> Value {
    let status = match out.status {
        SearchStatus::Found => "found",
        SearchStatus::Exhausted => "exhausted",
        SearchStatus::Aborted => "aborted",
    };
    let mut v = json!({
        "status": status,
        "bound": s(out.bound_exponent),
        "justification": out.justification,
        "justification_text": out.justification.tag(),
        "scanned": s(out.candidates_scanned),
        "total": s(out.total()),
    });
    if let Some(w) = &out.witness {
        v["witness"] = coords_json(w);
    }
    if out.status == SearchStatus::Aborted {
        v["covered"] = s(out.covered);
    }
    v
}

pub fn execute(req: &Request, limits: &Limits) -> Result<Response, Error> {
    match req {
        Request::KstarCheck { a1, t, r } => {
            let inst = KStarInstance::new(a1.clone(), *t)?;
            let rep = kstar_check(&inst, r)?;
            Ok(Response {
                verdict: json!({
                    "pass": rep.passes(),
                    "degenerate": rep.degenerate,
                    "cond_hilbert": rep.cond_hilbert,
                    "cond_square": rep.cond_square,
                    "cond_integral": rep.cond_integral,
                    "n1mr": s(&rep.n1mr),
                    "z": coords_json(&rep.z),
                    "nz": s(&rep.nz),
                    "nz_na1": s(&rep.nz * reduced_norm(a1)),
                    "spinor_class": rep.spinor_class.map(s),
                }),
                citations: vec!["k-star conditions".into()],
                status: Status::Ok,
            })
        }
        Request::Search { a1, t, bound, strategy } => {
            let inst = KStarInstance::new(a1.clone(), *t)?;
            let total = 1u128 << (4 * (*bound).min(MAX_BOUND));
            let out = limits.observe(Some(total), limits.search_config(*strategy), |cfg| search_witness_with(&inst, *bound, cfg))?;
            let mut verdict = outcome_json(&out);
            let mut citations = vec![format!("bounded search: {}", out.justification.tag())];
            let status = match out.status {
                SearchStatus::Aborted => Status::Aborted,
                _ => Status::Ok,
            };
            verdict["image"] = match out.status {
                SearchStatus::Found => image_json(SpinorImage::Full),
                SearchStatus::Exhausted if out.justification.is_conclusive() => {
                    citations.push("local dichotomy: H = Q_2^* or N(Q_2(a1)^*)".into());
                    image_json(SpinorImage::norm_group_of(a1)?)
                }
                _ => Value::Null,
            };
            Ok(Response { verdict, citations, status })
        }
        Request::VerifyTables { tables } => {
            let report = verify_witness_tables_with(tables);
            let ok = report.all_pass();
            let failures: Vec<&str> = report.failures().map(|r| r.label.as_str()).collect();
            Ok(Response {
                verdict: json!({
                    "all_pass": ok,
                    "failures": failures,
                    "rows": report.rows,
                }),
                citations: vec!["witness tables: pair, unit_norm, prime_norm".into()],
                status: if ok { Status::Ok } else { Status::Mismatch },
            })
        }
        Request::SpinorImage { lattice, search } => {
            let desc = LatticeDescriptor::from_json(&lattice.to_string())?;
            let (img, row) = spinor_image_with_row(&desc)?;
            let cls = quatspin::spinor_table::classify(&desc)?;
            let mut verdict = json!({
                "image": image_json(img),
                "s": s(cls.s),
                "classes": cls.classes.iter().map(s).collect::<Vec<_>>(),
                "mu": cls.mu.map_or(s("infinity"), s),
            });
            let mut citations = vec![format!("classification table row: {}", row.description())];
            let mut status = Status::Ok;
            if *search {
                let cfg = limits.search_config(Strategy::Pruned);
                let found = limits.observe(None, cfg, |cfg| spinor_image_by_search(&desc, None, false, cfg));
                match found {
                    Ok(v) => {
                        verdict["search"] = json!({
                            "image": image_json(v.image),
                            "a1": coords_json(v.instance.a1()),
                            "t": s(v.instance.t()),
                            "outcome": outcome_json(&v.outcome),
                            "agrees": v.image == img,
                        });
                        citations.push(format!("bounded search: {}", v.justification.tag()));
                        if v.image != img {
                            status = Status::Mismatch;
                        }
                    }
                    Err(Error::Aborted { covered, total }) => {
                        verdict["search"] = json!({ "status": "aborted", "covered": s(covered), "total": s(total) });
                        status = Status::Aborted;
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(Response { verdict, citations, status })
        }
        Request::ClassField { spec, support, indefinite } => {
            let spec = LocalImageSpec::from_json(&spec.to_string())?;
            let support = support
                .iter()
                .map(|p| p.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad prime {p:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let res = spinor_class_field(&spec, &support, *indefinite)?;
            Ok(Response {
                verdict: json!({
                    "sigma": res.describe_field(),
                    "sigma_generators": res.generators.iter().map(s).collect::<Vec<_>>(),
                    "discriminants": res.discriminants.iter().map(s).collect::<Vec<_>>(),
                    "spinor_genera": s(res.spinor_genera),
                    "class_number": res.class_number.map(s),
                }),
                citations: vec!["spinor class field from local images".into()],
                status: Status::Ok,
            })
        }
        Request::Reproduce { tier, tables } => Ok(reproduce::run(*tier, tables, limits)),
    }
}
