//! Traversals of `[0, 2^u)^4`.
//!
//! Both strategies compute the same thing: the lexicographically smallest
//! passing candidate. Workers share the best key found so far and skip any
//! region whose smallest key cannot beat it, so the answer does not depend on
//! scheduling.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use crate::error::{Error, Result};

use super::kernel::{candidate, Kernel, Verdict};
use super::{
    bound_justification, kstar_check, KStarInstance, SearchConfig, SearchOutcome, SearchStatus,
    Strategy,
};

/// Evaluations between two looks at the clock.
const CLOCK_STRIDE: u64 = 1 << 12;

struct Shared<'a> {
    inst: &'a KStarInstance,
    kernel: Kernel,
    u: u32,
    best: AtomicU64,
    found: AtomicBool,
    evaluated: AtomicU64,
    covered: Arc<AtomicU64>,
    stop: AtomicBool,
    cancel: Option<Arc<AtomicBool>>,
    deadline: Option<Instant>,
    max_evaluations: Option<u64>,
}

impl Shared<'_> {
    fn key(&self, r: [u64; 4]) -> u64 {
        let u = self.u;
        (r[0] << (3 * u)) | (r[1] << (2 * u)) | (r[2] << u) | r[3]
    }

    fn beaten(&self, key: u64) -> bool {
        self.found.load(Ordering::Acquire) && key >= self.best.load(Ordering::Acquire)
    }

    fn record(&self, key: u64) {
        self.best.fetch_min(key, Ordering::AcqRel);
        self.found.store(true, Ordering::Release);
    }

    fn cover(&self, n: u64) {
        let _ = self
            .covered
            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |c| Some(c.saturating_add(n)));
    }

    /// Candidates in a residue class mod `2^k`.
    fn class_size(&self, k: u32) -> u64 {
        let e = 4 * (self.u - k);
        if e >= 64 {
            u64::MAX
        } else {
            1u64 << e
        }
    }

    /// Count `n` evaluations; true when the scan must stop.
    fn tick(&self, n: u64) -> bool {
        let before = self.evaluated.fetch_add(n, Ordering::Relaxed);
        if self.stop.load(Ordering::Relaxed) {
            return true;
        }
        let after = before + n;
        let mut abort = self.max_evaluations.is_some_and(|m| after > m);
        if let Some(c) = &self.cancel {
            abort |= c.load(Ordering::Relaxed);
        }
        if before / CLOCK_STRIDE != after / CLOCK_STRIDE {
            abort |= self.deadline.is_some_and(|d| Instant::now() >= d);
        }
        if abort {
            self.stop.store(true, Ordering::Relaxed);
        }
        abort
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }
}

pub(crate) fn run(inst: &KStarInstance, u: u32, config: &SearchConfig) -> Result<SearchOutcome> {
    let start = Instant::now();
    let kernel = Kernel::new(inst).ok_or(Error::NotIntegral)?;
    let covered = config.progress.clone().unwrap_or_default();
    covered.store(0, Ordering::Relaxed);
    let shared = Shared {
        inst,
        kernel,
        u,
        best: AtomicU64::new(u64::MAX),
        found: AtomicBool::new(false),
        evaluated: AtomicU64::new(0),
        covered,
        stop: AtomicBool::new(false),
        cancel: config.cancel.clone(),
        deadline: config.time_limit.map(|d| start + d),
        max_evaluations: config.max_evaluations,
    };
    let workers = match config.parallelism {
        0 => thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    };
    match config.strategy {
        Strategy::Pruned => pruned(&shared, workers),
        Strategy::Flat => flat(&shared, workers),
    }

    let total = 1u128 << (4 * u);
    let aborted = shared.stopped();
    let found = shared.found.load(Ordering::Acquire) && !aborted;
    let key = shared.best.load(Ordering::Acquire);
    let mask = (1u64 << u) - 1;
    let coords = found.then(|| {
        [
            (key >> (3 * u)) & mask,
            (key >> (2 * u)) & mask,
            (key >> u) & mask,
            key & mask,
        ]
    });
    let covered = if aborted {
        shared.covered.load(Ordering::Relaxed) as u128
    } else {
        total
    };
    Ok(SearchOutcome {
        status: if aborted {
            SearchStatus::Aborted
        } else if found {
            SearchStatus::Found
        } else {
            SearchStatus::Exhausted
        },
        witness: coords.map(|r| candidate(inst, r)),
        witness_coords: coords.map(|r| r.map(|x| x as u32)),
        bound_exponent: u,
        candidates_scanned: match (aborted, found) {
            (true, _) => covered,
            (false, true) => key as u128 + 1,
            (false, false) => total,
        },
        evaluated: shared.evaluated.load(Ordering::Relaxed),
        covered,
        strategy: config.strategy,
        justification: bound_justification(inst, u),
        elapsed: start.elapsed(),
    })
}

fn flat(s: &Shared, workers: usize) {
    let side = 1u64 << s.u;
    let next = AtomicU64::new(0);
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let a = next.fetch_add(1, Ordering::Relaxed);
                if a >= side || s.stopped() {
                    return;
                }
                if s.beaten(s.key([a, 0, 0, 0])) {
                    s.cover(side.pow(3));
                    continue;
                }
                flat_slab(s, a);
            });
        }
    });
}

fn flat_slab(s: &Shared, a: u64) {
    let side = 1u64 << s.u;
    for b in 0..side {
        for c in 0..side {
            if s.tick(side) {
                return;
            }
            for d in 0..side {
                let r = [a, b, c, d];
                if s.kernel.passes(s.inst, r) {
                    s.record(s.key(r));
                    // the rest of the slab is lexicographically larger
                    s.cover(side.pow(3) - ((b * side + c) * side + d));
                    return;
                }
            }
            s.cover(side);
        }
    }
}

/// A residue class `r mod 2^k`, represented by its coordinatewise smallest
/// member in the box.
#[derive(Clone, Copy, Debug)]
struct Node {
    r: [u64; 4],
    k: u32,
}

impl Node {
    fn children(self) -> impl Iterator<Item = Node> {
        // ascending key order: the bit added to `a` is the most significant
        (0..16u64).map(move |bits| Node {
            r: [
                self.r[0] | ((bits >> 3) & 1) << self.k,
                self.r[1] | ((bits >> 2) & 1) << self.k,
                self.r[2] | ((bits >> 1) & 1) << self.k,
                self.r[3] | (bits & 1) << self.k,
            ],
            k: self.k + 1,
        })
    }
}

enum Step {
    Done,
    Expand,
}

fn visit(s: &Shared, node: Node) -> Step {
    if s.beaten(s.key(node.r)) {
        s.cover(s.class_size(node.k));
        return Step::Done;
    }
    if s.tick(1) {
        return Step::Done;
    }
    if node.k == s.u {
        if s.kernel.passes(s.inst, node.r) {
            s.record(s.key(node.r));
        }
        s.cover(1);
        return Step::Done;
    }
    match s.kernel.classify(node.r, node.k) {
        Verdict::Fail => {
            s.cover(s.class_size(node.k));
            Step::Done
        }
        Verdict::Pass => {
            s.record(s.key(node.r));
            s.cover(s.class_size(node.k));
            Step::Done
        }
        Verdict::Undecided => Step::Expand,
    }
}

fn descend(s: &Shared, node: Node) {
    if let Step::Expand = visit(s, node) {
        for child in node.children() {
            if s.stopped() {
                return;
            }
            descend(s, child);
        }
    }
}

fn pruned(s: &Shared, workers: usize) {
    // Split breadth-first until there is enough work to share.
    let target = 32 * workers;
    let mut frontier = vec![Node { r: [0; 4], k: 0 }];
    while !frontier.is_empty() && frontier.len() < target && frontier.iter().all(|n| n.k < s.u) {
        let mut next = Vec::with_capacity(frontier.len() * 16);
        for node in frontier {
            if let Step::Expand = visit(s, node) {
                next.extend(node.children());
            }
        }
        if s.stopped() {
            return;
        }
        frontier = next;
    }
    frontier.sort_by_key(|n| s.key(n.r));
    let next = AtomicUsize::new(0);
    thread::scope(|scope| {
        for _ in 0..workers.min(frontier.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= frontier.len() || s.stopped() {
                    return;
                }
                descend(s, frontier[i]);
            });
        }
    });
}

/// Reference search: every candidate in lexicographic order through the
/// exact arithmetic of [`kstar_check`]. Only meant for small `u`.
pub fn naive_search(inst: &KStarInstance, u: u32) -> Result<Option<[u32; 4]>> {
    let side = 1u64 << u;
    for a in 0..side {
        for b in 0..side {
            for c in 0..side {
                for d in 0..side {
                    let r = candidate(inst, [a, b, c, d]);
                    if kstar_check(inst, &r)?.passes() {
                        return Ok(Some([a, b, c, d].map(|x| x as u32)));
                    }
                }
            }
        }
    }
    Ok(None)
}
