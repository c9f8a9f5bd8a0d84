//! Zone-graph verification: breadth-first exploration with subsumption,
//! verdicts for the five query forms, traces with concrete rational
//! delays, and a seeded concrete-state simulator.
//!
//! Semantics notes, fixed here once:
//!
//! - A state formula holds on a symbolic state if some valuation of its
//!   zone satisfies it. Universal queries go through negation, so their
//!   verdicts are exact; for leads-to the left side is interpreted the
//!   same existential way per state.
//! - Deadlock is a whole-state property: a stored (delay-closed) state is
//!   deadlocked when it has no successors at all. Candidate states are
//!   tested before subsumption, so a deadlocked state is reported even
//!   when a larger stored zone covers it.
//! - `E[]` and `A<>` are decided on the action-transition graph: a witness
//!   for `E[] p` is a cycle (zeno ones included) or a dead-end state inside
//!   the p-satisfying subgraph. An idle run that only lets time pass in a
//!   location with enabled actions is not a separate maximal run here.
//! - Counterexamples to `A[] p` are minimized over accumulated delay: the
//!   reported `min_time` is the infimum over every violating state found,
//!   computed by replaying paths with an extra never-reset reference clock
//!   and no extrapolation.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use num_rational::Ratio;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dbm::Dbm;
use crate::network::{Network, NetworkError, SymbolicState, TransitionLabel};
use crate::query::{formula_holds, render_query, to_dnf, Conjunct, Literal, Query};
use crate::ta::{Bound, ChannelKind, ClockConstraint, LocId, SyncLabel};

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Maximum number of symbolic states recorded before giving up.
    pub budget: usize,
    /// Worker threads for successor computation. Results are integrated
    /// in deterministic order, so the outcome is identical for any value.
    pub jobs: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            budget: DEFAULT_BUDGET,
            jobs: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// States whose successors were computed.
    pub explored: usize,
    /// States kept in the subsumption store.
    pub stored: usize,
    /// High-water mark of the waiting queue.
    pub peak_waiting: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("state budget of {0} exceeded before a verdict was reached")]
    Budget(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("the deadlock atom is only supported under E<> and A[]")]
    DeadlockPlacement,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceStep {
    pub label: String,
    pub delay: String,
    pub locations: Vec<String>,
    pub zone: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub query: String,
    pub satisfied: bool,
    pub stats: SearchStats,
    /// Infimum of accumulated delay over all counterexamples found, for
    /// violated `A[]` queries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_time: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
}

fn fraction(r: Ratio<i64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

// ---------------------------------------------------------------------
// Rational bounds, for concretizing traces. Zones carry integer bounds;
// picked points do not, so the pinning steps run on a small rational copy.

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum RB {
    Inf,
    /// `x_i - x_j < v` when strict, `<= v` otherwise.
    Fin { v: Ratio<i64>, strict: bool },
}

impl RB {
    fn from_bound(b: Bound) -> RB {
        match b {
            Bound::Unbounded => RB::Inf,
            Bound::Weak(v) => RB::Fin {
                v: Ratio::from_integer(v),
                strict: false,
            },
            Bound::Strict(v) => RB::Fin {
                v: Ratio::from_integer(v),
                strict: true,
            },
        }
    }

    fn add(self, o: RB) -> RB {
        match (self, o) {
            (RB::Fin { v: a, strict: s }, RB::Fin { v: b, strict: t }) => RB::Fin {
                v: a + b,
                strict: s || t,
            },
            _ => RB::Inf,
        }
    }

    /// True when this bound implies `o`.
    fn implies(self, o: RB) -> bool {
        match (self, o) {
            (_, RB::Inf) => true,
            (RB::Inf, _) => false,
            (RB::Fin { v: a, strict: s }, RB::Fin { v: b, strict: t }) => {
                a < b || (a == b && (s || !t))
            }
        }
    }

    fn min(self, o: RB) -> RB {
        if self.implies(o) {
            self
        } else {
            o
        }
    }
}

/// Given a lower bound `lo` (value, strict) and an upper bound, a value
/// satisfying both: the lower endpoint when attained, otherwise a point
/// strictly inside the window.
fn pick_value(lo: (Ratio<i64>, bool), hi: RB) -> Ratio<i64> {
    if !lo.1 {
        return lo.0;
    }
    let half = Ratio::new(1, 2);
    match hi {
        RB::Inf => lo.0 + half,
        RB::Fin { v, .. } => (lo.0 + half).min((lo.0 + v) / Ratio::from_integer(2)),
    }
}

/// The upper endpoint of the window when attained, otherwise a point
/// strictly inside it.
fn pick_value_max(lo: (Ratio<i64>, bool), hi: RB) -> Ratio<i64> {
    match hi {
        RB::Fin { v, strict: false } => v,
        RB::Fin { v, strict: true } => (lo.0 + v) / Ratio::from_integer(2),
        RB::Inf => lo.0 + Ratio::from_integer(1),
    }
}

struct RatDbm {
    dim: usize,
    e: Vec<RB>,
}

impl RatDbm {
    fn from_dbm(z: &Dbm) -> RatDbm {
        let dim = z.dim();
        let mut e = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                e.push(RB::from_bound(z.bound(i, j)));
            }
        }
        RatDbm { dim, e }
    }

    fn at(&self, i: usize, j: usize) -> RB {
        self.e[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, b: RB) {
        self.e[i * self.dim + j] = b;
    }

    fn close(&mut self) -> bool {
        for k in 0..self.dim {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let via = self.at(i, k).add(self.at(k, j));
                    if !self.at(i, j).implies(via) {
                        self.set(i, j, via);
                    }
                }
            }
        }
        let zero = RB::Fin {
            v: Ratio::zero(),
            strict: false,
        };
        for i in 0..self.dim {
            // A diagonal tighter than <= 0 means a negative cycle.
            if let RB::Fin { v, strict } = self.at(i, i) {
                if v < Ratio::zero() || (v == Ratio::zero() && strict) {
                    return false;
                }
            }
            self.set(i, i, zero);
        }
        true
    }

    fn tighten(&mut self, i: usize, j: usize, b: RB) -> bool {
        if self.at(i, j).implies(b) {
            return true;
        }
        self.set(i, j, b);
        self.close()
    }

    fn constrain(&mut self, c: &ClockConstraint) -> bool {
        self.tighten(c.left, c.right, RB::from_bound(c.bound))
    }

    fn pin(&mut self, i: usize, v: Ratio<i64>) -> bool {
        self.tighten(i, 0, RB::Fin { v, strict: false })
            && self.tighten(
                0,
                i,
                RB::Fin {
                    v: -v,
                    strict: false,
                },
            )
    }

    /// Lower bound of coordinate `i` as (value, strict).
    fn lower(&self, i: usize) -> (Ratio<i64>, bool) {
        match self.at(0, i) {
            RB::Fin { v, strict } => (-v, strict),
            RB::Inf => unreachable!("clock lower bounds are always finite"),
        }
    }

    /// Fixes every coordinate to a member value, the ones in `first`
    /// before the rest, each greedily minimal.
    fn pick_point(&mut self, first: &[usize]) -> Option<Vec<Ratio<i64>>> {
        let mut order: Vec<usize> = first.to_vec();
        for i in 1..self.dim {
            if !order.contains(&i) {
                order.push(i);
            }
        }
        let mut out = vec![Ratio::zero(); self.dim];
        for i in order {
            let v = pick_value(self.lower(i), self.at(i, 0));
            if !self.pin(i, v) {
                return None;
            }
            out[i] = v;
        }
        Some(out)
    }
}

// ---------------------------------------------------------------------
// Reachability with subsumption.

struct Stored {
    state: SymbolicState,
    parent: Option<(usize, TransitionLabel)>,
}

struct Reach {
    /// Every recorded state: the subsumption store plus target-matching
    /// states that were covered by a stored zone (kept for their paths).
    states: Vec<Stored>,
    /// Indexes into `states` of the kept (non-subsumed) states.
    store: Vec<usize>,
    /// (state index, index of the matched conjunct), in discovery order.
    matches: Vec<(usize, usize)>,
    stats: SearchStats,
    /// False when the search stopped early: first-match shortcut or
    /// budget exhaustion.
    complete: bool,
    budget_hit: bool,
}

fn match_conjunct(net: &Network, s: &SymbolicState, dnf: &[Conjunct]) -> Option<usize> {
    dnf.iter()
        .position(|c| crate::query::conjunct_holds(net, s, c))
}

fn compute_successors(
    net: &Network,
    states: &[Stored],
    batch: &[usize],
    jobs: usize,
) -> Vec<Vec<(TransitionLabel, SymbolicState)>> {
    if jobs <= 1 || batch.len() <= 1 {
        return batch
            .iter()
            .map(|&id| net.successors(&states[id].state))
            .collect();
    }
    let mut out: Vec<Vec<(TransitionLabel, SymbolicState)>> = Vec::new();
    out.resize_with(batch.len(), Vec::new);
    let chunk = batch.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        for (ids, slots) in batch.chunks(chunk).zip(out.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (slot, &id) in slots.iter_mut().zip(ids.iter()) {
                    *slot = net.successors(&states[id].state);
                }
            });
        }
    });
    out
}

/// Breadth-first reachability. Subsumption is checked on enqueue only and
/// nothing is ever purged, so successor batches computed in parallel and
/// integrated sequentially give byte-identical results to a serial run.
/// When `target` is given, every candidate state (the initial one and each
/// generated successor, before the subsumption check) is tested against
/// it; with `first_match` the search stops at the first hit.
fn explore(
    net: &Network,
    opts: &Options,
    target: Option<&[Conjunct]>,
    first_match: bool,
) -> Result<Reach, VerifyError> {
    let init = net.initial_state()?;
    let mut r = Reach {
        states: Vec::new(),
        store: Vec::new(),
        matches: Vec::new(),
        stats: SearchStats {
            explored: 0,
            stored: 1,
            peak_waiting: 1,
        },
        complete: true,
        budget_hit: false,
    };
    let mut by_discrete: HashMap<(Vec<LocId>, Vec<i64>), Vec<usize>> = HashMap::new();
    let mut waiting: VecDeque<usize> = VecDeque::new();
    let mut waiting_count: usize = 1;

    by_discrete.insert((init.locs.clone(), init.ints.clone()), vec![0]);
    if let Some(dnf) = target {
        if let Some(ci) = match_conjunct(net, &init, dnf) {
            r.matches.push((0, ci));
            if first_match {
                r.states.push(Stored {
                    state: init,
                    parent: None,
                });
                r.store.push(0);
                r.complete = false;
                return Ok(r);
            }
        }
    }
    r.states.push(Stored {
        state: init,
        parent: None,
    });
    r.store.push(0);
    waiting.push_back(0);

    let batch_target = if opts.jobs <= 1 { 1 } else { opts.jobs * 4 };
    'outer: while !waiting.is_empty() {
        let take = waiting.len().min(batch_target);
        let batch: Vec<usize> = (0..take).map(|_| waiting.pop_front().unwrap()).collect();
        let succ_lists = compute_successors(net, &r.states, &batch, opts.jobs);
        for (bi, &sid) in batch.iter().enumerate() {
            r.stats.explored += 1;
            waiting_count -= 1;
            for (label, next) in &succ_lists[bi] {
                let m = target.and_then(|dnf| match_conjunct(net, next, dnf));
                let key = (next.locs.clone(), next.ints.clone());
                let subsumed = by_discrete.get(&key).is_some_and(|ids| {
                    ids.iter()
                        .any(|&k| next.zone.subset(&r.states[k].state.zone))
                });
                if m.is_none() && subsumed {
                    continue;
                }
                if r.states.len() >= opts.budget {
                    r.complete = false;
                    r.budget_hit = true;
                    break 'outer;
                }
                let id = r.states.len();
                r.states.push(Stored {
                    state: next.clone(),
                    parent: Some((sid, label.clone())),
                });
                if let Some(ci) = m {
                    r.matches.push((id, ci));
                    if first_match {
                        r.complete = false;
                        break 'outer;
                    }
                }
                if !subsumed {
                    by_discrete.entry(key).or_default().push(id);
                    r.store.push(id);
                    r.stats.stored += 1;
                    waiting.push_back(id);
                    waiting_count += 1;
                    r.stats.peak_waiting = r.stats.peak_waiting.max(waiting_count);
                }
            }
        }
    }
    Ok(r)
}

/// Location vectors reachable in the zone graph. Subsumption loses no
/// vectors: a covered state can only reach vectors its coverer reaches.
pub fn reachable_locvecs(
    net: &Network,
    opts: &Options,
) -> Result<BTreeSet<Vec<LocId>>, VerifyError> {
    let r = explore(net, opts, None, false)?;
    if !r.complete {
        return Err(VerifyError::Budget(opts.budget));
    }
    Ok(r.store
        .iter()
        .map(|&id| r.states[id].state.locs.clone())
        .collect())
}

// ---------------------------------------------------------------------
// Trace replay and concretization.

fn parts_of(label: &TransitionLabel) -> Vec<(usize, usize)> {
    match label {
        TransitionLabel::Internal { instance, edge } => vec![(*instance, *edge)],
        TransitionLabel::Sync {
            sender, receivers, ..
        } => {
            let mut v = vec![*sender];
            v.extend(receivers.iter().copied());
            v
        }
        TransitionLabel::Delay => unreachable!("paths carry action labels only"),
    }
}

struct ReplayStep {
    /// Zone on arrival, after the action (dimension includes the extra
    /// accumulated-time clock, never extrapolated).
    arrival: Dbm,
    /// Its delay closure within the invariants (equal to `arrival` when
    /// the location vector is urgent).
    closed: Dbm,
}

/// Replays a label path symbolically with one extra clock measuring total
/// elapsed time, without extrapolation. None when the path is infeasible
/// in exact zones, which classic extrapolation rules out for models
/// without difference constraints.
fn replay(net: &Network, labels: &[TransitionLabel]) -> Option<Vec<ReplayStep>> {
    let n = net.system.n_clocks();
    let close = |locs: &[LocId], z: &Dbm| {
        let mut d = z.clone();
        if !net.vector_is_urgent(locs) {
            d.up();
            net.conjoin_invariants(locs, &mut d);
        }
        d
    };
    let mut locs: Vec<LocId> = net.system.templates.iter().map(|t| t.initial).collect();
    let mut z = Dbm::init_zero(n + 1);
    net.conjoin_invariants(&locs, &mut z);
    if z.is_empty() {
        return None;
    }
    let mut steps = vec![ReplayStep {
        closed: close(&locs, &z),
        arrival: z,
    }];
    for label in labels {
        let parts = parts_of(label);
        let mut z = steps.last().unwrap().closed.clone();
        for &(i, e) in &parts {
            for cc in &net.system.templates[i].edges[e].guard_clocks {
                z.and(*cc);
            }
        }
        if z.is_empty() {
            return None;
        }
        for &(i, e) in &parts {
            let edge = &net.system.templates[i].edges[e];
            for &(x, v) in &edge.resets {
                z.assign(x, v);
            }
            locs[i] = edge.target;
        }
        net.conjoin_invariants(&locs, &mut z);
        if z.is_empty() {
            return None;
        }
        steps.push(ReplayStep {
            closed: close(&locs, &z),
            arrival: z,
        });
    }
    Some(steps)
}

/// Delay window for shifting the point `q` backward into `a`: feasible
/// delta with `q - delta` inside `a`'s coordinate bounds (difference
/// bounds are invariant under the shift).
fn delta_window(a: &Dbm, q: &[Ratio<i64>]) -> ((Ratio<i64>, bool), RB) {
    let mut w = Window::full();
    for (c, &qc) in q.iter().enumerate().skip(1) {
        match a.bound(c, 0) {
            Bound::Weak(h) => w.tighten_lo(qc - Ratio::from_integer(h), false),
            Bound::Strict(h) => w.tighten_lo(qc - Ratio::from_integer(h), true),
            Bound::Unbounded => {}
        }
        match a.bound(0, c) {
            Bound::Weak(l) => w.tighten_hi(qc + Ratio::from_integer(l), false),
            Bound::Strict(l) => w.tighten_hi(qc + Ratio::from_integer(l), true),
            Bound::Unbounded => {}
        }
    }
    (w.lo, w.hi)
}

struct Concretized {
    /// Delay taken before each action of the path.
    delays: Vec<Ratio<i64>>,
    /// Delay after the last action, to reach the witness valuation.
    tail: Ratio<i64>,
}

/// Chooses concrete delays realizing the path, entering the final zone
/// (constrained by `lits`) with minimal total elapsed time.
fn concretize(
    net: &Network,
    steps: &[ReplayStep],
    labels: &[TransitionLabel],
    lits: &[ClockConstraint],
) -> Option<Concretized> {
    let dim = steps[0].arrival.dim();
    let tau = dim - 1;
    let mut fz = RatDbm::from_dbm(&steps.last().unwrap().closed);
    for cc in lits {
        if !fz.constrain(cc) {
            return None;
        }
    }
    let w = fz.pick_point(&[tau])?;
    // Split off the trailing delay inside the final state. Taking the
    // largest feasible tail makes every action fire as early as the
    // witness allows.
    let (lo, hi) = delta_window(&steps.last().unwrap().arrival, &w);
    let tail = pick_value_max(lo, hi);
    let mut p: Vec<Ratio<i64>> = w.iter().map(|&v| v - tail).collect();
    p[0] = Ratio::zero();
    let mut delays = vec![Ratio::zero(); labels.len()];
    for i in (0..labels.len()).rev() {
        // p lies in steps[i+1].arrival. Undo the action: non-reset clocks
        // keep their values, reset ones are solved within the source zone
        // under the guards.
        let parts = parts_of(&labels[i]);
        let mut reset: HashSet<usize> = HashSet::new();
        let mut z = RatDbm::from_dbm(&steps[i].closed);
        for &(ii, e) in &parts {
            let edge = &net.system.templates[ii].edges[e];
            for cc in &edge.guard_clocks {
                if !z.constrain(cc) {
                    return None;
                }
            }
            for &(x, _) in &edge.resets {
                reset.insert(x);
            }
        }
        for (c, &pc) in p.iter().enumerate().skip(1) {
            if !reset.contains(&c) && !z.pin(c, pc) {
                return None;
            }
        }
        let q = z.pick_point(&[])?;
        let (lo, hi) = delta_window(&steps[i].arrival, &q);
        let d = pick_value(lo, hi);
        delays[i] = d;
        p = q.iter().map(|&v| v - d).collect();
        p[0] = Ratio::zero();
        debug_assert!(steps[i].arrival.contains(&p[1..]));
    }
    Some(Concretized { delays, tail })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum TraceEnd {
    /// The final state satisfies the witnessed formula.
    Witness,
    /// The final state has no successors.
    Deadlock,
    /// The final state closed a cycle: it repeats an earlier trace entry.
    Cycle,
}

impl TraceEnd {
    fn label(self) -> &'static str {
        match self {
            TraceEnd::Witness => "witness",
            TraceEnd::Deadlock => "deadlock",
            TraceEnd::Cycle => "cycle",
        }
    }
}

fn conjunct_clock_lits(c: &Conjunct) -> Vec<ClockConstraint> {
    c.iter()
        .filter_map(|l| match l {
            Literal::Clock(cc) => Some(*cc),
            _ => None,
        })
        .collect()
}

/// Infimum of total elapsed time along a path into its final zone
/// constrained by `lits`, and whether the infimum is attained.
fn path_infimum(
    net: &Network,
    labels: &[TransitionLabel],
    lits: &[ClockConstraint],
) -> Option<(Ratio<i64>, bool)> {
    let steps = replay(net, labels)?;
    let dim = steps[0].arrival.dim();
    let mut fz = RatDbm::from_dbm(&steps.last().unwrap().closed);
    for cc in lits {
        if !fz.constrain(cc) {
            return None;
        }
    }
    let (v, strict) = fz.lower(dim - 1);
    Some((v, !strict))
}

/// Renders a path as trace steps with concrete delays. The first entry is
/// the initial state, one entry per transition follows, and a marker entry
/// names how the trace ends.
fn assemble_trace(
    net: &Network,
    labels: &[TransitionLabel],
    path: &[SymbolicState],
    lits: &[ClockConstraint],
    end: TraceEnd,
) -> Option<Vec<TraceStep>> {
    let steps = replay(net, labels)?;
    let conc = concretize(net, &steps, labels, lits)?;
    let mut out = Vec::with_capacity(labels.len() + 2);
    out.push(TraceStep {
        label: "initial".to_string(),
        delay: "0".to_string(),
        locations: net.render_locations(&path[0].locs),
        zone: net.render_zone(&path[0].zone),
    });
    for (i, label) in labels.iter().enumerate() {
        out.push(TraceStep {
            label: net.render_label(label),
            delay: fraction(conc.delays[i]),
            locations: net.render_locations(&path[i + 1].locs),
            zone: net.render_zone(&path[i + 1].zone),
        });
    }
    let last = path.last().unwrap();
    out.push(TraceStep {
        label: end.label().to_string(),
        delay: fraction(conc.tail),
        locations: net.render_locations(&last.locs),
        zone: net.render_zone(&last.zone),
    });
    Some(out)
}

fn path_to(r: &Reach, id: usize) -> (Vec<TransitionLabel>, Vec<SymbolicState>) {
    let mut labels = Vec::new();
    let mut states = Vec::new();
    let mut cur = id;
    loop {
        states.push(r.states[cur].state.clone());
        match &r.states[cur].parent {
            Some((p, l)) => {
                labels.push(l.clone());
                cur = *p;
            }
            None => break,
        }
    }
    labels.reverse();
    states.reverse();
    (labels, states)
}

// ---------------------------------------------------------------------
// Maximal-run search for E[] / A<> / leads-to, on exact states without
// subsumption. A witness is a cycle within the subgraph or a dead-end
// state of it.

enum SubgraphCond<'a> {
    Holds(&'a [Conjunct]),
    NotHolds(&'a [Conjunct]),
}

impl SubgraphCond<'_> {
    fn admits(&self, net: &Network, s: &SymbolicState) -> bool {
        match self {
            SubgraphCond::Holds(dnf) => formula_holds(net, s, dnf),
            SubgraphCond::NotHolds(dnf) => !formula_holds(net, s, dnf),
        }
    }
}

struct LassoSearch<'a> {
    net: &'a Network,
    cond: SubgraphCond<'a>,
    /// States from which no witness exists; shared across starts.
    safe: HashSet<SymbolicState>,
    visited: usize,
    budget: usize,
    stats: SearchStats,
}

struct LassoWitness {
    labels: Vec<TransitionLabel>,
    states: Vec<SymbolicState>,
    end: TraceEnd,
}

struct Frame {
    state: SymbolicState,
    in_label: Option<TransitionLabel>,
    succs: Vec<(TransitionLabel, SymbolicState)>,
    next: usize,
}

impl<'a> LassoSearch<'a> {
    fn new(net: &'a Network, cond: SubgraphCond<'a>, budget: usize) -> Self {
        LassoSearch {
            net,
            cond,
            safe: HashSet::new(),
            visited: 0,
            budget,
            stats: SearchStats::default(),
        }
    }

    fn charge(&mut self) -> Result<(), VerifyError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(VerifyError::Budget(self.budget));
        }
        Ok(())
    }

    /// `start` must already satisfy the subgraph condition.
    fn run(&mut self, start: &SymbolicState) -> Result<Option<LassoWitness>, VerifyError> {
        if self.safe.contains(start) {
            return Ok(None);
        }
        self.charge()?;
        let succs = self.net.successors(start);
        self.stats.explored += 1;
        if succs.is_empty() {
            return Ok(Some(LassoWitness {
                labels: vec![],
                states: vec![start.clone()],
                end: TraceEnd::Deadlock,
            }));
        }
        let mut stack: Vec<Frame> = vec![Frame {
            state: start.clone(),
            in_label: None,
            succs,
            next: 0,
        }];
        let mut on_stack: HashSet<SymbolicState> = HashSet::new();
        on_stack.insert(start.clone());
        let witness = |stack: &[Frame], label: TransitionLabel, closing: &SymbolicState, end| {
            let mut labels: Vec<TransitionLabel> = stack
                .iter()
                .skip(1)
                .map(|f| f.in_label.clone().unwrap())
                .collect();
            labels.push(label);
            let mut states: Vec<SymbolicState> = stack.iter().map(|f| f.state.clone()).collect();
            states.push(closing.clone());
            LassoWitness {
                labels,
                states,
                end,
            }
        };
        while let Some(frame) = stack.last_mut() {
            if frame.next >= frame.succs.len() {
                let frame = stack.pop().unwrap();
                on_stack.remove(&frame.state);
                self.safe.insert(frame.state);
                continue;
            }
            let (label, t) = frame.succs[frame.next].clone();
            frame.next += 1;
            if !self.cond.admits(self.net, &t) {
                continue;
            }
            if on_stack.contains(&t) {
                return Ok(Some(witness(&stack, label, &t, TraceEnd::Cycle)));
            }
            if self.safe.contains(&t) {
                continue;
            }
            self.charge()?;
            let succs = self.net.successors(&t);
            self.stats.explored += 1;
            if succs.is_empty() {
                return Ok(Some(witness(&stack, label, &t, TraceEnd::Deadlock)));
            }
            on_stack.insert(t.clone());
            stack.push(Frame {
                state: t,
                in_label: Some(label),
                succs,
                next: 0,
            });
            self.stats.peak_waiting = self.stats.peak_waiting.max(stack.len());
        }
        Ok(None)
    }

    fn into_stats(self) -> SearchStats {
        SearchStats {
            explored: self.stats.explored,
            stored: self.visited,
            peak_waiting: self.stats.peak_waiting,
        }
    }
}

// ---------------------------------------------------------------------
// Verdicts.

pub fn check(net: &Network, query: &Query, opts: &Options) -> Result<Verdict, VerifyError> {
    let query_text = render_query(net, query);
    match query {
        Query::ExistsEventually(_) | Query::AlwaysGlobally(_) => {}
        _ => {
            if query.formulas().iter().any(|f| f.contains_deadlock()) {
                return Err(VerifyError::DeadlockPlacement);
            }
        }
    }
    // Clock constants from the query must reach the extrapolation table,
    // or exploration could blur the distinctions the query asks about.
    let mut net = net.clone();
    for f in query.formulas() {
        for (x, c) in f.clock_consts() {
            net.raise_max_const(x, c);
        }
    }
    let net = &net;

    match query {
        Query::ExistsEventually(f) => {
            let dnf = to_dnf(f);
            let r = explore(net, opts, Some(&dnf), true)?;
            if let Some(&(id, ci)) = r.matches.first() {
                let (labels, path) = path_to(&r, id);
                let lits = conjunct_clock_lits(&dnf[ci]);
                let trace =
                    assemble_trace(net, &labels, &path, &lits, TraceEnd::Witness);
                Ok(Verdict {
                    query: query_text,
                    satisfied: true,
                    stats: r.stats,
                    min_time: None,
                    trace,
                })
            } else if r.budget_hit {
                Err(VerifyError::Budget(opts.budget))
            } else {
                Ok(Verdict {
                    query: query_text,
                    satisfied: false,
                    stats: r.stats,
                    min_time: None,
                    trace: None,
                })
            }
        }
        Query::AlwaysGlobally(f) => {
            let neg = f.clone().not();
            let dnf = to_dnf(&neg);
            let r = explore(net, opts, Some(&dnf), false)?;
            if r.matches.is_empty() {
                if r.budget_hit {
                    return Err(VerifyError::Budget(opts.budget));
                }
                return Ok(Verdict {
                    query: query_text,
                    satisfied: true,
                    stats: r.stats,
                    min_time: None,
                    trace: None,
                });
            }
            // Pick the violation entered earliest in accumulated time;
            // ties go to attained infima, then discovery order.
            let mut best: Option<((Ratio<i64>, bool), usize, usize)> = None;
            for &(id, ci) in &r.matches {
                let (labels, _) = path_to(&r, id);
                let lits = conjunct_clock_lits(&dnf[ci]);
                if let Some((v, attained)) = path_infimum(net, &labels, &lits) {
                    let better = match &best {
                        None => true,
                        Some(((bv, batt), _, _)) => v < *bv || (v == *bv && attained && !*batt),
                    };
                    if better {
                        best = Some(((v, attained), id, ci));
                    }
                }
            }
            let (min_time, trace) = match best {
                Some(((v, _), id, ci)) => {
                    let (labels, path) = path_to(&r, id);
                    let lits = conjunct_clock_lits(&dnf[ci]);
                    let end = if f.contains_deadlock() {
                        TraceEnd::Deadlock
                    } else {
                        TraceEnd::Witness
                    };
                    let trace = assemble_trace(net, &labels, &path, &lits, end);
                    (Some(fraction(v)), trace)
                }
                None => (None, None),
            };
            Ok(Verdict {
                query: query_text,
                satisfied: false,
                stats: r.stats,
                min_time,
                trace,
            })
        }
        Query::ExistsGlobally(f) => {
            let dnf = to_dnf(f);
            let init = net.initial_state()?;
            if !formula_holds(net, &init, &dnf) {
                return Ok(Verdict {
                    query: query_text,
                    satisfied: false,
                    stats: SearchStats {
                        explored: 0,
                        stored: 1,
                        peak_waiting: 1,
                    },
                    min_time: None,
                    trace: None,
                });
            }
            let mut search = LassoSearch::new(net, SubgraphCond::Holds(&dnf), opts.budget);
            let witness = search.run(&init)?;
            let stats = search.into_stats();
            match witness {
                Some(w) => {
                    let trace = assemble_trace(net, &w.labels, &w.states, &[], w.end);
                    Ok(Verdict {
                        query: query_text,
                        satisfied: true,
                        stats,
                        min_time: None,
                        trace,
                    })
                }
                None => Ok(Verdict {
                    query: query_text,
                    satisfied: false,
                    stats,
                    min_time: None,
                    trace: None,
                }),
            }
        }
        Query::AlwaysEventually(f) => {
            let dnf = to_dnf(f);
            let init = net.initial_state()?;
            if formula_holds(net, &init, &dnf) {
                return Ok(Verdict {
                    query: query_text,
                    satisfied: true,
                    stats: SearchStats {
                        explored: 0,
                        stored: 1,
                        peak_waiting: 1,
                    },
                    min_time: None,
                    trace: None,
                });
            }
            let mut search = LassoSearch::new(net, SubgraphCond::NotHolds(&dnf), opts.budget);
            let witness = search.run(&init)?;
            let stats = search.into_stats();
            match witness {
                Some(w) => {
                    let trace = assemble_trace(net, &w.labels, &w.states, &[], w.end);
                    Ok(Verdict {
                        query: query_text,
                        satisfied: false,
                        stats,
                        min_time: None,
                        trace,
                    })
                }
                None => Ok(Verdict {
                    query: query_text,
                    satisfied: true,
                    stats,
                    min_time: None,
                    trace: None,
                }),
            }
        }
        Query::LeadsTo(a, b) => {
            let dnf_a = to_dnf(a);
            let dnf_b = to_dnf(b);
            let r = explore(net, opts, None, false)?;
            if !r.complete {
                return Err(VerifyError::Budget(opts.budget));
            }
            let dfs_budget = opts.budget.saturating_sub(r.states.len()).max(1);
            let mut search = LassoSearch::new(net, SubgraphCond::NotHolds(&dnf_b), dfs_budget);
            for &id in &r.store {
                let s = &r.states[id].state;
                if !formula_holds(net, s, &dnf_a) || formula_holds(net, s, &dnf_b) {
                    continue;
                }
                if let Some(w) = search.run(s)? {
                    let (mut labels, mut path) = path_to(&r, id);
                    labels.extend(w.labels);
                    path.extend(w.states.into_iter().skip(1));
                    let trace = assemble_trace(net, &labels, &path, &[], w.end);
                    return Ok(Verdict {
                        query: query_text,
                        satisfied: false,
                        stats: r.stats,
                        min_time: None,
                        trace,
                    });
                }
            }
            Ok(Verdict {
                query: query_text,
                satisfied: true,
                stats: r.stats,
                min_time: None,
                trace: None,
            })
        }
    }
}

// ---------------------------------------------------------------------
// Concrete simulation.

#[derive(Clone, Debug, Serialize)]
pub struct SimStep {
    pub label: String,
    pub delay: String,
    pub locations: Vec<String>,
    pub clocks: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub seed: u64,
    pub initial: SimStep,
    /// One entry per fired transition; empty when no step was taken.
    pub steps: Vec<SimStep>,
    pub deadlocked: bool,
}

/// Feasible delay window before firing a fixed set of edges; half-open
/// data as (value, strict) endpoints.
#[derive(Clone, Copy, Debug)]
struct Window {
    lo: (Ratio<i64>, bool),
    hi: RB,
}

impl Window {
    fn full() -> Window {
        Window {
            lo: (Ratio::zero(), false),
            hi: RB::Inf,
        }
    }

    fn tighten_lo(&mut self, v: Ratio<i64>, strict: bool) {
        if v > self.lo.0 || (v == self.lo.0 && strict && !self.lo.1) {
            self.lo = (v, strict);
        }
    }

    fn tighten_hi(&mut self, v: Ratio<i64>, strict: bool) {
        self.hi = self.hi.min(RB::Fin { v, strict });
    }

    fn pin_zero(&mut self) {
        self.tighten_hi(Ratio::zero(), false);
    }

    fn nonempty(&self) -> bool {
        match self.hi {
            RB::Inf => true,
            RB::Fin { v, strict } => {
                self.lo.0 < v || (self.lo.0 == v && !self.lo.1 && !strict)
            }
        }
    }
}

struct SimState {
    locs: Vec<LocId>,
    ints: Vec<i64>,
    /// Clock values, entry 0 the constant-zero reference.
    vals: Vec<Ratio<i64>>,
}

fn concrete_holds(vals: &[Ratio<i64>], c: &ClockConstraint) -> bool {
    let diff = vals[c.left] - vals[c.right];
    match c.bound {
        Bound::Unbounded => true,
        Bound::Weak(v) => diff <= Ratio::from_integer(v),
        Bound::Strict(v) => diff < Ratio::from_integer(v),
    }
}

/// Adds `base + coeff * delta  (<|<=)  c` to the window; a coefficient of
/// zero is a plain check. Returns false when the constraint cannot hold.
fn add_linear(
    w: &mut Window,
    base: Ratio<i64>,
    coeff: i64,
    bound: Bound,
) -> bool {
    let (strict, c) = match bound {
        Bound::Unbounded => return true,
        Bound::Weak(v) => (false, Ratio::from_integer(v)),
        Bound::Strict(v) => (true, Ratio::from_integer(v)),
    };
    match coeff {
        0 => {
            if strict {
                base < c
            } else {
                base <= c
            }
        }
        1 => {
            w.tighten_hi(c - base, strict);
            true
        }
        -1 => {
            w.tighten_lo(base - c, strict);
            true
        }
        _ => unreachable!("delta coefficients are -1, 0, or 1"),
    }
}

/// Delay window for firing `parts` jointly from the current valuation:
/// the vector's invariants stay true up to the delay, the guards hold at
/// it, and the target invariants hold after the resets.
fn joint_window(net: &Network, s: &SimState, parts: &[(usize, usize)]) -> Option<Window> {
    let mut w = Window::full();
    if net.vector_is_urgent(&s.locs) {
        w.pin_zero();
    }
    // value and growth coefficient of a clock at the probed delay
    let plain = |x: usize| -> (Ratio<i64>, i64) {
        if x == 0 {
            (Ratio::zero(), 0)
        } else {
            (s.vals[x], 1)
        }
    };
    let constrain =
        |w: &mut Window, cc: &ClockConstraint, at: &dyn Fn(usize) -> (Ratio<i64>, i64)| -> bool {
            let (bl, cl) = at(cc.left);
            let (br, cr) = at(cc.right);
            add_linear(w, bl - br, cl - cr, cc.bound)
        };
    for (i, &l) in s.locs.iter().enumerate() {
        for cc in &net.system.templates[i].locations[l].invariant {
            if !constrain(&mut w, cc, &plain) {
                return None;
            }
        }
    }
    let mut resets: HashMap<usize, i64> = HashMap::new();
    for &(i, e) in parts {
        let edge = &net.system.templates[i].edges[e];
        for cc in &edge.guard_clocks {
            if !constrain(&mut w, cc, &plain) {
                return None;
            }
        }
        for &(x, v) in &edge.resets {
            resets.insert(x, v);
        }
    }
    let shifted = |x: usize| -> (Ratio<i64>, i64) {
        if x == 0 {
            (Ratio::zero(), 0)
        } else if let Some(&v) = resets.get(&x) {
            (Ratio::from_integer(v), 0)
        } else {
            (s.vals[x], 1)
        }
    };
    for &(i, e) in parts {
        let target = net.system.templates[i].edges[e].target;
        for cc in &net.system.templates[i].locations[target].invariant {
            if !constrain(&mut w, cc, &shifted) {
                return None;
            }
        }
    }
    if w.nonempty() {
        Some(w)
    } else {
        None
    }
}

fn sim_int_feasible(net: &Network, s: &SimState, parts: &[(usize, usize)]) -> Option<Vec<i64>> {
    for &(i, e) in parts {
        if !net.int_guards_hold(i, e, &s.ints) {
            return None;
        }
    }
    let mut ints = s.ints.clone();
    for &(i, e) in parts {
        net.apply_assigns(i, e, &mut ints)?;
    }
    Some(ints)
}

enum SimAction {
    Fixed(Vec<(usize, usize)>),
    /// Broadcast send; the mandatory receiver set is resolved once the
    /// delay is chosen.
    Broadcast { sender: (usize, usize) },
}

struct SimCandidate {
    action: SimAction,
    window: Window,
    label_hint: TransitionLabel,
}

fn sim_candidates(net: &Network, s: &SimState) -> Vec<SimCandidate> {
    let committed = net.vector_has_committed(&s.locs);
    let mut out = Vec::new();
    let n = net.system.templates.len();
    for i in 0..n {
        let t = &net.system.templates[i];
        for (e, edge) in t.edges.iter().enumerate() {
            if edge.source != s.locs[i] {
                continue;
            }
            match edge.sync {
                SyncLabel::Internal => {
                    let parts = vec![(i, e)];
                    if sim_int_feasible(net, s, &parts).is_none() {
                        continue;
                    }
                    if committed
                        && net.kind_of(i, s.locs[i]) != crate::ta::LocationKind::Committed
                    {
                        continue;
                    }
                    if let Some(w) = joint_window(net, s, &parts) {
                        out.push(SimCandidate {
                            action: SimAction::Fixed(parts),
                            window: w,
                            label_hint: TransitionLabel::Internal { instance: i, edge: e },
                        });
                    }
                }
                SyncLabel::Send(ch) => match net.system.channels[ch].kind {
                    ChannelKind::Binary => {
                        for &(j, f) in net.receiver_table(ch) {
                            if j == i || net.system.templates[j].edges[f].source != s.locs[j] {
                                continue;
                            }
                            let parts = vec![(i, e), (j, f)];
                            if sim_int_feasible(net, s, &parts).is_none() {
                                continue;
                            }
                            if committed
                                && !parts.iter().any(|&(k, _)| {
                                    net.kind_of(k, s.locs[k])
                                        == crate::ta::LocationKind::Committed
                                })
                            {
                                continue;
                            }
                            if let Some(w) = joint_window(net, s, &parts) {
                                out.push(SimCandidate {
                                    action: SimAction::Fixed(parts),
                                    window: w,
                                    label_hint: TransitionLabel::Sync {
                                        channel: ch,
                                        sender: (i, e),
                                        receivers: vec![(j, f)],
                                    },
                                });
                            }
                        }
                    }
                    ChannelKind::Broadcast => {
                        let parts = vec![(i, e)];
                        if sim_int_feasible(net, s, &parts).is_none() {
                            continue;
                        }
                        if let Some(w) = joint_window(net, s, &parts) {
                            out.push(SimCandidate {
                                action: SimAction::Broadcast { sender: (i, e) },
                                window: w,
                                label_hint: TransitionLabel::Sync {
                                    channel: ch,
                                    sender: (i, e),
                                    receivers: vec![],
                                },
                            });
                        }
                    }
                },
                SyncLabel::Receive(_) => {}
            }
        }
    }
    out
}

/// Uniform choice on the eighths grid inside the window, capped one past
/// the largest model constant when unbounded; midpoint when the grid
/// misses the window.
fn choose_delay(rng: &mut ChaCha8Rng, w: &Window, cap: i64) -> Ratio<i64> {
    let hi = match w.hi {
        RB::Fin { v, strict } => (v, strict),
        RB::Inf => {
            let c = Ratio::from_integer(cap.max(0) + 1);
            (if c > w.lo.0 { c } else { w.lo.0 + Ratio::from_integer(1) }, false)
        }
    };
    if w.lo.0 == hi.0 {
        return w.lo.0;
    }
    let eight = Ratio::from_integer(8);
    let mut m_min = (w.lo.0 * eight).ceil().to_integer();
    if w.lo.1 && Ratio::new(m_min, 8) == w.lo.0 {
        m_min += 1;
    }
    let mut m_max = (hi.0 * eight).floor().to_integer();
    if hi.1 && Ratio::new(m_max, 8) == hi.0 {
        m_max -= 1;
    }
    if m_min <= m_max {
        let k = rng.gen_range(m_min..=m_max);
        Ratio::new(k, 8)
    } else {
        (w.lo.0 + hi.0) / Ratio::from_integer(2)
    }
}

/// Runs the network concretely for up to `steps` transitions with a
/// seeded generator: uniform choice among feasible actions, then a delay
/// drawn from the action's feasible window.
pub fn simulate(net: &Network, seed: u64, steps: usize) -> Result<SimReport, VerifyError> {
    let mut s = SimState {
        locs: net.system.templates.iter().map(|t| t.initial).collect(),
        ints: net.system.vars.iter().map(|v| v.init).collect(),
        vals: vec![Ratio::zero(); net.system.n_clocks() + 1],
    };
    for (i, &l) in s.locs.iter().enumerate() {
        for cc in &net.system.templates[i].locations[l].invariant {
            if !concrete_holds(&s.vals, cc) {
                return Err(VerifyError::Network(NetworkError::EmptyInitialState));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = net.max_const_global();
    let render_clocks = |vals: &[Ratio<i64>]| -> Vec<String> {
        net.system
            .clock_names
            .iter()
            .enumerate()
            .map(|(k, name)| format!("{}={}", name, fraction(vals[k + 1])))
            .collect()
    };
    let mut report = SimReport {
        seed,
        initial: SimStep {
            label: "initial".to_string(),
            delay: "0".to_string(),
            locations: net.render_locations(&s.locs),
            clocks: render_clocks(&s.vals),
        },
        steps: Vec::new(),
        deadlocked: false,
    };
    for _ in 0..steps {
        let mut candidates = sim_candidates(net, &s);
        let fired = loop {
            if candidates.is_empty() {
                break None;
            }
            let pick = rng.gen_range(0..candidates.len());
            let cand = &candidates[pick];
            let delta = choose_delay(&mut rng, &cand.window, cap);
            let at: Vec<Ratio<i64>> = s
                .vals
                .iter()
                .enumerate()
                .map(|(k, &v)| if k == 0 { v } else { v + delta })
                .collect();
            let parts: Vec<(usize, usize)> = match &cand.action {
                SimAction::Fixed(parts) => parts.clone(),
                SimAction::Broadcast { sender } => {
                    // Mandatory participation at the chosen instant; an
                    // instance with several enabled edges picks one at
                    // random.
                    let ch = match net.system.templates[sender.0].edges[sender.1].sync {
                        SyncLabel::Send(ch) => ch,
                        _ => unreachable!(),
                    };
                    let mut parts = vec![*sender];
                    for j in 0..net.system.templates.len() {
                        if j == sender.0 {
                            continue;
                        }
                        let open: Vec<(usize, usize)> = net
                            .receiver_table(ch)
                            .iter()
                            .copied()
                            .filter(|&(rj, rf)| {
                                let edge = &net.system.templates[rj].edges[rf];
                                rj == j
                                    && edge.source == s.locs[rj]
                                    && net.int_guards_hold(rj, rf, &s.ints)
                                    && edge.guard_clocks.iter().all(|cc| concrete_holds(&at, cc))
                            })
                            .collect();
                        if open.len() == 1 {
                            parts.push(open[0]);
                        } else if open.len() > 1 {
                            parts.push(open[rng.gen_range(0..open.len())]);
                        }
                    }
                    parts
                }
            };
            // Broadcast feasibility could not be fully decided before the
            // receiver set was known; re-check and drop on failure.
            if matches!(cand.action, SimAction::Broadcast { .. }) {
                let committed = net.vector_has_committed(&s.locs);
                let joint_ok = sim_int_feasible(net, &s, &parts).is_some()
                    && (!committed
                        || parts.iter().any(|&(k, _)| {
                            net.kind_of(k, s.locs[k]) == crate::ta::LocationKind::Committed
                        }))
                    && {
                        let mut probe = SimState {
                            locs: s.locs.clone(),
                            ints: s.ints.clone(),
                            vals: at.clone(),
                        };
                        apply_parts(net, &mut probe, &parts);
                        probe.locs.iter().enumerate().all(|(k, &l)| {
                            net.system.templates[k].locations[l]
                                .invariant
                                .iter()
                                .all(|cc| concrete_holds(&probe.vals, cc))
                        })
                    };
                if !joint_ok {
                    candidates.remove(pick);
                    continue;
                }
            }
            let label = match (&cand.action, parts.len()) {
                (SimAction::Broadcast { sender }, _) => {
                    let ch = match net.system.templates[sender.0].edges[sender.1].sync {
                        SyncLabel::Send(ch) => ch,
                        _ => unreachable!(),
                    };
                    TransitionLabel::Sync {
                        channel: ch,
                        sender: *sender,
                        receivers: parts[1..].to_vec(),
                    }
                }
                _ => cand.label_hint.clone(),
            };
            s.vals = at;
            apply_parts(net, &mut s, &parts);
            break Some((label, delta));
        };
        match fired {
            Some((label, delta)) => {
                report.steps.push(SimStep {
                    label: net.render_label(&label),
                    delay: fraction(delta),
                    locations: net.render_locations(&s.locs),
                    clocks: render_clocks(&s.vals),
                });
            }
            None => {
                report.deadlocked = true;
                break;
            }
        }
    }
    Ok(report)
}

fn apply_parts(net: &Network, s: &mut SimState, parts: &[(usize, usize)]) {
    for &(i, e) in parts {
        net.apply_assigns(i, e, &mut s.ints)
            .expect("assignments were checked feasible");
    }
    for &(i, e) in parts {
        let edge = &net.system.templates[i].edges[e];
        for &(x, v) in &edge.resets {
            s.vals[x] = Ratio::from_integer(v);
        }
        s.locs[i] = edge.target;
    }
}
