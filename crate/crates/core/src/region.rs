//! Explicit region-graph exploration in the style of Alur and Dill.
//!
//! This is the brute-force oracle: it enumerates clock regions (integer
//! parts up to each clock's maximal constant, plus the ordering of
//! fractional parts) instead of zones, so its state space is exponential
//! but its semantics is elementary. The zone engine is cross-checked
//! against the verdicts and reachable location vectors computed here.
//!
//! The oracle deliberately handles only small inputs: few clocks, small
//! constants, no difference constraints between clocks. Anything outside
//! that fragment is refused rather than approximated.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::network::{Network, TransitionLabel};
use crate::query::{to_dnf, Conjunct, Literal, Query, StateFormula};
use crate::ta::{Bound, ClockConstraint, ClockId, LocId};

/// A clock region: per-clock integer parts, "grown past its maximal
/// constant" flags, and the ordered partition of the remaining clocks by
/// fractional part. `frac[0]` is the zero-fraction class and may be empty;
/// later classes are nonempty with strictly increasing fractions.
///
/// Canonical form: classes hold ascending clock ids, clocks past their
/// constant appear in no class and carry integer part 0.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Region {
    intpart: Vec<i64>,
    beyond: Vec<bool>,
    frac: Vec<Vec<ClockId>>,
}

impl Region {
    /// All clocks at zero. `max` is indexed by clock id, entry 0 unused.
    pub fn initial(max: &[i64]) -> Region {
        let n = max.len() - 1;
        Region {
            intpart: vec![0; n + 1],
            beyond: vec![false; n + 1],
            frac: vec![(1..=n).collect()],
        }
    }

    fn in_zero_class(&self, x: ClockId) -> bool {
        self.frac[0].contains(&x)
    }

    fn frac_rank(&self, x: ClockId) -> usize {
        self.frac
            .iter()
            .position(|class| class.contains(&x))
            .expect("clock past its constant has no fractional rank")
    }

    /// The immediate time successor. A region whose clocks have all grown
    /// past their constants is its own successor.
    pub fn time_successor(&self, max: &[i64]) -> Region {
        let mut r = self.clone();
        if !r.frac[0].is_empty() {
            // An infinitesimal delay: integer-valued clocks pick up a
            // fraction smaller than every existing one.
            let zero = std::mem::take(&mut r.frac[0]);
            let mut fresh = Vec::new();
            for x in zero {
                if r.intpart[x] >= max[x] {
                    r.beyond[x] = true;
                    r.intpart[x] = 0;
                } else {
                    fresh.push(x);
                }
            }
            if !fresh.is_empty() {
                r.frac.insert(1, fresh);
            }
            r
        } else if r.frac.len() > 1 {
            // The largest fractional class reaches the next integer.
            let last = r.frac.pop().unwrap();
            for x in last {
                r.intpart[x] += 1;
                r.frac[0].push(x);
            }
            r.frac[0].sort_unstable();
            r
        } else {
            r
        }
    }

    /// Exact satisfaction of a single constraint by every point of the
    /// region. Only single-clock constraints are decidable once a clock has
    /// grown past its constant; the explorer refuses difference constraints
    /// up front, and constants are folded into the `max` table before
    /// exploration, so `c <= max[x]` holds for every constraint seen here.
    pub fn satisfies(&self, c: &ClockConstraint) -> bool {
        let (strict, bval) = match c.bound {
            Bound::Strict(v) => (true, v),
            Bound::Weak(v) => (false, v),
            Bound::Unbounded => return true,
        };
        match (c.left, c.right) {
            (x, 0) => {
                // x < bval or x <= bval.
                if self.beyond[x] {
                    return false;
                }
                let ip = self.intpart[x];
                if strict {
                    ip < bval
                } else {
                    ip < bval || (ip == bval && self.in_zero_class(x))
                }
            }
            (0, y) => {
                // -y < bval, i.e. y > -bval (or >=).
                let lo = -bval;
                if self.beyond[y] {
                    return true;
                }
                let ip = self.intpart[y];
                if strict {
                    ip > lo || (ip == lo && !self.in_zero_class(y))
                } else {
                    ip >= lo
                }
            }
            (x, y) => {
                assert!(
                    !self.beyond[x] && !self.beyond[y],
                    "difference constraint undecidable past the clock ceiling"
                );
                let d = self.intpart[x] - self.intpart[y];
                let rx = self.frac_rank(x);
                let ry = self.frac_rank(y);
                if strict {
                    d < bval || (d == bval && rx < ry)
                } else {
                    d < bval || (d == bval && rx <= ry)
                }
            }
        }
    }

    /// Sets clock `x` to the integer `v`.
    pub fn reset(&mut self, x: ClockId, v: i64, max: &[i64]) {
        for class in &mut self.frac {
            class.retain(|&y| y != x);
        }
        let zero = std::mem::take(&mut self.frac[0]);
        self.frac.retain(|class| !class.is_empty());
        self.frac.insert(0, zero);
        if v > max[x] {
            self.beyond[x] = true;
            self.intpart[x] = 0;
        } else {
            self.beyond[x] = false;
            self.intpart[x] = v;
            self.frac[0].push(x);
            self.frac[0].sort_unstable();
        }
    }
}

/// A node of the region graph.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RegionState {
    pub locs: Vec<LocId>,
    pub ints: Vec<i64>,
    pub region: Region,
}

/// Inputs the oracle refuses, plus the exploration budget.
#[derive(Clone, Copy, Debug)]
pub struct RegionLimits {
    pub max_clocks: usize,
    pub max_constant: i64,
    pub max_states: usize,
}

impl Default for RegionLimits {
    fn default() -> Self {
        RegionLimits {
            max_clocks: 5,
            max_constant: 16,
            max_states: 2_000_000,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum RegionError {
    #[error("region oracle limited to {limit} clocks, model has {got}")]
    TooManyClocks { got: usize, limit: usize },
    #[error("region oracle limited to constants up to {limit}, saw {got}")]
    ConstantTooLarge { got: i64, limit: i64 },
    #[error("region oracle does not handle clock difference constraints")]
    DifferenceConstraint,
    #[error("region exploration exceeded {0} states")]
    StateBudget(usize),
    #[error("initial state violates an invariant")]
    EmptyInitial,
    #[error("region oracle only answers reachability queries (E<> and A[])")]
    UnsupportedQuery,
}

/// What a full exploration found.
#[derive(Clone, Debug)]
pub struct RegionAnalysis {
    pub states: usize,
    pub distinct_regions: usize,
    pub locvecs: BTreeSet<Vec<LocId>>,
}

/// Upper bound on the number of clock regions for the given constant
/// table: n! * 2^n * prod(2 c_i + 2).
pub fn region_count_bound(max: &[i64]) -> u128 {
    let n = (max.len() - 1) as u128;
    let mut b: u128 = 1;
    for k in 1..=n {
        b *= k;
    }
    b <<= n;
    for &c in &max[1..] {
        b *= 2 * c as u128 + 2;
    }
    b
}

fn guard_scale(net: &Network, limits: &RegionLimits) -> Result<(), RegionError> {
    let n = net.system.n_clocks();
    if n > limits.max_clocks {
        return Err(RegionError::TooManyClocks {
            got: n,
            limit: limits.max_clocks,
        });
    }
    for &c in &net.max_consts()[1..] {
        if c > limits.max_constant {
            return Err(RegionError::ConstantTooLarge {
                got: c,
                limit: limits.max_constant,
            });
        }
    }
    let diagonal = net.system.templates.iter().any(|t| {
        t.locations
            .iter()
            .flat_map(|l| l.invariant.iter())
            .chain(t.edges.iter().flat_map(|e| e.guard_clocks.iter()))
            .any(|c| c.left != 0 && c.right != 0)
    });
    if diagonal {
        return Err(RegionError::DifferenceConstraint);
    }
    Ok(())
}

struct Oracle<'a> {
    net: &'a Network,
}

impl<'a> Oracle<'a> {
    fn max(&self) -> &[i64] {
        self.net.max_consts()
    }

    fn invariants_hold(&self, locs: &[LocId], region: &Region) -> bool {
        locs.iter().enumerate().all(|(i, &l)| {
            self.net.system.templates[i].locations[l]
                .invariant
                .iter()
                .all(|c| region.satisfies(c))
        })
    }

    fn edge_open(&self, s: &RegionState, i: usize, e: usize) -> bool {
        let edge = &self.net.system.templates[i].edges[e];
        edge.source == s.locs[i]
            && self.net.int_guards_hold(i, e, &s.ints)
            && edge.guard_clocks.iter().all(|c| s.region.satisfies(c))
    }

    fn fire(&self, s: &RegionState, parts: &[(usize, usize)]) -> Option<RegionState> {
        let mut ints = s.ints.clone();
        for &(i, e) in parts {
            self.net.apply_assigns(i, e, &mut ints)?;
        }
        let mut region = s.region.clone();
        let mut locs = s.locs.clone();
        for &(i, e) in parts {
            let edge = &self.net.system.templates[i].edges[e];
            for &(x, v) in &edge.resets {
                region.reset(x, v, self.max());
            }
            locs[i] = edge.target;
        }
        if !self.invariants_hold(&locs, &region) {
            return None;
        }
        Some(RegionState { locs, ints, region })
    }

    /// Action successors, mirroring the zone engine's enumeration. Regions
    /// are point-like, so joint guard satisfiability is just per-edge
    /// satisfaction.
    fn action_successors(&self, s: &RegionState) -> Vec<RegionState> {
        use crate::ta::{ChannelKind, LocationKind, SyncLabel};
        let mut out: Vec<(TransitionLabel, RegionState)> = Vec::new();
        let committed_present = self.net.vector_has_committed(&s.locs);
        let n = self.net.system.templates.len();
        for i in 0..n {
            let t = &self.net.system.templates[i];
            for (e, edge) in t.edges.iter().enumerate() {
                if edge.source != s.locs[i] {
                    continue;
                }
                match edge.sync {
                    SyncLabel::Internal => {
                        if !self.edge_open(s, i, e) {
                            continue;
                        }
                        if let Some(next) = self.fire(s, &[(i, e)]) {
                            out.push((TransitionLabel::Internal { instance: i, edge: e }, next));
                        }
                    }
                    SyncLabel::Send(ch) => {
                        if !self.edge_open(s, i, e) {
                            continue;
                        }
                        match self.net.system.channels[ch].kind {
                            ChannelKind::Binary => {
                                for &(j, f) in self.net.receiver_table(ch) {
                                    if j == i || !self.edge_open(s, j, f) {
                                        continue;
                                    }
                                    if let Some(next) = self.fire(s, &[(i, e), (j, f)]) {
                                        out.push((
                                            TransitionLabel::Sync {
                                                channel: ch,
                                                sender: (i, e),
                                                receivers: vec![(j, f)],
                                            },
                                            next,
                                        ));
                                    }
                                }
                            }
                            ChannelKind::Broadcast => {
                                let mut per_instance: Vec<Vec<(usize, usize)>> = Vec::new();
                                for j in 0..n {
                                    if j == i {
                                        continue;
                                    }
                                    let open: Vec<(usize, usize)> = self
                                        .net
                                        .receiver_table(ch)
                                        .iter()
                                        .copied()
                                        .filter(|&(rj, rf)| rj == j && self.edge_open(s, rj, rf))
                                        .collect();
                                    if !open.is_empty() {
                                        per_instance.push(open);
                                    }
                                }
                                let mut combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
                                for group in &per_instance {
                                    let mut grown = Vec::new();
                                    for c in &combos {
                                        for &r in group {
                                            let mut c2 = c.clone();
                                            c2.push(r);
                                            grown.push(c2);
                                        }
                                    }
                                    combos = grown;
                                }
                                for receivers in combos {
                                    let mut parts = vec![(i, e)];
                                    parts.extend(receivers.iter().copied());
                                    if let Some(next) = self.fire(s, &parts) {
                                        out.push((
                                            TransitionLabel::Sync {
                                                channel: ch,
                                                sender: (i, e),
                                                receivers,
                                            },
                                            next,
                                        ));
                                    }
                                }
                            }
                        }
                    }
                    SyncLabel::Receive(_) => {}
                }
            }
        }
        if committed_present {
            out.retain(|(label, _)| {
                let parts: Vec<usize> = match label {
                    TransitionLabel::Internal { instance, .. } => vec![*instance],
                    TransitionLabel::Sync {
                        sender, receivers, ..
                    } => {
                        let mut v = vec![sender.0];
                        v.extend(receivers.iter().map(|r| r.0));
                        v
                    }
                    TransitionLabel::Delay => vec![],
                };
                parts
                    .iter()
                    .any(|&i| self.net.kind_of(i, s.locs[i]) == LocationKind::Committed)
            });
        }
        out.into_iter().map(|(_, s)| s).collect()
    }

    /// The delay edge out of a state, if time may pass.
    fn delay_successor(&self, s: &RegionState) -> Option<RegionState> {
        if self.net.vector_is_urgent(&s.locs) {
            return None;
        }
        let next = s.region.time_successor(self.max());
        if next == s.region || !self.invariants_hold(&s.locs, &next) {
            return None;
        }
        Some(RegionState {
            locs: s.locs.clone(),
            ints: s.ints.clone(),
            region: next,
        })
    }

    /// No action transition from this state or any state reachable by
    /// letting time pass.
    fn is_deadlock(&self, s: &RegionState) -> bool {
        let mut cur = s.clone();
        loop {
            if !self.action_successors(&cur).is_empty() {
                return false;
            }
            match self.delay_successor(&cur) {
                Some(next) => cur = next,
                None => return true,
            }
        }
    }

    fn conjunct_holds(&self, s: &RegionState, c: &Conjunct) -> bool {
        c.iter().all(|lit| match lit {
            Literal::Constant(b) => *b,
            Literal::Location {
                instance,
                loc,
                positive,
            } => (s.locs[*instance] == *loc) == *positive,
            Literal::Int { var, op, rhs } => op.holds(s.ints[*var], *rhs),
            Literal::Clock(cc) => s.region.satisfies(cc),
            Literal::Deadlock { positive } => self.is_deadlock(s) == *positive,
        })
    }

    fn formula_holds(&self, s: &RegionState, dnf: &[Conjunct]) -> bool {
        dnf.iter().any(|c| self.conjunct_holds(s, c))
    }

    fn initial(&self) -> Result<RegionState, RegionError> {
        let locs: Vec<LocId> = self
            .net
            .system
            .templates
            .iter()
            .map(|t| t.initial)
            .collect();
        let ints: Vec<i64> = self.net.system.vars.iter().map(|v| v.init).collect();
        let region = Region::initial(self.max());
        if !self.invariants_hold(&locs, &region) {
            return Err(RegionError::EmptyInitial);
        }
        Ok(RegionState { locs, ints, region })
    }

    /// Breadth-first sweep of the region graph. `stop` short-circuits the
    /// search; the analysis is only complete when it never fired.
    fn explore(
        &self,
        limits: &RegionLimits,
        mut stop: impl FnMut(&RegionState) -> bool,
    ) -> Result<(RegionAnalysis, bool), RegionError> {
        let init = self.initial()?;
        let mut seen: HashSet<RegionState> = HashSet::new();
        let mut regions: HashSet<Region> = HashSet::new();
        let mut locvecs: BTreeSet<Vec<LocId>> = BTreeSet::new();
        let mut queue: VecDeque<RegionState> = VecDeque::new();
        regions.insert(init.region.clone());
        locvecs.insert(init.locs.clone());
        seen.insert(init.clone());
        queue.push_back(init);
        while let Some(s) = queue.pop_front() {
            if stop(&s) {
                return Ok((
                    RegionAnalysis {
                        states: seen.len(),
                        distinct_regions: regions.len(),
                        locvecs,
                    },
                    true,
                ));
            }
            let mut push = |next: RegionState,
                            seen: &mut HashSet<RegionState>,
                            queue: &mut VecDeque<RegionState>|
             -> Result<(), RegionError> {
                if seen.contains(&next) {
                    return Ok(());
                }
                if seen.len() >= limits.max_states {
                    return Err(RegionError::StateBudget(limits.max_states));
                }
                regions.insert(next.region.clone());
                locvecs.insert(next.locs.clone());
                seen.insert(next.clone());
                queue.push_back(next);
                Ok(())
            };
            if let Some(next) = self.delay_successor(&s) {
                push(next, &mut seen, &mut queue)?;
            }
            for next in self.action_successors(&s) {
                push(next, &mut seen, &mut queue)?;
            }
        }
        Ok((
            RegionAnalysis {
                states: seen.len(),
                distinct_regions: regions.len(),
                locvecs,
            },
            false,
        ))
    }
}

/// Exhaustive reachability analysis over the region graph.
pub fn reachable(net: &Network, limits: &RegionLimits) -> Result<RegionAnalysis, RegionError> {
    guard_scale(net, limits)?;
    let oracle = Oracle { net };
    oracle.explore(limits, |_| false).map(|(a, _)| a)
}

/// Reachable location vectors (one entry per state of the product, clock
/// information dropped).
pub fn reachable_locvecs(
    net: &Network,
    limits: &RegionLimits,
) -> Result<BTreeSet<Vec<LocId>>, RegionError> {
    reachable(net, limits).map(|a| a.locvecs)
}

/// Decides `E<>` and `A[]` queries by explicit search. Other query forms
/// are out of scope for the oracle.
pub fn check(net: &Network, query: &Query, limits: &RegionLimits) -> Result<bool, RegionError> {
    let (formula, negate_answer) = match query {
        Query::ExistsEventually(f) => (f.clone(), false),
        Query::AlwaysGlobally(f) => (StateFormula::Not(Box::new(f.clone())), true),
        _ => return Err(RegionError::UnsupportedQuery),
    };
    // Constants mentioned by the query must be folded into the region
    // construction or satisfaction would be undecidable past the ceiling.
    let mut net = net.clone();
    for (x, c) in formula.clock_consts() {
        net.raise_max_const(x, c);
    }
    guard_scale(&net, limits)?;
    let dnf = to_dnf(&formula);
    let oracle = Oracle { net: &net };
    let (_, found) = oracle.explore(limits, |s| oracle.formula_holds(s, &dnf))?;
    Ok(if negate_answer { !found } else { found })
}
