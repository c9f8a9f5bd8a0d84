//! Parallel composition of templates with interleaving semantics and
//! channel synchronization, and the symbolic successor relation on zones.
//!
//! Delay is folded into action successors (the usual zone-graph
//! construction): a stored state is already delay-closed, so an action
//! successor is guard-intersection, updates, target invariants, then a new
//! delay closure and extrapolation. No separate delay transition exists.

use crate::dbm::Dbm;
use crate::ta::{
    validate_template, ChannelDecl, ChannelKind, ClockId, Diagnostic, LocId, LocationKind,
    SyncLabel, SystemSignature, TimedAutomatonTemplate, VarDecl,
};
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

/// A complete model: one flat clock/variable/channel namespace plus the
/// process templates in instantiation order. Each template is one process
/// instance (templates are not re-instantiated under different names).
#[derive(Clone, Debug)]
pub struct System {
    /// Display names of clocks 1..=N (index k names clock k+1).
    pub clock_names: Vec<String>,
    pub vars: Vec<VarDecl>,
    pub channels: Vec<ChannelDecl>,
    pub templates: Vec<TimedAutomatonTemplate>,
}

impl System {
    pub fn n_clocks(&self) -> usize {
        self.clock_names.len()
    }

    pub fn signature(&self) -> SystemSignature {
        SystemSignature {
            n_clocks: self.clock_names.len(),
            n_vars: self.vars.len(),
            n_channels: self.channels.len(),
        }
    }

    pub fn template_index(&self, name: &str) -> Option<usize> {
        self.templates.iter().position(|t| t.name == name)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    /// Clock id (1-based) for a display name.
    pub fn clock_index(&self, name: &str) -> Option<ClockId> {
        self.clock_names.iter().position(|c| c == name).map(|i| i + 1)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }
}

/// The discrete+symbolic configuration: one location per instance, the
/// integer-variable valuation, and the clock zone. Stored states keep the
/// zone canonical, nonempty, inside all current invariants, and delay-closed
/// unless some current location is urgent or committed.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SymbolicState {
    pub locs: Vec<LocId>,
    pub ints: Vec<i64>,
    pub zone: Dbm,
}

/// What fired. `Delay` never appears in successor lists (delay is folded
/// into actions); it exists for trace tooling that wants to tag pure waits.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub enum TransitionLabel {
    Delay,
    Internal {
        instance: usize,
        edge: usize,
    },
    Sync {
        channel: usize,
        sender: (usize, usize),
        /// (instance, edge) pairs; exactly one for binary channels, any
        /// number (including zero) for broadcast.
        receivers: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("model is invalid:\n{0}")]
    Invalid(String),
    #[error("empty initial state: initial invariants are unsatisfiable at time 0")]
    EmptyInitialState,
}

/// A validated system with the derived tables the engine needs: per-clock
/// max constants for extrapolation and per-channel sender/receiver edge
/// indexes.
#[derive(Clone, Debug)]
pub struct Network {
    pub system: System,
    /// Per-clock extrapolation constants, indexed by clock id (entry 0
    /// unused). Raised by the verifier when queries mention larger
    /// constants.
    max_consts: Vec<i64>,
    /// For each channel: (instance, edge) of every receive edge.
    receivers: Vec<Vec<(usize, usize)>>,
}

impl Network {
    pub fn new(system: System) -> Result<Network, NetworkError> {
        let sig = system.signature();
        let mut problems: Vec<Diagnostic> = Vec::new();
        for t in &system.templates {
            problems.extend(validate_template(t, &sig));
        }
        let mut seen = HashMap::new();
        for t in &system.templates {
            if seen.insert(t.name.clone(), ()).is_some() {
                problems.push(Diagnostic {
                    template: t.name.clone(),
                    place: "template".to_string(),
                    message: "duplicate instance name".to_string(),
                });
            }
        }
        let mut chans = HashMap::new();
        for c in &system.channels {
            if chans.insert(c.name.clone(), ()).is_some() {
                problems.push(Diagnostic {
                    template: c.name.clone(),
                    place: "channel".to_string(),
                    message: "duplicate channel name".to_string(),
                });
            }
        }
        for v in &system.vars {
            if v.init < v.lo || v.init > v.hi {
                problems.push(Diagnostic {
                    template: v.name.clone(),
                    place: "variable".to_string(),
                    message: format!(
                        "initial value {} outside declared range [{}, {}]",
                        v.init, v.lo, v.hi
                    ),
                });
            }
        }
        if !problems.is_empty() {
            let text = problems
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("\n");
            return Err(NetworkError::Invalid(text));
        }

        let dim = system.n_clocks() + 1;
        let mut max_consts = vec![0i64; dim];
        let note = |clock: ClockId, c: i64, max_consts: &mut Vec<i64>| {
            if clock != 0 {
                let v = c.abs();
                if v > max_consts[clock] {
                    max_consts[clock] = v;
                }
            }
        };
        let mut receivers = vec![Vec::new(); system.channels.len()];
        for (ti, t) in system.templates.iter().enumerate() {
            for loc in &t.locations {
                for cc in &loc.invariant {
                    let v = cc.bound.value().unwrap_or(0);
                    note(cc.left, v, &mut max_consts);
                    note(cc.right, v, &mut max_consts);
                }
            }
            for (ei, e) in t.edges.iter().enumerate() {
                for cc in &e.guard_clocks {
                    let v = cc.bound.value().unwrap_or(0);
                    note(cc.left, v, &mut max_consts);
                    note(cc.right, v, &mut max_consts);
                }
                for &(x, v) in &e.resets {
                    note(x, v, &mut max_consts);
                }
                if let SyncLabel::Receive(c) = e.sync {
                    receivers[c].push((ti, ei));
                }
            }
        }

        Ok(Network {
            system,
            max_consts,
            receivers,
        })
    }

    pub(crate) fn receiver_table(&self, channel: usize) -> &[(usize, usize)] {
        &self.receivers[channel]
    }

    pub fn max_consts(&self) -> &[i64] {
        &self.max_consts
    }

    /// Largest extrapolation constant over all clocks; 0 for clockless
    /// models.
    pub fn max_const_global(&self) -> i64 {
        self.max_consts.iter().copied().max().unwrap_or(0)
    }

    /// Raises the extrapolation constant of one clock. The verifier calls
    /// this for constants appearing in queries, which must be respected by
    /// the abstraction just like model constants.
    pub fn raise_max_const(&mut self, clock: ClockId, c: i64) {
        if clock != 0 && clock < self.max_consts.len() && c.abs() > self.max_consts[clock] {
            self.max_consts[clock] = c.abs();
        }
    }

    pub(crate) fn kind_of(&self, instance: usize, loc: LocId) -> LocationKind {
        self.system.templates[instance].locations[loc].kind
    }

    /// True if some location of the vector freezes time.
    pub(crate) fn vector_is_urgent(&self, locs: &[LocId]) -> bool {
        locs.iter().enumerate().any(|(i, &l)| {
            matches!(
                self.kind_of(i, l),
                LocationKind::Urgent | LocationKind::Committed
            )
        })
    }

    pub(crate) fn vector_has_committed(&self, locs: &[LocId]) -> bool {
        locs.iter()
            .enumerate()
            .any(|(i, &l)| self.kind_of(i, l) == LocationKind::Committed)
    }

    /// Conjoins the invariants of every location in the vector.
    pub(crate) fn conjoin_invariants(&self, locs: &[LocId], zone: &mut Dbm) {
        for (i, &l) in locs.iter().enumerate() {
            for cc in &self.system.templates[i].locations[l].invariant {
                zone.and(*cc);
            }
        }
    }

    /// Delay closure for storage: up within invariants, then extrapolation.
    /// Skipped (except extrapolation) when the vector is urgent.
    fn close_for_storage(&self, locs: &[LocId], zone: &mut Dbm) {
        if !self.vector_is_urgent(locs) {
            zone.up();
            self.conjoin_invariants(locs, zone);
        }
        zone.extrapolate(&self.max_consts);
    }

    /// The initial symbolic state: everything at its initial location,
    /// clocks at zero, intersected with the initial invariants and
    /// delay-closed.
    pub fn initial_state(&self) -> Result<SymbolicState, NetworkError> {
        let locs: Vec<LocId> = self.system.templates.iter().map(|t| t.initial).collect();
        let ints: Vec<i64> = self.system.vars.iter().map(|v| v.init).collect();
        let mut zone = Dbm::init_zero(self.system.n_clocks());
        self.conjoin_invariants(&locs, &mut zone);
        if zone.is_empty() {
            return Err(NetworkError::EmptyInitialState);
        }
        self.close_for_storage(&locs, &mut zone);
        Ok(SymbolicState { locs, ints, zone })
    }

    /// Integer guards of an edge, evaluated on the current valuation.
    pub(crate) fn int_guards_hold(&self, instance: usize, edge: usize, ints: &[i64]) -> bool {
        self.system.templates[instance].edges[edge]
            .guard_ints
            .iter()
            .all(|g| g.holds(ints))
    }

    /// Applies one edge's integer updates; None if a result leaves its
    /// declared range (which disables the transition).
    pub(crate) fn apply_assigns(&self, instance: usize, edge: usize, ints: &mut [i64]) -> Option<()> {
        for (v, expr) in &self.system.templates[instance].edges[edge].assigns {
            let val = expr.eval(ints)?;
            let decl = &self.system.vars[*v];
            if val < decl.lo || val > decl.hi {
                return None;
            }
            ints[*v] = val;
        }
        Some(())
    }

    fn apply_resets(&self, instance: usize, edge: usize, zone: &mut Dbm) {
        for &(x, v) in &self.system.templates[instance].edges[edge].resets {
            zone.assign(x, v);
        }
    }

    /// Builds the successor for a set of participating edges, already known
    /// to have individually satisfiable guards. Returns None if the joint
    /// combination is unsatisfiable or an integer update goes out of range.
    fn fire(
        &self,
        s: &SymbolicState,
        parts: &[(usize, usize)],
    ) -> Option<SymbolicState> {
        let mut zone = s.zone.clone();
        for &(i, e) in parts {
            for cc in &self.system.templates[i].edges[e].guard_clocks {
                zone.and(*cc);
            }
            if zone.is_empty() {
                return None;
            }
        }
        let mut ints = s.ints.clone();
        for &(i, e) in parts {
            self.apply_assigns(i, e, &mut ints)?;
        }
        let mut locs = s.locs.clone();
        for &(i, e) in parts {
            self.apply_resets(i, e, &mut zone);
            locs[i] = self.system.templates[i].edges[e].target;
        }
        self.conjoin_invariants(&locs, &mut zone);
        if zone.is_empty() {
            return None;
        }
        self.close_for_storage(&locs, &mut zone);
        if zone.is_empty() {
            return None;
        }
        Some(SymbolicState { locs, ints, zone })
    }

    /// Quick per-edge enabledness probe: integer guards hold and the clock
    /// guard intersects the current zone.
    fn edge_open(&self, s: &SymbolicState, i: usize, e: usize) -> bool {
        if s.locs[i] != self.system.templates[i].edges[e].source {
            return false;
        }
        if !self.int_guards_hold(i, e, &s.ints) {
            return false;
        }
        let g = &self.system.templates[i].edges[e].guard_clocks;
        if g.is_empty() {
            return true;
        }
        let mut z = s.zone.clone();
        for cc in g {
            z.and(*cc);
            if z.is_empty() {
                return false;
            }
        }
        true
    }

    /// All enabled symbolic transitions from a stored state, in canonical
    /// order: by sender/acting instance index, then its edge index, then
    /// (for binary syncs) receiver instance and edge index. Committed
    /// priority filters the list when applicable.
    pub fn successors(&self, s: &SymbolicState) -> Vec<(TransitionLabel, SymbolicState)> {
        let mut out: Vec<(TransitionLabel, SymbolicState)> = Vec::new();
        let committed_present = self.vector_has_committed(&s.locs);
        let n = self.system.templates.len();
        for i in 0..n {
            let t = &self.system.templates[i];
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
                    SyncLabel::Send(ch) => match self.system.channels[ch].kind {
                        ChannelKind::Binary => {
                            if !self.edge_open(s, i, e) {
                                continue;
                            }
                            for &(j, f) in &self.receivers[ch] {
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
                            if !self.edge_open(s, i, e) {
                                continue;
                            }
                            // Mandatory participation: every instance with
                            // a receive edge satisfiable alongside the send
                            // guard joins. Per instance, each satisfiable
                            // receive edge yields one combination.
                            let mut zone_with_send = s.zone.clone();
                            for cc in &edge.guard_clocks {
                                zone_with_send.and(*cc);
                            }
                            let probe = SymbolicState {
                                locs: s.locs.clone(),
                                ints: s.ints.clone(),
                                zone: zone_with_send,
                            };
                            let mut per_instance: Vec<Vec<(usize, usize)>> = Vec::new();
                            for j in 0..n {
                                if j == i {
                                    continue;
                                }
                                let open: Vec<(usize, usize)> = self.receivers[ch]
                                    .iter()
                                    .copied()
                                    .filter(|&(rj, rf)| rj == j && self.edge_open(&probe, rj, rf))
                                    .collect();
                                if !open.is_empty() {
                                    per_instance.push(open);
                                }
                            }
                            // Cartesian product over participating
                            // instances, lexicographic in edge order.
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
                    },
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
                    .any(|&i| self.kind_of(i, s.locs[i]) == LocationKind::Committed)
            });
        }
        out
    }

    /// Whole-state deadlock: no action transition is enabled from the state
    /// or any of its time successors. Stored states are delay-closed, so
    /// this is exactly "no successors".
    pub fn is_deadlock(&self, s: &SymbolicState) -> bool {
        self.successors(s).is_empty()
    }

    /// Human-readable transition label used in traces and reports.
    pub fn render_label(&self, label: &TransitionLabel) -> String {
        let edge_part = |i: usize, e: usize| {
            let t = &self.system.templates[i];
            let edge = &t.edges[e];
            format!(
                "{}.{} -> {}.{}",
                t.name, t.locations[edge.source].name, t.name, t.locations[edge.target].name
            )
        };
        match label {
            TransitionLabel::Delay => "delay".to_string(),
            TransitionLabel::Internal { instance, edge } => edge_part(*instance, *edge),
            TransitionLabel::Sync {
                channel,
                sender,
                receivers,
            } => {
                let mut parts = vec![edge_part(sender.0, sender.1)];
                for &(j, f) in receivers {
                    parts.push(edge_part(j, f));
                }
                format!("{}: {}", self.system.channels[*channel].name, parts.join(" | "))
            }
        }
    }

    /// "Instance.location" names of a location vector.
    pub fn render_locations(&self, locs: &[LocId]) -> Vec<String> {
        locs.iter()
            .enumerate()
            .map(|(i, &l)| {
                let t = &self.system.templates[i];
                format!("{}.{}", t.name, t.locations[l].name)
            })
            .collect()
    }

    pub fn render_zone(&self, zone: &Dbm) -> String {
        zone.render(&self.system.clock_names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ta::{ChannelKind, ClockConstraint as Cc, Edge, Location};

    fn chan(name: &str) -> ChannelDecl {
        ChannelDecl {
            name: name.to_string(),
            kind: ChannelKind::Binary,
        }
    }

    fn bcast(name: &str) -> ChannelDecl {
        ChannelDecl {
            name: name.to_string(),
            kind: ChannelKind::Broadcast,
        }
    }

    /// Two processes: P sends on a after x >= 2, Q receives any time.
    fn handshake_system() -> System {
        System {
            clock_names: vec!["x".to_string()],
            vars: vec![],
            channels: vec![chan("a")],
            templates: vec![
                TimedAutomatonTemplate {
                    name: "P".to_string(),
                    locations: vec![Location::new("s0"), Location::new("s1")],
                    initial: 0,
                    edges: vec![Edge::new(0, 1).guard(Cc::at_least(1, 2)).send(0)],
                    clocks: vec![1],
                    vars: vec![],
                },
                TimedAutomatonTemplate {
                    name: "Q".to_string(),
                    locations: vec![Location::new("t0"), Location::new("t1")],
                    initial: 0,
                    edges: vec![Edge::new(0, 1).receive(0)],
                    clocks: vec![],
                    vars: vec![],
                },
            ],
        }
    }

    #[test]
    fn initial_state_is_delay_closed() {
        let net = Network::new(handshake_system()).unwrap();
        let s = net.initial_state().unwrap();
        assert_eq!(s.locs, vec![0, 0]);
        // Delay-closed: x is unbounded above.
        assert_eq!(s.zone.get(1, 0), crate::ta::Bound::Unbounded);
    }

    #[test]
    fn empty_initial_invariant_is_an_error() {
        let mut sys = handshake_system();
        sys.templates[0].locations[0].invariant = vec![Cc::below(1, 0)];
        let net = Network::new(sys).unwrap();
        assert_eq!(net.initial_state(), Err(NetworkError::EmptyInitialState));
    }

    #[test]
    fn binary_sync_pairs_sender_and_receiver() {
        let net = Network::new(handshake_system()).unwrap();
        let s = net.initial_state().unwrap();
        let succ = net.successors(&s);
        assert_eq!(succ.len(), 1);
        let (label, next) = &succ[0];
        assert_eq!(
            label,
            &TransitionLabel::Sync {
                channel: 0,
                sender: (0, 0),
                receivers: vec![(1, 0)],
            }
        );
        assert_eq!(next.locs, vec![1, 1]);
        // Guard x >= 2 survives into the successor zone.
        assert_eq!(next.zone.get(0, 1), crate::ta::Bound::Weak(-2));
        assert_eq!(net.render_label(label), "a: P.s0 -> P.s1 | Q.t0 -> Q.t1");
    }

    #[test]
    fn deadlock_when_receiver_is_gone() {
        let mut sys = handshake_system();
        // Remove Q's receive edge: P's send can never synchronize.
        sys.templates[1].edges.clear();
        let net = Network::new(sys).unwrap();
        let s = net.initial_state().unwrap();
        assert!(net.successors(&s).is_empty());
        assert!(net.is_deadlock(&s));
    }

    #[test]
    fn urgent_location_blocks_delay() {
        let mut sys = handshake_system();
        sys.templates[1].locations[0] = Location::urgent("t0");
        let net = Network::new(sys).unwrap();
        let s = net.initial_state().unwrap();
        // No up-step: x stays pinned at 0.
        assert_eq!(s.zone.get(1, 0), crate::ta::Bound::Weak(0));
        // The guarded send needs x >= 2, unreachable while time is frozen.
        assert!(net.is_deadlock(&s));
    }

    #[test]
    fn committed_location_takes_priority() {
        // R is committed with an internal escape; P/Q's handshake is
        // enabled but must be filtered out.
        let mut sys = handshake_system();
        sys.templates[0].edges[0].guard_clocks.clear();
        sys.templates.push(TimedAutomatonTemplate {
            name: "R".to_string(),
            locations: vec![Location::committed("c0"), Location::new("c1")],
            initial: 0,
            edges: vec![Edge::new(0, 1)],
            clocks: vec![],
            vars: vec![],
        });
        let net = Network::new(sys).unwrap();
        let s = net.initial_state().unwrap();
        let succ = net.successors(&s);
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].0, TransitionLabel::Internal { instance: 2, edge: 0 });
    }

    #[test]
    fn broadcast_fires_alone_without_receivers() {
        let sys = System {
            clock_names: vec![],
            vars: vec![],
            channels: vec![bcast("b")],
            templates: vec![TimedAutomatonTemplate {
                name: "P".to_string(),
                locations: vec![Location::new("s0"), Location::new("s1")],
                initial: 0,
                edges: vec![Edge::new(0, 1).send(0)],
                clocks: vec![],
                vars: vec![],
            }],
        };
        let net = Network::new(sys).unwrap();
        let s = net.initial_state().unwrap();
        let succ = net.successors(&s);
        assert_eq!(succ.len(), 1);
        assert_eq!(
            succ[0].0,
            TransitionLabel::Sync {
                channel: 0,
                sender: (0, 0),
                receivers: vec![],
            }
        );
    }

    #[test]
    fn broadcast_gathers_all_enabled_receivers() {
        let recv = |name: &str| TimedAutomatonTemplate {
            name: name.to_string(),
            locations: vec![Location::new("t0"), Location::new("t1")],
            initial: 0,
            edges: vec![Edge::new(0, 1).receive(0)],
            clocks: vec![],
            vars: vec![],
        };
        let sys = System {
            clock_names: vec![],
            vars: vec![],
            channels: vec![bcast("b")],
            templates: vec![
                TimedAutomatonTemplate {
                    name: "P".to_string(),
                    locations: vec![Location::new("s0"), Location::new("s1")],
                    initial: 0,
                    edges: vec![Edge::new(0, 1).send(0)],
                    clocks: vec![],
                    vars: vec![],
                },
                recv("Q"),
                recv("R"),
            ],
        };
        let net = Network::new(sys).unwrap();
        let s = net.initial_state().unwrap();
        let succ = net.successors(&s);
        assert_eq!(succ.len(), 1);
        match &succ[0].0 {
            TransitionLabel::Sync { receivers, .. } => {
                assert_eq!(receivers, &vec![(1, 0), (2, 0)]);
            }
            other => panic!("expected sync, got {:?}", other),
        }
        assert_eq!(succ[0].1.locs, vec![1, 1, 1]);
    }

    #[test]
    fn out_of_range_assignment_disables_edge() {
        use crate::ta::{IntExpr, VarDecl};
        let sys = System {
            clock_names: vec![],
            vars: vec![VarDecl {
                name: "n".to_string(),
                lo: 0,
                hi: 1,
                init: 1,
            }],
            channels: vec![],
            templates: vec![TimedAutomatonTemplate {
                name: "P".to_string(),
                locations: vec![Location::new("s0"), Location::new("s1")],
                initial: 0,
                edges: vec![Edge::new(0, 1).assign(
                    0,
                    IntExpr::Add(Box::new(IntExpr::Var(0)), Box::new(IntExpr::Const(1))),
                )],
                clocks: vec![],
                vars: vec![0],
            }],
        };
        let net = Network::new(sys).unwrap();
        let s = net.initial_state().unwrap();
        // n + 1 = 2 is outside [0, 1]: the only edge is disabled.
        assert!(net.successors(&s).is_empty());
    }

    #[test]
    fn successor_order_is_deterministic() {
        let net = Network::new(handshake_system()).unwrap();
        let s = net.initial_state().unwrap();
        assert_eq!(net.successors(&s), net.successors(&s));
    }
}
