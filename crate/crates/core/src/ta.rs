//! Domain types for timed automata: clocks, bounds, constraints, locations,
//! edges, channels, and process templates.
//!
//! Terminology follows the standard literature (Alur & Dill; Bengtsson & Yi,
//! "Timed Automata: Semantics, Algorithms and Tools"). A network is a list of
//! templates over one flat clock/variable namespace; see the `network` module.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Index of a clock. 0 is the implicit reference clock (always exactly 0);
/// user clocks are 1..=N. The same indexing is used in templates and in DBMs.
pub type ClockId = usize;

/// Index of a location within its template.
pub type LocId = usize;

/// Index of a channel within the system declaration.
pub type ChannelId = usize;

/// Index of an integer variable within the system declaration.
pub type VarId = usize;

/// An upper bound on a clock difference: the `⋈ c` part of `x − y ⋈ c`.
///
/// Ordering is by tightness: `Strict(v) < Weak(v) < Strict(v+1)`, and
/// `Unbounded` is greater than every finite bound.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum Bound {
    /// `x − y < v`
    Strict(i64),
    /// `x − y <= v`
    Weak(i64),
    /// no constraint
    Unbounded,
}

impl Bound {
    /// Packed integer encoding: `2v` for strict, `2v + 1` for weak, with a
    /// dedicated sentinel for unbounded. Integer comparison on the packed
    /// form coincides with bound tightness.
    pub(crate) fn pack(self) -> i64 {
        match self {
            Bound::Strict(v) => v << 1,
            Bound::Weak(v) => (v << 1) | 1,
            Bound::Unbounded => i64::MAX,
        }
    }

    pub(crate) fn unpack(raw: i64) -> Bound {
        if raw == i64::MAX {
            Bound::Unbounded
        } else if raw & 1 == 1 {
            Bound::Weak(raw >> 1)
        } else {
            Bound::Strict(raw >> 1)
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Bound::Unbounded)
    }

    /// The finite bound value, if any.
    pub fn value(self) -> Option<i64> {
        match self {
            Bound::Strict(v) | Bound::Weak(v) => Some(v),
            Bound::Unbounded => None,
        }
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Bound) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Bound) -> std::cmp::Ordering {
        self.pack().cmp(&other.pack())
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Strict(v) => write!(f, "< {}", v),
            Bound::Weak(v) => write!(f, "<= {}", v),
            Bound::Unbounded => write!(f, "< inf"),
        }
    }
}

/// An atomic clock constraint `left − right ⋈ c` with `⋈ ∈ {<, <=}`.
///
/// Single-clock conditions use the reference clock: `x <= 5` is
/// `x − 0 <= 5`; lower bounds are flipped, so `x >= 3` is `0 − x <= −3`.
/// Equalities are desugared into two conjuncts by the builders/parser.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub struct ClockConstraint {
    pub left: ClockId,
    pub right: ClockId,
    pub bound: Bound,
}

impl ClockConstraint {
    pub fn new(left: ClockId, right: ClockId, bound: Bound) -> ClockConstraint {
        ClockConstraint { left, right, bound }
    }

    /// `x <= c` (or `x < c` with a strict bound).
    pub fn upper(x: ClockId, bound: Bound) -> ClockConstraint {
        ClockConstraint::new(x, 0, bound)
    }

    /// `x >= c`, encoded as `0 − x <= −c`.
    pub fn at_least(x: ClockId, c: i64) -> ClockConstraint {
        ClockConstraint::new(0, x, Bound::Weak(-c))
    }

    /// `x > c`, encoded as `0 − x < −c`.
    pub fn above(x: ClockId, c: i64) -> ClockConstraint {
        ClockConstraint::new(0, x, Bound::Strict(-c))
    }

    /// `x <= c`.
    pub fn at_most(x: ClockId, c: i64) -> ClockConstraint {
        ClockConstraint::new(x, 0, Bound::Weak(c))
    }

    /// `x < c`.
    pub fn below(x: ClockId, c: i64) -> ClockConstraint {
        ClockConstraint::new(x, 0, Bound::Strict(c))
    }

    /// The complement constraint: `¬(x − y <= c)` is `y − x < −c` and
    /// `¬(x − y < c)` is `y − x <= −c`. An involution on finite bounds.
    pub fn negate(self) -> ClockConstraint {
        let bound = match self.bound {
            Bound::Weak(v) => Bound::Strict(-v),
            Bound::Strict(v) => Bound::Weak(-v),
            Bound::Unbounded => panic!("cannot negate an unbounded constraint"),
        };
        ClockConstraint::new(self.right, self.left, bound)
    }

    /// True if this is an upper-bound or diagonal form, the only shapes
    /// allowed in location invariants: `x − 0 ⋈ c` or `x − y ⋈ c` with
    /// x, y both real clocks. Lower bounds on single clocks (left = 0)
    /// are not invariants.
    pub fn is_invariant_form(self) -> bool {
        self.left != 0
    }
}

/// Degree of urgency of a location.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum LocationKind {
    Normal,
    /// Time may not pass while any process is here.
    Urgent,
    /// Urgent, and outgoing transitions take priority over all transitions
    /// that leave only non-committed locations.
    Committed,
}

/// A control location of one template.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Location {
    pub name: String,
    pub kind: LocationKind,
    /// Conjunction; empty means `true`. Only upper-bound and diagonal
    /// constraint forms are allowed here.
    pub invariant: Vec<ClockConstraint>,
}

impl Location {
    pub fn new(name: &str) -> Location {
        Location {
            name: name.to_string(),
            kind: LocationKind::Normal,
            invariant: Vec::new(),
        }
    }

    pub fn urgent(name: &str) -> Location {
        Location {
            kind: LocationKind::Urgent,
            ..Location::new(name)
        }
    }

    pub fn committed(name: &str) -> Location {
        Location {
            kind: LocationKind::Committed,
            ..Location::new(name)
        }
    }

    pub fn with_invariant(mut self, inv: Vec<ClockConstraint>) -> Location {
        self.invariant = inv;
        self
    }
}

/// Synchronization channel kinds. Binary channels pair exactly one sender
/// with one receiver; broadcast channels pair one sender with every process
/// currently able to receive.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    Binary,
    Broadcast,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ChannelDecl {
    pub name: String,
    pub kind: ChannelKind,
}

/// Action label of an edge: the internal action, `c!`, or `c?`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum SyncLabel {
    Internal,
    Send(ChannelId),
    Receive(ChannelId),
}

/// Bounded integer variable declaration. Values outside `[lo, hi]` are
/// unrepresentable: an update that would leave the range disables its edge.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
    pub init: i64,
}

/// Integer expression over variables and constants.
#[derive(Clone, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum IntExpr {
    Const(i64),
    Var(VarId),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
}

impl IntExpr {
    /// Evaluates under a variable valuation. Total: plain i64 arithmetic
    /// wrapping is unreachable because declared ranges keep values small;
    /// checked ops guard against pathological expressions anyway.
    pub fn eval(&self, vars: &[i64]) -> Option<i64> {
        match self {
            IntExpr::Const(c) => Some(*c),
            IntExpr::Var(v) => vars.get(*v).copied(),
            IntExpr::Add(a, b) => a.eval(vars)?.checked_add(b.eval(vars)?),
            IntExpr::Sub(a, b) => a.eval(vars)?.checked_sub(b.eval(vars)?),
            IntExpr::Mul(a, b) => a.eval(vars)?.checked_mul(b.eval(vars)?),
        }
    }

    pub fn max_var(&self) -> Option<VarId> {
        match self {
            IntExpr::Const(_) => None,
            IntExpr::Var(v) => Some(*v),
            IntExpr::Add(a, b) | IntExpr::Sub(a, b) | IntExpr::Mul(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }
}

/// Comparison operator for integer guards.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    /// The complement comparison, for safety-as-reachability rewriting.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Eq, // handled specially by callers; == has no single complement
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
        }
    }
}

/// Integer predicate `expr ⋈ c` appearing in a guard.
#[derive(Clone, PartialEq, Eq, Debug, Hash, Serialize, Deserialize)]
pub struct IntGuard {
    pub expr: IntExpr,
    pub op: CmpOp,
    pub rhs: i64,
}

impl IntGuard {
    pub fn holds(&self, vars: &[i64]) -> bool {
        match self.expr.eval(vars) {
            Some(v) => self.op.holds(v, self.rhs),
            None => false,
        }
    }
}

/// One edge of a template.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Edge {
    pub source: LocId,
    pub target: LocId,
    pub guard_clocks: Vec<ClockConstraint>,
    pub guard_ints: Vec<IntGuard>,
    pub sync: SyncLabel,
    /// Clock updates `x := c` with a non-negative constant. Resets are the
    /// common case (c = 0); assignment to a positive constant is allowed.
    pub resets: Vec<(ClockId, i64)>,
    /// Integer updates `n := expr`, applied left to right.
    pub assigns: Vec<(VarId, IntExpr)>,
}

impl Edge {
    pub fn new(source: LocId, target: LocId) -> Edge {
        Edge {
            source,
            target,
            guard_clocks: Vec::new(),
            guard_ints: Vec::new(),
            sync: SyncLabel::Internal,
            resets: Vec::new(),
            assigns: Vec::new(),
        }
    }

    pub fn guard(mut self, c: ClockConstraint) -> Edge {
        self.guard_clocks.push(c);
        self
    }

    pub fn guard_int(mut self, g: IntGuard) -> Edge {
        self.guard_ints.push(g);
        self
    }

    pub fn send(mut self, c: ChannelId) -> Edge {
        self.sync = SyncLabel::Send(c);
        self
    }

    pub fn receive(mut self, c: ChannelId) -> Edge {
        self.sync = SyncLabel::Receive(c);
        self
    }

    pub fn reset(mut self, x: ClockId, v: i64) -> Edge {
        self.resets.push((x, v));
        self
    }

    pub fn assign(mut self, v: VarId, e: IntExpr) -> Edge {
        self.assigns.push((v, e));
        self
    }
}

/// One process template. Clock, variable, and channel indices refer to the
/// flat system-wide namespaces; the signature carries their sizes so a
/// template can be validated on its own.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TimedAutomatonTemplate {
    pub name: String,
    pub locations: Vec<Location>,
    pub initial: LocId,
    pub edges: Vec<Edge>,
    /// Global clock ids this template references (its own clocks, in a
    /// network where clocks are not shared between processes).
    pub clocks: Vec<ClockId>,
    /// Global variable ids this template references.
    pub vars: Vec<VarId>,
}

/// Sizes of the system-wide namespaces, for standalone template validation.
#[derive(Clone, Copy, Debug, Default)]
pub struct SystemSignature {
    pub n_clocks: usize,
    pub n_vars: usize,
    pub n_channels: usize,
}

/// A validation finding, tied to the template part that produced it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    pub template: String,
    /// "location i" or "edge i" or "template".
    pub place: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.template, self.place, self.message)
    }
}

fn check_constraint(
    c: &ClockConstraint,
    sig: &SystemSignature,
    t: &str,
    place: &str,
    out: &mut Vec<Diagnostic>,
) {
    let diag = |msg: String, out: &mut Vec<Diagnostic>| {
        out.push(Diagnostic {
            template: t.to_string(),
            place: place.to_string(),
            message: msg,
        })
    };
    if c.left == c.right {
        diag(format!("constraint relates clock {} to itself", c.left), out);
    }
    if c.left > sig.n_clocks {
        diag(format!("unknown clock {}", c.left), out);
    }
    if c.right > sig.n_clocks {
        diag(format!("unknown clock {}", c.right), out);
    }
    if c.bound.is_unbounded() {
        diag("constraint bound must be finite".to_string(), out);
    }
}

/// Structural validation of one template against the system signature.
/// Returns an empty list iff the template is well-formed.
pub fn validate_template(t: &TimedAutomatonTemplate, sig: &SystemSignature) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |place: String, message: String, out: &mut Vec<Diagnostic>| {
        out.push(Diagnostic {
            template: t.name.clone(),
            place,
            message,
        })
    };

    if t.locations.is_empty() {
        diag(
            "template".to_string(),
            "template has no locations".to_string(),
            &mut out,
        );
        return out;
    }
    if t.initial >= t.locations.len() {
        diag(
            "template".to_string(),
            format!("dangling initial location {}", t.initial),
            &mut out,
        );
    }
    for (i, loc) in t.locations.iter().enumerate() {
        let place = format!("location {}", i);
        for c in &loc.invariant {
            check_constraint(c, sig, &t.name, &place, &mut out);
            if !c.is_invariant_form() {
                diag(
                    place.clone(),
                    "invariant constraints must be upper-bound or diagonal form".to_string(),
                    &mut out,
                );
            }
        }
    }
    for (i, e) in t.edges.iter().enumerate() {
        let place = format!("edge {}", i);
        if e.source >= t.locations.len() {
            diag(place.clone(), format!("dangling source {}", e.source), &mut out);
        }
        if e.target >= t.locations.len() {
            diag(place.clone(), format!("dangling target {}", e.target), &mut out);
        }
        for c in &e.guard_clocks {
            check_constraint(c, sig, &t.name, &place, &mut out);
        }
        for g in &e.guard_ints {
            if let Some(v) = g.expr.max_var() {
                if v >= sig.n_vars {
                    diag(place.clone(), format!("unknown variable {}", v), &mut out);
                }
            }
        }
        match e.sync {
            SyncLabel::Send(c) | SyncLabel::Receive(c) => {
                if c >= sig.n_channels {
                    diag(place.clone(), format!("unknown channel {}", c), &mut out);
                }
            }
            SyncLabel::Internal => {}
        }
        for &(x, v) in &e.resets {
            if x == 0 || x > sig.n_clocks {
                diag(place.clone(), format!("cannot assign clock {}", x), &mut out);
            }
            if v < 0 {
                diag(
                    place.clone(),
                    format!("clock assignment to negative constant {}", v),
                    &mut out,
                );
            }
        }
        for (v, expr) in &e.assigns {
            if *v >= sig.n_vars {
                diag(place.clone(), format!("unknown variable {}", v), &mut out);
            }
            if let Some(w) = expr.max_var() {
                if w >= sig.n_vars {
                    diag(place.clone(), format!("unknown variable {}", w), &mut out);
                }
            }
        }
    }
    out
}
