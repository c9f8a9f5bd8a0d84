//! Temporal properties over network states: the query forms `E<>`, `A[]`,
//! `E[]`, `A<>`, and leads-to, plus state formulas built from location,
//! integer, clock, and deadlock atoms.
//!
//! Clock atoms are evaluated existentially on a symbolic state: the state
//! satisfies `x > 5` if some valuation in its zone does. Universal queries
//! are rewritten through negation, so `A[] x <= 5` fails exactly when some
//! reachable valuation violates the bound.

use crate::dbm::Dbm;
use crate::network::{Network, SymbolicState};
use crate::ta::{ClockConstraint, ClockId, CmpOp, LocId, VarId};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StateFormula {
    True,
    False,
    /// "Instance is at this location."
    Location { instance: usize, loc: LocId },
    IntCmp { var: VarId, op: CmpOp, rhs: i64 },
    ClockCmp { clock: ClockId, op: CmpOp, rhs: i64 },
    Deadlock,
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
    Or(Box<StateFormula>, Box<StateFormula>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Query {
    ExistsEventually(StateFormula),
    AlwaysGlobally(StateFormula),
    ExistsGlobally(StateFormula),
    AlwaysEventually(StateFormula),
    LeadsTo(StateFormula, StateFormula),
}

/// A literal of a disjunctive normal form conjunct.
#[derive(Clone, Debug)]
pub enum Literal {
    Constant(bool),
    Location {
        instance: usize,
        loc: LocId,
        positive: bool,
    },
    Int {
        var: VarId,
        op: CmpOp,
        rhs: i64,
    },
    /// Clock literal already lowered to DBM constraint form. Equality
    /// contributes two of these.
    Clock(ClockConstraint),
    Deadlock {
        positive: bool,
    },
}

/// One conjunct of the DNF; a state satisfies it when all literals hold
/// (clock literals jointly: their conjunction must intersect the zone).
pub type Conjunct = Vec<Literal>;

fn clock_atom_to_constraints(clock: ClockId, op: CmpOp, rhs: i64, out: &mut Conjunct) {
    match op {
        CmpOp::Lt => out.push(Literal::Clock(ClockConstraint::below(clock, rhs))),
        CmpOp::Le => out.push(Literal::Clock(ClockConstraint::at_most(clock, rhs))),
        CmpOp::Ge => out.push(Literal::Clock(ClockConstraint::at_least(clock, rhs))),
        CmpOp::Gt => out.push(Literal::Clock(ClockConstraint::above(clock, rhs))),
        CmpOp::Eq => {
            out.push(Literal::Clock(ClockConstraint::at_most(clock, rhs)));
            out.push(Literal::Clock(ClockConstraint::at_least(clock, rhs)));
        }
    }
}

/// Lowers a formula to DNF over literals, pushing negation inward. Negated
/// equalities split into strict disjunctions, which is where most of the
/// fan-out comes from; query formulas are small, so the blowup is harmless.
pub fn to_dnf(f: &StateFormula) -> Vec<Conjunct> {
    fn go(f: &StateFormula, neg: bool) -> Vec<Conjunct> {
        match f {
            StateFormula::True => vec![vec![Literal::Constant(!neg)]],
            StateFormula::False => vec![vec![Literal::Constant(neg)]],
            StateFormula::Location { instance, loc } => vec![vec![Literal::Location {
                instance: *instance,
                loc: *loc,
                positive: !neg,
            }]],
            StateFormula::IntCmp { var, op, rhs } => {
                if !neg {
                    vec![vec![Literal::Int {
                        var: *var,
                        op: *op,
                        rhs: *rhs,
                    }]]
                } else {
                    match op {
                        CmpOp::Eq => vec![
                            vec![Literal::Int {
                                var: *var,
                                op: CmpOp::Lt,
                                rhs: *rhs,
                            }],
                            vec![Literal::Int {
                                var: *var,
                                op: CmpOp::Gt,
                                rhs: *rhs,
                            }],
                        ],
                        other => vec![vec![Literal::Int {
                            var: *var,
                            op: other.negate(),
                            rhs: *rhs,
                        }]],
                    }
                }
            }
            StateFormula::ClockCmp { clock, op, rhs } => {
                let mut cases: Vec<(CmpOp, i64)> = Vec::new();
                if !neg {
                    cases.push((*op, *rhs));
                } else {
                    match op {
                        CmpOp::Eq => {
                            cases.push((CmpOp::Lt, *rhs));
                            cases.push((CmpOp::Gt, *rhs));
                        }
                        other => cases.push((other.negate(), *rhs)),
                    }
                }
                cases
                    .into_iter()
                    .map(|(op, rhs)| {
                        let mut c = Vec::new();
                        clock_atom_to_constraints(*clock, op, rhs, &mut c);
                        c
                    })
                    .collect()
            }
            StateFormula::Deadlock => vec![vec![Literal::Deadlock { positive: !neg }]],
            StateFormula::Not(inner) => go(inner, !neg),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                let conjunction = matches!(f, StateFormula::And(..)) != neg;
                let da = go(a, neg);
                let db = go(b, neg);
                if conjunction {
                    let mut out = Vec::new();
                    for ca in &da {
                        for cb in &db {
                            let mut c = ca.clone();
                            c.extend(cb.iter().cloned());
                            out.push(c);
                        }
                    }
                    out
                } else {
                    let mut out = da;
                    out.extend(db);
                    out
                }
            }
        }
    }
    go(f, false)
}

/// Evaluates one conjunct on a symbolic state. The deadlock literal needs
/// the successor relation, so the network comes along.
pub fn conjunct_holds(net: &Network, s: &SymbolicState, c: &Conjunct) -> bool {
    let mut zone: Option<Dbm> = None;
    for lit in c {
        match lit {
            Literal::Constant(b) => {
                if !b {
                    return false;
                }
            }
            Literal::Location {
                instance,
                loc,
                positive,
            } => {
                if (s.locs[*instance] == *loc) != *positive {
                    return false;
                }
            }
            Literal::Int { var, op, rhs } => {
                if !op.holds(s.ints[*var], *rhs) {
                    return false;
                }
            }
            Literal::Clock(cc) => {
                let z = zone.get_or_insert_with(|| s.zone.clone());
                z.and(*cc);
                if z.is_empty() {
                    return false;
                }
            }
            Literal::Deadlock { positive } => {
                if net.is_deadlock(s) != *positive {
                    return false;
                }
            }
        }
    }
    true
}

/// Existential satisfaction of a formula on a symbolic state: some
/// valuation of the zone satisfies it.
pub fn formula_holds(net: &Network, s: &SymbolicState, dnf: &[Conjunct]) -> bool {
    dnf.iter().any(|c| conjunct_holds(net, s, c))
}

impl StateFormula {
    pub fn and(self, other: StateFormula) -> StateFormula {
        StateFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: StateFormula) -> StateFormula {
        StateFormula::Or(Box::new(self), Box::new(other))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> StateFormula {
        StateFormula::Not(Box::new(self))
    }

    pub fn contains_deadlock(&self) -> bool {
        match self {
            StateFormula::Deadlock => true,
            StateFormula::Not(f) => f.contains_deadlock(),
            StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                a.contains_deadlock() || b.contains_deadlock()
            }
            _ => false,
        }
    }

    /// Clock constants mentioned by the formula, for raising the
    /// extrapolation bounds before exploration.
    pub fn clock_consts(&self) -> Vec<(ClockId, i64)> {
        let mut out = Vec::new();
        fn walk(f: &StateFormula, out: &mut Vec<(ClockId, i64)>) {
            match f {
                StateFormula::ClockCmp { clock, rhs, .. } => out.push((*clock, *rhs)),
                StateFormula::Not(g) => walk(g, out),
                StateFormula::And(a, b) | StateFormula::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        walk(self, &mut out);
        out
    }
}

impl Query {
    pub fn formulas(&self) -> Vec<&StateFormula> {
        match self {
            Query::ExistsEventually(f)
            | Query::AlwaysGlobally(f)
            | Query::ExistsGlobally(f)
            | Query::AlwaysEventually(f) => vec![f],
            Query::LeadsTo(a, b) => vec![a, b],
        }
    }
}

/// Canonical text rendering, matching the query-file syntax.
pub fn render_formula(net: &Network, f: &StateFormula) -> String {
    fn prec(f: &StateFormula) -> u8 {
        match f {
            StateFormula::Or(..) => 0,
            StateFormula::And(..) => 1,
            StateFormula::Not(..) => 2,
            _ => 3,
        }
    }
    fn wrap(net: &Network, f: &StateFormula, min: u8) -> String {
        let s = go(net, f);
        if prec(f) < min {
            format!("({})", s)
        } else {
            s
        }
    }
    fn op_str(op: CmpOp) -> &'static str {
        match op {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
    fn go(net: &Network, f: &StateFormula) -> String {
        match f {
            StateFormula::True => "true".to_string(),
            StateFormula::False => "false".to_string(),
            StateFormula::Location { instance, loc } => {
                let t = &net.system.templates[*instance];
                format!("{}.{}", t.name, t.locations[*loc].name)
            }
            StateFormula::IntCmp { var, op, rhs } => {
                format!("{} {} {}", net.system.vars[*var].name, op_str(*op), rhs)
            }
            StateFormula::ClockCmp { clock, op, rhs } => format!(
                "{} {} {}",
                net.system.clock_names[*clock - 1],
                op_str(*op),
                rhs
            ),
            StateFormula::Deadlock => "deadlock".to_string(),
            StateFormula::Not(g) => format!("not {}", wrap(net, g, 3)),
            StateFormula::And(a, b) => {
                format!("{} and {}", wrap(net, a, 1), wrap(net, b, 2))
            }
            StateFormula::Or(a, b) => {
                format!("{} or {}", wrap(net, a, 0), wrap(net, b, 1))
            }
        }
    }
    go(net, f)
}

pub fn render_query(net: &Network, q: &Query) -> String {
    match q {
        Query::ExistsEventually(f) => format!("E<> {}", render_formula(net, f)),
        Query::AlwaysGlobally(f) => format!("A[] {}", render_formula(net, f)),
        Query::ExistsGlobally(f) => format!("E[] {}", render_formula(net, f)),
        Query::AlwaysEventually(f) => format!("A<> {}", render_formula(net, f)),
        Query::LeadsTo(a, b) => format!(
            "{} --> {}",
            render_formula(net, a),
            render_formula(net, b)
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dnf_of_negated_conjunction() {
        let f = StateFormula::Location { instance: 0, loc: 1 }
            .and(StateFormula::IntCmp {
                var: 0,
                op: CmpOp::Eq,
                rhs: 3,
            })
            .not();
        let dnf = to_dnf(&f);
        // not (L and n == 3)  =>  not L, or n < 3, or n > 3.
        assert_eq!(dnf.len(), 3);
    }

    #[test]
    fn dnf_lowers_clock_equality_to_two_constraints() {
        let f = StateFormula::ClockCmp {
            clock: 1,
            op: CmpOp::Eq,
            rhs: 4,
        };
        let dnf = to_dnf(&f);
        assert_eq!(dnf.len(), 1);
        assert_eq!(dnf[0].len(), 2);
    }
}
