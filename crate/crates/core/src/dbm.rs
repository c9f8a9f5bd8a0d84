//! Difference bound matrices: the canonical representation of clock zones.
//!
//! Entry (i, j) bounds `x_i − x_j`; row/column 0 is the reference clock, so
//! row 0 carries lower bounds (negated) and column 0 carries upper bounds of
//! individual clocks. Algorithms follow Bengtsson & Yi, "Timed Automata:
//! Semantics, Algorithms and Tools".
//!
//! Bounds are packed into single i64s (2·value + weakness bit, i64::MAX for
//! unbounded) so that tightness comparison is integer comparison and bound
//! addition is a few integer ops.

use crate::ta::{Bound, ClockConstraint, ClockId};
use num_rational::Ratio;

const INF: i64 = i64::MAX;
const LE_ZERO: i64 = 1; // packed Weak(0)

/// Packed bound addition. Strictness wins: the sum is weak only if both
/// addends are weak.
fn badd(a: i64, b: i64) -> i64 {
    if a == INF || b == INF {
        INF
    } else {
        ((a >> 1) + (b >> 1)) << 1 | (a & b & 1)
    }
}

/// A clock zone in canonical (all-pairs-tightest) form.
///
/// Every public operation keeps the matrix canonical, so equality on the
/// entry vector is semantic zone equality and entrywise comparison decides
/// inclusion. Emptiness is an explicit flag set when a contradiction is
/// detected; operations on an empty zone short-circuit.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Dbm {
    dim: usize,
    entries: Vec<i64>,
    empty: bool,
}

impl Dbm {
    /// The zone where all `n` clocks are exactly 0.
    pub fn init_zero(n: usize) -> Dbm {
        let dim = n + 1;
        Dbm {
            dim,
            entries: vec![LE_ZERO; dim * dim],
            empty: false,
        }
    }

    /// Number of rows/columns, i.e. clock count + 1.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    fn raw(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    fn set_raw(&mut self, i: usize, j: usize, v: i64) {
        self.entries[i * self.dim + j] = v;
    }

    /// The bound on `x_i − x_j`.
    pub fn get(&self, i: usize, j: usize) -> Bound {
        Bound::unpack(self.raw(i, j))
    }

    /// Overwrites one entry without re-canonicalizing. Callers must restore
    /// canonical form before handing the zone back out.
    pub fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.set_raw(i, j, b.pack());
    }

    /// Shortest-path closure (Floyd–Warshall over the bound semiring).
    /// Detects emptiness: a negative cycle shows up as a negative diagonal
    /// entry. On an empty result the entries are left as-is and only the
    /// flag is meaningful.
    pub fn canonicalize(&mut self) {
        if self.empty {
            return;
        }
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let dik = self.raw(i, k);
                if dik == INF {
                    continue;
                }
                for j in 0..n {
                    let via = badd(dik, self.raw(k, j));
                    if via < self.raw(i, j) {
                        self.set_raw(i, j, via);
                    }
                }
            }
        }
        for i in 0..n {
            if self.raw(i, i) < LE_ZERO {
                self.empty = true;
                return;
            }
            // Normalize the diagonal: closure can only have left <= 0 weak.
            self.set_raw(i, i, LE_ZERO);
        }
    }

    /// Time elapse: removes upper bounds of all individual clocks, keeping
    /// differences. Canonical in, canonical out.
    pub fn up(&mut self) {
        if self.empty {
            return;
        }
        for i in 1..self.dim {
            self.set_raw(i, 0, INF);
        }
        // Still canonical: any path i -> ... -> 0 now has weight INF unless
        // it avoids column 0 entirely, and those paths were already tight.
    }

    /// Conjoins one constraint, restoring canonical form incrementally.
    pub fn and(&mut self, c: ClockConstraint) {
        if self.empty {
            return;
        }
        let (x, y, b) = (c.left, c.right, c.bound.pack());
        assert!(x < self.dim && y < self.dim, "constraint clock out of range");
        if badd(self.raw(y, x), b) < LE_ZERO {
            self.empty = true;
            return;
        }
        if b < self.raw(x, y) {
            self.set_raw(x, y, b);
            // One-constraint incremental closure: every path can improve
            // only by routing through the tightened edge (x, y).
            for i in 0..self.dim {
                let dix = self.raw(i, x);
                if dix == INF {
                    continue;
                }
                let part = badd(dix, b);
                for j in 0..self.dim {
                    let via = badd(part, self.raw(y, j));
                    if via < self.raw(i, j) {
                        self.set_raw(i, j, via);
                    }
                }
            }
        }
    }

    /// Clock assignment `x := v` with a non-negative constant.
    pub fn assign(&mut self, x: ClockId, v: i64) {
        if self.empty {
            return;
        }
        assert!(x >= 1 && x < self.dim, "cannot assign clock {}", x);
        assert!(v >= 0, "clock assignment must be non-negative");
        let up = Bound::Weak(v).pack();
        let lo = Bound::Weak(-v).pack();
        for i in 0..self.dim {
            self.set_raw(x, i, badd(up, self.raw(0, i)));
            self.set_raw(i, x, badd(self.raw(i, 0), lo));
        }
        // x relates to every other clock exactly as the reference does,
        // shifted by v, so canonical form is preserved.
        self.set_raw(x, x, LE_ZERO);
    }

    /// True iff every valuation in `self` is in `other`. Both must be
    /// canonical and of equal dimension. The empty zone is a subset of
    /// everything.
    pub fn subset(&self, other: &Dbm) -> bool {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        if self.empty {
            return true;
        }
        if other.empty {
            return false;
        }
        self.entries
            .iter()
            .zip(other.entries.iter())
            .all(|(a, b)| a <= b)
    }

    /// Classic per-clock max-constant extrapolation. Bounds above a clock's
    /// max constant become unbounded; bounds below its negation are clamped
    /// to a strict bound. `max[i]` is the constant for clock i (entry 0 is
    /// ignored and treated as 0). Re-canonicalizes.
    pub fn extrapolate(&mut self, max: &[i64]) {
        if self.empty {
            return;
        }
        assert_eq!(max.len(), self.dim, "max-constant table dimension mismatch");
        let mut changed = false;
        for i in 0..self.dim {
            let ki = if i == 0 { 0 } else { max[i] };
            for (j, &mj) in max.iter().enumerate() {
                if i == j {
                    continue;
                }
                let kj = if j == 0 { 0 } else { mj };
                let d = self.raw(i, j);
                if d == INF {
                    continue;
                }
                if d > Bound::Weak(ki).pack() {
                    self.set_raw(i, j, INF);
                    changed = true;
                } else if d < Bound::Strict(-kj).pack() {
                    self.set_raw(i, j, Bound::Strict(-kj).pack());
                    changed = true;
                }
            }
        }
        if changed {
            self.canonicalize();
        }
    }

    /// Membership of a rational valuation (`point[k]` is the value of clock
    /// k+1; the reference clock is implicitly 0).
    pub fn contains(&self, point: &[Ratio<i64>]) -> bool {
        if self.empty {
            return false;
        }
        assert_eq!(point.len() + 1, self.dim, "valuation dimension mismatch");
        let val = |i: usize| {
            if i == 0 {
                Ratio::from_integer(0)
            } else {
                point[i - 1]
            }
        };
        for i in 0..self.dim {
            for j in 0..self.dim {
                let diff = val(i) - val(j);
                match self.get(i, j) {
                    Bound::Unbounded => {}
                    Bound::Weak(c) => {
                        if diff > Ratio::from_integer(c) {
                            return false;
                        }
                    }
                    Bound::Strict(c) => {
                        if diff >= Ratio::from_integer(c) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// The canonical bound on `x_i - x_j`.
    pub fn bound(&self, i: usize, j: usize) -> Bound {
        self.get(i, j)
    }

    /// Renders the zone as a conjunction string. Single-clock ranges come
    /// first (by clock index), then difference bounds that are strictly
    /// tighter than what the single-clock ranges already imply. `names[k]`
    /// is the display name of clock k+1.
    pub fn render(&self, names: &[String]) -> String {
        if self.empty {
            return "false".to_string();
        }
        assert_eq!(names.len() + 1, self.dim, "name table dimension mismatch");
        if self.dim == 1 {
            return "true".to_string();
        }
        let mut parts: Vec<String> = Vec::new();
        for i in 1..self.dim {
            let name = &names[i - 1];
            let hi = self.get(i, 0);
            let lo = self.get(0, i);
            match (lo, hi) {
                (Bound::Weak(l), Bound::Weak(h)) if -l == h => {
                    parts.push(format!("{}=={}", name, h));
                }
                (_, Bound::Unbounded) => match lo {
                    Bound::Weak(l) => parts.push(format!("{}>={}", name, -l)),
                    Bound::Strict(l) => parts.push(format!("{}>{}", name, -l)),
                    Bound::Unbounded => unreachable!("lower bounds are always finite"),
                },
                (lo, hi) => {
                    let (lv, lop) = match lo {
                        Bound::Weak(l) => (-l, "<="),
                        Bound::Strict(l) => (-l, "<"),
                        Bound::Unbounded => unreachable!("lower bounds are always finite"),
                    };
                    let (hv, hop) = match hi {
                        Bound::Weak(h) => (h, "<="),
                        Bound::Strict(h) => (h, "<"),
                        Bound::Unbounded => unreachable!("matched above"),
                    };
                    parts.push(format!("{}{}{}{}{}", lv, lop, name, hop, hv));
                }
            }
        }
        for i in 1..self.dim {
            for j in 1..self.dim {
                if i == j {
                    continue;
                }
                let d = self.raw(i, j);
                // Only difference bounds tighter than the implied path
                // through the reference clock carry information.
                if d != INF && d < badd(self.raw(i, 0), self.raw(0, j)) {
                    if i > j && self.raw(j, i) != INF && badd(d, self.raw(j, i)) == LE_ZERO {
                        // Pinned difference already rendered from (j, i).
                        continue;
                    }
                    let lhs = format!("{}-{}", names[i - 1], names[j - 1]);
                    let rev = self.raw(j, i);
                    if rev != INF && badd(d, rev) == LE_ZERO {
                        parts.push(format!("{}=={}", lhs, d >> 1));
                    } else {
                        match Bound::unpack(d) {
                            Bound::Weak(c) => parts.push(format!("{}<={}", lhs, c)),
                            Bound::Strict(c) => parts.push(format!("{}<{}", lhs, c)),
                            Bound::Unbounded => unreachable!("filtered above"),
                        }
                    }
                }
            }
        }
        parts.join(" && ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ta::ClockConstraint as Cc;

    fn ratios(vals: &[(i64, i64)]) -> Vec<Ratio<i64>> {
        vals.iter().map(|&(n, d)| Ratio::new(n, d)).collect()
    }

    #[test]
    fn init_zero_contains_only_origin() {
        let z = Dbm::init_zero(2);
        assert!(!z.is_empty());
        assert!(z.contains(&ratios(&[(0, 1), (0, 1)])));
        assert!(!z.contains(&ratios(&[(0, 1), (1, 1)])));
        // Degenerate zero-clock zone is nonempty.
        let z0 = Dbm::init_zero(0);
        assert!(!z0.is_empty());
        assert_eq!(z0.render(&[]), "true");
    }

    #[test]
    fn canonicalize_tightens_transitively() {
        // Raw matrix for: 0 <= x <= 5, y >= 0, y - x <= 3, clocks otherwise
        // independent. Closure must derive y <= 8 and x - y <= 5.
        let mut z = Dbm::init_zero(2);
        z.set(1, 0, Bound::Weak(5));
        z.set(2, 0, Bound::Unbounded);
        z.set(1, 2, Bound::Unbounded);
        z.set(2, 1, Bound::Weak(3));
        z.canonicalize();
        assert!(!z.is_empty());
        assert_eq!(z.get(2, 0), Bound::Weak(8));
        assert_eq!(z.get(1, 2), Bound::Weak(5));
        // Idempotence of the full closure.
        let before = z.clone();
        z.canonicalize();
        assert_eq!(z, before);
    }

    #[test]
    fn contradiction_is_empty() {
        let mut z = Dbm::init_zero(1);
        z.up();
        z.and(Cc::at_most(1, 2));
        z.and(Cc::at_least(1, 3));
        assert!(z.is_empty());
    }

    #[test]
    fn up_from_origin_is_diagonal_ray() {
        let mut z = Dbm::init_zero(2);
        z.up();
        assert!(z.contains(&ratios(&[(7, 2), (7, 2)])));
        assert!(!z.contains(&ratios(&[(7, 2), (5, 2)])));
        // Idempotent.
        let before = z.clone();
        z.up();
        assert_eq!(z, before);
    }

    #[test]
    fn up_preserves_differences() {
        // From x=1, y=3: delay gives y - x = 2, x >= 1, upper bounds gone.
        let mut z = Dbm::init_zero(2);
        z.assign(2, 3);
        z.assign(1, 1);
        z.up();
        assert_eq!(z.get(2, 1), Bound::Weak(2));
        assert_eq!(z.get(1, 2), Bound::Weak(-2));
        assert_eq!(z.get(0, 1), Bound::Weak(-1));
        assert_eq!(z.get(1, 0), Bound::Unbounded);
        assert_eq!(z.get(2, 0), Bound::Unbounded);
    }

    #[test]
    fn and_tautology_is_identity() {
        let mut z = Dbm::init_zero(2);
        z.up();
        z.and(Cc::at_most(1, 5));
        let before = z.clone();
        z.and(Cc::at_most(1, 99));
        assert_eq!(z, before);
    }

    #[test]
    fn and_guard_window() {
        // 0 <= x <= 5 intersected with x > 2: the half-open window.
        let mut z = Dbm::init_zero(1);
        z.up();
        z.and(Cc::at_most(1, 5));
        z.and(Cc::above(1, 2));
        assert!(!z.is_empty());
        assert_eq!(z.get(0, 1), Bound::Strict(-2));
        assert_eq!(z.get(1, 0), Bound::Weak(5));
        assert!(z.contains(&ratios(&[(5, 2)])));
        assert!(!z.contains(&ratios(&[(2, 1)])));
        assert_eq!(z.render(&["x".to_string()]), "2<x<=5");
    }

    #[test]
    fn assign_pins_clock_and_frees_relation() {
        // From the delayed diagonal {x = y}, x := 3 leaves y >= 0 with the
        // x-to-y relation dropped to what x==3 and y>=0 imply.
        let mut z = Dbm::init_zero(2);
        z.up();
        z.assign(1, 3);
        assert_eq!(z.get(1, 0), Bound::Weak(3));
        assert_eq!(z.get(0, 1), Bound::Weak(-3));
        assert_eq!(z.get(2, 1), Bound::Unbounded);
        assert_eq!(z.get(0, 2), Bound::Weak(0));
        assert!(z.contains(&ratios(&[(3, 1), (100, 7)])));
        assert!(!z.contains(&ratios(&[(2, 1), (2, 1)])));
        // Assign is idempotent.
        let before = z.clone();
        z.assign(1, 3);
        assert_eq!(z, before);
    }

    #[test]
    fn subset_on_intervals() {
        let mut a = Dbm::init_zero(1);
        a.up();
        a.and(Cc::at_most(1, 2));
        let mut b = Dbm::init_zero(1);
        b.up();
        b.and(Cc::at_most(1, 5));
        assert!(a.subset(&b));
        assert!(!b.subset(&a));
        assert!(a.subset(&a));
        let mut e = a.clone();
        e.and(Cc::at_least(1, 3));
        assert!(e.is_empty());
        assert!(e.subset(&a));
        assert!(!a.subset(&e));
    }

    #[test]
    fn extrapolate_widens_above_max() {
        // {x >= 100} with max constant 5 becomes {x > 5}.
        let mut z = Dbm::init_zero(1);
        z.up();
        z.and(Cc::at_least(1, 100));
        z.extrapolate(&[0, 5]);
        assert_eq!(z.get(0, 1), Bound::Strict(-5));
        assert_eq!(z.get(1, 0), Bound::Unbounded);
        // A zone already within bounds is untouched.
        let mut w = Dbm::init_zero(1);
        w.up();
        w.and(Cc::at_most(1, 4));
        let before = w.clone();
        w.extrapolate(&[0, 5]);
        assert_eq!(w, before);
    }

    #[test]
    fn render_origin_and_empty() {
        let z = Dbm::init_zero(2);
        let names = vec!["x".to_string(), "y".to_string()];
        assert_eq!(z.render(&names), "x==0 && y==0");
        let mut e = Dbm::init_zero(1);
        e.and(Cc::above(1, 0));
        assert!(e.is_empty());
        assert_eq!(e.render(&["x".to_string()]), "false");
    }

    #[test]
    fn render_shows_tight_differences_only() {
        // x = y after delay: difference pinned at 0, ranges unbounded.
        let mut z = Dbm::init_zero(2);
        z.up();
        let names = vec!["x".to_string(), "y".to_string()];
        assert_eq!(z.render(&names), "x>=0 && y>=0 && x-y==0");
        // After x := 3 the difference bound is implied, so it disappears.
        let mut w = z.clone();
        w.assign(1, 3);
        assert_eq!(w.render(&names), "x==3 && y>=0");
    }
}
