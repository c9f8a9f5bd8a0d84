//! Randomized validation of the DBM algebra against point semantics.
//!
//! Every operation is checked on at least ten thousand sampled rational
//! valuations per test against an independent evaluator that works
//! directly on the defining constraint lists, so a bug in the packed
//! bound arithmetic cannot hide behind itself. All sampling is seeded;
//! failures reproduce exactly.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tamc::dbm::Dbm;
use tamc::ta::{Bound, ClockConstraint};

type Q = Ratio<i64>;

fn q(n: i64) -> Q {
    Ratio::from_integer(n)
}

/// The zone `x_i >= 0` for all clocks: no upper bounds, no difference
/// bounds. Starting point for building random zones by conjunction.
fn universe(n: usize) -> Dbm {
    let mut d = Dbm::init_zero(n);
    for i in 1..=n {
        d.set(i, 0, Bound::Unbounded);
        for j in 1..=n {
            if i != j {
                d.set(i, j, Bound::Unbounded);
            }
        }
    }
    d.canonicalize();
    d
}

fn rand_bound(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Bound {
    let v = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.5) {
        Bound::Weak(v)
    } else {
        Bound::Strict(v)
    }
}

/// A random atomic constraint over clocks 1..=n (0 is the reference).
fn rand_constraint(rng: &mut ChaCha8Rng, n: usize) -> ClockConstraint {
    loop {
        let x = rng.gen_range(0..=n);
        let y = rng.gen_range(0..=n);
        if x == y {
            continue;
        }
        let b = if y == 0 {
            rand_bound(rng, 0, 10) // upper bound on clock x
        } else if x == 0 {
            rand_bound(rng, -8, 0) // lower bound on clock y
        } else {
            rand_bound(rng, -6, 6) // difference bound
        };
        return ClockConstraint::new(x, y, b);
    }
}

/// A zone built by conjoining random constraints onto the universe,
/// together with its defining list. May be empty.
fn rand_zone(rng: &mut ChaCha8Rng, n: usize) -> (Dbm, Vec<ClockConstraint>) {
    rand_zone_upto(rng, n, 6)
}

/// Same, with a cap on the constraint count; fewer constraints keep more
/// of the generated zones non-empty.
fn rand_zone_upto(rng: &mut ChaCha8Rng, n: usize, kmax: usize) -> (Dbm, Vec<ClockConstraint>) {
    let mut d = universe(n);
    let k = rng.gen_range(0..=kmax);
    let mut cons = Vec::with_capacity(k);
    for _ in 0..k {
        let c = rand_constraint(rng, n);
        d.and(c);
        cons.push(c);
    }
    (d, cons)
}

/// A random valuation in a box comfortably larger than any constant used.
fn rand_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<Q> {
    (0..n)
        .map(|_| Ratio::new(rng.gen_range(0..=48), rng.gen_range(1..=4)))
        .collect()
}

/// Direct evaluation of one constraint on a valuation (`pt[k]` is clock
/// k+1, the reference clock is 0).
fn holds(c: ClockConstraint, pt: &[Q]) -> bool {
    let val = |i: usize| if i == 0 { q(0) } else { pt[i - 1] };
    let diff = val(c.left) - val(c.right);
    match c.bound {
        Bound::Weak(v) => diff <= q(v),
        Bound::Strict(v) => diff < q(v),
        Bound::Unbounded => true,
    }
}

/// Reference semantics of a generated zone: the constraint list plus the
/// implicit non-negativity of every clock.
fn in_zone(cons: &[ClockConstraint], pt: &[Q]) -> bool {
    pt.iter().all(|v| *v >= q(0)) && cons.iter().all(|&c| holds(c, pt))
}

// -------------------------------------------------------------------
// One-dimensional rational intervals with open/closed endpoints, for
// deciding existential questions (is there a delay d, a value w) that
// the packed-bound code answers via matrix operations.

#[derive(Clone, Copy)]
struct Cut {
    val: Option<Q>, // None = unbounded
    strict: bool,
}

impl Cut {
    const FREE: Cut = Cut { val: None, strict: false };

    fn at_least(v: Q, strict: bool) -> Cut {
        Cut { val: Some(v), strict }
    }
}

/// Tightens a lower cut: keep the larger value, strictness wins ties.
fn raise(lo: &mut Cut, c: Cut) {
    if let Some(cv) = c.val {
        match lo.val {
            None => *lo = c,
            Some(lv) if cv > lv => *lo = c,
            Some(lv) if cv == lv && c.strict => lo.strict = true,
            _ => {}
        }
    }
}

/// Tightens an upper cut: keep the smaller value, strictness wins ties.
fn lower(hi: &mut Cut, c: Cut) {
    if let Some(cv) = c.val {
        match hi.val {
            None => *hi = c,
            Some(hv) if cv < hv => *hi = c,
            Some(hv) if cv == hv && c.strict => hi.strict = true,
            _ => {}
        }
    }
}

fn feasible(lo: Cut, hi: Cut) -> bool {
    match (lo.val, hi.val) {
        (Some(l), Some(h)) => l < h || (l == h && !lo.strict && !hi.strict),
        _ => true,
    }
}

/// Does some `d >= 0` put `pt - d` into the zone? Decides membership in
/// the delay closure straight from the constraint list.
fn in_delayed_zone(cons: &[ClockConstraint], pt: &[Q]) -> bool {
    let mut dlo = Cut::at_least(q(0), false);
    let mut dhi = Cut::FREE;
    // Implicit x_i >= 0 before the delay: d <= pt[i].
    for &v in pt {
        lower(&mut dhi, Cut::at_least(v, false));
    }
    for &c in cons {
        match (c.left, c.right, c.bound) {
            (_, _, Bound::Unbounded) => {}
            (x, 0, b) => {
                // pt[x] - d {<, <=} v: a lower cut on d.
                let (v, strict) = unpack(b);
                raise(&mut dlo, Cut::at_least(pt[x - 1] - v, strict));
            }
            (0, y, b) => {
                // d - pt[y] {<, <=} v: an upper cut on d.
                let (v, strict) = unpack(b);
                lower(&mut dhi, Cut::at_least(pt[y - 1] + v, strict));
            }
            _ => {
                // Differences between two clocks are delay-invariant.
                if !holds(c, pt) {
                    return false;
                }
            }
        }
    }
    feasible(dlo, dhi)
}

/// Does `pt` lie in the zone after `x := v`? True iff `pt[x] == v` and
/// some non-negative `w` makes `pt[x -> w]` satisfy the list.
fn in_assigned_zone(cons: &[ClockConstraint], pt: &[Q], x: usize, v: i64) -> bool {
    if pt[x - 1] != q(v) {
        return false;
    }
    if pt.iter().any(|p| *p < q(0)) {
        return false;
    }
    let mut wlo = Cut::at_least(q(0), false);
    let mut whi = Cut::FREE;
    for &c in cons {
        if c.bound == Bound::Unbounded {
            continue;
        }
        let (bv, strict) = unpack(c.bound);
        if c.left == x && c.right == x {
            unreachable!("constraints relate distinct clocks");
        } else if c.left == x {
            // w - other {<, <=} bv: upper cut.
            let other = if c.right == 0 { q(0) } else { pt[c.right - 1] };
            lower(&mut whi, Cut::at_least(other + bv, strict));
        } else if c.right == x {
            // other - w {<, <=} bv: lower cut.
            let other = if c.left == 0 { q(0) } else { pt[c.left - 1] };
            raise(&mut wlo, Cut::at_least(other - bv, strict));
        } else if !holds(c, pt) {
            return false;
        }
    }
    feasible(wlo, whi)
}

fn unpack(b: Bound) -> (Q, bool) {
    match b {
        Bound::Weak(v) => (q(v), false),
        Bound::Strict(v) => (q(v), true),
        Bound::Unbounded => panic!("finite bound expected"),
    }
}

/// A random valuation inside a non-empty canonical zone, chosen one
/// coordinate at a time. Canonical form guarantees every intermediate
/// interval is non-empty.
fn point_inside(d: &Dbm, rng: &mut ChaCha8Rng) -> Vec<Q> {
    assert!(!d.is_empty(), "cannot sample the empty zone");
    let n = d.dim() - 1;
    let mut pt: Vec<Q> = Vec::with_capacity(n);
    for k in 1..=n {
        let mut lo = Cut::at_least(q(0), false);
        let mut hi = Cut::FREE;
        let fixed = |i: usize| if i == 0 { q(0) } else { pt[i - 1] };
        for f in 0..k {
            match d.bound(k, f) {
                Bound::Unbounded => {}
                b => {
                    let (v, s) = unpack(b);
                    lower(&mut hi, Cut::at_least(fixed(f) + v, s));
                }
            }
            match d.bound(f, k) {
                Bound::Unbounded => {}
                b => {
                    let (v, s) = unpack(b);
                    raise(&mut lo, Cut::at_least(fixed(f) - v, s));
                }
            }
        }
        let l = lo.val.expect("clocks are bounded below");
        let choice = match hi.val {
            None => {
                let bump = q(rng.gen_range(0..=4)) + if lo.strict { Ratio::new(1, 4) } else { q(0) };
                l + bump
            }
            Some(h) => {
                if l == h {
                    assert!(!lo.strict && !hi.strict, "empty coordinate interval");
                    l
                } else {
                    let den = 8;
                    let num = rng.gen_range(1..den);
                    l + (h - l) * Ratio::new(num, den)
                }
            }
        };
        pt.push(choice);
    }
    assert!(d.contains(&pt), "constructed point escaped its zone");
    pt
}

// -------------------------------------------------------------------

#[test]
fn construction_matches_direct_constraint_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut samples = 0usize;
    for round in 0..500 {
        let n = 1 + round % 4;
        let (d, cons) = rand_zone(&mut rng, n);
        for _ in 0..18 {
            let pt = rand_point(&mut rng, n);
            assert_eq!(
                d.contains(&pt),
                in_zone(&cons, &pt),
                "construction disagrees on {:?} for {:?}",
                pt,
                cons
            );
            samples += 1;
        }
        if !d.is_empty() {
            for _ in 0..6 {
                let pt = point_inside(&d, &mut rng);
                assert!(in_zone(&cons, &pt), "interior point violates the list");
                samples += 1;
            }
        }
    }
    assert!(samples >= 10_000, "only {} samples", samples);
}

#[test]
fn canonicalize_preserves_the_solution_set_and_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut samples = 0usize;
    for round in 0..500 {
        let n = 1 + round % 4;
        // A raw, deliberately non-canonical matrix.
        let mut raw = universe(n);
        for _ in 0..rng.gen_range(0..=8) {
            let i = rng.gen_range(0..=n);
            let j = rng.gen_range(0..=n);
            if i == j {
                continue;
            }
            raw.set(i, j, rand_bound(&mut rng, -8, 10));
        }
        let mut canon = raw.clone();
        canon.canonicalize();
        let mut twice = canon.clone();
        twice.canonicalize();
        assert_eq!(canon, twice, "canonicalize is not idempotent");
        // Closure may not change the represented set. Entry evaluation on
        // the raw matrix is honest even without canonical form.
        for _ in 0..22 {
            let pt = rand_point(&mut rng, n);
            assert_eq!(
                raw.is_empty() || raw_contains(&raw, &pt),
                canon.contains(&pt),
                "closure changed the solution set"
            );
            samples += 1;
        }
    }
    assert!(samples >= 10_000, "only {} samples", samples);
}

/// Entry-by-entry evaluation, bypassing the emptiness flag.
fn raw_contains(d: &Dbm, pt: &[Q]) -> bool {
    let val = |i: usize| if i == 0 { q(0) } else { pt[i - 1] };
    for i in 0..d.dim() {
        for j in 0..d.dim() {
            let diff = val(i) - val(j);
            match d.bound(i, j) {
                Bound::Unbounded => {}
                Bound::Weak(c) => {
                    if diff > q(c) {
                        return false;
                    }
                }
                Bound::Strict(c) => {
                    if diff >= q(c) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[test]
fn delay_closure_matches_point_semantics_and_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut samples = 0usize;
    for round in 0..400 {
        let n = 1 + round % 4;
        let (d, cons) = rand_zone(&mut rng, n);
        let mut up = d.clone();
        up.up();
        let mut up2 = up.clone();
        up2.up();
        assert_eq!(up, up2, "up is not idempotent");
        assert_eq!(d.is_empty(), up.is_empty(), "up changed emptiness");
        for _ in 0..20 {
            let pt = rand_point(&mut rng, n);
            assert_eq!(
                up.contains(&pt),
                in_delayed_zone(&cons, &pt),
                "delay closure disagrees on {:?} for {:?}",
                pt,
                cons
            );
            samples += 1;
        }
        if !d.is_empty() {
            // Points of the zone, pushed forward by a delay, must be in.
            for _ in 0..8 {
                let mut pt = point_inside(&d, &mut rng);
                let delay = Ratio::new(rng.gen_range(0..=12), rng.gen_range(1..=3));
                for v in pt.iter_mut() {
                    *v += delay;
                }
                assert!(up.contains(&pt), "delayed point fell out of up()");
                samples += 1;
            }
        }
    }
    assert!(samples >= 10_000, "only {} samples", samples);
}

#[test]
fn assignment_matches_substitution_semantics() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut samples = 0usize;
    for round in 0..400 {
        let n = 1 + round % 4;
        let (d, cons) = rand_zone(&mut rng, n);
        let x = rng.gen_range(1..=n);
        let v = rng.gen_range(0..=8);
        let mut assigned = d.clone();
        assigned.assign(x, v);
        for i in 0..24 {
            let mut pt = rand_point(&mut rng, n);
            // Two thirds of the samples sit on the assignment plane, the
            // rest check that everything off the plane is excluded.
            if i % 3 != 0 {
                pt[x - 1] = q(v);
            }
            assert_eq!(
                assigned.contains(&pt),
                in_assigned_zone(&cons, &pt, x, v),
                "assignment disagrees on {:?} for {:?} with {} := {}",
                pt,
                cons,
                x,
                v
            );
            samples += 1;
        }
        if !assigned.is_empty() {
            for _ in 0..4 {
                let pt = point_inside(&assigned, &mut rng);
                assert_eq!(pt[x - 1], q(v), "assigned clock not pinned");
                assert!(in_assigned_zone(&cons, &pt, x, v));
                samples += 1;
            }
        }
    }
    assert!(samples >= 10_000, "only {} samples", samples);
}

#[test]
fn extrapolation_only_ever_grows_the_zone() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut samples = 0usize;
    for round in 0..500 {
        let n = 1 + round % 4;
        let (d, _) = rand_zone(&mut rng, n);
        let mut max = vec![0i64];
        for _ in 0..n {
            max.push(rng.gen_range(0..=6));
        }
        let mut extra = d.clone();
        extra.extrapolate(&max);
        assert!(d.subset(&extra), "extrapolation lost part of the zone");
        assert_eq!(d.is_empty(), extra.is_empty(), "extrapolation changed emptiness");
        // Ceilings above every constant in play make it the identity.
        let mut untouched = d.clone();
        untouched.extrapolate(&vec![100; n + 1]);
        assert_eq!(untouched, d, "extrapolation moved bounds under the ceiling");
        // Output must be canonical: re-closing changes nothing.
        let mut reclosed = extra.clone();
        reclosed.canonicalize();
        assert_eq!(reclosed, extra, "extrapolation left a non-canonical matrix");
        if d.is_empty() {
            for _ in 0..22 {
                let pt = rand_point(&mut rng, n);
                assert!(!extra.contains(&pt), "extrapolated empty zone has points");
                samples += 1;
            }
        } else {
            for _ in 0..22 {
                let pt = point_inside(&d, &mut rng);
                assert!(extra.contains(&pt), "point lost by extrapolation");
                samples += 1;
            }
        }
    }
    assert!(samples >= 10_000, "only {} samples", samples);
}

#[test]
fn subset_is_a_partial_order_that_matches_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let n = 3;
    // A pool with deliberate inclusion structure: each base zone gets a
    // tightened child and a delay-widened parent.
    let mut pool: Vec<Dbm> = Vec::new();
    for _ in 0..160 {
        let (base, _) = rand_zone_upto(&mut rng, n, 3);
        let mut tight = base.clone();
        tight.and(rand_constraint(&mut rng, n));
        let mut wide = base.clone();
        wide.up();
        pool.push(tight);
        pool.push(base);
        pool.push(wide);
    }
    let mut samples = 0usize;
    for z in &pool {
        assert!(z.subset(z), "subset is not reflexive");
    }
    for _ in 0..2000 {
        let a = &pool[rng.gen_range(0..pool.len())];
        let b = &pool[rng.gen_range(0..pool.len())];
        let c = &pool[rng.gen_range(0..pool.len())];
        if a.subset(b) && b.subset(a) {
            // Mutual inclusion means equality, up to the one non-canonical
            // representation: empty zones keep whatever entries emptiness
            // was detected on.
            assert_eq!(a.is_empty(), b.is_empty(), "mutual inclusion of distinct zones");
            if !a.is_empty() {
                assert_eq!(a, b, "mutual inclusion of distinct zones");
            }
        }
        if a.subset(b) && b.subset(c) {
            assert!(a.subset(c), "subset is not transitive");
        }
    }
    for i in 0..pool.len() {
        // Consecutive triples share structure, so inclusions are common.
        let x = &pool[i];
        let y = &pool[(i + rng.gen_range(1..=2)) % pool.len()];
        if x.is_empty() {
            assert!(x.subset(y), "the empty zone is a subset of everything");
            continue;
        }
        if x.subset(y) {
            for _ in 0..30 {
                let pt = point_inside(x, &mut rng);
                assert!(y.contains(&pt), "inclusion dropped a member point");
                samples += 1;
            }
        } else {
            let w = separating_point(x, y, &mut rng);
            assert!(x.contains(&w), "separating point not in the larger zone");
            assert!(!y.contains(&w), "separating point not separating");
            samples += 2;
        }
    }
    // Membership transfer along the built-in chains covers the rest of
    // the sample budget.
    for chunk in pool.chunks(3) {
        if let [tight, base, wide] = chunk {
            assert!(tight.subset(base) && base.subset(wide), "chain broken");
            if !tight.is_empty() {
                for _ in 0..25 {
                    let pt = point_inside(tight, &mut rng);
                    assert!(base.contains(&pt) && wide.contains(&pt));
                    samples += 2;
                }
            }
        }
    }
    assert!(samples >= 10_000, "only {} samples", samples);
}

/// A point of `x` outside `y`, for non-empty canonical `x` not included
/// in `y`. Some entry of `x` exceeds `y`'s; pinning the corresponding
/// difference past `y`'s bound stays satisfiable inside `x`.
fn separating_point(x: &Dbm, y: &Dbm, rng: &mut ChaCha8Rng) -> Vec<Q> {
    if y.is_empty() {
        return point_inside(x, rng);
    }
    for i in 0..x.dim() {
        for j in 0..x.dim() {
            let bx = x.bound(i, j);
            let by = y.bound(i, j);
            if bx <= by {
                continue;
            }
            let mut pinned = x.clone();
            match bx {
                Bound::Weak(v) => {
                    // The weak bound is attained; pin the difference to it.
                    pinned.and(ClockConstraint::new(j, i, Bound::Weak(-v)));
                }
                Bound::Strict(v) => {
                    // y allows at most v - 1 weakly; anything above that
                    // and below v is a witness.
                    pinned.and(ClockConstraint::new(j, i, Bound::Strict(-(v - 1))));
                }
                Bound::Unbounded => {
                    let w = by.value().expect("finite bound below an infinite one");
                    pinned.and(ClockConstraint::new(j, i, Bound::Strict(-w)));
                }
            }
            assert!(!pinned.is_empty(), "canonical bound was not tight");
            return point_inside(&pinned, rng);
        }
    }
    unreachable!("subset returned false without a differing entry");
}

#[test]
fn negation_is_an_involution_that_complements_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut samples = 0usize;
    for round in 0..700 {
        let n = 1 + round % 4;
        let c = rand_constraint(&mut rng, n);
        assert_eq!(c.negate().negate(), c, "negation is not an involution");
        let mut with = universe(n);
        with.and(c);
        let mut without = universe(n);
        without.and(c.negate());
        for _ in 0..15 {
            let pt = rand_point(&mut rng, n);
            assert_ne!(
                holds(c, &pt),
                holds(c.negate(), &pt),
                "constraint and negation overlap on {:?}",
                pt
            );
            assert_ne!(
                with.contains(&pt),
                without.contains(&pt),
                "zones of a constraint and its negation overlap on {:?}",
                pt
            );
            samples += 2;
        }
    }
    assert!(samples >= 10_000, "only {} samples", samples);
}

#[test]
fn trivial_dimensions_hold_up() {
    // No clocks: the only valuation is the empty one.
    let mut d = Dbm::init_zero(0);
    assert!(d.contains(&[]));
    d.canonicalize();
    d.up();
    assert!(d.contains(&[]));
    assert!(!d.is_empty());
    assert!(d.subset(&Dbm::init_zero(0)));
}
