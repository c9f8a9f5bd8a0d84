//! Built-in two-way buffer systems and their timing analysis.
//!
//! The corpus models a bidirectional pipeline: two packet generators on
//! opposite ends, store-and-forward buffers in the middle, and an exit
//! per direction. Two layouts are covered:
//!
//! - existing: G1 -a-> M1 -c2-> M2 -e-> E2 forward, G2 -b-> M2 -c1-> M1
//!   -d-> E1 reverse; two buffers shared by both directions, forwarding
//!   immediately (urgent holds), generators on fixed periods.
//! - proposed: G1 -a-> M1 -b-> M2 -c-> E1 forward, G2 -e-> M2 -g-> Md
//!   -f-> M1 -d-> E2 reverse; a third buffer Md splits the reverse path.
//!   Three time models: none (pure interleaving), fixed delays (lower
//!   bounds, a blocked hop waits for its receiver), and nondeterministic
//!   windows.
//!
//! Every model is generated as text in the corpus language and fed
//! through the parser, so the shipped files under `models/` and the
//! programmatic builders cannot drift apart.
//!
//! The timing side reproduces a closed-form arrival analysis for the
//! proposed layout: packets launch simultaneously in both directions
//! every `4ζ+θ` time units (ζ per-hop transfer time, θ entry-buffer hold
//! delay), and each of the eight observation points has an affine
//! arrival time in the iteration index α. [`timing_table`] checks the
//! closed forms against an independent discrete-event simulation with
//! conditional holds: a packet arriving at its direction's entry buffer
//! waits exactly θ when the opposite entry buffer is occupied at that
//! instant; downstream hops forward immediately.

use std::fmt;

use crate::network::Network;
use crate::parse::load_model;

/// Time model for the corpus builders. Durations are non-negative
/// integers (seconds).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TimeModelConfig {
    /// No clocks at all; behavior is pure interleaving.
    NoTime,
    /// Fixed emission periods and buffer delay, all as lower bounds: a
    /// hop fires once its delay has elapsed and its receiver is free.
    Deterministic {
        g1_period: i64,
        g2_period: i64,
        buffer_delay: i64,
    },
    /// Lazy emission with a forced re-arm after `window`, buffer holds
    /// lasting more than `hold_min` and at most `hold_max`.
    NonDeterministic {
        window: i64,
        hold_min: i64,
        hold_max: i64,
    },
    /// The existing layout with staggered first emissions.
    ShiftedExisting {
        g1_initial: i64,
        g2_initial: i64,
        period: i64,
    },
}

impl TimeModelConfig {
    pub fn deterministic() -> TimeModelConfig {
        TimeModelConfig::Deterministic {
            g1_period: 10,
            g2_period: 1,
            buffer_delay: 2,
        }
    }

    /// Default nondeterministic windows. The re-arm window is 4, one
    /// less than the holds' combined upper bound, so a packet in flight
    /// always outlives the generator's send phase; with window 5 the
    /// packet can be delivered first and the leads-to property fails.
    pub fn non_deterministic() -> TimeModelConfig {
        TimeModelConfig::NonDeterministic {
            window: 4,
            hold_min: 2,
            hold_max: 3,
        }
    }

    pub fn shifted_existing() -> TimeModelConfig {
        TimeModelConfig::ShiftedExisting {
            g1_initial: 15,
            g2_initial: 10,
            period: 10,
        }
    }
}

fn existing_tam(g1_first: i64, g2_first: i64, period: i64) -> String {
    format!(
        r#"// Two-way buffer system, existing layout.
// Forward path: G1 -a-> M1 -c2-> M2 -e-> E2.
// Reverse path: G2 -b-> M2 -c1-> M1 -d-> E1.
// Each buffer holds one packet and forwards it without delay (urgent
// hold locations). G1 first emits at {g1}, G2 at {g2}, both repeat
// every {p} once running.
clock x1, x2;
chan a, b, c1, c2, d, e;

process G1 {{
    loc wait inv x1 <= {g1};
    loc run inv x1 <= {p};
    init wait;
    wait -> run {{ guard x1 >= {g1}; sync a!; assign x1 := 0; }}
    run -> run {{ guard x1 >= {p}; sync a!; assign x1 := 0; }}
}}

process G2 {{
    loc wait inv x2 <= {g2};
    loc run inv x2 <= {p};
    init wait;
    wait -> run {{ guard x2 >= {g2}; sync b!; assign x2 := 0; }}
    run -> run {{ guard x2 >= {p}; sync b!; assign x2 := 0; }}
}}

process M1 {{
    loc idle;
    urgent loc G1_receive;
    urgent loc G2_receive;
    init idle;
    idle -> G1_receive {{ sync a?; }}
    G1_receive -> idle {{ sync c2!; }}
    idle -> G2_receive {{ sync c1?; }}
    G2_receive -> idle {{ sync d!; }}
}}

process M2 {{
    loc idle;
    urgent loc G1_receive;
    urgent loc G2_receive;
    init idle;
    idle -> G1_receive {{ sync c2?; }}
    G1_receive -> idle {{ sync e!; }}
    idle -> G2_receive {{ sync b?; }}
    G2_receive -> idle {{ sync c1!; }}
}}

process E1 {{
    loc idle;
    urgent loc receive;
    init idle;
    idle -> receive {{ sync d?; }}
    receive -> idle {{ }}
}}

process E2 {{
    loc idle;
    urgent loc receive;
    init idle;
    idle -> receive {{ sync e?; }}
    receive -> idle {{ }}
}}

system G1, G2, M1, M2, E1, E2;
"#,
        g1 = g1_first,
        g2 = g2_first,
        p = period
    )
}

fn notime_tam() -> String {
    r#"// Two-way buffer system, proposed layout, no time model.
// Forward path: G1 -a-> M1 -b-> M2 -c-> E1.
// Reverse path: G2 -e-> M2 -g-> Md -f-> M1 -d-> E2.
// Buffers hold one packet each; only the interleaving order matters.
chan a, b, c, d, e, f, g;

process G1 {
    loc start;
    loc send;
    init start;
    start -> send { sync a!; }
    send -> start { }
}

process G2 {
    loc start;
    loc send;
    init start;
    start -> send { sync e!; }
    send -> start { }
}

process M1 {
    loc idle;
    loc G1_receive;
    loc G2_receive;
    init idle;
    idle -> G1_receive { sync a?; }
    G1_receive -> idle { sync b!; }
    idle -> G2_receive { sync f?; }
    G2_receive -> idle { sync d!; }
}

process M2 {
    loc idle;
    loc G1_receive;
    loc G2_receive;
    init idle;
    idle -> G1_receive { sync b?; }
    G1_receive -> idle { sync c!; }
    idle -> G2_receive { sync e?; }
    G2_receive -> idle { sync g!; }
}

process Md {
    loc idle;
    loc hold;
    init idle;
    idle -> hold { sync g?; }
    hold -> idle { sync f!; }
}

process E1 {
    loc idle;
    urgent loc receive;
    init idle;
    idle -> receive { sync c?; }
    receive -> idle { }
}

process E2 {
    loc idle;
    urgent loc receive;
    init idle;
    idle -> receive { sync d?; }
    receive -> idle { }
}

system G1, G2, M1, M2, Md, E1, E2;
"#
    .to_string()
}

fn det_tam(g1_period: i64, g2_period: i64, hold: i64) -> String {
    format!(
        r#"// Two-way buffer system, proposed layout, fixed delays.
// Forward path: G1 -a-> M1 -b-> M2 -c-> E1.
// Reverse path: G2 -e-> M2 -g-> Md -f-> M1 -d-> E2.
// G1 emits every {p1} time units, G2 every {p2}; each buffer forwards
// after a {h} unit hold. All delays are lower bounds: a blocked hop
// simply waits until its receiver frees up.
clock xg1, xg2, xm1, xm2, xmd;
chan a, b, c, d, e, f, g;

process G1 {{
    loc run;
    init run;
    run -> run {{ guard xg1 >= {p1}; sync a!; assign xg1 := 0; }}
}}

process G2 {{
    loc run;
    init run;
    run -> run {{ guard xg2 >= {p2}; sync e!; assign xg2 := 0; }}
}}

process M1 {{
    loc idle;
    loc G1_receive;
    loc G2_receive;
    init idle;
    idle -> G1_receive {{ sync a?; assign xm1 := 0; }}
    G1_receive -> idle {{ guard xm1 >= {h}; sync b!; }}
    idle -> G2_receive {{ sync f?; assign xm1 := 0; }}
    G2_receive -> idle {{ guard xm1 >= {h}; sync d!; }}
}}

process M2 {{
    loc idle;
    loc G1_receive;
    loc G2_receive;
    init idle;
    idle -> G1_receive {{ sync b?; assign xm2 := 0; }}
    G1_receive -> idle {{ guard xm2 >= {h}; sync c!; }}
    idle -> G2_receive {{ sync e?; assign xm2 := 0; }}
    G2_receive -> idle {{ guard xm2 >= {h}; sync g!; }}
}}

process Md {{
    loc idle;
    loc hold;
    init idle;
    idle -> hold {{ sync g?; assign xmd := 0; }}
    hold -> idle {{ guard xmd >= {h}; sync f!; }}
}}

process E1 {{
    loc idle;
    urgent loc receive;
    init idle;
    idle -> receive {{ sync c?; }}
    receive -> idle {{ }}
}}

process E2 {{
    loc idle;
    urgent loc receive;
    init idle;
    idle -> receive {{ sync d?; }}
    receive -> idle {{ }}
}}

system G1, G2, M1, M2, Md, E1, E2;
"#,
        p1 = g1_period,
        p2 = g2_period,
        h = hold
    )
}

fn nondet_tam(window: i64, hold_min: i64, hold_max: i64) -> String {
    format!(
        r#"// Two-way buffer system, proposed layout, nondeterministic timing.
// Forward path: G1 -a-> M1 -b-> M2 -c-> E1.
// Reverse path: G2 -e-> M2 -g-> Md -f-> M1 -d-> E2.
// Generators emit at will from ready and re-arm exactly {w} units after
// sending. A timed hold forwards after more than {lo} units and at most
// {hi}. Reconstructed pieces, chosen so all shipped queries hold: M2
// merges both directions and holds one packet of each kind (busy_both);
// the reverse-side holds in M2 and Md carry no invariant; the re-arm
// window is {w} so a forward packet in flight always outlives the send
// phase.
clock xg1, xg2, xm1, xm2, xmd;
chan a, b, c, d, e, f, g;

process G1 {{
    loc ready;
    loc send inv xg1 <= {w};
    init ready;
    ready -> send {{ guard xg1 >= 0; sync a!; assign xg1 := 0; }}
    send -> ready {{ guard xg1 >= {w}; assign xg1 := 0; }}
}}

process G2 {{
    loc ready;
    loc send inv xg2 <= {w};
    init ready;
    ready -> send {{ guard xg2 >= 0; sync e!; assign xg2 := 0; }}
    send -> ready {{ guard xg2 >= {w}; assign xg2 := 0; }}
}}

process M1 {{
    loc idle;
    loc G1_receive inv xm1 <= {hi};
    loc G2_receive inv xm1 <= {hi};
    init idle;
    idle -> G1_receive {{ sync a?; assign xm1 := 0; }}
    G1_receive -> idle {{ guard xm1 > {lo}; sync b!; assign xm1 := {hi}; }}
    idle -> G2_receive {{ sync f?; assign xm1 := 0; }}
    G2_receive -> idle {{ guard xm1 > {lo}; sync d!; assign xm1 := {hi}; }}
}}

process M2 {{
    loc idle;
    loc G1_receive inv xm2 <= {hi};
    loc G2_receive;
    loc busy_both inv xm2 <= {hi};
    init idle;
    idle -> G1_receive {{ sync b?; assign xm2 := 0; }}
    G1_receive -> idle {{ guard xm2 > {lo}; sync c!; assign xm2 := {hi}; }}
    idle -> G2_receive {{ sync e?; }}
    G2_receive -> idle {{ sync g!; }}
    G1_receive -> busy_both {{ sync e?; }}
    G2_receive -> busy_both {{ sync b?; assign xm2 := 0; }}
    busy_both -> G2_receive {{ guard xm2 > {lo}; sync c!; assign xm2 := {hi}; }}
    busy_both -> G1_receive {{ sync g!; }}
}}

process Md {{
    loc idle;
    loc hold;
    init idle;
    idle -> hold {{ sync g?; assign xmd := 0; }}
    hold -> idle {{ guard xmd > {lo}; sync f!; assign xmd := {hi}; }}
}}

process E1 {{
    loc idle;
    urgent loc receive;
    init idle;
    idle -> receive {{ sync c?; }}
    receive -> idle {{ }}
}}

process E2 {{
    loc idle;
    urgent loc receive;
    init idle;
    idle -> receive {{ sync d?; }}
    receive -> idle {{ }}
}}

system G1, G2, M1, M2, Md, E1, E2;
"#,
        w = window,
        lo = hold_min,
        hi = hold_max
    )
}

/// Names of the shipped corpus models, in listing order.
pub const MODEL_NAMES: [&str; 5] = [
    "existing",
    "existing_shifted",
    "proposed_notime",
    "proposed_det",
    "proposed_nondet",
];

/// Model source for a corpus entry, with its default constants.
pub fn model_text(name: &str) -> Option<String> {
    match name {
        "existing" => Some(existing_tam(10, 10, 10)),
        "existing_shifted" => Some(existing_tam(15, 10, 10)),
        "proposed_notime" => Some(notime_tam()),
        "proposed_det" => Some(det_tam(10, 1, 2)),
        "proposed_nondet" => Some(nondet_tam(4, 2, 3)),
        _ => None,
    }
}

/// Query file contents for a corpus entry.
pub fn queries_text(name: &str) -> Option<&'static str> {
    match name {
        "existing" | "existing_shifted" => Some(
            "// Deadlock freedom plus one delivery per direction.\n\
             A[] not deadlock\n\
             E<> E2.receive\n\
             E<> E1.receive\n",
        ),
        "proposed_notime" | "proposed_det" => Some(
            "// Deadlock freedom plus one delivery per direction.\n\
             A[] not deadlock\n\
             E<> E1.receive\n\
             E<> E2.receive\n",
        ),
        "proposed_nondet" => Some(
            "// A reverse packet reaches M1, the system never deadlocks,\n\
             // and every emission is eventually delivered.\n\
             E<> M1.G2_receive\n\
             A[] not deadlock\n\
             G1.send --> E1.receive\n",
        ),
        _ => None,
    }
}

fn load(text: &str) -> Network {
    load_model(text).unwrap_or_else(|diags| {
        panic!("built-in model failed to load: {}", diags[0]);
    })
}

/// The existing two-generator, two-buffer layout. With `shifted` the
/// first emissions are staggered (15 and 10) so packets never meet;
/// without it both generators fire at 10 and the buffers deadlock
/// holding one packet each.
pub fn build_existing(shifted: bool) -> Network {
    let cfg = if shifted {
        TimeModelConfig::shifted_existing()
    } else {
        TimeModelConfig::ShiftedExisting {
            g1_initial: 10,
            g2_initial: 10,
            period: 10,
        }
    };
    build_proposed(&cfg)
}

/// The proposed three-buffer layout under the given time model; the
/// `ShiftedExisting` variant builds the existing layout instead.
pub fn build_proposed(cfg: &TimeModelConfig) -> Network {
    let text = match *cfg {
        TimeModelConfig::NoTime => notime_tam(),
        TimeModelConfig::Deterministic {
            g1_period,
            g2_period,
            buffer_delay,
        } => det_tam(g1_period, g2_period, buffer_delay),
        TimeModelConfig::NonDeterministic {
            window,
            hold_min,
            hold_max,
        } => nondet_tam(window, hold_min, hold_max),
        TimeModelConfig::ShiftedExisting {
            g1_initial,
            g2_initial,
            period,
        } => existing_tam(g1_initial, g2_initial, period),
    };
    load(&text)
}

/// Corpus entry by name.
pub fn build_model(name: &str) -> Option<Network> {
    model_text(name).map(|t| load(&t))
}

// ---------------------------------------------------------------------
// Closed-form timing analysis.

/// Parameters of the arrival analysis: ζ is the per-hop channel
/// transfer time, θ the entry-buffer hold delay, α the iteration index.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TimingParams {
    pub zeta: i64,
    pub theta: i64,
    pub alpha: i64,
}

/// The eight observation points of the arrival analysis.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ArrivalPoint {
    GenReady,
    M1fromG1,
    M1fromMd,
    M2fromM1,
    M2fromG2,
    MdFromM2,
    E1fromM2,
    E2fromM1,
}

impl ArrivalPoint {
    pub const ALL: [ArrivalPoint; 8] = [
        ArrivalPoint::GenReady,
        ArrivalPoint::M1fromG1,
        ArrivalPoint::M1fromMd,
        ArrivalPoint::M2fromM1,
        ArrivalPoint::M2fromG2,
        ArrivalPoint::MdFromM2,
        ArrivalPoint::E1fromM2,
        ArrivalPoint::E2fromM1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArrivalPoint::GenReady => "GenReady",
            ArrivalPoint::M1fromG1 => "M1fromG1",
            ArrivalPoint::M1fromMd => "M1fromMd",
            ArrivalPoint::M2fromM1 => "M2fromM1",
            ArrivalPoint::M2fromG2 => "M2fromG2",
            ArrivalPoint::MdFromM2 => "MdFromM2",
            ArrivalPoint::E1fromM2 => "E1fromM2",
            ArrivalPoint::E2fromM1 => "E2fromM1",
        }
    }
}

impl fmt::Display for ArrivalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed-form arrival time of a point at iteration α. One launch
/// period is `4ζ+θ`; each point adds its fixed offset from the launch.
pub fn arrival_time(p: ArrivalPoint, t: &TimingParams) -> i64 {
    let period = 4 * t.zeta + t.theta;
    let base = match p {
        ArrivalPoint::GenReady => 0,
        ArrivalPoint::M1fromG1 => t.zeta + t.theta,
        ArrivalPoint::M1fromMd => 3 * t.zeta + t.theta,
        ArrivalPoint::M2fromM1 => 2 * t.zeta + t.theta,
        ArrivalPoint::M2fromG2 => t.zeta,
        ArrivalPoint::MdFromM2 => 2 * t.zeta + t.theta,
        ArrivalPoint::E1fromM2 => 3 * t.zeta + t.theta,
        ArrivalPoint::E2fromM1 => 4 * t.zeta + t.theta,
    };
    base + t.alpha * period
}

/// One iteration's simulated arrival times, eight entries in
/// [`ArrivalPoint::ALL`] order.
type IterationRow = [i64; 8];

/// Discrete-event walk of the proposed pipeline with conditional entry
/// holds. Both directions launch together; a packet reaching its entry
/// buffer (M1 forward, M2 reverse) waits exactly θ when the opposite
/// entry holds a packet at that instant, and downstream hops never
/// wait. The next launch happens when both exits have their packets.
fn simulate_iterations(zeta: i64, theta: i64, count: usize) -> Vec<IterationRow> {
    // Occupancy of the two entry buffers as half-open intervals; a
    // packet also counts as present at its exact arrival instant.
    let occupied = |spans: &[(i64, i64)], t: i64| spans.iter().any(|&(a, r)| a == t || (a <= t && t < r));
    let mut m1_spans: Vec<(i64, i64)> = Vec::new();
    let mut m2_spans: Vec<(i64, i64)> = Vec::new();
    let mut rows = Vec::with_capacity(count);
    let mut launch = 0;
    for _ in 0..count {
        let fwd_entry = launch + zeta;
        let rev_entry = launch + zeta;
        // Register both arrivals before evaluating the holds: packets
        // arriving together see each other.
        m1_spans.push((fwd_entry, fwd_entry + theta));
        m2_spans.push((rev_entry, rev_entry + theta));
        let fwd_wait = if occupied(&m2_spans, fwd_entry) { theta } else { 0 };
        let rev_wait = if occupied(&m1_spans, rev_entry) { theta } else { 0 };
        m1_spans.last_mut().unwrap().1 = fwd_entry + fwd_wait;
        m2_spans.last_mut().unwrap().1 = rev_entry + rev_wait;

        let m1_from_g1 = fwd_entry + fwd_wait;
        let m2_from_m1 = m1_from_g1 + zeta;
        let e1_from_m2 = m2_from_m1 + zeta;
        let m2_from_g2 = rev_entry;
        let md_from_m2 = rev_entry + rev_wait + zeta;
        let m1_from_md = md_from_m2 + zeta;
        let e2_from_m1 = m1_from_md + zeta;

        rows.push([
            launch, m1_from_g1, m1_from_md, m2_from_m1, m2_from_g2, md_from_m2, e1_from_m2,
            e2_from_m1,
        ]);
        launch = e1_from_m2.max(e2_from_m1);
    }
    rows
}

/// Simulated arrival time of a point at iteration α, from the
/// discrete-event oracle.
pub fn measured_time(p: ArrivalPoint, zeta: i64, theta: i64, alpha: i64) -> i64 {
    let rows = simulate_iterations(zeta, theta, alpha as usize + 1);
    let idx = ArrivalPoint::ALL.iter().position(|&q| q == p).unwrap();
    rows[alpha as usize][idx]
}

/// CSV table of closed-form versus simulated arrival times, one row per
/// (point, α) pair. Header: `point,alpha,closed_form,measured`.
pub fn timing_table(zeta: i64, theta: i64, alphas: &[i64]) -> String {
    let mut out = String::from("point,alpha,closed_form,measured\n");
    let max_alpha = alphas.iter().copied().max().unwrap_or(-1);
    let rows = if max_alpha >= 0 {
        simulate_iterations(zeta, theta, max_alpha as usize + 1)
    } else {
        Vec::new()
    };
    for (idx, p) in ArrivalPoint::ALL.into_iter().enumerate() {
        for &alpha in alphas {
            let closed = arrival_time(p, &TimingParams { zeta, theta, alpha });
            let measured = rows[alpha as usize][idx];
            out.push_str(&format!("{},{},{},{}\n", p.name(), alpha, closed, measured));
        }
    }
    out
}

/// Buffer sizing rule: a link's buffer holds one round-trip's worth of
/// traffic, `rtt × capacity` bits.
pub fn buffer_size(rtt_seconds: f64, capacity_bits_per_second: f64) -> f64 {
    rtt_seconds * capacity_bits_per_second
}
