//! Zone-based model checking for networks of timed automata.
//!
//! The crate is organized bottom-up:
//!
//! - [`ta`]: domain types (clocks, constraints, locations, edges, templates);
//! - [`dbm`]: difference bound matrices, the symbolic zone representation;
//! - [`region`]: an explicit region-graph explorer (Alur–Dill), the slow
//!   brute-force oracle the zone engine is validated against;
//! - [`network`]: parallel composition with channel synchronization and
//!   symbolic successor computation;
//! - [`query`]: temporal properties (`E<>`, `A[]`, `E[]`, `A<>`, leads-to);
//! - [`verify`]: zone-graph exploration with subsumption, verdicts, traces,
//!   and the seeded concrete simulator;
//! - [`parse`]: the textual model/query language;
//! - [`bufferlab`]: built-in two-way buffer systems and their timing
//!   analysis.

pub mod bufferlab;
pub mod dbm;
pub mod network;
pub mod parse;
pub mod query;
pub mod region;
pub mod ta;
pub mod verify;

pub use bufferlab::{
    arrival_time, buffer_size, build_existing, build_model, build_proposed, measured_time,
    model_text, queries_text, timing_table, ArrivalPoint, TimeModelConfig, TimingParams,
    MODEL_NAMES,
};
pub use dbm::Dbm;
pub use network::{Network, SymbolicState, System, TransitionLabel};
pub use parse::{
    elaborate, load_model, parse_model, parse_queries, print_model, ParseDiagnostic, Severity,
    SourceModel,
};
pub use query::{Query, StateFormula};
pub use verify::{
    check, reachable_locvecs, simulate, Options, SearchStats, SimReport, SimStep, TraceStep,
    Verdict, VerifyError, DEFAULT_BUDGET,
};
pub use ta::{
    Bound, ChannelDecl, ChannelKind, ClockConstraint, ClockId, Edge, IntExpr, Location,
    LocationKind, SyncLabel, TimedAutomatonTemplate, VarDecl,
};
