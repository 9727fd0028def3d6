//! bellforge: local filtering, LOCC protocols, and local-polytope membership
//! certificates for bipartite Bell scenarios.
//!
//! The core is generic over the real scalar type (`f32`/`f64`) via
//! [`scalar::Scalar`]; the `*64` aliases below are the concrete types used by
//! the CLI and tests.

pub mod behavior;
pub mod decomposition;
pub mod error;
pub mod filtering;
pub mod locc;
pub mod operator;
pub mod polytope;
pub mod quantum;
pub mod scalar;
pub mod scenarios;
mod simplex;
pub mod witness;

pub use behavior::{
    behavior_from_state, deterministic_behavior, lift_povm, mix_with_vertex, no_signaling_check,
    Behavior, DeterministicStrategy, Scenario,
};
pub use decomposition::{
    apply_direct, build_composed, verify_equivalence, AlternatingProtocol, ComposedMap,
    InstrumentRound,
};
pub use error::{Error, Result};
pub use filtering::{apply_filters, complement_filter, LocalFilter};
pub use locc::{
    apply_one_way, certify_nonlocal, record_block, reveal_one_bit, reveal_two_bits,
    select_nonlocal_branch, trace_out_records, Branch, Direction, OneWayRound, ProtocolTranscript,
};
pub use operator::{partial_trace, trace_distance, FactorSpace, Operator};
pub use polytope::{find_escaping_vertex, lp_membership, BellInequality, MembershipResult};
pub use quantum::{
    observable_to_povm, pure_state, validate_state, BipartiteState, DichotomicObservable, Povm,
    Side,
};
pub use scalar::{tol, Scalar, C};
pub use scenarios::{
    build_paper_state, chsh_closed_form, lifted_paper_povms, report_grid, reproduce_report,
    PaperExample, Report,
};
pub use witness::{
    chsh_of_behavior, chsh_value, horodecki_max_chsh, paper_observables, ChshSettings,
};

/// Concrete `f64` aliases.
pub type Operator64 = Operator<f64>;
pub type C64 = C<f64>;
pub type BipartiteState64 = BipartiteState<f64>;
pub type Povm64 = Povm<f64>;
pub type LocalFilter64 = LocalFilter<f64>;
