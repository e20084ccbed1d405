//! Cyclotomic units, Tate cohomology, and p-adic L-values over real quadratic fields.
//!
//! The crate computes, for a real quadratic field `F = Q(sqrt(D))` and an odd
//! prime `p` split in `F`, the objects controlling the Galois module structure
//! of cyclotomic units along the cyclotomic Z_p-tower above `F`:
//!
//! * exact p-adic arithmetic in unramified extensions of Q_p ([`padic`]),
//! * quadratic Dirichlet characters and generalized Bernoulli numbers
//!   ([`characters`]),
//! * Kubota-Leopoldt `L_p(1, chi)` by two independent methods ([`lfunction`]),
//! * Tate cohomology of finite-cyclic group modules presented over Z_p or
//!   Z/p^K ([`cohomology`]),
//! * finite quotients of the Iwasawa algebra and their cohomology
//!   ([`iwasawa`]),
//! * the tower of cyclotomic units as exact group-ring convolutions
//!   ([`cyclotomic`]),
//! * class groups and fundamental units of real quadratic fields
//!   ([`quadratic`]),
//! * a scenario harness cross-checking all of the above ([`harness`]).
//!
//! Everything is exact: integer linear algebra over Z or Z/p^K with certified
//! p-adic precision, never floating point (the only f64 appears in a test
//! oracle for class numbers).

pub mod characters;
pub mod cohomology;
pub mod cyclotomic;
pub mod harness;
pub mod iwasawa;
pub mod lfunction;
pub mod padic;
pub mod quadratic;

pub(crate) mod linalg;
pub(crate) mod zarith;

pub use characters::{quadratic_character, DirichletCharacter};
pub use cohomology::{
    eigenspace_cohomology_commutes, herbrand_check, project_eigenspace, smith_normal_form,
    tate_cohomology, FiniteAbelianGroup, GroupModule, Semantics,
};
pub use cyclotomic::{
    b0_order, cyclotomic_number, embed_eta_local, embed_quadratic, eta, eta_base,
    norm_relation_holds, CyclotomicElement, EtaUnit, QuadraticUnitRep,
};
pub use harness::{
    run_scenario, run_suite, CacheMode, CacheStats, CheckKind, CheckReport, CheckStatus, Report,
    RunOptions, Scenario, ScenarioSpec, SuiteReport, ValueRecord, CACHE_DIR_ENV, REPORT_SCHEMA,
};
pub use iwasawa::{
    b0_model, bn_model_cohomology, coprimality_check, quotient_order, IwasawaPoly,
    LambdaQuotientModule, QuotientOrder,
};
pub use lfunction::{lp_at_one_interpolate, lp_at_one_log, LpMethod, LpValue};
pub use padic::{PadicElement, UnramifiedBasis, Valuation};
pub use quadratic::{
    fundamental_unit, unit_index_comparison, ClassGroup, Form, FundamentalUnit,
    UnitIndexComparison,
};

/// Errors shared across the computational modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A computed order or valuation reached the precision guard band: the
    /// result would depend on digits beyond the working precision p^K.
    #[error("precision exhausted: {0} (raise K)")]
    PrecisionExhausted(String),

    /// Inputs violate a hypothesis the algorithms rely on (p odd, p split,
    /// character order dividing p-1, ...).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Structural failure while parsing or validating external input.
    #[error("invalid input: {0}")]
    Input(String),

    /// An internal consistency check failed; indicates a bug, not bad input.
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
