//! Certification of post-quantum steering assemblages.
//!
//! One trusted party (Alice) holds a quantum system; two untrusted parties
//! (Bob, Charlie) measure and report outcomes. The crate validates
//! no-signaling assemblages, realizes bipartite ones quantumly, bounds
//! steering functionals over the almost-quantum set, decides Bell locality of
//! the behaviours an assemblage produces, and searches for assemblages that
//! are post-quantum while giving only local behaviours.

// index loops mirror the matrix formulas; `!(x <= tol)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod aq;
pub mod assemblage;
pub mod conic;
pub mod constructions;
pub mod dense_sdp;
pub mod error;
pub mod fixtures;
pub mod functional;
pub mod io;
pub mod ghjw;
pub mod linalg;
pub mod locality;
pub mod random;
pub mod scenario;
pub mod search;

pub use aq::{aq_bound, aq_visibility, membership_sdp, AqBound, Membership, MembershipVerdict};
pub use assemblage::{
    reconstruct_from_minimal, validate_bipartite_ns, validate_tripartite_ns, Assemblage, BipartiteAssemblage,
    MinimalAssemblage, ValidationReport,
};
pub use constructions::{add_noise, denoise, filter_back, lift_qutrit, prbox_product};
pub use error::{Error, Result};
pub use functional::{evaluate_functional, evaluate_minimal, expand_minimal, MinimalFunctional, SteeringFunctional};
pub use ghjw::{ghjw_realize, QuantumRealization};
pub use linalg::HermitianMatrix;
pub use locality::{cover_noisy_measurement, is_local, locality_for_all_projective, octagon_set, Behaviour};
pub use scenario::{Cell, Scenario, Word};
pub use search::{constrained_min_sdp, critical_mu, run_search, verify_result, SearchConfig, SearchResult, SearchStatus};
