//! Bundled example data: a post-quantum assemblage in minimal form and the
//! steering functional that witnesses it, both rounded to four decimals.

use serde::Deserialize;

use crate::assemblage::{reconstruct_from_minimal, Assemblage, MinimalAssemblage, ROUNDING_TOL};
use crate::functional::{expand_minimal, MinimalFunctional, SteeringFunctional};

pub const EXAMPLE_ASSEMBLAGE_JSON: &str = include_str!("../fixtures/example_assemblage.json");
pub const EXAMPLE_WITNESS_JSON: &str = include_str!("../fixtures/example_witness.json");

/// Reported value of the witness on the example assemblage.
pub const EXAMPLE_BETA: f64 = -0.520495;
/// Reported minimum of the witness over the almost-quantum set.
pub const EXAMPLE_BETA_AQ: f64 = -0.508417;

/// Visibility at which the example was generated, `cos(π/8)`.
pub fn example_noise() -> f64 {
    (std::f64::consts::PI / 8.0).cos()
}

// numeric fields are cross-checked against the constants in tests
#[derive(Deserialize)]
#[allow(dead_code)]
struct AssemblageFixture {
    noise: f64,
    minimal: MinimalAssemblage,
}

#[derive(Deserialize)]
#[allow(dead_code)]
struct WitnessFixture {
    beta: f64,
    beta_almost_quantum: f64,
    functional: MinimalFunctional,
}

fn assemblage_fixture() -> AssemblageFixture {
    serde_json::from_str(EXAMPLE_ASSEMBLAGE_JSON).expect("bundled fixture parses")
}

fn witness_fixture() -> WitnessFixture {
    serde_json::from_str(EXAMPLE_WITNESS_JSON).expect("bundled fixture parses")
}

pub fn example_minimal() -> MinimalAssemblage {
    assemblage_fixture().minimal
}

pub fn example_assemblage() -> Assemblage {
    reconstruct_from_minimal(&example_minimal(), ROUNDING_TOL).expect("bundled fixture is symmetric")
}

pub fn witness_minimal() -> MinimalFunctional {
    witness_fixture().functional
}

pub fn witness_functional() -> SteeringFunctional {
    expand_minimal(&witness_minimal()).expect("bundled fixture is well-shaped")
}
