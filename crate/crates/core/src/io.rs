//! Layout detection for assemblage and functional JSON: full, bipartite and
//! minimal data, optionally wrapped as in the bundled fixtures and search
//! results.

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::assemblage::{reconstruct_from_minimal, Assemblage, BipartiteAssemblage, MinimalAssemblage, ROUNDING_TOL};
use crate::error::{Error, Result};
use crate::functional::{expand_minimal, MinimalFunctional, SteeringFunctional};

#[derive(Clone, Debug, PartialEq)]
pub enum AnyAssemblage {
    Tripartite(Assemblage),
    Bipartite(BipartiteAssemblage),
}

fn parse<T: DeserializeOwned>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("not a valid {what}: {e}")))
}

fn has(v: &Value, key: &str) -> bool {
    v.get(key).is_some()
}

/// Detects full tripartite (`scenario` + `blocks`), bipartite (`dim_a`) or
/// minimal (`rho_a`) data, optionally wrapped under `minimal`,
/// `noisy_assemblage` or `assemblage`. Minimal data are reconstructed with
/// the four-decimal rounding tolerance on their symmetry.
pub fn assemblage_from_value(v: Value) -> Result<AnyAssemblage> {
    for key in ["minimal", "noisy_assemblage", "assemblage"] {
        if let Some(inner) = v.get(key) {
            if inner.is_object() {
                return assemblage_from_value(inner.clone());
            }
        }
    }
    if has(&v, "rho_a") {
        let min: MinimalAssemblage = parse(v, "minimal assemblage")?;
        return Ok(AnyAssemblage::Tripartite(reconstruct_from_minimal(&min, ROUNDING_TOL)?));
    }
    if has(&v, "dim_a") {
        return Ok(AnyAssemblage::Bipartite(parse(v, "bipartite assemblage")?));
    }
    if has(&v, "scenario") && has(&v, "blocks") {
        return Ok(AnyAssemblage::Tripartite(parse(v, "assemblage")?));
    }
    Err(Error::InvalidInput("unrecognized assemblage layout".into()))
}

pub fn tripartite_from_value(v: Value) -> Result<Assemblage> {
    match assemblage_from_value(v)? {
        AnyAssemblage::Tripartite(a) => Ok(a),
        AnyAssemblage::Bipartite(_) => Err(Error::InvalidInput("expected a tripartite assemblage".into())),
    }
}

pub fn bipartite_from_value(v: Value) -> Result<BipartiteAssemblage> {
    match assemblage_from_value(v)? {
        AnyAssemblage::Bipartite(a) => Ok(a),
        AnyAssemblage::Tripartite(_) => Err(Error::InvalidInput("expected a bipartite assemblage".into())),
    }
}

/// Detects full (`operators`) or minimal (`F_A`) functionals, optionally
/// wrapped under `functional`.
pub fn functional_from_value(v: Value) -> Result<SteeringFunctional> {
    if let Some(inner) = v.get("functional") {
        if inner.is_object() {
            return functional_from_value(inner.clone());
        }
    }
    if has(&v, "F_A") {
        let min: MinimalFunctional = parse(v, "minimal functional")?;
        return expand_minimal(&min);
    }
    if has(&v, "operators") {
        return parse(v, "functional");
    }
    Err(Error::InvalidInput("unrecognized functional layout".into()))
}
