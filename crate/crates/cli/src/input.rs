//! Reading assemblages and functionals from JSON files.

use std::path::Path;

use postq_core::io::{
    assemblage_from_value, bipartite_from_value, functional_from_value, tripartite_from_value, AnyAssemblage,
};
use postq_core::{Assemblage, BipartiteAssemblage, SteeringFunctional};
use serde_json::Value;

use crate::error::CliError;

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_assemblage(path: &Path) -> Result<AnyAssemblage, CliError> {
    Ok(assemblage_from_value(read_json(path)?)?)
}

pub fn read_tripartite(path: &Path) -> Result<Assemblage, CliError> {
    Ok(tripartite_from_value(read_json(path)?)?)
}

pub fn read_bipartite(path: &Path) -> Result<BipartiteAssemblage, CliError> {
    Ok(bipartite_from_value(read_json(path)?)?)
}

pub fn read_functional(path: &Path) -> Result<SteeringFunctional, CliError> {
    Ok(functional_from_value(read_json(path)?)?)
}
