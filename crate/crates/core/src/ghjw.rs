//! Quantum realization of bipartite no-signaling assemblages.
//!
//! With `ρ_A = Σ_k μ_k |u_k⟩⟨u_k|`, the state `|Ψ⟩ = Σ_k √μ_k |u_k⟩|k⟩` and
//! Bob's effects `E_{b|y} = (D^{-1/2} U†σ_{b|y}U D^{-1/2})^T` on the support
//! of `ρ_A` reproduce `σ_{b|y} = tr_B[|Ψ⟩⟨Ψ| (I ⊗ E_{b|y})]`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assemblage::{validate_bipartite_ns, BipartiteAssemblage};
use crate::error::{Error, Result};
use crate::linalg::{complex_vec, CMatrix, HermitianMatrix};

/// Eigenvalues of `ρ_A` at or below this are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumRealization {
    /// `|Ψ⟩` on A⊗B, index `a · dim_a + k`.
    #[serde(with = "complex_vec")]
    pub state: DVector<Complex64>,
    /// Bob's effects keyed `"b,y"`; for each `y` they sum to the projector
    /// onto the first `support_dim` basis states.
    pub povms: BTreeMap<String, HermitianMatrix>,
    pub support_dim: usize,
}

impl QuantumRealization {
    pub fn dim_a(&self) -> usize {
        (self.state.len() as f64).sqrt().round() as usize
    }

    fn shape(&self) -> Result<(usize, usize)> {
        let mut outcomes = 0;
        let mut settings = 0;
        for key in self.povms.keys() {
            let (b, y) = parse_by(key)?;
            outcomes = outcomes.max(b + 1);
            settings = settings.max(y + 1);
        }
        if outcomes * settings != self.povms.len() {
            return Err(Error::InvalidInput("POVM keys do not form a full (b, y) grid".into()));
        }
        Ok((outcomes, settings))
    }

    pub fn effect(&self, b: usize, y: usize) -> Option<&HermitianMatrix> {
        self.povms.get(&format!("{b},{y}"))
    }

    /// Projector onto the support used by the effects.
    pub fn support_projector(&self) -> HermitianMatrix {
        let d = self.dim_a();
        let diag: Vec<f64> = (0..d).map(|k| if k < self.support_dim { 1.0 } else { 0.0 }).collect();
        HermitianMatrix::diagonal(&diag)
    }

    /// Full POVMs on Bob's space: `I − P_supp` is added to outcome 0.
    pub fn completed_povms(&self) -> BTreeMap<String, HermitianMatrix> {
        let rest = &HermitianMatrix::identity(self.dim_a()) - &self.support_projector();
        self.povms
            .iter()
            .map(|(k, e)| {
                let (b, _) = parse_by(k).expect("keys validated on construction");
                (k.clone(), if b == 0 { e + &rest } else { e.clone() })
            })
            .collect()
    }

    /// `tr_B[|Ψ⟩⟨Ψ| (I ⊗ E)]`.
    pub fn steer(&self, effect: &HermitianMatrix) -> HermitianMatrix {
        let d = self.dim_a();
        // Ψ as a d×d matrix with rows indexed by A: σ = Ψ Eᵀ Ψ†
        let psi = DMatrix::from_fn(d, d, |a, k| self.state[a * d + k]);
        HermitianMatrix::symmetrized(&psi * effect.matrix().transpose() * psi.adjoint())
    }

    /// The assemblage these measurements prepare.
    pub fn reconstruct(&self) -> Result<BipartiteAssemblage> {
        let (outcomes, settings) = self.shape()?;
        let blocks = (0..settings)
            .map(|y| (0..outcomes).map(|b| self.steer(self.effect(b, y).expect("full grid"))).collect())
            .collect();
        BipartiteAssemblage::new(blocks)
    }
}

fn parse_by(key: &str) -> Result<(usize, usize)> {
    let parts: Vec<usize> = key
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidInput(format!("bad POVM key {key:?}")))?;
    match parts.as_slice() {
        &[b, y] => Ok((b, y)),
        _ => Err(Error::InvalidInput(format!("POVM key {key:?} must be \"b,y\""))),
    }
}

/// Builds a pure state and Bob measurements realizing `asm`. The assemblage
/// must pass no-signaling validation at `tol`.
pub fn ghjw_realize(asm: &BipartiteAssemblage, tol: f64) -> Result<QuantumRealization> {
    let report = validate_bipartite_ns(asm, tol);
    if !report.passed {
        let failed: Vec<String> =
            report.checks.iter().filter(|c| !c.passed).map(|c| format!("{:?} ({:.3e})", c.family, c.max_violation)).collect();
        return Err(Error::InvalidInput(format!("assemblage is not a valid no-signaling assemblage: {}", failed.join(", "))));
    }
    let d = asm.dim_a();
    let rho = asm.reduced_state(0);
    let (vals, vecs) = rho.eigh();
    // largest eigenvalues first so the support occupies the leading basis states
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let support: Vec<usize> = order.into_iter().filter(|&k| vals[k] > RANK_TOL).collect();
    let r = support.len();
    if r == 0 {
        return Err(Error::InvalidInput("ρ_A vanishes".into()));
    }
    let u: CMatrix = DMatrix::from_fn(d, r, |a, k| vecs[(a, support[k])]);
    let mu: Vec<f64> = support.iter().map(|&k| vals[k]).collect();

    let mut state = DVector::zeros(d * d);
    for k in 0..r {
        for a in 0..d {
            state[a * d + k] = u[(a, k)] * mu[k].sqrt();
        }
    }

    // component of each block outside the support of ρ_A
    let p_out = CMatrix::identity(d, d) - &u * u.adjoint();
    let mut povms = BTreeMap::new();
    for y in 0..asm.settings() {
        for b in 0..asm.outcomes() {
            let sigma = asm.block(b, y).matrix();
            let leak = (&p_out * sigma).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if leak > tol {
                return Err(Error::InvalidInput(format!(
                    "σ_{b}|{y} has weight {leak:.3e} outside the support of ρ_A"
                )));
            }
            let s = u.adjoint() * sigma * &u;
            let mut e = CMatrix::zeros(d, d);
            for k in 0..r {
                for l in 0..r {
                    // E_{lk} = S_{kl} / √(μ_k μ_l)
                    e[(l, k)] = s[(k, l)] / (mu[k] * mu[l]).sqrt();
                }
            }
            povms.insert(format!("{b},{y}"), HermitianMatrix::symmetrized(e));
        }
    }
    Ok(QuantumRealization { state, povms, support_dim: r })
}
