//! Analytic constructions on assemblages: the PR-box product, depolarizing
//! noise and its inverse, the qutrit lift with its filter, and the behaviour
//! produced by measuring the trusted party.

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, HERMITIAN_TOL};
use crate::locality::{check_povm, Behaviour, BehaviourDims};
use crate::scenario::{Cell, Scenario};

/// `p(bc|yz) = 1/2` if `b ⊕ c = yz`, else 0.
pub fn pr_box(cell: Cell) -> f64 {
    if (cell.b ^ cell.c) == (cell.y & cell.z) {
        0.5
    } else {
        0.0
    }
}

fn check_density(rho: &HermitianMatrix) -> Result<()> {
    let min = rho.min_eigenvalue();
    if min < -HERMITIAN_TOL {
        return Err(Error::InvalidInput(format!("ρ_A has eigenvalue {min:.3e}")));
    }
    if (rho.trace() - 1.0).abs() > HERMITIAN_TOL {
        return Err(Error::InvalidInput(format!("ρ_A has trace {}", rho.trace())));
    }
    Ok(())
}

/// `σ_{bc|yz} = p_PR(bc|yz) ρ_A`.
pub fn prbox_product(rho: &HermitianMatrix) -> Result<Assemblage> {
    check_density(rho)?;
    Assemblage::from_fn(Scenario::qubit_2222().with_dim_a(rho.dim()), |cell| rho.scale(pr_box(cell)))
}

fn require_qubit(asm: &Assemblage) -> Result<()> {
    if asm.scenario().dim_a != 2 {
        return Err(Error::InvalidInput(format!(
            "construction needs a qubit trusted party, got dimension {}",
            asm.scenario().dim_a
        )));
    }
    Ok(())
}

/// `σ(μ) = μ σ + (1−μ) tr(σ) I/2` blockwise.
pub fn add_noise(asm: &Assemblage, mu: f64) -> Result<Assemblage> {
    require_qubit(asm)?;
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidInput(format!("visibility {mu} outside [0, 1]")));
    }
    let half = HermitianMatrix::identity(2).scale(0.5);
    asm.map_blocks(|_, m| &m.scale(mu) + &half.scale((1.0 - mu) * m.trace()))
}

/// Inverse of [`add_noise`]: `σ = (σ(μ) − (1−μ) tr(σ(μ)) I/2) / μ`. Blocks
/// that come out with negative eigenvalues are reported through `log::warn!`.
pub fn denoise(asm: &Assemblage, mu: f64) -> Result<Assemblage> {
    require_qubit(asm)?;
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidInput(format!("cannot remove noise of visibility {mu}")));
    }
    let half = HermitianMatrix::identity(2).scale(0.5);
    let out = asm.map_blocks(|_, m| (m - &half.scale((1.0 - mu) * m.trace())).scale(1.0 / mu))?;
    let min = out.min_eigenvalue();
    if min < -HERMITIAN_TOL {
        log::warn!("de-noised assemblage has a block with eigenvalue {min:.3e}");
    }
    Ok(out)
}

/// `σ′ = σ/3 ⊕ (2/3) tr(σ) |2⟩⟨2|`.
pub fn lift_qutrit(asm: &Assemblage) -> Result<Assemblage> {
    require_qubit(asm)?;
    let s = asm.scenario().with_dim_a(3);
    let e22 = HermitianMatrix::diagonal(&[0.0, 0.0, 1.0]);
    Assemblage::from_fn(s, |cell| {
        let m = asm.get(cell);
        &m.scale(1.0 / 3.0).embed(3).expect("2 <= 3") + &e22.scale(2.0 * m.trace() / 3.0)
    })
}

/// Applies the filter `|0⟩⟨0| + |1⟩⟨1|` and renormalizes by the weight
/// `tr[F ρ_A F†]` it keeps.
pub fn filter_back(asm: &Assemblage) -> Result<Assemblage> {
    if asm.scenario().dim_a != 3 {
        return Err(Error::InvalidInput(format!(
            "filter expects a qutrit trusted party, got dimension {}",
            asm.scenario().dim_a
        )));
    }
    let weight = asm.reduced_state(0, 0).principal_block(2)?.trace();
    if weight <= 1e-12 {
        return Err(Error::InvalidInput(format!("filter keeps zero weight ({weight:.3e})")));
    }
    let s = asm.scenario().with_dim_a(2);
    let blocks = asm
        .blocks()
        .iter()
        .map(|m| m.principal_block(2).map(|b| b.scale(1.0 / weight)))
        .collect::<Result<Vec<_>>>()?;
    Assemblage::new(s, blocks)
}

/// `p(abc|xyz) = tr[E_{a|x} σ_{bc|yz}]`. Every POVM must be complete and
/// have the same number of outcomes.
pub fn behaviour(asm: &Assemblage, measurements: &[Vec<HermitianMatrix>]) -> Result<Behaviour> {
    let s = asm.scenario();
    let n_a = measurements.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("no measurements".into()))?;
    for povm in measurements {
        if povm.len() != n_a {
            return Err(Error::InvalidInput("measurements with different outcome counts".into()));
        }
        if povm.iter().any(|e| e.dim() != s.dim_a) {
            return Err(Error::Dimension("effect dimension differs from dim_a".into()));
        }
        check_povm(povm, 1e-10)?;
    }
    let dims = BehaviourDims { n_x: measurements.len(), n_y: s.set_b, n_z: s.set_c, n_a, n_b: s.out_b, n_c: s.out_c };
    let mut p = vec![0.0; dims.len()];
    for (x, povm) in measurements.iter().enumerate() {
        for (a, e) in povm.iter().enumerate() {
            for (cell, m) in asm.iter() {
                p[dims.index(x, cell.y, cell.z, a, cell.b, cell.c)] = e.trace_product(m).re;
            }
        }
    }
    Behaviour::new(dims, p)
}
