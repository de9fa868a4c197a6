//! Random instances for tests, property checks and search restarts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::assemblage::{Assemblage, BipartiteAssemblage};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::scenario::Scenario;

fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `rows × cols` matrix with independent complex Gaussian entries.
pub fn ginibre(rng: &mut impl Rng, rows: usize, cols: usize, complex: bool) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let im = if complex { gaussian(rng) } else { 0.0 };
        Complex64::new(gaussian(rng), im)
    })
}

/// Hermitian matrix with standard-normal entries (complex off-diagonal).
pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    let g = ginibre(rng, n, n, true);
    HermitianMatrix::symmetrized(&g + g.adjoint())
}

/// Real symmetric matrix with standard-normal entries.
pub fn random_real_symmetric(rng: &mut impl Rng, n: usize) -> HermitianMatrix {
    let g = ginibre(rng, n, n, false);
    HermitianMatrix::symmetrized(&g + g.adjoint())
}

/// Density matrix of the given rank, `G G† / tr(G G†)`.
pub fn random_density(rng: &mut impl Rng, n: usize, rank: usize, complex: bool) -> HermitianMatrix {
    let g = ginibre(rng, n, rank.clamp(1, n), complex);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    HermitianMatrix::symmetrized(m / Complex64::new(t, 0.0))
}

/// POVM with `k` full-rank effects: `M_b = S^{-1/2} G_b S^{-1/2}` with
/// `S = Σ_b G_b`.
pub fn random_povm(rng: &mut impl Rng, n: usize, k: usize, complex: bool) -> Vec<HermitianMatrix> {
    let gs: Vec<CMatrix> = (0..k)
        .map(|_| {
            let g = ginibre(rng, n, n, complex);
            &g * g.adjoint()
        })
        .collect();
    let s = HermitianMatrix::symmetrized(gs.iter().fold(CMatrix::zeros(n, n), |acc, g| acc + g));
    let (vals, vecs) = s.eigh();
    let inv_sqrt = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        vals.iter().map(|&v| Complex64::new(1.0 / v.sqrt(), 0.0)),
    ));
    let s_inv_half = &vecs * inv_sqrt * vecs.adjoint();
    gs.iter().map(|g| HermitianMatrix::symmetrized(&s_inv_half * g * &s_inv_half)).collect()
}

/// Positive square root of a PSD matrix (negative eigenvalues clipped).
pub fn psd_sqrt(m: &HermitianMatrix) -> CMatrix {
    let (vals, vecs) = m.eigh();
    let floor = 1e-12 * vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m.dim(),
        vals.iter().map(|&v| Complex64::new(if v > floor { v.sqrt() } else { 0.0 }, 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Quantum bipartite assemblage `σ_{b|y} = ρ^{1/2} M_{b|y}^T ρ^{1/2}` from a
/// random state of the given rank and random POVMs. Every no-signaling
/// bipartite assemblage has this form.
pub fn random_bipartite_ns(
    rng: &mut impl Rng,
    dim_a: usize,
    outcomes: usize,
    settings: usize,
    rank: usize,
    complex: bool,
) -> BipartiteAssemblage {
    let rho = random_density(rng, dim_a, rank, complex);
    let root = psd_sqrt(&rho);
    let blocks = (0..settings)
        .map(|_| {
            random_povm(rng, dim_a, outcomes, complex)
                .into_iter()
                .map(|m| HermitianMatrix::symmetrized(&root * m.matrix().transpose() * &root))
                .collect()
        })
        .collect();
    BipartiteAssemblage::new(blocks).expect("well-shaped")
}

/// Random no-signaling box `p(bc|yz)`: a mixture of deterministic boxes and,
/// for binary scenarios, PR-type boxes.
pub fn random_ns_box(rng: &mut impl Rng, s: &Scenario) -> Vec<f64> {
    let n = s.out_b * s.out_c * s.set_b * s.set_c;
    let mut p = vec![0.0; n];
    let parts = 3;
    let weights: Vec<f64> = (0..parts).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let binary = s.out_b == 2 && s.out_c == 2;
    for w in weights {
        let w = w / total;
        if binary && rng.random_bool(0.5) {
            // b ⊕ c = (y ⊕ α)(z ⊕ β) ⊕ γ
            let (al, be, ga) = (rng.random_range(0..2), rng.random_range(0..2), rng.random_range(0..2));
            for cell in s.cells() {
                if (cell.b ^ cell.c) == (((cell.y % 2) ^ al) & ((cell.z % 2) ^ be)) ^ ga {
                    p[s.cell_index(cell)] += 0.5 * w;
                }
            }
        } else {
            let fb: Vec<usize> = (0..s.set_b).map(|_| rng.random_range(0..s.out_b)).collect();
            let fc: Vec<usize> = (0..s.set_c).map(|_| rng.random_range(0..s.out_c)).collect();
            for cell in s.cells() {
                if fb[cell.y] == cell.b && fc[cell.z] == cell.c {
                    p[s.cell_index(cell)] += w;
                }
            }
        }
    }
    p
}

/// Valid no-signaling assemblage `σ_{bc|yz} = Σ_k p_k(bc|yz) ρ_k` with random
/// no-signaling boxes `p_k` and random complex states `ρ_k`.
pub fn random_ns_assemblage(rng: &mut impl Rng, s: Scenario) -> Assemblage {
    let k = 3;
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let comps: Vec<(Vec<f64>, HermitianMatrix)> = weights
        .iter()
        .map(|w| {
            let p = random_ns_box(rng, &s);
            let rank = rng.random_range(1..=s.dim_a);
            (p, random_density(rng, s.dim_a, rank, true).scale(w / total))
        })
        .collect();
    Assemblage::from_fn(s, |cell| {
        let i = s.cell_index(cell);
        comps.iter().fold(HermitianMatrix::zeros(s.dim_a), |acc, (p, r)| &acc + &r.scale(p[i]))
    })
    .expect("well-shaped")
}
