//! Bell locality of behaviours `p(abc|xyz)` by linear programming over
//! deterministic strategies, the four-setting octagon measurement set in the
//! x–z plane, and the covering of noisy projective measurements by it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assemblage::Assemblage;
use crate::conic::{ConicProgram, LinExpr, RowBlock, SolverSettings};
use crate::constructions::behaviour;
use crate::error::{Error, Result};
use crate::linalg::{pauli_x, pauli_z, HermitianMatrix};

/// Default tolerance on `‖Σ_λ q_λ D_λ − p‖_∞` for declaring a behaviour local.
pub const LOCALITY_EPS: f64 = 1e-7;
/// Default cap on the number of deterministic strategies.
pub const STRATEGY_CAP: usize = 1_000_000;
/// Entrywise tolerance for [`Behaviour::check`].
pub const BEHAVIOUR_TOL: f64 = 1e-10;

/// Largest visibility at which every x–z-plane projective measurement is a
/// mixture of the octagon set, `cos(π/8)`.
pub fn octagon_visibility() -> f64 {
    (PI / 8.0).cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviourDims {
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
}

impl BehaviourDims {
    pub fn len(&self) -> usize {
        self.settings() * self.n_a * self.n_b * self.n_c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of setting triples `(x, y, z)`.
    pub fn settings(&self) -> usize {
        self.n_x * self.n_y * self.n_z
    }

    /// Row-major in `(x, y, z, a, b, c)`.
    pub fn index(&self, x: usize, y: usize, z: usize, a: usize, b: usize, c: usize) -> usize {
        ((((x * self.n_y + y) * self.n_z + z) * self.n_a + a) * self.n_b + b) * self.n_c + c
    }

    pub fn num_strategies(&self) -> Option<usize> {
        let pow = |base: usize, exp: usize| base.checked_pow(exp as u32);
        pow(self.n_a, self.n_x)?.checked_mul(pow(self.n_b, self.n_y)?)?.checked_mul(pow(self.n_c, self.n_z)?)
    }

    fn check(&self) -> Result<()> {
        if [self.n_x, self.n_y, self.n_z, self.n_a, self.n_b, self.n_c].contains(&0) {
            return Err(Error::InvalidInput(format!("behaviour dimensions must be >= 1: {self:?}")));
        }
        Ok(())
    }
}

/// Conditional probability table `p(abc|xyz)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Behaviour {
    pub dims: BehaviourDims,
    /// Flattened row-major in `(x, y, z, a, b, c)`.
    pub p: Vec<f64>,
}

impl Behaviour {
    /// Shape check only; see [`Behaviour::check`] for the probabilistic
    /// invariants.
    pub fn new(dims: BehaviourDims, p: Vec<f64>) -> Result<Self> {
        dims.check()?;
        if p.len() != dims.len() {
            return Err(Error::Dimension(format!("behaviour needs {} entries, got {}", dims.len(), p.len())));
        }
        Ok(Behaviour { dims, p })
    }

    pub fn get(&self, x: usize, y: usize, z: usize, a: usize, b: usize, c: usize) -> f64 {
        self.p[self.dims.index(x, y, z, a, b, c)]
    }

    /// Nonnegativity and normalization within `tol`, no-signaling within
    /// `10 tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let d = self.dims;
        if let Some(min) = self.p.iter().copied().reduce(f64::min) {
            if min < -tol {
                return Err(Error::InvalidInput(format!("negative probability {min:.3e}")));
            }
        }
        for (k, chunk) in self.p.chunks(d.n_a * d.n_b * d.n_c).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidInput(format!("setting triple {k} sums to {s}")));
            }
        }
        let dev = self.signaling_deviation();
        if dev > 10.0 * tol {
            return Err(Error::InvalidInput(format!("behaviour is signaling (deviation {dev:.3e})")));
        }
        Ok(())
    }

    /// Largest dependence of any one- or two-party marginal on the remaining
    /// parties' settings.
    pub fn signaling_deviation(&self) -> f64 {
        let d = self.dims;
        let mut dev: f64 = 0.0;
        // marginal over one party's outcome, compared across that party's settings
        for party in 0..3 {
            let n_in = [d.n_x, d.n_y, d.n_z][party];
            for x in 0..d.n_x {
                for y in 0..d.n_y {
                    for z in 0..d.n_z {
                        for a in 0..d.n_a {
                            for b in 0..d.n_b {
                                for c in 0..d.n_c {
                                    let marg = |s: usize| -> f64 {
                                        match party {
                                            0 => (0..d.n_a).map(|aa| self.get(s, y, z, aa, b, c)).sum(),
                                            1 => (0..d.n_b).map(|bb| self.get(x, s, z, a, bb, c)).sum(),
                                            _ => (0..d.n_c).map(|cc| self.get(x, y, s, a, b, cc)).sum(),
                                        }
                                    };
                                    let m0 = marg(0);
                                    for s in 1..n_in {
                                        dev = dev.max((marg(s) - m0).abs());
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        dev
    }

    /// `Σ_cells g · p`.
    pub fn dot(&self, g: &[f64]) -> f64 {
        self.p.iter().zip(g).map(|(a, b)| a * b).sum()
    }
}

/// Local deterministic response functions `a(x)`, `b(y)`, `c(z)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn behaviour(&self, dims: BehaviourDims) -> Result<Behaviour> {
        if self.a.len() != dims.n_x || self.b.len() != dims.n_y || self.c.len() != dims.n_z {
            return Err(Error::Dimension("strategy does not match behaviour settings".into()));
        }
        if self.a.iter().any(|&v| v >= dims.n_a) || self.b.iter().any(|&v| v >= dims.n_b) || self.c.iter().any(|&v| v >= dims.n_c) {
            return Err(Error::InvalidInput("strategy response outside outcome range".into()));
        }
        let mut p = vec![0.0; dims.len()];
        for x in 0..dims.n_x {
            for y in 0..dims.n_y {
                for z in 0..dims.n_z {
                    p[dims.index(x, y, z, self.a[x], self.b[y], self.c[z])] = 1.0;
                }
            }
        }
        Behaviour::new(dims, p)
    }

    /// Cells where this strategy's behaviour is one.
    fn support(&self, dims: &BehaviourDims) -> impl Iterator<Item = usize> + '_ {
        let d = *dims;
        (0..d.n_x).flat_map(move |x| {
            (0..d.n_y).flat_map(move |y| (0..d.n_z).map(move |z| d.index(x, y, z, self.a[x], self.b[y], self.c[z])))
        })
    }
}

/// All response tuples of length `n` over `k` values, lexicographic.
fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        out = out.into_iter().flat_map(|t| (0..k).map(move |v| {
            let mut t = t.clone();
            t.push(v);
            t
        })).collect();
    }
    out
}

/// Every deterministic strategy, lexicographic in (a-responses, b-responses,
/// c-responses).
pub fn enumerate_strategies(dims: BehaviourDims, cap: usize) -> Result<Vec<DeterministicStrategy>> {
    dims.check()?;
    let count = dims.num_strategies().unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::InvalidInput(format!("{count} deterministic strategies exceed the cap of {cap}")));
    }
    let (ta, tb, tc) = (tuples(dims.n_x, dims.n_a), tuples(dims.n_y, dims.n_b), tuples(dims.n_z, dims.n_c));
    let mut out = Vec::with_capacity(count);
    for a in &ta {
        for b in &tb {
            for c in &tc {
                out.push(DeterministicStrategy { a: a.clone(), b: b.clone(), c: c.clone() });
            }
        }
    }
    Ok(out)
}

/// Bell functional `g` with `min_λ g·D_λ = local_bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellFunctional {
    /// Same layout as [`Behaviour::p`].
    pub coefficients: Vec<f64>,
    pub local_bound: f64,
    /// `g·p` on the tested behaviour.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityCertificate {
    pub local: bool,
    /// Optimal `‖Σ_λ q_λ D_λ − p‖_∞`.
    pub distance: f64,
    pub epsilon: f64,
    /// Weights over [`enumerate_strategies`] order.
    pub weights: Vec<f64>,
    /// Present when the behaviour is nonlocal.
    pub bell_functional: Option<BellFunctional>,
}

impl LocalityCertificate {
    /// Indices and weights above `tol`.
    pub fn support(&self, tol: f64) -> Vec<(usize, f64)> {
        self.weights.iter().copied().enumerate().filter(|&(_, w)| w > tol).collect()
    }
}

/// The locality LP with handles on its variables and deviation rows.
pub struct LocalityLp {
    pub program: ConicProgram,
    pub strategies: Vec<DeterministicStrategy>,
    /// Strategy weights.
    pub q: Vec<usize>,
    /// L∞ distance.
    pub t: usize,
    pub upper: RowBlock,
    pub lower: RowBlock,
}

/// Builds the LP solved by [`is_local`].
pub fn locality_lp(p: &Behaviour) -> Result<LocalityLp> {
    let dims = p.dims;
    let strategies = enumerate_strategies(dims, STRATEGY_CAP)?;
    let n = strategies.len();
    let mut cells: Vec<LinExpr> = p.p.iter().map(|&v| LinExpr::constant(-v)).collect();

    let mut prog = ConicProgram::new();
    let q = prog.add_vars(n);
    let t = prog.add_var();
    for (lam, s) in strategies.iter().enumerate() {
        for cell in s.support(&dims) {
            cells[cell].push(q[lam], 1.0);
        }
    }
    prog.minimize(LinExpr::var(t));
    let mut sum = LinExpr::constant(-1.0);
    for &v in &q {
        sum.push(v, 1.0);
    }
    prog.add_zero(vec![sum]);
    let upper = prog.add_nonneg(cells.iter().map(|e| LinExpr::var(t) - e.clone()).collect());
    let lower = prog.add_nonneg(cells.iter().map(|e| LinExpr::var(t) + e.clone()).collect());
    prog.add_nonneg(q.iter().map(|&v| LinExpr::var(v)).collect());
    Ok(LocalityLp { program: prog, strategies, q, t, upper, lower })
}

/// Solves `min t` subject to `|Σ_λ q_λ D_λ − p| ≤ t` entrywise, `q ≥ 0`,
/// `Σ q = 1`; the behaviour is local iff `t ≤ eps`. For nonlocal behaviours
/// the dual gives a Bell functional normalized to local bound 0, whose value
/// on `p` is `−t`.
pub fn is_local(p: &Behaviour, eps: f64) -> Result<LocalityCertificate> {
    let LocalityLp { program: prog, strategies, q, t, upper, lower } = locality_lp(p)?;
    let sol = prog.solve(&SolverSettings::default())?.require_optimal("locality LP")?;

    let distance = sol.x[t].max(0.0);
    let weights: Vec<f64> = q.iter().map(|&v| sol.x[v].max(0.0)).collect();
    let local = distance <= eps;
    let bell_functional = if local {
        None
    } else {
        let w: Vec<f64> = upper.range().zip(lower.range()).map(|(u, l)| sol.z[u] - sol.z[l]).collect();
        Some(normalize_bell_functional(p, &strategies, &w))
    };
    Ok(LocalityCertificate { local, distance, epsilon: eps, weights, bell_functional })
}

/// From dual weights `w` (either sign convention), builds
/// `g = −w + L/N_settings` with `L = max_λ w·D_λ`, so that `min_λ g·D_λ = 0`
/// and `g·p = L − w·p`. The sign giving the more negative value is kept.
fn normalize_bell_functional(p: &Behaviour, strategies: &[DeterministicStrategy], w: &[f64]) -> BellFunctional {
    let dims = p.dims;
    let norm: f64 = w.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let candidates = [1.0, -1.0].map(|sign| {
        let w: Vec<f64> = w.iter().map(|v| sign * v / norm).collect();
        let l = strategies.iter().map(|s| s.support(&dims).map(|k| w[k]).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        let shift = l / dims.settings() as f64;
        let g: Vec<f64> = w.iter().map(|v| shift - v).collect();
        let value = p.dot(&g);
        BellFunctional { coefficients: g, local_bound: 0.0, value }
    });
    let [a, b] = candidates;
    if a.value <= b.value {
        a
    } else {
        b
    }
}

/// Labelled list of POVMs on the trusted party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    pub povms: Vec<Vec<HermitianMatrix>>,
    pub labels: Vec<String>,
}

impl MeasurementSet {
    /// Checks completeness and positivity of every POVM within `1e-10`.
    pub fn new(povms: Vec<Vec<HermitianMatrix>>, labels: Vec<String>) -> Result<Self> {
        if povms.len() != labels.len() {
            return Err(Error::Dimension("one label per POVM".into()));
        }
        for povm in &povms {
            check_povm(povm, 1e-10)?;
        }
        Ok(MeasurementSet { povms, labels })
    }

    pub fn len(&self) -> usize {
        self.povms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.povms.is_empty()
    }
}

pub(crate) fn check_povm(povm: &[HermitianMatrix], tol: f64) -> Result<()> {
    let first = povm.first().ok_or_else(|| Error::InvalidInput("empty POVM".into()))?;
    let n = first.dim();
    if povm.iter().any(|e| e.dim() != n) {
        return Err(Error::Dimension("POVM effects of different dimensions".into()));
    }
    let sum = HermitianMatrix::sum(povm.iter()).expect("nonempty");
    let dev = sum.max_abs_diff(&HermitianMatrix::identity(n));
    if dev > tol {
        return Err(Error::InvalidInput(format!("incomplete POVM: Σ E = I violated by {dev:.3e}")));
    }
    if let Some(min) = povm.iter().map(|e| e.min_eigenvalue()).reduce(f64::min) {
        if min < -tol {
            return Err(Error::InvalidInput(format!("POVM effect with eigenvalue {min:.3e}")));
        }
    }
    Ok(())
}

/// `Π_{a|θ}(μ) = (I + (−1)^a μ (cos θ X + sin θ Z))/2`.
pub fn xz_effect(a: usize, theta: f64, mu: f64) -> HermitianMatrix {
    let sign = if a == 0 { 1.0 } else { -1.0 };
    let r = &pauli_x().scale(theta.cos()) + &pauli_z().scale(theta.sin());
    (&HermitianMatrix::identity(2) + &r.scale(sign * mu)).scale(0.5)
}

/// Projective measurements at `θ_x = xπ/4`, `x = 0..3`.
pub fn octagon_set() -> MeasurementSet {
    let angles: Vec<f64> = (0..4).map(|x| x as f64 * PI / 4.0).collect();
    MeasurementSet {
        povms: angles.iter().map(|&th| vec![xz_effect(0, th, 1.0), xz_effect(1, th, 1.0)]).collect(),
        labels: (0..4).map(|x| format!("theta={x}pi/4")).collect(),
    }
}

/// Mixture weights `c[a'][x]` with `Π_{0|θ}(μ) = Σ c[a'][x] Π_{a'|θ_x}`; the
/// outcome-1 effect uses the mirrored weights `c[1−a'][x]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub theta: f64,
    pub mu: f64,
    pub coefficients: [[f64; 4]; 2],
    /// `max_a ‖Π_{a|θ}(μ) − Σ c Π‖_max`.
    pub reconstruction_error: f64,
}

fn octagon_bloch(a: usize, x: usize) -> (f64, f64) {
    let th = x as f64 * PI / 4.0;
    let s = if a == 0 { 1.0 } else { -1.0 };
    (s * th.cos(), s * th.sin())
}

/// Writes the noisy x–z measurement at angle `θ` and visibility `μ` as a
/// mixture of the octagon measurements. Feasible iff `μ(cos θ, sin θ)` lies
/// in the regular octagon spanned by the eight octagon Bloch vectors, which
/// always holds for `μ ≤ cos(π/8)`.
pub fn cover_noisy_measurement(theta: f64, mu: f64) -> Result<Covering> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidInput(format!("visibility {mu} outside [0, 1]")));
    }
    let target = [1.0, mu * theta.cos(), mu * theta.sin()];
    let rows = |a: usize, x: usize| {
        let (bx, bz) = octagon_bloch(a, x);
        [1.0, bx, bz]
    };
    let mut prog = ConicProgram::new();
    let c = prog.add_vars(8);
    prog.minimize(LinExpr::zero());
    let eqs = (0..3)
        .map(|r| {
            let mut e = LinExpr::constant(-target[r]);
            for k in 0..8 {
                e.push(c[k], rows(k / 4, k % 4)[r]);
            }
            e
        })
        .collect();
    prog.add_zero(eqs);
    prog.add_nonneg(c.iter().map(|&v| LinExpr::var(v)).collect());
    let sol = prog.solve(&SolverSettings::default())?;
    if sol.status == crate::conic::ConicStatus::PrimalInfeasible {
        return Err(Error::Infeasible(format!(
            "visibility {mu} at angle {theta} lies outside the octagon (covering bound exceeded)"
        )));
    }
    let sol = sol.require_optimal("covering LP")?;
    let mut w: Vec<f64> = c.iter().map(|&v| sol.x[v].max(0.0)).collect();

    // least-norm correction on the support brings the residual to rounding level
    for _ in 0..3 {
        let support: Vec<usize> = (0..8).filter(|&k| w[k] > 1e-12).collect();
        if support.is_empty() {
            break;
        }
        let m = DMatrix::from_fn(3, support.len(), |r, j| rows(support[j] / 4, support[j] % 4)[r]);
        let resid = DVector::from_fn(3, |r, _| target[r] - (0..8).map(|k| w[k] * rows(k / 4, k % 4)[r]).sum::<f64>());
        let pinv = m.clone().pseudo_inverse(1e-12).map_err(|e| Error::Solver(e.to_string()))?;
        let delta = pinv * resid;
        for (j, &k) in support.iter().enumerate() {
            w[k] = (w[k] + delta[j]).max(0.0);
        }
    }
    for k in 0..8 {
        if w[k] < 1e-15 {
            w[k] = 0.0;
        }
    }
    let mut coefficients = [[0.0; 4]; 2];
    for k in 0..8 {
        coefficients[k / 4][k % 4] = w[k];
    }
    let octagon = octagon_set();
    let mut err: f64 = 0.0;
    for a in 0..2 {
        let mut sum = HermitianMatrix::zeros(2);
        for (ap, row) in coefficients.iter().enumerate() {
            for (x, &cx) in row.iter().enumerate() {
                sum = &sum + &octagon.povms[x][ap ^ a].scale(cx);
            }
        }
        err = err.max(sum.max_abs_diff(&xz_effect(a, theta, mu)));
    }
    if err > 1e-10 {
        return Err(Error::Infeasible(format!(
            "covering at visibility {mu}, angle {theta} only reaches error {err:.3e}"
        )));
    }
    Ok(Covering { theta, mu, coefficients, reconstruction_error: err })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveLocalityVerdict {
    pub pass: bool,
    pub mu: f64,
    pub reason: String,
    pub certificate: Option<LocalityCertificate>,
}

/// PASS iff the octagon behaviour of `asm` is local and `μ ≤ cos(π/8)`; a
/// PASS certifies that `σ(μ)` gives local behaviours for every projective
/// measurement of the trusted qubit.
pub fn locality_for_all_projective(asm: &Assemblage, mu: f64) -> Result<ProjectiveLocalityVerdict> {
    locality_for_all_projective_eps(asm, mu, LOCALITY_EPS)
}

pub fn locality_for_all_projective_eps(asm: &Assemblage, mu: f64, eps: f64) -> Result<ProjectiveLocalityVerdict> {
    if asm.scenario().dim_a != 2 {
        return Err(Error::InvalidInput("projective locality needs a qubit trusted party".into()));
    }
    let imag = asm.blocks().iter().map(|m| m.max_imag()).fold(0.0, f64::max);
    if imag > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "blocks have imaginary parts up to {imag:.3e}; the x–z plane reduction needs real blocks"
        )));
    }
    if mu > octagon_visibility() {
        return Ok(ProjectiveLocalityVerdict {
            pass: false,
            mu,
            reason: "covering bound exceeded".into(),
            certificate: None,
        });
    }
    let cert = is_local(&behaviour(asm, &octagon_set().povms)?, eps)?;
    let (pass, reason) = if cert.local {
        (true, format!("octagon behaviour local (distance {:.3e})", cert.distance))
    } else {
        (false, format!("octagon behaviour nonlocal (distance {:.3e})", cert.distance))
    };
    Ok(ProjectiveLocalityVerdict { pass, mu, reason, certificate: Some(cert) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{add_noise, denoise, prbox_product};
    use crate::fixtures;
    use crate::random::random_ns_assemblage;
    use crate::scenario::Scenario;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn octagon_dims() -> BehaviourDims {
        BehaviourDims { n_x: 4, n_y: 2, n_z: 2, n_a: 2, n_b: 2, n_c: 2 }
    }

    fn pr_behaviour() -> Behaviour {
        let dims = BehaviourDims { n_x: 1, n_y: 2, n_z: 2, n_a: 2, n_b: 2, n_c: 2 };
        let mut p = vec![0.0; dims.len()];
        for y in 0..2 {
            for z in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            if b ^ c == y & z {
                                p[dims.index(0, y, z, a, b, c)] = 0.25;
                            }
                        }
                    }
                }
            }
        }
        Behaviour::new(dims, p).unwrap()
    }

    #[test]
    fn octagon_projectors() {
        let e = octagon_set();
        assert_eq!(e.len(), 4);
        let plus_x = (&HermitianMatrix::identity(2) + &pauli_x()).scale(0.5);
        assert!(e.povms[0][0].max_abs_diff(&plus_x) < 1e-15);
        let plus_z = (&HermitianMatrix::identity(2) + &pauli_z()).scale(0.5);
        assert!(e.povms[2][0].max_abs_diff(&plus_z) < 1e-15);
        for povm in &e.povms {
            assert!((&povm[0] + &povm[1]).max_abs_diff(&HermitianMatrix::identity(2)) < 1e-15);
            for pi in povm {
                let sq = HermitianMatrix::symmetrized(pi.matrix() * pi.matrix());
                assert!(sq.max_abs_diff(pi) < 1e-12);
            }
        }
        assert!(MeasurementSet::new(e.povms.clone(), e.labels.clone()).is_ok());
    }

    #[test]
    fn strategy_counts_and_order() {
        let s = enumerate_strategies(octagon_dims(), STRATEGY_CAP).unwrap();
        assert_eq!(s.len(), 256);
        assert_eq!(s, enumerate_strategies(octagon_dims(), STRATEGY_CAP).unwrap());
        assert_eq!(s[0], DeterministicStrategy { a: vec![0; 4], b: vec![0; 2], c: vec![0; 2] });
        assert_eq!(s[1].c, vec![0, 1]);
        assert_eq!(s[16].a, vec![0, 0, 0, 1]);
        let single = BehaviourDims { n_x: 1, n_y: 1, n_z: 1, n_a: 2, n_b: 2, n_c: 2 };
        assert_eq!(enumerate_strategies(single, STRATEGY_CAP).unwrap().len(), 8);
        assert!(enumerate_strategies(octagon_dims(), 100).is_err());
    }

    #[test]
    fn deterministic_behaviour_is_a_point_mass() {
        let dims = octagon_dims();
        let strategies = enumerate_strategies(dims, STRATEGY_CAP).unwrap();
        for idx in [0, 77, 255] {
            let p = strategies[idx].behaviour(dims).unwrap();
            p.check(BEHAVIOUR_TOL).unwrap();
            let cert = is_local(&p, LOCALITY_EPS).unwrap();
            assert!(cert.local);
            assert!((cert.weights[idx] - 1.0).abs() < 1e-9, "{}", cert.weights[idx]);
        }
    }

    #[test]
    fn pr_box_is_nonlocal_with_chsh_certificate() {
        let p = pr_behaviour();
        p.check(BEHAVIOUR_TOL).unwrap();
        let cert = is_local(&p, LOCALITY_EPS).unwrap();
        assert!(!cert.local);
        // oracle: the PR box sits at L∞ distance 1/16 from the local polytope
        assert!((cert.distance - 0.0625).abs() < 1e-6, "{}", cert.distance);
        let g = cert.bell_functional.unwrap();
        assert!((g.value + cert.distance).abs() < 1e-6);
        let dims = p.dims;
        for s in enumerate_strategies(dims, STRATEGY_CAP).unwrap() {
            assert!(s.behaviour(dims).unwrap().dot(&g.coefficients) >= -1e-9);
        }
    }

    #[test]
    fn pr_box_product_fails_projective_locality() {
        let asm = prbox_product(&HermitianMatrix::identity(2).scale(0.5)).unwrap();
        let v = locality_for_all_projective(&asm, octagon_visibility()).unwrap();
        assert!(!v.pass);
    }

    #[test]
    fn covering_bound_is_enforced() {
        let asm = prbox_product(&HermitianMatrix::identity(2).scale(0.5)).unwrap();
        let v = locality_for_all_projective(&asm, 0.95).unwrap();
        assert!(!v.pass);
        assert_eq!(v.reason, "covering bound exceeded");
    }

    #[test]
    fn covering_examples() {
        let c = cover_noisy_measurement(PI / 4.0, 1.0).unwrap();
        assert!((c.coefficients[0][1] - 1.0).abs() < 1e-10);
        let mid = cover_noisy_measurement(PI / 8.0, octagon_visibility()).unwrap();
        assert!((mid.coefficients[0][0] - 0.5).abs() < 1e-9);
        assert!((mid.coefficients[0][1] - 0.5).abs() < 1e-9);
        assert!(cover_noisy_measurement(PI / 8.0, octagon_visibility() + 1e-3).is_err());
    }

    #[test]
    fn covering_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let theta = rng.random_range(0.0..2.0 * PI);
            let c = cover_noisy_measurement(theta, octagon_visibility()).unwrap();
            assert!(c.reconstruction_error <= 1e-10);
            let total: f64 = c.coefficients.iter().flatten().sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert!(c.coefficients.iter().flatten().all(|&x| x >= 0.0));
            let bx: f64 = (0..8).map(|k| c.coefficients[k / 4][k % 4] * octagon_bloch(k / 4, k % 4).0).sum();
            let bz: f64 = (0..8).map(|k| c.coefficients[k / 4][k % 4] * octagon_bloch(k / 4, k % 4).1).sum();
            assert!((bx - octagon_visibility() * theta.cos()).abs() < 1e-10);
            assert!((bz - octagon_visibility() * theta.sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn locality_is_monotone_under_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Scenario::qubit_2222();
        let mut tested = 0;
        for _ in 0..6 {
            let asm = random_ns_assemblage(&mut rng, s).map_blocks(|_, m| HermitianMatrix::symmetrized(m.matrix().map(|z| num_complex::Complex64::new(z.re, 0.0)))).unwrap();
            let p = behaviour(&asm, &octagon_set().povms).unwrap();
            if !is_local(&p, LOCALITY_EPS).unwrap().local {
                continue;
            }
            tested += 1;
            for mu in [0.9, 0.5, 0.0] {
                let noisy = behaviour(&add_noise(&asm, mu).unwrap(), &octagon_set().povms).unwrap();
                assert!(is_local(&noisy, LOCALITY_EPS).unwrap().local);
            }
        }
        assert!(tested > 0);
    }

    #[test]
    fn example_denoised_octagon_distance() {
        // frozen from the LP run: the de-noised example sits 2.8895e-3 outside
        // the octagon local polytope, while the noisy example itself is local
        let asm = fixtures::example_assemblage();
        let de = denoise(&asm, fixtures::example_noise()).unwrap();
        let v = locality_for_all_projective(&de, fixtures::example_noise()).unwrap();
        let cert = v.certificate.unwrap();
        assert!((cert.distance - 2.8895e-3).abs() < 5e-6, "{}", cert.distance);
        assert!(!v.pass);
        let direct = is_local(&behaviour(&asm, &octagon_set().povms).unwrap(), LOCALITY_EPS).unwrap();
        assert!(direct.local);
    }

    #[test]
    fn complex_blocks_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let asm = random_ns_assemblage(&mut rng, Scenario::qubit_2222());
        assert!(locality_for_all_projective(&asm, 0.5).is_err());
    }

    #[test]
    fn behaviour_json_round_trip() {
        let p = pr_behaviour();
        let v = serde_json::to_value(&p).unwrap();
        assert!(v.get("dims").is_some() && v.get("p").is_some());
        let back: Behaviour = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
