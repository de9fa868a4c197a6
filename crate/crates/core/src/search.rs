//! Randomized search for post-quantum assemblages whose induced behaviours
//! are local for every projective measurement of the trusted qubit.
//!
//! Each attempt samples a functional `F`, computes its almost-quantum bound
//! `β_Q̃`, and minimizes `F` over real no-signaling assemblages whose octagon
//! behaviours are local. If the minimum `β` beats `β_Q̃`, the critical
//! visibility `μ` at which `F(σ(μ)) = β_Q̃` is driven below the target by
//! finite-difference descent on the parameters of `F`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aq::{aq_bound_with, aq_visibility_with, membership_sdp, AqOptions, Membership, MembershipVerdict};
use crate::assemblage::{validate_tripartite_ns, Assemblage, ValidationReport};
use crate::conic::{ConicProgram, ConicStatus, LinExpr, SolverSettings};
use crate::constructions::{add_noise, behaviour};
use crate::error::{Error, Result};
use crate::functional::{evaluate_functional, MinimalFunctional, SteeringFunctional};
use crate::linalg::HermitianMatrix;
use crate::locality::{
    enumerate_strategies, locality_for_all_projective_eps, octagon_set, octagon_visibility, BehaviourDims,
    ProjectiveLocalityVerdict, LOCALITY_EPS, STRATEGY_CAP,
};
use crate::scenario::{cell_expansion, word_set, Scenario, Word};

/// Seed used by the acceptance run and the CLI default.
pub const DEFAULT_SEED: u64 = 1234;
/// Attempts solved concurrently before results are compared.
pub const BATCH_SIZE: usize = 8;
/// Tolerance of the affinity check `F(σ(μ)) = μ v₁ + (1 − μ) v₀`.
pub const AFFINITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DescentMethod {
    /// Alternates the functional supporting the almost-quantum set at the
    /// critical visibility of `σ` with the minimizer of that functional at
    /// that visibility. Neither step can increase `μ`.
    #[serde(rename = "alternating")]
    Alternating,
    /// Forward differences on the functional's parameters with backtracking.
    #[serde(rename = "finite_difference")]
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DescentObjective {
    /// Critical visibility `μ`.
    #[serde(rename = "mu_critical")]
    MuCritical,
    /// `β − β_Q̃` at unit visibility.
    #[serde(rename = "gap")]
    Gap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub rng_seed: u64,
    /// Attempts after the first.
    pub max_restarts: usize,
    pub max_descent_steps: usize,
    pub method: DescentMethod,
    /// Forward-difference step on functional parameters.
    pub fd_step: f64,
    /// First trial step of each backtracking line search.
    pub descent_step: f64,
    pub shrink: f64,
    pub min_step: f64,
    pub mu_target: f64,
    /// Bob/Charlie symmetrize sampled functionals.
    pub symmetrize: bool,
    /// Objective of finite-difference descent.
    pub objective: DescentObjective,
    pub locality_eps: f64,
    /// `β` must fall this far below `β_Q̃` to count as a violation.
    pub violation_tol: f64,
    pub validation_tol: f64,
    pub settings: SolverSettings,
    /// Used instead of a random sample in attempt 0.
    pub initial_functional: Option<SteeringFunctional>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            rng_seed: DEFAULT_SEED,
            max_restarts: 500,
            max_descent_steps: 50,
            method: DescentMethod::Alternating,
            fd_step: 1e-3,
            descent_step: 0.1,
            shrink: 0.5,
            min_step: 1e-6,
            mu_target: octagon_visibility(),
            symmetrize: true,
            objective: DescentObjective::MuCritical,
            locality_eps: LOCALITY_EPS,
            violation_tol: 1e-6,
            validation_tol: 1e-8,
            settings: SolverSettings::default(),
            initial_functional: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_target > 0.0 && self.mu_target <= 1.0) {
            return Err(Error::InvalidInput(format!("μ_target = {} outside (0, 1]", self.mu_target)));
        }
        let positive = [
            ("fd_step", self.fd_step),
            ("descent_step", self.descent_step),
            ("min_step", self.min_step),
            ("violation_tol", self.violation_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidInput("shrink factor must lie in (0, 1)".into()));
        }
        if let Some(f) = &self.initial_functional {
            if *f.scenario() != Scenario::qubit_2222() {
                return Err(Error::InvalidInput("initial functional must be in the qubit 2222 scenario".into()));
            }
        }
        Ok(())
    }
}

/// Minimizer of the locality-constrained program.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstrainedMin {
    /// `Σ tr(F σ(μ_obj))` at the optimum.
    pub beta: f64,
    pub mu_obj: f64,
    /// De-noised optimizer `σ`.
    pub assemblage: Assemblage,
    /// Local weights over [`enumerate_strategies`] order; empty without the
    /// locality constraints.
    pub weights: Vec<f64>,
}

/// Functional with `F(σ(μ)) = F'(σ)`, `F' = μ F + (1 − μ) (tr F / d) I`.
fn noisy_functional(f: &SteeringFunctional, mu: f64) -> SteeringFunctional {
    let d = f.scenario().dim_a;
    let id = HermitianMatrix::identity(d);
    SteeringFunctional::from_fn(*f.scenario(), |cell| {
        let op = f.get(cell);
        &op.scale(mu) + &id.scale((1.0 - mu) * op.trace() / d as f64)
    })
    .expect("same scenario")
}

/// Real symmetric `d × d` block variables in upper-triangle order.
struct SymVars {
    d: usize,
    start: usize,
}

impl SymVars {
    fn count(d: usize) -> usize {
        d * (d + 1) / 2
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // offset of row i in the packed upper triangle
        self.start + i * self.d - i * (i + 1) / 2 + j
    }
}

/// `tr(M X)` for real symmetric `X` given by expressions on its upper triangle.
fn trace_pairing(m: &HermitianMatrix, entry: &dyn Fn(usize, usize) -> LinExpr) -> LinExpr {
    let d = m.dim();
    let mut out = LinExpr::zero();
    for i in 0..d {
        for j in i..d {
            let w = if i == j { m.get(i, i).re } else { 2.0 * m.get(i, j).re };
            if w != 0.0 {
                out.add_scaled(&entry(i, j), w);
            }
        }
    }
    out
}

fn min_program(f: &SteeringFunctional, mu_obj: f64, local: bool, settings: &SolverSettings) -> Result<ConstrainedMin> {
    let s = *f.scenario();
    s.check()?;
    if local && s.dim_a != 2 {
        return Err(Error::InvalidInput("locality constraints need a qubit trusted party".into()));
    }
    let d = s.dim_a;
    let words = word_set(&s);
    let mut prog = ConicProgram::new();
    let vars: Vec<SymVars> = words
        .iter()
        .map(|_| SymVars { d, start: prog.add_vars(SymVars::count(d))[0] })
        .collect();
    let cell_entry = |cell, i, j| {
        let mut e = LinExpr::zero();
        for (w, coef) in cell_expansion(&s, cell) {
            e.push(vars[w].index(i, j), coef);
        }
        e
    };

    let fp = noisy_functional(f, mu_obj);
    let mut objective = LinExpr::zero();
    for (cell, op) in fp.iter() {
        objective.add_scaled(&trace_pairing(op, &|i, j| cell_entry(cell, i, j)), 1.0);
    }
    prog.minimize(objective);

    let mut norm = LinExpr::constant(-1.0);
    for i in 0..d {
        norm.push(vars[0].index(i, i), 1.0);
    }
    prog.add_zero(vec![norm]);
    for cell in s.cells() {
        prog.add_psd(d, |i, j| cell_entry(cell, i, j));
    }

    let mut weights = Vec::new();
    let mut q = Vec::new();
    if local {
        let octagon = octagon_set();
        let dims = BehaviourDims { n_x: octagon.len(), n_y: s.set_b, n_z: s.set_c, n_a: 2, n_b: s.out_b, n_c: s.out_c };
        let strategies = enumerate_strategies(dims, STRATEGY_CAP)?;
        q = prog.add_vars(strategies.len());
        let mut rows: Vec<LinExpr> = vec![LinExpr::zero(); dims.len()];
        for (x, povm) in octagon.povms.iter().enumerate() {
            for (a, effect) in povm.iter().enumerate() {
                for cell in s.cells() {
                    rows[dims.index(x, cell.y, cell.z, a, cell.b, cell.c)] =
                        trace_pairing(effect, &|i, j| cell_entry(cell, i, j));
                }
            }
        }
        for (lam, strategy) in strategies.iter().enumerate() {
            for (k, &v) in strategy.behaviour(dims)?.p.iter().enumerate() {
                if v != 0.0 {
                    rows[k].push(q[lam], -v);
                }
            }
        }
        prog.add_zero(rows);
        let mut total = LinExpr::constant(-1.0);
        for &v in &q {
            total.push(v, 1.0);
        }
        prog.add_zero(vec![total]);
        prog.add_nonneg(q.iter().map(|&v| LinExpr::var(v)).collect());
    }

    let sol = prog.solve(settings)?;
    if sol.status == ConicStatus::PrimalInfeasible {
        // the maximally mixed, locally deterministic assemblage is feasible
        return Err(Error::Solver("locality-constrained program reported infeasible".into()));
    }
    let sol = sol.require_optimal("locality-constrained minimization")?;
    let coords: Vec<HermitianMatrix> = vars
        .iter()
        .map(|v| {
            let data: Vec<f64> = (0..d * d).map(|k| sol.x[v.index(k / d, k % d)]).collect();
            HermitianMatrix::from_real(d, &data)
        })
        .collect::<Result<_>>()?;
    let assemblage = Assemblage::from_word_coordinates(s, &coords)?;
    if local {
        weights = q.iter().map(|&v| sol.x[v].max(0.0)).collect();
    }
    Ok(ConstrainedMin { beta: sol.objective, mu_obj, assemblage, weights })
}

/// Minimizes `Σ tr(F σ(μ_obj))` over real no-signaling qubit assemblages `σ`
/// with `tr ρ_A = 1` whose octagon behaviours `tr(Π_{a|x} σ_{bc|yz})` are
/// local, with the local model's weights as variables.
pub fn constrained_min_sdp(f: &SteeringFunctional, mu_obj: f64) -> Result<ConstrainedMin> {
    constrained_min_sdp_with(f, mu_obj, &SolverSettings::default())
}

pub fn constrained_min_sdp_with(f: &SteeringFunctional, mu_obj: f64, settings: &SolverSettings) -> Result<ConstrainedMin> {
    min_program(f, mu_obj, true, settings)
}

/// Same program without the locality constraints.
pub fn ns_min_sdp(f: &SteeringFunctional, mu_obj: f64) -> Result<ConstrainedMin> {
    min_program(f, mu_obj, false, &SolverSettings::default())
}

/// `(v₁, v₀)`: the functional on `asm` and on its fully depolarized version.
pub fn affine_endpoints(f: &SteeringFunctional, asm: &Assemblage) -> Result<(f64, f64)> {
    Ok((evaluate_functional(f, asm)?, evaluate_functional(f, &add_noise(asm, 0.0)?)?))
}

/// Visibility `μ = (β_Q̃ − v₀)/(v₁ − v₀)` at which `F(σ(μ)) = β_Q̃`. The value
/// is not clipped; it lies in `(0, 1]` exactly when `v₁ ≤ β_Q̃ < v₀`.
pub fn critical_mu(f: &SteeringFunctional, asm: &Assemblage, beta_aq: f64) -> Result<f64> {
    let (v1, v0) = affine_endpoints(f, asm)?;
    mu_from_endpoints(v1, v0, beta_aq)
}

fn mu_from_endpoints(v1: f64, v0: f64, beta_aq: f64) -> Result<f64> {
    let scale = v1.abs().max(v0.abs()).max(1.0);
    if (v1 - v0).abs() <= 1e-12 * scale {
        return Err(Error::InvalidInput("functional takes the same value on σ and its depolarization".into()));
    }
    Ok((beta_aq - v0) / (v1 - v0))
}

/// Largest `|F(σ(μ)) − μ v₁ − (1 − μ) v₀|` over `mus`.
pub fn affinity_deviation(f: &SteeringFunctional, asm: &Assemblage, mus: &[f64]) -> Result<f64> {
    let (v1, v0) = affine_endpoints(f, asm)?;
    mus.iter().try_fold(0.0_f64, |acc, &mu| {
        let v = evaluate_functional(f, &add_noise(asm, mu)?)?;
        Ok(acc.max((v - mu * v1 - (1.0 - mu) * v0).abs()))
    })
}

/// Real functional with standard-normal coordinates in the orthonormal
/// real-symmetric basis per cell, optionally Bob/Charlie symmetrized, scaled
/// to unit `Σ ‖F_{bcyz}‖_F`.
pub fn random_functional(rng: &mut impl Rng, s: Scenario, symmetrize: bool) -> Result<SteeringFunctional> {
    let d = s.dim_a;
    let f = SteeringFunctional::from_fn(s, |_| {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = rng.sample(StandardNormal);
            for j in i + 1..d {
                let v: f64 = rng.sample::<f64, _>(StandardNormal) / std::f64::consts::SQRT_2;
                data[i * d + j] = v;
                data[j * d + i] = v;
            }
        }
        HermitianMatrix::from_real(d, &data).expect("square data")
    })?;
    let f = if symmetrize { f.symmetrized()? } else { f };
    normalized(&f)
}

fn normalized(f: &SteeringFunctional) -> Result<SteeringFunctional> {
    let n = f.norm_l1_frobenius();
    if !(n > 0.0) {
        return Err(Error::InvalidInput("functional vanishes".into()));
    }
    Ok(f.scale(1.0 / n))
}

/// Real coordinates of a functional through its word coefficients, with
/// Charlie words tied to Bob words under symmetrization.
struct Parametrization {
    s: Scenario,
    /// Parameter slot of each word.
    slot: Vec<usize>,
    slots: usize,
}

impl Parametrization {
    fn new(s: Scenario, symmetric: bool) -> Result<Self> {
        let words = word_set(&s);
        if symmetric && (s.set_b != s.set_c || s.out_b != s.out_c) {
            return Err(Error::InvalidInput("symmetrization needs matching Bob and Charlie settings".into()));
        }
        let rep = |w: Word| match w {
            Word::C { c, z } if symmetric => Word::B { b: c, y: z },
            Word::BC { b, c, y, z } if symmetric && (c, z) < (b, y) => Word::BC { b: c, c: b, y: z, z: y },
            w => w,
        };
        let mut reps: Vec<Word> = Vec::new();
        let slot = words
            .iter()
            .map(|&w| {
                let r = rep(w);
                reps.iter().position(|&x| x == r).unwrap_or_else(|| {
                    reps.push(r);
                    reps.len() - 1
                })
            })
            .collect();
        Ok(Parametrization { s, slot, slots: reps.len() })
    }

    fn per_slot(&self) -> usize {
        SymVars::count(self.s.dim_a)
    }

    fn len(&self) -> usize {
        self.slots * self.per_slot()
    }

    fn encode(&self, f: &SteeringFunctional) -> Vec<f64> {
        let d = self.s.dim_a;
        let g = f.word_coefficients();
        let mut p = vec![0.0; self.len()];
        let mut seen = vec![false; self.slots];
        for (w, &k) in self.slot.iter().enumerate() {
            if seen[k] {
                continue;
            }
            seen[k] = true;
            let vars = SymVars { d, start: k * self.per_slot() };
            for i in 0..d {
                for j in i..d {
                    p[vars.index(i, j)] = g[w].get(i, j).re;
                }
            }
        }
        p
    }

    fn decode(&self, p: &[f64]) -> Result<SteeringFunctional> {
        let d = self.s.dim_a;
        let g: Vec<HermitianMatrix> = self
            .slot
            .iter()
            .map(|&k| {
                let vars = SymVars { d, start: k * self.per_slot() };
                let data: Vec<f64> = (0..d * d).map(|e| p[vars.index(e / d, e % d)]).collect();
                HermitianMatrix::from_real(d, &data)
            })
            .collect::<Result<_>>()?;
        SteeringFunctional::from_word_coefficients(self.s, &g)
    }
}

/// One functional with both programs solved.
#[derive(Clone, Debug)]
struct Point {
    f: SteeringFunctional,
    beta_aq: f64,
    min: ConstrainedMin,
    /// `F(σ)` at unit visibility.
    v1: f64,
    mu: Option<f64>,
}

impl Point {
    fn evaluate(f: SteeringFunctional, cfg: &SearchConfig) -> Result<Self> {
        Self::evaluate_at(f, 1.0, cfg)
    }

    fn evaluate_at(f: SteeringFunctional, mu_obj: f64, cfg: &SearchConfig) -> Result<Self> {
        let opts = AqOptions { force_complex: false, settings: cfg.settings };
        let beta_aq = aq_bound_with(&f, &opts)?.value;
        let min = constrained_min_sdp_with(&f, mu_obj, &cfg.settings)?;
        let (v1, v0) = affine_endpoints(&f, &min.assemblage)?;
        let mu = mu_from_endpoints(v1, v0, beta_aq).ok();
        Ok(Point { f, beta_aq, min, v1, mu })
    }

    fn violates(&self, tol: f64) -> bool {
        self.v1 < self.beta_aq - tol
    }

    fn objective(&self, kind: DescentObjective) -> f64 {
        match kind {
            DescentObjective::MuCritical => self.mu.unwrap_or(f64::INFINITY),
            DescentObjective::Gap => self.v1 - self.beta_aq,
        }
    }

    fn mu_key(&self) -> f64 {
        self.mu.filter(|m| m.is_finite()).unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Debug)]
struct Attempt {
    restart: usize,
    point: Point,
    steps: usize,
}

impl Attempt {
    fn succeeded(&self, cfg: &SearchConfig) -> bool {
        self.point.violates(cfg.violation_tol) && self.point.mu_key() <= cfg.mu_target
    }
}

fn attempt_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn run_attempt(cfg: &SearchConfig, restart: usize) -> Result<Attempt> {
    let s = Scenario::qubit_2222();
    let f = match (&cfg.initial_functional, restart) {
        (Some(f), 0) => normalized(f)?,
        _ => random_functional(&mut attempt_rng(cfg.rng_seed, restart), s, cfg.symmetrize)?,
    };
    let mut point = Point::evaluate(f, cfg)?;
    let mut steps = 0;
    if !point.violates(cfg.violation_tol) {
        log::debug!("attempt {restart}: no violation (β − β_Q̃ = {:.3e})", point.min.beta - point.beta_aq);
        return Ok(Attempt { restart, point, steps });
    }
    log::debug!("attempt {restart}: violation, μ = {:?}", point.mu);
    match cfg.method {
        DescentMethod::Alternating => alternate(cfg, restart, &mut point, &mut steps)?,
        DescentMethod::FiniteDifference => descend(cfg, restart, &mut point, &mut steps)?,
    }
    Ok(Attempt { restart, point, steps })
}

fn alternate(cfg: &SearchConfig, restart: usize, point: &mut Point, steps: &mut usize) -> Result<()> {
    let opts = AqOptions { force_complex: false, settings: cfg.settings };
    while *steps < cfg.max_descent_steps && point.mu_key() > cfg.mu_target {
        let vis = aq_visibility_with(&point.min.assemblage, &opts)?;
        let Some(g) = vis.functional else { break };
        let next = Point::evaluate_at(normalized(&g)?, vis.mu, cfg)?;
        if !(next.mu_key() < point.mu_key() - 1e-9) {
            break;
        }
        *point = next;
        *steps += 1;
        log::debug!("attempt {restart} step {steps}: μ = {:?}", point.mu);
    }
    Ok(())
}

fn descend(cfg: &SearchConfig, restart: usize, point: &mut Point, steps: &mut usize) -> Result<()> {
    let s = *point.f.scenario();
    let param = Parametrization::new(s, cfg.symmetrize)?;
    while *steps < cfg.max_descent_steps && point.mu_key() > cfg.mu_target {
        let base = param.encode(&point.f);
        let obj0 = point.objective(cfg.objective);
        let grad: Vec<f64> = (0..base.len())
            .map(|i| {
                let mut p = base.clone();
                p[i] += cfg.fd_step;
                match param.decode(&p).and_then(|f| normalized(&f)).and_then(|f| Point::evaluate(f, cfg)) {
                    Ok(pt) if pt.objective(cfg.objective).is_finite() => (pt.objective(cfg.objective) - obj0) / cfg.fd_step,
                    _ => 0.0,
                }
            })
            .collect();
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            break;
        }
        let scale = base.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut step = cfg.descent_step;
        let mut next = None;
        while step >= cfg.min_step {
            let p: Vec<f64> = base.iter().zip(&grad).map(|(b, g)| b - step * scale * g / norm).collect();
            if let Ok(pt) = param.decode(&p).and_then(|f| normalized(&f)).and_then(|f| Point::evaluate(f, cfg)) {
                if pt.objective(cfg.objective) < obj0 {
                    next = Some(pt);
                    break;
                }
            }
            step *= cfg.shrink;
        }
        match next {
            Some(pt) => {
                *point = pt;
                *steps += 1;
                log::debug!("attempt {restart} step {steps}: μ = {:?}, line step {step:.1e}", point.mu);
            }
            None => break,
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchStatus {
    #[serde(rename = "SUCCESS")]
    Success,
    #[serde(rename = "DIAGNOSTIC")]
    Diagnostic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateBundle {
    /// No-signaling validation of `σ*`.
    pub ns: ValidationReport,
    /// Almost-quantum membership of `σ*`, with a separating functional when
    /// it lies outside.
    pub membership: Membership,
    /// Octagon locality of `σ` at visibility `μ_target`, with local weights.
    pub locality: ProjectiveLocalityVerdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub status: SearchStatus,
    pub reason: String,
    pub rng_seed: u64,
    /// Attempt that produced this result.
    pub restart: usize,
    pub attempts: usize,
    pub descent_steps: usize,
    pub functional: SteeringFunctional,
    pub functional_minimal: MinimalFunctional,
    /// De-noised assemblage `σ`.
    pub assemblage: Assemblage,
    /// `σ* = σ(μ_target)`.
    pub noisy_assemblage: Assemblage,
    pub mu_target: f64,
    /// `Σ tr(F σ*)`.
    pub beta: f64,
    pub beta_aq: f64,
    /// `F(σ)` and `F` on the depolarized `σ`.
    pub v1: f64,
    pub v0: f64,
    pub mu_critical: Option<f64>,
    /// Minimum of `F(σ(μ_obj))` without locality constraints at the visibility
    /// used for `σ`; never above the constrained minimum.
    pub ns_min: f64,
    pub constrained_min: f64,
    pub mu_obj: f64,
    pub certificates: CertificateBundle,
}

/// Runs attempts `0..=max_restarts` in batches and returns the first
/// re-verified success, or the attempt with the smallest critical visibility
/// as a diagnostic. Ties go to the lower attempt index.
pub fn run_search(cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let total = cfg.max_restarts + 1;
    let mut best: Option<Attempt> = None;
    let mut attempts = 0;
    let mut failures = Vec::new();
    for start in (0..total).step_by(BATCH_SIZE) {
        let batch: Vec<(usize, Result<Attempt>)> =
            (start..total.min(start + BATCH_SIZE)).into_par_iter().map(|r| (r, run_attempt(cfg, r))).collect();
        let mut done = Vec::new();
        for (r, res) in batch {
            attempts += 1;
            match res {
                Ok(a) => done.push(a),
                Err(e) if e.is_solver_failure() => {
                    log::warn!("attempt {r}: {e}");
                    failures.push(r);
                }
                Err(e) => return Err(e),
            }
        }
        done.sort_by(|a, b| a.point.mu_key().total_cmp(&b.point.mu_key()).then(a.restart.cmp(&b.restart)));
        for a in done.iter().filter(|a| a.succeeded(cfg)) {
            let result = finalize(cfg, a, attempts, true)?;
            if result.status == SearchStatus::Success {
                return Ok(result);
            }
            log::warn!("attempt {} failed re-verification: {}", a.restart, result.reason);
        }
        for a in done {
            if best.as_ref().is_none_or(|b| (a.point.mu_key(), a.restart) < (b.point.mu_key(), b.restart)) {
                best = Some(a);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Solver(format!("every attempt failed in the solver ({failures:?})")))?;
    finalize(cfg, &best, attempts, false)
}

fn finalize(cfg: &SearchConfig, a: &Attempt, attempts: usize, success: bool) -> Result<SearchResult> {
    let f = &a.point.f;
    let polished = if success { constrained_min_sdp_with(f, cfg.mu_target, &cfg.settings).ok() } else { None };
    let min = match polished {
        Some(p) if p.beta <= evaluate_functional(f, &add_noise(&a.point.min.assemblage, cfg.mu_target)?)? => p,
        _ => a.point.min.clone(),
    };
    let sigma = min.assemblage.clone();
    let noisy = add_noise(&sigma, cfg.mu_target)?;
    let (v1, v0) = affine_endpoints(f, &sigma)?;
    let mu_critical = mu_from_endpoints(v1, v0, a.point.beta_aq).ok();
    let beta = evaluate_functional(f, &noisy)?;
    let ns_min = ns_min_sdp(f, min.mu_obj)?.beta;

    let certificates = CertificateBundle {
        ns: validate_tripartite_ns(&noisy, cfg.validation_tol),
        membership: membership_sdp(&noisy)?,
        locality: locality_for_all_projective_eps(&sigma, cfg.mu_target, cfg.locality_eps)?,
    };
    let mut problems = Vec::new();
    if !mu_critical.is_some_and(|m| m <= cfg.mu_target) {
        problems.push(format!("critical visibility {mu_critical:?} above target {}", cfg.mu_target));
    }
    if !certificates.ns.passed {
        problems.push(format!("no-signaling validation failed ({:.3e})", certificates.ns.max_violation()));
    }
    if certificates.membership.verdict != MembershipVerdict::NotIn {
        problems.push("σ* lies in the almost-quantum set".into());
    }
    if !certificates.locality.pass {
        problems.push(certificates.locality.reason.clone());
    }
    if min.beta < ns_min - 1e-6 {
        problems.push(format!("constrained minimum {} below the no-signaling minimum {ns_min}", min.beta));
    }
    let status = if success && problems.is_empty() { SearchStatus::Success } else { SearchStatus::Diagnostic };
    let reason = if problems.is_empty() {
        if success { "all certificates verified".into() } else { "restart budget exhausted".into() }
    } else {
        problems.join("; ")
    };
    Ok(SearchResult {
        status,
        reason,
        rng_seed: cfg.rng_seed,
        restart: a.restart,
        attempts,
        descent_steps: a.steps,
        functional: f.clone(),
        functional_minimal: MinimalFunctional::of(f)?,
        assemblage: sigma,
        noisy_assemblage: noisy,
        mu_target: cfg.mu_target,
        beta,
        beta_aq: a.point.beta_aq,
        v1,
        v0,
        mu_critical,
        ns_min,
        constrained_min: min.beta,
        mu_obj: min.mu_obj,
        certificates,
    })
}

/// Outcome of re-checking a [`SearchResult`] from its own data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// `σ*` passes no-signaling validation.
    pub ns_valid: bool,
    /// `σ* = σ(μ_target)`.
    pub noise_consistent: bool,
    /// Recomputed `aq_bound − value` of the separating functional on `σ*`.
    pub separation: Option<f64>,
    /// Largest `|Σ_λ q_λ D_λ − p|` of the stored local weights, renormalized
    /// to unit sum, on the octagon behaviour of `σ`.
    pub locality_residual: Option<f64>,
    pub local: bool,
    /// Largest deviation of the affinity check.
    pub affinity_deviation: f64,
    /// Recomputed critical visibility matches the stored one.
    pub mu_consistent: bool,
    pub pass: bool,
}

/// Re-verifies a result: reruns no-signaling validation on `σ*`, recomputes
/// the almost-quantum bound of the stored separating functional, checks the
/// stored local weights against the octagon behaviour of `σ`, and checks the
/// affine dependence of the functional on the visibility.
pub fn verify_result(r: &SearchResult, tol: f64) -> Result<Verification> {
    let ns_valid = validate_tripartite_ns(&r.noisy_assemblage, tol).passed;
    let noise_consistent = add_noise(&r.assemblage, r.mu_target)?.max_abs_diff(&r.noisy_assemblage) <= 1e-12;

    let separation = match &r.certificates.membership.certificate {
        Some(cert) => {
            let bound = aq_bound_with(&cert.functional, &AqOptions::default())?.value;
            Some(bound - evaluate_functional(&cert.functional, &r.noisy_assemblage)?)
        }
        None => None,
    };

    let weights = r.certificates.locality.certificate.as_ref().map(|c| c.weights.clone());
    let locality_residual = match weights {
        Some(q) if !q.is_empty() => {
            let p = behaviour(&r.assemblage, &octagon_set().povms)?;
            let strategies = enumerate_strategies(p.dims, STRATEGY_CAP)?;
            let total: f64 = q.iter().sum();
            if q.len() != strategies.len() || q.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-6 {
                None
            } else {
                let mut model = vec![0.0; p.p.len()];
                for (w, s) in q.iter().zip(&strategies) {
                    for (m, d) in model.iter_mut().zip(&s.behaviour(p.dims)?.p) {
                        *m += w / total * d;
                    }
                }
                Some(model.iter().zip(&p.p).map(|(m, v)| (m - v).abs()).fold(0.0, f64::max))
            }
        }
        _ => None,
    };
    let eps = r.certificates.locality.certificate.as_ref().map_or(LOCALITY_EPS, |c| c.epsilon);
    let local = r.mu_target <= octagon_visibility() && locality_residual.is_some_and(|t| t <= eps);

    let mus: Vec<f64> = (0..10).map(|k| k as f64 / 9.0).collect();
    let affinity = affinity_deviation(&r.functional, &r.assemblage, &mus)?;
    let mu_now = critical_mu(&r.functional, &r.assemblage, r.beta_aq).ok();
    let mu_consistent = match (mu_now, r.mu_critical) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * a.abs().max(1.0),
        (None, None) => true,
        _ => false,
    };
    let pass = ns_valid
        && noise_consistent
        && separation.is_some_and(|s| s > 0.0)
        && local
        && affinity <= AFFINITY_TOL
        && mu_consistent
        && r.mu_critical.is_some_and(|m| m <= r.mu_target);
    Ok(Verification {
        ns_valid,
        noise_consistent,
        separation,
        locality_residual,
        local,
        affinity_deviation: affinity,
        mu_consistent,
        pass,
    })
}

pub fn verify_result_json(json: &str, tol: f64) -> Result<Verification> {
    let r: SearchResult = serde_json::from_str(json)?;
    verify_result(&r, tol)
}
