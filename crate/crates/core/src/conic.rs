//! Minimal conic-program builder over a sparse constraint matrix, solved by
//! Clarabel, with a JSON dump in triplet form.
//!
//! Programs have the form `min cᵀx + c₀` subject to `e_k(x) ∈ K_k` for affine
//! expressions `e_k`. Internally this is `A x + s = b`, `s ∈ K` with
//! `A = −(coefficients)` and `b = constants`.

use std::ops::{Add, Mul, Neg, Sub};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine expression `Σ a_i x_i + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr::default()
    }

    pub fn var(i: usize) -> Self {
        LinExpr { terms: vec![(i, 1.0)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn term(i: usize, a: f64) -> Self {
        LinExpr { terms: vec![(i, a)], constant: 0.0 }
    }

    pub fn push(&mut self, i: usize, a: f64) {
        if a != 0.0 {
            self.terms.push((i, a));
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, s: f64) {
        for &(i, a) in &other.terms {
            self.push(i, a * s);
        }
        self.constant += other.constant * s;
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        let mut out = LinExpr::zero();
        out.add_scaled(self, s);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, a)| a * x[i]).sum::<f64>()
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, s: f64) -> LinExpr {
        self.scaled(s)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "dim", rename_all = "snake_case")]
pub enum Cone {
    /// `e = 0`.
    Zero(usize),
    /// `e ≥ 0`.
    Nonneg(usize),
    /// `e_0 ≥ ‖(e_1, …)‖₂`; the size counts all rows.
    Soc(usize),
    /// Scaled upper triangle (column-major, off-diagonals times √2) of an
    /// `n × n` PSD matrix.
    Psd(usize),
}

impl Cone {
    pub fn rows(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::Nonneg(n) | Cone::Soc(n) => n,
            Cone::Psd(n) => n * (n + 1) / 2,
        }
    }

    fn to_clarabel(self) -> SupportedConeT<f64> {
        match self {
            Cone::Zero(n) => SupportedConeT::ZeroConeT(n),
            Cone::Nonneg(n) => SupportedConeT::NonnegativeConeT(n),
            Cone::Soc(n) => SupportedConeT::SecondOrderConeT(n),
            Cone::Psd(n) => SupportedConeT::PSDTriangleConeT(n),
        }
    }
}

/// Rows `start..start + len` of the constraint system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowBlock {
    pub start: usize,
    pub len: usize,
}

impl RowBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConicProgram {
    num_vars: usize,
    objective: LinExpr,
    cones: Vec<Cone>,
    rows: Vec<LinExpr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicStatus {
    Optimal,
    /// Solved to reduced accuracy.
    AlmostOptimal,
    PrimalInfeasible,
    DualInfeasible,
    Failed,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: ConicStatus,
    pub x: Vec<f64>,
    /// Dual variables, one per constraint row, in the dual cone.
    pub z: Vec<f64>,
    pub objective: f64,
    pub detail: String,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, ConicStatus::Optimal | ConicStatus::AlmostOptimal)
    }

    /// Turns anything but an optimal solve into an error.
    pub fn require_optimal(self, what: &str) -> Result<Self> {
        match self.status {
            ConicStatus::Optimal | ConicStatus::AlmostOptimal => Ok(self),
            ConicStatus::PrimalInfeasible => Err(Error::Infeasible(format!("{what}: primal infeasible"))),
            ConicStatus::DualInfeasible => Err(Error::Infeasible(format!("{what}: unbounded (dual infeasible)"))),
            ConicStatus::Failed => Err(Error::Solver(format!("{what}: {}", self.detail))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: u32,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol_feas: 1e-8, tol_gap: 1e-8, max_iter: 200 }
    }
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add_vars(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.add_var()).collect()
    }

    /// Objective to minimize.
    pub fn minimize(&mut self, e: LinExpr) {
        self.objective = e;
    }

    fn push_block(&mut self, cone: Cone, exprs: Vec<LinExpr>) -> RowBlock {
        debug_assert_eq!(cone.rows(), exprs.len());
        let block = RowBlock { start: self.rows.len(), len: exprs.len() };
        if exprs.is_empty() {
            return block;
        }
        // merge with a preceding cone of the same linear kind
        match (self.cones.last_mut(), cone) {
            (Some(Cone::Zero(n)), Cone::Zero(m)) | (Some(Cone::Nonneg(n)), Cone::Nonneg(m)) => *n += m,
            _ => self.cones.push(cone),
        }
        self.rows.extend(exprs);
        block
    }

    pub fn add_zero(&mut self, exprs: Vec<LinExpr>) -> RowBlock {
        let n = exprs.len();
        self.push_block(Cone::Zero(n), exprs)
    }

    pub fn add_nonneg(&mut self, exprs: Vec<LinExpr>) -> RowBlock {
        let n = exprs.len();
        self.push_block(Cone::Nonneg(n), exprs)
    }

    /// `exprs[0] ≥ ‖exprs[1..]‖₂`.
    pub fn add_soc(&mut self, exprs: Vec<LinExpr>) -> RowBlock {
        let n = exprs.len();
        self.push_block(Cone::Soc(n), exprs)
    }

    /// Symmetric `n × n` matrix with entries `entry(i, j)` (`i ≤ j`) is PSD.
    pub fn add_psd(&mut self, n: usize, mut entry: impl FnMut(usize, usize) -> LinExpr) -> RowBlock {
        let mut exprs = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in 0..=j {
                let e = entry(i, j);
                exprs.push(if i == j { e } else { e.scaled(std::f64::consts::SQRT_2) });
            }
        }
        self.push_block(Cone::Psd(n), exprs)
    }

    /// Row-major dense evaluation of a PSD block's matrix from the primal
    /// point; used to read back moment matrices.
    pub fn psd_matrix(&self, block: RowBlock, n: usize, x: &[f64]) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; n]; n];
        let mut k = block.start;
        for j in 0..n {
            for i in 0..=j {
                let v = self.rows[k].eval(x);
                let v = if i == j { v } else { v / std::f64::consts::SQRT_2 };
                m[i][j] = v;
                m[j][i] = v;
                k += 1;
            }
        }
        m
    }

    pub fn eval_row(&self, row: usize, x: &[f64]) -> f64 {
        self.rows[row].eval(x)
    }

    fn check(&self) -> Result<()> {
        let max_var = self.rows.iter().chain(std::iter::once(&self.objective)).flat_map(|e| e.terms.iter().map(|t| t.0)).max();
        if let Some(v) = max_var {
            if v >= self.num_vars {
                return Err(Error::InvalidInput(format!("variable {v} out of range ({} variables)", self.num_vars)));
            }
        }
        let total: usize = self.cones.iter().map(Cone::rows).sum();
        if total != self.rows.len() {
            return Err(Error::InvalidInput(format!("cones cover {total} rows, program has {}", self.rows.len())));
        }
        Ok(())
    }

    /// Constraint data in solver form: triplets of `A` and the vector `b`.
    pub fn to_dump(&self) -> ConicDump {
        let (mut i, mut j, mut v) = (Vec::new(), Vec::new(), Vec::new());
        for (r, e) in self.rows.iter().enumerate() {
            for &(col, a) in &e.terms {
                i.push(r);
                j.push(col);
                v.push(-a);
            }
        }
        let mut c = vec![0.0; self.num_vars];
        for &(k, a) in &self.objective.terms {
            c[k] += a;
        }
        ConicDump {
            form: "minimize c'x + c0 subject to A x + s = b, s in cones (psd: scaled upper triangle, column-major)".into(),
            num_vars: self.num_vars,
            num_rows: self.rows.len(),
            c,
            c0: self.objective.constant,
            cones: self.cones.clone(),
            a: Triplets { i, j, v },
            b: self.rows.iter().map(|e| e.constant).collect(),
        }
    }

    pub fn from_dump(d: &ConicDump) -> Result<Self> {
        if d.a.i.len() != d.a.j.len() || d.a.i.len() != d.a.v.len() {
            return Err(Error::InvalidInput("triplet arrays differ in length".into()));
        }
        if d.b.len() != d.num_rows || d.c.len() != d.num_vars {
            return Err(Error::InvalidInput("dump dimensions inconsistent".into()));
        }
        let mut rows: Vec<LinExpr> = d.b.iter().map(|&b| LinExpr::constant(b)).collect();
        for ((&r, &col), &v) in d.a.i.iter().zip(&d.a.j).zip(&d.a.v) {
            if r >= d.num_rows {
                return Err(Error::InvalidInput(format!("row {r} out of range")));
            }
            rows[r].push(col, -v);
        }
        let mut objective = LinExpr::constant(d.c0);
        for (k, &a) in d.c.iter().enumerate() {
            objective.push(k, a);
        }
        let p = ConicProgram { num_vars: d.num_vars, objective, cones: d.cones.clone(), rows };
        p.check()?;
        Ok(p)
    }

    pub fn solve(&self, settings: &SolverSettings) -> Result<ConicSolution> {
        self.check()?;
        let n = self.num_vars;
        let m = self.rows.len();
        let d = self.to_dump();
        let a = CscMatrix::new_from_triplets(m, n, d.a.i, d.a.j, d.a.v);
        let p = CscMatrix::<f64>::zeros((n, n));
        let cones: Vec<_> = self.cones.iter().map(|c| c.to_clarabel()).collect();
        let s = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_feas(settings.tol_feas)
            .tol_gap_abs(settings.tol_gap)
            .tol_gap_rel(settings.tol_gap)
            .max_iter(settings.max_iter)
            .build()
            .map_err(|e| Error::Solver(format!("solver settings: {e:?}")))?;
        let mut solver = DefaultSolver::new(&p, &d.c, &a, &d.b, &cones, s)
            .map_err(|e| Error::Solver(format!("solver setup: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => ConicStatus::Optimal,
            SolverStatus::AlmostSolved => ConicStatus::AlmostOptimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => ConicStatus::PrimalInfeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => ConicStatus::DualInfeasible,
            _ => ConicStatus::Failed,
        };
        Ok(ConicSolution {
            status,
            x: sol.x.clone(),
            z: sol.z.clone(),
            objective: sol.obj_val + d.c0,
            detail: format!("{:?} after {} iterations", sol.status, sol.iterations),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplets {
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub v: Vec<f64>,
}

/// Serializable form of a [`ConicProgram`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicDump {
    pub form: String,
    pub num_vars: usize,
    pub num_rows: usize,
    pub c: Vec<f64>,
    pub c0: f64,
    pub cones: Vec<Cone>,
    #[serde(rename = "A")]
    pub a: Triplets,
    pub b: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min x + 2y s.t. x + y = 1, x, y ≥ 0
        let mut p = ConicProgram::new();
        let x = p.add_var();
        let y = p.add_var();
        p.minimize(LinExpr::var(x) + LinExpr::term(y, 2.0));
        p.add_zero(vec![LinExpr::var(x) + LinExpr::var(y) - LinExpr::constant(1.0)]);
        p.add_nonneg(vec![LinExpr::var(x), LinExpr::var(y)]);
        let s = p.solve(&SolverSettings::default()).unwrap();
        assert_eq!(s.status, ConicStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-7);
        assert!((s.x[x] - 1.0).abs() < 1e-6);
        assert_eq!(p.cones(), &[Cone::Zero(1), Cone::Nonneg(2)]);
    }

    #[test]
    fn small_sdp_min_eigenvalue() {
        // min tr(C X) s.t. tr X = 1, X ⪰ 0 gives λ_min(C)
        let c = [[2.0, 1.0], [1.0, 3.0]];
        let mut p = ConicProgram::new();
        let v = p.add_vars(3); // x00, x01, x11
        let idx = |i: usize, j: usize| match (i.min(j), i.max(j)) {
            (0, 0) => v[0],
            (0, 1) => v[1],
            _ => v[2],
        };
        p.minimize(LinExpr::term(v[0], c[0][0]) + LinExpr::term(v[1], 2.0 * c[0][1]) + LinExpr::term(v[2], c[1][1]));
        p.add_zero(vec![LinExpr::var(v[0]) + LinExpr::var(v[2]) - LinExpr::constant(1.0)]);
        let blk = p.add_psd(2, |i, j| LinExpr::var(idx(i, j)));
        let s = p.solve(&SolverSettings::default()).unwrap();
        let expected = 2.5 - (0.25f64 + 1.0).sqrt();
        assert!((s.objective - expected).abs() < 1e-7);
        let m = p.psd_matrix(blk, 2, &s.x);
        assert!((m[0][0] + m[1][1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn soc_projection() {
        // min t s.t. t ≥ ‖x − (3, 4)‖, x free → 0
        let mut p = ConicProgram::new();
        let t = p.add_var();
        let x = p.add_vars(2);
        p.minimize(LinExpr::var(t));
        p.add_soc(vec![LinExpr::var(t), LinExpr::var(x[0]) - LinExpr::constant(3.0), LinExpr::var(x[1]) - LinExpr::constant(4.0)]);
        p.add_nonneg(vec![LinExpr::constant(1.0) - LinExpr::var(x[0])]);
        let s = p.solve(&SolverSettings::default()).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let mut p = ConicProgram::new();
        let x = p.add_var();
        p.minimize(LinExpr::var(x));
        p.add_nonneg(vec![LinExpr::var(x) - LinExpr::constant(1.0), LinExpr::constant(0.0) - LinExpr::var(x)]);
        let s = p.solve(&SolverSettings::default()).unwrap();
        assert_eq!(s.status, ConicStatus::PrimalInfeasible);
        assert!(matches!(s.require_optimal("t"), Err(Error::Infeasible(_))));

        let mut q = ConicProgram::new();
        let y = q.add_var();
        q.minimize(LinExpr::var(y));
        q.add_nonneg(vec![LinExpr::constant(0.0) - LinExpr::var(y)]);
        assert_eq!(q.solve(&SolverSettings::default()).unwrap().status, ConicStatus::DualInfeasible);
    }

    #[test]
    fn dump_round_trip() {
        let mut p = ConicProgram::new();
        let v = p.add_vars(3);
        p.minimize(LinExpr::var(v[0]) + LinExpr::constant(0.5));
        p.add_zero(vec![LinExpr::var(v[0]) + LinExpr::var(v[2]) - LinExpr::constant(1.0)]);
        p.add_psd(2, |i, j| LinExpr::var(v[i + j]));
        let d = p.to_dump();
        let json = serde_json::to_string(&d).unwrap();
        let back = ConicProgram::from_dump(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.to_dump(), d);
        let a = p.solve(&SolverSettings::default()).unwrap();
        let b = back.solve(&SolverSettings::default()).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_variable_is_rejected() {
        let mut p = ConicProgram::new();
        p.add_zero(vec![LinExpr::var(3)]);
        assert!(p.solve(&SolverSettings::default()).is_err());
    }
}
