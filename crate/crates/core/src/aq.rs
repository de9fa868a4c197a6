//! Almost-quantum moment matrices for tripartite steering.
//!
//! Rows and columns of `Γ` are labelled by the words of [`word_set`]; the
//! block `Γ(v, w)` stands for `tr_BC[(O_v† O_w) ρ_ABC]`. Two blocks are tied
//! together whenever their operator strings reduce to the same monomial, or
//! to adjoint monomials, under projector idempotence, orthogonality of
//! different outcomes of one setting and commutation of Bob with Charlie.
//! The first row is pinned to the assemblage, so an assemblage belongs to the
//! almost-quantum set iff such a `Γ ⪰ 0` exists.
//!
//! Strings are reduced at arbitrary length; the word set itself stops at
//! one letter per party.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assemblage::Assemblage;
use crate::conic::{ConicProgram, ConicSolution, ConicStatus, LinExpr, RowBlock, SolverSettings};
use crate::dense_sdp::solve_dense;
use crate::error::{Error, Result};
use crate::functional::{evaluate_functional, SteeringFunctional};
use crate::linalg::{CMatrix, HermitianMatrix};
use crate::scenario::{word_set, Scenario, Word};

/// Projection distance below which an assemblage is declared a member.
pub const MEMBERSHIP_TOL: f64 = 1e-6;
/// Eigenvalue tolerance for returned moment matrices.
pub const PSD_TOL: f64 = 1e-8;

/// Projector `E_{outcome|setting}` of one party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub setting: usize,
    pub outcome: usize,
}

/// Product of Bob projectors times a product of Charlie projectors.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub bob: Vec<Letter>,
    pub charlie: Vec<Letter>,
}

impl Monomial {
    pub fn adjoint(&self) -> Monomial {
        Monomial { bob: self.bob.iter().rev().copied().collect(), charlie: self.charlie.iter().rev().copied().collect() }
    }
}

/// Reduces a string of one party's projectors: `E E = E`, and `E_{b|y}
/// E_{b'|y} = 0` for `b ≠ b'`. `None` means the product vanishes.
pub fn reduce(letters: &[Letter]) -> Option<Vec<Letter>> {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters {
        match out.last() {
            Some(&last) if last.setting == l.setting => {
                if last.outcome != l.outcome {
                    return None;
                }
            }
            _ => out.push(l),
        }
    }
    Some(out)
}

fn word_letters(w: Word) -> (Vec<Letter>, Vec<Letter>) {
    match w {
        Word::Empty => (vec![], vec![]),
        Word::B { b, y } => (vec![Letter { setting: y, outcome: b }], vec![]),
        Word::C { c, z } => (vec![], vec![Letter { setting: z, outcome: c }]),
        Word::BC { b, c, y, z } => (vec![Letter { setting: y, outcome: b }], vec![Letter { setting: z, outcome: c }]),
    }
}

/// Canonical form of the entry `Γ(v, w)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryClass {
    Zero,
    /// `Γ(v, w) = X_m` when `adjoint` is false and `X_m†` otherwise, where
    /// `m ≤ m†` in the monomial order.
    Moment { monomial: Monomial, adjoint: bool },
}

/// Reduces `O_v† O_w` and picks the smaller of the result and its adjoint.
pub fn canonical_entry(v: Word, w: Word) -> EntryClass {
    let (vb, vc) = word_letters(v);
    let (wb, wc) = word_letters(w);
    let join = |a: &[Letter], b: &[Letter]| -> Vec<Letter> { a.iter().rev().chain(b.iter()).copied().collect() };
    let (Some(bob), Some(charlie)) = (reduce(&join(&vb, &wb)), reduce(&join(&vc, &wc))) else {
        return EntryClass::Zero;
    };
    let m = Monomial { bob, charlie };
    let adj = m.adjoint();
    if m <= adj {
        EntryClass::Moment { monomial: m, adjoint: false }
    } else {
        EntryClass::Moment { monomial: adj, adjoint: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entry {
    Zero,
    Class { id: usize, adjoint: bool },
}

/// Equality pattern of the moment matrix for one scenario.
#[derive(Clone, Debug)]
pub struct MomentStructure {
    pub scenario: Scenario,
    pub words: Vec<Word>,
    /// Distinct monomials, in order of first appearance scanning `Γ` row by row.
    pub classes: Vec<Monomial>,
    entries: Vec<Entry>,
    /// Class of `Γ(∅, w)` for every word `w`.
    pub first_row: Vec<usize>,
}

impl MomentStructure {
    pub fn new(scenario: Scenario) -> Self {
        let words = word_set(&scenario);
        let n = words.len();
        let mut classes = Vec::new();
        let mut index: BTreeMap<Monomial, usize> = BTreeMap::new();
        let mut entries = Vec::with_capacity(n * n);
        for &v in &words {
            for &w in &words {
                entries.push(match canonical_entry(v, w) {
                    EntryClass::Zero => Entry::Zero,
                    EntryClass::Moment { monomial, adjoint } => {
                        let id = *index.entry(monomial.clone()).or_insert_with(|| {
                            classes.push(monomial);
                            classes.len() - 1
                        });
                        Entry::Class { id, adjoint }
                    }
                });
            }
        }
        let first_row = (0..n)
            .map(|k| match entries[k] {
                Entry::Class { id, adjoint: false } => id,
                _ => unreachable!("first-row entries are single self-adjoint words"),
            })
            .collect();
        MomentStructure { scenario, words, classes, entries, first_row }
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn entry(&self, v: usize, w: usize) -> Entry {
        self.entries[v * self.words.len() + w]
    }

    /// Side length of `Γ`.
    pub fn gamma_dim(&self) -> usize {
        self.words.len() * self.scenario.dim_a
    }

    fn is_hermitian_class(&self, id: usize) -> bool {
        self.classes[id].adjoint() == self.classes[id]
    }
}

/// Solved moment matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentMatrix {
    pub words: Vec<Word>,
    pub dim_a: usize,
    pub gamma: HermitianMatrix,
}

impl MomentMatrix {
    pub fn block(&self, v: usize, w: usize) -> CMatrix {
        let d = self.dim_a;
        self.gamma.matrix().view((v * d, w * d), (d, d)).into_owned()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.gamma.min_eigenvalue()
    }

    /// First-row blocks as an assemblage.
    pub fn assemblage(&self, s: Scenario) -> Result<Assemblage> {
        let coords = (0..self.words.len())
            .map(|w| HermitianMatrix::with_tolerance(self.block(0, w), 1e-6))
            .collect::<Result<Vec<_>>>()?;
        Assemblage::from_word_coordinates(s, &coords)
    }
}

type Cx = (LinExpr, LinExpr);

/// Real-variable encoding of the moment matrix inside a conic program.
pub struct Formulation {
    pub program: ConicProgram,
    pub structure: MomentStructure,
    pub complex: bool,
    class_entries: Vec<Vec<Cx>>,
    pub psd_rows: RowBlock,
}

impl Formulation {
    /// Variables for every class and the constraint `Γ ⪰ 0` (as a real
    /// symmetric matrix, or through `[[Re, −Im], [Im, Re]] ⪰ 0`).
    pub fn new(scenario: Scenario, complex: bool) -> Self {
        let structure = MomentStructure::new(scenario);
        let d = scenario.dim_a;
        let mut program = ConicProgram::new();
        let mut class_entries = Vec::with_capacity(structure.classes.len());
        for id in 0..structure.classes.len() {
            let herm = structure.is_hermitian_class(id);
            let mut e: Vec<Cx> = vec![(LinExpr::zero(), LinExpr::zero()); d * d];
            for i in 0..d {
                for j in 0..d {
                    if herm && j < i {
                        continue;
                    }
                    let re = LinExpr::var(program.add_var());
                    let im = if complex && !(herm && i == j) { LinExpr::var(program.add_var()) } else { LinExpr::zero() };
                    if herm {
                        e[j * d + i] = (re.clone(), -im.clone());
                    }
                    e[i * d + j] = (re, im);
                }
            }
            class_entries.push(e);
        }
        let mut f = Formulation {
            program,
            structure,
            complex,
            class_entries,
            psd_rows: RowBlock { start: 0, len: 0 },
        };
        let n = f.structure.gamma_dim();
        let exprs: Vec<Vec<Cx>> = (0..n).map(|r| (0..n).map(|s| f.gamma_entry(r, s)).collect()).collect();
        f.psd_rows = if complex {
            f.program.add_psd(2 * n, |i, j| match (i < n, j < n) {
                (true, true) => exprs[i][j].0.clone(),
                (true, false) => -exprs[i][j - n].1.clone(),
                (false, false) => exprs[i - n][j - n].0.clone(),
                (false, true) => exprs[j][i - n].1.clone(),
            })
        } else {
            f.program.add_psd(n, |i, j| exprs[i][j].0.clone())
        };
        f
    }

    fn class_entry(&self, id: usize, i: usize, j: usize) -> Cx {
        self.class_entries[id][i * self.structure.scenario.dim_a + j].clone()
    }

    /// `Γ[r][s]` as (real part, imaginary part).
    pub fn gamma_entry(&self, r: usize, s: usize) -> Cx {
        let d = self.structure.scenario.dim_a;
        match self.structure.entry(r / d, s / d) {
            Entry::Zero => (LinExpr::zero(), LinExpr::zero()),
            Entry::Class { id, adjoint: false } => self.class_entry(id, r % d, s % d),
            Entry::Class { id, adjoint: true } => {
                let (re, im) = self.class_entry(id, s % d, r % d);
                (re, -im)
            }
        }
    }

    /// Entry `(i, j)` of the first-row block for word `w`.
    pub fn first_row_entry(&self, w: usize, i: usize, j: usize) -> Cx {
        self.class_entry(self.structure.first_row[w], i, j)
    }

    /// `Re Σ_w tr(G_w X_w)` over the first-row blocks.
    pub fn first_row_pairing(&self, g: &[HermitianMatrix]) -> LinExpr {
        let d = self.structure.scenario.dim_a;
        let mut out = LinExpr::zero();
        for (w, gw) in g.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    // Re(G_ij X_ji)
                    let gij = gw.get(i, j);
                    let (re, im) = self.first_row_entry(w, j, i);
                    out.add_scaled(&re, gij.re);
                    out.add_scaled(&im, -gij.im);
                }
            }
        }
        out
    }

    /// `tr ρ_A = 1`.
    pub fn add_normalization(&mut self) {
        let d = self.structure.scenario.dim_a;
        let mut e = LinExpr::constant(-1.0);
        for i in 0..d {
            e.add_scaled(&self.first_row_entry(0, i, i).0, 1.0);
        }
        self.program.add_zero(vec![e]);
    }

    /// Every entry of every first-row block minus its target, real parts
    /// then (complex formulations only) imaginary parts.
    fn first_row_residuals(&self, targets: &[HermitianMatrix]) -> Vec<LinExpr> {
        let d = self.structure.scenario.dim_a;
        let mut out = Vec::new();
        for (w, t) in targets.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    let (re, im) = self.first_row_entry(w, i, j);
                    let tij = t.get(i, j);
                    out.push(re - LinExpr::constant(tij.re));
                    if self.complex {
                        out.push(im - LinExpr::constant(tij.im));
                    }
                }
            }
        }
        out
    }

    pub fn read_gamma(&self, x: &[f64]) -> MomentMatrix {
        let n = self.structure.gamma_dim();
        let m = DMatrix::from_fn(n, n, |r, s| {
            let (re, im) = self.gamma_entry(r, s);
            Complex64::new(re.eval(x), im.eval(x))
        });
        MomentMatrix {
            words: self.structure.words.clone(),
            dim_a: self.structure.scenario.dim_a,
            gamma: HermitianMatrix::symmetrized(m),
        }
    }

    fn read_first_row(&self, x: &[f64]) -> Vec<HermitianMatrix> {
        let d = self.structure.scenario.dim_a;
        (0..self.structure.num_words())
            .map(|w| {
                HermitianMatrix::symmetrized(DMatrix::from_fn(d, d, |i, j| {
                    let (re, im) = self.first_row_entry(w, i, j);
                    Complex64::new(re.eval(x), im.eval(x))
                }))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AqOptions {
    /// Use the complex formulation even for real data.
    pub force_complex: bool,
    pub settings: SolverSettings,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AqBound {
    pub value: f64,
    /// Optimizing assemblage (first row of `Γ`).
    pub assemblage: Assemblage,
    pub moment_matrix: MomentMatrix,
    pub complex: bool,
}

/// Program minimizing `Σ tr(F σ)` over first rows of almost-quantum moment
/// matrices with `tr ρ_A = 1`.
pub fn bound_program(f: &SteeringFunctional, complex: bool) -> Formulation {
    let mut form = Formulation::new(*f.scenario(), complex);
    let objective = form.first_row_pairing(&f.word_coefficients());
    form.program.minimize(objective);
    form.add_normalization();
    form
}

/// Relative accuracy of the dense solve of bound programs.
pub const BOUND_TOL: f64 = 1e-10;

/// Dense interior point solve, with Clarabel as the fallback when it does not
/// converge (or the program is infeasible or unbounded).
fn solve_precise(program: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution> {
    match solve_dense(program, BOUND_TOL.min(settings.tol_gap), settings.max_iter) {
        Ok(sol) if sol.status == ConicStatus::Optimal => Ok(sol),
        Ok(sol) => {
            log::debug!("dense solve not optimal ({}), falling back to clarabel", sol.detail);
            program.solve(settings)
        }
        Err(e) => {
            log::debug!("dense solve failed ({e}), falling back to clarabel");
            program.solve(settings)
        }
    }
}

/// Minimum of the functional over the almost-quantum set, a lower bound on
/// its quantum minimum.
pub fn aq_bound(f: &SteeringFunctional) -> Result<AqBound> {
    aq_bound_with(f, &AqOptions::default())
}

pub fn aq_bound_with(f: &SteeringFunctional, opts: &AqOptions) -> Result<AqBound> {
    let complex = opts.force_complex || !f.is_real(0.0);
    // solved at unit norm: the interior point stall (~1e-8 relative) then
    // does not depend on the scale of F
    let norm = f.norm_l1_frobenius();
    let unit = if norm > 0.0 { f.scale(1.0 / norm) } else { f.clone() };
    let form = bound_program(&unit, complex);
    let sol = solve_precise(&form.program, &opts.settings)?;
    if sol.status == ConicStatus::DualInfeasible {
        return Err(Error::InvalidInput("functional is unbounded below over the almost-quantum set".into()));
    }
    let sol = sol.require_optimal("almost-quantum bound")?;
    let gamma = form.read_gamma(&sol.x);
    let assemblage = Assemblage::from_word_coordinates(*f.scenario(), &form.read_first_row(&sol.x))?;
    let value = if norm > 0.0 { sol.objective * norm } else { sol.objective };
    Ok(AqBound { value, assemblage, moment_matrix: gamma, complex })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipVerdict {
    #[serde(rename = "IN")]
    In,
    #[serde(rename = "NOT_IN")]
    NotIn,
}

/// Steering functional separating an assemblage from the almost-quantum set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub functional: SteeringFunctional,
    /// `Σ tr(F σ)` on the tested assemblage.
    pub value: f64,
    /// [`aq_bound`] of the functional.
    pub aq_bound: f64,
    /// `aq_bound − value`; positive certifies post-quantumness.
    pub separation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Membership {
    pub verdict: MembershipVerdict,
    /// Euclidean distance of the word coordinates to the almost-quantum set.
    pub distance: f64,
    /// Witness moment matrix for members.
    pub moment_matrix: Option<MomentMatrix>,
    pub certificate: Option<SeparationCertificate>,
}

/// Program projecting the word coordinates of `asm` onto the almost-quantum
/// set: `min t` s.t. `t ≥ ‖X − σ‖₂` over the first-row blocks.
pub fn projection_program(asm: &Assemblage, complex: bool) -> (Formulation, usize) {
    let mut form = Formulation::new(*asm.scenario(), complex);
    form.add_normalization();
    let t = form.program.add_var();
    let mut cone = vec![LinExpr::var(t)];
    cone.extend(form.first_row_residuals(&asm.word_coordinates()));
    form.program.add_soc(cone);
    form.program.minimize(LinExpr::var(t));
    (form, t)
}

/// Program with the first row pinned to `asm`; feasible iff `asm` is in the
/// almost-quantum set.
pub fn feasibility_program(asm: &Assemblage, complex: bool) -> Formulation {
    let mut form = Formulation::new(*asm.scenario(), complex);
    let pins = form.first_row_residuals(&asm.word_coordinates());
    form.program.add_zero(pins);
    form.program.minimize(LinExpr::zero());
    form
}

/// Decides membership in the almost-quantum set by projecting the word
/// coordinates `X(σ)` onto it. Members come with a moment matrix. For
/// non-members at distance `d` from the projection `τ*`, the functional with
/// word coefficients `(τ* − X(σ))/d` has value `d` below its almost-quantum
/// bound on `σ`; the bound is recomputed independently.
pub fn membership_sdp(asm: &Assemblage) -> Result<Membership> {
    membership_sdp_with(asm, &AqOptions::default())
}

pub fn membership_sdp_with(asm: &Assemblage, opts: &AqOptions) -> Result<Membership> {
    let s = *asm.scenario();
    let complex = opts.force_complex || !asm.is_real(0.0);
    let (form, t) = projection_program(asm, complex);
    // the minimizer is only accurate to about the square root of the gap
    // tolerance, and the separating direction is read off it
    let tight = SolverSettings { tol_feas: 1e-10, tol_gap: 1e-10, max_iter: 500 };
    let sol = form.program.solve(&tight)?.require_optimal("almost-quantum projection")?;
    let distance = sol.x[t].max(0.0);

    if distance <= MEMBERSHIP_TOL {
        let pinned = feasibility_program(asm, complex);
        let fsol = pinned.program.solve(&opts.settings)?;
        let gamma = if fsol.is_optimal() { pinned.read_gamma(&fsol.x) } else { form.read_gamma(&sol.x) };
        return Ok(Membership { verdict: MembershipVerdict::In, distance, moment_matrix: Some(gamma), certificate: None });
    }

    let projected = form.read_first_row(&sol.x);
    let g: Vec<HermitianMatrix> =
        projected.iter().zip(asm.word_coordinates()).map(|(p, x)| (p - &x).scale(1.0 / distance)).collect();
    let functional = SteeringFunctional::from_word_coefficients(s, &g)?;
    let value = evaluate_functional(&functional, asm)?;
    let bound = aq_bound_with(&functional, opts)?.value;
    Ok(Membership {
        verdict: MembershipVerdict::NotIn,
        distance,
        moment_matrix: None,
        certificate: Some(SeparationCertificate { functional, value, aq_bound: bound, separation: bound - value }),
    })
}

/// Largest visibility at which an assemblage stays almost-quantum, with the
/// functional supporting the almost-quantum set there.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AqVisibility {
    /// Largest `μ ≤ 1` with `μ σ + (1 − μ) σ₀` almost-quantum, `σ₀` the
    /// depolarized assemblage `tr(σ_{bc|yz}) I/d`.
    pub mu: f64,
    /// For `μ < 1`: `F` with almost-quantum bound 0, `F(σ₀) = μ` and
    /// `F(σ₀) − F(σ) = 1`, read off the duals of the pinned first row.
    pub functional: Option<SteeringFunctional>,
}

fn depolarized(asm: &Assemblage) -> Result<Assemblage> {
    let d = asm.scenario().dim_a;
    let id = HermitianMatrix::identity(d);
    asm.map_blocks(|_, m| id.scale(m.trace() / d as f64))
}

/// Maximizes `μ` subject to the first row of `Γ ⪰ 0` being
/// `X(σ₀) + μ (X(σ) − X(σ₀))`.
pub fn aq_visibility(asm: &Assemblage) -> Result<AqVisibility> {
    aq_visibility_with(asm, &AqOptions::default())
}

pub fn aq_visibility_with(asm: &Assemblage, opts: &AqOptions) -> Result<AqVisibility> {
    let s = *asm.scenario();
    let complex = opts.force_complex || !asm.is_real(0.0);
    let mut form = Formulation::new(s, complex);
    let mu = form.program.add_var();
    let x = asm.word_coordinates();
    let x0 = depolarized(asm)?.word_coordinates();
    let d = s.dim_a;
    let mut pins = Vec::new();
    for (w, (xw, x0w)) in x.iter().zip(&x0).enumerate() {
        for i in 0..d {
            for j in 0..d {
                let (re, im) = form.first_row_entry(w, i, j);
                let (a, a0) = (xw.get(i, j), x0w.get(i, j));
                pins.push(re - LinExpr::constant(a0.re) - LinExpr::term(mu, a.re - a0.re));
                if complex {
                    pins.push(im - LinExpr::constant(a0.im) - LinExpr::term(mu, a.im - a0.im));
                }
            }
        }
    }
    let pin_rows = form.program.add_zero(pins);
    form.program.add_nonneg(vec![LinExpr::constant(1.0) - LinExpr::var(mu)]);
    form.program.minimize(LinExpr::term(mu, -1.0));
    let sol = form.program.solve(&opts.settings)?;
    if sol.status == ConicStatus::PrimalInfeasible {
        return Err(Error::InvalidInput("the depolarized assemblage is not almost-quantum".into()));
    }
    let sol = sol.require_optimal("almost-quantum visibility")?;
    let value = sol.x[mu].min(1.0);
    if value >= 1.0 - MEMBERSHIP_TOL {
        return Ok(AqVisibility { mu: value, functional: None });
    }
    // F(Y) = −Σ_r z_r Y_r over the pinned real and imaginary parts
    let z = &sol.z[pin_rows.range()];
    let per = if complex { 2 } else { 1 };
    let g: Vec<HermitianMatrix> = (0..x.len())
        .map(|w| {
            let m = CMatrix::from_fn(d, d, |j, i| {
                let k = (w * d * d + i * d + j) * per;
                let im = if complex { z[k + 1] } else { 0.0 };
                Complex64::new(-z[k], im)
            });
            HermitianMatrix::symmetrized(m)
        })
        .collect();
    let functional = SteeringFunctional::from_word_coefficients(s, &g)?;
    Ok(AqVisibility { mu: value, functional: Some(functional) })
}
