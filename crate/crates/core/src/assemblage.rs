//! Tripartite and bipartite assemblages, their no-signaling validators and
//! the minimal (word-coordinate) representation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::scenario::{cell_expansion, word_set, Cell, Scenario, Word};

/// Tolerance for data given to four decimal places.
pub const ROUNDING_TOL: f64 = 1e-3;

/// Unnormalized conditional states `σ_{bc|yz}` of the trusted party.
#[derive(Clone, Debug, PartialEq)]
pub struct Assemblage {
    scenario: Scenario,
    blocks: Vec<HermitianMatrix>,
}

impl Assemblage {
    /// Blocks in [`Scenario::cells`] order.
    pub fn new(scenario: Scenario, blocks: Vec<HermitianMatrix>) -> Result<Self> {
        scenario.check()?;
        if blocks.len() != scenario.num_cells() {
            return Err(Error::Dimension(format!(
                "scenario has {} cells, got {} blocks",
                scenario.num_cells(),
                blocks.len()
            )));
        }
        if let Some(bad) = blocks.iter().find(|m| m.dim() != scenario.dim_a) {
            return Err(Error::Dimension(format!(
                "block of dimension {} in a scenario with dim_a = {}",
                bad.dim(),
                scenario.dim_a
            )));
        }
        Ok(Assemblage { scenario, blocks })
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(Cell) -> HermitianMatrix) -> Result<Self> {
        let blocks = scenario.cells().map(&mut f).collect();
        Self::new(scenario, blocks)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn blocks(&self) -> &[HermitianMatrix] {
        &self.blocks
    }

    pub fn block(&self, b: usize, c: usize, y: usize, z: usize) -> &HermitianMatrix {
        self.get(Cell { b, c, y, z })
    }

    pub fn get(&self, cell: Cell) -> &HermitianMatrix {
        &self.blocks[self.scenario.cell_index(cell)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, &HermitianMatrix)> {
        self.scenario.cells().zip(self.blocks.iter())
    }

    /// `Σ_c σ_{bc|yz}` at a given `z`.
    pub fn bob_marginal(&self, b: usize, y: usize, z: usize) -> HermitianMatrix {
        HermitianMatrix::sum((0..self.scenario.out_c).map(|c| self.block(b, c, y, z))).expect("out_c >= 1")
    }

    /// `Σ_b σ_{bc|yz}` at a given `y`.
    pub fn charlie_marginal(&self, c: usize, z: usize, y: usize) -> HermitianMatrix {
        HermitianMatrix::sum((0..self.scenario.out_b).map(|b| self.block(b, c, y, z))).expect("out_b >= 1")
    }

    /// `Σ_{bc} σ_{bc|yz}`.
    pub fn reduced_state(&self, y: usize, z: usize) -> HermitianMatrix {
        let s = self.scenario;
        HermitianMatrix::sum((0..s.out_b).flat_map(|b| (0..s.out_c).map(move |c| (b, c))).map(|(b, c)| self.block(b, c, y, z)))
            .expect("non-empty")
    }

    /// `p(bc|yz) = tr σ_{bc|yz}`.
    pub fn probability(&self, cell: Cell) -> f64 {
        self.get(cell).trace()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.blocks.iter().all(|m| m.is_real(tol))
    }

    pub fn map_blocks(&self, f: impl Fn(Cell, &HermitianMatrix) -> HermitianMatrix) -> Result<Self> {
        let blocks: Vec<_> = self.iter().map(|(cell, m)| f(cell, m)).collect();
        let dim_a = blocks[0].dim();
        Assemblage::new(self.scenario.with_dim_a(dim_a), blocks)
    }

    pub fn max_abs_diff(&self, other: &Assemblage) -> f64 {
        assert_eq!(self.scenario, other.scenario, "scenario mismatch");
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(|m| m.min_eigenvalue()).fold(f64::INFINITY, f64::min)
    }

    /// Word coordinates, one block per entry of [`word_set`]: `ρ_A` read at
    /// `(y, z) = (0, 0)`, Bob marginals at `z = 0`, Charlie marginals at
    /// `y = 0`, and the joint blocks. Only meaningful for no-signaling input.
    pub fn word_coordinates(&self) -> Vec<HermitianMatrix> {
        word_set(&self.scenario)
            .into_iter()
            .map(|w| match w {
                Word::Empty => self.reduced_state(0, 0),
                Word::B { b, y } => self.bob_marginal(b, y, 0),
                Word::C { c, z } => self.charlie_marginal(c, z, 0),
                Word::BC { b, c, y, z } => self.block(b, c, y, z).clone(),
            })
            .collect()
    }

    /// Inverse of [`Assemblage::word_coordinates`]: fills every cell by
    /// no-signaling and completeness.
    pub fn from_word_coordinates(scenario: Scenario, coords: &[HermitianMatrix]) -> Result<Self> {
        if coords.len() != scenario.num_words() {
            return Err(Error::Dimension(format!(
                "expected {} word coordinates, got {}",
                scenario.num_words(),
                coords.len()
            )));
        }
        Assemblage::from_fn(scenario, |cell| {
            cell_expansion(&scenario, cell)
                .into_iter()
                .fold(HermitianMatrix::zeros(scenario.dim_a), |acc, (i, s)| &acc + &(&coords[i] * s))
        })
    }

    /// `σ_{bc|yz} ↦ σ_{cb|zy}`.
    pub fn swap_parties(&self) -> Self {
        let s = self.scenario.swapped();
        Assemblage::from_fn(s, |cell| self.get(cell.swapped()).clone()).expect("same shape")
    }
}

#[derive(Serialize, Deserialize)]
struct AssemblageJson {
    scenario: Scenario,
    blocks: BTreeMap<String, HermitianMatrix>,
}

impl Serialize for Assemblage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AssemblageJson {
            scenario: self.scenario,
            blocks: self.iter().map(|(cell, m)| (cell.key(), m.clone())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Assemblage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = AssemblageJson::deserialize(d)?;
        let s = raw.scenario;
        s.check().map_err(D::Error::custom)?;
        let mut slots: Vec<Option<HermitianMatrix>> = vec![None; s.num_cells()];
        for (key, m) in raw.blocks {
            let cell = Cell::parse_key(&key).map_err(D::Error::custom)?;
            if !s.contains(cell) {
                return Err(D::Error::custom(format!("block {key} outside the scenario")));
            }
            slots[s.cell_index(cell)] = Some(m);
        }
        let blocks = s
            .cells()
            .map(|cell| slots[s.cell_index(cell)].take().ok_or_else(|| D::Error::custom(format!("missing block {}", cell.key()))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Assemblage::new(s, blocks).map_err(D::Error::custom)
    }
}

/// One untrusted party: `σ_{b|y}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteAssemblage {
    dim_a: usize,
    outcomes: usize,
    settings: usize,
    blocks: Vec<HermitianMatrix>,
}

impl BipartiteAssemblage {
    /// `blocks[y][b]`.
    pub fn new(blocks: Vec<Vec<HermitianMatrix>>) -> Result<Self> {
        let settings = blocks.len();
        if settings == 0 || blocks[0].is_empty() {
            return Err(Error::Dimension("bipartite assemblage needs at least one setting and outcome".into()));
        }
        let outcomes = blocks[0].len();
        let dim_a = blocks[0][0].dim();
        if blocks.iter().any(|row| row.len() != outcomes) {
            return Err(Error::Dimension("settings with different outcome counts".into()));
        }
        if blocks.iter().flatten().any(|m| m.dim() != dim_a) {
            return Err(Error::Dimension("blocks of different dimensions".into()));
        }
        Ok(BipartiteAssemblage { dim_a, outcomes, settings, blocks: blocks.into_iter().flatten().collect() })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn block(&self, b: usize, y: usize) -> &HermitianMatrix {
        &self.blocks[y * self.outcomes + b]
    }

    pub fn reduced_state(&self, y: usize) -> HermitianMatrix {
        HermitianMatrix::sum((0..self.outcomes).map(|b| self.block(b, y))).expect("outcomes >= 1")
    }

    pub fn max_abs_diff(&self, other: &BipartiteAssemblage) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }

    /// Bob marginals `σ^B_{b|y}` of a tripartite assemblage.
    pub fn bob_marginals_of(asm: &Assemblage) -> Self {
        let s = asm.scenario();
        let rows = (0..s.set_b).map(|y| (0..s.out_b).map(|b| asm.bob_marginal(b, y, 0)).collect()).collect();
        Self::new(rows).expect("well-shaped")
    }
}

#[derive(Serialize, Deserialize)]
struct BipartiteJson {
    dim_a: usize,
    outcomes: usize,
    settings: usize,
    blocks: BTreeMap<String, HermitianMatrix>,
}

impl Serialize for BipartiteAssemblage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut blocks = BTreeMap::new();
        for y in 0..self.settings {
            for b in 0..self.outcomes {
                blocks.insert(format!("{b},{y}"), self.block(b, y).clone());
            }
        }
        BipartiteJson { dim_a: self.dim_a, outcomes: self.outcomes, settings: self.settings, blocks }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BipartiteAssemblage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut raw = BipartiteJson::deserialize(d)?;
        let mut rows = Vec::with_capacity(raw.settings);
        for y in 0..raw.settings {
            let mut row = Vec::with_capacity(raw.outcomes);
            for b in 0..raw.outcomes {
                let m = raw.blocks.remove(&format!("{b},{y}")).ok_or_else(|| D::Error::custom(format!("missing block \"{b},{y}\"")))?;
                row.push(m);
            }
            rows.push(row);
        }
        if let Some(extra) = raw.blocks.keys().next() {
            return Err(D::Error::custom(format!("unexpected block {extra:?}")));
        }
        let asm = BipartiteAssemblage::new(rows).map_err(D::Error::custom)?;
        if asm.dim_a != raw.dim_a {
            return Err(D::Error::custom("dim_a does not match the block dimension"));
        }
        Ok(asm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    Positivity,
    /// Outcome-summed blocks independent of the other parties' settings.
    NoSignalingBob,
    NoSignalingCharlie,
    /// Bipartite `Σ_b σ_{b|y}` independent of `y`.
    NoSignaling,
    Normalization,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub family: ConstraintFamily,
    pub max_violation: f64,
    /// Where the worst violation sits, human readable.
    pub worst: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub checks: Vec<ConstraintCheck>,
    pub passed: bool,
}

impl ValidationReport {
    fn from_checks(tolerance: f64, checks: Vec<ConstraintCheck>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        ValidationReport { tolerance, checks, passed }
    }

    pub fn check(&self, family: ConstraintFamily) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.family == family)
    }

    pub fn max_violation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_violation).fold(0.0, f64::max)
    }
}

struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, at: String::from("-") }
    }

    fn update(&mut self, value: f64, at: impl FnOnce() -> String) {
        if value > self.value {
            self.value = value;
            self.at = at();
        }
    }

    fn into_check(self, family: ConstraintFamily, tol: f64) -> ConstraintCheck {
        ConstraintCheck { family, passed: self.value <= tol, max_violation: self.value, worst: self.at }
    }
}

/// Positivity, both no-signaling families and normalization, each reported
/// with its maximal violation.
pub fn validate_tripartite_ns(asm: &Assemblage, tol: f64) -> ValidationReport {
    let s = *asm.scenario();
    let mut pos = Worst::new();
    for (cell, m) in asm.iter() {
        pos.update(-m.min_eigenvalue(), || format!("σ{cell}"));
    }

    let mut bob_ns = Worst::new();
    for c in 0..s.out_c {
        for z in 0..s.set_c {
            let sums: Vec<_> = (0..s.set_b).map(|y| asm.charlie_marginal(c, z, y)).collect();
            for y in 0..s.set_b {
                for y2 in y + 1..s.set_b {
                    bob_ns.update(sums[y].max_abs_diff(&sums[y2]), || format!("Σ_b σ(b{c}|y{z}) at y={y} vs y={y2}"));
                }
            }
        }
    }

    let mut charlie_ns = Worst::new();
    for b in 0..s.out_b {
        for y in 0..s.set_b {
            let sums: Vec<_> = (0..s.set_c).map(|z| asm.bob_marginal(b, y, z)).collect();
            for z in 0..s.set_c {
                for z2 in z + 1..s.set_c {
                    charlie_ns.update(sums[z].max_abs_diff(&sums[z2]), || format!("Σ_c σ({b}c|{y}z) at z={z} vs z={z2}"));
                }
            }
        }
    }

    let mut norm = Worst::new();
    for y in 0..s.set_b {
        for z in 0..s.set_c {
            norm.update((asm.reduced_state(y, z).trace() - 1.0).abs(), || format!("tr ρ_A at (y,z)=({y},{z})"));
        }
    }

    ValidationReport::from_checks(
        tol,
        vec![
            pos.into_check(ConstraintFamily::Positivity, tol),
            bob_ns.into_check(ConstraintFamily::NoSignalingBob, tol),
            charlie_ns.into_check(ConstraintFamily::NoSignalingCharlie, tol),
            norm.into_check(ConstraintFamily::Normalization, tol),
        ],
    )
}

pub fn validate_bipartite_ns(asm: &BipartiteAssemblage, tol: f64) -> ValidationReport {
    let mut pos = Worst::new();
    for y in 0..asm.settings() {
        for b in 0..asm.outcomes() {
            pos.update(-asm.block(b, y).min_eigenvalue(), || format!("σ({b}|{y})"));
        }
    }
    let reduced: Vec<_> = (0..asm.settings()).map(|y| asm.reduced_state(y)).collect();
    let mut ns = Worst::new();
    for y in 0..asm.settings() {
        for y2 in y + 1..asm.settings() {
            ns.update(reduced[y].max_abs_diff(&reduced[y2]), || format!("Σ_b σ(b|y) at y={y} vs y={y2}"));
        }
    }
    let mut norm = Worst::new();
    for (y, r) in reduced.iter().enumerate() {
        norm.update((r.trace() - 1.0).abs(), || format!("tr ρ_A at y={y}"));
    }
    ValidationReport::from_checks(
        tol,
        vec![
            pos.into_check(ConstraintFamily::Positivity, tol),
            ns.into_check(ConstraintFamily::NoSignaling, tol),
            norm.into_check(ConstraintFamily::Normalization, tol),
        ],
    )
}

/// Minimal representation of a two-outcome assemblage: `ρ_A`, the outcome-0
/// marginals and the `(0,0)` joint blocks. When `sigma_c` is absent the
/// assemblage is taken to be symmetric under exchange of Bob and Charlie
/// (`σ_{bc|yz} = σ_{cb|zy}`), so `σ^C_{0|z} = σ^B_{0|z}`; joint blocks
/// listed for only one of `(y,z)`, `(z,y)` are then completed by symmetry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalAssemblage {
    pub rho_a: HermitianMatrix,
    pub sigma_b: Vec<HermitianMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_c: Option<Vec<HermitianMatrix>>,
    /// Keyed `"y,z"`.
    pub sigma_00: BTreeMap<String, HermitianMatrix>,
}

impl MinimalAssemblage {
    pub fn scenario(&self) -> Scenario {
        let set_c = self.sigma_c.as_ref().map_or(self.sigma_b.len(), |v| v.len());
        Scenario { dim_a: self.rho_a.dim(), out_b: 2, out_c: 2, set_b: self.sigma_b.len(), set_c }
    }

    /// Minimal data of a two-outcome assemblage (explicit Charlie marginals,
    /// every joint block listed).
    pub fn of(asm: &Assemblage) -> Result<Self> {
        let s = asm.scenario();
        if s.out_b != 2 || s.out_c != 2 {
            return Err(Error::InvalidInput("minimal representation needs two outcomes per setting".into()));
        }
        let mut sigma_00 = BTreeMap::new();
        for y in 0..s.set_b {
            for z in 0..s.set_c {
                sigma_00.insert(format!("{y},{z}"), asm.block(0, 0, y, z).clone());
            }
        }
        Ok(MinimalAssemblage {
            rho_a: asm.reduced_state(0, 0),
            sigma_b: (0..s.set_b).map(|y| asm.bob_marginal(0, y, 0)).collect(),
            sigma_c: Some((0..s.set_c).map(|z| asm.charlie_marginal(0, z, 0)).collect()),
            sigma_00,
        })
    }
}

/// Fills all blocks of a two-outcome assemblage from its minimal data:
/// `σ_{01|yz} = σ^B_{0|y} − σ_{00|yz}`, `σ_{10|yz} = σ^C_{0|z} − σ_{00|yz}`,
/// `σ_{11|yz} = ρ_A − σ^B_{0|y} − σ^C_{0|z} + σ_{00|yz}`.
pub fn reconstruct_from_minimal(min: &MinimalAssemblage, tol: f64) -> Result<Assemblage> {
    let s = min.scenario();
    if s.set_b == 0 || s.set_c == 0 {
        return Err(Error::InvalidInput("minimal data without settings".into()));
    }
    let symmetric = min.sigma_c.is_none();
    let sigma_c: &[HermitianMatrix] = min.sigma_c.as_deref().unwrap_or(&min.sigma_b);
    if min.sigma_b.iter().chain(sigma_c).chain(min.sigma_00.values()).any(|m| m.dim() != s.dim_a) {
        return Err(Error::Dimension("minimal blocks must share the dimension of ρ_A".into()));
    }

    let mut joint = vec![vec![None; s.set_c]; s.set_b];
    for (key, m) in &min.sigma_00 {
        let parts: Vec<usize> = key
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("bad sigma_00 key {key:?}")))?;
        let (y, z) = match parts.as_slice() {
            &[y, z] if y < s.set_b && z < s.set_c => (y, z),
            _ => return Err(Error::InvalidInput(format!("sigma_00 key {key:?} outside the scenario"))),
        };
        joint[y][z] = Some(m.clone());
    }
    if symmetric {
        for y in 0..s.set_b {
            for z in 0..s.set_c {
                match (joint[y][z].clone(), joint[z][y].clone()) {
                    (Some(a), Some(b)) => {
                        let dev = a.max_abs_diff(&b);
                        if dev > tol {
                            return Err(Error::InvalidInput(format!(
                                "σ_00|{y}{z} and σ_00|{z}{y} differ by {dev:.3e}, inconsistent with Bob/Charlie symmetry"
                            )));
                        }
                    }
                    (None, Some(b)) => joint[y][z] = Some(b),
                    _ => {}
                }
            }
        }
    }
    let mut coords = Vec::with_capacity(s.num_words());
    coords.push(min.rho_a.clone());
    coords.extend(min.sigma_b.iter().cloned());
    coords.extend(sigma_c.iter().cloned());
    for (y, row) in joint.into_iter().enumerate() {
        for (z, m) in row.into_iter().enumerate() {
            coords.push(m.ok_or_else(|| Error::InvalidInput(format!("missing σ_00|{y}{z}")))?);
        }
    }
    Assemblage::from_word_coordinates(s, &coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::prbox_product;
    use crate::fixtures;

    fn uniform_bipartite() -> BipartiteAssemblage {
        let q = HermitianMatrix::identity(2).scale(0.25);
        BipartiteAssemblage::new(vec![vec![q.clone(), q.clone()], vec![q.clone(), q]]).unwrap()
    }

    #[test]
    fn example_passes_at_rounding_tolerance() {
        let asm = fixtures::example_assemblage();
        let r = validate_tripartite_ns(&asm, ROUNDING_TOL);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn flipped_block_fails_positivity() {
        let asm = fixtures::example_assemblage();
        let flipped = asm.map_blocks(|cell, m| if cell == Cell::new(0, 0, 0, 0) { -m } else { m.clone() }).unwrap();
        let r = validate_tripartite_ns(&flipped, ROUNDING_TOL);
        assert!(!r.passed);
        assert!(!r.check(ConstraintFamily::Positivity).unwrap().passed);
    }

    #[test]
    fn product_of_ns_box_and_state_passes_tightly() {
        let rho = HermitianMatrix::real2(0.7, 0.2, 0.3);
        let asm = prbox_product(&rho).unwrap();
        assert!(validate_tripartite_ns(&asm, 1e-12).passed);
    }

    #[test]
    fn marginals_are_setting_independent_for_valid_input() {
        let asm = fixtures::example_assemblage();
        let r0 = asm.reduced_state(0, 0);
        for y in 0..2 {
            for z in 0..2 {
                assert!(asm.reduced_state(y, z).max_abs_diff(&r0) <= ROUNDING_TOL);
            }
        }
    }

    #[test]
    fn bipartite_uniform_passes() {
        assert!(validate_bipartite_ns(&uniform_bipartite(), 1e-12).passed);
    }

    #[test]
    fn bipartite_bad_trace_fails_normalization() {
        let i = HermitianMatrix::identity(2);
        let z = HermitianMatrix::zeros(2);
        let h = i.scale(0.5);
        let asm = BipartiteAssemblage::new(vec![vec![i, z], vec![h.clone(), h]]).unwrap();
        let r = validate_bipartite_ns(&asm, 1e-9);
        assert!(!r.passed);
        assert!(!r.check(ConstraintFamily::Normalization).unwrap().passed);
        assert!(r.check(ConstraintFamily::NoSignaling).unwrap().passed);
    }

    #[test]
    fn example_bob_marginals_form_a_valid_bipartite_assemblage() {
        let asm = fixtures::example_assemblage();
        let bip = BipartiteAssemblage::bob_marginals_of(&asm);
        assert!(validate_bipartite_ns(&bip, ROUNDING_TOL).passed);
    }

    #[test]
    fn reconstruct_uniform_product() {
        let h = |x: f64| HermitianMatrix::identity(2).scale(x);
        let min = MinimalAssemblage {
            rho_a: h(0.5),
            sigma_b: vec![h(0.25), h(0.25)],
            sigma_c: None,
            sigma_00: [("0,0", h(0.125)), ("0,1", h(0.125)), ("1,1", h(0.125))]
                .into_iter()
                .map(|(k, m)| (k.to_string(), m))
                .collect(),
        };
        let asm = reconstruct_from_minimal(&min, 1e-12).unwrap();
        for (_, m) in asm.iter() {
            assert!(m.max_abs_diff(&h(0.125)) < 1e-15);
        }
    }

    #[test]
    fn reconstruct_round_trips_marginals() {
        let min = fixtures::example_minimal();
        let asm = reconstruct_from_minimal(&min, ROUNDING_TOL).unwrap();
        let back = MinimalAssemblage::of(&asm).unwrap();
        assert!(back.rho_a.max_abs_diff(&min.rho_a) < 1e-12);
        for y in 0..2 {
            assert!(back.sigma_b[y].max_abs_diff(&min.sigma_b[y]) < 1e-12);
            assert!(back.sigma_c.as_ref().unwrap()[y].max_abs_diff(&min.sigma_b[y]) < 1e-12);
        }
        for (k, m) in &min.sigma_00 {
            assert!(back.sigma_00[k].max_abs_diff(m) < 1e-12);
        }
    }

    #[test]
    fn reconstruct_rejects_asymmetric_joint_blocks() {
        let mut min = fixtures::example_minimal();
        let other = min.sigma_00["1,0"].scale(1.1);
        min.sigma_00.insert("0,1".into(), other);
        assert!(reconstruct_from_minimal(&min, ROUNDING_TOL).is_err());
    }

    #[test]
    fn example_is_bob_charlie_symmetric() {
        let asm = fixtures::example_assemblage();
        assert!(asm.swap_parties().max_abs_diff(&asm) < 1e-15);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let asm = fixtures::example_assemblage();
        let s = serde_json::to_string(&asm).unwrap();
        let back: Assemblage = serde_json::from_str(&s).unwrap();
        assert_eq!(back, asm);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let mut missing = v.clone();
        missing["blocks"].as_object_mut().unwrap().remove("0,0,0,0");
        assert!(serde_json::from_value::<Assemblage>(missing).is_err());
        let mut wrong_dim = v;
        wrong_dim["scenario"]["dim_a"] = 3.into();
        assert!(serde_json::from_value::<Assemblage>(wrong_dim).is_err());
    }

    #[test]
    fn word_coordinates_round_trip() {
        let asm = fixtures::example_assemblage();
        let back = Assemblage::from_word_coordinates(*asm.scenario(), &asm.word_coordinates()).unwrap();
        assert!(back.max_abs_diff(&asm) < 1e-12);
    }
}
