//! Linear steering functionals `β = tr Σ F_{bcyz} σ_{bc|yz}`.
//!
//! On no-signaling assemblages a functional only sees its *word
//! coefficients*: one operator per entry of [`word_set`], obtained by
//! substituting the no-signaling completion of every cell. For two outcomes
//! these are exactly `F_A`, `F^B_y`, `F^C_z` and `F_yz` of the minimal form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::scenario::{cell_expansion, word_set, Cell, Scenario, Word};

/// Imaginary residue above which a trace sum is treated as a sign of
/// non-Hermitian input.
pub const IMAG_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SteeringFunctional {
    scenario: Scenario,
    operators: Vec<HermitianMatrix>,
}

impl SteeringFunctional {
    pub fn new(scenario: Scenario, operators: Vec<HermitianMatrix>) -> Result<Self> {
        scenario.check()?;
        if operators.len() != scenario.num_cells() {
            return Err(Error::Dimension(format!(
                "scenario has {} cells, got {} operators",
                scenario.num_cells(),
                operators.len()
            )));
        }
        if operators.iter().any(|m| m.dim() != scenario.dim_a) {
            return Err(Error::Dimension("operator dimension differs from dim_a".into()));
        }
        Ok(SteeringFunctional { scenario, operators })
    }

    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(Cell) -> HermitianMatrix) -> Result<Self> {
        let ops = scenario.cells().map(&mut f).collect();
        Self::new(scenario, ops)
    }

    pub fn zero(scenario: Scenario) -> Self {
        Self::from_fn(scenario, |_| HermitianMatrix::zeros(scenario.dim_a)).expect("well-shaped")
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn operators(&self) -> &[HermitianMatrix] {
        &self.operators
    }

    pub fn get(&self, cell: Cell) -> &HermitianMatrix {
        &self.operators[self.scenario.cell_index(cell)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, &HermitianMatrix)> {
        self.scenario.cells().zip(self.operators.iter())
    }

    pub fn scale(&self, s: f64) -> Self {
        SteeringFunctional { scenario: self.scenario, operators: self.operators.iter().map(|m| m.scale(s)).collect() }
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.operators.iter().all(|m| m.is_real(tol))
    }

    /// `Σ_{bcyz} ‖F_{bcyz}‖_F`.
    pub fn norm_l1_frobenius(&self) -> f64 {
        self.operators.iter().map(|m| m.frobenius_norm()).sum()
    }

    /// `F_{bcyz} ← (F_{bcyz} + F_{cbzy}) / 2`.
    pub fn symmetrized(&self) -> Result<Self> {
        if self.scenario.swapped() != self.scenario {
            return Err(Error::InvalidInput("Bob/Charlie symmetrization needs matching Bob and Charlie dimensions".into()));
        }
        Self::from_fn(self.scenario, |cell| (self.get(cell) + self.get(cell.swapped())).scale(0.5))
    }

    /// One operator per word: `G_w = Σ_cells coef(cell, w) F_cell`.
    pub fn word_coefficients(&self) -> Vec<HermitianMatrix> {
        let s = self.scenario;
        let mut g = vec![HermitianMatrix::zeros(s.dim_a); s.num_words()];
        for (cell, f) in self.iter() {
            for (w, coef) in cell_expansion(&s, cell) {
                g[w] = &g[w] + &f.scale(coef);
            }
        }
        g
    }

    /// A functional with the given word coefficients, in the indicator gauge
    /// `F_{bcyz} = G_∅/(m_b m_c) + [b<k_B−1] G_{b|y}/m_c + [c<k_C−1] G_{c|z}/m_b
    /// + [b<k_B−1][c<k_C−1] G_{bc|yz}`.
    pub fn from_word_coefficients(scenario: Scenario, g: &[HermitianMatrix]) -> Result<Self> {
        scenario.check()?;
        if g.len() != scenario.num_words() {
            return Err(Error::Dimension(format!("expected {} word coefficients, got {}", scenario.num_words(), g.len())));
        }
        let words = word_set(&scenario);
        let at = |w: Word| &g[words.iter().position(|&x| x == w).expect("word in set")];
        let mb = scenario.set_b as f64;
        let mc = scenario.set_c as f64;
        Self::from_fn(scenario, |cell| {
            let mut f = at(Word::Empty).scale(1.0 / (mb * mc));
            let kb = cell.b < scenario.out_b - 1;
            let kc = cell.c < scenario.out_c - 1;
            if kb {
                f = &f + &at(Word::B { b: cell.b, y: cell.y }).scale(1.0 / mc);
            }
            if kc {
                f = &f + &at(Word::C { c: cell.c, z: cell.z }).scale(1.0 / mb);
            }
            if kb && kc {
                f = &f + at(Word::BC { b: cell.b, c: cell.c, y: cell.y, z: cell.z });
            }
            f
        })
    }
}

#[derive(Serialize, Deserialize)]
struct FunctionalJson {
    scenario: Scenario,
    operators: BTreeMap<String, HermitianMatrix>,
}

impl Serialize for SteeringFunctional {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionalJson {
            scenario: self.scenario,
            operators: self.iter().map(|(cell, m)| (cell.key(), m.clone())).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SteeringFunctional {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut raw = FunctionalJson::deserialize(d)?;
        let s = raw.scenario;
        s.check().map_err(D::Error::custom)?;
        let ops = s
            .cells()
            .map(|cell| raw.operators.remove(&cell.key()).ok_or_else(|| D::Error::custom(format!("missing operator {}", cell.key()))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if let Some(extra) = raw.operators.keys().next() {
            return Err(D::Error::custom(format!("operator {extra} outside the scenario")));
        }
        SteeringFunctional::new(s, ops).map_err(D::Error::custom)
    }
}

/// Minimal form of a two-outcome functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalFunctional {
    #[serde(rename = "F_A")]
    pub f_a: HermitianMatrix,
    #[serde(rename = "F_B")]
    pub f_b: Vec<HermitianMatrix>,
    #[serde(rename = "F_C")]
    pub f_c: Vec<HermitianMatrix>,
    /// `f_yz[y][z]`.
    #[serde(rename = "F_YZ")]
    pub f_yz: Vec<Vec<HermitianMatrix>>,
}

impl MinimalFunctional {
    pub fn scenario(&self) -> Scenario {
        Scenario { dim_a: self.f_a.dim(), out_b: 2, out_c: 2, set_b: self.f_b.len(), set_c: self.f_c.len() }
    }

    pub fn zero(scenario: Scenario) -> Self {
        let z = HermitianMatrix::zeros(scenario.dim_a);
        MinimalFunctional {
            f_a: z.clone(),
            f_b: vec![z.clone(); scenario.set_b],
            f_c: vec![z.clone(); scenario.set_c],
            f_yz: vec![vec![z; scenario.set_c]; scenario.set_b],
        }
    }

    fn check(&self) -> Result<()> {
        let s = self.scenario();
        if s.set_b == 0 || s.set_c == 0 {
            return Err(Error::Dimension("minimal functional without settings".into()));
        }
        if self.f_yz.len() != s.set_b || self.f_yz.iter().any(|r| r.len() != s.set_c) {
            return Err(Error::Dimension("F_YZ must be m_b x m_c".into()));
        }
        let all = std::iter::once(&self.f_a).chain(&self.f_b).chain(&self.f_c).chain(self.f_yz.iter().flatten());
        if all.into_iter().any(|m| m.dim() != s.dim_a) {
            return Err(Error::Dimension("minimal operators of different dimensions".into()));
        }
        Ok(())
    }

    /// Word coefficients in [`word_set`] order.
    pub fn word_coefficients(&self) -> Result<Vec<HermitianMatrix>> {
        self.check()?;
        let mut g = Vec::with_capacity(self.scenario().num_words());
        g.push(self.f_a.clone());
        g.extend(self.f_b.iter().cloned());
        g.extend(self.f_c.iter().cloned());
        g.extend(self.f_yz.iter().flatten().cloned());
        Ok(g)
    }

    /// Minimal form of a two-outcome functional:
    /// `F_A = Σ_{yz} F_{11yz}`, `F^B_y = Σ_{bz} (−1)^b F_{b1yz}`,
    /// `F^C_z = Σ_{cy} (−1)^c F_{1cyz}`, `F_yz = Σ_{bc} (−1)^{b+c} F_{bcyz}`.
    pub fn of(f: &SteeringFunctional) -> Result<Self> {
        let s = *f.scenario();
        if s.out_b != 2 || s.out_c != 2 {
            return Err(Error::InvalidInput("minimal form needs two outcomes per setting".into()));
        }
        let g = f.word_coefficients();
        let mut it = g.into_iter();
        let f_a = it.next().expect("∅");
        let f_b: Vec<_> = it.by_ref().take(s.set_b).collect();
        let f_c: Vec<_> = it.by_ref().take(s.set_c).collect();
        let f_yz = (0..s.set_b).map(|_| it.by_ref().take(s.set_c).collect()).collect();
        Ok(MinimalFunctional { f_a, f_b, f_c, f_yz })
    }

    /// Bob/Charlie symmetric completion: `F^C = F^B`, `F_zy = F_yz` for the
    /// entries listed (`pairs` maps `(y, z)` to an operator).
    pub fn symmetric(f_a: HermitianMatrix, f_b: Vec<HermitianMatrix>, pairs: &[((usize, usize), HermitianMatrix)]) -> Result<Self> {
        let m = f_b.len();
        let mut f_yz = vec![vec![None; m]; m];
        for ((y, z), op) in pairs {
            if *y >= m || *z >= m {
                return Err(Error::Dimension(format!("F_{y}{z} outside {m} settings")));
            }
            f_yz[*y][*z] = Some(op.clone());
            f_yz[*z][*y].get_or_insert_with(|| op.clone());
        }
        let f_yz = f_yz
            .into_iter()
            .enumerate()
            .map(|(y, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(z, op)| op.ok_or_else(|| Error::InvalidInput(format!("missing F_{y}{z}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let out = MinimalFunctional { f_a, f_c: f_b.clone(), f_b, f_yz };
        out.check()?;
        Ok(out)
    }
}

/// `F_{bcyz} = F_A/(m_b m_c) + [b=0] F^B_y/m_c + [c=0] F^C_z/m_b + [b=0][c=0] F_yz`,
/// the indicator gauge; it satisfies all four minimal-form relations exactly.
pub fn expand_minimal(fmin: &MinimalFunctional) -> Result<SteeringFunctional> {
    SteeringFunctional::from_word_coefficients(fmin.scenario(), &fmin.word_coefficients()?)
}

fn real_trace_sum(pairs: impl Iterator<Item = num_complex::Complex64>) -> Result<f64> {
    let total: num_complex::Complex64 = pairs.sum();
    if total.im.abs() > IMAG_TOL {
        return Err(Error::InvalidInput(format!(
            "functional value has imaginary part {:.3e}; inputs are not Hermitian",
            total.im
        )));
    }
    Ok(total.re)
}

/// `β = Σ_{bcyz} tr(F_{bcyz} σ_{bc|yz})`.
pub fn evaluate_functional(f: &SteeringFunctional, asm: &Assemblage) -> Result<f64> {
    if f.scenario() != asm.scenario() {
        return Err(Error::Dimension(format!(
            "functional scenario {:?} does not match assemblage scenario {:?}",
            f.scenario(),
            asm.scenario()
        )));
    }
    real_trace_sum(f.operators.iter().zip(asm.blocks()).map(|(a, b)| a.trace_product(b)))
}

/// `β = tr(F_A ρ_A + Σ_y F^B_y σ^B_{0|y} + Σ_z F^C_z σ^C_{0|z} + Σ_{yz} F_yz σ_{00|yz})`.
/// The marginals are read off the assemblage, so it must be no-signaling.
pub fn evaluate_minimal(fmin: &MinimalFunctional, asm: &Assemblage) -> Result<f64> {
    let s = asm.scenario();
    if s.out_b != 2 || s.out_c != 2 {
        return Err(Error::InvalidInput(format!(
            "minimal evaluation needs two outcomes per setting, got {} and {}",
            s.out_b, s.out_c
        )));
    }
    if fmin.scenario() != *s {
        return Err(Error::Dimension(format!(
            "minimal functional scenario {:?} does not match assemblage scenario {:?}",
            fmin.scenario(),
            s
        )));
    }
    evaluate_word_coefficients(&fmin.word_coefficients()?, &asm.word_coordinates())
}

pub fn evaluate_word_coefficients(g: &[HermitianMatrix], coords: &[HermitianMatrix]) -> Result<f64> {
    if g.len() != coords.len() {
        return Err(Error::Dimension("word coefficient count mismatch".into()));
    }
    real_trace_sum(g.iter().zip(coords).map(|(a, b)| a.trace_product(b)))
}
