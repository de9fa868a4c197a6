//! Scenario dimensions, cell indexing and the word set shared by the
//! minimal representation and the moment matrix.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of a one-trusted-party tripartite steering scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    /// Hilbert-space dimension of the trusted party.
    pub dim_a: usize,
    /// Outcomes per setting for Bob.
    pub out_b: usize,
    /// Outcomes per setting for Charlie.
    pub out_c: usize,
    /// Number of settings for Bob.
    pub set_b: usize,
    /// Number of settings for Charlie.
    pub set_c: usize,
}

/// One `(b, c, y, z)` cell of an assemblage or functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub b: usize,
    pub c: usize,
    pub y: usize,
    pub z: usize,
}

impl Cell {
    pub fn new(b: usize, c: usize, y: usize, z: usize) -> Self {
        Cell { b, c, y, z }
    }

    /// JSON key `"b,c,y,z"`.
    pub fn key(&self) -> String {
        format!("{},{},{},{}", self.b, self.c, self.y, self.z)
    }

    pub fn parse_key(key: &str) -> Result<Self> {
        let parts: Vec<usize> = key
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("bad block key {key:?}")))?;
        match parts.as_slice() {
            &[b, c, y, z] => Ok(Cell { b, c, y, z }),
            _ => Err(Error::InvalidInput(format!("block key {key:?} must be \"b,c,y,z\""))),
        }
    }

    /// The Bob/Charlie-swapped cell `(c, b, z, y)`.
    pub fn swapped(&self) -> Self {
        Cell { b: self.c, c: self.b, y: self.z, z: self.y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}{}|{}{})", self.b, self.c, self.y, self.z)
    }
}

impl Scenario {
    pub fn new(dim_a: usize, out_b: usize, out_c: usize, set_b: usize, set_c: usize) -> Result<Self> {
        let s = Scenario { dim_a, out_b, out_c, set_b, set_c };
        s.check()?;
        Ok(s)
    }

    /// Qubit trusted party, two binary settings for each untrusted party.
    pub fn qubit_2222() -> Self {
        Scenario { dim_a: 2, out_b: 2, out_c: 2, set_b: 2, set_c: 2 }
    }

    pub fn check(&self) -> Result<()> {
        if self.dim_a == 0 || self.out_b == 0 || self.out_c == 0 || self.set_b == 0 || self.set_c == 0 {
            return Err(Error::InvalidInput(format!("all scenario dimensions must be >= 1: {self:?}")));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.out_b * self.out_c * self.set_b * self.set_c
    }

    /// Row-major over `(y, z, b, c)`.
    pub fn cell_index(&self, cell: Cell) -> usize {
        ((cell.y * self.set_c + cell.z) * self.out_b + cell.b) * self.out_c + cell.c
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.b < self.out_b && cell.c < self.out_c && cell.y < self.set_b && cell.z < self.set_c
    }

    /// All cells in storage order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let s = *self;
        (0..s.set_b).flat_map(move |y| {
            (0..s.set_c).flat_map(move |z| {
                (0..s.out_b).flat_map(move |b| (0..s.out_c).map(move |c| Cell { b, c, y, z }))
            })
        })
    }

    pub fn with_dim_a(&self, dim_a: usize) -> Self {
        Scenario { dim_a, ..*self }
    }

    /// Bob and Charlie exchanged.
    pub fn swapped(&self) -> Self {
        Scenario { dim_a: self.dim_a, out_b: self.out_c, out_c: self.out_b, set_b: self.set_c, set_c: self.set_b }
    }

    /// Number of `(b|y)` words: all but the last outcome of each setting.
    pub fn bob_words(&self) -> usize {
        (self.out_b - 1) * self.set_b
    }

    pub fn charlie_words(&self) -> usize {
        (self.out_c - 1) * self.set_c
    }

    pub fn num_words(&self) -> usize {
        1 + self.bob_words() + self.charlie_words() + self.bob_words() * self.charlie_words()
    }
}

/// Row/column labels of the moment matrix, which double as coordinates of the
/// minimal (no-signaling) representation of an assemblage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Word {
    Empty,
    B { b: usize, y: usize },
    C { c: usize, z: usize },
    BC { b: usize, c: usize, y: usize, z: usize },
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Word::Empty => write!(f, "∅"),
            Word::B { b, y } => write!(f, "({b}|{y})_B"),
            Word::C { c, z } => write!(f, "({c}|{z})_C"),
            Word::BC { b, c, y, z } => write!(f, "({b}{c}|{y}{z})"),
        }
    }
}

/// Deterministic word order: `∅`, Bob words (y-major, b-minor), Charlie words
/// (z-major, c-minor), joint words (y, z, b, c nested). Only the first
/// `k - 1` outcomes of each setting appear.
pub fn word_set(s: &Scenario) -> Vec<Word> {
    let mut words = Vec::with_capacity(s.num_words());
    words.push(Word::Empty);
    for y in 0..s.set_b {
        for b in 0..s.out_b - 1 {
            words.push(Word::B { b, y });
        }
    }
    for z in 0..s.set_c {
        for c in 0..s.out_c - 1 {
            words.push(Word::C { c, z });
        }
    }
    for y in 0..s.set_b {
        for z in 0..s.set_c {
            for b in 0..s.out_b - 1 {
                for c in 0..s.out_c - 1 {
                    words.push(Word::BC { b, c, y, z });
                }
            }
        }
    }
    words
}

/// Coefficients expressing the block of `cell` in terms of the word
/// coordinates (`ρ_A`, Bob marginals, Charlie marginals, joint blocks) using
/// no-signaling and completeness. Returned as `(word index, ±1)` pairs.
pub fn cell_expansion(s: &Scenario, cell: Cell) -> Vec<(usize, f64)> {
    let words = word_set(s);
    let idx = |w: Word| words.iter().position(|&x| x == w).expect("word in set");
    let last_b = cell.b == s.out_b - 1;
    let last_c = cell.c == s.out_c - 1;
    let mut out = Vec::new();
    match (last_b, last_c) {
        (false, false) => out.push((idx(Word::BC { b: cell.b, c: cell.c, y: cell.y, z: cell.z }), 1.0)),
        (false, true) => {
            out.push((idx(Word::B { b: cell.b, y: cell.y }), 1.0));
            for c in 0..s.out_c - 1 {
                out.push((idx(Word::BC { b: cell.b, c, y: cell.y, z: cell.z }), -1.0));
            }
        }
        (true, false) => {
            out.push((idx(Word::C { c: cell.c, z: cell.z }), 1.0));
            for b in 0..s.out_b - 1 {
                out.push((idx(Word::BC { b, c: cell.c, y: cell.y, z: cell.z }), -1.0));
            }
        }
        (true, true) => {
            out.push((idx(Word::Empty), 1.0));
            for b in 0..s.out_b - 1 {
                out.push((idx(Word::B { b, y: cell.y }), -1.0));
            }
            for c in 0..s.out_c - 1 {
                out.push((idx(Word::C { c, z: cell.z }), -1.0));
            }
            for b in 0..s.out_b - 1 {
                for c in 0..s.out_c - 1 {
                    out.push((idx(Word::BC { b, c, y: cell.y, z: cell.z }), 1.0));
                }
            }
        }
    }
    out
}
