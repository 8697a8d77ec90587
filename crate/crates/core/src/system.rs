//! Finite martingale-difference systems on `[0, 1)`.
//!
//! An [`MdSystem`] holds the differences `d_1..d_n` and the partitions
//! `D_1..D_n` of a discrete filtration, all piecewise constant on one
//! [`AtomGrid`]. Level 0 is implicit: a single cell covering everything.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{integrate_values, AtomGrid, CellLabeling, StepFunction};
use crate::rational::{format_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdSystem {
    grid: AtomGrid,
    /// Index 0 is the root partition.
    partitions: Vec<CellLabeling>,
    /// Index `k - 1` holds `d_k`.
    differences: Vec<Vec<Rational>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Refinement,
    Measurability,
    MeanZero,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub level: usize,
    pub cell: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    /// All differences vanish. Such systems are valid but have no ratio.
    pub trivial: bool,
    pub violations: Vec<Violation>,
}

impl MdSystem {
    /// Builds a system after checking shapes only; use [`MdSystem::validate`]
    /// for the martingale-difference invariants.
    pub fn new(
        grid: AtomGrid,
        partitions: Vec<CellLabeling>,
        differences: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let n = partitions.len();
        if n == 0 {
            return Err(Error::Shape("a system needs at least one level".into()));
        }
        if differences.len() != n {
            return Err(Error::Shape(format!(
                "{n} partitions but {} difference levels",
                differences.len()
            )));
        }
        let atoms = grid.len();
        for (i, p) in partitions.iter().enumerate() {
            if p.atom_count() != atoms {
                return Err(Error::Shape(format!(
                    "partition of level {} labels {} atoms, grid has {atoms}",
                    i + 1,
                    p.atom_count()
                )));
            }
        }
        for (i, d) in differences.iter().enumerate() {
            if d.len() != atoms {
                return Err(Error::Shape(format!(
                    "difference of level {} has {} values, grid has {atoms}",
                    i + 1,
                    d.len()
                )));
            }
        }
        let mut all = Vec::with_capacity(n + 1);
        all.push(CellLabeling::whole(atoms));
        all.extend(partitions);
        Ok(Self { grid, partitions: all, differences })
    }

    /// Builds and validates.
    pub fn new_valid(
        grid: AtomGrid,
        partitions: Vec<CellLabeling>,
        differences: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let d = Self::new(grid, partitions, differences)?;
        let report = d.validate();
        if !report.valid {
            let first = &report.violations[0];
            return Err(Error::Invalid(format!(
                "{:?} at level {} cell {}: {}",
                first.kind, first.level, first.cell, first.detail
            )));
        }
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.differences.len()
    }

    pub fn grid(&self) -> &AtomGrid {
        &self.grid
    }

    pub fn atom_count(&self) -> usize {
        self.grid.len()
    }

    /// Partition of level `k`, `0 <= k <= n`.
    pub fn partition(&self, k: usize) -> &CellLabeling {
        &self.partitions[k]
    }

    /// Values of `d_k` per atom, `1 <= k <= n`.
    pub fn difference(&self, k: usize) -> &[Rational] {
        &self.differences[k - 1]
    }

    pub fn difference_fn(&self, k: usize) -> StepFunction {
        StepFunction::new(self.grid.clone(), self.differences[k - 1].clone())
            .expect("shape checked at construction")
    }

    /// `sum_k d_k` per atom.
    pub fn sum_values(&self) -> Vec<Rational> {
        (0..self.atom_count())
            .map(|a| self.differences.iter().fold(Rational::zero(), |acc, d| acc + &d[a]))
            .collect()
    }

    pub fn sum_fn(&self) -> StepFunction {
        StepFunction::new(self.grid.clone(), self.sum_values()).expect("shape")
    }

    pub fn is_trivial(&self) -> bool {
        self.differences.iter().all(|d| d.iter().all(Zero::is_zero))
    }

    /// Atoms of every cell of level `k`.
    pub fn cells(&self, k: usize) -> Vec<Vec<usize>> {
        self.partitions[k].cells()
    }

    pub fn cell_measure(&self, atoms: &[usize]) -> Rational {
        atoms.iter().fold(Rational::zero(), |acc, &a| acc + self.grid.measure(a))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.n();
        for k in 1..n {
            let coarse = &self.partitions[k];
            for (cell, atoms) in self.partitions[k + 1].cells().iter().enumerate() {
                let parent = coarse.label(atoms[0]);
                if let Some(&a) = atoms.iter().find(|&&a| coarse.label(a) != parent) {
                    violations.push(Violation {
                        kind: ViolationKind::Refinement,
                        level: k + 1,
                        cell,
                        detail: format!(
                            "meets cells {parent} and {} of level {k}",
                            coarse.label(a)
                        ),
                    });
                }
            }
        }
        for k in 1..=n {
            let d = self.difference(k);
            for (cell, atoms) in self.partitions[k].cells().iter().enumerate() {
                let v = &d[atoms[0]];
                if let Some(&a) = atoms.iter().find(|&&a| &d[a] != v) {
                    violations.push(Violation {
                        kind: ViolationKind::Measurability,
                        level: k,
                        cell,
                        detail: format!(
                            "d_{k} takes {} and {}",
                            format_rational(v),
                            format_rational(&d[a])
                        ),
                    });
                }
            }
            for (cell, atoms) in self.partitions[k - 1].cells().iter().enumerate() {
                let integral = atoms
                    .iter()
                    .fold(Rational::zero(), |acc, &a| acc + &d[a] * self.grid.measure(a));
                if !integral.is_zero() {
                    violations.push(Violation {
                        kind: ViolationKind::MeanZero,
                        level: k,
                        cell,
                        detail: format!(
                            "integral of d_{k} over cell {cell} of level {} is {}",
                            k - 1,
                            format_rational(&integral)
                        ),
                    });
                }
            }
        }
        ValidationReport { valid: violations.is_empty(), trivial: self.is_trivial(), violations }
    }

    /// Cell of level `k - 1` containing `cell` of level `k`.
    pub fn parent_cell(&self, k: usize, cell: usize) -> Result<usize> {
        if k == 0 || k > self.n() {
            return Err(Error::LevelOutOfRange { level: k, n: self.n() });
        }
        let labels = self.partitions[k].labels();
        let atom = labels
            .iter()
            .position(|&l| l == cell)
            .ok_or(Error::UnknownCell { level: k, cell })?;
        Ok(self.partitions[k - 1].label(atom))
    }

    /// Cells of level `k + 1` inside `cell` of level `k`, in order of first atom.
    pub fn children(&self, k: usize, cell: usize) -> Result<Vec<usize>> {
        if k >= self.n() {
            return Err(Error::LevelOutOfRange { level: k + 1, n: self.n() });
        }
        if cell >= self.partitions[k].cell_count() {
            return Err(Error::UnknownCell { level: k, cell });
        }
        let mut out: Vec<usize> = Vec::new();
        for (a, &l) in self.partitions[k].labels().iter().enumerate() {
            if l == cell {
                let c = self.partitions[k + 1].label(a);
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        Ok(out)
    }

    /// For every cell of level `k`, its children at level `k + 1` with their
    /// measures, in order of first atom.
    pub(crate) fn child_map(&self, k: usize) -> Vec<Vec<(usize, Rational)>> {
        let parent = &self.partitions[k];
        let child = &self.partitions[k + 1];
        let mut out: Vec<BTreeMap<usize, (usize, Rational)>> =
            vec![BTreeMap::new(); parent.cell_count()];
        for a in 0..self.atom_count() {
            let entry = out[parent.label(a)]
                .entry(child.label(a))
                .or_insert_with(|| (a, Rational::zero()));
            entry.1 += self.grid.measure(a);
        }
        out.into_iter()
            .map(|m| {
                let mut v: Vec<(usize, (usize, Rational))> = m.into_iter().collect();
                v.sort_by_key(|(_, (first, _))| *first);
                v.into_iter().map(|(c, (_, mu))| (c, mu)).collect()
            })
            .collect()
    }

    /// Every cell of levels `0..k` has exactly two children of equal measure.
    ///
    /// For `k = 1` this forces `d_1` to take the two values `+c` and `-c`.
    pub fn is_k_dyadic(&self, k: usize) -> bool {
        (0..k.min(self.n())).all(|j| {
            self.child_map(j)
                .iter()
                .all(|ch| ch.len() == 2 && ch[0].1 == ch[1].1)
        })
    }

    pub fn is_dyadic(&self) -> bool {
        self.is_k_dyadic(self.n())
    }

    /// `(k-1)`-dyadic and `|d_k|` constant on every cell of level `k - 1`.
    pub fn is_ip(&self, k: usize) -> bool {
        if k == 0 || k > self.n() || !self.is_k_dyadic(k - 1) {
            return false;
        }
        let d = self.difference(k);
        self.cells(k - 1).iter().all(|atoms| {
            let m = d[atoms[0]].abs();
            atoms.iter().all(|&a| d[a].abs() == m)
        })
    }

    /// On every cell of level `m - 1`, all of `|d_m|, ..., |d_n|` equal one
    /// constant.
    pub fn is_m_rademacher(&self, m: usize) -> Result<bool> {
        if !self.is_dyadic() {
            return Err(Error::NotDyadic);
        }
        if m == 0 || m > self.n() {
            return Err(Error::LevelOutOfRange { level: m, n: self.n() });
        }
        Ok(self.cells(m - 1).iter().all(|atoms| {
            let c = self.difference(m)[atoms[0]].abs();
            (m..=self.n())
                .all(|j| atoms.iter().all(|&a| self.difference(j)[a].abs() == c))
        }))
    }

    /// Merges neighbouring atoms that agree on every label and value.
    pub fn coarsen(&self) -> MdSystem {
        let atoms = self.atom_count();
        let mut keep = vec![0usize];
        for a in 1..atoms {
            let same = self.partitions.iter().all(|p| p.label(a) == p.label(a - 1))
                && self.differences.iter().all(|d| d[a] == d[a - 1]);
            if !same {
                keep.push(a);
            }
        }
        if keep.len() == atoms {
            return self.clone();
        }
        let mut breakpoints: Vec<Rational> =
            keep.iter().map(|&a| self.grid.left(a).clone()).collect();
        breakpoints.push(self.grid.right(atoms - 1).clone());
        let grid = AtomGrid::new(breakpoints).expect("subset of a valid grid");
        let partitions = self.partitions[1..]
            .iter()
            .map(|p| CellLabeling::new(keep.iter().map(|&a| p.label(a))))
            .collect();
        let differences = self
            .differences
            .iter()
            .map(|d| keep.iter().map(|&a| d[a].clone()).collect())
            .collect();
        MdSystem::new(grid, partitions, differences).expect("shape preserved")
    }
}

/// Exact integral of per-atom values over the whole grid.
pub fn integral(grid: &AtomGrid, values: &[Rational]) -> Rational {
    integrate_values(grid, values)
}
