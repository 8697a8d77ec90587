//! Interval grids on `[0, 1)`, cell labelings and exact step functions.
//!
//! Every object in the crate is piecewise constant on the atoms of an
//! [`AtomGrid`]. Atoms are the half-open intervals between consecutive
//! breakpoints; cells are arbitrary unions of atoms.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{int, to_f64, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomGrid {
    breakpoints: Vec<Rational>,
}

impl AtomGrid {
    pub fn new(breakpoints: Vec<Rational>) -> Result<Self> {
        if breakpoints.len() < 2
            || !breakpoints[0].is_zero()
            || !breakpoints[breakpoints.len() - 1].is_one()
        {
            return Err(Error::BadEndpoints);
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotoneBreakpoints(i + 1));
        }
        Ok(Self { breakpoints })
    }

    pub fn unit() -> Self {
        Self { breakpoints: vec![Rational::zero(), Rational::one()] }
    }

    /// `atoms` equal atoms.
    pub fn uniform(atoms: usize) -> Self {
        assert!(atoms > 0);
        let den = int(atoms as i64);
        let breakpoints = (0..=atoms).map(|i| int(i as i64) / &den).collect();
        Self { breakpoints }
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left(&self, atom: usize) -> &Rational {
        &self.breakpoints[atom]
    }

    pub fn right(&self, atom: usize) -> &Rational {
        &self.breakpoints[atom + 1]
    }

    pub fn measure(&self, atom: usize) -> Rational {
        &self.breakpoints[atom + 1] - &self.breakpoints[atom]
    }

    pub fn measures(&self) -> Vec<Rational> {
        self.breakpoints.windows(2).map(|w| &w[1] - &w[0]).collect()
    }

    /// Index of the atom containing `x`, if `x` lies in `[0, 1)`.
    pub fn locate(&self, x: &Rational) -> Option<usize> {
        if x.is_negative() || x >= &self.breakpoints[self.len()] {
            return None;
        }
        Some(self.breakpoints.partition_point(|b| b <= x) - 1)
    }

    /// Common refinement of two grids.
    pub fn refine(&self, other: &AtomGrid) -> Refinement {
        let mut points: Vec<Rational> =
            self.breakpoints.iter().chain(other.breakpoints.iter()).cloned().collect();
        points.sort();
        points.dedup();
        let grid = AtomGrid { breakpoints: points };
        let project = |coarse: &AtomGrid| -> Vec<usize> {
            let mut map = Vec::with_capacity(grid.len());
            let mut j = 0;
            for i in 0..grid.len() {
                while coarse.right(j) <= grid.left(i) {
                    j += 1;
                }
                map.push(j);
            }
            map
        };
        let from_first = project(self);
        let from_second = project(other);
        Refinement { grid, from_first, from_second }
    }

    /// Splits `[a, b)` at `c = (1 - ratio) a + ratio b`.
    ///
    /// A ratio of 0 or 1 leaves the grid unchanged; no empty atom is created.
    pub fn split_atom(&self, atom: usize, ratio: &Rational) -> Result<AtomGrid> {
        if atom >= self.len() {
            return Err(Error::AtomIndexOutOfRange { index: atom, atoms: self.len() });
        }
        if ratio.is_negative() || ratio > &Rational::one() {
            return Err(Error::BadRatio(ratio.to_string()));
        }
        if ratio.is_zero() || ratio.is_one() {
            return Ok(self.clone());
        }
        let c = split_point(self.left(atom), self.right(atom), ratio);
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.insert(atom + 1, c);
        Ok(AtomGrid { breakpoints })
    }
}

/// `(1 - ratio) a + ratio b`.
pub fn split_point(a: &Rational, b: &Rational, ratio: &Rational) -> Rational {
    (Rational::one() - ratio) * a + ratio * b
}

pub fn make_grid(breakpoints: Vec<Rational>) -> Result<AtomGrid> {
    AtomGrid::new(breakpoints)
}

pub fn refine(a: &AtomGrid, b: &AtomGrid) -> Refinement {
    a.refine(b)
}

pub fn split_atom(grid: &AtomGrid, atom: usize, ratio: &Rational) -> Result<AtomGrid> {
    grid.split_atom(atom, ratio)
}

/// Result of [`AtomGrid::refine`]: the common grid and, for each of its
/// atoms, the containing atom in each input grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refinement {
    pub grid: AtomGrid,
    pub from_first: Vec<usize>,
    pub from_second: Vec<usize>,
}

/// Assignment of a cell id to every atom of a grid.
///
/// Ids are stored canonically: `0..cell_count` in order of first appearance,
/// so two labelings describing the same partition compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellLabeling {
    labels: Vec<usize>,
    cell_count: usize,
}

impl CellLabeling {
    pub fn new<I: IntoIterator<Item = usize>>(labels: I) -> Self {
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let labels: Vec<usize> = labels
            .into_iter()
            .map(|l| {
                let next = seen.len();
                *seen.entry(l).or_insert(next)
            })
            .collect();
        Self { labels, cell_count: seen.len() }
    }

    /// Everything in one cell.
    pub fn whole(atoms: usize) -> Self {
        Self { labels: vec![0; atoms], cell_count: usize::from(atoms > 0) }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, atom: usize) -> usize {
        self.labels[atom]
    }

    pub fn cell_count(&self) -> usize {
        self.cell_count
    }

    pub fn atom_count(&self) -> usize {
        self.labels.len()
    }

    /// Atoms of every cell, each list in increasing atom order.
    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut cells = vec![Vec::new(); self.cell_count];
        for (atom, &l) in self.labels.iter().enumerate() {
            cells[l].push(atom);
        }
        cells
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFunction {
    grid: AtomGrid,
    values: Vec<Rational>,
}

impl StepFunction {
    pub fn new(grid: AtomGrid, values: Vec<Rational>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid with {} atoms",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: AtomGrid, c: Rational) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &AtomGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, atom: usize) -> &Rational {
        &self.values[atom]
    }

    /// Value at a point of `[0, 1)`.
    pub fn eval(&self, x: &Rational) -> Option<&Rational> {
        self.grid.locate(x).map(|i| &self.values[i])
    }

    pub fn sup_abs(&self) -> Rational {
        self.values.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero)
    }

    /// Exact integral over `[0, 1)`.
    pub fn integrate(&self) -> Rational {
        integrate_values(&self.grid, &self.values)
    }

    /// `sum |f|^p * measure`, the p-th power of the L^p norm.
    pub fn integrate_abs_pow(&self, p: f64) -> f64 {
        abs_pow_sum(&self.grid, &self.values, p)
    }

    /// `alpha * self + beta * other` on the common refinement.
    pub fn combine(&self, alpha: &Rational, other: &StepFunction, beta: &Rational) -> StepFunction {
        let r = self.grid.refine(&other.grid);
        let values = r
            .from_first
            .iter()
            .zip(&r.from_second)
            .map(|(&i, &j)| alpha * &self.values[i] + beta * &other.values[j])
            .collect();
        StepFunction { grid: r.grid, values }
    }
}

pub fn integrate(f: &StepFunction) -> Rational {
    f.integrate()
}

pub fn integrate_abs_pow(f: &StepFunction, p: f64) -> f64 {
    f.integrate_abs_pow(p)
}

pub(crate) fn integrate_values(grid: &AtomGrid, values: &[Rational]) -> Rational {
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .fold(Rational::zero(), |acc, (i, v)| acc + v * grid.measure(i))
}

pub(crate) fn abs_pow_sum(grid: &AtomGrid, values: &[Rational], p: f64) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| to_f64(&v.abs()).powf(p) * to_f64(&grid.measure(i)))
        .sum()
}
