//! Constructors for standard and random martingale-difference systems.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{AtomGrid, CellLabeling};
use crate::rational::{rat, Rational};
use crate::system::MdSystem;

/// Largest number of levels for the uniform-grid constructors (`2^n` atoms).
pub const MAX_UNIFORM_LEVELS: usize = 20;

/// Largest atom count produced by the product-space constructors.
pub const MAX_ATOMS: usize = 1 << 20;

/// Dyadic system whose level `k` is the whole Haar scale
/// `sum_{j = 2^(k-1) + 1}^{2^k} a_j h_j`.
///
/// `coeffs[0]` is the coefficient of the constant `h_1` and is ignored.
pub fn from_haar_coeffs(coeffs: &[Rational]) -> Result<MdSystem> {
    let len = coeffs.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::BadCoefficientCount(len));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_UNIFORM_LEVELS {
        return Err(Error::SizeLimit(format!("{n} Haar scales")));
    }
    let atoms = 1usize << n;
    let mut partitions = Vec::with_capacity(n);
    let mut differences = Vec::with_capacity(n);
    for level in 1..=n {
        let shift = n - level;
        partitions.push(CellLabeling::new((0..atoms).map(|i| i >> shift)));
        let base = 1usize << (level - 1);
        differences.push(
            (0..atoms)
                .map(|i| {
                    let q = i >> shift;
                    let a = &coeffs[base + (q >> 1)];
                    if q & 1 == 0 {
                        a.clone()
                    } else {
                        -a
                    }
                })
                .collect(),
        );
    }
    MdSystem::new(AtomGrid::uniform(atoms), partitions, differences)
}

/// `d_k = a_k r_k` with `r_k` the k-th Rademacher function.
pub fn from_rademacher_coeffs(coeffs: &[Rational]) -> Result<MdSystem> {
    let n = coeffs.len();
    if n == 0 {
        return Err(Error::Shape("at least one coefficient is required".into()));
    }
    if n > MAX_UNIFORM_LEVELS {
        return Err(Error::SizeLimit(format!("{n} Rademacher levels")));
    }
    let atoms = 1usize << n;
    let mut partitions = Vec::with_capacity(n);
    let mut differences = Vec::with_capacity(n);
    for (k, a) in coeffs.iter().enumerate() {
        let shift = n - (k + 1);
        partitions.push(CellLabeling::new((0..atoms).map(|i| i >> shift)));
        differences.push(
            (0..atoms)
                .map(|i| if (i >> shift) & 1 == 0 { a.clone() } else { -a })
                .collect(),
        );
    }
    MdSystem::new(AtomGrid::uniform(atoms), partitions, differences)
}

/// One outcome of a discrete random variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub value: Rational,
    pub probability: Rational,
}

impl Outcome {
    pub fn new(value: Rational, probability: Rational) -> Self {
        Self { value, probability }
    }
}

/// Realizes independent symmetric discrete variables `X_1..X_n` as a
/// martingale-difference system on nested interval partitions of the
/// product space.
pub fn from_independent_symmetric(vars: &[Vec<Outcome>]) -> Result<MdSystem> {
    if vars.is_empty() {
        return Err(Error::Shape("at least one variable is required".into()));
    }
    for (i, outcomes) in vars.iter().enumerate() {
        let total = outcomes.iter().fold(Rational::zero(), |acc, o| acc + &o.probability);
        if outcomes.is_empty()
            || !total.is_one()
            || outcomes.iter().any(|o| !o.probability.is_positive())
        {
            return Err(Error::NotProbability(i + 1));
        }
        let mut law: BTreeMap<Rational, Rational> = BTreeMap::new();
        for o in outcomes {
            *law.entry(o.value.clone()).or_insert_with(Rational::zero) += &o.probability;
        }
        if law.iter().any(|(v, q)| law.get(&-v) != Some(q)) {
            return Err(Error::NotSymmetric(i + 1));
        }
    }
    let atoms = vars.iter().try_fold(1usize, |acc, v| {
        acc.checked_mul(v.len()).filter(|&a| a <= MAX_ATOMS)
    });
    let atoms = atoms.ok_or_else(|| Error::SizeLimit("product space too large".into()))?;

    // Breadth-first product: each level splits every cell proportionally.
    let mut cells: Vec<(Rational, Rational)> = vec![(Rational::zero(), Rational::one())];
    let mut paths: Vec<Vec<usize>> = vec![Vec::new()];
    for outcomes in vars {
        let mut next_cells = Vec::with_capacity(cells.len() * outcomes.len());
        let mut next_paths = Vec::with_capacity(cells.len() * outcomes.len());
        for ((a, b), path) in cells.iter().zip(&paths) {
            let width = b - a;
            let mut left = a.clone();
            for (j, o) in outcomes.iter().enumerate() {
                let right = &left + &width * &o.probability;
                next_cells.push((left.clone(), right.clone()));
                let mut p = path.clone();
                p.push(j);
                next_paths.push(p);
                left = right;
            }
        }
        cells = next_cells;
        paths = next_paths;
    }
    debug_assert_eq!(cells.len(), atoms);
    let mut breakpoints: Vec<Rational> = cells.iter().map(|(a, _)| a.clone()).collect();
    breakpoints.push(Rational::one());
    let grid = AtomGrid::new(breakpoints)?;

    let n = vars.len();
    let mut partitions = Vec::with_capacity(n);
    let mut differences = Vec::with_capacity(n);
    for k in 0..n {
        // atoms are laid out in lexicographic order of outcome paths
        let block: usize = vars[k + 1..].iter().map(Vec::len).product();
        partitions.push(CellLabeling::new((0..atoms).map(|i| i / block)));
        differences.push(paths.iter().map(|p| vars[k][p[k]].value.clone()).collect());
    }
    MdSystem::new(grid, partitions, differences)
}

/// Parameters of [`random_md_with`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomMdConfig {
    pub n: usize,
    /// Children per cell are drawn uniformly from `2..=max_children`.
    pub max_children: usize,
    /// Free values are drawn from `[-value_bound, value_bound]`.
    pub value_bound: i64,
    /// The first `dyadic_levels` levels split every cell into two halves
    /// carrying `+v` and `-v`.
    pub dyadic_levels: usize,
    /// Largest denominator of drawn values.
    pub max_denominator: i64,
}

impl RandomMdConfig {
    pub fn new(n: usize, max_children: usize, value_bound: i64) -> Self {
        Self { n, max_children, value_bound, dyadic_levels: 0, max_denominator: 4 }
    }

    pub fn dyadic_levels(mut self, levels: usize) -> Self {
        self.dyadic_levels = levels;
        self
    }
}

/// Random valid system with interval cells; deterministic in `seed`.
pub fn random_md(n: usize, max_children: usize, value_bound: i64, seed: u64) -> MdSystem {
    random_md_with(&RandomMdConfig::new(n, max_children, value_bound), seed)
}

/// Random dyadic (Haar-type) system with per-cell moduli.
pub fn random_dyadic(n: usize, value_bound: i64, seed: u64) -> MdSystem {
    random_md_with(&RandomMdConfig::new(n, 2, value_bound).dyadic_levels(n), seed)
}

pub fn random_md_with(cfg: &RandomMdConfig, seed: u64) -> MdSystem {
    assert!(cfg.n >= 1, "n must be positive");
    assert!(cfg.max_children >= 2, "max_children must be at least 2");
    assert!(cfg.value_bound >= 1 && cfg.max_denominator >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    struct Node {
        left: Rational,
        right: Rational,
        parent: usize,
        value: Rational,
    }
    let mut levels: Vec<Vec<Node>> = vec![vec![Node {
        left: Rational::zero(),
        right: Rational::one(),
        parent: 0,
        value: Rational::zero(),
    }]];

    for k in 1..=cfg.n {
        let mut next = Vec::new();
        for (pi, parent) in levels[k - 1].iter().enumerate() {
            let width = &parent.right - &parent.left;
            if k <= cfg.dyadic_levels {
                let mid = &parent.left + &width * rat(1, 2);
                let v = random_value(&mut rng, cfg, true).abs();
                let v = if rng.gen_bool(0.5) { v } else { -v };
                next.push(Node { left: parent.left.clone(), right: mid.clone(), parent: pi, value: v.clone() });
                next.push(Node { left: mid, right: parent.right.clone(), parent: pi, value: -v });
                continue;
            }
            let children = rng.gen_range(2..=cfg.max_children);
            let den = 4 * children as i64;
            let mut cuts: Vec<i64> = Vec::with_capacity(children - 1);
            while cuts.len() < children - 1 {
                let c = rng.gen_range(1..den);
                if !cuts.contains(&c) {
                    cuts.push(c);
                }
            }
            cuts.sort_unstable();
            let mut bounds = vec![parent.left.clone()];
            bounds.extend(cuts.iter().map(|&c| &parent.left + &width * rat(c, den)));
            bounds.push(parent.right.clone());

            let mut weighted = Rational::zero();
            let mut values = Vec::with_capacity(children);
            for i in 0..children - 1 {
                let v = random_value(&mut rng, cfg, true);
                weighted += &v * (&bounds[i + 1] - &bounds[i]);
                values.push(v);
            }
            let last_width = &bounds[children] - &bounds[children - 1];
            values.push(-weighted / last_width);
            for (i, value) in values.into_iter().enumerate() {
                next.push(Node {
                    left: bounds[i].clone(),
                    right: bounds[i + 1].clone(),
                    parent: pi,
                    value,
                });
            }
        }
        levels.push(next);
    }

    let leaves = &levels[cfg.n];
    let mut breakpoints: Vec<Rational> = leaves.iter().map(|l| l.left.clone()).collect();
    breakpoints.push(Rational::one());
    let grid = AtomGrid::new(breakpoints).expect("cuts are strictly inside cells");

    // ancestor[k][leaf] = index of the level-k node above the leaf
    let mut ancestor = vec![(0..leaves.len()).collect::<Vec<_>>()];
    for k in (1..=cfg.n).rev() {
        let below = ancestor.last().unwrap();
        let up = below.iter().map(|&i| levels[k][i].parent).collect();
        ancestor.push(up);
    }
    ancestor.reverse(); // ancestor[k] now indexes level k
    let partitions = (1..=cfg.n).map(|k| CellLabeling::new(ancestor[k].iter().copied())).collect();
    let differences = (1..=cfg.n)
        .map(|k| ancestor[k].iter().map(|&i| levels[k][i].value.clone()).collect())
        .collect();
    MdSystem::new(grid, partitions, differences).expect("consistent shapes")
}

fn random_value(rng: &mut ChaCha8Rng, cfg: &RandomMdConfig, nonzero: bool) -> Rational {
    loop {
        let den = rng.gen_range(1..=cfg.max_denominator);
        let num = rng.gen_range(-cfg.value_bound * den..=cfg.value_bound * den);
        if !nonzero || num != 0 {
            return rat(num, den);
        }
    }
}

/// Per-trial seed derived from a base seed (SplitMix64 finalizer).
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn single_haar_function() {
        let d = from_haar_coeffs(&[int(0), int(1)]).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.difference(1), &[int(1), int(-1)]);
        assert!(d.validate().valid);
        assert!(d.is_dyadic());
    }

    #[test]
    fn two_haar_scales() {
        let d = from_haar_coeffs(&[int(0), int(1), rat(1, 2), rat(-1, 2)]).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.difference(1), &[int(1), int(1), int(-1), int(-1)]);
        assert_eq!(d.difference(2), &[rat(1, 2), rat(-1, 2), rat(-1, 2), rat(1, 2)]);
        assert!(d.validate().valid);
        assert_eq!(d.parent_cell(2, 0).unwrap(), 0);
        assert_eq!(d.parent_cell(2, 3).unwrap(), 1);
    }

    #[test]
    fn zero_haar_is_valid_and_trivial() {
        let d = from_haar_coeffs(&vec![int(0); 4]).unwrap();
        let r = d.validate();
        assert!(r.valid && r.trivial);
    }

    #[test]
    fn bad_haar_count() {
        assert_eq!(from_haar_coeffs(&vec![int(0); 3]), Err(Error::BadCoefficientCount(3)));
        assert_eq!(from_haar_coeffs(&[int(0)]), Err(Error::BadCoefficientCount(1)));
    }

    #[test]
    fn rademacher_sum_pattern() {
        let d = from_rademacher_coeffs(&[int(1), int(1)]).unwrap();
        assert_eq!(d.sum_values(), vec![int(2), int(0), int(0), int(-2)]);
        assert!(d.validate().valid);
        assert!(d.is_m_rademacher(1).unwrap());
    }

    #[test]
    fn rademacher_and_haar_agree_for_one_level() {
        for a in [int(3), rat(-2, 7)] {
            let r = from_rademacher_coeffs(std::slice::from_ref(&a)).unwrap();
            let h = from_haar_coeffs(&[int(5), a]).unwrap();
            assert_eq!(r, h);
        }
    }

    #[test]
    fn independent_symmetric_examples() {
        let coin = vec![Outcome::new(int(1), rat(1, 2)), Outcome::new(int(-1), rat(1, 2))];
        let d = from_independent_symmetric(&[coin]).unwrap();
        assert_eq!(d, from_rademacher_coeffs(&[int(1)]).unwrap());

        let x1 = vec![Outcome::new(int(2), rat(1, 2)), Outcome::new(int(-2), rat(1, 2))];
        let x2 = [1, -1, 3, -3].iter().map(|&v| Outcome::new(int(v), rat(1, 4))).collect();
        let d = from_independent_symmetric(&[x1, x2]).unwrap();
        assert_eq!(d.atom_count(), 8);
        assert!(d.validate().valid);

        let asym = vec![Outcome::new(int(1), rat(2, 3)), Outcome::new(int(-2), rat(1, 3))];
        assert_eq!(from_independent_symmetric(&[asym]), Err(Error::NotSymmetric(1)));
        let short = vec![Outcome::new(int(1), rat(1, 3)), Outcome::new(int(-1), rat(1, 3))];
        assert_eq!(from_independent_symmetric(&[short]), Err(Error::NotProbability(1)));
    }

    #[test]
    fn random_md_is_valid_and_deterministic() {
        let d = random_md(3, 4, 10, 42);
        assert!(d.validate().valid);
        assert_eq!(d, random_md(3, 4, 10, 42));
        assert_ne!(d, random_md(3, 4, 10, 43));
    }

    #[test]
    fn random_md_single_level_two_values() {
        for s in 0..20 {
            let d = random_md(1, 2, 1, s);
            let mut vals: Vec<_> = d.difference(1).to_vec();
            vals.sort();
            vals.dedup();
            assert_eq!(vals.len(), 2, "seed {s}");
        }
    }

    #[test]
    fn random_dyadic_levels() {
        for s in 0..10 {
            let d = random_md_with(&RandomMdConfig::new(4, 3, 5).dyadic_levels(2), s);
            assert!(d.validate().valid);
            assert!(d.is_k_dyadic(2));
            let h = random_dyadic(4, 5, s);
            assert!(h.is_dyadic());
            assert!(h.validate().valid);
        }
    }
}
