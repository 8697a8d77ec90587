//! Search for extremal dyadic systems: lower bounds for the best constant
//! `A_{p,n}` over Haar-type systems, and the table of Rademacher norms.

mod optim;
mod scan;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::from_haar_coeffs;
use crate::norms::{rademacher_pnorm, u_ratio};
use crate::rational::{from_f64_exact, Rational};
use crate::system::MdSystem;

pub use optim::{estimate_a, Method, SearchResult, TraceEntry};
pub use scan::{pscan, PScanRow, PScanTable};

/// Feasibility slack on the path sums of squares.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;
/// Largest depth accepted by the search.
pub const MAX_SEARCH_DEPTH: usize = 12;

/// Dyadic system with one nonnegative modulus per node of the binary tree
/// of depth `n`; `d_k = +c` on the left child and `-c` on the right child of
/// each level `k - 1` cell.
///
/// Nodes are stored in heap order: the root first, then the two nodes of
/// depth 1, and so on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HaarCandidate {
    pub n: usize,
    pub coeffs: Vec<f64>,
}

impl HaarCandidate {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_SEARCH_DEPTH {
            return Err(Error::SizeLimit(format!("depth {n}, need 1..={MAX_SEARCH_DEPTH}")));
        }
        if coeffs.len() != (1 << n) - 1 {
            return Err(Error::BadCoefficientCount(coeffs.len()));
        }
        Ok(Self { n, coeffs })
    }

    /// Every node equal to `1 / sqrt n`.
    pub fn equal(n: usize) -> Result<Self> {
        Self::new(n, vec![1.0 / (n as f64).sqrt(); (1 << n) - 1])
    }

    /// Sum of squares along every root-to-leaf path, leaves in order.
    pub fn path_sums(&self) -> Vec<f64> {
        Layout::new(self.n).leaves(&self.coeffs).into_iter().map(|(_, sq)| sq).collect()
    }

    pub fn is_feasible(&self) -> bool {
        self.coeffs.iter().all(|c| *c >= 0.0 && c.is_finite())
            && self.path_sums().iter().all(|s| *s <= 1.0 + FEASIBILITY_TOLERANCE)
    }

    /// `U` of the candidate computed in floating point.
    pub fn value(&self, p: f64) -> f64 {
        Layout::new(self.n).value(&self.coeffs, p)
    }
}

/// Exact dyadic system of a feasible candidate on the uniform `2^n` grid.
pub fn candidate_to_md(c: &HaarCandidate) -> Result<MdSystem> {
    if !c.is_feasible() {
        let worst = c.path_sums().into_iter().fold(0.0, f64::max);
        return Err(Error::Infeasible(worst));
    }
    let mut coeffs: Vec<Rational> = vec![Rational::from_integer(0.into())];
    coeffs.extend(c.coeffs.iter().map(|&x| from_f64_exact(x).expect("finite")));
    from_haar_coeffs(&coeffs)
}

/// Leaf-to-node incidence of the full binary tree of depth `n`.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    n: usize,
    /// Per leaf and level: node index and whether the leaf is on the left.
    paths: Vec<Vec<(usize, bool)>>,
}

impl Layout {
    pub(crate) fn new(n: usize) -> Self {
        let paths = (0..1usize << n)
            .map(|leaf| {
                (1..=n)
                    .map(|level| {
                        let q = leaf >> (n - level);
                        ((1 << (level - 1)) - 1 + (q >> 1), q & 1 == 0)
                    })
                    .collect()
            })
            .collect();
        Self { n, paths }
    }

    /// `(sum of signed moduli, sum of squares)` per leaf.
    pub(crate) fn leaves(&self, coeffs: &[f64]) -> Vec<(f64, f64)> {
        self.paths
            .iter()
            .map(|path| {
                path.iter().fold((0.0, 0.0), |(s, q), &(node, left)| {
                    let c = coeffs[node];
                    (if left { s + c } else { s - c }, q + c * c)
                })
            })
            .collect()
    }

    /// `||sum d_k||_p / max sqrt(path sum)`, zero for the zero vector.
    /// Signs of the entries are ignored.
    pub(crate) fn value(&self, coeffs: &[f64], p: f64) -> f64 {
        let abs: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
        let leaves = self.leaves(&abs);
        let sup = leaves.iter().map(|l| l.1).fold(0.0, f64::max);
        if sup <= 0.0 || !sup.is_finite() {
            return 0.0;
        }
        let mean = leaves.iter().map(|l| l.0.abs().powf(p)).sum::<f64>() / (1u64 << self.n) as f64;
        mean.powf(1.0 / p) / sup.sqrt()
    }

    /// Number of stick-breaking parameters: nodes above the last level.
    pub(crate) fn params(&self) -> usize {
        (1 << (self.n - 1)) - 1
    }

    /// Moduli whose path sums of squares all equal 1. A node above the last
    /// level takes the share `sin^2(x)` of what its path has left; nodes of
    /// the last level take the rest.
    pub(crate) fn stick(&self, x: &[f64]) -> Vec<f64> {
        let nodes = (1 << self.n) - 1;
        let mut remaining = vec![1.0f64; nodes];
        let mut coeffs = vec![0.0; nodes];
        for h in 0..nodes {
            let share = if h < x.len() { x[h].sin().powi(2) } else { 1.0 };
            let sq = share * remaining[h];
            coeffs[h] = sq.sqrt();
            for child in [2 * h + 1, 2 * h + 2] {
                if child < nodes {
                    remaining[child] = (remaining[h] - sq).max(0.0);
                }
            }
        }
        coeffs
    }

    /// Absolute values scaled so that the largest path sum of squares is 1.
    pub(crate) fn project(&self, coeffs: &[f64]) -> Vec<f64> {
        let abs: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
        let sup = self.leaves(&abs).iter().map(|l| l.1).fold(0.0, f64::max);
        if sup <= 0.0 || !sup.is_finite() {
            return vec![0.0; coeffs.len()];
        }
        let scale = 1.0 / sup.sqrt();
        abs.into_iter().map(|c| c * scale).collect()
    }
}

/// `U` of the witness; compared with `rademacher_pnorm(n, p)` for `p >= 3`.
pub(crate) fn exact_value(witness: &MdSystem, p: f64) -> Result<f64> {
    Ok(u_ratio(witness, p)?.ratio)
}

pub(crate) fn ceiling(n: usize, p: f64) -> Option<f64> {
    (p >= 3.0).then(|| rademacher_pnorm(n, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::u_ratio;
    use crate::square::square_cww;

    #[test]
    fn equal_candidate_is_rademacher() {
        for n in 1..=5 {
            let c = HaarCandidate::equal(n).unwrap();
            assert!(c.is_feasible());
            let d = candidate_to_md(&c).unwrap();
            assert!(d.validate().valid && d.is_dyadic());
            for p in [2.5, 3.0, 4.0] {
                let u = u_ratio(&d, p).unwrap().ratio;
                assert!((u - rademacher_pnorm(n, p)).abs() < 1e-12, "n={n} p={p}");
                assert!((c.value(p) - u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_level_candidate() {
        let c = HaarCandidate::new(3, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let d = candidate_to_md(&c).unwrap();
        assert_eq!(u_ratio(&d, 4.0).unwrap().ratio, 1.0);
    }

    #[test]
    fn depth_two_path_sums() {
        let (a, b, c) = (0.5, 0.25, 0.75);
        let cand = HaarCandidate::new(2, vec![a, b, c]).unwrap();
        let sums = cand.path_sums();
        assert_eq!(sums, vec![a * a + b * b, a * a + b * b, a * a + c * c, a * a + c * c]);
        let d = candidate_to_md(&cand).unwrap();
        let sq = square_cww(&d);
        for (leaf, s) in sums.iter().enumerate() {
            assert_eq!(crate::rational::to_f64(&sq.pointwise.values()[leaf]), *s);
        }
    }

    #[test]
    fn infeasible_candidates() {
        let c = HaarCandidate::new(2, vec![1.0, 0.5, 0.0]).unwrap();
        assert!(matches!(candidate_to_md(&c), Err(Error::Infeasible(_))));
        let neg = HaarCandidate::new(1, vec![-0.5]).unwrap();
        assert!(!neg.is_feasible());
        assert!(HaarCandidate::new(2, vec![1.0]).is_err());
    }

    #[test]
    fn stick_breaking_fills_every_path() {
        let layout = Layout::new(3);
        assert_eq!(layout.params(), 3);
        let c = layout.stick(&[0.3, 1.2, -2.0]);
        let cand = HaarCandidate::new(3, c).unwrap();
        for s in cand.path_sums() {
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(Layout::new(1).stick(&[]), vec![1.0]);
    }

    #[test]
    fn projection_is_feasible_and_keeps_value() {
        let layout = Layout::new(3);
        let raw = [0.3, -2.0, 0.7, 1.1, -0.2, 0.0, 5.0];
        let proj = layout.project(&raw);
        let c = HaarCandidate::new(3, proj.clone()).unwrap();
        assert!(c.is_feasible());
        let max = c.path_sums().into_iter().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-15);
        assert!((layout.value(&raw, 3.0) - layout.value(&proj, 3.0)).abs() < 1e-14);
    }
}
