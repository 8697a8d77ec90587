//! The Chang–Wilson–Wolff square function, the classical square function,
//! the envelope process `D_k` and filtration homogeneity.
//!
//! Square functions are kept squared so that every comparison is exact.

use num_traits::{Signed, Zero};

use crate::measure::StepFunction;
use crate::rational::{to_f64, Rational};
use crate::system::MdSystem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareFunctionResult {
    /// Square of the square function, per atom.
    pub pointwise: StepFunction,
    /// `max` of `pointwise`, i.e. the squared sup norm.
    pub sup_sq: Rational,
}

impl SquareFunctionResult {
    fn from_values(d: &MdSystem, values: Vec<Rational>) -> Self {
        let sup_sq = values.iter().max().cloned().unwrap_or_else(Rational::zero);
        let pointwise = StepFunction::new(d.grid().clone(), values).expect("one value per atom");
        Self { pointwise, sup_sq }
    }

    /// Sup norm of the (unsquared) square function.
    pub fn sup(&self) -> f64 {
        to_f64(&self.sup_sq).sqrt()
    }
}

/// Per atom, the largest `|d_k|` over the level `k - 1` cell containing it.
pub fn envelope_values(d: &MdSystem, k: usize) -> Vec<Rational> {
    let dk = d.difference(k);
    let parent = d.partition(k - 1);
    let mut sup = vec![Rational::zero(); parent.cell_count()];
    for (a, v) in dk.iter().enumerate() {
        let s = &mut sup[parent.label(a)];
        let m = v.abs();
        if m > *s {
            *s = m;
        }
    }
    (0..d.atom_count()).map(|a| sup[parent.label(a)].clone()).collect()
}

pub fn envelope(d: &MdSystem, k: usize) -> StepFunction {
    StepFunction::new(d.grid().clone(), envelope_values(d, k)).expect("one value per atom")
}

/// `sum_k D_k^2` per atom.
pub fn square_cww(d: &MdSystem) -> SquareFunctionResult {
    let mut acc = vec![Rational::zero(); d.atom_count()];
    for k in 1..=d.n() {
        for (s, e) in acc.iter_mut().zip(envelope_values(d, k)) {
            *s += &e * &e;
        }
    }
    SquareFunctionResult::from_values(d, acc)
}

/// `sum_k d_k^2` per atom.
pub fn square_classical(d: &MdSystem) -> SquareFunctionResult {
    let mut acc = vec![Rational::zero(); d.atom_count()];
    for k in 1..=d.n() {
        for (s, v) in acc.iter_mut().zip(d.difference(k)) {
            *s += v * v;
        }
    }
    SquareFunctionResult::from_values(d, acc)
}

/// Smallest child-to-parent measure ratio over all levels, capped at 1/2.
///
/// A parent with a single child contributes ratio 1, so the cap only binds
/// when no cell is ever split.
pub fn homogeneity(d: &MdSystem) -> Rational {
    let half = Rational::new(1.into(), 2.into());
    let mut alpha = half.clone();
    for j in 0..d.n() {
        let parents = d.cells(j);
        for (p, children) in d.child_map(j).iter().enumerate() {
            let parent_measure = d.cell_measure(&parents[p]);
            for (_, mu) in children {
                let ratio = mu / &parent_measure;
                if ratio < alpha {
                    alpha = ratio;
                }
            }
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{from_haar_coeffs, from_rademacher_coeffs, random_md};
    use crate::measure::{AtomGrid, CellLabeling};
    use crate::rational::{int, rat};

    fn thirds() -> MdSystem {
        MdSystem::new(
            AtomGrid::uniform(3),
            vec![CellLabeling::new([0, 1, 2])],
            vec![vec![int(2), int(-1), int(-1)]],
        )
        .unwrap()
    }

    #[test]
    fn envelope_examples() {
        let r = from_rademacher_coeffs(&[int(3), rat(-1, 2)]).unwrap();
        assert!(envelope(&r, 2).values().iter().all(|v| *v == rat(1, 2)));
        let h = from_haar_coeffs(&[int(0), int(1), int(2), rat(-1, 3)]).unwrap();
        let abs: Vec<_> = h.difference(2).iter().map(|v| v.abs()).collect();
        assert_eq!(envelope(&h, 2).values(), &abs[..]);
        assert!(envelope(&thirds(), 1).values().iter().all(|v| *v == int(2)));
    }

    #[test]
    fn cww_examples() {
        let r = from_rademacher_coeffs(&[int(1), int(2), rat(1, 2)]).unwrap();
        let s = square_cww(&r);
        assert!(s.pointwise.values().iter().all(|v| *v == rat(21, 4)));
        assert_eq!(s.sup_sq, rat(21, 4));
        let h = from_haar_coeffs(&[int(0), int(1)]).unwrap();
        assert_eq!(square_cww(&h).sup_sq, int(1));
        let t = square_cww(&thirds());
        assert!(t.pointwise.values().iter().all(|v| *v == int(4)));
    }

    #[test]
    fn classical_examples() {
        let s = square_classical(&thirds());
        assert_eq!(s.pointwise.values(), &[int(4), int(1), int(1)]);
        let h = from_haar_coeffs(&[int(0), int(1), int(2), rat(-1, 3)]).unwrap();
        assert_eq!(square_classical(&h), square_cww(&h));
        let z = from_haar_coeffs(&vec![int(0); 4]).unwrap();
        assert!(square_classical(&z).sup_sq.is_zero());
    }

    #[test]
    fn homogeneity_examples() {
        let h = from_haar_coeffs(&[int(0), int(1), int(1), int(1)]).unwrap();
        assert_eq!(homogeneity(&h), rat(1, 2));
        assert_eq!(homogeneity(&thirds()), rat(1, 3));
        let quarter = MdSystem::new(
            AtomGrid::new(vec![int(0), rat(1, 4), int(1)]).unwrap(),
            vec![CellLabeling::new([0, 1])],
            vec![vec![int(3), int(-1)]],
        )
        .unwrap();
        assert_eq!(homogeneity(&quarter), rat(1, 4));
    }

    #[test]
    fn classical_never_exceeds_cww() {
        for seed in 0..30 {
            let d = random_md(3, 4, 6, seed);
            let s = square_classical(&d);
            let c = square_cww(&d);
            for (a, b) in s.pointwise.values().iter().zip(c.pointwise.values()) {
                assert!(a <= b);
            }
        }
    }
}
