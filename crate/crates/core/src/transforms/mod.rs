//! Transforms that reshape an MD-system without decreasing
//! `U(d) = ||sum d_k||_p / ||S(d)||_inf`, each returning a certificate.
//!
//! * [`r1_transform`]: `(k-1)`-dyadic to IP at level `k`.
//! * [`r2_transform`]: IP at level `k` to `k`-dyadic.
//! * [`procedure1`], [`procedure2`]: `m`-Rademacher to `(m-1)`-Rademacher.
//! * [`dyadize`], [`rademacherize`]: the chained pipelines.

mod pipeline;
mod procedures;
mod r1;
mod r2;

use std::cmp::Ordering;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{AtomGrid, CellLabeling};
use crate::norms::pnorm_sum;
use crate::rational::{format_rational, to_f64, Rational};
use crate::square::square_cww;
use crate::system::MdSystem;

pub use pipeline::{dyadize, rademacherize};
pub use procedures::{procedure1, procedure2};
pub use r1::r1_transform;
pub use r2::r2_transform;

/// Allowed drop of `||sum d_k||_p` through a single step.
pub const PNORM_TOLERANCE: f64 = 1e-12;
/// Allowed relative drop of `U(d)` through a pipeline.
pub const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    R1,
    R2,
    Procedure1,
    Procedure2,
    Dyadize,
    Rademacherize,
}

/// Pointwise comparison of `S(d)^2` after versus before.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CwwRelation {
    Equal,
    Decreased,
    Increased,
    Incomparable,
}

impl CwwRelation {
    fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a Rational, &'a Rational)>) -> Self {
        let (mut less, mut greater) = (false, false);
        for (after, before) in pairs {
            match after.cmp(before) {
                Ordering::Less => less = true,
                Ordering::Greater => greater = true,
                Ordering::Equal => {}
            }
        }
        match (less, greater) {
            (false, false) => Self::Equal,
            (true, false) => Self::Decreased,
            (false, true) => Self::Increased,
            (true, true) => Self::Incomparable,
        }
    }
}

/// Compares `S(after)^2` with `S(before)^2` at the same points of `[0, 1)`.
pub fn compare_cww(before: &MdSystem, after: &MdSystem) -> CwwRelation {
    let b = square_cww(before);
    let a = square_cww(after);
    let common = after.grid().refine(before.grid());
    CwwRelation::from_pairs(
        common
            .from_first
            .iter()
            .zip(&common.from_second)
            .map(|(&i, &j)| (&a.pointwise.values()[i], &b.pointwise.values()[j])),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemSummary {
    pub n: usize,
    pub atoms: usize,
    pub pnorm: f64,
    /// Exact `||S(d)||_inf^2` as `num/den`.
    pub sup_cww_sq: String,
    pub sup_cww: f64,
    /// `None` for a trivial system.
    pub u_ratio: Option<f64>,
    /// Largest `k` for which the system is `k`-dyadic.
    pub dyadic_depth: usize,
    /// Smallest `m` for which a dyadic system is `m`-Rademacher.
    pub rademacher_level: Option<usize>,
}

impl SystemSummary {
    pub fn of(d: &MdSystem, p: f64) -> Self {
        let sup_sq = square_cww(d).sup_sq;
        let sup = to_f64(&sup_sq).sqrt();
        let pnorm = pnorm_sum(d, p);
        let n = d.n();
        let dyadic_depth = (0..=n).rev().find(|&k| d.is_k_dyadic(k)).unwrap_or(0);
        let rademacher_level = (dyadic_depth == n)
            .then(|| (1..=n).find(|&m| d.is_m_rademacher(m).unwrap_or(false)))
            .flatten();
        Self {
            n,
            atoms: d.atom_count(),
            pnorm,
            sup_cww_sq: format_rational(&sup_sq),
            sup_cww: sup,
            u_ratio: (!sup_sq.is_zero()).then(|| pnorm / sup),
            dyadic_depth,
            rademacher_level,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Certificate {
    pub fn new(name: &str, holds: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), holds, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformReport {
    pub kind: TransformKind,
    /// `k` for R1 and R2, `m` for the procedures.
    pub level: Option<usize>,
    pub p: f64,
    pub before: SystemSummary,
    pub after: SystemSummary,
    pub cww_pointwise_relation: CwwRelation,
    pub pnorm_delta: f64,
    pub certificates: Vec<Certificate>,
    /// Exact `||S||_inf^2` targets of the rescaled cells when a square root
    /// had to be approximated.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sqrt_targets: Vec<String>,
    /// Bound on `| ||S(after)||_inf^2 - ||S(before)||_inf^2 |` caused by
    /// rational approximation of square roots.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub approximation_bound: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<TransformReport>,
}

impl TransformReport {
    fn new(kind: TransformKind, level: Option<usize>, p: f64, before: &MdSystem, after: &MdSystem) -> Self {
        let b = SystemSummary::of(before, p);
        let a = SystemSummary::of(after, p);
        Self {
            kind,
            level,
            p,
            pnorm_delta: a.pnorm - b.pnorm,
            before: b,
            after: a,
            cww_pointwise_relation: compare_cww(before, after),
            certificates: Vec::new(),
            sqrt_targets: Vec::new(),
            approximation_bound: None,
            notes: Vec::new(),
            steps: Vec::new(),
        }
    }

    fn certify(&mut self, name: &str, holds: bool, detail: impl Into<String>) {
        self.certificates.push(Certificate::new(name, holds, detail));
    }

    fn certify_valid(&mut self, after: &MdSystem) {
        let report = after.validate();
        let detail = report
            .violations
            .first()
            .map(|v| format!("{:?} at level {} cell {}: {}", v.kind, v.level, v.cell, v.detail))
            .unwrap_or_default();
        self.certify("valid", report.valid, detail);
    }

    fn certify_pnorm(&mut self) {
        let holds = self.pnorm_delta >= -PNORM_TOLERANCE;
        let detail = format!("{} -> {}", self.before.pnorm, self.after.pnorm);
        self.certify("pnorm-nondecreasing", holds, detail);
    }

    fn certify_ratio(&mut self) {
        let (b, a) = (self.before.u_ratio, self.after.u_ratio);
        let holds = match (b, a) {
            (Some(b), Some(a)) => a >= b - RATIO_TOLERANCE * b.abs().max(1.0),
            _ => false,
        };
        self.certify("ratio-nondecreasing", holds, format!("{b:?} -> {a:?}"));
    }

    /// All certificates of this report and of every step hold.
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.holds) && self.steps.iter().all(Self::passed)
    }

    /// Names of failed certificates, depth first.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .certificates
            .iter()
            .filter(|c| !c.holds)
            .map(|c| format!("{:?}: {} ({})", self.kind, c.name, c.detail))
            .collect();
        for s in &self.steps {
            out.extend(s.failures());
        }
        out
    }

    /// `U(after) - U(before)`, when both are defined.
    pub fn ratio_delta(&self) -> Option<f64> {
        Some(self.after.u_ratio? - self.before.u_ratio?)
    }
}

fn check_p(p: f64, min: f64, strict: bool) -> Result<()> {
    let ok = p.is_finite() && if strict { p > min } else { p >= min };
    if !ok {
        let rel = if strict { ">" } else { ">=" };
        return Err(Error::Domain(format!("p must be {rel} {min}, got {p}")));
    }
    Ok(())
}

fn require_valid(d: &MdSystem) -> Result<()> {
    let report = d.validate();
    if let Some(v) = report.violations.first() {
        return Err(Error::Invalid(format!(
            "{:?} at level {} cell {}: {}",
            v.kind, v.level, v.cell, v.detail
        )));
    }
    Ok(())
}

fn require_level(d: &MdSystem, k: usize, min: usize) -> Result<()> {
    if k < min || k > d.n() {
        return Err(Error::LevelOutOfRange { level: k, n: d.n() });
    }
    Ok(())
}

/// A piece of an old atom in a rebuilt grid.
struct Piece {
    length: Rational,
    values: Vec<Rational>,
    /// One raw label per level `1..=n`; canonicalized afterwards.
    labels: Vec<usize>,
}

/// Builds a system from pieces listed per old atom, in left-to-right order.
fn rebuild(old: &AtomGrid, pieces: Vec<Vec<Piece>>, n: usize) -> MdSystem {
    let mut breakpoints = vec![old.left(0).clone()];
    let mut values: Vec<Vec<Rational>> = vec![Vec::new(); n];
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, list) in pieces.into_iter().enumerate() {
        let mut x = old.left(a).clone();
        for piece in list {
            x += &piece.length;
            breakpoints.push(x.clone());
            for (j, v) in piece.values.into_iter().enumerate() {
                values[j].push(v);
            }
            for (j, l) in piece.labels.into_iter().enumerate() {
                labels[j].push(l);
            }
        }
        debug_assert_eq!(&x, old.right(a));
    }
    let grid = AtomGrid::new(breakpoints).expect("pieces tile every atom");
    let partitions = labels.into_iter().map(CellLabeling::new).collect();
    MdSystem::new(grid, partitions, values).expect("one value and label per piece")
}

/// Per atom, `+1` if its level-`j` cell is the first child of its level
/// `j - 1` cell and `-1` otherwise. Requires two children everywhere.
fn sign_pattern(d: &MdSystem, j: usize) -> Vec<i8> {
    let children = d.child_map(j - 1);
    let parent = d.partition(j - 1);
    let child = d.partition(j);
    (0..d.atom_count())
        .map(|a| if children[parent.label(a)][0].0 == child.label(a) { 1 } else { -1 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::from_haar_coeffs;
    use crate::rational::int;

    #[test]
    fn relation_classification() {
        let (a, b) = (int(1), int(2));
        assert_eq!(CwwRelation::from_pairs([(&a, &a)]), CwwRelation::Equal);
        assert_eq!(CwwRelation::from_pairs([(&a, &b), (&a, &a)]), CwwRelation::Decreased);
        assert_eq!(CwwRelation::from_pairs([(&b, &a)]), CwwRelation::Increased);
        assert_eq!(CwwRelation::from_pairs([(&b, &a), (&a, &b)]), CwwRelation::Incomparable);
    }

    #[test]
    fn summary_of_haar() {
        let h = from_haar_coeffs(&[int(0), int(1), int(1), int(1)]).unwrap();
        let s = SystemSummary::of(&h, 4.0);
        assert_eq!(s.dyadic_depth, 2);
        assert_eq!(s.rademacher_level, Some(1));
        assert_eq!(s.sup_cww_sq, "2/1");
        assert_eq!(compare_cww(&h, &h), CwwRelation::Equal);
    }
}
