//! Numerical oracles for the auxiliary inequalities behind the sharp
//! constants, and a brute-force Rademacher norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::trial_seed;
use crate::measure::StepFunction;
use crate::rational::to_f64;
use num_traits::Zero;

/// Relative tolerance of monotonicity checks.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;
/// Largest `n` accepted by [`brute_rademacher_pnorm`] and [`check_l6`].
pub const MAX_ENUMERATION_LEVELS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub monotone: bool,
    /// Largest relative drop between consecutive values, 0 if none.
    pub worst_violation: f64,
}

impl MonotoneCheck {
    pub fn from_values(grid: Vec<f64>, values: Vec<f64>) -> Self {
        let worst_violation = values
            .windows(2)
            .map(|w| (w[0] - w[1]) / w[0].abs().max(1.0))
            .fold(0.0f64, f64::max);
        Self { grid, values, monotone: worst_violation <= MONOTONE_TOLERANCE, worst_violation }
    }
}

/// `n` evenly spaced points from `a` to `b`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e).copysign(x)
    }
}

fn u_unchecked(t: f64, xi: f64, p: f64) -> f64 {
    (signed_pow(t + xi, p - 1.0) + signed_pow(t - xi, p - 1.0)) / t
}

/// `(|t + xi|^(p-1) sgn(t + xi) + |t - xi|^(p-1) sgn(t - xi)) / t`,
/// increasing in `t > 0` when `p > 3`.
pub fn lemma_u(t: f64, xi: f64, p: f64) -> Result<f64> {
    if !(t > 0.0 && xi > 0.0 && p > 3.0) || !(t.is_finite() && xi.is_finite() && p.is_finite()) {
        return Err(Error::Domain(format!("need t > 0, xi > 0, p > 3; got t={t}, xi={xi}, p={p}")));
    }
    Ok(u_unchecked(t, xi, p))
}

/// Evaluates [`lemma_u`] on a grid of positive `t`. Parameters outside
/// `p > 3` are evaluated all the same, as probes.
pub fn check_l3(xi: f64, p: f64, t_grid: &[f64]) -> MonotoneCheck {
    let values = t_grid.par_iter().map(|&t| u_unchecked(t, xi, p)).collect();
    MonotoneCheck::from_values(t_grid.to_vec(), values)
}

/// `|x+y+xi|^p + |x+y-xi|^p + |y-x+xi|^p + |y-x-xi|^p`.
pub fn lemma_sum(x: f64, y: f64, xi: f64, p: f64) -> f64 {
    [x + y + xi, x + y - xi, y - x + xi, y - x - xi].iter().map(|v| v.abs().powf(p)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArgmaxReport {
    pub xi: f64,
    pub p: f64,
    pub r: f64,
    pub argmax_x: f64,
    pub expected_x: f64,
    pub max_value: f64,
    /// Values increase along `x in (0, r / sqrt 2]`.
    pub monotone: bool,
    pub worst_violation: f64,
    /// The maximum sits at the last grid point `x = r / sqrt 2`.
    pub holds: bool,
}

/// Maximizes [`lemma_sum`] over `x^2 + y^2 = r^2` with `0 < x <= y` on a
/// grid of `grid_size` points ending at `x = r / sqrt 2`.
pub fn check_l4(xi: f64, p: f64, r: f64, grid_size: usize) -> ArgmaxReport {
    let expected_x = r / 2f64.sqrt();
    let grid: Vec<f64> = (1..=grid_size).map(|i| expected_x * i as f64 / grid_size as f64).collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&x| lemma_sum(x, (r * r - x * x).max(0.0).sqrt(), xi, p))
        .collect();
    let (best, &max_value) = values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    let mono = MonotoneCheck::from_values(grid.clone(), values.clone());
    // values at the end can tie within rounding
    let last = *values.last().unwrap_or(&f64::NAN);
    let at_end = best + 1 == grid_size || max_value - last <= MONOTONE_TOLERANCE * last.abs().max(1.0);
    ArgmaxReport {
        xi,
        p,
        r,
        argmax_x: grid.get(best).copied().unwrap_or(f64::NAN),
        expected_x,
        max_value,
        monotone: mono.monotone,
        worst_violation: mono.worst_violation,
        holds: at_end && mono.monotone,
    }
}

/// `||xi + sum a_k r_k||_p` by enumerating all `2^n` sign vectors.
pub fn rademacher_sum_pnorm(xi: f64, a: &[f64], p: f64) -> Result<f64> {
    let n = a.len();
    if n > MAX_ENUMERATION_LEVELS {
        return Err(Error::SizeLimit(format!("{n} coefficients, at most {MAX_ENUMERATION_LEVELS}")));
    }
    let mut acc = Neumaier::default();
    for mask in 0u32..(1u32 << n) {
        let s: f64 = a
            .iter()
            .enumerate()
            .map(|(k, c)| if mask >> k & 1 == 1 { -c } else { *c })
            .sum();
        acc.add((xi + s).abs().powf(p));
    }
    Ok((acc.total() / (1u64 << n) as f64).powf(1.0 / p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L6Report {
    pub n: usize,
    pub r: f64,
    pub xi: f64,
    pub p: f64,
    pub trials: usize,
    /// Norm at `|a_k| = r / sqrt n`.
    pub equal_value: f64,
    pub best_trial_value: f64,
    /// Trial index attaining `best_trial_value`.
    pub best_trial: usize,
    pub violations: usize,
    /// Largest `trial - equal_value`, relative to `max(1, equal_value)`.
    pub worst_excess: f64,
    /// Norm with one zero coefficient and the rest equal; `None` for `n = 1`.
    pub zero_coefficient_value: Option<f64>,
    pub holds: bool,
}

/// Compares `||xi + sum a_k r_k||_p` for random `a` on the sphere
/// `sum a_k^2 = r^2` against the equal-coefficient point.
pub fn check_l6(n: usize, r: f64, xi: f64, p: f64, trials: usize, seed: u64) -> Result<L6Report> {
    if n == 0 || n > MAX_ENUMERATION_LEVELS {
        return Err(Error::SizeLimit(format!("n = {n}, need 1..={MAX_ENUMERATION_LEVELS}")));
    }
    let equal_value = rademacher_sum_pnorm(xi, &vec![r / (n as f64).sqrt(); n], p)?;
    let zero_coefficient_value = (n > 1)
        .then(|| {
            let mut a = vec![r / ((n - 1) as f64).sqrt(); n];
            a[0] = 0.0;
            rademacher_sum_pnorm(xi, &a, p)
        })
        .transpose()?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, t as u64));
            let mut a: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            a.iter_mut().for_each(|x| *x *= r / norm);
            rademacher_sum_pnorm(xi, &a, p).expect("size checked")
        })
        .collect();
    let scale = equal_value.abs().max(1.0);
    let excess: Vec<f64> = values.iter().map(|v| (v - equal_value) / scale).collect();
    let violations = excess.iter().filter(|&&e| e > MONOTONE_TOLERANCE).count();
    let (best_trial, best_trial_value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let worst_excess = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(L6Report {
        n,
        r,
        xi,
        p,
        trials,
        equal_value,
        best_trial_value,
        best_trial,
        violations,
        worst_excess,
        zero_coefficient_value,
        holds: violations == 0,
    })
}

/// `h(x) = int |xi + x g|^p` on a grid; increasing on `(0, inf)` for mean
/// zero `g` and `p >= 1`.
pub fn check_l8(g: &StepFunction, xi: f64, p: f64, x_grid: &[f64]) -> Result<MonotoneCheck> {
    if !g.integrate().is_zero() {
        return Err(Error::NotMeanZero);
    }
    if g.values().iter().all(Zero::is_zero) {
        return Err(Error::Domain("g vanishes identically".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("need p >= 1, got {p}")));
    }
    let pairs: Vec<(f64, f64)> = g
        .values()
        .iter()
        .enumerate()
        .map(|(a, v)| (to_f64(v), to_f64(&g.grid().measure(a))))
        .collect();
    let values = x_grid
        .par_iter()
        .map(|&x| pairs.iter().map(|(v, m)| (xi + x * v).abs().powf(p) * m).sum())
        .collect();
    Ok(MonotoneCheck::from_values(x_grid.to_vec(), values))
}

/// Which oracle a [`SweepRow`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaId {
    L3,
    L4,
    L6,
    L8,
}

impl std::str::FromStr for LemmaId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l3" => Ok(Self::L3),
            "l4" => Ok(Self::L4),
            "l6" => Ok(Self::L6),
            "l8" => Ok(Self::L8),
            _ => Err(Error::Parse(format!("unknown lemma {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lemma: LemmaId,
    pub xi: f64,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Name of the step function for L8.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<&'static str>,
    pub holds: bool,
    /// Worst relative drop (L3, L4, L8) or excess (L6); 0 or below is clean.
    pub worst: f64,
}

/// Mean-zero step functions swept by the L8 oracle.
pub fn l8_step_functions() -> Vec<(&'static str, StepFunction)> {
    use crate::measure::AtomGrid;
    use crate::rational::{int, rat};
    let mk = |grid: AtomGrid, v: Vec<crate::rational::Rational>| StepFunction::new(grid, v).expect("shape");
    vec![
        ("halves", mk(AtomGrid::uniform(2), vec![int(1), int(-1)])),
        ("thirds", mk(AtomGrid::uniform(3), vec![int(2), int(-1), int(-1)])),
        (
            "skewed",
            mk(
                AtomGrid::new(vec![int(0), rat(1, 5), rat(1, 2), int(1)]).expect("grid"),
                vec![int(3), int(-1), rat(-3, 5)],
            ),
        ),
    ]
}

/// The in-hypothesis parameter sweeps of the four oracles. `trials` and
/// `seed` drive L6; the other sweeps are fixed grids.
pub fn lemma_sweep(lemma: LemmaId, trials: usize, seed: u64) -> Result<Vec<SweepRow>> {
    let row = |xi: f64, p: f64, holds: bool, worst: f64| SweepRow {
        lemma,
        xi,
        p,
        r: None,
        n: None,
        g: None,
        holds,
        worst,
    };
    let mut rows = Vec::new();
    match lemma {
        LemmaId::L3 => {
            let t = linspace(0.01, 100.0, 10_000);
            for xi in [1.0, 5.0] {
                for p in [3.5, 4.0, 6.0] {
                    let c = check_l3(xi, p, &t);
                    rows.push(row(xi, p, c.monotone, c.worst_violation));
                }
            }
        }
        LemmaId::L4 => {
            for xi in [0.0, 1.0, 2.0] {
                for p in [3.5, 4.0, 5.0, 6.0] {
                    for r in [0.5, 1.0, 3.0] {
                        let c = check_l4(xi, p, r, 2_000);
                        rows.push(SweepRow { r: Some(r), ..row(xi, p, c.holds, c.worst_violation) });
                    }
                }
            }
        }
        LemmaId::L6 => {
            for n in 2..=6 {
                for (xi, p) in [(0.0, 4.0), (1.0, 5.0), (0.5, 3.5)] {
                    let c = check_l6(n, 1.0, xi, p, trials, trial_seed(seed, n as u64))?;
                    rows.push(SweepRow { r: Some(1.0), n: Some(n), ..row(xi, p, c.holds, c.worst_excess) });
                }
            }
        }
        LemmaId::L8 => {
            let x = linspace(0.01, 20.0, 2_000);
            for (name, g) in l8_step_functions() {
                for xi in [0.5, 2.0] {
                    for p in [1.0, 3.0, 4.5] {
                        let c = check_l8(&g, xi, p, &x)?;
                        rows.push(SweepRow { g: Some(name), ..row(xi, p, c.monotone, c.worst_violation) });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// `(2^-n sum_s |s_1 + ... + s_n|^p / n^(p/2))^(1/p)` over all sign vectors.
pub fn brute_rademacher_pnorm(n: usize, p: f64) -> Result<f64> {
    if n == 0 || n > MAX_ENUMERATION_LEVELS {
        return Err(Error::SizeLimit(format!("n = {n}, need 1..={MAX_ENUMERATION_LEVELS}")));
    }
    let scale = (n as f64).sqrt();
    let mut acc = Neumaier::default();
    for mask in 0u32..(1u32 << n) {
        let s = n as i64 - 2 * mask.count_ones() as i64;
        acc.add((s.unsigned_abs() as f64 / scale).powf(p));
    }
    Ok((acc.total() / (1u64 << n) as f64).powf(1.0 / p))
}

/// Compensated summation.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::AtomGrid;
    use crate::norms::rademacher_pnorm;
    use crate::rational::int;

    #[test]
    fn lemma_u_examples() {
        assert_eq!(lemma_u(1.0, 1.0, 4.0).unwrap(), 8.0);
        assert_eq!(lemma_u(2.0, 1.0, 4.0).unwrap(), 14.0);
        assert!((lemma_u(10.0, 1.0, 4.0).unwrap() - 206.0).abs() < 1e-12);
        assert!(lemma_u(1.0, 1.0, 3.0).is_err());
        assert!(lemma_u(0.0, 1.0, 4.0).is_err());
    }

    #[test]
    fn l3_monotone_in_hypothesis() {
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.1).collect();
        assert!(check_l3(1.0, 4.0, &grid).monotone);
        assert!(check_l3(5.0, 3.5, &grid).monotone);
        // p = 2.5 is a probe only
        let _ = check_l3(1.0, 2.5, &grid);
    }

    #[test]
    fn lemma_sum_examples() {
        let h = 1.0 / 2f64.sqrt();
        assert!((lemma_sum(h, h, 0.0, 4.0) - 8.0).abs() < 1e-12);
        assert_eq!(lemma_sum(0.0, 1.0, 0.0, 4.0), 4.0);
        assert_eq!(lemma_sum(0.0, 1.0, 1.0, 4.0), 32.0);
    }

    #[test]
    fn l4_argmax() {
        let r = check_l4(0.0, 4.0, 1.0, 10_000);
        assert!(r.holds, "{r:?}");
        assert!((r.argmax_x - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(check_l4(2.0, 5.0, 1.0, 2000).holds);
        let _ = check_l4(1.0, 3.0, 1.0, 100);
    }

    #[test]
    fn l6_examples() {
        let r = check_l6(2, 1.0, 0.0, 4.0, 200, 1).unwrap();
        assert!(r.holds);
        // (1/sqrt 2)(r1 + r2) has 4th moment 2, so the norm is 2^(1/4)
        assert!((r.equal_value - 2f64.powf(0.25)).abs() < 1e-14);
        let r = check_l6(3, 1.0, 1.0, 5.0, 500, 7).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.zero_coefficient_value.unwrap() < r.equal_value);
    }

    #[test]
    fn l8_examples() {
        let halves = StepFunction::new(AtomGrid::uniform(2), vec![int(1), int(-1)]).unwrap();
        let check = check_l8(&halves, 1.0, 4.0, &[1.0, 2.0]).unwrap();
        assert_eq!(check.values, vec![8.0, 41.0]);
        assert!(check.monotone);
        let thirds = StepFunction::new(AtomGrid::uniform(3), vec![int(2), int(-1), int(-1)]).unwrap();
        assert!(check_l8(&thirds, 1.0, 3.0, &linspace(0.1, 10.0, 100)).unwrap().monotone);
        assert!(check_l8(&thirds, 0.0, 3.0, &linspace(0.1, 10.0, 100)).unwrap().monotone);
        let bad = StepFunction::new(AtomGrid::uniform(2), vec![int(1), int(0)]).unwrap();
        assert_eq!(check_l8(&bad, 1.0, 3.0, &[1.0]).unwrap_err(), Error::NotMeanZero);
    }

    #[test]
    fn brute_force_examples() {
        assert!((brute_rademacher_pnorm(1, 3.7).unwrap() - 1.0).abs() < 1e-15);
        assert!((brute_rademacher_pnorm(2, 4.0).unwrap() - 2f64.powf(0.25)).abs() < 1e-14);
        let e = (2.0 * 27.0 + 6.0) / 8.0 / 3f64.powf(1.5);
        assert!((brute_rademacher_pnorm(3, 3.0).unwrap() - e.cbrt()).abs() < 1e-14);
        assert!((brute_rademacher_pnorm(3, 3.0).unwrap() - 1.1301249).abs() < 1e-7);
        assert!(matches!(brute_rademacher_pnorm(21, 3.0), Err(Error::SizeLimit(_))));
        for n in 1..=12 {
            let (a, b) = (brute_rademacher_pnorm(n, 3.5).unwrap(), rademacher_pnorm(n, 3.5));
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn sweeps_hold() {
        for lemma in [LemmaId::L3, LemmaId::L4, LemmaId::L6, LemmaId::L8] {
            let rows = lemma_sweep(lemma, 50, 3).unwrap();
            assert!(!rows.is_empty());
            assert!(rows.iter().all(|r| r.holds), "{lemma:?}");
        }
        assert!(l8_step_functions().iter().all(|(_, g)| g.integrate().is_zero()));
    }
}
