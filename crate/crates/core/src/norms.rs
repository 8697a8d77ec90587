//! p-norms of martingale sums, the ratio `||sum d_k||_p / ||S(d)||_inf`,
//! sharp Khintchine constants, and the sub-Gaussian bound checks.

use std::f64::consts::{LN_2, PI};

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::abs_pow_sum;
use crate::rational::{from_f64_exact, to_f64, Rational};
use crate::special::log_gamma;
use crate::square::{homogeneity, square_classical, square_cww};
use crate::system::MdSystem;

/// Default tolerance of [`BoundCheck`] comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioResult {
    pub pnorm: f64,
    pub sup_cww: f64,
    pub ratio: f64,
}

/// `lhs <= rhs` up to a tolerance relative to `max(1, |rhs|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs - lhs`
    pub slack: f64,
}

impl BoundCheck {
    pub fn new(lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let holds = lhs <= rhs + tolerance * rhs.abs().max(1.0);
        Self { lhs, rhs, holds, slack: rhs - lhs }
    }
}

/// `||sum_k d_k||_p`.
pub fn pnorm_sum(d: &MdSystem, p: f64) -> f64 {
    abs_pow_sum(d.grid(), &d.sum_values(), p).powf(1.0 / p)
}

fn nontrivial_sup_sq(d: &MdSystem) -> Result<Rational> {
    let sup_sq = square_cww(d).sup_sq;
    if sup_sq.is_zero() {
        return Err(Error::TrivialSystem);
    }
    Ok(sup_sq)
}

pub fn u_ratio(d: &MdSystem, p: f64) -> Result<RatioResult> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("p must be positive, got {p}")));
    }
    let sup_cww = to_f64(&nontrivial_sup_sq(d)?).sqrt();
    let pnorm = pnorm_sum(d, p);
    Ok(RatioResult { pnorm, sup_cww, ratio: pnorm / sup_cww })
}

/// `||(r_1 + ... + r_n) / sqrt(n)||_p^p` from the binomial law of the sum.
pub fn rademacher_pnorm_pow(n: usize, p: f64) -> f64 {
    assert!(n >= 1, "n must be positive");
    let scale = (n as f64).sqrt();
    let term = |j: usize| {
        let m = n.abs_diff(2 * j);
        if m == 0 {
            0.0
        } else {
            (m as f64 / scale).powf(p)
        }
    };
    let mut total = 0.0;
    if n <= 60 {
        // exact binomials
        let mut c: u128 = 1;
        let denom = 2f64.powi(n as i32);
        for j in 0..=n {
            if j > 0 {
                c = c * (n - j + 1) as u128 / j as u128;
            }
            total += (c as f64 / denom) * term(j);
        }
    } else {
        let mut ln_c = 0.0;
        let base = -(n as f64) * LN_2;
        for j in 0..=n {
            if j > 0 {
                ln_c += ((n - j + 1) as f64).ln() - (j as f64).ln();
            }
            total += (ln_c + base).exp() * term(j);
        }
    }
    total
}

/// `||(r_1 + ... + r_n) / sqrt(n)||_p`, the sharp constant for `n` levels.
pub fn rademacher_pnorm(n: usize, p: f64) -> f64 {
    rademacher_pnorm_pow(n, p).powf(1.0 / p)
}

/// `sqrt(2) * (Gamma((p + 1) / 2) / sqrt(pi))^(1/p)`, the limit of
/// [`rademacher_pnorm`] as `n` grows.
pub fn khintchine_constant(p: f64) -> Result<f64> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::Domain(format!("khintchine_constant needs p > 2, got {p}")));
    }
    let lg = log_gamma((p + 1.0) / 2.0)?;
    Ok(2f64.sqrt() * ((lg - 0.5 * PI.ln()) / p).exp())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!("lambda must lie in (0, 1/2), got {lambda}")));
    }
    Ok(())
}

/// `E exp(lambda (sum d / ||S||_inf)^2)` against `(1 - 2 lambda)^(-1/2)`.
pub fn mgf_ratio(d: &MdSystem, lambda: f64) -> Result<BoundCheck> {
    check_lambda(lambda)?;
    let sup_sq = nontrivial_sup_sq(d)?;
    let sums = d.sum_values();
    let lhs: f64 = sums
        .iter()
        .enumerate()
        .map(|(a, s)| {
            let normalized_sq = to_f64(&(s * s / &sup_sq));
            (lambda * normalized_sq).exp() * to_f64(&d.grid().measure(a))
        })
        .sum();
    Ok(BoundCheck::new(lhs, 1.0 / (1.0 - 2.0 * lambda).sqrt(), DEFAULT_TOLERANCE))
}

/// Luxemburg norm for `psi(t) = exp(t^2) - 1` of a step function given by
/// squared values and measures.
///
/// `u -> E psi(f / u)` is decreasing, so bisection on `[1e-6 s, 10 s]`
/// brackets the infimum; the upper end is doubled if needed.
pub fn luxemburg_psi2(squares: &[f64], measures: &[f64], scale: f64) -> f64 {
    let excess = |u: f64| -> f64 {
        let inv = 1.0 / (u * u);
        squares.iter().zip(measures).map(|(s, m)| (s * inv).exp_m1() * m).sum::<f64>()
    };
    let mut lo = 1e-6 * scale;
    let mut hi = 10.0 * scale;
    while excess(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

/// `||sum d_k||_psi` against `sqrt(8/3) ||S(d)||_inf`.
pub fn luxemburg_norm(d: &MdSystem) -> Result<BoundCheck> {
    let sup_sq = nontrivial_sup_sq(d)?;
    let s = to_f64(&sup_sq).sqrt();
    let squares: Vec<f64> = d.sum_values().iter().map(|v| to_f64(&(v * v))).collect();
    let measures: Vec<f64> = d.grid().measures().iter().map(to_f64).collect();
    let lhs = luxemburg_psi2(&squares, &measures, s);
    Ok(BoundCheck::new(lhs, (8.0f64 / 3.0).sqrt() * s, DEFAULT_TOLERANCE))
}

/// Exact `mu{ sum d_k > lambda }`.
pub fn tail_probability(d: &MdSystem, lambda: &Rational) -> Rational {
    d.sum_values()
        .iter()
        .enumerate()
        .filter(|(_, s)| *s > lambda)
        .fold(Rational::zero(), |acc, (a, _)| acc + d.grid().measure(a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMode {
    /// `exp(-lambda^2 / (2 ||S(d)||_inf^2))` with the CWW square function.
    Cww,
    /// `exp(-alpha lambda^2 / ||s(d)||_inf^2)` with the classical square
    /// function and the homogeneity constant `alpha`.
    Homogeneous,
}

pub fn tail_check(d: &MdSystem, lambda: f64, mode: TailMode) -> Result<BoundCheck> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let exact_lambda = from_f64_exact(lambda).expect("finite");
    let lhs = to_f64(&tail_probability(d, &exact_lambda));
    let rhs = match mode {
        TailMode::Cww => {
            let sup_sq = to_f64(&nontrivial_sup_sq(d)?);
            (-lambda * lambda / (2.0 * sup_sq)).exp()
        }
        TailMode::Homogeneous => {
            nontrivial_sup_sq(d)?;
            let sup_sq = to_f64(&square_classical(d).sup_sq);
            let alpha = to_f64(&homogeneity(d));
            (-alpha * lambda * lambda / sup_sq).exp()
        }
    };
    Ok(BoundCheck::new(lhs, rhs, DEFAULT_TOLERANCE))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KhintchineCheck {
    /// Against `rademacher_pnorm(n, p) ||S||_inf`.
    pub sharp: BoundCheck,
    /// Against `khintchine_constant(p) ||S||_inf`.
    pub asymptotic: BoundCheck,
}

impl KhintchineCheck {
    pub fn holds(&self) -> bool {
        self.sharp.holds && self.asymptotic.holds
    }
}

pub fn verify_khintchine(d: &MdSystem, p: f64) -> Result<KhintchineCheck> {
    if !(p >= 3.0) || !p.is_finite() {
        return Err(Error::Domain(format!("the sharp bound needs p >= 3, got {p}")));
    }
    let r = u_ratio(d, p)?;
    let sharp = BoundCheck::new(r.pnorm, rademacher_pnorm(d.n(), p) * r.sup_cww, DEFAULT_TOLERANCE);
    let asymptotic = BoundCheck::new(r.pnorm, khintchine_constant(p)? * r.sup_cww, DEFAULT_TOLERANCE);
    Ok(KhintchineCheck { sharp, asymptotic })
}

/// `||S(d)||_inf` with sign-independent rounding, for reports.
pub fn sup_cww(d: &MdSystem) -> f64 {
    square_cww(d).sup()
}

/// Sum of `|value|` weighted by measure; handy for sanity checks.
pub fn l1_norm(d: &MdSystem) -> f64 {
    d.sum_values()
        .iter()
        .enumerate()
        .map(|(a, v)| to_f64(&v.abs()) * to_f64(&d.grid().measure(a)))
        .sum()
}
