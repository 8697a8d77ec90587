//! Randomized verification suites for the Khintchine-type and sub-Gaussian
//! bounds. Each trial draws one system from a per-trial seed, so any failing
//! trial can be replayed on its own.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{random_md_with, trial_seed, RandomMdConfig};
use crate::norms::{luxemburg_norm, mgf_ratio, tail_check, verify_khintchine, BoundCheck, TailMode};
use crate::system::MdSystem;

/// Largest depth of suite systems.
pub const SUITE_MAX_LEVELS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// `||sum d||_p <= rademacher_pnorm(n, p) ||S(d)||_inf`, `p >= 3`.
    C1,
    /// The exponential moment bound `(1 - 2 lambda)^(-1/2)`.
    C3,
    /// The Luxemburg norm bound `sqrt(8/3) ||S(d)||_inf`.
    C4,
    /// The tail bound with the CWW square function.
    Cww,
    /// The tail bound with the classical square function and homogeneity.
    Ot2,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Self::C1 => "c1",
            Self::C3 => "c3",
            Self::C4 => "c4",
            Self::Cww => "cww",
            Self::Ot2 => "ot2",
        }
    }

    /// Parameter grid swept per trial; empty for single-check suites.
    pub fn lambda_grid(self) -> Vec<f64> {
        match self {
            Self::C3 => (1..=9).map(|i| i as f64 * 0.05).collect(),
            Self::Cww | Self::Ot2 => (1..=30).map(|i| i as f64 * 0.1).collect(),
            Self::C1 | Self::C4 => Vec::new(),
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c1" => Ok(Self::C1),
            "c3" => Ok(Self::C3),
            "c4" => Ok(Self::C4),
            "cww" => Ok(Self::Cww),
            "ot2" => Ok(Self::Ot2),
            _ => Err(Error::Parse(format!("unknown suite {s:?}"))),
        }
    }
}

/// One trial; for swept suites the line reports the tightest parameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteLine {
    pub suite: &'static str,
    pub p: f64,
    pub n: usize,
    /// Seed of this trial's system.
    pub seed: u64,
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub lines: Vec<SuiteLine>,
    /// Systems of the failing trials, for replay.
    pub failures: Vec<(usize, MdSystem)>,
}

impl SuiteReport {
    pub fn all_hold(&self) -> bool {
        self.lines.iter().all(|l| l.holds)
    }
}

/// System of a suite trial: depth `1..=6`, two or three children per cell,
/// values of size at most 2.
pub fn suite_system(trial_seed: u64) -> MdSystem {
    let n = 1 + (trial_seed % SUITE_MAX_LEVELS as u64) as usize;
    let children = 2 + ((trial_seed >> 8) % 2) as usize;
    let dyadic = ((trial_seed >> 16) % (n as u64 + 1)) as usize;
    random_md_with(&RandomMdConfig::new(n, children, 2).dyadic_levels(dyadic), trial_seed)
}

fn rechecked(c: BoundCheck, tolerance: f64) -> BoundCheck {
    BoundCheck::new(c.lhs, c.rhs, tolerance)
}

fn run_trial(suite: Suite, d: &MdSystem, p: f64, tolerance: f64) -> Result<(Option<f64>, BoundCheck)> {
    let worst = |checks: Vec<(f64, BoundCheck)>| {
        checks
            .into_iter()
            .map(|(l, c)| (Some(l), rechecked(c, tolerance)))
            .min_by(|a, b| {
                (a.1.holds, a.1.slack).partial_cmp(&(b.1.holds, b.1.slack)).expect("finite slack")
            })
            .expect("non-empty grid")
    };
    Ok(match suite {
        Suite::C1 => {
            let k = verify_khintchine(d, p)?;
            let sharp = rechecked(k.sharp, tolerance);
            let asymptotic = rechecked(k.asymptotic, tolerance);
            let holds = sharp.holds && asymptotic.holds;
            (None, BoundCheck { holds, ..sharp })
        }
        Suite::C3 => worst(
            suite.lambda_grid().into_iter().map(|l| Ok((l, mgf_ratio(d, l)?))).collect::<Result<_>>()?,
        ),
        Suite::C4 => (None, rechecked(luxemburg_norm(d)?, tolerance)),
        Suite::Cww | Suite::Ot2 => {
            let mode = if suite == Suite::Cww { TailMode::Cww } else { TailMode::Homogeneous };
            worst(
                suite
                    .lambda_grid()
                    .into_iter()
                    .map(|l| Ok((l, tail_check(d, l, mode)?)))
                    .collect::<Result<_>>()?,
            )
        }
    })
}

/// Runs `trials` random systems through `suite`. Trials run in parallel;
/// lines come back in trial order.
pub fn run_suite(suite: Suite, p: f64, trials: usize, seed: u64, tolerance: f64) -> Result<SuiteReport> {
    if suite == Suite::C1 && !(p >= 3.0 && p.is_finite()) {
        return Err(Error::Domain(format!("suite c1 requires p >= 3, got {p}")));
    }
    let results: Vec<Result<(SuiteLine, Option<MdSystem>)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = trial_seed(seed, t as u64);
            let d = suite_system(s);
            let (lambda, c) = run_trial(suite, &d, p, tolerance)?;
            let line = SuiteLine {
                suite: suite.name(),
                p,
                n: d.n(),
                seed: s,
                trial: t,
                lambda,
                lhs: c.lhs,
                rhs: c.rhs,
                slack: c.slack,
                holds: c.holds,
            };
            Ok((line, (!c.holds).then_some(d)))
        })
        .collect();
    let mut lines = Vec::with_capacity(trials);
    let mut failures = Vec::new();
    for r in results {
        let (line, failed) = r?;
        if let Some(d) = failed {
            failures.push((line.trial, d));
        }
        lines.push(line);
    }
    Ok(SuiteReport { lines, failures })
}
