use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{candidate_to_md, ceiling, exact_value, HaarCandidate, Layout, MAX_SEARCH_DEPTH};
use crate::error::{Error, Result};
use crate::generators::trial_seed;
use crate::system::MdSystem;

/// Evaluations per restart and search dimension when the budget allows.
const RESTART_BUDGET_PER_DIM: usize = 1_000;
const MAX_RESTARTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    NelderMead,
    Coordinate,
    RandomRestart,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::NelderMead => "nelder-mead",
            Self::Coordinate => "coordinate",
            Self::RandomRestart => "random-restart",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nelder-mead" => Ok(Self::NelderMead),
            "coordinate" => Ok(Self::Coordinate),
            "random-restart" => Ok(Self::RandomRestart),
            _ => Err(Error::Parse(format!("unknown search method {s:?}"))),
        }
    }
}

/// A new best value, in global evaluation order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub evaluation: usize,
    pub restart: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub method: Method,
    pub p: f64,
    pub n: usize,
    pub seed: u64,
    pub budget: usize,
    /// `U` of the witness in exact arithmetic up to the final float steps.
    pub best_value: f64,
    /// Objective value seen by the optimizer.
    pub search_value: f64,
    pub candidate: HaarCandidate,
    pub witness: MdSystem,
    pub evaluations: usize,
    pub trace: Vec<TraceEntry>,
    /// `rademacher_pnorm(n, p)` for `p >= 3`, where it equals `A_{p,n}`.
    pub ceiling: Option<f64>,
    /// `best_value` stays below the ceiling (always true for `p < 3`).
    pub within_ceiling: bool,
    /// For `p < 3` the result is only a lower bound for `A_{p,n}(Haar)`.
    pub lower_bound_only: bool,
}

struct Outcome {
    best: Vec<f64>,
    value: f64,
    evaluations: usize,
    /// `(evaluation within the restart, value)` at each local improvement.
    log: Vec<(usize, f64)>,
}

/// Counts evaluations, projects every point and records improvements.
struct Objective<'a> {
    layout: &'a Layout,
    p: f64,
    budget: usize,
    used: usize,
    best: Vec<f64>,
    value: f64,
    log: Vec<(usize, f64)>,
}

impl<'a> Objective<'a> {
    fn new(layout: &'a Layout, p: f64, budget: usize) -> Self {
        let nodes = (1 << layout.n) - 1;
        Self { layout, p, budget, used: 0, best: vec![0.0; nodes], value: f64::NEG_INFINITY, log: Vec::new() }
    }

    fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    /// Value of the candidate with stick-breaking parameters `x`, projected
    /// onto the feasible set against rounding.
    fn eval(&mut self, x: &[f64]) -> f64 {
        let coeffs = self.layout.project(&self.layout.stick(x));
        self.used += 1;
        let v = self.layout.value(&coeffs, self.p);
        if v > self.value {
            self.value = v;
            self.best = coeffs;
            self.log.push((self.used, v));
        }
        v
    }

    fn finish(self) -> Outcome {
        Outcome { best: self.best, value: self.value, evaluations: self.used, log: self.log }
    }
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(0.0..std::f64::consts::FRAC_PI_2)).collect()
}

/// Nelder-Mead with the dimension-dependent coefficients of Gao and Han.
fn nelder_mead(obj: &mut Objective, rng: &mut ChaCha8Rng, dim: usize) {
    let d = dim as f64;
    let (expand, contract, shrink) = if dim > 2 {
        (1.0 + 2.0 / d, 0.75 - 0.5 / d, 1.0 - 1.0 / d)
    } else {
        (2.0, 0.5, 0.5)
    };
    let mut start = random_point(rng, dim);
    let mut delta = 0.25;
    while !obj.exhausted() {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let x = start.clone();
        let fx = obj.eval(&x);
        simplex.push((x, fx));
        for i in 0..dim {
            if obj.exhausted() {
                return;
            }
            let mut y = start.clone();
            y[i] += delta;
            let fy = obj.eval(&y);
            simplex.push((y, fy));
        }
        loop {
            if obj.exhausted() {
                return;
            }
            simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
            let (best, worst) = (simplex[0].1, simplex[dim].1);
            let size = simplex[1..]
                .iter()
                .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if best - worst <= 1e-15 * best.abs().max(1.0) && size < 1e-9 {
                break;
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|i| simplex[..dim].iter().map(|(v, _)| v[i]).sum::<f64>() / dim as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[dim].0).map(|(c, w)| c + t * (c - w)).collect()
            };
            let r = along(1.0);
            let fr = obj.eval(&r);
            if fr > simplex[0].1 {
                let e = along(expand);
                let fe = if obj.exhausted() { f64::NEG_INFINITY } else { obj.eval(&e) };
                simplex[dim] = if fe > fr { (e, fe) } else { (r, fr) };
            } else if fr > simplex[dim - 1].1 {
                simplex[dim] = (r, fr);
            } else {
                let t = if fr > worst { contract } else { -contract };
                if obj.exhausted() {
                    return;
                }
                let c = along(t);
                let fc = obj.eval(&c);
                if fc > worst.max(if t > 0.0 { fr } else { f64::NEG_INFINITY }) {
                    simplex[dim] = (c, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        if obj.exhausted() {
                            return;
                        }
                        let s: Vec<f64> =
                            anchor.iter().zip(&entry.0).map(|(a, v)| a + shrink * (v - a)).collect();
                        let fs = obj.eval(&s);
                        *entry = (s, fs);
                    }
                }
            }
        }
        // converged: restart around the best vertex with a smaller simplex
        start.clone_from(&simplex[0].0);
        delta = if delta > 1e-6 { delta * 0.1 } else { 0.25 };
        if delta == 0.25 {
            start = random_point(rng, dim);
        }
    }
}

fn coordinate_ascent(obj: &mut Objective, rng: &mut ChaCha8Rng, dim: usize) {
    let mut x = random_point(rng, dim);
    let mut fx = obj.eval(&x);
    let mut step = 0.25;
    while !obj.exhausted() {
        let mut improved = false;
        'coords: for i in 0..dim {
            for dir in [1.0, -1.0] {
                if obj.exhausted() {
                    return;
                }
                let mut y = x.clone();
                y[i] += dir * step;
                let fy = obj.eval(&y);
                if fy > fx {
                    (x, fx) = (y, fy);
                    improved = true;
                    break 'coords;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-12 {
                        step = 0.25;
                x = random_point(rng, dim);
                fx = obj.eval(&x);
            }
        }
    }
}

/// (1+1) evolution strategy with uniform perturbations and random restarts.
fn random_restart(obj: &mut Objective, rng: &mut ChaCha8Rng, dim: usize) {
    let mut x = random_point(rng, dim);
    let mut fx = obj.eval(&x);
    let mut sigma = 0.3;
    while !obj.exhausted() {
        let y: Vec<f64> = x.iter().map(|v| v + sigma * rng.gen_range(-1.0..1.0)).collect();
        let fy = obj.eval(&y);
        if fy > fx {
            (x, fx) = (y, fy);
            sigma *= 1.5;
        } else {
            sigma *= 0.9;
        }
        if sigma < 1e-10 {
                sigma = 0.3;
            x = random_point(rng, dim);
            if obj.exhausted() {
                return;
            }
            fx = obj.eval(&x);
        }
    }
}

/// Best `U` over Haar-type candidates of depth `n` found with `budget`
/// objective evaluations. Restarts run in parallel and are merged in
/// restart order, so the result depends only on the arguments.
pub fn estimate_a(p: f64, n: usize, budget: usize, seed: u64, method: Method) -> Result<SearchResult> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::Domain(format!("the search needs p > 2, got {p}")));
    }
    if budget == 0 {
        return Err(Error::Domain("budget must be at least 1".into()));
    }
    if n == 0 || n > MAX_SEARCH_DEPTH {
        return Err(Error::SizeLimit(format!("depth {n}, need 1..={MAX_SEARCH_DEPTH}")));
    }
    let layout = Layout::new(n);
    let dim = layout.params();
    let restarts = (budget / (RESTART_BUDGET_PER_DIM * dim.max(1))).clamp(1, MAX_RESTARTS);
    let outcomes: Vec<Outcome> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let share = budget / restarts + usize::from(r < budget % restarts);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, r as u64));
            let mut obj = Objective::new(&layout, p, share);
            match method {
                Method::NelderMead => nelder_mead(&mut obj, &mut rng, dim),
                Method::Coordinate => coordinate_ascent(&mut obj, &mut rng, dim),
                Method::RandomRestart => random_restart(&mut obj, &mut rng, dim),
            }
            obj.finish()
        })
        .collect();

    let mut trace = Vec::new();
    let (mut offset, mut best_index, mut best_value) = (0, 0, f64::NEG_INFINITY);
    for (r, o) in outcomes.iter().enumerate() {
        for &(e, v) in &o.log {
            if v > best_value {
                best_value = v;
                best_index = r;
                trace.push(TraceEntry { evaluation: offset + e, restart: r, value: v });
            }
        }
        offset += o.evaluations;
    }
    let best = &outcomes[best_index];
    let candidate = HaarCandidate::new(n, best.best.clone())?;
    let witness = candidate_to_md(&candidate)?;
    let exact = exact_value(&witness, p)?;
    let ceiling = ceiling(n, p);
    Ok(SearchResult {
        method,
        p,
        n,
        seed,
        budget,
        best_value: exact,
        search_value: best.value,
        candidate,
        witness,
        evaluations: offset,
        trace,
        ceiling,
        within_ceiling: ceiling.is_none_or(|c| exact <= c + 1e-9),
        lower_bound_only: p < 3.0,
    })
}
