use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::rademacher_pnorm;

/// Relative drop that counts as a decrease in `n`.
pub const DECREASE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PScanRow {
    pub p: f64,
    pub n: usize,
    pub value: f64,
    /// `value` is below the value at `n - 1`.
    pub decrease: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PScanTable {
    pub rows: Vec<PScanRow>,
}

impl PScanTable {
    /// Rows flagged as decreases.
    pub fn flags(&self) -> Vec<&PScanRow> {
        self.rows.iter().filter(|r| r.decrease).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,n,value,decrease\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:.17},{}\n", r.p, r.n, r.value, r.decrease));
        }
        out
    }
}

/// `rademacher_pnorm(n, p)` for `p` from `p_min` to `p_max` in steps of
/// `step` and `n = 1..=n_max`, flagging every decrease in `n`.
pub fn pscan(p_min: f64, p_max: f64, step: f64, n_max: usize) -> Result<PScanTable> {
    if !(p_min >= 2.0 && p_min < p_max && p_max.is_finite()) {
        return Err(Error::Domain(format!("need 2 <= p_min < p_max, got {p_min}..{p_max}")));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    if n_max == 0 {
        return Err(Error::Domain("n_max must be positive".into()));
    }
    let count = ((p_max - p_min) / step + 1e-9).floor() as usize + 1;
    let mut rows = Vec::with_capacity(count * n_max);
    for i in 0..count {
        // rounding keeps grid points such as 2.5 exact
        let p = ((p_min + i as f64 * step) * 1e12).round() / 1e12;
        let mut previous = f64::NEG_INFINITY;
        for n in 1..=n_max {
            let value = rademacher_pnorm(n, p);
            let decrease = value < previous * (1.0 - DECREASE_TOLERANCE);
            rows.push(PScanRow { p, n, value, decrease });
            previous = value;
        }
    }
    Ok(PScanTable { rows })
}
