use num_traits::{One, Zero};

use super::{check_p, rebuild, require_level, require_valid, CwwRelation, Piece, TransformKind, TransformReport};
use crate::error::{Error, Result};
use crate::measure::integrate_values;
use crate::rational::{format_rational, Rational};
use crate::square::envelope_values;
use crate::system::MdSystem;

/// Makes `|d_k|` equal to its sup on every level `k - 1` cell.
///
/// Each atom inside a level-`k` cell with value `xi` and envelope `s` is
/// split at `lambda = (1 + xi / s) / 2`; the left part carries `+s`, the
/// right part `-s`. Every cell of levels `k..n` is split into its `+` and
/// `-` parts. Later differences keep their values.
pub fn r1_transform(d: &MdSystem, k: usize, p: f64) -> Result<(MdSystem, TransformReport)> {
    check_p(p, 0.0, true)?;
    require_level(d, k, 1)?;
    require_valid(d)?;
    if !d.is_k_dyadic(k - 1) {
        return Err(Error::NotKMinus1Dyadic(k));
    }
    let n = d.n();
    let grid = d.grid();
    let dk = d.difference(k);
    let env = envelope_values(d, k);
    let mut pieces = Vec::with_capacity(d.atom_count());
    for a in 0..d.atom_count() {
        let (xi, s) = (&dk[a], &env[a]);
        let mu = grid.measure(a);
        let piece = |length: Rational, value: Rational, sign: usize| Piece {
            length,
            values: (1..=n)
                .map(|j| if j == k { value.clone() } else { d.difference(j)[a].clone() })
                .collect(),
            labels: (1..=n)
                .map(|j| {
                    let l = d.partition(j).label(a);
                    if j >= k { 2 * l + sign } else { l }
                })
                .collect(),
        };
        if s.is_zero() {
            if !xi.is_zero() {
                return Err(Error::ZeroEnvelopeCell { level: k, cell: d.partition(k).label(a) });
            }
            pieces.push(vec![piece(mu, Rational::zero(), 0)]);
            continue;
        }
        let lambda = (Rational::one() + xi / s) / Rational::from_integer(2.into());
        let plus = &mu * &lambda;
        let minus = &mu - &plus;
        let mut list = Vec::with_capacity(2);
        if !plus.is_zero() {
            list.push(piece(plus, s.clone(), 0));
        }
        if !minus.is_zero() {
            list.push(piece(minus, -s.clone(), 1));
        }
        pieces.push(list);
    }
    let out = rebuild(grid, pieces, n);

    let mut report = TransformReport::new(TransformKind::R1, Some(k), p, d, &out);
    report.certify_valid(&out);
    report.certify("ip", out.is_ip(k), format!("IP at level {k}"));
    report.certify(
        "cww-pointwise-equal",
        report.cww_pointwise_relation == CwwRelation::Equal,
        format!("{:?}", report.cww_pointwise_relation),
    );
    let (holds, detail) = integrals_preserved(d, &out, k);
    report.certify("finest-cell-integrals", holds, detail);
    report.certify_pnorm();
    Ok((out, report))
}

/// `int_I d_k` before and after over every finest cell `I` of the input.
fn integrals_preserved(before: &MdSystem, after: &MdSystem, k: usize) -> (bool, String) {
    let n = before.n();
    let common = after.grid().refine(before.grid());
    let finest = before.partition(n);
    let mut old = vec![Rational::zero(); finest.cell_count()];
    let mut new = old.clone();
    for (i, (&x, &y)) in common.from_first.iter().zip(&common.from_second).enumerate() {
        let mu = common.grid.measure(i);
        let cell = finest.label(y);
        new[cell] += &after.difference(k)[x] * &mu;
        old[cell] += &before.difference(k)[y] * mu;
    }
    match (0..old.len()).find(|&c| old[c] != new[c]) {
        None => {
            let total = integrate_values(after.grid(), after.difference(k));
            (true, format!("{} cells, total {}", old.len(), format_rational(&total)))
        }
        Some(c) => (
            false,
            format!("cell {c}: {} became {}", format_rational(&old[c]), format_rational(&new[c])),
        ),
    }
}
