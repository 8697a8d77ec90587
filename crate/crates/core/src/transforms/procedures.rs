use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{check_p, require_level, require_valid, sign_pattern, TransformKind, TransformReport};
use crate::error::{Error, Result};
use crate::rational::{format_rational, sqrt_rational, Rational, DEFAULT_PRECISION_BITS};
use crate::square::square_cww;
use crate::system::MdSystem;

fn require_dyadic(d: &MdSystem) -> Result<()> {
    if !d.is_dyadic() {
        return Err(Error::NotDyadic);
    }
    Ok(())
}

/// `|d_j|` on the first atom of `atoms`.
fn modulus(d: &MdSystem, j: usize, atoms: &[usize]) -> Rational {
    d.difference(j)[atoms[0]].abs()
}

/// Every `|d_j|`, `j in levels`, is constant on every cell of `level`.
fn constant_moduli(d: &MdSystem, level: usize, levels: std::ops::RangeInclusive<usize>) -> bool {
    d.cells(level).iter().all(|atoms| {
        levels.clone().all(|j| {
            let c = modulus(d, j, atoms);
            atoms.iter().all(|&a| d.difference(j)[a].abs() == c)
        })
    })
}

fn with_differences(d: &MdSystem, differences: Vec<Vec<Rational>>) -> MdSystem {
    let partitions = (1..=d.n()).map(|j| d.partition(j).clone()).collect();
    MdSystem::new(d.grid().clone(), partitions, differences).expect("same shape")
}

/// Sets `d_j` to `+c` on first children and `-c` on second children.
fn fill(d: &MdSystem, j: usize, atoms: &[usize], c: &Rational, target: &mut [Rational]) {
    let signs = sign_pattern(d, j);
    for &a in atoms {
        target[a] = if signs[a] > 0 { c.clone() } else { -c.clone() };
    }
}

/// Equalizes the moduli of levels `m..n` on the two children of every
/// level `m - 2` cell by scaling the smaller side up to the larger.
///
/// A side whose continuation vanishes is filled with `+-c` on the two
/// children of each of its cells, `c` being the larger modulus.
pub fn procedure1(d: &MdSystem, m: usize, p: f64) -> Result<(MdSystem, TransformReport)> {
    check_p(p, 1.0, false)?;
    require_valid(d)?;
    require_dyadic(d)?;
    require_level(d, m, 2)?;
    if !d.is_m_rademacher(m)? {
        return Err(Error::NotMRademacher(m));
    }
    let n = d.n();
    let children_atoms = d.cells(m - 1);
    let mut diffs: Vec<Vec<Rational>> = (1..=n).map(|j| d.difference(j).to_vec()).collect();
    let (mut scaled, mut filled) = (0usize, 0usize);
    for children in d.child_map(m - 2) {
        let sides: Vec<&Vec<usize>> = children.iter().map(|(c, _)| &children_atoms[*c]).collect();
        let c0 = modulus(d, m, sides[0]);
        let c1 = modulus(d, m, sides[1]);
        if c0 == c1 {
            continue;
        }
        let (small, c_min, c_max) = if c0 < c1 { (sides[0], c0, c1) } else { (sides[1], c1, c0) };
        if c_min.is_zero() {
            for j in m..=n {
                fill(d, j, small, &c_max, &mut diffs[j - 1]);
            }
            filled += 1;
        } else {
            let ratio = &c_max / &c_min;
            for j in m..=n {
                for &a in small {
                    diffs[j - 1][a] *= &ratio;
                }
            }
            scaled += 1;
        }
    }
    let out = with_differences(d, diffs);

    let mut report = TransformReport::new(TransformKind::Procedure1, Some(m), p, d, &out);
    report.notes.push(format!("{scaled} cells scaled, {filled} zero continuations filled"));
    report.certify_valid(&out);
    report.certify("dyadic", out.is_dyadic(), "");
    report.certify(
        "moduli-equalized",
        constant_moduli(&out, m - 2, m..=n),
        format!("levels {m}..{n} constant on every level {} cell", m - 2),
    );
    let (before, after) = (square_cww(d).sup_sq, square_cww(&out).sup_sq);
    report.certify(
        "sup-cww-unchanged",
        before == after,
        format!("{} -> {}", format_rational(&before), format_rational(&after)),
    );
    report.certify_pnorm();
    Ok((out, report))
}

/// On every level `m - 2` cell, rescales levels `m - 1..n` to one common
/// modulus `c'` with `(n - m + 2) c'^2 = c_{m-1}^2 + (n - m + 1) c_m^2`.
///
/// Irrational `c'` is rounded down to a multiple of `2^-bits`, with `bits`
/// chosen so that the change of `||S||_inf^2` stays below `2^-60`; the
/// report carries the exact targets and the bound.
pub fn procedure2(d: &MdSystem, m: usize, p: f64) -> Result<(MdSystem, TransformReport)> {
    check_p(p, 1.0, false)?;
    require_valid(d)?;
    require_dyadic(d)?;
    require_level(d, m, 2)?;
    let n = d.n();
    if !constant_moduli(d, m - 2, m - 1..=n) || !constant_moduli(d, m - 2, m..=n) {
        return Err(Error::NotPrepared(m));
    }
    if !d.cells(m - 2).iter().all(|atoms| {
        let c = modulus(d, m, atoms);
        (m..=n).all(|j| modulus(d, j, atoms) == c)
    }) {
        return Err(Error::NotPrepared(m));
    }
    let count = (n - m + 2) as i64;
    let mut diffs: Vec<Vec<Rational>> = (1..=n).map(|j| d.difference(j).to_vec()).collect();
    let mut bound = Rational::zero();
    let mut targets = Vec::new();
    for atoms in d.cells(m - 2) {
        let c_prev = modulus(d, m - 1, &atoms);
        let c_v = modulus(d, m, &atoms);
        let target = (&c_prev * &c_prev + Rational::from_integer((count - 1).into()) * &c_v * &c_v)
            / Rational::from_integer(count.into());
        if target.is_zero() {
            continue;
        }
        let headroom: BigInt = BigInt::from(count) * (BigInt::from(2) * (target.ceil().to_integer() + 1) + 1);
        let bits = DEFAULT_PRECISION_BITS + headroom.bits() as u32;
        let (c, exact) = sqrt_rational(&target, bits);
        if !exact {
            let ulp = Rational::new(BigInt::one(), BigInt::one() << bits);
            let err = Rational::from_integer(count.into()) * &ulp * (Rational::from_integer(2.into()) * &c + &ulp);
            if err > bound {
                bound = err;
            }
            targets.push(format_rational(&target));
        }
        for j in m - 1..=n {
            let cj = modulus(d, j, &atoms);
            if cj == c {
                continue;
            }
            if cj.is_zero() {
                fill(d, j, &atoms, &c, &mut diffs[j - 1]);
            } else {
                let ratio = &c / &cj;
                for &a in &atoms {
                    diffs[j - 1][a] *= &ratio;
                }
            }
        }
    }
    targets.sort();
    targets.dedup();
    let out = with_differences(d, diffs);

    let mut report = TransformReport::new(TransformKind::Procedure2, Some(m), p, d, &out);
    report.certify_valid(&out);
    report.certify("dyadic", out.is_dyadic(), "");
    report.certify(
        "rademacher",
        out.is_m_rademacher(m - 1).unwrap_or(false),
        format!("{}-Rademacher", m - 1),
    );
    let (before, after) = (square_cww(d).sup_sq, square_cww(&out).sup_sq);
    let change = (&after - &before).abs();
    report.certify(
        "sup-cww-preserved",
        change <= bound,
        format!(
            "{} -> {}, bound {}",
            format_rational(&before),
            format_rational(&after),
            format_rational(&bound)
        ),
    );
    let limit = Rational::new(BigInt::one(), BigInt::one() << 50u32);
    report.certify("approximation-bound", bound <= limit, "at most 2^-50");
    report.sqrt_targets = targets;
    if !bound.is_zero() {
        report.approximation_bound = Some(format_rational(&bound));
    }
    report.certify_pnorm();
    Ok((out, report))
}
