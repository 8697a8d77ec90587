use super::{check_p, procedure1, procedure2, r1_transform, r2_transform, require_valid, TransformKind, TransformReport};
use crate::error::{Error, Result};
use crate::norms::rademacher_pnorm;
use crate::system::MdSystem;

fn require_nontrivial(d: &MdSystem) -> Result<()> {
    if d.is_trivial() {
        return Err(Error::TrivialSystem);
    }
    Ok(())
}

/// R1 then R2 for `k = 1..n`, merging redundant atoms after each step.
pub fn dyadize(d: &MdSystem, p: f64) -> Result<(MdSystem, TransformReport)> {
    check_p(p, 2.0, true)?;
    require_valid(d)?;
    require_nontrivial(d)?;
    let mut current = d.clone();
    let mut steps = Vec::with_capacity(2 * d.n());
    for k in 1..=d.n() {
        let (next, report) = r1_transform(&current, k, p)?;
        steps.push(report);
        let (next, report) = r2_transform(&next.coarsen(), k, p)?;
        steps.push(report);
        current = next.coarsen();
    }
    let mut report = TransformReport::new(TransformKind::Dyadize, None, p, d, &current);
    report.steps = steps;
    report.certify_valid(&current);
    report.certify("dyadic", current.is_dyadic(), "");
    report.certify_ratio();
    Ok((current, report))
}

/// Procedure 1 then Procedure 2 for `m = n, n - 1, ..., 2`.
pub fn rademacherize(d: &MdSystem, p: f64) -> Result<(MdSystem, TransformReport)> {
    check_p(p, 3.0, false)?;
    require_valid(d)?;
    if !d.is_dyadic() {
        return Err(Error::NotDyadic);
    }
    require_nontrivial(d)?;
    let n = d.n();
    let mut current = d.clone();
    let mut steps = Vec::with_capacity(2 * n);
    for m in (2..=n).rev() {
        let (next, report) = procedure1(&current, m, p)?;
        steps.push(report);
        let (next, report) = procedure2(&next, m, p)?;
        steps.push(report);
        current = next;
    }
    let mut report = TransformReport::new(TransformKind::Rademacherize, None, p, d, &current);
    report.steps = steps;
    report.certify_valid(&current);
    report.certify("rademacher", current.is_m_rademacher(1).unwrap_or(false), "1-Rademacher");
    report.certify_ratio();
    let ceiling = rademacher_pnorm(n, p);
    let u = report.after.u_ratio.unwrap_or(f64::NAN);
    report.certify(
        "rademacher-value",
        (u - ceiling).abs() <= 1e-9 * ceiling,
        format!("U = {u}, rademacher_pnorm = {ceiling}"),
    );
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{from_haar_coeffs, from_rademacher_coeffs, random_dyadic, random_md};
    use crate::measure::{AtomGrid, CellLabeling};
    use crate::norms::u_ratio;
    use crate::rational::{int, rat};

    #[test]
    fn haar_input_is_unchanged_by_dyadize() {
        let h = from_haar_coeffs(&[int(0), int(1), rat(1, 2), int(2)]).unwrap();
        let (out, report) = dyadize(&h, 3.0).unwrap();
        assert_eq!(out, h);
        assert!(report.passed());
    }

    #[test]
    fn thirds_dyadize() {
        let thirds = MdSystem::new(
            AtomGrid::uniform(3),
            vec![CellLabeling::new([0, 1, 2])],
            vec![vec![int(2), int(-1), int(-1)]],
        )
        .unwrap();
        let (out, report) = dyadize(&thirds, 3.0).unwrap();
        assert!(report.passed(), "{:?}", report.failures());
        assert_eq!(out.partition(1).cell_count(), 2);
        assert!(report.after.u_ratio.unwrap() >= (10.0f64 / 3.0).cbrt() / 2.0);
    }

    #[test]
    fn random_dyadize() {
        for seed in 0..10 {
            let d = random_md(3, 4, 5, seed);
            let (out, report) = dyadize(&d, 4.0).unwrap();
            assert!(report.passed(), "seed {seed}: {:?}", report.failures());
            assert!(out.is_dyadic());
        }
    }

    #[test]
    fn rademacher_input_is_unchanged() {
        let d = from_rademacher_coeffs(&vec![int(2); 3]).unwrap();
        let (out, report) = rademacherize(&d, 3.0).unwrap();
        assert_eq!(out, d);
        assert!(report.passed(), "{:?}", report.failures());
    }

    #[test]
    fn procedure_example_chained() {
        let d = from_haar_coeffs(&[int(0), int(1), int(2), int(1)]).unwrap();
        let (out, report) = rademacherize(&d, 4.0).unwrap();
        assert!(report.passed(), "{:?}", report.failures());
        assert!(out.is_m_rademacher(1).unwrap());
        assert!(u_ratio(&out, 4.0).unwrap().ratio >= u_ratio(&d, 4.0).unwrap().ratio);
    }

    #[test]
    fn random_haar_reaches_ceiling() {
        for seed in 0..10 {
            let d = random_dyadic(4, 5, seed);
            let (_, report) = rademacherize(&d, 4.0).unwrap();
            assert!(report.passed(), "seed {seed}: {:?}", report.failures());
            assert!(report.after.u_ratio.unwrap() <= rademacher_pnorm(4, 4.0) + 1e-9);
        }
    }

    #[test]
    fn domains() {
        let d = from_rademacher_coeffs(&vec![int(1); 2]).unwrap();
        assert!(matches!(rademacherize(&d, 2.5), Err(Error::Domain(_))));
        assert!(matches!(dyadize(&d, 2.0), Err(Error::Domain(_))));
        let z = from_haar_coeffs(&vec![int(0); 4]).unwrap();
        assert_eq!(rademacherize(&z, 3.0).unwrap_err(), Error::TrivialSystem);
        let r = random_md(2, 3, 3, 1);
        if !r.is_dyadic() {
            assert_eq!(rademacherize(&r, 3.0).unwrap_err(), Error::NotDyadic);
        }
    }
}
