//! High-rate asymptotics: score fields, the loss constant `D_e`, optimal point
//! densities and their lower bound, the LBG design target and cell-axis
//! alignment.

mod fields;
mod grid;
mod score;

pub use fields::{fields_csv, CovariationProfile, DensityField, DensityKind, ScoreEstimate, ScoreField, ScoreMoments};
pub use grid::{Grid, DEFAULT_NODES};
pub use score::{estimate_fbar, exact_gaussian_score, gupta_hero_f, score_field, FbarConfig, FbarMethod};

use crate::error::{invalid, Error, Result};
use crate::processes::{Hypothesis, ProcessModel};
use nalgebra::DMatrix;

/// Marginal density of `model` under `hyp` on `grid`, renormalized to unit mass on the grid.
pub fn marginal_density(model: &ProcessModel, hyp: Hypothesis, grid: &Grid) -> Result<DensityField> {
    let mut vals = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        vals.push(model.marginal_logpdf(hyp, &grid.point(i))?.exp());
    }
    DensityField::new(grid.clone(), vals, DensityKind::ProbabilityDensity)?.normalized()
}

/// `F = trace(M L̄)` pointwise; `ν F̄` for the scaled-identity profile.
pub fn compute_f(score: &ScoreEstimate, m: &CovariationProfile) -> Result<ScoreField> {
    let grid = score.fbar.grid();
    grid.check_same(score.moments.grid())?;
    let d = grid.dim();
    m.validate(d)?;
    if let CovariationProfile::Scaled(nu) = m {
        return Ok(score.fbar.scaled(*nu));
    }
    if let CovariationProfile::PerNode(ms) = m {
        if ms.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} profile matrices for {} nodes", ms.len(), grid.len())));
        }
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let mm = m.at(node, d);
        values.push((&mm * score.moments.at(node)).trace().max(0.0));
        // bound by the largest eigenvalue of M
        let lmax = mm.symmetric_eigen().eigenvalues.max().max(0.0);
        stderr.push(lmax * score.fbar.stderr()[node]);
    }
    ScoreField::new(grid.clone(), values, stderr)
}

fn product(p0: &DensityField, f: &ScoreField) -> Result<Vec<f64>> {
    p0.grid().check_same(f.grid())?;
    Ok(p0.values().iter().zip(f.values()).map(|(a, b)| a * b).collect())
}

/// `D_e = ½ ∫ p₀ F / ζ^{2/d}` by trapezoidal quadrature.
///
/// Fails with [`Error::ZeroDensity`] listing the nodes where `ζ = 0` but
/// `p₀F > 0`; the loss is infinite there.
pub fn compute_de(p0: &DensityField, f: &ScoreField, zeta: &DensityField) -> Result<f64> {
    let pf = product(p0, f)?;
    p0.grid().check_same(zeta.grid())?;
    let d = p0.grid().dim() as f64;
    let bad: Vec<usize> = (0..pf.len()).filter(|&i| pf[i] > 0.0 && zeta.values()[i] <= 0.0).collect();
    if !bad.is_empty() {
        return Err(Error::ZeroDensity { count: bad.len(), nodes: bad });
    }
    let integrand: Vec<f64> =
        pf.iter().zip(zeta.values()).map(|(v, z)| if *v > 0.0 { v / z.powf(2.0 / d) } else { 0.0 }).collect();
    Ok(0.5 * p0.grid().integrate(&integrand))
}

fn powered_density(values: Vec<f64>, grid: &Grid, exponent: f64) -> Result<DensityField> {
    if values.iter().all(|v| *v <= 0.0) {
        return Err(Error::Degenerate("p0 * F vanishes on the whole grid".into()));
    }
    let v = values.into_iter().map(|x| x.max(0.0).powf(exponent)).collect();
    DensityField::new(grid.clone(), v, DensityKind::PointDensity)?.normalized()
}

/// Scalar optimum `ζ ∝ (p₀F)^{1/3}`.
pub fn optimal_density_scalar(p0: &DensityField, f: &ScoreField) -> Result<DensityField> {
    if p0.grid().dim() != 1 {
        return invalid("scalar optimal density requires d = 1");
    }
    optimal_density_vector(p0, f)
}

/// `ζ ∝ (p₀F)^{d/(d+2)}`.
pub fn optimal_density_vector(p0: &DensityField, f: &ScoreField) -> Result<DensityField> {
    let d = p0.grid().dim() as f64;
    powered_density(product(p0, f)?, p0.grid(), d / (d + 2.0))
}

/// `½ (∫ (p₀F)^{d/(d+2)})^{(d+2)/d}`, the smallest `D_e` over point densities.
pub fn holder_lower_bound(p0: &DensityField, f: &ScoreField) -> Result<f64> {
    let d = p0.grid().dim() as f64;
    let v: Vec<f64> = product(p0, f)?.into_iter().map(|x| x.max(0.0).powf(d / (d + 2.0))).collect();
    Ok(0.5 * p0.grid().integrate(&v).powf((d + 2.0) / d))
}

/// Mean-square-error optimal density `ζ ∝ p₀^{d/(d+2)}`.
pub fn bennett_mse_density(p0: &DensityField) -> Result<DensityField> {
    let d = p0.grid().dim() as f64;
    powered_density(p0.values().to_vec(), p0.grid(), d / (d + 2.0))
}

/// Training target `q* ∝ p₀ F̄`.
pub fn target_density_qstar(p0: &DensityField, fbar: &ScoreField) -> Result<DensityField> {
    let v = product(p0, fbar)?;
    if v.iter().all(|x| *x <= 0.0) {
        return Err(Error::Degenerate(
            "p0 * Fbar vanishes on the whole grid; the hypotheses are indistinguishable".into(),
        ));
    }
    DensityField::new(p0.grid().clone(), v, DensityKind::ProbabilityDensity)?.normalized()
}

/// Cell orientation minimizing `trace(U Φ Uᵀ L̄)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub rotation: DMatrix<f64>,
    pub value: f64,
}

/// Pairs the `i`-th smallest cell semi-axis moment `φ_i` with the `i`-th
/// largest eigenvalue of `L̄`.
pub fn ellipsoid_alignment(phi: &[f64], lbar: &DMatrix<f64>) -> Result<Alignment> {
    let d = phi.len();
    if lbar.nrows() != d || lbar.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: lbar.nrows() });
    }
    if phi.iter().any(|p| !(*p > 0.0)) || phi.windows(2).any(|w| w[0] > w[1]) {
        return invalid("phi must be positive and sorted ascending");
    }
    if (lbar - lbar.transpose()).amax() > 1e-12 * lbar.amax().max(1.0) {
        return invalid("moment matrix must be symmetric");
    }
    let eig = lbar.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let value = (0..d).map(|i| phi[i] * eig.eigenvalues[order[d - 1 - i]]).sum();
    if phi.iter().all(|p| *p == phi[0]) {
        return Ok(Alignment { rotation: DMatrix::identity(d, d), value });
    }
    let mut u = DMatrix::zeros(d, d);
    for i in 0..d {
        u.set_column(i, &eig.eigenvectors.column(order[d - 1 - i]));
    }
    Ok(Alignment { rotation: u, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::processes::{DomainBox, IidModel};
    use crate::rng::substream;
    use approx::assert_relative_eq;
    use rand::Rng as _;

    fn unit_grid(d: usize, n: usize) -> Grid {
        Grid::uniform(DomainBox::new(vec![0.0; d], vec![1.0; d]).unwrap(), n).unwrap()
    }

    #[test]
    fn constant_integrand_gives_half() {
        let g = unit_grid(2, 11);
        let p0 = DensityField::uniform(g.clone(), DensityKind::ProbabilityDensity);
        let f = ScoreField::constant(g.clone(), 3.0).unwrap();
        let z = DensityField::uniform(g, DensityKind::PointDensity);
        assert_relative_eq!(compute_de(&p0, &f, &z).unwrap(), 1.5, max_relative = 1e-12);
        assert_relative_eq!(holder_lower_bound(&p0, &f).unwrap(), 1.5, max_relative = 1e-12);
    }

    #[test]
    fn doubling_zeta_halves_de_in_two_dimensions() {
        let g = unit_grid(2, 9);
        let p0 = DensityField::from_fn(g.clone(), DensityKind::ProbabilityDensity, |y| 1.0 + y[0]).unwrap();
        let f = ScoreField::exact(g.clone(), (0..g.len()).map(|i| 1.0 + g.point(i)[1]).collect()).unwrap();
        let z = DensityField::from_fn(g, DensityKind::PointDensity, |y| 0.5 + y[0] * y[1]).unwrap();
        let a = compute_de(&p0, &f, &z).unwrap();
        let b = compute_de(&p0, &f, &z.scaled(2.0)).unwrap();
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn zero_density_nodes_reported() {
        let g = unit_grid(1, 5);
        let p0 = DensityField::uniform(g.clone(), DensityKind::ProbabilityDensity);
        let f = ScoreField::constant(g.clone(), 1.0).unwrap();
        let z = DensityField::new(g, vec![1.0, 0.0, 1.0, 1.0, 0.0], DensityKind::PointDensity).unwrap();
        match compute_de(&p0, &f, &z) {
            Err(Error::ZeroDensity { count, nodes }) => {
                assert_eq!(count, 2);
                assert_eq!(nodes, vec![1, 4]);
            }
            other => panic!("expected zero-density error, got {other:?}"),
        }
    }

    fn scalar_fixture() -> (DensityField, ScoreField) {
        let g = Grid::uniform(DomainBox::cube(1, 8.0).unwrap(), 401).unwrap();
        let p0 = DensityField::from_fn(g.clone(), DensityKind::ProbabilityDensity, |y| (-0.5 * y[0] * y[0]).exp())
            .unwrap()
            .normalized()
            .unwrap();
        let f = ScoreField::exact(g.clone(), (0..g.len()).map(|i| 1.0 + g.point(i)[0].powi(2)).collect()).unwrap();
        (p0, f)
    }

    #[test]
    fn optimal_scalar_attains_holder_bound_and_is_locally_optimal() {
        let (p0, f) = scalar_fixture();
        let z = optimal_density_scalar(&p0, &f).unwrap();
        let de = compute_de(&p0, &f, &z).unwrap();
        let lb = holder_lower_bound(&p0, &f).unwrap();
        assert!((de - lb).abs() <= 5e-3 * lb);
        let u = DensityField::uniform(z.grid().clone(), DensityKind::PointDensity);
        let mixed: Vec<f64> = z.values().iter().zip(u.values()).map(|(a, b)| 0.9 * a + 0.1 * b).collect();
        let mixed = DensityField::new(z.grid().clone(), mixed, DensityKind::PointDensity).unwrap();
        assert!(compute_de(&p0, &f, &mixed).unwrap() > de);
    }

    #[test]
    fn holder_bound_below_random_densities() {
        let (p0, f) = scalar_fixture();
        let lb = holder_lower_bound(&p0, &f).unwrap();
        let mut rng = substream(3, &[]);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..p0.grid().len()).map(|_| rng.random_range(0.05..1.0)).collect();
            let z =
                DensityField::new(p0.grid().clone(), vals, DensityKind::PointDensity).unwrap().normalized().unwrap();
            assert!(lb <= compute_de(&p0, &f, &z).unwrap());
        }
    }

    #[test]
    fn constant_f_gives_bennett_density() {
        let g = Grid::uniform(DomainBox::cube(2, 4.0).unwrap(), 31).unwrap();
        let p0 = DensityField::from_fn(g.clone(), DensityKind::ProbabilityDensity, |y| {
            (-0.5 * (y[0] * y[0] + y[1] * y[1])).exp()
        })
        .unwrap()
        .normalized()
        .unwrap();
        let f = ScoreField::constant(g, 2.0).unwrap();
        let a = optimal_density_vector(&p0, &f).unwrap();
        let b = bennett_mse_density(&p0).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
        assert!((b.integral() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bennett_of_qstar_equals_optimal_density() {
        let (p0, f) = scalar_fixture();
        let q = target_density_qstar(&p0, &f).unwrap();
        let a = bennett_mse_density(&q).unwrap();
        let b = optimal_density_vector(&p0, &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-10 * y.max(1e-300));
        }
    }

    #[test]
    fn qstar_of_constant_fbar_is_p0() {
        let (p0, _) = scalar_fixture();
        let f = ScoreField::constant(p0.grid().clone(), 7.0).unwrap();
        let q = target_density_qstar(&p0, &f).unwrap();
        for (x, y) in q.values().iter().zip(p0.values()) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn compute_f_trace_algebra() {
        let g = unit_grid(2, 3);
        let lam = 1.5;
        let lbar: Vec<f64> = (0..g.len()).flat_map(|_| [lam, 0.0, 0.0, lam]).collect();
        let est = ScoreEstimate {
            fbar: ScoreField::constant(g.clone(), 2.0 * lam).unwrap(),
            moments: ScoreMoments::new(g, lbar).unwrap(),
        };
        let m = CovariationProfile::Constant(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]));
        assert!(compute_f(&est, &m).unwrap().values().iter().all(|v| (v - 2.0 * lam).abs() < 1e-14));
        let id = CovariationProfile::Constant(DMatrix::identity(2, 2));
        assert!(compute_f(&est, &id).unwrap().values().iter().all(|v| (v - 2.0 * lam).abs() < 1e-14));
        let twelfth = compute_f(&est, &CovariationProfile::default()).unwrap();
        assert!(twelfth.values().iter().all(|v| (v - 2.0 * lam / 12.0).abs() < 1e-14));
    }

    #[test]
    fn alignment_two_by_two() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let a = ellipsoid_alignment(&[1.0, 2.0], &l).unwrap();
        assert_relative_eq!(a.value, 6.0, epsilon = 1e-12);
        assert!(a.rotation[(1, 0)].abs() > 0.999 && a.rotation[(0, 1)].abs() > 0.999);
        let iso = ellipsoid_alignment(&[3.0, 3.0], &l).unwrap();
        assert_relative_eq!(iso.value, 15.0, epsilon = 1e-12);
        assert_eq!(iso.rotation, DMatrix::identity(2, 2));
        assert!(ellipsoid_alignment(&[1.0, 2.0], &DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn alignment_beats_random_rotations() {
        let mut rng = substream(17, &[]);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let lbar = &a * a.transpose();
        let phi = [0.5, 1.0, 2.0];
        let best = ellipsoid_alignment(&phi, &lbar).unwrap();
        let eig = lbar.clone().symmetric_eigen();
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert_relative_eq!(best.value, phi[0] * ev[2] + phi[1] * ev[1] + phi[2] * ev[0], epsilon = 1e-12);
        let phi_m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&phi));
        let attained = (&best.rotation * &phi_m * best.rotation.transpose() * &lbar).trace();
        assert_relative_eq!(attained, best.value, epsilon = 1e-10);
        for _ in 0..10_000 {
            let r = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let q = r.qr().q();
            let v = (&q * &phi_m * q.transpose() * &lbar).trace();
            assert!(best.value <= v + 1e-12);
        }
    }

    #[test]
    fn iid_shift_field_is_constant() {
        let model: ProcessModel = IidModel::gaussian_scalar(0.0, 1.0, 0.7, 1.0).into();
        let g = Grid::uniform(DomainBox::cube(1, 4.0).unwrap(), 9).unwrap();
        let cfg =
            FbarConfig { k: 3, n_mc: 5, seed: 1, method: FbarMethod::MonteCarlo, execution: Execution::Sequential };
        let est = estimate_fbar(&model, &g, &cfg).unwrap();
        assert!(est.fbar.values().iter().all(|v| (v - 0.49).abs() < 1e-12));
    }

    #[test]
    fn identical_hypotheses_zero_field_and_degenerate_target() {
        let model: ProcessModel = IidModel::gaussian_scalar(0.0, 1.0, 0.0, 1.0).into();
        let g = Grid::uniform(DomainBox::cube(1, 4.0).unwrap(), 9).unwrap();
        let est = score_field(&model, &g, &FbarConfig::default()).unwrap();
        assert!(est.fbar.values().iter().all(|v| *v == 0.0));
        let p0 = marginal_density(&model, Hypothesis::H0, &g).unwrap();
        assert!(matches!(target_density_qstar(&p0, &est.fbar), Err(Error::Degenerate(_))));
    }

    #[test]
    fn gupta_hero_shift_pair() {
        let model: ProcessModel = IidModel::gaussian_scalar(0.0, 1.0, 1.0, 1.0).into();
        let g = Grid::uniform(DomainBox::cube(1, 8.0).unwrap(), 161).unwrap();
        let p0 = marginal_density(&model, Hypothesis::H0, &g).unwrap();
        let p1 = marginal_density(&model, Hypothesis::H1, &g).unwrap();
        let f = gupta_hero_f(&p0, &p1, &CovariationProfile::default()).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0 / 12.0).abs() < 1e-9));
        let same = gupta_hero_f(&p0, &p0, &CovariationProfile::default()).unwrap();
        assert!(same.values().iter().all(|v| *v == 0.0));
    }
}
