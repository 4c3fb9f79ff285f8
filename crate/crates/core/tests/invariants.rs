use npvq::evaluation::{auc, smooth, RocCurve};
use npvq::highrate::{compute_de, holder_lower_bound, DensityField, DensityKind, Grid, ScoreField};
use npvq::quantizers::{lbg_train, CellPartition, Codebook, LbgConfig, VoronoiQuantizer};
use npvq::DomainBox;
use proptest::prelude::*;

fn planar_points(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-4.0..4.0f64, 2), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cell_of_is_nearest_codepoint(points in planar_points(6), y in prop::collection::vec(-5.0..5.0f64, 2)) {
        let domain = DomainBox::cube(2, 5.0).unwrap();
        let Ok(cb) = Codebook::new(points.clone(), domain) else { return Ok(()) };
        let q = VoronoiQuantizer::new(cb);
        let j = q.cell_of(&y).unwrap();
        let d = |p: &[f64]| (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2);
        let best = points.iter().map(|p| d(p)).fold(f64::INFINITY, f64::min);
        prop_assert!(d(&points[j]) <= best + 1e-12);
        for (i, p) in points.iter().enumerate() {
            prop_assert_eq!(q.cell_of(p).unwrap(), i);
        }
    }

    #[test]
    fn codebook_csv_round_trips(points in planar_points(5)) {
        let domain = DomainBox::cube(2, 5.0).unwrap();
        let Ok(cb) = Codebook::new(points, domain.clone()) else { return Ok(()) };
        prop_assert_eq!(Codebook::from_csv(&cb.to_csv(), domain).unwrap(), cb);
    }

    #[test]
    fn roc_is_a_monotone_trade_off(
        s0 in prop::collection::vec(-3i32..3, 1..60),
        shift in -2i32..4,
    ) {
        let h0: Vec<f64> = s0.iter().map(|v| *v as f64).collect();
        let h1: Vec<f64> = s0.iter().rev().map(|v| (*v + shift) as f64).collect();
        let c = RocCurve::from_statistics(&h0, &h1, 1, "p").unwrap();
        prop_assert_eq!(c.points.first().copied(), Some((0.0, 1.0)));
        prop_assert_eq!(c.points.last().copied(), Some((1.0, 0.0)));
        for w in c.points.windows(2) {
            prop_assert!(w[0].0 <= w[1].0 && w[0].1 >= w[1].1);
        }
        let a = auc(&c).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn holder_bound_is_a_lower_bound(
        f in prop::collection::vec(0.01..5.0f64, 41),
        z in prop::collection::vec(0.05..3.0f64, 41),
    ) {
        let g = Grid::uniform(DomainBox::cube(1, 2.0).unwrap(), 41).unwrap();
        let p0 = DensityField::from_fn(g.clone(), DensityKind::ProbabilityDensity, |y| (-y[0] * y[0]).exp()).unwrap().normalized().unwrap();
        let f = ScoreField::exact(g.clone(), f).unwrap();
        let zeta = DensityField::new(g, z, DensityKind::PointDensity).unwrap().normalized().unwrap();
        let de = compute_de(&p0, &f, &zeta).unwrap();
        prop_assert!(de >= holder_lower_bound(&p0, &f).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn interpolation_reproduces_nodes(v in prop::collection::vec(-10.0..10.0f64, 35)) {
        let g = Grid::new(DomainBox::new(vec![0.0, -1.0], vec![2.0, 3.0]).unwrap(), vec![5, 7]).unwrap();
        for i in 0..g.len() {
            prop_assert!((g.interpolate(&v, &g.point(i)) - v[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn smoothing_keeps_values_in_hull(v in prop::collection::vec(0.0..1.0f64, 121), bw in 0.0..3.0f64) {
        let g = Grid::uniform(DomainBox::cube(2, 1.0).unwrap(), 11).unwrap();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        for s in smooth(&g, &v, bw) {
            prop_assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lbg_distortion_never_increases(seed in 0u64..1000, samples in prop::collection::vec(-3.0..3.0f64, 200..400)) {
        let b = DomainBox::cube(1, 3.0).unwrap();
        let r = lbg_train(&samples, 1, &b, &LbgConfig::new(6, seed)).unwrap();
        for w in r.mse_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert_eq!(r.quantizer.num_cells(), 6);
    }
}
