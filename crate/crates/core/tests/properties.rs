use g2ghost::{
    derive_seed, g2_analytic, g2_from_amplitude_pair, make_double_pinhole_mask, make_mask_from_bitmap, propagate,
    sample_realization, somb, AmplitudeMode, AmplitudePair, DetectorGrid, Dimensionality, Geometry, KernelParams,
    PlaneTarget, PropagationPlan, SeedSpec, SourceRealization, SourceSpec, Statistics, Vec2,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1e3f64..1e3, -1e3f64..1e3).prop_map(|(re, im)| Complex64::new(re, im))
}

fn pair() -> impl Strategy<Value = AmplitudePair> {
    (complex(), complex(), complex(), complex()).prop_map(|(a1, a2, b1, b2)| AmplitudePair::new(a1, a2, b1, b2))
}

fn g2(p: &AmplitudePair, k: Statistics) -> f64 {
    g2_from_amplitude_pair(p, k).unwrap()
}

proptest! {
    #[test]
    fn parallelogram_identity(p in pair()) {
        let (b, f, c) = (g2(&p, Statistics::Boson), g2(&p, Statistics::Fermion), g2(&p, Statistics::Classical));
        prop_assert!(b >= 0.0 && f >= 0.0 && c >= 0.0);
        prop_assert!((f + b - 2.0 * c).abs() <= 1e-12 * (2.0 * c).max(f64::MIN_POSITIVE));
    }

    #[test]
    fn exchange_symmetry_is_bitwise(p in pair()) {
        let q = p.swapped();
        for k in Statistics::ALL {
            prop_assert_eq!(g2(&p, k).to_bits(), g2(&q, k).to_bits());
        }
    }

    #[test]
    fn kernel_identity(delta in -1e-2f64..1e-2, d in 1e-4f64..5e-3, two_d in any::<bool>()) {
        let dim = if two_d { Dimensionality::TwoD } else { Dimensionality::OneD };
        let p = KernelParams::new(d, 780e-9, 0.91, dim).unwrap();
        let s = g2_analytic(delta, Statistics::Fermion, &p) + g2_analytic(delta, Statistics::Boson, &p);
        prop_assert_eq!(s, 2.0);
        prop_assert_eq!(g2_analytic(delta, Statistics::Classical, &p), 1.0);
    }

    #[test]
    fn somb_is_even(x in -60f64..60.0) {
        prop_assert_eq!(somb(x).unwrap(), somb(-x).unwrap());
    }

    #[test]
    fn derive_seed_is_pure(master in any::<u64>(), i in any::<u64>()) {
        prop_assert_eq!(derive_seed(master, i), derive_seed(master, i));
        prop_assert_ne!(derive_seed(master, i), derive_seed(master, i.wrapping_add(1)));
    }

    #[test]
    fn grid_coordinates_are_exact(ox in -1.0f64..1.0, oy in -1.0f64..1.0, pitch in 1e-6f64..1e-2,
                                  nx in 1usize..50, ny in 1usize..50) {
        let g = DetectorGrid::new(Vec2::new(ox, oy), pitch, nx, ny).unwrap();
        for k in 0..g.len() {
            let (i, j) = (k % nx, k / nx);
            let p = g.point(k);
            prop_assert_eq!(p.x.to_bits(), (ox + i as f64 * pitch).to_bits());
            prop_assert_eq!(p.y.to_bits(), (oy + j as f64 * pitch).to_bits());
        }
    }

    #[test]
    fn mask_rewrap_is_identity(d in 0.5e-3f64..2e-3, s in 0.0f64..4e-3) {
        let grid = DetectorGrid::centered(0.1e-3, 81, 31).unwrap();
        let m = make_double_pinhole_mask(grid, d, s).unwrap();
        let again = make_mask_from_bitmap(grid, m.values().to_vec()).unwrap();
        prop_assert_eq!(again, m);
    }

    #[test]
    fn double_pinhole_is_mirror_symmetric(d in 0.3e-3f64..2e-3, s in 0.0f64..5e-3, nx in 36usize..60) {
        let grid = DetectorGrid::centered(0.1e-3, 2 * nx + 1, 21).unwrap();
        let m = make_double_pinhole_mask(grid, d, s).unwrap();
        let w = grid.nx();
        for j in 0..grid.ny() {
            for i in 0..w {
                prop_assert_eq!(m.values()[j * w + i], m.values()[j * w + w - 1 - i]);
            }
        }
    }
}

fn realization(seed: u64, offset: Vec2) -> SourceRealization {
    let source = SourceSpec::disk(0.2e-3, 0.02e-3).unwrap();
    let mut r = sample_realization(&source, SeedSpec::new(seed, 0), AmplitudeMode::GaussianField).unwrap();
    for p in &mut r.positions {
        *p = *p + offset;
    }
    r
}

fn plan(offset: Vec2) -> PropagationPlan {
    let g = DetectorGrid::new(Vec2::new(-2e-3, -1e-3) + offset, 0.25e-3, 17, 9).unwrap();
    PropagationPlan::new(Geometry::balanced_at(780e-9, 0.91).unwrap(), PlaneTarget::Reference, g)
}

fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn propagation_is_linear(s1 in any::<u64>(), s2 in any::<u64>()) {
        let r1 = realization(s1, Vec2::ZERO);
        let r2 = realization(s2, Vec2::ZERO);
        let mut sum = r1.clone();
        for (a, b) in sum.amplitudes.iter_mut().zip(&r2.amplitudes) {
            *a += b;
        }
        let p = plan(Vec2::ZERO);
        let f1 = propagate(&r1, &p).unwrap();
        let f2 = propagate(&r2, &p).unwrap();
        let fs = propagate(&sum, &p).unwrap();
        let added: Vec<Complex64> = f1.values().iter().zip(f2.values()).map(|(a, b)| a + b).collect();
        prop_assert!(rel_err(fs.values(), &added) <= 1e-12);
    }

    #[test]
    fn propagation_is_translation_covariant(seed in any::<u64>(), dx in -1e-3f64..1e-3, dy in -1e-3f64..1e-3) {
        let shift = Vec2::new(dx, dy);
        let base = propagate(&realization(seed, Vec2::ZERO), &plan(Vec2::ZERO)).unwrap();
        let moved = propagate(&realization(seed, shift), &plan(shift)).unwrap();
        prop_assert!(rel_err(moved.values(), base.values()) <= 1e-12);
    }
}
