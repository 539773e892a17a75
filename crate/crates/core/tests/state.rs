use edg::state::size_power;
use edg::{make_state, DensityState, InitSpec, MomentSeries};
use proptest::prelude::*;

#[test]
fn make_state_examples() {
    let s = make_state(&InitSpec::Monodisperse { density: 1.0 }, 4).unwrap();
    assert_eq!(s.densities(), &[0.0, 1.0, 0.0, 0.0, 0.0]);
    assert_eq!(s.t(), 0.0);
    assert_eq!(s.n(), 4);
    let s = make_state(&InitSpec::DeltaAt { size: 2, density: 0.5 }, 4).unwrap();
    assert_eq!(s.densities(), &[0.0, 0.0, 0.5, 0.0, 0.0]);
    let s = make_state(&InitSpec::Geometric { ratio: 0.5, total_number: 1.0 }, 3).unwrap();
    let brute: Vec<f64> = (0..4).map(|j| 0.5f64.powi(j)).collect();
    let total: f64 = brute.iter().sum();
    for (got, w) in s.densities().iter().zip(&brute) {
        assert!((got - w / total).abs() < 1e-15);
    }
    assert!((s.moment(1.0) - 11.0 / 15.0).abs() < 1e-15);
    assert!((s.moment(0.0) - 1.0).abs() < 1e-15);
    let s = make_state(&InitSpec::Custom { values: vec![0.1, 0.2] }, 3).unwrap();
    assert_eq!(s.densities(), &[0.1, 0.2, 0.0, 0.0]);
}

#[test]
fn make_state_errors() {
    assert!(make_state(&InitSpec::Custom { values: vec![0.1; 5] }, 3).is_err());
    assert!(make_state(&InitSpec::Custom { values: vec![0.1, -0.2] }, 3).is_err());
    assert!(make_state(&InitSpec::Geometric { ratio: 1.0, total_number: 1.0 }, 3).is_err());
    assert!(make_state(&InitSpec::Geometric { ratio: 1.5, total_number: 1.0 }, 3).is_err());
    assert!(make_state(&InitSpec::DeltaAt { size: 9, density: 1.0 }, 3).is_err());
    assert!(make_state(&InitSpec::Monodisperse { density: 1.0 }, 1).is_err());
    assert!(DensityState::new(0.0, vec![0.0, f64::NAN, 0.0]).is_err());
}

#[test]
fn moment_examples() {
    let s = DensityState::new(0.0, vec![0.5, 0.25, 0.25]).unwrap();
    assert_eq!((s.moment(0.0), s.moment(1.0), s.moment(2.0)), (1.0, 0.75, 1.25));
    assert_eq!(size_power(0, 0.0), 1.0);
    assert_eq!(size_power(0, 0.5), 0.0);
    let mono = make_state(&InitSpec::Monodisperse { density: 1.0 }, 6).unwrap();
    assert_eq!(mono.tail_moment(2, 7.0).unwrap(), 0.0);
    let s = DensityState::new(0.0, vec![0.0, 1.0, 1.0]).unwrap();
    assert_eq!(s.tail_moment(2, 2.0).unwrap(), 4.0);
}

#[test]
fn moment_series_tracks_states() {
    let a = DensityState::new(0.0, vec![0.5, 0.25, 0.25]).unwrap();
    let b = DensityState::new(1.0, vec![0.0, 1.0, 0.0]).unwrap();
    let m = MomentSeries::from_states(&[0.0, 2.0], [&a, &b]);
    assert_eq!(m.times, vec![0.0, 1.0]);
    assert_eq!(m.column(2.0), Some(vec![1.25, 1.0]));
    assert_eq!(m.column(3.0), None);
}

fn density_vec() -> impl Strategy<Value = Vec<f64>> {
    (2usize..60).prop_flat_map(|n| proptest::collection::vec(0.0f64..2.0, n + 1))
}

proptest! {
    #[test]
    fn moment_is_monotone_in_entries(f in density_vec(), idx in any::<prop::sample::Index>(), bump in 0.0f64..1.0, p in 0.0f64..5.0) {
        let j = idx.index(f.len());
        let s = DensityState::new(0.0, f.clone()).unwrap();
        let mut g = f;
        g[j] += bump;
        let t = DensityState::new(0.0, g).unwrap();
        prop_assert!(t.moment(p) >= s.moment(p));
    }

    #[test]
    fn moments_ordered_without_size_zero(mut f in density_vec(), p in 0.0f64..4.0, dq in 0.0f64..3.0) {
        f[0] = 0.0;
        let s = DensityState::new(0.0, f).unwrap();
        prop_assert!(s.moment(p) <= s.moment(p + dq) * (1.0 + 1e-14));
    }

    #[test]
    fn weighted_sum_is_bilinear(
        f in density_vec(),
        seed in proptest::collection::vec(-3.0f64..3.0, 61),
        a in -2.0f64..2.0,
    ) {
        let n = f.len();
        let h1: Vec<f64> = seed[..n].to_vec();
        let h2: Vec<f64> = seed[..n].iter().rev().map(|v| v * 0.5 + 1.0).collect();
        let s = DensityState::new(0.0, f.clone()).unwrap();
        let combo: Vec<f64> = h1.iter().zip(&h2).map(|(x, y)| a * x + y).collect();
        let lhs = s.weighted_sum(&combo).unwrap();
        let rhs = a * s.weighted_sum(&h1).unwrap() + s.weighted_sum(&h2).unwrap();
        let scale: f64 = combo.iter().zip(&f).map(|(h, v)| (h * v).abs()).sum::<f64>() + 1.0;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);

        let doubled = DensityState::new(0.0, f.iter().map(|v| 2.0 * v).collect()).unwrap();
        let w = doubled.weighted_sum(&h1).unwrap();
        prop_assert!((w - 2.0 * s.weighted_sum(&h1).unwrap()).abs() <= 1e-12 * scale);
    }

    #[test]
    fn tail_from_zero_is_full_moment(f in density_vec(), p in 0.0f64..4.0) {
        let s = DensityState::new(0.0, f).unwrap();
        prop_assert_eq!(s.tail_moment(0, p).unwrap(), s.moment(p));
    }
}
