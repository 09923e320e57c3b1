use proptest::prelude::*;

use muskat_core::bie::solve_theta;
use muskat_core::dno::apply_dno;
use muskat_core::spectral::{
    abs_derivative, dft_derivative, heat_factor, hilbert_transform, GridFunction, PeriodicGrid,
};
use muskat_core::stepper::{step_scheme, InterfaceState, Scheme};

/// Trigonometric polynomial with modes strictly below `kmax`, sampled on N nodes.
fn trig(n: usize, coeffs: &[(f64, f64)], offset: f64) -> GridFunction {
    GridFunction::from_fn(PeriodicGrid::new(n).unwrap(), |x| {
        offset
            + coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let k = (k + 1) as f64;
                    a * (k * x).cos() + b * (k * x).sin()
                })
                .sum::<f64>()
    })
    .unwrap()
}

fn coeffs(len: usize, scale: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-scale..scale, -scale..scale), 1..=len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hilbert_squared_is_minus_identity_on_band_limited(c in coeffs(15, 1.0), m in -2.0..2.0f64) {
        let u = trig(32, &c, m);
        let hh = hilbert_transform(&hilbert_transform(&u).unwrap()).unwrap();
        let target = u.map(|v| m - v).unwrap();
        prop_assert!(hh.max_abs_diff(&target) < 1e-12);
    }

    #[test]
    fn abs_derivative_is_hilbert_of_derivative(c in coeffs(20, 1.0)) {
        let u = trig(64, &c, 0.0);
        let lhs = abs_derivative(&u).unwrap();
        let rhs = hilbert_transform(&dft_derivative(&u).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn heat_factor_is_a_semigroup(c in coeffs(10, 1.0), a in 0.0..0.5f64, b in 0.0..0.5f64) {
        let u = trig(32, &c, 0.3);
        let two = heat_factor(&heat_factor(&u, a).unwrap(), b).unwrap();
        prop_assert!(two.max_abs_diff(&heat_factor(&u, a + b).unwrap()) < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dno_invariances(fc in coeffs(3, 0.4), gc in coeffs(4, 1.0), lift in -3.0..3.0f64, c in -2.0..2.0f64) {
        let f = trig(32, &fc, 0.0);
        let g = trig(32, &gc, 0.0);
        let base = apply_dno(&f, &g).unwrap();
        // shifting the interface vertically
        let lifted = apply_dno(&f.add_scalar(lift).unwrap(), &g).unwrap().gf;
        prop_assert!(lifted.max_abs_diff(&base.gf) < 1e-9);
        // constants lie in the kernel
        let plus_c = apply_dno(&f, &g.add_scalar(c).unwrap()).unwrap().gf;
        prop_assert!(plus_c.max_abs_diff(&base.gf) < 1e-9);
        // linearity in the boundary data
        let scaled = apply_dno(&f, &g.map(|v| -2.5 * v).unwrap()).unwrap().gf;
        prop_assert!(scaled.max_abs_diff(&base.gf.map(|v| -2.5 * v).unwrap()) < 1e-9);
        // index translation
        let s = 5;
        let shifted = apply_dno(&f.shift(s), &g.shift(s)).unwrap().gf;
        prop_assert!(shifted.max_abs_diff(&base.gf.shift(s)) < 1e-9);
        prop_assert!(base.pairing >= -1e-10 * g.l2_norm().powi(2));
    }

    #[test]
    fn density_has_zero_mean(fc in coeffs(3, 0.5), gc in coeffs(4, 1.0)) {
        let f = trig(32, &fc, 0.0);
        let rhs = dft_derivative(&trig(32, &gc, 0.0)).unwrap();
        let theta = solve_theta(&f, &rhs, 1e-12).unwrap().theta;
        prop_assert!(theta.mean().abs() < 1e-12);
    }

    #[test]
    fn single_step_respects_extrema(fc in coeffs(4, 0.5), scheme in prop_oneof![Just(Scheme::Euler), Just(Scheme::Heun)]) {
        let f = trig(32, &fc, 0.0);
        let state = InterfaceState::new(f.clone(), 1.0, 0.01).unwrap();
        let next = step_scheme(&state, 1e-3, scheme).unwrap().f;
        prop_assert!(next.max() <= f.max() + 1e-6);
        prop_assert!(next.min() >= f.min() - 1e-6);
    }
}
