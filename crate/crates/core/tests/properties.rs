use std::f64::consts::TAU;

use pprobe_core::fields::{make_standard_field, random_solenoidal, GridField};
use pprobe_core::flux::{block_charge, convective_flux};
use pprobe_core::geometry::{h_value, surface_quadrature, Block, Surface};
use pprobe_core::semigroup::{heat_apply, PeriodicGrid};
use proptest::prelude::*;

fn abc(a: f64, b: f64, c: f64) -> pprobe_core::fields::StandardField<f64> {
    make_standard_field("abc", &[a, b, c]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_is_homogeneous_of_degree_minus_two(
        x in prop::array::uniform3(-4.0f64..4.0),
        lambda in 0.1f64..10.0,
    ) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let h = h_value(x).unwrap();
        let hl = h_value(x.map(|v| lambda * v)).unwrap();
        prop_assert!((hl * lambda * lambda - h).abs() <= 1e-12 * h.abs().max(1e-300) + 1e-14);
    }

    #[test]
    fn reversing_a_surface_negates_its_flux(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
        x1 in -2.0f64..2.0, r in 0.1f64..2.0,
    ) {
        let f = abc(a, b, c);
        let s = Surface::disc(x1, r).unwrap();
        let q = surface_quadrature(&s, 8);
        let fwd = convective_flux(&f, &s, &q).unwrap();
        let rev = s.reversed();
        let qr = surface_quadrature(&rev, 8);
        let back = convective_flux(&f, &rev, &qr).unwrap();
        prop_assert!((fwd + back).abs() <= 1e-12 * (1.0 + fwd.abs()));
    }

    #[test]
    fn block_charge_ignores_the_frame_shift(
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0,
        shift in prop::array::uniform3(-3.0f64..3.0),
        n in -1i32..2,
    ) {
        let f = abc(a, b, c);
        let blk = Block::<f64>::cylinder(n);
        let q0 = block_charge(&f, &blk, Some([0.0; 3]), 16);
        let q1 = block_charge(&f, &blk, Some(shift), 16);
        prop_assert!((q0 - q1).abs() <= 1e-8 * (1.0 + q0.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heat_flow_is_a_semigroup(seed in any::<u64>(), s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let g = random_solenoidal(seed, 3, 1.0, 16, TAU).unwrap();
        let f = PeriodicGrid::from_grid_field(&g);
        let two = heat_apply(&heat_apply(&f, s).unwrap(), t).unwrap();
        let one = heat_apply(&f, s + t).unwrap();
        prop_assert!(two.max_abs_diff(&one) < 1e-12);
    }

    #[test]
    fn leray_projection_is_idempotent(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let g = GridField::from_fn(16, TAU, |x| {
            [a * x[0].sin() * x[1].cos(), b * (x[0] + x[2]).cos(), c * (2.0 * x[2]).sin() + a * x[1].cos()]
        });
        let p = g.leray_project();
        let pp = p.leray_project();
        prop_assert!(p.divergence_residual() < 1e-12);
        prop_assert!(p.max_abs_diff(&pp) < 1e-13);
    }

    #[test]
    fn random_fields_are_reproducible(seed in any::<u64>()) {
        let a = random_solenoidal(seed, 2, 1.0, 8, TAU).unwrap();
        let b = random_solenoidal(seed, 2, 1.0, 8, TAU).unwrap();
        prop_assert_eq!(a.to_bytes(), b.to_bytes());
    }
}

#[test]
fn heat_rejects_negative_time() {
    let f = PeriodicGrid::from_fn([8, 1, 1], [TAU, 1.0, 1.0], 1, |x| vec![x[0].cos()]);
    assert!(heat_apply(&f, -1.0).is_err());
}
