//! Property tests for the structural invariants: arithmetic accuracy,
//! staircase combinatorics, transform symmetry and root bookkeeping.

use proptest::prelude::*;

use cnlab::mop::{relation_band, staircase};
use cnlab::nikishin::{cauchy_transform, GeneratingMeasure, Interval};
use cnlab::numerics::complex::MpComplex;
use cnlab::numerics::context::PrecisionContext;
use cnlab::numerics::real::MpReal;
use cnlab::toeplitz::{roots_sorted, BlockToeplitzOperator};

fn ctx() -> PrecisionContext {
    PrecisionContext::standard()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn real_field_laws_hold_to_ulp(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e6f64..1e6) {
        let prec = 192;
        let x = MpReal::from_f64(a, prec);
        let y = MpReal::from_f64(b, prec);
        let z = MpReal::from_f64(c, prec);
        let assoc = x.add_r(&y).add_r(&z).sub_r(&x.add_r(&y.add_r(&z))).abs();
        let scale = x.abs().add_r(&y.abs()).add_r(&z.abs()).max_r(&MpReal::one(prec));
        prop_assert!(assoc <= MpReal::eps(prec).ldexp(8).mul_r(&scale));
        let distrib = x.mul_r(&y.add_r(&z))
            .sub_r(&x.mul_r(&y).add_r(&x.mul_r(&z)))
            .abs();
        let scale2 = x.abs().mul_r(&scale).max_r(&MpReal::one(prec));
        prop_assert!(distrib <= MpReal::eps(prec).ldexp(8).mul_r(&scale2));
    }

    #[test]
    fn decimal_roundtrip_is_faithful(v in -1e12f64..1e12, e in -20i32..20) {
        let prec = 256;
        let x = MpReal::from_f64(v, prec).ldexp(e as i64);
        let s = x.to_decimal_string(60);
        let y = MpReal::from_decimal_str(&s, prec).unwrap();
        let d = x.sub_r(&y).abs();
        let scale = x.abs().max_r(&MpReal::eps(prec));
        prop_assert!(d <= MpReal::from_f64(1e-55, prec).mul_r(&scale));
    }

    #[test]
    fn staircase_always_satisfies_ordering(n in 0usize..200, pick in 0usize..6) {
        let perms: [&[usize]; 6] = [
            &[1, 2], &[2, 1], &[1, 2, 3], &[3, 1, 2], &[2, 3, 1], &[3, 2, 1],
        ];
        let perm = perms[pick];
        let p = perm.len();
        let mi = staircase(n, p, perm).unwrap();
        prop_assert_eq!(mi.components.iter().sum::<usize>(), n);
        let ordered: Vec<usize> = perm.iter().map(|&j| mi.components[j - 1]).collect();
        for w in ordered.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        prop_assert!(*ordered.last().unwrap() + 1 >= ordered[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cauchy_transform_conjugate_symmetry(re in -3.0f64..3.0, im in 0.2f64..2.0) {
        let c = ctx();
        let prec = c.prec();
        let m = GeneratingMeasure::uniform(Interval::from_f64(-1.0, 1.0, prec).unwrap());
        let z = MpComplex::from_f64(re, im, prec);
        let v = cauchy_transform(&m, &z, &c).unwrap();
        let vc = cauchy_transform(&m, &z.conj(), &c).unwrap();
        prop_assert!((v.conj() - &vc).abs().to_f64() < 1e-60);
    }

    #[test]
    fn vieta_consistency_on_relation_bands(
        d0 in -0.8f64..0.8,
        gap in 0.2f64..1.0,
        beta in 0.3f64..1.2,
        seed in 0.05f64..0.6,
        re in -2.0f64..2.0,
        im in 0.3f64..1.5,
    ) {
        let c = ctx();
        let prec = c.prec();
        let d = vec![MpReal::from_f64(d0, prec), MpReal::from_f64(d0 + gap, prec)];
        let band = relation_band(
            &d,
            &MpReal::from_f64(beta, prec),
            &[MpReal::from_f64(seed, prec)],
            prec,
        );
        let op = BlockToeplitzOperator::from_band(2, band, prec).unwrap();
        let x = MpComplex::from_f64(re, im, prec);
        let rs = roots_sorted(&op, &x, &c).unwrap();
        prop_assert!(rs.vieta_residual(&op, &c).to_f64() < 1e-25);
        // modulus order is a total preorder: sorted ascending
        for w in rs.roots.windows(2) {
            prop_assert!(w[0].abs() <= w[1].abs().mul_r(&MpReal::from_f64(1.0 + 1e-30, prec)));
        }
    }
}
