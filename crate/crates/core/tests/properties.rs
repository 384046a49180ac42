//! Randomized identities for the double sine angle and q-Pochhammer symbols.

use num_complex::Complex64;
use proptest::prelude::*;
use qone_core::doublesine::{sigma, AngleEvaluator, LatticeClass};
use qone_core::qcore::{poch, ModulusParameters};

fn clear_of_lattice(ev: &AngleEvaluator, xs: &[Complex64]) -> bool {
    xs.iter().all(|x| matches!(ev.classify(*x, 1e-3), LatticeClass::Regular))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_and_reflection(omega in 0.2f64..3.0, re in -1.0f64..3.0, im in -4.0f64..4.0) {
        let ev = AngleEvaluator::from_omega(omega).unwrap();
        let m = *ev.modulus();
        let x = Complex64::new(re, im);
        let w = ev.w_big();
        prop_assume!(clear_of_lattice(&ev, &[x, x + 1.0, x + 1.0 / omega, w - x]));
        let a = ev.angle(x).unwrap();
        let q_shift = ev.angle(x + 1.0).unwrap() * (1.0 - m.torus_q(x));
        let big_q_shift = ev.angle(x + 1.0 / omega).unwrap() * (1.0 - m.torus_big_q(x));
        let refl = a * ev.angle(w - x).unwrap();
        let s = sigma(&m, x);
        prop_assert!((q_shift - a).norm() <= 1e-10 * a.norm(), "q-shift at {x}");
        prop_assert!((big_q_shift - a).norm() <= 1e-10 * a.norm(), "Q-shift at {x}");
        prop_assert!((refl - s).norm() <= 1e-10 * s.norm(), "reflection at {x}");
    }

    #[test]
    fn pochhammer_split(re in -2.0f64..2.0, im in -2.0f64..2.0, omega in 0.2f64..3.0, m in -6i64..6, n in -6i64..6) {
        let q = ModulusParameters::new(omega).unwrap().q;
        let x = Complex64::new(re, im);
        // (x; q)_{m+n} = (x; q)_m (x q^m; q)_n, for either sign of m and n.
        let lhs = poch(x, q, m + n);
        let first = poch(x, q, m);
        let second = poch(x * q.powi(m as i32), q, n);
        if let (Ok(lhs), Ok(a), Ok(b)) = (lhs, first, second) {
            let rhs = a * b;
            prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()), "m={m} n={n}: {lhs} vs {rhs}");
        }
    }
}
