use oldroyd2d::closure::{kramers_stress, KineticDistribution};
use oldroyd2d::symcalc::{
    apply_scalar, chi_cutoff, convexity_trace_ineq, cutoff_log_diff_ineq, eig, g_cutoff_log,
    inv_chi, mat_log, matrix_log_diff_ineq, relative_entropy_trace, scalar_log_ineq, tr_log,
    tr_log_chi, Exp, GCutoff, Log, Mat2, SymMat2,
};
use proptest::prelude::*;

fn spd() -> impl Strategy<Value = SymMat2> {
    (-4.0..4.0f64, -4.0..4.0f64, 0.0..std::f64::consts::PI)
        .prop_map(|(a, b, t)| SymMat2::diag(a.exp(), b.exp()).rotate(t))
}

fn sym() -> impl Strategy<Value = SymMat2> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| SymMat2::new(a, b, c))
}

fn close(a: &SymMat2, b: &SymMat2, tol: f64) -> bool {
    (*a - *b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn eigendecomposition_reconstructs(p in sym()) {
        let e = eig(&p);
        prop_assert!(e.lam1 >= e.lam2);
        prop_assert!(close(&e.reconstruct(), &p, 1e-13));
        prop_assert!((e.lam1 + e.lam2 - p.trace()).abs() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn log_and_exp_are_inverse(p in spd()) {
        let l = mat_log(&p).unwrap();
        let back = apply_scalar(f64::exp, &l).unwrap();
        prop_assert!(close(&back, &p, 1e-12));
        prop_assert!((l.trace() - tr_log(&p).unwrap()).abs() <= 1e-12 * (1.0 + l.norm()));
    }

    #[test]
    fn trace_log_is_log_det(p in spd()) {
        prop_assert!((tr_log(&p).unwrap() - p.det().ln()).abs() <= 1e-10);
    }

    #[test]
    fn inverse_is_a_spectral_function(p in spd()) {
        let a = p.inverse().unwrap();
        let b = apply_scalar(|s| 1.0 / s, &p).unwrap();
        prop_assert!(close(&a, &b, 1e-11));
    }

    #[test]
    fn cutoff_floors_the_spectrum(p in sym(), s3 in 0.01..1.0f64) {
        let c = chi_cutoff(s3, &p);
        prop_assert!(c.min_eig() >= s3 * (1.0 - 1e-12));
        prop_assert!(close(&inv_chi(s3, &p), &c.inverse().unwrap(), 1e-10));
        let trlog = tr_log_chi(s3, &p);
        prop_assert!((trlog - tr_log(&c).unwrap()).abs() <= 1e-10 * (1.0 + trlog.abs()));
        if p.min_eig() > s3 {
            prop_assert!(close(&g_cutoff_log(s3, &p), &mat_log(&p).unwrap(), 1e-12));
        }
    }

    #[test]
    fn log_inequalities_hold(a in spd(), b in spd(), x in -6.0..6.0f64, y in -6.0..6.0f64) {
        prop_assert!(scalar_log_ineq(x.exp(), y.exp()).unwrap().holds);
        prop_assert!(matrix_log_diff_ineq(&a, &b).unwrap().holds);
    }

    #[test]
    fn cutoff_inequality_holds_for_indefinite_input(a in sym(), b in sym(), s3 in 0.01..1.0f64) {
        prop_assert!(cutoff_log_diff_ineq(s3, &a, &b).holds);
    }

    #[test]
    fn trace_chains_hold(a in spd(), b in spd(), c in sym(), d in sym(), s3 in 0.01..1.0f64) {
        prop_assert!(convexity_trace_ineq(&Log, &a, &b).unwrap().holds);
        prop_assert!(convexity_trace_ineq(&GCutoff(s3), &c, &d).unwrap().holds);
        prop_assert!(convexity_trace_ineq(&Exp, &c, &d).unwrap().holds);
    }

    #[test]
    fn relative_entropy_is_nonnegative(p in spd(), alpha in 0.01..2.0f64) {
        prop_assert!(relative_entropy_trace(alpha, &p).unwrap() >= -1e-12);
    }

    #[test]
    fn stretch_of_antisymmetric_gradient_keeps_trace(p in sym(), w in -3.0..3.0f64) {
        let rot = Mat2([[0.0, w], [-w, 0.0]]);
        prop_assert!(rot.stretch(&p).trace().abs() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn kramers_stress_is_symmetric_and_psd(
        vals in proptest::collection::vec(0.0..1.0f64, 64),
    ) {
        let d = KineticDistribution { nq: 8, qmax: 4.0, psi: vals };
        let t = kramers_stress(&d, 1.0);
        // symmetric by construction; a non-negative density gives PSD
        prop_assert!(t.min_eig() >= -1e-12 * (1.0 + t.norm()));
    }
}
