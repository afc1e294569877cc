mod common;

use common::*;
use fqdyn::dynamics::{flow_matrix, horospherical, FlowSpec};
use fqdyn::margulis::*;
use fqdyn::measure::sample_truncated_block;
use fqdyn::{KMatrix, PolyLattice};

fn cusp(f: fqdyn::Field, depth: i64) -> PolyLattice {
    PolyLattice::new(KMatrix::diag_pi(f, &[-depth, depth])).unwrap()
}

#[test]
fn one_step_bound_and_u_invariance() {
    let f = f2();
    let mut r = rng(1);
    for (m, n, t) in [(1, 1, 1), (1, 1, 2), (2, 1, 1), (1, 2, 1)] {
        let p = MargulisParams::new(m, n, t).unwrap();
        let spec = FlowSpec::new(m, n, t as i64).unwrap();
        let g = flow_matrix(f, &spec);
        for _ in 0..40 {
            let x = random_unimodular(f, m + n, &mut r);
            let ax = alpha_tilde(&x, &p).unwrap();
            let s = sample_truncated_block(f, m, n, 6, &mut r);
            let u = horospherical(f, m, n, &s).unwrap();
            let ux = x.transform(&u).unwrap();
            assert_eq!(alpha_tilde(&ux, &p).unwrap(), ax);
            let y = ux.transform(&g).unwrap();
            assert!(alpha_tilde(&y, &p).unwrap() <= p.one_step_bound(2) * ax * (1.0 + 1e-12));
        }
    }
}

#[test]
fn linear_growth_on_standard_lattice() {
    let f = f2();
    for (m, n) in [(1, 1), (2, 1)] {
        let x = PolyLattice::standard(f, m + n);
        for i in 1..m + n {
            let rep = check_linear_growth(&x, m, n, i, 1, 500, 3).unwrap();
            assert_eq!(rep.fitted_c, 0.0, "m={m} n={n} i={i}");
        }
    }
}

#[test]
fn linear_growth_deep_cusp_constants() {
    let f = f2();
    let mut r = rng(2);
    let cs: Vec<f64> = (0..5)
        .map(|_| {
            // k ≡ I mod π keeps the short vector in the contracted direction
            let k = elementary_sl(f, 2, 3, 1, 3, &mut r);
            let x = cusp(f, 8).transform(&k).unwrap();
            assert_eq!(x.alpha_exponents().unwrap()[1], 8);
            check_linear_growth(&x, 1, 1, 1, 3, 4000, 5).unwrap().fitted_c
        })
        .collect();
    let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(lo > 0.0 && hi <= 4.0 * lo, "{cs:?}");
    let x = cusp(f, 8);
    let c1 = check_linear_growth(&x, 1, 1, 1, 1, 4000, 6).unwrap().fitted_c;
    for t in 2..=6 {
        let ct = check_linear_growth(&x, 1, 1, 1, t, 4000, 6).unwrap().fitted_c;
        assert!(ct / t as f64 <= 1.5 * c1, "t={t}: {ct} vs {c1}");
    }
}

#[test]
fn weight_search() {
    let f = f2();
    let samples: Vec<PolyLattice> = (0..=12).map(|k| cusp(f, k)).collect();
    let fit = fit_weights(1, 1, 3, &samples, 400, 7, 1e6).unwrap();
    assert!(fit.k.is_finite() && !fit.vacuous);
    assert_eq!(fit.log_omegas.len(), 3);
    assert_eq!((fit.log_omegas[0], fit.log_omegas[2]), (0, 0));
    let again = fit_weights(1, 1, 3, &samples, 400, 7, 1e6).unwrap();
    assert_eq!(fit.log_omegas, again.log_omegas);
    assert_eq!(fit.k, again.k);
    let flat = vec![PolyLattice::standard(f, 2); 5];
    assert!(fit_weights(1, 1, 3, &flat, 50, 7, 1e6).unwrap().vacuous);
    assert!(matches!(fit_weights(1, 1, 3, &samples, 400, 7, 1e-3), Err(fqdyn::Error::SearchFailed { .. })));
}

#[test]
fn contraction_constant_does_not_grow_with_t() {
    let f = f2();
    let samples: Vec<PolyLattice> = (0..=12).map(|k| cusp(f, k)).collect();
    let k_at = |t: u32| {
        let p = MargulisParams::new(1, 1, t).unwrap().with_threshold(2f64.powi(6));
        contraction_constant(&p, &samples, 2000, 9).unwrap()
    };
    let (k2, a2) = k_at(2);
    let (k4, a4) = k_at(4);
    assert!(a2 > 0 && a4 > 0);
    assert!(k4 <= k2 * 1.05, "K(2) = {k2}, K(4) = {k4}");
}

#[test]
fn restricted_decay() {
    let f = f2();
    let p = MargulisParams::new(1, 1, 2).unwrap();
    let x = cusp(f, 8);
    let rep = check_restricted_decay(&x, &p, 2f64.powi(7), 4, 20000, 11).unwrap();
    assert!(rep.pass, "slope {}", rep.slope);
    assert!(!rep.vacuous);
    let looser = check_restricted_decay(&x, &p, 2f64.powi(8), 4, 20000, 11).unwrap();
    for (a, b) in rep.rows.iter().zip(&looser.rows) {
        assert!(b.integral.mean <= a.integral.mean);
    }
}
