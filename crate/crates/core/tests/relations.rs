//! Exponent algebra against frozen high-precision values, and the β ↔ ρ′
//! correspondence as properties.

use frag_core::relations::{beta_from_rho_prime, ladder_quantities, rho_prime_from_beta};
use frag_core::{derive_relations, intensity_split};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn closed_forms() {
    let r = derive_relations(3.0).unwrap();
    assert!(close(r.gamma, 1.7320508075688772, 1e-15));
    assert!(close(r.kappa_prime, 16.0 / 3.0, 1e-15));
    assert!(close(r.alpha, 4.0 / 3.0, 1e-15));
    assert!(close(r.u, 0.5, 1e-15));
    assert!(close(r.malthus_delta, 11.0 / 6.0, 1e-15));
    let r = derive_relations(3.2).unwrap();
    assert!(close(r.alpha, 1.25, 1e-15));
    assert!(close(r.u, 0.7071067811865476, 1e-15));
    for bad in [8.0 / 3.0, 4.0, 2.0, f64::NAN] {
        assert!(derive_relations(bad).is_err());
    }
}

// Root of (1−β)/(1+β) = sin(−πρ′/2)/sin(−π(κ′−6−ρ′)/2) at κ = 3, β = 1/2,
// and the ladder quantities there, from a 50-digit root finder.
#[test]
fn frozen_solver_values() {
    let r = derive_relations(3.0).unwrap();
    let rho = rho_prime_from_beta(0.5, &r).unwrap();
    assert!(close(rho, -0.15442095831126650, 1e-13));
    let lq = ladder_quantities(rho, &r).unwrap();
    assert!(close(lq.P_L, 0.30790785936672494, 1e-12));
    assert!(close(lq.P_R, 0.44209214063327506, 1e-12));
    assert!(close(lq.u_L, 0.25, 1e-11));
    assert!(close(lq.u_R, 0.75, 1e-11));
}

#[test]
fn endpoints() {
    let r = derive_relations(3.0).unwrap();
    assert_eq!(rho_prime_from_beta(1.0, &r).unwrap(), 0.0);
    assert_eq!(rho_prime_from_beta(-1.0, &r).unwrap(), r.rho_min());
    assert!(close(r.rho_min(), -2.0 / 3.0, 1e-15));
    let r32 = derive_relations(3.2).unwrap();
    assert!(close(rho_prime_from_beta(0.0, &r32).unwrap(), -0.5, 1e-12));
    assert!(close(beta_from_rho_prime(0.0, &r).unwrap(), 1.0, 1e-15));
    assert!(close(beta_from_rho_prime(-2.0 / 3.0, &r).unwrap(), -1.0, 1e-12));
    let lq = ladder_quantities(0.0, &r).unwrap();
    assert!(close(lq.P_L, 0.25, 1e-15));
    assert_eq!(lq.u_L, 0.0);
    assert!(close(lq.u_R, 1.0, 1e-12));
    assert!(rho_prime_from_beta(1.5, &r).is_err());
    assert!(beta_from_rho_prime(0.1, &r).is_err());
}

proptest! {
    #[test]
    fn beta_round_trip(kappa in 2.67f64..3.999, beta in -1.0f64..=1.0) {
        let r = derive_relations(kappa).unwrap();
        let rho = rho_prime_from_beta(beta, &r).unwrap();
        prop_assert!(rho >= r.rho_min() && rho <= 0.0);
        prop_assert!(close(beta_from_rho_prime(rho, &r).unwrap(), beta, 1e-10));
    }

    #[test]
    fn ladder_identities(kappa in 2.67f64..3.999, beta in -0.999f64..0.999) {
        let r = derive_relations(kappa).unwrap();
        let rho = rho_prime_from_beta(beta, &r).unwrap();
        let lq = ladder_quantities(rho, &r).unwrap();
        prop_assert!(close((lq.u_L + lq.u_R) / 2.0, r.u, 1e-9));
        prop_assert!(close(lq.u_L / lq.u_R, (1.0 - beta) / (1.0 + beta), 1e-8 * (1.0 + (1.0 - beta) / (1.0 + beta))));
        prop_assert!(lq.P_L > 0.0 && lq.P_L < 1.0 && lq.P_R > 0.0 && lq.P_R < 1.0);
        prop_assert!(close(lq.delta_L + lq.delta_R, 3.0, 1e-12));
    }

    #[test]
    fn relation_invariants(kappa in 2.67f64..3.999) {
        let r = derive_relations(kappa).unwrap();
        prop_assert!(r.alpha > 1.0 && r.alpha < 1.5);
        prop_assert!(r.u > 0.0 && r.u < 1.0);
        prop_assert!(r.malthus_delta > r.alpha && r.malthus_delta < 2.0);
        prop_assert!(r.kappa_prime > 4.0 && r.kappa_prime < 6.0);
    }

    #[test]
    fn split_invariants(kappa in 2.67f64..3.999, beta in -1.0f64..=1.0, a_lm in 0.1f64..10.0) {
        let r = derive_relations(kappa).unwrap();
        let s = intensity_split(beta, a_lm, &r).unwrap();
        prop_assert_eq!(s.a_lm, s.a_rm);
        prop_assert!(close(s.a_lp + s.a_rp, s.a_plus, 1e-12 * s.a_plus));
        prop_assert!(close(s.a_plus, 2.0 * a_lm * r.u, 1e-12 * s.a_plus));
        prop_assert!(close(s.a_lp, (1.0 - beta) / 2.0 * s.a_plus, 1e-12 * s.a_plus));
    }
}
