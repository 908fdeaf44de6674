use std::sync::{Arc, OnceLock};

use horolab::cocycle::{s_star, u00};
use horolab::ode::FlowConfig;
use horolab::sl2::{distance, GroupElement};
use horolab::spectral::{spectral_density, CorrelationSeries};
use horolab::surface::{invariant_bump, FuchsianGroup, Observable, PhasePoint};
use horolab::suspension::{lambda_a, susp_f, susp_wu, suspension_distance, CatSuspension, SuspensionPoint};
use horolab::timechange::{BumpSpec, HorocycleFlow, TimeChange};
use proptest::prelude::*;

fn bolza() -> &'static Arc<FuchsianGroup> {
    static G: OnceLock<Arc<FuchsianGroup>> = OnceLock::new();
    G.get_or_init(|| Arc::new(FuchsianGroup::bolza()))
}

fn bump_flow() -> &'static HorocycleFlow {
    static F: OnceLock<HorocycleFlow> = OnceLock::new();
    F.get_or_init(|| {
        let g = bolza().clone();
        let tc = TimeChange::bump_sum(&g, &[BumpSpec { center: GroupElement::IDENTITY, width: 0.7 }], 0.3).unwrap();
        HorocycleFlow::new(g, tc, FlowConfig::default()).unwrap()
    })
}

fn element() -> impl Strategy<Value = GroupElement> {
    (-3.0..3.0f64, -2.0..2.0f64, -3.0..3.0f64).prop_map(|(a, r, b)| {
        GroupElement::rotation(a).compose(&GroupElement::geodesic(r).unwrap()).compose(&GroupElement::rotation(b))
    })
}

/// A point near the fundamental domain, reduced.
fn point() -> impl Strategy<Value = PhasePoint> {
    element().prop_map(|g| bolza().reduce(&g).unwrap())
}

fn susp_point() -> impl Strategy<Value = SuspensionPoint> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b, c)| SuspensionPoint::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_law_and_unit_determinant(g in element(), h in element(), k in element()) {
        let left = g.compose(&h).compose(&k);
        let right = g.compose(&h.compose(&k));
        prop_assert!(left.projective_gap(&right) < 1e-9 * left.frobenius_sq().max(1.0));
        prop_assert!((g.compose(&h).det() - 1.0).abs() < 1e-12);
        prop_assert!(g.compose(&g.inverse()).projective_gap(&GroupElement::IDENTITY) < 1e-10);
    }

    #[test]
    fn one_parameter_subgroups(t in -5.0..5.0f64, u in -5.0..5.0f64) {
        let sum = GroupElement::geodesic(t + u).unwrap();
        let prod = GroupElement::geodesic(t).unwrap().compose(&GroupElement::geodesic(u).unwrap());
        prop_assert!(sum.projective_gap(&prod) < 1e-12 * sum.frobenius_sq());
        let sum = GroupElement::horocycle(t + u);
        let prod = GroupElement::horocycle(t).compose(&GroupElement::horocycle(u));
        prop_assert!(sum.projective_gap(&prod) < 1e-12);
    }

    #[test]
    fn reduction_is_canonical(g in element(), which in 0usize..8) {
        let x = bolza().reduce(&g).unwrap();
        prop_assert!(bolza().contains(&x.rep));
        let again = bolza().reduce(&x.rep).unwrap();
        prop_assert!(distance(&again.rep, &x.rep) < 1e-9);
        // Left translates by the group reduce to the same phase point.
        let moved = bolza().generators()[which].compose(&g);
        let y = bolza().reduce(&moved).unwrap();
        prop_assert!(bolza().quotient_distance(&x, &y).unwrap() < 1e-8);
    }

    #[test]
    fn bumps_are_invariant_and_bounded(x in point(), which in 0usize..8) {
        let b = invariant_bump(bolza(), &PhasePoint::unreduced(GroupElement::IDENTITY), 0.7).unwrap();
        let f = Observable::bump(b);
        let v = f.value(&x);
        prop_assert!((0.0..=1.0).contains(&v));
        let moved = PhasePoint::unreduced(bolza().generators()[which].compose(&x.rep));
        prop_assert!((f.value(&moved) - v).abs() < 1e-10);
    }

    #[test]
    fn rho_within_declared_bounds(x in point()) {
        let tc = bump_flow().time_change();
        prop_assert!(tc.check_bounds(&[x]) == 0.0);
        // u_{0,0} = 1 + X_f ln ρ stays positive for the test family.
        prop_assert!(1.0 + tc.log_derivative_f(&x) > 0.0);
    }

    #[test]
    fn clock_is_increasing_and_invertible(x in point(), s in -20.0..20.0f64, ds in 0.01..5.0f64) {
        let m = bump_flow();
        let a = m.tau(&x, s).unwrap();
        let b = m.tau(&x, s + ds).unwrap();
        prop_assert!(b > a);
        prop_assert!(b - a >= ds / m.time_change().max_rho() - 1e-9);
        prop_assert!(b - a <= ds / m.time_change().min_rho() + 1e-9);
        prop_assert!((m.tau_inverse(&x, a).unwrap() - s).abs() < 1e-8);
    }

    #[test]
    fn clock_cocycle(x in point(), s in -20.0..20.0f64, t in -20.0..20.0f64) {
        let m = bump_flow();
        let moved = m.flow_phi(&x, s).unwrap();
        let lhs = m.tau(&x, s + t).unwrap();
        let rhs = m.tau(&x, s).unwrap() + m.tau(&moved, t).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn expansion_cocycle_boundary_and_monotone(x in point(), t in -2.0..2.0f64, s in 0.1..30.0f64) {
        let m = bump_flow();
        prop_assert_eq!(s_star(m, 0.0, s, &x).unwrap(), s);
        prop_assert_eq!(s_star(m, t, 0.0, &x).unwrap(), 0.0);
        prop_assert!(s_star(m, t, s + 0.1, &x).unwrap() > s_star(m, t, s, &x).unwrap());
    }

    #[test]
    fn suspension_oracle(p in susp_point(), t in -3.0..3.0f64, s in -5.0..5.0f64) {
        let lhs = susp_f(&susp_wu(&p, s), t);
        let rhs = susp_wu(&susp_f(&p, t), lambda_a().powf(t) * s);
        prop_assert!(suspension_distance(&lhs, &rhs) < 1e-9);
        let st = s_star(&CatSuspension, t, s, &p).unwrap();
        prop_assert!((st - lambda_a().powf(t) * s).abs() < 1e-10 * st.abs().max(1.0));
        prop_assert!((u00(&CatSuspension, &p).unwrap() - lambda_a().ln()).abs() < 1e-6);
    }

    #[test]
    fn density_is_nonnegative_with_exact_mass(
        a in 0.1..2.0f64, b in 0.2..3.0f64, w in 0.0..4.0f64, c in 0.0..1.0f64, bw in 5.0..40.0f64
    ) {
        // Positive-definite synthetic correlation: damped cosine plus a constant.
        let series = CorrelationSeries::from_real_fn(0.05, 40.0, |s| a * (-b * s.abs()).exp() * (w * s).cos() + c).unwrap();
        for window in ["bartlett", "parzen"] {
            let est = spectral_density(&series, window, bw).unwrap();
            prop_assert!((est.total_mass - (a + c)).abs() < 1e-9 * (a + c));
            prop_assert!(est.min_density() > -1e-9 * est.max_density());
        }
        prop_assert!(series.hermitian_defect() == 0.0);
    }
}
