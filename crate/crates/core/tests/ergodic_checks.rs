use std::sync::Arc;

use horolab::cocycle::{estimate_lambda, u00};
use horolab::ergodic::{birkhoff_starts, c_t_field, CtConfig};
use horolab::ode::FlowConfig;
use horolab::sl2::GroupElement;
use horolab::surface::{invariant_bump, FuchsianGroup, Observable};
use horolab::timechange::{BumpSpec, HorocycleFlow, TimeChange};

fn bump_flow() -> HorocycleFlow {
    let g = Arc::new(FuchsianGroup::bolza());
    let tc = TimeChange::bump_sum(&g, &[BumpSpec { center: GroupElement::IDENTITY, width: 0.7 }], 0.3).unwrap();
    HorocycleFlow::new(g, tc, FlowConfig::default()).unwrap()
}

#[test]
fn time_and_space_averages_agree() {
    let m = bump_flow();
    let g = m.group();
    // The observable overlaps the time-change bump so ρ matters.
    let c = g.reduce(&GroupElement::geodesic(0.4).unwrap()).unwrap();
    let f = Observable::bump(invariant_bump(g, &c, 0.6).unwrap());

    let samples = g.sample_liouville(400_000, 31);
    let w = m.measure_weights(&samples);
    let space = w.integrate(&samples.iter().map(|x| f.value(x)).collect::<Vec<_>>());
    // ∫ρ⁻¹ dμ · ∫ρ dμ̃ = 1.
    assert!((w.inv_rho_mean * w.rho_mean_liouville - 1.0).abs() < 1e-10);

    let starts = g.sample_liouville(10, 32);
    let mut spreads = Vec::new();
    let mut last = None;
    for horizon in [1e3, 1e4, 1e5] {
        let ens = birkhoff_starts(&m, &f, &starts, horizon, 0.1).unwrap();
        spreads.push(ens.variance_across_starts);
        last = Some(ens);
    }
    let time = last.unwrap();
    let combined = (time.std_error.powi(2) + space.std_error.powi(2)).sqrt();
    assert!((time.mean - space.mean).abs() <= 3.0 * combined, "{} vs {} (se {combined})", time.mean, space.mean);
    assert!(spreads[1] < spreads[0] && spreads[2] < spreads[1], "{spreads:?}");
}

#[test]
fn u00_and_ct_average_to_one() {
    let m = bump_flow();
    let g = m.group();
    let samples = g.sample_liouville(100_000, 41);
    let w = m.measure_weights(&samples);
    let u: Vec<f64> = samples.iter().map(|x| u00(&m, x).unwrap()).collect();
    let est = w.integrate(&u);
    assert!((est.mean - 1.0).abs() < 1e-3, "{est:?}");
    assert!(u.iter().all(|v| *v > 0.0));

    let few = &samples[..2000];
    let wf = m.measure_weights(few);
    let ct: Vec<f64> = few.iter().map(|x| c_t_field(&m, 1.0, x, &CtConfig { step: 0.05, ..Default::default() }).unwrap().c_t).collect();
    assert!(ct.iter().all(|v| *v > 0.0));
    let avg = wf.integrate(&ct);
    assert!((avg.mean - 1.0).abs() < 1e-3 + 3.0 * avg.std_error, "{avg:?}");
}

#[test]
fn lambda_under_bump_time_change() {
    let m = bump_flow();
    for x in m.group().sample_liouville(5, 51) {
        let est = estimate_lambda(&m, &x, 1.0, 1e4).unwrap();
        assert!((est.lambda - std::f64::consts::E).abs() < 0.05, "{est:?}");
    }
}
