use dpc_core::bounds_two::{inner2_closed, optimal_precoded_fraction, TwoFadingInstance};
use dpc_core::sim::{analytic_rate, simulate, sweep_simulate, SchemeConfig};
use dpc_core::verify::{run_suite, Suite, VerifyOptions};
use dpc_core::{normalize, ChannelParams, FadingSet, GeneralizedParams};

fn chan(p: f64, a: &[f64]) -> ChannelParams {
    ChannelParams::new(p, FadingSet::new(a.to_vec()).unwrap()).unwrap()
}

#[test]
fn tin_and_matched_costa_estimates() {
    let c = chan(3.0, &[2.0]);
    let tin = simulate(&c, &SchemeConfig::Tin, 1_000_000, 11).unwrap();
    assert!((tin.compound_rate - 0.5 * 1.6f64.log2()).abs() < 0.01, "{}", tin.compound_rate);
    let costa = simulate(&c, &SchemeConfig::CostaMatched(2.0), 1_000_000, 11).unwrap();
    assert!((costa.compound_rate - 1.0).abs() < 0.01, "{}", costa.compound_rate);
}

#[test]
fn two_codeword_at_optimum_tracks_inner_bound() {
    let a2 = 2f64.sqrt();
    let inst = TwoFadingInstance::new(3.0, 0.0, a2).unwrap();
    let beta = 1.0 - optimal_precoded_fraction(&inst);
    let est = simulate(&chan(3.0, &[0.0, a2]), &SchemeConfig::TwoCodeword(beta), 1_000_000, 5).unwrap();
    let target = inner2_closed(&inst).unwrap().value;
    assert!((target - 0.54248).abs() < 1e-5);
    assert!((est.compound_rate - target).abs() < 0.02, "{} vs {target}", est.compound_rate);
}

#[test]
fn power_sweep_of_tin_within_three_standard_errors() {
    let grid: Vec<ChannelParams> = (0..10).map(|i| chan(0.5 * 2f64.powi(i), &[0.0, 1.5])).collect();
    let est = sweep_simulate(&grid, &SchemeConfig::Tin, 200_000, 21).unwrap();
    assert_eq!(est.len(), 10);
    for (c, e) in grid.iter().zip(&est) {
        let exact = analytic_rate(c, &SchemeConfig::Tin).unwrap();
        for (j, (r, se)) in e.per_receiver.iter().zip(&e.stderr).enumerate() {
            assert!((r - exact.per_receiver[j]).abs() <= 3.0 * se, "P={} j={j}: {r} vs {} (se {se})", c.power(), exact.per_receiver[j]);
        }
    }
}

#[test]
fn generalized_channel_feeds_every_bound() {
    let g = GeneralizedParams {
        power: 30.0,
        state_power: 4.0,
        noise_power: 2.0,
        fading: vec![0.5, 3.0],
    };
    let c = normalize(&g).unwrap();
    assert!((c.power() - 15.0).abs() < 1e-12);
    let inst = TwoFadingInstance::from_channel(&c).unwrap();
    assert!((inst.a2() - 3.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!(inner2_closed(&inst).unwrap().value > 0.0);
}

#[test]
fn every_suite_passes_at_small_density() {
    let opts = VerifyOptions {
        grid: 6,
        max_m: 3,
        ..VerifyOptions::default()
    };
    for suite in Suite::ALL {
        let report = run_suite(suite, &opts).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{suite}: {} worst slack {}", c.name, c.worst_slack);
            assert!(c.cases > 0, "{suite}: {} checked nothing", c.name);
        }
    }
}
