mod common;

use common::cfg;
use iscc_core::experiment::{run_scheme, run_sweep, series, write_residual_csv, write_sweep_csv, Scheme, SweepAxis, SweepSpec};
use iscc_core::scenario::{generate_scenario, Scenario, ScenarioParams};

fn reference(seed: u64) -> Scenario {
    generate_scenario(&ScenarioParams::default(), seed).unwrap()
}

fn acc(s: &Scenario, scheme: Scheme) -> f64 {
    run_scheme(s, scheme, &cfg(), None).unwrap().solution.accuracy
}

#[test]
fn scheme_names_round_trip() {
    for s in common::SCHEMES {
        assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
    }
    assert_eq!("fixed_tau=0.3".parse::<Scheme>().unwrap(), Scheme::FixedTau(0.3));
    for bad in ["", "optimal", "fixed-tau=", "fixed-tau=-1", "fixed-tau=abc"] {
        assert!(bad.parse::<Scheme>().is_err(), "{bad}");
    }
}

#[test]
fn axis_names_round_trip() {
    for a in [
        SweepAxis::EdgeCompute,
        SweepAxis::StaticProb,
        SweepAxis::PermittedDelay,
        SweepAxis::DeviceCount,
    ] {
        assert_eq!(a.to_string().parse::<SweepAxis>().unwrap(), a);
    }
    assert!("latency".parse::<SweepAxis>().is_err());
}

#[test]
fn single_value_sweep_equals_run_scheme() {
    let s = reference(0);
    for (axis, v) in [
        (SweepAxis::EdgeCompute, 20e9),
        (SweepAxis::StaticProb, 0.3),
        (SweepAxis::PermittedDelay, 0.4),
        (SweepAxis::DeviceCount, 16.0),
    ] {
        let spec = SweepSpec {
            axis,
            values: vec![v],
            schemes: common::SCHEMES.to_vec(),
        };
        let rows = run_sweep(&s, &spec, &cfg()).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, scheme) in rows.iter().zip(common::SCHEMES) {
            let run = run_scheme(&spec.point(&s, v).unwrap(), scheme, &cfg(), None).unwrap();
            assert_eq!(row.scheme, scheme.to_string());
            assert_eq!(row.axis, v);
            assert_eq!(row.accuracy, run.solution.accuracy);
            assert_eq!(row.iterations, run.solution.iterations);
            assert_eq!(row.converged, run.solution.converged);
        }
    }
}

#[test]
fn sweep_rejects_bad_specs() {
    let s = reference(0);
    let bad = [
        SweepSpec { axis: SweepAxis::EdgeCompute, values: vec![], schemes: vec![Scheme::Proposed] },
        SweepSpec { axis: SweepAxis::EdgeCompute, values: vec![2e10, 1e10], schemes: vec![Scheme::Proposed] },
        SweepSpec { axis: SweepAxis::EdgeCompute, values: vec![1e10], schemes: vec![] },
        SweepSpec { axis: SweepAxis::DeviceCount, values: vec![2.5], schemes: vec![Scheme::Proposed] },
    ];
    for spec in bad {
        assert!(run_sweep(&s, &spec, &cfg()).is_err());
    }
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let spec = SweepSpec {
        axis: SweepAxis::PermittedDelay,
        values: vec![0.3, 0.55],
        schemes: common::SCHEMES.to_vec(),
    };
    let bytes = || {
        let rows = run_sweep(&reference(4), &spec, &cfg()).unwrap();
        let mut out = Vec::new();
        write_sweep_csv(&rows, &mut out).unwrap();
        out
    };
    let a = bytes();
    assert_eq!(a, bytes());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("axis,scheme,accuracy,iterations,converged\n"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn residual_csv_is_in_cycles_per_second() {
    let run = run_scheme(&reference(0), Scheme::Proposed, &cfg(), None).unwrap();
    let mut out = Vec::new();
    write_residual_csv(&run, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iteration,residual"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    let r: f64 = first[1].parse().unwrap();
    assert_eq!(r, run.state.residual_history[0] * run.unit);
    assert_eq!(text.lines().count(), run.state.residual_history.len() + 1);
}

#[test]
fn mismatched_table_rejected() {
    let s = reference(0);
    let mut other = s.clone();
    other.system.p_min = 0.05;
    let t = other.detection_table();
    assert!(run_scheme(&s, Scheme::Proposed, &cfg(), Some(&t)).is_err());
}

#[test]
fn abundant_resources_order_the_schemes() {
    let s = reference(0).with_edge_compute(200e9);
    let p = acc(&s, Scheme::Proposed);
    let f3 = acc(&s, Scheme::FixedTau(0.3));
    let f5 = acc(&s, Scheme::FixedTau(0.5));
    let c = acc(&s, Scheme::Conventional);
    assert!(p >= f3 && p >= f5);
    assert!(f3.min(f5) >= c);
}

#[test]
fn scarce_edge_favours_the_proposed_scheme() {
    for seed in 0..3 {
        let s = reference(seed).with_edge_compute(15e9);
        assert!(acc(&s, Scheme::Proposed) > acc(&s, Scheme::Conventional) + 0.05);
    }
}

#[test]
fn low_static_probability_collapses_short_fixed_step() {
    let s = reference(0).with_static_prob(0.2).unwrap();
    assert!(acc(&s, Scheme::Proposed) - acc(&s, Scheme::FixedTau(0.3)) > 0.1);
}

#[test]
fn series_filters_by_scheme() {
    let spec = SweepSpec {
        axis: SweepAxis::EdgeCompute,
        values: vec![30e9, 42e9],
        schemes: vec![Scheme::Proposed, Scheme::Conventional],
    };
    let rows = run_sweep(&reference(0), &spec, &cfg()).unwrap();
    let p = series(&rows, "proposed");
    assert_eq!(p.len(), 2);
    assert!(p[0].axis < p[1].axis);
}
