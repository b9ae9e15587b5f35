use iscc_core::signal::generate_csi_trace;
use iscc_core::stats::fit::onset_schedule;
use iscc_core::stats::{default_model, fit_model_params, FitConfig};

#[test]
fn recovers_known_parameters() {
    let truth = default_model();
    let rates = [150.0, 200.0, 300.0];
    let taus = [0.2, 0.3, 0.4, 0.5, 0.6];
    let sched = onset_schedule(&truth, 300, 2.5, 2.0);
    let traces: Vec<_> = rates
        .iter()
        .enumerate()
        .map(|(k, &f)| generate_csi_trace(&truth, &sched, f, 100 + k as u64).unwrap())
        .collect();
    let grid: Vec<_> = rates
        .iter()
        .flat_map(|&f| taus.iter().map(move |&t| (f, t)))
        .collect();
    let rep = fit_model_params(&traces, &grid, &FitConfig::for_model(&truth)).unwrap();
    for c in &rep.params.classes {
        let t = truth.class(c.class_id).unwrap();
        assert!(
            (c.lambda / t.lambda - 1.0).abs() < 0.05,
            "class {} lambda {} vs {}",
            c.class_id,
            c.lambda,
            t.lambda
        );
        let q: f64 = if c.class_id == 1 { 2.5 / 4.5 } else { 2.0 / 4.5 / 7.0 };
        assert!((c.q - q).abs() < 0.05 * q);
    }
    assert!(rep.worst_nmse() < 0.1, "{:?}", rep.quality);
}
