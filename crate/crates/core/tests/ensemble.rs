use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vzsim::analysis::{compare_decay_constants, fit_decay};
use vzsim::gate_ir::{build_sequence, CompilationStrategy, SequenceName};
use vzsim::lindblad::{
    del_err_from_phase_error, eps_err_from_rotation_error, simulate_curve, InitialState, NoiseModel, ProtocolSettings,
};

const TAU: f64 = 56.8;

#[test]
fn xy4_and_ur4_decay_constants_at_wide_spacing() {
    let spacing = 3.0 * TAU;
    let settings = ProtocolSettings::new(spacing, TAU, 0.1).unwrap();
    let counts: Vec<usize> = (1..=160).collect();
    let xy4 = build_sequence(SequenceName::XY4, CompilationStrategy::Symmetric, spacing).unwrap();
    let ur4 = build_sequence(SequenceName::UR4, CompilationStrategy::Symmetric, spacing).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut fits = Vec::new();
    for _ in 0..32 {
        let noise = NoiseModel {
            t1_us: rng.random_range(50.0..200.0),
            tphi_us: rng.random_range(50.0..200.0),
            eps_err: eps_err_from_rotation_error(rng.random_range(-0.02..0.02), TAU),
            del_err: del_err_from_phase_error(rng.random_range(-0.02..0.02), TAU),
            quasistatic_sigma: 0.0,
            ..NoiseModel::default_for_gate(TAU)
        };
        for (label, cycle) in [("XY4:sym", &xy4), ("UR4", &ur4)] {
            let f = simulate_curve(InitialState::Plus, cycle, &counts, &noise, &settings).unwrap();
            let t: Vec<f64> = counts.iter().map(|&n| n as f64 * 4.0 * spacing).collect();
            fits.push((label.to_string(), fit_decay(&t, &f).unwrap()));
        }
    }
    let report = compare_decay_constants(&fits);
    println!("{report}");
    let p = &report.pairs[0];
    assert_eq!(p.compared, 32);
    let mean = |label: &str| {
        let (_, t) = report.decay_times.iter().find(|(l, _)| l == label).unwrap();
        t.iter().sum::<f64>() / t.len() as f64
    };
    let (xy4_mean, ur4_mean) = (mean("XY4:sym"), mean("UR4"));
    assert!((xy4_mean - ur4_mean).abs() / ur4_mean < 0.05, "{xy4_mean} vs {ur4_mean}");
}
