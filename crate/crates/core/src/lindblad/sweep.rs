use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::protocol::{sample_fidelity, simulate_curve, InitialState, ProtocolError, ProtocolSettings};
use crate::analysis::{fit_decay, oscillation_metric, DecayFit, FitSummary, MIN_FIT_POINTS};
use crate::config::{ConfigError, ExperimentConfig};
use crate::frame::{fold, ScheduleConfig};
use crate::gate_ir::{build_sequence_with, CompilationStrategy, IrError, SequenceName, SequenceOptions};
use crate::lowering::PulseShape;

/// Cycle counts in a config are in units of this many pulse slots.
pub const SLOTS_PER_COUNT: usize = 4;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error("{label}: {source}")]
    Protocol {
        label: String,
        #[source]
        source: ProtocolError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub cycles: usize,
    /// Duration of the cycles alone, excluding any physical preparation.
    pub time_ns: f64,
    pub fidelity_exact: f64,
    pub fidelity_sampled: Option<f64>,
    pub shots: u64,
    /// Seed used for this point's sampling.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityCurve {
    pub sequence: SequenceName,
    pub strategy: CompilationStrategy,
    pub spacing_multiplier: f64,
    pub initial_state: InitialState,
    /// Append the initial state to the sequence column (several states swept).
    pub show_state: bool,
    pub points: Vec<CurvePoint>,
    pub fit: Option<DecayFit>,
}

impl FidelityCurve {
    pub fn sequence_column(&self) -> String {
        if self.show_state {
            format!("{}/{}", self.sequence, self.initial_state)
        } else {
            self.sequence.to_string()
        }
    }

    /// `NAME:strategy@multiplier[/state]`
    pub fn label(&self) -> String {
        let mut s = format!("{}:{}@{}", self.sequence, self.strategy, self.spacing_multiplier);
        if self.show_state {
            s.push('/');
            s.push_str(self.initial_state.as_str());
        }
        s
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.time_ns).collect()
    }

    pub fn exact(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.fidelity_exact).collect()
    }

    /// Fit and residual oscillation of the exact curve, when both are defined.
    pub fn summary(&self) -> Option<FitSummary> {
        let fit = self.fit?;
        let osc = oscillation_metric(&self.times(), &self.exact(), &fit).ok()?;
        Some(FitSummary::new(self.label(), &fit, &osc))
    }
}

struct Job {
    sequence: SequenceName,
    strategy: CompilationStrategy,
    multiplier: f64,
    state: InitialState,
    first_row: u64,
}

/// Simulate every (sequence, spacing, initial state) combination in `cfg`.
///
/// Rows are numbered in config order; row `i` samples with seed `seed ^ i`.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<FidelityCurve>, SweepError> {
    cfg.validate()?;
    let counts = cfg.cycles();
    let states = cfg.states();
    let mut jobs = Vec::new();
    let mut row = 0u64;
    for entry in &cfg.sequences {
        for &multiplier in &cfg.spacing_multipliers {
            for &state in &states {
                jobs.push(Job {
                    sequence: entry.name,
                    strategy: entry.strategy,
                    multiplier,
                    state,
                    first_row: row,
                });
                row += counts.len() as u64;
            }
        }
    }
    let noise = cfg.noise_model();
    let show_state = states.len() > 1;
    let options = SequenceOptions {
        xbar: cfg.xbar_variant,
    };
    let t_g = cfg.gate_duration();
    let shape = PulseShape::gaussian(t_g).map_err(|e| SweepError::Protocol {
        label: "pulse shape".into(),
        source: e.into(),
    })?;

    jobs.par_iter()
        .map(|job| {
            let spacing = cfg.tau() * job.multiplier;
            let cycle = build_sequence_with(job.sequence, job.strategy, spacing, options)?;
            let repeat = SLOTS_PER_COUNT / job.sequence.slots_per_cycle();
            let reported: Vec<usize> = counts.iter().map(|c| c * repeat).collect();
            let timing = ScheduleConfig::new(spacing, t_g).map_err(|e| ConfigError::Invalid {
                field: "spacing_multipliers".into(),
                message: e.to_string(),
            })?;
            let settings = ProtocolSettings {
                timing,
                shape,
                dt_ns: cfg.dt(),
                physical_preparation: cfg.physical_preparation,
            };
            let label = format!("{}:{}@{}/{}", job.sequence, job.strategy, job.multiplier, job.state);
            let fidelities = simulate_curve(job.state, &cycle, &reported, &noise, &settings)
                .map_err(|source| SweepError::Protocol { label, source })?;
            let cycle_ns = fold(&cycle, &timing).total_duration;
            let shots = cfg.shot_count();
            let points: Vec<CurvePoint> = reported
                .iter()
                .zip(fidelities)
                .enumerate()
                .map(|(i, (&cycles, f))| {
                    let seed = cfg.seed ^ (job.first_row + i as u64);
                    CurvePoint {
                        cycles,
                        time_ns: cycles as f64 * cycle_ns,
                        fidelity_exact: f,
                        fidelity_sampled: sample_fidelity(f, shots, seed),
                        shots,
                        seed,
                    }
                })
                .collect();
            let fit = if points.len() >= MIN_FIT_POINTS {
                let t: Vec<f64> = points.iter().map(|p| p.time_ns).collect();
                let y: Vec<f64> = points.iter().map(|p| p.fidelity_exact).collect();
                fit_decay(&t, &y).ok()
            } else {
                None
            };
            Ok(FidelityCurve {
                sequence: job.sequence,
                strategy: job.strategy,
                spacing_multiplier: job.multiplier,
                initial_state: job.state,
                show_state,
                points,
                fit,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, NoiseConfig, SequenceEntry};

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(vec![
            SequenceEntry::new(SequenceName::XY4, CompilationStrategy::Asymmetric),
            SequenceEntry::new(SequenceName::UR4, CompilationStrategy::Symmetric),
            SequenceEntry::new(SequenceName::YY, CompilationStrategy::Symmetric),
        ]);
        cfg.cycle_counts = Some((1..=8).collect());
        cfg.noise = NoiseConfig {
            quasistatic_sigma_rad_per_ns: Some(0.0),
            ..NoiseConfig::default()
        };
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn rows_follow_config_order_with_per_row_seeds() {
        let curves = sweep(&small_config()).unwrap();
        assert_eq!(curves.len(), 3);
        let seeds: Vec<u64> = curves.iter().flat_map(|c| c.points.iter().map(|p| p.seed)).collect();
        let expected: Vec<u64> = (0..24).map(|i| 5 ^ i).collect();
        assert_eq!(seeds, expected);
        assert!(curves.iter().all(|c| c.fit.is_some()));
    }

    #[test]
    fn two_pulse_sequences_report_twice_the_cycles() {
        let curves = sweep(&small_config()).unwrap();
        let xy4 = &curves[0];
        let yy = &curves[2];
        assert_eq!(yy.points.last().unwrap().cycles, 16);
        assert_eq!(xy4.points.last().unwrap().cycles, 8);
        for (a, b) in xy4.points.iter().zip(&yy.points) {
            assert!((a.time_ns - b.time_ns).abs() < 1e-9);
        }
    }

    #[test]
    fn asymmetric_xy4_and_ur4_agree() {
        let curves = sweep(&small_config()).unwrap();
        for (a, b) in curves[0].points.iter().zip(&curves[1].points) {
            assert!((a.fidelity_exact - b.fidelity_exact).abs() <= 1e-7);
        }
    }

    #[test]
    fn state_suffix_only_with_several_states() {
        let mut cfg = parse_config(r#"{"sequences": [{"name": "YY", "strategy": "asym"}], "cycle_counts": [1, 2], "initial_states": ["plus_i", "minus_i"], "shots": 0}"#).unwrap();
        cfg.noise = NoiseConfig::noiseless();
        let curves = sweep(&cfg).unwrap();
        assert_eq!(curves[0].sequence_column(), "YY/plus_i");
        assert_eq!(curves[1].label(), "YY:asym@1/minus_i");
        assert!(curves[0].points.iter().all(|p| p.fidelity_sampled.is_none()));
        assert!(curves[0].fit.is_none());
    }
}
