//! Experiment configuration files and result persistence.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::analysis::FitSummary;
use crate::gate_ir::{CompilationStrategy, SequenceName, XbarVariant};
use crate::lindblad::{
    del_err_from_phase_error, eps_err_from_rotation_error, FidelityCurve, InitialState, NoiseModel,
    DEFAULT_QUASISTATIC_SIGMA,
};
use crate::lowering::InterferenceModel;

pub const DEFAULT_TAU_NS: f64 = 56.8;
pub const DEFAULT_SHOTS: u64 = 800;
pub const DEFAULT_DT_NS: f64 = 0.1;
pub const DEFAULT_LIFETIME_US: f64 = 100.0;
/// Default cycle grid, in units of four pulse slots.
pub const DEFAULT_MAX_CYCLES: usize = 320;
pub const DEFAULT_ROTATION_ERROR_RAD: f64 = 0.01;
pub const DEFAULT_PHASE_ERROR_RAD: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// A lifetime in µs that may be infinite, written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lifetime(pub f64);

impl Serialize for Lifetime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Lifetime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Lifetime;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number of microseconds or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Lifetime, E> {
                Ok(Lifetime(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Lifetime, E> {
                Ok(Lifetime(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Lifetime, E> {
                Ok(Lifetime(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Lifetime, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(Lifetime(f64::INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub name: SequenceName,
    #[serde(default = "default_strategy")]
    pub strategy: CompilationStrategy,
}

fn default_strategy() -> CompilationStrategy {
    CompilationStrategy::Symmetric
}

impl SequenceEntry {
    pub fn new(name: SequenceName, strategy: CompilationStrategy) -> Self {
        Self { name, strategy }
    }
}

/// Interference settings as written in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterferenceConfig {
    None,
    /// `extension_ns` defaults to half the gate duration.
    TailOverlap {
        #[serde(default)]
        extension_ns: Option<f64>,
    },
    Echo {
        reflection_amplitude: f64,
        delay_ns: f64,
        phase_shift_rad: f64,
    },
}

impl InterferenceConfig {
    pub fn resolve(&self, t_g_ns: f64) -> InterferenceModel {
        match *self {
            InterferenceConfig::None => InterferenceModel::None,
            InterferenceConfig::TailOverlap { extension_ns } => InterferenceModel::TailOverlap {
                extension_ns: extension_ns.unwrap_or(t_g_ns / 2.0),
            },
            InterferenceConfig::Echo {
                reflection_amplitude,
                delay_ns,
                phase_shift_rad,
            } => InterferenceModel::Echo {
                reflection_amplitude,
                delay_ns,
                phase_shift_rad,
            },
        }
    }
}

/// Noise settings as written in a config file; `null` or missing fields
/// take their documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(rename = "T1_us", default)]
    pub t1_us: Option<Lifetime>,
    #[serde(rename = "Tphi_us", default)]
    pub tphi_us: Option<Lifetime>,
    #[serde(default)]
    pub eps_err_rad_per_ns: Option<f64>,
    #[serde(default)]
    pub del_err_rad_per_ns: Option<f64>,
    #[serde(default)]
    pub quasistatic_sigma_rad_per_ns: Option<f64>,
    #[serde(default)]
    pub interference: Option<InterferenceConfig>,
}

impl NoiseConfig {
    /// Everything explicitly switched off.
    pub fn noiseless() -> Self {
        Self {
            t1_us: Some(Lifetime(f64::INFINITY)),
            tphi_us: Some(Lifetime(f64::INFINITY)),
            eps_err_rad_per_ns: Some(0.0),
            del_err_rad_per_ns: Some(0.0),
            quasistatic_sigma_rad_per_ns: Some(0.0),
            interference: Some(InterferenceConfig::None),
        }
    }

    pub fn resolve(&self, t_g_ns: f64) -> NoiseModel {
        NoiseModel {
            t1_us: self.t1_us.map_or(DEFAULT_LIFETIME_US, |l| l.0),
            tphi_us: self.tphi_us.map_or(DEFAULT_LIFETIME_US, |l| l.0),
            eps_err: self
                .eps_err_rad_per_ns
                .unwrap_or_else(|| eps_err_from_rotation_error(DEFAULT_ROTATION_ERROR_RAD, t_g_ns)),
            del_err: self
                .del_err_rad_per_ns
                .unwrap_or_else(|| del_err_from_phase_error(DEFAULT_PHASE_ERROR_RAD, t_g_ns)),
            quasistatic_sigma: self.quasistatic_sigma_rad_per_ns.unwrap_or(DEFAULT_QUASISTATIC_SIGMA),
            interference: self
                .interference
                .unwrap_or(InterferenceConfig::TailOverlap { extension_ns: None })
                .resolve(t_g_ns),
        }
    }
}

/// A full sweep description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sequences: Vec<SequenceEntry>,
    #[serde(default = "default_multipliers")]
    pub spacing_multipliers: Vec<f64>,
    #[serde(default)]
    pub tau_ns: Option<f64>,
    /// Gate duration; defaults to `tau_ns` (back-to-back pulses).
    #[serde(default)]
    pub t_g_ns: Option<f64>,
    /// In units of four pulse slots; two-pulse sequences report twice as many cycles.
    #[serde(default)]
    pub cycle_counts: Option<Vec<usize>>,
    #[serde(default)]
    pub initial_states: Option<Vec<InitialState>>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dt_ns: Option<f64>,
    #[serde(default)]
    pub physical_preparation: bool,
    #[serde(default)]
    pub xbar_variant: XbarVariant,
    #[serde(default)]
    pub output_path: Option<String>,
}

fn default_multipliers() -> Vec<f64> {
    vec![1.0]
}

impl ExperimentConfig {
    pub fn new(sequences: Vec<SequenceEntry>) -> Self {
        Self {
            sequences,
            spacing_multipliers: default_multipliers(),
            tau_ns: None,
            t_g_ns: None,
            cycle_counts: None,
            initial_states: None,
            noise: NoiseConfig::default(),
            shots: None,
            seed: 0,
            dt_ns: None,
            physical_preparation: false,
            xbar_variant: XbarVariant::default(),
            output_path: None,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau_ns.unwrap_or(DEFAULT_TAU_NS)
    }

    pub fn gate_duration(&self) -> f64 {
        self.t_g_ns.unwrap_or_else(|| self.tau())
    }

    pub fn cycles(&self) -> Vec<usize> {
        self.cycle_counts
            .clone()
            .unwrap_or_else(|| (1..=DEFAULT_MAX_CYCLES).collect())
    }

    pub fn states(&self) -> Vec<InitialState> {
        self.initial_states
            .clone()
            .unwrap_or_else(|| vec![InitialState::Plus])
    }

    pub fn shot_count(&self) -> u64 {
        self.shots.unwrap_or(DEFAULT_SHOTS)
    }

    pub fn dt(&self) -> f64 {
        self.dt_ns.unwrap_or(DEFAULT_DT_NS)
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.resolve(self.gate_duration())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sequences.is_empty() {
            return Err(invalid("sequences", "at least one sequence is required"));
        }
        for (i, s) in self.sequences.iter().enumerate() {
            if matches!(s.name, SequenceName::UR4 | SequenceName::XXbar)
                && s.strategy == CompilationStrategy::Asymmetric
            {
                return Err(invalid(
                    &format!("sequences[{i}].strategy"),
                    format!("{} only has a symmetric compilation", s.name),
                ));
            }
        }
        if self.spacing_multipliers.is_empty() {
            return Err(invalid("spacing_multipliers", "must not be empty"));
        }
        let tau = self.tau();
        let t_g = self.gate_duration();
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid("tau_ns", format!("must be positive, got {tau}")));
        }
        if !(t_g > 0.0 && t_g.is_finite()) {
            return Err(invalid("t_g_ns", format!("must be positive, got {t_g}")));
        }
        if tau < t_g {
            return Err(invalid(
                "tau_ns",
                format!("tau_ns ({tau}) must be at least t_g_ns ({t_g})"),
            ));
        }
        for (i, &m) in self.spacing_multipliers.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(invalid(
                    &format!("spacing_multipliers[{i}]"),
                    format!("must be positive, got {m}"),
                ));
            }
            if m * tau < t_g - 1e-9 {
                return Err(invalid(
                    &format!("spacing_multipliers[{i}]"),
                    format!("spacing {m} x tau_ns ({tau}) is shorter than t_g_ns ({t_g})"),
                ));
            }
        }
        let cycles = self.cycles();
        if cycles.is_empty() {
            return Err(invalid("cycle_counts", "must not be empty"));
        }
        if let Some(i) = cycles.windows(2).position(|w| w[0] >= w[1]) {
            return Err(invalid(
                &format!("cycle_counts[{}]", i + 1),
                "cycle counts must be strictly increasing",
            ));
        }
        if self.states().is_empty() {
            return Err(invalid("initial_states", "must not be empty"));
        }
        let dt = self.dt();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt_ns", format!("must be positive, got {dt}")));
        }
        let noise = self.noise_model();
        noise.validate().map_err(|m| invalid("noise", m))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Parse {
            field: if path == "." { "<root>".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn save_config(cfg: &ExperimentConfig, path: impl AsRef<Path>) -> Result<(), ConfigError> {
    write_file(path.as_ref(), cfg.to_json().as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ConfigError> {
    let io_err = |source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    fs::write(path, bytes).map_err(io_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultSource {
    /// Taken from the reference experiment.
    Experimental,
    /// Chosen for the simulation; not an experimental value.
    Assumed,
}

/// Where a configurable value's default comes from and whether it was set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub field: String,
    pub value: serde_json::Value,
    pub default_source: DefaultSource,
    pub overridden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch, only recorded when supplied so that
    /// repeated runs produce identical files.
    pub timestamp_unix: Option<u64>,
    pub provenance: Vec<Provenance>,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, timestamp_unix: Option<u64>) -> Self {
        Self {
            config: config.clone(),
            tool: "vzsim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp_unix,
            provenance: provenance(config),
        }
    }

    /// Timestamp taken from `SOURCE_DATE_EPOCH` when set.
    pub fn timestamp_from_env() -> Option<u64> {
        std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()
    }
}

fn provenance(cfg: &ExperimentConfig) -> Vec<Provenance> {
    use serde_json::json;
    use DefaultSource::*;
    let noise = cfg.noise_model();
    let n = &cfg.noise;
    let lifetime = |v: f64| if v.is_infinite() { json!("inf") } else { json!(v) };
    vec![
        Provenance {
            field: "tau_ns".into(),
            value: json!(cfg.tau()),
            default_source: Experimental,
            overridden: cfg.tau_ns.is_some(),
        },
        Provenance {
            field: "t_g_ns".into(),
            value: json!(cfg.gate_duration()),
            default_source: Assumed,
            overridden: cfg.t_g_ns.is_some(),
        },
        Provenance {
            field: "cycle_counts".into(),
            value: json!(format!("{} counts up to {}", cfg.cycles().len(), cfg.cycles().last().copied().unwrap_or(0))),
            default_source: Experimental,
            overridden: cfg.cycle_counts.is_some(),
        },
        Provenance {
            field: "shots".into(),
            value: json!(cfg.shot_count()),
            default_source: Experimental,
            overridden: cfg.shots.is_some(),
        },
        Provenance {
            field: "initial_states".into(),
            value: json!(cfg.states()),
            default_source: Assumed,
            overridden: cfg.initial_states.is_some(),
        },
        Provenance {
            field: "dt_ns".into(),
            value: json!(cfg.dt()),
            default_source: Assumed,
            overridden: cfg.dt_ns.is_some(),
        },
        Provenance {
            field: "noise.T1_us".into(),
            value: lifetime(noise.t1_us),
            default_source: Assumed,
            overridden: n.t1_us.is_some(),
        },
        Provenance {
            field: "noise.Tphi_us".into(),
            value: lifetime(noise.tphi_us),
            default_source: Assumed,
            overridden: n.tphi_us.is_some(),
        },
        Provenance {
            field: "noise.eps_err_rad_per_ns".into(),
            value: json!(noise.eps_err),
            default_source: Assumed,
            overridden: n.eps_err_rad_per_ns.is_some(),
        },
        Provenance {
            field: "noise.del_err_rad_per_ns".into(),
            value: json!(noise.del_err),
            default_source: Assumed,
            overridden: n.del_err_rad_per_ns.is_some(),
        },
        Provenance {
            field: "noise.quasistatic_sigma_rad_per_ns".into(),
            value: json!(noise.quasistatic_sigma),
            default_source: Assumed,
            overridden: n.quasistatic_sigma_rad_per_ns.is_some(),
        },
        Provenance {
            field: "noise.interference".into(),
            value: serde_json::to_value(noise.interference).expect("interference serialises"),
            default_source: Assumed,
            overridden: n.interference.is_some(),
        },
    ]
}

pub const CSV_HEADER: [&str; 9] = [
    "sequence",
    "strategy",
    "spacing_multiplier",
    "cycles",
    "time_ns",
    "fidelity_exact",
    "fidelity_sampled",
    "shots",
    "seed",
];

/// Nine significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// CSV rows for a set of curves.
pub fn curves_to_csv(curves: &[FidelityCurve]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for c in curves {
        for p in &c.points {
            w.write_record([
                c.sequence_column(),
                c.strategy.as_str().to_string(),
                format_float(c.spacing_multiplier),
                p.cycles.to_string(),
                format_float(p.time_ns),
                format_float(p.fidelity_exact),
                p.fidelity_sampled.map(format_float).unwrap_or_default(),
                p.shots.to_string(),
                p.seed.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

#[derive(Serialize)]
struct Sidecar<'a> {
    manifest: &'a RunManifest,
    fits: &'a [FitSummary],
}

/// The JSON sidecar path for a CSV path.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Write the CSV at `path` and fits plus manifest next to it as `.json`.
pub fn write_results(
    curves: &[FidelityCurve],
    fits: &[FitSummary],
    manifest: &RunManifest,
    path: impl AsRef<Path>,
) -> Result<(), ConfigError> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(&Sidecar { manifest, fits }).expect("sidecar serialises");
    json.push('\n');
    write_file(path, curves_to_csv(curves).as_bytes())?;
    write_file(&sidecar_path(path), json.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"sequences": [{"name": "XY4", "strategy": "asym"}]}"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.tau(), 56.8);
        assert_eq!(cfg.gate_duration(), 56.8);
        assert_eq!(cfg.shot_count(), 800);
        assert_eq!(cfg.cycles().len(), 320);
        assert_eq!(cfg.spacing_multipliers, vec![1.0]);
        let noise = cfg.noise_model();
        assert_eq!(noise.t1_us, 100.0);
        assert!((noise.eps_err * 56.8 - 0.01).abs() < 1e-15);
        assert_eq!(noise.interference, InterferenceModel::TailOverlap { extension_ns: 28.4 });
    }

    #[test]
    fn tau_shorter_than_gate_names_both_fields() {
        let text = r#"{"sequences": [{"name": "YY"}], "tau_ns": 40, "t_g_ns": 50}"#;
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("tau_ns") && msg.contains("t_g_ns"), "{msg}");
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let text = r#"{"sequences": [{"name": "YY"}], "noise": {"T2_us": 5}}"#;
        match parse_config(text).unwrap_err() {
            ConfigError::Parse { field, message } => {
                assert!(field.starts_with("noise"), "{field}");
                assert!(message.contains("T2_us"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn type_errors_carry_path() {
        let text = r#"{"sequences": [{"name": "YY", "strategy": "both"}]}"#;
        match parse_config(text).unwrap_err() {
            ConfigError::Parse { field, .. } => assert_eq!(field, "sequences[0].strategy"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn invariant_violations() {
        for text in [
            r#"{"sequences": []}"#,
            r#"{"sequences": [{"name": "YY"}], "cycle_counts": [1, 3, 3]}"#,
            r#"{"sequences": [{"name": "YY"}], "cycle_counts": []}"#,
            r#"{"sequences": [{"name": "UR4", "strategy": "asym"}]}"#,
            r#"{"sequences": [{"name": "YY"}], "spacing_multipliers": [0.5]}"#,
            r#"{"sequences": [{"name": "YY"}], "noise": {"T1_us": -1}}"#,
            r#"{"sequences": [{"name": "YY"}], "dt_ns": 0}"#,
            r#"[]"#,
            r#"{"sequences": [{"name": "YY"}]"#,
        ] {
            assert!(parse_config(text).is_err(), "{text}");
        }
    }

    #[test]
    fn infinite_lifetime_round_trips() {
        let text = r#"{"sequences": [{"name": "YY"}], "noise": {"Tphi_us": "inf"}}"#;
        let cfg = parse_config(text).unwrap();
        assert!(cfg.noise_model().tphi_us.is_infinite());
        let again = parse_config(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert!(cfg.to_json().contains("\"inf\""));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.noise.interference = Some(InterferenceConfig::Echo {
            reflection_amplitude: 0.1,
            delay_ns: 5.0,
            phase_shift_rad: 0.3,
        });
        save_config(&cfg, &path).unwrap();
        let loaded = load_config(&path).unwrap();
        assert_eq!(loaded, cfg);
        assert_eq!(fs::read_to_string(&path).unwrap(), loaded.to_json());
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_config("/nonexistent/config.json").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/config.json"));
    }

    #[test]
    fn manifest_flags_every_noise_default() {
        let cfg = parse_config(MINIMAL).unwrap();
        let m = RunManifest::new(&cfg, None);
        for field in ["T1_us", "Tphi_us", "eps_err_rad_per_ns", "del_err_rad_per_ns", "quasistatic_sigma_rad_per_ns", "interference"] {
            let p = m.provenance.iter().find(|p| p.field == format!("noise.{field}")).unwrap();
            assert_eq!(p.default_source, DefaultSource::Assumed);
            assert!(!p.overridden);
        }
        let tau = m.provenance.iter().find(|p| p.field == "tau_ns").unwrap();
        assert_eq!(tau.default_source, DefaultSource::Experimental);
    }

    #[test]
    fn empty_results_are_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let cfg = parse_config(MINIMAL).unwrap();
        write_results(&[], &[], &RunManifest::new(&cfg, None), &path).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            "sequence,strategy,spacing_multiplier,cycles,time_ns,fidelity_exact,fidelity_sampled,shots,seed\n"
        );
        let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
        assert!(sidecar["fits"].as_array().unwrap().is_empty());
        assert_eq!(sidecar["manifest"]["timestamp_unix"], serde_json::Value::Null);
    }

    #[test]
    fn float_format_has_nine_significant_digits() {
        assert_eq!(format_float(0.123456789123), "1.23456789e-1");
        assert_eq!(format_float(1.0), "1.00000000e0");
    }
}
