use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vzsim::analysis::{compare_decay_constants, fit_decay, oscillation_metric, oscillation_metric_sampled, FitSummary};
use vzsim::config::{
    load_config, write_results, ExperimentConfig, InterferenceConfig, Lifetime, NoiseConfig, RunManifest,
    DEFAULT_DT_NS, DEFAULT_SHOTS, DEFAULT_TAU_NS,
};
use vzsim::frame::{fold, physically_equivalent_with, EquivalenceOptions, PulseSchedule, ScheduleConfig};
use vzsim::gate_ir::{
    compile_xbar_variant, compile_y, ideal_unitary, CompilationStrategy, Gate, GateSequence, SequenceName,
    SequenceOptions, SequenceSpec, XbarVariant,
};
use vzsim::lindblad::{run_protocol, sweep, FidelityCurve, InitialState, ProtocolSettings};
use vzsim::lowering::{lower, PulseShape};
use vzsim::su2::{format_phase, relative_phase};

#[derive(Parser)]
#[command(name = "vzsim", version, about = "Virtual-Z frame folding and pulse-level decoupling simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the time-ordered gate list of a compiled gate or one sequence cycle.
    Compile(CompileArgs),
    /// Fold a sequence's virtual Z gates into pulse phases and print the schedule.
    Fold(FoldArgs),
    /// Check whether two sequences execute the same physical pulses (exit 0 if so, 1 if not).
    Equiv(EquivArgs),
    /// Simulate one point of the prepare / decouple / measure protocol.
    Simulate(SimulateArgs),
    /// Run every curve described by a JSON config and write CSV + JSON results.
    Sweep(SweepArgs),
    /// Fit decay curves in a results CSV and compare their decay constants.
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Sym,
    Asym,
}

impl From<StrategyArg> for CompilationStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Sym => CompilationStrategy::Symmetric,
            StrategyArg::Asym => CompilationStrategy::Asymmetric,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum XbarArg {
    /// Frame order [Rz(pi), X, Rz(-pi)]
    PlusFirst,
    /// Frame order [Rz(-pi), X, Rz(pi)]
    MinusFirst,
}

impl From<XbarArg> for XbarVariant {
    fn from(x: XbarArg) -> Self {
        match x {
            XbarArg::PlusFirst => XbarVariant::PlusFirst,
            XbarArg::MinusFirst => XbarVariant::MinusFirst,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    X,
    Sx,
    Y,
    Xbar,
}

#[derive(Args)]
struct TimingArgs {
    /// Base pulse interval tau in ns [default: 56.8, the experimental value]
    #[arg(long, value_name = "NS")]
    tau_ns: Option<f64>,
    /// Pulse (gate) duration in ns [default: tau, back-to-back pulses; assumed]
    #[arg(long, value_name = "NS")]
    t_g_ns: Option<f64>,
    /// Frame ordering used to compile Xbar
    #[arg(long, value_enum, default_value = "plus-first")]
    xbar_variant: XbarArg,
}

impl TimingArgs {
    fn tau(&self) -> f64 {
        self.tau_ns.unwrap_or(DEFAULT_TAU_NS)
    }

    fn gate(&self) -> f64 {
        self.t_g_ns.unwrap_or_else(|| self.tau())
    }

    fn options(&self) -> SequenceOptions {
        SequenceOptions {
            xbar: self.xbar_variant.into(),
        }
    }

    fn schedule(&self, multiplier: f64) -> Result<ScheduleConfig, String> {
        ScheduleConfig::new(self.tau() * multiplier, self.gate()).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct CompileArgs {
    /// Gate (X, SX, Y, Xbar) or sequence (XY4, UR4, YY, XXbar, Free)
    target: String,
    /// Compilation strategy for Y
    #[arg(long, value_enum, default_value = "sym")]
    strategy: StrategyArg,
    #[command(flatten)]
    timing: TimingArgs,
}

#[derive(Args)]
struct FoldArgs {
    /// Sequence spec NAME[:sym|asym][@multiplier], e.g. XY4:asym@2
    spec: SequenceSpec,
    /// Number of cycles to fold
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// Print the schedule as JSON (phases in rad, times in ns)
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    timing: TimingArgs,
}

#[derive(Args)]
struct EquivArgs {
    /// First sequence spec, NAME[:sym|asym][@multiplier]
    a: SequenceSpec,
    /// Second sequence spec
    b: SequenceSpec,
    /// Tolerance on phases, angles and residual frame in rad
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Treat a pulse (phi, -theta) as the same drive as (phi + pi, theta)
    #[arg(long)]
    allow_angle_sign_flip: bool,
    #[command(flatten)]
    timing: TimingArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterferenceArg {
    None,
    TailOverlap,
    Echo,
}

#[derive(Args)]
struct NoiseArgs {
    /// Amplitude damping time T1 in us, or "inf" [default: 100; assumed]
    #[arg(long, value_name = "US")]
    t1_us: Option<String>,
    /// Pure dephasing time Tphi in us, or "inf" [default: 100; assumed]
    #[arg(long, value_name = "US")]
    tphi_us: Option<String>,
    /// Drive amplitude error in rad/ns [default: 0.01/t_g, a 0.01 rad over-rotation per pulse; assumed]
    #[arg(long, value_name = "RAD_PER_NS", allow_hyphen_values = true)]
    eps_err: Option<f64>,
    /// Detuning error in rad/ns [default: 0.01*pi/t_g, a 0.01 rad phase error; assumed]
    #[arg(long, value_name = "RAD_PER_NS", allow_hyphen_values = true)]
    del_err: Option<f64>,
    /// Standard deviation of the quasi-static detuning in rad/ns [default: 2*pi*5 kHz; assumed]
    #[arg(long, value_name = "RAD_PER_NS")]
    quasistatic_sigma: Option<f64>,
    /// Pulse interference model [default: tail-overlap; assumed]
    #[arg(long, value_enum)]
    interference: Option<InterferenceArg>,
    /// Gaussian tail extension in ns for tail-overlap [default: t_g/2; assumed]
    #[arg(long, value_name = "NS")]
    tail_extension_ns: Option<f64>,
    /// Echo reflection amplitude (fraction of the pulse)
    #[arg(long, default_value_t = 0.05)]
    echo_amplitude: f64,
    /// Echo delay in ns
    #[arg(long, default_value_t = 10.0, value_name = "NS")]
    echo_delay_ns: f64,
    /// Echo phase shift in rad
    #[arg(long, default_value_t = 0.0, value_name = "RAD", allow_hyphen_values = true)]
    echo_phase_rad: f64,
    /// Switch off every noise source not given explicitly
    #[arg(long)]
    noiseless: bool,
}

fn parse_lifetime(s: &str) -> Result<Lifetime, String> {
    match s {
        "inf" | "infinity" => Ok(Lifetime(f64::INFINITY)),
        _ => s
            .parse::<f64>()
            .map(Lifetime)
            .map_err(|_| format!("`{s}` is not a number or \"inf\"")),
    }
}

impl NoiseArgs {
    fn config(&self) -> Result<NoiseConfig, String> {
        let base = if self.noiseless {
            NoiseConfig::noiseless()
        } else {
            NoiseConfig::default()
        };
        let interference = self.interference.map(|kind| match kind {
            InterferenceArg::None => InterferenceConfig::None,
            InterferenceArg::TailOverlap => InterferenceConfig::TailOverlap {
                extension_ns: self.tail_extension_ns,
            },
            InterferenceArg::Echo => InterferenceConfig::Echo {
                reflection_amplitude: self.echo_amplitude,
                delay_ns: self.echo_delay_ns,
                phase_shift_rad: self.echo_phase_rad,
            },
        });
        Ok(NoiseConfig {
            t1_us: self.t1_us.as_deref().map(parse_lifetime).transpose()?.or(base.t1_us),
            tphi_us: self.tphi_us.as_deref().map(parse_lifetime).transpose()?.or(base.tphi_us),
            eps_err_rad_per_ns: self.eps_err.or(base.eps_err_rad_per_ns),
            del_err_rad_per_ns: self.del_err.or(base.del_err_rad_per_ns),
            quasistatic_sigma_rad_per_ns: self.quasistatic_sigma.or(base.quasistatic_sigma_rad_per_ns),
            interference: interference.or(base.interference),
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Sequence spec NAME[:sym|asym][@multiplier]
    spec: SequenceSpec,
    /// Number of sequence cycles
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// Initial state
    #[arg(long, default_value = "plus", value_parser = ["plus_i", "minus_i", "plus", "zero"])]
    initial: String,
    /// Measurement shots for the sampled fidelity, 0 to skip [default: 800, the experimental value]
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    /// Seed for shot sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Integration step in ns [default: 0.1; assumed]
    #[arg(long, default_value_t = DEFAULT_DT_NS, value_name = "NS")]
    dt_ns: f64,
    /// Prepare and unprepare with physical pulses instead of ideally
    #[arg(long)]
    physical_prep: bool,
    /// Pulse envelope [default: gaussian, sigma = t_g/4 truncated at +-t_g/2; assumed]
    #[arg(long, value_enum, default_value = "gaussian")]
    envelope: EnvelopeArg,
    /// Also write the drive field of the decoupling cycles as CSV (t_ns, re, im)
    #[arg(long, value_name = "PATH")]
    drive_csv: Option<PathBuf>,
    #[command(flatten)]
    timing: TimingArgs,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvelopeArg {
    Gaussian,
    CosineRamp,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config (JSON)
    config: PathBuf,
    /// Results CSV path; the JSON sidecar is written next to it [default: config output_path, else <config stem>.csv]
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Unix timestamp recorded in the manifest [default: SOURCE_DATE_EPOCH if set, else none]
    #[arg(long)]
    timestamp: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ColumnArg {
    Exact,
    Sampled,
}

#[derive(Args)]
struct FitArgs {
    /// Results CSV written by `sweep`
    csv: PathBuf,
    /// Fidelity column to fit; sampled fits apply a 3/sqrt(shots) floor to oscillation amplitudes
    #[arg(long, value_enum, default_value = "exact")]
    column: ColumnArg,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Fold(a) => cmd_fold(a),
        Command::Equiv(a) => return cmd_equiv(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Fit(a) => cmd_fit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn usage_error(message: String) -> ! {
    use clap::CommandFactory;
    Cli::command().error(clap::error::ErrorKind::InvalidValue, message).exit()
}

fn cmd_compile(a: CompileArgs) -> Result<(), String> {
    let strategy: CompilationStrategy = a.strategy.into();
    let seq = if let Ok(gate) = GateArg::from_str(&a.target, true) {
        match gate {
            GateArg::X => GateSequence::new("X", vec![Gate::x()]).map_err(|e| e.to_string())?,
            GateArg::Sx => GateSequence::new("SX", vec![Gate::sx()]).map_err(|e| e.to_string())?,
            GateArg::Y => compile_y(strategy),
            GateArg::Xbar => compile_xbar_variant(a.timing.xbar_variant.into()),
        }
    } else if let Ok(name) = a.target.parse::<SequenceName>() {
        let spec = SequenceSpec {
            name,
            strategy,
            multiplier: 1.0,
        };
        spec.build(a.timing.tau(), a.timing.options()).map_err(|e| e.to_string())?
    } else {
        usage_error(format!(
            "unknown gate or sequence `{}` (expected X, SX, Y, Xbar, XY4, UR4, YY, XXbar or Free)",
            a.target
        ));
    };
    println!("{seq}");
    Ok(())
}

fn folded(spec: &SequenceSpec, cycles: usize, timing: &TimingArgs) -> Result<(GateSequence, PulseSchedule), String> {
    let seq = spec
        .build(timing.tau(), timing.options())
        .map_err(|e| e.to_string())?
        .repeat(cycles);
    let schedule = fold(&seq, &timing.schedule(spec.multiplier)?);
    Ok((seq, schedule))
}

fn cmd_fold(a: FoldArgs) -> Result<(), String> {
    let (_, schedule) = folded(&a.spec, a.cycles, &a.timing)?;
    if a.json {
        println!("{}", schedule.to_json());
    } else {
        println!("{}", a.spec);
        println!("{schedule}");
    }
    Ok(())
}

fn cmd_equiv(a: EquivArgs) -> ExitCode {
    let (sa, fa, sb, fb) = match folded(&a.a, 1, &a.timing).and_then(|(sa, fa)| {
        let (sb, fb) = folded(&a.b, 1, &a.timing)?;
        Ok((sa, fa, sb, fb))
    }) {
        Ok(v) => v,
        Err(e) => usage_error(e),
    };
    let left: Vec<String> = std::iter::once(a.a.to_string()).chain(fa.to_string().lines().map(str::to_string)).collect();
    let right: Vec<String> = std::iter::once(a.b.to_string()).chain(fb.to_string().lines().map(str::to_string)).collect();
    let width = left.iter().map(|l| l.chars().count()).max().unwrap_or(0);
    for i in 0..left.len().max(right.len()) {
        let l = left.get(i).map_or("", String::as_str);
        let r = right.get(i).map_or("", String::as_str);
        println!("{l:<width$}  |  {r}");
    }
    let opts = EquivalenceOptions {
        tol: a.tol,
        allow_angle_sign_flip: a.allow_angle_sign_flip,
        ..EquivalenceOptions::default()
    };
    if physically_equivalent_with(&fa, &fb, &opts) {
        match relative_phase(&ideal_unitary(&sa), &ideal_unitary(&sb)) {
            Some(phase) => println!("EQUIVALENT (global phase {})", format_phase(phase)),
            None => println!("EQUIVALENT"),
        }
        ExitCode::SUCCESS
    } else {
        println!("NOT EQUIVALENT");
        ExitCode::from(1)
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), String> {
    let initial: InitialState = a.initial.parse().map_err(|e: vzsim::lindblad::ProtocolError| e.to_string())?;
    let t_g = a.timing.gate();
    let noise = a.noise.config()?.resolve(t_g);
    noise.validate()?;
    let cycle = a
        .spec
        .build(a.timing.tau(), a.timing.options())
        .map_err(|e| e.to_string())?;
    let timing = a.timing.schedule(a.spec.multiplier)?;
    let shape = match a.envelope {
        EnvelopeArg::Gaussian => PulseShape::gaussian(t_g),
        EnvelopeArg::CosineRamp => PulseShape::cosine(t_g),
    }
    .map_err(|e| e.to_string())?;
    let settings = ProtocolSettings {
        timing,
        shape,
        dt_ns: a.dt_ns,
        physical_preparation: a.physical_prep,
    };
    if let Some(path) = &a.drive_csv {
        let body = fold(&cycle.repeat(a.cycles), &timing);
        let field = lower(&body, &shape, &noise.interference, a.dt_ns).map_err(|e| e.to_string())?;
        std::fs::write(path, field.to_csv()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let r = run_protocol(initial, &cycle, a.cycles, &noise, a.shots, a.seed, &settings).map_err(|e| e.to_string())?;
    let time_ns = fold(&cycle, &timing).total_duration * a.cycles as f64;
    println!("sequence          {}", a.spec);
    println!("initial state     {initial}");
    println!("cycles            {}", a.cycles);
    println!("time_ns           {time_ns:.3}");
    println!("fidelity_exact    {:.9}", r.fidelity_exact);
    match r.fidelity_sampled {
        Some(f) => println!("fidelity_sampled  {f:.6} ({} shots, seed {})", a.shots, a.seed),
        None => println!("fidelity_sampled  -"),
    }
    Ok(())
}

fn output_path(a: &SweepArgs, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = &a.output {
        return p.clone();
    }
    if let Some(p) = &cfg.output_path {
        return PathBuf::from(p);
    }
    let stem = a.config.file_stem().map_or("results".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from(format!("{stem}.csv"))
}

fn cmd_sweep(a: SweepArgs) -> Result<(), String> {
    let cfg = load_config(&a.config).map_err(|e| e.to_string())?;
    let curves = sweep(&cfg).map_err(|e| e.to_string())?;
    let fits: Vec<FitSummary> = curves.iter().filter_map(FidelityCurve::summary).collect();
    let manifest = RunManifest::new(&cfg, a.timestamp.or_else(RunManifest::timestamp_from_env));
    let path = output_path(&a, &cfg);
    write_results(&curves, &fits, &manifest, &path).map_err(|e| e.to_string())?;
    println!("{:<28} {:>6} {:>12} {:>14} {:>14}", "curve", "points", "T_D (us)", "osc amplitude", "osc period ns");
    for c in &curves {
        match c.summary() {
            Some(s) => println!(
                "{:<28} {:>6} {:>12.4} {:>14.4e} {:>14.1}",
                s.label,
                c.points.len(),
                s.t_d_us,
                s.osc_amplitude,
                s.osc_period_ns
            ),
            None => println!("{:<28} {:>6} {:>12} {:>14} {:>14}", c.label(), c.points.len(), "-", "-", "-"),
        }
    }
    println!("wrote {} and {}", path.display(), vzsim::config::sidecar_path(&path).display());
    Ok(())
}

struct CsvCurve {
    label: String,
    ensemble: String,
    shots: u64,
    times: Vec<f64>,
    values: Vec<f64>,
}

fn read_curves(path: &Path, column: ColumnArg) -> Result<Vec<CsvCurve>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let idx = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("{}: missing column `{name}`", path.display()))
    };
    let (seq, strat, mult, time, shots) = (idx("sequence")?, idx("strategy")?, idx("spacing_multiplier")?, idx("time_ns")?, idx("shots")?);
    let value = idx(match column {
        ColumnArg::Exact => "fidelity_exact",
        ColumnArg::Sampled => "fidelity_sampled",
    })?;
    let mut curves: Vec<CsvCurve> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let r = record.map_err(|e| e.to_string())?;
        let num = |i: usize| {
            r[i].parse::<f64>()
                .map_err(|_| format!("{}: row {}: `{}` is not a number", path.display(), line + 2, &r[i]))
        };
        let m = num(mult)?;
        let label = format!("{}:{}@{}", &r[seq], &r[strat], m);
        if curves.last().is_none_or(|c| c.label != label) {
            curves.push(CsvCurve {
                ensemble: format!("{}:{}", &r[seq], &r[strat]),
                label,
                shots: r[shots].parse().unwrap_or(0),
                times: Vec::new(),
                values: Vec::new(),
            });
        }
        let c = curves.last_mut().expect("just pushed");
        c.times.push(num(time)?);
        c.values.push(num(value)?);
    }
    Ok(curves)
}

fn cmd_fit(a: FitArgs) -> Result<(), String> {
    let curves = read_curves(&a.csv, a.column)?;
    let mut fits = Vec::new();
    println!("{:<28} {:>10} {:>10} {:>12} {:>12} {:>14}", "curve", "a", "b", "T_D (us)", "rms", "osc amplitude");
    for c in &curves {
        let fit = match fit_decay(&c.times, &c.values) {
            Ok(f) => f,
            Err(e) => {
                println!("{:<28} {e}", c.label);
                continue;
            }
        };
        let osc = match a.column {
            ColumnArg::Exact => oscillation_metric(&c.times, &c.values, &fit),
            ColumnArg::Sampled => oscillation_metric_sampled(&c.times, &c.values, &fit, c.shots),
        };
        let osc = osc.map(|o| format!("{:.4e}", o.amplitude)).unwrap_or_else(|e| e.to_string());
        println!(
            "{:<28} {:>10.5} {:>10.5} {:>12.4} {:>12.3e} {:>14}",
            c.label, fit.a, fit.b, fit.t_d_us, fit.rms_residual, osc
        );
        fits.push((c.ensemble.clone(), fit));
    }
    if fits.len() >= 2 {
        println!();
        print!("{}", compare_decay_constants(&fits));
    }
    Ok(())
}
