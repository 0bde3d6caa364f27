//! Command-line front end: configuration ingestion, run lifecycle, and
//! emission of analysis tables and plot-ready data files.
//!
//! Exit codes: 0 success, 2 usage/config errors, 3 equilibration-failure
//! quorum not met, 4 internal invariant breach, 1 anything else.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::code::{build_checkerboard, build_haah, CodeKind, Sector};
use crate::duality::{
    binary_entropy, dual_threshold, qgv_check, self_dual_point, builtin_threshold_table,
    ThresholdEntry,
};
use crate::ensemble::{
    aggregate, bundle_path, fnv1a, run_ensemble, write_atomic, write_tables, EnsembleConfig,
    RealizationBundle, RunOptions,
};
use crate::error::{Error, Result};
use crate::exact::enumerate_spectrum;
use crate::ising::{
    map_error_model, nishimori_beta, random_four_body_hypergraph, sample_disorder,
};
use crate::mc::{AcceptanceRule, ReplicaState, SpinModel};
use crate::observables::{
    blocked_std_error, reweight_histogram, total_variation, EnergyHistogram,
};
use crate::pt::{LadderScheme, PtState, TemperatureLadder};
use crate::rng::{derive_seed, StreamKey};

#[derive(Parser)]
#[command(
    name = "fracton-lab",
    version,
    about = "Disordered multi-spin Ising laboratory for fracton stabilizer codes"
)]
pub struct Cli {
    /// Worker threads for ensemble runs (default: hardware parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CodeArg {
    Checkerboard,
    Haah,
}

impl From<CodeArg> for CodeKind {
    fn from(c: CodeArg) -> CodeKind {
        match c {
            CodeArg::Checkerboard => CodeKind::Checkerboard,
            CodeArg::Haah => CodeKind::Haah,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SectorArg {
    X,
    Z,
}

impl From<SectorArg> for Sector {
    fn from(s: SectorArg) -> Sector {
        match s {
            SectorArg::X => Sector::X,
            SectorArg::Z => Sector::Z,
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Map a code sector onto its disordered Ising hypergraph file.
    Map {
        #[arg(long, value_enum)]
        code: CodeArg,
        #[arg(long)]
        l: usize,
        #[arg(long, value_enum, default_value = "x")]
        sector: SectorArg,
        #[arg(long)]
        out: PathBuf,
        /// Also export the X/Z parity matrices as text.
        #[arg(long)]
        parity_out: Option<PathBuf>,
    },
    /// Execute a disorder-ensemble run described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run directory (default: $FRACTON_LAB_RUNS or ./runs, plus an
        /// auto-generated name).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweeps between mid-flight checkpoints (sequential mode).
        #[arg(long, default_value = "4096")]
        checkpoint_interval: u64,
        /// Process realizations one at a time with mid-flight checkpoints.
        #[arg(long)]
        sequential: bool,
    },
    /// Recompute aggregate tables from the bundles stored in a run directory.
    Analyze { run_dir: PathBuf },
    /// Entropy-duality reports: threshold tables, dual rates, fixed point.
    Duality {
        /// Print the self-dual fixed point H(p*) = 1/2.
        #[arg(long)]
        self_dual: bool,
        /// Report H(p) and the dual threshold of a single rate.
        #[arg(long)]
        rate: Option<f64>,
        /// Threshold table file: `name p_x p_z [quoted_sum [quoted_err]]`.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Ground-state degeneracy exponent and logical-qubit count.
    Gsd {
        #[arg(long, value_enum)]
        code: CodeArg,
        #[arg(long)]
        l: usize,
        #[arg(long, value_enum, default_value = "x")]
        sector: SectorArg,
    },
    /// Monte Carlo versus exact-enumeration comparison suite.
    OracleCheck {
        #[arg(long, default_value = "12")]
        spins: usize,
        #[arg(long, default_value = "37")]
        seed: u64,
        #[arg(long, default_value = "1000000")]
        sweeps: u64,
        /// Negative control: corrupt the acceptance rule; the suite must
        /// then fail.
        #[arg(long, hide = true)]
        corrupt_acceptance: bool,
    },
    /// Resume an interrupted run directory.
    Resume { run_dir: PathBuf },
}

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

extern "C" fn on_signal(_: libc::c_int) {
    INTERRUPTED.store(true, Ordering::Relaxed);
}

fn install_signal_handler() {
    let handler = on_signal as *const () as libc::sighandler_t;
    unsafe {
        libc::signal(libc::SIGINT, handler);
        libc::signal(libc::SIGTERM, handler);
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::MissingConfigField(_)
                | Error::Config(_)
                | Error::InvalidArgument(_)
                | Error::InvalidLatticeSize { .. }
                | Error::InvalidProbability { .. }
                | Error::InvalidLadder(_) => 2,
                Error::AllRealizationsFailed | Error::EquilibrationQuorum { .. } => 3,
                Error::Internal(_) => 4,
                _ => 1,
            })
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Map {
            code,
            l,
            sector,
            out,
            parity_out,
        } => cmd_map(code.into(), l, sector.into(), &out, parity_out.as_deref()),
        Command::Run {
            config,
            out,
            checkpoint_interval,
            sequential,
        } => cmd_run(&config, out, checkpoint_interval, sequential),
        Command::Analyze { run_dir } => cmd_analyze(&run_dir),
        Command::Duality {
            self_dual,
            rate,
            table,
        } => cmd_duality(self_dual, rate, table.as_deref()),
        Command::Gsd { code, l, sector } => cmd_gsd(code.into(), l, sector.into()),
        Command::OracleCheck {
            spins,
            seed,
            sweeps,
            corrupt_acceptance,
        } => cmd_oracle_check(spins, seed, sweeps, corrupt_acceptance),
        Command::Resume { run_dir } => cmd_resume(&run_dir),
    }
}

// ---------------------------------------------------------------------------
// map
// ---------------------------------------------------------------------------

pub fn cmd_map(
    code: CodeKind,
    l: usize,
    sector: Sector,
    out: &Path,
    parity_out: Option<&Path>,
) -> Result<ExitCode> {
    let built = match code {
        CodeKind::Checkerboard => build_checkerboard(l)?,
        CodeKind::Haah => build_haah(l)?,
    };
    let h = map_error_model(&built, sector)?;
    let mut buf = Vec::new();
    h.write(&mut buf)?;
    write_atomic(out, &buf)?;
    println!(
        "wrote {}: {} spins, {} couplings ({} sector {})",
        out.display(),
        h.spin_count(),
        h.coupling_count(),
        code,
        sector
    );
    if let Some(path) = parity_out {
        let mut buf = Vec::new();
        built.write_parity_matrices(&mut buf)?;
        write_atomic(path, &buf)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// run config parsing
// ---------------------------------------------------------------------------

/// Parse the line-oriented `key = value` run-config format (section headers
/// in brackets are accepted and ignored for lookup).
pub fn parse_run_config(text: &str) -> Result<EnsembleConfig> {
    let mut kv = std::collections::HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            )));
        };
        kv.insert(key.trim().to_string(), value.trim().to_string());
    }

    fn required<'a>(
        kv: &'a std::collections::HashMap<String, String>,
        key: &'static str,
    ) -> Result<&'a str> {
        kv.get(key)
            .map(|s| s.as_str())
            .ok_or(Error::MissingConfigField(key))
    }
    fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
    }

    let code = match required(&kv, "code")? {
        "checkerboard" => CodeKind::Checkerboard,
        "haah" => CodeKind::Haah,
        other => return Err(Error::Config(format!("unknown code `{other}`"))),
    };
    let sector = match kv.get("sector").map(|s| s.as_str()).unwrap_or("x") {
        "x" => Sector::X,
        "z" => Sector::Z,
        other => return Err(Error::Config(format!("unknown sector `{other}`"))),
    };
    let scheme: LadderScheme = kv
        .get("scheme")
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(LadderScheme::Linear);

    Ok(EnsembleConfig {
        code,
        sector,
        l: parse("L", required(&kv, "L")?)?,
        p: parse("p", required(&kv, "p")?)?,
        n_disorder: parse("N_d", required(&kv, "N_d")?)?,
        n_temps: parse("N_T", required(&kv, "N_T")?)?,
        tau: parse("tau", required(&kv, "tau")?)?,
        beta_min: parse("beta_min", required(&kv, "beta_min")?)?,
        beta_max: parse("beta_max", required(&kv, "beta_max")?)?,
        scheme,
        swap_cadence: kv
            .get("swap_cadence")
            .map(|v| parse("swap_cadence", v))
            .transpose()?
            .unwrap_or(10),
        seed: parse("seed", required(&kv, "seed")?)?,
        measure_correlator: kv
            .get("measure_correlator")
            .map(|v| parse("measure_correlator", v))
            .transpose()?
            .unwrap_or(true),
    })
}

// ---------------------------------------------------------------------------
// manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: u64,
    pub fnv64: String,
}

/// Versioned record of a run: verbatim config, content hashes, timestamps
/// and the output-file inventory. Rewritten atomically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub magic: String,
    pub version: u32,
    pub config_text: String,
    pub config_hash: String,
    pub binary_version: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub status: String,
    pub outputs: Vec<OutputRecord>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(config_text: &str) -> Self {
        RunManifest {
            magic: "fracton-lab manifest".into(),
            version: 1,
            config_text: config_text.to_string(),
            config_hash: format!("{:016x}", fnv1a(config_text.as_bytes())),
            binary_version: env!("CARGO_PKG_VERSION").into(),
            started_unix: unix_now(),
            finished_unix: None,
            status: "running".into(),
            outputs: Vec::new(),
        }
    }

    /// Checksum every regular file under `dir` (except the manifest itself).
    pub fn take_inventory(&mut self, dir: &Path) -> Result<()> {
        self.outputs.clear();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            let mut entries: Vec<_> =
                fs::read_dir(&d)?.collect::<std::io::Result<Vec<_>>>()?;
            entries.sort_by_key(|e| e.path());
            for entry in entries {
                let path = entry.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path.file_name().and_then(|n| n.to_str()) != Some("manifest.json") {
                    let bytes = fs::read(&path)?;
                    self.outputs.push(OutputRecord {
                        path: path
                            .strip_prefix(dir)
                            .unwrap_or(&path)
                            .to_string_lossy()
                            .into_owned(),
                        bytes: bytes.len() as u64,
                        fnv64: format!("{:016x}", fnv1a(&bytes)),
                    });
                }
            }
        }
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }

    pub fn finish(&mut self, status: &str) {
        self.status = status.to_string();
        self.finished_unix = Some(unix_now());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("manifest.json"), &serde_json::to_vec_pretty(self)?)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest: RunManifest =
            serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
        if manifest.magic != "fracton-lab manifest" || manifest.version != 1 {
            return Err(Error::Format {
                path: dir.join("manifest.json").display().to_string(),
                reason: "unknown manifest format".into(),
            });
        }
        Ok(manifest)
    }
}

// ---------------------------------------------------------------------------
// run / analyze / resume
// ---------------------------------------------------------------------------

fn default_run_dir(cfg: &EnsembleConfig) -> PathBuf {
    let root = std::env::var_os("FRACTON_LAB_RUNS")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(format!(
        "{}_L{}_p{}_s{}",
        cfg.code, cfg.l, cfg.p, cfg.seed
    ))
}

pub fn cmd_run(
    config_path: &Path,
    out: Option<PathBuf>,
    checkpoint_interval: u64,
    sequential: bool,
) -> Result<ExitCode> {
    install_signal_handler();
    let text = fs::read_to_string(config_path)?;
    let cfg = parse_run_config(&text)?;
    cfg.validate()?;
    let dir = out.unwrap_or_else(|| default_run_dir(&cfg));
    fs::create_dir_all(&dir)?;

    let mut manifest = RunManifest::new(&text);
    manifest.write(&dir)?;

    let opts = RunOptions {
        out_dir: dir.clone(),
        checkpoint_interval,
        parallel: !sequential,
    };
    let outcome = run_ensemble(&cfg, &opts, &INTERRUPTED)?;
    match outcome {
        Some(result) => {
            manifest.finish("complete");
            manifest.take_inventory(&dir)?;
            manifest.write(&dir)?;
            println!(
                "run complete: {} of {} realizations kept; tables in {}",
                result.n_effective,
                result.n_total,
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        None => {
            manifest.finish("checkpointed");
            manifest.take_inventory(&dir)?;
            manifest.write(&dir)?;
            println!("interrupted: checkpoint written to {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

pub fn cmd_resume(run_dir: &Path) -> Result<ExitCode> {
    install_signal_handler();
    let manifest = RunManifest::read(run_dir)?;
    let cfg = parse_run_config(&manifest.config_text)?;
    let opts = RunOptions {
        out_dir: run_dir.to_path_buf(),
        checkpoint_interval: 4096,
        parallel: false,
    };
    let mut manifest = manifest;
    match run_ensemble(&cfg, &opts, &INTERRUPTED)? {
        Some(result) => {
            manifest.finish("complete");
            manifest.take_inventory(run_dir)?;
            manifest.write(run_dir)?;
            println!(
                "resume complete: {} of {} realizations kept",
                result.n_effective, result.n_total
            );
            Ok(ExitCode::SUCCESS)
        }
        None => {
            manifest.finish("checkpointed");
            manifest.take_inventory(run_dir)?;
            manifest.write(run_dir)?;
            println!("interrupted again: checkpoint updated");
            Ok(ExitCode::SUCCESS)
        }
    }
}

pub fn cmd_analyze(run_dir: &Path) -> Result<ExitCode> {
    let snapshot = fs::read_to_string(run_dir.join("config.cfg"))?;
    let cfg = parse_run_config(&snapshot)?;
    let mut bundles: Vec<RealizationBundle> = Vec::new();
    for i in 0..cfg.n_disorder {
        let path = bundle_path(run_dir, i);
        if path.exists() {
            bundles.push(serde_json::from_slice(&fs::read(&path)?)?);
        }
    }
    if bundles.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: bundles.len(),
        });
    }
    let result = aggregate(&cfg, &bundles)?;
    write_tables(run_dir, &result)?;
    println!(
        "analyzed {} bundles ({} kept); tables rewritten in {}",
        bundles.len(),
        result.n_effective,
        run_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// duality
// ---------------------------------------------------------------------------

fn parse_threshold_table(path: &Path) -> Result<Vec<ThresholdEntry>> {
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(Error::Format {
                path: path.display().to_string(),
                reason: format!("row `{raw}` needs `name p_x p_z [sum [err]]`"),
            });
        }
        let bad = |what: &str| Error::Format {
            path: path.display().to_string(),
            reason: format!("bad {what} in `{raw}`"),
        };
        let p_x: f64 = toks[1].parse().map_err(|_| bad("p_x"))?;
        let p_z: f64 = toks[2].parse().map_err(|_| bad("p_z"))?;
        if !(0.0..=1.0).contains(&p_x) || !(0.0..=1.0).contains(&p_z) {
            return Err(bad("rate (outside [0,1])"));
        }
        let quoted_sum = match toks.get(3) {
            Some(t) => t.parse().map_err(|_| bad("quoted sum"))?,
            None => binary_entropy(p_x)? + binary_entropy(p_z)?,
        };
        let quoted_err = toks
            .get(4)
            .map(|t| t.parse().map_err(|_| bad("quoted err")))
            .transpose()?;
        entries.push(ThresholdEntry::new(toks[0], p_x, p_z, quoted_sum, quoted_err));
    }
    Ok(entries)
}

pub fn cmd_duality(self_dual: bool, rate: Option<f64>, table: Option<&Path>) -> Result<ExitCode> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if self_dual {
        let p = self_dual_point();
        writeln!(out, "self-dual fixed point: p* = {p:.10}")?;
        writeln!(out, "H(p*) = {:.12}", binary_entropy(p)?)?;
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(p) = rate {
        let h = binary_entropy(p)?;
        writeln!(out, "H({p}) = {h:.10}")?;
        if p > 0.0 && p < 0.5 && h < 1.0 {
            writeln!(out, "dual threshold: {:.10}", dual_threshold(p)?)?;
        }
        return Ok(ExitCode::SUCCESS);
    }

    let entries = match table {
        Some(path) => parse_threshold_table(path)?,
        None => builtin_threshold_table(),
    };
    let report = qgv_check(&entries)?;
    writeln!(
        out,
        "{:<14} {:>8} {:>8} {:>10} {:>10} {:>6}",
        "code", "p_x", "p_z", "H+H", "quoted", "ok"
    )?;
    for row in &report.rows {
        writeln!(
            out,
            "{:<14} {:>8.4} {:>8.4} {:>10.4} {:>10.4} {:>6}",
            row.entry.code,
            row.entry.p_x,
            row.entry.p_z,
            row.computed_sum,
            row.entry.quoted_sum,
            if row.reproduces_quoted { "yes" } else { "NO" }
        )?;
    }
    writeln!(out)?;
    for row in &report.rows {
        writeln!(
            out,
            "qgv\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
            row.entry.code,
            row.entry.p_x,
            row.entry.p_z,
            row.computed_sum,
            row.entry.quoted_sum,
            row.reproduces_quoted,
            row.exceeds_bound
        )?;
    }
    if report.violations().count() > 0 {
        writeln!(out, "warning: entries exceed the entropy bound")?;
    }
    Ok(if report.all_reproduced() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

// ---------------------------------------------------------------------------
// gsd
// ---------------------------------------------------------------------------

pub fn cmd_gsd(code: CodeKind, l: usize, sector: Sector) -> Result<ExitCode> {
    let built = match code {
        CodeKind::Checkerboard => build_checkerboard(l)?,
        CodeKind::Haah => build_haah(l)?,
    };
    let h = map_error_model(&built, sector)?;
    let g = h.classical_gsd_exponent();
    let k = built.logical_qubit_count();
    println!("code {} L={} sector {}", code, l, sector);
    println!("classical ground-state degeneracy: 2^{g}");
    println!("logical qubits: {k}");
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

pub struct OracleCheckReport {
    pub lines: Vec<CheckLine>,
}

impl OracleCheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            s.push_str(&format!(
                "{} {} ({})\n",
                if l.pass { "PASS" } else { "FAIL" },
                l.name,
                l.detail
            ));
        }
        s.push_str(if self.passed() {
            "oracle-check: all comparisons within tolerance\n"
        } else {
            "oracle-check: FAILURES present\n"
        });
        s
    }
}

/// Run the Monte-Carlo-versus-enumeration suite on a random 4-body
/// instance: Metropolis stationarity, parallel-tempering marginals and
/// reweighting closure.
pub fn oracle_check(
    spins: usize,
    seed: u64,
    sweeps: u64,
    rule: AcceptanceRule,
) -> Result<OracleCheckReport> {
    if spins > crate::exact::MAX_ENUM_SPINS {
        return Err(Error::TooLarge {
            spins,
            cap: crate::exact::MAX_ENUM_SPINS,
        });
    }
    let h = random_four_body_hypergraph(spins, 2 * spins, seed)?;
    let d = sample_disorder(&h, 0.2, derive_seed(seed, 1))?;
    let model = SpinModel::new(&h, &d)?;
    let spectrum = enumerate_spectrum(&h, &d)?;
    let mut lines = Vec::new();

    // burn-in comparable to the measurement budget; the cold chains need it
    let therm = (sweeps / 2).clamp(20_000, 1 << 17);
    let chain = |beta: f64, tag: u64, rule: AcceptanceRule| -> (EnergyHistogram, Vec<f64>) {
        let mut replica =
            ReplicaState::new_random(&model, beta, StreamKey::root(seed).child(tag));
        for _ in 0..therm {
            replica.metropolis_sweep_with_rule(&model, rule);
        }
        let mut hist = EnergyHistogram::new(2);
        let mut series = Vec::with_capacity(sweeps as usize);
        for _ in 0..sweeps {
            replica.metropolis_sweep_with_rule(&model, rule);
            hist.record(replica.energy());
            series.push(replica.energy() as f64);
        }
        (hist, series)
    };

    // 1. Metropolis stationarity.
    for (i, beta) in [0.3, nishimori_beta(0.11)?, 1.5].into_iter().enumerate() {
        let exact = spectrum.solve(beta);
        let (hist, series) = chain(beta, 100 + i as u64, rule);
        let tv = exact.total_variation(&hist);
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let err = blocked_std_error(&series).max(1e-9);
        let dev = (mean - exact.mean_energy).abs() / err;
        lines.push(CheckLine {
            name: format!("metropolis beta={beta:.4} P(E)"),
            pass: tv <= 0.02,
            detail: format!("TV {tv:.4} <= 0.02"),
        });
        lines.push(CheckLine {
            name: format!("metropolis beta={beta:.4} <E>"),
            pass: dev <= 3.0,
            detail: format!("|dE| = {dev:.2} sigma <= 3"),
        });
    }

    // 2. Parallel-tempering marginals (always with the exact rule).
    let ladder = TemperatureLadder::new(vec![0.3, 0.7, 1.1, 1.5])?;
    let mut pt = PtState::new(&model, &ladder, StreamKey::root(seed).child(200));
    pt.micro_per_metropolis = 0;
    for _ in 0..therm / 10 {
        pt.pt_step(&model, 10);
    }
    let mut hists: Vec<EnergyHistogram> = (0..4).map(|_| EnergyHistogram::new(2)).collect();
    for _ in 0..sweeps / 10 {
        pt.pt_step(&model, 10);
        for (slot, hist) in hists.iter_mut().enumerate() {
            hist.record(pt.replica_at_slot(slot).energy());
        }
    }
    for (slot, hist) in hists.iter().enumerate() {
        let exact = spectrum.solve(ladder.betas()[slot]);
        let tv = exact.total_variation(hist);
        lines.push(CheckLine {
            name: format!("pt slot {slot} beta={:.4}", ladder.betas()[slot]),
            pass: tv <= 0.02,
            detail: format!("TV {tv:.4} <= 0.02"),
        });
    }

    // 3. Reweighting: MC histogram moved by +-0.05 versus direct MC.
    let beta0 = 0.8;
    let (base, _) = chain(beta0, 300, rule);
    for (i, target) in [beta0 - 0.05, beta0 + 0.05].into_iter().enumerate() {
        let rw = reweight_histogram(&base, beta0, target)?;
        let (direct, _) = chain(target, 310 + i as u64, rule);
        let tv = total_variation(rw.normalized(), direct.normalized());
        lines.push(CheckLine {
            name: format!("reweight {beta0} -> {target}"),
            pass: tv <= 0.03,
            detail: format!("TV {tv:.4} <= 0.03"),
        });
    }

    // 4. Exact reweighting closure through the degeneracy spectrum.
    let mut level_hist = EnergyHistogram::new(2);
    for (e, g) in spectrum.levels() {
        for _ in 0..g {
            level_hist.record(e);
        }
    }
    let rw = reweight_histogram(&level_hist, 0.0, 0.9)?;
    let tv = total_variation(rw.normalized(), spectrum.solve(0.9).p_of_e.clone());
    lines.push(CheckLine {
        name: "exact reweighting closure".into(),
        pass: tv <= 1e-10,
        detail: format!("TV {tv:.2e} <= 1e-10"),
    });

    Ok(OracleCheckReport { lines })
}

pub fn cmd_oracle_check(
    spins: usize,
    seed: u64,
    sweeps: u64,
    corrupt: bool,
) -> Result<ExitCode> {
    let rule = if corrupt {
        AcceptanceRule::Corrupted
    } else {
        AcceptanceRule::Exact
    };
    let report = oracle_check(spins, seed, sweeps, rule)?;
    print!("{}", report.render());
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pt::LadderScheme;

    fn table_ii_style_config() -> &'static str {
        "# run description\n\
         [model]\n\
         code = checkerboard\n\
         L = 10\n\
         sector = x\n\
         p = 0.105\n\
         \n\
         [sampling]\n\
         N_d = 500\n\
         N_T = 64\n\
         tau = 20\n\
         beta_min = 0.8\n\
         beta_max = 1.2\n\
         seed = 7\n"
    }

    #[test]
    fn parses_full_vocabulary_with_defaults() {
        let cfg = parse_run_config(table_ii_style_config()).unwrap();
        assert_eq!(cfg.code, CodeKind::Checkerboard);
        assert_eq!(cfg.l, 10);
        assert_eq!(cfg.p, 0.105);
        assert_eq!(cfg.n_disorder, 500);
        assert_eq!(cfg.n_temps, 64);
        assert_eq!(cfg.tau, 20);
        assert_eq!(cfg.swap_cadence, 10);
        assert_eq!(cfg.scheme, LadderScheme::Linear);
        assert!(cfg.measure_correlator);
    }

    #[test]
    fn missing_fields_are_named() {
        let text = "code = checkerboard\nL = 4\n";
        match parse_run_config(text) {
            Err(Error::MissingConfigField(field)) => assert_eq!(field, "p"),
            other => panic!("expected missing-field error, got {other:?}"),
        }
    }

    #[test]
    fn manifest_echoes_config_verbatim() {
        let text = table_ii_style_config();
        let manifest = RunManifest::new(text);
        assert_eq!(manifest.config_text, text);
        assert_eq!(manifest.status, "running");
        assert_eq!(
            manifest.config_hash,
            format!("{:016x}", fnv1a(text.as_bytes()))
        );
    }

    #[test]
    fn threshold_table_rejects_malformed_rates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.txt");
        std::fs::write(&path, "surface 0.109 1.4\n").unwrap();
        assert!(parse_threshold_table(&path).is_err());
        std::fs::write(&path, "surface 0.109 0.109 0.994 0.009\n").unwrap();
        let entries = parse_threshold_table(&path).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].quoted_err, Some(0.009));
    }
}
