//! The `arrival-povm` command line: `simulate`, `check`, `fit`, `report` and
//! `demo`.
//!
//! Exit codes: 0 success (or a POVM-compatible verdict), 1 runtime failure,
//! 2 input error, 3 incompatible verdict, 4 fit did not converge.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bohm::{simulate_family, SimOutput, SimulationSpec};
use crate::checks::{self, CheckReport, Verdict};
use crate::distributions::{BinnedDistribution, DirectionFamily, TimeGrid};
use crate::error::Error;
use crate::fit::{self, FitOptions, FitResult};
use crate::spin::Direction;

/// Reference configuration shipped with the binary.
pub const BUNDLED_CONFIG: &str = include_str!("../examples/dd_phenomenon.json");

/// Caps the worker pool; `0` or unset means one worker per core.
pub const THREADS_ENV: &str = "ARRIVAL_POVM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "arrival-povm",
    version,
    about = "Spin-POVM checks for arrival-time statistics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate Bohmian first-arrival histograms from a config file.
    Simulate(SimulateArgs),
    /// Run the measurability checks on a family file.
    Check(CheckArgs),
    /// Fit the best spin POVM to a family file.
    Fit(FitArgs),
    /// Write plot-ready CSV tables for a family (and optionally a fit).
    Report(ReportArgs),
    /// Simulate, check and fit the bundled configuration.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_spin_term: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Defaults to 3·2/√N for simulated families and 1e-6 otherwise.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: u32,
    #[arg(long)]
    pub enforce_axial: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Family file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Fit result for the same family.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Defaults to the bundled configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for the family, check, fit and CSV outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_spin_term: bool,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Failure = 1,
    Input = 2,
    Incompatible = 3,
    NotConverged = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::NodeProximity { .. } | Error::LinearProgram(_) | Error::ProblemTooLarge(_) => {
                Exit::Failure
            }
            _ => Exit::Input,
        };
        CliError {
            exit,
            message: e.to_string(),
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
    .into()
}

fn output_error(path: &Path, source: std::io::Error) -> CliError {
    CliError {
        exit: Exit::Failure,
        message: format!("cannot write {}: {source}", path.display()),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Simulate,
    Check,
    Fit,
    Report,
    Demo,
}

/// Provenance block embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: CommandKind,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// SHA-256 of the input bytes, in input order.
    pub config_sha256: String,
}

impl RunManifest {
    fn new(
        command: CommandKind,
        inputs: &[(String, &[u8])],
        outputs: Vec<String>,
        seed: Option<u64>,
    ) -> Self {
        let mut h = Sha256::new();
        for (_, bytes) in inputs {
            h.update(bytes);
        }
        RunManifest {
            command,
            inputs: inputs.iter().map(|(p, _)| p.clone()).collect(),
            outputs,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: h.finalize().iter().map(|b| format!("{b:02x}")).collect(),
        }
    }

    fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("manifest serializes")
    }
}

/// Check report file: the report fields plus the manifest.
#[derive(Debug, Serialize, Deserialize)]
pub struct CheckFile {
    #[serde(flatten)]
    pub report: CheckReport,
    pub manifest: Option<RunManifest>,
}

/// Fit result file: the result fields plus the manifest.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitFile {
    #[serde(flatten)]
    pub fit: FitResult,
    pub manifest: Option<RunManifest>,
}

/// Applies [`THREADS_ENV`] to the global worker pool.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| CliError {
        exit: Exit::Input,
        message: format!("{THREADS_ENV} must be a non-negative integer, got {raw:?}"),
    })?;
    if n > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<Exit> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, out),
        Command::Check(a) => check(a, out),
        Command::Fit(a) => fit_cmd(a, out),
        Command::Report(a) => report(a, out),
        Command::Demo(a) => demo(a, out),
    }
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| output_error(path, e))
}

fn parse_spec(path: &str, bytes: &[u8]) -> CliResult<SimulationSpec> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError {
        exit: Exit::Input,
        message: format!("{path}: {e}"),
    })?;
    SimulationSpec::from_json_str(text).map_err(|source| {
        Error::Json {
            path: path.to_string(),
            source,
        }
        .into()
    })
}

fn parse_family(path: &str, bytes: &[u8]) -> CliResult<DirectionFamily> {
    let text = String::from_utf8_lossy(bytes);
    DirectionFamily::from_json_str(&text).map_err(|e| match e {
        crate::distributions::FamilyParseError::Json(source) => Error::Json {
            path: path.to_string(),
            source,
        }
        .into(),
        crate::distributions::FamilyParseError::Invalid(e) => CliError {
            exit: Exit::Input,
            message: format!("{path}: {e}"),
        },
    })
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn run_simulation(spec: &SimulationSpec, out: &mut dyn Write) -> CliResult<SimOutput> {
    let sim = simulate_family(spec)?;
    for st in &sim.stats {
        let total = st.arrived_in_grid + st.arrived_after_grid + st.never_arrived + st.flagged;
        let _ = writeln!(
            out,
            "n = {}  censored = {:.6}  flagged = {}",
            st.direction,
            (total - st.arrived_in_grid) as f64 / total as f64,
            st.flagged
        );
    }
    Ok(sim)
}

fn simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let path = display(&a.config);
    let bytes = read_bytes(&a.config)?;
    let mut spec = parse_spec(&path, &bytes)?;
    if let Some(s) = a.seed {
        spec.sim.seed = s;
    }
    if a.no_spin_term {
        spec.sim.spin_term = false;
    }
    let sim = run_simulation(&spec, out)?;
    let manifest = RunManifest::new(
        CommandKind::Simulate,
        &[(path, &bytes)],
        vec![display(&a.out)],
        Some(spec.sim.seed),
    );
    write_text(
        &a.out,
        &sim.family.to_json_string(Some(manifest.to_value())),
    )?;
    Ok(Exit::Ok)
}

fn check_tol(f: &DirectionFamily, tol: Option<f64>) -> f64 {
    tol.unwrap_or_else(|| match f.trajectories() {
        Some(n) => checks::suggested_tol(n),
        None => checks::DEFAULT_TOL,
    })
}

pub fn print_report(r: &CheckReport, out: &mut dyn Write) {
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    let _ = writeln!(out, "directions        {}", r.direction_count);
    let _ = writeln!(out, "delta             {:.6}", r.delta);
    let _ = writeln!(out, "delta / 4         {:.6}", r.lower_bound);
    let _ = writeln!(out, "axial defect      {}", opt(r.axial_defect));
    let _ = writeln!(
        out,
        "chiral defect     {}",
        opt(r.chiral_defect.map(|c| c.defect))
    );
    let _ = writeln!(out, "inversion defect  {:.6}", r.inversion_defect);
    let _ = writeln!(out, "spin dependence   {:.6}", r.spin_dependence);
    let _ = writeln!(out, "tol               {:e}", r.tol);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<28} {:<28} {:>10}",
        "pair n", "pair m", "tv(S_n,S_m)"
    );
    for p in &r.per_pair_table {
        let _ = writeln!(
            out,
            "{:<28} {:<28} {:>10.6}",
            p.n.to_string(),
            p.m.to_string(),
            p.defect
        );
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let v = match r.verdict {
        Verdict::PovmCompatibleAtTol => "POVM_COMPATIBLE_AT_TOL",
        Verdict::Incompatible => "INCOMPATIBLE",
    };
    let _ = writeln!(out, "verdict: {v}");
}

fn verdict_exit(r: &CheckReport) -> Exit {
    match r.verdict {
        Verdict::PovmCompatibleAtTol => Exit::Ok,
        Verdict::Incompatible => Exit::Incompatible,
    }
}

fn check(a: &CheckArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let path = display(&a.input);
    let bytes = read_bytes(&a.input)?;
    let family = parse_family(&path, &bytes)?;
    let report = checks::full_report(&family, check_tol(&family, a.tol))?;
    print_report(&report, out);
    if let Some(o) = &a.out {
        let manifest = RunManifest::new(
            CommandKind::Check,
            &[(path, &bytes)],
            vec![display(o)],
            None,
        );
        let file = CheckFile {
            report: report.clone(),
            manifest: Some(manifest),
        };
        write_text(
            o,
            &serde_json::to_string_pretty(&file).expect("report serializes"),
        )?;
    }
    Ok(verdict_exit(&report))
}

fn print_fit(r: &FitResult, out: &mut dyn Write) {
    let _ = writeln!(out, "{:<16} {:>12} {:>12}", "", "fit", "delta / 4");
    let _ = writeln!(
        out,
        "{:<16} {:>12.6} {:>12.6}",
        "minimax error", r.minimax_error, r.lower_bound
    );
    let _ = writeln!(
        out,
        "solver: {} after {} iterations{}",
        r.solver_status,
        r.iterations,
        if r.converged { "" } else { " (not converged)" }
    );
}

fn fit_cmd(a: &FitArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let path = display(&a.input);
    let bytes = read_bytes(&a.input)?;
    let family = parse_family(&path, &bytes)?;
    let opts = FitOptions {
        max_iterations: a.max_iters,
        tol: a.tol,
        seed: a.seed,
        enforce_axial: a.enforce_axial,
    };
    let result = fit::fit(&family, &opts)?;
    print_fit(&result, out);
    let manifest = RunManifest::new(
        CommandKind::Fit,
        &[(path, &bytes)],
        vec![display(&a.out)],
        Some(a.seed),
    );
    let converged = result.converged;
    let file = FitFile {
        fit: result,
        manifest: Some(manifest),
    };
    write_text(
        &a.out,
        &serde_json::to_string_pretty(&file).expect("fit serializes"),
    )?;
    Ok(if converged {
        Exit::Ok
    } else {
        Exit::NotConverged
    })
}

/// File names written by `report`.
pub const REPORT_FILES: [&str; 4] = [
    "histograms.csv",
    "pair_sums.csv",
    "defects.csv",
    "bound.csv",
];

fn report(a: &ReportArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let path = display(&a.input);
    let bytes = read_bytes(&a.input)?;
    let family = parse_family(&path, &bytes)?;
    let mut inputs = vec![(path, bytes)];
    let fit = match &a.fit {
        Some(p) => {
            let b = read_bytes(p)?;
            let f: FitFile = serde_json::from_slice(&b).map_err(|source| Error::Json {
                path: display(p),
                source,
            })?;
            if f.fit.povm.grid != *family.grid() {
                return Err(Error::GridMismatch.into());
            }
            inputs.push((display(p), b));
            Some(f.fit)
        }
        None => None,
    };
    let report = checks::full_report(&family, check_tol(&family, a.tol))?;
    std::fs::create_dir_all(&a.out).map_err(|e| output_error(&a.out, e))?;
    let outputs: Vec<String> = REPORT_FILES
        .iter()
        .map(|n| display(&a.out.join(n)))
        .collect();
    let refs: Vec<(String, &[u8])> = inputs
        .iter()
        .map(|(p, b)| (p.clone(), b.as_slice()))
        .collect();
    let manifest = RunManifest::new(CommandKind::Report, &refs, outputs, None);
    write_report(&a.out, &family, &report, fit.as_ref(), &manifest)?;
    let _ = writeln!(
        out,
        "wrote {} tables to {}",
        REPORT_FILES.len(),
        a.out.display()
    );
    Ok(Exit::Ok)
}

fn label(prefix: &str, n: &Direction) -> String {
    let v = n.as_array();
    format!("{prefix}({} {} {})", v[0], v[1], v[2])
}

fn parse_label(prefix: &str, s: &str) -> Option<Direction> {
    let inner = s
        .strip_prefix(prefix)?
        .strip_prefix('(')?
        .strip_suffix(')')?;
    let v: Vec<f64> = inner
        .split(' ')
        .map(|x| x.parse().ok())
        .collect::<Option<_>>()?;
    if v.len() != 3 {
        return None;
    }
    Direction::new(v[0], v[1], v[2]).ok()
}

fn header_lines(manifest: &RunManifest, grid: &TimeGrid, fit_present: bool) -> String {
    format!(
        "# manifest={}\n# grid t_start={} bin_width={} bin_count={}\n# fit={}\n",
        serde_json::to_string(manifest).expect("manifest serializes"),
        grid.t_start,
        grid.bin_width,
        grid.bin_count,
        if fit_present { "present" } else { "absent" }
    )
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError {
        exit: Exit::Failure,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

/// Writes a bins-by-columns table with one extra `censored` row.
fn write_binned(
    path: &Path,
    preamble: &str,
    grid: &TimeGrid,
    columns: &[(String, Vec<f64>)],
) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(preamble.as_bytes().to_vec());
    let mut head = vec!["bin".to_string(), "t_lo".into(), "t_hi".into()];
    head.extend(columns.iter().map(|c| c.0.clone()));
    w.write_record(&head).map_err(|e| csv_error(path, e))?;
    for k in 0..=grid.bin_count {
        let mut row = if k < grid.bin_count {
            let (lo, hi) = grid.bin_edges(k);
            vec![k.to_string(), lo.to_string(), hi.to_string()]
        } else {
            vec![
                "censored".to_string(),
                grid.t_end().to_string(),
                String::new(),
            ]
        };
        row.extend(columns.iter().map(|c| c.1[k].to_string()));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| output_error(path, e.into_error()))?;
    std::fs::write(path, bytes).map_err(|e| output_error(path, e))
}

fn masses(d: &BinnedDistribution) -> Vec<f64> {
    d.masses().collect()
}

/// Writes the four report tables into `dir`.
pub fn write_report(
    dir: &Path,
    family: &DirectionFamily,
    report: &CheckReport,
    fit: Option<&FitResult>,
    manifest: &RunManifest,
) -> CliResult<()> {
    let grid = family.grid();
    let mut pre = header_lines(manifest, grid, fit.is_some());
    pre.push_str(&format!(
        "# axis={}\n",
        family.axis().map_or("none".to_string(), |a| label("", &a))
    ));

    let mut cols: Vec<(String, Vec<f64>)> = family
        .entries()
        .iter()
        .map(|(n, d)| (label("P", n), masses(d)))
        .collect();
    if let Some(r) = fit {
        for (n, _) in family.entries() {
            cols.push((label("fit", n), masses(&r.povm.predict(n)?)));
        }
    }
    write_binned(&dir.join(REPORT_FILES[0]), &pre, grid, &cols)?;

    let sums: Vec<(String, Vec<f64>)> = checks::antipodal_sums(family)?
        .iter()
        .map(|(n, s)| (label("S", n), masses(s)))
        .collect();
    write_binned(&dir.join(REPORT_FILES[1]), &pre, grid, &sums)?;

    let path = dir.join(REPORT_FILES[2]);
    let mut w = csv::Writer::from_writer(pre.as_bytes().to_vec());
    let e = |e| csv_error(&path, e);
    w.write_record(["quantity", "n", "m", "value"]).map_err(e)?;
    let mut scalar = |name: &str, v: Option<f64>| -> CliResult<()> {
        if let Some(v) = v {
            w.write_record([name, "", "", &v.to_string()])
                .map_err(|e| csv_error(&path, e))?;
        }
        Ok(())
    };
    scalar("delta", Some(report.delta))?;
    scalar("lower_bound", Some(report.lower_bound))?;
    scalar("axial_defect", report.axial_defect)?;
    scalar("chiral_defect", report.chiral_defect.map(|c| c.defect))?;
    scalar(
        "chiral_hypothesis_gap",
        report.chiral_defect.map(|c| c.hypothesis_gap),
    )?;
    scalar("inversion_defect", Some(report.inversion_defect))?;
    scalar("spin_dependence", Some(report.spin_dependence))?;
    for p in &report.per_pair_table {
        w.write_record([
            "pair_defect",
            &label("", &p.n),
            &label("", &p.m),
            &p.defect.to_string(),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| output_error(&path, e.into_error()))?;
    std::fs::write(&path, bytes).map_err(|e| output_error(&path, e))?;

    let path = dir.join(REPORT_FILES[3]);
    let mut w = csv::Writer::from_writer(pre.as_bytes().to_vec());
    match fit {
        Some(r) => {
            w.write_record(["direction", "fit_error", "lower_bound", "minimax_error"])
                .map_err(|e| csv_error(&path, e))?;
            for d in &r.per_direction_error {
                w.write_record([
                    label("", &d.direction),
                    d.error.to_string(),
                    report.lower_bound.to_string(),
                    r.minimax_error.to_string(),
                ])
                .map_err(|e| csv_error(&path, e))?;
            }
        }
        None => {
            w.write_record(["direction", "lower_bound"])
                .map_err(|e| csv_error(&path, e))?;
            for n in family.directions() {
                w.write_record([label("", &n), report.lower_bound.to_string()])
                    .map_err(|e| csv_error(&path, e))?;
            }
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| output_error(&path, e.into_error()))?;
    std::fs::write(&path, bytes).map_err(|e| output_error(&path, e))
}

/// Rebuilds a family from a `histograms.csv` written by `report`.
pub fn read_histogram_csv(path: &Path) -> crate::Result<DirectionFamily> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: display(path),
        source,
    })?;
    let bad = |m: &str| Error::Input(format!("{}: {m}", path.display()));
    let mut grid = None;
    let mut axis = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.strip_prefix("# grid ") {
            let kv: Vec<&str> = rest
                .split(' ')
                .filter_map(|p| p.split('=').nth(1))
                .collect();
            if kv.len() != 3 {
                return Err(bad("malformed grid line"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("malformed grid line"));
            let count = kv[2]
                .parse::<usize>()
                .map_err(|_| bad("malformed grid line"))?;
            grid = Some(TimeGrid::new(num(kv[0])?, num(kv[1])?, count)?);
        } else if let Some(rest) = line.strip_prefix("# axis=") {
            axis = if rest == "none" {
                None
            } else {
                Some(parse_label("", rest).ok_or_else(|| bad("malformed axis line"))?)
            };
        }
    }
    let grid = grid.ok_or_else(|| bad("missing grid line"))?;

    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| bad(&e.to_string()))?.clone();
    let dirs: Vec<(usize, Direction)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| parse_label("P", h).map(|n| (i, n)))
        .collect();
    let mut cols = vec![Vec::with_capacity(grid.bin_count + 1); dirs.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(&e.to_string()))?;
        for (c, (i, _)) in dirs.iter().enumerate() {
            let v: f64 = rec[*i].parse().map_err(|_| bad("non-numeric mass"))?;
            cols[c].push(v);
        }
    }
    let entries = dirs
        .iter()
        .zip(cols)
        .map(|((_, n), mut m)| {
            if m.len() != grid.bin_count + 1 {
                return Err(bad("row count does not match the grid"));
            }
            let censored = m.pop().expect("non-empty");
            Ok((*n, BinnedDistribution::normalized(grid, m, censored)?))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    DirectionFamily::new(grid, entries, axis)
}

fn demo(a: &DemoArgs, out: &mut dyn Write) -> CliResult<Exit> {
    let (path, bytes) = match &a.config {
        Some(p) => (display(p), read_bytes(p)?),
        None => ("<bundled>".to_string(), BUNDLED_CONFIG.as_bytes().to_vec()),
    };
    let mut spec = parse_spec(&path, &bytes)?;
    if let Some(s) = a.seed {
        spec.sim.seed = s;
    }
    if a.no_spin_term {
        spec.sim.spin_term = false;
    }
    let sim = run_simulation(&spec, &mut std::io::sink())?;
    let family = sim.family;
    let report = checks::full_report(&family, check_tol(&family, a.tol))?;
    let result = fit::fit(&family, &FitOptions::default())?;

    let _ = writeln!(out, "delta         {:.4}", report.delta);
    let _ = writeln!(
        out,
        "delta / 4     {:.4}  (no spin POVM can do better)",
        report.lower_bound
    );
    let _ = writeln!(
        out,
        "fitted error  {:.4}  (best spin POVM found)",
        result.minimax_error
    );

    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
        let mut outputs: Vec<String> = ["family.json", "check.json", "fit.json"]
            .iter()
            .map(|n| display(&dir.join(n)))
            .collect();
        outputs.extend(REPORT_FILES.iter().map(|n| display(&dir.join(n))));
        let manifest = RunManifest::new(
            CommandKind::Demo,
            &[(path, &bytes)],
            outputs,
            Some(spec.sim.seed),
        );
        write_text(
            &dir.join("family.json"),
            &family.to_json_string(Some(manifest.to_value())),
        )?;
        let check = CheckFile {
            report: report.clone(),
            manifest: Some(manifest.clone()),
        };
        write_text(
            &dir.join("check.json"),
            &serde_json::to_string_pretty(&check).expect("report serializes"),
        )?;
        let fit_file = FitFile {
            fit: result.clone(),
            manifest: Some(manifest.clone()),
        };
        write_text(
            &dir.join("fit.json"),
            &serde_json::to_string_pretty(&fit_file).expect("fit serializes"),
        )?;
        write_report(dir, &family, &report, Some(&result), &manifest)?;
    }
    Ok(if result.converged {
        Exit::Ok
    } else {
        Exit::NotConverged
    })
}
