//! Command-line front end.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use crate::assembly::{find_frequencies, mode_table, ModeResult, SweepOptions};
use crate::error::{PlateError, Result};
use crate::fem::{FemSystem, RadialMesh, RIGID_BETA};
use crate::plate::{EdgeCondition, PlateConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_UNSUPPORTED: u8 = 3;
pub const EXIT_ORACLE: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fgplate",
    version,
    about = "Natural frequencies of stepped functionally graded Mindlin plates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest natural frequencies, labelled (m, n).
    Freqs {
        #[arg(long)]
        config: PathBuf,
        /// Largest number of nodal diameters searched.
        #[arg(long, default_value_t = 8)]
        p_max: u32,
        #[arg(long, default_value_t = 10)]
        modes: usize,
        /// Upper end of the frequency-parameter sweep.
        #[arg(long, default_value_t = 120.0)]
        beta_max: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// First three frequency parameters against a geometric or material parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// `start:stop:step`, stop inclusive.
        #[arg(long)]
        range: SweepRange,
        #[arg(long, default_value_t = 6)]
        p_max: u32,
        #[arg(long, default_value_t = 60.0)]
        beta_max: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Analytical frequencies next to the finite-element reference.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        modes: usize,
        #[arg(long, default_value_t = 200)]
        elements: usize,
        #[arg(long, default_value_t = 8)]
        p_max: u32,
        #[arg(long, default_value_t = 120.0)]
        beta_max: f64,
        /// Largest accepted relative difference.
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
    },
    /// Regenerates the reference table for the bundled stepped plate.
    Table1 {
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SweepParam {
    /// `r₁ = value · r₂`
    StepLocation,
    /// `h₁ = value · h₂`
    ThicknessRatio,
    /// Power-law index `g`.
    PowerIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|k| self.start + k as f64 * self.step)
            .collect()
    }
}

impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:step, got '{s}'"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
        let r = SweepRange {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: num(parts[2])?,
        };
        if !(r.step > 0.0) || !(r.stop > r.start) || !r.start.is_finite() || !r.stop.is_finite() {
            return Err(format!(
                "range must be increasing with positive step, got '{s}'"
            ));
        }
        Ok(r)
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &PlateError) -> u8 {
    match err {
        PlateError::InvalidConfig { .. } | PlateError::Domain(_) => EXIT_CONFIG,
        PlateError::Oracle(_) => EXIT_ORACLE,
        PlateError::UnsupportedRegime { .. }
        | PlateError::BranchTransition { .. }
        | PlateError::DegenerateFrequency { .. }
        | PlateError::DegenerateConfiguration(_)
        | PlateError::Range(_) => EXIT_UNSUPPORTED,
    }
}

pub fn load_config(path: &Path) -> Result<PlateConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PlateError::config("config", format!("{}: {e}", path.display())))?;
    PlateConfig::from_json(&text)
}

/// One bundled reference case: edge condition, configuration document and
/// expected `(m, n, Hz)` rows.
pub struct ReferenceCase {
    pub name: &'static str,
    pub edge: EdgeCondition,
    pub config: &'static str,
    pub modes: [(u32, usize, f64); 10],
}

pub const TABLE1: [ReferenceCase; 3] = [
    ReferenceCase {
        name: "free",
        edge: EdgeCondition::Free,
        config: include_str!("../configs/table1_free.json"),
        modes: [
            (2, 1, 83.543),
            (0, 1, 128.289),
            (3, 1, 146.398),
            (4, 1, 227.583),
            (1, 1, 230.416),
            (5, 1, 331.664),
            (2, 2, 395.639),
            (6, 1, 457.797),
            (0, 2, 477.222),
            (7, 1, 604.337),
        ],
    },
    ReferenceCase {
        name: "soft simply supported",
        edge: EdgeCondition::SoftSs,
        config: include_str!("../configs/table1_sss.json"),
        modes: [
            (0, 1, 58.084),
            (1, 1, 144.063),
            (2, 1, 297.991),
            (0, 2, 382.925),
            (3, 1, 468.489),
            (1, 2, 606.805),
            (4, 1, 628.476),
            (5, 1, 790.895),
            (2, 2, 796.988),
            (0, 3, 867.957),
        ],
    },
    ReferenceCase {
        name: "clamped",
        edge: EdgeCondition::Clamped,
        config: include_str!("../configs/table1_clamped.json"),
        modes: [
            (0, 1, 110.629),
            (1, 1, 223.279),
            (2, 1, 392.735),
            (0, 2, 493.537),
            (3, 1, 594.290),
            (1, 2, 767.116),
            (4, 1, 782.061),
            (5, 1, 958.938),
            (2, 2, 978.960),
            (0, 3, 1044.083),
        ],
    },
];

/// The `count` lowest modes over `p = 0..=p_max`.
pub fn lowest_modes(
    config: &PlateConfig,
    p_max: u32,
    count: usize,
    beta_max: f64,
) -> Result<Vec<ModeResult>> {
    let mut modes = mode_table(
        config,
        p_max,
        count,
        &SweepOptions::with_range(0.05, beta_max),
    )?;
    modes.truncate(count);
    Ok(modes)
}

/// Applies a sweep parameter to a copy of `config`.
pub fn apply_parameter(config: &PlateConfig, param: SweepParam, value: f64) -> Result<PlateConfig> {
    let mut cfg = config.clone();
    match param {
        SweepParam::StepLocation | SweepParam::ThicknessRatio if cfg.segments.len() != 2 => {
            return Err(PlateError::config(
                "segments",
                "this sweep needs exactly two segments",
            ));
        }
        SweepParam::StepLocation => {
            cfg.segments[0].outer_radius = value * cfg.segments[1].outer_radius
        }
        SweepParam::ThicknessRatio => cfg.segments[0].thickness = value * cfg.segments[1].thickness,
        SweepParam::PowerIndex => cfg.material.power_index = value,
    }
    cfg.validate()?;
    Ok(cfg)
}

fn csv_error(e: impl std::fmt::Display) -> PlateError {
    PlateError::config("csv", e.to_string())
}

fn io_error(e: std::io::Error) -> PlateError {
    PlateError::config("output", e.to_string())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for r in rows {
        w.write_record(r).map_err(csv_error)?;
    }
    w.flush().map_err(io_error)
}

fn describe(config: &PlateConfig) -> String {
    format!(
        "{} {:?} plate, {} segment(s), g = {}",
        config.outer_bc.label(),
        config.plate_kind,
        config.segments.len(),
        config.material.power_index
    )
    .to_lowercase()
}

pub fn run_freqs(
    config: &PlateConfig,
    p_max: u32,
    modes: usize,
    beta_max: f64,
    csv: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Vec<ModeResult>> {
    let table = lowest_modes(config, p_max, modes, beta_max)?;
    writeln!(out, "# {}", describe(config)).map_err(io_error)?;
    writeln!(out, "{:>8} {:>12} {:>10}", "(m,n)", "Hz", "beta").map_err(io_error)?;
    for m in &table {
        writeln!(
            out,
            "{:>8} {:>12.3} {:>10.4}",
            format!("({},{})", m.p, m.n),
            m.frequency,
            m.beta
        )
        .map_err(io_error)?;
    }
    if let Some(path) = csv {
        let rows: Vec<Vec<String>> = table
            .iter()
            .map(|m| {
                vec![
                    m.p.to_string(),
                    m.n.to_string(),
                    format!("{:.3}", m.frequency),
                    format!("{:.4}", m.beta),
                ]
            })
            .collect();
        write_csv(path, &["m", "n", "frequency_hz", "beta"], &rows)?;
    }
    Ok(table)
}

/// One sweep row: parameter value and up to three `β`.
pub type SweepRow = (f64, Vec<f64>);

pub fn run_sweep(
    config: &PlateConfig,
    param: SweepParam,
    range: SweepRange,
    p_max: u32,
    beta_max: f64,
    csv: Option<&Path>,
    out: &mut dyn Write,
    warn: &mut dyn Write,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for value in range.values() {
        let cfg = match apply_parameter(config, param, value) {
            Ok(c) => c,
            Err(PlateError::InvalidConfig { field, message }) => {
                writeln!(warn, "warning: skipping {value}: {field}: {message}")
                    .map_err(io_error)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        let betas: Vec<f64> = lowest_modes(&cfg, p_max, 3, beta_max)?
            .iter()
            .map(|m| m.beta)
            .collect();
        if betas.len() < 3 {
            writeln!(
                warn,
                "warning: only {} modes below beta = {beta_max} at {value}",
                betas.len()
            )
            .map_err(io_error)?;
        }
        rows.push((value, betas));
    }
    let text: Vec<Vec<String>> = rows
        .iter()
        .map(|(v, b)| {
            let mut r = vec![format!("{v}")];
            r.extend((0..3).map(|i| b.get(i).map(|x| format!("{x:.4}")).unwrap_or_default()));
            r
        })
        .collect();
    let header = ["value", "beta1", "beta2", "beta3"];
    match csv {
        Some(path) => write_csv(path, &header, &text)?,
        None => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(header).map_err(csv_error)?;
            for r in &text {
                w.write_record(r).map_err(csv_error)?;
            }
            w.flush().map_err(io_error)?;
        }
    }
    Ok(rows)
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub p: u32,
    pub n: usize,
    pub analytic_hz: f64,
    pub oracle_hz: f64,
    pub relative_difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    /// `(p, analytic count, oracle count)` below a cut between roots.
    pub counts: Vec<(u32, usize, usize)>,
    pub max_difference: f64,
}

impl ValidationReport {
    pub fn counts_agree(&self) -> bool {
        self.counts.iter().all(|(_, a, b)| a == b)
    }
}

pub fn validate(
    config: &PlateConfig,
    modes: usize,
    elements: usize,
    p_max: u32,
    beta_max: f64,
) -> Result<ValidationReport> {
    let table = lowest_modes(config, p_max, modes, beta_max)?;
    let mut per_p: BTreeMap<u32, usize> = BTreeMap::new();
    for m in &table {
        let e = per_p.entry(m.p).or_default();
        *e = (*e).max(m.n);
    }
    let options = SweepOptions::with_range(0.05, beta_max);
    let mut oracle = BTreeMap::new();
    let mut counts = Vec::new();
    for (&p, &n) in &per_p {
        let mesh = RadialMesh::uniform(config, p, elements)?;
        let sys = FemSystem::assemble(config, &mesh)?;
        let sol = sys.solve(n, RIGID_BETA)?;
        // count roots below a cut halfway to the next analytical root
        let roots = find_frequencies(config, p, &options, n + 1)?;
        let cut = match roots.modes.get(n) {
            Some(next) => 0.5 * (roots.modes[n - 1].beta + next.beta),
            None => 0.5 * (roots.modes[n - 1].beta + beta_max),
        };
        let analytic = roots.modes.iter().filter(|m| m.beta < cut).count();
        let fem = sys.count_below(cut)?.saturating_sub(sol.rigid_modes);
        counts.push((p, analytic, fem));
        oracle.insert(p, sol);
    }
    let rows: Vec<ValidationRow> = table
        .iter()
        .map(|m| {
            let o = oracle[&m.p].frequency[m.n - 1];
            ValidationRow {
                p: m.p,
                n: m.n,
                analytic_hz: m.frequency,
                oracle_hz: o,
                relative_difference: (o - m.frequency).abs() / m.frequency,
            }
        })
        .collect();
    let max_difference = rows
        .iter()
        .map(|r| r.relative_difference)
        .fold(0.0, f64::max);
    Ok(ValidationReport {
        rows,
        counts,
        max_difference,
    })
}

fn print_validation(report: &ValidationReport, elements: usize, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "{:>8} {:>12} {:>12} {:>10}",
        "(m,n)",
        "analytic Hz",
        format!("fem{elements} Hz"),
        "diff %"
    )
    .map_err(io_error)?;
    for r in &report.rows {
        writeln!(
            out,
            "{:>8} {:>12.3} {:>12.3} {:>10.4}",
            format!("({},{})", r.p, r.n),
            r.analytic_hz,
            r.oracle_hz,
            100.0 * r.relative_difference
        )
        .map_err(io_error)?;
    }
    for (p, a, f) in &report.counts {
        writeln!(
            out,
            "p = {p}: {a} analytical roots, {f} finite-element eigenvalues below the cut"
        )
        .map_err(io_error)?;
    }
    writeln!(out, "max difference {:.4} %", 100.0 * report.max_difference).map_err(io_error)
}

/// Reference table comparison: `(case, expected (m, n, Hz), computed mode)`.
pub fn table1(tolerance: f64, out: &mut dyn Write) -> Result<bool> {
    let mut ok = true;
    for case in &TABLE1 {
        let cfg = PlateConfig::from_json(case.config)?;
        let modes = lowest_modes(&cfg, 8, 10, 90.0)?;
        writeln!(out, "# {}", case.name).map_err(io_error)?;
        writeln!(
            out,
            "{:>8} {:>10} {:>10} {:>10}  status",
            "(m,n)", "ref Hz", "Hz", "diff %"
        )
        .map_err(io_error)?;
        for (i, &(m, n, hz)) in case.modes.iter().enumerate() {
            let (label, got) = match modes.get(i) {
                Some(mode) => ((mode.p, mode.n), mode.frequency),
                None => ((u32::MAX, 0), f64::NAN),
            };
            let diff = (got - hz).abs() / hz;
            let pass = label == (m, n) && diff <= tolerance;
            ok &= pass;
            writeln!(
                out,
                "{:>8} {:>10.3} {:>10.3} {:>10.4}  {}",
                format!("({m},{n})"),
                hz,
                got,
                100.0 * diff,
                if pass { "ok" } else { "MISMATCH" }
            )
            .map_err(io_error)?;
        }
    }
    Ok(ok)
}

/// Runs a parsed command; returns the process exit status.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let result: Result<u8> = (|| match cli.command {
        Command::Freqs {
            config,
            p_max,
            modes,
            beta_max,
            csv,
        } => {
            let cfg = load_config(&config)?;
            let table = run_freqs(&cfg, p_max, modes, beta_max, csv.as_deref(), out)?;
            if table.len() < modes {
                writeln!(
                    err,
                    "warning: only {} of {modes} modes below beta = {beta_max}",
                    table.len()
                )
                .map_err(io_error)?;
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            config,
            param,
            range,
            p_max,
            beta_max,
            csv,
        } => {
            let cfg = load_config(&config)?;
            run_sweep(
                &cfg,
                param,
                range,
                p_max,
                beta_max,
                csv.as_deref(),
                out,
                err,
            )?;
            Ok(EXIT_OK)
        }
        Command::Validate {
            config,
            modes,
            elements,
            p_max,
            beta_max,
            tolerance,
        } => {
            let cfg = load_config(&config)?;
            let report = validate(&cfg, modes, elements, p_max, beta_max)?;
            print_validation(&report, elements, out)?;
            Ok(
                if report.max_difference > tolerance || !report.counts_agree() {
                    EXIT_MISMATCH
                } else {
                    EXIT_OK
                },
            )
        }
        Command::Table1 { tolerance } => Ok(if table1(tolerance, out)? {
            EXIT_OK
        } else {
            EXIT_MISMATCH
        }),
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
