//! The `toa-box` command line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    convergence_study, covariance_violation, hs_norm, limit_study, spectral_decomposition, uncertainty_product,
    uncertainty_product_truncated, UncertaintyReport,
};
use crate::config::{parse_config, RunConfig};
use crate::domain::{commutator_residual, TestStateFamily};
use crate::error::{Error, Result};
use crate::export::{
    fmt_f64, to_json_string, write_kernel_csv, write_matrix_csv, write_report_json, write_table,
    CanonicalStateExport, Header,
};
use crate::kernels::KernelSelector;
use crate::model::{GridSpec, WaveState};
use crate::operators::{hamiltonian_matrix, toa_matrix_analytic, toa_matrix_quadrature};
use crate::suite::{run_suite, SuiteSettings};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "TOA_BOX_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

const DEFAULT_OUT: &str = "toa-box-out";

#[derive(Debug, Parser)]
#[command(name = "toa-box", version, about = "Confined time-of-arrival operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample a kernel on a square grid.
    Kernel,
    /// Dump the TOA matrix from both construction paths.
    Matrix,
    /// Eigenvalues of the TOA matrix.
    Spectrum,
    /// Commutator residual of a seeded domain state.
    Commutator,
    /// Uncertainty products of seeded domain states and a T eigenvector.
    Uncertainty,
    /// Finite-part kernel against the periodic kernel as gamma shrinks.
    Limit,
    /// Spectra of T and exp(-iaH) T exp(iaH).
    Covariance,
    /// Hilbert-Schmidt norm of a kernel.
    Hsnorm,
    /// Run every acceptance check and write a summary.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Matrix => "matrix",
            Command::Spectrum => "spectrum",
            Command::Commutator => "commutator",
            Command::Uncertainty => "uncertainty",
            Command::Limit => "limit",
            Command::Covariance => "covariance",
            Command::Hsnorm => "hsnorm",
            Command::Report => "report",
        }
    }
}

/// Parses arguments, runs, and returns the process exit code. Errors are
/// printed to stderr as one `error: <Kind>: <message>` line.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), single_line(&e.to_string()));
            EXIT_ERROR
        }
    }
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::ValidationError(format!("{WORKERS_ENV} must be a positive integer")))?;
    // A second initialization in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<i32> {
    configure_workers()?;
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::ValidationError("--config is required".into()))?;
    let text = fs::read_to_string(path)?;
    let cfg = parse_config(&text)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    run(cli.command, &cfg, &out)
}

/// Runs one subcommand, writing its artifacts and the effective config into
/// `out`. Returns the exit code.
pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<i32> {
    fs::create_dir_all(out)?;
    let ctx = Context {
        cfg,
        out,
        hash: cfg.hash(),
    };
    ctx.write_json("effective_config.json", "effective_config", cfg)?;
    match command {
        Command::Kernel => ctx.kernel(),
        Command::Matrix => ctx.matrix(),
        Command::Spectrum => ctx.spectrum(),
        Command::Commutator => ctx.commutator(),
        Command::Uncertainty => ctx.uncertainty(),
        Command::Limit => ctx.limit(),
        Command::Covariance => ctx.covariance(),
        Command::Hsnorm => ctx.hsnorm(),
        Command::Report => ctx.report(),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    hash: String,
}

impl Context<'_> {
    fn create(&self, name: &str) -> Result<BufWriter<fs::File>> {
        Ok(BufWriter::new(fs::File::create(self.out.join(name))?))
    }

    fn write_json<T: Serialize>(&self, name: &str, kind: &str, report: &T) -> Result<()> {
        let mut w = self.create(name)?;
        write_report_json(&mut w, kind, report, &self.hash)?;
        w.flush()?;
        Ok(())
    }

    fn write_csv(&self, name: &str, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = self.create(name)?;
        write_table(&mut w, header, columns, rows)?;
        w.flush()?;
        Ok(())
    }

    fn header(&self) -> Header {
        let mut h = Header::new(&self.hash);
        h.physical(&self.cfg.physical);
        h
    }

    fn kernel(&self) -> Result<i32> {
        let p = &self.cfg.physical;
        let grid = GridSpec::new(p.l, self.cfg.kernel_points)?;
        let points = self.cfg.kernel.sample(p, grid.nodes())?;
        let mut w = self.create(&format!("kernel_{}.csv", self.cfg.kernel.name()))?;
        write_kernel_csv(&mut w, p, self.cfg.kernel, &points, &self.hash)?;
        w.flush()?;
        println!("kernel {}: {} points", self.cfg.kernel.name(), points.len());
        Ok(EXIT_OK)
    }

    fn matrix(&self) -> Result<i32> {
        let p = &self.cfg.physical;
        let basis = self.cfg.basis()?;
        let selector = if p.is_periodic() {
            KernelSelector::Periodic
        } else {
            KernelSelector::Closed
        };
        let analytic = toa_matrix_analytic(p, &basis)?;
        let quad = toa_matrix_quadrature(p, &basis, selector, &self.cfg.rule()?)?;
        for m in [&analytic, &quad] {
            let mut w = self.create(&format!("matrix_{}.csv", m.path().name()))?;
            write_matrix_csv(&mut w, p, m, &self.hash)?;
            w.flush()?;
        }
        #[derive(Serialize)]
        struct Summary {
            label: String,
            n_max: usize,
            dim: usize,
            kernel: &'static str,
            max_abs_diff: f64,
            hermitization_defect: Option<f64>,
        }
        let summary = Summary {
            label: analytic.label().to_string(),
            n_max: basis.n_max(),
            dim: basis.dim(),
            kernel: selector.name(),
            max_abs_diff: analytic.max_abs_diff(&quad)?,
            hermitization_defect: quad.hermitization_defect(),
        };
        self.write_json("matrix_summary.json", "matrix_summary", &summary)?;
        println!("matrix {}: max |analytic - quadrature| = {}", summary.label, fmt_f64(summary.max_abs_diff));
        Ok(EXIT_OK)
    }

    fn spectrum(&self) -> Result<i32> {
        let t = toa_matrix_analytic(&self.cfg.physical, &self.cfg.basis()?)?;
        let s = spectral_decomposition(&t)?;
        let rows: Vec<Vec<String>> = s
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, x)| vec![k.to_string(), fmt_f64(*x)])
            .collect();
        let mut h = self.header();
        h.push("label", t.label()).push("n_max", self.cfg.n_max.to_string());
        self.write_csv("spectrum.csv", &h, &["index", "eigenvalue"], &rows)?;
        self.write_json("spectrum.json", "spectrum", &s)?;
        println!(
            "spectrum {}: {} eigenvalues, sum {}, pairing defect {}",
            s.label,
            s.dim(),
            fmt_f64(s.eigenvalue_sum),
            fmt_f64(s.pairing_defect)
        );
        Ok(EXIT_OK)
    }

    fn family(&self) -> TestStateFamily {
        TestStateFamily {
            decay: self.cfg.decay,
            reference_n: self.cfg.reference_n,
        }
    }

    fn commutator(&self) -> Result<i32> {
        let p = &self.cfg.physical;
        let state = self.family().state(p, self.cfg.seed)?;
        let residual = commutator_residual(p, &self.cfg.basis()?, &state)?;
        let table = convergence_study(p, &state, &self.cfg.n_max_sequence)?;
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| vec![r.n_max.to_string(), fmt_f64(r.residual)])
            .collect();
        let mut h = self.header();
        h.push("seed", self.cfg.seed.to_string())
            .push("s", fmt_f64(self.cfg.decay))
            .push("reference_n", self.cfg.reference_n.to_string());
        self.write_csv("commutator.csv", &h, &["n_max", "residual"], &rows)?;
        #[derive(Serialize)]
        struct Summary<'a> {
            n_max: usize,
            residual: f64,
            convergence: &'a crate::analysis::ConvergenceTable,
        }
        self.write_json(
            "commutator.json",
            "commutator",
            &Summary {
                n_max: self.cfg.n_max,
                residual,
                convergence: &table,
            },
        )?;
        let export = CanonicalStateExport::new(p, &state, self.cfg.n_max)?;
        let mut w = self.create("canonical_state.json")?;
        w.write_all(to_json_string(&export)?.as_bytes())?;
        w.flush()?;
        println!("commutator: residual {} at n_max {}", fmt_f64(residual), self.cfg.n_max);
        Ok(EXIT_OK)
    }

    fn uncertainty(&self) -> Result<i32> {
        let p = &self.cfg.physical;
        let basis = self.cfg.basis()?;
        let h = hamiltonian_matrix(p, &basis)?;
        let t = toa_matrix_analytic(p, &basis)?;
        let family = self.family();
        let mut reports: Vec<UncertaintyReport> = Vec::with_capacity(self.cfg.states + 1);
        for k in 0..self.cfg.states as u64 {
            let seed = self.cfg.seed + k;
            let psi = family.state(p, seed)?.truncated_wave_state(p, &basis)?.normalized()?;
            reports.push(uncertainty_product(p, &h, &t, &psi, format!("domain seed {seed}"))?);
        }
        let s = spectral_decomposition(&t)?;
        let top = WaveState::new(*p, basis, s.eigenvector(s.dim() - 1))?;
        reports.push(uncertainty_product_truncated(p, &h, &t, &top, "T eigenvector max")?);
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    r.state_id.clone(),
                    fmt_f64(r.delta_t),
                    fmt_f64(r.delta_e),
                    fmt_f64(r.product),
                    r.in_domain.to_string(),
                    r.energy_resolved.to_string(),
                ]
            })
            .collect();
        let mut hd = self.header();
        hd.push("n_max", self.cfg.n_max.to_string());
        self.write_csv(
            "uncertainty.csv",
            &hd,
            &["state_id", "delta_t", "delta_e", "product", "in_domain", "energy_resolved"],
            &rows,
        )?;
        self.write_json("uncertainty.json", "uncertainty", &reports)?;
        let seeded = &reports[..self.cfg.states];
        let inside = seeded.iter().filter(|r| r.in_domain).count();
        let min = seeded.iter().map(|r| r.product).fold(f64::INFINITY, f64::min);
        println!(
            "uncertainty: {inside}/{} seeded states inside the domain tolerance, min product {}",
            seeded.len(),
            fmt_f64(min)
        );
        Ok(EXIT_OK)
    }

    fn limit(&self) -> Result<i32> {
        let grid = self.cfg.grid()?;
        let table = limit_study(&self.cfg.physical, &self.cfg.limit_gammas, grid.nodes())?;
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| vec![fmt_f64(r.gamma), fmt_f64(r.sup_error)])
            .collect();
        let mut h = self.header();
        h.push("m_points", self.cfg.m_points.to_string());
        self.write_csv("limit.csv", &h, &["gamma", "sup_error"], &rows)?;
        self.write_json("limit.json", "limit", &table)?;
        match table.slope {
            Some(s) => println!("limit: slope {}", fmt_f64(s)),
            None => println!("limit: slope not available"),
        }
        Ok(EXIT_OK)
    }

    fn covariance(&self) -> Result<i32> {
        let p = &self.cfg.physical;
        let basis = self.cfg.basis()?;
        let h = hamiltonian_matrix(p, &basis)?;
        let t = toa_matrix_analytic(p, &basis)?;
        let reports = self
            .cfg
            .alphas
            .iter()
            .map(|&a| covariance_violation(p, &h, &t, a))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<String>> = reports
            .iter()
            .map(|r| {
                vec![
                    fmt_f64(r.alpha),
                    fmt_f64(r.spectrum_preservation_defect),
                    fmt_f64(r.weyl_shift_defect),
                    fmt_f64(r.operator_shift_defect),
                ]
            })
            .collect();
        let mut hd = self.header();
        hd.push("n_max", self.cfg.n_max.to_string());
        self.write_csv(
            "covariance.csv",
            &hd,
            &["alpha", "spectrum_preservation_defect", "weyl_shift_defect", "operator_shift_defect"],
            &rows,
        )?;
        self.write_json("covariance.json", "covariance", &reports)?;
        println!("covariance: {} shifts", reports.len());
        Ok(EXIT_OK)
    }

    fn hsnorm(&self) -> Result<i32> {
        let value = hs_norm(self.cfg.kernel, &self.cfg.physical, &self.cfg.rule()?)?;
        let mut h = self.header();
        h.push("panel_order", self.cfg.panel_order.to_string())
            .push("panels", self.cfg.panels.to_string());
        self.write_csv(
            "hsnorm.csv",
            &h,
            &["kernel", "hs_norm"],
            &[vec![self.cfg.kernel.name().to_string(), fmt_f64(value)]],
        )?;
        println!("hsnorm {}: {}", self.cfg.kernel.name(), fmt_f64(value));
        Ok(EXIT_OK)
    }

    fn report(&self) -> Result<i32> {
        let settings = SuiteSettings {
            seed: self.cfg.seed,
            m_points: self.cfg.m_points,
            states: self.cfg.states,
            decay: self.cfg.decay,
            reference_n: self.cfg.reference_n,
        };
        let summary = run_suite(&settings)?;
        let rows: Vec<Vec<String>> = summary
            .criteria
            .iter()
            .map(|c| {
                vec![
                    c.id.to_string(),
                    if c.passed { "pass" } else { "fail" }.to_string(),
                    c.name.clone(),
                ]
            })
            .collect();
        self.write_csv("report.csv", &Header::new(&self.hash), &["criterion", "status", "name"], &rows)?;
        self.write_json("report.json", "report", &summary)?;
        for c in &summary.criteria {
            println!("{}", c.line());
        }
        Ok(if summary.all_passed { EXIT_OK } else { EXIT_FAILED })
    }
}
