//! Configuration ingestion, experiment orchestration and machine-readable
//! result emission. One JSON config drives every subcommand; outputs are
//! fixed-order CSV files with 17-significant-digit floats plus a JSON run
//! manifest carrying the config digest, so identical config and version
//! reproduce identical rows byte for byte.

use crate::asymptotics::{
    bargmann_check, compare_counts, fit_absorption, solve_bottom_detailed, solve_top_detailed,
    MuGrid, OracleParams, Regime,
};
use crate::birman::{build_bs_matrix, bs_spectrum, rank_one_split, trace_identities};
use crate::dispersion::{find_extrema, GeneratingCoefficients, Site};
use crate::error::{Error, Result};
use crate::green::{Edge, GreenEvaluator, QuadratureSpec};
use crate::numerics::ls_slope_through_origin;
use crate::potential::LatticePotential;
use crate::spectrum_oracle::Boundary;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CSV_FORMAT: &str = "bandedge-csv v1";
pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, untagged)]
pub enum DispersionConfig {
    Preset { preset: String, dim: usize },
    Explicit { dim: usize, entries: Vec<CoeffEntry> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub x: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSite {
    pub x: Vec<i64>,
    pub v: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MuGridConfig {
    pub start: f64,
    pub factor: f64,
    pub count: usize,
}

impl Default for MuGridConfig {
    fn default() -> Self {
        MuGridConfig { start: 1.0, factor: 0.5, count: 6 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub base_n: usize,
    pub max_refine: usize,
    pub abs_tol: f64,
    pub singularity_subtraction: bool,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub l: i64,
    pub boundary: String,
    pub margin: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { l: 2000, boundary: "dirichlet".into(), margin: 1e-3 }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
}

/// Top-level experiment configuration. Unknown keys are rejected; `gamma`,
/// `dispersion` and `potential` are mandatory.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dispersion: DispersionConfig,
    pub potential: Vec<PotentialSite>,
    pub gamma: f64,
    #[serde(default)]
    pub mu_grid: MuGridConfig,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub z_values: Vec<f64>,
    #[serde(default)]
    pub x_values: Vec<Vec<i64>>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_seed() -> u64 {
    42
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_source(&text)
    }

    pub fn from_str_source(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            Error::Config(format!("config invalid at `{}`: {}", e.path(), e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "field `gamma` = {} outside (0, 1)",
                self.gamma
            )));
        }
        if self.potential.is_empty() {
            return Err(Error::Config("field `potential` must be nonempty".into()));
        }
        Ok(())
    }

    /// Canonical serialization: the parsed structure re-serialized with
    /// defaults applied, so a config echo re-validates to the same digest.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_bytes());
        hex_string(&h.finalize())
    }

    pub fn dim(&self) -> usize {
        match &self.dispersion {
            DispersionConfig::Preset { dim, .. } => *dim,
            DispersionConfig::Explicit { dim, .. } => *dim,
        }
    }

    fn site(&self, raw: &[i64], what: &str) -> Result<Site> {
        let dim = self.dim();
        if raw.len() != dim {
            return Err(Error::Config(format!(
                "{what} site {raw:?} has {} coordinates, expected {dim}",
                raw.len()
            )));
        }
        Ok(if dim == 1 { [raw[0], 0] } else { [raw[0], raw[1]] })
    }

    pub fn build_coeffs(&self) -> Result<GeneratingCoefficients> {
        match &self.dispersion {
            DispersionConfig::Preset { preset, dim } => {
                if preset != "laplacian" {
                    return Err(Error::Config(format!(
                        "unknown dispersion preset `{preset}` (supported: laplacian)"
                    )));
                }
                GeneratingCoefficients::laplacian(*dim)
            }
            DispersionConfig::Explicit { dim, entries } => {
                let mut list = Vec::new();
                for e in entries {
                    if e.x.len() != *dim {
                        return Err(Error::Config(format!(
                            "dispersion site {:?} has {} coordinates, expected {dim}",
                            e.x,
                            e.x.len()
                        )));
                    }
                    let site = if *dim == 1 { [e.x[0], 0] } else { [e.x[0], e.x[1]] };
                    list.push((site, Complex64::new(e.re, e.im)));
                }
                GeneratingCoefficients::hermitian_closure(*dim, list)
            }
        }
    }

    pub fn build_potential(&self) -> Result<LatticePotential> {
        let mut list = Vec::new();
        for s in &self.potential {
            list.push((self.site(&s.x, "potential")?, s.v));
        }
        LatticePotential::new(self.dim(), list)
    }

    pub fn build_quadrature(&self) -> Result<QuadratureSpec> {
        match &self.quadrature {
            None => Ok(QuadratureSpec::default_for_dim(self.dim())),
            Some(q) => QuadratureSpec::new(q.base_n, q.max_refine, q.abs_tol, q.singularity_subtraction),
        }
    }

    pub fn build_evaluator(&self) -> Result<GreenEvaluator> {
        GreenEvaluator::new(self.build_coeffs()?, self.build_quadrature()?)
    }

    pub fn build_mu_grid(&self) -> Result<MuGrid> {
        MuGrid::geometric(self.mu_grid.start, self.mu_grid.factor, self.mu_grid.count)
    }

    pub fn build_oracle_params(&self) -> Result<OracleParams> {
        let boundary = match self.oracle.boundary.as_str() {
            "dirichlet" => Boundary::Dirichlet,
            "periodic" => Boundary::Periodic,
            other => {
                return Err(Error::Config(format!(
                    "field `oracle.boundary` = `{other}` (expected dirichlet|periodic)"
                )))
            }
        };
        Ok(OracleParams { l: self.oracle.l, boundary, margin: self.oracle.margin })
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// 17-significant-digit float rendering used in every CSV cell.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with the fixed format header.
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub trailer_comments: Vec<String>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        CsvTable {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            trailer_comments: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row arity mismatch in {}", self.name);
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        fn cell(s: &str) -> String {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "# {CSV_FORMAT}");
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.iter().map(|c| cell(c)).collect::<Vec<_>>().join(","));
        }
        for c in &self.trailer_comments {
            let _ = writeln!(out, "# {c}");
        }
        out
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    format_version: u32,
    tool_version: &'a str,
    subcommand: &'a str,
    config_digest: String,
    config_echo: &'a ExperimentConfig,
    outputs: Vec<String>,
    wall_ms: u128,
}

/// Outcome of one subcommand run.
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    /// Nonzero only for verify-all with failing criteria.
    pub exit_code: i32,
}

fn write_tables(
    out_dir: &Path,
    subcommand: &str,
    cfg: &ExperimentConfig,
    tables: &[CsvTable],
    started: Instant,
) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut files = Vec::new();
    let mut names = Vec::new();
    for t in tables {
        let path = out_dir.join(format!("{}.csv", t.name));
        std::fs::write(&path, t.render())?;
        names.push(path.display().to_string());
        files.push(path);
    }
    let manifest = Manifest {
        format_version: MANIFEST_FORMAT,
        tool_version: TOOL_VERSION,
        subcommand,
        config_digest: cfg.digest(),
        config_echo: cfg,
        outputs: names,
        wall_ms: started.elapsed().as_millis(),
    };
    let mpath = out_dir.join("run_manifest.json");
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest).unwrap())?;
    files.push(mpath);
    Ok(RunSummary { files, exit_code: 0 })
}

fn site_cols(x: Site) -> [String; 2] {
    [x[0].to_string(), x[1].to_string()]
}

fn run_extrema(cfg: &ExperimentConfig) -> Result<Vec<CsvTable>> {
    let coeffs = cfg.build_coeffs()?;
    let r = find_extrema(&coeffs, 256)?;
    let mut t = CsvTable::new(
        "extrema",
        &[
            "dim", "p_min_1", "p_min_2", "p_max_1", "p_max_2", "e_min", "e_max", "hess_min_11",
            "hess_min_12", "hess_min_22", "hess_max_11", "hess_max_12", "hess_max_22",
            "nondegenerate", "unique",
        ],
    );
    t.push(vec![
        coeffs.dim().to_string(),
        fmt_float(r.p_min[0]),
        fmt_float(r.p_min[1]),
        fmt_float(r.p_max[0]),
        fmt_float(r.p_max[1]),
        fmt_float(r.e_min),
        fmt_float(r.e_max),
        fmt_float(r.hess_min[0][0]),
        fmt_float(r.hess_min[0][1]),
        fmt_float(r.hess_min[1][1]),
        fmt_float(r.hess_max[0][0]),
        fmt_float(r.hess_max[0][1]),
        fmt_float(r.hess_max[1][1]),
        r.nondegenerate.to_string(),
        r.unique.to_string(),
    ]);
    Ok(vec![t])
}

fn run_green(cfg: &ExperimentConfig) -> Result<Vec<CsvTable>> {
    if cfg.z_values.is_empty() {
        return Err(Error::Config("field `z_values` required for the green subcommand".into()));
    }
    let g = cfg.build_evaluator()?;
    let xs: Vec<Site> = if cfg.x_values.is_empty() {
        vec![[0, 0]]
    } else {
        cfg.x_values
            .iter()
            .map(|raw| cfg.site(raw, "x_values"))
            .collect::<Result<Vec<_>>>()?
    };
    let mut t = CsvTable::new("green", &["z", "x1", "x2", "value", "est_error"]);
    for &z in &cfg.z_values {
        for &x in &xs {
            let (v, err) = g.green_x_with_error(x, z)?;
            let [c1, c2] = site_cols(x);
            t.push(vec![fmt_float(z), c1, c2, fmt_float(v), fmt_float(err)]);
        }
    }
    Ok(vec![t])
}

fn run_bs_spectrum(cfg: &ExperimentConfig) -> Result<Vec<CsvTable>> {
    if cfg.z_values.is_empty() {
        return Err(Error::Config(
            "field `z_values` required for the bs-spectrum subcommand".into(),
        ));
    }
    let g = cfg.build_evaluator()?;
    let pot = cfg.build_potential()?;
    let n = pot.active_sites().len();
    let mut header: Vec<String> = vec!["z".into()];
    for k in 0..n {
        header.push(format!("lambda_{k}"));
    }
    header.extend(["tr_b".into(), "tr_abs_b".into(), "q1_norm".into()]);
    let mut t = CsvTable::new("bs_spectrum", &header.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for &z in &cfg.z_values {
        let m = build_bs_matrix(&g, &pot, z)?;
        let s = bs_spectrum(&m)?;
        let tr = trace_identities(&m, &g, &pot)?;
        let q1 = if z > g.e_max() {
            rank_one_split(&g, &pot, z)?.q1_norm
        } else {
            rank_one_split(&g.mirrored()?, &pot.negated(), -z)?.q1_norm
        };
        let mut row = vec![fmt_float(z)];
        row.extend(s.eigenvalues.iter().map(|l| fmt_float(*l)));
        row.extend([fmt_float(tr.tr_b), fmt_float(tr.tr_abs_b), fmt_float(q1)]);
        t.push(row);
    }
    Ok(vec![t])
}

fn run_solve(cfg: &ExperimentConfig) -> Result<Vec<CsvTable>> {
    let g = cfg.build_evaluator()?;
    let pot = cfg.build_potential()?;
    let grid = cfg.build_mu_grid()?;
    let mut t = CsvTable::new("solve", &["mu", "edge", "exists", "energy", "gap", "ln_gap"]);
    for &mu in grid.values() {
        for (edge, sol) in [
            ("top", solve_top_detailed(&g, &pot, mu)?),
            ("bottom", solve_bottom_detailed(&g, &pot, mu)?),
        ] {
            match sol {
                Some(s) => t.push(vec![
                    fmt_float(mu),
                    edge.into(),
                    "true".into(),
                    fmt_float(s.energy),
                    fmt_float(s.ln_gap.exp()),
                    fmt_float(s.ln_gap),
                ]),
                None => t.push(vec![
                    fmt_float(mu),
                    edge.into(),
                    "false".into(),
                    "".into(),
                    "".into(),
                    "".into(),
                ]),
            }
        }
    }
    Ok(vec![t])
}

fn run_count(cfg: &ExperimentConfig) -> Result<Vec<CsvTable>> {
    let g = cfg.build_evaluator()?;
    let pot = cfg.build_potential()?;
    let grid = cfg.build_mu_grid()?;
    let oracle = cfg.build_oracle_params()?;
    let mut t = CsvTable::new(
        "count",
        &["mu", "n_plus_oracle", "n_minus_oracle", "n_plus_bs", "n_minus_bs", "max_abs_gap"],
    );
    for &mu in grid.values() {
        let c = compare_counts(&g, &pot, mu, oracle)?;
        t.push(vec![
            fmt_float(mu),
            c.n_plus_oracle.to_string(),
            c.n_minus_oracle.to_string(),
            c.n_plus_bs.to_string(),
            c.n_minus_bs.to_string(),
            fmt_float(c.max_bs_residual),
        ]);
    }
    Ok(vec![t])
}

fn run_asymptotics(cfg: &ExperimentConfig) -> Result<Vec<CsvTable>> {
    let g = cfg.build_evaluator()?;
    let pot = cfg.build_potential()?;
    let grid = cfg.build_mu_grid()?;
    let edges = match crate::asymptotics::detect_regime(&pot) {
        Regime::Kappa0Pos => vec![Edge::Top],
        Regime::Kappa0Neg => vec![Edge::Bottom],
        Regime::Kappa0Zero => vec![Edge::Top, Edge::Bottom],
    };
    let mut t = CsvTable::new(
        "asymptotics",
        &["edge", "mu", "gap", "ln_gap", "extracted", "predicted", "rel_error"],
    );
    for edge in edges {
        let fit = fit_absorption(&g, &pot, edge, &grid)?;
        let edge_name = if edge == Edge::Top { "top" } else { "bottom" };
        for (k, &mu) in fit.mu_values.iter().enumerate() {
            t.push(vec![
                edge_name.into(),
                fmt_float(mu),
                fmt_float(fit.gaps[k]),
                fmt_float(fit.ln_gaps[k]),
                fmt_float(fit.extracted[k]),
                fmt_float(fit.predicted_constant),
                fmt_float(fit.rel_errors[k]),
            ]);
        }
        // convergence order: least-squares slope of ln(rel_err) against ln(mu)
        let lx: Vec<f64> = fit.mu_values.iter().map(|m| m.ln()).collect();
        let ly: Vec<f64> = fit.rel_errors.iter().map(|e| e.max(1e-300).ln()).collect();
        let xbar = lx.iter().sum::<f64>() / lx.len() as f64;
        let ybar = ly.iter().sum::<f64>() / ly.len() as f64;
        let xs: Vec<f64> = lx.iter().map(|x| x - xbar).collect();
        let ys: Vec<f64> = ly.iter().map(|y| y - ybar).collect();
        let order = ls_slope_through_origin(&xs, &ys);
        t.trailer_comments
            .push(format!("convergence_order,{edge_name},{}", fmt_float(order)));
    }
    Ok(vec![t])
}

fn run_bargmann_table(cfg: &ExperimentConfig) -> Result<Vec<CsvTable>> {
    let g = cfg.build_evaluator()?;
    let pot = cfg.build_potential()?;
    let grid = cfg.build_mu_grid()?;
    let oracle = cfg.build_oracle_params()?;
    let chk = bargmann_check(&g, &pot, cfg.gamma, &grid, oracle)?;
    let mut t = CsvTable::new(
        "bargmann",
        &["mu", "count_plus", "count_minus", "weighted_sum", "slope_plus_ls", "slope_minus_ls",
          "slope_plus_envelope", "slope_minus_envelope"],
    );
    for (k, &mu) in chk.mu_values.iter().enumerate() {
        t.push(vec![
            fmt_float(mu),
            chk.counts_plus[k].to_string(),
            chk.counts_minus[k].to_string(),
            fmt_float(chk.weighted_sum),
            fmt_float(chk.fitted_slope_plus),
            fmt_float(chk.fitted_slope_minus),
            fmt_float(chk.envelope_slope_plus),
            fmt_float(chk.envelope_slope_minus),
        ]);
    }
    Ok(vec![t])
}

/// Execute one subcommand against a parsed config. Returns the written files
/// and the process exit code (nonzero only for acceptance failures).
pub fn run(subcommand: &str, cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let started = Instant::now();
    let tables = match subcommand {
        "extrema" => run_extrema(cfg)?,
        "green" => run_green(cfg)?,
        "bs-spectrum" => run_bs_spectrum(cfg)?,
        "solve" => run_solve(cfg)?,
        "count" => run_count(cfg)?,
        "asymptotics" => run_asymptotics(cfg)?,
        "bargmann" => run_bargmann_table(cfg)?,
        "verify-all" => {
            let results = crate::acceptance::run_all();
            let mut t = CsvTable::new("acceptance", &["criterion", "name", "passed", "detail"]);
            let mut failed = Vec::new();
            for r in &results {
                t.push(vec![
                    r.id.to_string(),
                    r.name.clone(),
                    r.passed.to_string(),
                    r.detail.clone(),
                ]);
                if !r.passed {
                    failed.push(r.id);
                }
                println!(
                    "criterion {:>2}: {} — {} ({:.1}s)",
                    r.id,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.runtime.as_secs_f64()
                );
            }
            let mut summary = write_tables(out_dir, subcommand, cfg, &[t], started)?;
            if !failed.is_empty() {
                eprintln!("failed criteria: {failed:?}");
                summary.exit_code = 1;
            }
            return Ok(summary);
        }
        other => {
            return Err(Error::Config(format!(
                "unknown subcommand `{other}` (extrema|green|bs-spectrum|solve|count|asymptotics|bargmann|verify-all)"
            )))
        }
    };
    write_tables(out_dir, subcommand, cfg, &tables, started)
}

/// Resolve the output directory: CLI flag, then BANDEDGE_OUT, then config,
/// then ./out.
pub fn resolve_out_dir(cli_flag: Option<&str>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(d) = cli_flag {
        return PathBuf::from(d);
    }
    if let Ok(d) = std::env::var("BANDEDGE_OUT") {
        if !d.is_empty() {
            return PathBuf::from(d);
        }
    }
    PathBuf::from(cfg.outputs.dir.clone().unwrap_or_else(|| "out".into()))
}
