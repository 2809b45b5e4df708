//! Argument definitions and subcommand drivers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lpcop_core::{
    biplot_coordinates, feature_importance, feature_matrix, fit_pairs, fit_table, g2_test, ls_plot,
    mi_permutation_pvalue, mutual_information, smooth_g2_fitted, smooth_g2_test, to_loglinear, FitConfig, FitOptions,
    FittedCopula, Marginal, MarginalMode, MaxEntCopulaModel, Penalty, TestReport,
};
use serde::Serialize;

use crate::input::{self, Dataset, InputFormat};
use crate::model_file::{ModelFile, Provenance};

#[derive(Debug, Parser)]
#[command(
    name = "lpcop",
    version,
    about = "Maximum-entropy LP copula models for mixed bivariate data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a copula model, print its equation and optionally save it.
    Fit(FitCmd),
    /// Test independence.
    Test(TestCmd),
    /// Smoothed cell probabilities of a contingency table.
    Smooth(DataCmd),
    /// Row and column biplot coordinates.
    Biplot(DataCmd),
    /// Cell-averaged copula density on a regular u-v grid.
    Grid(GridCmd),
    /// LP feature matrix of numeric columns.
    Features(FeaturesCmd),
    /// Scale logistic coefficient pairs for an LS-plot.
    LsPlot(LsPlotCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Aic,
    Bic,
    /// Keep every co-mean.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MarginalArg {
    Empirical,
    Negbin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    G2,
    SmoothG2,
    MiPerm,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Input CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pairs")]
    pub format: InputFormat,
    #[arg(long, value_enum, default_value = "aic")]
    pub penalty: PenaltyArg,
    /// Highest LP order per variable.
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
    #[arg(long, value_enum, default_value = "empirical")]
    pub marginals: MarginalArg,
    /// Gradient max-norm at which the solver stops.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DataCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Recorded in the model provenance.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving model.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TestCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "smooth-g2")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Permutation replicates for mi-perm.
    #[arg(long, default_value_t = 999)]
    pub perms: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Saved model to use instead of fitting --data.
    #[arg(long = "model", conflicts_with = "data")]
    pub model_file: Option<PathBuf>,
    /// Cells per axis.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FeaturesCmd {
    /// CSV of numeric columns with a header.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub max_order: usize,
    /// Binary response column; excluded from the matrix and used to rank predictors.
    #[arg(long)]
    pub target: Option<String>,
    /// Directory receiving features.csv and features.schema.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct LsPlotCmd {
    /// CSV with header `var,alpha1,alpha2`.
    #[arg(long)]
    pub coefficients: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ModelArgs {
    pub fn config(&self) -> Result<FitConfig> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            bail!("--tol must be positive");
        }
        Ok(FitConfig {
            penalty: match self.penalty {
                PenaltyArg::Aic => Penalty::Aic,
                PenaltyArg::Bic => Penalty::Bic,
                PenaltyArg::Dense => Penalty::Dense,
            },
            max_order: self.max_order,
            marginals: match self.marginals {
                MarginalArg::Empirical => MarginalMode::Empirical,
                MarginalArg::Negbin => MarginalMode::negbin(),
            },
            solver: FitOptions {
                tol: self.tol,
                max_iter: self.max_iter,
            },
        })
    }

    fn path(&self) -> Result<&Path> {
        self.data.as_deref().context("--data is required")
    }

    pub fn load(&self) -> Result<Loaded> {
        let path = self.path()?;
        let src = input::read_source(path)?;
        let data = input::parse(&src.bytes, self.format).with_context(|| format!("{}", path.display()))?;
        Ok(Loaded {
            data,
            sha256: src.sha256,
            config: self.config()?,
        })
    }
}

pub struct Loaded {
    pub data: Dataset,
    pub sha256: String,
    pub config: FitConfig,
}

impl Loaded {
    pub fn fit(&self) -> Result<FittedCopula> {
        Ok(match &self.data {
            Dataset::Table(t) => fit_table(t, &self.config)?,
            Dataset::Pairs { pairs, .. } => fit_pairs(pairs, &self.config)?,
        })
    }

    /// Display labels for the atoms of each marginal.
    fn labels(&self, model: &MaxEntCopulaModel) -> (Vec<String>, Vec<String>) {
        let atoms = |m: &Marginal| m.atoms().iter().map(|a| a.to_string()).collect::<Vec<_>>();
        let (mx, my) = (model.x_basis().marginal(), model.y_basis().marginal());
        match &self.data {
            Dataset::Table(t) if mx.len() == t.n_rows() && my.len() == t.n_cols() => {
                (t.row_labels().to_vec(), t.col_labels().to_vec())
            }
            _ => (atoms(mx), atoms(my)),
        }
    }
}

fn emit(out: Option<&Path>, file: &str, content: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let path = dir.join(file);
            fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
            log::info!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn minus(v: f64) -> String {
    if v < 0.0 {
        format!("− {:.3}", -v)
    } else {
        format!("+ {v:.3}")
    }
}

/// The fitted density as `exp{θ·S_j(u;X)·S_k(v;Y) + … − log Z}`.
pub fn equation(model: &MaxEntCopulaModel, names: &[String; 2]) -> String {
    let mut s = String::from("exp{");
    for (i, (&(j, k), &th)) in model.terms().iter().zip(model.theta()).enumerate() {
        let term = format!("S{j}(u;{})·S{k}(v;{})", names[0], names[1]);
        if i == 0 {
            let sign = if th < 0.0 { "−" } else { "" };
            s.push_str(&format!("{sign}{:.3}·{term}", th.abs()));
        } else {
            let sign = if th < 0.0 { "−" } else { "+" };
            s.push_str(&format!(" {sign} {:.3}·{term}", th.abs()));
        }
    }
    if model.is_uniform() {
        s.push('0');
    } else {
        s.push(' ');
        s.push_str(&minus(-model.log_z()));
    }
    s.push('}');
    s
}

fn provenance(args: &ModelArgs, loaded: &Loaded, seed: Option<u64>) -> Provenance {
    Provenance {
        input: args.data.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        input_sha256: loaded.sha256.clone(),
        input_format: args.format.name().to_string(),
        config: loaded.config,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(c) => cmd_fit(&c),
        Command::Test(c) => cmd_test(&c),
        Command::Smooth(c) => cmd_smooth(&c),
        Command::Biplot(c) => cmd_biplot(&c),
        Command::Grid(c) => cmd_grid(&c),
        Command::Features(c) => cmd_features(&c),
        Command::LsPlot(c) => cmd_ls_plot(&c),
    }
}

fn cmd_fit(c: &FitCmd) -> Result<()> {
    let loaded = c.model.load()?;
    let fit = loaded.fit()?;
    let names = loaded.data.variable_names();
    let m = &fit.model;
    println!("{}", equation(m, &names));
    let terms: Vec<String> = m.terms().iter().map(|(j, k)| format!("({j},{k})")).collect();
    println!(
        "terms: {}",
        if terms.is_empty() {
            "none".into()
        } else {
            terms.join(" ")
        }
    );
    println!(
        "n = {}, degrees = ({}, {}), MI = {:.6}, log Z = {:.6}, iterations = {}",
        fit.comoments.n(),
        m.x_basis().degree(),
        m.y_basis().degree(),
        mutual_information(m),
        m.log_z(),
        m.report().iterations
    );
    if let Some(dir) = &c.out {
        let file = ModelFile::new(m, names, provenance(&c.model, &loaded, c.seed));
        emit(Some(dir), "model.json", &file.to_json()?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    format: &'static str,
    report: &'a TestReport,
    provenance: Provenance,
}

fn cmd_test(c: &TestCmd) -> Result<()> {
    let loaded = c.model.load()?;
    let report = match c.method {
        MethodArg::G2 => g2_test(&loaded.data.table()?),
        MethodArg::SmoothG2 => match &loaded.data {
            Dataset::Table(t) => smooth_g2_test(t, &loaded.config)?,
            // Pairs keep their continuous marginals rather than a cross-tabulation.
            Dataset::Pairs { .. } => smooth_g2_fitted(&loaded.fit()?),
        },
        MethodArg::MiPerm => mi_permutation_pvalue(&loaded.data.pairs(), &loaded.config, c.perms, c.seed)?,
    };
    let seed = matches!(c.method, MethodArg::MiPerm).then_some(c.seed);
    let file = ReportFile {
        format: "lpcop-report/1",
        report: &report,
        provenance: provenance(&c.model, &loaded, seed),
    };
    let mut json = serde_json::to_string_pretty(&file)?;
    json.push('\n');
    emit(c.out.as_deref(), "report.json", &json)
}

fn cmd_smooth(c: &DataCmd) -> Result<()> {
    let loaded = c.model.load()?;
    let fit = loaded.fit()?;
    let table = loaded.data.table()?;
    let cells = fit.model.smooth_cells(&table)?;
    let mut header = vec![String::new()];
    header.extend(table.col_labels().iter().cloned());
    let rows = table.row_labels().iter().zip(&cells).map(|(label, row)| {
        std::iter::once(label.clone())
            .chain(row.iter().map(|v| v.to_string()))
            .collect()
    });
    emit(c.out.as_deref(), "smooth.csv", &csv_string(&header, rows)?)
}

fn cmd_biplot(c: &DataCmd) -> Result<()> {
    let loaded = c.model.load()?;
    let fit = loaded.fit()?;
    let bp = biplot_coordinates(&to_loglinear(&fit.model));
    let (rl, cl) = loaded.labels(&fit.model);
    let header: Vec<String> = ["kind", "label", "dim1", "dim2"].map(String::from).to_vec();
    let point = |kind: &str, label: &String, p: &[f64; 2]| {
        vec![kind.to_string(), label.clone(), p[0].to_string(), p[1].to_string()]
    };
    let rows = rl
        .iter()
        .zip(&bp.rows)
        .map(|(l, p)| point("row", l, p))
        .chain(cl.iter().zip(&bp.cols).map(|(l, p)| point("col", l, p)));
    emit(c.out.as_deref(), "biplot.csv", &csv_string(&header, rows)?)
}

/// Overlap lengths of the marginal's cells with `[i/r, (i+1)/r]`, as sparse
/// `(cell, length)` lists per grid interval.
fn overlaps(m: &Marginal, r: usize) -> Vec<Vec<(usize, f64)>> {
    let mut out = vec![Vec::new(); r];
    for k in 0..m.len() {
        let (lo, hi) = m.cell_bounds(k);
        let first = ((lo * r as f64).floor() as usize).min(r - 1);
        let last = ((hi * r as f64).ceil() as usize).clamp(first + 1, r);
        for (i, slot) in out.iter_mut().enumerate().take(last).skip(first) {
            let a = (i as f64 / r as f64).max(lo);
            let b = ((i + 1) as f64 / r as f64).min(hi);
            if b > a {
                slot.push((k, b - a));
            }
        }
    }
    out
}

/// Exact averages of the piecewise-constant copula density over an `r x r`
/// grid; `grid[i][j]` covers `u` in cell `i` and `v` in cell `j`.
pub fn cell_average_grid(model: &MaxEntCopulaModel, r: usize) -> Result<Vec<Vec<f64>>> {
    if r == 0 {
        bail!("--resolution must be at least 1");
    }
    let ou = overlaps(model.x_basis().marginal(), r);
    let ov = overlaps(model.y_basis().marginal(), r);
    let dens = model.density_grid();
    let ky = model.y_basis().support_len();
    let area = (r * r) as f64;
    Ok(ou
        .iter()
        .map(|wu| {
            let mut a = vec![0.0; ky];
            for &(k, w) in wu {
                for (dst, d) in a.iter_mut().zip(&dens[k]) {
                    *dst += w * d;
                }
            }
            ov.iter()
                .map(|wv| area * wv.iter().map(|&(l, w)| w * a[l]).sum::<f64>())
                .collect()
        })
        .collect())
}

fn cmd_grid(c: &GridCmd) -> Result<()> {
    let model = match &c.model_file {
        Some(path) => ModelFile::load(path)?.to_model()?,
        None => c.model.load()?.fit()?.model,
    };
    let r = c.resolution;
    let grid = cell_average_grid(&model, r)?;
    let header: Vec<String> = ["u", "v", "density"].map(String::from).to_vec();
    let rows = grid.iter().enumerate().flat_map(|(i, row)| {
        row.iter().enumerate().map(move |(j, d)| {
            vec![
                ((i as f64 + 0.5) / r as f64).to_string(),
                ((j as f64 + 0.5) / r as f64).to_string(),
                d.to_string(),
            ]
        })
    });
    emit(c.out.as_deref(), "grid.csv", &csv_string(&header, rows)?)
}

fn cmd_features(c: &FeaturesCmd) -> Result<()> {
    let src = input::read_source(&c.data)?;
    let mut cols = input::parse_columns(&src.bytes).with_context(|| format!("{}", c.data.display()))?;
    let target = match &c.target {
        Some(name) => {
            let i = cols
                .iter()
                .position(|(n, _)| n == name)
                .with_context(|| format!("no column named {name:?}"))?;
            Some(cols.remove(i).1)
        }
        None => None,
    };
    let fm = feature_matrix(&cols, c.max_order)?;
    let rows = fm.rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect());
    emit(Some(&c.out), "features.csv", &csv_string(&fm.names, rows)?)?;
    let mut schema = serde_json::to_string_pretty(&fm.schema)?;
    schema.push('\n');
    emit(Some(&c.out), "features.schema.json", &schema)?;
    if let Some(y) = target {
        let scores = feature_importance(&cols, &y, &FitConfig::default())?;
        let mut json = serde_json::to_string_pretty(&scores)?;
        json.push('\n');
        emit(Some(&c.out), "importance.json", &json)?;
    }
    for name in &fm.skipped {
        eprintln!("skipped constant column {name}");
    }
    Ok(())
}

fn cmd_ls_plot(c: &LsPlotCmd) -> Result<()> {
    let src = input::read_source(&c.coefficients)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(&src.bytes[..]);
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            bail!("line {line}: expected var,alpha1,alpha2");
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .with_context(|| format!("line {line}, column {}: expected a number, found {:?}", i + 1, &rec[i]))
        };
        points.push((rec[0].to_string(), num(1)?, num(2)?));
    }
    let header: Vec<String> = ["var", "x", "y"].map(String::from).to_vec();
    let rows = ls_plot(&points)
        .into_iter()
        .map(|(n, x, y)| vec![n, x.to_string(), y.to_string()]);
    emit(c.out.as_deref(), "ls_plot.csv", &csv_string(&header, rows)?)
}

/// 2 for a solver failure, 1 for anything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let diverged = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<lpcop_core::Error>(),
            Some(lpcop_core::Error::NonConvergence { .. })
        )
    });
    if diverged {
        2
    } else {
        1
    }
}
