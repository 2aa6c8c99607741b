//! Experiment driver: the compressed-sensing matrix design problem, a gallery
//! of small synthetic instances, and CSV/JSON output.

use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algorithms::{self, RunConfig, Trace};
use crate::diagnostics::{self, RateFit, F_FLOOR};
use crate::error::{Error, Result};
use crate::numkernel::{self, Point};
use crate::par::{self, Parallelism};
use crate::regularity::{self, RegularityReport};
use crate::sets::ProjectableSet;

/// Largest ratio `f_{k+1}/f_k` reported for the published instance of the
/// compressed-sensing experiment. Shown for comparison only.
pub const PUBLISHED_MAX_RATIO: f64 = 0.9627;

/// Iterations over which a stall is detected.
pub const STALL_WINDOW: usize = 50;
/// `f_k / f_{k−STALL_WINDOW}` above this counts as a plateau.
pub const STALL_RATIO: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Cs,
    TwoLines,
    Subspaces,
    CircleLine,
    Perturbed,
    Inexact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmChoice {
    Averaged,
    /// Alternating projections between the product set and the diagonal.
    AlternatingProduct,
    /// Experimental for three or more sets.
    Cyclic,
    /// Plain alternating projections; for more than two sets this is cyclic.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub algorithm: AlgorithmChoice,
    /// Dictionary rows (cs) or ambient dimension (subspaces).
    pub n: usize,
    pub m_dict: usize,
    pub d_rows: usize,
    pub alpha: f64,
    /// Angle between the two lines, in radians.
    pub theta: f64,
    pub eps: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub stop_tol: f64,
    /// Number of sets in the subspaces experiment.
    pub m_sets: usize,
    /// Subspace dimension; defaults to `n − max(1, n/(2·m_sets))`.
    pub sub_dim: Option<usize>,
    /// Size of the shift applied in the perturbed experiment.
    pub shift: f64,
    /// Rate constant `c` used for the perturbation bound.
    pub rate_c: f64,
    /// Start the cs run from the projection of a Gaussian matrix onto the row
    /// space instead of `P₀·W`.
    pub u0_projected: bool,
    /// Keep every iterate in the trace. Defaults to off for cs, on otherwise.
    pub store_iterates: Option<bool>,
    pub batch_seeds: usize,
    pub parallelism: Parallelism,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Cs,
            algorithm: AlgorithmChoice::Averaged,
            n: 128,
            m_dict: 512,
            d_rows: 32,
            alpha: 0.1,
            theta: std::f64::consts::FRAC_PI_3,
            eps: 0.2,
            seed: 0,
            max_iter: 500,
            stop_tol: 1e-10,
            m_sets: 3,
            sub_dim: None,
            shift: 0.01,
            rate_c: 0.6,
            u0_projected: false,
            store_iterates: None,
            batch_seeds: 1,
            parallelism: Parallelism::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.run_config(self.seed).validate()?;
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("alpha must be positive"));
        }
        if !(self.theta > 0.0 && self.theta <= FRAC_PI_2) {
            return Err(Error::invalid("theta must lie in (0, π/2]"));
        }
        if !(0.0..1.0).contains(&self.eps) {
            return Err(Error::invalid("eps must lie in [0, 1)"));
        }
        if !(self.rate_c > 0.0 && self.rate_c < 1.0) {
            return Err(Error::invalid("rate_c must lie in (0, 1)"));
        }
        if self.batch_seeds == 0 {
            return Err(Error::invalid("batch_seeds must be at least 1"));
        }
        match self.experiment {
            ExperimentKind::Cs => {
                if !(self.d_rows >= 1 && self.d_rows <= self.n && self.n < self.m_dict) {
                    return Err(Error::invalid(format!(
                        "cs needs 1 ≤ d_rows ≤ n < m_dict, got d_rows={}, n={}, m_dict={}",
                        self.d_rows, self.n, self.m_dict
                    )));
                }
            }
            ExperimentKind::Subspaces => {
                if self.m_sets < 2 || self.n == 0 {
                    return Err(Error::invalid("subspaces needs n ≥ 1 and m_sets ≥ 2"));
                }
                if self.subspace_dim() >= self.n || self.subspace_dim() == 0 {
                    return Err(Error::invalid("sub_dim must lie in [1, n)"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn subspace_dim(&self) -> usize {
        self.sub_dim.unwrap_or_else(|| {
            self.n
                .saturating_sub((self.n / (2 * self.m_sets.max(1))).max(1))
        })
    }

    fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig {
            max_iter: self.max_iter,
            stop_tol: self.stop_tol,
            seed,
            inexact_eps: if self.experiment == ExperimentKind::Inexact {
                self.eps
            } else {
                0.0
            },
            store_iterates: self
                .store_iterates
                .unwrap_or(self.experiment != ExperimentKind::Cs),
            parallelism: self.parallelism,
        }
    }
}

/// One row of the predicted-versus-observed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    /// How `observed` should relate to `predicted`: `≤` or `≈`.
    pub relation: String,
    pub predicted: Option<f64>,
    pub observed: Option<f64>,
}

impl ComparisonRow {
    fn new(quantity: &str, relation: &str, predicted: Option<f64>, observed: Option<f64>) -> Self {
        Self {
            quantity: quantity.to_string(),
            relation: relation.to_string(),
            predicted,
            observed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedSummary {
    pub displacement: f64,
    pub bound: f64,
    pub shift_norm: f64,
    pub within_bound: bool,
    /// Distances from the limit to `d + F` and to `C`.
    pub limit_residuals: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub iterations: usize,
    pub converged: bool,
    pub final_f: f64,
    /// Largest `f_{k+1}/f_k` above the floating floor.
    pub max_ratio: Option<f64>,
    /// Last `f_{k+1}/f_k` above the floating floor.
    pub asymptotic_ratio: Option<f64>,
    /// `f` never increased by more than a relative `1e-12`.
    pub monotone: bool,
    /// R-linear fit of the root-mean-square distance `√(2f)`.
    pub distance_fit: Option<RateFit>,
    /// R-linear fit of `‖x_k − x̂‖` when the limit `x̂` is known.
    pub error_fit: Option<RateFit>,
    /// First iteration at which `f` had plateaued over the stall window.
    pub stall_at: Option<usize>,
    pub published_max_ratio: Option<f64>,
    pub perturbed: Option<PerturbedSummary>,
    pub comparison: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub trace: Trace,
    pub report: Option<RegularityReport>,
    pub summary: Summary,
}

/// `√(2f)`: the root-mean-square distance to the sets.
fn rms_distance(trace: &Trace) -> Vec<f64> {
    trace.f_values.iter().map(|f| (2.0 * f).sqrt()).collect()
}

fn is_monotone(f: &[f64]) -> bool {
    f.windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) || (w[0] < F_FLOOR && w[1] < F_FLOOR))
}

fn stall_at(trace: &Trace, stop_tol: f64) -> Option<usize> {
    let f = &trace.f_values;
    (STALL_WINDOW..f.len()).find(|&k| {
        f[k] > stop_tol * stop_tol
            && f[k - STALL_WINDOW] > 0.0
            && f[k] / f[k - STALL_WINDOW] > STALL_RATIO
    })
}

fn summarize(trace: &Trace, limit: Option<&Point>, stop_tol: f64) -> Summary {
    let ratios = trace.qlinear_ratios();
    let error_fit = limit.and_then(|xh| {
        if trace.iterates.len() != trace.iterations {
            return None;
        }
        diagnostics::fit_rlinear_rate(&trace.errors_to(xh)).ok()
    });
    Summary {
        iterations: trace.iterations,
        converged: trace.converged,
        final_f: trace.f_values.last().copied().unwrap_or(0.0),
        max_ratio: ratios.iter().copied().reduce(f64::max),
        asymptotic_ratio: ratios.last().copied(),
        monotone: is_monotone(&trace.f_values),
        distance_fit: diagnostics::fit_rlinear_rate(&rms_distance(trace)).ok(),
        error_fit,
        stall_at: stall_at(trace, stop_tol),
        published_max_ratio: None,
        perturbed: None,
        comparison: Vec::new(),
    }
}

/// The three sets of the matrix design problem and the starting matrix,
/// flattened row-major: the row space of `W`, matrices with orthonormal rows,
/// and the `ℓ∞` ball of radius `α`.
pub fn cs_problem(cfg: &ExperimentConfig, seed: u64) -> Result<(Vec<ProjectableSet>, Point)> {
    let w = numkernel::gaussian_matrix(cfg.n, cfg.m_dict, seed);
    let row_space = ProjectableSet::row_space(w.clone(), cfg.d_rows)?;
    let u0 = if cfg.u0_projected {
        let raw = numkernel::gaussian_matrix(cfg.d_rows, cfg.m_dict, seed.wrapping_add(1));
        row_space.project(&numkernel::flatten(&raw))?
    } else {
        let p0 = numkernel::gaussian_matrix(cfg.d_rows, cfg.n, seed.wrapping_add(1));
        numkernel::flatten(&(p0 * w))
    };
    let sets = vec![
        row_space,
        ProjectableSet::orthonormal_rows(cfg.d_rows, cfg.m_dict)?,
        ProjectableSet::linf_ball(cfg.d_rows * cfg.m_dict, cfg.alpha)?,
    ];
    Ok((sets, u0))
}

fn run_multi(
    choice: AlgorithmChoice,
    sets: &[ProjectableSet],
    x0: &Point,
    run: &RunConfig,
) -> Result<Trace> {
    match choice {
        AlgorithmChoice::Averaged => algorithms::run_averaged(sets, x0, run),
        AlgorithmChoice::AlternatingProduct => algorithms::run_averaged_via_product(sets, x0, run),
        AlgorithmChoice::Cyclic => algorithms::run_cyclic(sets, x0, run),
        AlgorithmChoice::Alternating if sets.len() == 2 => {
            algorithms::run_alternating(&sets[0], &sets[1], x0, run)
        }
        AlgorithmChoice::Alternating => algorithms::run_cyclic(sets, x0, run),
    }
}

/// The compressed-sensing matrix design run. No regularity report is made.
pub fn experiment_cs(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    cs_with_seed(cfg, cfg.seed)
}

fn cs_with_seed(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentOutput> {
    let (sets, u0) = cs_problem(cfg, seed)?;
    let run = cfg.run_config(seed);
    let trace = run_multi(cfg.algorithm, &sets, &u0, &run)?;
    let mut summary = summarize(&trace, None, cfg.stop_tol);
    summary.published_max_ratio = Some(PUBLISHED_MAX_RATIO);
    summary.comparison = vec![
        ComparisonRow::new(
            "max f ratio",
            "≈",
            Some(PUBLISHED_MAX_RATIO),
            summary.max_ratio,
        ),
        ComparisonRow::new(
            "f R-rate (fitted)",
            "≤",
            Some(1.0),
            summary.distance_fit.as_ref().map(|f| f.rate * f.rate),
        ),
    ];
    Ok(ExperimentOutput {
        config: cfg.clone(),
        seed,
        trace,
        report: None,
        summary,
    })
}

fn p2(x: f64, y: f64) -> Point {
    Point::from_column_slice(&[x, y])
}

/// The line through the origin at angle `theta` and the x-axis.
pub fn two_lines(theta: f64) -> Result<(ProjectableSet, ProjectableSet)> {
    Ok((
        ProjectableSet::line(p2(0.0, 0.0), p2(theta.cos(), theta.sin()))?,
        ProjectableSet::line(p2(0.0, 0.0), p2(1.0, 0.0))?,
    ))
}

/// Projection of `x0` onto the intersection of affine sets meeting at `anchor`.
fn affine_limit(sets: &[ProjectableSet], anchor: &Point, x0: &Point) -> Result<Point> {
    let mut normals = Vec::new();
    for s in sets {
        let cone = s.normal_cone(anchor)?;
        normals.extend(cone.kind.subspace_basis().unwrap_or_default());
    }
    let basis = numkernel::orthonormal_basis(&normals, 1e-10)?;
    let r = x0 - anchor;
    let mut out = x0.clone();
    for b in &basis {
        out.axpy(-b.dot(&r), b, 1.0);
    }
    Ok(out)
}

struct Instance {
    sets: Vec<ProjectableSet>,
    x0: Point,
    /// A point of the intersection at which regularity is evaluated.
    xbar: Point,
    limit: Option<Point>,
}

fn synthetic_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    match cfg.experiment {
        ExperimentKind::TwoLines | ExperimentKind::Inexact => {
            let (f, c) = two_lines(cfg.theta)?;
            Ok(Instance {
                sets: vec![f, c],
                x0: p2(1.0, 0.0),
                xbar: p2(0.0, 0.0),
                limit: Some(p2(0.0, 0.0)),
            })
        }
        ExperimentKind::CircleLine => {
            // the line meets the unit circle at (1, 0), at angle theta to its tangent
            let dir = p2(cfg.theta.sin(), cfg.theta.cos());
            let circle = ProjectableSet::sphere(p2(0.0, 0.0), 1.0)?;
            let line = ProjectableSet::line(p2(1.0, 0.0), dir.clone())?;
            Ok(Instance {
                sets: vec![circle, line],
                x0: p2(1.0, 0.0) + dir * 0.3,
                xbar: p2(1.0, 0.0),
                limit: Some(p2(1.0, 0.0)),
            })
        }
        ExperimentKind::Subspaces => {
            let n = cfg.n;
            let k = cfg.subspace_dim();
            let g = numkernel::gaussian_matrix(cfg.m_sets * k + 2, n, seed);
            let anchor: Point = g.row(0).transpose();
            let sets = (0..cfg.m_sets)
                .map(|i| {
                    let dirs: Vec<Point> =
                        (0..k).map(|j| g.row(2 + i * k + j).transpose()).collect();
                    ProjectableSet::affine(anchor.clone(), &dirs)
                })
                .collect::<Result<Vec<_>>>()?;
            let start: Point = g.row(1).transpose() + &anchor;
            let x0 = sets[cfg.m_sets - 1].project(&start)?;
            let limit = affine_limit(&sets, &anchor, &x0)?;
            Ok(Instance {
                sets,
                x0,
                xbar: anchor,
                limit: Some(limit),
            })
        }
        ExperimentKind::Perturbed => {
            let (f, c) = two_lines(cfg.theta)?;
            let shifted = ProjectableSet::translate(f.clone(), p2(0.0, cfg.shift))?;
            let origin = p2(0.0, 0.0);
            let limit = affine_limit(
                &[shifted, c.clone()],
                &p2(-cfg.shift / cfg.theta.tan(), 0.0),
                &origin,
            )?;
            Ok(Instance {
                sets: vec![f, c],
                x0: origin.clone(),
                xbar: origin,
                limit: Some(limit),
            })
        }
        ExperimentKind::Cs => Err(Error::invalid("cs is not a synthetic experiment")),
    }
}

/// Small synthetic instances with an exact regularity report.
pub fn experiment_synthetic(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    synthetic_with_seed(cfg, cfg.seed)
}

fn synthetic_with_seed(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentOutput> {
    let inst = synthetic_instance(cfg, seed)?;
    let run = cfg.run_config(seed);
    let c_alt = (cfg.experiment == ExperimentKind::Perturbed).then_some(cfg.rate_c);
    let report = regularity::analyze(&inst.sets, &inst.xbar, None, None)?;
    let report = match c_alt {
        Some(c) if c > report.cbar_pairwise => {
            regularity::analyze(&inst.sets, &inst.xbar, Some(c), None)?
        }
        _ => report,
    };

    let mut perturbed = None;
    let trace = match cfg.experiment {
        ExperimentKind::Inexact => {
            algorithms::run_inexact_alternating(&inst.sets[0], &inst.sets[1], &inst.x0, &run)?
        }
        ExperimentKind::Perturbed => {
            let d = p2(0.0, cfg.shift);
            let r = algorithms::run_perturbed(
                &inst.sets[0],
                &inst.sets[1],
                &d,
                &inst.xbar,
                cfg.rate_c,
                &run,
            )?;
            let shifted = ProjectableSet::translate(inst.sets[0].clone(), d)?;
            perturbed = Some(PerturbedSummary {
                displacement: r.displacement,
                bound: r.bound,
                shift_norm: r.shift_norm,
                within_bound: r.displacement <= r.bound,
                limit_residuals: [
                    shifted.distance(&r.limit)?,
                    inst.sets[1].distance(&r.limit)?,
                ],
            });
            r.trace
        }
        _ => run_multi(cfg.algorithm, &inst.sets, &inst.x0, &run)?,
    };

    let mut summary = summarize(&trace, inst.limit.as_ref(), cfg.stop_tol);
    summary.perturbed = perturbed;
    summary.comparison = comparison_rows(cfg, &report, &summary, &trace);
    Ok(ExperimentOutput {
        config: cfg.clone(),
        seed,
        trace,
        report: Some(report),
        summary,
    })
}

fn comparison_rows(
    cfg: &ExperimentConfig,
    report: &RegularityReport,
    summary: &Summary,
    trace: &Trace,
) -> Vec<ComparisonRow> {
    let mut rows = vec![
        ComparisonRow::new("cbar (pair)", "=", Some(report.cbar_pairwise), None),
        ComparisonRow::new("cond k", "=", report.cond_k(), None),
        ComparisonRow::new("cbar (averaged)", "=", Some(report.cbar_avg), None),
    ];
    let Some(rates) = report.rates else {
        return rows;
    };
    let err_rate = summary.error_fit.as_ref().map(|f| f.rate);
    let alternating = matches!(
        trace.algorithm,
        algorithms::Algorithm::Alternating | algorithms::Algorithm::Perturbed
    );
    match cfg.experiment {
        ExperimentKind::Inexact => {
            rows.push(ComparisonRow::new(
                "error R-rate per projection",
                "≤",
                Some(rates.rate_inexact.eval(cfg.eps)),
                err_rate,
            ));
        }
        ExperimentKind::Perturbed => {
            if let Some(p) = &summary.perturbed {
                rows.push(ComparisonRow::new(
                    "displacement |x~ - xbar|",
                    "≤",
                    Some(p.bound),
                    Some(p.displacement),
                ));
            }
        }
        _ if alternating => {
            rows.push(ComparisonRow::new(
                "error R-rate per projection",
                "≤",
                Some(rates.rate_alternating),
                err_rate,
            ));
            rows.push(ComparisonRow::new(
                "error R-rate (super-regular)",
                "≤",
                Some(rates.rate_alternating_both_super),
                err_rate,
            ));
        }
        _ => {
            rows.push(ComparisonRow::new(
                "error R-rate",
                "≤",
                Some(rates.rate_averaged),
                err_rate,
            ));
            rows.push(ComparisonRow::new(
                "error R-rate (super-regular)",
                "≤",
                Some(rates.rate_averaged_super),
                err_rate,
            ));
            rows.push(ComparisonRow::new(
                "max f ratio",
                "≤",
                Some(rates.qlinear_factor),
                summary.max_ratio,
            ));
        }
    }
    rows
}

/// Run the configured experiment, once per seed in
/// `seed, seed + 1, …, seed + batch_seeds − 1`. Seeds run concurrently when
/// the configuration asks for parallelism.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentOutput>> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.batch_seeds as u64)
        .map(|i| cfg.seed.wrapping_add(i))
        .collect();
    par::try_map(cfg.parallelism, &seeds, |&seed| match cfg.experiment {
        ExperimentKind::Cs => cs_with_seed(cfg, seed),
        _ => synthetic_with_seed(cfg, seed),
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Write the trace as CSV with columns
/// `iter, f, log10_f, grad_norm, step_norm, dist_1..dist_m, ratio`.
/// `step_norm` and `ratio` compare with the previous row and are blank on
/// the first one.
pub fn write_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "iter".to_string(),
        "f".into(),
        "log10_f".into(),
        "grad_norm".into(),
        "step_norm".into(),
    ];
    header.extend((1..=trace.set_count).map(|i| format!("dist_{i}")));
    header.push("ratio".into());
    w.write_record(&header).map_err(ser)?;
    for k in 0..trace.f_values.len() {
        let f = trace.f_values[k];
        let mut row = vec![
            k.to_string(),
            fmt_f64(f),
            fmt_f64(f.log10()),
            fmt_f64(trace.grad_norms[k]),
            if k == 0 {
                String::new()
            } else {
                fmt_f64(trace.step_norms[k - 1])
            },
        ];
        row.extend(trace.per_set_distances[k].iter().map(|&d| fmt_f64(d)));
        row.push(if k == 0 {
            String::new()
        } else {
            fmt_f64(trace.ratios[k - 1])
        });
        w.write_record(&row).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialize(e.to_string()))
}

pub fn write_json<W: Write>(output: &ExperimentOutput, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, output).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn read_json(path: &Path) -> Result<ExperimentOutput> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::Serialize(e.to_string()))
}

/// Write one experiment result to `path` in the given format.
pub fn emit(output: &ExperimentOutput, format: OutputFormat, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(&output.trace, &mut w)?,
        OutputFormat::Json => write_json(output, &mut w)?,
    }
    w.flush().map_err(io_err)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

/// Human-readable summary with the predicted-versus-observed table.
pub fn render_summary(output: &ExperimentOutput) -> String {
    let s = &output.summary;
    let mut text = format!(
        "experiment {:?} / {:?}, seed {}\niterations {}  converged {}  final f {:.3e}  monotone {}\n",
        output.config.experiment,
        output.trace.algorithm,
        output.seed,
        s.iterations,
        s.converged,
        s.final_f,
        s.monotone,
    );
    if let Some(fit) = &s.distance_fit {
        text += &format!(
            "rms-distance fit: rate {:.6} over {:?}, residual {:.3e}\n",
            fit.rate, fit.window, fit.residual
        );
    }
    if let Some(k) = s.stall_at {
        text += &format!("f plateaued at iteration {k}\n");
    }
    if output.trace.degenerate_projections > 0 {
        text += &format!(
            "{} projections hit a tie and used the tie-break\n",
            output.trace.degenerate_projections
        );
    }
    text += &format!(
        "{:<32} {:>3} {:>12} {:>12}\n",
        "quantity", "", "predicted", "observed"
    );
    for row in &s.comparison {
        text += &format!(
            "{:<32} {:>3} {:>12} {:>12}\n",
            row.quantity,
            row.relation,
            fmt_opt(row.predicted),
            fmt_opt(row.observed)
        );
    }
    text
}
