//! Experiment runner: resolves a [`RunSpec`] to a problem and method, runs
//! it with optional spectral probes, certifies the final iterate and writes
//! traces. [`sweep`] runs many specs in parallel and aggregates escape
//! statistics.

pub mod cli;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigFile, OptimizerConfig, ProblemConstants, ValidatedConfig};
use crate::error::{Error, Result};
use crate::optim::{
    framework_run, gd_plugin, run_method, scsg_epoch_plugin, EpochEvent, EpochHook, FirstOrderCheck,
    IfoConvention, IterateState, MethodKind, PluginAlgorithm, Probe,
};
use crate::problem::{
    generate_dataset, make_quadratic_saddle, make_sigmoid_problem_with, Dataset, FiniteSumProblem,
    QuadraticSaddleSpec,
};
use crate::sampling::{standard_normal_vec, substream, StreamRng, Substream};
use crate::spectral::lambda_min_default;
use crate::trace::{Trace, TraceRow};

pub use crate::trace::write_trace;

/// `‖∇f‖` at or below which a run counts as converged in aggregates.
pub const CONVERGED_GRAD_NORM: f64 = 1e-3;
/// Epochs of `‖∇f‖ <= ε` that make a plateau.
pub const PLATEAU_EPOCHS: usize = 3;
/// Relative drop below the plateau value that marks an escape.
pub const ESCAPE_DROP: f64 = 0.01;
/// A final `λ̂_min` below this means the run ended at a saddle.
pub const SADDLE_LAMBDA: f64 = -1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    /// Generated two-class data with the sigmoid loss.
    Sigmoid {
        n: usize,
        d: usize,
        lambda: f64,
        data_seed: u64,
        signed_labels: bool,
    },
    /// Sigmoid loss on a dataset CSV.
    SigmoidFile {
        path: PathBuf,
        lambda: f64,
        signed_labels: bool,
    },
    Quadratic {
        spectrum: Vec<f64>,
        noise: Vec<Vec<f64>>,
    },
}

impl ProblemSpec {
    /// Dataset I: `n = 40`, `d = 4`, `λ = 0.5`.
    pub fn dataset_one(data_seed: u64) -> Self {
        ProblemSpec::Sigmoid {
            n: 40,
            d: 4,
            lambda: 0.5,
            data_seed,
            signed_labels: false,
        }
    }

    /// The two-dimensional saddle `a = (1, -1)` with `c_z = ±e₂`.
    pub fn pm_e2_saddle() -> Self {
        ProblemSpec::Quadratic {
            spectrum: vec![1.0, -1.0],
            noise: vec![vec![0.0, 1.0], vec![0.0, -1.0]],
        }
    }

    pub fn build(&self) -> Result<FiniteSumProblem> {
        match self {
            ProblemSpec::Sigmoid {
                n,
                d,
                lambda,
                data_seed,
                signed_labels,
            } => {
                let data = generate_dataset(*n, *d, *data_seed)?;
                make_sigmoid_problem_with(&data, *lambda, *signed_labels)
            }
            ProblemSpec::SigmoidFile {
                path,
                lambda,
                signed_labels,
            } => {
                let data = Dataset::read_csv(path)?;
                make_sigmoid_problem_with(&data, *lambda, *signed_labels)
            }
            ProblemSpec::Quadratic { spectrum, noise } => {
                make_quadratic_saddle(&QuadraticSaddleSpec::new(spectrum.clone(), noise.clone())?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PluginSpec {
    ScsgEpoch { batch: usize, minibatch: usize },
    Gd,
}

impl PluginSpec {
    fn build(&self, eta: f64) -> Result<PluginAlgorithm> {
        match *self {
            PluginSpec::ScsgEpoch { batch, minibatch } => scsg_epoch_plugin(batch, minibatch, eta),
            PluginSpec::Gd => Ok(gd_plugin(eta)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MethodSpec {
    Method(MethodKind),
    Framework { plugin: PluginSpec, check: FirstOrderCheck },
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Method(m) => m.name().to_string(),
            MethodSpec::Framework { plugin, .. } => match plugin {
                PluginSpec::ScsgEpoch { batch, minibatch } => format!("framework-scsg-{batch}-{minibatch}"),
                PluginSpec::Gd => "framework-gd".to_string(),
            },
        }
    }
}

/// Starting point of a run.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// `x₀ ~ N(0, scale² I)` from the init substream.
    Gaussian { scale: f64 },
    Point(Vec<f64>),
}

impl Default for Init {
    fn default() -> Self {
        Init::Gaussian { scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub method: MethodSpec,
    pub config: OptimizerConfig,
    /// When present, the configuration is validated against the theory rows.
    pub constants: Option<ProblemConstants>,
    pub seed: u64,
    pub init: Init,
    /// Probe `λ̂_min` and `τ̂` every this many epochs; 0 disables probes.
    pub probe_lambda_every: usize,
    pub ifo_convention: IfoConvention,
}

impl RunSpec {
    /// A practical-mode spec with default initialization and no probes.
    pub fn new(problem: ProblemSpec, method: MethodKind, config: OptimizerConfig, seed: u64) -> Self {
        RunSpec {
            problem,
            method: MethodSpec::Method(method),
            config,
            constants: None,
            seed,
            init: Init::default(),
            probe_lambda_every: 0,
            ifo_convention: IfoConvention::Paper,
        }
    }

    /// Resolves a configuration file. Relative `data_file` paths are taken
    /// from `base_dir`.
    pub fn from_config(file: &ConfigFile, base_dir: Option<&Path>) -> Result<RunSpec> {
        let signed_labels = file.signed_labels.unwrap_or(false);
        let lambda = file.lambda.unwrap_or(0.5);
        let problem = match file.problem.as_deref().unwrap_or("sigmoid") {
            "sigmoid" => match &file.data_file {
                Some(path) => {
                    let path = PathBuf::from(path);
                    let path = match base_dir {
                        Some(dir) if path.is_relative() => dir.join(path),
                        _ => path,
                    };
                    ProblemSpec::SigmoidFile {
                        path,
                        lambda,
                        signed_labels,
                    }
                }
                None => ProblemSpec::Sigmoid {
                    n: file.n.unwrap_or(40),
                    d: file.d.unwrap_or(4),
                    lambda,
                    data_seed: file.data_seed.unwrap_or(0),
                    signed_labels,
                },
            },
            "quadratic" => {
                let spectrum = file
                    .spectrum
                    .clone()
                    .ok_or_else(|| Error::Config("quadratic problem needs `spectrum`".into()))?;
                let noise = match (&file.noise, file.n) {
                    (Some(noise), _) => noise.clone(),
                    (None, Some(n)) => vec![vec![0.0; spectrum.len()]; n],
                    (None, None) => {
                        return Err(Error::Config("quadratic problem needs `noise` or `n`".into()))
                    }
                };
                ProblemSpec::Quadratic { spectrum, noise }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown problem `{other}` (expected sigmoid or quadratic)"
                )))
            }
        };
        let n = problem.build()?.n();
        let config = file.optimizer_config(n)?;
        let method = match file.method.as_deref().unwrap_or("cnc-scsg") {
            "framework" => MethodSpec::Framework {
                plugin: PluginSpec::ScsgEpoch {
                    batch: file.plugin_batch.unwrap_or(n),
                    minibatch: file.plugin_minibatch.unwrap_or(config.b),
                },
                check: FirstOrderCheck::Exact,
            },
            "framework-gd" => MethodSpec::Framework {
                plugin: PluginSpec::Gd,
                check: FirstOrderCheck::Exact,
            },
            name => MethodSpec::Method(name.parse()?),
        };
        let init = match (&file.x0, file.init_scale) {
            (Some(x0), _) => Init::Point(x0.clone()),
            (None, scale) => Init::Gaussian {
                scale: scale.unwrap_or(1.0),
            },
        };
        let ifo_convention = match &file.ifo_convention {
            Some(s) => s.parse()?,
            None => IfoConvention::Paper,
        };
        Ok(RunSpec {
            problem,
            method,
            config,
            constants: file.constants(),
            seed: file.seed.unwrap_or(0),
            init,
            probe_lambda_every: file.probe_every.unwrap_or(0),
            ifo_convention,
        })
    }

    pub fn validated_config(&self) -> Result<ValidatedConfig> {
        match &self.constants {
            Some(c) => self.config.clone().validated_with(c),
            None => self.config.clone().validated(),
        }
    }

    /// `x₀` for a problem of dimension `d`.
    pub fn initial_point(&self, d: usize) -> Result<Array1<f64>> {
        match &self.init {
            Init::Gaussian { scale } => {
                if !(scale.is_finite() && *scale >= 0.0) {
                    return Err(Error::Config(format!("init_scale must be finite and >= 0, got {scale}")));
                }
                let mut rng = substream(self.seed, Substream::Init);
                Ok(*scale * standard_normal_vec(&mut rng, d))
            }
            Init::Point(x) => {
                if x.len() != d {
                    return Err(Error::Dimension(format!(
                        "x0 has length {} but the problem dimension is {d}",
                        x.len()
                    )));
                }
                Ok(Array1::from_vec(x.clone()))
            }
        }
    }

    /// `<method>_seed<seed>.csv`.
    pub fn file_name(&self) -> String {
        format!("{}_seed{}.csv", self.method.label(), self.seed)
    }
}

/// Probes `λ̂_min` and `τ̂` on the probe substream, which the optimizer
/// never touches.
struct SpectralProbe<'a> {
    p: &'a FiniteSumProblem,
    every: usize,
    rng: StreamRng,
    error: Option<Error>,
}

impl EpochHook for SpectralProbe<'_> {
    fn on_epoch(&mut self, epoch: usize, state: &IterateState, _event: EpochEvent) -> Option<Probe> {
        if self.every == 0 || !epoch.is_multiple_of(self.every) || self.error.is_some() {
            return None;
        }
        match lambda_min_default(self.p, state.x.view(), &mut self.rng) {
            Ok(r) => Some(Probe {
                lambda_min: r.lambda_min_hat,
                tau: r.tau_hat,
            }),
            Err(e) => {
                self.error = Some(e.at_epoch(epoch));
                None
            }
        }
    }
}

/// Runs one spec. Divergence ends the trace with reason `diverged` rather
/// than failing; other errors carry the epoch at which they occurred.
pub fn run_experiment(spec: &RunSpec) -> Result<Trace> {
    let p = spec.problem.build()?;
    let cfg = spec.validated_config()?;
    let x0 = spec.initial_point(p.dim())?;
    let mut streams = crate::sampling::RunStreams::new(spec.seed);
    let mut probe = SpectralProbe {
        p: &p,
        every: spec.probe_lambda_every,
        rng: substream(spec.seed, Substream::Probe),
        error: None,
    };
    let outcome = match &spec.method {
        MethodSpec::Method(m) => run_method(*m, &p, &cfg, &mut streams, x0, spec.ifo_convention, &mut [&mut probe]),
        MethodSpec::Framework { plugin, check } => {
            let plugin = plugin.build(cfg.eta)?;
            framework_run(&p, &plugin, &cfg, &mut streams, x0, spec.ifo_convention, *check)
        }
    };
    let mut trace = match outcome {
        Ok(t) => t,
        Err(Error::Diverged(report)) => report.trace,
        Err(e) => return Err(e),
    };
    if let Some(e) = probe.error {
        return Err(e);
    }

    let x_final = Array1::from_vec(trace.summary.x_final.clone());
    if x_final.iter().all(|v| v.is_finite()) {
        // a fresh probe stream, so certification does not depend on probing
        let mut rng = substream(spec.seed, Substream::Probe);
        let report = lambda_min_default(&p, x_final.view(), &mut rng)?;
        trace.summary.final_lambda_min = Some(report.lambda_min_hat);
    }
    trace.summary.seed = spec.seed;
    trace.summary.second_order_calls = p.second_order_count();
    Ok(trace)
}

/// Epochs from plateau start to escape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeEpochs {
    After(usize),
    /// A plateau was found and the run ended at a saddle.
    Never,
}

impl EscapeEpochs {
    fn as_f64(self) -> f64 {
        match self {
            EscapeEpochs::After(k) => k as f64,
            EscapeEpochs::Never => f64::INFINITY,
        }
    }
}

/// Escape-epoch count for one trace.
///
/// A plateau starts at the first run of [`PLATEAU_EPOCHS`] rows with
/// `‖∇f‖ <= ε`; its value is `f` at the last of those rows. The escape is
/// the first later row with `f < v - 0.01|v|`. Without an escape the result
/// is [`EscapeEpochs::Never`] when the final `λ̂_min` says the run ended at
/// a saddle, and `None` otherwise (no saddle was visited, or the plateau was
/// a minimum).
pub fn escape_epochs(rows: &[TraceRow], eps: f64, final_lambda_min: Option<f64>) -> Option<EscapeEpochs> {
    let mut run = 0;
    let mut plateau = None;
    for (k, row) in rows.iter().enumerate() {
        if row.grad_norm <= eps {
            run += 1;
            if run == PLATEAU_EPOCHS {
                plateau = Some(k);
                break;
            }
        } else {
            run = 0;
        }
    }
    let k = plateau?;
    let start = k + 1 - PLATEAU_EPOCHS;
    let value = rows[k].f;
    let target = value - ESCAPE_DROP * value.abs();
    if let Some(j) = rows[k + 1..].iter().position(|r| r.f < target) {
        return Some(EscapeEpochs::After(rows[k + 1 + j].epoch - rows[start].epoch));
    }
    match final_lambda_min {
        Some(l) if l < SADDLE_LAMBDA => Some(EscapeEpochs::Never),
        _ => None,
    }
}

/// Linear-interpolation quantile of sorted values; infinite when an
/// interpolation endpoint is.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if sorted[hi].is_infinite() {
        return Some(sorted[hi]);
    }
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Escape-epoch quantiles; `null` in JSON stands for "never escaped".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: String,
    pub runs: usize,
    pub seeds: Vec<u64>,
    /// Per-seed escape counts, aligned with `seeds`.
    pub escape_epochs: Vec<Option<EscapeEpochs>>,
    pub escape_quantiles: Option<Quantiles>,
    pub never_escaped: usize,
    /// Runs whose final `‖∇f‖ <= 1e-3`.
    pub converged: usize,
    pub diverged: usize,
    pub median_total_ifo: Option<f64>,
}

impl MethodAggregate {
    pub fn median_escape(&self) -> Option<f64> {
        self.escape_quantiles.as_ref().map(|q| q.median)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub methods: Vec<MethodAggregate>,
}

impl SweepAggregate {
    pub fn method(&self, name: &str) -> Option<&MethodAggregate> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Groups traces by method, keeping the order of first appearance.
pub fn aggregate(specs: &[RunSpec], traces: &[Trace]) -> SweepAggregate {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<(&RunSpec, &Trace)>> = BTreeMap::new();
    for (spec, trace) in specs.iter().zip(traces) {
        let label = spec.method.label();
        if !groups.contains_key(&label) {
            order.push(label.clone());
        }
        groups.entry(label).or_default().push((spec, trace));
    }
    let methods = order
        .into_iter()
        .map(|label| {
            let runs = &groups[&label];
            let escapes: Vec<Option<EscapeEpochs>> = runs
                .iter()
                .map(|(s, t)| escape_epochs(&t.rows, s.config.eps, t.summary.final_lambda_min))
                .collect();
            let mut counts: Vec<f64> = escapes.iter().flatten().map(|e| e.as_f64()).collect();
            counts.sort_by(f64::total_cmp);
            let escape_quantiles = match (quantile(&counts, 0.25), quantile(&counts, 0.5), quantile(&counts, 0.75)) {
                (Some(q25), Some(median), Some(q75)) => Some(Quantiles { q25, median, q75 }),
                _ => None,
            };
            let mut ifo: Vec<f64> = runs.iter().map(|(_, t)| t.summary.total_ifo as f64).collect();
            ifo.sort_by(f64::total_cmp);
            MethodAggregate {
                runs: runs.len(),
                seeds: runs.iter().map(|(s, _)| s.seed).collect(),
                never_escaped: escapes.iter().filter(|e| **e == Some(EscapeEpochs::Never)).count(),
                escape_epochs: escapes,
                escape_quantiles,
                converged: runs
                    .iter()
                    .filter(|(_, t)| t.summary.final_grad_norm <= CONVERGED_GRAD_NORM)
                    .count(),
                diverged: runs
                    .iter()
                    .filter(|(_, t)| t.summary.reason == crate::trace::StopReason::Diverged)
                    .count(),
                median_total_ifo: quantile(&ifo, 0.5),
                method: label,
            }
        })
        .collect();
    SweepAggregate { methods }
}

pub struct SweepResult {
    pub traces: Vec<Trace>,
    pub aggregate: SweepAggregate,
}

/// Runs specs in parallel. With `out_dir`, each worker writes its trace as
/// [`RunSpec::file_name`] and the aggregate goes to `aggregate.json`.
pub fn sweep(specs: &[RunSpec], out_dir: Option<&Path>) -> Result<SweepResult> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let traces = specs
        .par_iter()
        .map(|spec| {
            let trace = run_experiment(spec)?;
            if let Some(dir) = out_dir {
                write_trace(&trace, dir.join(spec.file_name()))?;
            }
            Ok(trace)
        })
        .collect::<Result<Vec<Trace>>>()?;
    let aggregate = aggregate(specs, &traces);
    if let Some(dir) = out_dir {
        let path = dir.join("aggregate.json");
        let mut json = serde_json::to_string_pretty(&aggregate).expect("aggregate serializes");
        json.push('\n');
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }
    Ok(SweepResult { traces, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StopRule;
    use crate::trace::StopReason;

    fn row(epoch: usize, f: f64, grad_norm: f64) -> TraceRow {
        TraceRow {
            epoch,
            f,
            grad_norm,
            ifo: epoch as u64,
            perturbed: false,
            lambda_min: None,
            tau: None,
        }
    }

    #[test]
    fn escape_counted_from_plateau_start() {
        let rows = vec![
            row(0, 5.0, 1.0),
            row(1, 1.0, 0.01),
            row(2, 1.0, 0.01),
            row(3, 1.0, 0.01),
            row(4, 0.995, 0.5),
            row(5, 0.98, 0.5),
        ];
        assert_eq!(escape_epochs(&rows, 0.03, None), Some(EscapeEpochs::After(4)));
    }

    #[test]
    fn plateau_needs_consecutive_rows() {
        let rows = vec![row(0, 1.0, 0.01), row(1, 1.0, 0.01), row(2, 1.0, 0.5), row(3, 0.0, 0.01)];
        assert_eq!(escape_epochs(&rows, 0.03, Some(-1.0)), None);
    }

    #[test]
    fn stuck_at_saddle_is_never() {
        let rows: Vec<TraceRow> = (0..10).map(|k| row(k, 0.0, 0.0)).collect();
        assert_eq!(escape_epochs(&rows, 0.03, Some(-1.0)), Some(EscapeEpochs::Never));
        assert_eq!(escape_epochs(&rows, 0.03, Some(0.2)), None);
    }

    #[test]
    fn negative_plateau_value() {
        let rows = vec![row(0, -2.0, 0.0), row(1, -2.0, 0.0), row(2, -2.0, 0.0), row(3, -2.01, 0.0), row(4, -2.03, 0.0)];
        assert_eq!(escape_epochs(&rows, 0.03, None), Some(EscapeEpochs::After(4)));
    }

    #[test]
    fn quantiles() {
        assert_eq!(quantile(&[], 0.5), None);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.5));
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.25), Some(1.5));
        assert_eq!(quantile(&[1.0, f64::INFINITY], 0.5), Some(f64::INFINITY));
        assert_eq!(quantile(&[1.0, 2.0, f64::INFINITY], 0.5), Some(2.0));
    }

    fn quick(method: MethodKind, seed: u64) -> RunSpec {
        let mut cfg = OptimizerConfig::practical(40, 5, 3e-2);
        cfg.max_epochs = 30;
        RunSpec::new(ProblemSpec::dataset_one(7), method, cfg, seed)
    }

    #[test]
    fn shared_initialization_across_methods() {
        let f0: Vec<f64> = MethodKind::ALL
            .iter()
            .map(|&m| run_experiment(&quick(m, 3)).unwrap().rows[0].f)
            .collect();
        assert!(f0.iter().all(|&f| f == f0[0]));
    }

    #[test]
    fn summary_records_seed_and_certificate() {
        let t = run_experiment(&quick(MethodKind::CncScsg, 11)).unwrap();
        assert_eq!(t.summary.seed, 11);
        assert!(t.summary.final_lambda_min.is_some());
        assert!(t.summary.second_order_calls > 0);
    }

    #[test]
    fn divergence_becomes_a_trace() {
        let mut cfg = OptimizerConfig::practical(2, 1, 0.1);
        cfg.max_epochs = 10_000;
        cfg.stop_rule = StopRule::Budget;
        let mut spec = RunSpec::new(ProblemSpec::pm_e2_saddle(), MethodKind::CncScsg, cfg, 0);
        spec.init = Init::Point(vec![0.0, 0.0]);
        let t = run_experiment(&spec).unwrap();
        assert_eq!(t.summary.reason, StopReason::Diverged);
        assert!(t.rows.len() < 10_000);
    }

    #[test]
    fn mismatched_x0_rejected() {
        let mut spec = quick(MethodKind::Gd, 0);
        spec.init = Init::Point(vec![0.0; 3]);
        assert!(matches!(run_experiment(&spec), Err(Error::Dimension(_))));
    }

    #[test]
    fn config_file_resolution() {
        let file = ConfigFile::parse(
            "problem = \"quadratic\"\nspectrum = [1.0, -1.0]\nnoise = [[0.0, 1.0], [0.0, -1.0]]\n\
             b = 1\neps = 0.1\nmethod = \"cnc_gd\"\nx0 = [0.0, 0.0]\nifo_convention = \"strict\"\nseed = 4\n",
        )
        .unwrap();
        let spec = RunSpec::from_config(&file, None).unwrap();
        assert_eq!(spec.problem, ProblemSpec::pm_e2_saddle());
        assert_eq!(spec.method, MethodSpec::Method(MethodKind::CncGd));
        assert_eq!(spec.config.n, 2);
        assert_eq!(spec.init, Init::Point(vec![0.0, 0.0]));
        assert_eq!(spec.ifo_convention, IfoConvention::Strict);
        assert_eq!(spec.seed, 4);
    }

    #[test]
    fn unknown_problem_rejected() {
        let file = ConfigFile::parse("problem = \"rosenbrock\"\nb = 1\neps = 0.1\n").unwrap();
        assert!(matches!(RunSpec::from_config(&file, None), Err(Error::Config(_))));
    }

    #[test]
    fn aggregate_groups_by_method() {
        let specs: Vec<RunSpec> = [MethodKind::Gd, MethodKind::CncScsg, MethodKind::Gd]
            .iter()
            .enumerate()
            .map(|(i, &m)| quick(m, i as u64))
            .collect();
        let res = sweep(&specs, None).unwrap();
        let names: Vec<&str> = res.aggregate.methods.iter().map(|m| m.method.as_str()).collect();
        assert_eq!(names, vec!["gd", "cnc-scsg"]);
        assert_eq!(res.aggregate.method("gd").unwrap().seeds, vec![0, 2]);
    }
}
