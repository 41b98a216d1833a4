//! Optimizers: variance-reduced SCSG epochs, CNC-SCSG and its escaping
//! routine, the plug-in framework, and first-order baselines.
//!
//! Every method shares one epoch loop ([`run_method`]) so that gating,
//! stopping, hooks and traces behave identically across methods.

mod baselines;
mod cnc;
mod framework;
mod scsg;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::config::ValidatedConfig;
use crate::error::{Error, Result};
use crate::problem::FiniteSumProblem;
use crate::sampling::RunStreams;
use crate::trace::{StopReason, Trace, TraceRow, TraceSummary};

pub use baselines::baseline_run;
pub use cnc::{cnc_scsg_escaping, cnc_scsg_run, sgd_perturbation};
pub use framework::{
    first_order_check_sampled, framework_run, gd_plugin, sampled_check_size, scsg_epoch_plugin,
    FirstOrderCheck, PluginAlgorithm,
};
pub use scsg::{scsg_direction, scsg_epoch};

/// Iterates beyond this norm count as divergence.
pub const DIVERGENCE_NORM: f64 = 1e8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IfoConvention {
    /// `b` per inner step: the cost `n + b N_k` per epoch.
    #[default]
    Paper,
    /// Both minibatch gradients of an inner step: `n + 2b N_k` per epoch.
    Strict,
}

impl FromStr for IfoConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "strict" => Ok(Self::Strict),
            other => Err(Error::Config(format!(
                "unknown IFO convention `{other}` (expected paper or strict)"
            ))),
        }
    }
}

/// IFO total under a chosen convention.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IfoLedger {
    pub convention: IfoConvention,
    pub total: u64,
}

impl IfoLedger {
    pub fn new(convention: IfoConvention) -> Self {
        Self {
            convention,
            total: 0,
        }
    }

    /// `k` component gradients at one point.
    pub fn gradients(&mut self, k: usize) {
        self.total += k as u64;
    }

    /// One variance-reduced step with a size-`b` minibatch.
    pub fn inner_step(&mut self, b: usize) {
        let per = match self.convention {
            IfoConvention::Paper => b,
            IfoConvention::Strict => 2 * b,
        };
        self.total += per as u64;
    }
}

/// Snapshot state carried between epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateState {
    pub x: Array1<f64>,
    /// Full gradient at `x`.
    pub mu_tilde: Array1<f64>,
    pub epoch: usize,
    /// Epochs since the last perturbation.
    pub t_noise: usize,
    pub ifo: IfoLedger,
}

impl IterateState {
    /// State at `x` with a freshly computed `μ̃` (`n` IFO).
    pub fn new(p: &FiniteSumProblem, x: Array1<f64>, convention: IfoConvention) -> Result<Self> {
        let mut ifo = IfoLedger::new(convention);
        let mu_tilde = p.grad_full(x.view())?;
        ifo.gradients(p.n());
        Ok(Self {
            x,
            mu_tilde,
            epoch: 0,
            t_noise: 0,
            ifo,
        })
    }

    pub fn ifo_count(&self) -> u64 {
        self.ifo.total
    }

    pub fn grad_norm(&self) -> f64 {
        self.mu_tilde.dot(&self.mu_tilde).sqrt()
    }

    pub(crate) fn refresh(&mut self, p: &FiniteSumProblem) -> Result<()> {
        self.mu_tilde = p.grad_full(self.x.view())?;
        self.ifo.gradients(p.n());
        Ok(())
    }
}

/// Why and where a run left the finite region.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceReport {
    pub epoch: usize,
    pub last_finite: Vec<f64>,
    /// Trace up to the failure, with reason [`StopReason::Diverged`].
    pub trace: Trace,
}

pub(crate) fn is_divergent(x: ArrayView1<f64>) -> bool {
    let norm = x.dot(&x).sqrt();
    !(norm <= DIVERGENCE_NORM)
}

pub(crate) fn check_iterate(x: ArrayView1<f64>, last_finite: &Array1<f64>) -> Result<()> {
    if is_divergent(x) {
        return Err(divergence(last_finite));
    }
    Ok(())
}

fn empty_summary() -> TraceSummary {
    TraceSummary {
        method: String::new(),
        seed: 0,
        reason: StopReason::Diverged,
        epochs: 0,
        total_ifo: 0,
        second_order_calls: 0,
        final_f: f64::NAN,
        final_grad_norm: f64::NAN,
        final_lambda_min: None,
        x0: Vec::new(),
        x_final: Vec::new(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    #[serde(rename = "gd")]
    Gd,
    #[serde(rename = "sgd")]
    Sgd,
    #[serde(rename = "pgd")]
    Pgd,
    #[serde(rename = "cnc-gd")]
    CncGd,
    #[serde(rename = "cnc-sgd")]
    CncSgd,
    #[serde(rename = "scsg")]
    Scsg,
    #[serde(rename = "cnc-scsg")]
    CncScsg,
}

impl MethodKind {
    pub const ALL: [MethodKind; 7] = [
        MethodKind::Gd,
        MethodKind::Sgd,
        MethodKind::Pgd,
        MethodKind::CncGd,
        MethodKind::CncSgd,
        MethodKind::Scsg,
        MethodKind::CncScsg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Gd => "gd",
            MethodKind::Sgd => "sgd",
            MethodKind::Pgd => "pgd",
            MethodKind::CncGd => "cnc-gd",
            MethodKind::CncSgd => "cnc-sgd",
            MethodKind::Scsg => "scsg",
            MethodKind::CncScsg => "cnc-scsg",
        }
    }

    fn perturbation(self) -> Perturbation {
        match self {
            MethodKind::Gd | MethodKind::Sgd | MethodKind::Scsg => Perturbation::None,
            MethodKind::Pgd => Perturbation::Sphere,
            MethodKind::CncGd | MethodKind::CncSgd | MethodKind::CncScsg => Perturbation::SgdStep,
        }
    }

    pub fn is_perturbed(self) -> bool {
        self.perturbation() != Perturbation::None
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown method `{s}` (expected one of gd, sgd, pgd, cnc-gd, cnc-sgd, scsg, cnc-scsg)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Perturbation {
    None,
    Sphere,
    SgdStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochEvent {
    Epoch,
    Perturbation,
}

/// Optional diagnostics attached to a trace row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub lambda_min: f64,
    pub tau: f64,
}

/// Called once per epoch with the state the row describes.
pub trait EpochHook {
    fn on_epoch(&mut self, epoch: usize, state: &IterateState, event: EpochEvent) -> Option<Probe>;
}

/// Shared epoch loop.
///
/// Epoch `k` records the row for the current snapshot, applies the stopping
/// rules, fires the method's perturbation when `t_noise >= 𝒦_thres` and
/// `‖∇f‖ <= ε`, then takes the method's step. `t_noise` starts at
/// `𝒦_thres`, so the first perturbation may fire at epoch 0.
pub fn run_method(
    method: MethodKind,
    p: &FiniteSumProblem,
    cfg: &ValidatedConfig,
    streams: &mut RunStreams,
    x0: Array1<f64>,
    convention: IfoConvention,
    hooks: &mut [&mut dyn EpochHook],
) -> Result<Trace> {
    if cfg.n != p.n() {
        return Err(Error::Config(format!(
            "config n = {} does not match the problem's n = {}",
            cfg.n,
            p.n()
        )));
    }
    if x0.len() != p.dim() {
        return Err(Error::Dimension(format!(
            "x0 has length {} but the problem dimension is {}",
            x0.len(),
            p.dim()
        )));
    }
    let mut run = EpochLoop::new(method, p, cfg, x0, convention)?;
    match run.execute(streams, hooks) {
        Ok(()) => Ok(run.finish()),
        Err(Error::Diverged(mut report)) => {
            report.epoch = run.state.epoch;
            run.reason = StopReason::Diverged;
            let last = Array1::from_vec(report.last_finite.clone());
            run.final_x = Some(last);
            report.trace = run.finish();
            Err(Error::Diverged(report))
        }
        Err(e) => Err(e.at_epoch(run.state.epoch)),
    }
}

struct EpochLoop<'a> {
    method: MethodKind,
    p: &'a FiniteSumProblem,
    cfg: &'a ValidatedConfig,
    state: IterateState,
    x0: Array1<f64>,
    rows: Vec<TraceRow>,
    reason: StopReason,
    final_x: Option<Array1<f64>>,
    last_perturbation: Option<usize>,
    /// Pre-perturbation point and value awaiting the `f_thres` check.
    pending_escape: Option<(usize, Array1<f64>, f64)>,
}

impl<'a> EpochLoop<'a> {
    fn new(
        method: MethodKind,
        p: &'a FiniteSumProblem,
        cfg: &'a ValidatedConfig,
        x0: Array1<f64>,
        convention: IfoConvention,
    ) -> Result<Self> {
        let mut state = match method {
            // plain SGD never forms a full gradient
            MethodKind::Sgd => IterateState {
                mu_tilde: p.grad_full_uncounted(x0.view())?,
                x: x0.clone(),
                epoch: 0,
                t_noise: 0,
                ifo: IfoLedger::new(convention),
            },
            _ => IterateState::new(p, x0.clone(), convention)?,
        };
        state.t_noise = cfg.k_thres;
        Ok(Self {
            method,
            p,
            cfg,
            state,
            x0,
            rows: Vec::new(),
            reason: StopReason::Budget,
            final_x: None,
            last_perturbation: None,
            pending_escape: None,
        })
    }

    fn execute(&mut self, streams: &mut RunStreams, hooks: &mut [&mut dyn EpochHook]) -> Result<()> {
        use crate::config::StopRule;
        let perturbation = self.method.perturbation();
        for k in 0..self.cfg.max_epochs {
            self.state.epoch = k;
            let f = self.p.eval_full(self.state.x.view())?;
            if !f.is_finite() {
                return Err(divergence(&self.state.x));
            }
            let grad_norm = self.state.grad_norm();
            let small = grad_norm <= self.cfg.eps;
            let fire = perturbation != Perturbation::None && small && self.state.t_noise >= self.cfg.k_thres;

            let event = if fire { EpochEvent::Perturbation } else { EpochEvent::Epoch };
            let mut probe = None;
            for hook in hooks.iter_mut() {
                if let Some(pr) = hook.on_epoch(k, &self.state, event) {
                    probe = Some(pr);
                }
            }
            self.rows.push(TraceRow {
                epoch: k,
                f,
                grad_norm,
                ifo: self.state.ifo_count(),
                perturbed: false,
                lambda_min: probe.map(|p| p.lambda_min),
                tau: probe.map(|p| p.tau),
            });

            if perturbation != Perturbation::None {
                match self.cfg.stop_rule {
                    StopRule::Stall if small && self.stalled(k) => {
                        self.reason = StopReason::Stalled;
                        return Ok(());
                    }
                    StopRule::FThres => {
                        if let Some((at, y, fy)) = &self.pending_escape {
                            if k - at >= self.cfg.k_thres.max(1) {
                                if fy - f <= self.cfg.f_thres {
                                    self.final_x = Some(y.clone());
                                    self.reason = StopReason::FThres;
                                    return Ok(());
                                }
                                self.pending_escape = None;
                            }
                        }
                    }
                    _ => {}
                }
            }

            if fire {
                self.rows.last_mut().expect("row pushed").perturbed = true;
                if self.cfg.stop_rule == StopRule::FThres {
                    self.pending_escape = Some((k, self.state.x.clone(), f));
                }
                self.perturb(perturbation, streams)?;
                self.last_perturbation = Some(k);
            }
            self.step(streams)?;
        }
        Ok(())
    }

    /// Best objective since the last perturbation has not improved by
    /// `stall_tol` over the last `stall_epochs` rows.
    fn stalled(&self, k: usize) -> bool {
        let Some(lp) = self.last_perturbation else {
            return false;
        };
        let window = self.cfg.stall_epochs;
        if k - lp <= window {
            return false;
        }
        let best = |rows: &[TraceRow]| rows.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
        let before = best(&self.rows[lp + 1..=k - window]);
        let now = best(&self.rows[lp + 1..=k]);
        before - now < self.cfg.stall_tol
    }

    fn perturb(&mut self, kind: Perturbation, streams: &mut RunStreams) -> Result<()> {
        let (p, cfg) = (self.p, self.cfg);
        match kind {
            Perturbation::None => return Ok(()),
            Perturbation::Sphere => {
                let noise = crate::sampling::sample_sphere(&mut streams.sphere, p.dim(), cfg.pgd_radius)?;
                self.state.x = &self.state.x + &noise;
            }
            Perturbation::SgdStep => {
                let x = cnc::sgd_perturbation(p, self.state.x.view(), cfg.r, streams, &mut self.state.ifo)?;
                self.state.x = x;
            }
        }
        check_iterate(self.state.x.view(), &self.state.x)?;
        self.state.t_noise = 0;
        match self.method {
            MethodKind::CncSgd => {
                self.state.mu_tilde = p.grad_full_uncounted(self.state.x.view())?;
            }
            _ => self.state.refresh(p)?,
        }
        Ok(())
    }

    fn step(&mut self, streams: &mut RunStreams) -> Result<()> {
        let (p, cfg) = (self.p, self.cfg);
        match self.method {
            MethodKind::Gd | MethodKind::Pgd | MethodKind::CncGd => {
                let next = &self.state.x - &(cfg.eta * &self.state.mu_tilde);
                check_iterate(next.view(), &self.state.x)?;
                self.state.x = next;
                self.state.refresh(p)?;
                self.state.t_noise += 1;
            }
            MethodKind::Sgd | MethodKind::CncSgd => {
                baselines::sgd_epoch(p, &mut self.state, cfg.eta, streams)?;
                if self.method == MethodKind::CncSgd {
                    // the gate needs ‖∇f‖, which costs a full pass
                    self.state.refresh(p)?;
                } else {
                    self.state.mu_tilde = p.grad_full_uncounted(self.state.x.view())?;
                }
                self.state.t_noise += 1;
            }
            // advances t_noise itself
            MethodKind::Scsg | MethodKind::CncScsg => {
                scsg_epoch(p, &mut self.state, cfg.eta, cfg.b, streams)?;
            }
        }
        Ok(())
    }

    fn finish(self) -> Trace {
        let x_final = self.final_x.unwrap_or(self.state.x);
        assemble_trace(
            self.p,
            self.method.name(),
            self.rows,
            self.reason,
            self.state.ifo.total,
            &self.x0,
            &x_final,
        )
    }
}

/// Trace with a summary evaluated (without IFO cost) at `x_final`.
pub(crate) fn assemble_trace(
    p: &FiniteSumProblem,
    method: &str,
    rows: Vec<TraceRow>,
    reason: StopReason,
    total_ifo: u64,
    x0: &Array1<f64>,
    x_final: &Array1<f64>,
) -> Trace {
    let final_f = p.eval_full(x_final.view()).unwrap_or(f64::NAN);
    let final_grad_norm = p
        .grad_full_uncounted(x_final.view())
        .map(|g| g.dot(&g).sqrt())
        .unwrap_or(f64::NAN);
    Trace {
        summary: TraceSummary {
            method: method.to_string(),
            seed: 0,
            reason,
            epochs: rows.len(),
            total_ifo,
            second_order_calls: p.second_order_count(),
            final_f,
            final_grad_norm,
            final_lambda_min: None,
            x0: x0.to_vec(),
            x_final: x_final.to_vec(),
        },
        rows,
    }
}

/// Raised deep inside an epoch; the epoch loop fills in the epoch and the
/// partial trace.
pub(crate) fn divergence(last_finite: &Array1<f64>) -> Error {
    Error::Diverged(Box::new(DivergenceReport {
        epoch: 0,
        last_finite: last_finite.to_vec(),
        trace: Trace {
            rows: Vec::new(),
            summary: empty_summary(),
        },
    }))
}
