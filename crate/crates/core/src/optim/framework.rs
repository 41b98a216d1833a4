use std::fmt;

use ndarray::{Array1, ArrayView1};
use rand::Rng;

use crate::config::ValidatedConfig;
use crate::error::{Error, Result};
use crate::problem::FiniteSumProblem;
use crate::sampling::{geometric_mean, sample_minibatch, RunStreams};
use crate::trace::{StopReason, Trace, TraceRow};

use super::scsg::vr_steps;
use super::{assemble_trace, check_iterate, cnc_scsg_escaping, divergence, IfoConvention, IfoLedger};

type StepFn =
    dyn Fn(&FiniteSumProblem, &Array1<f64>, &mut RunStreams, &mut IfoLedger) -> Result<Array1<f64>> + Send + Sync;

/// An epoch-based first-order method `y = 𝒜(x)` with its expected IFO cost
/// per epoch, `T_𝒜`.
///
/// The framework assumes `𝒜` decreases `f` when the gradient is large and
/// does not increase it much near strict saddles; that cannot be checked
/// here and is the caller's responsibility.
pub struct PluginAlgorithm {
    pub name: String,
    pub cost_per_epoch: f64,
    step: Box<StepFn>,
}

impl fmt::Debug for PluginAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PluginAlgorithm")
            .field("name", &self.name)
            .field("cost_per_epoch", &self.cost_per_epoch)
            .finish()
    }
}

impl PluginAlgorithm {
    pub fn new(
        name: impl Into<String>,
        cost_per_epoch: f64,
        step: impl Fn(&FiniteSumProblem, &Array1<f64>, &mut RunStreams, &mut IfoLedger) -> Result<Array1<f64>>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            cost_per_epoch,
            step: Box::new(step),
        }
    }

    pub fn apply(
        &self,
        p: &FiniteSumProblem,
        x: &Array1<f64>,
        streams: &mut RunStreams,
        ifo: &mut IfoLedger,
    ) -> Result<Array1<f64>> {
        (self.step)(p, x, streams, ifo)
    }
}

/// One SCSG epoch with a sampled anchor: `μ̃ = ∇f_{I_B}(x)` over `B1` indices,
/// then `N ~ Geom(B1/(B1 + b1))` variance-reduced steps with minibatches of
/// `b1`. `T_𝒜 = B1 + 2 b1 E[N] = 3 B1`.
pub fn scsg_epoch_plugin(big_b: usize, b1: usize, eta: f64) -> Result<PluginAlgorithm> {
    if b1 < 1 || b1 > big_b {
        return Err(Error::InvalidArgument(format!(
            "plugin batch sizes must satisfy 1 <= b1 <= B1, got b1 = {b1}, B1 = {big_b}"
        )));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    let gamma = big_b as f64 / (big_b + b1) as f64;
    let cost = big_b as f64 + 2.0 * b1 as f64 * geometric_mean(gamma);
    Ok(PluginAlgorithm::new(
        format!("scsg-epoch(B1={big_b}, b1={b1})"),
        cost,
        move |p, x, streams, ifo| {
            if big_b > p.n() {
                return Err(Error::InvalidArgument(format!(
                    "B1 = {big_b} exceeds n = {}",
                    p.n()
                )));
            }
            let anchor = sample_minibatch(&mut streams.minibatch, p.n(), big_b)?;
            let mu = p.grad_minibatch(x.view(), &anchor)?;
            ifo.gradients(big_b);
            let steps = streams.inner_loop_length(gamma)?;
            vr_steps(p, x, &mu, steps, eta, b1, streams, ifo)
        },
    ))
}

/// One full gradient step, `T_𝒜 = n`.
pub fn gd_plugin(eta: f64) -> PluginAlgorithm {
    PluginAlgorithm::new(format!("gd(eta={eta})"), f64::NAN, move |p, x, _, ifo| {
        let g = p.grad_full(x.view())?;
        ifo.gradients(p.n());
        let next = x - &(eta * &g);
        check_iterate(next.view(), x)?;
        Ok(next)
    })
}

/// `⌈2l²(1 + ln(1/δ))/ε²⌉`, before capping at `n`.
pub fn sampled_check_size(l: f64, eps: f64, delta: f64) -> u64 {
    (2.0 * l * l * (1.0 + (1.0 / delta).ln()) / (eps * eps)).ceil() as u64
}

/// Tests `‖∇f_S(x)‖ <= ε/2` on `|S|` indices drawn with replacement, which
/// certifies `‖∇f(x)‖ <= ε` with probability at least `1 - δ`. When `|S|`
/// reaches `n` the exact test `‖∇f(x)‖ <= ε` is used instead.
pub fn first_order_check_sampled<R: Rng + ?Sized>(
    p: &FiniteSumProblem,
    x: ArrayView1<f64>,
    eps: f64,
    delta: f64,
    rng: &mut R,
    ifo: &mut IfoLedger,
) -> Result<bool> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need eps > 0 and 0 < delta < 1, got eps = {eps}, delta = {delta}"
        )));
    }
    let l = p
        .meta()
        .gradient_bound
        .as_ref()
        .map(|g| g.value)
        .ok_or(Error::UnknownGradientBound)?;
    let size = sampled_check_size(l, eps, delta);
    let n = p.n();
    if size >= n as u64 {
        let g = p.grad_full(x)?;
        ifo.gradients(n);
        return Ok(g.dot(&g).sqrt() <= eps);
    }
    let idx: Vec<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
    let g = p.grad_minibatch(x, &idx)?;
    ifo.gradients(idx.len());
    Ok(g.dot(&g).sqrt() <= eps / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FirstOrderCheck {
    Exact,
    Sampled { delta: f64 },
}

/// The plug-in framework: `y_k = 𝒜(x_k)`; when `‖∇f(y_k)‖ <= ε_g`, escape
/// from `y_k` with CNC-SCSG and return `y_k` if that gained at most
/// `f_thres`.
#[allow(clippy::too_many_arguments)]
pub fn framework_run(
    p: &FiniteSumProblem,
    plugin: &PluginAlgorithm,
    cfg: &ValidatedConfig,
    streams: &mut RunStreams,
    x0: Array1<f64>,
    convention: IfoConvention,
    check: FirstOrderCheck,
) -> Result<Trace> {
    let name = format!("framework[{}]", plugin.name);
    let mut ifo = IfoLedger::new(convention);
    let mut rows = Vec::new();
    let mut x = x0.clone();
    let mut reason = StopReason::Budget;
    let mut result = x0.clone();

    let mut body = |rows: &mut Vec<TraceRow>, x: &mut Array1<f64>, ifo: &mut IfoLedger| -> Result<()> {
        for k in 0..cfg.max_epochs {
            let f = p.eval_full(x.view())?;
            if !f.is_finite() {
                return Err(divergence(x));
            }
            let g = p.grad_full_uncounted(x.view())?;
            rows.push(TraceRow {
                epoch: k,
                f,
                grad_norm: g.dot(&g).sqrt(),
                ifo: ifo.total,
                perturbed: false,
                lambda_min: None,
                tau: None,
            });
            let y = plugin.apply(p, x, streams, ifo)?;
            check_iterate(y.view(), x)?;
            let small = match check {
                FirstOrderCheck::Exact => {
                    let gy = p.grad_full(y.view())?;
                    ifo.gradients(p.n());
                    gy.dot(&gy).sqrt() <= cfg.eps_g
                }
                FirstOrderCheck::Sampled { delta } => {
                    first_order_check_sampled(p, y.view(), cfg.eps_g, delta, &mut streams.minibatch, ifo)?
                }
            };
            if !small {
                *x = y;
                continue;
            }
            rows.last_mut().expect("row pushed").perturbed = true;
            let escaped = cnc_scsg_escaping(p, y.view(), cfg.k_thres, cfg.eta, cfg.r, cfg.b, streams, ifo)?;
            let gain = p.eval_full(y.view())? - p.eval_full(escaped.view())?;
            if gain <= cfg.f_thres {
                *x = y;
                reason = StopReason::FThres;
                return Ok(());
            }
            *x = escaped;
        }
        Ok(())
    };

    match body(&mut rows, &mut x, &mut ifo) {
        Ok(()) => {
            result.assign(&x);
            Ok(assemble_trace(p, &name, rows, reason, ifo.total, &x0, &result))
        }
        Err(Error::Diverged(mut rep)) => {
            rep.epoch = rows.len().saturating_sub(1);
            let last = Array1::from_vec(rep.last_finite.clone());
            rep.trace = assemble_trace(p, &name, rows, StopReason::Diverged, ifo.total, &x0, &last);
            Err(Error::Diverged(rep))
        }
        Err(e) => Err(e.at_epoch(rows.len().saturating_sub(1))),
    }
}
