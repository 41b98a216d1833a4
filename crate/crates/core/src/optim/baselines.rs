use ndarray::Array1;
use rand::Rng;

use crate::config::ValidatedConfig;
use crate::error::Result;
use crate::problem::FiniteSumProblem;
use crate::sampling::RunStreams;
use crate::trace::Trace;

use super::{check_iterate, run_method, EpochHook, IfoConvention, IterateState, MethodKind};

/// `n` single-sample SGD steps with indices drawn uniformly, with
/// replacement; `n` IFO.
pub(crate) fn sgd_epoch(
    p: &FiniteSumProblem,
    state: &mut IterateState,
    eta: f64,
    streams: &mut RunStreams,
) -> Result<()> {
    for _ in 0..p.n() {
        let i = streams.minibatch.random_range(0..p.n());
        let g = p.grad_component(state.x.view(), i)?;
        state.ifo.gradients(1);
        let next = &state.x - &(eta * &g);
        check_iterate(next.view(), &state.x)?;
        state.x = next;
    }
    Ok(())
}

/// GD, SGD, PGD, CNC-GD, CNC-SGD or SCSG under the shared epoch loop.
///
/// An SGD epoch is `n` single-sample steps so that one epoch costs `n` IFO
/// for every method. PGD adds a uniform point of the `pgd_radius` sphere;
/// the CNC variants take one SGD step of size `r`. Both use the same `ε`
/// and `𝒦_thres` gate as CNC-SCSG.
pub fn baseline_run(
    method: MethodKind,
    p: &FiniteSumProblem,
    cfg: &ValidatedConfig,
    streams: &mut RunStreams,
    x0: Array1<f64>,
    convention: IfoConvention,
    hooks: &mut [&mut dyn EpochHook],
) -> Result<Trace> {
    run_method(method, p, cfg, streams, x0, convention, hooks)
}
