use ndarray::{Array1, ArrayView1};
use rand::Rng;

use crate::config::ValidatedConfig;
use crate::error::Result;
use crate::problem::FiniteSumProblem;
use crate::sampling::RunStreams;
use crate::trace::Trace;

use super::{check_iterate, run_method, scsg_epoch, EpochHook, IfoConvention, IfoLedger, IterateState, MethodKind};

/// `x - r ∇f_i(x)` with `i` uniform on `0..n`, drawn from the minibatch
/// stream. One IFO.
pub fn sgd_perturbation(
    p: &FiniteSumProblem,
    x: ArrayView1<f64>,
    r: f64,
    streams: &mut RunStreams,
    ifo: &mut IfoLedger,
) -> Result<Array1<f64>> {
    let i = streams.minibatch.random_range(0..p.n());
    let g = p.grad_component(x, i)?;
    ifo.gradients(1);
    let next = &x - &(r * &g);
    check_iterate(next.view(), &x.to_owned())?;
    Ok(next)
}

/// CNC-SCSG: SCSG epochs with a single-sample SGD perturbation whenever the
/// snapshot gradient is small and `𝒦_thres` epochs have passed since the
/// last one.
pub fn cnc_scsg_run(
    p: &FiniteSumProblem,
    cfg: &ValidatedConfig,
    streams: &mut RunStreams,
    x0: Array1<f64>,
    convention: IfoConvention,
    hooks: &mut [&mut dyn EpochHook],
) -> Result<Trace> {
    run_method(MethodKind::CncScsg, p, cfg, streams, x0, convention, hooks)
}

/// One SGD perturbation of `x` followed by `k_thres + 1` SCSG epochs;
/// returns the last snapshot.
#[allow(clippy::too_many_arguments)]
pub fn cnc_scsg_escaping(
    p: &FiniteSumProblem,
    x: ArrayView1<f64>,
    k_thres: usize,
    eta: f64,
    r: f64,
    b: usize,
    streams: &mut RunStreams,
    ifo: &mut IfoLedger,
) -> Result<Array1<f64>> {
    let start = sgd_perturbation(p, x, r, streams, ifo)?;
    let mut state = IterateState::new(p, start, ifo.convention)?;
    state.ifo.total += ifo.total;
    for _ in 0..=k_thres {
        scsg_epoch(p, &mut state, eta, b, streams)?;
    }
    ifo.total = state.ifo.total;
    Ok(state.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{OptimizerConfig, StopRule};
    use crate::error::Error;
    use crate::problem::{make_quadratic_saddle, QuadraticSaddleSpec};
    use crate::trace::StopReason;
    use ndarray::array;

    fn pm_e2(n_pairs: usize) -> FiniteSumProblem {
        let mut noise = Vec::new();
        for _ in 0..n_pairs {
            noise.push(vec![0.0, 1.0]);
            noise.push(vec![0.0, -1.0]);
        }
        make_quadratic_saddle(&QuadraticSaddleSpec::new(vec![1.0, -1.0], noise).unwrap()).unwrap()
    }

    fn run(p: &FiniteSumProblem, method: MethodKind, cfg: OptimizerConfig, seed: u64, x0: Array1<f64>) -> Trace {
        let cfg = cfg.validated().unwrap();
        let mut streams = RunStreams::new(seed);
        match run_method(method, p, &cfg, &mut streams, x0, IfoConvention::Paper, &mut []) {
            Ok(t) => t,
            Err(Error::Diverged(rep)) => rep.trace,
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn large_gradient_never_perturbs() {
        // strongly convex with the minimizer far away relative to the run length
        let p = make_quadratic_saddle(&QuadraticSaddleSpec::new(vec![1e-3, 1e-3], vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap()).unwrap();
        let mut cfg = OptimizerConfig::practical(2, 1, 1e-3);
        cfg.max_epochs = 30;
        let t = run(&p, MethodKind::CncScsg, cfg, 1, array![100.0, 100.0]);
        assert!(t.rows.iter().all(|r| !r.perturbed));
        assert_eq!(t.rows.len(), 30);
    }

    #[test]
    fn fires_at_epoch_zero_on_the_saddle() {
        let p = pm_e2(1);
        let mut cfg = OptimizerConfig::practical(2, 1, 0.1);
        cfg.max_epochs = 1;
        let t = run(&p, MethodKind::CncScsg, cfg, 3, array![0.0, 0.0]);
        assert!(t.rows[0].perturbed);
        assert_eq!(t.rows[0].f, 0.0);
    }

    #[test]
    fn perturbation_moves_by_r_along_noise() {
        let p = pm_e2(1);
        let mut streams = RunStreams::new(0);
        let mut ifo = IfoLedger::new(IfoConvention::Paper);
        let x = sgd_perturbation(&p, array![0.0, 0.0].view(), 2.0, &mut streams, &mut ifo).unwrap();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[1].abs(), 2.0);
        assert_eq!(ifo.total, 1);
    }

    #[test]
    fn noiseless_without_perturbation_is_constant() {
        let p = make_quadratic_saddle(&QuadraticSaddleSpec::noiseless(vec![1.0, -1.0], 4).unwrap()).unwrap();
        let mut cfg = OptimizerConfig::practical(4, 2, 0.1);
        cfg.max_epochs = 20;
        let t = run(&p, MethodKind::Scsg, cfg, 5, array![0.0, 0.0]);
        assert!(t.rows.iter().all(|r| r.f == 0.0 && r.grad_norm == 0.0));
        assert_eq!(t.summary.x_final, vec![0.0, 0.0]);
    }

    #[test]
    fn gating_respects_gap_and_threshold() {
        let p = pm_e2(2);
        let mut cfg = OptimizerConfig::practical(4, 1, 0.5);
        cfg.max_epochs = 200;
        cfg.k_thres = 3;
        cfg.stop_rule = StopRule::Budget;
        cfg.eta = 0.05;
        cfg.r = 1e-3;
        let t = run(&p, MethodKind::CncScsg, cfg, 9, array![0.0, 0.0]);
        let fired: Vec<usize> = t.rows.iter().filter(|r| r.perturbed).map(|r| r.epoch).collect();
        assert!(!fired.is_empty());
        for w in fired.windows(2) {
            assert!(w[1] - w[0] >= 3);
        }
        for r in t.rows.iter().filter(|r| r.perturbed) {
            assert!(r.grad_norm <= 0.5);
        }
    }

    #[test]
    fn divergence_is_reported_with_partial_trace() {
        let p = pm_e2(1);
        let mut cfg = OptimizerConfig::practical(2, 1, 0.1);
        cfg.max_epochs = 10_000;
        let cfg = cfg.validated().unwrap();
        let mut streams = RunStreams::new(0);
        let err = cnc_scsg_run(&p, &cfg, &mut streams, array![0.0, 0.0], IfoConvention::Paper, &mut []).unwrap_err();
        let Error::Diverged(rep) = err else { panic!("expected divergence") };
        assert!(rep.epoch > 0);
        assert_eq!(rep.trace.summary.reason, StopReason::Diverged);
        assert_eq!(rep.trace.rows.len(), rep.epoch + 1);
        assert!(rep.last_finite.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn escaping_with_zero_r_at_exact_saddle_is_identity() {
        let p = make_quadratic_saddle(&QuadraticSaddleSpec::noiseless(vec![1.0, -1.0], 4).unwrap()).unwrap();
        let mut streams = RunStreams::new(1);
        let mut ifo = IfoLedger::new(IfoConvention::Paper);
        let y = cnc_scsg_escaping(&p, array![0.0, 0.0].view(), 5, 0.1, 0.0, 2, &mut streams, &mut ifo).unwrap();
        assert_eq!(y, array![0.0, 0.0]);
    }

    #[test]
    fn escaping_runs_k_thres_plus_one_epochs() {
        let p = pm_e2(2);
        for (k_thres, lengths) in [(0usize, vec![2u64]), (2, vec![1, 0, 3])] {
            let mut streams = RunStreams::with_forced_lengths(4, lengths.clone());
            let mut ifo = IfoLedger::new(IfoConvention::Paper);
            cnc_scsg_escaping(&p, array![0.0, 0.0].view(), k_thres, 0.1, 0.1, 2, &mut streams, &mut ifo).unwrap();
            let inner: u64 = lengths.iter().sum();
            // perturbation + initial μ̃ + one μ̃ per epoch + inner steps
            assert_eq!(ifo.total, 1 + 4 + 4 * (k_thres as u64 + 1) + 2 * inner);
        }
    }

    #[test]
    fn escaping_decreases_f_on_noisy_saddle() {
        let p = pm_e2(1);
        let mut gains = Vec::new();
        for seed in 0..50 {
            let mut streams = RunStreams::new(seed);
            let mut ifo = IfoLedger::new(IfoConvention::Paper);
            let y = cnc_scsg_escaping(&p, array![0.0, 0.0].view(), 25, 0.1, 0.1, 1, &mut streams, &mut ifo).unwrap();
            gains.push(0.0 - p.eval_full(y.view()).unwrap());
        }
        gains.sort_by(f64::total_cmp);
        assert!(gains[25] > 0.0);
    }
}
