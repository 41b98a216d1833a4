use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::problem::FiniteSumProblem;
use crate::sampling::{sample_minibatch, RunStreams};

use super::{check_iterate, IfoLedger, IterateState};

/// `∇f_I(x_prev) - ∇f_I(snapshot) + μ̃`.
pub fn scsg_direction(
    p: &FiniteSumProblem,
    x_prev: ArrayView1<f64>,
    snapshot: ArrayView1<f64>,
    mu_tilde: ArrayView1<f64>,
    idx: &[usize],
) -> Result<Array1<f64>> {
    if idx.is_empty() {
        return Err(Error::InvalidArgument("minibatch index set is empty".into()));
    }
    if mu_tilde.len() != p.dim() {
        return Err(Error::Dimension(format!(
            "mu_tilde has length {} but the problem dimension is {}",
            mu_tilde.len(),
            p.dim()
        )));
    }
    let mut v = p.grad_minibatch(x_prev, idx)?;
    v -= &p.grad_minibatch(snapshot, idx)?;
    v += &mu_tilde;
    Ok(v)
}

/// `steps` variance-reduced updates from `snapshot` with minibatches of `b`
/// drawn from `0..pool`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn vr_steps(
    p: &FiniteSumProblem,
    snapshot: &Array1<f64>,
    mu_tilde: &Array1<f64>,
    steps: u64,
    eta: f64,
    b: usize,
    streams: &mut RunStreams,
    ifo: &mut IfoLedger,
) -> Result<Array1<f64>> {
    let mut x = snapshot.clone();
    for _ in 0..steps {
        let idx = sample_minibatch(&mut streams.minibatch, p.n(), b)?;
        let v = scsg_direction(p, x.view(), snapshot.view(), mu_tilde.view(), &idx)?;
        let next = &x - &(eta * &v);
        check_iterate(next.view(), &x)?;
        ifo.inner_step(b);
        x = next;
    }
    Ok(x)
}

/// One SCSG epoch: `N_k ~ Geom(n/(n+b))` variance-reduced steps from the
/// snapshot, which then moves to the last inner iterate (it stays put when
/// `N_k = 0`). `μ̃` is recomputed there and `t_noise` advances by one.
/// Returns `N_k`.
pub fn scsg_epoch(
    p: &FiniteSumProblem,
    state: &mut IterateState,
    eta: f64,
    b: usize,
    streams: &mut RunStreams,
) -> Result<u64> {
    let n = p.n();
    if b < 1 || b > n {
        return Err(Error::InvalidArgument(format!(
            "minibatch size b = {b} must satisfy 1 <= b <= n = {n}"
        )));
    }
    let gamma = n as f64 / (n + b) as f64;
    let steps = streams.inner_loop_length(gamma)?;
    let x = vr_steps(p, &state.x, &state.mu_tilde, steps, eta, b, streams, &mut state.ifo)?;
    state.x = x;
    state.refresh(p)?;
    state.t_noise += 1;
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::IfoConvention;
    use crate::problem::{generate_dataset, make_quadratic_saddle, make_sigmoid_problem, QuadraticSaddleSpec};
    use crate::sampling::{geometric_mean, standard_normal_vec, substream, Substream};
    use ndarray::array;
    use proptest::prelude::*;

    fn subsets(n: usize, b: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, n: usize, b: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == b {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, b, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, b, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn direction_at_snapshot_is_mu() {
        let data = generate_dataset(10, 3, 1).unwrap();
        let p = make_sigmoid_problem(&data, 0.5).unwrap();
        let s = array![0.3, -0.2, 1.0];
        let mu = p.grad_full(s.view()).unwrap();
        let v = scsg_direction(&p, s.view(), s.view(), mu.view(), &[2, 7]).unwrap();
        assert_eq!(v, mu);
    }

    #[test]
    fn full_batch_direction_is_gradient() {
        let data = generate_dataset(10, 3, 1).unwrap();
        let p = make_sigmoid_problem(&data, 0.5).unwrap();
        let s = array![0.3, -0.2, 1.0];
        let x = array![-1.0, 0.5, 0.25];
        let mu = p.grad_full(s.view()).unwrap();
        let all: Vec<usize> = (0..10).collect();
        let v = scsg_direction(&p, x.view(), s.view(), mu.view(), &all).unwrap();
        let g = p.grad_full(x.view()).unwrap();
        for (a, b) in v.iter().zip(g.iter()) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn direction_counts_two_batches_and_rejects_empty() {
        let p = make_quadratic_saddle(&QuadraticSaddleSpec::noiseless(vec![1.0, -1.0], 4).unwrap()).unwrap();
        let x = array![1.0, 1.0];
        let mu = array![0.0, 0.0];
        assert!(scsg_direction(&p, x.view(), x.view(), mu.view(), &[]).is_err());
        p.reset_counters();
        scsg_direction(&p, x.view(), x.view(), mu.view(), &[0, 3]).unwrap();
        assert_eq!(p.ifo_count(), 4);
    }

    #[test]
    fn exhaustive_mean_is_unbiased() {
        let data = generate_dataset(10, 3, 3).unwrap();
        let p = make_sigmoid_problem(&data, 0.5).unwrap();
        let mut rng = substream(3, Substream::Probe);
        let x = standard_normal_vec(&mut rng, 3);
        let s = standard_normal_vec(&mut rng, 3);
        let mu = p.grad_full(s.view()).unwrap();
        let all = subsets(10, 2);
        assert_eq!(all.len(), 45);
        let mut mean = Array1::zeros(3);
        for idx in &all {
            mean += &scsg_direction(&p, x.view(), s.view(), mu.view(), idx).unwrap();
        }
        mean /= all.len() as f64;
        let g = p.grad_full(x.view()).unwrap();
        for (a, b) in mean.iter().zip(g.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn forced_zero_length_keeps_snapshot() {
        let data = generate_dataset(10, 2, 0).unwrap();
        let p = make_sigmoid_problem(&data, 0.5).unwrap();
        let mut state = IterateState::new(&p, array![0.4, -0.3], IfoConvention::Paper).unwrap();
        let before = state.clone();
        let mut streams = RunStreams::with_forced_lengths(0, [0]);
        assert_eq!(scsg_epoch(&p, &mut state, 0.5, 2, &mut streams).unwrap(), 0);
        assert_eq!(state.x, before.x);
        assert_eq!(state.mu_tilde, before.mu_tilde);
        assert_eq!(state.t_noise, before.t_noise + 1);
        assert_eq!(state.ifo_count(), before.ifo_count() + 10);
    }

    #[test]
    fn noiseless_convex_quadratic_contracts_by_half() {
        let p = make_quadratic_saddle(&QuadraticSaddleSpec::noiseless(vec![1.0, 1.0], 6).unwrap()).unwrap();
        let mut state = IterateState::new(&p, array![2.0, -4.0], IfoConvention::Paper).unwrap();
        let mut streams = RunStreams::with_forced_lengths(0, [1, 3, 7]);
        for expected_steps in [1, 3, 7] {
            let f_before = p.eval_full(state.x.view()).unwrap();
            let x_before = state.x.clone();
            let steps = scsg_epoch(&p, &mut state, 0.5, 2, &mut streams).unwrap();
            assert_eq!(steps, expected_steps);
            let factor = 0.5f64.powi(steps as i32);
            for (a, b) in state.x.iter().zip(x_before.iter()) {
                assert!((a - factor * b).abs() <= 1e-15 * b.abs().max(1.0));
            }
            assert!(p.eval_full(state.x.view()).unwrap() < f_before);
        }
    }

    #[test]
    fn inner_loop_mean_matches_n_over_b() {
        let mut streams = RunStreams::new(21);
        let gamma = 40.0 / 45.0;
        let draws = 100_000;
        let total: u64 = (0..draws).map(|_| streams.inner_loop_length(gamma).unwrap()).sum();
        let mean = total as f64 / draws as f64;
        assert!((geometric_mean(gamma) - 8.0).abs() < 1e-12);
        assert!((mean - 8.0).abs() <= 0.08, "{mean}");
    }

    #[test]
    fn epoch_ifo_is_n_plus_b_nk() {
        let p = make_quadratic_saddle(&QuadraticSaddleSpec::noiseless(vec![1.0, -1.0], 40).unwrap()).unwrap();
        for (conv, per) in [(IfoConvention::Paper, 5), (IfoConvention::Strict, 10)] {
            let mut state = IterateState::new(&p, array![0.1, 0.1], conv).unwrap();
            let mut streams = RunStreams::with_forced_lengths(0, [8]);
            let before = state.ifo_count();
            scsg_epoch(&p, &mut state, 0.1, 5, &mut streams).unwrap();
            assert_eq!(state.ifo_count() - before, 8 * per + 40);
        }
    }

    #[test]
    fn strict_ledger_matches_oracle_counter() {
        let data = generate_dataset(12, 2, 5).unwrap();
        let p = make_sigmoid_problem(&data, 0.5).unwrap();
        p.reset_counters();
        let mut state = IterateState::new(&p, array![0.4, -0.3], IfoConvention::Strict).unwrap();
        let mut streams = RunStreams::new(4);
        for _ in 0..20 {
            scsg_epoch(&p, &mut state, 0.1, 3, &mut streams).unwrap();
        }
        assert_eq!(state.ifo_count(), p.ifo_count());
    }

    fn sigmoid_problem(n: usize, seed: u64) -> FiniteSumProblem {
        let data = generate_dataset(n, 3, seed).unwrap();
        make_sigmoid_problem(&data, 0.5).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn unbiased_and_variance_bounded(half in 1usize..=6, b in 1usize..=3, seed in 0u64..1000) {
            let n = 2 * half;
            prop_assume!(b <= n);
            let p = sigmoid_problem(n, seed);
            let mut rng = substream(seed, Substream::Probe);
            let x = standard_normal_vec(&mut rng, 3);
            let s = standard_normal_vec(&mut rng, 3);
            let mu = p.grad_full(s.view()).unwrap();
            let g = p.grad_full(x.view()).unwrap();
            let all = subsets(n, b);
            let mut mean = Array1::zeros(3);
            let mut second = 0.0;
            for idx in &all {
                let v = scsg_direction(&p, x.view(), s.view(), mu.view(), idx).unwrap();
                let dv = &v - &g;
                second += dv.dot(&dv);
                mean += &v;
            }
            mean /= all.len() as f64;
            second /= all.len() as f64;
            for (a, c) in mean.iter().zip(g.iter()) {
                prop_assert!((a - c).abs() <= 1e-12);
            }
            let dx = &x - &s;
            let bound = p.meta().smoothness.powi(2) / b as f64 * dx.dot(&dx);
            prop_assert!(second <= bound + 1e-12, "{second} > {bound}");
        }
    }
}
