//! Second-order diagnostics at an iterate.
//!
//! `lambda_min` estimates the smallest Hessian eigenvalue from Hessian-vector
//! products only. For small `d` the Hessian can also be assembled densely and
//! handed to an exact symmetric eigensolver, which the tests use as an oracle.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::FiniteSumProblem;
use crate::sampling::sample_sphere;

pub const DEFAULT_TOL: f64 = 1e-6;
/// Largest `d` for which the Hessian is ever materialized.
pub const DENSE_HESSIAN_MAX_DIM: usize = 64;
/// Default cap on `d` for the `d × d` Fisher and covariance matrices.
pub const DEFAULT_DENSE_CAP: usize = 256;

const STAGNATION_RTOL: f64 = 1e-14;
const STAGNATION_WINDOW: usize = 20;
const SHIFT_MARGIN: f64 = 1.1;
const SHIFT_FLOOR: f64 = 1e-3;
const MIN_MAX_ITER: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    #[serde(rename = "lambda_min")]
    pub lambda_min_hat: f64,
    #[serde(rename = "eigvec")]
    pub eigvec_hat: Vec<f64>,
    #[serde(rename = "tau")]
    pub tau_hat: f64,
    #[serde(rename = "iters")]
    pub iterations_used: usize,
    pub converged: bool,
    pub residual: f64,
}

/// `max(⌈10 d ln(d + 1)⌉, 1000)` power-iteration steps.
pub fn default_max_iter(d: usize) -> usize {
    let formula = (10.0 * d as f64 * ((d + 1) as f64).ln()).ceil() as usize;
    formula.max(MIN_MAX_ITER)
}

fn hvp(p: &FiniteSumProblem, x: ArrayView1<f64>, v: &Array1<f64>) -> Result<Array1<f64>> {
    let w = p.hvp_full(x, v.view())?;
    if w.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("Hessian-vector product"));
    }
    Ok(w)
}

fn normalized(mut v: Array1<f64>) -> Option<Array1<f64>> {
    let norm = v.dot(&v).sqrt();
    if norm > 0.0 && norm.is_finite() {
        v /= norm;
        Some(v)
    } else {
        None
    }
}

struct Estimate {
    lambda: f64,
    v: Array1<f64>,
    residual: f64,
}

/// Power iteration on `H` for an estimate of `max |λ(H)|`.
fn spectral_radius<R: Rng + ?Sized>(
    p: &FiniteSumProblem,
    x: ArrayView1<f64>,
    budget: usize,
    rng: &mut R,
) -> Result<(f64, usize)> {
    let mut v = sample_sphere(rng, p.dim(), 1.0)?;
    let mut est: f64 = 0.0;
    for it in 1..=budget {
        let w = hvp(p, x, &v)?;
        let norm = w.dot(&w).sqrt();
        let prev = est;
        est = est.max(norm);
        match normalized(w) {
            Some(next) => v = next,
            None => return Ok((est, it)),
        }
        if it > 5 && (est - prev) <= 1e-6 * est {
            return Ok((est, it));
        }
    }
    Ok((est, budget))
}

/// Smallest Hessian eigenvalue by shifted power iteration.
///
/// Phase one estimates `μ ≈ 1.1 max |λ(H)|`; phase two power-iterates
/// `μI - H` and reports the Rayleigh quotient `vᵀHv`. The run counts as
/// converged when `‖Hv - λ̂v‖ <= tol`. If the quotient stagnates before that,
/// the iteration restarts once from a fresh random vector. On exhaustion the
/// estimate with the smallest residual is returned with `converged = false`.
pub fn lambda_min<R: Rng + ?Sized>(
    p: &FiniteSumProblem,
    x: ArrayView1<f64>,
    tol: f64,
    max_iter: usize,
    rng: &mut R,
) -> Result<SpectralReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if x.len() != p.dim() {
        return Err(Error::Dimension(format!(
            "x has length {} but the problem dimension is {}",
            x.len(),
            p.dim()
        )));
    }

    let (radius, mut used) = spectral_radius(p, x, max_iter.min(500), rng)?;
    let mu = SHIFT_MARGIN * radius + SHIFT_FLOOR;

    let mut best: Option<Estimate> = None;
    let mut converged = false;
    let mut restarted = false;
    let mut v = sample_sphere(rng, p.dim(), 1.0)?;
    let mut prev_lambda = f64::NAN;
    let mut flat = 0;
    for _ in 0..max_iter {
        let w = hvp(p, x, &v)?;
        used += 1;
        let lambda = v.dot(&w);
        let residual = {
            let r = &w - &(lambda * &v);
            r.dot(&r).sqrt()
        };
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            best = Some(Estimate {
                lambda,
                v: v.clone(),
                residual,
            });
        }
        if residual <= tol {
            converged = true;
            break;
        }

        if (lambda - prev_lambda).abs() <= STAGNATION_RTOL * lambda.abs() {
            flat += 1;
        } else {
            flat = 0;
        }
        prev_lambda = lambda;
        if flat >= STAGNATION_WINDOW && !restarted {
            restarted = true;
            flat = 0;
            prev_lambda = f64::NAN;
            v = sample_sphere(rng, p.dim(), 1.0)?;
            continue;
        }

        v = match normalized(mu * &v - &w) {
            Some(next) => next,
            // Bv = 0 only when every eigenvalue equals μ; v is then exact
            None => v,
        };
    }

    let best = best.expect("max_iter >= 1");
    let tau_hat = cnc_estimate(p, x, best.v.view())?;
    Ok(SpectralReport {
        lambda_min_hat: best.lambda,
        eigvec_hat: best.v.to_vec(),
        tau_hat,
        iterations_used: used,
        converged,
        residual: best.residual,
    })
}

/// `lambda_min` with the default tolerance and iteration budget.
pub fn lambda_min_default<R: Rng + ?Sized>(
    p: &FiniteSumProblem,
    x: ArrayView1<f64>,
    rng: &mut R,
) -> Result<SpectralReport> {
    lambda_min(p, x, DEFAULT_TOL, default_max_iter(p.dim()), rng)
}

/// `τ̂ = (1/n) Σ_z (vᵀ∇f_z(x))²`, summed exactly over all components.
pub fn cnc_estimate(p: &FiniteSumProblem, x: ArrayView1<f64>, v: ArrayView1<f64>) -> Result<f64> {
    if v.len() != p.dim() {
        return Err(Error::Dimension(format!(
            "v has length {} but the problem dimension is {}",
            v.len(),
            p.dim()
        )));
    }
    let norm = v.dot(&v).sqrt();
    if !((norm - 1.0).abs() <= 1e-8) {
        return Err(Error::InvalidArgument(format!(
            "v must be a unit vector, got norm {norm}"
        )));
    }
    let grads = p.component_gradients(x)?;
    let proj = grads.dot(&v);
    Ok(proj.mapv(|t| t * t).sum() / p.n() as f64)
}

/// Dense Hessian assembled column by column from HVPs, then symmetrized.
pub fn dense_hessian(p: &FiniteSumProblem, x: ArrayView1<f64>) -> Result<Array2<f64>> {
    let d = p.dim();
    if d > DENSE_HESSIAN_MAX_DIM {
        return Err(Error::DenseCapExceeded {
            d,
            cap: DENSE_HESSIAN_MAX_DIM,
        });
    }
    let mut h = Array2::zeros((d, d));
    for j in 0..d {
        let mut e = Array1::zeros(d);
        e[j] = 1.0;
        h.column_mut(j).assign(&hvp(p, x, &e)?);
    }
    let sym = (&h + &h.t()) * 0.5;
    Ok(sym)
}

/// Exact `(λ_min, eigenvector)` of the dense Hessian.
pub fn dense_lambda_min(p: &FiniteSumProblem, x: ArrayView1<f64>) -> Result<(f64, Array1<f64>)> {
    let h = dense_hessian(p, x)?;
    Ok(symmetric_min_eigenpair(&h))
}

/// Smallest eigenpair of a symmetric matrix.
pub fn symmetric_min_eigenpair(h: &Array2<f64>) -> (f64, Array1<f64>) {
    let d = h.nrows();
    let m = DMatrix::from_fn(d, d, |i, j| h[[i, j]]);
    let eig = SymmetricEigen::new(m);
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("d >= 1");
    let v = Array1::from_iter(eig.eigenvectors.column(k).iter().copied());
    (lambda, v)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn symmetric_max_eigenvalue(h: &Array2<f64>) -> f64 {
    let neg = h.mapv(|t| -t);
    -symmetric_min_eigenpair(&neg).0
}

fn check_dense_cap(d: usize, cap: usize) -> Result<()> {
    if d > cap {
        Err(Error::DenseCapExceeded { d, cap })
    } else {
        Ok(())
    }
}

/// `F_E(x) = (1/n) Σ_z ∇f_z ∇f_zᵀ` with the default dense cap.
pub fn empirical_fisher(p: &FiniteSumProblem, x: ArrayView1<f64>) -> Result<Array2<f64>> {
    empirical_fisher_capped(p, x, DEFAULT_DENSE_CAP)
}

pub fn empirical_fisher_capped(
    p: &FiniteSumProblem,
    x: ArrayView1<f64>,
    cap: usize,
) -> Result<Array2<f64>> {
    check_dense_cap(p.dim(), cap)?;
    let g = p.component_gradients(x)?;
    Ok(g.t().dot(&g) / p.n() as f64)
}

/// `Var(x) = (1/n) Σ_z (∇f_z - ∇f)(∇f_z - ∇f)ᵀ` with the default dense cap.
pub fn grad_covariance(p: &FiniteSumProblem, x: ArrayView1<f64>) -> Result<Array2<f64>> {
    grad_covariance_capped(p, x, DEFAULT_DENSE_CAP)
}

pub fn grad_covariance_capped(
    p: &FiniteSumProblem,
    x: ArrayView1<f64>,
    cap: usize,
) -> Result<Array2<f64>> {
    check_dense_cap(p.dim(), cap)?;
    let mut g = p.component_gradients(x)?;
    let mean = g.mean_axis(Axis(0)).expect("n >= 1");
    g -= &mean;
    Ok(g.t().dot(&g) / p.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_dataset, make_quadratic_saddle, make_sigmoid_problem, QuadraticSaddleSpec};
    use crate::sampling::{substream, Substream};
    use ndarray::array;

    fn quad(a: Vec<f64>, noise: Vec<Vec<f64>>) -> FiniteSumProblem {
        make_quadratic_saddle(&QuadraticSaddleSpec::new(a, noise).unwrap()).unwrap()
    }

    fn pm_e2() -> FiniteSumProblem {
        quad(vec![1.0, -1.0], vec![vec![0.0, 1.0], vec![0.0, -1.0]])
    }

    #[test]
    fn diagonal_saddle_eigenpair() {
        let p = quad(vec![2.0, -1.0], vec![vec![0.0, 0.0]]);
        let mut rng = substream(1, Substream::Probe);
        let rep = lambda_min_default(&p, array![0.3, 4.0].view(), &mut rng).unwrap();
        assert!(rep.converged);
        assert!((rep.lambda_min_hat + 1.0).abs() <= 1e-6);
        assert!(rep.eigvec_hat[0].abs() <= 1e-5);
        assert!((rep.eigvec_hat[1].abs() - 1.0).abs() <= 1e-5);
        let norm: f64 = rep.eigvec_hat.iter().map(|t| t * t).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn positive_definite_identity() {
        let p = quad(vec![1.0, 1.0], vec![vec![0.0, 0.0]]);
        let mut rng = substream(2, Substream::Probe);
        let rep = lambda_min_default(&p, array![1.0, -1.0].view(), &mut rng).unwrap();
        assert!(rep.converged);
        assert!((rep.lambda_min_hat - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn zero_hessian() {
        let p = quad(vec![0.0, 0.0, 0.0], vec![vec![0.0; 3]]);
        let mut rng = substream(3, Substream::Probe);
        let rep = lambda_min_default(&p, array![1.0, 2.0, 3.0].view(), &mut rng).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.lambda_min_hat, 0.0);
    }

    #[test]
    fn sigmoid_matches_dense_eigensolve() {
        let data = generate_dataset(40, 4, 7).unwrap();
        let p = make_sigmoid_problem(&data, 0.5).unwrap();
        let mut rng = substream(5, Substream::Probe);
        for _ in 0..5 {
            let x = crate::sampling::standard_normal_vec(&mut rng, 4);
            let (exact, _) = dense_lambda_min(&p, x.view()).unwrap();
            let rep = lambda_min(&p, x.view(), 1e-8, 100_000, &mut rng).unwrap();
            assert!(rep.converged);
            assert!((rep.lambda_min_hat - exact).abs() <= 1e-6, "{} vs {exact}", rep.lambda_min_hat);
        }
    }

    #[test]
    fn exhausted_budget_is_not_an_error() {
        let p = quad(vec![1.0, 0.999, -0.5, -0.501], vec![vec![0.0; 4]]);
        let mut rng = substream(6, Substream::Probe);
        let rep = lambda_min(&p, array![0.0, 0.0, 0.0, 0.0].view(), 1e-12, 3, &mut rng).unwrap();
        assert!(!rep.converged);
        assert!(rep.residual.is_finite());
    }

    #[test]
    fn argument_errors() {
        let p = pm_e2();
        let mut rng = substream(0, Substream::Probe);
        let x = array![0.0, 0.0];
        assert!(lambda_min(&p, x.view(), 0.0, 10, &mut rng).is_err());
        assert!(lambda_min(&p, x.view(), 1e-6, 0, &mut rng).is_err());
        assert!(lambda_min(&p, array![0.0].view(), 1e-6, 10, &mut rng).is_err());
    }

    #[test]
    fn hvps_are_not_ifo() {
        let p = pm_e2();
        let mut rng = substream(0, Substream::Probe);
        lambda_min_default(&p, array![0.0, 0.0].view(), &mut rng).unwrap();
        assert_eq!(p.ifo_count(), 0);
        assert!(p.second_order_count() > 0);
    }

    #[test]
    fn cnc_estimate_enumerates_components() {
        let p = pm_e2();
        let x = array![0.0, 0.0];
        assert_eq!(cnc_estimate(&p, x.view(), array![0.0, 1.0].view()).unwrap(), 1.0);
        assert_eq!(cnc_estimate(&p, x.view(), array![1.0, 0.0].view()).unwrap(), 0.0);
        assert!(cnc_estimate(&p, x.view(), array![1.0, 1.0].view()).is_err());
    }

    #[test]
    fn cnc_estimate_without_noise_is_squared_projection() {
        let p = quad(vec![1.0, -2.0], vec![vec![0.0, 0.0]; 3]);
        let x = array![0.5, 1.5];
        let v = array![0.6, 0.8];
        let g = p.grad_full(x.view()).unwrap();
        let expected = v.dot(&g).powi(2);
        assert!((cnc_estimate(&p, x.view(), v.view()).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn fisher_and_covariance_at_saddle() {
        let p = pm_e2();
        let x = array![0.0, 0.0];
        let expected = array![[0.0, 0.0], [0.0, 1.0]];
        assert_eq!(empirical_fisher(&p, x.view()).unwrap(), expected);
        assert_eq!(grad_covariance(&p, x.view()).unwrap(), expected);
    }

    #[test]
    fn single_component_covariance_vanishes() {
        let p = quad(vec![1.0, -3.0], vec![vec![0.4, 0.2]]);
        let var = grad_covariance(&p, array![1.0, 2.0].view()).unwrap();
        assert!(var.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn dense_cap_enforced() {
        let p = quad(vec![1.0; 3], vec![vec![0.0; 3]]);
        let x = array![0.0, 0.0, 0.0];
        assert!(matches!(
            empirical_fisher_capped(&p, x.view(), 2),
            Err(Error::DenseCapExceeded { d: 3, cap: 2 })
        ));
        assert!(grad_covariance_capped(&p, x.view(), 2).is_err());
        let big = quad(vec![1.0; 65], vec![vec![0.0; 65]]);
        assert!(dense_hessian(&big, Array1::zeros(65).view()).is_err());
    }

    #[test]
    fn default_budget() {
        assert_eq!(default_max_iter(4), 1000);
        assert_eq!(default_max_iter(200), (2000.0 * 201f64.ln()).ceil() as usize);
    }

    #[test]
    fn report_json_field_names() {
        let rep = SpectralReport {
            lambda_min_hat: -1.0,
            eigvec_hat: vec![0.0, 1.0],
            tau_hat: 1.0,
            iterations_used: 3,
            converged: true,
            residual: 0.0,
        };
        let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
        for key in ["lambda_min", "tau", "converged", "iters"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
