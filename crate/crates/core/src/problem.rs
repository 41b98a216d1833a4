//! Finite-sum objectives `f(x) = (1/n) Σ_z f_z(x)` with per-component oracles.
//!
//! A [`FiniteSumProblem`] wraps a [`ComponentOracle`] and counts incremental
//! first-order oracle (IFO) calls: every evaluation of a component gradient at
//! one point is one IFO. Hessian-vector products are counted separately as
//! second-order calls. Objective values (`eval_full`) are diagnostics and are
//! not counted.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{self, standard_normal_vec, Substream};

/// Per-component value, gradient and Hessian-vector product.
///
/// `add_grad` and `add_hvp` accumulate into `acc` so that averages can be
/// formed in a fixed summation order without temporaries.
pub trait ComponentOracle: Send + Sync {
    fn num_components(&self) -> usize;
    fn dim(&self) -> usize;
    fn value(&self, z: usize, x: ArrayView1<f64>) -> f64;
    fn add_grad(&self, z: usize, x: ArrayView1<f64>, acc: ArrayViewMut1<f64>);
    fn add_hvp(&self, z: usize, x: ArrayView1<f64>, v: ArrayView1<f64>, acc: ArrayViewMut1<f64>);
}

/// How the gradient bound `l` was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBound {
    pub value: f64,
    /// Radius of the ball `‖x‖ <= radius` sampled for an empirical estimate.
    pub sampled_radius: Option<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub name: String,
    /// `l` with `‖∇f_z(x)‖ <= l`; `None` when unknown or unbounded.
    pub gradient_bound: Option<GradientBound>,
    /// Gradient-Lipschitz constant `L` of every component (an upper bound).
    pub smoothness: f64,
    /// Hessian-Lipschitz constant `ρ` of every component (an upper bound).
    pub hessian_lipschitz: Option<f64>,
}

pub struct FiniteSumProblem {
    oracle: Box<dyn ComponentOracle>,
    meta: ProblemMeta,
    ifo: AtomicU64,
    second_order: AtomicU64,
}

impl std::fmt::Debug for FiniteSumProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteSumProblem")
            .field("n", &self.n())
            .field("d", &self.dim())
            .field("meta", &self.meta)
            .field("ifo", &self.ifo_count())
            .finish()
    }
}

impl FiniteSumProblem {
    pub fn new(oracle: impl ComponentOracle + 'static, meta: ProblemMeta) -> Result<Self> {
        if oracle.num_components() == 0 || oracle.dim() == 0 {
            return Err(Error::Dimension(
                "a finite-sum problem needs n >= 1 components and d >= 1".into(),
            ));
        }
        Ok(Self {
            oracle: Box::new(oracle),
            meta,
            ifo: AtomicU64::new(0),
            second_order: AtomicU64::new(0),
        })
    }

    pub fn n(&self) -> usize {
        self.oracle.num_components()
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn meta(&self) -> &ProblemMeta {
        &self.meta
    }

    pub fn set_gradient_bound(&mut self, bound: Option<GradientBound>) {
        self.meta.gradient_bound = bound;
    }

    pub fn ifo_count(&self) -> u64 {
        self.ifo.load(Ordering::Relaxed)
    }

    pub fn second_order_count(&self) -> u64 {
        self.second_order.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.ifo.store(0, Ordering::Relaxed);
        self.second_order.store(0, Ordering::Relaxed);
    }

    fn check_point(&self, x: ArrayView1<f64>, what: &'static str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{what} has length {} but the problem dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what));
        }
        Ok(())
    }

    fn check_index(&self, z: usize) -> Result<()> {
        if z >= self.n() {
            return Err(Error::IndexOutOfRange { index: z, n: self.n() });
        }
        Ok(())
    }

    /// `∇f_z(x)`; one IFO.
    pub fn grad_component(&self, x: ArrayView1<f64>, z: usize) -> Result<Array1<f64>> {
        self.check_point(x, "x")?;
        self.check_index(z)?;
        let mut g = Array1::zeros(self.dim());
        self.oracle.add_grad(z, x, g.view_mut());
        self.ifo.fetch_add(1, Ordering::Relaxed);
        Ok(g)
    }

    /// `(1/|I|) Σ_{z ∈ I} ∇f_z(x)`, summed in the order of `idx`; `|I|` IFO.
    pub fn grad_minibatch(&self, x: ArrayView1<f64>, idx: &[usize]) -> Result<Array1<f64>> {
        self.check_point(x, "x")?;
        if idx.is_empty() {
            return Err(Error::InvalidArgument("minibatch index set is empty".into()));
        }
        for &z in idx {
            self.check_index(z)?;
        }
        Ok(self.minibatch_unchecked(x, idx.iter().copied(), idx.len()))
    }

    /// `∇f(x)`; `n` IFO. Bitwise equal to `grad_minibatch` over `0..n`.
    pub fn grad_full(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_point(x, "x")?;
        Ok(self.minibatch_unchecked(x, 0..self.n(), self.n()))
    }

    fn minibatch_unchecked(
        &self,
        x: ArrayView1<f64>,
        idx: impl Iterator<Item = usize>,
        len: usize,
    ) -> Array1<f64> {
        let mut g = Array1::zeros(self.dim());
        for z in idx {
            self.oracle.add_grad(z, x, g.view_mut());
        }
        self.ifo.fetch_add(len as u64, Ordering::Relaxed);
        g / len as f64
    }

    /// `f(x)`; a diagnostic, not counted as IFO.
    pub fn eval_full(&self, x: ArrayView1<f64>) -> Result<f64> {
        self.check_point(x, "x")?;
        let sum: f64 = (0..self.n()).map(|z| self.oracle.value(z, x)).sum();
        Ok(sum / self.n() as f64)
    }

    pub fn eval_component(&self, x: ArrayView1<f64>, z: usize) -> Result<f64> {
        self.check_point(x, "x")?;
        self.check_index(z)?;
        Ok(self.oracle.value(z, x))
    }

    /// `∇²f(x) v`; `n` second-order calls, no IFO.
    pub fn hvp_full(&self, x: ArrayView1<f64>, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_point(x, "x")?;
        self.check_point(v, "v")?;
        let mut acc = Array1::zeros(self.dim());
        for z in 0..self.n() {
            self.oracle.add_hvp(z, x, v, acc.view_mut());
        }
        self.second_order
            .fetch_add(self.n() as u64, Ordering::Relaxed);
        Ok(acc / self.n() as f64)
    }

    /// All component gradients as rows of an `n × d` matrix. Diagnostic
    /// access for the spectral module: not counted as IFO.
    pub fn component_gradients(&self, x: ArrayView1<f64>) -> Result<Array2<f64>> {
        self.check_point(x, "x")?;
        let mut out = Array2::zeros((self.n(), self.dim()));
        for (z, row) in out.axis_iter_mut(Axis(0)).enumerate() {
            self.oracle.add_grad(z, x, row);
        }
        Ok(out)
    }

    /// Uncounted full gradient for diagnostics and trace columns.
    pub fn grad_full_uncounted(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_point(x, "x")?;
        let mut g = Array1::zeros(self.dim());
        for z in 0..self.n() {
            self.oracle.add_grad(z, x, g.view_mut());
        }
        Ok(g / self.n() as f64)
    }
}

// ---------------------------------------------------------------------------
// Synthetic two-class data

/// Two Gaussian classes: label 0 from `N(0, I)`, label 1 from `N(𝟙, I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub seed: u64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// CSV with header `y,z_1,...,z_d`, one row per sample.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        let csv_err = |e: csv::Error| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.dim()).map(|j| format!("z_{j}")));
        w.write_record(&header).map_err(csv_err)?;
        for (y, row) in self.labels.iter().zip(self.features.axis_iter(Axis(0))) {
            let mut rec = vec![y.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.get(0) != Some("y") || header.len() < 2 {
            return Err(bad("expected header `y,z_1,...,z_d`".into()));
        }
        let d = header.len() - 1;
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let y: u8 = rec[0]
                .parse()
                .map_err(|_| bad(format!("label `{}` is not 0 or 1", &rec[0])))?;
            if y > 1 {
                return Err(bad(format!("label {y} is not 0 or 1")));
            }
            labels.push(y);
            for field in rec.iter().skip(1) {
                values.push(
                    field
                        .parse::<f64>()
                        .map_err(|_| bad(format!("feature `{field}` is not a number")))?,
                );
            }
        }
        let n = labels.len();
        let features = Array2::from_shape_vec((n, d), values)
            .map_err(|e| bad(format!("ragged feature rows: {e}")))?;
        Ok(Self {
            features,
            labels,
            seed: 0,
        })
    }
}

/// Generates `n/2` class-0 rows followed by `n/2` class-1 rows.
pub fn generate_dataset(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 || !n.is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "dataset needs an even n >= 2 and d >= 1, got n = {n}, d = {d}"
        )));
    }
    let mut rng = sampling::substream(seed, Substream::Dataset);
    let mut features = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for (i, mut row) in features.axis_iter_mut(Axis(0)).enumerate() {
        let label = u8::from(i >= n / 2);
        let shift = f64::from(label);
        for v in row.iter_mut() {
            *v = rng.sample::<f64, _>(rand_distr::StandardNormal) + shift;
        }
        labels.push(label);
    }
    Ok(Dataset {
        features,
        labels,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Sigmoid loss with a nonconvex regularizer

/// `f_i(x) = σ(y_i z_iᵀx) + λ Σ_j x_j² / (1 + x_j²)`.
#[derive(Clone, Debug)]
pub struct SigmoidComponents {
    features: Array2<f64>,
    labels: Vec<f64>,
    lambda: f64,
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

// max |σ''| = √3/18 and max |σ'''| = 1/8
const SIGMOID_D2_MAX: f64 = 0.096_225_044_864_937_63;
const SIGMOID_D3_MAX: f64 = 0.125;
// max over t of |d/dt (1 - 3t²)/(1 + t²)³|
const REG_D3_SHAPE_MAX: f64 = 2.334_279_642;

impl ComponentOracle for SigmoidComponents {
    fn num_components(&self) -> usize {
        self.labels.len()
    }

    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, z: usize, x: ArrayView1<f64>) -> f64 {
        let y = self.labels[z];
        let u = y * self.features.row(z).dot(&x);
        let reg: f64 = x.iter().map(|&t| t * t / (1.0 + t * t)).sum();
        sigmoid(u) + self.lambda * reg
    }

    fn add_grad(&self, z: usize, x: ArrayView1<f64>, mut acc: ArrayViewMut1<f64>) {
        let y = self.labels[z];
        let row = self.features.row(z);
        let s = sigmoid(y * row.dot(&x));
        let w = s * (1.0 - s) * y;
        for ((a, &zj), &t) in acc.iter_mut().zip(row.iter()).zip(x.iter()) {
            let q = 1.0 + t * t;
            *a += w * zj + self.lambda * 2.0 * t / (q * q);
        }
    }

    fn add_hvp(&self, z: usize, x: ArrayView1<f64>, v: ArrayView1<f64>, mut acc: ArrayViewMut1<f64>) {
        let y = self.labels[z];
        let row = self.features.row(z);
        let s = sigmoid(y * row.dot(&x));
        let w = s * (1.0 - s) * (1.0 - 2.0 * s) * y * y * row.dot(&v);
        for (((a, &zj), &t), &vj) in acc.iter_mut().zip(row.iter()).zip(x.iter()).zip(v.iter()) {
            let q = 1.0 + t * t;
            *a += w * zj + 2.0 * self.lambda * (1.0 - 3.0 * t * t) / (q * q * q) * vj;
        }
    }
}

pub const GRADIENT_BOUND_SAMPLES: usize = 10_000;
pub const GRADIENT_BOUND_RADIUS: f64 = 10.0;

/// Builds the sigmoid objective with `{0,1}` labels as generated.
pub fn make_sigmoid_problem(data: &Dataset, lambda: f64) -> Result<FiniteSumProblem> {
    make_sigmoid_problem_with(data, lambda, false)
}

/// As [`make_sigmoid_problem`]; `signed_labels` remaps `{0,1}` to `{-1,+1}`.
pub fn make_sigmoid_problem_with(
    data: &Dataset,
    lambda: f64,
    signed_labels: bool,
) -> Result<FiniteSumProblem> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "regularization weight must be finite and nonnegative, got {lambda}"
        )));
    }
    if data.n() == 0 || data.dim() == 0 || data.features.nrows() != data.n() {
        return Err(Error::Dimension("dataset is empty or inconsistent".into()));
    }
    let labels: Vec<f64> = data
        .labels
        .iter()
        .map(|&y| match (signed_labels, y) {
            (true, 0) => -1.0,
            (_, y) => f64::from(y),
        })
        .collect();
    let max_sq = data
        .features
        .axis_iter(Axis(0))
        .zip(&labels)
        .map(|(row, y)| y * y * row.dot(&row))
        .fold(0.0, f64::max);
    let smoothness = SIGMOID_D2_MAX * max_sq + 2.0 * lambda;
    let hessian_lipschitz = SIGMOID_D3_MAX * max_sq.powf(1.5) + 2.0 * lambda * REG_D3_SHAPE_MAX;

    let oracle = SigmoidComponents {
        features: data.features.clone(),
        labels,
        lambda,
    };
    let l = sampled_gradient_bound(&oracle, data.seed);
    let meta = ProblemMeta {
        name: format!("sigmoid(n={}, d={}, lambda={lambda})", data.n(), data.dim()),
        gradient_bound: Some(l),
        smoothness,
        hessian_lipschitz: Some(hessian_lipschitz),
    };
    FiniteSumProblem::new(oracle, meta)
}

/// Max of `‖∇f_z(x)‖` over random `(x, z)` with `x` uniform in the ball of
/// radius [`GRADIENT_BOUND_RADIUS`].
fn sampled_gradient_bound(oracle: &dyn ComponentOracle, seed: u64) -> GradientBound {
    let mut rng = sampling::substream(seed, Substream::Metadata);
    let d = oracle.dim();
    let mut best: f64 = 0.0;
    let mut g = Array1::zeros(d);
    for _ in 0..GRADIENT_BOUND_SAMPLES {
        let dir = standard_normal_vec(&mut rng, d);
        let norm = dir.dot(&dir).sqrt();
        if norm == 0.0 {
            continue;
        }
        let radius = GRADIENT_BOUND_RADIUS * rng.random::<f64>().powf(1.0 / d as f64);
        let x = dir * (radius / norm);
        let z = rng.random_range(0..oracle.num_components());
        g.fill(0.0);
        oracle.add_grad(z, x.view(), g.view_mut());
        best = best.max(g.dot(&g).sqrt());
    }
    GradientBound {
        value: best,
        sampled_radius: Some(GRADIENT_BOUND_RADIUS),
        samples: GRADIENT_BOUND_SAMPLES,
    }
}

// ---------------------------------------------------------------------------
// Controlled quadratic saddle

/// `f_z(x) = ½ xᵀHx + c_zᵀx` with `H = Q diag(a) Qᵀ` and `Σ_z c_z = 0`.
#[derive(Clone, Debug)]
pub struct QuadraticSaddleSpec {
    spectrum: Vec<f64>,
    noise: Array2<f64>,
    basis: Option<Array2<f64>>,
}

impl QuadraticSaddleSpec {
    /// Noise vectors are centered by subtracting their mean.
    pub fn new(spectrum: Vec<f64>, noise: Vec<Vec<f64>>) -> Result<Self> {
        let d = spectrum.len();
        if d == 0 || noise.is_empty() {
            return Err(Error::Dimension(
                "quadratic saddle needs a nonempty spectrum and at least one component".into(),
            ));
        }
        if spectrum.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("spectrum"));
        }
        if let Some(bad) = noise.iter().find(|c| c.len() != d) {
            return Err(Error::Dimension(format!(
                "noise vector has length {} but the spectrum has {d} entries",
                bad.len()
            )));
        }
        let n = noise.len();
        let flat: Vec<f64> = noise.into_iter().flatten().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("noise vectors"));
        }
        let mut noise = Array2::from_shape_vec((n, d), flat)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        let mean = noise.mean_axis(Axis(0)).expect("n >= 1");
        noise -= &mean;
        let residual = noise.sum_axis(Axis(0));
        let scale = noise.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if residual.iter().any(|r| r.abs() > 1e-12 * scale * n as f64) {
            return Err(Error::InvalidArgument(
                "noise vectors do not sum to zero after centering".into(),
            ));
        }
        Ok(Self {
            spectrum,
            noise,
            basis: None,
        })
    }

    /// All `n` noise vectors zero.
    pub fn noiseless(spectrum: Vec<f64>, n: usize) -> Result<Self> {
        let d = spectrum.len();
        Self::new(spectrum, vec![vec![0.0; d]; n])
    }

    /// Rotates the Hessian to `Q diag(a) Qᵀ`; `Q` must be orthogonal.
    pub fn with_basis(mut self, q: Array2<f64>) -> Result<Self> {
        let d = self.spectrum.len();
        if q.dim() != (d, d) {
            return Err(Error::Dimension(format!("basis must be {d}×{d}")));
        }
        let gram = q.t().dot(&q);
        let off = (&gram - &Array2::<f64>::eye(d))
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if off > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthogonal (max |QᵀQ - I| = {off:e})"
            )));
        }
        self.basis = Some(q);
        Ok(self)
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn noise(&self) -> &Array2<f64> {
        &self.noise
    }

    pub fn has_negative_curvature(&self) -> bool {
        self.spectrum.iter().any(|&a| a < 0.0)
    }

    /// Dense `H`.
    pub fn hessian(&self) -> Array2<f64> {
        let diag = Array2::from_diag(&Array1::from_vec(self.spectrum.clone()));
        match &self.basis {
            Some(q) => q.dot(&diag).dot(&q.t()),
            None => diag,
        }
    }
}

#[derive(Clone, Debug)]
struct QuadraticComponents {
    hessian: Array2<f64>,
    diagonal: Option<Array1<f64>>,
    noise: Array2<f64>,
}

impl QuadraticComponents {
    fn add_h_times(&self, v: ArrayView1<f64>, mut acc: ArrayViewMut1<f64>) {
        match &self.diagonal {
            Some(a) => acc.zip_mut_with(&(a * &v), |o, h| *o += h),
            None => acc += &self.hessian.dot(&v),
        }
    }
}

impl ComponentOracle for QuadraticComponents {
    fn num_components(&self) -> usize {
        self.noise.nrows()
    }

    fn dim(&self) -> usize {
        self.hessian.nrows()
    }

    fn value(&self, z: usize, x: ArrayView1<f64>) -> f64 {
        let hx = match &self.diagonal {
            Some(a) => a * &x,
            None => self.hessian.dot(&x),
        };
        0.5 * x.dot(&hx) + self.noise.row(z).dot(&x)
    }

    fn add_grad(&self, z: usize, x: ArrayView1<f64>, mut acc: ArrayViewMut1<f64>) {
        self.add_h_times(x, acc.view_mut());
        acc += &self.noise.row(z);
    }

    fn add_hvp(&self, _z: usize, _x: ArrayView1<f64>, v: ArrayView1<f64>, acc: ArrayViewMut1<f64>) {
        self.add_h_times(v, acc);
    }
}

/// Builds the quadratic saddle; `L = max |a_j|`, `ρ = 0`, `l` unknown.
pub fn make_quadratic_saddle(spec: &QuadraticSaddleSpec) -> Result<FiniteSumProblem> {
    let smoothness = spec.spectrum.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let oracle = QuadraticComponents {
        hessian: spec.hessian(),
        diagonal: spec
            .basis
            .is_none()
            .then(|| Array1::from_vec(spec.spectrum.clone())),
        noise: spec.noise.clone(),
    };
    let meta = ProblemMeta {
        name: format!(
            "quadratic-saddle(d={}, n={})",
            spec.spectrum.len(),
            spec.noise.nrows()
        ),
        gradient_bound: None,
        smoothness,
        hessian_lipschitz: Some(0.0),
    };
    FiniteSumProblem::new(oracle, meta)
}

/// Writes `x` as a single-line JSON array.
pub fn write_point(path: impl AsRef<Path>, x: &Array1<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let body = serde_json::to_string(&x.to_vec()).expect("Vec<f64> serializes");
    writeln!(file, "{body}").map_err(|e| Error::io(path, e))
}

/// Reads a point written by [`write_point`] (a JSON array of numbers).
pub fn read_point(path: impl AsRef<Path>) -> Result<Array1<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: Vec<f64> = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(Array1::from_vec(v))
}
