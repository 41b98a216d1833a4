//! Optimizer hyperparameters, their admissibility rules, and theory-mode
//! parameter derivation.
//!
//! Practical mode only checks signs and ranges. Theory mode additionally
//! checks every row of the parameter-constraint table against a set of
//! [`ProblemConstants`]; each failure is reported as a [`Violation`] naming
//! the row. Nothing is ever clamped.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Practical,
    Theory,
}

/// When a CNC-SCSG run may stop before `max_epochs`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once `‖μ̃‖ <= ε` and the objective has stalled after a perturbation.
    #[default]
    Stall,
    /// Stop when the decrease over the `𝒦_thres` epochs following a
    /// perturbation is at most `f_thres`.
    FThres,
    /// Always run `max_epochs`.
    Budget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub mode: Mode,
    pub eps: f64,
    pub eps_g: f64,
    pub eps_h: f64,
    pub eta: f64,
    /// Step size of the single-sample SGD perturbation.
    pub r: f64,
    pub gamma: Option<f64>,
    pub b: usize,
    pub n: usize,
    pub k_thres: usize,
    pub f_thres: f64,
    pub g_thres: Option<f64>,
    pub max_epochs: usize,
    pub delta: f64,
    pub stop_rule: StopRule,
    pub stall_tol: f64,
    pub stall_epochs: usize,
    /// Radius of the isotropic PGD perturbation.
    pub pgd_radius: f64,
    pub c1: f64,
    pub eta0: Option<f64>,
}

impl OptimizerConfig {
    /// The benchmark defaults: `η = 0.5`, `r = 2`, a 50-epoch perturbation
    /// gap and PGD radius `0.05`.
    pub fn practical(n: usize, b: usize, eps: f64) -> Self {
        Self {
            mode: Mode::Practical,
            eps,
            eps_g: eps,
            eps_h: eps,
            eta: 0.5,
            r: 2.0,
            gamma: None,
            b,
            n,
            k_thres: 50,
            f_thres: f64::INFINITY,
            g_thres: None,
            max_epochs: 500,
            delta: 0.1,
            stop_rule: StopRule::Stall,
            stall_tol: 1e-8,
            stall_epochs: 5,
            pgd_radius: 0.05,
            c1: 1.0,
            eta0: None,
        }
    }

    pub fn validated(self) -> Result<ValidatedConfig> {
        validate_config(&self, None).map_err(violations_error)
    }

    pub fn validated_with(self, consts: &ProblemConstants) -> Result<ValidatedConfig> {
        validate_config(&self, Some(consts)).map_err(violations_error)
    }
}

fn violations_error(v: Vec<Violation>) -> Error {
    let lines: Vec<String> = v.iter().map(ToString::to_string).collect();
    Error::Config(lines.join("; "))
}

/// A configuration that passed [`validate_config`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedConfig(OptimizerConfig);

impl ValidatedConfig {
    pub fn into_inner(self) -> OptimizerConfig {
        self.0
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = OptimizerConfig;
    fn deref(&self) -> &OptimizerConfig {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Gradient-Lipschitz constant `L`.
    pub smoothness: f64,
    pub rho: f64,
    /// Component gradient bound `l`.
    pub grad_bound: f64,
    pub tau: f64,
    /// `f(x₀) - f*` or an upper bound on it.
    pub f_gap: f64,
}

impl ProblemConstants {
    pub fn check(&self) -> Result<()> {
        let fields = [
            ("smoothness", self.smoothness),
            ("rho", self.rho),
            ("grad_bound", self.grad_bound),
            ("tau", self.tau),
            ("f_gap", self.f_gap),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "problem constant {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.tau > self.grad_bound * self.grad_bound {
            return Err(Error::InvalidArgument(format!(
                "tau = {} exceeds l² = {}",
                self.tau,
                self.grad_bound * self.grad_bound
            )));
        }
        Ok(())
    }
}

/// Rows of the parameter-constraint table, plus plain range checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TableRow {
    EpsG,
    EpsH,
    Gamma,
    GammaEta0,
    Eta,
    BatchRatio,
    R,
    FThres,
    KThres,
    GThresLargeGradient,
    GThresIncrease,
    GThresSaddle,
    CPositive,
    Range(&'static str),
}

impl fmt::Display for TableRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TableRow::EpsG => "ε_g = ε",
            TableRow::EpsH => "ε_h = (ρε)^(2/5)",
            TableRow::Gamma => "γ ≤ 1/3",
            TableRow::GammaEta0 => "γ ≤ η₀L(n/b)^(2/3)",
            TableRow::Eta => "ηL = γ(b/n)^(2/3)",
            TableRow::BatchRatio => "b ≤ n/8",
            TableRow::R => "r ≤ min(1/2, η/(CL))·τε_h²/(12ρl³)",
            TableRow::FThres => "f_thres ≤ ητrε_h²/(12lρC)",
            TableRow::KThres => "𝒦_thres ≥ (C₁/(ηε_h))(n/b)ln(1/ε_h)",
            TableRow::GThresLargeGradient => "g_thres ≤ γ/(5L)(n/b)^(1/3)ε_g²",
            TableRow::GThresIncrease => "g_thres ≥ 10l²γ²/(Lδ)(b/n)^(1/3)",
            TableRow::GThresSaddle => "g_thres ≤ (n/b)η²ε_h³τr/(12C₁lρC)·ln⁻¹(1/ε_h)",
            TableRow::CPositive => "C > 0",
            TableRow::Range(field) => return write!(f, "range of {field}"),
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub row: TableRow,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "violates {}: {}", self.row, self.detail)
    }
}

/// `C = b / [ (b - η²L²n/b - ηn)(1 - ηL)/(1 + 2η) - L³η²n/(2b) ]`.
pub fn theory_c(eta: f64, smoothness: f64, n: usize, b: usize) -> Result<f64> {
    let (n, b, l) = (n as f64, b as f64, smoothness);
    let inner = (b - eta * eta * l * l * n / b - eta * n) * (1.0 - eta * l) / (1.0 + 2.0 * eta)
        - l.powi(3) * eta * eta * n / (2.0 * b);
    if !(inner > 0.0) {
        return Err(Error::NonPositiveC { denominator: inner });
    }
    Ok(b / inner)
}

/// Table quantities that follow from `(η, r, ε_h, consts)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryBounds {
    pub c: f64,
    pub c2: f64,
    pub r_max: f64,
    pub f_thres_max: f64,
    pub k_thres_min: f64,
    /// Upper bound from the large-gradient regime.
    pub g_large_gradient: f64,
    /// Lower bound from the function-increase regime.
    pub g_increase: f64,
    /// Upper bound from the saddle regime.
    pub g_saddle: f64,
}

/// Evaluates every table bound; `r` enters `f_thres_max` and `g_saddle`.
#[allow(clippy::too_many_arguments)]
pub fn theory_bounds(
    consts: &ProblemConstants,
    n: usize,
    b: usize,
    eta: f64,
    gamma: f64,
    eps_g: f64,
    eps_h: f64,
    r: f64,
    delta: f64,
    c1: f64,
) -> Result<TheoryBounds> {
    let ProblemConstants {
        smoothness: big_l,
        rho,
        grad_bound: l,
        tau,
        ..
    } = *consts;
    let c = theory_c(eta, big_l, n, b)?;
    let c2 = f64::min(0.5, eta / (c * big_l));
    let ratio = n as f64 / b as f64;
    let log_inv = (1.0 / eps_h).ln();
    Ok(TheoryBounds {
        c,
        c2,
        r_max: c2 * tau / (12.0 * rho * l.powi(3)) * eps_h * eps_h,
        f_thres_max: eta * tau * r * eps_h * eps_h / (12.0 * l * rho * c),
        k_thres_min: c1 / (eta * eps_h) * ratio * log_inv,
        g_large_gradient: gamma / (5.0 * big_l) * ratio.cbrt() * eps_g * eps_g,
        g_increase: 10.0 * l * l * gamma * gamma / (big_l * delta) * ratio.recip().cbrt(),
        g_saddle: ratio * eta * eta * eps_h.powi(3) * tau * r / (c1 * 12.0 * l * rho * c) / log_inv,
    })
}

/// `ε_h = (ρε)^(2/5)`.
pub fn eps_h_for(eps: f64, rho: f64) -> f64 {
    (rho * eps).powf(0.4)
}

/// `η = (γ/L)(b/n)^(2/3)`.
pub fn eta_for(gamma: f64, smoothness: f64, n: usize, b: usize) -> f64 {
    gamma / smoothness * (b as f64 / n as f64).powf(2.0 / 3.0)
}

const REL_SLACK: f64 = 1e-12;

fn le(a: f64, b: f64) -> bool {
    a <= b + REL_SLACK * b.abs().max(a.abs())
}

fn push(out: &mut Vec<Violation>, row: TableRow, detail: String) {
    out.push(Violation { row, detail });
}

fn check_ranges(cfg: &OptimizerConfig, out: &mut Vec<Violation>) {
    let positive = [
        ("eps", cfg.eps),
        ("eps_g", cfg.eps_g),
        ("eps_h", cfg.eps_h),
        ("eta", cfg.eta),
        ("r", cfg.r),
        ("stall_tol", cfg.stall_tol),
        ("pgd_radius", cfg.pgd_radius),
        ("c1", cfg.c1),
    ];
    for (name, v) in positive {
        if !(v > 0.0 && v.is_finite()) {
            push(out, TableRow::Range(name), format!("{name} = {v} must be positive and finite"));
        }
    }
    if !(cfg.f_thres > 0.0) {
        push(out, TableRow::Range("f_thres"), format!("f_thres = {} must be positive", cfg.f_thres));
    }
    if let Some(g) = cfg.g_thres {
        if !(g > 0.0 && g.is_finite()) {
            push(out, TableRow::Range("g_thres"), format!("g_thres = {g} must be positive"));
        }
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        push(out, TableRow::Range("delta"), format!("delta = {} must lie in (0, 1)", cfg.delta));
    }
    if cfg.b < 1 || cfg.b > cfg.n {
        push(
            out,
            TableRow::Range("b"),
            format!("b = {} must satisfy 1 <= b <= n = {}", cfg.b, cfg.n),
        );
    }
    if cfg.stall_epochs < 1 {
        push(out, TableRow::Range("stall_epochs"), "stall_epochs must be at least 1".into());
    }
    if let Some(g) = cfg.gamma {
        if !(g > 0.0 && g.is_finite()) {
            push(out, TableRow::Range("gamma"), format!("gamma = {g} must be positive"));
        }
    }
    if let Some(e) = cfg.eta0 {
        if !(e > 0.0 && e.is_finite()) {
            push(out, TableRow::Range("eta0"), format!("eta0 = {e} must be positive"));
        }
    }
}

/// Checks `cfg`. Theory mode needs `consts`; every failed row is reported.
pub fn validate_config(
    cfg: &OptimizerConfig,
    consts: Option<&ProblemConstants>,
) -> std::result::Result<ValidatedConfig, Vec<Violation>> {
    let mut out = Vec::new();
    check_ranges(cfg, &mut out);
    if cfg.mode == Mode::Theory {
        check_theory(cfg, consts, &mut out);
    }
    if out.is_empty() {
        Ok(ValidatedConfig(cfg.clone()))
    } else {
        Err(out)
    }
}

fn check_theory(cfg: &OptimizerConfig, consts: Option<&ProblemConstants>, out: &mut Vec<Violation>) {
    let (n, b) = (cfg.n, cfg.b);
    if 8 * b > n {
        push(out, TableRow::BatchRatio, format!("b = {b} > n/8 = {}", n as f64 / 8.0));
    }
    let Some(gamma) = cfg.gamma else {
        push(out, TableRow::Gamma, "theory mode requires gamma".into());
        return;
    };
    if gamma > 1.0 / 3.0 {
        push(out, TableRow::Gamma, format!("γ = {gamma} > 1/3"));
    }
    if (cfg.eps_g - cfg.eps).abs() > REL_SLACK * cfg.eps.abs() {
        push(out, TableRow::EpsG, format!("ε_g = {} but ε = {}", cfg.eps_g, cfg.eps));
    }
    let Some(consts) = consts else {
        push(out, TableRow::Range("constants"), "theory mode requires problem constants".into());
        return;
    };
    if let Err(e) = consts.check() {
        push(out, TableRow::Range("constants"), e.to_string());
        return;
    }
    let big_l = consts.smoothness;
    if let Some(eta0) = cfg.eta0 {
        let cap = eta0 * big_l * (n as f64 / b as f64).powf(2.0 / 3.0);
        if gamma > cap {
            push(out, TableRow::GammaEta0, format!("γ = {gamma} > {cap}"));
        }
    }
    let eps_h = eps_h_for(cfg.eps, consts.rho);
    if (cfg.eps_h - eps_h).abs() > REL_SLACK * eps_h {
        push(out, TableRow::EpsH, format!("ε_h = {} but (ρε)^(2/5) = {eps_h}", cfg.eps_h));
    }
    let target = gamma * (b as f64 / n as f64).powf(2.0 / 3.0);
    if (cfg.eta * big_l - target).abs() > REL_SLACK * target {
        push(out, TableRow::Eta, format!("ηL = {} but γ(b/n)^(2/3) = {target}", cfg.eta * big_l));
    }
    let bounds = match theory_bounds(
        consts, n, b, cfg.eta, gamma, cfg.eps_g, cfg.eps_h, cfg.r, cfg.delta, cfg.c1,
    ) {
        Ok(bounds) => bounds,
        Err(e) => {
            push(out, TableRow::CPositive, e.to_string());
            return;
        }
    };
    if !le(cfg.r, bounds.r_max) {
        push(out, TableRow::R, format!("r = {} > {}", cfg.r, bounds.r_max));
    }
    if !le(cfg.f_thres, bounds.f_thres_max) {
        push(out, TableRow::FThres, format!("f_thres = {} > {}", cfg.f_thres, bounds.f_thres_max));
    }
    if !le(bounds.k_thres_min, cfg.k_thres as f64) {
        push(out, TableRow::KThres, format!("𝒦_thres = {} < {}", cfg.k_thres, bounds.k_thres_min));
    }
    match cfg.g_thres {
        None => push(out, TableRow::GThresSaddle, "theory mode requires g_thres".into()),
        Some(g) => {
            if !le(g, bounds.g_large_gradient) {
                push(out, TableRow::GThresLargeGradient, format!("g_thres = {g} > {}", bounds.g_large_gradient));
            }
            if !le(bounds.g_increase, g) {
                push(out, TableRow::GThresIncrease, format!("g_thres = {g} < {}", bounds.g_increase));
            }
            if !le(g, bounds.g_saddle) {
                push(out, TableRow::GThresSaddle, format!("g_thres = {g} > {}", bounds.g_saddle));
            }
        }
    }
}

/// Theory-mode configuration with `C₁ = 1`.
pub fn derive_theory_params(
    eps: f64,
    consts: &ProblemConstants,
    n: usize,
    b: usize,
    gamma: f64,
    delta: f64,
) -> Result<OptimizerConfig> {
    derive_theory_params_with(eps, consts, n, b, gamma, delta, 1.0)
}

/// Sets `η`, `ε_g`, `ε_h` by their defining formulas, takes the largest
/// admissible `r` and `f_thres`, the smallest admissible `𝒦_thres`, and
/// `g_thres` at its saddle-regime value. Fails with
/// [`Error::Inadmissible`] when that `g_thres` falls outside the other two
/// bounds.
#[allow(clippy::too_many_arguments)]
pub fn derive_theory_params_with(
    eps: f64,
    consts: &ProblemConstants,
    n: usize,
    b: usize,
    gamma: f64,
    delta: f64,
    c1: f64,
) -> Result<OptimizerConfig> {
    consts.check()?;
    if !(eps > 0.0 && gamma > 0.0 && c1 > 0.0 && delta > 0.0 && delta < 1.0) || b < 1 || b > n {
        return Err(Error::InvalidArgument(format!(
            "need eps, gamma, c1 > 0, 0 < delta < 1 and 1 <= b <= n; got eps = {eps}, \
             gamma = {gamma}, c1 = {c1}, delta = {delta}, b = {b}, n = {n}"
        )));
    }
    let eta = eta_for(gamma, consts.smoothness, n, b);
    let eps_h = eps_h_for(eps, consts.rho);
    if !(eps_h < 1.0) {
        return Err(Error::Inadmissible(format!(
            "ε_h = {eps_h} must be below 1 for ln(1/ε_h) > 0"
        )));
    }
    // r first, since f_thres and g_thres scale with it
    let r = theory_bounds(consts, n, b, eta, gamma, eps, eps_h, 0.0, delta, c1)?.r_max;
    let bounds = theory_bounds(consts, n, b, eta, gamma, eps, eps_h, r, delta, c1)?;
    let g = bounds.g_saddle;
    if g < bounds.g_increase || g > bounds.g_large_gradient {
        return Err(Error::Inadmissible(format!(
            "g_thres = {g:e} outside [{:e}, {:e}]",
            bounds.g_increase, bounds.g_large_gradient
        )));
    }
    let log_term = (1.0 / (consts.rho.sqrt() * eps.powf(0.4))).ln();
    let epochs = b as f64 / n as f64 * 288.0 * bounds.c * c1 * consts.grad_bound.powi(4) * consts.f_gap
        / (bounds.c2 * delta * eta * eta * consts.tau * consts.tau * eps * eps)
        * log_term;
    let max_epochs = if epochs.is_finite() && epochs > 0.0 {
        epochs.ceil().min(usize::MAX as f64) as usize
    } else {
        0
    };
    Ok(OptimizerConfig {
        mode: Mode::Theory,
        eps,
        eps_g: eps,
        eps_h,
        eta,
        r,
        gamma: Some(gamma),
        b,
        n,
        k_thres: bounds.k_thres_min.ceil() as usize,
        f_thres: bounds.f_thres_max,
        g_thres: Some(g),
        max_epochs,
        delta,
        stop_rule: StopRule::FThres,
        stall_tol: 1e-8,
        stall_epochs: 5,
        pgd_radius: 0.05,
        c1,
        eta0: None,
    })
}

/// Every key accepted in a configuration file. All are optional; a file may
/// also describe the problem and run, which the harness consumes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    // optimizer
    pub mode: Option<Mode>,
    pub eps: Option<f64>,
    pub eps_g: Option<f64>,
    pub eps_h: Option<f64>,
    pub eta: Option<f64>,
    pub r: Option<f64>,
    pub gamma: Option<f64>,
    pub b: Option<usize>,
    pub k_thres: Option<usize>,
    pub f_thres: Option<f64>,
    pub g_thres: Option<f64>,
    pub max_epochs: Option<usize>,
    pub delta: Option<f64>,
    pub stop_rule: Option<StopRule>,
    pub stall_tol: Option<f64>,
    pub stall_epochs: Option<usize>,
    pub pgd_radius: Option<f64>,
    pub c1: Option<f64>,
    pub eta0: Option<f64>,
    // problem constants
    pub smoothness: Option<f64>,
    pub rho: Option<f64>,
    pub grad_bound: Option<f64>,
    pub tau: Option<f64>,
    pub f_gap: Option<f64>,
    // problem
    pub problem: Option<String>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub lambda: Option<f64>,
    pub data_seed: Option<u64>,
    pub data_file: Option<String>,
    pub signed_labels: Option<bool>,
    pub spectrum: Option<Vec<f64>>,
    pub noise: Option<Vec<Vec<f64>>>,
    pub init_scale: Option<f64>,
    pub x0: Option<Vec<f64>>,
    // run
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub probe_every: Option<usize>,
    pub ifo_convention: Option<String>,
    pub plugin_batch: Option<usize>,
    pub plugin_minibatch: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Problem constants when all five are present.
    pub fn constants(&self) -> Option<ProblemConstants> {
        Some(ProblemConstants {
            smoothness: self.smoothness?,
            rho: self.rho?,
            grad_bound: self.grad_bound?,
            tau: self.tau?,
            f_gap: self.f_gap?,
        })
    }

    /// Builds an [`OptimizerConfig`] over `n` components. Unset keys take the
    /// practical defaults; unset `eps_g` and `eps_h` follow `eps`, except in
    /// theory mode where `eps_h = (ρε)^(2/5)` when `rho` is known.
    pub fn optimizer_config(&self, n: usize) -> Result<OptimizerConfig> {
        let b = self.b.ok_or_else(|| Error::Config("missing key `b`".into()))?;
        let eps = self.eps.ok_or_else(|| Error::Config("missing key `eps`".into()))?;
        let mut cfg = OptimizerConfig::practical(n, b, eps);
        let mode = self.mode.unwrap_or_default();
        cfg.mode = mode;
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        set!(eta, r, k_thres, f_thres, max_epochs, delta, stop_rule, stall_tol, stall_epochs, pgd_radius, c1);
        cfg.gamma = self.gamma;
        cfg.g_thres = self.g_thres;
        cfg.eta0 = self.eta0;
        cfg.eps_g = self.eps_g.unwrap_or(eps);
        cfg.eps_h = match (self.eps_h, mode, self.rho) {
            (Some(v), _, _) => v,
            (None, Mode::Theory, Some(rho)) => eps_h_for(eps, rho),
            (None, _, _) => eps,
        };
        if let Some(file_n) = self.n {
            if file_n != n {
                return Err(Error::Config(format!(
                    "config n = {file_n} does not match the problem's n = {n}"
                )));
            }
        }
        Ok(cfg)
    }
}
