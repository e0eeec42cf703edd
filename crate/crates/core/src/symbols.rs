//! Symbols `a(t, x, ξ)`: a small model library, class membership by sampled
//! finite differences, parabolic rescaling and truncation in x-frequency.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{holder_seminorm, FftPlan, Grid, SampledField, C64};

pub type Evaluator = Arc<dyn Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync>;

/// Descriptive data carried alongside an evaluator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolMeta {
    pub id: String,
    pub dim: usize,
    /// Order `m`.
    pub order: f64,
    /// Dyadic frequency band `λ`, if the symbol is localized to `|ξ| ≈ λ`.
    pub band: Option<f64>,
    pub t_end: f64,
    pub x_independent: bool,
    pub time_independent: bool,
    /// Period in every x direction, for x-periodic symbols.
    pub x_period: Option<f64>,
    /// Smallest length scale of the x-dependence.
    pub x_scale: f64,
}

impl SymbolMeta {
    fn new(id: impl Into<String>, dim: usize, order: f64) -> Self {
        Self {
            id: id.into(),
            dim,
            order,
            band: None,
            t_end: 1.0,
            x_independent: true,
            time_independent: true,
            x_period: None,
            x_scale: 1.0,
        }
    }
}

/// A real symbol: immutable evaluator plus metadata.
#[derive(Clone)]
pub struct Symbol {
    meta: SymbolMeta,
    eval: Evaluator,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol").field("meta", &self.meta).finish_non_exhaustive()
    }
}

const STENCILS: [&[(i32, f64)]; 5] = [
    &[(0, 1.0)],
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
];

/// Highest total derivative order supported by the finite-difference stencils.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

impl Symbol {
    pub fn new(
        meta: SymbolMeta,
        eval: impl Fn(f64, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            meta,
            eval: Arc::new(eval),
        }
    }

    pub fn meta(&self) -> &SymbolMeta {
        &self.meta
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    pub fn order(&self) -> f64 {
        self.meta.order
    }

    pub fn band(&self) -> Option<f64> {
        self.meta.band
    }

    /// `δ = (2 − m)/2`.
    pub fn delta(&self) -> f64 {
        (2.0 - self.meta.order) / 2.0
    }

    pub fn eval(&self, t: f64, x: &[f64], xi: &[f64]) -> f64 {
        (self.eval)(t, x, xi)
    }

    /// `c · a`, same metadata.
    pub fn scaled(&self, c: f64) -> Symbol {
        let inner = self.eval.clone();
        Symbol {
            meta: self.meta.clone(),
            eval: Arc::new(move |t, x, xi| c * inner(t, x, xi)),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Symbol {
        self.meta.id = id.into();
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Symbol {
        self.meta.t_end = t_end;
        self
    }

    /// Values at every node of `grid` for fixed `(t, ξ)`.
    pub fn x_slice(&self, t: f64, xi: &[f64], grid: &Grid) -> Vec<f64> {
        let d = grid.dim();
        (0..grid.len())
            .map(|i| self.eval(t, &grid.point(i)[..d], xi))
            .collect()
    }

    /// `∂_x^α ∂_ξ^β a` by tensor-product central differences with explicit
    /// steps; x-derivatives of x-independent symbols are exactly zero.
    #[allow(clippy::too_many_arguments)]
    pub fn partial_with_steps(
        &self,
        t: f64,
        x: &[f64],
        xi: &[f64],
        alpha: &[usize],
        beta: &[usize],
        hx: f64,
        hxi: f64,
    ) -> f64 {
        let d = self.dim();
        if self.meta.x_independent && alpha.iter().any(|&a| a > 0) {
            return 0.0;
        }
        let mut axes: Vec<(usize, &[(i32, f64)], f64)> = Vec::with_capacity(2 * d);
        let mut scale = 1.0;
        for (v, &o) in alpha.iter().chain(beta.iter()).enumerate() {
            if o > MAX_DERIVATIVE_ORDER {
                return f64::NAN;
            }
            if o > 0 {
                let h = if v < d { hx } else { hxi };
                axes.push((v, STENCILS[o], h));
                scale *= h.powi(o as i32);
            }
        }
        let mut point = [0.0; 4];
        point[..d].copy_from_slice(&x[..d]);
        point[d..2 * d].copy_from_slice(&xi[..d]);
        let mut idx = vec![0usize; axes.len()];
        let mut total = 0.0;
        loop {
            let mut p = point;
            let mut w = 1.0;
            for (a, &(v, st, h)) in axes.iter().enumerate() {
                let (off, c) = st[idx[a]];
                p[v] += off as f64 * h;
                w *= c;
            }
            total += w * self.eval(t, &p[..d], &p[d..2 * d]);
            let mut a = 0;
            loop {
                if a == axes.len() {
                    return total / scale;
                }
                idx[a] += 1;
                if idx[a] < axes[a].1.len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }

    /// Default finite-difference steps for a derivative of total order `n`.
    pub fn default_steps(&self, xi: &[f64], n: usize) -> (f64, f64) {
        let f = f64::EPSILON.powf(1.0 / (n as f64 + 2.0));
        let xi_norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let xi_scale = match self.meta.band {
            Some(l) => l / 4.0,
            None => xi_norm.max(1.0) / 4.0,
        };
        (self.meta.x_scale * f, xi_scale * f)
    }

    pub fn partial(&self, t: f64, x: &[f64], xi: &[f64], alpha: &[usize], beta: &[usize]) -> f64 {
        let n = alpha.iter().chain(beta.iter()).sum();
        let (hx, hxi) = self.default_steps(xi, n);
        self.partial_with_steps(t, x, xi, alpha, beta, hx, hxi)
    }

    /// `∂²_ξ a` as a row-major `d × d` matrix.
    pub fn xi_hessian(&self, t: f64, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let zero = [0usize; 2];
        let mut h = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let mut beta = [0usize; 2];
                beta[i] += 1;
                beta[j] += 1;
                let v = self.partial(t, x, xi, &zero[..d], &beta[..d]);
                h[i * d + j] = v;
                h[j * d + i] = v;
            }
        }
        h
    }
}

/// `C^∞` transition: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
pub fn smooth_transition(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

/// Shell cutoff in `r = |ξ|/λ`: 1 on `[1/4, 4]`, 0 outside `[1/8, 8]`.
pub fn shell_cutoff(r: f64) -> f64 {
    if r <= 0.125 || r >= 8.0 {
        0.0
    } else if r < 0.25 {
        smooth_transition((r - 0.125) / 0.125)
    } else if r <= 4.0 {
        1.0
    } else {
        smooth_transition((8.0 - r) / 4.0)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("dimension {dim} not in {{1, 2}}")))
    }
}

fn check_order(m: f64) -> Result<()> {
    if (1.0..=2.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("order m = {m} not in [1, 2]")))
    }
}

fn check_band(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("band {lambda} must be positive")))
    }
}

pub fn zero(dim: usize) -> Result<Symbol> {
    check_dim(dim)?;
    Ok(Symbol::new(SymbolMeta::new("zero", dim, 0.0), |_, _, _| 0.0))
}

/// `|ξ|^m` with no frequency localization.
pub fn power(dim: usize, m: f64) -> Result<Symbol> {
    check_dim(dim)?;
    Ok(Symbol::new(SymbolMeta::new(format!("power(m={m})"), dim, m), move |_, _, xi| {
        norm(xi).powf(m)
    }))
}

/// `|ξ|^m` times the shell cutoff at `λ`.
pub fn make_fractional(dim: usize, m: f64, lambda: f64) -> Result<Symbol> {
    check_dim(dim)?;
    check_order(m)?;
    check_band(lambda)?;
    let mut meta = SymbolMeta::new(format!("fractional(m={m},lambda={lambda})"), dim, m);
    meta.band = Some(lambda);
    Ok(Symbol::new(meta, move |_, _, xi| {
        let r = norm(xi);
        r.powf(m) * shell_cutoff(r / lambda)
    }))
}

/// `(|x|² + |ξ|²)/2`.
pub fn harmonic_oscillator(dim: usize) -> Result<Symbol> {
    check_dim(dim)?;
    let mut meta = SymbolMeta::new("harmonic_oscillator", dim, 2.0);
    meta.x_independent = false;
    Ok(Symbol::new(meta, |_, x, xi| {
        0.5 * (x.iter().map(|v| v * v).sum::<f64>() + xi.iter().map(|v| v * v).sum::<f64>())
    }))
}

/// `a = ξ` in one dimension.
pub fn momentum() -> Symbol {
    Symbol::new(SymbolMeta::new("xi", 1, 1.0), |_, _, xi| xi[0])
}

/// `a = x` in one dimension.
pub fn position() -> Symbol {
    let mut meta = SymbolMeta::new("x", 1, 0.0);
    meta.x_independent = false;
    Symbol::new(meta, |_, x, _| x[0])
}

/// `a = xξ` in one dimension.
pub fn dilation() -> Symbol {
    let mut meta = SymbolMeta::new("x*xi", 1, 1.0);
    meta.x_independent = false;
    Symbol::new(meta, |_, x, xi| x[0] * xi[0])
}

/// Lacunary profile `w(x) = Σ_j ζ_j^{−ρ} cos(ζ_j x)`, `ζ_j = 2^j ζ₀`, with unit
/// dyadic `Ċ^ρ` seminorm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderProfile {
    pub rho: f64,
    pub period: f64,
    pub base: f64,
    pub levels: usize,
}

impl HolderProfile {
    /// `ζ₀` must be a power of two on the lattice `2π/period`.
    pub fn new(rho: f64, period: f64, base: f64, levels: usize) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
        }
        if levels == 0 {
            return Err(Error::InvalidParameter("profile needs at least one level".into()));
        }
        let lattice = base * period / (2.0 * std::f64::consts::PI);
        if (base.log2() - base.log2().round()).abs() > 1e-12
            || (lattice - lattice.round()).abs() > 1e-9
            || lattice < 0.5
        {
            return Err(Error::InvalidParameter(format!(
                "base frequency {base} must be a power of two on the lattice of period {period}"
            )));
        }
        Ok(Self {
            rho,
            period,
            base,
            levels,
        })
    }

    /// Period `2π`, frequencies `1, 2, …` up to the first power of two `≥ top`.
    pub fn standard(rho: f64, top: f64) -> Result<Self> {
        let levels = top.max(1.0).log2().ceil() as usize + 1;
        Self::new(rho, 2.0 * std::f64::consts::PI, 1.0, levels)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.levels).map(move |j| self.base * 2f64.powi(j as i32))
    }

    pub fn top_frequency(&self) -> f64 {
        self.base * 2f64.powi(self.levels as i32 - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.frequencies().map(|z| z.powf(-self.rho) * (z * x).cos()).sum()
    }

    /// `Σ_j ζ_j^{−ρ}`, attained at `x = 0`.
    pub fn sup(&self) -> f64 {
        self.frequencies().map(|z| z.powf(-self.rho)).sum()
    }
}

/// `|ξ|^m · cutoff · (1 + A w(x₁))` with the standard lacunary profile
/// reaching x-frequency `4λ`.
pub fn make_perturbed(dim: usize, m: f64, lambda: f64, rho: f64, amplitude: f64) -> Result<Symbol> {
    let profile = HolderProfile::standard(rho, 4.0 * lambda)?;
    make_perturbed_with(dim, m, lambda, profile, amplitude)
}

/// Convexity may degrade to at most this fraction of the unperturbed constant.
pub const CONVEXITY_RETENTION: f64 = 0.5;

pub fn make_perturbed_with(
    dim: usize,
    m: f64,
    lambda: f64,
    profile: HolderProfile,
    amplitude: f64,
) -> Result<Symbol> {
    let base = make_fractional(dim, m, lambda)?;
    let mut meta = base.meta.clone();
    meta.id = format!(
        "perturbed(m={m},lambda={lambda},rho={},A={amplitude})",
        profile.rho
    );
    if amplitude != 0.0 {
        meta.x_independent = false;
        meta.x_period = Some(profile.period);
        meta.x_scale = 1.0 / profile.top_frequency();
    }
    let p = profile.clone();
    let sym = Symbol::new(meta, move |_, x, xi| {
        let r = norm(xi);
        r.powf(m) * shell_cutoff(r / lambda) * (1.0 + amplitude * p.eval(x[0]))
    });
    if amplitude != 0.0 {
        let reference = convexity_constant(&base, 1, 24)?;
        let measured = convexity_constant(&sym, 256.min(16 * profile.levels.max(16)), 24)?;
        let required = CONVEXITY_RETENTION * reference;
        if !(reference > 0.0) || measured < required {
            return Err(Error::ConvexityViolated { measured, required });
        }
    }
    Ok(sym)
}

/// `min |det ∂²_ξ a| / λ^{d(m−2)}` over a sample of `[0, T] × x × shell`, with
/// `n_x` points per x axis and `n_xi` radii in `[λ/4, 4λ]`.
pub fn convexity_constant(a: &Symbol, n_x: usize, n_xi: usize) -> Result<f64> {
    let lambda = a
        .band()
        .ok_or_else(|| Error::InvalidParameter("convexity needs a band".into()))?;
    let d = a.dim();
    let opts = ClassOptions {
        samples_x: n_x,
        samples_xi: n_xi,
        ..ClassOptions::default()
    };
    let ts = t_samples(a, &opts);
    let xs = x_samples(a, &opts);
    let xis = xi_samples(a, &opts);
    let scale = lambda.powf(d as f64 * (a.order() - 2.0));
    let min = ts
        .iter()
        .flat_map(|&t| xs.iter().map(move |x| (t, *x)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(t, x)| {
            xis.iter()
                .map(|xi| {
                    let h = a.xi_hessian(*t, &x[..d], &xi[..d]);
                    let det = if d == 1 { h[0] } else { h[0] * h[3] - h[1] * h[2] };
                    det.abs()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(min / scale)
}

/// Symbol classes checked by [`verify_class`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassTag {
    /// `|∂_x^α ∂_ξ^β a| ≤ c` for `|α| + |β| ≥ k`, uniformly in time.
    S00,
    /// `‖∂_x^α ∂_ξ^β a‖_{L¹_t L^∞} ≤ c` for `|α| + |β| ≥ k`.
    L1S00,
    /// `‖∂_x^α ∂_ξ^β a‖_{L¹_t L^∞} ≤ c λ^{m−|β|+δ(|α|−k)}` for `|α| ≥ k`.
    L1S,
    /// `‖∂_ξ^β a‖_{L^∞_t L^∞} ≤ c λ^{m−|β|}`.
    S1,
    /// `‖∂_ξ^β a‖_{L¹_t L^∞_ξ Ċ^r_x} ≤ c λ^{m−|β|}` for `|β| ≤ k`.
    HolderX,
}

impl ClassTag {
    pub fn label(&self) -> &'static str {
        match self {
            ClassTag::S00 => "S_{0,0}^{0,(k)}",
            ClassTag::L1S00 => "L1S_{0,0}^{0,(k)}",
            ClassTag::L1S => "L1S_{1,delta}^{m,(k)}(lambda)",
            ClassTag::S1 => "S_1^m(lambda)",
            ClassTag::HolderX => "L1 Linf_xi C^r_x",
        }
    }

    fn needs_band(&self) -> bool {
        matches!(self, ClassTag::L1S | ClassTag::S1 | ClassTag::HolderX)
    }
}

impl std::str::FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s00" => Ok(ClassTag::S00),
            "l1s00" => Ok(ClassTag::L1S00),
            "l1s" => Ok(ClassTag::L1S),
            "s1" => Ok(ClassTag::S1),
            "holder" | "holderx" => Ok(ClassTag::HolderX),
            _ => Err(Error::InvalidParameter(format!("unknown class tag {s:?}"))),
        }
    }
}

/// Sampling and budget settings for [`verify_class`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassOptions {
    pub k: usize,
    /// Hölder index for [`ClassTag::HolderX`].
    pub r: f64,
    pub budget: f64,
    pub max_order: usize,
    pub samples_t: usize,
    /// Points per x axis.
    pub samples_x: usize,
    /// Radii in the frequency shell (per sign in d = 1).
    pub samples_xi: usize,
    /// Directions in d = 2.
    pub samples_dir: usize,
    /// Frequency shell `[lo λ, hi λ]` for banded symbols.
    pub shell: (f64, f64),
    /// Half-width of the x box for non-periodic symbols.
    pub x_half_width: f64,
    /// Half-width of the ξ box for symbols without a band.
    pub xi_half_width: f64,
    pub max_evals: usize,
}

impl Default for ClassOptions {
    fn default() -> Self {
        Self {
            k: 2,
            r: 2.0,
            budget: 1.0,
            max_order: MAX_DERIVATIVE_ORDER,
            samples_t: 9,
            samples_x: 64,
            samples_xi: 16,
            samples_dir: 16,
            shell: (0.25, 4.0),
            x_half_width: 4.0,
            xi_half_width: 4.0,
            max_evals: 50_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub measured: f64,
    pub budget: f64,
    pub pass: bool,
}

/// Measured constants are maxima over a finite sample, hence lower bounds on
/// the true suprema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub k: usize,
    pub r: f64,
    pub entries: Vec<ClassEntry>,
    pub pass: bool,
    /// Set when the evaluation budget forced a thinned sample.
    pub partial: bool,
    pub samples: usize,
}

impl ClassReport {
    pub fn max_measured(&self) -> f64 {
        self.entries.iter().map(|e| e.measured).fold(0.0, f64::max)
    }

    pub fn entry(&self, alpha: &[usize], beta: &[usize]) -> Option<&ClassEntry> {
        self.entries
            .iter()
            .find(|e| e.alpha == alpha && e.beta == beta)
    }
}

fn multi_indices(dim: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    match dim {
        1 => (0..=max).for_each(|a| out.push(vec![a])),
        _ => {
            for total in 0..=max {
                for a in (0..=total).rev() {
                    out.push(vec![a, total - a]);
                }
            }
        }
    }
    out
}

fn t_samples(a: &Symbol, opts: &ClassOptions) -> Vec<f64> {
    if a.meta.time_independent || opts.samples_t < 2 {
        vec![0.0]
    } else {
        let n = opts.samples_t;
        (0..n).map(|i| a.meta.t_end * i as f64 / (n - 1) as f64).collect()
    }
}

fn x_samples(a: &Symbol, opts: &ClassOptions) -> Vec<[f64; 2]> {
    let d = a.dim();
    if a.meta.x_independent {
        return vec![[0.0; 2]];
    }
    let n = opts.samples_x.max(1);
    let axis: Vec<f64> = match a.meta.x_period {
        Some(l) => (0..n).map(|i| l * i as f64 / n as f64).collect(),
        None => {
            let w = opts.x_half_width;
            (0..n)
                .map(|i| if n == 1 { 0.0 } else { -w + 2.0 * w * i as f64 / (n - 1) as f64 })
                .collect()
        }
    };
    if d == 1 {
        axis.iter().map(|&x| [x, 0.0]).collect()
    } else {
        axis.iter()
            .flat_map(|&x| axis.iter().map(move |&y| [x, y]))
            .collect()
    }
}

fn xi_samples(a: &Symbol, opts: &ClassOptions) -> Vec<[f64; 2]> {
    let d = a.dim();
    let n = opts.samples_xi.max(1);
    match a.band() {
        Some(l) => {
            let (lo, hi) = (opts.shell.0 * l, opts.shell.1 * l);
            let radii: Vec<f64> = (0..n)
                .map(|i| {
                    if n == 1 {
                        l
                    } else {
                        lo * (hi / lo).powf(i as f64 / (n - 1) as f64)
                    }
                })
                .collect();
            if d == 1 {
                radii.iter().flat_map(|&r| [[r, 0.0], [-r, 0.0]]).collect()
            } else {
                let nd = opts.samples_dir.max(1);
                radii
                    .iter()
                    .flat_map(|&r| {
                        (0..nd).map(move |k| {
                            let th = 2.0 * std::f64::consts::PI * k as f64 / nd as f64;
                            [r * th.cos(), r * th.sin()]
                        })
                    })
                    .collect()
            }
        }
        None => {
            let w = opts.xi_half_width;
            let axis: Vec<f64> = (0..n)
                .map(|i| if n == 1 { 0.0 } else { -w + 2.0 * w * i as f64 / (n - 1) as f64 })
                .collect();
            if d == 1 {
                axis.iter().map(|&v| [v, 0.0]).collect()
            } else {
                axis.iter()
                    .flat_map(|&u| axis.iter().map(move |&v| [u, v]))
                    .collect()
            }
        }
    }
}

fn trapezoid(ts: &[f64], vals: &[f64]) -> f64 {
    if ts.len() == 1 {
        return vals[0];
    }
    ts.windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Measure the class constants of `a` on a stratified sample.
pub fn verify_class(a: &Symbol, tag: ClassTag, opts: &ClassOptions) -> Result<ClassReport> {
    if opts.max_order > MAX_DERIVATIVE_ORDER {
        return Err(Error::InvalidParameter(format!(
            "derivative order {} exceeds {MAX_DERIVATIVE_ORDER}",
            opts.max_order
        )));
    }
    if tag.needs_band() && a.band().is_none() {
        return Err(Error::InvalidParameter(format!(
            "class {} needs a banded symbol",
            tag.label()
        )));
    }
    if tag == ClassTag::HolderX {
        return verify_holder(a, opts);
    }
    let d = a.dim();
    let k = opts.k;
    let lambda = a.band().unwrap_or(1.0);
    let (m, delta) = (a.order(), a.delta());

    let mut pairs = Vec::new();
    for alpha in multi_indices(d, opts.max_order) {
        let na: usize = alpha.iter().sum();
        for beta in multi_indices(d, opts.max_order - na) {
            let nb: usize = beta.iter().sum();
            let keep = match tag {
                ClassTag::S00 | ClassTag::L1S00 => na + nb >= k,
                ClassTag::L1S => na >= k,
                ClassTag::S1 => na == 0,
                ClassTag::HolderX => unreachable!(),
            };
            if keep {
                pairs.push((alpha.clone(), beta));
            }
        }
    }

    let ts = t_samples(a, opts);
    let mut xs = x_samples(a, opts);
    let xis = xi_samples(a, opts);
    let cost_per_point: usize = pairs
        .iter()
        .map(|(al, be)| {
            al.iter()
                .chain(be.iter())
                .map(|&o| STENCILS[o].len())
                .product::<usize>()
        })
        .sum();
    let mut partial = false;
    let full = ts.len() * xs.len() * xis.len() * cost_per_point.max(1);
    if full > opts.max_evals && xs.len() > 1 {
        let stride = full.div_ceil(opts.max_evals);
        xs = xs.into_iter().step_by(stride).collect();
        partial = true;
    }

    let mut sups = vec![vec![0.0; pairs.len()]; ts.len()];
    for (ti, &t) in ts.iter().enumerate() {
        let points: Vec<(usize, usize)> = (0..xs.len())
            .flat_map(|i| (0..xis.len()).map(move |j| (i, j)))
            .collect();
        sups[ti] = points
            .par_iter()
            .map(|&(i, j)| {
                pairs
                    .iter()
                    .map(|(al, be)| a.partial(t, &xs[i][..d], &xis[j][..d], al, be).abs())
                    .collect::<Vec<f64>>()
            })
            .reduce(
                || vec![0.0; pairs.len()],
                |u, v| u.iter().zip(&v).map(|(p, q)| p.max(*q)).collect(),
            );
    }

    let entries = pairs
        .iter()
        .enumerate()
        .map(|(e, (al, be))| {
            let series: Vec<f64> = sups.iter().map(|s| s[e]).collect();
            let na = al.iter().sum::<usize>() as f64;
            let nb = be.iter().sum::<usize>() as f64;
            let raw = match tag {
                ClassTag::S00 | ClassTag::S1 => series.iter().cloned().fold(0.0, f64::max),
                _ => {
                    if ts.len() == 1 {
                        series[0] * a.meta.t_end
                    } else {
                        trapezoid(&ts, &series)
                    }
                }
            };
            let measured = match tag {
                ClassTag::L1S => raw / lambda.powf(m - nb + delta * (na - k as f64)),
                ClassTag::S1 => raw / lambda.powf(m - nb),
                _ => raw,
            };
            ClassEntry {
                alpha: al.clone(),
                beta: be.clone(),
                measured,
                budget: opts.budget,
                pass: measured <= opts.budget,
            }
        })
        .collect::<Vec<_>>();
    Ok(ClassReport {
        class: tag.label().into(),
        k,
        r: opts.r,
        pass: entries.iter().all(|e| e.pass),
        entries,
        partial,
        samples: ts.len() * xs.len() * xis.len(),
    })
}

/// Periodic x-grid fine enough to resolve the x-dependence of `a` with
/// Nyquist at least `min_nyquist`.
pub fn x_grid_for(a: &Symbol, min_nyquist: f64) -> Result<Grid> {
    let l = a.meta.x_period.ok_or_else(|| {
        Error::InvalidParameter(format!("symbol {} is not x-periodic", a.id()))
    })?;
    let need = (2.0 / a.meta.x_scale).max(min_nyquist);
    let n = ((need * l / std::f64::consts::PI).ceil() as usize)
        .max(64)
        .next_power_of_two();
    let n = if a.dim() == 2 { n.min(1024) } else { n };
    Grid::new(a.dim(), n, l)
}

fn verify_holder(a: &Symbol, opts: &ClassOptions) -> Result<ClassReport> {
    let d = a.dim();
    let lambda = a.band().unwrap_or(1.0);
    let m = a.order();
    let zero_alpha = vec![0; d];
    let betas: Vec<Vec<usize>> = multi_indices(d, opts.k.min(opts.max_order));
    let ts = t_samples(a, opts);
    let mut xis = xi_samples(a, opts);
    let mut partial = false;
    let mut sups = vec![vec![0.0; betas.len()]; ts.len()];
    if !a.meta.x_independent {
        let grid = x_grid_for(a, 0.0)?;
        let cost = ts.len() * xis.len() * grid.len() * 25 * betas.len();
        if cost > opts.max_evals && xis.len() > 1 {
            let stride = cost.div_ceil(opts.max_evals);
            xis = xis.into_iter().step_by(stride).collect();
            partial = true;
        }
        for (ti, &t) in ts.iter().enumerate() {
            sups[ti] = xis
                .par_iter()
                .map(|xi| {
                    betas
                        .iter()
                        .map(|be| {
                            let n = be.iter().sum();
                            let (_, h) = a.default_steps(&xi[..d], n);
                            let slice = xi_derivative_slice(a, t, &xi[..d], be, h, &grid);
                            let field = SampledField::from_real(&grid, &slice)
                                .expect("slice matches its grid");
                            holder_seminorm(&field, opts.r)
                        })
                        .collect::<Vec<f64>>()
                })
                .reduce(
                    || vec![0.0; betas.len()],
                    |u, v| u.iter().zip(&v).map(|(p, q)| p.max(*q)).collect(),
                );
        }
    }
    let entries = betas
        .iter()
        .enumerate()
        .map(|(e, be)| {
            let series: Vec<f64> = sups.iter().map(|s| s[e]).collect();
            let raw = if ts.len() == 1 {
                series[0] * a.meta.t_end
            } else {
                trapezoid(&ts, &series)
            };
            let nb = be.iter().sum::<usize>() as f64;
            let measured = raw / lambda.powf(m - nb);
            ClassEntry {
                alpha: zero_alpha.clone(),
                beta: be.clone(),
                measured,
                budget: opts.budget,
                pass: measured <= opts.budget,
            }
        })
        .collect::<Vec<_>>();
    Ok(ClassReport {
        class: ClassTag::HolderX.label().into(),
        k: opts.k,
        r: opts.r,
        pass: entries.iter().all(|e| e.pass),
        entries,
        partial,
        samples: ts.len() * xis.len(),
    })
}

/// `∂_ξ^β a(t, ·, ξ)` on the nodes of `grid`, by the same stencils as
/// [`Symbol::partial_with_steps`] applied slice-wise.
pub(crate) fn xi_derivative_slice(a: &Symbol, t: f64, xi: &[f64], beta: &[usize], h: f64, grid: &Grid) -> Vec<f64> {
    let d = a.dim();
    let mut out = vec![0.0; grid.len()];
    let st0 = STENCILS[beta[0]];
    let st1: &[(i32, f64)] = if d == 2 { STENCILS[beta[1]] } else { STENCILS[0] };
    for &(o0, c0) in st0 {
        for &(o1, c1) in st1 {
            let mut p = [xi[0] + o0 as f64 * h, 0.0];
            if d == 2 {
                p[1] = xi[1] + o1 as f64 * h;
            }
            let s = a.x_slice(t, &p[..d], grid);
            out.iter_mut().zip(s).for_each(|(o, v)| *o += c0 * c1 * v);
        }
    }
    let n: usize = beta.iter().sum();
    let scale = h.powi(n as i32);
    out.iter_mut().for_each(|v| *v /= scale);
    out
}

/// Parabolic rescaling `ã(t, x, ξ) = τ a(τt, μx, ξ/μ)` with
/// `μ = τ^{1/2} λ^{−δ}`.
pub fn rescale(a: &Symbol, tau: f64, lambda: f64) -> Result<Symbol> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} not in (0, 1]")));
    }
    check_band(lambda)?;
    let m = a.order();
    let value = tau * lambda.powf(m);
    if value < 1.0 {
        return Err(Error::RescaleRegime { value });
    }
    let mu = rescale_factor(tau, lambda, m);
    let d = a.dim();
    let mut meta = a.meta.clone();
    meta.id = format!("rescaled({}, tau={tau})", a.id());
    meta.band = Some(mu * lambda);
    meta.t_end = (a.meta.t_end / tau).min(1.0);
    meta.x_period = a.meta.x_period.map(|l| l / mu);
    meta.x_scale = a.meta.x_scale / mu;
    let inner = a.eval.clone();
    Ok(Symbol::new(meta, move |t, x, xi| {
        let mut xs = [0.0; 2];
        let mut ks = [0.0; 2];
        for i in 0..d {
            xs[i] = mu * x[i];
            ks[i] = xi[i] / mu;
        }
        tau * inner(tau * t, &xs[..d], &ks[..d])
    }))
}

/// `μ = τ^{1/2} λ^{−δ}`, `δ = (2 − m)/2`.
pub fn rescale_factor(tau: f64, lambda: f64, m: f64) -> f64 {
    tau.sqrt() * lambda.powf(-(2.0 - m) / 2.0)
}

/// Split `a = low + high` in x-frequency at `Λ = λ^σ`.
#[derive(Clone, Debug)]
pub struct XTruncation {
    pub low: Symbol,
    pub high: Symbol,
    pub cutoff: f64,
    filter: Option<Arc<XFilter>>,
}

struct XFilter {
    base: Symbol,
    grid: Grid,
    plan: FftPlan,
    cutoff: f64,
}

impl fmt::Debug for XFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("XFilter")
            .field("grid", &self.grid)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl XFilter {
    fn filtered_spectrum(&self, t: f64, xi: &[f64]) -> Vec<C64> {
        let mut v: Vec<C64> = self
            .base
            .x_slice(t, xi, &self.grid)
            .into_iter()
            .map(|r| C64::new(r, 0.0))
            .collect();
        self.plan.forward(&mut v);
        for (i, c) in v.iter_mut().enumerate() {
            let z = self.grid.wavevector_norm(i);
            *c *= crate::fields::low_pass_profile(z / self.cutoff);
        }
        v
    }

    fn low_slice(&self, t: f64, xi: &[f64]) -> Vec<f64> {
        let mut v = self.filtered_spectrum(t, xi);
        self.plan.inverse(&mut v);
        let n = self.grid.len() as f64;
        v.into_iter().map(|c| c.re / n).collect()
    }

    fn low_at(&self, t: f64, x: &[f64], xi: &[f64]) -> f64 {
        let spec = self.filtered_spectrum(t, xi);
        let x0 = self.grid.coord(0);
        let n = self.grid.len() as f64;
        let d = self.grid.dim();
        let mut acc = 0.0;
        for (i, c) in spec.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let k = self.grid.wavevector(i);
            let phase: f64 = (0..d).map(|a| k[a] * (x[a] - x0)).sum();
            acc += (c * C64::from_polar(1.0, phase)).re;
        }
        acc / n
    }
}

impl XTruncation {
    /// Periodic x-grid used for the split; `None` for x-independent symbols.
    pub fn grid(&self) -> Option<&Grid> {
        self.filter.as_ref().map(|f| &f.grid)
    }

    /// `a_{>Λ}(t, ·, ξ)` on the nodes of [`Self::grid`].
    pub fn high_slice(&self, t: f64, xi: &[f64]) -> Option<Vec<f64>> {
        self.filter.as_ref().map(|f| {
            let full = f.base.x_slice(t, xi, &f.grid);
            let low = f.low_slice(t, xi);
            full.iter().zip(low).map(|(a, b)| a - b).collect()
        })
    }

    /// `a_{≤Λ}(t, ·, ξ)` on the nodes of [`Self::grid`].
    pub fn low_slice(&self, t: f64, xi: &[f64]) -> Option<Vec<f64>> {
        self.filter.as_ref().map(|f| f.low_slice(t, xi))
    }
}

/// `a = a_{≤λ^σ} + a_{>λ^σ}` with the smooth low-pass `φ(ζ/λ^σ)` in the
/// x-frequency `ζ`; the low part has x-spectrum in `|ζ| ≤ 2λ^σ`.
pub fn truncate_x_frequency(a: &Symbol, sigma: f64) -> Result<XTruncation> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} not in (0, 1]")));
    }
    let lambda = a
        .band()
        .ok_or_else(|| Error::InvalidParameter("truncation needs a banded symbol".into()))?;
    let cutoff = lambda.powf(sigma);
    if a.meta.x_independent {
        let mut meta = a.meta.clone();
        meta.id = format!("high({}, sigma={sigma})", a.id());
        return Ok(XTruncation {
            low: a.clone().with_id(format!("low({}, sigma={sigma})", a.id())),
            high: Symbol::new(meta, |_, _, _| 0.0),
            cutoff,
            filter: None,
        });
    }
    let grid = x_grid_for(a, 4.0 * cutoff)?;
    let filter = Arc::new(XFilter {
        base: a.clone(),
        plan: FftPlan::new(&grid),
        grid,
        cutoff,
    });
    let f_low = filter.clone();
    let mut low_meta = a.meta.clone();
    low_meta.id = format!("low({}, sigma={sigma})", a.id());
    low_meta.x_scale = a.meta.x_scale.max(1.0 / (2.0 * cutoff));
    let low = Symbol::new(low_meta, move |t, x, xi| f_low.low_at(t, x, xi));
    let f_high = filter.clone();
    let mut high_meta = a.meta.clone();
    high_meta.id = format!("high({}, sigma={sigma})", a.id());
    let high = Symbol::new(high_meta, move |t, x, xi| {
        f_high.base.eval(t, x, xi) - f_high.low_at(t, x, xi)
    });
    Ok(XTruncation {
        low,
        high,
        cutoff,
        filter: Some(filter),
    })
}

/// `‖a_{>Λ}‖_{L¹_t L^∞_{x,ξ}} / λ^m` over the shell sample of `opts`.
pub fn high_remainder_norm(a: &Symbol, split: &XTruncation, opts: &ClassOptions) -> Result<f64> {
    let lambda = a
        .band()
        .ok_or_else(|| Error::InvalidParameter("remainder norm needs a banded symbol".into()))?;
    let d = a.dim();
    let ts = t_samples(a, opts);
    let xis = xi_samples(a, opts);
    let sups: Vec<f64> = ts
        .iter()
        .map(|&t| {
            xis.par_iter()
                .map(|xi| {
                    split
                        .high_slice(t, &xi[..d])
                        .map(|s| s.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                        .unwrap_or(0.0)
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let total = if ts.len() == 1 {
        sups[0] * a.meta.t_end
    } else {
        trapezoid(&ts, &sups)
    };
    Ok(total / lambda.powf(a.order()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_second_derivative_matches_analytic() {
        let lambda = 64.0;
        let a = make_fractional(1, 1.5, lambda).unwrap();
        let h = a.partial(0.0, &[0.0], &[lambda], &[0], &[2]);
        let exact = 0.75 * lambda.powf(-0.5);
        assert!((h - exact).abs() < 1e-6 * exact, "{h} vs {exact}");
    }

    #[test]
    fn fractional_lies_in_s1() {
        let a = make_fractional(1, 1.5, 64.0).unwrap();
        let opts = ClassOptions {
            budget: 20.0,
            ..ClassOptions::default()
        };
        let rep = verify_class(&a, ClassTag::S1, &opts).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.entries.len(), 5);
    }

    #[test]
    fn fractional_convexity_bound() {
        let a = make_fractional(1, 1.5, 64.0).unwrap();
        let c = convexity_constant(&a, 1, 64).unwrap();
        assert!(c >= 0.25, "{c}");
        // Minimum over the shell sits at |ξ| = 4λ: (3/4)·4^{-1/2}.
        assert!((c - 0.375).abs() < 1e-5, "{c}");
    }

    #[test]
    fn convexity_constant_is_band_independent() {
        let cs: Vec<f64> = [16.0, 32.0, 64.0, 128.0, 256.0]
            .iter()
            .map(|&l| convexity_constant(&make_fractional(1, 1.5, l).unwrap(), 1, 32).unwrap())
            .collect();
        for c in &cs {
            assert!((c / cs[0] - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn unperturbed_profile_reproduces_fractional() {
        let a = make_fractional(1, 1.5, 64.0).unwrap();
        let b = make_perturbed(1, 1.5, 64.0, 1.5, 0.0).unwrap();
        for &xi in &[10.0, 64.0, -200.0, 300.0] {
            for &x in &[0.0, 1.3] {
                assert_eq!(a.eval(0.0, &[x], &[xi]), b.eval(0.0, &[x], &[xi]));
            }
        }
    }

    #[test]
    fn perturbation_degrades_convexity_mildly() {
        let a = make_fractional(1, 1.5, 64.0).unwrap();
        let b = make_perturbed(1, 1.5, 64.0, 1.5, 0.1).unwrap();
        let c0 = convexity_constant(&a, 1, 24).unwrap();
        let c1 = convexity_constant(&b, 512, 24).unwrap();
        assert!(c1 >= 0.8 * c0, "{c1} vs {c0}");
        assert!(c1 < c0);
    }

    #[test]
    fn large_perturbation_is_rejected() {
        match make_perturbed(1, 1.5, 64.0, 1.5, 0.9) {
            Err(Error::ConvexityViolated { measured, required }) => assert!(measured < required),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            make_perturbed(1, 1.0, 64.0, 1.5, 0.1),
            Err(Error::ConvexityViolated { .. })
        ));
    }

    #[test]
    fn perturbed_holder_seminorm_is_amplitude() {
        let lambda = 64.0;
        let a = make_perturbed(1, 1.5, lambda, 1.5, 0.1).unwrap();
        let grid = x_grid_for(&a, 0.0).unwrap();
        let slice: Vec<f64> = a
            .x_slice(0.0, &[lambda], &grid)
            .iter()
            .map(|v| v / lambda.powf(1.5))
            .collect();
        let f = SampledField::from_real(&grid, &slice).unwrap();
        let s = holder_seminorm(&f, 1.5);
        assert!((s - 0.1).abs() < 0.01, "{s}");
    }

    #[test]
    fn zero_symbol_passes_every_class() {
        let z = zero(1).unwrap();
        for tag in [ClassTag::S00, ClassTag::L1S00] {
            let rep = verify_class(&z, tag, &ClassOptions::default()).unwrap();
            assert!(rep.pass);
            assert_eq!(rep.max_measured(), 0.0);
        }
    }

    #[test]
    fn perturbed_fails_c2_but_passes_its_own_regularity() {
        let a = make_perturbed(1, 1.5, 64.0, 1.5, 0.1).unwrap();
        let c2 = ClassOptions {
            r: 2.0,
            budget: 0.01,
            samples_xi: 4,
            ..ClassOptions::default()
        };
        assert!(!verify_class(&a, ClassTag::HolderX, &c2).unwrap().pass);
        let c15 = ClassOptions {
            r: 1.5,
            budget: 1.0,
            samples_xi: 4,
            ..ClassOptions::default()
        };
        let rep = verify_class(&a, ClassTag::HolderX, &c15).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn identity_rescaling() {
        let a = power(1, 2.0).unwrap();
        let b = rescale(&a, 1.0, 1.0).unwrap();
        for &(x, xi) in &[(0.3, 1.7), (-2.0, 0.2)] {
            assert_eq!(a.eval(0.5, &[x], &[xi]), b.eval(0.5, &[x], &[xi]));
        }
    }

    #[test]
    fn rescaling_chain_rule() {
        let lambda = 64.0;
        let tau = 0.25;
        let a = make_perturbed(1, 1.5, lambda, 1.5, 0.1).unwrap();
        let b = rescale(&a, tau, lambda).unwrap();
        let mu = rescale_factor(tau, lambda, 1.5);
        let (x, xi) = (0.37, 1.3 * lambda * mu);
        let lhs = b.partial(0.4, &[x], &[xi], &[0], &[2]);
        let rhs = tau / (mu * mu) * a.partial(tau * 0.4, &[mu * x], &[xi / mu], &[0], &[2]);
        assert!((lhs - rhs).abs() < 1e-6 * rhs.abs(), "{lhs} vs {rhs}");
    }

    #[test]
    fn rescaling_rejects_sobolev_regime() {
        let a = make_fractional(1, 1.5, 4.0).unwrap();
        assert!(matches!(rescale(&a, 0.01, 4.0), Err(Error::RescaleRegime { .. })));
        assert!(rescale(&a, 1.5, 4.0).is_err());
    }

    #[test]
    fn rescaled_fractional_lies_in_s00() {
        let a = make_fractional(1, 1.5, 64.0).unwrap();
        let b = rescale(&a, 0.25, 64.0).unwrap();
        let opts = ClassOptions {
            budget: 2.0,
            ..ClassOptions::default()
        };
        let rep = verify_class(&b, ClassTag::S00, &opts).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn x_independent_truncation_has_no_high_part() {
        let a = make_fractional(1, 1.5, 64.0).unwrap();
        let s = truncate_x_frequency(&a, 0.5).unwrap();
        assert_eq!(s.high.eval(0.0, &[0.2], &[70.0]), 0.0);
        assert_eq!(s.low.eval(0.0, &[0.2], &[70.0]), a.eval(0.0, &[0.2], &[70.0]));
    }

    #[test]
    fn truncation_is_an_exact_split() {
        let a = make_perturbed(1, 1.5, 64.0, 1.5, 0.1).unwrap();
        let s = truncate_x_frequency(&a, 0.5).unwrap();
        for &(x, xi) in &[(0.1, 64.0), (2.9, -100.0), (5.5, 30.0)] {
            let sum = s.low.eval(0.0, &[x], &[xi]) + s.high.eval(0.0, &[x], &[xi]);
            let full = a.eval(0.0, &[x], &[xi]);
            assert!((sum - full).abs() < 1e-10 * full.abs().max(1.0));
        }
    }

    #[test]
    fn full_band_truncation_keeps_everything() {
        let lambda = 64.0;
        // Profile frequencies 1, 2, …, 32 all sit below λ^1.
        let p = HolderProfile::new(1.5, 2.0 * std::f64::consts::PI, 1.0, 6).unwrap();
        let a = make_perturbed_with(1, 1.5, lambda, p, 0.1).unwrap();
        let s = truncate_x_frequency(&a, 1.0).unwrap();
        let hi = s.high_slice(0.0, &[lambda]).unwrap();
        let sup = hi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(sup < 1e-9 * lambda.powf(1.5), "{sup}");
    }

    #[test]
    fn high_remainder_shrinks_with_cutoff() {
        let a = make_perturbed(1, 1.5, 256.0, 1.0, 0.1).unwrap();
        let opts = ClassOptions {
            samples_xi: 2,
            ..ClassOptions::default()
        };
        let r1 = high_remainder_norm(&a, &truncate_x_frequency(&a, 0.5).unwrap(), &opts).unwrap();
        let r2 = high_remainder_norm(&a, &truncate_x_frequency(&a, 0.75).unwrap(), &opts).unwrap();
        assert!(r2 < r1);
    }

    #[test]
    fn mixed_partial_of_dilation() {
        let a = dilation();
        let v = a.partial(0.0, &[0.7], &[-1.2], &[1], &[1]);
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn class_tag_parsing() {
        assert_eq!("S1".parse::<ClassTag>().unwrap(), ClassTag::S1);
        assert!("nope".parse::<ClassTag>().is_err());
    }
}
