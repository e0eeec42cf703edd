//! Dispersive decay and Strichartz scans with power-law fits, exact
//! admissibility checks and the exponent bookkeeping of the water-wave
//! application.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{apply_multiplier, lp_bump, Grid, MixedNorm, SampledField, C64};
use crate::propagate::{evolve_observed, EvolveOptions, Forcing};
use crate::symbols::Symbol;

/// Lebesgue exponent in `[1, ∞]`, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exponent {
    Finite(Rational64),
    Infinite,
}

impl Exponent {
    pub fn int(n: i64) -> Self {
        Exponent::Finite(Rational64::from_integer(n))
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(&self) -> Rational64 {
        match self {
            Exponent::Finite(p) => p.recip(),
            Exponent::Infinite => Rational64::from_integer(0),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p.numer() as f64 / *p.denom() as f64,
            Exponent::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinite);
        }
        let bad = || Error::InvalidParameter(format!("cannot parse exponent {s:?}"));
        let r = match t.split_once('/') {
            Some((n, d)) => {
                let d: i64 = d.trim().parse().map_err(|_| bad())?;
                if d == 0 {
                    return Err(bad());
                }
                Rational64::new(n.trim().parse().map_err(|_| bad())?, d)
            }
            None => Rational64::from_integer(t.parse().map_err(|_| bad())?),
        };
        if r < Rational64::from_integer(1) {
            return Err(Error::InvalidParameter(format!("exponent {s} below 1")));
        }
        Ok(Exponent::Finite(r))
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `2/p + d/q = d/2` with `p, q ≥ 2` and `(p, q) ≠ (2, ∞)`, in exact
/// arithmetic.
pub fn admissible(p: Exponent, q: Exponent, d: u32) -> bool {
    let two = Rational64::from_integer(2);
    let dd = Rational64::from_integer(d as i64);
    let at_least_two = |e: &Exponent| match e {
        Exponent::Finite(v) => *v >= two,
        Exponent::Infinite => true,
    };
    if !at_least_two(&p) || !at_least_two(&q) {
        return false;
    }
    if p == Exponent::int(2) && q == Exponent::Infinite {
        return false;
    }
    two * p.reciprocal() + dd * q.reciprocal() == dd / two
}

/// Ordinary least squares `y ≈ slope·x + intercept` with RMS residual.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::TooFewPoints {
            got: xs.len().min(ys.len()),
            need: 2,
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("degenerate abscissae in fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(LinearFit {
        slope,
        intercept,
        residual,
    })
}

/// Log-log fit `y ≈ C x^slope`.
pub fn power_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("power fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Domain sizing for scans on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanDomain {
    /// Smallest period; rounded up to a multiple of `2π`.
    pub min_period: f64,
    /// Period at least this multiple of the largest group speed times `T`.
    pub speed_factor: f64,
    /// Fixed period overriding the two rules above.
    pub fixed_period: Option<f64>,
    /// Nyquist frequency at least this multiple of `λ`.
    pub nyquist_factor: f64,
}

impl Default for ScanDomain {
    fn default() -> Self {
        Self {
            min_period: 64.0,
            speed_factor: 2.0,
            fixed_period: None,
            nyquist_factor: 4.0,
        }
    }
}

/// Largest `|∇_ξ a|` over `λ/2 ≤ |ξ| ≤ 2λ` at `t = 0`, `x = 0`.
pub fn max_group_speed(a: &Symbol, lambda: f64) -> f64 {
    let d = a.dim();
    let origin = [0.0; 2];
    (0..=64)
        .map(|i| {
            let r = lambda * 0.5 * 4f64.powf(i as f64 / 64.0);
            let xi = [r, 0.0];
            let mut s = 0.0;
            for k in 0..d {
                let mut beta = [0usize; 2];
                beta[k] = 1;
                s += a.partial(0.0, &origin[..d], &xi[..d], &[0, 0][..d], &beta[..d]).powi(2);
            }
            s.sqrt()
        })
        .fold(0.0, f64::max)
}

impl ScanDomain {
    pub fn grid(&self, a: &Symbol, lambda: f64, t_end: f64) -> Result<Grid> {
        let two_pi = 2.0 * std::f64::consts::PI;
        let l = match self.fixed_period {
            Some(l) => l,
            None => {
                let need = self
                    .min_period
                    .max(self.speed_factor * max_group_speed(a, lambda) * t_end);
                two_pi * (need / two_pi).ceil()
            }
        };
        let n = (self.nyquist_factor * lambda * l / std::f64::consts::PI).ceil() as usize;
        Grid::new(a.dim(), n.max(8).next_power_of_two(), l)
    }
}

/// `P_λ δ₀`: the Littlewood-Paley bump as a field, band `λ`.
pub fn band_bump(grid: &Grid, lambda: f64) -> SampledField {
    let mut spike = SampledField::zeros(grid);
    // The centred grid has its origin at the middle node.
    let centre = if grid.dim() == 1 {
        grid.n() / 2
    } else {
        (grid.n() / 2) * grid.n() + grid.n() / 2
    };
    spike.values[centre] = C64::new(1.0 / grid.cell_volume(), 0.0);
    apply_multiplier(&spike, |k| {
        C64::new(lp_bump((k[0] * k[0] + k[1] * k[1]).sqrt() / lambda), 0.0)
    })
    .with_band(Some(lambda))
}

fn l1_norm(f: &SampledField) -> f64 {
    f.values.iter().map(|v| v.norm()).sum::<f64>() * f.grid.cell_volume()
}

/// Measured decay `R(t) = ‖u(t)‖_∞ / ‖u₀‖₁` with its power-law fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub symbol: String,
    pub lambda: f64,
    pub m: f64,
    pub delta: f64,
    pub d: usize,
    pub t_min: f64,
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// Geometric mean of `R(t) t^{d/2}` over the fit window.
    pub prefactor: f64,
    pub grid_n: usize,
    pub period: f64,
    pub norm_drift: f64,
}

impl DecayFit {
    /// CSV rows `t, ratio, bound` with `bound = prefactor · t^{−d/2}`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "ratio", "bound"])?;
        for (t, r) in self.times.iter().zip(&self.ratios) {
            out.write_record(&[
                format!("{t:.12e}"),
                format!("{r:.12e}"),
                format!("{:.12e}", self.prefactor * t.powf(-(self.d as f64) / 2.0)),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersiveOptions {
    pub t_end: f64,
    pub domain: ScanDomain,
    /// Largest time step; defaults to `(10 λ^m)^{-1}`.
    pub max_dt: Option<f64>,
    /// Keep at most this many fit samples, thinned uniformly.
    pub max_samples: usize,
}

impl Default for DispersiveOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            domain: ScanDomain::default(),
            max_dt: None,
            max_samples: 4000,
        }
    }
}

/// Evolve the `L¹`-normalized band-`λ` bump under `a` and fit
/// `log R = slope · log t + c` over the uniformly spaced steps with
/// `λ^{−m} ≤ t ≤ T`.
pub fn dispersive_scan(a: &Symbol, lambda: f64, opts: &DispersiveOptions) -> Result<DecayFit> {
    let m = a.order();
    let grid = opts.domain.grid(a, lambda, opts.t_end)?;
    let bump = band_bump(&grid, lambda);
    let u0 = bump.scale(C64::new(1.0 / l1_norm(&bump), 0.0));
    let t_min = lambda.powf(-m);
    let mut times = Vec::new();
    let mut ratios = Vec::new();
    let evolve_opts = EvolveOptions {
        t_end: opts.t_end,
        max_dt: opts.max_dt,
        ..EvolveOptions::default()
    };
    let summary = evolve_observed(a, &u0, None, &evolve_opts, &mut |_, t, u| {
        if t >= t_min * (1.0 - 1e-12) && t > 0.0 {
            times.push(t);
            ratios.push(u.sup_norm());
        }
    })?;
    if !summary.valid {
        return Err(Error::NormDrift {
            drift: summary.norm_drift,
            limit: evolve_opts.drift_limit,
        });
    }
    if times.len() > opts.max_samples && opts.max_samples > 1 {
        let stride = times.len().div_ceil(opts.max_samples);
        times = times.into_iter().step_by(stride).collect();
        ratios = ratios.into_iter().step_by(stride).collect();
    }
    let fit = power_fit(&times, &ratios)?;
    let d = a.dim();
    let half_d = d as f64 / 2.0;
    let prefactor = (times
        .iter()
        .zip(&ratios)
        .map(|(t, r)| (r * t.powf(half_d)).ln())
        .sum::<f64>()
        / times.len() as f64)
        .exp();
    Ok(DecayFit {
        symbol: a.id().to_string(),
        lambda,
        m,
        delta: a.delta(),
        d,
        t_min,
        times,
        ratios,
        slope: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        prefactor,
        grid_n: grid.n(),
        period: grid.period(),
        norm_drift: summary.norm_drift,
    })
}

/// λ-exponent of the decay prefactors across a scan.
pub fn prefactor_exponent(fits: &[DecayFit]) -> Result<LinearFit> {
    let ls: Vec<f64> = fits.iter().map(|f| f.lambda).collect();
    let ps: Vec<f64> = fits.iter().map(|f| f.prefactor).collect();
    power_fit(&ls, &ps)
}

/// One λ of a Strichartz scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzPoint {
    pub lambda: f64,
    /// `‖u‖_{L^p L^q}`.
    pub lhs: f64,
    /// `‖u‖_{L^∞ L²} + ‖f‖_{L¹ L²}`, or its μ-weighted form.
    pub denominator: f64,
    pub ratio: f64,
    pub mu: Option<f64>,
    pub steps: usize,
    pub grid_n: usize,
    pub period: f64,
    pub norm_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzScan {
    pub p: Exponent,
    pub q: Exponent,
    pub d: usize,
    pub m: f64,
    pub points: Vec<StrichartzPoint>,
    /// Fitted growth exponent of the ratio in `λ`.
    pub exponent: f64,
    pub intercept: f64,
    pub residual: f64,
    /// `2δ/p` with `δ = (2 − m)/2`.
    pub reference_exponent: f64,
}

impl StrichartzScan {
    /// One-sided check `exponent ≤ reference + tol`.
    pub fn within(&self, tol: f64) -> bool {
        self.exponent <= self.reference_exponent + tol
    }

    /// CSV rows `lambda, measured, bound`, the bound being the reference
    /// power law through the first point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lambda", "measured", "bound"])?;
        let first = &self.points[0];
        for pt in &self.points {
            let bound = first.ratio * (pt.lambda / first.lambda).powf(self.reference_exponent);
            out.write_record(&[
                format!("{}", pt.lambda),
                format!("{:.12e}", pt.ratio),
                format!("{bound:.12e}"),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary_json(&self, tol: f64) -> serde_json::Value {
        serde_json::json!({
            "p": self.p.to_string(),
            "q": self.q.to_string(),
            "d": self.d,
            "m": self.m,
            "exponent": self.exponent,
            "residual": self.residual,
            "reference_exponent": self.reference_exponent,
            "tolerance": tol,
            "pass": self.within(tol),
        })
    }
}

/// Forcing family `f(grid, λ, t)` for Strichartz scans.
pub type ForcingFamily<'a> = &'a (dyn Fn(&Grid, f64, f64) -> SampledField + Sync);

pub struct StrichartzOptions<'a> {
    pub t_end: f64,
    pub domain: ScanDomain,
    pub max_dt: Option<f64>,
    pub forcing: Option<ForcingFamily<'a>>,
    /// Partition parameter `μ(λ)` for the weighted ratio
    /// `‖u‖ / (μ^{1/p}(‖u‖_{L^∞L²} + μ^{−1}‖f‖_{L¹L²}))`.
    pub mu: Option<&'a (dyn Fn(f64) -> f64 + Sync)>,
}

impl Default for StrichartzOptions<'_> {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            domain: ScanDomain::default(),
            max_dt: None,
            forcing: None,
            mu: None,
        }
    }
}

/// Minimum number of λ values in a Strichartz fit.
pub const MIN_SCAN_POINTS: usize = 4;

/// Measure `‖u‖_{L^pL^q}` against the data norms for the band-`λ` bump
/// evolved under `family(λ)`, and fit the growth exponent in `λ`. Time
/// sums use the left endpoints `t_n = nΔt`, `n < T/Δt`.
pub fn strichartz_scan(
    family: &dyn Fn(f64) -> Result<Symbol>,
    lambdas: &[f64],
    p: Exponent,
    q: Exponent,
    opts: &StrichartzOptions<'_>,
) -> Result<StrichartzScan> {
    let first = family(*lambdas.first().ok_or(Error::EmptySeries("lambda list"))?)?;
    let d = first.dim();
    if !admissible(p, q, d as u32) {
        return Err(Error::InvalidParameter(format!(
            "(p, q) = ({p}, {q}) is not admissible in d = {d}"
        )));
    }
    let pf = p.to_f64();
    let qf = q.to_f64();
    let mut points = Vec::new();
    for &lambda in lambdas {
        let a = family(lambda)?;
        let grid = opts.domain.grid(&a, lambda, opts.t_end)?;
        let bump = band_bump(&grid, lambda);
        let u0 = bump.scale(C64::new(1.0 / bump.l2_norm(), 0.0));
        let evolve_opts = EvolveOptions {
            t_end: opts.t_end,
            max_dt: opts.max_dt,
            ..EvolveOptions::default()
        };
        let mut slices = Vec::new();
        let mut l2_sup: f64 = 0.0;
        let grid_ref = &grid;
        let forcing_at = opts.forcing.map(|f| move |t: f64| f(grid_ref, lambda, t));
        let forcing_ref: Option<Forcing<'_>> =
            forcing_at.as_ref().map(|f| f as &(dyn Fn(f64) -> SampledField + Sync));
        let summary = evolve_observed(&a, &u0, forcing_ref, &evolve_opts, &mut |n, _, u| {
            l2_sup = l2_sup.max(u.l2_norm());
            slices.push((n, if qf.is_infinite() { u.sup_norm() } else { u.lq_norm(qf) }));
        })?;
        if !summary.valid {
            continue;
        }
        let norms: Vec<f64> = slices
            .iter()
            .filter(|(n, _)| *n < summary.steps)
            .map(|(_, v)| *v)
            .collect();
        let lhs = MixedNorm::new(pf, qf, summary.dt)?.from_slice_norms(&norms)?;
        let f_l1l2 = match &forcing_at {
            Some(f) => (0..summary.steps)
                .map(|n| f((n as f64 + 0.5) * summary.dt).l2_norm() * summary.dt)
                .sum(),
            None => 0.0,
        };
        let mu = opts.mu.map(|m| m(lambda));
        let denominator = match mu {
            Some(mu) => mu.powf(1.0 / pf) * (l2_sup + f_l1l2 / mu),
            None => l2_sup + f_l1l2,
        };
        points.push(StrichartzPoint {
            lambda,
            lhs,
            denominator,
            ratio: lhs / denominator,
            mu,
            steps: summary.steps,
            grid_n: grid.n(),
            period: grid.period(),
            norm_drift: summary.norm_drift,
        });
    }
    if points.len() < MIN_SCAN_POINTS {
        return Err(Error::TooFewPoints {
            got: points.len(),
            need: MIN_SCAN_POINTS,
        });
    }
    let ls: Vec<f64> = points.iter().map(|p| p.lambda).collect();
    let rs: Vec<f64> = points.iter().map(|p| p.ratio).collect();
    let fit = power_fit(&ls, &rs)?;
    let m = first.order();
    Ok(StrichartzScan {
        p,
        q,
        d,
        m,
        points,
        exponent: fit.slope,
        intercept: fit.intercept,
        residual: fit.residual,
        reference_exponent: 2.0 * first.delta() / pf,
    })
}

/// Exponents of the well-posedness threshold as exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub d: u32,
    #[serde(with = "rational_string")]
    pub r: Rational64,
    #[serde(with = "rational_string")]
    pub epsilon: Rational64,
    /// Strichartz gain in d = 1: `1/2 − 2/(2r+3)`.
    #[serde(with = "rational_string")]
    pub gain_d1: Rational64,
    /// Strichartz gain in d ≥ 2: `(2r−1)/(2r+3) − ε`.
    #[serde(with = "rational_string")]
    pub gain_dge2: Rational64,
    /// Gain of the branch selected by `d`.
    #[serde(with = "rational_string")]
    pub gain: Rational64,
    /// Truncation exponent `σ(r − 1/2) = 2/(2 + (r − 1/2))`.
    #[serde(with = "rational_string")]
    pub sigma: Rational64,
    /// Exponent of `λ` in the interval count `μ = λ^{1/2 + (5−2r)/(3+2r)}`.
    #[serde(with = "rational_string")]
    pub mu_exponent: Rational64,
    /// Constant-coefficient gains: `3/8` for d = 1, `3/4` for d ≥ 2.
    #[serde(with = "rational_string")]
    pub reference_d1: Rational64,
    #[serde(with = "rational_string")]
    pub reference_dge2: Rational64,
    #[serde(with = "rational_string")]
    pub reference: Rational64,
    /// Set when evaluated at the endpoint `r = 2` as a limit.
    pub limiting: bool,
}

mod rational_string {
    use num_rational::Rational64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational64, D::Error> {
        let s = String::deserialize(d)?;
        let parse = |t: &str| t.trim().parse::<i64>().map_err(serde::de::Error::custom);
        match s.split_once('/') {
            Some((n, m)) => Ok(Rational64::new(parse(n)?, parse(m)?)),
            None => Ok(Rational64::from_integer(parse(&s)?)),
        }
    }
}

fn rat(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

impl ExponentTable {
    fn build(d: u32, r: Rational64, epsilon: Rational64, limiting: bool) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if epsilon < rat(0, 1) {
            return Err(Error::InvalidParameter("epsilon must be nonnegative".into()));
        }
        let two = rat(2, 1);
        let three = rat(3, 1);
        let gain_d1 = rat(1, 2) - two / (two * r + three);
        let gain_dge2 = (two * r - rat(1, 1)) / (two * r + three) - epsilon;
        let sigma = two / (two + (r - rat(1, 2)));
        let mu_exponent = rat(1, 2) + (rat(5, 1) - two * r) / (three + two * r);
        let (reference_d1, reference_dge2) = (rat(3, 8), rat(3, 4));
        let one_d = d == 1;
        Ok(Self {
            d,
            r,
            epsilon,
            gain_d1,
            gain_dge2,
            gain: if one_d { gain_d1 } else { gain_dge2 },
            sigma,
            mu_exponent,
            reference_d1,
            reference_dge2,
            reference: if one_d { reference_d1 } else { reference_dge2 },
            limiting,
        })
    }

    /// Table for `r > 2`.
    pub fn new(d: u32, r: Rational64, epsilon: Rational64) -> Result<Self> {
        if r <= rat(2, 1) {
            return Err(Error::InvalidParameter(format!("r = {r} must exceed 2")));
        }
        Self::build(d, r, epsilon, false)
    }

    /// Limit `r → 2⁺`; every entry is a rational function of `r` continuous
    /// at 2, so the limit is the value there.
    pub fn limit_at(d: u32, r: Rational64, epsilon: Rational64) -> Result<Self> {
        if r < rat(2, 1) {
            return Err(Error::InvalidParameter(format!("r = {r} below 2")));
        }
        Self::build(d, r, epsilon, r == rat(2, 1))
    }
}

/// `exponent_bookkeeper(d, r)` with `ε = 0`, accepting `r = 2` as a limit.
pub fn exponent_bookkeeper(d: u32, r: Rational64) -> Result<ExponentTable> {
    ExponentTable::limit_at(d, r, rat(0, 1))
}
