//! Periodic grids, unitary Fourier transforms, Littlewood-Paley machinery and
//! mixed space-time norms.
//!
//! Points of a [`Grid`] are centred: along each axis `x_j = (j - N/2) * dx`, so
//! the origin is a grid node. The Fourier transform uses the same convention,
//! `f̂(ξ_k) = N^{-d/2} Σ_j f(x_j) e^{-i ξ_k · x_j}`, which makes it unitary for
//! the discrete `L²(dx)` pairing and sends a spike at the origin to a constant.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Uniform periodic grid in one or two dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    period: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {n} must be a power of two >= 8"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        Ok(Self { dim, n, period })
    }

    pub fn line(n: usize, period: f64) -> Result<Self> {
        Self::new(1, n, period)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Total number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Resolution of the dual lattice, `2π/L`.
    pub fn freq_spacing(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Largest per-axis frequency, `πN/L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.period
    }

    /// Coordinate of node `j` along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    /// Signed frequency of FFT bin `k` along one axis.
    pub fn freq(&self, k: usize) -> f64 {
        let k = k as i64;
        let n = self.n as i64;
        let signed = if k < n / 2 { k } else { k - n };
        signed as f64 * self.freq_spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.freq(k)).collect()
    }

    /// Point for a flat (row-major) index; unused components are zero.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(flat), 0.0],
            _ => [self.coord(flat / self.n), self.coord(flat % self.n)],
        }
    }

    /// Wavevector for a flat spectral index; unused components are zero.
    pub fn wavevector(&self, flat: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.freq(flat), 0.0],
            _ => [self.freq(flat / self.n), self.freq(flat % self.n)],
        }
    }

    pub fn wavevector_norm(&self, flat: usize) -> f64 {
        let k = self.wavevector(flat);
        (k[0] * k[0] + k[1] * k[1]).sqrt()
    }

    /// Minimal periodic image of a coordinate difference.
    pub fn wrap(&self, dx: f64) -> f64 {
        let l = self.period;
        dx - l * (dx / l).round()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Cached forward/inverse plans for one grid shape.
#[derive(Clone)]
pub struct FftPlan {
    n: usize,
    dim: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftPlan {
    pub fn new(grid: &Grid) -> Self {
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(grid.n), p.plan_fft_inverse(grid.n))
        });
        Self {
            n: grid.n,
            dim: grid.dim,
            fwd,
            inv,
        }
    }

    /// Unnormalised forward DFT in place.
    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, &self.fwd);
    }

    /// Unnormalised inverse DFT in place.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, &self.inv);
    }

    fn run(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        plan.process(data);
        if self.dim == 2 {
            transpose_square(data, self.n);
            plan.process(data);
            transpose_square(data, self.n);
        }
    }
}

fn transpose_square(data: &mut [C64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Sign `(-1)^k` summed over axes, which converts between node-0 and centred
/// coordinates.
fn centring_sign(grid: &Grid, flat: usize) -> f64 {
    let parity = match grid.dim {
        1 => flat,
        _ => flat / grid.n + flat % grid.n,
    };
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Complex field sampled on a grid, optionally tagged with a dyadic band.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    pub grid: Grid,
    pub values: Vec<C64>,
    pub band: Option<f64>,
}

impl SampledField {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            band: None,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![C64::new(0.0, 0.0); grid.len()],
            grid: grid.clone(),
            band: None,
        }
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid: grid.clone(),
            values,
            band: None,
        }
    }

    pub fn from_real(grid: &Grid, values: &[f64]) -> Result<Self> {
        Self::new(grid.clone(), values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn with_band(mut self, band: Option<f64>) -> Self {
        self.band = band;
        self
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete `L^q` norm `(dx^d Σ|u|^q)^{1/q}`; `q = ∞` gives the max.
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.sup_norm();
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(q)).sum();
        (self.grid.cell_volume() * s).powf(1.0 / q)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
            band: None,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Fraction of spectral mass in `{λ/4 ≤ |ξ| ≤ 4λ}`.
    pub fn band_mass_fraction(&self, lambda: f64) -> f64 {
        let spec = fourier_forward(self);
        let mut inside = 0.0;
        let mut total = 0.0;
        for (i, v) in spec.values.iter().enumerate() {
            let k = self.grid.wavevector_norm(i);
            let m = v.norm_sqr();
            total += m;
            if k >= lambda / 4.0 && k <= 4.0 * lambda {
                inside += m;
            }
        }
        if total == 0.0 {
            1.0
        } else {
            inside / total
        }
    }
}

pub(crate) fn check_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// Fourier coefficients on the dual lattice, in FFT bin order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl Spectrum {
    /// Same scaling as [`SampledField::l2_norm`], so Plancherel reads
    /// `spectrum.l2_norm() == field.l2_norm()`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Multiply every coefficient by `m(ξ)`.
    pub fn apply(&mut self, m: impl Fn([f64; 2]) -> C64) {
        for (i, v) in self.values.iter_mut().enumerate() {
            *v *= m(self.grid.wavevector(i));
        }
    }
}

pub fn fourier_forward(f: &SampledField) -> Spectrum {
    let plan = FftPlan::new(&f.grid);
    let mut values = f.values.clone();
    plan.forward(&mut values);
    let norm = (f.grid.len() as f64).sqrt().recip();
    for (i, v) in values.iter_mut().enumerate() {
        *v *= centring_sign(&f.grid, i) * norm;
    }
    Spectrum {
        grid: f.grid.clone(),
        values,
    }
}

pub fn fourier_inverse(s: &Spectrum) -> SampledField {
    let plan = FftPlan::new(&s.grid);
    let norm = (s.grid.len() as f64).sqrt().recip();
    let mut values: Vec<C64> = s
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v * centring_sign(&s.grid, i) * norm)
        .collect();
    plan.inverse(&mut values);
    SampledField {
        grid: s.grid.clone(),
        values,
        band: None,
    }
}

/// Apply a Fourier multiplier `m(ξ)` to a field.
pub fn apply_multiplier(f: &SampledField, m: impl Fn([f64; 2]) -> C64) -> SampledField {
    let mut spec = fourier_forward(f);
    spec.apply(m);
    fourier_inverse(&spec)
}

/// `C³` septic smoothstep: 0 at `s ≤ 0`, 1 at `s ≥ 1`.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s.powi(4) * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s.powi(3))
}

/// Littlewood-Paley bump in `r = |ξ|/λ`: supported in `[1/2, 2]`, identically 1
/// on `[3/4, 3/2]`, with septic smoothstep transitions.
pub fn lp_bump(r: f64) -> f64 {
    if r <= 0.5 || r >= 2.0 {
        0.0
    } else if r < 0.75 {
        smoothstep((r - 0.5) / 0.25)
    } else if r <= 1.5 {
        1.0
    } else {
        smoothstep((2.0 - r) / 0.5)
    }
}

/// Human-readable description of the bump profile, recorded in manifests.
pub const LP_BUMP_PROFILE: &str = "septic smoothstep s^4(35-84s+70s^2-20s^3); \
    support [lambda/2, 2 lambda], equal to 1 on [3 lambda/4, 3 lambda/2]";

/// Smooth low-pass profile: 1 for `s ≤ 1`, 0 for `s ≥ 2`.
pub fn low_pass_profile(s: f64) -> f64 {
    1.0 - smoothstep(s - 1.0)
}

/// Dyadic partition piece `ψ_j(ξ) = φ(|ξ|/2^j) − φ(|ξ|/2^{j−1})`; equals 1 at
/// `|ξ| = 2^j` and vanishes at `2^{j±1}`.
pub fn dyadic_piece_profile(k: f64, j: i32) -> f64 {
    let s = 2f64.powi(j);
    low_pass_profile(k / s) - low_pass_profile(2.0 * k / s)
}

/// `P_λ f`: projection onto the dyadic shell `|ξ| ≈ λ`.
pub fn lp_project(f: &SampledField, lambda: f64) -> Result<SampledField> {
    let nyquist = f.grid.nyquist();
    if !(lambda > 0.0) || 2.0 * lambda > nyquist {
        return Err(Error::BandOutOfRange {
            band: lambda,
            nyquist,
        });
    }
    let out = apply_multiplier(f, |k| {
        let r = (k[0] * k[0] + k[1] * k[1]).sqrt() / lambda;
        C64::new(lp_bump(r), 0.0)
    });
    Ok(out.with_band(Some(lambda)))
}

/// Smooth low-pass: keeps `|ξ| ≤ cutoff`, removes `|ξ| ≥ 2 cutoff`.
pub fn low_pass(f: &SampledField, cutoff: f64) -> SampledField {
    apply_multiplier(f, |k| {
        let r = (k[0] * k[0] + k[1] * k[1]).sqrt() / cutoff;
        C64::new(low_pass_profile(r), 0.0)
    })
}

/// Dyadic indices `j` whose piece meets a nonzero lattice frequency.
pub fn dyadic_range(grid: &Grid) -> std::ops::RangeInclusive<i32> {
    let lo = grid.freq_spacing().log2().floor() as i32;
    let kmax = grid.nyquist() * (grid.dim() as f64).sqrt();
    let hi = kmax.log2().ceil() as i32 + 1;
    lo..=hi
}

/// `(j, ‖Δ_j f‖_∞)` for every dyadic piece meeting the lattice.
pub fn dyadic_profile(f: &SampledField) -> Vec<(i32, f64)> {
    let spec = fourier_forward(f);
    dyadic_range(&f.grid)
        .map(|j| {
            let mut piece = spec.clone();
            piece.apply(|k| C64::new(dyadic_piece_profile((k[0] * k[0] + k[1] * k[1]).sqrt(), j), 0.0));
            (j, fourier_inverse(&piece).sup_norm())
        })
        .collect()
}

/// Homogeneous Hölder-Zygmund seminorm via the dyadic characterization
/// `sup_j 2^{jr} ‖Δ_j f‖_∞`.
pub fn holder_seminorm(f: &SampledField, r: f64) -> f64 {
    dyadic_profile(f)
        .into_iter()
        .map(|(j, s)| 2f64.powf(j as f64 * r) * s)
        .fold(0.0, f64::max)
}

/// Mixed space-time norm parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNorm {
    pub p: f64,
    pub q: f64,
    pub dt: f64,
}

impl MixedNorm {
    pub fn new(p: f64, q: f64, dt: f64) -> Result<Self> {
        if !(p >= 1.0) || !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("exponents p={p}, q={q} must be >= 1")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
        }
        Ok(Self { p, q, dt })
    }

    /// `(Δt Σ_n ‖u(t_n)‖_q^p)^{1/p}` over a uniformly sampled series.
    pub fn evaluate(&self, series: &[SampledField]) -> Result<f64> {
        let slices: Vec<f64> = series.iter().map(|u| u.lq_norm(self.q)).collect();
        self.from_slice_norms(&slices)
    }

    /// Time norm of precomputed spatial norms.
    pub fn from_slice_norms(&self, norms: &[f64]) -> Result<f64> {
        if norms.is_empty() {
            return Err(Error::EmptySeries("mixed norm needs at least one time sample"));
        }
        if self.p.is_infinite() {
            return Ok(norms.iter().copied().fold(0.0, f64::max));
        }
        let s: f64 = norms.iter().map(|n| n.powf(self.p)).sum();
        Ok((self.dt * s).powf(1.0 / self.p))
    }
}

pub fn mixed_norm(series: &[SampledField], dt: f64, p: f64, q: f64) -> Result<f64> {
    MixedNorm::new(p, q, dt)?.evaluate(series)
}

/// White noise projected to the shell `|ξ| ≈ λ`, normalised to unit `L²`.
pub fn banded_noise<R: Rng + ?Sized>(grid: &Grid, lambda: f64, rng: &mut R) -> Result<SampledField> {
    let noise = SampledField {
        grid: grid.clone(),
        values: (0..grid.len())
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect(),
        band: None,
    };
    let f = lp_project(&noise, lambda)?;
    let n = f.l2_norm();
    Ok(f.scale(C64::new(n.recip(), 0.0)))
}

/// Serialise a field: `u32 d, u32 N, f64 L, f64 band (NaN if unset)`, then
/// row-major `(re, im)` doubles, all little-endian.
pub fn write_field<W: Write>(w: &mut W, f: &SampledField) -> Result<()> {
    w.write_all(&(f.grid.dim as u32).to_le_bytes())?;
    w.write_all(&(f.grid.n as u32).to_le_bytes())?;
    w.write_all(&f.grid.period.to_le_bytes())?;
    w.write_all(&f.band.unwrap_or(f64::NAN).to_le_bytes())?;
    for v in &f.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(r: &mut R) -> Result<SampledField> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let period = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let band = f64::from_le_bytes(b8);
    let grid = Grid::new(dim, n, period).map_err(|e| Error::Format(e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        values.push(C64::new(re, f64::from_le_bytes(b8)));
    }
    Ok(SampledField {
        grid,
        values,
        band: (!band.is_nan()).then_some(band),
    })
}
