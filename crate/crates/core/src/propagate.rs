//! Discrete Weyl quantization and a reference solver for the evolution
//! `i∂ₜu = aʷ(t, x, D)u + f`, plus coherent-state tracking in phase space.
//!
//! The time direction is the one in which wave packets follow the Hamilton
//! flow `ẋ = a_ξ, ξ̇ = −a_x`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbi::{coherent_state, fbi_forward};
use crate::fields::{check_same_grid, write_field, FftPlan, Grid, SampledField, C64};
use crate::hamflow::{flow_map, FlowOptions};
use crate::symbols::Symbol;

/// Largest grid for dense operators.
pub const MAX_DENSE_N: usize = 1024;

/// Default ceiling on the norm drift of a homogeneous evolution.
pub const DRIFT_LIMIT: f64 = 1e-4;

#[derive(Clone, Debug)]
pub enum OperatorKind {
    /// Dense matrix over the grid nodes (d = 1).
    Dense(DMatrix<C64>),
    /// Fourier multiplier, one real value per spectral bin.
    Multiplier(Vec<f64>),
}

/// `aʷ(t, x, D)` on a grid.
#[derive(Clone, Debug)]
pub struct WeylOperator {
    pub grid: Grid,
    pub kind: OperatorKind,
    /// Frobenius norm of the anti-hermitian part before hermitization; an
    /// upper bound on its operator norm.
    pub hermitian_defect: f64,
}

fn symbol_is_grid_periodic(a: &Symbol, grid: &Grid) -> bool {
    match a.meta().x_period {
        Some(p) => {
            let ratio = grid.period() / p;
            (ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0
        }
        None => false,
    }
}

/// Multiplier values `a(t, ξ_k)` in FFT bin order.
fn multiplier_values(a: &Symbol, grid: &Grid, t: f64) -> Vec<f64> {
    let d = grid.dim();
    let origin = [0.0; 2];
    (0..grid.len())
        .map(|i| a.eval(t, &origin[..d], &grid.wavevector(i)[..d]))
        .collect()
}

/// Midpoint kernel `A[j,k] = (1/N) Σ_q e^{iξ_q(x_j − x_k)} a(t, m_jk, ξ_q)`,
/// with periodic symbols evaluated at the minimal-image midpoint.
fn dense_weyl(a: &Symbol, grid: &Grid, t: f64) -> DMatrix<C64> {
    let n = grid.n();
    let dx = grid.spacing();
    let x0 = grid.coord(0);
    let half = grid.period() / 2.0;
    let periodic = symbol_is_grid_periodic(a, grid);
    let freqs = grid.freqs();
    let plan = FftPlan::new(grid);
    let column = |m: f64| -> Vec<C64> {
        let mut v: Vec<C64> = freqs
            .iter()
            .map(|&k| C64::new(a.eval(t, &[m], &[k]), 0.0))
            .collect();
        plan.inverse(&mut v);
        v.iter_mut().for_each(|c| *c /= n as f64);
        v
    };
    let rows: Vec<(Vec<C64>, Option<Vec<C64>>)> = (0..2 * n - 1)
        .into_par_iter()
        .map(|s| {
            let m = x0 + s as f64 * dx / 2.0;
            let shifted = if periodic { Some(column(m + half)) } else { None };
            (column(m), shifted)
        })
        .collect();
    DMatrix::from_fn(n, n, |j, k| {
        let (arith, shifted) = &rows[j + k];
        let r = (j + n - k) % n;
        match shifted {
            None => arith[r],
            Some(sh) => {
                let gap = j.abs_diff(k);
                if 2 * gap < n {
                    arith[r]
                } else if 2 * gap > n {
                    sh[r]
                } else {
                    (arith[r] + sh[r]) * 0.5
                }
            }
        }
    })
}

/// Quantize `a` at time `t`. x-independent symbols become exact Fourier
/// multipliers in any dimension; others need a dense d = 1 grid.
pub fn weyl_quantize(a: &Symbol, grid: &Grid, t: f64) -> Result<WeylOperator> {
    if a.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "symbol dimension {} vs grid dimension {}",
            a.dim(),
            grid.dim()
        )));
    }
    if a.meta().x_independent {
        return Ok(WeylOperator {
            grid: grid.clone(),
            kind: OperatorKind::Multiplier(multiplier_values(a, grid, t)),
            hermitian_defect: 0.0,
        });
    }
    if grid.dim() != 1 || grid.n() > MAX_DENSE_N {
        let n = grid.len();
        return Err(Error::SizeBudget(format!(
            "dense operator on {n} nodes needs {:.1} MiB and ~{:.1e} flops to diagonalize; \
             limit is d = 1, N <= {MAX_DENSE_N}",
            (n * n * 16) as f64 / (1 << 20) as f64,
            (n as f64).powi(3) * 10.0
        )));
    }
    let mut m = dense_weyl(a, grid, t);
    let adj = m.adjoint();
    let defect = ((&m - &adj) * C64::new(0.5, 0.0)).norm();
    m = (&m + &adj) * C64::new(0.5, 0.0);
    Ok(WeylOperator {
        grid: grid.clone(),
        kind: OperatorKind::Dense(m),
        hermitian_defect: defect,
    })
}

impl WeylOperator {
    pub fn is_dense(&self) -> bool {
        matches!(self.kind, OperatorKind::Dense(_))
    }

    pub fn apply(&self, u: &SampledField) -> Result<SampledField> {
        check_same_grid(&self.grid, &u.grid)?;
        let values = match &self.kind {
            OperatorKind::Dense(m) => {
                let v = m * DVector::from_column_slice(&u.values);
                v.as_slice().to_vec()
            }
            OperatorKind::Multiplier(mult) => {
                let plan = FftPlan::new(&self.grid);
                let mut v = u.values.clone();
                plan.forward(&mut v);
                v.iter_mut().zip(mult).for_each(|(c, m)| *c *= *m);
                plan.inverse(&mut v);
                let n = self.grid.len() as f64;
                v.iter_mut().for_each(|c| *c /= n);
                v
            }
        };
        SampledField::new(self.grid.clone(), values)
    }

    /// Spectral decomposition used to exponentiate the operator.
    pub fn propagator(&self) -> Propagator {
        match &self.kind {
            OperatorKind::Dense(m) => {
                let eig = m.clone().symmetric_eigen();
                let adj = eig.eigenvectors.adjoint();
                Propagator {
                    grid: self.grid.clone(),
                    phases: eig.eigenvalues.iter().copied().collect(),
                    basis: Basis::Eigen {
                        vecs: eig.eigenvectors,
                        adj,
                    },
                }
            }
            OperatorKind::Multiplier(mult) => Propagator {
                grid: self.grid.clone(),
                phases: mult.clone(),
                basis: Basis::Fourier(FftPlan::new(&self.grid)),
            },
        }
    }
}

#[derive(Clone)]
enum Basis {
    Eigen {
        vecs: DMatrix<C64>,
        adj: DMatrix<C64>,
    },
    Fourier(FftPlan),
}

/// Unitary change to a basis diagonalizing the operator, with the
/// corresponding real eigenvalues.
#[derive(Clone)]
pub struct Propagator {
    grid: Grid,
    phases: Vec<f64>,
    basis: Basis,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("grid", &self.grid)
            .field("modes", &self.phases.len())
            .finish()
    }
}

impl Propagator {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.phases
    }

    /// Unitary modal coefficients of node values.
    pub fn to_modal(&self, u: &[C64]) -> Vec<C64> {
        match &self.basis {
            Basis::Eigen { adj, .. } => {
                let v = adj * DVector::from_column_slice(u);
                v.as_slice().to_vec()
            }
            Basis::Fourier(plan) => {
                let mut v = u.to_vec();
                plan.forward(&mut v);
                let s = (u.len() as f64).sqrt();
                v.iter_mut().for_each(|c| *c /= s);
                v
            }
        }
    }

    pub fn from_modal(&self, c: &[C64]) -> Vec<C64> {
        match &self.basis {
            Basis::Eigen { vecs, .. } => {
                let v = vecs * DVector::from_column_slice(c);
                v.as_slice().to_vec()
            }
            Basis::Fourier(plan) => {
                let mut v = c.to_vec();
                plan.inverse(&mut v);
                let s = (c.len() as f64).sqrt();
                v.iter_mut().for_each(|z| *z /= s);
                v
            }
        }
    }

    /// `e^{−itA} u`.
    pub fn apply(&self, t: f64, u: &SampledField) -> Result<SampledField> {
        check_same_grid(&self.grid, &u.grid)?;
        let mut c = self.to_modal(&u.values);
        c.iter_mut()
            .zip(&self.phases)
            .for_each(|(z, p)| *z *= C64::from_polar(1.0, -t * p));
        SampledField::new(self.grid.clone(), self.from_modal(&c))
    }
}

/// Forcing `f(t)` sampled on the evolution grid.
pub type Forcing<'a> = &'a (dyn Fn(f64) -> SampledField + Sync);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub t_end: f64,
    /// Largest step; defaults to `(10 λ^m)^{-1}` for banded data, else `1e-3`.
    pub max_dt: Option<f64>,
    /// Keep every `stride`-th step (the last step is always kept).
    pub snapshot_stride: usize,
    pub drift_limit: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            max_dt: None,
            snapshot_stride: 0,
            drift_limit: DRIFT_LIMIT,
        }
    }
}

/// Per-step diagnostics of an evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSummary {
    pub symbol: String,
    pub band: Option<f64>,
    pub dt: f64,
    pub steps: usize,
    /// `‖u(tₙ)‖₂` for every step, starting at `t = 0`.
    pub norms: Vec<f64>,
    /// `max |‖u(tₙ)‖/‖u₀‖ − 1|`.
    pub norm_drift: f64,
    pub forced: bool,
    pub valid: bool,
    pub hermitian_defect: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub summary: EvolutionSummary,
    pub times: Vec<f64>,
    pub snapshots: Vec<SampledField>,
}

impl EvolutionResult {
    pub fn last(&self) -> &SampledField {
        self.snapshots.last().expect("at least the initial snapshot")
    }

    /// Snapshots as field binaries `snap_00000.bin, …` plus `manifest.json`.
    pub fn write_to_dir(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (i, f) in self.snapshots.iter().enumerate() {
            let mut w = std::io::BufWriter::new(std::fs::File::create(
                dir.join(format!("snap_{i:05}.bin")),
            )?);
            write_field(&mut w, f)?;
            w.flush()?;
        }
        let manifest = serde_json::json!({
            "symbol": self.summary.symbol,
            "lambda": self.summary.band,
            "dt": self.summary.dt,
            "steps": self.summary.steps,
            "norm_drift": self.summary.norm_drift,
            "valid": self.summary.valid,
            "times": self.times,
        });
        std::fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?,
        )?;
        Ok(())
    }
}

fn step_size(a: &Symbol, u0: &SampledField, opts: &EvolveOptions) -> Result<(f64, usize)> {
    if !(opts.t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("t_end = {} must be positive", opts.t_end)));
    }
    let max_dt = match opts.max_dt {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::InvalidParameter(format!("dt = {h} must be positive"))),
        None => match u0.band.or(a.band()) {
            Some(l) => 1.0 / (10.0 * l.powf(a.order().max(1.0))),
            None => 1e-3,
        },
    };
    let steps = (opts.t_end / max_dt).ceil().max(1.0) as usize;
    Ok((opts.t_end / steps as f64, steps))
}

/// Evolve and hand every step's field to `observe(n, tₙ, u(tₙ))`, starting
/// with `n = 0`.
pub fn evolve_observed(
    a: &Symbol,
    u0: &SampledField,
    forcing: Option<Forcing<'_>>,
    opts: &EvolveOptions,
    observe: &mut dyn FnMut(usize, f64, &SampledField),
) -> Result<EvolutionSummary> {
    evolve_core(a, u0, forcing, opts, &mut |_| true, observe)
}

fn evolve_core(
    a: &Symbol,
    u0: &SampledField,
    forcing: Option<Forcing<'_>>,
    opts: &EvolveOptions,
    wants: &mut dyn FnMut(usize) -> bool,
    observe: &mut dyn FnMut(usize, f64, &SampledField),
) -> Result<EvolutionSummary> {
    let grid = &u0.grid;
    if let Some(l) = u0.band {
        if grid.nyquist() < 4.0 * l {
            return Err(Error::BandOutOfRange {
                band: l,
                nyquist: grid.nyquist(),
            });
        }
    }
    let (dt, steps) = step_size(a, u0, opts)?;
    let cell = grid.cell_volume().sqrt();
    let frozen = a.meta().time_independent;
    let mut op = weyl_quantize(a, grid, 0.5 * dt)?;
    let mut defect = op.hermitian_defect;
    let mut prop = op.propagator();
    let mut modal = prop.to_modal(&u0.values);
    let c0 = modal.clone();
    let n0 = u0.l2_norm();
    let mut norms = Vec::with_capacity(steps + 1);
    norms.push(n0);
    if wants(0) {
        observe(0, 0.0, u0);
    }
    let mut drift: f64 = 0.0;
    for n in 0..steps {
        let t_mid = (n as f64 + 0.5) * dt;
        if !frozen && n > 0 {
            // Midpoint freezing: re-quantize at t_{n+1/2} and carry the state
            // across bases.
            let u = prop.from_modal(&modal);
            op = weyl_quantize(a, grid, t_mid)?;
            defect = defect.max(op.hermitian_defect);
            prop = op.propagator();
            modal = prop.to_modal(&u);
        }
        let tn = (n + 1) as f64 * dt;
        if frozen && forcing.is_none() {
            let t = tn;
            modal = c0
                .iter()
                .zip(&prop.phases)
                .map(|(z, p)| z * C64::from_polar(1.0, -t * p))
                .collect();
        } else {
            let fm = forcing.map(|f| {
                let fv = f(t_mid);
                prop.to_modal(&fv.values)
            });
            for (k, z) in modal.iter_mut().enumerate() {
                let p = prop.phases[k];
                *z *= C64::from_polar(1.0, -dt * p);
                if let Some(fm) = &fm {
                    *z -= C64::new(0.0, dt) * C64::from_polar(1.0, -0.5 * dt * p) * fm[k];
                }
            }
        }
        let norm = modal.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * cell;
        norms.push(norm);
        if n0 > 0.0 {
            drift = drift.max((norm / n0 - 1.0).abs());
        }
        if wants(n + 1) {
            let u = SampledField::new(grid.clone(), prop.from_modal(&modal))?.with_band(u0.band);
            observe(n + 1, tn, &u);
        }
    }
    let valid = forcing.is_some() || drift <= opts.drift_limit;
    Ok(EvolutionSummary {
        symbol: a.id().to_string(),
        band: u0.band.or(a.band()),
        dt,
        steps,
        norms,
        norm_drift: drift,
        forced: forcing.is_some(),
        valid,
        hermitian_defect: defect,
    })
}

/// Solve `i∂ₜu = aʷu + f`, `u(0) = u₀` on `[0, T]` by exponentiating the
/// midpoint-frozen operator:
/// `u_{n+1} = e^{−iΔtA} u_n − iΔt e^{−iΔtA/2} f(t_{n+1/2})`.
pub fn evolve(
    a: &Symbol,
    u0: &SampledField,
    forcing: Option<Forcing<'_>>,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    let (_, steps) = step_size(a, u0, opts)?;
    let stride = opts.snapshot_stride;
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    let summary = evolve_core(
        a,
        u0,
        forcing,
        opts,
        &mut |n| n == 0 || n == steps || (stride > 0 && n % stride == 0),
        &mut |_, t, u| {
            times.push(t);
            snapshots.push(u.clone());
        },
    )?;
    Ok(EvolutionResult {
        summary,
        times,
        snapshots,
    })
}

/// `e^{−iTA}u₀ − iΔt Σₙ e^{−i(T − t_{n+1/2})A} f(t_{n+1/2})` evaluated mode by
/// mode with exact phases, for comparison against [`evolve`].
pub fn duhamel_reference(
    a: &Symbol,
    u0: &SampledField,
    forcing: Forcing<'_>,
    opts: &EvolveOptions,
) -> Result<SampledField> {
    if !a.meta().time_independent {
        return Err(Error::InvalidParameter(
            "the Duhamel reference needs a time-independent symbol".into(),
        ));
    }
    let (dt, steps) = step_size(a, u0, opts)?;
    let t_end = dt * steps as f64;
    let prop = weyl_quantize(a, &u0.grid, 0.0)?.propagator();
    let mut acc: Vec<C64> = prop
        .to_modal(&u0.values)
        .iter()
        .zip(&prop.phases)
        .map(|(z, p)| z * C64::from_polar(1.0, -t_end * p))
        .collect();
    for n in 0..steps {
        let s = (n as f64 + 0.5) * dt;
        let fm = prop.to_modal(&forcing(s).values);
        for (k, z) in acc.iter_mut().enumerate() {
            *z -= C64::new(0.0, dt) * C64::from_polar(1.0, -(t_end - s) * prop.phases[k]) * fm[k];
        }
    }
    SampledField::new(u0.grid.clone(), prop.from_modal(&acc))
}

/// Phase-space mass of an evolved coherent state about the Hamilton-flow
/// image of its centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentTrack {
    pub symbol: String,
    pub times: Vec<f64>,
    /// `χ(t, 0)(x₀, ξ₀)` at each sample time.
    pub centers: Vec<(f64, f64)>,
    pub radii: Vec<f64>,
    /// `inside[i][r]`: mass fraction within `radii[r]` at `times[i]`.
    pub inside: Vec<Vec<f64>>,
    /// Complementary fractions, summed directly.
    pub outside: Vec<Vec<f64>>,
    pub norm_drift: f64,
}

/// Tail fractions at or below this level are treated as numerically zero.
pub const TAIL_FLOOR: f64 = 1e-12;

impl CoherentTrack {
    /// Whether the tail outside `radii[r]` falls at least like `R^{-power}`
    /// relative to the first radius, at sample `i`.
    pub fn tail_decays(&self, i: usize, power: f64) -> bool {
        let o = &self.outside[i];
        let (r0, o0) = (self.radii[0], o[0].max(TAIL_FLOOR));
        self.radii
            .iter()
            .zip(o)
            .all(|(&r, &v)| v <= TAIL_FLOOR || v <= o0 * (r / r0).powf(-power) * (1.0 + 1e-9))
    }

    /// CSV rows `t, x_c, xi_c, R, inside, outside`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x_c", "xi_c", "R", "inside", "outside"])?;
        for (i, &t) in self.times.iter().enumerate() {
            for (r, &rad) in self.radii.iter().enumerate() {
                out.write_record(&[
                    format!("{t:.12e}"),
                    format!("{:.12e}", self.centers[i].0),
                    format!("{:.12e}", self.centers[i].1),
                    format!("{rad}"),
                    format!("{:.12e}", self.inside[i][r]),
                    format!("{:.12e}", self.outside[i][r]),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Evolve the coherent state at `(x₀, ξ₀)` under `a` and measure its FBI mass
/// about the flow image at `samples + 1` equally spaced times in `[0, T]`.
pub fn coherent_track(
    a: &Symbol,
    grid: &Grid,
    center: (f64, f64),
    t_end: f64,
    radii: &[f64],
    samples: usize,
    evolve_opts: &EvolveOptions,
) -> Result<CoherentTrack> {
    if radii.is_empty() {
        return Err(Error::EmptySeries("radii"));
    }
    let u0 = coherent_state(grid, center.0, center.1);
    let samples = samples.max(1);
    let opts = EvolveOptions {
        t_end,
        ..evolve_opts.clone()
    };
    let (dt, steps) = step_size(a, &u0, &opts)?;
    let marks: Vec<usize> = (0..=samples)
        .map(|i| ((i as f64 / samples as f64) * steps as f64).round() as usize)
        .collect();
    let mut fields = Vec::new();
    let summary = evolve_core(
        a,
        &u0,
        None,
        &opts,
        &mut |n| marks.contains(&n),
        &mut |_, t, u| fields.push((t, u.clone())),
    )?;
    if !summary.valid {
        return Err(Error::NormDrift {
            drift: summary.norm_drift,
            limit: opts.drift_limit,
        });
    }
    let flow_opts = FlowOptions {
        dt: dt.max(1e-4).min(1e-3),
        shell: (0.0, f64::INFINITY),
        ..FlowOptions::default()
    };
    let d = a.dim();
    let mut track = CoherentTrack {
        symbol: a.id().to_string(),
        times: Vec::new(),
        centers: Vec::new(),
        radii: radii.to_vec(),
        inside: Vec::new(),
        outside: Vec::new(),
        norm_drift: summary.norm_drift,
    };
    for (t, u) in fields {
        let img = flow_map(a, &vec![center.0; d], &vec![center.1; d], t, &flow_opts)?;
        let c = (img[0], img[d]);
        let ps = fbi_forward(&u)?;
        track.times.push(t);
        track.centers.push(c);
        track.inside.push(radii.iter().map(|&r| ps.mass_fraction(c, r)).collect());
        track.outside.push(radii.iter().map(|&r| ps.mass_outside(c, r)).collect());
    }
    Ok(track)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{banded_noise, fourier_forward, fourier_inverse, Spectrum};
    use crate::symbols::{
        dilation, harmonic_oscillator, make_fractional, make_perturbed, momentum, position, power,
        zero,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian(grid: &Grid) -> SampledField {
        SampledField::from_fn(grid, |x| C64::new((-x[0] * x[0] / 2.0).exp(), 0.0))
    }

    #[test]
    fn momentum_symbol_is_spectral_derivative() {
        let g = Grid::line(128, 32.0).unwrap();
        let k0 = 5.0 * g.freq_spacing();
        let f = SampledField::from_fn(&g, |x| C64::from_polar(1.0, k0 * x[0]));
        let op = weyl_quantize(&momentum(), &g, 0.0).unwrap();
        let out = op.apply(&f).unwrap();
        let err = out.sub(&f.scale(C64::new(k0, 0.0))).unwrap().l2_norm();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn position_symbol_multiplies() {
        let g = Grid::line(128, 32.0).unwrap();
        let f = gaussian(&g);
        let op = weyl_quantize(&position(), &g, 0.0).unwrap();
        let out = op.apply(&f).unwrap();
        let expect = SampledField::from_fn(&g, |x| C64::new(x[0] * (-x[0] * x[0] / 2.0).exp(), 0.0));
        assert!(out.sub(&expect).unwrap().l2_norm() < 1e-10);
    }

    #[test]
    fn dilation_symbol_is_symmetrized_product() {
        let g = Grid::line(256, 40.0).unwrap();
        let f = gaussian(&g);
        let op = weyl_quantize(&dilation(), &g, 0.0).unwrap();
        let out = op.apply(&f).unwrap();
        // ½(xD + Dx)f with D = −i∂: −i(x f' + f/2) = −i(−x² + 1/2) e^{−x²/2}.
        let expect = SampledField::from_fn(&g, |x| {
            C64::new(0.0, -(0.5 - x[0] * x[0])) * (-x[0] * x[0] / 2.0).exp()
        });
        let err = out.sub(&expect).unwrap().l2_norm();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn real_symbols_quantize_to_hermitian_matrices() {
        let g = Grid::line(128, 2.0 * std::f64::consts::PI).unwrap();
        let a = make_perturbed(1, 1.5, 8.0, 1.5, 0.1).unwrap();
        let op = weyl_quantize(&a, &g, 0.0).unwrap();
        assert!(op.hermitian_defect < 1e-10 * 8f64.powf(1.5) * 128.0);
        let ho = weyl_quantize(&harmonic_oscillator(1).unwrap(), &Grid::line(128, 16.0).unwrap(), 0.0)
            .unwrap();
        assert!(ho.hermitian_defect < 1e-10);
    }

    #[test]
    fn dense_size_budget() {
        let g = Grid::line(2048, 64.0).unwrap();
        assert!(matches!(
            weyl_quantize(&harmonic_oscillator(1).unwrap(), &g, 0.0),
            Err(Error::SizeBudget(_))
        ));
    }

    #[test]
    fn multiplier_evolution_is_exact() {
        let g = Grid::line(1024, 32.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u0 = banded_noise(&g, 16.0, &mut rng).unwrap();
        let a = power(1, 1.5).unwrap();
        let res = evolve(&a, &u0, None, &EvolveOptions::default()).unwrap();
        let mut s: Spectrum = fourier_forward(&u0);
        s.apply(|k| C64::from_polar(1.0, -k[0].abs().powf(1.5)));
        let exact = fourier_inverse(&s);
        let err = res.last().sub(&exact).unwrap().l2_norm();
        assert!(err < 1e-8, "{err}");
        assert!(res.summary.norm_drift < 1e-12);
    }

    #[test]
    fn zero_symbol_leaves_data_alone() {
        let g = Grid::line(64, 16.0).unwrap();
        let u0 = gaussian(&g);
        let res = evolve(&zero(1).unwrap(), &u0, None, &EvolveOptions::default()).unwrap();
        assert!(res.last().sub(&u0).unwrap().l2_norm() < 1e-13);
    }

    #[test]
    fn perturbed_evolution_conserves_norm() {
        let g = Grid::line(256, 2.0 * std::f64::consts::PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u0 = banded_noise(&g, 16.0, &mut rng).unwrap();
        let a = make_perturbed(1, 1.5, 16.0, 1.5, 0.1).unwrap();
        let res = evolve(&a, &u0, None, &EvolveOptions::default()).unwrap();
        assert!(res.summary.valid);
        assert!(res.summary.norm_drift < 1e-6, "{}", res.summary.norm_drift);
    }

    #[test]
    fn forced_evolution_matches_duhamel_sum() {
        let g = Grid::line(128, 16.0).unwrap();
        let a = harmonic_oscillator(1).unwrap();
        let u0 = gaussian(&g);
        let f = |t: f64| {
            SampledField::from_fn(&g, |x| {
                C64::new((t * 3.0).cos(), 0.5 * t) * (-(x[0] - 1.0).powi(2)).exp()
            })
        };
        let opts = EvolveOptions {
            t_end: 0.5,
            max_dt: Some(0.01),
            ..EvolveOptions::default()
        };
        let stepped = evolve(&a, &u0, Some(&f), &opts).unwrap();
        let reference = duhamel_reference(&a, &u0, &f, &opts).unwrap();
        let err = stepped.last().sub(&reference).unwrap().l2_norm() / reference.l2_norm();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn coherent_state_follows_flow() {
        let g = Grid::line(2048, 64.0).unwrap();
        let a = make_fractional(1, 1.5, 64.0).unwrap();
        let track =
            coherent_track(&a, &g, (-6.0, 64.0), 1.0, &[5.0, 10.0], 2, &EvolveOptions::default())
                .unwrap();
        let last = track.inside.len() - 1;
        assert!(track.inside[last][0] >= 0.9, "{:?}", track.inside);
        assert!((track.centers[last].0 - (-6.0 + 12.0)).abs() < 1e-6);
    }

    #[test]
    fn band_must_be_resolved() {
        let g = Grid::line(64, 64.0).unwrap();
        let u0 = SampledField::zeros(&g).with_band(Some(4.0));
        assert!(matches!(
            evolve(&power(1, 2.0).unwrap(), &u0, None, &EvolveOptions::default()),
            Err(Error::BandOutOfRange { .. })
        ));
    }
}
