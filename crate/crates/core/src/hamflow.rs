//! Bicharacteristic flow `ẋ = a_ξ, ξ̇ = −a_x`, its variational system for
//! `(X, Ξ) = (∂_ξ xᵗ, ∂_ξ ξᵗ)`, and measured flow properties.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::Symbol;

/// One point of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Initial RK4 step.
    pub dt: f64,
    /// Accept the step once halving it changes the endpoint by less than this
    /// relative amount.
    pub tol: f64,
    pub max_halvings: usize,
    /// Finite-difference steps relative to `λ` (or `|ξ₀|`) and to the symbol's
    /// x length scale.
    pub rel_step_xi: f64,
    pub rel_step_x: f64,
    /// Valid frequency shell `[lo λ, hi λ]` for banded symbols.
    pub shell: (f64, f64),
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            tol: 1e-8,
            max_halvings: 10,
            rel_step_xi: 1e-4,
            rel_step_x: 1e-4,
            shell: (0.125, 8.0),
        }
    }
}

/// Trajectory plus the step-halving diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSeries {
    pub states: Vec<FlowState>,
    pub dt: f64,
    /// Relative endpoint change between `dt` and `dt/2`.
    pub halving_change: f64,
    pub converged: bool,
}

impl FlowSeries {
    pub fn last(&self) -> &FlowState {
        self.states.last().expect("series is never empty")
    }
}

/// Trajectory with the variational matrices, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowBundle {
    pub dim: usize,
    pub states: Vec<FlowState>,
    pub big_x: Vec<Vec<f64>>,
    pub big_xi: Vec<Vec<f64>>,
    pub dt: f64,
    pub halving_change: f64,
    pub converged: bool,
}

fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn det(m: &[f64], d: usize) -> f64 {
    if d == 1 {
        m[0]
    } else {
        m[0] * m[3] - m[1] * m[2]
    }
}

impl FlowBundle {
    /// Index of the sample nearest to `t`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        let (i, s) = self
            .states
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.t - t).abs().total_cmp(&(b.1.t - t).abs()))
            .expect("bundle is never empty");
        if (s.t - t).abs() > 0.5 * self.dt + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "time {t} outside the integrated window"
            )));
        }
        Ok(i)
    }

    /// `sup_t ‖X(t)‖_F` and `sup_t ‖Ξ(t)‖_F`.
    pub fn sup_norms(&self) -> (f64, f64) {
        let sx = self.big_x.iter().map(|m| frobenius(m)).fold(0.0, f64::max);
        let sxi = self.big_xi.iter().map(|m| frobenius(m)).fold(0.0, f64::max);
        (sx, sxi)
    }

    /// `sup_t ‖Ξ(t) − I‖_F`.
    pub fn xi_deviation(&self) -> f64 {
        let d = self.dim;
        self.big_xi
            .iter()
            .map(|m| {
                let mut e = m.clone();
                for i in 0..d {
                    e[i * d + i] -= 1.0;
                }
                frobenius(&e)
            })
            .fold(0.0, f64::max)
    }

    /// CSV rows `t, x…, xi…, detX`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = self.dim;
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..d).map(|i| format!("x{i}")));
        header.extend((0..d).map(|i| format!("xi{i}")));
        header.push("detX".into());
        out.write_record(&header)?;
        for (s, m) in self.states.iter().zip(&self.big_x) {
            let mut row = vec![format!("{:.15e}", s.t)];
            row.extend(s.x.iter().map(|v| format!("{v:.15e}")));
            row.extend(s.xi.iter().map(|v| format!("{v:.15e}")));
            row.push(format!("{:.15e}", det(m, d)));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Finite-difference access to the derivatives the flow needs.
struct Derivs<'a> {
    a: &'a Symbol,
    hx: f64,
    hxi: f64,
    d: usize,
}

impl<'a> Derivs<'a> {
    fn new(a: &'a Symbol, xi0: &[f64], opts: &FlowOptions) -> Self {
        let xi_scale = a
            .band()
            .unwrap_or_else(|| xi0.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0));
        Self {
            a,
            hx: opts.rel_step_x * a.meta().x_scale,
            hxi: opts.rel_step_xi * xi_scale,
            d: a.dim(),
        }
    }

    fn partial(&self, t: f64, x: &[f64], xi: &[f64], alpha: [usize; 2], beta: [usize; 2]) -> f64 {
        let d = self.d;
        self.a
            .partial_with_steps(t, x, xi, &alpha[..d], &beta[..d], self.hx, self.hxi)
    }

    fn unit(i: usize) -> [usize; 2] {
        let mut u = [0; 2];
        u[i] = 1;
        u
    }

    /// `(a_x, a_ξ)`.
    fn gradient(&self, t: f64, x: &[f64], xi: &[f64]) -> ([f64; 2], [f64; 2]) {
        let mut ax = [0.0; 2];
        let mut axi = [0.0; 2];
        for i in 0..self.d {
            ax[i] = self.partial(t, x, xi, Self::unit(i), [0; 2]);
            axi[i] = self.partial(t, x, xi, [0; 2], Self::unit(i));
        }
        (ax, axi)
    }

    /// Row-major `(a_xx, a_xξ, a_ξξ)` with `a_xξ[i][k] = ∂_{x_i}∂_{ξ_k} a`.
    fn hessian(&self, t: f64, x: &[f64], xi: &[f64]) -> [[f64; 4]; 3] {
        let d = self.d;
        let mut out = [[0.0; 4]; 3];
        for i in 0..d {
            for k in 0..d {
                let mut aa = Self::unit(i);
                aa[k] += 1;
                out[0][i * d + k] = self.partial(t, x, xi, aa, [0; 2]);
                out[1][i * d + k] = self.partial(t, x, xi, Self::unit(i), Self::unit(k));
                out[2][i * d + k] = self.partial(t, x, xi, [0; 2], aa);
            }
        }
        out
    }
}

fn rk4_step(f: &dyn Fn(f64, &[f64]) -> Vec<f64>, t: f64, y: &[f64], h: f64) -> Vec<f64> {
    let add = |y: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + c * b).collect()
    };
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &add(y, &k1, h / 2.0));
    let k3 = f(t + h / 2.0, &add(y, &k2, h / 2.0));
    let k4 = f(t + h, &add(y, &k3, h));
    (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

type Check<'a> = &'a dyn Fn(f64, &[f64]) -> Result<()>;

fn integrate_fixed(
    f: &dyn Fn(f64, &[f64]) -> Vec<f64>,
    check: Check<'_>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let h = (t1 - t0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((t0, y0.to_vec()));
    let mut y = y0.to_vec();
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        y = rk4_step(f, t, &y, h);
        let tn = t0 + (n + 1) as f64 * h;
        check(tn, &y)?;
        out.push((tn, y.clone()));
    }
    Ok(out)
}

fn rel_change(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let size = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if size > 0.0 {
        diff / size
    } else {
        diff
    }
}

/// Integrate with step halving until the endpoint is stable to `opts.tol`.
fn integrate_adaptive(
    f: &dyn Fn(f64, &[f64]) -> Vec<f64>,
    check: Check<'_>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    opts: &FlowOptions,
) -> Result<(Vec<(f64, Vec<f64>)>, f64, f64, bool)> {
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt = {} must be positive", opts.dt)));
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((vec![(t0, y0.to_vec())], opts.dt, 0.0, true));
    }
    let mut steps = ((span.abs() / opts.dt).ceil() as usize).max(1);
    let mut coarse = integrate_fixed(f, check, y0, t0, t1, steps)?;
    let mut change = f64::INFINITY;
    for _ in 0..=opts.max_halvings {
        let fine = integrate_fixed(f, check, y0, t0, t1, 2 * steps)?;
        change = rel_change(&coarse.last().unwrap().1, &fine.last().unwrap().1);
        if change < opts.tol {
            return Ok((coarse, span.abs() / steps as f64, change, true));
        }
        coarse = fine;
        steps *= 2;
    }
    Ok((coarse, span.abs() / steps as f64, change, false))
}

fn shell_check<'a>(a: &'a Symbol, d: usize, opts: &'a FlowOptions) -> impl Fn(f64, &[f64]) -> Result<()> + 'a {
    move |t, y| {
        if let Some(l) = a.band() {
            let n = y[d..2 * d].iter().map(|v| v * v).sum::<f64>().sqrt();
            let (lo, hi) = (opts.shell.0 * l, opts.shell.1 * l);
            if !(n >= lo && n <= hi) {
                return Err(Error::ShellExit {
                    t,
                    xi_norm: n,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }
}

fn check_init(a: &Symbol, x: &[f64], xi: &[f64]) -> Result<usize> {
    let d = a.dim();
    if x.len() != d || xi.len() != d {
        return Err(Error::InvalidParameter(format!(
            "initial point has dimensions ({}, {}), symbol has {d}",
            x.len(),
            xi.len()
        )));
    }
    Ok(d)
}

/// Solve `ẋ = a_ξ, ξ̇ = −a_x` from `(x, ξ)` at `t0` to `t1`.
pub fn flow_integrate(
    a: &Symbol,
    x: &[f64],
    xi: &[f64],
    t0: f64,
    t1: f64,
    opts: &FlowOptions,
) -> Result<FlowSeries> {
    let d = check_init(a, x, xi)?;
    let der = Derivs::new(a, xi, opts);
    let f = |t: f64, y: &[f64]| -> Vec<f64> {
        let (ax, axi) = der.gradient(t, &y[..d], &y[d..2 * d]);
        let mut out = vec![0.0; 2 * d];
        for i in 0..d {
            out[i] = axi[i];
            out[d + i] = -ax[i];
        }
        out
    };
    let check = shell_check(a, d, opts);
    let y0: Vec<f64> = x.iter().chain(xi).copied().collect();
    check(t0, &y0)?;
    let (path, dt, change, converged) = integrate_adaptive(&f, &check, &y0, t0, t1, opts)?;
    Ok(FlowSeries {
        states: path
            .into_iter()
            .map(|(t, y)| FlowState {
                t,
                x: y[..d].to_vec(),
                xi: y[d..].to_vec(),
            })
            .collect(),
        dt,
        halving_change: change,
        converged,
    })
}

/// Base flow together with `Ẋ = a_{ξx}X + a_{ξξ}Ξ`, `Ξ̇ = −a_{xx}X − a_{xξ}Ξ`,
/// `X(0) = 0`, `Ξ(0) = I`.
pub fn variational_flow(
    a: &Symbol,
    x: &[f64],
    xi: &[f64],
    t_end: f64,
    opts: &FlowOptions,
) -> Result<FlowBundle> {
    let d = check_init(a, x, xi)?;
    let dd = d * d;
    let der = Derivs::new(a, xi, opts);
    let f = |t: f64, y: &[f64]| -> Vec<f64> {
        let (px, pxi) = (&y[..d], &y[d..2 * d]);
        let bx = &y[2 * d..2 * d + dd];
        let bxi = &y[2 * d + dd..];
        let (ax, axi) = der.gradient(t, px, pxi);
        let [axx, axxi, axixi] = der.hessian(t, px, pxi);
        let mut out = vec![0.0; 2 * d + 2 * dd];
        for i in 0..d {
            out[i] = axi[i];
            out[d + i] = -ax[i];
            for j in 0..d {
                let mut dx = 0.0;
                let mut dxi = 0.0;
                for k in 0..d {
                    // a_{ξ_i x_k} = a_{x_k ξ_i}
                    dx += axxi[k * d + i] * bx[k * d + j] + axixi[i * d + k] * bxi[k * d + j];
                    dxi -= axx[i * d + k] * bx[k * d + j] + axxi[i * d + k] * bxi[k * d + j];
                }
                out[2 * d + i * d + j] = dx;
                out[2 * d + dd + i * d + j] = dxi;
            }
        }
        out
    };
    let check = shell_check(a, d, opts);
    let mut y0: Vec<f64> = x.iter().chain(xi).copied().collect();
    y0.extend(std::iter::repeat(0.0).take(dd));
    y0.extend((0..dd).map(|i| if i % (d + 1) == 0 { 1.0 } else { 0.0 }));
    check(0.0, &y0)?;
    let (path, dt, change, converged) = integrate_adaptive(&f, &check, &y0, 0.0, t_end, opts)?;
    let mut bundle = FlowBundle {
        dim: d,
        states: Vec::with_capacity(path.len()),
        big_x: Vec::with_capacity(path.len()),
        big_xi: Vec::with_capacity(path.len()),
        dt,
        halving_change: change,
        converged,
    };
    for (t, y) in path {
        bundle.states.push(FlowState {
            t,
            x: y[..d].to_vec(),
            xi: y[d..2 * d].to_vec(),
        });
        bundle.big_x.push(y[2 * d..2 * d + dd].to_vec());
        bundle.big_xi.push(y[2 * d + dd..].to_vec());
    }
    Ok(bundle)
}

/// `det X(t)`.
pub fn flow_determinant(bundle: &FlowBundle, t: f64) -> Result<f64> {
    let i = bundle.index_at(t)?;
    Ok(det(&bundle.big_x[i], bundle.dim))
}

/// `∫₀ᵗ (‖a_xx‖‖X‖ + ‖a_xξ‖‖Ξ‖) ds` along the bundle's trajectory, the budget
/// bounding `‖Ξ(t) − I‖`.
pub fn xi_deviation_budget(a: &Symbol, bundle: &FlowBundle, opts: &FlowOptions) -> f64 {
    let d = bundle.dim;
    let der = Derivs::new(a, &bundle.states[0].xi, opts);
    let integrand: Vec<f64> = bundle
        .states
        .iter()
        .zip(bundle.big_x.iter().zip(&bundle.big_xi))
        .map(|(s, (bx, bxi))| {
            let [axx, axxi, _] = der.hessian(s.t, &s.x, &s.xi);
            frobenius(&axx[..d * d]) * frobenius(bx) + frobenius(&axxi[..d * d]) * frobenius(bxi)
        })
        .collect();
    bundle
        .states
        .windows(2)
        .zip(integrand.windows(2))
        .map(|(s, v)| 0.5 * (s[1].t - s[0].t) * (v[0] + v[1]))
        .sum()
}

/// Endpoint `χ(t, 0)(x, ξ)` as one phase-space vector `(x, ξ)`.
pub fn flow_map(a: &Symbol, x: &[f64], xi: &[f64], t: f64, opts: &FlowOptions) -> Result<Vec<f64>> {
    let s = flow_integrate(a, x, xi, 0.0, t, opts)?;
    let last = s.last();
    Ok(last.x.iter().chain(&last.xi).copied().collect())
}

/// Min and max of `|χ(p) − χ(q)| / |p − q|` over all sample pairs.
pub fn bilipschitz_estimate(
    a: &Symbol,
    samples: &[(Vec<f64>, Vec<f64>)],
    t: f64,
    opts: &FlowOptions,
) -> Result<(f64, f64)> {
    let images: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|(x, xi)| flow_map(a, x, xi, t, opts))
        .collect::<Result<_>>()?;
    let points: Vec<Vec<f64>> = samples
        .iter()
        .map(|(x, xi)| x.iter().chain(xi).copied().collect())
        .collect();
    let dist = |u: &[f64], v: &[f64]| -> f64 {
        u.iter().zip(v).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    };
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let base = dist(&points[i], &points[j]);
            if base < 1e-12 {
                continue;
            }
            let r = dist(&images[i], &images[j]) / base;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if hi == 0.0 {
        return Err(Error::TooFewPoints { got: 0, need: 1 });
    }
    Ok((lo, hi))
}

/// `∂(xᵗ, ξᵗ)/∂(x, ξ)` by central differences of the flow map with steps
/// `h_x`, `h_ξ`; row-major `2d × 2d`.
pub fn phase_jacobian(
    a: &Symbol,
    x: &[f64],
    xi: &[f64],
    t: f64,
    steps: (f64, f64),
    opts: &FlowOptions,
) -> Result<Vec<f64>> {
    let d = check_init(a, x, xi)?;
    let n = 2 * d;
    let base: Vec<f64> = x.iter().chain(xi).copied().collect();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|c| {
            let h = if c < d { steps.0 } else { steps.1 };
            let mut p = base.clone();
            let mut q = base.clone();
            p[c] += h;
            q[c] -= h;
            let fp = flow_map(a, &p[..d], &p[d..], t, opts)?;
            let fq = flow_map(a, &q[..d], &q[d..], t, opts)?;
            Ok(fp.iter().zip(&fq).map(|(u, v)| (u - v) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    let mut j = vec![0.0; n * n];
    for (c, col) in cols.iter().enumerate() {
        for r in 0..n {
            j[r * n + c] = col[r];
        }
    }
    Ok(j)
}

/// Determinant of [`phase_jacobian`]; 1 for a Hamiltonian flow.
pub fn symplectic_volume(
    a: &Symbol,
    x: &[f64],
    xi: &[f64],
    t: f64,
    steps: (f64, f64),
    opts: &FlowOptions,
) -> Result<f64> {
    let j = phase_jacobian(a, x, xi, t, steps, opts)?;
    let n = 2 * a.dim();
    Ok(DMatrix::from_row_slice(n, n, &j).determinant())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{harmonic_oscillator, make_fractional, power, rescale, zero};

    #[test]
    fn x_independent_flow_is_straight() {
        let a = power(1, 1.5).unwrap();
        let s = flow_integrate(&a, &[0.3], &[4.0], 0.0, 1.0, &FlowOptions::default()).unwrap();
        let last = s.last();
        assert_eq!(last.xi[0], 4.0);
        let exact = 0.3 + 1.5 * 2.0;
        assert!((last.x[0] - exact).abs() < 1e-7, "{}", last.x[0]);
    }

    #[test]
    fn oscillator_flow_rotates() {
        let a = harmonic_oscillator(1).unwrap();
        let (x0, k0) = (1.2, -0.7);
        let s = flow_integrate(&a, &[x0], &[k0], 0.0, 1.0, &FlowOptions::default()).unwrap();
        let (c, sn) = (1f64.cos(), 1f64.sin());
        let last = s.last();
        assert!((last.x[0] - (x0 * c + k0 * sn)).abs() < 1e-6);
        assert!((last.xi[0] - (-x0 * sn + k0 * c)).abs() < 1e-6);
        assert!(s.converged);
    }

    #[test]
    fn zero_symbol_is_static() {
        let a = zero(2).unwrap();
        let s = flow_integrate(&a, &[1.0, 2.0], &[3.0, 4.0], 0.0, 1.0, &FlowOptions::default())
            .unwrap();
        assert_eq!(s.last().x, vec![1.0, 2.0]);
        assert_eq!(s.last().xi, vec![3.0, 4.0]);
    }

    #[test]
    fn variational_oscillator() {
        let a = harmonic_oscillator(1).unwrap();
        let b = variational_flow(&a, &[0.5], &[0.5], 1.0, &FlowOptions::default()).unwrap();
        assert_eq!(b.big_x[0], vec![0.0]);
        assert_eq!(b.big_xi[0], vec![1.0]);
        let n = b.states.len() - 1;
        assert!((b.big_x[n][0] - 1f64.sin()).abs() < 1e-6);
        assert!((b.big_xi[n][0] - 1f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn variational_x_independent() {
        let lambda = 64.0;
        let a = make_fractional(1, 1.5, lambda).unwrap();
        let b = variational_flow(&a, &[0.0], &[lambda], 1.0, &FlowOptions::default()).unwrap();
        let n = b.states.len() - 1;
        let axx = 0.75 * lambda.powf(-0.5);
        assert!((b.big_x[n][0] - axx).abs() < 1e-6 * axx);
        assert_eq!(b.big_xi[n][0], 1.0);
        let det = flow_determinant(&b, 1.0).unwrap();
        assert!((det - axx).abs() < 1e-6 * axx);
    }

    #[test]
    fn variational_matches_perturbation_of_the_flow() {
        let a = harmonic_oscillator(1).unwrap();
        let opts = FlowOptions::default();
        let b = variational_flow(&a, &[0.3], &[1.1], 0.8, &opts).unwrap();
        let h = 1e-5;
        let p = flow_map(&a, &[0.3], &[1.1 + h], 0.8, &opts).unwrap();
        let q = flow_map(&a, &[0.3], &[1.1 - h], 0.8, &opts).unwrap();
        let n = b.states.len() - 1;
        assert!(((p[0] - q[0]) / (2.0 * h) - b.big_x[n][0]).abs() < 1e-4);
        assert!(((p[1] - q[1]) / (2.0 * h) - b.big_xi[n][0]).abs() < 1e-4);
    }

    #[test]
    fn oscillator_determinant_at_quarter_turn() {
        let a = harmonic_oscillator(1).unwrap();
        let t = std::f64::consts::FRAC_PI_2;
        let b = variational_flow(&a, &[0.0], &[1.0], t, &FlowOptions::default()).unwrap();
        assert!((flow_determinant(&b, t).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rescaled_determinant_is_order_one() {
        let lambda = 64.0;
        let a = make_fractional(1, 1.5, lambda).unwrap();
        let b = rescale(&a, 0.25, lambda).unwrap();
        let band = b.band().unwrap();
        let bundle = variational_flow(&b, &[0.0], &[band], 1.0, &FlowOptions::default()).unwrap();
        assert!(flow_determinant(&bundle, 1.0).unwrap().abs() >= 0.5);
        let (sx, sxi) = bundle.sup_norms();
        assert!(sx + sxi < 3.0);
    }

    #[test]
    fn shell_exit_is_flagged() {
        let a = make_fractional(1, 1.5, 64.0).unwrap();
        let r = flow_integrate(&a, &[0.0], &[1.0], 0.0, 1.0, &FlowOptions::default());
        assert!(matches!(r, Err(Error::ShellExit { .. })));
    }

    #[test]
    fn bilipschitz_constants() {
        let pts: Vec<(Vec<f64>, Vec<f64>)> = (0..5)
            .map(|i| (vec![i as f64 * 0.4 - 1.0], vec![1.0 - i as f64 * 0.3]))
            .collect();
        let z = zero(1).unwrap();
        let (lo, hi) = bilipschitz_estimate(&z, &pts, 1.0, &FlowOptions::default()).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
        let ho = harmonic_oscillator(1).unwrap();
        let (lo, hi) = bilipschitz_estimate(&ho, &pts, 1.0, &FlowOptions::default()).unwrap();
        assert!((lo - 1.0).abs() < 1e-6 && (hi - 1.0).abs() < 1e-6);
    }

    #[test]
    fn oscillator_preserves_volume() {
        let a = harmonic_oscillator(1).unwrap();
        let v = symplectic_volume(&a, &[0.4], &[-0.9], 1.0, (1e-4, 1e-4), &FlowOptions::default())
            .unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }
}
