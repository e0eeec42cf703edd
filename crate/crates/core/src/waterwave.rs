//! Gravity-capillary symbols of a sampled surface, the paradifferential
//! quantization `T_a` and the good unknown `T_p η + i T_q(ψ − T_B η)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    apply_multiplier, dyadic_piece_profile, dyadic_range, fourier_forward, fourier_inverse,
    holder_seminorm, lp_bump, low_pass_profile, Grid, SampledField, C64,
};

/// On the shell `|ξ| ≈ 2^j` coefficients keep only frequencies `≤ 2^{j−3}`,
/// through the profile `φ(ζ/2^{j−4})`.
pub const PARAPRODUCT_GAP: i32 = 3;

/// Surface elevation, velocity potential trace and the supplied `V`, `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceData {
    pub grid: Grid,
    pub eta: Vec<f64>,
    pub psi: Vec<f64>,
    /// Velocity field `V`, one `d`-vector per node (unused components zero).
    pub v: Vec<[f64; 2]>,
    pub b: Vec<f64>,
    /// `∇η`, spectral by default.
    pub grad_eta: Vec<[f64; 2]>,
}

/// Spectral gradient of a real periodic field.
pub fn spectral_gradient(grid: &Grid, f: &[f64]) -> Result<Vec<[f64; 2]>> {
    let field = SampledField::from_real(grid, f)?;
    let mut out = vec![[0.0; 2]; grid.len()];
    for axis in 0..grid.dim() {
        let g = apply_multiplier(&field, |k| {
            // The Nyquist mode has no real derivative.
            if (k[axis].abs() - grid.nyquist()).abs() < 1e-9 * grid.nyquist() {
                C64::new(0.0, 0.0)
            } else {
                C64::new(0.0, k[axis])
            }
        });
        for (o, v) in out.iter_mut().zip(&g.values) {
            o[axis] = v.re;
        }
    }
    Ok(out)
}

impl SurfaceData {
    pub fn new(grid: &Grid, eta: Vec<f64>, psi: Vec<f64>, v: Vec<[f64; 2]>, b: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if eta.len() != n || psi.len() != n || v.len() != n || b.len() != n {
            return Err(Error::GridMismatch(
                "surface fields must all live on the grid".into(),
            ));
        }
        if eta.iter().chain(&psi).chain(&b).chain(v.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("surface data must be finite".into()));
        }
        let grad_eta = spectral_gradient(grid, &eta)?;
        Ok(Self {
            grid: grid.clone(),
            eta,
            psi,
            v,
            b,
            grad_eta,
        })
    }

    /// Flat surface `η ≡ 0` carrying `ψ`, with `V ≡ 0`, `B ≡ 0`.
    pub fn flat(grid: &Grid, psi: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![0.0; n], psi, vec![[0.0; 2]; n], vec![0.0; n])
    }

    /// Adds a constant slope to `∇η`, as for `η + α·x`, which is not
    /// periodic and so cannot be sampled directly.
    pub fn with_slope(mut self, alpha: [f64; 2]) -> Self {
        let d = self.grid.dim();
        for g in &mut self.grad_eta {
            for k in 0..d {
                g[k] += alpha[k];
            }
        }
        self
    }

    pub fn symbols(&self) -> WWSymbols {
        WWSymbols {
            dim: self.grid.dim(),
            grad_eta: Arc::new(self.grad_eta.clone()),
        }
    }
}

/// Pointwise symbol evaluators at grid nodes.
#[derive(Clone, Debug)]
pub struct WWSymbols {
    dim: usize,
    grad_eta: Arc<Vec<[f64; 2]>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl WWSymbols {
    fn g(&self, node: usize) -> &[f64] {
        &self.grad_eta[node][..self.dim]
    }

    /// `1 + |∇η|²`.
    pub fn metric(&self, node: usize) -> f64 {
        let g = self.g(node);
        1.0 + dot(g, g)
    }

    /// `λ = √((1+|∇η|²)|ξ|² − (∇η·ξ)²)`, evaluated through the Lagrange
    /// identity as `√(|ξ|² + (∇η ∧ ξ)²)`.
    pub fn lambda(&self, node: usize, xi: &[f64]) -> f64 {
        let g = self.g(node);
        let wedge = if self.dim == 2 {
            g[0] * xi[1] - g[1] * xi[0]
        } else {
            0.0
        };
        (dot(xi, xi) + wedge * wedge).sqrt()
    }

    /// `q = (1+|∇η|²)^{−1/2}`.
    pub fn q(&self, node: usize) -> f64 {
        self.metric(node).powf(-0.5)
    }

    /// `ℓ = q(|ξ|² − (∇η·ξ)²/(1+|∇η|²))`, which equals `q³λ²`.
    pub fn ell(&self, node: usize, xi: &[f64]) -> f64 {
        let l = self.lambda(node, xi);
        self.q(node).powi(3) * l * l
    }

    /// `γ = √(ℓλ) = q^{3/2} λ^{3/2}`.
    pub fn gamma(&self, node: usize, xi: &[f64]) -> f64 {
        (self.q(node) * self.lambda(node, xi)).powf(1.5)
    }

    /// Principal part `q^{5/2} |ξ|^{1/2}` of `p`.
    pub fn p(&self, node: usize, xi: &[f64]) -> f64 {
        self.q(node).powf(2.5) * dot(xi, xi).sqrt().sqrt()
    }

    /// `λ` and `ℓ` from their defining expressions, without simplification.
    pub fn lambda_ell_direct(&self, node: usize, xi: &[f64]) -> (f64, f64) {
        let g = self.g(node);
        let s = self.metric(node);
        let gx = dot(g, xi);
        let xx = dot(xi, xi);
        ((s * xx - gx * gx).sqrt(), s.powf(-0.5) * (xx - gx * gx / s))
    }
}

/// Symbol handed to [`paradiff_apply`].
#[derive(Clone)]
pub enum ParaSymbol {
    /// `a(ξ)`.
    Multiplier(Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>),
    /// `c(x) h(ξ)` with `c` sampled on the grid.
    Separable {
        coeff: Vec<C64>,
        mult: Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>,
    },
    /// `a(x_n, ξ)` at grid node `n`.
    General(Arc<dyn Fn(usize, &[f64]) -> C64 + Send + Sync>),
}

impl ParaSymbol {
    pub fn constant(c: f64) -> Self {
        ParaSymbol::Multiplier(Arc::new(move |_| C64::new(c, 0.0)))
    }

    /// Multiplication by a sampled function of `x`.
    pub fn function(values: &[f64]) -> Self {
        ParaSymbol::Separable {
            coeff: values.iter().map(|v| C64::new(*v, 0.0)).collect(),
            mult: Arc::new(|_| C64::new(1.0, 0.0)),
        }
    }

    fn eval(&self, node: usize, xi: &[f64]) -> C64 {
        match self {
            ParaSymbol::Multiplier(h) => h(xi),
            ParaSymbol::Separable { coeff, mult } => coeff[node] * mult(xi),
            ParaSymbol::General(f) => f(node, xi),
        }
    }
}

/// Diagnostics of one paradifferential application.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParaReport {
    /// Shells `j` that carried frequencies of `u`.
    pub shells: Vec<i32>,
    /// Shells whose upper edge `2^{j+1}` passes the Nyquist frequency.
    pub truncated_shells: Vec<i32>,
    /// Largest `|a|` over the grid and the frequencies of `u`.
    pub symbol_sup: f64,
    /// `‖T_a u‖₂ / (sup|a| ‖u‖₂)`.
    pub bound_constant: f64,
}

fn lowpass_field(grid: &Grid, values: Vec<C64>, cutoff: f64) -> Vec<C64> {
    let f = SampledField::new(grid.clone(), values).expect("values sized to the grid");
    apply_multiplier(&f, |k| {
        let r = (k[0] * k[0] + k[1] * k[1]).sqrt() / cutoff;
        C64::new(low_pass_profile(r), 0.0)
    })
    .values
}

/// `T_a u = Σ_j Op(S_{j−3} a) Δ_j u` where `S_{j−3}` low-passes the
/// coefficient in `x` at `2^{j−3}` and `Δ_j` is the dyadic piece at `2^j`.
pub fn paradiff_apply(a: &ParaSymbol, u: &SampledField) -> Result<(SampledField, ParaReport)> {
    let grid = &u.grid;
    let d = grid.dim();
    let spec = fourier_forward(u);
    let npts = grid.len();
    let active: Vec<usize> = (0..npts).filter(|&k| spec.values[k].norm() > 0.0).collect();
    let mut shells: Vec<i32> = Vec::new();
    for j in dyadic_range(grid) {
        if active
            .iter()
            .any(|&k| dyadic_piece_profile(grid.wavevector_norm(k), j) > 0.0 && spec.values[k].norm() > 1e-14)
        {
            shells.push(j);
        }
    }
    let truncated_shells = shells
        .iter()
        .copied()
        .filter(|&j| 2f64.powi(j + 1) > grid.nyquist())
        .collect();
    let symbol_sup = active
        .par_iter()
        .map(|&k| {
            let xi = grid.wavevector(k);
            (0..npts)
                .map(|n| a.eval(n, &xi[..d]).norm())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let out_values: Vec<C64> = match a {
        ParaSymbol::Multiplier(h) => apply_multiplier(u, |k| {
            if k[0] == 0.0 && k[1] == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                h(&k[..d])
            }
        })
        .values,
        ParaSymbol::Separable { coeff, mult } => {
            let mut acc = vec![C64::new(0.0, 0.0); npts];
            for &j in &shells {
                let mut s = spec.clone();
                s.apply(|k| {
                    let r = (k[0] * k[0] + k[1] * k[1]).sqrt();
                    mult(&k[..d]) * dyadic_piece_profile(r, j)
                });
                let piece = fourier_inverse(&s);
                let c = lowpass_field(grid, coeff.clone(), 2f64.powi(j - PARAPRODUCT_GAP - 1));
                for ((o, p), cv) in acc.iter_mut().zip(&piece.values).zip(&c) {
                    *o += cv * p;
                }
            }
            acc
        }
        ParaSymbol::General(_) => {
            // Kohn-Nirenberg sum over frequencies, with u = Σ_k c_k e^{ix·ξ_k}.
            let norm = (npts as f64).sqrt();
            let points: Vec<[f64; 2]> = (0..npts).map(|n| grid.point(n)).collect();
            active
                .par_iter()
                .filter(|&&k| grid.wavevector_norm(k) > 0.0)
                .map(|&k| {
                    let xi = grid.wavevector(k);
                    let r = grid.wavevector_norm(k);
                    let ck = spec.values[k] / norm;
                    let samples: Vec<C64> = (0..npts).map(|n| a.eval(n, &xi[..d])).collect();
                    let mut w = vec![C64::new(0.0, 0.0); npts];
                    for &j in &shells {
                        let psi = dyadic_piece_profile(r, j);
                        if psi == 0.0 {
                            continue;
                        }
                        let c = lowpass_field(grid, samples.clone(), 2f64.powi(j - PARAPRODUCT_GAP - 1));
                        for (o, v) in w.iter_mut().zip(&c) {
                            *o += v * psi;
                        }
                    }
                    w.iter()
                        .zip(&points)
                        .map(|(wv, x)| wv * ck * C64::from_polar(1.0, x[0] * xi[0] + x[1] * xi[1]))
                        .collect::<Vec<C64>>()
                })
                .reduce(
                    || vec![C64::new(0.0, 0.0); npts],
                    |mut acc, v| {
                        acc.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                        acc
                    },
                )
        }
    };
    let out = SampledField::new(grid.clone(), out_values)?.with_band(u.band);
    let un = u.l2_norm();
    let bound_constant = if un > 0.0 && symbol_sup > 0.0 {
        out.l2_norm() / (symbol_sup * un)
    } else {
        0.0
    };
    Ok((
        out,
        ParaReport {
            shells,
            truncated_shells,
            symbol_sup,
            bound_constant,
        },
    ))
}

/// `T_p` with the principal part of `p`.
pub fn p_symbol(s: &SurfaceData) -> ParaSymbol {
    let w = s.symbols();
    ParaSymbol::Separable {
        coeff: (0..s.grid.len()).map(|n| C64::new(w.q(n).powf(2.5), 0.0)).collect(),
        mult: Arc::new(|xi| C64::new(dot(xi, xi).sqrt().sqrt(), 0.0)),
    }
}

pub fn q_symbol(s: &SurfaceData) -> ParaSymbol {
    let w = s.symbols();
    ParaSymbol::function(&(0..s.grid.len()).map(|n| w.q(n)).collect::<Vec<_>>())
}

/// `T_γ`; separable in d = 1 where `γ = q³ᐟ²|ξ|³ᐟ²`.
pub fn gamma_symbol(s: &SurfaceData) -> ParaSymbol {
    let w = s.symbols();
    if s.grid.dim() == 1 {
        ParaSymbol::Separable {
            coeff: (0..s.grid.len()).map(|n| C64::new(w.q(n).powf(1.5), 0.0)).collect(),
            mult: Arc::new(|xi| C64::new(xi[0].abs().powf(1.5), 0.0)),
        }
    } else {
        ParaSymbol::General(Arc::new(move |n, xi| C64::new(w.gamma(n, xi), 0.0)))
    }
}

/// `u = T_p η + i T_q(ψ − T_B η)`.
pub fn good_unknown(s: &SurfaceData) -> Result<SampledField> {
    let g = &s.grid;
    let eta = SampledField::from_real(g, &s.eta)?;
    let psi = SampledField::from_real(g, &s.psi)?;
    let (tp_eta, _) = paradiff_apply(&p_symbol(s), &eta)?;
    let (tb_eta, _) = paradiff_apply(&ParaSymbol::function(&s.b), &eta)?;
    let (tq, _) = paradiff_apply(&q_symbol(s), &psi.sub(&tb_eta)?)?;
    tp_eta.add(&tq.scale(C64::new(0.0, 1.0)))
}

/// `T_V · ∇u`.
pub fn transport_term(s: &SurfaceData, u: &SampledField) -> Result<SampledField> {
    let g = &s.grid;
    let mut acc = SampledField::zeros(g);
    for axis in 0..g.dim() {
        let du = apply_multiplier(u, |k| C64::new(0.0, k[axis]));
        let comp: Vec<f64> = s.v.iter().map(|v| v[axis]).collect();
        let (t, _) = paradiff_apply(&ParaSymbol::function(&comp), &du)?;
        acc = acc.add(&t)?;
    }
    Ok(acc.with_band(u.band))
}

/// `i T_γ u`.
pub fn dispersive_term(s: &SurfaceData, u: &SampledField) -> Result<SampledField> {
    let (t, _) = paradiff_apply(&gamma_symbol(s), u)?;
    Ok(t.scale(C64::new(0.0, 1.0)))
}

/// `T_V · ∇u + i T_γ u`.
pub fn transport_dispersive_rhs(s: &SurfaceData, u: &SampledField) -> Result<SampledField> {
    transport_term(s, u)?.add(&dispersive_term(s, u)?)
}

/// `sup_ξ ‖∂_ξ^β(γ(·, ξ) φ(|ξ|/λ))‖_{Ċ^s_x}` over `samples` points of the
/// band `[λ/2, 2λ]`, d = 1, for `β = 0..=beta_max`; `s = 0` takes the sup
/// norm in `x`.
pub fn gamma_band_norms(
    surface: &SurfaceData,
    lambda: f64,
    beta_max: usize,
    s: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if surface.grid.dim() != 1 {
        return Err(Error::InvalidParameter("band norms need d = 1".into()));
    }
    if beta_max > 2 {
        return Err(Error::InvalidParameter("beta_max is at most 2".into()));
    }
    let w = surface.symbols();
    let g = &surface.grid;
    let h = 1e-3 * lambda;
    let banded = |n: usize, xi: f64| w.gamma(n, &[xi]) * lp_bump(xi.abs() / lambda);
    let xis: Vec<f64> = (0..samples.max(2))
        .map(|i| lambda * 0.5 * 4f64.powf(i as f64 / (samples.max(2) - 1) as f64))
        .collect();
    let mut out = vec![0.0f64; beta_max + 1];
    for xi in xis {
        for (beta, o) in out.iter_mut().enumerate() {
            let slice: Vec<f64> = (0..g.len())
                .map(|n| match beta {
                    0 => banded(n, xi),
                    1 => (banded(n, xi + h) - banded(n, xi - h)) / (2.0 * h),
                    _ => (banded(n, xi + h) - 2.0 * banded(n, xi) + banded(n, xi - h)) / (h * h),
                })
                .collect();
            let v = if s == 0.0 {
                slice.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            } else {
                holder_seminorm(&SampledField::from_real(g, &slice)?, s)
            };
            *o = o.max(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::banded_noise;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ripple(grid: &Grid, eps: f64, k0: f64) -> Vec<f64> {
        grid.coords().iter().map(|x| eps * (k0 * x).cos()).collect()
    }

    #[test]
    fn flat_surface_symbols() {
        let g = Grid::line(64, 2.0 * std::f64::consts::PI).unwrap();
        let s = SurfaceData::flat(&g, vec![0.0; 64]).unwrap().symbols();
        for xi in [0.5, 3.0, -7.25] {
            let a = f64::abs(xi);
            assert!((s.lambda(5, &[xi]) - a).abs() < 1e-12);
            assert!((s.ell(5, &[xi]) - a * a).abs() < 1e-12 * a * a);
            assert!((s.gamma(5, &[xi]) - a.powf(1.5)).abs() < 1e-12 * a.powf(1.5));
            assert!((s.p(5, &[xi]) - a.sqrt()).abs() < 1e-12);
            assert_eq!(s.q(5), 1.0);
        }
    }

    #[test]
    fn sloped_line_symbols() {
        let g = Grid::line(64, 2.0 * std::f64::consts::PI).unwrap();
        let alpha = 0.7f64;
        let s = SurfaceData::flat(&g, vec![0.0; 64])
            .unwrap()
            .with_slope([alpha, 0.0])
            .symbols();
        let xi = 3.5f64;
        assert_eq!(s.lambda(0, &[xi]), xi);
        let expect = (1.0 + alpha * alpha).powf(-0.75) * xi.powf(1.5);
        assert!((s.gamma(0, &[xi]) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn closed_forms_match_definitions_in_2d() {
        let g = Grid::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        let eta: Vec<f64> = (0..g.len())
            .map(|i| {
                let p = g.point(i);
                0.3 * p[0].sin() * (2.0 * p[1]).cos()
            })
            .collect();
        let n = g.len();
        let surf = SurfaceData::new(&g, eta, vec![0.0; n], vec![[0.0; 2]; n], vec![0.0; n]).unwrap();
        let s = surf.symbols();
        for node in [0, 17, 100, 255] {
            let xi = [2.0, -3.0];
            let (l, e) = s.lambda_ell_direct(node, &xi);
            assert!((s.lambda(node, &xi) - l).abs() < 1e-12 * l);
            assert!((s.ell(node, &xi) - e).abs() < 1e-12 * e);
            assert!(s.lambda(node, &xi) >= (13f64).sqrt() * (1.0 - 1e-15));
            let gm = s.gamma(node, &xi);
            assert!((gm * gm - s.ell(node, &xi) * s.lambda(node, &xi)).abs() < 1e-12 * gm * gm);
            let two = [4.0, -6.0];
            assert!((s.gamma(node, &two) - 2f64.powf(1.5) * gm).abs() < 1e-10 * gm);
        }
    }

    #[test]
    fn constant_symbol_removes_mean_only() {
        let g = Grid::line(256, 2.0 * std::f64::consts::PI).unwrap();
        let u = SampledField::from_fn(&g, |p| C64::new(1.0 + (5.0 * p[0]).sin(), 0.0));
        let (t, _) = paradiff_apply(&ParaSymbol::constant(2.0), &u).unwrap();
        for (a, x) in t.values.iter().zip(g.coords()) {
            assert!((a - C64::new(2.0 * (5.0 * x).sin(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn general_path_agrees_with_separable() {
        let g = Grid::line(128, 2.0 * std::f64::consts::PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = banded_noise(&g, 16.0, &mut rng).unwrap();
        let c: Vec<f64> = g.coords().iter().map(|x| 1.0 + 0.3 * (3.0 * x).cos()).collect();
        let sep = ParaSymbol::Separable {
            coeff: c.iter().map(|v| C64::new(*v, 0.0)).collect(),
            mult: Arc::new(|xi| C64::new(xi[0].abs().sqrt(), 0.0)),
        };
        let c2 = c.clone();
        let gen = ParaSymbol::General(Arc::new(move |n, xi| C64::new(c2[n] * xi[0].abs().sqrt(), 0.0)));
        let (a, _) = paradiff_apply(&sep, &u).unwrap();
        let (b, rep) = paradiff_apply(&gen, &u).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-10 * a.l2_norm());
        assert!(rep.bound_constant <= 1.5);
    }

    #[test]
    fn flat_gamma_is_three_halves_derivative() {
        let g = Grid::line(512, 2.0 * std::f64::consts::PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = banded_noise(&g, 32.0, &mut rng).unwrap();
        let surf = SurfaceData::flat(&g, vec![0.0; 512]).unwrap();
        let lhs = dispersive_term(&surf, &u).unwrap();
        let rhs = apply_multiplier(&u, |k| C64::new(0.0, k[0].abs().powf(1.5)));
        assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-8 * rhs.l2_norm());
    }

    #[test]
    fn constant_transport_is_derivative() {
        let g = Grid::line(256, 2.0 * std::f64::consts::PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = banded_noise(&g, 16.0, &mut rng).unwrap();
        let mut surf = SurfaceData::flat(&g, vec![0.0; 256]).unwrap();
        surf.v = vec![[1.5, 0.0]; 256];
        let lhs = transport_term(&surf, &u).unwrap();
        let rhs = apply_multiplier(&u, |k| C64::new(0.0, 1.5 * k[0]));
        assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-8 * rhs.l2_norm());
    }

    #[test]
    fn good_unknown_on_flat_surface() {
        let g = Grid::line(256, 2.0 * std::f64::consts::PI).unwrap();
        let psi: Vec<f64> = g.coords().iter().map(|x| 0.5 + (4.0 * x).cos()).collect();
        let surf = SurfaceData::flat(&g, psi).unwrap();
        let u = good_unknown(&surf).unwrap();
        for (v, x) in u.values.iter().zip(g.coords()) {
            assert!((v - C64::new(0.0, (4.0 * x).cos())).norm() < 1e-12);
        }
    }

    #[test]
    fn good_unknown_is_linear() {
        let g = Grid::line(128, 2.0 * std::f64::consts::PI).unwrap();
        let eta = ripple(&g, 0.05, 2.0);
        let n = g.len();
        let psi_a: Vec<f64> = g.coords().iter().map(|x| (6.0 * x).sin()).collect();
        let psi_b: Vec<f64> = g.coords().iter().map(|x| (9.0 * x).cos()).collect();
        let make = |psi: Vec<f64>| {
            good_unknown(&SurfaceData::new(&g, eta.clone(), psi, vec![[0.0; 2]; n], vec![0.0; n]).unwrap())
                .unwrap()
        };
        let sum: Vec<f64> = psi_a.iter().zip(&psi_b).map(|(a, b)| a + b).collect();
        let lhs = make(sum);
        let zero = make(vec![0.0; n]);
        let rhs = make(psi_a).add(&make(psi_b)).unwrap().sub(&zero).unwrap();
        assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-12 * lhs.l2_norm());
    }

    #[test]
    fn small_ripple_is_quadratically_close() {
        let g = Grid::line(256, 2.0 * std::f64::consts::PI).unwrap();
        let n = g.len();
        let err = |eps: f64| {
            let eta = ripple(&g, eps, 8.0);
            let surf = SurfaceData::new(&g, eta.clone(), vec![0.0; n], vec![[0.0; 2]; n], vec![0.0; n]).unwrap();
            let u = good_unknown(&surf).unwrap();
            let e = SampledField::from_real(&g, &eta).unwrap();
            let half = apply_multiplier(&e, |k| C64::new(k[0].abs().sqrt(), 0.0));
            u.sub(&half).unwrap().l2_norm()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn band_norms_scale_like_gamma() {
        let g = Grid::line(128, 2.0 * std::f64::consts::PI).unwrap();
        let n = g.len();
        let surf = SurfaceData::new(&g, ripple(&g, 0.1, 3.0), vec![0.0; n], vec![[0.0; 2]; n], vec![0.0; n]).unwrap();
        let a = gamma_band_norms(&surf, 16.0, 2, 0.0, 33).unwrap();
        let b = gamma_band_norms(&surf, 64.0, 2, 0.0, 33).unwrap();
        for beta in 0..=2 {
            let slope = (b[beta] / a[beta]).ln() / 4f64.ln();
            assert!((slope - (1.5 - beta as f64)).abs() < 0.1, "{beta}: {slope}");
        }
    }
}
