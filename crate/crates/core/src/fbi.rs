//! FBI phase-space transform
//!
//! `(Tf)(x, ξ) = 2^{-d/2} π^{-3d/4} ∫ e^{-(x-y)²/2} e^{iξ(x-y)} f(y) dy`
//!
//! discretised on the torus as a Gaussian-windowed DFT per x-slice: x runs over
//! the nodes of the field's grid and ξ over its full dual lattice. The window is
//! summed over the neighbouring periodic images. With this layout the discrete
//! transform is an isometry up to the Riemann-sum error of `∫ e^{-s²} ds`, which
//! is spectrally small once `Δx ≤ 1/4`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{check_same_grid, FftPlan, Grid, SampledField, C64};

/// Largest grid spacing that resolves the unit-width Gaussian window.
pub const MAX_SPACING: f64 = 0.25;

/// Values of a phase-space function on the (x, ξ) lattice of a 1-d grid,
/// stored x-major with ξ in FFT bin order.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceField {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl PhaseSpaceField {
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn at(&self, ix: usize, ik: usize) -> C64 {
        self.values[ix * self.n() + ik]
    }

    /// `dx dξ` weight of one lattice cell.
    pub fn cell(&self) -> f64 {
        self.grid.spacing() * self.grid.freq_spacing()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.cell() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Lattice point `(x, ξ)` of largest `|F|`.
    pub fn argmax(&self) -> (f64, f64) {
        let n = self.n();
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc });
        (self.grid.coord(i / n), self.grid.freq(i % n))
    }

    fn mass_split(&self, center: (f64, f64), radius: f64) -> (f64, f64) {
        let n = self.n();
        let mut inside = 0.0;
        let mut outside = 0.0;
        for ix in 0..n {
            let dx = self.grid.wrap(self.grid.coord(ix) - center.0);
            for ik in 0..n {
                let dk = self.grid.freq(ik) - center.1;
                let m = self.values[ix * n + ik].norm_sqr();
                if dx * dx + dk * dk <= radius * radius {
                    inside += m;
                } else {
                    outside += m;
                }
            }
        }
        (inside, outside)
    }

    /// Fraction of `|F|²` mass in the Euclidean ball of radius `radius` about
    /// `center`; distances in x are periodic.
    pub fn mass_fraction(&self, center: (f64, f64), radius: f64) -> f64 {
        let (i, o) = self.mass_split(center, radius);
        if i + o == 0.0 {
            0.0
        } else {
            i / (i + o)
        }
    }

    /// Complement of [`Self::mass_fraction`], summed directly so that tiny tails
    /// keep their relative precision.
    pub fn mass_outside(&self, center: (f64, f64), radius: f64) -> f64 {
        let (i, o) = self.mass_split(center, radius);
        if i + o == 0.0 {
            0.0
        } else {
            o / (i + o)
        }
    }

    /// CSV rows `x, xi, abs2` with ξ in ascending order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "xi", "abs2"])?;
        let n = self.n();
        for ix in 0..n {
            for j in 0..n {
                let ik = (j + n / 2) % n;
                out.write_record(&[
                    format!("{:.12e}", self.grid.coord(ix)),
                    format!("{:.12e}", self.grid.freq(ik)),
                    format!("{:.12e}", self.at(ix, ik).norm_sqr()),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Binary layout: `u32 d, u32 N_x, f64 L, u32 N_xi, f64 dxi`, then x-major
    /// `(re, im)` doubles with ξ in FFT bin order; little-endian.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.n() as u32).to_le_bytes())?;
        w.write_all(&self.grid.period().to_le_bytes())?;
        w.write_all(&(self.n() as u32).to_le_bytes())?;
        w.write_all(&self.grid.freq_spacing().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }
}

fn normalisation(dim: usize) -> f64 {
    2f64.powf(-(dim as f64) / 2.0) * PI.powf(-3.0 * dim as f64 / 4.0)
}

fn check_resolution(grid: &Grid) -> Result<()> {
    if grid.dim() != 1 {
        return Err(Error::InvalidParameter(
            "the discrete FBI transform is implemented for d = 1 only".into(),
        ));
    }
    if grid.spacing() > MAX_SPACING {
        return Err(Error::UnderResolved {
            spacing: grid.spacing(),
            required: MAX_SPACING,
        });
    }
    Ok(())
}

/// Periodised Gaussian window at the centred offsets of the grid.
fn window(grid: &Grid) -> Vec<f64> {
    let l = grid.period();
    (0..grid.n())
        .map(|m| {
            let s = grid.coord(m);
            (-1..=1).map(|p| (-(s + p as f64 * l).powi(2) / 2.0).exp()).sum()
        })
        .collect()
}

fn parity(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn fbi_forward(f: &SampledField) -> Result<PhaseSpaceField> {
    let grid = &f.grid;
    check_resolution(grid)?;
    let n = grid.n();
    let w = window(grid);
    let plan = FftPlan::new(grid);
    let scale = normalisation(1) * grid.spacing();
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(a, row)| {
        // Slice h(s_m) = g(s_m) f(x_a + s_m), s_m = coord(m).
        for m in 0..n {
            let src = (a + m + n - n / 2) % n;
            row[m] = f.values[src] * w[m];
        }
        plan.forward(row);
        for (k, v) in row.iter_mut().enumerate() {
            *v *= parity(k) * scale;
        }
    });
    Ok(PhaseSpaceField {
        grid: grid.clone(),
        values,
    })
}

/// `T*F` on `target`, which must be the grid `F` was built on.
pub fn fbi_adjoint(big_f: &PhaseSpaceField, target: &Grid) -> Result<SampledField> {
    check_same_grid(&big_f.grid, target)?;
    check_resolution(target)?;
    let grid = target;
    let n = grid.n();
    let w = window(grid);
    let plan = FftPlan::new(grid);
    let scale = normalisation(1) * grid.spacing() * grid.freq_spacing();
    // G_a(s_m) = Σ_k e^{iξ_k s_m} F(a, k), then scatter g(s_m) G_a(s_m) to y = x_a + s_m.
    let slices: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut row: Vec<C64> = (0..n).map(|k| big_f.at(a, k) * parity(k)).collect();
            plan.inverse(&mut row);
            row
        })
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (a, row) in slices.iter().enumerate() {
        for m in 0..n {
            let dst = (a + m + n - n / 2) % n;
            out[dst] += row[m] * w[m];
        }
    }
    out.iter_mut().for_each(|v| *v *= scale);
    SampledField::new(grid.clone(), out)
}

/// Free-function form of [`PhaseSpaceField::mass_fraction`].
pub fn mass_fraction(big_f: &PhaseSpaceField, center: (f64, f64), radius: f64) -> f64 {
    big_f.mass_fraction(center, radius)
}

/// `L²`-normalised coherent state `π^{-1/4} e^{-(x-x₀)²/2} e^{iξ₀x}` (periodic in x).
pub fn coherent_state(grid: &Grid, x0: f64, xi0: f64) -> SampledField {
    SampledField::from_fn(grid, |p| {
        let s = grid.wrap(p[0] - x0);
        C64::from_polar(PI.powf(-0.25) * (-s * s / 2.0).exp(), xi0 * p[0])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::banded_noise;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::line(512, 64.0).unwrap()
    }

    #[test]
    fn unit_gaussian_is_preserved() {
        let g = grid();
        let f = coherent_state(&g, 0.0, 0.0);
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
        let tf = fbi_forward(&f).unwrap();
        assert!((tf.l2_norm() - 1.0).abs() < 1e-3);
        let back = fbi_adjoint(&tf, &g).unwrap();
        assert!(back.sub(&f).unwrap().l2_norm() < 1e-3);
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = grid();
        let f = PhaseSpaceField {
            grid: g.clone(),
            values: vec![C64::new(0.0, 0.0); g.n() * g.n()],
        };
        assert_eq!(fbi_adjoint(&f, &g).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn modulated_gaussian_peaks_at_its_frequency() {
        let g = grid();
        let xi0 = 7.3;
        let f = coherent_state(&g, 0.0, xi0);
        let tf = fbi_forward(&f).unwrap();
        let (x, xi) = tf.argmax();
        // Direct quadrature of the defining integral at the reported peak and
        // its lattice neighbours in ξ.
        let quad = |x: f64, xi: f64| -> f64 {
            let c = normalisation(1);
            let mut acc = C64::new(0.0, 0.0);
            let h = 1e-3;
            let mut y: f64 = -20.0;
            while y <= 20.0 {
                let fy = C64::from_polar(PI.powf(-0.25) * (-y * y / 2.0).exp(), xi0 * y);
                acc += C64::from_polar((-(x - y).powi(2) / 2.0).exp(), xi * (x - y)) * fy * h;
                y += h;
            }
            (acc * c).norm()
        };
        let dk = g.freq_spacing();
        assert!(x.abs() < 1e-12);
        assert!((xi - xi0).abs() <= dk / 2.0 + 1e-12);
        let peak = quad(x, xi);
        assert!(peak > quad(x, xi - dk) && peak > quad(x, xi + dk));
        assert!((peak - tf.values[(g.n() / 2) * g.n() + (xi / dk).round() as usize].norm()).abs() < 1e-6);
    }

    #[test]
    fn coherent_state_mass_within_five() {
        let g = grid();
        let (x0, xi0) = (3.0, -4.0);
        let tf = fbi_forward(&coherent_state(&g, x0, xi0)).unwrap();
        // |Tf|² is a unit Gaussian e^{-r²/2}/(2π) in (x, ξ): mass within R is 1 - e^{-R²/2}.
        let oracle = 1.0 - (-12.5f64).exp();
        let got = tf.mass_fraction((x0, xi0), 5.0);
        assert!(got >= 0.99);
        assert!((got - oracle).abs() < 1e-3, "{got} vs {oracle}");
        assert!(tf.mass_fraction((x0 + 30.0, xi0 + 30.0), 5.0) <= 0.01);
        let f = tf.mass_fraction((x0, xi0), 2.0);
        assert!((f - (1.0 - (-2.0f64).exp())).abs() < 1e-2);
    }

    #[test]
    fn delta_like_phase_space_field() {
        let g = grid();
        let mut values = vec![C64::new(0.0, 0.0); g.n() * g.n()];
        values[100 * g.n() + 7] = C64::new(2.0, 0.0);
        let f = PhaseSpaceField { grid: g.clone(), values };
        let c = (g.coord(100), g.freq(7));
        assert_eq!(f.mass_fraction(c, g.spacing()), 1.0);
    }

    #[test]
    fn translation_and_modulation_covariance() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = banded_noise(&g, 6.0, &mut rng).unwrap();
        let base = fbi_forward(&f).unwrap();
        let n = g.n();
        let shift = 24;
        let translated = SampledField::new(
            g.clone(),
            (0..n).map(|j| f.values[(j + n - shift) % n]).collect(),
        )
        .unwrap();
        let tt = fbi_forward(&translated).unwrap();
        let q = 9;
        let xi0 = q as f64 * g.freq_spacing();
        let modulated = SampledField::from_fn(&g, |x| C64::from_polar(1.0, xi0 * x[0]));
        let modulated = SampledField::new(
            g.clone(),
            modulated.values.iter().zip(&f.values).map(|(a, b)| a * b).collect(),
        )
        .unwrap();
        let tm = fbi_forward(&modulated).unwrap();
        for ix in (0..n).step_by(7) {
            for ik in (0..n).step_by(5) {
                let b = base.at(ix, ik).norm();
                assert!((tt.at((ix + shift) % n, ik).norm() - b).abs() < 1e-12);
                assert!((tm.at(ix, (ik + q) % n).norm() - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_coarse_grids_and_mismatch() {
        let coarse = Grid::line(64, 64.0).unwrap();
        let f = SampledField::zeros(&coarse);
        assert!(matches!(fbi_forward(&f), Err(Error::UnderResolved { .. })));
        let g = grid();
        let tf = fbi_forward(&SampledField::zeros(&g)).unwrap();
        let other = Grid::line(512, 32.0).unwrap();
        assert!(matches!(fbi_adjoint(&tf, &other), Err(Error::GridMismatch(_))));
        let plane = Grid::new(2, 256, 32.0).unwrap();
        assert!(fbi_forward(&SampledField::zeros(&plane)).is_err());
    }
}
