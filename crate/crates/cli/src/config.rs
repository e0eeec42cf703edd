//! Run configuration: TOML file merged with command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use phaselab::estimates::Exponent;
use phaselab::symbols::{
    harmonic_oscillator, make_fractional, make_perturbed, power, zero, Symbol,
};

use crate::CliError;

/// Symbol family selected by `kind`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolSpec {
    /// `fractional`, `power`, `perturbed`, `oscillator` or `zero`.
    pub kind: Option<String>,
    pub m: Option<f64>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub amplitude: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub l: Option<f64>,
}

/// Everything a run may read; unset values fall back to per-command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub symbol: SymbolSpec,
    pub t_end: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub mu: Option<f64>,
    pub n_beta: Option<usize>,
    pub sigma: Option<f64>,
    pub r: Option<String>,
    pub epsilon: Option<String>,
    pub p: Option<String>,
    pub q: Option<String>,
    pub x0: Option<f64>,
    pub xi0: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub count: Option<usize>,
    pub band: Option<f64>,
    pub cells: Option<usize>,
    pub budget: Option<String>,
    pub ripple: Option<f64>,
    pub ripple_k: Option<f64>,
    pub period: Option<f64>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Spatial dimension.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Grid points per axis.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Grid period.
    #[arg(long, global = true)]
    pub l: Option<f64>,
    /// Symbol kind: fractional, power, perturbed, oscillator, zero.
    #[arg(long, global = true)]
    pub symbol: Option<String>,
    #[arg(long, global = true)]
    pub m: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<f64>,
    /// Comma-separated frequency list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long = "n-beta", global = true)]
    pub n_beta: Option<usize>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Regularity index, e.g. `2` or `5/2`.
    #[arg(long, global = true)]
    pub r: Option<String>,
    #[arg(long, global = true)]
    pub epsilon: Option<String>,
    /// Time exponent, e.g. `4` or `inf`.
    #[arg(long, global = true)]
    pub p: Option<String>,
    /// Space exponent, e.g. `inf`.
    #[arg(long, global = true)]
    pub q: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub xi0: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub count: Option<usize>,
    #[arg(long, global = true)]
    pub band: Option<f64>,
    #[arg(long, global = true)]
    pub cells: Option<usize>,
    /// Partition densities: uniform or synthetic.
    #[arg(long, global = true)]
    pub budget: Option<String>,
    #[arg(long, global = true)]
    pub ripple: Option<f64>,
    #[arg(long = "ripple-k", global = true)]
    pub ripple_k: Option<f64>,
    /// Fixed torus period for scans.
    #[arg(long, global = true)]
    pub period: Option<f64>,
    /// Largest evolution time step.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Snapshot stride for `evolve`.
    #[arg(long, global = true)]
    pub stride: Option<usize>,
}

macro_rules! take {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = Some(v);
        }
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        take!(c.out, o.out.clone());
        take!(c.seed, o.seed);
        take!(c.grid.d, o.d);
        take!(c.grid.n, o.n);
        take!(c.grid.l, o.l);
        take!(c.symbol.kind, o.symbol.clone());
        take!(c.symbol.m, o.m);
        take!(c.symbol.lambda, o.lambda);
        take!(c.symbol.rho, o.rho);
        take!(c.symbol.amplitude, o.amplitude);
        take!(c.t_end, o.t_end);
        take!(c.lambdas, o.lambdas.clone());
        take!(c.mu, o.mu);
        take!(c.n_beta, o.n_beta);
        take!(c.sigma, o.sigma);
        take!(c.r, o.r.clone());
        take!(c.epsilon, o.epsilon.clone());
        take!(c.p, o.p.clone());
        take!(c.q, o.q.clone());
        take!(c.x0, o.x0);
        take!(c.xi0, o.xi0);
        take!(c.radii, o.radii.clone());
        take!(c.count, o.count);
        take!(c.band, o.band);
        take!(c.cells, o.cells);
        take!(c.budget, o.budget.clone());
        take!(c.ripple, o.ripple);
        take!(c.ripple_k, o.ripple_k);
        take!(c.period, o.period);
        take!(c.dt, o.dt);
        take!(c.stride, o.stride);
        c.validate()?;
        Ok(c)
    }

    /// Range checks that need no computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let positive = [
            ("grid.l", self.grid.l),
            ("t_end", self.t_end),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("band", self.band),
            ("period", self.period),
            ("dt", self.dt),
            ("symbol.lambda", self.symbol.lambda),
            ("symbol.m", self.symbol.m),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if let Some(d) = self.grid.d {
            if !(1..=2).contains(&d) {
                return bad(format!("grid.d must be 1 or 2, got {d}"));
            }
        }
        if let Some(n) = self.grid.n {
            if n < 8 || !n.is_power_of_two() {
                return bad(format!("grid.n must be a power of two >= 8, got {n}"));
            }
        }
        if let Some(ls) = &self.lambdas {
            if ls.is_empty() || ls.iter().any(|l| !(l.is_finite() && *l >= 1.0)) {
                return bad("lambdas must be a nonempty list of values >= 1".into());
            }
        }
        if let Some(m) = self.mu {
            if m < 1.0 {
                return bad(format!("mu must be at least 1, got {m}"));
            }
        }
        if let Some(s) = self.sigma {
            if s > 1.0 {
                return bad(format!("sigma must lie in (0, 1], got {s}"));
            }
        }
        if let Some(k) = &self.symbol.kind {
            if !["fractional", "power", "perturbed", "oscillator", "zero"].contains(&k.as_str()) {
                return bad(format!("unknown symbol kind {k:?}"));
            }
        }
        if let Some(b) = &self.budget {
            if !["uniform", "synthetic"].contains(&b.as_str()) {
                return bad(format!("unknown budget kind {b:?}"));
            }
        }
        for e in [&self.p, &self.q].into_iter().flatten() {
            e.parse::<Exponent>()
                .map_err(|err| CliError::Config(err.to_string()))?;
        }
        for r in [&self.r, &self.epsilon].into_iter().flatten() {
            parse_rational(r)?;
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("phaselab-out"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.grid.d.unwrap_or(1)
    }

    /// Symbol at frequency `lambda` (the configured one when `None`).
    pub fn symbol_at(&self, lambda: Option<f64>, default_kind: &str) -> Result<Symbol, CliError> {
        let s = &self.symbol;
        let kind = s.kind.as_deref().unwrap_or(default_kind);
        let m = s.m.unwrap_or(1.5);
        let lam = lambda.or(s.lambda).unwrap_or(64.0);
        let d = self.dim();
        let sym = match kind {
            "fractional" => make_fractional(d, m, lam),
            "power" => power(d, m),
            "perturbed" => make_perturbed(
                d,
                m,
                lam,
                s.rho.unwrap_or(1.5),
                s.amplitude.unwrap_or(0.1),
            ),
            "oscillator" => harmonic_oscillator(d),
            "zero" => zero(d),
            other => return Err(CliError::Config(format!("unknown symbol kind {other:?}"))),
        };
        sym.map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn parse_rational(s: &str) -> Result<num_rational::Rational64, CliError> {
    let bad = || CliError::Config(format!("cannot parse rational {s:?}"));
    let parse = |t: &str| t.trim().parse::<i64>().map_err(|_| bad());
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse(d)?;
            if d == 0 {
                return Err(bad());
            }
            Ok(num_rational::Rational64::new(parse(n)?, d))
        }
        None => Ok(num_rational::Rational64::from_integer(parse(s)?)),
    }
}
