//! Greedy maximal time partition under forcing and symbol budgets, with an
//! independent verifier and the count certificate `μ ≤ k ≲ μ`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{holder_seminorm, SampledField};
use crate::symbols::{x_grid_for, xi_derivative_slice, Symbol};

/// Relative slack granted to every budget comparison.
pub const BUDGET_TOL: f64 = 1e-12;

/// Smallest accepted number of time cells.
pub const MIN_CELLS: usize = 1000;

/// Default largest `|β|` in the symbol budgets.
pub const DEFAULT_N_BETA: usize = 2;

/// Budget densities on a uniform grid of `[0, T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetDensity {
    pub t_end: f64,
    pub lambda: f64,
    pub m: f64,
    /// `F(t) = ‖f(t)‖₂` at the `cells + 1` nodes.
    pub forcing: Vec<f64>,
    /// `g_β(t)` at the nodes, indexed by `|β| = 0..=N`.
    pub symbol: Vec<Vec<f64>>,
}

/// One budget: the forcing budget or the symbol budget of order `|β|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Forcing,
    Symbol(usize),
}

impl Budget {
    pub fn label(&self) -> String {
        match self {
            Budget::Forcing => "forcing".into(),
            Budget::Symbol(b) => format!("symbol[|beta|={b}]"),
        }
    }
}

fn prefix_trapezoid(vals: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in vals.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

impl BudgetDensity {
    pub fn new(t_end: f64, lambda: f64, m: f64, forcing: Vec<f64>, symbol: Vec<Vec<f64>>) -> Result<Self> {
        let b = Self {
            t_end,
            lambda,
            m,
            forcing,
            symbol,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.lambda >= 1.0 && self.m > 0.0) {
            return Err(Error::InvalidParameter(
                "need T > 0, lambda >= 1 and m > 0".into(),
            ));
        }
        let nodes = self.forcing.len();
        if nodes < MIN_CELLS + 1 {
            return Err(Error::InvalidParameter(format!(
                "densities need at least {MIN_CELLS} cells, got {}",
                nodes.saturating_sub(1)
            )));
        }
        for (i, g) in self.symbol.iter().enumerate() {
            if g.len() != nodes {
                return Err(Error::InvalidParameter(format!(
                    "symbol density |beta|={i} has {} nodes, forcing has {nodes}",
                    g.len()
                )));
            }
        }
        let bad = std::iter::once(&self.forcing)
            .chain(&self.symbol)
            .flatten()
            .any(|v| !(v.is_finite() && *v >= 0.0));
        if bad {
            return Err(Error::InvalidParameter(
                "densities must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.forcing.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.t_end / self.cells() as f64
    }

    pub fn n_beta(&self) -> usize {
        self.symbol.len().saturating_sub(1)
    }

    pub fn node_time(&self, i: usize) -> f64 {
        if i == self.cells() {
            self.t_end
        } else {
            i as f64 * self.step()
        }
    }

    /// `λ^{2m−2} λ^{|β|−m}`, the weight of the symbol budget of order `|β|`.
    pub fn symbol_weight(&self, beta: usize) -> f64 {
        self.lambda.powf(self.m - 2.0 + beta as f64)
    }

    /// Total forcing mass `∫₀ᵀ F`.
    pub fn forcing_mass(&self) -> f64 {
        *prefix_trapezoid(&self.forcing, self.step()).last().unwrap()
    }

    /// Scaled symbol mass `λ^{2m−2} λ^{|β|−m} ∫₀ᵀ g_β`.
    pub fn symbol_mass(&self, beta: usize) -> f64 {
        self.symbol_weight(beta) * prefix_trapezoid(&self.symbol[beta], self.step()).last().unwrap()
    }

    /// Time rescaling to `[0, T/s]` with `F̃(t) = F(st)`,
    /// `g̃_β(t) = s^{1 + (2−|β|)/m} g_β(st)` and `λ̃ = s^{1/m} λ`, under which
    /// every budget fraction is unchanged.
    pub fn rescale_time(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter("time scale must be positive".into()));
        }
        let m = self.m;
        Self::new(
            self.t_end / s,
            s.powf(1.0 / m) * self.lambda,
            m,
            self.forcing.clone(),
            self.symbol
                .iter()
                .enumerate()
                .map(|(b, g)| {
                    let c = s.powf(1.0 + (2.0 - b as f64) / m);
                    g.iter().map(|v| c * v).collect()
                })
                .collect(),
        )
    }

    /// Densities of a d = 1 symbol: `g_β(t) = sup_ξ ‖∂_ξ^β a(t, ·, ξ)‖_{Ċ²_x}`
    /// over `samples_xi` geometric points of `[λ/4, 4λ]`, with the given
    /// forcing density.
    pub fn from_symbol(
        a: &Symbol,
        forcing: Vec<f64>,
        t_end: f64,
        n_beta: usize,
        samples_xi: usize,
    ) -> Result<Self> {
        if a.dim() != 1 {
            return Err(Error::InvalidParameter("symbol densities need d = 1".into()));
        }
        let lambda = a
            .band()
            .ok_or_else(|| Error::InvalidParameter("symbol has no band".into()))?;
        let nodes = forcing.len();
        if nodes < 2 {
            return Err(Error::EmptySeries("forcing density"));
        }
        let h = t_end / (nodes - 1) as f64;
        let xis: Vec<f64> = (0..samples_xi.max(1))
            .map(|i| lambda * 0.25 * 16f64.powf(i as f64 / (samples_xi.max(2) - 1) as f64))
            .collect();
        let symbol = if a.meta().x_independent {
            vec![vec![0.0; nodes]; n_beta + 1]
        } else {
            let grid = x_grid_for(a, 0.0)?;
            let rows: Vec<Vec<f64>> = (0..nodes)
                .into_par_iter()
                .map(|i| {
                    let t = i as f64 * h;
                    (0..=n_beta)
                        .map(|b| {
                            xis.iter()
                                .map(|&xi| {
                                    let (_, step) = a.default_steps(&[xi], b);
                                    let slice = xi_derivative_slice(a, t, &[xi], &[b], step, &grid);
                                    let f = SampledField::from_real(&grid, &slice)
                                        .expect("slice matches its grid");
                                    holder_seminorm(&f, 2.0)
                                })
                                .fold(0.0, f64::max)
                        })
                        .collect()
                })
                .collect();
            (0..=n_beta)
                .map(|b| rows.iter().map(|r| r[b]).collect())
                .collect()
        };
        Self::new(t_end, lambda, a.order(), forcing, symbol)
    }
}

/// Budget evaluation on node intervals via trapezoid prefix sums.
struct Ledger<'a> {
    density: &'a BudgetDensity,
    forcing_prefix: Option<Vec<f64>>,
    forcing_cap: f64,
    symbol_prefix: Vec<Vec<f64>>,
}

impl<'a> Ledger<'a> {
    fn new(density: &'a BudgetDensity, mu: f64) -> Self {
        let h = density.step();
        let fp = prefix_trapezoid(&density.forcing, h);
        let total = *fp.last().unwrap();
        let (forcing_prefix, forcing_cap) = if total > 0.0 {
            (Some(fp), total / mu)
        } else {
            (None, f64::INFINITY)
        };
        Self {
            density,
            forcing_prefix,
            forcing_cap,
            symbol_prefix: density.symbol.iter().map(|g| prefix_trapezoid(g, h)).collect(),
        }
    }

    fn budgets(&self) -> Vec<Budget> {
        let mut v = Vec::new();
        if self.forcing_prefix.is_some() {
            v.push(Budget::Forcing);
        }
        v.extend((0..self.symbol_prefix.len()).map(Budget::Symbol));
        v
    }

    /// Fraction of `budget` consumed by the node interval `[a, b]`.
    fn fraction(&self, budget: Budget, a: usize, b: usize) -> f64 {
        match budget {
            Budget::Forcing => match &self.forcing_prefix {
                Some(p) => (p[b] - p[a]) / self.forcing_cap,
                None => 0.0,
            },
            Budget::Symbol(beta) => {
                let p = &self.symbol_prefix[beta];
                let len = self.density.node_time(b) - self.density.node_time(a);
                len * self.density.symbol_weight(beta) * (p[b] - p[a])
            }
        }
    }

    fn fractions(&self, a: usize, b: usize) -> Vec<(Budget, f64)> {
        self.budgets()
            .into_iter()
            .map(|bu| (bu, self.fraction(bu, a, b)))
            .collect()
    }

    fn holds(&self, a: usize, b: usize) -> bool {
        self.budgets()
            .into_iter()
            .all(|bu| self.fraction(bu, a, b) <= 1.0 + BUDGET_TOL)
    }

    /// Budget that binds on `[a, b]`: the most exceeded budget on the
    /// one-cell extension, or the fullest budget when no extension exists.
    fn binding(&self, a: usize, b: usize) -> Budget {
        let end = if b < self.density.cells() { b + 1 } else { b };
        self.fractions(a, end)
            .into_iter()
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(bu, _)| bu)
            .unwrap_or(Budget::Symbol(0))
    }
}

/// Budget usage of one interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalBudget {
    pub start: f64,
    pub end: f64,
    /// Consumed fraction per budget; the forcing entry is absent when `F ≡ 0`.
    pub budget_fractions: Vec<(Budget, f64)>,
    pub binding: Budget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimePartition {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub mu: f64,
    #[serde(rename = "N")]
    pub n_beta: usize,
    pub breakpoints: Vec<f64>,
    /// Breakpoints as node indices of the density grid.
    pub nodes: Vec<usize>,
    pub intervals: Vec<IntervalBudget>,
    pub k: usize,
    pub kstar: usize,
    pub kbeta: Vec<usize>,
}

fn count_bindings(intervals: &[IntervalBudget], n_beta: usize) -> (usize, Vec<usize>) {
    let mut kstar = 0;
    let mut kbeta = vec![0; n_beta + 1];
    for iv in intervals {
        match iv.binding {
            Budget::Forcing => kstar += 1,
            Budget::Symbol(b) => kbeta[b] += 1,
        }
    }
    (kstar, kbeta)
}

fn describe(ledger: &Ledger<'_>, nodes: &[usize]) -> Vec<IntervalBudget> {
    let d = ledger.density;
    nodes
        .windows(2)
        .map(|w| IntervalBudget {
            start: d.node_time(w[0]),
            end: d.node_time(w[1]),
            budget_fractions: ledger.fractions(w[0], w[1]),
            binding: ledger.binding(w[0], w[1]),
        })
        .collect()
}

impl TimePartition {
    /// Assemble a partition from node indices, measuring its budgets.
    pub fn from_nodes(density: &BudgetDensity, mu: f64, nodes: Vec<usize>) -> Result<Self> {
        density.validate()?;
        if nodes.len() < 2 {
            return Err(Error::EmptySeries("partition nodes"));
        }
        if nodes.iter().any(|&i| i > density.cells()) {
            return Err(Error::InvalidParameter("breakpoint beyond the grid".into()));
        }
        let ledger = Ledger::new(density, mu);
        let intervals = describe(&ledger, &nodes);
        let (kstar, kbeta) = count_bindings(&intervals, density.n_beta());
        Ok(Self {
            t_end: density.t_end,
            mu,
            n_beta: density.n_beta(),
            breakpoints: nodes.iter().map(|&i| density.node_time(i)).collect(),
            k: nodes.len() - 1,
            nodes,
            intervals,
            kstar,
            kbeta,
        })
    }
}

/// Greedy left-to-right partition: extend each interval cell by cell while
/// every budget holds.
pub fn partition_build(density: &BudgetDensity, mu: f64) -> Result<TimePartition> {
    density.validate()?;
    if !(mu >= 1.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be at least 1")));
    }
    let ledger = Ledger::new(density, mu);
    let cells = density.cells();
    let mut nodes = vec![0];
    let mut start = 0;
    while start < cells {
        if !ledger.holds(start, start + 1) {
            let (budget, _) = ledger
                .fractions(start, start + 1)
                .into_iter()
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("at least one budget");
            return Err(Error::CellBudget {
                cell: start,
                budget: budget.label(),
                mu,
            });
        }
        let mut end = start + 1;
        while end < cells && ledger.holds(start, end + 1) {
            end += 1;
        }
        nodes.push(end);
        start = end;
    }
    TimePartition::from_nodes(density, mu, nodes)
}

/// AM-GM certificate for the upper bound on `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountCertificate {
    /// Total forcing mass `M`.
    pub forcing_mass: f64,
    /// Scaled symbol masses `S_β`.
    pub symbol_mass: Vec<f64>,
    /// Smallest `μ|I| + μ^{−1} S_β(I)` over symbol-bound intervals, halved;
    /// at least `√(fraction)` by AM-GM.
    pub min_amgm_term: Option<f64>,
    /// Certified bounds on `k*` and each `k_β`.
    pub kstar_bound: f64,
    pub kbeta_bound: Vec<f64>,
    /// `1 + kstar_bound + Σ kbeta_bound`.
    pub upper_bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub pass: bool,
    pub k: usize,
    pub kstar: usize,
    pub kbeta: Vec<usize>,
    pub tiles: bool,
    pub violations: Vec<String>,
    /// Intervals (other than the last) whose one-cell extension still fits.
    pub non_maximal: Vec<usize>,
    /// Largest `1 − max fraction` over intervals other than the last.
    pub maximality_slack: f64,
    /// `Some(k ≥ ⌈μ⌉)` when the forcing mass is positive.
    pub lower_bound: Option<bool>,
    pub certificate: CountCertificate,
}

/// Re-check tiling, every budget, maximality and the count law.
pub fn partition_verify(p: &TimePartition, density: &BudgetDensity, mu: f64) -> Result<PartitionReport> {
    density.validate()?;
    let ledger = Ledger::new(density, mu);
    let cells = density.cells();
    let nodes = &p.nodes;
    let tiles = nodes.first() == Some(&0)
        && nodes.last() == Some(&cells)
        && nodes.windows(2).all(|w| w[0] < w[1])
        && p.k + 1 == nodes.len();
    if !tiles {
        return Ok(PartitionReport {
            pass: false,
            k: p.k,
            kstar: 0,
            kbeta: vec![0; density.n_beta() + 1],
            tiles,
            violations: vec!["breakpoints do not tile [0, T] on the grid".into()],
            non_maximal: vec![],
            maximality_slack: f64::NAN,
            lower_bound: None,
            certificate: certificate(&ledger, &[], &[], mu),
        });
    }
    let k = nodes.len() - 1;
    let checks: Vec<(Vec<String>, bool, f64)> = nodes
        .par_windows(2)
        .enumerate()
        .map(|(j, w)| {
            let fr = ledger.fractions(w[0], w[1]);
            let violations = fr
                .iter()
                .filter(|(_, f)| *f > 1.0 + BUDGET_TOL)
                .map(|(b, f)| format!("interval {j}: {} at {f:.6} of budget", b.label()))
                .collect();
            let last = j + 1 == k;
            let maximal = last || !ledger.holds(w[0], w[1] + 1);
            let fullest = fr.iter().map(|x| x.1).fold(0.0, f64::max);
            (violations, maximal, 1.0 - fullest)
        })
        .collect();
    let violations: Vec<String> = checks.iter().flat_map(|c| c.0.clone()).collect();
    let non_maximal: Vec<usize> = checks
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.1)
        .map(|(j, _)| j)
        .collect();
    let maximality_slack = checks[..k - 1].iter().map(|c| c.2).fold(0.0, f64::max);
    let bindings: Vec<Budget> = nodes.windows(2).map(|w| ledger.binding(w[0], w[1])).collect();
    let mut kstar = 0;
    let mut kbeta = vec![0; density.n_beta() + 1];
    for b in &bindings {
        match b {
            Budget::Forcing => kstar += 1,
            Budget::Symbol(i) => kbeta[*i] += 1,
        }
    }
    let lower_bound = ledger
        .forcing_prefix
        .as_ref()
        .map(|_| k as f64 >= mu.ceil());
    let cert = certificate(&ledger, nodes, &bindings, mu);
    let pass = violations.is_empty()
        && non_maximal.is_empty()
        && lower_bound.unwrap_or(true)
        && cert.holds;
    Ok(PartitionReport {
        pass,
        k,
        kstar,
        kbeta,
        tiles,
        violations,
        non_maximal,
        maximality_slack,
        lower_bound,
        certificate: cert,
    })
}

/// Upper-bound certificate. Every forcing-bound interval other than the
/// last overflows `M/μ` once extended by a cell, so
/// `(k* − 1) M/μ ≤ M + E` with `E` the extension-cell masses. A
/// symbol-bound interval `I` has `μ|I| + μ^{−1}S_β(I) ≥ 2√(fraction)`, and
/// summing gives `k_β · 2 min√(fraction) ≤ μT + S_β/μ`.
fn certificate(ledger: &Ledger<'_>, nodes: &[usize], bindings: &[Budget], mu: f64) -> CountCertificate {
    let d = ledger.density;
    let n_beta = d.n_beta();
    let symbol_mass: Vec<f64> = (0..=n_beta).map(|b| d.symbol_mass(b)).collect();
    let forcing_mass = d.forcing_mass();
    let k = nodes.len().saturating_sub(1);
    let mut extension_mass = 0.0;
    let mut kstar_inner = 0usize;
    let mut amgm_min: Vec<f64> = vec![f64::INFINITY; n_beta + 1];
    let mut kbeta_inner = vec![0usize; n_beta + 1];
    for (j, w) in nodes.windows(2).enumerate() {
        if j + 1 == k {
            continue;
        }
        match bindings[j] {
            Budget::Forcing => {
                kstar_inner += 1;
                if let Some(p) = &ledger.forcing_prefix {
                    extension_mass += p[w[1] + 1] - p[w[1]];
                }
            }
            Budget::Symbol(b) => {
                kbeta_inner[b] += 1;
                let len = d.node_time(w[1]) - d.node_time(w[0]);
                let scaled = d.symbol_weight(b)
                    * (ledger.symbol_prefix[b][w[1]] - ledger.symbol_prefix[b][w[0]]);
                amgm_min[b] = amgm_min[b].min(0.5 * (mu * len + scaled / mu));
            }
        }
    }
    let kstar_bound = if kstar_inner == 0 {
        0.0
    } else {
        mu * (forcing_mass + extension_mass) / forcing_mass
    };
    let kbeta_bound: Vec<f64> = (0..=n_beta)
        .map(|b| {
            if kbeta_inner[b] == 0 {
                0.0
            } else {
                (mu * d.t_end + symbol_mass[b] / mu) / (2.0 * amgm_min[b])
            }
        })
        .collect();
    let upper_bound = 1.0 + kstar_bound + kbeta_bound.iter().sum::<f64>();
    let min_amgm_term = amgm_min
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .reduce(f64::min);
    CountCertificate {
        forcing_mass,
        symbol_mass,
        min_amgm_term,
        kstar_bound,
        kbeta_bound,
        upper_bound,
        holds: (k as f64) <= upper_bound * (1.0 + BUDGET_TOL),
    }
}

/// Constant forcing of total mass 1 and vanishing symbol densities.
pub fn uniform_budget(cells: usize, t_end: f64, lambda: f64, m: f64, n_beta: usize) -> Result<BudgetDensity> {
    BudgetDensity::new(
        t_end,
        lambda,
        m,
        vec![1.0 / t_end; cells + 1],
        vec![vec![0.0; cells + 1]; n_beta + 1],
    )
}

fn random_profile<R: Rng + ?Sized>(cells: usize, t_end: f64, rng: &mut R) -> Vec<f64> {
    let modes: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0.0..1.0),
                rng.gen_range(1..=12) as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    (0..=cells)
        .map(|i| {
            let s = i as f64 / cells as f64;
            let e: f64 = modes
                .iter()
                .map(|(a, k, ph)| a * (std::f64::consts::TAU * k * s + ph).cos())
                .sum();
            e.exp() / t_end
        })
        .collect()
}

/// Random smooth positive densities meeting the count hypothesis with
/// constant 1: scaled symbol masses `S_β = μ²` and unit forcing mass.
pub fn synthetic_budget<R: Rng + ?Sized>(
    cells: usize,
    t_end: f64,
    lambda: f64,
    m: f64,
    mu: f64,
    n_beta: usize,
    rng: &mut R,
) -> Result<BudgetDensity> {
    let h = t_end / cells as f64;
    let normalise = |v: Vec<f64>, target: f64| -> Vec<f64> {
        let mass = *prefix_trapezoid(&v, h).last().unwrap();
        v.into_iter().map(|x| x * target / mass).collect()
    };
    let forcing = normalise(random_profile(cells, t_end, rng), 1.0);
    let symbol = (0..=n_beta)
        .map(|b| {
            let w = lambda.powf(m - 2.0 + b as f64);
            normalise(random_profile(cells, t_end, rng), mu * mu / w)
        })
        .collect();
    BudgetDensity::new(t_end, lambda, m, forcing, symbol)
}
