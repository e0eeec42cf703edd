//! Subcommand bodies. Each writes its artifacts into the output directory
//! and returns a JSON summary.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use phaselab::estimates::{
    admissible, band_bump, dispersive_scan, power_fit, prefactor_exponent, strichartz_scan,
    DispersiveOptions, Exponent, ExponentTable, ScanDomain, StrichartzOptions,
};
use phaselab::fbi::{fbi_adjoint, fbi_forward};
use phaselab::fields::{banded_noise, write_field, Grid, C64};
use phaselab::hamflow::{flow_determinant, variational_flow, FlowOptions};
use phaselab::partition::{
    partition_build, partition_verify, synthetic_budget, uniform_budget, DEFAULT_N_BETA,
};
use phaselab::propagate::{coherent_track, evolve as run_evolution, EvolveOptions, DRIFT_LIMIT};
use phaselab::waterwave::{gamma_band_norms, good_unknown, SurfaceData};

use crate::config::{parse_rational, RunConfig};
use crate::{CliError, Report};

fn create(out: &Path, name: &str, outputs: &mut Vec<String>) -> Result<BufWriter<File>, CliError> {
    outputs.push(name.to_string());
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json(out: &Path, name: &str, value: &impl serde::Serialize, outputs: &mut Vec<String>) -> Result<(), CliError> {
    let w = create(out, name, outputs)?;
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

fn grid(cfg: &RunConfig, n: usize, l: f64) -> Result<Grid, CliError> {
    Ok(Grid::new(
        cfg.dim(),
        cfg.grid.n.unwrap_or(n),
        cfg.grid.l.unwrap_or(l),
    )?)
}

fn evolve_options(cfg: &RunConfig, t_end: f64) -> EvolveOptions {
    EvolveOptions {
        t_end,
        max_dt: cfg.dt,
        snapshot_stride: cfg.stride.unwrap_or(0),
        ..EvolveOptions::default()
    }
}

pub fn fbi_check(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    if cfg.dim() != 1 {
        return Err(CliError::Config("fbi-check needs d = 1".into()));
    }
    let g = grid(cfg, 512, 64.0)?;
    let count = cfg.count.unwrap_or(50);
    let bands: Vec<f64> = match cfg.band {
        Some(b) => vec![b],
        None => vec![0.5, 1.0, 2.0, 4.0, 8.0],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut outputs = Vec::new();
    let mut w = create(out, "fbi_check.csv", &mut outputs)?;
    let mut rows = csv_writer(&mut w);
    rows.write_record(["index", "band", "isometry_error", "inversion_error"])
        .map_err(csv_err)?;
    let (mut iso, mut inv) = (0.0f64, 0.0f64);
    for i in 0..count {
        let band = bands[i % bands.len()];
        let f = banded_noise(&g, band, &mut rng)?;
        let tf = fbi_forward(&f)?;
        let back = fbi_adjoint(&tf, &g)?;
        let nf = f.l2_norm();
        let e_iso = (tf.l2_norm() - nf).abs() / nf;
        let e_inv = back.sub(&f)?.l2_norm() / nf;
        iso = iso.max(e_iso);
        inv = inv.max(e_inv);
        rows.write_record(&[i.to_string(), band.to_string(), format!("{e_iso:.6e}"), format!("{e_inv:.6e}")])
            .map_err(csv_err)?;
    }
    rows.flush()?;
    let tol = 1e-3;
    Ok(Report {
        summary: json!({
            "fields": count,
            "n": g.n(),
            "period": g.period(),
            "max_isometry_error": iso,
            "max_inversion_error": inv,
            "tolerance": tol,
        }),
        outputs,
        valid: iso <= tol && inv <= tol,
    })
}

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn point(cfg: &RunConfig, v: f64) -> Vec<f64> {
    let mut p = vec![0.0; cfg.dim()];
    p[0] = v;
    p
}

pub fn flow(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let a = cfg.symbol_at(None, "oscillator")?;
    let xi0 = cfg.xi0.unwrap_or_else(|| a.band().unwrap_or(1.0));
    let x0 = cfg.x0.unwrap_or(0.0);
    let t_end = cfg.t_end.unwrap_or(1.0);
    let opts = FlowOptions {
        dt: cfg.dt.unwrap_or(1e-3),
        ..FlowOptions::default()
    };
    let bundle = variational_flow(&a, &point(cfg, x0), &point(cfg, xi0), t_end, &opts)?;
    let mut outputs = Vec::new();
    bundle.write_csv(create(out, "flow.csv", &mut outputs)?)?;
    let last = bundle.states.last().expect("flow has states");
    let (sx, sxi) = bundle.sup_norms();
    Ok(Report {
        summary: json!({
            "symbol": a.id(),
            "t_end": last.t,
            "x": last.x,
            "xi": last.xi,
            "det_dx_dxi": flow_determinant(&bundle, last.t)?,
            "sup_dx": sx,
            "sup_dxi": sxi,
            "halving_change": bundle.halving_change,
            "converged": bundle.converged,
        }),
        outputs,
        valid: bundle.converged,
    })
}

pub fn evolve(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let lambda = cfg.band.or(cfg.symbol.lambda).unwrap_or(16.0);
    let a = cfg.symbol_at(Some(lambda), "fractional")?;
    let g = grid(cfg, 2048, 64.0)?;
    let bump = band_bump(&g, lambda);
    let u0 = bump.scale(C64::new(1.0 / bump.l2_norm(), 0.0));
    let res = run_evolution(&a, &u0, None, &evolve_options(cfg, cfg.t_end.unwrap_or(1.0)))?;
    let dir = out.join("evolve");
    std::fs::create_dir_all(&dir)?;
    res.write_to_dir(&dir)?;
    let s = &res.summary;
    let mut outputs: Vec<String> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok())
        .map(|e| format!("evolve/{}", e.file_name().to_string_lossy()))
        .collect();
    outputs.sort();
    Ok(Report {
        summary: json!({
            "symbol": s.symbol,
            "band": lambda,
            "dt": s.dt,
            "steps": s.steps,
            "snapshots": res.snapshots.len(),
            "norm_drift": s.norm_drift,
            "hermitian_defect": s.hermitian_defect,
            "valid": s.valid,
        }),
        outputs,
        valid: s.valid,
    })
}

pub fn coherent(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    if cfg.dim() != 1 {
        return Err(CliError::Config("coherent needs d = 1".into()));
    }
    let a = cfg.symbol_at(None, "fractional")?;
    let lambda = a.band().unwrap_or(64.0);
    let g = grid(cfg, 2048, 64.0)?;
    let radii = cfg.radii.clone().unwrap_or_else(|| vec![5.0, 10.0, 20.0, 40.0]);
    let center = (cfg.x0.unwrap_or(-6.0), cfg.xi0.unwrap_or(lambda));
    let t_end = cfg.t_end.unwrap_or(1.0);
    let track = coherent_track(
        &a,
        &g,
        center,
        t_end,
        &radii,
        cfg.count.unwrap_or(4),
        &evolve_options(cfg, t_end),
    )?;
    let mut outputs = Vec::new();
    track.write_csv(create(out, "coherent.csv", &mut outputs)?)?;
    let last = track.times.len() - 1;
    let tails = (0..track.times.len()).all(|i| track.tail_decays(i, 4.0));
    Ok(Report {
        summary: json!({
            "symbol": track.symbol,
            "center": track.centers[last],
            "radii": radii,
            "inside": track.inside[last],
            "outside": track.outside[last],
            "tail_decays_r4": tails,
            "norm_drift": track.norm_drift,
        }),
        outputs,
        valid: track.norm_drift <= DRIFT_LIMIT,
    })
}

pub fn dispersive(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let lambdas = cfg.lambdas.clone().unwrap_or_else(|| vec![32.0, 64.0, 128.0]);
    let a = cfg.symbol_at(None, "power")?;
    let opts = DispersiveOptions {
        t_end: cfg.t_end.unwrap_or(1.0),
        max_dt: cfg.dt,
        domain: ScanDomain {
            fixed_period: cfg.period,
            ..ScanDomain::default()
        },
        ..DispersiveOptions::default()
    };
    let mut outputs = Vec::new();
    let mut fits = Vec::new();
    for &l in &lambdas {
        let fit = dispersive_scan(&a, l, &opts)?;
        fit.write_csv(create(out, &format!("dispersive_lambda{l}.csv"), &mut outputs)?)?;
        fits.push(fit);
    }
    let prefactor = if fits.len() >= 2 {
        Some(prefactor_exponent(&fits)?.slope)
    } else {
        None
    };
    let rows: Vec<_> = fits
        .iter()
        .map(|f| {
            json!({
                "lambda": f.lambda,
                "slope": f.slope,
                "residual": f.residual,
                "prefactor": f.prefactor,
                "t_min": f.t_min,
                "grid_n": f.grid_n,
                "period": f.period,
                "norm_drift": f.norm_drift,
            })
        })
        .collect();
    let delta = fits.first().map(|f| f.delta).unwrap_or(0.0);
    let summary = json!({
        "symbol": a.id(),
        "expected_slope": -(a.dim() as f64) / 2.0,
        "fits": rows,
        "prefactor_exponent": prefactor,
        "reference_prefactor_exponent": delta * a.dim() as f64,
    });
    write_json(out, "dispersive.json", &summary, &mut outputs)?;
    Ok(Report {
        summary,
        outputs,
        valid: true,
    })
}

pub fn strichartz(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let p: Exponent = cfg.p.as_deref().unwrap_or("4").parse()?;
    let q: Exponent = cfg.q.as_deref().unwrap_or("inf").parse()?;
    if !admissible(p, q, cfg.dim() as u32) {
        return Err(CliError::Config(format!(
            "(p, q) = ({p}, {q}) is not admissible in d = {}",
            cfg.dim()
        )));
    }
    let lambdas = cfg
        .lambdas
        .clone()
        .unwrap_or_else(|| vec![16.0, 32.0, 64.0, 128.0]);
    let family = |l: f64| cfg.symbol_at(Some(l), "fractional").map_err(|e| phaselab::Error::InvalidParameter(e.message_owned()));
    let opts = StrichartzOptions {
        t_end: cfg.t_end.unwrap_or(1.0),
        max_dt: cfg.dt,
        domain: ScanDomain {
            fixed_period: Some(cfg.period.unwrap_or(2.0 * std::f64::consts::PI * 11.0)),
            ..ScanDomain::default()
        },
        ..StrichartzOptions::default()
    };
    let scan = strichartz_scan(&family, &lambdas, p, q, &opts)?;
    let mut outputs = Vec::new();
    scan.write_csv(create(out, "strichartz.csv", &mut outputs)?)?;
    let summary = scan.summary_json(0.05);
    write_json(out, "strichartz.json", &summary, &mut outputs)?;
    Ok(Report {
        summary,
        outputs,
        valid: true,
    })
}

pub fn partition(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let mu = cfg.mu.unwrap_or(4.0);
    let cells = cfg.cells.unwrap_or(4096);
    let n_beta = cfg.n_beta.unwrap_or(DEFAULT_N_BETA);
    let lambda = cfg.symbol.lambda.unwrap_or(32.0);
    let m = cfg.symbol.m.unwrap_or(1.5);
    let t_end = cfg.t_end.unwrap_or(1.0);
    let density = match cfg.budget.as_deref().unwrap_or("uniform") {
        "uniform" => uniform_budget(cells, t_end, lambda, m, n_beta)?,
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
            synthetic_budget(cells, t_end, lambda, m, mu, n_beta, &mut rng)?
        }
    };
    let part = partition_build(&density, mu)?;
    let report = partition_verify(&part, &density, mu)?;
    let mut outputs = Vec::new();
    write_json(out, "partition.json", &part, &mut outputs)?;
    write_json(out, "partition_report.json", &report, &mut outputs)?;
    Ok(Report {
        summary: json!({
            "mu": mu,
            "N": n_beta,
            "k": part.k,
            "kstar": report.kstar,
            "kbeta": report.kbeta,
            "lower_bound": report.lower_bound,
            "upper_bound": report.certificate.upper_bound,
            "maximality_slack": report.maximality_slack,
            "pass": report.pass,
        }),
        outputs,
        valid: report.pass,
    })
}

pub fn ww_symbols(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let d = cfg.dim();
    let g = grid(cfg, if d == 1 { 256 } else { 32 }, 2.0 * std::f64::consts::PI)?;
    let eps = cfg.ripple.unwrap_or(0.1);
    let k0 = cfg.ripple_k.unwrap_or(3.0);
    let eta: Vec<f64> = (0..g.len())
        .map(|i| {
            let p = g.point(i);
            if d == 1 {
                eps * (k0 * p[0]).cos()
            } else {
                eps * (k0 * p[0]).cos() * (k0 * p[1]).cos()
            }
        })
        .collect();
    let psi: Vec<f64> = (0..g.len()).map(|i| (2.0 * k0 * g.point(i)[0]).sin()).collect();
    let n = g.len();
    let surface = SurfaceData::new(&g, eta, psi, vec![[0.0; 2]; n], vec![0.0; n])?;
    let w = surface.symbols();
    let mut outputs = Vec::new();
    let mut file = create(out, "ww_symbols.csv", &mut outputs)?;
    let mut rows = csv_writer(&mut file);
    rows.write_record(["node", "x", "xi", "lambda", "ell", "gamma", "q", "p"])
        .map_err(csv_err)?;
    let (mut gamma_err, mut lambda_ok) = (0.0f64, true);
    for node in (0..n).step_by((n / 64).max(1)) {
        for r in [1.0, 4.0, 16.0, 64.0] {
            let xi = [r, 0.5 * r];
            let xi = &xi[..d];
            let (l, e, gm) = (w.lambda(node, xi), w.ell(node, xi), w.gamma(node, xi));
            gamma_err = gamma_err.max((gm * gm - e * l).abs() / (gm * gm));
            lambda_ok &= l >= xi.iter().map(|v| v * v).sum::<f64>().sqrt() * (1.0 - 1e-15);
            rows.write_record(&[
                node.to_string(),
                format!("{:.9}", g.point(node)[0]),
                format!("{r}"),
                format!("{l:.12e}"),
                format!("{e:.12e}"),
                format!("{gm:.12e}"),
                format!("{:.12e}", w.q(node)),
                format!("{:.12e}", w.p(node, xi)),
            ])
            .map_err(csv_err)?;
        }
    }
    rows.flush()?;
    drop(rows);
    drop(file);
    let u = good_unknown(&surface)?;
    write_field(&mut create(out, "good_unknown.bin", &mut outputs)?, &u)?;
    let mut band = serde_json::Value::Null;
    if d == 1 {
        let lambdas = cfg
            .lambdas
            .clone()
            .unwrap_or_else(|| vec![16.0, 32.0, 64.0, 128.0, 256.0]);
        let norms: Vec<Vec<f64>> = lambdas
            .iter()
            .map(|&l| gamma_band_norms(&surface, l, 2, 0.0, 33))
            .collect::<Result<_, _>>()?;
        let exponents: Vec<f64> = (0..=2)
            .map(|b| {
                let ys: Vec<f64> = norms.iter().map(|v| v[b]).collect();
                power_fit(&lambdas, &ys).map(|f| f.slope)
            })
            .collect::<Result<_, _>>()?;
        band = json!({"lambdas": lambdas, "exponents": exponents, "expected": [1.5, 0.5, -0.5]});
    }
    let valid = gamma_err <= 1e-12 && lambda_ok;
    let summary = json!({
        "d": d,
        "ripple": eps,
        "ripple_k": k0,
        "gamma_identity_error": gamma_err,
        "lambda_dominates_xi": lambda_ok,
        "good_unknown_l2": u.l2_norm(),
        "band_scaling": band,
    });
    write_json(out, "ww_symbols.json", &summary, &mut outputs)?;
    Ok(Report {
        summary,
        outputs,
        valid,
    })
}

pub fn exponents(cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let r = parse_rational(cfg.r.as_deref().unwrap_or("2"))?;
    let eps = parse_rational(cfg.epsilon.as_deref().unwrap_or("0"))?;
    let table = ExponentTable::limit_at(cfg.dim() as u32, r, eps)?;
    let mut outputs = Vec::new();
    write_json(out, "exponents.json", &table, &mut outputs)?;
    Ok(Report {
        summary: serde_json::to_value(&table)?,
        outputs,
        valid: true,
    })
}

impl CliError {
    pub fn message_owned(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Invalid(m) | CliError::Runtime(m) => m.clone(),
        }
    }
}
