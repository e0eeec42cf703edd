//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero on any
//! failure.

use std::time::Instant;

use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phaselab::estimates::{
    dispersive_scan, exponent_bookkeeper, power_fit, prefactor_exponent, strichartz_scan,
    DispersiveOptions, ScanDomain, StrichartzOptions,
};
use phaselab::fbi::{fbi_adjoint, fbi_forward};
use phaselab::fields::{apply_multiplier, banded_noise, Grid, SampledField, C64};
use phaselab::hamflow::{flow_integrate, variational_flow, FlowOptions};
use phaselab::partition::{partition_build, partition_verify, synthetic_budget, uniform_budget};
use phaselab::propagate::{coherent_track, duhamel_reference, evolve, EvolveOptions};
use phaselab::symbols::{
    harmonic_oscillator, high_remainder_norm, make_fractional, make_perturbed, power,
    truncate_x_frequency, ClassOptions,
};
use phaselab::waterwave::{dispersive_term, SurfaceData};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Norm drifts of the homogeneous evolutions run by the scans.
#[derive(Default)]
struct Drifts(Vec<(String, f64)>);

impl Drifts {
    fn push(&mut self, label: impl Into<String>, drift: f64) {
        self.0.push((label.into(), drift));
    }
}

fn fbi_isometry() -> Outcome {
    let start = Instant::now();
    let g = Grid::line(512, 64.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bands = [0.5, 1.0, 2.0, 4.0, 8.0];
    let (mut iso, mut inv) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let f = banded_noise(&g, bands[i % bands.len()], &mut rng).unwrap();
        let tf = fbi_forward(&f).unwrap();
        let back = fbi_adjoint(&tf, &g).unwrap();
        let nf = f.l2_norm();
        iso = iso.max((tf.l2_norm() - nf).abs() / nf);
        inv = inv.max(back.sub(&f).unwrap().l2_norm() / nf);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        iso <= 1e-3 && inv <= 1e-3 && secs <= 30.0,
        format!("50 fields, N=512: isometry err {iso:.2e}, inversion err {inv:.2e} (<= 1e-3), {secs:.1}s (<= 30s)"),
    )
}

fn flow_oracle() -> Outcome {
    let opts = FlowOptions {
        dt: 1e-3,
        ..FlowOptions::default()
    };
    let ho = harmonic_oscillator(1).unwrap();
    let (x0, k0) = (0.8, -1.3);
    let b = variational_flow(&ho, &[x0], &[k0], 1.0, &opts).unwrap();
    let n = b.states.len() - 1;
    let (c, s) = (1f64.cos(), 1f64.sin());
    let last = &b.states[n];
    let err = [
        (last.x[0] - (x0 * c + k0 * s)).abs(),
        (last.xi[0] - (-x0 * s + k0 * c)).abs(),
        (b.big_x[n][0] - s).abs(),
        (b.big_xi[n][0] - c).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let mut straight = 0.0f64;
    for (sym, xi) in [
        (power(1, 1.5).unwrap(), vec![3.0]),
        (make_fractional(1, 2.0, 32.0).unwrap(), vec![40.0]),
        (power(2, 1.5).unwrap(), vec![2.0, -5.0]),
    ] {
        let x = vec![0.1; sym.dim()];
        let series = flow_integrate(&sym, &x, &xi, 0.0, 1.0, &opts).unwrap();
        for st in &series.states {
            for (a, b) in st.xi.iter().zip(&xi) {
                straight = straight.max((a - b).abs());
            }
        }
    }
    outcome(
        err <= 1e-6 && straight <= 1e-12,
        format!("oscillator flow+variational err {err:.2e} (<= 1e-6); x-independent |xi_t - xi| {straight:.1e} (<= 1e-12)"),
    )
}

fn dispersive(drifts: &mut Drifts) -> Outcome {
    let start = Instant::now();
    let a = power(1, 1.5).unwrap();
    let mut fits = Vec::new();
    for lambda in [32.0, 64.0, 128.0] {
        match dispersive_scan(&a, lambda, &DispersiveOptions::default()) {
            Ok(f) => {
                drifts.push(format!("dispersive lambda={lambda}"), f.norm_drift);
                fits.push(f);
            }
            Err(e) => return outcome(false, format!("lambda={lambda}: {e}")),
        }
    }
    let slopes: Vec<f64> = fits.iter().map(|f| f.slope).collect();
    let pref = prefactor_exponent(&fits).unwrap().slope;
    let secs = start.elapsed().as_secs_f64();
    let pass = slopes.iter().all(|s| (s + 0.5).abs() <= 0.05) && pref <= 0.25 + 0.1 && secs <= 300.0;
    outcome(
        pass,
        format!("|xi|^(3/2), lambda=32,64,128: slopes {slopes:.3?} (-0.5 +- 0.05); prefactor exponent {pref:.3} (<= 0.35); {secs:.0}s (<= 300s)"),
    )
}

fn strichartz(drifts: &mut Drifts) -> Outcome {
    let opts = StrichartzOptions {
        domain: ScanDomain {
            fixed_period: Some(2.0 * std::f64::consts::PI * 11.0),
            ..ScanDomain::default()
        },
        ..StrichartzOptions::default()
    };
    let p = "4".parse().unwrap();
    let q = "inf".parse().unwrap();
    let main_family = |l: f64| make_fractional(1, 1.5, l);
    let control_family = |l: f64| make_fractional(1, 2.0, l);
    let main = strichartz_scan(&main_family, &[16.0, 32.0, 64.0, 128.0, 256.0], p, q, &opts);
    let control = strichartz_scan(&control_family, &[16.0, 32.0, 64.0, 128.0], p, q, &opts);
    let (main, control) = match (main, control) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("scan failed: {e}")),
    };
    for pt in main.points.iter().chain(&control.points) {
        drifts.push(format!("strichartz lambda={}", pt.lambda), pt.norm_drift);
    }
    outcome(
        main.exponent <= 0.125 + 0.05 && control.exponent <= 0.05,
        format!(
            "(p,q)=(4,inf): m=3/2 lambda=16..256 exponent {:.3} (<= 0.175); m=2 control lambda=16..128 exponent {:.4} (<= 0.05)",
            main.exponent, control.exponent
        ),
    )
}

fn partition_law() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut uniform = Vec::new();
    let mut synthetic = Vec::new();
    let mut ok = true;
    for mu in [4.0, 16.0, 64.0] {
        let b = uniform_budget(4096, 1.0, 32.0, 1.5, 2).unwrap();
        let p = partition_build(&b, mu).unwrap();
        let r = partition_verify(&p, &b, mu).unwrap();
        ok &= r.pass && p.k as f64 == mu && r.kstar == p.k;
        uniform.push(p.k);
        let s = synthetic_budget(16384, 1.0, 32.0, 1.5, mu, 2, &mut rng).unwrap();
        let p = partition_build(&s, mu).unwrap();
        let r = partition_verify(&p, &s, mu).unwrap();
        ok &= r.pass && mu <= p.k as f64 && p.k as f64 <= 10.0 * mu;
        synthetic.push(p.k);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok && secs <= 10.0,
        format!("mu=4,16,64: uniform k={uniform:?} (= mu); synthetic k={synthetic:?} (mu..10mu); verifier passes; {secs:.2}s (<= 10s)"),
    )
}

fn truncation() -> Outcome {
    let lambdas: Vec<f64> = (4..=12).map(|k| 2f64.powi(k)).collect();
    let opts = ClassOptions {
        samples_xi: 4,
        ..ClassOptions::default()
    };
    let mut report = Vec::new();
    let mut ok = true;
    for r in [0.5, 1.0, 1.5, 2.0] {
        let sigma = 2.0 / (2.0 + r);
        let norms: Vec<f64> = lambdas
            .iter()
            .map(|&l| {
                let a = make_perturbed(1, 1.5, l, r, 0.2).unwrap();
                let split = truncate_x_frequency(&a, sigma).unwrap();
                high_remainder_norm(&a, &split, &opts).unwrap()
            })
            .collect();
        let fit = power_fit(&lambdas, &norms).unwrap().slope;
        ok &= (fit + r * sigma).abs() <= 0.1;
        report.push(format!("r={r}: {fit:.3} vs {:.3}", -r * sigma));
    }
    outcome(ok, format!("lambda=2^4..2^12: {} (within 0.1)", report.join(", ")))
}

fn coherent(drifts: &mut Drifts) -> Outcome {
    let g = Grid::line(2048, 64.0).unwrap();
    let a = make_fractional(1, 1.5, 64.0).unwrap();
    let radii = [5.0, 10.0, 20.0, 40.0];
    let track = match coherent_track(&a, &g, (-6.0, 64.0), 1.0, &radii, 4, &EvolveOptions::default()) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    drifts.push("coherent", track.norm_drift);
    let last = track.times.len() - 1;
    let inside = track.inside[last][0];
    let tails = (0..track.times.len()).all(|i| track.tail_decays(i, 4.0));
    outcome(
        inside >= 0.9 && tails,
        format!(
            "lambda=64, t=1: mass within R=5 {inside:.4} (>= 0.9); outside R=5,10,20,40 {:?} decays like R^-4: {tails}",
            track.outside[last].iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn water_waves() -> Outcome {
    let mut worst_flat = 0.0f64;
    let mut worst_gamma = 0.0f64;
    let mut worst_homog = 0.0f64;
    let mut exact_1d = true;
    let g1 = Grid::line(256, 2.0 * std::f64::consts::PI).unwrap();
    let flat = SurfaceData::flat(&g1, vec![0.0; 256]).unwrap().symbols();
    for xi in [0.25, 1.0, 7.5, -33.0, 250.0] {
        let a: f64 = f64::abs(xi);
        let rel = |v: f64, e: f64| (v - e).abs() / e;
        worst_flat = worst_flat
            .max(rel(flat.lambda(3, &[xi]), a))
            .max(rel(flat.ell(3, &[xi]), a * a))
            .max(rel(flat.gamma(3, &[xi]), a.powf(1.5)))
            .max(rel(flat.p(3, &[xi]), a.sqrt()))
            .max((flat.q(3) - 1.0).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for dim in [1usize, 2] {
        let g = Grid::new(dim, if dim == 1 { 256 } else { 32 }, 2.0 * std::f64::consts::PI).unwrap();
        let eta = banded_noise(&g, 4.0, &mut rng).unwrap().real_parts();
        let n = g.len();
        let eta: Vec<f64> = eta.iter().map(|v| v * 3.0).collect();
        let s = SurfaceData::new(&g, eta, vec![0.0; n], vec![[0.0; 2]; n], vec![0.0; n])
            .unwrap()
            .symbols();
        for node in (0..n).step_by(7) {
            for xi in [[1.5, 0.0], [-4.0, 2.5], [12.0, -9.0]] {
                let xi = &xi[..dim];
                let gm = s.gamma(node, xi);
                worst_gamma = worst_gamma.max((gm * gm - s.ell(node, xi) * s.lambda(node, xi)).abs() / (gm * gm));
                let two: Vec<f64> = xi.iter().map(|v| 2.0 * v).collect();
                for (f2, f1, deg) in [
                    (s.lambda(node, &two), s.lambda(node, xi), 1.0),
                    (s.ell(node, &two), s.ell(node, xi), 2.0),
                    (s.gamma(node, &two), gm, 1.5),
                    (s.p(node, &two), s.p(node, xi), 0.5),
                ] {
                    worst_homog = worst_homog.max((f2 - 2f64.powf(deg) * f1).abs() / f2.abs());
                }
                if dim == 1 {
                    exact_1d &= s.lambda(node, xi) == xi[0].abs();
                }
            }
        }
    }
    let u = banded_noise(&Grid::line(512, 2.0 * std::f64::consts::PI).unwrap(), 32.0, &mut rng).unwrap();
    let surf = SurfaceData::flat(&u.grid, vec![0.0; 512]).unwrap();
    let t_gamma = dispersive_term(&surf, &u).unwrap().scale(C64::new(0.0, -1.0));
    let exact = apply_multiplier(&u, |k| C64::new(k[0].abs().powf(1.5), 0.0));
    let t_err = t_gamma.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
    outcome(
        worst_flat <= 1e-12 && worst_gamma <= 1e-10 && worst_homog <= 1e-10 && exact_1d && t_err <= 1e-8,
        format!("flat err {worst_flat:.1e} (<= 1e-12); gamma^2=l*lambda err {worst_gamma:.1e}, homogeneity err {worst_homog:.1e} (<= 1e-10); d=1 lambda=|xi| exact: {exact_1d}; T_gamma flat err {t_err:.1e} (<= 1e-8)"),
    )
}

fn exponent_table() -> Outcome {
    let start = Instant::now();
    let two = Rational64::from_integer(2);
    let d1 = exponent_bookkeeper(1, two).unwrap();
    let d2 = exponent_bookkeeper(2, two).unwrap();
    let d3 = exponent_bookkeeper(3, two).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = d1.gain == Rational64::new(3, 14)
        && d2.gain == Rational64::new(3, 7)
        && d3.gain == Rational64::new(3, 7)
        && d1.reference == Rational64::new(3, 8)
        && d2.reference == Rational64::new(3, 4)
        && secs < 1.0;
    outcome(
        pass,
        format!(
            "r -> 2: d=1 gain {} (3/14), d>=2 gain {} (3/7); references {} (3/8), {} (3/4); {:.1e}s",
            d1.gain, d2.gain, d1.reference, d2.reference, secs
        ),
    )
}

fn propagator_validity(drifts: &Drifts) -> Outcome {
    let worst = drifts
        .0
        .iter()
        .fold(("none".to_string(), 0.0f64), |acc, (l, d)| if *d > acc.1 { (l.clone(), *d) } else { acc });
    let mut duhamel = 0.0f64;
    // Dense Weyl operator with forcing.
    let g = Grid::line(128, 16.0).unwrap();
    let a = harmonic_oscillator(1).unwrap();
    let u0 = SampledField::from_fn(&g, |x| C64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
    let f = |t: f64| {
        SampledField::from_fn(&g, |x| C64::new((3.0 * t).cos(), 0.5 * t) * (-(x[0] - 1.0).powi(2)).exp())
    };
    let opts = EvolveOptions {
        t_end: 0.5,
        max_dt: Some(0.01),
        ..EvolveOptions::default()
    };
    let stepped = evolve(&a, &u0, Some(&f), &opts).unwrap();
    let reference = duhamel_reference(&a, &u0, &f, &opts).unwrap();
    duhamel = duhamel.max(stepped.last().sub(&reference).unwrap().l2_norm() / reference.l2_norm());
    // Fourier multiplier with banded forcing.
    let g = Grid::line(512, 2.0 * std::f64::consts::PI * 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u0 = banded_noise(&g, 16.0, &mut rng).unwrap();
    let w = banded_noise(&g, 16.0, &mut rng).unwrap();
    let a = make_fractional(1, 1.5, 16.0).unwrap();
    let f = |t: f64| w.scale(C64::from_polar(1.0, 5.0 * t));
    let opts = EvolveOptions {
        t_end: 1.0,
        ..EvolveOptions::default()
    };
    let stepped = evolve(&a, &u0, Some(&f), &opts).unwrap();
    let reference = duhamel_reference(&a, &u0, &f, &opts).unwrap();
    duhamel = duhamel.max(stepped.last().sub(&reference).unwrap().l2_norm() / reference.l2_norm());
    outcome(
        worst.1 <= 1e-6 && duhamel <= 1e-6 && !drifts.0.is_empty(),
        format!(
            "{} homogeneous runs, worst norm drift {:.1e} ({}) (<= 1e-6); Duhamel mismatch {duhamel:.1e} (<= 1e-6)",
            drifts.0.len(),
            worst.1,
            worst.0
        ),
    )
}

fn main() {
    let mut drifts = Drifts::default();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        println!(
            "{} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        results.push((name, o));
    };
    run("fbi-isometry-inversion", &mut fbi_isometry);
    run("flow-oracle", &mut flow_oracle);
    run("dispersive-decay", &mut || dispersive(&mut drifts));
    run("strichartz-scaling", &mut || strichartz(&mut drifts));
    run("partition-count-law", &mut partition_law);
    run("truncation-scaling", &mut truncation);
    run("coherent-localization", &mut || coherent(&mut drifts));
    run("water-wave-symbols", &mut water_waves);
    run("exponent-table", &mut exponent_table);
    run("propagator-validity", &mut || propagator_validity(&drifts));
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
