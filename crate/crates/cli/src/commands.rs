use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::Result;

use rabi_triangle::bogoliubov::fluctuations;
use rabi_triangle::dynamics::{chirality_metric, default_t_final, evolve, FockBasis};
use rabi_triangle::meanfield::{solve_with, SolverOptions};
use rabi_triangle::model::{classify_phase, critical_flux, softest_coupling, PhaseLabel};
use rabi_triangle::np_analytics::{modes, np_observables};
use rabi_triangle::scaling::{
    exponent_report, exponent_report_at, format_table, report_csv_rows, Transition, CRITICAL_GUARD,
    REPORT_HEADER,
};
use rabi_triangle::{Error, Extended, ModelParams};

use crate::config::RunConfig;

/// What a subcommand produced: the CSV body and, for `exponents`, a
/// human-readable table.
pub struct Output {
    pub csv: String,
    pub table: Option<String>,
}

impl Output {
    fn csv(csv: String) -> Self {
        Self { csv, table: None }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Couplings to visit: the single `--g1` value, or the `g1/g1c` window.
fn couplings(cfg: &RunConfig) -> Result<Vec<f64>> {
    if let Some(g1) = cfg.g1 {
        return Ok(vec![g1]);
    }
    let (gc, _) = softest_coupling(&cfg.params())?;
    Ok(linspace(cfg.window.0, cfg.window.1, cfg.points)
        .into_iter()
        .map(|r| r * gc)
        .collect())
}

fn solver(cfg: &RunConfig) -> SolverOptions<f64> {
    SolverOptions {
        seed: cfg.seed,
        ..SolverOptions::default()
    }
}

pub fn dynamics(cfg: &RunConfig) -> Result<Output> {
    let p = cfg.params();
    let basis = FockBasis::new(cfg.nmax)?;
    let t_final = cfg.tfinal.unwrap_or_else(|| default_t_final(p.j));
    let traj = evolve(&p, &basis, t_final, cfg.dt)?;
    let mut s = cfg.header();
    s.push_str("t,N1,N2,N3,norm\n");
    for ((t, n), norm) in traj.times.iter().zip(&traj.n_photon).zip(&traj.norm) {
        writeln!(s, "{},{},{}", num(*t), join(n), num(*norm))?;
    }
    writeln!(s, "# chirality={}", chirality_metric(&traj))?;
    writeln!(s, "# norm_drift={}", num(traj.max_norm_drift()))?;
    writeln!(s, "# max_top_population={}", num(traj.max_top_population))?;
    writeln!(s, "# truncation_warning={}", traj.truncation_warning())?;
    Ok(Output::csv(s))
}

pub fn phase_boundary(cfg: &RunConfig) -> Result<Output> {
    let base = cfg.params();
    let mut s = cfg.header();
    writeln!(s, "# theta_c={}", num(critical_flux(&base)?))?;
    s.push_str("theta,g1c,q\n");
    for theta in linspace(-PI, PI, cfg.points) {
        let (gc, q) = softest_coupling(&base.with_theta(theta))?;
        writeln!(s, "{},{},{}", num(theta), num(gc), q)?;
    }
    Ok(Output::csv(s))
}

struct Point {
    label: PhaseLabel,
    photon: [f64; 3],
    var_x: [f64; 3],
    var_p: [f64; 3],
    eps: [f64; 3],
}

fn evaluate(cfg: &RunConfig, p: &ModelParams) -> rabi_triangle::Result<Point> {
    let (gc, _) = softest_coupling(p)?;
    if (p.g1 - gc).abs() < CRITICAL_GUARD {
        return Err(Error::CriticalPoint(format!(
            "g1 = {} is within {CRITICAL_GUARD:e} of g1c = {gc}",
            p.g1
        )));
    }
    let label = classify_phase(p)?;
    if label == PhaseLabel::Normal {
        let o = np_observables(p)?;
        let mut eps = modes(p)?.map(|m| m.epsilon);
        eps.sort_by(f64::total_cmp);
        return Ok(Point {
            label,
            photon: [o.photon_number; 3],
            var_x: [o.var_x; 3],
            var_p: [o.var_p; 3],
            eps,
        });
    }
    let mf = solve_with(p, &solver(cfg))?;
    let (_, obs) = fluctuations(p, &mf)?;
    Ok(Point {
        label: mf.label,
        photon: obs.photon_number,
        var_x: obs.var_x,
        var_p: obs.var_p,
        eps: obs.eps,
    })
}

/// Runs `row` for every coupling. In a scan, points sitting on the
/// transition are recorded as comments and skipped; a single point fails.
fn scan(
    cfg: &RunConfig,
    header: &str,
    mut row: impl FnMut(f64, &mut String) -> rabi_triangle::Result<()>,
) -> Result<String> {
    let gs = couplings(cfg)?;
    let single = gs.len() == 1;
    let mut s = cfg.header();
    s.push_str(header);
    s.push('\n');
    for g1 in gs {
        let mut line = String::new();
        match row(g1, &mut line) {
            Ok(()) => s.push_str(&line),
            Err(e @ (Error::CriticalPoint(_) | Error::Instability(_))) if !single => {
                writeln!(s, "# skipped g1={}: {e}", num(g1))?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(s)
}

pub fn fluctuations_scan(cfg: &RunConfig) -> Result<Output> {
    let base = cfg.params();
    let header = "g1,n1,n2,n3,varx1,varx2,varx3,varp1,varp2,varp3,eps1,eps2,phase";
    let s = scan(cfg, header, |g1, line| {
        let pt = evaluate(cfg, &base.with_g1(g1))?;
        writeln!(
            line,
            "{},{},{},{},{},{},{}",
            num(g1),
            join(&pt.photon),
            join(&pt.var_x),
            join(&pt.var_p),
            num(pt.eps[0]),
            num(pt.eps[1]),
            pt.label.short()
        )
        .expect("writing to a String");
        Ok(())
    })?;
    Ok(Output::csv(s))
}

pub fn spectrum(cfg: &RunConfig) -> Result<Output> {
    let base = cfg.params();
    let s = scan(cfg, "g1,eps1,eps2,eps3,phase", |g1, line| {
        let pt = evaluate(cfg, &base.with_g1(g1))?;
        writeln!(line, "{},{},{}", num(g1), join(&pt.eps), pt.label.short())
            .expect("writing to a String");
        Ok(())
    })?;
    Ok(Output::csv(s))
}

pub fn meanfield(cfg: &RunConfig) -> Result<Output> {
    let base = cfg.params();
    let opts = solver(cfg);
    let header = "g1,A1,A2,A3,B1,B2,B3,energy,energy_gain,residual,phase,roots";
    let s = scan(cfg, header, |g1, line| {
        let mf = solve_with(&base.with_g1(g1), &opts)?;
        writeln!(
            line,
            "{},{},{},{},{},{},{},{}",
            num(g1),
            join(&mf.disp.a),
            join(&mf.disp.b),
            num(mf.energy),
            num(mf.energy_gain),
            num(mf.residual_norm),
            mf.label.short(),
            mf.roots_found
        )
        .expect("writing to a String");
        Ok(())
    })?;
    Ok(Output::csv(s))
}

pub fn exponents(cfg: &RunConfig) -> Result<Output> {
    let base = cfg.params();
    let reports = match cfg.theta {
        Some(theta) => vec![exponent_report_at(
            &base,
            Extended::from(theta),
            cfg.window,
            cfg.points,
        )?],
        None => Transition::ALL
            .iter()
            .map(|&t| exponent_report(&base, t, cfg.window, cfg.points))
            .collect::<rabi_triangle::Result<_>>()?,
    };
    let mut s = cfg.header();
    s.push_str(REPORT_HEADER);
    s.push('\n');
    for r in &reports {
        for row in report_csv_rows(r) {
            s.push_str(&row);
            s.push('\n');
        }
        for (side, f) in &r.failures {
            writeln!(s, "# {} {side:?} failure: {f}", r.transition)?;
        }
    }
    Ok(Output {
        csv: s,
        table: Some(format_table(&reports)),
    })
}
