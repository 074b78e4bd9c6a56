//! The five run kinds and the sweep orchestration. Each run computes its
//! metrics, writes its CSV artifacts, and returns a key-value record for the
//! log. Pass/fail verdicts live in the data, never in exit codes.

use nalgebra::DVector;
use num_complex::Complex64;

use shearflow_core::discretization::{build_grid, Grid};
use shearflow_core::evolution::{
    energy_estimate_check, recurrence_horizon, spectrally_prepared_gaussian, viscous_generator,
    viscous_propagate, InviscidPropagator, PropagatorConfig,
};
use shearflow_core::linalg::grid_norm;
use shearflow_core::observables::{
    damping_fit, enhanced_dissipation_scan, log_spaced, n_functional, velocity_damping_fit,
    velocity_from_vorticity, viscous_damping_fit, DecayFit,
};
use shearflow_core::operators::{
    coercivity_check, mourre_cover, OperatorSet,
};
use shearflow_core::profiles::{check_hypotheses, schrodinger_lambda0, HypothesisTolerances};
use shearflow_core::spectral::{
    bump_function, eigendecompose, spectrum_report, EigenDecomposition, FrequencyWeight,
    SpectralWindow,
};
use shearflow_core::{CoreError, Result};

use crate::config::RunConfig;
use crate::report::{self, fmt};

/// One completed run: key-value metrics in insertion order.
pub struct ResultRecord {
    pub run_id: String,
    pub subcommand: &'static str,
    pub metrics: Vec<(String, String)>,
}

impl ResultRecord {
    fn push(&mut self, key: &str, value: impl Into<String>) {
        self.metrics.push((key.to_string(), value.into()));
    }

    pub fn print(&self) {
        println!("run {} [{}]", self.run_id, self.subcommand);
        for (k, v) in &self.metrics {
            println!("  {k} = {v}");
        }
    }
}

struct Workbench {
    grid: Grid,
    set: OperatorSet,
    evd: EigenDecomposition,
    window: SpectralWindow,
    weight: FrequencyWeight,
    psi0: DVector<Complex64>,
}

fn assemble(cfg: &RunConfig) -> Result<Workbench> {
    let grid = build_grid(cfg.y_half, cfg.n)?;
    let profile = cfg.build_profile()?;
    let set = OperatorSet::build(&grid, &profile, cfg.alpha)?;
    let evd = eigendecompose(&set.h)?;
    let window = bump_function(cfg.window.0, cfg.window.1, cfg.delta_g)?;
    window.validate_edges(
        set.u_minus,
        set.u_plus,
        shearflow_core::operators::EDGE_MARGIN_REL,
    )?;
    let weight = FrequencyWeight::new(&grid)?;
    let psi0 = spectrally_prepared_gaussian(&grid, &evd, &window, 0.0, cfg.data_width);
    Ok(Workbench {
        grid,
        set,
        evd,
        window,
        weight,
        psi0,
    })
}

fn fit_window(cfg: &RunConfig, evd: &EigenDecomposition, window: &SpectralWindow) -> Vec<f64> {
    let horizon = recurrence_horizon(evd, window);
    let t_max = cfg.t_max.unwrap_or((horizon / 2.0).min(300.0));
    log_spaced(10.0, t_max.max(11.0), 24)
}

fn damping_row(run_id: &str, k: u32, fit: &DecayFit, target: f64, tol: f64) -> Vec<String> {
    let pass = fit.conclusive && (fit.exponent - target).abs() <= tol;
    vec![
        run_id.to_string(),
        k.to_string(),
        fmt(fit.exponent),
        fmt(fit.prefactor),
        fmt(fit.residual),
        fmt(fit.t_min),
        fmt(fit.t_max),
        pass.to_string(),
    ]
}

/// Write the per-time trajectory CSV for a sampled evolution.
#[allow(clippy::too_many_arguments)]
fn write_trajectory(
    cfg: &RunConfig,
    run_id: &str,
    bench: &Workbench,
    times: &[f64],
    states: &[DVector<Complex64>],
    nu: f64,
) -> Result<()> {
    let h = bench.grid.spacing();
    let mut rows = Vec::with_capacity(times.len());
    for (t, psi) in times.iter().zip(states) {
        let gpsi = bench
            .evd
            .apply_to_complex(|l| bench.window.eval(l), psi);
        let s_inv_psi = bench.set.s_inv.apply_complex(psi);
        let omega = DVector::from_fn(bench.grid.len(), |j, _| {
            Complex64::new(bench.set.samples.m[j], 0.0) * s_inv_psi[j]
        });
        let v = velocity_from_vorticity(&bench.grid, cfg.alpha, &omega)?;
        rows.push(vec![
            fmt(*t),
            fmt(grid_norm(psi, h)),
            fmt(bench.weight.weighted_norm(&gpsi, 1)),
            fmt(bench.weight.weighted_norm(&gpsi, 2)),
            fmt(grid_norm(&v.v1, h)),
            fmt(grid_norm(&v.v2, h)),
            fmt(n_functional(
                &bench.grid,
                &bench.evd,
                &bench.window,
                &bench.set.d,
                psi,
                cfg.alpha,
                nu,
            )),
        ]);
    }
    let path = cfg.out.join(format!("trajectory_{run_id}.csv"));
    report::write_csv(&path, report::TRAJECTORY_HEADER, &rows)
        .map_err(|e| CoreError::SolveFailure(format!("writing {}: {e}", path.display())))?;
    Ok(())
}

pub fn run_spectrum(cfg: &RunConfig) -> Result<ResultRecord> {
    let run_id = cfg.run_id("spectrum");
    let mut rec = ResultRecord {
        run_id: run_id.clone(),
        subcommand: "spectrum",
        metrics: Vec::new(),
    };
    let grid = build_grid(cfg.y_half, cfg.n)?;
    let profile = cfg.build_profile()?;
    let hyp = check_hypotheses(&profile, &grid, &HypothesisTolerances::default())?;
    let lambda0 = schrodinger_lambda0(&profile, &grid)?;
    let sigma = shearflow_core::operators::assemble_sigma(&grid, &profile, cfg.alpha)?;
    let c0 = coercivity_check(&sigma)?;
    rec.push("lambda0", fmt(lambda0));
    rec.push("c0", fmt(c0));
    rec.push("h1_pass", hyp.h1_pass.to_string());
    rec.push("h2_pass", hyp.h2_pass.to_string());
    rec.push("h3_pass", hyp.h3_pass.to_string());

    // spectrum confinement needs H, which needs coercivity
    let (n_outside, max_excursion, n_persistent) =
        if c0 > shearflow_core::operators::EIGENVALUE_FLOOR {
            let set = OperatorSet::build(&grid, &profile, cfg.alpha)?;
            let base = shearflow_core::linalg::sym_eigenvalues(set.h.as_real().unwrap())?;
            let fine_grid = grid.refined();
            let fine_set = OperatorSet::build(&fine_grid, &profile, cfg.alpha)?;
            let fine =
                shearflow_core::linalg::sym_eigenvalues(fine_set.h.as_real().unwrap())?;
            let rep = spectrum_report(
                base.as_slice(),
                fine.as_slice(),
                set.u_minus,
                set.u_plus,
                1e-6,
            );
            (rep.n_outside, rep.max_excursion, rep.persistent.len())
        } else {
            rec.push("note", "sigma not coercive; spectrum of H not defined");
            (0, f64::NAN, 0)
        };
    rec.push("n_outside", n_outside.to_string());
    rec.push("n_persistent", n_persistent.to_string());
    let pass = hyp.h1_pass
        && hyp.h2_pass
        && hyp.h3_pass
        && c0 > 0.0
        && n_outside == 0
        && n_persistent == 0;
    rec.push("pass", pass.to_string());

    let row = vec![
        run_id.clone(),
        fmt(cfg.l),
        cfg.alpha.to_string(),
        cfg.n.to_string(),
        fmt(cfg.y_half),
        fmt(lambda0),
        fmt(c0),
        n_outside.to_string(),
        fmt(max_excursion),
        pass.to_string(),
    ];
    report::write_csv(
        &cfg.out.join("spectrum.csv"),
        report::SPECTRUM_HEADER,
        &[row],
    )
    .map_err(|e| CoreError::SolveFailure(format!("writing spectrum.csv: {e}")))?;
    Ok(rec)
}

pub fn run_mourre(cfg: &RunConfig) -> Result<ResultRecord> {
    let run_id = cfg.run_id("mourre");
    let mut rec = ResultRecord {
        run_id: run_id.clone(),
        subcommand: "mourre",
        metrics: Vec::new(),
    };
    let bench = assemble(cfg)?;
    let (iha, _) = bench.set.commutator()?;
    let (reports, width_at_pass) = mourre_cover(
        &bench.evd,
        &iha,
        &bench.set.samples,
        cfg.window.0,
        cfg.window.1,
        bench.set.u_minus,
        bench.set.u_plus,
        1e-8,
    )?;
    let mut rows = Vec::new();
    for r in &reports {
        rows.push(vec![
            run_id.clone(),
            fmt(r.window.lo),
            fmt(r.window.hi),
            fmt(r.theta),
            fmt(r.projected_min),
            r.pass.to_string(),
            width_at_pass.map(fmt).unwrap_or_default(),
        ]);
    }
    report::write_csv(&cfg.out.join("mourre.csv"), report::MOURRE_HEADER, &rows)
        .map_err(|e| CoreError::SolveFailure(format!("writing mourre.csv: {e}")))?;
    rec.push("windows", reports.len().to_string());
    rec.push(
        "width_at_pass",
        width_at_pass.map(fmt).unwrap_or_else(|| "none".into()),
    );
    rec.push("all_pass", reports.iter().all(|r| r.pass).to_string());
    Ok(rec)
}

pub fn run_damping(cfg: &RunConfig) -> Result<ResultRecord> {
    let run_id = cfg.run_id("damping");
    let mut rec = ResultRecord {
        run_id: run_id.clone(),
        subcommand: "damping",
        metrics: Vec::new(),
    };
    let bench = assemble(cfg)?;
    let ts = fit_window(cfg, &bench.evd, &bench.window);
    rec.push("t_min", fmt(ts[0]));
    rec.push("t_max", fmt(*ts.last().unwrap()));

    let mut rows = Vec::new();
    for &k in &cfg.k_list {
        let fit = damping_fit(
            &bench.evd,
            &bench.window,
            &bench.weight,
            &bench.psi0,
            k,
            cfg.alpha,
            &ts,
        )?;
        let tol = 0.15 * k as f64;
        rec.push(&format!("exponent_k{k}"), fmt(fit.exponent));
        rec.push(&format!("residual_k{k}"), fmt(fit.residual));
        rows.push(damping_row(&run_id, k, &fit, -(k as f64), tol.max(0.15)));
    }
    let (v1, v2) = velocity_damping_fit(
        &bench.set,
        &bench.evd,
        &bench.window,
        &bench.psi0,
        cfg.alpha,
        &ts,
    )?;
    rec.push("exponent_v1", fmt(v1.exponent));
    rec.push("exponent_v2", fmt(v2.exponent));
    report::write_csv(&cfg.out.join("damping.csv"), report::DAMPING_HEADER, &rows)
        .map_err(|e| CoreError::SolveFailure(format!("writing damping.csv: {e}")))?;

    // trajectory artifact on the fit grid
    let prop = InviscidPropagator::new(&bench.evd, &bench.psi0, cfg.alpha)?;
    let states: Vec<DVector<Complex64>> = ts.iter().map(|&t| prop.at(t).values).collect();
    write_trajectory(cfg, &run_id, &bench, &ts, &states, 0.0)?;
    Ok(rec)
}

pub fn run_viscous_damping(cfg: &RunConfig) -> Result<ResultRecord> {
    let run_id = cfg.run_id("viscous-damping");
    let mut rec = ResultRecord {
        run_id: run_id.clone(),
        subcommand: "viscous-damping",
        metrics: Vec::new(),
    };
    let nu = cfg.nu_list[0];
    if nu == 0.0 {
        return Err(CoreError::InvalidParameter {
            name: "nu",
            message: "viscous damping run needs nu > 0".into(),
        });
    }
    let bench = assemble(cfg)?;
    let ts = fit_window(cfg, &bench.evd, &bench.window);
    let gen = viscous_generator(&bench.set, nu)?;
    let cfg_dt = match cfg.dt {
        Some(dt) => PropagatorConfig { dt },
        None => PropagatorConfig::auto(&gen),
    };
    let mut rows = Vec::new();
    let mut gap_report = None;
    for &k in &cfg.k_list {
        let (fit, gaps) = viscous_damping_fit(
            &bench.set,
            &bench.evd,
            &bench.window,
            &bench.weight,
            &bench.psi0,
            k,
            cfg.alpha,
            nu,
            &ts,
            &cfg_dt,
        )?;
        rec.push(&format!("exponent_k{k}"), fmt(fit.exponent));
        rec.push(&format!("gap_c_fit_k{k}"), fmt(gaps.c_fit));
        rows.push(damping_row(&run_id, k, &fit, -(k as f64), (0.15 * k as f64).max(0.15)));
        if k == 1 {
            gap_report = Some(gaps);
        }
    }
    rec.push("nu", fmt(nu));
    rec.push("dt", fmt(cfg_dt.dt));
    report::write_csv(&cfg.out.join("damping.csv"), report::DAMPING_HEADER, &rows)
        .map_err(|e| CoreError::SolveFailure(format!("writing damping.csv: {e}")))?;

    let traj = viscous_propagate(
        &bench.grid,
        &gen,
        &bench.psi0,
        cfg.alpha,
        nu,
        &ts,
        &cfg_dt,
    )?;
    let times: Vec<f64> = traj.states.iter().map(|s| s.t).collect();
    let states: Vec<DVector<Complex64>> = traj.states.iter().map(|s| s.values.clone()).collect();
    write_trajectory(cfg, &run_id, &bench, &times, &states, nu)?;
    // energy envelope
    let h = bench.grid.spacing();
    let norms: Vec<(f64, f64)> = traj
        .states
        .iter()
        .map(|s| (s.t, grid_norm(&s.values, h)))
        .collect();
    rec.push("m0_fit", fmt(energy_estimate_check(&norms, nu)));
    if let Some(g) = gap_report {
        let mid = g.times[g.times.len() / 2];
        rec.push("gap_mid_t", fmt(mid));
        rec.push("gap_mid", fmt(g.gap_at(mid)));
    }
    Ok(rec)
}

pub fn run_enhanced(cfg: &RunConfig) -> Result<ResultRecord> {
    let run_id = cfg.run_id("enhanced");
    let mut rec = ResultRecord {
        run_id: run_id.clone(),
        subcommand: "enhanced",
        metrics: Vec::new(),
    };
    let bench = assemble(cfg)?;
    let report = enhanced_dissipation_scan(
        &bench.set,
        &bench.evd,
        &bench.window,
        &bench.psi0,
        cfg.alpha,
        &cfg.nu_list,
    )?;
    let beta_pass = (report.beta - 1.0 / 3.0).abs() <= 0.1 && report.flagged.is_empty();
    let mut rows = Vec::new();
    for e in &report.entries {
        rows.push(vec![
            run_id.clone(),
            fmt(e.nu),
            e.t_half.map(fmt).unwrap_or_default(),
            String::new(),
            String::new(),
            String::new(),
            e.t_half.is_some().to_string(),
        ]);
    }
    rows.push(vec![
        run_id.clone(),
        String::new(),
        String::new(),
        fmt(report.beta),
        fmt(report.c0_fit),
        fmt(report.beta_residual),
        beta_pass.to_string(),
    ]);
    report::write_csv(
        &cfg.out.join("enhanced.csv"),
        report::ENHANCED_HEADER,
        &rows,
    )
    .map_err(|e| CoreError::SolveFailure(format!("writing enhanced.csv: {e}")))?;
    rec.push("beta", fmt(report.beta));
    rec.push("c0_fit", fmt(report.c0_fit));
    rec.push("flagged", format!("{:?}", report.flagged));
    rec.push("pass", beta_pass.to_string());
    Ok(rec)
}

/// Cross product of (L_list x alpha_list x nu_list), parallel over tuples,
/// aggregated in deterministic index order. A tuple failure is recorded and
/// does not abort the sweep.
pub fn run_sweep(cfg: &RunConfig, inner: &str) -> Result<Vec<ResultRecord>> {
    use rayon::prelude::*;

    let mut tuples = Vec::new();
    for &l in &cfg.l_list {
        for &alpha in &cfg.alpha_list {
            for &nu in &cfg.nu_list {
                let mut sub = cfg.clone();
                sub.l = l;
                sub.alpha = alpha;
                sub.nu_list = vec![nu];
                if !cfg.y_explicit {
                    sub.y_half = 40.0 * l.max(1.0);
                }
                // keep the default half-width rule when Y was not set per-tuple
                sub.out = cfg.out.join(format!(
                    "sweep_L{}_a{}_nu{}",
                    fmt(l),
                    alpha,
                    fmt(nu)
                ));
                tuples.push(sub);
            }
        }
    }
    let results: Vec<(usize, Result<ResultRecord>)> = tuples
        .par_iter()
        .enumerate()
        .map(|(i, sub)| {
            let r = match inner {
                "spectrum" => run_spectrum(sub),
                "mourre" => run_mourre(sub),
                "damping" => run_damping(sub),
                "viscous-damping" => run_viscous_damping(sub),
                other => Err(CoreError::InvalidParameter {
                    name: "run",
                    message: format!("sweep cannot wrap `{other}`"),
                }),
            };
            (i, r)
        })
        .collect();
    let mut records = Vec::new();
    for (i, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => println!("sweep tuple {i} failed: {e}"),
        }
    }
    Ok(records)
}
