//! Full-scale dry run of the acceptance measurements.

use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use shearflow_core::discretization::build_grid;
use shearflow_core::evolution::*;
use shearflow_core::linalg::grid_norm;
use shearflow_core::observables::*;
use shearflow_core::operators::*;
use shearflow_core::profiles::*;
use shearflow_core::spectral::*;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());

    if which == "lambda0" || which == "all" {
        println!("== criterion 1: lambda0 = -1/L^2 @ N=2048, Y=40L ==");
        for l in [1.0f64, 2.0, 4.0] {
            let t0 = Instant::now();
            let grid = build_grid(40.0 * l, 2048).unwrap();
            let p = make_tanh_profile(l).unwrap();
            let l0 = schrodinger_lambda0(&p, &grid).unwrap();
            println!(
                "L={l}: lambda0={l0:.8} err={:.2e} ({:?})",
                (l0 + 1.0 / (l * l)).abs(),
                t0.elapsed()
            );
        }
    }

    if which == "c0" || which == "all" {
        println!("== criterion 2: c0 stability N=1024 vs 2048 ==");
        for l in [1.5f64, 2.0, 4.0] {
            let p = make_tanh_profile(l).unwrap();
            for alpha in [1, 2, 3] {
                let t0 = Instant::now();
                let mut c0s = Vec::new();
                for n in [1024usize, 2048] {
                    let grid = build_grid(40.0 * l.max(1.0), n).unwrap();
                    let sigma = assemble_sigma(&grid, &p, alpha).unwrap();
                    c0s.push(coercivity_check(&sigma).unwrap());
                }
                println!(
                    "L={l} alpha={alpha}: c0={:.6} drift={:.2e} ({:?})",
                    c0s[1],
                    (c0s[1] - c0s[0]).abs(),
                    t0.elapsed()
                );
            }
        }
    }

    if which == "mourre" || which == "all" {
        println!("== criterion 4: width-0.1 windows over [-0.3, 0.3] ==");
        let p = make_tanh_profile(2.0).unwrap();
        for n in [1024usize, 2048] {
            let t0 = Instant::now();
            let grid = build_grid(80.0, n).unwrap();
            let set = OperatorSet::build(&grid, &p, 1).unwrap();
            let evd = eigendecompose(&set.h).unwrap();
            let (iha, _) = set.commutator().unwrap();
            let reports = mourre_cover_at_width(
                &evd, &iha, &set.samples, -0.3, 0.3, 0.1, -1.0, 1.0, 1e-8,
            )
            .unwrap();
            for r in &reports {
                println!(
                    "  N={n} window [{:.2},{:.2}] theta={:.4} proj={:.4} raw={:.4} rank={} pass={}",
                    r.window.lo, r.window.hi, r.theta, r.projected_min, r.raw_min, r.rank, r.pass
                );
            }
            println!("  N={n} elapsed {:?}", t0.elapsed());
        }
    }

    if which == "spectrum" || which == "all" {
        println!("== criterion 3: spectrum confinement 2048 vs refined ==");
        let t0 = Instant::now();
        let p = make_tanh_profile(2.0).unwrap();
        let g1 = build_grid(80.0, 2048).unwrap();
        let set1 = OperatorSet::build(&g1, &p, 1).unwrap();
        let v1: Vec<f64> = shearflow_core::linalg::sym_eigenvalues(set1.h.as_real().unwrap())
            .unwrap()
            .iter()
            .cloned()
            .collect();
        println!("  base build+eigs {:?}", t0.elapsed());
        let t1 = Instant::now();
        let g2 = g1.refined();
        let set2 = OperatorSet::build(&g2, &p, 1).unwrap();
        let v2: Vec<f64> = shearflow_core::linalg::sym_eigenvalues(set2.h.as_real().unwrap())
            .unwrap()
            .iter()
            .cloned()
            .collect();
        println!("  refined (N={}) build+eigs {:?}", g2.len(), t1.elapsed());
        let rep = spectrum_report(&v1, &v2, -1.0, 1.0, 1e-6);
        println!(
            "  outside={} refined_outside={} excursion={:.2e} isolated={} persistent={}",
            rep.n_outside,
            rep.n_outside_refined,
            rep.max_excursion,
            rep.isolated.len(),
            rep.persistent.len()
        );
    }

    if which == "damping" || which == "all" {
        println!("== criterion 5/6: damping fits @ N=2048, Y=80 ==");
        let t0 = Instant::now();
        let p = make_tanh_profile(2.0).unwrap();
        let grid = build_grid(80.0, 2048).unwrap();
        let set = OperatorSet::build(&grid, &p, 1).unwrap();
        let evd = eigendecompose(&set.h).unwrap();
        let w = bump_function(-0.4, 0.4, 0.08).unwrap();
        let weight = FrequencyWeight::new(&grid).unwrap();
        let psi0 = spectrally_prepared_gaussian(&grid, &evd, &w, 0.0, 1.0);
        let horizon = recurrence_horizon(&evd, &w);
        let t_max = (horizon / 2.0).min(300.0);
        println!("  horizon={horizon:.1}, window [10, {t_max:.1}], setup {:?}", t0.elapsed());
        let ts = log_spaced(10.0, t_max, 24);
        for k in [0u32, 1, 2] {
            let fit = damping_fit(&evd, &w, &weight, &psi0, k, 1, &ts);
            match fit {
                Ok(f) => println!(
                    "  k={k}: exponent={:.4} residual={:.3} conclusive={}",
                    f.exponent, f.residual, f.conclusive
                ),
                Err(e) => println!("  k={k}: {e}"),
            }
        }
        let (f1, f2) = velocity_damping_fit(&set, &evd, &w, &psi0, 1, &ts).unwrap();
        println!(
            "  v1: exponent={:.4} residual={:.3}; v2: exponent={:.4} residual={:.3}",
            f1.exponent, f1.residual, f2.exponent, f2.residual
        );
        // unitarity drift to t=300
        let prop = InviscidPropagator::new(&evd, &psi0, 1).unwrap();
        let n0 = grid_norm(&psi0, grid.spacing());
        let mut max_drift = 0.0f64;
        let gpsi0 = evd.apply_to_complex(|l| w.eval(l), &psi0);
        let g0 = grid_norm(&gpsi0, grid.spacing());
        let mut max_gdrift = 0.0f64;
        for t in [50.0, 150.0, 300.0] {
            let st = prop.at(t);
            max_drift = max_drift.max((grid_norm(&st.values, grid.spacing()) - n0).abs() / n0);
            let g = evd.apply_to_complex(|l| w.eval(l), &st.values);
            max_gdrift =
                max_gdrift.max((grid_norm(&g, grid.spacing()) - g0).abs() / g0);
        }
        println!("  unitarity drift {max_drift:.2e}, g(H)-norm drift {max_gdrift:.2e}");
        println!("  damping block elapsed {:?}", t0.elapsed());

        // alpha = 2 decade-time comparison
        let t0 = Instant::now();
        let set2 = OperatorSet::build(&grid, &p, 2).unwrap();
        let evd2 = eigendecompose(&set2.h).unwrap();
        let psi02 = spectrally_prepared_gaussian(&grid, &evd2, &w, 0.0, 1.0);
        let (f1a2, _) = velocity_damping_fit(&set2, &evd2, &w, &psi02, 2, &ts).unwrap();
        println!(
            "  alpha=2 v1 exponent={:.4} ({:?})",
            f1a2.exponent,
            t0.elapsed()
        );
    }

    if which == "viscous" || which == "all" {
        println!("== criterion 9: uniform-in-nu damping @ N=2048 ==");
        let t0 = Instant::now();
        let p = make_tanh_profile(2.0).unwrap();
        let grid = build_grid(80.0, 2048).unwrap();
        let set = OperatorSet::build(&grid, &p, 1).unwrap();
        let evd = eigendecompose(&set.h).unwrap();
        let w = bump_function(-0.4, 0.4, 0.08).unwrap();
        let weight = FrequencyWeight::new(&grid).unwrap();
        let psi0 = spectrally_prepared_gaussian(&grid, &evd, &w, 0.0, 1.0);
        let horizon = recurrence_horizon(&evd, &w);
        let t_max = (horizon / 2.0).min(300.0);
        let ts = log_spaced(10.0, t_max, 20);
        let inviscid = damping_fit(&evd, &w, &weight, &psi0, 1, 1, &ts).unwrap();
        let mut gaps = Vec::new();
        for nu in [1e-5f64, 4e-5] {
            let gen = viscous_generator(&set, nu).unwrap();
            let cfg = PropagatorConfig::auto(&gen);
            let (fit, gap) = viscous_damping_fit(
                &set, &evd, &w, &weight, &psi0, 1, 1, nu, &ts, &cfg,
            )
            .unwrap();
            println!(
                "  nu={nu:.0e}: exponent={:.4} (inviscid {:.4}, diff {:.3}) gap@40={:.3e} C={:.3}",
                fit.exponent,
                inviscid.exponent,
                (fit.exponent - inviscid.exponent).abs(),
                gap.gap_at(40.0),
                gap.c_fit
            );
            gaps.push(gap.gap_at(40.0));
        }
        println!(
            "  gap ratio (4e-5 / 1e-5) = {:.3} (sqrt law predicts 2)",
            gaps[1] / gaps[0]
        );
        println!("  viscous block elapsed {:?}", t0.elapsed());
    }

    if which == "enhanced" || which == "all" {
        println!("== criterion 10: enhanced dissipation @ N=2048 ==");
        let t0 = Instant::now();
        let p = make_tanh_profile(2.0).unwrap();
        let grid = build_grid(80.0, 2048).unwrap();
        let set = OperatorSet::build(&grid, &p, 1).unwrap();
        let evd = eigendecompose(&set.h).unwrap();
        let w = bump_function(-0.4, 0.4, 0.08).unwrap();
        let psi0 = spectrally_prepared_gaussian(&grid, &evd, &w, 0.0, 1.0);
        let report = enhanced_dissipation_scan(
            &set,
            &evd,
            &w,
            &psi0,
            1,
            &[1e-3, 3e-4, 1e-4, 3e-5],
        )
        .unwrap();
        for e in &report.entries {
            println!("  nu={:.0e}: T_half={:?} N0={:.4}", e.nu, e.t_half, e.n0);
        }
        println!(
            "  beta={:.4} (resid {:.3}) c0_fit={:.4} flagged={:?}",
            report.beta, report.beta_residual, report.c0_fit, report.flagged
        );
        println!("  enhanced block elapsed {:?}", t0.elapsed());
    }

    if which == "energy" || which == "all" {
        println!("== criterion 11: energy envelope @ N=512 ==");
        let p = make_tanh_profile(2.0).unwrap();
        let grid = build_grid(80.0, 512).unwrap();
        let set = OperatorSet::build(&grid, &p, 1).unwrap();
        let psi0 = DVector::from_fn(grid.len(), |j, _| {
            Complex64::new((-grid.node(j) * grid.node(j) / 2.0).exp(), 0.0)
        });
        let h = grid.spacing();
        for nu in [1e-3f64, 1e-4] {
            let gen = viscous_generator(&set, nu).unwrap();
            let cfg = PropagatorConfig::auto(&gen);
            let ts: Vec<f64> = (1..=25).map(|i| 2.0 * i as f64).collect();
            let traj = viscous_propagate(&grid, &gen, &psi0, 1, nu, &ts, &cfg).unwrap();
            let norms: Vec<(f64, f64)> = std::iter::once((0.0, grid_norm(&psi0, h)))
                .chain(
                    traj.states
                        .iter()
                        .map(|s| (s.t, grid_norm(&s.values, h))),
                )
                .collect();
            let m0 = energy_estimate_check(&norms, nu);
            // ledger: nu int ||grad psi||^2 <= ||psi0||^2 (1 + C nu t e^{2 M0 nu t})
            let n0sq = grid_norm(&psi0, h).powi(2);
            let mut c_needed = 0.0f64;
            for (i, s) in traj.states.iter().enumerate() {
                let lhs = traj.dissipation(i, nu, 1);
                let t = s.t;
                if t > 0.0 {
                    let c = ((lhs / n0sq) - 1.0).max(0.0) / (nu * t * (2.0 * m0 * nu * t).exp());
                    c_needed = c_needed.max(c);
                }
            }
            println!("  nu={nu:.0e}: M0={m0:.4} C_needed={c_needed:.4}");
        }
    }
}
