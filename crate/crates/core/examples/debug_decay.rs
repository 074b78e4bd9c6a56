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
    let y_half: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40.0);
    let sigma: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let profile = make_tanh_profile(2.0).unwrap();
    let grid = build_grid(y_half, 2048).unwrap();
    let set = OperatorSet::build(&grid, &profile, 1).unwrap();
    let evd = eigendecompose(&set.h).unwrap();
    let w = bump_function(-0.4, 0.4, 0.08).unwrap();
    let weight = FrequencyWeight::new(&grid).unwrap();
    // custom prep with tunable sigma
    let raw = DVector::from_fn(grid.len(), |j, _| {
        let y = grid.node(j);
        Complex64::new((-y * y / 2.0).exp(), 0.0)
    });
    let mut c = evd.coefficients(&raw);
    for k in 0..c.len() {
        let l = evd.eigenvalues()[k];
        let env = if l.abs() > 0.4 { 0.0 } else { (-0.5 * (l / sigma) * (l / sigma)).exp() };
        c[k] *= Complex64::new(env, 0.0);
    }
    let psi0 = evd.from_coefficients(&c);
    let horizon = recurrence_horizon(&evd, &w);
    println!("Y={y_half} sigma={sigma}: horizon = {horizon:.1}");
    let prop = InviscidPropagator::new(&evd, &psi0, 1).unwrap();
    let h = grid.spacing();
    println!("t, q1, q2, v1, v2, slope_q1, slope_q2");
    let ts = log_spaced(8.0, horizon.min(300.0) * 0.55, 30);
    let mut prev: Option<(f64, f64, f64)> = None;
    for &t in &ts {
        let st = prop.at(t);
        let gp = evd.apply_to_complex(|l| w.eval(l), &st.values);
        let q1 = weight.weighted_norm(&gp, 1);
        let q2 = weight.weighted_norm(&gp, 2);
        let s_inv_psi = set.s_inv.apply_complex(&st.values);
        let omega = DVector::from_fn(grid.len(), |j, _| {
            Complex64::new(set.samples.m[j], 0.0) * s_inv_psi[j]
        });
        let v = velocity_from_vorticity(&grid, 1, &omega).unwrap();
        let (s1, s2) = prev
            .map(|(tp, q1p, q2p)| {
                (
                    (q1.ln() - q1p.ln()) / (t.ln() - tp.ln()),
                    (q2.ln() - q2p.ln()) / (t.ln() - tp.ln()),
                )
            })
            .unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{t:8.2} {q1:.4e} {q2:.4e} {:.4e} {:.4e} {s1:+.3} {s2:+.3}",
            grid_norm(&v.v1, h),
            grid_norm(&v.v2, h)
        );
        prev = Some((t, q1, q2));
    }
}
