use nalgebra::DVector;
use num_complex::Complex64;
use shearflow_core::discretization::{build_grid, Grid};
use shearflow_core::evolution::*;
use shearflow_core::observables::*;
use shearflow_core::operators::*;
use shearflow_core::profiles::*;
use shearflow_core::spectral::*;

fn prep(
    grid: &Grid,
    evd: &EigenDecomposition,
    window: &SpectralWindow,
    width: f64,
    sigma: f64,
) -> DVector<Complex64> {
    let raw = DVector::from_fn(grid.len(), |j, _| {
        let y = grid.node(j);
        Complex64::new((-y * y / (2.0 * width * width)).exp(), 0.0)
    });
    let (lo, hi) = window.core();
    let mid = 0.5 * (lo + hi);
    let mut c = evd.coefficients(&raw);
    for k in 0..c.len() {
        let l = evd.eigenvalues()[k];
        let x = (l - mid) / sigma;
        let env = if l < lo || l > hi { 0.0 } else { (-0.5 * x * x).exp() };
        c[k] *= Complex64::new(env, 0.0);
    }
    evd.from_coefficients(&c)
}

fn main() {
    let p = make_tanh_profile(2.0).unwrap();
    let grid = build_grid(std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(40.0), 2048).unwrap();
    let set = OperatorSet::build(&grid, &p, 1).unwrap();
    let evd = eigendecompose(&set.h).unwrap();
    let w = bump_function(-0.4, 0.4, 0.08).unwrap();
    let weight = FrequencyWeight::new(&grid).unwrap();
    let horizon = recurrence_horizon(&evd, &w);
    let t_max = (horizon / 2.0).min(300.0);
    println!("horizon={horizon:.1}, fit window [10, {t_max:.1}]");
    let ts = log_spaced(10.0, t_max, 24);
    for width in [1.1f64, 1.25, 1.4] {
        for sigma in [0.22f64, 0.24, 0.26, 0.28] {
            let psi0 = prep(&grid, &evd, &w, width, sigma);
            print!("W={width:.2} sig={sigma:4.2}: ");
            for k in [1u32, 2] {
                match damping_fit(&evd, &w, &weight, &psi0, k, 1, &ts) {
                    Ok(f) => print!("k{k}={:+.3}/r{:.2} ", f.exponent, f.residual),
                    Err(_) => print!("k{k}=ERR "),
                }
            }
            match velocity_damping_fit(&set, &evd, &w, &psi0, 1, &ts) {
                Ok((f1, f2)) => print!(
                    "v1={:+.3}/r{:.2} v2={:+.3}/r{:.2}",
                    f1.exponent, f1.residual, f2.exponent, f2.residual
                ),
                Err(_) => print!("v=ERR"),
            }
            println!();
        }
    }
}
