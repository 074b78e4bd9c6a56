use nalgebra::DVector;
use num_complex::Complex64;
use shearflow_core::discretization::build_grid;
use shearflow_core::evolution::*;
use shearflow_core::observables::log_spaced;
use shearflow_core::operators::*;
use shearflow_core::profiles::*;
use shearflow_core::spectral::*;

fn main() {
    let mut text = String::from("y U Uprime Uprimeprime\n");
    for i in 0..8001 {
        let y = -90.0 + 180.0 * i as f64 / 8000.0;
        let u = (y / 2.0_f64).tanh();
        text.push_str(&format!("{y} {u} {} 0.0\n", (1.0 - u * u) / 2.0));
    }
    let profile = parse_table_profile(&text).unwrap();
    let grid = build_grid(80.0, 2048).unwrap();
    let set = OperatorSet::build(&grid, &profile, 1).unwrap();
    let evd = eigendecompose(&set.h).unwrap();
    let w = bump_function(-0.4, 0.4, 0.08).unwrap();
    let weight = FrequencyWeight::new(&grid).unwrap();
    let psi0 = spectrally_prepared_gaussian(&grid, &evd, &w, 0.0, 1.0);
    let prop = InviscidPropagator::new(&evd, &psi0, 1).unwrap();
    let h = grid.spacing();

    // frequency histogram of psi(t) in the <A>^2-eigenbasis, per |k| decade
    let n = grid.len();
    for &t in &[10.0, 25.0, 40.0] {
        let st = prop.at(t);
        let c = {
            // coefficients in the weight basis
            let re = DVector::from_fn(n, |i, _| st.values[i].re);
            let im = DVector::from_fn(n, |i, _| st.values[i].im);
            let wre = weight_eigvecs(&weight) .transpose() * re;
            let wim = weight_eigvecs(&weight).transpose() * im;
            DVector::from_fn(n, |i, _| Complex64::new(wre[i], wim[i]))
        };
        // effective |k| of mode j: sqrt(lambda_j - 1)
        println!("t = {t}: frequency-bucket mass (relative to total)");
        let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let buckets = [
            (0.0, 2.0),
            (2.0, 5.0),
            (5.0, 10.0),
            (10.0, 15.0),
            (15.0, 20.0),
            (20.0, 25.7),
        ];
        for (lo, hi) in buckets {
            let mut mass = 0.0;
            for j in 0..n {
                let k = (weight.eigenvalues()[j] - 1.0).max(0.0).sqrt();
                if k >= lo && k < hi {
                    mass += c[j].norm_sqr();
                }
            }
            println!("  |k| in [{lo:5.1},{hi:5.1}): {:.3e}", (mass / total).sqrt());
        }
    }
    let _ = (h, log_spaced(1.0, 2.0, 3));
}

fn weight_eigvecs(w: &FrequencyWeight) -> nalgebra::DMatrix<f64> {
    w.eigenvectors().clone()
}
