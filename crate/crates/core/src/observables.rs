//! Measurements on trajectories: velocity recovery from vorticity, weighted
//! decay-rate fits, the anisotropic `N(t)` functional with its half-life
//! viscosity scan, and the moving-cutoff propagation observable.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::discretization::{DenseOperator, Grid, LaplacianSolver};
use crate::error::{CoreError, Result};
use crate::evolution::{
    viscous_generator, viscous_propagate, InviscidPropagator, PropagatorConfig,
};
use crate::linalg::grid_norm;
use crate::operators::OperatorSet;
use crate::spectral::{
    ConjugateOperatorCalculus, EigenDecomposition, FrequencyWeight, SpectralWindow,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Log-spaced sample times.
pub fn log_spaced(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    let a = t_min.ln();
    let b = t_max.ln();
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

// ---------------------------------------------------------------------------
// velocity recovery
// ---------------------------------------------------------------------------

/// Stream function and velocities from one vorticity snapshot:
/// `phi = lap_alpha^{-1} omega`, `v1 = -d phi/dy`, `v2 = i alpha phi`.
///
/// The gradient is sampled on the dual grid (cell midpoints, Dirichlet
/// phantom zeros at both walls), which is second-order accurate and whose
/// norm is exactly the discrete energy gradient `<-d2 phi, phi>`; the
/// centered 3-point first difference would lose accuracy near the grid
/// Nyquist scale, which the long-time mixing fits do reach.
pub struct VelocityFields {
    pub phi: DVector<Complex64>,
    /// `N + 1` midpoint values of `-d phi/dy`
    pub v1: DVector<Complex64>,
    pub v2: DVector<Complex64>,
}

pub fn velocity_from_vorticity(
    grid: &Grid,
    alpha: i32,
    omega: &DVector<Complex64>,
) -> Result<VelocityFields> {
    let solver = LaplacianSolver::new(grid, alpha)?;
    let phi = solver.solve_complex(omega);
    let n = grid.len();
    let h = grid.spacing();
    let v1 = DVector::from_fn(n + 1, |e, _| {
        let right = if e < n {
            phi[e]
        } else {
            Complex64::new(0.0, 0.0)
        };
        let left = if e > 0 {
            phi[e - 1]
        } else {
            Complex64::new(0.0, 0.0)
        };
        -(right - left) / Complex64::new(h, 0.0)
    });
    let a = alpha as f64;
    let v2 = phi.map(|z| I * Complex64::new(a, 0.0) * z);
    Ok(VelocityFields { phi, v1, v2 })
}

// ---------------------------------------------------------------------------
// power-law fitting
// ---------------------------------------------------------------------------

/// Fitted power law `q ~ prefactor * t^exponent` over a time window.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// max relative deviation of the data from the fit over the window
    pub residual: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub quantity: String,
    /// a fit with residual above 0.5 is inconclusive, never a pass
    pub conclusive: bool,
}

/// Least squares on `log q` vs `log t`. `expect_decay` applies the
/// non-decaying-signal guard (slope above -0.2 is a fit failure).
pub fn fit_power_law(
    times: &[f64],
    values: &[f64],
    quantity: &str,
    expect_decay: bool,
) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(CoreError::FitFailure {
            reason: format!(
                "{}: need at least 8 usable samples, got {}",
                quantity,
                times.len()
            ),
        });
    }
    if values.iter().any(|&q| !(q > 0.0) || !q.is_finite()) {
        return Err(CoreError::FitFailure {
            reason: format!("{quantity}: non-positive or non-finite samples"),
        });
    }
    let n = times.len() as f64;
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|q| q.ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(CoreError::FitFailure {
            reason: format!("{quantity}: degenerate time grid"),
        });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    if expect_decay && slope > -0.2 {
        return Err(CoreError::FitFailure {
            reason: format!("{quantity}: signal not decaying (slope {slope:.3})"),
        });
    }
    let mut residual = 0.0f64;
    for (x, y) in xs.iter().zip(&ys) {
        let pred = intercept + slope * x;
        residual = residual.max(((y - pred).exp() - 1.0).abs());
    }
    Ok(DecayFit {
        exponent: slope,
        prefactor: intercept.exp(),
        residual,
        t_min: times[0],
        t_max: times[times.len() - 1],
        quantity: quantity.to_string(),
        conclusive: residual <= 0.5,
    })
}

fn require_localized(
    evd: &EigenDecomposition,
    window: &SpectralWindow,
    psi0: &DVector<Complex64>,
) -> Result<()> {
    let gpsi = evd.apply_to_complex(|l| window.eval(l), psi0);
    let defect = (gpsi - psi0).norm() / psi0.norm().max(f64::MIN_POSITIVE);
    if defect > 1e-8 {
        return Err(CoreError::InvalidParameter {
            name: "psi0",
            message: format!(
                "initial data is not spectrally localized: ||g(H) psi0 - psi0|| = {defect:.3e} relative"
            ),
        });
    }
    Ok(())
}

/// Weighted-norm decay fit on the inviscid evolution:
/// `q(t) = || <A>^{-k} g(H) psi(t) ||`, fitted as a power law over `t_grid`.
#[allow(clippy::too_many_arguments)]
pub fn damping_fit(
    evd: &EigenDecomposition,
    window: &SpectralWindow,
    weight: &FrequencyWeight,
    psi0: &DVector<Complex64>,
    k: u32,
    alpha: i32,
    t_grid: &[f64],
) -> Result<DecayFit> {
    require_localized(evd, window, psi0)?;
    let prop = InviscidPropagator::new(evd, psi0, alpha)?;
    let mut qs = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let st = prop.at(t);
        let gpsi = evd.apply_to_complex(|l| window.eval(l), &st.values);
        qs.push(weight.weighted_norm(&gpsi, k));
    }
    fit_power_law(t_grid, &qs, &format!("weighted k={k}"), k >= 1)
}

/// Velocity decay fits from prepared vorticity data `omega0 = m S^{-1} psi0`:
/// power laws of `||v1||` and `||v2||`.
#[allow(clippy::too_many_arguments)]
pub fn velocity_damping_fit(
    set: &OperatorSet,
    evd: &EigenDecomposition,
    window: &SpectralWindow,
    psi0: &DVector<Complex64>,
    alpha: i32,
    t_grid: &[f64],
) -> Result<(DecayFit, DecayFit)> {
    require_localized(evd, window, psi0)?;
    let prop = InviscidPropagator::new(evd, psi0, alpha)?;
    let h = set.grid.spacing();
    let mut v1s = Vec::with_capacity(t_grid.len());
    let mut v2s = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let st = prop.at(t);
        let s_inv_psi = set.s_inv.apply_complex(&st.values);
        let omega = DVector::from_fn(set.grid.len(), |j, _| {
            Complex64::new(set.samples.m[j], 0.0) * s_inv_psi[j]
        });
        let v = velocity_from_vorticity(&set.grid, alpha, &omega)?;
        v1s.push(grid_norm(&v.v1, h));
        v2s.push(grid_norm(&v.v2, h));
    }
    let f1 = fit_power_law(t_grid, &v1s, "v1", true)?;
    let f2 = fit_power_law(t_grid, &v2s, "v2", true)?;
    Ok((f1, f2))
}

/// Viscous-vs-inviscid comparison: the same weighted fit on the viscous
/// trajectory plus the measured gap `|q_nu(t) - q_0(t)|` with the smallest
/// constant C making `gap <= C sqrt(nu t)` over the window.
#[derive(Debug, Clone)]
pub struct ViscousGapReport {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub c_fit: f64,
}

impl ViscousGapReport {
    /// Gap at the sample closest to t.
    pub fn gap_at(&self, t: f64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for (i, &ti) in self.times.iter().enumerate() {
            let d = (ti - t).abs();
            if d < best.0 {
                best = (d, self.gaps[i]);
            }
        }
        best.1
    }
}

#[allow(clippy::too_many_arguments)]
pub fn viscous_damping_fit(
    set: &OperatorSet,
    evd: &EigenDecomposition,
    window: &SpectralWindow,
    weight: &FrequencyWeight,
    psi0: &DVector<Complex64>,
    k: u32,
    alpha: i32,
    nu: f64,
    t_grid: &[f64],
    cfg: &PropagatorConfig,
) -> Result<(DecayFit, ViscousGapReport)> {
    require_localized(evd, window, psi0)?;
    if let Some(&t_end) = t_grid.last() {
        if nu * t_end > 0.1 {
            return Err(CoreError::InvalidParameter {
                name: "t_grid",
                message: format!(
                    "nu t = {} exceeds 0.1: correction-dominated regime",
                    nu * t_end
                ),
            });
        }
    }
    let gen = viscous_generator(set, nu)?;
    let traj = viscous_propagate(&set.grid, &gen, psi0, alpha, nu, t_grid, cfg)?;
    let prop = InviscidPropagator::new(evd, psi0, alpha)?;
    let mut qs = Vec::with_capacity(t_grid.len());
    let mut times = Vec::with_capacity(t_grid.len());
    let mut gaps = Vec::with_capacity(t_grid.len());
    let mut c_fit = 0.0f64;
    for st in &traj.states {
        // snapped times from the stepper
        let t = st.t;
        let g_v = evd.apply_to_complex(|l| window.eval(l), &st.values);
        let q_v = weight.weighted_norm(&g_v, k);
        let inv = prop.at(t);
        let g_i = evd.apply_to_complex(|l| window.eval(l), &inv.values);
        let q_i = weight.weighted_norm(&g_i, k);
        let gap = (q_v - q_i).abs();
        if t > 0.0 && nu > 0.0 {
            c_fit = c_fit.max(gap / (nu * t).sqrt());
        }
        times.push(t);
        qs.push(q_v);
        gaps.push(gap);
    }
    let fit = fit_power_law(&times, &qs, &format!("viscous weighted k={k}"), k >= 1)?;
    Ok((
        fit,
        ViscousGapReport {
            times,
            gaps,
            c_fit,
        },
    ))
}

// ---------------------------------------------------------------------------
// enhanced dissipation
// ---------------------------------------------------------------------------

/// The anisotropic functional
/// `N(t) = ||g psi|| + ||alpha g psi|| + nu^{1/3} ||d/dy g psi||`.
pub fn n_functional(
    grid: &Grid,
    evd: &EigenDecomposition,
    window: &SpectralWindow,
    d: &DenseOperator,
    psi: &DVector<Complex64>,
    alpha: i32,
    nu: f64,
) -> f64 {
    let h = grid.spacing();
    let gpsi = evd.apply_to_complex(|l| window.eval(l), psi);
    let base = grid_norm(&gpsi, h);
    let dg = d.apply_complex(&gpsi);
    base * (1.0 + (alpha as f64).abs()) + nu.powf(1.0 / 3.0) * grid_norm(&dg, h)
}

#[derive(Debug, Clone)]
pub struct DissipationEntry {
    pub nu: f64,
    pub n0: f64,
    /// first time the functional halves; None if it never halved in range
    pub t_half: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DissipationReport {
    pub entries: Vec<DissipationEntry>,
    /// fitted exponent of `T_half ~ nu^{-beta}`
    pub beta: f64,
    pub beta_residual: f64,
    /// pooled rate of the early exponential envelope `exp(-c0 nu^{1/3} t)`
    pub c0_fit: f64,
    /// viscosities excluded from the fit because N never halved
    pub flagged: Vec<f64>,
}

/// Half-life scan of `N(t)` over a list of viscosities. For each nu the
/// trajectory runs to `min(5.5 nu^{-1/3}, 0.2/nu)`.
#[allow(clippy::too_many_arguments)]
pub fn enhanced_dissipation_scan(
    set: &OperatorSet,
    evd: &EigenDecomposition,
    window: &SpectralWindow,
    psi0: &DVector<Complex64>,
    alpha: i32,
    nu_list: &[f64],
) -> Result<DissipationReport> {
    if nu_list.len() < 2 {
        return Err(CoreError::InvalidParameter {
            name: "nu_list",
            message: "need at least two viscosities".into(),
        });
    }
    let lo = nu_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = nu_list.iter().cloned().fold(0.0f64, f64::max);
    if (hi / lo).log10() < 1.5 {
        return Err(CoreError::InvalidParameter {
            name: "nu_list",
            message: format!(
                "viscosity list must span at least 1.5 decades, got {:.2}",
                (hi / lo).log10()
            ),
        });
    }
    let n0_test = n_functional(&set.grid, evd, window, &set.d, psi0, alpha, hi);
    let h = set.grid.spacing();
    if n0_test < 1e-10 * grid_norm(psi0, h).max(f64::MIN_POSITIVE) {
        return Err(CoreError::InvalidParameter {
            name: "psi0",
            message: "data has no mass in the spectral window; N(0) is degenerate".into(),
        });
    }

    let mut entries = Vec::new();
    let mut flagged = Vec::new();
    let mut halving: Vec<(f64, f64)> = Vec::new(); // (nu, t_half)
    let mut envelope: Vec<(f64, f64)> = Vec::new(); // (nu^{1/3} t, ln N/N0)
    for &nu in nu_list {
        let t_max = (5.5 * nu.powf(-1.0 / 3.0)).min(0.2 / nu);
        let gen = viscous_generator(set, nu)?;
        let cfg = PropagatorConfig::auto(&gen);
        let samples: Vec<f64> = (0..=240)
            .map(|i| t_max * i as f64 / 240.0)
            .collect();
        let traj = viscous_propagate(&set.grid, &gen, psi0, alpha, nu, &samples, &cfg)?;
        let ns: Vec<(f64, f64)> = traj
            .states
            .iter()
            .map(|st| {
                (
                    st.t,
                    n_functional(&set.grid, evd, window, &set.d, &st.values, alpha, nu),
                )
            })
            .collect();
        let n0 = ns[0].1;
        let mut t_half = None;
        for w in ns.windows(2) {
            let (t0, a) = w[0];
            let (t1, b) = w[1];
            if a > n0 / 2.0 && b <= n0 / 2.0 {
                let frac = (a - n0 / 2.0) / (a - b).max(f64::MIN_POSITIVE);
                t_half = Some(t0 + frac * (t1 - t0));
                break;
            }
        }
        match t_half {
            Some(th) => {
                halving.push((nu, th));
                for &(t, n) in &ns {
                    if t > 0.0 && t <= th && n > 0.0 {
                        envelope.push((nu.powf(1.0 / 3.0) * t, (n / n0).ln()));
                    }
                }
            }
            None => flagged.push(nu),
        }
        entries.push(DissipationEntry { nu, n0, t_half });
    }
    if halving.len() < 2 {
        return Err(CoreError::FitFailure {
            reason: "fewer than two viscosities produced a half-life".into(),
        });
    }
    // beta: ln T_half = -beta ln nu + const
    let xs: Vec<f64> = halving.iter().map(|(nu, _)| nu.ln()).collect();
    let ys: Vec<f64> = halving.iter().map(|(_, th)| th.ln()).collect();
    let (slope, _, resid) = linear_fit(&xs, &ys);
    // c0: pooled envelope ln(N/N0) = -c0 (nu^{1/3} t)
    let c0_fit = if envelope.is_empty() {
        0.0
    } else {
        let num: f64 = envelope.iter().map(|(x, y)| x * y).sum();
        let den: f64 = envelope.iter().map(|(x, _)| x * x).sum();
        -(num / den.max(f64::MIN_POSITIVE))
    };
    Ok(DissipationReport {
        entries,
        beta: -slope,
        beta_residual: resid,
        c0_fit,
        flagged,
    })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mut resid = 0.0f64;
    for (x, y) in xs.iter().zip(ys) {
        resid = resid.max((y - intercept - slope * x).abs());
    }
    (slope, intercept, resid)
}

// ---------------------------------------------------------------------------
// propagation observable
// ---------------------------------------------------------------------------

/// `|| chi^{1/2}((A - a - theta alpha t)/(alpha s)) g(H) psi(t) ||^2` with
/// `chi(xi) = (1 - tanh xi)/2`, evaluated through the closed-form spectrum
/// of A. The smooth cutoff tracks the A-frequency front moving at rate
/// `theta alpha`.
#[allow(clippy::too_many_arguments)]
pub fn propagation_observable(
    grid: &Grid,
    a_calc: &ConjugateOperatorCalculus,
    evd: &EigenDecomposition,
    window: &SpectralWindow,
    psi_t: &DVector<Complex64>,
    a: f64,
    s: f64,
    theta: f64,
    t: f64,
    alpha: i32,
) -> Result<f64> {
    if s < 1.0 {
        return Err(CoreError::InvalidParameter {
            name: "s",
            message: format!("cutoff scale must satisfy s >= 1, got {s}"),
        });
    }
    let aa = (alpha as f64).abs().max(1.0);
    let gpsi = evd.apply_to_complex(|l| window.eval(l), psi_t);
    let cut = a_calc.apply_function(
        |lam| {
            let xi = (lam - a - theta * (alpha as f64) * t) / (aa * s);
            (0.5 * (1.0 - xi.tanh())).sqrt()
        },
        &gpsi,
    );
    Ok(grid_norm(&cut, grid.spacing()).powi(2))
}
