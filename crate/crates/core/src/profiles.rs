//! Admissible shear-flow family: the stretched tanh profile, the algebraic
//! family `V(z) = int_0^z (1+s^2)^{-k} ds`, and tabulated profiles. Provides
//! the derived weight `m = (-U''/U)^{1/2}`, the hypothesis checks, and the
//! ground state of the Schrodinger operator `-d2/dy2 - m^2`.

use crate::discretization::Grid;
use crate::error::{CoreError, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Tanh,
    Algebraic,
    Table,
}

#[derive(Debug, Clone)]
pub struct ShearProfile {
    inner: ProfileImpl,
}

#[derive(Debug, Clone)]
enum ProfileImpl {
    Tanh {
        l: f64,
    },
    Algebraic {
        l: f64,
        k: u32,
        v_inf: f64,
    },
    Table(TableProfile),
}

/// Node-sampled profile data for one grid. All downstream operator assembly
/// works from these samples.
#[derive(Debug, Clone)]
pub struct ProfileSamples {
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub u_double_prime: Vec<f64>,
    pub m: Vec<f64>,
    pub m_prime: Vec<f64>,
    pub m_double_prime: Vec<f64>,
}

impl ProfileSamples {
    pub fn max_m(&self) -> f64 {
        self.m.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

pub fn make_tanh_profile(l: f64) -> Result<ShearProfile> {
    if !(l.is_finite() && l > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "l",
            message: format!("stretching length must be positive, got {l}"),
        });
    }
    Ok(ShearProfile {
        inner: ProfileImpl::Tanh { l },
    })
}

pub fn make_algebraic_profile(l: f64, k: u32) -> Result<ShearProfile> {
    if !(l.is_finite() && l > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "l",
            message: format!("stretching length must be positive, got {l}"),
        });
    }
    if k < 2 {
        return Err(CoreError::InvalidParameter {
            name: "k",
            message: format!("algebraic decay order must be >= 2, got {k}"),
        });
    }
    // V(inf) = (pi/2) * prod_{j=1}^{k-1} (2j-1)/(2j), from the reduction
    // formula for int_0^inf (1+s^2)^{-k} ds.
    let mut v_inf = std::f64::consts::FRAC_PI_2;
    for j in 1..k {
        v_inf *= (2.0 * j as f64 - 1.0) / (2.0 * j as f64);
    }
    Ok(ShearProfile {
        inner: ProfileImpl::Algebraic { l, k, v_inf },
    })
}

impl ShearProfile {
    pub fn kind(&self) -> ProfileKind {
        match &self.inner {
            ProfileImpl::Tanh { .. } => ProfileKind::Tanh,
            ProfileImpl::Algebraic { .. } => ProfileKind::Algebraic,
            ProfileImpl::Table(_) => ProfileKind::Table,
        }
    }

    pub fn stretching(&self) -> Option<f64> {
        match &self.inner {
            ProfileImpl::Tanh { l } | ProfileImpl::Algebraic { l, .. } => Some(*l),
            ProfileImpl::Table(_) => None,
        }
    }

    pub fn decay_order(&self) -> Option<u32> {
        match &self.inner {
            ProfileImpl::Algebraic { k, .. } => Some(*k),
            _ => None,
        }
    }

    pub fn u(&self, y: f64) -> f64 {
        match &self.inner {
            ProfileImpl::Tanh { l } => (y / l).tanh(),
            ProfileImpl::Algebraic { l, k, .. } => algebraic_v(y / l, *k),
            ProfileImpl::Table(t) => t.u(y),
        }
    }

    pub fn u_prime(&self, y: f64) -> f64 {
        match &self.inner {
            ProfileImpl::Tanh { l } => {
                let s = sech(y / l);
                s * s / l
            }
            ProfileImpl::Algebraic { l, k, .. } => {
                let z = y / l;
                (1.0 + z * z).powi(-(*k as i32)) / l
            }
            ProfileImpl::Table(t) => t.u_prime(y),
        }
    }

    pub fn u_double_prime(&self, y: f64) -> f64 {
        match &self.inner {
            ProfileImpl::Tanh { l } => {
                let z = y / l;
                let s = sech(z);
                -2.0 * s * s * z.tanh() / (l * l)
            }
            ProfileImpl::Algebraic { l, k, .. } => {
                let z = y / l;
                let kk = *k as f64;
                -2.0 * kk * z * (1.0 + z * z).powi(-(*k as i32) - 1) / (l * l)
            }
            ProfileImpl::Table(t) => t.u_double_prime(y),
        }
    }

    /// `m(y) = (-U''/U)^{1/2}` with the removable singularity at the zero of
    /// `U` filled by the analytic limit.
    pub fn m(&self, y: f64) -> f64 {
        match &self.inner {
            ProfileImpl::Tanh { l } => SQRT2 / l * sech(y / l),
            ProfileImpl::Algebraic { l, k, .. } => {
                let z = y / l;
                let kk = *k as f64;
                let msq =
                    2.0 * kk * (1.0 + z * z).powi(-(*k as i32) - 1) / algebraic_w(z, *k) / (l * l);
                msq.max(0.0).sqrt()
            }
            ProfileImpl::Table(t) => t.m(y),
        }
    }

    pub fn m_prime(&self, y: f64) -> f64 {
        match &self.inner {
            ProfileImpl::Tanh { l } => {
                let z = y / l;
                -SQRT2 / (l * l) * sech(z) * z.tanh()
            }
            ProfileImpl::Algebraic { l, k, .. } => {
                let z = y / l;
                let (r1, _) = algebraic_log_m_derivs(z, *k);
                self.m(y) * r1 / l
            }
            ProfileImpl::Table(t) => t.m_prime(y),
        }
    }

    pub fn m_double_prime(&self, y: f64) -> f64 {
        match &self.inner {
            ProfileImpl::Tanh { l } => {
                let z = y / l;
                let s = sech(z);
                let t = z.tanh();
                SQRT2 / (l * l * l) * s * (t * t - s * s)
            }
            ProfileImpl::Algebraic { l, k, .. } => {
                let z = y / l;
                let (r1, r2) = algebraic_log_m_derivs(z, *k);
                self.m(y) * (r1 * r1 + r2) / (l * l)
            }
            ProfileImpl::Table(t) => t.m_double_prime(y),
        }
    }

    pub fn u_minus(&self) -> f64 {
        match &self.inner {
            ProfileImpl::Tanh { .. } => -1.0,
            ProfileImpl::Algebraic { v_inf, .. } => -v_inf,
            ProfileImpl::Table(t) => t.u.first().copied().unwrap_or(0.0),
        }
    }

    pub fn u_plus(&self) -> f64 {
        match &self.inner {
            ProfileImpl::Tanh { .. } => 1.0,
            ProfileImpl::Algebraic { v_inf, .. } => *v_inf,
            ProfileImpl::Table(t) => t.u.last().copied().unwrap_or(0.0),
        }
    }

    /// Evaluate every field on the grid nodes. The algebraic integral is
    /// accumulated segment by segment over the sorted nodes, so each node
    /// costs one short adaptive quadrature.
    pub fn sample(&self, grid: &Grid) -> ProfileSamples {
        let nodes = grid.nodes();
        let n = nodes.len();
        let mut s = ProfileSamples {
            u: Vec::with_capacity(n),
            u_prime: Vec::with_capacity(n),
            u_double_prime: Vec::with_capacity(n),
            m: Vec::with_capacity(n),
            m_prime: Vec::with_capacity(n),
            m_double_prime: Vec::with_capacity(n),
        };
        if let ProfileImpl::Algebraic { l, k, .. } = &self.inner {
            // cumulative quadrature of V over the positive nodes, mirrored to
            // the negative side by oddness
            let zs: Vec<f64> = nodes.iter().map(|y| y / l).collect();
            let v = cumulative_v(&zs, *k);
            for (j, y) in nodes.iter().enumerate() {
                let z = zs[j];
                let kk = *k as f64;
                let vp = (1.0 + z * z).powi(-(*k as i32));
                let vpp = -2.0 * kk * z * (1.0 + z * z).powi(-(*k as i32) - 1);
                s.u.push(v[j]);
                s.u_prime.push(vp / l);
                s.u_double_prime.push(vpp / (l * l));
                s.m.push(self.m(*y));
                s.m_prime.push(self.m_prime(*y));
                s.m_double_prime.push(self.m_double_prime(*y));
            }
        } else {
            for y in &nodes {
                s.u.push(self.u(*y));
                s.u_prime.push(self.u_prime(*y));
                s.u_double_prime.push(self.u_double_prime(*y));
                s.m.push(self.m(*y));
                s.m_prime.push(self.m_prime(*y));
                s.m_double_prime.push(self.m_double_prime(*y));
            }
        }
        s
    }
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

// ---------------------------------------------------------------------------
// algebraic family internals
// ---------------------------------------------------------------------------

/// `V(z) = int_0^z (1+s^2)^{-k} ds` by adaptive Simpson quadrature.
fn algebraic_v(z: f64, k: u32) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let az = z.abs();
    let f = |s: f64| (1.0 + s * s).powi(-(k as i32));
    let val = adaptive_simpson(&f, 0.0, az, 1e-13);
    val.copysign(z)
}

/// `W(z) = V(z)/z`, analytic and even; power series near zero, direct
/// quadrature otherwise.
fn algebraic_w(z: f64, k: u32) -> f64 {
    let az = z.abs();
    if az <= 0.5 {
        w_series(az, k).0
    } else {
        algebraic_v(az, k) / az
    }
}

/// Power series of `(W, W', W'')` at `|z| <= 0.5`:
/// `W = sum_j c_j z^{2j}`, `c_j = (-1)^j binom(k+j-1, j)/(2j+1)`.
fn w_series(z: f64, k: u32) -> (f64, f64, f64) {
    let kk = k as f64;
    let z2 = z * z;
    let mut binom = 1.0f64;
    let mut w = 1.0; // j = 0 term: c_0 = 1
    let mut wp = 0.0;
    let mut wpp = 0.0;
    let mut q = 1.0; // z^{2(j-1)}
    binom *= kk; // binom(k, 1)
    for j in 1..200u32 {
        let jj = j as f64;
        let c = binom / (2.0 * jj + 1.0) * if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = c * q * z2;
        w += term;
        wp += 2.0 * jj * c * q * z;
        wpp += 2.0 * jj * (2.0 * jj - 1.0) * c * q;
        if term.abs() < 1e-18 && j > 3 {
            break;
        }
        binom *= (kk + jj) / (jj + 1.0);
        q *= z2;
    }
    (w, wp, wpp)
}

/// First and second z-derivatives of `ln m` for the algebraic family:
/// `d/dz ln m = -(k+1) z/(1+z^2) - W'/(2W)` and its derivative.
fn algebraic_log_m_derivs(z: f64, k: u32) -> (f64, f64) {
    let kk = k as f64;
    let az = z.abs();
    let (w, wp_abs, wpp) = if az <= 0.5 {
        w_series(az, k)
    } else {
        let v = algebraic_v(az, k);
        let vp = (1.0 + az * az).powi(-(k as i32));
        let vpp = -2.0 * kk * az * (1.0 + az * az).powi(-(k as i32) - 1);
        let w = v / az;
        let wp = vp / az - v / (az * az);
        let wpp = vpp / az - 2.0 * vp / (az * az) + 2.0 * v / (az * az * az);
        (w, wp, wpp)
    };
    // W is even: W'(z) is odd, W''(z) even
    let wp = wp_abs * z.signum();
    let one_pz2 = 1.0 + z * z;
    let r1 = -(kk + 1.0) * z / one_pz2 - wp / (2.0 * w);
    let r2 = -(kk + 1.0) * (1.0 - z * z) / (one_pz2 * one_pz2) - wpp / (2.0 * w)
        + (wp / w) * (wp / w) / 2.0;
    (r1, r2)
}

/// Cumulative `V` over a sorted list of z values (one short quadrature per
/// segment, anchored at z = 0).
fn cumulative_v(zs: &[f64], k: u32) -> Vec<f64> {
    let f = |s: f64| (1.0 + s * s).powi(-(k as i32));
    let n = zs.len();
    let mut out = vec![0.0; n];
    // split at the first non-negative node
    let split = zs.partition_point(|&z| z < 0.0);
    // positive side: integrate upward from 0
    let mut acc = 0.0;
    let mut prev = 0.0;
    for j in split..n {
        acc += adaptive_simpson(&f, prev, zs[j], 1e-13);
        prev = zs[j];
        out[j] = acc;
    }
    // negative side: integrate downward from 0
    acc = 0.0;
    prev = 0.0;
    for j in (0..split).rev() {
        acc += adaptive_simpson(&f, zs[j], prev, 1e-13);
        prev = zs[j];
        out[j] = -acc;
    }
    out
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

// ---------------------------------------------------------------------------
// tabulated profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct TableProfile {
    ys: Vec<f64>,
    u: Vec<f64>,
    up: Vec<f64>,
    upp: Vec<f64>,
    /// m^2 at table nodes, with nodes too close to the zero of U filled from
    /// their neighbors
    msq: Vec<f64>,
}

impl TableProfile {
    fn locate(&self, y: f64) -> usize {
        // clamped bracketing interval index
        match self.ys.partition_point(|&x| x <= y) {
            0 => 0,
            p if p >= self.ys.len() => self.ys.len() - 2,
            p => p - 1,
        }
    }

    fn hermite(&self, y: f64, vals: &[f64], slopes: &[f64]) -> f64 {
        let i = self.locate(y);
        let (x0, x1) = (self.ys[i], self.ys[i + 1]);
        let w = x1 - x0;
        let t = ((y - x0) / w).clamp(0.0, 1.0);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        h00 * vals[i] + h10 * w * slopes[i] + h01 * vals[i + 1] + h11 * w * slopes[i + 1]
    }

    fn linear(&self, y: f64, vals: &[f64]) -> f64 {
        let i = self.locate(y);
        let (x0, x1) = (self.ys[i], self.ys[i + 1]);
        let t = ((y - x0) / (x1 - x0)).clamp(0.0, 1.0);
        vals[i] * (1.0 - t) + vals[i + 1] * t
    }

    fn u(&self, y: f64) -> f64 {
        self.hermite(y, &self.u, &self.up)
    }

    fn u_prime(&self, y: f64) -> f64 {
        self.hermite(y, &self.up, &self.upp)
    }

    fn u_double_prime(&self, y: f64) -> f64 {
        self.linear(y, &self.upp)
    }

    fn u_scale(&self) -> f64 {
        self.u.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    fn msq_at(&self, y: f64) -> f64 {
        let u = self.u(y);
        if u.abs() >= 1e-6 * self.u_scale() {
            -self.u_double_prime(y) / u
        } else {
            self.linear(y, &self.msq)
        }
    }

    fn m(&self, y: f64) -> f64 {
        self.msq_at(y).max(0.0).sqrt()
    }

    fn fd_step(&self) -> f64 {
        let n = self.ys.len();
        (self.ys[n - 1] - self.ys[0]) / (n as f64 - 1.0)
    }

    fn m_prime(&self, y: f64) -> f64 {
        let d = self.fd_step();
        (self.m(y + d) - self.m(y - d)) / (2.0 * d)
    }

    fn m_double_prime(&self, y: f64) -> f64 {
        let d = self.fd_step();
        (self.m(y + d) - 2.0 * self.m(y) + self.m(y - d)) / (d * d)
    }
}

/// Parse the table format: one header line `y U Uprime Uprimeprime`, then
/// whitespace-separated columns with strictly increasing `y`.
pub fn parse_table_profile(text: &str) -> Result<ShearProfile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CoreError::TableFormat("empty profile table".into()))?;
    let cols: Vec<&str> = header.split_whitespace().collect();
    if cols != ["y", "U", "Uprime", "Uprimeprime"] {
        return Err(CoreError::TableFormat(format!(
            "expected header `y U Uprime Uprimeprime`, got `{header}`"
        )));
    }
    let mut ys = Vec::new();
    let mut u = Vec::new();
    let mut up = Vec::new();
    let mut upp = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    CoreError::TableFormat(format!("bad number `{tok}` on data line {lineno}"))
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != 4 {
            return Err(CoreError::TableFormat(format!(
                "expected 4 columns on data line {lineno}, got {}",
                vals.len()
            )));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::TableFormat(format!(
                "non-finite value on data line {lineno}"
            )));
        }
        ys.push(vals[0]);
        u.push(vals[1]);
        up.push(vals[2]);
        upp.push(vals[3]);
    }
    if ys.len() < 4 {
        return Err(CoreError::TableFormat(format!(
            "need at least 4 rows, got {}",
            ys.len()
        )));
    }
    if !ys.windows(2).all(|w| w[0] < w[1]) {
        return Err(CoreError::TableFormat(
            "y column must be strictly increasing".into(),
        ));
    }
    // m^2 at nodes, filling nodes too close to the zero of U
    let uscale = u.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let n = ys.len();
    let mut msq = vec![0.0; n];
    let mut filled = vec![false; n];
    for i in 0..n {
        if u[i].abs() >= 1e-6 * uscale {
            msq[i] = -upp[i] / u[i];
        } else {
            filled[i] = true;
        }
    }
    for i in 0..n {
        if filled[i] {
            let left = (0..i).rev().find(|&j| !filled[j]);
            let right = (i + 1..n).find(|&j| !filled[j]);
            msq[i] = match (left, right) {
                (Some(a), Some(b)) => {
                    let t = (ys[i] - ys[a]) / (ys[b] - ys[a]);
                    msq[a] * (1.0 - t) + msq[b] * t
                }
                (Some(a), None) => msq[a],
                (None, Some(b)) => msq[b],
                (None, None) => 0.0,
            };
        }
    }
    Ok(ShearProfile {
        inner: ProfileImpl::Table(TableProfile {
            ys,
            u,
            up,
            upp,
            msq,
        }),
    })
}

// ---------------------------------------------------------------------------
// Schrodinger ground state and hypothesis checks
// ---------------------------------------------------------------------------

/// Smallest eigenvalue of the Dirichlet discretization of `-d2/dy2 - m^2`
/// by Sturm-sequence bisection on the tridiagonal matrix.
pub fn schrodinger_lambda0(profile: &ShearProfile, grid: &Grid) -> Result<f64> {
    let samples = profile.sample(grid);
    schrodinger_lambda0_from_msq(grid, &samples.m.iter().map(|m| m * m).collect::<Vec<_>>())
}

pub fn schrodinger_lambda0_from_msq(grid: &Grid, m_squared: &[f64]) -> Result<f64> {
    let n = grid.len();
    assert_eq!(m_squared.len(), n);
    let h2 = grid.spacing() * grid.spacing();
    let diag: Vec<f64> = (0..n).map(|j| 2.0 / h2 - m_squared[j]).collect();
    let off = -1.0 / h2;
    if diag.iter().any(|d| !d.is_finite()) {
        return Err(CoreError::NonFinite {
            context: "schrodinger operator diagonal".into(),
        });
    }
    let lo0 = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * off.abs();
    let hi0 = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * off.abs();
    let mut lo = lo0;
    let mut hi = hi0;
    let scale = hi0.abs().max(lo0.abs()).max(1.0);
    for _ in 0..200 {
        if hi - lo <= 1e-14 * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sturm_count_below(&diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below x.
fn sturm_count_below(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = diag[0] - x;
    if d < 0.0 {
        count += 1;
    }
    let off2 = off * off;
    for i in 1..diag.len() {
        if d == 0.0 {
            d = 1e-300;
        }
        d = diag[i] - x - off2 / d;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

#[derive(Debug, Clone, Copy)]
pub struct HypothesisTolerances {
    /// slack on the spectral condition `lambda0 > -1`
    pub tol_h3: f64,
    /// required relative smallness of m at the domain ends
    pub m_edge_rel: f64,
    /// allowed relative L2 mass of m outside `[-Y/2, Y/2]`
    pub tail_mass_rel: f64,
    /// cap on the derivative ratios `|m'|/m`, `|m''|/m` and on `U''/(U-U_pm)`
    pub ratio_cap: f64,
    /// allowed defect `|U(+-Y) - U_pm|` relative to `U_+ - U_-`
    pub limit_tol_rel: f64,
}

impl Default for HypothesisTolerances {
    fn default() -> Self {
        Self {
            tol_h3: 1e-6,
            m_edge_rel: 1e-3,
            tail_mass_rel: 1e-5,
            ratio_cap: 1e6,
            limit_tol_rel: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub h1_pass: bool,
    pub h2_pass: bool,
    pub h3_pass: bool,
    pub lambda0: f64,
    /// worst-case margins, one per checked condition
    pub h1_min_u_prime: f64,
    pub h1_min_m_squared: f64,
    pub h1_limit_defect_rel: f64,
    pub h2_m_edge_rel: f64,
    pub h2_tail_mass_rel: f64,
    pub h2_c1: f64,
    pub h2_c2: f64,
    pub h2_ratio_minus: f64,
    pub h2_ratio_plus: f64,
    pub h2_ratio_minus_l2: f64,
    pub h2_ratio_plus_l2: f64,
    pub h3_margin: f64,
}

/// Evaluate the (H1)/(H2) conditions pointwise on the grid and the spectral
/// condition (H3). Violations are reported, not thrown; only non-finite
/// evaluations abort.
pub fn check_hypotheses(
    profile: &ShearProfile,
    grid: &Grid,
    tol: &HypothesisTolerances,
) -> Result<HypothesisReport> {
    let s = profile.sample(grid);
    let n = grid.len();
    let h = grid.spacing();
    for vec in [
        &s.u,
        &s.u_prime,
        &s.u_double_prime,
        &s.m,
        &s.m_prime,
        &s.m_double_prime,
    ] {
        if vec.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: "profile samples".into(),
            });
        }
    }

    let u_minus = profile.u_minus();
    let u_plus = profile.u_plus();
    let u_range = (u_plus - u_minus).abs().max(f64::MIN_POSITIVE);

    // H1: monotonicity, sign of U''/U, limits
    let min_u_prime = s.u_prime.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_m_squared = s
        .m
        .iter()
        .map(|m| m * m)
        .fold(f64::INFINITY, f64::min);
    let limit_defect = ((s.u[0] - u_minus).abs().max((s.u[n - 1] - u_plus).abs())) / u_range;
    let h1_pass =
        min_u_prime > 0.0 && min_m_squared > 0.0 && limit_defect <= tol.limit_tol_rel;

    // H2: decay of m, L2 tail, derivative ratios, U''/(U - U_pm)
    let max_m = s.max_m().max(f64::MIN_POSITIVE);
    let m_edge_rel = s.m[0].max(s.m[n - 1]) / max_m;
    let full_mass: f64 = s.m.iter().map(|m| m * m * h).sum();
    let half_mass: f64 = (0..n)
        .filter(|&j| grid.node(j).abs() <= grid.y_half() / 2.0)
        .map(|j| s.m[j] * s.m[j] * h)
        .sum();
    let tail_mass_rel = if full_mass > 0.0 {
        (full_mass - half_mass) / full_mass
    } else {
        0.0
    };
    let ratio_floor = 1e-12 * max_m;
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    for j in 0..n {
        if s.m[j] > ratio_floor {
            c1 = c1.max(s.m_prime[j].abs() / s.m[j]);
            c2 = c2.max(s.m_double_prime[j].abs() / s.m[j]);
        }
    }
    // Far in the tails U saturates to U_pm in floating point while U'' may
    // not have underflowed yet; a vanished numerator relative to the U''
    // scale means the ratio contributes nothing there.
    let upp_scale = s
        .u_double_prime
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        .max(f64::MIN_POSITIVE);
    let guarded_ratio = |upp: f64, du: f64| -> f64 {
        if upp.abs() <= 1e-12 * upp_scale {
            0.0
        } else if du == 0.0 {
            f64::INFINITY
        } else {
            upp / du
        }
    };
    let mut ratio_minus = 0.0f64;
    let mut ratio_plus = 0.0f64;
    let mut ratio_minus_l2 = 0.0f64;
    let mut ratio_plus_l2 = 0.0f64;
    for j in 0..n {
        let rm = guarded_ratio(s.u_double_prime[j], s.u[j] - u_minus);
        let rp = guarded_ratio(s.u_double_prime[j], s.u[j] - u_plus);
        ratio_minus = ratio_minus.max(rm.abs());
        ratio_plus = ratio_plus.max(rp.abs());
        ratio_minus_l2 += rm * rm * h;
        ratio_plus_l2 += rp * rp * h;
    }
    ratio_minus_l2 = ratio_minus_l2.sqrt();
    ratio_plus_l2 = ratio_plus_l2.sqrt();
    let h2_pass = m_edge_rel <= tol.m_edge_rel
        && tail_mass_rel <= tol.tail_mass_rel
        && c1.is_finite()
        && c2.is_finite()
        && c1 <= tol.ratio_cap
        && c2 <= tol.ratio_cap
        && ratio_minus.is_finite()
        && ratio_plus.is_finite()
        && ratio_minus <= tol.ratio_cap
        && ratio_plus <= tol.ratio_cap;

    // H3
    let lambda0 = schrodinger_lambda0_from_msq(
        grid,
        &s.m.iter().map(|m| m * m).collect::<Vec<_>>(),
    )?;
    let h3_margin = lambda0 + 1.0;
    let h3_pass = lambda0 > -1.0 + tol.tol_h3;

    Ok(HypothesisReport {
        h1_pass,
        h2_pass,
        h3_pass,
        lambda0,
        h1_min_u_prime: min_u_prime,
        h1_min_m_squared: min_m_squared,
        h1_limit_defect_rel: limit_defect,
        h2_m_edge_rel: m_edge_rel,
        h2_tail_mass_rel: tail_mass_rel,
        h2_c1: c1,
        h2_c2: c2,
        h2_ratio_minus: ratio_minus,
        h2_ratio_plus: ratio_plus,
        h2_ratio_minus_l2: ratio_minus_l2,
        h2_ratio_plus_l2: ratio_plus_l2,
        h3_margin,
    })
}
