//! Truncated-line grid and the discrete differential operators: the Dirichlet
//! second derivative, the antisymmetric central first derivative, the shifted
//! Laplacian `lap_alpha = d2/dy2 - alpha^2`, and the sandwiched inverse
//! `m * lap_alpha^{-1} * m`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg;

/// Uniform grid on `[-Y, Y]` with `n` interior nodes and homogeneous Dirichlet
/// ends. Spacing is always derived as `2Y/(n+1)`, never stored independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    y_half: f64,
    n: usize,
}

impl Grid {
    pub fn y_half(&self) -> f64 {
        self.y_half
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.y_half / (self.n as f64 + 1.0)
    }

    /// Interior node `j` (0-indexed): `y_j = -Y + (j+1) h`.
    pub fn node(&self, j: usize) -> f64 {
        -self.y_half + (j as f64 + 1.0) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    pub fn tag(&self) -> GridTag {
        GridTag {
            n: self.n,
            y_bits: self.y_half.to_bits(),
        }
    }

    /// Grid with halved spacing whose even nodes coincide with this grid's
    /// nodes (`n -> 2n + 1`).
    pub fn refined(&self) -> Grid {
        Grid {
            y_half: self.y_half,
            n: 2 * self.n + 1,
        }
    }
}

/// Identity of the grid an operator was assembled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridTag {
    n: usize,
    y_bits: u64,
}

impl GridTag {
    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn build_grid(y_half: f64, n: usize) -> Result<Grid> {
    if !y_half.is_finite() || y_half <= 0.0 {
        return Err(CoreError::InvalidParameter {
            name: "y_half",
            message: format!("domain half-width must be positive and finite, got {y_half}"),
        });
    }
    if n < 8 {
        return Err(CoreError::InvalidParameter {
            name: "n",
            message: format!("need at least 8 interior nodes, got {n}"),
        });
    }
    Ok(Grid { y_half, n })
}

/// Declared structure of a dense operator, verified on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    Hermitian,
    General,
}

#[derive(Debug, Clone)]
pub enum OpData {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// N x N operator tied to the grid it was assembled on. Operators on
/// different grids refuse to combine.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    data: OpData,
    symmetry: Symmetry,
    tag: GridTag,
}

const FLAG_TOL: f64 = 1e-12;

fn real_flag_defect(m: &DMatrix<f64>, symmetry: Symmetry) -> f64 {
    let n = m.nrows();
    let mut defect = 0.0f64;
    match symmetry {
        Symmetry::Symmetric => {
            for i in 0..n {
                for j in (i + 1)..n {
                    defect = defect.max((m[(i, j)] - m[(j, i)]).abs());
                }
            }
        }
        Symmetry::Antisymmetric => {
            for i in 0..n {
                for j in i..n {
                    defect = defect.max((m[(i, j)] + m[(j, i)]).abs());
                }
            }
        }
        Symmetry::Hermitian | Symmetry::General => {}
    }
    defect
}

impl DenseOperator {
    pub fn from_real(grid: &Grid, mat: DMatrix<f64>, symmetry: Symmetry) -> Result<Self> {
        assert_eq!(mat.nrows(), grid.len());
        assert_eq!(mat.ncols(), grid.len());
        if matches!(symmetry, Symmetry::Hermitian) {
            return Err(CoreError::InvalidParameter {
                name: "symmetry",
                message: "a real matrix flagged hermitian should be flagged symmetric".into(),
            });
        }
        let defect = real_flag_defect(&mat, symmetry);
        let tol = FLAG_TOL * mat.norm().max(f64::MIN_POSITIVE);
        if defect > tol {
            return Err(CoreError::SymmetryViolation {
                flag: match symmetry {
                    Symmetry::Symmetric => "symmetric",
                    Symmetry::Antisymmetric => "antisymmetric",
                    _ => "general",
                },
                defect,
                tol,
            });
        }
        Ok(Self {
            data: OpData::Real(mat),
            symmetry,
            tag: grid.tag(),
        })
    }

    /// Symmetrize `(M + M^T)/2` and report the discarded defect.
    pub fn from_real_symmetrized(grid: &Grid, mat: DMatrix<f64>) -> (Self, f64) {
        let defect = real_flag_defect(&mat, Symmetry::Symmetric);
        let sym = (&mat + mat.transpose()) * 0.5;
        (
            Self {
                data: OpData::Real(sym),
                symmetry: Symmetry::Symmetric,
                tag: grid.tag(),
            },
            defect,
        )
    }

    pub fn from_complex(grid: &Grid, mat: DMatrix<Complex64>, symmetry: Symmetry) -> Result<Self> {
        assert_eq!(mat.nrows(), grid.len());
        let defect = match symmetry {
            Symmetry::Hermitian => {
                let mut d = 0.0f64;
                for i in 0..mat.nrows() {
                    for j in i..mat.ncols() {
                        d = d.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
                    }
                }
                d
            }
            _ => 0.0,
        };
        let tol = FLAG_TOL * mat.norm().max(f64::MIN_POSITIVE);
        if matches!(symmetry, Symmetry::Hermitian) && defect > tol {
            return Err(CoreError::SymmetryViolation {
                flag: "hermitian",
                defect,
                tol,
            });
        }
        Ok(Self {
            data: OpData::Complex(mat),
            symmetry,
            tag: grid.tag(),
        })
    }

    pub fn n(&self) -> usize {
        match &self.data {
            OpData::Real(m) => m.nrows(),
            OpData::Complex(m) => m.nrows(),
        }
    }

    pub fn tag(&self) -> GridTag {
        self.tag
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn as_real(&self) -> Option<&DMatrix<f64>> {
        match &self.data {
            OpData::Real(m) => Some(m),
            OpData::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&DMatrix<Complex64>> {
        match &self.data {
            OpData::Complex(m) => Some(m),
            OpData::Real(_) => None,
        }
    }

    pub fn to_complex_matrix(&self) -> DMatrix<Complex64> {
        match &self.data {
            OpData::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
            OpData::Complex(m) => m.clone(),
        }
    }

    pub fn check_tag(&self, other: &DenseOperator) -> Result<()> {
        if self.tag != other.tag {
            return Err(CoreError::GridMismatch {
                lhs: self.tag.n,
                rhs: other.tag.n,
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.data {
            OpData::Real(m) => m * v,
            OpData::Complex(_) => panic!("apply: real vector against complex operator"),
        }
    }

    pub fn apply_complex(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        match &self.data {
            OpData::Real(m) => linalg::apply_real_to_complex(m, v),
            OpData::Complex(m) => m * v,
        }
    }

    pub fn fro_norm(&self) -> f64 {
        match &self.data {
            OpData::Real(m) => m.norm(),
            OpData::Complex(m) => m.norm(),
        }
    }

    pub fn norm2_est(&self) -> f64 {
        match &self.data {
            OpData::Real(m) => linalg::norm2_est(m),
            OpData::Complex(m) => {
                // power iteration on M^H M
                let n = m.ncols();
                let mut v = DVector::from_fn(n, |i, _| {
                    Complex64::new(1.0 + ((i * 2654435761) % 1000) as f64 / 1000.0, 0.0)
                });
                v /= Complex64::new(v.norm(), 0.0);
                let mut est = 0.0;
                for _ in 0..25 {
                    let w = m.adjoint() * (m * &v);
                    let nw = w.norm();
                    if nw == 0.0 {
                        return 0.0;
                    }
                    est = nw.sqrt();
                    v = w / Complex64::new(nw, 0.0);
                }
                est
            }
        }
    }

    pub fn matmul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        self.check_tag(other)?;
        let data = match (&self.data, &other.data) {
            (OpData::Real(a), OpData::Real(b)) => OpData::Real(a * b),
            (a, b) => {
                let ac = match a {
                    OpData::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
                    OpData::Complex(m) => m.clone(),
                };
                let bc = match b {
                    OpData::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
                    OpData::Complex(m) => m.clone(),
                };
                OpData::Complex(ac * bc)
            }
        };
        Ok(DenseOperator {
            data,
            symmetry: Symmetry::General,
            tag: self.tag,
        })
    }

    pub fn add_scaled(&self, other: &DenseOperator, factor: f64) -> Result<DenseOperator> {
        self.check_tag(other)?;
        let data = match (&self.data, &other.data) {
            (OpData::Real(a), OpData::Real(b)) => OpData::Real(a + b * factor),
            (a, b) => {
                let ac = match a {
                    OpData::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
                    OpData::Complex(m) => m.clone(),
                };
                let bc = match b {
                    OpData::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
                    OpData::Complex(m) => m.clone(),
                };
                OpData::Complex(ac + bc * Complex64::new(factor, 0.0))
            }
        };
        let symmetry = if self.symmetry == other.symmetry {
            self.symmetry
        } else {
            Symmetry::General
        };
        Ok(DenseOperator {
            data,
            symmetry,
            tag: self.tag,
        })
    }
}

/// Symmetric tridiagonal matrix with constant off-diagonal, as produced by the
/// 3-point stencils on a uniform grid.
#[derive(Debug, Clone)]
pub(crate) struct Tridiag {
    pub diag: Vec<f64>,
    pub off: f64,
}

impl Tridiag {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off;
                m[(i + 1, i)] = self.off;
            }
        }
        m
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off * v[i - 1];
            }
            if i + 1 < n {
                s += self.off * v[i + 1];
            }
            out[i] = s;
        }
        out
    }

    /// Thomas factorization; valid without pivoting for the diagonally
    /// dominant matrices produced here.
    pub fn factor(&self) -> Result<TridiagFactor> {
        let n = self.diag.len();
        let mut d = vec![0.0; n];
        let mut w = vec![0.0; n];
        d[0] = self.diag[0];
        if d[0] == 0.0 {
            return Err(CoreError::SolveFailure("zero pivot in tridiagonal".into()));
        }
        for i in 1..n {
            w[i] = self.off / d[i - 1];
            d[i] = self.diag[i] - w[i] * self.off;
            if d[i] == 0.0 {
                return Err(CoreError::SolveFailure("zero pivot in tridiagonal".into()));
            }
        }
        Ok(TridiagFactor {
            d,
            w,
            off: self.off,
        })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct TridiagFactor {
    d: Vec<f64>,
    w: Vec<f64>,
    off: f64,
}

impl TridiagFactor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut x = vec![0.0; n];
        x[0] = rhs[0];
        for i in 1..n {
            x[i] = rhs[i] - self.w[i] * x[i - 1];
        }
        x[n - 1] /= self.d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = (x[i] - self.off * x[i + 1]) / self.d[i];
        }
        x
    }

    pub fn solve_complex(&self, rhs: &DVector<Complex64>) -> DVector<Complex64> {
        let re: Vec<f64> = rhs.iter().map(|z| z.re).collect();
        let im: Vec<f64> = rhs.iter().map(|z| z.im).collect();
        let xr = self.solve(&re);
        let xi = self.solve(&im);
        DVector::from_fn(rhs.len(), |i, _| Complex64::new(xr[i], xi[i]))
    }
}

/// 3-point second derivative with Dirichlet ends, `(1, -2, 1)/h^2`.
pub(crate) fn second_derivative_tridiag(grid: &Grid) -> Tridiag {
    let h2 = grid.spacing() * grid.spacing();
    Tridiag {
        diag: vec![-2.0 / h2; grid.len()],
        off: 1.0 / h2,
    }
}

pub(crate) fn laplacian_alpha_tridiag(grid: &Grid, alpha: i32) -> Tridiag {
    let mut t = second_derivative_tridiag(grid);
    let a2 = (alpha as f64) * (alpha as f64);
    for d in t.diag.iter_mut() {
        *d -= a2;
    }
    t
}

pub fn second_derivative_op(grid: &Grid) -> DenseOperator {
    let t = second_derivative_tridiag(grid);
    DenseOperator::from_real(grid, t.to_dense(), Symmetry::Symmetric)
        .expect("stencil is symmetric by construction")
}

/// Central difference `(-1, 0, 1)/(2h)` with Dirichlet-truncated end rows.
/// The conjugate operator of the commutator machinery is `A = i D`.
pub fn first_derivative_op(grid: &Grid) -> DenseOperator {
    let n = grid.len();
    let c = 1.0 / (2.0 * grid.spacing());
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        if i + 1 < n {
            m[(i, i + 1)] = c;
            m[(i + 1, i)] = -c;
        }
    }
    DenseOperator::from_real(grid, m, Symmetry::Antisymmetric)
        .expect("stencil is antisymmetric by construction")
}

pub fn laplacian_alpha(grid: &Grid, alpha: i32) -> Result<DenseOperator> {
    require_nonzero_alpha(alpha)?;
    let t = laplacian_alpha_tridiag(grid, alpha);
    Ok(DenseOperator::from_real(grid, t.to_dense(), Symmetry::Symmetric).unwrap())
}

pub(crate) fn require_nonzero_alpha(alpha: i32) -> Result<()> {
    if alpha == 0 {
        return Err(CoreError::InvalidParameter {
            name: "alpha",
            message: "alpha = 0 reduces the vorticity equation to d/dt omega = 0; no mixing occurs"
                .into(),
        });
    }
    Ok(())
}

/// `m * lap_alpha^{-1} * m` by direct tridiagonal solves (authoritative path).
/// Returns the symmetrized matrix; the pre-symmetrization defect is available
/// through [`sandwiched_inverse_with_defect`].
pub fn sandwiched_inverse(grid: &Grid, alpha: i32, m_values: &[f64]) -> Result<DenseOperator> {
    Ok(sandwiched_inverse_with_defect(grid, alpha, m_values)?.0)
}

pub fn sandwiched_inverse_with_defect(
    grid: &Grid,
    alpha: i32,
    m_values: &[f64],
) -> Result<(DenseOperator, f64)> {
    require_nonzero_alpha(alpha)?;
    let n = grid.len();
    assert_eq!(m_values.len(), n);
    let factor = laplacian_alpha_tridiag(grid, alpha).factor()?;
    let mut out = DMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        if m_values[j] == 0.0 {
            continue;
        }
        col.iter_mut().for_each(|x| *x = 0.0);
        col[j] = m_values[j];
        let x = factor.solve(&col);
        for i in 0..n {
            out[(i, j)] = m_values[i] * x[i];
        }
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(CoreError::NonFinite {
            context: "sandwiched inverse".into(),
        });
    }
    let (op, defect) = DenseOperator::from_real_symmetrized(grid, out);
    Ok((op, defect))
}

/// Free-line kernel quadrature `-(1/(2|alpha|)) e^{-|alpha| |y_i - y_j|} m_i m_j h`,
/// used only as a cross-check against the solve path.
pub fn sandwiched_inverse_kernel(grid: &Grid, alpha: i32, m_values: &[f64]) -> DenseOperator {
    let n = grid.len();
    let a = (alpha as f64).abs();
    let h = grid.spacing();
    let pref = -h / (2.0 * a);
    let nodes = grid.nodes();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = pref * (-a * (nodes[i] - nodes[j]).abs()).exp() * m_values[i] * m_values[j];
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    DenseOperator::from_real(grid, out, Symmetry::Symmetric).unwrap()
}

/// Dense inverse of `lap_alpha`, column by column. Used by the omega-form
/// generator; O(n^2).
pub fn laplacian_inverse_dense(grid: &Grid, alpha: i32) -> Result<DMatrix<f64>> {
    require_nonzero_alpha(alpha)?;
    let n = grid.len();
    let factor = laplacian_alpha_tridiag(grid, alpha).factor()?;
    let mut out = DMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|x| *x = 0.0);
        col[j] = 1.0;
        let x = factor.solve(&col);
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

/// Solver handle for `lap_alpha` kept around for repeated right-hand sides.
pub struct LaplacianSolver {
    factor: TridiagFactor,
    tridiag: Tridiag,
}

impl LaplacianSolver {
    pub fn new(grid: &Grid, alpha: i32) -> Result<Self> {
        require_nonzero_alpha(alpha)?;
        let tridiag = laplacian_alpha_tridiag(grid, alpha);
        Ok(Self {
            factor: tridiag.factor()?,
            tridiag,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve(rhs)
    }

    pub fn solve_complex(&self, rhs: &DVector<Complex64>) -> DVector<Complex64> {
        self.factor.solve_complex(rhs)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.tridiag.apply(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_arithmetic() {
        let g = build_grid(1.0, 9).unwrap();
        assert_relative_eq!(g.spacing(), 0.2, epsilon = 1e-15);
        assert_relative_eq!(g.node(0), -0.8, epsilon = 1e-15);
        let g2 = build_grid(40.0, 2048).unwrap();
        assert_relative_eq!(g2.spacing(), 80.0 / 2049.0, epsilon = 1e-18);
    }

    #[test]
    fn grid_rejects_degenerate() {
        assert!(build_grid(0.0, 64).is_err());
        assert!(build_grid(-1.0, 64).is_err());
        assert!(build_grid(f64::NAN, 64).is_err());
        assert!(build_grid(1.0, 7).is_err());
    }

    #[test]
    fn second_derivative_on_sine() {
        let y = 3.0;
        let g = build_grid(y, 255).unwrap();
        let d2 = second_derivative_op(&g);
        let k = std::f64::consts::PI / y;
        let v = DVector::from_fn(g.len(), |j, _| (k * (g.node(j) + y)).sin());
        let out = d2.apply(&v);
        let mut max_err = 0.0f64;
        for j in 0..g.len() {
            max_err = max_err.max((out[j] + k * k * v[j]).abs());
        }
        // second-order stencil on an eigenfunction: error O(h^2) * k^4-ish
        let h = g.spacing();
        assert!(max_err < 2.0 * k.powi(4) * h * h, "max_err = {max_err}");
    }

    #[test]
    fn second_derivative_on_constant_hits_boundary_only() {
        let g = build_grid(2.0, 32).unwrap();
        let d2 = second_derivative_op(&g);
        let v = DVector::from_element(g.len(), 1.0);
        let out = d2.apply(&v);
        let h2 = g.spacing() * g.spacing();
        for j in 1..g.len() - 1 {
            assert!(out[j].abs() < 1e-12 / h2);
        }
        assert_relative_eq!(out[0], -1.0 / h2, epsilon = 1e-9);
        assert_relative_eq!(out[g.len() - 1], -1.0 / h2, epsilon = 1e-9);
    }

    #[test]
    fn first_derivative_exact_on_linear() {
        let g = build_grid(5.0, 63).unwrap();
        let d = first_derivative_op(&g);
        let v = DVector::from_fn(g.len(), |j, _| g.node(j));
        let out = d.apply(&v);
        for j in 1..g.len() - 1 {
            assert_relative_eq!(out[j], 1.0, epsilon = 1e-11);
        }
    }

    #[test]
    fn laplacian_alpha_shift_is_exact() {
        let g = build_grid(4.0, 24).unwrap();
        let a1 = laplacian_alpha(&g, 1).unwrap();
        let a2 = laplacian_alpha(&g, 2).unwrap();
        let m1 = a1.as_real().unwrap();
        let m2 = a2.as_real().unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let expect = if i == j { -3.0 } else { 0.0 };
                assert_relative_eq!(m2[(i, j)] - m1[(i, j)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_alpha_rejects_zero_mode() {
        let g = build_grid(4.0, 24).unwrap();
        assert!(laplacian_alpha(&g, 0).is_err());
    }

    #[test]
    fn laplacian_alpha_negative_definite() {
        let g = build_grid(4.0, 64).unwrap();
        let a1 = laplacian_alpha(&g, 1).unwrap();
        let vals = crate::linalg::sym_eigenvalues(a1.as_real().unwrap()).unwrap();
        assert!(vals.max() <= -1.0 + 1e-10, "max eig {}", vals.max());
    }

    #[test]
    fn solve_round_trip() {
        let g = build_grid(10.0, 200).unwrap();
        let solver = LaplacianSolver::new(&g, 1).unwrap();
        let f: Vec<f64> = (0..g.len())
            .map(|j| (-g.node(j) * g.node(j)).exp())
            .collect();
        let x = solver.solve(&f);
        let back = solver.apply(&x);
        let num: f64 = back
            .iter()
            .zip(&f)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = f.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(num / den < 1e-10, "round trip {}", num / den);
    }

    #[test]
    fn sandwich_zero_m_is_zero() {
        let g = build_grid(10.0, 32).unwrap();
        let m = vec![0.0; g.len()];
        let s = sandwiched_inverse(&g, 1, &m).unwrap();
        assert_eq!(s.fro_norm(), 0.0);
    }

    #[test]
    fn sandwich_negative_semidefinite() {
        let g = build_grid(20.0, 128).unwrap();
        let m: Vec<f64> = g
            .nodes()
            .iter()
            .map(|y| 0.5 / (y / 2.0).cosh())
            .collect();
        let s = sandwiched_inverse(&g, 1, &m).unwrap();
        let vals = crate::linalg::sym_eigenvalues(s.as_real().unwrap()).unwrap();
        assert!(vals.max() <= 1e-10, "max eig {}", vals.max());
    }

    #[test]
    fn sandwich_symmetry_defect_small() {
        let g = build_grid(20.0, 128).unwrap();
        let m: Vec<f64> = g
            .nodes()
            .iter()
            .map(|y| 0.7 / (y / 2.0).cosh())
            .collect();
        let (_, defect) = sandwiched_inverse_with_defect(&g, 1, &m).unwrap();
        assert!(defect <= 1e-10, "defect {defect}");
    }

    #[test]
    fn operators_refuse_mixed_grids() {
        let g1 = build_grid(4.0, 24).unwrap();
        let g2 = build_grid(4.0, 32).unwrap();
        let a = second_derivative_op(&g1);
        let b = second_derivative_op(&g2);
        assert!(matches!(
            a.matmul(&b),
            Err(CoreError::GridMismatch { .. })
        ));
    }

    #[test]
    fn symmetry_flags_are_verified() {
        let g = build_grid(4.0, 24).unwrap();
        let mut m = DMatrix::zeros(24, 24);
        m[(0, 1)] = 1.0;
        assert!(DenseOperator::from_real(&g, m, Symmetry::Symmetric).is_err());
        let d = first_derivative_op(&g);
        assert!(matches!(d.symmetry(), Symmetry::Antisymmetric));
    }

    #[test]
    fn refined_grid_nests() {
        let g = build_grid(7.0, 33).unwrap();
        let r = g.refined();
        assert_eq!(r.len(), 67);
        for j in 0..g.len() {
            assert_relative_eq!(r.node(2 * j + 1), g.node(j), epsilon = 1e-12);
        }
    }
}
