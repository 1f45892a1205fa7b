//! Piecewise-linear finite elements on a uniform partition of (-1, 1).
//!
//! The state equation is `-y'' + u y = f` with natural (Neumann) boundary
//! conditions. The coefficient `u` is piecewise constant ([`ElementField`]),
//! the state `y` and every dual quantity are piecewise linear ([`NodalField`]).
//! PDE solves use the consistent mass matrix; functional values and the
//! inner product on the state space use the lumped (diagonal) mass.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Uniform mesh of `n` elements on (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    lumped_weights: Vec<f64>,
}

impl Mesh1D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMesh(n));
        }
        let h = 2.0 / n as f64;
        let nf = n as f64;
        // (2j - n) / n is exactly antisymmetric under j -> n - j.
        let nodes = (0..=n).map(|j| (2.0 * j as f64 - nf) / nf).collect();
        let mut lumped_weights = vec![h; n + 1];
        lumped_weights[0] = 0.5 * h;
        lumped_weights[n] = 0.5 * h;
        Ok(Self {
            n,
            h,
            nodes,
            lumped_weights,
        })
    }

    /// Number of elements.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.n + 1
    }

    /// Element width.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Row sums of the consistent mass matrix: `h/2` at the two boundary
    /// nodes and `h` in the interior.
    pub fn lumped_weights(&self) -> &[f64] {
        &self.lumped_weights
    }

    /// Midpoint of element `e`.
    pub fn midpoint(&self, e: usize) -> f64 {
        let nf = self.n as f64;
        (2.0 * e as f64 + 1.0 - nf) / nf
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|e| self.midpoint(e))
    }

    /// Inner product of two coefficient vectors in the given space.
    pub fn inner(&self, space: Space, a: &[f64], b: &[f64]) -> Result<f64> {
        let expected = match space {
            Space::NodalLumped => self.n + 1,
            Space::Element => self.n,
        };
        check_len(expected, a.len())?;
        check_len(expected, b.len())?;
        Ok(match space {
            Space::NodalLumped => self
                .lumped_weights
                .iter()
                .zip(a.iter().zip(b))
                .map(|(w, (x, y))| w * x * y)
                .sum(),
            Space::Element => self.h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>(),
        })
    }

    pub fn norm(&self, space: Space, a: &[f64]) -> Result<f64> {
        self.inner(space, a, a).map(f64::sqrt)
    }

    /// Lumped L² inner product of two nodal fields.
    ///
    /// Panics if either field was built on a different mesh.
    pub fn y_inner(&self, a: &NodalField, b: &NodalField) -> f64 {
        self.inner(Space::NodalLumped, a, b)
            .expect("nodal field does not belong to this mesh")
    }

    pub fn y_norm(&self, a: &NodalField) -> f64 {
        self.y_inner(a, a).sqrt()
    }

    /// L² inner product of two piecewise constant fields.
    ///
    /// Panics if either field was built on a different mesh.
    pub fn x_inner(&self, a: &ElementField, b: &ElementField) -> f64 {
        self.inner(Space::Element, a, b)
            .expect("element field does not belong to this mesh")
    }

    pub fn x_norm(&self, a: &ElementField) -> f64 {
        self.x_inner(a, a).sqrt()
    }

    /// Consistent load vector `b_j = ∫ f φ_j`.
    pub fn load_vector(&self, source: &Source) -> Result<NodalField> {
        match source {
            Source::Constant(f) => Ok(NodalField::new(
                self.lumped_weights.iter().map(|w| f * w).collect(),
            )),
            Source::Nodal(f) => self.mass_apply(f),
        }
    }

    /// Consistent mass matrix times a nodal vector.
    pub fn mass_apply(&self, f: &NodalField) -> Result<NodalField> {
        check_len(self.n + 1, f.len())?;
        let c = self.h / 6.0;
        let mut out = vec![0.0; self.n + 1];
        for e in 0..self.n {
            let (l, r) = (f[e], f[e + 1]);
            out[e] += c * (2.0 * l + r);
            out[e + 1] += c * (l + 2.0 * r);
        }
        Ok(NodalField::new(out))
    }

    fn check_element(&self, u: &ElementField) -> Result<()> {
        check_len(self.n, u.len())
    }

    fn check_nodal(&self, y: &NodalField) -> Result<()> {
        check_len(self.n + 1, y.len())
    }
}

/// Which discrete L² inner product to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// `Σ_j w_j a_j b_j` with the lumped weights.
    NodalLumped,
    /// `h Σ_e a_e b_e`.
    Element,
}

/// Right-hand side of the state equation.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Constant(f64),
    Nodal(NodalField),
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}

macro_rules! field_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name {
            values: Vec<f64>,
        }

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                Self { values }
            }

            pub fn filled(len: usize, value: f64) -> Self {
                Self { values: vec![value; len] }
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            /// Largest absolute entry.
            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            /// Largest `|v_j - v_{len-1-j}|`, i.e. deviation from an even
            /// function on the symmetric mesh.
            pub fn asymmetry(&self) -> f64 {
                let n = self.values.len();
                (0..n / 2).fold(0.0, |m, j| {
                    m.max((self.values[j] - self.values[n - 1 - j]).abs())
                })
            }

            pub fn is_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }

            /// `self + a * other`, elementwise.
            pub fn add_scaled(&self, a: f64, other: &Self) -> Self {
                Self::new(
                    self.values
                        .iter()
                        .zip(&other.values)
                        .map(|(x, y)| x + a * y)
                        .collect(),
                )
            }

            pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
                Self::new(self.values.iter().map(|&v| f(v)).collect())
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.values
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(values: Vec<f64>) -> Self {
                Self::new(values)
            }
        }
    };
}

field_newtype!(
    /// Piecewise constant function, one value per element.
    ElementField
);

field_newtype!(
    /// Piecewise linear function, one value per node.
    NodalField
);

impl ElementField {
    pub fn constant(mesh: &Mesh1D, value: f64) -> Self {
        Self::filled(mesh.n(), value)
    }

    /// Samples `f` at the element midpoints.
    pub fn from_midpoints(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> Self {
        Self::new(mesh.midpoints().map(f).collect())
    }
}

impl NodalField {
    pub fn constant(mesh: &Mesh1D, value: f64) -> Self {
        Self::filled(mesh.num_nodes(), value)
    }

    pub fn from_nodes(mesh: &Mesh1D, f: impl Fn(f64) -> f64) -> Self {
        Self::new(mesh.nodes().iter().map(|&x| f(x)).collect())
    }
}

/// Symmetric tridiagonal matrix stored by bands.
///
/// An operator may also carry its exact row sums. For symmetric matrices
/// with non-positive off-diagonals the solver then works with the excess of
/// each pivot over its coupling, which avoids the cancellation between the
/// large stiffness entries and the small mass entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    row_sums: Option<Vec<f64>>,
}

impl TridiagonalOperator {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("empty tridiagonal matrix".into()));
        }
        check_len(diag.len() - 1, lower.len())?;
        check_len(diag.len() - 1, upper.len())?;
        Ok(Self {
            lower,
            diag,
            upper,
            row_sums: None,
        })
    }

    /// Attaches the exact row sums `diag_j + lower_{j-1} + upper_j`.
    pub fn with_row_sums(mut self, sums: Vec<f64>) -> Result<Self> {
        check_len(self.order(), sums.len())?;
        self.row_sums = Some(sums);
        Ok(self)
    }

    pub fn identity(order: usize) -> Self {
        Self {
            lower: vec![0.0; order.saturating_sub(1)],
            diag: vec![1.0; order],
            upper: vec![0.0; order.saturating_sub(1)],
            row_sums: None,
        }
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn row_sums(&self) -> Option<&[f64]> {
        self.row_sums.as_deref()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = self.order();
        check_len(m, x.len())?;
        let mut out: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for j in 0..m - 1 {
            out[j] += self.upper[j] * x[j + 1];
            out[j + 1] += self.lower[j] * x[j];
        }
        Ok(out)
    }

    fn excess_form(&self) -> Option<&[f64]> {
        let sums = self.row_sums.as_deref()?;
        (self.is_symmetric() && self.upper.iter().all(|&b| b <= 0.0)).then_some(sums)
    }

    /// Two-sided Thomas elimination: rows above the middle are eliminated
    /// top-down, rows below bottom-up, and the two sweeps meet at the middle
    /// row. Mirror-symmetric systems therefore give exactly mirror-symmetric
    /// solutions. Every pivot must be positive, which is the case for the
    /// operators assembled from a coefficient `u >= eps > 0`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.order();
        check_len(m, rhs.len())?;
        let scale = self.diag.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
        // pivots at roundoff level count as zero: the pure Neumann operator
        // (u = 0) is singular but rarely gives an exact 0.0 pivot.
        let tol = 8.0 * f64::EPSILON * m as f64 * scale;
        let check = |row: usize, pivot: f64| {
            if pivot > tol {
                Ok(pivot)
            } else {
                Err(Error::NonPositivePivot { row, pivot })
            }
        };
        let sums = self.excess_form();
        let mid = m / 2;

        // pivot[j] = coupling + excess[j] in the excess form
        let mut pivot = vec![0.0; m];
        let mut excess = vec![0.0; m];
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];

        // top-down: x_j + c_j x_{j+1} = d_j for j < mid
        for j in 0..mid {
            let (p, carry) = match (j, sums) {
                (0, Some(s)) => {
                    excess[0] = s[0];
                    (s[0] - self.upper[0], rhs[0])
                }
                (0, None) => (self.diag[0], rhs[0]),
                (_, Some(s)) => {
                    let b = -self.lower[j - 1];
                    excess[j] = s[j] + b * (excess[j - 1] / pivot[j - 1]);
                    (excess[j] - self.upper[j], rhs[j] + b * d[j - 1])
                }
                (_, None) => (
                    self.diag[j] - self.lower[j - 1] * c[j - 1],
                    rhs[j] - self.lower[j - 1] * d[j - 1],
                ),
            };
            pivot[j] = check(j, p)?;
            c[j] = self.upper[j] / pivot[j];
            d[j] = carry / pivot[j];
        }
        // bottom-up: x_j + c_j x_{j-1} = d_j for j > mid
        for j in (mid + 1..m).rev() {
            let (p, carry) = match (j == m - 1, sums) {
                (true, Some(s)) => {
                    excess[j] = s[j];
                    (s[j] - self.lower[j - 1], rhs[j])
                }
                (true, None) => (self.diag[j], rhs[j]),
                (false, Some(s)) => {
                    let b = -self.upper[j];
                    excess[j] = s[j] + b * (excess[j + 1] / pivot[j + 1]);
                    (excess[j] - self.lower[j - 1], rhs[j] + b * d[j + 1])
                }
                (false, None) => (
                    self.diag[j] - self.upper[j] * c[j + 1],
                    rhs[j] - self.upper[j] * d[j + 1],
                ),
            };
            pivot[j] = check(j, p)?;
            c[j] = self.lower[j - 1] / pivot[j];
            d[j] = carry / pivot[j];
        }

        let above = (mid > 0).then(|| mid - 1);
        let below = (mid + 1 < m).then_some(mid + 1);
        let (mut p, mut carry) = match sums {
            Some(s) => (s[mid], rhs[mid]),
            None => (self.diag[mid], rhs[mid]),
        };
        let contrib = |k: usize, coupling: f64| match sums {
            Some(_) => (-coupling * (excess[k] / pivot[k]), coupling * d[k]),
            None => (coupling * c[k], coupling * d[k]),
        };
        let from_above = above.map(|k| contrib(k, self.lower[mid - 1]));
        let from_below = below.map(|k| contrib(k, self.upper[mid]));
        let sign = if sums.is_some() { -1.0 } else { 1.0 };
        match (from_above, from_below) {
            (Some(a), Some(b)) => {
                p -= sign * (a.0 + b.0);
                carry -= a.1 + b.1;
            }
            (Some(a), None) | (None, Some(a)) => {
                p -= sign * a.0;
                carry -= a.1;
            }
            (None, None) => {}
        }
        let p = check(mid, p)?;

        let mut x = vec![0.0; m];
        x[mid] = carry / p;
        for j in (0..mid).rev() {
            x[j] = d[j] - c[j] * x[j + 1];
        }
        for j in mid + 1..m {
            x[j] = d[j] - c[j] * x[j - 1];
        }
        Ok(x)
    }
}

/// Stiffness plus coefficient-weighted consistent mass.
pub fn assemble_operator(mesh: &Mesh1D, u: &ElementField) -> Result<TridiagonalOperator> {
    mesh.check_element(u)?;
    let n = mesh.n();
    let k = 1.0 / mesh.h();
    let mut diag = vec![0.0; n + 1];
    let mut off = vec![0.0; n];
    let mut sums = vec![0.0; n + 1];
    for (e, &ue) in u.iter().enumerate() {
        let m = ue * mesh.h() / 6.0;
        diag[e] += k + 2.0 * m;
        diag[e + 1] += k + 2.0 * m;
        off[e] = m - k;
        sums[e] += 0.5 * ue * mesh.h();
        sums[e + 1] += 0.5 * ue * mesh.h();
    }
    TridiagonalOperator::new(off.clone(), diag, off)?.with_row_sums(sums)
}

pub fn solve_linear(a: &TridiagonalOperator, rhs: &NodalField) -> Result<NodalField> {
    a.solve(rhs).map(NodalField::new)
}

/// `S(u)`: solves `⟨y', v'⟩ + ⟨u y, v⟩ = ⟨f, v⟩` for all test functions.
pub fn forward_solve(mesh: &Mesh1D, u: &ElementField, f: &Source) -> Result<NodalField> {
    let a = assemble_operator(mesh, u)?;
    let b = mesh.load_vector(f)?;
    solve_linear(&a, &b)
}

/// `S'(u) du`: solves the linearized equation with right-hand side `-y du`.
///
/// `y` must be the state `S(u)`.
pub fn derivative_apply(
    mesh: &Mesh1D,
    u: &ElementField,
    y: &NodalField,
    du: &ElementField,
) -> Result<NodalField> {
    mesh.check_element(du)?;
    mesh.check_nodal(y)?;
    let a = assemble_operator(mesh, u)?;
    let c = mesh.h() / 6.0;
    let mut b = vec![0.0; mesh.num_nodes()];
    for (e, &d) in du.iter().enumerate() {
        let (l, r) = (y[e], y[e + 1]);
        b[e] -= d * c * (2.0 * l + r);
        b[e + 1] -= d * c * (l + 2.0 * r);
    }
    a.solve(&b).map(NodalField::new)
}

/// `S'(u)* p` with respect to the lumped nodal and the element inner
/// products: solves `A(u) z = -W p` (`W` the lumped mass) and returns the
/// element means of `y z`.
///
/// `y` must be the state `S(u)`.
pub fn adjoint_apply(
    mesh: &Mesh1D,
    u: &ElementField,
    y: &NodalField,
    p: &NodalField,
) -> Result<ElementField> {
    mesh.check_nodal(y)?;
    mesh.check_nodal(p)?;
    let a = assemble_operator(mesh, u)?;
    let b: Vec<f64> = mesh
        .lumped_weights()
        .iter()
        .zip(p.iter())
        .map(|(w, v)| -w * v)
        .collect();
    let z = a.solve(&b)?;
    Ok(ElementField::new(
        (0..mesh.n())
            .map(|e| {
                let (yl, yr, zl, zr) = (y[e], y[e + 1], z[e], z[e + 1]);
                (2.0 * (yl * zl + yr * zr) + (yl * zr + yr * zl)) / 6.0
            })
            .collect(),
    ))
}
