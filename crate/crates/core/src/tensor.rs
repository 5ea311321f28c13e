//! Dense complex matrices and vectors over labeled subsystems.
//!
//! A composite index is row-major: the leftmost label in `dims` is the
//! slowest-varying factor. All public constructors check shapes; density
//! matrix constructors additionally check Hermiticity and trace.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

pub type Complex64 = num_complex::Complex<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hard cap on the total Hilbert space dimension of any state or protocol
/// intermediate. Broadcast steps and two-copy conversions need headroom well
/// beyond the catalog states themselves.
pub const MAX_TOTAL_DIM: usize = 4096;

/// Entrywise Hermiticity tolerance for density matrices.
pub const TOL_HERMITIAN: f64 = 1e-12;
/// Trace tolerance for density matrices.
pub const TOL_TRACE: f64 = 1e-10;
/// Eigenvalue floor for positivity checks and rank decisions.
pub const TOL_EIGEN: f64 = 1e-10;

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

/// Computational basis column vector |i> in dimension n.
pub fn basis(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = cx(1.0, 0.0);
    v
}

/// Outer product |v><w|.
pub fn outer(v: &CVector, w: &CVector) -> CMatrix {
    v * w.adjoint()
}

/// Column vector as a dynamically-shaped n x 1 matrix.
pub fn ket_matrix(v: &CVector) -> CMatrix {
    CMatrix::from_fn(v.len(), 1, |i, _| v[i])
}

/// Conjugated row vector <v| as a dynamically-shaped 1 x n matrix.
pub fn bra_matrix(v: &CVector) -> CMatrix {
    CMatrix::from_fn(1, v.len(), |_, j| v[j].conj())
}

pub fn projector(v: &CVector) -> CMatrix {
    outer(v, v)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().sum()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Returns (eigenvalues, matrix whose k-th column is the k-th eigenvector).
///
/// Numerically diagonal inputs are read off directly. The nalgebra solver
/// occasionally returns NaN on exactly degenerate matrices; when that
/// happens a cyclic Jacobi sweep takes over.
pub fn hermitian_eig(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hermitian_eig needs a square matrix");
    if n == 1 {
        return (vec![a[(0, 0)].re], CMatrix::identity(1, 1));
    }
    let mut scale = 0.0f64;
    let mut offdiag = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let m = a[(i, j)].norm();
            if m > scale {
                scale = m;
            }
            if i != j && m > offdiag {
                offdiag = m;
            }
        }
    }
    if offdiag <= 1e-14 * scale.max(1.0) {
        let raw: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        return sorted_eig(&raw, &CMatrix::identity(n, n));
    }
    let sym = nalgebra::SymmetricEigen::new(a.clone());
    if sym.eigenvalues.iter().any(|v| !v.is_finite()) {
        return jacobi_eig(a);
    }
    // The library solver loses around seven digits on some well conditioned
    // inputs. Redo small solves with the slow rotations when that happens,
    // since channel validation needs eigenpairs close to machine precision.
    if n <= 96 {
        let mut residual = 0.0f64;
        for k in 0..n {
            let col = sym.eigenvectors.column(k);
            let r = a * col - col.scale(sym.eigenvalues[k]);
            residual = residual.max(r.norm());
            residual = residual.max((col.norm() - 1.0).abs() * scale.max(1.0));
        }
        if residual > 1e-12 * scale.max(1.0) * (n as f64) {
            return jacobi_eig(a);
        }
    }
    let raw: Vec<f64> = sym.eigenvalues.iter().copied().collect();
    sorted_eig(&raw, &sym.eigenvectors)
}

fn sorted_eig(vals: &[f64], vecs: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).expect("eigenvalue is NaN"));
    let sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut out = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        out.set_column(k, &vecs.column(i));
    }
    (sorted, out)
}

/// Cyclic Jacobi diagonalization for Hermitian matrices. Slower than the
/// library solver but immune to its degenerate-input failures.
fn jacobi_eig(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            assert!(a[(i, j)].is_finite(), "eigendecomposition of a non-finite matrix");
        }
    }
    let mut m = a.clone();
    let mut v = CMatrix::identity(n, n);
    let scale: f64 = (0..n)
        .map(|i| m[(i, i)].norm())
        .fold(1.0f64, f64::max);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = m[(p, q)];
                let b = beta.norm();
                if b <= 1e-300 {
                    continue;
                }
                let phase = beta / b;
                let alpha = m[(p, p)].re;
                let gamma = m[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // plane rotation U with U[p][p]=c, U[p][q]=s,
                // U[q][p]=-s/phase, U[q][q]=c/phase
                let upq = Complex64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * c + miq * uqp;
                    m[(i, q)] = mip * upq + miq * uqq;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * uqp;
                    v[(i, q)] = vip * upq + viq * uqq;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * c + mqj * uqp.conj();
                    m[(q, j)] = mpj * upq.conj() + mqj * uqq.conj();
                }
            }
        }
    }
    let raw: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    sorted_eig(&raw, &v)
}

/// Trace norm of a matrix, using the eigenvalues when it is Hermitian and
/// singular values otherwise.
pub fn trace_norm(a: &CMatrix) -> f64 {
    if hermiticity_defect(a) < 1e-9 {
        let herm = (a + a.adjoint()).scale(0.5);
        let (vals, _) = hermitian_eig(&herm);
        vals.iter().map(|v| v.abs()).sum()
    } else {
        a.clone().singular_values().iter().sum()
    }
}

/// Row-major strides: stride[k] = product of dims[k+1..].
pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets of every multi-index over the chosen axes, enumerated
/// row-major with `positions[0]` slowest. Offsets of disjoint axis sets add.
pub(crate) fn axis_offsets(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let strides = strides(dims);
    let mut offs = vec![0usize];
    for &p in positions {
        let d = dims[p];
        let s = strides[p];
        let mut next = Vec::with_capacity(offs.len() * d);
        for &base in &offs {
            for t in 0..d {
                next.push(base + t * s);
            }
        }
        offs = next;
    }
    offs
}

/// Positions of the requested labels inside `dims`, in the requested order.
pub(crate) fn label_positions(dims: &[(String, usize)], labels: &[&str]) -> Result<Vec<usize>> {
    let mut seen = Vec::with_capacity(labels.len());
    for l in labels {
        let p = dims
            .iter()
            .position(|(name, _)| name == l)
            .ok_or_else(|| Error::Label(format!("no subsystem named {l}")))?;
        if seen.contains(&p) {
            return Err(Error::Label(format!("label {l} listed twice")));
        }
        seen.push(p);
    }
    Ok(seen)
}

pub(crate) fn complement_of(len: usize, positions: &[usize]) -> Vec<usize> {
    (0..len).filter(|p| !positions.contains(p)).collect()
}

fn check_dims(dims: &[(String, usize)]) -> Result<usize> {
    let mut total = 1usize;
    for (i, (label, d)) in dims.iter().enumerate() {
        if label.is_empty() {
            return Err(Error::Label("empty subsystem label".into()));
        }
        if *d == 0 {
            return Err(Error::Shape(format!("subsystem {label} has dimension 0")));
        }
        for (other, _) in &dims[..i] {
            if other == label {
                return Err(Error::Label(format!("duplicate label {label}")));
            }
        }
        total = total
            .checked_mul(*d)
            .ok_or_else(|| Error::Shape("dimension overflow".into()))?;
    }
    if total > MAX_TOTAL_DIM {
        return Err(Error::Shape(format!(
            "total dimension {total} exceeds the cap {MAX_TOTAL_DIM}"
        )));
    }
    Ok(total)
}

/// Density matrix over an ordered list of labeled subsystems.
#[derive(Debug, Clone)]
pub struct MultipartiteState {
    dims: Vec<(String, usize)>,
    rho: CMatrix,
}

impl MultipartiteState {
    /// Checked constructor: shape, Hermiticity and unit trace. Positivity is
    /// a separate, more expensive check; see [`MultipartiteState::check_density`].
    pub fn new(dims: Vec<(String, usize)>, rho: CMatrix) -> Result<Self> {
        let total = check_dims(&dims)?;
        if rho.nrows() != total || rho.ncols() != total {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but labels give total dimension {total}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let defect = hermiticity_defect(&rho);
        if defect > TOL_HERMITIAN {
            return Err(Error::Consistency(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = trace(&rho);
        if (tr.re - 1.0).abs() > TOL_TRACE || tr.im.abs() > TOL_TRACE {
            return Err(Error::Consistency(format!("trace is {tr} instead of 1")));
        }
        Ok(Self { dims, rho })
    }

    /// Internal constructor for matrices produced by completely positive
    /// trace-preserving arithmetic. Re-symmetrizes to keep rounding from
    /// accumulating across long protocols.
    pub(crate) fn from_parts(dims: Vec<(String, usize)>, rho: CMatrix) -> Self {
        let total: usize = dims.iter().map(|(_, d)| d).product();
        debug_assert_eq!(rho.nrows(), total);
        debug_assert_eq!(rho.ncols(), total);
        let herm = (&rho + rho.adjoint()).scale(0.5);
        Self { dims, rho: herm }
    }

    /// State of an empty system (one-dimensional, used as a protocol vacuum).
    pub fn trivial() -> Self {
        Self {
            dims: Vec::new(),
            rho: CMatrix::identity(1, 1),
        }
    }

    pub fn dims(&self) -> &[(String, usize)] {
        &self.dims
    }

    pub fn labels(&self) -> Vec<&str> {
        self.dims.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn total_dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn dim_list(&self) -> Vec<usize> {
        self.dims.iter().map(|&(_, d)| d).collect()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.position(label)?].1)
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.dims.iter().any(|(l, _)| l == label)
    }

    fn position(&self, label: &str) -> Result<usize> {
        self.dims
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::Label(format!("no subsystem named {label}")))
    }

    /// Positions of the requested labels, in the requested order.
    pub(crate) fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        label_positions(&self.dims, labels)
    }

    pub(crate) fn complement_positions(&self, positions: &[usize]) -> Vec<usize> {
        complement_of(self.dims.len(), positions)
    }

    /// Reorder subsystems. `order` must list every label exactly once.
    pub fn permuted(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.dims.len() {
            return Err(Error::Label(format!(
                "permutation lists {} labels, state has {}",
                order.len(),
                self.dims.len()
            )));
        }
        let positions = self.positions(order)?;
        if positions.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let map = permutation_map(&self.dim_list(), &positions);
        let n = self.total_dim();
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(map[i], map[j])] = self.rho[(i, j)];
            }
        }
        let dims = positions
            .iter()
            .map(|&p| self.dims[p].clone())
            .collect();
        Ok(Self { dims, rho: out })
    }

    /// Partial trace keeping the listed labels, in the listed order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        let kp = self.positions(keep)?;
        let tp = self.complement_positions(&kp);
        let dims = self.dim_list();
        let off_k = axis_offsets(&dims, &kp);
        let off_t = axis_offsets(&dims, &tp);
        let nk = off_k.len();
        let mut out = CMatrix::zeros(nk, nk);
        for a in 0..nk {
            for b in 0..nk {
                let mut acc = cx(0.0, 0.0);
                for &t in &off_t {
                    acc += self.rho[(off_k[a] + t, off_k[b] + t)];
                }
                out[(a, b)] = acc;
            }
        }
        let dims = kp.iter().map(|&p| self.dims[p].clone()).collect();
        Ok(Self { dims, rho: out })
    }

    /// Tensor product; label sets must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        for (l, d) in &other.dims {
            dims.push((l.clone(), *d));
        }
        check_dims(&dims)?;
        Ok(Self {
            dims,
            rho: kron(&self.rho, &other.rho),
        })
    }

    /// Merge a group of labels into one subsystem. The group is brought
    /// adjacent (in group order) at the position of its first member; other
    /// labels keep their relative order.
    pub fn fuse(&self, group: &[&str], new_label: &str) -> Result<Self> {
        if group.is_empty() {
            return Err(Error::Label("cannot fuse an empty group".into()));
        }
        self.positions(group)?;
        let mut order: Vec<&str> = Vec::with_capacity(self.dims.len());
        for (l, _) in &self.dims {
            if l == group[0] {
                order.extend_from_slice(group);
            } else if !group.contains(&l.as_str()) {
                order.push(l);
            }
        }
        let permuted = self.permuted(&order)?;
        let start = permuted
            .dims
            .iter()
            .position(|(l, _)| l == group[0])
            .expect("group head present");
        let fused_dim: usize = permuted.dims[start..start + group.len()]
            .iter()
            .map(|&(_, d)| d)
            .product();
        let mut dims: Vec<(String, usize)> = Vec::new();
        dims.extend_from_slice(&permuted.dims[..start]);
        dims.push((new_label.to_string(), fused_dim));
        dims.extend_from_slice(&permuted.dims[start + group.len()..]);
        check_dims(&dims)?;
        Ok(Self {
            dims,
            rho: permuted.rho,
        })
    }

    pub fn relabeled(&self, old: &str, new: &str) -> Result<Self> {
        let p = self.position(old)?;
        if old != new && self.has_label(new) {
            return Err(Error::Label(format!("label {new} already in use")));
        }
        let mut dims = self.dims.clone();
        dims[p].0 = new.to_string();
        Ok(Self {
            dims,
            rho: self.rho.clone(),
        })
    }

    /// Full density-matrix invariants: Hermiticity, unit trace, positivity.
    pub fn check_density(&self) -> Result<()> {
        let defect = hermiticity_defect(&self.rho);
        if defect > TOL_HERMITIAN {
            return Err(Error::Consistency(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = trace(&self.rho);
        if (tr.re - 1.0).abs() > TOL_TRACE || tr.im.abs() > TOL_TRACE {
            return Err(Error::Consistency(format!("trace is {tr} instead of 1")));
        }
        let (vals, _) = hermitian_eig(&self.rho);
        if let Some(min) = vals.first() {
            if *min < -TOL_EIGEN {
                return Err(Error::Consistency(format!(
                    "matrix has negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Index map for a subsystem permutation: maps an old flat index to the flat
/// index after reordering axes as `positions` (new axis k = old axis
/// positions[k]).
fn permutation_map(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let old_strides = strides(dims);
    let new_dims: Vec<usize> = positions.iter().map(|&p| dims[p]).collect();
    let new_strides = strides(&new_dims);
    let total: usize = dims.iter().product();
    let mut map = vec![0usize; total];
    for (i, slot) in map.iter_mut().enumerate() {
        let mut acc = 0usize;
        for (k, &p) in positions.iter().enumerate() {
            let t = (i / old_strides[p]) % dims[p];
            acc += t * new_strides[k];
        }
        *slot = acc;
    }
    map
}

/// Pure state vector over labeled subsystems.
#[derive(Debug, Clone)]
pub struct PureState {
    dims: Vec<(String, usize)>,
    amps: CVector,
}

impl PureState {
    pub fn new(dims: Vec<(String, usize)>, amps: CVector) -> Result<Self> {
        let total = check_dims(&dims)?;
        if amps.len() != total {
            return Err(Error::Shape(format!(
                "vector has length {} but labels give total dimension {total}",
                amps.len()
            )));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > TOL_TRACE {
            return Err(Error::Consistency(format!("norm is {norm} instead of 1")));
        }
        Ok(Self { dims, amps })
    }

    pub(crate) fn from_parts(dims: Vec<(String, usize)>, amps: CVector) -> Self {
        Self { dims, amps }
    }

    pub fn dims(&self) -> &[(String, usize)] {
        &self.dims
    }

    pub fn labels(&self) -> Vec<&str> {
        self.dims.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn total_dim(&self) -> usize {
        self.amps.len()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        let p = label_positions(&self.dims, &[label])?[0];
        Ok(self.dims[p].1)
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.dims.iter().any(|(l, _)| l == label)
    }

    /// Positions of the requested labels, in the requested order.
    pub(crate) fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        label_positions(&self.dims, labels)
    }

    pub(crate) fn complement_positions(&self, positions: &[usize]) -> Vec<usize> {
        complement_of(self.dims.len(), positions)
    }

    pub(crate) fn dim_list(&self) -> Vec<usize> {
        self.dims.iter().map(|&(_, d)| d).collect()
    }

    pub fn to_density(&self) -> MultipartiteState {
        MultipartiteState::from_parts(self.dims.clone(), projector(&self.amps))
    }

    /// Reduced density matrix of the listed labels, computed from the Gram
    /// matrix of the reshaped amplitude vector. Cost scales with
    /// dim(keep)^2 * dim(rest), so callers should pass the smaller side.
    pub fn gram(&self, keep: &[&str]) -> Result<CMatrix> {
        let kp = self.positions(keep)?;
        let tp = self.complement_positions(&kp);
        let dims = self.dim_list();
        let off_k = axis_offsets(&dims, &kp);
        let off_t = axis_offsets(&dims, &tp);
        let nk = off_k.len();
        let mut g = CMatrix::zeros(nk, nk);
        for a in 0..nk {
            for b in 0..=a {
                let mut acc = cx(0.0, 0.0);
                for &t in &off_t {
                    acc += self.amps[off_k[a] + t] * self.amps[off_k[b] + t].conj();
                }
                g[(a, b)] = acc;
                g[(b, a)] = acc.conj();
            }
        }
        Ok(g)
    }

    /// Reduced state on the listed labels as a full labeled density matrix.
    pub fn marginal(&self, keep: &[&str]) -> Result<MultipartiteState> {
        let g = self.gram(keep)?;
        let kp = self.positions(keep)?;
        let dims = kp.iter().map(|&p| self.dims[p].clone()).collect();
        Ok(MultipartiteState::from_parts(dims, g))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        for (l, d) in &other.dims {
            dims.push((l.clone(), *d));
        }
        check_dims(&dims)?;
        Ok(Self {
            dims,
            amps: self.amps.kronecker(&other.amps),
        })
    }

    pub fn permuted(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.dims.len() {
            return Err(Error::Label("permutation must list every label".into()));
        }
        let positions = self.positions(order)?;
        if positions.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let map = permutation_map(&self.dim_list(), &positions);
        let mut out = CVector::zeros(self.amps.len());
        for i in 0..self.amps.len() {
            out[map[i]] = self.amps[i];
        }
        let dims = positions.iter().map(|&p| self.dims[p].clone()).collect();
        Ok(Self { dims, amps: out })
    }

    pub fn fuse(&self, group: &[&str], new_label: &str) -> Result<Self> {
        if group.is_empty() {
            return Err(Error::Label("cannot fuse an empty group".into()));
        }
        let mut order: Vec<&str> = Vec::with_capacity(self.dims.len());
        for (l, _) in &self.dims {
            if l == group[0] {
                order.extend_from_slice(group);
            } else if !group.contains(&l.as_str()) {
                order.push(l);
            }
        }
        let permuted = self.permuted(&order)?;
        let start = permuted
            .dims
            .iter()
            .position(|(l, _)| l == group[0])
            .expect("group head present");
        let fused_dim: usize = permuted.dims[start..start + group.len()]
            .iter()
            .map(|&(_, d)| d)
            .product();
        let mut dims: Vec<(String, usize)> = Vec::new();
        dims.extend_from_slice(&permuted.dims[..start]);
        dims.push((new_label.to_string(), fused_dim));
        dims.extend_from_slice(&permuted.dims[start + group.len()..]);
        check_dims(&dims)?;
        Ok(Self {
            dims,
            amps: permuted.amps,
        })
    }

    pub fn relabeled(&self, old: &str, new: &str) -> Result<Self> {
        let p = label_positions(&self.dims, &[old])?[0];
        if old != new && self.has_label(new) {
            return Err(Error::Label(format!("label {new} already in use")));
        }
        let mut dims = self.dims.clone();
        dims[p].0 = new.to_string();
        Ok(Self {
            dims,
            amps: self.amps.clone(),
        })
    }
}

/// Trace norm of the difference of two states over the same labels. The
/// second operand is permuted to the label order of the first.
pub fn trace_norm_distance(a: &MultipartiteState, b: &MultipartiteState) -> Result<f64> {
    let order = a.labels();
    let b = b.permuted(&order)?;
    for ((la, da), (lb, db)) in a.dims().iter().zip(b.dims().iter()) {
        if la != lb || da != db {
            return Err(Error::Shape(format!(
                "subsystem {la} has dimension {da} on one side and {db} on the other"
            )));
        }
    }
    Ok(trace_norm(&(a.matrix() - b.matrix())))
}

/// Canonical minimal purification.
///
/// Writes rho = sum_k v_k v_k^dag with v_k = sqrt(rho) w_k, where the w_k are
/// the Gram-Schmidt vectors of the columns of sqrt(rho) taken in index order.
/// The purifier basis therefore follows the computational structure of the
/// state: for a classically correlated state the purifier is a classical
/// copy of the nonzero configurations, which keeps downstream basis choices
/// meaningful. The purifier label is appended last with dimension rank(rho).
pub fn purify(s: &MultipartiteState, purifier_label: &str) -> Result<PureState> {
    if s.has_label(purifier_label) {
        return Err(Error::Label(format!(
            "purifier label {purifier_label} already in use"
        )));
    }
    let n = s.total_dim();
    let (vals, vecs) = hermitian_eig(s.matrix());
    let rank = vals.iter().filter(|&&v| v > TOL_EIGEN).count();
    if rank == 0 {
        return Err(Error::Consistency("state has numerical rank 0".into()));
    }
    let mut sqrt_rho = CMatrix::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v > TOL_EIGEN {
            let col = vecs.column(k);
            let scale = cx(v.sqrt(), 0.0);
            for i in 0..n {
                for j in 0..n {
                    sqrt_rho[(i, j)] += scale * col[i] * col[j].conj();
                }
            }
        }
    }
    // Gram-Schmidt over the columns of sqrt(rho), keeping natural phases.
    let mut basis_vecs: Vec<CVector> = Vec::with_capacity(rank);
    for j in 0..n {
        if basis_vecs.len() == rank {
            break;
        }
        let mut col: CVector = sqrt_rho.column(j).into();
        for w in &basis_vecs {
            let overlap = w.dotc(&col);
            col -= w * overlap;
        }
        let norm = col.norm();
        if norm > 1e-7 {
            basis_vecs.push(col.unscale(norm));
        }
    }
    if basis_vecs.len() != rank {
        // Fall back to the eigenbasis of the support; reachable only for
        // ill-conditioned inputs near the rank threshold.
        basis_vecs.clear();
        for (k, &v) in vals.iter().enumerate().rev() {
            if v > TOL_EIGEN {
                basis_vecs.push(vecs.column(k).into());
            }
        }
        basis_vecs.truncate(rank);
    }
    let mut amps = CVector::zeros(n * rank);
    for (k, w) in basis_vecs.iter().enumerate() {
        let v_k = &sqrt_rho * w;
        for i in 0..n {
            amps[i * rank + k] = v_k[i];
        }
    }
    let mut dims = s.dims().to_vec();
    dims.push((purifier_label.to_string(), rank));
    let norm = amps.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Consistency(format!(
            "purification norm drifted to {norm}"
        )));
    }
    amps.unscale_mut(norm);
    Ok(PureState { dims, amps })
}

#[derive(Serialize, Deserialize)]
struct DimEntry {
    label: String,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    dims: Vec<DimEntry>,
    matrix: Vec<(f64, f64)>,
}

/// Serialize a state to the JSON interchange form: labeled dims plus the
/// row-major matrix as (re, im) pairs. Floating point values survive a
/// round-trip bit-exactly.
pub fn state_to_json(s: &MultipartiteState) -> String {
    let n = s.total_dim();
    let mut matrix = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let z = s.matrix()[(i, j)];
            matrix.push((z.re, z.im));
        }
    }
    let file = StateFile {
        dims: s
            .dims()
            .iter()
            .map(|(l, d)| DimEntry {
                label: l.clone(),
                dim: *d,
            })
            .collect(),
        matrix,
    };
    serde_json::to_string_pretty(&file).expect("state serialization cannot fail")
}

/// Parse and fully validate a state (including positivity).
pub fn state_from_json(text: &str) -> Result<MultipartiteState> {
    let file: StateFile = serde_json::from_str(text)?;
    let dims: Vec<(String, usize)> = file.dims.into_iter().map(|e| (e.label, e.dim)).collect();
    let total = check_dims(&dims)?;
    if file.matrix.len() != total * total {
        return Err(Error::Shape(format!(
            "matrix has {} entries, expected {}",
            file.matrix.len(),
            total * total
        )));
    }
    let mut rho = CMatrix::zeros(total, total);
    for i in 0..total {
        for j in 0..total {
            let (re, im) = file.matrix[i * total + j];
            rho[(i, j)] = cx(re, im);
        }
    }
    let state = MultipartiteState::new(dims, rho)?;
    state.check_density()?;
    Ok(state)
}

pub fn save_state(s: &MultipartiteState, path: &Path) -> Result<()> {
    std::fs::write(path, state_to_json(s))?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<MultipartiteState> {
    let text = std::fs::read_to_string(path)?;
    state_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(1., 0.), cx(1., 0.), cx(0., 0.)])
    }

    fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[cx(1., 0.), cx(0., 0.), cx(0., 0.), cx(-1., 0.)])
    }

    fn bell_phi00() -> CVector {
        let mut v = CVector::zeros(4);
        v[0] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.);
        v[3] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.);
        v
    }

    #[test]
    fn kron_expands_pauli_pair() {
        let m = kron(&pauli_x(), &pauli_z());
        let expected = CMatrix::from_row_slice(
            4,
            4,
            &[
                cx(0., 0.),
                cx(0., 0.),
                cx(1., 0.),
                cx(0., 0.),
                cx(0., 0.),
                cx(0., 0.),
                cx(0., 0.),
                cx(-1., 0.),
                cx(1., 0.),
                cx(0., 0.),
                cx(0., 0.),
                cx(0., 0.),
                cx(0., 0.),
                cx(-1., 0.),
                cx(0., 0.),
                cx(0., 0.),
            ],
        );
        assert_eq!(m, expected);
    }

    #[test]
    fn strides_are_row_major() {
        assert_eq!(strides(&[2, 3, 4]), vec![12, 4, 1]);
        assert_eq!(axis_offsets(&[2, 3], &[1]), vec![0, 1, 2]);
        assert_eq!(axis_offsets(&[2, 3], &[0]), vec![0, 3]);
        assert_eq!(axis_offsets(&[2, 3], &[1, 0]), vec![0, 3, 1, 4, 2, 5]);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let s = MultipartiteState::new(
            vec![("A".into(), 2), ("B".into(), 2)],
            projector(&bell_phi00()),
        )
        .unwrap();
        let a = s.partial_trace(&["A"]).unwrap();
        assert_eq!(a.total_dim(), 2);
        assert_abs_diff_eq!(a.matrix()[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(a.matrix()[(1, 1)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(a.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_respects_requested_order() {
        // |0><0| x pi_3: keep (B, A) should give pi_3 x |0><0|.
        let zero = projector(&basis(2, 0));
        let pi3 = CMatrix::identity(3, 3).scale(1.0 / 3.0);
        let s = MultipartiteState::new(
            vec![("A".into(), 2), ("B".into(), 3)],
            kron(&zero, &pi3),
        )
        .unwrap();
        let ba = s.partial_trace(&["B", "A"]).unwrap();
        assert_eq!(ba.labels(), vec!["B", "A"]);
        let expected = kron(&pi3, &zero);
        assert_abs_diff_eq!((ba.matrix() - expected).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn permutation_round_trips() {
        let v = bell_phi00();
        let e = basis(3, 1);
        let amps = v.kronecker(&e);
        let s = MultipartiteState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 3)],
            projector(&amps),
        )
        .unwrap();
        let p = s.permuted(&["E", "A", "B"]).unwrap();
        assert_eq!(p.labels(), vec!["E", "A", "B"]);
        let back = p.permuted(&["A", "B", "E"]).unwrap();
        assert_abs_diff_eq!((back.matrix() - s.matrix()).norm(), 0.0, epsilon = 1e-14);
        let e_marg = p.partial_trace(&["E"]).unwrap();
        assert_abs_diff_eq!(e_marg.matrix()[(1, 1)].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn fuse_merges_adjacent_dims() {
        let v = bell_phi00();
        let e = basis(3, 2);
        let s = MultipartiteState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 3)],
            projector(&v.kronecker(&e)),
        )
        .unwrap();
        let f = s.fuse(&["B", "E"], "BE").unwrap();
        assert_eq!(f.labels(), vec!["A", "BE"]);
        assert_eq!(f.dim_of("BE").unwrap(), 6);
        let back = f.partial_trace(&["A"]).unwrap();
        let direct = s.partial_trace(&["A"]).unwrap();
        assert_abs_diff_eq!(
            (back.matrix() - direct.matrix()).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn eigenvalues_of_classical_mixture() {
        // diag(1/4, 0, 0, 3/4) as a two-qubit state.
        let mut rho = CMatrix::zeros(4, 4);
        rho[(0, 0)] = cx(0.25, 0.);
        rho[(3, 3)] = cx(0.75, 0.);
        let (vals, vecs) = hermitian_eig(&rho);
        let expected = [0.0, 0.0, 0.25, 0.75];
        for (v, e) in vals.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(v, e, epsilon = 1e-13);
        }
        let rebuilt = &vecs
            * CMatrix::from_diagonal(&CVector::from_iterator(
                4,
                vals.iter().map(|&v| cx(v, 0.)),
            ))
            * vecs.adjoint();
        assert_abs_diff_eq!((rebuilt - rho).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_norm_distance_pure_vs_mixed() {
        let zero = MultipartiteState::new(vec![("A".into(), 2)], projector(&basis(2, 0))).unwrap();
        let mixed =
            MultipartiteState::new(vec![("A".into(), 2)], CMatrix::identity(2, 2).scale(0.5))
                .unwrap();
        let d = trace_norm_distance(&zero, &mixed).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn purification_of_classical_pair_is_a_copy() {
        // 1/2(|00><00| + |11><11|) on a fused 4-dim system.
        let mut rho = CMatrix::zeros(4, 4);
        rho[(0, 0)] = cx(0.5, 0.);
        rho[(3, 3)] = cx(0.5, 0.);
        let s = MultipartiteState::new(vec![("S".into(), 4)], rho).unwrap();
        let phi = purify(&s, "F").unwrap();
        assert_eq!(phi.dims(), &[("S".to_string(), 4), ("F".to_string(), 2)]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut expected = CVector::zeros(8);
        expected[0] = cx(r, 0.); // |0>_S |0>_F
        expected[7] = cx(r, 0.); // |3>_S |1>_F
        assert_abs_diff_eq!((phi.amplitudes() - expected).norm(), 0.0, epsilon = 1e-10);
        let back = phi.marginal(&["S"]).unwrap();
        assert_abs_diff_eq!((back.matrix() - s.matrix()).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn purification_recovers_full_rank_state() {
        let mut rho = CMatrix::zeros(3, 3);
        rho[(0, 0)] = cx(0.5, 0.);
        rho[(1, 1)] = cx(0.3, 0.);
        rho[(2, 2)] = cx(0.2, 0.);
        rho[(0, 1)] = cx(0.1, 0.05);
        rho[(1, 0)] = cx(0.1, -0.05);
        let s = MultipartiteState::new(vec![("S".into(), 3)], rho).unwrap();
        let phi = purify(&s, "F").unwrap();
        assert_eq!(phi.dim_of("F").unwrap(), 3);
        let back = phi.marginal(&["S"]).unwrap();
        assert_abs_diff_eq!(
            (back.matrix() - s.matrix()).norm(),
            0.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn gram_matches_partial_trace() {
        let v = bell_phi00();
        let e = basis(3, 1);
        let amps = v.kronecker(&e);
        let psi = PureState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 3)],
            amps.clone(),
        )
        .unwrap();
        let dens = MultipartiteState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 3)],
            projector(&amps),
        )
        .unwrap();
        for keep in [vec!["A"], vec!["B", "E"], vec!["E", "A"]] {
            let g = psi.gram(&keep).unwrap();
            let t = dens.partial_trace(&keep).unwrap();
            assert_abs_diff_eq!((g - t.matrix()).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let err = MultipartiteState::new(
            vec![("A".into(), MAX_TOTAL_DIM + 1)],
            CMatrix::identity(MAX_TOTAL_DIM + 1, MAX_TOTAL_DIM + 1),
        );
        assert!(matches!(err, Err(Error::Shape(_))));
    }

    #[test]
    fn constructor_rejects_bad_density_matrices() {
        let mut skew = CMatrix::identity(2, 2).scale(0.5);
        skew[(0, 1)] = cx(0.1, 0.);
        assert!(matches!(
            MultipartiteState::new(vec![("A".into(), 2)], skew),
            Err(Error::Consistency(_))
        ));
        let off_trace = CMatrix::identity(2, 2);
        assert!(matches!(
            MultipartiteState::new(vec![("A".into(), 2)], off_trace),
            Err(Error::Consistency(_))
        ));
        let dup = MultipartiteState::new(
            vec![("A".into(), 2), ("A".into(), 2)],
            CMatrix::identity(4, 4).scale(0.25),
        );
        assert!(matches!(dup, Err(Error::Label(_))));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let odd = 0.1 + 0.2;
        let third = 1.0 / 3.0;
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = cx(odd, 0.);
        rho[(1, 1)] = cx(1.0 - odd, 0.);
        rho[(0, 1)] = cx(third * 1e-3, -1e-30);
        rho[(1, 0)] = cx(third * 1e-3, 1e-30);
        let s = MultipartiteState::new(vec![("A".into(), 2)], rho).unwrap();
        let text = state_to_json(&s);
        let back = state_from_json(&text).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(s.matrix()[(i, j)], back.matrix()[(i, j)]);
            }
        }
    }

    #[test]
    fn json_rejects_malformed_and_unphysical_input() {
        assert!(matches!(
            state_from_json("{ not json"),
            Err(Error::Parse(_))
        ));
        // Valid JSON, wrong entry count.
        let bad = r#"{"dims":[{"label":"A","dim":2}],"matrix":[[1.0,0.0]]}"#;
        assert!(matches!(state_from_json(bad), Err(Error::Shape(_))));
        // Hermitian, unit trace, but not positive.
        let neg = r#"{"dims":[{"label":"A","dim":2}],"matrix":[[1.5,0.0],[0.0,0.0],[0.0,0.0],[-0.5,0.0]]}"#;
        assert!(matches!(state_from_json(neg), Err(Error::Consistency(_))));
    }
}
