//! Quantum channels in Kraus form, isometries, Choi matrices and the
//! reversibility check used by Eve's free operations.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{
    basis, bra_matrix, cx, hermitian_eig, identity, ket_matrix, kron, trace_norm,
    CMatrix, CVector, MultipartiteState, PureState,
};

/// Completeness tolerance for Kraus sets and isometries.
pub const TOL_CPTP: f64 = 1e-10;
/// Choi distance below which two channels are considered equal.
pub const TOL_CHANNEL_EQ: f64 = 1e-9;
/// Tolerance for the state-wise reversibility residual.
pub const TOL_REVERSIBLE: f64 = 1e-8;

/// Completely positive trace-preserving map in Kraus form.
#[derive(Debug, Clone)]
pub struct Channel {
    kraus: Vec<CMatrix>,
    in_dim: usize,
    out_dim: usize,
}

impl Channel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Input("channel needs at least one Kraus operator".into()))?;
        let (out_dim, in_dim) = (first.nrows(), first.ncols());
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Shape("Kraus operators cannot be empty".into()));
        }
        let mut completeness = CMatrix::zeros(in_dim, in_dim);
        for k in &kraus {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::Shape(
                    "all Kraus operators must share one shape".into(),
                ));
            }
            completeness += k.adjoint() * k;
        }
        let defect = (&completeness - identity(in_dim)).norm();
        if defect > TOL_CPTP * (in_dim as f64).sqrt().max(1.0) {
            return Err(Error::Consistency(format!(
                "Kraus set is not trace preserving (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            kraus,
            in_dim,
            out_dim,
        })
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn identity_map(d: usize) -> Self {
        Self {
            kraus: vec![identity(d)],
            in_dim: d,
            out_dim: d,
        }
    }

    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::Shape("unitary must be square".into()));
        }
        Self::new(vec![u.clone()])
    }

    /// Slices a Stinespring isometry with row layout (system, environment)
    /// into Kraus operators and validates the result.
    pub fn from_stinespring(v: &CMatrix, out_dim: usize, env_dim: usize) -> Result<Self> {
        if v.nrows() != out_dim * env_dim {
            return Err(Error::Shape(format!(
                "Stinespring row count {} does not match {out_dim} x {env_dim}",
                v.nrows()
            )));
        }
        let in_dim = v.ncols();
        let mut kraus = Vec::with_capacity(env_dim);
        for k in 0..env_dim {
            let mut op = CMatrix::zeros(out_dim, in_dim);
            for a in 0..out_dim {
                for b in 0..in_dim {
                    op[(a, b)] = v[(a * env_dim + k, b)];
                }
            }
            kraus.push(op);
        }
        Self::new(kraus)
    }

    /// Same slicing without the completeness check, for optimizer loops that
    /// already guarantee an isometric input.
    pub(crate) fn from_stinespring_unchecked(v: &CMatrix, out_dim: usize, env_dim: usize) -> Self {
        let in_dim = v.ncols();
        let mut kraus = Vec::with_capacity(env_dim);
        for k in 0..env_dim {
            let mut op = CMatrix::zeros(out_dim, in_dim);
            for a in 0..out_dim {
                for b in 0..in_dim {
                    op[(a, b)] = v[(a * env_dim + k, b)];
                }
            }
            kraus.push(op);
        }
        Self { kraus, in_dim, out_dim }
    }

    /// Dephasing in the computational basis.
    pub fn dephasing(d: usize) -> Self {
        let kraus = (0..d)
            .map(|i| {
                let mut k = CMatrix::zeros(d, d);
                k[(i, i)] = cx(1.0, 0.0);
                k
            })
            .collect();
        Self {
            kraus,
            in_dim: d,
            out_dim: d,
        }
    }

    /// Dephasing in the basis given by the columns of `u`.
    pub fn dephasing_in_basis(u: &CMatrix) -> Result<Self> {
        let d = u.nrows();
        if u.ncols() != d {
            return Err(Error::Shape("basis matrix must be square".into()));
        }
        let kraus = (0..d)
            .map(|i| {
                let col: CVector = u.column(i).into();
                &col * col.adjoint()
            })
            .collect();
        Self::new(kraus)
    }

    /// Trace the input and prepare `sigma` (trace-and-replace).
    pub fn erasure(in_dim: usize, sigma: &CMatrix) -> Result<Self> {
        let d_out = sigma.nrows();
        let (vals, vecs) = hermitian_eig(sigma);
        let mut kraus = Vec::new();
        for (m, &v) in vals.iter().enumerate() {
            if v > 1e-15 {
                let w: CVector = vecs.column(m).into();
                let scaled = w.scale(v.sqrt());
                for k in 0..in_dim {
                    kraus.push(ket_matrix(&scaled) * bra_matrix(&basis(in_dim, k)));
                }
            }
        }
        if kraus.is_empty() {
            return Err(Error::Input("replacement state has rank 0".into()));
        }
        let _ = d_out;
        Self::new(kraus)
    }

    /// Discard the system entirely (output dimension 1).
    pub fn discard(d: usize) -> Self {
        let kraus = (0..d).map(|i| bra_matrix(&basis(d, i))).collect();
        Self {
            kraus,
            in_dim: d,
            out_dim: 1,
        }
    }

    /// Prepare `sigma` from a trivial input.
    pub fn prepare(sigma: &CMatrix) -> Result<Self> {
        Channel::erasure(1, sigma)
    }

    /// Composition self after other.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if other.out_dim != self.in_dim {
            return Err(Error::Shape(format!(
                "cannot compose: inner dims {} vs {}",
                other.out_dim, self.in_dim
            )));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a * b);
            }
        }
        Ok(Self {
            kraus,
            in_dim: other.in_dim,
            out_dim: self.out_dim,
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(kron(a, b));
            }
        }
        Self {
            kraus,
            in_dim: self.in_dim * other.in_dim,
            out_dim: self.out_dim * other.out_dim,
        }
    }

    /// Choi matrix, normalized to unit trace: (1/d_in) sum_ij |i><j| (x)
    /// c(|i><j|), with the input factor first.
    pub fn choi(&self) -> CMatrix {
        let d = self.in_dim;
        let m = self.out_dim;
        let mut c = CMatrix::zeros(d * m, d * m);
        let w = 1.0 / d as f64;
        for k in &self.kraus {
            for i in 0..d {
                for j in 0..d {
                    for a in 0..m {
                        for b in 0..m {
                            c[(i * m + a, j * m + b)] +=
                                cx(w, 0.0) * k[(a, i)] * k[(b, j)].conj();
                        }
                    }
                }
            }
        }
        c
    }

    /// Stinespring isometry W with environment dimension = number of Kraus
    /// operators; the output index order is (system, environment).
    pub fn stinespring(&self) -> Isometry {
        let nk = self.kraus.len();
        let mut w = CMatrix::zeros(self.out_dim * nk, self.in_dim);
        for (k, op) in self.kraus.iter().enumerate() {
            for a in 0..self.out_dim {
                for b in 0..self.in_dim {
                    w[(a * nk + k, b)] = op[(a, b)];
                }
            }
        }
        Isometry { m: w }
    }

    /// Apply to the listed target subsystems (fused in the given order).
    /// Output subsystems replace the targets and are placed first; the
    /// remaining labels keep their relative order.
    pub fn apply(
        &self,
        s: &MultipartiteState,
        targets: &[&str],
        outputs: &[(String, usize)],
    ) -> Result<MultipartiteState> {
        if targets.is_empty() && self.in_dim != 1 {
            return Err(Error::Shape("no targets for a nontrivial input".into()));
        }
        let tp = s.positions(targets)?;
        let target_dim: usize = tp.iter().map(|&p| s.dims()[p].1).product();
        if target_dim != self.in_dim {
            return Err(Error::Shape(format!(
                "targets have total dimension {target_dim}, channel expects {}",
                self.in_dim
            )));
        }
        let out_total: usize = outputs.iter().map(|(_, d)| d).product();
        if out_total != self.out_dim {
            return Err(Error::Shape(format!(
                "outputs have total dimension {out_total}, channel produces {}",
                self.out_dim
            )));
        }
        let rest: Vec<&str> = s
            .labels()
            .into_iter()
            .filter(|l| !targets.contains(l))
            .collect();
        for (l, _) in outputs {
            if rest.contains(&l.as_str()) {
                return Err(Error::Label(format!("output label {l} already in use")));
            }
        }
        let mut order: Vec<&str> = targets.to_vec();
        order.extend_from_slice(&rest);
        let permuted = s.permuted(&order)?;
        let m: usize = permuted.total_dim() / self.in_dim;
        let rho_out = apply_kraus_front(permuted.matrix(), &self.kraus, m);
        let mut dims: Vec<(String, usize)> = outputs.to_vec();
        for l in &rest {
            dims.push((l.to_string(), s.dim_of(l)?));
        }
        if dims.iter().map(|(_, d)| d).product::<usize>() > crate::tensor::MAX_TOTAL_DIM {
            return Err(Error::Shape(format!(
                "channel output exceeds the dimension cap {}",
                crate::tensor::MAX_TOTAL_DIM
            )));
        }
        Ok(MultipartiteState::from_parts(dims, rho_out))
    }
}

/// rho lives on (in_dim x m); apply sum_k (K (x) I_m) rho (K (x) I_m)^dag.
fn apply_kraus_front(rho: &CMatrix, kraus: &[CMatrix], m: usize) -> CMatrix {
    let c_in = kraus[0].ncols();
    let c_out = kraus[0].nrows();
    let n_in = c_in * m;
    let n_out = c_out * m;
    let mut out = CMatrix::zeros(n_out, n_out);
    let mut t1 = CMatrix::zeros(n_out, n_in);
    for k in kraus {
        t1.fill(cx(0.0, 0.0));
        for a in 0..c_out {
            for i in 0..c_in {
                let kai = k[(a, i)];
                if kai.norm_sqr() < 1e-60 {
                    continue;
                }
                for alpha in 0..m {
                    let row_out = a * m + alpha;
                    let row_in = i * m + alpha;
                    for col in 0..n_in {
                        t1[(row_out, col)] += kai * rho[(row_in, col)];
                    }
                }
            }
        }
        for b in 0..c_out {
            for j in 0..c_in {
                let kbj = k[(b, j)].conj();
                if kbj.norm_sqr() < 1e-60 {
                    continue;
                }
                for beta in 0..m {
                    let col_out = b * m + beta;
                    let col_in = j * m + beta;
                    for row in 0..n_out {
                        out[(row, col_out)] += t1[(row, col_in)] * kbj;
                    }
                }
            }
        }
    }
    out
}

/// Isometry V with V^dag V = I.
#[derive(Debug, Clone)]
pub struct Isometry {
    m: CMatrix,
}

impl Isometry {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() < m.ncols() {
            return Err(Error::Shape(
                "isometry must not shrink the space".into(),
            ));
        }
        let defect = (m.adjoint() * &m - identity(m.ncols())).norm();
        if defect > TOL_CPTP * (m.ncols() as f64).sqrt().max(1.0) {
            return Err(Error::Consistency(format!(
                "matrix is not an isometry (defect {defect:.3e})"
            )));
        }
        Ok(Self { m })
    }

    /// Skips the orthogonality check; callers must pass a genuine isometry,
    /// e.g. a QR-retracted matrix from the optimizer loop.
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        debug_assert!((m.adjoint() * &m - identity(m.ncols())).norm() < 1e-8);
        Self { m }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn in_dim(&self) -> usize {
        self.m.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_channel(&self) -> Channel {
        Channel {
            kraus: vec![self.m.clone()],
            in_dim: self.in_dim(),
            out_dim: self.out_dim(),
        }
    }

    /// Apply to a pure state on the listed targets; outputs replace them at
    /// the front, as in [`Channel::apply`].
    pub fn apply_pure(
        &self,
        s: &PureState,
        targets: &[&str],
        outputs: &[(String, usize)],
    ) -> Result<PureState> {
        let tp = s.positions(targets)?;
        let target_dim: usize = tp.iter().map(|&p| s.dims()[p].1).product();
        if target_dim != self.in_dim() {
            return Err(Error::Shape(format!(
                "targets have total dimension {target_dim}, isometry expects {}",
                self.in_dim()
            )));
        }
        let out_total: usize = outputs.iter().map(|(_, d)| d).product();
        if out_total != self.out_dim() {
            return Err(Error::Shape(format!(
                "outputs have total dimension {out_total}, isometry produces {}",
                self.out_dim()
            )));
        }
        let rest: Vec<&str> = s
            .labels()
            .into_iter()
            .filter(|l| !targets.contains(l))
            .collect();
        for (l, _) in outputs {
            if rest.contains(&l.as_str()) {
                return Err(Error::Label(format!("output label {l} already in use")));
            }
        }
        let mut order: Vec<&str> = targets.to_vec();
        order.extend_from_slice(&rest);
        let permuted = s.permuted(&order)?;
        let m = permuted.total_dim() / self.in_dim();
        let v = permuted.amplitudes();
        let mut out = CVector::zeros(self.out_dim() * m);
        for a in 0..self.out_dim() {
            for i in 0..self.in_dim() {
                let vai = self.m[(a, i)];
                if vai.norm_sqr() < 1e-60 {
                    continue;
                }
                for alpha in 0..m {
                    out[a * m + alpha] += vai * v[i * m + alpha];
                }
            }
        }
        let mut dims: Vec<(String, usize)> = outputs.to_vec();
        for l in &rest {
            dims.push((l.to_string(), s.dim_of(l)?));
        }
        if dims.iter().map(|(_, d)| d).product::<usize>() > crate::tensor::MAX_TOTAL_DIM {
            return Err(Error::Shape(format!(
                "isometry output exceeds the dimension cap {}",
                crate::tensor::MAX_TOTAL_DIM
            )));
        }
        Ok(PureState::from_parts(dims, out))
    }
}

/// Trace distance between Choi matrices; zero iff the channels are equal.
pub fn channel_distance(a: &Channel, b: &Channel) -> Result<f64> {
    if a.in_dim != b.in_dim || a.out_dim != b.out_dim {
        return Err(Error::Shape("channels have different shapes".into()));
    }
    Ok(trace_norm(&(a.choi() - b.choi())))
}

/// A forward channel on Eve's register together with its declared inverse.
#[derive(Debug, Clone)]
pub struct ReversiblePair {
    pub forward: Channel,
    pub inverse: Channel,
}

impl ReversiblePair {
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        let forward = Channel::from_unitary(u)?;
        let inverse = Channel::from_unitary(&u.adjoint())?;
        Ok(Self { forward, inverse })
    }

    /// Isometric embedding V with the inverse completed off the image by
    /// rerouting to |0><0|.
    pub fn from_isometry(v: &Isometry) -> Result<Self> {
        let forward = v.as_channel();
        let d_in = v.in_dim();
        let d_out = v.out_dim();
        let mut kraus = vec![v.matrix().adjoint()];
        let proj_off = identity(d_out) - v.matrix() * v.matrix().adjoint();
        let (vals, vecs) = hermitian_eig(&proj_off);
        for (r, &val) in vals.iter().enumerate() {
            if val > 0.5 {
                let u: CVector = vecs.column(r).into();
                kraus.push(ket_matrix(&basis(d_in, 0)) * bra_matrix(&u));
            }
        }
        let inverse = Channel::new(kraus)?;
        Ok(Self { forward, inverse })
    }

    /// Append a fixed ancilla state: rho -> rho (x) sigma.
    pub fn append(d: usize, sigma: &CMatrix) -> Result<Self> {
        let ds = sigma.nrows();
        let (vals, vecs) = hermitian_eig(sigma);
        let mut kraus = Vec::new();
        for (m, &v) in vals.iter().enumerate() {
            if v > 1e-15 {
                let w: CVector = vecs.column(m).into();
                kraus.push(kron(&identity(d), &ket_matrix(&w.scale(v.sqrt()))));
            }
        }
        let forward = Channel::new(kraus)?;
        let mut inv_kraus = Vec::new();
        for s in 0..ds {
            inv_kraus.push(kron(&identity(d), &bra_matrix(&basis(ds, s))));
        }
        let inverse = Channel::new(inv_kraus)?;
        Ok(Self { forward, inverse })
    }
}

#[derive(Debug, Clone)]
pub struct ReversibilityReport {
    /// Choi distance between inverse-after-forward and the identity.
    pub choi_residual: f64,
    /// Largest deviation from tau (x) sigma over the sampled states.
    pub state_residual: f64,
    /// The fixed environment state sigma extracted from the Stinespring
    /// dilation of the inverse.
    pub env_state: CMatrix,
    pub ok: bool,
}

/// Check that `pair` implements a reversible operation on Eve's register:
/// the inverse undoes the forward map, and the Stinespring dilation of the
/// inverse turns the forward map into an append of a fixed state.
pub fn verify_reversible(pair: &ReversiblePair) -> Result<ReversibilityReport> {
    let d = pair.forward.in_dim();
    if pair.inverse.out_dim() != d || pair.forward.out_dim() != pair.inverse.in_dim() {
        return Err(Error::Shape(
            "inverse shape does not match the forward channel".into(),
        ));
    }
    let round_trip = pair.inverse.compose(&pair.forward)?;
    let choi_residual = channel_distance(&round_trip, &Channel::identity_map(d))?;

    let w = pair.inverse.stinespring();
    let nk = pair.inverse.kraus.len();
    let probe = pair
        .forward
        .apply(
            &MultipartiteState::from_parts(
                vec![("in".into(), d)],
                crate::tensor::projector(&basis(d, 0)),
            ),
            &["in"],
            &[("out".into(), pair.forward.out_dim())],
        )?
        .fuse(&["out"], "out")?;
    let lifted = w
        .as_channel()
        .apply(&probe, &["out"], &[("sys".into(), d), ("env".into(), nk)])?;
    let env_state = lifted.partial_trace(&["env"])?.matrix().clone();

    let mut rng = ChaCha8Rng::seed_from_u64(0x7ec0_51a7);
    let mut state_residual = 0.0f64;
    for _ in 0..20 {
        let tau = random_density(d, d, &mut rng);
        let tau_state = MultipartiteState::from_parts(vec![("in".into(), d)], tau.clone());
        let pushed = pair.forward.apply(
            &tau_state,
            &["in"],
            &[("out".into(), pair.forward.out_dim())],
        )?;
        let lifted = w
            .as_channel()
            .apply(&pushed, &["out"], &[("sys".into(), d), ("env".into(), nk)])?;
        let expected = kron(&tau, &env_state);
        let resid = trace_norm(&(lifted.matrix() - expected));
        if resid > state_residual {
            state_residual = resid;
        }
    }
    let ok = choi_residual <= TOL_CHANNEL_EQ && state_residual <= TOL_REVERSIBLE;
    Ok(ReversibilityReport {
        choi_residual,
        state_residual,
        env_state,
        ok,
    })
}

/// Standard normal sample (Box-Muller).
pub(crate) fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Complex Ginibre matrix: independent standard complex Gaussian entries.
pub(crate) fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        cx(std_normal(rng), std_normal(rng)) * cx(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    })
}

/// Haar random isometry from in_dim to out_dim (QR with phase correction).
pub fn random_isometry<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Isometry {
    assert!(out_dim >= in_dim, "isometry must not shrink the space");
    let g = ginibre(out_dim, in_dim, rng);
    Isometry {
        m: orthonormalize(&g),
    }
}

pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    random_isometry(d, d, rng).m
}

/// Thin QR factor with the phase convention that makes the decomposition
/// unique (diagonal of R real positive), so retractions stay near the input.
pub(crate) fn orthonormalize(g: &CMatrix) -> CMatrix {
    let qr = g.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let rjj = r[(j, j)];
        if rjj.norm() > 1e-300 {
            let phase = rjj / cx(rjj.norm(), 0.0);
            for i in 0..q.nrows() {
                q[(i, j)] *= phase.conj();
            }
        }
    }
    q
}

/// Random rank-constrained density matrix (normalized Wishart).
pub fn random_density<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, rank.clamp(1, dim), rng);
    let w = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| w[(i, i)].re).sum();
    w.scale(1.0 / tr)
}

/// Haar random pure state vector.
pub fn random_pure<R: Rng>(dim: usize, rng: &mut R) -> CVector {
    let g = ginibre(dim, 1, rng);
    let col: CVector = g.column(0).into();
    let n = col.norm();
    col.unscale(n)
}

/// Random channel via a Haar Stinespring isometry with the given
/// environment dimension.
pub fn random_channel<R: Rng>(in_dim: usize, out_dim: usize, env_dim: usize, rng: &mut R) -> Channel {
    let v = random_isometry(in_dim, out_dim * env_dim, rng);
    let mut kraus = Vec::with_capacity(env_dim);
    for k in 0..env_dim {
        let mut op = CMatrix::zeros(out_dim, in_dim);
        for a in 0..out_dim {
            for b in 0..in_dim {
                op[(a, b)] = v.matrix()[(a * env_dim + k, b)];
            }
        }
        kraus.push(op);
    }
    Channel {
        kraus,
        in_dim,
        out_dim,
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ChannelFile {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<Vec<(f64, f64)>>,
}

pub(crate) fn channel_to_file(c: &Channel) -> ChannelFile {
    ChannelFile {
        in_dim: c.in_dim,
        out_dim: c.out_dim,
        kraus: c
            .kraus
            .iter()
            .map(|k| {
                let mut flat = Vec::with_capacity(c.in_dim * c.out_dim);
                for i in 0..c.out_dim {
                    for j in 0..c.in_dim {
                        flat.push((k[(i, j)].re, k[(i, j)].im));
                    }
                }
                flat
            })
            .collect(),
    }
}

pub(crate) fn channel_from_file(file: &ChannelFile) -> Result<Channel> {
    let mut kraus = Vec::with_capacity(file.kraus.len());
    for flat in &file.kraus {
        if flat.len() != file.in_dim * file.out_dim {
            return Err(Error::Shape(format!(
                "Kraus operator has {} entries, expected {}",
                flat.len(),
                file.in_dim * file.out_dim
            )));
        }
        let mut k = CMatrix::zeros(file.out_dim, file.in_dim);
        for i in 0..file.out_dim {
            for j in 0..file.in_dim {
                let (re, im) = flat[i * file.in_dim + j];
                k[(i, j)] = cx(re, im);
            }
        }
        kraus.push(k);
    }
    Channel::new(kraus)
}

pub fn channel_to_json(c: &Channel) -> String {
    serde_json::to_string_pretty(&channel_to_file(c)).expect("channel serialization cannot fail")
}

pub fn channel_from_json(text: &str) -> Result<Channel> {
    let file: ChannelFile = serde_json::from_str(text)?;
    channel_from_file(&file)
}

pub fn save_channel(c: &Channel, path: &Path) -> Result<()> {
    std::fs::write(path, channel_to_json(c))?;
    Ok(())
}

pub fn load_channel(path: &Path) -> Result<Channel> {
    let text = std::fs::read_to_string(path)?;
    channel_from_json(&text)
}
