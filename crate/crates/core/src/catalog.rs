//! Named example states and the Pauli sign identities behind the conversion protocols.
//!
//! All states carry explicit labels, A and B for the separated parties and E
//! (or EA, EB) for the correlating register. Expected monotone values are
//! attached to the seven reference states so suites can compare against them.

use crate::error::{Error, Result};
use crate::tensor::{basis, cx, identity, kron, outer, CMatrix, CVector, MultipartiteState, PureState};
use num_complex::Complex64;
use std::f64::consts::PI;

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(0.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 0.0), cx(-1.0, 0.0)])
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[cx(s, 0.0), cx(s, 0.0), cx(s, 0.0), cx(-s, 0.0)])
}

/// sigma_x^k sigma_z^l for k, l in {0, 1}.
pub fn pauli_xz(k: u8, l: u8) -> CMatrix {
    let mut m = identity(2);
    if l & 1 == 1 {
        m = pauli_z() * m;
    }
    if k & 1 == 1 {
        m = pauli_x() * m;
    }
    m
}

/// Cyclic shift |j> -> |j+1 mod d>.
pub fn shift_matrix(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        m[((j + 1) % d, j)] = cx(1.0, 0.0);
    }
    m
}

/// Phase gradient diag(omega^j) with omega = exp(2 pi i / d).
pub fn clock_matrix(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        let t = 2.0 * PI * (j as f64) / (d as f64);
        m[(j, j)] = Complex64::from_polar(1.0, t);
    }
    m
}

/// Discrete Fourier transform matrix, F[j][k] = omega^{jk} / sqrt(d).
pub fn fourier_matrix(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    let s = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        for k in 0..d {
            let t = 2.0 * PI * ((j * k) % d) as f64 / (d as f64);
            m[(j, k)] = Complex64::from_polar(s, t);
        }
    }
    m
}

/// n-fold tensor power of the Hadamard gate, acting on dimension 2^n.
pub fn hadamard_power(n: u32) -> CMatrix {
    let mut m = identity(1);
    for _ in 0..n {
        m = kron(&m, &hadamard());
    }
    m
}

/// Maximally entangled pair (1/sqrt(d)) sum_j |jj> twisted by shift^p clock^q on
/// the first slot, as a vector on C^d tensor C^d.
pub fn bell_vec_d(d: usize, p: usize, q: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let s = 1.0 / (d as f64).sqrt();
    for j in 0..d {
        let t = 2.0 * PI * ((q * j) % d) as f64 / (d as f64);
        let row = ((j + p) % d) * d + j;
        v[row] = Complex64::from_polar(s, t);
    }
    v
}

pub fn bell_vec(p: u8, q: u8) -> CVector {
    bell_vec_d(2, p as usize, q as usize)
}

/// Two-qubit Bell state as a labeled pure state on A, B.
pub fn bell(p: u8, q: u8) -> Result<PureState> {
    if p > 1 || q > 1 {
        return Err(Error::Input(format!("bell index ({p},{q}) out of range")));
    }
    PureState::new(
        vec![("A".into(), 2), ("B".into(), 2)],
        bell_vec(p, q),
    )
}

/// Unitary on C^{d^2} sending |p*d+q> to the generalized Bell vector with
/// indices (p, q).
pub fn bell_basis_unitary(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d, d * d);
    for p in 0..d {
        for q in 0..d {
            m.set_column(p * d + q, &bell_vec_d(d, p, q));
        }
    }
    m
}

/// Expected monotone values for a reference state, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneRow {
    pub i_m: f64,
    pub i_down: f64,
    pub i_down_star: f64,
    pub i_sq: f64,
    pub j_down: f64,
    pub j_down_star: f64,
}

#[derive(Debug, Clone)]
pub struct NamedState {
    pub name: String,
    pub state: MultipartiteState,
    pub expected_monotones: Option<MonotoneRow>,
}

/// Names accepted by `make`. Parameterized entries take a suffix after a
/// colon, e.g. "phi-i-d:3" or "rho-bar:0.25".
pub fn list() -> Vec<String> {
    [
        "phi-i",
        "phi-ii",
        "phi-iii",
        "psi-i",
        "psi-i-star",
        "psi-i-prime",
        "psi-ii",
        "psi-ii-star",
        "phi-pair",
        "phi-i-d:<d>",
        "rho-bar:<lambda>",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn row(i_m: f64, i_down: f64, i_down_star: f64, i_sq: f64, j_down: f64, j_down_star: f64) -> MonotoneRow {
    MonotoneRow { i_m, i_down, i_down_star, i_sq, j_down, j_down_star }
}

fn dims_abe(de: usize) -> Vec<(String, usize)> {
    vec![("A".into(), 2), ("B".into(), 2), ("E".into(), de)]
}

fn proj_of(vec: &CVector) -> CMatrix {
    outer(vec, vec)
}

fn flag(dim: usize, k: usize) -> CMatrix {
    let e = basis(dim, k);
    outer(&e, &e)
}

fn phi_i() -> Result<MultipartiteState> {
    let v = kron_vec(&bell_vec(0, 0), &basis(2, 0));
    MultipartiteState::new(dims_abe(2), proj_of(&v))
}

fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

fn phi_ii() -> Result<MultipartiteState> {
    let m = kron(&proj_of(&bell_vec(0, 0)), &flag(2, 0)).scale(0.5)
        + kron(&proj_of(&bell_vec(0, 1)), &flag(2, 1)).scale(0.5);
    MultipartiteState::new(dims_abe(2), m)
}

fn phi_iii() -> Result<MultipartiteState> {
    let mut m = CMatrix::zeros(16, 16);
    for p in 0..2u8 {
        for q in 0..2u8 {
            let idx = (p as usize) * 2 + q as usize;
            m += kron(&proj_of(&bell_vec(p, q)), &flag(4, idx)).scale(0.25);
        }
    }
    MultipartiteState::new(dims_abe(4), m)
}

fn psi_i() -> Result<MultipartiteState> {
    let mut v = CVector::zeros(8);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    v[0] = cx(s, 0.0);
    v[7] = cx(s, 0.0);
    MultipartiteState::new(dims_abe(2), proj_of(&v))
}

fn psi_i_star() -> Result<MultipartiteState> {
    let ab = (flag(4, 0) + flag(4, 3)).scale(0.5);
    MultipartiteState::new(dims_abe(2), kron(&ab, &flag(2, 0)))
}

fn psi_i_prime() -> Result<MultipartiteState> {
    let m = (flag(8, 0) + flag(8, 7)).scale(0.5);
    MultipartiteState::new(dims_abe(2), m)
}

fn psi_ii() -> Result<MultipartiteState> {
    // rank two: one pure component per flip index p, with the E register
    // holding the flag p in its leading qubit and the phase bit q behind it.
    let mut m = CMatrix::zeros(16, 16);
    for p in 0..2u8 {
        let mut comp = CVector::zeros(16);
        for q in 0..2u8 {
            let e = basis(4, (p as usize) * 2 + q as usize);
            comp += kron_vec(&bell_vec(p, q), &e).scale(std::f64::consts::FRAC_1_SQRT_2);
        }
        m += proj_of(&comp).scale(0.5);
    }
    MultipartiteState::new(dims_abe(4), m)
}

fn psi_ii_star() -> Result<MultipartiteState> {
    let even = (flag(4, 0) + flag(4, 3)).scale(0.25);
    let odd = (flag(4, 1) + flag(4, 2)).scale(0.25);
    let m = kron(&even, &flag(2, 0)) + kron(&odd, &flag(2, 1));
    MultipartiteState::new(dims_abe(2), m)
}

fn phi_pair() -> Result<MultipartiteState> {
    let a = PureState::new(vec![("A".into(), 2), ("EA".into(), 2)], bell_vec(0, 0))?;
    let b = PureState::new(vec![("B".into(), 2), ("EB".into(), 2)], bell_vec(0, 0))?;
    Ok(a.tensor(&b)?.permuted(&["A", "B", "EA", "EB"])?.to_density())
}

fn phi_i_d(d: usize) -> Result<MultipartiteState> {
    if d < 2 {
        return Err(Error::Input(format!("phi-i-d needs dimension >= 2, got {d}")));
    }
    let v = kron_vec(&bell_vec_d(d, 0, 0), &basis(2, 0));
    MultipartiteState::new(
        vec![("A".into(), d), ("B".into(), d), ("E".into(), 2)],
        proj_of(&v),
    )
}

fn rho_bar(lambda: f64) -> Result<MultipartiteState> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Input(format!("rho-bar weight {lambda} outside [0, 1]")));
    }
    let ab = flag(4, 0).scale(lambda) + flag(4, 3).scale(1.0 - lambda);
    MultipartiteState::new(dims_abe(2), kron(&ab, &flag(2, 0)))
}

pub fn make(name: &str) -> Result<NamedState> {
    let (base, param) = match name.split_once(':') {
        Some((b, p)) => (b, Some(p)),
        None => (name, None),
    };
    if param.is_some() && !matches!(base, "phi-i-d" | "rho-bar") {
        return Err(Error::Input(format!("state {base} takes no parameter")));
    }
    let (state, expected) = match base {
        "phi-i" => (phi_i()?, Some(row(2.0, 2.0, 2.0, 2.0, 2.0, 2.0))),
        "phi-ii" => (phi_ii()?, Some(row(2.0, 1.0, 1.0, 0.0, 2.0, 2.0))),
        "phi-iii" => (phi_iii()?, Some(row(2.0, 0.0, 0.0, 0.0, 0.0, 0.0))),
        "psi-i" => (psi_i()?, Some(row(1.0, 0.0, 1.0, 0.0, 0.0, 2.0))),
        "psi-i-star" => (psi_i_star()?, Some(row(1.0, 1.0, 0.0, 0.0, 2.0, 0.0))),
        "psi-i-prime" => (psi_i_prime()?, None),
        "psi-ii" => (psi_ii()?, Some(row(1.0, 0.0, 0.0, 0.0, 0.0, 0.0))),
        "psi-ii-star" => (psi_ii_star()?, Some(row(1.0, 0.0, 0.0, 0.0, 0.0, 0.0))),
        "phi-pair" => (phi_pair()?, None),
        "phi-i-d" => {
            let d: usize = param
                .ok_or_else(|| Error::Input("phi-i-d needs a dimension, e.g. phi-i-d:3".into()))?
                .parse()
                .map_err(|_| Error::Input(format!("bad dimension in {name}")))?;
            (phi_i_d(d)?, None)
        }
        "rho-bar" => {
            let lambda: f64 = param
                .ok_or_else(|| Error::Input("rho-bar needs a weight, e.g. rho-bar:0.5".into()))?
                .parse()
                .map_err(|_| Error::Input(format!("bad weight in {name}")))?;
            (rho_bar(lambda)?, None)
        }
        other => return Err(Error::Input(format!("unknown state name {other}"))),
    };
    Ok(NamedState { name: name.to_string(), state, expected_monotones: expected })
}

#[derive(Debug, Clone)]
pub struct IdentityFamily {
    pub name: &'static str,
    pub tuples: usize,
    pub failures: usize,
    pub max_defect: f64,
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub families: Vec<IdentityFamily>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.families.iter().all(|f| f.failures == 0)
    }

    pub fn total_tuples(&self) -> usize {
        self.families.iter().map(|f| f.tuples).sum()
    }
}

const TOL_IDENTITY: f64 = 1e-12;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sign(bit: u8) -> f64 {
    if bit & 1 == 1 { -1.0 } else { 1.0 }
}

/// Checks the sign rules obeyed by sigma_x^k sigma_z^l words and Bell vectors,
/// each as an exact matrix or vector equality.
pub fn pauli_identity_suite() -> IdentityReport {
    let mut families = Vec::new();

    // Word reordering: moving sigma_x^p sigma_z^q through sigma_x^k sigma_z^l
    // costs (-1)^{lp + kq}.
    {
        let mut fails = 0;
        let mut worst = 0.0f64;
        for k in 0..2u8 {
            for l in 0..2u8 {
                for p in 0..2u8 {
                    for q in 0..2u8 {
                        let lhs = pauli_xz(k, l) * pauli_xz(p, q);
                        let rhs = (pauli_xz(p, q) * pauli_xz(k, l)).scale(sign(l & p ^ k & q));
                        let d = max_abs(&(lhs - rhs));
                        worst = worst.max(d);
                        if d > TOL_IDENTITY {
                            fails += 1;
                        }
                    }
                }
            }
        }
        families.push(IdentityFamily { name: "word-reorder", tuples: 16, failures: fails, max_defect: worst });
    }

    // Two-sided Pauli action on a Bell vector collapses to a one-sided action
    // on a shifted Bell index, up to a sign.
    {
        let mut fails = 0;
        let mut worst = 0.0f64;
        for k in 0..2u8 {
            for l in 0..2u8 {
                for m in 0..2u8 {
                    for n in 0..2u8 {
                        for p in 0..2u8 {
                            for q in 0..2u8 {
                                let op = kron(&pauli_xz(k, l), &pauli_xz(m, n));
                                let lhs = &op * bell_vec(p, q);
                                let s = sign(l & p ^ k & q ^ m & (l ^ n));
                                let right_op = kron(&pauli_xz(p, q), &identity(2));
                                let rhs = (&right_op * bell_vec(k ^ m, l ^ n)).scale(s);
                                let d = max_abs_vec(&(lhs - rhs));
                                worst = worst.max(d);
                                if d > TOL_IDENTITY {
                                    fails += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        families.push(IdentityFamily { name: "bell-transport", tuples: 64, failures: fails, max_defect: worst });
    }

    // Equal Pauli words on both slots leave every Bell vector fixed up to sign.
    {
        let mut fails = 0;
        let mut worst = 0.0f64;
        for k in 0..2u8 {
            for l in 0..2u8 {
                for p in 0..2u8 {
                    for q in 0..2u8 {
                        let op = kron(&pauli_xz(k, l), &pauli_xz(k, l));
                        let lhs = &op * bell_vec(p, q);
                        let rhs = bell_vec(p, q).scale(sign(l & p ^ k & q));
                        let d = max_abs_vec(&(lhs - rhs));
                        worst = worst.max(d);
                        if d > TOL_IDENTITY {
                            fails += 1;
                        }
                    }
                }
            }
        }
        families.push(IdentityFamily { name: "bell-eigensign", tuples: 16, failures: fails, max_defect: worst });
    }

    // Twisted pair of Bell states, reordered to (A, B, EA, EB), expands over
    // matched Bell vectors with alternating signs.
    let paired = |k: u8, l: u8| -> PureState {
        let a = PureState::new(vec![("A".into(), 2), ("EA".into(), 2)], bell_vec(k, l)).unwrap();
        let b = PureState::new(vec![("B".into(), 2), ("EB".into(), 2)], bell_vec(k, l)).unwrap();
        a.tensor(&b).unwrap().permuted(&["A", "B", "EA", "EB"]).unwrap()
    };
    let schmidt_sum = |coeff: &dyn Fn(u8, u8) -> f64| -> CVector {
        let mut v = CVector::zeros(16);
        for p in 0..2u8 {
            for q in 0..2u8 {
                v += kron_vec(&bell_vec(p, q), &bell_vec(p, q)).scale(0.5 * coeff(p, q));
            }
        }
        v
    };
    {
        let mut fails = 0;
        let mut worst = 0.0f64;
        for k in 0..2u8 {
            for l in 0..2u8 {
                let lhs = paired(k, l);
                let rhs = schmidt_sum(&|p, q| sign(l & p ^ k & q));
                let d = max_abs_vec(&(lhs.amplitudes() - rhs));
                worst = worst.max(d);
                if d > TOL_IDENTITY {
                    fails += 1;
                }
            }
        }
        families.push(IdentityFamily { name: "pair-schmidt", tuples: 4, failures: fails, max_defect: worst });
    }

    // Independent Pauli words on A and B, compensated on EA only, reduce to a
    // single signed Schmidt expansion.
    {
        let mut fails = 0;
        let mut worst = 0.0f64;
        let base = paired(0, 0);
        for k in 0..2u8 {
            for l in 0..2u8 {
                for m in 0..2u8 {
                    for n in 0..2u8 {
                        let op = kron(
                            &kron(&pauli_xz(k, l), &pauli_xz(m, n)),
                            &kron(&pauli_xz(k ^ m, l ^ n), &identity(2)),
                        );
                        let lhs = &op * base.amplitudes();
                        let rhs = schmidt_sum(&|p, q| sign(n & p ^ m & q ^ n & (k ^ m)));
                        let d = max_abs_vec(&(lhs - rhs));
                        worst = worst.max(d);
                        if d > TOL_IDENTITY {
                            fails += 1;
                        }
                    }
                }
            }
        }
        families.push(IdentityFamily { name: "pair-transport", tuples: 16, failures: fails, max_defect: worst });
    }

    IdentityReport { families }
}
