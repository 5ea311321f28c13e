//! Entropic quantities, all in bits (base-2 logarithms).

use crate::error::Result;
use crate::tensor::{hermitian_eig, CMatrix, MultipartiteState, PureState};

/// Eigenvalues at or below this are treated as zero inside logarithms.
pub const TOL_CLIP: f64 = 1e-12;
/// Overlap with the kernel of the reference state above which a relative
/// entropy is reported as infinite.
pub const TOL_SUPPORT: f64 = 1e-10;

/// Von Neumann entropy of a density matrix.
pub fn matrix_entropy(rho: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eig(rho);
    let mut acc = 0.0;
    for &v in &vals {
        if v > TOL_CLIP {
            acc -= v * v.log2();
        }
    }
    acc
}

pub fn von_neumann(s: &MultipartiteState) -> f64 {
    matrix_entropy(s.matrix())
}

/// Entropy of the reduced state on the listed labels.
pub fn entropy_of(s: &MultipartiteState, labels: &[&str]) -> Result<f64> {
    Ok(matrix_entropy(s.partial_trace(labels)?.matrix()))
}

/// Entropy of a bipartition of a pure state, computed on the smaller side.
pub fn pure_entropy_of(psi: &PureState, labels: &[&str]) -> Result<f64> {
    let sel = psi.positions(labels)?;
    let dims = psi.dim_list();
    let side: usize = sel.iter().map(|&p| dims[p]).product();
    let total = psi.total_dim();
    if side * side <= total {
        Ok(matrix_entropy(&psi.gram(labels)?))
    } else {
        let comp = psi.complement_positions(&sel);
        let labels_all = psi.labels();
        let comp_labels: Vec<&str> = comp.iter().map(|&p| labels_all[p]).collect();
        Ok(matrix_entropy(&psi.gram(&comp_labels)?))
    }
}

fn concat<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<&'a str> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// Conditional quantum mutual information I(A:B|E) =
/// S(AE) + S(BE) - S(ABE) - S(E).
pub fn cqmi(s: &MultipartiteState, a: &[&str], b: &[&str], e: &[&str]) -> Result<f64> {
    let s_ae = entropy_of(s, &concat(a, e))?;
    let s_be = entropy_of(s, &concat(b, e))?;
    let s_abe = entropy_of(s, &concat(&concat(a, b), e))?;
    let s_e = if e.is_empty() {
        0.0
    } else {
        entropy_of(s, e)?
    };
    Ok(s_ae + s_be - s_abe - s_e)
}

/// CQMI evaluated on a global pure state; every marginal is taken from the
/// Gram matrix of the smaller side of the corresponding bipartition.
pub fn pure_cqmi(psi: &PureState, a: &[&str], b: &[&str], e: &[&str]) -> Result<f64> {
    let s_ae = pure_entropy_of(psi, &concat(a, e))?;
    let s_be = pure_entropy_of(psi, &concat(b, e))?;
    let s_abe = pure_entropy_of(psi, &concat(&concat(a, b), e))?;
    let s_e = if e.is_empty() {
        0.0
    } else {
        pure_entropy_of(psi, e)?
    };
    Ok(s_ae + s_be - s_abe - s_e)
}

/// Mutual information I(A:B) = S(A) + S(B) - S(AB).
pub fn mutual_info(s: &MultipartiteState, a: &[&str], b: &[&str]) -> Result<f64> {
    Ok(entropy_of(s, a)? + entropy_of(s, b)? - entropy_of(s, &concat(a, b))?)
}

/// Quantum relative entropy D(rho || sigma) in bits; +infinity when rho has
/// weight outside the support of sigma.
pub fn relative_entropy(rho: &CMatrix, sigma: &CMatrix) -> f64 {
    let (svals, svecs) = hermitian_eig(sigma);
    let n = rho.nrows();
    let mut kernel_weight = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        let col = svecs.column(i);
        // <v_i| rho |v_i>
        let mut w = 0.0;
        for r in 0..n {
            let mut acc = crate::tensor::cx(0.0, 0.0);
            for c in 0..n {
                acc += rho[(r, c)] * col[c];
            }
            w += (col[r].conj() * acc).re;
        }
        let w = w.max(0.0);
        if svals[i] > TOL_SUPPORT {
            cross += w * svals[i].log2();
        } else {
            kernel_weight += w;
        }
    }
    if kernel_weight > TOL_SUPPORT {
        return f64::INFINITY;
    }
    -matrix_entropy(rho) - cross
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{basis, cx, projector, CVector, MultipartiteState};
    use approx::assert_abs_diff_eq;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ghz() -> CVector {
        let mut v = CVector::zeros(8);
        v[0] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.);
        v[7] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.);
        v
    }

    #[test]
    fn binary_entropy_of_one_quarter() {
        let mut rho = CMatrix::zeros(2, 2);
        rho[(0, 0)] = cx(0.25, 0.);
        rho[(1, 1)] = cx(0.75, 0.);
        // h(1/4) = 2 - (3/4) log2 3
        assert_abs_diff_eq!(matrix_entropy(&rho), 0.8112781244591328, epsilon = 1e-14);
    }

    #[test]
    fn maximally_mixed_entropy_is_log_dim() {
        for d in [2usize, 3, 5, 8] {
            let pi = CMatrix::identity(d, d).scale(1.0 / d as f64);
            assert_abs_diff_eq!(matrix_entropy(&pi), (d as f64).log2(), epsilon = 1e-12);
        }
    }

    #[test]
    fn ghz_conditional_mutual_information_is_one() {
        let s = MultipartiteState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 2)],
            projector(&ghz()),
        )
        .unwrap();
        assert_abs_diff_eq!(
            cqmi(&s, &["A"], &["B"], &["E"]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // Unconditionally the correlation looks stronger.
        assert_abs_diff_eq!(
            mutual_info(&s, &["A"], &["B"]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            cqmi(&s, &["A"], &["B"], &[]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn bell_pair_with_spectator_env() {
        let mut bell = CVector::zeros(4);
        bell[0] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.);
        bell[3] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.);
        let v = bell.kronecker(&basis(2, 0));
        let s = MultipartiteState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 2)],
            projector(&v),
        )
        .unwrap();
        assert_abs_diff_eq!(
            cqmi(&s, &["A"], &["B"], &["E"]).unwrap(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn relative_entropy_oracles() {
        let zero = projector(&basis(2, 0));
        let pi = CMatrix::identity(2, 2).scale(0.5);
        assert_abs_diff_eq!(relative_entropy(&zero, &pi), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(relative_entropy(&pi, &pi), 0.0, epsilon = 1e-12);
        assert!(relative_entropy(&pi, &zero).is_infinite());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = crate::channels::random_density(3, 3, &mut rng);
        let sigma = crate::channels::random_density(3, 3, &mut rng);
        // Klein inequality.
        assert!(relative_entropy(&rho, &sigma) > 0.0);
    }

    #[test]
    fn pure_route_matches_density_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let amps = crate::channels::random_pure(24, &mut rng);
        let dims = vec![
            ("A".into(), 2),
            ("B".into(), 3),
            ("E".into(), 2),
            ("F".into(), 2),
        ];
        let psi = PureState::new(dims.clone(), amps.clone()).unwrap();
        let dens = MultipartiteState::new(dims, projector(&amps)).unwrap();
        let fast = pure_cqmi(&psi, &["A"], &["B", "F"], &["E"]).unwrap();
        let slow = cqmi(&dens, &["A"], &["B", "F"], &["E"]).unwrap();
        assert_abs_diff_eq!(fast, slow, epsilon = 1e-10);
        let se_fast = pure_entropy_of(&psi, &["B", "E", "F"]).unwrap();
        let se_slow = entropy_of(&dens, &["B", "E", "F"]).unwrap();
        assert_abs_diff_eq!(se_fast, se_slow, epsilon = 1e-10);
    }
}
