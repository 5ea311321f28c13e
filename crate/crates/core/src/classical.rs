//! Classical analogue of the tripartite theory: joint distributions on
//! three finite alphabets, Shannon conditional mutual information, the
//! intrinsic information with its stochastic-map witness, and the
//! one-time-pad generation protocol.

use crate::error::{Error, Result};
use crate::optimize::rng_for;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

const SUM_TOL: f64 = 1e-12;

/// Joint distribution p(x, y, z) on alphabets of sizes nx, ny, nz, stored
/// flat with z fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDist {
    nx: usize,
    ny: usize,
    nz: usize,
    p: Vec<f64>,
}

impl ClassicalDist {
    pub fn new(nx: usize, ny: usize, nz: usize, p: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Shape("alphabet sizes must be positive".into()));
        }
        if p.len() != nx * ny * nz {
            return Err(Error::Shape(format!(
                "table has {} entries for alphabets {}x{}x{}",
                p.len(),
                nx,
                ny,
                nz
            )));
        }
        if p.iter().any(|&v| !v.is_finite() || v < -SUM_TOL) {
            return Err(Error::Input("probabilities must be nonnegative".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Input(format!(
                "probabilities sum to {total} instead of 1"
            )));
        }
        Ok(Self { nx, ny, nz, p })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn prob(&self, x: usize, y: usize, z: usize) -> f64 {
        self.p[(x * self.ny + y) * self.nz + z]
    }

    pub fn table(&self) -> &[f64] {
        &self.p
    }

    /// Marginal over Z, as a table with y fastest.
    pub fn marginal_xy(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nx * self.ny];
        for x in 0..self.nx {
            for y in 0..self.ny {
                for z in 0..self.nz {
                    out[x * self.ny + y] += self.prob(x, y, z);
                }
            }
        }
        out
    }
}

fn shannon_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    let mut h = 0.0;
    for v in p {
        if v > 0.0 {
            h -= v * v.log2();
        }
    }
    h
}

/// Shannon conditional mutual information I(X:Y|Z) in bits.
pub fn classical_cmi(p: &ClassicalDist) -> f64 {
    let (nx, ny, nz) = (p.nx, p.ny, p.nz);
    let mut xz = vec![0.0; nx * nz];
    let mut yz = vec![0.0; ny * nz];
    let mut zm = vec![0.0; nz];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let v = p.prob(x, y, z);
                xz[x * nz + z] += v;
                yz[y * nz + z] += v;
                zm[z] += v;
            }
        }
    }
    let h = shannon_bits(xz) + shannon_bits(yz)
        - shannon_bits(p.p.iter().copied())
        - shannon_bits(zm);
    h.max(0.0)
}

pub fn classical_is_markov(p: &ClassicalDist, tol: f64) -> bool {
    classical_cmi(p) <= tol
}

/// Conditional table r(z_out | z_in), column stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMap {
    in_dim: usize,
    out_dim: usize,
    r: Vec<f64>,
}

impl StochasticMap {
    pub fn new(in_dim: usize, out_dim: usize, r: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Shape("alphabet sizes must be positive".into()));
        }
        if r.len() != in_dim * out_dim {
            return Err(Error::Shape(format!(
                "table has {} entries for a {out_dim}x{in_dim} map",
                r.len()
            )));
        }
        if r.iter().any(|&v| !v.is_finite() || v < -SUM_TOL) {
            return Err(Error::Input("transition weights must be nonnegative".into()));
        }
        for z in 0..in_dim {
            let col: f64 = (0..out_dim).map(|zp| r[zp * in_dim + z]).sum();
            if (col - 1.0).abs() > SUM_TOL {
                return Err(Error::Input(format!(
                    "column {z} sums to {col} instead of 1"
                )));
            }
        }
        Ok(Self { in_dim, out_dim, r })
    }

    pub fn identity(n: usize) -> Self {
        let mut r = vec![0.0; n * n];
        for z in 0..n {
            r[z * n + z] = 1.0;
        }
        Self {
            in_dim: n,
            out_dim: n,
            r,
        }
    }

    /// Map every input to the single output symbol 0.
    pub fn erase(n: usize) -> Self {
        Self {
            in_dim: n,
            out_dim: 1,
            r: vec![1.0; n],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weight(&self, z_out: usize, z_in: usize) -> f64 {
        self.r[z_out * self.in_dim + z_in]
    }

    fn apply_table(&self, p: &[f64], block: usize) -> Vec<f64> {
        // p is grouped as block rows, each of length in_dim
        let mut out = vec![0.0; block * self.out_dim];
        for b in 0..block {
            for z in 0..self.in_dim {
                let v = p[b * self.in_dim + z];
                if v == 0.0 {
                    continue;
                }
                for zp in 0..self.out_dim {
                    out[b * self.out_dim + zp] += self.weight(zp, z) * v;
                }
            }
        }
        out
    }

    /// Process the Z register.
    pub fn apply_z(&self, p: &ClassicalDist) -> Result<ClassicalDist> {
        if self.in_dim != p.nz {
            return Err(Error::Shape(format!(
                "map expects alphabet {}, distribution has {}",
                self.in_dim, p.nz
            )));
        }
        let table = self.apply_table(&p.p, p.nx * p.ny);
        ClassicalDist::new(p.nx, p.ny, self.out_dim, renormalize(table))
    }

    /// Process the X register.
    pub fn apply_x(&self, p: &ClassicalDist) -> Result<ClassicalDist> {
        if self.in_dim != p.nx {
            return Err(Error::Shape(format!(
                "map expects alphabet {}, distribution has {}",
                self.in_dim, p.nx
            )));
        }
        let mut table = vec![0.0; self.out_dim * p.ny * p.nz];
        for x in 0..p.nx {
            for y in 0..p.ny {
                for z in 0..p.nz {
                    let v = p.prob(x, y, z);
                    if v == 0.0 {
                        continue;
                    }
                    for xp in 0..self.out_dim {
                        table[(xp * p.ny + y) * p.nz + z] += self.weight(xp, x) * v;
                    }
                }
            }
        }
        ClassicalDist::new(self.out_dim, p.ny, p.nz, renormalize(table))
    }

    /// Process the Y register.
    pub fn apply_y(&self, p: &ClassicalDist) -> Result<ClassicalDist> {
        if self.in_dim != p.ny {
            return Err(Error::Shape(format!(
                "map expects alphabet {}, distribution has {}",
                self.in_dim, p.ny
            )));
        }
        let mut table = vec![0.0; p.nx * self.out_dim * p.nz];
        for x in 0..p.nx {
            for y in 0..p.ny {
                for z in 0..p.nz {
                    let v = p.prob(x, y, z);
                    if v == 0.0 {
                        continue;
                    }
                    for yp in 0..self.out_dim {
                        table[(x * self.out_dim + yp) * p.nz + z] += self.weight(yp, y) * v;
                    }
                }
            }
        }
        ClassicalDist::new(p.nx, self.out_dim, p.nz, renormalize(table))
    }
}

/// Clip tiny negative rounding noise and rescale to unit mass.
fn renormalize(mut v: Vec<f64>) -> Vec<f64> {
    for e in v.iter_mut() {
        if *e < 0.0 {
            *e = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for e in v.iter_mut() {
            *e /= total;
        }
    }
    v
}

/// Residual of the exact-recovery condition for a pair of stochastic maps:
/// the composition inverse after forward must be the identity.
pub fn stochastic_reversibility_residual(
    forward: &StochasticMap,
    inverse: &StochasticMap,
) -> Result<f64> {
    if inverse.in_dim != forward.out_dim || inverse.out_dim != forward.in_dim {
        return Err(Error::Shape(
            "inverse map dimensions do not mirror the forward map".into(),
        ));
    }
    let n = forward.in_dim;
    let mut worst: f64 = 0.0;
    for z1 in 0..n {
        for z2 in 0..n {
            let mut acc = 0.0;
            for zp in 0..forward.out_dim {
                acc += inverse.weight(z2, zp) * forward.weight(zp, z1);
            }
            let want = if z1 == z2 { 1.0 } else { 0.0 };
            worst = worst.max((acc - want).abs());
        }
    }
    Ok(worst)
}

/// Search settings for the intrinsic information.
#[derive(Debug, Clone)]
pub struct IntrinsicConfig {
    /// Output alphabet for the searched map. Defaults to the input
    /// alphabet size, which is large enough for the minimum here and
    /// keeps the search space bounded. Raise it to double-check a value.
    pub out_cap: Option<usize>,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for IntrinsicConfig {
    fn default() -> Self {
        Self {
            out_cap: None,
            restarts: 24,
            max_iters: 400,
            seed: 0,
        }
    }
}

fn softmax_columns(logits: &[f64], out_dim: usize, in_dim: usize) -> Vec<f64> {
    let mut r = vec![0.0; out_dim * in_dim];
    for z in 0..in_dim {
        let mut m = f64::NEG_INFINITY;
        for zp in 0..out_dim {
            m = m.max(logits[zp * in_dim + z]);
        }
        let mut total = 0.0;
        for zp in 0..out_dim {
            let e = (logits[zp * in_dim + z] - m).exp();
            r[zp * in_dim + z] = e;
            total += e;
        }
        for zp in 0..out_dim {
            r[zp * in_dim + z] /= total;
        }
    }
    r
}

/// Heuristic minimum of I(X:Y|Z') over stochastic processing of Z, with
/// the achieving map as a witness. Always at most the plain conditional
/// mutual information because the identity map is among the candidates.
pub fn classical_intrinsic(
    p: &ClassicalDist,
    cfg: &IntrinsicConfig,
) -> Result<(f64, StochasticMap)> {
    let nz = p.nz;
    let out = cfg.out_cap.unwrap_or(nz).max(1);
    let score = |map: &StochasticMap| -> Result<f64> { Ok(classical_cmi(&map.apply_z(p)?)) };

    let mut candidates: Vec<StochasticMap> = Vec::new();
    if out >= nz {
        let mut r = vec![0.0; out * nz];
        for z in 0..nz {
            r[z * nz + z] = 1.0;
        }
        candidates.push(StochasticMap::new(nz, out, r)?);
    } else {
        // fold the tail symbols onto the last kept one
        let mut r = vec![0.0; out * nz];
        for z in 0..nz {
            r[z.min(out - 1) * nz + z] = 1.0;
        }
        candidates.push(StochasticMap::new(nz, out, r)?);
    }
    let mut erase = vec![0.0; out * nz];
    for z in 0..nz {
        erase[z] = 1.0;
    }
    candidates.push(StochasticMap::new(nz, out, erase)?);

    let mut best_val = f64::INFINITY;
    let mut best_map = candidates[0].clone();
    for c in candidates {
        let v = score(&c)?;
        if v < best_val {
            best_val = v;
            best_map = c;
        }
    }

    for idx in 0..cfg.restarts {
        let mut rng = rng_for(cfg.seed, 0xc1a5, idx as u64);
        let mut logits: Vec<f64> = (0..out * nz)
            .map(|_| 2.0 * rng.gen::<f64>() - 1.0)
            .collect();
        let mut cur = score(&StochasticMap::new(
            nz,
            out,
            softmax_columns(&logits, out, nz),
        )?)?;
        let mut step = 1.0;
        for _ in 0..cfg.max_iters {
            let proposal: Vec<f64> = logits
                .iter()
                .map(|&l| l + step * (2.0 * rng.gen::<f64>() - 1.0))
                .collect();
            let map = StochasticMap::new(nz, out, softmax_columns(&proposal, out, nz))?;
            let v = score(&map)?;
            if v < cur {
                cur = v;
                logits = proposal;
                step *= 1.2;
            } else {
                step *= 0.95;
            }
            if step < 1e-6 || cur < 1e-12 {
                break;
            }
        }
        if cur < best_val {
            best_val = cur;
            best_map = StochasticMap::new(nz, out, softmax_columns(&logits, out, nz))?;
        }
        if best_val < 1e-12 {
            break;
        }
    }
    Ok((best_val.max(0.0), best_map))
}

/// Exhaustive grid reference for binary Z and binary output: both columns
/// of the map walk a probability grid with the given step.
pub fn intrinsic_grid_oracle(p: &ClassicalDist, step: f64) -> Result<f64> {
    if p.nz != 2 {
        return Err(Error::Shape("grid reference needs a binary Z".into()));
    }
    let ticks = (1.0 / step).round() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=ticks {
        let a = (i as f64 * step).min(1.0);
        for j in 0..=ticks {
            let b = (j as f64 * step).min(1.0);
            let map = StochasticMap::new(2, 2, vec![a, b, 1.0 - a, 1.0 - b])?;
            best = best.min(classical_cmi(&map.apply_z(p)?));
        }
    }
    Ok(best)
}

/// Perfectly correlated uniform pair with a pinned third symbol.
pub fn p_one() -> ClassicalDist {
    p_one_d(2)
}

/// The parity triple: z equals x xor y, all pairs uniform.
pub fn p_two() -> ClassicalDist {
    let mut t = vec![0.0; 8];
    for x in 0..2 {
        for y in 0..2 {
            let z = x ^ y;
            t[(x * 2 + y) * 2 + z] = 0.25;
        }
    }
    ClassicalDist::new(2, 2, 2, t).expect("valid by construction")
}

/// d-ary perfectly correlated pair, the maximally non-Markov source.
pub fn p_one_d(d: usize) -> ClassicalDist {
    let mut t = vec![0.0; d * d * 2];
    for k in 0..d {
        t[(k * d + k) * 2] = 1.0 / d as f64;
    }
    ClassicalDist::new(d, d, 2, t).expect("valid by construction")
}

/// Named distributions for the CLI: `p-i`, `p-ii`, `p-i-d:<d>`.
pub fn make_dist(name: &str) -> Result<ClassicalDist> {
    match name {
        "p-i" => Ok(p_one()),
        "p-ii" => Ok(p_two()),
        _ => {
            if let Some(rest) = name.strip_prefix("p-i-d:") {
                let d: usize = rest
                    .parse()
                    .map_err(|_| Error::Input(format!("bad dimension in {name}")))?;
                if d < 2 || d > 64 {
                    return Err(Error::Input("dimension must be between 2 and 64".into()));
                }
                Ok(p_one_d(d))
            } else {
                Err(Error::Input(format!("unknown distribution {name}")))
            }
        }
    }
}

pub fn random_dist<R: Rng>(nx: usize, ny: usize, nz: usize, rng: &mut R) -> ClassicalDist {
    let mut t: Vec<f64> = (0..nx * ny * nz)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    let total: f64 = t.iter().sum();
    for e in t.iter_mut() {
        *e /= total;
    }
    ClassicalDist::new(nx, ny, nz, t).expect("valid by construction")
}

pub fn random_stochastic<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> StochasticMap {
    let mut r = vec![0.0; in_dim * out_dim];
    for z in 0..in_dim {
        let mut total = 0.0;
        for zp in 0..out_dim {
            let v = -(1.0 - rng.gen::<f64>()).ln();
            r[zp * in_dim + z] = v;
            total += v;
        }
        for zp in 0..out_dim {
            r[zp * in_dim + z] /= total;
        }
    }
    StochasticMap::new(in_dim, out_dim, r).expect("valid by construction")
}

/// Random permutation of Z, the reversible processing class.
pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> StochasticMap {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    let mut r = vec![0.0; n * n];
    for (z, &zp) in perm.iter().enumerate() {
        r[zp * n + z] = 1.0;
    }
    StochasticMap::new(n, n, r).expect("valid by construction")
}

/// Outcome of the one-time-pad generation protocol.
#[derive(Debug, Clone)]
pub struct ClassicalGeneration {
    /// Human-readable step list.
    pub trace: Vec<String>,
    /// Final joint distribution on (X, Y, Z) across the three parties.
    pub final_dist: ClassicalDist,
    /// Largest deviation of the (X, Y, Z, M) joint from final times a
    /// uniform independent message register.
    pub message_deviation: f64,
}

/// Generate an arbitrary target on d-ary X and Y from the perfectly
/// correlated d-ary pair: Alice samples the target locally, masks Y with
/// the shared key, broadcasts the mask and Z, and Bob unmasks.
pub fn classical_generate(target: &ClassicalDist, d: usize) -> Result<ClassicalGeneration> {
    if target.nx != d || target.ny != d {
        return Err(Error::Input(format!(
            "target has alphabets {}x{} on X, Y, expected {d}",
            target.nx, target.ny
        )));
    }
    let nz = target.nz;
    // joint over (x, y_alice, z, k, m, y_bob) collapses because m and
    // y_bob are deterministic given (y_alice, k)
    let mut joint = vec![0.0; d * d * nz * d];
    // indexed as ((x * d + y_bob) * nz + z) * d + m
    let mut final_table = vec![0.0; d * d * nz];
    for x in 0..d {
        for y in 0..d {
            for z in 0..nz {
                let v = target.prob(x, y, z) / d as f64;
                if v == 0.0 {
                    continue;
                }
                for k in 0..d {
                    let m = (y + k) % d;
                    let y_bob = (m + d - k) % d;
                    joint[((x * d + y_bob) * nz + z) * d + m] += v;
                    final_table[(x * d + y_bob) * nz + z] += v;
                }
            }
        }
    }
    let final_dist = ClassicalDist::new(d, d, nz, renormalize(final_table))?;
    let mut message_deviation: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            for z in 0..nz {
                let marginal = final_dist.prob(x, y, z);
                for m in 0..d {
                    let got = joint[((x * d + y) * nz + z) * d + m];
                    message_deviation =
                        message_deviation.max((got - marginal / d as f64).abs());
                }
            }
        }
    }
    let trace = vec![
        format!("alice samples (X, Y, Z) from the {d}x{d}x{nz} target table"),
        format!("alice computes M = Y plus K mod {d} with the shared key K"),
        "alice broadcasts Z and M to bob and eve".to_string(),
        format!("bob computes Y = M minus K mod {d}"),
        "bob discards his copy of Z".to_string(),
    ];
    Ok(ClassicalGeneration {
        trace,
        final_dist,
        message_deviation,
    })
}

#[derive(Serialize, Deserialize)]
struct DistFile {
    x: usize,
    y: usize,
    z: usize,
    p: Vec<f64>,
}

pub fn dist_to_json(p: &ClassicalDist) -> String {
    let file = DistFile {
        x: p.nx,
        y: p.ny,
        z: p.nz,
        p: p.p.clone(),
    };
    serde_json::to_string_pretty(&file).expect("distribution serialization cannot fail")
}

pub fn dist_from_json(text: &str) -> Result<ClassicalDist> {
    let file: DistFile = serde_json::from_str(text)?;
    ClassicalDist::new(file.x, file.y, file.z, file.p)
}

pub fn save_dist(p: &ClassicalDist, path: &Path) -> Result<()> {
    std::fs::write(path, dist_to_json(p))?;
    Ok(())
}

pub fn load_dist(path: &Path) -> Result<ClassicalDist> {
    let text = std::fs::read_to_string(path)?;
    dist_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn named_distributions_have_unit_information() {
        assert!((classical_cmi(&p_one()) - 1.0).abs() < 1e-12);
        assert!((classical_cmi(&p_two()) - 1.0).abs() < 1e-12);
        assert!((classical_cmi(&p_one_d(4)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn product_distributions_carry_no_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let px: Vec<f64> = renormalize((0..3).map(|_| rng.gen::<f64>()).collect());
        let py: Vec<f64> = renormalize((0..2).map(|_| rng.gen::<f64>()).collect());
        let pz: Vec<f64> = renormalize((0..2).map(|_| rng.gen::<f64>()).collect());
        let mut t = vec![0.0; 12];
        for x in 0..3 {
            for y in 0..2 {
                for z in 0..2 {
                    t[(x * 2 + y) * 2 + z] = px[x] * py[y] * pz[z];
                }
            }
        }
        let p = ClassicalDist::new(3, 2, 2, t).unwrap();
        assert!(classical_cmi(&p) < 1e-12);
        assert!(classical_is_markov(&p, 1e-9));
    }

    #[test]
    fn markov_construction_is_detected() {
        // p(x,y,z) = p(x|z) p(y|z) p(z)
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pz = renormalize((0..3).map(|_| rng.gen::<f64>()).collect());
        let mut t = vec![0.0; 2 * 2 * 3];
        for z in 0..3 {
            let xz = renormalize((0..2).map(|_| rng.gen::<f64>()).collect());
            let yz = renormalize((0..2).map(|_| rng.gen::<f64>()).collect());
            for x in 0..2 {
                for y in 0..2 {
                    t[(x * 2 + y) * 3 + z] = xz[x] * yz[y] * pz[z];
                }
            }
        }
        let p = ClassicalDist::new(2, 2, 3, t).unwrap();
        assert!(classical_is_markov(&p, 1e-9));
        assert!(!classical_is_markov(&p_one(), 1e-9));
        assert!(!classical_is_markov(&p_two(), 1e-9));
        // identity witness already reaches zero
        let (v, w) = classical_intrinsic(&p, &IntrinsicConfig::default()).unwrap();
        assert!(v < 1e-9);
        let _ = w;
    }

    #[test]
    fn intrinsic_information_examples() {
        let cfg = IntrinsicConfig::default();
        let (vi, _) = classical_intrinsic(&p_one(), &cfg).unwrap();
        assert!((vi - 1.0).abs() < 1e-6, "correlated pair gave {vi}");
        let (vii, w) = classical_intrinsic(&p_two(), &cfg).unwrap();
        assert!(vii < 1e-9, "parity triple gave {vii}");
        // the witness behaves like a constant map: both columns nearly equal
        let q = w.apply_z(&p_two()).unwrap();
        assert!(classical_cmi(&q) < 1e-9);
    }

    #[test]
    fn intrinsic_never_exceeds_plain_cmi() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let p = random_dist(2, 3, 2, &mut rng);
            let cmi = classical_cmi(&p);
            let (v, _) = classical_intrinsic(&p, &IntrinsicConfig::default()).unwrap();
            assert!(v <= cmi + 1e-9);
        }
    }

    #[test]
    fn grid_reference_matches_the_optimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..3 {
            let p = random_dist(2, 2, 2, &mut rng);
            let grid = intrinsic_grid_oracle(&p, 0.02).unwrap();
            let (opt, _) = classical_intrinsic(&p, &IntrinsicConfig::default()).unwrap();
            assert!(
                (grid - opt).abs() < 5e-3,
                "grid {grid} vs optimizer {opt}"
            );
        }
    }

    #[test]
    fn processing_respects_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let p = random_dist(3, 2, 3, &mut rng);
            let before = classical_cmi(&p);
            let mx = random_stochastic(3, 2, &mut rng);
            let my = random_stochastic(2, 2, &mut rng);
            assert!(classical_cmi(&mx.apply_x(&p).unwrap()) <= before + 1e-9);
            assert!(classical_cmi(&my.apply_y(&p).unwrap()) <= before + 1e-9);
            let perm = random_permutation(3, &mut rng);
            let after = classical_cmi(&perm.apply_z(&p).unwrap());
            assert!((after - before).abs() < 1e-9);
        }
    }

    #[test]
    fn permutations_verify_as_reversible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let perm = random_permutation(4, &mut rng);
        // invert by transposing the 0/1 table
        let mut inv = vec![0.0; 16];
        for z in 0..4 {
            for zp in 0..4 {
                inv[z * 4 + zp] = perm.weight(zp, z);
            }
        }
        let inverse = StochasticMap::new(4, 4, inv).unwrap();
        let residual = stochastic_reversibility_residual(&perm, &inverse).unwrap();
        assert!(residual < 1e-12);
        let erase = StochasticMap::erase(4);
        let back = StochasticMap::new(1, 4, vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        assert!(stochastic_reversibility_residual(&erase, &back).unwrap() > 0.5);
    }

    #[test]
    fn generation_reproduces_targets() {
        for target in [p_one(), p_two()] {
            let gen = classical_generate(&target, 2).unwrap();
            let diff: f64 = gen
                .final_dist
                .table()
                .iter()
                .zip(target.table())
                .map(|(a, b)| (a - b).abs())
                .sum();
            assert!(diff < 1e-12);
            assert!(gen.message_deviation < 1e-12);
            assert_eq!(gen.trace.len(), 5);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let target = random_dist(2, 2, 3, &mut rng);
        let gen = classical_generate(&target, 2).unwrap();
        let diff: f64 = gen
            .final_dist
            .table()
            .iter()
            .zip(target.table())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff < 1e-12);
        assert!(gen.message_deviation < 1e-12);
    }

    #[test]
    fn generation_rejects_alphabet_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let target = random_dist(3, 2, 2, &mut rng);
        assert!(matches!(
            classical_generate(&target, 2),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn distribution_files_round_trip() {
        let p = p_two();
        let text = dist_to_json(&p);
        let back = dist_from_json(&text).unwrap();
        assert_eq!(p, back);
        assert!(dist_from_json("{\"x\":2,\"y\":2,\"z\":2,\"p\":[1.0]}").is_err());
        assert!(dist_from_json("{\"x\":1,\"y\":1,\"z\":1,\"p\":[0.5]}").is_err());
        assert!(dist_from_json("not json").is_err());
        assert!(make_dist("p-i-d:4").is_ok());
        assert!(make_dist("nope").is_err());
    }

    #[test]
    fn validation_rejects_bad_tables() {
        assert!(ClassicalDist::new(2, 2, 2, vec![0.125; 7]).is_err());
        assert!(ClassicalDist::new(2, 2, 2, vec![-0.1; 8]).is_err());
        let mut bad = vec![0.125; 8];
        bad[0] = 0.3;
        assert!(ClassicalDist::new(2, 2, 2, bad).is_err());
        assert!(StochasticMap::new(2, 2, vec![0.5, 0.5, 0.4, 0.5]).is_err());
    }
}
