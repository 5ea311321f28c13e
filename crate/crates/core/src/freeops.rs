//! Free operations and the protocol runner.
//!
//! Every register is held by one of three parties. Alice and Bob apply
//! arbitrary channels to registers they hold and may broadcast a measured
//! register, which appends classical copies to both other parties. The
//! environment party Eve only performs reversible operations, never
//! discards anything, and must accept every register sent her way by the
//! one-directional quantum channels. `run` executes a step list under
//! those rules and tracks who holds what after each step.

use crate::catalog::{
    bell_basis_unitary, bell_vec, bell_vec_d, clock_matrix, hadamard, pauli_x, pauli_z,
    shift_matrix,
};
use crate::channels::{
    channel_from_file, channel_to_file, random_isometry, verify_reversible, Channel, ChannelFile,
    Isometry, ReversiblePair,
};
use crate::error::{Error, Result};
use crate::optimize::{refine, rng_for, SearchConfig};
use crate::tensor::{
    basis, cx, hermitian_eig, identity, kron, outer, projector, trace_norm_distance, CMatrix,
    CVector, MultipartiteState, PureState,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Who currently holds a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Eve,
}

/// Default owner of a label. Labels starting with `A` belong to Alice,
/// labels starting with `B` to Bob, everything else to Eve. `run` uses this
/// rule for the initial state only; registers created later are owned by
/// whoever created them.
pub fn default_owner(label: &str) -> Party {
    match label.chars().next() {
        Some('A') => Party::Alice,
        Some('B') => Party::Bob,
        _ => Party::Eve,
    }
}

/// One step of a protocol. Targets are consumed and replaced by the output
/// registers, which land with the acting party (broadcast copies land with
/// the named recipients).
#[derive(Debug, Clone)]
pub enum ProtocolStep {
    LocalA {
        channel: Channel,
        targets: Vec<String>,
        outputs: Vec<(String, usize)>,
    },
    LocalB {
        channel: Channel,
        targets: Vec<String>,
        outputs: Vec<(String, usize)>,
    },
    ReversibleE {
        pair: ReversiblePair,
        targets: Vec<String>,
        outputs: Vec<(String, usize)>,
    },
    /// Measure an Alice register in the declared basis (computational when
    /// `None`) and hand identical classical copies to Bob and Eve.
    BroadcastA {
        register: String,
        basis: Option<CMatrix>,
        copy_b: String,
        copy_e: String,
    },
    BroadcastB {
        register: String,
        basis: Option<CMatrix>,
        copy_a: String,
        copy_e: String,
    },
    /// Hand a register from Alice to Eve. Pure bookkeeping, no matrix op.
    QuantumCommAE { label: String },
    QuantumCommBE { label: String },
}

#[derive(Debug, Clone, Default)]
pub struct Protocol {
    pub steps: Vec<ProtocolStep>,
}

/// Final state of a protocol run plus the ownership of every register,
/// listed in state label order.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: MultipartiteState,
    pub owners: Vec<(String, Party)>,
}

impl RunOutcome {
    /// Labels currently held by the given party, in state order.
    pub fn held_by(&self, party: Party) -> Vec<String> {
        self.owners
            .iter()
            .filter(|(_, p)| *p == party)
            .map(|(l, _)| l.clone())
            .collect()
    }
}

fn owner_of(owners: &[(String, Party)], label: &str) -> Result<Party> {
    owners
        .iter()
        .find(|(l, _)| l == label)
        .map(|(_, p)| *p)
        .ok_or_else(|| Error::Label(format!("register {label} does not exist")))
}

fn require_held(owners: &[(String, Party)], labels: &[String], party: Party) -> Result<()> {
    for l in labels {
        let holder = owner_of(owners, l)?;
        if holder != party {
            return Err(Error::Contract(format!(
                "{party:?} cannot act on register {l} held by {holder:?}"
            )));
        }
    }
    Ok(())
}

fn as_refs(labels: &[String]) -> Vec<&str> {
    labels.iter().map(|s| s.as_str()).collect()
}

fn replace_registers(
    owners: &mut Vec<(String, Party)>,
    removed: &[String],
    added: &[(String, usize)],
    party: Party,
) {
    owners.retain(|(l, _)| !removed.contains(l));
    for (l, _) in added {
        owners.push((l.clone(), party));
    }
}

fn local_step(
    state: &mut MultipartiteState,
    owners: &mut Vec<(String, Party)>,
    party: Party,
    channel: &Channel,
    targets: &[String],
    outputs: &[(String, usize)],
) -> Result<()> {
    require_held(owners, targets, party)?;
    let next = channel.apply(state, &as_refs(targets), outputs)?;
    *state = next;
    replace_registers(owners, targets, outputs, party);
    Ok(())
}

fn broadcast_step(
    state: &mut MultipartiteState,
    owners: &mut Vec<(String, Party)>,
    acting: Party,
    register: &str,
    basis_mat: &Option<CMatrix>,
    copy_one: (&str, Party),
    copy_two: (&str, Party),
) -> Result<()> {
    require_held(owners, &[register.to_string()], acting)?;
    let n = state.dim_of(register)?;
    if let Some(u) = basis_mat {
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::Shape(format!(
                "broadcast basis is {}x{}, register {register} has dimension {n}",
                u.nrows(),
                u.ncols()
            )));
        }
        if (u.adjoint() * u - identity(n)).norm() > 1e-10 {
            return Err(Error::Input("broadcast basis is not unitary".into()));
        }
    }
    // One Kraus operator per outcome: project onto the basis vector, then
    // write the outcome index into the kept register and both copies.
    let mut kraus = Vec::with_capacity(n);
    for m in 0..n {
        let mut k = CMatrix::zeros(n * n * n, n);
        let row = (m * n + m) * n + m;
        for j in 0..n {
            k[(row, j)] = match basis_mat {
                Some(u) => u[(j, m)].conj(),
                None => {
                    if j == m {
                        cx(1.0, 0.0)
                    } else {
                        cx(0.0, 0.0)
                    }
                }
            };
        }
        kraus.push(k);
    }
    let channel = Channel::new(kraus)?;
    let outputs = vec![
        (register.to_string(), n),
        (copy_one.0.to_string(), n),
        (copy_two.0.to_string(), n),
    ];
    let next = channel.apply(state, &[register], &outputs)?;
    *state = next;
    owners.retain(|(l, _)| l != register);
    owners.push((register.to_string(), acting));
    owners.push((copy_one.0.to_string(), copy_one.1));
    owners.push((copy_two.0.to_string(), copy_two.1));
    Ok(())
}

fn comm_step(owners: &mut [(String, Party)], label: &str, from: Party) -> Result<()> {
    let holder = owner_of(owners, label)?;
    if holder != from {
        return Err(Error::Contract(format!(
            "{from:?} cannot send register {label} held by {holder:?}"
        )));
    }
    for entry in owners.iter_mut() {
        if entry.0 == label {
            entry.1 = Party::Eve;
        }
    }
    Ok(())
}

fn apply_step(
    step: &ProtocolStep,
    state: &mut MultipartiteState,
    owners: &mut Vec<(String, Party)>,
) -> Result<()> {
    match step {
        ProtocolStep::LocalA {
            channel,
            targets,
            outputs,
        } => local_step(state, owners, Party::Alice, channel, targets, outputs),
        ProtocolStep::LocalB {
            channel,
            targets,
            outputs,
        } => local_step(state, owners, Party::Bob, channel, targets, outputs),
        ProtocolStep::ReversibleE {
            pair,
            targets,
            outputs,
        } => {
            let report = verify_reversible(pair)?;
            if !report.ok {
                return Err(Error::Contract(format!(
                    "environment step on {targets:?} is not reversible \
                     (choi residual {:.3e}, state residual {:.3e})",
                    report.choi_residual, report.state_residual
                )));
            }
            local_step(state, owners, Party::Eve, &pair.forward, targets, outputs)
        }
        ProtocolStep::BroadcastA {
            register,
            basis,
            copy_b,
            copy_e,
        } => broadcast_step(
            state,
            owners,
            Party::Alice,
            register,
            basis,
            (copy_b, Party::Bob),
            (copy_e, Party::Eve),
        ),
        ProtocolStep::BroadcastB {
            register,
            basis,
            copy_a,
            copy_e,
        } => broadcast_step(
            state,
            owners,
            Party::Bob,
            register,
            basis,
            (copy_a, Party::Alice),
            (copy_e, Party::Eve),
        ),
        ProtocolStep::QuantumCommAE { label } => comm_step(owners, label, Party::Alice),
        ProtocolStep::QuantumCommBE { label } => comm_step(owners, label, Party::Bob),
    }
}

/// Run a protocol with ownership inferred from the initial labels.
pub fn run(p: &Protocol, s: &MultipartiteState) -> Result<RunOutcome> {
    let owners = s
        .labels()
        .iter()
        .map(|l| (l.to_string(), default_owner(l)))
        .collect();
    run_with_owners(p, s, owners)
}

/// Run a protocol with an explicit initial ownership assignment. The
/// assignment must cover every label of the state exactly once.
pub fn run_with_owners(
    p: &Protocol,
    s: &MultipartiteState,
    owners: Vec<(String, Party)>,
) -> Result<RunOutcome> {
    let labels = s.labels();
    if owners.len() != labels.len() {
        return Err(Error::Label(format!(
            "ownership list has {} entries for {} registers",
            owners.len(),
            labels.len()
        )));
    }
    for l in &labels {
        owner_of(&owners, l)?;
    }
    let mut state = s.clone();
    let mut owners = owners;
    for step in &p.steps {
        apply_step(step, &mut state, &mut owners)?;
    }
    let ordered = state
        .labels()
        .iter()
        .map(|l| {
            let party = owner_of(&owners, l).expect("owner tracking out of sync");
            (l.to_string(), party)
        })
        .collect();
    Ok(RunOutcome {
        state,
        owners: ordered,
    })
}

/// Reversible operation on Eve's side of the target state, used to absorb
/// leftover environment registers when comparing protocol output against a
/// target.
#[derive(Debug, Clone)]
pub struct EveWitness {
    pub pair: ReversiblePair,
    pub targets: Vec<String>,
    pub outputs: Vec<(String, usize)>,
}

#[derive(Debug, Clone)]
pub struct ConvertibilityVerdict {
    pub epsilon_achieved: f64,
    pub ok: bool,
    pub reversible_witness: ReversiblePair,
}

/// Check whether `p` converts `s1` into `s2` up to `eps` in trace norm,
/// where the witness `v` rearranges Eve's side of `s2` to line up with the
/// protocol output. The witness must verify as reversible and may only
/// touch Eve-side registers.
pub fn check_convertibility(
    s1: &MultipartiteState,
    s2: &MultipartiteState,
    p: &Protocol,
    v: &EveWitness,
    eps: f64,
) -> Result<ConvertibilityVerdict> {
    let report = verify_reversible(&v.pair)?;
    if !report.ok {
        return Err(Error::Contract(format!(
            "the reverse witness is not reversible (choi residual {:.3e})",
            report.choi_residual
        )));
    }
    for t in &v.targets {
        if !s2.has_label(t) {
            return Err(Error::Label(format!("witness target {t} not in the target state")));
        }
        if default_owner(t) != Party::Eve {
            return Err(Error::Contract(format!(
                "witness target {t} is not on the environment side"
            )));
        }
    }
    let lhs = run(p, s1)?.state;
    let rhs = v.pair.forward.apply(s2, &as_refs(&v.targets), &v.outputs)?;
    let epsilon_achieved = trace_norm_distance(&lhs, &rhs)?;
    Ok(ConvertibilityVerdict {
        epsilon_achieved,
        ok: epsilon_achieved <= eps,
        reversible_witness: v.pair.clone(),
    })
}

fn local_a(channel: Channel, targets: &[&str], outputs: &[(&str, usize)]) -> ProtocolStep {
    ProtocolStep::LocalA {
        channel,
        targets: targets.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|(l, d)| (l.to_string(), *d)).collect(),
    }
}

fn local_b(channel: Channel, targets: &[&str], outputs: &[(&str, usize)]) -> ProtocolStep {
    ProtocolStep::LocalB {
        channel,
        targets: targets.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|(l, d)| (l.to_string(), *d)).collect(),
    }
}

fn reversible_e(pair: ReversiblePair, targets: &[&str], outputs: &[(&str, usize)]) -> ProtocolStep {
    ProtocolStep::ReversibleE {
        pair,
        targets: targets.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|(l, d)| (l.to_string(), *d)).collect(),
    }
}

/// Block-diagonal unitary with the j-th block applied when the leading
/// fused register holds j.
fn controlled(blocks: &[CMatrix]) -> CMatrix {
    let d = blocks[0].nrows();
    let n = blocks.len();
    let mut u = CMatrix::zeros(n * d, n * d);
    for (j, b) in blocks.iter().enumerate() {
        for r in 0..d {
            for c in 0..d {
                u[(j * d + r, j * d + c)] = b[(r, c)];
            }
        }
    }
    u
}

fn maximally_mixed(d: usize) -> CMatrix {
    identity(d).scale(1.0 / d as f64)
}

fn mat_pow(m: &CMatrix, k: usize) -> CMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Coin protocol: Alice broadcasts a fresh uniform coin, applies a phase
/// flip to her half when the coin shows 1, then discards her coin copies.
/// Bob discards his copy as well, so only Eve's copy survives as a flag.
/// Turns the pure maximally entangled state into the two-flag mixture.
pub fn protocol_p1() -> Result<Protocol> {
    let coin = Channel::prepare(&maximally_mixed(2))?;
    let flip = Channel::from_unitary(&controlled(&[identity(2), pauli_z()]))?;
    Ok(Protocol {
        steps: vec![
            local_a(coin, &[], &[("CA", 2)]),
            ProtocolStep::BroadcastA {
                register: "CA".into(),
                basis: None,
                copy_b: "CB".into(),
                copy_e: "CE".into(),
            },
            local_b(Channel::discard(2), &["CB"], &[]),
            local_a(flip, &["CA", "A"], &[("CA", 2), ("A", 2)]),
            local_a(Channel::discard(2), &["CA"], &[]),
        ],
    })
}

/// Same coin protocol with a bit flip instead of a phase flip, on coin
/// labels `D*` so the two protocols compose.
pub fn protocol_p1_prime() -> Result<Protocol> {
    let coin = Channel::prepare(&maximally_mixed(2))?;
    let flip = Channel::from_unitary(&controlled(&[identity(2), pauli_x()]))?;
    Ok(Protocol {
        steps: vec![
            local_a(coin, &[], &[("DA", 2)]),
            ProtocolStep::BroadcastA {
                register: "DA".into(),
                basis: None,
                copy_b: "DB".into(),
                copy_e: "DE".into(),
            },
            local_b(Channel::discard(2), &["DB"], &[]),
            local_a(flip, &["DA", "A"], &[("DA", 2), ("A", 2)]),
            local_a(Channel::discard(2), &["DA"], &[]),
        ],
    })
}

/// phi-i to phi-ii.
pub fn arrow_phi_i_to_phi_ii() -> Result<(Protocol, EveWitness)> {
    Ok((
        protocol_p1()?,
        EveWitness {
            pair: ReversiblePair::append(2, &projector(&basis(2, 0)))?,
            targets: vec!["E".into()],
            outputs: vec![("CE".into(), 2), ("E".into(), 2)],
        },
    ))
}

/// phi-ii to phi-iii.
pub fn arrow_phi_ii_to_phi_iii() -> Result<(Protocol, EveWitness)> {
    Ok((
        protocol_p1_prime()?,
        EveWitness {
            pair: ReversiblePair::from_unitary(&identity(4))?,
            targets: vec!["E".into()],
            outputs: vec![("DE".into(), 2), ("E".into(), 2)],
        },
    ))
}

/// phi-i to phi-iii with both coins in sequence.
pub fn arrow_phi_i_to_phi_iii() -> Result<(Protocol, EveWitness)> {
    let mut steps = protocol_p1()?.steps;
    steps.extend(protocol_p1_prime()?.steps);
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::append(4, &projector(&basis(2, 0)))?,
            targets: vec!["E".into()],
            outputs: vec![("DE".into(), 2), ("CE".into(), 2), ("E".into(), 2)],
        },
    ))
}

/// phi-ii to psi-i. Alice grows the entanglement onto an ancilla, sends the
/// ancilla to Eve, and Eve cancels the coin phase with a controlled flip.
pub fn arrow_phi_ii_to_psi_i() -> Result<(Protocol, EveWitness)> {
    let cnot = Channel::from_unitary(&controlled(&[identity(2), pauli_x()]))?;
    let cz = ReversiblePair::from_unitary(&controlled(&[identity(2), pauli_z()]))?;
    let steps = vec![
        local_a(Channel::prepare(&projector(&basis(2, 0)))?, &[], &[("T", 2)]),
        local_a(cnot, &["A", "T"], &[("A", 2), ("T", 2)]),
        ProtocolStep::QuantumCommAE { label: "T".into() },
        reversible_e(cz, &["E", "T"], &[("E", 2), ("T", 2)]),
    ];
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::append(2, &maximally_mixed(2))?,
            targets: vec!["E".into()],
            outputs: vec![("T".into(), 2), ("E".into(), 2)],
        },
    ))
}

/// phi-ii to psi-i-star: dephasing Alice's half decouples the flag.
pub fn arrow_phi_ii_to_psi_i_star() -> Result<(Protocol, EveWitness)> {
    let steps = vec![
        local_a(Channel::dephasing(2), &["A"], &[("A", 2)]),
        reversible_e(
            ReversiblePair::append(2, &projector(&basis(2, 0)))?,
            &["E"],
            &[("E", 2), ("E2", 2)],
        ),
    ];
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::append(2, &maximally_mixed(2))?,
            targets: vec!["E".into()],
            outputs: vec![("E2".into(), 2), ("E".into(), 2)],
        },
    ))
}

/// psi-i-star to psi-ii-star: a broadcast coin picks between the correlated
/// and the anticorrelated classical pair.
pub fn arrow_psi_i_star_to_psi_ii_star() -> Result<(Protocol, EveWitness)> {
    let coin = Channel::prepare(&maximally_mixed(2))?;
    let flip = Channel::from_unitary(&controlled(&[identity(2), pauli_x()]))?;
    let steps = vec![
        local_a(coin, &[], &[("CA", 2)]),
        ProtocolStep::BroadcastA {
            register: "CA".into(),
            basis: None,
            copy_b: "CB".into(),
            copy_e: "CE".into(),
        },
        local_b(Channel::discard(2), &["CB"], &[]),
        local_a(flip, &["CA", "A"], &[("CA", 2), ("A", 2)]),
        local_a(Channel::discard(2), &["CA"], &[]),
    ];
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::append(2, &projector(&basis(2, 0)))?,
            targets: vec!["E".into()],
            outputs: vec![("CE".into(), 2), ("E".into(), 2)],
        },
    ))
}

/// psi-i to psi-ii: the bit-flip coin plus a Hadamard on Eve's register.
pub fn arrow_psi_i_to_psi_ii() -> Result<(Protocol, EveWitness)> {
    let mut steps = protocol_p1_prime()?.steps;
    steps.push(reversible_e(
        ReversiblePair::from_unitary(&hadamard())?,
        &["E"],
        &[("E", 2)],
    ));
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::from_unitary(&identity(4))?,
            targets: vec!["E".into()],
            outputs: vec![("DE".into(), 2), ("E".into(), 2)],
        },
    ))
}

/// psi-ii to psi-ii-star: Alice and Bob measure in the Hadamard basis,
/// which collapses Eve's phase half onto the parity of their outcomes.
pub fn arrow_psi_ii_to_psi_ii_star() -> Result<(Protocol, EveWitness)> {
    let measure = Channel::dephasing(2).compose(&Channel::from_unitary(&hadamard())?)?;
    let steps = vec![
        local_a(measure.clone(), &["A"], &[("A", 2)]),
        local_b(measure, &["B"], &[("B", 2)]),
        reversible_e(
            ReversiblePair::from_unitary(&identity(4))?,
            &["E"],
            &[("EJ", 2), ("EM", 2)],
        ),
    ];
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::append(2, &maximally_mixed(2))?,
            targets: vec!["E".into()],
            outputs: vec![("EM".into(), 2), ("EJ".into(), 2)],
        },
    ))
}

/// Controlled-phase core acting on psi-ii-star plus two shared entangled
/// pairs (labels A0/EE1 from Alice's pair, B0/EE2 from Bob's). Each party
/// writes its classical value onto its half pair with a controlled phase;
/// the old registers are discarded and the halves renamed A and B. The
/// output equals the flagged Bell mixture with Eve's pair still in the
/// entangled basis.
pub fn protocol_p2() -> Result<Protocol> {
    let cz = controlled(&[identity(2), pauli_z()]);
    Ok(Protocol {
        steps: vec![
            local_a(
                Channel::from_unitary(&cz)?,
                &["A", "A0"],
                &[("A", 2), ("A0", 2)],
            ),
            local_b(
                Channel::from_unitary(&cz)?,
                &["B", "B0"],
                &[("B", 2), ("B0", 2)],
            ),
            reversible_e(
                ReversiblePair::from_unitary(&cz)?,
                &["E", "EE1"],
                &[("E", 2), ("EE1", 2)],
            ),
            local_a(Channel::discard(2), &["A"], &[]),
            local_a(Channel::identity_map(2), &["A0"], &[("A", 2)]),
            local_b(Channel::discard(2), &["B"], &[]),
            local_b(Channel::identity_map(2), &["B0"], &[("B", 2)]),
        ],
    })
}

/// Controlled-Pauli core acting on two copies of psi-ii-star (labels
/// A1/B1/F1 and A2/B2/F2) plus two shared pairs. The two classical bits of
/// each party select a Pauli that is written onto the party's half pair.
pub fn protocol_p3() -> Result<Protocol> {
    let blocks: Vec<CMatrix> = (0..4)
        .map(|m| {
            let k = (m / 2) as u8;
            let l = (m % 2) as u8;
            crate::catalog::pauli_xz(k, l)
        })
        .collect();
    let cp = controlled(&blocks);
    Ok(Protocol {
        steps: vec![
            local_a(
                Channel::from_unitary(&cp)?,
                &["A1", "A2", "A0"],
                &[("A1", 2), ("A2", 2), ("A0", 2)],
            ),
            local_b(
                Channel::from_unitary(&cp)?,
                &["B1", "B2", "B0"],
                &[("B1", 2), ("B2", 2), ("B0", 2)],
            ),
            reversible_e(
                ReversiblePair::from_unitary(&cp)?,
                &["F1", "F2", "EE1"],
                &[("F1", 2), ("F2", 2), ("EE1", 2)],
            ),
            local_a(Channel::discard(2), &["A1"], &[]),
            local_a(Channel::discard(2), &["A2"], &[]),
            local_a(Channel::identity_map(2), &["A0"], &[("A", 2)]),
            local_b(Channel::discard(2), &["B1"], &[]),
            local_b(Channel::discard(2), &["B2"], &[]),
            local_b(Channel::identity_map(2), &["B0"], &[("B", 2)]),
        ],
    })
}

/// Steps that create the two shared pairs consumed by `protocol_p2` and
/// `protocol_p3`: each party prepares a maximally entangled pair locally
/// and sends one half to Eve.
fn shared_pair_steps() -> Result<Vec<ProtocolStep>> {
    let pair = projector(&bell_vec(0, 0));
    Ok(vec![
        local_a(Channel::prepare(&pair)?, &[], &[("A0", 2), ("EE1", 2)]),
        ProtocolStep::QuantumCommAE {
            label: "EE1".into(),
        },
        local_b(Channel::prepare(&pair)?, &[], &[("B0", 2), ("EE2", 2)]),
        ProtocolStep::QuantumCommBE {
            label: "EE2".into(),
        },
    ])
}

fn bell_unmake(outputs: &[(&str, usize)], targets: &[&str]) -> Result<ProtocolStep> {
    Ok(reversible_e(
        ReversiblePair::from_unitary(&bell_basis_unitary(2).adjoint())?,
        targets,
        outputs,
    ))
}

/// psi-ii-star to psi-ii, including free generation of the shared pairs
/// and the final basis change on Eve's pair.
pub fn arrow_psi_ii_star_to_psi_ii() -> Result<(Protocol, EveWitness)> {
    let mut steps = shared_pair_steps()?;
    steps.extend(protocol_p2()?.steps);
    steps.push(bell_unmake(&[("EM", 4)], &["EE1", "EE2"])?);
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::append(4, &maximally_mixed(2))?,
            targets: vec!["E".into()],
            outputs: vec![("EM".into(), 4), ("E".into(), 2)],
        },
    ))
}

/// The conversion arrows between single catalog states, as
/// (arrow name, source name, target name).
pub const NAMED_ARROWS: [(&str, &str, &str); 9] = [
    ("phi-i-to-phi-ii", "phi-i", "phi-ii"),
    ("phi-ii-to-phi-iii", "phi-ii", "phi-iii"),
    ("phi-i-to-phi-iii", "phi-i", "phi-iii"),
    ("phi-ii-to-psi-i", "phi-ii", "psi-i"),
    ("phi-ii-to-psi-i-star", "phi-ii", "psi-i-star"),
    ("psi-i-star-to-psi-ii-star", "psi-i-star", "psi-ii-star"),
    ("psi-i-to-psi-ii", "psi-i", "psi-ii"),
    ("psi-ii-to-psi-ii-star", "psi-ii", "psi-ii-star"),
    ("psi-ii-star-to-psi-ii", "psi-ii-star", "psi-ii"),
];

/// Look up a conversion arrow from `NAMED_ARROWS` by name.
pub fn named_arrow(name: &str) -> Result<(Protocol, EveWitness)> {
    match name {
        "phi-i-to-phi-ii" => arrow_phi_i_to_phi_ii(),
        "phi-ii-to-phi-iii" => arrow_phi_ii_to_phi_iii(),
        "phi-i-to-phi-iii" => arrow_phi_i_to_phi_iii(),
        "phi-ii-to-psi-i" => arrow_phi_ii_to_psi_i(),
        "phi-ii-to-psi-i-star" => arrow_phi_ii_to_psi_i_star(),
        "psi-i-star-to-psi-ii-star" => arrow_psi_i_star_to_psi_ii_star(),
        "psi-i-to-psi-ii" => arrow_psi_i_to_psi_ii(),
        "psi-ii-to-psi-ii-star" => arrow_psi_ii_to_psi_ii_star(),
        "psi-ii-star-to-psi-ii" => arrow_psi_ii_star_to_psi_ii(),
        other => Err(Error::Input(format!("no conversion arrow named {other}"))),
    }
}

/// Two copies of psi-ii-star to phi-iii.
pub fn arrow_psi_ii_star_pair_to_phi_iii() -> Result<(Protocol, EveWitness)> {
    let mut steps = shared_pair_steps()?;
    steps.extend(protocol_p3()?.steps);
    steps.push(bell_unmake(&[("E", 4)], &["EE1", "EE2"])?);
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::append(4, &maximally_mixed(4))?,
            targets: vec!["E".into()],
            outputs: vec![("E".into(), 4), ("F1".into(), 2), ("F2".into(), 2)],
        },
    ))
}

/// phi-iii to two copies of psi-ii-star: Alice and Bob scramble their
/// halves with uniformly chosen Paulis, send them to Eve, and Eve undoes
/// the flag Pauli and reads the leftover indices in the entangled basis.
pub fn arrow_phi_iii_to_psi_ii_star_pair() -> Result<(Protocol, EveWitness)> {
    let blocks: Vec<CMatrix> = (0..4)
        .map(|m| {
            let k = (m / 2) as u8;
            let l = (m % 2) as u8;
            crate::catalog::pauli_xz(k, l)
        })
        .collect();
    let cp = controlled(&blocks);
    let steps = vec![
        local_a(Channel::prepare(&maximally_mixed(4))?, &[], &[("A1", 2), ("A2", 2)]),
        local_a(
            Channel::from_unitary(&cp)?,
            &["A1", "A2", "A"],
            &[("A1", 2), ("A2", 2), ("A", 2)],
        ),
        local_b(Channel::prepare(&maximally_mixed(4))?, &[], &[("B1", 2), ("B2", 2)]),
        local_b(
            Channel::from_unitary(&cp)?,
            &["B1", "B2", "B"],
            &[("B1", 2), ("B2", 2), ("B", 2)],
        ),
        ProtocolStep::QuantumCommAE { label: "A".into() },
        ProtocolStep::QuantumCommBE { label: "B".into() },
        reversible_e(
            ReversiblePair::from_unitary(&cp)?,
            &["E", "A"],
            &[("E", 4), ("A", 2)],
        ),
        bell_unmake(&[("F1", 2), ("F2", 2)], &["A", "B"])?,
    ];
    Ok((
        Protocol { steps },
        EveWitness {
            pair: ReversiblePair::append(2, &maximally_mixed(4))?,
            targets: vec!["F1".into()],
            outputs: vec![("F1".into(), 2), ("E".into(), 4)],
        },
    ))
}

/// One block of a short Markov chain: weight times a state on (A, EL)
/// tensored with a state on (B, ER).
#[derive(Debug, Clone)]
pub struct MarkovBlock {
    pub weight: f64,
    pub left: MultipartiteState,
    pub right: MultipartiteState,
}

fn check_block_labels(s: &MultipartiteState, want: [&str; 2], side: &str) -> Result<()> {
    if s.labels().len() != 2 || !s.has_label(want[0]) || !s.has_label(want[1]) {
        return Err(Error::Consistency(format!(
            "{side} block must live on exactly ({}, {})",
            want[0], want[1]
        )));
    }
    Ok(())
}

/// Generate a Markov chain from scratch. Alice draws the block index,
/// broadcasts it, both parties prepare their block conditioned on the
/// index and forward the environment parts to Eve, then the index copies
/// held by Alice and Bob are discarded. Eve keeps her copy as the flag.
pub fn generate_markov(blocks: &[MarkovBlock]) -> Result<(Protocol, MultipartiteState)> {
    if blocks.is_empty() {
        return Err(Error::Consistency("decomposition has no blocks".into()));
    }
    let total: f64 = blocks.iter().map(|b| b.weight).sum();
    if blocks.iter().any(|b| b.weight < -1e-12) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Consistency(format!(
            "block weights must be nonnegative and sum to one, got total {total}"
        )));
    }
    let da = blocks[0].left.dim_of("A").map_err(consistency)?;
    let dl = blocks[0].left.dim_of("EL").map_err(consistency)?;
    let db = blocks[0].right.dim_of("B").map_err(consistency)?;
    let dr = blocks[0].right.dim_of("ER").map_err(consistency)?;
    for b in blocks {
        check_block_labels(&b.left, ["A", "EL"], "left")?;
        check_block_labels(&b.right, ["B", "ER"], "right")?;
        b.left.check_density()?;
        b.right.check_density()?;
        if b.left.dim_of("A")? != da
            || b.left.dim_of("EL")? != dl
            || b.right.dim_of("B")? != db
            || b.right.dim_of("ER")? != dr
        {
            return Err(Error::Consistency(
                "blocks disagree on subsystem dimensions".into(),
            ));
        }
    }
    let n = blocks.len();
    let mut jmat = CMatrix::zeros(n, n);
    for (j, b) in blocks.iter().enumerate() {
        jmat[(j, j)] = cx(b.weight.max(0.0), 0.0);
    }
    let steps = vec![
        local_a(Channel::prepare(&jmat)?, &[], &[("J", n)]),
        ProtocolStep::BroadcastA {
            register: "J".into(),
            basis: None,
            copy_b: "JB".into(),
            copy_e: "JE".into(),
        },
        local_a(
            controlled_prepare(blocks, n, true)?,
            &["J"],
            &[("J", n), ("A", da), ("EL", dl)],
        ),
        ProtocolStep::QuantumCommAE { label: "EL".into() },
        local_b(
            controlled_prepare(blocks, n, false)?,
            &["JB"],
            &[("JB", n), ("B", db), ("ER", dr)],
        ),
        ProtocolStep::QuantumCommBE { label: "ER".into() },
        local_a(Channel::discard(n), &["J"], &[]),
        local_b(Channel::discard(n), &["JB"], &[]),
    ];
    let proto = Protocol { steps };
    let out = run(&proto, &MultipartiteState::trivial())?;
    let fin = out.state.permuted(&["A", "B", "EL", "ER", "JE"])?;
    Ok((proto, fin))
}

fn consistency(e: Error) -> Error {
    Error::Consistency(e.to_string())
}

/// Channel on the index register that keeps the index and prepares the
/// block state selected by it.
fn controlled_prepare(blocks: &[MarkovBlock], n: usize, left: bool) -> Result<Channel> {
    let mut kraus = Vec::new();
    for (j, b) in blocks.iter().enumerate() {
        let ordered = if left {
            b.left.permuted(&["A", "EL"])?
        } else {
            b.right.permuted(&["B", "ER"])?
        };
        let prep = Channel::prepare(ordered.matrix())?;
        let flag = outer(&basis(n, j), &basis(n, j));
        for k in prep.kraus() {
            kraus.push(kron(&flag, k));
        }
    }
    Channel::new(kraus)
}

/// Teleportation-based generation of an arbitrary target on (A, B, E) with
/// d-dimensional A and B from the maximally entangled state with a fresh
/// environment register. Alice prepares the target locally, sends its
/// environment part to Eve, and teleports its B part to Bob through the
/// shared pair. The broadcast correction index ends up decoupled.
pub fn generate_from_max_nonmarkovian(
    target: &MultipartiteState,
    d: usize,
) -> Result<(Protocol, MultipartiteState)> {
    if target.labels().len() != 3
        || !target.has_label("A")
        || !target.has_label("B")
        || !target.has_label("E")
    {
        return Err(Error::Label(
            "target must live on exactly (A, B, E)".into(),
        ));
    }
    let da = target.dim_of("A")?;
    let db = target.dim_of("B")?;
    let de = target.dim_of("E")?;
    if da != d || db != d {
        return Err(Error::Shape(format!(
            "target has A, B dimensions {da}, {db}, expected {d}"
        )));
    }
    let sigma = target.permuted(&["A", "B", "E"])?.matrix().clone();
    let correction: Vec<CMatrix> = (0..d * d)
        .map(|m| mat_pow(&shift_matrix(d), m / d) * mat_pow(&clock_matrix(d), m % d))
        .collect();
    let steps = vec![
        local_a(
            Channel::prepare(&sigma)?,
            &[],
            &[("TA", d), ("TB", d), ("TE", de)],
        ),
        ProtocolStep::QuantumCommAE { label: "TE".into() },
        local_a(
            Channel::from_unitary(&bell_basis_unitary(d).adjoint())?,
            &["TB", "A"],
            &[("M", d * d)],
        ),
        ProtocolStep::BroadcastA {
            register: "M".into(),
            basis: None,
            copy_b: "MB".into(),
            copy_e: "ME".into(),
        },
        local_b(
            Channel::from_unitary(&controlled(&correction))?,
            &["MB", "B"],
            &[("MB", d * d), ("B", d)],
        ),
        local_a(Channel::discard(d * d), &["M"], &[]),
        local_b(Channel::discard(d * d), &["MB"], &[]),
        local_a(Channel::identity_map(d), &["TA"], &[("A", d)]),
    ];
    let proto = Protocol { steps };
    let input = max_entangled_input(d)?;
    let out = run(&proto, &input)?;
    let fin = out.state.permuted(&["A", "B", "TE", "E", "ME"])?;
    Ok((proto, fin))
}

/// The maximally entangled resource state for `generate_from_max_nonmarkovian`:
/// a d-dimensional entangled pair on (A, B) with a fresh qubit at Eve.
pub fn max_entangled_input(d: usize) -> Result<MultipartiteState> {
    let pair = PureState::new(
        vec![("A".into(), d), ("B".into(), d)],
        bell_vec_d(d, 0, 0),
    )?;
    let env = MultipartiteState::new(
        vec![("E".into(), 2)],
        projector(&basis(2, 0)),
    )?;
    pair.to_density().tensor(&env)
}

/// Witness matching `generate_from_max_nonmarkovian` output against the
/// target state: relabel the target's environment register and append the
/// decoupled leftovers.
pub fn teleport_witness(target: &MultipartiteState) -> Result<EveWitness> {
    let d = target.dim_of("A")?;
    let de = target.dim_of("E")?;
    let junk = kron(&projector(&basis(2, 0)), &maximally_mixed(d * d));
    Ok(EveWitness {
        pair: ReversiblePair::append(de, &junk)?,
        targets: vec!["E".into()],
        outputs: vec![
            ("TE".into(), de),
            ("E".into(), 2),
            ("ME".into(), d * d),
        ],
    })
}

#[derive(Debug, Clone)]
pub struct DilutionOutcome {
    pub epsilon_achieved: f64,
    /// The isometry Eve applies to the received registers to line the
    /// output up with the target.
    pub matching: Isometry,
}

/// One dilution round: starting from a d-dimensional entangled pair, Alice
/// and Bob apply their local isometries, send the ancilla registers to
/// Eve, and Eve applies the best matching isometry onto her register. The
/// matching isometry maximizes fidelity with the target and is found from
/// the overlap matrix, then polished by seeded random search.
pub fn dilution_step(
    psi: &PureState,
    u1: &Isometry,
    u2: &Isometry,
    seed: u64,
    restarts: usize,
) -> Result<(Protocol, DilutionOutcome)> {
    if psi.labels().len() != 3
        || !psi.has_label("A")
        || !psi.has_label("B")
        || !psi.has_label("E")
    {
        return Err(Error::Label("target must live on exactly (A, B, E)".into()));
    }
    let d = u1.in_dim();
    if u2.in_dim() != d {
        return Err(Error::Shape(format!(
            "local isometries disagree on the pair dimension: {d} vs {}",
            u2.in_dim()
        )));
    }
    let da = psi.dim_of("A")?;
    let db = psi.dim_of("B")?;
    let de = psi.dim_of("E")?;
    if u1.out_dim() % da != 0 || u2.out_dim() % db != 0 {
        return Err(Error::Shape(
            "local isometry output does not factor into system times ancilla".into(),
        ));
    }
    let da0 = u1.out_dim() / da;
    let db0 = u2.out_dim() / db;
    let dg = da0 * db0;
    if de < dg {
        return Err(Error::Shape(format!(
            "environment dimension {de} cannot absorb the {dg}-dimensional ancillas"
        )));
    }
    let input = PureState::new(
        vec![("A".into(), d), ("B".into(), d)],
        bell_vec_d(d, 0, 0),
    )?;
    let chi = u1.apply_pure(&input, &["A"], &[("A".into(), da), ("A0".into(), da0)])?;
    let chi = u2.apply_pure(&chi, &["B"], &[("B".into(), db), ("B0".into(), db0)])?;
    let chi = chi.permuted(&["A", "B", "A0", "B0"])?;
    let tgt = psi.permuted(&["A", "B", "E"])?;
    if tgt.dim_of("A")? != da || tgt.dim_of("B")? != db {
        return Err(Error::Shape("target dims changed under permutation".into()));
    }
    let camps = chi.amplitudes();
    let tamps = tgt.amplitudes();
    let mut y = CMatrix::zeros(dg, de);
    for ab in 0..da * db {
        for g in 0..dg {
            let c = camps[ab * dg + g];
            if c.norm_sqr() < 1e-60 {
                continue;
            }
            for e in 0..de {
                y[(g, e)] += c * tamps[ab * de + e].conj();
            }
        }
    }
    let objective = |vars: &[CMatrix]| -> f64 { 1.0 - (&vars[0] * &y).trace().norm_sqr() };
    let mut best_w = overlap_match(&y);
    let mut best_val = objective(&[best_w.clone()]);
    let attempts = restarts.max(32);
    for idx in 0..=attempts {
        let mut rng = rng_for(seed, 0xd117, idx as u64);
        let mut vars = if idx == 0 {
            vec![best_w.clone()]
        } else {
            vec![random_isometry(dg, de, &mut rng).matrix().clone()]
        };
        let cfg = SearchConfig {
            max_iters: 250,
            step_tolerance: 1e-9,
            target: 1e-13,
            race_baseline: Some(best_val),
        };
        let out = refine(&mut vars, objective, &cfg, &mut rng);
        if out.value < best_val {
            best_val = out.value;
            best_w = vars.into_iter().next().expect("one variable");
        }
        if best_val <= 1e-13 {
            break;
        }
    }
    let matching = Isometry::new(best_w)?;
    let steps = vec![
        local_a(
            u1.as_channel(),
            &["A"],
            &[("A", da), ("A0", da0)],
        ),
        local_b(
            u2.as_channel(),
            &["B"],
            &[("B", db), ("B0", db0)],
        ),
        ProtocolStep::QuantumCommAE { label: "A0".into() },
        ProtocolStep::QuantumCommBE { label: "B0".into() },
        reversible_e(
            ReversiblePair::from_isometry(&matching)?,
            &["A0", "B0"],
            &[("E", de)],
        ),
    ];
    let proto = Protocol { steps };
    let out = run(&proto, &input.to_density())?;
    let epsilon_achieved = trace_norm_distance(&out.state, &psi.to_density())?;
    Ok((
        proto,
        DilutionOutcome {
            epsilon_achieved,
            matching,
        },
    ))
}

/// Fidelity-maximizing isometry for the overlap matrix y, obtained from
/// the eigendecomposition of y^dag y with orthonormal completion on the
/// null space.
fn overlap_match(y: &CMatrix) -> CMatrix {
    let dg = y.nrows();
    let de = y.ncols();
    let (vals, vecs) = hermitian_eig(&(y.adjoint() * y));
    let mut order: Vec<usize> = (0..de).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let mut pairs: Vec<(CVector, CVector)> = Vec::new();
    let mut leftovers: Vec<CVector> = Vec::new();
    for &i in &order {
        let v: CVector = vecs.column(i).into();
        if vals[i] > 1e-18 && pairs.len() < dg {
            let u = (y * &v).unscale(vals[i].sqrt());
            pairs.push((v, u));
        } else {
            leftovers.push(v);
        }
    }
    let mut used: Vec<CVector> = pairs.iter().map(|(_, u)| u.clone()).collect();
    let mut spare = leftovers.into_iter();
    while pairs.len() < dg {
        let u = next_orthogonal(&used, dg);
        let v = spare.next().expect("null space large enough");
        used.push(u.clone());
        pairs.push((v, u));
    }
    let mut w = CMatrix::zeros(de, dg);
    for (v, u) in &pairs {
        w += outer(v, u);
    }
    w
}

fn next_orthogonal(used: &[CVector], dim: usize) -> CVector {
    for k in 0..dim {
        let mut cand = basis(dim, k);
        for u in used {
            let overlap = u.dotc(&cand);
            cand -= u * overlap;
        }
        let norm = cand.norm();
        if norm > 1e-6 {
            return cand.unscale(norm);
        }
    }
    unreachable!("fewer used directions than the dimension")
}

/// Mixed five-register qubit state on (A, A2, B, B2, E), sampled as a pure
/// state on six registers with the last one traced out.
pub fn random_penta_state<R: Rng>(rng: &mut R) -> Result<MultipartiteState> {
    let g = crate::channels::random_isometry(1, 64, rng);
    let amps: CVector = g.matrix().column(0).into();
    let dims: Vec<(String, usize)> = ["A", "A2", "B", "B2", "E", "H"]
        .iter()
        .map(|l| (l.to_string(), 2))
        .collect();
    let psi = PureState::new(dims, amps)?;
    psi.to_density().partial_trace(&["A", "A2", "B", "B2", "E"])
}

/// One random free step of the given class (0 to 6) on the five-register
/// layout used by `random_penta_state`.
pub fn random_free_step<R: Rng>(class: usize, rng: &mut R) -> Result<ProtocolStep> {
    let random_channel = |rng: &mut R| -> Result<Channel> {
        let v = random_isometry(2, 4, rng);
        Channel::from_stinespring(v.matrix(), 2, 2)
    };
    Ok(match class {
        0 => local_a(random_channel(rng)?, &["A"], &[("A", 2)]),
        1 => local_b(random_channel(rng)?, &["B"], &[("B", 2)]),
        2 => reversible_e(
            ReversiblePair::from_unitary(random_isometry(2, 2, rng).matrix())?,
            &["E"],
            &[("E", 2)],
        ),
        3 => ProtocolStep::BroadcastA {
            register: "A2".into(),
            basis: Some(random_isometry(2, 2, rng).matrix().clone()),
            copy_b: "CB".into(),
            copy_e: "CE".into(),
        },
        4 => ProtocolStep::BroadcastB {
            register: "B2".into(),
            basis: Some(random_isometry(2, 2, rng).matrix().clone()),
            copy_a: "CA".into(),
            copy_e: "CE".into(),
        },
        5 => ProtocolStep::QuantumCommAE { label: "A2".into() },
        6 => ProtocolStep::QuantumCommBE { label: "B2".into() },
        other => {
            return Err(Error::Input(format!(
                "step class {other} out of range 0..=6"
            )))
        }
    })
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    dim: usize,
    entries: Vec<(f64, f64)>,
}

fn matrix_to_file(m: &CMatrix) -> MatrixFile {
    let dim = m.nrows();
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            entries.push((m[(i, j)].re, m[(i, j)].im));
        }
    }
    MatrixFile { dim, entries }
}

fn matrix_from_file(f: &MatrixFile) -> Result<CMatrix> {
    if f.entries.len() != f.dim * f.dim {
        return Err(Error::Shape(format!(
            "matrix file has {} entries for dimension {}",
            f.entries.len(),
            f.dim
        )));
    }
    let mut m = CMatrix::zeros(f.dim, f.dim);
    for i in 0..f.dim {
        for j in 0..f.dim {
            let (re, im) = f.entries[i * f.dim + j];
            m[(i, j)] = cx(re, im);
        }
    }
    Ok(m)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
enum StepFile {
    LocalA {
        channel: ChannelFile,
        targets: Vec<String>,
        outputs: Vec<(String, usize)>,
    },
    LocalB {
        channel: ChannelFile,
        targets: Vec<String>,
        outputs: Vec<(String, usize)>,
    },
    ReversibleE {
        forward: ChannelFile,
        inverse: ChannelFile,
        targets: Vec<String>,
        outputs: Vec<(String, usize)>,
    },
    BroadcastA {
        register: String,
        basis: Option<MatrixFile>,
        copy_b: String,
        copy_e: String,
    },
    BroadcastB {
        register: String,
        basis: Option<MatrixFile>,
        copy_a: String,
        copy_e: String,
    },
    #[serde(rename = "quantum_comm_ae")]
    QuantumCommAE { label: String },
    #[serde(rename = "quantum_comm_be")]
    QuantumCommBE { label: String },
}

#[derive(Serialize, Deserialize)]
struct WitnessFile {
    forward: ChannelFile,
    inverse: ChannelFile,
    targets: Vec<String>,
    outputs: Vec<(String, usize)>,
}

#[derive(Serialize, Deserialize)]
struct ProtocolFile {
    steps: Vec<StepFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reversal: Option<WitnessFile>,
}

fn step_to_file(step: &ProtocolStep) -> StepFile {
    match step {
        ProtocolStep::LocalA {
            channel,
            targets,
            outputs,
        } => StepFile::LocalA {
            channel: channel_to_file(channel),
            targets: targets.clone(),
            outputs: outputs.clone(),
        },
        ProtocolStep::LocalB {
            channel,
            targets,
            outputs,
        } => StepFile::LocalB {
            channel: channel_to_file(channel),
            targets: targets.clone(),
            outputs: outputs.clone(),
        },
        ProtocolStep::ReversibleE {
            pair,
            targets,
            outputs,
        } => StepFile::ReversibleE {
            forward: channel_to_file(&pair.forward),
            inverse: channel_to_file(&pair.inverse),
            targets: targets.clone(),
            outputs: outputs.clone(),
        },
        ProtocolStep::BroadcastA {
            register,
            basis,
            copy_b,
            copy_e,
        } => StepFile::BroadcastA {
            register: register.clone(),
            basis: basis.as_ref().map(matrix_to_file),
            copy_b: copy_b.clone(),
            copy_e: copy_e.clone(),
        },
        ProtocolStep::BroadcastB {
            register,
            basis,
            copy_a,
            copy_e,
        } => StepFile::BroadcastB {
            register: register.clone(),
            basis: basis.as_ref().map(matrix_to_file),
            copy_a: copy_a.clone(),
            copy_e: copy_e.clone(),
        },
        ProtocolStep::QuantumCommAE { label } => StepFile::QuantumCommAE {
            label: label.clone(),
        },
        ProtocolStep::QuantumCommBE { label } => StepFile::QuantumCommBE {
            label: label.clone(),
        },
    }
}

fn step_from_file(f: &StepFile) -> Result<ProtocolStep> {
    Ok(match f {
        StepFile::LocalA {
            channel,
            targets,
            outputs,
        } => ProtocolStep::LocalA {
            channel: channel_from_file(channel)?,
            targets: targets.clone(),
            outputs: outputs.clone(),
        },
        StepFile::LocalB {
            channel,
            targets,
            outputs,
        } => ProtocolStep::LocalB {
            channel: channel_from_file(channel)?,
            targets: targets.clone(),
            outputs: outputs.clone(),
        },
        StepFile::ReversibleE {
            forward,
            inverse,
            targets,
            outputs,
        } => ProtocolStep::ReversibleE {
            pair: ReversiblePair {
                forward: channel_from_file(forward)?,
                inverse: channel_from_file(inverse)?,
            },
            targets: targets.clone(),
            outputs: outputs.clone(),
        },
        StepFile::BroadcastA {
            register,
            basis,
            copy_b,
            copy_e,
        } => ProtocolStep::BroadcastA {
            register: register.clone(),
            basis: basis.as_ref().map(matrix_from_file).transpose()?,
            copy_b: copy_b.clone(),
            copy_e: copy_e.clone(),
        },
        StepFile::BroadcastB {
            register,
            basis,
            copy_a,
            copy_e,
        } => ProtocolStep::BroadcastB {
            register: register.clone(),
            basis: basis.as_ref().map(matrix_from_file).transpose()?,
            copy_a: copy_a.clone(),
            copy_e: copy_e.clone(),
        },
        StepFile::QuantumCommAE { label } => ProtocolStep::QuantumCommAE {
            label: label.clone(),
        },
        StepFile::QuantumCommBE { label } => ProtocolStep::QuantumCommBE {
            label: label.clone(),
        },
    })
}

fn witness_to_file(w: &EveWitness) -> WitnessFile {
    WitnessFile {
        forward: channel_to_file(&w.pair.forward),
        inverse: channel_to_file(&w.pair.inverse),
        targets: w.targets.clone(),
        outputs: w.outputs.clone(),
    }
}

fn witness_from_file(f: &WitnessFile) -> Result<EveWitness> {
    Ok(EveWitness {
        pair: ReversiblePair {
            forward: channel_from_file(&f.forward)?,
            inverse: channel_from_file(&f.inverse)?,
        },
        targets: f.targets.clone(),
        outputs: f.outputs.clone(),
    })
}

pub fn protocol_to_json(p: &Protocol) -> String {
    let file = ProtocolFile {
        steps: p.steps.iter().map(step_to_file).collect(),
        reversal: None,
    };
    serde_json::to_string_pretty(&file).expect("protocol serialization cannot fail")
}

/// Serialize a protocol together with the reversal witness that certifies a
/// conversion, so a single file carries everything `convert-verify` needs.
pub fn conversion_to_json(p: &Protocol, w: &EveWitness) -> String {
    let file = ProtocolFile {
        steps: p.steps.iter().map(step_to_file).collect(),
        reversal: Some(witness_to_file(w)),
    };
    serde_json::to_string_pretty(&file).expect("protocol serialization cannot fail")
}

pub fn protocol_from_json(text: &str) -> Result<Protocol> {
    Ok(conversion_from_json(text)?.0)
}

pub fn conversion_from_json(text: &str) -> Result<(Protocol, Option<EveWitness>)> {
    let file: ProtocolFile = serde_json::from_str(text)?;
    let steps = file
        .steps
        .iter()
        .map(step_from_file)
        .collect::<Result<Vec<_>>>()?;
    let witness = file
        .reversal
        .as_ref()
        .map(witness_from_file)
        .transpose()?;
    Ok((Protocol { steps }, witness))
}

pub fn save_protocol(p: &Protocol, path: &Path) -> Result<()> {
    std::fs::write(path, protocol_to_json(p))?;
    Ok(())
}

pub fn save_conversion(p: &Protocol, w: &EveWitness, path: &Path) -> Result<()> {
    std::fs::write(path, conversion_to_json(p, w))?;
    Ok(())
}

pub fn load_protocol(path: &Path) -> Result<Protocol> {
    let text = std::fs::read_to_string(path)?;
    protocol_from_json(&text)
}

pub fn load_conversion(path: &Path) -> Result<(Protocol, Option<EveWitness>)> {
    let text = std::fs::read_to_string(path)?;
    conversion_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::make;
    use crate::entropy::cqmi;
    use crate::markov::is_markov;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state_of(name: &str) -> MultipartiteState {
        make(name).unwrap().state
    }

    fn assert_arrow(from: &str, to: &str, arrow: (Protocol, EveWitness)) {
        let s1 = state_of(from);
        let s2 = state_of(to);
        let verdict = check_convertibility(&s1, &s2, &arrow.0, &arrow.1, 1e-9).unwrap();
        assert!(
            verdict.ok,
            "{from} -> {to} missed by {:.3e}",
            verdict.epsilon_achieved
        );
    }

    #[test]
    fn empty_protocol_is_identity() {
        let s = state_of("phi-ii");
        let out = run(&Protocol::default(), &s).unwrap();
        assert!(trace_norm_distance(&out.state, &s).unwrap() < 1e-14);
        assert_eq!(
            out.owners,
            vec![
                ("A".to_string(), Party::Alice),
                ("B".to_string(), Party::Bob),
                ("E".to_string(), Party::Eve)
            ]
        );
    }

    #[test]
    fn ownership_is_enforced() {
        let s = state_of("phi-ii");
        let bad = Protocol {
            steps: vec![local_a(Channel::dephasing(2), &["B"], &[("B", 2)])],
        };
        assert!(matches!(run(&bad, &s), Err(Error::Contract(_))));

        let bad_comm = Protocol {
            steps: vec![ProtocolStep::QuantumCommAE { label: "E".into() }],
        };
        assert!(matches!(run(&bad_comm, &s), Err(Error::Contract(_))));

        // after sending A to Eve, Alice cannot touch it again
        let resend = Protocol {
            steps: vec![
                ProtocolStep::QuantumCommAE { label: "A".into() },
                local_a(Channel::dephasing(2), &["A"], &[("A", 2)]),
            ],
        };
        assert!(matches!(run(&resend, &s), Err(Error::Contract(_))));
    }

    #[test]
    fn irreversible_environment_step_is_rejected() {
        let s = state_of("phi-ii");
        let bogus = ReversiblePair {
            forward: Channel::dephasing(2),
            inverse: Channel::identity_map(2),
        };
        let p = Protocol {
            steps: vec![reversible_e(bogus, &["E"], &[("E", 2)])],
        };
        assert!(matches!(run(&p, &s), Err(Error::Contract(_))));
    }

    #[test]
    fn broadcast_correlates_three_registers() {
        let plus = {
            let mut v = CVector::zeros(2);
            v[0] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v[1] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v
        };
        let s = MultipartiteState::new(vec![("A2".into(), 2)], projector(&plus)).unwrap();
        let p = Protocol {
            steps: vec![ProtocolStep::BroadcastA {
                register: "A2".into(),
                basis: None,
                copy_b: "CB".into(),
                copy_e: "CE".into(),
            }],
        };
        let out = run(&p, &s).unwrap();
        let mut expect = CMatrix::zeros(8, 8);
        expect[(0, 0)] = cx(0.5, 0.0);
        expect[(7, 7)] = cx(0.5, 0.0);
        assert!((out.state.matrix() - expect).norm() < 1e-12);
        assert_eq!(out.held_by(Party::Bob), vec!["CB".to_string()]);
        assert_eq!(out.held_by(Party::Eve), vec!["CE".to_string()]);

        // measuring |+> in the Hadamard basis is deterministic
        let ph = Protocol {
            steps: vec![ProtocolStep::BroadcastA {
                register: "A2".into(),
                basis: Some(hadamard()),
                copy_b: "CB".into(),
                copy_e: "CE".into(),
            }],
        };
        let out = run(&ph, &s).unwrap();
        let mut det = CMatrix::zeros(8, 8);
        det[(0, 0)] = cx(1.0, 0.0);
        assert!((out.state.matrix() - det).norm() < 1e-12);
    }

    #[test]
    fn coin_flip_reaches_the_two_flag_mixture() {
        let out = run(&protocol_p1().unwrap(), &state_of("phi-i")).unwrap();
        let expect = state_of("phi-ii")
            .relabeled("E", "CE")
            .unwrap()
            .tensor(
                &MultipartiteState::new(vec![("E".into(), 2)], projector(&basis(2, 0))).unwrap(),
            )
            .unwrap();
        assert!(trace_norm_distance(&out.state, &expect).unwrap() < 1e-12);
        assert_arrow("phi-i", "phi-ii", arrow_phi_i_to_phi_ii().unwrap());
    }

    #[test]
    fn second_coin_reaches_the_four_flag_mixture() {
        assert_arrow("phi-ii", "phi-iii", arrow_phi_ii_to_phi_iii().unwrap());
        assert_arrow("phi-i", "phi-iii", arrow_phi_i_to_phi_iii().unwrap());
    }

    #[test]
    fn entangling_arrow_reaches_the_ghz_state() {
        assert_arrow("phi-ii", "psi-i", arrow_phi_ii_to_psi_i().unwrap());
    }

    #[test]
    fn dephasing_arrow_reaches_the_classical_copy() {
        assert_arrow("phi-ii", "psi-i-star", arrow_phi_ii_to_psi_i_star().unwrap());
    }

    #[test]
    fn coin_arrows_reach_the_flagged_mixtures() {
        assert_arrow(
            "psi-i-star",
            "psi-ii-star",
            arrow_psi_i_star_to_psi_ii_star().unwrap(),
        );
        assert_arrow("psi-i", "psi-ii", arrow_psi_i_to_psi_ii().unwrap());
    }

    #[test]
    fn flag_swap_arrows_run_both_ways() {
        assert_arrow(
            "psi-ii",
            "psi-ii-star",
            arrow_psi_ii_to_psi_ii_star().unwrap(),
        );
        let s1 = state_of("psi-ii-star");
        let s2 = state_of("psi-ii");
        let (p, w) = arrow_psi_ii_star_to_psi_ii().unwrap();
        let verdict = check_convertibility(&s1, &s2, &p, &w, 1e-9).unwrap();
        assert!(verdict.ok, "missed by {:.3e}", verdict.epsilon_achieved);
    }

    fn shared_pairs() -> MultipartiteState {
        let pair = projector(&bell_vec(0, 0));
        let a = MultipartiteState::new(vec![("A0".into(), 2), ("EE1".into(), 2)], pair.clone())
            .unwrap();
        let b = MultipartiteState::new(vec![("B0".into(), 2), ("EE2".into(), 2)], pair).unwrap();
        a.tensor(&b).unwrap()
    }

    #[test]
    fn controlled_phase_core_builds_the_flagged_bell_mixture() {
        let input = state_of("psi-ii-star").tensor(&shared_pairs()).unwrap();
        let mut steps = protocol_p2().unwrap().steps;
        steps.push(bell_unmake(&[("EM", 4)], &["EE1", "EE2"]).unwrap());
        let out = run(&Protocol { steps }, &input).unwrap();
        let expect = state_of("psi-ii")
            .relabeled("E", "EM")
            .unwrap()
            .tensor(
                &MultipartiteState::new(vec![("E".into(), 2)], maximally_mixed(2)).unwrap(),
            )
            .unwrap();
        assert!(trace_norm_distance(&out.state, &expect).unwrap() < 1e-10);
    }

    #[test]
    fn controlled_pauli_core_builds_the_four_flag_mixture() {
        let copy1 = state_of("psi-ii-star")
            .relabeled("A", "A1")
            .unwrap()
            .relabeled("B", "B1")
            .unwrap()
            .relabeled("E", "F1")
            .unwrap();
        let copy2 = state_of("psi-ii-star")
            .relabeled("A", "A2")
            .unwrap()
            .relabeled("B", "B2")
            .unwrap()
            .relabeled("E", "F2")
            .unwrap();
        let s1 = copy1.tensor(&copy2).unwrap();
        let (p, w) = arrow_psi_ii_star_pair_to_phi_iii().unwrap();
        let verdict = check_convertibility(&s1, &state_of("phi-iii"), &p, &w, 1e-9).unwrap();
        assert!(verdict.ok, "missed by {:.3e}", verdict.epsilon_achieved);
    }

    #[test]
    fn twirl_extracts_two_copies_from_the_four_flag_mixture() {
        let copy1 = state_of("psi-ii-star")
            .relabeled("A", "A1")
            .unwrap()
            .relabeled("B", "B1")
            .unwrap()
            .relabeled("E", "F1")
            .unwrap();
        let copy2 = state_of("psi-ii-star")
            .relabeled("A", "A2")
            .unwrap()
            .relabeled("B", "B2")
            .unwrap()
            .relabeled("E", "F2")
            .unwrap();
        let s2 = copy1.tensor(&copy2).unwrap();
        let (p, w) = arrow_phi_iii_to_psi_ii_star_pair().unwrap();
        let verdict = check_convertibility(&state_of("phi-iii"), &s2, &p, &w, 1e-9).unwrap();
        assert!(verdict.ok, "missed by {:.3e}", verdict.epsilon_achieved);
    }

    fn bell_block() -> MultipartiteState {
        MultipartiteState::new(
            vec![("A".into(), 2), ("EL".into(), 2)],
            projector(&bell_vec(0, 1)),
        )
        .unwrap()
    }

    fn product_block(da: usize, dl: usize) -> MultipartiteState {
        MultipartiteState::new(
            vec![("A".into(), da), ("EL".into(), dl)],
            kron(&maximally_mixed(da), &projector(&basis(dl, 0))),
        )
        .unwrap()
    }

    #[test]
    fn markov_generation_matches_the_block_decomposition() {
        let right0 = MultipartiteState::new(
            vec![("B".into(), 2), ("ER".into(), 2)],
            kron(&projector(&basis(2, 1)), &maximally_mixed(2)),
        )
        .unwrap();
        let right1 = MultipartiteState::new(
            vec![("B".into(), 2), ("ER".into(), 2)],
            projector(&bell_vec(1, 0)),
        )
        .unwrap();
        let blocks = vec![
            MarkovBlock {
                weight: 0.3,
                left: bell_block(),
                right: right0.clone(),
            },
            MarkovBlock {
                weight: 0.7,
                left: product_block(2, 2),
                right: right1.clone(),
            },
        ];
        let (_, fin) = generate_markov(&blocks).unwrap();
        let mut expect = CMatrix::zeros(32, 32);
        for (j, b) in blocks.iter().enumerate() {
            let piece = kron(
                &kron(
                    &b.left.permuted(&["A", "EL"]).unwrap().matrix().clone(),
                    &b.right.permuted(&["B", "ER"]).unwrap().matrix().clone(),
                ),
                &projector(&basis(2, j)),
            );
            // reorder (A, EL, B, ER, JE) -> (A, B, EL, ER, JE)
            let tmp = MultipartiteState::new(
                vec![
                    ("A".into(), 2),
                    ("EL".into(), 2),
                    ("B".into(), 2),
                    ("ER".into(), 2),
                    ("JE".into(), 2),
                ],
                piece,
            )
            .unwrap();
            expect += tmp
                .permuted(&["A", "B", "EL", "ER", "JE"])
                .unwrap()
                .matrix()
                .scale(b.weight);
        }
        assert!((fin.matrix() - expect).norm() < 1e-10);
        let verdict = is_markov(&fin, &["A"], &["B"], &["EL", "ER", "JE"], 1e-8).unwrap();
        assert!(verdict.is_markov);
        assert!(verdict.cqmi.abs() < 1e-9);
        assert!(verdict.petz_residual < 1e-8);
    }

    #[test]
    fn bad_markov_decompositions_are_rejected() {
        let blocks = vec![MarkovBlock {
            weight: 0.5,
            left: bell_block(),
            right: product_block(2, 2).relabeled("A", "B").unwrap().relabeled("EL", "ER").unwrap(),
        }];
        assert!(matches!(
            generate_markov(&blocks),
            Err(Error::Consistency(_))
        ));
        assert!(matches!(generate_markov(&[]), Err(Error::Consistency(_))));
    }

    #[test]
    fn markov_chain_survives_free_processing() {
        let right = MultipartiteState::new(
            vec![("B".into(), 2), ("ER".into(), 2)],
            projector(&bell_vec(0, 0)),
        )
        .unwrap();
        let blocks = vec![
            MarkovBlock {
                weight: 0.5,
                left: bell_block(),
                right: right.clone(),
            },
            MarkovBlock {
                weight: 0.5,
                left: product_block(2, 2),
                right,
            },
        ];
        let (_, fin) = generate_markov(&blocks).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = random_isometry(2, 4, &mut rng);
        let p = Protocol {
            steps: vec![
                local_a(
                    Channel::from_stinespring(v.matrix(), 2, 2).unwrap(),
                    &["A"],
                    &[("A", 2)],
                ),
                reversible_e(
                    ReversiblePair::from_unitary(random_isometry(2, 2, &mut rng).matrix())
                        .unwrap(),
                    &["EL"],
                    &[("EL", 2)],
                ),
            ],
        };
        let out = run(&p, &fin).unwrap();
        let verdict = is_markov(&out.state, &["A"], &["B"], &["EL", "ER", "JE"], 1e-8).unwrap();
        assert!(verdict.is_markov);
    }

    #[test]
    fn teleportation_reproduces_the_target() {
        for name in ["phi-i", "psi-i", "phi-iii"] {
            let target = state_of(name);
            let (_, fin) = generate_from_max_nonmarkovian(&target, 2).unwrap();
            let main = fin.partial_trace(&["A", "B", "TE"]).unwrap();
            let relabeled = target.relabeled("E", "TE").unwrap();
            assert!(
                trace_norm_distance(&main, &relabeled).unwrap() < 1e-9,
                "teleported {name} differs"
            );
            // leftover registers decouple
            let junk = MultipartiteState::new(
                vec![("E".into(), 2), ("ME".into(), 4)],
                kron(&projector(&basis(2, 0)), &maximally_mixed(4)),
            )
            .unwrap();
            let expect = relabeled.tensor(&junk).unwrap();
            assert!(trace_norm_distance(&fin, &expect).unwrap() < 1e-9);
        }
    }

    #[test]
    fn teleportation_generation_is_a_free_conversion() {
        let target = state_of("psi-i");
        let (p, _) = generate_from_max_nonmarkovian(&target, 2).unwrap();
        let witness = teleport_witness(&target).unwrap();
        let verdict =
            check_convertibility(&max_entangled_input(2).unwrap(), &target, &p, &witness, 1e-8)
                .unwrap();
        assert!(verdict.ok, "missed by {:.3e}", verdict.epsilon_achieved);
    }

    #[test]
    fn dilution_builds_the_ghz_from_one_ebit() {
        let mut v = CVector::zeros(8);
        v[0] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[7] = cx(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let ghz = PureState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 2)],
            v,
        )
        .unwrap();
        let mut copy = CMatrix::zeros(4, 2);
        copy[(0, 0)] = cx(1.0, 0.0);
        copy[(3, 1)] = cx(1.0, 0.0);
        let u1 = Isometry::new(copy).unwrap();
        let u2 = Isometry::new(identity(2)).unwrap();
        let (_, verdict) = dilution_step(&ghz, &u1, &u2, 7, 32).unwrap();
        assert!(
            verdict.epsilon_achieved < 1e-8,
            "ghz dilution missed by {:.3e}",
            verdict.epsilon_achieved
        );
    }

    #[test]
    fn dilution_handles_a_product_target() {
        let mut v = CVector::zeros(8);
        v[0] = cx(1.0, 0.0);
        let product = PureState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 2)],
            v,
        )
        .unwrap();
        let embed = |local: usize| {
            let mut m = CMatrix::zeros(local, 1);
            m[(0, 0)] = cx(1.0, 0.0);
            Isometry::new(m).unwrap()
        };
        let (_, verdict) = dilution_step(&product, &embed(4), &embed(2), 3, 32).unwrap();
        assert!(
            verdict.epsilon_achieved < 1e-9,
            "product dilution missed by {:.3e}",
            verdict.epsilon_achieved
        );
    }

    #[test]
    fn convertibility_examples_behave() {
        let s = state_of("phi-ii");
        let identity_witness = EveWitness {
            pair: ReversiblePair::from_unitary(&identity(2)).unwrap(),
            targets: vec!["E".into()],
            outputs: vec![("E".into(), 2)],
        };
        let verdict =
            check_convertibility(&s, &s, &Protocol::default(), &identity_witness, 1e-12).unwrap();
        assert!(verdict.ok);
        assert!(verdict.epsilon_achieved < 1e-13);

        // orthogonal targets stay far apart
        let other = MultipartiteState::new(
            vec![("A".into(), 2), ("B".into(), 2), ("E".into(), 2)],
            kron(&projector(&bell_vec(0, 1)), &projector(&basis(2, 0))),
        )
        .unwrap();
        let phi_i = state_of("phi-i");
        let verdict = check_convertibility(
            &phi_i,
            &other,
            &Protocol::default(),
            &EveWitness {
                pair: ReversiblePair::from_unitary(&identity(2)).unwrap(),
                targets: vec!["E".into()],
                outputs: vec![("E".into(), 2)],
            },
            1e-8,
        )
        .unwrap();
        assert!(!verdict.ok);
        assert!((verdict.epsilon_achieved - 2.0).abs() < 1e-9);

        // a broken witness is refused outright
        let broken = EveWitness {
            pair: ReversiblePair {
                forward: Channel::dephasing(2),
                inverse: Channel::identity_map(2),
            },
            targets: vec!["E".into()],
            outputs: vec![("E".into(), 2)],
        };
        assert!(matches!(
            check_convertibility(&phi_i, &phi_i, &Protocol::default(), &broken, 1e-8),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn free_steps_never_raise_the_conditional_information() {
        for class in 0..7 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + class as u64);
            let s = random_penta_state(&mut rng).unwrap();
            let before = cqmi(&s, &["A", "A2"], &["B", "B2"], &["E"]).unwrap();
            let step = random_free_step(class, &mut rng).unwrap();
            let out = run(
                &Protocol { steps: vec![step] },
                &s,
            )
            .unwrap();
            let a = out.held_by(Party::Alice);
            let b = out.held_by(Party::Bob);
            let e = out.held_by(Party::Eve);
            let after = cqmi(
                &out.state,
                &as_refs(&a),
                &as_refs(&b),
                &as_refs(&e),
            )
            .unwrap();
            assert!(
                after <= before + 1e-9,
                "class {class} raised the objective: {before} -> {after}"
            );
        }
    }

    #[test]
    fn protocol_files_round_trip() {
        let cases = vec![
            protocol_p1().unwrap(),
            arrow_phi_ii_to_psi_i().unwrap().0,
            arrow_phi_ii_to_psi_i_star().unwrap().0,
        ];
        for p in cases {
            let text = protocol_to_json(&p);
            let back = protocol_from_json(&text).unwrap();
            let s = state_of("phi-ii");
            let out1 = run(&p, &s);
            let out2 = run(&back, &s);
            match (out1, out2) {
                (Ok(a), Ok(b)) => {
                    assert!(trace_norm_distance(&a.state, &b.state).unwrap() < 1e-12);
                    assert_eq!(a.owners, b.owners);
                }
                (Err(_), Err(_)) => {}
                _ => panic!("round trip changed runnability"),
            }
        }

        // broadcast basis survives the round trip
        let p = Protocol {
            steps: vec![ProtocolStep::BroadcastA {
                register: "A".into(),
                basis: Some(hadamard()),
                copy_b: "CB".into(),
                copy_e: "CE".into(),
            }],
        };
        let text = protocol_to_json(&p);
        let back = protocol_from_json(&text).unwrap();
        let s = state_of("phi-i");
        let a = run(&p, &s).unwrap();
        let b = run(&back, &s).unwrap();
        assert!(trace_norm_distance(&a.state, &b.state).unwrap() < 1e-12);

        assert!(protocol_from_json("{\"steps\": [{\"class\": \"nope\"}]}").is_err());
    }

    #[test]
    fn conversion_bundles_round_trip() {
        let (p, w) = arrow_phi_i_to_phi_ii().unwrap();
        let text = conversion_to_json(&p, &w);
        let (p2, w2) = conversion_from_json(&text).unwrap();
        let w2 = w2.expect("reversal block survives");
        let from = state_of("phi-i");
        let to = state_of("phi-ii");
        let verdict = check_convertibility(&from, &to, &p2, &w2, 1e-8).unwrap();
        assert!(verdict.ok);

        // plain protocol files decode with no witness attached
        let (_, none) = conversion_from_json(&protocol_to_json(&p)).unwrap();
        assert!(none.is_none());
    }
}
