//! End-to-end protocol workflows through the file formats: save, reload,
//! re-run, and verify conversions exactly as the command line would.

use tempfile::tempdir;

use nonmarkov::catalog::make;
use nonmarkov::channels::{Channel, ReversiblePair};
use nonmarkov::freeops::{
    arrow_phi_i_to_phi_ii, arrow_phi_ii_to_psi_i, check_convertibility, generate_markov, run,
    EveWitness, MarkovBlock, Protocol, ProtocolStep,
};
use nonmarkov::markov::is_markov;
use nonmarkov::tensor::{
    basis, load_state, projector, save_state, trace_norm_distance, MultipartiteState,
};
use nonmarkov::Error;

#[test]
fn conversion_workflow_survives_the_file_formats() {
    let dir = tempdir().unwrap();
    let from_path = dir.path().join("from.state");
    let to_path = dir.path().join("to.state");
    let proto_path = dir.path().join("step.protocol");

    let from = make("phi-i").unwrap().state;
    let to = make("phi-ii").unwrap().state;
    let (protocol, witness) = arrow_phi_i_to_phi_ii().unwrap();

    save_state(&from, &from_path).unwrap();
    save_state(&to, &to_path).unwrap();
    nonmarkov::freeops::save_protocol(&protocol, &proto_path).unwrap();

    let from2 = load_state(&from_path).unwrap();
    let to2 = load_state(&to_path).unwrap();
    let protocol2 = nonmarkov::freeops::load_protocol(&proto_path).unwrap();

    let direct = run(&protocol, &from).unwrap().state;
    let reloaded = run(&protocol2, &from2).unwrap().state;
    assert!(trace_norm_distance(&direct, &reloaded).unwrap() <= 1e-14);

    let verdict = check_convertibility(&from2, &to2, &protocol2, &witness, 1e-8).unwrap();
    assert!(verdict.ok, "epsilon {:.3e}", verdict.epsilon_achieved);
}

#[test]
fn second_arrow_runs_identically_after_reload() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("arrow.protocol");
    let (protocol, witness) = arrow_phi_ii_to_psi_i().unwrap();
    nonmarkov::freeops::save_protocol(&protocol, &path).unwrap();
    let protocol2 = nonmarkov::freeops::load_protocol(&path).unwrap();

    let from = make("phi-ii").unwrap().state;
    let to = make("psi-i").unwrap().state;
    let verdict = check_convertibility(&from, &to, &protocol2, &witness, 1e-8).unwrap();
    assert!(verdict.ok, "epsilon {:.3e}", verdict.epsilon_achieved);
}

fn pure_block(labels: [&str; 2], which: usize) -> MultipartiteState {
    let v = basis(4, which);
    MultipartiteState::new(
        vec![(labels[0].into(), 2), (labels[1].into(), 2)],
        projector(&v),
    )
    .unwrap()
}

#[test]
fn generated_chain_survives_a_longer_free_protocol() {
    let blocks = vec![
        MarkovBlock {
            weight: 0.25,
            left: pure_block(["A", "EL"], 0),
            right: pure_block(["B", "ER"], 3),
        },
        MarkovBlock {
            weight: 0.75,
            left: pure_block(["A", "EL"], 2),
            right: pure_block(["B", "ER"], 1),
        },
    ];
    let (_, chain) = generate_markov(&blocks).unwrap();

    let h = nonmarkov::catalog::hadamard();
    let protocol = Protocol {
        steps: vec![
            ProtocolStep::LocalA {
                channel: Channel::dephasing(2),
                targets: vec!["A".into()],
                outputs: vec![("A".into(), 2)],
            },
            ProtocolStep::ReversibleE {
                pair: ReversiblePair::from_unitary(&h).unwrap(),
                targets: vec!["ER".into()],
                outputs: vec![("ER".into(), 2)],
            },
            ProtocolStep::BroadcastA {
                register: "A".into(),
                basis: None,
                copy_b: "CB".into(),
                copy_e: "CE".into(),
            },
            ProtocolStep::LocalB {
                channel: Channel::discard(2),
                targets: vec!["CB".into()],
                outputs: vec![],
            },
        ],
    };
    let out = run(&protocol, &chain).unwrap();
    let verdict = is_markov(
        &out.state,
        &["A"],
        &["B"],
        &["EL", "ER", "JE", "CE"],
        1e-8,
    )
    .unwrap();
    assert!(
        verdict.is_markov && verdict.petz_residual <= 1e-8,
        "cqmi {:.3e}, residual {:.3e}",
        verdict.cqmi,
        verdict.petz_residual
    );
}

#[test]
fn foreign_registers_are_rejected_at_run_time() {
    let s = make("phi-i").unwrap().state;
    let p = Protocol {
        steps: vec![ProtocolStep::LocalA {
            channel: Channel::dephasing(2),
            targets: vec!["E".into()],
            outputs: vec![("E".into(), 2)],
        }],
    };
    assert!(matches!(run(&p, &s), Err(Error::Contract(_))));
}

#[test]
fn tampered_witnesses_are_rejected() {
    let from = make("phi-i").unwrap().state;
    let to = make("phi-ii").unwrap().state;
    let (protocol, _) = arrow_phi_i_to_phi_ii().unwrap();
    let lossy = Channel::erasure(2, &projector(&basis(2, 0))).unwrap();
    let bad = EveWitness {
        pair: ReversiblePair {
            forward: lossy.clone(),
            inverse: lossy,
        },
        targets: vec!["E".into()],
        outputs: vec![("CE".into(), 2), ("E".into(), 2)],
    };
    assert!(matches!(
        check_convertibility(&from, &to, &protocol, &bad, 1e-8),
        Err(Error::Contract(_))
    ));
}
