//! Acceptance criteria 1-9 at full scale. Each test prints one PASS/FAIL line.

use tgraph::selftest::{run_criterion, Faults, Profile};

const SEED: u64 = 2024;

fn check(id: u8) {
    let report = run_criterion(id, Profile::Full, SEED, Faults::default());
    println!("{}", report.line());
    assert!(report.passed, "{}", report.line());
}

#[test]
fn criterion_1_oracle_equivalence() {
    check(1);
}

#[test]
fn criterion_2_canonicity() {
    check(2);
}

#[test]
fn criterion_3_fragment_bounds() {
    check(3);
}

#[test]
fn criterion_4_decomposition_group() {
    check(4);
}

#[test]
fn criterion_5_group_engine() {
    check(5);
}

#[test]
fn criterion_6_set_families() {
    check(6);
}

#[test]
fn criterion_7_interval_pq() {
    check(7);
}

#[test]
fn criterion_8_witness_soundness() {
    check(8);
}

#[test]
fn criterion_9_scaling() {
    check(9);
}
