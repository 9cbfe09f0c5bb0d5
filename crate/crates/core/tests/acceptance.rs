use std::io::Write;

use graev_core::selftest::run_criterion;

/// Writes past the harness capture so every criterion reports even when it passes.
fn criterion(id: usize) {
    let r = run_criterion(id);
    writeln!(std::io::stdout().lock(), "{}", r.line()).unwrap();
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_01_match_norm_oracle() {
    criterion(1);
}

#[test]
fn criterion_02_free_ultrametric_axioms() {
    criterion(2);
}

#[test]
fn criterion_03_w_theta_vector() {
    criterion(3);
}

#[test]
fn criterion_04_scaled_norm_consistency() {
    criterion(4);
}

#[test]
fn criterion_05_lipschitz_extension() {
    criterion(5);
}

#[test]
fn criterion_06_amalgam_ultrametric() {
    criterion(6);
}

#[test]
fn criterion_07_reduced_pairs_attain_infimum() {
    criterion(7);
}

#[test]
fn criterion_08_builder_forests_are_maximal() {
    criterion(8);
}

#[test]
fn criterion_09_two_maximal_forests() {
    criterion(9);
}

#[test]
fn criterion_10_reconstructed_forest_checker_vectors() {
    criterion(10);
}

#[test]
fn criterion_11_hnn_stable_letter() {
    criterion(11);
}

#[test]
fn criterion_12_union_of_scaled_spaces() {
    criterion(12);
}
