//! One test per acceptance criterion. Each prints a PASS/FAIL line to the
//! real stdout (bypassing capture) and then asserts.

use std::io::Write;
use std::sync::OnceLock;

use hyperlattice::verify::{run, Fixture};

fn fixture() -> &'static Fixture {
    static FX: OnceLock<Fixture> = OnceLock::new();
    FX.get_or_init(|| {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        Fixture::genus2(workers).expect("genus-2 fixture")
    })
}

fn check(id: u32) {
    let outcome = run(id, fixture());
    let _ = writeln!(std::io::stdout().lock(), "acceptance {outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn criterion_01_group_validity() {
    check(1);
}

#[test]
fn criterion_02_enumeration_vs_brute_force() {
    check(2);
}

#[test]
fn criterion_03_determinism() {
    check(3);
}

#[test]
fn criterion_04_huber_law() {
    check(4);
}

#[test]
fn criterion_05_basepoint_symmetry() {
    check(5);
}

#[test]
fn criterion_06_eichler_bound() {
    check(6);
}

#[test]
fn criterion_07_first_moment() {
    check(7);
}

#[test]
fn criterion_08_second_moment_growth() {
    check(8);
}

#[test]
fn criterion_09_gaussian_moments() {
    check(9);
}

#[test]
fn criterion_10_huber_residue() {
    check(10);
}

#[test]
fn criterion_11_even_leading_coefficient() {
    check(11);
}

#[test]
fn criterion_12_shifted_equation() {
    check(12);
}

#[test]
fn criterion_13_series_oracle() {
    check(13);
}
