use cw4_core::certifier::{certify, implied_bound, CertifyOptions};
use cw4_core::constraints::Mode;
use cw4_core::optimizer::{optimize, SolverConfig, Strategy};
use cw4_core::ParameterSet;

fn table(n: u8) -> ParameterSet {
    let path = format!("{}/../../data/table{n}.cert", env!("CARGO_MANIFEST_DIR"));
    ParameterSet::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn short(mode: Mode) -> SolverConfig {
    SolverConfig {
        mode,
        starts: 2,
        max_iters: 3,
        seed: 7,
        ..SolverConfig::default()
    }
}

#[test]
fn warm_start_is_never_worse() {
    for (n, mode) in [(5, Mode::Legacy), (6, Mode::LossOuter), (7, Mode::LossRecursive)] {
        let p = table(n);
        let out = optimize(&short(mode), Some(&p)).unwrap();
        assert!(out.feasible);
        assert!(out.certificate.rho <= implied_bound(&p, mode).unwrap() + 1e-9);
        let again = certify(&out.params, mode, out.certificate.rho, &CertifyOptions::default());
        assert!(again.passed);
    }
}

#[test]
fn fixed_seed_is_deterministic() {
    let cfg = SolverConfig {
        threads: Some(2),
        ..short(Mode::LossRecursive)
    };
    let a = optimize(&cfg, Some(&table(7))).unwrap();
    let b = optimize(&cfg, Some(&table(7))).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.certificate.rho, b.certificate.rho);
}

#[test]
fn bisection_strategy_certifies() {
    let cfg = SolverConfig {
        strategy: Strategy::BisectionFeasibility,
        ..short(Mode::LossRecursive)
    };
    let out = optimize(&cfg, Some(&table(7))).unwrap();
    assert!(out.feasible);
    assert!(out.certificate.rho <= 3.2516);
}

#[test]
fn random_starts_return_a_certificate_or_flag() {
    let cfg = SolverConfig {
        starts: 1,
        max_iters: 5,
        seed: 3,
        ..SolverConfig::default()
    };
    let out = optimize(&cfg, None).unwrap();
    assert_eq!(out.feasible, out.certificate.passed);
    if out.feasible {
        assert!(out.certificate.rho.is_finite());
    }
}
