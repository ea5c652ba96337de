use mfs_core::grid::DomainSpec;
use mfs_core::nfunc::{NFunctionFamily, SymmetricField};
use mfs_core::verify::{resolve_suites, run_suite, summary_csv, Verdict, VerifyContext, BATTERY, SUITES};
use mfs_core::MfsError;

fn families() -> Vec<NFunctionFamily> {
    vec![
        NFunctionFamily::double_phase(2.0, 3.0, SymmetricField::Constant(1.0)).unwrap(),
        NFunctionFamily::anisotropic(2.0, SymmetricField::Constant(1.0)).unwrap(),
        NFunctionFamily::variable_exponent(SymmetricField::Bump {
            base: 2.0,
            amplitude: 0.4,
            center: [0.5, 0.5],
            width: 0.2,
        })
        .unwrap(),
        NFunctionFamily::log_perturbed(SymmetricField::Constant(2.0)).unwrap(),
    ]
}

fn small(fam: NFunctionFamily) -> VerifyContext {
    let mut ctx = VerifyContext::new(fam, DomainSpec::unit_box(2, 8), 0.25, 5);
    ctx.samples = 500;
    ctx.fields = 12;
    ctx
}

#[test]
fn every_suite_passes_on_builtin_families() {
    for fam in families() {
        let ctx = small(fam);
        for suite in SUITES {
            let r = run_suite(suite, &ctx).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{} {suite}: {r:#?}", r.family);
            assert!(r.checks.iter().all(|c| c.pass && c.samples > 0));
        }
    }
}

#[test]
fn critical_suite_needs_subcritical_exponents() {
    let fam = NFunctionFamily::double_phase(2.0, 3.0, SymmetricField::Constant(1.0)).unwrap();
    let mut ctx = small(fam);
    ctx.s = 0.75;
    let r = run_suite("mn-critical", &ctx).unwrap();
    assert_eq!(r.verdict, Verdict::NotApplicable);
    assert!(r.passed() && r.checks.is_empty());
}

#[test]
fn uniform_monotone_needs_increasing_phi() {
    let fam = NFunctionFamily::anisotropic(1.5, SymmetricField::Constant(1.0)).unwrap();
    let r = run_suite("uniform-monotone", &small(fam)).unwrap();
    assert_eq!(r.verdict, Verdict::NotApplicable);
}

#[test]
fn suites_are_reproducible() {
    let ctx = small(families().remove(0));
    for suite in ["mn2", "young", "coercive-bounded"] {
        let a = serde_json::to_string(&run_suite(suite, &ctx).unwrap()).unwrap();
        let b = serde_json::to_string(&run_suite(suite, &ctx).unwrap()).unwrap();
        assert_eq!(a, b);
    }
    let mut other = ctx.clone();
    other.seed += 1;
    let a = run_suite("young", &ctx).unwrap();
    let b = run_suite("young", &other).unwrap();
    assert_ne!(a.worst_violation, b.worst_violation);
}

#[test]
fn suite_names() {
    assert_eq!(resolve_suites("all").unwrap(), BATTERY.to_vec());
    assert_eq!(resolve_suites("growth").unwrap(), vec!["growth"]);
    assert!(matches!(resolve_suites("nope"), Err(MfsError::Usage(_))));
    assert!(matches!(run_suite("nope", &small(families().remove(1))), Err(MfsError::Usage(_))));
}

#[test]
fn summary_has_one_row_per_report() {
    let ctx = small(families().remove(1));
    let reports: Vec<_> = ["young", "monotone"].iter().map(|s| run_suite(s, &ctx).unwrap()).collect();
    let csv = summary_csv(&reports).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "suite,family,samples,worst_violation,tolerance,verdict");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("young,anisotropic,") && lines[1].ends_with(",pass"));
}
