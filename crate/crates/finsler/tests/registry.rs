//! The registered identity list is frozen against a checked-in manifest so
//! that checks cannot silently disappear from the suite.

#[test]
fn registry_matches_manifest() {
    let manifest: Vec<&str> = include_str!("data/identities.txt")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .collect();
    let mut ids = finsler::verify::registry_ids();
    ids.sort_unstable();
    assert_eq!(ids.len(), manifest.len(), "registry size changed");
    for (have, want) in ids.iter().zip(manifest.iter()) {
        assert_eq!(have, want, "registry id drifted");
    }
}

#[test]
fn every_report_contains_every_identity_once() {
    use finsler::frontend::sampling::sample_points;
    use finsler::frontend::zoo::builtin_metric;
    use finsler::verify::{run_suite, MetricTraits, Tolerances};

    let m = builtin_metric("randers", &[], 2).unwrap();
    let traits_ = MetricTraits {
        riemannian: m.is_riemannian(),
        locally_minkowski: m.is_locally_minkowski(),
        witness_point: m.witness_point(),
    };
    let points = sample_points(&m, 3, 1);
    let report = run_suite(m, "randers", &traits_, &points, 1, &Tolerances::default());
    let mut seen: Vec<&str> = report.checks.iter().map(|c| c.id.as_str()).collect();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(
        seen.len(),
        report.checks.len(),
        "duplicate identity in report"
    );
    assert_eq!(seen.len(), finsler::verify::registry_ids().len());
}
