mod common;

use coalform::equilibrium::{solve_exact_suite, solve_numeric_suite, NumericOptions, SuiteOptions};
use coalform::io::{default_pd, parse_spec, EnumerationReport, GameReport, Report, VerdictReport, REPORT_SCHEMA, THREE_PLAYER};
use coalform::stability::{analyze_exact, nested_family, Mode};
use coalform::BuildOptions;
use common::*;

fn validate(report: &Report) {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let instance: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    let msgs: Vec<String> = match compiled.validate(&instance) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "schema violations: {msgs:?}");
}

fn stability_report() -> Report {
    let fam = analyze_exact(nested_family(&default_pd()).unwrap(), BuildOptions::default(), usize::MAX).unwrap();
    let mut r = Report::new("stability");
    for m in fam.members() {
        let mut g = GameReport::new(&m.induced, m.k, &m.equilibria);
        g.selected = Some(m.selected);
        r.games.push(g);
    }
    r.verdicts.push(VerdictReport::new(&fam, &fam.local_stability(1, Mode::ForAll).unwrap()));
    r.verdicts.push(VerdictReport::new(&fam, &fam.global_stability(2, Mode::Exists).unwrap()));
    r.verdicts.push(VerdictReport::new(&fam, &fam.strong_nash_criterion(Mode::ForAll).unwrap()));
    r
}

#[test]
fn enumeration_report_matches_schema() {
    let mut r = Report::new("enumerate");
    r.enumeration = Some(EnumerationReport::new(4, 2, true, true).unwrap());
    validate(&r);
}

#[test]
fn exact_and_numeric_solve_reports_match_schema() {
    let g = induce(default_pd());
    let mut r = Report::new("solve");
    r.games.push(GameReport::new(&g, 2, &solve_exact_suite(&g, usize::MAX).unwrap()));
    validate(&r);

    let g = induce(parse_spec(THREE_PLAYER).unwrap());
    let options = SuiteOptions { numeric: NumericOptions { max_support: 2, ..NumericOptions::default() }, ..SuiteOptions::default() };
    let solved = solve_numeric_suite(&g, &options).unwrap();
    let mut r = Report::new("solve");
    r.games.push(GameReport::new(&g, 2, &solved.equilibria).with_nonconvergent(&g, &solved.nonconvergent));
    validate(&r);
}

#[test]
fn stability_report_matches_schema_and_is_stable_across_runs() {
    let a = stability_report();
    validate(&a);
    assert_eq!(a.to_json(), stability_report().to_json());
    let table = a.to_table();
    assert!(table.contains("strong stability at K=2 (forall): not stable"));
    assert!(table.contains("witness: structure distribution mass 3/4 on 1|2"));
}

#[test]
fn schema_rejects_numbers_as_json_numbers() {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&stability_report().to_json()).unwrap();
    doc["games"][0]["cells"][0]["payoffs"][0] = serde_json::json!(0);
    assert!(!compiled.is_valid(&doc));
}
