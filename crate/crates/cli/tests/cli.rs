use std::process::Command;

use ksym_cli::{catalog, run};
use ksym_core::expr::{parse, Equality, SymbolTable};

fn ksym(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ksym")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn argv<'a>(args: &[&'a str]) -> Vec<&'a str> {
    std::iter::once("ksym").chain(args.iter().copied()).collect()
}

#[test]
fn every_catalog_entry_passes_its_checks() {
    let out = run(argv(&["catalog", "--verify"]));
    assert_eq!(out.code, 0, "{}", out.stdout);
    let r = out.report.unwrap();
    let total: usize = catalog::catalog().iter().map(|p| p.checks.len()).sum();
    assert_eq!(r.verdicts.len(), total);
    for p in catalog::catalog() {
        assert_eq!(p.checks[0].args, vec!["analyze"], "{} starts with analyze", p.name);
    }
}

#[test]
fn printed_expressions_round_trip() {
    let mut seen = 0;
    for p in catalog::catalog() {
        let c = p.chart();
        let table = SymbolTable::new(c.k(), c.n(), c.params().to_vec()).with_time();
        for check in p.checks.iter().filter(|c| c.args[0] != "verify-numeric") {
            let mut args = vec![check.args[0].as_str(), p.name.as_str()];
            args.extend(check.args[1..].iter().map(String::as_str));
            let r = run(argv(&args)).report.unwrap();
            for e in &r.objects {
                let parsed = parse(&e.value, &table).unwrap_or_else(|err| panic!("{}: {} = {}: {err}", p.name, e.key, e.value)).canon();
                assert_eq!(parsed.to_string(), e.value, "{}: {}", p.name, e.key);
                assert_eq!(parse(&parsed.to_string(), &table).unwrap().canon().equal(&parsed), Equality::Symbolic);
                seen += 1;
            }
        }
    }
    assert!(seen > 100);
}

#[test]
fn exit_codes_ignore_flag_order() {
    let orders: [&[&str]; 4] = [
        &["noether", "string", "--field", "dq", "--sopde", "xivs", "--current", "dq"],
        &["noether", "--current", "dq", "string", "--sopde", "xivs", "--field", "dq"],
        &["--json", "noether", "string", "--sopde", "xivs", "--field", "dq", "--current", "dq"],
        &["noether", "--sopde", "xivs", "--field", "dq", "string", "--current", "dq", "--json"],
    ];
    let outs: Vec<_> = orders.iter().map(|a| run(argv(a))).collect();
    for o in &outs {
        assert_eq!(o.code, 0);
        assert_eq!(o.report, outs[0].report);
    }
    let fail: [&[&str]; 2] = [
        &["check-symmetry", "string", "--field", "dilation", "--sopde", "xivs"],
        &["check-symmetry", "--sopde", "xivs", "--field", "dilation", "string"],
    ];
    for a in fail {
        assert_eq!(run(argv(a)).code, 1);
    }
}

#[test]
fn json_mirrors_the_text_report() {
    let out = run(argv(&["analyze", "string", "--json"]));
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let r = out.report.unwrap();
    assert_eq!(v["command"], "analyze");
    assert_eq!(v["objects"].as_array().unwrap().len(), r.objects.len());
    for (j, e) in v["objects"].as_array().unwrap().iter().zip(&r.objects) {
        assert_eq!(j["key"], e.key.as_str());
        assert_eq!(j["value"], e.value.as_str());
    }
    assert_eq!(v["verdicts"][0]["name"], "regular");
    assert_eq!(v["verdicts"][0]["grade"], "symbolic");
    let text = run(argv(&["analyze", "string"])).stdout;
    assert!(text.contains("omega1[dq1^dv1_1] = sigma\n"));
    assert!(text.contains("verdict regular: pass [symbolic]"));
}

#[test]
fn binary_examples() {
    let (code, out, _) = ksym(&["analyze", "examples/string.ksym"]);
    assert_eq!(code, 0);
    assert!(out.contains("omega2[dq1^dv1_2] = -tau\n"));
    assert!(out.contains("E = sigma*v1_1^2/2 - tau*v1_2^2/2\n"));

    let (code, out, _) = ksym(&["noether", "examples/string.ksym", "--field", "dq"]);
    assert_eq!(code, 0);
    assert!(out.contains("f1 = sigma*v1_1\nf2 = -tau*v1_2\n"), "{out}");

    let (code, out, _) = ksym(&["generate-field", "examples/string.ksym", "--current", "noncsym"]);
    assert_eq!(code, 1);
    assert!(out.contains("verdict generated: fail [symbolic] (inconsistent)"));
    assert!(out.contains("witness: df1/dv1_2 must vanish but equals -2*sigma*v1_1"));

    let (code, out, _) = ksym(&["catalog", "wave3"]);
    assert_eq!(code, 0);
    assert_eq!(out, catalog::source("wave3").unwrap());
}

#[test]
fn usage_errors_exit_with_two() {
    let cases: [&[&str]; 8] = [
        &["transmogrify", "string"],
        &["analyze", "missing.ksym"],
        &["noether", "string"],
        &["noether", "string", "--field", "nope"],
        &["generate-field", "string", "--current", "nope"],
        &["verify-numeric", "string"],
        &["verify-numeric", "string", "--solution", "plane", "--grid", "h=0.3"],
        &["check-sopde", "string"],
    ];
    for a in cases {
        let (code, _, err) = ksym(a);
        assert_eq!(code, 2, "{a:?}: {err}");
        assert!(!err.is_empty());
    }
    let (code, out, _) = ksym(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("verify-numeric"));
}

#[test]
fn problem_files_from_disk() {
    let dir = std::env::temp_dir().join(format!("ksym-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("oscillator.ksym");
    std::fs::write(
        &path,
        "name: oscillator\nk: 1\nn: 1\nlagrangian: v1_1^2/2 - q1^2/2\n\n[sopde newton]\n1,1,1: -q1\n\n[field time]\nq1: v1_1\nv1_1: -q1\n\n[current energy]\nf1: v1_1^2/2 + q1^2/2\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let (code, out, _) = ksym(&["check-sopde", p, "--current", "energy"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("verdict conserved[energy]: pass [symbolic]"));
    let (code, out, _) = ksym(&["check-symmetry", p, "--field", "dq", "--sopde", "newton"]);
    assert_eq!(code, 2, "{out}");
    let (code, out, _) = ksym(&["check-symmetry", p, "--field", "q1=1", "--sopde", "newton"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("verdict energy_conserved: fail"));

    std::fs::write(&path, "k: 1\nn: 1\nlagrangian: v1_1^2 +\n").unwrap();
    let (code, _, err) = ksym(&["analyze", p]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}
