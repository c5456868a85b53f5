use std::process::{Command, Output};

fn mpir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpir"))
        .args(args)
        .env_remove("MPIR_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_reports_known_rates() {
    for (args, rate) in [
        (&["run", "--scheme", "mds", "-M", "3", "-P", "2", "-N", "2"][..], "4/5"),
        (&["run", "--scheme", "rounds", "-M", "5", "-P", "2", "-N", "2"], "17/28"),
        (&["run", "--scheme", "rounds", "-M", "2", "-P", "1", "-N", "2"], "2/3"),
    ] {
        let o = mpir(args);
        assert_eq!(o.status.code(), Some(0));
        let out = stdout(&o);
        assert!(out.contains(&format!("rate        {rate} ")), "{out}");
        assert!(out.contains("status      PASS"));
    }
}

#[test]
fn seed_comes_from_environment() {
    let table = |seed: Option<&str>, flag: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_mpir"));
        c.args(["table", "-M", "3", "-P", "2", "-N", "2"]).args(flag).env_remove("MPIR_SEED");
        if let Some(s) = seed {
            c.env("MPIR_SEED", s);
        }
        stdout(&c.output().unwrap())
    };
    assert_eq!(table(Some("17"), &[]), table(None, &["--seed", "17"]));
    assert_ne!(table(Some("17"), &[]), table(None, &[]));
}

#[test]
fn emitted_tables_reparse_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for scheme in ["mds", "rounds", "desired-only", "no-symmetry"] {
        let first = mpir(&["table", "--scheme", scheme, "-M", "4", "-P", "2", "-N", "2", "--pset", "1,3"]);
        assert_eq!(first.status.code(), Some(0), "{scheme}");
        let path = dir.path().join(format!("{scheme}.txt"));
        std::fs::write(&path, &first.stdout).unwrap();
        let again = mpir(&["table", "--input", path.to_str().unwrap()]);
        assert_eq!(stdout(&again), stdout(&first), "{scheme}");
    }
}

#[test]
fn csv_outputs() {
    let o = mpir(&["run", "-M", "3", "-P", "2", "-N", "2", "--emit-table", "--format", "csv"]);
    assert!(stdout(&o).contains("db,round,stage,category,terms"));
    let a = stdout(&mpir(&["bounds", "--sweep", "--m-range", "2:6", "--p-range", "1:3", "--n-range", "2:4"]));
    let b = stdout(&mpir(&["bounds", "--sweep", "--m-range", "2:6", "--p-range", "1:3", "--n-range", "2:4"]));
    assert_eq!(a, b);
    assert!(a.starts_with("M,P,N,lower,upper,gap\n"));
    let plan = stdout(&mpir(&["plan", "--sweep", "--m-range", "5", "--p-range", "2", "--n-range", "2"]));
    assert_eq!(plan, "M,P,N,alpha,D_db,U_db,L,rate\n5,2,2,5 2 1 0 1,56,22,34,17/28\n");
}

#[test]
fn bounds_point_report() {
    let out = stdout(&mpir(&["bounds", "-M", "5", "-P", "2", "-N", "2"]));
    assert!(out.contains("upper bound     8/13"));
    assert!(out.contains("lower bound     17/28"));
}

#[test]
fn audit_separates_schemes_from_controls() {
    let ok = mpir(&["audit", "--scheme", "mds", "-M", "3", "-P", "2", "-N", "2", "--samples", "2000"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let bad = mpir(&["audit", "--scheme", "no-symmetry", "-M", "3", "-P", "2", "-N", "2", "--samples", "2000"]);
    assert_eq!(bad.status.code(), Some(1));
    let csv = mpir(&["audit", "-M", "3", "-P", "2", "-N", "2", "--samples", "500", "--format", "csv"]);
    assert!(stdout(&csv).starts_with("kind,db,first,second,value,threshold,pass\n"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(mpir(&["run", "-M", "3", "-P", "4", "-N", "2"]).status.code(), Some(2));
    assert_eq!(mpir(&["run", "-M", "3", "-P", "2", "-N", "2", "--q", "3"]).status.code(), Some(2));
    assert_eq!(mpir(&["run", "-M", "3", "-P", "2", "-N", "2", "--pset", "0,1"]).status.code(), Some(2));
    assert_eq!(mpir(&["run", "--scheme", "rounds", "-M", "3", "-P", "3", "-N", "2"]).status.code(), Some(2));
    assert_eq!(mpir(&["plan", "-M", "3"]).status.code(), Some(2));
    assert_eq!(mpir(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mpir(&["verify", "--filter", "nothing-matches"]).status.code(), Some(2));
}

#[test]
fn verify_filter_and_fault_injection() {
    let o = mpir(&["verify", "--filter", "bounds", "--seeds", "3", "--samples", "500"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.lines().filter(|l| l.starts_with("[PASS]")).count() >= 4);
    assert!(!out.contains("criterion  9"));

    let o = mpir(&["verify", "--filter", "bounds", "--inject-fault", "--seeds", "3"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.lines().any(|l| l.starts_with("[FAIL] criterion  4")), "{out}");
}
