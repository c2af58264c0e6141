use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn wdvv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wdvv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn check_passes_on_a3() {
    let o = wdvv(&["check", p(&data("a3.sol"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("overall: pass"));
}

#[test]
fn check_names_violated_indices() {
    let o = wdvv(&["check", p(&data("a3_perturbed.sol"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violated at (alpha,beta,gamma,nu) = ("));
}

#[test]
fn conformal_checks_skipped_without_data() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("plain.sol");
    std::fs::write(&f, "n = 2\nF = 1/2*v1^2*v2 + v2^5\n").unwrap();
    let o = wdvv(&["check", p(&f), "--format", "tsv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("wdvv\tassociativity\tsymbolic\t0\t<= 0\tpass"));
    assert!(out.contains("conformal\teuler-homogeneity\tsymbolic\t-\t<= 0\tskipped"));
}

#[test]
fn parse_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.sol");
    std::fs::write(&f, "n = 2\nF = v1^2 * (v2\n").unwrap();
    let o = wdvv(&["check", p(&f)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(wdvv(&["check", "/no/such/file.sol"]).status.code(), Some(2));
    assert_eq!(wdvv(&["frobnicate"]).status.code(), Some(2));
    let o = wdvv(&["verify-all", p(&data("a2.sol")), "--tol", "nonsense=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invert_writes_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a2hat.sol");
    let o = wdvv(&["invert", p(&data("a2.sol")), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("d = 5/3"));
    assert!(text.contains("mu = [-5/6, 5/6]"));
    let o = wdvv(&["check", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn numeric_commands_on_written_calibrations() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("a2.cal");
    let hat = dir.path().join("a2hat.cal");
    let o = wdvv(&["calibrate", p(&data("a2.sol")), "-P", "4", "-o", p(&cal), "--hat-output", p(&hat)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let times = ["--time", "1,0=0.3", "--time", "2,0=0.1", "--time", "1,1=0.05"];

    let o = wdvv(&[&["hodograph", p(&cal), "--format", "tsv"][..], &times].concat());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("quantity\tvalue\nv1\t"));
    assert!(out.contains("log_tau\t"));

    let o = wdvv(&[&["legendre-check", p(&cal), p(&hat)][..], &times].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    for m in ["-1", "0"] {
        let o = wdvv(&[&["virasoro", p(&cal), "-m", m][..], &times].concat());
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let o = wdvv(&[&["virasoro", p(&cal), "-m", m, "--hat"][..], &times].concat());
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let o = wdvv(&["virasoro", p(&cal), "-m", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn genus_operations() {
    let sol = data("a2.sol");
    let g = data("zero.g");
    for op in ["genus1", "det-identity", "expand"] {
        let o = wdvv(&["genus", p(&sol), "--G", p(&g), "--op", op]);
        assert_eq!(o.status.code(), Some(0), "{op}: {}", stdout(&o));
    }
    let o = wdvv(&["genus", p(&sol), "--G", p(&g), "--op", "check-g2"]);
    assert_eq!(o.status.code(), Some(2));

    // F2 = 0 on both sides cannot satisfy the genus-two law
    let dir = tempfile::tempdir().unwrap();
    let f2 = dir.path().join("f2");
    std::fs::write(&f2, "F2 = 0\nF2hat = 0\n").unwrap();
    let o = wdvv(&["genus", p(&sol), "--G", p(&g), "--F2", p(&f2), "--op", "check-g2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_all_a2_is_deterministic() {
    let (sol, g) = (data("a2.sol"), data("zero.g"));
    let args = ["verify-all", p(&sol), "--G", p(&g)];
    let a = wdvv(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    let b = wdvv(&args);
    assert_eq!(a.stdout, b.stdout);
    let tsv = wdvv(&[&args[..], &["--format", "tsv"]].concat());
    assert!(stdout(&tsv).lines().skip(1).all(|l| l.split('\t').count() == 7));
}

#[test]
fn verify_all_reports_stage_of_failure() {
    let o = wdvv(&["verify-all", p(&data("a2.sol")), "--tol", "hatted-el=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("symmetry") && l.ends_with("fail")));
}
