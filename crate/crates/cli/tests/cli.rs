use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn srcert(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srcert")).current_dir(dir).args(args).output().expect("spawn srcert")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Row-major real matrix as an operator JSON file.
fn write_real_operator(path: &Path, shape: &[usize], m: &[Vec<f64>]) {
    let rows: Vec<String> = m
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|x| format!("[{x:?}, 0.0]")).collect::<Vec<_>>().join(", ")))
        .collect();
    let shape: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    let text = format!("{{\"schema_version\": 1, \"shape\": [{}], \"rows\": [{}]}}", shape.join(", "), rows.join(",\n"));
    std::fs::write(path, text).unwrap();
}

fn kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (na, nb) = (a.len(), b.len());
    (0..na * nb)
        .map(|i| (0..na * nb).map(|j| a[i / nb][j / nb] * b[i % nb][j % nb]).collect())
        .collect()
}

fn add(a: &mut [Vec<f64>], b: &[Vec<f64>]) {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (x, y) in ra.iter_mut().zip(rb) {
            *x += y;
        }
    }
}

fn eye(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn singlet() -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; 4]; 4];
    m[1][1] = 0.5;
    m[2][2] = 0.5;
    m[1][2] = -0.5;
    m[2][1] = -0.5;
    m
}

/// Σ γᵢ⊗δᵢ with real symmetric left factors; PD, left-PT invariant.
fn invariant_state(extra_term: bool) -> Vec<Vec<f64>> {
    let g2 = vec![vec![0.3, 0.0, 0.0], vec![0.0, -0.2, 0.0], vec![0.0, 0.0, 0.1]];
    let g3 = vec![vec![0.0, 0.1, 0.1], vec![0.1, 0.0, 0.1], vec![0.1, 0.1, 0.0]];
    let d2 = vec![vec![0.3, 0.0, 0.0], vec![0.0, -0.3, 0.0], vec![0.0, 0.0, 0.15]];
    let d3 = vec![vec![0.0, 0.2, 0.0], vec![0.2, 0.0, 0.2], vec![0.0, 0.2, 0.0]];
    let mut a = kron(&eye(3), &eye(3));
    add(&mut a, &kron(&g2, &d2));
    add(&mut a, &kron(&g3, &d3));
    if extra_term {
        let g4 = vec![vec![0.0, 0.0, 0.1], vec![0.0, 0.2, 0.0], vec![0.1, 0.0, -0.1]];
        let d4 = vec![vec![0.1, 0.05, 0.0], vec![0.05, 0.2, 0.0], vec![0.0, 0.0, -0.3]];
        add(&mut a, &kron(&g4, &d4));
    }
    a
}

#[test]
fn mub_bound_prints_formula_value() {
    let dir = TempDir::new().unwrap();
    let o = srcert(dir.path(), &["mub", "bound", "--m", "2", "--n", "2", "--t", "3", "--field", "complex"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next(), Some("12"));
    let o = srcert(dir.path(), &["mub", "corollary", "--k", "1", "--m", "7"]);
    assert_eq!(stdout(&o).lines().next(), Some("8"));
}

#[test]
fn lemma24_suite_is_deterministic_and_verifiable() {
    let dir = TempDir::new().unwrap();
    let o = srcert(dir.path(), &["suite", "lemma24", "--m", "2", "--n", "2", "--out", "a.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("result: PASS"));
    let o = srcert(dir.path(), &["suite", "lemma24", "--m", "2", "--n", "2", "--seed", "0", "--out", "b.json"]);
    assert_eq!(code(&o), 0);
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    let o = srcert(dir.path(), &["verify", "a.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn tampered_certificate_names_first_failing_check() {
    let dir = TempDir::new().unwrap();
    let o = srcert(dir.path(), &["suite", "lemma24", "--m", "2", "--n", "3", "--trials", "10", "--out", "c.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("c.json")).unwrap();
    let tampered = text.replacen("\"expected\": 18.0", "\"expected\": 19.0", 1);
    assert_ne!(tampered, text);
    std::fs::write(dir.path().join("c.json"), tampered).unwrap();
    let o = srcert(dir.path(), &["verify", "c.json"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("first failing check: closed form: f(|Psi><Psi|) = m n^2"), "{}", stdout(&o));
}

#[test]
fn mub_verify_accepts_generated_and_rejects_tampered_family() {
    let dir = TempDir::new().unwrap();
    let o = srcert(dir.path(), &["mub", "gen", "--prime", "5", "--out", "f.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = srcert(dir.path(), &["mub", "verify", "f.json", "--out", "fc.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(code(&srcert(dir.path(), &["verify", "fc.json"])), 0);

    let text = std::fs::read_to_string(dir.path().join("f.json")).unwrap();
    let idx = text.rfind("0.4472135954999579").expect("entry 1/sqrt 5");
    let tampered = format!("{}0.4472135954999580{}", &text[..idx], &text[idx + 18..]);
    std::fs::write(dir.path().join("g.json"), tampered).unwrap();
    let o = srcert(dir.path(), &["mub", "verify", "g.json"]);
    assert_eq!(code(&o), 0, "one ulp is within tolerance");
    let text = std::fs::read_to_string(dir.path().join("f.json")).unwrap();
    let tampered = format!("{}0.4{}", &text[..idx], &text[idx + 18..]);
    std::fs::write(dir.path().join("g.json"), tampered).unwrap();
    let o = srcert(dir.path(), &["mub", "verify", "g.json"]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));

    // the family certificate no longer matches a modified input file
    std::fs::copy(dir.path().join("g.json"), dir.path().join("f.json")).unwrap();
    let o = srcert(dir.path(), &["verify", "fc.json"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("first failing check: family file sha256"));
}

#[test]
fn conservation_on_bundled_d4_family() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&srcert(dir.path(), &["mub", "gen", "--builtin", "4", "--out", "f4.json"])), 0);
    let o = srcert(dir.path(), &["mub", "conserve", "f4.json", "--shape", "2,2"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("mn(m+n) = 16"));
    let o = srcert(dir.path(), &["mub", "bound", "--m", "2", "--n", "2", "--family", "f4.json"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn ppt_check_rejects_singlet() {
    let dir = TempDir::new().unwrap();
    write_real_operator(&dir.path().join("s.json"), &[2, 2], &singlet());
    let o = srcert(dir.path(), &["ppt", "check", "s.json"]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
    let mut mixed = eye(4);
    add(&mut mixed, &singlet());
    write_real_operator(&dir.path().join("m.json"), &[2, 2], &mixed);
    let o = srcert(dir.path(), &["ppt", "check", "m.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn ppt_mix_singlet_is_separable_and_verifies() {
    let dir = TempDir::new().unwrap();
    write_real_operator(&dir.path().join("g.json"), &[2, 2], &singlet());
    let o = srcert(dir.path(), &["ppt", "mix", "--gamma", "g.json", "--eps", "0.1666", "--regime", "b", "--out", "mix.json"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("SN in [1, 1]"), "{}", stdout(&o));
    let o = srcert(dir.path(), &["verify", "mix.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = srcert(dir.path(), &["ppt", "mix", "--gamma", "g.json", "--eps", "0.5", "--regime", "b"]);
    assert_eq!(code(&o), 1, "ε outside the regime is an input error");
}

#[test]
fn ppt_sic_runs_for_small_dimensions() {
    let dir = TempDir::new().unwrap();
    for k in ["2", "3"] {
        let o = srcert(dir.path(), &["ppt", "sic", "--dim", k]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
    assert_eq!(code(&srcert(dir.path(), &["ppt", "sic", "--dim", "7"])), 1);
}

#[test]
fn sep_osr3_certificate_and_replay() {
    let dir = TempDir::new().unwrap();
    write_real_operator(&dir.path().join("a.json"), &[3, 3], &invariant_state(false));
    let o = srcert(dir.path(), &["sep", "osr3", "a.json", "--eps-reg", "1e-6", "--tol", "1e-8", "--out", "sep.json"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let o = srcert(dir.path(), &["verify", "sep.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let text = std::fs::read_to_string(dir.path().join("sep.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let w = v["payload"]["separability"]["certificate"]["constructive_part"]["terms"][0]["weight"].as_f64().unwrap();
    let needle = format!("\"weight\": {w:?}");
    assert!(text.contains(&needle));
    std::fs::write(dir.path().join("sep.json"), text.replacen(&needle, &format!("\"weight\": {:?}", w * 2.0), 1)).unwrap();
    let o = srcert(dir.path(), &["verify", "sep.json"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("first failing check: residual vs input claim"), "{}", stdout(&o));
}

#[test]
fn sep_osr3_rejects_rank_four() {
    let dir = TempDir::new().unwrap();
    write_real_operator(&dir.path().join("a4.json"), &[3, 3], &invariant_state(true));
    let o = srcert(dir.path(), &["sep", "osr3", "a4.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("operator Schmidt rank 4"), "{}", stderr(&o));
}

#[test]
fn malformed_input_reports_byte_offset() {
    let dir = TempDir::new().unwrap();
    // the second comma sits at byte 39
    std::fs::write(dir.path().join("bad.json"), "{\"shape\": [2, 2], \"rows\": [[[1.0, 0.0],, ]]}").unwrap();
    let o = srcert(dir.path(), &["ppt", "check", "bad.json"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.json") && stderr(&o).contains("byte offset 39"), "{}", stderr(&o));
    let o = srcert(dir.path(), &["ppt", "check", "missing.json"]);
    assert_eq!(code(&o), 1);
    let o = srcert(dir.path(), &["mub", "frobnicate"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unknown_schema_version_rejected() {
    let dir = TempDir::new().unwrap();
    let mut m = eye(4);
    add(&mut m, &singlet());
    write_real_operator(&dir.path().join("m.json"), &[2, 2], &m);
    let text = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    std::fs::write(dir.path().join("m.json"), text.replace("\"schema_version\": 1", "\"schema_version\": 7")).unwrap();
    let o = srcert(dir.path(), &["ppt", "check", "m.json"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stderr(&o).contains("schema_version"));
}
