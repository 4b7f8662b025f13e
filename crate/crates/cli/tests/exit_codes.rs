use std::path::Path;
use std::process::{Command, Output};

fn qdisk(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdisk"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn check_default_preset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdisk(&["check"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for label in ["one", "three", "five", "six", "seven"] {
        assert!(text.lines().any(|l| l.starts_with(label) && l.contains("holds")), "{text}");
    }
    assert!(text.contains("N = 0"));
    assert!(text.contains("# defaulted: preset"));
}

#[test]
fn boundary_family_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[family]\na = 4\nb = 3\nc = 5\n");
    let o = qdisk(&["check", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("configuration error"));
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\nK = [1\n");
    let o = qdisk(&["verify", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(qdisk(&["check", "--modes", "3"], dir.path()).status.code(), Some(2));
    assert_eq!(qdisk(&["check", "--preset", "nope"], dir.path()).status.code(), Some(2));
}

#[test]
fn beta_with_a_zero_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        r#"[sequences]
beta = { kind = "eventually_constant", prefix = [1, 2, 3, 4, 5, 0], tail = 1 }
mu = { kind = "power_law", exponent = -3, scale = 1 }
w = { kind = "power_law", exponent = -5.5, scale = 1 }
w_prime = { kind = "power_law", exponent = -4, scale = 1 }
"#,
    );
    let o = qdisk(&["check", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains(r#"witness: {"kind":"zero","sequence":"beta","k":5}"#), "{}", stdout(&o));
}

#[test]
fn kernel_dimensions_of_presets() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, dim) in [("default", 0), ("kernel-1", 1), ("kernel-2", 2)] {
        let o = qdisk(&["kernel", "--preset", preset], dir.path());
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(text.contains(&format!("dimension = {dim}")), "{text}");
        for n in 0..dim {
            assert!(text.contains(&format!("mode {n}: in space")), "{text}");
        }
        assert!(text.contains(&format!("mode {dim}: not in space")), "{text}");
    }
}

#[test]
fn quick_verify_passes_and_zero_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdisk(&["verify", "--K", "64", "--modes", "-2..2", "--out", "quick"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("quick/report.json").exists());
    let o = qdisk(&["verify", "--K", "64", "--modes", "-2..2", "--tol", "0", "--out", "zero"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("failed: "));
}

#[test]
fn spectrum_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = qdisk(&["spectrum", "--preset", "kernel-1", "--modes", "-3..3", "--out", "s"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let read = |name: &str| std::fs::read_to_string(dir.path().join("s").join(name)).unwrap();
    let hs = read("hs.csv");
    assert_eq!(hs.lines().count(), 1 + 7);
    assert!(hs.lines().skip(1).all(|l| l.ends_with("certified")), "{hs}");
    let kernel = read("kernel.csv");
    let row0: Vec<&str> = kernel.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row0[0], "0");
    assert!(row0[4].parse::<f64>().unwrap() > 0.999);
    assert_eq!(row0[6], "true");
    assert_eq!(kernel.lines().nth(2).unwrap().rsplit(',').next(), Some("false"));
    assert_eq!(read("sigma.csv").lines().count(), 1 + 7 * 200);

    let o = qdisk(&["spectrum", "--modes", "1..0", "--out", "e"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for name in ["hs.csv", "sigma.csv", "kernel.csv"] {
        let text = std::fs::read_to_string(dir.path().join("e").join(name)).unwrap();
        assert_eq!(text.lines().count(), 1, "{name}");
    }
}

#[test]
fn spectrum_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = qdisk(&["spectrum", "--K", "40", "--modes", "-2..2", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for name in ["hs.csv", "sigma.csv", "kernel.csv", "commutator.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}
