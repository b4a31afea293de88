use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn trajnoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajnoise"))
        .args(args)
        .output()
        .expect("spawn trajnoise")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_lines(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace().map(|t| t.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

fn report_value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .and_then(|v| v.split_whitespace().next())
        .unwrap_or_else(|| panic!("no {key} in report"))
        .parse()
        .unwrap()
}

#[test]
fn simulate_is_reproducible_and_carries_its_recipe() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for out in [&a, &b] {
        let o = trajnoise(&[
            "simulate", "--n", "300", "--noise", "fn", "--sigma", "1.5", "--seed", "11",
            "--coefficients", "2,0.5", "--output", path(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.contains("# seed: 11"));
    assert!(text.contains("# noise: fn"));
    assert_eq!(data_lines(&text).len(), 300);

    // the header alone regenerates the file
    let cfg = dir.path().join("c.txt");
    let o = trajnoise(&["simulate", "--config", path(&a), "--output", path(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_lines(&text), data_lines(&fs::read_to_string(&cfg).unwrap()));
}

#[test]
fn values_survive_a_write_read_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("in.txt");
    let values = [0.1, -1.0 / 3.0, 1e-7, 12345.678901234567, std::f64::consts::PI];
    let body: String = values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{} {v:e}\n", 51544 + i))
        .collect();
    let body = body + &(5..12).map(|i| format!("{} 0\n", 51544 + i)).collect::<String>();
    fs::write(&src, body).unwrap();
    let first = dir.path().join("first.fit");
    let o = trajnoise(&[
        "fit", "--input", path(&src), "--noise", "wn", "--degree", "0", "--output", path(&first),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mean = report_value(&fs::read_to_string(&first).unwrap(), "intercept");
    let expect = values.iter().sum::<f64>() / 12.0;
    assert!((mean - expect).abs() <= 1e-15 * expect.abs(), "{mean} vs {expect}");

    // a simulated file read back and re-simulated from its header matches bit for bit
    let sim = dir.path().join("sim.txt");
    let o = trajnoise(&["simulate", "--n", "50", "--noise", "wn", "--seed", "3", "--output", path(&sim)]);
    assert!(o.status.success());
    let written = data_lines(&fs::read_to_string(&sim).unwrap());
    let o = trajnoise(&["simulate", "--n", "50", "--noise", "wn", "--seed", "3"]);
    let printed = data_lines(&String::from_utf8(o.stdout).unwrap());
    for (w, p) in written.iter().zip(&printed) {
        assert_eq!(w.1.to_bits(), p.1.to_bits());
    }
}

#[test]
fn collinear_trajectory_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("s.txt");
    let o = trajnoise(&["simulate", "--n", "100", "--noise", "wn", "--output", path(&src)]);
    assert!(o.status.success());
    let o = trajnoise(&["fit", "--input", path(&src), "--noise", "wn", "--offsets", "51000"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("collinear"));
}

#[test]
fn missing_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let o = trajnoise(&["fit", "--input", path(&dir.path().join("absent.txt"))]);
    assert_eq!(o.status.code(), Some(4));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "51544 1\n51545 x\n").unwrap();
    let o = trajnoise(&["fit", "--input", path(&bad), "--noise", "wn"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let unordered = dir.path().join("unordered.txt");
    fs::write(&unordered, "51544 1\n51546 1\n51545 1\n").unwrap();
    let o = trajnoise(&["spectrum", "--input", path(&unordered)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn constant_series_has_only_a_dc_line() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("c.txt");
    let body: String = (0..64).map(|i| format!("{} 4.25\n", 51544 + i)).collect();
    fs::write(&src, body).unwrap();
    let welch = ["--method", "welch", "--window", "rectangular", "--detrend", "false"];
    for extra in [&["--method", "raw"][..], &welch[..]] {
        let mut args = vec!["spectrum", "--input", path(&src)];
        args.extend_from_slice(extra);
        let o = trajnoise(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let rows = data_lines(&String::from_utf8(o.stdout).unwrap());
        assert_eq!(rows[0].0, 0.0);
        assert!(rows[0].1 > 0.0);
        assert!(rows[1..].iter().all(|r| r.1 <= 1e-24 * rows[0].1), "{extra:?}");
    }
}

#[test]
fn fixed_noise_needs_no_search() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("s.txt");
    let o = trajnoise(&["simulate", "--n", "200", "--noise", "fn", "--seed", "5", "--output", path(&src)]);
    assert!(o.status.success());
    let o = trajnoise(&[
        "fit", "--input", path(&src), "--noise", "pl", "--kappa", "-1", "--sigma", "1", "--fix",
        "kappa", "--fix", "sigma",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 minimizer iterations"));
    let report = String::from_utf8(o.stdout).unwrap();
    assert_eq!(report_value(&report, "iterations"), 0.0);
    assert_eq!(report_value(&report, "kappa"), -1.0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n = 40\nnoise = wn\nseed = 1\n").unwrap();
    let o = trajnoise(&["simulate", "--config", path(&cfg), "--n", "25"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(data_lines(&text).len(), 25);
    assert!(text.contains("# seed: 1"));

    fs::write(&cfg, "bogus = 3\n").unwrap();
    let o = trajnoise(&["simulate", "--config", path(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn benchmark_then_fit_directory() {
    let dir = tempfile::tempdir().unwrap();
    let bsg = dir.path().join("bsg");
    let o = trajnoise(&["benchmark", "--seed", "9", "--output", path(&bsg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = fs::read_dir(&bsg)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.len(), 61);
    assert!(names.iter().any(|n| n == "truth.txt"));
    let manifest = fs::read_to_string(bsg.join("truth.txt")).unwrap();
    assert_eq!(manifest.matches("series = BSG").count(), 60);
    let first = fs::read_to_string(bsg.join("BSG01_east.txt")).unwrap();
    assert_eq!(data_lines(&first).len(), 5000);

    let sub = dir.path().join("two");
    fs::create_dir(&sub).unwrap();
    for n in ["BSG01_east.txt", "BSG01_up.txt"] {
        fs::copy(bsg.join(n), sub.join(n)).unwrap();
    }
    fs::copy(bsg.join("truth.txt"), sub.join("truth.txt")).unwrap();
    let fits = dir.path().join("fits");
    let o = trajnoise(&[
        "fit", "--input", path(&sub), "--output", path(&fits), "--noise", "wn", "--periods",
        "1,0.5", "--jobs", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut made: Vec<_> = fs::read_dir(&fits)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    made.sort();
    assert_eq!(made, ["BSG01_east.fit", "BSG01_up.fit"]);
}
