use std::process::{Command, Output};

use beeid::cli::{BOUNDS_HEADER, SIMULATE_HEADER};
use beeid::codebook::Codebook;

fn beeid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beeid"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn cells(line: &str) -> Vec<Option<f64>> {
    line.split(',')
        .map(|s| {
            if s.is_empty() {
                None
            } else {
                Some(s.parse().unwrap())
            }
        })
        .collect()
}

#[test]
fn bounds_csv_shape() {
    let o = beeid(&["bounds", "--p", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(BOUNDS_HEADER));
    let rows: Vec<_> = lines.map(cells).collect();
    assert_eq!(rows.len(), 200);
    let first = &rows[0];
    assert_eq!(first[0], Some(0.0));
    assert!((first[5].unwrap() - 2.33).abs() < 0.005);
    let r_trc = 0.175_798_977_866_598;
    for r in &rows {
        let rate = r[0].unwrap();
        assert_eq!(r[3].is_some(), rate < r_trc, "R = {rate}");
        if let (Some(id), Some(jd)) = (r[3], r[4]) {
            assert!((jd - 2.0 * id).abs() < 1e-8);
        }
    }
    assert_eq!(rows[199][0], Some(0.6));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha_p"));
}

#[test]
fn bounds_to_file_and_bad_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.csv");
    let o = beeid(&[
        "bounds",
        "--p",
        "0.1",
        "--steps",
        "11",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(stdout(&o).contains("alpha_p"));

    assert_eq!(beeid(&["bounds", "--p", "0.7"]).status.code(), Some(2));
    assert_eq!(
        beeid(&["bounds", "--r-min", "0.5", "--r-max", "0.2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(beeid(&["bounds", "--steps", "1"]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate", "--n", "8,12", "--rate", "0.25", "--p", "0.05", "--trials", "2000", "--seed",
        "42",
    ];
    let a = beeid(&args);
    let b = beeid(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], SIMULATE_HEADER);
    assert_eq!(lines.len(), 3);
    for (line, n, m) in [(lines[1], "8", "4"), (lines[2], "12", "8")] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 12);
        assert_eq!(
            (f[0], f[1], f[4], f[5], f[6]),
            (n, m, "rce", "joint", "2000")
        );
        assert_eq!(f[2].parse::<f64>().unwrap(), 0.25);
        assert_eq!(f[3].parse::<f64>().unwrap(), 0.05);
        // Ten significant digits.
        assert_eq!(
            f[8].trim_start_matches("0.").trim_start_matches('0').len(),
            10
        );
    }
}

#[test]
fn simulate_without_seed_reports_it() {
    let o = beeid(&["simulate", "--n", "8", "--rate", "0.25", "--trials", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8(o.stderr).unwrap();
    let seed = err
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .expect("seed echoed");
    let again = beeid(&[
        "simulate", "--n", "8", "--rate", "0.25", "--trials", "50", "--seed", seed,
    ]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn simulate_decoders_and_errors() {
    let bf = beeid(&[
        "simulate",
        "--n",
        "12",
        "--rate",
        "0.25",
        "--decoder",
        "bruteforce",
        "--trials",
        "200",
        "--seed",
        "1",
    ]);
    assert_eq!(bf.status.code(), Some(0));
    assert!(stdout(&bf).contains(",bruteforce,"));
    let trc = beeid(&[
        "simulate",
        "--n",
        "16",
        "--rate",
        "0.2",
        "--ensemble",
        "trc",
        "--decoder",
        "gmd",
        "--trials",
        "200",
        "--seed",
        "1",
    ]);
    assert_eq!(trc.status.code(), Some(0));
    assert!(stdout(&trc).contains(",trc,gmd,"));

    for bad in [
        vec![
            "simulate",
            "--n",
            "20",
            "--rate",
            "0.25",
            "--decoder",
            "bruteforce",
        ],
        vec![
            "simulate",
            "--n",
            "12",
            "--rate",
            "0.6",
            "--ensemble",
            "trc",
        ],
        vec!["simulate", "--n", "12", "--rate", "0.25", "--p", "0.5"],
        vec!["simulate", "--n", "12", "--rate", "0.25", "--trials", "0"],
        vec!["simulate", "--n", "12", "--rate", "0"],
        vec!["simulate", "--rate", "0.25"],
        vec!["frobnicate"],
    ] {
        assert_eq!(beeid(&bad).status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn verify_passes_and_catches_faults() {
    let ok = beeid(&["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(!stdout(&ok).contains("FAIL"));

    let quarter = beeid(&["verify", "--p", "0.25", "--instances", "10"]);
    assert_eq!(quarter.status.code(), Some(0));

    let faulty = beeid(&["verify", "--r1-shift", "-0.01", "--instances", "0"]);
    assert_eq!(faulty.status.code(), Some(1));
    assert!(stdout(&faulty).contains("FAIL"));
}

#[test]
fn codebook_generate_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let rce = dir.path().join("rce.txt");
    let o = beeid(&[
        "codebook",
        "generate",
        "--n",
        "16",
        "--m",
        "8",
        "--seed",
        "3",
        "--out",
        rce.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&rce).unwrap();
    assert!(text.starts_with("8 16\n"));
    assert_eq!(Codebook::from_text(&text).unwrap().to_text(), text);

    let trc = dir.path().join("trc.txt");
    let o = beeid(&[
        "codebook",
        "generate",
        "--n",
        "40",
        "--rate",
        "0.1",
        "--ensemble",
        "trc",
        "--seed",
        "3",
        "--out",
        trc.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout(&beeid(&["codebook", "inspect", trc.to_str().unwrap()]));
    assert!(report.contains("m = 16"), "{report}");
    assert!(report.contains("satisfied"), "{report}");
    assert!(
        report.contains("greedy_pairs = 4 (disjoint: yes)"),
        "{report}"
    );

    let exhausted = beeid(&[
        "codebook",
        "generate",
        "--n",
        "12",
        "--m",
        "5",
        "--ensemble",
        "trc",
        "--max-attempts",
        "0",
    ]);
    assert_eq!(exhausted.status.code(), Some(1));
    assert_eq!(
        beeid(&["codebook", "generate", "--n", "12"]).status.code(),
        Some(2)
    );

    let broken = dir.path().join("broken.txt");
    std::fs::write(&broken, "2 3\n010\n01\n").unwrap();
    assert_eq!(
        beeid(&["codebook", "inspect", broken.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}
