use std::fs;
use std::path::Path;
use std::process::Command;

const SMALL: &str = "num_users = 6\nnum_bs = 3\ntx_antennas = 1\nrx_antennas = 2\ncandidate_bs_limit = 2\n";

fn bsgame(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bsgame")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("small.cfg");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let res = bsgame(&[
            "--config", &cfg, "--trials", "1", "--seed", "7", "--snr-list", "10", "--out", out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push(out);
    }
    for file in ["run.csv", "rates.csv", "assoc.csv", "cdf.csv", "summary.csv", "trials.log"] {
        let a = fs::read(outputs[0].join(file)).unwrap();
        let b = fs::read(outputs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn fixed_mode_never_switches() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("fixed");
    let res = bsgame(&[
        "--config", &cfg, "--mode", "fixed", "--trials", "2", "--snr-list", "0,20", "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let assoc = fs::read_to_string(out.join("assoc.csv")).unwrap();
    assert_eq!(assoc.lines().count(), 1 + 6 * 2 * 2);
    for line in assoc.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], "fixed");
        assert_eq!(cols[4], cols[5], "{line}");
    }
    let run = fs::read_to_string(out.join("run.csv")).unwrap();
    assert!(run.lines().skip(1).all(|l| l.split(',').nth(7) == Some("0")));
    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert_eq!(rates.lines().count(), 1 + 6 * 2 * 2);
}

#[test]
fn bad_config_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.cfg");
    fs::write(&path, "num_users = 4\nno_such_key = 1\n").unwrap();
    let res = bsgame(&["--config", path.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("no_such_key"));
}

#[test]
fn np_check_prints_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    let sat = tmp.path().join("sat.cnf");
    fs::write(&sat, "c one clause\np cnf 3 1\n1 2 3 0\n").unwrap();
    let res = bsgame(&["--np-check", sat.to_str().unwrap()]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with("SATISFIABLE max_sum_rate=12.000000000 bits target=12 bits rate_matches=true"), "{text}");

    let unsat = tmp.path().join("unsat.cnf");
    fs::write(&unsat, "p cnf 2 2\n1 1 1 0\n-1 -1 -1 0\n").unwrap();
    let res = bsgame(&["--np-check", unsat.to_str().unwrap()]);
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with("UNSATISFIABLE") && text.contains("rate_matches=true"), "{text}");

    let broken = tmp.path().join("broken.cnf");
    fs::write(&broken, "p cnf 2 1\n1 2 0\n").unwrap();
    assert_eq!(bsgame(&["--np-check", broken.to_str().unwrap()]).status.code(), Some(2));
}
