use std::path::Path;
use std::process::{Command, Output};

fn afdm(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_afdm"));
    cmd.args(args).env("RUST_LOG", "warn");
    match workers {
        Some(w) => cmd.env("AFDM_WORKERS", w),
        None => cmd.env_remove("AFDM_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: &[&str] = &[
    "-s", "n=32", "-s", "l_max=1", "-s", "alpha_max=2", "-s", "modulation=bpsk", "-s", "code=A",
    "-s", "min_frames=16", "-s", "max_frames=48", "-s", "min_frame_errors=8", "-s", "snr_db=0,4,8",
];

fn fer_run(out: &Path, workers: &str) -> Vec<u8> {
    let mut args = vec!["fer", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    stdout(&afdm(&args, Some(workers)));
    std::fs::read(out).unwrap()
}

#[test]
fn codes_table() {
    let out = stdout(&afdm(&["codes"], None));
    assert!(out.starts_with("# schema=afdm-lab/codes/v1\n"));
    assert!(out.contains("A,(3,1),1,3,12"));
    assert!(out.contains("B,(5,7),2,5,20"));
    assert!(out.contains("C,(51,77),5,8,32"));
}

#[test]
fn fer_csv_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = fer_run(&dir.path().join("a.csv"), "1");
    let b = fer_run(&dir.path().join("b.csv"), "3");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# schema=afdm-lab/fer/v1\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn interrupted_campaign_resumes_to_the_same_file() {
    let dir = tempfile::tempdir().unwrap();
    let full = fer_run(&dir.path().join("full.csv"), "2");

    let part = dir.path().join("part.csv");
    let mut args = vec!["fer", "--out", part.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&["-s", "snr_db=0"]);
    stdout(&afdm(&args, Some("2")));
    assert_ne!(std::fs::read(&part).unwrap(), full);
    assert_eq!(fer_run(&part, "2"), full);
}

#[test]
fn config_file_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small uncoded run\nn = 32\nl_max = 1\nalpha_max = 2\nmodulation = bpsk\ncode = none\nmin_frames = 16\nmax_frames = 32\nmin_frame_errors = 4\nsnr_db = 0:4:8\n").unwrap();
    let csv = dir.path().join("fer.csv");
    let dry = stdout(&afdm(&["fer", "-c", cfg.to_str().unwrap(), "--out", "unused.csv", "--dry-run"], None));
    assert!(dry.contains("code = none"));
    assert!(dry.contains("snr_db = 0,4,8"));
    stdout(&afdm(&["fer", "-c", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()], None));
    stdout(&afdm(&["fer", "-c", cfg.to_str().unwrap(), "-s", "waveform=ofdm", "--out", csv.to_str().unwrap()], None));

    let rep = dir.path().join("rep");
    let gaps = stdout(&afdm(&["report", csv.to_str().unwrap(), "--out-dir", rep.to_str().unwrap(), "--target-fer", "0.1"], None));
    assert!(gaps.contains("afdm/BPSK/none/P2,ofdm/BPSK/none/P2"));
    let svg = std::fs::read_to_string(rep.join("curves.svg")).unwrap();
    assert!(svg.contains("<polyline"));
    assert!(std::fs::read_to_string(rep.join("series.csv")).unwrap().contains("afdm/BPSK/none/P2"));
}

#[test]
fn coding_gain_rows_and_reproducibility() {
    let args = ["coding-gain", "--n", "32", "--paths", "1,2", "--d-e2", "4,8", "--geometry", "1:1", "--trials", "50"];
    let a = stdout(&afdm(&args, Some("1")));
    let b = stdout(&afdm(&args, Some("2")));
    assert_eq!(a, b);
    assert!(a.starts_with("# schema=afdm-lab/coding-gain/v1\n"));
    assert_eq!(a.lines().filter(|l| !l.starts_with('#')).count(), 1 + 4);
}

#[test]
fn pep_bound_report() {
    let out = stdout(&afdm(&["pep-bound", "--n", "64", "--paths", "3", "--d-e2", "8"], None));
    assert!(out.contains("rank = 3"));
    assert!(out.contains("chernoff_bound = "));
}

#[test]
fn bad_input_fails_cleanly() {
    let o = afdm(&["fer", "--out", "x.csv", "-s", "paths=0"], None);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("paths must be positive"));
    let o = afdm(&["fer", "--out", "x.csv", "-s", "wat=1"], None);
    assert!(!o.status.success());
    let o = afdm(&["codes"], Some("zero"));
    assert!(!o.status.success());
}
