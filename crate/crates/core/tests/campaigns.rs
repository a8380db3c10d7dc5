mod common;

use afdm_core::sim::run_fer;
use common::{config, fer_series};

// Slope over 10..14 dB, 200 errors per point. Measured ratio is about 1.8
// on an independent seed; diversity orders alone would give 2.
#[test]
fn uncoded_slope_doubles_from_two_to_four_paths() {
    let slope = |p: &str| {
        let cfg = config(&[
            "n=32",
            "modulation=bpsk",
            "code=none",
            p,
            "seed=3",
            "snr_db=10:4:14",
            "min_frame_errors=200",
            "max_frames=2000000",
        ]);
        -fer_series(&cfg).high_snr_slope().expect("both points have errors")
    };
    let (s2, s4) = (slope("paths=2"), slope("paths=4"));
    let ratio = s4 / s2;
    assert!((1.5..=2.5).contains(&ratio), "slopes {s2:.4} {s4:.4} ratio {ratio:.3}");
}

#[test]
fn more_turbo_iterations_do_not_raise_fer() {
    let run = |t: &str| {
        let cfg = config(&[
            "n=128",
            "modulation=4qam",
            "code=A",
            "paths=2",
            t,
            "seed=5",
            "snr_db=12",
            "min_frames=2000",
            "max_frames=2000",
            "min_frame_errors=1000000",
        ]);
        let r = run_fer(&cfg).expect("campaign runs");
        assert_eq!(r[0].frames, 2000);
        r[0].frame_errors
    };
    let (e1, e3) = (run("t_turbo=1"), run("t_turbo=3"));
    assert!(e1 > 0, "no errors at T=1, the comparison is empty");
    assert!(e3 <= e1, "T=3 {e3} errors vs T=1 {e1}");
}
