use dvsnoise::pr_model::{FULL_BAND_HZ, TRUNCATED_F_MIN_HZ};
use dvsnoise::sweep::{find_knee, run_rms_sweep, PhotoGrid};
use dvsnoise::{PhotoreceptorModel, PixelParams, SweepSpec};
use proptest::prelude::*;

fn full_rms(i_photo: f64, i_pr: f64) -> f64 {
    PhotoreceptorModel::new(PixelParams::default().with_photocurrent(i_photo).with_bias(i_pr))
        .unwrap()
        .rms_noise(FULL_BAND_HZ.0, FULL_BAND_HZ.1)
        .unwrap()
}

fn knee(i_pr: f64) -> f64 {
    let spec = SweepSpec {
        i_photo: PhotoGrid::Range { min: 1e-16, max: 1e-6, per_decade: 10 },
        i_pr_values: vec![i_pr],
        f_min_values: vec![FULL_BAND_HZ.0],
        ..SweepSpec::default()
    };
    let rows = run_rms_sweep(&spec, &PixelParams::default()).unwrap();
    let x: Vec<f64> = rows.iter().map(|r| r.i_photo).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.v_rms).collect();
    find_knee(&x, &y).unwrap()
}

#[test]
fn knee_is_proportional_to_bias() {
    for i_pr in [1e-11, 2.5e-11] {
        let ratio = knee(4.0 * i_pr) / knee(i_pr);
        assert!((ratio - 4.0).abs() <= 1.0, "{ratio}");
    }
}

#[test]
fn bright_plateau_is_independent_of_bias() {
    let vals: Vec<f64> = [1e-11, 3.162e-11, 1e-10]
        .iter()
        .map(|&b| full_rms(100.0 * knee(b), b))
        .collect();
    let (lo, hi) = vals.iter().fold((f64::MAX, 0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo - 1.0 < 0.1, "{vals:?}");
}

#[test]
fn shot_fraction_regimes() {
    let i_pr = 1e-10;
    let k = knee(i_pr);
    let frac = |ip: f64| {
        PhotoreceptorModel::new(PixelParams::default().with_photocurrent(ip).with_bias(i_pr))
            .unwrap()
            .shot_noise_fraction(FULL_BAND_HZ.0, FULL_BAND_HZ.1)
            .unwrap()
    };
    let dark = frac(k / 100.0);
    assert!((0.15..=0.35).contains(&dark), "{dark}");
    assert!(frac(100.0 * k) <= 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn truncation_never_exceeds_full_band(
        log_ip in -14.0f64..-8.0,
        log_ipr in -12.0f64..-9.0,
    ) {
        let m = PhotoreceptorModel::new(
            PixelParams::default()
                .with_photocurrent(10f64.powf(log_ip))
                .with_bias(10f64.powf(log_ipr)),
        )
        .unwrap();
        let full = m.rms_noise(FULL_BAND_HZ.0, FULL_BAND_HZ.1).unwrap();
        let trunc = m.rms_noise(TRUNCATED_F_MIN_HZ, FULL_BAND_HZ.1).unwrap();
        prop_assert!(trunc <= full * (1.0 + 1e-6));
    }

    #[test]
    fn shot_fraction_is_a_ratio(log_ip in -15.0f64..-7.0) {
        let m = PhotoreceptorModel::new(PixelParams::default().with_photocurrent(10f64.powf(log_ip)))
            .unwrap();
        let f = m.shot_noise_fraction(FULL_BAND_HZ.0, FULL_BAND_HZ.1).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }
}
