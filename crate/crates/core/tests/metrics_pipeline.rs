//! Metrics on the shipped images and statistical trends of the pipeline.

use std::path::Path;

use dkstp_cs::io::read_pgm;
use dkstp_cs::metrics::{mean_reconstruction_error_map, spearman};
use dkstp_cs::pipeline::{mae_vs_cr_sweep, parse_cr_grid, MaeSweepConfig};
use dkstp_cs::GrayImage;

fn camera() -> GrayImage {
    read_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/camera.pgm")).unwrap()
}

#[test]
fn error_map_mode_is_the_zero_bin() {
    for name in ["camera", "astronaut", "chelsea"] {
        let img = read_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("data/{name}.pgm"))).unwrap();
        let map = mean_reconstruction_error_map(&img, 2).unwrap();
        let (lo, hi) = map.histogram.bin_edges(map.histogram.mode());
        assert!(lo <= 0.0 && 0.0 < hi, "{name}: mode bin [{lo}, {hi})");
    }
}

#[test]
fn camera_error_map_regression() {
    let map = mean_reconstruction_error_map(&camera(), 2).unwrap();
    assert!((map.mae - CAMERA_MAE_GAMMA2).abs() < 1e-12, "mae {}", map.mae);
    assert_eq!(map.histogram.counts.iter().sum::<u64>(), 128 * 128);
}

/// numpy: mean |x − pair mean| over the column-major vector of camera.pgm / 255.
const CAMERA_MAE_GAMMA2: f64 = 0.013026817172181373;

#[test]
fn mae_decreases_with_ratio() {
    let cfg = MaeSweepConfig {
        cr_grid: parse_cr_grid("0.05:0.5:0.05").unwrap(),
        block: 16,
        seed: 21,
        ..Default::default()
    };
    let sweep = mae_vs_cr_sweep(&camera(), &cfg).unwrap();
    let means = sweep.mean_mae();
    let (cr, mae): (Vec<f64>, Vec<f64>) = means.iter().filter(|(c, _)| *c <= 0.5 + 1e-9).copied().unzip();
    assert_eq!(cr.len(), 10);
    let rho = spearman(&cr, &mae);
    assert!(rho <= -0.8, "spearman {rho}");
    for d in &sweep.diffs {
        assert!(d.mae_diff >= -d.stderr, "{d:?}");
    }
}
