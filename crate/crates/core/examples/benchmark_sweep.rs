//! PSNR of the three schemes over a grid of compression ratios, written as
//! CSV to stdout.

use std::path::PathBuf;

use dkstp_cs::io::{read_pgm, SWEEP_HEADER};
use dkstp_cs::metrics::mean_and_stderr;
use dkstp_cs::pipeline::{parse_cr_grid, run_benchmark, BenchmarkConfig};

fn main() -> dkstp_cs::Result<()> {
    let image = read_pgm(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/camera.pgm"))?;
    let image = image.crop(32, 32, 64, 64)?;
    let cfg = BenchmarkConfig { cr_grid: parse_cr_grid("0.1:0.5:0.2")?, trials: 2, seed: 9, ..Default::default() };
    let rows = run_benchmark(&image, &cfg)?;
    println!("{SWEEP_HEADER}");
    for r in &rows {
        println!("{},{},{},{},{:.3},{:.3},{:.3},{:.3}", r.method, r.cr, r.gamma, r.trial, r.psnr_db, r.mse, r.mae, r.seconds);
    }
    for method in &cfg.methods {
        for &cr in &cfg.cr_grid {
            let v: Vec<f64> = rows.iter().filter(|r| r.method == method.name() && r.cr == cr).map(|r| r.psnr_db).collect();
            let (mean, se) = mean_and_stderr(&v);
            eprintln!("{:>5} cr {cr:.2}: {mean:.2} ± {se:.2} dB", method.name());
        }
    }
    Ok(())
}
