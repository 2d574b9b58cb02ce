//! Angular power spectra on the DFT grid: a single on-grid path, the log
//! scaling used by the APS network, and the windowed similarity score.
//!
//! ```bash
//! cargo run --release --example angular_spectrum
//! ```

use r2c::covariance::CovarianceMatrix;
use r2c::scenario::UlaConfig;
use r2c::spectrum::{aps, dft_grid, from_log_scale, similarity, to_log_scale, top_indices, Aps};

fn main() -> r2c::Result<()> {
    let array = UlaConfig::half_wavelength(16);
    let grid = dft_grid(array.num_antennas, array.spacing)?;
    let n = array.num_antennas as f64;

    // a path exactly on bin 5 puts all N^2 of its energy in that bin
    let a = array.steering_vector(grid.angles[5]);
    let on_grid = aps(&CovarianceMatrix::new(&a * a.adjoint())?, &grid)?;
    println!("on-grid path: argmax bin {}, peak {:.3} (N^2 = {n2})", on_grid.argmax(), on_grid.peak(), n2 = n * n);

    // half a bin off spreads it over neighbours
    let mid = 0.5 * (grid.angles[5].sin() + grid.angles[6].sin());
    let a = array.steering_vector(mid.asin());
    let off_grid = aps(&CovarianceMatrix::new(&a * a.adjoint())?, &grid)?;
    let log = to_log_scale(&off_grid, -80.0);
    println!("off-grid path (dB):");
    for (i, v) in log.values.iter().enumerate() {
        println!("    bin {i:2} {:7.2} deg {v:7.2}", grid.angles[i].to_degrees());
    }
    let back = from_log_scale(&log);
    println!("log round trip max error: {:.2e}", back.values.iter().zip(&off_grid.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));

    println!("top 3 bins on vs off grid: {:?} / {:?}", top_indices(&on_grid, 3), top_indices(&off_grid, 3));
    for l in [1, 2, 5] {
        println!("S_{l}(off, on) = {:.4}", similarity(&off_grid, &on_grid, l));
    }
    let d1 = Aps::linear(vec![0.0, 0.0, 5.0, 6.0]);
    let d2 = Aps::linear(vec![4.0, 3.0, 2.0, 1.0]);
    println!("S_2([0,0,5,6], [4,3,2,1]) = {:.6} (3/7 = {:.6})", similarity(&d1, &d2, 2), 3.0 / 7.0);
    Ok(())
}
