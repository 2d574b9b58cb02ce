//! Projects a noisy sample covariance onto the Toeplitz-Hermitian-PSD cone
//! with both solvers and reports the structure of the result.
//!
//! ```bash
//! cargo run --release --example toeplitz_projection
//! ```

use std::time::Instant;

use r2c::covariance::{first_column, project_toeplitz_psd_with, sample_covariance, ProjectionMethod};
use r2c::scenario::{simulate_radar_snapshots, RadarSimConfig, RadarSource, UlaConfig};
use r2c::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> r2c::Result<()> {
    let array = UlaConfig::half_wavelength(32);
    let sources = [
        RadarSource { angle: 0.3, gain: C64::new(1.0, 0.0) },
        RadarSource { angle: -0.7, gain: C64::new(0.0, 0.5) },
    ];
    // few snapshots and visible noise: the estimate is far from Toeplitz
    let radar = RadarSimConfig {
        num_samples: 24,
        noise_power: 0.05,
        ..RadarSimConfig::default()
    };
    let y = simulate_radar_snapshots(&sources, &array, &radar, &mut ChaCha8Rng::seed_from_u64(1));
    let r = sample_covariance(&y)?;
    println!(
        "sample covariance: toeplitz deviation {:.3e}, min eigenvalue {:.3e}",
        r.toeplitz_deviation(),
        r.min_eigenvalue()
    );

    for method in [ProjectionMethod::DualQuasiNewton, ProjectionMethod::Dykstra] {
        let t = Instant::now();
        let p = project_toeplitz_psd_with(&r, 1e-9, 20_000, method);
        println!(
            "{method:?}: {} iterations in {:.1?}, residual {:.2e}, converged {} | deviation {:.2e}, min eigenvalue {:.2e}, distance {:.4}",
            p.iterations,
            t.elapsed(),
            p.residual,
            p.converged,
            p.matrix.toeplitz_deviation(),
            p.matrix.min_eigenvalue(),
            (p.matrix.matrix() - r.matrix()).norm(),
        );
        let col = first_column(&p.matrix)?;
        let head: Vec<String> = col.col[..3].iter().map(|c| format!("{c:.4}")).collect();
        println!("    first column head: [{}]", head.join(", "));
    }
    Ok(())
}
