//! Builds both R2C networks, runs a forward pass and checks their analytic
//! gradients against central finite differences.
//!
//! ```bash
//! cargo run --release --example network_gradients
//! ```

use r2c::nn::{grad_check, ColApsOperator, ModelKind, NetworkParams, Objective, Samples};
use r2c::spectrum::dft_grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> r2c::Result<()> {
    let n = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = dft_grid(n, 0.5)?;

    for model in [ModelKind::Aps, ModelKind::Col] {
        let params = NetworkParams::init(model, n, &mut rng)?;
        let width = model.input_shape(n).iter().product::<usize>();
        let mut data = Samples::default();
        for _ in 0..4 {
            data.inputs.push((0..width).map(|_| rng.random_range(-1.0..1.0)).collect());
            data.targets.push(match model {
                ModelKind::Aps => (0..width).map(|_| rng.random_range(-1.0..1.0)).collect(),
                ModelKind::Col => (0..n).map(|_| rng.random_range(0.0..4.0)).collect(),
            });
        }
        let objective = match model {
            ModelKind::Aps => Objective::Mse,
            ModelKind::Col => Objective::ColAps(ColApsOperator::new(&grid)?),
        };
        let input = params.batch_input(&[&data.inputs[0]])?;
        let out = params.predict(&input)?;
        let err = grad_check(&params, &objective, &data, 1e-4, 300, &mut rng)?;
        println!(
            "{} net: {} layers, {} parameters, output shape {:?}, max relative gradient error {err:.2e}",
            model.name(),
            params.layers.len(),
            params.num_parameters(),
            out.shape,
        );
    }
    Ok(())
}
