use ndarray::Array2;

use super::model::{client_forward, LayerGrad, SplitModel};
use super::SplitError;

/// Denominator floor for the relative error, so parameters whose true
/// gradient is ~0 are judged on absolute error.
const RELATIVE_FLOOR: f64 = 1e-3;

/// Largest relative discrepancy between back-propagated parameter gradients
/// (client and server) and central differences with step `eps`.
///
/// The relative error of a pair is `|a - n| / max(|a|, |n|, 1e-3)`.
pub fn finite_diff_check(model: &SplitModel, x: &Array2<f64>, labels: &[usize], eps: f64) -> Result<f64, SplitError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SplitError::InvalidConfig(format!("finite-difference step {eps}")));
    }
    let (smashed, cache) = client_forward(&model.client, x)?;
    let server = model.server.gradients(&smashed, labels)?;
    let client = model.client.gradients(&cache, &server.grad_smashed)?;

    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    let mut compare = |analytic: f64, numeric: f64| {
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
        worst = worst.max(err);
    };

    for (side, grads) in [(Side::Client, &client), (Side::Server, &server.layers)] {
        for (li, g) in grads.iter().enumerate() {
            for (idx, &analytic) in g.weights.indexed_iter() {
                let numeric = central(&mut probe, x, labels, eps, |m| &mut layer(m, side, li).weights[idx])?;
                compare(analytic, numeric);
            }
            for (j, &analytic) in g.bias.indexed_iter() {
                let numeric = central(&mut probe, x, labels, eps, |m| &mut layer(m, side, li).bias[j])?;
                compare(analytic, numeric);
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy)]
enum Side {
    Client,
    Server,
}

fn layer(m: &mut SplitModel, side: Side, i: usize) -> &mut super::model::Dense {
    match side {
        Side::Client => &mut m.client.layers_mut()[i],
        Side::Server => &mut m.server.layers_mut()[i],
    }
}

fn central<F>(m: &mut SplitModel, x: &Array2<f64>, labels: &[usize], eps: f64, mut slot: F) -> Result<f64, SplitError>
where
    F: FnMut(&mut SplitModel) -> &mut f64,
{
    let orig = *slot(m);
    *slot(m) = orig + eps;
    let up = m.loss(x, labels)?;
    *slot(m) = orig - eps;
    let down = m.loss(x, labels)?;
    *slot(m) = orig;
    Ok((up - down) / (2.0 * eps))
}

/// Flattened analytic gradients in client-then-server layer order, weights
/// before bias. Exposed for oracle comparisons.
pub fn analytic_gradients(model: &SplitModel, x: &Array2<f64>, labels: &[usize]) -> Result<(f64, Vec<f64>), SplitError> {
    let (smashed, cache) = client_forward(&model.client, x)?;
    let server = model.server.gradients(&smashed, labels)?;
    let client = model.client.gradients(&cache, &server.grad_smashed)?;
    let flat = |gs: &[LayerGrad]| -> Vec<f64> {
        gs.iter()
            .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied().collect::<Vec<_>>())
            .collect()
    };
    let mut out = flat(&client);
    out.extend(flat(&server.layers));
    Ok((server.loss, out))
}
