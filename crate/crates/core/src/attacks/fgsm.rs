use crate::models::Regressor;

use super::AttackError;

/// `-1`, `0` or `1`. Unlike `f64::signum`, zero maps to zero.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// One fast-gradient-sign step: `x + epsilon * sign(d/dx (f(x) - y)^2)`.
///
/// Elements with zero gradient are left alone. With `clamp` the result is
/// clipped to `[0, 1]`.
pub fn fgsm<R: Regressor + ?Sized>(
    model: &R,
    x: &[f64],
    y: f64,
    epsilon: f64,
    clamp: bool,
) -> Result<Vec<f64>, AttackError> {
    if !(epsilon >= 0.0) {
        return Err(AttackError::Config(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    if epsilon == 0.0 {
        return Ok(x.to_vec());
    }
    let (_, grad) = model.loss_and_grad(x, y)?;
    Ok(x
        .iter()
        .zip(&grad)
        .map(|(&xi, &g)| {
            let v = xi + epsilon * sign(g);
            if clamp {
                v.clamp(0.0, 1.0)
            } else {
                v
            }
        })
        .collect())
}
