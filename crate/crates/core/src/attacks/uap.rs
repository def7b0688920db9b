use rayon::prelude::*;

use crate::data::WindowSet;
use crate::models::{Regressor, PREDICT_CHUNK};
use crate::{rng, Scalar};

use super::{sign, AttackConfig, AttackError, Perturbation};

/// Elementwise clamp of `u` into `[-epsilon, epsilon]`.
pub fn project_linf<T: Scalar>(u: &[T], epsilon: T) -> Vec<T> {
    let mut out = u.to_vec();
    project_linf_in_place(&mut out, epsilon);
    out
}

pub fn project_linf_in_place<T: Scalar>(u: &mut [T], epsilon: T) {
    for v in u {
        *v = v.max(-epsilon).min(epsilon);
    }
}

fn add_into(x: &[f64], u: &[f64], clamp: bool, out: &mut Vec<f64>) {
    out.clear();
    out.extend(x.iter().zip(u).map(|(&a, &b)| {
        let v = a + b;
        if clamp {
            v.clamp(0.0, 1.0)
        } else {
            v
        }
    }));
}

fn check_len(expected: usize, u: &[f64]) -> Result<(), AttackError> {
    if u.len() != expected {
        return Err(AttackError::Shape {
            expected,
            got: u.len(),
        });
    }
    Ok(())
}

/// Predictions for `inputs`, each shifted by `u` when given. Chunks run on
/// the rayon pool; output order follows input order.
pub fn predict_shifted<R: Regressor + ?Sized>(
    model: &R,
    inputs: &[&[f64]],
    u: Option<&[f64]>,
    clamp: bool,
) -> Result<Vec<f64>, AttackError> {
    let chunks: Vec<Vec<f64>> = inputs
        .par_chunks(PREDICT_CHUNK)
        .map(|chunk| -> Result<Vec<f64>, AttackError> {
            match u {
                None => Ok(model.predict_batch(chunk)?),
                Some(u) => {
                    let shifted: Vec<Vec<f64>> = chunk
                        .iter()
                        .map(|x| {
                            let mut v = Vec::with_capacity(x.len());
                            add_into(x, u, clamp, &mut v);
                            v
                        })
                        .collect();
                    let refs: Vec<&[f64]> = shifted.iter().map(Vec::as_slice).collect();
                    Ok(model.predict_batch(&refs)?)
                }
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Fraction of windows with `y > 0` whose prediction under `u` exceeds
/// `(1 + alpha) * y`. Windows with `y == 0` are left out of the denominator.
pub fn check_fool<R: Regressor + ?Sized>(
    model: &R,
    data: &WindowSet,
    u: &[f64],
    alpha: f64,
    clamp: bool,
) -> Result<f64, AttackError> {
    check_len(data.m * data.n, u)?;
    let eligible: Vec<&[f64]> = data
        .windows
        .iter()
        .filter(|w| w.y > 0.0)
        .map(|w| w.x.as_slice())
        .collect();
    if eligible.is_empty() {
        return Err(AttackError::NoEligibleSamples);
    }
    let labels = data.windows.iter().filter(|w| w.y > 0.0).map(|w| w.y);
    let preds = predict_shifted(model, &eligible, Some(u), clamp)?;
    let fooled = preds
        .iter()
        .zip(labels)
        .filter(|&(&p, y)| p > (1.0 + alpha) * y)
        .count();
    Ok(fooled as f64 / eligible.len() as f64)
}

/// Result of the greedy inner solve.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolution {
    pub r: Vec<f64>,
    /// Sign steps taken.
    pub steps: usize,
    /// `f(x + r) > (1 + alpha) * y` holds.
    pub converged: bool,
    /// The model gradient vanished, so no direction was available.
    pub zero_gradient: bool,
}

/// Smallest number of sign steps `r <- r + step * sign(df/dx)` after which
/// `f(x_plus_u + r) > (1 + alpha) * y`, up to `max_iters` steps.
///
/// The steps ascend the model output, which pushes toward overprediction
/// regardless of which side of `y` the prediction starts on. If the budget
/// runs out the accumulated `r` is returned with `converged == false`.
pub fn inner_min_r<R: Regressor + ?Sized>(
    model: &R,
    x_plus_u: &[f64],
    y: f64,
    alpha: f64,
    step: f64,
    max_iters: usize,
    clamp: bool,
) -> Result<InnerSolution, AttackError> {
    let threshold = (1.0 + alpha) * y;
    let mut r = vec![0.0; x_plus_u.len()];
    let mut point = Vec::with_capacity(x_plus_u.len());
    for k in 0..=max_iters {
        add_into(x_plus_u, &r, clamp, &mut point);
        if k == max_iters {
            let f = model.predict(&point)?;
            return Ok(InnerSolution {
                r,
                steps: k,
                converged: f > threshold,
                zero_gradient: false,
            });
        }
        let (f, grad) = model.output_and_grad(&point)?;
        if f > threshold {
            return Ok(InnerSolution {
                r,
                steps: k,
                converged: true,
                zero_gradient: false,
            });
        }
        if grad.iter().all(|&g| g == 0.0) {
            log::debug!("inner solve: zero input gradient after {k} steps");
            return Ok(InnerSolution {
                r: vec![0.0; x_plus_u.len()],
                steps: k,
                converged: false,
                zero_gradient: true,
            });
        }
        for (ri, g) in r.iter_mut().zip(&grad) {
            *ri += step * sign(*g);
        }
    }
    unreachable!("loop returns at k == max_iters")
}

/// Progress notifications from [`uap_compute_observed`].
#[derive(Debug)]
pub enum UapEvent<'a> {
    /// `u` was just updated from the window at `sample` (an index into the data).
    Update {
        epoch: usize,
        sample: usize,
        u: &'a [f64],
        inner: &'a InnerSolution,
    },
    /// End of a pass over the data, with the fooling ratio afterwards.
    EpochEnd { epoch: usize, fooling: f64, u: &'a [f64] },
}

/// Computes a universal perturbation over `data`.
pub fn uap_compute<R: Regressor + ?Sized>(
    model: &R,
    data: &WindowSet,
    cfg: &AttackConfig,
) -> Result<Perturbation, AttackError> {
    uap_compute_observed(model, data, cfg, |_| {})
}

/// [`uap_compute`] with a callback after every update and every epoch.
///
/// Each epoch visits the windows with `y > 0` in a freshly shuffled order;
/// every window not yet fooled contributes an inner solve whose step is
/// added to `U` and projected back onto the epsilon ball immediately.
/// Stops once the fooling ratio reaches `r_fool` or after `e_fool` epochs.
pub fn uap_compute_observed<R, F>(
    model: &R,
    data: &WindowSet,
    cfg: &AttackConfig,
    mut observer: F,
) -> Result<Perturbation, AttackError>
where
    R: Regressor + ?Sized,
    F: FnMut(&UapEvent<'_>),
{
    cfg.validate()?;
    let dim = data.m * data.n;
    let eligible: Vec<usize> = (0..data.len()).filter(|&i| data.windows[i].y > 0.0).collect();
    if eligible.is_empty() {
        return Err(AttackError::NoEligibleSamples);
    }
    let mut u = vec![0.0; dim];
    let mut fooling = check_fool(model, data, &u, cfg.alpha, cfg.clamp_inputs)?;
    let mut epochs = 0;
    let mut shuffle = rng::seeded(cfg.seed);
    let step = cfg.step();
    let mut point = Vec::with_capacity(dim);

    // Nothing fits in a zero ball; skip the passes.
    let active = cfg.epsilon > 0.0;
    while active && fooling < cfg.r_fool && epochs < cfg.e_fool {
        let order = rng::permutation(eligible.len(), &mut shuffle);
        for &k in &order {
            let i = eligible[k];
            let w = &data.windows[i];
            let threshold = (1.0 + cfg.alpha) * w.y;
            add_into(&w.x, &u, cfg.clamp_inputs, &mut point);
            if model.predict(&point)? > threshold {
                continue;
            }
            let inner = inner_min_r(
                model,
                &point,
                w.y,
                cfg.alpha,
                step,
                cfg.inner_max_iters,
                cfg.clamp_inputs,
            )?;
            if inner.steps == 0 {
                continue;
            }
            for (ui, ri) in u.iter_mut().zip(&inner.r) {
                *ui += ri;
            }
            project_linf_in_place(&mut u, cfg.epsilon);
            debug_assert!(u.iter().all(|v| v.abs() <= cfg.epsilon));
            observer(&UapEvent::Update {
                epoch: epochs,
                sample: i,
                u: &u,
                inner: &inner,
            });
        }
        fooling = check_fool(model, data, &u, cfg.alpha, cfg.clamp_inputs)?;
        observer(&UapEvent::EpochEnd {
            epoch: epochs,
            fooling,
            u: &u,
        });
        log::info!("uap epoch {epochs}: fooling ratio {fooling:.4}");
        epochs += 1;
    }

    Ok(Perturbation {
        m: data.m,
        n: data.n,
        values: u,
        epsilon: cfg.epsilon,
        alpha: cfg.alpha,
        source_model: model.label(),
        achieved_fooling: fooling,
        epochs_run: epochs,
    })
}
