use crate::Scalar;

use super::EvalError;

/// Correctly rounded sum of finite values (Shewchuk's algorithm with the
/// half-even fix-up from CPython's `math.fsum`). The result does not depend
/// on the order of the inputs.
pub fn exact_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut partials: Vec<T> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != T::zero() {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }

    let Some(mut n) = partials.len().checked_sub(1) else {
        return T::zero();
    };
    let mut hi = partials[n];
    let mut lo = T::zero();
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != T::zero() {
            break;
        }
    }
    if n > 0 {
        let below = partials[n - 1];
        if (lo < T::zero() && below < T::zero()) || (lo > T::zero() && below > T::zero()) {
            let y = lo + lo;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

fn check_pair<T: Scalar>(preds: &[T], labels: &[T]) -> Result<(), EvalError> {
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    if preds.len() != labels.len() {
        return Err(EvalError::Length {
            preds: preds.len(),
            labels: labels.len(),
        });
    }
    if let Some(bad) = labels.iter().find(|y| !(**y > T::zero())) {
        return Err(EvalError::Domain(format!(
            "labels must be > 0 (got {bad}); exclude zero-RUL windows first"
        )));
    }
    Ok(())
}

/// `100 * |{i : pred_i > (1 + alpha) * y_i}| / n`.
pub fn fooling_percentage<T: Scalar>(preds: &[T], labels: &[T], alpha: T) -> Result<T, EvalError> {
    check_pair(preds, labels)?;
    let factor = T::one() + alpha;
    let fooled = preds
        .iter()
        .zip(labels)
        .filter(|&(&p, &y)| p > factor * y)
        .count();
    Ok(T::count(fooled) * T::lit(100.0) / T::count(preds.len()))
}

/// Mean absolute percentage error, `100 * mean(|pred - y| / y)`.
pub fn mape<T: Scalar>(preds: &[T], labels: &[T]) -> Result<T, EvalError> {
    check_pair(preds, labels)?;
    let total = exact_sum(preds.iter().zip(labels).map(|(&p, &y)| (p - y).abs() / y));
    Ok(total * T::lit(100.0) / T::count(preds.len()))
}
