use crate::scalar::Scalar;

use super::{GradError, Tape, Tensor, Var};

/// Denominator floor for relative error, so coordinates whose true
/// derivative is ~0 are judged on absolute error instead.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

/// Outcome of comparing autodiff against central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct FdReport<T> {
    pub passed: bool,
    pub max_rel_error: T,
    /// Flat index of the coordinate with the largest error.
    pub worst_index: usize,
    pub checked: usize,
}

/// Relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_error<T: Scalar>(a: T, b: T) -> T {
    let denom = a.abs().max(b.abs()).max(T::lit(REL_ERROR_FLOOR));
    (a - b).abs() / denom
}

/// Checks every coordinate of `x`.
///
/// `f` records a scalar-valued function of its input variable on the given
/// tape. It is invoked once with gradients enabled and twice per coordinate
/// without.
pub fn finite_diff_check<T, F>(f: F, x: &Tensor<T>, step: T, tol: T) -> Result<FdReport<T>, GradError>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, Var) -> Result<Var, GradError>,
{
    let coords: Vec<usize> = (0..x.len()).collect();
    finite_diff_check_at(f, x, &coords, step, tol)
}

/// Like [`finite_diff_check`] but only at the listed flat coordinates.
pub fn finite_diff_check_at<T, F>(
    f: F,
    x: &Tensor<T>,
    coords: &[usize],
    step: T,
    tol: T,
) -> Result<FdReport<T>, GradError>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, Var) -> Result<Var, GradError>,
{
    let mut tape = Tape::new();
    let xv = tape.param(x.clone());
    let out = f(&mut tape, xv)?;
    let grads = tape.backward(out)?;
    let analytic = grads
        .get(xv)
        .ok_or_else(|| GradError::Usage("input gradient missing".into()))?;

    let eval = |probe: Tensor<T>| -> Result<T, GradError> {
        let mut tape = Tape::new();
        let v = tape.constant(probe);
        let out = f(&mut tape, v)?;
        let value = tape.value(out);
        if value.len() != 1 {
            return Err(GradError::Usage(format!(
                "function must be scalar-valued, got shape {:?}",
                value.shape()
            )));
        }
        Ok(value.data()[0])
    };

    let two = T::lit(2.0);
    let mut worst = T::zero();
    let mut worst_index = 0;
    for &i in coords {
        if i >= x.len() {
            return Err(GradError::Usage(format!(
                "coordinate {i} out of range for {} elements",
                x.len()
            )));
        }
        let mut plus = x.clone();
        plus.data_mut()[i] = plus.data()[i] + step;
        let mut minus = x.clone();
        minus.data_mut()[i] = minus.data()[i] - step;
        let numeric = (eval(plus)? - eval(minus)?) / (two * step);
        let err = rel_error(analytic.data()[i], numeric);
        if err > worst || err.is_nan() {
            worst = err;
            worst_index = i;
        }
    }
    Ok(FdReport {
        passed: worst <= tol,
        max_rel_error: worst,
        worst_index,
        checked: coords.len(),
    })
}
