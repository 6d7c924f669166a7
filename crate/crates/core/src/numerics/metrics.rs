use crate::{Error, Result, Scalar};

fn check_pair<T>(y: &[T], yhat: &[T]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::invalid("metrics need at least one value"));
    }
    if y.len() != yhat.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", y.len(), yhat.len())));
    }
    Ok(())
}

/// Mean squared error.
pub fn mse<T: Scalar>(y: &[T], yhat: &[T]) -> Result<T> {
    check_pair(y, yhat)?;
    let s: T = y.iter().zip(yhat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(s / T::of(y.len() as f64))
}

/// Mean absolute error.
pub fn mae<T: Scalar>(y: &[T], yhat: &[T]) -> Result<T> {
    check_pair(y, yhat)?;
    let s: T = y.iter().zip(yhat).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(s / T::of(y.len() as f64))
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
///
/// Matrix-valued predictions are passed flattened.
pub fn r2<T: Scalar>(y: &[T], yhat: &[T]) -> Result<T> {
    check_pair(y, yhat)?;
    let mean = y.iter().copied().sum::<T>() / T::of(y.len() as f64);
    let ss_tot: T = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if ss_tot == T::zero() {
        return Err(Error::DegenerateInput("r2 of a constant target is undefined".into()));
    }
    let ss_res: T = y.iter().zip(yhat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(T::one() - ss_res / ss_tot)
}
