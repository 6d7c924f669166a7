use crate::{Error, Result, Scalar};

/// Central-difference gradient `(f(x + h eᵢ) − f(x − h eᵢ)) / 2h`.
pub fn finite_diff_gradient<T, F>(mut f: F, x: &[T], h: T) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<T>,
{
    if !(h > T::zero()) {
        return Err(Error::invalid("finite difference step must be positive"));
    }
    let mut probe = x.to_vec();
    let two_h = h + h;
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe)?;
            probe[i] = x[i] - h;
            let down = f(&probe)?;
            probe[i] = x[i];
            Ok((up - down) / two_h)
        })
        .collect()
}
