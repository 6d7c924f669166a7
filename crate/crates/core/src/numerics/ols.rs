use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result, Scalar};

/// Least-squares fit `y ≈ X · slopes + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit<T> {
    pub slopes: Vec<T>,
    pub intercept: T,
    pub r_squared: T,
}

/// Ordinary least squares with an implicit intercept column.
///
/// Solves the normal equations of `[X | 1]` by Cholesky, followed by one
/// step of iterative refinement on the residual.
pub fn ols_fit<T: Scalar>(x: ArrayView2<'_, T>, y: ArrayView1<'_, T>) -> Result<RegressionFit<T>> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::invalid(format!("X has {n} rows but y has {} entries", y.len())));
    }
    if n <= d + 1 {
        return Err(Error::invalid(format!("need more than {} samples for {d} features, got {n}", d + 1)));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite regression input"));
    }

    let mut design = Array2::<T>::ones((n, d + 1));
    design.slice_mut(ndarray::s![.., ..d]).assign(&x);
    let normal = design.t().dot(&design);
    let factor = cholesky(&normal)?;

    let mut coef = cholesky_solve(&factor, &design.t().dot(&y));
    let residual = &y - &design.dot(&coef);
    let correction = cholesky_solve(&factor, &design.t().dot(&residual));
    coef += &correction;

    let fitted = design.dot(&coef);
    let slopes = coef.slice(ndarray::s![..d]).to_vec();
    let intercept = coef[d];
    let r_squared = r_squared_of(y, fitted.view());
    Ok(RegressionFit { slopes, intercept, r_squared })
}

// Constant y is fitted exactly, so its r² is taken as 1.
fn r_squared_of<T: Scalar>(y: ArrayView1<'_, T>, fitted: ArrayView1<'_, T>) -> T {
    let mean = y.mean_axis(Axis(0)).map(|m| m.into_scalar()).unwrap_or_else(T::zero);
    let ss_tot: T = y.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let ss_res: T = y.iter().zip(fitted.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
    if ss_tot == T::zero() {
        if ss_res == T::zero() { T::one() } else { T::neg_infinity() }
    } else {
        T::one() - ss_res / ss_tot
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// A pivot that falls below a relative tolerance of the largest diagonal
/// entry is reported as a singular system.
fn cholesky<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    let p = a.nrows();
    let max_diag = a.diag().iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let tol = T::epsilon() * T::of(64.0 * p as f64) * max_diag;
    let mut l = Array2::<T>::zeros((p, p));
    for j in 0..p {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > tol) {
            return Err(Error::Singular(format!(
                "normal matrix is rank deficient at column {j} (pivot {diag}, tolerance {tol})"
            )));
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in j + 1..p {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the lower factor `L`.
pub fn cholesky_solve<T: Scalar>(l: &Array2<T>, b: &Array1<T>) -> Array1<T> {
    let p = l.nrows();
    let mut z = b.clone();
    for i in 0..p {
        let mut s = z[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    for i in (0..p).rev() {
        let mut s = z[i];
        for k in i + 1..p {
            s -= l[[k, i]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    z
}
