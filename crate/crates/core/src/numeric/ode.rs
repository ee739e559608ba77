//! Gragg-Bulirsch-Stoer extrapolation for the scalar flow x' = xi(x).

use super::real::Real;
use super::NumericError;

const KMAX: usize = 10;
const MAX_STEPS: usize = 100_000;

/// Modified midpoint rule with n substeps over one macro step of size h.
fn midpoint<T: Real>(
    xi: &mut impl FnMut(&T) -> Result<T, NumericError>,
    x0: &T,
    f0: &T,
    h: &T,
    n: usize,
) -> Result<T, NumericError> {
    let hs = h.clone() / T::from_i64(n as i64);
    let two_hs = hs.clone() * T::from_i64(2);
    let mut z0 = x0.clone();
    let mut z1 = x0.clone() + hs.clone() * f0.clone();
    for _ in 1..n {
        let z2 = z0 + two_hs.clone() * xi(&z1)?;
        z0 = z1;
        z1 = z2;
    }
    Ok((z0 + z1.clone() + hs * xi(&z1)?) / T::from_i64(2))
}

/// One extrapolated step; returns the value and the error estimate.
fn gbs_step<T: Real>(
    xi: &mut impl FnMut(&T) -> Result<T, NumericError>,
    x0: &T,
    h: &T,
    tol: &T,
) -> Result<(T, T), NumericError> {
    let f0 = xi(x0)?;
    let ns: Vec<usize> = (1..=KMAX).map(|j| 2 * j).collect();
    let mut table: Vec<T> = Vec::with_capacity(KMAX);
    let mut err = T::zero();
    for k in 0..KMAX {
        let mut t = midpoint(xi, x0, &f0, h, ns[k])?;
        // Neville in h^2 with exact ratios (n_k/n_j)^2
        let mut row = Vec::with_capacity(k + 1);
        row.push(t.clone());
        for j in 1..=k {
            let r = (ns[k] * ns[k]) as i64;
            let q = (ns[k - j] * ns[k - j]) as i64;
            let prev = table[j - 1].clone();
            t = t.clone() + (t.clone() - prev) * T::from_i64(q) / T::from_i64(r - q);
            row.push(t.clone());
        }
        if k > 0 {
            err = (row[k].clone() - table[k - 1].clone()).abs();
            let scale = row[k].clone().abs().max(T::epsilon());
            if k >= 2 && err <= tol.clone() * scale {
                return Ok((row[k].clone(), err));
            }
        }
        table = row;
    }
    Ok((table[KMAX - 1].clone(), err))
}

/// x(t_end) for x' = xi(x), x(0) = x0, with relative local error <= tol.
pub fn integrate_flow<T: Real>(
    mut xi: impl FnMut(&T) -> Result<T, NumericError>,
    x0: &T,
    t_end: &T,
    tol: &T,
) -> Result<T, NumericError> {
    let mut t = T::zero();
    let mut x = x0.clone();
    let mut h = t_end.clone();
    let min_h = t_end.clone().abs() * T::epsilon() * T::from_i64(1024);
    for _ in 0..MAX_STEPS {
        let left = t_end.clone() - t.clone();
        if left.abs() <= min_h {
            return Ok(x);
        }
        if h.clone().abs() > left.clone().abs() {
            h = left.clone();
        }
        let (x1, err) = gbs_step(&mut xi, &x, &h, tol)?;
        let scale = x1.clone().abs().max(T::epsilon());
        if err <= tol.clone() * scale && x1.is_finite() {
            t = t + h.clone();
            x = x1;
            h = h * T::from_i64(2);
        } else {
            h = h / T::from_i64(2);
            if h.clone().abs() < min_h {
                return Err(NumericError::StepUnderflow { t: t.to_f64(), x: x.to_f64() });
            }
        }
    }
    Err(NumericError::StepUnderflow { t: t.to_f64(), x: x.to_f64() })
}
