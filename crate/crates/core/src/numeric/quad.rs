//! Adaptive Gauss-Legendre quadrature.

use super::real::Real;
use super::NumericError;

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

pub const DEFAULT_POINTS: usize = 20;
const MAX_PANELS: usize = 200_000;

impl<T: Real> GaussLegendre<T> {
    /// Roots of P_n by Newton's method from the usual cosine guesses.
    pub fn new(n: usize) -> Self {
        let eps = T::epsilon() * T::from_i64(16);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut x = T::from_f64(guess);
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre(n, &x);
                dp = d.clone();
                let dx = p / d;
                x = x - dx.clone();
                if dx.abs() <= eps.clone() {
                    let (_, d) = legendre(n, &x);
                    dp = d;
                    break;
                }
            }
            let w = T::from_i64(2) / ((T::one() - x.clone() * x.clone()) * dp.clone() * dp);
            nodes.push(x);
            weights.push(w);
        }
        GaussLegendre { nodes, weights }
    }

    /// The fixed rule on [a, b].
    pub fn apply(&self, f: &mut impl FnMut(&T) -> Result<T, NumericError>, a: &T, b: &T) -> Result<T, NumericError> {
        let half = (b.clone() - a.clone()) / T::from_i64(2);
        let mid = (b.clone() + a.clone()) / T::from_i64(2);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = mid.clone() + half.clone() * x.clone();
            acc = acc + w.clone() * f(&t)?;
        }
        Ok(acc * half)
    }

    /// Adaptive bisection over consecutive breakpoints: a panel is accepted
    /// when its two halves agree with the whole to within its share of
    /// `tol`. Returns the value and the summed error estimate.
    pub fn integrate(
        &self,
        mut f: impl FnMut(&T) -> Result<T, NumericError>,
        breaks: &[T],
        tol: &T,
    ) -> Result<(T, T), NumericError> {
        let (Some(lo), Some(hi)) = (breaks.first(), breaks.last()) else {
            return Ok((T::zero(), T::zero()));
        };
        let total = (hi.clone() - lo.clone()).abs();
        if total.is_zero() {
            return Ok((T::zero(), T::zero()));
        }
        let mut acc = T::zero();
        let mut err = T::zero();
        let mut panels = 0usize;
        let mut stack = Vec::new();
        for w in breaks.windows(2).rev() {
            let whole = self.apply(&mut f, &w[0], &w[1])?;
            stack.push((w[0].clone(), w[1].clone(), whole));
        }
        while let Some((a, b, whole)) = stack.pop() {
            panels += 1;
            if panels > MAX_PANELS {
                return Err(NumericError::Tolerance(format!(
                    "quadrature did not reach {} within {MAX_PANELS} panels",
                    tol.to_sci(3)
                )));
            }
            let m = (a.clone() + b.clone()) / T::from_i64(2);
            let left = self.apply(&mut f, &a, &m)?;
            let right = self.apply(&mut f, &m, &b)?;
            let finer = left.clone() + right.clone();
            let diff = (finer.clone() - whole).abs();
            let share = tol.clone() * (b.clone() - a.clone()).abs() / total.clone();
            let floor = T::epsilon() * T::from_i64(64) * finer.abs();
            if diff <= share || diff <= floor {
                acc = acc + finer;
                err = err + diff;
            } else {
                stack.push((m.clone(), b, right));
                stack.push((a, m, left));
            }
        }
        Ok((acc, err))
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre<T: Real>(n: usize, x: &T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x.clone();
    for k in 2..=n {
        let kk = T::from_i64(k as i64);
        let p2 = (T::from_i64(2 * k as i64 - 1) * x.clone() * p1.clone() - T::from_i64(k as i64 - 1) * p0) / kk;
        p0 = p1;
        p1 = p2;
    }
    let nn = T::from_i64(n as i64);
    let d = nn * (x.clone() * p1.clone() - p0) / (x.clone() * x.clone() - T::one());
    (p1, d)
}

/// Breakpoints from `a` to `b` refined geometrically toward `b`, starting
/// at distance `h` from it.
pub fn geometric_breaks<T: Real>(a: &T, b: &T, h: &T) -> Vec<T> {
    let len = (b.clone() - a.clone()).abs();
    let sign = if *b > *a { T::one() } else { -T::one() };
    let mut pts = vec![b.clone()];
    let mut d = h.clone().abs();
    while d < len.clone() / T::from_i64(2) && pts.len() < 64 {
        pts.push(b.clone() - sign.clone() * d.clone());
        d = d * T::from_i64(2);
    }
    pts.push(a.clone());
    pts.reverse();
    pts
}

#[cfg(test)]
mod tests {
    use super::super::real::{with_digits, Mp};
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let g = GaussLegendre::<f64>::new(5);
        // degree 9 is integrated exactly by 5 points
        let v = g.apply(&mut |x: &f64| Ok(x.powi(9) + x.powi(8)), &0.0, &1.0).unwrap();
        assert!((v - (0.1 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn multiprecision_exp_integral() {
        with_digits(40, || {
            let g = GaussLegendre::<Mp>::new(DEFAULT_POINTS);
            let tol = Mp::from_f64(1e-35);
            let (v, _) = g
                .integrate(|x: &Mp| Ok(x.exp()), &[Mp::zero(), Mp::one()], &tol)
                .unwrap();
            let exact = Mp::one().exp() - Mp::one();
            assert!((v - exact).abs() < Mp::from_f64(1e-34));
        });
    }

    #[test]
    fn adaptive_handles_sharp_peak() {
        let g = GaussLegendre::<f64>::new(DEFAULT_POINTS);
        let f = |x: &f64| Ok(1.0 / (1e-4 + x * x));
        let (v, _) = g.integrate(f, &[-1.0, 1.0], &1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-8 * exact, "{v} {exact}");
    }

    #[test]
    fn breaks_cluster_at_the_end() {
        let b = geometric_breaks(&0.0, &1.0, &0.01);
        assert_eq!(b.first(), Some(&0.0));
        assert_eq!(b.last(), Some(&1.0));
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        let b = geometric_breaks(&1.0, &0.5, &0.01);
        assert!(b.windows(2).all(|w| w[0] > w[1]));
    }
}
