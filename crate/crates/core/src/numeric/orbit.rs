//! R(x) = -sum_k delta(f^k(x)) with a fitted tail bound.

use serde::Serialize;

use super::real::Real;
use super::NumericError;

/// Stopping data for the orbit sum.
#[derive(Clone, Debug)]
pub struct TailModel {
    /// Parabolic order a of the germ (f(x) = x - c x^a + ...).
    pub parabolic_order: f64,
    /// Stop once the tail bound drops below this.
    pub tol: f64,
    /// |delta| at or below this is treated as zero and left out of the fit.
    pub noise: f64,
    pub max_steps: usize,
}

/// |delta(x)| <= c x^gamma fitted on the orbit; eps is the margin used in
/// the iterate bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub c: f64,
    pub gamma: f64,
    pub eps: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct OrbitSum<T> {
    pub value: T,
    pub steps: usize,
    /// Last orbit point reached.
    pub last_x: f64,
    pub tail_bound: f64,
    pub fit: Option<TailFit>,
    /// Every visited iterate satisfied the decay bound used for the tail.
    pub orbit_bound_ok: bool,
}

/// Least squares fit ly = b + gamma lx; c is raised so that every point
/// lies under c x^gamma.
fn fit_power(pts: &[(f64, f64)], a: f64) -> Option<TailFit> {
    let n = pts.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / nf, sy / nf);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let gamma = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    let lc = pts.iter().map(|(x, y)| y - gamma * x).fold(f64::NEG_INFINITY, f64::max);
    Some(TailFit { c: lc.exp(), gamma, eps: (gamma - (a - 1.0)) / 4.0, r2, points: n })
}

/// Bound on sum_{k>=0} |delta(f^k(x))| from |delta| <= c x^gamma and the
/// iterate decay f^k(x) <= x (1 + k/2 x^p)^(-1/p), p = a - 1 + eps:
/// c x^gamma * 2 x^-p / (gamma/p - 1).
pub fn tail_bound(fit: &TailFit, a: f64, x: f64) -> Result<f64, NumericError> {
    let p = a - 1.0 + fit.eps;
    if fit.eps <= 0.0 || fit.gamma <= p {
        return Err(NumericError::TailBound(format!(
            "tail bound inapplicable: fitted gamma = {:.4} <= a - 1 + eps = {:.4}",
            fit.gamma, p
        )));
    }
    Ok(fit.c * x.powf(fit.gamma) * 2.0 * x.powf(-p) / (fit.gamma / p - 1.0))
}

fn iterate_bound(x0: f64, k: usize, p: f64) -> f64 {
    x0 * (1.0 + k as f64 / 2.0 * x0.powf(p)).powf(-1.0 / p)
}

fn due(k: usize) -> bool {
    k <= 256 || k % (k / 16) == 0
}

/// Partial sums of -sum delta(x_k), x_{k+1} = step(x_k), until the fitted
/// tail bound is below `model.tol`. `delta` gets (x_k, x_{k+1}).
pub fn infinitesimal_value<T: Real>(
    x: &T,
    mut step: impl FnMut(&T) -> Result<T, NumericError>,
    mut delta: impl FnMut(&T, &T) -> Result<T, NumericError>,
    model: &TailModel,
) -> Result<OrbitSum<T>, NumericError> {
    let a = model.parabolic_order;
    let x0 = x.to_f64();
    let mut xk = x.clone();
    let mut acc = T::zero();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut xs: Vec<f64> = vec![x0];
    let mut quiet = 0usize;
    let mut last_err = None;
    for k in 1..=model.max_steps {
        let fx = step(&xk).map_err(|e| match e {
            NumericError::Domain(m) => NumericError::Domain(format!("orbit left domain at step {k}: {m}")),
            e => e,
        })?;
        let d = delta(&xk, &fx)?;
        acc = acc - d.clone();
        let df = d.to_f64().abs();
        let lx = xk.to_f64().ln();
        if df > model.noise && df.is_finite() {
            pts.push((lx, df.ln()));
            quiet = 0;
        } else {
            quiet += 1;
        }
        xk = fx;
        let xf = xk.to_f64();
        xs.push(xf);
        if !due(k) {
            continue;
        }
        let finish = |tail_bound: f64, fit: Option<TailFit>, acc: T| {
            let p = fit.as_ref().map_or(a - 1.0, |f| a - 1.0 + f.eps.max(0.0)).max(1e-3);
            let ok = xs.iter().enumerate().skip(1).all(|(j, &v)| v > 0.0 && v < iterate_bound(x0, j, p));
            OrbitSum { value: acc, steps: k, last_x: xf, tail_bound, fit, orbit_bound_ok: ok }
        };
        // delta has sunk below the noise floor and stays there
        if quiet >= 3 && pts.len() < 3 {
            return Ok(finish(model.noise * quiet as f64, fit_power(&pts, a), acc));
        }
        if let Some(fit) = fit_power(&pts, a) {
            match tail_bound(&fit, a, xf) {
                Ok(b) if b < model.tol => return Ok(finish(b, Some(fit), acc)),
                Ok(b) => last_err = Some(format!("tail bound {b:.3e} > tol {:.3e}", model.tol)),
                // a well populated fit that still decays too slowly will not recover
                Err(NumericError::TailBound(m)) if k >= 64 && pts.len() >= 32 => {
                    return Err(NumericError::TailBound(format!("{m} after {k} orbit steps")))
                }
                Err(NumericError::TailBound(m)) => last_err = Some(m),
                Err(e) => return Err(e),
            }
        }
    }
    Err(NumericError::TailBound(format!(
        "{} after {} orbit steps",
        last_err.unwrap_or_else(|| "no tail estimate".into()),
        model.max_steps
    )))
}

/// Whether f1^n(x) < x (1 + n/2 x^(q-1))^(-1/(q-1)) for f1(x) = x - x^q,
/// iterated in T.
pub fn orbit_bound_check<T: Real>(alpha_eps: f64, x: &T, n: usize) -> bool {
    let it = iterate_f1(alpha_eps, x, n);
    let y = it.last().cloned().unwrap_or_else(|| x.clone());
    y > T::zero() && holds(alpha_eps, x, n, &y)
}

fn holds<T: Real>(q: f64, x: &T, n: usize, y: &T) -> bool {
    let p = T::from_f64(q - 1.0);
    let half_n = T::from_f64(n as f64 / 2.0);
    let b = x.clone() * (T::one() + half_n * x.powf(&p)).powf(&-(p.recip()));
    *y < b
}

fn iterate_f1<T: Real>(q: f64, x: &T, n: usize) -> Vec<T> {
    let qt = T::from_f64(q);
    let mut out = Vec::with_capacity(n);
    let mut y = x.clone();
    for _ in 0..n {
        y = y.clone() - y.powf(&qt);
        out.push(y.clone());
    }
    out
}

/// Smallest n0 with the bound holding for all n0 <= n <= n_max (None if it
/// fails at n_max itself).
pub fn scan_n0<T: Real>(alpha_eps: f64, x: &T, n_max: usize) -> Option<usize> {
    let it = iterate_f1(alpha_eps, x, n_max);
    let mut n0 = 1;
    for (j, y) in it.iter().enumerate() {
        let n = j + 1;
        if !(*y > T::zero() && holds(alpha_eps, x, n, y)) {
            n0 = n + 1;
        }
    }
    (n0 <= n_max).then_some(n0)
}
