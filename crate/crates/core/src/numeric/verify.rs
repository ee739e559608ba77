//! Psi = (summed blocks) + (orbit sum), and the Abel residual on a grid.

use std::cell::RefCell;
use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::germ::GermEvaluator;
use super::orbit::{infinitesimal_value, OrbitSum, TailFit, TailModel};
use super::real::{coeff, Real};
use super::sums::{PreparedBlock, SumContext};
use super::NumericError;
use crate::formal::FatouExpansion;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericOptions {
    /// Target accuracy of Psi values.
    pub tol: f64,
    pub digits: usize,
    /// Lower end of the integrals of divergent blocks.
    pub d: f64,
    pub max_orbit: usize,
    pub quad_points: usize,
    /// Relative local error of the flow integrator; tol * 1e-6 if unset.
    pub ode_tol: Option<f64>,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            tol: 1e-9,
            digits: super::DEFAULT_DIGITS,
            d: (-1f64).exp(),
            max_orbit: 200_000,
            quad_points: super::DEFAULT_POINTS,
            ode_tol: None,
        }
    }
}

impl NumericOptions {
    pub fn ode_tol(&self) -> f64 {
        self.ode_tol.unwrap_or(self.tol * 1e-6)
    }

    fn quad_tol(&self) -> f64 {
        self.tol * 1e-3
    }
}

/// Sample points `start:stop:count:geom|lin`, emitted from the largest down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub geometric: bool,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let (lo, hi) = (self.start.min(self.stop), self.start.max(self.stop));
        let n = self.count.max(1);
        let mut v: Vec<f64> = (0..n)
            .map(|i| {
                let s = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                if self.geometric {
                    (hi.ln() + s * (lo.ln() - hi.ln())).exp()
                } else {
                    hi + s * (lo - hi)
                }
            })
            .collect();
        v.dedup();
        v
    }
}

impl FromStr for Grid {
    type Err = NumericError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericError::Domain(format!("grid '{s}': expected start:stop:count[:geom|lin]"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let geometric = match parts.get(3).map(|p| p.trim()) {
            None | Some("geom") => true,
            Some("lin") => false,
            _ => return Err(bad()),
        };
        let edge = (-1f64).exp();
        if !(start > 0.0 && stop > 0.0 && start < edge && stop < edge) || count < 2 || start == stop {
            return Err(NumericError::Domain(format!(
                "grid '{s}' must have two or more distinct points inside (0, 1/e)"
            )));
        }
        Ok(Grid { start, stop, count, geometric })
    }
}

#[derive(Clone, Debug)]
pub struct FatouValue<T> {
    pub psi: T,
    /// Constant plus the integral sums of all blocks.
    pub blocks: T,
    pub orbit: OrbitSum<T>,
}

/// Evaluates Psi for one germ; values of f and of the truncated residual
/// are cached, since orbits from x and f(x) overlap.
pub struct FatouEvaluator<T: Real> {
    pub fexp: FatouExpansion,
    pub germ: GermEvaluator<T>,
    pub opts: NumericOptions,
    ctx: SumContext<T>,
    blocks: Vec<PreparedBlock<T>>,
    constant: T,
    qtol: T,
    model: TailModel,
    f_cache: RefCell<HashMap<String, T>>,
    d_cache: RefCell<HashMap<String, T>>,
}

impl<T: Real> FatouEvaluator<T> {
    pub fn new(fexp: FatouExpansion, germ: GermEvaluator<T>, opts: NumericOptions) -> Result<Self, NumericError> {
        let ctx = SumContext::new(opts.quad_points, &T::from_f64(opts.d))?;
        let blocks = fexp.blocks.iter().map(PreparedBlock::new).collect();
        let qtol = opts.quad_tol();
        let model = TailModel {
            parabolic_order: *fexp.parabolic_order.numer() as f64 / *fexp.parabolic_order.denom() as f64,
            tol: opts.tol / 10.0,
            noise: (qtol * 100.0).max(T::epsilon().to_f64() * 1e4),
            max_steps: opts.max_orbit,
        };
        Ok(FatouEvaluator {
            constant: coeff(&fexp.constant),
            fexp,
            germ,
            ctx,
            blocks,
            qtol: T::from_f64(qtol),
            model,
            opts,
            f_cache: RefCell::default(),
            d_cache: RefCell::default(),
        })
    }

    fn key(x: &T) -> String {
        x.to_sci(T::digits() + 8)
    }

    pub fn f(&self, x: &T) -> Result<T, NumericError> {
        let k = Self::key(x);
        if let Some(v) = self.f_cache.borrow().get(&k) {
            return Ok(v.clone());
        }
        let v = self.germ.step(x)?;
        self.f_cache.borrow_mut().insert(k, v.clone());
        Ok(v)
    }

    /// 1 - (Psi_N(f(x)) - Psi_N(x)) for the summed truncated expansion.
    pub fn delta(&self, x: &T, fx: &T) -> Result<T, NumericError> {
        let k = Self::key(x);
        if let Some(v) = self.d_cache.borrow().get(&k) {
            return Ok(v.clone());
        }
        let v = T::one() - self.ctx.increment(&self.blocks, x, fx, &self.qtol)?;
        self.d_cache.borrow_mut().insert(k, v.clone());
        Ok(v)
    }

    /// Integral sums of all blocks at x, without the constant.
    pub fn blocks_value(&self, x: &T) -> Result<T, NumericError> {
        let mut acc = T::zero();
        for b in &self.blocks {
            acc = acc + self.ctx.block_value(b, x, &self.qtol)?;
        }
        Ok(acc)
    }

    /// Sums of the principal blocks only.
    pub fn principal_value(&self, x: &T) -> Result<T, NumericError> {
        let mut acc = T::zero();
        for b in &self.blocks[..self.fexp.critical_index] {
            acc = acc + self.ctx.block_value(b, x, &self.qtol)?;
        }
        Ok(acc)
    }

    fn value_raw(&self, x: &T) -> Result<FatouValue<T>, NumericError> {
        let blocks = self.blocks_value(x)?;
        let orbit = infinitesimal_value(x, |y: &T| self.f(y), |y: &T, fy: &T| self.delta(y, fy), &self.model)?;
        Ok(FatouValue { psi: blocks.clone() + orbit.value.clone(), blocks, orbit })
    }

    pub fn value(&self, x: &T) -> Result<FatouValue<T>, NumericError> {
        let mut v = self.value_raw(x)?;
        v.psi = v.psi + self.constant.clone();
        v.blocks = v.blocks + self.constant.clone();
        Ok(v)
    }

    /// Psi(f(x)) - Psi(x) - 1 with each side summed along its own orbit.
    pub fn verify(&self, grid: &[f64]) -> Result<ResidualReport<T>, NumericError> {
        let mut rows = Vec::with_capacity(grid.len());
        let mut max_steps = 0;
        let mut max_tail: f64 = 0.0;
        let mut fits = Vec::new();
        for &xf in grid {
            let x = T::from_f64(xf);
            let fx = self.f(&x)?;
            let px = self.value_raw(&x)?;
            let pf = self.value_raw(&fx)?;
            let residual = pf.psi.clone() - px.psi.clone() - T::one();
            let delta = self.delta(&x, &fx)?;
            for o in [&px.orbit, &pf.orbit] {
                max_steps = max_steps.max(o.steps);
                max_tail = max_tail.max(o.tail_bound);
            }
            fits.push(px.orbit.fit.clone());
            rows.push(ResidualRow {
                x,
                f_x: fx,
                psi_x: px.psi + self.constant.clone(),
                psi_f_x: pf.psi + self.constant.clone(),
                residual,
                delta,
            });
        }
        let a = self.model.parabolic_order;
        let max_residual = rows.iter().map(|r| r.residual.to_f64().abs()).fold(0.0, f64::max);
        let xs: Vec<f64> = rows.iter().map(|r| r.x.to_f64()).collect();
        let ds: Vec<f64> = rows.iter().map(|r| r.delta.to_f64().abs()).collect();
        let above: Vec<(f64, f64)> =
            xs.iter().zip(&ds).filter(|(_, d)| **d > self.model.noise).map(|(x, d)| (*x, *d)).collect();
        let slope = if above.len() >= 3 {
            let (x, d): (Vec<f64>, Vec<f64>) = above.into_iter().unzip();
            log_log_fit(&x, &d)
        } else {
            None
        };
        let slope_ok = slope.as_ref().is_none_or(|f| f.slope > a - 1.0);
        let diffs: Vec<f64> = rows.windows(2).map(|w| (w[1].psi_x.clone() - w[0].psi_x.clone()).to_f64()).collect();
        let monotone = diffs.iter().all(|d| *d > 0.0) || diffs.iter().all(|d| *d < 0.0);
        let finite = rows.iter().all(|r| r.residual.is_finite());
        Ok(ResidualReport {
            passed: finite && max_residual < self.opts.tol && slope_ok && monotone,
            rows,
            tol: self.opts.tol,
            quad_tol: self.opts.quad_tol(),
            orbit_tol: self.model.tol,
            ode_tol: self.opts.ode_tol(),
            digits: T::digits(),
            max_residual,
            slope,
            min_slope: a - 1.0,
            slope_ok,
            monotone,
            max_orbit_steps: max_steps,
            max_tail_bound: max_tail,
            tail_fits: fits,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ResidualRow<T> {
    pub x: T,
    pub f_x: T,
    pub psi_x: T,
    pub psi_f_x: T,
    pub residual: T,
    /// Abel residual of the summed truncated expansion.
    pub delta: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least squares line through (log x, log y) for positive finite pairs.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LineFit { slope, intercept: my - slope * mx, r2, points: n })
}

#[derive(Clone, Debug)]
pub struct ResidualReport<T> {
    pub rows: Vec<ResidualRow<T>>,
    pub tol: f64,
    pub quad_tol: f64,
    pub orbit_tol: f64,
    pub ode_tol: f64,
    pub digits: usize,
    pub max_residual: f64,
    /// Decay of |delta| over the grid; None when delta is at noise level.
    pub slope: Option<LineFit>,
    pub min_slope: f64,
    pub slope_ok: bool,
    pub monotone: bool,
    pub max_orbit_steps: usize,
    pub max_tail_bound: f64,
    pub tail_fits: Vec<Option<TailFit>>,
    pub passed: bool,
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    passed: bool,
    points: usize,
    max_residual: String,
    tol: String,
    quad_tol: String,
    orbit_tol: String,
    ode_tol: String,
    digits: usize,
    delta_slope: Option<&'a LineFit>,
    min_slope: f64,
    slope_ok: bool,
    monotone: bool,
    max_orbit_steps: usize,
    max_tail_bound: String,
}

impl<T: Real> ResidualReport<T> {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,f_x,psi_x,psi_f_x,residual\n");
        let d = self.digits;
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.x.to_sci(d),
                r.f_x.to_sci(d),
                r.psi_x.to_sci(d),
                r.psi_f_x.to_sci(d),
                r.residual.to_sci(d)
            ));
        }
        s
    }

    pub fn summary_json(&self) -> String {
        let e = |v: f64| format!("{v:e}");
        let s = ReportSummary {
            passed: self.passed,
            points: self.rows.len(),
            max_residual: e(self.max_residual),
            tol: e(self.tol),
            quad_tol: e(self.quad_tol),
            orbit_tol: e(self.orbit_tol),
            ode_tol: e(self.ode_tol),
            digits: self.digits,
            delta_slope: self.slope.as_ref(),
            min_slope: self.min_slope,
            slope_ok: self.slope_ok,
            monotone: self.monotone,
            max_orbit_steps: self.max_orbit_steps,
            max_tail_bound: e(self.max_tail_bound),
        };
        serde_json::to_string_pretty(&s).expect("report serializes")
    }
}

pub fn fatou_value<T: Real>(
    germ: &GermEvaluator<T>,
    fexp: &FatouExpansion,
    x: &T,
    opts: &NumericOptions,
) -> Result<T, NumericError> {
    let ev = FatouEvaluator::new(fexp.clone(), germ.clone(), opts.clone())?;
    Ok(ev.value(x)?.psi)
}

pub fn verify_abel<T: Real>(
    germ: &GermEvaluator<T>,
    fexp: &FatouExpansion,
    grid: &[f64],
    opts: &NumericOptions,
) -> Result<ResidualReport<T>, NumericError> {
    FatouEvaluator::new(fexp.clone(), germ.clone(), opts.clone())?.verify(grid)
}

#[cfg(test)]
mod tests {
    use super::super::germ::GermSource;
    use super::*;
    use crate::formal::{formal_fatou, SolverOptions};
    use crate::parse::{parse_dulac, parse_expr};

    fn mobius() -> (FatouExpansion, GermEvaluator<f64>) {
        let g = parse_dulac("x - x^2 + x^3 - x^4 + x^5 - x^6 + x^7 - x^8").unwrap();
        let fexp = formal_fatou(&g, &SolverOptions::new(6, 4)).unwrap();
        let germ = GermEvaluator::new(GermSource::ClosedForm(parse_expr("x/(1+x)").unwrap()), 0.3, 1e-15);
        (fexp, germ)
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "1e-3:1e-1:3:geom".parse().unwrap();
        let p = g.points();
        assert_eq!(p.len(), 3);
        assert!((p[0] - 0.1).abs() < 1e-15 && (p[1] - 0.01).abs() < 1e-15 && (p[2] - 1e-3).abs() < 1e-15);
        assert!("0.1:0.5:4".parse::<Grid>().is_err());
        assert!("0.1:0.2".parse::<Grid>().is_err());
        let l: Grid = "0.1:0.2:3:lin".parse().unwrap();
        assert_eq!(l.points(), vec![0.2, 0.15000000000000002, 0.1]);
    }

    #[test]
    fn mobius_is_exact() {
        let (fexp, germ) = mobius();
        let opts = NumericOptions { tol: 1e-9, ..Default::default() };
        let grid: Grid = "1e-3:1e-1:6:geom".parse().unwrap();
        let r = verify_abel(&germ, &fexp, &grid.points(), &opts).unwrap();
        assert!(r.passed, "{}", r.summary_json());
        // summing x^-2 from d = 1/e shifts 1/x by -e
        for row in &r.rows {
            assert!((row.psi_x - 1.0 / row.x + std::f64::consts::E).abs() < 1e-9 * row.psi_x);
        }
        assert!(r.to_csv().starts_with("x,f_x,psi_x,psi_f_x,residual\n"));
    }

    #[test]
    fn constant_does_not_move_residuals() {
        let (fexp, germ) = mobius();
        let opts = NumericOptions::default();
        let grid = [0.05, 0.02];
        let a = verify_abel(&germ, &fexp, &grid, &opts).unwrap();
        let shifted = fexp.clone().with_constant(crate::series::Coeff::from_integer(7.into()));
        let b = verify_abel(&germ, &shifted, &grid, &opts).unwrap();
        for (r, s) in a.rows.iter().zip(&b.rows) {
            assert_eq!(r.residual, s.residual);
            assert!((s.psi_x - r.psi_x - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_of_a_power() {
        let xs = [0.1, 0.01, 0.001];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(3)).collect();
        let f = log_log_fit(&xs, &ys).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
    }
}
