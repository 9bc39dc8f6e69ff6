//! Transversal exponent from the confinement radius `r*(n) ~ n^xi`.

use serde::{Deserialize, Serialize};

use super::ensemble::{domain, EnsembleSpec, Model};
use super::exponent::{bootstrap, interval, Exponent, ExponentEstimate, BOOTSTRAP_RESAMPLES};
use super::stats::{mean, ols, quantile, FitWindow};
use crate::error::{LabError, Result};
use crate::lattice::Vertex;
use crate::lpp::{geodesic, last_passage};
use crate::polymer::confinement_curve;
use crate::rng::derive_seed;
use crate::sampler::PathSample;

fn default_q() -> f64 {
    0.5
}
fn default_points() -> usize {
    25
}
fn default_lo() -> f64 {
    0.35
}
fn default_hi() -> f64 {
    0.95
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiOptions {
    /// Confinement level (polymer) or deviation quantile (LPP).
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    /// Radius grid runs geometrically from `n^grid_lo` to `n^grid_hi`.
    #[serde(default = "default_lo")]
    pub grid_lo: f64,
    #[serde(default = "default_hi")]
    pub grid_hi: f64,
    #[serde(default)]
    pub window: FitWindow,
    /// Endpoint direction; the endpoint at size `n` is `n * direction`.
    /// Defaults to the diagonal.
    #[serde(default)]
    pub direction: Option<Vec<i64>>,
}

impl Default for XiOptions {
    fn default() -> Self {
        Self {
            q: default_q(),
            grid_points: default_points(),
            grid_lo: default_lo(),
            grid_hi: default_hi(),
            window: FitWindow::default(),
            direction: None,
        }
    }
}

impl XiOptions {
    fn validate(&self, d: usize) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(LabError::InvalidInput(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if self.grid_points < 2 || !(self.grid_lo < self.grid_hi) {
            return Err(LabError::InvalidInput("radius grid needs at least 2 points and lo < hi".into()));
        }
        if let Some(dir) = &self.direction {
            if dir.len() != d || dir.iter().any(|&c| c < 0) || dir.iter().all(|&c| c == 0) {
                return Err(LabError::InvalidInput("direction must be a nonzero nonnegative vector".into()));
            }
        }
        Ok(())
    }

    fn endpoint(&self, d: usize, n: u64) -> Vertex {
        match &self.direction {
            Some(dir) => Vertex(dir.iter().map(|&c| c * n as i64).collect()),
            None => Vertex::diagonal(d, n as i64),
        }
    }
}

/// Geometric grid `n^{lo}, ..., n^{hi}` with `points` entries.
pub fn radius_grid(n: u64, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let ln = (n as f64).ln();
    (0..points)
        .map(|k| {
            let e = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            (e * ln).exp()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiResult {
    pub estimate: ExponentEstimate,
    pub sizes: Vec<u64>,
    pub r_star: Vec<f64>,
    /// Radius grid per size (polymer mode).
    pub grids: Vec<Vec<f64>>,
    /// Mean confinement probability per grid radius, per size (polymer mode).
    pub mean_curves: Vec<Vec<f64>>,
    /// Per-replicate confinement curves `[size][replicate][radius]`
    /// (polymer mode).
    pub curves: Vec<Vec<Vec<f64>>>,
    /// Per-replicate geodesic deviations `[size][replicate]` (LPP mode).
    pub deviations: Vec<Vec<f64>>,
    pub q: f64,
}

impl XiResult {
    /// Point estimate of `xi` recomputed from the stored curves or deviations
    /// at another level `q`, over the same fit window. `None` when some size
    /// never reaches `q` or has zero spread.
    pub fn at_level(&self, q: f64) -> Option<f64> {
        let r: Vec<f64> = if self.deviations.is_empty() {
            self.mean_curves
                .iter()
                .zip(&self.grids)
                .map(|(c, g)| first_reaching(c, q).map(|k| g[k]))
                .collect::<Option<_>>()?
        } else {
            self.deviations.iter().map(|d| quantile(d, q)).collect()
        };
        if r.iter().any(|&x| x <= 0.0) {
            return None;
        }
        let ys: Vec<f64> = r.iter().map(|x| x.ln()).collect();
        ols(&self.estimate.xs, &ys, self.estimate.fit.window).ok().map(|f| f.slope)
    }
}

fn first_reaching(curve: &[f64], q: f64) -> Option<usize> {
    curve.iter().position(|&p| p >= q)
}

fn mean_curve(curves: &[Vec<f64>], picks: Option<&[usize]>) -> Vec<f64> {
    let k = curves[0].len();
    (0..k)
        .map(|j| match picks {
            Some(p) => mean(&p.iter().map(|&i| curves[i][j]).collect::<Vec<_>>()),
            None => mean(&curves.iter().map(|c| c[j]).collect::<Vec<_>>()),
        })
        .collect()
}

pub fn estimate_xi(spec: &EnsembleSpec, options: &XiOptions) -> Result<XiResult> {
    spec.validate()?;
    options.validate(spec.dimension)?;
    let d = spec.dimension;
    let params = spec.params();
    let q = options.q;
    let mut grids = Vec::new();
    let mut curves = Vec::new();
    let mut mean_curves = Vec::new();
    let mut deviations = Vec::new();
    let mut r_star = Vec::new();
    let mut floor_hits = Vec::new();

    for (i, &n) in spec.sizes.iter().enumerate() {
        let endpoint = options.endpoint(d, n);
        match spec.model {
            Model::Polymer => {
                let grid = radius_grid(n, options.grid_lo, options.grid_hi, options.grid_points);
                let origin = Vertex::origin(d);
                let per_rep = spec.map_replicates(i as u64, &endpoint, |_, env| {
                    confinement_curve(env, params, &origin, &endpoint, &grid)
                })?;
                let mc = mean_curve(&per_rep, None);
                let k = first_reaching(&mc, q).ok_or(LabError::GridExhausted { q, n })?;
                r_star.push(grid[k]);
                floor_hits.push(k == 0);
                grids.push(grid);
                mean_curves.push(mc);
                curves.push(per_rep);
            }
            Model::Lpp => {
                let devs = spec.map_replicates(i as u64, &endpoint, |_, env| {
                    let origin = Vertex::origin(d);
                    let field = last_passage(env, &origin, &endpoint)?;
                    let g = geodesic(&field, env, &endpoint)?;
                    Ok(PathSample::new(g.vertices)?.max_deviation)
                })?;
                let r = quantile(&devs, q);
                floor_hits.push(r == 0.0);
                r_star.push(r);
                deviations.push(devs);
            }
        }
    }

    let xs: Vec<f64> = spec.sizes.iter().map(|&n| (n as f64).ln()).collect();
    let degenerate = floor_hits.iter().all(|&f| f);
    let window = options.window.range(spec.sizes.len())?;
    let method = match spec.model {
        Model::Polymer => format!("smallest grid radius with mean confinement >= {q}; ols of log r* on log n"),
        Model::Lpp => format!("{q}-quantile of geodesic transversal deviation; ols of log r* on log n"),
    };

    if degenerate {
        let ys: Vec<f64> = r_star.iter().map(|r| if *r > 0.0 { r.ln() } else { 0.0 }).collect();
        let fit = ols(&xs, &ys, window)?;
        return Ok(XiResult {
            estimate: ExponentEstimate {
                which: Exponent::Xi,
                value: 0.0,
                ci: (0.0, 0.0),
                fit,
                method: format!("{method}; degenerate: r* sits at its floor at every size"),
                degenerate: true,
                xs,
                ys,
                warnings: vec!["no transversal spreading: the path measure is concentrated on the axis".into()],
                draws: Vec::new(),
            },
            sizes: spec.sizes.clone(),
            r_star,
            grids,
            mean_curves,
            curves,
            deviations,
            q,
        });
    }
    if let Some(i) = r_star.iter().position(|&r| r <= 0.0) {
        return Err(LabError::Degenerate(format!("zero transversal deviation at n = {}", spec.sizes[i])));
    }

    let ys: Vec<f64> = r_star.iter().map(|r| r.ln()).collect();
    let fit = ols(&xs, &ys, window)?;
    let value = fit.slope;
    let (a, b) = window;
    let wx = &xs[a..b];
    let seed = derive_seed(spec.master_seed, &[domain::BOOTSTRAP, 1]);
    let groups = vec![spec.replicates; b - a];
    let draws = bootstrap(seed, &groups, BOOTSTRAP_RESAMPLES, |picks| {
        let mut yb = Vec::with_capacity(picks.len());
        for (offset, pick) in picks.iter().enumerate() {
            let s = a + offset;
            let r = match spec.model {
                Model::Polymer => match first_reaching(&mean_curve(&curves[s], Some(pick)), q) {
                    Some(k) => grids[s][k],
                    None => return f64::NAN,
                },
                Model::Lpp => quantile(&pick.iter().map(|&i| deviations[s][i]).collect::<Vec<_>>(), q),
            };
            if r <= 0.0 {
                return f64::NAN;
            }
            yb.push(r.ln());
        }
        ols(wx, &yb, (0, yb.len())).map_or(f64::NAN, |f| f.slope)
    });

    Ok(XiResult {
        estimate: ExponentEstimate {
            which: Exponent::Xi,
            value,
            ci: interval(&draws, value),
            fit,
            method,
            degenerate: false,
            xs,
            ys,
            warnings: vec![format!("r* uses the finite-n operating point q = {q}")],
            draws,
        },
        sizes: spec.sizes.clone(),
        r_star,
        grids,
        mean_curves,
        curves,
        deviations,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::WeightDistribution;

    #[test]
    fn grid_endpoints() {
        let g = radius_grid(100, 0.35, 0.95, 25);
        assert_eq!(g.len(), 25);
        assert!((g[0] - 100f64.powf(0.35)).abs() < 1e-12);
        assert!((g[24] - 100f64.powf(0.95)).abs() < 1e-9);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn q_outside_unit_interval() {
        let spec = EnsembleSpec::new(2, WeightDistribution::Constant { value: 1.0 }, Model::Polymer, vec![4, 8], 2);
        for q in [0.0, 1.0, -0.2, 1.5] {
            let opts = XiOptions { q, ..XiOptions::default() };
            assert!(estimate_xi(&spec, &opts).is_err());
        }
    }

    #[test]
    fn axis_direction_is_degenerate() {
        let spec =
            EnsembleSpec::new(2, WeightDistribution::Constant { value: 1.0 }, Model::Polymer, vec![8, 16, 32, 64], 2);
        let opts = XiOptions { direction: Some(vec![1, 0]), ..XiOptions::default() };
        let r = estimate_xi(&spec, &opts).unwrap();
        assert!(r.estimate.degenerate);
        assert_eq!(r.estimate.value, 0.0);
        for (i, &n) in spec.sizes.iter().enumerate() {
            assert!((r.r_star[i] - (n as f64).powf(0.35)).abs() < 1e-9);
        }
    }

    #[test]
    fn confinement_curves_are_monotone_and_reach_one() {
        let spec = EnsembleSpec::new(2, WeightDistribution::Exponential { rate: 1.0 }, Model::Polymer, vec![6, 12], 3)
            .with_seed(5);
        let opts = XiOptions { grid_hi: 1.2, ..XiOptions::default() };
        let r = estimate_xi(&spec, &opts).unwrap();
        for (size_curves, &n) in r.curves.iter().zip(&spec.sizes) {
            for c in size_curves {
                assert!(c.windows(2).all(|w| w[0] <= w[1]));
                // n^{1.2} exceeds the box diagonal n sqrt(2) for these sizes
                assert!((n as f64).powf(1.2) > (n as f64) * 2f64.sqrt());
                assert_eq!(*c.last().unwrap(), 1.0);
            }
        }
    }
}
