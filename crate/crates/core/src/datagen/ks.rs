//! Fourier pseudo-spectral ETD-RK4 integration of the 1D
//! Kuramoto–Sivashinsky equation `u_t + u u_x + u_xx + mu u_xxxx = 0`
//! on the periodic domain `[0, 2*pi)`.
//!
//! The linear symbol is `L(k) = k^2 - mu k^4`; the nonlinear term enters as
//! `-(i k / 2) FFT(u^2)`. The four ETD coefficients are evaluated by a
//! 16-point complex contour quadrature around `h L`, which is exact up to
//! quadrature error for these entire functions and avoids the `z -> 0`
//! cancellation.

use super::dataset::{PointCloudDataset, PointCloudSchema};
use super::normalize::NormalizationKind;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Magnitude beyond which the integration is declared divergent.
const BLOWUP_LIMIT: f64 = 1e6;
/// Tolerated imaginary residue of the physical field, relative to its scale.
const REALNESS_TOL: f64 = 1e-10;

/// Solver and subsampling configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct KsConfig {
    /// Spatial resolution; must be a power of two.
    pub n_grid: usize,
    pub dt: f64,
    pub t_final: f64,
    /// A snapshot is recorded every `save_every` steps, starting at t = 0
    /// and excluding t_final (half-open in time).
    pub save_every: usize,
    /// Keep every `subsample_space`-th grid point when building datasets.
    pub subsample_space: usize,
    /// Keep every `subsample_time`-th recorded snapshot.
    pub subsample_time: usize,
    /// 2/3-rule dealiasing of the quadratic term.
    pub dealias: bool,
}

impl Default for KsConfig {
    fn default() -> Self {
        KsConfig {
            n_grid: 1024,
            dt: 1e-3,
            t_final: 100.0,
            save_every: 10,
            subsample_space: 4,
            subsample_time: 100,
            dealias: true,
        }
    }
}

impl KsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid == 0 || !self.n_grid.is_power_of_two() {
            return Err(Error::invalid(format!("n_grid {} must be a power of two", self.n_grid)));
        }
        if !(self.dt > 0.0) || !(self.t_final > 0.0) {
            return Err(Error::invalid("dt and t_final must be positive"));
        }
        if self.save_every == 0 || self.subsample_space == 0 || self.subsample_time == 0 {
            return Err(Error::invalid("save_every and subsample factors must be >= 1"));
        }
        if self.n_grid % self.subsample_space != 0 {
            return Err(Error::invalid("subsample_space must divide n_grid"));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    fn n_saved(&self) -> usize {
        self.total_steps().div_ceil(self.save_every)
    }

    /// `(space, time)` shape of the subsampled dataset grid; under the
    /// defaults this is `(256, 100)`.
    pub fn subsampled_shape(&self) -> (usize, usize) {
        (
            self.n_grid / self.subsample_space,
            self.n_saved().div_ceil(self.subsample_time),
        )
    }

    /// Grid points `x_j = 2 pi j / n`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_grid as f64;
        (0..self.n_grid)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n)
            .collect()
    }
}

/// Result of one KS integration.
#[derive(Debug, Clone)]
pub struct KsSolution {
    /// Times of the recorded snapshots (starting at 0).
    pub times: Vec<f64>,
    /// `n_grid x n_saved` snapshot matrix, one column per recorded time.
    pub snapshots: Matrix,
    /// Physical state at exactly `t_final`.
    pub final_state: Vec<f64>,
}

struct Etdrk4 {
    n: usize,
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
    /// `-(i k / 2)` premultiplier with the dealias mask folded in.
    nl_factor: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Etdrk4 {
    fn new(mu: f64, cfg: &KsConfig) -> Self {
        let n = cfg.n_grid;
        let h = cfg.dt;
        let wavenumber = |j: usize| -> f64 {
            if j <= n / 2 { j as f64 } else { j as f64 - n as f64 }
        };

        let mut e = vec![0.0; n];
        let mut e2 = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut f1 = vec![0.0; n];
        let mut f2 = vec![0.0; n];
        let mut f3 = vec![0.0; n];
        let mut nl_factor = vec![Complex64::new(0.0, 0.0); n];

        const M: usize = 16;
        let contour: Vec<Complex64> = (0..M)
            .map(|j| {
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / M as f64;
                Complex64::new(0.0, theta).exp()
            })
            .collect();

        let cutoff = n as f64 / 3.0;
        for j in 0..n {
            let k = wavenumber(j);
            let l = k * k - mu * k.powi(4);
            e[j] = (h * l).exp();
            e2[j] = (h * l / 2.0).exp();

            let (mut sq, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
            for &r in &contour {
                let z = Complex64::new(h * l, 0.0) + r;
                let ez = z.exp();
                let z2 = z * z;
                let z3 = z2 * z;
                sq += (((z / 2.0).exp() - 1.0) / z).re;
                s1 += ((-4.0 - z + ez * (4.0 - 3.0 * z + z2)) / z3).re;
                s2 += ((2.0 + z + ez * (-2.0 + z)) / z3).re;
                s3 += ((-4.0 - 3.0 * z - z2 + ez * (4.0 - z)) / z3).re;
            }
            let m = M as f64;
            q[j] = h * sq / m;
            f1[j] = h * s1 / m;
            f2[j] = h * s2 / m;
            f3[j] = h * s3 / m;

            let dealiased = !cfg.dealias || k.abs() < cutoff;
            nl_factor[j] = if dealiased {
                Complex64::new(0.0, -k / 2.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }

        let mut planner = FftPlanner::new();
        Etdrk4 {
            n,
            e,
            e2,
            q,
            f1,
            f2,
            f3,
            nl_factor,
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        }
    }

    /// `-(i k / 2) FFT(ifft(v)^2)` into `out`; returns max |u| for blow-up
    /// detection.
    fn nonlinear(&self, v: &[Complex64], out: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) -> f64 {
        scratch.clear();
        scratch.extend_from_slice(v);
        self.ifft.process(scratch);
        let scale = 1.0 / self.n as f64;
        let mut umax = 0.0f64;
        out.clear();
        out.extend(scratch.iter().map(|z| {
            let u = z.re * scale;
            umax = umax.max(u.abs());
            Complex64::new(u * u, 0.0)
        }));
        self.fft.process(out);
        for (o, &f) in out.iter_mut().zip(&self.nl_factor) {
            *o *= f;
        }
        umax
    }
}

/// Integrates the KS equation for viscosity `mu` from initial grid values
/// `u0`, recording snapshots per the config's save schedule (t = 0 included,
/// t_final excluded) plus the final state.
pub fn solve_ks(mu: f64, cfg: &KsConfig, u0: &[f64]) -> Result<KsSolution> {
    cfg.validate()?;
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("viscosity mu = {mu} must be positive")));
    }
    if u0.len() != cfg.n_grid {
        return Err(Error::invalid(format!(
            "initial condition has {} points, grid has {}",
            u0.len(),
            cfg.n_grid
        )));
    }
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial condition contains non-finite values"));
    }

    let scheme = Etdrk4::new(mu, cfg);
    let n = cfg.n_grid;
    let total_steps = cfg.total_steps();
    let n_saved = cfg.n_saved();

    let mut v: Vec<Complex64> = u0.iter().map(|&u| Complex64::new(u, 0.0)).collect();
    scheme.fft.process(&mut v);

    let mut snapshots = Matrix::zeros(n, n_saved);
    let mut times = Vec::with_capacity(n_saved);
    let mut scratch = Vec::with_capacity(n);
    let mut nv = Vec::with_capacity(n);
    let mut na = Vec::with_capacity(n);
    let mut nb = Vec::with_capacity(n);
    let mut nc = Vec::with_capacity(n);
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    let mut c = vec![Complex64::new(0.0, 0.0); n];

    let to_physical = |v: &[Complex64], scratch: &mut Vec<Complex64>, step: usize| -> Result<Vec<f64>> {
        scratch.clear();
        scratch.extend_from_slice(v);
        scheme.ifft.process(scratch);
        let scale = 1.0 / n as f64;
        let mut field = Vec::with_capacity(n);
        let mut re_max = 0.0f64;
        let mut im_max = 0.0f64;
        for z in scratch.iter() {
            let re = z.re * scale;
            re_max = re_max.max(re.abs());
            im_max = im_max.max((z.im * scale).abs());
            field.push(re);
        }
        if im_max > REALNESS_TOL * re_max.max(1.0) {
            return Err(Error::Numeric {
                msg: format!("imaginary residue {im_max:.3e} in physical field"),
                iterations: step,
            });
        }
        Ok(field)
    };

    for step in 0..total_steps {
        if step % cfg.save_every == 0 {
            let field = to_physical(&v, &mut scratch, step)?;
            let col = times.len();
            for (i, &u) in field.iter().enumerate() {
                snapshots[(i, col)] = u;
            }
            times.push(step as f64 * cfg.dt);
        }

        let umax = scheme.nonlinear(&v, &mut nv, &mut scratch);
        if !umax.is_finite() || umax > BLOWUP_LIMIT {
            return Err(Error::Divergence {
                msg: format!("|u| reached {umax:.3e}"),
                step,
            });
        }
        for i in 0..n {
            a[i] = scheme.e2[i] * v[i] + scheme.q[i] * nv[i];
        }
        scheme.nonlinear(&a, &mut na, &mut scratch);
        for i in 0..n {
            b[i] = scheme.e2[i] * v[i] + scheme.q[i] * na[i];
        }
        scheme.nonlinear(&b, &mut nb, &mut scratch);
        for i in 0..n {
            c[i] = scheme.e2[i] * a[i] + scheme.q[i] * (2.0 * nb[i] - nv[i]);
        }
        scheme.nonlinear(&c, &mut nc, &mut scratch);
        for i in 0..n {
            v[i] = scheme.e[i] * v[i]
                + scheme.f1[i] * nv[i]
                + 2.0 * scheme.f2[i] * (na[i] + nb[i])
                + scheme.f3[i] * nc[i];
        }
        // Re-impose the conjugate symmetry of a real field's spectrum;
        // roundoff otherwise drifts over long integrations.
        v[0] = Complex64::new(v[0].re, 0.0);
        v[n / 2] = Complex64::new(v[n / 2].re, 0.0);
        for j in 1..n / 2 {
            let avg = 0.5 * (v[j] + v[n - j].conj());
            v[j] = avg;
            v[n - j] = avg.conj();
        }
    }

    let final_state = to_physical(&v, &mut scratch, total_steps)?;
    Ok(KsSolution { times, snapshots, final_state })
}

/// `count` evenly spaced viscosities spanning `[lo, hi]` inclusive.
pub fn uniform_mus(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Runs one KS simulation per viscosity (fixed initial condition `sin x`),
/// subsamples in space and time per the config, and assembles rows
/// `(mu, t, x, u)` standard-normalized on every column.
///
/// Independent viscosities integrate on worker threads (capped by the
/// `NIFKIT_THREADS` environment variable); rows are concatenated in the
/// given `mus` order regardless of completion order.
pub fn make_ks_dataset(mus: &[f64], cfg: &KsConfig) -> Result<PointCloudDataset> {
    cfg.validate()?;
    if mus.is_empty() {
        return Err(Error::invalid("need at least one viscosity value"));
    }
    let grid = cfg.grid();
    let u0: Vec<f64> = grid.iter().map(|&x| x.sin()).collect();

    let workers = worker_count().min(mus.len());
    let mut solutions: Vec<Option<Result<KsSolution>>> = (0..mus.len()).map(|_| None).collect();
    if workers <= 1 {
        for (i, &mu) in mus.iter().enumerate() {
            solutions[i] = Some(solve_ks(mu, cfg, &u0));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let results: Vec<std::sync::Mutex<Option<Result<KsSolution>>>> =
            (0..mus.len()).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= mus.len() {
                        break;
                    }
                    *results[i].lock().unwrap() = Some(solve_ks(mus[i], cfg, &u0));
                });
            }
        });
        for (slot, cell) in solutions.iter_mut().zip(results) {
            *slot = cell.into_inner().unwrap();
        }
    }

    let (nx, nt) = cfg.subsampled_shape();
    let mut raw = Matrix::zeros(mus.len() * nx * nt, 4);
    let mut row = 0;
    for (mi, &mu) in mus.iter().enumerate() {
        let sol = solutions[mi].take().expect("worker filled every slot")?;
        for ti in 0..nt {
            let src_t = ti * cfg.subsample_time;
            let t = sol.times[src_t];
            for xi in 0..nx {
                let src_x = xi * cfg.subsample_space;
                raw[(row, 0)] = mu;
                raw[(row, 1)] = t;
                raw[(row, 2)] = grid[src_x];
                raw[(row, 3)] = sol.snapshots[(src_x, src_t)];
                row += 1;
            }
        }
    }

    let schema = PointCloudSchema::new(1, 1, 1, 1, false)?;
    PointCloudDataset::from_raw(schema, raw, NormalizationKind::Standard)
}

fn worker_count() -> usize {
    if let Ok(v) = std::env::var("NIFKIT_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
