//! Exact dynamic mode decomposition of latent time series.

use super::modes::NormalizedModes;
use crate::error::{Error, Result};
use crate::numerics::{eig_small, solve_complex, svd_thin, CMatrix, Matrix};
use num_complex::Complex64;

/// Relative singular-value cutoff for the shift matrix.
const DMD_RCOND: f64 = 1e-10;

/// Spectral decomposition of the best-fit one-step linear operator.
#[derive(Debug, Clone)]
pub struct DmdResult {
    /// Discrete-time eigenvalues, non-increasing modulus.
    pub eigenvalues: Vec<Complex64>,
    /// Latent-space modes, one column per eigenvalue.
    pub modes: CMatrix,
    /// Mode amplitudes fitted to the initial snapshot.
    pub amplitudes: Vec<Complex64>,
    /// `Im(ln lambda) / (2 pi dt)`.
    pub frequencies: Vec<f64>,
    pub dt: f64,
    /// Rank actually used after singular-value truncation.
    pub effective_rank: usize,
    /// True when the data forced truncation below the requested rank.
    pub truncated: bool,
}

/// Exact DMD of an `r x M_t` series: thin SVD of the first `M_t - 1`
/// columns, eigen decomposition of the projected one-step operator, modes
/// lifted through the shifted data. Singular values below
/// `1e-10 * sigma_1` are truncated and flagged.
pub fn dmd(latent: &Matrix, dt: f64, rank: usize) -> Result<DmdResult> {
    let (r, m_t) = (latent.rows(), latent.cols());
    if m_t < 3 {
        return Err(Error::invalid(format!("need at least 3 snapshots, got {m_t}")));
    }
    if rank == 0 || rank > r {
        return Err(Error::invalid(format!("rank {rank} must be in 1..={r}")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    let x = Matrix::from_fn(r, m_t - 1, |i, j| latent[(i, j)]);
    let xp = Matrix::from_fn(r, m_t - 1, |i, j| latent[(i, j + 1)]);

    let svd = svd_thin(&x)?;
    let smax = svd.s[0];
    let mut keep = 0;
    for (i, &s) in svd.s.iter().enumerate() {
        if i < rank && s > DMD_RCOND * smax {
            keep += 1;
        }
    }
    if keep == 0 {
        return Err(Error::invalid("series has no energy above the truncation threshold"));
    }
    let truncated = keep < rank;

    let u = Matrix::from_fn(r, keep, |i, j| svd.u[(i, j)]);
    let v = Matrix::from_fn(m_t - 1, keep, |i, j| svd.v[(i, j)]);
    // Xp V Sigma^-1 appears both in the reduced operator and the modes.
    let mut xp_v_sinv = xp.matmul(&v);
    for j in 0..keep {
        let inv = 1.0 / svd.s[j];
        for i in 0..r {
            xp_v_sinv[(i, j)] *= inv;
        }
    }
    let a_tilde = u.matmul_tn(&xp_v_sinv);
    let eig = eig_small(&a_tilde)?;

    // Modes: Xp V Sigma^-1 w.
    let lift = CMatrix::from_real(&xp_v_sinv);
    let modes = lift.matmul(&eig.vectors);

    // Amplitudes from the initial snapshot via the complex normal
    // equations (M* M) a = M* z0.
    let z0: Vec<Complex64> = (0..r).map(|i| Complex64::new(latent[(i, 0)], 0.0)).collect();
    let mut gram = CMatrix::zeros(keep, keep);
    let mut rhs = vec![Complex64::new(0.0, 0.0); keep];
    for a in 0..keep {
        for b in 0..keep {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..r {
                acc += modes[(i, a)].conj() * modes[(i, b)];
            }
            gram[(a, b)] = acc;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..r {
            acc += modes[(i, a)].conj() * z0[i];
        }
        rhs[a] = acc;
    }
    let amplitudes = solve_complex(&gram, &rhs).unwrap_or_else(|_| vec![Complex64::new(0.0, 0.0); keep]);

    let frequencies: Vec<f64> = eig
        .values
        .iter()
        .map(|l| l.im.atan2(l.re) / (2.0 * std::f64::consts::PI * dt))
        .collect();

    Ok(DmdResult {
        eigenvalues: eig.values,
        modes,
        amplitudes,
        frequencies,
        dt,
        effective_rank: keep,
        truncated,
    })
}

/// Evaluates the spatial field of each DMD mode on a grid through the
/// normalized basis: `mode_j(x) = sum_i w_j[i] phi~_i(x)`. Returns a
/// `points x modes` complex matrix.
pub fn dmd_mode_field(result: &DmdResult, basis: &NormalizedModes, grid: &Matrix) -> Result<CMatrix> {
    let feats = basis.eval_basis(grid)?;
    if feats.cols() != result.modes.rows() {
        return Err(Error::invalid(format!(
            "basis has {} modes, decomposition lives in {} latent dimensions",
            feats.cols(),
            result.modes.rows()
        )));
    }
    let n_modes = result.modes.cols();
    let mut out = CMatrix::zeros(grid.rows(), n_modes);
    for p in 0..grid.rows() {
        for j in 0..n_modes {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..feats.cols() {
                acc += result.modes[(i, j)] * feats[(p, i)];
            }
            out[(p, j)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::make_linear_series;
    use crate::numerics::RngState;

    #[test]
    fn constant_series_has_unit_eigenvalue() {
        let latent = Matrix::from_fn(2, 20, |i, _| 1.0 + i as f64);
        let result = dmd(&latent, 0.1, 1).unwrap();
        assert_eq!(result.effective_rank, 1);
        assert!((result.eigenvalues[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(result.frequencies[0].abs() < 1e-12);
    }

    #[test]
    fn pure_oscillation_recovers_frequency() {
        // Period 20 steps at dt = 0.05: frequency 1/(20*0.05) = 1 Hz.
        let theta = 2.0 * std::f64::consts::PI / 20.0;
        let latent = Matrix::from_fn(2, 100, |i, k| {
            let phase = theta * k as f64;
            if i == 0 {
                phase.cos()
            } else {
                phase.sin()
            }
        });
        let result = dmd(&latent, 0.05, 2).unwrap();
        let f: Vec<f64> = result.frequencies.iter().map(|v| v.abs()).collect();
        assert!(f.iter().any(|&v| (v - 1.0).abs() < 1e-8), "{f:?}");
    }

    #[test]
    fn planted_spectrum_is_recovered() {
        let mut rng = RngState::new(21);
        let eigs = vec![
            Complex64::from_polar(0.98, 0.35),
            Complex64::from_polar(0.92, 1.1),
            Complex64::new(0.85, 0.0),
        ];
        let mut modes = CMatrix::zeros(8, 3);
        for j in 0..3 {
            for i in 0..8 {
                modes[(i, j)] = Complex64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            }
        }
        let series = make_linear_series(&eigs, &modes, 100, 0.1, &mut rng).unwrap();
        // Two conjugate pairs plus one real eigenvalue = rank 5.
        let result = dmd(&series, 0.1, 5).unwrap();
        let mut expected: Vec<Complex64> = Vec::new();
        for &l in &eigs {
            expected.push(l);
            if l.im > 0.0 {
                expected.push(l.conj());
            }
        }
        for want in expected {
            let best = result
                .eigenvalues
                .iter()
                .map(|l| (l - want).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-6, "eigenvalue {want} missed by {best:.2e}");
        }
    }

    #[test]
    fn short_series_rejected() {
        let latent = Matrix::zeros(2, 2);
        assert!(dmd(&latent, 0.1, 1).is_err());
    }

    #[test]
    fn mode_fields_evaluate_on_large_grids_mesh_agnostically() {
        use crate::nets::{Activation, BlockStyle, NifModel, ParamTarget, ParameterNetConfig, ShapeNetConfig};
        use crate::reduce::nif_modes_normalize;
        let mut rng = RngState::new(44);
        let shape = ShapeNetConfig {
            d_in: 2,
            width: 4,
            n_blocks: 1,
            d_out: 1,
            activation: Activation::sine(30.0),
            block_style: BlockStyle::ResNetHalfSum,
        };
        let pn = ParameterNetConfig::new(1, vec![5], 4, Activation::Swish, ParamTarget::LastLayer);
        let model = NifModel::init(shape, pn, &mut rng).unwrap();
        let quad = Matrix::from_fn(64, 2, |_, _| rng.uniform(-1.0, 1.0));
        let weights = vec![1.0 / 64.0; 64];
        let series = Matrix::from_fn(4, 30, |i, k| ((k as f64) * 0.2 + i as f64).sin());
        let basis = nif_modes_normalize(&model, &quad, &weights, &series).unwrap();
        let result = dmd(&basis.series_scaled, 0.2, 4).unwrap();

        // 500 uniform points per direction: 250,000 evaluation points.
        let n = 500;
        let grid = Matrix::from_fn(n * n, 2, |p, d| {
            let (i, j) = (p / n, p % n);
            let idx = if d == 0 { i } else { j };
            -1.0 + 2.0 * idx as f64 / (n - 1) as f64
        });
        let fields = dmd_mode_field(&result, &basis, &grid).unwrap();
        assert_eq!(fields.rows(), 250_000);
        assert_eq!(fields.cols(), result.eigenvalues.len());

        // Identity latent mode reproduces the first normalized basis
        // function on the grid.
        let mut ident = result.clone();
        ident.modes = CMatrix::zeros(4, 1);
        ident.modes[(0, 0)] = Complex64::new(1.0, 0.0);
        let probe = Matrix::from_fn(50, 2, |i, d| -0.9 + 0.03 * (i as f64) + 0.1 * d as f64);
        let field = dmd_mode_field(&ident, &basis, &probe).unwrap();
        let phi = basis.eval_basis(&probe).unwrap();
        for p in 0..50 {
            assert!((field[(p, 0)].re - phi[(p, 0)]).abs() < 1e-14);
            assert!(field[(p, 0)].im.abs() < 1e-14);
        }

        // Refining the grid leaves values at shared points identical.
        let coarse = Matrix::from_fn(10, 2, |i, _| -1.0 + 0.2 * i as f64);
        let fine = Matrix::from_fn(20, 2, |i, _| -1.0 + 0.1 * i as f64);
        let on_coarse = dmd_mode_field(&result, &basis, &coarse).unwrap();
        let on_fine = dmd_mode_field(&result, &basis, &fine).unwrap();
        for i in 0..10 {
            for j in 0..result.eigenvalues.len() {
                assert_eq!(on_coarse[(i, j)], on_fine[(2 * i, j)]);
            }
        }
    }

    #[test]
    fn rank_deficient_series_is_truncated_with_flag() {
        // Rank-1 trajectory asked for rank 3.
        let latent = Matrix::from_fn(4, 30, |i, k| (i + 1) as f64 * 0.9f64.powi(k as i32));
        let result = dmd(&latent, 1.0, 3).unwrap();
        assert!(result.truncated);
        assert_eq!(result.effective_rank, 1);
        assert!((result.eigenvalues[0] - Complex64::new(0.9, 0.0)).norm() < 1e-8);
    }
}
