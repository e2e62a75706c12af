// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reproducing kernels and the Gram matrices of the representer solver.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{FrbsError, Result};
use crate::fgrid::{Grid, GridFunction};
use crate::series::{FunctionalSeries, Segment};

/// Relative tolerance on negative eigenvalues of a discretized kernel.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// A symmetric nonnegative-definite kernel on `[0, 1]²`.
pub trait Kernel: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;

    /// Evaluates without range checks.
    fn value(&self, s: f64, t: f64) -> f64;

    fn evaluate(&self, s: f64, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
            return Err(FrbsError::invalid(format!(
                "kernel arguments ({s}, {t}) outside [0, 1]"
            )));
        }
        Ok(self.value(s, t))
    }
}

/// Reproducing kernel of the first-order Sobolev space `W₂¹[0, 1]`:
/// `K(s, t) = cosh(s ∧ t) cosh(1 - s ∨ t) / sinh(1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SobolevKernel;

impl Kernel for SobolevKernel {
    fn name(&self) -> &str {
        "sobolev-w21"
    }

    fn value(&self, s: f64, t: f64) -> f64 {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        lo.cosh() * (1.0 - hi).cosh() / 1f64.sinh()
    }
}

pub fn sobolev_kernel() -> Arc<dyn Kernel> {
    Arc::new(SobolevKernel)
}

/// `(L_K f)(u_i) = Σ_j w_j K(u_i, u_j) f_j`.
pub fn kernel_smooth(kernel: &dyn Kernel, f: &GridFunction, grid: &Grid) -> Result<GridFunction> {
    grid.check_len(f.len(), "function")?;
    let nodes = grid.nodes();
    let w = grid.weights();
    let values = nodes
        .iter()
        .map(|&u| {
            nodes
                .iter()
                .zip(w)
                .zip(f.values())
                .map(|((&v, wv), fv)| wv * kernel.value(u, v) * fv)
                .sum()
        })
        .collect();
    GridFunction::new(values)
}

/// The kernel evaluated at all node pairs, plus a square-root factor
/// `K = L Lᵀ` used by the reduced-feature solver.
///
/// Built once per grid and shared read-only across segments.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    name: String,
    grid: Grid,
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl KernelMatrix {
    pub fn new(kernel: &dyn Kernel, grid: &Grid) -> Result<Self> {
        let p = grid.len();
        let nodes = grid.nodes();
        let mut matrix = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let k = kernel.value(nodes[i], nodes[j]);
                matrix[(i, j)] = k;
                matrix[(j, i)] = k;
            }
        }
        let trace = matrix.trace();
        let eig = SymmetricEigen::new(matrix.clone());
        let min_eigenvalue = eig.eigenvalues.min();
        if min_eigenvalue < -PSD_TOLERANCE * trace.abs() {
            return Err(FrbsError::invalid(format!(
                "kernel '{}' is not positive semi-definite on the grid (min eigenvalue {min_eigenvalue:.3e}, trace {trace:.3e})",
                kernel.name()
            )));
        }
        let mut factor = eig.eigenvectors;
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let root = lam.max(0.0).sqrt();
            factor.column_mut(k).scale_mut(root);
        }
        Ok(Self {
            name: kernel.name().to_string(),
            grid: grid.clone(),
            matrix,
            factor,
            min_eigenvalue,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `L` with `L Lᵀ = K` after clamping tiny negative eigenvalues.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// `(L_K f)` at the nodes, using the precomputed matrix.
    pub fn smooth(&self, f: &[f64]) -> Vec<f64> {
        let w = self.grid.weights();
        let p = w.len();
        (0..p)
            .map(|i| (0..p).map(|j| self.matrix[(i, j)] * (w[j] * f[j])).sum())
            .collect()
    }
}

/// Gram matrix of a segment: `M_ij = ∬ X_{s+i}(u) K(u, v) X_{s+j}(v) du dv`.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub segment: Segment,
    pub entries: DMatrix<f64>,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Builds the Gram matrix of `segment` as `A W K W Aᵀ`, where `A` holds the
/// segment's curves as rows and `W` the quadrature weights.
pub fn gram(kmat: &KernelMatrix, series: &FunctionalSeries, segment: Segment) -> Result<GramMatrix> {
    series.check_segment(&segment)?;
    if series.grid().len() != kmat.grid().len() {
        return Err(FrbsError::invalid("series and kernel matrix use different grids"));
    }
    let w = kmat.grid().weights();
    let p = w.len();
    let m = segment.len();
    let aw = DMatrix::from_fn(m, p, |i, u| series.curve(segment.start + i)[u] * w[u]);
    let awk = &aw * kmat.matrix();
    let mut entries = &awk * aw.transpose();
    // exact symmetry
    for i in 0..m {
        for j in (i + 1)..m {
            let v = 0.5 * (entries[(i, j)] + entries[(j, i)]);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(GramMatrix { segment, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fgrid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sobolev_closed_form_values() {
        let k = SobolevKernel;
        assert!((k.evaluate(0.0, 1.0).unwrap() - 0.850_918_128).abs() < 1e-8);
        assert!((k.evaluate(0.0, 0.0).unwrap() - 1.313_035_285).abs() < 1e-8);
        assert!((k.value(0.0, 1.0) - 1.0 / 1f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn sobolev_symmetric() {
        let k = SobolevKernel;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (s, t) = (rng.gen::<f64>(), rng.gen::<f64>());
            assert_eq!(k.value(s, t), k.value(t, s));
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let k = SobolevKernel;
        assert!(k.evaluate(-0.1, 0.5).is_err());
        assert!(k.evaluate(0.5, 1.5).is_err());
    }

    #[test]
    fn smoothing_constant_is_identity() {
        let grid = make_grid(200).unwrap();
        let one = grid.sample(|_| 1.0);
        let out = kernel_smooth(&SobolevKernel, &one, &grid).unwrap();
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 5e-3));
        let zero = GridFunction::zeros(200);
        let out = kernel_smooth(&SobolevKernel, &zero, &grid).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn smoothing_is_linear() {
        let grid = make_grid(50).unwrap();
        let f = grid.sample(|t| t.sin());
        let g = grid.sample(|t| t * t - 0.3);
        let (a, b) = (1.7, -0.4);
        let combo = GridFunction::new(
            f.values()
                .iter()
                .zip(g.values())
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        let lhs = kernel_smooth(&SobolevKernel, &combo, &grid).unwrap();
        let lf = kernel_smooth(&SobolevKernel, &f, &grid).unwrap();
        let lg = kernel_smooth(&SobolevKernel, &g, &grid).unwrap();
        for i in 0..50 {
            let rhs = a * lf.values()[i] + b * lg.values()[i];
            assert!((lhs.values()[i] - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_matrix_psd_and_factor() {
        let grid = make_grid(200).unwrap();
        let km = KernelMatrix::new(&SobolevKernel, &grid).unwrap();
        assert!(km.min_eigenvalue() >= -PSD_TOLERANCE * km.matrix().trace());
        let rebuilt = km.factor() * km.factor().transpose();
        assert!((rebuilt - km.matrix()).amax() < 1e-12);
    }

    #[derive(Debug)]
    struct NotPsd;
    impl Kernel for NotPsd {
        fn name(&self) -> &str {
            "not-psd"
        }
        fn value(&self, s: f64, t: f64) -> f64 {
            -(1.0 + s * t)
        }
    }

    #[test]
    fn non_psd_kernel_rejected() {
        let grid = make_grid(10).unwrap();
        assert!(KernelMatrix::new(&NotPsd, &grid).is_err());
    }

    fn random_series(n: usize, p: usize, seed: u64) -> FunctionalSeries {
        let grid = make_grid(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let curves = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y = (0..n).map(|_| rng.gen::<f64>()).collect();
        FunctionalSeries::new(grid, y, curves).unwrap()
    }

    #[test]
    fn gram_of_constant_curves() {
        let grid = make_grid(200).unwrap();
        let curves = vec![vec![1.0; 200]; 4];
        let series = FunctionalSeries::new(grid.clone(), vec![0.0; 4], curves).unwrap();
        let km = KernelMatrix::new(&SobolevKernel, &grid).unwrap();
        let g = gram(&km, &series, Segment::new(0, 4).unwrap()).unwrap();
        assert!(g.entries.iter().all(|v| (v - 1.0).abs() < 5e-3));
    }

    #[test]
    fn zero_curve_gives_zero_row() {
        let mut series = random_series(5, 30, 1);
        let grid = series.grid().clone();
        let mut curves: Vec<Vec<f64>> = (0..5).map(|r| series.curve(r).to_vec()).collect();
        curves[2] = vec![0.0; 30];
        series = FunctionalSeries::new(grid.clone(), vec![0.0; 5], curves).unwrap();
        let km = KernelMatrix::new(&SobolevKernel, &grid).unwrap();
        let g = gram(&km, &series, Segment::new(0, 5).unwrap()).unwrap();
        for k in 0..5 {
            assert_eq!(g.entries[(2, k)], 0.0);
            assert_eq!(g.entries[(k, 2)], 0.0);
        }
    }

    #[test]
    fn gram_rejects_bad_segment() {
        let series = random_series(5, 10, 2);
        let km = KernelMatrix::new(&SobolevKernel, series.grid()).unwrap();
        assert!(gram(&km, &series, Segment { start: 3, end: 3 }).is_err());
        assert!(gram(&km, &series, Segment { start: 2, end: 6 }).is_err());
    }

    #[test]
    fn gram_quadratic_form_nonnegative() {
        let series = random_series(25, 40, 9);
        let km = KernelMatrix::new(&SobolevKernel, series.grid()).unwrap();
        let g = gram(&km, &series, Segment::new(0, 25).unwrap()).unwrap();
        let trace = g.entries.trace();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let c = nalgebra::DVector::from_fn(25, |_, _| rng.gen_range(-1.0..1.0));
            let q = c.dot(&(&g.entries * &c));
            assert!(q >= -1e-8 * trace * c.norm_squared());
        }
    }
}
