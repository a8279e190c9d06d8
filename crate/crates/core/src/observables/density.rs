//! Gaussian product-kernel density estimates of the heat kernel with respect
//! to the volume `ψ`.

use rayon::prelude::*;

use crate::models::CrModel;
use crate::sde::Ensemble;
use crate::{Error, Result};

/// Samples accumulated per parallel work unit; partial grids merge in order.
const CHUNK: usize = 4096;
/// Kernel support in bandwidths.
const TRUNCATE: f64 = 5.0;
pub const DENSITY_MIN_SAMPLES: usize = 100;

/// Rectangular grid of cell midpoints over the full chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub bins: Vec<usize>,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, bins: Vec<usize>) -> Result<Self> {
        if lower.len() != upper.len() || lower.len() != bins.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len().min(bins.len()),
            });
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b)) || bins.contains(&0) {
            return Err(Error::InvalidArgument(
                "density window must be non-degenerate".into(),
            ));
        }
        Ok(Self { lower, upper, bins })
    }

    pub fn dim(&self) -> usize {
        self.bins.len()
    }

    pub fn width(&self, j: usize) -> f64 {
        (self.upper[j] - self.lower[j]) / self.bins[j] as f64
    }

    pub fn center(&self, j: usize, i: usize) -> f64 {
        self.lower[j] + (i as f64 + 0.5) * self.width(j)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    pub fn len(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Multi-index of flat cell `i` (last axis fastest).
    pub fn unflatten(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for j in (0..self.dim()).rev() {
            idx[j] = i % self.bins[j];
            i /= self.bins[j];
        }
        idx
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.unflatten(i)
            .iter()
            .enumerate()
            .map(|(j, &k)| self.center(j, k))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bandwidth {
    /// `σ_j N^{-1/(d+4)}`.
    Scott,
    /// `σ_j (4 / ((d+2) N))^{1/(d+4)}`.
    Silverman,
    Fixed(Vec<f64>),
}

impl Bandwidth {
    pub fn resolve(&self, samples: &[Vec<f64>], dim: usize) -> Result<Vec<f64>> {
        let n = samples.len() as f64;
        let d = dim as f64;
        let factor = match self {
            Bandwidth::Fixed(h) => {
                if h.len() != dim || h.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::InvalidArgument(
                        "bandwidths must be positive, one per axis".into(),
                    ));
                }
                return Ok(h.clone());
            }
            Bandwidth::Scott => n.powf(-1.0 / (d + 4.0)),
            Bandwidth::Silverman => (4.0 / ((d + 2.0) * n)).powf(1.0 / (d + 4.0)),
        };
        (0..dim)
            .map(|j| {
                let col: Vec<f64> = samples.iter().map(|s| s[j]).collect();
                let sd = crate::stats::std_dev(&col);
                if sd > 0.0 {
                    Ok(sd * factor)
                } else {
                    Err(Error::InvalidArgument(format!("axis {j} has zero spread")))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub window: Window,
    /// Density with respect to `ψ` at each cell midpoint (last axis fastest).
    pub values: Vec<f64>,
    pub bandwidth: Vec<f64>,
    pub n_samples: usize,
    pub n_in_window: usize,
    /// `ψ` density at each cell midpoint.
    pub volume_density: Vec<f64>,
}

impl DensityEstimate {
    /// Midpoint-rule integral of the estimate against `ψ` over the window.
    pub fn integral(&self) -> f64 {
        let cell = self.window.cell_volume();
        self.values
            .iter()
            .zip(&self.volume_density)
            .map(|(p, v)| p * v * cell)
            .sum()
    }

    pub fn window_fraction(&self) -> f64 {
        self.n_in_window as f64 / self.n_samples as f64
    }
}

fn gaussian(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Kernel estimate with respect to `ψ` at a single point.
pub fn kde_at<M: CrModel + ?Sized>(
    model: &M,
    samples: &[Vec<f64>],
    bandwidth: &[f64],
    y: &[f64],
) -> f64 {
    let norm: f64 = bandwidth.iter().product();
    let total: f64 = samples
        .iter()
        .map(|s| {
            let mut w = 1.0;
            for j in 0..y.len() {
                let z = (y[j] - s[j]) / bandwidth[j];
                if z.abs() > TRUNCATE {
                    return 0.0;
                }
                w *= gaussian(z);
            }
            w
        })
        .sum();
    total / (samples.len() as f64 * norm) / model.volume_density(y)
}

/// Density estimate from raw terminal points.
pub fn estimate_density_samples<M: CrModel + ?Sized>(
    model: &M,
    samples: &[Vec<f64>],
    window: &Window,
    bandwidth: &Bandwidth,
) -> Result<DensityEstimate> {
    let dim = window.dim();
    if dim != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: dim,
        });
    }
    if samples.len() < DENSITY_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: DENSITY_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let n_in_window = samples.iter().filter(|s| window.contains(s)).count();
    if n_in_window == 0 {
        return Err(Error::EmptyWindow);
    }
    let h = bandwidth.resolve(samples, dim)?;
    let cells = window.len();

    let partials: Vec<Vec<f64>> = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grid = vec![0.0; cells];
            let mut axes: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
            for s in chunk {
                for j in 0..dim {
                    axes[j].clear();
                    let w = window.width(j);
                    let lo = ((s[j] - TRUNCATE * h[j] - window.lower[j]) / w - 0.5)
                        .ceil()
                        .max(0.0);
                    let hi = ((s[j] + TRUNCATE * h[j] - window.lower[j]) / w - 0.5)
                        .floor()
                        .min(window.bins[j] as f64 - 1.0);
                    if hi < lo {
                        break;
                    }
                    for i in lo as usize..=hi as usize {
                        axes[j].push((i, gaussian((window.center(j, i) - s[j]) / h[j]) / h[j]));
                    }
                }
                if axes.iter().any(|a| a.is_empty()) {
                    continue;
                }
                accumulate(&mut grid, &axes, &window.bins, 0, 0, 1.0);
            }
            grid
        })
        .collect();

    let mut values = vec![0.0; cells];
    for p in &partials {
        for (v, q) in values.iter_mut().zip(p) {
            *v += q;
        }
    }
    let inv_n = 1.0 / samples.len() as f64;
    let volume_density: Vec<f64> = (0..cells)
        .map(|i| model.volume_density(&window.point(i)))
        .collect();
    for (v, psi) in values.iter_mut().zip(&volume_density) {
        *v *= inv_n / psi;
    }
    Ok(DensityEstimate {
        window: window.clone(),
        values,
        bandwidth: h,
        n_samples: samples.len(),
        n_in_window,
        volume_density,
    })
}

fn accumulate(
    grid: &mut [f64],
    axes: &[Vec<(usize, f64)>],
    bins: &[usize],
    axis: usize,
    offset: usize,
    w: f64,
) {
    if axis == axes.len() {
        grid[offset] += w;
        return;
    }
    for &(i, k) in &axes[axis] {
        accumulate(grid, axes, bins, axis + 1, offset * bins[axis] + i, w * k);
    }
}

/// Density estimate of the terminal points of the completed paths.
pub fn estimate_density<M: CrModel + ?Sized>(
    model: &M,
    ens: &Ensemble,
    window: &Window,
    bandwidth: &Bandwidth,
) -> Result<DensityEstimate> {
    let samples: Vec<Vec<f64>> = ens.completed().map(|s| s.x.clone()).collect();
    estimate_density_samples(model, &samples, window, bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Heisenberg;
    use crate::sde::{simulate_ensemble, SimConfig};
    use crate::FrameState;

    fn window3() -> Window {
        Window::new(
            vec![-3.0, -3.0, -5.0],
            vec![3.0, 3.0, 5.0],
            vec![30, 30, 40],
        )
        .unwrap()
    }

    #[test]
    fn unflatten_roundtrip() {
        let w = Window::new(vec![0.0; 3], vec![1.0; 3], vec![2, 3, 4]).unwrap();
        assert_eq!(w.unflatten(0), vec![0, 0, 0]);
        assert_eq!(w.unflatten(1), vec![0, 0, 1]);
        assert_eq!(w.unflatten(4), vec![0, 1, 0]);
        assert_eq!(w.unflatten(23), vec![1, 2, 3]);
    }

    #[test]
    fn integrates_to_one() {
        let h = Heisenberg::new(1).unwrap();
        let ens = simulate_ensemble(
            &h,
            &FrameState::identity_at(vec![0.0; 3]),
            &SimConfig::new(1.0, 50, 2),
            20_000,
            0,
        )
        .unwrap();
        let est = estimate_density(&h, &ens, &window3(), &Bandwidth::Scott).unwrap();
        assert!(est.window_fraction() > 0.999);
        assert!((est.integral() - 1.0).abs() < 0.02, "{}", est.integral());
        assert!(est.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn grid_matches_point_evaluation() {
        let h = Heisenberg::new(1).unwrap();
        let ens = simulate_ensemble(
            &h,
            &FrameState::identity_at(vec![0.0; 3]),
            &SimConfig::new(1.0, 20, 6),
            2_000,
            0,
        )
        .unwrap();
        let samples: Vec<Vec<f64>> = ens.completed().map(|s| s.x.clone()).collect();
        let est = estimate_density_samples(&h, &samples, &window3(), &Bandwidth::Scott).unwrap();
        for i in [0, 1234, 15_000, 18_020, 35_999] {
            let p = est.window.point(i);
            let direct = kde_at(&h, &samples, &est.bandwidth, &p);
            assert!(
                (direct - est.values[i]).abs() <= 1e-12 * (1.0 + direct),
                "{i}"
            );
        }
    }

    #[test]
    fn empty_window_rejected() {
        let h = Heisenberg::new(1).unwrap();
        let samples = vec![vec![0.0, 0.0, 0.0]; 50]
            .into_iter()
            .chain(vec![vec![0.1, 0.2, 0.3]; 50])
            .collect::<Vec<_>>();
        let far = Window::new(vec![10.0; 3], vec![11.0; 3], vec![2; 3]).unwrap();
        assert_eq!(
            estimate_density_samples(&h, &samples, &far, &Bandwidth::Scott),
            Err(Error::EmptyWindow)
        );
    }

    #[test]
    fn silverman_narrower_than_scott_in_3d() {
        let samples: Vec<Vec<f64>> = (0..200)
            .map(|i| vec![i as f64, (i * i % 17) as f64, (i % 5) as f64])
            .collect();
        let s = Bandwidth::Scott.resolve(&samples, 3).unwrap();
        let v = Bandwidth::Silverman.resolve(&samples, 3).unwrap();
        for j in 0..3 {
            assert!(v[j] < s[j]);
        }
    }
}
