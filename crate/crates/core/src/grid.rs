//! Uniform symmetric x-grids, tabulated wave functions and the L² metric.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sigma_t, ModelParams, PhasePoint};

/// Default number of grid nodes.
pub const DEFAULT_N: usize = 4096;
/// Gaussian tail allowance, in units of the position width `√ħ|σ|`.
pub const TAIL_SIGMAS: f64 = 12.0;

/// `n` uniform nodes on `[−x_max, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn symmetric(x_max: f64, n: usize) -> Result<Self> {
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::param(
                "grid.x_max",
                format!("must be finite and > 0, got {x_max}"),
            ));
        }
        if n < 2 {
            return Err(Error::param("grid.n", format!("must be >= 2, got {n}")));
        }
        Ok(GridSpec {
            x_min: -x_max,
            x_max,
            n,
        })
    }

    /// Covers both the packet at time 0 and at time `t` together with their
    /// mirror images: `x_max = max(|q|, |q_t|) + 12 √ħ max(σ₀, |σ_t|)`.
    pub fn for_evolution(params: &ModelParams, xi: PhasePoint, t: f64, n: usize) -> Self {
        let qt = xi.q + xi.p * t / params.mass;
        let width = params.hbar.sqrt() * params.sigma0.max(sigma_t(params, t).norm());
        GridSpec {
            x_min: -1.0,
            x_max: 1.0,
            n,
        }
        .with_extent(xi.q.abs().max(qt.abs()) + TAIL_SIGMAS * width)
    }

    pub fn default_for(params: &ModelParams, xi: PhasePoint, t: f64) -> Self {
        Self::for_evolution(params, xi, t, DEFAULT_N)
    }

    fn with_extent(self, x_max: f64) -> Self {
        GridSpec {
            x_min: -x_max,
            x_max,
            n: self.n,
        }
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        // written so that node(n-1-i) == -node(i) exactly on a symmetric grid
        let h = (self.n - 1) as f64;
        (self.x_min * (h - i as f64) + self.x_max * i as f64) / h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// `max |x|` over the grid.
    pub fn extent(&self) -> f64 {
        self.x_max.abs().max(self.x_min.abs())
    }

    pub fn is_symmetric(&self) -> bool {
        self.x_min == -self.x_max
    }

    /// Composite Simpson weights. With an odd number of intervals the last
    /// three use the 3/8 rule; two nodes fall back to the trapezoid.
    pub fn simpson_weights(&self) -> Vec<f64> {
        simpson_weights(self.n, self.spacing())
    }

    /// Weights of the L² inner product. Wave functions of `H_β` jump at the
    /// origin, so when the grid straddles it each side is integrated on its
    /// own and the gap to 0 is covered by one-sided quadratic extrapolation.
    /// A node sitting exactly at 0 is ignored.
    pub fn l2_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let left = (0..self.n).take_while(|&i| self.node(i) < 0.0).count();
        let right = (0..self.n)
            .rev()
            .take_while(|&i| self.node(i) > 0.0)
            .count();
        if left < 3 || right < 3 {
            return self.simpson_weights();
        }
        let mut w = vec![0.0; self.n];
        for (i, v) in simpson_weights(left, h).into_iter().enumerate() {
            w[i] += v;
        }
        let start = self.n - right;
        for (i, v) in simpson_weights(right, h).into_iter().enumerate() {
            w[start + i] += v;
        }
        let inner_left = left - 1;
        let order = left.min(right).min(4);
        for (j, v) in gap_weights(-self.node(inner_left), h, order)
            .into_iter()
            .enumerate()
        {
            w[inner_left - j] += v;
        }
        for (j, v) in gap_weights(self.node(start), h, order)
            .into_iter()
            .enumerate()
        {
            w[start + j] += v;
        }
        w
    }
}

/// `∫_{−g}^0 P(s) ds` where `P` interpolates the values at `s = 0, h, …, (order−1)h`.
fn gap_weights(g: f64, h: f64, order: usize) -> Vec<f64> {
    // Lagrange basis in r = s/h, integrated by Gauss–Legendre (exact for these degrees)
    const X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    (0..order)
        .map(|j| {
            X.iter()
                .zip(&W)
                .map(|(&x, &wq)| {
                    let r = -g / h * (1.0 - x) / 2.0;
                    let l: f64 = (0..order)
                        .filter(|&m| m != j)
                        .map(|m| (r - m as f64) / (j as f64 - m as f64))
                        .product();
                    wq * l * g / 2.0
                })
                .sum()
        })
        .collect()
}

pub(crate) fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let intervals = n - 1;
    if intervals == 1 {
        w[0] = h / 2.0;
        w[1] = h / 2.0;
        return w;
    }
    let (simpson_end, tail) = if intervals % 2 == 0 {
        (intervals, false)
    } else {
        (intervals - 3, true)
    };
    let mut i = 0;
    while i < simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if tail {
        let s = simpson_end;
        let c = 3.0 * h / 8.0;
        w[s] += c;
        w[s + 1] += 3.0 * c;
        w[s + 2] += 3.0 * c;
        w[s + 3] += c;
    }
    w
}

/// A complex function tabulated on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSample {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl WaveSample {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n
            )));
        }
        Ok(WaveSample { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        WaveSample {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n],
        }
    }

    /// Tabulates `f` at every node (in parallel, order preserved).
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        let values = (0..grid.n)
            .into_par_iter()
            .map(|i| f(grid.node(i)))
            .collect();
        WaveSample { grid, values }
    }

    /// Tabulates `sgn(x)·g(|x|)`. On a symmetric grid `g` is evaluated only
    /// on the nonnegative half.
    pub fn from_odd_fn<F>(grid: GridSpec, g: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Sync,
    {
        if !grid.is_symmetric() {
            return Self::from_fn(grid, |x| crate::model::sgn(x) * g(x.abs()));
        }
        let n = grid.n;
        let mid = n / 2;
        let upper: Vec<Complex64> = (mid..n).into_par_iter().map(|i| g(grid.node(i))).collect();
        let values = (0..n)
            .map(|i| {
                let x = grid.node(i);
                if x > 0.0 {
                    upper[i - mid]
                } else if x < 0.0 {
                    -upper[n - 1 - i - mid]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        WaveSample { grid, values }
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    /// `x ↦ w(−x)` as a node permutation.
    pub fn reflect(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        WaveSample {
            grid: self.grid,
            values,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        WaveSample {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &WaveSample) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &WaveSample) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(
        &self,
        other: &WaveSample,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        check_same(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(WaveSample {
            grid: self.grid,
            values,
        })
    }

    /// `⟨self, other⟩ = ∫ conj(self)·other dx` with [`GridSpec::l2_weights`].
    pub fn inner(&self, other: &WaveSample) -> Result<Complex64> {
        check_same(self, other)?;
        let w = self.grid.l2_weights();
        Ok(w.iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(&wi, (a, b))| wi * a.conj() * b)
            .sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        let w = self.grid.l2_weights();
        w.iter()
            .zip(&self.values)
            .map(|(wi, v)| wi * v.norm_sqr())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

fn check_same(a: &WaveSample, b: &WaveSample) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    Ok(())
}

/// `(∫|a − b|² dx)^{1/2}` with [`GridSpec::l2_weights`].
pub fn l2_distance(a: &WaveSample, b: &WaveSample) -> Result<f64> {
    Ok(a.sub(b)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{coherent_eval, free_evolve_state, CoherentState};
    use proptest::prelude::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        for n in [3usize, 4, 5, 8, 101, 4096] {
            let g = GridSpec {
                x_min: -1.0,
                x_max: 2.0,
                n,
            };
            let w = g.simpson_weights();
            let s: f64 = (0..n)
                .map(|i| {
                    let x = g.node(i);
                    w[i] * (x * x * x - 2.0 * x + 1.0)
                })
                .sum();
            assert!((s - 3.75).abs() < 1e-12, "n={n}: {s}");
        }
    }

    #[test]
    fn l2_weights_handle_jump_at_origin() {
        // ∫_{−3}^{3} (1 + x + sgn(x)/2)² e^{−x²} dx
        let exact = 4.101_232_079_691_978;
        for n in [512usize, 513, 2048] {
            let g = GridSpec::symmetric(3.0, n).unwrap();
            let w = g.l2_weights();
            let s: f64 = (0..n)
                .map(|i| {
                    let x = g.node(i);
                    let f = 1.0 + x + crate::model::sgn(x) / 2.0;
                    w[i] * f * f * (-x * x).exp()
                })
                .sum();
            assert!((s - exact).abs() < 1e-8, "n={n}: {}", s - exact);
        }
    }

    #[test]
    fn symmetric_nodes() {
        let g = GridSpec::symmetric(7.3, 4096).unwrap();
        for i in 0..g.n {
            assert_eq!(g.node(g.n - 1 - i), -g.node(i));
        }
        assert!(GridSpec::symmetric(-1.0, 10).is_err());
        assert!(GridSpec::symmetric(1.0, 1).is_err());
    }

    #[test]
    fn unit_state_distance_to_zero() {
        let params = ModelParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
        let xi = PhasePoint::new(-4.0, 2.0);
        let s = CoherentState::initial(&params, xi);
        let g = GridSpec::default_for(&params, xi, 0.0);
        let a = WaveSample::from_fn(g, |x| coherent_eval(&params, &s, x));
        let z = WaveSample::zeros(g);
        assert!((l2_distance(&a, &z).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(l2_distance(&a, &a).unwrap(), 0.0);
        let c = Complex64::new(0.3, -1.1);
        let lhs = l2_distance(&a.scale(c), &z).unwrap();
        assert!((lhs - c.norm() * l2_distance(&a, &z).unwrap()).abs() < 1e-14);
        let other = WaveSample::zeros(GridSpec::symmetric(3.0, 10).unwrap());
        assert!(matches!(
            l2_distance(&a, &other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn reflection_is_mirror_state() {
        let params = ModelParams::new(0.1, 1.0, 1.0, 1.0).unwrap();
        let xi = PhasePoint::new(1.5, -0.7);
        let s = free_evolve_state(&params, &CoherentState::initial(&params, xi), 1.3);
        let g = GridSpec::default_for(&params, xi, 1.3);
        let a = WaveSample::from_fn(g, |x| coherent_eval(&params, &s, x)).reflect();
        let b = WaveSample::from_fn(g, |x| coherent_eval(&params, &s.mirrored(), x));
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn evolved_norm(t in -10.0f64..10.0) {
            let params = ModelParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
            let xi = PhasePoint::new(-4.0, 2.0);
            let s = free_evolve_state(&params, &CoherentState::initial(&params, xi), t);
            let g = GridSpec::default_for(&params, xi, t);
            let a = WaveSample::from_fn(g, |x| coherent_eval(&params, &s, x));
            prop_assert!((a.norm() - 1.0).abs() < 1e-8);
        }
    }
}
