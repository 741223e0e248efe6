//! Trajectory generation, initial-condition sampling, standardization and
//! train/test splitting.

mod io;

pub use io::{load_batch, meta_path, read_csv, write_batch, write_csv, BatchFile};

use crate::archetypes::SystemSpec;
use crate::error::{DaaError, Result};
use crate::field::{Rk4, VectorField};
use crate::scalar::{all_finite, Real};
use crate::seed::{self, tag};
use crate::targets::TargetSpec;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sampling grid and integrator settings for a batch of trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SimConfig<T> {
    /// Recording interval Δt.
    pub dt: T,
    pub t_max: T,
    pub n_traj: usize,
    pub seed: u64,
    /// Internal integrator steps per recorded interval.
    pub substeps: usize,
}

impl<T: Real> SimConfig<T> {
    pub fn new(dt: T, t_max: T, n_traj: usize, seed: u64) -> Self {
        Self {
            dt,
            t_max,
            n_traj,
            seed,
            substeps: 5,
        }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    /// Number of recorded intervals `n = round(T_max / Δt)`.
    pub fn n_intervals(&self) -> usize {
        (self.t_max / self.dt).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(DaaError::InvalidConfig("dt must be positive".into()));
        }
        if !(self.t_max >= T::zero()) || !self.t_max.is_finite() {
            return Err(DaaError::InvalidConfig("t_max must be non-negative".into()));
        }
        if self.substeps == 0 {
            return Err(DaaError::InvalidConfig("substeps must be at least 1".into()));
        }
        Ok(())
    }

    fn step(&self) -> T {
        self.dt / T::from_usize_lossy(self.substeps)
    }
}

/// Region initial conditions are drawn from, uniformly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub enum InitRegion<T> {
    /// Uniform in area between two circles, first two coordinates; the rest sit at 0.
    Annulus { r_min: T, r_max: T, center: [T; 2] },
    Box { lo: Vec<T>, hi: Vec<T> },
}

impl<T: Real> InitRegion<T> {
    pub fn annulus(r_min: T, r_max: T) -> Self {
        InitRegion::Annulus {
            r_min,
            r_max,
            center: [T::zero(); 2],
        }
    }

    pub fn square(lo: T, hi: T, dim: usize) -> Self {
        InitRegion::Box {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitRegion::Annulus { r_min, r_max, .. } if !(*r_min >= T::zero() && r_min < r_max) => {
                Err(DaaError::InvalidConfig("annulus needs 0 <= r_min < r_max".into()))
            }
            InitRegion::Box { lo, hi } if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| !(l < h)) => {
                Err(DaaError::InvalidConfig("box needs lo < hi componentwise".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InitSampler<T> {
    pub region: InitRegion<T>,
    pub seed: u64,
}

impl<T: Real> InitSampler<T> {
    pub fn new(region: InitRegion<T>, seed: u64) -> Self {
        Self { region, seed }
    }

    /// The `index`-th initial condition; independent of how many are drawn.
    pub fn sample_one(&self, index: usize, dim: usize) -> Vec<T> {
        let mut rng = seed::stream(self.seed, tag::INITIAL, index as u64);
        let mut x = vec![T::zero(); dim];
        match &self.region {
            InitRegion::Annulus { r_min, r_max, center } => {
                let (a, b) = (r_min.to_f64_lossy(), r_max.to_f64_lossy());
                let u: f64 = rng.random();
                let r = (a * a + u * (b * b - a * a)).sqrt();
                let th = std::f64::consts::TAU * rng.random::<f64>();
                x[0] = center[0] + T::lit(r * th.cos());
                x[1] = center[1] + T::lit(r * th.sin());
            }
            InitRegion::Box { lo, hi } => {
                for i in 0..dim {
                    let u: f64 = rng.random();
                    x[i] = lo[i] + (hi[i] - lo[i]) * T::lit(u);
                }
            }
        }
        x
    }
}

pub fn sample_initial<T: Real>(sampler: &InitSampler<T>, count: usize, dim: usize) -> Result<Vec<Vec<T>>> {
    sampler.region.validate()?;
    match &sampler.region {
        InitRegion::Annulus { .. } if dim < 2 => {
            return Err(DaaError::DimensionMismatch { expected: 2, got: dim });
        }
        InitRegion::Box { lo, .. } if lo.len() != dim => {
            return Err(DaaError::DimensionMismatch {
                expected: lo.len(),
                got: dim,
            });
        }
        _ => {}
    }
    Ok((0..count).map(|i| sampler.sample_one(i, dim)).collect())
}

/// RK4 trajectory recorded every Δt, flattened as `(n+1) × d`.
pub fn integrate_ode<T: Real, F: VectorField<T> + ?Sized>(field: &F, x0: &[T], cfg: &SimConfig<T>) -> Result<Vec<T>> {
    cfg.validate()?;
    let d = field.dim();
    if x0.len() != d {
        return Err(DaaError::DimensionMismatch { expected: d, got: x0.len() });
    }
    let n = cfg.n_intervals();
    let h = cfg.step();
    let mut out = Vec::with_capacity((n + 1) * d);
    out.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(d);
    for k in 0..n {
        for _ in 0..cfg.substeps {
            rk.step(field, &mut x, h);
        }
        if !all_finite(&x) {
            return Err(DaaError::NonFiniteState { step: k + 1 });
        }
        out.extend_from_slice(&x);
    }
    Ok(out)
}

/// Euler–Maruyama for `dx = f(x) dt + σ dW`, step `Δt / substeps`.
pub fn integrate_sde<T: Real, F: VectorField<T> + ?Sized, R: Rng + ?Sized>(
    field: &F,
    sigma: T,
    x0: &[T],
    cfg: &SimConfig<T>,
    rng: &mut R,
) -> Result<Vec<T>> {
    cfg.validate()?;
    if !(sigma >= T::zero()) {
        return Err(DaaError::InvalidConfig("sigma must be non-negative".into()));
    }
    let d = field.dim();
    if x0.len() != d {
        return Err(DaaError::DimensionMismatch { expected: d, got: x0.len() });
    }
    let n = cfg.n_intervals();
    let h = cfg.step();
    let amp = sigma * h.sqrt();
    let mut out = Vec::with_capacity((n + 1) * d);
    out.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut f = vec![T::zero(); d];
    for k in 0..n {
        for _ in 0..cfg.substeps {
            field.eval(&x, &mut f);
            for i in 0..d {
                x[i] += f[i] * h;
            }
            if sigma > T::zero() {
                for xi in x.iter_mut() {
                    let xi_noise: f64 = rng.sample(StandardNormal);
                    *xi += amp * T::lit(xi_noise);
                }
            }
        }
        if !all_finite(&x) {
            return Err(DaaError::NonFiniteState { step: k + 1 });
        }
        out.extend_from_slice(&x);
    }
    Ok(out)
}

/// Per-dimension standardization constants: `raw = sigma * x + mu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Normalization<T> {
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Real> Normalization<T> {
    pub fn apply(&self, x: &mut [T]) {
        for ((v, &m), &s) in x.iter_mut().zip(&self.mu).zip(&self.sigma) {
            *v = (*v - m) / s;
        }
    }

    pub fn invert(&self, x: &mut [T]) {
        for ((v, &m), &s) in x.iter_mut().zip(&self.mu).zip(&self.sigma) {
            *v = *v * s + m;
        }
    }
}

/// Where a batch came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", rename_all = "snake_case")]
pub enum BatchSource<T> {
    System(SystemSpec<T>),
    Target(TargetSpec<T>),
    External { label: String },
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BatchMeta<T> {
    pub source: Option<BatchSource<T>>,
    pub config: Option<SimConfig<T>>,
    pub seed: Option<u64>,
}

/// `B` trajectories of `n + 1` samples in `d` dimensions at uniform spacing `dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBatch<T> {
    n_traj: usize,
    n_samples: usize,
    dim: usize,
    data: Vec<T>,
    pub dt: T,
    pub meta: BatchMeta<T>,
    pub normalization: Option<Normalization<T>>,
}

impl<T: Real> TrajectoryBatch<T> {
    /// Builds a batch from flattened `B × (n+1) × d` data.
    pub fn from_flat(n_traj: usize, n_samples: usize, dim: usize, data: Vec<T>, dt: T) -> Result<Self> {
        if data.len() != n_traj * n_samples * dim {
            return Err(DaaError::InvalidConfig(format!(
                "data length {} does not match {n_traj} x {n_samples} x {dim}",
                data.len()
            )));
        }
        if n_samples == 0 || dim == 0 {
            return Err(DaaError::InvalidConfig("batch needs samples and dimensions".into()));
        }
        if !all_finite(&data) {
            return Err(DaaError::InvalidConfig("batch entries must be finite".into()));
        }
        Ok(Self {
            n_traj,
            n_samples,
            dim,
            data,
            dt,
            meta: BatchMeta::default(),
            normalization: None,
        })
    }

    pub fn from_trajectories(trajs: Vec<Vec<T>>, dim: usize, dt: T) -> Result<Self> {
        let n_traj = trajs.len();
        let n_samples = trajs.first().map_or(0, |t| t.len() / dim.max(1));
        for (b, t) in trajs.iter().enumerate() {
            if t.len() != n_samples * dim {
                return Err(DaaError::InconsistentTrajectoryLengths {
                    traj: b,
                    expected: n_samples,
                    got: t.len() / dim.max(1),
                });
            }
        }
        Self::from_flat(n_traj, n_samples, dim, trajs.concat(), dt)
    }

    pub fn with_meta(mut self, meta: BatchMeta<T>) -> Self {
        self.meta = meta;
        self
    }

    pub fn n_traj(&self) -> usize {
        self.n_traj
    }
    /// Samples per trajectory, `n + 1`.
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
    /// Recorded intervals per trajectory, `n`.
    pub fn n_intervals(&self) -> usize {
        self.n_samples - 1
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn traj(&self, b: usize) -> &[T] {
        let len = self.n_samples * self.dim;
        &self.data[b * len..(b + 1) * len]
    }

    pub fn point(&self, b: usize, i: usize) -> &[T] {
        let start = (b * self.n_samples + i) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Every sample of every trajectory.
    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let data = indices.iter().flat_map(|&b| self.traj(b).iter().copied()).collect();
        Self {
            n_traj: indices.len(),
            data,
            meta: self.meta.clone(),
            normalization: self.normalization.clone(),
            ..*self
        }
    }

    /// Applies `f` to every sample in place.
    pub fn map_points(&mut self, mut f: impl FnMut(&mut [T])) {
        for p in self.data.chunks_exact_mut(self.dim) {
            f(p);
        }
    }

    /// Componentwise `(min, max)` over all samples.
    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        let mut lo = vec![T::infinity(); self.dim];
        let mut hi = vec![T::neg_infinity(); self.dim];
        for p in self.points() {
            for i in 0..self.dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }
}

/// Simulates one trajectory per initial condition drawn from `region`, in
/// input order. `sigma > 0` switches to Euler–Maruyama with per-trajectory
/// noise streams.
pub fn simulate<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    sigma: T,
    region: &InitRegion<T>,
    cfg: &SimConfig<T>,
) -> Result<TrajectoryBatch<T>> {
    let sampler = InitSampler::new(region.clone(), cfg.seed);
    let ics = sample_initial(&sampler, cfg.n_traj, field.dim())?;
    simulate_from(field, sigma, &ics, cfg)
}

pub fn simulate_from<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    sigma: T,
    initial: &[Vec<T>],
    cfg: &SimConfig<T>,
) -> Result<TrajectoryBatch<T>> {
    cfg.validate()?;
    let trajs = initial
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            if sigma > T::zero() {
                let mut rng = seed::stream(cfg.seed, tag::NOISE, i as u64);
                integrate_sde(field, sigma, x0, cfg, &mut rng)
            } else {
                integrate_ode(field, x0, cfg)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut batch = TrajectoryBatch::from_trajectories(trajs, field.dim(), cfg.dt)?;
    batch.meta.config = Some(cfg.clone());
    batch.meta.seed = Some(cfg.seed);
    Ok(batch)
}

/// Standardizes every dimension over all `B·(n+1)` samples (population
/// standard deviation). Returns the batch and this call's `(mu, sigma)`; the
/// batch's stored normalization composes with any earlier one so that it
/// always maps back to the original coordinates.
pub fn normalize<T: Real>(batch: &TrajectoryBatch<T>) -> Result<(TrajectoryBatch<T>, Vec<T>, Vec<T>)> {
    let d = batch.dim;
    let count = T::from_usize_lossy(batch.n_traj * batch.n_samples);
    let mut mu = vec![T::zero(); d];
    for p in batch.points() {
        for i in 0..d {
            mu[i] += p[i];
        }
    }
    mu.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![T::zero(); d];
    for p in batch.points() {
        for i in 0..d {
            let e = p[i] - mu[i];
            var[i] += e * e;
        }
    }
    let sigma: Vec<T> = var.iter().map(|v| (*v / count).sqrt()).collect();
    for (i, (&s, &m)) in sigma.iter().zip(&mu).enumerate() {
        if !(s > T::epsilon() * T::lit(16.0) * m.abs().max(T::one())) {
            return Err(DaaError::DegenerateDimension { dim: i });
        }
    }
    let this = Normalization {
        mu: mu.clone(),
        sigma: sigma.clone(),
    };
    let mut out = batch.clone();
    out.map_points(|p| this.apply(p));
    out.normalization = Some(match &batch.normalization {
        None => this,
        Some(prev) => Normalization {
            mu: (0..d).map(|i| prev.mu[i] + prev.sigma[i] * mu[i]).collect(),
            sigma: (0..d).map(|i| prev.sigma[i] * sigma[i]).collect(),
        },
    });
    Ok((out, mu, sigma))
}

/// Partitions trajectories (not time points) into train and test sets.
/// The train share is `round(ratio·B)`, kept within `1..B` when `B >= 2`;
/// both parts keep the original trajectory order.
pub fn split<T: Real>(batch: &TrajectoryBatch<T>, ratio: f64, seed: u64) -> Result<(TrajectoryBatch<T>, TrajectoryBatch<T>)> {
    let (train, test) = split_indices(batch.n_traj, ratio, seed)?;
    Ok((batch.select(&train), batch.select(&test)))
}

pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(DaaError::InvalidConfig("split ratio must lie in [0, 1]".into()));
    }
    if n < 2 {
        return Err(DaaError::InvalidConfig("split needs at least two trajectories".into()));
    }
    let n_train = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::stream(seed, tag::SPLIT, 0));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archetypes::SystemSpec;
    use crate::field::FnField;

    #[test]
    fn fixed_point_rk4_matches_closed_form() {
        let s = SystemSpec::<f64>::fixed_point(1);
        let cfg = SimConfig::new(0.1, 1.0, 1, 0).with_substeps(10);
        let tr = integrate_ode(&s.field().unwrap(), &[2.0], &cfg).unwrap();
        assert_eq!(tr.len(), 11);
        assert!((tr[10] - 2.0 * (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn zero_horizon_gives_single_sample() {
        let s = SystemSpec::<f64>::ring_attractor(2);
        let cfg = SimConfig::new(0.2, 0.0, 1, 0);
        assert_eq!(integrate_ode(&s.field().unwrap(), &[0.3, 0.4], &cfg).unwrap(), vec![0.3, 0.4]);
    }

    #[test]
    fn ring_terminal_radius() {
        let s = SystemSpec::<f64>::ring_attractor(2);
        let cfg = SimConfig::new(0.1, 1.0, 1, 0).with_substeps(10);
        let tr = integrate_ode(&s.field().unwrap(), &[0.5, 0.0], &cfg).unwrap();
        let r = (tr[20] * tr[20] + tr[21] * tr[21]).sqrt();
        assert!((r - 0.731058578630005).abs() < 1e-6);
    }

    #[test]
    fn blowup_is_reported() {
        let f = FnField::new(1, |x: &[f64], o: &mut [f64]| o[0] = x[0] * x[0]);
        let cfg = SimConfig::new(0.5, 10.0, 1, 0);
        assert!(matches!(integrate_ode(&f, &[5.0], &cfg), Err(DaaError::NonFiniteState { .. })));
    }

    #[test]
    fn zero_noise_is_euler() {
        let s = SystemSpec::<f64>::limit_cycle(2);
        let field = s.field().unwrap();
        let cfg = SimConfig::new(0.1, 1.0, 1, 3).with_substeps(4);
        let mut rng = seed::stream(1, tag::NOISE, 0);
        let em = integrate_sde(&field, 0.0, &[0.4, 0.9], &cfg, &mut rng).unwrap();
        let mut x = vec![0.4, 0.9];
        let mut f = vec![0.0; 2];
        let mut want = x.clone();
        for _ in 0..10 {
            for _ in 0..4 {
                field.eval(&x, &mut f);
                x[0] += f[0] * 0.025;
                x[1] += f[1] * 0.025;
            }
            want.extend_from_slice(&x);
        }
        assert_eq!(em, want);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let s = SystemSpec::<f64>::ring_attractor(2);
        let cfg = SimConfig::new(0.2, 2.0, 5, 9);
        let a = simulate(&s.field().unwrap(), 0.1, &InitRegion::annulus(0.5, 1.5), &cfg).unwrap();
        let b = simulate(&s.field().unwrap(), 0.1, &InitRegion::annulus(0.5, 1.5), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wiener_increment_variance() {
        let zero = FnField::new(1, |_: &[f64], o: &mut [f64]| o[0] = 0.0);
        let h = 0.01;
        let cfg = SimConfig::new(h, h * 100_000.0, 1, 0).with_substeps(1);
        let mut rng = seed::stream(42, tag::NOISE, 0);
        let tr = integrate_sde(&zero, 1.0, &[0.0], &cfg, &mut rng).unwrap();
        let inc: Vec<f64> = tr.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = inc.iter().sum::<f64>() / inc.len() as f64;
        let var = inc.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
        assert!((var / h - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn annulus_samples_are_area_uniform() {
        let sampler = InitSampler::new(InitRegion::<f64>::annulus(0.5, 1.5), 11);
        let pts = sample_initial(&sampler, 100_000, 2).unwrap();
        assert!(pts.iter().all(|p| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            (0.25 - 1e-12..=2.25 + 1e-12).contains(&r2)
        }));
        let inner = pts.iter().filter(|p| p[0] * p[0] + p[1] * p[1] <= 1.0).count() as f64 / 1e5;
        let se = (0.375f64 * 0.625 / 1e5).sqrt();
        assert!((inner - 0.375).abs() < 3.0 * se, "{inner}");
    }

    #[test]
    fn thin_box_collapses_to_point() {
        let region = InitRegion::Box {
            lo: vec![1.0f64, -2.0],
            hi: vec![1.0 + 1e-12, -2.0 + 1e-12],
        };
        let pts = sample_initial(&InitSampler::new(region, 0), 10, 2).unwrap();
        assert!(pts.iter().all(|p| (p[0] - 1.0).abs() < 1e-11 && (p[1] + 2.0).abs() < 1e-11));
    }

    #[test]
    fn growing_batch_keeps_earlier_initial_conditions() {
        let sampler = InitSampler::new(InitRegion::<f64>::square(0.0, 3.0, 2), 5);
        let a = sample_initial(&sampler, 10, 2).unwrap();
        let b = sample_initial(&sampler, 20, 2).unwrap();
        assert_eq!(a[..], b[..10]);
    }

    #[test]
    fn constant_batch_is_degenerate() {
        let b = TrajectoryBatch::from_flat(2, 3, 1, vec![0.7; 6], 0.1).unwrap();
        assert!(matches!(normalize(&b), Err(DaaError::DegenerateDimension { dim: 0 })));
    }

    #[test]
    fn normalize_is_idempotent() {
        let s = SystemSpec::<f64>::ring_attractor(2);
        let cfg = SimConfig::new(0.2, 2.0, 20, 1);
        let b = simulate(&s.field().unwrap(), 0.0, &InitRegion::annulus(0.5, 1.5), &cfg).unwrap();
        let (n1, _, _) = normalize(&b).unwrap();
        let (n2, mu, sigma) = normalize(&n1).unwrap();
        for i in 0..2 {
            assert!(mu[i].abs() < 1e-9 && (sigma[i] - 1.0).abs() < 1e-9);
        }
        // stored constants map back to the raw data
        let mut back = n2.clone();
        let norm = n2.normalization.clone().unwrap();
        back.map_points(|p| norm.invert(p));
        for (a, b) in back.data().iter().zip(b.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn split_partitions_trajectories() {
        let data: Vec<f64> = (0..50 * 3).map(|v| v as f64).collect();
        let b = TrajectoryBatch::from_flat(50, 3, 1, data, 0.1).unwrap();
        let (tr, te) = split(&b, 0.8, 4).unwrap();
        assert_eq!((tr.n_traj(), te.n_traj()), (40, 10));
        let mut firsts: Vec<f64> = (0..40).map(|i| tr.point(i, 0)[0]).chain((0..10).map(|i| te.point(i, 0)[0])).collect();
        firsts.sort_by(f64::total_cmp);
        assert_eq!(firsts, (0..50).map(|i| (i * 3) as f64).collect::<Vec<_>>());
        let (tr2, _) = split(&b, 0.8, 4).unwrap();
        assert_eq!(tr, tr2);
    }
}
