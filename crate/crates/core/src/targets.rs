//! Benchmark target systems and ingestion of externally produced trajectories.

use crate::archetypes::{compose, SystemKind, SystemSpec};
use crate::error::{DaaError, Result};
use crate::field::VectorField;
use crate::perturb::{gp_field_perturbation, random_diffeo_interp, Lattice, PerturbationKind, PerturbationSpec};
use crate::scalar::Real;
use crate::sim::{self, BatchMeta, BatchSource, InitRegion, InitSampler, SimConfig, TrajectoryBatch};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The drift of a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "type", rename_all = "snake_case")]
pub enum TargetBase<T> {
    System(SystemSpec<T>),
    /// `ẋ = y, ẏ = μ(1 - x²)y - x`.
    VanDerPol { mu: T },
    /// `ẋ = -x + ay + x²y, ẏ = b - ay - x²y`.
    Selkov { a: T, b: T },
    /// `ẋ = y, ẏ = -1/(1 + e^{-ax}) + 1/2 - b(x² - 1)y`. For `b > 0` the
    /// damping is negative for `|x| < 1`, giving a stable limit cycle of
    /// amplitude about 2 at `a = 1.5, b = 0.5`.
    LienardSigmoid { a: T, b: T },
    /// Bistable × bounded line attractor, centred at (1.5, 1.5) so that both
    /// line attractors fall inside the initial-condition square `(0, 3)²`.
    TwoBlas,
    /// Trajectories only, no field.
    External { dim: usize },
}

impl<T: Real> TargetBase<T> {
    pub fn dim(&self) -> usize {
        match self {
            TargetBase::System(s) => s.dim,
            TargetBase::External { dim } => *dim,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TargetSpec<T> {
    pub name: String,
    pub base: TargetBase<T>,
    /// Diffusion coefficient σ; zero is deterministic.
    #[serde(default = "T::zero")]
    pub noise_sigma: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec<T>>,
}

/// Default recording grid and initial-condition region of a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SimProtocol<T> {
    pub dt: T,
    pub t_max: T,
    pub n_traj: usize,
    pub region: InitRegion<T>,
}

impl<T: Real> TargetSpec<T> {
    pub const REGISTRY: [&'static str; 8] = [
        "ring",
        "ring_noisy",
        "vdp",
        "vdp_noisy",
        "selkov",
        "lienard",
        "two_blas",
        "external",
    ];

    pub fn new(name: &str, base: TargetBase<T>) -> Self {
        Self {
            name: name.to_string(),
            base,
            noise_sigma: T::zero(),
            perturbation: None,
        }
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn with_noise(mut self, sigma: T) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_perturbation(mut self, p: PerturbationSpec<T>) -> Self {
        self.perturbation = Some(p);
        self
    }

    /// Registry lookup with the default constants of each system.
    pub fn named(name: &str) -> Result<Self> {
        let t = match name {
            "ring" => Self::new(name, TargetBase::System(SystemSpec::ring_attractor(2))),
            "ring_noisy" => Self::named("ring")?.with_noise(T::lit(0.1)).renamed(name),
            "vdp" => Self::new(name, TargetBase::VanDerPol { mu: T::lit(0.3) }),
            "vdp_noisy" => Self::named("vdp")?.with_noise(T::lit(0.25)).renamed(name),
            "selkov" => Self::new(
                name,
                TargetBase::Selkov {
                    a: T::lit(0.05),
                    b: T::lit(0.5),
                },
            ),
            "lienard" => Self::new(
                name,
                TargetBase::LienardSigmoid {
                    a: T::lit(1.5),
                    b: T::lit(0.5),
                },
            ),
            "two_blas" => Self::new(name, TargetBase::TwoBlas),
            "external" => Self::new(name, TargetBase::External { dim: 2 }),
            _ => return Err(DaaError::UnknownName(name.to_string())),
        };
        t.validate()?;
        Ok(t)
    }

    /// Parses a full spec, or `{"name": ...}` (optionally with
    /// `noise_sigma` / `perturbation`) resolved through the registry.
    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let spec = if v.get("base").is_some() {
            serde_json::from_value(v)?
        } else {
            let name = v
                .get("name")
                .and_then(|n| n.as_str())
                .ok_or_else(|| DaaError::InvalidSpec("target needs a name or a base".into()))?;
            let mut t = Self::named(name)?;
            if let Some(sigma) = v.get("noise_sigma") {
                t.noise_sigma = serde_json::from_value(sigma.clone())?;
            }
            if let Some(p) = v.get("perturbation") {
                t.perturbation = serde_json::from_value(p.clone())?;
            }
            t
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= T::zero()) || !self.noise_sigma.is_finite() {
            return Err(DaaError::InvalidSpec("noise_sigma must be >= 0".into()));
        }
        match &self.base {
            TargetBase::System(s) => s.validate()?,
            TargetBase::VanDerPol { mu } if !(*mu > T::zero()) => {
                return Err(DaaError::InvalidSpec("Van der Pol needs mu > 0".into()))
            }
            _ => {}
        }
        if let Some(p) = &self.perturbation {
            p.validate()?;
            if p.kind == PerturbationKind::GpField && self.dim() != 2 {
                return Err(DaaError::InvalidSpec("vector-field perturbations are two-dimensional".into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn is_external(&self) -> bool {
        match &self.base {
            TargetBase::External { .. } => true,
            TargetBase::System(s) => s.is_external(),
            _ => false,
        }
    }

    /// The unperturbed drift.
    pub fn field(&self) -> Result<TargetField<T>> {
        let f = match &self.base {
            TargetBase::External { .. } => return Err(DaaError::ExternalSystemHasNoField),
            TargetBase::System(s) => {
                s.field()?;
                TargetField::Archetype(s.clone())
            }
            TargetBase::VanDerPol { mu } => TargetField::VanDerPol { mu: *mu },
            TargetBase::Selkov { a, b } => TargetField::Selkov { a: *a, b: *b },
            TargetBase::LienardSigmoid { a, b } => TargetField::Lienard { a: *a, b: *b },
            TargetBase::TwoBlas => TargetField::Shifted {
                spec: two_blas_system()?,
                center: vec![T::lit(1.5); 2],
            },
        };
        Ok(f)
    }

    /// Recording grid and initial-condition region used in the experiments.
    pub fn protocol(&self) -> Result<SimProtocol<T>> {
        let (dt, t_max, region) = match &self.base {
            TargetBase::External { .. } => return Err(DaaError::ExternalSystemHasNoField),
            TargetBase::System(s) => match s.kind {
                SystemKind::RingAttractor | SystemKind::LimitCycle => {
                    (0.2, 2.0, InitRegion::annulus(T::lit(0.5), T::lit(1.5)))
                }
                _ => (0.1, 5.0, InitRegion::square(T::lit(-1.5), T::lit(1.5), s.dim)),
            },
            TargetBase::VanDerPol { .. } => (0.1, 5.0, InitRegion::square(T::lit(-2.0), T::lit(2.0), 2)),
            TargetBase::LienardSigmoid { .. } => (0.1, 15.0, InitRegion::square(T::lit(-1.5), T::lit(1.5), 2)),
            TargetBase::Selkov { .. } | TargetBase::TwoBlas => {
                (0.1, 5.0, InitRegion::square(T::zero(), T::lit(3.0), 2))
            }
        };
        Ok(SimProtocol {
            dt: T::lit(dt),
            t_max: T::lit(t_max),
            n_traj: 50,
            region,
        })
    }

    /// Simulates the target, applying its perturbation. Both perturbation
    /// families reuse the initial conditions and noise streams of the
    /// unperturbed run, so `s = 0` reproduces it exactly.
    pub fn simulate(&self, region: &InitRegion<T>, cfg: &SimConfig<T>) -> Result<TrajectoryBatch<T>> {
        self.validate()?;
        let field = self.field()?;
        let ics = sim::sample_initial(&InitSampler::new(region.clone(), cfg.seed), cfg.n_traj, self.dim())?;
        let mut batch = sim::simulate_from(&field, self.noise_sigma, &ics, cfg)?;
        match &self.perturbation {
            None => {}
            Some(p) if p.kind == PerturbationKind::DiffeoInterp => {
                if p.s > T::zero() {
                    let psi = random_diffeo_interp(p, self.dim())?;
                    let mapped = batch.points().map(|x| psi.forward(x)).collect::<Result<Vec<_>>>()?;
                    let data = mapped.into_iter().flatten().collect();
                    batch = TrajectoryBatch::from_flat(batch.n_traj(), batch.n_samples(), batch.dim(), data, batch.dt)?
                        .with_meta(batch.meta.clone());
                }
            }
            Some(p) => {
                let lattice = self.gp_lattice(p, &batch)?;
                let perturbed = gp_field_perturbation(p, &field, lattice)?;
                let meta = batch.meta.clone();
                batch = sim::simulate_from(&perturbed, self.noise_sigma, &ics, cfg)?.with_meta(meta);
            }
        }
        batch.meta.source = Some(BatchSource::Target(self.clone()));
        Ok(batch)
    }

    /// Simulates with [`TargetSpec::protocol`] defaults and the given seed.
    pub fn simulate_default(&self, seed: u64) -> Result<TrajectoryBatch<T>> {
        let p = self.protocol()?;
        self.simulate(&p.region, &SimConfig::new(p.dt, p.t_max, p.n_traj, seed))
    }

    /// Lattice for a GP perturbation: explicit bounds, or the bounding box of
    /// the unperturbed trajectories.
    pub fn gp_lattice(&self, p: &PerturbationSpec<T>, unperturbed: &TrajectoryBatch<T>) -> Result<Lattice<T>> {
        let (lo, hi) = unperturbed.bounding_box();
        Lattice::from_spec(&p.kernel().grid, &lo, &hi)
    }
}

/// The two-dimensional bistable × bounded-line composite, uncentred.
pub fn two_blas_system<T: Real>() -> Result<SystemSpec<T>> {
    compose(vec![SystemSpec::bistable(1), SystemSpec::bounded_line(1)])
}

/// Owned drift of a target; implements [`VectorField`].
#[derive(Clone, Debug, PartialEq)]
pub enum TargetField<T> {
    Archetype(SystemSpec<T>),
    VanDerPol { mu: T },
    Selkov { a: T, b: T },
    Lienard { a: T, b: T },
    /// `x ↦ f(x - center)`.
    Shifted { spec: SystemSpec<T>, center: Vec<T> },
}

fn sigmoid<T: Real>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

impl<T: Real> VectorField<T> for TargetField<T> {
    fn dim(&self) -> usize {
        match self {
            TargetField::Archetype(s) | TargetField::Shifted { spec: s, .. } => s.dim,
            _ => 2,
        }
    }

    fn eval(&self, x: &[T], out: &mut [T]) {
        let half = T::lit(0.5);
        match self {
            TargetField::Archetype(s) => s.eval_into(x, out),
            TargetField::Shifted { spec, center } => {
                let y: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - c).collect();
                spec.eval_into(&y, out)
            }
            &TargetField::VanDerPol { mu } => {
                out[0] = x[1];
                out[1] = mu * (T::one() - x[0] * x[0]) * x[1] - x[0];
            }
            &TargetField::Selkov { a, b } => {
                let x2y = x[0] * x[0] * x[1];
                out[0] = -x[0] + a * x[1] + x2y;
                out[1] = b - a * x[1] - x2y;
            }
            &TargetField::Lienard { a, b } => {
                out[0] = x[1];
                out[1] = -sigmoid(a * x[0]) + half - b * (x[0] * x[0] - T::one()) * x[1];
            }
        }
    }

    fn vjp(&self, x: &[T], c: &[T], out: &mut [T]) {
        let two = T::lit(2.0);
        match self {
            TargetField::Archetype(s) => s.vjp_into(x, c, out),
            TargetField::Shifted { spec, center } => {
                let y: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - c).collect();
                spec.vjp_into(&y, c, out)
            }
            &TargetField::VanDerPol { mu } => {
                out[0] = (-two * mu * x[0] * x[1] - T::one()) * c[1];
                out[1] = c[0] + mu * (T::one() - x[0] * x[0]) * c[1];
            }
            &TargetField::Selkov { a, .. } => {
                let (xy2, xx) = (two * x[0] * x[1], x[0] * x[0]);
                out[0] = (xy2 - T::one()) * c[0] - xy2 * c[1];
                out[1] = (a + xx) * (c[0] - c[1]);
            }
            &TargetField::Lienard { a, b } => {
                let s = sigmoid(a * x[0]);
                out[0] = (-a * s * (T::one() - s) - two * b * x[0] * x[1]) * c[1];
                out[1] = c[0] - b * (x[0] * x[0] - T::one()) * c[1];
            }
        }
    }
}

/// Drift of the unperturbed target at `x`.
pub fn eval_target_field<T: Real>(spec: &TargetSpec<T>, x: &[T]) -> Result<Vec<T>> {
    let f = spec.field()?;
    if x.len() != f.dim() {
        return Err(DaaError::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    let mut out = vec![T::zero(); f.dim()];
    f.eval(x, &mut out);
    Ok(out)
}

/// Trajectories from an outside source (e.g. recorded network states).
#[derive(Clone, Debug, PartialEq)]
pub struct ExternalTrajectorySet<T> {
    pub batch: TrajectoryBatch<T>,
    pub source_label: String,
}

/// Reads a trajectory CSV (and its sidecar, when present).
pub fn load_external<T: Real>(path: &Path) -> Result<ExternalTrajectorySet<T>> {
    let mut batch = sim::load_batch(path)?;
    let source_label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if batch.meta.source.is_none() {
        batch.meta = BatchMeta {
            source: Some(BatchSource::External {
                label: source_label.clone(),
            }),
            ..batch.meta
        };
    }
    Ok(ExternalTrajectorySet { batch, source_label })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(f: &TargetField<f64>, x: &[f64]) -> [[f64; 2]; 2] {
        let mut j = [[0.0; 2]; 2];
        for c in 0..2 {
            let (mut p, mut m) = (x.to_vec(), x.to_vec());
            p[c] += 1e-6;
            m[c] -= 1e-6;
            let (mut fp, mut fm) = ([0.0; 2], [0.0; 2]);
            f.eval(&p, &mut fp);
            f.eval(&m, &mut fm);
            for r in 0..2 {
                j[r][c] = (fp[r] - fm[r]) / 2e-6;
            }
        }
        j
    }

    #[test]
    fn field_examples() {
        let vdp = TargetSpec::<f64>::named("vdp").unwrap();
        assert_eq!(eval_target_field(&vdp, &[0.0, 1.0]).unwrap(), vec![1.0, 0.3]);
        let sel = TargetSpec::<f64>::named("selkov").unwrap();
        assert_eq!(eval_target_field(&sel, &[0.0, 0.0]).unwrap(), vec![0.0, 0.5]);
        for b in [-0.5, 0.5] {
            let lie = TargetSpec::new("lienard", TargetBase::LienardSigmoid { a: 1.5, b });
            assert_eq!(eval_target_field(&lie, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        }
        let ext = TargetSpec::<f64>::named("external").unwrap();
        assert!(matches!(
            eval_target_field(&ext, &[0.0, 0.0]),
            Err(DaaError::ExternalSystemHasNoField)
        ));
    }

    #[test]
    fn lienard_origin_is_unstable() {
        let f = TargetSpec::<f64>::named("lienard").unwrap().field().unwrap();
        let j = fd_jacobian(&f, &[0.0, 0.0]);
        assert!((j[0][0] + j[1][1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn vdp_origin_is_unstable() {
        let f = TargetSpec::<f64>::named("vdp").unwrap().field().unwrap();
        let mut out = [1.0; 2];
        f.eval(&[0.0, 0.0], &mut out);
        assert_eq!(out, [0.0, 0.0]);
        let j = fd_jacobian(&f, &[0.0, 0.0]);
        assert!(j[0][0] + j[1][1] > 0.0);
        assert!((j[0][0] + j[1][1] - 0.3).abs() < 1e-8);
    }

    #[test]
    fn vjps_match_finite_differences() {
        for name in ["ring", "vdp", "selkov", "lienard", "two_blas"] {
            let f = TargetSpec::<f64>::named(name).unwrap().field().unwrap();
            for x in [[0.3, -0.7], [1.9, 2.4], [-1.1, 0.2]] {
                let j = fd_jacobian(&f, &x);
                let c = [0.8, -0.5];
                let mut g = [0.0; 2];
                f.vjp(&x, &c, &mut g);
                for k in 0..2 {
                    let fd = j[0][k] * c[0] + j[1][k] * c[1];
                    assert!((fd - g[k]).abs() < 1e-6, "{name} {x:?}: {fd} vs {}", g[k]);
                }
            }
        }
    }

    #[test]
    fn two_blas_has_two_segments() {
        let f = TargetSpec::<f64>::named("two_blas").unwrap().field().unwrap();
        let mut out = [0.0; 2];
        for x in [[0.5, 0.7], [2.5, 2.3], [0.5, 1.5]] {
            f.eval(&x, &mut out);
            assert!(out[0].abs() < 1e-12 && out[1].abs() < 1e-12, "{x:?} {out:?}");
        }
        f.eval(&[1.5 + 1e-3, 1.5], &mut out);
        assert!(out[0] > 0.0);
    }

    #[test]
    fn deterministic_and_noisy() {
        for name in ["ring", "vdp_noisy"] {
            let t = TargetSpec::<f64>::named(name).unwrap();
            assert_eq!(t.simulate_default(3).unwrap(), t.simulate_default(3).unwrap());
        }
        let a = TargetSpec::<f64>::named("vdp").unwrap().simulate_default(3).unwrap();
        let b = TargetSpec::<f64>::named("vdp_noisy").unwrap().simulate_default(3).unwrap();
        assert_eq!(a.point(0, 0), b.point(0, 0));
        assert_ne!(a.point(0, 5), b.point(0, 5));
    }

    #[test]
    fn zero_perturbations_reproduce_base() {
        let base = TargetSpec::<f64>::named("ring").unwrap();
        let plain = base.simulate_default(7).unwrap();
        for p in [PerturbationSpec::diffeo_interp(0.0, 1), PerturbationSpec::gp_field(0.0, 1)] {
            let pert = base.clone().with_perturbation(p).simulate_default(7).unwrap();
            assert_eq!(pert.data(), plain.data());
        }
        let moved = base
            .clone()
            .with_perturbation(PerturbationSpec::gp_field(0.1, 1))
            .simulate_default(7)
            .unwrap();
        assert_ne!(moved.data(), plain.data());
    }

    #[test]
    fn json_by_name_or_full() {
        let t = TargetSpec::<f64>::from_json(r#"{"name": "vdp_noisy"}"#).unwrap();
        assert_eq!(t.noise_sigma, 0.25);
        assert_eq!(t.name, "vdp_noisy");
        let s = serde_json::to_string(&TargetSpec::<f64>::named("lienard").unwrap()).unwrap();
        assert_eq!(TargetSpec::<f64>::from_json(&s).unwrap(), TargetSpec::named("lienard").unwrap());
        assert!(matches!(TargetSpec::<f64>::named("duffing"), Err(DaaError::UnknownName(_))));
        let bad = r#"{"name": "x", "base": {"type": "van_der_pol", "mu": -1.0}}"#;
        assert!(TargetSpec::<f64>::from_json(bad).is_err());
    }

    #[test]
    fn external_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rnn.csv");
        let batch = TargetSpec::<f64>::named("ring").unwrap().simulate_default(1).unwrap();
        sim::write_csv(&path, &batch).unwrap();
        let ext = load_external::<f64>(&path).unwrap();
        assert_eq!((ext.batch.n_traj(), ext.batch.n_intervals(), ext.batch.dim()), (50, 10, 2));
        assert_eq!(ext.batch.data(), batch.data());
        assert_eq!(ext.source_label, "rnn");
    }
}
