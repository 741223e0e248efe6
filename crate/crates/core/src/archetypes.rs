//! The archetype library: canonical vector fields, their closed-form flows,
//! designed invariant manifolds and Cartesian-product composition.
//!
//! Sign convention: `alpha < 0` contracts. This holds for the radial rate of
//! the ring and limit cycle, for the residual dimensions of every archetype,
//! and for the out-of-box pull of the bounded continuous attractor, whose
//! field is `alpha * (x - clip(x, -B, B))`.

use crate::error::{DaaError, Result};
use crate::field::VectorField;
use crate::scalar::{norm, Real};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    FixedPoint,
    Multistable,
    Bistable,
    LimitCycle,
    RingAttractor,
    SphereAttractor,
    BoundedContinuousAttractor,
    Composite,
    External,
}

/// Archetype parameters. Entries irrelevant to a kind are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct ArchetypeParams<T> {
    /// Contraction rate (1/time).
    pub alpha: T,
    /// Angular velocity (rad/time), limit cycle only.
    pub v: T,
    /// Sorted, distinct roots of the multistable polynomial.
    pub roots: Vec<T>,
    /// Hypercube half-width of the bounded continuous attractor.
    #[serde(rename = "B")]
    pub b: T,
    /// Sphere radius.
    #[serde(rename = "R")]
    pub r: T,
    /// Residual contraction rate of the sphere attractor.
    pub beta_res: T,
    /// Attractor dimension: box dimensions of the bounded continuous
    /// attractor, intrinsic dimension of the sphere (which then occupies
    /// `d_bca + 1` coordinates).
    pub d_bca: usize,
    pub sub_specs: Vec<SystemSpec<T>>,
}

impl<T: Real> Default for ArchetypeParams<T> {
    fn default() -> Self {
        Self {
            alpha: -T::one(),
            v: T::zero(),
            roots: Vec::new(),
            b: T::one(),
            r: T::one(),
            beta_res: -T::one(),
            d_bca: 1,
            sub_specs: Vec::new(),
        }
    }
}

/// Archetype parameters that can be optimized alongside the flow map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainableParam {
    #[serde(rename = "v")]
    Velocity,
    Alpha,
}

impl<T: Real> ArchetypeParams<T> {
    pub fn get(&self, p: TrainableParam) -> T {
        match p {
            TrainableParam::Velocity => self.v,
            TrainableParam::Alpha => self.alpha,
        }
    }

    pub fn set(&mut self, p: TrainableParam, value: T) {
        match p {
            TrainableParam::Velocity => self.v = value,
            TrainableParam::Alpha => self.alpha = value,
        }
    }
}

/// Declarative description of an archetype (or an external, field-less system).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SystemSpec<T> {
    pub kind: SystemKind,
    pub params: ArchetypeParams<T>,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldDescriptor {
    Point,
    Circle,
    Segment,
    BoxInterior,
    Sphere,
    Product,
}

/// Points on an archetype's designed invariant manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSample<T> {
    pub points: Vec<Vec<T>>,
    pub descriptor: ManifoldDescriptor,
}

impl<T: Real> SystemSpec<T> {
    fn with(kind: SystemKind, dim: usize, params: ArchetypeParams<T>) -> Self {
        Self { kind, params, dim }
    }

    /// `ẋ = αx` with `α = -1`.
    pub fn fixed_point(dim: usize) -> Self {
        Self::with(SystemKind::FixedPoint, dim, ArchetypeParams::default())
    }

    /// `ẋ₁ = α ∏(x₁ - rᵢ)` with `α = -1`; other dimensions contract.
    pub fn multistable(roots: Vec<T>, dim: usize) -> Self {
        let params = ArchetypeParams {
            roots,
            ..Default::default()
        };
        Self::with(SystemKind::Multistable, dim, params)
    }

    /// `ẋ₁ = -(x₁³ - x₁)`; other dimensions contract.
    pub fn bistable(dim: usize) -> Self {
        Self::with(SystemKind::Bistable, dim, ArchetypeParams::default())
    }

    /// Canonical limit cycle, `α = -1`, `v = -1`.
    pub fn limit_cycle(dim: usize) -> Self {
        let params = ArchetypeParams {
            v: -T::one(),
            ..Default::default()
        };
        Self::with(SystemKind::LimitCycle, dim, params)
    }

    /// Canonical ring attractor, `α = -1`.
    pub fn ring_attractor(dim: usize) -> Self {
        Self::with(SystemKind::RingAttractor, dim, ArchetypeParams::default())
    }

    /// Sphere `S^sphere_dim` of radius 1 embedded in the first
    /// `sphere_dim + 1` coordinates.
    pub fn sphere_attractor(dim: usize, sphere_dim: usize) -> Self {
        let params = ArchetypeParams {
            d_bca: sphere_dim,
            ..Default::default()
        };
        Self::with(SystemKind::SphereAttractor, dim, params)
    }

    pub fn bounded_continuous(dim: usize, d_bca: usize, half_width: T) -> Self {
        let params = ArchetypeParams {
            d_bca,
            b: half_width,
            ..Default::default()
        };
        Self::with(SystemKind::BoundedContinuousAttractor, dim, params)
    }

    /// Bounded line attractor: a one-dimensional box `[-1, 1]` plus contracting residuals.
    pub fn bounded_line(dim: usize) -> Self {
        Self::bounded_continuous(dim, 1, T::one())
    }

    pub fn external(dim: usize) -> Self {
        Self::with(SystemKind::External, dim, ArchetypeParams::default())
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.params.alpha = alpha;
        self
    }

    pub fn with_velocity(mut self, v: T) -> Self {
        self.params.v = v;
        self
    }

    pub fn with_params(mut self, params: ArchetypeParams<T>) -> Self {
        self.params = params;
        self
    }

    /// Looks up a two-or-more dimensional library archetype by registry name:
    /// `ring`, `limit_cycle`, `fixed_point`, `bistable`, `bla`.
    pub fn named(name: &str, dim: usize) -> Result<Self> {
        let spec = match name {
            "ring" => Self::ring_attractor(dim),
            "limit_cycle" => Self::limit_cycle(dim),
            "fixed_point" => Self::fixed_point(dim),
            "bistable" => Self::bistable(dim),
            "bla" => Self::bounded_line(dim),
            _ => return Err(DaaError::UnknownName(name.to_string())),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Library names in registry order.
    pub const LIBRARY: [&'static str; 5] = ["ring", "limit_cycle", "fixed_point", "bistable", "bla"];

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |m: &str| Err(DaaError::InvalidSpec(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        let scalars = [p.alpha, p.v, p.b, p.r, p.beta_res];
        if scalars.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite");
        }
        match self.kind {
            SystemKind::LimitCycle | SystemKind::RingAttractor if self.dim < 2 => {
                bad("ring and limit cycle need dim >= 2")
            }
            SystemKind::Multistable => {
                if p.roots.is_empty() {
                    return bad("multistable needs at least one root");
                }
                if p.roots.iter().any(|r| !r.is_finite()) {
                    return bad("roots must be finite");
                }
                if p.roots.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("roots must be sorted and distinct");
                }
                Ok(())
            }
            SystemKind::BoundedContinuousAttractor => {
                if p.b <= T::zero() {
                    return bad("B must be positive");
                }
                if p.d_bca == 0 || p.d_bca > self.dim {
                    return bad("d_bca must lie in 1..=dim");
                }
                Ok(())
            }
            SystemKind::SphereAttractor => {
                if p.r <= T::zero() {
                    return bad("R must be positive");
                }
                if p.d_bca + 1 > self.dim {
                    return bad("sphere needs d_bca + 1 <= dim");
                }
                Ok(())
            }
            SystemKind::Composite => {
                if p.sub_specs.len() < 2 {
                    return Err(DaaError::EmptyComposite);
                }
                let total: usize = p.sub_specs.iter().map(|s| s.dim).sum();
                if total != self.dim {
                    return bad("composite dim must equal the sum of sub-dims");
                }
                p.sub_specs.iter().try_for_each(|s| s.validate())
            }
            _ => Ok(()),
        }
    }

    pub fn is_external(&self) -> bool {
        match self.kind {
            SystemKind::External => true,
            SystemKind::Composite => self.params.sub_specs.iter().any(|s| s.is_external()),
            _ => false,
        }
    }

    /// Borrowed view implementing [`VectorField`]; fails for external systems.
    pub fn field(&self) -> Result<ArchetypeField<'_, T>> {
        if self.is_external() {
            return Err(DaaError::ExternalSystemHasNoField);
        }
        Ok(ArchetypeField { spec: self })
    }

    pub fn has_closed_form(&self) -> bool {
        matches!(
            self.kind,
            SystemKind::FixedPoint | SystemKind::LimitCycle | SystemKind::RingAttractor
        )
    }

    pub fn supports_trainable(&self, p: TrainableParam) -> bool {
        match p {
            TrainableParam::Velocity => self.kind == SystemKind::LimitCycle,
            TrainableParam::Alpha => !matches!(
                self.kind,
                SystemKind::Composite | SystemKind::External | SystemKind::SphereAttractor
            ),
        }
    }

    fn velocity(&self) -> T {
        if self.kind == SystemKind::LimitCycle {
            self.params.v
        } else {
            T::zero()
        }
    }

    pub(crate) fn eval_into(&self, x: &[T], out: &mut [T]) {
        let p = &self.params;
        let a = p.alpha;
        match self.kind {
            SystemKind::FixedPoint => {
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = a * xi;
                }
            }
            SystemKind::Multistable | SystemKind::Bistable => {
                out[0] = if self.kind == SystemKind::Bistable {
                    -(x[0] * x[0] * x[0] - x[0])
                } else {
                    a * p.roots.iter().fold(T::one(), |acc, &r| acc * (x[0] - r))
                };
                residual(a, &x[1..], &mut out[1..]);
            }
            SystemKind::LimitCycle | SystemKind::RingAttractor => {
                let v = self.velocity();
                let radial = a * ((x[0] * x[0] + x[1] * x[1]).sqrt() - T::one());
                out[0] = radial * x[0] - v * x[1];
                out[1] = radial * x[1] + v * x[0];
                residual(a, &x[2..], &mut out[2..]);
            }
            SystemKind::SphereAttractor => {
                let m = p.d_bca + 1;
                let n = norm(&x[..m]);
                let scale = if n > T::zero() { a * (n - p.r) / n } else { T::zero() };
                for (o, &xi) in out[..m].iter_mut().zip(&x[..m]) {
                    *o = scale * xi;
                }
                residual(p.beta_res, &x[m..], &mut out[m..]);
            }
            SystemKind::BoundedContinuousAttractor => {
                let m = p.d_bca;
                for (o, &xi) in out[..m].iter_mut().zip(&x[..m]) {
                    *o = a * (xi - clip(xi, p.b));
                }
                residual(a, &x[m..], &mut out[m..]);
            }
            SystemKind::Composite => {
                let mut off = 0;
                for s in &p.sub_specs {
                    s.eval_into(&x[off..off + s.dim], &mut out[off..off + s.dim]);
                    off += s.dim;
                }
            }
            SystemKind::External => unreachable!("guarded by SystemSpec::field"),
        }
    }

    pub(crate) fn vjp_into(&self, x: &[T], c: &[T], out: &mut [T]) {
        let p = &self.params;
        let a = p.alpha;
        match self.kind {
            SystemKind::FixedPoint => {
                for (o, &ci) in out.iter_mut().zip(c) {
                    *o = a * ci;
                }
            }
            SystemKind::Multistable | SystemKind::Bistable => {
                let slope = if self.kind == SystemKind::Bistable {
                    T::one() - T::lit(3.0) * x[0] * x[0]
                } else {
                    a * poly_derivative(&p.roots, x[0])
                };
                out[0] = slope * c[0];
                residual(a, &c[1..], &mut out[1..]);
            }
            SystemKind::LimitCycle | SystemKind::RingAttractor => {
                // J = a(r-1) I + a p pᵀ / r + v [[0,-1],[1,0]]
                let v = self.velocity();
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let diag = a * (r - T::one());
                out[0] = diag * c[0] + v * c[1];
                out[1] = diag * c[1] - v * c[0];
                if r > T::zero() {
                    let k = a * (x[0] * c[0] + x[1] * c[1]) / r;
                    out[0] += k * x[0];
                    out[1] += k * x[1];
                }
                residual(a, &c[2..], &mut out[2..]);
            }
            SystemKind::SphereAttractor => {
                // J = a I - aR (I/n - x xᵀ/n³)
                let m = p.d_bca + 1;
                let n = norm(&x[..m]);
                if n > T::zero() {
                    let xc: T = x[..m].iter().zip(&c[..m]).map(|(&xi, &ci)| xi * ci).sum();
                    let k = a * p.r / (n * n * n) * xc;
                    let diag = a - a * p.r / n;
                    for i in 0..m {
                        out[i] = diag * c[i] + k * x[i];
                    }
                } else {
                    out[..m].iter_mut().for_each(|o| *o = T::zero());
                }
                residual(p.beta_res, &c[m..], &mut out[m..]);
            }
            SystemKind::BoundedContinuousAttractor => {
                let m = p.d_bca;
                for i in 0..m {
                    out[i] = if x[i].abs() > p.b { a * c[i] } else { T::zero() };
                }
                residual(a, &c[m..], &mut out[m..]);
            }
            SystemKind::Composite => {
                let mut off = 0;
                for s in &p.sub_specs {
                    let r = off..off + s.dim;
                    s.vjp_into(&x[r.clone()], &c[r.clone()], &mut out[r]);
                    off += s.dim;
                }
            }
            SystemKind::External => unreachable!("guarded by SystemSpec::field"),
        }
    }

    /// `cot · ∂f/∂param` at `x`.
    pub fn param_vjp(&self, x: &[T], cot: &[T], param: TrainableParam) -> T {
        let p = &self.params;
        let res = |from: usize| -> T {
            x[from..].iter().zip(&cot[from..]).map(|(&xi, &ci)| xi * ci).sum()
        };
        match (param, self.kind) {
            (TrainableParam::Velocity, SystemKind::LimitCycle) => -x[1] * cot[0] + x[0] * cot[1],
            (TrainableParam::Velocity, _) => T::zero(),
            (TrainableParam::Alpha, kind) => match kind {
                SystemKind::FixedPoint => res(0),
                SystemKind::Multistable => {
                    p.roots.iter().fold(T::one(), |acc, &r| acc * (x[0] - r)) * cot[0] + res(1)
                }
                SystemKind::Bistable => res(1),
                SystemKind::LimitCycle | SystemKind::RingAttractor => {
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    (r - T::one()) * (x[0] * cot[0] + x[1] * cot[1]) + res(2)
                }
                SystemKind::BoundedContinuousAttractor => {
                    let m = p.d_bca;
                    let boxed: T = (0..m).map(|i| (x[i] - clip(x[i], p.b)) * cot[i]).sum();
                    boxed + res(m)
                }
                _ => T::zero(),
            },
        }
    }

    /// Closed-form flow `φ^t(x0)` for fixed point, ring and limit cycle.
    pub fn analytic_flow(&self, x0: &[T], t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dim];
        self.analytic_flow_into(x0, t, &mut out)?;
        Ok(out)
    }

    pub fn analytic_flow_into(&self, x0: &[T], t: T, out: &mut [T]) -> Result<()> {
        self.check_dim(x0.len())?;
        let decay = (self.params.alpha * t).exp();
        match self.kind {
            SystemKind::FixedPoint => {
                for (o, &xi) in out.iter_mut().zip(x0) {
                    *o = xi * decay;
                }
            }
            SystemKind::LimitCycle | SystemKind::RingAttractor => {
                let r0 = (x0[0] * x0[0] + x0[1] * x0[1]).sqrt();
                // ṙ = α r (r - 1)  ⇒  1/r - 1 = (1/r0 - 1) e^{αt}; r/r0 = 1 / D
                let denom = decay + r0 * (T::one() - decay);
                if !(denom > T::zero()) || !denom.is_finite() {
                    return Err(DaaError::NonFiniteState { step: 0 });
                }
                let s = denom.recip();
                let (sn, cs) = (self.velocity() * t).sin_cos();
                out[0] = s * (cs * x0[0] - sn * x0[1]);
                out[1] = s * (sn * x0[0] + cs * x0[1]);
                for (o, &xi) in out[2..].iter_mut().zip(&x0[2..]) {
                    *o = xi * decay;
                }
            }
            _ => return Err(DaaError::NoClosedForm(format!("{:?}", self.kind))),
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(DaaError::NonFiniteState { step: 0 })
        }
    }

    /// Reverse-mode derivative of [`SystemSpec::analytic_flow`]: adds
    /// `(∂φ/∂x0)ᵀ cot` to `x0_adj` and returns `(cot·∂φ/∂α, cot·∂φ/∂v)`.
    pub fn analytic_flow_vjp(&self, x0: &[T], t: T, cot: &[T], x0_adj: &mut [T]) -> Result<(T, T)> {
        self.check_dim(x0.len())?;
        let decay = (self.params.alpha * t).exp();
        let mut d_alpha = T::zero();
        let mut d_v = T::zero();
        let res_from = match self.kind {
            SystemKind::FixedPoint => 0,
            SystemKind::LimitCycle | SystemKind::RingAttractor => {
                let r0 = (x0[0] * x0[0] + x0[1] * x0[1]).sqrt();
                let denom = decay + r0 * (T::one() - decay);
                if !(denom > T::zero()) {
                    return Err(DaaError::NonFiniteState { step: 0 });
                }
                let s = denom.recip();
                let (sn, cs) = (self.velocity() * t).sin_cos();
                let px = s * (cs * x0[0] - sn * x0[1]);
                let py = s * (sn * x0[0] + cs * x0[1]);
                // w = Rᵀ cot
                let wx = cs * cot[0] + sn * cot[1];
                let wy = -sn * cot[0] + cs * cot[1];
                x0_adj[0] += s * wx;
                x0_adj[1] += s * wy;
                if r0 > T::zero() {
                    let ds_dr0 = -(T::one() - decay) * s * s;
                    let k = ds_dr0 / r0 * (x0[0] * wx + x0[1] * wy);
                    x0_adj[0] += k * x0[0];
                    x0_adj[1] += k * x0[1];
                }
                d_v = t * (-cot[0] * py + cot[1] * px);
                d_alpha = (cot[0] * px + cot[1] * py) * (-t * decay * (T::one() - r0) * s);
                2
            }
            _ => return Err(DaaError::NoClosedForm(format!("{:?}", self.kind))),
        };
        for i in res_from..self.dim {
            x0_adj[i] += decay * cot[i];
            d_alpha += cot[i] * x0[i] * decay * t;
        }
        if self.kind != SystemKind::LimitCycle {
            d_v = T::zero();
        }
        Ok((d_alpha, d_v))
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(DaaError::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    /// Number of points of a discrete invariant set, `None` for continua.
    fn discrete_count(&self) -> Option<usize> {
        match self.kind {
            SystemKind::FixedPoint => Some(1),
            SystemKind::Bistable | SystemKind::Multistable => Some(self.stable_roots().len()),
            SystemKind::Composite => self
                .params
                .sub_specs
                .iter()
                .map(|s| s.discrete_count())
                .product(),
            _ => None,
        }
    }

    /// Stable zeros of the one-dimensional polynomial part.
    pub fn stable_roots(&self) -> Vec<T> {
        match self.kind {
            SystemKind::Bistable => vec![-T::one(), T::one()],
            SystemKind::Multistable => {
                let a = self.params.alpha;
                self.params
                    .roots
                    .iter()
                    .copied()
                    .filter(|&r| a * poly_derivative(&self.params.roots, r) < T::zero())
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// `n_points` samples of the designed invariant manifold. Discrete sets
    /// are cycled through so the count is always `n_points`.
    pub fn invariant_manifold(&self, n_points: usize) -> Result<ManifoldSample<T>> {
        if self.is_external() {
            return Err(DaaError::ExternalSystemHasNoField);
        }
        let d = self.dim;
        let zero = || vec![T::zero(); d];
        let (points, descriptor) = match self.kind {
            SystemKind::FixedPoint => ((0..n_points).map(|_| zero()).collect(), ManifoldDescriptor::Point),
            SystemKind::Bistable | SystemKind::Multistable => {
                let roots = self.stable_roots();
                if roots.is_empty() {
                    return Err(DaaError::InvalidSpec("no stable roots".into()));
                }
                let pts = (0..n_points)
                    .map(|k| {
                        let mut p = zero();
                        p[0] = roots[k % roots.len()];
                        p
                    })
                    .collect();
                (pts, ManifoldDescriptor::Point)
            }
            SystemKind::LimitCycle | SystemKind::RingAttractor => {
                let pts = (0..n_points)
                    .map(|k| {
                        let th = T::lit(2.0) * T::PI() * T::from_usize_lossy(k) / T::from_usize_lossy(n_points);
                        let mut p = zero();
                        p[0] = th.cos();
                        p[1] = th.sin();
                        p
                    })
                    .collect();
                (pts, ManifoldDescriptor::Circle)
            }
            SystemKind::SphereAttractor => {
                let sd = self.params.d_bca;
                let pts = sphere_points::<T>(sd, n_points)
                    .into_iter()
                    .map(|u| {
                        let mut p = zero();
                        for (pi, ui) in p.iter_mut().zip(u) {
                            *pi = ui * self.params.r;
                        }
                        p
                    })
                    .collect();
                (pts, ManifoldDescriptor::Sphere)
            }
            SystemKind::BoundedContinuousAttractor => {
                let m = self.params.d_bca;
                let per_axis = grid_side(n_points, m);
                let b = self.params.b;
                let pts = (0..n_points)
                    .map(|k| {
                        let mut p = zero();
                        let mut idx = k;
                        for coord in p.iter_mut().take(m) {
                            let i = idx % per_axis;
                            idx /= per_axis;
                            *coord = if per_axis == 1 {
                                T::zero()
                            } else {
                                -b + T::lit(2.0) * b * T::from_usize_lossy(i) / T::from_usize_lossy(per_axis - 1)
                            };
                        }
                        p
                    })
                    .collect();
                let desc = if m == 1 { ManifoldDescriptor::Segment } else { ManifoldDescriptor::BoxInterior };
                (pts, desc)
            }
            SystemKind::Composite => {
                let subs = &self.params.sub_specs;
                let discrete: usize = subs.iter().filter_map(|s| s.discrete_count()).product();
                let n_cont = subs.iter().filter(|s| s.discrete_count().is_none()).count();
                let cont_budget = n_points.div_ceil(discrete.max(1)).max(1);
                let cont_count = if n_cont == 0 { 1 } else { grid_side(cont_budget, n_cont) };
                let blocks = subs
                    .iter()
                    .map(|s| {
                        let m = s.discrete_count().unwrap_or(cont_count).max(1);
                        s.invariant_manifold(m).map(|ms| ms.points)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let pts = (0..n_points)
                    .map(|k| {
                        let mut p = Vec::with_capacity(d);
                        let mut idx = k;
                        for b in &blocks {
                            p.extend_from_slice(&b[idx % b.len()]);
                            idx /= b.len();
                        }
                        p
                    })
                    .collect();
                (pts, ManifoldDescriptor::Product)
            }
            SystemKind::External => unreachable!(),
        };
        Ok(ManifoldSample { points, descriptor })
    }
}

/// Field view of a non-external [`SystemSpec`].
#[derive(Clone, Copy, Debug)]
pub struct ArchetypeField<'a, T> {
    spec: &'a SystemSpec<T>,
}

impl<T: Real> ArchetypeField<'_, T> {
    pub fn spec(&self) -> &SystemSpec<T> {
        self.spec
    }
}

impl<T: Real> VectorField<T> for ArchetypeField<'_, T> {
    fn dim(&self) -> usize {
        self.spec.dim
    }
    fn eval(&self, x: &[T], out: &mut [T]) {
        self.spec.eval_into(x, out)
    }
    fn vjp(&self, x: &[T], cot: &[T], out: &mut [T]) {
        self.spec.vjp_into(x, cot, out)
    }
}

/// `f(x)` for an archetype.
pub fn eval_field<T: Real>(spec: &SystemSpec<T>, x: &[T]) -> Result<Vec<T>> {
    let field = spec.field()?;
    spec.check_dim(x.len())?;
    let mut out = vec![T::zero(); spec.dim];
    field.eval(x, &mut out);
    Ok(out)
}

pub fn analytic_flow<T: Real>(spec: &SystemSpec<T>, x0: &[T], t: T) -> Result<Vec<T>> {
    spec.analytic_flow(x0, t)
}

pub fn invariant_manifold<T: Real>(spec: &SystemSpec<T>, n_points: usize) -> Result<ManifoldSample<T>> {
    spec.invariant_manifold(n_points)
}

/// Cartesian product of archetypes; the field is the blockwise concatenation.
pub fn compose<T: Real>(specs: Vec<SystemSpec<T>>) -> Result<SystemSpec<T>> {
    if specs.len() < 2 || specs.iter().any(|s| s.is_external()) {
        return Err(DaaError::EmptyComposite);
    }
    let dim = specs.iter().map(|s| s.dim).sum();
    let spec = SystemSpec {
        kind: SystemKind::Composite,
        params: ArchetypeParams {
            sub_specs: specs,
            ..Default::default()
        },
        dim,
    };
    spec.validate()?;
    Ok(spec)
}

#[inline]
fn residual<T: Real>(rate: T, x: &[T], out: &mut [T]) {
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = rate * xi;
    }
}

#[inline]
fn clip<T: Real>(x: T, b: T) -> T {
    x.max(-b).min(b)
}

fn poly_derivative<T: Real>(roots: &[T], x: T) -> T {
    (0..roots.len())
        .map(|j| {
            roots
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .fold(T::one(), |acc, (_, &r)| acc * (x - r))
        })
        .sum()
}

/// Smallest `s` with `s^dims >= n`.
fn grid_side(n: usize, dims: usize) -> usize {
    let mut s = 1usize;
    while s.checked_pow(dims as u32).is_some_and(|p| p < n) {
        s += 1;
    }
    s
}

/// Deterministic, roughly uniform points on the unit sphere `S^d ⊂ R^{d+1}`.
fn sphere_points<T: Real>(d: usize, n: usize) -> Vec<Vec<T>> {
    let two_pi = T::lit(2.0) * T::PI();
    match d {
        0 => (0..n).map(|k| vec![if k % 2 == 0 { T::one() } else { -T::one() }]).collect(),
        1 => (0..n)
            .map(|k| {
                let th = two_pi * T::from_usize_lossy(k) / T::from_usize_lossy(n);
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci lattice on S²; higher spheres embed it in the first
            // three coordinates.
            let golden = T::PI() * (T::lit(3.0) - T::lit(5.0).sqrt());
            (0..n)
                .map(|k| {
                    let kf = T::from_usize_lossy(k) + T::lit(0.5);
                    let z = T::one() - T::lit(2.0) * kf / T::from_usize_lossy(n);
                    let rho = (T::one() - z * z).max(T::zero()).sqrt();
                    let th = golden * T::from_usize_lossy(k);
                    let mut p = vec![T::zero(); d + 1];
                    p[0] = rho * th.cos();
                    p[1] = rho * th.sin();
                    p[2] = z;
                    p
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Rk4;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ring_field_vanishes_on_unit_circle() {
        let ring = SystemSpec::<f64>::ring_attractor(2);
        assert_eq!(eval_field(&ring, &[1.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn bistable_values() {
        let s = SystemSpec::<f64>::bistable(1);
        assert_eq!(eval_field(&s, &[1.0]).unwrap()[0], 0.0);
        assert_eq!(eval_field(&s, &[0.0]).unwrap()[0], 0.0);
        assert!(close(eval_field(&s, &[0.5]).unwrap()[0], 0.375, 1e-15));
    }

    #[test]
    fn limit_cycle_field_matches_polar_form_and_flow() {
        let lc = SystemSpec::<f64>::limit_cycle(2);
        let f = eval_field(&lc, &[0.5, 0.0]).unwrap();
        // ṙ = -r(r-1) = 0.25 outward, θ̇ = -1 gives ẏ = r·θ̇ = -0.5
        assert!(close(f[0], 0.25, 1e-15) && close(f[1], -0.5, 1e-15), "{f:?}");
        // cross-check against finite differences of the closed-form flow
        let h = 1e-6;
        let p = lc.analytic_flow(&[0.5, 0.0], h).unwrap();
        let m = lc.analytic_flow(&[0.5, 0.0], -h).unwrap();
        assert!(close((p[0] - m[0]) / (2.0 * h), 0.25, 1e-8));
        assert!(close((p[1] - m[1]) / (2.0 * h), -0.5, 1e-8));
    }

    #[test]
    fn external_has_no_field() {
        let e = SystemSpec::<f64>::external(2);
        assert!(matches!(eval_field(&e, &[0.0, 0.0]), Err(DaaError::ExternalSystemHasNoField)));
        let s = SystemSpec::<f64>::fixed_point(2);
        assert!(matches!(eval_field(&s, &[0.0]), Err(DaaError::DimensionMismatch { .. })));
    }

    #[test]
    fn fixed_point_closed_form() {
        let s = SystemSpec::<f64>::fixed_point(1);
        assert!(close(s.analytic_flow(&[2.0], 1.0).unwrap()[0], 0.7357588823428847, 1e-12));
    }

    #[test]
    fn ring_radius_against_rk4_oracle() {
        let s = SystemSpec::<f64>::ring_attractor(2);
        let y = s.analytic_flow(&[0.5, 0.0], 1.0).unwrap();
        assert!(close(y[0], 0.731058578630005, 1e-6));
        assert_eq!(y[1], 0.0);
        // independent RK4 on the radial ODE, dt = 1e-3
        let radial = crate::field::FnField::new(1, |r: &[f64], o: &mut [f64]| o[0] = -r[0] * (r[0] - 1.0));
        let mut rk = Rk4::new(1);
        let mut r = [0.5];
        for _ in 0..1000 {
            rk.step(&radial, &mut r, 1e-3);
        }
        assert!(close(r[0], y[0], 1e-10));
        let on = s.analytic_flow(&[0.6, 0.8], 3.7).unwrap();
        assert!(close(on[0], 0.6, 1e-15) && close(on[1], 0.8, 1e-15));
    }

    #[test]
    fn no_closed_form_for_bistable() {
        let s = SystemSpec::<f64>::bistable(1);
        assert!(matches!(s.analytic_flow(&[0.3], 1.0), Err(DaaError::NoClosedForm(_))));
    }

    #[test]
    fn manifold_samples() {
        let ring = SystemSpec::<f64>::ring_attractor(2).invariant_manifold(4).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (p, w) in ring.points.iter().zip(want) {
            assert!(close(p[0], w[0], 1e-15) && close(p[1], w[1], 1e-15));
        }
        let bi = SystemSpec::<f64>::bistable(1).invariant_manifold(2).unwrap();
        assert_eq!(bi.points, vec![vec![-1.0], vec![1.0]]);
        let bca = SystemSpec::<f64>::bounded_line(2).invariant_manifold(9).unwrap();
        assert_eq!(bca.descriptor, ManifoldDescriptor::Segment);
        assert!(bca.points.iter().all(|p| p[0].abs() <= 1.0 && p[1] == 0.0));
    }

    #[test]
    fn compose_blockwise() {
        let c = compose(vec![SystemSpec::<f64>::fixed_point(1), SystemSpec::fixed_point(1)]).unwrap();
        assert_eq!(eval_field(&c, &[1.0, 1.0]).unwrap(), vec![-1.0, -1.0]);
        assert!(matches!(
            compose(vec![SystemSpec::<f64>::fixed_point(1)]),
            Err(DaaError::EmptyComposite)
        ));
        assert!(matches!(
            compose(vec![SystemSpec::<f64>::fixed_point(1), SystemSpec::external(1)]),
            Err(DaaError::EmptyComposite)
        ));
        let blas = compose(vec![SystemSpec::<f64>::bistable(1), SystemSpec::bounded_line(2)]).unwrap();
        assert_eq!(blas.dim, 3);
    }

    #[test]
    fn composite_manifold_is_product_of_zeros() {
        let c = compose(vec![SystemSpec::<f64>::bistable(1), SystemSpec::bounded_line(1)]).unwrap();
        let m = c.invariant_manifold(20).unwrap();
        assert_eq!(m.points.len(), 20);
        let xs: std::collections::BTreeSet<i64> = m.points.iter().map(|p| p[0] as i64).collect();
        assert_eq!(xs.into_iter().collect::<Vec<_>>(), vec![-1, 1]);
        for p in &m.points {
            let f = eval_field(&c, p).unwrap();
            assert!(f.iter().all(|v| v.abs() <= 1e-12), "{p:?} {f:?}");
        }
    }

    #[test]
    fn roots_validation() {
        assert!(SystemSpec::<f64>::multistable(vec![1.0, 0.0], 1).validate().is_err());
        assert!(SystemSpec::<f64>::multistable(vec![0.0, 0.0], 1).validate().is_err());
        let m = SystemSpec::<f64>::multistable(vec![-1.0, 0.0, 1.0], 1);
        m.validate().unwrap();
        assert_eq!(m.stable_roots(), vec![-1.0, 1.0]);
        // α ∏(x - rᵢ) with α = -1 and roots {-1, 0, 1} is the bistable field
        for x in [-1.7, -0.3, 0.2, 1.4] {
            let a = eval_field(&m, &[x]).unwrap()[0];
            let b = eval_field(&SystemSpec::bistable(1), &[x]).unwrap()[0];
            assert!(close(a, b, 1e-14));
        }
    }

    #[test]
    fn bca_pulls_back_to_box() {
        let s = SystemSpec::<f64>::bounded_continuous(2, 2, 1.0);
        assert_eq!(eval_field(&s, &[0.3, -0.9]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(eval_field(&s, &[1.5, -2.0]).unwrap(), vec![-0.5, 1.0]);
    }

    #[test]
    fn json_field_names() {
        let s = SystemSpec::<f64>::bounded_line(2);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["kind"], "BoundedContinuousAttractor");
        for key in ["alpha", "v", "roots", "B", "R", "beta_res", "d_bca", "sub_specs"] {
            assert!(v["params"].get(key).is_some(), "{key}");
        }
        let back: SystemSpec<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn single_precision_ring() {
        let s = SystemSpec::<f32>::ring_attractor(2);
        let y = s.analytic_flow(&[0.5, 0.0], 1.0).unwrap();
        assert!((y[0] - 0.731_058_6).abs() < 1e-6);
    }
}
