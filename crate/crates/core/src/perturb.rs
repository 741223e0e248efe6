//! Controlled deformations of a base system: a random diffeomorphism scaled
//! towards the identity, and an additive Gaussian-process vector field of
//! fixed RMS norm. Also the Grönwall deviation bound used to check the latter.

use crate::diffeo::{DiffeoModel, MlpField};
use crate::error::{DaaError, Result};
use crate::field::VectorField;
use crate::scalar::Real;
use crate::seed::{self, tag};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Map trajectories through `Φ_s`, the flow of a random MLP field scaled by `s`.
    DiffeoInterp,
    /// Add a GP-sampled field of RMS norm `s` to the drift.
    GpField,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PerturbationSpec<T> {
    pub kind: PerturbationKind,
    pub s: T,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp: Option<GpKernelParams<T>>,
    /// Hidden width of the random MLP (diffeo family).
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_flow_steps")]
    pub flow_steps: usize,
}

fn default_hidden() -> usize {
    64
}

fn default_flow_steps() -> usize {
    10
}

impl<T: Real> PerturbationSpec<T> {
    pub fn diffeo_interp(s: T, seed: u64) -> Self {
        Self {
            kind: PerturbationKind::DiffeoInterp,
            s,
            seed,
            gp: None,
            hidden: default_hidden(),
            flow_steps: default_flow_steps(),
        }
    }

    pub fn gp_field(s: T, seed: u64) -> Self {
        Self {
            kind: PerturbationKind::GpField,
            gp: Some(GpKernelParams::default()),
            ..Self::diffeo_interp(s, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s >= T::zero()) || !self.s.is_finite() {
            return Err(DaaError::InvalidSpec(format!("perturbation scale must be >= 0, got {}", self.s)));
        }
        if self.kind == PerturbationKind::DiffeoInterp && self.s > T::one() {
            return Err(DaaError::InvalidSpec(format!("interpolation scale must lie in [0, 1], got {}", self.s)));
        }
        if self.hidden == 0 || self.flow_steps == 0 {
            return Err(DaaError::InvalidSpec("hidden and flow_steps must be positive".into()));
        }
        if let Some(gp) = &self.gp {
            gp.validate()?;
        }
        Ok(())
    }

    pub fn kernel(&self) -> GpKernelParams<T> {
        self.gp.clone().unwrap_or_default()
    }
}

/// RBF kernel `σ² exp(-‖x-x'‖² / 2ℓ²)` and the lattice it is sampled on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct GpKernelParams<T> {
    pub variance: T,
    /// Fixed ℓ; drawn uniformly from [0.1, 1] when absent.
    pub lengthscale: Option<T>,
    pub grid: LatticeSpec<T>,
}

impl<T: Real> Default for GpKernelParams<T> {
    fn default() -> Self {
        Self {
            variance: T::one(),
            lengthscale: None,
            grid: LatticeSpec::default(),
        }
    }
}

impl<T: Real> GpKernelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance > T::zero()) {
            return Err(DaaError::InvalidSpec("kernel variance must be positive".into()));
        }
        if let Some(l) = self.lengthscale {
            if !(l > T::zero()) {
                return Err(DaaError::InvalidSpec("lengthscale must be positive".into()));
            }
        }
        if self.grid.n < 2 {
            return Err(DaaError::DegenerateLattice(format!("{} nodes per axis", self.grid.n)));
        }
        Ok(())
    }

    /// The fixed lengthscale, or the seeded draw from U[0.1, 1].
    pub fn resolve_lengthscale(&self, seed: u64) -> T {
        self.lengthscale.unwrap_or_else(|| {
            let mut rng = seed::stream(seed, tag::LENGTHSCALE, 0);
            T::lit(rng.random_range(0.1..=1.0))
        })
    }
}

/// Regular lattice: `n` nodes per axis over explicit bounds, or over the
/// data bounding box padded by `padding` times its extent on each side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct LatticeSpec<T> {
    pub n: usize,
    pub padding: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<(Vec<T>, Vec<T>)>,
}

impl<T: Real> Default for LatticeSpec<T> {
    fn default() -> Self {
        Self {
            n: 30,
            padding: T::lit(0.1),
            bounds: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Lattice<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    pub n: usize,
}

impl<T: Real> Lattice<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>, n: usize) -> Result<Self> {
        if lo.len() != 2 || hi.len() != 2 {
            return Err(DaaError::DegenerateLattice(format!(
                "lattices are two-dimensional, got {} bounds",
                lo.len()
            )));
        }
        if n < 2 {
            return Err(DaaError::DegenerateLattice(format!("{n} nodes per axis")));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(h > l) || !l.is_finite() || !h.is_finite() {
                return Err(DaaError::DegenerateLattice(format!("empty extent [{l}, {h}]")));
            }
        }
        Ok(Self { lo, hi, n })
    }

    /// Resolves `spec` against a box `(lo, hi)` of the data.
    pub fn from_spec(spec: &LatticeSpec<T>, data_lo: &[T], data_hi: &[T]) -> Result<Self> {
        if let Some((lo, hi)) = &spec.bounds {
            return Self::new(lo.clone(), hi.clone(), spec.n);
        }
        let (lo, hi) = data_lo
            .iter()
            .zip(data_hi)
            .map(|(&l, &h)| {
                let pad = (h - l) * spec.padding;
                (l - pad, h + pad)
            })
            .unzip();
        Self::new(lo, hi, spec.n)
    }

    pub fn coord(&self, axis: usize, i: usize) -> T {
        let frac = T::from_usize_lossy(i) / T::from_usize_lossy(self.n - 1);
        self.lo[axis] + (self.hi[axis] - self.lo[axis]) * frac
    }

    /// Nodes in `(ix, iy)` row-major order.
    pub fn nodes(&self) -> impl Iterator<Item = [T; 2]> + '_ {
        (0..self.n).flat_map(move |i| (0..self.n).map(move |j| [self.coord(0, i), self.coord(1, j)]))
    }

    pub fn spacing(&self, axis: usize) -> T {
        (self.hi[axis] - self.lo[axis]) / T::from_usize_lossy(self.n - 1)
    }
}

/// Cholesky-like factor `L` with `L Lᵀ = K` for the 1-D RBF Gram matrix,
/// via a clipped eigendecomposition (robust to numerical rank loss).
fn rbf_factor(coords: &[f64], lengthscale: f64) -> DMatrix<f64> {
    let n = coords.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let r = coords[i] - coords[j];
        (-r * r / (2.0 * lengthscale * lengthscale)).exp()
    });
    let eig = SymmetricEigen::new(k);
    let mut l = eig.eigenvectors;
    for (c, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(c).scale_mut(s);
    }
    l
}

/// One scalar GP draw on the lattice, `n × n` row-major. The 2-D RBF kernel
/// factorizes over axes, so the draw is `σ Lx Z Lyᵀ`.
pub fn sample_gp_lattice<T: Real>(
    lattice: &Lattice<T>,
    variance: T,
    lengthscale: T,
    seed: u64,
    index: u64,
) -> Vec<T> {
    let n = lattice.n;
    let axis = |a: usize| -> Vec<f64> { (0..n).map(|i| lattice.coord(a, i).to_f64_lossy()).collect() };
    let ell = lengthscale.to_f64_lossy();
    let lx = rbf_factor(&axis(0), ell);
    let ly = rbf_factor(&axis(1), ell);
    let mut rng = seed::stream(seed, tag::GP, index);
    let z = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let f = lx * z * ly.transpose();
    let scale = variance.to_f64_lossy().sqrt();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| T::lit(scale * f[(i, j)]))
        .collect()
}

/// Bilinearly interpolated 2-D vector field on a lattice, clamped outside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LatticeField<T> {
    pub lattice: Lattice<T>,
    /// `(ix, iy, component)` row-major.
    pub values: Vec<T>,
    pub lengthscale: T,
}

impl<T: Real> LatticeField<T> {
    fn node(&self, i: usize, j: usize) -> &[T] {
        let k = (i * self.lattice.n + j) * 2;
        &self.values[k..k + 2]
    }

    /// Cell index, local coordinate and whether the coordinate was clamped.
    fn locate(&self, axis: usize, x: T) -> (usize, T, bool) {
        let n = self.lattice.n;
        let top = T::from_usize_lossy(n - 1);
        let u = (x - self.lattice.lo[axis]) / (self.lattice.hi[axis] - self.lattice.lo[axis]) * top;
        let clamped = !(u > T::zero() && u < top);
        let u = u.max(T::zero()).min(top);
        let i = u.floor().to_usize().unwrap_or(0).min(n - 2);
        (i, u - T::from_usize_lossy(i), clamped)
    }

    /// RMS of `‖Δ‖` over the lattice nodes.
    pub fn rms_norm(&self) -> T {
        let nodes = self.lattice.n * self.lattice.n;
        (self.values.iter().map(|&v| v * v).sum::<T>() / T::from_usize_lossy(nodes)).sqrt()
    }

    /// Largest `‖Δ‖` over nodes; bounds `‖Δ(x)‖` everywhere since
    /// interpolation is a convex combination of nodes.
    pub fn sup_norm(&self) -> T {
        self.values
            .chunks(2)
            .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
            .fold(T::zero(), T::max)
    }

    /// Writes `x0,x1,d0,d1` per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x0,x1,d0,d1")?;
        for (p, v) in self.lattice.nodes().zip(self.values.chunks(2)) {
            writeln!(w, "{},{},{},{}", p[0], p[1], v[0], v[1])?;
        }
        Ok(())
    }
}

impl<T: Real> VectorField<T> for LatticeField<T> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[T], out: &mut [T]) {
        let (i, fx, _) = self.locate(0, x[0]);
        let (j, fy, _) = self.locate(1, x[1]);
        let (a, b, c, d) = (self.node(i, j), self.node(i + 1, j), self.node(i, j + 1), self.node(i + 1, j + 1));
        let one = T::one();
        for k in 0..2 {
            out[k] = (one - fx) * (one - fy) * a[k] + fx * (one - fy) * b[k] + (one - fx) * fy * c[k] + fx * fy * d[k];
        }
    }

    fn vjp(&self, x: &[T], cot: &[T], out: &mut [T]) {
        let (i, fx, cx) = self.locate(0, x[0]);
        let (j, fy, cy) = self.locate(1, x[1]);
        let (a, b, c, d) = (self.node(i, j), self.node(i + 1, j), self.node(i, j + 1), self.node(i + 1, j + 1));
        let one = T::one();
        let sx = if cx { T::zero() } else { T::from_usize_lossy(self.lattice.n - 1) / (self.lattice.hi[0] - self.lattice.lo[0]) };
        let sy = if cy { T::zero() } else { T::from_usize_lossy(self.lattice.n - 1) / (self.lattice.hi[1] - self.lattice.lo[1]) };
        out[0] = T::zero();
        out[1] = T::zero();
        for k in 0..2 {
            let dx = (one - fy) * (b[k] - a[k]) + fy * (d[k] - c[k]);
            let dy = (one - fx) * (c[k] - a[k]) + fx * (d[k] - b[k]);
            out[0] += cot[k] * dx * sx;
            out[1] += cot[k] * dy * sy;
        }
    }
}

/// Samples the perturbation `Δ` on `lattice` with RMS norm exactly `s`.
pub fn sample_gp_field<T: Real>(spec: &PerturbationSpec<T>, lattice: Lattice<T>) -> Result<LatticeField<T>> {
    spec.validate()?;
    let kernel = spec.kernel();
    let ell = kernel.resolve_lengthscale(spec.seed);
    let c0 = sample_gp_lattice(&lattice, kernel.variance, ell, spec.seed, 0);
    let c1 = sample_gp_lattice(&lattice, kernel.variance, ell, spec.seed, 1);
    let values = c0.iter().zip(&c1).flat_map(|(&a, &b)| [a, b]).collect();
    let mut field = LatticeField {
        lattice,
        values,
        lengthscale: ell,
    };
    let rms = field.rms_norm();
    if spec.s == T::zero() {
        field.values.iter_mut().for_each(|v| *v = T::zero());
    } else {
        if !(rms > T::zero()) {
            return Err(DaaError::DegenerateLattice("GP draw vanished on the lattice".into()));
        }
        let k = spec.s / rms;
        field.values.iter_mut().for_each(|v| *v *= k);
    }
    Ok(field)
}

/// `f + Δ`.
#[derive(Clone, Debug)]
pub struct PerturbedField<F, T> {
    pub base: F,
    pub delta: LatticeField<T>,
}

impl<T: Real, F: VectorField<T>> VectorField<T> for PerturbedField<F, T> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, x: &[T], out: &mut [T]) {
        self.base.eval(x, out);
        let mut d = [T::zero(); 2];
        self.delta.eval(x, &mut d);
        out[0] += d[0];
        out[1] += d[1];
    }

    fn vjp(&self, x: &[T], cot: &[T], out: &mut [T]) {
        self.base.vjp(x, cot, out);
        let mut d = [T::zero(); 2];
        self.delta.vjp(x, cot, &mut d);
        out[0] += d[0];
        out[1] += d[1];
    }
}

/// Adds a sampled GP field to `base` over `lattice`.
pub fn gp_field_perturbation<T: Real, F: VectorField<T>>(
    spec: &PerturbationSpec<T>,
    base: F,
    lattice: Lattice<T>,
) -> Result<PerturbedField<F, T>> {
    if base.dim() != 2 {
        return Err(DaaError::DimensionMismatch { expected: 2, got: base.dim() });
    }
    let delta = sample_gp_field(spec, lattice)?;
    Ok(PerturbedField { base, delta })
}

/// The random deformation `Φ_s`: weights `~ N(0.02, 0.5)`, field scaled by `s`.
pub fn random_diffeo_interp<T: Real>(spec: &PerturbationSpec<T>, dim: usize) -> Result<DiffeoModel<T>> {
    spec.validate()?;
    let mut field = MlpField::init_normal(dim, spec.hidden, 0.02, 0.5, spec.seed);
    field.scale_output(spec.s);
    Ok(DiffeoModel {
        seed: spec.seed,
        ..DiffeoModel::new(field, spec.flow_steps)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallInput<T> {
    pub lipschitz: T,
    pub delta_sup: T,
    pub t: T,
}

/// Pointwise deviation bound `(δ/L)(e^{Lt} - 1)`.
pub fn gronwall_bound<T: Real>(input: &GronwallInput<T>) -> T {
    let GronwallInput { lipschitz: l, delta_sup, t } = *input;
    if l == T::zero() {
        return delta_sup * t;
    }
    delta_sup / l * (l * t).exp_m1()
}

/// Horizon-level bound `δ e^{LT} / L²`, reported alongside the pointwise one.
pub fn gronwall_integrated_bound<T: Real>(input: &GronwallInput<T>) -> T {
    let GronwallInput { lipschitz: l, delta_sup, t } = *input;
    delta_sup / (l * l) * (l * t).exp()
}

/// Largest spectral norm of the central-difference Jacobian of `field` over
/// the lattice nodes.
pub fn lipschitz_estimate<T: Real, F: VectorField<T>>(field: &F, lattice: &Lattice<T>) -> T {
    let d = field.dim();
    let mut best = 0.0f64;
    let mut fp = vec![T::zero(); d];
    let mut fm = vec![T::zero(); d];
    for node in lattice.nodes() {
        let mut jac = DMatrix::<f64>::zeros(d, d);
        for c in 0..d {
            let h = T::lit(1e-5) * (T::one() + node[c].abs());
            let mut p = node.to_vec();
            let mut m = node.to_vec();
            p[c] += h;
            m[c] -= h;
            field.eval(&p, &mut fp);
            field.eval(&m, &mut fm);
            for r in 0..d {
                jac[(r, c)] = ((fp[r] - fm[r]) / (h + h)).to_f64_lossy();
            }
        }
        let s = jac.singular_values().max();
        best = best.max(s);
    }
    T::lit(best)
}
