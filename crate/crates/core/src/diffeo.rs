//! Learnable diffeomorphism: the time-1 flow of a one-hidden-layer ReLU MLP
//! vector field, integrated with `flow_steps` RK4 steps. The inverse runs the
//! same partition backwards in time.
//!
//! Checkpoint layout (JSON): `{"dim", "hidden", "flow_steps", "seed",
//! "weights"}` where `weights` concatenates, row-major, `W1 (hidden × dim)`,
//! `b1 (hidden)`, `W2 (dim × hidden)` and `b2 (dim)`.

use crate::error::{DaaError, Result};
use crate::field::{Rk4, Rk4Tape, VectorField};
use crate::scalar::{all_finite, Real};
use crate::seed::{self, tag};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// `f(x) = W2 relu(W1 x + b1) + b2`. The ReLU subgradient at 0 is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MlpField<T> {
    pub dim: usize,
    pub hidden: usize,
    weights: Vec<T>,
}

impl<T: Real> MlpField<T> {
    pub fn n_params_for(dim: usize, hidden: usize) -> usize {
        2 * dim * hidden + hidden + dim
    }

    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Self {
            dim,
            hidden,
            weights: vec![T::zero(); Self::n_params_for(dim, hidden)],
        }
    }

    pub fn from_weights(dim: usize, hidden: usize, weights: Vec<T>) -> Result<Self> {
        if weights.len() != Self::n_params_for(dim, hidden) {
            return Err(DaaError::DimensionMismatch {
                expected: Self::n_params_for(dim, hidden),
                got: weights.len(),
            });
        }
        if !all_finite(&weights) {
            return Err(DaaError::InvalidConfig("weights must be finite".into()));
        }
        Ok(Self { dim, hidden, weights })
    }

    /// Weights `~ N(0, 1/sqrt(fan_in))` (standard deviation), biases zero.
    pub fn init_scaled(dim: usize, hidden: usize, seed: u64) -> Self {
        let mut f = Self::zeros(dim, hidden);
        let mut rng = seed::stream(seed, tag::INIT_WEIGHTS, 0);
        let (s1, s2) = (1.0 / (dim as f64).sqrt(), 1.0 / (hidden as f64).sqrt());
        let (w1, _, w2, _) = f.split_mut();
        for w in w1.iter_mut() {
            *w = T::lit(s1 * rng.sample::<f64, _>(StandardNormal));
        }
        for w in w2.iter_mut() {
            *w = T::lit(s2 * rng.sample::<f64, _>(StandardNormal));
        }
        f
    }

    /// Every parameter, biases included, `~ N(mean, std)`.
    pub fn init_normal(dim: usize, hidden: usize, mean: f64, std: f64, seed: u64) -> Self {
        let mut f = Self::zeros(dim, hidden);
        let mut rng = seed::stream(seed, tag::INIT_WEIGHTS, 1);
        for w in f.weights.iter_mut() {
            *w = T::lit(mean + std * rng.sample::<f64, _>(StandardNormal));
        }
        f
    }

    pub fn params(&self) -> &[T] {
        &self.weights
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    /// Multiplies the field by `s` (scales the output layer).
    pub fn scale_output(&mut self, s: T) {
        let (_, _, w2, b2) = self.split_mut();
        w2.iter_mut().chain(b2.iter_mut()).for_each(|w| *w *= s);
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let (d, h) = (self.dim, self.hidden);
        (h * d, h * d + h, 2 * h * d + h)
    }

    fn split(&self) -> (&[T], &[T], &[T], &[T]) {
        let (o1, o2, o3) = self.offsets();
        let (w1, rest) = self.weights.split_at(o1);
        let (b1, rest) = rest.split_at(o2 - o1);
        let (w2, b2) = rest.split_at(o3 - o2);
        (w1, b1, w2, b2)
    }

    fn split_mut(&mut self) -> (&mut [T], &mut [T], &mut [T], &mut [T]) {
        let (o1, o2, o3) = self.offsets();
        let (w1, rest) = self.weights.split_at_mut(o1);
        let (b1, rest) = rest.split_at_mut(o2 - o1);
        let (w2, b2) = rest.split_at_mut(o3 - o2);
        (w1, b1, w2, b2)
    }

    /// `J_f(x)^T cot` into `x_adj`, adding parameter gradients into `grad`
    /// (same layout as [`MlpField::params`]).
    pub fn vjp_accumulate(&self, x: &[T], cot: &[T], x_adj: &mut [T], grad: &mut [T]) {
        let (d, h) = (self.dim, self.hidden);
        let (w1, b1, w2, _) = self.split();
        let (o1, o2, o3) = self.offsets();
        let (g_w1, rest) = grad.split_at_mut(o1);
        let (g_b1, rest) = rest.split_at_mut(o2 - o1);
        let (g_w2, g_b2) = rest.split_at_mut(o3 - o2);
        x_adj.iter_mut().for_each(|v| *v = T::zero());
        for k in 0..d {
            g_b2[k] += cot[k];
        }
        for j in 0..h {
            let row = &w1[j * d..(j + 1) * d];
            let mut a = b1[j];
            for i in 0..d {
                a += row[i] * x[i];
            }
            if a > T::zero() {
                let mut g = T::zero();
                for k in 0..d {
                    g += w2[k * h + j] * cot[k];
                    g_w2[k * h + j] += cot[k] * a;
                }
                g_b1[j] += g;
                let g_row = &mut g_w1[j * d..(j + 1) * d];
                for i in 0..d {
                    g_row[i] += g * x[i];
                    x_adj[i] += row[i] * g;
                }
            }
        }
    }

    /// Jacobian–vector product `J_f(x) tangent`.
    pub fn jvp(&self, x: &[T], tangent: &[T], out: &mut [T]) {
        let (d, h) = (self.dim, self.hidden);
        let (w1, b1, w2, _) = self.split();
        out.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..h {
            let row = &w1[j * d..(j + 1) * d];
            let mut a = b1[j];
            let mut da = T::zero();
            for i in 0..d {
                a += row[i] * x[i];
                da += row[i] * tangent[i];
            }
            if a > T::zero() {
                for k in 0..d {
                    out[k] += w2[k * h + j] * da;
                }
            }
        }
    }
}

impl<T: Real> VectorField<T> for MlpField<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[T], out: &mut [T]) {
        let (d, h) = (self.dim, self.hidden);
        let (w1, b1, w2, b2) = self.split();
        out.copy_from_slice(b2);
        for j in 0..h {
            let row = &w1[j * d..(j + 1) * d];
            let mut a = b1[j];
            for i in 0..d {
                a += row[i] * x[i];
            }
            if a > T::zero() {
                for k in 0..d {
                    out[k] += w2[k * h + j] * a;
                }
            }
        }
    }

    fn vjp(&self, x: &[T], cot: &[T], out: &mut [T]) {
        let (d, h) = (self.dim, self.hidden);
        let (w1, b1, w2, _) = self.split();
        out.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..h {
            let row = &w1[j * d..(j + 1) * d];
            let mut a = b1[j];
            for i in 0..d {
                a += row[i] * x[i];
            }
            if a > T::zero() {
                let g: T = (0..d).map(|k| w2[k * h + j] * cot[k]).sum();
                for i in 0..d {
                    out[i] += row[i] * g;
                }
            }
        }
    }
}

/// Invertible map `Φ_θ` realized as the time-1 flow of an [`MlpField`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DiffeoModel<T> {
    #[serde(flatten)]
    pub field: MlpField<T>,
    pub flow_steps: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Per-point `‖J_Φ(x) - I‖_F` and their arithmetic mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport<T> {
    pub per_point: Vec<T>,
    pub mean: T,
    pub norm_kind: NormKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    Frobenius,
}

impl<T: Real> DiffeoModel<T> {
    pub const DEFAULT_FLOW_STEPS: usize = 10;

    pub fn new(field: MlpField<T>, flow_steps: usize) -> Self {
        Self {
            field,
            flow_steps: flow_steps.max(1),
            seed: 0,
        }
    }

    /// The identity map (zero field).
    pub fn identity(dim: usize, hidden: usize) -> Self {
        Self::new(MlpField::zeros(dim, hidden), Self::DEFAULT_FLOW_STEPS)
    }

    /// Freshly initialized model, see [`MlpField::init_scaled`].
    pub fn init(dim: usize, hidden: usize, flow_steps: usize, seed: u64) -> Self {
        Self {
            seed,
            ..Self::new(MlpField::init_scaled(dim, hidden, seed), flow_steps)
        }
    }

    pub fn dim(&self) -> usize {
        self.field.dim
    }

    fn step(&self) -> T {
        T::one() / T::from_usize_lossy(self.flow_steps)
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(DaaError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn flow(&self, x: &[T], h: T) -> Result<Vec<T>> {
        self.check(x)?;
        let mut y = x.to_vec();
        let mut rk = Rk4::new(self.dim());
        for _ in 0..self.flow_steps {
            rk.step(&self.field, &mut y, h);
        }
        if !all_finite(&y) {
            return Err(DaaError::NonFiniteState { step: self.flow_steps });
        }
        Ok(y)
    }

    /// `Φ(x)`: integrate the field over `t ∈ [0, 1]`.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.flow(x, self.step())
    }

    /// `Φ⁻¹(y)`: integrate over `t ∈ [1, 0]` on the same partition.
    pub fn inverse(&self, y: &[T]) -> Result<Vec<T>> {
        self.flow(y, -self.step())
    }

    /// In-place forward (`reverse = false`) or inverse flow recording every stage.
    pub fn flow_recorded(&self, x: &mut [T], reverse: bool, rk: &mut Rk4<T>, tape: &mut Rk4Tape<T>) {
        let h = if reverse { -self.step() } else { self.step() };
        tape.clear();
        for _ in 0..self.flow_steps {
            rk.step_recorded(&self.field, x, h, tape);
        }
    }

    /// Pulls `adj` (adjoint of the output) back through a recorded flow,
    /// accumulating parameter gradients into `grad`.
    pub fn backprop(&self, tape: &Rk4Tape<T>, adj: &mut [T], grad: &mut [T]) {
        tape.backward(adj, |z, cot, out| self.field.vjp_accumulate(z, cot, out, grad));
    }

    /// `∂Φ/∂x` (row-major `d × d`) by forward-mode tangent propagation
    /// through the RK4 steps.
    pub fn jacobian(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x)?;
        let d = self.dim();
        let h = self.step();
        let half = h * T::lit(0.5);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        let mut state = x.to_vec();
        // tangents[c] = ∂state/∂x_c
        let mut tangents: Vec<Vec<T>> = (0..d)
            .map(|c| (0..d).map(|i| if i == c { T::one() } else { T::zero() }).collect())
            .collect();
        let f = &self.field;
        let mut k = vec![vec![T::zero(); d]; 4];
        let mut dk = vec![vec![vec![T::zero(); d]; 4]; d];
        let mut z = vec![T::zero(); d];
        let mut dz = vec![T::zero(); d];
        for _ in 0..self.flow_steps {
            for stage in 0..4 {
                let coef = match stage {
                    0 => T::zero(),
                    3 => h,
                    _ => half,
                };
                for i in 0..d {
                    z[i] = if stage == 0 { state[i] } else { state[i] + coef * k[stage - 1][i] };
                }
                f.eval(&z, &mut k[stage]);
                for c in 0..d {
                    for i in 0..d {
                        dz[i] = if stage == 0 {
                            tangents[c][i]
                        } else {
                            tangents[c][i] + coef * dk[c][stage - 1][i]
                        };
                    }
                    let (head, tail) = dk[c].split_at_mut(stage);
                    let _ = head;
                    f.jvp(&z, &dz, &mut tail[0]);
                }
            }
            for i in 0..d {
                state[i] += sixth * (k[0][i] + two * k[1][i] + two * k[2][i] + k[3][i]);
            }
            for c in 0..d {
                for i in 0..d {
                    tangents[c][i] +=
                        sixth * (dk[c][0][i] + two * dk[c][1][i] + two * dk[c][2][i] + dk[c][3][i]);
                }
            }
        }
        let mut jac = vec![T::zero(); d * d];
        for (c, t) in tangents.iter().enumerate() {
            for i in 0..d {
                jac[i * d + c] = t[i];
            }
        }
        if !all_finite(&jac) {
            return Err(DaaError::NonFiniteState { step: self.flow_steps });
        }
        Ok(jac)
    }

    /// Mean over `points` of `‖J_Φ(x) - I‖_F`.
    pub fn complexity<'a, I>(&self, points: I) -> Result<ComplexityReport<T>>
    where
        I: IntoIterator<Item = &'a [T]>,
    {
        let d = self.dim();
        let per_point = points
            .into_iter()
            .map(|p| {
                let j = self.jacobian(p)?;
                let sq: T = (0..d * d)
                    .map(|ix| {
                        let e = if ix / d == ix % d { j[ix] - T::one() } else { j[ix] };
                        e * e
                    })
                    .sum();
                Ok(sq.sqrt())
            })
            .collect::<Result<Vec<T>>>()?;
        if per_point.is_empty() {
            return Err(DaaError::EmptyPointSet);
        }
        let mean = per_point.iter().copied().sum::<T>() / T::from_usize_lossy(per_point.len());
        Ok(ComplexityReport {
            per_point,
            mean,
            norm_kind: NormKind::Frobenius,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        MlpField::from_weights(m.field.dim, m.field.hidden, m.field.weights.clone())?;
        if m.flow_steps == 0 {
            return Err(DaaError::InvalidConfig("flow_steps must be at least 1".into()));
        }
        Ok(m)
    }
}

pub fn forward<T: Real>(model: &DiffeoModel<T>, x: &[T]) -> Result<Vec<T>> {
    model.forward(x)
}

pub fn inverse<T: Real>(model: &DiffeoModel<T>, y: &[T]) -> Result<Vec<T>> {
    model.inverse(y)
}

pub fn jacobian<T: Real>(model: &DiffeoModel<T>, x: &[T]) -> Result<Vec<T>> {
    model.jacobian(x)
}

pub fn complexity<T: Real>(model: &DiffeoModel<T>, points: &[Vec<T>]) -> Result<ComplexityReport<T>> {
    model.complexity(points.iter().map(Vec::as_slice))
}
