//! Trajectory-matching loss between a target batch and an archetype seen
//! through a learned diffeomorphism, its exact gradient through the unrolled
//! integrators, Adam, and the fit driver.

use crate::archetypes::{ArchetypeParams, SystemSpec, TrainableParam};
use crate::diffeo::DiffeoModel;
use crate::error::{DaaError, Result};
use crate::field::{Rk4, Rk4Tape, VectorField};
use crate::scalar::{all_finite, Real};
use crate::seed::{self, tag};
use crate::sim::{self, Normalization, TrajectoryBatch};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

/// Adam moments and hyperparameters.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    pub fn new(n: usize, lr: T) -> Self {
        Self {
            lr,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T]) {
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Loss and gradients with respect to the flow-map weights and the
/// trainable archetype parameters (in the order they were requested).
#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad<T> {
    pub loss: T,
    pub d_theta: Vec<T>,
    pub d_beta: Vec<T>,
}

/// The loss for a fixed archetype, its trainable parameters and the
/// substeps used where the archetype has no closed-form flow.
#[derive(Clone, Debug)]
pub struct Objective<'a, T> {
    pub archetype: &'a SystemSpec<T>,
    pub trainable: &'a [TrainableParam],
    pub substeps: usize,
}

struct Work<T> {
    rk: Rk4<T>,
    inv_tape: Rk4Tape<T>,
    fwd_tapes: Vec<Rk4Tape<T>>,
    src_tape: Rk4Tape<T>,
    z0: Vec<T>,
    ys: Vec<T>,
    adj: Vec<T>,
    tmp: Vec<T>,
    offsets: Vec<usize>,
}

impl<T: Real> Work<T> {
    fn new(dim: usize, n: usize) -> Self {
        Self {
            rk: Rk4::new(dim),
            inv_tape: Rk4Tape::new(dim),
            fwd_tapes: (0..n).map(|_| Rk4Tape::new(dim)).collect(),
            src_tape: Rk4Tape::new(dim),
            z0: vec![T::zero(); dim],
            ys: vec![T::zero(); n * dim],
            adj: vec![T::zero(); n * dim],
            tmp: vec![T::zero(); dim],
            offsets: Vec::with_capacity(n + 1),
        }
    }
}

/// Upper bound on refined substeps per recorded interval.
pub const MAX_SUBSTEPS: usize = 4096;

/// Substeps for one interval starting at `x`: at least `base`, refined so
/// that `h ‖J_f(x)‖_F ≤ 1/2`. Keeps fixed-step RK4 inside its stability
/// region when the inverse map sends points far out on a stiff archetype
/// (e.g. the cubic of the bistable system).
pub fn stable_substeps<T: Real, F: VectorField<T>>(field: &F, x: &[T], dt: T, base: usize) -> usize {
    let d = x.len();
    let mut e = vec![T::zero(); d];
    let mut row = vec![T::zero(); d];
    let mut fro = T::zero();
    for k in 0..d {
        e[k] = T::one();
        field.vjp(x, &e, &mut row);
        fro += row.iter().map(|&v| v * v).sum::<T>();
        e[k] = T::zero();
    }
    let need = (T::lit(2.0) * dt * fro.sqrt()).ceil();
    let need = if need.is_finite() { need.to_usize().unwrap_or(MAX_SUBSTEPS) } else { MAX_SUBSTEPS };
    need.clamp(base, MAX_SUBSTEPS.max(base))
}

fn non_finite<T>(_: T) -> DaaError {
    DaaError::NonFiniteLoss { epoch: None }
}

impl<T: Real> Objective<'_, T> {
    fn check(&self, model: &DiffeoModel<T>, batch: &TrajectoryBatch<T>) -> Result<()> {
        let d = batch.dim();
        if model.dim() != d || self.archetype.dim != d {
            return Err(DaaError::DimensionMismatch {
                expected: d,
                got: if model.dim() != d { model.dim() } else { self.archetype.dim },
            });
        }
        if batch.n_traj() == 0 {
            return Err(DaaError::EmptyPointSet);
        }
        self.archetype.field()?;
        if !self.archetype.has_closed_form() && self.substeps == 0 {
            return Err(DaaError::InvalidConfig("substeps must be at least 1".into()));
        }
        Ok(())
    }

    /// Loss of one trajectory, `(1/n) Σ_i ‖x_i - y_i‖²`; with `grad`,
    /// accumulates `scale ·` its gradient.
    fn trajectory(
        &self,
        model: &DiffeoModel<T>,
        traj: &[T],
        dt: T,
        w: &mut Work<T>,
        grad: Option<(T, &mut [T], &mut [T])>,
    ) -> Result<T> {
        let d = model.dim();
        let n = traj.len() / d - 1;
        if n == 0 {
            return Ok(T::zero());
        }
        let spec = self.archetype;
        let analytic = spec.has_closed_form();
        let field = spec.field()?;
        w.z0.copy_from_slice(&traj[..d]);
        model.flow_recorded(&mut w.z0, true, &mut w.rk, &mut w.inv_tape);

        // archetype states at t_i, i = 1..n
        if analytic {
            for i in 0..n {
                let t = dt * T::from_usize_lossy(i + 1);
                spec.analytic_flow_into(&w.z0, t, &mut w.ys[i * d..(i + 1) * d]).map_err(non_finite)?;
            }
        } else {
            w.src_tape.clear();
            w.tmp.copy_from_slice(&w.z0);
            w.offsets.clear();
            w.offsets.push(0);
            for i in 0..n {
                let m = stable_substeps(&field, &w.tmp, dt, self.substeps);
                let h = dt / T::from_usize_lossy(m);
                for _ in 0..m {
                    w.rk.step_recorded(&field, &mut w.tmp, h, &mut w.src_tape);
                }
                w.offsets.push(w.src_tape.len());
                w.ys[i * d..(i + 1) * d].copy_from_slice(&w.tmp);
            }
        }

        let nn = T::from_usize_lossy(n);
        let mut loss = T::zero();
        for i in 0..n {
            let y = &mut w.ys[i * d..(i + 1) * d];
            model.flow_recorded(y, false, &mut w.rk, &mut w.fwd_tapes[i]);
            let x = &traj[(i + 1) * d..(i + 2) * d];
            for k in 0..d {
                let r = x[k] - y[k];
                loss += r * r;
                w.adj[i * d + k] = r;
            }
        }
        let loss = loss / nn;
        if !loss.is_finite() {
            return Err(DaaError::NonFiniteLoss { epoch: None });
        }

        let Some((scale, d_theta, d_beta)) = grad else {
            return Ok(loss);
        };
        let c = -T::lit(2.0) * scale / nn;
        for i in 0..n {
            let a = &mut w.adj[i * d..(i + 1) * d];
            a.iter_mut().for_each(|v| *v *= c);
            model.backprop(&w.fwd_tapes[i], a, d_theta);
        }
        // w.adj now holds the adjoints of the archetype states
        let mut z_adj = vec![T::zero(); d];
        if analytic {
            for i in 0..n {
                let t = dt * T::from_usize_lossy(i + 1);
                let (da, dv) = spec
                    .analytic_flow_vjp(&w.z0, t, &w.adj[i * d..(i + 1) * d], &mut z_adj)
                    .map_err(non_finite)?;
                for (g, p) in d_beta.iter_mut().zip(self.trainable) {
                    *g += match p {
                        TrainableParam::Alpha => da,
                        TrainableParam::Velocity => dv,
                    };
                }
            }
        } else {
            let trainable = self.trainable;
            for i in (0..n).rev() {
                for k in 0..d {
                    z_adj[k] += w.adj[i * d + k];
                }
                w.src_tape.backward_steps(w.offsets[i]..w.offsets[i + 1], &mut z_adj, |z, cot, out| {
                    field.vjp(z, cot, out);
                    for (g, &p) in d_beta.iter_mut().zip(trainable) {
                        *g += spec.param_vjp(z, cot, p);
                    }
                });
            }
        }
        model.backprop(&w.inv_tape, &mut z_adj, d_theta);
        Ok(loss)
    }

    fn run(&self, model: &DiffeoModel<T>, batch: &TrajectoryBatch<T>, want_grad: bool) -> Result<LossGrad<T>> {
        self.check(model, batch)?;
        let (d, n) = (batch.dim(), batch.n_intervals());
        let n_theta = model.field.params().len();
        let n_beta = self.trainable.len();
        let b = batch.n_traj();
        let scale = T::one() / T::from_usize_lossy(b);
        let parts = (0..b)
            .into_par_iter()
            .map_init(
                || Work::new(d, n),
                |w, j| {
                    let mut gt = vec![T::zero(); if want_grad { n_theta } else { 0 }];
                    let mut gb = vec![T::zero(); if want_grad { n_beta } else { 0 }];
                    let grad = want_grad.then_some((scale, gt.as_mut_slice(), gb.as_mut_slice()));
                    let l = self.trajectory(model, batch.traj(j), batch.dt, w, grad)?;
                    Ok((l, gt, gb))
                },
            )
            .collect::<Result<Vec<_>>>()?;
        let mut out = LossGrad {
            loss: T::zero(),
            d_theta: vec![T::zero(); if want_grad { n_theta } else { 0 }],
            d_beta: vec![T::zero(); if want_grad { n_beta } else { 0 }],
        };
        for (l, gt, gb) in parts {
            out.loss += l;
            for (a, b) in out.d_theta.iter_mut().zip(&gt) {
                *a += *b;
            }
            for (a, b) in out.d_beta.iter_mut().zip(&gb) {
                *a += *b;
            }
        }
        out.loss *= scale;
        if !out.loss.is_finite() || !all_finite(&out.d_theta) || !all_finite(&out.d_beta) {
            return Err(DaaError::NonFiniteLoss { epoch: None });
        }
        Ok(out)
    }

    pub fn loss(&self, model: &DiffeoModel<T>, batch: &TrajectoryBatch<T>) -> Result<T> {
        Ok(self.run(model, batch, false)?.loss)
    }

    pub fn loss_and_grad(&self, model: &DiffeoModel<T>, batch: &TrajectoryBatch<T>) -> Result<LossGrad<T>> {
        self.run(model, batch, true)
    }
}

fn with_beta<T: Real>(archetype: &SystemSpec<T>, beta: &ArchetypeParams<T>) -> SystemSpec<T> {
    archetype.clone().with_params(beta.clone())
}

/// Mean over trajectories and `i = 1..n` of `‖x_i - Φ(φ^{iΔt}(Φ⁻¹(x_0); β))‖²`.
pub fn trajectory_loss<T: Real>(
    model: &DiffeoModel<T>,
    archetype: &SystemSpec<T>,
    beta: &ArchetypeParams<T>,
    batch: &TrajectoryBatch<T>,
) -> Result<T> {
    let spec = with_beta(archetype, beta);
    Objective {
        archetype: &spec,
        trainable: &[],
        substeps: FitConfig::<T>::default().substeps,
    }
    .loss(model, batch)
}

/// Gradient of [`trajectory_loss`] with respect to the model weights and the
/// listed archetype parameters.
pub fn grad_loss<T: Real>(
    model: &DiffeoModel<T>,
    archetype: &SystemSpec<T>,
    beta: &ArchetypeParams<T>,
    batch: &TrajectoryBatch<T>,
    trainable: &[TrainableParam],
) -> Result<(Vec<T>, Vec<T>)> {
    let spec = with_beta(archetype, beta);
    let g = Objective {
        archetype: &spec,
        trainable,
        substeps: FitConfig::<T>::default().substeps,
    }
    .loss_and_grad(model, batch)?;
    Ok((g.d_theta, g.d_beta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct FitConfig<T> {
    pub lr: T,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learn_beta: bool,
    /// Archetype parameters optimized when `learn_beta` is set; entries the
    /// archetype does not have are skipped.
    pub trainable: Vec<TrainableParam>,
    pub hidden: usize,
    pub flow_steps: usize,
    /// RK4 substeps per interval for archetypes without a closed-form flow.
    pub substeps: usize,
    pub train_fraction: f64,
    /// Before training, replace a trainable velocity by the best point of
    /// [`VELOCITY_GRID`] (or `beta0`) under the initial model.
    pub scan_velocity: bool,
}

/// Candidate angular velocities for the initial scan: `±0.1k`, `k = 1..=30`.
pub fn velocity_grid<T: Real>() -> Vec<T> {
    (1..=30)
        .flat_map(|k| {
            let v = T::lit(0.1) * T::from_usize_lossy(k);
            [-v, v]
        })
        .collect()
}

impl<T: Real> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            lr: T::lit(0.01),
            epochs: 200,
            batch_size: 32,
            seed: 0,
            learn_beta: true,
            trainable: vec![TrainableParam::Velocity],
            hidden: 64,
            flow_steps: 10,
            substeps: 5,
            train_fraction: 0.8,
            scan_velocity: true,
        }
    }
}

impl<T: Real> FitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > T::zero()) || !self.lr.is_finite() {
            return Err(DaaError::InvalidConfig("lr must be positive".into()));
        }
        if self.batch_size == 0 || self.hidden == 0 || self.flow_steps == 0 || self.substeps == 0 {
            return Err(DaaError::InvalidConfig(
                "batch_size, hidden, flow_steps and substeps must be positive".into(),
            ));
        }
        Ok(())
    }

    fn active_trainable(&self, archetype: &SystemSpec<T>) -> Vec<TrainableParam> {
        if !self.learn_beta {
            return Vec::new();
        }
        let mut out: Vec<TrainableParam> = Vec::new();
        for &p in &self.trainable {
            if archetype.supports_trainable(p) && !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FitResult<T> {
    #[serde(default)]
    pub archetype_name: String,
    #[serde(default)]
    pub target_name: String,
    /// The archetype with `beta_star` in place.
    pub archetype: SystemSpec<T>,
    pub beta_star: ArchetypeParams<T>,
    /// Test MSE: the reported dissimilarity.
    pub test_mse: T,
    pub train_mse: T,
    /// Mean `‖J_Φ - I‖_F` over every normalized target point.
    pub complexity: T,
    pub loss_curve: Vec<T>,
    /// Seconds; left out of the serialized artifact so that it stays byte-reproducible.
    #[serde(skip)]
    pub wall_time: f64,
    pub normalization: Normalization<T>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub config: FitConfig<T>,
    pub model: DiffeoModel<T>,
}

impl<T: Real> FitResult<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Writes `epoch,loss` rows.
    pub fn write_loss_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,loss")?;
        for (e, l) in self.loss_curve.iter().enumerate() {
            writeln!(w, "{e},{:.16e}", l.to_f64_lossy())?;
        }
        Ok(())
    }
}

/// Fits `Φ` (and the trainable `β`) so that the archetype's flow, carried
/// through `Φ`, reproduces `target`.
fn scan_velocity<T: Real>(spec: &SystemSpec<T>, model: &DiffeoModel<T>, train: &TrajectoryBatch<T>, substeps: usize) -> Result<T> {
    let mut trial = spec.clone();
    let v0 = spec.params.get(TrainableParam::Velocity);
    let obj = |s: &SystemSpec<T>| Objective { archetype: s, trainable: &[], substeps }.loss(model, train);
    let (mut best, mut best_loss) = (v0, obj(spec)?);
    for v in velocity_grid::<T>() {
        trial.params.set(TrainableParam::Velocity, v);
        let l = obj(&trial)?;
        if l < best_loss {
            (best, best_loss) = (v, l);
        }
    }
    Ok(best)
}

pub fn fit<T: Real>(
    archetype: &SystemSpec<T>,
    beta0: &ArchetypeParams<T>,
    target: &TrajectoryBatch<T>,
    cfg: &FitConfig<T>,
) -> Result<FitResult<T>> {
    let started = Instant::now();
    cfg.validate()?;
    if target.n_traj() < 2 {
        return Err(DaaError::InvalidConfig("fitting needs at least two trajectories".into()));
    }
    let mut spec = with_beta(archetype, beta0);
    spec.validate()?;
    if spec.dim != target.dim() {
        return Err(DaaError::DimensionMismatch {
            expected: target.dim(),
            got: spec.dim,
        });
    }
    let (normed, _, _) = sim::normalize(target)?;
    let normalization = normed.normalization.clone().expect("set by normalize");
    let (train_idx, test_idx) = sim::split_indices(normed.n_traj(), cfg.train_fraction, seed::derive_seed(cfg.seed, tag::SPLIT, 0))?;
    let train = normed.select(&train_idx);
    let test = normed.select(&test_idx);
    if cfg.batch_size > train.n_traj() {
        return Err(DaaError::InvalidConfig(format!(
            "batch_size {} exceeds {} training trajectories",
            cfg.batch_size,
            train.n_traj()
        )));
    }

    let trainable = cfg.active_trainable(&spec);
    let mut model = DiffeoModel::init(target.dim(), cfg.hidden, cfg.flow_steps, cfg.seed);
    if cfg.scan_velocity && cfg.epochs > 0 && trainable.contains(&TrainableParam::Velocity) {
        let v = scan_velocity(&spec, &model, &train, cfg.substeps)?;
        spec.params.set(TrainableParam::Velocity, v);
    }
    let mut beta: Vec<T> = trainable.iter().map(|&p| spec.params.get(p)).collect();
    let mut adam_theta = Adam::new(model.field.params().len(), cfg.lr);
    let mut adam_beta = Adam::new(beta.len(), cfg.lr);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.n_traj()).collect();

    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::stream(cfg.seed, tag::EPOCH, epoch as u64));
        let mut total = T::zero();
        for chunk in order.chunks(cfg.batch_size) {
            let mb = train.select(chunk);
            let g = Objective {
                archetype: &spec,
                trainable: &trainable,
                substeps: cfg.substeps,
            }
            .loss_and_grad(&model, &mb)
            .map_err(|e| match e {
                DaaError::NonFiniteLoss { .. } | DaaError::NonFiniteState { .. } => {
                    DaaError::NonFiniteLoss { epoch: Some(epoch) }
                }
                other => other,
            })?;
            total += g.loss * T::from_usize_lossy(chunk.len());
            adam_theta.step(model.field.params_mut(), &g.d_theta);
            adam_beta.step(&mut beta, &g.d_beta);
            for (&p, &v) in trainable.iter().zip(&beta) {
                spec.params.set(p, v);
            }
        }
        loss_curve.push(total / T::from_usize_lossy(train.n_traj()));
    }

    let obj = Objective {
        archetype: &spec,
        trainable: &[],
        substeps: cfg.substeps,
    };
    let at_end = |e: DaaError| match e {
        DaaError::NonFiniteLoss { .. } => DaaError::NonFiniteLoss { epoch: Some(cfg.epochs) },
        other => other,
    };
    let train_mse = obj.loss(&model, &train).map_err(at_end)?;
    let test_mse = obj.loss(&model, &test).map_err(at_end)?;
    let complexity = model.complexity(normed.points()).map_err(at_end)?.mean;
    Ok(FitResult {
        archetype_name: String::new(),
        target_name: String::new(),
        beta_star: spec.params.clone(),
        archetype: spec,
        test_mse,
        train_mse,
        complexity,
        loss_curve,
        wall_time: started.elapsed().as_secs_f64(),
        normalization,
        train_indices: train_idx,
        test_indices: test_idx,
        config: cfg.clone(),
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, InitRegion, SimConfig};

    fn lc_batch(v: f64) -> TrajectoryBatch<f64> {
        let spec = SystemSpec::limit_cycle(2).with_velocity(v);
        let cfg = SimConfig::new(0.2, 2.0, 6, 3).with_substeps(10);
        simulate(&spec.field().unwrap(), 0.0, &InitRegion::annulus(0.5, 1.5), &cfg).unwrap()
    }

    #[test]
    fn identity_on_own_data_is_zero() {
        let spec = SystemSpec::<f64>::ring_attractor(2);
        let cfg = SimConfig::new(0.2, 2.0, 5, 1).with_substeps(50);
        let batch = simulate(&spec.field().unwrap(), 0.0, &InitRegion::annulus(0.5, 1.5), &cfg).unwrap();
        let id = DiffeoModel::identity(2, 8);
        let l = trajectory_loss(&id, &spec, &spec.params, &batch).unwrap();
        assert!(l <= 1e-10, "{l}");
        let (gt, _) = grad_loss(&id, &spec, &spec.params, &batch, &[]).unwrap();
        assert!(gt.iter().map(|g| g * g).sum::<f64>().sqrt() <= 1e-6);
    }

    #[test]
    fn velocity_mismatch_is_positive_and_gradient_points_home() {
        let batch = lc_batch(-1.0);
        let id = DiffeoModel::identity(2, 8);
        let spec = SystemSpec::<f64>::limit_cycle(2);
        let off = spec.clone().with_velocity(-0.5);
        let l = trajectory_loss(&id, &off, &off.params, &batch).unwrap();
        assert!(l > 1e-3);
        let (_, gb) = grad_loss(&id, &off, &off.params, &batch, &[TrainableParam::Velocity]).unwrap();
        // loss decreases as v moves towards -1
        assert!(gb[0] > 0.0, "{gb:?}");
        let scan = |v: f64| {
            let s = spec.clone().with_velocity(v);
            trajectory_loss(&id, &s, &s.params, &batch).unwrap()
        };
        assert!(scan(-0.6) < scan(-0.5) && scan(-1.0) < scan(-0.9));
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut a = Adam::new(2, 0.01);
        let mut p = [1.0f64, -1.0];
        a.step(&mut p, &[3.0, -0.2]);
        assert!((p[0] - 0.99).abs() < 1e-9 && (p[1] + 0.99).abs() < 1e-9);
    }

    #[test]
    fn zero_epochs_evaluates_initialization() {
        let batch = lc_batch(-1.0);
        let spec = SystemSpec::<f64>::limit_cycle(2);
        let cfg = FitConfig {
            epochs: 0,
            batch_size: 2,
            hidden: 8,
            ..Default::default()
        };
        let r = fit(&spec, &spec.params, &batch, &cfg).unwrap();
        assert!(r.loss_curve.is_empty());
        assert_eq!(r.model, DiffeoModel::init(2, 8, 10, 0));
        assert_eq!(r.beta_star, spec.params);
    }

    #[test]
    fn batch_size_must_fit() {
        let batch = lc_batch(-1.0);
        let spec = SystemSpec::<f64>::limit_cycle(2);
        let cfg = FitConfig::<f64>::default();
        assert!(matches!(fit(&spec, &spec.params, &batch, &cfg), Err(DaaError::InvalidConfig(_))));
    }
}
