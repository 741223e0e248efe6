//! Vector fields and the classical fourth-order Runge–Kutta step, with a
//! recording variant whose tape supports exact reverse-mode differentiation.

use crate::scalar::Real;

/// An autonomous vector field `x ↦ f(x)` on `R^d`.
pub trait VectorField<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// Writes `f(x)` into `out`.
    fn eval(&self, x: &[T], out: &mut [T]);

    /// Writes the vector–Jacobian product `J_f(x)^T cot` into `out`.
    fn vjp(&self, x: &[T], cot: &[T], out: &mut [T]);
}

impl<T: Real, F: VectorField<T> + ?Sized> VectorField<T> for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[T], out: &mut [T]) {
        (**self).eval(x, out)
    }
    fn vjp(&self, x: &[T], cot: &[T], out: &mut [T]) {
        (**self).vjp(x, cot, out)
    }
}

/// Field given by a closure; its VJP is unavailable and panics.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T: Real, F: Fn(&[T], &mut [T]) + Sync> VectorField<T> for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[T], out: &mut [T]) {
        (self.f)(x, out)
    }
    fn vjp(&self, _x: &[T], _cot: &[T], _out: &mut [T]) {
        unimplemented!("closure fields carry no derivative")
    }
}

/// Scratch buffers for one RK4 step.
#[derive(Clone, Debug)]
pub struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    z: Vec<T>,
}

impl<T: Real> Rk4<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![T::zero(); dim],
            k2: vec![T::zero(); dim],
            k3: vec![T::zero(); dim],
            k4: vec![T::zero(); dim],
            z: vec![T::zero(); dim],
        }
    }

    /// Advances `x` in place by one step of size `h` (negative `h` runs time backwards).
    pub fn step<F: VectorField<T> + ?Sized>(&mut self, field: &F, x: &mut [T], h: T) {
        self.step_inner(field, x, h, None);
    }

    /// As [`Rk4::step`], appending the four stage inputs to `tape`.
    pub fn step_recorded<F: VectorField<T> + ?Sized>(
        &mut self,
        field: &F,
        x: &mut [T],
        h: T,
        tape: &mut Rk4Tape<T>,
    ) {
        self.step_inner(field, x, h, Some(tape));
    }

    fn step_inner<F: VectorField<T> + ?Sized>(
        &mut self,
        field: &F,
        x: &mut [T],
        h: T,
        mut tape: Option<&mut Rk4Tape<T>>,
    ) {
        let half = h * T::lit(0.5);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        if let Some(t) = tape.as_deref_mut() {
            t.stages.extend_from_slice(x);
        }
        field.eval(x, &mut self.k1);
        for ((z, &xi), &k) in self.z.iter_mut().zip(x.iter()).zip(&self.k1) {
            *z = xi + half * k;
        }
        if let Some(t) = tape.as_deref_mut() {
            t.stages.extend_from_slice(&self.z);
        }
        field.eval(&self.z, &mut self.k2);
        for ((z, &xi), &k) in self.z.iter_mut().zip(x.iter()).zip(&self.k2) {
            *z = xi + half * k;
        }
        if let Some(t) = tape.as_deref_mut() {
            t.stages.extend_from_slice(&self.z);
        }
        field.eval(&self.z, &mut self.k3);
        for ((z, &xi), &k) in self.z.iter_mut().zip(x.iter()).zip(&self.k3) {
            *z = xi + h * k;
        }
        if let Some(t) = tape.as_deref_mut() {
            t.stages.extend_from_slice(&self.z);
            t.steps.push(h);
        }
        field.eval(&self.z, &mut self.k4);
        for i in 0..x.len() {
            x[i] += sixth * (self.k1[i] + two * self.k2[i] + two * self.k3[i] + self.k4[i]);
        }
    }
}

/// Stage inputs of a sequence of recorded RK4 steps.
#[derive(Clone, Debug, Default)]
pub struct Rk4Tape<T> {
    dim: usize,
    stages: Vec<T>,
    steps: Vec<T>,
}

impl<T: Real> Rk4Tape<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            stages: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn clear(&mut self) {
        self.stages.clear();
        self.steps.clear();
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Pulls the adjoint `adj` of the final state back through every recorded
    /// step, leaving the adjoint of the initial state in `adj`.
    ///
    /// `vjp(z, cot, out)` must write `J_f(z)^T cot` into `out`; it is called once
    /// per stage, so a parameterized field can accumulate parameter gradients
    /// from the same call.
    pub fn backward(&self, adj: &mut [T], vjp: impl FnMut(&[T], &[T], &mut [T])) {
        self.backward_steps(0..self.len(), adj, vjp)
    }

    /// As [`Rk4Tape::backward`] restricted to the recorded steps in `steps`.
    pub fn backward_steps(
        &self,
        steps: std::ops::Range<usize>,
        adj: &mut [T],
        mut vjp: impl FnMut(&[T], &[T], &mut [T]),
    ) {
        let d = self.dim;
        let mut kb = [vec![T::zero(); d], vec![T::zero(); d], vec![T::zero(); d], vec![T::zero(); d]];
        let mut zb = vec![T::zero(); d];
        let mut acc = vec![T::zero(); d];
        let half = T::lit(0.5);
        for s in steps.rev() {
            let h = self.steps[s];
            let base = s * 4 * d;
            let stage = |j: usize| &self.stages[base + j * d..base + (j + 1) * d];
            let sixth = h / T::lit(6.0);
            let third = h / T::lit(3.0);
            for i in 0..d {
                kb[0][i] = sixth * adj[i];
                kb[1][i] = third * adj[i];
                kb[2][i] = third * adj[i];
                kb[3][i] = sixth * adj[i];
                acc[i] = adj[i];
            }
            // stage 4: z4 = x + h k3
            vjp(stage(3), &kb[3], &mut zb);
            for i in 0..d {
                acc[i] += zb[i];
                kb[2][i] += h * zb[i];
            }
            // stage 3: z3 = x + h/2 k2
            vjp(stage(2), &kb[2], &mut zb);
            for i in 0..d {
                acc[i] += zb[i];
                kb[1][i] += half * h * zb[i];
            }
            // stage 2: z2 = x + h/2 k1
            vjp(stage(1), &kb[1], &mut zb);
            for i in 0..d {
                acc[i] += zb[i];
                kb[0][i] += half * h * zb[i];
            }
            vjp(stage(0), &kb[0], &mut zb);
            for i in 0..d {
                adj[i] = acc[i] + zb[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Cubic;
    impl VectorField<f64> for Cubic {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64], out: &mut [f64]) {
            out[0] = -x[0] * x[0] * x[0] + x[1];
            out[1] = -x[0] - 0.5 * x[1];
        }
        fn vjp(&self, x: &[f64], c: &[f64], out: &mut [f64]) {
            out[0] = -3.0 * x[0] * x[0] * c[0] - c[1];
            out[1] = c[0] - 0.5 * c[1];
        }
    }

    fn flow(x0: [f64; 2], steps: usize, h: f64) -> [f64; 2] {
        let mut rk = Rk4::new(2);
        let mut x = x0;
        for _ in 0..steps {
            rk.step(&Cubic, &mut x, h);
        }
        x
    }

    #[test]
    fn tape_backward_matches_finite_differences() {
        let (steps, h) = (7, 0.13);
        let x0 = [0.8, -0.3];
        let mut rk = Rk4::new(2);
        let mut tape = Rk4Tape::new(2);
        let mut x = x0;
        for _ in 0..steps {
            rk.step_recorded(&Cubic, &mut x, h, &mut tape);
        }
        assert_eq!(x, flow(x0, steps, h));
        let w = [0.7, -1.1];
        let mut adj = w;
        tape.backward(&mut adj, |z, c, o| Cubic.vjp(z, c, o));
        let eps = 1e-6;
        for j in 0..2 {
            let mut p = x0;
            let mut m = x0;
            p[j] += eps;
            m[j] -= eps;
            let (fp, fm) = (flow(p, steps, h), flow(m, steps, h));
            let fd = (w[0] * (fp[0] - fm[0]) + w[1] * (fp[1] - fm[1])) / (2.0 * eps);
            assert!((fd - adj[j]).abs() < 1e-8, "{fd} vs {}", adj[j]);
        }
    }
}
