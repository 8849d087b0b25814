use super::scalar::AdScalar;
use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::real::Real;

/// A scalar objective of a flat parameter vector, evaluable over any
/// differentiable scalar type.
///
/// `eval` may fail (for example when a rollout produces a non-finite
/// marginal); gradient entry points pass such failures through.
pub trait ScalarFn<T: Real> {
    fn n_inputs(&self) -> usize;
    fn eval<S: AdScalar<Base = T>>(&self, x: &[S]) -> Result<S>;
}

/// Value and exact gradient of `f` at `x`, by recording one forward
/// evaluation on a fresh tape and running one reverse sweep.
pub fn value_and_grad<T: Real, F: ScalarFn<T>>(f: &F, x: &[T]) -> Result<(T, Vec<T>)> {
    let tape = Tape::new();
    value_and_grad_on(&tape, f, x)
}

/// As [`value_and_grad`], reusing the caller's tape buffer. The tape is
/// cleared on entry.
pub fn value_and_grad_on<T: Real, F: ScalarFn<T>>(
    tape: &Tape<T>,
    f: &F,
    x: &[T],
) -> Result<(T, Vec<T>)> {
    if x.len() != f.n_inputs() {
        return Err(Error::DimensionMismatch {
            what: "objective input",
            expected: f.n_inputs(),
            got: x.len(),
        });
    }
    tape.clear();
    let vars: Vec<Var<'_, T>> = x.iter().map(|&v| tape.leaf(v)).collect();
    let out = f.eval::<Var<'_, T>>(&vars)?;
    if !out.value().is_finite() {
        return Err(Error::non_finite("objective value"));
    }
    let grad = tape.gradient(out, &vars);
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::non_finite(format!("gradient component {i}")));
    }
    Ok((out.value(), grad))
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn grad_fd<T: Real, F: ScalarFn<T>>(f: &F, x: &[T], h: T) -> Result<Vec<T>> {
    if h <= T::c(0.0) {
        return Err(Error::InvalidArgument {
            name: "h",
            reason: "finite-difference step must be positive".into(),
        });
    }
    let mut xp = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = f.eval::<T>(&xp)?;
        xp[i] = xi - h;
        let fm = f.eval::<T>(&xp)?;
        xp[i] = xi;
        g.push((fp - fm) / (T::c(2.0) * h));
    }
    Ok(g)
}

/// Worst relative disagreement between the exact gradient and a central
/// finite difference:
/// `max_i |g_i - fd_i| / max(1, |fd_i|)`.
///
/// Large values flag either a bug or genuinely non-smooth structure at `x`.
pub fn check_gradient<T: Real, F: ScalarFn<T>>(f: &F, x: &[T], h: T) -> Result<T> {
    let (_, g) = value_and_grad(f, x)?;
    let fd = grad_fd(f, x, h)?;
    let mut worst = T::c(0.0);
    for (gi, fdi) in g.iter().zip(fd.iter()) {
        let denom = T::c(1.0).max(fdi.abs());
        worst = worst.max((*gi - *fdi).abs() / denom);
    }
    Ok(worst)
}
