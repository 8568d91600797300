use crate::signal::Signal;

use super::SimError;

/// One classical Runge–Kutta step of size `h` for `ṡ = f(s)`.
pub fn rk4_step<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], s: &[f64; N], h: f64) -> [f64; N] {
    let axpy = |a: &[f64; N], k: &[f64; N], c: f64| {
        let mut out = *a;
        out.iter_mut().zip(k).for_each(|(o, k)| *o += c * k);
        out
    };
    let k1 = f(s);
    let k2 = f(&axpy(s, &k1, h / 2.0));
    let k3 = f(&axpy(s, &k2, h / 2.0));
    let k4 = f(&axpy(s, &k3, h));
    let mut out = *s;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `ṡ = deriv(s, u(t))` from `s0` over the grid of `u`, holding
/// each input sample constant until the next one and taking `substeps` RK4
/// steps per sample interval. Returns one state per input sample.
pub fn rk4_integrate<const N: usize>(
    deriv: impl Fn(&[f64; N], &[f64]) -> [f64; N],
    s0: [f64; N],
    u: &Signal,
    substeps: usize,
) -> Result<Vec<[f64; N]>, SimError> {
    let substeps = substeps.max(1);
    let h = u.step() / substeps as f64;
    let mut states = Vec::with_capacity(u.len());
    let mut s = s0;
    check_finite(&s, 0.0)?;
    states.push(s);
    for j in 0..u.len() - 1 {
        let input = u.sample(j);
        for _ in 0..substeps {
            s = rk4_step(|x| deriv(x, input), &s, h);
        }
        check_finite(&s, u.time(j + 1))?;
        states.push(s);
    }
    Ok(states)
}

pub(crate) fn check_finite(s: &[f64], time: f64) -> Result<(), SimError> {
    if s.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SimError::Diverged { time })
    }
}
