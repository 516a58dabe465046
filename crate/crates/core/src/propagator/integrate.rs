//! Dormand–Prince 5(4) with dense output for `dv/dt = V v`.

use ndarray::Array1;

use super::sparse::Csr;
use crate::error::{Error, Result};
use crate::liouvillian::{unvec, vec_of, Superoperator};
use crate::quantum_core::{DensityMatrix, C64};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Settings for [`integrate_direct`].
#[derive(Debug, Clone, Copy)]
pub struct DirectOptions {
    /// Local error tolerance, used both absolutely and relative to `|v|`.
    pub tol: f64,
    /// Spacing of the emitted output grid, ps.
    pub output_step: f64,
    pub max_steps: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            output_step: 0.05,
            max_steps: 10_000_000,
        }
    }
}

/// States sampled on the output grid.
#[derive(Debug, Clone)]
pub struct DirectTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Output grid `0, h, 2h, …` up to and including `t_end`.
pub fn output_grid(t_end: f64, step: f64) -> Vec<f64> {
    let n = (t_end / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    if t_end - grid[n] > 1e-9 * step {
        grid.push(t_end);
    }
    grid
}

pub fn integrate_direct(
    rho0: &DensityMatrix,
    v: &Superoperator,
    t_end: f64,
    opts: &DirectOptions,
) -> Result<DirectTrajectory> {
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {}", opts.tol)));
    }
    if !(opts.output_step > 0.0) {
        return Err(Error::param("output_step", "must be positive"));
    }
    if t_end < 0.0 {
        return Err(Error::NegativeTime(t_end));
    }
    if rho0.dim() != v.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: v.hilbert_dim(),
            got: rho0.dim(),
        });
    }
    let grid = output_grid(t_end, opts.output_step);
    let csr = Csr::from_dense(v.matrix());
    let y0 = vec_of(rho0.operator());
    let (outs, accepted, rejected) = dopri5(&csr, y0.to_vec(), &grid, opts)?;
    let states = outs
        .into_iter()
        .map(|y| unvec(&Array1::from(y)).map(DensityMatrix::from_unchecked))
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectTrajectory {
        times: grid,
        states,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut s = C64::new(0.0, 0.0);
        for (c, k) in terms {
            s += k[i] * *c;
        }
        out[i] = y[i] + s * h;
    }
}

/// Integrates from `t = 0` and returns the state at each grid time.
pub(crate) fn dopri5(
    a: &Csr,
    mut y: Vec<C64>,
    grid: &[f64],
    opts: &DirectOptions,
) -> Result<(Vec<Vec<C64>>, usize, usize)> {
    let n = y.len();
    let zero = C64::new(0.0, 0.0);
    let mut outs = Vec::with_capacity(grid.len());
    let t_end = *grid.last().unwrap_or(&0.0);
    let mut next_out = 0;
    while next_out < grid.len() && grid[next_out] <= 0.0 {
        outs.push(y.clone());
        next_out += 1;
    }
    if next_out == grid.len() {
        return Ok((outs, 0, 0));
    }

    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut tmp = vec![zero; n];
    let mut y1 = vec![zero; n];
    a.matvec_into(&y, &mut k1);

    let norm = |v: &[C64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = opts.tol;
    let mut h = {
        let d0 = norm(&y).max(1e-300);
        let d1 = norm(&k1).max(1e-300);
        (0.01 * d0 / d1).min(t_end).min(opts.output_step).max(1e-6)
    };
    let mut t = 0.0;
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut rcont = [vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]];

    while t < t_end {
        if accepted + rejected >= opts.max_steps {
            return Err(Error::Stiffness { t, h, tol });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Stiffness { t, h, tol });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        axpy_into(&mut tmp, &y, h, &[(A21, &k1)]);
        a.matvec_into(&tmp, &mut k2);
        axpy_into(&mut tmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        a.matvec_into(&tmp, &mut k3);
        axpy_into(&mut tmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        a.matvec_into(&tmp, &mut k4);
        axpy_into(&mut tmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        a.matvec_into(&tmp, &mut k5);
        axpy_into(
            &mut tmp,
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        a.matvec_into(&tmp, &mut k6);
        axpy_into(
            &mut y1,
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        a.matvec_into(&y1, &mut k7);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = tol + tol * y[i].norm().max(y1[i].norm());
            err = err.max(e.norm() / sc);
        }

        if err <= 1.0 {
            let t_new = t + h;
            if next_out < grid.len() && grid[next_out] <= t_new + 1e-12 {
                for i in 0..n {
                    let dy = y1[i] - y[i];
                    let bspl = k1[i] * h - dy;
                    rcont[0][i] = y[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = bspl;
                    rcont[3][i] = dy - k7[i] * h - bspl;
                    rcont[4][i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6
                        + k7[i] * D7)
                        * h;
                }
                while next_out < grid.len() && grid[next_out] <= t_new + 1e-12 {
                    let theta = ((grid[next_out] - t) / h).clamp(0.0, 1.0);
                    let th1 = 1.0 - theta;
                    let out: Vec<C64> = (0..n)
                        .map(|i| {
                            rcont[0][i]
                                + (rcont[1][i]
                                    + (rcont[2][i] + (rcont[3][i] + rcont[4][i] * th1) * theta) * th1)
                                    * theta
                        })
                        .collect();
                    outs.push(out);
                    next_out += 1;
                }
            }
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            t = t_new;
            accepted += 1;
            if last {
                break;
            }
            let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            h *= fac;
        } else {
            rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    while outs.len() < grid.len() {
        outs.push(y.clone());
    }
    Ok((outs, accepted, rejected))
}
