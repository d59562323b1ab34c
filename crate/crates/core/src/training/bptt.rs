//! Backpropagation through time for the dRNN cell.
//!
//! The reverse sweep keeps one gradient accumulator per time index for the
//! state `s_t`, the velocity `v_t`, the acceleration `a_t` and the output
//! `z_t`. Index 0 is the zero initial condition and is discarded.
//!
//! In [`Truncation::TruncatedPaper`] mode the DoS vectors feeding the gates
//! (orders 0..N, at `t-1` for input/forget and at `t` for output) are
//! treated as constants: the DoS weights still receive gradient, but no
//! error flows back through them into the state. Error still reaches the
//! state through the cell output `W_zs s_t` and through the forget path
//! `f ⊙ s_{t-1}`. [`Truncation::FullBptt`] differentiates the whole
//! unrolled graph.

use std::ops::{Deref, DerefMut};

use crate::cell::{forward_sequence, CellParams, StepTrace};
use crate::data::Label;
use crate::error::{check_len, Error, Result};

use super::loss::{loss_and_logit_grads, LossMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// DoS gate inputs carry no gradient back into the state.
    #[default]
    TruncatedPaper,
    /// Exact gradient of the unrolled sequence.
    FullBptt,
}

/// One gradient tensor per [`CellParams`] field, with identical shapes.
///
/// Dereferences to a `CellParams` so tensors are addressed by the same
/// field names as the parameters they differentiate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(CellParams);

impl GradientSet {
    pub fn zeros_like(params: &CellParams) -> Self {
        GradientSet(
            CellParams::zeros(params.order(), params.input_dim(), params.state_dim(), params.output_dim())
                .expect("shape taken from valid params"),
        )
    }

    /// Wraps a parameter-shaped set of tensors as gradients.
    pub fn from_params(tensors: CellParams) -> Self {
        GradientSet(tensors)
    }

    pub fn into_inner(self) -> CellParams {
        self.0
    }

    /// Checks field-by-field shape congruence with `params`.
    pub fn check_congruent(&self, params: &CellParams) -> Result<()> {
        if self.0.order() != params.order() {
            return Err(Error::DosCount {
                order: params.order(),
                expected: params.order() + 1,
                actual: self.0.order() + 1,
            });
        }
        for ((name, g), (_, p)) in self.0.tensors().into_iter().zip(params.tensors()) {
            check_len(&format!("gradient {name} rows"), p.rows(), g.rows())?;
            check_len(&format!("gradient {name} cols"), p.cols(), g.cols())?;
        }
        Ok(())
    }

    /// L2 norm over every entry of every tensor.
    pub fn global_norm(&self) -> f64 {
        self.0
            .tensors()
            .iter()
            .flat_map(|(_, t)| t.as_slice())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .tensors()
            .iter()
            .flat_map(|(_, t)| t.as_slice())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Deref for GradientSet {
    type Target = CellParams;

    fn deref(&self) -> &CellParams {
        &self.0
    }
}

impl DerefMut for GradientSet {
    fn deref_mut(&mut self) -> &mut CellParams {
        &mut self.0
    }
}

fn check_traces(traces: &[StepTrace], params: &CellParams) -> Result<()> {
    if traces.is_empty() {
        return Err(Error::EmptySequence);
    }
    let (n, m, k) = (params.input_dim(), params.state_dim(), params.output_dim());
    for (t, tr) in traces.iter().enumerate() {
        if tr.x.len() != n || tr.s.len() != m || tr.z.len() != k || tr.a_prev.len() != m {
            return Err(Error::TraceMismatch(format!(
                "step {t} has x/s/z sizes {}/{}/{}, params expect {n}/{m}/{k}",
                tr.x.len(),
                tr.s.len(),
                tr.z.len()
            )));
        }
    }
    Ok(())
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
}

/// Backpropagates an arbitrary error `∂loss/∂z_t` (one vector per step).
pub fn backward_from_logit_grads(
    traces: &[StepTrace],
    logit_grads: &[Vec<f64>],
    params: &CellParams,
    truncation: Truncation,
) -> Result<GradientSet> {
    check_traces(traces, params)?;
    check_len("logit gradient steps", traces.len(), logit_grads.len())?;
    let order = params.order();
    let (m, k) = (params.state_dim(), params.output_dim());
    let full = truncation == Truncation::FullBptt;
    let steps = traces.len();

    let mut grads = GradientSet::zeros_like(params);
    let mut gz = vec![vec![0.0; k]; steps + 1];
    let mut gs = vec![vec![0.0; m]; steps + 1];
    let mut gv = vec![vec![0.0; m]; steps + 1];
    let mut ga = vec![vec![0.0; m]; steps + 1];

    for t in (1..=steps).rev() {
        let tr = &traces[t - 1];
        check_len("logit gradient", k, logit_grads[t - 1].len())?;
        let dz: Vec<f64> = gz[t].iter().zip(&logit_grads[t - 1]).map(|(a, b)| a + b).collect();

        // z_t = o ⊙ tanh(W_zs s_t + b_z)
        let d_zpre: Vec<f64> = (0..k)
            .map(|j| dz[j] * tr.o[j] * (1.0 - tr.z_act[j] * tr.z_act[j]))
            .collect();
        let d_opre: Vec<f64> = (0..k)
            .map(|j| dz[j] * tr.z_act[j] * tr.o[j] * (1.0 - tr.o[j]))
            .collect();
        grads.w_zs.add_outer(&d_zpre, &tr.s);
        add_into(grads.b_z.as_mut_slice(), &d_zpre);
        params.w_zs.tmul_vec_acc(&d_zpre, &mut gs[t]);

        // output gate, fed by the DoS at t
        let dos_curr = tr.dos_curr(order);
        for (w, d) in grads.w_od.iter_mut().zip(&dos_curr) {
            w.add_outer(&d_opre, d);
        }
        grads.w_oz.add_outer(&d_opre, &tr.z_prev);
        grads.w_ox.add_outer(&d_opre, &tr.x);
        add_into(grads.b_o.as_mut_slice(), &d_opre);
        params.w_oz.tmul_vec_acc(&d_opre, &mut gz[t - 1]);
        if full {
            let targets = [&mut gs[t], &mut gv[t], &mut ga[t]];
            for (w, target) in params.w_od.iter().zip(targets) {
                w.tmul_vec_acc(&d_opre, target);
            }

            // a_t = v_t - v_{t-1}, v_t = s_t - s_{t-1}
            let ga_t = std::mem::take(&mut ga[t]);
            add_into(&mut gv[t], &ga_t);
            gv[t - 1].iter_mut().zip(&ga_t).for_each(|(d, g)| *d -= g);
            let gv_t = std::mem::take(&mut gv[t]);
            add_into(&mut gs[t], &gv_t);
            gs[t - 1].iter_mut().zip(&gv_t).for_each(|(d, g)| *d -= g);
        }

        // s_t = f ⊙ s_{t-1} + i ⊙ s_half
        let ds = std::mem::take(&mut gs[t]);
        for j in 0..m {
            gs[t - 1][j] += ds[j] * tr.f[j];
        }
        let d_spre: Vec<f64> = (0..m)
            .map(|j| ds[j] * tr.i[j] * (1.0 - tr.s_half[j] * tr.s_half[j]))
            .collect();
        let d_ipre: Vec<f64> = (0..m)
            .map(|j| ds[j] * tr.s_half[j] * tr.i[j] * (1.0 - tr.i[j]))
            .collect();
        let d_fpre: Vec<f64> = (0..m)
            .map(|j| ds[j] * tr.s_prev[j] * tr.f[j] * (1.0 - tr.f[j]))
            .collect();

        grads.w_sz.add_outer(&d_spre, &tr.z_prev);
        grads.w_sx.add_outer(&d_spre, &tr.x);
        add_into(grads.b_s.as_mut_slice(), &d_spre);
        params.w_sz.tmul_vec_acc(&d_spre, &mut gz[t - 1]);

        // input and forget gates, fed by the DoS at t-1
        let dos_prev = tr.dos_prev(order);
        for (d_pre, w_d, w_z, w_x, b, p_d, p_z) in [
            (&d_ipre, &mut grads.0.w_id, &mut grads.0.w_iz, &mut grads.0.w_ix, &mut grads.0.b_i, &params.w_id, &params.w_iz),
            (&d_fpre, &mut grads.0.w_fd, &mut grads.0.w_fz, &mut grads.0.w_fx, &mut grads.0.b_f, &params.w_fd, &params.w_fz),
        ] {
            for (w, d) in w_d.iter_mut().zip(&dos_prev) {
                w.add_outer(d_pre, d);
            }
            w_z.add_outer(d_pre, &tr.z_prev);
            w_x.add_outer(d_pre, &tr.x);
            add_into(b.as_mut_slice(), d_pre);
            p_z.tmul_vec_acc(d_pre, &mut gz[t - 1]);
            if full {
                let targets = [&mut gs[t - 1], &mut gv[t - 1], &mut ga[t - 1]];
                for (w, target) in p_d.iter().zip(targets) {
                    w.tmul_vec_acc(d_pre, target);
                }
            }
        }
    }
    Ok(grads)
}

/// Gradient of the sequence loss, given the forward traces.
///
/// The frames themselves are read back from the traces.
pub fn backward(
    traces: &[StepTrace],
    label: &Label,
    mode: LossMode,
    params: &CellParams,
    truncation: Truncation,
) -> Result<GradientSet> {
    let logits: Vec<Vec<f64>> = traces.iter().map(|tr| tr.z.clone()).collect();
    let (_, logit_grads) = loss_and_logit_grads(&logits, label, mode)?;
    backward_from_logit_grads(traces, &logit_grads, params, truncation)
}

/// Forward pass, loss and gradient in one call.
pub fn loss_and_gradient(
    xs: &[Vec<f64>],
    label: &Label,
    mode: LossMode,
    params: &CellParams,
    truncation: Truncation,
) -> Result<(f64, GradientSet)> {
    let (logits, traces) = forward_sequence(xs, params)?;
    let (loss, logit_grads) = loss_and_logit_grads(&logits, label, mode)?;
    let grads = backward_from_logit_grads(&traces, &logit_grads, params, truncation)?;
    Ok((loss, grads))
}
