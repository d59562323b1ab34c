//! Finite-difference oracles for the backward pass.
//!
//! The exact gradient is checked against finite differences of the true
//! loss. The truncated gradient is checked against finite differences of a
//! surrogate forward pass in which every DoS vector entering a gate is
//! frozen at the value recorded by an unperturbed forward run; everything
//! else is recomputed. Differentiating that surrogate yields exactly the
//! truncated gradient.
//!
//! The checks use [`richardson_diff_grad`]. Plain central differences at
//! `1e-5` carry roughly `1e-11` of round-off, which already exceeds a `1e-5`
//! relative budget on gradient entries near `1e-6`; extrapolating two central
//! differences at a larger step removes the `h²` error term instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cell::{
    cell_output, check_frames, forward_sequence, gate_forget, gate_input, gate_output, pre_state,
    update_state, CellParams, StepTrace,
};
use crate::data::Label;
use crate::error::{check_len, Result};

use super::bptt::{backward, GradientSet, Truncation};
use super::loss::{sequence_loss, LossMode};

pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Outer step of the extrapolated differences used by [`run_gradcheck`].
pub const DEFAULT_RICHARDSON_STEP: f64 = 1e-2;

/// Pass threshold on the maximum relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// Central differences of `loss_fn` with respect to every scalar parameter.
pub fn finite_diff_grad<F>(mut loss_fn: F, params: &CellParams, epsilon: f64) -> GradientSet
where
    F: FnMut(&CellParams) -> f64,
{
    let mut grads = GradientSet::zeros_like(params);
    let mut probe = params.clone();
    let tensor_count = params.tensors().len();
    for ti in 0..tensor_count {
        let len = params.tensors()[ti].1.as_slice().len();
        for j in 0..len {
            let original = params.tensors()[ti].1.as_slice()[j];
            probe.tensors_mut()[ti].1.as_mut_slice()[j] = original + epsilon;
            let plus = loss_fn(&probe);
            probe.tensors_mut()[ti].1.as_mut_slice()[j] = original - epsilon;
            let minus = loss_fn(&probe);
            probe.tensors_mut()[ti].1.as_mut_slice()[j] = original;
            grads.tensors_mut()[ti].1.as_mut_slice()[j] = (plus - minus) / (2.0 * epsilon);
        }
    }
    grads
}

/// Richardson extrapolation of central differences:
/// `(4 D(h/2) - D(h)) / 3`, accurate to `O(h⁴)`.
pub fn richardson_diff_grad<F>(mut loss_fn: F, params: &CellParams, step: f64) -> GradientSet
where
    F: FnMut(&CellParams) -> f64,
{
    let coarse = finite_diff_grad(&mut loss_fn, params, step);
    let mut fine = finite_diff_grad(&mut loss_fn, params, step / 2.0);
    for ((_, f), (_, c)) in fine.tensors_mut().into_iter().zip(coarse.tensors()) {
        for (f, c) in f.as_mut_slice().iter_mut().zip(c.as_slice()) {
            *f = (4.0 * *f - c) / 3.0;
        }
    }
    fine
}

/// Forward pass with the DoS gate inputs replaced by those recorded in `frozen`.
pub fn frozen_dos_forward(xs: &[Vec<f64>], params: &CellParams, frozen: &[StepTrace]) -> Result<Vec<Vec<f64>>> {
    check_frames(xs, params.input_dim())?;
    check_len("frozen trace steps", xs.len(), frozen.len())?;
    let order = params.order();
    let mut s_prev = vec![0.0; params.state_dim()];
    let mut z_prev = vec![0.0; params.output_dim()];
    let mut outputs = Vec::with_capacity(xs.len());
    for (x, rec) in xs.iter().zip(frozen) {
        let dos_prev = rec.dos_prev(order);
        let i = gate_input(&dos_prev, &z_prev, x, params)?;
        let f = gate_forget(&dos_prev, &z_prev, x, params)?;
        let s_half = pre_state(&z_prev, x, params)?;
        let s = update_state(&f, &i, &s_prev, &s_half)?;
        let o = gate_output(&rec.dos_curr(order), &z_prev, x, params)?;
        let z = cell_output(&o, &s, params)?;
        s_prev = s;
        z_prev = z.clone();
        outputs.push(z);
    }
    Ok(outputs)
}

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest relative error between two gradient sets and where it occurs.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientDiscrepancy {
    pub max_relative_error: f64,
    pub tensor: String,
    pub index: usize,
}

pub fn compare_gradients(analytic: &GradientSet, numeric: &GradientSet) -> GradientDiscrepancy {
    let mut worst = GradientDiscrepancy {
        max_relative_error: 0.0,
        tensor: String::new(),
        index: 0,
    };
    for ((name, a), (_, b)) in analytic.tensors().into_iter().zip(numeric.tensors()) {
        for (index, (x, y)) in a.as_slice().iter().zip(b.as_slice()).enumerate() {
            let err = relative_error(*x, *y);
            if err > worst.max_relative_error || worst.tensor.is_empty() {
                worst = GradientDiscrepancy {
                    max_relative_error: err,
                    tensor: name.clone(),
                    index,
                };
            }
        }
    }
    worst
}

/// One row of the standard gradient-check matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradCheckCase {
    pub order: usize,
    pub truncation: Truncation,
    pub mode: LossMode,
}

impl GradCheckCase {
    /// The 12 combinations of order {0,1,2} × truncation × loss mode.
    pub fn all() -> Vec<GradCheckCase> {
        let mut cases = Vec::with_capacity(12);
        for order in 0..=2 {
            for truncation in [Truncation::FullBptt, Truncation::TruncatedPaper] {
                for mode in [LossMode::SequenceFinal, LossMode::PerFrameCumulative] {
                    cases.push(GradCheckCase { order, truncation, mode });
                }
            }
        }
        cases
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckResult {
    pub case: GradCheckCase,
    pub discrepancy: GradientDiscrepancy,
    pub passed: bool,
}

/// Instance shape and seed for [`run_gradcheck`].
#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub input_dim: usize,
    pub state_dim: usize,
    pub classes: usize,
    pub frames: usize,
    pub param_scale: f64,
    /// Outer step of [`richardson_diff_grad`].
    pub step: f64,
    pub seed: u64,
    /// Adds 1e-2 to the first analytic gradient entry of the check at this
    /// position in [`GradCheckCase::all`]; used to show the harness can fail.
    pub corrupt_case: Option<usize>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            input_dim: 5,
            state_dim: 4,
            classes: 3,
            frames: 6,
            param_scale: 0.5,
            step: DEFAULT_RICHARDSON_STEP,
            seed: 0,
            corrupt_case: None,
        }
    }
}

/// Runs one analytic-versus-numeric comparison.
pub fn check_case(case: GradCheckCase, config: &GradCheckConfig, corrupt: bool) -> Result<GradCheckResult> {
    // Every case draws its instance from a stream keyed by seed and order so
    // that the four checks of one order share parameters and inputs.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(31).wrapping_add(case.order as u64));
    let params = CellParams::random(
        case.order,
        config.input_dim,
        config.state_dim,
        config.classes,
        config.param_scale,
        &mut rng,
    )?;
    let xs: Vec<Vec<f64>> = (0..config.frames)
        .map(|_| (0..config.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let frame_labels: Vec<usize> = (0..config.frames).map(|_| rng.random_range(0..config.classes)).collect();
    let label = match case.mode {
        LossMode::SequenceFinal => Label::Sequence(frame_labels[config.frames - 1]),
        LossMode::PerFrameCumulative => Label::Frames(frame_labels),
    };

    let (_, traces) = forward_sequence(&xs, &params)?;
    let mut analytic = backward(&traces, &label, case.mode, &params, case.truncation)?;
    if corrupt {
        analytic.w_id[0].as_mut_slice()[0] += 1e-2;
    }

    let numeric = match case.truncation {
        Truncation::FullBptt => richardson_diff_grad(
            |p| {
                let (z, _) = forward_sequence(&xs, p).expect("shapes fixed");
                sequence_loss(&z, &label, case.mode).expect("labels fixed")
            },
            &params,
            config.step,
        ),
        Truncation::TruncatedPaper => richardson_diff_grad(
            |p| {
                let z = frozen_dos_forward(&xs, p, &traces).expect("shapes fixed");
                sequence_loss(&z, &label, case.mode).expect("labels fixed")
            },
            &params,
            config.step,
        ),
    };
    let discrepancy = compare_gradients(&analytic, &numeric);
    Ok(GradCheckResult {
        case,
        passed: discrepancy.max_relative_error < GRADCHECK_TOLERANCE,
        discrepancy,
    })
}

/// Runs all 12 checks.
pub fn run_gradcheck(config: &GradCheckConfig) -> Result<Vec<GradCheckResult>> {
    GradCheckCase::all()
        .into_iter()
        .enumerate()
        .map(|(i, case)| check_case(case, config, config.corrupt_case == Some(i)))
        .collect()
}
