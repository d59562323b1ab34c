//! The dRNN memory cell.
//!
//! A dRNN cell is an LSTM cell whose gates also read discrete derivatives of
//! the internal state ("DoS"): order 0 is the state itself, order 1 the
//! velocity `v_t = s_t - s_{t-1}`, order 2 the acceleration
//! `a_t = v_t - v_{t-1}`. Input and forget gates see the DoS of the previous
//! step, the output gate sees the DoS of the freshly updated state.
//!
//! With `order == 0` the cell is exactly the classical LSTM cell, with the
//! single DoS weight of each gate acting as its state-to-gate matrix.
//!
//! Each [`step`] runs, in order:
//!
//! 1. input and forget gates from the DoS at `t-1`,
//! 2. the state update `s_t = f ⊙ s_{t-1} + i ⊙ s_{t-1/2}`,
//! 3. velocity and acceleration at `t`,
//! 4. the output gate from the DoS at `t`,
//! 5. the cell output `z_t = o ⊙ tanh(W_zs s_t + b_z)`.

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::numeric::{init_matrix, sigmoid_in_place, Matrix};

/// Highest supported DoS order.
pub const MAX_ORDER: usize = 2;

/// Which gate a DoS weight family or pre-activation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input,
    Forget,
    Output,
}

/// All weights and biases of one dRNN layer.
///
/// Shapes, with `n = input_dim`, `m = state_dim`, `k = output_dim`:
/// DoS weights `w_id/w_fd[j]` are `m×m`; `w_iz, w_fz, w_sz` are `m×k`;
/// `w_ix, w_fx, w_sx` are `m×n`; `w_zs` is `k×m`. The output gate multiplies
/// the `k`-dimensional output, so its weights have `k` rows: `w_od[j]` is
/// `k×m`, `w_oz` is `k×k`, `w_ox` is `k×n`. Biases are column vectors.
///
/// Fields are public for inspection and testing; call
/// [`CellParams::validate`] after editing shapes by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams {
    order: usize,
    input_dim: usize,
    state_dim: usize,
    output_dim: usize,
    pub w_id: Vec<Matrix>,
    pub w_fd: Vec<Matrix>,
    pub w_od: Vec<Matrix>,
    pub w_iz: Matrix,
    pub w_fz: Matrix,
    pub w_oz: Matrix,
    pub w_ix: Matrix,
    pub w_fx: Matrix,
    pub w_ox: Matrix,
    pub w_sz: Matrix,
    pub w_sx: Matrix,
    pub w_zs: Matrix,
    pub b_i: Matrix,
    pub b_f: Matrix,
    pub b_o: Matrix,
    pub b_s: Matrix,
    pub b_z: Matrix,
}

impl CellParams {
    /// All-zero parameters of the given shape.
    pub fn zeros(order: usize, input_dim: usize, state_dim: usize, output_dim: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        if input_dim == 0 || state_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "cell dimensions must be positive (input {input_dim}, state {state_dim}, output {output_dim})"
            )));
        }
        let (n, m, k) = (input_dim, state_dim, output_dim);
        let dos = |rows| vec![Matrix::zeros(rows, m); order + 1];
        Ok(CellParams {
            order,
            input_dim,
            state_dim,
            output_dim,
            w_id: dos(m),
            w_fd: dos(m),
            w_od: dos(k),
            w_iz: Matrix::zeros(m, k),
            w_fz: Matrix::zeros(m, k),
            w_oz: Matrix::zeros(k, k),
            w_ix: Matrix::zeros(m, n),
            w_fx: Matrix::zeros(m, n),
            w_ox: Matrix::zeros(k, n),
            w_sz: Matrix::zeros(m, k),
            w_sx: Matrix::zeros(m, n),
            w_zs: Matrix::zeros(k, m),
            b_i: Matrix::zeros(m, 1),
            b_f: Matrix::zeros(m, 1),
            b_o: Matrix::zeros(k, 1),
            b_s: Matrix::zeros(m, 1),
            b_z: Matrix::zeros(k, 1),
        })
    }

    /// Parameters with every entry drawn from `U[-scale, scale]`, biases included.
    pub fn random<R: Rng + ?Sized>(
        order: usize,
        input_dim: usize,
        state_dim: usize,
        output_dim: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut params = Self::zeros(order, input_dim, state_dim, output_dim)?;
        for (_, t) in params.tensors_mut() {
            *t = init_matrix(t.rows(), t.cols(), scale, rng);
        }
        Ok(params)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn dos_weights(&self, gate: Gate) -> &[Matrix] {
        match gate {
            Gate::Input => &self.w_id,
            Gate::Forget => &self.w_fd,
            Gate::Output => &self.w_od,
        }
    }

    fn gate_weights(&self, gate: Gate) -> (&[Matrix], &Matrix, &Matrix, &Matrix) {
        match gate {
            Gate::Input => (&self.w_id, &self.w_iz, &self.w_ix, &self.b_i),
            Gate::Forget => (&self.w_fd, &self.w_fz, &self.w_fx, &self.b_f),
            Gate::Output => (&self.w_od, &self.w_oz, &self.w_ox, &self.b_o),
        }
    }

    /// Every tensor with its canonical name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::with_capacity(3 * (self.order + 1) + 14);
        for (prefix, family) in [("W_id", &self.w_id), ("W_fd", &self.w_fd), ("W_od", &self.w_od)] {
            for (j, w) in family.iter().enumerate() {
                out.push((format!("{prefix}{j}"), w));
            }
        }
        out.extend([
            ("W_iz".to_string(), &self.w_iz),
            ("W_fz".to_string(), &self.w_fz),
            ("W_oz".to_string(), &self.w_oz),
            ("W_ix".to_string(), &self.w_ix),
            ("W_fx".to_string(), &self.w_fx),
            ("W_ox".to_string(), &self.w_ox),
            ("W_sz".to_string(), &self.w_sz),
            ("W_sx".to_string(), &self.w_sx),
            ("W_zs".to_string(), &self.w_zs),
            ("b_i".to_string(), &self.b_i),
            ("b_f".to_string(), &self.b_f),
            ("b_o".to_string(), &self.b_o),
            ("b_s".to_string(), &self.b_s),
            ("b_z".to_string(), &self.b_z),
        ]);
        out
    }

    /// Mutable counterpart of [`CellParams::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = Vec::with_capacity(3 * (self.order + 1) + 14);
        for (prefix, family) in [
            ("W_id", &mut self.w_id),
            ("W_fd", &mut self.w_fd),
            ("W_od", &mut self.w_od),
        ] {
            for (j, w) in family.iter_mut().enumerate() {
                out.push((format!("{prefix}{j}"), w));
            }
        }
        out.extend([
            ("W_iz".to_string(), &mut self.w_iz),
            ("W_fz".to_string(), &mut self.w_fz),
            ("W_oz".to_string(), &mut self.w_oz),
            ("W_ix".to_string(), &mut self.w_ix),
            ("W_fx".to_string(), &mut self.w_fx),
            ("W_ox".to_string(), &mut self.w_ox),
            ("W_sz".to_string(), &mut self.w_sz),
            ("W_sx".to_string(), &mut self.w_sx),
            ("W_zs".to_string(), &mut self.w_zs),
            ("b_i".to_string(), &mut self.b_i),
            ("b_f".to_string(), &mut self.b_f),
            ("b_o".to_string(), &mut self.b_o),
            ("b_s".to_string(), &mut self.b_s),
            ("b_z".to_string(), &mut self.b_z),
        ]);
        out
    }

    /// Expected shape of every tensor, keyed like [`CellParams::tensors`].
    pub fn expected_shapes(&self) -> Vec<(String, (usize, usize))> {
        let shape = Self::zeros(self.order, self.input_dim, self.state_dim, self.output_dim)
            .expect("dimensions were validated at construction");
        shape
            .tensors()
            .into_iter()
            .map(|(name, t)| (name, t.shape()))
            .collect()
    }

    /// Checks that every tensor has the shape implied by the dimensions.
    pub fn validate(&self) -> Result<()> {
        for family in [&self.w_id, &self.w_fd, &self.w_od] {
            if family.len() != self.order + 1 {
                return Err(Error::DosCount {
                    order: self.order,
                    expected: self.order + 1,
                    actual: family.len(),
                });
            }
        }
        for ((name, t), (_, shape)) in self.tensors().into_iter().zip(self.expected_shapes()) {
            check_len(&format!("{name} rows"), shape.0, t.rows())?;
            check_len(&format!("{name} cols"), shape.1, t.cols())?;
        }
        Ok(())
    }

    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.as_slice().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Recurrent carry between steps.
///
/// After step `t`: `s_curr = s_t`, `s_prev = s_{t-1}`, `s_prev2 = s_{t-2}`,
/// `z_prev = z_t`. Before the first frame everything is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub s_curr: Vec<f64>,
    pub s_prev: Vec<f64>,
    pub s_prev2: Vec<f64>,
    pub z_prev: Vec<f64>,
    pub t: usize,
}

impl CellState {
    pub fn initial(params: &CellParams) -> Self {
        let m = params.state_dim();
        CellState {
            s_curr: vec![0.0; m],
            s_prev: vec![0.0; m],
            s_prev2: vec![0.0; m],
            z_prev: vec![0.0; params.output_dim()],
            t: 0,
        }
    }

    /// Velocity of the most recent state.
    pub fn velocity(&self) -> Vec<f64> {
        dos_velocity(&self.s_curr, &self.s_prev).expect("state history has uniform length")
    }

    /// Acceleration of the most recent state.
    pub fn acceleration(&self) -> Vec<f64> {
        dos_acceleration(&self.s_curr, &self.s_prev, &self.s_prev2)
            .expect("state history has uniform length")
    }
}

/// Everything a step computed, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub x: Vec<f64>,
    pub z_prev: Vec<f64>,
    pub s_prev: Vec<f64>,
    /// Velocity and acceleration of `s_{t-1}` (zero-padded at the start).
    pub v_prev: Vec<f64>,
    pub a_prev: Vec<f64>,
    pub i_pre: Vec<f64>,
    pub f_pre: Vec<f64>,
    pub o_pre: Vec<f64>,
    pub s_half_pre: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub o: Vec<f64>,
    pub s_half: Vec<f64>,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    /// `tanh(W_zs s_t + b_z)`.
    pub z_act: Vec<f64>,
    pub z: Vec<f64>,
}

impl StepTrace {
    /// DoS of `s_{t-1}` up to `order`, as fed to the input and forget gates.
    pub fn dos_prev(&self, order: usize) -> Vec<&[f64]> {
        [&self.s_prev[..], &self.v_prev, &self.a_prev][..=order].to_vec()
    }

    /// DoS of `s_t` up to `order`, as fed to the output gate.
    pub fn dos_curr(&self, order: usize) -> Vec<&[f64]> {
        [&self.s[..], &self.v, &self.a][..=order].to_vec()
    }
}

fn check_dos(params: &CellParams, dos: &[&[f64]]) -> Result<()> {
    if dos.len() != params.order() + 1 {
        return Err(Error::DosCount {
            order: params.order(),
            expected: params.order() + 1,
            actual: dos.len(),
        });
    }
    for (j, d) in dos.iter().enumerate() {
        check_len(&format!("DoS order {j}"), params.state_dim(), d.len())?;
    }
    Ok(())
}

fn check_inputs(params: &CellParams, z_prev: &[f64], x_t: &[f64]) -> Result<()> {
    check_len("z_prev", params.output_dim(), z_prev.len())?;
    check_len("x_t", params.input_dim(), x_t.len())
}

/// Gate pre-activation `Σ_j W_gd[j] dos[j] + W_gz z_{t-1} + W_gx x_t + b_g`.
fn gate_preactivation(
    gate: Gate,
    dos: &[&[f64]],
    z_prev: &[f64],
    x_t: &[f64],
    params: &CellParams,
) -> Vec<f64> {
    let (w_d, w_z, w_x, b) = params.gate_weights(gate);
    let mut pre = b.as_slice().to_vec();
    for (w, d) in w_d.iter().zip(dos) {
        w.mul_vec_acc(d, &mut pre);
    }
    w_z.mul_vec_acc(z_prev, &mut pre);
    w_x.mul_vec_acc(x_t, &mut pre);
    pre
}

fn gate(gate: Gate, dos: &[&[f64]], z_prev: &[f64], x_t: &[f64], params: &CellParams) -> Result<Vec<f64>> {
    check_dos(params, dos)?;
    check_inputs(params, z_prev, x_t)?;
    let mut act = gate_preactivation(gate, dos, z_prev, x_t, params);
    sigmoid_in_place(&mut act);
    Ok(act)
}

fn pre_state_preactivation(z_prev: &[f64], x_t: &[f64], params: &CellParams) -> Vec<f64> {
    let mut pre = params.b_s.as_slice().to_vec();
    params.w_sz.mul_vec_acc(z_prev, &mut pre);
    params.w_sx.mul_vec_acc(x_t, &mut pre);
    pre
}

/// Pre-state `s_{t-1/2} = tanh(W_sz z_{t-1} + W_sx x_t + b_s)`.
pub fn pre_state(z_prev: &[f64], x_t: &[f64], params: &CellParams) -> Result<Vec<f64>> {
    check_inputs(params, z_prev, x_t)?;
    Ok(pre_state_preactivation(z_prev, x_t, params)
        .into_iter()
        .map(f64::tanh)
        .collect())
}

/// Input gate. `dos_prev` holds `[s_{t-1}, v_{t-1}, a_{t-1}]` truncated to the order.
pub fn gate_input(dos_prev: &[&[f64]], z_prev: &[f64], x_t: &[f64], params: &CellParams) -> Result<Vec<f64>> {
    gate(Gate::Input, dos_prev, z_prev, x_t, params)
}

/// Forget gate; same inputs as [`gate_input`].
pub fn gate_forget(dos_prev: &[&[f64]], z_prev: &[f64], x_t: &[f64], params: &CellParams) -> Result<Vec<f64>> {
    gate(Gate::Forget, dos_prev, z_prev, x_t, params)
}

/// Output gate. `dos_curr` holds `[s_t, v_t, a_t]` truncated to the order.
pub fn gate_output(dos_curr: &[&[f64]], z_prev: &[f64], x_t: &[f64], params: &CellParams) -> Result<Vec<f64>> {
    gate(Gate::Output, dos_curr, z_prev, x_t, params)
}

/// `s_t = f ⊙ s_{t-1} + i ⊙ s_{t-1/2}`.
pub fn update_state(f_t: &[f64], i_t: &[f64], s_prev: &[f64], s_half: &[f64]) -> Result<Vec<f64>> {
    let m = f_t.len();
    check_len("i_t", m, i_t.len())?;
    check_len("s_prev", m, s_prev.len())?;
    check_len("s_half", m, s_half.len())?;
    Ok((0..m).map(|j| f_t[j] * s_prev[j] + i_t[j] * s_half[j]).collect())
}

/// First-order DoS, `s_t - s_{t-1}`.
pub fn dos_velocity(s_t: &[f64], s_prev: &[f64]) -> Result<Vec<f64>> {
    check_len("s_prev", s_t.len(), s_prev.len())?;
    Ok(s_t.iter().zip(s_prev).map(|(a, b)| a - b).collect())
}

/// Second-order DoS, `s_t - 2 s_{t-1} + s_{t-2}`.
///
/// Evaluated as the difference of successive velocities, so it matches
/// `dos_velocity(s_t, s_prev) - dos_velocity(s_prev, s_prev2)` bit for bit.
pub fn dos_acceleration(s_t: &[f64], s_prev: &[f64], s_prev2: &[f64]) -> Result<Vec<f64>> {
    check_len("s_prev", s_t.len(), s_prev.len())?;
    check_len("s_prev2", s_t.len(), s_prev2.len())?;
    Ok((0..s_t.len())
        .map(|j| (s_t[j] - s_prev[j]) - (s_prev[j] - s_prev2[j]))
        .collect())
}

/// Cell output `z_t = o ⊙ tanh(W_zs s_t + b_z)`.
pub fn cell_output(o_t: &[f64], s_t: &[f64], params: &CellParams) -> Result<Vec<f64>> {
    check_len("o_t", params.output_dim(), o_t.len())?;
    check_len("s_t", params.state_dim(), s_t.len())?;
    let mut pre = params.b_z.as_slice().to_vec();
    params.w_zs.mul_vec_acc(s_t, &mut pre);
    Ok(pre.iter().zip(o_t).map(|(p, o)| o * p.tanh()).collect())
}

fn check_state(state: &CellState, params: &CellParams) -> Result<()> {
    let m = params.state_dim();
    check_len("state s_curr", m, state.s_curr.len())?;
    check_len("state s_prev", m, state.s_prev.len())?;
    check_len("state s_prev2", m, state.s_prev2.len())?;
    check_len("state z_prev", params.output_dim(), state.z_prev.len())
}

/// Advances the cell by one frame.
pub fn step(state: &CellState, x_t: &[f64], params: &CellParams) -> Result<(CellState, StepTrace)> {
    check_state(state, params)?;
    check_len("x_t", params.input_dim(), x_t.len())?;
    let order = params.order();

    let s_prev = state.s_curr.clone();
    let v_prev = state.velocity();
    let a_prev = state.acceleration();
    let dos_prev: Vec<&[f64]> = [&s_prev[..], &v_prev, &a_prev][..=order].to_vec();
    let z_prev = &state.z_prev;

    let i_pre = gate_preactivation(Gate::Input, &dos_prev, z_prev, x_t, params);
    let f_pre = gate_preactivation(Gate::Forget, &dos_prev, z_prev, x_t, params);
    let mut i = i_pre.clone();
    sigmoid_in_place(&mut i);
    let mut f = f_pre.clone();
    sigmoid_in_place(&mut f);

    let s_half_pre = pre_state_preactivation(z_prev, x_t, params);
    let s_half: Vec<f64> = s_half_pre.iter().map(|v| v.tanh()).collect();
    let s = update_state(&f, &i, &s_prev, &s_half)?;

    let v = dos_velocity(&s, &s_prev)?;
    let a = dos_acceleration(&s, &s_prev, &state.s_prev)?;
    let dos_curr: Vec<&[f64]> = [&s[..], &v, &a][..=order].to_vec();
    let o_pre = gate_preactivation(Gate::Output, &dos_curr, z_prev, x_t, params);
    let mut o = o_pre.clone();
    sigmoid_in_place(&mut o);

    let mut z_act = params.b_z.as_slice().to_vec();
    params.w_zs.mul_vec_acc(&s, &mut z_act);
    z_act.iter_mut().for_each(|v| *v = v.tanh());
    let z: Vec<f64> = o.iter().zip(&z_act).map(|(o, h)| o * h).collect();

    let next = CellState {
        s_curr: s.clone(),
        s_prev: s_prev.clone(),
        s_prev2: state.s_prev.clone(),
        z_prev: z.clone(),
        t: state.t + 1,
    };
    let trace = StepTrace {
        x: x_t.to_vec(),
        z_prev: z_prev.clone(),
        s_prev,
        v_prev,
        a_prev,
        i_pre,
        f_pre,
        o_pre,
        s_half_pre,
        i,
        f,
        o,
        s_half,
        s,
        v,
        a,
        z_act,
        z,
    };
    Ok((next, trace))
}

/// Checks that a sequence is non-empty and every frame has `dim` entries.
pub fn check_frames(xs: &[Vec<f64>], dim: usize) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptySequence);
    }
    for (index, x) in xs.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::FrameDimension {
                index,
                expected: dim,
                actual: x.len(),
            });
        }
    }
    Ok(())
}

/// Runs the cell over a whole sequence from the zero state.
///
/// Returns the outputs `z_1..z_T` and the per-step traces.
pub fn forward_sequence(xs: &[Vec<f64>], params: &CellParams) -> Result<(Vec<Vec<f64>>, Vec<StepTrace>)> {
    check_frames(xs, params.input_dim())?;
    let mut state = CellState::initial(params);
    let mut outputs = Vec::with_capacity(xs.len());
    let mut traces = Vec::with_capacity(xs.len());
    for x in xs {
        let (next, trace) = step(&state, x, params)?;
        state = next;
        outputs.push(trace.z.clone());
        traces.push(trace);
    }
    Ok((outputs, traces))
}
