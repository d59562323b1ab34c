//! A classical LSTM written directly from its equations, sharing nothing
//! with the library's cell code except the parameter container.

use drnn::cell::CellParams;
use drnn::numeric::Matrix;

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn matvec(w: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..w.rows())
        .map(|r| (0..w.cols()).map(|c| w.get(r, c) * x[c]).sum())
        .collect()
}

fn add(parts: &[Vec<f64>]) -> Vec<f64> {
    (0..parts[0].len()).map(|j| parts.iter().map(|p| p[j]).sum()).collect()
}

/// Runs an LSTM whose state-to-gate matrices are the order-0 DoS weights.
///
/// Gates: `i, f = σ(W s_{t-1} + W z_{t-1} + W x_t + b)`,
/// `o = σ(W_os s_t + W_oz z_{t-1} + W_ox x_t + b_o)`; state
/// `s_t = f s_{t-1} + i tanh(W_sz z_{t-1} + W_sx x_t + b_s)`; output
/// `z_t = o tanh(W_zs s_t + b_z)`.
pub fn lstm_forward(xs: &[Vec<f64>], p: &CellParams) -> Vec<Vec<f64>> {
    let (m, k) = (p.state_dim(), p.output_dim());
    let mut s = vec![0.0; m];
    let mut z = vec![0.0; k];
    let mut out = Vec::new();
    for x in xs {
        let gate = |w_s: &Matrix, w_z: &Matrix, w_x: &Matrix, b: &Matrix, state: &[f64]| -> Vec<f64> {
            add(&[b.as_slice().to_vec(), matvec(w_s, state), matvec(w_z, &z), matvec(w_x, x)])
                .into_iter()
                .map(sig)
                .collect()
        };
        let i = gate(&p.w_id[0], &p.w_iz, &p.w_ix, &p.b_i, &s);
        let f = gate(&p.w_fd[0], &p.w_fz, &p.w_fx, &p.b_f, &s);
        let cand: Vec<f64> = add(&[p.b_s.as_slice().to_vec(), matvec(&p.w_sz, &z), matvec(&p.w_sx, x)])
            .into_iter()
            .map(f64::tanh)
            .collect();
        let s_new: Vec<f64> = (0..m).map(|j| f[j] * s[j] + i[j] * cand[j]).collect();
        let o = gate(&p.w_od[0], &p.w_oz, &p.w_ox, &p.b_o, &s_new);
        let h = add(&[p.b_z.as_slice().to_vec(), matvec(&p.w_zs, &s_new)]);
        z = (0..k).map(|j| o[j] * h[j].tanh()).collect();
        s = s_new;
        out.push(z.clone());
    }
    out
}
