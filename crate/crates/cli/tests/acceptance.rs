//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. A criterion also fails when it exceeds
//! its runtime budget.

#[path = "../../core/tests/common/lstm.rs"]
mod lstm;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use drnn::cell::{dos_acceleration, dos_velocity, forward_sequence, CellParams};
use drnn::data::{
    load_dataset, load_pca, nearest_centroid_accuracy, pca_fit, pca_reconstruct, pca_transform, save_dataset,
    save_pca, split_by_subject, subject_ids, synth_spike_dataset, Dataset, Label, LabeledSequence, SpikeConfig,
};
use drnn::numeric::{softmax, Matrix};
use drnn::params_io::{load_params, save_params};
use drnn::training::{evaluate, loss_and_logit_grads, nll_loss, train, LossMode, TrainConfig, TrainOutcome};
use drnn_cli::{run, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Learning rate for the convergence criteria. The default 0.0001 leaves the
/// loss flat over 50 epochs on this task.
const ACCEPTANCE_LR: f64 = 0.01;
const ACCEPTANCE_STATE_DIM: usize = 16;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, detail: String) -> Check {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_frames(rng: &mut ChaCha8Rng, t: usize, n: usize) -> Vec<Vec<f64>> {
    (0..t).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn criterion_1() -> Check {
    let mut r = rng(101);
    let m = 16;
    // Grid points k / 2^20 in [-8, 8]: every sum and difference below is exact.
    let grid = |r: &mut ChaCha8Rng| -> Vec<f64> {
        (0..m)
            .map(|_| r.random_range(-(8i64 << 20)..=(8i64 << 20)) as f64 / (1u64 << 20) as f64)
            .collect()
    };
    for _ in 0..1000 {
        let (s, p, q) = (grid(&mut r), grid(&mut r), grid(&mut r));
        let a = dos_acceleration(&s, &p, &q).unwrap();
        let expanded: Vec<f64> = (0..m).map(|j| s[j] - 2.0 * p[j] + q[j]).collect();
        let v1 = dos_velocity(&s, &p).unwrap();
        let v0 = dos_velocity(&p, &q).unwrap();
        let diff: Vec<f64> = v1.iter().zip(&v0).map(|(x, y)| x - y).collect();
        if bits(&a) != bits(&expanded) || bits(&a) != bits(&diff) {
            return Err("dyadic triple: acceleration differs bitwise".into());
        }
    }
    // Generic doubles (full random mantissa, exponents spread over [2^-8, 2)):
    // the velocity-difference form stays bitwise, the expanded form differs by
    // rounding only.
    let generic = |r: &mut ChaCha8Rng| -> f64 {
        let mantissa = 1.0 + (r.random::<u64>() >> 12) as f64 / (1u64 << 52) as f64;
        let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
        sign * mantissa * 2f64.powi(r.random_range(-8..=0))
    };
    let mut worst: f64 = 0.0;
    let mut rounding_differences = 0;
    for _ in 0..1000 {
        let mut vec = || (0..m).map(|_| generic(&mut r)).collect::<Vec<f64>>();
        let (s, p, q) = (vec(), vec(), vec());
        let a = dos_acceleration(&s, &p, &q).unwrap();
        let v1 = dos_velocity(&s, &p).unwrap();
        let v0 = dos_velocity(&p, &q).unwrap();
        let diff: Vec<f64> = v1.iter().zip(&v0).map(|(x, y)| x - y).collect();
        if bits(&a) != bits(&diff) {
            return Err("generic triple: acceleration is not the velocity difference bitwise".into());
        }
        for j in 0..m {
            let e = (a[j] - (s[j] - 2.0 * p[j] + q[j])).abs();
            if e > 0.0 {
                rounding_differences += 1;
            }
            // each form rounds at most twice, on values bounded by this scale
            let scale = s[j].abs() + 2.0 * p[j].abs() + q[j].abs();
            worst = worst.max(e / scale);
        }
    }
    ensure(
        worst <= 2.0 * f64::EPSILON,
        format!(
            "1000 dyadic triples bitwise equal in both forms; 1000 generic triples: velocity form bitwise, \
             expanded form within {worst:.1e} relative to |s|+2|p|+|q| \
             ({rounding_differences} of 16000 entries differ by rounding)"
        ),
    )
}

fn criterion_2() -> Check {
    let mut r = rng(102);
    let (mut reduction, mut oracle) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let mut p2 = CellParams::random(2, 5, 4, 3, 0.5, &mut r).unwrap();
        for family in [&mut p2.w_id, &mut p2.w_fd, &mut p2.w_od] {
            family[1..].iter_mut().for_each(|w| w.fill(0.0));
        }
        let mut p0 = CellParams::zeros(0, 5, 4, 3).unwrap();
        let shared = p2.tensors().into_iter().filter(|(n, _)| !n.ends_with('1') && !n.ends_with('2'));
        for ((dst_name, dst), (src_name, src)) in p0.tensors_mut().into_iter().zip(shared) {
            assert_eq!(dst_name, src_name);
            *dst = src.clone();
        }
        let xs = random_frames(&mut r, 8, 5);
        let (z2, _) = forward_sequence(&xs, &p2).unwrap();
        let (z0, _) = forward_sequence(&xs, &p0).unwrap();
        reduction = reduction.max(max_abs_diff(&z2, &z0));

        let q = CellParams::random(0, 5, 4, 3, 0.5, &mut r).unwrap();
        let (z, _) = forward_sequence(&xs, &q).unwrap();
        oracle = oracle.max(max_abs_diff(&z, &lstm::lstm_forward(&xs, &q)));
    }
    ensure(
        reduction <= 1e-15 && oracle <= 1e-15,
        format!("order-2 with zero higher DoS vs order 0: {reduction:.1e}; order 0 vs LSTM oracle: {oracle:.1e}"),
    )
}

fn criterion_3() -> Check {
    let report = run(&RunConfig::parse_from(["drnn", "gradcheck"]).unwrap()).map_err(|e| e.to_string())?;
    let rows = report.text.lines().filter(|l| l.starts_with("order=")).count();
    let worst = report
        .text
        .lines()
        .filter_map(|l| l.split_whitespace().find_map(|t| t.strip_prefix("max_rel_error=")))
        .map(|v| v.parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    let corrupted = run(&RunConfig::parse_from(["drnn", "gradcheck", "--corrupt-check", "3"]).unwrap())
        .map_err(|e| e.to_string())?;
    ensure(
        report.success && rows == 12 && !corrupted.success,
        format!(
            "{rows} checks, all pass: {}, worst relative error {worst:.2e}; corrupted row detected: {}",
            report.success, !corrupted.success
        ),
    )
}

fn criterion_4() -> Check {
    let mut r = rng(104);
    let (mut norm_err, mut shift_err, mut grad_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let k = r.random_range(2..10);
        let z: Vec<f64> = (0..k).map(|_| r.random_range(-5.0..5.0)).collect();
        let y = softmax(&z);
        norm_err = norm_err.max((y.iter().sum::<f64>() - 1.0).abs());
        let c = r.random_range(-100.0..100.0);
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        shift_err = shift_err.max(y.iter().zip(softmax(&shifted)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));

        // independent y - onehot from an unshifted softmax
        let class = r.random_range(0..k);
        let exps: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        let sum: f64 = exps.iter().sum();
        let (loss, grads) = loss_and_logit_grads(std::slice::from_ref(&z), &Label::Sequence(class), LossMode::SequenceFinal)
            .map_err(|e| e.to_string())?;
        for (j, g) in grads[0].iter().enumerate() {
            let expected = exps[j] / sum - if j == class { 1.0 } else { 0.0 };
            grad_err = grad_err.max((g - expected).abs());
        }
        if (loss - nll_loss(&y, class).unwrap()).abs() > 1e-12 {
            return Err("composite loss disagrees with nll_loss".into());
        }
    }
    ensure(
        norm_err <= 1e-12 && shift_err <= 1e-12 && grad_err <= 1e-12,
        format!("1000 cases: normalization {norm_err:.1e}, shift {shift_err:.1e}, y - onehot {grad_err:.1e}"),
    )
}

fn spike_config() -> SpikeConfig {
    SpikeConfig::default()
}

fn train_order_one(data: &Dataset) -> drnn::Result<TrainOutcome> {
    train(
        data,
        &TrainConfig {
            order: 1,
            state_dim: ACCEPTANCE_STATE_DIM,
            learning_rate: ACCEPTANCE_LR,
            epochs: 50,
            ..TrainConfig::default()
        },
    )
}

fn criterion_5() -> Check {
    let synth = synth_spike_dataset(&spike_config()).unwrap();
    let outcome = train_order_one(&synth.dataset).map_err(|e| e.to_string())?;
    let curve = &outcome.loss_curve;
    let (first, last) = (curve[0], curve[curve.len() - 1]);
    let moving: Vec<f64> = curve.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
    let tail = &moving[moving.len() - 20..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    ensure(
        curve.len() == 50 && last < 0.5 * first && monotone,
        format!(
            "lr={ACCEPTANCE_LR} state_dim={ACCEPTANCE_STATE_DIM}: first-epoch loss {first:.4}, final {last:.4} \
             (ratio {:.3}), 5-epoch moving average non-increasing over last 20 epochs: {monotone}",
            last / first
        ),
    )
}

/// Epochs for the held-out classification run. With 50 epochs about half
/// of the seeds end in a local minimum that merges two classes.
const CLASSIFICATION_EPOCHS: usize = 150;

/// Held-out accuracy of one split-train-evaluate run; `seed` drives the
/// split, the initialization and the shuffle.
fn held_out_accuracy(data: &Dataset, seed: u64) -> drnn::Result<(f64, Dataset, Dataset)> {
    let (train_set, test_set) = split_by_subject(data, 0.5, seed)?;
    let outcome = train(
        &train_set,
        &TrainConfig {
            order: 1,
            state_dim: ACCEPTANCE_STATE_DIM,
            learning_rate: ACCEPTANCE_LR,
            epochs: CLASSIFICATION_EPOCHS,
            seed,
            shuffle_seed: seed,
            ..TrainConfig::default()
        },
    )?;
    let accuracy = evaluate(&outcome.params, &test_set)?.accuracy;
    Ok((accuracy, train_set, test_set))
}

fn criterion_6() -> Check {
    let synth = synth_spike_dataset(&SpikeConfig {
        num_sequences: 400,
        ..spike_config()
    })
    .unwrap();
    let (accuracy, train_set, test_set) = held_out_accuracy(&synth.dataset, 0).map_err(|e| e.to_string())?;
    let oracle = nearest_centroid_accuracy(&train_set, &test_set).map_err(|e| e.to_string())?;
    // the same run under other seeds, reported but not part of the verdict
    let mut others = Vec::new();
    for seed in 1..5 {
        others.push(held_out_accuracy(&synth.dataset, seed).map_err(|e| e.to_string())?.0);
    }
    let reaching = std::iter::once(&accuracy).chain(&others).filter(|&&a| a >= 0.90).count();
    ensure(
        accuracy >= 0.90 && oracle >= 0.99,
        format!(
            "{} train / {} held-out sequences, lr={ACCEPTANCE_LR} epochs={CLASSIFICATION_EPOCHS}: dRNN accuracy \
             {accuracy:.3}, nearest-centroid oracle {oracle:.3}; seeds 1-4 give {:.3?} ({reaching}/5 seeds reach 0.90)",
            train_set.len(),
            test_set.len(),
            others
        ),
    )
}

fn criterion_7() -> Check {
    let trained = train_order_one(&synth_spike_dataset(&spike_config()).unwrap().dataset).map_err(|e| e.to_string())?;
    let clean = synth_spike_dataset(&SpikeConfig {
        num_sequences: 50,
        noise_sigma: 0.0,
        ..spike_config()
    })
    .unwrap();
    let mut hits = 0;
    for (seq, &spike) in clean.dataset.sequences.iter().zip(&clean.spike_frames) {
        let (_, traces) = forward_sequence(&seq.frames, &trained.params).unwrap();
        let norms: Vec<f64> = traces.iter().map(|tr| tr.v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
        let peak = (0..norms.len()).max_by(|&a, &b| norms[a].total_cmp(&norms[b])).unwrap();
        if peak.abs_diff(spike) <= 1 {
            hits += 1;
        }
    }
    ensure(hits * 10 >= 50 * 9, format!("argmax ||v_t|| within one frame of the spike in {hits}/50 sequences"))
}

/// Classical Jacobi with largest-off-diagonal pivoting, written here
/// independently of the library's cyclic solver.
fn max_pivot_jacobi(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..10_000 {
        let (mut p, mut q, mut big) = (0, 1, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j].abs() > big {
                    (p, q, big) = (i, j, a[i][j].abs());
                }
            }
        }
        if big < 1e-15 {
            break;
        }
        let phi = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
        let (s, c) = phi.sin_cos();
        let rotated = a.clone();
        for k in 0..n {
            a[k][p] = c * rotated[k][p] - s * rotated[k][q];
            a[k][q] = s * rotated[k][p] + c * rotated[k][q];
        }
        let rotated = a.clone();
        for k in 0..n {
            a[p][k] = c * rotated[p][k] - s * rotated[q][k];
            a[q][k] = s * rotated[p][k] + c * rotated[q][k];
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values
}

fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, d) = (rows.len(), rows[0].len());
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n as f64 - 1.0))
                .collect()
        })
        .collect()
}

fn criterion_8() -> Check {
    let mut r = rng(108);
    let basis = random_frames(&mut r, 2, 10);
    let offset: Vec<f64> = (0..10).map(|_| r.random_range(-5.0..5.0)).collect();
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|_| {
            let (a, b): (f64, f64) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            (0..10).map(|j| offset[j] + a * basis[0][j] + b * basis[1][j]).collect()
        })
        .collect();
    let model = pca_fit(&rows, 0.97).map_err(|e| e.to_string())?;
    let back = pca_reconstruct(&model, &pca_transform(&model, &rows).unwrap()).unwrap();
    let recon = max_abs_diff(&rows, &back);

    let (mut jacobi_err, mut nalgebra_err) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let data: Vec<Vec<f64>> = (0..50).map(|_| (0..8).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let fitted = pca_fit(&data, 1.0).map_err(|e| e.to_string())?.explained_variance;
        let cov = covariance(&data);
        let jacobi = max_pivot_jacobi(cov.clone());
        let sym = nalgebra::DMatrix::from_fn(8, 8, |i, j| cov[i][j]);
        let mut eigen: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        eigen.sort_by(|x, y| y.total_cmp(x));
        for j in 0..8 {
            jacobi_err = jacobi_err.max((fitted[j] - jacobi[j]).abs());
            nalgebra_err = nalgebra_err.max((fitted[j] - eigen[j]).abs());
        }
    }
    ensure(
        model.output_dim() == 2 && recon < 1e-10 && jacobi_err <= 1e-8 && nalgebra_err <= 1e-8,
        format!(
            "rank-2 in 10-D: d={} reconstruction error {recon:.1e}; 20 random 50x8 inputs: \
             variances vs Jacobi oracle {jacobi_err:.1e}, vs nalgebra {nalgebra_err:.1e}",
            model.output_dim()
        ),
    )
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn criterion_9() -> Check {
    let sequences = (0..25)
        .flat_map(|s| {
            (0..2).map(move |i| LabeledSequence {
                sequence_id: format!("s{s}-{i}"),
                subject_id: s,
                frames: vec![vec![0.0]],
                label: Label::Sequence(i),
            })
        })
        .collect();
    let ds = Dataset::new(2, 1, sequences).unwrap();
    for seed in 0..20 {
        let (tr, te) = split_by_subject(&ds, 16.0 / 25.0, seed).map_err(|e| e.to_string())?;
        let (a, b): (BTreeSet<i64>, BTreeSet<i64>) =
            (subject_ids(&tr).into_iter().collect(), subject_ids(&te).into_iter().collect());
        if a.len() != 16 || b.len() != 9 || !a.is_disjoint(&b) {
            return Err(format!("seed {seed}: split {}/{}", a.len(), b.len()));
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.txt");
    let out = dir.path().join("eval");
    let synth = synth_spike_dataset(&SpikeConfig {
        num_sequences: 40,
        frames: 6,
        dim: 4,
        classes: 2,
        ..spike_config()
    })
    .unwrap();
    save_dataset(&synth.dataset, &data).unwrap();
    let args = [
        "drnn", "eval", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--trials", "5",
        "--split-fraction", "0.5", "--state-dim", "4", "--epochs", "2", "--lr", "0.01",
    ];
    let report = run(&RunConfig::parse_from(args).unwrap()).map_err(|e| e.to_string())?;
    let trials: Vec<Vec<Vec<f64>>> = (1..=5).map(|t| read_csv(&out.join(format!("trial-{t}.csv")))).collect();
    let mean = read_csv(&out.join("mean_confusion.csv"));
    let mut mean_err: f64 = 0.0;
    for (i, row) in mean.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            let expected = trials.iter().map(|c| c[i][j] / c[i].iter().sum::<f64>()).sum::<f64>() / 5.0;
            mean_err = mean_err.max((m - expected).abs());
        }
    }
    let files = std::fs::read_dir(&out).unwrap().count();
    ensure(
        report.success && mean_err < 1e-12 && report.text.lines().filter(|l| l.starts_with("trial=")).count() == 5,
        format!(
            "16/9 disjoint subject split for 20 seeds; eval --trials 5 wrote {files} files \
             (5 trial matrices, their row-normalized mean, accuracies), mean matches to {mean_err:.1e}"
        ),
    )
}

fn criterion_10() -> Check {
    let mut r = rng(110);
    let dir = tempfile::tempdir().unwrap();
    for i in 0..20 {
        let p = CellParams::random(i % 3, 1 + i % 4, 2 + i % 5, 2 + i % 3, 10f64.powi(i as i32 % 7 - 3), &mut r).unwrap();
        let path = dir.path().join(format!("m{i}.bin"));
        save_params(&p, &path).map_err(|e| e.to_string())?;
        let back = load_params(&path).map_err(|e| e.to_string())?;
        for ((_, a), (_, b)) in p.tensors().into_iter().zip(back.tensors()) {
            if bits(a.as_slice()) != bits(b.as_slice()) {
                return Err(format!("model {i} differs after reload"));
            }
        }
    }
    let mut digits_ok = true;
    for i in 0..20u64 {
        let sequences = (0..5)
            .map(|s| LabeledSequence {
                sequence_id: format!("seq{s}"),
                subject_id: s as i64 - 2,
                frames: (0..3)
                    .map(|_| {
                        (0..4)
                            .map(|_| f64::from_bits(r.random::<u64>() & !(0x7ff << 52) | (r.random_range(1u64..2046) << 52)))
                            .collect()
                    })
                    .collect(),
                label: if s % 2 == 0 { Label::Sequence(s % 3) } else { Label::Frames(vec![0, 2, 1]) },
            })
            .collect();
        let ds = Dataset::new(3, 4, sequences).unwrap();
        let path = dir.path().join(format!("d{i}.txt"));
        save_dataset(&ds, &path).map_err(|e| e.to_string())?;
        let back = load_dataset(&path).map_err(|e| e.to_string())?;
        if back != ds || ds.sequences.iter().zip(&back.sequences).any(|(a, b)| {
            a.frames.iter().flatten().map(|v| v.to_bits()).ne(b.frames.iter().flatten().map(|v| v.to_bits()))
        }) {
            return Err(format!("dataset {i} differs after reload"));
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let sample = text.lines().nth(3).unwrap().split_whitespace().next().unwrap();
        let mantissa = sample.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        digits_ok &= mantissa.len() == 17;
    }
    let rows = random_frames(&mut r, 30, 5);
    let pca = pca_fit(&rows, 0.9).unwrap();
    let pca_path = dir.path().join("p.pca");
    save_pca(&pca, &pca_path).unwrap();
    let pca_back = load_pca(&pca_path).unwrap();
    let pca_ok = pca_back == pca && bits(pca.components.as_slice()) == bits(pca_back.components.as_slice());
    let _: &Matrix = &pca.components;
    ensure(
        digits_ok && pca_ok,
        format!(
            "20 random models and 20 random datasets (arbitrary finite doubles) reload bit-exactly; \
             floats written with 17 significant digits: {digits_ok}; PCA model round trip: {pca_ok}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("discretization identities", Duration::from_secs(1), criterion_1),
        ("order reduction and LSTM equivalence", Duration::from_secs(5), criterion_2),
        ("gradient verification", Duration::from_secs(30), criterion_3),
        ("softmax and loss invariants", Duration::from_secs(1), criterion_4),
        ("training convergence", Duration::from_secs(120), criterion_5),
        ("classification on held-out subjects", Duration::from_secs(120), criterion_6),
        ("DoS saliency", Duration::from_secs(10), criterion_7),
        ("PCA properties", Duration::from_secs(5), criterion_8),
        ("protocol bookkeeping", Duration::from_secs(1), criterion_9),
        ("serialization", Duration::from_secs(5), criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {budget:?} budget")),
            Err(d) => (false, d),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} [{}] {name} ({:.2} s): {detail}",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}/10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
