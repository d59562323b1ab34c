//! PCA by cyclic Jacobi eigendecomposition of the sample covariance.

use std::fmt::Write as _;
use std::path::Path;

use super::io::{keyed, push_floats, Lines};
use crate::error::{Error, Result};
use crate::numeric::Matrix;
use crate::write_atomic;

/// Jacobi stops once the off-diagonal Frobenius norm falls below this
/// fraction of the full Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues below this fraction of the largest count as zero variance.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `D × d`, orthonormal columns sorted by decreasing variance.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    /// Fraction of total variance kept by the selected components.
    pub energy_retained: f64,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.components.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.components.cols()
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues and the matrix whose columns are the matching
/// eigenvectors, both unsorted.
pub(crate) fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let total: f64 = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a.get(p, q).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A ← Jᵀ A J with J the (p, q) rotation
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| a.get(i, i)).collect(), v)
}

fn check_rows(frames: &[Vec<f64>]) -> Result<usize> {
    let dim = frames.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::Degenerate("frames have zero dimension".into()));
    }
    for (index, row) in frames.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::FrameDimension {
                index,
                expected: dim,
                actual: row.len(),
            });
        }
    }
    Ok(dim)
}

/// Fits PCA on stacked rows, keeping the fewest components whose share of
/// the total variance reaches `energy`.
pub fn pca_fit(frames: &[Vec<f64>], energy: f64) -> Result<PcaModel> {
    if !(energy > 0.0 && energy <= 1.0) {
        return Err(Error::InvalidConfig(format!("energy must be in (0, 1], got {energy}")));
    }
    if frames.len() < 2 {
        return Err(Error::Degenerate(format!("PCA needs at least 2 rows, got {}", frames.len())));
    }
    let dim = check_rows(frames)?;
    let rows = frames.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in frames {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows);

    let mut cov = Matrix::zeros(dim, dim);
    for row in frames {
        let centered: Vec<f64> = row.iter().zip(&mean).map(|(x, m)| x - m).collect();
        cov.add_outer(&centered, &centered);
    }
    cov.as_mut_slice().iter_mut().for_each(|c| *c /= rows - 1.0);
    if cov.is_zero() {
        return Err(Error::Degenerate("all rows are identical".into()));
    }

    let (values, vectors) = jacobi_eigen(&cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let largest = values[order[0]];
    let variance: Vec<f64> = order
        .iter()
        .map(|&i| if values[i] > RANK_TOLERANCE * largest { values[i] } else { 0.0 })
        .collect();
    let total: f64 = variance.iter().sum();

    let mut kept = 0;
    let mut cumulative = 0.0;
    while kept < dim {
        cumulative += variance[kept];
        kept += 1;
        if cumulative / total >= energy {
            break;
        }
    }

    let mut components = Matrix::zeros(dim, kept);
    for (c, &i) in order.iter().take(kept).enumerate() {
        let column: Vec<f64> = (0..dim).map(|r| vectors.get(r, i)).collect();
        let pivot = column
            .iter()
            .enumerate()
            .fold(0, |best, (r, v)| if v.abs() > column[best].abs() { r } else { best });
        let sign = if column[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (r, v) in column.iter().enumerate() {
            components.set(r, c, sign * v);
        }
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance: variance[..kept].to_vec(),
        energy_retained: cumulative / total,
    })
}

/// Projects frames onto the components: `(x - mean) · components`.
pub fn pca_transform(model: &PcaModel, frames: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let (dim, kept) = model.components.shape();
    frames
        .iter()
        .enumerate()
        .map(|(index, x)| {
            if x.len() != dim {
                return Err(Error::FrameDimension {
                    index,
                    expected: dim,
                    actual: x.len(),
                });
            }
            let centered: Vec<f64> = x.iter().zip(&model.mean).map(|(a, m)| a - m).collect();
            let mut y = vec![0.0; kept];
            model.components.tmul_vec_acc(&centered, &mut y);
            Ok(y)
        })
        .collect()
}

/// Maps reduced frames back to the input space: `components · y + mean`.
pub fn pca_reconstruct(model: &PcaModel, reduced: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let kept = model.components.cols();
    reduced
        .iter()
        .enumerate()
        .map(|(index, y)| {
            if y.len() != kept {
                return Err(Error::FrameDimension {
                    index,
                    expected: kept,
                    actual: y.len(),
                });
            }
            let mut x = model.mean.clone();
            model.components.mul_vec_acc(y, &mut x);
            Ok(x)
        })
        .collect()
}

/// Writes the model as text: header `DRNNPCA 1`, then mean, variances and
/// component rows.
pub fn save_pca(model: &PcaModel, path: impl AsRef<Path>) -> Result<()> {
    let (dim, kept) = model.components.shape();
    let mut out = String::new();
    writeln!(out, "DRNNPCA 1").unwrap();
    writeln!(out, "dim {dim} components {kept} energy {:.16e}", model.energy_retained).unwrap();
    out.push_str("mean\n");
    push_floats(&mut out, &model.mean);
    out.push_str("explained_variance\n");
    push_floats(&mut out, &model.explained_variance);
    out.push_str("components\n");
    for r in 0..dim {
        push_floats(&mut out, model.components.row(r));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

pub fn load_pca(path: impl AsRef<Path>) -> Result<PcaModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = Lines::new(&text, path);
    let (n, magic) = lines.next("header")?;
    if magic.trim() != "DRNNPCA 1" {
        return Err(lines.error(n, format!("expected header \"DRNNPCA 1\", found {magic:?}")));
    }
    let (n, dims) = lines.next("dimensions")?;
    let tokens: Vec<&str> = dims.split_whitespace().collect();
    let vals = keyed(&lines, n, &tokens, &["dim", "components", "energy"])?;
    let parse = |tok: &str| tok.parse::<usize>().map_err(|_| lines.error(n, format!("invalid count {tok:?}")));
    let dim = parse(vals[0])?;
    let kept = parse(vals[1])?;
    let energy: f64 = vals[2]
        .parse()
        .map_err(|_| lines.error(n, format!("invalid energy {:?}", vals[2])))?;
    if dim == 0 || kept == 0 || kept > dim {
        return Err(lines.error(n, format!("invalid shape {dim}x{kept}")));
    }

    let mut section = |name: &str, len: usize| -> Result<Vec<f64>> {
        let (n, title) = lines.next(name)?;
        if title.trim() != name {
            return Err(lines.error(n, format!("expected section {name:?}")));
        }
        let (n, row) = lines.next(&format!("{name} values"))?;
        lines.floats(n, row, len)
    };
    let mean = section("mean", dim)?;
    let explained_variance = section("explained_variance", kept)?;
    let (n, title) = lines.next("components")?;
    if title.trim() != "components" {
        return Err(lines.error(n, "expected section \"components\""));
    }
    let mut data = Vec::with_capacity(dim * kept);
    for r in 0..dim {
        let (n, row) = lines.next(&format!("component row {}", r + 1))?;
        data.extend(lines.floats(n, row, kept)?);
    }
    Ok(PcaModel {
        mean,
        components: Matrix::from_vec(dim, kept, data)?,
        explained_variance,
        energy_retained: energy,
    })
}
