use super::SafeSet;
use crate::error::SynthesisError;
use crate::grid::GridSpec;

/// Upper and lower edge of a marking in one column of a 2-D grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Boundary {
    /// Center of the column along the first axis.
    pub x: f64,
    /// Center of the topmost marked cell along the second axis.
    pub upper: f64,
    /// Center of the bottommost marked cell.
    pub lower: f64,
    pub mid: f64,
}

/// For each column of `grid` that contains a marked cell, the centers of its
/// topmost and bottommost marked cells and their average.
pub fn extract_boundaries(grid: &GridSpec, marking: &SafeSet) -> Result<Vec<Boundary>, SynthesisError> {
    if grid.dim() != 2 {
        return Err(SynthesisError::NotTwoDimensional);
    }
    let counts = grid.counts();
    let d = grid.diameters();
    let center = |dim: usize, k: usize| grid.axes()[dim].low + (k as f64 + 0.5) * d[dim];
    let mut out = Vec::new();
    for i in 0..counts[0] {
        let marked: Vec<usize> = (0..counts[1]).filter(|&j| marking.contains(i * counts[1] + j)).collect();
        if let (Some(&lo), Some(&hi)) = (marked.first(), marked.last()) {
            let (upper, lower) = (center(1, hi), center(1, lo));
            out.push(Boundary { x: center(0, i), upper, lower, mid: 0.5 * (upper + lower) });
        }
    }
    if out.is_empty() {
        return Err(SynthesisError::Degenerate);
    }
    Ok(out)
}

// Relative pivot tolerance of the normal-equation solve.
const SINGULAR_TOL: f64 = 1e-12;

/// Least-squares coefficients `c` minimizing
/// `sum (y - sum_k c_k x^powers[k])^2` over `points = (x, y)`.
///
/// Columns are scaled to unit norm before forming the normal equations, so
/// the singularity test is independent of the data's magnitude.
pub fn fit_polynomial(points: &[(f64, f64)], powers: &[i32]) -> Result<Vec<f64>, SynthesisError> {
    let k = powers.len();
    if k == 0 || points.len() < k {
        return Err(SynthesisError::SingularFit);
    }
    let column = |j: usize| points.iter().map(move |&(x, _)| x.powi(powers[j]));
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let n = column(j).map(|v| v * v).sum::<f64>().sqrt();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    // augmented normal matrix [A^T A | A^T y] on scaled columns
    let mut m = vec![vec![0.0; k + 1]; k];
    for &(x, y) in points {
        let row: Vec<f64> = (0..k).map(|j| x.powi(powers[j]) / scale[j]).collect();
        for a in 0..k {
            for b in 0..k {
                m[a][b] += row[a] * row[b];
            }
            m[a][k] += row[a] * y;
        }
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .expect("nonempty range");
        if m[pivot][col].abs() <= SINGULAR_TOL {
            return Err(SynthesisError::SingularFit);
        }
        m.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=k {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Ok((0..k).map(|j| m[j][k] / m[j][j] / scale[j]).collect())
}
