//! Rank and kernel computations with explicit spectral-gap diagnostics.
//!
//! Every rank decision in the cohomology layer flows through
//! [`rank_with_gap`], which records the singular-value gap at the cut. A gap
//! below 10x the threshold means the rank is numerically ambiguous; callers
//! attach the warning to their results instead of silently committing.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Minimum ratio sigma_r / sigma_{r+1} across the rank cut under which a
/// precision warning is raised.
pub const GAP_WARNING_FACTOR: f64 = 10.0;

/// Outcome of a rank decision on a singular-value profile.
#[derive(Clone, Debug)]
pub struct RankDecision {
    pub rank: usize,
    /// Ratio across the cut: smallest kept / largest dropped (infinite when
    /// nothing is dropped or everything kept is zero-free).
    pub gap_ratio: f64,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
    /// Present when the gap ratio is below [`GAP_WARNING_FACTOR`].
    pub warning: Option<String>,
}

/// Decides the numerical rank from sorted-descending singular values. The
/// threshold is relative to the largest singular value with an absolute
/// floor of `rel_tol` itself: a matrix whose largest singular value is pure
/// roundoff must come out as rank zero, not full rank. Callers keep inputs
/// O(1)-scaled (orthogonal and identity blocks), which makes the floor safe.
pub fn rank_with_gap(singular_values: &[f64], rel_tol: f64) -> RankDecision {
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let threshold = rel_tol * sigma_max.max(1.0);
    let rank = singular_values.iter().take_while(|&&s| s > threshold).count();
    let gap_ratio = if rank == 0 || rank == singular_values.len() {
        f64::INFINITY
    } else {
        let kept = singular_values[rank - 1];
        let dropped = singular_values[rank];
        if dropped == 0.0 {
            f64::INFINITY
        } else {
            kept / dropped
        }
    };
    let warning = if gap_ratio < GAP_WARNING_FACTOR {
        Some(format!(
            "rank decision is fragile: singular-value gap {:.3e} across the cut at rank {} \
             (threshold {:.3e})",
            gap_ratio, rank, threshold
        ))
    } else {
        None
    };
    RankDecision { rank, gap_ratio, threshold, singular_values: singular_values.to_vec(), warning }
}

/// Max reconstruction residual, relative to max(1, sigma_max), accepted from
/// the bidiagonalization SVD before falling back to the Jacobi path.
const SVD_RESIDUAL_BOUND: f64 = 1e-10;

fn sort_svd(
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).expect("finite singular values"));
    let sigma_sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let u_sorted = DMatrix::from_columns(&order.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
    let v_sorted = DMatrix::from_columns(&order.iter().map(|&i| v.column(i)).collect::<Vec<_>>());
    (u_sorted, sigma_sorted, v_sorted)
}

fn reconstruction_residual(
    m: &DMatrix<f64>,
    u: &DMatrix<f64>,
    sigma: &[f64],
    v: &DMatrix<f64>,
) -> f64 {
    let mut scaled = u.clone();
    for (j, s) in sigma.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*s);
    }
    (m - scaled * v.transpose()).amax()
}

/// Full SVD with singular values sorted descending and U/V columns permuted to
/// match. Returns (u, sigma, v) with `m = u * diag(sigma) * v^T`.
///
/// The bidiagonalization SVD can return orthonormal but wrong factors on
/// spectra with repeated singular values, so the factorization is accepted
/// only when it reproduces the matrix; otherwise one-sided Jacobi takes over.
fn svd_sorted(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let (u, sigma, v) = sort_svd(u, sigma, vt.transpose());
    let scale = sigma.first().copied().unwrap_or(0.0).max(1.0);
    if reconstruction_residual(m, &u, &sigma, &v) <= SVD_RESIDUAL_BOUND * scale {
        return (u, sigma, v);
    }
    jacobi_svd_sorted(m)
}

/// One-sided Jacobi SVD: right rotations orthogonalize the columns, so
/// `a v = u diag(sigma)` with sigma the final column norms. Slower than
/// bidiagonalization but immune to clustered-spectrum convergence failures.
fn jacobi_svd_sorted(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let wide = m.nrows() < m.ncols();
    let mut a = if wide { m.transpose() } else { m.clone() };
    let rows = a.nrows();
    let n = a.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    let gate = f64::EPSILON * rows.max(n) as f64;
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let app = a.column(p).norm_squared();
                let aqq = a.column(q).norm_squared();
                let apq = a.column(p).dot(&a.column(q));
                if apq.abs() <= gate * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).expect("finite norms"));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = DMatrix::zeros(rows, n);
    let mut zero_slots = Vec::new();
    for (out, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.set_column(out, &(a.column(j) / norms[j]));
        } else {
            zero_slots.push(out);
        }
    }
    if !zero_slots.is_empty() {
        // Keep U orthonormal even past the rank: callers index V past the
        // rank for kernels, and on wide inputs that V is this U.
        let present: Vec<_> =
            (0..n).filter(|j| !zero_slots.contains(j)).map(|j| u.column(j).into_owned()).collect();
        let existing = if present.is_empty() {
            DMatrix::zeros(rows, 0)
        } else {
            DMatrix::from_columns(&present.iter().map(|c| c.column(0)).collect::<Vec<_>>())
        };
        let complement = orthonormal_complement(&existing, rows);
        for (slot, filler) in zero_slots.iter().zip(0..complement.ncols()) {
            u.set_column(*slot, &complement.column(filler));
        }
    }
    let v_sorted = DMatrix::from_columns(&order.iter().map(|&j| v.column(j)).collect::<Vec<_>>());
    if wide {
        (v_sorted, sigma, u)
    } else {
        (u, sigma, v_sorted)
    }
}

/// Orthonormal basis of the right null space of `m` (kernel), with the rank
/// decision that produced it. A matrix with zero rows has full kernel.
pub fn kernel_basis(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, RankDecision) {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        let decision = RankDecision {
            rank: 0,
            gap_ratio: f64::INFINITY,
            threshold: 0.0,
            singular_values: Vec::new(),
            warning: None,
        };
        return (DMatrix::identity(cols, cols), decision);
    }
    let (_, sigma, v) = svd_sorted(m);
    let decision = rank_with_gap(&sigma, rel_tol);
    let kernel_dim = cols - decision.rank;
    let mut basis = DMatrix::zeros(cols, kernel_dim);
    // Singular vectors beyond the rank, plus columns SVD never produced
    // (when rows < cols the thin SVD only yields `rows` right vectors; the
    // remainder is completed by orthogonalizing against what exists).
    let produced = v.ncols();
    let mut count = 0;
    for j in decision.rank..produced {
        basis.set_column(count, &v.column(j));
        count += 1;
    }
    if count < kernel_dim {
        // Complete the basis: orthonormal complement of the produced right
        // singular vectors.
        let complement = orthonormal_complement(&v.columns(0, produced).into_owned(), cols);
        for j in 0..complement.ncols() {
            if count == kernel_dim {
                break;
            }
            basis.set_column(count, &complement.column(j));
            count += 1;
        }
    }
    debug_assert_eq!(count, kernel_dim);
    (basis, decision)
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space_basis(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, RankDecision) {
    if m.nrows() == 0 || m.ncols() == 0 {
        let decision = RankDecision {
            rank: 0,
            gap_ratio: f64::INFINITY,
            threshold: 0.0,
            singular_values: Vec::new(),
            warning: None,
        };
        return (DMatrix::zeros(m.nrows(), 0), decision);
    }
    let (u, sigma, _) = svd_sorted(m);
    let decision = rank_with_gap(&sigma, rel_tol);
    (u.columns(0, decision.rank).into_owned(), decision)
}

/// Orthonormal basis of the left null space (cokernel) of `m`: vectors y with
/// y^T m = 0.
pub fn left_nullspace_basis(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, RankDecision) {
    let (basis, decision) = kernel_basis(&m.transpose(), rel_tol);
    (basis, decision)
}

/// Rank decision for a matrix, without materializing any basis.
pub fn matrix_rank(m: &DMatrix<f64>, rel_tol: f64) -> RankDecision {
    if m.nrows() == 0 || m.ncols() == 0 {
        return RankDecision {
            rank: 0,
            gap_ratio: f64::INFINITY,
            threshold: 0.0,
            singular_values: Vec::new(),
            warning: None,
        };
    }
    let (_, sigma, _) = svd_sorted(m);
    rank_with_gap(&sigma, rel_tol)
}

/// Orthonormal basis of the orthogonal complement of span(cols) inside R^dim,
/// computed by Gram-Schmidt against the identity.
pub fn orthonormal_complement(cols: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    debug_assert_eq!(cols.nrows(), dim);
    let mut kept: Vec<nalgebra::DVector<f64>> = Vec::new();
    let existing: Vec<nalgebra::DVector<f64>> =
        (0..cols.ncols()).map(|j| cols.column(j).into_owned()).collect();
    for i in 0..dim {
        let mut v = nalgebra::DVector::zeros(dim);
        v[i] = 1.0;
        for b in existing.iter().chain(kept.iter()) {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        // Re-orthogonalize once for numerical hygiene.
        for b in existing.iter().chain(kept.iter()) {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            kept.push(v / norm);
        }
        if kept.len() == dim - cols.ncols() {
            break;
        }
    }
    DMatrix::from_columns(&kept.iter().map(|v| v.column(0)).collect::<Vec<_>>())
}

/// Singular values of a complex matrix via the real embedding
/// [[X, -Y], [Y, X]], whose spectrum doubles each complex singular value.
pub fn complex_singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut real = DMatrix::zeros(2 * rows, 2 * cols);
    for i in 0..rows {
        for j in 0..cols {
            let z: Complex<f64> = m[(i, j)];
            real[(i, j)] = z.re;
            real[(i, j + cols)] = -z.im;
            real[(i + rows, j)] = z.im;
            real[(i + rows, j + cols)] = z.re;
        }
    }
    let mut sigma: Vec<f64> = real.svd(false, false).singular_values.iter().copied().collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    // Values come in equal pairs; keep every other one.
    sigma.into_iter().step_by(2).collect()
}
