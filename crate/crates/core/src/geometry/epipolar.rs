//! Essential-matrix construction, the normalized eight-point solver, and
//! pose recovery by decomposition with a cheirality vote.

use alloc::vec::Vec;
use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use super::{Camera, GeometryError, RelativePose};
use crate::matchset::Correspondence;

/// Cross-product matrix `[t]x` such that `[t]x v = t × v`.
fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// Essential matrix `E = [t]x R` of a pose, normalized to `||E||_F = sqrt(2)`.
///
/// Satisfies `x2^T E x1 = 0` for normalized projections `x1, x2` of the
/// same 3D point under `X2 = R X1 + t`.
pub fn essential_from_pose(pose: &RelativePose) -> Matrix3<f64> {
    let e = skew(&pose.translation) * pose.rotation;
    let scale = core::f64::consts::SQRT_2 / e.norm();
    e * scale
}

/// Pixel -> normalized camera coordinates, each endpoint through its own
/// camera.
pub fn normalize_match(c: &Correspondence, cam1: &Camera, cam2: &Camera) -> Correspondence {
    let (x, y) = cam1.normalize(c.x, c.y);
    let (xp, yp) = cam2.normalize(c.xp, c.yp);
    Correspondence::new(x, y, xp, yp)
}

/// Inverse of [`normalize_match`].
pub fn denormalize_match(c: &Correspondence, cam1: &Camera, cam2: &Camera) -> Correspondence {
    let (x, y) = cam1.denormalize(c.x, c.y);
    let (xp, yp) = cam2.denormalize(c.xp, c.yp);
    Correspondence::new(x, y, xp, yp)
}

/// Squared first-order geometric (Sampson) error of a normalized
/// correspondence under an essential matrix.
///
/// `(x'^T E x)^2 / ((Ex)_1^2 + (Ex)_2^2 + (E^T x')_1^2 + (E^T x')_2^2)`.
/// A zero denominator means the match is undecidable; `+inf` is returned
/// so threshold tests treat it as an outlier.
pub fn sampson_distance(e: &Matrix3<f64>, c: &Correspondence) -> f64 {
    let x = Vector3::new(c.x, c.y, 1.0);
    let xp = Vector3::new(c.xp, c.yp, 1.0);
    let ex = e * x;
    let etxp = e.transpose() * xp;
    let num = xp.dot(&ex);
    let denom = ex.x * ex.x + ex.y * ex.y + etxp.x * etxp.x + etxp.y * etxp.y;
    if denom == 0.0 {
        f64::INFINITY
    } else {
        num * num / denom
    }
}

/// Isotropic (Hartley) normalizing transform: centroid to the origin,
/// mean distance sqrt(2). Errors when all points coincide.
fn hartley_transform(points: &[(f64, f64)]) -> Result<Matrix3<f64>, GeometryError> {
    let n = points.len() as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for &(x, y) in points {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    let mut mean_dist = 0.0;
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        mean_dist += (dx * dx + dy * dy).sqrt();
    }
    mean_dist /= n;
    if !(mean_dist > 1e-12) {
        return Err(GeometryError::SolverDegenerate);
    }
    let s = core::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0))
}

/// Singular values of a 3x3 SVD sorted descending, with matching column
/// order in `u` and `v`.
fn svd3_sorted(m: &Matrix3<f64>) -> Result<(Matrix3<f64>, Vector3<f64>, Matrix3<f64>), GeometryError> {
    let svd = m
        .try_svd(true, true, f64::EPSILON, 250)
        .ok_or(GeometryError::SolverDegenerate)?;
    let u0 = svd.u.ok_or(GeometryError::SolverDegenerate)?;
    let vt0 = svd.v_t.ok_or(GeometryError::SolverDegenerate)?;
    let s0 = svd.singular_values;

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s0[b].total_cmp(&s0[a]));

    let mut u = Matrix3::zeros();
    let mut v = Matrix3::zeros();
    let mut s = Vector3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u0.column(src));
        v.set_column(dst, &vt0.transpose().column(src));
        s[dst] = s0[src];
    }
    Ok((u, s, v))
}

/// Project a 3x3 matrix onto the normalized essential manifold: singular
/// values replaced by `(s, s, 0)` with `s` the mean of the two largest,
/// and the result rescaled to `||E||_F = sqrt(2)`.
pub fn project_to_essential(m: &Matrix3<f64>) -> Result<Matrix3<f64>, GeometryError> {
    let (u, s, v) = svd3_sorted(m)?;
    let sbar = 0.5 * (s[0] + s[1]);
    if !(sbar > 0.0) || !sbar.is_finite() {
        return Err(GeometryError::SolverDegenerate);
    }
    let e = u * Matrix3::from_diagonal(&Vector3::new(sbar, sbar, 0.0)) * v.transpose();
    let scale = core::f64::consts::SQRT_2 / e.norm();
    Ok(e * scale)
}

/// Normalized eight-point solver on normalized camera coordinates.
///
/// Least-squares solution of the epipolar constraints (with internal
/// Hartley conditioning), projected onto the essential manifold. Errors
/// when fewer than 8 matches are given or the design matrix is
/// rank-deficient (degenerate configuration).
pub fn eight_point(matches: &[Correspondence]) -> Result<Matrix3<f64>, GeometryError> {
    let n = matches.len();
    if n < 8 {
        return Err(GeometryError::NotEnoughMatches { need: 8, got: n });
    }

    let pts1: Vec<(f64, f64)> = matches.iter().map(|c| (c.x, c.y)).collect();
    let pts2: Vec<(f64, f64)> = matches.iter().map(|c| (c.xp, c.yp)).collect();
    let t1 = hartley_transform(&pts1)?;
    let t2 = hartley_transform(&pts2)?;

    // Accumulate A^T A for rows [x'x, x'y, x', y'x, y'y, y', x, y, 1]
    // of the constraint x'^T E x = 0 in conditioned coordinates.
    let mut ata: SMatrix<f64, 9, 9> = SMatrix::zeros();
    for (&(x, y), &(xp, yp)) in pts1.iter().zip(pts2.iter()) {
        let hx = (t1[(0, 0)] * x + t1[(0, 2)], t1[(1, 1)] * y + t1[(1, 2)]);
        let hxp = (t2[(0, 0)] * xp + t2[(0, 2)], t2[(1, 1)] * yp + t2[(1, 2)]);
        let row: SVector<f64, 9> = SVector::from_column_slice(&[
            hxp.0 * hx.0,
            hxp.0 * hx.1,
            hxp.0,
            hxp.1 * hx.0,
            hxp.1 * hx.1,
            hxp.1,
            hx.0,
            hx.1,
            1.0,
        ]);
        ata += row * row.transpose();
    }

    let eig = ata.symmetric_eigen();
    let mut order: Vec<usize> = (0..9).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lambda_max = eig.eigenvalues[order[8]];
    let lambda_second = eig.eigenvalues[order[1]];
    // A one-dimensional null space is expected; a second (near-)zero
    // eigenvalue means the eight constraints do not pin down E.
    if !(lambda_max > 0.0) || lambda_second < 1e-10 * lambda_max {
        return Err(GeometryError::SolverDegenerate);
    }
    let evec = eig.eigenvectors.column(order[0]);

    let e_hat = Matrix3::new(
        evec[0], evec[1], evec[2], evec[3], evec[4], evec[5], evec[6], evec[7], evec[8],
    );
    let e = t2.transpose() * e_hat * t1;
    project_to_essential(&e)
}

/// Depths `(z1, z2)` of the point triangulated from a normalized
/// correspondence under candidate pose `(r, t)`. `None` when the rays are
/// (numerically) parallel.
fn triangulate_depths(
    r: &Matrix3<f64>,
    t: &Vector3<f64>,
    c: &Correspondence,
) -> Option<(f64, f64)> {
    let d1 = Vector3::new(c.x, c.y, 1.0);
    let d2 = Vector3::new(c.xp, c.yp, 1.0);
    let rd1 = r * d1;
    let a = d2.cross(&rd1);
    let denom = a.norm_squared();
    if denom <= 1e-24 * d2.norm_squared() * rd1.norm_squared() {
        return None;
    }
    let z1 = -a.dot(&d2.cross(t)) / denom;
    let x2 = rd1 * z1 + t;
    let z2 = x2.z;
    if z1.is_finite() && z2.is_finite() {
        Some((z1, z2))
    } else {
        None
    }
}

/// Recover the relative pose from an essential matrix by testing the four
/// `(R, t)` candidates with a cheirality vote over the given normalized
/// matches. A tied vote (including "no match triangulates anywhere") is an
/// ambiguous decomposition.
pub fn decompose_essential(
    e: &Matrix3<f64>,
    matches: &[Correspondence],
) -> Result<RelativePose, GeometryError> {
    if matches.is_empty() {
        return Err(GeometryError::NotEnoughMatches { need: 1, got: 0 });
    }
    let (mut u, _s, mut v) = svd3_sorted(e)?;
    if u.determinant() < 0.0 {
        u = -u;
    }
    if v.determinant() < 0.0 {
        v = -v;
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let r1 = u * w * v.transpose();
    let r2 = u * w.transpose() * v.transpose();
    let t: Vector3<f64> = u.column(2).into();

    let candidates = [(r1, t), (r1, -t), (r2, t), (r2, -t)];
    let mut votes = [0usize; 4];
    for (i, (r, tc)) in candidates.iter().enumerate() {
        for c in matches {
            if let Some((z1, z2)) = triangulate_depths(r, tc, c) {
                if z1 > 0.0 && z2 > 0.0 {
                    votes[i] += 1;
                }
            }
        }
    }

    let best = (0..4).max_by_key(|&i| votes[i]).unwrap();
    if votes.iter().filter(|&&v| v == votes[best]).count() > 1 {
        return Err(GeometryError::AmbiguousDecomposition);
    }
    let (r_best, t_best) = candidates[best];
    RelativePose::new(r_best, t_best.normalize())
}
