//! Geometry of orthonormal bases: distance between the rank-one projector
//! sets of two bases, and total incompatibility.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{eigh, same_dim, OrthonormalBasis, C64};

/// Commutators with operator norm at or below this are treated as zero.
pub const COMMUTATION_TOL: f64 = 1e-9;

/// Largest dimension for which matchings are found by trying every permutation.
const EXHAUSTIVE_MATCHING_MAX_DIM: usize = 4;

/// `cost[i][j] = ||P_{b1,i} - P_{b2,j}||`, the operator-norm distance between
/// two rank-one projectors.
///
/// For unit vectors this equals the norm of the part of `b2_j` orthogonal to
/// `b1_i`, which is computed directly to avoid the cancellation in
/// `sqrt(1 - |<u,v>|^2)`.
fn projector_costs(b1: &OrthonormalBasis, b2: &OrthonormalBasis) -> Vec<Vec<f64>> {
    let n = b1.dim();
    let overlaps = b1.overlaps(b2);
    (0..n)
        .map(|i| {
            let u = b1.vector(i);
            (0..n)
                .map(|j| {
                    let v = b2.vector(j);
                    (v - &u * overlaps[(i, j)]).norm()
                })
                .collect()
        })
        .collect()
}

/// Minimum over perfect matchings `pi` of `max_i cost[i][pi(i)]`, together with
/// an optimal matching.
fn bottleneck_matching(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    if n <= EXHAUSTIVE_MATCHING_MAX_DIM {
        exhaustive_matching(cost)
    } else {
        threshold_matching(cost)
    }
}

fn exhaustive_matching(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let worst = p.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max);
        if worst < best.0 {
            best = (worst, p.to_vec());
        }
    });
    best
}

fn permute(p: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Exact bottleneck assignment: the smallest cost threshold admitting a
/// perfect matching, found by scanning the sorted costs and checking with
/// augmenting paths.
fn threshold_matching(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    let mut levels: Vec<f64> = cost.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(cost, levels[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let matching = perfect_matching(cost, levels[lo]).expect("largest level always admits a matching");
    let worst = (0..n).map(|i| cost[i][matching[i]]).fold(0.0, f64::max);
    (worst, matching)
}

fn perfect_matching(cost: &[Vec<f64>], threshold: f64) -> Option<Vec<usize>> {
    let n = cost.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for row in 0..n {
        let mut seen = vec![false; n];
        if !augment(cost, threshold, row, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut matching = vec![0; n];
    for (col, row) in owner.iter().enumerate() {
        matching[row.expect("perfect matching covers every column")] = col;
    }
    Some(matching)
}

fn augment(cost: &[Vec<f64>], threshold: f64, row: usize, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for col in 0..cost.len() {
        if cost[row][col] <= threshold && !seen[col] {
            seen[col] = true;
            if owner[col].is_none_or(|r| augment(cost, threshold, r, seen, owner)) {
                owner[col] = Some(row);
                return true;
            }
        }
    }
    false
}

/// Distance between the rank-one projector sets of two bases, plus the
/// matching realizing it (`matching[i]` is the index in `b2` paired with
/// vector `i` of `b1`).
pub(crate) fn matched_distance(b1: &OrthonormalBasis, b2: &OrthonormalBasis) -> Result<(f64, Vec<usize>)> {
    same_dim(b1.dim(), b2.dim())?;
    Ok(bottleneck_matching(&projector_costs(b1, b2)))
}

/// `min_pi max_i ||P_{b1,i} - P_{b2,pi(i)}||` in operator norm.
///
/// Zero exactly when both bases define the same rank-one projectors; blind to
/// per-vector phases.
pub fn basis_distance(b1: &OrthonormalBasis, b2: &OrthonormalBasis) -> Result<f64> {
    matched_distance(b1, b2).map(|(d, _)| d)
}

/// Subsets of `{0..n}` given as bitmasks, one from each complementary pair,
/// excluding the empty and full sets.
fn half_subsets(n: usize) -> impl Iterator<Item = u32> {
    // Masks that leave out the last index; their complements contain it.
    1..(1u32 << (n - 1))
}

/// Whether two bases are totally incompatible: no projector built from a
/// nontrivial subset of one basis commutes with one built from a nontrivial
/// subset of the other.
///
/// Works in `b1`'s coordinates, where a subset projector `P` is a 0/1 diagonal
/// mask. For any `P'`, `[P, P']` is block off-diagonal with block
/// `X = P P' (I - P)`, so `||[P, P']|| = sigma_max(X)`. Since
/// `||[I - P, P']|| = ||[P, P']||` only one subset from each complementary pair
/// is checked on each side.
pub fn is_totally_incompatible(b1: &OrthonormalBasis, b2: &OrthonormalBasis) -> Result<bool> {
    same_dim(b1.dim(), b2.dim())?;
    let n = b1.dim();
    let overlaps = b1.overlaps(b2);
    for mask2 in half_subsets(n) {
        // P' expressed in b1 coordinates.
        let mut p2 = DMatrix::<C64>::zeros(n, n);
        for j in (0..n).filter(|j| mask2 & (1 << j) != 0) {
            let col = overlaps.column(j);
            p2 += col * col.adjoint();
        }
        for mask1 in half_subsets(n) {
            if commutator_norm_at_most(&p2, mask1, n, COMMUTATION_TOL) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether `sigma_max(P P2 (I-P)) <= tol` for the diagonal mask projector `P`.
fn commutator_norm_at_most(p2: &DMatrix<C64>, mask: u32, n: usize, tol: f64) -> bool {
    let inside: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
    let outside: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
    let mut frob_sq = 0.0;
    for &a in &inside {
        for &b in &outside {
            frob_sq += p2[(a, b)].norm_sqr();
        }
    }
    let frob = frob_sq.sqrt();
    // sigma_max <= ||X||_F, and sigma_max >= ||X||_F / sqrt(rank X).
    if frob <= tol {
        return true;
    }
    let rank_bound = inside.len().min(outside.len()) as f64;
    if frob / rank_bound.sqrt() > tol {
        return false;
    }
    let x = DMatrix::from_fn(inside.len(), outside.len(), |r, c| p2[(inside[r], outside[c])]);
    let (values, _) = eigh(&(&x * x.adjoint()));
    values.last().copied().unwrap_or(0.0).max(0.0).sqrt() <= tol
}
