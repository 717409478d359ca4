//! Matrix-free lowest eigenpairs of a Hermitian operator on a symmetry subspace.
//!
//! Block Davidson iteration: every basis vector is passed through the
//! supplied projector before orthogonalisation, so the Rayleigh-Ritz problem
//! lives entirely inside `range(P)`. Residuals are preconditioned by the
//! operator's own approximate inverse (the kinetic multiplier for fiber
//! Hamiltonians) and the basis is thick-restarted from the current Ritz block.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier_grid::{dot, norm, FiberHamiltonian, SymmetryProjector, C64};

/// Hermitian operator applied without forming a matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
    /// Approximates `(A - shift)^{-1} r` in place. The default leaves `r` unchanged.
    fn precondition(&self, r: &mut [C64], shift: f64) {
        let _ = (r, shift);
    }
}

/// Orthogonal projector commuting with the operator.
pub trait Projection: Sync {
    fn project(&self, x: &[C64], y: &mut [C64]);
}

pub struct IdentityProjection;

impl Projection for IdentityProjection {
    fn project(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
    }
}

impl Projection for SymmetryProjector {
    fn project(&self, x: &[C64], y: &mut [C64]) {
        self.apply(x, y);
    }
}

impl LinearOperator for FiberHamiltonian {
    fn dim(&self) -> usize {
        self.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_into(x, y);
    }

    fn precondition(&self, r: &mut [C64], shift: f64) {
        self.precondition_kinetic(r, shift, PRECONDITIONER_FLOOR);
    }
}

const PRECONDITIONER_FLOOR: f64 = 0.05;

/// Real diagonal operator.
pub struct DiagonalOperator(pub Vec<f64>);

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for ((out, v), d) in y.iter_mut().zip(x).zip(&self.0) {
            *out = v * *d;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    /// Residual tolerance relative to `max(1, |lambda|)`.
    pub tol: f64,
    pub max_applications: usize,
    pub seed: u64,
    /// Additional block vectors beyond the requested count.
    pub extra_block: usize,
    /// Basis size that triggers a restart (0 picks a default from the block size).
    pub max_basis: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_applications: 10_000,
            seed: 42,
            extra_block: 2,
            max_basis: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    pub applications: usize,
    pub converged: bool,
}

struct Basis {
    vectors: Vec<Vec<C64>>,
    images: Vec<Vec<C64>>,
    gram: Vec<Vec<C64>>,
}

impl Basis {
    fn new() -> Self {
        Self {
            vectors: Vec::new(),
            images: Vec::new(),
            gram: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.vectors.len()
    }

    /// Orthogonalises `v` against the basis (two passes); returns false if nothing is left.
    fn orthogonalize(&self, v: &mut [C64]) -> bool {
        let start = norm(v);
        if start == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in &self.vectors {
                let c = dot(b, v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let left = norm(v);
        if left <= 1e-10 * start || left == 0.0 {
            return false;
        }
        let inv = 1.0 / left;
        v.iter_mut().for_each(|x| *x *= inv);
        true
    }

    fn push(&mut self, v: Vec<C64>, hv: Vec<C64>) {
        let m = self.len();
        for (i, row) in self.gram.iter_mut().enumerate() {
            row.push(dot(&self.vectors[i], &hv));
        }
        let mut last: Vec<C64> = (0..m).map(|i| self.gram[i][m].conj()).collect();
        last.push(C64::new(dot(&v, &hv).re, 0.0));
        self.gram.push(last);
        self.vectors.push(v);
        self.images.push(hv);
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<C64>) {
        let m = self.len();
        let mut g = DMatrix::<C64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                // average with the conjugate transpose to remove rounding asymmetry
                g[(i, j)] = (self.gram[i][j] + self.gram[j][i].conj()) * 0.5;
            }
        }
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    fn combine(&self, source: &[Vec<C64>], coeffs: &DMatrix<C64>, col: usize) -> Vec<C64> {
        let n = source[0].len();
        let mut out = vec![C64::default(); n];
        for (j, v) in source.iter().enumerate() {
            let c = coeffs[(j, col)];
            if c == C64::default() {
                continue;
            }
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        out
    }
}

/// The `k` lowest eigenpairs of `op` restricted to `range(proj)`.
pub fn lowest_eigenpairs(
    op: &dyn LinearOperator,
    proj: &dyn Projection,
    k: usize,
    options: &EigenOptions,
) -> Result<EigenResult> {
    if k == 0 {
        return Err(Error::Config("requested zero eigenpairs".into()));
    }
    if !(options.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {}", options.tol)));
    }
    let n = op.dim();
    let block = (k + options.extra_block).min(n);
    let max_basis = if options.max_basis > 0 {
        options.max_basis.max(2 * block)
    } else {
        (6 * block).max(40).min(n)
    }
    .max(block);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut basis = Basis::new();
    let mut applications = 0usize;
    let mut scratch = vec![C64::default(); n];

    let mut attempts = 0;
    while basis.len() < block && attempts < 4 * block {
        attempts += 1;
        let raw: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut v = vec![C64::default(); n];
        proj.project(&raw, &mut v);
        if norm(&v) <= 1e-10 * norm(&raw) {
            continue;
        }
        if basis.orthogonalize(&mut v) {
            let mut hv = vec![C64::default(); n];
            op.apply(&v, &mut hv);
            applications += 1;
            basis.push(v, hv);
        }
    }
    if basis.len() == 0 {
        return Err(Error::EmptySubspace {
            context: "projector annihilates every random probe".into(),
        });
    }

    loop {
        let (theta, coeffs) = basis.ritz();
        let m = basis.len();
        let active = block.min(m);
        let mut ritz_vectors = Vec::with_capacity(active);
        let mut ritz_images = Vec::with_capacity(active);
        let mut residuals = Vec::with_capacity(active);
        let mut residual_norms = Vec::with_capacity(active);
        for i in 0..active {
            let x = basis.combine(&basis.vectors, &coeffs, i);
            let hx = basis.combine(&basis.images, &coeffs, i);
            let r: Vec<C64> = hx.iter().zip(&x).map(|(h, v)| h - v * theta[i]).collect();
            residual_norms.push(norm(&r));
            ritz_vectors.push(x);
            ritz_images.push(hx);
            residuals.push(r);
        }
        let wanted = k.min(active);
        let converged_flags: Vec<bool> = (0..active)
            .map(|i| residual_norms[i] <= options.tol * theta[i].abs().max(1.0))
            .collect();
        if converged_flags[..wanted].iter().all(|&c| c) {
            return Ok(finish(proj, &theta, ritz_vectors, &residual_norms, wanted, applications, true));
        }
        if applications >= options.max_applications {
            let best = residual_norms[..wanted].iter().cloned().fold(0.0, f64::max);
            return Err(Error::NotConverged {
                applications,
                best_residual: best,
            });
        }

        if m + active > max_basis {
            // thick restart from the Ritz block
            let mut fresh = Basis::new();
            for (x, hx) in ritz_vectors.iter().zip(&ritz_images) {
                let mut v = x.clone();
                if fresh.orthogonalize(&mut v) {
                    // recompute the image only if orthogonalisation changed the vector noticeably
                    let drift: f64 = v.iter().zip(x).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                    let hv = if drift < 1e-12 {
                        hx.clone()
                    } else {
                        op.apply(&v, &mut scratch);
                        applications += 1;
                        scratch.clone()
                    };
                    fresh.push(v, hv);
                }
            }
            basis = fresh;
        }

        let mut added = 0;
        for i in 0..active {
            if converged_flags[i] {
                continue;
            }
            let mut t = residuals[i].clone();
            op.precondition(&mut t, theta[i]);
            let mut v = vec![C64::default(); n];
            proj.project(&t, &mut v);
            if !basis.orthogonalize(&mut v) {
                continue;
            }
            let mut hv = vec![C64::default(); n];
            op.apply(&v, &mut hv);
            applications += 1;
            basis.push(v, hv);
            added += 1;
        }
        if added == 0 {
            // the basis spans an invariant subspace of range(P)
            let (theta, coeffs) = basis.ritz();
            let m = basis.len();
            let take = k.min(m);
            let mut vecs = Vec::with_capacity(take);
            let mut res = Vec::with_capacity(take);
            for i in 0..take {
                let x = basis.combine(&basis.vectors, &coeffs, i);
                let hx = basis.combine(&basis.images, &coeffs, i);
                let r: Vec<C64> = hx.iter().zip(&x).map(|(h, v)| h - v * theta[i]).collect();
                res.push(norm(&r));
                vecs.push(x);
            }
            let ok = (0..take).all(|i| res[i] <= options.tol * theta[i].abs().max(1.0));
            if !ok {
                return Err(Error::NotConverged {
                    applications,
                    best_residual: res.iter().cloned().fold(0.0, f64::max),
                });
            }
            return Ok(finish(proj, &theta, vecs, &res, take, applications, true));
        }
    }
}

fn finish(
    proj: &dyn Projection,
    theta: &[f64],
    vectors: Vec<Vec<C64>>,
    residuals: &[f64],
    take: usize,
    applications: usize,
    converged: bool,
) -> EigenResult {
    let mut eigenvectors = Vec::with_capacity(take);
    for x in vectors.into_iter().take(take) {
        let mut y = vec![C64::default(); x.len()];
        proj.project(&x, &mut y);
        let nrm = norm(&y);
        y.iter_mut().for_each(|v| *v /= nrm);
        eigenvectors.push(y);
    }
    EigenResult {
        eigenvalues: theta[..take].to_vec(),
        eigenvectors,
        residuals: residuals[..take].to_vec(),
        applications,
        converged,
    }
}

/// Groups indices of (ascending) eigenvalues whose consecutive gaps are
/// at most `rel_tol * max(1, |lambda|)`.
pub fn degeneracy_cluster(result: &EigenResult, rel_tol: f64) -> Vec<Vec<usize>> {
    group_levels(&result.eigenvalues, rel_tol)
}

pub fn group_levels(values: &[f64], rel_tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if {
                let prev = values[*g.last().unwrap()];
                (v - prev).abs() <= rel_tol * prev.abs().max(v.abs()).max(1.0)
            } =>
            {
                g.push(i)
            }
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Default relative tolerance for grouping degenerate eigenvalues.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
