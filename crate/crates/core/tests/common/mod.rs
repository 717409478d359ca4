//! Dense reference assemblies built without the library's grid machinery.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;

pub fn pr(p2: f64, m: f64) -> f64 {
    (p2 + m * m).sqrt() - m
}

pub fn nr(p2: f64, m: f64) -> f64 {
    p2 / (2.0 * m)
}

/// Fiber problem of `masses.len()` particles in momentum-lattice basis.
pub struct Dense {
    pub masses: Vec<f64>,
    pub d: usize,
    pub n: usize,
    pub l: f64,
    pub p: Vec<f64>,
    /// Lattice vectors of the non-reference particles, one row per basis state.
    pub states: Vec<Vec<i64>>,
}

fn wrap(i: i64, n: i64) -> i64 {
    let r = i.rem_euclid(n);
    if r >= n / 2 {
        r - n
    } else {
        r
    }
}

impl Dense {
    pub fn new(masses: &[f64], d: usize, n: usize, l: f64, p: &[f64]) -> Self {
        let axes = (masses.len() - 1) * d;
        let total = n.pow(axes as u32);
        let states = (0..total)
            .map(|mut f| {
                let mut v = vec![0i64; axes];
                for a in (0..axes).rev() {
                    v[a] = wrap((f % n) as i64, n as i64);
                    f /= n;
                }
                v
            })
            .collect();
        Self {
            masses: masses.to_vec(),
            d,
            n,
            l,
            p: p.to_vec(),
            states,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    fn index(&self, v: &[i64]) -> usize {
        let n = self.n as i64;
        v.iter().fold(0usize, |acc, &x| acc * self.n + x.rem_euclid(n) as usize)
    }

    /// All lattice vectors including the reference particle's.
    fn full(&self, s: &[i64]) -> Vec<Vec<i64>> {
        let n = self.n as i64;
        let mut out = Vec::new();
        let mut reference = vec![0i64; self.d];
        for j in 0..self.masses.len() - 1 {
            let kj: Vec<i64> = s[j * self.d..(j + 1) * self.d].to_vec();
            for a in 0..self.d {
                reference[a] -= kj[a];
            }
            out.push(kj);
        }
        let reference: Vec<i64> = reference.iter().map(|&x| wrap(x, n)).collect();
        out.insert(0, reference);
        out
    }

    pub fn kinetic(&self, law: fn(f64, f64) -> f64) -> Vec<f64> {
        let total_mass: f64 = self.masses.iter().sum();
        self.states
            .iter()
            .map(|s| {
                self.full(s)
                    .iter()
                    .zip(&self.masses)
                    .map(|(k, &m)| {
                        let p2: f64 = (0..self.d)
                            .map(|a| {
                                let p = 2.0 * PI / self.l * k[a] as f64 + m / total_mass * self.p[a];
                                p * p
                            })
                            .sum();
                        law(p2, m)
                    })
                    .sum()
            })
            .collect()
    }

    /// `V` as a function of the non-reference coordinate indices.
    pub fn potential(&self, pair: &dyn Fn(usize, usize, f64) -> f64) -> Vec<f64> {
        let h = self.l / self.n as f64;
        let n = self.n as i64;
        let s = self.masses.len();
        (0..self.len())
            .map(|f| {
                let mut x = vec![0i64; (s - 1) * self.d];
                let mut g = f;
                for a in (0..x.len()).rev() {
                    x[a] = (g % self.n) as i64;
                    g /= self.n;
                }
                let pos = |j: usize| -> Vec<i64> {
                    if j == 0 {
                        vec![0; self.d]
                    } else {
                        x[(j - 1) * self.d..j * self.d].to_vec()
                    }
                };
                let mut v = 0.0;
                for a in 0..s {
                    for b in a + 1..s {
                        let (pa, pb) = (pos(a), pos(b));
                        let r2: f64 = (0..self.d)
                            .map(|c| {
                                let dx = wrap(pa[c] - pb[c], n) as f64 * h;
                                dx * dx
                            })
                            .sum();
                        v += pair(a, b, r2.sqrt());
                    }
                }
                v
            })
            .collect()
    }

    /// `T + F V F^dagger` in the momentum basis.
    pub fn hamiltonian(&self, law: fn(f64, f64) -> f64, pair: &dyn Fn(usize, usize, f64) -> f64) -> DMatrix<Complex64> {
        let t = self.kinetic(law);
        let v = self.potential(pair);
        let dim = self.len();
        let n = self.n as i64;
        // coordinate index vectors in the same flat order
        let coords: Vec<Vec<i64>> = self.states.iter().map(|s| s.iter().map(|&x| x.rem_euclid(n)).collect()).collect();
        let norm = 1.0 / dim as f64;
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        // <k|V|k'> = (1/dim) sum_x V(x) exp(-i (k - k').x 2pi/N)
        for (a, ka) in self.states.iter().enumerate() {
            for (b, kb) in self.states.iter().enumerate().skip(a) {
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, vx) in coords.iter().zip(&v) {
                    if *vx == 0.0 {
                        continue;
                    }
                    let phase: i64 = ka.iter().zip(kb).zip(x).map(|((p, q), y)| (p - q) * y).sum();
                    acc += Complex64::from_polar(*vx, -2.0 * PI * phase.rem_euclid(n) as f64 / n as f64);
                }
                acc *= norm;
                h[(a, b)] = acc;
                h[(b, a)] = acc.conj();
            }
            h[(a, a)] += Complex64::new(t[a], 0.0);
        }
        h
    }

    /// Permutation `sigma` of all particles (0 = reference) as a basis map.
    pub fn permutation(&self, sigma: &[usize]) -> Vec<usize> {
        self.states
            .iter()
            .map(|s| {
                let full = self.full(s);
                let image: Vec<i64> = (1..self.masses.len()).flat_map(|j| full[sigma[j]].clone()).collect();
                self.index(&image)
            })
            .collect()
    }

    /// `(1/n!) sum sign^parity T_sigma` over all permutations of identical particles.
    pub fn symmetrizer(&self, antisymmetric: bool) -> DMatrix<Complex64> {
        let s = self.masses.len();
        let perms = all_permutations(s);
        let dim = self.len();
        let mut out = DMatrix::<Complex64>::zeros(dim, dim);
        let w = 1.0 / perms.len() as f64;
        for sigma in &perms {
            let sign = if antisymmetric && parity(sigma) { -1.0 } else { 1.0 };
            for (i, j) in self.permutation(sigma).into_iter().enumerate() {
                out[(j, i)] += Complex64::new(sign * w, 0.0);
            }
        }
        out
    }
}

pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in all_permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn parity(p: &[usize]) -> bool {
    let mut odd = false;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                odd = !odd;
            }
        }
    }
    odd
}

pub fn eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Spectrum of `H` on `range(P)`: other directions are pushed up by `shift`.
pub fn sector_eigenvalues(h: &DMatrix<Complex64>, p: &DMatrix<Complex64>, shift: f64) -> Vec<f64> {
    let dim = h.nrows();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let m = p * h * p + (&id - p) * Complex64::new(shift, 0.0);
    eigenvalues(m).into_iter().filter(|&e| e < shift * 0.5).collect()
}

pub fn gaussian(strength: f64, range: f64) -> impl Fn(usize, usize, f64) -> f64 {
    move |_, _, r| strength * (-(r * r) / (range * range)).exp()
}

/// Lowest symmetric pair energy of two mass-1 particles in a gaussian well.
pub fn pair_ground(strength: f64, n: usize, l: f64, p: f64) -> f64 {
    let dense = Dense::new(&[1.0, 1.0], 1, n, l, &[p]);
    let h = dense.hamiltonian(pr, &gaussian(strength, 1.0));
    let sym = dense.symmetrizer(false);
    sector_eigenvalues(&h, &sym, 1e3)[0]
}
