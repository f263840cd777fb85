//! McMurchie–Davidson Hermite-expansion integrals over contracted Cartesian
//! Gaussians.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::basis::ContractedGaussian;
use super::boys::boys_array;

/// Hermite expansion coefficients E^{ij}_t for one Cartesian direction,
/// indexed `[i][j][t]` with `i ≤ imax`, `j ≤ jmax`.
struct Hermite {
    jdim: usize,
    tdim: usize,
    data: Vec<f64>,
}

impl Hermite {
    fn new(imax: usize, jmax: usize, qx: f64, a: f64, b: f64) -> Self {
        let p = a + b;
        let mu = a * b / p;
        let jdim = jmax + 1;
        let tdim = imax + jmax + 1;
        let mut h = Hermite {
            jdim,
            tdim,
            data: vec![0.0; (imax + 1) * jdim * tdim],
        };
        let xpa = -b / p * qx;
        let xpb = a / p * qx;
        let inv2p = 0.5 / p;
        h.set(0, 0, 0, (-mu * qx * qx).exp());
        for i in 0..=imax {
            for j in 0..=jmax {
                if i == 0 && j == 0 {
                    continue;
                }
                for t in 0..=(i + j) {
                    let v = if i > 0 {
                        inv2p * h.at(i - 1, j, t as isize - 1)
                            + xpa * h.at(i - 1, j, t as isize)
                            + (t + 1) as f64 * h.at(i - 1, j, t as isize + 1)
                    } else {
                        inv2p * h.at(i, j - 1, t as isize - 1)
                            + xpb * h.at(i, j - 1, t as isize)
                            + (t + 1) as f64 * h.at(i, j - 1, t as isize + 1)
                    };
                    h.set(i, j, t, v);
                }
            }
        }
        h
    }

    #[inline]
    fn at(&self, i: usize, j: usize, t: isize) -> f64 {
        if t < 0 || t as usize > i + j || t as usize >= self.tdim {
            0.0
        } else {
            self.data[(i * self.jdim + j) * self.tdim + t as usize]
        }
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, t: usize, v: f64) {
        self.data[(i * self.jdim + j) * self.tdim + t] = v;
    }
}

/// Hermite Coulomb integrals R^0_{tuv} for t+u+v ≤ `lmax`.
struct HermiteCoulomb {
    dim: usize,
    data: Vec<f64>,
}

impl HermiteCoulomb {
    fn new(lmax: usize, alpha: f64, pc: &Vector3<f64>) -> Self {
        let dim = lmax + 1;
        let t_arg = alpha * pc.norm_squared();
        let mut f = [0.0; super::boys::MAX_ORDER + 1];
        boys_array(lmax, t_arg, &mut f);
        // r[n][t][u][v]
        let idx = |n: usize, t: usize, u: usize, v: usize| ((n * dim + t) * dim + u) * dim + v;
        let mut r = vec![0.0; dim * dim * dim * dim];
        let mut scale = 1.0;
        for (n, fv) in f.iter().enumerate().take(lmax + 1) {
            r[idx(n, 0, 0, 0)] = scale * fv;
            scale *= -2.0 * alpha;
        }
        // raise t+u+v level by level; level L uses n up to lmax - L
        for level in 1..=lmax {
            for n in 0..=(lmax - level) {
                for t in 0..=level {
                    for u in 0..=(level - t) {
                        let v = level - t - u;
                        let val = if t > 0 {
                            let mut s = pc.x * r[idx(n + 1, t - 1, u, v)];
                            if t > 1 {
                                s += (t - 1) as f64 * r[idx(n + 1, t - 2, u, v)];
                            }
                            s
                        } else if u > 0 {
                            let mut s = pc.y * r[idx(n + 1, t, u - 1, v)];
                            if u > 1 {
                                s += (u - 1) as f64 * r[idx(n + 1, t, u - 2, v)];
                            }
                            s
                        } else {
                            let mut s = pc.z * r[idx(n + 1, t, u, v - 1)];
                            if v > 1 {
                                s += (v - 1) as f64 * r[idx(n + 1, t, u, v - 2)];
                            }
                            s
                        };
                        r[idx(n, t, u, v)] = val;
                    }
                }
            }
        }
        // keep n = 0 slice only
        let mut data = vec![0.0; dim * dim * dim];
        for t in 0..dim {
            for u in 0..dim {
                for v in 0..dim {
                    data[(t * dim + u) * dim + v] = r[idx(0, t, u, v)];
                }
            }
        }
        HermiteCoulomb { dim, data }
    }

    #[inline]
    fn at(&self, t: usize, u: usize, v: usize) -> f64 {
        self.data[(t * self.dim + u) * self.dim + v]
    }
}

type Lmn = (u32, u32, u32);

fn prim_overlap(a: f64, la: Lmn, ca: &Vector3<f64>, b: f64, lb: Lmn, cb: &Vector3<f64>) -> f64 {
    let q = ca - cb;
    let ex = Hermite::new(la.0 as usize, lb.0 as usize, q.x, a, b);
    let ey = Hermite::new(la.1 as usize, lb.1 as usize, q.y, a, b);
    let ez = Hermite::new(la.2 as usize, lb.2 as usize, q.z, a, b);
    ex.at(la.0 as usize, lb.0 as usize, 0)
        * ey.at(la.1 as usize, lb.1 as usize, 0)
        * ez.at(la.2 as usize, lb.2 as usize, 0)
        * (PI / (a + b)).powf(1.5)
}

fn prim_kinetic(a: f64, la: Lmn, ca: &Vector3<f64>, b: f64, lb: Lmn, cb: &Vector3<f64>) -> f64 {
    let (l, m, n) = lb;
    let s = |lb2: Lmn| prim_overlap(a, la, ca, b, lb2, cb);
    let term0 = b * (2.0 * (l + m + n) as f64 + 3.0) * s(lb);
    let term1 = -2.0 * b * b * (s((l + 2, m, n)) + s((l, m + 2, n)) + s((l, m, n + 2)));
    let mut term2 = 0.0;
    if l >= 2 {
        term2 += (l * (l - 1)) as f64 * s((l - 2, m, n));
    }
    if m >= 2 {
        term2 += (m * (m - 1)) as f64 * s((l, m - 2, n));
    }
    if n >= 2 {
        term2 += (n * (n - 1)) as f64 * s((l, m, n - 2));
    }
    term0 + term1 - 0.5 * term2
}

fn prim_nuclear(
    a: f64,
    la: Lmn,
    ca: &Vector3<f64>,
    b: f64,
    lb: Lmn,
    cb: &Vector3<f64>,
    c: &Vector3<f64>,
) -> f64 {
    let p = a + b;
    let pcen = (ca * a + cb * b) / p;
    let q = ca - cb;
    let ex = Hermite::new(la.0 as usize, lb.0 as usize, q.x, a, b);
    let ey = Hermite::new(la.1 as usize, lb.1 as usize, q.y, a, b);
    let ez = Hermite::new(la.2 as usize, lb.2 as usize, q.z, a, b);
    let lmax = (la.0 + la.1 + la.2 + lb.0 + lb.1 + lb.2) as usize;
    let r = HermiteCoulomb::new(lmax, p, &(pcen - c));
    let mut sum = 0.0;
    for t in 0..=(la.0 + lb.0) as usize {
        let et = ex.at(la.0 as usize, lb.0 as usize, t as isize);
        for u in 0..=(la.1 + lb.1) as usize {
            let eu = ey.at(la.1 as usize, lb.1 as usize, u as isize);
            for v in 0..=(la.2 + lb.2) as usize {
                let ev = ez.at(la.2 as usize, lb.2 as usize, v as isize);
                sum += et * eu * ev * r.at(t, u, v);
            }
        }
    }
    2.0 * PI / p * sum
}

/// Product-pair data reused across ERI quartets.
struct PairData {
    p: f64,
    center: Vector3<f64>,
    la: Lmn,
    lb: Lmn,
    ex: Hermite,
    ey: Hermite,
    ez: Hermite,
    weight: f64,
}

fn pair_data(ga: &ContractedGaussian, gb: &ContractedGaussian) -> Vec<PairData> {
    let la = ga.angular_momentum;
    let lb = gb.angular_momentum;
    let q = ga.center - gb.center;
    let mut out = Vec::new();
    for (a, wa) in ga.primitives() {
        for (b, wb) in gb.primitives() {
            let p = a + b;
            out.push(PairData {
                p,
                center: (ga.center * a + gb.center * b) / p,
                la,
                lb,
                ex: Hermite::new(la.0 as usize, lb.0 as usize, q.x, a, b),
                ey: Hermite::new(la.1 as usize, lb.1 as usize, q.y, a, b),
                ez: Hermite::new(la.2 as usize, lb.2 as usize, q.z, a, b),
                weight: wa * wb,
            });
        }
    }
    out
}

/// Non-zero Hermite coefficients of one pair as (t, u, v, E_t E_u E_v).
fn pair_expansion(pd: &PairData) -> Vec<(usize, usize, usize, f64)> {
    let (la, lb) = (pd.la, pd.lb);
    let mut out = Vec::new();
    for t in 0..=(la.0 + lb.0) as usize {
        let et = pd.ex.at(la.0 as usize, lb.0 as usize, t as isize);
        for u in 0..=(la.1 + lb.1) as usize {
            let eu = pd.ey.at(la.1 as usize, lb.1 as usize, u as isize);
            for v in 0..=(la.2 + lb.2) as usize {
                let ev = pd.ez.at(la.2 as usize, lb.2 as usize, v as isize);
                let e = et * eu * ev;
                if e != 0.0 {
                    out.push((t, u, v, e));
                }
            }
        }
    }
    out
}

pub fn overlap(ga: &ContractedGaussian, gb: &ContractedGaussian) -> f64 {
    let mut s = 0.0;
    for (a, wa) in ga.primitives() {
        for (b, wb) in gb.primitives() {
            s += wa
                * wb
                * prim_overlap(a, ga.angular_momentum, &ga.center, b, gb.angular_momentum, &gb.center);
        }
    }
    s
}

pub fn kinetic(ga: &ContractedGaussian, gb: &ContractedGaussian) -> f64 {
    let mut s = 0.0;
    for (a, wa) in ga.primitives() {
        for (b, wb) in gb.primitives() {
            s += wa
                * wb
                * prim_kinetic(a, ga.angular_momentum, &ga.center, b, gb.angular_momentum, &gb.center);
        }
    }
    s
}

/// −Σ_C Z_C ⟨a| 1/|r − R_C| |b⟩ over the given point charges (Bohr).
pub fn nuclear_attraction(
    ga: &ContractedGaussian,
    gb: &ContractedGaussian,
    charges: &[(f64, Vector3<f64>)],
) -> f64 {
    let mut s = 0.0;
    for (a, wa) in ga.primitives() {
        for (b, wb) in gb.primitives() {
            for (z, c) in charges {
                s -= z
                    * wa
                    * wb
                    * prim_nuclear(
                        a,
                        ga.angular_momentum,
                        &ga.center,
                        b,
                        gb.angular_momentum,
                        &gb.center,
                        c,
                    );
            }
        }
    }
    s
}

/// Chemist-notation (ab|cd).
pub fn electron_repulsion(
    ga: &ContractedGaussian,
    gb: &ContractedGaussian,
    gc: &ContractedGaussian,
    gd: &ContractedGaussian,
) -> f64 {
    let ab = pair_data(ga, gb);
    let cd = pair_data(gc, gd);
    eri_from_pairs(&ab, &cd)
}

fn eri_from_pairs(ab: &[PairData], cd: &[PairData]) -> f64 {
    let mut total = 0.0;
    for p1 in ab {
        let e1 = pair_expansion(p1);
        let l1 = (p1.la.0 + p1.la.1 + p1.la.2 + p1.lb.0 + p1.lb.1 + p1.lb.2) as usize;
        for p2 in cd {
            let e2 = pair_expansion(p2);
            let l2 = (p2.la.0 + p2.la.1 + p2.la.2 + p2.lb.0 + p2.lb.1 + p2.lb.2) as usize;
            let alpha = p1.p * p2.p / (p1.p + p2.p);
            let r = HermiteCoulomb::new(l1 + l2, alpha, &(p1.center - p2.center));
            let mut sum = 0.0;
            for &(t, u, v, ea) in &e1 {
                for &(tau, nu, phi, eb) in &e2 {
                    let sign = if (tau + nu + phi) % 2 == 0 { 1.0 } else { -1.0 };
                    sum += ea * eb * sign * r.at(t + tau, u + nu, v + phi);
                }
            }
            let pref = 2.0 * PI.powf(2.5) / (p1.p * p2.p * (p1.p + p2.p).sqrt());
            total += p1.weight * p2.weight * pref * sum;
        }
    }
    total
}

/// Full chemist-ordered ERI tensor `(ij|kl)` as a flat row-major vector,
/// evaluated once per 8-fold symmetry-unique quartet.
pub fn eri_tensor(basis: &[ContractedGaussian]) -> Vec<f64> {
    use rayon::prelude::*;
    let n = basis.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
    let pair_cache: Vec<Vec<PairData>> = pairs
        .iter()
        .map(|&(i, j)| pair_data(&basis[i], &basis[j]))
        .collect();
    let unique: Vec<(usize, usize, f64)> = (0..pairs.len())
        .into_par_iter()
        .flat_map_iter(|ij| {
            let pc = &pair_cache;
            (0..=ij).map(move |kl| (ij, kl, eri_from_pairs(&pc[ij], &pc[kl])))
        })
        .collect();
    let mut out = vec![0.0; n * n * n * n];
    let at = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    for (ij, kl, v) in unique {
        let (i, j) = pairs[ij];
        let (k, l) = pairs[kl];
        for (a, b) in [(i, j), (j, i)] {
            for (c, d) in [(k, l), (l, k)] {
                out[at(a, b, c, d)] = v;
                out[at(c, d, a, b)] = v;
            }
        }
    }
    out
}
