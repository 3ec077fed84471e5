//! Independent radial finite-element model used as a reference: Fourier
//! decomposition in `θ` and three-node Lagrange elements in `r` carrying
//! `(u0, v0, w, ψ_r, ψ_θ)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::assembly::boundary_quantities;
use crate::assembly::Quantity;
use crate::error::{PlateError, Result};
use crate::plate::{EdgeCondition, PlateConfig, PlateKind, SegmentSection};

/// Local field order inside a node.
const U: usize = 0;
const V: usize = 1;
const W: usize = 2;
const PR: usize = 3;
const PT: usize = 4;

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Radial mesh of quadratic elements.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    /// Node radii (m), `2E + 1` entries.
    pub nodes: Vec<f64>,
    /// Segment index of each element.
    pub element_segment: Vec<usize>,
    pub order: usize,
    pub p: u32,
}

impl RadialMesh {
    /// About `elements` elements split over segments in proportion to their
    /// radial width, at least four per segment.
    pub fn uniform(config: &PlateConfig, p: u32, elements: usize) -> Result<Self> {
        let sections = config.sections()?;
        let r0 = sections[0].inner_radius;
        let span = config.outer_radius() - r0;
        let mut nodes = vec![r0];
        let mut element_segment = Vec::new();
        for s in &sections {
            let width = s.outer_radius - s.inner_radius;
            let count = ((elements as f64 * width / span).round() as usize).max(4);
            for e in 0..count {
                let a = s.inner_radius + width * e as f64 / count as f64;
                let b = if e + 1 == count {
                    s.outer_radius
                } else {
                    s.inner_radius + width * (e + 1) as f64 / count as f64
                };
                nodes.push(0.5 * (a + b));
                nodes.push(b);
                element_segment.push(s.index);
            }
        }
        let mesh = RadialMesh {
            nodes,
            element_segment,
            order: 2,
            p,
        };
        mesh.check(&sections)?;
        Ok(mesh)
    }

    pub fn element_count(&self) -> usize {
        self.element_segment.len()
    }

    /// Segment edges must be element boundaries.
    pub fn check(&self, sections: &[SegmentSection]) -> Result<()> {
        if self.order != 2 || self.nodes.len() != 2 * self.element_count() + 1 {
            return Err(PlateError::config(
                "mesh",
                "expected quadratic elements with 2E + 1 nodes",
            ));
        }
        for (e, &s) in self.element_segment.iter().enumerate() {
            let sec = sections.get(s).ok_or_else(|| {
                PlateError::config("mesh", format!("element {e} refers to missing segment {s}"))
            })?;
            let (a, b) = (self.nodes[2 * e], self.nodes[2 * e + 2]);
            let tol = 1e-12 * sec.outer_radius;
            if a < sec.inner_radius - tol || b > sec.outer_radius + tol || !(b > a) {
                return Err(PlateError::config(
                    "mesh",
                    format!("element {e} [{a}, {b}] is not inside segment {}", s + 1),
                ));
            }
        }
        for s in sections {
            let per = self
                .element_segment
                .iter()
                .filter(|&&x| x == s.index)
                .count();
            if per < 4 {
                return Err(PlateError::config(
                    "mesh",
                    format!("segment {} has {per} < 4 elements", s.index + 1),
                ));
            }
        }
        Ok(())
    }
}

/// Symmetric band matrix, lower band stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    pub n: usize,
    pub bandwidth: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandMatrix {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let d = i.abs_diff(j);
        if d > self.bandwidth {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            for j in lo..=i {
                let a = self.data[i * (self.bandwidth + 1) + (i - j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// `self + s * other` (same shape).
    pub fn axpy(&self, s: f64, other: &BandMatrix) -> BandMatrix {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// `LDLᵀ` factorization of a symmetric band matrix without pivoting.
#[derive(Debug, Clone)]
pub struct BandLdl {
    n: usize,
    bw: usize,
    /// Unit lower factor in band storage; the diagonal slot holds `D`.
    data: Vec<f64>,
}

impl BandLdl {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.n;
        let bw = a.bandwidth;
        let w = bw + 1;
        let mut l = a.data.clone();
        for j in 0..n {
            // d_j = a_jj - Σ l_jk² d_k
            let lo = j.saturating_sub(bw);
            let mut d = l[j * w];
            for k in lo..j {
                let ljk = l[j * w + (j - k)];
                d -= ljk * ljk * l[k * w];
            }
            if d == 0.0 || !d.is_finite() {
                return Err(PlateError::Oracle(format!("zero pivot at row {j}")));
            }
            l[j * w] = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = l[i * w + (i - j)];
                for k in lo_i..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)] * l[k * w];
                }
                l[i * w + (i - j)] = s / d;
            }
        }
        Ok(BandLdl { n, bw, data: l })
    }

    /// Number of negative pivots.
    pub fn negative_count(&self) -> usize {
        (0..self.n)
            .filter(|&i| self.data[i * (self.bw + 1)] < 0.0)
            .count()
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let w = self.bw + 1;
        let mut x = b.clone();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.data[i * w + (i - k)] * x[k];
            }
            x[i] = s;
        }
        for i in 0..self.n {
            x[i] /= self.data[i * w];
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.bw + 1).min(self.n);
            let mut s = x[i];
            for k in i + 1..hi {
                s -= self.data[k * w + (k - i)] * x[k];
            }
            x[i] = s;
        }
        x
    }
}

/// Where a nodal field goes in the reduced system.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Fixed,
    Free(usize, f64),
}

/// Stiffness and mass of one `(config, p, mesh)` problem after essential
/// conditions are applied.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub stiffness: BandMatrix,
    pub mass: BandMatrix,
    pub mesh: RadialMesh,
    /// `slots[node][field]`
    slots: Vec<[Slot; 5]>,
    beta_per_omega: f64,
}

fn active_fields(p: u32) -> &'static [usize] {
    if p == 0 {
        &[U, W, PR]
    } else {
        &[U, V, W, PR, PT]
    }
}

fn constrained_fields(bc: EdgeCondition, p: u32) -> Vec<usize> {
    boundary_quantities(bc, p)
        .iter()
        .filter_map(|q| match q {
            Quantity::U => Some(U),
            Quantity::V => Some(V),
            Quantity::W => Some(W),
            Quantity::PsiR => Some(PR),
            Quantity::PsiTheta => Some(PT),
            _ => None,
        })
        .collect()
}

/// Maps nodal fields to reduced unknowns, applying edge conditions and the
/// regularity conditions at the centre of a circular plate.
fn build_slots(config: &PlateConfig, mesh: &RadialMesh) -> (Vec<[Slot; 5]>, usize) {
    let p = mesh.p;
    let nn = mesh.nodes.len();
    let mut fixed = vec![[true; 5]; nn];
    for node in fixed.iter_mut() {
        for &f in active_fields(p) {
            node[f] = false;
        }
    }
    for f in constrained_fields(config.outer_bc, p) {
        fixed[nn - 1][f] = true;
    }
    let circular = config.plate_kind == PlateKind::Circular;
    if let (PlateKind::Annular, Some(bc)) = (config.plate_kind, config.inner_bc) {
        for f in constrained_fields(bc, p) {
            fixed[0][f] = true;
        }
    }
    let mut paired = false;
    if circular {
        match p {
            0 => {
                fixed[0][U] = true;
                fixed[0][PR] = true;
            }
            1 => {
                fixed[0][W] = true;
                paired = true;
            }
            _ => fixed[0] = [true; 5],
        }
    }
    let mut slots = vec![[Slot::Fixed; 5]; nn];
    let mut next = 0;
    for (i, node) in slots.iter_mut().enumerate() {
        for f in 0..5 {
            if fixed[i][f] {
                continue;
            }
            if i == 0 && paired && (f == V || f == PT) {
                continue;
            }
            node[f] = Slot::Free(next, 1.0);
            next += 1;
        }
    }
    if paired {
        // v0 = -u0, ψ_θ = -ψ_r at r = 0
        for (src, dst) in [(U, V), (PR, PT)] {
            if let Slot::Free(k, _) = slots[0][src] {
                slots[0][dst] = Slot::Free(k, -1.0);
            }
        }
    }
    (slots, next)
}

impl FemSystem {
    pub fn assemble(config: &PlateConfig, mesh: &RadialMesh) -> Result<Self> {
        let sections = config.sections()?;
        mesh.check(&sections)?;
        let p = mesh.p;
        let pf = p as f64;
        let theta = if p == 0 { 2.0 * PI } else { PI };
        let (slots, n) = build_slots(config, mesh);
        let mut bw = 0;
        for e in 0..mesh.element_count() {
            let ids: Vec<usize> = (0..3)
                .flat_map(|a| slots[2 * e + a].iter())
                .filter_map(|s| {
                    if let Slot::Free(k, _) = s {
                        Some(*k)
                    } else {
                        None
                    }
                })
                .collect();
            if let (Some(lo), Some(hi)) = (ids.iter().min(), ids.iter().max()) {
                bw = bw.max(hi - lo);
            }
        }
        let mut k_glob = BandMatrix::zeros(n, bw);
        let mut m_glob = BandMatrix::zeros(n, bw);
        let mat = &config.material;
        let nu = mat.nu;
        let ec = mat.e_ceramic;
        let rc = mat.rho_ceramic;
        for e in 0..mesh.element_count() {
            let sec = &sections[mesh.element_segment[e]];
            let h = sec.thickness;
            let s = &sec.integrals;
            let a = ec * h * s.k1;
            let b = ec * h * h * s.k2;
            let d = ec * h.powi(3) * s.k3;
            let gs = mat.kappa_sq * 0.5 * (1.0 - nu) * a;
            let i0 = rc * h * s.i1;
            let i1 = rc * h * h * s.i2;
            let i2 = rc * h.powi(3) * s.i3;
            let q = [[1.0, nu, 0.0], [nu, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - nu)]];
            let mut c = [[0.0; 8]; 8];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] = a * q[i][j];
                    c[i][j + 3] = b * q[i][j];
                    c[i + 3][j] = b * q[i][j];
                    c[i + 3][j + 3] = d * q[i][j];
                }
            }
            c[6][6] = gs;
            c[7][7] = gs;
            let inertia = [
                [i0, 0.0, 0.0, i1, 0.0],
                [0.0, i0, 0.0, 0.0, i1],
                [0.0, 0.0, i0, 0.0, 0.0],
                [i1, 0.0, 0.0, i2, 0.0],
                [0.0, i1, 0.0, 0.0, i2],
            ];
            let (ra, rm, rb) = (
                mesh.nodes[2 * e],
                mesh.nodes[2 * e + 1],
                mesh.nodes[2 * e + 2],
            );
            let jac = 0.5 * (rb - ra);
            let mut ke = [[0.0; 15]; 15];
            let mut me = [[0.0; 15]; 15];
            for &(xi, wt) in &GAUSS3 {
                let n = [0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)];
                let dn = [(xi - 0.5) / jac, -2.0 * xi / jac, (xi + 0.5) / jac];
                let r = n[0] * ra + n[1] * rm + n[2] * rb;
                let dv = wt * jac * r * theta;
                // strain-displacement rows over 15 local dofs (node-major)
                let mut bm = [[0.0; 15]; 8];
                for a_ in 0..3 {
                    let o = 5 * a_;
                    let (na, da) = (n[a_], dn[a_]);
                    bm[0][o + U] = da;
                    bm[1][o + U] = na / r;
                    bm[1][o + V] = pf * na / r;
                    bm[2][o + V] = da - na / r;
                    bm[2][o + U] = -pf * na / r;
                    bm[3][o + PR] = da;
                    bm[4][o + PR] = na / r;
                    bm[4][o + PT] = pf * na / r;
                    bm[5][o + PT] = da - na / r;
                    bm[5][o + PR] = -pf * na / r;
                    bm[6][o + PR] = na;
                    bm[6][o + W] = da;
                    bm[7][o + PT] = na;
                    bm[7][o + W] = -pf * na / r;
                }
                let mut cb = [[0.0; 15]; 8];
                for i in 0..8 {
                    for j in 0..15 {
                        cb[i][j] = (0..8).map(|k| c[i][k] * bm[k][j]).sum();
                    }
                }
                for i in 0..15 {
                    for j in 0..15 {
                        ke[i][j] += dv * (0..8).map(|k| bm[k][i] * cb[k][j]).sum::<f64>();
                    }
                }
                for a_ in 0..3 {
                    for b_ in 0..3 {
                        let nn = n[a_] * n[b_] * dv;
                        for f in 0..5 {
                            for g in 0..5 {
                                me[5 * a_ + f][5 * b_ + g] += nn * inertia[f][g];
                            }
                        }
                    }
                }
            }
            for i in 0..15 {
                let Slot::Free(gi, fi) = slots[2 * e + i / 5][i % 5] else {
                    continue;
                };
                for j in 0..15 {
                    let Slot::Free(gj, fj) = slots[2 * e + j / 5][j % 5] else {
                        continue;
                    };
                    if gj > gi {
                        continue;
                    }
                    // diagonal entries of paired slots collect both halves
                    let f = fi * fj;
                    k_glob.add(gi, gj, f * ke[i][j]);
                    m_glob.add(gi, gj, f * me[i][j]);
                }
            }
        }
        let beta_per_omega = config.beta_from_omega(1.0);
        Ok(FemSystem {
            stiffness: k_glob,
            mass: m_glob,
            mesh: mesh.clone(),
            slots,
            beta_per_omega,
        })
    }

    pub fn dof_count(&self) -> usize {
        self.stiffness.n
    }

    /// `β` of an eigenvalue `λ = ω²`.
    pub fn beta_of(&self, lambda: f64) -> f64 {
        lambda.max(0.0).sqrt() * self.beta_per_omega
    }

    pub fn lambda_of(&self, beta: f64) -> f64 {
        let w = beta / self.beta_per_omega;
        w * w
    }

    /// Number of eigenvalues with `β' < beta`, from the inertia of
    /// `K - λM`.
    pub fn count_below(&self, beta: f64) -> Result<usize> {
        let shifted = self.stiffness.axpy(-self.lambda_of(beta), &self.mass);
        Ok(BandLdl::factor(&shifted)?.negative_count())
    }

    /// Nodal `[u0, v0, w, ψ_r, ψ_θ]` of a reduced vector.
    pub fn expand(&self, x: &DVector<f64>) -> Vec<[f64; 5]> {
        self.slots
            .iter()
            .map(|node| {
                let mut out = [0.0; 5];
                for f in 0..5 {
                    if let Slot::Free(k, s) = node[f] {
                        out[f] = s * x[k];
                    }
                }
                out
            })
            .collect()
    }

    /// Lowest `count` elastic modes (those above `rigid_beta`).
    pub fn solve(&self, count: usize, rigid_beta: f64) -> Result<EigenSolution> {
        let shift = -self.lambda_of(1.0);
        let pairs = solve_eigens(&self.stiffness, &self.mass, count + 6, shift)?;
        let mut beta = Vec::new();
        let mut vectors = Vec::new();
        let mut residuals = Vec::new();
        let mut rigid = 0;
        for (lambda, v, res) in pairs {
            let b = self.beta_of(lambda);
            if b < rigid_beta {
                rigid += 1;
                continue;
            }
            if beta.len() == count {
                break;
            }
            beta.push(b);
            vectors.push(self.expand(&v));
            residuals.push(res);
        }
        if beta.len() < count {
            return Err(PlateError::Oracle(format!(
                "found {} of {count} modes",
                beta.len()
            )));
        }
        let frequency = beta
            .iter()
            .map(|b| b / self.beta_per_omega / (2.0 * PI))
            .collect();
        Ok(EigenSolution {
            beta,
            frequency,
            vectors,
            residuals,
            rigid_modes: rigid,
            nodes: self.mesh.nodes.clone(),
            elements: self.mesh.element_count(),
            p: self.mesh.p,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub beta: Vec<f64>,
    /// Hz, ascending.
    pub frequency: Vec<f64>,
    /// Nodal `[u0, v0, w, ψ_r, ψ_θ]` per mode.
    pub vectors: Vec<Vec<[f64; 5]>>,
    /// `‖Kφ - λMφ‖ / ‖Kφ‖`
    pub residuals: Vec<f64>,
    /// Near-zero modes skipped.
    pub rigid_modes: usize,
    pub nodes: Vec<f64>,
    pub elements: usize,
    pub p: u32,
}

/// Largest system solved densely.
pub const DENSE_LIMIT: usize = 240;

/// `‖Kφ - λMφ‖ / max(‖Kφ‖, λ₀‖Mφ‖)`; the `λ₀` floor keeps the measure
/// meaningful for rigid-body modes.
fn relative_residual(
    k: &BandMatrix,
    m: &BandMatrix,
    lambda: f64,
    v: &DVector<f64>,
    lambda0: f64,
) -> f64 {
    let kv = k.mul(v);
    let mv = m.mul(v);
    let r = &kv - &mv * lambda;
    let scale = kv.norm().max(lambda0.abs() * mv.norm());
    if scale > 0.0 {
        r.norm() / scale
    } else {
        r.norm()
    }
}

/// Smallest `count` pairs of `Kφ = λMφ`, ascending, with their relative
/// residuals. `shift` must lie below every wanted eigenvalue.
pub fn solve_eigens(
    k: &BandMatrix,
    m: &BandMatrix,
    count: usize,
    shift: f64,
) -> Result<Vec<(f64, DVector<f64>, f64)>> {
    let n = k.n;
    let count = count.min(n);
    if count == 0 {
        return Ok(Vec::new());
    }
    if n <= DENSE_LIMIT {
        return dense_eigens(k, m, count, shift);
    }
    let op = BandLdl::factor(&k.axpy(-shift, m))?;
    let steps = (4 * count + 40).min(n);
    lanczos(&op, k, m, count, steps, shift)
}

/// Shift-invert Lanczos with full `M`-reorthogonalization, extended until
/// the wanted Ritz pairs converge.
fn lanczos(
    op: &BandLdl,
    k: &BandMatrix,
    m: &BandMatrix,
    count: usize,
    mut steps: usize,
    shift: f64,
) -> Result<Vec<(f64, DVector<f64>, f64)>> {
    let n = k.n;
    let mut q: Vec<DVector<f64>> = Vec::new();
    let mut mq: Vec<DVector<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    // deterministic start vector rich in every component
    let mut next = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).sin());
    let mut fresh = true;
    let mut restarts = 0usize;
    loop {
        while alpha.len() < steps {
            if fresh {
                let mut x = next.clone();
                for _ in 0..2 {
                    for (qi, mqi) in q.iter().zip(&mq) {
                        let c = mqi.dot(&x);
                        x -= qi * c;
                    }
                }
                let nrm = m.mul(&x).dot(&x).max(0.0).sqrt();
                if !(nrm > 0.0) {
                    return Err(PlateError::Oracle("Lanczos start vector collapsed".into()));
                }
                x /= nrm;
                mq.push(m.mul(&x));
                q.push(x);
                fresh = false;
            }
            let j = alpha.len();
            let mut w = op.solve(&mq[j]);
            alpha.push(w.dot(&mq[j]));
            for _ in 0..2 {
                for (qi, mqi) in q.iter().zip(&mq) {
                    let c = mqi.dot(&w);
                    w -= qi * c;
                }
            }
            let mw = m.mul(&w);
            let b = mw.dot(&w).max(0.0).sqrt();
            let scale = alpha.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            if b <= 1e-13 * scale {
                // invariant subspace: continue from a new direction
                beta.push(0.0);
                restarts += 1;
                next = DVector::from_fn(n, |i, _| {
                    ((i * (7 + restarts)) as f64 * 0.754_877_666).sin()
                });
                fresh = true;
            } else {
                beta.push(b);
                mq.push(mw / b);
                q.push(w / b);
            }
        }
        let dim = alpha.len();
        let t = DMatrix::from_fn(dim, dim, |i, jj| {
            if i == jj {
                alpha[i]
            } else if i == jj + 1 {
                beta[jj]
            } else if jj == i + 1 {
                beta[i]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let wanted: Vec<usize> = order.into_iter().take(count).collect();
        let tail = beta[dim - 1];
        let converged = wanted.iter().all(|&i| {
            let theta = eig.eigenvalues[i];
            theta > 0.0 && (tail * eig.eigenvectors[(dim - 1, i)]).abs() <= 1e-11 * theta
        });
        if converged || dim >= n {
            if !converged {
                return Err(PlateError::Oracle(format!(
                    "Lanczos did not converge in {dim} steps"
                )));
            }
            let ritz: Vec<DVector<f64>> = wanted
                .iter()
                .map(|&i| {
                    let s = eig.eigenvectors.column(i);
                    let mut y = DVector::zeros(n);
                    for (l, ql) in q.iter().take(dim).enumerate() {
                        y += ql * s[l];
                    }
                    y
                })
                .collect();
            let mut out: Vec<_> = ritz
                .iter()
                .map(|v| {
                    let (_, y) = polish(op, k, m, v);
                    let (lambda, y) = polish(op, k, m, &y);
                    let res = relative_residual(k, m, lambda, &y, shift);
                    (lambda, y, res)
                })
                .collect();
            out.sort_by(|a, b| a.0.total_cmp(&b.0));
            return Ok(out);
        }
        steps = (2 * steps).min(n);
    }
}

/// Ascending eigenpairs of the dense pencil `(K, M)`, `M`-normalized.
fn dense_pencil(kd: &DMatrix<f64>, md: &DMatrix<f64>) -> Result<Vec<(f64, DVector<f64>)>> {
    let l = md
        .clone()
        .cholesky()
        .ok_or_else(|| PlateError::Oracle("mass matrix is not positive definite".into()))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| PlateError::Oracle("mass factor is singular".into()))?;
    let a = &linv * kd * linv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..kd.nrows()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let lt = l.transpose();
    Ok(order
        .into_iter()
        .map(|i| {
            let z = eig.eigenvectors.column(i).into_owned();
            let v = lt.solve_upper_triangular(&z).expect("nonsingular factor");
            (eig.eigenvalues[i], v)
        })
        .collect())
}

fn dense_eigens(
    k: &BandMatrix,
    m: &BandMatrix,
    count: usize,
    shift: f64,
) -> Result<Vec<(f64, DVector<f64>, f64)>> {
    Ok(dense_pencil(&k.to_dense(), &m.to_dense())?
        .into_iter()
        .take(count)
        .map(|(lambda, v)| {
            let res = relative_residual(k, m, lambda, &v, shift);
            (lambda, v, res)
        })
        .collect())
}

/// Inverse-iteration step on each Ritz vector; damps the high-frequency
/// error left by the Lanczos recurrence without mixing wanted modes.
fn polish(op: &BandLdl, k: &BandMatrix, m: &BandMatrix, v: &DVector<f64>) -> (f64, DVector<f64>) {
    let mut y = op.solve(&m.mul(v));
    y /= m.mul(&y).dot(&y).sqrt();
    (k.mul(&y).dot(&y), y)
}

/// Elastic modes of `config` at wavenumber `p` on a mesh of about
/// `elements` elements.
pub fn oracle_modes(
    config: &PlateConfig,
    p: u32,
    elements: usize,
    count: usize,
) -> Result<EigenSolution> {
    let mesh = RadialMesh::uniform(config, p, elements)?;
    let sys = FemSystem::assemble(config, &mesh)?;
    sys.solve(count, RIGID_BETA)
}

/// Modes below this `β` are treated as rigid-body motion.
pub const RIGID_BETA: f64 = 1e-2;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::MaterialPair;
    use crate::plate::{ContinuityVariant, SegmentGeometry};

    fn uniform(bc: EdgeCondition, h: f64) -> PlateConfig {
        PlateConfig {
            material: MaterialPair::homogeneous(200e9, 7800.0, 0.3),
            segments: vec![SegmentGeometry {
                outer_radius: 1.0,
                thickness: h,
            }],
            plate_kind: PlateKind::Circular,
            inner_radius: None,
            inner_bc: None,
            outer_bc: bc,
            continuity: ContinuityVariant::Twisting,
        }
    }

    #[test]
    fn band_ldl_matches_dense() {
        let mut a = BandMatrix::zeros(6, 2);
        for i in 0..6 {
            a.add(i, i, 4.0 + i as f64);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i > 1 {
                a.add(i, i - 2, 0.5);
            }
        }
        let b = DVector::from_fn(6, |i, _| i as f64 - 2.0);
        let x = BandLdl::factor(&a).unwrap().solve(&b);
        let dense = a.to_dense().lu().solve(&b).unwrap();
        assert!((x - dense).norm() < 1e-13);
        let shifted = a.axpy(
            -6.0,
            &BandMatrix {
                n: 6,
                bandwidth: 2,
                data: {
                    let mut id = vec![0.0; 18];
                    for i in 0..6 {
                        id[i * 3] = 1.0;
                    }
                    id
                },
            },
        );
        let eig = a.to_dense().symmetric_eigen();
        let below = eig.eigenvalues.iter().filter(|&&l| l < 6.0).count();
        assert_eq!(BandLdl::factor(&shifted).unwrap().negative_count(), below);
    }

    #[test]
    fn diagonal_pencil() {
        let mut k = BandMatrix::zeros(3, 0);
        let mut m = BandMatrix::zeros(3, 0);
        for (i, (kv, mv)) in [(6.0, 2.0), (1.0, 1.0), (10.0, 4.0)].iter().enumerate() {
            k.add(i, i, *kv);
            m.add(i, i, *mv);
        }
        let pairs = solve_eigens(&k, &m, 3, -1.0).unwrap();
        let got: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        for (g, w) in got.iter().zip([1.0, 2.5, 3.0]) {
            assert!((g - w).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_recovers_total_mass() {
        let cfg = PlateConfig::reference_stepped(EdgeCondition::Free);
        let mesh = RadialMesh::uniform(&cfg, 0, 40).unwrap();
        let sys = FemSystem::assemble(&cfg, &mesh).unwrap();
        let mut total = 0.0;
        for ni in &sys.slots {
            for nj in &sys.slots {
                if let (Slot::Free(a, _), Slot::Free(b, _)) = (ni[W], nj[W]) {
                    total += sys.mass.get(a, b);
                }
            }
        }
        // ∫ρ dV with the closed-form section density
        let sections = cfg.sections().unwrap();
        let rho_c = cfg.material.rho_ceramic;
        let exact: f64 = sections
            .iter()
            .map(|s| {
                rho_c
                    * s.thickness
                    * s.integrals.i1
                    * PI
                    * (s.outer_radius.powi(2) - s.inner_radius.powi(2))
            })
            .sum();
        assert!((total - exact).abs() < 1e-3 * exact, "{total} vs {exact}");
    }

    #[test]
    fn free_annulus_has_rigid_translation() {
        let mut cfg = PlateConfig::reference_stepped(EdgeCondition::Free);
        cfg.plate_kind = PlateKind::Annular;
        cfg.inner_radius = Some(0.3);
        cfg.inner_bc = Some(EdgeCondition::Free);
        let mesh = RadialMesh::uniform(&cfg, 1, 40).unwrap();
        let sys = FemSystem::assemble(&cfg, &mesh).unwrap();
        let pairs = solve_eigens(&sys.stiffness, &sys.mass, 6, -sys.lambda_of(1.0)).unwrap();
        let elastic = pairs
            .iter()
            .map(|p| p.0)
            .find(|&l| sys.beta_of(l) > RIGID_BETA)
            .unwrap();
        assert!(pairs[0].0.abs() <= 1e-6 * elastic);
    }

    #[test]
    fn thin_clamped_plate_classical_value() {
        let cfg = uniform(EdgeCondition::Clamped, 0.001);
        let sol = oracle_modes(&cfg, 0, 200, 1).unwrap();
        assert!(
            (sol.beta[0] - 10.2158).abs() < 0.005 * 10.2158,
            "{}",
            sol.beta[0]
        );
    }

    #[test]
    fn lanczos_agrees_with_dense_and_sturm_count() {
        let cfg = PlateConfig::reference_stepped(EdgeCondition::Clamped);
        let mesh = RadialMesh::uniform(&cfg, 2, 60).unwrap();
        let sys = FemSystem::assemble(&cfg, &mesh).unwrap();
        assert!(sys.dof_count() > DENSE_LIMIT);
        let lanczos = solve_eigens(&sys.stiffness, &sys.mass, 6, -sys.lambda_of(1.0)).unwrap();
        let dense = dense_eigens(&sys.stiffness, &sys.mass, 6, -sys.lambda_of(1.0)).unwrap();
        for (a, b) in lanczos.iter().zip(&dense) {
            assert!((a.0 - b.0).abs() < 1e-9 * b.0);
            assert!(a.2 <= 1e-8);
        }
        let cut = sys.beta_of(0.5 * (lanczos[3].0 + lanczos[4].0));
        assert_eq!(sys.count_below(cut).unwrap(), 4);
    }
}
