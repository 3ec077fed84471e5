//! Closed-form solution inside one constant-thickness segment at a trial
//! frequency.
//!
//! The transverse deflection satisfies a sixth-order equation that factors
//! into three Helmholtz operators `(Δ̂ - x₁)(Δ̂ - x₂)(Δ̂ - x₃)ŵ = 0`; the
//! in-plane rotational part adds two more roots `x₄, x₅`. Each root yields
//! one first-kind and one second-kind radial Bessel function, giving ten
//! coefficients per segment (five for the innermost segment of a circular
//! plate).
//!
//! Component `k ≤ 3` carries the potentials `F₁ = K̄₁a + K̄₂c`,
//! `F₃ = K̄₂a + K̄₃c` and the deflection `w̄` as the modal vector
//! `(F₁, F₃, w̄) ∝ (G₂G₅, G₅(x - G₁), x² - (G₁+G₄)x + G₁G₄ - G₂G₃)`, where
//! `a`, `c` are the dilatational potentials of `(ū₀, v̄₀)` and `(ψ̄_r, ψ̄_θ)`.
//! Components 4 and 5 carry the rotational potentials with
//! `(F₁, F₃) ∝ (G₂, (1-ν)x/2 - G₁)`. These are the coefficient vectors
//! `(a_k, a_{k+5}, 1)` and `(a_k, a_{k+5}=1)` multiplied by their
//! denominators, which keeps them finite at every frequency.

use std::f64::consts::PI;

use crate::bessel::{bessel, BesselKind};
use crate::error::{PlateError, Result};
use crate::material::{MaterialPair, ScaleFactors, SectionIntegrals};
use crate::plate::{PlateConfig, SegmentSection};

/// Magnitude below which a characteristic root is treated as a branch
/// transition (J/Y ↔ I/K).
pub const BRANCH_GUARD: f64 = 1e-8;

/// Coefficients of `A₁x³ + A₂x² + A₃x + A₄ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl DispersionCoefficients {
    pub fn eval(&self, x: f64) -> f64 {
        ((self.a1 * x + self.a2) * x + self.a3) * x + self.a4
    }

    /// `max |A_j x^j|`, the natural scale of a residual at `x`.
    pub fn term_scale(&self, x: f64) -> f64 {
        [self.a1 * x.powi(3), self.a2 * x * x, self.a3 * x, self.a4]
            .iter()
            .fold(0.0f64, |m, t| m.max(t.abs()))
    }
}

pub fn dispersion_coefficients(
    s: &SectionIntegrals,
    scales: &ScaleFactors,
) -> DispersionCoefficients {
    let mu = scales.inertia_factor();
    let sd = scales.s2 * scales.delta * scales.delta;
    let kdet = s.stiffness_det();
    let idet = s.inertia_det();
    let mixed = s.k1 * s.i3 + s.k3 * s.i1 - 2.0 * s.k2 * s.i2;
    DispersionCoefficients {
        a1: sd * kdet,
        a2: mu * (s.i1 * kdet + sd * mixed),
        a3: mu * (mu * (s.i1 * mixed + sd * idet) - scales.s2 * s.k1 * s.i1),
        a4: mu * mu * s.i1 * (mu * idet - scales.s2 * s.i1),
    }
}

/// `G₁ … G₈` (stored zero-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GTerms(pub [f64; 8]);

impl GTerms {
    pub fn new(s: &SectionIntegrals, scales: &ScaleFactors) -> Self {
        let mu = scales.inertia_factor();
        let s2 = scales.s2;
        let sd = s2 * scales.delta * scales.delta;
        let den = s.k2 * s.k2 - s.k1 * s.k3;
        GTerms([
            mu * (s.k3 * s.i1 - s.k2 * s.i2) / den,
            mu * (s.k1 * s.i2 - s.k2 * s.i1) / den,
            (mu * (s.k3 * s.i2 - s.k2 * s.i3) + s2 * s.k2) / den,
            (mu * (s.k1 * s.i3 - s.k2 * s.i2) - s2 * s.k1) / den,
            s2,
            sd * s.k2 / den,
            -sd * s.k1 / den,
            -mu * s.i1,
        ])
    }

    pub fn g(&self, k: usize) -> f64 {
        self.0[k - 1]
    }

    /// `x² - (G₁+G₄)x + G₁G₄ - G₂G₃`
    pub fn bending_denominator(&self, x: f64) -> f64 {
        let g = &self.0;
        x * x - (g[0] + g[3]) * x + g[0] * g[3] - g[1] * g[2]
    }
}

/// Real roots of the dispersion cubic in ascending order, each polished by
/// Newton's method.
pub fn cubic_roots(c: &DispersionCoefficients, beta: f64) -> Result<[f64; 3]> {
    if c.a1 == 0.0 || !c.a1.is_finite() {
        return Err(PlateError::DegenerateFrequency {
            beta,
            message: "leading cubic coefficient vanishes".into(),
        });
    }
    let b = c.a2 / c.a1;
    let cc = c.a3 / c.a1;
    let d = c.a4 / c.a1;
    let q = (b * b - 3.0 * cc) / 9.0;
    let r = (2.0 * b * b * b - 9.0 * b * cc + 27.0 * d) / 54.0;
    let q3 = q * q * q;
    if r * r > q3 * (1.0 + 1e-10) || q < 0.0 {
        return Err(PlateError::UnsupportedRegime {
            beta,
            message: "characteristic cubic has complex roots".into(),
        });
    }
    let ratio = if q3 > 0.0 {
        (r / q3.sqrt()).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let theta = ratio.acos();
    let sq = q.max(0.0).sqrt();
    let mut roots = [0.0; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        *root = -2.0 * sq * ((theta + 2.0 * PI * k as f64) / 3.0).cos() - b / 3.0;
    }
    for root in roots.iter_mut() {
        *root = polish(*root, b, cc, d);
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}

fn polish(mut x: f64, b: f64, c: f64, d: f64) -> f64 {
    let f = |x: f64| ((x + b) * x + c) * x + d;
    let mut fx = f(x);
    for _ in 0..4 {
        let df = (3.0 * x + 2.0 * b) * x + c;
        if df == 0.0 {
            break;
        }
        let next = x - fx / df;
        let fn_ = f(next);
        if fn_.abs() >= fx.abs() {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

/// `ξ₁`, `ξ₂` and the in-plane rotational roots `x₄ ≥ x₅` of
/// `x² - ξ₁x + ξ₂ = 0`.
pub fn rotational_roots(g: &GTerms, nu: f64, beta: f64) -> Result<(f64, f64, f64, f64)> {
    let (g1, g2, g3, g4) = (g.0[0], g.0[1], g.0[2], g.0[3]);
    let xi1 = 2.0 * (g1 + g4) / (1.0 - nu);
    let xi2 = 4.0 * (g1 * g4 - g2 * g3) / ((1.0 - nu) * (1.0 - nu));
    let disc = xi1 * xi1 - 4.0 * xi2;
    if disc < -1e-12 * xi1 * xi1 {
        return Err(PlateError::UnsupportedRegime {
            beta,
            message: "in-plane rotational roots are complex".into(),
        });
    }
    let sq = disc.max(0.0).sqrt();
    let q = -0.5 * (-xi1 - xi1.signum() * sq);
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, xi2 / q) };
    let (x4, x5) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
    Ok((xi1, xi2, x4, x5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `x < 0`: `J_p`, `Y_p`.
    Oscillatory,
    /// `x > 0`: `I_p`, `K_p`.
    Evanescent,
}

/// Ten coefficients `c₁ … c₁₀` of one segment (stored zero-based).
///
/// `c₁..c₃` and `c₇`, `c₉` multiply first-kind functions; `c₄..c₆`, `c₈`,
/// `c₁₀` multiply second-kind functions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentCoefficientVector(pub [f64; 10]);

impl SegmentCoefficientVector {
    pub fn unit(j: usize) -> Self {
        let mut c = [0.0; 10];
        c[j] = 1.0;
        SegmentCoefficientVector(c)
    }
}

/// Indices of the second-kind coefficients, zero for a segment containing
/// the centre.
pub const SECOND_KIND_COLUMNS: [usize; 5] = [3, 4, 5, 7, 9];

/// `(component, second_kind)` of coefficient `j` (zero-based).
fn column_component(j: usize) -> (usize, bool) {
    match j {
        0..=2 => (j, false),
        3..=5 => (j - 3, true),
        6 => (3, false),
        7 => (3, true),
        8 => (4, false),
        9 => (4, true),
        _ => unreachable!("segment has ten coefficients"),
    }
}

/// Dimensional displacements, rotations and their radial derivatives at a
/// radius. `w`, `u0`, `psi_r` carry `cos pθ`; `v0`, `psi_theta` carry `sin pθ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldState {
    pub r: f64,
    pub w: f64,
    pub dw: f64,
    pub u0: f64,
    pub du0: f64,
    pub v0: f64,
    pub dv0: f64,
    pub psi_r: f64,
    pub dpsi_r: f64,
    pub psi_theta: f64,
    pub dpsi_theta: f64,
}

/// Dimensional stress resultants at a radius. `N_rθ`, `M_rθ`, `Q_θ` carry
/// `sin pθ`, the rest `cos pθ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResultantState {
    pub n_r: f64,
    pub n_theta: f64,
    pub n_rtheta: f64,
    pub m_r: f64,
    pub m_theta: f64,
    pub m_rtheta: f64,
    pub q_r: f64,
    pub q_theta: f64,
}

/// Everything about one segment at one trial `β` and wavenumber `p`.
#[derive(Debug, Clone)]
pub struct SegmentSpectralBasis {
    pub section: SegmentSection,
    pub material: MaterialPair,
    pub p: u32,
    pub beta: f64,
    pub scales: ScaleFactors,
    pub dispersion: DispersionCoefficients,
    pub g: GTerms,
    pub xi1: f64,
    pub xi2: f64,
    /// `x₁ ≤ x₂ ≤ x₃` then `x₄ ≥ x₅`.
    pub roots: [f64; 5],
    /// `χ_k = √|x_k|`
    pub chi: [f64; 5],
    pub branches: [Branch; 5],
    /// Coefficients `a₁..a₁₀` and `b₁..b₁₀` as defined by the
    /// w-normalized solution; non-finite where a denominator vanishes.
    pub a: [f64; 10],
    pub b: [f64; 10],
    /// Modal vector of each component: `(F₁, F₃, w̄)` for `k ≤ 3`,
    /// `(F₁, F₃, 0)` for `k = 4, 5`.
    pub modal: [[f64; 3]; 5],
    /// Potential amplitudes: `(a, c, w̄)` for `k ≤ 3`, `(b, d, 0)` for `k = 4, 5`.
    potentials: [[f64; 3]; 5],
    /// Dimensionless radii of the segment, `R = r/r_n`.
    r_inner: f64,
    r_outer: f64,
    r_n: f64,
}

impl SegmentSpectralBasis {
    pub fn new(config: &PlateConfig, section: &SegmentSection, p: u32, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(PlateError::Domain(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let scales = config.scale_factors(section, beta)?;
        let integrals = section.integrals;
        let nu = config.material.nu;
        let dispersion = dispersion_coefficients(&integrals, &scales);
        let g = GTerms::new(&integrals, &scales);
        let bending = cubic_roots(&dispersion, beta)?;
        let (xi1, xi2, x4, x5) = rotational_roots(&g, nu, beta)?;
        let roots = [bending[0], bending[1], bending[2], x4, x5];
        let used = if p == 0 { 3 } else { 5 };
        for &x in &roots[..used] {
            if x.abs() < BRANCH_GUARD {
                return Err(PlateError::BranchTransition {
                    beta,
                    magnitude: x.abs(),
                });
            }
        }
        let chi = roots.map(|x| x.abs().sqrt());
        let branches = roots.map(|x| {
            if x < 0.0 {
                Branch::Oscillatory
            } else {
                Branch::Evanescent
            }
        });
        let (a, b) = normalized_coefficients(&g, &roots, nu);

        let mut modal = [[0.0; 3]; 5];
        for k in 0..3 {
            modal[k] = bending_modal_vector(&g, &integrals, &scales, roots[k]);
        }
        for k in 3..5 {
            modal[k] = rotational_modal_vector(&g, nu, roots[k]);
        }
        let kdet = integrals.stiffness_det();
        let (k1, k2, k3) = (integrals.k1, integrals.k2, integrals.k3);
        let potentials =
            modal.map(|[f1, f3, w]| [(k3 * f1 - k2 * f3) / kdet, (k1 * f3 - k2 * f1) / kdet, w]);
        let r_n = config.outer_radius();
        Ok(SegmentSpectralBasis {
            section: *section,
            material: config.material,
            p,
            beta,
            scales,
            dispersion,
            g,
            xi1,
            xi2,
            roots,
            chi,
            branches,
            a,
            b,
            modal,
            potentials,
            r_inner: section.inner_radius / r_n,
            r_outer: section.outer_radius / r_n,
            r_n,
        })
    }

    /// Number of coefficient slots in use for this wavenumber.
    pub fn column_count(&self) -> usize {
        if self.p == 0 {
            6
        } else {
            10
        }
    }

    /// Coefficient indices that carry unknowns. Second-kind functions are
    /// excluded when the segment contains the centre.
    pub fn active_columns(&self) -> Vec<usize> {
        let contains_centre = self.section.inner_radius == 0.0;
        (0..self.column_count())
            .filter(|j| !(contains_centre && SECOND_KIND_COLUMNS.contains(j)))
            .collect()
    }

    /// The `a_k`, `b_k` coefficients, failing where a denominator vanishes.
    pub fn modal_coefficients(&self) -> Result<([f64; 10], [f64; 10])> {
        let used: &[usize] = if self.p == 0 {
            &[0, 1, 2, 5, 6, 7]
        } else {
            &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
        };
        for &k in used {
            if !self.a[k].is_finite() || !self.b[k].is_finite() {
                return Err(PlateError::DegenerateFrequency {
                    beta: self.beta,
                    message: format!("denominator of a_{} vanishes", k + 1),
                });
            }
        }
        Ok((self.a, self.b))
    }

    /// Component index (0..5) and kind of coefficient `j`.
    pub fn column_component(&self, j: usize) -> (usize, bool) {
        column_component(j)
    }

    /// Exponent removed from evanescent columns so they stay bounded on
    /// the segment: `χR_out` for `I_p`, `-χR_in` for `K_p`, zero otherwise.
    pub fn column_log_scale(&self, j: usize) -> f64 {
        let (k, second) = column_component(j);
        match (self.branches[k], second) {
            (Branch::Oscillatory, _) => 0.0,
            (Branch::Evanescent, false) => self.chi[k] * self.r_outer,
            (Branch::Evanescent, true) => -self.chi[k] * self.r_inner,
        }
    }

    /// Radial function of coefficient `j` with its first two derivatives in
    /// `R`, including the reference scaling of evanescent columns.
    fn radial(&self, j: usize, big_r: f64) -> Result<[f64; 3]> {
        let (k, second) = column_component(j);
        let chi = self.chi[k];
        let x = self.roots[k];
        let arg = chi * big_r;
        let p = self.p;
        let (kind, factor) = match (self.branches[k], second) {
            (Branch::Oscillatory, false) => (BesselKind::J, 1.0),
            (Branch::Oscillatory, true) => (BesselKind::Y, 1.0),
            (Branch::Evanescent, false) => (BesselKind::I, 1.0),
            (Branch::Evanescent, true) => (BesselKind::K, -2.0 / PI),
        };
        let reference = self.column_log_scale(j);
        let e = bessel(kind, p, arg)?;
        let scale = factor * (e.log_scale - reference).exp();
        let z = e.value * scale;
        let dz = chi * e.derivative * scale;
        let d2z = if big_r > 0.0 {
            let pf = p as f64;
            x * z - dz / big_r + pf * pf * z / (big_r * big_r)
        } else {
            // only first-kind functions reach R = 0
            match p {
                0 => 0.5 * x * z,
                2 => 0.25 * chi * chi * factor,
                _ => 0.0,
            }
        };
        Ok([z, dz, d2z])
    }

    fn check_radius(&self, r: f64) -> Result<f64> {
        let tol = 1e-12 * self.section.outer_radius;
        if r < self.section.inner_radius - tol
            || r > self.section.outer_radius + tol
            || !r.is_finite()
        {
            return Err(PlateError::Domain(format!(
                "r = {r} lies outside segment {} [{}, {}]",
                self.section.index + 1,
                self.section.inner_radius,
                self.section.outer_radius
            )));
        }
        Ok(r.clamp(self.section.inner_radius, self.section.outer_radius))
    }

    /// Dimensionless profiles `[ū, ū', v̄, v̄', ψ_r, ψ_r', ψ_θ, ψ_θ', w̄, w̄']`
    /// of coefficient `j` (derivatives with respect to `R`).
    fn column_profiles(&self, j: usize, big_r: f64) -> Result<[f64; 10]> {
        let (k, _) = column_component(j);
        // the centre itself is handled as a limit by nudging inward
        let big_r = if big_r == 0.0 {
            1e-9 * self.r_outer
        } else {
            big_r
        };
        let [z, dz, d2z] = self.radial(j, big_r)?;
        let pf = self.p as f64;
        let [pa, pc, pw] = self.potentials[k];
        let zr = z / big_r;
        let dzr = dz / big_r - z / (big_r * big_r);
        Ok(if k < 3 {
            [
                pa * dz,
                pa * d2z,
                -pf * pa * zr,
                -pf * pa * dzr,
                pc * dz,
                pc * d2z,
                -pf * pc * zr,
                -pf * pc * dzr,
                pw * z,
                pw * dz,
            ]
        } else {
            [
                pf * pa * zr,
                pf * pa * dzr,
                -pa * dz,
                -pa * d2z,
                pf * pc * zr,
                pf * pc * dzr,
                -pc * dz,
                -pc * d2z,
                0.0,
                0.0,
            ]
        })
    }

    fn to_dimensional(&self, r: f64, prof: &[f64; 10]) -> FieldState {
        let h = self.section.thickness;
        let rn = self.r_n;
        FieldState {
            r,
            u0: h * prof[0],
            du0: h * prof[1] / rn,
            v0: h * prof[2],
            dv0: h * prof[3] / rn,
            psi_r: prof[4],
            dpsi_r: prof[5] / rn,
            psi_theta: prof[6],
            dpsi_theta: prof[7] / rn,
            w: rn * prof[8],
            dw: prof[9],
        }
    }

    /// Fields produced by coefficient `j` alone.
    pub fn column_fields(&self, j: usize, r: f64) -> Result<FieldState> {
        let r = self.check_radius(r)?;
        let prof = self.column_profiles(j, r / self.r_n)?;
        Ok(self.to_dimensional(r, &prof))
    }

    pub fn evaluate_fields(&self, c: &SegmentCoefficientVector, r: f64) -> Result<FieldState> {
        let r = self.check_radius(r)?;
        let big_r = r / self.r_n;
        let mut acc = [0.0; 10];
        for j in 0..self.column_count() {
            if c.0[j] == 0.0 {
                continue;
            }
            let prof = self.column_profiles(j, big_r)?;
            for (a, v) in acc.iter_mut().zip(prof) {
                *a += c.0[j] * v;
            }
        }
        Ok(self.to_dimensional(r, &acc))
    }

    pub fn evaluate_resultants(
        &self,
        c: &SegmentCoefficientVector,
        r: f64,
    ) -> Result<ResultantState> {
        let f = self.evaluate_fields(c, r)?;
        Ok(resultants(
            &f,
            &self.section.integrals,
            &self.material,
            self.section.thickness,
            self.p,
        ))
    }
}

/// `a_k`, `b_k` from the w-normalized modal vectors.
fn normalized_coefficients(g: &GTerms, roots: &[f64; 5], nu: f64) -> ([f64; 10], [f64; 10]) {
    let mut a = [0.0; 10];
    let (g1, g2, g5) = (g.g(1), g.g(2), g.g(5));
    for k in 0..3 {
        let den = g.bending_denominator(roots[k]);
        a[k] = g2 * g5 / den;
        a[k + 5] = g5 * (roots[k] - g1) / den;
    }
    for k in 3..5 {
        a[k] = g2 / (0.5 * (1.0 - nu) * roots[k] - g1);
        a[k + 5] = 1.0;
    }
    let mut b = a;
    for k in [3, 4, 8, 9] {
        b[k] = -a[k];
    }
    (a, b)
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Null vector `(F₁, F₃, w̄)` of the potential system at root `x`.
fn bending_modal_vector(
    g: &GTerms,
    s: &SectionIntegrals,
    scales: &ScaleFactors,
    x: f64,
) -> [f64; 3] {
    let [g1, g2, g3, g4, g5, ..] = g.0;
    let row1 = [x - g1, -g2, 0.0];
    let row2 = [-g3, x - g4, -g5];
    let scale = x.abs() + g1.abs() + g2.abs();
    if row1[0].abs().max(row1[1].abs()) > 1e-9 * scale {
        // (G₂G₅, G₅(x - G₁), x² - (G₁+G₄)x + G₁G₄ - G₂G₃)
        cross(row1, row2)
    } else {
        // uncoupled in-plane dilatation: w̄ = 0
        let sd = scales.s2 * scales.delta * scales.delta;
        let kdet = s.stiffness_det();
        let mu = scales.inertia_factor();
        let row3 = [
            -sd * x * s.k2 / kdet,
            sd * x * s.k1 / kdet,
            sd * x + mu * s.i1,
        ];
        let v = cross(row2, row3);
        let n = norm3(v);
        if n > 0.0 {
            v
        } else {
            [1.0, 0.0, 0.0]
        }
    }
}

/// Null vector `(F₁, F₃, 0)` of the rotational system at root `x`.
fn rotational_modal_vector(g: &GTerms, nu: f64, x: f64) -> [f64; 3] {
    let [g1, g2, g3, g4, ..] = g.0;
    let y = 0.5 * (1.0 - nu) * x;
    let scale = y.abs() + g1.abs() + g2.abs();
    if (y - g1).abs().max(g2.abs()) > 1e-9 * scale {
        [g2, y - g1, 0.0]
    } else {
        [y - g4, g3, 0.0]
    }
}

/// FSDT polar constitutive relations with extension–bending coupling.
pub fn resultants(
    f: &FieldState,
    s: &SectionIntegrals,
    material: &MaterialPair,
    thickness: f64,
    p: u32,
) -> ResultantState {
    let nu = material.nu;
    let ec = material.e_ceramic;
    let a = ec * thickness * s.k1;
    let b = ec * thickness * thickness * s.k2;
    let d = ec * thickness.powi(3) * s.k3;
    let pf = p as f64;
    let r = f.r.max(1e-12 * thickness);
    let e_r = f.du0;
    let e_t = (f.u0 + pf * f.v0) / r;
    let g_rt = f.dv0 - f.v0 / r - pf * f.u0 / r;
    let k_r = f.dpsi_r;
    let k_t = (f.psi_r + pf * f.psi_theta) / r;
    let k_rt = f.dpsi_theta - f.psi_theta / r - pf * f.psi_r / r;
    let half = 0.5 * (1.0 - nu);
    let shear = material.kappa_sq * half * a;
    ResultantState {
        n_r: a * (e_r + nu * e_t) + b * (k_r + nu * k_t),
        n_theta: a * (e_t + nu * e_r) + b * (k_t + nu * k_r),
        n_rtheta: half * (a * g_rt + b * k_rt),
        m_r: b * (e_r + nu * e_t) + d * (k_r + nu * k_t),
        m_theta: b * (e_t + nu * e_r) + d * (k_t + nu * k_r),
        m_rtheta: half * (b * g_rt + d * k_rt),
        q_r: shear * (f.psi_r + f.dw),
        q_theta: shear * (f.psi_theta - pf * f.w / r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::MaterialPair;
    use crate::plate::{EdgeCondition, PlateConfig};

    fn reference() -> (PlateConfig, Vec<SegmentSection>) {
        let cfg = PlateConfig::reference_stepped(EdgeCondition::Clamped);
        let sections = cfg.sections().unwrap();
        (cfg, sections)
    }

    #[test]
    fn synthetic_factored_cubic() {
        let c = DispersionCoefficients {
            a1: 1.0,
            a2: -6.0,
            a3: 11.0,
            a4: -6.0,
        };
        let r = cubic_roots(&c, 1.0).unwrap();
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-13);
        }
        let complex = DispersionCoefficients {
            a1: 1.0,
            a2: 0.0,
            a3: 1.0,
            a4: 0.0,
        };
        assert!(
            matches!(cubic_roots(&complex, 2.5), Err(PlateError::UnsupportedRegime { beta, .. }) if beta == 2.5)
        );
    }

    #[test]
    fn homogeneous_dispersion_has_no_cross_terms() {
        let m = MaterialPair::homogeneous(200e9, 7800.0, 0.3);
        let mut cfg = PlateConfig::reference_stepped(EdgeCondition::Clamped);
        cfg.material = m;
        let sec = cfg.sections().unwrap()[1];
        let sc = cfg.scale_factors(&sec, 5.0).unwrap();
        let d = dispersion_coefficients(&sec.integrals, &sc);
        let s = sec.integrals;
        assert!((d.a1 - sc.s2 * sc.delta * sc.delta * s.k1 * s.k3).abs() < 1e-14 * d.a1);
        let g = GTerms::new(&s, &sc);
        assert_eq!(g.g(2), 0.0);
        assert_eq!(g.g(3), 0.0);
        let basis = SegmentSpectralBasis::new(&cfg, &sec, 2, 5.0).unwrap();
        assert_eq!(&basis.a[..3], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn low_frequency_degenerates() {
        let (cfg, secs) = reference();
        let sc = cfg.scale_factors(&secs[1], 1e-6).unwrap();
        let d = dispersion_coefficients(&secs[1].integrals, &sc);
        let scale = d.a1;
        assert!(
            d.a2.abs() < 1e-9 * scale && d.a3.abs() < 1e-9 * scale && d.a4.abs() < 1e-9 * scale
        );
    }

    #[test]
    fn vieta_and_residuals() {
        let (cfg, secs) = reference();
        for beta in [0.5, 3.0, 11.0, 40.0, 90.0] {
            for sec in &secs {
                let b = SegmentSpectralBasis::new(&cfg, sec, 1, beta).unwrap();
                let d = b.dispersion;
                let [x1, x2, x3, x4, x5] = b.roots;
                assert!(x1 <= x2 && x2 <= x3 && x4 >= x5);
                assert!(
                    ((x1 + x2 + x3) + d.a2 / d.a1).abs() <= 1e-9 * (x1.abs() + x2.abs() + x3.abs())
                );
                assert!((x1 * x2 * x3 + d.a4 / d.a1).abs() <= 1e-9 * (d.a4 / d.a1).abs());
                for x in [x1, x2, x3] {
                    assert!(d.eval(x).abs() <= 1e-9 * d.term_scale(x));
                }
                for x in [x4, x5] {
                    let q = x * x - b.xi1 * x + b.xi2;
                    assert!(q.abs() <= 1e-10 * (x * x).max(b.xi1.abs() * x.abs()).max(b.xi2.abs()));
                }
            }
        }
    }

    #[test]
    fn homogeneous_rotational_roots_satisfy_quadratic() {
        let mut cfg = PlateConfig::reference_stepped(EdgeCondition::Clamped);
        cfg.material = MaterialPair::homogeneous(200e9, 7800.0, 0.3);
        let sec = cfg.sections().unwrap()[0];
        let sc = cfg.scale_factors(&sec, 7.0).unwrap();
        let g = GTerms::new(&sec.integrals, &sc);
        let (xi1, xi2, x4, x5) = rotational_roots(&g, 0.3, 7.0).unwrap();
        assert!((xi1 - 2.0 * (g.g(1) + g.g(4)) / 0.7).abs() < 1e-12 * xi1.abs());
        assert!((xi2 - 4.0 * g.g(1) * g.g(4) / 0.49).abs() < 1e-12 * xi2.abs());
        // G₂ = 0: roots are 2G₁/(1-ν) and 2G₄/(1-ν)
        let mut want = [2.0 * g.g(1) / 0.7, 2.0 * g.g(4) / 0.7];
        want.sort_by(|a, b| b.total_cmp(a));
        assert!((x4 - want[0]).abs() < 1e-10 * want[0].abs());
        assert!((x5 - want[1]).abs() < 1e-10 * want[1].abs());
        for x in [x4, x5] {
            assert!((x * x - xi1 * x + xi2).abs() <= 1e-10 * (x * x).max(xi2.abs()));
        }
    }

    #[test]
    fn coefficient_sign_structure() {
        let (cfg, secs) = reference();
        let b = SegmentSpectralBasis::new(&cfg, &secs[0], 3, 12.0).unwrap();
        let (a, bb) = b.modal_coefficients().unwrap();
        for k in [0, 1, 2, 5, 6, 7] {
            assert_eq!(a[k], bb[k]);
        }
        for k in [3, 4, 8, 9] {
            assert_eq!(a[k], -bb[k]);
        }
        assert_eq!((a[8], a[9]), (1.0, 1.0));
        // the continuous modal vectors are the w-normalized ones times their denominators
        for k in 0..3 {
            let [f1, f3, w] = b.modal[k];
            assert!((f1 / w - a[k]).abs() <= 1e-10 * a[k].abs().max(1e-300));
            assert!((f3 / w - a[k + 5]).abs() <= 1e-10 * a[k + 5].abs());
        }
        for k in 3..5 {
            let [f1, f3, _] = b.modal[k];
            assert!((f1 / f3 - a[k]).abs() <= 1e-10 * a[k].abs());
        }
    }

    #[test]
    fn zero_coefficients_give_zero_fields() {
        let (cfg, secs) = reference();
        let b = SegmentSpectralBasis::new(&cfg, &secs[1], 2, 9.0).unwrap();
        let f = b
            .evaluate_fields(&SegmentCoefficientVector::default(), 1.5)
            .unwrap();
        assert_eq!(
            f,
            FieldState {
                r: 1.5,
                ..Default::default()
            }
        );
        let res = b
            .evaluate_resultants(&SegmentCoefficientVector::default(), 1.5)
            .unwrap();
        assert_eq!(res, ResultantState::default());
        assert!(matches!(
            b.evaluate_fields(&SegmentCoefficientVector::default(), 0.5),
            Err(PlateError::Domain(_))
        ));
    }

    #[test]
    fn single_component_matches_bessel_and_defining_identity() {
        let (cfg, secs) = reference();
        let b = SegmentSpectralBasis::new(&cfg, &secs[1], 2, 9.0).unwrap();
        assert_eq!(b.branches[0], Branch::Oscillatory);
        let c1 = 0.7;
        let mut c = SegmentCoefficientVector::default();
        c.0[0] = c1;
        let r_n = 2.0;
        for r in [1.1, 1.4, 1.9] {
            let big_r = r / r_n;
            let f = b.evaluate_fields(&c, r).unwrap();
            let j = bessel(BesselKind::J, 2, b.chi[0] * big_r).unwrap().value;
            let w_bar = f.w / r_n;
            assert!((w_bar - c1 * b.modal[0][2] * j).abs() < 1e-12 * (c1 * b.modal[0][2]).abs());
            // Δ̂w = x₁ w via finite differences
            let h = 1e-4;
            let wf = |rr: f64| b.evaluate_fields(&c, rr * r_n).unwrap().w / r_n;
            let d2 = (wf(big_r + h) - 2.0 * wf(big_r) + wf(big_r - h)) / (h * h);
            let d1 = (wf(big_r + h) - wf(big_r - h)) / (2.0 * h);
            let lap = d2 + d1 / big_r - 4.0 * w_bar / (big_r * big_r);
            assert!((lap - b.roots[0] * w_bar).abs() < 1e-6 * (b.roots[0] * w_bar).abs());
        }
    }

    fn combo(b: &SegmentSpectralBasis, seed: u64) -> SegmentCoefficientVector {
        let mut c = [0.0; 10];
        let mut s = seed;
        for v in c.iter_mut() {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            *v = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
        }
        for j in b.column_count()..10 {
            c[j] = 0.0;
        }
        SegmentCoefficientVector(c)
    }

    #[test]
    fn fields_are_linear_in_coefficients() {
        let (cfg, secs) = reference();
        let b = SegmentSpectralBasis::new(&cfg, &secs[1], 3, 14.0).unwrap();
        let c1 = combo(&b, 1);
        let c2 = combo(&b, 2);
        let alpha = -1.7;
        let mut sum = SegmentCoefficientVector::default();
        for j in 0..10 {
            sum.0[j] = alpha * c1.0[j] + c2.0[j];
        }
        let r = 1.37;
        let f1 = b.evaluate_resultants(&c1, r).unwrap();
        let f2 = b.evaluate_resultants(&c2, r).unwrap();
        let fs = b.evaluate_resultants(&sum, r).unwrap();
        let pairs = [
            (fs.n_r, f1.n_r, f2.n_r),
            (fs.m_r, f1.m_r, f2.m_r),
            (fs.q_r, f1.q_r, f2.q_r),
            (fs.n_rtheta, f1.n_rtheta, f2.n_rtheta),
        ];
        for (s, a, bb) in pairs {
            assert!((s - (alpha * a + bb)).abs() <= 1e-12 * (s.abs() + a.abs() + bb.abs()));
        }
    }

    /// Residuals of the five equations of motion (dimensionless, θ factor
    /// stripped) from finite-differenced fields.
    pub(crate) fn motion_residuals(
        b: &SegmentSpectralBasis,
        c: &SegmentCoefficientVector,
        r: f64,
    ) -> [f64; 5] {
        let rn = b.r_n;
        let h = b.section.thickness;
        let s = b.section.integrals;
        let sc = b.scales;
        let mu = sc.inertia_factor();
        let nu = b.material.nu;
        let pf = b.p as f64;
        let big_r = r / rn;
        let prof = |rr: f64| {
            let f = b.evaluate_fields(c, rr * rn).unwrap();
            [f.u0 / h, f.v0 / h, f.psi_r, f.psi_theta, f.w / rn]
        };
        let dprof = |rr: f64| {
            let f = b.evaluate_fields(c, rr * rn).unwrap();
            [
                f.du0 * rn / h,
                f.dv0 * rn / h,
                f.dpsi_r * rn,
                f.dpsi_theta * rn,
                f.dw,
            ]
        };
        let chi_max = b.chi.iter().fold(1.0f64, |m, c| m.max(*c));
        let eps = 1e-3 * b.r_outer.min(1.0 / chi_max);
        let v = prof(big_r);
        let d1 = dprof(big_r);
        // Richardson-extrapolated central differences
        let central = |e: f64| {
            let dp = dprof(big_r + e);
            let dm = dprof(big_r - e);
            (0..5)
                .map(|i| (dp[i] - dm[i]) / (2.0 * e))
                .collect::<Vec<f64>>()
        };
        let coarse = central(eps);
        let fine = central(0.5 * eps);
        let d2: Vec<f64> = (0..5).map(|i| (4.0 * fine[i] - coarse[i]) / 3.0).collect();
        let rr = big_r;
        let half = 0.5 * (1.0 - nu);
        // radial and tangential Navier operators on (u, v) pairs
        let radial = |u: f64, du: f64, d2u: f64, vv: f64, dv: f64| {
            d2u + du / rr - u / (rr * rr) + pf * dv / rr - pf * vv / (rr * rr)
                + half * (-pf * pf * u / (rr * rr) - pf * vv / (rr * rr) - pf * dv / rr)
        };
        let tangential = |u: f64, du: f64, vv: f64, dv: f64, d2v: f64| {
            -pf * u / (rr * rr) - pf * du / rr - pf * pf * vv / (rr * rr)
                + half * (pf * du / rr - pf * u / (rr * rr) - vv / (rr * rr) + dv / rr + d2v)
        };
        let lu_r = radial(v[0], d1[0], d2[0], v[1], d1[1]);
        let lp_r = radial(v[2], d1[2], d2[2], v[3], d1[3]);
        let lu_t = tangential(v[0], d1[0], v[1], d1[1], d2[1]);
        let lp_t = tangential(v[2], d1[2], v[3], d1[3], d2[3]);
        let terms = [
            vec![s.k1 * lu_r, s.k2 * lp_r, mu * s.i1 * v[0], mu * s.i2 * v[2]],
            vec![s.k1 * lu_t, s.k2 * lp_t, mu * s.i1 * v[1], mu * s.i2 * v[3]],
            vec![
                s.k2 * lu_r,
                s.k3 * lp_r,
                -sc.s2 * (v[2] + d1[4]),
                mu * s.i2 * v[0],
                mu * s.i3 * v[2],
            ],
            vec![
                s.k2 * lu_t,
                s.k3 * lp_t,
                -sc.s2 * (v[3] - pf * v[4] / rr),
                mu * s.i2 * v[1],
                mu * s.i3 * v[3],
            ],
            vec![
                sc.delta * sc.delta * sc.s2 * (d1[2] + v[2] / rr + pf * v[3] / rr),
                sc.delta * sc.delta * sc.s2 * (d2[4] + d1[4] / rr - pf * pf * v[4] / (rr * rr)),
                mu * s.i1 * v[4],
            ],
        ];
        let global = terms.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut out = [0.0; 5];
        for (o, t) in out.iter_mut().zip(terms) {
            let sum: f64 = t.iter().sum();
            let big = t.iter().fold(1e-8 * global, |m, x| m.max(x.abs()));
            *o = if big > 0.0 { sum.abs() / big } else { 0.0 };
        }
        out
    }

    #[test]
    fn every_component_solves_the_equations_of_motion() {
        let (cfg, secs) = reference();
        for p in [0u32, 1, 4] {
            for beta in [2.0, 17.0, 60.0] {
                for sec in &secs {
                    let b = SegmentSpectralBasis::new(&cfg, sec, p, beta).unwrap();
                    for j in b.active_columns() {
                        let c = SegmentCoefficientVector::unit(j);
                        for t in [0.2, 0.55, 0.9] {
                            let r = sec.inner_radius + t * (sec.outer_radius - sec.inner_radius);
                            let res = motion_residuals(&b, &c, r);
                            for (e, v) in res.iter().enumerate() {
                                assert!(
                                    *v < 1e-6,
                                    "p={p} beta={beta} seg={} col={j} eq={} res={v}",
                                    sec.index,
                                    e + 1
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn homogeneous_components_solve_the_equations_of_motion() {
        let mut cfg = PlateConfig::reference_stepped(EdgeCondition::Free);
        cfg.material = MaterialPair::homogeneous(210e9, 7850.0, 0.3);
        let secs = cfg.sections().unwrap();
        let b = SegmentSpectralBasis::new(&cfg, &secs[1], 2, 23.0).unwrap();
        for j in b.active_columns() {
            let c = SegmentCoefficientVector::unit(j);
            let res = motion_residuals(&b, &c, 1.6);
            assert!(res.iter().all(|v| *v < 1e-6), "col {j}: {res:?}");
        }
    }
}
