//! Power-law graded material and the thickness-integrated section quantities
//! each plate segment needs.
//!
//! Properties follow `P(z) = (P_m - P_c) V_f(z) + P_c` with
//! `V_f(z) = (z/h₁ + 1/2)^g`, where `h₁` is the thickness of the innermost
//! (thickest) segment. Every segment is symmetric about the shared mid-plane,
//! so a thinner segment samples the central part of the gradient.

use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};

fn default_nu() -> f64 {
    0.3
}

fn default_kappa_sq() -> f64 {
    5.0 / 6.0
}

/// Metal/ceramic constituent pair and the gradation law parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialPair {
    /// Young's modulus of the metal constituent (Pa).
    pub e_metal: f64,
    /// Young's modulus of the ceramic constituent (Pa).
    pub e_ceramic: f64,
    /// Density of the metal constituent (kg/m³).
    pub rho_metal: f64,
    /// Density of the ceramic constituent (kg/m³).
    pub rho_ceramic: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// Power-law index `g ≥ 0`.
    pub power_index: f64,
    /// Shear correction factor κ² (not κ).
    #[serde(default = "default_kappa_sq")]
    pub kappa_sq: f64,
}

impl MaterialPair {
    /// Aluminium/alumina pair with `ν = 0.3`, `κ² = 5/6`.
    pub fn al_alumina(power_index: f64) -> Self {
        MaterialPair {
            e_metal: 70e9,
            e_ceramic: 380e9,
            rho_metal: 2700.0,
            rho_ceramic: 3800.0,
            nu: 0.3,
            power_index,
            kappa_sq: 5.0 / 6.0,
        }
    }

    /// Single-phase material (both constituents identical).
    pub fn homogeneous(e: f64, rho: f64, nu: f64) -> Self {
        MaterialPair {
            e_metal: e,
            e_ceramic: e,
            rho_metal: rho,
            rho_ceramic: rho,
            nu,
            power_index: 0.0,
            kappa_sq: 5.0 / 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("material.e_metal", self.e_metal),
            ("material.e_ceramic", self.e_ceramic),
            ("material.rho_metal", self.rho_metal),
            ("material.rho_ceramic", self.rho_ceramic),
            ("material.kappa_sq", self.kappa_sq),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PlateError::config(
                    field,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(PlateError::config(
                "material.nu",
                format!("must lie in (0, 0.5), got {}", self.nu),
            ));
        }
        if !(self.power_index.is_finite() && self.power_index >= 0.0) {
            return Err(PlateError::config(
                "material.power_index",
                format!("must be non-negative, got {}", self.power_index),
            ));
        }
        Ok(())
    }

    pub fn youngs_modulus(&self, z: f64, h1: f64) -> Result<f64> {
        let vf = volume_fraction(z, h1, self.power_index)?;
        Ok((self.e_metal - self.e_ceramic) * vf + self.e_ceramic)
    }

    pub fn density(&self, z: f64, h1: f64) -> Result<f64> {
        let vf = volume_fraction(z, h1, self.power_index)?;
        Ok((self.rho_metal - self.rho_ceramic) * vf + self.rho_ceramic)
    }
}

/// Metal volume fraction `(z/h₁ + 1/2)^g` on `[-h₁/2, h₁/2]`.
pub fn volume_fraction(z: f64, h1: f64, g: f64) -> Result<f64> {
    if !(h1 > 0.0) || g < 0.0 {
        return Err(PlateError::Domain(format!(
            "invalid gradient span h1 = {h1} or index g = {g}"
        )));
    }
    let s = z / h1 + 0.5;
    // one ulp of slack for z = ±h1/2 computed with rounding
    if !(-1e-14..=1.0 + 1e-14).contains(&s) {
        return Err(PlateError::Domain(format!(
            "z = {z} lies outside the graded span [-{h}, {h}]",
            h = h1 / 2.0
        )));
    }
    Ok(s.clamp(0.0, 1.0).powf(g))
}

/// Dimensionless inertia (`Ī₁..Ī₃`) and stiffness (`K̄₁..K̄₃`) section integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl SectionIntegrals {
    /// `K̄₁K̄₃ - K̄₂²`, positive for every admissible material.
    pub fn stiffness_det(&self) -> f64 {
        self.k1 * self.k3 - self.k2 * self.k2
    }

    /// `Ī₁Ī₃ - Ī₂²`.
    pub fn inertia_det(&self) -> f64 {
        self.i1 * self.i3 - self.i2 * self.i2
    }

    /// `true` when the extension–bending coupling terms vanish.
    pub fn is_uncoupled(&self) -> bool {
        self.k2 == 0.0 && self.i2 == 0.0
    }
}

/// Relative tolerance of the section-integral quadrature.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// Section integrals of a segment of the given thickness, with the gradient
/// referenced to `h1`:
///
/// `Īₖ = ∫_{-1/2}^{1/2} ρ(Zh)/ρ_c Z^{k-1} dZ`,
/// `K̄ₖ = (E_c hᵏ)⁻¹ ∫_{-h/2}^{h/2} E(z)/(1-ν²) z^{k-1} dz`.
pub fn section_integrals(
    thickness: f64,
    material: &MaterialPair,
    h1: f64,
) -> Result<SectionIntegrals> {
    if !(thickness > 0.0) || thickness > h1 * (1.0 + 1e-12) {
        return Err(PlateError::Domain(format!(
            "segment thickness {thickness} must lie in (0, h1 = {h1}]"
        )));
    }
    let h = thickness.min(h1);
    let g = material.power_index;
    let nu2 = 1.0 - material.nu * material.nu;
    let de = (material.e_metal - material.e_ceramic) / material.e_ceramic;
    let drho = (material.rho_metal - material.rho_ceramic) / material.rho_ceramic;

    // Normalized coordinate Z ∈ [-1/2, 1/2]; z = Z h and V_f = (Z h/h1 + 1/2)^g.
    let ratio = h / h1;
    let vf = |zn: f64| (zn * ratio + 0.5).clamp(0.0, 1.0).powf(g);

    let mut out = [0.0; 6];
    for k in 0..3 {
        let rho = adaptive_gauss_kronrod(
            &|zn| (1.0 + drho * vf(zn)) * zn.powi(k as i32),
            -0.5,
            0.5,
            QUADRATURE_TOL,
        );
        // (E_c h^{k+1})^{-1} ∫ E z^k dz = ∫ E/E_c Z^k dZ
        let stiff = adaptive_gauss_kronrod(
            &|zn| (1.0 + de * vf(zn)) * zn.powi(k as i32),
            -0.5,
            0.5,
            QUADRATURE_TOL,
        );
        out[k] = rho;
        out[3 + k] = stiff / nu2;
    }
    Ok(SectionIntegrals {
        i1: out[0],
        i2: out[1],
        i3: out[2],
        k1: out[3],
        k2: out[4],
        k3: out[5],
    })
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK_WEIGHTS_K[7];
    let mut gauss = fc * GK_WEIGHTS_G[3];
    for i in 0..7 {
        let dx = hl * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kron += GK_WEIGHTS_K[i] * pair;
        if i % 2 == 1 {
            gauss += GK_WEIGHTS_G[i / 2] * pair;
        }
    }
    (kron * hl, ((kron - gauss) * hl).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature to relative tolerance `tol`.
pub fn adaptive_gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut pieces = vec![{
        let (v, e) = gk15(f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..2000 {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= tol * total.abs().max(1e-300) || err < 1e-300 {
            break;
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    pieces.iter().map(|p| p.2).sum()
}

/// Nondimensional scale factors of one segment at angular frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactors {
    /// `S₁ = δ²/(12(1-ν²))`
    pub s1: f64,
    /// `S₂ = κ²(1-ν)K̄₁/(2δ²)`
    pub s2: f64,
    /// Segment frequency `λᵢ = ω r_n² √(ρ_c hᵢ/Dᵢ)`.
    pub lambda: f64,
    /// Flexural rigidity `Dᵢ = E_c hᵢ³/(12(1-ν²))` (N·m).
    pub flexural_rigidity: f64,
    /// Global frequency parameter `β = ω r_n² √(ρ_c h_n/D_n)`.
    pub beta: f64,
    pub omega: f64,
    /// `δᵢ = hᵢ/r_n`
    pub delta: f64,
    /// `τᵢ = hᵢ/h_n`
    pub tau: f64,
}

impl ScaleFactors {
    /// `S₁λ²`, identical for every segment: `ω² r_n² ρ_c / E_c`.
    pub fn inertia_factor(&self) -> f64 {
        self.s1 * self.lambda * self.lambda
    }
}

/// Flexural rigidity `E_c h³/(12(1-ν²))`.
pub fn flexural_rigidity(material: &MaterialPair, thickness: f64) -> f64 {
    material.e_ceramic * thickness.powi(3) / (12.0 * (1.0 - material.nu * material.nu))
}

/// `ω r_n² √(ρ_c h/D)` for a reference thickness `h`.
pub fn frequency_parameter(
    material: &MaterialPair,
    outer_radius: f64,
    thickness: f64,
    omega: f64,
) -> f64 {
    let d = flexural_rigidity(material, thickness);
    omega * outer_radius * outer_radius * (material.rho_ceramic * thickness / d).sqrt()
}

/// Scale factors of a segment with thickness `thickness` and section
/// integrals `integrals`, in a plate of outer radius `r_n` and outer
/// thickness `h_n`.
pub fn scale_factors(
    thickness: f64,
    integrals: &SectionIntegrals,
    material: &MaterialPair,
    outer_radius: f64,
    outer_thickness: f64,
    omega: f64,
) -> Result<ScaleFactors> {
    if !(omega >= 0.0) {
        return Err(PlateError::Domain(format!(
            "omega must be non-negative, got {omega}"
        )));
    }
    let nu = material.nu;
    let delta = thickness / outer_radius;
    let tau = thickness / outer_thickness;
    let beta = frequency_parameter(material, outer_radius, outer_thickness, omega);
    Ok(ScaleFactors {
        s1: delta * delta / (12.0 * (1.0 - nu * nu)),
        s2: material.kappa_sq * (1.0 - nu) * integrals.k1 / (2.0 * delta * delta),
        // λᵢ = β/τᵢ since D ∝ h³
        lambda: beta / tau,
        flexural_rigidity: flexural_rigidity(material, thickness),
        beta,
        omega,
        delta,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form power-law antiderivatives for `∫ (1 + c s^g) Z^k dZ` over
    /// the segment, with `s = Z h/h1 + 1/2`.
    fn closed_form(c: f64, g: f64, ratio: f64, k: i32) -> f64 {
        // Z = (s - 1/2)/ratio, dZ = ds/ratio
        let sa = 0.5 - 0.5 * ratio;
        let sb = 0.5 + 0.5 * ratio;
        let plain = (0.5f64.powi(k + 1) - (-0.5f64).powi(k + 1)) / (k + 1) as f64;
        // ∫ s^g (s - 1/2)^k ds expanded binomially
        let mut graded = 0.0;
        for j in 0..=k {
            let binom = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 2.0, 1.0]][k as usize][j as usize];
            let coeff = binom * (-0.5f64).powi(k - j);
            let e = g + j as f64 + 1.0;
            graded += coeff * (sb.powf(e) - sa.powf(e)) / e;
        }
        plain + c * graded / ratio.powi(k + 1)
    }

    #[test]
    fn volume_fraction_examples() {
        assert_eq!(volume_fraction(0.1, 0.2, 3.7).unwrap(), 1.0);
        assert_eq!(volume_fraction(-0.1, 0.2, 1.0).unwrap(), 0.0);
        assert!((volume_fraction(0.0, 0.2, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(
            volume_fraction(0.2, 0.2, 1.0),
            Err(PlateError::Domain(_))
        ));
    }

    #[test]
    fn homogeneous_limit_has_no_coupling() {
        let m = MaterialPair::al_alumina(0.0);
        let s = section_integrals(0.1, &m, 0.2).unwrap();
        assert!(s.k2.abs() < 1e-15 && s.i2.abs() < 1e-15);
        let same = MaterialPair::homogeneous(200e9, 7800.0, 0.3);
        for g in [0.0, 0.5, 1.0, 5.0] {
            let mut mm = same;
            mm.power_index = g;
            let s = section_integrals(0.13, &mm, 0.2).unwrap();
            assert!(s.k2.abs() < 1e-15 && s.i2.abs() < 1e-15);
        }
    }

    #[test]
    fn reference_segment_values() {
        let m = MaterialPair::al_alumina(1.0);
        let s = section_integrals(0.2, &m, 0.2).unwrap();
        // K̄₁ = (E_c + (E_m - E_c)/(g+1))/(E_c(1-ν²))
        assert!((s.k1 - 0.650665).abs() < 1e-6);
        assert!((s.k1 - (380.0 - 155.0) / 380.0 / 0.91).abs() < 1e-13);
        assert!((s.i1 - 0.855263).abs() < 1e-6);
        assert!((s.i2 + 0.0241228).abs() < 1e-6);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for g in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let mut m = MaterialPair::al_alumina(g);
            m.power_index = g;
            for h in [0.2, 0.13, 0.1] {
                let s = section_integrals(h, &m, 0.2).unwrap();
                let ratio = h / 0.2;
                let de = (m.e_metal - m.e_ceramic) / m.e_ceramic;
                let dr = (m.rho_metal - m.rho_ceramic) / m.rho_ceramic;
                let nu2 = 1.0 - m.nu * m.nu;
                let expect = [
                    (s.i1, closed_form(dr, g, ratio, 0)),
                    (s.i2, closed_form(dr, g, ratio, 1)),
                    (s.i3, closed_form(dr, g, ratio, 2)),
                    (s.k1, closed_form(de, g, ratio, 0) / nu2),
                    (s.k2, closed_form(de, g, ratio, 1) / nu2),
                    (s.k3, closed_form(de, g, ratio, 2) / nu2),
                ];
                for (got, want) in expect {
                    let scale = want.abs().max(1e-3 * s.i1);
                    assert!(
                        (got - want).abs() <= 1e-10 * scale,
                        "g={g} h={h}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn scale_factor_examples() {
        let m = MaterialPair::al_alumina(1.0);
        let s2 = section_integrals(0.1, &m, 0.2).unwrap();
        let s1 = section_integrals(0.2, &m, 0.2).unwrap();
        let omega = 2.0 * std::f64::consts::PI * 83.543;
        let outer = scale_factors(0.1, &s2, &m, 2.0, 0.1, omega).unwrap();
        assert_eq!(outer.lambda, outer.beta);
        assert!((outer.beta - 6.939).abs() < 1e-3);
        let inner = scale_factors(0.2, &s1, &m, 2.0, 0.1, omega).unwrap();
        assert!((inner.lambda - outer.beta / 2.0).abs() < 1e-14);
        assert!((inner.lambda * inner.tau - inner.beta).abs() <= 1e-15 * inner.beta);
        let zero = scale_factors(0.2, &s1, &m, 2.0, 0.1, 0.0).unwrap();
        assert_eq!((zero.lambda, zero.beta), (0.0, 0.0));
        // S₁λ² is shared across segments
        assert!(
            (inner.inertia_factor() - outer.inertia_factor()).abs()
                < 1e-14 * outer.inertia_factor()
        );
    }

    #[test]
    fn rejects_bad_material() {
        let mut m = MaterialPair::al_alumina(1.0);
        m.nu = 0.5;
        assert!(m.validate().is_err());
        m.nu = 0.3;
        m.power_index = -1.0;
        assert!(matches!(
            m.validate(),
            Err(PlateError::InvalidConfig { .. })
        ));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn determinants_positive(g in 0.0f64..12.0, ratio in 0.05f64..1.0,
                                     em in 1e9f64..500e9, ec in 1e9f64..500e9) {
                let mut m = MaterialPair::al_alumina(g);
                m.e_metal = em;
                m.e_ceramic = ec;
                let s = section_integrals(0.2 * ratio, &m, 0.2).unwrap();
                prop_assert!(s.i1 > 0.0 && s.i3 > 0.0 && s.k1 > 0.0 && s.k3 > 0.0);
                prop_assert!(s.stiffness_det() > 0.0);
                prop_assert!(s.inertia_det() > 0.0);
            }

            #[test]
            fn lambda_tau_is_beta(omega in 0.0f64..1e4, h in 0.01f64..0.2) {
                let m = MaterialPair::al_alumina(1.0);
                let s = section_integrals(h, &m, 0.2).unwrap();
                let f = scale_factors(h, &s, &m, 2.0, 0.05f64.min(h), omega).unwrap();
                prop_assert!((f.lambda * f.tau - f.beta).abs() <= 4.0 * f64::EPSILON * f.beta.max(1e-300));
            }
        }
    }
}
