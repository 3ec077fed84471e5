#![allow(dead_code)]

use fgplate::material::MaterialPair;
use fgplate::plate::{ContinuityVariant, EdgeCondition, PlateConfig, PlateKind, SegmentGeometry};
use fgplate::segment::{SegmentCoefficientVector, SegmentSpectralBasis};

pub fn uniform_plate(
    material: MaterialPair,
    radius: f64,
    thickness: f64,
    bc: EdgeCondition,
) -> PlateConfig {
    PlateConfig {
        material,
        segments: vec![SegmentGeometry {
            outer_radius: radius,
            thickness,
        }],
        plate_kind: PlateKind::Circular,
        inner_radius: None,
        inner_bc: None,
        outer_bc: bc,
        continuity: ContinuityVariant::Twisting,
    }
}

/// Relative residuals of the five equations of motion for the field
/// `c` of `basis` at radius `r`, each divided by its largest term.
/// Second derivatives come from Richardson-extrapolated central
/// differences of the first derivatives.
pub fn motion_residuals(
    basis: &SegmentSpectralBasis,
    c: &SegmentCoefficientVector,
    r_n: f64,
    r: f64,
) -> [f64; 5] {
    let h = basis.section.thickness;
    let s = basis.section.integrals;
    let sc = basis.scales;
    let mu = sc.s1 * sc.lambda * sc.lambda;
    let nu = basis.material.nu;
    let pf = basis.p as f64;
    let rr = r / r_n;
    let f0 = basis.evaluate_fields(c, r).unwrap();
    let v = [f0.u0 / h, f0.v0 / h, f0.psi_r, f0.psi_theta, f0.w / r_n];
    let d1 = [
        f0.du0 * r_n / h,
        f0.dv0 * r_n / h,
        f0.dpsi_r * r_n,
        f0.dpsi_theta * r_n,
        f0.dw,
    ];
    let dprof = |x: f64| {
        let f = basis.evaluate_fields(c, x * r_n).unwrap();
        [
            f.du0 * r_n / h,
            f.dv0 * r_n / h,
            f.dpsi_r * r_n,
            f.dpsi_theta * r_n,
            f.dw,
        ]
    };
    let chi = basis.chi.iter().fold(1.0f64, |m, x| m.max(*x));
    let width = (basis.section.outer_radius - basis.section.inner_radius) / r_n;
    let eps = 1e-3 * width.min(1.0 / chi);
    let central = |e: f64| {
        let p = dprof(rr + e);
        let m = dprof(rr - e);
        [0, 1, 2, 3, 4].map(|i| (p[i] - m[i]) / (2.0 * e))
    };
    let (a, b) = (central(eps), central(0.5 * eps));
    let d2 = [0, 1, 2, 3, 4].map(|i| (4.0 * b[i] - a[i]) / 3.0);
    let half = 0.5 * (1.0 - nu);
    let radial = |u: f64, du: f64, d2u: f64, w: f64, dw: f64| {
        d2u + du / rr - u / (rr * rr) + pf * dw / rr - pf * w / (rr * rr)
            + half * (-pf * pf * u / (rr * rr) - pf * w / (rr * rr) - pf * dw / rr)
    };
    let tangential = |u: f64, du: f64, w: f64, dw: f64, d2w: f64| {
        -pf * u / (rr * rr) - pf * du / rr - pf * pf * w / (rr * rr)
            + half * (pf * du / rr - pf * u / (rr * rr) - w / (rr * rr) + dw / rr + d2w)
    };
    let lu_r = radial(v[0], d1[0], d2[0], v[1], d1[1]);
    let lp_r = radial(v[2], d1[2], d2[2], v[3], d1[3]);
    let lu_t = tangential(v[0], d1[0], v[1], d1[1], d2[1]);
    let lp_t = tangential(v[2], d1[2], v[3], d1[3], d2[3]);
    let dd = sc.delta * sc.delta * sc.s2;
    let terms: [Vec<f64>; 5] = [
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
            dd * (d1[2] + v[2] / rr + pf * v[3] / rr),
            dd * (d2[4] + d1[4] / rr - pf * pf * v[4] / (rr * rr)),
            mu * s.i1 * v[4],
        ],
    ];
    let global = terms.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    terms.map(|t| {
        let sum: f64 = t.iter().sum();
        let big = t.iter().fold(1e-8 * global, |m, x| m.max(x.abs()));
        if big > 0.0 {
            sum.abs() / big
        } else {
            0.0
        }
    })
}

/// Power series of `J_n` and `I_n` (small arguments only).
pub fn series_j_i(n: u32, x: f64) -> (f64, f64) {
    let mut term = (0.5 * x).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
    let (mut j, mut i) = (0.0, 0.0);
    let q = 0.25 * x * x;
    for k in 0..80 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        j += sign * term;
        i += term;
        term *= q / ((k + 1) as f64 * (k + 1 + n) as f64);
    }
    (j, i)
}

/// Classical thin clamped circular plate, axisymmetric: smallest root `k`
/// of `J₀(k)I₁(k) + I₀(k)J₁(k) = 0`, returned as `β = k²`.
pub fn classical_clamped_beta() -> f64 {
    let f = |k: f64| {
        let (j0, i0) = series_j_i(0, k);
        let (j1, i1) = series_j_i(1, k);
        j0 * i1 + i0 * j1
    };
    let (mut a, mut b) = (2.5, 3.5);
    assert!(f(a) * f(b) < 0.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let k = 0.5 * (a + b);
    k * k
}

/// Vertex of the parabola through three equally spaced samples.
pub fn parabolic_peak(x: [f64; 3], y: [f64; 3]) -> f64 {
    let h = x[1] - x[0];
    let den = y[0] - 2.0 * y[1] + y[2];
    if den == 0.0 {
        return x[1];
    }
    x[1] + 0.5 * h * (y[0] - y[2]) / den
}
