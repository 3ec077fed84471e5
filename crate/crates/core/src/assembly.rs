//! Global coefficient matrix, characteristic determinant, root search and
//! mode labelling.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{PlateError, Result};
use crate::plate::{ContinuityVariant, EdgeCondition, PlateConfig, PlateKind, SegmentSection};
use crate::segment::{resultants, FieldState, SegmentCoefficientVector, SegmentSpectralBasis};

/// A field or resultant that appears in a boundary or continuity row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    W,
    U,
    V,
    PsiR,
    PsiTheta,
    Qr,
    Nr,
    Nrt,
    Mr,
    Mrt,
    Nt,
    Mt,
}

impl Quantity {
    pub fn symbol(self) -> &'static str {
        match self {
            Quantity::W => "w",
            Quantity::U => "u0",
            Quantity::V => "v0",
            Quantity::PsiR => "psi_r",
            Quantity::PsiTheta => "psi_theta",
            Quantity::Qr => "Q_r",
            Quantity::Nr => "N_r",
            Quantity::Nrt => "N_rtheta",
            Quantity::Mr => "M_r",
            Quantity::Mrt => "M_rtheta",
            Quantity::Nt => "N_theta",
            Quantity::Mt => "M_theta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Inner,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowKind {
    Boundary(Edge, EdgeCondition),
    /// Interface between segment `i` and `i + 1` (zero-based `i`).
    Continuity(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowLabel {
    pub kind: RowKind,
    pub radius: f64,
    pub quantity: Quantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColumnLabel {
    pub segment: usize,
    /// Zero-based coefficient index `0..10`.
    pub coefficient: usize,
}

/// Quantities prescribed at an edge.
pub fn boundary_quantities(bc: EdgeCondition, p: u32) -> &'static [Quantity] {
    use Quantity::*;
    match (bc, p == 0) {
        (EdgeCondition::Clamped, false) => &[U, V, W, PsiR, PsiTheta],
        (EdgeCondition::Clamped, true) => &[U, W, PsiR],
        (EdgeCondition::HardSs, false) => &[U, V, W, PsiTheta, Mr],
        (EdgeCondition::HardSs, true) => &[U, W, Mr],
        (EdgeCondition::SoftSs, false) => &[W, Nr, Nrt, Mr, Mrt],
        (EdgeCondition::SoftSs, true) => &[W, Nr, Mr],
        (EdgeCondition::Free, false) => &[Nr, Nrt, Qr, Mr, Mrt],
        (EdgeCondition::Free, true) => &[Nr, Qr, Mr],
    }
}

/// Quantities matched across a step.
pub fn continuity_quantities(variant: ContinuityVariant, p: u32) -> &'static [Quantity] {
    use Quantity::*;
    match (variant, p == 0) {
        (ContinuityVariant::Twisting, false) => &[W, U, V, PsiR, PsiTheta, Qr, Nr, Nrt, Mr, Mrt],
        (ContinuityVariant::Hoop, false) => &[W, U, V, PsiR, PsiTheta, Qr, Nr, Nt, Mr, Mt],
        (_, true) => &[W, U, PsiR, Qr, Nr, Mr],
    }
}

/// Reference magnitudes that make every row dimensionless.
#[derive(Debug, Clone, Copy)]
struct RowScales {
    length: f64,
    force: f64,
    moment: f64,
}

impl RowScales {
    fn new(config: &PlateConfig) -> Self {
        let h = config.outer_thickness();
        let e = config.material.e_ceramic;
        RowScales {
            length: h,
            force: e * h,
            moment: e * h * h,
        }
    }
}

fn quantity_value(
    q: Quantity,
    f: &FieldState,
    basis: &SegmentSpectralBasis,
    scales: &RowScales,
) -> f64 {
    let needs_resultants = !matches!(
        q,
        Quantity::W | Quantity::U | Quantity::V | Quantity::PsiR | Quantity::PsiTheta
    );
    let res = if needs_resultants {
        resultants(
            f,
            &basis.section.integrals,
            &basis.material,
            basis.section.thickness,
            basis.p,
        )
    } else {
        Default::default()
    };
    match q {
        Quantity::W => f.w / scales.length,
        Quantity::U => f.u0 / scales.length,
        Quantity::V => f.v0 / scales.length,
        Quantity::PsiR => f.psi_r,
        Quantity::PsiTheta => f.psi_theta,
        Quantity::Qr => res.q_r / scales.force,
        Quantity::Nr => res.n_r / scales.force,
        Quantity::Nrt => res.n_rtheta / scales.force,
        Quantity::Nt => res.n_theta / scales.force,
        Quantity::Mr => res.m_r / scales.moment,
        Quantity::Mrt => res.m_rtheta / scales.moment,
        Quantity::Mt => res.m_theta / scales.moment,
    }
}

/// Values of `quantities` produced by each active column of `basis` at `r`.
fn column_block(
    basis: &SegmentSpectralBasis,
    quantities: &[Quantity],
    r: f64,
    scales: &RowScales,
) -> Result<Vec<Vec<f64>>> {
    basis
        .active_columns()
        .into_iter()
        .map(|j| {
            let f = basis.column_fields(j, r)?;
            Ok(quantities
                .iter()
                .map(|&q| quantity_value(q, &f, basis, scales))
                .collect())
        })
        .collect()
}

/// Rows for one edge: each row is the list of entries over the active
/// columns of `basis`.
pub fn boundary_rows(
    config: &PlateConfig,
    edge: Edge,
    bc: EdgeCondition,
    basis: &SegmentSpectralBasis,
    radius: f64,
) -> Result<(Vec<RowLabel>, Vec<Vec<f64>>)> {
    let quantities = boundary_quantities(bc, basis.p);
    let block = column_block(basis, quantities, radius, &RowScales::new(config))?;
    let labels = quantities
        .iter()
        .map(|&quantity| RowLabel {
            kind: RowKind::Boundary(edge, bc),
            radius,
            quantity,
        })
        .collect();
    let rows = (0..quantities.len())
        .map(|q| block.iter().map(|col| col[q]).collect())
        .collect();
    Ok((labels, rows))
}

/// Rows for the interface at `radius`: entries over the active columns of
/// `left` followed by those of `right`, as `(left) - (right)`.
pub fn continuity_rows(
    config: &PlateConfig,
    interface: usize,
    left: &SegmentSpectralBasis,
    right: &SegmentSpectralBasis,
    radius: f64,
) -> Result<(Vec<RowLabel>, Vec<Vec<f64>>)> {
    let quantities = continuity_quantities(config.continuity, left.p);
    let scales = RowScales::new(config);
    let lb = column_block(left, quantities, radius, &scales)?;
    let rb = column_block(right, quantities, radius, &scales)?;
    let labels = quantities
        .iter()
        .map(|&quantity| RowLabel {
            kind: RowKind::Continuity(interface),
            radius,
            quantity,
        })
        .collect();
    let rows = (0..quantities.len())
        .map(|q| {
            lb.iter()
                .map(|c| c[q])
                .chain(rb.iter().map(|c| -c[q]))
                .collect()
        })
        .collect();
    Ok((labels, rows))
}

/// Expected matrix order.
pub fn system_size(kind: PlateKind, segments: usize, p: u32) -> usize {
    let per = if p == 0 { 6 } else { 10 };
    match kind {
        PlateKind::Circular => per * segments - per / 2,
        PlateKind::Annular => per * segments,
    }
}

/// Assembled and scaled coefficient matrix at one `β`.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    /// Matrix before column normalization (rows dimensionless).
    pub raw: DMatrix<f64>,
    /// Column-normalized matrix.
    pub scaled: DMatrix<f64>,
    pub rows: Vec<RowLabel>,
    pub columns: Vec<ColumnLabel>,
    /// `scaled[:, j] = raw[:, j] / column_scale[j]`.
    pub column_scale: Vec<f64>,
    /// Exponent factored out of each column's Bessel functions.
    pub column_log_scale: Vec<f64>,
    pub bases: Vec<SegmentSpectralBasis>,
}

impl SystemMatrix {
    pub fn build(
        config: &PlateConfig,
        sections: &[SegmentSection],
        p: u32,
        beta: f64,
    ) -> Result<Self> {
        let bases = sections
            .iter()
            .map(|s| SegmentSpectralBasis::new(config, s, p, beta))
            .collect::<Result<Vec<_>>>()?;
        let mut columns = Vec::new();
        let mut offsets = Vec::new();
        let mut column_log_scale = Vec::new();
        for (i, b) in bases.iter().enumerate() {
            offsets.push(columns.len());
            for j in b.active_columns() {
                columns.push(ColumnLabel {
                    segment: i,
                    coefficient: j,
                });
                column_log_scale.push(b.column_log_scale(j));
            }
        }
        let size = columns.len();
        let mut labels = Vec::with_capacity(size);
        let mut raw = DMatrix::<f64>::zeros(size, size);
        let mut row = 0;
        let mut place = |labels_in: Vec<RowLabel>,
                         rows_in: Vec<Vec<f64>>,
                         offset: usize,
                         raw: &mut DMatrix<f64>| {
            for (l, entries) in labels_in.into_iter().zip(rows_in) {
                for (k, v) in entries.into_iter().enumerate() {
                    raw[(row, offset + k)] = v;
                }
                labels.push(l);
                row += 1;
            }
        };
        if config.plate_kind == PlateKind::Annular {
            let bc = config.inner_bc.expect("validated annular config");
            let (l, r) =
                boundary_rows(config, Edge::Inner, bc, &bases[0], sections[0].inner_radius)?;
            place(l, r, offsets[0], &mut raw);
        }
        for i in 0..bases.len() - 1 {
            let (l, r) = continuity_rows(
                config,
                i,
                &bases[i],
                &bases[i + 1],
                sections[i].outer_radius,
            )?;
            place(l, r, offsets[i], &mut raw);
        }
        let last = bases.len() - 1;
        let (l, r) = boundary_rows(
            config,
            Edge::Outer,
            config.outer_bc,
            &bases[last],
            sections[last].outer_radius,
        )?;
        place(l, r, offsets[last], &mut raw);
        debug_assert_eq!(labels.len(), size);

        let mut scaled = raw.clone();
        let mut column_scale = Vec::with_capacity(size);
        for j in 0..size {
            let m = raw.column(j).amax();
            if !(m > 0.0) || !m.is_finite() {
                return Err(PlateError::DegenerateConfiguration(format!(
                    "column for segment {} coefficient c{} is {} at beta = {beta}",
                    columns[j].segment + 1,
                    columns[j].coefficient + 1,
                    if m.is_finite() {
                        "identically zero"
                    } else {
                        "not finite"
                    }
                )));
            }
            scaled.column_mut(j).scale_mut(1.0 / m);
            column_scale.push(m);
        }
        Ok(SystemMatrix {
            raw,
            scaled,
            rows: labels,
            columns,
            column_scale,
            column_log_scale,
            bases,
        })
    }

    pub fn size(&self) -> usize {
        self.columns.len()
    }

    /// Determinant of the column- then row-normalized matrix as
    /// `(sign, ln|det|)`.
    pub fn determinant(&self) -> (f64, f64) {
        let mut m = self.scaled.clone();
        for i in 0..m.nrows() {
            let s = m.row(i).amax();
            if s > 0.0 {
                m.row_mut(i).scale_mut(1.0 / s);
            }
        }
        let lu = m.lu();
        let u = lu.u();
        let mut sign: f64 = lu.p().determinant();
        let mut log = 0.0;
        for i in 0..u.nrows() {
            let d = u[(i, i)];
            if d == 0.0 {
                return (0.0, f64::NEG_INFINITY);
            }
            sign *= d.signum();
            log += d.abs().ln();
        }
        (sign, log)
    }

    /// Ratio of smallest to largest singular value and the corresponding
    /// right singular vector, mapped back to unscaled coefficients.
    pub fn null_direction(&self) -> (f64, DVector<f64>) {
        let svd = self.scaled.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let (mut imin, mut smax) = (0, 0.0f64);
        for (i, s) in svd.singular_values.iter().enumerate() {
            smax = smax.max(*s);
            if *s < svd.singular_values[imin] {
                imin = i;
            }
        }
        let ratio = if smax > 0.0 {
            svd.singular_values[imin] / smax
        } else {
            0.0
        };
        let mut c = DVector::from_iterator(self.size(), v_t.row(imin).iter().copied());
        for (j, v) in c.iter_mut().enumerate() {
            *v /= self.column_scale[j];
        }
        (ratio, c)
    }

    /// Splits a global coefficient vector into per-segment vectors.
    pub fn split(&self, c: &DVector<f64>) -> Vec<SegmentCoefficientVector> {
        let mut out = vec![SegmentCoefficientVector::default(); self.bases.len()];
        for (k, col) in self.columns.iter().enumerate() {
            out[col.segment].0[col.coefficient] = c[k];
        }
        out
    }
}

/// Scaled characteristic determinant at `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantValue {
    pub beta: f64,
    pub sign: f64,
    pub log_abs: f64,
}

impl DeterminantValue {
    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }
}

pub fn characteristic_determinant(
    config: &PlateConfig,
    p: u32,
    beta: f64,
) -> Result<DeterminantValue> {
    let sections = config.sections()?;
    determinant_with(config, &sections, p, beta)
}

fn determinant_with(
    config: &PlateConfig,
    sections: &[SegmentSection],
    p: u32,
    beta: f64,
) -> Result<DeterminantValue> {
    let m = SystemMatrix::build(config, sections, p, beta)?;
    let (sign, log_abs) = m.determinant();
    Ok(DeterminantValue {
        beta,
        sign,
        log_abs,
    })
}

/// Evaluates the determinant, stepping off a branch transition by a
/// relative `1e-6` when one is hit exactly.
fn guarded_determinant(
    config: &PlateConfig,
    sections: &[SegmentSection],
    p: u32,
    beta: f64,
) -> Result<DeterminantValue> {
    match determinant_with(config, sections, p, beta) {
        Err(PlateError::BranchTransition { .. }) => {
            for factor in [1.0 + 1e-6, 1.0 - 1e-6, 1.0 + 2e-6, 1.0 - 2e-6] {
                match determinant_with(config, sections, p, beta * factor) {
                    Err(PlateError::BranchTransition { .. }) => continue,
                    other => return other,
                }
            }
            determinant_with(config, sections, p, beta)
        }
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub beta_min: f64,
    pub beta_max: f64,
    pub step: f64,
    /// Relative bisection tolerance on `β`.
    pub tolerance: f64,
    /// Largest `σ_min/σ_max` accepted at a converged root.
    pub singularity_ratio: f64,
    /// Halvings applied around local minima of `|det|`.
    pub refine_depth: u32,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            beta_min: 0.05,
            beta_max: 120.0,
            step: 0.05,
            tolerance: 1e-10,
            singularity_ratio: 1e-6,
            refine_depth: 5,
        }
    }
}

impl SweepOptions {
    pub fn with_range(beta_min: f64, beta_max: f64) -> Self {
        SweepOptions {
            beta_min,
            beta_max,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta_min > 0.0 && self.beta_max > self.beta_min && self.step > 0.0) {
            return Err(PlateError::Domain(format!(
                "invalid sweep: beta in [{}, {}] with step {}",
                self.beta_min, self.beta_max, self.step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    /// Nodal diameters.
    pub p: u32,
    /// 1-based ordinal for this `p`.
    pub n: usize,
    pub beta: f64,
    pub omega: f64,
    /// Hz
    pub frequency: f64,
    pub coefficients: Vec<SegmentCoefficientVector>,
    /// `|scaled det|` at the converged root.
    pub residual: f64,
    /// `σ_min/σ_max` of the scaled matrix at the root.
    pub singular_ratio: f64,
}

impl ModeResult {
    /// Mode-shape fields at radius `r` (θ factors stripped).
    pub fn fields_at(&self, config: &PlateConfig, r: f64) -> Result<FieldState> {
        let sections = config.sections()?;
        let i = sections
            .iter()
            .position(|s| r <= s.outer_radius * (1.0 + 1e-12))
            .ok_or_else(|| PlateError::Domain(format!("r = {r} lies outside the plate")))?;
        let basis = SegmentSpectralBasis::new(config, &sections[i], self.p, self.beta)?;
        basis.evaluate_fields(&self.coefficients[i], r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySearch {
    pub modes: Vec<ModeResult>,
    /// Fewer than the requested number of roots lie in the range.
    pub shortfall: bool,
    /// Sign changes rejected because the matrix was not singular there.
    pub rejected: Vec<f64>,
}

fn bisect(
    config: &PlateConfig,
    sections: &[SegmentSection],
    p: u32,
    mut lo: DeterminantValue,
    mut hi: DeterminantValue,
    tol: f64,
) -> Result<(DeterminantValue, DeterminantValue)> {
    while hi.beta - lo.beta > tol * 0.5 * (hi.beta + lo.beta) {
        let mid = guarded_determinant(config, sections, p, 0.5 * (lo.beta + hi.beta))?;
        if mid.beta <= lo.beta || mid.beta >= hi.beta {
            break;
        }
        if mid.sign == 0.0 {
            return Ok((mid, mid));
        }
        if mid.sign == lo.sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Finds sign changes inside `[a, c]` around a local minimum of `|det|` by
/// repeated halving.
fn refine_minimum(
    config: &PlateConfig,
    sections: &[SegmentSection],
    p: u32,
    samples: &[DeterminantValue],
    depth: u32,
) -> Result<Vec<(DeterminantValue, DeterminantValue)>> {
    if depth == 0 || samples.len() < 3 {
        return Ok(Vec::new());
    }
    let mut fine = Vec::with_capacity(2 * samples.len() - 1);
    for w in samples.windows(2) {
        fine.push(w[0]);
        fine.push(guarded_determinant(
            config,
            sections,
            p,
            0.5 * (w[0].beta + w[1].beta),
        )?);
    }
    fine.push(*samples.last().unwrap());
    let brackets: Vec<_> = fine
        .windows(2)
        .filter(|w| w[0].sign * w[1].sign < 0.0)
        .map(|w| (w[0], w[1]))
        .collect();
    if !brackets.is_empty() {
        return Ok(brackets);
    }
    let k = (1..fine.len() - 1)
        .min_by(|&a, &b| fine[a].log_abs.total_cmp(&fine[b].log_abs))
        .unwrap();
    if fine[k].log_abs < fine[k - 1].log_abs && fine[k].log_abs < fine[k + 1].log_abs {
        refine_minimum(config, sections, p, &fine[k - 1..=k + 1], depth - 1)
    } else {
        Ok(Vec::new())
    }
}

/// Roots of the characteristic determinant for wavenumber `p` in the sweep
/// range, ascending, at most `max_modes`.
pub fn find_frequencies(
    config: &PlateConfig,
    p: u32,
    options: &SweepOptions,
    max_modes: usize,
) -> Result<FrequencySearch> {
    options.validate()?;
    let sections = config.sections()?;
    let count = ((options.beta_max - options.beta_min) / options.step).ceil() as usize;
    let grid: Vec<f64> = (0..=count)
        .map(|k| (options.beta_min + k as f64 * options.step).min(options.beta_max))
        .collect();
    let samples = grid
        .par_iter()
        .map(|&b| guarded_determinant(config, &sections, p, b))
        .collect::<Result<Vec<_>>>()?;

    let mut brackets = Vec::new();
    for k in 0..samples.len() - 1 {
        if samples[k].sign * samples[k + 1].sign < 0.0 {
            brackets.push((samples[k], samples[k + 1]));
        }
    }
    let minima: Vec<usize> = (1..samples.len() - 1)
        .filter(|&k| {
            samples[k].log_abs < samples[k - 1].log_abs
                && samples[k].log_abs < samples[k + 1].log_abs
                && samples[k - 1].sign == samples[k].sign
                && samples[k].sign == samples[k + 1].sign
        })
        .collect();
    let extra = minima
        .par_iter()
        .map(|&k| {
            refine_minimum(
                config,
                &sections,
                p,
                &samples[k - 1..=k + 1],
                options.refine_depth,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    brackets.extend(extra.into_iter().flatten());
    brackets.sort_by(|a, b| a.0.beta.total_cmp(&b.0.beta));

    let candidates = brackets
        .par_iter()
        .map(|&(lo, hi)| -> Result<Candidate> {
            let (lo, hi) = bisect(config, &sections, p, lo, hi, options.tolerance)?;
            let beta = if lo.log_abs <= hi.log_abs {
                lo.beta
            } else {
                hi.beta
            };
            let m = match SystemMatrix::build(config, &sections, p, beta) {
                Ok(m) => m,
                Err(PlateError::BranchTransition { .. }) => {
                    SystemMatrix::build(config, &sections, p, beta * (1.0 + 1e-9))?
                }
                Err(e) => return Err(e),
            };
            let (ratio, c) = m.null_direction();
            let (sign, log_abs) = m.determinant();
            let residual = (sign * log_abs.exp()).abs();
            if ratio > options.singularity_ratio {
                return Ok(Candidate::Rejected(beta));
            }
            let mut coefficients = m.split(&c);
            normalize_coefficients(&mut coefficients);
            let omega = config.omega_from_beta(beta);
            Ok(Candidate::Root(ModeResult {
                p,
                n: 0,
                beta,
                omega,
                frequency: omega / (2.0 * std::f64::consts::PI),
                coefficients,
                residual,
                singular_ratio: ratio,
            }))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut modes = Vec::new();
    let mut rejected = Vec::new();
    for c in candidates {
        match c {
            Candidate::Root(m) => modes.push(m),
            Candidate::Rejected(beta) => rejected.push(beta),
        }
    }
    modes.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    modes.dedup_by(|a, b| (a.beta - b.beta).abs() <= 10.0 * options.tolerance * a.beta);
    let shortfall = modes.len() < max_modes;
    modes.truncate(max_modes);
    for (i, m) in modes.iter_mut().enumerate() {
        m.n = i + 1;
    }
    Ok(FrequencySearch {
        modes,
        shortfall,
        rejected,
    })
}

enum Candidate {
    Root(ModeResult),
    Rejected(f64),
}

/// Max-abs entry 1, first nonzero entry positive.
fn normalize_coefficients(c: &mut [SegmentCoefficientVector]) {
    let max = c
        .iter()
        .flat_map(|v| v.0.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let first = c
        .iter()
        .flat_map(|v| v.0.iter())
        .copied()
        .find(|x| x.abs() > 1e-12 * max)
        .unwrap_or(1.0);
    let s = first.signum() / max;
    for v in c.iter_mut() {
        for x in v.0.iter_mut() {
            *x *= s;
        }
    }
}

/// Frequencies for `p = 0..=p_max` merged and sorted by frequency.
pub fn mode_table(
    config: &PlateConfig,
    p_max: u32,
    n_per_p: usize,
    options: &SweepOptions,
) -> Result<Vec<ModeResult>> {
    let per_p = (0..=p_max)
        .into_par_iter()
        .map(|p| find_frequencies(config, p, options, n_per_p))
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<ModeResult> = per_p.into_iter().flat_map(|s| s.modes).collect();
    all.sort_by(|a, b| a.frequency.total_cmp(&b.frequency).then(a.p.cmp(&b.p)));
    Ok(all)
}
