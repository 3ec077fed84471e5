//! Plate geometry, edge conditions and the JSON configuration document.

use serde::{Deserialize, Serialize};

use crate::error::{PlateError, Result};
use crate::material::{self, MaterialPair, ScaleFactors, SectionIntegrals};

/// One annular (or, innermost, circular) constant-thickness segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentGeometry {
    /// Outer radius `rᵢ` (m).
    pub outer_radius: f64,
    /// Thickness `hᵢ` (m).
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateKind {
    Circular,
    Annular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCondition {
    Free,
    SoftSs,
    HardSs,
    Clamped,
}

impl EdgeCondition {
    pub fn label(self) -> &'static str {
        match self {
            EdgeCondition::Free => "free",
            EdgeCondition::SoftSs => "soft simply supported",
            EdgeCondition::HardSs => "hard simply supported",
            EdgeCondition::Clamped => "clamped",
        }
    }
}

/// Which resultant pair is matched across a step alongside `N_r` and `M_r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityVariant {
    /// Traction continuity on the cylindrical cut: `N_rθ`, `M_rθ`.
    #[default]
    Twisting,
    /// Hoop resultants `N_θ`, `M_θ`.
    Hoop,
}

/// Full problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateConfig {
    pub material: MaterialPair,
    /// Segments ordered from the centre outwards.
    pub segments: Vec<SegmentGeometry>,
    pub plate_kind: PlateKind,
    /// Hole radius for annular plates (m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_bc: Option<EdgeCondition>,
    pub outer_bc: EdgeCondition,
    #[serde(default)]
    pub continuity: ContinuityVariant,
}

/// Per-segment data that does not depend on frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSection {
    pub index: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub thickness: f64,
    pub integrals: SectionIntegrals,
}

impl PlateConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PlateConfig = serde_json::from_str(text).map_err(|e| {
            PlateError::config(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if self.segments.is_empty() {
            return Err(PlateError::config(
                "segments",
                "at least one segment is required",
            ));
        }
        let mut prev = match self.plate_kind {
            PlateKind::Circular => {
                if self.inner_bc.is_some() {
                    return Err(PlateError::config(
                        "inner_bc",
                        "circular plates have no inner edge",
                    ));
                }
                if self.inner_radius.is_some() {
                    return Err(PlateError::config(
                        "inner_radius",
                        "circular plates have no hole",
                    ));
                }
                0.0
            }
            PlateKind::Annular => {
                let a = self.inner_radius.ok_or_else(|| {
                    PlateError::config("inner_radius", "required for annular plates")
                })?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(PlateError::config(
                        "inner_radius",
                        format!("must be positive, got {a}"),
                    ));
                }
                if self.inner_bc.is_none() {
                    return Err(PlateError::config(
                        "inner_bc",
                        "required for annular plates",
                    ));
                }
                a
            }
        };
        let h1 = self.segments[0].thickness;
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.thickness > 0.0 && s.thickness.is_finite()) {
                return Err(PlateError::config(
                    format!("segments[{i}].thickness"),
                    format!("must be positive, got {}", s.thickness),
                ));
            }
            if !(s.outer_radius > prev && s.outer_radius.is_finite()) {
                return Err(PlateError::config(
                    format!("segments[{i}].outer_radius"),
                    format!(
                        "must exceed the previous radius {prev}, got {}",
                        s.outer_radius
                    ),
                ));
            }
            if s.thickness > h1 {
                return Err(PlateError::config(
                    format!("segments[{i}].thickness"),
                    format!("segment 1 must be the thickest ({} > {h1})", s.thickness),
                ));
            }
            prev = s.outer_radius;
        }
        Ok(())
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// `r_n`
    pub fn outer_radius(&self) -> f64 {
        self.segments.last().expect("validated").outer_radius
    }

    /// `h_n`
    pub fn outer_thickness(&self) -> f64 {
        self.segments.last().expect("validated").thickness
    }

    /// `h₁`, the gradient reference span.
    pub fn gradient_thickness(&self) -> f64 {
        self.segments[0].thickness
    }

    pub fn segment_inner_radius(&self, index: usize) -> f64 {
        if index == 0 {
            match self.plate_kind {
                PlateKind::Circular => 0.0,
                PlateKind::Annular => self.inner_radius.unwrap_or(0.0),
            }
        } else {
            self.segments[index - 1].outer_radius
        }
    }

    /// Segment sections with their section integrals.
    pub fn sections(&self) -> Result<Vec<SegmentSection>> {
        let h1 = self.gradient_thickness();
        self.segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(SegmentSection {
                    index: i,
                    inner_radius: self.segment_inner_radius(i),
                    outer_radius: s.outer_radius,
                    thickness: s.thickness,
                    integrals: material::section_integrals(s.thickness, &self.material, h1)?,
                })
            })
            .collect()
    }

    /// `ω` for a given `β`.
    pub fn omega_from_beta(&self, beta: f64) -> f64 {
        let unit = material::frequency_parameter(
            &self.material,
            self.outer_radius(),
            self.outer_thickness(),
            1.0,
        );
        beta / unit
    }

    pub fn beta_from_omega(&self, omega: f64) -> f64 {
        material::frequency_parameter(
            &self.material,
            self.outer_radius(),
            self.outer_thickness(),
            omega,
        )
    }

    pub fn scale_factors(&self, section: &SegmentSection, beta: f64) -> Result<ScaleFactors> {
        material::scale_factors(
            section.thickness,
            &section.integrals,
            &self.material,
            self.outer_radius(),
            self.outer_thickness(),
            self.omega_from_beta(beta),
        )
    }

    /// Two-segment circular plate with the given material and edge.
    pub fn stepped_circular(
        material: MaterialPair,
        step_radius: f64,
        outer_radius: f64,
        inner_thickness: f64,
        outer_thickness: f64,
        outer_bc: EdgeCondition,
    ) -> Self {
        PlateConfig {
            material,
            segments: vec![
                SegmentGeometry {
                    outer_radius: step_radius,
                    thickness: inner_thickness,
                },
                SegmentGeometry {
                    outer_radius,
                    thickness: outer_thickness,
                },
            ],
            plate_kind: PlateKind::Circular,
            inner_radius: None,
            inner_bc: None,
            outer_bc,
            continuity: ContinuityVariant::Twisting,
        }
    }

    /// Aluminium/alumina (`g = 1`) circular plate with `h₁ = 0.2, r₁ = 1,
    /// h₂ = 0.1, r₂ = 2` (m).
    pub fn reference_stepped(outer_bc: EdgeCondition) -> Self {
        Self::stepped_circular(MaterialPair::al_alumina(1.0), 1.0, 2.0, 0.2, 0.1, outer_bc)
    }
}
