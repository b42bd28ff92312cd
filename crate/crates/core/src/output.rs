//! Machine-readable records written by the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::to_string_sig6;
use crate::pipeline::{ContactPrediction, ContactRegion};
use crate::simulator::ImprintRender;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub centroid: [f64; 2],
    pub area: usize,
    pub mean_intensity: f64,
    pub bbox: [usize; 4],
}

impl From<&ContactRegion> for RegionRecord {
    fn from(r: &ContactRegion) -> Self {
        Self {
            centroid: [r.centroid.u, r.centroid.v],
            area: r.area,
            mean_intensity: r.mean_intensity,
            bbox: r.bbox,
        }
    }
}

/// Detector output: `{"status": "contact", pixel, surface_mm, region, regions}`
/// or `{"status": "no-contact"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PredictionRecord {
    Contact {
        pixel: [f64; 2],
        surface_mm: [f64; 3],
        region: String,
        regions: Vec<RegionRecord>,
    },
    NoContact,
}

impl PredictionRecord {
    pub fn new(pred: Option<&ContactPrediction>) -> Self {
        match pred {
            None => PredictionRecord::NoContact,
            Some(p) => PredictionRecord::Contact {
                pixel: [p.pixel.u, p.pixel.v],
                surface_mm: [p.surface_point.x, p.surface_point.y, p.surface_point.z],
                region: p.surface_point.region.as_str().to_string(),
                regions: p.regions.iter().map(RegionRecord::from).collect(),
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = to_string_sig6(self).map_err(|e| Error::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// Sidecar written next to a rendered imprint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderSidecar {
    pub contact: bool,
    pub ground_truth_mm: Option<[f64; 3]>,
    pub ground_truth_px: Option<[f64; 2]>,
    pub ground_truth_region: Option<String>,
    pub max_penetration_mm: f64,
    pub width: usize,
    pub height: usize,
}

impl RenderSidecar {
    pub fn new(render: &ImprintRender) -> Self {
        Self {
            contact: render.has_contact(),
            ground_truth_mm: render.ground_truth.map(|p| [p.x, p.y, p.z]),
            ground_truth_px: render.ground_truth_pixel.map(|p| [p.u, p.v]),
            ground_truth_region: render.ground_truth.map(|p| p.region.as_str().to_string()),
            max_penetration_mm: render.max_penetration,
            width: render.image.width(),
            height: render.image.height(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = to_string_sig6(self).map_err(|e| Error::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}
