//! Simulated contact-localization experiment.
//!
//! Each object is tapped at eight positions: four orientations around the
//! fingertip (contact normal at 0, pi/6, pi/4 and pi/3 from the optical axis,
//! in the `y = 0` meridian plane) and four points on the side, 0, 5, 10 and
//! 15 mm below the junction circle. Every tap is rendered, detected and
//! localized, and the Euclidean error against the rendered ground truth is
//! aggregated per position and per object.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{SensorModel, SurfacePoint};
use crate::image::TactileImage;
use crate::json::{fmt_sig6, to_string_sig6};
use crate::pipeline::{predict_contact, PipelineConfig};
use crate::simulator::{add_noise, render_imprint, ContactPose, SimulatorConfig, SolidSpec};

/// The eight tap positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PositionLabel {
    #[serde(rename = "rot_0")]
    Rot0,
    #[serde(rename = "rot_pi/6")]
    RotPi6,
    #[serde(rename = "rot_pi/4")]
    RotPi4,
    #[serde(rename = "rot_pi/3")]
    RotPi3,
    #[serde(rename = "trans_0mm")]
    Trans0,
    #[serde(rename = "trans_5mm")]
    Trans5,
    #[serde(rename = "trans_10mm")]
    Trans10,
    #[serde(rename = "trans_15mm")]
    Trans15,
}

impl PositionLabel {
    pub const ALL: [PositionLabel; 8] = [
        PositionLabel::Rot0,
        PositionLabel::RotPi6,
        PositionLabel::RotPi4,
        PositionLabel::RotPi3,
        PositionLabel::Trans0,
        PositionLabel::Trans5,
        PositionLabel::Trans10,
        PositionLabel::Trans15,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PositionLabel::Rot0 => "rot_0",
            PositionLabel::RotPi6 => "rot_pi/6",
            PositionLabel::RotPi4 => "rot_pi/4",
            PositionLabel::RotPi3 => "rot_pi/3",
            PositionLabel::Trans0 => "trans_0mm",
            PositionLabel::Trans5 => "trans_5mm",
            PositionLabel::Trans10 => "trans_10mm",
            PositionLabel::Trans15 => "trans_15mm",
        }
    }

    /// Column heading used in the markdown tables.
    pub fn heading(&self) -> &'static str {
        match self {
            PositionLabel::Rot0 => "rot 0",
            PositionLabel::RotPi6 => "rot π/6",
            PositionLabel::RotPi4 => "rot π/4",
            PositionLabel::RotPi3 => "rot π/3",
            PositionLabel::Trans0 => "trans 0 mm",
            PositionLabel::Trans5 => "trans 5 mm",
            PositionLabel::Trans10 => "trans 10 mm",
            PositionLabel::Trans15 => "trans 15 mm",
        }
    }

    /// Polar angle of the contact normal, for the fingertip positions.
    pub fn rotation(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match self {
            PositionLabel::Rot0 => Some(0.0),
            PositionLabel::RotPi6 => Some(PI / 6.0),
            PositionLabel::RotPi4 => Some(PI / 4.0),
            PositionLabel::RotPi3 => Some(PI / 3.0),
            _ => None,
        }
    }

    /// Distance below the junction circle, for the side positions.
    pub fn translation(&self) -> Option<f64> {
        match self {
            PositionLabel::Trans0 => Some(0.0),
            PositionLabel::Trans5 => Some(5.0),
            PositionLabel::Trans10 => Some(10.0),
            PositionLabel::Trans15 => Some(15.0),
            _ => None,
        }
    }

    pub fn is_fingertip(&self) -> bool {
        self.rotation().is_some()
    }
}

impl fmt::Display for PositionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A solid with the name it is reported under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedSolid {
    pub name: String,
    pub solid: SolidSpec,
}

impl NamedSolid {
    pub fn new(name: impl Into<String>, solid: SolidSpec) -> Self {
        Self { name: name.into(), solid }
    }
}

/// The seven default test objects, sized so that their imprints pass the
/// detector's area gate at the default camera resolution.
pub fn default_objects() -> Vec<NamedSolid> {
    vec![
        NamedSolid::new("cone", SolidSpec::Cone { base_radius: 2.3, height: 1.0 }),
        NamedSolid::new("sphere", SolidSpec::Sphere { radius: 0.65 }),
        NamedSolid::new("irregular", SolidSpec::IrregularPrism { scale: 0.3, height: 1.0 }),
        NamedSolid::new("cylinder", SolidSpec::Cylinder { radius: 0.2, height: 1.0 }),
        NamedSolid::new(
            "edge",
            SolidSpec::Edge { base_half_width: 1.3, height: 1.0, half_length: 0.2 },
        ),
        NamedSolid::new(
            "tube",
            SolidSpec::Tube { inner_radius: 0.05, outer_radius: 0.22, height: 1.0 },
        ),
        NamedSolid::new(
            "slab",
            SolidSpec::Slab { half_width: 0.22, half_length: 0.22, half_thickness: 0.2 },
        ),
    ]
}

/// One protocol position and the pose that realises it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolPose {
    pub label: PositionLabel,
    /// Commanded first-touch point on the membrane.
    pub contact: Vector3<f64>,
    /// Outward membrane normal at `contact`.
    pub normal: Vector3<f64>,
    pub pose: ContactPose,
}

/// The eight tap poses for a given membrane.
pub fn generate_poses(model: &SensorModel, indentation_mm: f64) -> Result<Vec<ProtocolPose>> {
    let g = model.geometry;
    g.validate()?;
    let deepest = PositionLabel::Trans15.translation().unwrap_or_default();
    if g.d <= deepest {
        return Err(Error::Config(format!(
            "d = {} mm leaves no cylinder {} mm below the junction",
            g.d, deepest
        )));
    }
    PositionLabel::ALL
        .iter()
        .map(|&label| {
            let (contact, normal) = match (label.rotation(), label.translation()) {
                (Some(theta), _) => {
                    let n = Vector3::new(theta.sin(), 0.0, theta.cos());
                    (Vector3::new(0.0, 0.0, g.d) + n * g.r, n)
                }
                (_, Some(t)) => (Vector3::new(g.r, 0.0, g.d - t), Vector3::x()),
                _ => unreachable!("every label is a rotation or a translation"),
            };
            let pose = ContactPose::facing(contact, normal, indentation_mm)?;
            Ok(ProtocolPose { label, contact, normal, pose })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSpec {
    pub object: NamedSolid,
    pub position: ProtocolPose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Ok,
    NoContact,
    NoIntersection,
}

impl TrialStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::NoContact => "no-contact",
            TrialStatus::NoIntersection => "no-intersection",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub object: String,
    pub position: PositionLabel,
    pub predicted: Option<SurfacePoint>,
    pub truth: Option<SurfacePoint>,
    /// Euclidean distance in mm; present only for `Ok` trials.
    pub error_mm: Option<f64>,
    pub status: TrialStatus,
}

/// Which standard deviation estimator the report uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdKind {
    /// `n - 1` denominator.
    #[default]
    Sample,
    /// `n` denominator.
    Population,
}

impl StdKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StdKind::Sample => "sample",
            StdKind::Population => "population",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Penetration commanded past first touch, in mm.
    pub indentation_mm: f64,
    pub std: StdKind,
    pub objects: Vec<NamedSolid>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            indentation_mm: 0.1,
            std: StdKind::Sample,
            objects: default_objects(),
        }
    }
}

/// Mean and spread of the errors in one table cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub mean_mm: Option<f64>,
    pub std_mm: Option<f64>,
    /// Number of `Ok` trials in the cell.
    pub n: usize,
    /// Number of trials excluded because they did not succeed.
    pub excluded: usize,
}

impl Cell {
    pub fn from_errors(label: impl Into<String>, errors: &[f64], excluded: usize, std: StdKind) -> Self {
        let n = errors.len();
        let mean = (n > 0).then(|| errors.iter().sum::<f64>() / n as f64);
        let spread = mean.map(|m| {
            let ss: f64 = errors.iter().map(|e| (e - m).powi(2)).sum();
            let denom = match std {
                StdKind::Sample if n > 1 => (n - 1) as f64,
                StdKind::Sample => return 0.0,
                StdKind::Population => n as f64,
            };
            (ss / denom).sqrt()
        });
        Self { label: label.into(), mean_mm: mean, std_mm: spread, n, excluded }
    }

    /// `"mean ± std"` with two decimals, or `"n/a"` for an empty cell.
    pub fn formatted(&self) -> String {
        match (self.mean_mm, self.std_mm) {
            (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
            _ => "n/a".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub std: StdKind,
    pub per_position: Vec<Cell>,
    pub per_object: Vec<Cell>,
    pub overall_mean_mm: Option<f64>,
    pub trials_ok: usize,
    pub trials_excluded: usize,
}

impl AggregateReport {
    /// Aggregates trial results. Positions appear in protocol order and
    /// objects in the order they were first seen.
    pub fn from_trials(trials: &[TrialResult], std: StdKind) -> Self {
        let mut objects: Vec<&str> = Vec::new();
        for t in trials {
            if !objects.contains(&t.object.as_str()) {
                objects.push(&t.object);
            }
        }
        let cell = |label: &str, pick: &dyn Fn(&TrialResult) -> bool| {
            let members: Vec<&TrialResult> = trials.iter().filter(|t| pick(t)).collect();
            let errors: Vec<f64> = members.iter().filter_map(|t| t.error_mm).collect();
            Cell::from_errors(label, &errors, members.len() - errors.len(), std)
        };
        let per_position = if trials.is_empty() {
            Vec::new()
        } else {
            PositionLabel::ALL
                .iter()
                .map(|p| cell(p.as_str(), &|t: &TrialResult| t.position == *p))
                .collect()
        };
        let per_object = objects
            .iter()
            .map(|o| cell(o, &|t: &TrialResult| t.object == *o))
            .collect();
        let errors: Vec<f64> = trials.iter().filter_map(|t| t.error_mm).collect();
        let overall = Cell::from_errors("overall", &errors, trials.len() - errors.len(), std);
        Self {
            std,
            per_position,
            per_object,
            overall_mean_mm: overall.mean_mm,
            trials_ok: overall.n,
            trials_excluded: overall.excluded,
        }
    }
}

/// Output formats of [`emit_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Usage(format!("unknown report format {other:?} (expected csv, md or json)"))),
        }
    }
}

fn markdown_table(out: &mut String, title: &str, cells: &[Cell], heading: impl Fn(&Cell) -> String) {
    let _ = writeln!(out, "{title}\n");
    let heads: Vec<String> = cells.iter().map(&heading).collect();
    let _ = writeln!(out, "| {} |", heads.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(cells.len()));
    let values: Vec<String> = cells.iter().map(Cell::formatted).collect();
    let _ = writeln!(out, "| {} |", values.join(" | "));
    let counts: Vec<String> = cells.iter().map(|c| format!("n={} (excl. {})", c.n, c.excluded)).collect();
    let _ = writeln!(out, "| {} |\n", counts.join(" | "));
}

fn position_heading(label: &str) -> String {
    PositionLabel::ALL
        .iter()
        .find(|p| p.as_str() == label)
        .map(|p| p.heading().to_string())
        .unwrap_or_else(|| label.to_string())
}

/// Renders an aggregate report as CSV, markdown tables or JSON.
pub fn emit_report(report: &AggregateReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = to_string_sig6(report).map_err(|e| Error::Usage(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut out = String::from("group,label,mean_mm,std_mm,n,excluded,std_kind\n");
            let opt = |v: Option<f64>| v.map(fmt_sig6).unwrap_or_default();
            for (group, cells) in [("position", &report.per_position), ("object", &report.per_object)] {
                for c in cells {
                    let _ = writeln!(
                        out,
                        "{group},{},{},{},{},{},{}",
                        c.label,
                        opt(c.mean_mm),
                        opt(c.std_mm),
                        c.n,
                        c.excluded,
                        report.std.as_str()
                    );
                }
            }
            let _ = writeln!(
                out,
                "overall,all,{},,{},{},{}",
                opt(report.overall_mean_mm),
                report.trials_ok,
                report.trials_excluded,
                report.std.as_str()
            );
            Ok(out)
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let unit = format!("mm, mean ± {} std", report.std.as_str());
            markdown_table(
                &mut out,
                &format!("Contact errors per position ({unit})"),
                &report.per_position,
                |c| position_heading(&c.label),
            );
            markdown_table(
                &mut out,
                &format!("Contact errors per object ({unit})"),
                &report.per_object,
                |c| c.label.clone(),
            );
            let overall = report
                .overall_mean_mm
                .map(|m| format!("{m:.2} mm"))
                .unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                out,
                "Overall mean error: {overall} over {} trials ({} excluded)",
                report.trials_ok, report.trials_excluded
            );
            Ok(out)
        }
    }
}

/// Per-trial CSV.
pub fn trials_csv(trials: &[TrialResult]) -> String {
    let mut out = String::from(
        "object,position_label,pred_x,pred_y,pred_z,true_x,true_y,true_z,error_mm,status\n",
    );
    let xyz = |p: &Option<SurfacePoint>| match p {
        Some(p) => format!("{},{},{}", fmt_sig6(p.x), fmt_sig6(p.y), fmt_sig6(p.z)),
        None => ",,".into(),
    };
    for t in trials {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            t.object,
            t.position,
            xyz(&t.predicted),
            xyz(&t.truth),
            t.error_mm.map(fmt_sig6).unwrap_or_default(),
            t.status.as_str()
        );
    }
    out
}

/// Everything needed to run the protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub model: SensorModel,
    pub width: usize,
    pub height: usize,
    pub pipeline: PipelineConfig,
    pub simulator: SimulatorConfig,
    pub harness: HarnessConfig,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub trials: Vec<TrialResult>,
    pub report: AggregateReport,
}

fn trial_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        self.model.geometry.validate()?;
        self.model.intrinsics.validate()?;
        self.pipeline.validate()?;
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image size must be positive".into()));
        }
        self.simulator.validate()?;
        for o in &self.harness.objects {
            o.solid.validate()?;
        }
        Ok(())
    }

    /// The trial grid ordered by object, then position.
    pub fn trials(&self, objects: &[NamedSolid]) -> Result<Vec<TrialSpec>> {
        let poses = generate_poses(&self.model, self.harness.indentation_mm)?;
        Ok(objects
            .iter()
            .flat_map(|o| poses.iter().map(move |p| TrialSpec { object: o.clone(), position: *p }))
            .collect())
    }

    /// Renders the reference and contact frames of one trial.
    pub fn frames(&self, spec: &TrialSpec, index: usize) -> Result<(TactileImage, TactileImage, Option<SurfacePoint>)> {
        let render = render_imprint(
            &spec.object.solid,
            &spec.position.pose,
            &self.model,
            self.width,
            self.height,
            self.simulator.normalization,
        )?;
        let seed = trial_seed(self.seed, index);
        let sigma = self.simulator.noise_sigma;
        let reference = add_noise(&TactileImage::zeros(self.width, self.height), sigma, seed)?;
        let contact = add_noise(&render.image, sigma, seed.wrapping_add(1))?;
        Ok((reference, contact, render.ground_truth))
    }

    pub fn run_trial(&self, spec: &TrialSpec, index: usize) -> Result<TrialResult> {
        let (reference, contact, truth) = self.frames(spec, index)?;
        let mut result = TrialResult {
            object: spec.object.name.clone(),
            position: spec.position.label,
            predicted: None,
            truth,
            error_mm: None,
            status: TrialStatus::NoContact,
        };
        let Some(truth) = truth else {
            return Ok(result);
        };
        match predict_contact(&reference, &contact, &self.pipeline, &self.model.intrinsics, &self.model.geometry) {
            Ok(Some(pred)) => {
                result.error_mm = Some(pred.surface_point.distance(&truth));
                result.predicted = Some(pred.surface_point);
                result.status = TrialStatus::Ok;
            }
            Ok(None) => {}
            Err(Error::NoIntersection) => result.status = TrialStatus::NoIntersection,
            Err(e) => return Err(e),
        }
        Ok(result)
    }

    /// Runs every trial; per-trial failures are recorded in the results.
    pub fn run(&self, objects: &[NamedSolid]) -> Result<ExperimentOutcome> {
        self.validate()?;
        let specs = self.trials(objects)?;
        let trials = specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| self.run_trial(spec, i))
            .collect::<Result<Vec<_>>>()?;
        let report = AggregateReport::from_trials(&trials, self.harness.std);
        Ok(ExperimentOutcome { trials, report })
    }
}

/// Runs the protocol over `objects`.
pub fn run_experiment(objects: &[NamedSolid], experiment: &Experiment) -> Result<ExperimentOutcome> {
    experiment.run(objects)
}
