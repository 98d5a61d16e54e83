//! Request and response documents for the one-shot operations, plus the
//! functions that answer them. The command line runs these in-process; the
//! service runs the same functions behind HTTP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{serde_exact, Exact};
use crate::kinematics::{classify, CurveClass, Frame, Rig, DEFAULT_CLASSIFY_TOLERANCE};
use crate::linear::{classify_linear, linear_slide_fraction, LinearClass, LinearRig};
use crate::render::{to_csv, to_svg, RenderStyle};
use crate::trace::{
    count_cusps, sample_linear, sample_trace, sweep_family, CuspCount, FamilySpec, Trace, TraceMeta,
    DEFAULT_SAMPLES_PER_CLOSURE,
};
use crate::verify::{run_suites, VerifyReport};

/// Upper bound on samples per request.
pub const MAX_SAMPLES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Svg,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "svg" => Ok(OutputFormat::Svg),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Parse(format!("unknown format {other:?} (expected svg or csv)"))),
        }
    }
}

fn default_frame() -> Frame {
    Frame::Turntable
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES_PER_CLOSURE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub rig: Rig,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRequest {
    pub rig: Rig,
    #[serde(default = "default_frame")]
    pub frame: Frame,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRequest {
    #[serde(flatten)]
    pub spec: FamilySpec,
    #[serde(default = "default_frame")]
    pub frame: Frame,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRequest {
    pub rig: LinearRig,
    pub t_end: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRequest {
    pub seed: u64,
    #[serde(default)]
    pub suites: Vec<String>,
}

/// A rendered document. `meta` has one entry per trace; for CSV output it is
/// the sidecar content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rendered {
    pub format: OutputFormat,
    pub body: String,
    pub meta: Vec<TraceMeta>,
}

impl Rendered {
    pub fn content_type(&self) -> &'static str {
        match self.format {
            OutputFormat::Svg => "image/svg+xml",
            OutputFormat::Csv => "text/csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotResponse {
    pub class: CurveClass,
    pub cusps: CuspCount,
    pub rendered: Rendered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub rig: Rig,
    pub class: CurveClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResponse {
    pub members: Vec<FamilyMember>,
    pub rendered: Rendered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearResponse {
    pub class: LinearClass,
    /// Absent when `r = 0`.
    #[serde(default, with = "optional_exact", skip_serializing_if = "Option::is_none")]
    pub slide_fraction: Option<Exact>,
    #[serde(with = "serde_exact")]
    pub speed: Exact,
    pub rendered: Rendered,
}

mod optional_exact {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<Exact>, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match value {
            Some(v) => serde_exact::serialize(v, serializer),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Option<Exact>, D::Error> {
        serde_exact::deserialize(deserializer).map(Some)
    }
}

fn check_samples(samples: usize, traces: usize) -> Result<()> {
    if samples.saturating_mul(traces.max(1)) > MAX_SAMPLES {
        return Err(Error::InvalidValue(format!(
            "too many samples requested ({samples} x {traces}); the limit is {MAX_SAMPLES}"
        )));
    }
    Ok(())
}

fn render_one(trace: &Trace, format: OutputFormat) -> Result<Rendered> {
    let body = match format {
        OutputFormat::Svg => to_svg(std::slice::from_ref(trace), &RenderStyle::default())?,
        OutputFormat::Csv => to_csv(trace),
    };
    Ok(Rendered {
        format,
        body,
        meta: vec![trace.meta()],
    })
}

pub fn classify_rig(req: &ClassifyRequest) -> Result<CurveClass> {
    classify(&req.rig, req.tolerance.unwrap_or(DEFAULT_CLASSIFY_TOLERANCE))
}

pub fn plot(req: &PlotRequest) -> Result<PlotResponse> {
    check_samples(req.samples, 1)?;
    let trace = sample_trace(&req.rig, req.frame, req.samples)?;
    Ok(PlotResponse {
        class: classify(&req.rig, DEFAULT_CLASSIFY_TOLERANCE)?,
        cusps: count_cusps(&trace)?,
        rendered: render_one(&trace, req.format)?,
    })
}

/// Families always render as one SVG document.
pub fn family(req: &FamilyRequest) -> Result<FamilyResponse> {
    check_samples(req.samples, req.spec.steps.len())?;
    let rigs = req.spec.rigs()?;
    let members = rigs
        .into_iter()
        .map(|rig| {
            let class = classify(&rig, DEFAULT_CLASSIFY_TOLERANCE)?;
            Ok(FamilyMember { rig, class })
        })
        .collect::<Result<Vec<_>>>()?;
    let traces = sweep_family(&req.spec, req.frame, req.samples)?;
    Ok(FamilyResponse {
        members,
        rendered: Rendered {
            format: OutputFormat::Svg,
            body: to_svg(&traces, &RenderStyle::default())?,
            meta: traces.iter().map(Trace::meta).collect(),
        },
    })
}

pub fn linear(req: &LinearRequest) -> Result<LinearResponse> {
    check_samples(req.samples, 1)?;
    let trace = sample_linear(&req.rig, req.t_end, req.samples)?;
    Ok(LinearResponse {
        class: classify_linear(&req.rig),
        slide_fraction: linear_slide_fraction(&req.rig).ok(),
        speed: req.rig.speed(),
        rendered: render_one(&trace, req.format)?,
    })
}

pub fn verify(req: &VerifyRequest) -> Result<VerifyReport> {
    run_suites(req.seed, &req.suites)
}

/// Sidecar text for a single-trace CSV rendering.
pub fn sidecar(rendered: &Rendered) -> Option<String> {
    match rendered.meta.as_slice() {
        [meta] => Some(serde_json::to_string_pretty(meta).expect("trace metadata serializes")),
        _ => None,
    }
}
