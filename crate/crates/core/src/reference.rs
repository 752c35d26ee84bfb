//! Reported single-class detection scores (mAP, mATE, mASE, mAOE and the
//! printed NDS*), used as golden data for [`crate::metrics::nds_star`].
//! Inputs and outputs are rounded to three decimals.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportedScore {
    /// `source->target` and which side of the transfer the row reports.
    pub setting: &'static str,
    pub method: &'static str,
    pub map: f64,
    pub mate: f64,
    pub mase: f64,
    pub maoe: f64,
    pub nds_star: f64,
}

const fn row(setting: &'static str, method: &'static str, v: [f64; 5]) -> ReportedScore {
    ReportedScore { setting, method, map: v[0], mate: v[1], mase: v[2], maoe: v[3], nds_star: v[4] }
}

/// Largest rounding gap expected between recomputed and printed NDS*.
pub const ROUNDING_TOLERANCE: f64 = 0.005;

#[rustfmt::skip]
pub const REPORTED_SCORES: &[ReportedScore] = &[
    row("nuscenes->waymo target", "oracle",      [0.552, 0.528, 0.148, 0.085, 0.649]),
    row("nuscenes->waymo target", "source-only", [0.040, 1.303, 0.265, 0.790, 0.178]),
    row("nuscenes->waymo target", "cam-convs",   [0.045, 1.301, 0.253, 0.773, 0.185]),
    row("nuscenes->waymo target", "dg",          [0.297, 0.822, 0.216, 0.372, 0.415]),
    row("waymo->nuscenes source", "source-only", [0.552, 0.528, 0.148, 0.085, 0.649]),
    row("waymo->nuscenes source", "cam-convs",   [0.549, 0.532, 0.148, 0.080, 0.648]),
    row("waymo->nuscenes source", "dg",          [0.568, 0.519, 0.149, 0.078, 0.660]),
    row("waymo->nuscenes target", "oracle",      [0.475, 0.577, 0.177, 0.147, 0.587]),
    row("waymo->nuscenes target", "source-only", [0.032, 1.305, 0.768, 0.532, 0.133]),
    row("waymo->nuscenes target", "cam-convs",   [0.038, 1.308, 0.316, 0.506, 0.215]),
    row("waymo->nuscenes target", "dg",          [0.303, 0.689, 0.218, 0.171, 0.472]),
    row("nuscenes->lyft target",  "oracle",      [0.602, 0.471, 0.152, 0.078, 0.684]),
    row("nuscenes->lyft target",  "source-only", [0.112, 0.997, 0.176, 0.389, 0.296]),
    row("nuscenes->lyft target",  "cam-convs",   [0.145, 0.999, 0.173, 0.368, 0.316]),
    row("nuscenes->lyft target",  "dg",          [0.287, 0.771, 0.170, 0.302, 0.437]),
    row("lyft->nuscenes source",  "source-only", [0.602, 0.471, 0.152, 0.078, 0.684]),
    row("lyft->nuscenes source",  "cam-convs",   [0.611, 0.465, 0.149, 0.075, 0.691]),
    row("lyft->nuscenes source",  "dg",          [0.590, 0.488, 0.153, 0.079, 0.675]),
    row("lyft->nuscenes target",  "oracle",      [0.401, 0.651, 0.179, 0.484, 0.482]),
    row("lyft->nuscenes target",  "source-only", [0.102, 1.143, 0.239, 0.789, 0.213]),
    row("lyft->nuscenes target",  "cam-convs",   [0.098, 1.198, 0.209, 1.064, 0.181]),
    row("lyft->nuscenes target",  "dg",          [0.268, 0.764, 0.205, 0.591, 0.374]),
    row("nuscenes->waymo target, second detector", "oracle",      [0.487, 0.582, 0.147, 0.078, 0.609]),
    row("nuscenes->waymo target, second detector", "source-only", [0.028, 1.354, 0.273, 0.738, 0.179]),
    row("nuscenes->waymo target, second detector", "cam-convs",   [0.034, 1.346, 0.273, 0.721, 0.185]),
    row("nuscenes->waymo target, second detector", "dg",          [0.338, 0.789, 0.202, 0.267, 0.459]),
];
