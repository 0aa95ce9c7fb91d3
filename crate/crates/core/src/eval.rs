//! Average endpoint error with ground-truth-magnitude bins.

use serde::{Deserialize, Serialize};

use crate::field::{is_valid, magnitude};
use crate::{Error, FlowField, Result};

/// Lower bin edges; the last bin is open-ended.
pub const DEFAULT_BIN_EDGES: [f64; 4] = [0.0, 10.0, 60.0, 140.0];
/// Samples whose ground truth exceeds this magnitude are left out.
pub const DEFAULT_EXCLUSION_LIMIT: f64 = 2000.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionMetric {
    /// Largest per-pixel vector magnitude.
    #[default]
    Magnitude,
    /// Largest absolute component.
    Component,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Every valid pixel of the data set weighs the same.
    #[default]
    PixelWeighted,
    /// Every sample weighs the same.
    ImageWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub exclusion_limit: f64,
    pub bin_edges: Vec<f64>,
    pub exclusion_metric: ExclusionMetric,
    pub aggregate: AggregateMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            exclusion_limit: DEFAULT_EXCLUSION_LIMIT,
            bin_edges: DEFAULT_BIN_EDGES.to_vec(),
            exclusion_metric: ExclusionMetric::Magnitude,
            aggregate: AggregateMode::PixelWeighted,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        validate_edges(&self.bin_edges)?;
        if self.exclusion_limit.is_nan() || self.exclusion_limit < 0.0 {
            return Err(Error::InvalidConfig("exclusion_limit must be >= 0".into()));
        }
        Ok(())
    }
}

fn validate_edges(edges: &[f64]) -> Result<()> {
    if edges.first() != Some(&0.0) {
        return Err(Error::InvalidConfig("bin edges must start at 0".into()));
    }
    if edges
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        || edges.iter().any(|e| !e.is_finite())
    {
        return Err(Error::InvalidConfig(
            "bin edges must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// One magnitude bin `[lower, upper)`; `upper` is `None` for the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub lower: f64,
    pub upper: Option<f64>,
    pub count: usize,
    /// Mean endpoint error, absent for an empty bin.
    pub aee: Option<f64>,
}

impl BinStat {
    fn total(&self) -> f64 {
        self.aee.unwrap_or(0.0) * self.count as f64
    }

    pub fn column_name(&self) -> String {
        match self.upper {
            Some(u) => format!("d_{}_{}", fmt_edge(self.lower), fmt_edge(u)),
            None => format!("d_{}p", fmt_edge(self.lower)),
        }
    }
}

fn fmt_edge(e: f64) -> String {
    if e.fract() == 0.0 {
        format!("{}", e as i64)
    } else {
        format!("{e}").replace('.', "p")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeeReport {
    pub aee: f64,
    pub bins: Vec<BinStat>,
    pub valid_pixels: usize,
    pub excluded: bool,
}

impl AeeReport {
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["AEE".to_string()];
        cols.extend(self.bins.iter().map(BinStat::column_name));
        cols.join(",")
    }

    /// Empty bins are written as an empty field.
    pub fn csv_row(&self) -> String {
        let mut cols = vec![format!("{:.4}", self.aee)];
        cols.extend(
            self.bins
                .iter()
                .map(|b| b.aee.map(|a| format!("{a:.4}")).unwrap_or_default()),
        );
        cols.join(",")
    }

    fn edges(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.lower).collect()
    }
}

fn bin_index(edges: &[f64], m: f64) -> usize {
    edges.iter().rposition(|&e| m >= e).unwrap_or(0)
}

/// AEE with the default bins `[0,10) [10,60) [60,140) [140,∞)`.
pub fn aee(estimate: &FlowField, truth: &FlowField) -> Result<AeeReport> {
    aee_with_edges(estimate, truth, &DEFAULT_BIN_EDGES)
}

/// Mean per-pixel endpoint error over pixels valid in both fields. Each
/// pixel is binned by the magnitude of its ground-truth vector.
pub fn aee_with_edges(estimate: &FlowField, truth: &FlowField, edges: &[f64]) -> Result<AeeReport> {
    validate_edges(edges)?;
    if !estimate.same_dims(truth) {
        return Err(Error::DimensionMismatch(format!(
            "estimate {}x{} vs truth {}x{}",
            estimate.width(),
            estimate.height(),
            truth.width(),
            truth.height()
        )));
    }
    let mut sums = vec![0.0f64; edges.len()];
    let mut counts = vec![0usize; edges.len()];
    for (&e, &t) in estimate.data().iter().zip(truth.data()) {
        if !is_valid(e) || !is_valid(t) {
            continue;
        }
        let du = e[0] - t[0];
        let dv = e[1] - t[1];
        let b = bin_index(edges, magnitude(t));
        sums[b] += du.hypot(dv);
        counts[b] += 1;
    }
    let valid: usize = counts.iter().sum();
    if valid == 0 {
        return Err(Error::NoValidPixels);
    }
    let bins = make_bins(edges, &sums, &counts);
    Ok(AeeReport {
        aee: sums.iter().sum::<f64>() / valid as f64,
        bins,
        valid_pixels: valid,
        excluded: false,
    })
}

fn make_bins(edges: &[f64], sums: &[f64], counts: &[usize]) -> Vec<BinStat> {
    (0..edges.len())
        .map(|i| BinStat {
            lower: edges[i],
            upper: edges.get(i + 1).copied(),
            count: counts[i],
            aee: (counts[i] > 0).then(|| sums[i] / counts[i] as f64),
        })
        .collect()
}

/// True iff some ground-truth vector has magnitude strictly above `limit`.
pub fn should_exclude(truth: &FlowField, limit: f64) -> bool {
    should_exclude_with(truth, limit, ExclusionMetric::Magnitude)
}

pub fn should_exclude_with(truth: &FlowField, limit: f64, metric: ExclusionMetric) -> bool {
    truth.data().iter().filter(|uv| is_valid(**uv)).any(|&uv| {
        let m = match metric {
            ExclusionMetric::Magnitude => magnitude(uv),
            ExclusionMetric::Component => uv[0].abs().max(uv[1].abs()),
        };
        m > limit
    })
}

/// Scores one sample and flags it when its ground truth is out of range.
pub fn evaluate(estimate: &FlowField, truth: &FlowField, cfg: &EvalConfig) -> Result<AeeReport> {
    let mut report = aee_with_edges(estimate, truth, &cfg.bin_edges)?;
    report.excluded = should_exclude_with(truth, cfg.exclusion_limit, cfg.exclusion_metric);
    Ok(report)
}

/// Pixel-weighted merge of all non-excluded reports.
pub fn aggregate_reports(reports: &[AeeReport]) -> Result<AeeReport> {
    aggregate_reports_with(reports, AggregateMode::PixelWeighted)
}

pub fn aggregate_reports_with(reports: &[AeeReport], mode: AggregateMode) -> Result<AeeReport> {
    let kept: Vec<&AeeReport> = reports.iter().filter(|r| !r.excluded).collect();
    let Some(first) = kept.first() else {
        return Err(Error::AllExcluded);
    };
    let edges = first.edges();
    if kept.iter().any(|r| r.edges() != edges) {
        return Err(Error::DimensionMismatch(
            "reports use different bins".into(),
        ));
    }
    let n = edges.len();
    let mut counts = vec![0usize; n];
    for r in &kept {
        for (c, b) in counts.iter_mut().zip(&r.bins) {
            *c += b.count;
        }
    }
    let valid: usize = counts.iter().sum();
    let (bins, aee) = match mode {
        AggregateMode::PixelWeighted => {
            let mut sums = vec![0.0f64; n];
            for r in &kept {
                for (s, b) in sums.iter_mut().zip(&r.bins) {
                    *s += b.total();
                }
            }
            let aee = if valid == 0 {
                0.0
            } else {
                sums.iter().sum::<f64>() / valid as f64
            };
            (make_bins(&edges, &sums, &counts), aee)
        }
        AggregateMode::ImageWeighted => {
            let bins = (0..n)
                .map(|i| {
                    let vals: Vec<f64> = kept.iter().filter_map(|r| r.bins[i].aee).collect();
                    BinStat {
                        lower: edges[i],
                        upper: edges.get(i + 1).copied(),
                        count: counts[i],
                        aee: (!vals.is_empty())
                            .then(|| vals.iter().sum::<f64>() / vals.len() as f64),
                    }
                })
                .collect();
            let aee = kept.iter().map(|r| r.aee).sum::<f64>() / kept.len() as f64;
            (bins, aee)
        }
    };
    Ok(AeeReport {
        aee,
        bins,
        valid_pixels: valid,
        excluded: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(vs: &[[f64; 2]]) -> FlowField {
        FlowField::from_vec(vs.len(), 1, vs.to_vec()).unwrap()
    }

    #[test]
    fn identical_fields_score_zero() {
        let f = field(&[[1.0, 2.0], [30.0, 0.0], [0.0, 500.0]]);
        let r = aee(&f, &f).unwrap();
        assert_eq!(r.aee, 0.0);
        assert!(r.bins.iter().all(|b| b.aee.unwrap_or(0.0) == 0.0));
    }

    #[test]
    fn three_four_five() {
        let truth = field(&[[3.0, 4.0], [0.0, 0.0]]);
        let est = field(&[[0.0, 0.0], [0.0, 0.0]]);
        let r = aee(&est, &truth).unwrap();
        assert_eq!(r.aee, 2.5);
        assert_eq!(r.bins[0].count, 2);
        assert_eq!(r.bins[0].aee, Some(2.5));
        assert_eq!(r.bins[1].aee, None);
    }

    #[test]
    fn unit_offsets_in_every_bin() {
        let truth = field(&[[5.0, 0.0], [0.0, 50.0], [60.0, 80.0], [200.0, 0.0]]);
        let est = field(&[[6.0, 0.0], [0.0, 49.0], [60.6, 80.8], [200.0, 1.0]]);
        let r = aee(&est, &truth).unwrap();
        for b in &r.bins {
            assert_eq!(b.count, 1);
            assert!((b.aee.unwrap() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn bin_edges_are_lower_inclusive() {
        let truth = field(&[[10.0, 0.0], [0.0, 60.0], [140.0, 0.0], [9.999, 0.0]]);
        let r = aee(&truth, &truth).unwrap();
        let counts: Vec<usize> = r.bins.iter().map(|b| b.count).collect();
        assert_eq!(counts, vec![1, 1, 1, 1]);
    }

    #[test]
    fn errors() {
        let a = FlowField::zeros(2, 2).unwrap();
        let b = FlowField::zeros(2, 3).unwrap();
        assert!(matches!(aee(&a, &b), Err(Error::DimensionMismatch(_))));
        let mut t = FlowField::zeros(1, 1).unwrap();
        t.set_invalid(0, 0);
        assert!(matches!(
            aee(&FlowField::zeros(1, 1).unwrap(), &t),
            Err(Error::NoValidPixels)
        ));
    }

    #[test]
    fn invalid_pixels_are_skipped() {
        let mut t = field(&[[3.0, 4.0], [0.0, 0.0]]);
        t.set_invalid(1, 0);
        let r = aee(&field(&[[0.0, 0.0], [100.0, 0.0]]), &t).unwrap();
        assert_eq!(r.valid_pixels, 1);
        assert_eq!(r.aee, 5.0);
    }

    #[test]
    fn exclusion_boundary() {
        assert!(!should_exclude(&FlowField::zeros(4, 4).unwrap(), 2000.0));
        assert!(should_exclude(&field(&[[2001.0, 0.0]]), 2000.0));
        assert!(!should_exclude(&field(&[[2000.0, 0.0]]), 2000.0));
        let diag = field(&[[1500.0, 1500.0]]);
        assert!(should_exclude(&diag, 2000.0));
        assert!(!should_exclude_with(
            &diag,
            2000.0,
            ExclusionMetric::Component
        ));
    }

    #[test]
    fn aggregate_cases() {
        let truth = field(&[[1.0, 0.0], [0.0, 1.0]]);
        let r2 = aee(&field(&[[3.0, 0.0], [0.0, 3.0]]), &truth).unwrap();
        let r4 = aee(&field(&[[5.0, 0.0], [0.0, 5.0]]), &truth).unwrap();
        assert_eq!(aggregate_reports(std::slice::from_ref(&r2)).unwrap(), r2);
        let m = aggregate_reports(&[r2.clone(), r4.clone()]).unwrap();
        assert_eq!(m.bins[0].aee, Some(3.0));
        assert_eq!(m.aee, 3.0);
        assert_eq!(m.valid_pixels, 4);

        let mut ex = r4.clone();
        ex.excluded = true;
        assert_eq!(aggregate_reports(&[r2.clone(), ex.clone()]).unwrap(), r2);
        assert!(matches!(aggregate_reports(&[ex]), Err(Error::AllExcluded)));
    }

    #[test]
    fn image_weighted_differs_from_pixel_weighted() {
        let big_t = FlowField::zeros(3, 1).unwrap();
        let big = aee(&FlowField::constant(3, 1, 1.0, 0.0).unwrap(), &big_t).unwrap();
        let small_t = FlowField::zeros(1, 1).unwrap();
        let small = aee(&FlowField::constant(1, 1, 5.0, 0.0).unwrap(), &small_t).unwrap();
        let pix =
            aggregate_reports_with(&[big.clone(), small.clone()], AggregateMode::PixelWeighted)
                .unwrap();
        let img = aggregate_reports_with(&[big, small], AggregateMode::ImageWeighted).unwrap();
        assert_eq!(pix.aee, 2.0);
        assert_eq!(img.aee, 3.0);
    }

    #[test]
    fn csv_columns() {
        let f = field(&[[3.0, 4.0]]);
        let r = aee(&FlowField::zeros(1, 1).unwrap(), &f).unwrap();
        assert_eq!(r.csv_header(), "AEE,d_0_10,d_10_60,d_60_140,d_140p");
        assert_eq!(r.csv_row(), "5.0000,5.0000,,,");
    }

    #[test]
    fn config_rejects_bad_edges() {
        let mut cfg = EvalConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.bin_edges = vec![0.0, 10.0, 10.0];
        assert!(cfg.validate().is_err());
        cfg.bin_edges = vec![1.0, 10.0];
        assert!(cfg.validate().is_err());
    }
}
