//! Pearson and Spearman correlation, and the per-metric correlation report.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{domain, Error, Result};
use crate::evaluation::EvaluationRecord;
use crate::metric::MetricId;

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(domain(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(domain("need at least two observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(domain("non-finite observation"));
    }
    for (name, xs) in [("x", x), ("y", y)] {
        if xs.iter().all(|v| *v == xs[0]) {
            return Err(Error::UndefinedCorrelation(format!("{name} is constant")));
        }
    }
    Ok(())
}

/// Sample Pearson correlation coefficient.
///
/// Constant inputs are an error rather than a coefficient of zero.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rank correlation: Pearson over average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// One row of the correlation table. `None` marks an undefined coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationRow {
    pub sre_pearson: Option<f64>,
    pub mre_pearson: Option<f64>,
    pub sre_spearman: Option<f64>,
    pub mre_spearman: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationReport {
    pub rows: BTreeMap<MetricId, CorrelationRow>,
}

/// Correlates single- and multi-reference scores with human scores, per metric.
///
/// Records lacking a metric are left out of that metric's row.
pub fn correlation_report<'m, I>(records: &[EvaluationRecord], metrics: I) -> CorrelationReport
where
    I: IntoIterator<Item = &'m MetricId>,
{
    let mut rows = BTreeMap::new();
    for metric in metrics {
        let mut human = Vec::new();
        let mut sre = Vec::new();
        let mut mre = Vec::new();
        for r in records {
            if let Some(s) = r.scores.get(metric) {
                human.push(r.human_score);
                sre.push(s.sre);
                mre.push(s.mre);
            }
        }
        rows.insert(
            metric.clone(),
            CorrelationRow {
                sre_pearson: pearson(&sre, &human).ok(),
                mre_pearson: pearson(&mre, &human).ok(),
                sre_spearman: spearman(&sre, &human).ok(),
                mre_spearman: spearman(&mre, &human).ok(),
                n: human.len(),
            },
        );
    }
    CorrelationReport { rows }
}

pub(crate) struct Cell(pub Option<f64>);

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = f.width().unwrap_or(0);
        match self.0 {
            Some(v) => write!(f, "{:>width$}", format!("{v:.4}")),
            None => write!(f, "{:>width$}", "-"),
        }
    }
}

impl fmt::Display for CorrelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_width = self.rows.keys().map(|m| m.name().len()).max().unwrap_or(0).max(6);
        writeln!(f, "{:<name_width$}  {:^17}  {:^17}  {:>5}", "", "Pearson", "Spearman", "")?;
        writeln!(f, "{:<name_width$}  {:>8} {:>8}  {:>8} {:>8}  {:>5}", "metric", "SRE", "MRE", "SRE", "MRE", "n")?;
        for (metric, row) in &self.rows {
            writeln!(
                f,
                "{:<name_width$}  {:>8} {:>8}  {:>8} {:>8}  {:>5}",
                metric.name(),
                Cell(row.sre_pearson),
                Cell(row.mre_pearson),
                Cell(row.sre_spearman),
                Cell(row.mre_spearman),
                row.n
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for crate::evaluation::DeltaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_width = self.metrics.keys().map(|m| m.name().len()).max().unwrap_or(0).max(6);
        writeln!(f, "{:<name_width$}  {:>9} {:>5}  {:>9} {:>5}", "metric", "delta(1)", "n", "delta(0)", "n")?;
        for (metric, g) in &self.metrics {
            writeln!(
                f,
                "{:<name_width$}  {:>9} {:>5}  {:>9} {:>5}",
                metric.name(),
                Cell(g.accepted.map(|m| m.mean)),
                g.accepted.map_or(0, |m| m.count),
                Cell(g.rejected.map(|m| m.mean)),
                g.rejected.map_or(0, |m| m.count),
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for crate::evaluation::SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} (n = {})", self.metric, self.n)?;
        writeln!(f, "{:>6}  {:>8}  {:>8}  {:>5}", "refs", "pearson", "spearman", "short")?;
        writeln!(f, "{:>6}  {:>8}  {:>8}  {:>5}", "SRE", Cell(self.sre.pearson), Cell(self.sre.spearman), 0)?;
        for p in &self.points {
            writeln!(
                f,
                "{:>6}  {:>8}  {:>8}  {:>5}",
                p.size,
                Cell(p.correlation.pearson),
                Cell(p.correlation.spearman),
                p.short_records
            )?;
        }
        Ok(())
    }
}
