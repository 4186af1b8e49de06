use super::metrics::EvaluationReport;
use super::pipeline::ExperimentReport;

/// Aligned text table: label, dims, accuracy and balanced accuracy as
/// percentages, MAE.
pub fn render_table(rows: &[(&str, Option<usize>, &EvaluationReport)]) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("Features".len());
    let mut out = format!(
        "{:<width$}  {:>6}  {:>8}  {:>8}  {:>7}\n",
        "Features", "Dims", "Acc", "BAcc", "MAE"
    );
    for (label, dims, r) in rows {
        let dims = dims.map_or_else(|| "-".to_string(), |d| d.to_string());
        out.push_str(&format!(
            "{label:<width$}  {dims:>6}  {:>8.2}  {:>8.2}  {:>7.4}\n",
            100.0 * r.accuracy,
            100.0 * r.balanced_accuracy,
            r.mae
        ));
    }
    out
}

/// One table per experiment list, with a shared majority-baseline row
/// taken from the first report.
pub fn render_reports(reports: &[ExperimentReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let mut rows = vec![("Majority class", None, first.headline().1)];
    rows.extend(
        reports
            .iter()
            .map(|r| (r.name.as_str(), Some(r.dims()), r.headline().0)),
    );
    render_table(&rows)
}

/// Channel-stage table (when present) followed by one table per video
/// stage, each against its majority baseline.
pub fn render_experiment(report: &ExperimentReport) -> String {
    let mut out = String::new();
    if let Some(c) = &report.channel_stage {
        out.push_str(&format!("Channel stage: {}\n", report.name));
        out.push_str(&render_table(&[
            ("Majority class", None, &c.baseline),
            (report.name.as_str(), Some(c.dims), &c.test),
        ]));
    }
    for v in &report.video_stages {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!("Video stage: {}\n", v.source.key()));
        out.push_str(&render_table(&[
            ("Majority class", None, &v.baseline),
            (v.source.key(), Some(v.n_features), &v.test),
        ]));
    }
    out
}
