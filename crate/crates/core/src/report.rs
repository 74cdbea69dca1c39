//! Rendering of bias measures and corpus statistics as markdown and CSV.
//!
//! CSV is the canonical machine format and carries full-precision values and
//! explicit flag columns; markdown is for reading and bolds flagged values.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::labels::{Domain, Emotion, Group};
use crate::metrics::{evaluate_cell, BucketMode, EmotionBucket, MetricCell, MetricError, ScoreMode, Thresholds};
use crate::predictions::ScoredPairing;
use crate::scan::{CooccurrenceTable, OccurrenceSummary};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("report CSV row {row}: {reason}")]
    Parse { row: usize, reason: String },
    #[error("cannot export an empty {0} bucket")]
    EmptyBucket(Emotion),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Markdown => "md",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub score_mode: ScoreMode,
    /// Mode as requested; each column records what it resolved to.
    pub bucket_mode: BucketMode,
    pub thresholds: Thresholds,
    pub inputs: Vec<InputDigest>,
}

/// Measures for one corpus and group pairing, per emotion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportColumn {
    pub corpus_tag: String,
    pub domain: Domain,
    pub group_a: Group,
    pub group_b: Group,
    pub bucket_mode: BucketMode,
    pub cells: BTreeMap<Emotion, MetricCell>,
}

impl ReportColumn {
    /// Column heading such as `EEC M×F`.
    pub fn label(&self) -> String {
        format!("{} {}×{}", self.corpus_tag.to_uppercase(), self.group_a, self.group_b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub model_tag: String,
    pub metadata: ReportMetadata,
    pub columns: Vec<ReportColumn>,
}

impl BiasReport {
    pub fn new(model_tag: impl Into<String>, metadata: ReportMetadata) -> Self {
        BiasReport { model_tag: model_tag.into(), metadata, columns: Vec::new() }
    }

    /// Evaluates every emotion for `scored` and appends the column.
    pub fn add_pairing(&mut self, scored: &ScoredPairing) -> Result<(), ReportError> {
        let md = &self.metadata;
        let mut cells = BTreeMap::new();
        for e in Emotion::ALL {
            cells.insert(e, evaluate_cell(scored, e, md.score_mode, md.bucket_mode, md.thresholds)?);
        }
        let p = &scored.pairing;
        self.columns.push(ReportColumn {
            corpus_tag: p.corpus_tag().to_string(),
            domain: p.domain,
            group_a: p.group_a,
            group_b: p.group_b,
            bucket_mode: md.bucket_mode.resolve(scored),
            cells,
        });
        Ok(())
    }

    /// Replaces the thresholds and recomputes every flag.
    pub fn set_thresholds(&mut self, thresholds: Thresholds) {
        self.metadata.thresholds = thresholds;
        for cell in self.columns.iter_mut().flat_map(|c| c.cells.values_mut()) {
            cell.reflag(thresholds);
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (&ReportColumn, &MetricCell)> {
        self.columns.iter().flat_map(|c| c.cells.values().map(move |cell| (c, cell)))
    }

    /// Number of cells with DP below τ and with p below α.
    pub fn flag_counts(&self) -> (usize, usize) {
        self.cells().fold((0, 0), |(d, p), (_, c)| (d + c.dp_below_threshold as usize, p + c.p_significant as usize))
    }

    /// Splits into one report per (domain, group pairing), keyed by the file
    /// stem `<model_tag>_<domain>_<A>x<B>`.
    pub fn partition(&self) -> Vec<(String, BiasReport)> {
        let mut parts: BTreeMap<(Domain, Group, Group), BiasReport> = BTreeMap::new();
        for col in &self.columns {
            parts
                .entry((col.domain, col.group_a, col.group_b))
                .or_insert_with(|| BiasReport::new(self.model_tag.clone(), self.metadata.clone()))
                .columns
                .push(col.clone());
        }
        parts.into_iter().map(|((d, a, b), r)| (file_stem(&self.model_tag, d, a, b), r)).collect()
    }
}

/// Model tag with every character outside `[A-Za-z0-9.-]` replaced by `-`.
pub fn safe_tag(model_tag: &str) -> String {
    model_tag.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-') { c } else { '-' }).collect()
}

/// `<model_tag>_<domain>_<A>x<B>` with the model tag made filename-safe.
pub fn file_stem(model_tag: &str, domain: Domain, a: Group, b: Group) -> String {
    format!("{}_{domain}_{a}x{b}", safe_tag(model_tag))
}

/// Fixed-width rendering used in markdown: three decimals, or one-digit
/// scientific notation for magnitudes below 0.001.
pub fn format_measure(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.1e}")
    } else {
        format!("{x:.3}")
    }
}

fn bold(s: String, on: bool) -> String {
    if on {
        format!("**{s}**")
    } else {
        s
    }
}

const MISSING: &str = "n/a";

fn opt(x: Option<f64>) -> String {
    x.map(format_measure).unwrap_or_else(|| MISSING.to_string())
}

pub fn render_metric_table(report: &BiasReport, format: Format) -> String {
    match format {
        Format::Markdown => metric_markdown(report),
        Format::Csv => metric_csv(report),
    }
}

fn metric_markdown(report: &BiasReport) -> String {
    let mut out = String::new();
    let mut header = String::from("| Emotion | Measure |");
    let mut rule = String::from("|---|---|");
    for col in &report.columns {
        let _ = write!(header, " {} |", col.label());
        rule.push_str("---:|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    if report.columns.is_empty() {
        return out;
    }
    for e in Emotion::ALL {
        type Render = fn(&MetricCell) -> String;
        let rows: [(&str, Render); 5] = [
            ("DP", |c| bold(format_measure(c.dp), c.dp_below_threshold)),
            ("avg.Δ", |c| opt(c.avg_delta)),
            ("p", |c| bold(opt(c.p_value), c.p_significant)),
            ("ACS", |c| opt(c.acs)),
            ("N", |c| c.n_pairs.to_string()),
        ];
        for (i, (measure, render)) in rows.iter().enumerate() {
            let emotion = if i == 0 { e.title() } else { "" };
            let _ = write!(out, "| {emotion} | {measure} |");
            for col in &report.columns {
                let value = col.cells.get(&e).map(render).unwrap_or_else(|| MISSING.to_string());
                let _ = write!(out, " {value} |");
            }
            out.push('\n');
        }
    }
    out
}

/// Markdown report: a short metadata preamble followed by the metric table.
pub fn render_report_markdown(report: &BiasReport) -> String {
    let md = &report.metadata;
    let mut out = format!("## {}\n\n", report.model_tag);
    let _ = writeln!(out, "- score mode: {}", md.score_mode);
    let _ = writeln!(out, "- bucket mode: {}", md.bucket_mode);
    for col in &report.columns {
        if md.bucket_mode == BucketMode::Auto {
            let _ = writeln!(out, "  - {}: {}", col.label(), col.bucket_mode);
        }
    }
    let _ = writeln!(out, "- DP flagged below {} (bold)", md.thresholds.tau);
    let _ = writeln!(out, "- p flagged below {} (bold)", md.thresholds.alpha);
    out.push('\n');
    out.push_str(&metric_markdown(report));
    out
}

const CSV_COLUMNS: [&str; 22] = [
    "model_tag",
    "corpus_tag",
    "domain",
    "group_a",
    "group_b",
    "emotion",
    "score_mode",
    "bucket_mode",
    "tau",
    "alpha",
    "n_a",
    "n_b",
    "n_pairs",
    "dp",
    "rate_a",
    "rate_b",
    "avg_delta",
    "p_value",
    "acs",
    "acs_skipped",
    "dp_below_threshold",
    "p_significant",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn metric_csv(report: &BiasReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let md = &report.metadata;
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for (col, c) in report.cells() {
        w.write_record([
            report.model_tag.clone(),
            col.corpus_tag.clone(),
            col.domain.to_string(),
            col.group_a.to_string(),
            col.group_b.to_string(),
            c.emotion.to_string(),
            md.score_mode.to_string(),
            col.bucket_mode.to_string(),
            num(md.thresholds.tau),
            num(md.thresholds.alpha),
            c.n_a.to_string(),
            c.n_b.to_string(),
            c.n_pairs.to_string(),
            num(c.dp),
            num(c.rate_a),
            num(c.rate_b),
            opt_num(c.avg_delta),
            opt_num(c.p_value),
            opt_num(c.acs),
            c.acs_skipped.to_string(),
            c.dp_below_threshold.to_string(),
            c.p_significant.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Reads a report back from its CSV rendering. Input checksums are not part
/// of the CSV and come back empty.
pub fn parse_metric_csv(text: &str) -> Result<BiasReport, ReportError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(ReportError::Parse { row: 1, reason: "unexpected header".into() });
    }
    let mut report: Option<BiasReport> = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |reason: String| ReportError::Parse { row, reason };
        let f = |name: &str| rec.get(CSV_COLUMNS.iter().position(|c| *c == name).expect("known column")).unwrap_or("");
        fn parsed<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            s.parse::<T>().map_err(|e| format!("{name}: {e}"))
        }
        let opt_f = |name: &str| -> Result<Option<f64>, String> {
            let s = f(name);
            if s.is_empty() {
                Ok(None)
            } else {
                parsed::<f64>(s, name).map(Some)
            }
        };
        let cell = (|| -> Result<_, String> {
            Ok(MetricCell {
                emotion: parsed(f("emotion"), "emotion")?,
                dp: parsed(f("dp"), "dp")?,
                rate_a: parsed(f("rate_a"), "rate_a")?,
                rate_b: parsed(f("rate_b"), "rate_b")?,
                n_a: parsed(f("n_a"), "n_a")?,
                n_b: parsed(f("n_b"), "n_b")?,
                n_pairs: parsed(f("n_pairs"), "n_pairs")?,
                avg_delta: opt_f("avg_delta")?,
                p_value: opt_f("p_value")?,
                acs: opt_f("acs")?,
                acs_skipped: parsed(f("acs_skipped"), "acs_skipped")?,
                dp_below_threshold: parsed(f("dp_below_threshold"), "dp_below_threshold")?,
                p_significant: parsed(f("p_significant"), "p_significant")?,
            })
        })()
        .map_err(bad)?;
        let score_mode: ScoreMode = f("score_mode").parse().map_err(bad)?;
        let bucket_mode: BucketMode = f("bucket_mode").parse().map_err(bad)?;
        let thresholds = Thresholds {
            tau: parsed(f("tau"), "tau").map_err(bad)?,
            alpha: parsed(f("alpha"), "alpha").map_err(bad)?,
        };
        let domain: Domain = parsed(f("domain"), "domain").map_err(bad)?;
        let group_a: Group = parsed(f("group_a"), "group_a").map_err(bad)?;
        let group_b: Group = parsed(f("group_b"), "group_b").map_err(bad)?;

        let r = report.get_or_insert_with(|| {
            BiasReport::new(
                f("model_tag"),
                ReportMetadata { score_mode, bucket_mode, thresholds, inputs: Vec::new() },
            )
        });
        if r.model_tag != f("model_tag") || r.metadata.score_mode != score_mode || r.metadata.thresholds != thresholds {
            return Err(bad("model tag, score mode and thresholds must be uniform".into()));
        }
        if r.metadata.bucket_mode != bucket_mode {
            r.metadata.bucket_mode = BucketMode::Auto;
        }
        let corpus_tag = f("corpus_tag");
        let same = |c: &ReportColumn| {
            c.corpus_tag == corpus_tag && c.domain == domain && c.group_a == group_a && c.group_b == group_b
        };
        if !r.columns.last().is_some_and(same) {
            r.columns.push(ReportColumn {
                corpus_tag: corpus_tag.to_string(),
                domain,
                group_a,
                group_b,
                bucket_mode,
                cells: BTreeMap::new(),
            });
        }
        let col = r.columns.last_mut().expect("column just ensured");
        if col.cells.insert(cell.emotion, cell).is_some() {
            return Err(bad("duplicate emotion within column".into()));
        }
    }
    Ok(report.unwrap_or_else(|| {
        BiasReport::new(
            "",
            ReportMetadata {
                score_mode: ScoreMode::default(),
                bucket_mode: BucketMode::default(),
                thresholds: Thresholds::default(),
                inputs: Vec::new(),
            },
        )
    }))
}

/// Round to the two decimals shown, as an integer count of hundredths.
fn hundredths(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

fn percent_cell(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.2}")
    }
}

/// Groups that hold the highest displayed percentage of their domain in one
/// row. Rows whose maximum displays as zero mark nothing.
fn domain_maxima(values: &BTreeMap<Group, f64>) -> Vec<Group> {
    let mut marked = Vec::new();
    for d in Domain::ALL {
        let in_domain: Vec<(Group, i64)> =
            values.iter().filter(|(g, _)| g.domain() == d).map(|(g, v)| (*g, hundredths(*v))).collect();
        let Some(max) = in_domain.iter().map(|(_, v)| *v).max() else { continue };
        if max > 0 {
            marked.extend(in_domain.iter().filter(|(_, v)| *v == max).map(|(g, _)| *g));
        }
    }
    marked
}

/// Co-occurrence percentages: rows by emotion then corpus, one column per
/// group. Per-domain row maxima are bolded in markdown and flagged in CSV.
pub fn render_cooccurrence_table(tables: &[(String, CooccurrenceTable)], format: Format) -> String {
    let groups: Vec<Group> =
        Group::ALL.iter().copied().filter(|g| tables.iter().any(|(_, t)| t.columns.contains_key(g))).collect();
    let mut md = String::new();
    let mut w = csv::Writer::from_writer(Vec::new());
    match format {
        Format::Markdown => {
            md.push_str("| Emotion | Corpus |");
            for g in &groups {
                let _ = write!(md, " {g} |");
            }
            md.push_str("\n|---|---|");
            md.push_str(&"---:|".repeat(groups.len()));
            md.push('\n');
        }
        Format::Csv => {
            w.write_record(["emotion", "corpus", "domain", "group", "percent", "domain_max"]).expect("in-memory write");
        }
    }
    for e in Emotion::ALL {
        for (i, (corpus, table)) in tables.iter().enumerate() {
            let row: BTreeMap<Group, f64> =
                table.columns.iter().map(|(g, col)| (*g, col[e.index()])).collect();
            let marked = domain_maxima(&row);
            match format {
                Format::Markdown => {
                    let _ = write!(md, "| {} | {corpus} |", if i == 0 { e.title() } else { "" });
                    for g in &groups {
                        let cell = match row.get(g) {
                            Some(v) => bold(percent_cell(*v), marked.contains(g)),
                            None => MISSING.to_string(),
                        };
                        let _ = write!(md, " {cell} |");
                    }
                    md.push('\n');
                }
                Format::Csv => {
                    for (g, v) in &row {
                        w.write_record([
                            e.name(),
                            corpus.as_str(),
                            g.domain().name(),
                            g.code(),
                            &num(*v),
                            &marked.contains(g).to_string(),
                        ])
                        .expect("in-memory write");
                    }
                }
            }
        }
    }
    match format {
        Format::Markdown => md,
        Format::Csv => String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv"),
    }
}

/// Per-corpus occurrence counts, totals and sample standard deviation.
pub fn render_occurrence_table(rows: &[(String, OccurrenceSummary)], format: Format) -> String {
    match format {
        Format::Markdown => {
            let mut out = String::from("| Corpus | Anger | Fear | Joy | Sadness | Total | Std. dev. |\n");
            out.push_str("|---|---:|---:|---:|---:|---:|---:|\n");
            for (corpus, s) in rows {
                let _ = write!(out, "| {corpus} |");
                for e in Emotion::ALL {
                    let _ = write!(out, " {} |", s.occ.get(&e).copied().unwrap_or(0));
                }
                let _ = writeln!(out, " {} | {:.2} |", s.total_affective, s.stddev);
            }
            out
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["corpus", "anger", "fear", "joy", "sadness", "total", "stddev"]).expect("in-memory write");
            for (corpus, s) in rows {
                let mut rec = vec![corpus.clone()];
                rec.extend(Emotion::ALL.iter().map(|e| s.occ.get(e).copied().unwrap_or(0).to_string()));
                rec.push(s.total_affective.to_string());
                rec.push(num(s.stddev));
                w.write_record(rec).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
        }
    }
}

/// Points for an intensity scatter of one bucket, with the group means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityScatter {
    pub emotion: Emotion,
    /// `(pair_index, score_a, score_b)`.
    pub points: Vec<(usize, f64, f64)>,
    pub mean_a: f64,
    pub mean_b: f64,
}

pub fn export_intensity_scatter(bucket: &EmotionBucket) -> Result<IntensityScatter, ReportError> {
    if bucket.is_empty() {
        return Err(ReportError::EmptyBucket(bucket.emotion));
    }
    let n = bucket.len() as f64;
    let points: Vec<(usize, f64, f64)> =
        bucket.pair_indices.iter().zip(&bucket.scores).map(|(&i, &(a, b))| (i, a, b)).collect();
    let mean_a = points.iter().map(|p| p.1).collect::<crate::stats::CompensatedSum>().value() / n;
    let mean_b = points.iter().map(|p| p.2).collect::<crate::stats::CompensatedSum>().value() / n;
    Ok(IntensityScatter { emotion: bucket.emotion, points, mean_a, mean_b })
}

impl IntensityScatter {
    /// `kind,pair_index,score_a,score_b` with one `point` row per pair and
    /// `mean_a`/`mean_b` rows carrying the mean in their own column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,pair_index,score_a,score_b\n");
        for (i, a, b) in &self.points {
            let _ = writeln!(out, "point,{i},{a},{b}");
        }
        let _ = writeln!(out, "mean_a,,{},", self.mean_a);
        let _ = writeln!(out, "mean_b,,,{}", self.mean_b);
        out
    }

    /// Minimal SVG: group a as circles, group b as squares, dashed mean lines.
    pub fn to_svg(&self, label_a: &str, label_b: &str) -> String {
        const W: f64 = 640.0;
        const H: f64 = 360.0;
        const PAD: f64 = 40.0;
        let n = self.points.len().max(2) as f64;
        let x = |k: usize| PAD + (W - 2.0 * PAD) * k as f64 / (n - 1.0);
        let y = |s: f64| H - PAD - (H - 2.0 * PAD) * s.clamp(0.0, 1.0);
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(out, r#"<title>{} intensity</title>"#, self.emotion.title());
        let _ = writeln!(
            out,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        for (k, (_, a, b)) in self.points.iter().enumerate() {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, x(k), y(*a));
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="6" height="6" fill="darkorange"/>"#,
                x(k) - 3.0,
                y(*b) - 3.0
            );
        }
        for (mean, colour) in [(self.mean_a, "steelblue"), (self.mean_b, "darkorange")] {
            let _ = writeln!(
                out,
                r#"<line x1="{PAD}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="{colour}" stroke-dasharray="4 3"/>"#,
                W - PAD,
                y(mean),
                y(mean)
            );
        }
        let _ = writeln!(out, r#"<text x="{PAD}" y="24" fill="steelblue">{}</text>"#, xml_escape(label_a));
        let _ = writeln!(out, r#"<text x="{}" y="24" fill="darkorange">{}</text>"#, PAD + 120.0, xml_escape(label_b));
        out.push_str("</svg>\n");
        out
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cell(emotion: Emotion, dp: f64, p: Option<f64>, t: Thresholds) -> MetricCell {
        let mut c = MetricCell {
            emotion,
            dp,
            rate_a: 0.5,
            rate_b: 0.5 * dp,
            n_a: 10,
            n_b: 10,
            n_pairs: 8,
            avg_delta: Some(0.0123),
            p_value: p,
            acs: Some(-0.0004),
            acs_skipped: 0,
            dp_below_threshold: false,
            p_significant: false,
        };
        c.reflag(t);
        c
    }

    fn fixture() -> BiasReport {
        let t = Thresholds::default();
        let md = ReportMetadata {
            score_mode: ScoreMode::EmotionProbability,
            bucket_mode: BucketMode::Auto,
            thresholds: t,
            inputs: vec![],
        };
        let mut r = BiasReport::new("bert", md);
        let cells = |dps: [f64; 4], ps: [Option<f64>; 4]| {
            Emotion::ALL.iter().map(|e| (*e, cell(*e, dps[e.index()], ps[e.index()], t))).collect()
        };
        r.columns.push(ReportColumn {
            corpus_tag: "csp".into(),
            domain: Domain::Race,
            group_a: Group::EA,
            group_b: Group::AA,
            bucket_mode: BucketMode::PredictedUnion,
            cells: cells([0.95, 0.743, 0.8, 1.0], [Some(0.051), Some(0.01), None, Some(1e-5)]),
        });
        r.columns.push(ReportColumn {
            corpus_tag: "eec".into(),
            domain: Domain::Gender,
            group_a: Group::M,
            group_b: Group::F,
            bucket_mode: BucketMode::Gold,
            cells: cells([0.5, 0.9, 0.99, 0.81], [Some(0.5), Some(0.049), Some(0.05), Some(0.2)]),
        });
        r
    }

    #[test]
    fn markdown_bolding() {
        let md = render_metric_table(&fixture(), Format::Markdown);
        assert!(md.contains("| Fear | DP | **0.743** | 0.900 |"), "{md}");
        assert!(md.contains("| | p | 0.051 | 0.500 |") || md.contains("|  | p | 0.051 | 0.500 |"), "{md}");
        assert!(md.contains("| Joy | DP | 0.800 | 0.990 |"), "{md}");
        assert!(md.contains("**1.0e-5**"), "{md}");
        assert!(md.contains("-4.0e-4"), "{md}");
        assert!(md.lines().next().unwrap().contains("CSP EA×AA"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut r = fixture();
        r.columns.clear();
        assert_eq!(render_metric_table(&r, Format::Markdown), "| Emotion | Measure |\n|---|---|\n");
        let csv = render_metric_table(&r, Format::Csv);
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn csv_round_trip_is_idempotent() {
        let r = fixture();
        let csv = render_metric_table(&r, Format::Csv);
        let back = parse_metric_csv(&csv).unwrap();
        assert_eq!(render_metric_table(&back, Format::Csv), csv);
        assert_eq!(back.columns, r.columns);
    }

    #[test]
    fn tighter_tau_flags_superset() {
        let r = fixture();
        let mut tight = r.clone();
        tight.set_thresholds(Thresholds { tau: 0.9, alpha: 0.05 });
        for ((_, a), (_, b)) in r.cells().zip(tight.cells()) {
            assert!(!a.dp_below_threshold || b.dp_below_threshold);
        }
        assert!(tight.flag_counts().0 > r.flag_counts().0);
    }

    #[test]
    fn partition_names() {
        let parts = fixture().partition();
        let names: Vec<&str> = parts.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["bert_gender_MxF", "bert_race_EAxAA"]);
        assert_eq!(file_stem("org/model v2", Domain::Religion, Group::Ch, Group::Mu), "org-model-v2_religion_ChxMu");
    }

    fn table(cols: &[(Group, [f64; 4])]) -> CooccurrenceTable {
        CooccurrenceTable { columns: cols.iter().copied().collect() }
    }

    #[test]
    fn cooccurrence_maxima() {
        let t = table(&[
            (Group::M, [12.12, 30.0, 30.0, 27.88]),
            (Group::F, [13.41, 30.0, 30.0, 26.59]),
            (Group::Nb, [14.25, 20.0, 40.0, 25.75]),
            (Group::EA, [0.0; 4]),
        ]);
        let md = render_cooccurrence_table(&[("WikiEn".into(), t)], Format::Markdown);
        assert!(md.contains("| Anger | WikiEn | 12.12 | 13.41 | **14.25** | 0 |"), "{md}");
        assert!(md.contains("| Fear | WikiEn | **30.00** | **30.00** | 20.00 | 0 |"), "{md}");

        let csv = render_cooccurrence_table(&[("c".into(), table(&[(Group::Jw, [0.0, 0.0, 100.0, 0.0])]))], Format::Csv);
        assert!(csv.contains("joy,c,religion,Jw,100,true"), "{csv}");
        assert!(csv.contains("anger,c,religion,Jw,0,false"), "{csv}");
    }

    #[test]
    fn cooccurrence_ties_on_displayed_value() {
        let t = table(&[(Group::M, [10.004, 0.0, 0.0, 0.0]), (Group::F, [10.001, 0.0, 0.0, 0.0])]);
        let md = render_cooccurrence_table(&[("c".into(), t)], Format::Markdown);
        assert!(md.contains("| **10.00** | **10.00** |"), "{md}");
    }

    #[test]
    fn occurrence_rows() {
        let s = OccurrenceSummary::from_counts([984, 1472, 1579, 1131]);
        let md = render_occurrence_table(&[("SemEval".into(), s)], Format::Markdown);
        assert!(md.contains("| SemEval | 984 | 1472 | 1579 | 1131 | 5166 | 280.21 |"), "{md}");
    }

    #[test]
    fn scatter_export() {
        let b = EmotionBucket::from_scores(Emotion::Joy, vec![(0.2, 0.4), (0.6, 0.5), (0.7, 0.3)]);
        let s = export_intensity_scatter(&b).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 3 + 2);
        assert!(lines[4].starts_with("mean_a,,"));
        let col = |k: usize| -> Vec<f64> {
            lines[1..4].iter().map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
        };
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(col(2)) - s.mean_a).abs() < 1e-12);
        assert!((mean(col(3)) - s.mean_b).abs() < 1e-12);
        assert!(s.to_svg("EA", "AA").contains("<circle"));

        let sym = EmotionBucket::from_scores(Emotion::Joy, vec![(0.2, 0.4), (0.4, 0.2)]);
        let s = export_intensity_scatter(&sym).unwrap();
        assert_eq!(s.mean_a, s.mean_b);
        assert!(export_intensity_scatter(&EmotionBucket::from_scores(Emotion::Joy, vec![])).is_err());
    }
}
