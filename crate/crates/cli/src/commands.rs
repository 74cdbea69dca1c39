use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use affect_audit::lexicon::LexiconKind;
use affect_audit::metrics::{bucket, Thresholds};
use affect_audit::pairs::{self, build_pairing, verify_minimal_pair, ColumnMapping, MinimalPairVerdict, PairRecord};
use affect_audit::predictions::{join, read_predictions, write_predictions, PredictionSet};
use affect_audit::report::{
    export_intensity_scatter, render_cooccurrence_table, render_metric_table, render_occurrence_table,
    render_report_markdown, BiasReport, Format, InputDigest, ReportMetadata,
};
use affect_audit::scan::{
    cooccurrence_percentages, scan_corpus, summarize_occurrence, CountingMode, SentenceStream,
};
use affect_audit::{digest, synth, Domain, Emotion, Group, Lexicon};

use crate::manifest::{Outputs, RunConfig};
use crate::{EvalArgs, IngestArgs, LintArgs, ScanArgs, SynthCorpusArgs, SynthEvalArgs, UsageError, ValidateArgs};

fn require_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        return Err(UsageError(format!("{what} `{}` does not exist", path.display())).into());
    }
    Ok(())
}

pub fn load_lexicon(lexicon: Option<&Path>, targets: Option<&Path>) -> Result<Lexicon> {
    let emotions = match lexicon {
        Some(p) => Lexicon::load(p, LexiconKind::Emotion).with_context(|| format!("loading {}", p.display()))?,
        None => Lexicon::shipped_emotions(),
    };
    let targets = match targets {
        Some(p) => Lexicon::load(p, LexiconKind::Target).with_context(|| format!("loading {}", p.display()))?,
        None => Lexicon::shipped_targets(),
    };
    Ok(emotions.merge(targets)?)
}

fn lexicon_digests(lexicon: &Lexicon) -> Vec<InputDigest> {
    lexicon.provenance().iter().map(|p| InputDigest { path: p.source.clone(), sha256: p.sha256.clone() }).collect()
}

fn file_digest(path: &Path) -> Result<InputDigest> {
    let f = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InputDigest { path: path.display().to_string(), sha256: digest::sha256_reader(f)? })
}

pub fn scan(args: &ScanArgs) -> Result<ExitCode> {
    for p in &args.input {
        require_exists(p, "input")?;
    }
    if let Some(p) = &args.lexicon {
        require_exists(p, "lexicon")?;
    }
    if let Some(p) = &args.targets {
        require_exists(p, "targets")?;
    }
    let lexicon = load_lexicon(args.lexicon.as_deref(), args.targets.as_deref())?;
    let mut stream = SentenceStream::empty();
    for p in &args.input {
        stream.add_path(p)?;
    }
    let mode = if args.token_level { CountingMode::Token } else { CountingMode::Sentence };
    let started = std::time::Instant::now();
    let output = scan_corpus(&lexicon, stream, args.workers, mode)?;
    let secs = started.elapsed().as_secs_f64();
    log::info!("scanned {} bytes in {secs:.2}s with {} worker(s)", output.bytes_read, args.workers);

    let name = args.name.clone().unwrap_or_else(|| {
        args.input[0].file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into())
    });
    let summary = summarize_occurrence(&output.counts);
    let table = cooccurrence_percentages(&output.counts);

    let mut out = Outputs::create(&args.out)?;
    out.write("counts.json", serde_json::to_string_pretty(&output)? + "\n")?;
    out.write("occurrence.json", serde_json::to_string_pretty(&summary)? + "\n")?;
    let rows = [(name.clone(), summary)];
    out.write("occurrence.md", render_occurrence_table(&rows, Format::Markdown))?;
    out.write("occurrence.csv", render_occurrence_table(&rows, Format::Csv))?;
    let tables = [(name, table)];
    out.write("cooccurrence.md", render_cooccurrence_table(&tables, Format::Markdown))?;
    out.write("cooccurrence.csv", render_cooccurrence_table(&tables, Format::Csv))?;

    let mut inputs = lexicon_digests(&lexicon);
    for f in &output.sources {
        inputs.push(file_digest(Path::new(f))?);
    }
    out.finish(RunConfig::Scan(args.clone()), inputs)?;

    println!(
        "scanned {} sentence(s), {} byte(s) from {} file(s); results in {}",
        output.counts.sentences_scanned(),
        output.bytes_read,
        output.sources.len(),
        args.out.display()
    );
    if output.decode_replacements > 0 {
        println!("replaced {} undecodable byte sequence(s)", output.decode_replacements);
    }
    Ok(ExitCode::SUCCESS)
}

fn read_pair_files(paths: &[PathBuf]) -> Result<Vec<PairRecord>> {
    let mut records = Vec::new();
    for p in paths {
        records.extend(pairs::read_normalized(p)?);
    }
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.sentence_id.as_str()) {
            bail!("sentence_id `{}` appears in more than one pair file", r.sentence_id);
        }
    }
    Ok(records)
}

fn read_prediction_files(paths: &[PathBuf]) -> Result<PredictionSet> {
    let mut set = PredictionSet::default();
    for p in paths {
        let part = read_predictions(p)?;
        set.extend_from(part, &p.display().to_string())?;
    }
    Ok(set)
}

/// Pairings to evaluate: every canonical pairing of every corpus and domain
/// for which both groups have records.
fn discover_pairings(records: &[PairRecord]) -> Vec<(String, Domain, Group, Group)> {
    let mut present: BTreeMap<&str, BTreeSet<Group>> = BTreeMap::new();
    for r in records {
        present.entry(r.corpus_tag.as_str()).or_default().insert(r.group);
    }
    let mut out = Vec::new();
    for (corpus, groups) in present {
        for d in Domain::ALL {
            for &(a, b) in d.canonical_pairings() {
                if groups.contains(&a) && groups.contains(&b) {
                    out.push((corpus.to_string(), d, a, b));
                }
            }
        }
    }
    out
}

pub fn eval(args: &EvalArgs) -> Result<ExitCode> {
    for p in &args.pairs {
        require_exists(p, "pair corpus")?;
    }
    for p in &args.preds {
        require_exists(p, "prediction file")?;
    }
    let thresholds = Thresholds::new(args.tau, args.alpha).map_err(|e| UsageError(e.to_string()))?;
    let records = read_pair_files(&args.pairs)?;
    let preds = read_prediction_files(&args.preds)?;
    let targets = discover_pairings(&records);
    if targets.is_empty() {
        bail!("no group pairing has records on both sides");
    }

    let mut inputs = Vec::new();
    for p in args.pairs.iter().chain(&args.preds) {
        inputs.push(file_digest(p)?);
    }
    let mut out = Outputs::create(&args.out)?;
    let mut used: HashSet<String> = HashSet::new();
    for tag in preds.model_tags() {
        let model_preds = preds.for_model(&tag);
        let mut report = BiasReport::new(
            tag.clone(),
            ReportMetadata {
                score_mode: args.score_mode,
                bucket_mode: args.bucket_mode,
                thresholds,
                inputs: inputs.clone(),
            },
        );
        for (corpus, domain, a, b) in &targets {
            let subset: Vec<PairRecord> = records.iter().filter(|r| &r.corpus_tag == corpus).cloned().collect();
            let pairing = build_pairing(&subset, *domain, *a, *b)?;
            let scored = join(pairing, &model_preds).with_context(|| format!("joining {corpus} {a}×{b} for {tag}"))?;
            for (ra, rb) in &scored.pairing.pairs {
                used.insert(ra.sentence_id.clone());
                used.insert(rb.sentence_id.clone());
            }
            report.add_pairing(&scored)?;
            if args.scatter {
                for e in Emotion::ALL {
                    let bk = bucket(&scored, e, args.score_mode, args.bucket_mode)?;
                    if bk.is_empty() {
                        continue;
                    }
                    let s = export_intensity_scatter(&bk)?;
                    let stem = format!(
                        "scatter/{}_{corpus}_{}",
                        affect_audit::report::file_stem(&tag, *domain, *a, *b),
                        e.name()
                    );
                    out.write(&format!("{stem}.csv"), s.to_csv())?;
                    out.write(&format!("{stem}.svg"), s.to_svg(a.code(), b.code()))?;
                }
            }
        }
        let model_stem = affect_audit::report::safe_tag(&tag);
        out.write(&format!("{model_stem}_report.md"), render_report_markdown(&report))?;
        out.write(&format!("{model_stem}_report.csv"), render_metric_table(&report, Format::Csv))?;
        out.write(&format!("{model_stem}_report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        for (stem, part) in report.partition() {
            out.write(&format!("{stem}.md"), render_metric_table(&part, Format::Markdown))?;
            out.write(&format!("{stem}.csv"), render_metric_table(&part, Format::Csv))?;
        }
        let (dp_flags, p_flags) = report.flag_counts();
        let cells = report.cells().count();
        println!(
            "{tag}: {} pairing(s), {cells} cell(s); DP below {}: {dp_flags}; p below {}: {p_flags}",
            report.columns.len(),
            thresholds.tau,
            thresholds.alpha
        );
    }
    let unused = preds.len() - preds.records().iter().filter(|p| used.contains(&p.sentence_id)).count();
    if unused > 0 {
        log::warn!("{unused} prediction(s) matched no evaluated sentence");
        println!("ignored {unused} prediction(s) for unknown sentences");
    }
    out.finish(RunConfig::Eval(args.clone()), inputs)?;
    Ok(ExitCode::SUCCESS)
}

enum Expected {
    Emotion(Emotion),
    Group(Group),
}

fn parse_expect(spec: &str) -> Result<Vec<(Expected, usize)>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| UsageError(format!("--expect item `{item}` is not key=count")))?;
        let n: usize = v.trim().parse().map_err(|_| UsageError(format!("--expect count `{v}` is not an integer")))?;
        let key = if let Ok(e) = k.parse::<Emotion>() {
            Expected::Emotion(e)
        } else if let Ok(g) = k.parse::<Group>() {
            Expected::Group(g)
        } else {
            return Err(UsageError(format!("--expect key `{k}` is neither an emotion nor a group")).into());
        };
        out.push((key, n));
    }
    Ok(out)
}

pub fn lexicon_validate(args: &ValidateArgs) -> Result<ExitCode> {
    for p in args.lexicon.iter().chain(&args.targets) {
        require_exists(p, "lexicon")?;
    }
    let expected = args.expect.as_deref().map(parse_expect).transpose()?;
    let lexicon = load_lexicon(args.lexicon.as_deref(), args.targets.as_deref())?;
    for p in lexicon.provenance() {
        println!("{} ({:?}) sha256 {}; {} duplicate(s) collapsed", p.source, p.kind, p.sha256, p.duplicates_collapsed);
    }
    let ec = lexicon.emotion_counts();
    let tc = lexicon.target_counts();
    for (e, n) in &ec {
        println!("{e}\t{n}");
    }
    println!("emotion terms\t{}", ec.values().sum::<usize>());
    for (g, n) in &tc {
        println!("{}/{g}\t{n}", g.domain());
    }
    println!("target terms\t{}", tc.values().sum::<usize>());
    let overlaps = lexicon.overlap_report();
    println!("overlapping terms\t{}", overlaps.len());
    for o in &overlaps {
        let labels: Vec<String> = o.labels.iter().map(|l| l.to_string()).collect();
        println!("  {}: {}", o.term, labels.join(", "));
    }
    let Some(expected) = expected else { return Ok(ExitCode::SUCCESS) };
    let mut ok = true;
    for (key, want) in expected {
        let (label, got) = match key {
            Expected::Emotion(e) => (e.to_string(), ec.get(&e).copied().unwrap_or(0)),
            Expected::Group(g) => (g.to_string(), tc.get(&g).copied().unwrap_or(0)),
        };
        if got != want {
            ok = false;
            println!("MISMATCH {label}: expected {want}, found {got}");
        }
    }
    if ok {
        println!("all expected counts match");
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

pub fn pairs_ingest(args: &IngestArgs) -> Result<ExitCode> {
    require_exists(&args.input, "input")?;
    let mapping = match &args.mapping {
        Some(m) => {
            require_exists(m, "mapping")?;
            ColumnMapping::load(m).map_err(|e| UsageError(e.to_string()))?
        }
        None => ColumnMapping::normalized(),
    };
    let ingested = pairs::ingest_corpus(&args.input, &args.corpus_tag, &mapping)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    pairs::write_normalized(&ingested.records, BufWriter::new(file))?;
    let mut per_group: BTreeMap<(Domain, Group), usize> = BTreeMap::new();
    for r in &ingested.records {
        *per_group.entry((r.domain, r.group)).or_default() += 1;
    }
    println!(
        "rows in: {}; records out: {}; dropped: {}",
        ingested.rows_in,
        ingested.records.len(),
        ingested.dropped_rows
    );
    for ((d, g), n) in per_group {
        println!("{d}/{g}\t{n}");
    }
    Ok(ExitCode::SUCCESS)
}

pub fn pairs_lint(args: &LintArgs) -> Result<ExitCode> {
    for p in &args.pairs {
        require_exists(p, "pair corpus")?;
    }
    if let Some(p) = &args.targets {
        require_exists(p, "targets")?;
    }
    let lexicon = match &args.targets {
        Some(p) => Lexicon::load(p, LexiconKind::Target)?,
        None => Lexicon::shipped_targets(),
    };
    let records = read_pair_files(&args.pairs)?;
    let mut checked = 0;
    let mut flagged = 0;
    for (corpus, domain, a, b) in discover_pairings(&records) {
        let subset: Vec<PairRecord> = records.iter().filter(|r| r.corpus_tag == corpus).cloned().collect();
        let pairing = match build_pairing(&subset, domain, a, b) {
            Ok(p) => p,
            Err(e) => {
                println!("{corpus} {a}×{b}: {e}");
                continue;
            }
        };
        for (ra, rb) in &pairing.pairs {
            checked += 1;
            let verdict = verify_minimal_pair(&ra.text, &rb.text, &lexicon);
            if verdict != MinimalPairVerdict::Minimal {
                flagged += 1;
                println!("{corpus} {a}×{b} pair {}: {}", ra.pair_id, serde_json::to_string(&verdict)?);
            }
        }
    }
    println!("checked {checked} pair(s); {flagged} not minimal");
    Ok(ExitCode::SUCCESS)
}

pub fn synth_corpus(args: &SynthCorpusArgs) -> Result<ExitCode> {
    let lexicon = Lexicon::shipped();
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    let n = synth::write_corpus(&lexicon, args.bytes, args.seed, &mut w)?;
    std::io::Write::flush(&mut w)?;
    println!("wrote {n} bytes to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn synth_eval(args: &SynthEvalArgs) -> Result<ExitCode> {
    let domains = if args.domain.is_empty() { Domain::ALL.to_vec() } else { args.domain.clone() };
    let mut records = Vec::new();
    let mut preds = Vec::new();
    for (i, d) in domains.iter().enumerate() {
        let with_gold = *d != Domain::Religion;
        let tag = if with_gold { "syn" } else { "synp" };
        let (r, p) = synth::eval_fixture(*d, args.pairs_per_domain, with_gold, &args.model_tag, tag, args.seed + i as u64);
        records.extend(r);
        preds.extend(p);
    }
    fs::create_dir_all(&args.out)?;
    let pairs_path = args.out.join("pairs.csv");
    pairs::write_normalized(&records, BufWriter::new(fs::File::create(&pairs_path)?))?;
    let preds_path = args.out.join("predictions.jsonl");
    write_predictions(&preds, BufWriter::new(fs::File::create(&preds_path)?))?;
    println!("wrote {} records to {} and predictions to {}", records.len(), pairs_path.display(), preds_path.display());
    Ok(ExitCode::SUCCESS)
}
