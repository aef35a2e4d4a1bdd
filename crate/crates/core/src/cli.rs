//! Command-line front end. Every invocation ends with one JSON line on stdout
//! carrying `status` and the exit `code`.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ndarray::{s, Array2};
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::dataio::{
    build_adjacency, k_core_filter, load_interactions, load_prepared, read_embedding_file, sha256_file, temporal_split,
    write_prepared, PreparedDataset, GROUND_TRUTH_FILE, MANIFEST_FILE,
};
use crate::diagnostics::{
    anchoring_energy, cosine_similarity_stats, dimension_variance, popularity_norm_correlation, write_histogram_tsv,
    write_tsv,
};
use crate::encoder::{interaction_reprs, Backbone};
use crate::evaluator::{evaluate_all, random_ranking_baseline, MetricsReport};
use crate::objective::NormalizedRows;
use crate::synth::{generate_synthetic_dataset, read_ground_truth, write_ground_truth};
use crate::trainer::{fit, load_checkpoint, LossVariant, Trainer};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "symcere", version, about = "Cross-modal contrastive recommendation toolkit")]
struct Cli {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ModelFlags {
    #[arg(long, value_parser = parse_variant)]
    loss: Option<LossVariant>,
    /// Feed raw vectors to the losses and score by raw inner product.
    #[arg(long)]
    no_norm: bool,
    #[arg(long, value_parser = parse_backbone)]
    backbone: Option<Backbone>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct DataFlags {
    /// Prepared dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Text-embedding file replacing the dataset's own.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Comma-separated cutoffs, e.g. `5,10,20`.
    #[arg(long, value_delimiter = ',')]
    topk: Option<Vec<usize>>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load raw interactions, k-core filter, split and write a dataset directory.
    Prepare {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// k-core threshold.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Generate a planted-cluster synthetic dataset directory.
    Synth,
    /// Train a model and evaluate it periodically.
    Train {
        #[command(flatten)]
        data: DataFlags,
        #[command(flatten)]
        model: ModelFlags,
        /// Resume from this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Accept a checkpoint written under a different config.
        #[arg(long)]
        override_config_hash: bool,
    },
    /// Evaluate a checkpoint on the dataset's test split.
    Eval {
        #[command(flatten)]
        data: DataFlags,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Geometric diagnostics of a checkpoint. Repeat `--checkpoint` to get
    /// the anchoring energies as a series; the last one gets the full suite.
    Diagnose {
        #[command(flatten)]
        data: DataFlags,
        #[arg(long, required = true)]
        checkpoint: Vec<PathBuf>,
    },
    /// Train the {symcere, infonce} × {norm, no-norm} grid with one seed.
    Ablate {
        #[command(flatten)]
        data: DataFlags,
        #[command(flatten)]
        model: ModelFlags,
    },
}

fn parse_variant(s: &str) -> std::result::Result<LossVariant, String> {
    match s.parse::<LossVariant>() {
        Ok(LossVariant::None) => Err("expected symcere or infonce".into()),
        other => other.map_err(|e| e.to_string()),
    }
}

fn parse_backbone(s: &str) -> std::result::Result<Backbone, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 ok, 1 usage, 2 data, 3 numeric.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            let msg = e.to_string().lines().next().unwrap_or("").to_string();
            println!("{}", json!({"status": "error", "code": 1, "kind": "usage", "message": msg}));
            return 1;
        }
    };
    match run(cli) {
        Ok(mut fields) => {
            let mut record = Map::new();
            record.insert("status".into(), json!("ok"));
            record.insert("code".into(), json!(0));
            record.append(&mut fields);
            println!("{}", Value::Object(record));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            println!(
                "{}",
                json!({"status": "error", "code": code, "kind": e.kind(), "message": e.to_string()})
            );
            code
        }
    }
}

fn run(cli: Cli) -> Result<Map<String, Value>> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.train.seed = seed;
        config.synth.seed = seed;
    }
    match cli.command {
        Command::Prepare { input, embeddings, k } => {
            if let Some(i) = input {
                config.data.interactions = Some(i);
            }
            if let Some(e) = embeddings {
                config.data.embeddings = Some(e);
            }
            if let Some(k) = k {
                config.data.k_core = k;
            }
            config.validate()?;
            prepare(&config, &required_out(&cli.out)?)
        }
        Command::Synth => {
            config.validate()?;
            synth(&config, &required_out(&cli.out)?)
        }
        Command::Train {
            data,
            model,
            checkpoint,
            override_config_hash,
        } => {
            apply_data_flags(&mut config, &data);
            apply_model_flags(&mut config, &model);
            config.validate()?;
            train(&config, &required_out(&cli.out)?, checkpoint.as_deref(), override_config_hash)
        }
        Command::Eval { data, checkpoint } => {
            apply_data_flags(&mut config, &data);
            config.validate()?;
            eval(&config, &checkpoint, cli.out.as_deref())
        }
        Command::Diagnose { data, checkpoint } => {
            apply_data_flags(&mut config, &data);
            config.validate()?;
            diagnose(&config, &checkpoint, &required_out(&cli.out)?)
        }
        Command::Ablate { data, model } => {
            apply_data_flags(&mut config, &data);
            apply_model_flags(&mut config, &model);
            config.validate()?;
            ablate(&config, &required_out(&cli.out)?)
        }
    }
}

fn required_out(out: &Option<PathBuf>) -> Result<PathBuf> {
    out.clone().ok_or_else(|| Error::Config("--out DIR is required".into()))
}

fn apply_data_flags(config: &mut RunConfig, f: &DataFlags) {
    if let Some(d) = &f.data {
        config.data.dir = Some(d.clone());
    }
    if let Some(e) = &f.embeddings {
        config.data.embeddings = Some(e.clone());
    }
    if let Some(k) = &f.topk {
        config.eval.topk = k.clone();
    }
}

fn apply_model_flags(config: &mut RunConfig, f: &ModelFlags) {
    if let Some(v) = f.loss {
        config.loss.variant = v;
    }
    if f.no_norm {
        config.loss.normalize = false;
    }
    if let Some(b) = f.backbone {
        config.model.backbone = b;
    }
    if let Some(e) = f.epochs {
        config.train.epochs = e;
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// Effective config plus seed and content hashes of every input file.
fn record_run(dir: &Path, config: &RunConfig, inputs: &[&Path]) -> Result<()> {
    create_dir(dir)?;
    write_text(&dir.join("config.toml"), &config.to_toml())?;
    let mut hashes = Map::new();
    for p in inputs {
        if p.is_file() {
            hashes.insert(p.display().to_string(), json!(sha256_file(p)?));
        }
    }
    write_json(
        &dir.join("inputs.json"),
        &json!({"train_seed": config.train.seed, "synth_seed": config.synth.seed, "sha256": hashes}),
    )
}

fn prepare(config: &RunConfig, out: &Path) -> Result<Map<String, Value>> {
    let input = config
        .data
        .interactions
        .as_deref()
        .ok_or_else(|| Error::Config("prepare needs --input PATH or data.interactions".into()))?;
    let report = load_interactions(input)?;
    let filtered = k_core_filter(&report.records, config.data.k_core);
    if filtered.is_empty() {
        return Err(Error::Data(format!(
            "no interactions survive {}-core filtering",
            config.data.k_core
        )));
    }
    let dataset = temporal_split(&filtered, config.data.train_fraction)?;
    let adjacency = build_adjacency(&dataset);
    let text = match &config.data.embeddings {
        Some(p) => Some(read_embedding_file(p)?),
        None => None,
    };
    let mut inputs = vec![input];
    if let Some(p) = &config.data.embeddings {
        inputs.push(p);
    }
    record_run(out, config, &inputs)?;
    let manifest = write_prepared(
        out,
        &dataset,
        text.as_ref().map(|t| t.view()),
        &input.display().to_string(),
        config.data.train_fraction,
        Some(config.data.k_core),
    )?;
    Ok(as_map(json!({
        "command": "prepare",
        "out": out.display().to_string(),
        "malformed_lines": report.malformed_lines.len(),
        "num_users": manifest.num_users,
        "num_items": manifest.num_items,
        "num_train": manifest.num_train,
        "num_test": manifest.num_test,
        "num_edges": adjacency.num_edges(),
    })))
}

fn synth(config: &RunConfig, out: &Path) -> Result<Map<String, Value>> {
    let s = generate_synthetic_dataset(&config.synth)?;
    record_run(out, config, &[])?;
    let manifest = write_prepared(
        out,
        &s.dataset,
        Some(s.text.view()),
        "synthetic",
        config.synth.train_fraction,
        None,
    )?;
    write_ground_truth(&out.join(GROUND_TRUTH_FILE), &s.truth)?;
    // the same log in raw form, for `prepare`
    let (users, items) = (s.dataset.user_keys(), s.dataset.item_keys());
    let mut raw = String::new();
    let train = s.dataset.train().interactions.iter().map(|r| (r.user, r.item, r.timestamp));
    for (u, i, t) in train.chain(s.dataset.test().iter().map(|r| (r.user, r.item, r.timestamp))) {
        raw.push_str(&format!("{}\t{}\t{t}\n", users[u as usize], items[i as usize]));
    }
    write_text(&out.join(RAW_INTERACTIONS_FILE), &raw)?;
    Ok(as_map(json!({
        "command": "synth",
        "out": out.display().to_string(),
        "num_users": manifest.num_users,
        "num_items": manifest.num_items,
        "num_train": manifest.num_train,
        "num_test": manifest.num_test,
    })))
}

/// Raw interaction log written next to a synthetic dataset.
pub const RAW_INTERACTIONS_FILE: &str = "interactions.tsv";

fn as_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// The prepared dataset with its text rows, honoring an embeddings override.
fn load_data(config: &RunConfig) -> Result<(PreparedDataset, Array2<f32>, Vec<PathBuf>)> {
    let dir = config
        .data
        .dir
        .as_deref()
        .ok_or_else(|| Error::Config("--data DIR (or data.dir) is required".into()))?;
    let mut prepared = load_prepared(dir)?;
    let mut inputs = vec![dir.join(MANIFEST_FILE)];
    let text = match &config.data.embeddings {
        Some(p) => {
            inputs.push(p.clone());
            read_embedding_file(p)?
        }
        None => prepared
            .text
            .take()
            .ok_or_else(|| Error::Data(format!("{} has no text embeddings; pass --embeddings", dir.display())))?,
    };
    if text.nrows() != prepared.dataset.train().len() {
        return Err(Error::Data(format!(
            "{} embedding rows for {} training interactions",
            text.nrows(),
            prepared.dataset.train().len()
        )));
    }
    Ok((prepared, text, inputs))
}

fn metrics_value(report: &MetricsReport) -> Value {
    let mut m = Map::new();
    for (i, k) in report.ks.iter().enumerate() {
        m.insert(format!("hr@{k}"), json!(report.hr[i]));
        m.insert(format!("ndcg@{k}"), json!(report.ndcg[i]));
    }
    Value::Object(m)
}

fn write_metrics(dir: &Path, report: &MetricsReport) -> Result<()> {
    write_json(&dir.join("metrics.json"), report)?;
    write_tsv(
        &dir.join("metrics.tsv"),
        &["k", "hr", "ndcg", "num_evaluated", "averaging"],
        report.ks.iter().enumerate().map(|(i, k)| {
            vec![
                k.to_string(),
                report.hr[i].to_string(),
                report.ndcg[i].to_string(),
                report.num_evaluated.to_string(),
                report.averaging.clone(),
            ]
        }),
    )?;
    if let Some(ranks) = &report.user_ranks {
        write_tsv(
            &dir.join("user_ranks.tsv"),
            &["user", "ranks"],
            ranks.iter().map(|(u, r)| {
                vec![
                    u.to_string(),
                    r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                ]
            }),
        )?;
    }
    Ok(())
}

fn evaluate(trainer: &Trainer, prepared: &PreparedDataset, config: &RunConfig) -> Result<MetricsReport> {
    let nodes = trainer.node_embeddings()?;
    evaluate_all(
        nodes.view(),
        &prepared.dataset,
        &config.eval.topk,
        trainer.score_mode(),
        config.eval.per_user_ranks,
    )
}

/// Trains one configuration into `out`; returns the final metrics.
fn train_run(
    config: &RunConfig,
    prepared: &PreparedDataset,
    text: &Array2<f32>,
    out: &Path,
    resume: Option<(&Path, bool)>,
) -> Result<MetricsReport> {
    let tc = config.train_config();
    let train = prepared.dataset.train().clone();
    let mut trainer = match resume {
        Some((path, allow)) => Trainer::from_checkpoint(load_checkpoint(path)?, tc, train, text.view(), allow)?,
        None => Trainer::new(tc, train, text.view())?,
    };
    let log_path = out.join("train_log.jsonl");
    let mut log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)
        .map_err(|e| Error::io(&log_path, e))?;
    let mut timings = Vec::new();
    let started = Instant::now();
    let k = config.eval.primary_k();
    let mut log_err = None;
    let outcome = fit(
        &mut trainer,
        |losses| {
            timings.push((losses.epoch, started.elapsed().as_secs_f64()));
            let line = serde_json::to_string(losses).expect("losses serialize");
            if let Err(e) = writeln!(log, "{line}") {
                log_err.get_or_insert(Error::io(&log_path, e));
            }
            log::info!(
                "epoch {} total {:.5} cross {:.5} intra {:.5} bpr {:.5}",
                losses.epoch,
                losses.total,
                losses.cross_modal,
                losses.intra_modal,
                losses.bpr
            );
        },
        |t| {
            let nodes = t.node_embeddings()?;
            let r = evaluate_all(nodes.view(), &prepared.dataset, &[k], t.score_mode(), false)?;
            log::info!("epoch {} ndcg@{k} {:.5}", t.epoch(), r.ndcg[0]);
            Ok(r.ndcg[0])
        },
    )?;
    if let Some(e) = log_err {
        return Err(e);
    }
    // wall time lives apart from the deterministic outputs
    write_tsv(
        &out.join("timings.tsv"),
        &["epoch", "elapsed_seconds"],
        timings.iter().map(|(e, t)| vec![e.to_string(), format!("{t:.3}")]),
    )?;
    write_json(&out.join("evaluations.json"), &outcome.evaluations)?;
    trainer.save_checkpoint(&out.join("checkpoint.symt"))?;
    let report = evaluate(&trainer, prepared, config)?;
    write_metrics(out, &report)?;
    Ok(report)
}

fn train(config: &RunConfig, out: &Path, resume: Option<&Path>, allow: bool) -> Result<Map<String, Value>> {
    let (prepared, text, mut inputs) = load_data(config)?;
    if let Some(p) = resume {
        inputs.push(p.to_path_buf());
    }
    let refs: Vec<&Path> = inputs.iter().map(|p| p.as_path()).collect();
    record_run(out, config, &refs)?;
    let report = train_run(config, &prepared, &text, out, resume.map(|p| (p, allow)))?;
    Ok(as_map(json!({
        "command": "train",
        "out": out.display().to_string(),
        "metrics": metrics_value(&report),
    })))
}

fn restore(config: &RunConfig, checkpoint: &Path) -> Result<(Trainer, PreparedDataset, RunConfig)> {
    let (prepared, text, _) = load_data(config)?;
    let ck = load_checkpoint(checkpoint)?;
    let tc = ck.config.clone();
    let mut effective = config.clone();
    effective.model = tc.model.clone();
    effective.loss = tc.loss.clone();
    effective.train = tc.train.clone();
    let trainer = Trainer::from_checkpoint(ck, tc, prepared.dataset.train().clone(), text.view(), false)?;
    Ok((trainer, prepared, effective))
}

fn eval(config: &RunConfig, checkpoint: &Path, out: Option<&Path>) -> Result<Map<String, Value>> {
    let (trainer, prepared, effective) = restore(config, checkpoint)?;
    let report = evaluate(&trainer, &prepared, &effective)?;
    if let Some(dir) = out {
        record_run(dir, &effective, &[checkpoint])?;
        write_metrics(dir, &report)?;
    }
    Ok(as_map(json!({
        "command": "eval",
        "num_evaluated": report.num_evaluated,
        "averaging": report.averaging,
        "metrics": metrics_value(&report),
    })))
}

fn diagnose(config: &RunConfig, checkpoints: &[PathBuf], out: &Path) -> Result<Map<String, Value>> {
    let checkpoint = checkpoints.last().expect("clap requires one checkpoint");
    let (trainer, prepared, effective) = restore(config, checkpoint)?;
    let refs: Vec<&Path> = checkpoints.iter().map(|p| p.as_path()).collect();
    record_run(out, &effective, &refs)?;
    let dc = &effective.diagnostics;
    let nu = prepared.dataset.num_users();
    let nodes = trainer.node_embeddings()?;
    let items = nodes.slice(s![nu.., ..]);
    let projected = trainer.projected_text()?;
    let pairs: Vec<(u32, u32)> = prepared.dataset.train().interactions.iter().map(|x| (x.user, x.item)).collect();
    // fused view: mean of the unit interaction representation and unit text
    let g = NormalizedRows::new(interaction_reprs(nodes.view(), nu, &pairs).view(), "interaction representation")?.rows;
    let t = NormalizedRows::new(projected.view(), "projected text")?.rows;
    let fused = (&g + &t) * 0.5;

    let mut uniformity = Map::new();
    let mut rows = Vec::new();
    for (label, view) in [("graph", items), ("text", t.view()), ("fused", fused.view())] {
        let st = cosine_similarity_stats(view, dc.num_pairs, dc.seed)?;
        rows.push(vec![
            label.to_string(),
            st.mean.to_string(),
            st.std_dev.to_string(),
            st.min.to_string(),
            st.p25.to_string(),
            st.p75.to_string(),
            st.max.to_string(),
            st.num_pairs.to_string(),
        ]);
        uniformity.insert(label.into(), serde_json::to_value(&st).map_err(|e| Error::Format(e.to_string()))?);
    }
    write_tsv(
        &out.join("uniformity.tsv"),
        &["embeddings", "mean", "std_dev", "min", "p25", "p75", "max", "num_pairs"],
        rows,
    )?;

    let unit_items = NormalizedRows::new(items, "item embedding")?.rows;
    let variance = dimension_variance(unit_items.view(), dc.variance_bins)?;
    write_tsv(
        &out.join("dimension_variance.tsv"),
        &["dimension", "variance"],
        variance.variances.iter().enumerate().map(|(d, v)| vec![d.to_string(), v.to_string()]),
    )?;
    write_histogram_tsv(&out.join("dimension_variance_hist.tsv"), &variance.histogram)?;

    let freqs = prepared.dataset.train().item_frequencies();
    let correlation = match popularity_norm_correlation(items, &freqs) {
        Ok(c) => {
            write_tsv(
                &out.join("popularity_norm.tsv"),
                &["log1p_frequency", "norm"],
                c.points.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]),
            )?;
            json!(c.r)
        }
        Err(e) => {
            log::warn!("popularity-norm correlation unavailable: {e}");
            Value::Null
        }
    };

    let gt_path = prepared.dir.join(GROUND_TRUTH_FILE);
    let anchoring = if gt_path.is_file() {
        let truth = read_ground_truth(&gt_path)?;
        let item_ids: Vec<u32> = pairs.iter().map(|p| p.1).collect();
        let mut series = Vec::new();
        for path in &checkpoints[..checkpoints.len() - 1] {
            let (t, _, _) = restore(config, path)?;
            let e = anchoring_energy(t.projected_text()?.view(), &item_ids, &truth, t.params().projection.weight.view())?;
            series.push((t.epoch(), e));
        }
        let e = anchoring_energy(projected.view(), &item_ids, &truth, trainer.params().projection.weight.view())?;
        series.push((trainer.epoch(), e.clone()));
        write_tsv(
            &out.join("anchoring_energy.tsv"),
            &["epoch", "objective", "subjective", "residual"],
            series.iter().map(|(epoch, e)| {
                vec![
                    epoch.to_string(),
                    e.objective.to_string(),
                    e.subjective.to_string(),
                    e.residual.to_string(),
                ]
            }),
        )?;
        serde_json::to_value(&e).map_err(|e| Error::Format(e.to_string()))?
    } else {
        Value::Null
    };

    let summary = json!({
        "uniformity": uniformity,
        "mean_dimension_variance": variance.variances.iter().sum::<f64>() / variance.variances.len() as f64,
        "popularity_norm_r": correlation,
        "anchoring": anchoring,
    });
    write_json(&out.join("diagnostics.json"), &summary)?;
    let mut m = as_map(summary);
    m.insert("command".into(), json!("diagnose"));
    Ok(m)
}

fn ablate(config: &RunConfig, out: &Path) -> Result<Map<String, Value>> {
    let (prepared, text, inputs) = load_data(config)?;
    let refs: Vec<&Path> = inputs.iter().map(|p| p.as_path()).collect();
    record_run(out, config, &refs)?;
    let cells = [
        (LossVariant::Symcere, true),
        (LossVariant::Symcere, false),
        (LossVariant::Infonce, true),
        (LossVariant::Infonce, false),
    ];
    let mut results = Vec::new();
    for (variant, normalize) in cells {
        let name = format!("{variant}_{}", if normalize { "norm" } else { "no_norm" });
        let mut c = config.clone();
        c.loss.variant = variant;
        c.loss.normalize = normalize;
        let dir = out.join(&name);
        record_run(&dir, &c, &refs)?;
        log::info!("ablation cell {name}");
        results.push((name, train_run(&c, &prepared, &text, &dir, None)?));
    }
    let baseline = random_ranking_baseline(&prepared.dataset, config.eval.primary_k())?;
    let table = ablation_table(&results);
    write_tsv(
        &out.join("ablation.tsv"),
        &["variant", "metric", "value", "drop_pct"],
        table.rows.iter().map(|r| vec![r.0.clone(), r.1.clone(), r.2.to_string(), r.3.to_string()]),
    )?;
    write_tsv(
        &out.join("min_drop.tsv"),
        &["metric", "min_drop_pct"],
        table.min_drop.iter().map(|(m, d)| vec![m.clone(), d.to_string()]),
    )?;
    let mut m = Map::new();
    m.insert("command".into(), json!("ablate"));
    m.insert(
        "rows".into(),
        json!(table
            .rows
            .iter()
            .map(|r| json!({"variant": r.0, "metric": r.1, "value": r.2, "drop_pct": r.3}))
            .collect::<Vec<_>>()),
    );
    m.insert("min_drop_pct".into(), json!(table.min_drop.iter().cloned().collect::<Map<_, _>>()));
    m.insert("random_ndcg".into(), json!(baseline.ndcg));
    Ok(m)
}

pub(crate) struct AblationTable {
    /// `(variant, metric, value, drop % vs the first variant)`.
    pub rows: Vec<(String, String, f64, f64)>,
    /// Per metric, the drop of the worst variant.
    pub min_drop: Vec<(String, Value)>,
}

/// Drop is `(full − variant) / full × 100` with the first entry as the full model.
pub(crate) fn ablation_table(results: &[(String, MetricsReport)]) -> AblationTable {
    let mut rows = Vec::new();
    let mut min_drop = Vec::new();
    let Some((_, full)) = results.first() else {
        return AblationTable { rows, min_drop };
    };
    for (i, k) in full.ks.iter().enumerate() {
        for (metric, pick) in [("hr", 0usize), ("ndcg", 1)] {
            let name = format!("{metric}@{k}");
            let get = |r: &MetricsReport| if pick == 0 { r.hr[i] } else { r.ndcg[i] };
            let base = get(full);
            let mut worst: Option<f64> = None;
            for (variant, r) in results {
                let v = get(r);
                let drop = if base > 0.0 { (base - v) / base * 100.0 } else { 0.0 };
                rows.push((variant.clone(), name.clone(), v, drop));
                if variant != &results[0].0 {
                    worst = Some(worst.map_or(v, |w: f64| w.min(v)));
                }
            }
            let d = worst.map(|w| if base > 0.0 { (base - w) / base * 100.0 } else { 0.0 });
            min_drop.push((name, json!(d)));
        }
    }
    AblationTable { rows, min_drop }
}
