//! One function per subcommand. Each reads its inputs from the work
//! directory, fails early when a prerequisite artifact is missing, and
//! writes its outputs back.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use log::info;
use serde::{de::DeserializeOwned, Serialize};

use dupq_core::baseline::{bm25_rank_all, Bm25Index};
use dupq_core::corpus::{
    derive_pairs, parse_links, parse_posts, preprocess_text, read_pairs, read_questions, read_rows,
    split_pairs, write_pairs, write_questions, Corpus, CorpusStats, DuplicatePair, QuestionId,
    QuestionRecord, SplitAssignment,
};
use dupq_core::embed::{encode_field, train_sgns, EmbeddingStore, FieldVectors, MeanPoolEncoder, PrecomputedEncoder};
use dupq_core::eval::{mann_whitney_u, RetrievalReport};
use dupq_core::features::{FeatureMode, QuestionFeatures, TagFeatures};
use dupq_core::ranking::{read_ranked, write_ranked, RankedList};
use dupq_core::retrieval::train::Validation;
use dupq_core::retrieval::{
    bucket_similarity, build_buckets, project_all, rank_candidates, rank_projected, train_head, CandidateGenerator,
    EvalAnchor, NegativeSampler, SiameseHead, TripletSource,
};
use dupq_core::synth::{self, SynthConfig};
use dupq_core::taggraph::{build_graph, generate_walks, TagGraph};
use dupq_core::timepred::{
    build_samples, predict_and_rank, read_time_ranked, split_time_pairs, train_time_mlp, train_time_tree,
    write_time_ranked, RegressionTree, TimeMlp, TimeModel, TimeReport,
};

use crate::config::PipelineConfig;
use crate::workspace::{mode_slug, require, Workspace};

pub const EVAL_SPLITS: [&str; 2] = ["validation", "test"];

pub struct Ctx<'c> {
    pub cfg: &'c PipelineConfig,
    pub ws: Workspace,
}

impl Ctx<'_> {
    fn mode(&self) -> FeatureMode {
        self.cfg.feature_mode
    }

    fn corpus(&self) -> Result<Corpus> {
        let path = self.ws.questions();
        require(&path, "ingest")?;
        Ok(Corpus::new(read_questions(&path)?))
    }

    fn pairs(&self) -> Result<Vec<DuplicatePair>> {
        let path = self.ws.pairs();
        require(&path, "ingest")?;
        Ok(read_pairs(&path)?)
    }

    fn splits(&self) -> Result<SplitAssignment> {
        Ok(split_pairs(&self.pairs()?, &self.cfg.split))
    }

    fn graph(&self) -> Result<TagGraph> {
        require(&self.ws.edges(), "build-graph")?;
        require(&self.ws.tag_counts(), "build-graph")?;
        Ok(TagGraph::load(&self.ws.edges(), &self.ws.tag_counts())?)
    }

    fn token_store(&self) -> Result<EmbeddingStore> {
        let path = self.ws.token_vectors();
        require(&path, "train-embeddings")?;
        Ok(EmbeddingStore::load(&path)?)
    }

    /// Per-question inputs for `mode`, from the precomputed field store when
    /// configured, otherwise from the trained token vectors.
    fn features(&self, corpus: &Corpus, mode: FeatureMode) -> Result<QuestionFeatures> {
        let graph;
        let tag_vectors;
        let tags = if mode.uses_network() {
            graph = self.graph()?;
            require(&self.ws.tag_vectors(), "train-embeddings")?;
            tag_vectors = EmbeddingStore::load(&self.ws.tag_vectors())?;
            Some(TagFeatures {
                vectors: &tag_vectors,
                graph: &graph,
            })
        } else {
            None
        };
        let features = match &self.cfg.paths.precomputed_fields {
            Some(path) => {
                let store = EmbeddingStore::load(path)
                    .with_context(|| format!("loading precomputed field vectors {}", path.display()))?;
                QuestionFeatures::build(corpus.records(), &PrecomputedEncoder::new(store), tags, mode)?
            }
            None => QuestionFeatures::build(corpus.records(), &MeanPoolEncoder::new(self.token_store()?), tags, mode)?,
        };
        Ok(features)
    }

    fn anchors(&self, split: &str) -> Result<Vec<EvalAnchor>> {
        let path = self.ws.candidates(split);
        require(&path, "build-candidates")?;
        read_jsonl(&path)
    }

    fn head(&self) -> Result<SiameseHead> {
        let path = self.ws.head(self.mode());
        require(&path, "train-retrieval")?;
        let head = SiameseHead::load(&path)?;
        if head.mode != self.mode() {
            bail!("{} was trained for {} features, not {}", path.display(), head.mode, self.mode());
        }
        Ok(head)
    }
}

fn write_json<T: Serialize>(ws: &Workspace, path: &Path, value: &T) -> Result<()> {
    ws.prepare(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_text(ws: &Workspace, path: &Path, text: &str) -> Result<()> {
    ws.prepare(path)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_jsonl<T: Serialize>(ws: &Workspace, path: &Path, items: &[T]) -> Result<()> {
    ws.prepare(path)?;
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn read_dump(path: &Path) -> Result<Vec<dupq_core::corpus::DumpRow>> {
    let file = File::open(path).with_context(|| format!("opening dump file {}", path.display()))?;
    let rows = read_rows(BufReader::new(file))
        .collect::<dupq_core::Result<Vec<_>>>()
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(rows)
}

pub fn ingest(ctx: &Ctx) -> Result<()> {
    let paths = &ctx.cfg.paths;
    let posts = parse_posts(read_dump(&paths.posts)?)?;
    let corpus = Corpus::new(posts.questions);
    let links = parse_links(read_dump(&paths.links)?, |id| corpus.contains(id));
    let derived = derive_pairs(&links.links, &corpus);

    let mut stats = CorpusStats::describe(&corpus, &derived.pairs);
    stats.answers = posts.answer_rows;
    stats.duplicate_links = links.links.len();
    stats.malformed_post_rows = posts.malformed_rows;
    stats.malformed_link_rows = links.malformed_rows;
    stats.unresolved_links = links.unresolved + derived.unresolved;
    stats.self_links = derived.self_links;
    stats.repeated_links = derived.repeated_links;
    stats.early_links = derived.early_links;

    let ws = &ctx.ws;
    ws.prepare(&ws.questions())?;
    write_questions(&ws.questions(), corpus.records())?;
    write_pairs(&ws.pairs(), &derived.pairs)?;
    write_json(ws, &ws.corpus_stats(), &stats)?;
    let split = split_pairs(&derived.pairs, &ctx.cfg.split);
    info!(
        "ingested {} questions, {} duplicate pairs (train {}, validation {}, test {})",
        corpus.len(),
        derived.pairs.len(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    Ok(())
}

pub fn build_graph_cmd(ctx: &Ctx) -> Result<()> {
    let corpus = ctx.corpus()?;
    let graph = if ctx.cfg.graph.training_only {
        build_graph(corpus.created_before(ctx.cfg.split.train_end), ctx.cfg.graph.edge_threshold)
    } else {
        build_graph(corpus.records(), ctx.cfg.graph.edge_threshold)
    };
    ctx.ws.prepare(&ctx.ws.edges())?;
    graph.save(&ctx.ws.edges(), &ctx.ws.tag_counts())?;
    info!("tag graph: {} nodes, {} edges", graph.node_count(), graph.edge_count());
    Ok(())
}

#[derive(Serialize)]
struct EmbeddingReport {
    word2vec_vocabulary: Option<usize>,
    word2vec_objective: Vec<f64>,
    node2vec_vocabulary: usize,
    node2vec_walks: usize,
    node2vec_objective: Vec<f64>,
}

pub fn train_embeddings(ctx: &Ctx) -> Result<()> {
    let ws = &ctx.ws;
    let graph = ctx.graph()?;
    let mut report = EmbeddingReport {
        word2vec_vocabulary: None,
        word2vec_objective: Vec::new(),
        node2vec_vocabulary: 0,
        node2vec_walks: 0,
        node2vec_objective: Vec::new(),
    };

    if ctx.cfg.paths.precomputed_fields.is_none() {
        let corpus = ctx.corpus()?;
        let sequences: Vec<&[String]> = corpus
            .records()
            .iter()
            .flat_map(|r| [r.title_tokens.as_slice(), r.body_tokens.as_slice()])
            .filter(|s| !s.is_empty())
            .collect();
        let sequences: Vec<Vec<&str>> = sequences.iter().map(|s| s.iter().map(String::as_str).collect()).collect();
        let trained = train_sgns(&sequences, &ctx.cfg.word2vec_config()).context("training word vectors")?;
        ws.prepare(&ws.token_vectors())?;
        trained.store.save(&ws.token_vectors())?;
        info!("word2vec: {} tokens", trained.vocabulary.len());
        report.word2vec_vocabulary = Some(trained.vocabulary.len());
        report.word2vec_objective = trained.epoch_objective;
    } else {
        info!("precomputed field vectors configured; skipping word2vec");
    }

    let walks = generate_walks(&graph, &ctx.cfg.walk_config())?;
    let trained = train_sgns(&walks, &ctx.cfg.node2vec_sgns()).context("training tag vectors")?;
    ws.prepare(&ws.tag_vectors())?;
    trained.store.save(&ws.tag_vectors())?;
    info!("node2vec: {} tags from {} walks", trained.vocabulary.len(), walks.len());
    report.node2vec_vocabulary = trained.vocabulary.len();
    report.node2vec_walks = walks.len();
    report.node2vec_objective = trained.epoch_objective;
    write_json(ws, &ws.root().join("embeddings").join("train.json"), &report)
}

/// Gold masters per anchor, anchors ascending.
fn gold_by_anchor(pairs: &[DuplicatePair]) -> BTreeMap<QuestionId, Vec<QuestionId>> {
    let mut out: BTreeMap<QuestionId, Vec<QuestionId>> = BTreeMap::new();
    for p in pairs {
        out.entry(p.anchor).or_default().push(p.master);
    }
    for masters in out.values_mut() {
        masters.sort_unstable();
        masters.dedup();
    }
    out
}

#[derive(Debug, Serialize)]
struct SplitSummary {
    anchors: usize,
    mean_candidates: f64,
    upper_bound: f64,
}

pub fn build_candidates(ctx: &Ctx) -> Result<()> {
    let corpus = ctx.corpus()?;
    let splits = ctx.splits()?;
    // Title cosines come from the text encoder alone.
    let features = ctx.features(&corpus, FeatureMode::Text)?;
    let generator = CandidateGenerator::new(&corpus, &features, ctx.cfg.candidate_filter());
    let mut summary = BTreeMap::new();
    for split in EVAL_SPLITS {
        let pairs = if split == "validation" { &splits.validation } else { &splits.test };
        let gold = gold_by_anchor(pairs);
        let ids: Vec<QuestionId> = gold.keys().copied().collect();
        let sets = generator.generate_many(&ids)?;
        let anchors: Vec<EvalAnchor> = sets
            .into_iter()
            .map(|set| {
                let gold = gold[&set.anchor].clone();
                EvalAnchor { set, gold }
            })
            .collect();
        let n = anchors.len().max(1) as f64;
        let s = SplitSummary {
            anchors: anchors.len(),
            mean_candidates: anchors.iter().map(|a| a.set.len() as f64).sum::<f64>() / n,
            upper_bound: anchors.iter().filter(|a| a.gold_present()).count() as f64 / n,
        };
        info!("{split}: {} anchors, mean candidates {:.1}, upper bound {:.3}", s.anchors, s.mean_candidates, s.upper_bound);
        write_jsonl(&ctx.ws, &ctx.ws.candidates(split), &anchors)?;
        summary.insert(split, s);
    }
    write_json(&ctx.ws, &ctx.ws.candidate_summary(), &summary)
}

pub fn train_retrieval(ctx: &Ctx) -> Result<()> {
    let corpus = ctx.corpus()?;
    let splits = ctx.splits()?;
    if splits.train.is_empty() {
        bail!("no training pairs fall inside the training window");
    }
    let validation = ctx.anchors("validation")?;
    let features = ctx.features(&corpus, ctx.mode())?;
    let buckets = build_buckets(&splits.train, &features);
    let similarity = bucket_similarity(&buckets);
    let pool = corpus.created_before(ctx.cfg.split.train_end).map(|r| r.id);
    let sampler = NegativeSampler::new(&buckets, &similarity, &corpus, ctx.cfg.retrieval.alpha, pool);
    let source = TripletSource::Resampled {
        pairs: splits.train.clone(),
        sampler: &sampler,
    };
    let val = (!validation.is_empty()).then_some(Validation {
        anchors: &validation,
        corpus: &corpus,
    });
    let (head, report) = train_head(source, &features, val, &ctx.cfg.head_hyper())?;
    let ws = &ctx.ws;
    ws.prepare(&ws.head(ctx.mode()))?;
    head.save(&ws.head(ctx.mode()))?;
    write_json(ws, &ws.head_report(ctx.mode()), &report)?;
    info!(
        "trained {} head over {} buckets; best epoch {}; final loss {:.6}",
        ctx.mode(),
        buckets.len(),
        report.best_epoch,
        report.epoch_loss.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Head,
    Bm25,
}

#[derive(Debug, Serialize)]
struct Comparison {
    against: String,
    anchors: usize,
    u_this: f64,
    u_other: f64,
    p_value: f64,
    exact: bool,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    label: String,
    split: String,
    report: RetrievalReport,
    comparisons: Vec<Comparison>,
}

fn reciprocal(rank: Option<usize>) -> f64 {
    rank.map_or(0.0, |r| 1.0 / r as f64)
}

pub fn ranked_label(method: Method, mode: FeatureMode) -> String {
    match method {
        Method::Head => format!("head-{}", mode_slug(mode)),
        Method::Bm25 => "bm25".to_string(),
    }
}

pub fn eval_retrieval(ctx: &Ctx, method: Method, split: &str) -> Result<()> {
    if !EVAL_SPLITS.contains(&split) {
        bail!("unknown split {split:?}; expected validation or test");
    }
    let corpus = ctx.corpus()?;
    let anchors = ctx.anchors(split)?;
    let lists: Vec<RankedList> = match method {
        Method::Head => {
            let head = ctx.head()?;
            let features = ctx.features(&corpus, ctx.mode())?;
            rank_candidates(&head, &features, &anchors, ctx.cfg.retrieval.score, &corpus)?
        }
        Method::Bm25 => {
            let index = Bm25Index::index_corpus(corpus.records(), ctx.cfg.bm25);
            bm25_rank_all(&anchors, &index, &corpus)?
        }
    };
    let label = ranked_label(method, ctx.mode());
    let ws = &ctx.ws;
    let ranked_path = ws.ranked(&label, split);
    ws.prepare(&ranked_path)?;
    write_ranked(&ranked_path, &lists, ctx.cfg.retrieval.top_k)?;
    let report = RetrievalReport::from_ranked(&lists)?;

    // Paired comparison against every other ranking of the same anchors.
    let ours: BTreeMap<QuestionId, f64> = lists.iter().map(|l| (l.anchor, reciprocal(l.gold_rank))).collect();
    let mut comparisons = Vec::new();
    let others = ["bm25".to_string(), "head-text".into(), "head-text-network".into()];
    for other in others.iter().filter(|o| **o != label) {
        let path = ws.ranked(other, split);
        if !path.exists() {
            continue;
        }
        let theirs = read_ranked(&path)?;
        let (a, b): (Vec<f64>, Vec<f64>) = theirs
            .iter()
            .filter_map(|l| ours.get(&l.anchor).map(|&rr| (rr, reciprocal(l.gold_rank))))
            .unzip();
        if a.is_empty() {
            continue;
        }
        let mw = mann_whitney_u(&a, &b)?;
        comparisons.push(Comparison {
            against: other.clone(),
            anchors: a.len(),
            u_this: mw.u_a,
            u_other: mw.u_b,
            p_value: mw.p_value,
            exact: mw.exact,
        });
    }

    let name = format!("retrieval-{label}-{split}");
    let mut table = report.to_table(&format!("{label} ({split})"));
    for c in &comparisons {
        table.push_str(&format!(
            "  vs {:<14} U={} / {}  p={:.4}{}\n",
            c.against,
            c.u_this,
            c.u_other,
            c.p_value,
            if c.exact { " (exact)" } else { "" }
        ));
    }
    write_text(ws, &ws.report(&name, "txt"), &table)?;
    let out = EvalOutput {
        label: label.clone(),
        split: split.to_string(),
        report,
        comparisons,
    };
    write_json(ws, &ws.report(&name, "json"), &out)?;
    print!("{table}");
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelKind {
    Mlp,
    Tree,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Tree => "tree",
        }
    }
}

#[derive(Debug, Serialize)]
struct TreeSummary {
    train_pairs: usize,
    validation_pairs: usize,
    depth: usize,
    nodes: usize,
    validation: Option<TimeReport>,
}

pub fn train_timepred(ctx: &Ctx, model: ModelKind) -> Result<()> {
    let corpus = ctx.corpus()?;
    let pairs = ctx.pairs()?;
    let t = &ctx.cfg.timepred;
    let split = split_time_pairs(&pairs, &corpus, t.cutoff, t.validation_fraction)?;
    if split.train.is_empty() {
        bail!("no pairs with anchors posted before {}", t.cutoff);
    }
    let features = ctx.features(&corpus, ctx.mode())?;
    let train = build_samples(&split.train, &corpus, &features, t.gap_floor_hours)?;
    let validation = build_samples(&split.validation, &corpus, &features, t.gap_floor_hours)?;
    let ws = &ctx.ws;
    let ckpt = ws.time_model(model.name(), ctx.mode());
    ws.prepare(&ckpt)?;
    match model {
        ModelKind::Mlp => {
            let (mlp, report) = train_time_mlp(&train, &validation, ctx.mode(), &ctx.cfg.mlp_hyper())?;
            mlp.save(&ckpt)?;
            write_json(ws, &ws.time_train_report("mlp", ctx.mode()), &report)?;
            info!("time MLP: {} train / {} validation pairs, best epoch {}", train.len(), validation.len(), report.best_epoch);
        }
        ModelKind::Tree => {
            let tree = train_time_tree(&train, ctx.cfg.tree_params(), ctx.mode())?;
            tree.save(&ckpt)?;
            let depth = tree.depth();
            let nodes = tree.nodes().len();
            let model = TimeModel::Tree(tree);
            let val_report = if validation.is_empty() {
                None
            } else {
                Some(TimeReport::from_predictions(&predict_and_rank(&model, &validation)?)?)
            };
            let summary = TreeSummary {
                train_pairs: train.len(),
                validation_pairs: validation.len(),
                depth,
                nodes,
                validation: val_report,
            };
            write_json(ws, &ws.time_train_report("tree", ctx.mode()), &summary)?;
            info!("time tree: depth {depth}, {nodes} nodes");
        }
    }
    Ok(())
}

pub fn eval_timepred(ctx: &Ctx, model: ModelKind) -> Result<()> {
    let ws = &ctx.ws;
    let ckpt = ws.time_model(model.name(), ctx.mode());
    require(&ckpt, &format!("train-timepred --model {}", model.name()))?;
    let loaded = match model {
        ModelKind::Mlp => TimeModel::Mlp(TimeMlp::load(&ckpt)?),
        ModelKind::Tree => TimeModel::Tree(RegressionTree::load(&ckpt)?),
    };
    let corpus = ctx.corpus()?;
    let pairs = ctx.pairs()?;
    let t = &ctx.cfg.timepred;
    let split = split_time_pairs(&pairs, &corpus, t.cutoff, t.validation_fraction)?;
    if split.test.is_empty() {
        bail!("no test pairs: every anchor was posted before {}", t.cutoff);
    }
    let features = ctx.features(&corpus, ctx.mode())?;
    let test = build_samples(&split.test, &corpus, &features, t.gap_floor_hours)?;
    let preds = predict_and_rank(&loaded, &test)?;
    let ranked = ws.time_ranked(model.name(), ctx.mode());
    ws.prepare(&ranked)?;
    write_time_ranked(&ranked, &preds)?;
    // Round-trip check on what was just written.
    debug_assert_eq!(read_time_ranked(&ranked).map(|p| p.len()).ok(), Some(preds.len()));
    let report = TimeReport::from_predictions(&preds)?;
    let label = format!("{}-{}", model.name(), mode_slug(ctx.mode()));
    let table = report.to_table(&label);
    write_text(ws, &ws.report(&format!("timepred-{label}"), "txt"), &table)?;
    write_json(ws, &ws.report(&format!("timepred-{label}"), "json"), &report)?;
    print!("{table}");
    Ok(())
}

pub struct QueryArgs {
    pub title: String,
    pub body: String,
    pub tags: Vec<String>,
    pub top_k: usize,
    pub created: Option<DateTime<Utc>>,
}

pub fn query(ctx: &Ctx, args: &QueryArgs) -> Result<()> {
    if ctx.cfg.paths.precomputed_fields.is_some() {
        bail!("query encodes free text with the built-in word vectors; unset paths.precomputed_fields");
    }
    if args.tags.is_empty() {
        bail!("query needs at least one tag");
    }
    let corpus = ctx.corpus()?;
    let head = ctx.head()?;
    let tokens = ctx.token_store()?;
    let mut features = ctx.features(&corpus, ctx.mode())?;
    let id = corpus.records().last().map_or(1, |r| r.id + 1);
    let record = QuestionRecord {
        id,
        title_raw: args.title.clone(),
        body_raw: args.body.clone(),
        title_tokens: preprocess_text(&args.title),
        body_tokens: preprocess_text(&args.body),
        tags: args.tags.clone(),
        created_at: args.created.unwrap_or_else(Utc::now),
        answer_count: 0,
    };
    let fields = FieldVectors {
        title: encode_field(&record.title_tokens, &tokens),
        body: encode_field(&record.body_tokens, &tokens),
    };
    let tag = if ctx.mode().uses_network() {
        let graph = ctx.graph()?;
        let vectors = EmbeddingStore::load(&ctx.ws.tag_vectors())?;
        Some(TagFeatures { vectors: &vectors, graph: &graph }.vector_for(&record))
    } else {
        None
    };
    features.insert(id, &fields, tag.as_deref())?;
    let generator = CandidateGenerator::new(&corpus, &features, ctx.cfg.candidate_filter());
    let set = generator.generate_for(&record, &fields.title);
    if set.is_empty() {
        println!("no candidates pass the filters");
        return Ok(());
    }
    let anchor = EvalAnchor { set, gold: Vec::new() };
    let mut ids: Vec<QuestionId> = anchor.set.candidates.iter().map(|c| c.id).collect();
    ids.push(id);
    let projections = project_all(&head, &features, &ids)?;
    let ranked = rank_projected(&anchor, &projections[&id], &projections, ctx.cfg.retrieval.score, head.norm_degree, &corpus)?;
    println!("{} candidates", ranked.len());
    for (i, e) in ranked.entries.iter().take(args.top_k).enumerate() {
        let title = corpus.get(e.id).map_or("", |r| r.title_raw.as_str());
        println!("{:>3}\t{}\t{:.6}\t{}", i + 1, e.id, e.score, title);
    }
    Ok(())
}

pub fn stats(ctx: &Ctx) -> Result<()> {
    let ws = &ctx.ws;
    let path = ws.corpus_stats();
    require(&path, "ingest")?;
    let stats: CorpusStats = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let split = ctx.splits()?;
    println!("corpus");
    println!("  questions          {}", stats.questions);
    println!("  answered           {}", stats.answered_questions);
    println!("  answers            {}", stats.answers);
    println!("  tags               {}", stats.tags);
    println!("  duplicate links    {}", stats.duplicate_links);
    println!("  duplicate pairs    {}", stats.duplicate_pairs);
    println!("  train/val/test     {}/{}/{}", split.train.len(), split.validation.len(), split.test.len());
    println!("  malformed rows     {} posts, {} links", stats.malformed_post_rows, stats.malformed_link_rows);
    let g = &stats.confirmation_gap;
    println!(
        "  confirmation gap   <=12h {:.3}  12h-5d {:.3}  >5d {:.3}",
        g.within_12h, g.from_12h_to_5d, g.over_5d
    );
    if ws.edges().exists() && ws.tag_counts().exists() {
        let graph = ctx.graph()?;
        println!("tag graph\n  nodes {}  edges {}", graph.node_count(), graph.edge_count());
    }
    if ws.candidate_summary().exists() {
        println!("candidates\n{}", std::fs::read_to_string(ws.candidate_summary())?.trim_end());
    }
    let reports = ws.root().join("reports");
    if reports.is_dir() {
        let mut names: Vec<_> = std::fs::read_dir(&reports)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        names.sort();
        for p in names {
            print!("{}", std::fs::read_to_string(&p)?);
        }
    }
    Ok(())
}

pub fn synth_cmd(out: &Path, cfg: &SynthConfig) -> Result<()> {
    let dump = synth::generate(cfg)?;
    dump.write(out)?;
    info!("wrote synthetic dump with {} planted pairs to {}", dump.planted.len(), out.display());
    Ok(())
}
