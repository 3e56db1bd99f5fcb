//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use htim_core::config::RunConfig;
use htim_core::corpus::{synth_region, EngagementTier, PartyLabel, RetweetEdge, SynthConfig};
use htim_core::eval_report::{macro_f1, run_cv, ConfusionMatrix, CvOptions, LabeledUser};
use htim_core::graph_embeddings::{build_graph, expand_pairs, generate_walks, transition_distribution, AliasTable, WalkConfig, Walker};
use htim_core::model::{train_svm, Gamma, KernelConfig, MajorityLearner, RandomLearner, SvmModel};
use htim_core::pipeline::run_experiment;
use htim_core::rng;
use htim_core::sgns::{NoiseSampler, ParamMatrix, Scratch, Step};
use htim_core::text_features::{context_positions, fit_tfidf};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const TFIDF_TOL: f64 = 1e-9;
const GRAD_REL_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;
const WALK_TOL: f64 = 1e-12;
const ALIAS_DRAWS: usize = 1_000_000;
const SIGMAS: f64 = 3.0;
const TREND_MEMBER_MIN: f64 = 90.0;
const TREND_GAIN_MIN: f64 = 5.0;
const TREND_SEED: u64 = 42;
const TREND_RE_EPOCHS: usize = 20;
const RANDOM_BAND: f64 = 2.0;
const F1_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s as f64, || {
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

// 1 -------------------------------------------------------------------------

fn brute_tfidf(docs: &[Vec<String>], term: &str, doc: &[String], normalize: bool, all_terms: &[String]) -> f64 {
    let n = docs.len() as f64;
    let weight = |t: &str| {
        let tf = doc.iter().filter(|w| *w == t).count() as f64;
        let df = docs.iter().filter(|d| d.iter().any(|w| w == t)).count() as f64;
        tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
    };
    let w = weight(term);
    if !normalize {
        return w;
    }
    let norm = all_terms.iter().map(|t| weight(t).powi(2)).sum::<f64>().sqrt();
    if norm == 0.0 {
        0.0
    } else {
        w / norm
    }
}

fn tfidf_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for corpus in 0..20u64 {
        let mut rng = rng::seeded(corpus, &[1]);
        let vocab = rng.gen_range(2..=30);
        let docs: Vec<Vec<String>> = (0..rng.gen_range(1..=10))
            .map(|_| (0..rng.gen_range(1..=15)).map(|_| format!("t{}", rng.gen_range(0..vocab))).collect())
            .collect();
        let distinct: BTreeSet<&String> = docs.iter().flatten().collect();
        let all_terms: Vec<String> = distinct.iter().map(|s| s.to_string()).collect();
        for normalize in [false, true] {
            let model = fit_tfidf(&docs, all_terms.len(), normalize).map_err(|e| e.to_string())?;
            let got: BTreeSet<&String> = model.terms.iter().collect();
            ensure(got == distinct, || format!("corpus {corpus}: term set differs"))?;
            for doc in &docs {
                let v = model.transform(doc);
                for (i, term) in model.terms.iter().enumerate() {
                    worst = worst.max((v[i] - brute_tfidf(&docs, term, doc, normalize, &all_terms)).abs());
                }
            }
        }
    }
    ensure(worst <= TFIDF_TOL, || format!("max |diff| {worst:e} > {TFIDF_TOL:e}"))?;
    within(start.elapsed(), 5)?;
    Ok(format!("20 corpora, max |diff| {worst:.1e} (tol {TFIDF_TOL:e})"))
}

// 2 -------------------------------------------------------------------------

fn random_matrix(rows: usize, cols: usize, rng: &mut rng::Rng) -> ParamMatrix {
    let normal = Normal::new(0.0, 0.5).unwrap();
    ParamMatrix::from_vec(rows, cols, (0..rows * cols).map(|_| normal.sample(rng)).collect())
}

/// Relative error `||analytic - numeric|| / max(||analytic||, ||numeric||)`
/// over every parameter of both matrices.
fn gradient_error(input: &ParamMatrix, output: &ParamMatrix, step: Step<'_>) -> f64 {
    let mut scratch = Scratch::new(input.cols());
    let (_, grad) = scratch.gradient(input, output, step);
    let mut analytic = vec![0.0; (input.rows() + output.rows()) * input.cols()];
    let cols = input.cols();
    for (r, g) in &grad.input {
        for c in 0..cols {
            analytic[r * cols + c] += g[c];
        }
    }
    let offset = input.rows() * cols;
    for (r, g) in &grad.output {
        for c in 0..cols {
            analytic[offset + r * cols + c] += g[c];
        }
    }
    let mut numeric = vec![0.0; analytic.len()];
    for (m, base) in [(input, 0), (output, offset)] {
        for r in 0..m.rows() {
            for c in 0..cols {
                let x = m.get(r, c);
                m.set(r, c, x + FD_STEP);
                let up = scratch.loss(input, output, step);
                m.set(r, c, x - FD_STEP);
                let down = scratch.loss(input, output, step);
                m.set(r, c, x);
                numeric[base + r * cols + c] = (up - down) / (2.0 * FD_STEP);
            }
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-300)
}

fn edges(list: &[(&str, &str, u32)]) -> Vec<RetweetEdge> {
    list.iter()
        .map(|&(s, t, w)| RetweetEdge {
            source: s.into(),
            target: t.into(),
            weight: w,
        })
        .collect()
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let dim = 6;
    let mut rng = rng::seeded(2, &[]);
    let mut worst = BTreeMap::new();

    // CBOW: mean of the context window predicts the centre term.
    let sentence = [0usize, 3, 1, 4, 1, 5, 2, 6];
    let terms = 7;
    for center in 0..sentence.len() {
        let context: Vec<usize> = context_positions(sentence.len(), center, 2).map(|j| sentence[j]).collect();
        let negatives: Vec<usize> = (0..4).map(|_| rng.gen_range(0..terms)).collect();
        let (input, output) = (random_matrix(terms, dim, &mut rng), random_matrix(terms, dim, &mut rng));
        let e = gradient_error(&input, &output, Step { inputs: &context, target: sentence[center], negatives: &negatives });
        let w = worst.entry("cbow").or_insert(0.0f64);
        *w = w.max(e);
    }

    // Skip-gram on walks over a 6-node graph.
    let g = build_graph(&edges(&[("a", "b", 2), ("b", "c", 1), ("c", "d", 3), ("d", "a", 1), ("c", "e", 1), ("e", "f", 2)])).unwrap();
    let walks = generate_walks(&g, &WalkConfig { walks_per_node: 1, walk_length: 6, seed: 3, ..WalkConfig::node2vec() }).unwrap();
    let mut freq = vec![0.0; g.node_count()];
    walks.iter().flatten().for_each(|&v| freq[v] += 1.0);
    let noise = NoiseSampler::new(&freq).unwrap();
    for walk in walks.iter().take(4) {
        for (i, j) in [(0, 1), (2, 1), (3, 5)] {
            let mut negatives = vec![0; 5];
            noise.fill(&mut rng, &mut negatives);
            let (input, output) = (random_matrix(g.node_count(), dim, &mut rng), random_matrix(g.node_count(), dim, &mut rng));
            let e = gradient_error(&input, &output, Step { inputs: &[walk[i]], target: walk[j], negatives: &negatives });
            let w = worst.entry("skip-gram").or_insert(0.0f64);
            *w = w.max(e);
        }
    }

    // Relational: retweeter predicts retweeted user.
    let pairs = expand_pairs(&g);
    let mut target_freq = vec![0.0; g.node_count()];
    pairs.iter().for_each(|&(_, t)| target_freq[t] += 1.0);
    let noise = NoiseSampler::new(&target_freq).unwrap();
    for &(s, t) in &pairs {
        let mut negatives = vec![0; 5];
        noise.fill(&mut rng, &mut negatives);
        let (input, output) = (random_matrix(g.node_count(), dim, &mut rng), random_matrix(g.node_count(), dim, &mut rng));
        let e = gradient_error(&input, &output, Step { inputs: &[s], target: t, negatives: &negatives });
        let w = worst.entry("relational").or_insert(0.0f64);
        *w = w.max(e);
    }

    for (name, e) in &worst {
        ensure(*e <= GRAD_REL_TOL, || format!("{name} rel err {e:e} > {GRAD_REL_TOL:e}"))?;
    }
    within(start.elapsed(), 10)?;
    let detail: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    Ok(format!("max rel err: {} (tol {GRAD_REL_TOL:e})", detail.join(", ")))
}

// 3 -------------------------------------------------------------------------

fn small_graphs() -> Vec<(String, Vec<RetweetEdge>)> {
    let mut rng = rng::seeded(3, &[]);
    let mut w = move || rng.gen_range(1..=5u32);
    let name = |i: usize| format!("n{i}");
    let mut out = Vec::new();
    for n in 2..=5 {
        let path: Vec<_> = (0..n - 1).map(|i| (name(i), name(i + 1), w())).collect();
        out.push((format!("path{n}"), path));
    }
    out.push(("triangle".into(), vec![(name(0), name(1), w()), (name(1), name(2), w()), (name(2), name(0), w())]));
    for n in 3..=5 {
        let star: Vec<_> = (1..n).map(|i| (name(i), name(0), w())).collect();
        out.push((format!("star{n}"), star));
    }
    out.into_iter()
        .map(|(label, list)| {
            let e = list
                .into_iter()
                .map(|(s, t, weight)| RetweetEdge { source: s, target: t, weight })
                .collect();
            (label, e)
        })
        .collect()
}

fn sampler_within_band(expected: &[f64], draw: &mut dyn FnMut() -> usize) -> Result<f64, String> {
    let mut counts = vec![0usize; expected.len()];
    for _ in 0..ALIAS_DRAWS {
        counts[draw()] += 1;
    }
    let n = ALIAS_DRAWS as f64;
    let mut worst: f64 = 0.0;
    for (c, &p) in counts.iter().zip(expected) {
        let sigma = (n * p * (1.0 - p)).sqrt();
        let z = if sigma > 0.0 { (*c as f64 - n * p).abs() / sigma } else { (*c as f64 - n * p).abs() };
        worst = worst.max(z);
    }
    ensure(worst <= SIGMAS, || format!("empirical frequency {worst:.2} sigma from expectation"))?;
    Ok(worst)
}

fn walk_law() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut graphs = 0;
    for (label, list) in small_graphs() {
        let g = build_graph(&list).unwrap();
        // Undirected weights straight from the edge list.
        let mut weight: HashMap<(usize, usize), f64> = HashMap::new();
        for e in &list {
            let (a, b) = (g.index_of(&e.source).unwrap(), g.index_of(&e.target).unwrap());
            *weight.entry((a, b)).or_default() += e.weight as f64;
            *weight.entry((b, a)).or_default() += e.weight as f64;
        }
        for cur in 0..g.node_count() {
            let nbrs: Vec<usize> = (0..g.node_count()).filter(|&x| weight.contains_key(&(cur, x))).collect();
            let total: f64 = nbrs.iter().map(|&x| weight[&(cur, x)]).sum();
            for prev in std::iter::once(None).chain(nbrs.iter().map(|&x| Some(x))) {
                let dist = transition_distribution(&g, prev, cur, 1.0, 1.0);
                ensure(dist.len() == nbrs.len(), || format!("{label}: support size differs at node {cur}"))?;
                for (x, p) in dist {
                    worst = worst.max((p - weight[&(cur, x)] / total).abs());
                }
            }
        }
        graphs += 1;
    }
    ensure(worst <= WALK_TOL, || format!("max |diff| {worst:e} > {WALK_TOL:e}"))?;

    let mut rng = rng::seeded(33, &[]);
    let weights: Vec<f64> = (0..7).map(|_| rng.gen_range(0.05..3.0)).collect();
    let total: f64 = weights.iter().sum();
    let expected: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let table = AliasTable::new(&weights).map_err(|e| e.to_string())?;
    let z_alias = sampler_within_band(&expected, &mut || table.sample(&mut rng))?;

    // Biased second-order step on a 5-node graph through the walker's own tables.
    let g = build_graph(&edges(&[("a", "b", 2), ("b", "c", 1), ("b", "d", 3), ("c", "d", 1), ("d", "e", 2)])).unwrap();
    let cfg = WalkConfig { p: 0.5, q: 2.0, ..WalkConfig::node2vec() };
    let walker = Walker::new(&g, &cfg).map_err(|e| e.to_string())?;
    let (prev, cur) = (g.index_of("a").unwrap(), g.index_of("b").unwrap());
    let dist = transition_distribution(&g, Some(prev), cur, cfg.p, cfg.q);
    let slot: HashMap<usize, usize> = dist.iter().enumerate().map(|(i, &(x, _))| (x, i)).collect();
    let expected: Vec<f64> = dist.iter().map(|&(_, p)| p).collect();
    let z_walk = sampler_within_band(&expected, &mut || slot[&walker.step(Some(prev), cur, &mut rng).unwrap()])?;

    Ok(format!(
        "{graphs} graphs, max |diff| {worst:.1e}; 1e6 draws within {z_alias:.2} sigma (alias) and {z_walk:.2} sigma (biased step)"
    ))
}

// 4 -------------------------------------------------------------------------

fn synthetic_trend() -> Outcome {
    let start = Instant::now();
    let ds = synth_region(&SynthConfig { seed: TREND_SEED, ..SynthConfig::default() }).map_err(|e| e.to_string())?;
    let run = |method: &str, tier, mode: &str| -> Result<f64, String> {
        let cfg = RunConfig {
            method: method.parse().unwrap(),
            tier,
            seed: TREND_SEED,
            threads: 1,
            re_epochs: TREND_RE_EPOCHS,
            ..RunConfig::default()
        };
        let report = run_experiment(&ds, &cfg).map_err(|e| e.to_string())?.report;
        ensure(report.mode == mode, || format!("{method} ran in {} mode, expected {mode}", report.mode))?;
        Ok(report.macro_f1)
    };
    let member = run("re", EngagementTier::Member, "cv")?;
    let sym_re = run("re", EngagementTier::Sympathizer, "transfer")?;
    let sym_hybrid = run("re+tfidf", EngagementTier::Sympathizer, "transfer")?;
    let summary = format!(
        "RE members (10-fold CV) {member:.1}, RE sympathizers (transfer) {sym_re:.1}, RE+tfidf sympathizers (transfer) {sym_hybrid:.1}"
    );
    ensure(member >= TREND_MEMBER_MIN, || format!("(a) {summary}"))?;
    ensure(sym_re < member, || format!("(b) {summary}"))?;
    ensure(sym_hybrid - sym_re >= TREND_GAIN_MIN, || format!("(c) {summary}"))?;
    within(start.elapsed(), 300)?;
    Ok(format!("{summary} ({:.1}s)", start.elapsed().as_secs_f64()))
}

// 5 -------------------------------------------------------------------------

fn balanced_users(classes: usize, per_class: usize) -> Vec<LabeledUser> {
    (0..classes * per_class)
        .map(|i| LabeledUser::single(format!("u{i:04}"), PartyLabel::new(format!("c{}", i % classes)), Vec::new()))
        .collect()
}

fn baselines() -> Outcome {
    let k = 5;
    let users = balanced_users(k, 10);
    let opts = CvOptions { k: 10, seed: 1, ..CvOptions::default() };
    let majority = run_cv(&users, &MajorityLearner, &opts).map_err(|e| e.to_string())?.macro_f1;
    // One class predicted for everyone: its F1 is 2(1/k)/(1/k + 1), the rest 0.
    let analytic = 100.0 * (2.0 / (k as f64 + 1.0)) / k as f64;
    ensure((majority - analytic).abs() <= 1e-12, || format!("majority {majority} vs {analytic}"))?;

    let users = balanced_users(k, 100);
    let scores: Vec<f64> = (0..100)
        .map(|seed| run_cv(&users, &RandomLearner, &CvOptions { seed, ..opts }).map(|o| o.macro_f1))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let expected = 100.0 / k as f64;
    ensure((mean - expected).abs() <= RANDOM_BAND, || format!("random mean {mean:.2} vs {expected}"))?;
    Ok(format!("majority {majority:.6} = 200/30; random mean over 100 seeds {mean:.2} (20 +- {RANDOM_BAND})"))
}

// 6 -------------------------------------------------------------------------

fn blobs(rng: &mut rng::Rng) -> (Vec<Vec<f64>>, Vec<PartyLabel>) {
    let noise = Normal::new(0.0, 0.3).unwrap();
    let centers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..25 {
            x.push(vec![center[0] + noise.sample(rng), center[1] + noise.sample(rng)]);
            y.push(PartyLabel::new(format!("blob{c}")));
        }
    }
    (x, y)
}

fn xor(rng: &mut rng::Rng) -> (Vec<Vec<f64>>, Vec<PartyLabel>) {
    let noise = Normal::new(0.0, 0.15).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (a, b) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
        for _ in 0..20 {
            x.push(vec![a + noise.sample(rng), b + noise.sample(rng)]);
            y.push(PartyLabel::new(if a * b > 0.0 { "same" } else { "diff" }));
        }
    }
    (x, y)
}

fn training_accuracy(model: &SvmModel, x: &[Vec<f64>], y: &[PartyLabel]) -> f64 {
    let hits = x.iter().zip(y).filter(|(v, l)| model.predict("p", v).unwrap().label == **l).count();
    hits as f64 / x.len() as f64
}

fn svm_sanity() -> Outcome {
    let mut rng = rng::seeded(6, &[]);
    let cases = [
        ("blobs", blobs(&mut rng), KernelConfig::default()),
        ("xor", xor(&mut rng), KernelConfig { c: 10.0, gamma: Gamma::Value(1.0), ..KernelConfig::default() }),
    ];
    let mut notes = Vec::new();
    for (name, (x, y), cfg) in cases {
        let model = train_svm(&x, &y, &cfg).map_err(|e| e.to_string())?;
        let acc = training_accuracy(&model, &x, &y);
        ensure(acc == 1.0, || format!("{name}: training accuracy {acc}"))?;
        for m in &model.machines {
            for a in m.alphas() {
                ensure((0.0..=cfg.c).contains(&a), || format!("{name}: dual coefficient {a} outside [0, {}]", cfg.c))?;
            }
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.shuffle(&mut rng);
        let px: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
        let py: Vec<PartyLabel> = order.iter().map(|&i| y[i].clone()).collect();
        let permuted = train_svm(&px, &py, &cfg).map_err(|e| e.to_string())?;
        let grid: Vec<Vec<f64>> = (-8..=8).flat_map(|i| (-8..=8).map(move |j| vec![i as f64 * 0.5, j as f64 * 0.5])).collect();
        for p in x.iter().chain(&grid) {
            let (a, b) = (model.predict("p", p).unwrap(), permuted.predict("p", p).unwrap());
            ensure(a.label == b.label, || format!("{name}: permuted training changed a prediction at {p:?}"))?;
        }
        notes.push(format!("{name} acc 100% ({} SVs)", model.machines.iter().map(|m| m.coef.len()).sum::<usize>()));
    }
    Ok(format!("{}; duals in [0, C]; predictions invariant to training order", notes.join(", ")))
}

// 7 -------------------------------------------------------------------------

fn htim(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_htim"))
        .current_dir(dir)
        .args(args)
        .envs(env.iter().copied())
        .env_remove("RUST_LOG")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("htim {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let runs: [(&str, &[&str], &[(&str, &str)]); 2] = [
        ("re+tfidf", &["--tier", "member"], &[]),
        ("n2v+w2v", &["--tier", "sympathizer"], &[("HTIM_TEXT_DIM", "32"), ("HTIM_WALKS_PER_NODE", "4")]),
    ];
    let mut compared = 0;
    for rep in ["a", "b"] {
        htim(dir, &["synth", "--seed", "42", "--data", &format!("data_{rep}")], &[])?;
    }
    let data = (files(&dir.join("data_a")), files(&dir.join("data_b")));
    ensure(data.0 == data.1, || "synth output differs between runs".into())?;
    compared += data.0.len();
    for (method, extra, env) in runs {
        let mut outputs = Vec::new();
        for rep in ["a", "b"] {
            let out = format!("out_{method}_{rep}");
            let mut args = vec!["eval", "--method", method, "--threads", "1", "--seed", "42", "--data", "data_a", "--out", &out];
            args.extend_from_slice(extra);
            htim(dir, &args, env)?;
            outputs.push(files(&dir.join(&out)));
        }
        ensure(outputs[0].contains_key("report.json"), || format!("{method}: no report.json"))?;
        ensure(outputs[0].keys().any(|k| k.ends_with(".vec")), || format!("{method}: no embedding files"))?;
        for (name, bytes) in &outputs[0] {
            ensure(outputs[1].get(name) == Some(bytes), || format!("{method}: {name} differs between runs"))?;
        }
        compared += outputs[0].len();
    }
    Ok(format!("{compared} files byte-identical across repeated runs (synth, re+tfidf, n2v+w2v)"))
}

// 8 -------------------------------------------------------------------------

fn brute_macro_f1(counts: &[Vec<u64>]) -> f64 {
    let k = counts.len();
    let mut sum = 0.0;
    for c in 0..k {
        let tp = counts[c][c] as f64;
        let fp = (0..k).filter(|&r| r != c).map(|r| counts[r][c]).sum::<u64>() as f64;
        let fn_ = (0..k).filter(|&p| p != c).map(|p| counts[c][p]).sum::<u64>() as f64;
        let den = 2.0 * tp + fp + fn_;
        sum += if den == 0.0 { 0.0 } else { 2.0 * tp / den };
    }
    100.0 * sum / k as f64
}

fn macro_f1_oracle() -> Outcome {
    let mut rng = rng::seeded(8, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.gen_range(1..=8);
        let sparse = rng.gen_bool(0.3);
        let counts: Vec<Vec<u64>> = (0..k)
            .map(|_| (0..k).map(|_| if sparse && rng.gen_bool(0.6) { 0 } else { rng.gen_range(0..40) }).collect())
            .collect();
        let classes = (0..k).map(|i| PartyLabel::new(format!("c{i}"))).collect();
        let cm = ConfusionMatrix::from_counts(classes, counts.clone()).map_err(|e| e.to_string())?;
        worst = worst.max((macro_f1(&cm).map_err(|e| e.to_string())? - brute_macro_f1(&counts)).abs());
    }
    ensure(worst <= F1_TOL, || format!("max |diff| {worst:e} > {F1_TOL:e}"))?;
    for k in 1..=8 {
        let classes = (0..k).map(|i| PartyLabel::new(format!("c{i}"))).collect();
        let diag = (0..k).map(|r| (0..k).map(|c| if r == c { 3 + r as u64 } else { 0 }).collect()).collect();
        let score = macro_f1(&ConfusionMatrix::from_counts(classes, diag).unwrap()).unwrap();
        ensure(score == 100.0, || format!("{k}x{k} diagonal scored {score}"))?;
    }
    Ok(format!("100 matrices up to 8x8, max |diff| {worst:.1e}; diagonals score 100"))
}

fn main() {
    let criteria: [(u8, &str, fn() -> Outcome); 8] = [
        (1, "TF-IDF matches brute force", tfidf_oracle),
        (2, "trainer gradients match finite differences", gradient_checks),
        (3, "unbiased walk law and alias sampling", walk_law),
        (4, "synthetic engagement trend", synthetic_trend),
        (5, "baseline closed forms", baselines),
        (6, "SVM sanity", svm_sanity),
        (7, "single-thread determinism", determinism),
        (8, "macro-F1 matches brute force", macro_f1_oracle),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {why} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
}
