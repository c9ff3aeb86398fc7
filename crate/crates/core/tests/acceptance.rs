//! Acceptance checks, one line per criterion. Every value is compared with an
//! oracle written here, independently of the library code paths.

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use juriscat::anonymise::{anonymize, jaro, DEFAULT_JARO_THRESHOLD};
use juriscat::corpus::{Judgement, LabelAssignment, SubstantiveOrder};
use juriscat::entities::{extract_entities, parse_gin};
use juriscat::eval::{cross_validate, grid_search, GridValue, Scoring};
use juriscat::explain::{explain_document, render_explanation, Direction, EntityLines, Explanation, DEFAULT_TEMPLATE};
use juriscat::features::spearman;
use juriscat::forest::{fit_ensemble, Catalogs, Strategy, Variant};
use juriscat::labels::{bts_decode_indices, bts_encode, canonicalize, mts_decode, mts_encode, ClassCatalog, MtsCatalog};
use juriscat::lexica::Lexica;
use juriscat::metrics::{self, IndexSet, Scores};
use juriscat::pipeline::{fit_pipeline, prepare, PipelineConfig};
use juriscat::synth::{generate, SynthConfig};
use juriscat::tree::{entropy, fit_tree, gini, Hyperparams, NodeKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, format!("{what}: {a} vs oracle {b}"))
}

// ---------------------------------------------------------------- metrics

struct MetricOracle {
    exact: f64,
    accuracy: f64,
    precision: f64,
    recall: f64,
    hamming: f64,
    micro: [f64; 3],
    macro_: [f64; 3],
}

fn indicator(sets: &[IndexSet], m: usize) -> Vec<Vec<bool>> {
    sets.iter().map(|s| (0..m).map(|j| s.contains(&j)).collect()).collect()
}

fn div0(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn f1(p: f64, r: f64) -> f64 {
    div0(2.0 * p * r, p + r)
}

fn metric_oracle(l: &[IndexSet], z: &[IndexSet], m: usize) -> MetricOracle {
    let (y, h) = (indicator(l, m), indicator(z, m));
    let n = l.len() as f64;
    let (mut exact, mut acc, mut prec, mut rec, mut wrong) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..l.len() {
        let (mut both, mut either, mut yi, mut hi, mut same) = (0.0, 0.0, 0.0, 0.0, true);
        for j in 0..m {
            if y[i][j] && h[i][j] {
                both += 1.0;
            }
            if y[i][j] || h[i][j] {
                either += 1.0;
            }
            if y[i][j] {
                yi += 1.0;
            }
            if h[i][j] {
                hi += 1.0;
            }
            if y[i][j] != h[i][j] {
                same = false;
                wrong += 1.0;
            }
        }
        exact += if same { 1.0 } else { 0.0 };
        acc += both / either;
        prec += both / hi;
        rec += both / yi;
    }
    let (mut tp, mut fp, mut fnn) = (0.0, 0.0, 0.0);
    let (mut mp, mut mr, mut mf, mut active) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..m {
        let (mut t, mut f, mut g) = (0.0, 0.0, 0.0);
        for i in 0..l.len() {
            match (y[i][j], h[i][j]) {
                (true, true) => t += 1.0,
                (false, true) => f += 1.0,
                (true, false) => g += 1.0,
                _ => {}
            }
        }
        tp += t;
        fp += f;
        fnn += g;
        if t + f + g > 0.0 {
            let (p, r) = (div0(t, t + f), div0(t, t + g));
            mp += p;
            mr += r;
            mf += f1(p, r);
            active += 1.0;
        }
    }
    let (up, ur) = (div0(tp, tp + fp), div0(tp, tp + fnn));
    MetricOracle {
        exact: exact / n,
        accuracy: acc / n,
        precision: prec / n,
        recall: rec / n,
        hamming: wrong / (n * m as f64),
        micro: [up, ur, f1(up, ur)],
        macro_: [mp / active, mr / active, mf / active],
    }
}

fn random_set(rng: &mut ChaCha8Rng, m: usize) -> IndexSet {
    let size = rng.gen_range(1..=3.min(m));
    let mut all: Vec<usize> = (0..m).collect();
    all.shuffle(rng);
    all.into_iter().take(size).collect()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let n = rng.gen_range(1..=20);
        let m = rng.gen_range(1..=10);
        let l: Vec<IndexSet> = (0..n).map(|_| random_set(&mut rng, m)).collect();
        let z: Vec<IndexSet> = (0..n).map(|_| random_set(&mut rng, m)).collect();
        let s = Scores::compute(&l, &z, m).map_err(|e| format!("case {case}: {e}"))?;
        let o = metric_oracle(&l, &z, m);
        let tol = 1e-12;
        close(s.exact_match, o.exact, tol, "exact match")?;
        close(s.accuracy, o.accuracy, tol, "accuracy")?;
        close(s.precision, o.precision, tol, "precision")?;
        close(s.recall, o.recall, tol, "recall")?;
        close(s.hamming_loss, o.hamming, tol, "hamming loss")?;
        close(metrics::hamming_loss(&l, &z, m).unwrap(), o.hamming, tol, "hamming loss")?;
        let p = s.prf;
        close(p.micro_precision, o.micro[0], tol, "micro precision")?;
        close(p.micro_recall, o.micro[1], tol, "micro recall")?;
        close(p.micro_f, o.micro[2], tol, "micro F")?;
        close(p.macro_precision, o.macro_[0], tol, "macro precision")?;
        close(p.macro_recall, o.macro_[1], tol, "macro recall")?;
        close(p.macro_f, o.macro_[2], tol, "macro F")?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), format!("took {t:?}"))?;
    Ok(format!("1000 instances agree within 1e-12 in {:.2?}", t))
}

// ---------------------------------------------------------------- transforms

fn label_pool() -> Vec<LabelAssignment> {
    let orders = [
        SubstantiveOrder::Social,
        SubstantiveOrder::Civil,
        SubstantiveOrder::Penal,
        SubstantiveOrder::Mercantile,
    ];
    let mut pool = Vec::new();
    for (k, order) in orders.iter().enumerate() {
        for v in 0..3 {
            let c = [format!("materia {k}"), format!("rama {v}"), format!("tema {}", k * 3 + v)];
            pool.push(LabelAssignment::new(*order, [&c[0], &c[1], &c[2]]).unwrap());
        }
    }
    pool
}

fn criterion_2() -> Check {
    let pool = label_pool();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..1000 {
        let n = rng.gen_range(1..=30);
        let used = rng.gen_range(1..=pool.len());
        let sets: Vec<Vec<LabelAssignment>> = (0..n)
            .map(|_| {
                let size = rng.gen_range(1..=3.min(used));
                pool[..used].choose_multiple(&mut rng, size).cloned().collect()
            })
            .collect();
        let catalog = ClassCatalog::from_label_sets(sets.iter().map(Vec::as_slice));
        let distinct_labels: HashSet<String> = sets.iter().flatten().map(|a| a.class_key()).collect();
        ensure(catalog.m() == distinct_labels.len(), format!("case {case}: m"))?;

        let beta = bts_encode(&sets, &catalog).map_err(|e| e.to_string())?;
        for (set, row) in sets.iter().zip(&beta.rows) {
            let scores: Vec<f64> = row.iter().map(|&b| b as f64).collect();
            let back: BTreeSet<LabelAssignment> = catalog.labels(&bts_decode_indices(&scores, 0.5)).into_iter().collect();
            let orig: BTreeSet<LabelAssignment> = set.iter().cloned().collect();
            ensure(back == orig, format!("case {case}: BTS round trip"))?;
        }

        let (mts, alphas) = mts_encode(&sets);
        let distinct_combos: HashSet<Vec<String>> = sets
            .iter()
            .map(|s| {
                let mut keys: Vec<String> = s.iter().map(|a| a.class_key()).collect();
                keys.sort();
                keys
            })
            .collect();
        ensure(mts.p() == distinct_combos.len(), format!("case {case}: p"))?;
        for (set, &alpha) in sets.iter().zip(&alphas) {
            ensure(alpha >= 1 && alpha <= mts.p(), format!("case {case}: alpha range"))?;
            let back = mts_decode(alpha, &mts).map_err(|e| e.to_string())?;
            ensure(back == canonicalize(set), format!("case {case}: MTS round trip"))?;
            let mut shuffled = set.clone();
            shuffled.shuffle(&mut rng);
            ensure(canonicalize(&shuffled) == canonicalize(set), format!("case {case}: permutation"))?;
        }
        let again = MtsCatalog::from_label_sets(sets.iter().rev().map(Vec::as_slice));
        ensure(again.combos() == mts.combos(), format!("case {case}: catalog depends on order"))?;
    }
    Ok("1000 corpora: BTS/MTS round trips, canonical form, m and p counts".into())
}

// ---------------------------------------------------------------- spearman

fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    while done < 500 {
        let n = rng.gen_range(3..=40);
        // small integer range so ties are common
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64).collect();
        if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
            ensure(spearman(&x, &y).is_err(), "constant input must be undefined")?;
            continue;
        }
        let r = spearman(&x, &y).map_err(|e| e.to_string())?;
        close(r, oracle_spearman(&x, &y), 1e-12, "spearman")?;
        close(r, spearman(&y, &x).unwrap(), 0.0, "symmetry")?;
        done += 1;
    }
    for n in [2usize, 5, 50] {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 1.5).collect();
        let up: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let down: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
        ensure(spearman(&x, &up).unwrap() == 1.0, "monotone increasing must give exactly 1")?;
        ensure(spearman(&x, &down).unwrap() == -1.0, "monotone decreasing must give exactly -1")?;
    }
    Ok("500 pairs within 1e-12, exact ±1 on monotone input, symmetric".into())
}

// ---------------------------------------------------------------- trees

fn criterion_4() -> Check {
    let tol = 0.0;
    close(gini(&[4.0]).unwrap(), 0.0, tol, "gini pure")?;
    close(gini(&[2.0, 2.0]).unwrap(), 0.5, tol, "gini 2 classes")?;
    close(gini(&[2.0, 1.0, 1.0]).unwrap(), 0.625, tol, "gini 3 classes")?;
    close(entropy(&[4.0]).unwrap(), 0.0, tol, "entropy pure")?;
    close(entropy(&[2.0, 2.0]).unwrap(), 1.0, tol, "entropy 2 classes")?;
    close(entropy(&[2.0, 1.0, 1.0]).unwrap(), 1.5, tol, "entropy 3 classes")?;

    // three bands separated by the lines x + y = 1 and x + y = 2
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut xs, mut ys, mut labels) = (Vec::new(), Vec::new(), Vec::new());
    while labels.len() < 300 {
        let (x, y): (f64, f64) = (rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.5));
        let s = x + y;
        if (s - 1.0).abs() < 0.02 || (s - 2.0).abs() < 0.02 {
            continue;
        }
        xs.push(x);
        ys.push(y);
        labels.push(if s < 1.0 { 0 } else if s < 2.0 { 1 } else { 2 });
    }
    let columns = vec![xs.clone(), ys.clone()];
    let params = Hyperparams {
        max_depth: None,
        ..Hyperparams::default()
    };
    let tree = fit_tree(&columns, &labels, 3, &params).map_err(|e| e.to_string())?;
    for i in 0..labels.len() {
        ensure(tree.predict(&[xs[i], ys[i]]) == labels[i], format!("training point {i} misclassified"))?;
    }
    let again = fit_tree(&columns, &labels, 3, &params).unwrap();
    ensure(
        serde_json::to_string(&tree).unwrap() == serde_json::to_string(&again).unwrap(),
        "tree not deterministic",
    )?;

    let names = vec!["x".to_string(), "y".to_string()];
    let one = |k: usize| LabelAssignment::new(SubstantiveOrder::Civil, [&format!("c{k}"), "a", "b"]).unwrap();
    let sets: Vec<Vec<LabelAssignment>> = labels.iter().map(|&k| vec![one(k)]).collect();
    let catalogs = Catalogs::from_label_sets(&sets);
    for (variant, strategy) in [(Variant::Rf, Strategy::Mts), (Variant::Eetc, Strategy::Bts)] {
        let p = Hyperparams {
            n_estimators: 15,
            seed: 42,
            ..Hyperparams::default()
        };
        let a = fit_ensemble(&columns, &names, &sets, &catalogs, &p, variant, strategy).map_err(|e| e.to_string())?;
        let b = fit_ensemble(&columns, &names, &sets, &catalogs, &p, variant, strategy).map_err(|e| e.to_string())?;
        ensure(a.to_json().unwrap() == b.to_json().unwrap(), format!("{variant}-{strategy} not deterministic"))?;
    }
    Ok("impurity spot values exact, separable set fitted exactly, seeded models byte-identical".into())
}

// ---------------------------------------------------------------- explanations

fn criterion_5() -> Check {
    let start = Instant::now();
    let lexica = Lexica::bundled();
    let corpus = generate(&SynthConfig {
        n_docs: 400,
        seed: 5,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let mut config = PipelineConfig {
        strategy: Strategy::Mts,
        variant: Variant::Rf,
        seed: 5,
        ..PipelineConfig::default()
    };
    let mut params = juriscat::pipeline::tuned_hyperparams(Variant::Rf, Strategy::Mts);
    params.n_estimators = 50;
    config.hyperparams = Some(params);
    let docs = prepare(&corpus, &lexica, &config);
    let catalogs = Catalogs::from_label_sets(&juriscat::eval::label_sets(&docs));
    let fitted = fit_pipeline(&docs, &catalogs, &config).map_err(|e| e.to_string())?;
    let trees: Vec<_> = fitted.model.trees().collect();
    ensure(trees.len() == 50, format!("{} trees", trees.len()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let picked: Vec<usize> = rand::seq::index::sample(&mut rng, docs.len(), 100).into_vec();
    for &d in &picked {
        let doc = &docs[d];
        let expl = explain_document(&fitted, doc, 100, 7).map_err(|e| e.to_string())?;
        let row = fitted.featurize(std::slice::from_ref(doc)).unwrap().row(0);
        ensure(expl.paths.len() == trees.len(), "one path per tree")?;
        let mut mean = vec![0.0; fitted.model.forests[0].n_classes];
        for (tree, path) in trees.iter().zip(&expl.paths) {
            let mut node = 0;
            for step in path {
                let NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } = tree.nodes[node].kind
                else {
                    return Err(format!("doc {}: path continues past a leaf", doc.id));
                };
                ensure(step.feature_index == feature && step.threshold == threshold, "step disagrees with tree")?;
                ensure(step.value == row[feature], "step records a wrong value")?;
                let less = step.value <= step.threshold;
                ensure((step.direction == Direction::Less) == less, "wrong direction")?;
                node = if less { left } else { right };
            }
            ensure(tree.nodes[node].is_leaf(), "path ends on a split")?;
            ensure(node == tree.leaf_index(&row), "path leaf differs from prediction leaf")?;
            let counts = &tree.nodes[node].class_counts;
            let total: f64 = counts.iter().sum();
            for (m, c) in mean.iter_mut().zip(counts) {
                *m += c / total / trees.len() as f64;
            }
        }
        let mut best = 0;
        for (k, &p) in mean.iter().enumerate() {
            if p > mean[best] {
                best = k;
            }
        }
        let expected = catalogs.combos.combos()[best].clone();
        ensure(expl.assignments == expected, format!("doc {}: decision differs from ensemble argmax", doc.id))?;
        let conf = (100.0 * mean[best]).round() as u32;
        ensure(expl.confidence == conf, format!("doc {}: confidence {} vs {conf}", doc.id, expl.confidence))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), format!("took {t:?}"))?;
    Ok(format!("100 documents x 50 trees replayed, decisions and confidences match, {t:.2?}"))
}

// ---------------------------------------------------------------- benchmark

fn criterion_6() -> Check {
    let start = Instant::now();
    let corpus = generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let sets = corpus.label_sets();
    let card = sets.iter().map(Vec::len).sum::<usize>() as f64 / sets.len() as f64;
    let combos: HashSet<Vec<String>> = sets
        .iter()
        .map(|s| {
            let mut k: Vec<String> = s.iter().map(|a| a.class_key()).collect();
            k.sort();
            k
        })
        .collect();
    ensure(corpus.n() == 2000, "corpus size")?;
    ensure(combos.len() == 8, format!("{} MTS classes", combos.len()))?;
    ensure((card - 1.4).abs() <= 0.1, format!("label cardinality {card}"))?;

    let config = PipelineConfig {
        strategy: Strategy::Mts,
        variant: Variant::Rf,
        ..PipelineConfig::default()
    };
    let h = config.effective_hyperparams();
    ensure(
        h.n_estimators == 200 && h.max_depth == Some(100) && h.min_samples_leaf == 10 && h.min_samples_split == 2,
        "RF-MTS settings",
    )?;
    let docs = prepare(&corpus, &Lexica::bundled(), &config);
    let report = cross_validate(&docs, &config, 10, 0).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    let (mp, hl) = (report.mean.prf.micro_precision, report.mean.hamming_loss);
    let summary = format!(
        "cardinality {card:.3}, micro precision {mp:.4}, hamming loss {hl:.4}, exact match {:.4}, {:.1?}",
        report.mean.exact_match, t
    );
    ensure(mp >= 0.85, format!("micro precision below 0.85: {summary}"))?;
    ensure(hl <= 0.05, format!("hamming loss above 0.05: {summary}"))?;
    ensure(t < Duration::from_secs(300), format!("too slow: {summary}"))?;
    Ok(summary)
}

// ---------------------------------------------------------------- grid search

fn criterion_7() -> Check {
    let corpus = generate(&SynthConfig {
        n_docs: 200,
        seed: 7,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let base = PipelineConfig {
        variant: Variant::Rf,
        strategy: Strategy::Mts,
        seed: 7,
        ..PipelineConfig::default()
    };
    let docs = prepare(&corpus, &Lexica::bundled(), &base);
    let depth = [Some(2), None];
    let trees = [3, 25];
    let grid = vec![
        depth.iter().map(|&d| GridValue::MaxDepth(d)).collect(),
        trees.iter().map(|&n| GridValue::NEstimators(n)).collect(),
    ];
    let result = grid_search(&docs, &base, &grid, 3, Scoring::MicroF, 11).map_err(|e| e.to_string())?;

    let mut manual = Vec::new();
    for &d in &depth {
        for &n in &trees {
            let mut cfg = base.clone();
            let mut h = base.effective_hyperparams();
            h.max_depth = d;
            h.n_estimators = n;
            cfg.hyperparams = Some(h);
            let r = cross_validate(&docs, &cfg, 3, 11).map_err(|e| e.to_string())?;
            manual.push(((d, n), r.mean.prf.micro_f));
        }
    }
    let mut order: Vec<usize> = (0..manual.len()).collect();
    order.sort_by(|&a, &b| manual[b].1.total_cmp(&manual[a].1).then(a.cmp(&b)));
    let (d, n) = manual[order[0]].0;
    ensure(
        result.best_params() == [GridValue::MaxDepth(d), GridValue::NEstimators(n)],
        format!("best {:?} vs oracle {:?}", result.best_params(), (d, n)),
    )?;
    for (entry, (_, score)) in result.entries.iter().zip(&manual) {
        close(entry.score, *score, 0.0, "grid score")?;
    }
    Ok(format!("best max_depth={d:?} n_estimators={n} matches the manual loop"))
}

// ---------------------------------------------------------------- anonymiser

fn criterion_8() -> Check {
    let lex = Lexica::bundled().anon;
    let mut first: Vec<String> = lex.first_names.iter().cloned().collect();
    let mut last: Vec<String> = lex.surnames.iter().cloned().collect();
    first.sort();
    last.sort();
    let cap = |s: &str| {
        let mut c = s.chars();
        c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..200 {
        let mut person = || {
            format!(
                "{} {} {}",
                cap(first.choose(&mut rng).unwrap()),
                cap(last.choose(&mut rng).unwrap()),
                cap(last.choose(&mut rng).unwrap())
            )
        };
        let (judge, lawyer, attorney, party) = (person(), person(), person(), person());
        let company = format!("{} Transportes", cap(last.choose(&mut rng).unwrap()));
        let text = format!(
            "SENTENCIA núm. {i}. Ponente el Magistrado D. {judge}. Comparece D. {party}, asistido por el Letrado Sr. {lawyer} \
             y representado por el Procurador D. {attorney}, frente a {company}, S.L. sobre reclamación de cantidad."
        );
        let (once, _) = anonymize(&text, &lex, DEFAULT_JARO_THRESHOLD);
        let (twice, _) = anonymize(&once, &lex, DEFAULT_JARO_THRESHOLD);
        ensure(once == twice, format!("not idempotent on text {i}: {once:?} -> {twice:?}"))?;
        let planted: HashSet<String> = [&judge, &lawyer, &attorney, &party, &company]
            .iter()
            .flat_map(|s| s.split_whitespace())
            .filter(|w| lex.first_names.contains(&w.to_lowercase()) || lex.surnames.contains(&w.to_lowercase()))
            .map(str::to_lowercase)
            .collect();
        for word in once.split(|c: char| !c.is_alphanumeric()) {
            ensure(
                !planted.contains(&word.to_lowercase()),
                format!("name {word:?} survives in text {i}: {once}"),
            )?;
        }
    }
    let j = jaro("martha", "marhta");
    close(j, 0.9444, 1e-4, "jaro(martha, marhta)")?;
    Ok(format!("200 texts idempotent with no planted names left, jaro = {j:.4}"))
}

// ---------------------------------------------------------------- entities

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let s: String = (0..19).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect();
        let fields = parse_gin(&s).map_err(|e| e.to_string())?;
        ensure(fields.to_string() == s, format!("GIN {s} does not round-trip"))?;
    }
    ensure(parse_gin("123").is_err(), "short GIN accepted")?;

    let social = LabelAssignment::new(
        SubstantiveOrder::Social,
        [
            "derecho del trabajo",
            "derecho de la contratacion laboral",
            "derecho relativo al contrato de trabajo",
        ],
    )
    .unwrap();
    let doc = Judgement {
        id: "10".into(),
        raw_text: "Tribunal Superior de Justicia de Madrid\nSala de lo Social\nRecurso de suplicación núm. 512/2021\n\
                   SENTENCIA núm. 77/2021\n\nANTECEDENTES DE HECHO\n\nPRIMERO.- El trabajador interpuso demanda.\n\n\
                   FUNDAMENTOS DE DERECHO\n\nÚNICO.- Procede confirmar la resolución recurrida.\n\n\
                   FALLAMOS\n\nQue debemos desestimar y desestimamos el recurso de suplicación.\n"
            .into(),
        gin: Some("2807934420210001234".into()),
        annotations: vec![social],
    };
    let record = extract_entities(&doc, &Lexica::bundled().entities);
    let lines = EntityLines::from(&record);
    let want = reference_entities();
    ensure(lines == want, format!("entities {lines:?}"))?;
    Ok("1000 GINs round-trip; reference entity septuple reproduced".into())
}

fn reference_entities() -> EntityLines {
    EntityLines {
        case_type: "recurso de suplicación".into(),
        court: "Tribunal Superior de Justicia".into(),
        decision: "desestimatorio".into(),
        decision_type: "sustantivo".into(),
        instance_type: "segunda".into(),
        jurisdiction: "social".into(),
        resolution_type: "sentencia".into(),
    }
}

// ---------------------------------------------------------------- rendering

const EXPECTED_TEXT: &str = "For sample 10 the features' values and model decision are:

- Case type: recurso de suplicación
- Court: Tribunal Superior de Justicia
- Decision: desestimatorio
- Decision type: sustantivo
- Instance type: segunda
- Jurisdiction: social
- Resolution type: sentencia

- Substantive order: social
- Law categories: derecho del trabajo, derecho de la contratacion laboral y derecho relativo al contrato de trabajo

This decision has a confidence of 88

The most representative terms (ngrams) and their relevance are:
- Estatuto Trabajadores -- 0.076
- recurso suplicación -- 0.070
- Jurisdicción Social -- 0.067
- suplicación -- 0.064
- trabajadores -- 0.051
- Estatuto -- 0.033
";

fn criterion_10() -> Check {
    let social = LabelAssignment::new(
        SubstantiveOrder::Social,
        [
            "derecho del trabajo",
            "derecho de la contratacion laboral",
            "derecho relativo al contrato de trabajo",
        ],
    )
    .unwrap();
    let terms = [
        ("Estatuto Trabajadores", 0.076),
        ("recurso suplicación", 0.070),
        ("Jurisdicción Social", 0.067),
        ("suplicación", 0.064),
        ("trabajadores", 0.051),
        ("Estatuto", 0.033),
    ];
    let expl = Explanation {
        sample: "10".into(),
        entities: reference_entities(),
        assignments: vec![social],
        confidence: 88,
        top_terms: terms.iter().map(|(t, r)| (t.to_string(), *r)).collect(),
        paths: Vec::new(),
    };
    let out = render_explanation(&expl, DEFAULT_TEMPLATE).map_err(|e| e.to_string())?;
    if out != EXPECTED_TEXT {
        let line = out
            .lines()
            .zip(EXPECTED_TEXT.lines())
            .position(|(a, b)| a != b)
            .unwrap_or(out.lines().count().min(EXPECTED_TEXT.lines().count()));
        return Err(format!("first difference at line {}", line + 1));
    }
    Ok(format!("{} bytes identical", out.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("metric oracle suite", criterion_1),
        ("label transform round trips", criterion_2),
        ("spearman correlation", criterion_3),
        ("tree correctness", criterion_4),
        ("explanation faithfulness", criterion_5),
        ("synthetic end-to-end benchmark", criterion_6),
        ("grid search", criterion_7),
        ("anonymiser", criterion_8),
        ("entity detection", criterion_9),
        ("explanation rendering", criterion_10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
