//! Per-decision explanations: decision paths, perturbation relevance of
//! n-grams, the natural-language report and DOT export of trees.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelAssignment;
use crate::entities::{EntityRecord, Jurisdiction, UNKNOWN};
use crate::error::{Error, Result};
use crate::features::ColumnKind;
use crate::forest::{EnsembleModel, Strategy};
use crate::pipeline::{FittedPipeline, PreparedDoc};
use crate::tree::{argmax, DecisionTree, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Less,
    More,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub feature: String,
    pub feature_index: usize,
    pub value: f64,
    pub direction: Direction,
    pub threshold: f64,
}

/// Root-to-leaf walk of `row` through `tree`: `value <= threshold` records
/// "less" and goes left, otherwise "more" and right.
pub fn extract_path(tree: &DecisionTree, row: &[f64], names: &[String]) -> Result<Vec<PathStep>> {
    let mut steps = Vec::new();
    let mut i = 0;
    loop {
        let node = tree
            .nodes
            .get(i)
            .ok_or_else(|| Error::MalformedTree(format!("missing node {i}")))?;
        let NodeKind::Split {
            feature,
            threshold,
            left,
            right,
        } = node.kind
        else {
            return Ok(steps);
        };
        if steps.len() >= tree.nodes.len() {
            return Err(Error::MalformedTree("decision path revisits a node".into()));
        }
        let value = *row.get(feature).ok_or_else(|| {
            Error::MissingColumn(names.get(feature).cloned().unwrap_or_else(|| feature.to_string()))
        })?;
        let direction = if value <= threshold { Direction::Less } else { Direction::More };
        steps.push(PathStep {
            feature: names.get(feature).cloned().unwrap_or_else(|| feature.to_string()),
            feature_index: feature,
            value,
            direction,
            threshold,
        });
        i = if direction == Direction::Less { left } else { right };
    }
}

/// Terms tested on the paths, counted once per path (tree), most frequent
/// first; ties alphabetical. Only features accepted by `is_term` count.
pub fn aggregate_terms(paths: &[Vec<PathStep>], is_term: impl Fn(&str) -> bool) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for path in paths {
        let seen: BTreeSet<&str> = path
            .iter()
            .map(|s| s.feature.as_str())
            .filter(|f| is_term(f))
            .collect();
        for f in seen {
            *counts.entry(f).or_default() += 1;
        }
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().map(|(t, c)| (t.to_string(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1));
    out
}

pub const DEFAULT_PERTURBATIONS: usize = 500;
pub const MAX_TERMS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relevance {
    /// Absolute surrogate coefficient, the reported value.
    pub relevance: f64,
    /// Signed coefficient, kept for debugging.
    pub signed: f64,
}

/// Local linear surrogate around `row`. Each of `n_samples` perturbed copies
/// zeroes every active term column independently with probability 1/2 (the
/// first copy is the row itself); samples are weighted by
/// `exp(-d² / σ²)`, `d` the number of zeroed terms and `σ = 0.75·√active`,
/// and the probability of `class` is regressed on the presence indicators.
pub fn perturbation_relevance(
    model: &EnsembleModel,
    row: &[f64],
    term_columns: &[usize],
    class: usize,
    n_samples: usize,
    seed: u64,
) -> Result<BTreeMap<String, Relevance>> {
    if n_samples < 10 {
        return Err(Error::Invalid("perturbation needs at least 10 samples".into()));
    }
    let active: Vec<usize> = term_columns.iter().copied().filter(|&j| row[j] != 0.0).collect();
    if active.is_empty() {
        return Ok(BTreeMap::new());
    }
    let d = active.len();
    let sigma2 = 0.5625 * d as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::<f64>::zeros(n_samples, d + 1);
    let mut y = DVector::<f64>::zeros(n_samples);
    let mut perturbed = row.to_vec();
    for s in 0..n_samples {
        perturbed.copy_from_slice(row);
        let mut zeroed = 0;
        let mut mask = vec![1.0; d];
        if s > 0 {
            for (k, &j) in active.iter().enumerate() {
                if rng.gen_bool(0.5) {
                    perturbed[j] = 0.0;
                    mask[k] = 0.0;
                    zeroed += 1;
                }
            }
        }
        let p = model.predict_proba(&perturbed)?;
        let target = *p.get(class).ok_or(Error::ClassIndex {
            index: class,
            max: p.len().saturating_sub(1),
        })?;
        let w = (-(zeroed as f64).powi(2) / sigma2).exp().sqrt();
        x[(s, 0)] = w;
        for k in 0..d {
            x[(s, k + 1)] = w * mask[k];
        }
        y[s] = w * target;
    }
    let coef = x
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::Undefined(format!("surrogate fit failed: {e}")))?;
    Ok(active
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let c = coef[k + 1];
            (
                model.feature_names[j].clone(),
                Relevance {
                    relevance: c.abs(),
                    signed: c,
                },
            )
        })
        .collect())
}

/// The first seven frequency-ordered terms that have a relevance, sorted by
/// relevance (descending; ties keep frequency order).
pub fn select_top_terms(
    freq_ordered: &[(String, usize)],
    relevances: &BTreeMap<String, Relevance>,
) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = freq_ordered
        .iter()
        .filter_map(|(t, _)| relevances.get(t).map(|r| (t.clone(), r.relevance)))
        .take(MAX_TERMS)
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1));
    out
}

/// Rounded percentage of the ensemble's probability for its decision.
pub fn confidence(model: &EnsembleModel, row: &[f64]) -> Result<u32> {
    Ok((100.0 * model.decision_probability(row)?).round() as u32)
}

/// Display values of the seven entity fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLines {
    pub case_type: String,
    pub court: String,
    pub decision: String,
    pub decision_type: String,
    pub instance_type: String,
    pub jurisdiction: String,
    pub resolution_type: String,
}

impl From<&EntityRecord> for EntityLines {
    fn from(r: &EntityRecord) -> Self {
        let or_unknown = |v: Option<&str>| v.unwrap_or(UNKNOWN).to_string();
        Self {
            case_type: or_unknown(r.case_type.as_deref()),
            court: or_unknown(r.court.as_deref()),
            decision: or_unknown(r.decision.as_deref()),
            decision_type: or_unknown(r.decision_type.map(|d| d.display_es())),
            instance_type: or_unknown(r.instance_type.map(|i| i.display_es())),
            jurisdiction: or_unknown(r.jurisdiction.map(|j| match j {
                Jurisdiction::ContentiousAdministrative => "contencioso-administrativo",
                other => other.as_str(),
            })),
            resolution_type: or_unknown(r.resolution_type.map(|t| t.as_str())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub sample: String,
    pub entities: EntityLines,
    pub assignments: Vec<LabelAssignment>,
    pub confidence: u32,
    pub top_terms: Vec<(String, f64)>,
    /// One decision path per consulted tree.
    pub paths: Vec<Vec<PathStep>>,
}

pub const DEFAULT_TEMPLATE: &str = "For sample {id} the features' values and model decision are:

- Case type: {case_type}
- Court: {court}
- Decision: {decision}
- Decision type: {decision_type}
- Instance type: {instance_type}
- Jurisdiction: {jurisdiction}
- Resolution type: {resolution_type}

{assignments}

This decision has a confidence of {confidence}

The most representative terms (ngrams) and their relevance are:
{terms}";

/// "a", "a y b", "a, b y c".
fn spanish_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} y {last}", init.join(", ")),
    }
}

fn render_assignments(assignments: &[LabelAssignment]) -> String {
    assignments
        .iter()
        .map(|a| {
            format!(
                "- Substantive order: {}\n- Law categories: {}",
                a.order.as_str(),
                spanish_list(&a.categories)
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Fills `template`. Placeholders are `{name}`; an unknown name, or an
/// explanation with no assignment, is a template error.
pub fn render_explanation(explanation: &Explanation, template: &str) -> Result<String> {
    if explanation.assignments.is_empty() {
        return Err(Error::Template("assignments".into()));
    }
    let e = &explanation.entities;
    let mut terms = String::new();
    for (t, r) in &explanation.top_terms {
        let _ = writeln!(terms, "- {t} -- {r:.3}");
    }
    let fields: HashMap<&str, String> = HashMap::from([
        ("id", explanation.sample.clone()),
        ("case_type", e.case_type.clone()),
        ("court", e.court.clone()),
        ("decision", e.decision.clone()),
        ("decision_type", e.decision_type.clone()),
        ("instance_type", e.instance_type.clone()),
        ("jurisdiction", e.jurisdiction.clone()),
        ("resolution_type", e.resolution_type.clone()),
        ("assignments", render_assignments(&explanation.assignments)),
        ("confidence", explanation.confidence.to_string()),
        ("terms", terms),
    ]);
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| Error::Template(after.chars().take(20).collect()))?;
        let name = &after[..close];
        let value = fields.get(name).ok_or_else(|| Error::Template(name.to_string()))?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Explains the pipeline's decision for one prepared document.
pub fn explain_document(
    fitted: &FittedPipeline,
    doc: &PreparedDoc,
    n_samples: usize,
    seed: u64,
) -> Result<Explanation> {
    let matrix = fitted.featurize(std::slice::from_ref(doc))?;
    let row = matrix.row(0);
    let model = &fitted.model;
    let proba = model.predict_proba(&row)?;
    let (classes, forests): (Vec<usize>, Vec<usize>) = match model.strategy {
        Strategy::Mts => (vec![argmax(&proba)], vec![0]),
        Strategy::Bts => {
            let chosen: Vec<usize> = model.predict_indices(&row)?.into_iter().collect();
            (chosen.clone(), chosen)
        }
    };
    let mut paths = Vec::new();
    for &f in &forests {
        for tree in &model.forests[f].trees {
            paths.push(extract_path(tree, &row, &model.feature_names)?);
        }
    }
    let terms: HashSet<&str> = matrix
        .names
        .iter()
        .zip(&matrix.kinds)
        .filter(|(_, k)| **k == ColumnKind::Textual)
        .map(|(n, _)| n.as_str())
        .collect();
    let term_cols: Vec<usize> = (0..matrix.n_cols()).filter(|&j| matrix.kinds[j] == ColumnKind::Textual).collect();
    let freq = aggregate_terms(&paths, |f| terms.contains(f));
    // one surrogate per predicted class; a term keeps its strongest relevance
    let mut relevances: BTreeMap<String, Relevance> = BTreeMap::new();
    for (i, &class) in classes.iter().enumerate() {
        let r = perturbation_relevance(model, &row, &term_cols, class, n_samples, seed.wrapping_add(i as u64))?;
        for (t, v) in r {
            let e = relevances.entry(t).or_insert(v);
            if v.relevance > e.relevance {
                *e = v;
            }
        }
    }
    Ok(Explanation {
        sample: doc.id.clone(),
        entities: EntityLines::from(&doc.entities),
        assignments: model.predict(&row)?,
        confidence: confidence(model, &row)?,
        top_terms: select_top_terms(&freq, &relevances),
        paths,
    })
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

/// DOT rendering of `tree` down to `max_depth`. Splits read
/// `feature <= threshold`; leaves (and nodes cut at the depth limit) show
/// the majority class through `class_names`.
pub fn export_tree_graph(
    tree: &DecisionTree,
    max_depth: usize,
    names: &[String],
    class_names: &[String],
) -> String {
    let mut out = String::from("digraph Tree {\nnode [shape=box, style=\"rounded\", fontname=\"helvetica\"];\nedge [fontname=\"helvetica\"];\n");
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let node = &tree.nodes[i];
        match node.kind {
            NodeKind::Split {
                feature,
                threshold,
                left,
                right,
            } if node.depth < max_depth => {
                let fname = names.get(feature).cloned().unwrap_or_else(|| format!("x[{feature}]"));
                let _ = writeln!(
                    out,
                    "{i} [label=\"{} <= {threshold}\\nsamples = {}\"];",
                    dot_escape(&fname),
                    node.n_samples
                );
                let _ = writeln!(out, "{i} -> {left} [label=\"less\"];");
                let _ = writeln!(out, "{i} -> {right} [label=\"more\"];");
                stack.push(right);
                stack.push(left);
            }
            _ => {
                let k = node.majority_class();
                let label = class_names.get(k).cloned().unwrap_or_else(|| format!("class {k}"));
                let _ = writeln!(
                    out,
                    "{i} [label=\"{}\\nsamples = {}\", shape=ellipse];",
                    dot_escape(&label),
                    node.n_samples
                );
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Display names of the classes of the trees in forest `forest`: decoded
/// label combinations (MTS), or "not <class>" / "<class>" (BTS).
pub fn tree_class_names(model: &EnsembleModel, forest: usize) -> Vec<String> {
    let show = |set: &[LabelAssignment]| set.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n");
    match model.strategy {
        Strategy::Mts => model.catalogs.combos.combos().iter().map(|c| show(c)).collect(),
        Strategy::Bts => {
            let class = model
                .catalogs
                .classes
                .get(forest)
                .map(ToString::to_string)
                .unwrap_or_default();
            vec![format!("not {class}"), class]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SubstantiveOrder;
    use crate::forest::{fit_ensemble, Catalogs, Variant};
    use crate::tree::{Hyperparams, TreeNode};

    fn node(kind: NodeKind, depth: usize, counts: Vec<f64>) -> TreeNode {
        TreeNode {
            kind,
            n_samples: counts.iter().sum::<f64>() as usize,
            class_counts: counts,
            impurity: 0.0,
            depth,
        }
    }

    fn split(feature: usize, threshold: f64, left: usize, right: usize) -> NodeKind {
        NodeKind::Split {
            feature,
            threshold,
            left,
            right,
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn paths() {
        let leaf = DecisionTree {
            nodes: vec![node(NodeKind::Leaf, 0, vec![1.0, 0.0])],
            n_classes: 2,
            n_features: 1,
        };
        assert!(extract_path(&leaf, &[0.0], &names(1)).unwrap().is_empty());

        let one = DecisionTree {
            nodes: vec![
                node(split(0, 0.5, 1, 2), 0, vec![1.0, 1.0]),
                node(NodeKind::Leaf, 1, vec![1.0, 0.0]),
                node(NodeKind::Leaf, 1, vec![0.0, 1.0]),
            ],
            n_classes: 2,
            n_features: 1,
        };
        let p = extract_path(&one, &[0.3], &names(1)).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!((p[0].feature.as_str(), p[0].value, p[0].direction), ("f0", 0.3, Direction::Less));

        // depth 3: f0 <= 1 -> f1 <= 2 (more) -> f2 <= 3 (less)
        let deep = DecisionTree {
            nodes: vec![
                node(split(0, 1.0, 1, 6), 0, vec![2.0, 2.0]),
                node(split(1, 2.0, 2, 3), 1, vec![2.0, 1.0]),
                node(NodeKind::Leaf, 2, vec![1.0, 0.0]),
                node(split(2, 3.0, 4, 5), 2, vec![1.0, 1.0]),
                node(NodeKind::Leaf, 3, vec![0.0, 1.0]),
                node(NodeKind::Leaf, 3, vec![1.0, 0.0]),
                node(NodeKind::Leaf, 1, vec![0.0, 1.0]),
            ],
            n_classes: 2,
            n_features: 3,
        };
        let p = extract_path(&deep, &[1.0, 2.5, 3.0], &names(3)).unwrap();
        let dirs: Vec<Direction> = p.iter().map(|s| s.direction).collect();
        assert_eq!(dirs, [Direction::Less, Direction::More, Direction::Less]);
        assert_eq!(deep.leaf_index(&[1.0, 2.5, 3.0]), 4);

        let cyclic = DecisionTree {
            nodes: vec![node(split(0, 0.5, 0, 0), 0, vec![1.0, 1.0])],
            n_classes: 2,
            n_features: 1,
        };
        assert!(matches!(extract_path(&cyclic, &[0.0], &names(1)), Err(Error::MalformedTree(_))));
        let dangling = DecisionTree {
            nodes: vec![node(split(0, 0.5, 7, 8), 0, vec![1.0, 1.0])],
            n_classes: 2,
            n_features: 1,
        };
        assert!(matches!(extract_path(&dangling, &[0.0], &names(1)), Err(Error::MalformedTree(_))));
    }

    fn step(f: &str) -> PathStep {
        PathStep {
            feature: f.into(),
            feature_index: 0,
            value: 0.0,
            direction: Direction::Less,
            threshold: 0.5,
        }
    }

    #[test]
    fn term_aggregation() {
        let paths = vec![
            vec![step("b"), step("court")],
            vec![step("b"), step("a")],
            vec![step("b")],
            vec![step("c")],
            vec![],
        ];
        let agg = aggregate_terms(&paths, |f| f != "court");
        assert_eq!(agg, vec![("b".into(), 3), ("a".into(), 1), ("c".into(), 1)]);
        assert!(aggregate_terms(&[vec![step("court")]], |f| f != "court").is_empty());
    }

    #[test]
    fn top_terms() {
        let freq: Vec<(String, usize)> = (0..10).map(|i| (format!("t{i}"), 10 - i)).collect();
        let rel: BTreeMap<String, Relevance> = (0..10)
            .map(|i| (format!("t{i}"), Relevance { relevance: i as f64 / 10.0, signed: 0.0 }))
            .collect();
        let top = select_top_terms(&freq, &rel);
        assert_eq!(top.len(), 7);
        assert_eq!(top[0].0, "t6");
        assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
        let few: BTreeMap<String, Relevance> = rel.into_iter().take(6).collect();
        assert_eq!(select_top_terms(&freq, &few).len(), 6);
        assert!(select_top_terms(&freq, &BTreeMap::new()).is_empty());
    }

    fn reference_explanation() -> Explanation {
        Explanation {
            sample: "10".into(),
            entities: EntityLines {
                case_type: "recurso de suplicación".into(),
                court: "Tribunal Superior de Justicia".into(),
                decision: "desestimatorio".into(),
                decision_type: "sustantivo".into(),
                instance_type: "segunda".into(),
                jurisdiction: "social".into(),
                resolution_type: "sentencia".into(),
            },
            assignments: vec![LabelAssignment::new(
                SubstantiveOrder::Social,
                [
                    "derecho del trabajo",
                    "derecho de la contratacion laboral",
                    "derecho relativo al contrato de trabajo",
                ],
            )
            .unwrap()],
            confidence: 88,
            top_terms: vec![("Estatuto Trabajadores".into(), 0.076), ("Estatuto".into(), 0.033)],
            paths: vec![],
        }
    }

    #[test]
    fn renders_two_blocks_and_empty_terms() {
        let mut e = reference_explanation();
        e.assignments.push(LabelAssignment::new(SubstantiveOrder::Penal, ["a", "b", "c"]).unwrap());
        e.top_terms.clear();
        let text = render_explanation(&e, DEFAULT_TEMPLATE).unwrap();
        assert!(text.contains("- Law categories: derecho del trabajo, derecho de la contratacion laboral y derecho relativo al contrato de trabajo\n\n- Substantive order: penal\n- Law categories: a, b y c\n"));
        assert!(text.ends_with("relevance are:\n"));
        assert_eq!(text, render_explanation(&e, DEFAULT_TEMPLATE).unwrap());
    }

    #[test]
    fn template_errors() {
        let e = reference_explanation();
        assert!(matches!(render_explanation(&e, "{nope}"), Err(Error::Template(n)) if n == "nope"));
        let mut empty = e.clone();
        empty.assignments.clear();
        assert!(render_explanation(&empty, DEFAULT_TEMPLATE).is_err());
    }

    fn la(c: &str) -> LabelAssignment {
        LabelAssignment::new(SubstantiveOrder::Civil, [c, "x", "y"]).unwrap()
    }

    fn oracle_model() -> (EnsembleModel, Vec<Vec<f64>>) {
        // class "a" iff term t0 is present; t1..t3 are noise
        let n = 80;
        let mut cols = vec![vec![0.0; n]; 4];
        let mut sets = Vec::new();
        for i in 0..n {
            let a = i % 2 == 0;
            cols[0][i] = if a { 1.0 + (i % 3) as f64 } else { 0.0 };
            for (j, col) in cols.iter_mut().enumerate().skip(1) {
                col[i] = ((i * (j + 3)) % 4 == 0) as u8 as f64;
            }
            sets.push(vec![la(if a { "a" } else { "b" })]);
        }
        let names: Vec<String> = (0..4).map(|j| format!("t{j}")).collect();
        let cats = Catalogs::from_label_sets(&sets);
        let h = Hyperparams {
            n_estimators: 15,
            seed: 4,
            ..Hyperparams::default()
        };
        let m = fit_ensemble(&cols, &names, &sets, &cats, &h, Variant::Rf, Strategy::Mts).unwrap();
        (m, cols)
    }

    #[test]
    fn determining_term_dominates_relevance() {
        let (m, _) = oracle_model();
        let row = [2.0, 1.0, 1.0, 1.0];
        let class = argmax(&m.predict_proba(&row).unwrap());
        let r = perturbation_relevance(&m, &row, &[0, 1, 2, 3], class, 300, 1).unwrap();
        let top = r["t0"].relevance;
        for t in ["t1", "t2", "t3"] {
            assert!(top > r[t].relevance, "{t}");
        }
        assert_eq!(r, perturbation_relevance(&m, &row, &[0, 1, 2, 3], class, 300, 1).unwrap());
        assert!(perturbation_relevance(&m, &[0.0; 4], &[0, 1, 2, 3], class, 300, 1).unwrap().is_empty());
    }

    #[test]
    fn confidence_of_unanimous_trees() {
        let (m, cols) = oracle_model();
        let row: Vec<f64> = cols.iter().map(|c| c[0]).collect();
        let p = m.predict_proba(&row).unwrap();
        assert_eq!(confidence(&m, &row).unwrap(), (100.0 * p[argmax(&p)]).round() as u32);
    }

    #[test]
    fn dot_export() {
        let leaf = DecisionTree {
            nodes: vec![node(NodeKind::Leaf, 0, vec![0.0, 3.0])],
            n_classes: 2,
            n_features: 1,
        };
        let g = export_tree_graph(&leaf, 3, &names(1), &["no".into(), "yes".into()]);
        assert_eq!(g.matches("label=").count(), 1);
        assert!(g.contains("yes"));

        let two = DecisionTree {
            nodes: vec![
                node(split(0, 0.5, 1, 2), 0, vec![2.0, 1.0]),
                node(NodeKind::Leaf, 1, vec![2.0, 0.0]),
                node(NodeKind::Leaf, 1, vec![0.0, 1.0]),
            ],
            n_classes: 2,
            n_features: 1,
        };
        let g = export_tree_graph(&two, 2, &["actividad laboral".into()], &["no".into(), "yes".into()]);
        assert_eq!(g.matches(" -> ").count(), 2);
        assert!(g.contains("actividad laboral <= 0.5"));
        let cut = export_tree_graph(&two, 0, &names(1), &["no".into(), "yes".into()]);
        assert_eq!(cut.matches(" -> ").count(), 0);
    }
}
