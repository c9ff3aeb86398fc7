//! Example-based multi-label metrics over class-index sets.
//!
//! `l` holds the annotated sets and `z` the predicted sets, both as indices
//! into the class catalog.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type IndexSet = BTreeSet<usize>;

fn check_pair(l: &[IndexSet], z: &[IndexSet]) -> Result<()> {
    if l.len() != z.len() {
        return Err(Error::Shape(format!(
            "{} annotated sets but {} predicted sets",
            l.len(),
            z.len()
        )));
    }
    if l.is_empty() {
        return Err(Error::Invalid("metrics need at least one document".into()));
    }
    Ok(())
}

fn mean_over(l: &[IndexSet], z: &[IndexSet], f: impl Fn(&IndexSet, &IndexSet) -> Result<f64>) -> Result<f64> {
    check_pair(l, z)?;
    let mut sum = 0.0;
    for (a, b) in l.iter().zip(z) {
        sum += f(a, b)?;
    }
    Ok(sum / l.len() as f64)
}

/// Fraction of documents predicted exactly.
pub fn exact_match(l: &[IndexSet], z: &[IndexSet]) -> Result<f64> {
    mean_over(l, z, |a, b| Ok(if a == b { 1.0 } else { 0.0 }))
}

/// Mean Jaccard index `|L ∩ Z| / |L ∪ Z|`.
pub fn ml_accuracy(l: &[IndexSet], z: &[IndexSet]) -> Result<f64> {
    mean_over(l, z, |a, b| {
        let union = a.union(b).count();
        if union == 0 {
            return Err(Error::Undefined("accuracy of two empty sets".into()));
        }
        Ok(a.intersection(b).count() as f64 / union as f64)
    })
}

/// Mean `|L ∩ Z| / |Z|`.
pub fn ml_precision(l: &[IndexSet], z: &[IndexSet]) -> Result<f64> {
    mean_over(l, z, |a, b| {
        if b.is_empty() {
            return Err(Error::Undefined("precision of an empty prediction".into()));
        }
        Ok(a.intersection(b).count() as f64 / b.len() as f64)
    })
}

/// Mean `|L ∩ Z| / |L|`.
pub fn ml_recall(l: &[IndexSet], z: &[IndexSet]) -> Result<f64> {
    mean_over(l, z, |a, b| {
        if a.is_empty() {
            return Err(Error::Undefined("recall of an empty annotation".into()));
        }
        Ok(a.intersection(b).count() as f64 / a.len() as f64)
    })
}

fn check_catalog(sets: &[IndexSet], m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Invalid("empty class catalog".into()));
    }
    match sets.iter().flatten().find(|&&j| j >= m) {
        Some(&j) => Err(Error::ClassIndex { index: j, max: m - 1 }),
        None => Ok(()),
    }
}

/// Symmetric difference size summed over documents, over `m · n`.
pub fn hamming_loss(l: &[IndexSet], z: &[IndexSet], m: usize) -> Result<f64> {
    check_pair(l, z)?;
    check_catalog(l, m)?;
    check_catalog(z, m)?;
    let errors: usize = l.iter().zip(z).map(|(a, b)| a.symmetric_difference(b).count()).sum();
    Ok(errors as f64 / (m * l.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Prf {
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Micro and macro precision/recall/F over the binary indicator view.
/// Classes neither annotated nor predicted anywhere are left out of the macro
/// averages; any other undefined per-class ratio counts as 0. Macro F is the
/// mean of the per-class F values.
pub fn micro_macro_prf(l: &[IndexSet], z: &[IndexSet], m: usize) -> Result<Prf> {
    check_pair(l, z)?;
    check_catalog(l, m)?;
    check_catalog(z, m)?;
    let (mut tp, mut fp, mut fnn) = (vec![0usize; m], vec![0usize; m], vec![0usize; m]);
    for (a, b) in l.iter().zip(z) {
        for &j in a.intersection(b) {
            tp[j] += 1;
        }
        for &j in b.difference(a) {
            fp[j] += 1;
        }
        for &j in a.difference(b) {
            fnn[j] += 1;
        }
    }
    let (stp, sfp, sfn): (usize, usize, usize) = (tp.iter().sum(), fp.iter().sum(), fnn.iter().sum());
    let micro_precision = ratio(stp, stp + sfp);
    let micro_recall = ratio(stp, stp + sfn);
    let (mut mp, mut mr, mut mf, mut active) = (0.0, 0.0, 0.0, 0usize);
    for j in 0..m {
        if tp[j] + fp[j] + fnn[j] == 0 {
            continue;
        }
        let p = ratio(tp[j], tp[j] + fp[j]);
        let r = ratio(tp[j], tp[j] + fnn[j]);
        mp += p;
        mr += r;
        mf += harmonic(p, r);
        active += 1;
    }
    let k = active.max(1) as f64;
    Ok(Prf {
        micro_precision,
        micro_recall,
        micro_f: harmonic(micro_precision, micro_recall),
        macro_precision: mp / k,
        macro_recall: mr / k,
        macro_f: mf / k,
    })
}

/// Every metric for one evaluation split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Scores {
    pub exact_match: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub hamming_loss: f64,
    pub prf: Prf,
}

impl Scores {
    pub fn compute(l: &[IndexSet], z: &[IndexSet], m: usize) -> Result<Self> {
        Ok(Self {
            exact_match: exact_match(l, z)?,
            accuracy: ml_accuracy(l, z)?,
            precision: ml_precision(l, z)?,
            recall: ml_recall(l, z)?,
            hamming_loss: hamming_loss(l, z, m)?,
            prf: micro_macro_prf(l, z, m)?,
        })
    }

    pub fn mean(all: &[Scores]) -> Scores {
        let n = all.len().max(1) as f64;
        let avg = |f: &dyn Fn(&Scores) -> f64| all.iter().map(f).sum::<f64>() / n;
        Scores {
            exact_match: avg(&|s| s.exact_match),
            accuracy: avg(&|s| s.accuracy),
            precision: avg(&|s| s.precision),
            recall: avg(&|s| s.recall),
            hamming_loss: avg(&|s| s.hamming_loss),
            prf: Prf {
                micro_precision: avg(&|s| s.prf.micro_precision),
                micro_recall: avg(&|s| s.prf.micro_recall),
                micro_f: avg(&|s| s.prf.micro_f),
                macro_precision: avg(&|s| s.prf.macro_precision),
                macro_recall: avg(&|s| s.prf.macro_recall),
                macro_f: avg(&|s| s.prf.macro_f),
            },
        }
    }
}
