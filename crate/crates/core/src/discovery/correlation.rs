use std::collections::BTreeMap;

use thiserror::Error;

use crate::docel::AttributeValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrelationError {
    #[error("sample lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Number of equal-frequency bins used for a numeric sample of size `n`.
pub fn bin_count(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, 10)
}

/// Maps each value to a discrete code. Numeric columns with more distinct
/// values than bins are cut at equal-frequency quantiles; everything else is
/// coded by value.
pub fn discretize(values: &[AttributeValue]) -> Vec<usize> {
    let numeric: Option<Vec<f64>> = values.iter().map(AttributeValue::as_f64).collect();
    if let Some(xs) = numeric {
        let bins = bin_count(xs.len());
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let mut distinct = sorted.clone();
        distinct.dedup();
        if distinct.len() > bins {
            let n = sorted.len();
            let mut cuts: Vec<f64> = (1..bins).map(|k| sorted[k * n / bins]).collect();
            cuts.dedup();
            return xs
                .iter()
                .map(|x| cuts.iter().take_while(|c| **c <= *x).count())
                .collect();
        }
    }
    let mut codes: BTreeMap<&AttributeValue, usize> = BTreeMap::new();
    for v in values {
        let next = codes.len();
        codes.entry(v).or_insert(next);
    }
    values.iter().map(|v| codes[v]).collect()
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information of two discrete codings,
/// I(X;Y) / max(H(X), H(Y)).
pub fn nmi_codes(x: &[usize], y: &[usize]) -> f64 {
    let n = x.len() as f64;
    let mut cx: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cy: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cxy: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&a, &b) in x.iter().zip(y) {
        *cx.entry(a).or_default() += 1;
        *cy.entry(b).or_default() += 1;
        *cxy.entry((a, b)).or_default() += 1;
    }
    let hx = entropy(cx.values().copied(), n);
    let hy = entropy(cy.values().copied(), n);
    if hx <= 0.0 || hy <= 0.0 {
        return 0.0;
    }
    let hxy = entropy(cxy.values().copied(), n);
    ((hx + hy - hxy) / hx.max(hy)).clamp(0.0, 1.0)
}

/// Symmetric dependence score in [0, 1].
pub fn correlate(x: &[AttributeValue], y: &[AttributeValue]) -> Result<f64, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(CorrelationError::TooFewSamples(x.len()));
    }
    Ok(nmi_codes(&discretize(x), &discretize(y)))
}
