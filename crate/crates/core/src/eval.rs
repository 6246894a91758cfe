//! Report scoring: ROUGE-N, support/contradiction counts against a gold
//! plot-point set, Cohen's kappa and Likert averages.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{ratio, Real};
use crate::text::{contains_phrase, normalize_phrase, normalize_whitespace};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("label {label:?} on item {item:?} is not in the declared label set")]
    LabelOutsideSet { item: String, label: String },
    #[error("annotation table is empty")]
    EmptyTable,
    #[error("annotation columns differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("Likert score {0} is outside 1..=5")]
    ScoreOutOfRange(i64),
    #[error("no Likert scores given")]
    NoScores,
    #[error("kappa threshold {0} is outside [-1, 1]")]
    InvalidThreshold(f64),
    #[error("{file}:{line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Lowercased alphanumeric runs.
pub fn rouge_tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore<T> {
    pub n: usize,
    pub recall: T,
    pub precision: T,
    pub f1: T,
}

/// ROUGE-N with clipped n-gram overlap. Texts too short to hold an n-gram
/// score zero.
pub fn rouge_n<T: Real>(candidate: &str, reference: &str, n: usize) -> RougeScore<T> {
    let (c, r) = (rouge_tokens(candidate), rouge_tokens(reference));
    let (cc, rc) = (ngram_counts(&c, n), ngram_counts(&r, n));
    let overlap: usize = cc.iter().map(|(g, k)| (*k).min(*rc.get(g).unwrap_or(&0))).sum();
    let recall: T = ratio(overlap, rc.values().sum());
    let precision: T = ratio(overlap, cc.values().sum());
    let f1 = if recall + precision == T::zero() {
        T::zero()
    } else {
        let two = T::one() + T::one();
        two * recall * precision / (recall + precision)
    };
    RougeScore { n, recall, precision, f1 }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceText {
    pub event_query: String,
    pub text: String,
    pub origin: String,
}

impl ReferenceText {
    /// Reads a reference description. An optional `#event: <query>` first
    /// line names the event; otherwise `default_event` is used.
    pub fn load(path: &Path, default_event: &str) -> Result<Self, EvalError> {
        let raw = read(path)?;
        let (event, body) = match raw.strip_prefix("#event:") {
            Some(rest) => {
                let (head, tail) = rest.split_once('\n').unwrap_or((rest, ""));
                (head.trim().to_string(), tail)
            }
            None => (default_event.to_string(), raw.as_str()),
        };
        let text = normalize_whitespace(body);
        if text.is_empty() {
            return Err(EvalError::Format {
                file: path.display().to_string(),
                line: 1,
                message: "reference text is empty".into(),
            });
        }
        Ok(Self {
            event_query: event,
            text,
            origin: path.display().to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldPlotSet {
    pub event_query: String,
    pub points: Vec<String>,
}

impl GoldPlotSet {
    /// Keeps the first spelling of each normalized point.
    pub fn new(event_query: impl Into<String>, points: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let mut seen = BTreeSet::new();
        let points = points
            .into_iter()
            .map(|p| normalize_whitespace(&p.into()))
            .filter(|p| !p.is_empty() && seen.insert(normalize_phrase(p)))
            .collect();
        Self {
            event_query: event_query.into(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `#event: <query>` then one point per line.
    pub fn parse(text: &str, file: &str) -> Result<Self, EvalError> {
        let mut lines = text.lines();
        let event = lines
            .next()
            .and_then(|l| l.trim().strip_prefix("#event:"))
            .map(|e| e.trim().to_string())
            .filter(|e| !e.is_empty())
            .ok_or_else(|| EvalError::Format {
                file: file.to_string(),
                line: 1,
                message: "expected `#event: <query>` header".into(),
            })?;
        Ok(Self::new(event, lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))))
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    pub fn to_file_string(&self) -> String {
        let mut s = format!("#event: {}\n", self.event_query);
        for p in &self.points {
            s.push_str(p);
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuppContScore {
    pub supp: usize,
    pub cont: usize,
    pub gold_size: usize,
}

/// Counts gold points present in the report's keyword set, matching on
/// normalized phrases.
pub fn supp_cont<S: AsRef<str>>(report_keywords: &[S], gold: &GoldPlotSet) -> SuppContScore {
    let have: BTreeSet<String> = report_keywords.iter().map(|k| normalize_phrase(k.as_ref())).collect();
    let supp = gold.points.iter().filter(|p| have.contains(&normalize_phrase(p))).count();
    SuppContScore {
        supp,
        cont: gold.len() - supp,
        gold_size: gold.len(),
    }
}

/// Like [`supp_cont`] but matches gold points as phrases inside report text.
pub fn supp_cont_in_text(report_text: &str, gold: &GoldPlotSet) -> SuppContScore {
    let supp = gold.points.iter().filter(|p| contains_phrase(report_text, p)).count();
    SuppContScore {
        supp,
        cont: gold.len() - supp,
        gold_size: gold.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTable {
    pub items: Vec<String>,
    pub labels_a: Vec<String>,
    pub labels_b: Vec<String>,
    pub label_set: BTreeSet<String>,
}

impl AnnotationTable {
    pub fn new(
        items: Vec<String>,
        labels_a: Vec<String>,
        labels_b: Vec<String>,
        label_set: BTreeSet<String>,
    ) -> Result<Self, EvalError> {
        if labels_a.len() != labels_b.len() {
            return Err(EvalError::LengthMismatch(labels_a.len(), labels_b.len()));
        }
        if items.len() != labels_a.len() {
            return Err(EvalError::LengthMismatch(items.len(), labels_a.len()));
        }
        for (i, (a, b)) in items.iter().zip(labels_a.iter().zip(&labels_b)) {
            for l in [a, b] {
                if !label_set.contains(l) {
                    return Err(EvalError::LabelOutsideSet {
                        item: i.clone(),
                        label: l.clone(),
                    });
                }
            }
        }
        Ok(Self {
            items,
            labels_a,
            labels_b,
            label_set,
        })
    }

    /// Table with generated item names; the label set is whatever appears.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, S)]) -> Self {
        let a: Vec<String> = pairs.iter().map(|p| p.0.as_ref().to_string()).collect();
        let b: Vec<String> = pairs.iter().map(|p| p.1.as_ref().to_string()).collect();
        let set = a.iter().chain(&b).cloned().collect();
        let items = (1..=pairs.len()).map(|i| i.to_string()).collect();
        Self::new(items, a, b, set).expect("labels are drawn from the table")
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Parses `item<TAB>labelA<TAB>labelB` rows. Without `label_set` the
    /// declared set is the labels seen.
    pub fn parse(text: &str, file: &str, label_set: Option<&BTreeSet<String>>) -> Result<Self, EvalError> {
        let (mut items, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(EvalError::Format {
                    file: file.to_string(),
                    line: n + 1,
                    message: "expected item<TAB>labelA<TAB>labelB".into(),
                });
            }
            items.push(cols[0].to_string());
            a.push(cols[1].to_string());
            b.push(cols[2].to_string());
        }
        let set = match label_set {
            Some(s) => s.clone(),
            None => a.iter().chain(&b).cloned().collect(),
        };
        Self::new(items, a, b, set)
    }

    pub fn load(path: &Path, label_set: Option<&BTreeSet<String>>) -> Result<Self, EvalError> {
        Self::parse(&read(path)?, &path.display().to_string(), label_set)
    }

    /// Splits into one table per distinct item, in first-appearance order.
    pub fn group_by_item(&self) -> Vec<(String, AnnotationTable)> {
        let mut order: Vec<String> = Vec::new();
        let mut rows: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, item) in self.items.iter().enumerate() {
            rows.entry(item).or_insert_with(|| {
                order.push(item.clone());
                Vec::new()
            });
            rows.get_mut(item.as_str()).unwrap().push(i);
        }
        order
            .into_iter()
            .map(|item| {
                let idx = &rows[item.as_str()];
                let t = AnnotationTable {
                    items: idx.iter().map(|_| item.clone()).collect(),
                    labels_a: idx.iter().map(|&i| self.labels_a[i].clone()).collect(),
                    labels_b: idx.iter().map(|&i| self.labels_b[i].clone()).collect(),
                    label_set: self.label_set.clone(),
                };
                (item, t)
            })
            .collect()
    }
}

/// Cohen's kappa. When chance agreement is total (both annotators used one
/// and the same label throughout) the result is 1.
pub fn cohen_kappa<T: Real>(t: &AnnotationTable) -> Result<T, EvalError> {
    if t.is_empty() {
        return Err(EvalError::EmptyTable);
    }
    let n = t.len();
    let agree = t.labels_a.iter().zip(&t.labels_b).filter(|(a, b)| a == b).count();
    let p_o: T = ratio(agree, n);
    let nn = <T as Real>::from_usize(n);
    let p_e: T = t
        .label_set
        .iter()
        .map(|l| {
            let ca = t.labels_a.iter().filter(|x| *x == l).count();
            let cb = t.labels_b.iter().filter(|x| *x == l).count();
            <T as Real>::from_usize(ca) / nn * (<T as Real>::from_usize(cb) / nn)
        })
        .sum();
    if p_e >= T::one() {
        return Ok(if p_o >= T::one() { T::one() } else { T::zero() });
    }
    Ok((p_o - p_e) / (T::one() - p_e))
}

/// Keeps candidate points whose kappa is strictly above `threshold`.
pub fn filter_gold_by_kappa<T: Real>(
    event_query: &str,
    candidates: &[(String, AnnotationTable)],
    threshold: T,
) -> Result<GoldPlotSet, EvalError> {
    if threshold < -T::one() || threshold > T::one() || threshold.is_nan() {
        return Err(EvalError::InvalidThreshold(threshold.to_f64().unwrap_or(f64::NAN)));
    }
    let mut kept = Vec::new();
    for (point, table) in candidates {
        if cohen_kappa::<T>(table)? > threshold {
            kept.push(point.clone());
        }
    }
    Ok(GoldPlotSet::new(event_query, kept))
}

/// Mean of 5-point Likert scores.
pub fn likert_average<T: Real>(scores: &[i64]) -> Result<T, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::NoScores);
    }
    if let Some(&s) = scores.iter().find(|s| !(1..=5).contains(*s)) {
        return Err(EvalError::ScoreOutOfRange(s));
    }
    let sum: i64 = scores.iter().sum();
    Ok(ratio(sum as usize, scores.len()))
}

/// Scores for one event, as written by the `evaluate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventScores {
    pub event_query: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge1: Option<RougeScore<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rouge2: Option<RougeScore<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supp_cont: Option<SuppContScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fluency: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn rouge_hand_cases() {
        let r = rouge_n::<f64>("the cat sat", "the cat ran", 1);
        assert!(close(r.recall, 2.0 / 3.0) && close(r.precision, 2.0 / 3.0) && close(r.f1, 2.0 / 3.0));
        let r = rouge_n::<f64>("the cat sat", "the cat ran", 2);
        assert!(close(r.recall, 0.5) && close(r.precision, 0.5));
        let r = rouge_n::<f64>("Same text here.", "same TEXT here", 2);
        assert_eq!((r.recall, r.precision, r.f1), (1.0, 1.0, 1.0));
        let r = rouge_n::<f32>("alpha beta", "gamma delta", 1);
        assert_eq!((r.recall, r.precision, r.f1), (0.0, 0.0, 0.0));
        let r = rouge_n::<f64>("one", "one", 2);
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn clipping_limits_repeated_ngrams() {
        // "the" appears 3 times in the candidate but once in the reference
        let r = rouge_n::<f64>("the the the", "the cat", 1);
        assert!(close(r.recall, 0.5) && close(r.precision, 1.0 / 3.0));
    }

    #[test]
    fn supp_cont_partition() {
        let gold = GoldPlotSet::new("e", ["Titanic", "Paul-Henri Nargeolet", "sonar", "debris"]);
        let s = supp_cont(&["titanic", "paul henri nargeolet", "ROV"], &gold);
        assert_eq!((s.supp, s.cont, s.gold_size), (2, 2, 4));
        let s = supp_cont::<&str>(&[], &gold);
        assert_eq!((s.supp, s.cont), (0, 4));
        let s = supp_cont_in_text("Sonar picked up debris near the Titanic.", &gold);
        assert_eq!(s.supp, 3);
    }

    #[test]
    fn kappa_hand_cases() {
        let perfect = AnnotationTable::from_pairs(&[("yes", "yes"), ("no", "no"), ("yes", "yes"), ("no", "no")]);
        assert_eq!(cohen_kappa::<f64>(&perfect).unwrap(), 1.0);

        let mut pairs = vec![("yes", "yes"); 50];
        pairs.extend(vec![("yes", "no"); 50]);
        assert!(close(cohen_kappa::<f64>(&AnnotationTable::from_pairs(&pairs)).unwrap(), 0.0));

        // 8 agreements, marginals 6/4 on both sides: p_o 0.8, p_e 0.52
        let mut pairs = vec![("yes", "yes"); 5];
        pairs.extend(vec![("no", "no"); 3]);
        pairs.push(("yes", "no"));
        pairs.push(("no", "yes"));
        let k = cohen_kappa::<f64>(&AnnotationTable::from_pairs(&pairs)).unwrap();
        assert!(close(k, 0.28 / 0.48));

        let single = AnnotationTable::from_pairs(&[("yes", "yes"), ("yes", "yes")]);
        assert_eq!(cohen_kappa::<f64>(&single).unwrap(), 1.0);
    }

    #[test]
    fn annotation_parsing_and_errors() {
        let set: BTreeSet<String> = ["yes", "no"].map(String::from).into();
        let t = AnnotationTable::parse("p1\tyes\tyes\np1\tno\tno\np2\tyes\tno\n", "f", Some(&set)).unwrap();
        let groups = t.group_by_item();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1.len(), 2);
        assert!(matches!(
            AnnotationTable::parse("p1\tyes\tmaybe\n", "f", Some(&set)),
            Err(EvalError::LabelOutsideSet { .. })
        ));
        assert!(matches!(AnnotationTable::parse("p1\tyes\n", "f", None), Err(EvalError::Format { line: 1, .. })));
        assert_eq!(cohen_kappa::<f64>(&AnnotationTable::parse("", "f", None).unwrap()), Err(EvalError::EmptyTable));
    }

    #[test]
    fn kappa_filter_is_strict() {
        let hi = AnnotationTable::from_pairs(&[("yes", "yes"), ("no", "no")]);
        let lo = AnnotationTable::from_pairs(&[("yes", "no"), ("no", "yes")]);
        let c = vec![("a".to_string(), hi.clone()), ("b".to_string(), lo)];
        let g = filter_gold_by_kappa("e", &c, 0.6).unwrap();
        assert_eq!(g.points, ["a"]);
        assert_eq!(filter_gold_by_kappa("e", &c, 1.0).unwrap().len(), 0);
        assert!(filter_gold_by_kappa("e", &c, 1.5).is_err());
    }

    #[test]
    fn likert() {
        assert_eq!(likert_average::<f64>(&[5, 5, 5]).unwrap(), 5.0);
        assert!(close(likert_average::<f64>(&[4, 4, 5, 4, 4]).unwrap(), 4.2));
        assert_eq!(likert_average::<f64>(&[1]).unwrap(), 1.0);
        assert_eq!(likert_average::<f64>(&[3, 6]), Err(EvalError::ScoreOutOfRange(6)));
        assert_eq!(likert_average::<f64>(&[]), Err(EvalError::NoScores));
    }

    #[test]
    fn gold_file_format() {
        let g = GoldPlotSet::parse("#event: Oceangate\nTitanic\n\ntitanic\nsonar\n", "g").unwrap();
        assert_eq!(g.event_query, "Oceangate");
        assert_eq!(g.points, ["Titanic", "sonar"]);
        assert_eq!(GoldPlotSet::parse(&g.to_file_string(), "g").unwrap(), g);
        assert!(GoldPlotSet::parse("Titanic\n", "g").is_err());
    }
}
