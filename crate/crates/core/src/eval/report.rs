use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::metrics::{mann_whitney_u, welch_t, Stat};
use super::truth::TruthCategory;
use super::Method;
use crate::error::{Error, Result};
use crate::kg::RelationGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Truth,
    Parents,
    Tautology,
}

/// Feature configuration a record was produced under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Default,
    InverseIncluded,
    /// Query inverse and sibling-relation paths excluded.
    InverseExcluded,
    /// Query inverse excluded, sibling-relation paths allowed.
    InverseExcludedWithSiblings,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Default => "default",
            Setting::InverseIncluded => "inverse_included",
            Setting::InverseExcluded => "inverse_excluded",
            Setting::InverseExcludedWithSiblings => "inverse_excluded_with_siblings",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordPath {
    pub path: Vec<String>,
    /// Surrogate coefficient or heuristic path score.
    pub weight: f64,
    /// Benchmark confidence, 0 when there is no benchmark.
    pub relevance: f64,
    /// Relation pattern with query roles, for family queries.
    pub template: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub index: usize,
    pub method: Method,
    pub setting: Setting,
    pub query: [String; 3],
    pub truth: Option<TruthCategory>,
    pub relation_group: RelationGroup,
    pub siblings: Option<usize>,
    /// KGE plausibility of the query.
    pub kge_score: f64,
    pub n_paths: usize,
    /// Holdout R^2; not applicable to the heuristic.
    pub fidelity: Option<f64>,
    pub paths: Vec<RecordPath>,
    /// NDCG@k for k = 1, 2, ...; empty without a benchmark.
    pub ndcg: Vec<f64>,
    pub contains_query_inverse: bool,
    /// 1-based rank of the query inverse, when present.
    pub query_inverse_rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub method: Method,
    pub setting: Setting,
    pub truth: Option<TruthCategory>,
    pub relation_group: Option<RelationGroup>,
    pub siblings: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub key: GroupKey,
    pub count: usize,
    pub kge_score: Stat,
    pub n_paths: Stat,
    pub fidelity: Option<Stat>,
    pub ndcg: Vec<Stat>,
    /// Records with at least one benchmark path.
    pub with_benchmark_path: usize,
    pub with_query_inverse: usize,
    pub query_inverse_rank1: usize,
    /// Weight of the top path over records with at least one path.
    pub top_weight: Stat,
    /// Weight of the second path over the same records, 0 when absent.
    pub second_weight: Stat,
}

/// A descriptive two-sample comparison between truth categories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method: Method,
    pub metric: String,
    pub a: TruthCategory,
    pub b: TruthCategory,
    pub welch_t: Option<f64>,
    pub welch_df: Option<f64>,
    pub mann_whitney_u: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: SweepKind,
    pub seed: u64,
    pub config: serde_json::Value,
    pub records: Vec<QueryRecord>,
    pub aggregates: Vec<Aggregate>,
    pub comparisons: Vec<Comparison>,
}

fn group_keys(r: &QueryRecord) -> Vec<GroupKey> {
    let base = GroupKey { method: r.method, setting: r.setting, truth: r.truth, relation_group: None, siblings: None };
    let mut keys = vec![base.clone()];
    if r.truth.is_some() {
        keys.push(GroupKey { relation_group: Some(r.relation_group), ..base.clone() });
    }
    if let Some(s) = r.siblings {
        keys.push(GroupKey { siblings: Some(s), ..base });
    }
    keys
}

fn aggregate(key: GroupKey, rs: &[&QueryRecord]) -> Aggregate {
    let col = |f: &dyn Fn(&QueryRecord) -> Option<f64>| -> Vec<f64> { rs.iter().filter_map(|r| f(r)).collect() };
    let fid = col(&|r| r.fidelity);
    let k = rs.iter().map(|r| r.ndcg.len()).max().unwrap_or(0);
    let ndcg = (0..k).map(|i| Stat::of(&col(&|r| r.ndcg.get(i).copied()))).collect();
    let with_paths: Vec<&&QueryRecord> = rs.iter().filter(|r| !r.paths.is_empty()).collect();
    Aggregate {
        key,
        count: rs.len(),
        kge_score: Stat::of(&col(&|r| Some(r.kge_score))),
        n_paths: Stat::of(&col(&|r| Some(r.n_paths as f64))),
        fidelity: (!fid.is_empty()).then(|| Stat::of(&fid)),
        ndcg,
        with_benchmark_path: rs.iter().filter(|r| r.paths.iter().any(|p| p.relevance > 0.0)).count(),
        with_query_inverse: rs.iter().filter(|r| r.contains_query_inverse).count(),
        query_inverse_rank1: rs.iter().filter(|r| r.query_inverse_rank == Some(1)).count(),
        top_weight: Stat::of(&with_paths.iter().map(|r| r.paths[0].weight).collect::<Vec<_>>()),
        second_weight: Stat::of(
            &with_paths.iter().map(|r| r.paths.get(1).map_or(0.0, |p| p.weight)).collect::<Vec<_>>(),
        ),
    }
}

fn comparisons(records: &[QueryRecord]) -> Vec<Comparison> {
    let mut methods: Vec<Method> = records.iter().filter(|r| r.truth.is_some()).map(|r| r.method).collect();
    methods.sort_unstable();
    methods.dedup();
    let metrics: [(&str, fn(&QueryRecord) -> Option<f64>); 3] =
        [("kge_score", |r| Some(r.kge_score)), ("n_paths", |r| Some(r.n_paths as f64)), ("fidelity", |r| r.fidelity)];
    let mut out = Vec::new();
    for m in methods {
        for (name, f) in metrics {
            let sample = |c: TruthCategory| -> Vec<f64> {
                records.iter().filter(|r| r.method == m && r.truth == Some(c)).filter_map(f).collect()
            };
            let t = sample(TruthCategory::True);
            if t.is_empty() {
                continue;
            }
            for b in [TruthCategory::False, TruthCategory::Nonsense] {
                let o = sample(b);
                let w = welch_t(&t, &o);
                out.push(Comparison {
                    method: m,
                    metric: name.to_owned(),
                    a: TruthCategory::True,
                    b,
                    welch_t: w.map(|x| x.0),
                    welch_df: w.map(|x| x.1),
                    mann_whitney_u: mann_whitney_u(&t, &o),
                });
            }
        }
    }
    out
}

fn summarize(records: &[QueryRecord]) -> (Vec<Aggregate>, Vec<Comparison>) {
    let mut groups: BTreeMap<GroupKey, Vec<&QueryRecord>> = BTreeMap::new();
    for r in records {
        for k in group_keys(r) {
            groups.entry(k).or_default().push(r);
        }
    }
    let aggs = groups.into_iter().map(|(k, rs)| aggregate(k, &rs)).collect();
    (aggs, comparisons(records))
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| Error::Report(format!("csv: {e}"));
    w.write_record(header).map_err(map)?;
    for row in rows {
        w.write_record(&row).map_err(map)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

impl ExperimentReport {
    pub fn new(kind: SweepKind, seed: u64, config: serde_json::Value, mut records: Vec<QueryRecord>) -> Self {
        records.sort_by_key(|r| (r.index, r.setting, r.method));
        let (aggregates, comparisons) = summarize(&records);
        Self { kind, seed, config, records, aggregates, comparisons }
    }

    /// Check that the aggregates are exactly those of the records.
    pub fn verify(&self) -> Result<()> {
        let (aggs, comps) = summarize(&self.records);
        if aggs != self.aggregates {
            return Err(Error::Report("report aggregates do not match its records".into()));
        }
        if comps != self.comparisons {
            return Err(Error::Report("report comparisons do not match its records".into()));
        }
        Ok(())
    }

    pub fn aggregate(&self, key: &GroupKey) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| &a.key == key)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        r.verify()?;
        Ok(r)
    }

    pub fn read(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn records_in(&self, setting: Setting) -> impl Iterator<Item = &QueryRecord> + '_ {
        self.records.iter().filter(move |r| r.setting == setting)
    }

    /// Plot-ready CSV files as `(file name, contents)`.
    pub fn figure_csvs(&self) -> Result<Vec<(String, String)>> {
        match self.kind {
            SweepKind::Truth => self.truth_csvs(),
            SweepKind::Parents => self.parents_csvs(),
            SweepKind::Tautology => self.tautology_csvs(),
        }
    }

    fn truth_csvs(&self) -> Result<Vec<(String, String)>> {
        let truth = |r: &QueryRecord| r.truth.map_or("", |t| t.as_str()).to_owned();
        let mut by_query: BTreeMap<usize, &QueryRecord> = BTreeMap::new();
        for r in &self.records {
            by_query.entry(r.index).or_insert(r);
        }
        let a = by_query
            .values()
            .map(|r| {
                vec![
                    r.index.to_string(),
                    r.relation_group.as_str().to_owned(),
                    truth(r),
                    r.query[0].clone(),
                    r.query[1].clone(),
                    r.query[2].clone(),
                    fmt_f(r.kge_score),
                ]
            })
            .collect();
        let b = self
            .records
            .iter()
            .map(|r| {
                vec![
                    r.index.to_string(),
                    r.method.to_string(),
                    r.relation_group.as_str().to_owned(),
                    truth(r),
                    r.n_paths.to_string(),
                ]
            })
            .collect();
        let c = self
            .records
            .iter()
            .filter_map(|r| {
                r.fidelity.map(|f| {
                    vec![
                        r.index.to_string(),
                        r.method.to_string(),
                        r.relation_group.as_str().to_owned(),
                        truth(r),
                        fmt_f(f),
                    ]
                })
            })
            .collect();
        Ok(vec![
            (
                "fig2a.csv".into(),
                csv_text(&["index", "relation_group", "truth", "head", "relation", "tail", "kge_score"], a)?,
            ),
            ("fig2b.csv".into(), csv_text(&["index", "method", "relation_group", "truth", "n_paths"], b)?),
            ("fig2c.csv".into(), csv_text(&["index", "method", "relation_group", "truth", "fidelity"], c)?),
        ])
    }

    fn parents_csvs(&self) -> Result<Vec<(String, String)>> {
        let overall = || self.aggregates.iter().filter(|a| a.key.siblings.is_none());
        let by_sibling = || self.aggregates.iter().filter(|a| a.key.siblings.is_some());
        let mut d = Vec::new();
        for a in overall() {
            for (i, s) in a.ndcg.iter().enumerate() {
                d.push(vec![
                    a.key.method.to_string(),
                    (i + 1).to_string(),
                    fmt_f(s.mean),
                    fmt_f(s.std),
                    s.count.to_string(),
                ]);
            }
        }
        let e = by_sibling()
            .map(|a| {
                vec![
                    a.key.method.to_string(),
                    a.key.siblings.unwrap_or(0).to_string(),
                    fmt_f(a.n_paths.mean),
                    fmt_f(a.n_paths.std),
                    a.count.to_string(),
                ]
            })
            .collect();
        let f = by_sibling()
            .filter_map(|a| {
                a.fidelity.map(|s| {
                    vec![
                        a.key.method.to_string(),
                        a.key.siblings.unwrap_or(0).to_string(),
                        fmt_f(s.mean),
                        fmt_f(s.std),
                        s.count.to_string(),
                    ]
                })
            })
            .collect();
        Ok(vec![
            ("fig2d.csv".into(), csv_text(&["method", "k", "mean_ndcg", "std_ndcg", "queries"], d)?),
            ("fig2e.csv".into(), csv_text(&["method", "siblings", "mean_n_paths", "std_n_paths", "queries"], e)?),
            ("fig2f.csv".into(), csv_text(&["method", "siblings", "mean_fidelity", "std_fidelity", "queries"], f)?),
        ])
    }

    /// Fraction of explanations containing each path template.
    pub fn template_frequencies(&self, setting: Setting) -> Vec<(String, usize, f64)> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut total = 0;
        for r in self.records_in(setting) {
            total += 1;
            let mut ts: Vec<&str> = r.paths.iter().filter_map(|p| p.template.as_deref()).collect();
            ts.sort_unstable();
            ts.dedup();
            for t in ts {
                *counts.entry(t.to_owned()).or_insert(0) += 1;
            }
        }
        let mut rows: Vec<(String, usize, f64)> =
            counts.into_iter().map(|(t, c)| (t, c, c as f64 / total as f64)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows
    }

    fn tautology_csvs(&self) -> Result<Vec<(String, String)>> {
        let table = |s: Setting| -> Result<String> {
            let rows =
                self.template_frequencies(s).into_iter().map(|(t, c, f)| vec![t, c.to_string(), fmt_f(f)]).collect();
            csv_text(&["template", "explanations", "fraction"], rows)
        };
        Ok(vec![
            ("fig3a.csv".into(), table(Setting::InverseExcluded)?),
            ("fig3b.csv".into(), table(Setting::InverseExcludedWithSiblings)?),
        ])
    }
}
