//! Parameterized families of learners, trained independently and ranked.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;

use super::learner::{LearnableSpec, Learner, TrainSummary};
use super::metrics::EvalReport;
use super::LearnError;
use crate::graph::{InstanceGraph, InstanceRef};

/// One learner per parameter value, in parameter order.
#[derive(Debug, Clone, Default)]
pub struct Family {
    members: Vec<(String, Learner)>,
}

/// Instantiates `template` once per parameter value.
pub fn make_family<F>(params: &[String], template: F) -> Result<Family, LearnError>
where
    F: Fn(&str) -> Result<LearnableSpec, LearnError>,
{
    let mut seen = HashSet::new();
    let mut members = Vec::with_capacity(params.len());
    for p in params {
        if !seen.insert(p.as_str()) {
            return Err(LearnError::DuplicateParameter(p.clone()));
        }
        members.push((p.clone(), Learner::new(template(p)?)));
    }
    Ok(Family { members })
}

impl Family {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[(String, Learner)] {
        &self.members
    }

    pub fn get(&self, param: &str) -> Option<&Learner> {
        self.members.iter().find(|(p, _)| p == param).map(|(_, l)| l)
    }

    pub fn get_mut(&mut self, param: &str) -> Option<&mut Learner> {
        self.members.iter_mut().find(|(p, _)| p == param).map(|(_, l)| l)
    }

    /// Trains every member on `roots`, in parallel.
    pub fn train(&mut self, graph: &InstanceGraph, roots: &[InstanceRef]) -> Result<Vec<TrainSummary>, LearnError> {
        if self.members.is_empty() {
            return Err(LearnError::EmptyFamily);
        }
        self.members.par_iter_mut().map(|(_, l)| l.train(graph, roots)).collect()
    }

    /// Evaluates every member on `roots`, in parallel.
    pub fn test(&self, graph: &InstanceGraph, roots: &[InstanceRef]) -> Result<Vec<(String, EvalReport)>, LearnError> {
        if self.members.is_empty() {
            return Err(LearnError::EmptyFamily);
        }
        self.members
            .par_iter()
            .map(|(p, l)| Ok((p.clone(), l.test(graph, roots)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub param: String,
    pub metric: Option<f64>,
    pub report: EvalReport,
}

/// Members sorted best first.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub entries: Vec<RankEntry>,
}

impl Ranking {
    pub fn best(&self) -> &RankEntry {
        &self.entries[0]
    }

    pub fn position(&self, param: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.param == param)
    }
}

/// Sorts reports by descending metric; undefined metrics rank last and
/// ties go to the lexically smaller parameter.
pub fn rank(reports: Vec<(String, EvalReport)>) -> Result<Ranking, LearnError> {
    if reports.is_empty() {
        return Err(LearnError::EmptyFamily);
    }
    let mut entries: Vec<RankEntry> = reports
        .into_iter()
        .map(|(param, report)| RankEntry { param, metric: report.metric(), report })
        .collect();
    entries.sort_by(|a, b| {
        let by_metric = match (a.metric, b.metric) {
            (Some(x), Some(y)) => y.partial_cmp(&x).unwrap_or(Ordering::Equal),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_metric.then_with(|| a.param.cmp(&b.param))
    });
    Ok(Ranking { entries })
}
