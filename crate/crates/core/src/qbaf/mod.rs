//! Quantitative bipolar argumentation frameworks and their evaluation.
//!
//! A [`Qbaf`] is a set of arguments with base scores in `[0,1]`, connected by
//! disjoint attack and support relations. All frameworks built by this crate
//! are acyclic, so strengths are computed in a single pass over a topological
//! order of the arguments.

mod dot;
mod semantics;

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dot::to_dot;
pub use semantics::{
    agg_product, agg_sum, infl_dfquad, infl_qe, Aggregation, AggregationRule, Influence,
    InfluenceRule, SemanticsSpec,
};

/// Index of an argument within one [`Qbaf`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArgumentId(usize);

impl ArgumentId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Plain,
    /// An argument instantiating a critical question of a scheme.
    CriticalQuestion,
}

impl Role {
    fn is_plain(&self) -> bool {
        *self == Role::Plain
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    /// Unique key within the framework.
    #[serde(rename = "id")]
    pub key: String,
    pub label: String,
    pub base_score: f64,
    #[serde(default, skip_serializing_if = "Role::is_plain")]
    pub role: Role,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EdgeKind {
    Attack,
    Support,
}

/// A quantitative bipolar argumentation framework.
#[derive(Clone, Debug, Default)]
pub struct Qbaf {
    arguments: Vec<Argument>,
    index: HashMap<String, ArgumentId>,
    attacks: Vec<(ArgumentId, ArgumentId)>,
    supports: Vec<(ArgumentId, ArgumentId)>,
    edges: HashSet<(ArgumentId, ArgumentId)>,
    attackers: Vec<Vec<ArgumentId>>,
    supporters: Vec<Vec<ArgumentId>>,
}

impl Qbaf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_argument(
        &mut self,
        key: impl Into<String>,
        label: impl Into<String>,
        base_score: f64,
    ) -> Result<ArgumentId> {
        self.add_argument_with_role(key, label, base_score, Role::Plain)
    }

    pub fn add_argument_with_role(
        &mut self,
        key: impl Into<String>,
        label: impl Into<String>,
        base_score: f64,
        role: Role,
    ) -> Result<ArgumentId> {
        let key = key.into();
        if !(0.0..=1.0).contains(&base_score) {
            return Err(Error::InvalidQbaf(format!(
                "base score {base_score} of `{key}` outside [0,1]"
            )));
        }
        if self.index.contains_key(&key) {
            return Err(Error::InvalidQbaf(format!("duplicate argument `{key}`")));
        }
        let id = ArgumentId(self.arguments.len());
        self.index.insert(key.clone(), id);
        self.arguments.push(Argument {
            key,
            label: label.into(),
            base_score,
            role,
        });
        self.attackers.push(Vec::new());
        self.supporters.push(Vec::new());
        Ok(id)
    }

    pub fn add_attack(&mut self, attacker: ArgumentId, target: ArgumentId) -> Result<()> {
        self.add_edge(attacker, target, EdgeKind::Attack)
    }

    pub fn add_support(&mut self, supporter: ArgumentId, target: ArgumentId) -> Result<()> {
        self.add_edge(supporter, target, EdgeKind::Support)
    }

    fn add_edge(&mut self, from: ArgumentId, to: ArgumentId, kind: EdgeKind) -> Result<()> {
        let n = self.arguments.len();
        if from.0 >= n || to.0 >= n {
            return Err(Error::InvalidQbaf(format!(
                "edge endpoint out of range ({} -> {})",
                from.0, to.0
            )));
        }
        if !self.edges.insert((from, to)) {
            return Err(Error::InvalidQbaf(format!(
                "parallel edge {} -> {}",
                self.arguments[from.0].key, self.arguments[to.0].key
            )));
        }
        match kind {
            EdgeKind::Attack => {
                self.attacks.push((from, to));
                self.attackers[to.0].push(from);
            }
            EdgeKind::Support => {
                self.supports.push((from, to));
                self.supporters[to.0].push(from);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.arguments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arguments.is_empty()
    }

    pub fn id(&self, key: &str) -> Option<ArgumentId> {
        self.index.get(key).copied()
    }

    pub fn argument(&self, id: ArgumentId) -> &Argument {
        &self.arguments[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ArgumentId> + '_ {
        (0..self.arguments.len()).map(ArgumentId)
    }

    pub fn arguments(&self) -> &[Argument] {
        &self.arguments
    }

    pub fn attacks(&self) -> &[(ArgumentId, ArgumentId)] {
        &self.attacks
    }

    pub fn supports(&self) -> &[(ArgumentId, ArgumentId)] {
        &self.supports
    }

    pub fn attackers_of(&self, id: ArgumentId) -> &[ArgumentId] {
        &self.attackers[id.0]
    }

    pub fn supporters_of(&self, id: ArgumentId) -> &[ArgumentId] {
        &self.supporters[id.0]
    }

    /// Kahn's algorithm, seeded and drained in index order.
    pub fn topological_order(&self) -> Result<Vec<ArgumentId>> {
        let n = self.len();
        let mut children: Vec<Vec<ArgumentId>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for &(from, to) in self.attacks.iter().chain(&self.supports) {
            children[from.0].push(to);
            indegree[to.0] += 1;
        }
        let mut queue: VecDeque<ArgumentId> =
            self.ids().filter(|id| indegree[id.0] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(id) = queue.pop_front() {
            order.push(id);
            for &child in &children[id.0] {
                indegree[child.0] -= 1;
                if indegree[child.0] == 0 {
                    queue.push_back(child);
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        Err(self.cycle_edge(&indegree))
    }

    // Every argument left with positive indegree has a parent that is also
    // left, so walking parents must revisit some argument on a cycle.
    fn cycle_edge(&self, indegree: &[usize]) -> Error {
        let remaining = |id: &ArgumentId| indegree[id.0] > 0;
        let parent = |id: ArgumentId| {
            self.attackers[id.0]
                .iter()
                .chain(&self.supporters[id.0])
                .copied()
                .find(remaining)
                .expect("remaining argument has a remaining parent")
        };
        let start = self.ids().find(remaining).expect("cycle leaves arguments");
        let mut seen = HashSet::new();
        let mut current = start;
        while seen.insert(current) {
            current = parent(current);
        }
        let from = parent(current);
        Error::Cycle {
            from: self.arguments[from.0].key.clone(),
            to: self.arguments[current.0].key.clone(),
        }
    }

    /// Base score and strength lookups by key.
    pub fn strength_of(&self, strengths: &StrengthMap, key: &str) -> Option<f64> {
        self.id(key).map(|id| strengths.get(id))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&QbafJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<QbafJson>(text)?.try_into()
    }
}

/// Argument strengths, indexed by [`ArgumentId`].
#[derive(Clone, Debug, PartialEq)]
pub struct StrengthMap {
    values: Vec<f64>,
}

impl StrengthMap {
    pub fn get(&self, id: ArgumentId) -> f64 {
        self.values[id.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes the strength of every argument under `spec`.
pub fn evaluate(qbaf: &Qbaf, spec: SemanticsSpec) -> Result<StrengthMap> {
    let order = qbaf.topological_order()?;
    evaluate_in_order(qbaf, spec, &order)
}

/// Evaluates following a caller-supplied order, which must be a topological
/// order of `qbaf`.
pub fn evaluate_in_order(
    qbaf: &Qbaf,
    spec: SemanticsSpec,
    order: &[ArgumentId],
) -> Result<StrengthMap> {
    let n = qbaf.len();
    if order.len() != n {
        return Err(Error::InvalidQbaf(format!(
            "order has {} entries for {n} arguments",
            order.len()
        )));
    }
    let mut done = vec![false; n];
    let mut values = vec![0.0; n];
    let mut att = Vec::new();
    let mut sup = Vec::new();
    for &id in order {
        if id.0 >= n || done[id.0] {
            return Err(Error::InvalidQbaf(format!("order repeats or skips argument {}", id.0)));
        }
        att.clear();
        sup.clear();
        for &a in qbaf.attackers_of(id) {
            if !done[a.0] {
                return Err(not_topological(qbaf, a, id));
            }
            att.push(values[a.0]);
        }
        for &s in qbaf.supporters_of(id) {
            if !done[s.0] {
                return Err(not_topological(qbaf, s, id));
            }
            sup.push(values[s.0]);
        }
        values[id.0] = spec.update(qbaf.argument(id).base_score, &att, &sup)?;
        done[id.0] = true;
    }
    Ok(StrengthMap { values })
}

fn not_topological(qbaf: &Qbaf, from: ArgumentId, to: ArgumentId) -> Error {
    Error::InvalidQbaf(format!(
        "order visits `{}` before its parent `{}`",
        qbaf.argument(to).key,
        qbaf.argument(from).key
    ))
}

#[derive(Serialize, Deserialize)]
struct QbafJson {
    arguments: Vec<Argument>,
    attacks: Vec<(String, String)>,
    supports: Vec<(String, String)>,
}

impl From<&Qbaf> for QbafJson {
    fn from(q: &Qbaf) -> Self {
        let names = |edges: &[(ArgumentId, ArgumentId)]| {
            edges
                .iter()
                .map(|&(a, b)| (q.argument(a).key.clone(), q.argument(b).key.clone()))
                .collect()
        };
        QbafJson {
            arguments: q.arguments.clone(),
            attacks: names(&q.attacks),
            supports: names(&q.supports),
        }
    }
}

impl TryFrom<QbafJson> for Qbaf {
    type Error = Error;

    fn try_from(json: QbafJson) -> Result<Self> {
        let mut q = Qbaf::new();
        for arg in json.arguments {
            q.add_argument_with_role(arg.key, arg.label, arg.base_score, arg.role)?;
        }
        let lookup = |q: &Qbaf, key: &str| {
            q.id(key)
                .ok_or_else(|| Error::InvalidQbaf(format!("edge names unknown argument `{key}`")))
        };
        for (a, b) in &json.attacks {
            let (a, b) = (lookup(&q, a)?, lookup(&q, b)?);
            q.add_attack(a, b)?;
        }
        for (a, b) in &json.supports {
            let (a, b) = (lookup(&q, a)?, lookup(&q, b)?);
            q.add_support(a, b)?;
        }
        Ok(q)
    }
}
