//! Hierarchies as DAGs of functional dependencies, with materialized
//! translation maps from finer to coarser attribute values.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VcaError};
use crate::relcore::table::Database;
use crate::value::Value;

/// `from -> to`: each `from` value determines one `to` value. `from` is finer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fd {
    pub from: String,
    pub to: String,
}

impl Fd {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Fd { from: from.into(), to: to.into() }
    }
}

/// Functional mapping from values of `fine` to values of `coarse`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationMap {
    pub fine: String,
    pub coarse: String,
    #[serde(with = "pairs_format")]
    pub pairs: BTreeMap<Value, Value>,
}

mod pairs_format {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::value::Value;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Value, Value>, s: S) -> Result<S::Ok, S::Error> {
        m.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Value, Value>, D::Error> {
        Ok(Vec::<(Value, Value)>::deserialize(d)?.into_iter().collect())
    }
}

impl TranslationMap {
    /// Build from observed (fine, coarse) pairs, rejecting non-functional data.
    pub fn from_pairs(
        fine: &str,
        coarse: &str,
        pairs: impl IntoIterator<Item = (Value, Value)>,
    ) -> Result<Self> {
        let mut seen: BTreeMap<Value, BTreeSet<Value>> = BTreeMap::new();
        for (f, c) in pairs {
            seen.entry(f).or_default().insert(c);
        }
        if let Some((value, coarse_values)) = seen.iter().find(|(_, cs)| cs.len() > 1) {
            return Err(VcaError::FdViolated {
                fine: fine.to_string(),
                coarse: coarse.to_string(),
                value: value.to_string(),
                coarse_values: coarse_values.iter().map(Value::to_string).collect(),
            });
        }
        Ok(TranslationMap {
            fine: fine.to_string(),
            coarse: coarse.to_string(),
            pairs: seen.into_iter().map(|(f, cs)| (f, cs.into_iter().next().unwrap())).collect(),
        })
    }

    pub fn identity(attr: &str, domain: impl IntoIterator<Item = Value>) -> Self {
        TranslationMap {
            fine: attr.to_string(),
            coarse: attr.to_string(),
            pairs: domain.into_iter().map(|v| (v.clone(), v)).collect(),
        }
    }

    pub fn lookup(&self, fine: &Value) -> Option<&Value> {
        self.pairs.get(fine)
    }

    /// `self` then `next`; fine values whose image is missing from `next` are dropped.
    pub fn then(&self, next: &TranslationMap) -> TranslationMap {
        TranslationMap {
            fine: self.fine.clone(),
            coarse: next.coarse.clone(),
            pairs: self
                .pairs
                .iter()
                .filter_map(|(f, c)| next.lookup(c).map(|cc| (f.clone(), cc.clone())))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// A set of FDs forming a DAG, with per-edge translation maps materialized
/// at registration so FD violations surface at load time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Hierarchy {
    pub fds: Vec<Fd>,
    /// attribute name -> table name hosting it
    pub attr_tables: BTreeMap<String, String>,
    #[serde(skip)]
    edges: BTreeMap<(String, String), TranslationMap>,
    #[serde(skip)]
    domains: BTreeMap<String, BTreeSet<Value>>,
}

impl Hierarchy {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validate the FDs against `db` and materialize one map per edge.
    ///
    /// An FD's map is read from a table that holds both attributes; an explicit
    /// `attr_tables` entry for the finer attribute selects that table.
    pub fn register(fds: Vec<Fd>, attr_tables: BTreeMap<String, String>, db: &Database) -> Result<Self> {
        for fd in &fds {
            if fd.from == fd.to {
                return Err(VcaError::CycleDetected(vec![fd.from.clone()]));
            }
            for attr in [&fd.from, &fd.to] {
                if db.hosts_of(attr).next().is_none() {
                    return Err(VcaError::UnknownAttribute(attr.clone()));
                }
            }
        }
        for (attr, table) in &attr_tables {
            let t = db.get(table)?;
            if t.schema.get(attr).is_none() {
                return Err(VcaError::UnknownAttribute(format!("{table}.{attr}")));
            }
        }
        check_acyclic(&fds)?;

        let mut edges = BTreeMap::new();
        let mut domains: BTreeMap<String, BTreeSet<Value>> = BTreeMap::new();
        for fd in &fds {
            let host = match attr_tables.get(&fd.from) {
                Some(name) => {
                    let t = db.get(name)?;
                    if t.schema.get(&fd.to).is_none() {
                        return Err(VcaError::NoPath { from: fd.from.clone(), to: fd.to.clone() });
                    }
                    t.clone()
                }
                None => db
                    .hosts_of(&fd.from)
                    .find(|t| t.schema.get(&fd.to).is_some())
                    .cloned()
                    .ok_or_else(|| VcaError::NoPath { from: fd.from.clone(), to: fd.to.clone() })?,
            };
            let fi = host.schema.index_of(&fd.from).unwrap();
            let ci = host.schema.index_of(&fd.to).unwrap();
            let map = TranslationMap::from_pairs(
                &fd.from,
                &fd.to,
                host.rows.iter().map(|r| (r[fi].clone(), r[ci].clone())),
            )?;
            edges.insert((fd.from.clone(), fd.to.clone()), map);
        }
        for fd in &fds {
            for attr in [&fd.from, &fd.to] {
                let dom = domains.entry(attr.clone()).or_default();
                for t in db.hosts_of(attr) {
                    dom.extend(t.distinct(attr).unwrap_or_default());
                }
            }
        }
        Ok(Hierarchy { fds, attr_tables, edges, domains })
    }

    pub fn is_empty(&self) -> bool {
        self.fds.is_empty()
    }

    fn successors<'a>(&'a self, attr: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.fds.iter().filter(move |fd| fd.from == attr).map(|fd| fd.to.as_str())
    }

    /// Shortest FD path from `from` to `to`, as a list of attributes.
    fn path(&self, from: &str, to: &str) -> Option<Vec<String>> {
        let mut prev: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        while let Some(a) = queue.pop_front() {
            if a == to {
                let mut path = vec![to.to_string()];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur.to_string());
                }
                path.reverse();
                return Some(path);
            }
            for b in self.successors(a) {
                if b != from && !prev.contains_key(b) {
                    prev.insert(b, a);
                    queue.push_back(b);
                }
            }
        }
        None
    }

    /// `a ↦ b`: there is a directed FD path from `a` to `b` (`a` is finer).
    pub fn ancestor(&self, a: &str, b: &str) -> bool {
        a != b && self.path(a, b).is_some()
    }

    /// Translation from `fine` values to `coarse` values, composed along the
    /// FD path. `(a, a)` yields the identity over `a`'s active domain.
    pub fn translation_map(&self, fine: &str, coarse: &str, db: &Database) -> Result<TranslationMap> {
        if fine == coarse {
            let domain = match self.domains.get(fine) {
                Some(d) => d.clone(),
                None => {
                    let mut d = BTreeSet::new();
                    for t in db.hosts_of(fine) {
                        d.extend(t.distinct(fine).unwrap_or_default());
                    }
                    if d.is_empty() && db.hosts_of(fine).next().is_none() {
                        return Err(VcaError::UnknownAttribute(fine.to_string()));
                    }
                    d
                }
            };
            return Ok(TranslationMap::identity(fine, domain));
        }
        let path = self
            .path(fine, coarse)
            .ok_or_else(|| VcaError::NoPath { from: fine.to_string(), to: coarse.to_string() })?;
        let mut map = self.edges[&(path[0].clone(), path[1].clone())].clone();
        for w in path[1..].windows(2) {
            map = map.then(&self.edges[&(w[0].clone(), w[1].clone())]);
        }
        Ok(map)
    }
}

fn check_acyclic(fds: &[Fd]) -> Result<()> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        fds: &'a [Fd],
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Result<()> {
        match marks.get(node) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Visiting) => {
                let start = stack.iter().position(|n| *n == node).unwrap_or(0);
                return Err(VcaError::CycleDetected(stack[start..].iter().map(|s| s.to_string()).collect()));
            }
            None => {}
        }
        marks.insert(node, Mark::Visiting);
        stack.push(node);
        for fd in fds.iter().filter(|fd| fd.from == node) {
            visit(&fd.to, fds, marks, stack)?;
        }
        stack.pop();
        marks.insert(node, Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    for fd in fds {
        visit(&fd.from, fds, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}
