use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use super::syntax::{Atom, Rule, Sym, Term};
use super::KgError;

pub type Tuple = Vec<Sym>;

/// Append-only relation with per-column value indexes.
#[derive(Debug, Clone, Default)]
struct Relation {
    arity: usize,
    tuples: Vec<Tuple>,
    set: HashSet<Tuple>,
    index: Vec<HashMap<Sym, Vec<usize>>>,
    /// Rows below this belong to the previous round; rows in
    /// `stable..delta` are new in the current round.
    stable: usize,
    delta: usize,
}

impl Relation {
    fn new(arity: usize) -> Relation {
        Relation { arity, index: vec![HashMap::new(); arity], ..Default::default() }
    }

    fn insert(&mut self, t: Tuple) -> bool {
        if self.set.contains(&t) {
            return false;
        }
        let row = self.tuples.len();
        for (col, v) in t.iter().enumerate() {
            self.index[col].entry(v.clone()).or_default().push(row);
        }
        self.set.insert(t.clone());
        self.tuples.push(t);
        true
    }

    /// Row ids in `[lo, hi)` whose column `col` equals `v`.
    fn rows_matching(&self, col: usize, v: &Sym, lo: usize, hi: usize) -> &[usize] {
        match self.index[col].get(v) {
            None => &[],
            Some(rows) => {
                let a = rows.partition_point(|r| *r < lo);
                let b = rows.partition_point(|r| *r < hi);
                &rows[a..b]
            }
        }
    }
}

/// Set of ground atoms, grouped by predicate with fixed arity.
#[derive(Debug, Clone, Default)]
pub struct FactBase {
    relations: BTreeMap<String, Relation>,
    /// Count of atoms that were given rather than derived.
    base_facts: usize,
}

impl PartialEq for FactBase {
    fn eq(&self, other: &Self) -> bool {
        self.to_atoms() == other.to_atoms() && self.predicates() == other.predicates()
    }
}

impl FactBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a predicate so queries over it are valid even when empty.
    pub fn declare(&mut self, predicate: &str, arity: usize) -> Result<(), KgError> {
        match self.relations.get(predicate) {
            Some(r) if r.arity != arity => Err(KgError::ArityMismatch { predicate: predicate.into(), expected: r.arity, found: arity }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(predicate.to_string(), Relation::new(arity));
                Ok(())
            }
        }
    }

    pub fn insert(&mut self, atom: &Atom) -> Result<bool, KgError> {
        let tuple: Tuple = atom
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => Ok(c.clone()),
                _ => Err(KgError::NonGroundFact(atom.to_string())),
            })
            .collect::<Result<_, _>>()?;
        self.declare(&atom.predicate, tuple.len())?;
        let added = self.relations.get_mut(&atom.predicate).unwrap().insert(tuple);
        if added {
            self.base_facts += 1;
        }
        Ok(added)
    }

    pub fn add(&mut self, predicate: &str, args: &[&str]) {
        self.insert(&Atom::fact(predicate, args)).expect("consistent arity");
    }

    pub fn len(&self) -> usize {
        self.relations.values().map(|r| r.tuples.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn base_len(&self) -> usize {
        self.base_facts
    }

    pub fn predicates(&self) -> BTreeMap<String, usize> {
        self.relations.iter().map(|(k, r)| (k.clone(), r.arity)).collect()
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.relations.get(predicate).map(|r| r.arity)
    }

    pub fn contains(&self, predicate: &str, args: &[&str]) -> bool {
        let t: Tuple = args.iter().map(|a| Arc::from(*a)).collect();
        self.relations.get(predicate).is_some_and(|r| r.set.contains(&t))
    }

    /// Tuples of one predicate, sorted.
    pub fn tuples(&self, predicate: &str) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = self
            .relations
            .get(predicate)
            .map(|r| r.tuples.iter().map(|t| t.iter().map(|s| s.to_string()).collect()).collect())
            .unwrap_or_default();
        out.sort();
        out
    }

    /// All atoms in canonical order.
    pub fn to_atoms(&self) -> BTreeSet<Atom> {
        self.relations
            .iter()
            .flat_map(|(p, r)| r.tuples.iter().map(move |t| Atom::new(p, t.iter().map(|s| Term::Const(s.clone())).collect())))
            .collect()
    }
}

/// Iteration cap applied when rule heads build new constants.
pub const DEFAULT_DEPTH_CAP: usize = 64;

fn check_rule(rule: &Rule, base: &FactBase, idb: &BTreeMap<String, usize>) -> Result<(), KgError> {
    if rule.body.is_empty() {
        return Err(KgError::UnsafeRule(format!("{} has an empty body", rule.head)));
    }
    let body_vars: BTreeSet<String> = rule.body.iter().flat_map(Atom::vars).collect();
    if let Some(v) = rule.head.vars().into_iter().find(|v| !body_vars.contains(v)) {
        return Err(KgError::UnsafeRule(v));
    }
    for atom in rule.body.iter().chain([&rule.head]) {
        let arity = base.arity(&atom.predicate).or_else(|| idb.get(&atom.predicate).copied());
        match arity {
            Some(a) if a != atom.terms.len() => {
                return Err(KgError::ArityMismatch { predicate: atom.predicate.clone(), expected: a, found: atom.terms.len() })
            }
            None => return Err(KgError::UnknownPredicate(atom.predicate.clone())),
            _ => {}
        }
    }
    Ok(())
}

type Bindings = HashMap<String, Sym>;

fn eval_term(t: &Term, b: &Bindings) -> Sym {
    match t {
        Term::Const(c) => c.clone(),
        Term::Var(v) => b[v].clone(),
        Term::Concat(x, y) => {
            let mut s = eval_term(x, b).to_string();
            s.push_str(&eval_term(y, b));
            Arc::from(s)
        }
    }
}

#[derive(Clone, Copy)]
enum Range {
    Old,
    Delta,
    All,
}

impl Range {
    fn bounds(self, r: &Relation) -> (usize, usize) {
        match self {
            Range::Old => (0, r.stable),
            Range::Delta => (r.stable, r.delta),
            Range::All => (0, r.tuples.len()),
        }
    }
}

/// Extends `bindings` with every match of `atoms[i..]`, calling `emit` on complete ones.
fn join(
    rels: &BTreeMap<String, Relation>,
    atoms: &[Atom],
    ranges: &[Range],
    i: usize,
    bindings: &mut Bindings,
    emit: &mut dyn FnMut(&Bindings),
) {
    if i == atoms.len() {
        emit(bindings);
        return;
    }
    let atom = &atoms[i];
    let Some(rel) = rels.get(&atom.predicate) else { return };
    let (lo, hi) = ranges[i].bounds(rel);
    if lo >= hi {
        return;
    }
    let bound_col = atom.terms.iter().enumerate().find_map(|(c, t)| match t {
        Term::Const(v) => Some((c, v.clone())),
        Term::Var(v) => bindings.get(v).map(|s| (c, s.clone())),
        Term::Concat(..) => None,
    });
    let candidates: Box<dyn Iterator<Item = usize>> = match &bound_col {
        Some((c, v)) => Box::new(rel.rows_matching(*c, v, lo, hi).iter().copied()),
        None => Box::new(lo..hi),
    };
    for row in candidates {
        let tuple = &rel.tuples[row];
        let mut added: Vec<&str> = Vec::new();
        let mut ok = true;
        for (t, v) in atom.terms.iter().zip(tuple) {
            match t {
                Term::Const(c) => {
                    if c != v {
                        ok = false;
                        break;
                    }
                }
                Term::Var(name) => match bindings.get(name) {
                    Some(b) if b != v => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        bindings.insert(name.clone(), v.clone());
                        added.push(name);
                    }
                },
                Term::Concat(..) => unreachable!("concat rejected in bodies by the parser"),
            }
        }
        if ok {
            join(rels, atoms, ranges, i + 1, bindings, emit);
        }
        for name in added {
            bindings.remove(name);
        }
    }
}

/// Least fixpoint of `rules` over `base` by semi-naive iteration.
///
/// Programs whose heads use `concat` stop after `depth_cap` rounds with
/// `DepthExceeded` if they have not converged.
pub fn evaluate_with_cap(base: &FactBase, rules: &[Rule], depth_cap: usize) -> Result<FactBase, KgError> {
    let mut idb: BTreeMap<String, usize> = BTreeMap::new();
    for r in rules {
        let arity = r.head.terms.len();
        if let Some(prev) = idb.insert(r.head.predicate.clone(), arity) {
            if prev != arity {
                return Err(KgError::ArityMismatch { predicate: r.head.predicate.clone(), expected: prev, found: arity });
            }
        }
    }
    for r in rules {
        check_rule(r, base, &idb)?;
    }
    let capped = rules.iter().any(Rule::has_concat);

    let mut fb = base.clone();
    for (p, a) in &idb {
        fb.declare(p, *a)?;
    }
    for r in fb.relations.values_mut() {
        r.stable = 0;
        r.delta = r.tuples.len();
    }
    let mut round = 0;
    loop {
        let any_delta = fb.relations.values().any(|r| r.delta > r.stable);
        if !any_delta {
            break;
        }
        round += 1;
        if capped && round > depth_cap {
            return Err(KgError::DepthExceeded(depth_cap));
        }
        let mut fresh: Vec<(String, Tuple)> = Vec::new();
        for rule in rules {
            let n = rule.body.len();
            for d in 0..n {
                let ranges: Vec<Range> =
                    (0..n).map(|j| if j < d { Range::Old } else if j == d { Range::Delta } else { Range::All }).collect();
                let mut bindings = Bindings::new();
                join(&fb.relations, &rule.body, &ranges, 0, &mut bindings, &mut |b| {
                    let t: Tuple = rule.head.terms.iter().map(|t| eval_term(t, b)).collect();
                    fresh.push((rule.head.predicate.clone(), t));
                });
            }
        }
        for r in fb.relations.values_mut() {
            r.stable = r.delta;
        }
        for (p, t) in fresh {
            fb.relations.get_mut(&p).expect("declared").insert(t);
        }
        for r in fb.relations.values_mut() {
            r.delta = r.tuples.len();
        }
    }
    for r in fb.relations.values_mut() {
        r.stable = r.tuples.len();
        r.delta = r.tuples.len();
    }
    Ok(fb)
}

pub fn evaluate(base: &FactBase, rules: &[Rule]) -> Result<FactBase, KgError> {
    evaluate_with_cap(base, rules, DEFAULT_DEPTH_CAP)
}

/// One answer: values of the query variables in order of first appearance.
pub type Binding = Vec<(String, String)>;

/// Answers a conjunctive query. Results are deduplicated and sorted.
pub fn query(fb: &FactBase, atoms: &[Atom]) -> Result<Vec<Binding>, KgError> {
    for a in atoms {
        match fb.arity(&a.predicate) {
            None => return Err(KgError::UnknownPredicate(a.predicate.clone())),
            Some(n) if n != a.terms.len() => {
                return Err(KgError::ArityMismatch { predicate: a.predicate.clone(), expected: n, found: a.terms.len() })
            }
            _ => {}
        }
        if a.terms.iter().any(Term::has_concat) {
            return Err(KgError::Syntax { line: 1, column: 1, message: "concat is not allowed in queries".into() });
        }
    }
    let mut order: Vec<String> = Vec::new();
    for a in atoms {
        for t in &a.terms {
            if let Term::Var(v) = t {
                if !v.starts_with('_') && !order.contains(v) {
                    order.push(v.clone());
                }
            }
        }
    }
    let ranges = vec![Range::All; atoms.len()];
    let mut results: BTreeSet<Vec<String>> = BTreeSet::new();
    join(&fb.relations, atoms, &ranges, 0, &mut Bindings::new(), &mut |b| {
        results.insert(order.iter().map(|v| b[v].to_string()).collect());
    });
    Ok(results.into_iter().map(|vals| order.iter().cloned().zip(vals).collect()).collect())
}
