use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub type Sym = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Sym),
    Var(String),
    /// String concatenation; only allowed in rule heads.
    Concat(Box<Term>, Box<Term>),
}

impl Term {
    pub fn constant(s: &str) -> Term {
        Term::Const(Arc::from(s))
    }

    pub fn var(s: &str) -> Term {
        Term::Var(s.to_string())
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Concat(a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }

    pub fn has_concat(&self) -> bool {
        matches!(self, Term::Concat(..))
    }
}

fn is_bare(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) if is_bare(c) => write!(f, "{c}"),
            Term::Const(c) => write!(f, "\"{}\"", c.replace('\\', "\\\\").replace('"', "\\\"")),
            Term::Var(v) => write!(f, "{v}"),
            Term::Concat(a, b) => write!(f, "concat({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, terms: Vec<Term>) -> Atom {
        Atom { predicate: predicate.to_string(), terms }
    }

    /// Ground atom from constant strings.
    pub fn fact(predicate: &str, args: &[&str]) -> Atom {
        Atom::new(predicate, args.iter().map(|a| Term::constant(a)).collect())
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.terms {
            t.vars(&mut out);
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::Const(_)))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn has_concat(&self) -> bool {
        self.head.terms.iter().any(Term::has_concat)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(".")
    }
}

/// Parsed program text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub facts: Vec<Atom>,
    pub queries: Vec<Vec<Atom>>,
}
