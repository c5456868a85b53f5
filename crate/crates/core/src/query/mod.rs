//! Query tables (the whole upload of a retrieval) and answer evaluation.

pub mod text;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::store::{stream_rng, Interleavers, MessageStore, ProblemParams, Stream};

pub use text::{format_csv, format_equation, format_text, parse_text};

/// `coeff * x_message(index)`, both indices 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub message: usize,
    pub index: usize,
    pub coeff: u64,
}

impl Term {
    pub fn unit(message: usize, index: usize) -> Self {
        Self { message, index, coeff: 1 }
    }
}

/// Position of a query inside its database's canonical list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryRef {
    pub db: usize,
    pub pos: usize,
}

/// One downloaded linear combination plus construction metadata.
///
/// `round` counts from 1, `stage` from 0; `category` is the number of desired
/// messages among the terms. `side_info` points at the undesired-only query,
/// answered by another database, whose value cancels this query's undesired
/// part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub terms: Vec<Term>,
    pub round: usize,
    pub stage: usize,
    pub category: usize,
    pub side_info: Option<QueryRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// Two rounds, MDS-coded second round.
    Mds,
    /// Multi-round stages driven by the stage recurrence.
    Rounds,
    /// Negative control: fetches desired symbols only.
    DesiredOnly,
    /// Negative control: MDS round two without undesired side information.
    NoSymmetry,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Mds => "mds",
            SchemeKind::Rounds => "rounds",
            SchemeKind::DesiredOnly => "desired-only",
            SchemeKind::NoSymmetry => "no-symmetry",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mds" => Ok(SchemeKind::Mds),
            "rounds" => Ok(SchemeKind::Rounds),
            "desired-only" => Ok(SchemeKind::DesiredOnly),
            "no-symmetry" => Ok(SchemeKind::NoSymmetry),
            other => Err(Error::InvalidParams(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Per-database query lists in construction order, plus the shuffled order in
/// which each database actually receives them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTable {
    pub scheme: SchemeKind,
    pub params: ProblemParams,
    pub desired: Vec<usize>,
    pub databases: Vec<Vec<Query>>,
    pub wire_order: Vec<Vec<usize>>,
}

impl QueryTable {
    /// Table with identity wire order; call [`QueryTable::shuffle`] to randomize.
    pub fn new(scheme: SchemeKind, params: ProblemParams, desired: Vec<usize>, databases: Vec<Vec<Query>>) -> Self {
        let wire_order = databases.iter().map(|qs| (0..qs.len()).collect()).collect();
        Self {
            scheme,
            params,
            desired,
            databases,
            wire_order,
        }
    }

    /// Uniformly shuffles the order each database receives its queries in.
    pub fn shuffle(&mut self, seed: u64) {
        let mut rng = stream_rng(seed, Stream::Shuffle);
        for order in &mut self.wire_order {
            order.shuffle(&mut rng);
        }
    }

    pub fn query(&self, r: QueryRef) -> &Query {
        &self.databases[r.db][r.pos]
    }

    /// Queries of database `db` in the order the database sees them.
    pub fn wire_queries(&self, db: usize) -> impl Iterator<Item = &Query> {
        self.wire_order[db].iter().map(move |&p| &self.databases[db][p])
    }

    pub fn per_db_downloads(&self) -> Vec<usize> {
        self.databases.iter().map(Vec::len).collect()
    }

    pub fn total_downloads(&self) -> usize {
        self.databases.iter().map(Vec::len).sum()
    }

    pub fn is_desired(&self, m: usize) -> bool {
        self.desired.binary_search(&m).is_ok()
    }

    pub fn check_bounds(&self) -> Result<()> {
        let p = &self.params;
        for (db, qs) in self.databases.iter().enumerate() {
            for (pos, q) in qs.iter().enumerate() {
                for t in &q.terms {
                    if t.message >= p.messages || t.index >= p.message_len {
                        return Err(Error::IndexOutOfRange(format!(
                            "database {} query {}: message {} index {} (M={}, L={})",
                            db + 1,
                            pos + 1,
                            t.message + 1,
                            t.index + 1,
                            p.messages,
                            p.message_len
                        )));
                    }
                    if t.coeff % p.modulus == 0 {
                        return Err(Error::InvalidParams(format!(
                            "database {} query {} has a zero coefficient",
                            db + 1,
                            pos + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Answer strings, aligned with each database's construction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSet {
    pub databases: Vec<Vec<u64>>,
}

impl AnswerSet {
    pub fn get(&self, r: QueryRef) -> u64 {
        self.databases[r.db][r.pos]
    }
}

/// Desired symbols recovered by a decoder, in interleaved order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub desired: Vec<usize>,
    pub symbols: Vec<Vec<u64>>,
}

impl Decoded {
    /// Undoes the interleavers, giving the stored message contents.
    pub fn messages(&self, interleavers: &Interleavers) -> Vec<Vec<u64>> {
        self.desired
            .iter()
            .zip(&self.symbols)
            .map(|(&m, x)| interleavers.deinterleave(m, x))
            .collect()
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.iter().map(Vec::len).sum()
    }
}

/// Evaluates one query against a database replica.
pub fn evaluate(query: &Query, store: &MessageStore) -> u64 {
    let f = store.params().field();
    query
        .terms
        .iter()
        .fold(0, |acc, t| f.add(acc, f.mul(f.reduce(t.coeff), store.interleaved(t.message, t.index))))
}

/// Every database evaluates its queries against its own (identical) replica.
pub fn answer(table: &QueryTable, store: &MessageStore) -> Result<AnswerSet> {
    if table.params.messages != store.params().messages
        || table.params.message_len != store.params().message_len
        || table.params.modulus != store.params().modulus
    {
        return Err(Error::DimensionMismatch("query table and store disagree on (M, L, q)".into()));
    }
    table.check_bounds()?;
    let databases = table
        .databases
        .par_iter()
        .map(|qs| qs.iter().map(|q| evaluate(q, store)).collect())
        .collect();
    Ok(AnswerSet { databases })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::generate_store;
    use proptest::prelude::*;

    fn q(terms: Vec<Term>) -> Query {
        Query {
            terms,
            round: 1,
            stage: 0,
            category: 0,
            side_info: None,
        }
    }

    fn setup() -> (ProblemParams, MessageStore) {
        let p = ProblemParams::new(3, 2, 2, 5, 4).unwrap();
        let s = generate_store(&p, 11);
        (p, s)
    }

    #[test]
    fn empty_table_gives_empty_answers() {
        let (p, s) = setup();
        let t = QueryTable::new(SchemeKind::Mds, p, vec![0, 1], vec![vec![], vec![]]);
        assert_eq!(answer(&t, &s).unwrap().databases, vec![Vec::<u64>::new(), vec![]]);
    }

    #[test]
    fn identity_query_reads_symbol() {
        let (p, s) = setup();
        let t = QueryTable::new(SchemeKind::Mds, p, vec![0, 1], vec![vec![q(vec![Term::unit(0, 0)])], vec![]]);
        assert_eq!(answer(&t, &s).unwrap().databases[0], vec![s.interleaved(0, 0)]);
    }

    #[test]
    fn out_of_range_terms_rejected() {
        let (p, s) = setup();
        let t = QueryTable::new(SchemeKind::Mds, p, vec![0, 1], vec![vec![q(vec![Term::unit(0, 4)])], vec![]]);
        assert!(matches!(answer(&t, &s), Err(Error::IndexOutOfRange(_))));
        let t = QueryTable::new(SchemeKind::Mds, p, vec![0, 1], vec![vec![q(vec![Term::unit(3, 0)])], vec![]]);
        assert!(matches!(answer(&t, &s), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn replicas_answer_identically() {
        let (p, s) = setup();
        let query = q(vec![Term { message: 0, index: 2, coeff: 3 }, Term::unit(2, 1)]);
        let t = QueryTable::new(SchemeKind::Mds, p, vec![0, 1], vec![vec![query.clone()], vec![query]]);
        let a = answer(&t, &s).unwrap();
        assert_eq!(a.databases[0], a.databases[1]);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let (p, _) = setup();
        let qs: Vec<Query> = (0..4).map(|i| q(vec![Term::unit(0, i)])).collect();
        let mut t = QueryTable::new(SchemeKind::Mds, p, vec![0, 1], vec![qs.clone(), qs]);
        t.shuffle(5);
        for order in &t.wire_order {
            let mut o = order.clone();
            o.sort_unstable();
            assert_eq!(o, vec![0, 1, 2, 3]);
        }
    }

    proptest! {
        #[test]
        fn answers_are_linear(
            seed in 0u64..1000,
            alpha in 0u64..5,
            t1 in prop::collection::vec((0usize..3, 0usize..4, 1u64..5), 1..4),
            t2 in prop::collection::vec((0usize..3, 0usize..4, 1u64..5), 1..4),
        ) {
            let p = ProblemParams::new(3, 2, 2, 5, 4).unwrap();
            let s = generate_store(&p, seed);
            let f = p.field();
            let mk = |v: &[(usize, usize, u64)], scale: u64| q(v.iter().map(|&(m, i, c)| Term { message: m, index: i, coeff: f.mul(c, scale) }).collect());
            let q1 = mk(&t1, 1);
            let q2 = mk(&t2, 1);
            let mut combined = mk(&t1, alpha);
            combined.terms.extend(q2.terms.iter().copied());
            let lhs = evaluate(&combined, &s);
            let rhs = f.add(f.mul(alpha, evaluate(&q1, &s)), evaluate(&q2, &s));
            prop_assert_eq!(lhs, rhs);
        }
    }
}
