//! Two-round scheme with MDS-coded second round, rate `PN / (PN + M - P)`.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::gf::{next_prime_above, rs_generator, solve_linear, FieldMatrix};
use crate::query::{AnswerSet, Decoded, Query, QueryTable, SchemeKind, Term};
use crate::store::{stream_rng, ProblemParams, RetrievalRequest, Stream};
use crate::Rational;

/// Parameters for this scheme: `L = N^2`, default `q` the smallest prime above `M`.
pub fn mds_params(messages: usize, desired: usize, databases: usize, modulus: Option<u64>) -> Result<ProblemParams> {
    let q = modulus.unwrap_or_else(|| next_prime_above(messages as u64));
    if q <= messages as u64 {
        return Err(Error::FieldTooSmall { q, messages });
    }
    ProblemParams::new(messages, desired, databases, q, databases * databases)
}

/// Generator plus one column permutation per side-information group.
///
/// `perms[g][m]` is the generator column that message `m` multiplies in the
/// `g`-th group of every database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsPlan {
    pub generator: FieldMatrix,
    pub perms: Vec<Vec<usize>>,
}

impl MdsPlan {
    /// Draws the `N - 1` permutations from the seed's permutation stream.
    pub fn random(params: &ProblemParams, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, Stream::Permutation);
        let perms = (1..params.databases)
            .map(|_| {
                let mut p: Vec<usize> = (0..params.messages).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        Self::with_perms(params, perms)
    }

    pub fn with_perms(params: &ProblemParams, perms: Vec<Vec<usize>>) -> Result<Self> {
        let generator = rs_generator(params.desired, params.messages, params.modulus)?;
        if perms.len() + 1 != params.databases {
            return Err(Error::DimensionMismatch(format!(
                "need {} permutations, got {}",
                params.databases - 1,
                perms.len()
            )));
        }
        for p in &perms {
            let mut s = p.clone();
            s.sort_unstable();
            if s != (0..params.messages).collect::<Vec<_>>() {
                return Err(Error::InvalidParams(format!("{p:?} is not a permutation")));
            }
        }
        Ok(Self { generator, perms })
    }

    /// Coefficient of message `m` in row `r` of group `g`.
    pub fn coeff(&self, g: usize, r: usize, m: usize) -> u64 {
        self.generator.at(r, self.perms[g][m])
    }
}

/// Block-diagonal encoding matrix seen by a database: identity for round one,
/// then the generator columns landing on the desired messages for each group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivacySignatureMatrix {
    pub matrix: FieldMatrix,
}

impl PrivacySignatureMatrix {
    pub fn new(plan: &MdsPlan, desired: &[usize]) -> Self {
        let p = desired.len();
        let blocks = plan.perms.len() + 1;
        let field = plan.generator.field();
        let mut h = FieldMatrix::zeros(p * blocks, p * blocks, field);
        for i in 0..p {
            h.set(i, i, 1);
        }
        for g in 0..plan.perms.len() {
            let off = p * (g + 1);
            for r in 0..p {
                for (c, &m) in desired.iter().enumerate() {
                    h.set(off + r, off + c, plan.coeff(g, r, m));
                }
            }
        }
        Self { matrix: h }
    }

    /// The `g`-th coded block, `G S_g` restricted to the desired columns.
    pub fn block(&self, g: usize, p: usize) -> Vec<Vec<u64>> {
        let off = p * (g + 1);
        (0..p).map(|r| self.matrix.row(off + r)[off..off + p].to_vec()).collect()
    }
}

/// Fresh desired index used by database `n` in group `g`.
fn fresh_index(n: usize, g: usize, databases: usize) -> usize {
    databases + n * (databases - 1) + g
}

pub fn mds_build_queries(params: &ProblemParams, request: &RetrievalRequest) -> Result<QueryTable> {
    let plan = MdsPlan::random(params, request.seed)?;
    let mut table = mds_build_with_plan(params, request, &plan)?;
    table.shuffle(request.seed);
    Ok(table)
}

/// Unshuffled table for an explicit plan.
pub fn mds_build_with_plan(params: &ProblemParams, request: &RetrievalRequest, plan: &MdsPlan) -> Result<QueryTable> {
    let (m_count, n_count) = (params.messages, params.databases);
    if params.modulus <= m_count as u64 {
        return Err(Error::FieldTooSmall {
            q: params.modulus,
            messages: m_count,
        });
    }
    if params.message_len != n_count * n_count {
        return Err(Error::InvalidParams(format!(
            "this scheme needs L = N^2 = {}, got {}",
            n_count * n_count,
            params.message_len
        )));
    }
    let mut databases = Vec::with_capacity(n_count);
    for n in 0..n_count {
        let mut qs: Vec<Query> = (0..m_count)
            .map(|m| Query {
                terms: vec![Term::unit(m, n)],
                round: 1,
                stage: 0,
                category: usize::from(request.is_desired(m)),
                side_info: None,
            })
            .collect();
        let others = (0..n_count).filter(|&j| j != n);
        for (g, j) in others.enumerate() {
            let fresh = fresh_index(n, g, n_count);
            for r in 0..params.desired {
                let terms: Vec<Term> = (0..m_count)
                    .filter_map(|m| {
                        let coeff = plan.coeff(g, r, m);
                        let index = if request.is_desired(m) { fresh } else { j };
                        (coeff != 0).then_some(Term { message: m, index, coeff })
                    })
                    .collect();
                let category = terms.iter().filter(|t| request.is_desired(t.message)).count();
                qs.push(Query {
                    terms,
                    round: 2,
                    stage: g,
                    category,
                    side_info: None,
                });
            }
        }
        databases.push(qs);
    }
    Ok(QueryTable::new(SchemeKind::Mds, *params, request.desired().to_vec(), databases))
}

/// Peels the table block by block in round order: known symbols are
/// subtracted, and each `(round, database, stage)` block is solved on its own.
pub fn block_decode(table: &QueryTable, answers: &AnswerSet) -> Result<Decoded> {
    let field = table.params.field();
    let mut blocks: BTreeMap<(usize, usize, usize), Vec<&Query>> = BTreeMap::new();
    let mut values: BTreeMap<(usize, usize, usize), Vec<u64>> = BTreeMap::new();
    for (db, qs) in table.databases.iter().enumerate() {
        for (pos, q) in qs.iter().enumerate() {
            let key = (q.round, db, q.stage);
            blocks.entry(key).or_default().push(q);
            values.entry(key).or_default().push(answers.databases[db][pos]);
        }
    }
    let mut known: HashMap<(usize, usize), u64> = HashMap::new();
    for (key, qs) in &blocks {
        let mut vars: Vec<(usize, usize)> = Vec::new();
        let mut rows = Vec::with_capacity(qs.len());
        let mut rhs = Vec::with_capacity(qs.len());
        for (q, &a) in qs.iter().zip(&values[key]) {
            let mut b = a;
            let mut row: Vec<(usize, u64)> = Vec::new();
            for t in &q.terms {
                let c = field.reduce(t.coeff);
                match known.get(&(t.message, t.index)) {
                    Some(&v) => b = field.sub(b, field.mul(c, v)),
                    None => {
                        let k = vars.iter().position(|&v| v == (t.message, t.index)).unwrap_or_else(|| {
                            vars.push((t.message, t.index));
                            vars.len() - 1
                        });
                        row.push((k, c));
                    }
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        if vars.is_empty() {
            if rhs.iter().any(|&b| b != 0) {
                return Err(Error::DecodeMismatch(format!("redundant block {key:?} disagrees with earlier symbols")));
            }
            continue;
        }
        let mut a = FieldMatrix::zeros(rows.len(), vars.len(), field);
        for (r, row) in rows.iter().enumerate() {
            for &(k, c) in row {
                a.set(r, k, field.add(a.at(r, k), c));
            }
        }
        let sol = solve_linear(&a, &rhs).map_err(|_| Error::DecodeMismatch(format!("block {key:?} is inconsistent")))?;
        for (k, &v) in vars.iter().enumerate() {
            if sol.determined[k] {
                known.insert(v, sol.particular[k]);
            }
        }
    }
    collect_desired(table, |m, i| known.get(&(m, i)).copied())
}

/// Gathers every desired coordinate, failing if any is missing.
pub(crate) fn collect_desired(table: &QueryTable, lookup: impl Fn(usize, usize) -> Option<u64>) -> Result<Decoded> {
    let len = table.params.message_len;
    let mut missing = 0;
    let symbols = table
        .desired
        .iter()
        .map(|&m| {
            (0..len)
                .map(|i| {
                    lookup(m, i).unwrap_or_else(|| {
                        missing += 1;
                        0
                    })
                })
                .collect()
        })
        .collect();
    if missing > 0 {
        return Err(Error::DesiredUndetermined { count: missing });
    }
    Ok(Decoded {
        desired: table.desired.clone(),
        symbols,
    })
}

pub fn mds_decode(table: &QueryTable, answers: &AnswerSet, request: &RetrievalRequest) -> Result<Decoded> {
    if table.desired != request.desired() {
        return Err(Error::DecodeMismatch("table was built for a different desired set".into()));
    }
    block_decode(table, answers)
}

pub fn mds_rate(params: &ProblemParams) -> Rational {
    let (m, p, n) = (params.messages as i64, params.desired as i64, params.databases as i64);
    Rational::new((p * n).into(), (m - p + p * n).into())
}
