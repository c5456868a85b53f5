//! Multi-round scheme driven by a [`StagePlan`].
//!
//! Round `i` downloads `alpha_i` stages of sums over every `i`-subset `S` of
//! the messages. With `K = S ∩ desired` and `k = |K|`:
//!
//! * `k = 0`: a sum of fresh undesired symbols, kept as side information for
//!   the other databases;
//! * `k >= 1`: the undesired part of `S` is copied from a side-information sum
//!   downloaded `k` rounds earlier at another database, one member of `K`
//!   gets a fresh symbol, and the other `k - 1` reuse symbols already decoded
//!   from other databases.

use std::collections::{BTreeMap, HashMap, VecDeque};

use itertools::Itertools;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::mds::collect_desired;
use crate::plan::StagePlan;
use crate::query::{AnswerSet, Decoded, Query, QueryRef, QueryTable, SchemeKind, Term};
use crate::store::{ProblemParams, RetrievalRequest};

/// Parameters for this scheme; the field defaults to GF(2) since every
/// coefficient is one.
pub fn rounds_params(plan: &StagePlan, modulus: Option<u64>) -> Result<ProblemParams> {
    let len = plan.message_len.to_usize().ok_or(Error::Overflow("message length"))?;
    ProblemParams::new(plan.messages, plan.desired, plan.databases, modulus.unwrap_or(2), len)
}

/// A `(database, round, stage)` triple.
pub type StageId = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Consumption {
    pub consumer: StageId,
    pub category: usize,
    pub subgroup: Vec<usize>,
    pub producer: StageId,
}

/// Which undesired-only stages were produced and who consumed them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SideInfoLedger {
    pub produced: BTreeMap<StageId, Vec<QueryRef>>,
    pub consumed: Vec<Consumption>,
}

impl SideInfoLedger {
    /// Every produced stage is consumed exactly once by each other database,
    /// exactly `k` rounds after production.
    pub fn check(&self, databases: usize) -> Result<()> {
        let mut uses: HashMap<StageId, Vec<usize>> = HashMap::new();
        for c in &self.consumed {
            let (pd, pr, _) = c.producer;
            let (cd, cr, _) = c.consumer;
            if pd == cd {
                return Err(Error::DecodeMismatch(format!("database {} consumes its own side information", cd + 1)));
            }
            if pr + c.category != cr {
                return Err(Error::DecodeMismatch(format!(
                    "round {cr} consumer uses round {pr} side information with category {}",
                    c.category
                )));
            }
            if !self.produced.contains_key(&c.producer) {
                return Err(Error::DecodeMismatch(format!("unknown producer {:?}", c.producer)));
            }
            uses.entry(c.producer).or_default().push(cd);
        }
        for &(pd, pr, ps) in self.produced.keys() {
            let mut who = uses.remove(&(pd, pr, ps)).unwrap_or_default();
            who.sort_unstable();
            let want: Vec<usize> = (0..databases).filter(|&d| d != pd).collect();
            if who != want {
                return Err(Error::LedgerUnderflow { db: pd + 1, round: pr });
            }
        }
        Ok(())
    }
}

/// Desired symbols each database reused after they were fetched fresh elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodedPool {
    pub per_db: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone)]
pub struct RoundsBuild {
    pub table: QueryTable,
    pub ledger: SideInfoLedger,
    pub pool: DecodedPool,
}

/// Mixed equation slots in build order: `(round, db, stage, K)`.
fn skeleton(m: usize, n: usize, alpha: &[u128], is_desired: &[bool]) -> Vec<(usize, usize, usize, Vec<usize>)> {
    let mut out = Vec::new();
    for i in 1..=m {
        for db in 0..n {
            for s in 0..alpha[i - 1] as usize {
                for subset in (0..m).combinations(i) {
                    let k: Vec<usize> = subset.into_iter().filter(|&x| is_desired[x]).collect();
                    if !k.is_empty() {
                        out.push((i, db, s, k));
                    }
                }
            }
        }
    }
    out
}

/// Picks the member of each mixed equation that receives a fresh symbol so
/// that every desired message ends with exactly `L` fresh symbols.
fn choose_fresh(slots: &[(usize, usize, usize, Vec<usize>)], desired: &[usize], len: usize, m: usize) -> Result<Vec<usize>> {
    let mut count = vec![0i64; m];
    let mut choice = Vec::with_capacity(slots.len());
    for (_, db, s, k) in slots {
        let f = if k.len() == 1 {
            k[0]
        } else {
            let kl = k.len() as i64;
            *k.iter()
                .enumerate()
                .min_by_key(|&(pos, &x)| (count[x], (pos as i64 - *db as i64 - *s as i64).rem_euclid(kl)))
                .map(|(_, x)| x)
                .expect("non-empty")
        };
        count[f] += 1;
        choice.push(f);
    }
    let mut excess = vec![0i64; m];
    for &d in desired {
        excess[d] = count[d] - len as i64;
    }
    for j in (0..slots.len()).rev() {
        if desired.iter().all(|&d| excess[d] == 0) {
            break;
        }
        let k = &slots[j].3;
        let f = choice[j];
        if k.len() > 1 && excess[f] > 0 {
            let g = *k.iter().min_by_key(|&&x| excess[x]).expect("non-empty");
            if excess[g] < 0 {
                choice[j] = g;
                excess[f] -= 1;
                excess[g] += 1;
            }
        }
    }
    if let Some(&d) = desired.iter().find(|&&d| excess[d] != 0) {
        return Err(Error::InvalidParams(format!(
            "fresh symbols of message {} cannot be balanced ({} off)",
            d + 1,
            excess[d]
        )));
    }
    Ok(choice)
}

pub fn rounds_build_queries(params: &ProblemParams, request: &RetrievalRequest, plan: &StagePlan) -> Result<QueryTable> {
    let mut table = rounds_build(params, request, plan)?.table;
    table.shuffle(request.seed);
    Ok(table)
}

/// Unshuffled table together with its side-information ledger and pool.
pub fn rounds_build(params: &ProblemParams, request: &RetrievalRequest, plan: &StagePlan) -> Result<RoundsBuild> {
    let (m, p, n) = (params.messages, params.desired, params.databases);
    if (plan.messages, plan.desired, plan.databases) != (m, p, n) {
        return Err(Error::DimensionMismatch("stage plan and parameters disagree on (M, P, N)".into()));
    }
    let len = params.message_len;
    if len as u128 != plan.message_len {
        return Err(Error::DimensionMismatch(format!("plan needs L = {}, got {len}", plan.message_len)));
    }
    let alpha = plan.realized_alpha();
    let desired = request.desired().to_vec();
    let is_desired: Vec<bool> = (0..m).map(|x| request.is_desired(x)).collect();
    let slots = skeleton(m, n, &alpha, &is_desired);
    let choice = choose_fresh(&slots, &desired, len, m)?;
    let mut slot = 0;

    let mut counter = vec![0usize; m];
    let mut databases: Vec<Vec<Query>> = vec![Vec::new(); n];
    let mut ledger = SideInfoLedger::default();
    let mut pool_log = DecodedPool { per_db: vec![Vec::new(); n] };
    // (db, round) -> per stage: undesired subset -> position of its query
    let mut produced: HashMap<(usize, usize), Vec<HashMap<Vec<usize>, usize>>> = HashMap::new();
    let mut queues: HashMap<(usize, usize), VecDeque<(usize, usize)>> = HashMap::new();
    let mut pool: Vec<Vec<VecDeque<usize>>> = vec![vec![VecDeque::new(); m]; n];

    for i in 1..=m {
        let stages = alpha[i - 1] as usize;
        if stages == 0 {
            continue;
        }
        let mut pending: Vec<(usize, usize, usize)> = Vec::new();
        for db in 0..n {
            for s in 0..stages {
                let mut assign: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
                for k in 1..=p {
                    if i <= k || i - k > m - p {
                        continue;
                    }
                    let r = i - k;
                    for group in desired.iter().copied().combinations(k) {
                        let q = queues.entry((db, r)).or_insert_with(|| {
                            (0..alpha[r - 1] as usize)
                                .flat_map(|st| (0..n).filter(move |&d| d != db).map(move |d| (d, st)))
                                .collect()
                        });
                        let (pd, ps) = q.pop_front().ok_or(Error::LedgerUnderflow { db: db + 1, round: i })?;
                        ledger.consumed.push(Consumption {
                            consumer: (db, i, s),
                            category: k,
                            subgroup: group.clone(),
                            producer: (pd, r, ps),
                        });
                        assign.insert(group, (pd, ps));
                    }
                }
                let mut stage_prod: HashMap<Vec<usize>, usize> = HashMap::new();
                for subset in (0..m).combinations(i) {
                    let (kk, us): (Vec<usize>, Vec<usize>) = subset.into_iter().partition(|&x| is_desired[x]);
                    let mut terms = Vec::with_capacity(i);
                    let mut side_info = None;
                    if kk.is_empty() {
                        for &x in &us {
                            terms.push(Term::unit(x, counter[x]));
                            counter[x] += 1;
                        }
                        let pos = databases[db].len();
                        ledger.produced.entry((db, i, s)).or_default().push(QueryRef { db, pos });
                        stage_prod.insert(us, pos);
                    } else {
                        if !us.is_empty() {
                            let &(pd, ps) = assign.get(&kk).ok_or(Error::LedgerUnderflow { db: db + 1, round: i })?;
                            let r = i - kk.len();
                            let pos = *produced
                                .get(&(pd, r))
                                .and_then(|v| v.get(ps))
                                .and_then(|st| st.get(&us))
                                .ok_or(Error::LedgerUnderflow { db: db + 1, round: i })?;
                            terms.extend(databases[pd][pos].terms.iter().copied());
                            side_info = Some(QueryRef { db: pd, pos });
                        }
                        let fresh = choice[slot];
                        slot += 1;
                        for &x in &kk {
                            let idx = if x == fresh {
                                let idx = counter[x];
                                counter[x] += 1;
                                pending.push((db, x, idx));
                                idx
                            } else {
                                let idx = pool[db][x].pop_front().ok_or(Error::PoolUnderflow {
                                    db: db + 1,
                                    round: i,
                                    message: x + 1,
                                })?;
                                pool_log.per_db[db].push((x, idx));
                                idx
                            };
                            terms.push(Term::unit(x, idx));
                        }
                        terms.sort_unstable();
                    }
                    let category = kk.len();
                    databases[db].push(Query {
                        terms,
                        round: i,
                        stage: s,
                        category,
                        side_info,
                    });
                }
                produced.entry((db, i)).or_default().push(stage_prod);
            }
        }
        for (db, x, idx) in pending {
            for (d, per_msg) in pool.iter_mut().enumerate() {
                if d != db {
                    per_msg[x].push_back(idx);
                }
            }
        }
    }
    if let Some(((db, r), q)) = queues.iter().find(|(_, q)| !q.is_empty()) {
        return Err(Error::DecodeMismatch(format!(
            "{} side-information stages of round {r} left unused at database {}",
            q.len(),
            db + 1
        )));
    }
    if let Some(x) = (0..m).find(|&x| counter[x] > len) {
        return Err(Error::IndexOutOfRange(format!("message {} needs {} symbols, L = {len}", x + 1, counter[x])));
    }
    let table = QueryTable::new(SchemeKind::Rounds, *params, desired, databases);
    Ok(RoundsBuild {
        table,
        ledger,
        pool: pool_log,
    })
}

/// Decodes round by round: each mixed answer minus its side-information
/// answer and the already known desired symbols leaves one fresh symbol.
pub fn rounds_decode(table: &QueryTable, answers: &AnswerSet, request: &RetrievalRequest) -> Result<Decoded> {
    if table.desired != request.desired() {
        return Err(Error::DecodeMismatch("table was built for a different desired set".into()));
    }
    let field = table.params.field();
    let mut order: Vec<QueryRef> = table
        .databases
        .iter()
        .enumerate()
        .flat_map(|(db, qs)| (0..qs.len()).map(move |pos| QueryRef { db, pos }))
        .collect();
    order.sort_by_key(|r| (table.query(*r).round, r.db, r.pos));
    let mut known: HashMap<(usize, usize), u64> = HashMap::new();
    for r in order {
        let q = table.query(r);
        if q.category == 0 {
            continue;
        }
        let mut value = answers.get(r);
        let undesired: Vec<Term> = q.terms.iter().filter(|t| !table.is_desired(t.message)).copied().collect();
        match q.side_info {
            Some(si) => {
                let mut mine = undesired.clone();
                let mut theirs = table.query(si).terms.clone();
                mine.sort_unstable();
                theirs.sort_unstable();
                if mine != theirs || si.db == r.db {
                    return Err(Error::DecodeMismatch(format!(
                        "database {} round {}: side information does not cancel",
                        r.db + 1,
                        q.round
                    )));
                }
                value = field.sub(value, answers.get(si));
            }
            None if !undesired.is_empty() => {
                return Err(Error::DecodeMismatch(format!(
                    "database {} round {}: undesired terms without side information",
                    r.db + 1,
                    q.round
                )));
            }
            None => {}
        }
        let mut unknown = None;
        for t in q.terms.iter().filter(|t| table.is_desired(t.message)) {
            let c = field.reduce(t.coeff);
            match known.get(&(t.message, t.index)) {
                Some(&v) => value = field.sub(value, field.mul(c, v)),
                None if unknown.is_none() => unknown = Some((t.message, t.index, c)),
                None => {
                    return Err(Error::DecodeMismatch(format!(
                        "database {} round {}: two unknown desired symbols in one equation",
                        r.db + 1,
                        q.round
                    )))
                }
            }
        }
        if let Some((msg, idx, c)) = unknown {
            known.insert((msg, idx), field.mul(value, field.inv(c)?));
        }
    }
    collect_desired(table, |m, i| known.get(&(m, i)).copied())
}
