//! Scheme-independent checks: a linear-algebra decode oracle for reliability
//! and signature-based audits for privacy.

use std::collections::{BTreeMap, HashMap};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf::SparseSystem;
use crate::mds::collect_desired;
use crate::query::{AnswerSet, Decoded, QueryTable, SchemeKind};
use crate::scheme::SchemeSetup;
use crate::store::RetrievalRequest;

/// Oracle result: the desired symbols plus how much of the system was pinned down.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub decoded: Decoded,
    pub unknowns: usize,
    pub determined: usize,
    pub rank: usize,
}

/// Solves all answers jointly, treating every symbol that appears in any
/// query as an unknown, and reads off the desired coordinates.
pub fn oracle_decode(table: &QueryTable, answers: &AnswerSet) -> Result<OracleReport> {
    let mut vars: HashMap<(usize, usize), usize> = HashMap::new();
    for q in table.databases.iter().flatten() {
        for t in &q.terms {
            let next = vars.len();
            vars.entry((t.message, t.index)).or_insert(next);
        }
    }
    let mut sys = SparseSystem::new(table.params.field(), vars.len());
    for (db, qs) in table.databases.iter().enumerate() {
        for (pos, q) in qs.iter().enumerate() {
            sys.push_row(q.terms.iter().map(|t| (vars[&(t.message, t.index)], t.coeff)), answers.databases[db][pos])?;
        }
    }
    let sol = sys.solve()?;
    let decoded = collect_desired(table, |m, i| vars.get(&(m, i)).and_then(|&v| sol.values[v]))?;
    Ok(OracleReport {
        decoded,
        unknowns: vars.len(),
        determined: sol.determined_count(),
        rank: sol.rank,
    })
}

/// Coarse per-database view: the multiset of query shapes (term count and
/// sorted coefficients) and how often each message occurs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuerySignature {
    pub shapes: Vec<(usize, Vec<u64>)>,
    pub occurrences: Vec<usize>,
}

pub fn query_signature(table: &QueryTable, db: usize) -> QuerySignature {
    let mut occurrences = vec![0; table.params.messages];
    let mut shapes: Vec<(usize, Vec<u64>)> = table
        .wire_queries(db)
        .map(|q| {
            for t in &q.terms {
                occurrences[t.message] += 1;
            }
            let mut c: Vec<u64> = q.terms.iter().map(|t| t.coeff).collect();
            c.sort_unstable();
            (q.terms.len(), c)
        })
        .collect();
    shapes.sort_unstable();
    QuerySignature { shapes, occurrences }
}

/// Finer per-database view used for sampling: every query as a
/// message-indexed coefficient vector, plus, per message, the sorted
/// multiplicities of its symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FineSignature {
    pub vectors: Vec<Vec<u64>>,
    pub multiplicity: Vec<Vec<usize>>,
}

pub fn fine_signature(table: &QueryTable, db: usize) -> FineSignature {
    let m = table.params.messages;
    let mut uses: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); m];
    let mut vectors: Vec<Vec<u64>> = table
        .wire_queries(db)
        .map(|q| {
            let mut v = vec![0; m];
            for t in &q.terms {
                v[t.message] = t.coeff;
                *uses[t.message].entry(t.index).or_default() += 1;
            }
            v
        })
        .collect();
    vectors.sort_unstable();
    let multiplicity = uses
        .into_iter()
        .map(|u| {
            let mut v: Vec<usize> = u.into_values().collect();
            v.sort_unstable();
            v
        })
        .collect();
    FineSignature { vectors, multiplicity }
}

/// Total-variation estimate between two desired sets at one database.
#[derive(Debug, Clone, PartialEq)]
pub struct TvEstimate {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub db: usize,
    pub tv: f64,
    pub support: usize,
    pub threshold: f64,
}

impl TvEstimate {
    pub fn passed(&self) -> bool {
        self.tv < self.threshold
    }
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub scheme: SchemeKind,
    pub subsets: usize,
    pub structural_pass: Vec<bool>,
    pub tv_estimates: Vec<TvEstimate>,
    pub samples: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.structural_pass.iter().all(|&b| b) && self.tv_estimates.iter().all(TvEstimate::passed)
    }

    pub fn max_tv(&self) -> f64 {
        self.tv_estimates.iter().map(|e| e.tv).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,db,first,second,value,threshold,pass\n");
        let fmt = |s: &[usize]| s.iter().map(|m| (m + 1).to_string()).join(" ");
        for (db, &ok) in self.structural_pass.iter().enumerate() {
            out.push_str(&format!("structural,{},,,,,{ok}\n", db + 1));
        }
        for e in &self.tv_estimates {
            out.push_str(&format!(
                "tv,{},{},{},{:.6},{:.6},{}\n",
                e.db + 1,
                fmt(&e.first),
                fmt(&e.second),
                e.tv,
                e.threshold,
                e.passed()
            ));
        }
        out
    }
}

fn subsets(m: usize, p: usize) -> Vec<Vec<usize>> {
    (0..m).combinations(p).collect()
}

/// Builds the table for every desired set with the same seed and requires
/// each database's [`QuerySignature`] to be identical across sets.
pub fn structural_privacy_check(setup: &SchemeSetup, seed: u64) -> Result<AuditReport> {
    let params = &setup.params;
    let sets = subsets(params.messages, params.desired);
    let sigs: Vec<Vec<QuerySignature>> = sets
        .par_iter()
        .map(|s| {
            let req = RetrievalRequest::new(s.clone(), seed, params)?;
            let t = setup.build(&req)?;
            Ok((0..params.databases).map(|db| query_signature(&t, db)).collect())
        })
        .collect::<Result<_>>()?;
    let structural_pass = (0..params.databases).map(|db| sigs.iter().all(|s| s[db] == sigs[0][db])).collect();
    Ok(AuditReport {
        scheme: setup.kind,
        subsets: sets.len(),
        structural_pass,
        tv_estimates: Vec::new(),
        samples: 1,
    })
}

fn empirical(setup: &SchemeSetup, set: &[usize], db: usize, seeds: &[u64]) -> Result<HashMap<FineSignature, usize>> {
    let sigs: Vec<FineSignature> = seeds
        .par_iter()
        .map(|&seed| {
            let req = RetrievalRequest::new(set.to_vec(), seed, &setup.params)?;
            Ok(fine_signature(&setup.build(&req)?, db))
        })
        .collect::<Result<_>>()?;
    let mut hist = HashMap::new();
    for s in sigs {
        *hist.entry(s).or_default() += 1;
    }
    Ok(hist)
}

/// Plug-in total variation distance between two histograms of equal mass.
pub fn total_variation<K: std::hash::Hash + Eq>(a: &HashMap<K, usize>, b: &HashMap<K, usize>, samples: usize) -> (f64, usize) {
    let mut diff = 0usize;
    let mut support = 0usize;
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        diff += ca.abs_diff(cb);
        support += 1;
    }
    for (k, &cb) in b {
        if !a.contains_key(k) {
            diff += cb;
            support += 1;
        }
    }
    (diff as f64 / (2 * samples) as f64, support)
}

/// Draws `samples` independent seeds per desired set, histograms the
/// [`FineSignature`] at every database, and compares every pair of sets.
pub fn statistical_privacy_check(setup: &SchemeSetup, sets: &[Vec<usize>], samples: usize, seed: u64) -> Result<AuditReport> {
    if sets.is_empty() {
        return Err(Error::InvalidParams("no desired sets to compare".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<Vec<u64>> = sets.iter().map(|_| (0..samples).map(|_| rng.random()).collect()).collect();
    let mut tv_estimates = Vec::new();
    for db in 0..setup.params.databases {
        let hists: Vec<_> = sets
            .iter()
            .zip(&seeds)
            .map(|(s, sd)| empirical(setup, s, db, sd))
            .collect::<Result<_>>()?;
        for (i, j) in (0..sets.len()).tuple_combinations() {
            let (tv, support) = total_variation(&hists[i], &hists[j], samples);
            tv_estimates.push(TvEstimate {
                first: sets[i].clone(),
                second: sets[j].clone(),
                db,
                tv,
                support,
                threshold: 3.0 * (support as f64 / samples as f64).sqrt(),
            });
        }
    }
    Ok(AuditReport {
        scheme: setup.kind,
        subsets: sets.len(),
        structural_pass: vec![true; setup.params.databases],
        tv_estimates,
        samples,
    })
}

/// All `C(M, P)` desired sets, for callers that audit exhaustively.
pub fn all_subsets(setup: &SchemeSetup) -> Vec<Vec<usize>> {
    subsets(setup.params.messages, setup.params.desired)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::answer;
    use crate::store::generate_store;

    fn setup(kind: SchemeKind, m: usize, p: usize, n: usize) -> SchemeSetup {
        SchemeSetup::new(kind, m, p, n, None).unwrap()
    }

    #[test]
    fn oracle_matches_store() {
        for (kind, m, p, n) in [(SchemeKind::Mds, 3, 2, 2), (SchemeKind::Rounds, 4, 2, 2), (SchemeKind::Rounds, 5, 2, 2)] {
            let s = setup(kind, m, p, n);
            let store = generate_store(&s.params, 21);
            let req = RetrievalRequest::leading(&s.params, 21);
            let t = s.build(&req).unwrap();
            let r = oracle_decode(&t, &answer(&t, &store).unwrap()).unwrap();
            assert_eq!(r.decoded.symbol_count(), p * s.params.message_len);
            for (k, msg) in r.decoded.messages(store.interleavers()).iter().enumerate() {
                assert_eq!(msg, store.message(k));
            }
        }
    }

    #[test]
    fn oracle_reports_missing_rank() {
        let s = setup(SchemeKind::Mds, 3, 2, 2);
        let store = generate_store(&s.params, 1);
        let req = RetrievalRequest::leading(&s.params, 1);
        let mut t = s.build(&req).unwrap();
        let pos = t.databases[1].iter().position(|q| q.round == 2).unwrap();
        t.databases[1].remove(pos);
        t.wire_order[1] = (0..t.databases[1].len()).collect();
        let a = answer(&t, &store).unwrap();
        assert!(matches!(oracle_decode(&t, &a), Err(Error::DesiredUndetermined { count: 2 })));
    }

    #[test]
    fn signature_ignores_indices_but_not_labels() {
        let s = setup(SchemeKind::Mds, 3, 2, 2);
        let req = RetrievalRequest::leading(&s.params, 3);
        let t = s.build(&req).unwrap();
        let mut shifted = t.clone();
        for q in shifted.databases.iter_mut().flatten() {
            for term in &mut q.terms {
                term.index = (term.index + 1) % 4;
            }
        }
        assert_eq!(query_signature(&t, 0), query_signature(&shifted, 0));
        let mut relabeled = t.clone();
        for q in relabeled.databases.iter_mut().flatten() {
            for term in &mut q.terms {
                term.message = (term.message + 1) % 3;
            }
        }
        assert_eq!(query_signature(&t, 0).shapes, query_signature(&relabeled, 0).shapes);
    }

    #[test]
    fn structural_audit_separates_controls() {
        assert!(structural_privacy_check(&setup(SchemeKind::Mds, 3, 2, 2), 4).unwrap().passed());
        assert!(structural_privacy_check(&setup(SchemeKind::Rounds, 4, 2, 2), 4).unwrap().passed());
        assert!(!structural_privacy_check(&setup(SchemeKind::DesiredOnly, 3, 2, 2), 4).unwrap().passed());
        assert!(!structural_privacy_check(&setup(SchemeKind::NoSymmetry, 3, 2, 2), 4).unwrap().passed());
    }

    #[test]
    fn identical_sets_have_zero_distance() {
        let s = setup(SchemeKind::Mds, 3, 2, 2);
        let sets = vec![vec![0, 1], vec![0, 1]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let seeds: Vec<u64> = (0..200).map(|_| rng.random()).collect();
        let a = empirical(&s, &sets[0], 0, &seeds).unwrap();
        let (tv, _) = total_variation(&a, &a, 200);
        assert_eq!(tv, 0.0);
    }

    #[test]
    fn statistical_audit_small() {
        let s = setup(SchemeKind::Mds, 3, 2, 2);
        let r = statistical_privacy_check(&s, &all_subsets(&s), 2000, 5).unwrap();
        assert!(r.passed(), "{:?}", r.tv_estimates);
        let c = setup(SchemeKind::DesiredOnly, 3, 2, 2);
        let r = statistical_privacy_check(&c, &all_subsets(&c), 2000, 5).unwrap();
        assert!(!r.passed());
        assert!((r.max_tv() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn audit_csv_lists_every_estimate() {
        let s = setup(SchemeKind::Mds, 3, 2, 2);
        let r = statistical_privacy_check(&s, &all_subsets(&s), 100, 1).unwrap();
        assert_eq!(r.to_csv().lines().count(), 1 + 2 + 2 * 3);
    }
}
