//! One entry point for building and decoding any scheme, including the two
//! deliberately non-private controls used to exercise the privacy audit.

use crate::error::{Error, Result};
use crate::mds::{block_decode, mds_build_queries, mds_decode, mds_params, mds_rate, MdsPlan};
use crate::plan::{rational_rate, stage_counts, StagePlan};
use crate::query::{AnswerSet, Decoded, Query, QueryTable, SchemeKind, Term};
use crate::rounds::{rounds_build_queries, rounds_decode, rounds_params};
use crate::store::{ProblemParams, RetrievalRequest};
use crate::Rational;

/// Validated parameters for one scheme at one `(M, P, N)`.
#[derive(Debug, Clone)]
pub struct SchemeSetup {
    pub kind: SchemeKind,
    pub params: ProblemParams,
    pub plan: Option<StagePlan>,
}

impl SchemeSetup {
    pub fn new(kind: SchemeKind, m: usize, p: usize, n: usize, modulus: Option<u64>) -> Result<Self> {
        let (params, plan) = match kind {
            SchemeKind::Mds | SchemeKind::NoSymmetry => (mds_params(m, p, n, modulus)?, None),
            SchemeKind::DesiredOnly => {
                let q = mds_params(m, p, n, modulus)?.modulus;
                (ProblemParams::new(m, p, n, q, n)?, None)
            }
            SchemeKind::Rounds => {
                if p == m {
                    return Err(Error::InvalidParams("the rounds scheme needs P < M".into()));
                }
                let plan = stage_counts(m, p, n)?;
                (rounds_params(&plan, modulus)?, Some(plan))
            }
        };
        Ok(Self { kind, params, plan })
    }

    /// Query table for `request`, already shuffled.
    pub fn build(&self, request: &RetrievalRequest) -> Result<QueryTable> {
        match self.kind {
            SchemeKind::Mds => mds_build_queries(&self.params, request),
            SchemeKind::Rounds => rounds_build_queries(&self.params, request, self.plan.as_ref().expect("set for rounds")),
            SchemeKind::DesiredOnly => Ok(desired_only_queries(&self.params, request)),
            SchemeKind::NoSymmetry => no_symmetry_queries(&self.params, request),
        }
    }

    pub fn decode(&self, table: &QueryTable, answers: &AnswerSet, request: &RetrievalRequest) -> Result<Decoded> {
        match self.kind {
            SchemeKind::Mds => mds_decode(table, answers, request),
            SchemeKind::Rounds => rounds_decode(table, answers, request),
            SchemeKind::DesiredOnly | SchemeKind::NoSymmetry => block_decode(table, answers),
        }
    }

    /// Rate the construction is designed to reach.
    pub fn expected_rate(&self) -> Rational {
        match self.kind {
            SchemeKind::Mds => mds_rate(&self.params),
            SchemeKind::Rounds => rational_rate(self.plan.as_ref().expect("set for rounds")),
            SchemeKind::DesiredOnly | SchemeKind::NoSymmetry => Rational::from_integer(1.into()),
        }
    }
}

/// Control: database `n` returns `x_m(n)` for each desired `m` only.
pub fn desired_only_queries(params: &ProblemParams, request: &RetrievalRequest) -> QueryTable {
    let databases = (0..params.databases)
        .map(|n| {
            request
                .desired()
                .iter()
                .map(|&m| Query {
                    terms: vec![Term::unit(m, n)],
                    round: 1,
                    stage: 0,
                    category: 1,
                    side_info: None,
                })
                .collect()
        })
        .collect();
    let mut t = QueryTable::new(SchemeKind::DesiredOnly, *params, request.desired().to_vec(), databases);
    t.shuffle(request.seed);
    t
}

/// Control: the MDS construction with every undesired term removed, so
/// round one and the coded round touch only desired messages.
pub fn no_symmetry_queries(params: &ProblemParams, request: &RetrievalRequest) -> Result<QueryTable> {
    let plan = MdsPlan::random(params, request.seed)?;
    let mut t = crate::mds::mds_build_with_plan(params, request, &plan)?;
    for qs in &mut t.databases {
        for q in qs.iter_mut() {
            q.terms.retain(|term| request.is_desired(term.message));
        }
        qs.retain(|q| !q.terms.is_empty());
    }
    let mut t = QueryTable::new(SchemeKind::NoSymmetry, *params, t.desired, t.databases);
    t.shuffle(request.seed);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::answer;
    use crate::store::generate_store;

    #[test]
    fn every_scheme_round_trips() {
        for kind in [SchemeKind::Mds, SchemeKind::Rounds, SchemeKind::DesiredOnly, SchemeKind::NoSymmetry] {
            let s = SchemeSetup::new(kind, 4, 2, 2, None).unwrap();
            let store = generate_store(&s.params, 6);
            let req = RetrievalRequest::new(vec![1, 2], 6, &s.params).unwrap();
            let t = s.build(&req).unwrap();
            let d = s.decode(&t, &answer(&t, &store).unwrap(), &req).unwrap();
            let got = d.messages(store.interleavers());
            assert_eq!(got[0], store.message(1), "{kind}");
            assert_eq!(got[1], store.message(2), "{kind}");
        }
    }

    #[test]
    fn controls_skip_undesired_messages() {
        let s = SchemeSetup::new(SchemeKind::NoSymmetry, 3, 2, 2, None).unwrap();
        let req = RetrievalRequest::new(vec![0, 2], 1, &s.params).unwrap();
        let t = s.build(&req).unwrap();
        assert!(t.databases.iter().flatten().flat_map(|q| &q.terms).all(|x| x.message != 1));
        assert_eq!(t.per_db_downloads(), vec![4, 4]);
    }

    #[test]
    fn rounds_rejects_all_desired() {
        assert!(SchemeSetup::new(SchemeKind::Rounds, 3, 3, 2, None).is_err());
    }
}
