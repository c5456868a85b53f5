//! End-to-end runs: build, answer, decode, cross-check, report.

use std::fmt::Write;

use crate::bounds::{capacity_high, upper_bound};
use crate::error::{Error, Result};
use crate::plan::{rational_rate, stage_counts, StagePlan};
use crate::query::{answer, QueryTable, SchemeKind};
use crate::scalar::fmt_rational;
use crate::scheme::SchemeSetup;
use crate::store::{generate_store, RetrievalRequest};
use crate::verify::oracle_decode;
use crate::Rational;

/// Mds when `2P >= M`, rounds otherwise.
pub fn default_scheme(m: usize, p: usize) -> SchemeKind {
    if 2 * p >= m {
        SchemeKind::Mds
    } else {
        SchemeKind::Rounds
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scheme: Option<SchemeKind>,
    pub messages: usize,
    pub desired: usize,
    pub databases: usize,
    pub modulus: Option<u64>,
    /// 0-based desired set; defaults to the first `P` messages.
    pub desired_set: Option<Vec<usize>>,
    pub seed: u64,
    pub oracle: bool,
}

impl RunConfig {
    pub fn new(m: usize, p: usize, n: usize) -> Self {
        Self {
            scheme: None,
            messages: m,
            desired: p,
            databases: n,
            modulus: None,
            desired_set: None,
            seed: 0,
            oracle: true,
        }
    }

    pub fn scheme(mut self, kind: SchemeKind) -> Self {
        self.scheme = Some(kind);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kind(&self) -> SchemeKind {
        self.scheme.unwrap_or_else(|| default_scheme(self.messages, self.desired))
    }
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub scheme: SchemeKind,
    pub messages: usize,
    pub desired: usize,
    pub databases: usize,
    pub modulus: u64,
    pub message_len: usize,
    pub desired_set: Vec<usize>,
    pub desired_symbols: usize,
    pub total_downloads: usize,
    pub per_db: Vec<usize>,
    pub measured: Rational,
    pub expected: Rational,
    pub capacity_high: Option<Rational>,
    pub upper: Rational,
    pub decoder_ok: bool,
    pub oracle_ok: Option<bool>,
    pub table: QueryTable,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.decoder_ok && self.oracle_ok != Some(false) && self.measured == self.expected
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let set: Vec<String> = self.desired_set.iter().map(|m| (m + 1).to_string()).collect();
        writeln!(s, "scheme      {}", self.scheme).unwrap();
        writeln!(
            s,
            "params      M={} P={} N={} q={} L={}",
            self.messages, self.desired, self.databases, self.modulus, self.message_len
        )
        .unwrap();
        writeln!(s, "desired     {}", set.join(" ")).unwrap();
        let per_db: Vec<String> = self.per_db.iter().map(usize::to_string).collect();
        writeln!(s, "downloads   {} ({} per database)", self.total_downloads, per_db.join(" ")).unwrap();
        writeln!(s, "retrieved   {}", self.desired_symbols).unwrap();
        writeln!(s, "rate        {}", fmt_rational(&self.measured)).unwrap();
        writeln!(s, "expected    {}", fmt_rational(&self.expected)).unwrap();
        if let Some(c) = &self.capacity_high {
            writeln!(s, "capacity    {}", fmt_rational(c)).unwrap();
        }
        writeln!(s, "upper bound {}", fmt_rational(&self.upper)).unwrap();
        writeln!(s, "decode      {}", if self.decoder_ok { "ok" } else { "MISMATCH" }).unwrap();
        match self.oracle_ok {
            Some(true) => writeln!(s, "oracle      ok").unwrap(),
            Some(false) => writeln!(s, "oracle      MISMATCH").unwrap(),
            None => writeln!(s, "oracle      skipped").unwrap(),
        }
        writeln!(s, "status      {}", if self.passed() { "PASS" } else { "FAIL" }).unwrap();
        s
    }
}

/// Full pipeline for one configuration.
pub fn cmd_run(cfg: &RunConfig) -> Result<RateReport> {
    let setup = SchemeSetup::new(cfg.kind(), cfg.messages, cfg.desired, cfg.databases, cfg.modulus)?;
    run_with_setup(&setup, cfg)
}

pub fn run_with_setup(setup: &SchemeSetup, cfg: &RunConfig) -> Result<RateReport> {
    let params = setup.params;
    let request = match &cfg.desired_set {
        Some(set) => RetrievalRequest::new(set.clone(), cfg.seed, &params)?,
        None => RetrievalRequest::leading(&params, cfg.seed),
    };
    let store = generate_store(&params, cfg.seed);
    let table = setup.build(&request)?;
    let answers = answer(&table, &store)?;
    let decoded = setup.decode(&table, &answers, &request)?;
    let messages = decoded.messages(store.interleavers());
    let decoder_ok = request.desired().iter().zip(&messages).all(|(&m, w)| w == store.message(m));
    let oracle_ok = if cfg.oracle {
        Some(match oracle_decode(&table, &answers) {
            Ok(o) => o.decoded == decoded,
            Err(Error::DesiredUndetermined { .. }) => false,
            Err(e) => return Err(e),
        })
    } else {
        None
    };
    let desired_symbols = decoded.symbol_count();
    let total_downloads = table.total_downloads();
    let (m, p, n) = (params.messages, params.desired, params.databases);
    Ok(RateReport {
        scheme: setup.kind,
        messages: m,
        desired: p,
        databases: n,
        modulus: params.modulus,
        message_len: params.message_len,
        desired_set: request.desired().to_vec(),
        desired_symbols,
        total_downloads,
        per_db: table.per_db_downloads(),
        measured: Rational::new(desired_symbols.into(), total_downloads.into()),
        expected: setup.expected_rate(),
        capacity_high: capacity_high(m, p, n).ok(),
        upper: upper_bound(m, p, n)?,
        decoder_ok,
        oracle_ok,
        table,
    })
}

/// Stage plan summary as printed by the `plan` command.
pub fn plan_text(plan: &StagePlan) -> String {
    let mut s = String::new();
    let alpha: Vec<String> = plan.alpha.iter().map(u128::to_string).collect();
    writeln!(s, "M={} P={} N={}", plan.messages, plan.desired, plan.databases).unwrap();
    writeln!(s, "alpha       {}", alpha.join(" ")).unwrap();
    writeln!(s, "D per db    {}", plan.d_db).unwrap();
    writeln!(s, "U per db    {}", plan.u_db).unwrap();
    writeln!(s, "downloads   {}", plan.download_total()).unwrap();
    writeln!(s, "L           {}", plan.message_len).unwrap();
    if plan.scale > 1 {
        writeln!(s, "repeat      {}", plan.scale).unwrap();
    }
    writeln!(s, "rate        {}", fmt_rational(&rational_rate(plan))).unwrap();
    s
}

/// Plans over a grid as CSV; `P > M` is skipped.
pub fn plan_sweep_csv(ms: &[usize], ps: &[usize], ns: &[usize]) -> Result<String> {
    let mut s = String::from("M,P,N,alpha,D_db,U_db,L,rate\n");
    for &m in ms {
        for &p in ps.iter().filter(|&&p| p >= 1 && p <= m) {
            for &n in ns {
                let plan = stage_counts(m, p, n)?;
                let alpha: Vec<String> = plan.alpha.iter().map(u128::to_string).collect();
                let r = rational_rate(&plan);
                writeln!(
                    s,
                    "{m},{p},{n},{},{},{},{},{}/{}",
                    alpha.join(" "),
                    plan.d_db,
                    plan.u_db,
                    plan.message_len,
                    r.numer(),
                    r.denom()
                )
                .unwrap();
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    #[test]
    fn dispatcher_follows_regime() {
        assert_eq!(default_scheme(3, 2), SchemeKind::Mds);
        assert_eq!(default_scheme(4, 2), SchemeKind::Mds);
        assert_eq!(default_scheme(5, 2), SchemeKind::Rounds);
    }

    #[test]
    fn runs_reach_expected_rates() {
        let r = cmd_run(&RunConfig::new(3, 2, 2)).unwrap();
        assert!(r.passed());
        assert_eq!(r.measured, rational(4, 5));
        assert_eq!(r.total_downloads, 10);
        let r = cmd_run(&RunConfig::new(5, 2, 2)).unwrap();
        assert_eq!(r.measured, rational(17, 28));
        let r = cmd_run(&RunConfig::new(2, 1, 2).scheme(SchemeKind::Rounds)).unwrap();
        assert_eq!(r.measured, rational(2, 3));
        assert!(r.to_text().contains("status      PASS"));
    }

    #[test]
    fn plan_outputs() {
        let t = plan_text(&stage_counts(5, 2, 2).unwrap());
        assert!(t.contains("alpha       5 2 1 0 1"));
        assert!(t.contains("17/28"));
        let csv = plan_sweep_csv(&[4, 5], &[1, 2], &[2]).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("5,2,2,5 2 1 0 1,56,22,34,17/28"));
    }
}
