//! The acceptance criteria as runnable checks.

use std::fmt::Write;

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bounds::{bounds_report, capacity_high, gap_surface, region_corners, repetition_rate, single_capacity, upper_bound};
use crate::error::Result;
use crate::harness::{cmd_run, RunConfig};
use crate::plan::{rational_rate, spectral_rate, stage_counts, StagePlan};
use crate::query::{answer, SchemeKind};
use crate::scalar::{fmt_rational, rational};
use crate::scheme::SchemeSetup;
use crate::store::{generate_store, RetrievalRequest};
use crate::verify::{all_subsets, oracle_decode, statistical_privacy_check, structural_privacy_check};
use crate::Rational;

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Keeps criteria whose id, name or tags contain this string.
    pub filter: Option<String>,
    /// Corrupts the first stage count wherever a stage plan is checked.
    pub inject_fault: bool,
    pub seeds: usize,
    pub samples: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            filter: None,
            inject_fault: false,
            seeds: 100,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub tags: &'static [&'static str],
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "mds scheme exactness", tags: &["mds", "rates"] },
    Criterion { id: 2, name: "stage plans", tags: &["plan"] },
    Criterion { id: 3, name: "rounds scheme exactness", tags: &["rounds", "rates"] },
    Criterion { id: 4, name: "bounds table", tags: &["bounds"] },
    Criterion { id: 5, name: "global gap", tags: &["bounds"] },
    Criterion { id: 6, name: "repetition strictly worse", tags: &["bounds"] },
    Criterion { id: 7, name: "spectral equals rational", tags: &["plan", "bounds"] },
    Criterion { id: 8, name: "single-message reduction", tags: &["rounds", "plan"] },
    Criterion { id: 9, name: "oracle equivalence", tags: &["oracle"] },
    Criterion { id: 10, name: "privacy audit", tags: &["privacy"] },
    Criterion { id: 11, name: "region corners", tags: &["bounds"] },
];

impl Criterion {
    pub fn matches(&self, filter: &str) -> bool {
        self.id.to_string() == filter || self.name.contains(filter) || self.tags.contains(&filter)
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub criterion: Criterion,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion.id,
            self.criterion.name,
            self.detail
        )
    }
}

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = Result<(bool, String)>;

fn plan(m: usize, p: usize, n: usize, opts: &SuiteOptions) -> Result<StagePlan> {
    let plan = stage_counts(m, p, n)?;
    if opts.inject_fault {
        let mut alpha = plan.alpha;
        alpha[0] += 1;
        return StagePlan::from_alpha(m, p, n, alpha);
    }
    Ok(plan)
}

fn q(a: i64, b: i64) -> Rational {
    rational(a, b)
}

fn scheme_a(_: &SuiteOptions) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (m, p, n, downloads, rate) in [(3, 2, 2, 10, q(4, 5)), (5, 3, 2, 16, q(3, 4)), (4, 2, 3, 24, q(3, 4))] {
        let r = cmd_run(&RunConfig::new(m, p, n).scheme(SchemeKind::Mds).seed(1))?;
        let good = r.passed()
            && r.total_downloads == downloads
            && r.measured == rate
            && capacity_high::<Rational>(m, p, n)? == rate;
        ok &= good;
        notes.push(format!("({m},{p},{n}) {}/{}", r.desired_symbols, r.total_downloads));
    }
    Ok((ok, notes.join(", ")))
}

fn stage_plans(opts: &SuiteOptions) -> Outcome {
    let cases: [(usize, usize, usize, &[u128]); 4] = [
        (5, 2, 2, &[5, 2, 1, 0, 1]),
        (4, 2, 2, &[2, 1, 0, 1]),
        (5, 2, 3, &[6, 4, 4, 0, 8]),
        (7, 3, 3, &[67, 30, 12, 8, 0, 0, 16]),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (m, p, n, want) in cases {
        let got = plan(m, p, n, opts)?.alpha;
        ok &= got == want;
        notes.push(format!("({m},{p},{n}) {got:?}"));
    }
    Ok((ok, notes.join(", ")))
}

fn scheme_b(_: &SuiteOptions) -> Outcome {
    let cases = [
        (5, 2, 2, Some((68, 112)), q(17, 28)),
        (4, 2, 2, Some((20, 30)), q(2, 3)),
        (5, 2, 3, None, q(42, 59)),
        (7, 3, 3, None, q(437, 605)),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (m, p, n, counts, rate) in cases {
        let r = cmd_run(&RunConfig::new(m, p, n).scheme(SchemeKind::Rounds).seed(1))?;
        let mut good = r.passed() && r.oracle_ok == Some(true) && r.measured == rate;
        if let Some((d, t)) = counts {
            good &= r.desired_symbols == d && r.total_downloads == t;
        }
        if (m, p, n) == (5, 2, 3) {
            good &= r.total_downloads == 354;
        }
        ok &= good;
        notes.push(format!("({m},{p},{n}) {}/{}", r.desired_symbols, r.total_downloads));
    }
    Ok((ok, notes.join(", ")))
}

fn bounds_table(opts: &SuiteOptions) -> Outcome {
    let cases = [
        (5, 2, 2, q(8, 13), q(3, 364)),
        (5, 2, 3, q(18, 25), q(12, 1475)),
        (7, 3, 3, q(27, 37), q(166, 22385)),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (m, p, n, upper, gap) in cases {
        let u: Rational = upper_bound(m, p, n)?;
        let spectral_gap = u.to_f64().unwrap_or(f64::NAN) - spectral_rate(m, p, n)?;
        let exact_gap = &u - rational_rate(&plan(m, p, n, opts)?);
        let err = (spectral_gap - gap.to_f64().unwrap_or(f64::NAN)).abs();
        ok &= u == upper && err < 1e-9 && exact_gap == gap;
        notes.push(format!("({m},{p},{n}) gap {}", fmt_rational(&exact_gap)));
    }
    Ok((ok, notes.join(", ")))
}

fn global_gap(_: &SuiteOptions) -> Outcome {
    let rows = gap_surface(2..=10, 1..=10, 2..=20)?;
    let worst = rows.iter().copied().fold(None, |acc: Option<crate::bounds::GapRow>, r| match acc {
        Some(a) if a.gap >= r.gap => Some(a),
        _ => Some(r),
    });
    let worst = worst.expect("non-empty grid");
    let bound = 3.0 / 364.0 + 1e-9;
    let mut ok = rows.iter().all(|r| r.gap <= bound) && (worst.messages, worst.desired, worst.databases) == (5, 2, 2);
    let mut zero_points = 0;
    for r in rows.iter().filter(|r| 2 * r.desired >= r.messages || r.messages % r.desired == 0) {
        let exact = bounds_report(r.messages, r.desired, r.databases)?.gap_exact;
        ok &= exact.is_zero() && r.gap.abs() < 1e-9;
        zero_points += 1;
    }
    Ok((
        ok,
        format!(
            "{} points, max gap {:.6} at ({},{},{}), {zero_points} zero-gap points exact",
            rows.len(),
            worst.gap,
            worst.messages,
            worst.desired,
            worst.databases
        ),
    ))
}

fn repetition(_: &SuiteOptions) -> Outcome {
    let mut ok = true;
    let mut points = 0;
    let mut boundary = 0;
    for m in 2..=10usize {
        for p in m.div_ceil(2)..=m {
            for n in 2..=10 {
                let diff = capacity_high::<Rational>(m, p, n)? - repetition_rate::<Rational>(m, p, n)?;
                if m >= 3 {
                    ok &= diff > Rational::zero();
                    points += 1;
                } else {
                    // single-message (P = 1) or retrieve-everything (P = M = 2): both rates coincide
                    ok &= diff.is_zero();
                    boundary += 1;
                }
            }
        }
    }
    for (m, p, n, rep, cap) in [(3, 2, 2, q(5, 7), q(4, 5)), (5, 3, 2, q(18, 31), q(3, 4)), (4, 2, 3, q(7, 10), q(3, 4))] {
        ok &= repetition_rate::<Rational>(m, p, n)? == rep && capacity_high::<Rational>(m, p, n)? == cap && rep < cap;
    }
    Ok((ok, format!("strict on {points} points with M >= 3; equal on {boundary} points with M = 2")))
}

fn spectral(_: &SuiteOptions) -> Outcome {
    let mut grid = Vec::new();
    for m in 2..=12 {
        for p in 1..=m / 2 {
            for n in 2..=10 {
                grid.push((m, p, n));
            }
        }
    }
    let diffs: Vec<f64> = grid
        .par_iter()
        .map(|&(m, p, n)| {
            let exact = rational_rate(&stage_counts(m, p, n)?).to_f64().unwrap_or(f64::NAN);
            Ok((spectral_rate(m, p, n)? - exact).abs())
        })
        .collect::<Result<_>>()?;
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    Ok((diffs.iter().all(|d| *d < 1e-9), format!("{} points, max |diff| {worst:.2e}", grid.len())))
}

fn single_message(opts: &SuiteOptions) -> Outcome {
    let mut ok = true;
    let mut count = 0;
    for m in 2..=6 {
        for n in 2..=4 {
            let r = cmd_run(&RunConfig::new(m, 1, n).scheme(SchemeKind::Rounds).seed(2))?;
            let want = single_capacity::<Rational>(m, n);
            let alpha = plan(m, 1, n, opts)?.alpha;
            let geometric = alpha.iter().enumerate().all(|(k, &a)| a == (n as u128 - 1).pow(k as u32));
            ok &= r.passed() && r.measured == want && geometric;
            count += 1;
        }
    }
    let r = cmd_run(&RunConfig::new(3, 1, 2).scheme(SchemeKind::Rounds).seed(2))?;
    ok &= r.measured == q(4, 7);
    Ok((ok, format!("{count} configurations, (3,1,2) rate {}", fmt_rational(&r.measured))))
}

/// Configurations of the exactness criteria, each with its scheme.
fn exactness_configs() -> Vec<(SchemeKind, usize, usize, usize)> {
    let mut v = vec![
        (SchemeKind::Mds, 3, 2, 2),
        (SchemeKind::Mds, 5, 3, 2),
        (SchemeKind::Mds, 4, 2, 3),
        (SchemeKind::Rounds, 5, 2, 2),
        (SchemeKind::Rounds, 4, 2, 2),
        (SchemeKind::Rounds, 5, 2, 3),
        (SchemeKind::Rounds, 7, 3, 3),
    ];
    for m in 2..=6 {
        for n in 2..=4 {
            v.push((SchemeKind::Rounds, m, 1, n));
        }
    }
    v
}

fn oracle(opts: &SuiteOptions) -> Outcome {
    let configs = exactness_configs();
    let mut runs = 0;
    let mut mismatches = 0;
    for (kind, m, p, n) in configs {
        let setup = SchemeSetup::new(kind, m, p, n, None)?;
        let bad: usize = (0..opts.seeds as u64)
            .into_par_iter()
            .map(|seed| {
                let req = RetrievalRequest::leading(&setup.params, seed);
                let store = generate_store(&setup.params, seed);
                let t = setup.build(&req)?;
                let a = answer(&t, &store)?;
                let mine = setup.decode(&t, &a, &req)?;
                let theirs = oracle_decode(&t, &a)?.decoded;
                let truth = req.desired().iter().map(|&x| store.message(x).to_vec()).collect::<Vec<_>>();
                Ok(usize::from(mine != theirs || mine.messages(store.interleavers()) != truth))
            })
            .collect::<Result<Vec<usize>>>()?
            .into_iter()
            .sum();
        runs += opts.seeds;
        mismatches += bad;
    }
    Ok((mismatches == 0, format!("{runs} runs, {mismatches} mismatches")))
}

fn privacy(opts: &SuiteOptions) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let structural = exactness_configs().into_iter().take(7).filter(|c| c.1 <= 5);
    let mut checked = 0;
    for (kind, m, p, n) in structural {
        let setup = SchemeSetup::new(kind, m, p, n, None)?;
        for seed in 0..3 {
            ok &= structural_privacy_check(&setup, seed)?.passed();
        }
        checked += 1;
    }
    notes.push(format!("structural ok on {checked} configs"));
    for (kind, m, p, n) in [(SchemeKind::Mds, 3, 2, 2), (SchemeKind::Rounds, 4, 2, 2)] {
        let setup = SchemeSetup::new(kind, m, p, n, None)?;
        let r = statistical_privacy_check(&setup, &all_subsets(&setup), opts.samples, 7)?;
        ok &= r.passed();
        notes.push(format!("{kind} ({m},{p},{n}) max tv {:.4}", r.max_tv()));
    }
    for kind in [SchemeKind::DesiredOnly, SchemeKind::NoSymmetry] {
        let setup = SchemeSetup::new(kind, 3, 2, 2, None)?;
        let s = structural_privacy_check(&setup, 0)?;
        let t = statistical_privacy_check(&setup, &all_subsets(&setup), opts.samples.min(1000), 7)?;
        ok &= !s.passed() && !t.passed();
        notes.push(format!("{kind} rejected (tv {:.2})", t.max_tv()));
    }
    Ok((ok, notes.join(", ")))
}

fn corners(_: &SuiteOptions) -> Outcome {
    let r = region_corners::<Rational>(3, 2, 2)?;
    let mut got = r.corners.clone();
    got.sort();
    let mut want = vec![vec![q(4, 7), q(1, 7)], vec![q(1, 7), q(4, 7)], vec![q(2, 5), q(2, 5)]];
    want.sort();
    let shown: Vec<String> = r
        .corners
        .iter()
        .map(|c| format!("({})", c.iter().map(|x| format!("{}/{}", x.numer(), x.denom())).collect::<Vec<_>>().join(",")))
        .collect();
    Ok((got == want, shown.join(" ")))
}

pub fn run_criterion(c: Criterion, opts: &SuiteOptions) -> CriterionResult {
    let f: fn(&SuiteOptions) -> Outcome = match c.id {
        1 => scheme_a,
        2 => stage_plans,
        3 => scheme_b,
        4 => bounds_table,
        5 => global_gap,
        6 => repetition,
        7 => spectral,
        8 => single_message,
        9 => oracle,
        10 => privacy,
        _ => corners,
    };
    let (passed, detail) = f(opts).unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { criterion: c, passed, detail }
}

pub fn run_suite(opts: &SuiteOptions) -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .filter(|c| opts.filter.as_deref().is_none_or(|f| c.matches(f)))
        .map(|&c| run_criterion(c, opts))
        .collect()
}

pub fn suite_text(results: &[CriterionResult]) -> String {
    let mut s = String::new();
    for r in results {
        writeln!(s, "{}", r.line()).unwrap();
    }
    let passed = results.iter().filter(|r| r.passed).count();
    writeln!(s, "{passed}/{} criteria passed", results.len()).unwrap();
    s
}
