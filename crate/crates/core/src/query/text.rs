//! Human-readable and CSV renderings of a query table.

use std::collections::HashMap;
use std::fmt::Write;

use super::{Query, QueryRef, QueryTable, SchemeKind, Term};
use crate::error::{Error, Result};
use crate::store::ProblemParams;

const HEADER: &str = "# mpir query table";

fn symbol(message: usize, index: usize, long: bool) -> String {
    if long {
        format!("x{}_{}", message + 1, index + 1)
    } else {
        format!("{}{}", (b'a' + message as u8) as char, index + 1)
    }
}

fn format_term(t: &Term, long: bool) -> String {
    let s = symbol(t.message, t.index, long);
    if t.coeff == 1 {
        s
    } else {
        format!("{}{}", t.coeff, s)
    }
}

/// Renders one equation as `2a3 + b3 + 3c2`.
pub fn format_equation(terms: &[Term], messages: usize) -> String {
    let long = messages > 26;
    terms.iter().map(|t| format_term(t, long)).collect::<Vec<_>>().join(" + ")
}

/// Canonical text rendering; [`parse_text`] inverts it exactly.
pub fn format_text(table: &QueryTable) -> String {
    let p = &table.params;
    let mut out = String::new();
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "# scheme {}", table.scheme).unwrap();
    writeln!(
        out,
        "# M {} P {} N {} q {} L {}",
        p.messages, p.desired, p.databases, p.modulus, p.message_len
    )
    .unwrap();
    let desired: Vec<String> = table.desired.iter().map(|m| (m + 1).to_string()).collect();
    writeln!(out, "# desired {}", desired.join(" ")).unwrap();
    for (db, qs) in table.databases.iter().enumerate() {
        writeln!(out, "database {}", db + 1).unwrap();
        let mut ctx = None;
        for q in qs {
            if ctx != Some((q.round, q.stage)) {
                writeln!(out, "  round {} stage {}", q.round, q.stage + 1).unwrap();
                ctx = Some((q.round, q.stage));
            }
            writeln!(out, "    {}", format_equation(&q.terms, p.messages)).unwrap();
        }
    }
    out
}

/// One row per query: `db,round,stage,category,terms`, all 1-based.
pub fn format_csv(table: &QueryTable) -> String {
    let mut out = String::from("db,round,stage,category,terms\n");
    for (db, qs) in table.databases.iter().enumerate() {
        for q in qs {
            writeln!(
                out,
                "{},{},{},{},{}",
                db + 1,
                q.round,
                q.stage + 1,
                q.category,
                format_equation(&q.terms, table.params.messages)
            )
            .unwrap();
        }
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_count(s: &str, line: usize) -> Result<usize> {
    s.parse::<usize>().map_err(|_| perr(line, format!("expected a number, got {s:?}")))
}

fn parse_term(tok: &str, line: usize) -> Result<Term> {
    let digits = tok.bytes().take_while(u8::is_ascii_digit).count();
    let coeff = if digits == 0 {
        1
    } else {
        tok[..digits].parse::<u64>().map_err(|_| perr(line, format!("bad coefficient in {tok:?}")))?
    };
    let rest = &tok[digits..];
    let bad = || perr(line, format!("bad term {tok:?}"));
    let (message, index) = if let Some((m, i)) = rest.strip_prefix('x').and_then(|r| r.split_once('_')) {
        (parse_count(m, line)?, parse_count(i, line)?)
    } else {
        let mut chars = rest.chars();
        let c = chars.next().filter(char::is_ascii_lowercase).ok_or_else(bad)?;
        ((c as u8 - b'a') as usize + 1, parse_count(chars.as_str(), line)?)
    };
    if message == 0 || index == 0 {
        return Err(bad());
    }
    Ok(Term {
        message: message - 1,
        index: index - 1,
        coeff,
    })
}

fn header_fields<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, Vec<&'a str>)> {
    let (n, l) = lines.next().ok_or_else(|| perr(0, "truncated header"))?;
    let rest = l
        .strip_prefix("# ")
        .and_then(|r| r.strip_prefix(key))
        .ok_or_else(|| perr(n, format!("expected '# {key}'")))?;
    Ok((n, rest.split_whitespace().collect()))
}

/// Parses the output of [`format_text`], recomputing categories and, for the
/// rounds scheme, side-information links.
pub fn parse_text(text: &str) -> Result<QueryTable> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == HEADER => {}
        _ => return Err(perr(1, "missing table header")),
    }
    let (n, f) = header_fields(&mut lines, "scheme")?;
    let scheme: SchemeKind = f.first().ok_or_else(|| perr(n, "missing scheme"))?.parse().map_err(|_| perr(n, "unknown scheme"))?;
    let (n, f) = header_fields(&mut lines, "M")?;
    if f.len() != 9 || f[1] != "P" || f[3] != "N" || f[5] != "q" || f[7] != "L" {
        return Err(perr(n, "expected '# M m P p N n q q L l'"));
    }
    let modulus = f[6].parse::<u64>().map_err(|_| perr(n, "bad q"))?;
    let params = ProblemParams::new(
        parse_count(f[0], n)?,
        parse_count(f[2], n)?,
        parse_count(f[4], n)?,
        modulus,
        parse_count(f[8], n)?,
    )
    .map_err(|e| perr(n, e.to_string()))?;
    let (n, f) = header_fields(&mut lines, "desired")?;
    let mut desired = f.iter().map(|s| parse_count(s, n).map(|v| v.wrapping_sub(1))).collect::<Result<Vec<_>>>()?;
    desired.sort_unstable();
    desired.dedup();
    if desired.len() != params.desired || desired.iter().any(|&m| m >= params.messages) {
        return Err(perr(n, "desired set does not match P and M"));
    }

    let mut databases: Vec<Vec<Query>> = Vec::new();
    let mut ctx: Option<(usize, usize)> = None;
    for (n, raw) in lines {
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix("database ") {
            if parse_count(rest, n)? != databases.len() + 1 {
                return Err(perr(n, "databases out of order"));
            }
            databases.push(Vec::new());
            ctx = None;
        } else if let Some(rest) = l.strip_prefix("round ") {
            let f: Vec<&str> = rest.split_whitespace().collect();
            if f.len() != 3 || f[1] != "stage" {
                return Err(perr(n, "expected 'round r stage s'"));
            }
            let stage = parse_count(f[2], n)?;
            if stage == 0 {
                return Err(perr(n, "stages count from 1"));
            }
            ctx = Some((parse_count(f[0], n)?, stage - 1));
        } else {
            let (round, stage) = ctx.ok_or_else(|| perr(n, "equation outside a round block"))?;
            let qs = databases.last_mut().ok_or_else(|| perr(n, "equation outside a database block"))?;
            let terms = l.split(" + ").map(|t| parse_term(t.trim(), n)).collect::<Result<Vec<_>>>()?;
            let category = terms.iter().filter(|t| desired.binary_search(&t.message).is_ok()).count();
            qs.push(Query {
                terms,
                round,
                stage,
                category,
                side_info: None,
            });
        }
    }
    if databases.len() != params.databases {
        return Err(perr(0, format!("expected {} databases, found {}", params.databases, databases.len())));
    }
    let mut table = QueryTable::new(scheme, params, desired, databases);
    if scheme == SchemeKind::Rounds {
        relink_side_info(&mut table)?;
    }
    Ok(table)
}

fn undesired_key(q: &Query, desired: &[usize]) -> Vec<Term> {
    let mut k: Vec<Term> = q.terms.iter().filter(|t| desired.binary_search(&t.message).is_err()).copied().collect();
    k.sort_unstable();
    k
}

/// Points every mixed query at the undesired-only query, answered by another
/// database, that carries the same undesired combination.
pub fn relink_side_info(table: &mut QueryTable) -> Result<()> {
    let mut producers: HashMap<Vec<Term>, Vec<QueryRef>> = HashMap::new();
    for (db, qs) in table.databases.iter().enumerate() {
        for (pos, q) in qs.iter().enumerate() {
            if q.category == 0 {
                producers.entry(undesired_key(q, &table.desired)).or_default().push(QueryRef { db, pos });
            }
        }
    }
    let desired = table.desired.clone();
    let snapshot = table.databases.clone();
    for (db, qs) in table.databases.iter_mut().enumerate() {
        for q in qs.iter_mut() {
            if q.category == 0 || q.category == q.terms.len() {
                continue;
            }
            let key = undesired_key(q, &desired);
            let found = producers.get(&key).and_then(|cands| {
                cands
                    .iter()
                    .find(|r| r.db != db && snapshot[r.db][r.pos].round + q.category == q.round)
                    .copied()
            });
            q.side_info = Some(found.ok_or_else(|| {
                Error::DecodeMismatch(format!(
                    "database {} round {}: no side information matches {}",
                    db + 1,
                    q.round,
                    format_equation(&key, table.params.messages)
                ))
            })?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> QueryTable {
        let params = ProblemParams::new(3, 2, 2, 5, 4).unwrap();
        let q = |terms: Vec<Term>, round, stage, category, side_info| Query {
            terms,
            round,
            stage,
            category,
            side_info,
        };
        let db0 = vec![
            q(vec![Term::unit(2, 0)], 1, 0, 0, None),
            q(vec![Term::unit(0, 0), Term::unit(2, 1)], 2, 0, 1, Some(QueryRef { db: 1, pos: 0 })),
        ];
        let db1 = vec![
            q(vec![Term::unit(2, 1)], 1, 0, 0, None),
            q(vec![Term { message: 1, index: 3, coeff: 4 }, Term::unit(2, 0)], 2, 0, 1, Some(QueryRef { db: 0, pos: 0 })),
        ];
        QueryTable::new(SchemeKind::Rounds, params, vec![0, 1], vec![db0, db1])
    }

    #[test]
    fn text_round_trip() {
        let t = table();
        let s = format_text(&t);
        assert!(s.contains("    4b4 + c1\n"));
        let back = parse_text(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(format_text(&back), s);
    }

    #[test]
    fn csv_rows() {
        let csv = format_csv(&table());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "db,round,stage,category,terms");
        assert_eq!(lines[2], "1,2,1,1,a1 + c2");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn long_symbols_for_many_messages() {
        let t = Term { message: 29, index: 4, coeff: 2 };
        assert_eq!(format_equation(&[t], 30), "2x30_5");
        assert_eq!(parse_term("2x30_5", 1).unwrap(), t);
        assert_eq!(parse_term("x5", 1).unwrap(), Term::unit(23, 4));
    }

    #[test]
    fn malformed_input_rejected() {
        assert!(parse_text("nope").is_err());
        let s = format_text(&table()).replace("a1 + c2", "a1 + ?");
        assert!(matches!(parse_text(&s), Err(Error::Parse { .. })));
        let s = format_text(&table()).replace("database 2", "database 3");
        assert!(parse_text(&s).is_err());
    }

    #[test]
    fn missing_producer_detected() {
        let s = format_text(&table()).replace("    c2\n", "    c3\n");
        assert!(matches!(parse_text(&s), Err(Error::DecodeMismatch(_))));
    }
}
