//! Line-oriented text formats for OCPs and NFAs. `#` starts a comment.
//!
//! ```text
//! ocp
//! loc a b
//! prop p_b : b
//! zero a 0 b
//! pos a -1 a
//! wpos a -3 b      # weighted, expanded into unit steps on load
//! ```
//!
//! ```text
//! nfa
//! state s f
//! init s
//! final f
//! trans s 1 f
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::nfa::{Nfa, NfaBuilder, NfaError};
use crate::ocp::{normalize_weighted, Ocp, OcpError, Side, WeightedOcpSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Ocp(#[from] OcpError),
    #[error(transparent)]
    Nfa(#[from] NfaError),
}

fn syntax<T>(line: usize, msg: impl Into<String>) -> Result<T, TextError> {
    Err(TextError::Syntax {
        line,
        msg: msg.into(),
    })
}

/// Non-empty lines with comments stripped, paired with 1-based numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let words: Vec<&str> = l.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

pub(crate) fn parse_int(line: usize, s: &str) -> Result<i64, TextError> {
    s.strip_prefix('+')
        .unwrap_or(s)
        .parse()
        .or_else(|_| syntax(line, format!("`{s}` is not an integer")))
}

pub(crate) fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, Vec<&'a str>)>,
    expected: &str,
) -> Result<(), TextError> {
    match lines.next() {
        Some((_, w)) if w == [expected] => Ok(()),
        Some((line, _)) => syntax(line, format!("expected `{expected}` header")),
        None => syntax(1, format!("empty input, expected `{expected}` header")),
    }
}

/// Parses the OCP format. Weighted transitions are expanded with
/// [`normalize_weighted`].
pub fn parse_ocp(text: &str) -> Result<Ocp, TextError> {
    let mut lines = content_lines(text);
    header(&mut lines, "ocp")?;
    let mut spec = WeightedOcpSpec::new();
    for (line, w) in lines {
        match w[0] {
            "loc" => {
                for name in &w[1..] {
                    spec.location(name);
                }
            }
            "prop" => {
                if w.len() < 3 || w[2] != ":" {
                    return syntax(line, "expected `prop NAME : LOC...`");
                }
                for loc in &w[3..] {
                    spec.label(w[1], loc);
                }
            }
            kw @ ("zero" | "pos" | "wzero" | "wpos") => {
                if w.len() != 4 {
                    return syntax(line, format!("expected `{kw} SRC DELTA DST`"));
                }
                let k = parse_int(line, w[2])?;
                let ok = match kw {
                    "zero" => (0..=1).contains(&k),
                    "pos" => (-1..=1).contains(&k),
                    "wzero" => k >= 0,
                    _ => true,
                };
                if !ok {
                    return syntax(line, format!("delta {k} not allowed for `{kw}`"));
                }
                if kw.ends_with("zero") {
                    spec.zero(w[1], k, w[3]);
                } else {
                    spec.pos(w[1], k, w[3]);
                }
            }
            other => return syntax(line, format!("unknown directive `{other}`")),
        }
    }
    if spec.locations.is_empty() {
        return Err(OcpError::NoLocations.into());
    }
    Ok(normalize_weighted(&spec)?.ocp)
}

/// Renders an OCP in the text format; transitions are listed in source
/// location order.
pub fn write_ocp(ocp: &Ocp) -> String {
    let mut out = String::from("ocp\n");
    let names: Vec<&str> = ocp.locations().map(|l| ocp.name(l)).collect();
    let _ = writeln!(out, "loc {}", names.join(" "));
    for p in ocp.propositions() {
        let locs: Vec<&str> = ocp
            .label_set(p)
            .into_iter()
            .flat_map(|s| s.ones())
            .map(|i| names[i])
            .collect();
        let _ = writeln!(out, "prop {p} : {}", locs.join(" "));
    }
    for (side, kw) in [(Side::Zero, "zero"), (Side::Positive, "pos")] {
        for t in ocp.transitions(side) {
            let delta = if t.delta > 0 {
                "+1".to_string()
            } else {
                t.delta.to_string()
            };
            let _ = writeln!(
                out,
                "{kw} {} {delta} {}",
                names[t.src.index()],
                names[t.dst.index()]
            );
        }
    }
    out
}

pub fn parse_nfa(text: &str) -> Result<Nfa, TextError> {
    let mut lines = content_lines(text);
    header(&mut lines, "nfa")?;
    let mut b = NfaBuilder::new();
    let mut declared = false;
    let mut init = None;
    let mut finals = Vec::new();
    let mut trans = Vec::new();
    for (line, w) in lines {
        match w[0] {
            "state" => {
                declared = true;
                for name in &w[1..] {
                    b.state(name);
                }
            }
            "init" if w.len() == 2 => init = Some((line, w[1])),
            "final" => finals.extend(w[1..].iter().map(|s| (line, *s))),
            "trans" if w.len() == 4 => {
                let bit = match w[2] {
                    "0" => false,
                    "1" => true,
                    other => return syntax(line, format!("`{other}` is not a bit")),
                };
                trans.push((line, w[1], bit, w[3]));
            }
            other => return syntax(line, format!("malformed `{other}` line")),
        }
    }
    if !declared {
        return syntax(1, "missing `state` line");
    }
    let lookup = |b: &NfaBuilder, line: usize, name: &str| {
        b.lookup(name).map_err(|e| TextError::Syntax {
            line,
            msg: e.to_string(),
        })
    };
    let (line, name) = init.ok_or(NfaError::NoInitial)?;
    let s = lookup(&b, line, name)?;
    b.initial(s);
    for (line, name) in finals {
        let s = lookup(&b, line, name)?;
        b.accepting(s);
    }
    for (line, src, bit, dst) in trans {
        let s = lookup(&b, line, src)?;
        let t = lookup(&b, line, dst)?;
        b.transition(s, bit, t);
    }
    Ok(b.build()?)
}

pub fn write_nfa(a: &Nfa) -> String {
    let mut out = String::from("nfa\n");
    let names: Vec<&str> = (0..a.num_states()).map(|s| a.name(s)).collect();
    let _ = writeln!(out, "state {}", names.join(" "));
    let _ = writeln!(out, "init {}", names[a.initial()]);
    let finals: Vec<&str> = (0..a.num_states())
        .filter(|&s| a.is_final(s))
        .map(|s| names[s])
        .collect();
    if !finals.is_empty() {
        let _ = writeln!(out, "final {}", finals.join(" "));
    }
    for &(s, bit, t) in a.transitions() {
        let _ = writeln!(out, "trans {} {} {}", names[s], u8::from(bit), names[t]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# two locations\nocp\nloc a b\nprop p_b : b\nzero a 0 b\npos a -1 a\npos a 0 b\n";

    #[test]
    fn ocp_round_trip() {
        let o = parse_ocp(SAMPLE).unwrap();
        assert_eq!(o.num_locations(), 2);
        let text = write_ocp(&o);
        assert_eq!(parse_ocp(&text).unwrap(), o);
        assert_eq!(write_ocp(&parse_ocp(&text).unwrap()), text);
    }

    #[test]
    fn ocp_errors() {
        assert!(matches!(
            parse_ocp("ocp\nzero a -1 b\n"),
            Err(TextError::Syntax { line: 2, .. })
        ));
        assert!(parse_ocp("loc a\n").is_err());
        assert!(parse_ocp("ocp\nfoo a\n").is_err());
        assert!(parse_ocp("ocp\nwzero a -2 b\n").is_err());
        assert!(matches!(
            parse_ocp("ocp\n"),
            Err(TextError::Ocp(OcpError::NoLocations))
        ));
    }

    #[test]
    fn weighted_lines_expand() {
        let o = parse_ocp("ocp\nwpos a -3 a\n").unwrap();
        assert_eq!(o.num_locations(), 3);
    }

    #[test]
    fn nfa_round_trip() {
        let text = "nfa\nstate s f\ninit s\nfinal f\ntrans s 0 s\ntrans s 1 f\n";
        let a = parse_nfa(text).unwrap();
        assert!(a.accepts(&[false, true]));
        assert_eq!(write_nfa(&a), text);
        assert!(parse_nfa("nfa\nstate s\ninit t\n").is_err());
        assert!(parse_nfa("nfa\nstate s\n").is_err());
    }
}
