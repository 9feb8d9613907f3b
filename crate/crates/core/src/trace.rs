//! Text trace format: one operation per line, `i <uint64>` for an insert and
//! `x` for an extract-min. Blank lines and `#` comments are skipped. Loading
//! validates that no extract underflows the live size.

use crate::error::{PqError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOp {
    Insert(u64),
    Extract,
}

pub fn parse(text: &str) -> Result<Vec<TraceOp>> {
    let mut ops = Vec::new();
    let mut live = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        if line == "x" {
            if live == 0 {
                return Err(PqError::Trace {
                    line: lineno,
                    msg: "extract from empty queue".into(),
                });
            }
            live -= 1;
            ops.push(TraceOp::Extract);
        } else if let Some(rest) = line.strip_prefix("i ") {
            let key: u64 = rest.trim().parse().map_err(|e| PqError::Trace {
                line: lineno,
                msg: format!("bad key: {e}"),
            })?;
            live += 1;
            ops.push(TraceOp::Insert(key));
        } else {
            return Err(PqError::Trace {
                line: lineno,
                msg: format!("unrecognized op {line:?}"),
            });
        }
    }
    Ok(ops)
}

pub fn render(ops: &[TraceOp]) -> String {
    let mut out = String::new();
    for op in ops {
        match op {
            TraceOp::Insert(k) => out.push_str(&format!("i {k}\n")),
            TraceOp::Extract => out.push_str("x\n"),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_trace() {
        let ops = parse("i 5\n# comment\n\ni 3\nx\n").unwrap();
        assert_eq!(ops, vec![TraceOp::Insert(5), TraceOp::Insert(3), TraceOp::Extract]);
    }

    #[test]
    fn rejects_underflowing_extract() {
        let err = parse("i 1\nx\nx\n").unwrap_err();
        assert!(matches!(err, PqError::Trace { line: 3, .. }));
    }

    #[test]
    fn rejects_garbage_with_line_number() {
        let err = parse("i 5\npop\n").unwrap_err();
        assert!(matches!(err, PqError::Trace { line: 2, .. }));
    }

    #[test]
    fn round_trips() {
        let ops = vec![TraceOp::Insert(9), TraceOp::Extract];
        assert_eq!(parse(&render(&ops)).unwrap(), ops);
    }
}
