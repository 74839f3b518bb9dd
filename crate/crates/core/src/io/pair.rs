//! `pair.txt`: view count, then per view a line with the reference id and a
//! line `N id score id score …` listing its sources best-first.

use std::fmt::Write as _;

use super::FormatError;

#[derive(Debug, Clone, PartialEq)]
pub struct PairEntry {
    pub ref_id: usize,
    /// `(source id, score)` in file order.
    pub sources: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairList {
    pub entries: Vec<PairEntry>,
}

impl PairList {
    /// Source ids of `ref_id`, best first.
    pub fn sources_for(&self, ref_id: usize) -> Option<Vec<usize>> {
        self.entries
            .iter()
            .find(|e| e.ref_id == ref_id)
            .map(|e| e.sources.iter().map(|&(id, _)| id).collect())
    }

    pub fn view_ids(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.ref_id).collect()
    }
}

fn err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Pair { line, msg: msg.into() }
}

pub fn read_pair(text: &str) -> Result<PairList, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l.trim()));
    let last_line = text.lines().count();
    let (n, first) = lines.next().ok_or_else(|| err(1, "empty pair file"))?;
    let count: usize = first.parse().map_err(|_| err(n, format!("bad view count `{first}`")))?;
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let (n, ref_line) = lines.next().ok_or_else(|| err(last_line + 1, format!("expected {count} views, found {i}")))?;
        let ref_id: usize = ref_line.parse().map_err(|_| err(n, format!("bad reference id `{ref_line}`")))?;
        let (n, src_line) = lines.next().ok_or_else(|| err(last_line + 1, format!("view {ref_id}: missing source line")))?;
        let mut toks = src_line.split_whitespace();
        let declared: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err(n, "bad source count"))?;
        let rest: Vec<&str> = toks.collect();
        if rest.len() != 2 * declared {
            return Err(err(n, format!("declared {declared} sources but found {} tokens", rest.len())));
        }
        let sources = rest
            .chunks_exact(2)
            .map(|pair| {
                let id = pair[0].parse::<usize>().map_err(|_| err(n, format!("bad source id `{}`", pair[0])))?;
                let score = pair[1].parse::<f64>().map_err(|_| err(n, format!("bad score `{}`", pair[1])))?;
                Ok((id, score))
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        entries.push(PairEntry { ref_id, sources });
    }
    if let Some((n, _)) = lines.next() {
        return Err(err(n, format!("content after the declared {count} views")));
    }
    Ok(PairList { entries })
}

pub fn write_pair(list: &PairList) -> String {
    let mut s = format!("{}\n", list.entries.len());
    for e in &list.entries {
        let _ = writeln!(s, "{}", e.ref_id);
        let _ = write!(s, "{}", e.sources.len());
        for (id, score) in &e.sources {
            let _ = write!(s, " {id} {score}");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_source_list() {
        let list = read_pair("1\n0\n0\n").unwrap();
        assert_eq!(list.entries, vec![PairEntry { ref_id: 0, sources: vec![] }]);
        assert_eq!(write_pair(&list), "1\n0\n0\n");
    }

    #[test]
    fn canonical_ten_sources() {
        let text = "1\n0\n10 10 2346.41 1 2036.53 9 1243.89 12 1052.87 11 1000.84 13 703.583 2 604.456 8 439.759 14 327.419 27 249.278\n";
        let list = read_pair(text).unwrap();
        assert_eq!(list.sources_for(0).unwrap(), vec![10, 1, 9, 12, 11, 13, 2, 8, 14, 27]);
        assert_eq!(list.entries[0].sources[5], (13, 703.583));
        assert_eq!(write_pair(&list), text);
    }

    #[test]
    fn truncated_line() {
        let e = read_pair("1\n0\n3 1 0.5 2\n").unwrap_err();
        assert!(matches!(e, FormatError::Pair { line: 3, .. }), "{e:?}");
    }

    #[test]
    fn count_mismatch() {
        assert!(read_pair("2\n0\n1 1 0.5\n").is_err());
        assert!(read_pair("1\n0\n1 1 0.5\n1\n1 0 0.5\n").is_err());
        assert!(read_pair("").is_err());
    }
}
