//! Plain-text graph serialization.
//!
//! Header line `n d lambda certificate`, then one line per vertex with its
//! sorted neighbors separated by spaces.

use std::fmt::Write;

use super::{Certificate, OverlayError, OverlayGraph};

fn parse_certificate(s: &str) -> Option<Certificate> {
    match s {
        "complete" => Some(Certificate::CompleteFallback),
        "uncertified" => Some(Certificate::UncertifiedRandom),
        _ => s
            .strip_prefix("ramanujan:")
            .and_then(|x| x.parse().ok())
            .map(Certificate::CertifiedRamanujan),
    }
}

impl OverlayGraph {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        // `{:?}` prints the shortest representation that parses back exactly.
        let _ = writeln!(
            out,
            "{} {} {:?} {}",
            self.node_count(),
            self.degree(),
            self.lambda(),
            self.certificate()
        );
        for list in self.adjacency() {
            let line: Vec<String> = list.iter().map(usize::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, OverlayError> {
        let err = |line: usize, reason: &str| OverlayError::Parse {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [n, d, lambda, cert] = fields[..] else {
            return Err(err(1, "header needs four fields"));
        };
        let n: usize = n.parse().map_err(|_| err(1, "bad node count"))?;
        let d: usize = d.parse().map_err(|_| err(1, "bad degree"))?;
        let lambda: f64 = lambda.parse().map_err(|_| err(1, "bad lambda"))?;
        let cert = parse_certificate(cert).ok_or_else(|| err(1, "bad certificate"))?;
        let mut adjacency = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let list = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<Vec<usize>, _>>()
                .map_err(|_| err(i + 2, "bad neighbor index"))?;
            adjacency.push(list);
        }
        if adjacency.len() != n {
            return Err(err(adjacency.len() + 2, "vertex count does not match header"));
        }
        let graph = Self::from_parts_unchecked(adjacency, lambda, cert)?;
        if graph.degree() != d {
            return Err(err(1, "degree does not match adjacency"));
        }
        Ok(graph)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::build_regular_expander;

    #[test]
    fn round_trips_exactly() {
        let g = build_regular_expander(50, 4, 0.1, 2, 50).unwrap();
        let text = g.to_text();
        let back = OverlayGraph::from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
        let k = OverlayGraph::complete(4);
        assert_eq!(k.to_text(), "4 3 1.0 complete\n1 2 3\n0 2 3\n0 1 3\n0 1 2\n");
        assert_eq!(OverlayGraph::from_text(&k.to_text()).unwrap(), k);
    }

    #[test]
    fn rejects_malformed_text() {
        assert!(matches!(
            OverlayGraph::from_text("3 2 1.0 complete\n1 2\n0 2\n"),
            Err(OverlayError::Parse { .. })
        ));
        assert!(OverlayGraph::from_text("2 1 0.0 nope\n1\n0\n").is_err());
    }
}
