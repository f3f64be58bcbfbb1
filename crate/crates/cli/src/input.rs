//! CSV event files: `t` (one process), `t,sample` (two samples labelled
//! `a`/`b`) and `u,v,t` (network events, 1-based ids). A network file may
//! start with `# bipartite <m> <n>`; other `#` lines are comments.

use multiscale_core::{Domain, LongitudinalNetwork, PointPattern};

use crate::error::{CliError, CliResult};

/// Node layout of a network file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Symmetric,
    Bipartite { m: usize, n: usize },
}

/// Parsed rows, before domain inference.
#[derive(Debug, Clone, PartialEq)]
pub enum Events {
    Single(Vec<f64>),
    TwoSample { a: Vec<f64>, b: Vec<f64> },
    Network { layout: Layout, triples: Vec<(usize, usize, f64)> },
}

impl Events {
    pub fn times(&self) -> Vec<f64> {
        match self {
            Events::Single(t) => t.clone(),
            Events::TwoSample { a, b } => a.iter().chain(b).copied().collect(),
            Events::Network { triples, .. } => triples.iter().map(|x| x.2).collect(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Schema {
    Single,
    TwoSample,
    Network,
}

/// Parses event CSV text; `source_name` labels error messages.
pub fn parse_events(text: &str, source_name: &str) -> CliResult<Events> {
    let err = |line: usize, msg: String| CliError::Parse { source_name: source_name.to_string(), line, msg };
    let mut schema = None;
    let mut layout = Layout::Symmetric;
    let (mut single, mut a, mut b, mut triples) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        if let Some(comment) = row.strip_prefix('#') {
            let words: Vec<&str> = comment.split_whitespace().collect();
            if words.first() == Some(&"bipartite") {
                if schema.is_some() {
                    return Err(err(line, "bipartite header must precede the column header".into()));
                }
                let dims: Vec<usize> = words[1..]
                    .iter()
                    .map(|w| w.parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| err(line, "expected '# bipartite <m> <n>'".into()))?;
                if dims.len() != 2 {
                    return Err(err(line, "expected '# bipartite <m> <n>'".into()));
                }
                layout = Layout::Bipartite { m: dims[0], n: dims[1] };
            }
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        let Some(kind) = schema else {
            schema = Some(match fields.as_slice() {
                ["t"] => Schema::Single,
                ["t", "sample"] => Schema::TwoSample,
                ["u", "v", "t"] => Schema::Network,
                _ => return Err(err(line, format!("unrecognized header '{row}'; expected 't', 't,sample' or 'u,v,t'"))),
            });
            continue;
        };
        let time = |s: &str| -> CliResult<f64> {
            match s.parse::<f64>() {
                Ok(t) if t.is_finite() => Ok(t),
                _ => Err(err(line, format!("invalid time '{s}'"))),
            }
        };
        let id = |s: &str| -> CliResult<usize> {
            match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(err(line, format!("invalid node id '{s}'; ids are positive integers"))),
            }
        };
        match (kind, fields.as_slice()) {
            (Schema::Single, [t]) => single.push(time(t)?),
            (Schema::TwoSample, [t, s]) => match *s {
                "a" => a.push(time(t)?),
                "b" => b.push(time(t)?),
                _ => return Err(err(line, format!("sample label must be 'a' or 'b', got '{s}'"))),
            },
            (Schema::Network, [u, v, t]) => triples.push((id(u)?, id(v)?, time(t)?)),
            _ => return Err(err(line, format!("wrong number of fields in '{row}'"))),
        }
    }
    match schema {
        None => Err(err(1, "missing header".into())),
        Some(Schema::Single) => {
            if layout != Layout::Symmetric {
                return Err(err(1, "bipartite header on a non-network file".into()));
            }
            Ok(Events::Single(single))
        }
        Some(Schema::TwoSample) => {
            if layout != Layout::Symmetric {
                return Err(err(1, "bipartite header on a non-network file".into()));
            }
            Ok(Events::TwoSample { a, b })
        }
        Some(Schema::Network) => Ok(Events::Network { layout, triples }),
    }
}

/// `[min t, next float above max t)`, or the override.
pub fn infer_domain(times: &[f64], overridden: Option<(f64, f64)>) -> CliResult<Domain> {
    if let Some((lo, hi)) = overridden {
        return Domain::new(lo, hi).map_err(|e| CliError::config(format!("bad domain override: {e}")));
    }
    if times.is_empty() {
        return Err(CliError::Validation("no events; cannot infer the domain".into()));
    }
    let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Domain::new(lo, hi.next_up())?)
}

pub fn single_pattern(events: &Events, domain: Domain) -> CliResult<PointPattern> {
    match events {
        Events::Single(t) => Ok(PointPattern::new(t.clone(), domain)?),
        _ => Err(CliError::Validation("expected a 't' file".into())),
    }
}

pub fn two_patterns(events: &Events, domain: Domain) -> CliResult<(PointPattern, PointPattern)> {
    match events {
        Events::TwoSample { a, b } => Ok((PointPattern::new(a.clone(), domain)?, PointPattern::new(b.clone(), domain)?)),
        _ => Err(CliError::Validation("two-sample input needs a 't,sample' file".into())),
    }
}

/// Symmetric networks take `n` as the largest id seen.
pub fn network(events: &Events, domain: Domain) -> CliResult<LongitudinalNetwork> {
    match events {
        Events::Network { layout: Layout::Symmetric, triples } => {
            let n = triples.iter().map(|&(u, v, _)| u.max(v)).max().unwrap_or(0);
            Ok(LongitudinalNetwork::symmetric(n, domain, triples)?)
        }
        Events::Network { layout: Layout::Bipartite { m, n }, triples } => {
            Ok(LongitudinalNetwork::bipartite(*m, *n, domain, triples)?)
        }
        _ => Err(CliError::Validation("network input needs a 'u,v,t' file".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_process() {
        let ev = parse_events("t\n0.5\n0.1\n", "x").unwrap();
        let d = infer_domain(&ev.times(), None).unwrap();
        assert_eq!(single_pattern(&ev, d).unwrap().events(), &[0.1, 0.5]);
        assert_eq!(d.lo, 0.1);
        assert!(d.hi > 0.5 && d.hi == 0.5f64.next_up());
    }

    #[test]
    fn two_samples() {
        let ev = parse_events("t,sample\n0.1,a\n0.2,b\n", "x").unwrap();
        let (a, b) = two_patterns(&ev, Domain::unit()).unwrap();
        assert_eq!((a.events(), b.events()), (&[0.1][..], &[0.2][..]));
    }

    #[test]
    fn network_canonicalized() {
        let ev = parse_events("u,v,t\n2,1,0.3\n", "x").unwrap();
        let net = network(&ev, Domain::unit()).unwrap();
        let e = net.events()[0];
        assert_eq!((e.u + 1, e.v + 1, e.t), (1, 2, 0.3));
    }

    #[test]
    fn self_loop_is_a_validation_error() {
        let ev = parse_events("u,v,t\n2,2,0.3\n", "x").unwrap();
        assert!(matches!(network(&ev, Domain::unit()), Err(CliError::Validation(_))));
    }

    #[test]
    fn bipartite_header() {
        let ev = parse_events("# bipartite 2 3\nu,v,t\n2,3,0.5\n1,1,0.2\n", "x").unwrap();
        let net = network(&ev, Domain::unit()).unwrap();
        assert_eq!(net.shape(), (2, 3));
        assert!(parse_events("# bipartite 2\nu,v,t\n", "x").is_err());
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let e = parse_events("t\n0.5\n\nabc\n", "f.csv").unwrap_err();
        assert_eq!(e, CliError::Parse { source_name: "f.csv".into(), line: 4, msg: "invalid time 'abc'".into() });
        assert!(matches!(parse_events("t,sample\n0.1,c\n", "x"), Err(CliError::Parse { line: 2, .. })));
        assert!(matches!(parse_events("x,y\n", "x"), Err(CliError::Parse { line: 1, .. })));
        assert!(matches!(parse_events("u,v,t\n0,1,0.2\n", "x"), Err(CliError::Parse { line: 2, .. })));
        assert!(matches!(parse_events("t\n1,2\n", "x"), Err(CliError::Parse { line: 2, .. })));
        assert!(matches!(parse_events("t\nNaN\n", "x"), Err(CliError::Parse { line: 2, .. })));
    }

    #[test]
    fn empty_input_cannot_infer_domain() {
        let ev = parse_events("t\n", "x").unwrap();
        assert!(matches!(infer_domain(&ev.times(), None), Err(CliError::Validation(_))));
        assert!(matches!(infer_domain(&[], Some((1.0, 0.0))), Err(CliError::Config(_))));
    }
}
