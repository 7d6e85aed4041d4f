use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::noise::RngState;

/// Latent BTL preference scores, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceScores(Vec<f64>);

impl PreferenceScores {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 {
            return Err(invalid("need at least two items"));
        }
        if let Some(i) = omega.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid(format!("preference score {} must be positive (got {})", i + 1, omega[i])));
        }
        Ok(Self(omega))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Probability that `j` is preferred over `i`: `w_j / (w_i + w_j)`.
    pub fn win_probability(&self, i: usize, j: usize) -> f64 {
        self.0[j] / (self.0[i] + self.0[j])
    }
}

/// One compared pair `i < j` with its `L` outcomes `y_{i,j}^{(l)}`
/// (`true` when `j` won). The reverse orientation is `1 - y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub outcomes: Vec<bool>,
}

impl Edge {
    pub fn wins(&self) -> usize {
        self.outcomes.iter().filter(|&&y| y).count()
    }
}

/// Pairwise comparison data on `m` items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonGraph {
    m: usize,
    comparisons: usize,
    normalization: f64,
    edges: Vec<Edge>,
}

/// One sample of one edge set to a given outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleFlip {
    pub edge: usize,
    pub sample: usize,
    pub value: bool,
}

impl ComparisonGraph {
    /// Edges are canonicalised to `i < j` and sorted. Duplicate pairs,
    /// self-loops, out-of-range items and wrong sample counts are rejected.
    pub fn new(m: usize, comparisons: usize, normalization: f64, edges: Vec<Edge>) -> Result<Self> {
        if m < 2 {
            return Err(invalid(format!("m must be at least 2 (got {m})")));
        }
        if comparisons < 1 {
            return Err(invalid("L must be at least 1"));
        }
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(invalid(format!("normalization d must be positive (got {normalization})")));
        }
        let mut canon: BTreeMap<(usize, usize), Vec<bool>> = BTreeMap::new();
        for e in edges {
            if e.i == e.j || e.i >= m || e.j >= m {
                return Err(invalid(format!("invalid edge ({}, {}) for m = {m}", e.i + 1, e.j + 1)));
            }
            if e.outcomes.len() != comparisons {
                return Err(invalid(format!(
                    "edge ({}, {}) has {} samples, expected L = {comparisons}",
                    e.i + 1,
                    e.j + 1,
                    e.outcomes.len()
                )));
            }
            let (key, outcomes) = if e.i < e.j {
                ((e.i, e.j), e.outcomes)
            } else {
                ((e.j, e.i), e.outcomes.into_iter().map(|y| !y).collect())
            };
            if canon.insert(key, outcomes).is_some() {
                return Err(invalid(format!("edge ({}, {}) appears twice", key.0 + 1, key.1 + 1)));
            }
        }
        let edges = canon.into_iter().map(|((i, j), outcomes)| Edge { i, j, outcomes }).collect();
        Ok(Self { m, comparisons, normalization, edges })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `L`, the number of comparisons per edge.
    pub fn comparisons(&self) -> usize {
        self.comparisons
    }

    /// `d`, the transition-matrix normalization.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn with_normalization(mut self, d: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(invalid(format!("normalization d must be positive (got {d})")));
        }
        self.normalization = d;
        Ok(self)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.m];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.m];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let mut seen = vec![false; self.m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn sufficient_stats(&self) -> SufficientStats {
        let l = self.comparisons as f64;
        SufficientStats { m: self.m, ybar: self.edges.iter().map(|e| ((e.i, e.j), e.wins() as f64 / l)).collect() }
    }

    /// Copy of the graph with one sample overwritten.
    pub fn with_sample(&self, flip: SampleFlip) -> Result<Self> {
        let mut g = self.clone();
        let edge =
            g.edges.get_mut(flip.edge).ok_or_else(|| invalid(format!("edge index {} out of range", flip.edge)))?;
        let slot = edge
            .outcomes
            .get_mut(flip.sample)
            .ok_or_else(|| invalid(format!("sample index {} out of range", flip.sample)))?;
        *slot = flip.value;
        Ok(g)
    }

    /// Index of the edge joining `i` and `j`, in either orientation.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search_by(|e| (e.i, e.j).cmp(&key)).ok()
    }

    /// Write the line format: a `m=<int> L=<int> d=<float>` header, then
    /// one `i j l outcome` record per sample with 1-based `i < j` and `l`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m={} L={} d={}", self.m, self.comparisons, self.normalization)?;
        for e in &self.edges {
            for (l, &y) in e.outcomes.iter().enumerate() {
                writeln!(w, "{} {} {} {}", e.i + 1, e.j + 1, l + 1, u8::from(y))?;
            }
        }
        Ok(())
    }

    /// Parse the format written by [`write_to`](Self::write_to). Records may
    /// come in any order and either orientation; blank lines and `#`
    /// comments are skipped.
    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut header: Option<(usize, usize, f64)> = None;
        let mut samples: BTreeMap<(usize, usize), Vec<Option<bool>>> = BTreeMap::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse { line: lineno, message };
            let Some((m, l_count, _)) = header else {
                header = Some(parse_header(text).map_err(perr)?);
                continue;
            };
            let fields: Vec<&str> = text.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(perr(format!("expected `i j l outcome`, got {} fields", fields.len())));
            }
            let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| perr(format!("bad {what} `{s}`")));
            let (i, j, l) = (num(fields[0], "i")?, num(fields[1], "j")?, num(fields[2], "l")?);
            let y = match fields[3] {
                "0" => false,
                "1" => true,
                other => return Err(perr(format!("outcome must be 0 or 1, got `{other}`"))),
            };
            if i == 0 || j == 0 || i > m || j > m || i == j {
                return Err(perr(format!("invalid item pair ({i}, {j}) for m = {m}")));
            }
            if l == 0 || l > l_count {
                return Err(perr(format!("sample index {l} outside [1, {l_count}]")));
            }
            let (key, y) = if i < j { ((i - 1, j - 1), y) } else { ((j - 1, i - 1), !y) };
            let slot = &mut samples.entry(key).or_insert_with(|| vec![None; l_count])[l - 1];
            if slot.is_some() {
                return Err(perr(format!("duplicate record for edge ({i}, {j}) sample {l}")));
            }
            *slot = Some(y);
        }
        let (m, l_count, d) = header.ok_or(Error::Parse { line: 0, message: "missing header".into() })?;
        let mut edges = Vec::with_capacity(samples.len());
        for ((i, j), outcomes) in samples {
            let outcomes: Option<Vec<bool>> = outcomes.into_iter().collect();
            let outcomes = outcomes.ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("edge ({}, {}) is missing samples", i + 1, j + 1),
            })?;
            edges.push(Edge { i, j, outcomes });
        }
        Self::new(m, l_count, d, edges)
    }
}

fn parse_header(text: &str) -> std::result::Result<(usize, usize, f64), String> {
    let mut m = None;
    let mut l = None;
    let mut d = None;
    for tok in text.split_whitespace() {
        let (key, value) = tok.split_once('=').ok_or_else(|| format!("bad header token `{tok}`"))?;
        match key {
            "m" => m = Some(value.parse::<usize>().map_err(|_| format!("bad m `{value}`"))?),
            "L" => l = Some(value.parse::<usize>().map_err(|_| format!("bad L `{value}`"))?),
            "d" => d = Some(value.parse::<f64>().map_err(|_| format!("bad d `{value}`"))?),
            _ => return Err(format!("unknown header key `{key}`")),
        }
    }
    match (m, l, d) {
        (Some(m), Some(l), Some(d)) => Ok((m, l, d)),
        _ => Err("header must be `m=<int> L=<int> d=<float>`".into()),
    }
}

/// Per-edge win rates `ybar_{i,j}`, stored for `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficientStats {
    m: usize,
    ybar: BTreeMap<(usize, usize), f64>,
}

impl SufficientStats {
    /// Win rates set to the exact BTL probabilities on the given pairs.
    pub fn exact_btl(omega: &PreferenceScores, pairs: &[(usize, usize)]) -> Result<Self> {
        let m = omega.len();
        let mut ybar = BTreeMap::new();
        for &(a, b) in pairs {
            if a == b || a >= m || b >= m {
                return Err(invalid(format!("invalid pair ({a}, {b})")));
            }
            let (i, j) = (a.min(b), a.max(b));
            ybar.insert((i, j), omega.win_probability(i, j));
        }
        Ok(Self { m, ybar })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `ybar_{i,j}`, the fraction of comparisons `j` won against `i`.
    pub fn ybar(&self, i: usize, j: usize) -> Option<f64> {
        if i < j {
            self.ybar.get(&(i, j)).copied()
        } else {
            self.ybar.get(&(j, i)).map(|y| 1.0 - y)
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.ybar.iter().map(|(&k, &v)| (k, v))
    }

    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0; self.m];
        for &(i, j) in self.ybar.keys() {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

/// Draw an Erdős–Rényi comparison graph and `L` BTL outcomes per edge.
///
/// The normalization is set to `max degree + 1`. The graph may come out
/// disconnected; check [`ComparisonGraph::is_connected`].
pub fn simulate_comparisons(
    omega: &PreferenceScores,
    edge_prob: f64,
    comparisons: usize,
    rng: &mut RngState,
) -> Result<ComparisonGraph> {
    if !(edge_prob > 0.0 && edge_prob <= 1.0) {
        return Err(invalid(format!("edge probability must be in (0, 1] (got {edge_prob})")));
    }
    if comparisons < 1 {
        return Err(invalid("L must be at least 1"));
    }
    let m = omega.len();
    let mut edges = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            if edge_prob < 1.0 && !rng.bernoulli(edge_prob) {
                continue;
            }
            let p = omega.win_probability(i, j);
            let outcomes = (0..comparisons).map(|_| rng.bernoulli(p)).collect();
            edges.push(Edge { i, j, outcomes });
        }
    }
    let graph = ComparisonGraph::new(m, comparisons, 1.0, edges)?;
    let d = (graph.max_degree() + 1) as f64;
    graph.with_normalization(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega(v: &[f64]) -> PreferenceScores {
        PreferenceScores::new(v.to_vec()).unwrap()
    }

    #[test]
    fn two_items_one_edge() {
        let mut rng = RngState::from_seed(1);
        let g = simulate_comparisons(&omega(&[1.0, 2.0]), 1.0, 7, &mut rng).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.normalization(), 2.0);
        let e = &g.edges()[0];
        let s = g.sufficient_stats();
        assert_eq!(s.ybar(0, 1).unwrap() + s.ybar(1, 0).unwrap(), 1.0);
        assert_eq!(s.ybar(0, 1).unwrap(), e.wins() as f64 / 7.0);
    }

    #[test]
    fn uniform_scores_give_even_win_rates() {
        let mut rng = RngState::from_seed(2);
        let g = simulate_comparisons(&omega(&[1.0; 4]), 1.0, 100_000, &mut rng).unwrap();
        for (_, y) in g.sufficient_stats().pairs() {
            assert!((y - 0.5).abs() < 0.005, "{y}");
        }
    }

    #[test]
    fn btl_win_rate() {
        let mut rng = RngState::from_seed(3);
        let e = std::f64::consts::E;
        let g = simulate_comparisons(&omega(&[1.0, e]), 1.0, 100_000, &mut rng).unwrap();
        let y = g.sufficient_stats().ybar(0, 1).unwrap();
        assert!((y - e / (1.0 + e)).abs() < 0.005, "{y}");
    }

    #[test]
    fn sparse_graph_and_connectivity() {
        let mut rng = RngState::from_seed(4);
        let g = simulate_comparisons(&omega(&[1.0; 30]), 0.05, 1, &mut rng).unwrap();
        assert!(g.edges().len() < 30 * 29 / 2);
        let lonely = ComparisonGraph::new(3, 1, 2.0, vec![Edge { i: 0, j: 1, outcomes: vec![true] }]).unwrap();
        assert!(!lonely.is_connected());
    }

    #[test]
    fn construction_canonicalises_and_validates() {
        let g = ComparisonGraph::new(3, 2, 3.0, vec![Edge { i: 2, j: 0, outcomes: vec![true, false] }]).unwrap();
        assert_eq!(g.edges()[0], Edge { i: 0, j: 2, outcomes: vec![false, true] });
        assert_eq!(g.edge_index(2, 0), Some(0));
        assert!(ComparisonGraph::new(3, 2, 3.0, vec![Edge { i: 0, j: 0, outcomes: vec![true, false] }]).is_err());
        assert!(ComparisonGraph::new(3, 2, 3.0, vec![Edge { i: 0, j: 1, outcomes: vec![true] }]).is_err());
        let dup = vec![Edge { i: 0, j: 1, outcomes: vec![true] }, Edge { i: 1, j: 0, outcomes: vec![true] }];
        assert!(ComparisonGraph::new(3, 1, 3.0, dup).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let mut rng = RngState::from_seed(5);
        let g = simulate_comparisons(&omega(&[3.0, 1.0, 2.0, 0.5]), 0.8, 6, &mut rng)
            .unwrap()
            .with_normalization(4.123_456_789_012_345)
            .unwrap();
        let mut bytes = Vec::new();
        g.write_to(&mut bytes).unwrap();
        let back = ComparisonGraph::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, g);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, bytes);
    }

    #[test]
    fn reader_accepts_reverse_orientation() {
        let text = "m=2 L=2 d=2\n# comment\n2 1 1 1\n1 2 2 1\n";
        let g = ComparisonGraph::read_from(text.as_bytes()).unwrap();
        assert_eq!(g.edges()[0].outcomes, vec![false, true]);
    }

    #[test]
    fn reader_errors_carry_line_numbers() {
        let cases = [
            ("m=2 L=1\n", 1),
            ("m=2 L=1 d=2\n1 2 1 2\n", 2),
            ("m=2 L=1 d=2\n1 3 1 0\n", 2),
            ("m=2 L=1 d=2\n1 2 1 0\n2 1 1 1\n", 3),
            ("m=2 L=2 d=2\n1 2 3 0\n", 2),
        ];
        for (text, line) in cases {
            match ComparisonGraph::read_from(text.as_bytes()) {
                Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(ComparisonGraph::read_from("m=2 L=2 d=2\n1 2 1 0\n".as_bytes()).is_err());
        assert!(ComparisonGraph::read_from("".as_bytes()).is_err());
    }
}
