//! Word vectors, orthogonal Procrustes alignment and CSLS retrieval.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, Provenance};

/// Neighborhood size for CSLS density terms.
pub const DEFAULT_CSLS_K: usize = 10;

/// Number of most frequent source words translated during induction.
pub const DEFAULT_FREQUENT_WORD_CAP: usize = 200_000;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Returns the unit vector along `v`, or `None` for a zero or non-finite vector.
pub fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / n).collect())
}

/// Mean of the `k` largest values. `k` must be in `1..=values.len()`.
pub(crate) fn top_k_mean(values: &[f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= values.len());
    let mut scratch = values.to_vec();
    if k < scratch.len() {
        scratch.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    scratch[..k].iter().sum::<f64>() / k as f64
}

/// Vocabulary plus a row-major matrix of unit-length vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    dim: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub rows_read: usize,
    pub duplicates: usize,
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` rows, normalizing every vector.
    /// A repeated word keeps its first vector; the number of dropped
    /// duplicates is returned alongside.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<(Self, usize)>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = EmbeddingTable {
            vocab: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            dim,
        };
        let mut duplicates = 0;
        for (word, vector) in rows {
            let word = word.into();
            if vector.len() != dim {
                return Err(Error::DimensionMismatch(dim, vector.len()));
            }
            if table.index.contains_key(&word) {
                duplicates += 1;
                continue;
            }
            let v = unit(&vector).ok_or_else(|| Error::ZeroVector(word.clone()))?;
            table.index.insert(word.clone(), table.vocab.len());
            table.vocab.push(word);
            table.data.extend_from_slice(&v);
        }
        Ok((table, duplicates))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word(&self, i: usize) -> &str {
        &self.vocab[i]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.len())
    }

    /// Writes the text vector format: a `count dim` header, then one
    /// `word v1 ... vd` line per row.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (word, row) in self.vocab.iter().zip(self.rows()) {
            write!(out, "{word}")?;
            for x in row {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Loads a text vector file, reading at most `limit` data rows.
pub fn load_vectors(path: &Path, limit: Option<usize>) -> Result<(EmbeddingTable, LoadStats)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_vectors(BufReader::new(file), path, limit)
}

pub fn parse_vectors<R: BufRead>(
    reader: R,
    path: &Path,
    limit: Option<usize>,
) -> Result<(EmbeddingTable, LoadStats)> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::parse(path, 1, "missing header")),
    };
    let mut fields = header.split_whitespace();
    let (count, dim) = match (
        fields.next().map(str::parse::<usize>),
        fields.next().map(str::parse::<usize>),
        fields.next(),
    ) {
        (Some(Ok(count)), Some(Ok(dim)), None) if dim > 0 => (count, dim),
        _ => return Err(Error::parse(path, 1, "malformed header, expected `count dim`")),
    };
    let wanted = limit.map_or(count, |l| l.min(count));

    let mut rows = Vec::with_capacity(wanted);
    for (i, line) in lines.enumerate().take(wanted) {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::parse(path, lineno, "empty row"))?;
        let vector = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("non-numeric component `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vector.len() != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {dim} components, found {}", vector.len()),
            ));
        }
        if unit(&vector).is_none() {
            return Err(Error::parse(path, lineno, format!("zero vector for `{word}`")));
        }
        rows.push((word.to_owned(), vector));
    }
    if rows.len() < wanted {
        return Err(Error::parse(
            path,
            rows.len() + 2,
            format!("expected {wanted} rows, found {}", rows.len()),
        ));
    }
    let rows_read = rows.len();
    let (table, duplicates) = EmbeddingTable::from_rows(dim, rows)?;
    Ok((
        table,
        LoadStats {
            rows_read,
            duplicates,
        },
    ))
}

/// A square linear map applied as `y = M x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: Vec<f64>,
    dim: usize,
    orthogonal: bool,
}

impl LinearMap {
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        LinearMap {
            matrix,
            dim,
            orthogonal: true,
        }
    }

    /// Wraps a row-major `dim × dim` matrix.
    pub fn from_row_major(dim: usize, matrix: Vec<f64>, orthogonal: bool) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch(dim * dim, matrix.len()));
        }
        Ok(LinearMap {
            matrix,
            dim,
            orthogonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.chunks_exact(self.dim).map(|r| dot(r, x)).collect()
    }

    /// Largest absolute entry of `MᵀM − I`.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for r in 0..d {
                    acc += self.entry(r, i) * self.entry(r, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct ProcrustesFit {
    pub map: LinearMap,
    pub used_pairs: usize,
    pub skipped_pairs: usize,
}

/// Orthogonal map minimizing `‖M X − Y‖_F` over the usable seed pairs.
///
/// Every pair whose two words are present enters the fit, including several
/// translations of the same source word. Solved as `M = U Vᵀ` from the SVD
/// `Y Xᵀ = U Σ Vᵀ`.
pub fn fit_procrustes<'a, I>(
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    seed_pairs: I,
) -> Result<ProcrustesFit>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch(src.dim(), tgt.dim()));
    }
    let d = src.dim();
    let mut cross = vec![0.0; d * d];
    let mut used = 0;
    let mut skipped = 0;
    for (s, t) in seed_pairs {
        let (Some(x), Some(y)) = (src.get(s), tgt.get(t)) else {
            skipped += 1;
            continue;
        };
        used += 1;
        for (i, yi) in y.iter().enumerate() {
            let row = &mut cross[i * d..(i + 1) * d];
            for (c, xj) in row.iter_mut().zip(x) {
                *c += yi * xj;
            }
        }
    }
    if used < d {
        return Err(Error::InsufficientSeed {
            usable: used,
            required: d,
        });
    }
    let svd = DMatrix::from_row_slice(d, d, &cross).svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numerical("SVD did not return singular vectors".into()));
    };
    let m = u * v_t;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite entries in Procrustes solution".into()));
    }
    let matrix = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect();
    Ok(ProcrustesFit {
        map: LinearMap::from_row_major(d, matrix, true)?,
        used_pairs: used,
        skipped_pairs: skipped,
    })
}

/// Cross-domain similarity local scaling over one batch of queries.
///
/// `CSLS(x, y) = 2 cos(x, y) − r_tgt(x) − r_src(y)` where `r_tgt(x)` is the
/// mean cosine of `x` to its `k` nearest candidates and `r_src(y)` the mean
/// cosine of `y` to its `k` nearest queries of the batch. The query-side
/// neighborhood is capped at the batch size.
pub struct Csls<'a> {
    queries: Vec<f64>,
    num_queries: usize,
    candidates: &'a EmbeddingTable,
    k: usize,
    candidate_density: Vec<f64>,
}

impl<'a> Csls<'a> {
    pub fn new<Q: AsRef<[f64]>>(
        queries: &[Q],
        candidates: &'a EmbeddingTable,
        k: usize,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("CSLS k must be at least 1".into()));
        }
        if k > candidates.len() {
            return Err(Error::InvalidArgument(format!(
                "CSLS k = {k} exceeds candidate count {}",
                candidates.len()
            )));
        }
        let d = candidates.dim();
        let mut flat = Vec::with_capacity(queries.len() * d);
        for (i, q) in queries.iter().enumerate() {
            let q = q.as_ref();
            if q.len() != d {
                return Err(Error::DimensionMismatch(d, q.len()));
            }
            let u = unit(q).ok_or_else(|| Error::ZeroVector(format!("query {i}")))?;
            flat.extend_from_slice(&u);
        }
        let num_queries = queries.len();
        let query_k = k.min(num_queries);
        let candidate_density = if num_queries == 0 {
            vec![0.0; candidates.len()]
        } else {
            (0..candidates.len())
                .into_par_iter()
                .map(|j| {
                    let y = candidates.row(j);
                    let sims: Vec<f64> = flat.chunks_exact(d).map(|q| dot(q, y)).collect();
                    top_k_mean(&sims, query_k)
                })
                .collect()
        };
        Ok(Csls {
            queries: flat,
            num_queries,
            candidates,
            k,
            candidate_density,
        })
    }

    pub fn num_queries(&self) -> usize {
        self.num_queries
    }

    fn query(&self, i: usize) -> &[f64] {
        let d = self.candidates.dim();
        &self.queries[i * d..(i + 1) * d]
    }

    /// Cosine of query `i` to every candidate.
    pub fn cosines(&self, i: usize) -> Vec<f64> {
        let q = self.query(i);
        self.candidates.rows().map(|y| dot(q, y)).collect()
    }

    /// `r_src(y)` for every candidate.
    pub fn candidate_density(&self) -> &[f64] {
        &self.candidate_density
    }

    /// `r_tgt(x)` for query `i`.
    pub fn query_density(&self, i: usize) -> f64 {
        top_k_mean(&self.cosines(i), self.k)
    }

    /// CSLS of query `i` against every candidate.
    pub fn scores(&self, i: usize) -> Vec<f64> {
        let cos = self.cosines(i);
        let r_query = top_k_mean(&cos, self.k);
        cos.iter()
            .zip(&self.candidate_density)
            .map(|(c, r_cand)| 2.0 * c - r_query - r_cand)
            .collect()
    }

    /// Highest-scoring candidate for query `i`; equal scores resolve to the
    /// lexicographically smallest candidate word.
    pub fn best(&self, i: usize) -> (usize, f64) {
        let scores = self.scores(i);
        let mut best = 0;
        for (j, &s) in scores.iter().enumerate().skip(1) {
            let b = scores[best];
            if s > b || (s == b && self.candidates.word(j) < self.candidates.word(best)) {
                best = j;
            }
        }
        (best, scores[best])
    }
}

/// CSLS scores of a single query, treated as a batch of one.
pub fn csls_scores(query: &[f64], candidates: &EmbeddingTable, k: usize) -> Result<Vec<f64>> {
    let csls = Csls::new(&[query], candidates, k)?;
    Ok(csls.scores(0))
}

/// Translates the `cap` most frequent source words by projecting them with
/// `map` and taking the CSLS nearest target word.
pub fn induce_lexicon(
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    map: &LinearMap,
    src_freq: &FrequencyTable,
    cap: usize,
    k: usize,
) -> Result<Lexicon> {
    if cap == 0 {
        return Err(Error::InvalidArgument("frequent-word cap must be at least 1".into()));
    }
    let words: Vec<&str> = src_freq
        .top_k(cap)
        .into_iter()
        .filter(|w| src.index_of(w).is_some())
        .collect();
    induce_lexicon_for(src, tgt, map, &words, k)
}

/// Same as [`induce_lexicon`] for an explicit list of source words. Words
/// missing from `src` are skipped.
pub fn induce_lexicon_for<S: AsRef<str>>(
    src: &EmbeddingTable,
    tgt: &EmbeddingTable,
    map: &LinearMap,
    words: &[S],
    k: usize,
) -> Result<Lexicon> {
    if map.dim() != src.dim() {
        return Err(Error::DimensionMismatch(map.dim(), src.dim()));
    }
    if tgt.dim() != src.dim() {
        return Err(Error::DimensionMismatch(src.dim(), tgt.dim()));
    }
    let present: Vec<(&str, usize)> = words
        .iter()
        .filter_map(|w| src.index_of(w.as_ref()).map(|i| (w.as_ref(), i)))
        .collect();
    let projected: Vec<Vec<f64>> = present
        .par_iter()
        .map(|&(_, i)| map.apply(src.row(i)))
        .collect();
    let csls = Csls::new(&projected, tgt, k)?;
    let translations: Vec<usize> = (0..present.len())
        .into_par_iter()
        .map(|i| csls.best(i).0)
        .collect();
    Ok(Lexicon::from_pairs(
        present
            .iter()
            .zip(translations)
            .map(|(&(w, _), j)| (w.to_owned(), tgt.word(j).to_owned())),
        Provenance::Projected,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<(EmbeddingTable, LoadStats)> {
        parse_vectors(Cursor::new(text), Path::new("mem.vec"), None)
    }

    #[test]
    fn loads_and_normalizes() {
        let (table, stats) = parse("2 3\na 3 4 0\nb 0 0 2\n").unwrap();
        assert_eq!(table.dim(), 3);
        assert_eq!(table.len(), 2);
        assert_eq!(stats.duplicates, 0);
        let a = table.get("a").unwrap();
        assert!((a[0] - 0.6).abs() < 1e-12 && (a[1] - 0.8).abs() < 1e-12 && a[2] == 0.0);
        assert_eq!(table.get("b").unwrap(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn duplicate_words_keep_first() {
        let (table, stats) = parse("3 2\na 1 0\na 0 1\nb 1 1\n").unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(stats.duplicates, 1);
        assert_eq!(table.get("a").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn limit_reads_prefix() {
        let (table, _) = parse_vectors(
            Cursor::new("3 2\na 1 0\nb 0 1\nc 1 1\n"),
            Path::new("mem.vec"),
            Some(2),
        )
        .unwrap();
        assert_eq!(table.vocab(), &["a".to_owned(), "b".to_owned()]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse("2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("x 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("2 2\na 1 0\nb 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse("1 2\na 1 z\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("1 2\na 0 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("3 2\na 1 0\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse(""), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn identity_seed_gives_identity_map() {
        let rows: Vec<(String, Vec<f64>)> = (0..6)
            .map(|i| {
                let v: Vec<f64> = (0..4).map(|j| ((i * 7 + j * 3) % 5) as f64 - 1.7).collect();
                (format!("w{i}"), v)
            })
            .collect();
        let (table, _) = EmbeddingTable::from_rows(4, rows).unwrap();
        let pairs: Vec<(&str, &str)> = table.vocab().iter().map(|w| (w.as_str(), w.as_str())).collect();
        let fit = fit_procrustes(&table, &table, pairs).unwrap();
        let id = LinearMap::identity(4);
        for (a, b) in fit.map.as_row_major().iter().zip(id.as_row_major()) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(fit.map.orthogonality_error() < 1e-5);
    }

    #[test]
    fn procrustes_needs_dim_usable_pairs() {
        let (table, _) =
            EmbeddingTable::from_rows(3, [("a", vec![1.0, 0.0, 0.0]), ("b", vec![0.0, 1.0, 0.0])])
                .unwrap();
        let err = fit_procrustes(&table, &table, [("a", "a"), ("b", "b"), ("a", "zz")]).unwrap_err();
        assert!(matches!(err, Error::InsufficientSeed { usable: 2, required: 3 }));
    }

    #[test]
    fn csls_single_identical_candidate_scores_zero() {
        let (table, _) = EmbeddingTable::from_rows(2, [("a", vec![0.3, 0.4])]).unwrap();
        let scores = csls_scores(&[3.0, 4.0], &table, 1).unwrap();
        assert_eq!(scores.len(), 1);
        assert!(scores[0].abs() < 1e-12);
    }

    #[test]
    fn csls_rejects_bad_inputs() {
        let (table, _) = EmbeddingTable::from_rows(2, [("a", vec![1.0, 0.0])]).unwrap();
        assert!(matches!(csls_scores(&[0.0, 0.0], &table, 1), Err(Error::ZeroVector(_))));
        assert!(csls_scores(&[1.0, 0.0], &table, 0).is_err());
        assert!(csls_scores(&[1.0, 0.0], &table, 2).is_err());
    }

    #[test]
    fn csls_hand_computed_three_candidates() {
        // Candidates at angles 0, 90 and 45 degrees; a single query at 0.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (table, _) = EmbeddingTable::from_rows(
            2,
            [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("c", vec![1.0, 1.0])],
        )
        .unwrap();
        let scores = csls_scores(&[1.0, 0.0], &table, 2).unwrap();
        // cos = [1, 0, s]; r_query = (1 + s) / 2; r_cand(y) = cos(y, query) with one query.
        let r = (1.0 + s) / 2.0;
        let expected = [2.0 - r - 1.0, 0.0 - r - 0.0, 2.0 * s - r - s];
        for (got, want) in scores.iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn csls_ties_resolve_to_smallest_word() {
        let (table, _) =
            EmbeddingTable::from_rows(2, [("zeta", vec![1.0, 0.0]), ("alpha", vec![1.0, 0.0])])
                .unwrap();
        let csls = Csls::new(&[[1.0, 0.0]], &table, 1).unwrap();
        assert_eq!(table.word(csls.best(0).0), "alpha");
    }

    #[test]
    fn identity_induction_translates_to_self() {
        let rows: Vec<(String, Vec<f64>)> = (0..20)
            .map(|i| {
                let v: Vec<f64> = (0..5).map(|j| (((i + 3) * (j + 5) * 37) % 23) as f64 - 11.0).collect();
                (format!("w{i}"), v)
            })
            .collect();
        let (table, _) = EmbeddingTable::from_rows(5, rows).unwrap();
        let mut freq = FrequencyTable::new();
        for w in table.vocab() {
            freq.add_token(w);
        }
        freq.add_token("not-in-table");
        let lex = induce_lexicon(&table, &table, &LinearMap::identity(5), &freq, 100, 3).unwrap();
        assert_eq!(lex.len(), 20);
        assert_eq!(lex.provenance(), Provenance::Projected);
        for w in table.vocab() {
            assert_eq!(lex.get(w), Some(w.as_str()));
        }
    }

    #[test]
    fn induction_respects_cap() {
        let (table, _) = EmbeddingTable::from_rows(
            2,
            [("a", vec![1.0, 0.1]), ("b", vec![0.1, 1.0]), ("c", vec![1.0, 1.0])],
        )
        .unwrap();
        let mut freq = FrequencyTable::new();
        for (w, n) in [("a", 1), ("b", 5), ("c", 3)] {
            for _ in 0..n {
                freq.add_token(w);
            }
        }
        let lex = induce_lexicon(&table, &table, &LinearMap::identity(2), &freq, 2, 1).unwrap();
        assert_eq!(lex.len(), 2);
        assert!(lex.contains("b") && lex.contains("c"));
        assert!(induce_lexicon(&table, &table, &LinearMap::identity(2), &freq, 0, 1).is_err());
    }
}
