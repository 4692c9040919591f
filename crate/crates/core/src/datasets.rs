//! Synthetic tasks: two-node multivalue XOR, consecutive-`A` sequences,
//! and images cut into patches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::graph::GraphRecord;

pub const SEQ_ALPHABET: [&str; 5] = ["A", "B", "C", "D", "E"];

/// Proportions of the binary sequence task: 13,330 positive and
/// 26,670 negative samples.
pub const SEQ_BINARY_SPLIT: (usize, usize) = (26_670, 13_330);

fn check_noise(noise: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config(format!("noise must be in [0, 1], got {noise}")));
    }
    Ok(())
}

/// Flips a label to a uniformly chosen other class with probability `noise`.
fn noisy(label: usize, classes: usize, noise: f64, rng: &mut ChaCha8Rng) -> usize {
    if noise > 0.0 && rng.gen_bool(noise) {
        let mut c = rng.gen_range(0..classes - 1);
        if c >= label {
            c += 1;
        }
        c
    } else {
        label
    }
}

/// `1` iff `x1 + x2` is even.
pub fn xor_label(x1: usize, x2: usize) -> usize {
    usize::from((x1 + x2).is_multiple_of(2))
}

/// Two-node graphs joined both ways by a `plain` edge. Node values are
/// drawn uniformly from `0..n`; the label is [`xor_label`] before noise.
pub fn gen_mv_xor(n: usize, noise: f64, count: usize, seed: u64) -> Result<Corpus> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 values, got {n}")));
    }
    check_noise(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus::new((0..n).map(|v| v.to_string()).collect(), vec!["plain".into()]);
    for _ in 0..count {
        let x1 = rng.gen_range(0..n);
        let x2 = rng.gen_range(0..n);
        corpus.graphs.push(xor_graph(x1, x2, Some(noisy(xor_label(x1, x2), 2, noise, &mut rng))));
    }
    Ok(corpus)
}

pub fn xor_graph(x1: usize, x2: usize, label: Option<usize>) -> GraphRecord {
    GraphRecord {
        node_symbols: vec![vec![x1.to_string()], vec![x2.to_string()]],
        edges: vec![(0, 1, "plain".into()), (1, 0, "plain".into())],
        label,
    }
}

/// Longest run of `A`.
pub fn longest_a_run<S: AsRef<str>>(seq: &[S]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for s in seq {
        if s.as_ref() == "A" {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// Class of a sequence. Two classes: `1` iff the longest `A` run is at
/// least 3. `k >= 3` classes: `min(run, k) - 1`, and sequences without `A`
/// have no class.
pub fn seq_label<S: AsRef<str>>(seq: &[S], k_classes: usize) -> Option<usize> {
    let run = longest_a_run(seq);
    if k_classes == 2 {
        Some(usize::from(run >= 3))
    } else if run == 0 {
        None
    } else {
        Some(run.min(k_classes) - 1)
    }
}

/// A chain: node `i` carries letter `i`; `right` edges go `i -> i+1`,
/// `left` edges `i+1 -> i`.
pub fn chain_graph<S: AsRef<str>>(seq: &[S], label: Option<usize>) -> GraphRecord {
    let n = seq.len();
    let mut edges = Vec::with_capacity(2 * n.saturating_sub(1));
    for i in 1..n {
        edges.push((i - 1, i, "right".to_string()));
        edges.push((i, i - 1, "left".to_string()));
    }
    GraphRecord {
        node_symbols: seq.iter().map(|s| vec![s.as_ref().to_string()]).collect(),
        edges,
        label,
    }
}

pub fn seq_corpus() -> Corpus {
    Corpus::new(
        SEQ_ALPHABET.iter().map(|s| s.to_string()).collect(),
        vec!["right".into(), "left".into()],
    )
}

/// Per-class sample counts used by [`gen_seq_consecutive`]: a
/// 1 : 2 positive/negative ratio for two classes, balanced otherwise.
pub fn seq_class_counts(k_classes: usize, count: usize) -> Vec<usize> {
    if k_classes == 2 {
        let (neg, pos) = SEQ_BINARY_SPLIT;
        let p = (count as u128 * pos as u128 / (neg + pos) as u128) as usize;
        vec![count - p, p]
    } else {
        (0..k_classes)
            .map(|c| count / k_classes + usize::from(c < count % k_classes))
            .collect()
    }
}

/// Sequences of `length` letters, labelled by [`seq_label`], with the
/// class counts of [`seq_class_counts`] and label noise applied last.
pub fn gen_seq_consecutive(length: usize, k_classes: usize, count: usize, noise: f64, seed: u64) -> Result<Corpus> {
    gen_seq_with_counts(length, &seq_class_counts(k_classes, count), noise, seed)
}

/// As [`gen_seq_consecutive`] with explicit per-class counts. Letters are
/// `A` with probability 1/2, otherwise uniform over the rest of the
/// alphabet; draws are kept until every class is filled, then shuffled.
pub fn gen_seq_with_counts(length: usize, counts: &[usize], noise: f64, seed: u64) -> Result<Corpus> {
    let k = counts.len();
    if k < 2 {
        return Err(Error::Config("need at least two classes".into()));
    }
    check_noise(noise)?;
    // shortest A run a class can have
    let min_run = |c: usize| if k == 2 { 3 * c } else { c + 1 };
    if counts.iter().enumerate().any(|(c, &n)| n > 0 && min_run(c) > length) {
        return Err(Error::Generation(format!(
            "sequences of length {length} cannot fill every class of a {k}-class task"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut left = counts.to_vec();
    let total: usize = counts.iter().sum();
    let mut seqs: Vec<(Vec<&str>, usize)> = Vec::with_capacity(total);
    let budget = 10_000 * (total as u64 + 1);
    let mut draws = 0u64;
    while seqs.len() < total {
        draws += 1;
        if draws > budget {
            return Err(Error::Generation("class quotas could not be met".into()));
        }
        let seq: Vec<&str> = (0..length)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    "A"
                } else {
                    SEQ_ALPHABET[rng.gen_range(1..SEQ_ALPHABET.len())]
                }
            })
            .collect();
        if let Some(c) = seq_label(&seq, k) {
            if left[c] > 0 {
                left[c] -= 1;
                seqs.push((seq, c));
            }
        }
    }
    seqs.shuffle(&mut rng);
    let mut corpus = seq_corpus();
    for (seq, c) in seqs {
        let label = noisy(c, k, noise, &mut rng);
        corpus.graphs.push(chain_graph(&seq, Some(label)));
    }
    Ok(corpus)
}

/// Symbols used by [`gen_grid_patches`]: pixel offsets inside a patch,
/// then patch row and column positions.
pub fn grid_vocabulary(rows: usize, cols: usize, patch: usize, stride: usize) -> Vec<String> {
    let mut v = Vec::new();
    for dy in 0..patch {
        for dx in 0..patch {
            v.push(format!("p{dy}_{dx}"));
        }
    }
    for r in (0..=rows.saturating_sub(patch)).step_by(stride.max(1)) {
        v.push(format!("row{r}"));
    }
    for c in (0..=cols.saturating_sub(patch)).step_by(stride.max(1)) {
        v.push(format!("col{c}"));
    }
    v
}

/// One node per `patch x patch` window (stepping by `stride`), carrying a
/// symbol for each set pixel inside the window plus its row and column
/// position. No edges.
pub fn gen_grid_patches(image: &[Vec<bool>], patch: usize, stride: usize, label: Option<usize>) -> Result<GraphRecord> {
    let rows = image.len();
    let cols = image.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || image.iter().any(|r| r.len() != cols) {
        return Err(Error::Config("image must be a non-empty rectangle".into()));
    }
    if patch == 0 || stride == 0 || patch > rows || patch > cols {
        return Err(Error::Config(format!("patch {patch} / stride {stride} do not fit a {rows}x{cols} image")));
    }
    let mut nodes = Vec::new();
    for r in (0..=rows - patch).step_by(stride) {
        for c in (0..=cols - patch).step_by(stride) {
            let mut syms = Vec::new();
            for dy in 0..patch {
                for dx in 0..patch {
                    if image[r + dy][c + dx] {
                        syms.push(format!("p{dy}_{dx}"));
                    }
                }
            }
            syms.push(format!("row{r}"));
            syms.push(format!("col{c}"));
            nodes.push(syms);
        }
    }
    Ok(GraphRecord {
        node_symbols: nodes,
        edges: Vec::new(),
        label,
    })
}

pub const BAR_SIZE: usize = 8;
pub const BAR_PATCH: usize = 2;

/// An 8x8 image with one full row (`horizontal`) or column set at `pos`.
pub fn bar_image(horizontal: bool, pos: usize) -> Vec<Vec<bool>> {
    (0..BAR_SIZE)
        .map(|r| (0..BAR_SIZE).map(|c| if horizontal { r == pos } else { c == pos }).collect())
        .collect()
}

/// Bar orientation task on 2x2 patches: class 0 horizontal, class 1
/// vertical, balanced.
pub fn gen_bars(count: usize, noise: f64, seed: u64) -> Result<Corpus> {
    check_noise(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus::new(grid_vocabulary(BAR_SIZE, BAR_SIZE, BAR_PATCH, BAR_PATCH), vec![]);
    for i in 0..count {
        let class = i % 2;
        let img = bar_image(class == 0, rng.gen_range(0..BAR_SIZE));
        let label = noisy(class, 2, noise, &mut rng);
        corpus.graphs.push(gen_grid_patches(&img, BAR_PATCH, BAR_PATCH, Some(label))?);
    }
    corpus.graphs.shuffle(&mut rng);
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_labels() {
        assert_eq!(xor_label(2, 7), 0);
        assert_eq!(xor_label(0, 0), 1);
        let c = gen_mv_xor(10, 0.0, 10_000, 3).unwrap();
        for g in &c.graphs {
            let x1: usize = g.node_symbols[0][0].parse().unwrap();
            let x2: usize = g.node_symbols[1][0].parse().unwrap();
            assert_eq!(g.label, Some(usize::from((x1 + x2).is_multiple_of(2))));
        }
        assert!(gen_mv_xor(1, 0.0, 1, 0).is_err());
    }

    #[test]
    fn xor_noise_rate() {
        let clean = gen_mv_xor(10, 0.0, 20_000, 9).unwrap();
        let noisy = gen_mv_xor(10, 0.1, 20_000, 9).unwrap();
        assert!(clean.graphs.iter().all(|g| g.label.is_some()));
        let wrong = noisy
            .graphs
            .iter()
            .filter(|g| {
                let x1: usize = g.node_symbols[0][0].parse().unwrap();
                let x2: usize = g.node_symbols[1][0].parse().unwrap();
                g.label != Some(xor_label(x1, x2))
            })
            .count();
        let rate = wrong as f64 / 20_000.0;
        assert!((rate - 0.1).abs() < 0.01, "{rate}");
    }

    #[test]
    fn sequence_labels() {
        let s = |t: &str| t.chars().map(|c| c.to_string()).collect::<Vec<_>>();
        assert_eq!(seq_label(&s("BAAAE"), 2), Some(1));
        assert_eq!(seq_label(&s("BBAEE"), 3), Some(0));
        assert_eq!(seq_label(&s("BBBBB"), 2), Some(0));
        assert_eq!(seq_label(&s("BBBBB"), 3), None);
        assert_eq!(seq_label(&s("AABAA"), 3), Some(1));
        assert_eq!(seq_label(&s("AAAAB"), 3), Some(2));
    }

    #[test]
    fn sequence_corpus_shape() {
        let c = gen_seq_consecutive(5, 2, 3000, 0.0, 1).unwrap();
        let pos = c.graphs.iter().filter(|g| g.label == Some(1)).count();
        assert_eq!(pos, seq_class_counts(2, 3000)[1]);
        assert_eq!(seq_class_counts(2, 40_000), vec![26_670, 13_330]);
        let g = &c.graphs[0];
        assert_eq!(g.num_nodes(), 5);
        assert_eq!(g.edges[0], (0, 1, "right".to_string()));
        assert_eq!(g.edges[1], (1, 0, "left".to_string()));
        for g in &c.graphs {
            let seq: Vec<&str> = g.node_symbols.iter().map(|n| n[0].as_str()).collect();
            assert_eq!(seq_label(&seq, 2), g.label);
        }
        let c3 = gen_seq_consecutive(5, 3, 301, 0.0, 1).unwrap();
        let per: Vec<usize> = (0..3).map(|k| c3.graphs.iter().filter(|g| g.label == Some(k)).count()).collect();
        assert_eq!(per, vec![101, 100, 100]);
    }

    #[test]
    fn sequence_generation_is_deterministic() {
        assert_eq!(gen_seq_consecutive(5, 2, 200, 0.01, 4).unwrap(), gen_seq_consecutive(5, 2, 200, 0.01, 4).unwrap());
        assert_ne!(gen_seq_consecutive(5, 2, 200, 0.01, 4).unwrap(), gen_seq_consecutive(5, 2, 200, 0.01, 5).unwrap());
    }

    #[test]
    fn impossible_classes() {
        assert!(matches!(gen_seq_consecutive(2, 2, 10, 0.0, 0), Err(Error::Generation(_))));
        assert!(matches!(gen_seq_consecutive(3, 4, 10, 0.0, 0), Err(Error::Generation(_))));
        assert!(gen_seq_consecutive(5, 2, 10, 1.5, 0).is_err());
    }

    #[test]
    fn grid_patches() {
        let blank = vec![vec![false; 4]; 4];
        let g = gen_grid_patches(&blank, 2, 2, None).unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert!(g.edges.is_empty());
        assert!(g.node_symbols.iter().all(|n| n.iter().all(|s| s.starts_with("row") || s.starts_with("col"))));
        let mut one = blank.clone();
        one[3][2] = true;
        let g = gen_grid_patches(&one, 2, 2, None).unwrap();
        let carriers: Vec<_> = g.node_symbols.iter().filter(|n| n.iter().any(|s| s.starts_with('p'))).collect();
        assert_eq!(carriers.len(), 1);
        assert!(carriers[0].contains(&"p1_0".to_string()));
        assert!(carriers[0].contains(&"row2".to_string()));
        assert!(gen_grid_patches(&[vec![true; 3], vec![true; 2]], 1, 1, None).is_err());
        assert!(gen_grid_patches(&blank, 5, 1, None).is_err());
        let vocab = grid_vocabulary(4, 4, 2, 2);
        for n in &g.node_symbols {
            assert!(n.iter().all(|s| vocab.contains(s)));
        }
    }

    #[test]
    fn bars_are_balanced() {
        let c = gen_bars(100, 0.0, 0).unwrap();
        assert_eq!(c.graphs.iter().filter(|g| g.label == Some(0)).count(), 50);
        assert_eq!(c.graphs[0].num_nodes(), 16);
    }
}
