//! Word similarity from an is-a concept taxonomy.
//!
//! Concepts carry corpus probabilities `p(c)`: the chance that a random
//! corpus word is an instance of `c` or one of its descendants. Two concepts
//! are scored with `log(p(c1) p(c2) / (2 p(lcs(c1, c2))))`, where `lcs` is
//! their most specific common ancestor. Note this is not the textbook
//! Jiang–Conrath distance, which squares `p(lcs)`.
//!
//! Taxonomy file lines: `concept <id>`, `isa <child> <parent>`,
//! `member <word> <concept>`. Blank lines and `#` comments are ignored.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::corpus::{Preprocessor, Vocabulary};
use crate::error::{Error, Result};
use crate::geometry::SimilarityMatrix;

/// A DAG of concepts with word membership.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    names: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    members: BTreeMap<String, Vec<usize>>,
    /// Concepts in an order where every parent precedes its children.
    topo: Vec<usize>,
    /// Ancestors including self, sorted.
    ancestors: Vec<Vec<usize>>,
}

impl Taxonomy {
    /// Builds a taxonomy. `isa` pairs and `member` pairs may name concepts
    /// not in `concepts`; they are added.
    pub fn new(concepts: Vec<String>, isa: Vec<(String, String)>, membership: Vec<(String, String)>) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |name: &str, names: &mut Vec<String>| -> usize {
            if let Some(&i) = index.get(name) {
                return i;
            }
            index.insert(name.to_string(), names.len());
            names.push(name.to_string());
            names.len() - 1
        };
        for c in &concepts {
            intern(c, &mut names);
        }
        let mut edges = Vec::new();
        for (child, parent) in &isa {
            let c = intern(child, &mut names);
            let p = intern(parent, &mut names);
            if c == p {
                return Err(Error::InvalidTaxonomy(format!("{child:?} is its own parent")));
            }
            edges.push((c, p));
        }
        let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (word, concept) in &membership {
            let c = intern(concept, &mut names);
            let list = members.entry(word.clone()).or_default();
            if !list.contains(&c) {
                list.push(c);
                list.sort_unstable();
            }
        }
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        for (c, p) in edges {
            if !parents[c].contains(&p) {
                parents[c].push(p);
            }
        }
        let topo = topological_order(&parents, &names)?;
        let mut ancestors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &c in &topo {
            let mut set = vec![c];
            for &p in &parents[c] {
                set.extend_from_slice(&ancestors[p]);
            }
            set.sort_unstable();
            set.dedup();
            ancestors[c] = set;
        }
        Ok(Self {
            names,
            index,
            parents,
            members,
            topo,
            ancestors,
        })
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut concepts = Vec::new();
        let mut isa = Vec::new();
        let mut members = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["concept", id] => concepts.push(id.to_string()),
                ["isa", child, parent] => isa.push((child.to_string(), parent.to_string())),
                ["member", word, concept] => members.push((word.to_string(), concept.to_string())),
                _ => return Err(Error::parse(source, i + 1, format!("unrecognized line {line:?}"))),
            }
        }
        Self::new(concepts, isa, members)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn concept(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, c: usize) -> &str {
        &self.names[c]
    }

    pub fn parents(&self, c: usize) -> &[usize] {
        &self.parents[c]
    }

    /// Ancestors of `c`, including `c` itself.
    pub fn ancestors(&self, c: usize) -> &[usize] {
        &self.ancestors[c]
    }

    /// Concepts a word belongs to; empty if out of taxonomy.
    pub fn concepts_of(&self, word: &str) -> &[usize] {
        self.members.get(word).map_or(&[], Vec::as_slice)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.members.keys().map(String::as_str)
    }

    /// Re-keys word membership through `pre`, merging words that normalize
    /// to the same form (e.g. inflections sharing a stem).
    pub fn normalized(&self, pre: &Preprocessor) -> Self {
        let mut out = self.clone();
        let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (word, concepts) in &self.members {
            let Some(key) = pre.normalize_word(word) else { continue };
            let list = members.entry(key).or_default();
            list.extend_from_slice(concepts);
            list.sort_unstable();
            list.dedup();
        }
        out.members = members;
        out
    }

    fn roots(&self) -> usize {
        self.parents.iter().filter(|p| p.is_empty()).count()
    }
}

fn topological_order(parents: &[Vec<usize>], names: &[String]) -> Result<Vec<usize>> {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&c| pending[c] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(c) = ready.pop() {
        order.push(c);
        for &k in children[c].iter().rev() {
            pending[k] -= 1;
            if pending[k] == 0 {
                ready.push(k);
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&c| pending[c] > 0).unwrap();
        return Err(Error::InvalidTaxonomy(format!(
            "cycle through concept {:?}",
            names[stuck]
        )));
    }
    Ok(order)
}

/// Per-concept probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptProbabilities(Vec<f64>);

impl ConceptProbabilities {
    pub fn get(&self, c: usize) -> f64 {
        self.0[c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Pseudo-count added to each concept before propagation.
pub const ADD_ONE: f64 = 1.0;

/// Propagates word counts up the taxonomy and normalizes.
///
/// A word counts once toward every concept in the upward closure of its
/// concept set, so a word in two concepts feeds both branches. Each concept
/// first receives `pseudo_count` of its own (propagated like a word), and the
/// normalizer is the total in-taxonomy word mass plus all pseudo-counts, which
/// makes a single root's probability exactly 1.
pub fn concept_probabilities(
    tax: &Taxonomy,
    word_counts: &HashMap<String, u64>,
    pseudo_count: f64,
) -> Result<ConceptProbabilities> {
    let n = tax.len();
    let mut count = vec![0.0f64; n];
    let mut total = 0.0;
    for (word, &k) in word_counts {
        let concepts = tax.concepts_of(word);
        if concepts.is_empty() || k == 0 {
            continue;
        }
        total += k as f64;
        let mut closure: Vec<usize> = concepts
            .iter()
            .flat_map(|&c| tax.ancestors(c).iter().copied())
            .collect();
        closure.sort_unstable();
        closure.dedup();
        for c in closure {
            count[c] += k as f64;
        }
    }
    if pseudo_count > 0.0 {
        for c in 0..n {
            for &a in tax.ancestors(c) {
                count[a] += pseudo_count;
            }
        }
        total += pseudo_count * n as f64;
    }
    if total <= 0.0 {
        return Err(Error::InvalidConfig("taxonomy words have zero total count".into()));
    }
    let mut p: Vec<f64> = count.iter().map(|c| c / total).collect();
    if tax.roots() == 1 {
        // Exact 1 at the root despite rounding.
        let root = tax.topo[0];
        p[root] = 1.0;
    }
    Ok(ConceptProbabilities(p))
}

/// Most specific common subsumer: the shared ancestor of smallest
/// probability, ties broken by concept name.
pub fn lcs(tax: &Taxonomy, p: &ConceptProbabilities, c1: usize, c2: usize) -> Result<usize> {
    let (a, b) = (tax.ancestors(c1), tax.ancestors(c2));
    let (mut i, mut j) = (0, 0);
    let mut best: Option<usize> = None;
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let c = a[i];
                best = Some(match best {
                    None => c,
                    Some(prev) => {
                        let ord = p
                            .get(c)
                            .total_cmp(&p.get(prev))
                            .then_with(|| tax.name(c).cmp(tax.name(prev)));
                        if ord.is_lt() {
                            c
                        } else {
                            prev
                        }
                    }
                });
                i += 1;
                j += 1;
            }
        }
    }
    best.ok_or_else(|| Error::NoCommonSubsumer(tax.name(c1).to_string(), tax.name(c2).to_string()))
}

/// `log(p(c1) p(c2) / (2 p(lcs)))`.
pub fn jiang_conrath(tax: &Taxonomy, p: &ConceptProbabilities, c1: usize, c2: usize) -> Result<f64> {
    let l = lcs(tax, p, c1, c2)?;
    for c in [c1, c2, l] {
        if p.get(c) <= 0.0 {
            return Err(Error::ZeroProbability(tax.name(c).to_string()));
        }
    }
    Ok((p.get(c1) * p.get(c2) / (2.0 * p.get(l))).ln())
}

/// Word-by-word similarity over `vocab`.
///
/// A word pair scores the maximum over its concept pairs; scores are mapped
/// affinely onto `[0, 1]` using the range of all pair and self scores, and
/// the diagonal is set to 1. Pairs without a common subsumer get 0; words
/// outside the taxonomy get identity rows. The result is not certified PSD.
pub fn taxonomy_similarity_matrix(
    tax: &Taxonomy,
    p: &ConceptProbabilities,
    vocab: &Vocabulary,
) -> Result<SimilarityMatrix> {
    let n = vocab.len();
    let concepts: Vec<&[usize]> = vocab.words().iter().map(|w| tax.concepts_of(w)).collect();
    let mut raw = vec![vec![None::<f64>; n]; n];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for u in 0..n {
        if concepts[u].is_empty() {
            continue;
        }
        for v in u..n {
            let mut best: Option<f64> = None;
            for &cu in concepts[u] {
                for &cv in concepts[v] {
                    match jiang_conrath(tax, p, cu, cv) {
                        Ok(s) => best = Some(best.map_or(s, |b: f64| b.max(s))),
                        Err(Error::NoCommonSubsumer(..)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            if let Some(s) = best {
                lo = lo.min(s);
                hi = hi.max(s);
                raw[u][v] = Some(s);
                raw[v][u] = Some(s);
            }
        }
    }
    let span = hi - lo;
    let mut t = DMatrix::identity(n, n);
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            if let Some(s) = raw[u][v] {
                t[(u, v)] = if span > 0.0 { (s - lo) / span } else { 1.0 };
            }
        }
    }
    SimilarityMatrix::new(t)
}

/// Reads precomputed `word1 word2 score` lines into a similarity matrix.
///
/// Words are normalized with `pre` and looked up in `vocab`; unknown words
/// are skipped. Entries are symmetrized (later lines win), the diagonal is 1
/// and missing pairs are 0. When any score falls outside `[0, 1]` the
/// off-diagonal scores are mapped affinely onto `[0, 1]`.
pub fn import_similarities(
    text: &str,
    source: &str,
    pre: &Preprocessor,
    vocab: &Vocabulary,
) -> Result<SimilarityMatrix> {
    let n = vocab.len();
    let mut scores: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [w1, w2, s] = parts.as_slice() else {
            return Err(Error::parse(source, i + 1, "expected 'word1 word2 score'"));
        };
        let score: f64 = s
            .parse()
            .map_err(|_| Error::parse(source, i + 1, format!("bad score {s:?}")))?;
        if !score.is_finite() {
            return Err(Error::parse(source, i + 1, "score must be finite"));
        }
        let find = |w: &str| vocab.id(w).or_else(|| pre.normalize_word(w).and_then(|x| vocab.id(&x)));
        let (Some(a), Some(b)) = (find(w1), find(w2)) else {
            continue;
        };
        if a != b {
            scores.insert((a.min(b), a.max(b)), score);
        }
    }
    let lo = scores.values().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let rescale = !scores.is_empty() && (lo < 0.0 || hi > 1.0);
    let mut t = DMatrix::identity(n, n);
    for (&(a, b), &s) in &scores {
        let v = if rescale {
            if hi > lo {
                (s - lo) / (hi - lo)
            } else {
                1.0
            }
        } else {
            s
        };
        t[(a, b)] = v;
        t[(b, a)] = v;
    }
    SimilarityMatrix::new(t)
}

/// Word counts keyed by vocabulary word, from corpus term totals.
pub fn vocabulary_counts(vocab: &Vocabulary, totals: &[u64]) -> HashMap<String, u64> {
    vocab.words().iter().cloned().zip(totals.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &str) -> String {
        v.to_string()
    }

    fn counts(pairs: &[(&str, u64)]) -> HashMap<String, u64> {
        pairs.iter().map(|&(w, k)| (s(w), k)).collect()
    }

    fn siblings() -> Taxonomy {
        Taxonomy::parse(
            "concept root\nisa c1 root\nisa c2 root\nmember w1 c1\nmember w2 c2\n",
            "t",
        )
        .unwrap()
    }

    #[test]
    fn chain_mass_propagates_up() {
        let tax = Taxonomy::parse("isa c1 root\nmember w c1\n", "t").unwrap();
        let p = concept_probabilities(&tax, &counts(&[("w", 10)]), 0.0).unwrap();
        assert_eq!(p.get(tax.concept("c1").unwrap()), 1.0);
        assert_eq!(p.get(tax.concept("root").unwrap()), 1.0);
    }

    #[test]
    fn sibling_probabilities() {
        let tax = siblings();
        let p = concept_probabilities(&tax, &counts(&[("w1", 3), ("w2", 1)]), 0.0).unwrap();
        assert_eq!(p.get(tax.concept("c1").unwrap()), 0.75);
        assert_eq!(p.get(tax.concept("c2").unwrap()), 0.25);
        assert_eq!(p.get(tax.concept("root").unwrap()), 1.0);

        // Smoothing: 3 concepts, each +1 propagated; N = 4 + 3.
        let p = concept_probabilities(&tax, &counts(&[("w1", 3), ("w2", 1)]), ADD_ONE).unwrap();
        assert!((p.get(tax.concept("c1").unwrap()) - 4.0 / 7.0).abs() < 1e-15);
        assert!((p.get(tax.concept("c2").unwrap()) - 2.0 / 7.0).abs() < 1e-15);
        assert_eq!(p.get(tax.concept("root").unwrap()), 1.0);
    }

    #[test]
    fn multi_concept_word_feeds_both_branches() {
        let tax = Taxonomy::parse("isa c1 root\nisa c2 root\nmember w c1\nmember w c2\nmember v c2\n", "t").unwrap();
        let p = concept_probabilities(&tax, &counts(&[("w", 2), ("v", 2)]), 0.0).unwrap();
        assert_eq!(p.get(tax.concept("c1").unwrap()), 0.5);
        assert_eq!(p.get(tax.concept("c2").unwrap()), 1.0);
        assert_eq!(p.get(tax.concept("root").unwrap()), 1.0);
    }

    #[test]
    fn lcs_examples() {
        let tax = Taxonomy::parse("isa a root\nisa b root\nisa a1 a\n", "t").unwrap();
        let p = concept_probabilities(&tax, &HashMap::new(), ADD_ONE).unwrap();
        let c = |n: &str| tax.concept(n).unwrap();
        assert_eq!(lcs(&tax, &p, c("a"), c("a")).unwrap(), c("a"));
        assert_eq!(lcs(&tax, &p, c("a"), c("b")).unwrap(), c("root"));
        assert_eq!(lcs(&tax, &p, c("a"), c("a1")).unwrap(), c("a"));
        assert_eq!(
            lcs(&tax, &p, c("a1"), c("b")).unwrap(),
            lcs(&tax, &p, c("b"), c("a1")).unwrap()
        );

        let forest = Taxonomy::parse("concept x\nconcept y\n", "t").unwrap();
        let p = concept_probabilities(&forest, &HashMap::new(), ADD_ONE).unwrap();
        assert!(matches!(lcs(&forest, &p, 0, 1), Err(Error::NoCommonSubsumer(..))));
    }

    #[test]
    fn printed_score_examples() {
        let tax = siblings();
        let p = concept_probabilities(&tax, &counts(&[("w1", 1), ("w2", 1)]), 0.0).unwrap();
        let root = tax.concept("root").unwrap();
        assert!((jiang_conrath(&tax, &p, root, root).unwrap() - 0.5f64.ln()).abs() < 1e-15);

        let p = ConceptProbabilities(vec![1.0, 0.25, 0.25]);
        let (c1, c2) = (tax.concept("c1").unwrap(), tax.concept("c2").unwrap());
        let jc = jiang_conrath(&tax, &p, c1, c2).unwrap();
        assert!((jc - (1.0f64 / 32.0).ln()).abs() < 1e-15);
        assert!((jc + 3.4657).abs() < 1e-4);

        let q = 0.3;
        let p = ConceptProbabilities(vec![1.0, q, q]);
        assert!((jiang_conrath(&tax, &p, c1, c1).unwrap() - (q / 2.0).ln()).abs() < 1e-15);

        let zero = ConceptProbabilities(vec![1.0, 0.0, 0.5]);
        assert!(matches!(
            jiang_conrath(&tax, &zero, c1, c2),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn cycles_are_rejected() {
        assert!(Taxonomy::parse("isa a b\nisa b a\n", "t").is_err());
        assert!(Taxonomy::parse("frobnicate a\n", "t").is_err());
    }

    /// Toy taxonomy: root -> animal -> {cat, dog}; root -> car.
    /// Words: kitten in cat, puppy in dog, sedan in car, plus "zzz" outside.
    #[test]
    fn toy_similarity_matrix_by_hand() {
        let tax = Taxonomy::parse(
            "isa animal root\nisa cat animal\nisa dog animal\nisa car root\n\
             member kitten cat\nmember puppy dog\nmember sedan car\n",
            "t",
        )
        .unwrap();
        let p = concept_probabilities(&tax, &counts(&[("kitten", 2), ("puppy", 1), ("sedan", 1)]), 0.0).unwrap();
        // p(cat)=1/2, p(dog)=1/4, p(car)=1/4, p(animal)=3/4, p(root)=1.
        let vocab = Vocabulary::new(["kitten", "puppy", "sedan", "zzz"]);
        let t = taxonomy_similarity_matrix(&tax, &p, &vocab).unwrap();
        let raw_kp = (0.5 * 0.25 / (2.0 * 0.75f64)).ln();
        let raw_ks = (0.5 * 0.25 / 2.0f64).ln();
        let raw_ps = (0.25 * 0.25 / 2.0f64).ln();
        let self_k = (0.5f64 / 2.0).ln();
        let self_p = (0.25f64 / 2.0).ln();
        let all = [raw_kp, raw_ks, raw_ps, self_k, self_p];
        let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let r = |x: f64| (x - lo) / (hi - lo);
        let m = t.matrix();
        assert!((m[(0, 1)] - r(raw_kp)).abs() < 1e-12);
        assert!((m[(0, 2)] - r(raw_ks)).abs() < 1e-12);
        assert!((m[(1, 2)] - r(raw_ps)).abs() < 1e-12);
        assert_eq!(m[(1, 2)], 0.0);
        for i in 0..4 {
            assert_eq!(m[(i, i)], 1.0);
        }
        assert_eq!(m[(3, 0)], 0.0);
        assert_eq!(m[(0, 3)], 0.0);
    }

    #[test]
    fn out_of_taxonomy_words_get_identity() {
        let tax = siblings();
        let p = concept_probabilities(&tax, &HashMap::new(), ADD_ONE).unwrap();
        let t = taxonomy_similarity_matrix(&tax, &p, &Vocabulary::new(["x", "y"])).unwrap();
        assert_eq!(t.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn precomputed_import() {
        let pre = Preprocessor {
            stem: true,
            ..Default::default()
        };
        let vocab = Vocabulary::new(["cat", "dog", "car"]);
        let t = import_similarities("cats dog 0.8\ncar dog 0.1\nunknown cat 1\n", "t", &pre, &vocab).unwrap();
        let m = t.matrix();
        assert_eq!(m[(0, 1)], 0.8);
        assert_eq!(m[(1, 0)], 0.8);
        assert_eq!(m[(2, 1)], 0.1);
        assert_eq!(m[(0, 2)], 0.0);
        let t = import_similarities("cat dog -2\ncar dog 2\n", "t", &pre, &vocab).unwrap();
        assert_eq!(t.matrix()[(0, 1)], 0.0);
        assert_eq!(t.matrix()[(1, 2)], 1.0);
        assert!(import_similarities("cat dog\n", "t", &pre, &vocab).is_err());
    }

    fn random_dag() -> impl Strategy<Value = (Taxonomy, HashMap<String, u64>)> {
        (2usize..10).prop_flat_map(|n| {
            (
                proptest::collection::vec(proptest::collection::vec(any::<proptest::sample::Index>(), 0..3), n),
                proptest::collection::vec((0usize..n, 0u64..20), 1..8),
            )
                .prop_map(move |(parent_picks, words)| {
                    // Parents always have smaller index, so the graph is acyclic.
                    let mut isa = Vec::new();
                    for (c, picks) in parent_picks.iter().enumerate().skip(1) {
                        for pick in picks {
                            isa.push((format!("c{c}"), format!("c{}", pick.index(c))));
                        }
                    }
                    let concepts = (0..n).map(|c| format!("c{c}")).collect();
                    let members = words
                        .iter()
                        .enumerate()
                        .map(|(i, &(c, _))| (format!("w{i}"), format!("c{c}")))
                        .collect();
                    let counts = words
                        .iter()
                        .enumerate()
                        .map(|(i, &(_, k))| (format!("w{i}"), k))
                        .collect();
                    (Taxonomy::new(concepts, isa, members).unwrap(), counts)
                })
        })
    }

    proptest! {
        #[test]
        fn probabilities_are_monotone((tax, counts) in random_dag()) {
            let p = concept_probabilities(&tax, &counts, ADD_ONE).unwrap();
            for c in 0..tax.len() {
                prop_assert!(p.get(c) > 0.0 && p.get(c) <= 1.0);
                for &parent in tax.parents(c) {
                    prop_assert!(p.get(parent) >= p.get(c));
                }
            }
        }

        #[test]
        fn lcs_is_symmetric((tax, counts) in random_dag()) {
            let p = concept_probabilities(&tax, &counts, ADD_ONE).unwrap();
            for a in 0..tax.len() {
                for b in 0..tax.len() {
                    let ab = lcs(&tax, &p, a, b).ok();
                    let ba = lcs(&tax, &p, b, a).ok();
                    prop_assert_eq!(ab, ba);
                }
            }
        }

        #[test]
        fn similarity_is_symmetric_and_order_preserving((tax, counts) in random_dag()) {
            let p = concept_probabilities(&tax, &counts, ADD_ONE).unwrap();
            let words: Vec<String> = tax.words().map(str::to_string).collect();
            let vocab = Vocabulary::new(words.clone());
            let t = taxonomy_similarity_matrix(&tax, &p, &vocab).unwrap();
            let m = t.matrix();
            let mut pairs = Vec::new();
            for u in 0..vocab.len() {
                prop_assert_eq!(m[(u, u)], 1.0);
                for v in 0..vocab.len() {
                    prop_assert_eq!(m[(u, v)], m[(v, u)]);
                    if u < v {
                        let mut best: Option<f64> = None;
                        for &cu in tax.concepts_of(&words[u]) {
                            for &cv in tax.concepts_of(&words[v]) {
                                if let Ok(s) = jiang_conrath(&tax, &p, cu, cv) {
                                    best = Some(best.map_or(s, |b: f64| b.max(s)));
                                }
                            }
                        }
                        if let Some(raw) = best {
                            pairs.push((raw, m[(u, v)]));
                        }
                    }
                }
            }
            for a in &pairs {
                for b in &pairs {
                    if a.0 < b.0 {
                        prop_assert!(a.1 <= b.1);
                    }
                }
            }
        }
    }
}
