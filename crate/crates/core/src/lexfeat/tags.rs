//! Features over the annotation layers: POS, morphology, dependency trees,
//! named entities, synset sizes, and hedges.
//!
//! Layer-dependent features are emitted only when the layer is present for
//! the item; the matrix assembly enforces that layers are uniform across the
//! corpus. Hedge counting needs no layers and always runs when a hedge list
//! is supplied.
//!
//! Definitions used for the tree shape features (per sentence, then
//! aggregated over sentences as noted):
//!
//! - `tree_depth`: number of nodes on the longest root-to-leaf path
//!   (a 3-token chain has depth 3); maximum over sentences.
//! - `tree_width`: largest number of nodes sharing one depth; maximum over
//!   sentences.
//! - `branching_factor`: mean number of children over non-leaf nodes, pooled
//!   over sentences.
//! - `ramification_factor`: mean number of children over all nodes, pooled.
//!
//! Entity spans: `B-`-prefixed labels open a span, `I-` continues one, bare
//! labels form one span per contiguous run; `n_<type>` counts spans.
//!
//! Synset-size lexicons follow App-style fixed thresholds rather than scale
//! thirds: `n_high_synsets*` counts tokens with more than four senses and
//! `n_low_synsets*` tokens with fewer than three. A `_noun`/`_verb`/`_adj`
//! suffix on the lexicon name restricts matching to that POS.

use std::collections::BTreeMap;

use crate::lexfeat::{PartialFeatures, TokenizedItem, ValueLexicon};

const UPOS_TAGS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

pub fn tag_features(
    item: &TokenizedItem,
    synsets: &[ValueLexicon],
    hedges: &[Vec<String>],
) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    if item.layers.pos {
        pos_features(&mut out, item);
        synset_features(&mut out, item, synsets);
    }
    if item.layers.morph {
        morph_features(&mut out, item);
    }
    if item.layers.dep {
        dependency_features(&mut out, item);
    }
    if item.layers.entity {
        entity_features(&mut out, item);
    }
    if !hedges.is_empty() {
        hedge_features(&mut out, item, hedges);
    }
    out
}

fn pos_features(out: &mut PartialFeatures, item: &TokenizedItem) {
    let mut counts: BTreeMap<&str, usize> = UPOS_TAGS.iter().map(|t| (*t, 0)).collect();
    let mut tagged_words = 0usize;
    let mut word_tags: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    for token in item.tokens() {
        if let Some(tag) = token.upos.as_deref() {
            if let Some(c) = counts.get_mut(tag) {
                *c += 1;
            }
            if !token.is_punct {
                tagged_words += 1;
                word_tags.insert(tag);
            }
        }
    }
    for (tag, count) in &counts {
        out.insert(format!("n_{}", tag.to_lowercase()), *count as f64);
    }
    let lexical = counts["NOUN"] + counts["VERB"] + counts["ADJ"] + counts["ADV"];
    out.insert("n_lexical_tokens", lexical as f64);
    out.insert(
        "pos_variability",
        if tagged_words > 0 { word_tags.len() as f64 / tagged_words as f64 } else { 0.0 },
    );
    noun_chunks(out, item);
}

/// Maximal runs of DET/ADJ/NUM/NOUN/PROPN/PRON tokens containing at least
/// one NOUN/PROPN/PRON.
fn noun_chunks(out: &mut PartialFeatures, item: &TokenizedItem) {
    let mut chunks = 0usize;
    for sentence in &item.sentences {
        let mut in_chunk = false;
        let mut has_head = false;
        for token in sentence {
            let in_set = matches!(
                token.upos.as_deref(),
                Some("DET") | Some("ADJ") | Some("NUM") | Some("NOUN") | Some("PROPN") | Some("PRON")
            );
            let is_head = matches!(token.upos.as_deref(), Some("NOUN") | Some("PROPN") | Some("PRON"));
            if in_set {
                in_chunk = true;
                has_head |= is_head;
            } else {
                if in_chunk && has_head {
                    chunks += 1;
                }
                in_chunk = false;
                has_head = false;
            }
        }
        if in_chunk && has_head {
            chunks += 1;
        }
    }
    out.insert("n_noun_chunks", chunks as f64);
}

fn morph_features(out: &mut PartialFeatures, item: &TokenizedItem) {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for token in item.tokens() {
        let Some(pos) = token.upos.as_deref() else { continue };
        for (attr, value) in &token.morph {
            *counts.entry(format!("n_{pos}_{attr}_{value}")).or_insert(0) += 1;
        }
    }
    for (name, count) in counts {
        out.insert(name, count as f64);
    }
}

fn dependency_features(out: &mut PartialFeatures, item: &TokenizedItem) {
    let mut rel_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut max_depth = 0usize;
    let mut max_width = 0usize;
    let mut total_children = 0usize;
    let mut non_leaf = 0usize;
    let mut total_nodes = 0usize;

    for sentence in &item.sentences {
        let n = sentence.len();
        if n == 0 {
            continue;
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n + 1]; // index 0 = virtual root
        for (i, token) in sentence.iter().enumerate() {
            if let Some(rel) = token.deprel.as_deref() {
                *rel_counts.entry(format!("n_dependency_{rel}")).or_insert(0) += 1;
            }
            let head = token.head.unwrap_or(0).min(n);
            children[head].push(i + 1);
        }
        // Depth-first from the virtual root; token depth starts at 1.
        let mut depth_of = vec![0usize; n + 1];
        let mut stack: Vec<usize> = children[0].clone();
        for &root in &children[0] {
            depth_of[root] = 1;
        }
        let mut level_counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut visited = vec![false; n + 1];
        while let Some(node) = stack.pop() {
            if visited[node] {
                continue; // guard against malformed cyclic heads
            }
            visited[node] = true;
            *level_counts.entry(depth_of[node]).or_insert(0) += 1;
            max_depth = max_depth.max(depth_of[node]);
            for &child in &children[node] {
                if !visited[child] {
                    depth_of[child] = depth_of[node] + 1;
                    stack.push(child);
                }
            }
        }
        max_width = max_width.max(level_counts.values().copied().max().unwrap_or(0));
        for (node, kids) in children.iter().enumerate().skip(1) {
            total_nodes += 1;
            total_children += kids.len();
            if !kids.is_empty() {
                non_leaf += 1;
            }
            let _ = node;
        }
    }
    for (name, count) in rel_counts {
        out.insert(name, count as f64);
    }
    out.insert("tree_depth", max_depth as f64);
    out.insert("tree_width", max_width as f64);
    out.insert(
        "branching_factor",
        if non_leaf > 0 { total_children as f64 / non_leaf as f64 } else { 0.0 },
    );
    out.insert(
        "ramification_factor",
        if total_nodes > 0 { total_children as f64 / total_nodes as f64 } else { 0.0 },
    );
}

fn entity_features(out: &mut PartialFeatures, item: &TokenizedItem) {
    let mut per_type: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    for sentence in &item.sentences {
        let mut prev: Option<String> = None;
        for token in sentence {
            match token.entity.as_deref() {
                None => prev = None,
                Some(label) => {
                    let (starts, ty) = if let Some(t) = label.strip_prefix("B-") {
                        (true, t.to_string())
                    } else if let Some(t) = label.strip_prefix("I-") {
                        (prev.as_deref() != Some(t), t.to_string())
                    } else {
                        (prev.as_deref() != Some(label), label.to_string())
                    };
                    if starts {
                        total += 1;
                        *per_type.entry(ty.clone()).or_insert(0) += 1;
                    }
                    prev = Some(ty);
                }
            }
        }
    }
    out.insert("n_entities", total as f64);
    for (ty, count) in per_type {
        out.insert(format!("n_{}", ty.to_lowercase()), count as f64);
    }
}

fn synset_features(out: &mut PartialFeatures, item: &TokenizedItem, synsets: &[ValueLexicon]) {
    for lexicon in synsets {
        let pos_filter = match lexicon.name.rsplit_once('_').map(|(_, sfx)| sfx) {
            Some("noun") => Some("NOUN"),
            Some("verb") => Some("VERB"),
            Some("adj") => Some("ADJ"),
            _ => None,
        };
        let mut matched = 0usize;
        let mut sum = 0.0;
        let mut n_high = 0usize;
        let mut n_low = 0usize;
        for token in item.word_tokens() {
            if let Some(filter) = pos_filter {
                if token.upos.as_deref() != Some(filter) {
                    continue;
                }
            }
            let Some((value, _)) = lexicon.lookup(&item.match_key(token)) else {
                continue;
            };
            matched += 1;
            sum += value;
            if value > 4.0 {
                n_high += 1;
            }
            if value < 3.0 {
                n_low += 1;
            }
        }
        let name = &lexicon.name;
        if matched == 0 {
            out.insert(format!("avg_{name}"), 0.0);
            out.flag(format!("synset_no_match:{name}"));
        } else {
            out.insert(format!("avg_{name}"), sum / matched as f64);
        }
        out.insert(format!("n_high_{name}"), n_high as f64);
        out.insert(format!("n_low_{name}"), n_low as f64);
    }
}

/// Hedge count alone (no annotation layers required).
pub fn hedge_count_features(item: &TokenizedItem, hedges: &[Vec<String>]) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    hedge_features(&mut out, item, hedges);
    out
}

/// Longest-match, non-overlapping hedge counting over the lowercased
/// word-token sequence.
fn hedge_features(out: &mut PartialFeatures, item: &TokenizedItem, hedges: &[Vec<String>]) {
    let keys: Vec<String> = item
        .word_tokens()
        .map(|t| t.surface.to_lowercase())
        .collect();
    let max_len = hedges.iter().map(Vec::len).max().unwrap_or(1);
    let mut count = 0usize;
    let mut i = 0usize;
    while i < keys.len() {
        let mut matched_len = 0usize;
        for len in (1..=max_len.min(keys.len() - i)).rev() {
            if hedges.iter().any(|h| h.len() == len && h[..] == keys[i..i + len]) {
                matched_len = len;
                break;
            }
        }
        if matched_len > 0 {
            count += 1;
            i += matched_len;
        } else {
            i += 1;
        }
    }
    out.insert("n_hedges", count as f64);
}
