//! CoNLL-U ingestion carrying the lemma/POS/morphology/dependency/entity
//! layers produced by an upstream tagger.
//!
//! Expected input: standard 10-column CoNLL-U. Sentences must be preceded by
//! a `# item_id = <id>` comment; consecutive sentences with the same id are
//! merged into one item. An optional `# text = ...` comment supplies the raw
//! item text (texts of merged sentences are joined with a space; without the
//! comment, token forms joined by spaces are used).
//!
//! Named entities are read from the MISC column as `NER=<label>`; `B-`/`I-`
//! prefixes are kept (entity spans are reconstructed downstream) and the
//! label `O` means no entity. Multiword-token ranges (`1-2`) and empty nodes
//! (`1.1`) are skipped; the layer counts come from the plain integer rows.

use std::collections::BTreeMap;

use crate::corpus::ItemId;
use crate::error::{Error, Result};
use crate::lexfeat::{LayerFlags, Token, TokenizedItem};

/// Parse a CoNLL-U file into one [`TokenizedItem`] per distinct item id,
/// in order of first appearance.
pub fn ingest_conllu(src: &str, file: &str) -> Result<Vec<TokenizedItem>> {
    struct Sentence {
        item_id: ItemId,
        text: Option<String>,
        tokens: Vec<Token>,
    }

    let mut sentences: Vec<Sentence> = Vec::new();
    let mut cur_id: Option<ItemId> = None;
    let mut cur_text: Option<String> = None;
    let mut cur_tokens: Vec<Token> = Vec::new();
    let mut saw_token_line = false;

    let mut flush = |cur_id: &mut Option<ItemId>,
                     cur_text: &mut Option<String>,
                     cur_tokens: &mut Vec<Token>,
                     saw_token_line: &mut bool,
                     lineno: usize|
     -> Result<()> {
        if !*saw_token_line {
            *cur_text = None;
            return Ok(());
        }
        let item_id = cur_id
            .take()
            .ok_or_else(|| Error::parse(file, lineno, "sentence without `# item_id = <id>` comment"))?;
        sentences.push(Sentence {
            item_id,
            text: cur_text.take(),
            tokens: std::mem::take(cur_tokens),
        });
        *saw_token_line = false;
        Ok(())
    };

    for (idx, raw) in src.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            flush(&mut cur_id, &mut cur_text, &mut cur_tokens, &mut saw_token_line, lineno)?;
            cur_id = None;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("item_id") {
                let v = v.trim_start();
                let v = v.strip_prefix('=').unwrap_or(v).trim();
                if v.is_empty() {
                    return Err(Error::parse(file, lineno, "empty item_id comment"));
                }
                cur_id = Some(ItemId(v.to_string()));
            } else if let Some(v) = comment.strip_prefix("text") {
                let v = v.trim_start();
                if let Some(text) = v.strip_prefix('=') {
                    cur_text = Some(text.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                file,
                lineno,
                format!("expected 10 tab-separated columns, got {}", cols.len()),
            ));
        }
        // Skip multiword-token ranges and empty nodes.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let _id: usize = cols[0]
            .parse()
            .map_err(|_| Error::parse(file, lineno, format!("bad token id `{}`", cols[0])))?;
        let opt = |s: &str| {
            if s == "_" || s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        };
        let head = match cols[6] {
            "_" => None,
            h => Some(h.parse::<usize>().map_err(|_| {
                Error::parse(file, lineno, format!("bad HEAD value `{h}`"))
            })?),
        };
        let morph: Vec<(String, String)> = match cols[5] {
            "_" | "" => Vec::new(),
            feats => {
                let mut pairs = Vec::new();
                for feat in feats.split('|') {
                    let (attr, val) = feat.split_once('=').ok_or_else(|| {
                        Error::parse(file, lineno, format!("bad FEATS entry `{feat}`"))
                    })?;
                    pairs.push((attr.to_string(), val.to_string()));
                }
                pairs
            }
        };
        let entity = opt(cols[9]).and_then(|misc| {
            misc.split('|').find_map(|kv| {
                kv.strip_prefix("NER=")
                    .filter(|v| *v != "O" && !v.is_empty())
                    .map(str::to_string)
            })
        });
        let upos = opt(cols[3]);
        let surface = cols[1].to_string();
        let is_punct = match &upos {
            Some(u) => u == "PUNCT",
            None => !surface.chars().any(char::is_alphanumeric),
        };
        cur_tokens.push(Token {
            surface,
            lemma: opt(cols[2]),
            upos,
            morph,
            head,
            deprel: opt(cols[7]),
            entity,
            is_punct,
        });
        saw_token_line = true;
    }
    let last_line = src.lines().count();
    flush(&mut cur_id, &mut cur_text, &mut cur_tokens, &mut saw_token_line, last_line)?;

    // Merge sentences by item id, keeping first-appearance order.
    let mut order: Vec<ItemId> = Vec::new();
    let mut merged: BTreeMap<ItemId, (Vec<String>, Vec<Vec<Token>>)> = BTreeMap::new();
    for s in sentences {
        if !merged.contains_key(&s.item_id) {
            order.push(s.item_id.clone());
        }
        let entry = merged.entry(s.item_id).or_default();
        if let Some(t) = s.text {
            entry.0.push(t);
        } else {
            entry.0.push(
                s.tokens
                    .iter()
                    .map(|t| t.surface.as_str())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
        entry.1.push(s.tokens);
    }

    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let (texts, sentences) = merged.remove(&id).expect("id recorded in order");
        let all = |f: &dyn Fn(&Token) -> bool| {
            sentences.iter().flat_map(|s| s.iter()).all(f)
        };
        let layers = LayerFlags {
            lemma: all(&|t| t.lemma.is_some()),
            pos: all(&|t| t.upos.is_some()),
            morph: all(&|t| t.upos.is_some()),
            dep: all(&|t| t.head.is_some() && t.deprel.is_some()),
            entity: true,
        };
        out.push(TokenizedItem {
            item_id: id,
            text: texts.join(" "),
            sentences,
            layers,
        });
    }
    Ok(out)
}
