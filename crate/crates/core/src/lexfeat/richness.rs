//! Lexical richness and diversity measures.
//!
//! Notation: N = word tokens, V = types (distinct lowercased word-token
//! surfaces), Vᵢ = number of types occurring exactly i times.
//!
//! | feature | formula / parameters |
//! |---------|----------------------|
//! | `ttr` | V/N |
//! | `rttr` | V/√N |
//! | `cttr` | V/√(2N) |
//! | `herdan_c` | log V / log N |
//! | `summer_index` | log log V / log log N |
//! | `dugast_u` | (log N)² / (log N − log V) |
//! | `maas_index` | (log N − log V) / (log N)² |
//! | `yule_k` | 10⁴·(Σᵢ i²Vᵢ − N)/N² |
//! | `herdan_v` | √(Σᵢ i²Vᵢ/N² − 1/V) |
//! | `simpsons_d` | Σᵢ Vᵢ·i·(i−1) / (N·(N−1)) |
//! | `sichel_s` | V₂/V |
//! | `msttr` | mean TTR over consecutive 25-token segments (leftover discarded); whole-text TTR when N < 25 |
//! | `mattr` | mean TTR over all 25-token moving windows; whole-text TTR when N < 25 |
//! | `mtld` | bidirectional mean, factor threshold 0.72, partial factor (1 − ttr)/(1 − 0.72) |
//! | `hdd` | Σ_types P(type drawn) for a hypergeometric sample of min(42, N) tokens |
//! | `n_hapax_legomena` | V₁ |
//! | `n_hapax_dislegomena` | V₂ |
//! | `lexical_density` | word tokens tagged NOUN/VERB/ADJ/ADV over word tokens (POS layer only) |
//!
//! Any measure whose formula is undefined for the item (N = 1 for the
//! log-based indices, V = N for Dugast's U, ...) is emitted as 0 and the
//! item is flagged `richness_degenerate`.

use std::collections::BTreeMap;

use crate::lexfeat::{PartialFeatures, TokenizedItem};

const MSTTR_SEGMENT: usize = 25;
const MATTR_WINDOW: usize = 25;
const MTLD_THRESHOLD: f64 = 0.72;
const HDD_SAMPLE: usize = 42;

pub fn richness_features(item: &TokenizedItem) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    let tokens: Vec<String> = item
        .word_tokens()
        .map(|t| t.surface.to_lowercase())
        .collect();
    let n = tokens.len();
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tokens {
        *freq.entry(t.as_str()).or_insert(0) += 1;
    }
    let v = freq.len();
    let mut spectrum: BTreeMap<usize, usize> = BTreeMap::new();
    for &f in freq.values() {
        *spectrum.entry(f).or_insert(0) += 1;
    }
    let v1 = spectrum.get(&1).copied().unwrap_or(0);
    let v2 = spectrum.get(&2).copied().unwrap_or(0);

    let nf = n as f64;
    let vf = v as f64;
    let mut degenerate = false;
    let mut put = |out: &mut PartialFeatures, name: &str, value: f64| {
        if value.is_finite() {
            out.insert(name, value);
        } else {
            out.insert(name, 0.0);
            degenerate = true;
        }
    };

    let sum_i2vi: f64 = spectrum.iter().map(|(&i, &vi)| (i * i * vi) as f64).sum();

    put(&mut out, "ttr", vf / nf);
    put(&mut out, "rttr", vf / nf.sqrt());
    put(&mut out, "cttr", vf / (2.0 * nf).sqrt());
    put(&mut out, "herdan_c", vf.ln() / nf.ln());
    put(&mut out, "summer_index", vf.ln().ln() / nf.ln().ln());
    put(&mut out, "dugast_u", nf.ln().powi(2) / (nf.ln() - vf.ln()));
    put(&mut out, "maas_index", (nf.ln() - vf.ln()) / nf.ln().powi(2));
    put(&mut out, "yule_k", 1e4 * (sum_i2vi - nf) / (nf * nf));
    put(&mut out, "herdan_v", (sum_i2vi / (nf * nf) - 1.0 / vf).sqrt());
    let simpsons = if n >= 2 {
        spectrum
            .iter()
            .map(|(&i, &vi)| (vi * i * (i - 1)) as f64)
            .sum::<f64>()
            / (nf * (nf - 1.0))
    } else {
        f64::NAN
    };
    put(&mut out, "simpsons_d", simpsons);
    put(&mut out, "sichel_s", v2 as f64 / vf);
    put(&mut out, "msttr", msttr(&tokens));
    put(&mut out, "mattr", mattr(&tokens));
    let (mtld_value, mtld_ok) = mtld(&tokens);
    put(&mut out, "mtld", if mtld_ok { mtld_value } else { f64::NAN });
    put(&mut out, "hdd", hdd(&freq, n));
    out.insert("n_hapax_legomena", v1 as f64);
    out.insert("n_hapax_dislegomena", v2 as f64);
    if degenerate {
        out.flag("richness_degenerate");
    }

    if item.layers.pos {
        let lexical = item
            .word_tokens()
            .filter(|t| {
                matches!(t.upos.as_deref(), Some("NOUN") | Some("VERB") | Some("ADJ") | Some("ADV"))
            })
            .count();
        out.insert("lexical_density", lexical as f64 / nf);
    }
    out
}

fn ttr_of(tokens: &[String]) -> f64 {
    let types: std::collections::BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
    types.len() as f64 / tokens.len() as f64
}

fn msttr(tokens: &[String]) -> f64 {
    if tokens.len() < MSTTR_SEGMENT {
        return ttr_of(tokens);
    }
    let segments: Vec<f64> = tokens
        .chunks_exact(MSTTR_SEGMENT)
        .map(ttr_of)
        .collect();
    segments.iter().sum::<f64>() / segments.len() as f64
}

fn mattr(tokens: &[String]) -> f64 {
    if tokens.len() < MATTR_WINDOW {
        return ttr_of(tokens);
    }
    let n_windows = tokens.len() - MATTR_WINDOW + 1;
    let sum: f64 = (0..n_windows)
        .map(|i| ttr_of(&tokens[i..i + MATTR_WINDOW]))
        .sum();
    sum / n_windows as f64
}

/// Bidirectional MTLD; the value is the mean of the forward and reversed
/// passes. Returns (value, defined).
fn mtld(tokens: &[String]) -> (f64, bool) {
    let forward = mtld_one_direction(tokens.iter());
    let backward = mtld_one_direction(tokens.iter().rev());
    match (forward, backward) {
        (Some(f), Some(b)) => ((f + b) / 2.0, true),
        _ => (0.0, false),
    }
}

fn mtld_one_direction<'a>(tokens: impl Iterator<Item = &'a String>) -> Option<f64> {
    let mut factors = 0.0f64;
    let mut seen: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut len = 0usize;
    let mut total = 0usize;
    let mut ttr = 1.0;
    for t in tokens {
        total += 1;
        len += 1;
        *seen.entry(t.as_str()).or_insert(0) += 1;
        ttr = seen.len() as f64 / len as f64;
        if ttr <= MTLD_THRESHOLD {
            factors += 1.0;
            seen.clear();
            len = 0;
            ttr = 1.0;
        }
    }
    if len > 0 {
        factors += (1.0 - ttr) / (1.0 - MTLD_THRESHOLD);
    }
    if factors > 0.0 {
        Some(total as f64 / factors)
    } else {
        None
    }
}

/// HD-D: expected proportion of types appearing in a random draw of
/// min(42, N) tokens. P(type with frequency f absent from the sample) is
/// ∏_{i<draws} (N−f−i)/(N−i).
fn hdd(freq: &BTreeMap<&str, usize>, n: usize) -> f64 {
    let draws = HDD_SAMPLE.min(n);
    let mut sum = 0.0;
    for &f in freq.values() {
        let mut p_absent = 1.0f64;
        for i in 0..draws {
            let denom = (n - i) as f64;
            let numer = n as f64 - f as f64 - i as f64;
            if numer <= 0.0 {
                p_absent = 0.0;
                break;
            }
            p_absent *= numer / denom;
        }
        sum += 1.0 - p_absent;
    }
    sum
}
