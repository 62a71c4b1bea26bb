//! Parsers for the corpus input files.
//!
//! File formats:
//!
//! - annotations: delimiter-separated values with header
//!   `item_id,annotator_id,label`.
//! - profiles: header `annotator_id,<characteristic>...`; one row per
//!   annotator (ids may repeat across rows until conflict resolution).
//! - items: header `item_id,text` with RFC 4180 quoting.
//! - schema: key-value format described at [`parse_schema`].
//! - recode maps: `characteristic,raw,harmonized` rows, see
//!   [`parse_recode_maps`].
//!
//! All parsers take the file contents as a string plus a display name used
//! in error locations, so they can be driven from files, memory, or a fuzzer.

use std::collections::BTreeMap;

use crate::corpus::{
    AnnotationRecord, AnnotatorId, AnnotatorProfile, CharacteristicType, ItemId, ItemRecord,
    RecodeAction, RecodeMap, Schema,
};
use crate::error::{Error, Result};

fn csv_reader(src: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(src.as_bytes())
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Parse the annotations file, checking labels against the scale bound.
pub fn parse_annotations(src: &str, file: &str, scale: u32) -> Result<Vec<AnnotationRecord>> {
    let mut reader = csv_reader(src);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(file, 1, e.to_string()))?
        .clone();
    let expected = ["item_id", "annotator_id", "label"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(
            file,
            1,
            format!("expected header item_id,annotator_id,label, got {:?}", headers),
        ));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(file, line, e.to_string())
        })?;
        let line = record_line(&rec);
        if rec.len() != 3 {
            return Err(Error::parse(file, line, format!("expected 3 fields, got {}", rec.len())));
        }
        let label: u32 = rec[2]
            .parse()
            .map_err(|_| Error::parse(file, line, format!("label `{}` is not an integer", &rec[2])))?;
        if label < 1 || label > scale {
            return Err(Error::parse(
                file,
                line,
                format!("label {label} outside scale 1..={scale}"),
            ));
        }
        if rec[0].is_empty() || rec[1].is_empty() {
            return Err(Error::parse(file, line, "empty item_id or annotator_id"));
        }
        out.push(AnnotationRecord {
            item_id: ItemId(rec[0].to_string()),
            annotator_id: AnnotatorId(rec[1].to_string()),
            label,
        });
    }
    Ok(out)
}

/// Parse the profiles file. Every characteristic column must be declared in
/// the schema; schema characteristics absent from the header are treated as
/// missing for all annotators (and will be dropped by the missing/PNA pass).
pub fn parse_profiles(src: &str, file: &str, schema: &Schema) -> Result<Vec<AnnotatorProfile>> {
    let mut reader = csv_reader(src);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(file, 1, e.to_string()))?
        .clone();
    let cols: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    if cols.first().map(String::as_str) != Some("annotator_id") {
        return Err(Error::parse(file, 1, "first profile column must be annotator_id"));
    }
    for c in &cols[1..] {
        if schema.characteristic(c).is_none() {
            return Err(Error::parse(
                file,
                1,
                format!("characteristic `{c}` not declared in schema"),
            ));
        }
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(file, line, e.to_string())
        })?;
        let line = record_line(&rec);
        if rec.len() != cols.len() {
            return Err(Error::parse(
                file,
                line,
                format!("expected {} fields, got {}", cols.len(), rec.len()),
            ));
        }
        if rec[0].is_empty() {
            return Err(Error::parse(file, line, "empty annotator_id"));
        }
        let mut characteristics = BTreeMap::new();
        for (i, name) in cols.iter().enumerate().skip(1) {
            characteristics.insert(name.clone(), rec[i].to_string());
        }
        out.push(AnnotatorProfile {
            annotator_id: AnnotatorId(rec[0].to_string()),
            characteristics,
        });
    }
    Ok(out)
}

/// Parse the items file (`item_id,text`). Texts must be non-empty after
/// whitespace trimming.
pub fn parse_items(src: &str, file: &str) -> Result<Vec<ItemRecord>> {
    let mut reader = csv_reader(src);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(file, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["item_id", "text"] {
        return Err(Error::parse(file, 1, "expected header item_id,text"));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(file, line, e.to_string())
        })?;
        let line = record_line(&rec);
        if rec.len() != 2 {
            return Err(Error::parse(file, line, format!("expected 2 fields, got {}", rec.len())));
        }
        if rec[0].is_empty() {
            return Err(Error::parse(file, line, "empty item_id"));
        }
        if rec[1].trim().is_empty() {
            return Err(Error::parse(file, line, format!("item {} has empty text", &rec[0])));
        }
        out.push(ItemRecord {
            item_id: ItemId(rec[0].to_string()),
            text: rec[1].to_string(),
        });
    }
    Ok(out)
}

/// Parse a schema file.
///
/// Format (one key per line, `#` comments, values containing commas are
/// separated by `|`):
///
/// ```text
/// scale = 5
/// pna = NA | Prefer not to answer
/// multi_delimiter = ;
///
/// [gender]
/// type = nominal
/// levels = male | female | diverse
/// reference = male
///
/// [age]
/// type = ordinal
/// levels = 18-24 | 25-29 | 30-34
///
/// [care]
/// type = interval
/// ```
pub fn parse_schema(src: &str, file: &str) -> Result<Schema> {
    let mut scale: Option<u32> = None;
    let mut pna_tokens = vec!["NA".to_string(), "Prefer not to answer".to_string()];
    let mut multi_delimiter = ';';
    let mut characteristics: Vec<(String, CharacteristicType)> = Vec::new();

    struct Section {
        name: String,
        line: usize,
        kind: Option<String>,
        levels: Option<Vec<String>>,
        reference: Option<String>,
    }
    let mut current: Option<Section> = None;

    fn finish(sec: Section, file: &str) -> Result<(String, CharacteristicType)> {
        let kind = sec
            .kind
            .ok_or_else(|| Error::parse(file, sec.line, format!("[{}] missing `type`", sec.name)))?;
        let ty = match kind.as_str() {
            "nominal" => {
                let levels = sec.levels.ok_or_else(|| {
                    Error::parse(file, sec.line, format!("[{}] nominal requires `levels`", sec.name))
                })?;
                let reference = sec.reference.ok_or_else(|| {
                    Error::parse(file, sec.line, format!("[{}] nominal requires `reference`", sec.name))
                })?;
                if !levels.contains(&reference) {
                    return Err(Error::parse(
                        file,
                        sec.line,
                        format!("[{}] reference `{}` not among levels", sec.name, reference),
                    ));
                }
                CharacteristicType::Nominal { levels, reference }
            }
            "ordinal" => {
                let levels = sec.levels.ok_or_else(|| {
                    Error::parse(file, sec.line, format!("[{}] ordinal requires `levels`", sec.name))
                })?;
                if levels.len() < 2 {
                    return Err(Error::parse(
                        file,
                        sec.line,
                        format!("[{}] ordinal requires at least 2 levels", sec.name),
                    ));
                }
                CharacteristicType::Ordinal { levels }
            }
            "interval" => CharacteristicType::Interval,
            other => {
                return Err(Error::parse(
                    file,
                    sec.line,
                    format!("[{}] unknown type `{other}` (nominal|ordinal|interval)", sec.name),
                ))
            }
        };
        Ok((sec.name, ty))
    }

    for (idx, raw_line) in src.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if let Some(sec) = current.take() {
                characteristics.push(finish(sec, file)?);
            }
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::parse(file, lineno, "empty characteristic name"));
            }
            if characteristics.iter().any(|(n, _)| n == name) {
                return Err(Error::parse(file, lineno, format!("duplicate characteristic [{name}]")));
            }
            current = Some(Section {
                name: name.to_string(),
                line: lineno,
                kind: None,
                levels: None,
                reference: None,
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(file, lineno, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        match &mut current {
            None => match key {
                "scale" => {
                    let k: u32 = value
                        .parse()
                        .map_err(|_| Error::parse(file, lineno, format!("scale `{value}` is not an integer")))?;
                    if k < 2 {
                        return Err(Error::parse(file, lineno, "scale must be at least 2"));
                    }
                    scale = Some(k);
                }
                "pna" => {
                    pna_tokens = value.split('|').map(|t| t.trim().to_string()).collect();
                }
                "multi_delimiter" => {
                    let mut chars = value.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) => multi_delimiter = c,
                        _ => {
                            return Err(Error::parse(
                                file,
                                lineno,
                                "multi_delimiter must be a single character",
                            ))
                        }
                    }
                }
                other => {
                    return Err(Error::parse(file, lineno, format!("unknown top-level key `{other}`")))
                }
            },
            Some(sec) => match key {
                "type" => sec.kind = Some(value.to_string()),
                "levels" => {
                    let levels: Vec<String> =
                        value.split('|').map(|t| t.trim().to_string()).collect();
                    if levels.iter().any(String::is_empty) {
                        return Err(Error::parse(file, lineno, "empty level name"));
                    }
                    sec.levels = Some(levels);
                }
                "reference" => sec.reference = Some(value.to_string()),
                other => {
                    return Err(Error::parse(
                        file,
                        lineno,
                        format!("unknown key `{other}` in [{}]", sec.name),
                    ))
                }
            },
        }
    }
    if let Some(sec) = current.take() {
        characteristics.push(finish(sec, file)?);
    }
    let scale = scale.ok_or_else(|| Error::parse(file, 1, "schema missing `scale`"))?;
    Ok(Schema {
        scale,
        characteristics,
        pna_tokens,
        multi_delimiter,
    })
}

/// Parse recode maps from `characteristic,raw,harmonized` rows.
///
/// Special forms:
/// - harmonized `DROP` removes the annotator;
/// - raw `*multi*` is the catch-all for multi-valued answers without an
///   explicit entry (e.g. mapping rare race combinations to `multiracial`);
/// - raw `*unmapped*` with harmonized `error` declares the map exhaustive:
///   any raw value without an entry becomes an error at recode time.
///
/// Multi-valued raws are canonicalized with `delimiter` so part order does
/// not matter.
pub fn parse_recode_maps(src: &str, file: &str, delimiter: char) -> Result<Vec<RecodeMap>> {
    let mut reader = csv_reader(src);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(file, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["characteristic", "raw", "harmonized"] {
        return Err(Error::parse(file, 1, "expected header characteristic,raw,harmonized"));
    }
    let mut maps: BTreeMap<String, RecodeMap> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(file, line, e.to_string())
        })?;
        let line = record_line(&rec);
        if rec.len() != 3 {
            return Err(Error::parse(file, line, format!("expected 3 fields, got {}", rec.len())));
        }
        let characteristic = rec[0].to_string();
        if characteristic.is_empty() {
            return Err(Error::parse(file, line, "empty characteristic"));
        }
        let map = maps.entry(characteristic.clone()).or_insert_with(|| RecodeMap {
            characteristic,
            entries: BTreeMap::new(),
            multi_catch_all: None,
            exhaustive: false,
        });
        match (&rec[1], &rec[2]) {
            ("*multi*", label) => {
                if label == "DROP" {
                    return Err(Error::parse(file, line, "*multi* cannot map to DROP"));
                }
                map.multi_catch_all = Some(label.to_string());
            }
            ("*unmapped*", "error") => map.exhaustive = true,
            ("*unmapped*", other) => {
                return Err(Error::parse(
                    file,
                    line,
                    format!("*unmapped* supports only `error`, got `{other}`"),
                ))
            }
            (raw, harmonized) => {
                if raw.is_empty() {
                    return Err(Error::parse(file, line, "empty raw value"));
                }
                let key = canonical_value(raw, delimiter);
                let action = if harmonized == "DROP" {
                    RecodeAction::Drop
                } else {
                    RecodeAction::Map(harmonized.to_string())
                };
                if map.entries.insert(key, action).is_some() {
                    return Err(Error::parse(
                        file,
                        line,
                        format!("duplicate recode entry for `{raw}`"),
                    ));
                }
            }
        }
    }
    Ok(maps.into_values().collect())
}

/// Canonical lookup key for a possibly multi-valued answer: parts are
/// trimmed and sorted so the delimiter order does not matter.
pub(crate) fn canonical_value(raw: &str, delimiter: char) -> String {
    let mut parts: Vec<&str> = raw.split(delimiter).map(str::trim).collect();
    if parts.len() == 1 {
        return parts[0].to_string();
    }
    parts.sort_unstable();
    parts.join(&delimiter.to_string())
}

/// Number of non-empty parts in a possibly multi-valued answer.
pub(crate) fn answer_arity(raw: &str, delimiter: char) -> usize {
    raw.split(delimiter).filter(|p| !p.trim().is_empty()).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = "\
scale = 5
pna = NA | Prefer not to answer
multi_delimiter = ;

[gender]
type = nominal
levels = male | female | diverse
reference = male

[age]
type = ordinal
levels = 18-24 | 25-29 | 30-34
";

    #[test]
    fn schema_round_trip() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        assert_eq!(schema.scale, 5);
        assert_eq!(schema.characteristics.len(), 2);
        assert_eq!(schema.multi_delimiter, ';');
        match schema.characteristic("gender").unwrap() {
            CharacteristicType::Nominal { levels, reference } => {
                assert_eq!(levels.len(), 3);
                assert_eq!(reference, "male");
            }
            other => panic!("unexpected type {other:?}"),
        }
    }

    #[test]
    fn schema_rejects_bad_reference() {
        let src = "scale = 3\n[g]\ntype = nominal\nlevels = a | b\nreference = c\n";
        let err = parse_schema(src, "schema").unwrap_err();
        assert!(err.to_string().contains("reference"));
    }

    #[test]
    fn annotations_reject_out_of_scale_label() {
        let src = "item_id,annotator_id,label\ni1,a1,7\n";
        let err = parse_annotations(src, "ann", 5).unwrap_err();
        assert!(err.to_string().contains("label 7"), "{err}");
        assert!(err.to_string().contains("ann:2"), "{err}");
    }

    #[test]
    fn annotations_minimal_ok() {
        let src = "item_id,annotator_id,label\ni1,a1,1\ni1,a2,5\ni2,a1,3\n";
        let anns = parse_annotations(src, "ann", 5).unwrap();
        assert_eq!(anns.len(), 3);
    }

    #[test]
    fn items_quoting() {
        let src = "item_id,text\ni1,\"hello, world\"\n";
        let items = parse_items(src, "items").unwrap();
        assert_eq!(items[0].text, "hello, world");
    }

    #[test]
    fn items_reject_blank_text() {
        let src = "item_id,text\ni1,\"   \"\n";
        assert!(parse_items(src, "items").is_err());
    }

    #[test]
    fn recode_map_directives() {
        let src = "\
characteristic,raw,harmonized
race,*multi*,multiracial
race,White;Asian,white-asian
gender,m,male
gender,nonanswer,DROP
gender,*unmapped*,error
";
        let maps = parse_recode_maps(src, "recode", ';').unwrap();
        let race = maps.iter().find(|m| m.characteristic == "race").unwrap();
        assert_eq!(race.multi_catch_all.as_deref(), Some("multiracial"));
        // canonicalized key is sorted
        assert!(race.entries.contains_key("Asian;White"));
        let gender = maps.iter().find(|m| m.characteristic == "gender").unwrap();
        assert!(gender.exhaustive);
        assert_eq!(gender.entries["nonanswer"], RecodeAction::Drop);
    }

    #[test]
    fn profile_columns_must_be_declared() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let src = "annotator_id,height\na1,180\n";
        assert!(parse_profiles(src, "profiles", &schema).is_err());
    }
}
