use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::{
    EntityDocument, EntityError, Identifier, ItemId, LanguageCode, PropertyId, Rank, Statement,
    StatementValue, MAX_TIME_PRECISION,
};

const ENTITY_IRI: &str = "http://www.wikidata.org/entity/";
const GREGORIAN: &str = "http://www.wikidata.org/entity/Q1985727";
const EARTH: &str = "http://www.wikidata.org/entity/Q2";

fn malformed(msg: impl Into<String>) -> EntityError {
    EntityError::MalformedDocument(msg.into())
}

pub(crate) fn is_decimal(raw: &str) -> bool {
    let body = raw.strip_prefix(['+', '-']).unwrap_or(raw);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

/// Serializes a JSON value with object keys sorted at every level.
pub fn canonical_json(value: &Value) -> String {
    fn sorted(value: &Value) -> Value {
        match value {
            Value::Object(map) => {
                let ordered: BTreeMap<&String, Value> =
                    map.iter().map(|(k, v)| (k, sorted(v))).collect();
                let mut out = Map::new();
                for (k, v) in ordered {
                    out.insert(k.clone(), v);
                }
                Value::Object(out)
            }
            Value::Array(items) => Value::Array(items.iter().map(sorted).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sorted(value)).expect("JSON values always serialize")
}

/// Wikibase serializes empty maps as `[]`; treat both as empty.
fn object_or_empty<'a>(doc: &'a Map<String, Value>, key: &str) -> Result<Option<&'a Map<String, Value>>, EntityError> {
    match doc.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Object(map)) => Ok(Some(map)),
        Some(Value::Array(items)) if items.is_empty() => Ok(None),
        Some(_) => Err(malformed(format!("`{key}` is not an object"))),
    }
}

fn term_text(term: &Value, context: &str) -> Result<String, EntityError> {
    term.get("value")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| malformed(format!("{context} has no string `value`")))
}

fn parse_terms(
    doc: &Map<String, Value>,
    key: &str,
) -> Result<BTreeMap<LanguageCode, String>, EntityError> {
    let mut out = BTreeMap::new();
    if let Some(map) = object_or_empty(doc, key)? {
        for (lang, term) in map {
            let code = LanguageCode::new(lang.as_str())?;
            out.insert(code, term_text(term, key)?);
        }
    }
    Ok(out)
}

fn parse_aliases(
    doc: &Map<String, Value>,
) -> Result<BTreeMap<LanguageCode, Vec<String>>, EntityError> {
    let mut out = BTreeMap::new();
    if let Some(map) = object_or_empty(doc, "aliases")? {
        for (lang, list) in map {
            let code = LanguageCode::new(lang.as_str())?;
            let items = list
                .as_array()
                .ok_or_else(|| malformed("alias list is not an array"))?;
            let mut texts: Vec<String> = Vec::with_capacity(items.len());
            for item in items {
                let text = term_text(item, "alias")?;
                if !texts.contains(&text) {
                    texts.push(text);
                }
            }
            if !texts.is_empty() {
                out.insert(code, texts);
            }
        }
    }
    Ok(out)
}

fn fallback(datavalue: &Value) -> StatementValue {
    StatementValue::Text {
        value: canonical_json(datavalue),
    }
}

fn parse_unit(raw: &str) -> Option<Option<ItemId>> {
    if raw == "1" {
        return Some(None);
    }
    let id = raw
        .strip_prefix(ENTITY_IRI)
        .or_else(|| raw.strip_prefix("https://www.wikidata.org/entity/"))?;
    id.parse().ok().map(Some)
}

/// Maps one datavalue to a [`StatementValue`], degrading to canonical-JSON
/// text for kinds without a dedicated variant.
fn parse_datavalue(datavalue: &Value) -> StatementValue {
    let kind = datavalue.get("type").and_then(Value::as_str).unwrap_or("");
    let value = datavalue.get("value").unwrap_or(&Value::Null);
    let parsed = match kind {
        "string" => value.as_str().map(|s| StatementValue::Text {
            value: s.to_owned(),
        }),
        "wikibase-entityid" => value
            .get("id")
            .and_then(Value::as_str)
            .and_then(|id| id.parse::<Identifier>().ok())
            .map(|id| StatementValue::EntityRef { id }),
        "monolingualtext" => {
            let text = value.get("text").and_then(Value::as_str);
            let lang = value
                .get("language")
                .and_then(Value::as_str)
                .and_then(|l| LanguageCode::new(l).ok());
            text.zip(lang)
                .map(|(text, language)| StatementValue::MonolingualText {
                    language,
                    text: text.to_owned(),
                })
        }
        "quantity" => {
            let amount = value
                .get("amount")
                .and_then(Value::as_str)
                .filter(|a| is_decimal(a));
            let unit = value.get("unit").and_then(Value::as_str).and_then(parse_unit);
            amount.zip(unit).map(|(amount, unit)| StatementValue::Quantity {
                amount: amount.to_owned(),
                unit,
            })
        }
        "time" => {
            let time = value.get("time").and_then(Value::as_str);
            let precision = value
                .get("precision")
                .and_then(Value::as_u64)
                .filter(|p| *p <= u64::from(MAX_TIME_PRECISION));
            time.zip(precision)
                .map(|(time, precision)| StatementValue::TimePoint {
                    time: time.to_owned(),
                    precision: precision as u8,
                })
        }
        "globecoordinate" => {
            let lat = value.get("latitude").and_then(Value::as_f64);
            let lon = value.get("longitude").and_then(Value::as_f64);
            lat.zip(lon)
                // `+ 0.0` folds negative zero so equal coordinates share one encoding
                .map(|(latitude, longitude)| StatementValue::Coordinate {
                    latitude: latitude + 0.0,
                    longitude: longitude + 0.0,
                })
                .filter(|v| v.validate().is_ok())
        }
        _ => None,
    };
    parsed.unwrap_or_else(|| fallback(datavalue))
}

fn parse_snak(snak: &Value) -> Result<(PropertyId, StatementValue), EntityError> {
    let property: PropertyId = snak
        .get("property")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("snak without `property`"))?
        .parse()?;
    let value = match snak.get("snaktype").and_then(Value::as_str) {
        Some("somevalue") => StatementValue::SomeValue,
        Some("novalue") => StatementValue::NoValue,
        _ => match snak.get("datavalue") {
            Some(dv) => parse_datavalue(dv),
            None => return Err(malformed(format!("value snak on {property} has no datavalue"))),
        },
    };
    Ok((property, value))
}

fn parse_statement(raw: &Value) -> Result<Statement, EntityError> {
    let mainsnak = raw
        .get("mainsnak")
        .ok_or_else(|| malformed("statement without `mainsnak`"))?;
    let (property, value) = parse_snak(mainsnak)?;
    let rank = match raw.get("rank").and_then(Value::as_str) {
        Some("preferred") => Rank::Preferred,
        Some("deprecated") => Rank::Deprecated,
        _ => Rank::Normal,
    };
    let mut qualifiers = Vec::new();
    if let Some(Value::Object(map)) = raw.get("qualifiers") {
        for snaks in map.values() {
            for snak in snaks.as_array().into_iter().flatten() {
                qualifiers.push(parse_snak(snak)?);
            }
        }
    }
    Ok(Statement {
        property,
        value,
        rank,
        qualifiers,
    })
}

fn parse_statements(
    doc: &Map<String, Value>,
) -> Result<BTreeMap<PropertyId, Vec<Statement>>, EntityError> {
    let key = if doc.contains_key("claims") {
        "claims"
    } else {
        "statements"
    };
    let mut out = BTreeMap::new();
    if let Some(map) = object_or_empty(doc, key)? {
        for (prop, list) in map {
            let property: PropertyId = prop.parse()?;
            let items = list
                .as_array()
                .ok_or_else(|| malformed("statement list is not an array"))?;
            let mut statements = Vec::with_capacity(items.len());
            for item in items {
                let statement = parse_statement(item)?;
                if statement.property != property {
                    return Err(malformed(format!(
                        "statement for {} listed under {property}",
                        statement.property
                    )));
                }
                statements.push(statement);
            }
            if !statements.is_empty() {
                out.insert(property, statements);
            }
        }
    }
    Ok(out)
}

/// Parses Wikibase entity JSON bytes into a normalized [`EntityDocument`].
pub fn parse_entity(raw: &[u8]) -> Result<EntityDocument, EntityError> {
    let root: Value =
        serde_json::from_slice(raw).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let doc = root
        .as_object()
        .ok_or_else(|| malformed("document is not a JSON object"))?;
    let id: ItemId = doc
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("missing `id`"))?
        .parse()?;
    Ok(EntityDocument {
        id,
        labels: parse_terms(doc, "labels")?,
        descriptions: parse_terms(doc, "descriptions")?,
        aliases: parse_aliases(doc)?,
        statements: parse_statements(doc)?,
    })
}

fn terms_json(terms: &BTreeMap<LanguageCode, String>) -> Value {
    let map: Map<String, Value> = terms
        .iter()
        .map(|(lang, text)| {
            (
                lang.to_string(),
                json!({ "language": lang.as_str(), "value": text }),
            )
        })
        .collect();
    Value::Object(map)
}

fn entity_ref_json(id: &Identifier) -> Value {
    let (entity_type, number) = match id {
        Identifier::Item(q) => ("item", q.number()),
        Identifier::Property(p) => ("property", p.number()),
    };
    json!({
        "type": "wikibase-entityid",
        "value": { "entity-type": entity_type, "numeric-id": number, "id": id.to_string() }
    })
}

fn datavalue_json(value: &StatementValue) -> Option<Value> {
    let dv = match value {
        StatementValue::EntityRef { id } => entity_ref_json(id),
        StatementValue::Text { value } => json!({ "type": "string", "value": value }),
        StatementValue::MonolingualText { language, text } => json!({
            "type": "monolingualtext",
            "value": { "text": text, "language": language.as_str() }
        }),
        StatementValue::Quantity { amount, unit } => json!({
            "type": "quantity",
            "value": {
                "amount": amount,
                "unit": unit.map_or_else(|| "1".to_owned(), |q| format!("{ENTITY_IRI}{q}")),
            }
        }),
        StatementValue::TimePoint { time, precision } => json!({
            "type": "time",
            "value": {
                "time": time, "precision": precision, "timezone": 0,
                "before": 0, "after": 0, "calendarmodel": GREGORIAN,
            }
        }),
        StatementValue::Coordinate {
            latitude,
            longitude,
        } => json!({
            "type": "globecoordinate",
            "value": {
                "latitude": latitude, "longitude": longitude,
                "altitude": null, "precision": null, "globe": EARTH,
            }
        }),
        StatementValue::SomeValue | StatementValue::NoValue => return None,
    };
    Some(dv)
}

fn snak_json(property: PropertyId, value: &StatementValue) -> Value {
    let snaktype = match value {
        StatementValue::SomeValue => "somevalue",
        StatementValue::NoValue => "novalue",
        _ => "value",
    };
    let mut snak = Map::new();
    snak.insert("snaktype".into(), json!(snaktype));
    snak.insert("property".into(), json!(property.to_string()));
    if let Some(dv) = datavalue_json(value) {
        snak.insert("datavalue".into(), dv);
    }
    Value::Object(snak)
}

pub(crate) fn to_wikibase_json(doc: &EntityDocument) -> Value {
    let aliases: Map<String, Value> = doc
        .aliases
        .iter()
        .map(|(lang, list)| {
            let items: Vec<Value> = list
                .iter()
                .map(|text| json!({ "language": lang.as_str(), "value": text }))
                .collect();
            (lang.to_string(), Value::Array(items))
        })
        .collect();
    let claims: Map<String, Value> = doc
        .statements
        .iter()
        .map(|(property, list)| {
            let items: Vec<Value> = list
                .iter()
                .map(|statement| {
                    let mut qualifiers: BTreeMap<String, Vec<Value>> = BTreeMap::new();
                    for (qp, qv) in &statement.qualifiers {
                        qualifiers
                            .entry(qp.to_string())
                            .or_default()
                            .push(snak_json(*qp, qv));
                    }
                    let rank = serde_json::to_value(statement.rank).expect("rank serializes");
                    let mut out = json!({
                        "mainsnak": snak_json(statement.property, &statement.value),
                        "type": "statement",
                        "rank": rank,
                    });
                    if !qualifiers.is_empty() {
                        out["qualifiers"] = json!(qualifiers);
                    }
                    out
                })
                .collect();
            (property.to_string(), Value::Array(items))
        })
        .collect();
    json!({
        "type": "item",
        "id": doc.id.to_string(),
        "labels": terms_json(&doc.labels),
        "descriptions": terms_json(&doc.descriptions),
        "aliases": aliases,
        "claims": claims,
    })
}
