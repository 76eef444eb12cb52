use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{EntityError, Identifier};

/// Label emitted for identifiers that have no English label.
pub const UNKNOWN_LABEL: &str = "unknown";

/// English labels for items and properties.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelMap {
    entries: HashMap<Identifier, String>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a label. Empty labels are rejected.
    pub fn insert(&mut self, id: impl Into<Identifier>, label: impl Into<String>) -> bool {
        let label = label.into();
        if label.is_empty() {
            return false;
        }
        self.entries.insert(id.into(), label);
        true
    }

    pub fn get(&self, id: &Identifier) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Identifier, &str)> {
        self.entries.iter().map(|(k, v)| (k, v.as_str()))
    }

    /// Reads `id<TAB>english_label` lines. Blank lines are skipped.
    pub fn from_tsv<R: Read>(reader: R) -> Result<Self, EntityError> {
        let mut map = Self::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let (id, label) = line.split_once('\t').ok_or_else(|| EntityError::LabelMap {
                line: line_no,
                message: "expected two tab-separated columns".into(),
            })?;
            let id: Identifier = id.parse().map_err(|e: EntityError| EntityError::LabelMap {
                line: line_no,
                message: e.to_string(),
            })?;
            if !map.insert(id, label) {
                return Err(EntityError::LabelMap {
                    line: line_no,
                    message: format!("empty label for {id}"),
                });
            }
        }
        Ok(map)
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self, EntityError> {
        Self::from_tsv(std::fs::File::open(path)?)
    }

    /// Writes entries sorted by identifier.
    pub fn write_tsv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        let mut entries: Vec<_> = self.entries.iter().collect();
        entries.sort_by_key(|(id, _)| **id);
        for (id, label) in entries {
            writeln!(writer, "{id}\t{label}")?;
        }
        Ok(())
    }
}

impl FromIterator<(Identifier, String)> for LabelMap {
    fn from_iter<T: IntoIterator<Item = (Identifier, String)>>(iter: T) -> Self {
        let mut map = Self::new();
        for (id, label) in iter {
            map.insert(id, label);
        }
        map
    }
}

/// English label for `id`, or [`UNKNOWN_LABEL`] when the map has none.
pub fn resolve_label<'a>(id: &Identifier, labels: &'a LabelMap) -> &'a str {
    labels.get(id).unwrap_or(UNKNOWN_LABEL)
}

/// Like [`resolve_label`] for raw `[PQ]<digits>` tokens; unparsable tokens
/// resolve to [`UNKNOWN_LABEL`] too.
pub fn resolve_label_str<'a>(raw: &str, labels: &'a LabelMap) -> &'a str {
    match raw.parse::<Identifier>() {
        Ok(id) => resolve_label(&id, labels),
        Err(_) => UNKNOWN_LABEL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(raw: &str) -> Identifier {
        raw.parse().unwrap()
    }

    #[test]
    fn resolves_present_and_missing() {
        let mut labels = LabelMap::new();
        labels.insert(id("P85"), "anthem");
        labels.insert(id("Q1"), "universe");
        assert_eq!(resolve_label(&id("P85"), &labels), "anthem");
        assert_eq!(resolve_label(&id("Q1"), &labels), "universe");
        assert_eq!(resolve_label(&id("Q999999999"), &labels), "unknown");
        assert_eq!(resolve_label_str("Q007", &labels), "unknown");
    }

    #[test]
    fn tsv_round_trip_and_errors() {
        let tsv = "P85\tanthem\n\nQ219\tBulgaria\r\nQ5\thuman being\n";
        let labels = LabelMap::from_tsv(tsv.as_bytes()).unwrap();
        assert_eq!(labels.len(), 3);
        assert_eq!(labels.get(&id("Q5")), Some("human being"));

        let mut out = Vec::new();
        labels.write_tsv(&mut out).unwrap();
        assert_eq!(LabelMap::from_tsv(out.as_slice()).unwrap(), labels);

        let err = LabelMap::from_tsv("Q1\tuniverse\nX9\tbad\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EntityError::LabelMap { line: 2, .. }));
        assert!(LabelMap::from_tsv("Q1\t\n".as_bytes()).is_err());
        assert!(LabelMap::from_tsv("Q1 universe\n".as_bytes()).is_err());
    }

    #[test]
    fn empty_labels_are_not_stored() {
        let mut labels = LabelMap::new();
        assert!(!labels.insert(id("Q1"), ""));
        assert!(labels.is_empty());
    }
}
