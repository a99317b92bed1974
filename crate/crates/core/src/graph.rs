//! Immutable entity link graph: per-entity inlink sets plus the total page
//! count `W` used by the relatedness measures.
//!
//! Ids are taken verbatim from the ingestion files; source pages and target
//! entities share one id space, so a page that links to something can itself
//! be an entity with inlinks. After [`build_graph`] the structure never
//! mutates and can be read from any number of threads.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a page/entity, stable across runs and shared between
/// link sources and link targets.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for EntityId {
    fn from(id: u32) -> Self {
        EntityId(id)
    }
}

/// Title and optional NER type attached to an entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMeta {
    pub title: String,
    pub ner_type: Option<String>,
}

/// Immutable inlink-set store.
///
/// Every inlink list is sorted ascending with no duplicates, and
/// `total_pages` is at least as large as every inlink set.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGraph {
    inlinks: HashMap<EntityId, Vec<EntityId>>,
    total_pages: u64,
    metadata: HashMap<EntityId, EntityMeta>,
}

impl LinkGraph {
    /// Sorted, duplicate-free inlink list of `e`. Unknown entities have no
    /// inlinks rather than being an error; candidate lists routinely contain
    /// long-tail entities missing from the ingested dump.
    pub fn inlinks(&self, e: EntityId) -> &[EntityId] {
        self.inlinks.get(&e).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Number of pages in the universe (`W`).
    pub fn total_pages(&self) -> u64 {
        self.total_pages
    }

    /// Number of entities with a stored inlink list (including empty ones).
    pub fn entity_count(&self) -> usize {
        self.inlinks.len()
    }

    /// All stored entity ids, ascending.
    pub fn entity_ids(&self) -> Vec<EntityId> {
        let mut ids: Vec<EntityId> = self.inlinks.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn meta(&self, e: EntityId) -> Option<&EntityMeta> {
        self.metadata.get(&e)
    }

    /// NER type label from the graph metadata, if any.
    pub fn ner_type(&self, e: EntityId) -> Option<&str> {
        self.metadata.get(&e).and_then(|m| m.ner_type.as_deref())
    }
}

/// Builds a graph from edge and metadata streams.
///
/// Duplicate edges collapse; entities present only in metadata get empty
/// inlink lists. Without an override, `W` is the number of distinct ids
/// seen anywhere in the input (edge sources, edge targets, metadata ids).
pub fn build_graph(
    link_edges: impl IntoIterator<Item = (EntityId, EntityId)>,
    entity_metadata: impl IntoIterator<Item = (EntityId, String, Option<String>)>,
    total_pages_override: Option<u64>,
) -> Result<LinkGraph> {
    let mut inlinks: HashMap<EntityId, BTreeSet<EntityId>> = HashMap::new();
    let mut universe: BTreeSet<EntityId> = BTreeSet::new();

    for (source, target) in link_edges {
        universe.insert(source);
        universe.insert(target);
        inlinks.entry(target).or_default().insert(source);
    }

    let mut metadata = HashMap::new();
    for (id, title, ner_type) in entity_metadata {
        universe.insert(id);
        inlinks.entry(id).or_default();
        metadata.insert(id, EntityMeta { title, ner_type });
    }

    let max_inlinks = inlinks.values().map(BTreeSet::len).max().unwrap_or(0) as u64;
    let total_pages = match total_pages_override {
        Some(w) => {
            if w < 1 {
                return Err(Error::Validation(
                    "total_pages override must be positive".into(),
                ));
            }
            if w < max_inlinks {
                return Err(Error::Validation(format!(
                    "total_pages override {w} is smaller than the largest inlink set ({max_inlinks})"
                )));
            }
            w
        }
        None => {
            let w = universe.len() as u64;
            if w == 0 {
                return Err(Error::Validation(
                    "cannot infer total_pages from empty input; pass an override".into(),
                ));
            }
            w
        }
    };

    Ok(LinkGraph {
        inlinks: inlinks
            .into_iter()
            .map(|(e, set)| (e, set.into_iter().collect()))
            .collect(),
        total_pages,
        metadata,
    })
}

// ---------------------------------------------------------------------------
// Text ingestion
// ---------------------------------------------------------------------------

fn parse_id(field: &str, path: &Path, line: usize) -> Result<EntityId> {
    field
        .trim()
        .parse::<u32>()
        .map(EntityId)
        .map_err(|_| Error::Ingestion {
            path: path.to_path_buf(),
            line,
            message: format!("expected a non-negative integer id, got `{field}`"),
        })
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Parses edge lines `source_id<TAB>target_id`. `#` comments and blank lines
/// are ignored. Errors carry the 1-based line number.
pub fn parse_edges(reader: impl BufRead, path: &Path) -> Result<Vec<(EntityId, EntityId)>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let lineno = idx + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::Ingestion {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected 2 tab-separated columns, got {}", cols.len()),
            });
        }
        edges.push((
            parse_id(cols[0], path, lineno)?,
            parse_id(cols[1], path, lineno)?,
        ));
    }
    Ok(edges)
}

/// Parses metadata lines `id<TAB>title<TAB>type`; an empty type field means
/// the entity has no known NER type.
pub fn parse_metadata(
    reader: impl BufRead,
    path: &Path,
) -> Result<Vec<(EntityId, String, Option<String>)>> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let lineno = idx + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Ingestion {
                path: path.to_path_buf(),
                line: lineno,
                message: format!("expected 3 tab-separated columns, got {}", cols.len()),
            });
        }
        let id = parse_id(cols[0], path, lineno)?;
        let ner_type = if cols[2].is_empty() {
            None
        } else {
            Some(cols[2].to_string())
        };
        rows.push((id, cols[1].to_string(), ner_type));
    }
    Ok(rows)
}

/// Builds a graph straight from an edge file and an optional metadata file.
pub fn build_graph_from_files(
    edges_path: &Path,
    metadata_path: Option<&Path>,
    total_pages_override: Option<u64>,
) -> Result<LinkGraph> {
    let edges = parse_edges(BufReader::new(File::open(edges_path)?), edges_path)?;
    let metadata = match metadata_path {
        Some(p) => parse_metadata(BufReader::new(File::open(p)?), p)?,
        None => Vec::new(),
    };
    build_graph(edges, metadata, total_pages_override)
}

// ---------------------------------------------------------------------------
// Binary snapshot
// ---------------------------------------------------------------------------
//
// Layout (all integers little-endian):
//   magic    [u8; 4] = "ILGS"
//   version  u32     = 1
//   total_pages u64
//   n_entities  u64
//   per entity, ascending by id:
//     id        u32
//     title_len u32, title bytes (UTF-8; absent metadata stored as len 0 + flag)
//     has_meta  u8  (0 = no metadata record)
//     has_type  u8
//     type_len  u32, type bytes     (only when has_type = 1)
//     n_inlinks u32, inlink ids u32 each, ascending

const SNAPSHOT_MAGIC: [u8; 4] = *b"ILGS";
const SNAPSHOT_VERSION: u32 = 1;

impl LinkGraph {
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_snapshot_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_snapshot_to(&self, out: &mut impl Write) -> Result<()> {
        out.write_all(&SNAPSHOT_MAGIC)?;
        out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        out.write_all(&self.total_pages.to_le_bytes())?;
        out.write_all(&(self.inlinks.len() as u64).to_le_bytes())?;
        for id in self.entity_ids() {
            out.write_all(&id.0.to_le_bytes())?;
            let meta = self.metadata.get(&id);
            let title = meta.map(|m| m.title.as_str()).unwrap_or("");
            out.write_all(&(title.len() as u32).to_le_bytes())?;
            out.write_all(title.as_bytes())?;
            out.write_all(&[meta.is_some() as u8])?;
            let ner_type = meta.and_then(|m| m.ner_type.as_deref());
            out.write_all(&[ner_type.is_some() as u8])?;
            if let Some(t) = ner_type {
                out.write_all(&(t.len() as u32).to_le_bytes())?;
                out.write_all(t.as_bytes())?;
            }
            let inlinks = &self.inlinks[&id];
            out.write_all(&(inlinks.len() as u32).to_le_bytes())?;
            for src in inlinks {
                out.write_all(&src.0.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot(path: &Path) -> Result<LinkGraph> {
        Self::read_snapshot_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn read_snapshot_from(input: &mut impl Read) -> Result<LinkGraph> {
        let mut magic = [0u8; 4];
        read_exact(input, &mut magic)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic; not a graph snapshot".into()));
        }
        let version = read_u32(input)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {version} (expected {SNAPSHOT_VERSION})"
            )));
        }
        let total_pages = read_u64(input)?;
        let n_entities = read_u64(input)?;
        let mut inlinks = HashMap::new();
        let mut metadata = HashMap::new();
        for _ in 0..n_entities {
            let id = EntityId(read_u32(input)?);
            let title = read_string(input)?;
            let has_meta = read_u8(input)? != 0;
            let has_type = read_u8(input)? != 0;
            let ner_type = if has_type {
                Some(read_string(input)?)
            } else {
                None
            };
            if has_meta {
                metadata.insert(id, EntityMeta { title, ner_type });
            }
            let n = read_u32(input)? as usize;
            let mut list = Vec::with_capacity(n);
            for _ in 0..n {
                list.push(EntityId(read_u32(input)?));
            }
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Snapshot(format!(
                    "inlink list of entity {id} is not strictly ascending"
                )));
            }
            inlinks.insert(id, list);
        }
        Ok(LinkGraph {
            inlinks,
            total_pages,
            metadata,
        })
    }
}

fn read_exact(input: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Snapshot("truncated snapshot".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u8(input: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(input, &mut b)?;
    Ok(b[0])
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(input, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_string(input: &mut impl Read) -> Result<String> {
    let len = read_u32(input)? as usize;
    let mut buf = vec![0u8; len];
    read_exact(input, &mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Snapshot("non-UTF-8 string field".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn e(id: u32) -> EntityId {
        EntityId(id)
    }

    fn ids(raw: &[u32]) -> Vec<EntityId> {
        raw.iter().copied().map(EntityId).collect()
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = build_graph([(e(1), e(10)), (e(2), e(10)), (e(1), e(10))], [], None).unwrap();
        assert_eq!(g.inlinks(e(10)), ids(&[1, 2]).as_slice());
    }

    #[test]
    fn empty_edges_with_override() {
        let meta = vec![(e(7), "Seven".to_string(), None)];
        let g = build_graph([], meta, Some(100)).unwrap();
        assert_eq!(g.total_pages(), 100);
        assert!(g.inlinks(e(7)).is_empty());
    }

    #[test]
    fn page_universe_counts_distinct_sources_and_targets() {
        // distinct ids {1,2,3,10,11} -> W = 5
        let g = build_graph(
            [(e(1), e(10)), (e(2), e(10)), (e(3), e(11)), (e(10), e(11))],
            [],
            None,
        )
        .unwrap();
        assert_eq!(g.total_pages(), 5);
    }

    #[test]
    fn metadata_only_entity_has_empty_inlinks_and_counts_toward_w() {
        let g = build_graph(
            [(e(1), e(10))],
            vec![(e(20), "Twenty".to_string(), Some("ORG".to_string()))],
            None,
        )
        .unwrap();
        assert!(g.inlinks(e(20)).is_empty());
        assert_eq!(g.total_pages(), 3); // {1, 10, 20}
        assert_eq!(g.ner_type(e(20)), Some("ORG"));
    }

    #[test]
    fn unknown_entity_has_no_inlinks() {
        let g = build_graph([(e(1), e(10))], [], None).unwrap();
        assert!(g.inlinks(e(999)).is_empty());
    }

    #[test]
    fn override_below_max_inlink_size_is_rejected() {
        let err = build_graph([(e(1), e(10)), (e(2), e(10)), (e(3), e(10))], [], Some(2))
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn empty_input_without_override_is_rejected() {
        let err = build_graph([], [], None).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn build_is_deterministic() {
        let edges = [(e(5), e(1)), (e(4), e(1)), (e(5), e(2))];
        let a = build_graph(edges, [], None).unwrap();
        let b = build_graph(edges, [], None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_parser_reports_line_numbers() {
        let text = "1\t10\n# comment\nnot-a-number\t3\n";
        let err = parse_edges(Cursor::new(text), Path::new("edges.tsv")).unwrap_err();
        match err {
            Error::Ingestion { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn edge_parser_rejects_wrong_column_count() {
        let err = parse_edges(Cursor::new("1\t2\t3\n"), Path::new("edges.tsv")).unwrap_err();
        match err {
            Error::Ingestion { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("columns"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn metadata_parser_allows_empty_type() {
        let rows = parse_metadata(Cursor::new("3\tRome\t\n4\tRome (TV)\tWORK\n"), Path::new("m"))
            .unwrap();
        assert_eq!(rows[0].2, None);
        assert_eq!(rows[1].2.as_deref(), Some("WORK"));
    }

    #[test]
    fn snapshot_round_trips() {
        let g = build_graph(
            [(e(1), e(10)), (e(2), e(10)), (e(3), e(11))],
            vec![
                (e(10), "Alpha".to_string(), Some("PER".to_string())),
                (e(11), "Beta".to_string(), None),
            ],
            Some(50),
        )
        .unwrap();
        let mut buf = Vec::new();
        g.write_snapshot_to(&mut buf).unwrap();
        let restored = LinkGraph::read_snapshot_from(&mut Cursor::new(&buf)).unwrap();
        assert_eq!(g, restored);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = LinkGraph> {
            let edges = prop::collection::vec((0u32..40, 0u32..40), 1..120);
            let meta = prop::collection::vec(
                (0u32..40, "[a-z]{1,8}", prop::option::of("[A-Z]{3}")),
                0..10,
            );
            (edges, meta).prop_map(|(edges, meta)| {
                build_graph(
                    edges.into_iter().map(|(s, t)| (EntityId(s), EntityId(t))),
                    meta.into_iter().map(|(id, title, ty)| (EntityId(id), title, ty)),
                    None,
                )
                .unwrap()
            })
        }

        proptest! {
            #[test]
            fn snapshot_round_trip_is_lossless(g in arb_graph()) {
                let mut buf = Vec::new();
                g.write_snapshot_to(&mut buf).unwrap();
                let restored =
                    LinkGraph::read_snapshot_from(&mut Cursor::new(&buf)).unwrap();
                prop_assert_eq!(&g, &restored);
            }

            #[test]
            fn inlinks_are_sorted_unique_and_bounded(g in arb_graph()) {
                for e in g.entity_ids() {
                    let l = g.inlinks(e);
                    prop_assert!(l.windows(2).all(|w| w[0] < w[1]));
                    prop_assert!(l.len() as u64 <= g.total_pages());
                }
            }
        }
    }

    #[test]
    fn snapshot_rejects_bad_magic() {
        let err = LinkGraph::read_snapshot_from(&mut Cursor::new(b"nope".to_vec())).unwrap_err();
        assert!(matches!(err, Error::Snapshot(_)));
    }

    #[test]
    fn snapshot_rejects_truncation() {
        let g = build_graph([(e(1), e(10))], [], None).unwrap();
        let mut buf = Vec::new();
        g.write_snapshot_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        let err = LinkGraph::read_snapshot_from(&mut Cursor::new(&buf)).unwrap_err();
        assert!(matches!(err, Error::Snapshot(_)));
    }
}
