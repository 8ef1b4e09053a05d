//! Demonstration sets: loading, validation, dedup, mixing, splitting and
//! serialization with provenance sidecars.
//!
//! A dataset on disk is a UTF-8 JSON array of objects with exactly the keys
//! `instruction`, `input` and `output`. Provenance and bookkeeping live in a
//! sibling `<stem>.manifest.json`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::demogen::{DemoKind, DemoProvenance, Demonstration, TranslationDirection};
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::sampling::{derive_seed, sample_without_replacement, shuffle};

pub const TOOL_VERSION: &str = concat!("crossalpaca ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub instruction_following: usize,
    pub translation_following: usize,
    pub en_x: usize,
    pub x_en: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub unknown: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl KindCounts {
    pub fn from_provenance<'a>(provenance: impl IntoIterator<Item = &'a DemoProvenance>) -> Self {
        let mut c = KindCounts::default();
        for p in provenance {
            match p.kind {
                DemoKind::InstructionFollowing => c.instruction_following += 1,
                DemoKind::TranslationFollowing => c.translation_following += 1,
                DemoKind::Unknown => c.unknown += 1,
            }
            match p.direction {
                Some(TranslationDirection::EnToX) => c.en_x += 1,
                Some(TranslationDirection::XToEn) => c.x_en += 1,
                None => {}
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.instruction_following + self.translation_following + self.unknown
    }

    pub fn direction(&self, direction: TranslationDirection) -> usize {
        match direction {
            TranslationDirection::EnToX => self.en_x,
            TranslationDirection::XToEn => self.x_en,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub operation: String,
    pub seed: u64,
}

impl SeedRecord {
    pub fn new(operation: impl Into<String>, seed: u64) -> Self {
        SeedRecord {
            operation: operation.into(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub language: LanguageCode,
    pub counts: KindCounts,
    pub seeds: Vec<SeedRecord>,
    pub sources: Vec<String>,
    pub created_with: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default)]
    pub lineage: Vec<String>,
    #[serde(default = "yes")]
    pub provenance_known: bool,
}

fn yes() -> bool {
    true
}

impl DatasetManifest {
    pub fn new(language: LanguageCode) -> Self {
        DatasetManifest {
            language,
            counts: KindCounts::default(),
            seeds: Vec::new(),
            sources: Vec::new(),
            created_with: TOOL_VERSION.to_string(),
            params: BTreeMap::new(),
            lineage: Vec::new(),
            provenance_known: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemonstrationSet {
    pub demos: Vec<Demonstration>,
    pub provenance: Vec<DemoProvenance>,
    pub manifest: DatasetManifest,
}

impl DemonstrationSet {
    /// Assemble a set. Counts are recomputed from provenance and every
    /// provenance source is registered in the manifest.
    pub fn new(
        demos: Vec<Demonstration>,
        provenance: Vec<DemoProvenance>,
        mut manifest: DatasetManifest,
    ) -> Result<Self> {
        if demos.len() != provenance.len() {
            return Err(Error::Integrity(format!(
                "{} demos but {} provenance entries",
                demos.len(),
                provenance.len()
            )));
        }
        if let Some(i) = provenance.iter().position(|p| !p.is_valid()) {
            return Err(Error::Validation {
                index: i,
                reason: "direction must be present exactly for translation demonstrations".into(),
            });
        }
        for p in &provenance {
            if !p.source_uri.is_empty() && !manifest.sources.contains(&p.source_uri) {
                manifest.sources.push(p.source_uri.clone());
            }
        }
        manifest.counts = KindCounts::from_provenance(&provenance);
        Ok(DemonstrationSet {
            demos,
            provenance,
            manifest,
        })
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    /// Manifest counts agree with provenance.
    pub fn check_coherence(&self) -> Result<()> {
        if self.demos.len() != self.provenance.len() {
            return Err(Error::Integrity("demo/provenance length mismatch".into()));
        }
        let recomputed = KindCounts::from_provenance(&self.provenance);
        if recomputed != self.manifest.counts {
            return Err(Error::Integrity(format!(
                "manifest counts {:?} disagree with provenance {:?}",
                self.manifest.counts, recomputed
            )));
        }
        if recomputed.total() != self.demos.len() {
            return Err(Error::Integrity("kind counts do not sum to total".into()));
        }
        if recomputed.translation_following != recomputed.en_x + recomputed.x_en {
            return Err(Error::Integrity(
                "direction counts do not sum to translation count".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = serde_json::to_vec_pretty(&self.demos).map_err(|e| Error::json(&e))?;
        buf.push(b'\n');
        Ok(buf)
    }

    pub fn manifest_json_bytes(&self) -> Result<Vec<u8>> {
        let sidecar = Sidecar {
            manifest: self.manifest.clone(),
            provenance: self
                .provenance
                .iter()
                .map(|p| ProvenanceRecord::from_provenance(p, &self.manifest.sources))
                .collect(),
        };
        let mut buf = serde_json::to_vec_pretty(&sidecar).map_err(|e| Error::json(&e))?;
        buf.push(b'\n');
        Ok(buf)
    }

    fn retain_indices(&self, indices: &[usize]) -> (Vec<Demonstration>, Vec<DemoProvenance>) {
        indices
            .iter()
            .map(|&i| (self.demos[i].clone(), self.provenance[i].clone()))
            .unzip()
    }
}

/// Compact per-demo provenance stored in the sidecar.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProvenanceRecord {
    kind: DemoKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<TranslationDirection>,
    language: LanguageCode,
    /// Index into the manifest's `sources`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
}

impl ProvenanceRecord {
    fn from_provenance(p: &DemoProvenance, sources: &[String]) -> Self {
        ProvenanceRecord {
            kind: p.kind,
            direction: p.direction,
            language: p.language.clone(),
            source: sources.iter().position(|s| s == &p.source_uri),
            line: p.origin_line,
        }
    }

    fn into_provenance(self, sources: &[String]) -> Result<DemoProvenance> {
        let source_uri = match self.source {
            Some(i) => sources.get(i).cloned().ok_or_else(|| {
                Error::Integrity(format!("provenance source index {i} out of range"))
            })?,
            None => String::new(),
        };
        Ok(DemoProvenance {
            kind: self.kind,
            direction: self.direction,
            language: self.language,
            source_uri,
            origin_line: self.line,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    #[serde(flatten)]
    manifest: DatasetManifest,
    provenance: Vec<ProvenanceRecord>,
}

/// Sidecar manifest path: `de-alpaca.json` → `de-alpaca.manifest.json`.
pub fn manifest_path(dataset: &Path) -> PathBuf {
    dataset.with_extension("manifest.json")
}

fn parse_demo_array(bytes: &[u8]) -> Result<Vec<Demonstration>> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| Error::json(&e))?;
    let records = value.as_array().ok_or_else(|| Error::Structure {
        path: "$".into(),
        message: "expected a JSON array of demonstrations".into(),
    })?;
    records
        .iter()
        .enumerate()
        .map(|(index, record)| parse_demo_record(index, record))
        .collect()
}

fn parse_demo_record(index: usize, record: &Value) -> Result<Demonstration> {
    let obj = record.as_object().ok_or_else(|| Error::Validation {
        index,
        reason: "record is not an object".into(),
    })?;
    let field = |name: &str, required: bool| -> Result<String> {
        match obj.get(name) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(other) => Err(Error::Validation {
                index,
                reason: format!(
                    "field {name:?} is not a string (found {})",
                    json_type(other)
                ),
            }),
            None if required => Err(Error::Validation {
                index,
                reason: format!("missing field {name:?}"),
            }),
            None => Ok(String::new()),
        }
    };
    let instruction = field("instruction", true)?;
    let input = field("input", false)?;
    let output = field("output", true)?;
    Demonstration::new(&instruction, &input, &output).map_err(|e| Error::Validation {
        index,
        reason: match e {
            Error::InvalidArgument(m) => m,
            other => other.to_string(),
        },
    })
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Load an Alpaca-style instruction file. A missing `input` reads as empty.
pub fn load_instruction_set(path: &Path, language: LanguageCode) -> Result<DemonstrationSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let uri = path.display().to_string();
    instruction_set_from_bytes(&bytes, language, &uri)
}

pub fn instruction_set_from_bytes(
    bytes: &[u8],
    language: LanguageCode,
    uri: &str,
) -> Result<DemonstrationSet> {
    let demos = parse_demo_array(bytes)?;
    let provenance = vec![DemoProvenance::instruction(language.clone(), uri); demos.len()];
    let mut manifest = DatasetManifest::new(language);
    manifest.sources.push(uri.to_string());
    DemonstrationSet::new(demos, provenance, manifest)
}

/// Drop exact (instruction, input, output) duplicates, keeping the first.
pub fn dedup_set(set: &DemonstrationSet) -> (DemonstrationSet, usize) {
    let mut seen: HashSet<&Demonstration> = HashSet::with_capacity(set.len());
    let keep: Vec<usize> = (0..set.len())
        .filter(|&i| seen.insert(&set.demos[i]))
        .collect();
    let removed = set.len() - keep.len();
    let (demos, provenance) = set.retain_indices(&keep);
    let mut manifest = set.manifest.clone();
    manifest.lineage.push(format!("dedup(removed={removed})"));
    let out = DemonstrationSet::new(demos, provenance, manifest).expect("subset of a valid set");
    (out, removed)
}

/// Concatenate sets and apply a seeded uniform shuffle.
///
/// Non-English languages must agree; English sets may be mixed into any
/// language.
pub fn mix_sets(sets: &[DemonstrationSet], shuffle_seed: u64) -> Result<DemonstrationSet> {
    if sets.is_empty() {
        return Err(Error::InvalidArgument(
            "mix_sets needs at least one set".into(),
        ));
    }
    let mut language: Option<LanguageCode> = None;
    for s in sets {
        let l = &s.manifest.language;
        if l.is_english() {
            continue;
        }
        match &language {
            Some(existing) if existing != l => {
                return Err(Error::InvalidArgument(format!(
                    "cannot mix {existing} and {l} sets"
                )))
            }
            _ => language = Some(l.clone()),
        }
    }
    let language = language.unwrap_or_else(LanguageCode::english);

    let total: usize = sets.iter().map(DemonstrationSet::len).sum();
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(total);
    for (si, s) in sets.iter().enumerate() {
        order.extend((0..s.len()).map(|i| (si, i)));
    }
    shuffle(&mut order, shuffle_seed);

    let (demos, provenance) = order
        .iter()
        .map(|&(si, i)| (sets[si].demos[i].clone(), sets[si].provenance[i].clone()))
        .unzip();

    let mut manifest = DatasetManifest::new(language);
    for s in sets {
        manifest.seeds.extend(s.manifest.seeds.iter().cloned());
        for src in &s.manifest.sources {
            if !manifest.sources.contains(src) {
                manifest.sources.push(src.clone());
            }
        }
        for (k, v) in &s.manifest.params {
            manifest
                .params
                .entry(k.clone())
                .or_insert_with(|| v.clone());
        }
        manifest.lineage.extend(s.manifest.lineage.iter().cloned());
        manifest.provenance_known &= s.manifest.provenance_known;
    }
    manifest
        .seeds
        .push(SeedRecord::new("mix_sets:shuffle", shuffle_seed));
    manifest.params.insert("mixing".into(), "shuffled".into());
    manifest.lineage.push(format!(
        "mix_sets(sets={}, shuffle_seed={shuffle_seed})",
        sets.len()
    ));
    DemonstrationSet::new(demos, provenance, manifest)
}

/// Draw `n` demonstrations, keeping input order.
///
/// Stratified mode draws `n / 2` from each translation direction using
/// seeds derived per direction, and requires a translation-only set.
pub fn subsample_set(
    set: &DemonstrationSet,
    n: usize,
    seed: u64,
    stratify_by_direction: bool,
) -> Result<DemonstrationSet> {
    if n > set.len() {
        return Err(Error::InsufficientItems {
            what: "subsample".into(),
            required: n,
            available: set.len(),
        });
    }
    let mut keep: Vec<usize> = if stratify_by_direction {
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "stratified subsample size must be even, got {n}"
            )));
        }
        if set.provenance.iter().any(|p| p.direction.is_none()) {
            return Err(Error::InvalidArgument(
                "stratified subsampling requires a translation-only set".into(),
            ));
        }
        let mut keep = Vec::with_capacity(n);
        for direction in TranslationDirection::ALL {
            let stratum: Vec<usize> = (0..set.len())
                .filter(|&i| set.provenance[i].direction == Some(direction))
                .collect();
            if stratum.len() < n / 2 {
                return Err(Error::InsufficientItems {
                    what: format!("subsample stratum {direction}"),
                    required: n / 2,
                    available: stratum.len(),
                });
            }
            let picks = sample_without_replacement(
                stratum.len(),
                n / 2,
                derive_seed(seed, direction.tag()),
            )?;
            keep.extend(picks.into_iter().map(|j| stratum[j]));
        }
        keep
    } else {
        sample_without_replacement(set.len(), n, seed)?
    };
    keep.sort_unstable();

    let (demos, provenance) = set.retain_indices(&keep);
    let mut manifest = set.manifest.clone();
    manifest.seeds.push(SeedRecord::new("subsample", seed));
    manifest.lineage.push(format!(
        "subsample(n={n}, seed={seed}, stratified={stratify_by_direction})"
    ));
    DemonstrationSet::new(demos, provenance, manifest)
}

/// Keep instruction demonstrations and translation demonstrations of one
/// direction.
pub fn filter_direction(
    set: &DemonstrationSet,
    direction: TranslationDirection,
) -> DemonstrationSet {
    let keep: Vec<usize> = (0..set.len())
        .filter(|&i| {
            let p = &set.provenance[i];
            p.kind != DemoKind::TranslationFollowing || p.direction == Some(direction)
        })
        .collect();
    let (demos, provenance) = set.retain_indices(&keep);
    let mut manifest = set.manifest.clone();
    let entry = format!("filter_direction({direction})");
    if manifest.lineage.last() != Some(&entry) {
        manifest.lineage.push(entry);
    }
    DemonstrationSet::new(demos, provenance, manifest).expect("subset of a valid set")
}

/// Write the dataset array and its manifest sidecar.
pub fn write_set(set: &DemonstrationSet, path: &Path) -> Result<()> {
    set.check_coherence()?;
    write_atomic(path, &set.to_json_bytes()?)?;
    write_atomic(&manifest_path(path), &set.manifest_json_bytes()?)
}

/// JSON-lines export of the demonstrations (no sidecar).
pub fn write_set_jsonl(set: &DemonstrationSet, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for d in &set.demos {
        serde_json::to_writer(&mut buf, d).map_err(|e| Error::json(&e))?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Read a dataset written by [`write_set`].
///
/// Without a sidecar the set loads with unknown provenance; the language
/// then falls back to `fallback_language` (English if `None`).
pub fn read_set(path: &Path) -> Result<DemonstrationSet> {
    read_set_with_fallback(path, None)
}

pub fn read_set_with_fallback(
    path: &Path,
    fallback_language: Option<LanguageCode>,
) -> Result<DemonstrationSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let demos = parse_demo_array(&bytes)?;
    let mpath = manifest_path(path);
    if !mpath.exists() {
        log::warn!(
            "{}: manifest sidecar missing, provenance unknown",
            path.display()
        );
        let language = fallback_language.unwrap_or_else(LanguageCode::english);
        let provenance = vec![DemoProvenance::unknown(language.clone()); demos.len()];
        let mut manifest = DatasetManifest::new(language);
        manifest.provenance_known = false;
        manifest.sources.push(path.display().to_string());
        return DemonstrationSet::new(demos, provenance, manifest);
    }

    let mbytes = fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let sidecar: Sidecar = serde_json::from_slice(&mbytes).map_err(|e| Error::json(&e))?;
    if sidecar.provenance.len() != demos.len() {
        return Err(Error::Integrity(format!(
            "{}: manifest lists {} demos, dataset has {}",
            path.display(),
            sidecar.provenance.len(),
            demos.len()
        )));
    }
    let sources = sidecar.manifest.sources.clone();
    let provenance = sidecar
        .provenance
        .into_iter()
        .map(|r| r.into_provenance(&sources))
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = provenance.iter().position(|p| !p.is_valid()) {
        return Err(Error::Integrity(format!(
            "provenance entry {i} is inconsistent"
        )));
    }
    let set = DemonstrationSet {
        demos,
        provenance,
        manifest: sidecar.manifest,
    };
    set.check_coherence()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn de() -> LanguageCode {
        LanguageCode::new("de").unwrap()
    }

    fn demo(i: usize) -> Demonstration {
        Demonstration::new(&format!("instr {i}"), "", &format!("out {i}")).unwrap()
    }

    fn translation_set(n_per_dir: usize) -> DemonstrationSet {
        let mut demos = Vec::new();
        let mut prov = Vec::new();
        for d in TranslationDirection::ALL {
            for i in 0..n_per_dir {
                demos.push(
                    Demonstration::new(
                        "Translate",
                        &format!("{d} in {i}"),
                        &format!("{d} out {i}"),
                    )
                    .unwrap(),
                );
                prov.push(DemoProvenance {
                    kind: DemoKind::TranslationFollowing,
                    direction: Some(d),
                    language: de(),
                    source_uri: "nc.tsv".into(),
                    origin_line: Some(i + 1),
                });
            }
        }
        DemonstrationSet::new(demos, prov, DatasetManifest::new(de())).unwrap()
    }

    fn instruction_set(n: usize) -> DemonstrationSet {
        let demos: Vec<_> = (0..n).map(demo).collect();
        let prov = vec![DemoProvenance::instruction(de(), "alpaca.json"); n];
        DemonstrationSet::new(demos, prov, DatasetManifest::new(de())).unwrap()
    }

    #[test]
    fn load_variants() {
        let empty = instruction_set_from_bytes(b"[]", de(), "m").unwrap();
        assert!(empty.is_empty());

        let ok =
            instruction_set_from_bytes(br#"[{"instruction":"Say hi","output":"hi"}]"#, de(), "m")
                .unwrap();
        assert_eq!(ok.demos[0].input, "");
        assert_eq!(ok.manifest.counts.instruction_following, 1);

        let err = instruction_set_from_bytes(br#"[{"instruction":"x","input":""}]"#, de(), "m")
            .unwrap_err();
        assert!(matches!(err, Error::Validation { index: 0, .. }), "{err}");

        let err = instruction_set_from_bytes(
            br#"[{"instruction":"x","output":"y"},{"instruction":"  ","output":"y"}]"#,
            de(),
            "m",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { index: 1, .. }));

        let err = instruction_set_from_bytes(
            br#"[{"instruction":"x","input":3,"output":"y"}]"#,
            de(),
            "m",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation { index: 0, .. }));

        let err = instruction_set_from_bytes(b"[\n{\"instruction\": }", de(), "m").unwrap_err();
        assert!(matches!(err, Error::Json { line: 2, .. }), "{err}");
    }

    #[test]
    fn dedup_basics() {
        let set = instruction_set(1);
        let twice = DemonstrationSet::new(
            vec![set.demos[0].clone(), set.demos[0].clone()],
            vec![set.provenance[0].clone(); 2],
            DatasetManifest::new(de()),
        )
        .unwrap();
        let (out, removed) = dedup_set(&twice);
        assert_eq!((out.len(), removed), (1, 1));

        let (out, removed) = dedup_set(&instruction_set(2));
        assert_eq!((out.len(), removed), (2, 0));
    }

    #[test]
    fn mix_counts_and_determinism() {
        let a = instruction_set(52);
        let b = translation_set(10);
        let mixed = mix_sets(&[a.clone(), b.clone()], 7).unwrap();
        assert_eq!(mixed.len(), 72);
        assert_eq!(mixed.manifest.counts.instruction_following, 52);
        assert_eq!(mixed.manifest.counts.translation_following, 20);
        assert_eq!(mixed.manifest.seeds.last().unwrap().seed, 7);
        let again = mix_sets(&[a, b], 7).unwrap();
        assert_eq!(
            mixed.to_json_bytes().unwrap(),
            again.to_json_bytes().unwrap()
        );
        assert!(mix_sets(&[], 1).is_err());
    }

    #[test]
    fn mix_rejects_language_clash() {
        let mut it = instruction_set(2);
        it.manifest.language = LanguageCode::new("it").unwrap();
        assert!(mix_sets(&[instruction_set(2), it], 1).is_err());
        let mut en = instruction_set(2);
        en.manifest.language = LanguageCode::english();
        assert_eq!(
            mix_sets(&[en, instruction_set(2)], 1)
                .unwrap()
                .manifest
                .language,
            de()
        );
    }

    #[test]
    fn stratified_subsample() {
        let set = translation_set(10);
        let sub = subsample_set(&set, 10, 3, true).unwrap();
        assert_eq!(sub.manifest.counts.en_x, 5);
        assert_eq!(sub.manifest.counts.x_en, 5);
        assert!(matches!(
            subsample_set(&set, 22, 3, true).unwrap_err(),
            Error::InsufficientItems { .. }
        ));
        assert!(matches!(
            subsample_set(&set, 20, 3, false).map(|s| s.len()),
            Ok(20)
        ));
        assert!(subsample_set(&set, 5, 3, true).is_err());
        assert!(subsample_set(
            &mix_sets(&[set, instruction_set(3)], 0).unwrap(),
            4,
            3,
            true
        )
        .is_err());
    }

    #[test]
    fn full_subsample_is_identity() {
        let set = translation_set(6);
        let sub = subsample_set(&set, set.len(), 1, true).unwrap();
        assert_eq!(sub.demos, set.demos);
        let sub = subsample_set(&set, set.len(), 1, false).unwrap();
        assert_eq!(sub.demos, set.demos);
    }

    #[test]
    fn direction_filter() {
        let mixed = mix_sets(&[instruction_set(52), translation_set(10)], 1).unwrap();
        let en_x = filter_direction(&mixed, TranslationDirection::EnToX);
        assert_eq!(en_x.len(), 62);
        assert_eq!(en_x.manifest.counts.x_en, 0);
        assert_eq!(en_x.manifest.counts.en_x, 10);
        let plain = instruction_set(4);
        assert_eq!(
            filter_direction(&plain, TranslationDirection::XToEn).demos,
            plain.demos
        );
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("de-mix.json");
        let set = mix_sets(&[instruction_set(2), translation_set(1)], 4).unwrap();
        write_set(&set, &path).unwrap();
        assert!(dir.path().join("de-mix.manifest.json").exists());
        let back = read_set(&path).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn exact_key_contract() {
        let set = instruction_set(1);
        let text = String::from_utf8(set.to_json_bytes().unwrap()).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = v[0].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["input", "instruction", "output"]);
        assert!(text.find("\"instruction\"").unwrap() < text.find("\"input\"").unwrap());
    }

    #[test]
    fn missing_sidecar_loads_unknown() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_set(&translation_set(2), &path).unwrap();
        fs::remove_file(manifest_path(&path)).unwrap();
        let back = read_set(&path).unwrap();
        assert_eq!(back.len(), 4);
        assert!(!back.manifest.provenance_known);
        assert_eq!(back.manifest.counts.unknown, 4);
        back.check_coherence().unwrap();
    }

    #[test]
    fn sidecar_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_set(&translation_set(2), &path).unwrap();
        fs::write(&path, "[]").unwrap();
        assert!(matches!(read_set(&path).unwrap_err(), Error::Integrity(_)));
    }

    #[test]
    fn jsonl_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        write_set_jsonl(&instruction_set(3), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(
            text.starts_with("{\"instruction\":\"instr 0\",\"input\":\"\",\"output\":\"out 0\"}")
        );
    }
}
