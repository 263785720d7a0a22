use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::platform::{BandwidthEntry, BandwidthMatrix, PlatformDescriptor, PlatformRegistry};
use super::record::{ArtifactKind, ArtifactRecord, Bucket, NewArtifact};
use super::replication::{count_in_window, AccessRecord, ReplicaRecord, ReplicationChanges, ReplicationPolicy};
use super::selection::{select, MetadataSimilarity, ModelQuery, SelectionStrategy};
use super::versioning::{classify, ChangeClass, ChangeSet};
use super::CatalogError;
use crate::model::{ArtifactResolver, Gid, PortType};
use crate::provenance::{OperatorTrace, ProvenanceEvent, ProvenanceLink, RunRecord, TrainingTrace};

/// One persisted record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Artifact(ArtifactRecord),
    Platform(PlatformDescriptor),
    Bandwidth(BandwidthEntry),
    Run(RunRecord),
    OperatorTrace(OperatorTrace),
    TrainingTrace(TrainingTrace),
    Link(ProvenanceLink),
    Event(ProvenanceEvent),
    Access(AccessRecord),
    Replica(ReplicaRecord),
    Retired { gid: Gid },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RecordKey {
    Artifact { gid: Gid },
    Replica { dataset: Gid, platform: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum LogLine {
    Put { record: Record },
    Delete { record: RecordKey },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Memory,
    Writer,
    Reader,
}

/// GID-indexed artifact registry with platform, provenance and replica state.
///
/// A file-backed catalog holds an OS lock for its lifetime: exclusive for a
/// writer, shared for a reader.
#[derive(Debug)]
pub struct Catalog {
    path: Option<PathBuf>,
    file: Option<File>,
    mode: Mode,
    artifacts: BTreeMap<Gid, ArtifactRecord>,
    retired: BTreeSet<Gid>,
    platforms: BTreeMap<String, PlatformDescriptor>,
    bandwidth: BandwidthMatrix,
    runs: BTreeMap<Gid, RunRecord>,
    traces: Vec<OperatorTrace>,
    training: Vec<TrainingTrace>,
    links: BTreeMap<Gid, ProvenanceLink>,
    events: Vec<ProvenanceEvent>,
    accesses: Vec<AccessRecord>,
    replicas: BTreeMap<(Gid, String), ReplicaRecord>,
    policy: ReplicationPolicy,
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::in_memory()
    }
}

impl Catalog {
    pub fn in_memory() -> Self {
        Catalog {
            path: None,
            file: None,
            mode: Mode::Memory,
            artifacts: BTreeMap::new(),
            retired: BTreeSet::new(),
            platforms: BTreeMap::new(),
            bandwidth: BandwidthMatrix::new(),
            runs: BTreeMap::new(),
            traces: Vec::new(),
            training: Vec::new(),
            links: BTreeMap::new(),
            events: Vec::new(),
            accesses: Vec::new(),
            replicas: BTreeMap::new(),
            policy: ReplicationPolicy::default(),
        }
    }

    /// Opens (creating if needed) a catalog file for writing. Blocks while
    /// another process holds the file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| io_err(&path, e))?;
        }
        let file = OpenOptions::new().create(true).read(true).append(true).open(&path).map_err(|e| io_err(&path, e))?;
        file.lock().map_err(|e| io_err(&path, e))?;
        let mut cat = Catalog::in_memory();
        cat.load(&file, &path)?;
        cat.path = Some(path);
        cat.file = Some(file);
        cat.mode = Mode::Writer;
        Ok(cat)
    }

    /// Opens an existing catalog under a shared lock. Mutations fail with `ReadOnly`.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| io_err(&path, e))?;
        file.lock_shared().map_err(|e| io_err(&path, e))?;
        let mut cat = Catalog::in_memory();
        cat.load(&file, &path)?;
        cat.path = Some(path);
        cat.file = Some(file);
        cat.mode = Mode::Reader;
        Ok(cat)
    }

    fn load(&mut self, file: &File, path: &Path) -> Result<(), CatalogError> {
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LogLine =
                serde_json::from_str(&line).map_err(|e| CatalogError::Corrupt { line: i + 1, message: e.to_string() })?;
            self.apply(entry);
        }
        Ok(())
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn replication_policy(&self) -> ReplicationPolicy {
        self.policy
    }

    pub fn set_replication_policy(&mut self, policy: ReplicationPolicy) {
        self.policy = policy;
    }

    fn apply(&mut self, entry: LogLine) {
        match entry {
            LogLine::Put { record } => match record {
                Record::Artifact(a) => {
                    self.artifacts.insert(a.gid, a);
                }
                Record::Platform(p) => {
                    self.platforms.insert(p.platform_id.clone(), p);
                }
                Record::Bandwidth(b) => self.bandwidth.set(&b.from, &b.to, b.mbps),
                Record::Run(r) => {
                    self.runs.insert(r.run_id, r);
                }
                Record::OperatorTrace(t) => self.traces.push(t),
                Record::TrainingTrace(t) => self.training.push(t),
                Record::Link(l) => {
                    self.links.insert(l.produced, l);
                }
                Record::Event(e) => self.events.push(e),
                Record::Access(a) => self.accesses.push(a),
                Record::Replica(r) => {
                    self.replicas.insert((r.dataset, r.platform.clone()), r);
                }
                Record::Retired { gid } => {
                    self.retired.insert(gid);
                }
            },
            LogLine::Delete { record } => match record {
                RecordKey::Artifact { gid } => {
                    self.artifacts.remove(&gid);
                }
                RecordKey::Replica { dataset, platform } => {
                    self.replicas.remove(&(dataset, platform));
                }
            },
        }
    }

    /// Applies entries in memory and appends them durably as one batch.
    fn commit(&mut self, entries: Vec<LogLine>) -> Result<(), CatalogError> {
        match self.mode {
            Mode::Reader => return Err(CatalogError::ReadOnly),
            Mode::Writer => {
                let mut buf = Vec::new();
                for e in &entries {
                    serde_json::to_writer(&mut buf, e).expect("catalog records serialize");
                    buf.push(b'\n');
                }
                let path = self.path.clone().unwrap_or_default();
                let file = self.file.as_mut().expect("writer has a file");
                file.write_all(&buf).map_err(|e| io_err(&path, e))?;
                file.flush().map_err(|e| io_err(&path, e))?;
                file.sync_data().map_err(|e| io_err(&path, e))?;
            }
            Mode::Memory => {}
        }
        for e in entries {
            self.apply(e);
        }
        Ok(())
    }

    pub(crate) fn put_all(&mut self, records: Vec<Record>) -> Result<(), CatalogError> {
        self.commit(records.into_iter().map(|record| LogLine::Put { record }).collect())
    }

    fn fresh_gid(&self) -> Gid {
        loop {
            let g = Gid::random();
            if !self.artifacts.contains_key(&g) && !self.retired.contains(&g) && !self.runs.contains_key(&g) {
                return g;
            }
        }
    }

    /// Gid for a run or other non-artifact entity, unique within the catalog.
    pub fn new_gid(&self) -> Gid {
        self.fresh_gid()
    }

    fn check_platform(&self, id: &str) -> Result<(), CatalogError> {
        if self.platforms.contains_key(id) {
            Ok(())
        } else {
            Err(CatalogError::UnknownPlatform(id.to_string()))
        }
    }

    fn validate_new(&self, new: &NewArtifact) -> Result<u32, CatalogError> {
        let invalid = |f: &str| Err(CatalogError::InvalidMetadata(f.to_string()));
        if new.name.trim().is_empty() {
            return invalid("name");
        }
        match new.kind {
            ArtifactKind::Dataset => {
                let Some(ds) = &new.dataset else { return invalid("schema") };
                if ds.schema.is_empty() {
                    return invalid("schema");
                }
                if ds.location.path.is_empty() {
                    return invalid("location");
                }
                self.check_platform(&ds.location.platform)?;
            }
            ArtifactKind::Model => {
                for field in ["task_type", "learning_scope"] {
                    match new.metadata.get(field).and_then(|v| v.as_str()) {
                        Some(s) if !s.is_empty() => {}
                        _ => return invalid(field),
                    }
                }
                if let Some(v) = new.metadata.get("training_dataset") {
                    let ok = v
                        .as_str()
                        .and_then(|s| s.parse::<Gid>().ok())
                        .and_then(|g| self.artifacts.get(&g))
                        .is_some_and(|a| a.kind == ArtifactKind::Dataset);
                    if !ok {
                        return invalid("training_dataset");
                    }
                }
                if let Some(loc) = &new.location {
                    self.check_platform(&loc.platform)?;
                }
            }
            ArtifactKind::Function => {
                if new.domain.is_some() {
                    return invalid("domain");
                }
            }
            ArtifactKind::Dataflow => {
                if new.dataflow.is_none() {
                    return invalid("dataflow");
                }
            }
        }
        match new.version_of {
            None => Ok(1),
            Some(parent) => {
                let p = self.artifacts.get(&parent).ok_or(CatalogError::UnknownGid(parent))?;
                if p.kind != new.kind {
                    return invalid("version_of");
                }
                Ok(p.version + 1)
            }
        }
    }

    /// Validates and durably registers an artifact, returning its fresh gid.
    pub fn register_artifact(&mut self, new: NewArtifact) -> Result<Gid, CatalogError> {
        Ok(self.register_artifacts(vec![new])?[0])
    }

    /// Registers several artifacts with a single durable append.
    pub fn register_artifacts(&mut self, news: Vec<NewArtifact>) -> Result<Vec<Gid>, CatalogError> {
        let now = Utc::now();
        let mut records = Vec::with_capacity(news.len() * 2);
        let mut gids = Vec::with_capacity(news.len());
        let mut taken = BTreeSet::new();
        for new in news {
            let version = self.validate_new(&new)?;
            let gid = loop {
                let g = self.fresh_gid();
                if taken.insert(g) {
                    break g;
                }
            };
            let source = match new.kind {
                ArtifactKind::Function | ArtifactKind::Dataflow => "definition",
                _ => "import",
            };
            records.push(Record::Artifact(ArtifactRecord {
                gid,
                kind: new.kind,
                domain: new.domain,
                name: new.name,
                version,
                version_of: new.version_of,
                created_at: now,
                metadata: new.metadata,
                dataset: new.dataset,
                location: new.location,
                dataflow: new.dataflow,
                function: new.function,
            }));
            records.push(Record::Event(ProvenanceEvent::Registered { gid, source: source.into(), at: now }));
            gids.push(gid);
        }
        self.put_all(records)?;
        Ok(gids)
    }

    /// Records produced by execution (outputs with a `produced` source tag).
    pub(crate) fn register_produced(&mut self, new: NewArtifact) -> Result<Gid, CatalogError> {
        let version = self.validate_new(&new)?;
        let gid = self.fresh_gid();
        let now = Utc::now();
        self.put_all(vec![
            Record::Artifact(ArtifactRecord {
                gid,
                kind: new.kind,
                domain: new.domain,
                name: new.name,
                version,
                version_of: new.version_of,
                created_at: now,
                metadata: new.metadata,
                dataset: new.dataset,
                location: new.location,
                dataflow: new.dataflow,
                function: new.function,
            }),
            Record::Event(ProvenanceEvent::Registered { gid, source: "execution".into(), at: now }),
        ])?;
        Ok(gid)
    }

    /// Removes an artifact. Its gid is retired and never reissued.
    pub fn delete_artifact(&mut self, gid: Gid) -> Result<(), CatalogError> {
        if !self.artifacts.contains_key(&gid) {
            return Err(CatalogError::UnknownGid(gid));
        }
        self.commit(vec![
            LogLine::Put { record: Record::Retired { gid } },
            LogLine::Delete { record: RecordKey::Artifact { gid } },
        ])
    }

    pub fn artifact(&self, gid: Gid) -> Option<&ArtifactRecord> {
        self.artifacts.get(&gid)
    }

    pub fn require(&self, gid: Gid) -> Result<&ArtifactRecord, CatalogError> {
        self.artifacts.get(&gid).ok_or(CatalogError::UnknownGid(gid))
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &ArtifactRecord> {
        self.artifacts.values()
    }

    pub fn is_retired(&self, gid: Gid) -> bool {
        self.retired.contains(&gid)
    }

    /// Function artifact registered under `alias`, if any (newest version wins).
    pub fn function_by_alias(&self, alias: &str) -> Option<&ArtifactRecord> {
        self.artifacts
            .values()
            .filter(|a| a.kind == ArtifactKind::Function && a.name == alias)
            .max_by_key(|a| (a.version, a.created_at))
    }

    /// Follows `version_of` links from `gid` back to the root (inclusive).
    pub fn version_chain(&self, gid: Gid) -> Vec<Gid> {
        let mut chain = Vec::new();
        let mut cur = Some(gid);
        while let Some(g) = cur {
            if chain.contains(&g) || chain.len() > self.artifacts.len() {
                break;
            }
            chain.push(g);
            cur = self.artifacts.get(&g).and_then(|a| a.version_of);
        }
        chain
    }

    pub fn classify_change(&self, model: Gid, change: &ChangeSet) -> Result<ChangeClass, CatalogError> {
        let rec = self.require(model)?;
        if rec.kind != ArtifactKind::Model {
            return Err(CatalogError::NotAModel(model));
        }
        classify(change).ok_or(CatalogError::EmptyChangeSet)
    }

    /// Moves a dataset one bucket forward.
    pub fn promote_dataset(&mut self, gid: Gid, to: Bucket) -> Result<ArtifactRecord, CatalogError> {
        let rec = self.require(gid)?;
        let Some(ds) = rec.dataset.as_ref().filter(|_| rec.kind == ArtifactKind::Dataset) else {
            return Err(CatalogError::NotADataset(gid));
        };
        let from = ds.bucket;
        if from.next() != Some(to) {
            return Err(CatalogError::IllegalTransition { from, to });
        }
        let mut updated = rec.clone();
        updated.dataset.as_mut().unwrap().bucket = to;
        self.put_all(vec![
            Record::Artifact(updated.clone()),
            Record::Event(ProvenanceEvent::Promoted { gid, from, to, at: Utc::now() }),
        ])?;
        Ok(updated)
    }

    pub fn select_models(&self, query: &ModelQuery, k: usize) -> Vec<(Gid, f64)> {
        self.select_models_with(query, k, &MetadataSimilarity::default())
    }

    pub fn select_models_with(&self, query: &ModelQuery, k: usize, strategy: &dyn SelectionStrategy) -> Vec<(Gid, f64)> {
        select(self, query, k, strategy)
    }

    pub fn register_platform(&mut self, descriptor: PlatformDescriptor) -> Result<String, CatalogError> {
        if descriptor.platform_id.trim().is_empty() {
            return Err(CatalogError::InvalidMetadata("platform_id".into()));
        }
        if self.platforms.contains_key(&descriptor.platform_id) {
            return Err(CatalogError::DuplicateId(descriptor.platform_id));
        }
        if !(descriptor.relative_speed > 0.0) || !descriptor.relative_speed.is_finite() {
            return Err(CatalogError::InvalidMetadata("relative_speed".into()));
        }
        let id = descriptor.platform_id.clone();
        self.put_all(vec![Record::Platform(descriptor)])?;
        Ok(id)
    }

    pub fn platform(&self, id: &str) -> Option<&PlatformDescriptor> {
        self.platforms.get(id)
    }

    pub fn platforms(&self) -> impl Iterator<Item = &PlatformDescriptor> {
        self.platforms.values()
    }

    pub fn set_bandwidth(&mut self, entries: &[BandwidthEntry]) -> Result<(), CatalogError> {
        for e in entries {
            self.check_platform(&e.from)?;
            self.check_platform(&e.to)?;
            if !(e.mbps > 0.0) || !e.mbps.is_finite() {
                return Err(CatalogError::InvalidBandwidth { from: e.from.clone(), to: e.to.clone() });
            }
        }
        self.put_all(entries.iter().cloned().map(Record::Bandwidth).collect())
    }

    pub fn bandwidth(&self) -> &BandwidthMatrix {
        &self.bandwidth
    }

    /// Platforms and bandwidth, once every ordered pair has a bandwidth entry.
    pub fn platform_registry(&self) -> Result<PlatformRegistry, CatalogError> {
        let missing = self.bandwidth.missing_pairs(self.platforms.keys().map(String::as_str));
        if !missing.is_empty() {
            return Err(CatalogError::IncompleteBandwidthMatrix(missing));
        }
        Ok(PlatformRegistry { platforms: self.platforms.values().cloned().collect(), bandwidth: self.bandwidth.clone() })
    }

    pub fn runs(&self) -> impl Iterator<Item = &RunRecord> {
        self.runs.values()
    }

    pub fn run(&self, run_id: Gid) -> Option<&RunRecord> {
        self.runs.get(&run_id)
    }

    pub fn operator_traces(&self) -> &[OperatorTrace] {
        &self.traces
    }

    pub fn training_traces(&self) -> &[TrainingTrace] {
        &self.training
    }

    pub fn links(&self) -> impl Iterator<Item = &ProvenanceLink> {
        self.links.values()
    }

    pub fn link_for(&self, produced: Gid) -> Option<&ProvenanceLink> {
        self.links.get(&produced)
    }

    pub fn events(&self) -> &[ProvenanceEvent] {
        &self.events
    }

    pub fn replicas(&self) -> impl Iterator<Item = &ReplicaRecord> {
        self.replicas.values()
    }

    pub fn has_replica(&self, dataset: Gid, platform: &str) -> bool {
        self.replicas.contains_key(&(dataset, platform.to_string()))
    }

    /// Platforms holding `dataset`: its home location plus replicas.
    pub fn dataset_sites(&self, dataset: Gid) -> Vec<String> {
        let mut sites: BTreeSet<String> = self
            .artifacts
            .get(&dataset)
            .and_then(|a| a.dataset.as_ref().map(|d| d.location.platform.clone()).or_else(|| a.location.as_ref().map(|l| l.platform.clone())))
            .into_iter()
            .collect();
        sites.extend(self.replicas.keys().filter(|(d, _)| *d == dataset).map(|(_, p)| p.clone()));
        sites.into_iter().collect()
    }

    /// Logs a read of `dataset` from `platform`. Reads at the home site are not counted.
    pub fn record_access(&mut self, dataset: Gid, platform: &str, at: DateTime<Utc>) -> Result<(), CatalogError> {
        let rec = self.require(dataset)?;
        let home = rec.dataset.as_ref().map(|d| d.location.platform.clone()).ok_or(CatalogError::NotADataset(dataset))?;
        self.check_platform(platform)?;
        if home == platform {
            return Ok(());
        }
        self.put_all(vec![Record::Access(AccessRecord { dataset, platform: platform.to_string(), at })])
    }

    pub fn access_count(&self, dataset: Gid, platform: &str, now: DateTime<Utc>) -> u32 {
        count_in_window(&self.accesses, dataset, platform, now, self.policy.window())
    }

    /// Creates replicas for hot (dataset, platform) pairs and evicts cold ones.
    pub fn apply_replication(&mut self, now: DateTime<Utc>) -> Result<ReplicationChanges, CatalogError> {
        let mut changes = ReplicationChanges::default();
        let mut entries = Vec::new();
        let pairs: BTreeSet<(Gid, String)> = self.accesses.iter().map(|a| (a.dataset, a.platform.clone())).collect();
        for (dataset, platform) in pairs {
            let key = (dataset, platform.clone());
            if self.replicas.contains_key(&key) || !self.artifacts.contains_key(&dataset) {
                continue;
            }
            if self.access_count(dataset, &platform, now) > self.policy.threshold {
                let root = self.platforms.get(&platform).map(|p| p.storage_root.clone()).unwrap_or_default();
                let replica = ReplicaRecord {
                    dataset,
                    platform: platform.clone(),
                    path: format!("{}/replicas/{dataset}.csv", root.trim_end_matches('/')),
                    created_at: now,
                };
                changes.created.push(replica.clone());
                entries.push(LogLine::Put { record: Record::Replica(replica) });
                entries.push(LogLine::Put {
                    record: Record::Event(ProvenanceEvent::Replicated { gid: dataset, platform, at: now }),
                });
            }
        }
        for (dataset, platform) in self.replicas.keys() {
            if self.access_count(*dataset, platform, now) == 0 {
                changes.evicted.push((*dataset, platform.clone()));
                entries.push(LogLine::Delete { record: RecordKey::Replica { dataset: *dataset, platform: platform.clone() } });
                entries.push(LogLine::Put {
                    record: Record::Event(ProvenanceEvent::ReplicaEvicted { gid: *dataset, platform: platform.clone(), at: now }),
                });
            }
        }
        if !entries.is_empty() {
            self.commit(entries)?;
        }
        Ok(changes)
    }

    /// Current state as put records in canonical order.
    pub fn snapshot(&self) -> Vec<Record> {
        let mut out = Vec::new();
        out.extend(self.platforms.values().cloned().map(Record::Platform));
        out.extend(self.bandwidth.entries().into_iter().map(Record::Bandwidth));
        out.extend(self.retired.iter().map(|g| Record::Retired { gid: *g }));
        out.extend(self.artifacts.values().cloned().map(Record::Artifact));
        out.extend(self.events.iter().cloned().map(Record::Event));
        out.extend(self.runs.values().cloned().map(Record::Run));
        out.extend(self.traces.iter().cloned().map(Record::OperatorTrace));
        out.extend(self.training.iter().cloned().map(Record::TrainingTrace));
        out.extend(self.links.values().cloned().map(Record::Link));
        out.extend(self.accesses.iter().cloned().map(Record::Access));
        out.extend(self.replicas.values().cloned().map(Record::Replica));
        out
    }

    /// Canonical text rendering of the current state, one JSON record per line.
    pub fn dump_normalized(&self) -> String {
        let mut s = String::new();
        for r in self.snapshot() {
            s.push_str(&serde_json::to_string(&r).expect("catalog records serialize"));
            s.push('\n');
        }
        s
    }

    /// Rewrites the log as a snapshot of live records.
    pub fn compact(&mut self) -> Result<(), CatalogError> {
        match self.mode {
            Mode::Reader => return Err(CatalogError::ReadOnly),
            Mode::Memory => return Ok(()),
            Mode::Writer => {}
        }
        let path = self.path.clone().expect("writer has a path");
        let tmp = path.with_extension("compact.tmp");
        let mut out = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        for record in self.snapshot() {
            serde_json::to_writer(&mut out, &LogLine::Put { record }).expect("catalog records serialize");
            out.write_all(b"\n").map_err(|e| io_err(&tmp, e))?;
        }
        out.sync_all().map_err(|e| io_err(&tmp, e))?;
        drop(out);
        fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))?;
        let file = OpenOptions::new().read(true).append(true).open(&path).map_err(|e| io_err(&path, e))?;
        file.lock().map_err(|e| io_err(&path, e))?;
        self.file = Some(file);
        Ok(())
    }
}

impl ArtifactResolver for Catalog {
    fn resolve_input(&self, gid: Gid) -> Option<PortType> {
        self.artifacts.get(&gid).and_then(ArtifactRecord::port_type)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CatalogError {
    CatalogError::Io(format!("{}: {e}", path.display()))
}
