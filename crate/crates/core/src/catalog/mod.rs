//! Artifact catalog: datasets, models, functions and dataflows indexed by
//! GID, plus the platform registry, bucket lifecycle, model versioning and
//! selection, and replica bookkeeping. Persisted as an append-only NDJSON log.

mod platform;
mod record;
mod replication;
mod selection;
mod store;
mod versioning;

pub use platform::{BandwidthEntry, BandwidthMatrix, ExecutorKind, PlatformDescriptor, PlatformRegistry};
pub use record::{ArtifactKind, ArtifactRecord, Bucket, DataFormat, DatasetInfo, Location, NewArtifact};
pub use replication::{AccessRecord, ReplicaRecord, ReplicationChanges, ReplicationPolicy};
pub use selection::{jaccard, training_attributes, MetadataSimilarity, ModelQuery, SelectionStrategy};
pub use store::{Catalog, Record, RecordKey};
pub use versioning::{classify, ChangeClass, ChangeSet};

use crate::model::Gid;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("UnknownPlatform: {0}")]
    UnknownPlatform(String),
    #[error("InvalidMetadata: {0}")]
    InvalidMetadata(String),
    #[error("UnknownGid: {0}")]
    UnknownGid(Gid),
    #[error("DuplicateId: {0}")]
    DuplicateId(String),
    #[error("IncompleteBandwidthMatrix: missing {}", fmt_pairs(.0))]
    IncompleteBandwidthMatrix(Vec<(String, String)>),
    #[error("InvalidBandwidth: {from} -> {to} must be a positive finite MB/s value")]
    InvalidBandwidth { from: String, to: String },
    #[error("EmptyChangeSet: at least one flag must be set")]
    EmptyChangeSet,
    #[error("NotAModel: {0}")]
    NotAModel(Gid),
    #[error("NotADataset: {0}")]
    NotADataset(Gid),
    #[error("IllegalTransition: {from} -> {to}")]
    IllegalTransition { from: Bucket, to: Bucket },
    #[error("ReadOnly: catalog opened for reading")]
    ReadOnly,
    #[error("CatalogIo: {0}")]
    Io(String),
    #[error("CorruptCatalog: line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

fn fmt_pairs(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(a, b)| format!("{a}->{b}")).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::model::{PortType, Schema};

    pub(crate) fn platform(id: &str, gpus: u32) -> PlatformDescriptor {
        PlatformDescriptor {
            platform_id: id.into(),
            cpu_cores: 4,
            gpus,
            relative_speed: 1.0,
            storage_root: format!("/tmp/{id}"),
            executor_kind: ExecutorKind::Single,
        }
    }

    fn with_local() -> Catalog {
        let mut c = Catalog::in_memory();
        c.register_platform(platform("local", 0)).unwrap();
        c
    }

    fn radar(bucket: Bucket) -> NewArtifact {
        NewArtifact::dataset("radar", Schema::parse_spec("cell:int64,dbz:float64").unwrap(), bucket, Location::new("local", "radar.csv"))
            .in_domain("Meteorology")
    }

    #[test]
    fn registers_dataset_with_stub() {
        let mut c = with_local();
        let g = c.register_artifact(radar(Bucket::Curated)).unwrap();
        let rec = c.artifact(g).unwrap();
        assert_eq!(rec.version, 1);
        assert_eq!(rec.kind, ArtifactKind::Dataset);
        assert!(matches!(c.events()[0], crate::provenance::ProvenanceEvent::Registered { gid, .. } if gid == g));
        assert_eq!(c.resolve_input_port(g), Some(PortType::table(Schema::parse_spec("cell:int64,dbz:float64").unwrap())));
    }

    impl Catalog {
        fn resolve_input_port(&self, g: Gid) -> Option<PortType> {
            crate::model::ArtifactResolver::resolve_input(self, g)
        }
    }

    #[test]
    fn model_metadata_and_validation() {
        let mut c = with_local();
        let ds = c.register_artifact(radar(Bucket::Curated)).unwrap();
        let m = c
            .register_artifact(
                NewArtifact::model("nowcast", "regression", "spatiotemporal")
                    .in_domain("Meteorology")
                    .with_meta("training_dataset", ds.to_string()),
            )
            .unwrap();
        assert_eq!(c.artifact(m).unwrap().training_dataset(), Some(ds));

        let err = c.register_artifact(NewArtifact::new(ArtifactKind::Model, "x").with_meta("task_type", "r")).unwrap_err();
        assert_eq!(err, CatalogError::InvalidMetadata("learning_scope".into()));
        let bad = NewArtifact::dataset("d", Schema::parse_spec("a:int64").unwrap(), Bucket::Landing, Location::new("mars", "d.csv"));
        assert_eq!(c.register_artifact(bad).unwrap_err(), CatalogError::UnknownPlatform("mars".into()));
        let f = NewArtifact::function(crate::model::FunctionDescriptor::builtin(crate::model::OperatorClass::Cast)).in_domain("x");
        assert_eq!(c.register_artifact(f).unwrap_err(), CatalogError::InvalidMetadata("domain".into()));
        let cross = NewArtifact::model("n2", "regression", "global").version_of(ds);
        assert_eq!(c.register_artifact(cross).unwrap_err(), CatalogError::InvalidMetadata("version_of".into()));
    }

    #[test]
    fn versions_chain() {
        let mut c = with_local();
        let m1 = c.register_artifact(NewArtifact::model("m", "regression", "global")).unwrap();
        let m2 = c.register_artifact(NewArtifact::model("m", "regression", "global").version_of(m1)).unwrap();
        let m3 = c.register_artifact(NewArtifact::model("m", "regression", "global").version_of(m2)).unwrap();
        assert_eq!(c.artifact(m3).unwrap().version, 3);
        assert_eq!(c.version_chain(m3), vec![m3, m2, m1]);
    }

    #[test]
    fn gid_uniqueness_at_scale() {
        let mut c = with_local();
        let news = (0..10_000).map(|i| NewArtifact::function(crate::model::FunctionDescriptor {
            alias: format!("f{i}"),
            ..crate::model::FunctionDescriptor::builtin(crate::model::OperatorClass::Map)
        }));
        let gids = c.register_artifacts(news.collect()).unwrap();
        let distinct: BTreeSet<Gid> = gids.iter().copied().collect();
        assert_eq!(distinct.len(), 10_000);
    }

    #[test]
    fn deleted_gids_are_retired() {
        let mut c = with_local();
        let g = c.register_artifact(radar(Bucket::Landing)).unwrap();
        c.delete_artifact(g).unwrap();
        assert!(c.artifact(g).is_none());
        assert!(c.is_retired(g));
        assert_eq!(c.delete_artifact(g).unwrap_err(), CatalogError::UnknownGid(g));
    }

    #[test]
    fn classify_change_rules() {
        let mut c = with_local();
        let m = c.register_artifact(NewArtifact::model("m", "regression", "global")).unwrap();
        let ds = c.register_artifact(radar(Bucket::Landing)).unwrap();
        let hp = ChangeSet { hyperparameters_changed: true, ..Default::default() };
        assert_eq!(c.classify_change(m, &hp).unwrap(), ChangeClass::NewVersion);
        let alg = ChangeSet { algorithm_changed: true, ..Default::default() };
        assert_eq!(c.classify_change(m, &alg).unwrap(), ChangeClass::NewModel);
        let both = ChangeSet { hyperparameters_changed: true, architecture_changed: true, ..Default::default() };
        assert_eq!(c.classify_change(m, &both).unwrap(), ChangeClass::NewModel);
        assert_eq!(c.classify_change(m, &ChangeSet::default()).unwrap_err(), CatalogError::EmptyChangeSet);
        assert_eq!(c.classify_change(ds, &hp).unwrap_err(), CatalogError::NotAModel(ds));
    }

    #[test]
    fn bucket_transitions() {
        let mut c = with_local();
        let g = c.register_artifact(radar(Bucket::Landing)).unwrap();
        assert_eq!(
            c.promote_dataset(g, Bucket::Curated).unwrap_err(),
            CatalogError::IllegalTransition { from: Bucket::Landing, to: Bucket::Curated }
        );
        assert_eq!(c.promote_dataset(g, Bucket::Staging).unwrap().dataset.unwrap().bucket, Bucket::Staging);
        c.promote_dataset(g, Bucket::Curated).unwrap();
        assert_eq!(
            c.promote_dataset(g, Bucket::Landing).unwrap_err(),
            CatalogError::IllegalTransition { from: Bucket::Curated, to: Bucket::Landing }
        );
        let m = c.register_artifact(NewArtifact::model("m", "r", "g")).unwrap();
        assert_eq!(c.promote_dataset(m, Bucket::Staging).unwrap_err(), CatalogError::NotADataset(m));
        assert_eq!(c.events().iter().filter(|e| matches!(e, crate::provenance::ProvenanceEvent::Promoted { .. })).count(), 2);
    }

    #[test]
    fn platforms_and_bandwidth() {
        let mut c = with_local();
        c.register_platform(platform("gpu-cluster", 4)).unwrap();
        assert_eq!(c.register_platform(platform("local", 1)).unwrap_err(), CatalogError::DuplicateId("local".into()));
        assert_eq!(c.platforms().count(), 2);
        assert!(matches!(c.platform_registry(), Err(CatalogError::IncompleteBandwidthMatrix(m)) if m.len() == 2));
        c.set_bandwidth(&[BandwidthEntry { from: "local".into(), to: "gpu-cluster".into(), mbps: 100.0 }]).unwrap();
        assert_eq!(
            c.platform_registry().unwrap_err(),
            CatalogError::IncompleteBandwidthMatrix(vec![("gpu-cluster".into(), "local".into())])
        );
        c.set_bandwidth(&[BandwidthEntry { from: "gpu-cluster".into(), to: "local".into(), mbps: 50.0 }]).unwrap();
        let reg = c.platform_registry().unwrap();
        assert_eq!(reg.bandwidth.mbps("local", "local"), Some(f64::INFINITY));
        assert_eq!(reg.bandwidth.transfer_seconds("gpu-cluster", "local", 1e8), Some(2.0));
        let bad = c.set_bandwidth(&[BandwidthEntry { from: "local".into(), to: "gpu-cluster".into(), mbps: 0.0 }]);
        assert!(matches!(bad, Err(CatalogError::InvalidBandwidth { .. })));
    }

    #[test]
    fn selection_ranks_exact_match_first() {
        let mut c = with_local();
        assert!(c
            .select_models(&ModelQuery { task: "t".into(), domain: "d".into(), input_schema: Schema::default() }, 3)
            .is_empty());
        let ds = c.register_artifact(radar(Bucket::Curated)).unwrap();
        let good = c
            .register_artifact(
                NewArtifact::model("a", "regression", "g").in_domain("Meteorology").with_meta("training_dataset", ds.to_string()),
            )
            .unwrap();
        let off = c
            .register_artifact(
                NewArtifact::model("b", "regression", "g").in_domain("Finance").with_meta("training_dataset", ds.to_string()),
            )
            .unwrap();
        let q = ModelQuery {
            task: "regression".into(),
            domain: "Meteorology".into(),
            input_schema: Schema::parse_spec("cell:int64,dbz:float64").unwrap(),
        };
        let ranked = c.select_models(&q, 5);
        assert_eq!(ranked[0], (good, 1.0));
        assert_eq!(ranked[1].0, off);
        assert!((ranked[1].1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.select_models(&q, 1).len(), 1);
    }

    #[test]
    fn replication_threshold_and_decay() {
        use chrono::{Duration, Utc};
        let mut c = with_local();
        c.register_platform(platform("remote", 0)).unwrap();
        let g = c.register_artifact(radar(Bucket::Curated)).unwrap();
        let t0 = Utc::now();
        for i in 0..3 {
            c.record_access(g, "remote", t0 + Duration::minutes(i)).unwrap();
        }
        c.record_access(g, "local", t0).unwrap();
        assert!(c.apply_replication(t0 + Duration::minutes(5)).unwrap().created.is_empty());
        c.record_access(g, "remote", t0 + Duration::minutes(6)).unwrap();
        let ch = c.apply_replication(t0 + Duration::minutes(7)).unwrap();
        assert_eq!(ch.created.len(), 1);
        assert_eq!(c.dataset_sites(g), vec!["local".to_string(), "remote".to_string()]);
        let later = t0 + Duration::days(3);
        let ch = c.apply_replication(later).unwrap();
        assert_eq!(ch.evicted, vec![(g, "remote".to_string())]);
        assert!(!c.has_replica(g, "remote"));
    }

    #[test]
    fn survives_restart_and_compaction() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cat.ndjson");
        let before;
        {
            let mut c = Catalog::open(&path).unwrap();
            c.register_platform(platform("local", 0)).unwrap();
            let g = c.register_artifact(radar(Bucket::Landing)).unwrap();
            c.promote_dataset(g, Bucket::Staging).unwrap();
            let gone = c.register_artifact(radar(Bucket::Landing)).unwrap();
            c.delete_artifact(gone).unwrap();
            before = c.dump_normalized();
        }
        let lines_before = std::fs::read_to_string(&path).unwrap().lines().count();
        {
            let mut c = Catalog::open(&path).unwrap();
            assert_eq!(c.dump_normalized(), before);
            c.compact().unwrap();
            assert_eq!(c.dump_normalized(), before);
        }
        let lines_after = std::fs::read_to_string(&path).unwrap().lines().count();
        assert!(lines_after < lines_before);
        let r = Catalog::open_read_only(&path).unwrap();
        assert_eq!(r.dump_normalized(), before);
        let mut r = r;
        assert_eq!(r.register_platform(platform("x", 0)).unwrap_err(), CatalogError::ReadOnly);
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cat.ndjson");
        std::fs::write(&path, "{\"op\":\"put\",\"record\":{\"type\":\"retired\",\"gid\":\"00000000000000000000000000000001\"}}\nnot json\n").unwrap();
        assert!(matches!(Catalog::open(&path), Err(CatalogError::Corrupt { line: 2, .. })));
    }
}
