use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classify::EnsembleConfig;
use crate::error::{Error, Result};
use crate::features::{HistogramConfig, SegmentationScheme};
use crate::skeleton::{default_topology, SkeletonTopology};
use crate::synth::CohortSpec;
use crate::viz::{OverlaySpec, RadiusConfig};

/// Everything a pipeline run depends on. `seed` is authoritative: resolving a
/// config copies it into the ensemble and cohort seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Topology JSON; the built-in 15-joint topology when absent.
    pub topology: Option<PathBuf>,
    /// Keypoint-file joint name -> topology joint name (`"_"` drops the joint).
    pub joint_remap: BTreeMap<String, String>,
    pub histogram: HistogramConfig,
    pub segmentation: SegmentationScheme,
    pub segment_ensemble: EnsembleConfig,
    pub fusion_ensemble: EnsembleConfig,
    pub overlay: OverlaySpec,
    pub radius: RadiusConfig,
    pub cohort: CohortSpec,
    pub data_dir: PathBuf,
    pub masks_dir: Option<PathBuf>,
    pub frames_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            topology: None,
            joint_remap: BTreeMap::new(),
            histogram: HistogramConfig::default(),
            segmentation: SegmentationScheme::default(),
            segment_ensemble: EnsembleConfig::default(),
            fusion_ensemble: EnsembleConfig::default(),
            overlay: OverlaySpec::default(),
            radius: RadiusConfig::default(),
            cohort: CohortSpec::default(),
            data_dir: PathBuf::from("data"),
            masks_dir: None,
            frames_dir: None,
            out_dir: PathBuf::from("out"),
            seed: 42,
        }
    }
}

impl PipelineConfig {
    /// Loads a config; relative paths are taken from the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.topology.iter_mut().for_each(rebase);
        cfg.masks_dir.iter_mut().for_each(rebase);
        cfg.frames_dir.iter_mut().for_each(rebase);
        rebase(&mut cfg.data_dir);
        rebase(&mut cfg.out_dir);
        Ok(cfg.resolved())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolved()
    }

    /// Copies `seed` into every seeded section.
    pub fn resolved(mut self) -> Self {
        self.segment_ensemble.seed = self.seed;
        self.fusion_ensemble.seed = self.seed;
        self.cohort.seed = self.seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.histogram.validate()?;
        self.segmentation.validate()?;
        self.segment_ensemble.validate()?;
        self.fusion_ensemble.validate()?;
        self.overlay.validate()?;
        if let Some(t) = &self.topology {
            if !t.exists() {
                return Err(Error::InvalidConfig(format!(
                    "topology file {} does not exist",
                    t.display()
                )));
            }
        }
        Ok(())
    }

    pub fn load_topology(&self) -> Result<Arc<SkeletonTopology>> {
        match &self.topology {
            None => Ok(Arc::new(default_topology())),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let topo: SkeletonTopology = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
                Ok(Arc::new(topo))
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_fills_defaults_and_rebases() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(
            &path,
            r#"{"seed": 7, "segmentation": {"window_len": 50}, "data_dir": "d"}"#,
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.segmentation.window_len, 50);
        assert_eq!(cfg.histogram.bins, 8);
        assert_eq!(cfg.segment_ensemble.seed, 7);
        assert_eq!(cfg.cohort.seed, 7);
        assert_eq!(cfg.data_dir, dir.path().join("d"));
        cfg.validate().unwrap();
        assert_eq!(cfg.load_topology().unwrap().n_joints(), 15);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"sede": 7}"#).unwrap();
        assert!(PipelineConfig::load(&path).is_err());
        fs::write(&path, r#"{"histogram": {"bins": 1}}"#).unwrap();
        assert!(PipelineConfig::load(&path).unwrap().validate().is_err());
    }

    #[test]
    fn topology_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let topo_path = dir.path().join("topo.json");
        fs::write(&topo_path, serde_json::to_string(&default_topology()).unwrap()).unwrap();
        let cfg = PipelineConfig {
            topology: Some(topo_path),
            ..Default::default()
        };
        assert_eq!(*cfg.load_topology().unwrap(), default_topology());
    }
}
