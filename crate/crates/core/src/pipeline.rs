//! Panel to supervised set: pressure index, crisis flags, features, labels.

use crate::dataset::SupervisedSet;
use crate::error::{Error, Result};
use crate::indicators::{
    build_features, compute_isp, label_crises, make_supervised, CrisisFlags, FeatureMatrix, IspSeries, CRISIS_K,
    DEFAULT_HP_LAMBDA,
};
use crate::panel::{IndicatorPanel, YearMonth};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    /// Crisis threshold multiplier.
    pub k: f64,
    pub hp_lambda: f64,
    /// 0 labels the current month, 1 the next month.
    pub horizon: usize,
    /// Standardize each feature column over the full sample.
    pub standardize_features: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: CRISIS_K,
            hp_lambda: DEFAULT_HP_LAMBDA,
            horizon: 0,
            standardize_features: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub isp: IspSeries,
    pub flags: CrisisFlags,
    /// All feature rows (one per index month), scaled if configured.
    pub features: FeatureMatrix,
    pub data: SupervisedSet,
    /// Month of the feature row for each supervised pair.
    pub dates: Vec<YearMonth>,
}

impl PreparedData {
    pub fn feature_names(&self) -> Vec<String> {
        self.features.names.clone()
    }
}

pub fn prepare(panel: &IndicatorPanel, cfg: &PipelineConfig) -> Result<PreparedData> {
    if cfg.horizon > 1 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be 0 or 1, got {}",
            cfg.horizon
        )));
    }
    let isp = compute_isp(panel)?;
    let flags = label_crises(&isp, cfg.k)?;
    let mut features = build_features(panel, cfg.hp_lambda)?;
    if cfg.standardize_features {
        features.standardize_columns();
    }
    let data = make_supervised(&features, &flags, cfg.horizon)?;
    let dates = features.dates[..data.len()].to_vec();
    Ok(PreparedData {
        isp,
        flags,
        features,
        data,
        dates,
    })
}
