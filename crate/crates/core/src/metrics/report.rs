use serde::{Deserialize, Serialize};

/// Published baseline scores carried in every report for comparison.
#[allow(clippy::approx_constant)]
pub const LDA_REFERENCE: [(&str, f64); 5] =
    [("fid_g", 0.318), ("fid_k", 0.445), ("fid_r", 3.831), ("div", 0.460), ("foot_slide", 0.0033)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub gt_windows: usize,
    pub gen_windows: usize,
    pub gt_frames: usize,
    pub gen_frames: usize,
    pub face_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub lve: String,
    pub fdd_std: String,
    pub div_feature: String,
    pub fid_g_fit: String,
    pub fid_k_descriptor: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            lve: "squared".into(),
            fdd_std: "population".into(),
            div_feature: "flattened window joint positions".into(),
            fid_g_fit: "per-frame".into(),
            fid_k_descriptor: "per-joint speed mean, speed std, acceleration mean".into(),
        }
    }
}

/// Metrics of one evaluation run. Face metrics are absent when no face data
/// was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub fid_g: Option<f64>,
    pub fid_k: Option<f64>,
    pub fid_r: Option<f64>,
    pub div: Option<f64>,
    pub foot_slide: Option<f64>,
    pub lve: Option<f64>,
    pub fdd: Option<f64>,
    pub config_fingerprint: String,
    pub counts: SampleCounts,
    pub conventions: Conventions,
    pub reference_lda: Vec<(String, f64)>,
}

impl MetricReport {
    pub fn new(config_fingerprint: impl Into<String>, counts: SampleCounts) -> Self {
        MetricReport {
            fid_g: None,
            fid_k: None,
            fid_r: None,
            div: None,
            foot_slide: None,
            lve: None,
            fdd: None,
            config_fingerprint: config_fingerprint.into(),
            counts,
            conventions: Conventions::default(),
            reference_lda: LDA_REFERENCE.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub const CSV_HEADER: &'static str = "fid_g,fid_k,fid_r,div,foot_slide,lve,fdd,gt_windows,gen_windows,config_fingerprint";

    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{}\n{},{},{},{},{},{},{},{},{},{}\n",
            Self::CSV_HEADER,
            f(self.fid_g),
            f(self.fid_k),
            f(self.fid_r),
            f(self.div),
            f(self.foot_slide),
            f(self.lve),
            f(self.fdd),
            self.counts.gt_windows,
            self.counts.gen_windows,
            self.config_fingerprint
        )
    }
}
