use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Column names of an NSL-KDD record, in file order.
pub const NSL_KDD_FEATURES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

pub const NSL_KDD_CATEGORICAL: [&str; 3] = ["protocol_type", "service", "flag"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

/// Layout of an NSL-KDD text file: 41 typed features, the attack-name
/// column and an optional difficulty score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub features: Vec<FeatureSpec>,
    pub label_column: String,
    pub difficulty_column: Option<String>,
}

impl DatasetSchema {
    pub fn nsl_kdd() -> Self {
        let features = NSL_KDD_FEATURES
            .iter()
            .map(|name| FeatureSpec {
                name: (*name).to_string(),
                kind: if NSL_KDD_CATEGORICAL.contains(name) {
                    FeatureKind::Categorical
                } else {
                    FeatureKind::Numeric
                },
            })
            .collect();
        DatasetSchema {
            features,
            label_column: "attack".to_string(),
            difficulty_column: Some("difficulty".to_string()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != NSL_KDD_FEATURES.len() {
            return Err(Error::Schema(format!(
                "expected {} features, got {}",
                NSL_KDD_FEATURES.len(),
                self.features.len()
            )));
        }
        for f in &self.features {
            let categorical = NSL_KDD_CATEGORICAL.contains(&f.name.as_str());
            if categorical != (f.kind == FeatureKind::Categorical) {
                return Err(Error::Schema(format!(
                    "feature `{}` has kind {:?}",
                    f.name, f.kind
                )));
            }
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nsl_kdd_schema_is_valid() {
        let schema = DatasetSchema::nsl_kdd();
        schema.validate().unwrap();
        let cats: Vec<_> = schema
            .features
            .iter()
            .filter(|f| f.kind == FeatureKind::Categorical)
            .map(|f| f.name.as_str())
            .collect();
        assert_eq!(cats, NSL_KDD_CATEGORICAL);
    }

    #[test]
    fn wrong_kind_rejected() {
        let mut schema = DatasetSchema::nsl_kdd();
        schema.features[0].kind = FeatureKind::Categorical;
        assert!(schema.validate().is_err());
        schema.features.pop();
        assert!(schema.validate().is_err());
    }
}
