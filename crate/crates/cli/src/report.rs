//! Result reports: everything is written with element names so a report can
//! be checked against its instance file without this program.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use secat_core::certificate;
use secat_core::engine::{CoverCertificate, EngineStats};
use secat_core::homotopy::Fence;
use secat_core::poset::subspace_by_names;
use secat_core::propcheck::{CheckReport, GeneratorConfig};
use secat_core::{Cospan, Mode, PosetMap, Value};

pub const REPORT_VERSION: u32 = 1;

pub type NameTable = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Each class as a list of elements of `K`.
    pub classes: Vec<Vec<String>>,
    /// `s_i` as a table from class elements to elements of `A`.
    pub sections: Vec<NameTable>,
    /// Fence from `p ∘ s_i` to `φ` restricted to class `i`.
    pub fences: Vec<Vec<NameTable>>,
}

fn table(f: &PosetMap) -> NameTable {
    f.to_name_table().into_iter().collect()
}

impl CertificateReport {
    pub fn from_certificate(cert: &CoverCertificate) -> Self {
        CertificateReport {
            classes: cert.classes.iter().map(|z| z.names()).collect(),
            sections: cert.sections.iter().map(table).collect(),
            fences: cert
                .fences
                .iter()
                .map(|f| f.steps.iter().map(table).collect())
                .collect(),
        }
    }

    /// Rebuilds the certificate from names and runs the independent
    /// validator on it.
    pub fn validate(&self, c: &Cospan, mode: Mode) -> Result<(), String> {
        let n = self.classes.len();
        if self.sections.len() != n || self.fences.len() != n {
            return Err("certificate needs one section and one fence per class".into());
        }
        let mut cert = CoverCertificate {
            mode,
            classes: Vec::new(),
            sections: Vec::new(),
            fences: Vec::new(),
        };
        let as_pairs = |t: &NameTable| -> Vec<(String, String)> { t.iter().map(|(a, b)| (a.clone(), b.clone())).collect() };
        for i in 0..n {
            let (z, inc) = subspace_by_names(&c.k, &self.classes[i]).map_err(|e| format!("class {i}: {e}"))?;
            let s = PosetMap::from_names(&z, &c.a, &as_pairs(&self.sections[i])).map_err(|e| format!("section {i}: {e}"))?;
            let steps = self.fences[i]
                .iter()
                .map(|t| PosetMap::from_names(&z, &c.x, &as_pairs(t)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("fence {i}: {e}"))?;
            cert.classes
                .push(secat_core::Subset::new(&c.k, inc.image()));
            cert.sections.push(s);
            cert.fences.push(Fence { steps });
        }
        certificate::validate(c, &cert)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvisoryUpper {
    pub value: usize,
    pub r: usize,
    pub dimension: usize,
    pub caveat: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    /// Weighted cup-length; a lower bound for the open-cover value. `None`
    /// in generalized mode or when the order complex is too large.
    pub lower: Option<usize>,
    pub upper: AdvisoryUpper,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub method: String,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetUsage {
    pub max_maps: usize,
    pub stats: EngineStats,
    pub cache_hits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub config: GeneratorConfig,
    pub hard_failures: usize,
    pub skip_rate: f64,
    pub checks: CheckReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultReport {
    pub version: u32,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_evidence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<CrossCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<FuzzReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetUsage>,
}

impl ResultReport {
    pub fn new(kind: &str) -> Self {
        ResultReport {
            version: REPORT_VERSION,
            kind: kind.to_owned(),
            mode: None,
            value: None,
            certificate: None,
            lower_evidence: None,
            bounds: None,
            cross_check: None,
            fuzz: None,
            timing: None,
            budget: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}
