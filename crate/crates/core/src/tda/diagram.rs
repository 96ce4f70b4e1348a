use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A birth–death pair. Essential classes have `death == f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub birth: f64,
    pub death: f64,
    pub dim: usize,
}

impl Feature {
    pub fn new(birth: f64, death: f64, dim: usize) -> Self {
        Self { birth, death, dim }
    }

    pub fn essential(birth: f64, dim: usize) -> Self {
        Self { birth, death: f64::INFINITY, dim }
    }

    pub fn is_essential(&self) -> bool {
        self.death == f64::INFINITY
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DeathRepr {
    Finite(f64),
    Label(String),
}

#[derive(Serialize, Deserialize)]
struct FeatureRepr {
    birth: f64,
    death: DeathRepr,
    dim: usize,
}

impl Serialize for Feature {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let death = if self.is_essential() {
            DeathRepr::Label("inf".into())
        } else {
            DeathRepr::Finite(self.death)
        };
        FeatureRepr { birth: self.birth, death, dim: self.dim }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FeatureRepr::deserialize(d)?;
        let death = match r.death {
            DeathRepr::Finite(v) => v,
            DeathRepr::Label(s) if s == "inf" => f64::INFINITY,
            DeathRepr::Label(s) => {
                return Err(serde::de::Error::custom(format!("unknown death label {s:?}")))
            }
        };
        Ok(Feature { birth: r.birth, death, dim: r.dim })
    }
}

/// Multiset of persistence features over homology dimensions 0 and 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PersistenceDiagram {
    pub features: Vec<Feature>,
}

impl PersistenceDiagram {
    pub fn new(mut features: Vec<Feature>) -> Self {
        sort_features(&mut features);
        Self { features }
    }

    /// Finite features of a single dimension.
    pub fn from_pairs(pairs: &[(f64, f64)], dim: usize) -> Self {
        Self::new(pairs.iter().map(|&(b, d)| Feature::new(b, d, dim)).collect())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Feature> {
        self.features.iter().filter(move |f| f.dim == dim)
    }

    /// Features of one dimension as a new diagram.
    pub fn restrict(&self, dim: usize) -> Self {
        Self { features: self.in_dim(dim).copied().collect() }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.features.iter().map(|f| f.dim).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

pub(crate) fn sort_features(fs: &mut [Feature]) {
    fs.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });
}

/// A feature in (birth, persistence) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedFeature {
    pub birth: f64,
    pub persistence: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TiltedDiagram {
    pub features: Vec<TiltedFeature>,
}

impl TiltedDiagram {
    pub fn total_persistence(&self) -> f64 {
        self.features.iter().map(|f| f.persistence).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// What to do with classes that never die.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EssentialPolicy {
    Drop,
    /// Treat the class as dying at this value.
    CapAt(f64),
}

/// Maps finite features to `(birth, death - birth)` and applies `policy` to essential ones.
pub fn tilt(diagram: &PersistenceDiagram, policy: EssentialPolicy) -> Result<TiltedDiagram> {
    let mut features = Vec::with_capacity(diagram.len());
    for f in &diagram.features {
        if !f.is_essential() {
            features.push(TiltedFeature { birth: f.birth, persistence: f.persistence(), dim: f.dim });
            continue;
        }
        match policy {
            EssentialPolicy::Drop => {}
            EssentialPolicy::CapAt(cap) => {
                if cap < f.birth {
                    return Err(Error::invalid(format!(
                        "essential cap {cap} below birth {}",
                        f.birth
                    )));
                }
                features.push(TiltedFeature { birth: f.birth, persistence: cap - f.birth, dim: f.dim });
            }
        }
    }
    Ok(TiltedDiagram { features })
}
