use serde::{Deserialize, Serialize};

/// Words moved per tensor across one boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DvBreakdown {
    #[serde(rename = "in")]
    pub input: f64,
    #[serde(rename = "out")]
    pub output: f64,
    #[serde(rename = "ker")]
    pub kernel: f64,
}

impl DvBreakdown {
    pub fn total(&self) -> f64 {
        self.input + self.output + self.kernel
    }

    pub fn scale(&self, f: f64) -> DvBreakdown {
        DvBreakdown {
            input: self.input * f,
            output: self.output * f,
            kernel: self.kernel * f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCost {
    /// Name of the tile level (the memory level whose capacity bounds it).
    pub level: String,
    /// Name of the level the data comes from.
    pub from: String,
    pub dv_words: f64,
    pub bandwidth: f64,
    pub scaled: f64,
    pub per_tensor: DvBreakdown,
}

/// Per-boundary data volumes and the resulting bottleneck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub per_level: Vec<LevelCost>,
    pub bottleneck: String,
    pub total: f64,
}

impl CostReport {
    pub fn from_levels(per_level: Vec<LevelCost>) -> CostReport {
        let mut best = 0;
        for (i, l) in per_level.iter().enumerate() {
            if l.scaled > per_level[best].scaled {
                best = i;
            }
        }
        let (bottleneck, total) = match per_level.get(best) {
            Some(l) => (l.level.clone(), l.scaled),
            None => (String::new(), 0.0),
        };
        CostReport {
            per_level,
            bottleneck,
            total,
        }
    }

    pub fn bottleneck_index(&self) -> usize {
        self.per_level
            .iter()
            .position(|l| l.level == self.bottleneck)
            .unwrap_or(0)
    }
}
