use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ramsey_lab::seqspace::canonicalize;
use ramsey_lab::{Coloring, Point, Section, Space};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Toml(toml::de::Error),
    #[error("invalid scenario field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
}

impl From<toml::de::Error> for ScenarioError {
    fn from(e: toml::de::Error) -> Self {
        ScenarioError::Toml(e)
    }
}

fn field(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Field { field, reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Ramsey,
    Reduce,
    CheckColoring,
    Props,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub t: usize,
    pub i_max: usize,
    pub horizon: usize,
    pub fuel: u64,
    pub rng_seed: u64,
    /// Sample size for the `props` and `oracle` engines.
    pub samples: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params { t: 8, i_max: 12, horizon: 64, fuel: 1_000_000, rng_seed: 0, samples: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub engine: Engine,
    pub backend: Space,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coloring: Option<Coloring>,
    #[serde(default)]
    pub seeds: Vec<Point>,
    /// Extra seed points drawn from `rng_seed`.
    #[serde(default)]
    pub random_seeds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<Section>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let p = &self.params;
        for (name, v) in [("params.t", p.t), ("params.i_max", p.i_max), ("params.horizon", p.horizon), ("params.samples", p.samples)] {
            if v == 0 {
                return Err(field(name, "must be positive"));
            }
        }
        if p.fuel == 0 {
            return Err(field("params.fuel", "must be positive"));
        }
        if self.seeds.is_empty() && self.random_seeds == 0 {
            return Err(field("seeds", "give seed points or random_seeds"));
        }
        for s in &self.seeds {
            self.backend.validate(s).map_err(|e| field("seeds", e.to_string()))?;
        }
        match (&self.coloring, self.engine) {
            (None, Engine::Ramsey | Engine::Reduce | Engine::CheckColoring) => {
                return Err(field("coloring", "required by this engine"))
            }
            (Some(c), _) => c.check().map_err(|e| field("coloring", e.to_string()))?,
            _ => {}
        }
        if self.section.is_some() && self.engine != Engine::Ramsey {
            return Err(field("section", "only the ramsey engine pushes sections"));
        }
        Ok(())
    }

    /// The listed seeds followed by `random_seeds` drawn points.
    pub fn seed_points(&self) -> Vec<Point> {
        let mut out = self.seeds.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.rng_seed);
        for _ in 0..self.random_seeds {
            out.push(match &self.backend {
                Space::E0 => random_seq(&mut rng),
                Space::Smooth(s) => {
                    let class = if s.classes.is_empty() { "c".to_string() } else { s.classes[rng.gen_range(0..s.classes.len())].clone() };
                    Point::indexed(&class, rng.gen_range(0..1000))
                }
            });
        }
        out
    }
}

/// A random sequence whose tail is not constant.
pub fn random_seq(rng: &mut impl Rng) -> Point {
    loop {
        let prefix: Vec<bool> = (0..rng.gen_range(0..6)).map(|_| rng.gen()).collect();
        let period: Vec<bool> = (0..rng.gen_range(2..6)).map(|_| rng.gen()).collect();
        let x = canonicalize(&prefix, &period).expect("period is nonempty");
        if !x.has_constant_tail() {
            return x.into();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_scenario() {
        let s = Scenario::parse(
            r#"
name = "demo"
engine = "ramsey"
seeds = ["e|01", "1|011"]
section = "bit[0]=1"
backend = { backend = "e0" }
coloring = { kind = "random", seed = 7, n = 3 }

[params]
t = 5
fuel = 1000
"#,
        )
        .unwrap();
        assert_eq!(s.engine, Engine::Ramsey);
        assert_eq!(s.params.t, 5);
        assert_eq!(s.params.horizon, 64);
        assert_eq!(s.seed_points().len(), 2);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let err = Scenario::parse("engine = \"ramsey\"\nbackend = { backend = \"e0\" }\nseeds = [\"e|01\"]\n[params]\nhorizn = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("horizn") && err.contains("line 5"), "{err}");
        let err = Scenario::parse("engine = \"reduce\"\nbackend = { backend = \"e0\" }\nseeds = [\"e|01\"]\n").unwrap_err();
        assert!(err.to_string().contains("coloring"));
        let err = Scenario::parse("engine = \"props\"\nbackend = { backend = \"e0\" }\nseeds = [\"e|2\"]\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = Scenario::parse("engine = \"props\"\nbackend = { backend = \"e0\" }\nseeds = [\"c:1\"]\n").unwrap_err();
        assert!(err.to_string().contains("seeds"));
    }

    #[test]
    fn random_seeds_are_reproducible() {
        let text = "engine = \"props\"\nbackend = { backend = \"smooth\", classes = [\"a\", \"b\"] }\nrandom_seeds = 5\n";
        let s = Scenario::parse(text).unwrap();
        assert_eq!(s.seed_points(), s.seed_points());
        assert_eq!(s.seed_points().len(), 5);
    }
}
