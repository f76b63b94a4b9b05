pub mod engines;
pub mod report;
pub mod scenario;

pub use report::{run, Report, SeedResult, Status, Summary};
pub use scenario::{Engine, Params, Scenario, ScenarioError};
