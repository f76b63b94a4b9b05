pub mod colorings;
pub mod ramsey;
pub mod reduction;
pub mod relspace;
pub mod seqspace;

pub use colorings::{Color, Coloring, ColoringError, PointMap, Verdict};
pub use ramsey::{
    extract_monochromatic, push_section, verify_certificate, ExtractParams, MonoCertificate, RamseyError,
    ENGINE_VERSION,
};
pub use reduction::{build_reduction, ReductionError, ReductionOptions, ReductionTrace, StageStatus};
pub use relspace::{Point, RelError, Section, Space};
pub use seqspace::{EvpSeq, FiniteFlip, SeqError, TwoAdicRational};
