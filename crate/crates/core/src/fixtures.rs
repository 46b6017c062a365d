//! The two small reference instances used to compare heuristic and exact
//! pattern counts.

use crate::io::load_instance;
use crate::model::Instance;

/// Ten beams, demands 2..=56.
pub const TEN_BEAM_JSON: &str = include_str!("../data/ten_beam.json");
/// Fifteen beams, demands 20..=156.
pub const FIFTEEN_BEAM_JSON: &str = include_str!("../data/fifteen_beam.json");

pub fn ten_beam() -> Instance {
    load_instance(TEN_BEAM_JSON.as_bytes()).expect("bundled instance is valid")
}

pub fn fifteen_beam() -> Instance {
    load_instance(FIFTEEN_BEAM_JSON.as_bytes()).expect("bundled instance is valid")
}
