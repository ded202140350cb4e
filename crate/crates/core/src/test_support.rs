//! Small scenarios shared by unit tests.

use std::path::Path;

use crate::scenario::{ChannelStatistics, Scenario, ScenarioConfig};

pub(crate) const SMALL_LBI: &str = r#"{
    "dimensions": {"M": 4, "L": 8, "N_B": 2, "N_E": [2], "K_eves": 1},
    "model": {"kind": "lbi"},
    "correlations": {
        "R_B": {"d_r": 1.0, "eta": 0.0, "delta": 5.0},
        "R_E": [{"d_r": 1.0, "eta": 60.0, "delta": 5.0}],
        "T_S_B": {"d_r": 1.0, "eta": 5.0, "delta": 5.0},
        "T_S_E": [{"d_r": 1.0, "eta": -30.0, "delta": 10.0}]
    },
    "pathloss": {"c1_db": -23.05, "c2_db": -25.95, "alpha1": 2.2, "alpha2": 3.67,
                 "d_bs_irs": 20.0, "d_irs_b": 35.0, "d_irs_e": [35.0]},
    "noise": {"sigma2_dbm": -94.0},
    "power": {"P_dbm": 40.0, "split_w": 0.9, "split_v": 0.1}
}"#;

pub(crate) const SMALL_DS: &str = r#"{
    "dimensions": {"M": 3, "L": 6, "N_B": 2, "N_E": [2], "K_eves": 1},
    "model": {"kind": "double"},
    "correlations": {
        "R_B": {"d_r": 1.0, "eta": 0.0, "delta": 5.0},
        "R_E": [{"d_r": 1.0, "eta": 60.0, "delta": 5.0}],
        "T_S_B": {"d_r": 1.0, "eta": 5.0, "delta": 5.0},
        "T_S_E": [{"d_r": 1.0, "eta": -40.0, "delta": 8.0}],
        "R_S": {"d_r": 1.0, "eta": 20.0, "delta": 10.0},
        "T": "identity"
    },
    "pathloss": {"c1_db": -23.05, "c2_db": -25.95, "alpha1": 2.2, "alpha2": 3.67,
                 "d_bs_irs": 20.0, "d_irs_b": 30.0, "d_irs_e": [40.0]},
    "noise": {"sigma2_dbm": -94.0},
    "power": {"P_dbm": 40.0, "split_w": 0.9, "split_v": 0.1}
}"#;

pub(crate) fn scenario(text: &str) -> Scenario {
    ScenarioConfig::from_json_str(text).unwrap().build(Path::new(".")).unwrap()
}

/// LBI statistics and the total power budget `M P`.
pub(crate) fn small_lbi() -> (ChannelStatistics, f64) {
    let s = scenario(SMALL_LBI);
    let b = s.budget();
    (s.stats, b)
}

pub(crate) fn small_ds() -> (ChannelStatistics, f64) {
    let s = scenario(SMALL_DS);
    let b = s.budget();
    (s.stats, b)
}
