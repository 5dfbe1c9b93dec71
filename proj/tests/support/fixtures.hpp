#pragma once

#include "mtdc/config.hpp"

#include <string>

namespace fixtures {

inline std::string ref14_path() {
    return std::string(MTDC_DATA_DIR) + "/ref14.json";
}
inline std::string case1_path() {
    return std::string(MTDC_DATA_DIR) + "/case1.json";
}
inline std::string case2_path() {
    return std::string(MTDC_DATA_DIR) + "/case2.json";
}

/// Minimal two-node grid: one droop rectifier feeding one fixed-power
/// inverter over a single line. Same electrical parameters as the
/// reference dataset.
inline const char* kTwoNodeText = R"JSON({
  "nodes": ["a", "b"],
  "lines": [{"from":"a","to":"b","length":{"value":25,"unit":"km"},
    "r_per_km":{"value":0.01273,"unit":"ohm/km"},
    "l_per_km":{"value":0.9337,"unit":"mH/km"},
    "c_per_km":{"value":0.01274,"unit":"uF/km"}}],
  "converters": [
    {"node":"a","mode":"droop","c_sm":{"value":20,"unit":"mF"},"n_sm":435,
     "l_arm":{"value":0.16,"unit":"mH"},"r_arm":{"value":2.175,"unit":"ohm"},
     "l0":{"value":0,"unit":"mH"},"r0":{"value":1,"unit":"ohm"},
     "l_s":{"value":200,"unit":"mH"},"c_g":{"value":1,"unit":"uF"},
     "v_dc_nom":{"value":1000,"unit":"kV"},
     "pcc_voltage_dq":[{"value":250,"unit":"kV"},{"value":0,"unit":"kV"}],
     "omega0":{"value":60,"unit":"Hz"},"p_set":{"value":0,"unit":"MW"},
     "q_set":{"value":0,"unit":"Mvar"},
     "droop":{"k":{"value":100,"unit":"MW/kV"},"v_dc_ref":{"value":500,"unit":"kV"},
              "p0":{"value":-210,"unit":"MW"}}},
    {"node":"b","mode":"fixed-power","c_sm":{"value":25,"unit":"mF"},"n_sm":363,
     "l_arm":{"value":0.1,"unit":"mH"},"r_arm":{"value":1.815,"unit":"ohm"},
     "l0":{"value":0,"unit":"mH"},"r0":{"value":1,"unit":"ohm"},
     "l_s":{"value":200,"unit":"mH"},"c_g":{"value":1,"unit":"uF"},
     "v_dc_nom":{"value":1000,"unit":"kV"},
     "pcc_voltage_dq":[{"value":250,"unit":"kV"},{"value":0,"unit":"kV"}],
     "omega0":{"value":60,"unit":"Hz"},"p_set":{"value":200,"unit":"MW"},
     "q_set":{"value":0,"unit":"Mvar"}}
  ],
  "gains": [
    {"node":"a","kp_i":6.0,"ki_i":200,"kp_pq":0,"ki_pq":1.5e-5},
    {"node":"b","kp_i":6.0,"ki_i":200,"kp_pq":0,"ki_pq":1.2e-4}
  ]
})JSON";

inline mtdc::SystemConfig two_node() {
    return mtdc::parse_config_text(kTwoNodeText);
}

} // namespace fixtures
