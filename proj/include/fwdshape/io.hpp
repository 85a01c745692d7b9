#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "fwdshape/estimator.hpp"
#include "fwdshape/market_data.hpp"
#include "fwdshape/shaper.hpp"

namespace fwdshape {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

// {"parent": "CAL-2014", "children": "quarter", "weights": "hours" | "equal" | [..],
//  "dst_aware": false, "fit": {...}}
SplitSpec parse_split_config(std::string_view json);
std::string split_config_json(const SplitSpec& spec);

// {"weight_function": {"kind": "hampel", "a": .., "b": .., "r": ..} | {"kind": "bisquare", "k": ..},
//  "alpha": "auto" | number | {"mode": "auto" | "per-case" | "fixed", "multiplier": ..},
//  "scale": "mad" | "qn", "tolerance", "max_iterations", "feasibility_refits", "gap_tolerance"}
// Missing keys keep the values of `base`. A split config's "fit" member uses
// the same layout.
FitConfig parse_fit_config(std::string_view json, FitConfig base = {});
FitConfig fit_config_of_split(std::string_view split_json, FitConfig base = {});
std::string fit_config_json(const FitConfig& config);

struct FitReport {
  FitResult result;
  std::optional<GranularitySplit> split;
};

std::string fit_report_json(const FitReport& report);
FitReport parse_fit_report(std::string_view json);

// One cascade level that applies the report's coefficients to any parent.
CascadeLevel level_from_report(const FitReport& report, std::string name = "fit");

// {"root": "CAL-2014", "levels": [{"name", "children", "weights", "coefficients": {key: [[A, B], ..]}}],
//  "gap_tolerance", "allow_arbitrage", "dst_aware"}
// Levels may omit "coefficients"; callers fill them from fit reports.
ShapingCascade parse_cascade_config(std::string_view json);
std::string cascade_config_json(const ShapingCascade& cascade);

std::string completeness_json(const CompletenessReport& report);

}  // namespace fwdshape
