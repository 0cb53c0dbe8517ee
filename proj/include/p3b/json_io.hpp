#pragma once
// JSON views of the library's result types, plus round-trip serialization
// for discrete paths. All numbers pass through nlohmann::json doubles, so
// files written here reload bit-exactly.

#include "json.hpp"

#include "p3b/centralconfig.hpp"
#include "p3b/jmaction.hpp"
#include "p3b/secondvar.hpp"
#include "p3b/spectra.hpp"

namespace p3b {

nlohmann::json to_json(const MassTriple& m);
nlohmann::json to_json(const CentralConfiguration& cc);
nlohmann::json to_json(const SpectralReport& report);
nlohmann::json to_json(const NegativeDirection& direction);
nlohmann::json to_json(const MinimizerProbe& probe);

// {"masses": [3], "nodes": [[6]...], "times": [...] (omitted when absent)}
nlohmann::json to_json(const DiscretePath& path);
DiscretePath path_from_json(const nlohmann::json& j);

}  // namespace p3b
