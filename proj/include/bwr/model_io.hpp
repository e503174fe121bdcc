#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "bwr/model.hpp"

namespace bwr {

// Model document grammar (JSON):
//
//   {
//     "states": ["s1", "s2", ...],          // m >= 2 distinct labels
//     "truth":  "s1",                       // one of the labels
//     "prior":  [p_1, ..., p_m],            // optional default prior
//     "agents": [                           // one object per agent, index = position
//       { "likelihood": [[l(0|s1), ..., l(0|sm)],   // row-major, signals x states
//                        [l(1|s1), ..., l(1|sm)], ...],
//         "prior": [p_1, ..., p_m] }        // optional when a default prior is given
//     ],
//     "edges": [[from, to], ...]            // from is an in-neighbor of to
//   }
//
// Parsing never accepts a document that fails validate().

ModelSpec model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ModelSpec& model);

ModelSpec load_model(const std::filesystem::path& path);
void save_model(const ModelSpec& model, const std::filesystem::path& path);

}  // namespace bwr
