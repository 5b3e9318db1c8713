#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "lch/data_model.hpp"

namespace lch {

// A dataset bundle pairs image/text feature matrices with multi-hot labels.
// On disk: manifest.json, img.f32, txt.f32 (row-major little-endian float32),
// labels.u8 (one byte per entry, 0/1, row-major).
struct Bundle {
    FeatureMatrix img;
    FeatureMatrix txt;
    LabelMatrix labels;
    std::vector<std::string> class_names;
    std::string generator_config;  // JSON echo of whatever produced the bundle

    Index instances() const { return labels.rows(); }
    Index classes() const { return labels.classes(); }
};

void write_bundle(const std::filesystem::path& dir, const Bundle& bundle, bool force = false);
Bundle read_bundle(const std::filesystem::path& dir);

HyperParams hyperparams_from_json(const nlohmann::json& j);
nlohmann::json hyperparams_to_json(const HyperParams& hp);
HyperParams load_hyperparams(const std::filesystem::path& file);

// Tuned weight presets keyed as "<dataset>-<task>", e.g. "mirflickr-i2t".
// Returns false if the name is unknown.
bool apply_preset(const std::string& name, HyperParams& hp);
std::vector<std::string> preset_names();

}  // namespace lch
