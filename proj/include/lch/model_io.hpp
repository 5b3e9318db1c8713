#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>

#include "lch/data_model.hpp"
#include "lch/network.hpp"

namespace lch {

// Checkpoint: "LCHPARM1", u32 modality, u32 dim count, u64 seed, u32 dims,
// then per layer the weight matrix row-major and the bias vector, float32 LE.
void save_params(const std::filesystem::path& file, const NetworkParams& net);
NetworkParams load_params(const std::filesystem::path& file);

// Packed codes: "LCHCODE1", u32 bits, u64 count, u32 words per code, words LE.
void save_codes(const std::filesystem::path& file, const HashCodes& codes);
HashCodes load_codes(const std::filesystem::path& file);

nlohmann::json split_to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& j);

}  // namespace lch
