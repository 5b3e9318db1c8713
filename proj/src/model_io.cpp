#include "lch/model_io.hpp"

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

namespace lch {

namespace fs = std::filesystem;

namespace {

constexpr char kParamMagic[8] = {'L', 'C', 'H', 'P', 'A', 'R', 'M', '1'};
constexpr char kCodeMagic[8] = {'L', 'C', 'H', 'C', 'O', 'D', 'E', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const fs::path& file) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("truncated file: " + file.string());
    return v;
}

void put_f32_matrix(std::ofstream& out, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) put<float>(out, static_cast<float>(m(i, j)));
}

Matrix take_f32_matrix(std::ifstream& in, Index rows, Index cols, const fs::path& file) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = take<float>(in, file);
    return m;
}

}  // namespace

void save_params(const fs::path& file, const NetworkParams& net) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + file.string());
    out.write(kParamMagic, sizeof(kParamMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.modality));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_dims.size()));
    put<std::uint64_t>(out, net.seed);
    for (int d : net.layer_dims) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (int l = 0; l < net.layers(); ++l) {
        put_f32_matrix(out, net.weights[static_cast<std::size_t>(l)]);
        put_f32_matrix(out, net.biases[static_cast<std::size_t>(l)]);
    }
    if (!out) throw DataError("short write: " + file.string());
}

NetworkParams load_params(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open: " + file.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kParamMagic, sizeof(magic)) != 0)
        throw DataError("not a parameter checkpoint: " + file.string());

    NetworkParams net;
    net.modality = static_cast<Modality>(take<std::uint32_t>(in, file));
    const auto n_dims = take<std::uint32_t>(in, file);
    if (n_dims < 2 || n_dims > 64) throw DataError("corrupt checkpoint: " + file.string());
    net.seed = take<std::uint64_t>(in, file);
    for (std::uint32_t i = 0; i < n_dims; ++i)
        net.layer_dims.push_back(static_cast<int>(take<std::uint32_t>(in, file)));
    for (std::uint32_t l = 0; l + 1 < n_dims; ++l) {
        const Index rows = net.layer_dims[l], cols = net.layer_dims[l + 1];
        net.weights.push_back(take_f32_matrix(in, rows, cols, file));
        net.biases.push_back(take_f32_matrix(in, cols, 1, file));
    }
    return net;
}

void save_codes(const fs::path& file, const HashCodes& codes) {
    const PackedCodes packed = pack(codes);
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + file.string());
    out.write(kCodeMagic, sizeof(kCodeMagic));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(packed.bits));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(packed.count));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(packed.words_per_code));
    out.write(reinterpret_cast<const char*>(packed.words.data()),
              static_cast<std::streamsize>(packed.words.size() * sizeof(std::uint64_t)));
    if (!out) throw DataError("short write: " + file.string());
}

HashCodes load_codes(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open: " + file.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCodeMagic, sizeof(magic)) != 0)
        throw DataError("not a code file: " + file.string());

    PackedCodes packed;
    packed.bits = static_cast<int>(take<std::uint32_t>(in, file));
    packed.count = static_cast<Index>(take<std::uint64_t>(in, file));
    packed.words_per_code = static_cast<int>(take<std::uint32_t>(in, file));
    if (packed.bits < 1 || packed.words_per_code != (packed.bits + 63) / 64)
        throw DataError("corrupt code file: " + file.string());
    packed.words.resize(static_cast<std::size_t>(packed.count) * packed.words_per_code);
    in.read(reinterpret_cast<char*>(packed.words.data()),
            static_cast<std::streamsize>(packed.words.size() * sizeof(std::uint64_t)));
    if (!in) throw DataError("truncated code file: " + file.string());
    return unpack(packed);
}

nlohmann::json split_to_json(const DatasetSplit& split) {
    nlohmann::json j;
    j["original_indices"] = split.original_indices;
    j["incremental_indices"] = split.incremental_indices;
    j["query_indices"] = split.query_indices;
    j["retrieval_indices"] = split.retrieval_indices;
    j["original_classes"] = split.original_classes;
    j["incremental_classes"] = split.incremental_classes;
    j["seed"] = split.seed;
    j["mixed_label_count"] = split.mixed_label_count;
    return j;
}

DatasetSplit split_from_json(const nlohmann::json& j) {
    DatasetSplit split;
    split.original_indices = j.at("original_indices").get<std::vector<Index>>();
    split.incremental_indices = j.at("incremental_indices").get<std::vector<Index>>();
    split.query_indices = j.at("query_indices").get<std::vector<Index>>();
    split.retrieval_indices = j.at("retrieval_indices").get<std::vector<Index>>();
    split.original_classes = j.at("original_classes").get<std::vector<int>>();
    split.incremental_classes = j.at("incremental_classes").get<std::vector<int>>();
    split.seed = j.at("seed").get<std::uint64_t>();
    split.mixed_label_count = j.at("mixed_label_count").get<Index>();
    return split;
}

}  // namespace lch
