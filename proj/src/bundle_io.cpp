#include "lch/bundle_io.hpp"

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

namespace lch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_f32(const fs::path& file, const Matrix& m) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + file.string());
    std::vector<float> row(static_cast<std::size_t>(m.cols()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = static_cast<float>(m(i, j));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!out) throw DataError("short write: " + file.string());
}

Matrix read_f32(const fs::path& file, Index rows, Index cols) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open: " + file.string());
    Matrix m(rows, cols);
    std::vector<float> row(static_cast<std::size_t>(cols));
    for (Index i = 0; i < rows; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
        if (!in) throw DataError("short read: " + file.string());
        for (Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
}

}  // namespace

void write_bundle(const fs::path& dir, const Bundle& bundle, bool force) {
    if (fs::exists(dir / "manifest.json") && !force)
        throw DataError("bundle already exists (use force): " + dir.string());
    fs::create_directories(dir);

    const auto report = validate_bundle(bundle.img, bundle.txt, bundle.labels);
    if (!report.ok()) throw DataError("invalid bundle: " + report.violations.front());

    json manifest;
    manifest["schema_version"] = 1;
    manifest["instances"] = bundle.instances();
    manifest["d_img"] = bundle.img.dim();
    manifest["d_txt"] = bundle.txt.dim();
    manifest["classes"] = bundle.classes();
    manifest["class_names"] = bundle.class_names;
    if (!bundle.generator_config.empty())
        manifest["generator"] = json::parse(bundle.generator_config);
    std::ofstream mf(dir / "manifest.json");
    mf << manifest.dump(2) << "\n";

    write_f32(dir / "img.f32", bundle.img.values);
    write_f32(dir / "txt.f32", bundle.txt.values);

    std::ofstream lf(dir / "labels.u8", std::ios::binary);
    std::vector<unsigned char> lrow(static_cast<std::size_t>(bundle.classes()));
    for (Index i = 0; i < bundle.labels.rows(); ++i) {
        for (Index j = 0; j < bundle.classes(); ++j)
            lrow[static_cast<std::size_t>(j)] = bundle.labels.values(i, j) == 1.0 ? 1 : 0;
        lf.write(reinterpret_cast<const char*>(lrow.data()),
                 static_cast<std::streamsize>(lrow.size()));
    }
}

Bundle read_bundle(const fs::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw DataError("missing manifest: " + (dir / "manifest.json").string());
    json manifest = json::parse(mf, nullptr, /*allow_exceptions=*/false);
    if (manifest.is_discarded()) throw DataError("malformed manifest in " + dir.string());

    const Index n = manifest.at("instances").get<Index>();
    const Index d_img = manifest.at("d_img").get<Index>();
    const Index d_txt = manifest.at("d_txt").get<Index>();
    const Index classes = manifest.at("classes").get<Index>();

    Bundle bundle;
    bundle.img = make_features(Modality::image, read_f32(dir / "img.f32", n, d_img));
    bundle.txt = make_features(Modality::text, read_f32(dir / "txt.f32", n, d_txt));

    std::ifstream lf(dir / "labels.u8", std::ios::binary);
    if (!lf) throw DataError("cannot open: " + (dir / "labels.u8").string());
    Matrix labels(n, classes);
    std::vector<unsigned char> lrow(static_cast<std::size_t>(classes));
    for (Index i = 0; i < n; ++i) {
        lf.read(reinterpret_cast<char*>(lrow.data()), static_cast<std::streamsize>(lrow.size()));
        if (!lf) throw DataError("short read: labels.u8");
        for (Index j = 0; j < classes; ++j) {
            const unsigned char v = lrow[static_cast<std::size_t>(j)];
            if (v > 1) throw DataError("labels.u8 entry outside {0,1}");
            labels(i, j) = v;
        }
    }
    bundle.labels = make_labels(std::move(labels));

    if (manifest.contains("class_names"))
        bundle.class_names = manifest["class_names"].get<std::vector<std::string>>();
    if (manifest.contains("generator")) bundle.generator_config = manifest["generator"].dump();
    return bundle;
}

HyperParams hyperparams_from_json(const json& j) {
    HyperParams hp;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("alpha", hp.alpha);
    get("beta", hp.beta);
    get("gamma", hp.gamma);
    get("lambda", hp.lambda_);
    get("mu", hp.mu);
    get("k", hp.k);
    get("batch_label", hp.batch_label);
    get("batch_image", hp.batch_image);
    get("batch_text", hp.batch_text);
    get("lr_original", hp.lr_original);
    get("lr_lifelong", hp.lr_lifelong);
    get("epochs_original", hp.epochs_original);
    get("epochs_lifelong", hp.epochs_lifelong);
    get("a1", hp.a1);
    get("a2", hp.a2);
    get("dcc_sweeps", hp.dcc_sweeps);
    get("seed", hp.seed);
    validate(hp);
    return hp;
}

json hyperparams_to_json(const HyperParams& hp) {
    return json{{"alpha", hp.alpha},
                {"beta", hp.beta},
                {"gamma", hp.gamma},
                {"lambda", hp.lambda_},
                {"mu", hp.mu},
                {"k", hp.k},
                {"batch_label", hp.batch_label},
                {"batch_image", hp.batch_image},
                {"batch_text", hp.batch_text},
                {"lr_original", hp.lr_original},
                {"lr_lifelong", hp.lr_lifelong},
                {"epochs_original", hp.epochs_original},
                {"epochs_lifelong", hp.epochs_lifelong},
                {"a1", hp.a1},
                {"a2", hp.a2},
                {"dcc_sweeps", hp.dcc_sweeps},
                {"seed", hp.seed}};
}

HyperParams load_hyperparams(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open config: " + file.string());
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw DataError("malformed JSON config: " + file.string());
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const std::set<std::string> known = {
            "alpha", "beta", "gamma", "lambda", "mu", "k",
            "batch_label", "batch_image", "batch_text",
            "lr_original", "lr_lifelong", "epochs_original", "epochs_lifelong",
            "a1", "a2", "dcc_sweeps", "seed"};
        if (!known.count(it.key())) throw DataError("unknown config key: " + it.key());
    }
    return hyperparams_from_json(j);
}

namespace {
struct Preset {
    const char* name;
    double alpha, beta, gamma, lambda, mu;
};
// Weight settings tuned per dataset and task direction.
constexpr Preset kPresets[] = {
    {"mirflickr-t2i", 10, 10, 1, 10, 10},
    {"mirflickr-i2t", 10, 100, 1, 10, 100},
    {"nuswide-t2i", 10000, 12, 1, 200, 50},
    {"nuswide-i2t", 10000, 10, 1, 200, 50},
    {"wiki-t2i", 10000, 7, 0.6, 1000, 1},
    {"wiki-i2t", 10000, 9, 0.8, 200, 1},
};
}  // namespace

bool apply_preset(const std::string& name, HyperParams& hp) {
    for (const auto& p : kPresets) {
        if (name == p.name) {
            hp.alpha = p.alpha;
            hp.beta = p.beta;
            hp.gamma = p.gamma;
            hp.lambda_ = p.lambda;
            hp.mu = p.mu;
            return true;
        }
    }
    return false;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& p : kPresets) names.emplace_back(p.name);
    return names;
}

}  // namespace lch
