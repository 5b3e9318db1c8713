#include "lch/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "lch/retrieval.hpp"
#include "lch/rng.hpp"

namespace lch {

namespace {

// Random row-orthonormal prototypes when dim >= classes, else random unit rows.
Matrix make_prototypes(int classes, int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix raw(classes, dim);
    for (Index i = 0; i < raw.rows(); ++i)
        for (Index j = 0; j < raw.cols(); ++j) raw(i, j) = gauss(rng);
    if (dim >= classes) {
        // Gram-Schmidt over rows.
        for (Index i = 0; i < raw.rows(); ++i) {
            for (Index p = 0; p < i; ++p) raw.row(i) -= raw.row(i).dot(raw.row(p)) * raw.row(p);
            raw.row(i) /= raw.row(i).norm();
        }
    } else {
        for (Index i = 0; i < raw.rows(); ++i) raw.row(i) /= raw.row(i).norm();
    }
    return raw;
}

int ring_distance(int a, int b, int classes) {
    const int d = std::abs(a - b);
    return std::min(d, classes - d);
}

int sample_cardinality(const std::vector<std::pair<int, double>>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    for (const auto& [card, p] : probs) {
        if (u < p) return card;
        u -= p;
    }
    return probs.back().first;
}

}  // namespace

Bundle generate(const SynthConfig& config) {
    if (config.classes < 2) throw DataError("synth: classes must be >= 2");
    if (config.per_class < 1) throw DataError("synth: per_class must be >= 1");
    if (config.d_img < 2 || config.d_txt < 2) throw DataError("synth: dims must be >= 2");
    if (config.noise_sigma < 0) throw DataError("synth: noise_sigma must be >= 0");
    if (config.co_occurrence < 0 || config.co_occurrence > 1)
        throw DataError("synth: co_occurrence must lie in [0,1]");
    if (config.label_cardinality_probs.empty())
        throw DataError("synth: empty label cardinality table");
    double prob_sum = 0;
    for (const auto& [card, p] : config.label_cardinality_probs) {
        if (card < 1 || card > config.classes)
            throw DataError("synth: cardinality outside [1, classes]");
        if (p < 0) throw DataError("synth: negative cardinality probability");
        prob_sum += p;
    }
    if (std::abs(prob_sum - 1.0) > 1e-9)
        throw DataError("synth: cardinality probabilities must sum to 1");

    auto proto_rng = make_rng(config.seed, 0x9070);
    const Matrix proto_img = make_prototypes(config.classes, config.d_img, proto_rng);
    const Matrix proto_txt = make_prototypes(config.classes, config.d_txt, proto_rng);

    const Index n = static_cast<Index>(config.classes) * config.per_class;
    Matrix img(n, config.d_img), txt(n, config.d_txt);
    Matrix labels = Matrix::Zero(n, config.classes);

    for (Index i = 0; i < n; ++i) {
        auto rng = make_rng(config.seed, 0x100000 + static_cast<std::uint64_t>(i));
        const int primary = static_cast<int>(i % config.classes);
        const int cardinality = sample_cardinality(config.label_cardinality_probs, rng);

        std::vector<int> chosen{primary};
        while (static_cast<int>(chosen.size()) < cardinality) {
            std::vector<double> weights(static_cast<std::size_t>(config.classes), 0.0);
            double total = 0.0;
            for (int c = 0; c < config.classes; ++c) {
                if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
                double w = 1.0;
                if (ring_distance(primary, c, config.classes) == 1)
                    w += config.co_occurrence * config.classes;
                weights[static_cast<std::size_t>(c)] = w;
                total += w;
            }
            std::uniform_real_distribution<double> unit(0.0, total);
            double u = unit(rng);
            int pick = -1;
            for (int c = 0; c < config.classes; ++c) {
                if (weights[static_cast<std::size_t>(c)] == 0.0) continue;
                if (u < weights[static_cast<std::size_t>(c)]) { pick = c; break; }
                u -= weights[static_cast<std::size_t>(c)];
            }
            if (pick < 0) pick = static_cast<int>(chosen.size()) % config.classes;  // fp fallback
            chosen.push_back(pick);
        }
        for (int c : chosen) labels(i, c) = 1.0;

        std::normal_distribution<double> gauss(0.0, 1.0);
        auto emit = [&](const Matrix& protos, Index dim, auto&& row) {
            Vector base = Vector::Zero(dim);
            for (int c : chosen) base += protos.row(c).transpose();
            const double norm = base.norm();
            if (norm < 1e-9) throw NumericalError("synth: degenerate prototype sum");
            base /= norm;
            for (Index j = 0; j < dim; ++j) row(j) = base(j) + config.noise_sigma * gauss(rng);
        };
        emit(proto_img, config.d_img, [&](Index j) -> double& { return img(i, j); });
        emit(proto_txt, config.d_txt, [&](Index j) -> double& { return txt(i, j); });
    }

    Bundle bundle;
    bundle.img = make_features(Modality::image, std::move(img));
    bundle.txt = make_features(Modality::text, std::move(txt));
    bundle.labels = make_labels(std::move(labels));
    for (int c = 0; c < config.classes; ++c) bundle.class_names.push_back("class_" + std::to_string(c));

    nlohmann::json echo;
    echo["classes"] = config.classes;
    echo["per_class"] = config.per_class;
    echo["d_img"] = config.d_img;
    echo["d_txt"] = config.d_txt;
    echo["noise_sigma"] = config.noise_sigma;
    nlohmann::json cardinality;
    for (const auto& [card, p] : config.label_cardinality_probs)
        cardinality[std::to_string(card)] = p;
    echo["label_cardinality_probs"] = cardinality;
    echo["co_occurrence"] = config.co_occurrence;
    echo["seed"] = config.seed;
    bundle.generator_config = echo.dump();
    return bundle;
}

namespace {

std::vector<std::vector<Index>> rank_by_cosine(const Matrix& features,
                                               const std::vector<Index>& queries,
                                               const std::vector<Index>& database) {
    Matrix feat = features;
    for (Index i = 0; i < feat.rows(); ++i) {
        const double norm = feat.row(i).norm();
        if (norm > 0) feat.row(i) /= norm;
    }
    std::vector<std::vector<Index>> rankings;
    rankings.reserve(queries.size());
    std::vector<std::pair<double, Index>> scored(database.size());
    for (Index q : queries) {
        for (std::size_t j = 0; j < database.size(); ++j)
            scored[j] = {-feat.row(q).dot(feat.row(database[j])), static_cast<Index>(j)};
        std::stable_sort(scored.begin(), scored.end());
        std::vector<Index> order(database.size());
        for (std::size_t j = 0; j < database.size(); ++j) order[j] = scored[j].second;
        rankings.push_back(std::move(order));
    }
    return rankings;
}

LabelMatrix gather_labels(const LabelMatrix& labels, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), labels.classes());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = labels.values.row(idx[r]);
    return LabelMatrix{std::move(out)};
}

}  // namespace

OracleMap feature_space_oracle(const Bundle& bundle, const DatasetSplit& split) {
    const RelevanceMatrix rel = relevance_from_labels(gather_labels(bundle.labels, split.query_indices),
                                                      gather_labels(bundle.labels, split.retrieval_indices));
    OracleMap oracle;
    oracle.i2t = mean_average_precision(
        rank_by_cosine(bundle.img.values, split.query_indices, split.retrieval_indices), rel);
    oracle.t2i = mean_average_precision(
        rank_by_cosine(bundle.txt.values, split.query_indices, split.retrieval_indices), rel);
    return oracle;
}

}  // namespace lch
