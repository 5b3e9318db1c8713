#include "lch/data_model.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include "lch/rng.hpp"

namespace lch {

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::image: return "image";
        case Modality::text: return "text";
        case Modality::label: return "label";
    }
    return "?";
}

FeatureMatrix make_features(Modality modality, Matrix values) {
    if (values.rows() <= 0 || values.cols() <= 0)
        throw DataError("feature matrix must be non-empty");
    if (!values.allFinite()) throw DataError("feature matrix contains non-finite entries");
    return FeatureMatrix{modality, std::move(values)};
}

LabelMatrix make_labels(Matrix values) {
    if (values.rows() <= 0 || values.cols() <= 0)
        throw DataError("label matrix must be non-empty");
    for (Index i = 0; i < values.rows(); ++i) {
        bool any = false;
        for (Index j = 0; j < values.cols(); ++j) {
            const double v = values(i, j);
            if (v != 0.0 && v != 1.0)
                throw DataError("label entry outside {0,1} at row " + std::to_string(i));
            any = any || v == 1.0;
        }
        if (!any) throw DataError("unlabeled instance at row " + std::to_string(i));
    }
    return LabelMatrix{std::move(values)};
}

HashCodes make_codes(Matrix values) {
    if (values.rows() <= 0 || values.cols() <= 0) throw DataError("hash codes must be non-empty");
    for (Index j = 0; j < values.cols(); ++j)
        for (Index i = 0; i < values.rows(); ++i)
            if (values(i, j) != 1.0 && values(i, j) != -1.0)
                throw DataError("hash code entry outside {-1,+1}");
    return HashCodes{std::move(values)};
}

HashCodes random_codes(int bits, Index count, std::uint64_t seed) {
    auto rng = make_rng(seed, 0xc0de);
    std::bernoulli_distribution coin(0.5);
    Matrix values(bits, count);
    for (Index j = 0; j < count; ++j)
        for (int i = 0; i < bits; ++i) values(i, j) = coin(rng) ? 1.0 : -1.0;
    return HashCodes{std::move(values)};
}

PackedCodes pack(const HashCodes& codes) {
    PackedCodes p;
    p.bits = codes.bits();
    p.count = codes.count();
    p.words_per_code = (p.bits + 63) / 64;
    p.words.assign(static_cast<std::size_t>(p.count) * p.words_per_code, 0);
    for (Index j = 0; j < p.count; ++j) {
        std::uint64_t* row = p.words.data() + j * p.words_per_code;
        for (int i = 0; i < p.bits; ++i)
            if (codes.values(i, j) > 0.0) row[i / 64] |= (std::uint64_t{1} << (i % 64));
    }
    return p;
}

HashCodes unpack(const PackedCodes& packed) {
    Matrix values(packed.bits, packed.count);
    for (Index j = 0; j < packed.count; ++j) {
        const std::uint64_t* row = packed.row(j);
        for (int i = 0; i < packed.bits; ++i)
            values(i, j) = (row[i / 64] >> (i % 64)) & 1 ? 1.0 : -1.0;
    }
    return HashCodes{std::move(values)};
}

std::uint64_t code_checksum(const HashCodes& codes) {
    const PackedCodes p = pack(codes);
    std::uint64_t h = fnv1a(&p.bits, sizeof(p.bits));
    h = fnv1a(&p.count, sizeof(p.count), h);
    return fnv1a(p.words.data(), p.words.size() * sizeof(std::uint64_t), h);
}

ContinuousCodes make_continuous(Matrix values) {
    if (!values.allFinite()) throw NumericalError("continuous codes contain non-finite entries");
    return ContinuousCodes{std::move(values)};
}

SimilarityMatrix make_similarity(SimilarityKind kind, Matrix values) {
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    switch (kind) {
        case SimilarityKind::multi_label:
        case SimilarityKind::representation:
            if (lo < -1e-12 || hi > 1.0 + 1e-12)
                throw DataError("similarity entries outside [0,1]");
            break;
        case SimilarityKind::single_label:
            for (Index j = 0; j < values.cols(); ++j)
                for (Index i = 0; i < values.rows(); ++i)
                    if (values(i, j) != 0.0 && values(i, j) != 1.0)
                        throw DataError("single-label similarity entries outside {0,1}");
            break;
        case SimilarityKind::label_dot:
            if (lo < 0.0) throw DataError("label-dot similarity entries must be non-negative");
            break;
    }
    return SimilarityMatrix{kind, std::move(values)};
}

void validate(const HyperParams& hp) {
    auto bad = [](const std::string& what) { throw DataError("hyperparams: " + what); };
    if (hp.alpha < 0 || hp.beta < 0 || hp.gamma < 0 || hp.lambda_ < 0 || hp.mu < 0)
        bad("loss weights must be >= 0");
    if (hp.k < 1) bad("k must be >= 1");
    if (hp.batch_label < 1 || hp.batch_image < 1 || hp.batch_text < 1)
        bad("batch sizes must be >= 1");
    if (hp.lr_original <= 0 || hp.lr_lifelong <= 0) bad("learning rates must be > 0");
    if (hp.epochs_original < 0 || hp.epochs_lifelong < 0) bad("epoch counts must be >= 0");
    if (hp.a1 < 0 || hp.a2 < 0) bad("a1/a2 must be >= 0");
    if (hp.dcc_sweeps < 1) bad("dcc_sweeps must be >= 1");
}

ValidationReport validate_bundle(const FeatureMatrix& img, const FeatureMatrix& txt,
                                 const LabelMatrix& labels) {
    ValidationReport report;
    auto note = [&](const std::string& v) { report.violations.push_back(v); };

    if (img.rows() != txt.rows() || img.rows() != labels.rows())
        note("row count mismatch: img=" + std::to_string(img.rows()) +
             " txt=" + std::to_string(txt.rows()) + " labels=" + std::to_string(labels.rows()));
    if (!img.values.allFinite()) note("non-finite image features");
    if (!txt.values.allFinite()) note("non-finite text features");
    for (Index i = 0; i < labels.rows(); ++i) {
        bool any = false;
        for (Index j = 0; j < labels.classes(); ++j) {
            const double v = labels.values(i, j);
            if (v != 0.0 && v != 1.0) {
                note("label entry outside {0,1} at row " + std::to_string(i));
                break;
            }
            any = any || v == 1.0;
        }
        if (!any) note("unlabeled instance at row " + std::to_string(i));
    }
    return report;
}

DatasetSplit make_split(const LabelMatrix& labels, int incremental_class_count,
                        double query_fraction, std::uint64_t seed) {
    const int total_classes = static_cast<int>(labels.classes());
    if (incremental_class_count < 0 || incremental_class_count >= total_classes)
        throw DataError("incremental_class_count must lie in [0, classes)");
    if (!(query_fraction > 0.0 && query_fraction < 1.0))
        throw DataError("query_fraction must lie in (0,1)");

    auto rng = make_rng(seed, 0x5917);

    std::vector<int> class_order(total_classes);
    std::iota(class_order.begin(), class_order.end(), 0);
    std::shuffle(class_order.begin(), class_order.end(), rng);

    DatasetSplit split;
    split.seed = seed;
    split.incremental_classes.assign(class_order.begin(),
                                     class_order.begin() + incremental_class_count);
    split.original_classes.assign(class_order.begin() + incremental_class_count,
                                  class_order.end());
    std::sort(split.original_classes.begin(), split.original_classes.end());

    std::unordered_set<int> incr_set(split.incremental_classes.begin(),
                                     split.incremental_classes.end());
    const Index n_rows = labels.rows();
    for (Index i = 0; i < n_rows; ++i) {
        bool has_incr = false, has_orig = false;
        for (Index c = 0; c < total_classes; ++c) {
            if (labels.values(i, c) != 1.0) continue;
            if (incr_set.count(static_cast<int>(c)))
                has_incr = true;
            else
                has_orig = true;
        }
        if (has_incr) {
            split.incremental_indices.push_back(i);
            if (has_orig) ++split.mixed_label_count;
        } else {
            split.original_indices.push_back(i);
        }
    }

    // Per-class query sampling: for each class, about query_fraction of its
    // members end up in the query set; multi-label instances count for every
    // class they carry.
    std::vector<char> is_query(static_cast<std::size_t>(n_rows), 0);
    for (int c = 0; c < total_classes; ++c) {
        std::vector<Index> members;
        for (Index i = 0; i < n_rows; ++i)
            if (labels.values(i, c) == 1.0) members.push_back(i);
        if (members.empty()) throw DataError("class " + std::to_string(c) + " has no instances");
        const auto target = static_cast<Index>(
            std::llround(query_fraction * static_cast<double>(members.size())));
        Index already = 0;
        std::vector<Index> candidates;
        for (Index i : members) {
            if (is_query[static_cast<std::size_t>(i)])
                ++already;
            else
                candidates.push_back(i);
        }
        std::shuffle(candidates.begin(), candidates.end(), rng);
        for (Index t = already; t < target && !candidates.empty(); ++t) {
            is_query[static_cast<std::size_t>(candidates.back())] = 1;
            candidates.pop_back();
        }
    }
    for (Index i = 0; i < n_rows; ++i)
        (is_query[static_cast<std::size_t>(i)] ? split.query_indices : split.retrieval_indices)
            .push_back(i);

    // Every class must keep at least one database member.
    for (int c = 0; c < total_classes; ++c) {
        bool found = false;
        for (Index i : split.retrieval_indices)
            if (labels.values(i, c) == 1.0) { found = true; break; }
        if (!found)
            throw DataError("class " + std::to_string(c) + " would be empty in retrieval set");
    }
    return split;
}

}  // namespace lch
