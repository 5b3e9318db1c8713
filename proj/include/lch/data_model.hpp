#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lch/errors.hpp"

namespace lch {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Sign with the tie broken to +1, so codes never contain 0.
inline double code_sign(double v) { return v >= 0.0 ? 1.0 : -1.0; }

enum class Modality { image, text, label };

const char* modality_name(Modality m);

// Dense per-instance feature block, one instance per row.
struct FeatureMatrix {
    Modality modality = Modality::image;
    Matrix values;  // rows x dim

    Index rows() const { return values.rows(); }
    Index dim() const { return values.cols(); }
};

FeatureMatrix make_features(Modality modality, Matrix values);

// Multi-hot class labels, one instance per row. Every row has at least one 1.
struct LabelMatrix {
    Matrix values;  // rows x classes, entries in {0,1}

    Index rows() const { return values.rows(); }
    Index classes() const { return values.cols(); }
};

LabelMatrix make_labels(Matrix values);

// Bit-packed codes: bit 1 for +1, bit 0 for -1; 64-bit words in little-endian
// word order, one word block per instance, padding bits zero.
struct PackedCodes {
    int bits = 0;
    Index count = 0;
    int words_per_code = 0;
    std::vector<std::uint64_t> words;

    const std::uint64_t* row(Index i) const { return words.data() + i * words_per_code; }
};

// {-1,+1} code matrix, logically bits x count (one instance per column).
struct HashCodes {
    Matrix values;  // bits x count

    int bits() const { return static_cast<int>(values.rows()); }
    Index count() const { return values.cols(); }
};

HashCodes make_codes(Matrix values);
HashCodes random_codes(int bits, Index count, std::uint64_t seed);
PackedCodes pack(const HashCodes& codes);
HashCodes unpack(const PackedCodes& packed);
std::uint64_t code_checksum(const HashCodes& codes);

// Real-valued network outputs, logically bits x count like HashCodes.
struct ContinuousCodes {
    Matrix values;  // bits x count

    int bits() const { return static_cast<int>(values.rows()); }
    Index count() const { return values.cols(); }
};

ContinuousCodes make_continuous(Matrix values);

enum class SimilarityKind { multi_label, single_label, representation, label_dot };

struct SimilarityMatrix {
    SimilarityKind kind = SimilarityKind::multi_label;
    Matrix values;

    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }
};

SimilarityMatrix make_similarity(SimilarityKind kind, Matrix values);

// Class-level split into an original set and an incremental (new-category)
// set, plus the query/retrieval partition used for evaluation.
struct DatasetSplit {
    std::vector<Index> original_indices;
    std::vector<Index> incremental_indices;
    std::vector<Index> query_indices;
    std::vector<Index> retrieval_indices;
    std::vector<int> original_classes;     // sorted
    std::vector<int> incremental_classes;  // in arrival order
    std::uint64_t seed = 0;
    // Instances whose labels span both class groups; they go to the
    // incremental set since they are unseen during original training.
    Index mixed_label_count = 0;
};

struct HyperParams {
    double alpha = 10.0;
    double beta = 100.0;
    double gamma = 1.0;
    double lambda_ = 10.0;
    double mu = 100.0;
    int k = 16;
    int batch_label = 128;
    int batch_image = 128;
    int batch_text = 128;
    double lr_original = 1e-3;
    double lr_lifelong = 1e-6;
    int epochs_original = 50;
    int epochs_lifelong = 50;
    Index a1 = 2000;
    Index a2 = 2000;
    int dcc_sweeps = 1;
    std::uint64_t seed = 1;
};

void validate(const HyperParams& hp);

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

ValidationReport validate_bundle(const FeatureMatrix& img, const FeatureMatrix& txt,
                                 const LabelMatrix& labels);

// Splits by class: `incremental_class_count` classes (chosen by seeded shuffle,
// kept in arrival order) form the incremental set together with every instance
// carrying any of them. Per class, about `query_fraction` of its instances go
// to the query set; the rest form the retrieval database.
DatasetSplit make_split(const LabelMatrix& labels, int incremental_class_count,
                        double query_fraction, std::uint64_t seed);

}  // namespace lch
