#pragma once

#include "lch/data_model.hpp"

namespace lch {

// Cosine similarity between multi-hot label rows; graded supervision in [0,1].
SimilarityMatrix multi_label_similarity(const LabelMatrix& l1, const LabelMatrix& l2);

// Binary supervision: 1 iff the two rows share at least one class.
SimilarityMatrix single_label_similarity(const LabelMatrix& l1, const LabelMatrix& l2);

// Raw label dot product (shared-class count). Off by default everywhere;
// kept as the un-binarized alternative to single_label_similarity.
SimilarityMatrix label_dot_similarity(const LabelMatrix& l1, const LabelMatrix& l2);

// ReLU-clamped cosine between code columns: Q_ij = max(0, cos(U_i, V_j)).
SimilarityMatrix representation_similarity(const ContinuousCodes& u, const ContinuousCodes& v);

// Column-normalized copy; throws NumericalError on a near-zero column.
Matrix normalize_columns(const Matrix& m, const char* what);
// Row-normalized copy; throws DataError on a zero-norm row.
Matrix normalize_rows(const Matrix& m, const char* what);

}  // namespace lch
