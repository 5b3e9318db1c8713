#include "lch/similarity.hpp"

namespace lch {

namespace {
constexpr double kNormFloor = 1e-12;
}

Matrix normalize_rows(const Matrix& m, const char* what) {
    Matrix out = m;
    for (Index i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        if (norm < kNormFloor)
            throw DataError(std::string(what) + ": zero-norm row " + std::to_string(i));
        out.row(i) /= norm;
    }
    return out;
}

Matrix normalize_columns(const Matrix& m, const char* what) {
    Matrix out = m;
    for (Index j = 0; j < m.cols(); ++j) {
        const double norm = m.col(j).norm();
        if (norm < kNormFloor)
            throw NumericalError(std::string(what) + ": zero-norm column " + std::to_string(j));
        out.col(j) /= norm;
    }
    return out;
}

SimilarityMatrix multi_label_similarity(const LabelMatrix& l1, const LabelMatrix& l2) {
    if (l1.classes() != l2.classes())
        throw ShapeError("multi_label_similarity: class spaces differ");
    const Matrix a = normalize_rows(l1.values, "multi_label_similarity");
    const Matrix b = normalize_rows(l2.values, "multi_label_similarity");
    Matrix s = a * b.transpose();
    // Cosines of non-negative vectors; clip float fuzz at the [0,1] borders.
    s = s.cwiseMax(0.0).cwiseMin(1.0);
    return make_similarity(SimilarityKind::multi_label, std::move(s));
}

SimilarityMatrix single_label_similarity(const LabelMatrix& l1, const LabelMatrix& l2) {
    if (l1.classes() != l2.classes())
        throw ShapeError("single_label_similarity: class spaces differ");
    Matrix dots = l1.values * l2.values.transpose();
    Matrix s = (dots.array() > 0.0).cast<double>();
    return make_similarity(SimilarityKind::single_label, std::move(s));
}

SimilarityMatrix label_dot_similarity(const LabelMatrix& l1, const LabelMatrix& l2) {
    if (l1.classes() != l2.classes())
        throw ShapeError("label_dot_similarity: class spaces differ");
    return make_similarity(SimilarityKind::label_dot, l1.values * l2.values.transpose());
}

SimilarityMatrix representation_similarity(const ContinuousCodes& u, const ContinuousCodes& v) {
    if (u.bits() != v.bits()) throw ShapeError("representation_similarity: bit counts differ");
    const Matrix un = normalize_columns(u.values, "representation_similarity");
    const Matrix vn = normalize_columns(v.values, "representation_similarity");
    Matrix q = (un.transpose() * vn).cwiseMax(0.0).cwiseMin(1.0);
    return make_similarity(SimilarityKind::representation, std::move(q));
}

}  // namespace lch
