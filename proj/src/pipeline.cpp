#include "lch/pipeline.hpp"

namespace lch {

HashCodes encode(const NetworkParams& net, const Matrix& instance_rows) {
    const Matrix out = forward(net, instance_rows).values;
    Matrix codes = out.unaryExpr([](double v) { return code_sign(v); });
    return HashCodes{std::move(codes)};
}

Matrix gather_feature_rows(const Matrix& values, const std::vector<Index>& idx) {
    Matrix out(static_cast<Index>(idx.size()), values.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Index>(r)) = values.row(idx[r]);
    return out;
}

LabelMatrix gather_label_rows(const LabelMatrix& labels, const std::vector<Index>& idx) {
    return LabelMatrix{gather_feature_rows(labels.values, idx)};
}

DbCodes merge_db(const HashCodes& codes_img, const HashCodes& codes_txt,
                 const std::vector<Index>& items, const HashCodes* codes_img_extra,
                 const HashCodes* codes_txt_extra, const std::vector<Index>* items_extra) {
    if (codes_img.count() != static_cast<Index>(items.size()) ||
        codes_txt.count() != static_cast<Index>(items.size()))
        throw ShapeError("merge_db: code columns must match item count");

    DbCodes db;
    db.items = items;
    if (!codes_img_extra) {
        db.img = codes_img;
        db.txt = codes_txt;
        return db;
    }
    if (!codes_txt_extra || !items_extra ||
        codes_img_extra->count() != static_cast<Index>(items_extra->size()))
        throw ShapeError("merge_db: inconsistent extra codes");

    const Index total = codes_img.count() + codes_img_extra->count();
    Matrix img(codes_img.bits(), total), txt(codes_txt.bits(), total);
    img << codes_img.values, codes_img_extra->values;
    txt << codes_txt.values, codes_txt_extra->values;
    db.img = HashCodes{std::move(img)};
    db.txt = HashCodes{std::move(txt)};
    db.items.insert(db.items.end(), items_extra->begin(), items_extra->end());
    return db;
}

TaskMaps evaluate_retrieval(const Bundle& bundle, const std::vector<Index>& query_indices,
                            const DbCodes& db, const NetworkParams& img_net,
                            const NetworkParams& txt_net, int radius) {
    if (query_indices.empty()) throw DataError("evaluate_retrieval: no queries");

    const HashCodes q_img = encode(img_net, gather_feature_rows(bundle.img.values, query_indices));
    const HashCodes q_txt = encode(txt_net, gather_feature_rows(bundle.txt.values, query_indices));

    const RelevanceMatrix rel = relevance_from_labels(
        gather_label_rows(bundle.labels, query_indices), gather_label_rows(bundle.labels, db.items));

    const PackedCodes pq_img = pack(q_img), pq_txt = pack(q_txt);
    const PackedCodes pdb_img = pack(db.img), pdb_txt = pack(db.txt);

    TaskMaps maps;
    maps.i2t = mean_average_precision(rank_database(pq_img, pdb_txt), rel);
    maps.t2i = mean_average_precision(rank_database(pq_txt, pdb_img), rel);
    maps.i2t_lookup = hash_lookup_precision(pq_img, pdb_txt, rel, radius);
    maps.t2i_lookup = hash_lookup_precision(pq_txt, pdb_img, rel, radius);
    return maps;
}

}  // namespace lch
