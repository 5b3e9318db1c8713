#pragma once

#include <optional>
#include <vector>

#include "lch/bundle_io.hpp"
#include "lch/network.hpp"
#include "lch/retrieval.hpp"

namespace lch {

// sign(forward(net, rows)), one code column per input row.
HashCodes encode(const NetworkParams& net, const Matrix& instance_rows);

// Database code matrices plus the bundle indices their columns refer to.
struct DbCodes {
    HashCodes img, txt;
    std::vector<Index> items;
};

DbCodes merge_db(const HashCodes& codes_img, const HashCodes& codes_txt,
                 const std::vector<Index>& items, const HashCodes* codes_img_extra,
                 const HashCodes* codes_txt_extra, const std::vector<Index>* items_extra);

struct TaskMaps {
    double i2t = 0, t2i = 0;
    double i2t_lookup = 0, t2i_lookup = 0;  // radius-limited hash lookup precision
};

// Queries are encoded through the networks; I->T ranks text-side database
// codes by image-side query codes, T->I the reverse.
TaskMaps evaluate_retrieval(const Bundle& bundle, const std::vector<Index>& query_indices,
                            const DbCodes& db, const NetworkParams& img_net,
                            const NetworkParams& txt_net, int radius = 2);

LabelMatrix gather_label_rows(const LabelMatrix& labels, const std::vector<Index>& idx);
Matrix gather_feature_rows(const Matrix& values, const std::vector<Index>& idx);

}  // namespace lch
