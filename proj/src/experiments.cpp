#include "lch/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <numeric>
#include <set>

#include "lch/rng.hpp"

namespace lch {

namespace {

std::vector<Index> intersect(const std::vector<Index>& a, const std::vector<Index>& b) {
    std::set<Index> in_b(b.begin(), b.end());
    std::vector<Index> out;
    for (Index i : a)
        if (in_b.count(i)) out.push_back(i);
    return out;
}

// Arrival stage per instance: the earliest schedule group among its
// incremental classes, or -1 for original instances.
std::vector<int> arrival_stages(const LabelMatrix& labels, const DatasetSplit& split,
                                const std::vector<std::vector<int>>& groups) {
    std::vector<int> class_stage(static_cast<std::size_t>(labels.classes()), -1);
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int c : groups[g]) class_stage[static_cast<std::size_t>(c)] = static_cast<int>(g);

    std::vector<int> stage(static_cast<std::size_t>(labels.rows()), -1);
    for (Index i : split.incremental_indices) {
        int first = static_cast<int>(groups.size());
        for (Index c = 0; c < labels.classes(); ++c) {
            if (labels.values(i, c) != 1.0) continue;
            const int s = class_stage[static_cast<std::size_t>(c)];
            if (s >= 0) first = std::min(first, s);
        }
        stage[static_cast<std::size_t>(i)] = first;
    }
    return stage;
}

}  // namespace

ForgettingResult forgetting_protocol(const Bundle& bundle, const std::vector<int>& schedule,
                                     const OriginalTrainOptions& orig_options,
                                     const LifelongTrainOptions& life_options,
                                     double query_fraction, int radius) {
    int total_incremental = 0;
    bool any_positive = false;
    for (int e : schedule) {
        if (e < 0) throw DataError("forgetting: negative schedule entry");
        if (e == 0 && schedule.size() > 1) throw DataError("forgetting: zero entry in schedule");
        total_incremental += e;
        any_positive = any_positive || e > 0;
    }
    if (schedule.empty()) throw DataError("forgetting: empty schedule");
    if (total_incremental >= bundle.classes())
        throw DataError("forgetting: schedule exceeds available classes");

    ForgettingResult result;
    result.split = make_split(bundle.labels, total_incremental, query_fraction,
                              orig_options.hp.seed);
    result.oracle = feature_space_oracle(bundle, result.split);

    std::vector<std::vector<int>> groups;
    {
        std::size_t offset = 0;
        for (int e : schedule) {
            if (e == 0) continue;
            groups.emplace_back(result.split.incremental_classes.begin() + offset,
                                result.split.incremental_classes.begin() + offset + e);
            offset += static_cast<std::size_t>(e);
        }
    }
    const std::vector<int> stages = arrival_stages(bundle.labels, result.split, groups);

    const auto orig = train_original(bundle, result.split, orig_options);

    const std::vector<Index> original_queries =
        intersect(result.split.query_indices, result.split.original_indices);
    if (original_queries.empty()) throw DataError("forgetting: no original-class queries");

    // Stage 0: original phase only.
    {
        const DbCodes db = merge_db(orig.codes_img, orig.codes_txt, orig.train_indices, nullptr,
                                    nullptr, nullptr);
        const TaskMaps maps =
            evaluate_retrieval(bundle, original_queries, db, orig.img_net, orig.txt_net, radius);
        ForgettingStageRow row;
        row.stage = 0;
        row.classes_present = 0;
        row.map_i2t_original_queries = maps.i2t;
        row.map_t2i_original_queries = maps.t2i;
        row.map_i2t_all_queries = maps.i2t;
        row.map_t2i_all_queries = maps.t2i;
        row.control_map_i2t_all = maps.i2t;
        row.control_map_t2i_all = maps.t2i;
        result.rows.push_back(row);
    }

    NetworkParams img_net = orig.img_net, txt_net = orig.txt_net;
    HashCodes coded_img = orig.codes_img, coded_txt = orig.codes_txt;
    std::vector<Index> coded_items = orig.train_indices;
    int classes_present = 0;

    for (std::size_t g = 0; g < groups.size(); ++g) {
        classes_present += static_cast<int>(groups[g].size());

        // Stage-local split: everything coded so far plays the original role;
        // this stage's arrivals are the incremental set.
        DatasetSplit stage_split = result.split;
        stage_split.original_indices.clear();
        stage_split.incremental_indices.clear();
        for (Index i = 0; i < bundle.instances(); ++i) {
            const int s = stages[static_cast<std::size_t>(i)];
            if (s < 0 || s < static_cast<int>(g))
                stage_split.original_indices.push_back(i);
            else if (s == static_cast<int>(g))
                stage_split.incremental_indices.push_back(i);
        }

        LifelongTrainOptions stage_options = life_options;
        stage_options.hp.seed = splitmix64(life_options.hp.seed ^ (0xa000 + g));
        const auto life = train_lifelong(bundle, stage_split, img_net, txt_net, coded_img,
                                         coded_txt, coded_items, stage_options);
        img_net = life.img_net;
        txt_net = life.txt_net;
        {
            const DbCodes merged = merge_db(coded_img, coded_txt, coded_items, &life.codes_img_new,
                                            &life.codes_txt_new, &life.incremental_db);
            coded_img = merged.img;
            coded_txt = merged.txt;
            coded_items = merged.items;
        }

        std::vector<Index> available_queries = original_queries;
        for (Index i : result.split.query_indices) {
            const int s = stages[static_cast<std::size_t>(i)];
            if (s >= 0 && s <= static_cast<int>(g)) available_queries.push_back(i);
        }
        std::sort(available_queries.begin(), available_queries.end());

        const DbCodes db = merge_db(coded_img, coded_txt, coded_items, nullptr, nullptr, nullptr);
        const TaskMaps all_maps =
            evaluate_retrieval(bundle, available_queries, db, img_net, txt_net, radius);
        const TaskMaps orig_maps =
            evaluate_retrieval(bundle, original_queries, db, img_net, txt_net, radius);

        // Frozen-model control: the original networks index the arrivals.
        std::vector<Index> arrived_db;
        for (Index i : result.split.retrieval_indices) {
            const int s = stages[static_cast<std::size_t>(i)];
            if (s >= 0 && s <= static_cast<int>(g)) arrived_db.push_back(i);
        }
        const HashCodes ctrl_img =
            encode(orig.img_net, gather_feature_rows(bundle.img.values, arrived_db));
        const HashCodes ctrl_txt =
            encode(orig.txt_net, gather_feature_rows(bundle.txt.values, arrived_db));
        const DbCodes ctrl_db = merge_db(orig.codes_img, orig.codes_txt, orig.train_indices,
                                         &ctrl_img, &ctrl_txt, &arrived_db);
        const TaskMaps ctrl_maps =
            evaluate_retrieval(bundle, available_queries, ctrl_db, orig.img_net, orig.txt_net, radius);

        ForgettingStageRow row;
        row.stage = static_cast<int>(g) + 1;
        row.classes_present = classes_present;
        row.map_i2t_original_queries = orig_maps.i2t;
        row.map_t2i_original_queries = orig_maps.t2i;
        row.map_i2t_all_queries = all_maps.i2t;
        row.map_t2i_all_queries = all_maps.t2i;
        row.control_map_i2t_all = ctrl_maps.i2t;
        row.control_map_t2i_all = ctrl_maps.t2i;
        result.rows.push_back(row);
    }
    return result;
}

namespace {

struct CellResult {
    TaskMaps orig;
    TaskMaps life;
};

CellResult run_cell(const Bundle& bundle, const DatasetSplit& split,
                    const OriginalTrainOptions& orig_options,
                    const LifelongTrainOptions& life_options, int radius) {
    CellResult cell;
    const auto orig = train_original(bundle, split, orig_options);

    const std::vector<Index> original_queries = intersect(split.query_indices, split.original_indices);
    if (original_queries.empty()) throw DataError("run_cell: no original-class queries");
    const DbCodes db0 =
        merge_db(orig.codes_img, orig.codes_txt, orig.train_indices, nullptr, nullptr, nullptr);
    cell.orig = evaluate_retrieval(bundle, original_queries, db0, orig.img_net, orig.txt_net, radius);

    if (!split.incremental_indices.empty()) {
        const auto life = train_lifelong(bundle, split, orig.img_net, orig.txt_net, orig.codes_img,
                                         orig.codes_txt, orig.train_indices, life_options);
        const DbCodes db1 = merge_db(orig.codes_img, orig.codes_txt, orig.train_indices,
                                     &life.codes_img_new, &life.codes_txt_new, &life.incremental_db);
        cell.life =
            evaluate_retrieval(bundle, split.query_indices, db1, life.img_net, life.txt_net, radius);
    }
    return cell;
}

// Bounded fan-out preserving output order.
template <typename Task>
std::vector<CellResult> run_cells(const std::vector<Task>& tasks, int jobs) {
    std::vector<CellResult> results(tasks.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = tasks[i]();
        return results;
    }
    std::size_t next = 0;
    while (next < tasks.size()) {
        const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(jobs),
                                                        tasks.size() - next);
        std::vector<std::future<CellResult>> futures;
        for (std::size_t i = 0; i < count; ++i)
            futures.push_back(std::async(std::launch::async, tasks[next + i]));
        for (std::size_t i = 0; i < count; ++i) results[next + i] = futures[i].get();
        next += count;
    }
    return results;
}

}  // namespace

std::vector<AblationRow> ablation_runner(const Bundle& bundle,
                                         const OriginalTrainOptions& base_orig,
                                         const LifelongTrainOptions& base_life,
                                         const std::vector<std::string>& variants,
                                         int incremental_classes, double query_fraction,
                                         int jobs) {
    static const std::set<std::string> known = {"intra", "inter", "quant",        "O",
                                                "I",     "L",     "Q",            "B",
                                                "single_label",   "multi_label"};
    for (const auto& v : variants)
        if (!known.count(v)) throw DataError("ablation: unknown variant '" + v + "'");

    const DatasetSplit split =
        make_split(bundle.labels, incremental_classes, query_fraction, base_orig.hp.seed);

    std::vector<std::string> names{"full"};
    names.insert(names.end(), variants.begin(), variants.end());

    std::vector<std::function<CellResult()>> tasks;
    for (const auto& name : names) {
        OriginalTrainOptions orig = base_orig;
        LifelongTrainOptions life = base_life;
        if (name == "intra") orig.use_intra = false;
        else if (name == "inter") orig.use_inter = false;
        else if (name == "quant") orig.use_quant = false;
        else if (name == "O") life.use_old = false;
        else if (name == "I" || name == "L") life.use_new = false;
        else if (name == "Q") life.use_quant = false;
        else if (name == "B") life.use_balance = false;
        else if (name == "single_label") { orig.sim_kind = SimKind::single; life.sim_kind = SimKind::single; }
        else if (name == "multi_label") { orig.sim_kind = SimKind::multi; life.sim_kind = SimKind::multi; }
        tasks.emplace_back([&bundle, &split, orig, life] {
            return run_cell(bundle, split, orig, life, 2);
        });
    }

    const auto cells = run_cells(tasks, jobs);
    std::vector<AblationRow> rows;
    for (std::size_t i = 0; i < names.size(); ++i) {
        AblationRow row;
        row.variant = names[i];
        row.map_orig_i2t = cells[i].orig.i2t;
        row.map_orig_t2i = cells[i].orig.t2i;
        row.map_life_i2t = cells[i].life.i2t;
        row.map_life_t2i = cells[i].life.t2i;
        rows.push_back(row);
    }
    return rows;
}

TimingResult timing_bench(const std::vector<Index>& sizes, const HyperParams& hp,
                          bool include_setup, std::uint64_t seed) {
    if (sizes.empty()) throw DataError("timing: no sizes");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1]) throw DataError("timing: sizes must be ascending");

    TimingResult result;
    for (Index size : sizes) {
        SynthConfig config;
        config.classes = 5;  // one incremental class, so m = 4n
        config.per_class = static_cast<int>(size);
        config.d_img = 32;
        config.d_txt = 16;
        config.noise_sigma = 0.05;
        config.label_cardinality_probs = {{1, 1.0}};
        config.co_occurrence = 0.0;
        config.seed = seed;
        const Bundle bundle = generate(config);

        OriginalTrainOptions orig_options;
        orig_options.hp = hp;
        orig_options.hidden_img = {64};
        orig_options.hidden_txt = {64};
        orig_options.hidden_label = {64};

        LifelongTrainOptions life_options;
        life_options.hp = hp;

        const DatasetSplit split = make_split(bundle.labels, 1, 0.1, seed);
        const auto orig = train_original(bundle, split, orig_options);
        const auto life = train_lifelong(bundle, split, orig.img_net, orig.txt_net, orig.codes_img,
                                         orig.codes_txt, orig.train_indices, life_options);

        // Retrain control: the original phase re-run over every class.
        const DatasetSplit full_split = make_split(bundle.labels, 0, 0.1, seed);
        const auto retrain = train_original(bundle, full_split, orig_options);

        TimingRow row;
        row.n = static_cast<Index>(life.incremental_db.size());
        row.m = static_cast<Index>(orig.train_indices.size());
        row.lifelong_seconds = life.train_seconds + (include_setup ? life.setup_seconds : 0.0);
        row.retrain_seconds = retrain.train_seconds + (include_setup ? retrain.setup_seconds : 0.0);
        result.rows.push_back(row);
    }

    if (result.rows.size() >= 2) {
        auto fit_slope = [](const std::vector<double>& xs, const std::vector<double>& ys) {
            const auto n = static_cast<double>(xs.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sx += xs[i];
                sy += ys[i];
                sxx += xs[i] * xs[i];
                sxy += xs[i] * ys[i];
            }
            return (n * sxy - sx * sy) / (n * sxx - sx * sx);
        };
        std::vector<double> log_n, log_t_life, log_mn, log_t_retrain;
        for (const auto& row : result.rows) {
            log_n.push_back(std::log(static_cast<double>(row.n)));
            log_t_life.push_back(std::log(std::max(row.lifelong_seconds, 1e-9)));
            log_mn.push_back(std::log(static_cast<double>(row.m + row.n)));
            log_t_retrain.push_back(std::log(std::max(row.retrain_seconds, 1e-9)));
        }
        result.lifelong_exponent = fit_slope(log_n, log_t_life);
        result.retrain_exponent = fit_slope(log_mn, log_t_retrain);
        result.exponent_defined = true;
    }
    return result;
}

std::vector<SensitivityRow> sensitivity_sweep(const Bundle& bundle,
                                              const OriginalTrainOptions& base_orig,
                                              const LifelongTrainOptions& base_life,
                                              const SensitivityGrid& grid,
                                              int incremental_classes, double query_fraction,
                                              int jobs) {
    static const std::set<std::string> known = {"alpha", "beta", "gamma", "lambda", "mu"};
    if (grid.axes.empty()) throw DataError("sensitivity: no axes");
    for (const auto& axis : grid.axes)
        if (!known.count(axis)) throw DataError("sensitivity: unknown axis '" + axis + "'");

    std::vector<double> values = grid.values;
    if (values.empty())
        for (double v = 1e-2; v < 1e5 * 1.5; v *= 10.0) values.push_back(v);

    const DatasetSplit split =
        make_split(bundle.labels, incremental_classes, query_fraction, base_orig.hp.seed);

    auto apply = [](HyperParams hp, const std::string& axis, double value) {
        if (axis == "alpha") hp.alpha = value;
        else if (axis == "beta") hp.beta = value;
        else if (axis == "gamma") hp.gamma = value;
        else if (axis == "lambda") hp.lambda_ = value;
        else hp.mu = value;
        return hp;
    };

    std::vector<HyperParams> points;
    if (grid.factorial) {
        std::vector<std::size_t> odo(grid.axes.size(), 0);
        while (true) {
            HyperParams hp = base_orig.hp;
            for (std::size_t a = 0; a < grid.axes.size(); ++a)
                hp = apply(hp, grid.axes[a], values[odo[a]]);
            points.push_back(hp);
            std::size_t a = 0;
            for (; a < odo.size(); ++a) {
                if (++odo[a] < values.size()) break;
                odo[a] = 0;
            }
            if (a == odo.size()) break;
        }
    } else {
        for (const auto& axis : grid.axes)
            for (double v : values) points.push_back(apply(base_orig.hp, axis, v));
    }

    std::vector<std::function<CellResult()>> tasks;
    for (const auto& hp : points) {
        OriginalTrainOptions orig = base_orig;
        orig.hp = hp;
        LifelongTrainOptions life = base_life;
        life.hp = hp;
        life.hp.seed = base_life.hp.seed;
        tasks.emplace_back([&bundle, &split, orig, life] {
            return run_cell(bundle, split, orig, life, 2);
        });
    }
    const auto cells = run_cells(tasks, jobs);

    std::vector<SensitivityRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        SensitivityRow row;
        row.alpha = points[i].alpha;
        row.beta = points[i].beta;
        row.gamma = points[i].gamma;
        row.lambda = points[i].lambda_;
        row.mu = points[i].mu;
        row.map_i2t = incremental_classes > 0 ? cells[i].life.i2t : cells[i].orig.i2t;
        row.map_t2i = incremental_classes > 0 ? cells[i].life.t2i : cells[i].orig.t2i;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace lch
