// lchash: train, update and evaluate lifelong cross-modal hash models on
// dataset bundles, plus the experiment suites (forgetting, ablation, timing,
// sensitivity).

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "lch/bundle_io.hpp"
#include "lch/experiments.hpp"
#include "lch/lifelong_phase.hpp"
#include "lch/model_io.hpp"
#include "lch/original_phase.hpp"
#include "lch/pipeline.hpp"
#include "lch/retrieval.hpp"
#include "lch/rng.hpp"
#include "lch/synth_data.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lch;

namespace {

constexpr int kSchemaVersion = 1;

bool g_json = false;

void emit_summary(json summary) {
    if (g_json) {
        summary["schema_version"] = kSchemaVersion;
        std::cout << summary.dump(2) << "\n";
    }
}

void say(const std::string& line) {
    if (!g_json) std::cout << line << "\n";
}

std::string fingerprint(const json& config) {
    const std::string dump = config.dump();
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(dump.data(), dump.size())));
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void ensure_out_dir(const fs::path& dir, bool force, const char* marker) {
    if (fs::exists(dir / marker) && !force)
        throw DataError("output already exists (pass --force to overwrite): " +
                        (dir / marker).string());
    fs::create_directories(dir);
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot open for writing: " + file.string());
    out << text;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stoi(item));
    return values;
}

std::vector<std::string> parse_string_list(const std::string& csv) {
    std::vector<std::string> values;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(item);
    return values;
}

// Hyperparameter plumbing shared by the training subcommands:
// preset < config file < explicit flags.
struct HyperCli {
    std::string preset, config_file;
    HyperParams flags;
    std::array<CLI::Option*, 17> opts{};

    static constexpr const char* kKeys[17] = {
        "alpha", "beta", "gamma", "lambda", "mu", "k", "batch_label", "batch_image",
        "batch_text", "lr_original", "lr_lifelong", "epochs_original", "epochs_lifelong",
        "a1", "a2", "dcc_sweeps", "seed"};

    void attach(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "named weight preset (e.g. mirflickr-i2t)");
        cmd->add_option("--config", config_file, "JSON config file with hyperparameter keys");
        opts[0] = cmd->add_option("--alpha", flags.alpha);
        opts[1] = cmd->add_option("--beta", flags.beta);
        opts[2] = cmd->add_option("--gamma", flags.gamma);
        opts[3] = cmd->add_option("--lambda", flags.lambda_);
        opts[4] = cmd->add_option("--mu", flags.mu);
        opts[5] = cmd->add_option("--k", flags.k)->check(CLI::PositiveNumber);
        opts[6] = cmd->add_option("--batch-label", flags.batch_label);
        opts[7] = cmd->add_option("--batch-image", flags.batch_image);
        opts[8] = cmd->add_option("--batch-text", flags.batch_text);
        opts[9] = cmd->add_option("--lr-original", flags.lr_original);
        opts[10] = cmd->add_option("--lr-lifelong", flags.lr_lifelong);
        opts[11] = cmd->add_option("--epochs-original", flags.epochs_original);
        opts[12] = cmd->add_option("--epochs-lifelong", flags.epochs_lifelong);
        opts[13] = cmd->add_option("--a1", flags.a1);
        opts[14] = cmd->add_option("--a2", flags.a2);
        opts[15] = cmd->add_option("--dcc-sweeps", flags.dcc_sweeps);
        opts[16] = cmd->add_option("--seed", flags.seed);
    }

    bool flag_given(int i) const { return opts[i] != nullptr && opts[i]->count() > 0; }

    bool key_in_config(const char* key) const {
        if (config_file.empty()) return false;
        std::ifstream in(config_file);
        if (!in) return false;
        const json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
        return !j.is_discarded() && j.contains(key);
    }

    HyperParams resolve() const {
        HyperParams base;
        if (!preset.empty() && !apply_preset(preset, base))
            throw DataError("unknown preset: " + preset);
        json merged = hyperparams_to_json(base);
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw DataError("cannot open config: " + config_file);
            const json from_file = json::parse(in, nullptr, /*allow_exceptions=*/false);
            if (from_file.is_discarded()) throw DataError("malformed JSON config: " + config_file);
            for (const auto& [key, value] : from_file.items()) {
                bool known = false;
                for (const char* k : kKeys) known = known || key == k;
                if (!known) throw DataError("unknown config key: " + key);
                merged[key] = value;
            }
        }
        const json flag_values = hyperparams_to_json(flags);
        for (int i = 0; i < 17; ++i)
            if (flag_given(i)) merged[kKeys[i]] = flag_values[kKeys[i]];
        return hyperparams_from_json(merged);
    }
};

constexpr const char* HyperCli::kKeys[17];

std::vector<int> parse_hidden(const std::string& csv, std::vector<int> fallback) {
    return csv.empty() ? fallback : parse_int_list(csv);
}

json taskmaps_to_json(const TaskMaps& maps) {
    return json{{"map_i2t", maps.i2t},
                {"map_t2i", maps.t2i},
                {"lookup_precision_i2t", maps.i2t_lookup},
                {"lookup_precision_t2i", maps.t2i_lookup}};
}

std::string original_trace_csv(const std::vector<OriginalLossTraceRow>& trace) {
    std::string csv = "iteration,j_inter,j_intra,j_quan,total\n";
    for (const auto& row : trace)
        csv += std::to_string(row.iteration) + "," + fmt(row.inter) + "," + fmt(row.intra) + "," +
               fmt(row.quan) + "," + fmt(row.total) + "\n";
    return csv;
}

std::string lifelong_trace_csv(const std::vector<LifelongLossTraceRow>& trace) {
    std::string csv = "iteration,j_old,j_new,j_quan,j_balance,total\n";
    for (const auto& row : trace)
        csv += std::to_string(row.iteration) + "," + fmt(row.preserve_old) + "," +
               fmt(row.preserve_new) + "," + fmt(row.quan) + "," + fmt(row.balance) + "," +
               fmt(row.total) + "\n";
    return csv;
}

SimKind parse_sim_kind(bool single_label, bool raw_dot) {
    if (raw_dot) return SimKind::label_dot;
    return single_label ? SimKind::single : SimKind::multi;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    SynthConfig config;
    std::string cardinality = "1:0.6,2:0.3,3:0.1";
    bool force = false;
};

void run_synth(const SynthArgs& args) {
    SynthConfig config = args.config;
    config.label_cardinality_probs.clear();
    for (const auto& item : parse_string_list(args.cardinality)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw DataError("bad cardinality entry: " + item);
        config.label_cardinality_probs.emplace_back(std::stoi(item.substr(0, colon)),
                                                    std::stod(item.substr(colon + 1)));
    }

    ensure_out_dir(args.out, args.force, "manifest.json");
    const Bundle bundle = generate(config);
    write_bundle(args.out, bundle, /*force=*/true);

    json summary;
    summary["command"] = "synth";
    summary["out"] = args.out;
    summary["instances"] = bundle.instances();
    summary["config"] = json::parse(bundle.generator_config);
    summary["config_fingerprint"] = fingerprint(summary["config"]);
    say("wrote bundle with " + std::to_string(bundle.instances()) + " instances to " + args.out);
    emit_summary(summary);
}

// ---------------------------------------------------------------------------

struct TrainOriginalArgs {
    std::string data, out;
    HyperCli hyper;
    int incremental_classes = 1;
    double query_fraction = 0.1;
    bool single_label = false;
    bool raw_dot = false;
    std::string hidden_img, hidden_txt, hidden_label;
    bool force = false;
};

void run_train_original(const TrainOriginalArgs& args) {
    const Bundle bundle = read_bundle(args.data);
    OriginalTrainOptions options;
    options.hp = args.hyper.resolve();
    options.sim_kind = parse_sim_kind(args.single_label, args.raw_dot);
    options.hidden_img = parse_hidden(args.hidden_img, {512});
    options.hidden_txt = parse_hidden(args.hidden_txt, {512});
    options.hidden_label = parse_hidden(args.hidden_label, {256});

    const DatasetSplit split = make_split(bundle.labels, args.incremental_classes,
                                          args.query_fraction, options.hp.seed);
    const auto result = train_original(bundle, split, options);

    ensure_out_dir(args.out, args.force, "meta.json");
    const fs::path out(args.out);
    save_params(out / "params_label.bin", result.label_net);
    save_params(out / "params_img.bin", result.img_net);
    save_params(out / "params_txt.bin", result.txt_net);
    save_codes(out / "codes_bx.bin", result.codes_img);
    save_codes(out / "codes_by.bin", result.codes_txt);
    write_text(out / "trace_original.csv", original_trace_csv(result.trace));

    json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["phase"] = "original";
    meta["k"] = options.hp.k;
    meta["hyperparams"] = hyperparams_to_json(options.hp);
    meta["sim_kind"] = args.raw_dot ? "label_dot" : (args.single_label ? "single" : "multi");
    meta["hidden_img"] = options.hidden_img;
    meta["hidden_txt"] = options.hidden_txt;
    meta["hidden_label"] = options.hidden_label;
    meta["split"] = split_to_json(split);
    meta["train_indices"] = result.train_indices;
    meta["config_fingerprint"] = fingerprint(meta["hyperparams"]);
    write_text(out / "meta.json", meta.dump(2) + "\n");

    json summary;
    summary["command"] = "train-original";
    summary["out"] = args.out;
    summary["train_instances"] = result.train_indices.size();
    summary["final_loss"] = result.trace.empty() ? json() : json(result.trace.back().total);
    summary["config_fingerprint"] = meta["config_fingerprint"];
    say("trained original phase on " + std::to_string(result.train_indices.size()) +
        " instances; model in " + args.out);
    emit_summary(summary);
}

// ---------------------------------------------------------------------------

struct TrainLifelongArgs {
    std::string data, model, out;
    HyperCli hyper;
    bool single_label = false;
    bool raw_dot = false;
    bool detach_tanh = false;
    bool force = false;
};

void run_train_lifelong(const TrainLifelongArgs& args) {
    const Bundle bundle = read_bundle(args.data);
    const fs::path model(args.model);

    std::ifstream meta_in(model / "meta.json");
    if (!meta_in) throw DataError("missing model meta: " + (model / "meta.json").string());
    const json meta_orig = json::parse(meta_in);
    const DatasetSplit split = split_from_json(meta_orig.at("split"));
    const auto train_indices = meta_orig.at("train_indices").get<std::vector<Index>>();
    const int model_k = meta_orig.at("k").get<int>();

    LifelongTrainOptions options;
    options.hp = args.hyper.resolve();
    if (options.hp.k != model_k) {
        if (args.hyper.flag_given(5) || args.hyper.key_in_config("k"))
            throw DataError("train-lifelong: k differs from the original model");
        options.hp.k = model_k;
    }
    options.sim_kind = parse_sim_kind(args.single_label, args.raw_dot);
    options.detach_tanh_fit = args.detach_tanh;

    const NetworkParams label_net = load_params(model / "params_label.bin");
    const NetworkParams img_net = load_params(model / "params_img.bin");
    const NetworkParams txt_net = load_params(model / "params_txt.bin");
    const HashCodes codes_img = load_codes(model / "codes_bx.bin");
    const HashCodes codes_txt = load_codes(model / "codes_by.bin");

    const auto result = train_lifelong(bundle, split, img_net, txt_net, codes_img, codes_txt,
                                       train_indices, options);
    if (result.frozen_checksum_before != result.frozen_checksum_after)
        throw NumericalError("train-lifelong: frozen code checksum changed");

    ensure_out_dir(args.out, args.force, "meta.json");
    const fs::path out(args.out);
    save_params(out / "params_label.bin", label_net);
    save_params(out / "params_img.bin", result.img_net);
    save_params(out / "params_txt.bin", result.txt_net);
    save_codes(out / "codes_bx.bin", codes_img);
    save_codes(out / "codes_by.bin", codes_txt);
    save_codes(out / "codes_bxp.bin", result.codes_img_new);
    save_codes(out / "codes_byp.bin", result.codes_txt_new);
    write_text(out / "trace_lifelong.csv", lifelong_trace_csv(result.trace));

    json meta = meta_orig;
    meta["phase"] = "lifelong";
    meta["hyperparams_lifelong"] = hyperparams_to_json(options.hp);
    meta["incremental_db"] = result.incremental_db;
    meta["sample_original"] = result.sample.original;
    meta["sample_incremental"] = result.sample.incremental;
    meta["frozen_checksum_before"] = result.frozen_checksum_before;
    meta["frozen_checksum_after"] = result.frozen_checksum_after;
    write_text(out / "meta.json", meta.dump(2) + "\n");

    json summary;
    summary["command"] = "train-lifelong";
    summary["out"] = args.out;
    summary["incremental_instances"] = result.incremental_db.size();
    summary["frozen_checksum"] = result.frozen_checksum_after;
    summary["final_loss"] = result.trace.empty() ? json() : json(result.trace.back().total);
    say("lifelong update learned codes for " + std::to_string(result.incremental_db.size()) +
        " incremental instances; model in " + args.out);
    emit_summary(summary);
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string model, data, task = "both", out, pr_csv;
    int radius = 2;
};

void run_eval(const EvalArgs& args) {
    const Bundle bundle = read_bundle(args.data);
    const fs::path model(args.model);
    std::ifstream meta_in(model / "meta.json");
    if (!meta_in) throw DataError("missing model meta: " + (model / "meta.json").string());
    const json meta = json::parse(meta_in);
    const DatasetSplit split = split_from_json(meta.at("split"));
    const auto train_indices = meta.at("train_indices").get<std::vector<Index>>();

    const NetworkParams img_net = load_params(model / "params_img.bin");
    const NetworkParams txt_net = load_params(model / "params_txt.bin");
    const HashCodes codes_img = load_codes(model / "codes_bx.bin");
    const HashCodes codes_txt = load_codes(model / "codes_by.bin");

    DbCodes db;
    std::vector<Index> queries;
    if (meta.at("phase") == "lifelong") {
        const HashCodes bxp = load_codes(model / "codes_bxp.bin");
        const HashCodes byp = load_codes(model / "codes_byp.bin");
        const auto incremental_db = meta.at("incremental_db").get<std::vector<Index>>();
        db = merge_db(codes_img, codes_txt, train_indices, &bxp, &byp, &incremental_db);
        queries = split.query_indices;
    } else {
        db = merge_db(codes_img, codes_txt, train_indices, nullptr, nullptr, nullptr);
        // Only original-class queries have indexed relevant items.
        const std::set<Index> original(split.original_indices.begin(),
                                       split.original_indices.end());
        for (Index q : split.query_indices)
            if (original.count(q)) queries.push_back(q);
    }

    const TaskMaps maps = evaluate_retrieval(bundle, queries, db, img_net, txt_net, args.radius);

    json result = taskmaps_to_json(maps);
    result["task"] = args.task;
    result["radius"] = args.radius;
    result["queries"] = queries.size();
    result["database"] = db.items.size();

    if (!args.pr_csv.empty()) {
        const HashCodes q_img = encode(img_net, gather_feature_rows(bundle.img.values, queries));
        const HashCodes q_txt = encode(txt_net, gather_feature_rows(bundle.txt.values, queries));
        const RelevanceMatrix rel =
            relevance_from_labels(gather_label_rows(bundle.labels, queries),
                                  gather_label_rows(bundle.labels, db.items));
        std::string csv = "task,recall,precision\n";
        if (args.task == "i2t" || args.task == "both")
            for (const auto& p :
                 precision_recall_curve(rank_database(pack(q_img), pack(db.txt)), rel))
                csv += "i2t," + fmt(p.recall) + "," + fmt(p.precision) + "\n";
        if (args.task == "t2i" || args.task == "both")
            for (const auto& p :
                 precision_recall_curve(rank_database(pack(q_txt), pack(db.img)), rel))
                csv += "t2i," + fmt(p.recall) + "," + fmt(p.precision) + "\n";
        write_text(args.pr_csv, csv);
    }

    if (!args.out.empty()) {
        json file_out = result;
        file_out["schema_version"] = kSchemaVersion;
        write_text(args.out, file_out.dump(2) + "\n");
    }

    if (args.task == "i2t" || args.task == "both")
        say("I->T MAP " + fmt(maps.i2t) + "  lookup@" + std::to_string(args.radius) + " " +
            fmt(maps.i2t_lookup));
    if (args.task == "t2i" || args.task == "both")
        say("T->I MAP " + fmt(maps.t2i) + "  lookup@" + std::to_string(args.radius) + " " +
            fmt(maps.t2i_lookup));
    json summary = result;
    summary["command"] = "eval";
    emit_summary(summary);
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
    std::string data, out;
    SynthConfig synth;
    HyperCli hyper;
    std::string schedule = "1";
    std::string variants;
    std::string sizes = "500,1000,2000,4000";
    std::string axes = "alpha,beta,gamma,lambda,mu";
    bool factorial = false;
    bool include_setup = false;
    double query_fraction = 0.1;
    int jobs = 1;
    bool single_label = false;
    std::string hidden = "64";
    bool force = false;
};

Bundle experiment_bundle(const ExperimentArgs& args) {
    return args.data.empty() ? generate(args.synth) : read_bundle(args.data);
}

std::pair<OriginalTrainOptions, LifelongTrainOptions> experiment_options(
    const ExperimentArgs& args) {
    OriginalTrainOptions orig;
    orig.hp = args.hyper.resolve();
    orig.sim_kind = args.single_label ? SimKind::single : SimKind::multi;
    orig.hidden_img = orig.hidden_txt = orig.hidden_label = parse_hidden(args.hidden, {64});
    LifelongTrainOptions life;
    life.hp = orig.hp;
    life.sim_kind = orig.sim_kind;
    return {orig, life};
}

void run_experiment_forgetting(const ExperimentArgs& args) {
    const Bundle bundle = experiment_bundle(args);
    const auto [orig, life] = experiment_options(args);
    const auto schedule = parse_int_list(args.schedule);
    const auto result = forgetting_protocol(bundle, schedule, orig, life, args.query_fraction);

    ensure_out_dir(args.out, args.force, "forgetting.csv");
    std::string csv =
        "stage,classes_present,map_i2t_orig_queries,map_t2i_orig_queries,map_i2t_all,"
        "map_t2i_all,control_map_i2t_all,control_map_t2i_all\n";
    json rows = json::array();
    for (const auto& row : result.rows) {
        csv += std::to_string(row.stage) + "," + std::to_string(row.classes_present) + "," +
               fmt(row.map_i2t_original_queries) + "," + fmt(row.map_t2i_original_queries) + "," +
               fmt(row.map_i2t_all_queries) + "," + fmt(row.map_t2i_all_queries) + "," +
               fmt(row.control_map_i2t_all) + "," + fmt(row.control_map_t2i_all) + "\n";
        rows.push_back(json{{"stage", row.stage},
                            {"classes_present", row.classes_present},
                            {"map_i2t_orig_queries", row.map_i2t_original_queries},
                            {"map_t2i_orig_queries", row.map_t2i_original_queries},
                            {"map_i2t_all", row.map_i2t_all_queries},
                            {"map_t2i_all", row.map_t2i_all_queries},
                            {"control_map_i2t_all", row.control_map_i2t_all},
                            {"control_map_t2i_all", row.control_map_t2i_all}});
    }
    write_text(fs::path(args.out) / "forgetting.csv", csv);

    json summary;
    summary["command"] = "experiment forgetting";
    summary["schedule"] = schedule;
    summary["oracle_map_i2t"] = result.oracle.i2t;
    summary["oracle_map_t2i"] = result.oracle.t2i;
    summary["rows"] = rows;
    summary["hyperparams"] = hyperparams_to_json(orig.hp);
    summary["config_fingerprint"] = fingerprint(summary["hyperparams"]);
    write_text(fs::path(args.out) / "summary.json",
               json{{"schema_version", kSchemaVersion}, {"summary", summary}}.dump(2) + "\n");
    say("forgetting protocol finished; " + std::to_string(result.rows.size()) +
        " stage rows in " + args.out);
    emit_summary(summary);
}

void run_experiment_ablation(const ExperimentArgs& args) {
    const Bundle bundle = experiment_bundle(args);
    const auto [orig, life] = experiment_options(args);
    std::vector<std::string> variants;
    if (!args.variants.empty()) variants = parse_string_list(args.variants);
    const auto rows =
        ablation_runner(bundle, orig, life, variants, 1, args.query_fraction, args.jobs);

    ensure_out_dir(args.out, args.force, "ablation.csv");
    std::string csv = "variant,map_orig_i2t,map_orig_t2i,map_life_i2t,map_life_t2i\n";
    json jrows = json::array();
    for (const auto& row : rows) {
        csv += row.variant + "," + fmt(row.map_orig_i2t) + "," + fmt(row.map_orig_t2i) + "," +
               fmt(row.map_life_i2t) + "," + fmt(row.map_life_t2i) + "\n";
        jrows.push_back(json{{"variant", row.variant},
                             {"map_orig_i2t", row.map_orig_i2t},
                             {"map_orig_t2i", row.map_orig_t2i},
                             {"map_life_i2t", row.map_life_i2t},
                             {"map_life_t2i", row.map_life_t2i}});
    }
    write_text(fs::path(args.out) / "ablation.csv", csv);

    json summary;
    summary["command"] = "experiment ablation";
    summary["rows"] = jrows;
    summary["hyperparams"] = hyperparams_to_json(orig.hp);
    summary["config_fingerprint"] = fingerprint(summary["hyperparams"]);
    write_text(fs::path(args.out) / "summary.json",
               json{{"schema_version", kSchemaVersion}, {"summary", summary}}.dump(2) + "\n");
    say("ablation finished; " + std::to_string(rows.size()) + " rows in " + args.out);
    emit_summary(summary);
}

void run_experiment_timing(const ExperimentArgs& args) {
    std::vector<Index> sizes;
    for (int v : parse_int_list(args.sizes)) sizes.push_back(v);
    const HyperParams hp = args.hyper.resolve();
    const auto result = timing_bench(sizes, hp, args.include_setup, hp.seed);

    ensure_out_dir(args.out, args.force, "timing.csv");
    std::string csv = "n,m,lifelong_seconds,retrain_seconds\n";
    for (const auto& row : result.rows)
        csv += std::to_string(row.n) + "," + std::to_string(row.m) + "," +
               fmt(row.lifelong_seconds) + "," + fmt(row.retrain_seconds) + "\n";
    write_text(fs::path(args.out) / "timing.csv", csv);

    json summary;
    summary["command"] = "experiment timing";
    summary["exponent_defined"] = result.exponent_defined;
    if (result.exponent_defined) {
        summary["lifelong_exponent"] = result.lifelong_exponent;
        summary["retrain_exponent"] = result.retrain_exponent;
    } else {
        summary["note"] = "single size: growth exponent undefined";
    }
    summary["hyperparams"] = hyperparams_to_json(hp);
    summary["config_fingerprint"] = fingerprint(summary["hyperparams"]);
    write_text(fs::path(args.out) / "summary.json",
               json{{"schema_version", kSchemaVersion}, {"summary", summary}}.dump(2) + "\n");
    say(result.exponent_defined
            ? "timing finished; lifelong exponent " + fmt(result.lifelong_exponent)
            : "timing finished; exponent undefined for a single size");
    emit_summary(summary);
}

void run_experiment_sensitivity(const ExperimentArgs& args) {
    const Bundle bundle = experiment_bundle(args);
    const auto [orig, life] = experiment_options(args);
    SensitivityGrid grid;
    grid.axes = parse_string_list(args.axes);
    grid.factorial = args.factorial;
    const auto rows =
        sensitivity_sweep(bundle, orig, life, grid, 1, args.query_fraction, args.jobs);

    ensure_out_dir(args.out, args.force, "sensitivity.csv");
    std::string csv = "alpha,beta,gamma,lambda,mu,map_i2t,map_t2i\n";
    for (const auto& row : rows)
        csv += fmt(row.alpha) + "," + fmt(row.beta) + "," + fmt(row.gamma) + "," +
               fmt(row.lambda) + "," + fmt(row.mu) + "," + fmt(row.map_i2t) + "," +
               fmt(row.map_t2i) + "\n";
    write_text(fs::path(args.out) / "sensitivity.csv", csv);

    json summary;
    summary["command"] = "experiment sensitivity";
    summary["rows"] = rows.size();
    summary["hyperparams"] = hyperparams_to_json(orig.hp);
    summary["config_fingerprint"] = fingerprint(summary["hyperparams"]);
    write_text(fs::path(args.out) / "summary.json",
               json{{"schema_version", kSchemaVersion}, {"summary", summary}}.dump(2) + "\n");
    say("sensitivity finished; " + std::to_string(rows.size()) + " rows in " + args.out);
    emit_summary(summary);
}

void attach_synth_flags(CLI::App* cmd, SynthConfig& config) {
    cmd->add_option("--classes", config.classes);
    cmd->add_option("--per-class", config.per_class);
    cmd->add_option("--d-img", config.d_img);
    cmd->add_option("--d-txt", config.d_txt);
    cmd->add_option("--noise", config.noise_sigma);
    cmd->add_option("--co-occurrence", config.co_occurrence);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lifelong cross-modal hashing trainer and retrieval engine"};
    app.require_subcommand(1);
    app.add_flag("--json", g_json, "machine-readable JSON summary on stdout");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset bundle");
    synth_cmd->add_option("--out", synth_args.out)->required();
    attach_synth_flags(synth_cmd, synth_args.config);
    synth_cmd->add_option("--cardinality", synth_args.cardinality,
                          "label cardinality table, e.g. 1:0.6,2:0.4");
    synth_cmd->add_option("--seed", synth_args.config.seed);
    synth_cmd->add_flag("--force", synth_args.force);

    TrainOriginalArgs train_orig_args;
    auto* train_orig_cmd = app.add_subcommand("train-original", "train the original hashing phase");
    train_orig_cmd->add_option("--data", train_orig_args.data)->required();
    train_orig_cmd->add_option("--out", train_orig_args.out)->required();
    train_orig_args.hyper.attach(train_orig_cmd);
    train_orig_cmd->add_option("--incremental-classes", train_orig_args.incremental_classes);
    train_orig_cmd->add_option("--query-fraction", train_orig_args.query_fraction);
    train_orig_cmd->add_flag("--single-label", train_orig_args.single_label);
    train_orig_cmd->add_flag("--raw-dot-label", train_orig_args.raw_dot,
                             "use raw label dot counts instead of binarized single-label");
    train_orig_cmd->add_option("--hidden-img", train_orig_args.hidden_img);
    train_orig_cmd->add_option("--hidden-txt", train_orig_args.hidden_txt);
    train_orig_cmd->add_option("--hidden-label", train_orig_args.hidden_label);
    train_orig_cmd->add_flag("--force", train_orig_args.force);

    TrainLifelongArgs train_life_args;
    auto* train_life_cmd =
        app.add_subcommand("train-lifelong", "lifelong update for incremental data");
    train_life_cmd->add_option("--data", train_life_args.data)->required();
    train_life_cmd->add_option("--model", train_life_args.model)->required();
    train_life_cmd->add_option("--out", train_life_args.out)->required();
    train_life_args.hyper.attach(train_life_cmd);
    train_life_cmd->add_flag("--single-label", train_life_args.single_label);
    train_life_cmd->add_flag("--raw-dot-label", train_life_args.raw_dot);
    train_life_cmd->add_flag("--detach-tanh", train_life_args.detach_tanh,
                             "do not flow similarity gradients through the tanh fit");
    train_life_cmd->add_flag("--force", train_life_args.force);

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate retrieval quality of a model");
    eval_cmd->add_option("--model", eval_args.model)->required();
    eval_cmd->add_option("--data", eval_args.data)->required();
    eval_cmd->add_option("--task", eval_args.task)->check(CLI::IsMember({"i2t", "t2i", "both"}));
    eval_cmd->add_option("--radius", eval_args.radius);
    eval_cmd->add_option("--out", eval_args.out);
    eval_cmd->add_option("--pr-csv", eval_args.pr_csv);

    ExperimentArgs exp_args;
    HyperCli forget_hyper, ablation_hyper, timing_hyper, sensitivity_hyper;
    auto* exp_cmd = app.add_subcommand("experiment", "run an experiment suite");
    exp_cmd->require_subcommand(1);
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--data", exp_args.data);
        cmd->add_option("--out", exp_args.out)->required();
        attach_synth_flags(cmd, exp_args.synth);
        cmd->add_option("--synth-seed", exp_args.synth.seed);
        cmd->add_option("--query-fraction", exp_args.query_fraction);
        cmd->add_option("--jobs", exp_args.jobs);
        cmd->add_flag("--single-label", exp_args.single_label);
        cmd->add_option("--hidden", exp_args.hidden);
        cmd->add_flag("--force", exp_args.force);
    };
    auto* forget_cmd = exp_cmd->add_subcommand("forgetting", "class-arrival forgetting curves");
    add_common(forget_cmd);
    forget_hyper.attach(forget_cmd);
    forget_cmd->add_option("--schedule", exp_args.schedule, "classes per stage, e.g. 1,2");

    auto* ablation_cmd = exp_cmd->add_subcommand("ablation", "loss-term and similarity ablations");
    add_common(ablation_cmd);
    ablation_hyper.attach(ablation_cmd);
    ablation_cmd->add_option("--variants", exp_args.variants,
                             "comma list from intra,inter,quant,O,I,Q,B,single_label,multi_label");

    auto* timing_cmd = exp_cmd->add_subcommand("timing", "lifelong vs retrain scaling benchmark");
    add_common(timing_cmd);
    timing_hyper.attach(timing_cmd);
    timing_cmd->add_option("--sizes", exp_args.sizes, "ascending incremental sizes");
    timing_cmd->add_flag("--include-setup", exp_args.include_setup);

    auto* sensitivity_cmd = exp_cmd->add_subcommand("sensitivity", "hyperparameter sweeps");
    add_common(sensitivity_cmd);
    sensitivity_hyper.attach(sensitivity_cmd);
    sensitivity_cmd->add_option("--axes", exp_args.axes);
    sensitivity_cmd->add_flag("--factorial", exp_args.factorial);

    try {
        app.parse(argc, argv);

        if (*synth_cmd) run_synth(synth_args);
        else if (*train_orig_cmd) run_train_original(train_orig_args);
        else if (*train_life_cmd) run_train_lifelong(train_life_args);
        else if (*eval_cmd) run_eval(eval_args);
        else if (*exp_cmd) {
            if (*forget_cmd) {
                exp_args.hyper = forget_hyper;
                run_experiment_forgetting(exp_args);
            } else if (*ablation_cmd) {
                exp_args.hyper = ablation_hyper;
                run_experiment_ablation(exp_args);
            } else if (*timing_cmd) {
                exp_args.hyper = timing_hyper;
                run_experiment_timing(exp_args);
            } else if (*sensitivity_cmd) {
                exp_args.hyper = sensitivity_hyper;
                run_experiment_sensitivity(exp_args);
            }
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        std::cerr << "error kind=usage\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "error kind=numerical msg=" << e.what() << "\n";
        return 3;
    } catch (const ShapeError& e) {
        std::cerr << "error kind=data msg=" << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error kind=data msg=" << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error kind=internal msg=" << e.what() << "\n";
        return 4;
    }
}
