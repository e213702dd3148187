#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hcr/common.hpp"
#include "hcr/config.hpp"
#include "hcr/inference.hpp"
#include "hcr/interactions.hpp"
#include "hcr/metrics.hpp"
#include "hcr/model.hpp"
#include "hcr/simulator.hpp"
#include "hcr/tabular_scm.hpp"
#include "hcr/training.hpp"

namespace hcr {

inline constexpr const char* kToolVersion = "hcr 1.0.0";

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerificationFailed = 2;

struct ExperimentConfig {
    WorldSpec world;
    std::map<std::string, TrainConfig> runs;  // section [train.<name>]
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    double train_fraction = 0.7;
    std::vector<std::size_t> eval_ks = {50, 100};
    GroupSpec groups;
};

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write file: " + path);
    out << content;
    if (!out) throw InvalidInput("write failed: " + path);
}

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

inline std::string fmt(double x, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, x);
    return buf;
}

}  // namespace detail

inline WorldSpec world_spec_from_config(const ConfigFile& cfg) {
    WorldSpec w;
    w.num_users = cfg.get_u32("world", "num_users", w.num_users);
    w.num_items = cfg.get_u32("world", "num_items", w.num_items);
    w.embed_dim = cfg.get_u32("world", "embed_dim", w.embed_dim);
    w.confounder_cardinality = cfg.get_u32("world", "confounder_cardinality", w.confounder_cardinality);
    w.confounder_prior = cfg.get_double_list("world", "confounder_prior", w.confounder_prior);
    if (!cfg.has("world", "confounder_prior") && w.confounder_cardinality != w.confounder_prior.size()) {
        w.confounder_prior.assign(w.confounder_cardinality,
                                  1.0 / static_cast<double>(w.confounder_cardinality));
    }
    w.gamma_item = cfg.get_double("world", "gamma_item", w.gamma_item);
    w.gamma_like = cfg.get_double("world", "gamma_like", w.gamma_like);
    w.click_bias = cfg.get_double("world", "click_bias", w.click_bias);
    w.like_bias = cfg.get_double("world", "like_bias", w.like_bias);
    w.exposure_strength = cfg.get_double("world", "exposure_strength", w.exposure_strength);
    w.noise_scale = cfg.get_double("world", "noise_scale", w.noise_scale);
    w.impressions_per_user = cfg.get_u32("world", "impressions_per_user", w.impressions_per_user);
    w.validate();
    return w;
}

inline TrainConfig train_config_from_section(const ConfigFile& cfg, const std::string& section) {
    TrainConfig t;
    t.beta = cfg.get_double(section, "beta", t.beta);
    t.learning_rate = cfg.get_double(section, "learning_rate", t.learning_rate);
    t.l2 = cfg.get_double(section, "l2", t.l2);
    t.batch_size = cfg.get_u32(section, "batch_size", t.batch_size);
    t.max_epochs = cfg.get_u32(section, "max_epochs", t.max_epochs);
    t.patience = cfg.get_u32(section, "patience", t.patience);
    t.eval_k = cfg.get_u32(section, "eval_k", t.eval_k);
    t.seed = cfg.get_u64(section, "seed", t.seed);
    const std::string mode = cfg.get_or(section, "mode", "HCR");
    if (mode == "HCR") {
        t.mode = ModelMode::Hcr;
    } else if (mode == "CT") {
        t.mode = ModelMode::Ct;
    } else {
        throw InvalidInput("config: mode must be HCR or CT, got '" + mode + "'");
    }
    t.share_embeddings = cfg.get_bool(section, "share_embeddings", t.share_embeddings);
    t.exposure_enabled = cfg.get_bool(section, "exposure_factor", t.exposure_enabled);
    t.embed_dim = cfg.get_u32(section, "embed_dim", t.embed_dim);
    t.negative_sampling_ratio =
        cfg.get_double(section, "negative_sampling_ratio", t.negative_sampling_ratio);
    t.beta_warmup_epochs = cfg.get_u32(section, "beta_warmup_epochs", t.beta_warmup_epochs);
    t.validate();
    return t;
}

/// Loads the experiment file. HCR_SEED, when set, overrides the seed list
/// (single value or comma list).
inline ExperimentConfig load_experiment_config(const std::string& path) {
    const ConfigFile cfg = ConfigFile::parse(detail::read_file(path));
    ExperimentConfig exp;
    if (cfg.has_section("world")) exp.world = world_spec_from_config(cfg);
    exp.seeds = cfg.get_u64_list("experiment", "seeds", exp.seeds);
    if (const char* env = std::getenv("HCR_SEED")) {
        exp.seeds.clear();
        for (const std::string& tok : ConfigFile::split_list(env)) {
            exp.seeds.push_back(std::stoull(tok));
        }
        if (exp.seeds.empty()) throw InvalidInput("HCR_SEED set but empty");
    }
    if (exp.seeds.empty()) throw InvalidInput("config: seed list must be nonempty");
    for (const std::string& name : cfg.section_names()) {
        if (name.rfind("train.", 0) == 0) {
            TrainConfig run = train_config_from_section(cfg, name);
            // runs without their own seed follow the experiment seed list
            if (!cfg.has(name, "seed")) run.seed = exp.seeds.front();
            exp.runs[name.substr(6)] = run;
        }
    }
    exp.train_fraction = cfg.get_double("experiment", "train_fraction", exp.train_fraction);
    std::vector<std::uint64_t> ks64;
    for (std::size_t k : exp.eval_ks) ks64.push_back(k);
    ks64 = cfg.get_u64_list("eval", "ks", ks64);
    exp.eval_ks.assign(ks64.begin(), ks64.end());
    exp.groups.active_fraction = cfg.get_double("eval", "active_fraction", exp.groups.active_fraction);
    exp.groups.chrono_subsets = cfg.get_u32("eval", "chrono_subsets", exp.groups.chrono_subsets);
    exp.groups.validate();
    if (!(exp.train_fraction > 0.0 && exp.train_fraction < 1.0)) {
        throw InvalidInput("config: train_fraction must be in (0,1)");
    }
    if (exp.eval_ks.empty()) throw InvalidInput("config: eval ks must be nonempty");
    return exp;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;  // overrides the config's first seed
    std::string out_dir = "out";
};

/// Writes interactions.csv and ground_truth.csv, prints a dataset summary
/// including the worst |p_do - p_obs| gap (zero when gamma_like = 0).
inline int cmd_simulate(const SimulateArgs& args, std::ostream& log) {
    const ExperimentConfig exp = load_experiment_config(args.config_path);
    const std::uint64_t seed = args.seed.value_or(exp.seeds.front());
    const SyntheticWorld world = build_world(exp.world, seed);
    const InteractionLog interactions = simulate_log(world, seed);

    const std::string interactions_path = args.out_dir + "/interactions.csv";
    detail::write_file(interactions_path, serialize_interaction_log(interactions));

    std::ostringstream gt;
    gt << "user_id,item_id,p_do,p_obs\n";
    double max_gap = 0.0;
    for (UserId u = 0; u < exp.world.num_users; ++u) {
        for (ItemId i = 0; i < exp.world.num_items; ++i) {
            const double p_do = world.true_interventional(u, i);
            const double p_obs = world.observational_like_rate(u, i);
            max_gap = std::max(max_gap, std::abs(p_do - p_obs));
            gt << u << ',' << i << ',' << detail::fmt(p_do, "%.17g") << ','
               << detail::fmt(p_obs, "%.17g") << '\n';
        }
    }
    const std::string gt_path = args.out_dir + "/ground_truth.csv";
    detail::write_file(gt_path, gt.str());

    std::size_t clicks = 0, likes = 0;
    for (const Interaction& r : interactions.interactions) {
        clicks += r.click;
        likes += r.like;
    }
    const double n = static_cast<double>(interactions.interactions.size());
    log << "simulate: seed=" << seed << " records=" << interactions.interactions.size()
        << " users=" << interactions.num_users << " items=" << interactions.num_items
        << " click_rate=" << detail::fmt(static_cast<double>(clicks) / n)
        << " like_rate=" << detail::fmt(static_cast<double>(likes) / n)
        << " max_do_obs_gap=" << detail::fmt(max_gap, "%.3e") << '\n';
    log << "simulate: wrote " << interactions_path << " and " << gt_path << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config_path;
    std::string run;  // name of the [train.<run>] section
    std::string data_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
};

struct TrainOutputs {
    std::string checkpoint_path;
    std::string history_path;
    std::string manifest_path;
};

inline TrainOutputs train_output_paths(const std::string& out_dir, const std::string& run,
                                       std::uint64_t seed) {
    const std::string stem = out_dir + "/" + run + "_seed" + std::to_string(seed);
    return TrainOutputs{stem + ".ckpt", stem + ".log", stem + ".manifest"};
}

inline int cmd_train(const TrainArgs& args, std::ostream& log) {
    const ExperimentConfig exp = load_experiment_config(args.config_path);
    auto it = exp.runs.find(args.run);
    if (it == exp.runs.end()) {
        throw InvalidInput("config has no [train." + args.run + "] section");
    }
    TrainConfig cfg = it->second;
    if (args.seed) cfg.seed = *args.seed;

    const ParseResult data = parse_interaction_log(detail::read_file(args.data_path));
    if (data.rejected_rows > 0) {
        log << "train: warning, rejected " << data.rejected_rows << " like-without-click rows\n";
    }
    const DatasetSplit split = chronological_split(data.log, exp.train_fraction);
    HcrModel model = make_model(data.log.num_users, data.log.num_items, cfg);
    auto [best, history] = train(std::move(model), split, cfg);

    const TrainOutputs paths = train_output_paths(args.out_dir, args.run, cfg.seed);
    {
        std::ostringstream ckpt;
        best.save(ckpt);
        detail::write_file(paths.checkpoint_path, ckpt.str());
    }
    {
        std::ostringstream hist;
        for (const EpochStats& s : history.per_epoch) {
            hist << format_history_line(s, cfg.eval_k) << '\n';
        }
        detail::write_file(paths.history_path, hist.str());
    }
    {
        std::ostringstream manifest;
        manifest << "tool_version=" << kToolVersion << '\n';
        manifest << "config=" << args.config_path << '\n';
        manifest << "config_hash=" << detail::hex64(detail::fnv1a(detail::read_file(args.config_path)))
                 << '\n';
        manifest << "run=" << args.run << '\n';
        manifest << "seed=" << cfg.seed << '\n';
        manifest << "data=" << args.data_path << '\n';
        manifest << "checkpoint=" << paths.checkpoint_path << '\n';
        manifest << "history=" << paths.history_path << '\n';
        detail::write_file(paths.manifest_path, manifest.str());
    }

    if (history.per_epoch.empty()) {
        log << "train: run=" << args.run << " seed=" << cfg.seed << " epochs=0 (initial model saved)\n";
    } else {
        const EpochStats& best_stats = history.per_epoch[history.best_epoch];
        log << "train: run=" << args.run << " seed=" << cfg.seed << " epochs="
            << history.per_epoch.size() << " best_epoch=" << best_stats.epoch << " best_valid_ndcg@"
            << cfg.eval_k << "=" << detail::fmt(best_stats.validation_metric) << '\n';
    }
    log << "train: wrote " << paths.checkpoint_path << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string checkpoint_path;
    std::string data_path;
    std::string variant = "HCR";
    std::vector<std::size_t> ks = {50, 100};
    bool groups = false;
    bool emit_gnuplot_data = false;  // figure-ready CSVs from the group rows
    std::string ground_truth_path;   // optional: enables causal fidelity
    std::string rankings_path;       // optional: dump per-user ranked lists
    double train_fraction = 0.7;
    GroupSpec group_spec;
    std::string out_dir = "out";
};

/// Dense original-id ground-truth table loaded from a simulate dump.
struct GroundTruthTable {
    std::size_t num_users = 0, num_items = 0;
    std::vector<double> p_do;   // [u][i], indexed by original ids
    std::vector<double> p_obs;

    double do_probability(std::int64_t orig_user, std::int64_t orig_item) const {
        if (orig_user < 0 || orig_item < 0 || static_cast<std::size_t>(orig_user) >= num_users ||
            static_cast<std::size_t>(orig_item) >= num_items) {
            throw InvalidInput("ground truth: id out of range");
        }
        return p_do[static_cast<std::size_t>(orig_user) * num_items +
                    static_cast<std::size_t>(orig_item)];
    }
};

inline GroundTruthTable load_ground_truth(const std::string& path) {
    std::istringstream in(detail::read_file(path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("user_id,item_id,p_do,p_obs", 0) != 0) {
        throw InvalidInput("ground truth: bad header in " + path);
    }
    struct Row {
        std::int64_t u, i;
        double p_do, p_obs;
    };
    std::vector<Row> rows;
    std::int64_t max_u = -1, max_i = -1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Row r{};
        char* end = nullptr;
        const char* s = line.c_str();
        r.u = std::strtoll(s, &end, 10);
        if (*end != ',') throw InvalidInput("ground truth: malformed line " + std::to_string(line_no));
        r.i = std::strtoll(end + 1, &end, 10);
        if (*end != ',') throw InvalidInput("ground truth: malformed line " + std::to_string(line_no));
        r.p_do = std::strtod(end + 1, &end);
        if (*end != ',') throw InvalidInput("ground truth: malformed line " + std::to_string(line_no));
        r.p_obs = std::strtod(end + 1, &end);
        if (*end != '\0') throw InvalidInput("ground truth: malformed line " + std::to_string(line_no));
        rows.push_back(r);
        max_u = std::max(max_u, r.u);
        max_i = std::max(max_i, r.i);
    }
    if (rows.empty()) throw InvalidInput("ground truth: no rows in " + path);
    GroundTruthTable table;
    table.num_users = static_cast<std::size_t>(max_u + 1);
    table.num_items = static_cast<std::size_t>(max_i + 1);
    table.p_do.assign(table.num_users * table.num_items, -1.0);
    table.p_obs.assign(table.num_users * table.num_items, -1.0);
    for (const Row& r : rows) {
        const std::size_t idx =
            static_cast<std::size_t>(r.u) * table.num_items + static_cast<std::size_t>(r.i);
        table.p_do[idx] = r.p_do;
        table.p_obs[idx] = r.p_obs;
    }
    return table;
}

inline int cmd_evaluate(const EvaluateArgs& args, std::ostream& log) {
    std::istringstream ckpt_stream(detail::read_file(args.checkpoint_path));
    const HcrModel model = HcrModel::load(ckpt_stream);

    const ParseResult data = parse_interaction_log(detail::read_file(args.data_path));
    if (model.num_users() != data.log.num_users || model.num_items() != data.log.num_items) {
        throw InvalidInput("evaluate: checkpoint dimensions (" + std::to_string(model.num_users()) +
                           "x" + std::to_string(model.num_items()) + ") do not match data (" +
                           std::to_string(data.log.num_users) + "x" +
                           std::to_string(data.log.num_items) + ")");
    }
    const ScoreVariant variant = parse_variant(args.variant);
    check_variant_mode(model, variant);
    const DatasetSplit split = chronological_split(data.log, args.train_fraction);

    EvalReport report;
    const Scorer scorer = model_scorer(model, variant);
    evaluate_ranking(report, scorer, model.num_items(), split, args.variant, args.ks);
    if (args.groups) {
        group_analysis(report, scorer, model.num_items(), split, args.variant, args.group_spec,
                       args.ks);
    }
    if (!args.ground_truth_path.empty()) {
        const GroundTruthTable gt = load_ground_truth(args.ground_truth_path);
        const Scorer truth = [&gt, &data](UserId u, ItemId i) {
            return gt.do_probability(data.user_ids[u], data.item_ids[i]);
        };
        const double fidelity =
            causal_fidelity(scorer, truth, allrank_candidates(split, model.num_items()));
        report.add("fidelity", args.variant, "test", "all", 0, fidelity);
    }

    const std::string text_path = args.out_dir + "/report_" + args.variant + ".txt";
    const std::string csv_path = args.out_dir + "/report_" + args.variant + ".csv";
    detail::write_file(text_path, report.to_text());
    detail::write_file(csv_path, report.to_csv());

    if (args.emit_gnuplot_data) {
        if (!args.groups) throw InvalidInput("evaluate: --emit-gnuplot-data requires --groups");
        auto emit = [&](const char* file, std::initializer_list<const char*> groups_wanted,
                        std::initializer_list<const char*> metrics_wanted) {
            std::ostringstream out;
            out << "group,metric,k,value\n";
            for (const EvalRow& r : report.rows) {
                bool group_ok = false, metric_ok = false;
                for (const char* g : groups_wanted) group_ok |= r.group.rfind(g, 0) == 0;
                for (const char* m : metrics_wanted) metric_ok |= r.metric == m;
                if (group_ok && metric_ok) {
                    out << r.group << ',' << r.metric << ',' << r.k << ','
                        << detail::fmt(r.value) << '\n';
                }
            }
            detail::write_file(args.out_dir + "/" + file, out.str());
        };
        emit("fig_active_users.csv", {"active", "less_active"}, {"recall", "ndcg"});
        emit("fig_chrono_subsets.csv", {"chrono"}, {"recall", "ndcg"});
        emit("fig_like_click_ratio.csv", {"ratio_high", "ratio_low"}, {"normalized_recall"});
    }

    if (!args.rankings_path.empty()) {
        std::ostringstream out;
        out << "user_id,rank,item_id,score\n";
        const std::size_t k = *std::max_element(args.ks.begin(), args.ks.end());
        for (UserId u = 0; u < model.num_users(); ++u) {
            const RankedList ranked = rank_with(scorer, model.num_items(), u, split.train_items[u], k);
            for (std::size_t p = 0; p < ranked.items.size(); ++p) {
                out << u << ',' << (p + 1) << ',' << ranked.items[p] << ','
                    << detail::fmt(ranked.scores[p], "%.17g") << '\n';
            }
        }
        detail::write_file(args.rankings_path, out.str());
    }

    {
        std::ostringstream manifest;
        manifest << "tool_version=" << kToolVersion << '\n';
        manifest << "checkpoint=" << args.checkpoint_path << '\n';
        manifest << "data=" << args.data_path << '\n';
        manifest << "variant=" << args.variant << '\n';
        manifest << "report_text=" << text_path << '\n';
        manifest << "report_csv=" << csv_path << '\n';
        if (!args.rankings_path.empty()) manifest << "rankings=" << args.rankings_path << '\n';
        detail::write_file(args.out_dir + "/report_" + args.variant + ".manifest", manifest.str());
    }

    log << report.to_text();
    log << "evaluate: wrote " << text_path << " and " << csv_path << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateArgs {
    std::string config_path;
    std::string out_dir = "out";
};

struct AblationRow {
    std::string variant;
    std::uint64_t seed = 0;  // 0 in the mean row
    bool is_mean = false;
    double fidelity = 0.0;
    double recall = 0.0;
    double ndcg = 0.0;
};

/// Per seed: trains HCR, HCR without embedding sharing, and CT on a fresh
/// simulated world; scores the inference variants plus the two extra
/// checkpoints against ground-truth fidelity and test ranking quality.
inline std::vector<AblationRow> run_ablation(const ExperimentConfig& exp, std::ostream& log) {
    auto hcr_it = exp.runs.find("hcr");
    if (hcr_it == exp.runs.end()) throw InvalidInput("ablate: config needs a [train.hcr] section");
    const TrainConfig base = hcr_it->second;
    TrainConfig ct_cfg;
    if (auto ct_it = exp.runs.find("ct"); ct_it != exp.runs.end()) {
        ct_cfg = ct_it->second;
        if (ct_cfg.mode != ModelMode::Ct) throw InvalidInput("ablate: [train.ct] must have mode = CT");
    } else {
        ct_cfg = base;
        ct_cfg.mode = ModelMode::Ct;
    }

    const std::size_t first_k = exp.eval_ks.front();
    const std::vector<std::string> variant_order = {"HCR", "HCR_T", "HCR_S1", "HCR_S2", "HCR_NS", "CT"};
    std::vector<AblationRow> rows;

    for (const std::uint64_t seed : exp.seeds) {
        const SyntheticWorld world = build_world(exp.world, seed);
        const InteractionLog interactions = simulate_log(world, seed);
        const DatasetSplit split = chronological_split(interactions, exp.train_fraction);
        const auto candidates = allrank_candidates(split, interactions.num_items);
        const Scorer truth = [&world](UserId u, ItemId i) { return world.true_interventional(u, i); };

        auto seeded = [seed](TrainConfig cfg) {
            cfg.seed = seed;
            return cfg;
        };
        TrainConfig ns_cfg = seeded(base);
        ns_cfg.share_embeddings = false;

        const auto [hcr_model, hcr_hist] =
            train(make_model(interactions.num_users, interactions.num_items, seeded(base)), split,
                  seeded(base));
        const auto [ns_model, ns_hist] =
            train(make_model(interactions.num_users, interactions.num_items, ns_cfg), split, ns_cfg);
        const auto [ct_model, ct_hist] =
            train(make_model(interactions.num_users, interactions.num_items, seeded(ct_cfg)), split,
                  seeded(ct_cfg));
        (void)hcr_hist; (void)ns_hist; (void)ct_hist;

        auto eval_one = [&](const std::string& label, const HcrModel& model, ScoreVariant variant) {
            const Scorer scorer = model_scorer(model, variant);
            AblationRow row;
            row.variant = label;
            row.seed = seed;
            row.fidelity = causal_fidelity(scorer, truth, candidates);
            detail::MeanAccumulator rec, ndc;
            for (UserId u = 0; u < interactions.num_users; ++u) {
                if (split.test[u].empty()) continue;
                const RankedList ranked =
                    rank_with(scorer, interactions.num_items, u, split.train_items[u], first_k);
                rec.add(recall_at_k(ranked, split.test[u], first_k));
                ndc.add(ndcg_at_k(ranked, split.test[u], first_k));
            }
            row.recall = rec.mean();
            row.ndcg = ndc.mean();
            rows.push_back(row);
        };

        eval_one("HCR", hcr_model, ScoreVariant::HCR);
        eval_one("HCR_T", hcr_model, ScoreVariant::HCR_T);
        eval_one("HCR_S1", hcr_model, ScoreVariant::HCR_S1);
        eval_one("HCR_S2", hcr_model, ScoreVariant::HCR_S2);
        eval_one("HCR_NS", ns_model, ScoreVariant::HCR);
        eval_one("CT", ct_model, ScoreVariant::CT);
        log << "ablate: seed " << seed << " done\n";
    }

    for (const std::string& variant : variant_order) {
        AblationRow mean;
        mean.variant = variant;
        mean.is_mean = true;
        std::size_t count = 0;
        for (const AblationRow& r : rows) {
            if (r.is_mean || r.variant != variant) continue;
            mean.fidelity += r.fidelity;
            mean.recall += r.recall;
            mean.ndcg += r.ndcg;
            ++count;
        }
        mean.fidelity /= static_cast<double>(count);
        mean.recall /= static_cast<double>(count);
        mean.ndcg /= static_cast<double>(count);
        rows.push_back(mean);
    }
    return rows;
}

inline std::string ablation_to_csv(const std::vector<AblationRow>& rows, std::size_t k) {
    std::ostringstream out;
    out << "variant,seed,fidelity,recall@" << k << ",ndcg@" << k << '\n';
    for (const AblationRow& r : rows) {
        out << r.variant << ',' << (r.is_mean ? "mean" : std::to_string(r.seed)) << ','
            << detail::fmt(r.fidelity) << ',' << detail::fmt(r.recall) << ',' << detail::fmt(r.ndcg)
            << '\n';
    }
    return out.str();
}

inline std::string ablation_to_text(const std::vector<AblationRow>& rows, std::size_t k) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %-6s %10s %12s %12s\n", "variant", "seed", "fidelity",
                  ("recall@" + std::to_string(k)).c_str(), ("ndcg@" + std::to_string(k)).c_str());
    out << line;
    for (const AblationRow& r : rows) {
        std::snprintf(line, sizeof(line), "%-8s %-6s %10.6f %12.6f %12.6f\n", r.variant.c_str(),
                      r.is_mean ? "mean" : std::to_string(r.seed).c_str(), r.fidelity, r.recall,
                      r.ndcg);
        out << line;
    }
    return out.str();
}

inline int cmd_ablate(const AblateArgs& args, std::ostream& log) {
    const ExperimentConfig exp = load_experiment_config(args.config_path);
    const std::string manifest_path = args.out_dir + "/ablation.manifest";
    std::vector<std::string> produced;
    try {
        const std::vector<AblationRow> rows = run_ablation(exp, log);
        const std::size_t k = exp.eval_ks.front();
        detail::write_file(args.out_dir + "/ablation.csv", ablation_to_csv(rows, k));
        produced.push_back(args.out_dir + "/ablation.csv");
        detail::write_file(args.out_dir + "/ablation.txt", ablation_to_text(rows, k));
        produced.push_back(args.out_dir + "/ablation.txt");
        log << ablation_to_text(rows, k);
    } catch (...) {
        std::ostringstream manifest;
        manifest << "tool_version=" << kToolVersion << "\nstatus=aborted\n";
        for (const std::string& p : produced) manifest << "artifact=" << p << '\n';
        detail::write_file(manifest_path, manifest.str());
        throw;
    }
    std::ostringstream manifest;
    manifest << "tool_version=" << kToolVersion << "\nstatus=ok\n";
    manifest << "config_hash=" << detail::hex64(detail::fnv1a(detail::read_file(args.config_path)))
             << '\n';
    for (const std::string& p : produced) manifest << "artifact=" << p << '\n';
    detail::write_file(manifest_path, manifest.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// oracle-check
// ---------------------------------------------------------------------------

struct OracleCheckArgs {
    std::size_t n_seeds = 100;
    std::size_t n_users = 4, n_items = 5, n_confounders = 3, n_mediators = 4;
    double tolerance = 1e-10;
    bool inject_skip_prior = false;  // deliberate fault for self-tests
};

struct OracleCheckResult {
    double worst_frontdoor = 0.0;
    double worst_backdoor = 0.0;
    double worst_collider = 0.0;
    double worst_joint_mass = 0.0;
    bool pass = true;
};

inline OracleCheckResult run_oracle_check(const OracleCheckArgs& args) {
    OracleCheckResult res;
    for (std::size_t s = 1; s <= args.n_seeds; ++s) {
        const TabularScm scm = random_scm(args.n_users, args.n_items, args.n_confounders,
                                          args.n_mediators, s);
        const ObservationalView view = observational_view(scm);
        res.worst_joint_mass = std::max(res.worst_joint_mass, std::abs(view.joint.total_mass() - 1.0));

        std::vector<double> weights(scm.n_items);
        for (std::size_t j = 0; j < scm.n_items; ++j) {
            weights[j] = args.inject_skip_prior ? 1.0 : view.item_marginal(j);
        }
        for (std::size_t u = 0; u < scm.n_users; ++u) {
            for (std::size_t i = 0; i < scm.n_items; ++i) {
                const double fd = frontdoor_estimate_weighted(view, u, i, weights);
                res.worst_frontdoor =
                    std::max(res.worst_frontdoor, std::abs(fd - do_probability(scm, u, i)));
                for (std::size_t m = 0; m < scm.n_mediators; ++m) {
                    res.worst_collider = std::max(
                        res.worst_collider,
                        std::abs(view.mediator_given_ui(u, i, m) - scm.m_given_ui(u, i, m)));
                }
            }
            for (std::size_t m = 0; m < scm.n_mediators; ++m) {
                const auto [left, right] = backdoor_mediator_effect(view, u, m);
                res.worst_backdoor = std::max(res.worst_backdoor, std::abs(left - right));
            }
        }
    }
    res.pass = res.worst_frontdoor <= args.tolerance && res.worst_backdoor <= args.tolerance &&
               res.worst_collider <= 1e-12 && res.worst_joint_mass <= 1e-10;
    return res;
}

inline int cmd_oracle_check(const OracleCheckArgs& args, std::ostream& log) {
    if (args.n_users > 8 || args.n_items > 8 || args.n_mediators > 8 || args.n_confounders > 4) {
        throw InvalidInput("oracle-check: dimensions exceed caps (U,I,M <= 8, V <= 4)");
    }
    if (args.n_seeds == 0) {
        log << "oracle-check: warning, 0 seeds requested, nothing verified\n";
        return kExitOk;
    }
    const OracleCheckResult res = run_oracle_check(args);
    log << "oracle-check: seeds=" << args.n_seeds << " dims=" << args.n_users << 'x' << args.n_items
        << 'x' << args.n_confounders << 'x' << args.n_mediators << '\n';
    log << "  front-door identity worst error: " << detail::fmt(res.worst_frontdoor, "%.3e")
        << " (tolerance " << detail::fmt(args.tolerance, "%.1e") << ")\n";
    log << "  mediator-effect identity worst error: " << detail::fmt(res.worst_backdoor, "%.3e")
        << '\n';
    log << "  collider P(m|u,i) worst error: " << detail::fmt(res.worst_collider, "%.3e")
        << " (tolerance 1.0e-12)\n";
    log << "  joint mass worst error: " << detail::fmt(res.worst_joint_mass, "%.3e")
        << " (tolerance 1.0e-10)\n";
    log << (res.pass ? "oracle-check: PASS\n" : "oracle-check: FAIL\n");
    return res.pass ? kExitOk : kExitVerificationFailed;
}

}  // namespace hcr
