// Command-line front end: simulate | train | evaluate | ablate | oracle-check.
// All heavy lifting lives in the headers; this file only maps flags onto the
// command argument structs and exit codes (0 ok, 1 usage/config error,
// 2 verification failure).

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hcr/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deconfounded click/like recommendation experiments"};
    app.require_subcommand(1);

    hcr::SimulateArgs sim;
    std::int64_t sim_seed = -1;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic interaction log");
    simulate->add_option("--config", sim.config_path, "Experiment config file")->required();
    simulate->add_option("--seed", sim_seed, "Override the config seed");
    simulate->add_option("--out", sim.out_dir, "Output directory (default out)");

    hcr::TrainArgs train;
    std::int64_t train_seed = -1;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a [train.<run>] section");
    train_cmd->add_option("--config", train.config_path, "Experiment config file")->required();
    train_cmd->add_option("--run", train.run, "Run name, e.g. hcr or ct")->required();
    train_cmd->add_option("--data", train.data_path, "Interaction CSV")->required();
    train_cmd->add_option("--seed", train_seed, "Override the config seed");
    train_cmd->add_option("--out", train.out_dir, "Output directory (default out)");

    hcr::EvaluateArgs eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", eval.checkpoint_path, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eval.data_path, "Interaction CSV")->required();
    eval_cmd->add_option("--variant", eval.variant, "HCR | HCR_T | HCR_S1 | HCR_S2 | CT");
    eval_cmd->add_option("--k", eval.ks, "Top-K cutoffs (default 50 100)");
    eval_cmd->add_flag("--groups", eval.groups, "Include group analyses");
    eval_cmd->add_flag("--emit-gnuplot-data", eval.emit_gnuplot_data,
                       "Write figure-ready CSVs for the group analyses (needs --groups)");
    eval_cmd->add_option("--ground-truth", eval.ground_truth_path,
                         "Ground-truth CSV from simulate; enables causal fidelity");
    eval_cmd->add_option("--output,--dump-rankings", eval.rankings_path,
                         "Write per-user ranked lists (user_id,rank,item_id,score)");
    eval_cmd->add_option("--train-fraction", eval.train_fraction, "Chronological split fraction");
    eval_cmd->add_option("--out", eval.out_dir, "Output directory (default out)");

    hcr::AblateArgs ablate;
    auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare HCR variants per seed");
    ablate_cmd->add_option("--config", ablate.config_path, "Experiment config file")->required();
    ablate_cmd->add_option("--out", ablate.out_dir, "Output directory (default out)");

    hcr::OracleCheckArgs oracle;
    std::vector<std::size_t> oracle_dims;
    auto* oracle_cmd = app.add_subcommand("oracle-check", "Verify the identification identities");
    oracle_cmd->add_option("--seeds", oracle.n_seeds, "Number of random SCMs (default 100)");
    oracle_cmd->add_option("--dims", oracle_dims, "Dimensions as U I V M (default 4 5 3 4)");
    oracle_cmd->add_option("--tolerance", oracle.tolerance, "Identity tolerance (default 1e-10)");
    oracle_cmd
        ->add_flag("--inject-fault-skip-prior", oracle.inject_skip_prior,
                   "Deliberately skip the P(i') weighting (self-test)")
        ->group("");  // hidden

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            if (sim_seed >= 0) sim.seed = static_cast<std::uint64_t>(sim_seed);
            return hcr::cmd_simulate(sim, std::cout);
        }
        if (*train_cmd) {
            if (train_seed >= 0) train.seed = static_cast<std::uint64_t>(train_seed);
            return hcr::cmd_train(train, std::cout);
        }
        if (*eval_cmd) {
            return hcr::cmd_evaluate(eval, std::cout);
        }
        if (*ablate_cmd) {
            return hcr::cmd_ablate(ablate, std::cout);
        }
        if (*oracle_cmd) {
            if (!oracle_dims.empty()) {
                if (oracle_dims.size() != 4) {
                    std::cerr << "error: --dims expects exactly 4 values (U I V M)\n";
                    return hcr::kExitUsage;
                }
                oracle.n_users = oracle_dims[0];
                oracle.n_items = oracle_dims[1];
                oracle.n_confounders = oracle_dims[2];
                oracle.n_mediators = oracle_dims[3];
            }
            return hcr::cmd_oracle_check(oracle, std::cout);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return hcr::kExitUsage;
    }
    return hcr::kExitUsage;
}
