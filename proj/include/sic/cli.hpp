#pragma once

// Command-line orchestration. Each command reads its inputs from the paths in
// RunConfig, writes into `out`, echoes the effective configuration there as
// effective_config.json and appends timestamps to out/run.log (the only file
// whose content depends on wall time).
//
// Exit codes: 0 success, 2 configuration error, 3 data/format error,
// 4 numeric failure.

#include "sic/clusterhead.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sic::cli {

struct RunConfig {
    // Hyperparameters.
    double learning_rate = 1e-4;
    double gamma_u = 0.05;
    std::int64_t gamma_r = 200;
    std::int64_t xi_c = 0;  // 0 selects floor(0.9 n / c)
    std::int64_t xi_a = 20;
    std::int64_t k = 20;
    double lambda = 5.0;
    double beta = 1.0;
    std::int64_t epochs = 100;
    std::int64_t batch_size = 128;
    std::int64_t c = 0;
    std::string strategy = "adjusted";
    std::uint64_t seed = 0;
    double tau_m = 1.0;
    double delta = 0.05;
    double C = 1.0;
    bool flip_balance_sign = false;
    bool renormalize_adjusted = false;
    std::int64_t kmeans_restarts = 10;
    bool raw_embeddings = false;  // skip row normalization on ingest

    // Synthetic data.
    std::int64_t n_per_cluster = 200;
    std::int64_t d = 32;
    double noise_sigma = 0.15;
    std::int64_t n_nouns = 50;
    double noun_noise = 0.05;
    std::int64_t distractor_nouns = 0;

    // Paths.
    std::string images;
    std::string lexicon;
    std::string semantic;
    std::string labels;
    std::string predictions;
    std::string checkpoint;
    std::string trace;
    std::string out = ".";

    /// Rejects negative counts and an unknown strategy name.
    void validate() const;
    TrainConfig train_config() const;
};

/// Overlays the keys of a JSON object onto `base`. Unknown keys and values
/// of the wrong type raise ConfigError.
RunConfig merge_json(RunConfig base, const std::string& json_text);
std::string to_json(const RunConfig& cfg);

void cmd_filter_nouns(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_predict(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_baseline_kmeans(const RunConfig& cfg);
void cmd_bound_report(const RunConfig& cfg);
void cmd_synth(const RunConfig& cfg);
void cmd_convergence_report(const RunConfig& cfg);

/// Parses argv (args[0] is the program name), runs the selected
/// subcommand and returns the process exit code. Messages go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace sic::cli
