#include "sic/cli.hpp"

#include "sic/errors.hpp"
#include "sic/metrics.hpp"
#include "sic/semspace.hpp"
#include "sic/synthgen.hpp"
#include "sic/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <list>
#include <map>

namespace sic::cli {

using nlohmann::json;
namespace fs = std::filesystem;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, learning_rate, gamma_u, gamma_r, xi_c, xi_a, k, lambda,
                                                beta, epochs, batch_size, c, strategy, seed, tau_m, delta, C,
                                                flip_balance_sign, renormalize_adjusted, kmeans_restarts, raw_embeddings,
                                                n_per_cluster, d, noise_sigma, n_nouns, noun_noise, distractor_nouns,
                                                images, lexicon, semantic, labels, predictions, checkpoint, trace, out)

namespace {

constexpr std::uint64_t kFilterStream = 4;
constexpr std::uint64_t kBaselineStream = 1;  // same stream as the head initialization
constexpr std::size_t kHistogramBins = 40;

struct Field {
    const char* key;
    const char* flags;
    const char* help;
    const char* group;
};

constexpr const char* kHyper = "Hyperparameters";
constexpr const char* kSynth = "Synthetic data";
constexpr const char* kPaths = "Paths";

const Field kFields[] = {
    {"learning_rate", "--lr,--learning-rate", "Adam learning rate of the cluster head", kHyper},
    {"gamma_u", "--gamma-u", "uniqueness threshold; nouns with 1 - cos(w, centroid) below it are dropped", kHyper},
    {"gamma_r", "--gamma-r", "nouns kept per image cluster center by the relevance filter", kHyper},
    {"xi_c", "--xi-c", "images selected per cluster for center-based semantics (0: floor(0.9 n / c))", kHyper},
    {"xi_a", "--xi-a", "nearest nouns averaged by the adjusted center strategy", kHyper},
    {"k", "-k,--neighbors", "nearest neighbors per image for the consistency loss", kHyper},
    {"lambda", "--lambda", "weight of the balance regularizer", kHyper},
    {"beta", "--beta", "weight of the image-semantic consistency loss", kHyper},
    {"epochs", "--epochs", "training epochs", kHyper},
    {"batch_size", "--batch-size", "minibatch size", kHyper},
    {"c", "-c,--clusters", "number of clusters", kHyper},
    {"strategy", "--strategy", "semantic center strategy: direct, center or adjusted", kHyper},
    {"seed", "--seed", "random seed", kHyper},
    {"tau_m", "--tau-m", "temperature of the k-means initialization of the head", kHyper},
    {"delta", "--delta", "confidence level of the generalization bound, in (0, 1)", kHyper},
    {"C", "--C", "loss bound constant of the generalization bound", kHyper},
    {"flip_balance_sign", "--flip-balance-sign", "ablation: maximize instead of minimize the negative entropy", kHyper},
    {"renormalize_adjusted", "--renormalize-adjusted", "L2-normalize the adjusted semantic centers", kHyper},
    {"kmeans_restarts", "--kmeans-restarts", "k-means restarts (best inertia wins)", kHyper},
    {"raw_embeddings", "--raw-embeddings", "skip row normalization of image embeddings on ingest", kHyper},
    {"n_per_cluster", "--n-per-cluster", "synthetic images per cluster", kSynth},
    {"d", "--dim", "synthetic embedding dimension", kSynth},
    {"noise_sigma", "--noise-sigma", "per-coordinate image noise", kSynth},
    {"n_nouns", "--n-nouns", "unrelated background nouns", kSynth},
    {"noun_noise", "--noun-noise", "per-coordinate noise of the true nouns", kSynth},
    {"distractor_nouns", "--distractor-nouns", "distractor nouns per cluster", kSynth},
    {"images", "--images", "image embeddings (EMB1)", kPaths},
    {"lexicon", "--lexicon", "noun lexicon (EMB1 + .jsonl sidecar)", kPaths},
    {"semantic", "--semantic", "filtered noun lexicon written by filter-nouns", kPaths},
    {"labels", "--labels", "ground-truth labels (JSON array)", kPaths},
    {"predictions", "--predictions", "predicted labels (JSON array)", kPaths},
    {"checkpoint", "--checkpoint", "cluster head checkpoint (.emb with .json sidecar)", kPaths},
    {"trace", "--trace", "training trace CSV", kPaths},
    {"out", "-o,--out", "output directory", kPaths},
};

json defaults_json() { return json(RunConfig{}); }

std::string value_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

class RunLog {
public:
    explicit RunLog(fs::path path) : path_(std::move(path)) {}
    void line(const std::string& msg) const {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
        std::ofstream f(path_, std::ios::app);
        f << stamp << ' ' << msg << '\n';
    }

private:
    fs::path path_;
};

const std::string& require_path(const std::string& value, const char* flag) {
    if (value.empty()) throw ConfigError(std::string(flag) + " is required");
    return value;
}

std::size_t require_clusters(const RunConfig& cfg) {
    if (cfg.c <= 0) throw ConfigError("--clusters must be >= 1");
    return static_cast<std::size_t>(cfg.c);
}

RunLog start(const RunConfig& cfg, const char* command) {
    fs::path out(cfg.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
    write_text_file(out / "effective_config.json", to_json(cfg));
    RunLog log(out / "run.log");
    log.line(std::string(command) + " started");
    return log;
}

EmbeddingMatrix load_images(const RunConfig& cfg, const RunLog& log) {
    auto m = read_embeddings(require_path(cfg.images, "--images"));
    if (cfg.raw_embeddings) return m;
    if (!m.normalized()) log.line("image embeddings are not flagged as normalized; normalizing rows");
    return normalize_rows(m);
}

KMeansOptions kmeans_opts(const RunConfig& cfg, std::size_t c, std::uint64_t stream) {
    auto o = cfg.train_config().kmeans_options(stream);
    o.clusters = c;
    return o;
}

struct FilterOutcome {
    SemanticSpace space;
    std::size_t unique_count = 0;
    std::vector<double> scores;
    std::vector<std::string> removed;
};

FilterOutcome run_filter(const NounLexicon& lex, const EmbeddingMatrix& images, const RunConfig& cfg) {
    const std::size_t c = require_clusters(cfg);
    if (cfg.gamma_r <= 0) throw ConfigError("--gamma-r must be >= 1");
    const auto centroid = lexicon_centroid(lex);
    auto scores = uniqueness_scores(lex, centroid);
    std::vector<std::string> removed;
    for (std::size_t i = 0; i < lex.size(); ++i)
        if (!(scores[i] >= cfg.gamma_u)) removed.push_back(lex.nouns()[i]);
    auto unique = filter_unique(lex, cfg.gamma_u, centroid);
    auto space = filter_relevant(unique, images, c, static_cast<std::size_t>(cfg.gamma_r),
                                 kmeans_opts(cfg, c, kFilterStream));
    space.uniqueness_threshold = cfg.gamma_u;
    space.source_size = lex.size();
    return FilterOutcome{std::move(space), unique.size(), std::move(scores), std::move(removed)};
}

std::string filter_report_json(const FilterOutcome& f, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["W"] = f.space.source_size;
    j["W_u"] = f.unique_count;
    j["T"] = f.space.lexicon.size();
    j["gamma_u"] = cfg.gamma_u;
    j["gamma_r"] = cfg.gamma_r;
    j["removed_by_uniqueness"] = f.removed;
    std::vector<double> edges(kHistogramBins + 1);
    std::vector<std::size_t> counts(kHistogramBins, 0);
    const double width = 2.0 / static_cast<double>(kHistogramBins);
    for (std::size_t b = 0; b <= kHistogramBins; ++b) edges[b] = width * static_cast<double>(b);
    for (double s : f.scores) {
        auto b = static_cast<std::size_t>(std::max(0.0, s) / width);
        ++counts[std::min(b, kHistogramBins - 1)];
    }
    j["uniqueness_histogram"] = {{"bin_edges", edges}, {"counts", counts}};
    return j.dump(2) + "\n";
}

SemanticSpace load_space(const RunConfig& cfg, const EmbeddingMatrix& images, const RunLog& log) {
    if (!cfg.semantic.empty()) {
        auto lex = read_lexicon(cfg.semantic);
        const std::size_t size = lex.size();
        return SemanticSpace{std::move(lex), cfg.gamma_u, static_cast<std::size_t>(std::max<std::int64_t>(0, cfg.gamma_r)),
                             size};
    }
    if (cfg.lexicon.empty()) throw ConfigError("--semantic or --lexicon is required");
    log.line("no --semantic given; filtering " + cfg.lexicon + " in place");
    auto f = run_filter(read_lexicon(cfg.lexicon), images, cfg);
    write_lexicon(f.space.lexicon, fs::path(cfg.out) / "semantic.emb");
    write_text_file(fs::path(cfg.out) / "filter_report.json", filter_report_json(f, cfg));
    return std::move(f.space);
}

void finish(const RunLog& log, const char* command) { log.line(std::string(command) + " finished"); }

// Converts a flag string into a JSON value of the same kind as the default.
json parse_flag_value(const std::string& key, const std::string& text, const json& def) {
    auto fail = [&] { return ConfigError("invalid value '" + text + "' for " + key); };
    if (def.is_string()) return text;
    if (def.is_boolean()) {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw fail();
    }
    if (def.is_number_unsigned()) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size()) throw fail();
        return v;
    }
    if (def.is_number_integer()) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || p != text.data() + text.size()) throw fail();
        return v;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw fail();
        return v;
    } catch (const std::logic_error&) {
        throw fail();
    }
}

struct Subcommand {
    CLI::App* app = nullptr;
    void (*fn)(const RunConfig&) = nullptr;
    std::string config;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> options;
};

RunConfig resolve(const Subcommand& sub) {
    RunConfig cfg;
    if (!sub.config.empty()) cfg = merge_json(cfg, read_text_file(sub.config));
    const json def = defaults_json();
    json overrides = json::object();
    for (const auto& f : kFields) {
        const auto* opt = sub.options.at(f.key);
        if (opt->count() == 0) continue;
        if (def.at(f.key).is_boolean())
            overrides[f.key] = sub.flags.at(f.key);
        else
            overrides[f.key] = parse_flag_value(f.key, sub.values.at(f.key), def.at(f.key));
    }
    cfg = merge_json(cfg, overrides.dump());
    cfg.validate();
    return cfg;
}

}  // namespace

void RunConfig::validate() const {
    const std::pair<const char*, std::int64_t> counts[] = {
        {"gamma_r", gamma_r}, {"xi_c", xi_c},     {"xi_a", xi_a},   {"k", k},
        {"epochs", epochs},   {"batch_size", batch_size}, {"c", c}, {"kmeans_restarts", kmeans_restarts},
        {"n_per_cluster", n_per_cluster}, {"d", d}, {"n_nouns", n_nouns}, {"distractor_nouns", distractor_nouns}};
    for (const auto& [name, v] : counts)
        if (v < 0) throw ConfigError(std::string(name) + " must be >= 0, got " + std::to_string(v));
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(tau_m > 0.0)) throw ConfigError("tau_m must be positive");
    if (!(gamma_u >= 0.0)) throw ConfigError("gamma_u must be >= 0");
    if (kmeans_restarts == 0) throw ConfigError("kmeans_restarts must be >= 1");
    parse_strategy(strategy);
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.clusters = static_cast<std::size_t>(std::max<std::int64_t>(0, c));
    t.epochs = static_cast<std::size_t>(epochs);
    t.batch_size = static_cast<std::size_t>(batch_size);
    t.learning_rate = learning_rate;
    t.lambda = lambda;
    t.beta = beta;
    t.neighbors = static_cast<std::size_t>(k);
    t.strategy = parse_strategy(strategy);
    t.xi_c = static_cast<std::size_t>(xi_c);
    t.xi_a = static_cast<std::size_t>(xi_a);
    t.renormalize_adjusted = renormalize_adjusted;
    t.tau = tau_m;
    t.balance_sign = flip_balance_sign ? -1.0 : 1.0;
    t.seed = seed;
    t.kmeans_restarts = static_cast<std::size_t>(kmeans_restarts);
    return t;
}

RunConfig merge_json(RunConfig base, const std::string& json_text) {
    json in;
    try {
        in = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!in.is_object()) throw ConfigError("config must be a JSON object");
    json cur = base;
    for (const auto& [key, v] : in.items()) {
        if (!cur.contains(key)) throw ConfigError("unknown config key '" + key + "'");
        const json& def = cur.at(key);
        bool ok = false;
        if (def.is_string()) ok = v.is_string();
        else if (def.is_boolean()) ok = v.is_boolean();
        else if (def.is_number_unsigned()) ok = v.is_number_unsigned();
        else if (def.is_number_integer()) ok = v.is_number_integer();
        else ok = v.is_number();
        if (!ok) throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
        cur[key] = v;
    }
    return cur.get<RunConfig>();
}

std::string to_json(const RunConfig& cfg) {
    // Keys in a stable, documented order.
    const json j = cfg;
    nlohmann::ordered_json o;
    for (const auto& f : kFields) o[f.key] = j.at(f.key);
    return o.dump(2) + "\n";
}

void cmd_filter_nouns(const RunConfig& cfg) {
    const auto log = start(cfg, "filter-nouns");
    const auto images = load_images(cfg, log);
    const auto lex = read_lexicon(require_path(cfg.lexicon, "--lexicon"));
    const auto f = run_filter(lex, images, cfg);
    write_lexicon(f.space.lexicon, fs::path(cfg.out) / "semantic.emb");
    write_text_file(fs::path(cfg.out) / "filter_report.json", filter_report_json(f, cfg));
    log.line("kept " + std::to_string(f.space.lexicon.size()) + " of " + std::to_string(lex.size()) + " nouns");
    finish(log, "filter-nouns");
}

void cmd_train(const RunConfig& cfg) {
    const auto log = start(cfg, "train");
    const auto tc = cfg.train_config();
    tc.validate();
    require_clusters(cfg);
    const auto images = load_images(cfg, log);
    std::optional<LabelVector> truth;
    if (!cfg.labels.empty()) truth = read_labels(cfg.labels);
    if (truth && truth->size() != images.rows())
        throw SizeMismatch("labels have " + std::to_string(truth->size()) + " entries, images have " +
                           std::to_string(images.rows()));
    const auto space = load_space(cfg, images, log);
    const auto result = train(images, space, tc, truth ? &*truth : nullptr);
    for (const auto& w : result.warnings) log.line("warning: " + w);

    const fs::path out(cfg.out);
    write_checkpoint(result.params, tc.epochs, out / "checkpoint.emb");
    write_text_file(out / "trace.csv", trace_to_csv(result.trace));
    write_text_file(out / "pseudo_labels.json", pseudo_labels_to_json(result.last_pseudo_labels));
    // Labels come from the stored (float) weights so that predict on the
    // checkpoint reproduces them exactly.
    const auto pred = predict(checkpoint_precision(result.params), images);
    write_labels(pred, out / "labels.json");
    if (truth) write_text_file(out / "metrics.json", metrics_to_json(evaluate(pred, *truth)));
    finish(log, "train");
}

void cmd_predict(const RunConfig& cfg) {
    const auto log = start(cfg, "predict");
    const auto images = load_images(cfg, log);
    const auto params = read_checkpoint(require_path(cfg.checkpoint, "--checkpoint"));
    write_labels(predict(params, images), fs::path(cfg.out) / "labels.json");
    finish(log, "predict");
}

void cmd_evaluate(const RunConfig& cfg) {
    const auto log = start(cfg, "evaluate");
    const auto pred = read_labels(require_path(cfg.predictions, "--predictions"));
    const auto truth = read_labels(require_path(cfg.labels, "--labels"));
    write_text_file(fs::path(cfg.out) / "metrics.json", metrics_to_json(evaluate(pred, truth)));
    finish(log, "evaluate");
}

void cmd_baseline_kmeans(const RunConfig& cfg) {
    const auto log = start(cfg, "baseline-kmeans");
    const std::size_t c = require_clusters(cfg);
    const auto images = load_images(cfg, log);
    std::optional<LabelVector> truth;
    if (!cfg.labels.empty()) truth = read_labels(cfg.labels);
    const auto km = kmeans(images, kmeans_opts(cfg, c, kBaselineStream));
    const LabelVector pred(km.assignment, static_cast<std::uint32_t>(c));
    write_labels(pred, fs::path(cfg.out) / "labels.json");
    if (truth) write_text_file(fs::path(cfg.out) / "metrics.json", metrics_to_json(evaluate(pred, *truth)));
    finish(log, "baseline-kmeans");
}

void cmd_bound_report(const RunConfig& cfg) {
    const auto log = start(cfg, "bound-report");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(cfg.C > 0.0)) throw ConfigError("C must be positive");
    const auto images = load_images(cfg, log);
    const auto params = read_checkpoint(require_path(cfg.checkpoint, "--checkpoint"));
    const auto q = forward(params, images);
    const auto g = knn_graph(images, static_cast<std::size_t>(cfg.k));
    const auto r = bound_report(q, g, cfg.lambda, cfg.beta, params.clusters, cfg.delta, cfg.C);
    if (r.vacuous) log.line("warning: neighbor agreement below floor; the bound is vacuous");
    write_text_file(fs::path(cfg.out) / "bound_report.json", bound_report_to_json(r));
    finish(log, "bound-report");
}

void cmd_synth(const RunConfig& cfg) {
    const auto log = start(cfg, "synth");
    SynthSpec spec;
    spec.c = static_cast<std::size_t>(cfg.c == 0 ? 3 : cfg.c);
    spec.n_per_cluster = static_cast<std::size_t>(cfg.n_per_cluster);
    spec.d = static_cast<std::size_t>(cfg.d);
    spec.noise_sigma = cfg.noise_sigma;
    spec.n_nouns = static_cast<std::size_t>(cfg.n_nouns);
    spec.noun_noise = cfg.noun_noise;
    spec.distractor_nouns = static_cast<std::size_t>(cfg.distractor_nouns);
    spec.seed = cfg.seed;
    const auto data = generate(spec);
    const fs::path out(cfg.out);
    write_embeddings(data.images, out / "images.emb");
    write_labels(data.truth, out / "labels.json");
    write_lexicon(data.lexicon, out / "lexicon.emb");
    nlohmann::ordered_json j;
    j["truth_nouns"] = data.truth_nouns;
    std::vector<std::string> names;
    for (auto t : data.truth_nouns) names.push_back(data.lexicon.nouns()[t]);
    j["truth_noun_names"] = names;
    j["general_word"] = data.lexicon.nouns()[data.general_word];
    write_text_file(out / "truth_nouns.json", j.dump(2) + "\n");
    finish(log, "synth");
}

void cmd_convergence_report(const RunConfig& cfg) {
    const auto log = start(cfg, "convergence-report");
    const auto trace = trace_from_csv(read_text_file(require_path(cfg.trace, "--trace")));
    std::vector<double> norms;
    for (const auto& e : trace.epochs) norms.push_back(e.grad_norm);
    const auto s = convergence_report(norms);
    write_text_file(fs::path(cfg.out) / "convergence.csv", convergence_to_csv(s, norms));
    write_text_file(fs::path(cfg.out) / "convergence.json", convergence_to_json(s));
    finish(log, "convergence-report");
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Semantic-enhanced image clustering engine"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    const std::pair<const char*, std::pair<const char*, void (*)(const RunConfig&)>> commands[] = {
        {"filter-nouns", {"Filter a noun lexicon down to a task-relevant semantic space", cmd_filter_nouns}},
        {"train", {"Train the cluster head and write checkpoint, trace, labels and metrics", cmd_train}},
        {"predict", {"Assign clusters with a trained checkpoint", cmd_predict}},
        {"evaluate", {"Compute ACC, NMI and ARI of predicted labels", cmd_evaluate}},
        {"baseline-kmeans", {"k-means on the raw image embeddings", cmd_baseline_kmeans}},
        {"bound-report", {"Empirical generalization bound constants for a checkpoint", cmd_bound_report}},
        {"synth", {"Generate a synthetic embedding dataset", cmd_synth}},
        {"convergence-report", {"Gradient-norm convergence diagnostic of a training trace", cmd_convergence_report}},
    };

    const json def = defaults_json();
    std::list<Subcommand> subs;
    for (const auto& [name, info] : commands) {
        auto& s = subs.emplace_back();
        s.app = app.add_subcommand(name, info.first);
        s.fn = info.second;
        s.app->add_option("--config", s.config, "JSON config file; explicit flags override it");
        for (const auto& f : kFields) {
            const json& dv = def.at(f.key);
            CLI::Option* opt = nullptr;
            if (dv.is_boolean()) {
                opt = s.app->add_flag(f.flags, s.flags[f.key], f.help);
            } else {
                opt = s.app->add_option(f.flags, s.values[f.key], f.help);
                opt->default_str(value_text(dv));
                opt->type_name(dv.is_string() ? "TEXT" : (dv.is_number_float() ? "FLOAT" : "INT"));
            }
            opt->group(f.group);
            s.options[f.key] = opt;
        }
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(ErrorKind::Config);
    }

    for (const auto& s : subs) {
        if (!s.app->parsed()) continue;
        try {
            s.fn(resolve(s));
            return 0;
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_code(e.kind());
        } catch (const json::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_code(ErrorKind::Data);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return exit_code(ErrorKind::Numeric);
        }
    }
    return exit_code(ErrorKind::Config);
}

}  // namespace sic::cli
