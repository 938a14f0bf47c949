#include "sic/cli.hpp"
#include "sic/clusterhead.hpp"
#include "sic/errors.hpp"
#include "sic/metrics.hpp"
#include "sic/pseudolab.hpp"
#include "sic/random.hpp"
#include "sic/semspace.hpp"
#include "sic/synthgen.hpp"
#include "sic/theory.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace sic;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

EmbeddingMatrix to_matrix(const FloatArray& a, bool normalized = false) {
    if (a.ndim() != 2) throw DataError("expected a 2-D array");
    const auto n = static_cast<std::size_t>(a.shape(0)), d = static_cast<std::size_t>(a.shape(1));
    return EmbeddingMatrix(n, d, std::vector<float>(a.data(), a.data() + n * d), normalized);
}

py::array_t<float> to_numpy(const EmbeddingMatrix& m) {
    py::array_t<float> out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

py::array_t<double> to_numpy(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    py::array_t<double> out({rows, cols});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<std::uint32_t> to_numpy(const std::vector<std::uint32_t>& v) {
    return py::array_t<std::uint32_t>(static_cast<py::ssize_t>(v.size()), v.data());
}

LabelVector to_labels(const LabelArray& a) {
    return LabelVector(std::vector<std::uint32_t>(a.data(), a.data() + a.size()));
}

NounLexicon to_lexicon(const std::vector<std::string>& nouns, const FloatArray& emb) {
    return NounLexicon(nouns, to_matrix(emb, true));
}

ClusterHeadParams to_params(const DoubleArray& weight, const DoubleArray& bias, double tau) {
    if (weight.ndim() != 2) throw DataError("weight must be 2-D");
    ClusterHeadParams p{static_cast<std::size_t>(weight.shape(0)), static_cast<std::size_t>(weight.shape(1)),
                        std::vector<double>(weight.data(), weight.data() + weight.size()),
                        std::vector<double>(bias.data(), bias.data() + bias.size()), tau};
    p.validate();
    return p;
}

py::dict params_dict(const ClusterHeadParams& p) {
    py::dict d;
    d["weight"] = to_numpy(p.weight, p.clusters, p.dim);
    d["bias"] = py::array_t<double>(static_cast<py::ssize_t>(p.bias.size()), p.bias.data());
    d["tau_m"] = p.tau;
    return d;
}

}  // namespace

PYBIND11_MODULE(_sic, m) {
    m.doc() = "Semantic-enhanced image clustering engine";

    static py::exception<Error> base(m, "SicError");
    static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
    static py::exception<DataError> data_error(m, "DataError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Config) py::set_error(config_error, e.what());
            else if (e.kind() == ErrorKind::Data) py::set_error(data_error, e.what());
            else py::set_error(base, e.what());
        }
    });

    m.def("read_embeddings", [](const std::string& path) { return to_numpy(read_embeddings(path)); },
          py::arg("path"));
    m.def(
        "write_embeddings",
        [](const std::string& path, const FloatArray& a, bool normalized) {
            write_embeddings(to_matrix(a, normalized), path);
        },
        py::arg("path"), py::arg("array"), py::arg("normalized") = false);

    m.def(
        "synth",
        [](std::size_t c, std::size_t n_per_cluster, std::size_t d, double noise_sigma, std::size_t n_nouns,
           double noun_noise, std::size_t distractor_nouns, std::uint64_t seed) {
            SynthSpec s{c, n_per_cluster, d, noise_sigma, n_nouns, noun_noise, distractor_nouns, seed};
            auto data = generate(s);
            py::dict out;
            out["images"] = to_numpy(data.images);
            out["labels"] = to_numpy(data.truth.labels);
            out["nouns"] = data.lexicon.nouns();
            out["noun_embeddings"] = to_numpy(data.lexicon.embeddings());
            out["truth_nouns"] = data.truth_nouns;
            return out;
        },
        py::arg("c") = 3, py::arg("n_per_cluster") = 200, py::arg("d") = 32, py::arg("noise_sigma") = 0.15,
        py::arg("n_nouns") = 50, py::arg("noun_noise") = 0.05, py::arg("distractor_nouns") = 0, py::arg("seed") = 0);

    m.def(
        "kmeans",
        [](const FloatArray& points, std::size_t c, std::uint64_t seed, std::size_t restarts) {
            auto r = kmeans(to_matrix(points), {c, seed, 300, 1e-6, restarts});
            return py::make_tuple(to_numpy(r.centers), to_numpy(r.assignment), r.inertia);
        },
        py::arg("points"), py::arg("c"), py::arg("seed") = 0, py::arg("restarts") = 10);

    m.def(
        "knn",
        [](const FloatArray& points, std::size_t k) {
            auto g = knn_graph(to_matrix(points), k);
            py::array_t<std::uint32_t> out({g.n, g.k});
            std::copy(g.indices.begin(), g.indices.end(), out.mutable_data());
            return out;
        },
        py::arg("points"), py::arg("k"));

    m.def(
        "filter_nouns",
        [](const std::vector<std::string>& nouns, const FloatArray& emb, const FloatArray& images, std::size_t c,
           double gamma_u, std::size_t gamma_r, std::uint64_t seed) {
            auto s = build_semantic_space(to_lexicon(nouns, emb), to_matrix(images), c, gamma_u, gamma_r,
                                          {c, derive_seed(seed, 4), 300, 1e-6, 10});  // same stream as the CLI
            return py::make_tuple(s.lexicon.nouns(), to_numpy(s.lexicon.embeddings()));
        },
        py::arg("nouns"), py::arg("noun_embeddings"), py::arg("images"), py::arg("c"), py::arg("gamma_u") = 0.05,
        py::arg("gamma_r") = 200, py::arg("seed") = 0);

    m.def(
        "train",
        [](const FloatArray& images, const std::vector<std::string>& nouns, const FloatArray& emb, std::size_t c,
           std::optional<LabelArray> labels, std::size_t epochs, std::size_t batch_size, double learning_rate,
           double lambda, double beta, std::size_t k, const std::string& strategy, std::size_t xi_c,
           std::size_t xi_a, double tau_m, std::uint64_t seed, bool flip_balance_sign) {
            TrainConfig cfg;
            cfg.clusters = c;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = learning_rate;
            cfg.lambda = lambda;
            cfg.beta = beta;
            cfg.neighbors = k;
            cfg.strategy = parse_strategy(strategy);
            cfg.xi_c = xi_c;
            cfg.xi_a = xi_a;
            cfg.tau = tau_m;
            cfg.seed = seed;
            cfg.balance_sign = flip_balance_sign ? -1.0 : 1.0;
            const auto lex = to_lexicon(nouns, emb);
            const SemanticSpace space{lex, 0.0, 0, lex.size()};
            const auto x = to_matrix(images);
            std::optional<LabelVector> truth;
            if (labels) truth = to_labels(*labels);
            std::optional<TrainResult> result;
            {
                py::gil_scoped_release release;
                result.emplace(train(x, space, cfg, truth ? &*truth : nullptr));
            }
            const auto& r = *result;
            py::list trace;
            for (const auto& e : r.trace.epochs) {
                py::dict d;
                d["epoch"] = e.epoch;
                d["loss"] = e.total;
                d["L_I"] = e.image;
                d["L_IS"] = e.image_semantic;
                d["L_B"] = e.balance;
                d["grad_norm"] = e.grad_norm;
                d["pl_acc"] = e.pseudo_label_accuracy ? py::cast(*e.pseudo_label_accuracy) : py::none();
                trace.append(d);
            }
            auto out = params_dict(r.params);
            out["trace"] = trace;
            out["labels"] = to_numpy(predict(r.params, x).labels);
            out["pseudo_labels"] = to_numpy(r.last_pseudo_labels.labels);
            out["warnings"] = r.warnings;
            return out;
        },
        py::arg("images"), py::arg("nouns"), py::arg("noun_embeddings"), py::arg("c"), py::arg("labels") = py::none(),
        py::arg("epochs") = 100, py::arg("batch_size") = 128, py::arg("learning_rate") = 1e-4, py::arg("lambda_") = 5.0,
        py::arg("beta") = 1.0, py::arg("k") = 20, py::arg("strategy") = "adjusted", py::arg("xi_c") = 0,
        py::arg("xi_a") = 20, py::arg("tau_m") = 1.0, py::arg("seed") = 0, py::arg("flip_balance_sign") = false);

    m.def(
        "predict",
        [](const DoubleArray& weight, const DoubleArray& bias, const FloatArray& images, double tau_m) {
            return to_numpy(predict(to_params(weight, bias, tau_m), to_matrix(images)).labels);
        },
        py::arg("weight"), py::arg("bias"), py::arg("images"), py::arg("tau_m") = 1.0);

    m.def(
        "evaluate",
        [](const LabelArray& pred, const LabelArray& truth) {
            const auto r = evaluate(to_labels(pred), to_labels(truth));
            py::dict d;
            d["acc"] = r.acc;
            d["nmi"] = r.nmi;
            d["ari"] = r.ari;
            return d;
        },
        py::arg("pred"), py::arg("truth"));

    m.def(
        "bound_constants",
        [](double mu_n, double mu_p, std::size_t k_prime, double lambda, double beta, std::size_t c, double C) {
            const auto k = bound_constants(mu_n, mu_p, k_prime, lambda, beta, c, C);
            return py::make_tuple(k.c1, k.c2);
        },
        py::arg("mu_n"), py::arg("mu_p"), py::arg("k_prime"), py::arg("lambda_"), py::arg("beta"), py::arg("c"),
        py::arg("C") = 1.0);
    m.def(
        "bound_gap", [](double c1, double c2, std::size_t n, double delta) { return bound_gap({c1, c2}, n, delta); },
        py::arg("c1"), py::arg("c2"), py::arg("n"), py::arg("delta") = 0.05);
    m.def(
        "convergence_slope",
        [](const std::vector<double>& grad_norms) { return convergence_report(grad_norms).slope; },
        py::arg("grad_norms"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "sic");
            return cli::run(args);
        },
        py::arg("args"), "Runs a CLI subcommand in-process and returns its exit code.");
}
