#include "sic/synthgen.hpp"

#include "sic/errors.hpp"
#include "sic/random.hpp"

#include <cmath>
#include <numeric>

namespace sic {

namespace {

void normalize(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    if (!(s > 0.0)) throw ConfigError("synthetic vector collapsed to zero");
    for (double& x : v) x /= s;
}

std::vector<double> perturbed(std::span<const double> base, double sigma, Rng& rng) {
    std::vector<double> v(base.begin(), base.end());
    for (double& x : v) x += sigma * rng.normal();
    normalize(v);
    return v;
}

}  // namespace

void SynthSpec::validate() const {
    if (c < 2) throw ConfigError("synthetic spec needs c >= 2");
    if (d < 2) throw ConfigError("synthetic spec needs d >= 2");
    if (n_per_cluster == 0) throw ConfigError("synthetic spec needs n_per_cluster >= 1");
    if (!(noise_sigma >= 0.0) || !(noun_noise >= 0.0) || !std::isfinite(noise_sigma) || !std::isfinite(noun_noise))
        throw ConfigError("synthetic noise levels must be finite and >= 0");
}

SynthData generate(const SynthSpec& spec) {
    spec.validate();
    const std::size_t c = spec.c, d = spec.d;
    Rng dir_rng(derive_seed(spec.seed, 0));
    Rng img_rng(derive_seed(spec.seed, 1));
    Rng noun_rng(derive_seed(spec.seed, 2));
    Rng order_rng(derive_seed(spec.seed, 3));

    std::vector<std::vector<double>> dirs;
    std::size_t attempts = 0;
    while (dirs.size() < c) {
        if (++attempts > kDirectionAttempts)
            throw ConfigError("could not place " + std::to_string(c) + " separated directions in d = " +
                              std::to_string(d));
        std::vector<double> v(d);
        for (double& x : v) x = dir_rng.normal();
        normalize(v);
        bool ok = true;
        for (const auto& u : dirs)
            if (std::inner_product(v.begin(), v.end(), u.begin(), 0.0) > kMaxDirectionDot) ok = false;
        if (ok) dirs.push_back(std::move(v));
    }

    const std::size_t n = c * spec.n_per_cluster;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, order_rng);
    std::vector<double> img(n * d);
    std::vector<std::uint32_t> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i / spec.n_per_cluster;
        auto v = perturbed(dirs[l], spec.noise_sigma, img_rng);
        std::copy(v.begin(), v.end(), img.begin() + static_cast<std::ptrdiff_t>(order[i] * d));
        truth[order[i]] = static_cast<std::uint32_t>(l);
    }

    std::vector<std::string> names;
    std::vector<std::vector<double>> vecs;
    std::vector<std::size_t> truth_nouns(c);
    for (std::size_t l = 0; l < c; ++l) {
        const std::string stem = "class" + std::to_string(l);
        truth_nouns[l] = names.size();
        names.push_back(stem);
        vecs.push_back(perturbed(dirs[l], spec.noun_noise, noun_rng));
        for (std::size_t k = 0; k < spec.distractor_nouns; ++k) {
            if (k % 2 == 0) {
                names.push_back(stem + "_kin" + std::to_string(k / 2));
                vecs.push_back(perturbed(dirs[l], kDistractorSpread, noun_rng));
            } else {
                const std::size_t m = (l + 1 + (k / 2) % (c - 1)) % c;
                std::vector<double> base(d);
                for (std::size_t j = 0; j < d; ++j) base[j] = dirs[l][j] + kConfuserLean * dirs[m][j];
                names.push_back(stem + "_near" + std::to_string(m) + "_" + std::to_string(k / 2));
                vecs.push_back(perturbed(base, kDistractorSpread, noun_rng));
            }
        }
    }
    for (std::size_t b = 0; b < spec.n_nouns; ++b) {
        std::vector<double> v(d);
        for (double& x : v) x = noun_rng.normal();
        normalize(v);
        names.push_back("background" + std::to_string(b));
        vecs.push_back(std::move(v));
    }
    std::vector<double> centroid(d, 0.0);
    for (const auto& v : vecs)
        for (std::size_t j = 0; j < d; ++j) centroid[j] += v[j];
    names.push_back(kGeneralWord);
    vecs.push_back(perturbed(centroid, 1e-3 * std::sqrt(std::inner_product(centroid.begin(), centroid.end(),
                                                                           centroid.begin(), 0.0)),
                             noun_rng));

    // Row order of the lexicon is shuffled so that position carries no signal.
    std::vector<std::size_t> perm(names.size());
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, order_rng);
    std::vector<std::size_t> where(perm.size());
    std::vector<std::string> lex_names(perm.size());
    std::vector<double> lex(perm.size() * d);
    for (std::size_t r = 0; r < perm.size(); ++r) {
        where[perm[r]] = r;
        lex_names[r] = names[perm[r]];
        std::copy(vecs[perm[r]].begin(), vecs[perm[r]].end(), lex.begin() + static_cast<std::ptrdiff_t>(r * d));
    }
    for (auto& t : truth_nouns) t = where[t];

    std::vector<double> dir_flat;
    for (const auto& v : dirs) dir_flat.insert(dir_flat.end(), v.begin(), v.end());

    return SynthData{EmbeddingMatrix::from_doubles(n, d, img, true),
                     LabelVector(std::move(truth), static_cast<std::uint32_t>(c)),
                     NounLexicon(std::move(lex_names), EmbeddingMatrix::from_doubles(perm.size(), d, lex, true)),
                     std::move(truth_nouns),
                     EmbeddingMatrix::from_doubles(c, d, dir_flat, true),
                     where[names.size() - 1]};
}

}  // namespace sic
