#pragma once

// Deterministic synthetic stand-in for a joint image/text embedding space.
//
// Cluster directions are unit vectors with pairwise dot <= 0.3. Each image is
// its direction plus isotropic Gaussian noise, renormalized. The lexicon holds
// per cluster one true noun, `distractor_nouns` distractors (alternating
// co-hyponyms around the direction and confusers leaning toward another
// cluster), then `n_nouns` unrelated background nouns and one general word
// ("object") planted at the lexicon centroid.

#include "sic/embedstore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sic {

inline constexpr double kMaxDirectionDot = 0.3;
inline constexpr std::size_t kDirectionAttempts = 1000;
inline constexpr double kDistractorSpread = 0.25;
inline constexpr double kConfuserLean = 0.8;
inline constexpr const char* kGeneralWord = "object";

struct SynthSpec {
    std::size_t c = 3;
    std::size_t n_per_cluster = 200;
    std::size_t d = 32;
    double noise_sigma = 0.15;
    std::size_t n_nouns = 50;
    double noun_noise = 0.05;
    std::size_t distractor_nouns = 0;
    std::uint64_t seed = 0;

    /// Throws ConfigError.
    void validate() const;
};

struct SynthData {
    EmbeddingMatrix images;
    LabelVector truth;
    NounLexicon lexicon;
    std::vector<std::size_t> truth_nouns;  // lexicon row of each cluster's true noun
    EmbeddingMatrix directions;
    std::size_t general_word = 0;          // lexicon row of the planted general word
};

SynthData generate(const SynthSpec& spec);

}  // namespace sic
