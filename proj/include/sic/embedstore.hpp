#pragma once

// Dense embedding matrices, noun lexicons and label vectors, plus their
// on-disk formats:
//
//   EMB1 (binary, little-endian)
//     offset 0   char[4]  "EMB1"
//     offset 4   u32      n (rows)
//     offset 8   u32      d (columns)
//     offset 12  u8       normalized flag (0 or 1)
//     offset 13  u8[3]    zero padding
//     offset 16  f32[n*d] row-major values
//
//   Lexicon: EMB1 file plus a JSON-lines sidecar (one JSON string per line)
//   sharing the same stem, e.g. nouns.emb / nouns.jsonl.
//
//   Labels: a JSON array of non-negative integers.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sic {

/// Tolerance on | ||row|| - 1 | for matrices flagged as normalized.
inline constexpr double kUnitNormTolerance = 1e-4;

/// Immutable n x d row-major float matrix.
class EmbeddingMatrix {
public:
    /// Validates shape, finiteness and (when flagged) unit row norms.
    /// Throws DataError on violation.
    EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data, bool normalized = false);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool normalized() const noexcept { return normalized_; }

    std::span<const float> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    float at(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    std::span<const float> data() const noexcept { return data_; }

    /// Rows selected by index, in the given order.
    EmbeddingMatrix select_rows(std::span<const std::size_t> indices) const;

    /// Builds a matrix from double-precision rows, rounding to float.
    static EmbeddingMatrix from_doubles(std::size_t rows, std::size_t cols, std::span<const double> values,
                                        bool normalized = false);

    friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<float> data_;
    bool normalized_;
};

/// Bitwise comparison of shape, flag and every float.
bool bitwise_equal(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

/// Nouns paired 1:1 with the rows of an embedding matrix.
class NounLexicon {
public:
    /// Throws DataError on size mismatch, empty or duplicate nouns.
    NounLexicon(std::vector<std::string> nouns, EmbeddingMatrix embeddings);

    std::size_t size() const noexcept { return nouns_.size(); }
    const std::vector<std::string>& nouns() const noexcept { return nouns_; }
    const EmbeddingMatrix& embeddings() const noexcept { return embeddings_; }

    NounLexicon subset(std::span<const std::size_t> indices) const;

private:
    std::vector<std::string> nouns_;
    EmbeddingMatrix embeddings_;
};

/// Class index per sample.
struct LabelVector {
    std::vector<std::uint32_t> labels;
    std::uint32_t num_classes = 0;

    LabelVector() = default;
    /// num_classes == 0 means "infer as max label + 1". Throws DataError
    /// when a label is out of range.
    explicit LabelVector(std::vector<std::uint32_t> values, std::uint32_t classes = 0);

    std::size_t size() const noexcept { return labels.size(); }
    friend bool operator==(const LabelVector&, const LabelVector&) = default;
};

EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);

/// Scales every row to unit L2 norm. Throws DegenerateRowError on a zero row.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m);

/// `nouns.emb` -> `nouns.jsonl`.
std::filesystem::path lexicon_sidecar_path(const std::filesystem::path& emb_path);

NounLexicon read_lexicon(const std::filesystem::path& emb_path);
void write_lexicon(const NounLexicon& lex, const std::filesystem::path& emb_path);

LabelVector read_labels(const std::filesystem::path& path);
void write_labels(const LabelVector& labels, const std::filesystem::path& path);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace sic
