#include "sic/embedstore.hpp"

#include "sic/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

namespace sic {

namespace {

constexpr std::array<char, 4> kMagic{'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<unsigned char>((v >> s) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double row_norm(std::span<const float> r) {
    double s = 0.0;
    for (float x : r) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    return bytes;
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    out.flush();
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t cols, std::vector<float> data, bool normalized)
    : rows_(rows), cols_(cols), data_(std::move(data)), normalized_(normalized) {
    if (rows_ == 0 || cols_ == 0) throw DataError("embedding matrix must have n >= 1 and d >= 1");
    if (data_.size() != rows_ * cols_)
        throw DataError("embedding data length " + std::to_string(data_.size()) + " != n*d = " +
                        std::to_string(rows_ * cols_));
    for (std::size_t k = 0; k < data_.size(); ++k) {
        if (!std::isfinite(data_[k]))
            throw DataError("non-finite value at row " + std::to_string(k / cols_) + ", column " +
                            std::to_string(k % cols_));
    }
    if (normalized_) {
        for (std::size_t i = 0; i < rows_; ++i) {
            const double nrm = row_norm(row(i));
            if (std::abs(nrm - 1.0) > kUnitNormTolerance)
                throw DataError("row " + std::to_string(i) + " flagged normalized but has norm " +
                                std::to_string(nrm));
        }
    }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> indices) const {
    std::vector<float> out;
    out.reserve(indices.size() * cols_);
    for (std::size_t i : indices) {
        if (i >= rows_) throw DataError("row index " + std::to_string(i) + " out of range");
        auto r = row(i);
        out.insert(out.end(), r.begin(), r.end());
    }
    return EmbeddingMatrix(indices.size(), cols_, std::move(out), normalized_);
}

EmbeddingMatrix EmbeddingMatrix::from_doubles(std::size_t rows, std::size_t cols, std::span<const double> values,
                                              bool normalized) {
    std::vector<float> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [](double v) { return static_cast<float>(v); });
    return EmbeddingMatrix(rows, cols, std::move(out), normalized);
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.normalized_ == b.normalized_ && a.data_ == b.data_;
}

bool bitwise_equal(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.normalized() != b.normalized()) return false;
    return std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

NounLexicon::NounLexicon(std::vector<std::string> nouns, EmbeddingMatrix embeddings)
    : nouns_(std::move(nouns)), embeddings_(std::move(embeddings)) {
    if (nouns_.size() != embeddings_.rows())
        throw DataError("lexicon has " + std::to_string(nouns_.size()) + " nouns but " +
                        std::to_string(embeddings_.rows()) + " embedding rows");
    std::unordered_set<std::string> seen;
    for (const auto& n : nouns_) {
        if (n.empty()) throw DataError("lexicon contains an empty noun");
        if (!seen.insert(n).second) throw DataError("duplicate noun '" + n + "' in lexicon");
    }
}

NounLexicon NounLexicon::subset(std::span<const std::size_t> indices) const {
    std::vector<std::string> names;
    names.reserve(indices.size());
    for (std::size_t i : indices) names.push_back(nouns_.at(i));
    return NounLexicon(std::move(names), embeddings_.select_rows(indices));
}

LabelVector::LabelVector(std::vector<std::uint32_t> values, std::uint32_t classes) : labels(std::move(values)) {
    std::uint32_t max_label = 0;
    for (auto l : labels) max_label = std::max(max_label, l);
    if (classes == 0) {
        num_classes = labels.empty() ? 0 : max_label + 1;
    } else {
        if (!labels.empty() && max_label >= classes)
            throw DataError("label " + std::to_string(max_label) + " out of range for " + std::to_string(classes) +
                            " classes");
        num_classes = classes;
    }
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    const std::string where = " in '" + path.string() + "'";
    if (bytes.size() < kHeaderBytes) throw FormatError("truncated EMB1 header" + where);
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("bad magic (expected EMB1)" + where);
    const std::uint32_t n = get_u32(bytes.data() + 4);
    const std::uint32_t d = get_u32(bytes.data() + 8);
    const unsigned char flag = bytes[12];
    if (flag > 1) throw FormatError("normalized flag must be 0 or 1" + where);
    if (bytes[13] != 0 || bytes[14] != 0 || bytes[15] != 0) throw FormatError("non-zero header padding" + where);
    if (n == 0 || d == 0) throw FormatError("EMB1 header declares an empty matrix" + where);
    const std::size_t count = static_cast<std::size_t>(n) * d;
    const std::size_t expected = kHeaderBytes + count * 4;
    if (bytes.size() < expected)
        throw FormatError("truncated EMB1 payload: " + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected) + where);
    if (bytes.size() > expected) throw FormatError("trailing bytes after EMB1 payload" + where);

    std::vector<float> data(count);
    const unsigned char* p = bytes.data() + kHeaderBytes;
    for (std::size_t k = 0; k < count; ++k, p += 4) data[k] = std::bit_cast<float>(get_u32(p));
    try {
        return EmbeddingMatrix(n, d, std::move(data), flag == 1);
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + where);
    }
}

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::vector<unsigned char> out;
    out.reserve(kHeaderBytes + m.data().size() * 4);
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.push_back(m.normalized() ? 1 : 0);
    out.insert(out.end(), 3, 0);
    for (float v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    write_bytes(path, out.data(), out.size());
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
    std::vector<float> out(m.data().begin(), m.data().end());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double nrm = row_norm(m.row(i));
        if (nrm == 0.0) throw DegenerateRowError(i);
        float* r = out.data() + i * m.cols();
        for (std::size_t j = 0; j < m.cols(); ++j) r[j] = static_cast<float>(r[j] / nrm);
    }
    return EmbeddingMatrix(m.rows(), m.cols(), std::move(out), true);
}

std::filesystem::path lexicon_sidecar_path(const std::filesystem::path& emb_path) {
    auto p = emb_path;
    p.replace_extension(".jsonl");
    return p;
}

NounLexicon read_lexicon(const std::filesystem::path& emb_path) {
    auto emb = read_embeddings(emb_path);
    const auto side = lexicon_sidecar_path(emb_path);
    std::ifstream in(side);
    if (!in) throw IoError("cannot open lexicon sidecar '" + side.string() + "'");
    std::vector<std::string> nouns;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            if (!j.is_string()) throw FormatError("line is not a JSON string");
            nouns.push_back(j.get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(side.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError(side.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return NounLexicon(std::move(nouns), std::move(emb));
}

void write_lexicon(const NounLexicon& lex, const std::filesystem::path& emb_path) {
    write_embeddings(lex.embeddings(), emb_path);
    std::string text;
    for (const auto& n : lex.nouns()) {
        text += nlohmann::json(n).dump();
        text += '\n';
    }
    write_text_file(lexicon_sidecar_path(emb_path), text);
}

LabelVector read_labels(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("labels file '" + path.string() + "': " + e.what());
    }
    // Accept a bare array or an object carrying a "labels" array.
    const nlohmann::json* arr = &j;
    if (j.is_object() && j.contains("labels")) arr = &j.at("labels");
    if (!arr->is_array()) throw FormatError("labels file '" + path.string() + "' is not a JSON array");
    std::vector<std::uint32_t> labels;
    labels.reserve(arr->size());
    for (const auto& v : *arr) {
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw FormatError("labels file '" + path.string() + "' contains a non-integer or negative entry");
        labels.push_back(v.get<std::uint32_t>());
    }
    return LabelVector(std::move(labels));
}

void write_labels(const LabelVector& labels, const std::filesystem::path& path) {
    write_text_file(path, nlohmann::json(labels.labels).dump() + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_bytes(path, text.data(), text.size());
}

std::string read_text_file(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace sic
