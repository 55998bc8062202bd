#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ff {

enum class Weighting { tfidf, count };

std::string_view to_string(Weighting w) noexcept;
std::optional<Weighting> parse_weighting(std::string_view s) noexcept;

/// Packed n-gram of up to kMaxGramOrder tag codes, 16 bits each, first tag in
/// the most significant slot.
using GramKey = std::uint64_t;
inline constexpr int kMaxGramOrder = 4;

/// Interns POS tag strings as small integer codes. Codes are only an encoding;
/// every ordering decision is made on the decoded strings.
class TagCodec {
 public:
  std::uint16_t encode(std::string_view tag);
  std::optional<std::uint16_t> find(std::string_view tag) const;
  std::vector<std::uint16_t> encode_all(std::span<const std::string> tags);

  /// Tags joined by single spaces, e.g. "NNP VBD".
  std::string gram_string(GramKey key) const;
  std::size_t size() const noexcept { return tags_.size(); }

 private:
  std::unordered_map<std::string, std::uint16_t> codes_;
  std::vector<std::string> tags_;  // index = code - 1
};

/// A gram multiset: (gram, multiplicity) sorted by key.
using GramCounts = std::vector<std::pair<GramKey, std::uint32_t>>;

/// All contiguous n-grams for n in [n_min, n_max] with multiplicities. Throws
/// std::invalid_argument unless 1 <= n_min <= n_max <= kMaxGramOrder.
GramCounts extract_ngrams(std::span<const std::uint16_t> codes, int n_min = 1, int n_max = 3);
GramCounts extract_ngrams(std::span<const std::string> tags, TagCodec& codec, int n_min = 1, int n_max = 3);

std::size_t total_grams(const GramCounts& counts) noexcept;

struct Vocabulary {
  std::unordered_map<GramKey, std::uint32_t> index;
  std::vector<GramKey> keys;            // by column
  std::vector<std::string> grams;       // by column, lexicographic
  std::vector<std::uint64_t> corpus_freq;
  std::size_t max_features = 20000;

  std::size_t size() const noexcept { return keys.size(); }
  std::optional<std::uint32_t> find(GramKey key) const;
};

/// Keeps the max_features grams of highest total frequency, ties going to the
/// lexicographically smaller gram; columns are assigned in lexicographic order.
Vocabulary build_vocabulary(std::span<const GramCounts> corpus, const TagCodec& codec,
                            std::size_t max_features = 20000);

/// Smoothed idf: ln((1+N)/(1+df)) + 1. Throws std::invalid_argument when a
/// vocabulary term never occurs in the corpus.
std::vector<double> fit_idf(std::span<const GramCounts> corpus, const Vocabulary& vocab);

struct SparseRow {
  std::vector<std::uint32_t> cols;  // ascending
  std::vector<double> values;

  std::size_t nnz() const noexcept { return cols.size(); }
  double dot(std::span<const double> dense) const noexcept;
};

/// Count mode: multiplicities of in-vocabulary grams. Tf-idf mode: count * idf,
/// then L2-normalized (all-zero rows stay zero). Out-of-vocabulary grams are
/// ignored. Throws std::invalid_argument for tf-idf without an idf table.
SparseRow vectorize(const GramCounts& doc, const Vocabulary& vocab, Weighting weighting,
                    std::span<const double> idf = {});

/// Row-major compressed sparse matrix.
struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> values;
  Weighting weighting = Weighting::tfidf;
  std::vector<double> idf;  // empty in count mode

  void append(const SparseRow& row);
  std::span<const std::uint32_t> row_cols(std::size_t i) const noexcept {
    return {cols.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
  }
  std::span<const double> row_values(std::size_t i) const noexcept {
    return {values.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
  }
  double row_dot(std::size_t i, std::span<const double> dense) const noexcept;
  SparseRow row(std::size_t i) const;
};

FeatureMatrix vectorize_all(std::span<const GramCounts> docs, const Vocabulary& vocab, Weighting weighting,
                            std::span<const double> idf = {});

/// CSV with header gram,index,corpus_freq,idf (idf empty in count mode).
void write_vocabulary_csv(std::ostream& out, const Vocabulary& vocab, std::span<const double> idf);

}  // namespace ff
