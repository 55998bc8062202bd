#include "ff/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace ff {

std::string_view to_string(Weighting w) noexcept { return w == Weighting::tfidf ? "tfidf" : "count"; }

std::optional<Weighting> parse_weighting(std::string_view s) noexcept {
  if (s == "tfidf") return Weighting::tfidf;
  if (s == "count") return Weighting::count;
  return std::nullopt;
}

std::uint16_t TagCodec::encode(std::string_view tag) {
  std::string key(tag);
  if (const auto it = codes_.find(key); it != codes_.end()) return it->second;
  if (tags_.size() >= 0xFFFF) throw std::length_error("TagCodec: more than 65535 distinct tags");
  const auto code = static_cast<std::uint16_t>(tags_.size() + 1);
  tags_.push_back(key);
  codes_.emplace(std::move(key), code);
  return code;
}

std::optional<std::uint16_t> TagCodec::find(std::string_view tag) const {
  const auto it = codes_.find(std::string(tag));
  if (it == codes_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::uint16_t> TagCodec::encode_all(std::span<const std::string> tags) {
  std::vector<std::uint16_t> out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(encode(t));
  return out;
}

std::string TagCodec::gram_string(GramKey key) const {
  std::string out;
  for (int slot = kMaxGramOrder - 1; slot >= 0; --slot) {
    const auto code = static_cast<std::uint16_t>((key >> (16 * slot)) & 0xFFFF);
    if (code == 0) continue;
    if (!out.empty()) out += ' ';
    out += tags_.at(code - 1U);
  }
  return out;
}

GramCounts extract_ngrams(std::span<const std::uint16_t> codes, int n_min, int n_max) {
  if (n_min < 1 || n_min > n_max || n_max > kMaxGramOrder) {
    throw std::invalid_argument(fmt::format("invalid n-gram range [{}, {}]", n_min, n_max));
  }
  std::vector<GramKey> grams;
  const auto len = codes.size();
  for (int n = n_min; n <= n_max; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (len < un) break;
    for (std::size_t i = 0; i + un <= len; ++i) {
      GramKey key = 0;
      for (std::size_t k = 0; k < un; ++k) key = (key << 16) | codes[i + k];
      grams.push_back(key);
    }
  }
  std::sort(grams.begin(), grams.end());
  GramCounts out;
  for (const auto g : grams) {
    if (!out.empty() && out.back().first == g) {
      ++out.back().second;
    } else {
      out.emplace_back(g, 1U);
    }
  }
  return out;
}

GramCounts extract_ngrams(std::span<const std::string> tags, TagCodec& codec, int n_min, int n_max) {
  const auto codes = codec.encode_all(tags);
  return extract_ngrams(codes, n_min, n_max);
}

std::size_t total_grams(const GramCounts& counts) noexcept {
  std::size_t n = 0;
  for (const auto& [_, c] : counts) n += c;
  return n;
}

std::optional<std::uint32_t> Vocabulary::find(GramKey key) const {
  const auto it = index.find(key);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(std::span<const GramCounts> corpus, const TagCodec& codec, std::size_t max_features) {
  std::unordered_map<GramKey, std::uint64_t> freq;
  for (const auto& doc : corpus) {
    for (const auto& [g, c] : doc) freq[g] += c;
  }

  struct Candidate {
    GramKey key;
    std::uint64_t freq;
    std::string gram;
  };
  std::vector<Candidate> cands;
  cands.reserve(freq.size());
  for (const auto& [g, f] : freq) cands.push_back({g, f, codec.gram_string(g)});

  const auto keep = std::min(max_features, cands.size());
  const auto by_rank = [](const Candidate& a, const Candidate& b) {
    if (a.freq != b.freq) return a.freq > b.freq;
    return a.gram < b.gram;
  };
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), by_rank);
  cands.resize(keep);
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.gram < b.gram; });

  Vocabulary vocab;
  vocab.max_features = max_features;
  vocab.keys.reserve(keep);
  vocab.grams.reserve(keep);
  vocab.corpus_freq.reserve(keep);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    vocab.index.emplace(cands[i].key, static_cast<std::uint32_t>(i));
    vocab.keys.push_back(cands[i].key);
    vocab.grams.push_back(std::move(cands[i].gram));
    vocab.corpus_freq.push_back(cands[i].freq);
  }
  return vocab;
}

std::vector<double> fit_idf(std::span<const GramCounts> corpus, const Vocabulary& vocab) {
  std::vector<std::uint64_t> df(vocab.size(), 0);
  for (const auto& doc : corpus) {
    for (const auto& [g, _] : doc) {
      if (const auto col = vocab.find(g)) ++df[*col];
    }
  }
  const double n_docs = static_cast<double>(corpus.size());
  std::vector<double> idf(vocab.size());
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    if (df[t] == 0) {
      throw std::invalid_argument("fit_idf: vocabulary term '" + vocab.grams[t] + "' has zero document frequency");
    }
    idf[t] = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[t]))) + 1.0;
  }
  return idf;
}

double SparseRow::dot(std::span<const double> dense) const noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < cols.size(); ++k) s += values[k] * dense[cols[k]];
  return s;
}

SparseRow vectorize(const GramCounts& doc, const Vocabulary& vocab, Weighting weighting,
                    std::span<const double> idf) {
  if (weighting == Weighting::tfidf && idf.size() != vocab.size()) {
    throw std::invalid_argument("vectorize: tf-idf weighting needs an idf table matching the vocabulary");
  }
  std::vector<std::pair<std::uint32_t, double>> cells;
  for (const auto& [g, c] : doc) {
    if (const auto col = vocab.find(g)) {
      const double v = weighting == Weighting::tfidf ? c * idf[*col] : static_cast<double>(c);
      cells.emplace_back(*col, v);
    }
  }
  std::sort(cells.begin(), cells.end());

  SparseRow row;
  row.cols.reserve(cells.size());
  row.values.reserve(cells.size());
  for (const auto& [col, v] : cells) {
    row.cols.push_back(col);
    row.values.push_back(v);
  }
  if (weighting == Weighting::tfidf && !row.values.empty()) {
    double sq = 0.0;
    for (const double v : row.values) sq += v * v;
    const double norm = std::sqrt(sq);
    for (double& v : row.values) v /= norm;
  }
  return row;
}

void FeatureMatrix::append(const SparseRow& row) {
  cols.insert(cols.end(), row.cols.begin(), row.cols.end());
  values.insert(values.end(), row.values.begin(), row.values.end());
  row_ptr.push_back(cols.size());
  ++n_rows;
}

double FeatureMatrix::row_dot(std::size_t i, std::span<const double> dense) const noexcept {
  double s = 0.0;
  for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += values[k] * dense[cols[k]];
  return s;
}

SparseRow FeatureMatrix::row(std::size_t i) const {
  const auto c = row_cols(i);
  const auto v = row_values(i);
  return SparseRow{{c.begin(), c.end()}, {v.begin(), v.end()}};
}

FeatureMatrix vectorize_all(std::span<const GramCounts> docs, const Vocabulary& vocab, Weighting weighting,
                            std::span<const double> idf) {
  FeatureMatrix m;
  m.n_cols = vocab.size();
  m.weighting = weighting;
  if (weighting == Weighting::tfidf) m.idf.assign(idf.begin(), idf.end());
  m.row_ptr.reserve(docs.size() + 1);
  for (const auto& doc : docs) m.append(vectorize(doc, vocab, weighting, idf));
  return m;
}

void write_vocabulary_csv(std::ostream& out, const Vocabulary& vocab, std::span<const double> idf) {
  out << "gram,index,corpus_freq,idf\n";
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    // Tags may contain quotes and commas ("''", ","), so grams are always quoted.
    std::string quoted = "\"";
    for (const char c : vocab.grams[i]) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    out << quoted << ',' << i << ',' << vocab.corpus_freq[i] << ',';
    if (!idf.empty()) out << fmt::format("{:.17g}", idf[i]);
    out << '\n';
  }
}

}  // namespace ff
