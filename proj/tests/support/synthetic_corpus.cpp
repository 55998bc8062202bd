#include "synthetic_corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "ff/rng.hpp"

namespace ff::testing {

namespace {

constexpr std::array<const char*, 16> kTags = {"NNP", "VBD", "RB", ".", "DT", "NN", "IN", "PRP",
                                               "JJ",  ",",   "CC", "VBZ", "TO", "VB", "NNS", "''"};

// Original English leans on pronoun/adverb/verb runs, translations on
// determiner/noun/preposition chains.
double tag_weight(std::size_t tag, double literalness) {
  static constexpr std::array<double, 16> original = {4, 6, 5, 4, 5, 7, 5, 7, 3, 4, 3, 3, 2, 3, 2, 2};
  static constexpr std::array<double, 16> translated = {3, 4, 2, 4, 8, 9, 8, 3, 5, 5, 3, 2, 2, 2, 4, 1};
  return (1.0 - literalness) * original[tag] + literalness * translated[tag];
}

std::vector<std::string> sample_tags(Rng& rng, int n, double literalness) {
  std::array<double, kTags.size()> cdf{};
  double total = 0.0;
  for (std::size_t t = 0; t < kTags.size(); ++t) cdf[t] = total += tag_weight(t, literalness);
  std::vector<std::string> tags;
  tags.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01() * total;
    const auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    tags.emplace_back(kTags[std::min(idx, kTags.size() - 1)]);
  }
  return tags;
}

std::string make_text(Rng& rng, int words, const char* stem) {
  std::string out;
  for (int i = 0; i < words; ++i) {
    if (i > 0) out += rng.uniform01() < 0.1 ? "  " : " ";
    out += fmt::format("{}{}", stem, rng.uniform_index(500));
  }
  return out;
}

int paragraph_length(Rng& rng, double short_fraction) {
  if (rng.uniform01() < short_fraction) return 2 + static_cast<int>(rng.uniform_index(17));
  // Roughly log-normal, 20..~250 words.
  const double len = std::exp(3.9 + 0.6 * rng.normal());
  return std::clamp(static_cast<int>(len), 20, 260);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::vector<ParagraphRecord> make_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  Rng rng(spec.seed);
  std::vector<ParagraphRecord> out;

  for (int b = 0; b < spec.original_books; ++b) {
    const auto book = fmt::format("en_b{:02}", b);
    for (int p = 0; p < spec.original_paragraphs_per_book; ++p) {
      ParagraphRecord r;
      r.record_id = fmt::format("{}_p{:03}", book, p);
      r.book_id = book;
      r.work_id = book;
      r.class_label = ClassLabel::original;
      r.source_lang = std::string(kOriginalLang);
      r.source_type = SourceType::original;
      const int words = paragraph_length(rng, spec.short_fraction);
      r.english_text = make_text(rng, words, "w");
      r.word_count = words;
      r.pos_tags = sample_tags(rng, words, 0.0);
      out.push_back(std::move(r));
    }
  }

  struct TranslatedBook {
    std::string book_id, work_id, lang;
  };
  std::vector<TranslatedBook> books;
  for (const auto& plan : spec.languages) {
    for (int b = 0; b < plan.books; ++b) {
      const auto id = fmt::format("{}_b{:02}", plan.lang, b);
      books.push_back({id, id, plan.lang});
    }
  }
  for (int d = 0; d < spec.duplicate_works && d < static_cast<int>(books.size()); ++d) {
    const auto& base = books[static_cast<std::size_t>(d)];
    books.push_back({base.book_id + "_vol2", base.work_id, base.lang});
  }

  for (const auto& book : books) {
    for (int p = 0; p < spec.source_paragraphs_per_book; ++p) {
      const auto source = fmt::format("{} source paragraph {} of {}", book.lang, p, book.work_id);
      const int n_human = spec.min_human_variants +
                          static_cast<int>(rng.uniform_index(
                              static_cast<std::uint64_t>(spec.max_human_variants - spec.min_human_variants + 1)));
      const int n_variants = n_human + (spec.google ? 1 : 0) + (spec.llm ? 1 : 0);
      const int base_len = paragraph_length(rng, spec.short_fraction);

      auto emit = [&](SourceType type, int variant, double literalness, int words, std::string text) {
        ParagraphRecord r;
        r.record_id = fmt::format("{}_p{:03}_{}{}", book.book_id, p, to_string(type), variant);
        r.book_id = book.book_id;
        r.work_id = book.work_id;
        r.class_label = ClassLabel::translated;
        r.source_lang = book.lang;
        r.source_text = source;
        r.source_type = type;
        r.variant_index = variant;
        r.n_variants = n_variants;
        r.english_text = std::move(text);
        r.word_count = words;
        r.pos_tags = sample_tags(rng, words, std::clamp(literalness * spec.translationese, 0.0, 1.0));
        const double comet = 0.86 + 0.06 * literalness - 0.0006 * words + 0.03 * rng.normal();
        r.comet_kiwi = clamp01(comet);
        const bool misaligned = rng.uniform01() < spec.misaligned;
        r.align_sim = misaligned ? rng.uniform(0.30, 0.45) : std::clamp(0.82 + 0.05 * rng.normal(), -1.0, 1.0);
        r.roundtrip_sim = std::clamp(0.5 + 0.4 * comet + 0.03 * rng.normal(), -1.0, 1.0);
        out.push_back(std::move(r));
      };

      for (int v = 1; v <= n_human; ++v) {
        const int words = std::max(1, base_len + static_cast<int>(std::lround(3.0 * rng.normal())));
        emit(SourceType::human, v, rng.uniform(0.2, 0.9), words, make_text(rng, words, "h"));
      }
      std::string google_text;
      if (spec.google) {
        google_text = make_text(rng, base_len, "g");
        emit(SourceType::google, 1, rng.uniform(0.5, 1.0), base_len, google_text);
      }
      if (spec.llm) {
        int words = base_len;
        std::string text = make_text(rng, words, "l");
        if (spec.google && rng.uniform01() < spec.degenerate_llm) {
          // Pad until the excess over the Google output passes 500 characters.
          while (text.size() <= google_text.size() + 520) {
            text += " repeat";
            ++words;
          }
        }
        emit(SourceType::llm, 1, rng.uniform(0.3, 0.9), words, std::move(text));
      }
    }
  }
  return out;
}

}  // namespace ff::testing
