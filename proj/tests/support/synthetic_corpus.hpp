#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ff/corpus.hpp"

namespace ff::testing {

struct LanguagePlan {
  std::string lang;
  int books = 1;
};

struct SyntheticCorpusSpec {
  std::uint64_t seed = 1;
  int original_books = 12;
  int original_paragraphs_per_book = 5;
  std::vector<LanguagePlan> languages{{"fr", 3}, {"de", 2}, {"ru", 1}};
  int source_paragraphs_per_book = 5;
  int min_human_variants = 2;
  int max_human_variants = 3;
  bool google = true;
  bool llm = true;
  int duplicate_works = 1;        // extra volumes sharing a work_id with an earlier book
  double short_fraction = 0.05;   // paragraphs below 20 words
  double degenerate_llm = 0.03;   // LLM outputs padded by ~600 characters
  double misaligned = 0.03;       // translations with a low align_sim
  double translationese = 1.0;    // strength of the tag-distribution shift
};

/// Deterministic synthetic corpus: POS-tagged paragraphs whose tag statistics
/// differ by class, COMET-like scores that fall with length and rise with a
/// latent literalness, and occasional guardrail triggers.
std::vector<ParagraphRecord> make_synthetic_corpus(const SyntheticCorpusSpec& spec);

}  // namespace ff::testing
