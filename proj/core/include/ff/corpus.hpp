#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ff {

enum class ClassLabel { original, translated };
enum class SourceType { human, google, llm, original };

std::string_view to_string(ClassLabel c) noexcept;
std::string_view to_string(SourceType s) noexcept;
std::optional<ClassLabel> parse_class_label(std::string_view s) noexcept;
std::optional<SourceType> parse_source_type(std::string_view s) noexcept;

/// source_lang value used by the original-English comparison corpus.
inline constexpr std::string_view kOriginalLang = "en-original";

/// One aligned (source paragraph, English text) pair, or one original-English
/// paragraph.
struct ParagraphRecord {
  std::string record_id;
  std::string book_id;
  std::string work_id;
  ClassLabel class_label = ClassLabel::translated;
  std::string source_lang;
  std::string source_text;
  std::string english_text;
  SourceType source_type = SourceType::human;
  int variant_index = 1;
  int n_variants = 1;
  std::vector<std::string> pos_tags;
  int word_count = 0;
  std::optional<double> comet_kiwi;
  std::optional<double> align_sim;
  std::optional<double> roundtrip_sim;

  bool is_original() const noexcept { return class_label == ClassLabel::original; }
  bool operator==(const ParagraphRecord&) const = default;
};

struct BookEntry {
  std::string book_id;
  std::string work_id;
  std::string source_lang;
  ClassLabel class_label = ClassLabel::translated;
  std::size_t n_paragraphs = 0;
};

struct SchemaError {
  std::size_t line = 0;  // 1-based
  std::string field;     // empty when the line is not a valid object at all
  std::string reason;
};

struct ParseResult {
  std::vector<ParagraphRecord> records;
  std::vector<SchemaError> errors;
};

/// Parses newline-delimited JSON records. Blank lines are skipped; every other
/// line yields either a record or a SchemaError, in input order.
ParseResult parse_records(std::istream& in);
ParseResult parse_records(std::string_view data);

/// One JSON object, no trailing newline. pos_tags are emitted as an array and
/// absent optional scores are omitted.
std::string serialize_record(const ParagraphRecord& r);
void write_records(std::ostream& out, std::span<const ParagraphRecord> records);

/// Checks the record invariants; returns the violated field and reason.
std::optional<SchemaError> validate_record(const ParagraphRecord& r);

/// For each work_id with several translated book_ids keeps only the
/// lexicographically first book_id. Original-class records pass through.
/// Output preserves the relative input order of kept records.
std::vector<ParagraphRecord> dedupe_works(std::vector<ParagraphRecord> records);

/// Keeps records with word_count >= min_words.
std::vector<ParagraphRecord> filter_min_length(std::vector<ParagraphRecord> records, int min_words = 20);

/// One entry per book_id, sorted by book_id. Throws ff::DataError when records
/// of one book disagree on work_id, source_lang or class_label.
std::vector<BookEntry> collect_books(std::span<const ParagraphRecord> records);

}  // namespace ff
