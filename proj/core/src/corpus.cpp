#include "ff/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "ff/errors.hpp"
#include "ff/text.hpp"

namespace ff {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ClassLabel c) noexcept {
  return c == ClassLabel::original ? "original" : "translated";
}

std::string_view to_string(SourceType s) noexcept {
  switch (s) {
    case SourceType::human: return "human";
    case SourceType::google: return "google";
    case SourceType::llm: return "llm";
    case SourceType::original: return "original";
  }
  return "";
}

std::optional<ClassLabel> parse_class_label(std::string_view s) noexcept {
  if (s == "original") return ClassLabel::original;
  if (s == "translated") return ClassLabel::translated;
  return std::nullopt;
}

std::optional<SourceType> parse_source_type(std::string_view s) noexcept {
  if (s == "human") return SourceType::human;
  if (s == "google") return SourceType::google;
  if (s == "llm") return SourceType::llm;
  if (s == "original") return SourceType::original;
  return std::nullopt;
}

namespace {

const std::set<std::string, std::less<>> kKnownFields = {
    "record_id", "book_id", "work_id", "class_label", "source_lang", "source_text",
    "english_text", "source_type", "variant_index", "n_variants", "pos_tags",
    "word_count", "comet_kiwi", "align_sim", "roundtrip_sim"};

struct FieldError {
  std::string field;
  std::string reason;
};

const json& require(const json& obj, const char* field) {
  const auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) throw FieldError{field, "missing required field"};
  return *it;
}

std::string get_string(const json& obj, const char* field) {
  const auto& v = require(obj, field);
  if (!v.is_string()) throw FieldError{field, "expected string"};
  return v.get<std::string>();
}

int get_int(const json& obj, const char* field) {
  const auto& v = require(obj, field);
  if (!v.is_number_integer()) throw FieldError{field, "expected integer"};
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw FieldError{field, "integer out of range"};
  }
  return static_cast<int>(x);
}

std::optional<double> get_optional_real(const json& obj, const char* field) {
  const auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw FieldError{field, "expected number"};
  return it->get<double>();
}

std::vector<std::string> get_tags(const json& obj) {
  const auto& v = require(obj, "pos_tags");
  if (v.is_string()) return text::split_whitespace(v.get<std::string>());
  if (!v.is_array()) throw FieldError{"pos_tags", "expected array or space-joined string"};
  std::vector<std::string> tags;
  tags.reserve(v.size());
  for (const auto& t : v) {
    if (!t.is_string()) throw FieldError{"pos_tags", "expected array of strings"};
    tags.push_back(t.get<std::string>());
  }
  return tags;
}

ParagraphRecord record_from_json(const json& obj) {
  if (!obj.is_object()) throw FieldError{"", "line is not a JSON object"};
  for (const auto& [key, _] : obj.items()) {
    if (!kKnownFields.contains(key)) throw FieldError{key, "unknown field"};
  }

  ParagraphRecord r;
  r.record_id = get_string(obj, "record_id");
  r.book_id = get_string(obj, "book_id");
  r.work_id = get_string(obj, "work_id");
  const auto label = get_string(obj, "class_label");
  const auto parsed_label = parse_class_label(label);
  if (!parsed_label) throw FieldError{"class_label", "unknown class label '" + label + "'"};
  r.class_label = *parsed_label;
  r.source_lang = get_string(obj, "source_lang");
  r.source_text = get_string(obj, "source_text");
  r.english_text = get_string(obj, "english_text");
  const auto type = get_string(obj, "source_type");
  const auto parsed_type = parse_source_type(type);
  if (!parsed_type) throw FieldError{"source_type", "unknown source type '" + type + "'"};
  r.source_type = *parsed_type;
  r.variant_index = get_int(obj, "variant_index");
  r.n_variants = get_int(obj, "n_variants");
  r.pos_tags = get_tags(obj);
  r.word_count = get_int(obj, "word_count");
  r.comet_kiwi = get_optional_real(obj, "comet_kiwi");
  r.align_sim = get_optional_real(obj, "align_sim");
  r.roundtrip_sim = get_optional_real(obj, "roundtrip_sim");
  return r;
}

bool in_range(const std::optional<double>& v, double lo, double hi) {
  return !v || (std::isfinite(*v) && *v >= lo && *v <= hi);
}

}  // namespace

std::optional<SchemaError> validate_record(const ParagraphRecord& r) {
  auto fail = [](std::string field, std::string reason) {
    return std::optional<SchemaError>(SchemaError{0, std::move(field), std::move(reason)});
  };
  if (r.record_id.empty()) return fail("record_id", "must be non-empty");
  if (r.book_id.empty()) return fail("book_id", "must be non-empty");
  if (r.work_id.empty()) return fail("work_id", "must be non-empty");
  if (r.source_lang.empty()) return fail("source_lang", "must be non-empty");

  const bool original = r.is_original();
  if (original != (r.source_type == SourceType::original)) {
    return fail("source_type", "source_type 'original' must coincide with class_label 'original'");
  }
  if (original != (r.source_lang == kOriginalLang)) {
    return fail("source_lang", "source_lang 'en-original' must coincide with class_label 'original'");
  }
  if (original) {
    if (r.comet_kiwi) return fail("comet_kiwi", "must be absent for original-class records");
    if (r.align_sim) return fail("align_sim", "must be absent for original-class records");
    if (r.roundtrip_sim) return fail("roundtrip_sim", "must be absent for original-class records");
    if (!r.source_text.empty()) return fail("source_text", "must be empty for original-class records");
  }
  if (r.n_variants < 1) return fail("n_variants", "must be >= 1");
  if (r.variant_index < 1 || r.variant_index > r.n_variants) {
    return fail("variant_index", "must satisfy 1 <= variant_index <= n_variants");
  }
  if (!in_range(r.comet_kiwi, 0.0, 1.0)) return fail("comet_kiwi", "must be a finite value in [0,1]");
  if (!in_range(r.align_sim, -1.0, 1.0)) return fail("align_sim", "must be a finite value in [-1,1]");
  if (!in_range(r.roundtrip_sim, -1.0, 1.0)) return fail("roundtrip_sim", "must be a finite value in [-1,1]");

  std::size_t words = 0;
  try {
    words = text::count_words(r.english_text);
  } catch (const DataError& e) {
    return fail("english_text", e.what());
  }
  if (r.word_count < 0 || static_cast<std::size_t>(r.word_count) != words) {
    return fail("word_count", "does not match the whitespace-token count of english_text (" +
                                  std::to_string(words) + ")");
  }
  if (words > 0 && r.pos_tags.empty()) return fail("pos_tags", "must be non-empty when english_text is non-empty");
  for (const auto& tag : r.pos_tags) {
    if (tag.empty() || text::count_words(tag) != 1 || text::split_whitespace(tag).front() != tag) {
      return fail("pos_tags", "tags must be non-empty and contain no whitespace");
    }
  }
  return std::nullopt;
}

ParseResult parse_records(std::istream& in) {
  ParseResult result;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      result.errors.push_back({line_no, "", std::string("malformed JSON: ") + e.what()});
      continue;
    }
    try {
      auto rec = record_from_json(obj);
      if (auto err = validate_record(rec)) {
        err->line = line_no;
        result.errors.push_back(std::move(*err));
        continue;
      }
      if (!seen_ids.insert(rec.record_id).second) {
        result.errors.push_back({line_no, "record_id", "duplicate record_id '" + rec.record_id + "'"});
        continue;
      }
      result.records.push_back(std::move(rec));
    } catch (const FieldError& e) {
      result.errors.push_back({line_no, e.field, e.reason});
    } catch (const json::exception& e) {
      result.errors.push_back({line_no, "", e.what()});
    }
  }
  return result;
}

ParseResult parse_records(std::string_view data) {
  std::istringstream in{std::string(data)};
  return parse_records(in);
}

std::string serialize_record(const ParagraphRecord& r) {
  ordered_json obj;
  obj["record_id"] = r.record_id;
  obj["book_id"] = r.book_id;
  obj["work_id"] = r.work_id;
  obj["class_label"] = to_string(r.class_label);
  obj["source_lang"] = r.source_lang;
  obj["source_text"] = r.source_text;
  obj["english_text"] = r.english_text;
  obj["source_type"] = to_string(r.source_type);
  obj["variant_index"] = r.variant_index;
  obj["n_variants"] = r.n_variants;
  obj["pos_tags"] = r.pos_tags;
  obj["word_count"] = r.word_count;
  if (r.comet_kiwi) obj["comet_kiwi"] = *r.comet_kiwi;
  if (r.align_sim) obj["align_sim"] = *r.align_sim;
  if (r.roundtrip_sim) obj["roundtrip_sim"] = *r.roundtrip_sim;
  return obj.dump();
}

void write_records(std::ostream& out, std::span<const ParagraphRecord> records) {
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

std::vector<ParagraphRecord> dedupe_works(std::vector<ParagraphRecord> records) {
  std::map<std::string, std::string, std::less<>> first_book;  // work_id -> smallest translated book_id
  for (const auto& r : records) {
    if (r.is_original()) continue;
    auto [it, inserted] = first_book.try_emplace(r.work_id, r.book_id);
    if (!inserted && r.book_id < it->second) it->second = r.book_id;
  }
  std::erase_if(records, [&](const ParagraphRecord& r) {
    return !r.is_original() && first_book.find(r.work_id)->second != r.book_id;
  });
  return records;
}

std::vector<ParagraphRecord> filter_min_length(std::vector<ParagraphRecord> records, int min_words) {
  std::erase_if(records, [min_words](const ParagraphRecord& r) { return r.word_count < min_words; });
  return records;
}

std::vector<BookEntry> collect_books(std::span<const ParagraphRecord> records) {
  std::map<std::string, BookEntry, std::less<>> books;
  for (const auto& r : records) {
    auto [it, inserted] = books.try_emplace(r.book_id);
    auto& b = it->second;
    if (inserted) {
      b = BookEntry{r.book_id, r.work_id, r.source_lang, r.class_label, 0};
    } else if (b.work_id != r.work_id || b.source_lang != r.source_lang || b.class_label != r.class_label) {
      throw DataError("book '" + r.book_id + "' mixes work_id, source_lang or class_label (record '" +
                      r.record_id + "')");
    }
    ++b.n_paragraphs;
  }
  std::vector<BookEntry> out;
  out.reserve(books.size());
  for (auto& [_, b] : books) out.push_back(std::move(b));
  return out;
}

}  // namespace ff
