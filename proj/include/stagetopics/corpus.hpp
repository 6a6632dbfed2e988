#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagetopics/errors.hpp"

namespace stagetopics {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class Stage { S1 = 0, S2 = 1, S3 = 2 };

const char* stageName(Stage s);                    // "S1" / "S2" / "S3"
std::optional<Stage> stageFromName(std::string_view name);

/// Five-way category coding: 0 stigmatization, 1 offensiveness, 2 blame,
/// 3 exclusion, 4 none (non-racist and non-xenophobic).
enum class Category : int {
  Stigmatization = 0,
  Offensiveness = 1,
  Blame = 2,
  Exclusion = 3,
  None = 4,
};

inline constexpr int kNumCategories = 5;

const char* categoryName(Category c);
Category categoryFromCode(int code);               // throws UnknownLabelError
std::optional<Category> categoryFromName(std::string_view name);

/// UTC calendar date. Sub-day precision in inputs is truncated.
struct UtcDate {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31

  auto operator<=>(const UtcDate&) const = default;

  bool isValid() const;
  std::string toString() const;  // YYYY-MM-DD

  // Accepts "YYYY-MM-DD" optionally followed by a time part ("T..." or " ..."),
  // which is ignored. Throws ParseError on malformed or invalid dates.
  static UtcDate parse(std::string_view text);
};

struct TweetRecord {
  std::string id;
  UtcDate created_at;
  std::string text;
  std::set<std::string> hashtags;  // lowercase, no leading '#'
  std::optional<Category> gold_category;

  bool operator==(const TweetRecord&) const = default;
};

struct StageWindow {
  Stage stage;
  UtcDate start;  // inclusive
  UtcDate end;    // inclusive
};

// S1 2020-01-01..2020-01-31, S2 2020-02-01..2020-03-11, S3 2020-03-12..2020-04-30.
std::array<StageWindow, 3> defaultStageWindows();

// Throws ConfigError unless start <= end for every window and the windows are
// disjoint and in ascending order.
void validateStageWindows(std::span<const StageWindow> windows);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

enum class CorpusFormat { Jsonl, Csv };

std::optional<CorpusFormat> corpusFormatFromName(std::string_view name);

/// Reads records in file order. Hashtags are lowercased; when a record carries
/// no hashtag field they are extracted from the text. Throws ParseError
/// (naming the row) or DuplicateIdError.
std::vector<TweetRecord> ingestCorpus(const std::string& path, CorpusFormat format);
std::vector<TweetRecord> ingestCorpus(std::istream& in, CorpusFormat format,
                                      const std::string& source_name = "<stream>");

void serializeCorpus(std::span<const TweetRecord> records, std::ostream& out,
                     CorpusFormat format);

/// Returns the unique window containing the record's date, or nullopt when the
/// date falls outside every window.
std::optional<Stage> assignStage(const TweetRecord& record,
                                 std::span<const StageWindow> windows);

/// Keeps records whose hashtag set intersects `allowed` (case-insensitive,
/// leading '#' ignored on the allowed side). Preserves input order.
std::vector<TweetRecord> filterByHashtags(std::span<const TweetRecord> records,
                                          const std::set<std::string>& allowed);

/// Lowercased #tags appearing in the text, without the '#'.
std::set<std::string> extractHashtags(std::string_view text);

/// One hashtag per line; '#' prefixes and case are normalized away.
std::set<std::string> loadHashtagList(const std::string& path);

/// Bundled 18-hashtag default list.
std::string defaultHashtagFile();

// ---------------------------------------------------------------------------
// CSV plumbing (shared with report emitters)
// ---------------------------------------------------------------------------

/// Reads one CSV record (RFC-4180 quoting, embedded newlines allowed).
/// Returns false at end of input. `line_number` advances past consumed lines.
bool readCsvRecord(std::istream& in, std::vector<std::string>& fields,
                   std::size_t& line_number);

std::string csvEscape(std::string_view field);
std::string csvJoin(std::span<const std::string> fields);

}  // namespace stagetopics
