#include "stagetopics/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace stagetopics {

namespace {

std::string toLowerAscii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void parseFail(const std::string& source, std::size_t row, const std::string& what) {
  throw ParseError(source + ": row " + std::to_string(row) + ": " + what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Stage / Category
// ---------------------------------------------------------------------------

const char* stageName(Stage s) {
  switch (s) {
    case Stage::S1: return "S1";
    case Stage::S2: return "S2";
    case Stage::S3: return "S3";
  }
  return "?";
}

std::optional<Stage> stageFromName(std::string_view name) {
  if (name == "S1" || name == "s1") return Stage::S1;
  if (name == "S2" || name == "s2") return Stage::S2;
  if (name == "S3" || name == "s3") return Stage::S3;
  return std::nullopt;
}

const char* categoryName(Category c) {
  switch (c) {
    case Category::Stigmatization: return "stigmatization";
    case Category::Offensiveness: return "offensiveness";
    case Category::Blame: return "blame";
    case Category::Exclusion: return "exclusion";
    case Category::None: return "none";
  }
  return "?";
}

Category categoryFromCode(int code) {
  if (code < 0 || code >= kNumCategories)
    throw UnknownLabelError("unknown category label: " + std::to_string(code));
  return static_cast<Category>(code);
}

std::optional<Category> categoryFromName(std::string_view name) {
  for (int c = 0; c < kNumCategories; ++c)
    if (name == categoryName(static_cast<Category>(c)))
      return static_cast<Category>(c);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// UtcDate
// ---------------------------------------------------------------------------

bool UtcDate::isValid() const {
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int days_in_month[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int dim = days_in_month[month - 1];
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  if (month == 2 && leap) dim = 29;
  return day <= dim;
}

std::string UtcDate::toString() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

UtcDate UtcDate::parse(std::string_view text) {
  // Truncate a datetime to its date part.
  auto cut = text.find_first_of("T ");
  std::string_view d = text.substr(0, cut);
  auto fail = [&] { throw ParseError("invalid date: '" + std::string(text) + "'"); };
  if (d.size() != 10 || d[4] != '-' || d[7] != '-') fail();
  auto digits = [&](std::string_view part) {
    int v = 0;
    for (char c : part) {
      if (c < '0' || c > '9') fail();
      v = v * 10 + (c - '0');
    }
    return v;
  };
  UtcDate out{digits(d.substr(0, 4)), digits(d.substr(5, 2)), digits(d.substr(8, 2))};
  if (!out.isValid()) fail();
  return out;
}

// ---------------------------------------------------------------------------
// Stage windows
// ---------------------------------------------------------------------------

std::array<StageWindow, 3> defaultStageWindows() {
  return {{
      {Stage::S1, {2020, 1, 1}, {2020, 1, 31}},
      {Stage::S2, {2020, 2, 1}, {2020, 3, 11}},
      {Stage::S3, {2020, 3, 12}, {2020, 4, 30}},
  }};
}

void validateStageWindows(std::span<const StageWindow> windows) {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (!w.start.isValid() || !w.end.isValid() || w.end < w.start)
      throw ConfigError("stage window " + std::string(stageName(w.stage)) + " is not a valid range");
    if (i > 0 && windows[i].start <= windows[i - 1].end)
      throw ConfigError("stage windows must be disjoint and ordered");
  }
}

std::optional<Stage> assignStage(const TweetRecord& record,
                                 std::span<const StageWindow> windows) {
  for (const auto& w : windows)
    if (w.start <= record.created_at && record.created_at <= w.end) return w.stage;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Hashtags
// ---------------------------------------------------------------------------

std::set<std::string> extractHashtags(std::string_view text) {
  std::set<std::string> tags;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '#') continue;
    std::size_t j = i + 1;
    while (j < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
      ++j;
    if (j > i + 1) tags.insert(toLowerAscii(text.substr(i + 1, j - i - 1)));
    i = j - 1;
  }
  return tags;
}

namespace {
std::string normalizeTag(std::string_view tag) {
  if (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
  return toLowerAscii(tag);
}
}  // namespace

std::set<std::string> loadHashtagList(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open hashtag list: " + path);
  std::set<std::string> tags;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) tags.insert(normalizeTag(line));
  }
  return tags;
}

std::string defaultHashtagFile() {
  return std::string(STAGETOPICS_DATA_DIR) + "/hashtags.txt";
}

std::vector<TweetRecord> filterByHashtags(std::span<const TweetRecord> records,
                                          const std::set<std::string>& allowed) {
  std::set<std::string> wanted;
  for (const auto& tag : allowed) wanted.insert(normalizeTag(tag));
  std::vector<TweetRecord> kept;
  for (const auto& rec : records) {
    bool hit = std::any_of(rec.hashtags.begin(), rec.hashtags.end(),
                           [&](const std::string& t) { return wanted.count(t) > 0; });
    if (hit) kept.push_back(rec);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// CSV plumbing
// ---------------------------------------------------------------------------

bool readCsvRecord(std::istream& in, std::vector<std::string>& fields,
                   std::size_t& line_number) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  ++line_number;
  std::string field;
  bool quoted = false;
  for (;;) {
    if (c == EOF) break;
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line_number;
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r' && in.peek() == '\n') {
      in.get();
      break;
    } else {
      field.push_back(ch);
    }
    c = in.get();
  }
  fields.push_back(std::move(field));
  return true;
}

std::string csvEscape(std::string_view field) {
  bool needs_quote = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quote) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csvJoin(std::span<const std::string> fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csvEscape(fields[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {

TweetRecord recordFromJson(const nlohmann::json& obj, const std::string& source, std::size_t row) {
  if (!obj.is_object()) parseFail(source, row, "expected a JSON object");
  TweetRecord rec;
  if (!obj.contains("id") || !obj["id"].is_string())
    parseFail(source, row, "missing string field 'id'");
  rec.id = obj["id"].get<std::string>();
  if (rec.id.empty()) parseFail(source, row, "empty id");
  if (!obj.contains("created_at") || !obj["created_at"].is_string())
    parseFail(source, row, "missing string field 'created_at'");
  try {
    rec.created_at = UtcDate::parse(obj["created_at"].get<std::string>());
  } catch (const ParseError& e) {
    parseFail(source, row, e.what());
  }
  if (!obj.contains("text") || !obj["text"].is_string())
    parseFail(source, row, "missing string field 'text'");
  rec.text = obj["text"].get<std::string>();
  if (obj.contains("hashtags")) {
    if (!obj["hashtags"].is_array()) parseFail(source, row, "'hashtags' must be an array");
    for (const auto& t : obj["hashtags"]) {
      if (!t.is_string()) parseFail(source, row, "'hashtags' entries must be strings");
      std::string tag = normalizeTag(t.get<std::string>());
      if (!tag.empty()) rec.hashtags.insert(tag);
    }
  } else {
    rec.hashtags = extractHashtags(rec.text);
  }
  if (obj.contains("label") && !obj["label"].is_null()) {
    if (!obj["label"].is_number_integer()) parseFail(source, row, "'label' must be an integer");
    int code = obj["label"].get<int>();
    if (code < 0 || code >= kNumCategories)
      parseFail(source, row, "label out of range: " + std::to_string(code));
    rec.gold_category = static_cast<Category>(code);
  }
  return rec;
}

std::vector<TweetRecord> ingestJsonl(std::istream& in, const std::string& source) {
  std::vector<TweetRecord> records;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded()) parseFail(source, row, "malformed JSON");
    records.push_back(recordFromJson(obj, source, row));
  }
  return records;
}

constexpr const char* kCsvHeader = "id,created_at,text,hashtags,label";

std::vector<TweetRecord> ingestCsv(std::istream& in, const std::string& source) {
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!readCsvRecord(in, fields, line))
    throw ParseError(source + ": empty file, expected header '" + kCsvHeader + "'");
  if (csvJoin(fields) != kCsvHeader)
    throw ParseError(source + ": row 1: expected header '" + std::string(kCsvHeader) + "'");
  std::vector<TweetRecord> records;
  std::size_t row = 1;
  while (readCsvRecord(in, fields, line)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    if (fields.size() != 5)
      parseFail(source, row, "expected 5 fields, got " + std::to_string(fields.size()));
    TweetRecord rec;
    rec.id = fields[0];
    if (rec.id.empty()) parseFail(source, row, "empty id");
    try {
      rec.created_at = UtcDate::parse(fields[1]);
    } catch (const ParseError& e) {
      parseFail(source, row, e.what());
    }
    rec.text = fields[2];
    if (fields[3].empty()) {
      rec.hashtags = extractHashtags(rec.text);
    } else {
      std::stringstream tagstream(fields[3]);
      std::string tag;
      while (std::getline(tagstream, tag, ';')) {
        tag = normalizeTag(tag);
        if (!tag.empty()) rec.hashtags.insert(tag);
      }
    }
    if (!fields[4].empty()) {
      int code = 0;
      try {
        std::size_t pos = 0;
        code = std::stoi(fields[4], &pos);
        if (pos != fields[4].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        parseFail(source, row, "label must be an integer, got '" + fields[4] + "'");
      }
      if (code < 0 || code >= kNumCategories)
        parseFail(source, row, "label out of range: " + std::to_string(code));
      rec.gold_category = static_cast<Category>(code);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<TweetRecord> ingestCorpus(std::istream& in, CorpusFormat format,
                                      const std::string& source_name) {
  std::vector<TweetRecord> records =
      format == CorpusFormat::Jsonl ? ingestJsonl(in, source_name) : ingestCsv(in, source_name);
  std::unordered_set<std::string> seen;
  for (const auto& rec : records)
    if (!seen.insert(rec.id).second)
      throw DuplicateIdError(source_name + ": duplicate id '" + rec.id + "'");
  return records;
}

std::vector<TweetRecord> ingestCorpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open corpus file: " + path);
  return ingestCorpus(in, format, path);
}

std::optional<CorpusFormat> corpusFormatFromName(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::Jsonl;
  if (name == "csv") return CorpusFormat::Csv;
  return std::nullopt;
}

void serializeCorpus(std::span<const TweetRecord> records, std::ostream& out,
                     CorpusFormat format) {
  if (format == CorpusFormat::Jsonl) {
    for (const auto& rec : records) {
      nlohmann::json obj;
      obj["id"] = rec.id;
      obj["created_at"] = rec.created_at.toString();
      obj["text"] = rec.text;
      obj["hashtags"] = rec.hashtags;
      if (rec.gold_category) obj["label"] = static_cast<int>(*rec.gold_category);
      out << obj.dump() << '\n';
    }
  } else {
    out << kCsvHeader << '\n';
    for (const auto& rec : records) {
      std::string tags;
      for (const auto& t : rec.hashtags) {
        if (!tags.empty()) tags.push_back(';');
        tags += t;
      }
      std::vector<std::string> fields = {
          rec.id, rec.created_at.toString(), rec.text, tags,
          rec.gold_category ? std::to_string(static_cast<int>(*rec.gold_category)) : ""};
      out << csvJoin(fields) << '\n';
    }
  }
}

}  // namespace stagetopics
