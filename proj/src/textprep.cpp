#include "stagetopics/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace stagetopics {

namespace {

#include "unicode_punct.inc"

bool isAsciiSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool isUnicodeSpace(char32_t cp) {
  if (cp < 0x80) return isAsciiSpace(static_cast<char>(cp));
  switch (cp) {
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Decodes the code point starting at i, advancing i. Malformed bytes are
// passed through one at a time as their raw value.
char32_t decodeUtf8(std::string_view s, std::size_t& i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (b0 & 0x1Fu) << 6 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (b0 & 0x0Fu) << 12 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (b0 & 0x07u) << 18 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                  (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
    i += 4;
    return cp;
  }
  ++i;
  return b0;
}

void encodeUtf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool startsWithCaseless(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  return true;
}

// True when s[pos..] starts a URL (scheme:// or www. form).
bool isUrlStart(std::string_view s, std::size_t pos) {
  if (startsWithCaseless(s.substr(pos), "www.")) return true;
  std::size_t j = pos;
  if (j >= s.size() || !std::isalpha(static_cast<unsigned char>(s[j]))) return false;
  ++j;
  while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) ||
                          s[j] == '+' || s[j] == '-' || s[j] == '.'))
    ++j;
  return s.compare(j, 3, "://") == 0;
}

// Removes URL spans (up to the next whitespace); URLs are recognized at the
// start of the string or right after whitespace.
std::string stripUrls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool at_boundary = true;
  std::size_t i = 0;
  while (i < text.size()) {
    if (at_boundary && isUrlStart(text, i)) {
      while (i < text.size() && !isAsciiSpace(text[i])) ++i;
      continue;
    }
    at_boundary = isAsciiSpace(text[i]);
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

bool isExtraAsciiPunct(char32_t cp) {
  switch (cp) {
    case '$': case '+': case '<': case '=': case '>':
    case '^': case '`': case '|': case '~':
      return true;
    default:
      return false;
  }
}

char32_t lowerAscii(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  return cp;
}

}  // namespace

bool isPunctuation(char32_t cp) {
  if (isExtraAsciiPunct(cp)) return true;
  std::size_t lo = 0, hi = std::size(kPunctRanges);
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (cp < kPunctRanges[mid][0]) hi = mid;
    else if (cp > kPunctRanges[mid][1]) lo = mid + 1;
    else return true;
  }
  return false;
}

std::string prepForClassifier(std::string_view text) {
  std::string no_urls = stripUrls(text);
  std::string out;
  out.reserve(no_urls.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < no_urls.size()) {
    char32_t cp = decodeUtf8(no_urls, i);
    if (isUnicodeSpace(cp)) {
      pending_space = true;
      continue;
    }
    if (isPunctuation(cp)) continue;
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    encodeUtf8(lowerAscii(cp), out);
  }
  return out;
}

std::vector<std::string> prepForTopics(std::string_view text,
                                       const std::set<std::string>& stopwords) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size()) {
      std::size_t j = i;
      char32_t cp = decodeUtf8(text, j);
      if (!isUnicodeSpace(cp)) break;
      i = j;
    }
    if (i >= text.size()) break;
    std::size_t start = i;
    while (i < text.size()) {
      std::size_t j = i;
      char32_t cp = decodeUtf8(text, j);
      if (isUnicodeSpace(cp)) break;
      i = j;
    }
    std::string_view raw = text.substr(start, i - start);
    if (raw.front() == '@' || raw.front() == '#') continue;
    if (isUrlStart(raw, 0)) continue;
    std::string cleaned;
    std::size_t n_cp = 0;
    std::size_t k = 0;
    while (k < raw.size()) {
      char32_t cp = decodeUtf8(raw, k);
      if (isPunctuation(cp)) continue;
      encodeUtf8(lowerAscii(cp), cleaned);
      ++n_cp;
    }
    if (n_cp < 2) continue;
    if (stopwords.count(cleaned)) continue;
    tokens.push_back(std::move(cleaned));
  }
  return tokens;
}

std::set<std::string> loadWordList(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open word list: " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

std::string defaultStopwordFile() {
  return std::string(STAGETOPICS_DATA_DIR) + "/stopwords.txt";
}

// ---------------------------------------------------------------------------
// Bigrams
// ---------------------------------------------------------------------------

double BigramTable::score(const std::string& a, const std::string& b) const {
  auto pair_it = pair_counts.find({a, b});
  if (pair_it == pair_counts.end()) return 0.0;
  auto ca = unigram_counts.find(a);
  auto cb = unigram_counts.find(b);
  if (ca == unigram_counts.end() || cb == unigram_counts.end()) return 0.0;
  return static_cast<double>(pair_it->second - min_count) *
         static_cast<double>(total_tokens) /
         (static_cast<double>(ca->second) * static_cast<double>(cb->second));
}

bool BigramTable::qualifies(const std::string& a, const std::string& b) const {
  auto pair_it = pair_counts.find({a, b});
  if (pair_it == pair_counts.end() || pair_it->second < min_count) return false;
  return score(a, b) > threshold;
}

BigramTable detectBigrams(std::span<const std::vector<std::string>> docs,
                          int min_count, double threshold) {
  BigramTable table;
  table.min_count = min_count;
  table.threshold = threshold;
  for (const auto& doc : docs) {
    table.total_tokens += static_cast<std::int64_t>(doc.size());
    for (const auto& tok : doc) ++table.unigram_counts[tok];
    for (std::size_t i = 0; i + 1 < doc.size(); ++i)
      ++table.pair_counts[{doc[i], doc[i + 1]}];
  }
  // Keep only pairs that can qualify; the rest are dead weight.
  for (auto it = table.pair_counts.begin(); it != table.pair_counts.end();) {
    if (it->second < min_count) it = table.pair_counts.erase(it);
    else ++it;
  }
  return table;
}

std::vector<std::string> applyBigrams(std::span<const std::string> doc,
                                      const BigramTable& table) {
  std::vector<std::string> out;
  out.reserve(doc.size());
  std::size_t i = 0;
  while (i < doc.size()) {
    if (i + 1 < doc.size() && table.qualifies(doc[i], doc[i + 1])) {
      out.push_back(doc[i] + "_" + doc[i + 1]);
      i += 2;
    } else {
      out.push_back(doc[i]);
      ++i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lemmatization
// ---------------------------------------------------------------------------

LemmaTable loadLemmaTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lemma table: " + path);
  LemmaTable table;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw ParseError(path + ": row " + std::to_string(row) +
                       ": expected 'inflected<TAB>lemma'");
    table[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return table;
}

std::string defaultLemmaFile() {
  return std::string(STAGETOPICS_DATA_DIR) + "/lemmas.tsv";
}

namespace {

constexpr std::size_t kMinStem = 3;

bool endsWith(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool isVowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// stopped -> stop, running -> run; keeps -ll/-ss/-zz (fall, pass, buzz).
std::string undouble(std::string stem) {
  if (stem.size() >= 2) {
    char last = stem.back();
    if (last == stem[stem.size() - 2] && !isVowel(last) && last != 'l' &&
        last != 's' && last != 'z')
      stem.pop_back();
  }
  return stem;
}

}  // namespace

std::string lemmatizeToken(const std::string& token, const LemmaTable& table) {
  auto it = table.find(token);
  if (it != table.end()) return it->second;
  std::size_t n = token.size();
  if (endsWith(token, "ies") && n - 3 >= kMinStem)
    return token.substr(0, n - 3) + "y";
  if (endsWith(token, "es") && n - 2 >= kMinStem) {
    // -es only strips after a sibilant (viruses, boxes, watches); otherwise the
    // plain -s rule applies (makes -> make).
    const std::string stem = token.substr(0, n - 2);
    if (endsWith(stem, "s") || endsWith(stem, "x") || endsWith(stem, "z") ||
        endsWith(stem, "ch") || endsWith(stem, "sh"))
      return stem;
  }
  if (endsWith(token, "s") && n - 1 >= kMinStem && !endsWith(token, "ss") &&
      !endsWith(token, "us") && !endsWith(token, "is"))
    return token.substr(0, n - 1);
  if (endsWith(token, "ing") && n - 3 >= kMinStem)
    return undouble(token.substr(0, n - 3));
  if (endsWith(token, "ed") && n - 2 >= kMinStem)
    return undouble(token.substr(0, n - 2));
  return token;
}

std::vector<std::string> lemmatize(std::span<const std::string> tokens,
                                   const LemmaTable& table) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) out.push_back(lemmatizeToken(tok, table));
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

std::optional<int> Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  return id_to_token_.at(static_cast<std::size_t>(id));
}

int Vocabulary::addToken(const std::string& token) {
  auto [it, inserted] = token_to_id_.try_emplace(token, size());
  if (inserted) id_to_token_.push_back(token);
  return it->second;
}

EncodedCorpus buildVocabulary(std::span<const std::vector<std::string>> docs,
                              std::span<const std::string> doc_ids, int min_df) {
  std::unordered_map<std::string, int> df;
  for (const auto& doc : docs) {
    std::set<std::string_view> uniq(doc.begin(), doc.end());
    for (auto tok : uniq) ++df[std::string(tok)];
  }
  EncodedCorpus out;
  out.docs.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    TokenizedDoc enc;
    enc.doc_id = d < doc_ids.size() ? doc_ids[d] : std::to_string(d);
    for (const auto& tok : docs[d]) {
      if (df[tok] < min_df) continue;
      enc.tokens.push_back(out.vocab.addToken(tok));
    }
    out.docs.push_back(std::move(enc));
  }
  if (out.vocab.size() == 0)
    throw EmptyVocabularyError("no token meets min_df=" + std::to_string(min_df));
  return out;
}

EncodedCorpus buildVocabulary(std::span<const std::vector<std::string>> docs, int min_df) {
  return buildVocabulary(docs, {}, min_df);
}

}  // namespace stagetopics
