#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stagetopics/errors.hpp"

namespace stagetopics {

// ---------------------------------------------------------------------------
// Preprocessing pipelines
// ---------------------------------------------------------------------------

/// Light pipeline used in front of the classifier: URLs removed (scheme:// and
/// www. forms), punctuation removed, ASCII-lowercased, whitespace collapsed,
/// trimmed. Idempotent on its own output.
std::string prepForClassifier(std::string_view text);

/// Heavy pipeline used in front of topic modeling: whitespace tokenization
/// with URL, @-mention and #-hashtag tokens dropped, punctuation stripped,
/// lowercased, stopwords and tokens shorter than two characters removed.
std::vector<std::string> prepForTopics(std::string_view text,
                                       const std::set<std::string>& stopwords);

/// True for Unicode general-category P* plus the ASCII symbols $+<=>^`|~.
bool isPunctuation(char32_t cp);

std::set<std::string> loadWordList(const std::string& path);
std::string defaultStopwordFile();

// ---------------------------------------------------------------------------
// Bigram detection
// ---------------------------------------------------------------------------

struct BigramTable {
  std::unordered_map<std::string, std::int64_t> unigram_counts;
  std::map<std::pair<std::string, std::string>, std::int64_t> pair_counts;
  std::int64_t total_tokens = 0;
  int min_count = 5;
  double threshold = 10.0;

  // (pair_count - min_count) * total_tokens / (count(a) * count(b)).
  double score(const std::string& a, const std::string& b) const;
  bool qualifies(const std::string& a, const std::string& b) const;
};

BigramTable detectBigrams(std::span<const std::vector<std::string>> docs,
                          int min_count, double threshold);

/// Greedy left-to-right single pass; a consumed token cannot start another
/// pair. Qualifying adjacent pairs (a,b) become "a_b".
std::vector<std::string> applyBigrams(std::span<const std::string> doc,
                                      const BigramTable& table);

// ---------------------------------------------------------------------------
// Lemmatization
// ---------------------------------------------------------------------------

using LemmaTable = std::unordered_map<std::string, std::string>;

/// UTF-8 file with one `inflected<TAB>lemma` entry per line.
LemmaTable loadLemmaTable(const std::string& path);
std::string defaultLemmaFile();

/// Table lookup first; otherwise suffix rules (-ies/-es/-s plurals, -ing, -ed)
/// with a minimum stem length of 3 characters.
std::string lemmatizeToken(const std::string& token, const LemmaTable& table);
std::vector<std::string> lemmatize(std::span<const std::string> tokens,
                                   const LemmaTable& table);

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

struct TokenizedDoc {
  std::string doc_id;
  std::vector<int> tokens;  // ids < vocabulary size
};

class Vocabulary {
 public:
  Vocabulary() = default;

  int size() const { return static_cast<int>(id_to_token_.size()); }
  std::optional<int> id(std::string_view token) const;
  const std::string& token(int id) const;  // bounds-checked

  int addToken(const std::string& token);  // id of existing or new entry

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

struct EncodedCorpus {
  Vocabulary vocab;
  std::vector<TokenizedDoc> docs;
};

/// Tokens appearing in at least `min_df` documents get dense ids in
/// first-appearance order; rarer tokens are dropped from the encodings.
/// Throws EmptyVocabularyError when nothing survives.
EncodedCorpus buildVocabulary(std::span<const std::vector<std::string>> docs, int min_df);
EncodedCorpus buildVocabulary(std::span<const std::vector<std::string>> docs,
                              std::span<const std::string> doc_ids, int min_df);

}  // namespace stagetopics
