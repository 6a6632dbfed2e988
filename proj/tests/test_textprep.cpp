#include <doctest.h>

#include <map>
#include <sstream>

#include "stagetopics/rng.hpp"
#include "stagetopics/textprep.hpp"

using namespace stagetopics;

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

// Independent recount of the bigram collocation score from raw docs.
double bruteForceScore(const std::vector<std::vector<std::string>>& docs,
                       const std::string& a, const std::string& b, int min_count) {
  std::int64_t total = 0, ca = 0, cb = 0, pair = 0;
  for (const auto& doc : docs) {
    total += static_cast<std::int64_t>(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (doc[i] == a) ++ca;
      if (doc[i] == b) ++cb;
      if (i + 1 < doc.size() && doc[i] == a && doc[i + 1] == b) ++pair;
    }
  }
  if (ca == 0 || cb == 0) return 0.0;
  return static_cast<double>(pair - min_count) * static_cast<double>(total) /
         (static_cast<double>(ca) * static_cast<double>(cb));
}

}  // namespace

TEST_CASE("classifier preprocessing removes URLs and punctuation") {
  CHECK(prepForClassifier("Check https://t.co/xyz NOW!!") == "check now");
  CHECK(prepForClassifier("") == "");
  CHECK(prepForClassifier("abc") == "abc");
  CHECK(prepForClassifier("see www.example.com/page then") == "see then");
  CHECK(prepForClassifier("A!  B,,  C..") == "a b c");
  CHECK(prepForClassifier("mid ftp://x.y end") == "mid end");
   // mentions and hashtags are kept here, only their punctuation goes
  CHECK(prepForClassifier("@User said #ChinaVirus") == "user said chinavirus");
  CHECK(prepForClassifier("“quoted”—dash") == "quoteddash");
  CHECK(prepForClassifier("  padded\t\n  ") == "padded");
}

TEST_CASE("classifier preprocessing is idempotent on its own output") {
  Pcg32 rng(3);
  const std::string alphabet = "aB c#.@!:/wW9'\n\té";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng.bounded(60));
    for (int i = 0; i < len; ++i)
      text += alphabet[rng.bounded(static_cast<std::uint32_t>(alphabet.size()))];
    const std::string once = prepForClassifier(text);
    CHECK(prepForClassifier(once) == once);
  }
}

TEST_CASE("topic preprocessing drops mentions, hashtags, URLs and stopwords") {
  std::set<std::string> stop = {"the"};
  CHECK(prepForTopics("@user The virus\nspreads #ChinaVirus", stop) ==
        std::vector<std::string>{"virus", "spreads"});
  CHECK(prepForTopics("the The THE", stop).empty());
  CHECK(prepForTopics("wuhan wuhan", {}) == std::vector<std::string>{"wuhan", "wuhan"});
  CHECK(prepForTopics("i a x yz", {}) == std::vector<std::string>{"yz"});
  CHECK(prepForTopics("go https://a.b/c www.d.e stop", {}) ==
        std::vector<std::string>{"go", "stop"});
  CHECK(prepForTopics("", {}).empty());
}

TEST_CASE("topic preprocessing is idempotent on its rejoined output") {
  std::set<std::string> stop = {"the", "and", "virus"};
  Pcg32 rng(5);
  const std::string alphabet = "aB c#.@!:/wW9'\n";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng.bounded(60));
    for (int i = 0; i < len; ++i)
      text += alphabet[rng.bounded(static_cast<std::uint32_t>(alphabet.size()))];
    auto once = prepForTopics(text, stop);
    CHECK(prepForTopics(join(once), stop) == once);
  }
}

TEST_CASE("punctuation covers Unicode P* plus the extra ASCII symbols") {
  for (char32_t cp : {U'.', U',', U'#', U'@', U'_', U'-', U'$', U'+', U'=', U'~',
                      char32_t{0x2014} /* em dash */, char32_t{0x201C}})
    CHECK(isPunctuation(cp));
  for (char32_t cp : {U'a', U'Z', U'0', U' ', char32_t{0x4E2D} /* CJK */})
    CHECK(!isPunctuation(cp));
}

TEST_CASE("bigram detection matches the collocation score contract") {
  // 100 docs of 20 tokens; "hong kong" adjacent once per doc, fillers unique.
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 100; ++d) {
    std::vector<std::string> doc = {"hong", "kong"};
    for (int i = 0; i < 18; ++i)
      doc.push_back("f" + std::to_string(d) + "_" + std::to_string(i));
    docs.push_back(std::move(doc));
  }
  BigramTable table = detectBigrams(docs, 5, 10.0);
  CHECK(table.total_tokens == 2000);
  // (100 - 5) * 2000 / (100 * 100) = 19
  CHECK(table.score("hong", "kong") == doctest::Approx(19.0).epsilon(1e-12));
  CHECK(table.score("hong", "kong") ==
        doctest::Approx(bruteForceScore(docs, "hong", "kong", 5)).epsilon(1e-12));
  CHECK(table.qualifies("hong", "kong"));
}

TEST_CASE("pairs below min_count never qualify") {
  std::vector<std::vector<std::string>> docs = {{"rare", "pair", "x", "y"}};
  BigramTable table = detectBigrams(docs, 5, 0.0);
  CHECK(!table.qualifies("rare", "pair"));
  CHECK(table.pair_counts.empty());  // pruned
}

TEST_CASE("empty corpus gives an empty table") {
  BigramTable table = detectBigrams({}, 5, 10.0);
  CHECK(table.unigram_counts.empty());
  CHECK(table.pair_counts.empty());
  CHECK(table.total_tokens == 0);
}

TEST_CASE("bigram scores match a brute-force recount on random corpora") {
  Pcg32 rng(17);
  const std::vector<std::string> vocab = {"aa", "bb", "cc", "dd", "ee"};
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<std::string>> docs;
    int budget = 100 + static_cast<int>(rng.bounded(900));
    while (budget > 0) {
      const int len = 1 + static_cast<int>(rng.bounded(20));
      std::vector<std::string> doc;
      for (int i = 0; i < len && budget > 0; ++i, --budget)
        doc.push_back(vocab[rng.bounded(static_cast<std::uint32_t>(vocab.size()))]);
      docs.push_back(std::move(doc));
    }
    const int min_count = 1 + static_cast<int>(rng.bounded(5));
    BigramTable table = detectBigrams(docs, min_count, 0.5);
    for (const auto& a : vocab) {
      for (const auto& b : vocab) {
        if (table.pair_counts.count({a, b}))
          CHECK(table.score(a, b) == bruteForceScore(docs, a, b, min_count));
      }
    }
    // invariant: pair count bounded by both unigram counts
    for (const auto& [pair, count] : table.pair_counts) {
      CHECK(count <= table.unigram_counts.at(pair.first));
      CHECK(count <= table.unigram_counts.at(pair.second));
    }
  }
}

namespace {

BigramTable handBuiltTable(const std::map<std::pair<std::string, std::string>,
                                          std::int64_t>& pairs) {
  BigramTable table;
  table.min_count = 5;
  table.threshold = 10.0;
  table.total_tokens = 1000;
  for (const auto& [pair, count] : pairs) {
    table.pair_counts[pair] = count;
    table.unigram_counts[pair.first] = 10;
    table.unigram_counts[pair.second] = 10;
  }
  return table;
}

}  // namespace

TEST_CASE("bigram application is a greedy single pass") {
  BigramTable table = handBuiltTable({{{"hong", "kong"}, 10}});
  std::vector<std::string> doc = {"hong", "kong", "people"};
  CHECK(applyBigrams(doc, table) == std::vector<std::string>{"hong_kong", "people"});

  std::vector<std::string> untouched = {"people", "hong", "people"};
  CHECK(applyBigrams(untouched, table) == untouched);

  BigramTable chain = handBuiltTable({{{"a", "b"}, 10}, {{"b", "c"}, 10}});
  std::vector<std::string> abc = {"a", "b", "c"};
  CHECK(applyBigrams(abc, chain) == std::vector<std::string>{"a_b", "c"});
}

TEST_CASE("bigram application never lengthens and splits back to the pair") {
  BigramTable table = handBuiltTable({{{"a", "b"}, 10}, {{"c", "a"}, 10}});
  Pcg32 rng(23);
  const std::vector<std::string> vocab = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> doc;
    const int len = static_cast<int>(rng.bounded(12));
    for (int i = 0; i < len; ++i)
      doc.push_back(vocab[rng.bounded(static_cast<std::uint32_t>(vocab.size()))]);
    auto out = applyBigrams(doc, table);
    CHECK(out.size() <= doc.size());
    std::vector<std::string> unfolded;
    for (const auto& tok : out) {
      auto us = tok.find('_');
      if (us == std::string::npos) {
        unfolded.push_back(tok);
      } else {
        unfolded.push_back(tok.substr(0, us));
        unfolded.push_back(tok.substr(us + 1));
      }
    }
    CHECK(unfolded == doc);
  }
}

TEST_CASE("lemmatization uses the table first, then suffix rules") {
  LemmaTable table = loadLemmaTable(defaultLemmaFile());
  CHECK(lemmatize(std::vector<std::string>{"viruses", "spreading"}, table) ==
        std::vector<std::string>{"virus", "spread"});
  CHECK(lemmatize(std::vector<std::string>{"china"}, table) ==
        std::vector<std::string>{"china"});
  CHECK(lemmatize(std::vector<std::string>{}, table).empty());

  CHECK(lemmatizeToken("countries", table) == "country");
  CHECK(lemmatizeToken("makes", table) == "make");       // table entry
  CHECK(lemmatizeToken("banned", table) == "ban");       // -ed with undoubling
  CHECK(lemmatizeToken("falling", table) == "fall");     // -ll kept
  CHECK(lemmatizeToken("died", table) == "die");         // table, stem too short for -ed
  CHECK(lemmatizeToken("virus", table) == "virus");      // -us never stripped
  CHECK(lemmatizeToken("glass", table) == "glass");      // -ss never stripped
  CHECK(lemmatizeToken("crisis", table) == "crisis");    // -is never stripped
  CHECK(lemmatizeToken("human_rights", table) == "human_right");
  CHECK(lemmatizeToken("boxes", table) == "box");
  CHECK(lemmatizeToken("watches", table) == "watch");
  CHECK(lemmatizeToken("ccp", table) == "ccp");
}

TEST_CASE("vocabulary respects min_df and first-appearance order") {
  std::vector<std::vector<std::string>> docs = {{"virus", "spread"},
                                                {"virus", "china"}};
  auto encoded = buildVocabulary(docs, 2);
  CHECK(encoded.vocab.size() == 1);
  CHECK(encoded.vocab.id("virus") == 0);
  CHECK(!encoded.vocab.id("spread").has_value());
  CHECK(encoded.docs[0].tokens == std::vector<int>{0});
  CHECK(encoded.docs[1].tokens == std::vector<int>{0});

  auto all = buildVocabulary(docs, 1);
  CHECK(all.vocab.size() == 3);
  CHECK(all.vocab.id("virus") == 0);
  CHECK(all.vocab.id("spread") == 1);
  CHECK(all.vocab.id("china") == 2);
  for (std::size_t d = 0; d < docs.size(); ++d)
    CHECK(all.docs[d].tokens.size() == docs[d].size());

  CHECK_THROWS_AS(buildVocabulary(docs, 3), EmptyVocabularyError);
}

TEST_CASE("vocabulary is a bijection and encoding round-trips") {
  Pcg32 rng(31);
  const std::vector<std::string> words = {"v0", "v1", "v2", "v3", "v4", "v5"};
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 30; ++d) {
    std::vector<std::string> doc;
    const int len = 1 + static_cast<int>(rng.bounded(15));
    for (int i = 0; i < len; ++i)
      doc.push_back(words[rng.bounded(static_cast<std::uint32_t>(words.size()))]);
    docs.push_back(std::move(doc));
  }
  auto encoded = buildVocabulary(docs, 1);
  for (int id = 0; id < encoded.vocab.size(); ++id)
    CHECK(encoded.vocab.id(encoded.vocab.token(id)) == id);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<std::string> decoded;
    for (int id : encoded.docs[d].tokens) decoded.push_back(encoded.vocab.token(id));
    CHECK(decoded == docs[d]);
  }
}

TEST_CASE("stopword list ships with the documented size") {
  auto stop = loadWordList(defaultStopwordFile());
  CHECK(stop.size() == 179);
  CHECK(stop.count("the") == 1);
  CHECK(stop.count("virus") == 0);
}
