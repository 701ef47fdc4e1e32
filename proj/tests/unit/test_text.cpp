#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "click2state/text.hpp"

using namespace click2state;

namespace {

std::vector<std::string> words(const Vocabulary& v, const TokenizedDoc& d) {
  std::vector<std::string> out;
  for (int id : d.token_ids) out.push_back(v.token(id));
  return out;
}

}  // namespace

TEST_CASE("snapshot: short mentor note") {
  Vocabulary v;
  const auto doc = preprocess("The student revised Task 3.", v, VocabPolicy::Build);
  CHECK(words(v, doc) == std::vector<std::string>{"student", "revis", "task"});
  CHECK(v.size() == 3);
}

TEST_CASE("alphanumeric synthetic tokens pass verbatim") {
  CHECK(tokenize("w0137") == std::vector<std::string>{"w0137"});
  CHECK(tokenize("W0137 w0002, w0137") == std::vector<std::string>{"w0137", "w0002", "w0137"});
}

TEST_CASE("numbers, short tokens and stopwords are dropped") {
  CHECK(tokenize("a 12 345 I the and of").empty());
  CHECK(tokenize("Is it done?") == std::vector<std::string>{"done"});
  CHECK(is_stopword("the"));
  CHECK_FALSE(is_stopword("student"));
  CHECK(stopwords().size() > 100);
}

TEST_CASE("porter steps 1 and 2") {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"caresses", "caress"}, {"ponies", "poni"},       {"cats", "cat"},        {"feed", "feed"},
      {"agreed", "agree"},     {"plastered", "plaster"}, {"motoring", "motor"},  {"sing", "sing"},
      {"hopping", "hop"},     {"filing", "file"},       {"happy", "happi"},     {"relational", "relate"},
      {"conditional", "condition"}, {"hopeful", "hopeful"}, {"rational", "rational"}, {"valenci", "valence"},
  };
  for (const auto& [in, out] : cases) {
    CAPTURE(in);
    CHECK(stem(in) == out);
  }
}

TEST_CASE("frozen vocabulary drops unseen tokens and keeps ids") {
  Vocabulary v;
  preprocess("student submitted draft", v, VocabPolicy::Build);
  const auto before = v.size();
  const auto doc = preprocess_frozen("student submitted essay", v);
  CHECK(v.size() == before);
  CHECK(words(v, doc) == std::vector<std::string>{"student", "submit"});
  Vocabulary v2 = v;
  const auto doc2 = preprocess("novel words here", v2, VocabPolicy::Frozen);
  CHECK(v2.size() == before);
  CHECK(doc2.token_ids.empty());
}

TEST_CASE("document frequencies count each document once") {
  Vocabulary v;
  preprocess("task task task", v, VocabPolicy::Build);
  preprocess("task review", v, VocabPolicy::Build);
  CHECK(v.doc_freq().at(static_cast<std::size_t>(v.find("task"))) == 2);
  CHECK(v.doc_freq().at(static_cast<std::size_t>(v.find("review"))) == 1);
  CHECK(v.find("missing") == -1);
}

TEST_CASE("preprocessing is deterministic") {
  const std::string note = "Mentor discussed the student's progress; student's pacing improved.";
  CHECK(tokenize(note) == tokenize(note));
  CHECK(tokenize(note).front() == "mentor");
}
