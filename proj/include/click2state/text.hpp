#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace click2state {

// Token <-> id bijection with per-token document frequencies.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  // Returns -1 for out-of-vocabulary tokens.
  int find(std::string_view token) const;
  int add(const std::string& token);
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<int>& doc_freq() const { return doc_freq_; }
  void set_doc_freq(std::vector<int> df);
  void note_document(const std::vector<int>& ids);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::vector<int> doc_freq_;
};

struct DocId {
  std::string student_id;
  int week = 0;
  auto operator<=>(const DocId&) const = default;
};

struct TokenizedDoc {
  DocId id;
  std::vector<int> token_ids;
};

enum class VocabPolicy { Build, Frozen };

// Lowercase, strip punctuation, split on whitespace, drop stopwords, pure
// numbers and tokens shorter than two characters, then stem alphabetic
// tokens. Tokens mixing letters and digits (e.g. "w0137") pass verbatim.
std::vector<std::string> tokenize(std::string_view text);

// tokenize() followed by vocabulary lookup. Build adds unseen tokens and
// updates document frequencies; Frozen drops them.
TokenizedDoc preprocess(std::string_view text, Vocabulary& vocab, VocabPolicy policy, DocId id = {});
TokenizedDoc preprocess_frozen(std::string_view text, const Vocabulary& vocab, DocId id = {});

// Porter steps 1a, 1b, 1c and 2 on a lowercase alphabetic word.
std::string stem(std::string_view word);

bool is_stopword(std::string_view token);
const std::vector<std::string_view>& stopwords();

}  // namespace click2state
