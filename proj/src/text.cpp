#include "click2state/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>
#include <unordered_set>

namespace click2state {

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  for (auto& t : tokens) add(t);
}

int Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) {
    tokens_.push_back(token);
    doc_freq_.push_back(0);
  }
  return it->second;
}

void Vocabulary::set_doc_freq(std::vector<int> df) {
  if (df.size() != tokens_.size()) throw std::invalid_argument("doc_freq length must match vocabulary size");
  doc_freq_ = std::move(df);
}

void Vocabulary::note_document(const std::vector<int>& ids) {
  std::vector<int> uniq = ids;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  for (int id : uniq) ++doc_freq_.at(static_cast<std::size_t>(id));
}

const std::vector<std::string_view>& stopwords() {
  static const std::vector<std::string_view> words = {
      "a",       "about",  "above",   "after",   "again", "against", "all",     "am",     "an",
      "and",     "any",    "are",     "as",      "at",    "be",      "because", "been",   "before",
      "being",   "below",  "between", "both",    "but",   "by",      "can",     "could",  "did",
      "do",      "does",   "doing",   "down",    "during", "each",   "few",     "for",    "from",
      "further", "had",    "has",     "have",    "having", "he",     "her",     "here",   "hers",
      "herself", "him",    "himself", "his",     "how",   "i",       "if",      "in",     "into",
      "is",      "it",     "its",     "itself",  "just",  "me",      "more",    "most",   "my",
      "myself",  "no",     "nor",     "not",     "now",   "of",      "off",     "on",     "once",
      "only",    "or",     "other",   "our",     "ours",  "ourselves", "out",   "over",   "own",
      "same",    "she",    "should",  "so",      "some",  "such",    "than",    "that",   "the",
      "their",   "theirs", "them",    "themselves", "then", "there", "these",   "they",   "this",
      "those",   "through", "to",     "too",     "under", "until",   "up",      "very",   "was",
      "we",      "were",   "what",    "when",    "where", "which",   "while",   "who",    "whom",
      "why",     "will",   "with",    "would",   "you",   "your",    "yours",   "yourself",
      "yourselves"};
  return words;
}

bool is_stopword(std::string_view token) {
  static const std::unordered_set<std::string_view> set(stopwords().begin(), stopwords().end());
  return set.count(token) > 0;
}

namespace {

bool is_consonant(const std::string& w, std::size_t i) {
  switch (w[i]) {
    case 'a': case 'e': case 'i': case 'o': case 'u':
      return false;
    case 'y':
      return i == 0 ? true : !is_consonant(w, i - 1);
    default:
      return true;
  }
}

// Porter's m: number of VC sequences in w[0, end).
int measure(const std::string& w, std::size_t end) {
  int m = 0;
  std::size_t i = 0;
  while (i < end && is_consonant(w, i)) ++i;
  while (i < end) {
    while (i < end && !is_consonant(w, i)) ++i;
    if (i >= end) break;
    while (i < end && is_consonant(w, i)) ++i;
    ++m;
  }
  return m;
}

bool has_vowel(const std::string& w, std::size_t end) {
  for (std::size_t i = 0; i < end; ++i)
    if (!is_consonant(w, i)) return true;
  return false;
}

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool ends_double_consonant(const std::string& w) {
  const auto n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: stem ends cvc where the final c is not w, x or y.
bool ends_cvc(const std::string& w) {
  const auto n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 1) || is_consonant(w, n - 2) || !is_consonant(w, n - 3)) return false;
  const char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

void step1a(std::string& w) {
  if (ends_with(w, "sses")) w.erase(w.size() - 2);
  else if (ends_with(w, "ies")) w.erase(w.size() - 2);
  else if (ends_with(w, "ss")) {}
  else if (ends_with(w, "s")) w.pop_back();
}

void step1b(std::string& w) {
  if (ends_with(w, "eed")) {
    if (measure(w, w.size() - 3) > 0) w.pop_back();
    return;
  }
  std::size_t cut = 0;
  if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) cut = 2;
  else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) cut = 3;
  if (cut == 0) return;
  w.erase(w.size() - cut);
  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w.push_back('e');
  } else if (ends_double_consonant(w)) {
    const char c = w.back();
    if (c != 'l' && c != 's' && c != 'z') w.pop_back();
  } else if (measure(w, w.size()) == 1 && ends_cvc(w)) {
    w.push_back('e');
  }
}

void step1c(std::string& w) {
  if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
}

void step2(std::string& w) {
  static const std::array<std::pair<std::string_view, std::string_view>, 20> rules = {{
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},   {"izer", "ize"},
      {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},       {"ousli", "ous"},
      {"ization", "ize"}, {"ation", "ate"},   {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
      {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
  }};
  // Longest matching suffix decides; the m>0 condition is checked only for it.
  const std::pair<std::string_view, std::string_view>* best = nullptr;
  for (const auto& r : rules)
    if (ends_with(w, r.first) && (!best || r.first.size() > best->first.size())) best = &r;
  if (!best) return;
  const auto stem_len = w.size() - best->first.size();
  if (measure(w, stem_len) > 0) {
    w.erase(stem_len);
    w += best->second;
  }
}

}  // namespace

std::string stem(std::string_view word) {
  std::string w(word);
  if (w.size() <= 2) return w;
  step1a(w);
  step1b(w);
  step1c(w);
  step2(w);
  return w;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    const bool all_alpha = std::all_of(cur.begin(), cur.end(), [](unsigned char c) { return std::isalpha(c); });
    const bool all_digit = std::all_of(cur.begin(), cur.end(), [](unsigned char c) { return std::isdigit(c); });
    if (!all_digit && cur.size() >= 2 && !is_stopword(cur)) {
      std::string tok = all_alpha ? stem(cur) : cur;
      if (tok.size() >= 2) out.push_back(std::move(tok));
    }
    cur.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'') {
      // apostrophes join contractions: "student's" -> "students"
    } else {
      flush();
    }
  }
  flush();
  return out;
}

TokenizedDoc preprocess(std::string_view text, Vocabulary& vocab, VocabPolicy policy, DocId id) {
  if (policy == VocabPolicy::Frozen) return preprocess_frozen(text, vocab, std::move(id));
  TokenizedDoc doc{std::move(id), {}};
  for (const auto& tok : tokenize(text)) doc.token_ids.push_back(vocab.add(tok));
  vocab.note_document(doc.token_ids);
  return doc;
}

TokenizedDoc preprocess_frozen(std::string_view text, const Vocabulary& vocab, DocId id) {
  TokenizedDoc doc{std::move(id), {}};
  for (const auto& tok : tokenize(text)) {
    const int v = vocab.find(tok);
    if (v >= 0) doc.token_ids.push_back(v);
  }
  return doc;
}

}  // namespace click2state
