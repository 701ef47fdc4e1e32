#include "click2state/datamodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "click2state/common.hpp"

namespace click2state {

using nlohmann::json;

std::string count_key(int index) {
  std::string key(kSourceNames.at(index / kNumClickTypes));
  key += '.';
  key += kClickTypeNames.at(index % kNumClickTypes);
  return key;
}

std::optional<int> parse_count_key(std::string_view key) {
  const auto dot = key.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto src = key.substr(0, dot);
  const auto typ = key.substr(dot + 1);
  auto s = std::find(kSourceNames.begin(), kSourceNames.end(), src);
  auto t = std::find(kClickTypeNames.begin(), kClickTypeNames.end(), typ);
  if (s == kSourceNames.end() || t == kClickTypeNames.end()) return std::nullopt;
  return static_cast<int>(s - kSourceNames.begin()) * kNumClickTypes +
         static_cast<int>(t - kClickTypeNames.begin());
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count_if(
      students.begin(), students.end(), [label](const StudentRecord& r) { return r.label == label; }));
}

void validate_record(const StudentRecord& r, int term_length) {
  auto fail = [&](const std::string& field, const std::string& what) {
    throw DataError("student '" + r.student_id + "': " + field + ": " + what);
  };
  if (r.student_id.empty()) throw DataError("student record with empty student_id");
  if (r.transferred_units < 0) fail("transferred_units", "must be non-negative");
  if (r.label != 0 && r.label != 1) fail("label", "must be 0 or 1");
  if (r.weeks.empty()) fail("weeks", "at least one week required");
  for (std::size_t i = 0; i < r.weeks.size(); ++i) {
    const auto& w = r.weeks[i];
    if (w.week != static_cast<int>(i))
      fail("weeks[" + std::to_string(i) + "].week",
           "expected week index " + std::to_string(i) + ", got " + std::to_string(w.week));
    if (term_length > 0 && w.week >= term_length)
      fail("weeks[" + std::to_string(i) + "].week", "exceeds term length " + std::to_string(term_length));
    for (int k = 0; k < kNumCounts; ++k)
      if (w.counts[k] < 0) fail("weeks[" + std::to_string(i) + "].counts." + count_key(k), "negative count");
  }
}

void validate_dataset(const Dataset& d) {
  if (d.students.empty()) throw DataError("empty dataset");
  if (d.term_length < 1) throw DataError("term_length must be positive");
  for (const auto& r : d.students) validate_record(r, d.term_length);
}

namespace {

StudentRecord record_from_json(const json& j) {
  StudentRecord r;
  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key)) {
      std::string who = j.contains("student_id") && j["student_id"].is_string()
                            ? j["student_id"].get<std::string>()
                            : std::string("<unknown>");
      throw DataError("student '" + who + "': missing field '" + key + "'");
    }
    return j[key];
  };
  const auto& id = require("student_id");
  if (!id.is_string()) throw DataError("student_id must be a string");
  r.student_id = id.get<std::string>();
  auto bad = [&](const std::string& field, const std::string& what) {
    return DataError("student '" + r.student_id + "': " + field + ": " + what);
  };
  const auto& units = require("transferred_units");
  if (!units.is_number_integer()) throw bad("transferred_units", "must be an integer");
  r.transferred_units = units.get<std::int64_t>();
  const auto& label = require("label");
  if (!label.is_number_integer()) throw bad("label", "must be 0 or 1");
  r.label = label.get<int>();
  const auto& weeks = require("weeks");
  if (!weeks.is_array()) throw bad("weeks", "must be an array");
  for (std::size_t i = 0; i < weeks.size(); ++i) {
    const auto& wj = weeks[i];
    const std::string where = "weeks[" + std::to_string(i) + "]";
    if (!wj.is_object()) throw bad(where, "must be an object");
    WeekObservation w;
    if (!wj.contains("week") || !wj["week"].is_number_integer()) throw bad(where + ".week", "missing integer");
    w.week = wj["week"].get<int>();
    if (!wj.contains("counts") || !wj["counts"].is_object()) throw bad(where + ".counts", "missing object");
    std::array<bool, kNumCounts> seen{};
    for (const auto& [key, value] : wj["counts"].items()) {
      auto idx = parse_count_key(key);
      if (!idx) throw bad(where + ".counts", "unknown key '" + key + "'");
      if (!value.is_number_integer()) throw bad(where + ".counts." + key, "must be an integer");
      w.counts[*idx] = value.get<std::int64_t>();
      seen[*idx] = true;
    }
    for (int k = 0; k < kNumCounts; ++k)
      if (!seen[k]) throw bad(where + ".counts", "missing key '" + count_key(k) + "'");
    if (wj.contains("note") && !wj["note"].is_null()) {
      if (!wj["note"].is_string()) throw bad(where + ".note", "must be a string or null");
      w.note = wj["note"].get<std::string>();
    }
    r.weeks.push_back(std::move(w));
  }
  return r;
}

json record_to_json(const StudentRecord& r) {
  json weeks = json::array();
  for (const auto& w : r.weeks) {
    json counts = json::object();
    for (int k = 0; k < kNumCounts; ++k) counts[count_key(k)] = w.counts[k];
    json wj;
    wj["week"] = w.week;
    wj["counts"] = std::move(counts);
    wj["note"] = w.note ? json(*w.note) : json(nullptr);
    weeks.push_back(std::move(wj));
  }
  json j;
  j["student_id"] = r.student_id;
  j["transferred_units"] = r.transferred_units;
  j["label"] = r.label;
  j["weeks"] = std::move(weeks);
  return j;
}

}  // namespace

Dataset parse_dataset(std::istream& in, std::optional<int> term_length) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  int max_week = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": parse error: " + e.what());
    }
    if (!j.is_object()) throw DataError("line " + std::to_string(line_no) + ": expected a JSON object");
    try {
      d.students.push_back(record_from_json(j));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    for (const auto& w : d.students.back().weeks) max_week = std::max(max_week, w.week);
  }
  if (d.students.empty()) throw DataError("empty dataset");
  d.term_length = term_length.value_or(max_week + 1);
  validate_dataset(d);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<int> term_length) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, term_length);
}

std::string record_to_json_line(const StudentRecord& r) { return record_to_json(r).dump(); }

void write_dataset(std::ostream& out, const Dataset& d) {
  for (const auto& r : d.students) out << record_to_json_line(r) << '\n';
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  write_dataset(out, d);
}

DatasetSplit split_dataset(const Dataset& d, SplitRatios ratios, std::uint64_t seed) {
  const std::size_t n = d.size();
  if (n < 10) throw DataError("split_dataset requires at least 10 students, got " + std::to_string(n));
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw DataError("split ratios must be non-negative and sum to 1");

  // Split sizes first, then per-split fail quota by largest remainder so the
  // fail count in every split is within one student of its proportional share.
  std::array<std::size_t, 3> sizes{};
  sizes[0] = static_cast<std::size_t>(std::llround(ratios.train * static_cast<double>(n)));
  sizes[1] = static_cast<std::size_t>(std::llround(ratios.val * static_cast<double>(n)));
  sizes[1] = std::min(sizes[1], n - sizes[0]);
  sizes[2] = n - sizes[0] - sizes[1];

  std::array<std::vector<std::size_t>, 2> by_label;
  for (std::size_t i = 0; i < n; ++i) by_label[d.students[i].label].push_back(i);
  const std::size_t n_fail = by_label[1].size();
  const double fail_frac = static_cast<double>(n_fail) / static_cast<double>(n);

  std::array<std::size_t, 3> fail_quota{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double share = fail_frac * static_cast<double>(sizes[s]);
    fail_quota[s] = static_cast<std::size_t>(std::floor(share));
    remainder[s] = share - std::floor(share);
    assigned += fail_quota[s];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
  for (int s : order) {
    if (assigned >= n_fail) break;
    if (fail_quota[s] < sizes[s]) {
      ++fail_quota[s];
      ++assigned;
    }
  }

  std::mt19937_64 rng(derive_seed(seed, 0x5917));
  for (auto& group : by_label) std::shuffle(group.begin(), group.end(), rng);

  std::array<std::vector<std::size_t>, 3> members;
  std::size_t fail_pos = 0, pass_pos = 0;
  for (int s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < fail_quota[s]; ++k) members[s].push_back(by_label[1][fail_pos++]);
    for (std::size_t k = fail_quota[s]; k < sizes[s]; ++k) members[s].push_back(by_label[0][pass_pos++]);
    std::sort(members[s].begin(), members[s].end());
  }

  DatasetSplit out;
  std::array<Dataset*, 3> targets = {&out.train, &out.val, &out.test};
  for (int s = 0; s < 3; ++s) {
    targets[s]->term_length = d.term_length;
    for (auto i : members[s]) targets[s]->students.push_back(d.students[i]);
  }
  return out;
}

Dataset resample_balanced(const Dataset& train, std::uint64_t seed) {
  const std::size_t n_fail = train.count_label(1);
  const std::size_t n_pass = train.count_label(0);
  if (n_fail == 0 || n_pass == 0) throw DataError("resample_balanced requires both labels present");
  const int minority = n_fail < n_pass ? 1 : 0;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train.students[i].label == minority) pool.push_back(i);
  const std::size_t extra = std::max(n_fail, n_pass) - std::min(n_fail, n_pass);

  Dataset out = train;
  std::mt19937_64 rng(derive_seed(seed, 0xba1a));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (std::size_t k = 0; k < extra; ++k) out.students.push_back(train.students[pool[pick(rng)]]);
  return out;
}

}  // namespace click2state
