#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>

#include "click2state/common.hpp"
#include "click2state/datamodel.hpp"
#include "helpers.hpp"

using namespace click2state;

TEST_CASE("count keys cover the 5 x 6 grid in source-major order") {
  CHECK(kNumCounts == 30);
  CHECK(count_key(0) == "target_course.click");
  CHECK(count_key(count_index(ClickSource::Portal, ClickType::Keypress)) == "portal.keypress");
  CHECK(count_key(29) == "homepage.unfocused_state");
  std::set<std::string> seen;
  for (int i = 0; i < kNumCounts; ++i) {
    const auto key = count_key(i);
    seen.insert(key);
    REQUIRE(parse_count_key(key).has_value());
    CHECK(*parse_count_key(key) == i);
  }
  CHECK(seen.size() == 30);
  CHECK_FALSE(parse_count_key("portal.hover").has_value());
  CHECK_FALSE(parse_count_key("Portal.click").has_value());
}

TEST_CASE("JSONL round trip preserves records") {
  auto d = testutil::make_dataset(12, 4, 3);
  d.students[1].weeks[1].note = std::nullopt;
  std::stringstream ss;
  write_dataset(ss, d);
  const auto back = parse_dataset(ss);
  CHECK(back == d);
}

TEST_CASE("a week missing one count key is rejected with the key named") {
  const auto r = testutil::make_record("s1", 0, 2, 1);
  auto line = record_to_json_line(r);
  const std::string key = "\"portal.keypress\":";
  const auto pos = line.find(key);
  REQUIRE(pos != std::string::npos);
  const auto end = line.find(',', pos);
  line.erase(pos, end - pos + 1);
  std::stringstream ss(line + "\n");
  try {
    parse_dataset(ss);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("portal.keypress") != std::string::npos);
    CHECK(msg.find("s1") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }
}

TEST_CASE("empty input is a data error") {
  std::stringstream ss("");
  CHECK_THROWS_AS(parse_dataset(ss), DataError);
}

TEST_CASE("week indices must be contiguous from zero") {
  auto r = testutil::make_record("s7", 1, 3, 2);
  r.weeks[2].week = 5;
  CHECK_THROWS_AS(validate_record(r, 3), DataError);
  auto r2 = testutil::make_record("s8", 1, 4, 2);
  CHECK_THROWS_AS(validate_record(r2, 3), DataError);
  auto r3 = testutil::make_record("s8", 1, 2, 2);
  CHECK_NOTHROW(validate_record(r3, 3));  // term length bounds week indices from above
}

TEST_CASE("negative counts and bad labels are rejected") {
  auto r = testutil::make_record("s9", 1, 2, 4);
  r.weeks[0].counts[3] = -1;
  CHECK_THROWS_AS(validate_record(r, 2), DataError);
  auto r2 = testutil::make_record("s9", 2, 2, 4);
  CHECK_THROWS_AS(validate_record(r2, 2), DataError);
}

TEST_CASE("split of 1000 students with 300 failures") {
  Dataset d;
  d.term_length = 2;
  for (int i = 0; i < 1000; ++i) d.students.push_back(testutil::make_record("s" + std::to_string(i), i < 300 ? 1 : 0, 2, i, false));
  const auto sp = split_dataset(d, {}, 11);
  CHECK(sp.train.size() == 800);
  CHECK(sp.val.size() == 100);
  CHECK(sp.test.size() == 100);
  CHECK(sp.train.count_label(1) == 240);
  CHECK(sp.val.count_label(1) == 30);
  CHECK(sp.test.count_label(1) == 30);

  std::set<std::string> ids;
  for (const auto* part : {&sp.train, &sp.val, &sp.test})
    for (const auto& r : part->students) ids.insert(r.student_id);
  CHECK(ids.size() == 1000);

  const auto again = split_dataset(d, {}, 11);
  CHECK(again.train == sp.train);
  CHECK(again.test == sp.test);
  const auto other = split_dataset(d, {}, 12);
  CHECK_FALSE(other.test == sp.test);
}

TEST_CASE("split fail quotas per part stay within one of the global rate") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const int n = 10 + static_cast<int>(rng() % 300);
    Dataset d;
    d.term_length = 1;
    int fails = 0;
    for (int i = 0; i < n; ++i) {
      const int y = rng() % 3 == 0;
      fails += y;
      d.students.push_back(testutil::make_record("s" + std::to_string(i), y, 1, i, false));
    }
    const auto sp = split_dataset(d, {}, seed);
    CHECK(sp.train.size() + sp.val.size() + sp.test.size() == static_cast<std::size_t>(n));
    const double rate = static_cast<double>(fails) / n;
    for (const auto* part : {&sp.train, &sp.val, &sp.test})
      CHECK(std::abs(static_cast<double>(part->count_label(1)) - rate * static_cast<double>(part->size())) < 1.0 + 1e-9);
  }
}

TEST_CASE("split needs at least 10 students") {
  const auto d = testutil::make_dataset(9, 2, 1);
  CHECK_THROWS_AS(split_dataset(d, {}, 0), DataError);
}

TEST_CASE("balanced resampling keeps originals and equalizes labels") {
  Dataset d;
  d.term_length = 1;
  for (int i = 0; i < 50; ++i) d.students.push_back(testutil::make_record("s" + std::to_string(i), i < 10 ? 1 : 0, 1, i, false));
  const auto b = resample_balanced(d, 5);
  CHECK(b.count_label(0) == 40);
  CHECK(b.count_label(1) == 40);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(b.students[i] == d.students[i]);
  for (std::size_t i = d.size(); i < b.size(); ++i) CHECK(b.students[i].label == 1);
  CHECK(resample_balanced(d, 5) == b);

  Dataset one = d;
  for (auto& r : one.students) r.label = 0;
  CHECK_THROWS_AS(resample_balanced(one, 5), DataError);
}
