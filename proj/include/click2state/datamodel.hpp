#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace click2state {

// Row order of the clickstream table: where the interaction happened.
enum class ClickSource : int { TargetCourse = 0, OtherCourses, DegreePlan, Portal, Homepage };
// Column order of the clickstream table: what kind of interaction.
enum class ClickType : int { Click = 0, FocusedState, Keypress, MouseMove, Scroll, UnfocusedState };

inline constexpr int kNumSources = 5;
inline constexpr int kNumClickTypes = 6;
inline constexpr int kNumCounts = kNumSources * kNumClickTypes;

inline constexpr std::array<std::string_view, kNumSources> kSourceNames = {
    "target_course", "other_courses", "degree_plan", "portal", "homepage"};
inline constexpr std::array<std::string_view, kNumClickTypes> kClickTypeNames = {
    "click", "focused_state", "keypress", "mouse_move", "scroll", "unfocused_state"};

// Row-major (source, type) slot in the 30-long count layout.
constexpr int count_index(ClickSource s, ClickType t) {
  return static_cast<int>(s) * kNumClickTypes + static_cast<int>(t);
}

// "source.type" key used by the JSONL format, e.g. "portal.mouse_move".
std::string count_key(int index);
std::optional<int> parse_count_key(std::string_view key);

struct WeekObservation {
  int week = 0;
  std::array<std::int64_t, kNumCounts> counts{};
  std::optional<std::string> note;

  std::int64_t count(ClickSource s, ClickType t) const { return counts[count_index(s, t)]; }
  bool operator==(const WeekObservation&) const = default;
};

struct StudentRecord {
  std::string student_id;
  std::int64_t transferred_units = 0;
  std::vector<WeekObservation> weeks;
  int label = 0;  // 1 = failed, 0 = passed

  bool operator==(const StudentRecord&) const = default;
};

struct Dataset {
  std::vector<StudentRecord> students;
  int term_length = 0;

  std::size_t size() const { return students.size(); }
  std::size_t count_label(int label) const;
  bool operator==(const Dataset&) const = default;
};

// Throws DataError naming the student and field on the first violation.
void validate_record(const StudentRecord& r, int term_length);
void validate_dataset(const Dataset& d);

// JSONL: one StudentRecord object per line. term_length is inferred as
// max(week)+1 unless given.
Dataset load_dataset(const std::filesystem::path& path, std::optional<int> term_length = std::nullopt);
Dataset parse_dataset(std::istream& in, std::optional<int> term_length = std::nullopt);
std::string record_to_json_line(const StudentRecord& r);
void write_dataset(std::ostream& out, const Dataset& d);
void save_dataset(const std::filesystem::path& path, const Dataset& d);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Label-stratified random partition. Deterministic for a fixed seed.
DatasetSplit split_dataset(const Dataset& d, SplitRatios ratios, std::uint64_t seed);

// Oversamples the minority label with replacement until both labels have
// the majority count. The majority class is kept whole and in order.
Dataset resample_balanced(const Dataset& train, std::uint64_t seed);

}  // namespace click2state
