#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "click2state/common.hpp"
#include "click2state/interpret.hpp"
#include "helpers.hpp"

using namespace click2state;

namespace {

std::vector<PreparedStudent> pool(int n, int T, int K, std::uint64_t seed) {
  std::vector<PreparedStudent> out;
  for (int i = 0; i < n; ++i) {
    auto s = testutil::random_student(T, K, seed + i, i % 2);
    char id[16];
    std::snprintf(id, sizeof id, "p%03d", i);
    s.student_id = id;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("extreme states match exhaustive search") {
  const auto m = testutil::random_model(5, 4, 3);
  const auto p = pool(25, 6, 4, 10);
  const auto ex = find_extreme_states(m, p);
  double lo = 2.0, hi = -1.0;
  for (const auto& s : p)
    for (const auto& h : encode(m, s.features)) {
      lo = std::min(lo, predict_fail(m, h));
      hi = std::max(hi, predict_fail(m, h));
    }
  CHECK(ex.p_ref.fail_prob == lo);
  CHECK(ex.f_ref.fail_prob == hi);
  CHECK(predict_fail(m, ex.h_P) == lo);
  CHECK(predict_fail(m, ex.h_F) == hi);
  CHECK(ex.p_ref.week >= 0);
  CHECK_THROWS_AS(find_extreme_states(m, {}), DataError);
}

TEST_CASE("ties resolve to the smallest student id and week") {
  ModelParams m = init_params(3, 2, 0);
  for (auto v : m.weights.views()) v.setZero();  // every state scores 0.5
  auto p = pool(4, 3, 2, 1);
  std::swap(p[0], p[3]);
  const auto ex = find_extreme_states(m, p);
  CHECK(ex.p_ref.student_id == "p000");
  CHECK(ex.p_ref.week == 0);
  CHECK(ex.f_ref.student_id == "p000");
  CHECK(ex.f_ref.week == 0);
}

TEST_CASE("optimized extremes score beyond the observed ones") {
  const auto m = testutil::random_model(5, 3, 8);
  const auto obs = find_extreme_states(m, pool(20, 5, 3, 4));
  const auto opt = optimize_extreme_states(m);
  CHECK(opt.f_ref.fail_prob >= obs.f_ref.fail_prob);
  CHECK(opt.p_ref.fail_prob <= obs.p_ref.fail_prob);
  CHECK(opt.h_F.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("standardizer uses population moments") {
  std::vector<Eigen::VectorXd> pop = {Eigen::Vector3d(0.2, 0.3, 0.5), Eigen::Vector3d(0.4, 0.3, 0.3),
                                      Eigen::Vector3d(0.6, 0.3, 0.1)};
  const auto st = fit_standardizer(pop);
  CHECK(st.mean[0] == doctest::Approx(0.4));
  CHECK(st.std[0] == doctest::Approx(std::sqrt(0.08 / 3)));
  CHECK(st.degenerate[1]);
  CHECK_FALSE(st.degenerate[0]);
  CHECK_THROWS_AS(fit_standardizer(std::vector<Eigen::VectorXd>{}), DataError);
}

TEST_CASE("z-scores and the exclusion list") {
  const auto m = testutil::random_model(4, 5, 2);
  const auto p = pool(20, 4, 5, 7);
  const auto st = fit_standardizer(m, p);
  const auto ex = find_extreme_states(m, p);
  const auto z = state_topic_zscores(m, st, ex.h_F, {1, 3});
  REQUIRE(z.size() == 3);
  CHECK(z[0].topic == 0);
  CHECK(z[1].topic == 2);
  CHECK(z[2].topic == 4);
  const auto th = predict_topics(m, ex.h_F).probs;
  CHECK(z[1].z == doctest::Approx((th[2] - st.mean[2]) / st.std[2]));
  auto deg = st;
  deg.degenerate[2] = true;
  CHECK_THROWS_AS(state_topic_zscores(m, deg, ex.h_F, {}), DataError);
  CHECK_NOTHROW(state_topic_zscores(m, deg, ex.h_F, {2}));
  CHECK(reported_topics(5, {0, 4}) == std::vector<int>{1, 2, 3});
}

TEST_CASE("topic trajectories average per group and week") {
  const auto m = testutil::random_model(4, 3, 5);
  const auto p = pool(10, 5, 3, 30);
  const auto st = fit_standardizer(m, p);
  const auto traj = topic_trajectories(m, st, p, {});
  CHECK(traj.rows.size() == 5 * 3 * 2);
  double sum = 0.0;
  int n = 0;
  for (const auto& s : p)
    if (s.label == 1) {
      const auto h = encode(m, s.features)[2];
      sum += (predict_topics(m, h).probs[1] - st.mean[1]) / st.std[1];
      ++n;
    }
  bool found = false;
  for (const auto& r : traj.rows)
    if (r.group == Outcome::F && r.week == 2 && r.topic == 1) {
      found = true;
      CHECK(r.n == n);
      CHECK(r.mean_z == doctest::Approx(sum / n).epsilon(1e-12));
    }
  CHECK(found);
  CHECK(topic_trajectories(m, st, p, {0}).rows.size() == 5 * 2 * 2);

  auto only_pass = p;
  for (auto& s : only_pass) s.label = 0;
  CHECK_THROWS_AS(topic_trajectories(m, st, only_pass, {}), DataError);
}

TEST_CASE("distance trajectories") {
  const auto m = testutil::random_model(4, 3, 6);
  const auto p = pool(12, 4, 3, 60);
  const auto ex = find_extreme_states(m, p);
  const auto rows = distance_trajectories(m, ex, p);
  CHECK(rows.size() == 4 * 2);
  double dp = 0.0, df = 0.0;
  int n = 0;
  for (const auto& s : p)
    if (s.label == 0) {
      const auto h = encode(m, s.features)[3];
      dp += (h - ex.h_P).norm();
      df += (h - ex.h_F).norm();
      ++n;
    }
  CHECK(rows[3].group == Outcome::P);
  CHECK(rows[3].week == 3);
  CHECK(rows[3].mean_dist_p == doctest::Approx(dp / n));
  CHECK(rows[3].mean_dist_f == doctest::Approx(df / n));

  std::ostringstream a, b, c;
  write_distance_csv(a, rows);
  CHECK(a.str().rfind("group,week,mean_dist_p,mean_dist_f,n_students\n", 0) == 0);
  const auto st = fit_standardizer(m, p);
  write_topic_trajectories_csv(b, topic_trajectories(m, st, p, {}));
  CHECK(b.str().rfind("group,week,topic,mean_zscore,n_students\n", 0) == 0);
  write_extremes_csv(c, m, st, ex, {0});
  const auto text = c.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 2);
}
