#include "woesb/woe.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "testutil.hpp"

using namespace woesb::woe;

namespace {

CategoricalSummary make_summary(std::vector<std::string> levels,
                                std::vector<long long> n,
                                std::vector<long long> pos) {
  CategoricalSummary s;
  s.levels = std::move(levels);
  s.n_j = std::move(n);
  s.pos_j = std::move(pos);
  for (size_t j = 0; j < s.n_j.size(); ++j) {
    s.n += s.n_j[j];
    s.pos += s.pos_j[j];
  }
  return s;
}

}  // namespace

TEST_SUITE("woe") {

TEST_CASE("summarize counts per level in first-appearance order") {
  std::vector<std::string> x{"a", "a", "b"};
  std::vector<int> y{1, 0, 1};
  auto s = summarize_categories(x, y);
  REQUIRE(s.J() == 2);
  CHECK(s.levels == std::vector<std::string>{"a", "b"});
  CHECK(s.n_j == std::vector<long long>{2, 1});
  CHECK(s.pos_j == std::vector<long long>{1, 1});
  CHECK(s.p_hat() == doctest::Approx(2.0 / 3.0));

  CHECK_THROWS_AS(
      summarize_categories(std::vector<std::string>{}, std::vector<int>{}),
      std::invalid_argument);
  CHECK_THROWS_AS(summarize_categories(x, std::vector<int>{1, 2, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(summarize_categories(x, std::vector<int>{1, 0}),
                  std::invalid_argument);
}

TEST_CASE("raw woe is the empirical log-odds with boundary offsets") {
  auto s = make_summary({"a", "b", "c", "d"}, {10, 5, 4, 10}, {3, 0, 2, 10});
  auto m = woe_raw(s, 0.01);
  CHECK(m.values[0] == doctest::Approx(std::log(0.3 / 0.7)).epsilon(1e-12));
  CHECK(m.values[0] == doctest::Approx(-0.847298).epsilon(1e-6));
  // zero positives of 5 at c=0.01: p = 0.002
  CHECK(m.values[1] ==
        doctest::Approx(std::log(0.002 / 0.998)).epsilon(1e-12));
  CHECK(m.values[1] == doctest::Approx(-6.212606).epsilon(1e-6));
  CHECK(m.values[2] == doctest::Approx(0.0));  // p = 1/2
  // all positives of 10: p = 1 - 0.001
  CHECK(m.values[3] ==
        doctest::Approx(std::log(0.999 / 0.001)).epsilon(1e-12));
  const double p = s.p_hat();
  CHECK(m.unseen_value == doctest::Approx(std::log(p / (1 - p))));

  CHECK_THROWS_AS(woe_raw(s, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(woe_raw(s, 1.0), std::invalid_argument);
}

TEST_CASE("offset effect fades as the empty category grows") {
  auto small = make_summary({"a", "b"}, {10, 10}, {0, 5});
  auto large = make_summary({"a", "b"}, {1000, 10}, {0, 5});
  CHECK(woe_raw(small, 0.01).values[0] > woe_raw(large, 0.01).values[0]);
}

TEST_CASE("shrinkage on the two-category fixture matches hand computation") {
  auto s = make_summary({"big", "small"}, {90, 10}, {9, 5});
  auto e = shrinkage_proportions(s);
  CHECK(e.v == doctest::Approx(0.14 * 0.86 / 100).epsilon(1e-12));
  CHECK(e.v_j[0] == doctest::Approx(0.14 * 0.86 / 90).epsilon(1e-12));
  CHECK(e.v_j[1] == doctest::Approx(0.14 * 0.86 / 10).epsilon(1e-12));
  CHECK(e.sigma2 == doctest::Approx(0.07331111111).epsilon(1e-9));
  CHECK(e.b[0] == doctest::Approx(0.001821468).epsilon(1e-6));
  CHECK(e.b[1] == doctest::Approx(0.1287744).epsilon(1e-6));
  CHECK(e.p_tilde[0] == doctest::Approx(0.1000728587).epsilon(1e-8));
  CHECK(e.p_tilde[1] == doctest::Approx(0.4536412).epsilon(1e-6));
  // The small category moves much further toward p_hat = 0.14.
  CHECK(std::abs(e.p_tilde[1] - 0.5) > 10 * std::abs(e.p_tilde[0] - 0.1));
  // p_tilde is exactly the stated convex combination.
  for (int j = 0; j < 2; ++j)
    CHECK(e.p_tilde[j] ==
          doctest::Approx((1 - e.b[j]) * s.p_hat_j(j) + e.b[j] * 0.14)
              .epsilon(1e-14));
}

TEST_CASE("shrinkage degenerate cases") {
  // One category: p_tilde must equal p_hat whatever b does.
  auto one = make_summary({"a"}, {50}, {20});
  auto e1 = shrinkage_proportions(one);
  CHECK(e1.p_tilde[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(e1.b[0] >= 0.0);
  CHECK(e1.b[0] <= 1.0);

  // All proportions equal: sigma2 is 0 and everything shrinks to p_hat.
  auto flat = make_summary({"a", "b", "c"}, {10, 20, 40}, {2, 4, 8});
  auto e2 = shrinkage_proportions(flat);
  CHECK(e2.sigma2 == doctest::Approx(0.0));
  for (double pt : e2.p_tilde) CHECK(pt == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("woe_shrunk composes shrinkage with the log-odds") {
  auto s = make_summary({"big", "small"}, {90, 10}, {9, 5});
  auto e = shrinkage_proportions(s);
  auto m = woe_shrunk(s, 0.01);
  for (int j = 0; j < 2; ++j)
    CHECK(m.values[j] ==
          doctest::Approx(std::log(e.p_tilde[j] / (1 - e.p_tilde[j])))
              .epsilon(1e-12));
}

TEST_CASE("shrunk proportions beat raw ones in mean squared error") {
  // True level proportions drawn from a Beta prior, tiny level sizes, many
  // replicates: shrinkage should reduce the average estimation error.
  auto g = testutil::rng(424242);
  std::gamma_distribution<double> ga(2.0, 1.0), gb(8.0, 1.0);
  std::uniform_int_distribution<int> nd(4, 25);
  double mse_raw = 0.0, mse_shrunk = 0.0;
  const int reps = 250, J = 12;
  for (int r = 0; r < reps; ++r) {
    CategoricalSummary s;
    std::vector<double> truth(J);
    for (int j = 0; j < J; ++j) {
      const double a = ga(g), b = gb(g);
      truth[j] = a / (a + b);  // Beta(2, 8) draw
      const int nj = nd(g);
      std::binomial_distribution<int> bd(nj, truth[j]);
      const int pj = bd(g);
      s.levels.push_back("L" + std::to_string(j));
      s.n_j.push_back(nj);
      s.pos_j.push_back(pj);
      s.n += nj;
      s.pos += pj;
    }
    if (s.pos == 0 || s.pos == s.n) {
      --r;
      continue;
    }
    auto e = shrinkage_proportions(s);
    for (int j = 0; j < J; ++j) {
      const double raw_err = s.p_hat_j(j) - truth[j];
      const double shr_err = e.p_tilde[j] - truth[j];
      mse_raw += raw_err * raw_err;
      mse_shrunk += shr_err * shr_err;
    }
  }
  CHECK(mse_shrunk < mse_raw);
}

TEST_CASE("clustered woe pools levels by weighted k-means") {
  // woe values approximately {-1.0, -0.9, 2.0}: the close pair merges.
  // p = e^w / (1 + e^w): w=-1 -> 0.2689, w=-0.9 -> 0.2891, w=2 -> 0.8808
  auto s = make_summary({"a", "b", "c"}, {1000, 1000, 1000},
                        {269, 289, 881});
  auto m = woe_clustered(s, 2, 0.01);
  CHECK(m.cluster[0] == m.cluster[1]);
  CHECK(m.cluster[0] != m.cluster[2]);
  CHECK(m.values[0] == m.values[1]);

  // k = J keeps every level distinct when woe values are distinct.
  auto mj = woe_clustered(s, 3, 0.01);
  CHECK(mj.values[0] != mj.values[1]);
  auto raw = woe_raw(s, 0.01);
  for (int j = 0; j < 3; ++j)
    CHECK(mj.values[j] == doctest::Approx(raw.values[j]).epsilon(1e-12));

  // k = 1 pools everything to the weighted mean of the raw woes.
  auto m1 = woe_clustered(s, 1, 0.01);
  CHECK(m1.values[0] == m1.values[1]);
  CHECK(m1.values[1] == m1.values[2]);
  double wsum = 0.0, mean = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double pj = s.p_hat_j(j);
    const double w = s.n_j[j] * pj * (1 - pj);
    wsum += w;
    mean += w * raw.values[j];
  }
  CHECK(m1.values[0] == doctest::Approx(mean / wsum).epsilon(1e-12));
}

TEST_CASE("clustered map coarsens to at most min(k, J) distinct values") {
  auto g = testutil::rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    CategoricalSummary s;
    std::uniform_int_distribution<int> nd(1, 60);
    const int J = 2 + rep % 7;
    for (int j = 0; j < J; ++j) {
      int nj = nd(g);
      std::uniform_int_distribution<int> pd(0, nj);
      s.levels.push_back("L" + std::to_string(j));
      s.n_j.push_back(nj);
      s.pos_j.push_back(pd(g));
      s.n += s.n_j.back();
      s.pos += s.pos_j.back();
    }
    for (int k = 1; k <= J + 2; ++k) {
      auto m = woe_clustered(s, k, 0.01);
      std::vector<double> vals = m.values;
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      CHECK(static_cast<int>(vals.size()) <= std::min(k, J));
      for (double v : m.values) CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("apply_woe looks up levels and honors the unseen policy") {
  auto s = make_summary({"a", "b"}, {10, 10}, {3, 7});
  auto m = woe_raw(s, 0.01);
  std::vector<std::string> x{"b", "a", "b"};
  auto col = apply_woe(x, m, UnseenPolicy::error);
  CHECK(col[0] == doctest::Approx(std::log(0.7 / 0.3)));
  CHECK(col[1] == doctest::Approx(std::log(0.3 / 0.7)));

  std::vector<std::string> xu{"a", "zz"};
  auto fall = apply_woe(xu, m, UnseenPolicy::overall_logodds);
  CHECK(fall[1] == doctest::Approx(m.unseen_value));
  CHECK_THROWS_WITH_AS(apply_woe(xu, m, UnseenPolicy::error) /* throws */,
                       "woe: unseen category level 'zz'", std::runtime_error);
}

TEST_CASE("raw woe differs from the unnormalized form by a constant") {
  // The alternative definition log((P_j/P)/(F_j/F)) differs from the
  // log-odds form by exactly log(P/F) for every interior level.
  auto s = make_summary({"a", "b", "c"}, {30, 50, 20}, {10, 5, 15});
  auto m = woe_raw(s, 0.01);
  const double P = static_cast<double>(s.pos), F = static_cast<double>(s.n) - P;
  for (int j = 0; j < s.J(); ++j) {
    const double Pj = static_cast<double>(s.pos_j[j]);
    const double Fj = static_cast<double>(s.n_j[j]) - Pj;
    const double alt = std::log((Pj / P) / (Fj / F));
    CHECK(m.values[j] - alt == doctest::Approx(std::log(P / F)).epsilon(1e-12));
  }
}

}  // TEST_SUITE
