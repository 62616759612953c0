#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "autoids/hpo.hpp"

using namespace autoids;

namespace {

Trial make_trial(double x, double value) {
  Trial t;
  t.config["x"] = x;
  t.value = value;
  t.ok = true;
  return t;
}

}  // namespace

TEST_CASE("split_trials sizes the better group by the gamma quantile") {
  std::vector<Trial> history;
  for (int i = 0; i < 8; ++i) history.push_back(make_trial(0.1 * i, static_cast<double>(i)));
  auto [better, worse] = split_trials(history, 0.25);
  CHECK(better.size() == 2);
  CHECK(worse.size() == 6);
  CHECK(better[0].value == 0.0);
  CHECK(better[1].value == 1.0);

  std::vector<Trial> two = {make_trial(0.1, 5.0), make_trial(0.2, 1.0)};
  auto [b2, w2] = split_trials(two, 0.25);
  CHECK(b2.size() == 1);
  CHECK(w2.size() == 1);
  CHECK(b2[0].value == 1.0);
}

TEST_CASE("split_trials is stable for equal values") {
  std::vector<Trial> history;
  for (int i = 0; i < 8; ++i) history.push_back(make_trial(static_cast<double>(i), 1.0));
  auto [better, worse] = split_trials(history, 0.25);
  REQUIRE(better.size() == 2);
  CHECK(std::get<double>(better[0].config["x"]) == 0.0);
  CHECK(std::get<double>(better[1].config["x"]) == 1.0);
  CHECK(worse.size() == 6);
}

TEST_CASE("split_trials partitions cleanly on distinct values") {
  Rng rng(8);
  std::vector<Trial> history;
  for (int i = 0; i < 20; ++i) history.push_back(make_trial(rng.uniform(), rng.uniform()));
  auto [better, worse] = split_trials(history, 0.3);
  CHECK(better.size() + worse.size() == history.size());
  double max_better = -1.0, min_worse = 2.0;
  for (const Trial& t : better) max_better = std::max(max_better, t.value);
  for (const Trial& t : worse) min_worse = std::min(min_worse, t.value);
  CHECK(max_better <= min_worse);
}

TEST_CASE("categorical kde applies add-one smoothing") {
  const ParamSpec spec = CategoricalParam{{"a", "b"}};
  const std::vector<std::string> obs = {"a"};
  CHECK(kde_logdensity(obs, spec, "a") == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-12));
  CHECK(kde_logdensity(obs, spec, "b") == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("continuous kde is symmetric about a single observation") {
  const ParamSpec spec = ContinuousParam{0.0, 1.0};
  const std::vector<double> obs = {0.5};
  const double left = kde_logdensity(obs, spec, 0.5 - 0.17);
  const double right = kde_logdensity(obs, spec, 0.5 + 0.17);
  CHECK(left == doctest::Approx(right).epsilon(1e-12));
}

TEST_CASE("coincident observations collapse to a single kernel") {
  const ParamSpec spec = ContinuousParam{0.0, 1.0};
  const std::vector<double> two = {0.4, 0.4};
  // mixture of two identical kernels = one kernel with the same bandwidth;
  // here the nearest-neighbor spacing is zero, so the floor (range/2) rules
  const double bw = 0.5;
  auto phi = [](double z) { return std::exp(-0.5 * z * z) / 2.5066282746310002; };
  auto cdf = [](double t) { return 0.5 * (1.0 + std::erf(t / 1.4142135623730951)); };
  const double x = 0.61;
  const double expected =
      phi((x - 0.4) / bw) / (bw * (cdf((1.0 - 0.4) / bw) - cdf((0.0 - 0.4) / bw)));
  CHECK(kde_logdensity(two, spec, x) == doctest::Approx(std::log(expected)).epsilon(1e-10));
}

TEST_CASE("kde rejects out-of-domain evaluation points") {
  const ParamSpec spec = ContinuousParam{0.0, 1.0};
  const std::vector<double> obs = {0.5};
  CHECK_THROWS_AS(kde_logdensity(obs, spec, 1.5), ConfigError);
  const ParamSpec cat = CategoricalParam{{"a", "b"}};
  CHECK_THROWS_AS(kde_logdensity({std::string("a")}, cat, std::string("zzz")), ConfigError);
}

TEST_CASE("suggest with no history draws in-domain values") {
  SearchSpace space;
  space.params["lr"] = ContinuousParam{0.0, 1.0};
  space.params["n"] = IntegerParam{5, 50};
  space.params["crit"] = CategoricalParam{{"gini", "entropy"}};
  TpeConfig cfg;
  cfg.seed = 9;
  const ParamConfig config = suggest(space, {}, cfg);
  const double lr = std::get<double>(config.at("lr"));
  const std::int64_t n = std::get<std::int64_t>(config.at("n"));
  const std::string crit = std::get<std::string>(config.at("crit"));
  CHECK(lr >= 0.0);
  CHECK(lr < 1.0);
  CHECK(n >= 5);
  CHECK(n <= 50);
  CHECK((crit == "gini" || crit == "entropy"));
}

TEST_CASE("suggest prefers the good cluster in a constructed history") {
  SearchSpace space;
  space.params["x"] = ContinuousParam{0.0, 1.0};
  std::vector<Trial> history;
  // good trials cluster near 0.3, bad near 0.9
  for (int i = 0; i < 6; ++i) history.push_back(make_trial(0.27 + 0.01 * i, 0.01 + 0.001 * i));
  for (int i = 0; i < 18; ++i) history.push_back(make_trial(0.86 + 0.004 * i, 0.5 + 0.01 * i));

  TpeConfig cfg;
  cfg.n_startup = 4;
  cfg.gamma = 0.25;  // better group = 6 lowest = exactly the good cluster
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    cfg.seed = seed;
    const double x = std::get<double>(suggest(space, history, cfg).at("x"));
    if (x >= 0.1 && x <= 0.5) ++inside;
  }
  CHECK(inside >= 190);  // 0.95 of 200
}

TEST_CASE("suggest on a categorical-only space follows the better group") {
  SearchSpace space;
  space.params["c"] = CategoricalParam{{"a", "b"}};
  std::vector<Trial> history;
  for (int i = 0; i < 6; ++i) {
    Trial t;
    t.config["c"] = std::string("a");
    t.value = 0.1;
    t.ok = true;
    history.push_back(t);
  }
  for (int i = 0; i < 14; ++i) {
    Trial t;
    t.config["c"] = std::string("b");
    t.value = 0.9;
    t.ok = true;
    history.push_back(t);
  }
  // better group = 5 lowest, all "a"; smoothed ratio favors "a":
  // l(a)/g(a) = (6/7)/(2/17) far above l(b)/g(b) = (1/7)/(15/17)
  TpeConfig cfg;
  cfg.n_startup = 4;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    cfg.seed = seed;
    CHECK(std::get<std::string>(suggest(space, history, cfg).at("c")) == "a");
  }
}

TEST_CASE("optimize closes in on a 1-D quadratic minimum") {
  SearchSpace space;
  space.params["x"] = ContinuousParam{0.0, 1.0};
  auto objective = [](const ParamConfig& config) {
    const double x = std::get<double>(config.at("x"));
    return (x - 0.3) * (x - 0.3);
  };
  std::vector<double> errors;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TpeConfig cfg;
    cfg.seed = seed;
    const OptimizeResult result = optimize(objective, space, 50, cfg);
    errors.push_back(std::fabs(std::get<double>(result.best.config.at("x")) - 0.3));

    // best-so-far is monotone non-increasing and ends at the reported best
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> curve;
    for (const Trial& t : result.history) {
      if (t.ok) best = std::min(best, t.value);
      curve.push_back(best);
    }
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] <= curve[i - 1]);
    CHECK(curve.back() == result.best.value);
    CHECK(result.history.size() == 50);
  }
  std::sort(errors.begin(), errors.end());
  CHECK(0.5 * (errors[9] + errors[10]) <= 0.05);
}

TEST_CASE("optimize edge cases") {
  SearchSpace space;
  space.params["x"] = ContinuousParam{0.0, 1.0};

  TpeConfig cfg;
  cfg.seed = 3;
  const OptimizeResult one = optimize([](const ParamConfig&) { return 1.5; }, space, 1, cfg);
  CHECK(one.history.size() == 1);
  CHECK(one.best.value == 1.5);

  const OptimizeResult flat = optimize([](const ParamConfig&) { return 2.0; }, space, 10, cfg);
  CHECK(flat.history.size() == 10);
  CHECK(flat.best.value == 2.0);

  auto failing = [](const ParamConfig&) -> double { throw std::runtime_error("boom"); };
  CHECK_THROWS_AS(optimize(failing, space, 5, cfg), TrainError);
}

TEST_CASE("failed trials are recorded and excluded from the surrogate") {
  SearchSpace space;
  space.params["x"] = ContinuousParam{0.0, 1.0};
  int calls = 0;
  auto objective = [&](const ParamConfig& config) -> double {
    ++calls;
    if (calls % 3 == 0) throw std::runtime_error("flaky");
    return std::get<double>(config.at("x"));
  };
  TpeConfig cfg;
  cfg.seed = 5;
  cfg.n_startup = 3;
  const OptimizeResult result = optimize(objective, space, 15, cfg);
  CHECK(result.history.size() == 15);
  std::size_t failed = 0;
  for (const Trial& t : result.history) failed += t.ok ? 0 : 1;
  CHECK(failed == 5);
  CHECK(result.best.ok);
}

TEST_CASE("optimize is deterministic for a fixed seed") {
  SearchSpace space;
  space.params["x"] = ContinuousParam{0.0, 1.0};
  space.params["k"] = IntegerParam{1, 9};
  auto objective = [](const ParamConfig& config) {
    const double x = std::get<double>(config.at("x"));
    return x + 0.01 * static_cast<double>(std::get<std::int64_t>(config.at("k")));
  };
  TpeConfig cfg;
  cfg.seed = 77;
  const OptimizeResult a = optimize(objective, space, 30, cfg);
  const OptimizeResult b = optimize(objective, space, 30, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].value == b.history[i].value);
    CHECK(a.history[i].config == b.history[i].config);
  }
}

TEST_CASE("suggestions stay in-domain under space fuzzing") {
  Rng rng(31);
  for (int round = 0; round < 60; ++round) {
    SearchSpace space;
    const int n_params = 1 + static_cast<int>(rng.uniform_int(0, 3));
    for (int p = 0; p < n_params; ++p) {
      const std::string name = "p" + std::to_string(p);
      switch (rng.uniform_int(0, 2)) {
        case 0: {
          const double lo = rng.uniform(-5.0, 5.0);
          space.params[name] = ContinuousParam{lo, lo + rng.uniform(0.1, 10.0)};
          break;
        }
        case 1: {
          const std::int64_t lo = rng.uniform_int(-50, 50);
          space.params[name] = IntegerParam{lo, lo + rng.uniform_int(1, 100)};
          break;
        }
        default: space.params[name] = CategoricalParam{{"u", "v", "w"}};
      }
    }
    // history biased toward the low end of each numeric domain
    std::vector<Trial> history;
    Rng hist_rng(rng.next());
    for (int i = 0; i < 20; ++i) {
      Trial t;
      t.ok = true;
      t.value = hist_rng.uniform();
      for (const auto& [name, spec] : space.params) {
        if (const auto* c = std::get_if<ContinuousParam>(&spec))
          t.config[name] = hist_rng.uniform(c->lo, c->hi);
        else if (const auto* ip = std::get_if<IntegerParam>(&spec))
          t.config[name] = hist_rng.uniform_int(ip->lo, ip->hi);
        else
          t.config[name] = std::string("v");
      }
      history.push_back(t);
    }
    TpeConfig cfg;
    cfg.seed = rng.next();
    cfg.n_startup = 5;
    const ParamConfig config = suggest(space, history, cfg);
    for (const auto& [name, spec] : space.params) {
      if (const auto* c = std::get_if<ContinuousParam>(&spec)) {
        const double v = std::get<double>(config.at(name));
        CHECK(v >= c->lo);
        CHECK(v <= c->hi);
      } else if (const auto* ip = std::get_if<IntegerParam>(&spec)) {
        const std::int64_t v = std::get<std::int64_t>(config.at(name));
        CHECK(v >= ip->lo);
        CHECK(v <= ip->hi);
      } else {
        const std::string v = std::get<std::string>(config.at(name));
        CHECK((v == "u" || v == "v" || v == "w"));
      }
    }
  }
}

TEST_CASE("model_space exposes the published tuning ranges") {
  const SearchSpace rf = model_space(Family::RF);
  CHECK(rf.params.size() == 5);
  CHECK(std::get<IntegerParam>(rf.params.at("n_estimators")).lo == 50);
  CHECK(std::get<IntegerParam>(rf.params.at("n_estimators")).hi == 500);
  CHECK(std::get<IntegerParam>(rf.params.at("max_depth")).lo == 5);
  CHECK(std::get<IntegerParam>(rf.params.at("max_depth")).hi == 50);
  CHECK(std::get<IntegerParam>(rf.params.at("min_samples_split")).lo == 2);
  CHECK(std::get<IntegerParam>(rf.params.at("min_samples_split")).hi == 11);
  CHECK(std::get<IntegerParam>(rf.params.at("min_samples_leaf")).lo == 1);
  CHECK(std::get<IntegerParam>(rf.params.at("min_samples_leaf")).hi == 11);
  CHECK(std::get<CategoricalParam>(rf.params.at("criterion")).choices ==
        std::vector<std::string>{"gini", "entropy"});

  const SearchSpace dt = model_space(Family::DT);
  CHECK(dt.params.size() == 4);
  CHECK(dt.params.find("n_estimators") == dt.params.end());

  // open intervals carry a small inset at both ends
  const SearchSpace rgbt = model_space(Family::RGBT);
  const auto& lr = std::get<ContinuousParam>(rgbt.params.at("learning_rate"));
  CHECK(lr.lo > 0.0);
  CHECK(lr.lo <= 0.001);
  CHECK(lr.hi >= 0.999);
  CHECK(lr.hi < 1.0);
  const auto& gamma = std::get<ContinuousParam>(rgbt.params.at("gamma"));
  CHECK(gamma.hi == doctest::Approx(5.0).epsilon(1e-3));
  const auto& subsample = std::get<ContinuousParam>(rgbt.params.at("subsample"));
  CHECK(subsample.lo == doctest::Approx(0.5).epsilon(1e-2));
  CHECK(subsample.hi < 1.0);

  const SearchSpace lgbt = model_space(Family::LGBT);
  CHECK(std::get<IntegerParam>(lgbt.params.at("num_leaves")).lo == 100);
  CHECK(std::get<IntegerParam>(lgbt.params.at("num_leaves")).hi == 2000);
  CHECK(std::get<IntegerParam>(lgbt.params.at("min_child_samples")).lo == 10);
  CHECK(std::get<IntegerParam>(lgbt.params.at("min_child_samples")).hi == 50);

  const SearchSpace ogbt = model_space(Family::OGBT);
  CHECK(ogbt.params.size() == 3);
  CHECK(std::get<IntegerParam>(ogbt.params.at("depth")).lo == 4);
  CHECK(std::get<IntegerParam>(ogbt.params.at("depth")).hi == 10);
}
