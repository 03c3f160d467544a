#include "pflat/evaluation.hpp"
#include "pflat/random.hpp"

#include "planted_task.hpp"
#include "test_models.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <map>

using namespace pflat;
using pflat::testing::input_of;
using pflat::testing::TextFunctionModel;

namespace {

double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

MetricReport report_with_loss(const std::string& id, double loss, double flat) {
  MetricReport m;
  m.prompt_id = id;
  m.loss = loss;
  m.pflat = flat;
  return m;
}

EvaluationReport crafted(const std::vector<double>& acc, const std::vector<double>& loss) {
  EvaluationReport r;
  r.config.metrics = {"loss", "pflat", "loss+pflat"};
  r.config.alpha = 0.5;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const std::string id = "p" + std::to_string(10 + i);
    r.per_prompt.push_back({id, acc[i], report_with_loss(id, loss[i], 0.01 * static_cast<double>(i % 3))});
  }
  summarize(r);
  return r;
}

}  // namespace

TEST_CASE("accuracy") {
  const Verbalizer v({{"a", "yes"}, {"b", "no"}});
  const PromptCandidate p{"p", "say", {}};
  LabeledSet test;
  std::map<std::string, int> predicted;
  Rng rng(20);
  int correct = 0;
  for (int i = 0; i < 20; ++i) {
    const std::string x = "x" + std::to_string(i);
    const int gold = std::uniform_int_distribution<int>(0, 1)(rng);
    const int guess = std::uniform_int_distribution<int>(0, 1)(rng);
    test.push_back({x, v.label(static_cast<std::size_t>(gold)), 0});
    predicted[x] = guess;
    correct += gold == guess;
  }
  auto model_for = [&](std::function<int(const std::string&)> choose) {
    return TextFunctionModel(v, [choose](const std::string& rendered) {
      Vector q(2);
      q << 0.3, 0.3;
      q(choose(input_of(rendered))) = 0.7;
      return Vector(q / q.sum());
    });
  };
  const auto gold = label_indices(test, v);
  std::map<std::string, int> gold_of;
  for (std::size_t i = 0; i < test.size(); ++i) gold_of[test[i].text] = static_cast<int>(gold[i]);

  CHECK(accuracy(model_for([&](const std::string& x) { return gold_of.at(x); }), p, test) == 1.0);
  CHECK(accuracy(model_for([&](const std::string& x) { return 1 - gold_of.at(x); }), p, test) == 0.0);
  CHECK(accuracy(model_for([&](const std::string& x) { return predicted.at(x); }), p, test) == correct / 20.0);
  CHECK_ERROR_CODE(accuracy(model_for([](const std::string&) { return 0; }), p, {}), ErrorCode::EmptyDataset);
}

TEST_CASE("pearson and spearman") {
  const std::vector<double> x = {1, 2, 3, 4, 5.5};
  CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spearman(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  const std::vector<double> reversed(x.rbegin(), x.rend());
  CHECK(spearman(x, reversed) == doctest::Approx(-1.0).epsilon(1e-15));

  SUBCASE("30 random pairs against the textbook formula") {
    Rng rng(30);
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
      a[static_cast<std::size_t>(i)] = std::uniform_real_distribution<double>(0, 1)(rng);
      b[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] + std::uniform_real_distribution<double>(0, 1)(rng);
    }
    CHECK(std::abs(pearson(a, b) - textbook_pearson(a, b)) <= 1e-12);
    CHECK(pearson(a, b) == pearson(b, a));
    std::vector<double> affine(a.size()), monotone(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      affine[i] = 3 * a[i] + 2;
      monotone[i] = std::exp(5 * a[i]);
    }
    CHECK(std::abs(pearson(affine, b) - pearson(a, b)) <= 1e-12);
    CHECK(std::abs(spearman(monotone, b) - spearman(a, b)) <= 1e-12);
  }
  SUBCASE("ties use average ranks") {
    const Vector v = (Vector(5) << 3, 1, 3, 2, 3).finished();
    const Vector r = average_ranks(v);
    CHECK(r == (Vector(5) << 4, 1, 4, 2, 4).finished());
  }
  SUBCASE("errors") {
    CHECK_ERROR_CODE(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), ErrorCode::DegenerateInput);
    CHECK_ERROR_CODE(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}), ErrorCode::DegenerateInput);
    CHECK_ERROR_CODE(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ErrorCode::DegenerateInput);
    CHECK_ERROR_CODE(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), ErrorCode::LengthMismatch);
  }
}

TEST_CASE("ndcg_at_k") {
  const std::vector<double> ideal = {0.9, 0.6, 0.3};
  CHECK(ndcg_at_k(ideal, ideal, 3) == 1.0);
  const std::vector<double> flat = {0.5, 0.5, 0.5};
  CHECK(ndcg_at_k(flat, flat, 2) == 1.0);

  const std::vector<double> ranked = {0.6, 0.9, 0.3};
  const double dcg = 0.6 + 0.9 / std::log2(3.0) + 0.3 / 2;
  const double idcg = 0.9 + 0.6 / std::log2(3.0) + 0.3 / 2;
  CHECK(std::abs(ndcg_at_k(ranked, ideal, 3) - dcg / idcg) <= 1e-12);
  CHECK(std::abs(ndcg_at_k(ranked, ideal, 1) - 0.6 / 0.9) <= 1e-12);

  const std::vector<double> zeros = {0, 0, 0};
  CHECK(ndcg_at_k(zeros, zeros, 3) == 0.0);
  CHECK_ERROR_CODE(ndcg_at_k(ranked, ideal, 0), ErrorCode::BadK);
  CHECK_ERROR_CODE(ndcg_at_k(ranked, ideal, 4), ErrorCode::BadK);
  const std::vector<double> negative = {0.6, -0.1, 0.3};
  CHECK_ERROR_CODE(ndcg_at_k(negative, ideal, 2), ErrorCode::NegativeRelevance);
  const std::vector<double> shorter = {0.9, 0.6};
  CHECK_ERROR_CODE(ndcg_at_k(ranked, shorter, 2), ErrorCode::LengthMismatch);
}

TEST_CASE("rate") {
  CHECK(rate(0.8, 0.8) == 1.0);
  CHECK(rate(0.45, 0.9) == 0.5);
  CHECK_ERROR_CODE(rate(0.1, 0.0), ErrorCode::ZeroBest);
  CHECK_ERROR_CODE(rate(0.95, 0.9), ErrorCode::SelectedExceedsBest);
  CHECK_ERROR_CODE(rate(-0.1, 0.9), ErrorCode::InvalidArgument);
}

TEST_CASE("metric specs") {
  CHECK(parse_metric_spec("pflat") == MetricSpec{std::nullopt, true});
  CHECK(parse_metric_spec("mi+pflat") == MetricSpec{BaseMetric::mi, true});
  CHECK(parse_metric_spec("sen") == MetricSpec{BaseMetric::sen, false});
  CHECK(parse_metric_spec("loss+pflat").name() == "loss+pflat");
  CHECK_ERROR_CODE(parse_metric_spec("acc"), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(parse_metric_spec("pflat+loss"), ErrorCode::InvalidArgument);
}

TEST_CASE("summarize") {
  SUBCASE("a metric that tracks accuracy exactly") {
    const std::vector<double> acc = {0.5, 0.9, 0.7, 0.6};
    std::vector<double> loss;
    for (double a : acc) loss.push_back(1 - a);
    const auto r = crafted(acc, loss);
    CHECK(*r.correlations.at("loss").pearson == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*r.correlations.at("loss").spearman == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.ranking.at("loss").ndcg1 == 1.0);
    CHECK(r.ranking.at("loss").ndcg3 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*r.ranking.at("loss").rate == 1.0);
    CHECK(r.ranking.at("loss").selected == "p11");
  }
  SUBCASE("an unrelated noisy metric") {
    Rng rng(77);
    std::vector<double> acc, loss;
    for (int i = 0; i < 60; ++i) {
      acc.push_back(std::uniform_real_distribution<double>(0.4, 0.9)(rng));
      loss.push_back(0.7 + std::normal_distribution<double>(0, 0.05)(rng));
    }
    const auto r = crafted(acc, loss);
    CHECK(std::abs(*r.correlations.at("loss").pearson) < 0.3);
    CHECK(r.ranking.size() == 3);
    CHECK(r.correlations.size() == 3);
  }
  SUBCASE("rate and ndcg recomputed from the rows") {
    const std::vector<double> acc = {0.5, 0.9, 0.7, 0.6};
    const std::vector<double> loss = {0.2, 0.4, 0.3, 0.1};
    const auto r = crafted(acc, loss);
    // Ranking by loss: p13 (0.6), p10 (0.5), p12 (0.7), p11 (0.9).
    CHECK(r.ranking.at("loss").selected == "p13");
    CHECK(*r.ranking.at("loss").rate == 0.6 / 0.9);
    const double dcg = 0.6 + 0.5 / std::log2(3.0) + 0.7 / 2;
    const double idcg = 0.9 + 0.7 / std::log2(3.0) + 0.6 / 2;
    CHECK(std::abs(r.ranking.at("loss").ndcg3 - dcg / idcg) <= 1e-12);
  }
  SUBCASE("degenerate inputs become nulls with reasons") {
    const auto r = crafted({0.5, 0.5, 0.5}, {0.1, 0.2, 0.3});
    const auto& c = r.correlations.at("loss");
    CHECK(!c.pearson);
    CHECK(!c.spearman);
    CHECK(c.reason);
    const auto z = crafted({0.0, 0.0, 0.0}, {0.1, 0.2, 0.3});
    CHECK(!z.ranking.at("loss").rate);
    CHECK(z.ranking.at("loss").reason);
  }
}

TEST_CASE("correlation_study and sweep on a planted pool") {
  testing::PlantedOptions o;
  o.prompts = 5;
  o.test_size = 80;
  o.train_epochs = 300;
  const auto task = testing::make_planted_task(5, o);
  StudyConfig cfg;
  cfg.perturbation = {5, 1e-4, 7};
  cfg.sensitivity = {4, 4, {EditKind::drop_token, EditKind::swap_adjacent}, 7};
  cfg.alpha = 2.0;
  const auto report = correlation_study(task.model, task.pool, task.test, cfg);

  SUBCASE("fields match a recomputation") {
    REQUIRE(report.per_prompt.size() == 5);
    ScoreOptions options;
    options.perturbation = cfg.perturbation;
    options.sensitivity = cfg.sensitivity;
    std::vector<double> acc, goodness;
    for (const auto& row : report.per_prompt) {
      const auto& p = task.pool.find(row.prompt_id);
      CHECK(row.accuracy == accuracy(task.model, p, task.test));
      CHECK(row.metrics == score_prompt(task.model, p, task.test, inputs_of(task.test), options));
      acc.push_back(row.accuracy);
      goodness.push_back(-(*row.metrics.loss + 2.0 * *row.metrics.pflat));
    }
    const auto& c = report.correlations.at("loss+pflat");
    if (c.pearson) CHECK(std::abs(*c.pearson - textbook_pearson(goodness, acc)) <= 1e-12);
    EvaluationReport copy = report;
    summarize(copy);
    CHECK(copy == report);
  }
  SUBCASE("selection matches an exhaustive argmin") {
    for (const auto& name : cfg.metrics) {
      const auto spec = parse_metric_spec(name);
      std::string best;
      double best_score = INFINITY;
      for (const auto& row : report.per_prompt) {
        const double s = selection_score(row.metrics, spec, cfg.alpha);
        if (s < best_score) {
          best_score = s;
          best = row.prompt_id;
        }
      }
      CHECK(report.ranking.at(name).selected == best);
    }
  }
  SUBCASE("thread count does not change the report") {
    StudyConfig threaded = cfg;
    threaded.threads = 4;
    const auto again = correlation_study(task.model, task.pool, task.test, threaded);
    CHECK(again.per_prompt == report.per_prompt);
    CHECK(again.correlations == report.correlations);
    CHECK(again.ranking == report.ranking);
  }
  SUBCASE("a single-cell sweep equals a direct study") {
    const auto s = sweep(task.model, task.pool, task.test, cfg, {SweepVariable::sigma2, {1e-4}, 1});
    REQUIRE(s.cells.size() == 1);
    CHECK(s.cells[0] == report);
    CHECK(s.rows[0].value == 1e-4);
  }
  SUBCASE("pFlat spread across repeats shrinks with n_samples") {
    StudyConfig flat_only = cfg;
    flat_only.metrics = {"pflat"};
    const auto s = sweep(task.model, task.pool, task.test, flat_only, {SweepVariable::n_samples, {1, 5, 50}, 20});
    REQUIRE(s.rows.size() == 60);
    std::vector<double> spread;
    for (int v = 0; v < 3; ++v) {
      double mean = 0, var = 0;
      for (int r = 0; r < 20; ++r) mean += *s.rows[static_cast<std::size_t>(v * 20 + r)].mean_pflat / 20;
      for (int r = 0; r < 20; ++r) {
        const double d = *s.rows[static_cast<std::size_t>(v * 20 + r)].mean_pflat - mean;
        var += d * d / 19;
      }
      spread.push_back(std::sqrt(var));
    }
    CHECK(spread[1] <= spread[0]);
    CHECK(spread[2] <= spread[1]);
  }
  SUBCASE("errors") {
    CHECK_ERROR_CODE(sweep(task.model, task.pool, task.test, cfg, {SweepVariable::sigma2, {1e-2, 1e-4}, 1}),
                     ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(sweep(task.model, task.pool, task.test, cfg, {SweepVariable::n_samples, {1.5}, 1}),
                     ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(sweep(task.model, task.pool, task.test, cfg, {SweepVariable::sigma2, {1e-4}, 0}),
                     ErrorCode::InvalidConfig);
    PromptPool two = task.pool;
    two.prompts.resize(2);
    CHECK_ERROR_CODE(correlation_study(task.model, two, task.test, cfg), ErrorCode::InvalidArgument);
  }
}
