#include "pflat/evaluation.hpp"
#include "pflat/random.hpp"
#include "pflat/selection.hpp"

#include "planted_task.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>

using namespace pflat;

namespace {

PromptPool pool_of(std::initializer_list<const char*> ids) {
  PromptPool pool;
  for (const char* id : ids) pool.prompts.push_back({id, "instruction " + std::string(id), {}});
  return pool;
}

}  // namespace

TEST_CASE("rank_prompts") {
  CHECK(rank_prompts({{"a", 0.1}, {"b", 0.2}}, Direction::lower_better) == std::vector<std::string>{"a", "b"});
  CHECK(rank_prompts({{"a", 0.1}, {"b", 0.2}}, Direction::higher_better) == std::vector<std::string>{"b", "a"});
  CHECK(rank_prompts({{"b", 0.5}, {"a", 0.5}}, Direction::lower_better) == std::vector<std::string>{"a", "b"});
  CHECK(rank_prompts({{"b", 0.5}, {"a", 0.5}}, Direction::higher_better) == std::vector<std::string>{"a", "b"});

  SUBCASE("50 random scores against a reference sort") {
    Rng rng(50);
    ScoreMap scores;
    std::vector<std::pair<double, std::string>> reference;
    for (int i = 0; i < 50; ++i) {
      // Rounded so some scores tie.
      const double s = std::round(std::uniform_real_distribution<double>(0, 20)(rng));
      const std::string id = "id" + std::to_string(1000 + i);
      scores[id] = s;
      reference.emplace_back(s, id);
    }
    std::sort(reference.begin(), reference.end());
    std::vector<std::string> expected;
    for (const auto& [s, id] : reference) expected.push_back(id);
    CHECK(rank_prompts(scores, Direction::lower_better) == expected);
  }
  SUBCASE("errors") {
    CHECK_ERROR_CODE(rank_prompts({}, Direction::lower_better), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(rank_prompts({{"a", std::nan("")}, {"b", 1}}, Direction::lower_better), ErrorCode::NonFiniteScore);
    CHECK_ERROR_CODE(rank_prompts({{"a", INFINITY}, {"b", 1}}, Direction::lower_better), ErrorCode::NonFiniteScore);
  }
}

TEST_CASE("select_best") {
  const PromptPool pool = pool_of({"p1", "p2", "p3"});
  CHECK(select_best(pool, {{"p1", 3}, {"p2", 0.1}, {"p3", 2}}, Direction::lower_better) == "p2");
  CHECK_ERROR_CODE(select_best(pool, {{"p1", 3}, {"p2", 0.1}}, Direction::lower_better), ErrorCode::InvalidArgument);

  SUBCASE("alpha 0 matches the base metric, including monotone transforms") {
    const ScoreMap mi = {{"p1", 0.3}, {"p2", 0.6}, {"p3", 0.6}};
    const ScoreMap flat = {{"p1", 0.0}, {"p2", 9.0}, {"p3", 1.0}};
    const auto base_choice = select_best(pool, mi, Direction::higher_better);
    CHECK(select_best(pool, combine_scores(mi, Direction::higher_better, flat, 0.0), Direction::lower_better) ==
          base_choice);
    ScoreMap transformed;
    for (const auto& [id, s] : mi) transformed[id] = std::exp(3 * s) + 1;
    CHECK(select_best(pool, combine_scores(transformed, Direction::higher_better, flat, 0.0),
                      Direction::lower_better) == base_choice);
    CHECK(rank_prompts(combine_scores(mi, Direction::higher_better, flat, 0.0), Direction::lower_better) ==
          rank_prompts(mi, Direction::higher_better));
  }
  SUBCASE("combine_scores needs matching ids") {
    CHECK_ERROR_CODE(combine_scores({{"p1", 1}}, Direction::lower_better, {{"p2", 1}}, 1.0),
                     ErrorCode::InvalidArgument);
  }
}

TEST_CASE("tune_alpha_from_scores") {
  const ScoreMap loss = {{"p1", 0.30}, {"p2", 0.35}, {"p3", 0.50}};
  const ScoreMap flat = {{"p1", 0.20}, {"p2", 0.01}, {"p3", 0.00}};
  const ScoreMap acc = {{"p1", 0.60}, {"p2", 0.90}, {"p3", 0.70}};

  SUBCASE("singleton grid") {
    const auto t = tune_alpha_from_scores(loss, Direction::lower_better, flat, acc, {{0.5}});
    CHECK(t.alpha == 0.5);
    CHECK(t.trials.size() == 1);
  }
  SUBCASE("ties go to the smallest alpha") {
    const auto t = tune_alpha_from_scores(loss, Direction::lower_better, flat, acc, {{0, 0.01}});
    CHECK(t.trials[0].selected == t.trials[1].selected);
    CHECK(t.alpha == 0);
  }
  SUBCASE("flatness correction picks the better prompt") {
    const AlphaGrid grid;
    const auto t = tune_alpha_from_scores(loss, Direction::lower_better, flat, acc, grid);
    CHECK(t.alpha > 0);
    CHECK(t.dev_accuracy == 0.90);
    // Exhaustive re-evaluation of the grid.
    double best = -1;
    for (double a : grid.values) {
      best = std::max(best, acc.at(select_best(pool_of({"p1", "p2", "p3"}),
                                               combine_scores(loss, Direction::lower_better, flat, a),
                                               Direction::lower_better)));
    }
    CHECK(t.dev_accuracy == best);
    CHECK(t.dev_accuracy >= t.trials[0].dev_accuracy);
  }
  SUBCASE("grid checks") {
    CHECK_ERROR_CODE(tune_alpha_from_scores(loss, Direction::lower_better, flat, acc, {{}}), ErrorCode::EmptyGrid);
    CHECK_ERROR_CODE(tune_alpha_from_scores(loss, Direction::lower_better, flat, acc, {{1, 0.5}}),
                     ErrorCode::InvalidConfig);
    CHECK_ERROR_CODE(tune_alpha_from_scores(loss, Direction::lower_better, flat, acc, {{-1, 0.5}}),
                     ErrorCode::InvalidConfig);
  }
}

TEST_CASE("tune_alpha on a planted pool") {
  testing::PlantedOptions o;
  o.prompts = 6;
  o.train_epochs = 300;
  const auto task = testing::make_planted_task(3, o);
  TuneOptions options;
  options.grid = {{0, 1, 10}};
  options.perturbation = {5, 1e-4, 3};
  const auto t = tune_alpha(task.model, task.pool, task.dev, options);
  REQUIRE(t.trials.size() == 3);
  double best = 0;
  for (const auto& trial : t.trials) {
    CHECK(trial.dev_accuracy == accuracy(task.model, task.pool.find(trial.selected), task.dev));
    best = std::max(best, trial.dev_accuracy);
  }
  CHECK(t.dev_accuracy == best);
  CHECK(tune_alpha(task.model, task.pool, task.dev, options).alpha == t.alpha);

  LabeledSet negatives_only;
  for (const auto& ex : task.dev) {
    if (*ex.label == "negative") negatives_only.push_back(ex);
  }
  CHECK_ERROR_CODE(tune_alpha(task.model, task.pool, negatives_only, options), ErrorCode::MissingLabel);
}
