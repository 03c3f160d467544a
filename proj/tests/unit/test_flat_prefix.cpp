#include "pflat/flat_prefix.hpp"
#include "pflat/gradient.hpp"
#include "pflat/random.hpp"

#include "planted_task.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace pflat;

namespace {

// f(w) = sum w^2.
std::pair<double, Matrix> bowl(const Matrix& w) { return {w.squaredNorm(), 2 * w}; }

testing::PlantedTask small_task(std::uint64_t seed) {
  testing::PlantedOptions o;
  o.prompts = 0;
  o.train_size = 120;
  o.test_size = 60;
  o.train_epochs = 200;
  return testing::make_planted_task(seed, o);
}

std::vector<TokenSequence> tokens_of(const ScoringModel& model, const LabeledSet& set) {
  std::vector<TokenSequence> out;
  for (const auto& ex : set) out.push_back(model.tokenize(ex.text));
  return out;
}

}  // namespace

TEST_CASE("sam_step on closed-form objectives") {
  SamConfig cfg;
  cfg.rho = 0.1;
  cfg.learning_rate = 0.05;

  SUBCASE("1-D quadratic") {
    Matrix w(1, 1);
    w << 1.0;
    CHECK(sam_step(w, bowl, cfg)(0, 0) == doctest::Approx(0.89).epsilon(1e-14));
  }
  SUBCASE("zero gradient leaves the point unchanged") {
    const Matrix w = Matrix::Zero(2, 3);
    CHECK(sam_step(w, bowl, cfg) == w);
  }
  SUBCASE("flatness off is plain gradient descent") {
    SamConfig plain = cfg;
    plain.use_flatness = false;
    Matrix w(2, 2);
    w << 0.3, -1.2, 2.0, 0.7;
    CHECK(sam_step(w, bowl, plain) == Matrix(w - 0.05 * (2 * w)));
  }
  SUBCASE("small rho approaches plain descent linearly") {
    const TwoMinimaLandscape land;
    Matrix w(1, 2);
    w << 0.3, 0.4;
    SamConfig plain = cfg;
    plain.use_flatness = false;
    const Matrix base = sam_step(w, land, plain);
    SamConfig a = cfg, b = cfg;
    a.rho = 1e-3;
    b.rho = 1e-4;
    const double da = (sam_step(w, land, a) - base).norm();
    const double db = (sam_step(w, land, b) - base).norm();
    CHECK(db < da);
    CHECK(da / db == doctest::Approx(10.0).epsilon(0.05));
  }
  SUBCASE("reported loss and norm are at the start") {
    Matrix w(1, 2);
    w << 3.0, 4.0;
    const auto step = sam_update(w, bowl, cfg);
    CHECK(step.loss == 25.0);
    CHECK(step.grad_norm == 10.0);
  }
  SUBCASE("bad gradients") {
    Matrix w(1, 2);
    w << 1.0, 1.0;
    auto wrong_shape = [](const Matrix&) { return std::pair<double, Matrix>{0.0, Matrix::Zero(2, 2)}; };
    auto nan_grad = [](const Matrix& at) {
      Matrix g = at;
      g(0, 0) = std::nan("");
      return std::pair<double, Matrix>{0.0, g};
    };
    CHECK_ERROR_CODE(sam_step(w, wrong_shape, cfg), ErrorCode::DimensionMismatch);
    CHECK_ERROR_CODE(sam_step(w, nan_grad, cfg), ErrorCode::NonFiniteGradient);
  }
  SUBCASE("config validation") {
    SamConfig bad = cfg;
    bad.rho = 0;
    CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidConfig);
    bad.use_flatness = false;
    bad.validate();
    bad.learning_rate = 0;
    CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidConfig);
    bad = cfg;
    bad.epochs = -1;
    CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidConfig);
    bad = cfg;
    bad.prefix_len = 0;
    CHECK_ERROR_CODE(bad.validate(), ErrorCode::InvalidConfig);
  }
}

TEST_CASE("sam_update on the logistic backend matches a hand-composed step") {
  const auto task = small_task(11);
  const auto& model = task.model;
  const auto tokens = tokens_of(model, task.train);
  const auto labels = label_indices(task.train, model.verbalizer());
  SamConfig cfg;
  cfg.rho = 0.05;
  cfg.learning_rate = 1e-2;
  cfg.prefix_len = 3;
  cfg.init_scale = 0.1;
  cfg.seed = 4;
  const PrefixParameters w = initial_prefix(model, cfg);

  auto grad_fn = [&](const PrefixParameters& at) { return prefix_loss_gradient(model, tokens, labels, at); };
  const auto g0 = model.analytic_prefix_gradient(tokens, labels, w).second;
  const PrefixParameters ascent = w + cfg.rho * g0 / g0.norm();
  const PrefixParameters expected = w - cfg.learning_rate * model.analytic_prefix_gradient(tokens, labels, ascent).second;
  const PrefixParameters got = sam_step(w, grad_fn, cfg);
  CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(got.rows() == 3);
  CHECK(got.cols() == model.prefix_width());
}

TEST_CASE("prefix_tune") {
  const auto task = small_task(12);
  SamConfig cfg;
  cfg.prefix_len = 2;
  cfg.learning_rate = 1e-3;
  cfg.seed = 9;

  SUBCASE("zero epochs returns the initial prefix") {
    cfg.epochs = 0;
    const auto r = prefix_tune(task.model, task.train, cfg);
    CHECK(r.prefix == initial_prefix(task.model, cfg));
    CHECK(r.history.empty());
  }
  SUBCASE("plain descent with a small step lowers the loss every epoch") {
    cfg.use_flatness = false;
    cfg.epochs = 15;
    const auto r = prefix_tune(task.model, task.train, cfg);
    REQUIRE(r.history.size() == 15);
    for (std::size_t i = 1; i < r.history.size(); ++i) {
      CHECK(r.history[i].epoch == static_cast<int>(i));
      CHECK(r.history[i].loss < r.history[i - 1].loss + 1e-9);
    }
    CHECK(r.history.back().loss < r.history.front().loss);
  }
  SUBCASE("deterministic, including across threads") {
    cfg.epochs = 5;
    const auto a = prefix_tune(task.model, task.train, cfg);
    const auto b = prefix_tune(task.model, task.train, cfg, 4);
    CHECK(a.prefix == b.prefix);
    CHECK(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].loss == b.history[i].loss);
  }
  SUBCASE("accuracy is in range") {
    cfg.epochs = 3;
    const auto r = prefix_tune(task.model, task.train, cfg);
    const double acc = prefix_accuracy(task.model, r.prefix, task.test);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
  SUBCASE("errors") {
    CHECK_ERROR_CODE(prefix_tune(task.model, {}, cfg), ErrorCode::EmptyDataset);
    CHECK_ERROR_CODE(prefix_accuracy(task.model, initial_prefix(task.model, cfg), {}), ErrorCode::EmptyDataset);
    LabeledSet unlabeled = {{"pos1 neu2", std::nullopt, 0}};
    CHECK_ERROR_CODE(prefix_tune(task.model, unlabeled, cfg), ErrorCode::MissingLabel);
    LabeledSet odd = {{"pos1 neu2", std::string("neutral"), 0}};
    CHECK_ERROR_CODE(prefix_tune(task.model, odd, cfg), ErrorCode::UnknownLabel);
  }
}

TEST_CASE("two-minima landscape") {
  const TwoMinimaLandscape land;

  SUBCASE("minima, curvatures and basins") {
    CHECK(land.loss(-1, 0) == 0.0);
    CHECK(land.loss(1, 0) == 0.0);
    CHECK(land.gradient(-1, 0).norm() == 0.0);
    CHECK(land.gradient(1, 0).norm() == 0.0);
    CHECK(land.curvature(-1) > 35);
    CHECK(land.curvature(1) < 2);
    CHECK(land.basin_of(-1.1, 0.05) == TwoMinimaLandscape::Basin::sharp);
    CHECK(land.basin_of(0.9, -0.1) == TwoMinimaLandscape::Basin::flat);
    CHECK(land.basin_of(0.0, 0.0) == TwoMinimaLandscape::Basin::neither);
    CHECK(land.basin_of(1.0, 0.3) == TwoMinimaLandscape::Basin::neither);
  }
  SUBCASE("gradient against central differences") {
    Rng rng(5);
    const double h = 1e-6;
    for (int i = 0; i < 20; ++i) {
      const double x = std::uniform_real_distribution<double>(-1.5, 1.5)(rng);
      const double y = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
      const Eigen::Vector2d g = land.gradient(x, y);
      const double gx = (land.loss(x + h, y) - land.loss(x - h, y)) / (2 * h);
      const double gy = (land.loss(x, y + h) - land.loss(x, y - h)) / (2 * h);
      CHECK(std::abs(g(0) - gx) <= 1e-6 * (1 + std::abs(gx)));
      CHECK(std::abs(g(1) - gy) <= 1e-6 * (1 + std::abs(gy)));
    }
  }
  SUBCASE("SAM ends where random perturbations cost less") {
    SamConfig sam;
    sam.rho = 0.2;
    sam.learning_rate = 0.02;
    SamConfig plain = sam;
    plain.use_flatness = false;
    int wins = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      Rng rng(derive_seed(s, "unit-landscape", 0));
      Matrix a(1, 2), b(1, 2);
      a << 0.0, std::uniform_real_distribution<double>(-0.05, 0.05)(rng);
      b = a;
      for (int e = 0; e < 4000; ++e) {
        a = sam_step(a, land, sam);
        b = sam_step(b, land, plain);
      }
      std::normal_distribution<double> noise(0.0, 0.1);
      double la = 0, lb = 0;
      for (int k = 0; k < 500; ++k) {
        const double dx = noise(rng), dy = noise(rng);
        la += land.loss(a(0, 0) + dx, a(0, 1) + dy);
        lb += land.loss(b(0, 0) + dx, b(0, 1) + dy);
      }
      wins += la < lb;
    }
    CHECK(wins >= 9);
  }
}
