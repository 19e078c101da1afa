#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "imputeinr/errors.hpp"
#include "imputeinr/synthetic.hpp"
#include "imputeinr/training.hpp"

using namespace imputeinr;

namespace {

double brute_force_mse(const Matrix& pred, const Matrix& gt, const Matrix& miss) {
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < pred.rows; ++n)
    for (std::size_t t = 0; t < pred.cols; ++t) {
      const double d = pred(n, t) - gt(n, t);
      num += miss(n, t) * d * d;
      den += miss(n, t);
    }
  return num / den;
}

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.encoder.d_model = 16;
  cfg.encoder.channels_per_scale = 4;
  cfg.hypernet.n_blocks = 1;
  cfg.hypernet.n_heads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("masked_mse hand example") {
  const Matrix gt = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix pred = Matrix::from_rows({{1, 0}, {0, 4}});
  const LossReport r = masked_mse(pred, gt, Matrix::from_rows({{0, 1}, {1, 0}}));
  CHECK(r.loss == 6.5);
  CHECK(r.count == 2);
  CHECK(masked_mse(gt, gt, Matrix(2, 2, 1.0)).loss == 0.0);
  CHECK_THROWS_AS(masked_mse(pred, gt, Matrix(2, 2)), EmptyMaskSet);
}

TEST_CASE("masked_mse equals a brute-force double loop") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix pred = testing::random_matrix(7, 13, rng, -5, 5);
    const Matrix gt = testing::random_matrix(7, 13, rng, -5, 5);
    Matrix miss(7, 13);
    for (double& m : miss.data) m = rng.uniform() < 0.4 ? 1.0 : 0.0;
    miss(trial % 7, trial % 13) = 1.0;
    CHECK(std::abs(masked_mse(pred, gt, miss).loss - brute_force_mse(pred, gt, miss)) <= 1e-12);
  }
}

TEST_CASE("masked_mse ignores unscored positions") {
  Rng rng(2);
  const Matrix gt = testing::random_matrix(4, 9, rng);
  Matrix pred = testing::random_matrix(4, 9, rng);
  Matrix miss(4, 9);
  for (std::size_t i = 0; i < miss.size(); i += 2) miss.data[i] = 1.0;
  const double before = masked_mse(pred, gt, miss).loss;
  for (std::size_t i = 1; i < pred.size(); i += 2) pred.data[i] += 1e6;
  CHECK(masked_mse(pred, gt, miss).loss == before);
}

TEST_CASE("adam limit cases") {
  TrainConfig cfg;
  std::vector<Matrix> w{Matrix::from_rows({{1.0, -2.0}})};
  const std::vector<Matrix> zero{Matrix(1, 2)};
  AdamState s;
  adam_step(w, zero, s, cfg);
  CHECK(w[0] == Matrix::from_rows({{1.0, -2.0}}));

  TrainConfig frozen;
  frozen.lr = 0.0;
  AdamState s2;
  Rng rng(3);
  for (int i = 0; i < 10; ++i) adam_step(w, std::vector<Matrix>{testing::random_matrix(1, 2, rng)}, s2, frozen);
  CHECK(w[0] == Matrix::from_rows({{1.0, -2.0}}));
}

TEST_CASE("adam first step matches the bias-corrected formula") {
  TrainConfig cfg;
  for (double g : {0.5, -3.0, 1e-9}) {
    std::vector<Matrix> w{Matrix(1, 1, 2.0)};
    AdamState s;
    adam_step(w, std::vector<Matrix>{Matrix(1, 1, g)}, s, cfg);
    const double m_hat = ((1 - cfg.beta1) * g) / (1 - cfg.beta1);
    const double v_hat = ((1 - cfg.beta2) * g * g) / (1 - cfg.beta2);
    CHECK(w[0](0, 0) == doctest::Approx(2.0 - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps)).epsilon(1e-14));
  }
}

TEST_CASE("adam with a constant gradient moves by lr per step") {
  TrainConfig cfg;
  std::vector<Matrix> w{Matrix(1, 1, 0.0)};
  AdamState s;
  double prev = 0.0, last_step = 0.0;
  for (int i = 0; i < 2000; ++i) {
    adam_step(w, std::vector<Matrix>{Matrix(1, 1, 0.7)}, s, cfg);
    last_step = prev - w[0](0, 0);
    prev = w[0](0, 0);
  }
  CHECK(last_step == doctest::Approx(cfg.lr).epsilon(1e-6));
}

TEST_CASE("global norm clipping") {
  std::vector<Matrix> g{Matrix::from_rows({{3.0}}), Matrix::from_rows({{4.0}})};
  CHECK(clip_global_norm(g, 1.0) == 5.0);
  CHECK(global_norm(g) == doctest::Approx(1.0).epsilon(1e-15));
  std::vector<Matrix> small{Matrix::from_rows({{0.3}})};
  clip_global_norm(small, 1.0);
  CHECK(small[0](0, 0) == 0.3);
}

TEST_CASE("full-pipeline gradients match finite differences") {
  const GradCheckFixture fx = tiny_gradcheck_fixture(0);
  CHECK(fx.input.n_vars() == 4);
  CHECK(fx.input.length() == 16);
  ImputeInrModel model(fx.config, 4, fx.partition, 0);
  const GradCheckResult r = gradient_check(model, fx.input, fx.target, fx.miss);
  CHECK(r.entries.size() == model.params().size());
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("weights that cannot reach the scored cells get exactly zero gradient") {
  const GradCheckFixture fx = tiny_gradcheck_fixture(1);
  ImputeInrModel model(fx.config, 4, fx.partition, 1);
  // Score only group 0 (variables 0 and 2); group 1's head cannot affect the loss.
  Matrix miss = fx.miss;
  for (std::size_t t = 0; t < miss.cols; ++t) miss(1, t) = miss(3, t) = 0.0;
  miss(0, 0) = 1.0;
  std::vector<Matrix> grads;
  model.loss_and_gradients(fx.input, fx.target, miss, &grads);
  const ParameterStore& ps = model.params();
  bool saw = false;
  for (std::size_t i = 0; i < ps.size(); ++i)
    if (ps.name(i).rfind("proj.group1", 0) == 0) {
      saw = true;
      for (double g : grads[i].data) CHECK(g == 0.0);
    }
  CHECK(saw);
}

TEST_CASE("training loop") {
  const auto series = gen_trend_sinusoid(3).window;
  const auto windows = make_windows(series, 48, 16);
  const auto prepared = prepare_windows(windows);
  const ClusterPartition part = partition_from_assignment({0, 1, 0, 1, 0, 1});
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.seed = 4;

  SUBCASE("zero epochs keep the initialization") {
    ImputeInrModel model(small_config(), 6, part, 5);
    const auto init = model.params().values();
    cfg.epochs = 0;
    CHECK(train(model, prepared, cfg).curve.empty());
    CHECK(model.params().values() == init);
  }
  SUBCASE("loss decreases and runs are reproducible") {
    cfg.epochs = 40;
    ImputeInrModel a(small_config(), 6, part, 5);
    ImputeInrModel b(small_config(), 6, part, 5);
    std::size_t callbacks = 0;
    const TrainResult ra = train(a, prepared, cfg, [&](const EpochStats&) { ++callbacks; });
    const TrainResult rb = train(b, prepared, cfg);
    CHECK(callbacks == 40);
    REQUIRE(ra.curve.size() == 40);
    CHECK(ra.curve.back().mean_loss < ra.curve.front().mean_loss);
    CHECK(a.params().values() == b.params().values());
    for (std::size_t e = 0; e < 40; ++e) CHECK(ra.curve[e].mean_loss == rb.curve[e].mean_loss);
  }
  SUBCASE("non-finite weights abort with the epoch") {
    ImputeInrModel model(small_config(), 6, part, 5);
    model.params().value(0).data[0] = std::numeric_limits<double>::quiet_NaN();
    cfg.epochs = 3;
    try {
      train(model, prepared, cfg);
      FAIL("expected NumericsError");
    } catch (const NumericsError& e) {
      CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
  }
  SUBCASE("config validation") {
    cfg.mask_rate = 1.0;
    ImputeInrModel model(small_config(), 6, part, 5);
    CHECK_THROWS_AS(train(model, prepared, cfg), ConfigError);
  }
}

TEST_CASE("loss curve CSV") {
  testing::TempDir dir;
  TrainResult r;
  r.curve = {{0, 1.5, 0.25}, {1, 0.75, 0.125}};
  write_loss_curve_csv((dir / "loss.csv").string(), r);
  CHECK(testing::read_file(dir / "loss.csv") == "epoch,mean_loss,grad_norm\n0,1.5,0.25\n1,0.75,0.125\n");
}
