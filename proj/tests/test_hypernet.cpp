#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "imputeinr/errors.hpp"
#include "imputeinr/hypernet.hpp"
#include "imputeinr/model.hpp"
#include "imputeinr/synthetic.hpp"

using namespace imputeinr;

namespace {

EncoderBlockVars make_block(ad::Tape& tape, std::size_t d, std::size_t ff, Rng& rng, bool zero) {
  const auto m = [&](std::size_t r, std::size_t c, double scale) {
    return tape.variable(zero ? Matrix(r, c) : testing::random_matrix(r, c, rng, -scale, scale));
  };
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  EncoderBlockVars b;
  b.ln1_gamma = tape.variable(Matrix(1, d, 1.0));
  b.ln1_beta = tape.variable(Matrix(1, d));
  b.wq = m(d, d, s);
  b.bq = m(1, d, s);
  b.wk = m(d, d, s);
  b.bk = m(1, d, s);
  b.wv = m(d, d, s);
  b.bv = m(1, d, s);
  b.wo = m(d, d, s);
  b.bo = m(1, d, s);
  b.ln2_gamma = tape.variable(Matrix(1, d, 1.0));
  b.ln2_beta = tape.variable(Matrix(1, d));
  b.w1 = m(ff * d, d, s);
  b.b1 = m(1, ff * d, s);
  b.w2 = m(d, ff * d, s);
  b.b2 = m(1, d, s);
  return b;
}

void check_row_sums(const Matrix& p) {
  for (std::size_t r = 0; r < p.rows; ++r) {
    double sum = 0.0;
    for (double v : p.row(r)) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

}  // namespace

TEST_CASE("zero block weights leave the INR tokens unchanged") {
  Rng rng(1);
  ad::Tape tape;
  HyperNetConfig cfg{2, 2, 4};
  std::vector<EncoderBlockVars> blocks;
  for (int i = 0; i < 2; ++i) blocks.push_back(make_block(tape, 8, 4, rng, true));
  const Matrix inr = testing::random_matrix(3, 8, rng);
  ad::Var out = transformer_forward(tape.constant(testing::random_matrix(5, 8, rng)), tape.constant(inr), blocks, cfg);
  CHECK(out.value() == inr);
}

TEST_CASE("a single token attends to itself with probability one") {
  Rng rng(2);
  ad::Tape tape;
  const EncoderBlockVars b = make_block(tape, 8, 4, rng, false);
  std::vector<Matrix> probs;
  encoder_block(tape.constant(testing::random_matrix(1, 8, rng)), b, 2, &probs);
  REQUIRE(probs.size() == 2);
  for (const auto& p : probs) CHECK(p(0, 0) == 1.0);
}

TEST_CASE("attention rows sum to one") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    ad::Tape tape;
    HyperNetConfig cfg{3, 4, 4};
    std::vector<EncoderBlockVars> blocks;
    for (int i = 0; i < 3; ++i) blocks.push_back(make_block(tape, 16, 4, rng, false));
    AttentionTrace trace;
    transformer_forward(tape.constant(testing::random_matrix(3, 16, rng, -3, 3)),
                        tape.constant(testing::random_matrix(2, 16, rng)), blocks, cfg, &trace);
    REQUIRE(trace.probabilities.size() == 3);
    for (const auto& block : trace.probabilities) {
      REQUIRE(block.size() == 4);
      for (const auto& p : block) {
        CHECK(p.rows == 5);
        check_row_sums(p);
      }
    }
  }
}

TEST_CASE("heads must divide the model width") {
  Rng rng(4);
  ad::Tape tape;
  const EncoderBlockVars b = make_block(tape, 8, 4, rng, false);
  CHECK_THROWS(encoder_block(tape.constant(Matrix(2, 8)), b, 3));
}

TEST_CASE("positional code makes data-token order matter") {
  Rng rng(5);
  ad::Tape tape;
  HyperNetConfig cfg{1, 2, 4};
  std::vector<EncoderBlockVars> blocks{make_block(tape, 8, 4, rng, false)};
  const Matrix data = testing::random_matrix(4, 8, rng);
  Matrix shuffled = data;
  for (std::size_t c = 0; c < 8; ++c) std::swap(shuffled(0, c), shuffled(3, c));
  const Matrix inr = testing::random_matrix(2, 8, rng);
  const Matrix a = transformer_forward(tape.constant(data), tape.constant(inr), blocks, cfg).value();
  const Matrix b = transformer_forward(tape.constant(shuffled), tape.constant(inr), blocks, cfg).value();
  CHECK(a != b);

  const Matrix pe = sinusoidal_positions(4, 8);
  CHECK(pe(0, 0) == 0.0);
  CHECK(pe(0, 1) == 1.0);
  CHECK(pe(2, 0) == doctest::Approx(std::sin(2.0)).epsilon(1e-15));
}

TEST_CASE("predicted INR blocks match the closed-form census") {
  ModelConfig cfg;
  const ClusterPartition part = partition_from_assignment({0, 1, 0, 2, 1, 1, 2});
  ImputeInrModel model(cfg, 7, part, 3);
  std::size_t sum = 0;
  for (const auto& b : model.inr_layout()) sum += b.size();
  CHECK(sum == inr_total_len(7, part.group_sizes(), cfg.inr));

  Rng rng(6);
  TimeSeriesWindow w = testing::full_window(testing::random_matrix(7, 96, rng));
  const InrParams p = model.predict_inr_params(w);
  CHECK(p.trend.rows == 7);
  CHECK(p.fourier_sin.cols == 8);
  CHECK(output_group_sizes(p) == part.group_sizes());
  std::size_t flat = 0;
  for (const auto& m : flatten_inr(p, model.inr_layout())) flat += m.size();
  CHECK(flat == sum);
}

TEST_CASE("predictions are pure and conditioned on the window") {
  ModelConfig cfg;
  cfg.hypernet.n_blocks = 2;
  const ClusterPartition part = partition_from_assignment({0, 0, 1});
  ImputeInrModel model(cfg, 3, part, 7);
  Rng rng(7);
  const TimeSeriesWindow a = testing::full_window(testing::random_matrix(3, 48, rng));
  const TimeSeriesWindow b = testing::full_window(testing::random_matrix(3, 48, rng));
  CHECK(model.predict(a) == model.predict(a));
  CHECK(model.predict(a) != model.predict(b));

  ImputeInrModel twin(cfg, 3, part, 7);
  CHECK(twin.predict(a) == model.predict(a));
}

TEST_CASE("zeroed transformer severs the conditioning path") {
  ModelConfig cfg;
  cfg.hypernet.n_blocks = 2;
  ImputeInrModel model(cfg, 3, partition_from_assignment({0, 1, 1}), 8);
  ParameterStore& ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string& n = ps.name(i);
    if (n.rfind("block", 0) == 0 && n.find(".ln") == std::string::npos) ps.value(i).fill(0.0);
  }
  Rng rng(9);
  const TimeSeriesWindow a = testing::full_window(testing::random_matrix(3, 48, rng));
  const TimeSeriesWindow b = testing::full_window(testing::random_matrix(3, 48, rng));
  CHECK(model.predict(a) == model.predict(b));
}
