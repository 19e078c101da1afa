#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "imputeinr/encoder.hpp"
#include "imputeinr/errors.hpp"

using namespace imputeinr;

namespace {

std::vector<ConvScaleWeights> random_scales(const EncoderConfig& cfg, std::size_t c_in, Rng& rng) {
  std::vector<ConvScaleWeights> w;
  for (std::size_t k : cfg.kernel_sizes)
    w.push_back({testing::random_matrix(cfg.channels_per_scale, c_in * k, rng),
                 testing::random_matrix(cfg.channels_per_scale, 1, rng)});
  return w;
}

}  // namespace

TEST_CASE("encoder input stacks values over mask") {
  const Matrix v = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix m = Matrix::from_rows({{1, 0}, {0, 1}});
  const Matrix x = encoder_input(v, m);
  CHECK(x.rows == 4);
  CHECK(x.data == std::vector<double>{1, 2, 3, 4, 1, 0, 0, 1});
}

TEST_CASE("multiscale conv shapes and zero weights") {
  EncoderConfig cfg;
  Rng rng(1);
  const Matrix x = testing::random_matrix(14, 96, rng);
  const Matrix y = multiscale_conv(x, cfg, random_scales(cfg, 14, rng));
  CHECK(y.rows == 48);
  CHECK(y.cols == 96);

  std::vector<ConvScaleWeights> zero;
  for (std::size_t k : cfg.kernel_sizes) zero.push_back({Matrix(16, 14 * k), Matrix(16, 1)});
  for (double v : multiscale_conv(x, cfg, zero).data) CHECK(v == 0.0);

  auto bad = random_scales(cfg, 14, rng);
  bad[1].weight = Matrix(16, 13 * 5);
  CHECK_THROWS_AS(multiscale_conv(x, cfg, bad), ShapeError);
  bad.pop_back();
  CHECK_THROWS_AS(multiscale_conv(x, cfg, bad), ShapeError);
}

TEST_CASE("multiscale conv concatenates scales in kernel order") {
  EncoderConfig cfg;
  cfg.kernel_sizes = {3};
  cfg.channels_per_scale = 1;
  const Matrix y = multiscale_conv(Matrix(1, 5, 1.0), cfg, std::vector<ConvScaleWeights>{{Matrix(1, 3, 1.0), Matrix(1, 1)}});
  CHECK(y.data == std::vector<double>{2, 3, 3, 3, 2});

  cfg.kernel_sizes = {3, 5};
  const std::vector<ConvScaleWeights> w{{Matrix(1, 3, 1.0), Matrix(1, 1)}, {Matrix(1, 5, 1.0), Matrix(1, 1)}};
  const Matrix z = multiscale_conv(Matrix(1, 5, 1.0), cfg, w);
  CHECK(std::vector<double>(z.data.begin(), z.data.begin() + 5) == std::vector<double>{2, 3, 3, 3, 2});
  CHECK(std::vector<double>(z.data.begin() + 5, z.data.end()) == std::vector<double>{3, 4, 5, 4, 3});
}

TEST_CASE("multiscale conv is linear without bias") {
  EncoderConfig cfg;
  Rng rng(2);
  auto w = random_scales(cfg, 6, rng);
  for (auto& s : w) s.bias.fill(0.0);
  const Matrix x = testing::random_matrix(6, 32, rng);
  Matrix ax = x;
  for (double& v : ax.data) v *= -1.75;
  const Matrix y = multiscale_conv(x, cfg, w);
  const Matrix ay = multiscale_conv(ax, cfg, w);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(ay.data[i] == doctest::Approx(-1.75 * y.data[i]).epsilon(1e-12));
}

TEST_CASE("multiscale conv is local") {
  EncoderConfig cfg;
  Rng rng(3);
  const auto w = random_scales(cfg, 4, rng);
  const Matrix x = testing::random_matrix(4, 40, rng);
  Matrix x2 = x;
  const std::size_t col = 17;
  for (std::size_t c = 0; c < 4; ++c) x2(c, col) += 1.0;
  const Matrix y = multiscale_conv(x, cfg, w);
  const Matrix y2 = multiscale_conv(x2, cfg, w);
  const std::size_t reach = 7 / 2;
  for (std::size_t r = 0; r < y.rows; ++r)
    for (std::size_t t = 0; t < y.cols; ++t)
      if (t + reach < col || t > col + reach) CHECK(y(r, t) == y2(r, t));
}

TEST_CASE("patchify_embed") {
  EncoderConfig cfg;
  Rng rng(4);
  const Matrix f = testing::random_matrix(48, 96, rng);
  const Matrix w = testing::random_matrix(64, 48 * 8, rng);
  const Matrix b = testing::random_matrix(1, 64, rng);
  CHECK(patchify_embed(f, cfg, w, b).tokens.rows == 12);

  const TokenSequence zero = patchify_embed(f, cfg, Matrix(64, 48 * 8), b);
  for (std::size_t r = 0; r < zero.tokens.rows; ++r)
    for (std::size_t c = 0; c < 64; ++c) CHECK(zero.tokens(r, c) == b(0, c));

  EncoderConfig one = cfg;
  one.patch_len = 96;
  CHECK(patchify_embed(f, one, testing::random_matrix(64, 48 * 96, rng), b).tokens.rows == 1);

  EncoderConfig bad = cfg;
  bad.patch_len = 7;
  CHECK_THROWS_AS(patchify_embed(f, bad, Matrix(64, 48 * 7), b), PatchError);
  CHECK_THROWS_AS(bad.validate(96), PatchError);
  EncoderConfig even = cfg;
  even.kernel_sizes = {3, 4};
  CHECK_THROWS_AS(even.validate(96), ConfigError);
}
