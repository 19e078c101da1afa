#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "imputeinr/clustering.hpp"
#include "imputeinr/model.hpp"
#include "imputeinr/timeseries.hpp"

namespace imputeinr {

// ---- two-distribution fixture --------------------------------------------

inline constexpr std::size_t kTwoDistributionLength = 64;
/// Correlation between the two members of a pair under the shared-latent construction.
inline constexpr double kPairCorrelation = 0.95;

/// Four fully observed variables: v1, v2 ~ N(0, 1) and v3, v4 ~ N(1, 3) marginally. Members of
/// a pair share a latent draw (plus independent noise) so the pairs are strongly correlated.
TimeSeriesWindow gen_two_distribution(std::uint64_t seed,
                                      std::size_t length = kTwoDistributionLength);

// ---- trend + sinusoid fixture ---------------------------------------------

struct TrendSinusoidCoeffs {
  std::array<double, 4> trend{};  // c0 + c1 t + c2 t² + c3 t³
  std::array<int, 2> freqs{};     // integer cycles per window
  std::array<double, 2> amp_sin{};
  std::array<double, 2> amp_cos{};

  double eval(double t) const;
};

struct TrendSinusoidSeries {
  TimeSeriesWindow window;
  std::vector<TrendSinusoidCoeffs> coeffs;  // per variable
  std::vector<std::size_t> family;          // generating family per variable
};

inline constexpr std::size_t kTrendSinusoidVars = 6;
inline constexpr std::size_t kTrendSinusoidLength = 96;
inline constexpr double kTrendSinusoidNoise = 0.05;

/// N=6, T=96 series of cubic trend + two integer-frequency sinusoids + noise. Variables
/// alternate between two families (even / odd index) that share frequencies and carry
/// correlated coefficients, so clustering has structure to find.
TrendSinusoidSeries gen_trend_sinusoid(std::uint64_t seed, double noise = kTrendSinusoidNoise,
                                       std::size_t length = kTrendSinusoidLength);

// ---- representational-capability variants ----------------------------------

enum class VariantTag { A, B, C, D };

VariantTag parse_variant_tag(char tag);

struct ModelVariant {
  VariantTag tag;
  InrConfig inr;
  ClusterPartition partition;  // groups of the residual MLP
};

/// A: single MLP, original order. B: single MLP, clustered order. C: grouped residual with the
/// given (correct) partition. D: grouped residual with pairs crossed ({v1,v3},{v2,v4}).
ModelVariant model_variant(VariantTag tag, const ClusterPartition& partition);

struct FitResult {
  std::vector<double> loss_curve;  // full-batch MSE before each step, then the final value
  double final_mse = 0.0;
};

inline constexpr std::size_t kVariantHidden = 32;
inline constexpr std::size_t kVariantFitSteps = 500;
inline constexpr double kVariantFitLr = 1e-3;

/// Fits the INR function directly (its parameters are the learnable leaves) to every cell of
/// a fully observed window with full-batch ADAM.
FitResult fit_inr_direct(const TimeSeriesWindow& data, const ModelVariant& variant,
                         std::size_t steps, double lr, std::uint64_t seed);

}  // namespace imputeinr
