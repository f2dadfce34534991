#include "psymeter/standardization.hpp"

#include "psymeter/error.hpp"
#include "psymeter/stats.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace psymeter {

NormReference NormReference::from_sample(std::span<const double> scores) {
  return {psymeter::mean(scores), sample_sd(scores)};
}

double z_score(double raw, const NormReference& norm) {
  if (!(norm.sd > 0.0)) throw DegenerateInputError("norm standard deviation must be positive");
  return (raw - norm.mean) / norm.sd;
}

std::vector<double> z_scores(std::span<const double> raw, const NormReference& norm) {
  std::vector<double> out;
  out.reserve(raw.size());
  for (double x : raw) out.push_back(z_score(x, norm));
  return out;
}

namespace {

// Lower edges of bins 2..N.
constexpr std::array<double, 8> kStanineEdges{-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75};
constexpr std::array<double, 9> kStenEdges{-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};

template <std::size_t N>
int bin(double z, const std::array<double, N>& edges) {
  int b = 1;
  for (double e : edges) {
    if (z >= e) ++b;
  }
  return b;
}

}  // namespace

int stanine(double z) { return bin(z, kStanineEdges); }
int sten(double z) { return bin(z, kStenEdges); }

NormalizeTransform parse_normalize_transform(std::string_view s) {
  if (s == "log") return NormalizeTransform::log;
  if (s == "sqrt") return NormalizeTransform::sqrt;
  throw UsageError("unknown transform '" + std::string(s) + "' (expected log|sqrt)");
}

std::vector<double> normalize(std::span<const double> values, NormalizeTransform transform) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (transform == NormalizeTransform::log) {
      if (!(v > 0.0)) {
        std::ostringstream os;
        os << "log transform requires positive values, got " << v;
        throw RangeError(os.str());
      }
      out.push_back(std::log(v));
    } else {
      if (!(v >= 0.0)) {
        std::ostringstream os;
        os << "sqrt transform requires nonnegative values, got " << v;
        throw RangeError(os.str());
      }
      out.push_back(std::sqrt(v));
    }
  }
  return out;
}

}  // namespace psymeter
