#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace bpc {

// Error taxonomy shared by the C++ core, the C API and the CLI.
// The CLI maps each code onto one of the documented exit classes
// (usage = 1, data = 2, sampler = 3, archive = 4).
enum class Status : int {
  Ok = 0,
  // usage / configuration
  InvalidArgument,
  UnknownModel,
  // data
  MissingColumn,
  BadResultValue,
  ParseError,
  EmptyAfterTieRemoval,
  TieWithoutDavidson,
  ConstantCovariate,
  SinglePlayer,
  UnknownSubject,
  UnknownPlayer,
  MissingCovariate,
  // numerics
  NonFiniteDensity,
  NonFiniteGradient,
  ZeroVariance,
  DegenerateDraws,
  TooFewTailSamples,
  // sampler
  AllDivergent,
  NonFiniteInit,
  // archive
  VersionMismatch,
  CorruptArchive,
  DataFingerprintMismatch,
  IoError,
  Internal,
};

const char* status_name(Status s);

// Exit class for the CLI: 0 ok, 1 usage, 2 data, 3 sampler, 4 archive.
int status_exit_class(Status s);

class Error : public std::runtime_error {
 public:
  Error(Status code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Status code() const { return code_; }

 private:
  Status code_;
};

[[noreturn]] inline void fail(Status code, const std::string& what) { throw Error(code, what); }

// ---- numeric helpers ----

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double log_sum_exp3(double a, double b, double c) {
  double m = a > b ? a : b;
  if (c > m) m = c;
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

// log N(x | 0, var), normalizing constant included.
inline double log_normal_pdf(double x, double var) {
  return -0.5 * (std::log(2.0 * kPi * var) + x * x / var);
}

}  // namespace bpc
