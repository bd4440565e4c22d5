#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ridgerisk {

using Index = std::uint64_t;

/// Relative tolerance used by the trace functionals when the caller does not
/// supply one.
inline constexpr double kDefaultTolerance = 1e-10;

/// sigma_i = i^-alpha.
struct PowerLaw {
  double alpha;
  bool operator==(const PowerLaw&) const = default;
};

/// sigma_i = i^-1 (1 + log i)^-alpha.
struct LogPowerLaw {
  double alpha;
  bool operator==(const LogPowerLaw&) const = default;
};

/// sigma_i = p^-s for q^s <= i < q^(s+1).
struct GeometricStep {
  double p;
  double q;
  bool operator==(const GeometricStep&) const = default;
};

/// User-supplied eigenvalues, stored normalized so the first one is 1.
struct ExplicitValues {
  std::vector<double> values;
  bool operator==(const ExplicitValues&) const = default;
};

struct InverseRank {
  Index index = 0;
  bool empty = true;
};

struct TailRanks {
  double r1 = 0.0;
  double r2 = 0.0;
  double r_bar = 0.0;
  double b_k = 0.0;
};

/// Eigenvalue sequence sigma_1 >= sigma_2 >= ... > 0 of a trace-class
/// covariance, finite or infinite. Immutable once built; every member is
/// safe to call concurrently.
///
/// Eigenvalues are normalized so that sigma_1 = 1. The leading eigenvalue of
/// the input is kept in scale() so a spectrum round-trips through the config
/// format, but all functionals use the normalized values.
///
/// Sums over infinite (or very long) analytic spectra are evaluated by direct
/// summation of a leading block followed by an Euler-Maclaurin tail whose
/// integral is computed by double-exponential quadrature in log-index space.
/// The leading block grows until the last Euler-Maclaurin correction falls
/// below the requested relative tolerance. GeometricStep sums run block by
/// block until a geometric tail bound drops below tolerance.
class Spectrum {
 public:
  using Family = std::variant<ExplicitValues, PowerLaw, LogPowerLaw, GeometricStep>;

  /// Values must be positive and nonincreasing; they are verified, not sorted.
  static Spectrum explicit_values(std::vector<double> values);
  static Spectrum isotropic(Index dimension);
  static Spectrum power_law(double alpha, std::optional<Index> dimension = std::nullopt,
                            double scale = 1.0);
  static Spectrum log_power_law(double alpha, std::optional<Index> dimension = std::nullopt,
                                double scale = 1.0);
  static Spectrum geometric_step(double p, double q, std::optional<Index> dimension = std::nullopt,
                                 double scale = 1.0);

  const Family& family() const { return family_; }
  std::optional<Index> dimension() const { return dimension_; }
  bool infinite() const { return !dimension_.has_value(); }
  double scale() const { return scale_; }

  /// sigma_i for 1 <= i <= dimension.
  double eigenvalue(Index i) const;
  /// First `count` eigenvalues (count must not exceed the dimension).
  std::vector<double> leading(Index count) const;

  /// sum_{l >= k} sigma_l.
  double tail_sum(Index k, double eps = kDefaultTolerance) const;
  /// sum_{l >= k} sigma_l^q for q in {1, 2, 3}.
  double power_tail_sum(Index k, int q, double eps = kDefaultTolerance) const;
  /// T_r(shift) = sum_i sigma_i^r / (sigma_i + shift)^r for r in {1, 2, 3}.
  double trace_resolvent(double shift, int power, double eps = kDefaultTolerance) const;
  /// sum_i sigma_i / (zeta + mu sigma_i). Needs zeta > 0 and zeta + mu > 0.
  double affine_resolvent_trace(double zeta, double mu, double eps = kDefaultTolerance) const;

  /// Smallest admissible d_Sigma(n): max(n, max_{k <= min(n, d)} tail_sum(k) / sigma_k).
  double effective_rank(Index n) const;
  /// max{k : d_Sigma(k) <= m}, capped at the dimension.
  InverseRank inverse_effective_rank(double m) const;
  /// r_1(k), r_2(k), r_bar(k) and b_k = sigma_k / sigma_{k+1}.
  TailRanks tail_ranks(Index k, double eps = kDefaultTolerance) const;

  /// Number of eigenvalues >= threshold.
  Index count_at_least(double threshold) const;

  /// Same family restricted to its first `dimension` eigenvalues.
  Spectrum truncated(Index dimension) const;

  std::string describe() const;

  bool operator==(const Spectrum&) const = default;

 private:
  Spectrum(Family family, std::optional<Index> dimension, double scale)
      : family_(std::move(family)), dimension_(dimension), scale_(scale) {}

  void check_index(Index i) const;
  Index last_index_or(Index fallback) const { return dimension_.value_or(fallback); }

  Family family_;
  std::optional<Index> dimension_;
  double scale_ = 1.0;
};

}  // namespace ridgerisk
