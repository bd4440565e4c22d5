#include "ridgerisk/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "compensated_sum.hpp"
#include "ridgerisk/error.hpp"

namespace ridgerisk {

namespace {

constexpr Index kDirectTerms = 1u << 16;
constexpr Index kInitialChunk = 4096;
constexpr Index kMaxChunk = Index{1} << 24;
constexpr double kInf = std::numeric_limits<double>::infinity();

using detail::CompensatedSum;

// Summands are functions g(sigma) with g(sigma) <= bound_coef * sigma^bound_power.
// log_excess(l) returns log(g(e^l) / e^(bound_power * l)), which stays moderate
// as sigma -> 0. The quadrature combines it with the curve's exact weighted
// exponent u + p log sigma(u); adding u and log sigma separately would cancel
// catastrophically at large u.

struct PowerSummand {
  int q;
  template <class T>
  T operator()(const T& s) const {
    T r = s;
    for (int i = 1; i < q; ++i) r = r * s;
    return r;
  }
  double log_excess(double) const { return 0.0; }
  double bound_coef() const { return 1.0; }
  double bound_power() const { return q; }
  std::optional<double> knee() const { return std::nullopt; }
};

struct ResolventSummand {
  double shift;
  int r;
  template <class T>
  T operator()(const T& s) const {
    const T u = s / (s + shift);
    T out = u;
    for (int i = 1; i < r; ++i) out = out * u;
    return out;
  }
  // -r log(sigma + shift)
  double log_excess(double log_sigma) const {
    const double log_shift = std::log(shift);
    const double hi = std::max(log_sigma, log_shift);
    const double lo = std::min(log_sigma, log_shift);
    return -r * (hi + std::log1p(std::exp(lo - hi)));
  }
  double bound_coef() const { return std::pow(shift, -r); }
  double bound_power() const { return r; }
  std::optional<double> knee() const { return shift; }
};

// sigma / (a + b sigma) with a > 0 and a + b > 0 (so the denominator stays
// positive on (0, 1]).
struct AffineSummand {
  double a;
  double b;
  template <class T>
  T operator()(const T& s) const {
    return s / (a + b * s);
  }
  double log_excess(double log_sigma) const { return -std::log(a + b * std::exp(log_sigma)); }
  double bound_coef() const { return 1.0 / std::min(a, a + b); }
  double bound_power() const { return 1.0; }
  std::optional<double> knee() const {
    if (b > 0.0) return a / b;
    return std::nullopt;
  }
};

// Continuous extensions of the analytic families, in index space and in
// log-index space.
struct PowerLawCurve {
  double alpha;
  template <class T>
  T sigma(const T& x) const {
    using std::pow;
    return pow(x, -alpha);
  }
  double log_sigma(double u) const { return -alpha * u; }
  // u + p log sigma(u)
  double log_weighted(double u, double p) const { return (1.0 - p * alpha) * u; }
};

struct LogPowerLawCurve {
  double alpha;
  template <class T>
  T sigma(const T& x) const {
    using std::log;
    using std::pow;
    return 1.0 / (x * pow(1.0 + log(x), alpha));
  }
  double log_sigma(double u) const { return -u - alpha * std::log1p(u); }
  double log_weighted(double u, double p) const {
    return (1.0 - p) * u - p * alpha * std::log1p(u);
  }
};

template <class Curve, class Summand>
double quadrature_log_space(const Curve& curve, const Summand& g, double u_lo, double u_hi,
                            double tol) {
  auto integrand = [&](double u) {
    const double v = curve.log_weighted(u, g.bound_power()) + g.log_excess(curve.log_sigma(u));
    return v < -745.0 ? 0.0 : std::exp(v);
  };
  if (!(u_hi > u_lo)) return 0.0;
  if (std::isinf(u_hi)) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(integrand, u_lo, u_hi, tol);
  }
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(integrand, u_lo, u_hi, tol);
}

// Locates u with log_sigma(u) = log(level) by bisection; log_sigma is
// decreasing in u.
template <class Curve>
double solve_log_level(const Curve& curve, double level, double u_lo) {
  const double target = std::log(level);
  double lo = u_lo;
  double hi = std::max(1.0, 2.0 * u_lo);
  while (curve.log_sigma(hi) > target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (curve.log_sigma(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

template <class Curve, class Summand>
double integral(const Curve& curve, const Summand& g, double a, std::optional<double> b,
                double tol) {
  const double u_lo = std::log(a);
  const double u_hi = b ? std::log(*b) : kInf;
  if (auto knee = g.knee(); knee && curve.log_sigma(u_lo) > std::log(*knee)) {
    const double u_knee = solve_log_level(curve, *knee, u_lo);
    if (u_knee < u_hi) {
      return quadrature_log_space(curve, g, u_lo, u_knee, tol) +
             quadrature_log_space(curve, g, u_knee, u_hi, tol);
    }
  }
  return quadrature_log_space(curve, g, u_lo, u_hi, tol);
}

struct EulerMaclaurinTail {
  double value;
  double error;
};

// sum_{i=a}^{b} f(i) ~ int_a^b f + (f(a) + f(b))/2 + (f'(b) - f'(a))/12
//                     - (f'''(b) - f'''(a))/720.
template <class Curve, class Summand>
EulerMaclaurinTail euler_maclaurin(const Curve& curve, const Summand& g, Index a,
                                   std::optional<Index> b, double tol) {
  using boost::math::differentiation::make_fvar;
  auto jet = [&](double x) { return g(curve.sigma(make_fvar<double, 3>(x))); };
  const auto ja = jet(static_cast<double>(a));
  double value = ja.derivative(0) / 2.0 - ja.derivative(1) / 12.0 + ja.derivative(3) / 720.0;
  double error = std::abs(ja.derivative(3)) / 720.0;
  std::optional<double> upper;
  if (b) {
    upper = static_cast<double>(*b);
    const auto jb = jet(*upper);
    value += jb.derivative(0) / 2.0 + jb.derivative(1) / 12.0 - jb.derivative(3) / 720.0;
    error += std::abs(jb.derivative(3)) / 720.0;
  }
  value += integral(curve, g, static_cast<double>(a), upper, tol);
  return {value, error};
}

template <class Curve, class Summand>
double sum_smooth(const Curve& curve, const Summand& g, Index first, std::optional<Index> last,
                  double eps) {
  if (last && *last < first) return 0.0;
  CompensatedSum acc;
  auto term = [&](Index i) { return g(curve.sigma(static_cast<double>(i))); };
  if (last && *last - first < kDirectTerms) {
    for (Index i = first; i <= *last; ++i) acc.add(term(i));
    return acc.value();
  }
  const double quad_tol = std::max(eps * 1e-2, 1e-15);
  Index next = first;
  Index chunk = kInitialChunk;
  for (;;) {
    const Index cut = next + chunk;
    if (last && cut >= *last) {
      for (; next <= *last; ++next) acc.add(term(next));
      return acc.value();
    }
    for (; next < cut; ++next) acc.add(term(next));
    const auto tail = euler_maclaurin(curve, g, cut, last, quad_tol);
    const double total = acc.value() + tail.value;
    if (tail.error <= eps * std::abs(total) || chunk >= kMaxChunk) return total;
    chunk *= 4;
  }
}

double block_start(double q, int s) { return std::ceil(std::pow(q, s)); }

int geometric_block(double q, Index i) {
  const double x = static_cast<double>(i);
  int s = static_cast<int>(std::floor(std::log(x) / std::log(q)));
  s = std::max(s, 0);
  while (block_start(q, s + 1) <= x) ++s;
  while (s > 0 && block_start(q, s) > x) --s;
  return s;
}

template <class Summand>
double sum_geometric(const GeometricStep& fam, const Summand& g, Index first,
                     std::optional<Index> last, double eps) {
  if (last && *last < first) return 0.0;
  const double lo_index = static_cast<double>(first);
  const double hi_index = last ? static_cast<double>(*last) : kInf;
  const double ratio = fam.q / std::pow(fam.p, g.bound_power());
  CompensatedSum acc;
  for (int s = 0;; ++s) {
    const double start = block_start(fam.q, s);
    const double end = block_start(fam.q, s + 1) - 1.0;
    const double sigma = std::pow(fam.p, -s);
    if (start > hi_index || sigma == 0.0) break;
    const double lo = std::max(start, lo_index);
    const double hi = std::min(end, hi_index);
    if (hi >= lo) acc.add((hi - lo + 1.0) * g(sigma));
    if (end >= hi_index) break;
    if (end >= lo_index) {
      const double bound = g.bound_coef() * fam.q * std::pow(ratio, s + 1) / (1.0 - ratio);
      if (bound <= eps * std::abs(acc.value())) break;
    }
  }
  return acc.value();
}

template <class Summand>
double sum_family(const Spectrum::Family& family, const Summand& g, Index first,
                  std::optional<Index> last, double eps) {
  return std::visit(
      [&](const auto& fam) -> double {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, ExplicitValues>) {
          CompensatedSum acc;
          const Index stop = std::min<Index>(last.value_or(fam.values.size()), fam.values.size());
          for (Index i = first; i <= stop; ++i) acc.add(g(fam.values[i - 1]));
          return acc.value();
        } else if constexpr (std::is_same_v<F, PowerLaw>) {
          return sum_smooth(PowerLawCurve{fam.alpha}, g, first, last, eps);
        } else if constexpr (std::is_same_v<F, LogPowerLaw>) {
          return sum_smooth(LogPowerLawCurve{fam.alpha}, g, first, last, eps);
        } else {
          return sum_geometric(fam, g, first, last, eps);
        }
      },
      family);
}

void check_tolerance(double eps) {
  require(eps > 0.0 && std::isfinite(eps), ErrorCode::InvalidArgument,
          "tolerance must be positive and finite");
}

void check_scale(double scale) {
  require(scale > 0.0 && std::isfinite(scale), ErrorCode::InvalidArgument,
          "spectrum scale must be positive and finite");
}

void check_dimension(std::optional<Index> dimension) {
  require(!dimension || *dimension >= 1, ErrorCode::InvalidArgument,
          "spectrum dimension must be at least 1");
}

}  // namespace

Spectrum Spectrum::explicit_values(std::vector<double> values) {
  require(!values.empty(), ErrorCode::InvalidArgument, "explicit spectrum is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i] > 0.0 && std::isfinite(values[i]), ErrorCode::InvalidArgument,
            "explicit eigenvalue " + std::to_string(i + 1) + " is not positive and finite");
    require(i == 0 || values[i] <= values[i - 1], ErrorCode::InvalidArgument,
            "explicit eigenvalues must be nonincreasing (index " + std::to_string(i + 1) + ")");
  }
  const double scale = values.front();
  for (double& v : values) v /= scale;
  const Index d = values.size();
  return Spectrum(ExplicitValues{std::move(values)}, d, scale);
}

Spectrum Spectrum::isotropic(Index dimension) {
  require(dimension >= 1, ErrorCode::InvalidArgument, "isotropic dimension must be at least 1");
  return explicit_values(std::vector<double>(dimension, 1.0));
}

Spectrum Spectrum::power_law(double alpha, std::optional<Index> dimension, double scale) {
  check_dimension(dimension);
  check_scale(scale);
  require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::InvalidArgument,
          "power_law alpha must be nonnegative");
  require(dimension || alpha > 1.0, ErrorCode::InvalidArgument,
          "infinite power_law needs alpha > 1 to be trace class");
  return Spectrum(PowerLaw{alpha}, dimension, scale);
}

Spectrum Spectrum::log_power_law(double alpha, std::optional<Index> dimension, double scale) {
  check_dimension(dimension);
  check_scale(scale);
  require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::InvalidArgument,
          "log_power_law alpha must be nonnegative");
  require(dimension || alpha > 1.0, ErrorCode::InvalidArgument,
          "infinite log_power_law needs alpha > 1 to be trace class");
  return Spectrum(LogPowerLaw{alpha}, dimension, scale);
}

Spectrum Spectrum::geometric_step(double p, double q, std::optional<Index> dimension, double scale) {
  check_dimension(dimension);
  check_scale(scale);
  require(std::isfinite(p) && std::isfinite(q) && q > 1.0 && p > q, ErrorCode::InvalidArgument,
          "geometric_step needs p > q > 1");
  return Spectrum(GeometricStep{p, q}, dimension, scale);
}

void Spectrum::check_index(Index i) const {
  require(i >= 1, ErrorCode::OutOfRange, "eigen-index must be at least 1");
  require(!dimension_ || i <= *dimension_, ErrorCode::OutOfRange,
          "eigen-index " + std::to_string(i) + " exceeds dimension " +
              std::to_string(dimension_.value_or(0)));
}

double Spectrum::eigenvalue(Index i) const {
  check_index(i);
  return std::visit(
      [i](const auto& fam) -> double {
        using F = std::decay_t<decltype(fam)>;
        const double x = static_cast<double>(i);
        if constexpr (std::is_same_v<F, ExplicitValues>) {
          return fam.values[i - 1];
        } else if constexpr (std::is_same_v<F, PowerLaw>) {
          return std::pow(x, -fam.alpha);
        } else if constexpr (std::is_same_v<F, LogPowerLaw>) {
          return 1.0 / (x * std::pow(1.0 + std::log(x), fam.alpha));
        } else {
          return std::pow(fam.p, -geometric_block(fam.q, i));
        }
      },
      family_);
}

std::vector<double> Spectrum::leading(Index count) const {
  require(!dimension_ || count <= *dimension_, ErrorCode::OutOfRange,
          "requested more eigenvalues than the dimension");
  std::vector<double> out;
  out.reserve(count);
  for (Index i = 1; i <= count; ++i) out.push_back(eigenvalue(i));
  return out;
}

double Spectrum::tail_sum(Index k, double eps) const { return power_tail_sum(k, 1, eps); }

double Spectrum::power_tail_sum(Index k, int q, double eps) const {
  require(k >= 1, ErrorCode::OutOfRange, "tail index must be at least 1");
  require(q >= 1 && q <= 3, ErrorCode::InvalidArgument, "power must be 1, 2 or 3");
  check_tolerance(eps);
  return sum_family(family_, PowerSummand{q}, k, dimension_, eps);
}

double Spectrum::trace_resolvent(double shift, int power, double eps) const {
  require(power >= 1 && power <= 3, ErrorCode::InvalidArgument, "power must be 1, 2 or 3");
  require(shift >= 0.0 && std::isfinite(shift), ErrorCode::InvalidArgument,
          "resolvent shift must be nonnegative and finite");
  check_tolerance(eps);
  if (shift == 0.0) {
    require(dimension_.has_value(), ErrorCode::Divergence,
            "trace at zero shift diverges for an infinite spectrum");
    return static_cast<double>(*dimension_);
  }
  return sum_family(family_, ResolventSummand{shift, power}, 1, dimension_, eps);
}

double Spectrum::affine_resolvent_trace(double zeta, double mu, double eps) const {
  require(zeta > 0.0 && std::isfinite(zeta) && std::isfinite(mu), ErrorCode::InvalidArgument,
          "affine resolvent needs zeta > 0");
  require(zeta + mu > 0.0, ErrorCode::InvalidArgument,
          "affine resolvent needs zeta + mu * sigma_1 > 0");
  check_tolerance(eps);
  return sum_family(family_, AffineSummand{zeta, mu}, 1, dimension_, eps);
}

double Spectrum::effective_rank(Index n) const {
  require(n >= 1, ErrorCode::InvalidArgument, "sample size must be at least 1");
  const Index top = dimension_ ? std::min(n, *dimension_) : n;
  double tail = tail_sum(top, 1e-14);
  double best = tail / eigenvalue(top);
  for (Index k = top - 1; k >= 1; --k) {
    const double sigma = eigenvalue(k);
    tail += sigma;
    best = std::max(best, tail / sigma);
  }
  return std::max(static_cast<double>(n), best);
}

InverseRank Spectrum::inverse_effective_rank(double m) const {
  require(std::isfinite(m), ErrorCode::InvalidArgument, "effective rank level must be finite");
  if (m < 1.0) return {};
  const double floor_m = std::floor(m);
  require(floor_m <= 1e8, ErrorCode::InvalidArgument, "effective rank level too large");
  Index top = static_cast<Index>(floor_m);
  if (dimension_) top = std::min(top, *dimension_);
  std::vector<double> ratio(top);
  double tail = tail_sum(top, 1e-14);
  ratio[top - 1] = tail / eigenvalue(top);
  for (Index k = top - 1; k >= 1; --k) {
    const double sigma = eigenvalue(k);
    tail += sigma;
    ratio[k - 1] = tail / sigma;
  }
  InverseRank out;
  double running = 0.0;
  for (Index k = 1; k <= top; ++k) {
    running = std::max(running, ratio[k - 1]);
    if (std::max(static_cast<double>(k), running) > m) break;
    out.index = k;
    out.empty = false;
  }
  return out;
}

TailRanks Spectrum::tail_ranks(Index k, double eps) const {
  require(k >= 1, ErrorCode::OutOfRange, "tail rank index must be at least 1");
  require(!dimension_ || k + 1 <= *dimension_, ErrorCode::Undefined,
          "tail ranks undefined: sigma_{k+1} = 0");
  const double next = eigenvalue(k + 1);
  TailRanks out;
  out.r1 = power_tail_sum(k + 1, 1, eps) / next;
  out.r2 = power_tail_sum(k + 1, 2, eps) / (next * next);
  out.r_bar = out.r1 * out.r1 / out.r2;
  out.b_k = eigenvalue(k) / next;
  return out;
}

Index Spectrum::count_at_least(double threshold) const {
  require(!std::isnan(threshold), ErrorCode::InvalidArgument, "threshold is NaN");
  if (threshold <= 0.0) {
    require(dimension_.has_value(), ErrorCode::Divergence,
            "infinitely many eigenvalues are >= 0");
    return *dimension_;
  }
  if (threshold > 1.0) return 0;
  Index lo = 1;  // sigma_lo >= threshold
  Index hi = 2;
  const Index cap = dimension_.value_or(std::numeric_limits<Index>::max() / 4);
  while (hi <= cap && eigenvalue(hi) >= threshold) {
    lo = hi;
    require(hi < std::numeric_limits<Index>::max() / 4, ErrorCode::OutOfRange,
            "eigenvalue count exceeds the index range");
    hi *= 2;
  }
  if (hi > cap) {
    if (eigenvalue(cap) >= threshold) return cap;
    hi = cap;
  }
  // sigma_lo >= threshold > sigma_hi
  while (hi - lo > 1) {
    const Index mid = lo + (hi - lo) / 2;
    if (eigenvalue(mid) >= threshold) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

Spectrum Spectrum::truncated(Index dimension) const {
  require(dimension >= 1, ErrorCode::InvalidArgument, "truncation dimension must be at least 1");
  require(!dimension_ || dimension <= *dimension_, ErrorCode::OutOfRange,
          "truncation dimension exceeds the spectrum dimension");
  if (const auto* ex = std::get_if<ExplicitValues>(&family_)) {
    ExplicitValues head{std::vector<double>(ex->values.begin(), ex->values.begin() + dimension)};
    return Spectrum(std::move(head), dimension, scale_);
  }
  return Spectrum(family_, dimension, scale_);
}

std::string Spectrum::describe() const {
  std::ostringstream os;
  std::visit(
      [&os](const auto& fam) {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, ExplicitValues>) {
          os << "explicit";
        } else if constexpr (std::is_same_v<F, PowerLaw>) {
          os << "power_law(alpha=" << fam.alpha << ")";
        } else if constexpr (std::is_same_v<F, LogPowerLaw>) {
          os << "log_power_law(alpha=" << fam.alpha << ")";
        } else {
          os << "geometric_step(p=" << fam.p << ",q=" << fam.q << ")";
        }
      },
      family_);
  if (dimension_) {
    os << "[d=" << *dimension_ << "]";
  } else {
    os << "[d=inf]";
  }
  return os.str();
}

}  // namespace ridgerisk
