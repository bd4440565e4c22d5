#include "ridgerisk/signal.hpp"

#include <algorithm>
#include <cmath>

#include "ridgerisk/error.hpp"

namespace ridgerisk {

Signal Signal::from_pairs(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    require(entries[i].first >= 1, ErrorCode::InvalidArgument, "signal indices are 1-based");
    require(std::isfinite(entries[i].second), ErrorCode::InvalidArgument,
            "signal coefficient is not finite");
    require(i == 0 || entries[i].first != entries[i - 1].first, ErrorCode::InvalidArgument,
            "duplicate signal index " + std::to_string(entries[i].first));
  }
  return Signal(std::move(entries));
}

Signal Signal::top_k_ones(Index k) {
  std::vector<Entry> entries;
  entries.reserve(k);
  for (Index i = 1; i <= k; ++i) entries.emplace_back(i, 1.0);
  return Signal(std::move(entries));
}

void Signal::check_within(const Spectrum& spectrum) const {
  if (auto d = spectrum.dimension(); d && max_index() > *d) {
    fail(ErrorCode::OutOfRange, "signal index " + std::to_string(max_index()) +
                                    " exceeds spectrum dimension " + std::to_string(*d));
  }
}

std::vector<double> Signal::dense(Index dimension) const {
  require(max_index() <= dimension, ErrorCode::OutOfRange,
          "signal support exceeds the requested dimension");
  std::vector<double> out(dimension, 0.0);
  for (const auto& [i, c] : entries_) out[i - 1] = c;
  return out;
}

SignalForms Signal::forms(const Spectrum& spectrum, double shift) const {
  check_within(spectrum);
  require(shift >= 0.0 && std::isfinite(shift), ErrorCode::InvalidArgument,
          "signal forms need a nonnegative shift");
  SignalForms f;
  for (const auto& [i, c] : entries_) {
    const double s = spectrum.eigenvalue(i);
    const double c2 = c * c;
    const double denom = s + shift;
    f.norm_sq += c2;
    f.sigma_norm_sq += s * c2;
    f.inv_sigma_norm_sq += c2 / s;
    f.q1 += c2 / denom;
    f.q2 += s * c2 / (denom * denom);
  }
  return f;
}

SplitNorms Signal::split_norms(const Spectrum& spectrum, Index k) const {
  check_within(spectrum);
  SplitNorms out;
  for (const auto& [i, c] : entries_) {
    const double s = spectrum.eigenvalue(i);
    if (i <= k) {
      out.head_inv_sigma_sq += c * c / s;
    } else {
      out.tail_sigma_sq += s * c * c;
    }
  }
  return out;
}

double Signal::resolvent_form(const Spectrum& spectrum, double zeta, double mu) const {
  check_within(spectrum);
  double acc = 0.0;
  for (const auto& [i, c] : entries_) {
    const double denom = zeta + mu * spectrum.eigenvalue(i);
    require(denom > 0.0, ErrorCode::Divergence, "signal resolvent has a nonpositive denominator");
    acc += c * c / denom;
  }
  return acc;
}

}  // namespace ridgerisk
