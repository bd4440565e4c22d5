#pragma once

#include <utility>
#include <vector>

#include "ridgerisk/spectrum.hpp"

namespace ridgerisk {

/// Quadratic forms of beta against functions of Sigma, all exact finite sums
/// over the support.
struct SignalForms {
  double norm_sq = 0.0;            // |beta|^2
  double sigma_norm_sq = 0.0;      // |beta|_Sigma^2
  double inv_sigma_norm_sq = 0.0;  // |beta|_{Sigma^-1}^2 = |theta|^2
  double q1 = 0.0;                 // <beta, (Sigma + s I)^-1 beta>
  double q2 = 0.0;                 // <beta, (Sigma + s I)^-2 Sigma beta>
};

/// |beta_{<=k}|_{Sigma^-1}^2 and |beta_{>k}|_Sigma^2.
struct SplitNorms {
  double head_inv_sigma_sq = 0.0;
  double tail_sigma_sq = 0.0;
};

/// Target vector in the eigenbasis of Sigma: finitely many (index, <beta, v_i>)
/// pairs, 1-based, sorted by index with no duplicates.
class Signal {
 public:
  using Entry = std::pair<Index, double>;

  Signal() = default;
  static Signal from_pairs(std::vector<Entry> entries);
  static Signal top_k_ones(Index k);

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  Index max_index() const { return entries_.empty() ? 0 : entries_.back().first; }

  /// Throws OutOfRange when an index exceeds the spectrum dimension.
  void check_within(const Spectrum& spectrum) const;

  /// Dense coefficient vector of length `dimension` (indices beyond it must be absent).
  std::vector<double> dense(Index dimension) const;

  SignalForms forms(const Spectrum& spectrum, double shift) const;
  SplitNorms split_norms(const Spectrum& spectrum, Index k) const;

  /// sum_i <beta, v_i>^2 / (zeta + mu sigma_i).
  double resolvent_form(const Spectrum& spectrum, double zeta, double mu) const;

  bool operator==(const Signal&) const = default;

 private:
  explicit Signal(std::vector<Entry> entries) : entries_(std::move(entries)) {}
  std::vector<Entry> entries_;
};

}  // namespace ridgerisk
