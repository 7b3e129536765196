#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "cscr/model.hpp"

namespace cscr {

using Complex = std::complex<double>;

// Complex channel gains for every in-range SU-SU pair and SU-PU pair, per
// channel. Gains are zero beyond transmission range and reciprocal within.
// One instance covers one slow-fading block.
struct ChannelModel {
  std::size_t num_sus = 0;
  std::size_t num_pus = 0;
  std::size_t num_channels = 0;
  double noise_power = 0.0;  // watts, N0 * B
  double bandwidth = 0.0;    // Hz-equivalent

  std::vector<Complex> su_su;  // [a * num_sus * K + b * K + k]
  std::vector<Complex> su_pu;  // [s * num_pus * K + p * K + k]

  Complex coeff(NodeId a, NodeId b, ChannelId k) const {
    return su_su[(static_cast<std::size_t>(a) * num_sus + b) * num_channels + k];
  }
  Complex coeff_pu(NodeId s, PuId p, ChannelId k) const {
    return su_pu[(static_cast<std::size_t>(s) * num_pus + p) * num_channels + k];
  }
};

// Rayleigh-style gains with a distance power law: E|h|^2 = d^-alpha
// (reference gain 1 at 1 m). Reciprocity holds by mirroring a < b draws.
inline ChannelModel sample_coefficients(const NetworkState& state,
                                        std::mt19937_64& rng) {
  const SimConfig& cfg = state.config;
  ChannelModel model;
  model.num_sus = state.sus.size();
  model.num_pus = state.pus.size();
  model.num_channels = cfg.num_channels;
  model.bandwidth = cfg.bandwidth;

  const double ref_gain =
      std::pow(cfg.snr_ref_distance, -cfg.path_loss_exponent);
  model.noise_power =
      cfg.max_power * ref_gain / std::pow(10.0, cfg.snr_ref_db / 10.0);

  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&](double d) {
    const double sigma = std::sqrt(std::pow(d, -cfg.path_loss_exponent) / 2.0);
    return Complex(sigma * gauss(rng), sigma * gauss(rng));
  };

  const std::size_t n = model.num_sus;
  const std::size_t m = model.num_pus;
  const std::size_t kk = model.num_channels;
  model.su_su.assign(n * n * kk, Complex(0.0, 0.0));
  model.su_pu.assign(n * m * kk, Complex(0.0, 0.0));

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d =
          distance(state.sus[a].position, state.sus[b].position);
      if (d > cfg.su_range) continue;
      for (std::size_t k = 0; k < kk; ++k) {
        const Complex h = draw(std::max(d, 1.0));
        model.su_su[(a * n + b) * kk + k] = h;
        model.su_su[(b * n + a) * kk + k] = h;
      }
    }
  }
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < m; ++p) {
      const double d =
          distance(state.sus[s].position, state.pus[p].position);
      if (d > state.pus[p].tx_range) continue;
      for (std::size_t k = 0; k < kk; ++k)
        model.su_pu[(s * m + p) * kk + k] = draw(std::max(d, 1.0));
    }
  }
  return model;
}

struct BeamformingResult {
  std::vector<Complex> weights;  // one per group member, unit total power
  double effective_gain = 0.0;   // |h^H w|^2
  bool feasible = false;
};

// Zero-forcing projection: the receiver channel vector h is projected onto
// the orthogonal complement of the span of the PU channel vectors, then
// normalized to unit transmit power. Infeasible when the projection
// vanishes (the signal lies entirely inside the nulled span).
inline BeamformingResult beamform(const std::vector<NodeId>& group,
                                  NodeId receiver,
                                  const std::vector<PuId>& nulled_pus,
                                  ChannelId channel,
                                  const ChannelModel& model) {
  if (group.empty()) throw std::invalid_argument("empty cooperative group");
  const std::size_t n = group.size();

  std::vector<Complex> h(n);
  for (std::size_t i = 0; i < n; ++i)
    h[i] = model.coeff(group[i], receiver, channel);

  // Orthonormal basis of the PU span, modified Gram-Schmidt with one
  // re-orthogonalization pass.
  std::vector<std::vector<Complex>> basis;
  for (PuId p : nulled_pus) {
    std::vector<Complex> g(n);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = model.coeff_pu(group[i], p, channel);
      norm2 += std::norm(g[i]);
    }
    if (norm2 == 0.0) continue;  // PU out of range of every member
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) {
        Complex dot(0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) dot += std::conj(q[i]) * g[i];
        for (std::size_t i = 0; i < n; ++i) g[i] -= dot * q[i];
      }
    }
    double rnorm2 = 0.0;
    for (const Complex& v : g) rnorm2 += std::norm(v);
    if (rnorm2 <= 1e-24 * norm2) continue;  // linearly dependent direction
    const double inv = 1.0 / std::sqrt(rnorm2);
    for (Complex& v : g) v *= inv;
    basis.push_back(std::move(g));
  }

  std::vector<Complex> w = h;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : basis) {
      Complex dot(0.0, 0.0);
      for (std::size_t i = 0; i < n; ++i) dot += std::conj(q[i]) * w[i];
      for (std::size_t i = 0; i < n; ++i) w[i] -= dot * q[i];
    }
  }

  double wnorm2 = 0.0;
  for (const Complex& v : w) wnorm2 += std::norm(v);

  BeamformingResult result;
  double hnorm2 = 0.0;
  for (const Complex& v : h) hnorm2 += std::norm(v);
  if (wnorm2 <= 1e-18 * std::max(hnorm2, 1e-300)) {
    result.weights.assign(n, Complex(0.0, 0.0));
    return result;  // infeasible
  }

  const double inv = 1.0 / std::sqrt(wnorm2);
  for (Complex& v : w) v *= inv;
  result.weights = std::move(w);
  // h^H w = ||P h|| for a projection, so the gain is the projected energy.
  result.effective_gain = wnorm2;
  result.feasible = true;
  return result;
}

// Shannon capacity of the beamformed hop; 0 when nulling is infeasible.
inline double achievable_capacity(const std::vector<NodeId>& group,
                                  NodeId receiver, ChannelId channel,
                                  const ChannelModel& model,
                                  const std::vector<PuId>& nulled_pus,
                                  double max_power) {
  const BeamformingResult bf =
      beamform(group, receiver, nulled_pus, channel, model);
  if (!bf.feasible || bf.effective_gain <= 0.0) return 0.0;
  const double snr = max_power * bf.effective_gain / model.noise_power;
  return model.bandwidth * std::log2(1.0 + snr);
}

}  // namespace cscr
