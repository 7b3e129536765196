#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace cscr {

enum class PuState { Off, On };

// Two-state ON-OFF birth-death process. mu is the rate of the exponential
// OFF period (so the mean OFF duration is 1/mu), lambda_on the rate of the
// exponential ON period.
struct PuProcess {
  double mu = 1.0;
  double lambda_on = 1.0;
  PuState state = PuState::Off;
  double next_transition = 0.0;
  double last_advanced = 0.0;
};

// Rates for a target long-run ON fraction a: mean ON = 1 s, mean OFF =
// (1-a)/a s, both jittered by a common factor in [0.5, 1.5] so the ratio
// (and hence the ON fraction) is preserved.
inline PuProcess make_pu_process(double activity, std::mt19937_64& rng) {
  if (activity <= 0.0 || activity >= 1.0)
    throw std::invalid_argument("activity must lie in (0,1)");
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  const double j = jitter(rng);
  const double mean_on = 1.0 * j;
  const double mean_off = (1.0 - activity) / activity * j;
  PuProcess p;
  p.mu = 1.0 / mean_off;
  p.lambda_on = 1.0 / mean_on;
  std::bernoulli_distribution start_on(activity);
  p.state = start_on(rng) ? PuState::On : PuState::Off;
  const double rate = p.state == PuState::On ? p.lambda_on : p.mu;
  p.next_transition = std::exponential_distribution<double>(rate)(rng);
  return p;
}

// Probability that at least one of the given PUs turns active within a
// window of tau seconds: 1 - exp(-tau * sum(mu_i)).
inline double p_pu(const std::vector<PuProcess>& pus, double tau) {
  if (tau < 0.0) throw std::invalid_argument("tau must be nonnegative");
  double rate_sum = 0.0;
  for (const PuProcess& p : pus) rate_sum += p.mu;
  return 1.0 - std::exp(-tau * rate_sum);
}

inline double p_pu_from_rates(const std::vector<double>& mus, double tau) {
  if (tau < 0.0) throw std::invalid_argument("tau must be nonnegative");
  double rate_sum = 0.0;
  for (double m : mus) rate_sum += m;
  return 1.0 - std::exp(-tau * rate_sum);
}

// Advances the process through every transition due at or before `now`.
inline void advance(PuProcess& process, double now, std::mt19937_64& rng) {
  if (now < process.last_advanced)
    throw std::invalid_argument("time regression in PU advance");
  process.last_advanced = now;
  while (process.next_transition <= now) {
    process.state = process.state == PuState::On ? PuState::Off : PuState::On;
    const double rate =
        process.state == PuState::On ? process.lambda_on : process.mu;
    process.next_transition +=
        std::exponential_distribution<double>(rate)(rng);
  }
}

}  // namespace cscr
