#pragma once

#include <vector>

#include "avshield/error.hpp"

namespace avshield {

// Linear-beta DDPM noise schedule. Indexing is 1-based in the step argument
// (t in 1..T); vectors are 0-based with element t-1 belonging to step t.
struct DiffusionSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    double alpha_bar_at(int t) const {
        if (t < 1 || t > T) throw StepError("timestep out of range: " + std::to_string(t));
        return alpha_bar[static_cast<std::size_t>(t - 1)];
    }
};

inline DiffusionSchedule build_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw ConfigError("schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");
    DiffusionSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        double frac = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
        s.beta[t] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[t] = 1.0 - s.beta[t];
        prod *= s.alpha[t];
        s.alpha_bar[t] = prod;
    }
    return s;
}

inline DiffusionSchedule default_schedule() { return build_schedule(1000, 1e-4, 0.02); }

} // namespace avshield
