#include "ffl/rng.hpp"

#include <algorithm>

#include "ffl/error.hpp"

namespace ffl {

DiscreteSampler::DiscreteSampler(std::span<const double> weights) {
    if (weights.empty()) throw ValidationError("discrete sampler needs at least one weight");
    cdf_.reserve(weights.size());
    double acc = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ValidationError("negative or NaN weight in discrete sampler");
        acc += w;
        cdf_.push_back(acc);
    }
    if (!(acc > 0.0)) throw ValidationError("discrete sampler weights sum to zero");
    for (double& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
}

std::size_t DiscreteSampler::operator()(CounterRng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

}  // namespace ffl
