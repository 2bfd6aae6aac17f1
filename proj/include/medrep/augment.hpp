#pragma once

#include <span>
#include <vector>

#include "medrep/neighbors.hpp"
#include "medrep/rng.hpp"
#include "medrep/trajectory.hpp"

namespace medrep {

struct AugmentConfig {
    double replace_prob = 0.15;
    int factor = 1;
    std::uint64_t rng_seed = 0;

    void validate() const;  // throws ConfigError
};

struct AugmentStats {
    std::size_t eligible = 0;
    std::size_t selected = 0;
    std::size_t replaced = 0;
    std::size_t fallbacks = 0;  // selected but the concept has no neighbor row

    AugmentStats& operator+=(const AugmentStats& o);
};

// Each non-special position is selected independently with probability p
// and replaced by a uniform draw from its neighbor row; the domain stream
// follows the replacement. Other streams and the length are untouched.
PatientTrajectory augment_trajectory(const PatientTrajectory& t, const NeighborSets& sets,
                                     std::span<const Domain> domains, double replace_prob, Rng& rng,
                                     AugmentStats* stats = nullptr);

// Every input followed by (factor - 1) augmented copies. Copy c of input i
// uses its own stream derived from (seed, i, c).
std::vector<PatientTrajectory> augment_dataset(std::span<const PatientTrajectory> trajectories,
                                               const NeighborSets& sets, std::span<const Domain> domains,
                                               const AugmentConfig& config, AugmentStats* stats = nullptr);

}  // namespace medrep
