#include "medrep/augment.hpp"

#include <spdlog/spdlog.h>

#include "medrep/error.hpp"

namespace medrep {

void AugmentConfig::validate() const {
    if (!(replace_prob >= 0.0 && replace_prob <= 1.0))
        throw Error(ErrorCode::ConfigError, "replace_prob must lie in [0, 1]");
    if (factor < 1) throw Error(ErrorCode::ConfigError, "augmentation factor must be >= 1");
}

AugmentStats& AugmentStats::operator+=(const AugmentStats& o) {
    eligible += o.eligible;
    selected += o.selected;
    replaced += o.replaced;
    fallbacks += o.fallbacks;
    return *this;
}

PatientTrajectory augment_trajectory(const PatientTrajectory& t, const NeighborSets& sets,
                                     std::span<const Domain> domains, double replace_prob, Rng& rng,
                                     AugmentStats* stats) {
    PatientTrajectory out = t;
    AugmentStats local;
    for (std::size_t i = 0; i < out.concept_idx.size(); ++i) {
        const auto k = out.concept_idx[i];
        if (is_special(k)) continue;
        ++local.eligible;
        if (!bernoulli(rng, replace_prob)) continue;
        ++local.selected;
        if (!sets.indexed(k)) {
            ++local.fallbacks;
            spdlog::debug("concept row {} has no neighbor row; kept as is", k);
            continue;
        }
        const auto row = sets.query(k);
        const auto replacement = row[static_cast<std::size_t>(uniform_index(rng, row.size()))];
        out.concept_idx[i] = replacement;
        if (replacement < domains.size()) out.domain_idx[i] = static_cast<std::uint32_t>(domains[replacement]);
        ++local.replaced;
    }
    if (stats) *stats += local;
    return out;
}

std::vector<PatientTrajectory> augment_dataset(std::span<const PatientTrajectory> trajectories,
                                               const NeighborSets& sets, std::span<const Domain> domains,
                                               const AugmentConfig& config, AugmentStats* stats) {
    config.validate();
    std::vector<PatientTrajectory> out;
    out.reserve(trajectories.size() * static_cast<std::size_t>(config.factor));
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        out.push_back(trajectories[i]);
        for (int c = 1; c < config.factor; ++c) {
            Rng rng(derive_seed(derive_seed(config.rng_seed, i), static_cast<std::uint64_t>(c)));
            out.push_back(augment_trajectory(trajectories[i], sets, domains, config.replace_prob, rng, stats));
        }
    }
    return out;
}

}  // namespace medrep
