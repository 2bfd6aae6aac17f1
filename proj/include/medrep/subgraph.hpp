#pragma once

#include <array>
#include <unordered_map>
#include <vector>

#include "medrep/gcn.hpp"

namespace medrep::graph {

struct SubgraphSample {
    std::vector<DenseIndex> nodes;  // local -> global; seeds first, then hop order
    EdgeList edges;                 // induced, local indices, i < j
    std::unordered_map<DenseIndex, DenseIndex> local_of;  // global -> local
    std::size_t num_seeds = 0;
};

// Hop-wise neighbor sampling: every frontier node draws up to fanouts[d]
// of its not-yet-sampled neighbors uniformly without replacement. The
// result carries all original edges among the sampled nodes.
SubgraphSample sample_subgraph(const RelationGraph& graph, std::span<const DenseIndex> seeds,
                               std::span<const int> fanouts, Rng& rng);

}  // namespace medrep::graph
