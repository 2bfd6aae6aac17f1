#include "medrep/subgraph.hpp"

#include <algorithm>

#include "medrep/error.hpp"

namespace medrep::graph {

SubgraphSample sample_subgraph(const RelationGraph& graph, std::span<const DenseIndex> seeds,
                               std::span<const int> fanouts, Rng& rng) {
    if (seeds.empty()) throw Error(ErrorCode::ConfigError, "seed set is empty");
    SubgraphSample s;
    auto add = [&](DenseIndex v) {
        if (v >= graph.num_nodes()) throw Error(ErrorCode::UnknownConcept, "seed outside graph");
        auto [it, inserted] = s.local_of.emplace(v, static_cast<DenseIndex>(s.nodes.size()));
        if (inserted) s.nodes.push_back(v);
        return inserted;
    };
    for (auto v : seeds) add(v);
    s.num_seeds = s.nodes.size();

    std::vector<DenseIndex> frontier(s.nodes.begin(), s.nodes.end());
    std::vector<DenseIndex> candidates;
    for (int fanout : fanouts) {
        if (fanout <= 0) throw Error(ErrorCode::ConfigError, "fanouts must be positive");
        std::vector<DenseIndex> next;
        for (auto v : frontier) {
            candidates.clear();
            for (auto u : graph.neighbors(v))
                if (!s.local_of.count(u)) candidates.push_back(u);
            const auto take = std::min(candidates.size(), static_cast<std::size_t>(fanout));
            // Partial Fisher-Yates: the first `take` slots are the sample.
            for (std::size_t i = 0; i < take; ++i) {
                const auto j = i + static_cast<std::size_t>(uniform_index(rng, candidates.size() - i));
                std::swap(candidates[i], candidates[j]);
                if (add(candidates[i])) next.push_back(candidates[i]);
            }
        }
        frontier = std::move(next);
        if (frontier.empty()) break;
    }

    for (DenseIndex i = 0; i < s.nodes.size(); ++i) {
        for (auto u : graph.neighbors(s.nodes[i])) {
            auto it = s.local_of.find(u);
            if (it != s.local_of.end() && it->second > i) s.edges.emplace_back(i, it->second);
        }
    }
    std::sort(s.edges.begin(), s.edges.end());
    return s;
}

}  // namespace medrep::graph
