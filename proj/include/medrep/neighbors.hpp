#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "medrep/linalg.hpp"
#include "medrep/vocab.hpp"

namespace medrep {

// Exact top-M Euclidean neighbor table. Rows for ineligible concepts hold
// kNoNeighbor.
class NeighborSets {
public:
    static constexpr DenseIndex kNoNeighbor = 0xFFFFFFFFu;

    NeighborSets() = default;
    NeighborSets(std::size_t num_concepts, std::size_t m, std::vector<DenseIndex> table);

    std::size_t num_concepts() const { return n_; }
    std::size_t m() const { return m_; }
    bool indexed(DenseIndex k) const { return k < n_ && m_ > 0 && table_[k * m_] != kNoNeighbor; }

    // Ordered by ascending distance, ties by index. Throws NotIndexed.
    std::span<const DenseIndex> query(DenseIndex k) const;
    const std::vector<DenseIndex>& table() const { return table_; }

    // FNV-1a over the serialized table.
    std::uint64_t checksum() const;

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<DenseIndex> table_;
};

struct NeighborOptions {
    // Restrict candidates to the anchor's own domain.
    bool same_domain = false;
};

// `eligible` must exclude special tokens. `domains` is required only for
// the same-domain filter (indexed by dense index).
NeighborSets build_neighbor_sets(const Matrix& r, std::size_t m, std::span<const DenseIndex> eligible,
                                 const NeighborOptions& options = {},
                                 std::span<const Domain> domains = {});

// Every non-special row of the catalog.
std::vector<DenseIndex> default_eligible(const ConceptCatalog& catalog);
std::vector<Domain> catalog_domains(const ConceptCatalog& catalog);

// "MNBR", u64 N, u32 M, row-major u32 indices, provenance trailer.
std::string encode_neighbor_sets(const NeighborSets& sets, const nlohmann::json& provenance);
void save_neighbor_sets(const std::filesystem::path& path, const NeighborSets& sets,
                        const nlohmann::json& provenance = nlohmann::json::object());

struct StoredNeighbors {
    NeighborSets sets;
    nlohmann::json provenance;
};

StoredNeighbors load_neighbor_sets(const std::filesystem::path& path);

}  // namespace medrep
