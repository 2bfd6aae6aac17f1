#include "medrep/neighbors.hpp"

#include <algorithm>

#include "medrep/error.hpp"
#include "medrep/io.hpp"

namespace medrep {

NeighborSets::NeighborSets(std::size_t num_concepts, std::size_t m, std::vector<DenseIndex> table)
    : n_(num_concepts), m_(m), table_(std::move(table)) {
    if (table_.size() != n_ * m_) throw Error(ErrorCode::ShapeError, "neighbor table size != N x M");
}

std::span<const DenseIndex> NeighborSets::query(DenseIndex k) const {
    if (!indexed(k)) throw Error(ErrorCode::NotIndexed, "concept row " + std::to_string(k));
    return std::span<const DenseIndex>(table_).subspan(k * m_, m_);
}

std::uint64_t NeighborSets::checksum() const {
    io::ByteWriter w;
    w.u64(n_);
    w.u32(static_cast<std::uint32_t>(m_));
    for (auto v : table_) w.u32(v);
    return io::fnv1a64(w.bytes());
}

NeighborSets build_neighbor_sets(const Matrix& r, std::size_t m, std::span<const DenseIndex> eligible,
                                 const NeighborOptions& options, std::span<const Domain> domains) {
    const auto n = static_cast<std::size_t>(r.rows());
    if (m == 0) throw Error(ErrorCode::ConfigError, "M must be positive");
    if (m >= eligible.size())
        throw Error(ErrorCode::TooFewConcepts, "M = " + std::to_string(m) + " but only " +
                                                   std::to_string(eligible.size()) + " eligible concepts");
    if (options.same_domain && domains.size() != n)
        throw Error(ErrorCode::ShapeError, "domain list required for the same-domain filter");
    for (auto k : eligible) {
        if (k >= n) throw Error(ErrorCode::ShapeError, "eligible index outside matrix");
        if (is_special(k)) throw Error(ErrorCode::ConfigError, "special tokens cannot be indexed");
    }
    std::vector<DenseIndex> cand(eligible.begin(), eligible.end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    std::vector<DenseIndex> table(n * m, NeighborSets::kNoNeighbor);
    std::vector<std::pair<double, DenseIndex>> scored;
    scored.reserve(cand.size());
    for (auto k : cand) {
        scored.clear();
        const auto anchor = r.row(k);
        for (auto i : cand) {
            if (i == k) continue;
            if (options.same_domain && domains[i] != domains[k]) continue;
            scored.emplace_back((r.row(i) - anchor).squaredNorm(), i);
        }
        if (scored.size() < m)
            throw Error(ErrorCode::TooFewConcepts,
                        "concept row " + std::to_string(k) + " has fewer than M candidates");
        // pair ordering is (distance, index): exactly the tie rule.
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(m), scored.end());
        for (std::size_t j = 0; j < m; ++j) table[k * m + j] = scored[j].second;
    }
    return NeighborSets(n, m, std::move(table));
}

std::vector<DenseIndex> default_eligible(const ConceptCatalog& catalog) {
    std::vector<DenseIndex> out;
    for (DenseIndex k = special::kCount; k < catalog.size(); ++k) out.push_back(k);
    return out;
}

std::vector<Domain> catalog_domains(const ConceptCatalog& catalog) {
    std::vector<Domain> out;
    out.reserve(catalog.size());
    for (const auto& c : catalog.concepts()) out.push_back(c.domain);
    return out;
}

std::string encode_neighbor_sets(const NeighborSets& sets, const nlohmann::json& provenance) {
    io::ByteWriter w;
    w.magic("MNBR");
    w.u64(sets.num_concepts());
    w.u32(static_cast<std::uint32_t>(sets.m()));
    for (auto v : sets.table()) w.u32(v);
    io::append_provenance(w, provenance);
    return w.take();
}

void save_neighbor_sets(const std::filesystem::path& path, const NeighborSets& sets,
                        const nlohmann::json& provenance) {
    io::write_file(path, encode_neighbor_sets(sets, provenance));
}

StoredNeighbors load_neighbor_sets(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader in(bytes);
    in.expect_magic("MNBR");
    const auto n = in.u64();
    const auto m = in.u32();
    if (in.remaining() / 4 / std::max<std::uint32_t>(m, 1) < n)
        throw Error(ErrorCode::ArtifactError, "neighbor table shorter than declared");
    std::vector<DenseIndex> table(n * m);
    for (auto& v : table) v = in.u32();
    for (auto v : table)
        if (v != NeighborSets::kNoNeighbor && v >= n)
            throw Error(ErrorCode::ArtifactError, "neighbor index out of range");
    StoredNeighbors out{NeighborSets(n, m, std::move(table)), io::read_provenance(in)};
    if (!in.at_end()) throw Error(ErrorCode::ArtifactError, "trailing bytes after MNBR container");
    return out;
}

}  // namespace medrep
