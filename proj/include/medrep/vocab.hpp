#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace medrep {

// Numeric values double as the trajectory domain index.
enum class Domain : std::uint8_t {
    Special = 0,
    Condition = 1,
    Drug = 2,
    Measurement = 3,
    Procedure = 4,
};

std::string_view to_string(Domain d);
Domain parse_domain(std::string_view text);  // throws BadDomain

using ConceptId = std::int64_t;
using DenseIndex = std::uint32_t;

struct Concept {
    ConceptId concept_id = 0;
    std::string name;
    Domain domain = Domain::Special;
    std::optional<int> decile;  // measurement variants only, 0..9
};

// Reserved rows. Special concepts use negative ids so they cannot collide
// with vocabulary ids.
namespace special {
inline constexpr DenseIndex kPad = 0;
inline constexpr DenseIndex kCls = 1;
inline constexpr DenseIndex kSep = 2;
inline constexpr DenseIndex kUnk = 3;
inline constexpr DenseIndex kCount = 4;
inline constexpr ConceptId kPadId = -1;
inline constexpr ConceptId kClsId = -2;
inline constexpr ConceptId kSepId = -3;
inline constexpr ConceptId kUnkId = -4;
}  // namespace special

bool is_special(DenseIndex k);

// Token used in TSV files: "<id>" or "<id>_<decile>".
std::string concept_token(ConceptId id, std::optional<int> decile);
std::pair<ConceptId, std::optional<int>> parse_concept_token(std::string_view token);

class ConceptCatalog {
public:
    ConceptCatalog();  // specials only

    // Validates and densely indexes; special tokens are placed at rows 0..3
    // whether or not they are present in `concepts`.
    static ConceptCatalog from_concepts(std::vector<Concept> concepts);

    std::size_t size() const { return concepts_.size(); }
    const Concept& operator[](DenseIndex k) const { return concepts_[k]; }
    const std::vector<Concept>& concepts() const { return concepts_; }

    std::optional<DenseIndex> find(ConceptId id, std::optional<int> decile = std::nullopt) const;
    // Every row carrying this id: the base row and/or its decile variants.
    std::span<const DenseIndex> rows_for(ConceptId id) const;
    bool has_decile_variants(ConceptId id) const;

    Domain domain(DenseIndex k) const { return concepts_[k].domain; }

private:
    std::vector<Concept> concepts_;
    std::unordered_map<ConceptId, std::vector<DenseIndex>> by_id_;
};

ConceptCatalog load_catalog(const std::filesystem::path& concept_file);
ConceptCatalog parse_catalog(std::string_view text);
std::string format_catalog(const ConceptCatalog& catalog);
void save_catalog(const ConceptCatalog& catalog, const std::filesystem::path& path,
                  std::string_view preamble = {});

// FNV-1a of format_catalog; identifies the vocabulary an artifact was built on.
std::uint64_t catalog_checksum(const ConceptCatalog& catalog);

std::string decile_name(std::string_view base_name, int decile);

// Each listed measurement concept is replaced in place by ten variants.
ConceptCatalog expand_measurement_deciles(const ConceptCatalog& catalog,
                                          const std::set<ConceptId>& numeric_measurement_ids);

class RelationGraph {
public:
    RelationGraph() = default;

    // Drops self-loops and duplicates; throws UnknownConcept for endpoints
    // outside [0, num_nodes).
    static RelationGraph from_pairs(std::size_t num_nodes,
                                    std::span<const std::pair<DenseIndex, DenseIndex>> pairs);

    std::size_t num_nodes() const { return adjacency_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    // Canonical (i < j), lexicographically sorted.
    const std::vector<std::pair<DenseIndex, DenseIndex>>& edges() const { return edges_; }
    std::span<const DenseIndex> neighbors(DenseIndex i) const { return adjacency_[i]; }
    std::size_t degree(DenseIndex i) const { return adjacency_[i].size(); }

private:
    std::vector<std::pair<DenseIndex, DenseIndex>> edges_;
    std::vector<std::vector<DenseIndex>> adjacency_;
};

// Endpoints resolve through the catalog; an id with decile variants
// attaches the edge to every variant.
RelationGraph load_graph(const std::filesystem::path& edge_file, const ConceptCatalog& catalog);
RelationGraph parse_graph(std::string_view text, const ConceptCatalog& catalog);
std::string format_graph(const RelationGraph& graph, const ConceptCatalog& catalog);

}  // namespace medrep
