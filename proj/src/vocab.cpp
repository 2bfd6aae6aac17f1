#include "medrep/vocab.hpp"

#include <algorithm>
#include <charconv>

#include "medrep/error.hpp"
#include "medrep/io.hpp"

namespace medrep {

namespace {

const std::vector<std::string_view> kConceptHeader = {"concept_id", "name", "domain"};
const std::vector<std::string_view> kEdgeHeader = {"concept_id_1", "concept_id_2"};

std::vector<Concept> special_concepts() {
    return {
        {special::kPadId, "[PAD]", Domain::Special, std::nullopt},
        {special::kClsId, "[CLS]", Domain::Special, std::nullopt},
        {special::kSepId, "[SEP]", Domain::Special, std::nullopt},
        {special::kUnkId, "[UNK]", Domain::Special, std::nullopt},
    };
}

bool is_special_id(ConceptId id) { return id <= special::kPadId && id >= special::kUnkId; }

}  // namespace

std::string_view to_string(Domain d) {
    switch (d) {
        case Domain::Special: return "special";
        case Domain::Condition: return "condition";
        case Domain::Drug: return "drug";
        case Domain::Measurement: return "measurement";
        case Domain::Procedure: return "procedure";
    }
    return "special";
}

Domain parse_domain(std::string_view text) {
    if (text == "special") return Domain::Special;
    if (text == "condition") return Domain::Condition;
    if (text == "drug") return Domain::Drug;
    if (text == "measurement") return Domain::Measurement;
    if (text == "procedure") return Domain::Procedure;
    throw Error(ErrorCode::BadDomain, "unknown domain '" + std::string(text) + "'");
}

bool is_special(DenseIndex k) { return k < special::kCount; }

std::string concept_token(ConceptId id, std::optional<int> decile) {
    auto s = std::to_string(id);
    if (decile) s += "_" + std::to_string(*decile);
    return s;
}

std::pair<ConceptId, std::optional<int>> parse_concept_token(std::string_view token) {
    std::optional<int> decile;
    auto underscore = token.find('_');
    std::string_view id_part = token.substr(0, underscore);
    if (underscore != std::string_view::npos) {
        auto d = token.substr(underscore + 1);
        if (d.size() != 1 || d[0] < '0' || d[0] > '9')
            throw Error(ErrorCode::ParseError, "bad decile suffix in '" + std::string(token) + "'");
        decile = d[0] - '0';
    }
    ConceptId id = 0;
    auto [ptr, ec] = std::from_chars(id_part.data(), id_part.data() + id_part.size(), id);
    if (ec != std::errc{} || ptr != id_part.data() + id_part.size() || id_part.empty())
        throw Error(ErrorCode::ParseError, "bad concept id '" + std::string(token) + "'");
    return {id, decile};
}

ConceptCatalog::ConceptCatalog() : concepts_(special_concepts()) {
    for (DenseIndex k = 0; k < concepts_.size(); ++k) by_id_[concepts_[k].concept_id].push_back(k);
}

ConceptCatalog ConceptCatalog::from_concepts(std::vector<Concept> concepts) {
    ConceptCatalog cat;
    cat.by_id_.clear();
    cat.concepts_.reserve(concepts.size() + special::kCount);
    for (auto& c : concepts) {
        if (c.domain == Domain::Special || is_special_id(c.concept_id)) {
            // Specials are re-injected at fixed rows; a file copy must match.
            const bool reserved = is_special_id(c.concept_id) && c.domain == Domain::Special &&
                                  !c.decile;
            if (!reserved)
                throw Error(ErrorCode::BadDomain,
                            "concept " + std::to_string(c.concept_id) +
                                " conflicts with the reserved special tokens");
            continue;
        }
        if (c.decile) {
            if (c.domain != Domain::Measurement)
                throw Error(ErrorCode::BadDomain, "decile variant on non-measurement concept " +
                                                      std::to_string(c.concept_id));
            if (*c.decile < 0 || *c.decile > 9)
                throw Error(ErrorCode::ParseError, "decile out of range for concept " +
                                                       std::to_string(c.concept_id));
        }
        cat.concepts_.push_back(std::move(c));
    }
    for (DenseIndex k = 0; k < cat.concepts_.size(); ++k) {
        const auto& c = cat.concepts_[k];
        auto& rows = cat.by_id_[c.concept_id];
        for (auto r : rows) {
            const auto& other = cat.concepts_[r];
            // A base row and its variants may not coexist either: the id
            // must resolve unambiguously for records without values.
            if (other.decile == c.decile || !other.decile || !c.decile)
                throw Error(ErrorCode::DuplicateConcept,
                            "duplicate concept_id " + concept_token(c.concept_id, c.decile));
        }
        rows.push_back(k);
    }
    return cat;
}

std::optional<DenseIndex> ConceptCatalog::find(ConceptId id, std::optional<int> decile) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    for (auto k : it->second)
        if (concepts_[k].decile == decile) return k;
    return std::nullopt;
}

std::span<const DenseIndex> ConceptCatalog::rows_for(ConceptId id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return {};
    return it->second;
}

bool ConceptCatalog::has_decile_variants(ConceptId id) const {
    auto rows = rows_for(id);
    return !rows.empty() && concepts_[rows.front()].decile.has_value();
}

ConceptCatalog parse_catalog(std::string_view text) {
    const auto table = io::parse_tsv(text, kConceptHeader);
    std::vector<Concept> concepts;
    concepts.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        auto [id, decile] = parse_concept_token(row[0]);
        concepts.push_back({id, row[1], parse_domain(row[2]), decile});
    }
    return ConceptCatalog::from_concepts(std::move(concepts));
}

ConceptCatalog load_catalog(const std::filesystem::path& concept_file) {
    const auto text = io::read_file(concept_file);
    try {
        return parse_catalog(text);
    } catch (const Error& e) {
        throw Error(e.code(), concept_file.string() + ": " + e.what());
    }
}

std::string format_catalog(const ConceptCatalog& catalog) {
    std::string out = "concept_id\tname\tdomain\n";
    for (const auto& c : catalog.concepts()) {
        out += concept_token(c.concept_id, c.decile);
        out += '\t';
        out += io::escape_field(c.name);
        out += '\t';
        out += to_string(c.domain);
        out += '\n';
    }
    return out;
}

std::uint64_t catalog_checksum(const ConceptCatalog& catalog) { return io::fnv1a64(format_catalog(catalog)); }

void save_catalog(const ConceptCatalog& catalog, const std::filesystem::path& path,
                  std::string_view preamble) {
    io::write_file(path, std::string(preamble) + format_catalog(catalog));
}

std::string decile_name(std::string_view base_name, int decile) {
    static constexpr const char* suffix[] = {"th", "st", "nd", "rd", "th",
                                             "th", "th", "th", "th", "th"};
    return std::string(base_name) + " (" + std::to_string(decile) + suffix[decile] + " decile)";
}

ConceptCatalog expand_measurement_deciles(const ConceptCatalog& catalog,
                                          const std::set<ConceptId>& numeric_measurement_ids) {
    for (auto id : numeric_measurement_ids) {
        auto k = catalog.find(id);
        if (!k) {
            if (catalog.has_decile_variants(id)) continue;  // already expanded
            throw Error(ErrorCode::UnknownConcept, "concept " + std::to_string(id));
        }
        if (catalog.domain(*k) != Domain::Measurement)
            throw Error(ErrorCode::BadDomain,
                        "concept " + std::to_string(id) + " is not a measurement");
    }
    std::vector<Concept> out;
    out.reserve(catalog.size() + 9 * numeric_measurement_ids.size());
    for (DenseIndex k = special::kCount; k < catalog.size(); ++k) {
        const auto& c = catalog[k];
        if (!c.decile && numeric_measurement_ids.count(c.concept_id)) {
            for (int d = 0; d < 10; ++d)
                out.push_back({c.concept_id, decile_name(c.name, d), c.domain, d});
        } else {
            out.push_back(c);
        }
    }
    return ConceptCatalog::from_concepts(std::move(out));
}

RelationGraph RelationGraph::from_pairs(std::size_t num_nodes,
                                        std::span<const std::pair<DenseIndex, DenseIndex>> pairs) {
    RelationGraph g;
    g.edges_.reserve(pairs.size());
    for (auto [a, b] : pairs) {
        if (a >= num_nodes || b >= num_nodes)
            throw Error(ErrorCode::UnknownConcept, "edge endpoint outside [0, N)");
        if (a == b) continue;
        g.edges_.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(g.edges_.begin(), g.edges_.end());
    g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());
    g.adjacency_.assign(num_nodes, {});
    for (auto [a, b] : g.edges_) {
        g.adjacency_[a].push_back(b);
        g.adjacency_[b].push_back(a);
    }
    for (auto& nbrs : g.adjacency_) std::sort(nbrs.begin(), nbrs.end());
    return g;
}

RelationGraph parse_graph(std::string_view text, const ConceptCatalog& catalog) {
    const auto table = io::parse_tsv(text, kEdgeHeader);
    std::vector<std::pair<DenseIndex, DenseIndex>> pairs;
    pairs.reserve(table.rows.size());
    auto resolve = [&](const std::string& token, std::size_t line) {
        auto [id, decile] = parse_concept_token(token);
        std::vector<DenseIndex> rows;
        if (decile) {
            if (auto k = catalog.find(id, decile)) rows.push_back(*k);
        } else {
            auto span = catalog.rows_for(id);
            rows.assign(span.begin(), span.end());
        }
        if (rows.empty())
            throw Error(ErrorCode::UnknownConcept,
                        "line " + std::to_string(line) + ": concept " + token + " not in catalog");
        return rows;
    };
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto lhs = resolve(table.rows[r][0], table.line_numbers[r]);
        const auto rhs = resolve(table.rows[r][1], table.line_numbers[r]);
        for (auto a : lhs)
            for (auto b : rhs) pairs.emplace_back(a, b);
    }
    return RelationGraph::from_pairs(catalog.size(), pairs);
}

RelationGraph load_graph(const std::filesystem::path& edge_file, const ConceptCatalog& catalog) {
    const auto text = io::read_file(edge_file);
    try {
        return parse_graph(text, catalog);
    } catch (const Error& e) {
        throw Error(e.code(), edge_file.string() + ": " + e.what());
    }
}

std::string format_graph(const RelationGraph& graph, const ConceptCatalog& catalog) {
    std::string out = "concept_id_1\tconcept_id_2\n";
    for (auto [a, b] : graph.edges()) {
        out += concept_token(catalog[a].concept_id, catalog[a].decile);
        out += '\t';
        out += concept_token(catalog[b].concept_id, catalog[b].decile);
        out += '\n';
    }
    return out;
}

}  // namespace medrep
