#include "medrep/description.hpp"

#include <algorithm>
#include <cctype>

#include "medrep/error.hpp"
#include "medrep/rng.hpp"

namespace medrep {

namespace {

constexpr std::string_view kConditionPrompt =
    "Instruction: Briefly explain the clinical background and regarding treatments of each "
    "concept name (condition) with less than 5 sentences. Do not include sentences that are too "
    "ordinary (such as \"further details would depend on the specific situation) and focus on "
    "describing the representative clinical features of the concept. Concept name: ";

constexpr std::string_view kDrugPrompt =
    "Instruction: Briefly explain the clinical background and purpose of each concept name "
    "(drug) with less than 5 sentences. Do not include sentences that are too ordinary (such as "
    "\"further details would depend on the specific situation) and focus on describing the "
    "representative clinical features of the concept. For explanation, if it exists in the "
    "concept name, take into account the detailed items of the concept such as ingredient, "
    "dosage form, and strength. If several drugs are contained in a concept, do not explain "
    "those drugs separately, but explain the concept name comprehensively and finish the answer "
    "with less than 5 sentences. Concept name: ";

constexpr std::string_view kMeasurementPrompt =
    "Instruction: Briefly explain the clinical background and context of each concept name "
    "(measurement) with less than 5 sentences. Do not include sentences that are too ordinary "
    "(such as \"further details would depend on the specific situation) and focus on describing "
    "the representative clinical features of the concept. For explanation, if it exists in the "
    "concept name, describe what the decile means clinically. Concept name: ";

constexpr std::string_view kProcedurePrompt =
    "Instruction: Briefly explain the clinical background and purpose of each concept name "
    "(procedure) with less than 5 sentences. Do not include sentences that are too ordinary "
    "(such as \"further details would depend on the specific situation) and focus on describing "
    "the representative clinical features of the concept. Concept name: ";

const std::vector<std::string_view> kDescriptionHeader = {"concept_id", "description"};

bool is_trim_char(unsigned char c) { return std::ispunct(c) != 0; }

}  // namespace

std::string_view prompt_instruction(Domain domain) {
    switch (domain) {
        case Domain::Condition: return kConditionPrompt;
        case Domain::Drug: return kDrugPrompt;
        case Domain::Measurement: return kMeasurementPrompt;
        case Domain::Procedure: return kProcedurePrompt;
        case Domain::Special: break;
    }
    throw Error(ErrorCode::BadDomain, "no prompt for special tokens");
}

std::string build_prompt(Domain domain, std::string_view concept_name) {
    std::string out(prompt_instruction(domain));
    out += concept_name;
    return out;
}

std::vector<DescriptionRecord> parse_descriptions(std::string_view text) {
    const auto table = io::parse_tsv(text, kDescriptionHeader);
    std::vector<DescriptionRecord> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto [id, decile] = parse_concept_token(table.rows[r][0]);
        if (table.rows[r][1].empty())
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(table.line_numbers[r]) + ": empty description");
        out.push_back({id, decile, table.rows[r][1]});
    }
    return out;
}

std::vector<DescriptionRecord> load_descriptions(const std::filesystem::path& path) {
    return parse_descriptions(io::read_file(path));
}

std::string format_descriptions(const std::vector<DescriptionRecord>& records) {
    std::string out = "concept_id\tdescription\n";
    for (const auto& r : records) {
        out += concept_token(r.concept_id, r.decile);
        out += '\t';
        out += io::escape_field(r.description);
        out += '\n';
    }
    return out;
}

Vector stub_embed(std::string_view concept_name, std::string_view description, int h,
                  std::uint64_t seed) {
    if (h <= 0) throw Error(ErrorCode::BadDimension, "embedding width must be positive");
    Vector v = Vector::Zero(h);
    const auto salt = splitmix64(seed ^ 0x5eedf00dULL);
    auto add_token = [&](std::string_view raw) {
        while (!raw.empty() && is_trim_char(static_cast<unsigned char>(raw.front()))) raw.remove_prefix(1);
        while (!raw.empty() && is_trim_char(static_cast<unsigned char>(raw.back()))) raw.remove_suffix(1);
        if (raw.empty()) return false;
        std::string token(raw);
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        const auto hv = splitmix64(io::fnv1a64(token) ^ salt);
        const auto bucket = static_cast<Eigen::Index>(hv % static_cast<std::uint64_t>(h));
        v[bucket] += (hv >> 63) ? 1.0 : -1.0;
        return true;
    };
    auto scan = [&](std::string_view text) {
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j > i) add_token(text.substr(i, j - i));
            i = j;
        }
    };
    scan(concept_name);
    scan(description);
    double norm = v.norm();
    if (norm == 0.0) {
        // No tokens, or signed collisions cancelled exactly.
        const auto hv = splitmix64(salt);
        v[static_cast<Eigen::Index>(hv % static_cast<std::uint64_t>(h))] = 1.0;
        norm = 1.0;
    }
    return v / norm;
}

RepresentationMatrix text_representations(const ConceptCatalog& catalog,
                                          const std::vector<DescriptionRecord>& descriptions,
                                          const EmbeddingSource& source) {
    if (source.kind == EmbeddingSource::Kind::File)
        return load_embedding_matrix(source.file, catalog, source.h);
    if (source.h <= 0) throw Error(ErrorCode::BadDimension, "embedding width must be positive");

    std::unordered_map<std::string, const std::string*> by_token;
    for (const auto& d : descriptions) by_token[concept_token(d.concept_id, d.decile)] = &d.description;

    RepresentationMatrix r{Matrix::Zero(static_cast<Eigen::Index>(catalog.size()), source.h),
                           RepresentationKind::Text};
    for (DenseIndex k = 0; k < catalog.size(); ++k) {
        if (k == special::kPad) continue;
        const auto& c = catalog[k];
        std::string_view desc;
        if (auto it = by_token.find(concept_token(c.concept_id, c.decile)); it != by_token.end())
            desc = *it->second;
        r.values.row(k) = stub_embed(c.name, desc, source.h, source.seed).transpose();
    }
    return r;
}

void encode_matrix(io::ByteWriter& out, const Matrix& values, EmbeddingDType dtype) {
    out.magic("MREP");
    out.u32(kMatrixFormatVersion);
    out.u64(static_cast<std::uint64_t>(values.rows()));
    out.u32(static_cast<std::uint32_t>(values.cols()));
    out.u8(static_cast<std::uint8_t>(dtype));
    const double* data = values.data();
    const auto count = static_cast<std::size_t>(values.size());
    for (std::size_t i = 0; i < count; ++i) {
        if (dtype == EmbeddingDType::F32)
            out.f32(static_cast<float>(data[i]));
        else
            out.f64(data[i]);
    }
}

Matrix decode_matrix(io::ByteReader& in) {
    in.expect_magic("MREP");
    const auto version = in.u32();
    if (version != kMatrixFormatVersion)
        throw Error(ErrorCode::ArtifactError, "unsupported MREP version " + std::to_string(version));
    const auto n = in.u64();
    const auto h = in.u32();
    const auto dtype = in.u8();
    if (dtype > 1) throw Error(ErrorCode::ArtifactError, "unknown dtype");
    const std::size_t width = dtype == 0 ? 4 : 8;
    if (n != 0 && h != 0 && in.remaining() / width / h < n)
        throw Error(ErrorCode::ShapeError, "matrix payload shorter than declared N x h");
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(h));
    double* data = m.data();
    for (std::size_t i = 0; i < n * h; ++i) data[i] = dtype == 0 ? in.f32() : in.f64();
    return m;
}

void save_embedding_matrix(const std::filesystem::path& path, const RepresentationMatrix& r,
                           EmbeddingDType dtype, const nlohmann::json& provenance) {
    io::ByteWriter out;
    encode_matrix(out, r.values, dtype);
    auto prov = provenance;
    prov["kind"] = r.kind == RepresentationKind::Text ? "text" : "graph";
    io::append_provenance(out, prov);
    io::write_file(path, out.bytes());
}

StoredMatrix read_embedding_file(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader in(bytes);
    StoredMatrix stored;
    stored.matrix.values = decode_matrix(in);
    // Checkpoints carry a CKPT block before the provenance trailer.
    if (in.remaining() >= 4 && std::string_view(bytes).substr(in.offset(), 4) == "CKPT") {
        in.expect_magic("CKPT");
        const auto skip = in.u64();
        if (skip > in.remaining()) throw Error(ErrorCode::ArtifactError, "truncated CKPT block");
        for (std::uint64_t i = 0; i < skip; ++i) in.u8();
    }
    stored.provenance = io::read_provenance(in);
    if (!in.at_end()) throw Error(ErrorCode::ArtifactError, "trailing bytes after MREP container");
    stored.matrix.kind = stored.provenance.value("kind", "text") == "graph"
                             ? RepresentationKind::Graph
                             : RepresentationKind::Text;
    return stored;
}

RepresentationMatrix load_embedding_matrix(const std::filesystem::path& path,
                                           const ConceptCatalog& catalog, int expected_h) {
    auto stored = read_embedding_file(path);
    const auto& m = stored.matrix.values;
    if (static_cast<std::size_t>(m.rows()) != catalog.size())
        throw Error(ErrorCode::ShapeError, "embedding rows " + std::to_string(m.rows()) +
                                               " != catalog size " + std::to_string(catalog.size()));
    if (expected_h > 0 && m.cols() != expected_h)
        throw Error(ErrorCode::ShapeError, "embedding width " + std::to_string(m.cols()) +
                                               " != expected " + std::to_string(expected_h));
    return std::move(stored.matrix);
}

}  // namespace medrep
