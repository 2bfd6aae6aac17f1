#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "medrep/io.hpp"
#include "medrep/linalg.hpp"
#include "medrep/vocab.hpp"

namespace medrep {

// Instruction text for one clinical domain; always ends with "Concept name: ".
std::string_view prompt_instruction(Domain domain);
std::string build_prompt(Domain domain, std::string_view concept_name);

struct DescriptionRecord {
    ConceptId concept_id = 0;
    std::optional<int> decile;
    std::string description;
};

std::vector<DescriptionRecord> load_descriptions(const std::filesystem::path& path);
std::vector<DescriptionRecord> parse_descriptions(std::string_view text);
std::string format_descriptions(const std::vector<DescriptionRecord>& records);

// Deterministic stand-in for a trained text encoder: signed feature hashing
// of lower-cased whitespace tokens, L2-normalized.
Vector stub_embed(std::string_view concept_name, std::string_view description, int h,
                  std::uint64_t seed);

enum class EmbeddingDType : std::uint8_t { F32 = 0, F64 = 1 };

struct EmbeddingSource {
    enum class Kind { File, Stub };
    Kind kind = Kind::Stub;
    int h = 768;
    std::uint64_t seed = 0;
    std::filesystem::path file;  // Kind::File only
};

// Row k for dense index k. Stub: [PAD] is the zero vector, other specials
// embed their literal token text.
RepresentationMatrix text_representations(const ConceptCatalog& catalog,
                                          const std::vector<DescriptionRecord>& descriptions,
                                          const EmbeddingSource& source);

// Container: "MREP", u32 version, u64 N, u32 h, u8 dtype, row-major values,
// then optional trailing blocks.
inline constexpr std::uint32_t kMatrixFormatVersion = 1;

void encode_matrix(io::ByteWriter& out, const Matrix& values, EmbeddingDType dtype);
Matrix decode_matrix(io::ByteReader& in);

struct StoredMatrix {
    RepresentationMatrix matrix;
    nlohmann::json provenance;
};

void save_embedding_matrix(const std::filesystem::path& path, const RepresentationMatrix& r,
                           EmbeddingDType dtype = EmbeddingDType::F64,
                           const nlohmann::json& provenance = nlohmann::json::object());
StoredMatrix read_embedding_file(const std::filesystem::path& path);
// Checks the row count against the catalog (ShapeError) and, when
// expected_h > 0, the width.
RepresentationMatrix load_embedding_matrix(const std::filesystem::path& path,
                                           const ConceptCatalog& catalog, int expected_h = 0);

}  // namespace medrep
