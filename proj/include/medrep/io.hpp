#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace medrep::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Little-endian binary encoding into an in-memory buffer.
class ByteWriter {
public:
    void magic(std::string_view four_cc);
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f32(float v);
    void f64(double v);
    void str(std::string_view s);  // u32 length prefix

    const std::string& bytes() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

// Bounds-checked reader; any overrun is an ArtifactError.
class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    void expect_magic(std::string_view four_cc);
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    float f32();
    double f64();
    std::string str();

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const;

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

// Trailing provenance block shared by every binary container:
// magic "PROV", u32 length, UTF-8 JSON document.
void append_provenance(ByteWriter& out, const nlohmann::json& prov);
nlohmann::json read_provenance(ByteReader& in);

// TSV fields escape backslash, tab and newline.
std::string escape_field(std::string_view field);
std::string unescape_field(std::string_view field);
std::vector<std::string_view> split_tabs(std::string_view line);

struct TsvTable {
    std::vector<std::string> comments;  // leading "# ..." lines, without the marker
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // unescaped fields
    std::vector<std::size_t> line_numbers;       // 1-based source line of each row
};

// Parses a TSV with an exact expected header. Leading '#' lines are kept as
// comments. Throws ParseError on header or column-count mismatch.
TsvTable parse_tsv(std::string_view text, const std::vector<std::string_view>& expected_header,
                   std::size_t min_columns = 0);
TsvTable load_tsv(const std::filesystem::path& path,
                  const std::vector<std::string_view>& expected_header, std::size_t min_columns = 0);

std::string comment_lines(const nlohmann::json& prov);

}  // namespace medrep::io
