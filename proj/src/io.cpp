#include "medrep/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "medrep/error.hpp"
#include "medrep/rng.hpp"

namespace medrep {

std::string serialize_rng(const Rng& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

Rng deserialize_rng(const std::string& state) {
    Rng rng;
    std::istringstream is(state);
    is >> rng;
    if (!is) throw Error(ErrorCode::ArtifactError, "corrupt rng state");
    return rng;
}

}  // namespace medrep

namespace medrep::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoError, "read failed: " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

void ByteWriter::magic(std::string_view four_cc) { buf_.append(four_cc.substr(0, 4)); }

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
}

void ByteReader::need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
        throw Error(ErrorCode::ArtifactError, "truncated container at offset " + std::to_string(pos_));
}

void ByteReader::expect_magic(std::string_view four_cc) {
    need(4);
    if (bytes_.substr(pos_, 4) != four_cc)
        throw Error(ErrorCode::ArtifactError, "bad magic, expected " + std::string(four_cc));
    pos_ += 4;
}

std::uint8_t ByteReader::u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
    const auto n = u32();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
}

void append_provenance(ByteWriter& out, const nlohmann::json& prov) {
    out.magic("PROV");
    out.str(prov.dump());
}

nlohmann::json read_provenance(ByteReader& in) {
    if (in.at_end()) return nlohmann::json::object();
    in.expect_magic("PROV");
    const auto text = in.str();
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ArtifactError, std::string("corrupt provenance block: ") + e.what());
    }
}

std::string escape_field(std::string_view field) {
    std::string out;
    out.reserve(field.size());
    for (char c : field) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::string unescape_field(std::string_view field) {
    std::string out;
    out.reserve(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (field[i] == '\\' && i + 1 < field.size()) {
            const char n = field[++i];
            switch (n) {
                case 't': out += '\t'; break;
                case 'n': out += '\n'; break;
                case 'r': out += '\r'; break;
                case '\\': out += '\\'; break;
                default: out += '\\'; out += n;
            }
        } else {
            out += field[i];
        }
    }
    return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

TsvTable parse_tsv(std::string_view text, const std::vector<std::string_view>& expected_header,
                   std::size_t min_columns) {
    TsvTable table;
    const std::size_t width = expected_header.size();
    if (min_columns == 0) min_columns = width;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!have_header) {
            if (!line.empty() && line.front() == '#') {
                auto body = line.substr(1);
                if (!body.empty() && body.front() == ' ') body.remove_prefix(1);
                table.comments.emplace_back(body);
                continue;
            }
            const auto fields = split_tabs(line);
            if (fields.size() != width ||
                !std::equal(fields.begin(), fields.end(), expected_header.begin()))
                throw Error(ErrorCode::ParseError,
                            "unexpected header at line " + std::to_string(line_no));
            for (auto f : fields) table.header.emplace_back(f);
            have_header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() < min_columns || fields.size() > width)
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(width) + " columns, got " +
                                                   std::to_string(fields.size()));
        std::vector<std::string> row;
        row.reserve(width);
        for (auto f : fields) row.push_back(unescape_field(f));
        row.resize(width);
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw Error(ErrorCode::ParseError, "missing header");
    return table;
}

TsvTable load_tsv(const std::filesystem::path& path,
                  const std::vector<std::string_view>& expected_header, std::size_t min_columns) {
    const auto text = read_file(path);
    try {
        return parse_tsv(text, expected_header, min_columns);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::string comment_lines(const nlohmann::json& prov) {
    std::string out;
    for (const auto& [key, value] : prov.items()) {
        out += "# " + key + "=" + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
    }
    return out;
}

}  // namespace medrep::io
