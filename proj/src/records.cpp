#include "medrep/records.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "medrep/error.hpp"
#include "medrep/io.hpp"

namespace medrep {

namespace {

const std::vector<std::string_view> kRecordHeader = {"patient_id", "concept_id", "domain",
                                                     "timestamp",  "value",      "visit_id"};
const std::vector<std::string_view> kPatientHeader = {"patient_id", "birth_date"};
const std::vector<std::string_view> kVisitHeader = {"patient_id", "visit_id", "admission",
                                                    "discharge",  "died",     "is_index"};

int parse_int(std::string_view s, std::string_view what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw Error(ErrorCode::ParseError, "bad " + std::string(what) + " '" + std::string(s) + "'");
    return v;
}

bool parse_flag(std::string_view s) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw Error(ErrorCode::ParseError, "bad flag '" + std::string(s) + "'");
}

template <typename Fn>
auto with_line(std::size_t line, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), "line " + std::to_string(line) + ": " + e.what());
    }
}

}  // namespace

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour, int minute) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) throw Error(ErrorCode::ParseError, "invalid calendar date");
    return time_point_cast<minutes>(sys_days{ymd}) + hours{hour} + minutes{minute};
}

Timestamp parse_timestamp(std::string_view text) {
    if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
    // YYYY-MM-DD[THH:MM[:SS]]
    if (text.size() < 10 || text[4] != '-' || text[7] != '-')
        throw Error(ErrorCode::ParseError, "bad timestamp '" + std::string(text) + "'");
    const int y = parse_int(text.substr(0, 4), "year");
    const int mo = parse_int(text.substr(5, 2), "month");
    const int d = parse_int(text.substr(8, 2), "day");
    int hh = 0, mm = 0;
    if (text.size() > 10) {
        if ((text[10] != 'T' && text[10] != ' ') || text.size() < 16 || text[13] != ':')
            throw Error(ErrorCode::ParseError, "bad timestamp '" + std::string(text) + "'");
        hh = parse_int(text.substr(11, 2), "hour");
        mm = parse_int(text.substr(14, 2), "minute");
        if (text.size() > 16) {
            if (text.size() != 19 || text[16] != ':')
                throw Error(ErrorCode::ParseError, "bad timestamp '" + std::string(text) + "'");
            parse_int(text.substr(17, 2), "second");
        }
    }
    if (mo < 1 || mo > 12 || hh < 0 || hh > 23 || mm < 0 || mm > 59)
        throw Error(ErrorCode::ParseError, "timestamp field out of range '" + std::string(text) + "'");
    return make_timestamp(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), hh, mm);
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const auto mins = (t - day).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(mins / 60), static_cast<int>(mins % 60));
    return buf;
}

Timestamp midnight_of(Timestamp t) {
    return std::chrono::time_point_cast<std::chrono::minutes>(std::chrono::floor<std::chrono::days>(t));
}

std::vector<ClinicalRecord> parse_records(std::string_view text) {
    const auto table = io::parse_tsv(text, kRecordHeader);
    std::vector<ClinicalRecord> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        out.push_back(with_line(table.line_numbers[r], [&] {
            ClinicalRecord rec;
            rec.patient_id = row[0];
            auto [id, decile] = parse_concept_token(row[1]);
            if (decile) throw Error(ErrorCode::ParseError, "records carry base concept ids only");
            rec.concept_id = id;
            rec.domain = parse_domain(row[2]);
            if (rec.domain == Domain::Special) throw Error(ErrorCode::BadDomain, "special record domain");
            rec.time = parse_timestamp(row[3]);
            if (!row[4].empty()) {
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(row[4].data(), row[4].data() + row[4].size(), v);
                if (ec != std::errc{} || ptr != row[4].data() + row[4].size())
                    throw Error(ErrorCode::ParseError, "bad value '" + row[4] + "'");
                if (rec.domain != Domain::Measurement)
                    throw Error(ErrorCode::ParseError, "numeric value on non-measurement record");
                rec.value = v;
            }
            rec.visit_id = row[5];
            return rec;
        }));
    }
    return out;
}

std::vector<ClinicalRecord> load_records(const std::filesystem::path& path) {
    try {
        return parse_records(io::read_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::string format_records(std::span<const ClinicalRecord> records) {
    std::string out = "patient_id\tconcept_id\tdomain\ttimestamp\tvalue\tvisit_id\n";
    char buf[64];
    for (const auto& r : records) {
        out += io::escape_field(r.patient_id);
        out += '\t';
        out += std::to_string(r.concept_id);
        out += '\t';
        out += to_string(r.domain);
        out += '\t';
        out += format_timestamp(r.time);
        out += '\t';
        if (r.value) {
            std::snprintf(buf, sizeof buf, "%.17g", *r.value);
            out += buf;
        }
        out += '\t';
        out += io::escape_field(r.visit_id);
        out += '\n';
    }
    return out;
}

std::vector<PatientInfo> parse_patients(std::string_view text) {
    const auto table = io::parse_tsv(text, kPatientHeader);
    std::vector<PatientInfo> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        out.push_back(with_line(table.line_numbers[r], [&] {
            return PatientInfo{table.rows[r][0], parse_timestamp(table.rows[r][1])};
        }));
    return out;
}

std::vector<PatientInfo> load_patients(const std::filesystem::path& path) {
    return parse_patients(io::read_file(path));
}

std::string format_patients(std::span<const PatientInfo> patients) {
    std::string out = "patient_id\tbirth_date\n";
    for (const auto& p : patients)
        out += io::escape_field(p.patient_id) + "\t" + format_timestamp(p.birth) + "\n";
    return out;
}

std::vector<VisitRecord> parse_visits(std::string_view text) {
    const auto table = io::parse_tsv(text, kVisitHeader);
    std::vector<VisitRecord> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        out.push_back(with_line(table.line_numbers[r], [&] {
            return VisitRecord{row[0], row[1], parse_timestamp(row[2]), parse_timestamp(row[3]),
                               parse_flag(row[4]), parse_flag(row[5])};
        }));
    }
    return out;
}

std::vector<VisitRecord> load_visits(const std::filesystem::path& path) {
    return parse_visits(io::read_file(path));
}

std::string format_visits(std::span<const VisitRecord> visits) {
    std::string out = "patient_id\tvisit_id\tadmission\tdischarge\tdied\tis_index\n";
    for (const auto& v : visits) {
        out += io::escape_field(v.patient_id) + "\t" + io::escape_field(v.visit_id) + "\t" +
               format_timestamp(v.admission) + "\t" + format_timestamp(v.discharge) + "\t" +
               (v.died ? "1" : "0") + "\t" + (v.is_index ? "1" : "0") + "\n";
    }
    return out;
}

void sort_records(std::vector<ClinicalRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
        return a.time < b.time;
    });
}

std::map<std::string, std::span<const ClinicalRecord>> group_by_patient(
    std::span<const ClinicalRecord> sorted_records) {
    std::map<std::string, std::span<const ClinicalRecord>> out;
    std::size_t i = 0;
    while (i < sorted_records.size()) {
        std::size_t j = i;
        while (j < sorted_records.size() && sorted_records[j].patient_id == sorted_records[i].patient_id) ++j;
        if (out.count(sorted_records[i].patient_id))
            throw Error(ErrorCode::OrderError, "records of patient " + sorted_records[i].patient_id +
                                                   " are not contiguous");
        out.emplace(sorted_records[i].patient_id, sorted_records.subspan(i, j - i));
        i = j;
    }
    return out;
}

}  // namespace medrep
