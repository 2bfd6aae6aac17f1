#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medrep/vocab.hpp"

namespace medrep {

// UTC, minute precision.
using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM" and "YYYY-MM-DDTHH:MM:SS",
// with an optional trailing 'Z'. Seconds are truncated.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);
Timestamp midnight_of(Timestamp t);
Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0);

struct ClinicalRecord {
    std::string patient_id;
    ConceptId concept_id = 0;
    Domain domain = Domain::Condition;
    Timestamp time{};
    std::optional<double> value;  // measurements only
    std::string visit_id;

    bool operator==(const ClinicalRecord&) const = default;
};

std::vector<ClinicalRecord> parse_records(std::string_view text);
std::vector<ClinicalRecord> load_records(const std::filesystem::path& path);
std::string format_records(std::span<const ClinicalRecord> records);

struct PatientInfo {
    std::string patient_id;
    Timestamp birth{};
};

std::vector<PatientInfo> load_patients(const std::filesystem::path& path);
std::vector<PatientInfo> parse_patients(std::string_view text);
std::string format_patients(std::span<const PatientInfo> patients);

struct VisitRecord {
    std::string patient_id;
    std::string visit_id;
    Timestamp admission{};
    Timestamp discharge{};
    bool died = false;
    bool is_index = false;  // the hospitalization the outcome tasks refer to
};

std::vector<VisitRecord> load_visits(const std::filesystem::path& path);
std::vector<VisitRecord> parse_visits(std::string_view text);
std::string format_visits(std::span<const VisitRecord> visits);

// Stable sort by (patient, time).
void sort_records(std::vector<ClinicalRecord>& records);

// Contiguous per-patient ranges of an already sorted record list.
std::map<std::string, std::span<const ClinicalRecord>> group_by_patient(
    std::span<const ClinicalRecord> sorted_records);

}  // namespace medrep
