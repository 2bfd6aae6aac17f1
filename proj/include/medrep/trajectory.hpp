#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "medrep/labels.hpp"
#include "medrep/records.hpp"
#include "medrep/vocab.hpp"

namespace medrep {

inline constexpr std::size_t kMaxTrajectoryLength = 2048;
inline constexpr std::uint32_t kMaxAge = 119;

// Nine non-decreasing cut points per binned measurement concept.
class DecileBins {
public:
    using Cuts = std::array<double, 9>;

    void set(ConceptId id, const Cuts& cuts);
    bool contains(ConceptId id) const { return cuts_.count(id) != 0; }
    const Cuts& cuts(ConceptId id) const;
    const std::map<ConceptId, Cuts>& all() const { return cuts_; }

private:
    std::map<ConceptId, Cuts> cuts_;
};

inline constexpr std::size_t kMinValuesForBinning = 10;

// Empirical 10%..90% quantiles with linear interpolation between order
// statistics. Concepts with fewer than 10 values stay unbinned.
DecileBins fit_decile_bins(std::span<const ClinicalRecord> training_records);

// Number of cut points strictly below `value`, in [0, 9]. Throws NotBinned.
int bin_measurement(const DecileBins& bins, ConceptId concept_id, double value);

// Per (patient, concept, calendar hour) keeps the earliest measurement.
std::vector<ClinicalRecord> dedup_hourly_measurements(std::span<const ClinicalRecord> records);

struct PatientTrajectory {
    std::string patient_id;
    std::vector<std::uint32_t> concept_idx;
    std::vector<std::uint32_t> age_idx;
    std::vector<std::uint32_t> visit_idx;
    std::vector<std::uint32_t> record_idx;
    std::vector<std::uint32_t> domain_idx;
    std::vector<TaskLabel> labels;

    std::size_t size() const { return concept_idx.size(); }
    bool aligned() const;
    // Positions before the trailing padding.
    std::size_t unpadded_size() const;
    void push(std::uint32_t concept_index, std::uint32_t age, std::uint32_t visit, std::uint32_t record,
              std::uint32_t domain);

    bool operator==(const PatientTrajectory&) const = default;
};

int age_in_years(Timestamp birth, Timestamp at);

// [CLS], then each visit's concepts in time order closed by [SEP]. Only
// records strictly before `as_of` are used. A visit is a maximal run of
// consecutive records sharing a visit_id. Throws OrderError on unsorted
// input or mixed patients.
PatientTrajectory build_trajectory(std::span<const ClinicalRecord> patient_records,
                                   const ConceptCatalog& catalog, const DecileBins& bins,
                                   Timestamp birth, Timestamp as_of);

// Non-overlapping chunks of at most max_len, each starting with [CLS].
std::vector<PatientTrajectory> slice_trajectory(const PatientTrajectory& t,
                                                std::size_t max_len = kMaxTrajectoryLength);

// Right-pads every stream with zeros ([PAD] / domain 0). Throws TooLong.
PatientTrajectory pad_trajectory(const PatientTrajectory& t, std::size_t max_len = kMaxTrajectoryLength);

// One labeled trajectory per patient with a `task` label, built from the
// records strictly before that label's prediction time. Longer histories
// keep their most recent slice. Records must be sorted (sort_records).
std::vector<PatientTrajectory> build_task_cohort(std::span<const ClinicalRecord> sorted_records,
                                                 std::span<const PatientInfo> patients,
                                                 std::span<const VisitRecord> visits, const ConceptCatalog& catalog,
                                                 const DecileBins& bins, Task task,
                                                 std::size_t max_len = kMaxTrajectoryLength);

struct TrajectoryDataset {
    std::size_t max_len = kMaxTrajectoryLength;
    std::vector<PatientTrajectory> trajectories;
    nlohmann::json provenance = nlohmann::json::object();
};

// "MTRJ", u64 count, u32 max_len, then per trajectory: patient id,
// u32 length, five u32 streams, label block; provenance trailer.
std::string encode_dataset(const TrajectoryDataset& dataset);
TrajectoryDataset decode_dataset(std::string_view bytes);
void save_dataset(const std::filesystem::path& path, const TrajectoryDataset& dataset);
TrajectoryDataset load_dataset(const std::filesystem::path& path);

}  // namespace medrep
