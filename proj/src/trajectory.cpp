#include "medrep/trajectory.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "medrep/error.hpp"
#include "medrep/io.hpp"

namespace medrep {

void DecileBins::set(ConceptId id, const Cuts& cuts) {
    if (!std::is_sorted(cuts.begin(), cuts.end()))
        throw Error(ErrorCode::ConfigError, "decile cut points must be non-decreasing");
    cuts_[id] = cuts;
}

const DecileBins::Cuts& DecileBins::cuts(ConceptId id) const {
    auto it = cuts_.find(id);
    if (it == cuts_.end()) throw Error(ErrorCode::NotBinned, "concept " + std::to_string(id));
    return it->second;
}

DecileBins fit_decile_bins(std::span<const ClinicalRecord> training_records) {
    std::map<ConceptId, std::vector<double>> values;
    for (const auto& r : training_records)
        if (r.domain == Domain::Measurement && r.value) values[r.concept_id].push_back(*r.value);
    DecileBins bins;
    for (auto& [id, v] : values) {
        if (v.size() < kMinValuesForBinning) continue;
        std::sort(v.begin(), v.end());
        DecileBins::Cuts cuts{};
        for (int q = 1; q <= 9; ++q) {
            const double pos = 0.1 * q * static_cast<double>(v.size() - 1);
            const auto lo = static_cast<std::size_t>(pos);
            const auto hi = std::min(lo + 1, v.size() - 1);
            const double frac = pos - static_cast<double>(lo);
            cuts[static_cast<std::size_t>(q - 1)] = v[lo] + frac * (v[hi] - v[lo]);
        }
        bins.set(id, cuts);
    }
    return bins;
}

int bin_measurement(const DecileBins& bins, ConceptId concept_id, double value) {
    const auto& cuts = bins.cuts(concept_id);
    const auto below = std::lower_bound(cuts.begin(), cuts.end(), value) - cuts.begin();
    return static_cast<int>(std::clamp<std::ptrdiff_t>(below, 0, 9));
}

std::vector<ClinicalRecord> dedup_hourly_measurements(std::span<const ClinicalRecord> records) {
    using namespace std::chrono;
    std::set<std::tuple<std::string, ConceptId, std::int64_t>> seen;
    std::vector<ClinicalRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.domain == Domain::Measurement) {
            const auto hour = floor<hours>(r.time).time_since_epoch().count();
            if (!seen.emplace(r.patient_id, r.concept_id, hour).second) continue;
        }
        out.push_back(r);
    }
    return out;
}

bool PatientTrajectory::aligned() const {
    const auto n = concept_idx.size();
    return age_idx.size() == n && visit_idx.size() == n && record_idx.size() == n &&
           domain_idx.size() == n;
}

std::size_t PatientTrajectory::unpadded_size() const {
    std::size_t n = concept_idx.size();
    while (n > 0 && concept_idx[n - 1] == special::kPad) --n;
    return n;
}

void PatientTrajectory::push(std::uint32_t concept_index, std::uint32_t age, std::uint32_t visit,
                             std::uint32_t record, std::uint32_t domain) {
    concept_idx.push_back(concept_index);
    age_idx.push_back(age);
    visit_idx.push_back(visit);
    record_idx.push_back(record);
    domain_idx.push_back(domain);
}

int age_in_years(Timestamp birth, Timestamp at) {
    using namespace std::chrono;
    const year_month_day b{floor<days>(birth)};
    const year_month_day a{floor<days>(at)};
    int years = static_cast<int>(a.year()) - static_cast<int>(b.year());
    if (std::make_pair(static_cast<unsigned>(a.month()), static_cast<unsigned>(a.day())) <
        std::make_pair(static_cast<unsigned>(b.month()), static_cast<unsigned>(b.day())))
        --years;
    return years;
}

namespace {

DenseIndex resolve_concept(const ClinicalRecord& r, const ConceptCatalog& catalog, const DecileBins& bins) {
    if (catalog.has_decile_variants(r.concept_id)) {
        if (r.value && bins.contains(r.concept_id)) {
            if (auto k = catalog.find(r.concept_id, bin_measurement(bins, r.concept_id, *r.value)))
                return *k;
        }
        return special::kUnk;
    }
    if (auto k = catalog.find(r.concept_id)) return *k;
    return special::kUnk;
}

}  // namespace

PatientTrajectory build_trajectory(std::span<const ClinicalRecord> patient_records,
                                   const ConceptCatalog& catalog, const DecileBins& bins,
                                   Timestamp birth, Timestamp as_of) {
    using namespace std::chrono;
    PatientTrajectory t;
    if (!patient_records.empty()) t.patient_id = patient_records.front().patient_id;
    for (std::size_t i = 0; i < patient_records.size(); ++i) {
        if (patient_records[i].patient_id != t.patient_id)
            throw Error(ErrorCode::OrderError, "records from more than one patient");
        if (i > 0 && patient_records[i].time < patient_records[i - 1].time)
            throw Error(ErrorCode::OrderError, "records are not sorted by time");
    }

    t.push(special::kCls, 0, 1, 1, 0);
    std::uint32_t visit = 0;
    std::uint32_t age = 0;
    std::uint32_t record = 1;
    const std::string* current_visit = nullptr;
    sys_days visit_day{};
    for (const auto& r : patient_records) {
        if (r.time >= as_of) break;
        if (!current_visit || *current_visit != r.visit_id) {
            if (current_visit) t.push(special::kSep, age, visit, record, 0);
            current_visit = &r.visit_id;
            ++visit;
            visit_day = floor<days>(r.time);
        }
        age = static_cast<std::uint32_t>(std::clamp(age_in_years(birth, r.time), 0, static_cast<int>(kMaxAge)));
        record = static_cast<std::uint32_t>((floor<days>(r.time) - visit_day).count() + 1);
        const auto k = resolve_concept(r, catalog, bins);
        t.push(k, age, visit, record, static_cast<std::uint32_t>(catalog.domain(k)));
    }
    if (current_visit) t.push(special::kSep, age, visit, record, 0);
    return t;
}

std::vector<PatientTrajectory> slice_trajectory(const PatientTrajectory& t, std::size_t max_len) {
    if (max_len < 2) throw Error(ErrorCode::ConfigError, "max_len must leave room for [CLS] and a token");
    if (t.size() <= max_len) return {t};
    const std::size_t body = max_len - 1;
    std::vector<PatientTrajectory> out;
    for (std::size_t start = 1; start < t.size(); start += body) {
        const std::size_t stop = std::min(t.size(), start + body);
        PatientTrajectory chunk;
        chunk.patient_id = t.patient_id;
        chunk.labels = t.labels;
        if (start == 1) {
            chunk.push(t.concept_idx[0], t.age_idx[0], t.visit_idx[0], t.record_idx[0], t.domain_idx[0]);
        } else {
            chunk.push(special::kCls, t.age_idx[start - 1], t.visit_idx[start], t.record_idx[start], 0);
        }
        for (std::size_t i = start; i < stop; ++i)
            chunk.push(t.concept_idx[i], t.age_idx[i], t.visit_idx[i], t.record_idx[i], t.domain_idx[i]);
        out.push_back(std::move(chunk));
    }
    return out;
}

std::vector<PatientTrajectory> build_task_cohort(std::span<const ClinicalRecord> sorted_records,
                                                 std::span<const PatientInfo> patients,
                                                 std::span<const VisitRecord> visits, const ConceptCatalog& catalog,
                                                 const DecileBins& bins, Task task, std::size_t max_len) {
    std::map<std::string, Timestamp> birth;
    for (const auto& p : patients) birth[p.patient_id] = p.birth;
    const auto grouped = group_by_patient(sorted_records);
    std::vector<PatientTrajectory> out;
    for (const auto& label : derive_labels(visits, task)) {
        auto b = birth.find(label.patient_id);
        if (b == birth.end())
            throw Error(ErrorCode::ParseError, "no birth date for patient " + label.patient_id);
        std::span<const ClinicalRecord> recs;
        if (auto g = grouped.find(label.patient_id); g != grouped.end()) recs = g->second;
        auto t = build_trajectory(recs, catalog, bins, b->second, label.prediction_time);
        t.patient_id = label.patient_id;
        if (t.size() > max_len) t = slice_trajectory(t, max_len).back();
        t.labels = {label};
        out.push_back(std::move(t));
    }
    return out;
}

PatientTrajectory pad_trajectory(const PatientTrajectory& t, std::size_t max_len) {
    if (t.size() > max_len)
        throw Error(ErrorCode::TooLong, "trajectory of length " + std::to_string(t.size()) +
                                            " exceeds " + std::to_string(max_len));
    PatientTrajectory out = t;
    for (auto* s : {&out.concept_idx, &out.age_idx, &out.visit_idx, &out.record_idx, &out.domain_idx})
        s->resize(max_len, 0);
    return out;
}

std::string encode_dataset(const TrajectoryDataset& dataset) {
    io::ByteWriter w;
    w.magic("MTRJ");
    w.u64(dataset.trajectories.size());
    w.u32(static_cast<std::uint32_t>(dataset.max_len));
    for (const auto& t : dataset.trajectories) {
        if (!t.aligned()) throw Error(ErrorCode::ShapeError, "misaligned trajectory streams");
        w.str(t.patient_id);
        w.u32(static_cast<std::uint32_t>(t.size()));
        for (const auto* s : {&t.concept_idx, &t.age_idx, &t.visit_idx, &t.record_idx, &t.domain_idx})
            for (auto v : *s) w.u32(v);
        w.u8(static_cast<std::uint8_t>(t.labels.size()));
        for (const auto& l : t.labels) {
            w.u8(static_cast<std::uint8_t>(l.task));
            w.u8(static_cast<std::uint8_t>(l.label));
            w.i64(l.prediction_time.time_since_epoch().count());
        }
    }
    io::append_provenance(w, dataset.provenance);
    return w.take();
}

TrajectoryDataset decode_dataset(std::string_view bytes) {
    io::ByteReader in(bytes);
    in.expect_magic("MTRJ");
    TrajectoryDataset d;
    const auto count = in.u64();
    d.max_len = in.u32();
    if (count > in.remaining()) throw Error(ErrorCode::ArtifactError, "trajectory count exceeds payload");
    d.trajectories.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        PatientTrajectory t;
        t.patient_id = in.str();
        const auto len = in.u32();
        if (static_cast<std::size_t>(len) * 20 > in.remaining())
            throw Error(ErrorCode::ArtifactError, "trajectory length exceeds payload");
        for (auto* s : {&t.concept_idx, &t.age_idx, &t.visit_idx, &t.record_idx, &t.domain_idx}) {
            s->resize(len);
            for (auto& v : *s) v = in.u32();
        }
        const auto n_labels = in.u8();
        for (int j = 0; j < n_labels; ++j) {
            TaskLabel l;
            const auto task = in.u8();
            if (task > 2) throw Error(ErrorCode::ArtifactError, "unknown task code");
            l.task = static_cast<Task>(task);
            l.patient_id = t.patient_id;
            l.label = in.u8();
            l.prediction_time = Timestamp{std::chrono::minutes{in.i64()}};
            t.labels.push_back(std::move(l));
        }
        d.trajectories.push_back(std::move(t));
    }
    d.provenance = io::read_provenance(in);
    if (!in.at_end()) throw Error(ErrorCode::ArtifactError, "trailing bytes after MTRJ container");
    return d;
}

void save_dataset(const std::filesystem::path& path, const TrajectoryDataset& dataset) {
    io::write_file(path, encode_dataset(dataset));
}

TrajectoryDataset load_dataset(const std::filesystem::path& path) {
    return decode_dataset(io::read_file(path));
}

}  // namespace medrep
