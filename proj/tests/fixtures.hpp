#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "medrep/linalg.hpp"
#include "medrep/records.hpp"
#include "medrep/rng.hpp"
#include "medrep/trajectory.hpp"
#include "medrep/vocab.hpp"

namespace fixture {

namespace fs = std::filesystem;

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("medrep_" + tag + "_" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline medrep::ConceptCatalog golden_catalog() {
    using medrep::Domain;
    return medrep::ConceptCatalog::from_concepts({
        {100, "Neutropenic fever", Domain::Condition, std::nullopt},
        {200, "Aspirin 100 MG Oral Tablet", Domain::Drug, std::nullopt},
        {300, "Heart rate", Domain::Measurement, std::nullopt},
        {400, "Appendectomy", Domain::Procedure, std::nullopt},
    });
}

inline medrep::ClinicalRecord record(medrep::ConceptId id, medrep::Domain d, medrep::Timestamp t,
                                     const std::string& visit, std::optional<double> value = std::nullopt) {
    return {"p1", id, d, t, value, visit};
}

// The patient behind tests/data/trajectory_golden.tsv.
inline std::vector<medrep::ClinicalRecord> golden_records() {
    using medrep::Domain;
    using medrep::make_timestamp;
    return {
        record(100, Domain::Condition, make_timestamp(2020, 6, 14, 10), "V1"),
        record(200, Domain::Drug, make_timestamp(2020, 6, 14, 11), "V1"),
        record(400, Domain::Procedure, make_timestamp(2020, 6, 16, 9), "V1"),
        record(999, Domain::Condition, make_timestamp(2020, 9, 1, 8), "V2"),
        record(300, Domain::Measurement, make_timestamp(2020, 9, 1, 9), "V2"),
        record(100, Domain::Condition, make_timestamp(2021, 1, 2, 9), "V3"),
    };
}

inline medrep::Timestamp golden_birth() { return medrep::make_timestamp(1980, 6, 15); }
inline medrep::Timestamp golden_as_of() { return medrep::make_timestamp(2021, 1, 1); }

inline std::string golden_path() { return std::string(MEDREP_TEST_DATA) + "/trajectory_golden.tsv"; }

// Rows 0..3 are isolated specials, then two clusters of 20 nodes with
// intra-cluster edge probability 0.5 and a few cross edges. Text rows are a
// cluster direction plus unit noise, so the signal is visible but weak.
struct Toy {
    medrep::RepresentationMatrix text;
    medrep::RelationGraph graph;
    std::vector<int> cluster;  // -1 for specials
};

inline Toy two_cluster_toy(std::uint64_t seed, int h = 16) {
    using namespace medrep;
    Rng rng(seed);
    const int per = 20, n = 4 + 2 * per;
    Toy toy;
    toy.cluster.assign(n, -1);
    for (int i = 4; i < n; ++i) toy.cluster[i] = (i - 4) / per;
    std::vector<std::pair<DenseIndex, DenseIndex>> pairs;
    for (DenseIndex i = 4; i < static_cast<DenseIndex>(n); ++i)
        for (DenseIndex j = i + 1; j < static_cast<DenseIndex>(n); ++j)
            if (bernoulli(rng, toy.cluster[i] == toy.cluster[j] ? 0.5 : 0.01)) pairs.emplace_back(i, j);
    toy.graph = RelationGraph::from_pairs(n, pairs);
    Matrix centre(2, h);
    for (Eigen::Index i = 0; i < centre.size(); ++i) centre.data()[i] = standard_normal(rng);
    centre.rowwise().normalize();
    toy.text = {Matrix::Zero(n, h), RepresentationKind::Text};
    for (int i = 4; i < n; ++i) {
        for (int c = 0; c < h; ++c) toy.text.values(i, c) = 1.5 * centre(toy.cluster[i], c) + standard_normal(rng) / std::sqrt(h);
        toy.text.values.row(i).normalize();
    }
    return toy;
}

// Mean cosine over same-cluster and cross-cluster pairs.
inline std::pair<double, double> cluster_cosines(const medrep::Matrix& r, const std::vector<int>& cluster) {
    double intra = 0, inter = 0;
    int ni = 0, nx = 0;
    for (std::size_t i = 0; i < cluster.size(); ++i)
        for (std::size_t j = i + 1; j < cluster.size(); ++j) {
            if (cluster[i] < 0 || cluster[j] < 0) continue;
            const auto a = r.row(static_cast<Eigen::Index>(i)), b = r.row(static_cast<Eigen::Index>(j));
            const double c = a.dot(b) / std::max(a.norm() * b.norm(), 1e-12);
            if (cluster[i] == cluster[j]) {
                intra += c;
                ++ni;
            } else {
                inter += c;
                ++nx;
            }
        }
    return {intra / ni, inter / nx};
}

}  // namespace fixture
