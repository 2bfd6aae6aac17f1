#pragma once

#include <array>
#include <string>
#include <vector>

#include "medrep/description.hpp"
#include "medrep/labels.hpp"
#include "medrep/records.hpp"
#include "medrep/rng.hpp"
#include "medrep/vocab.hpp"

namespace medrep::synth {

struct SynthSpec {
    int num_clusters = 4;
    int concepts_per_cluster = 50;
    double intra_edge_prob = 0.3;
    double inter_edge_prob = 0.01;
    int num_patients = 5000;
    int min_visits = 2;  // history visits before the index admission
    int max_visits = 5;
    int min_events_per_visit = 3;
    int max_events_per_visit = 8;
    double beta = 3.0;                // outcome signal strength
    double propensity_spread = 1.5;   // std of per-patient cluster log-weights
    double shift_rate = 0.36;
    double holdout_fraction = 0.2;    // external-only concepts per cluster
    int text_dim = 32;
    int core_tokens = 6;   // shared per cluster
    int core_per_concept = 4;
    int noise_tokens = 4;  // unique per concept
    std::array<double, 3> incidence = {0.0368, 0.3090, 0.0211};  // MT, LLOS, RA
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

struct SynthVocabulary {
    ConceptCatalog catalog;
    RelationGraph graph;
    std::vector<DescriptionRecord> descriptions;
    RepresentationMatrix text;
    std::vector<int> cluster_of;  // per dense row, -1 for specials
    std::vector<bool> held_out;   // per dense row
};

SynthVocabulary generate_vocabulary(const SynthSpec& spec);

struct SynthCohort {
    std::vector<PatientInfo> patients;
    std::vector<VisitRecord> visits;
    std::vector<ClinicalRecord> records;  // sorted by (patient, time)
    std::array<std::vector<TaskLabel>, 3> labels;  // indexed by Task
};

// `stream` separates independently drawn cohorts (internal, external)
// that share the same outcome model; ids are `prefix` + a serial number.
SynthCohort generate_cohort(const SynthSpec& spec, const SynthVocabulary& vocab, std::uint64_t stream,
                            const std::string& id_prefix);

struct ShiftStats {
    std::size_t records = 0;
    std::size_t replaced = 0;
    std::size_t fallbacks = 0;  // selected but no held-out sibling
};

// Each record is selected with probability s and recoded as a held-out
// sibling from the same cluster, same domain when one exists.
std::vector<ClinicalRecord> apply_vocabulary_shift(std::vector<ClinicalRecord> records, const SynthVocabulary& vocab,
                                                   double s, Rng& rng, ShiftStats* stats = nullptr);

}  // namespace medrep::synth
