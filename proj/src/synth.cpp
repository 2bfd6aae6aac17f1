#include "medrep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "medrep/error.hpp"

namespace medrep::synth {

namespace {

constexpr Domain kCycle[] = {Domain::Condition, Domain::Drug, Domain::Measurement, Domain::Procedure};

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ConfigError, std::string("invalid synth spec: ") + what);
}

ConceptId synth_id(int cluster, int j) { return 10000 + static_cast<ConceptId>(cluster) * 1000 + j; }

int held_out_count(const SynthSpec& spec) {
    return static_cast<int>(std::lround(spec.holdout_fraction * spec.concepts_per_cluster));
}

std::string word(std::uint64_t x) {
    static constexpr char kLetters[] = "bcdfghjklmnprstvz";
    static constexpr char kVowels[] = "aeiou";
    std::string w;
    for (int i = 0; i < 3; ++i) {
        w += kLetters[x % 17];
        x /= 17;
        w += kVowels[x % 5];
        x /= 5;
    }
    return w;
}

// Task loadings over clusters, shared by every cohort drawn from one spec:
// zero-mean, unit variance across clusters.
std::array<std::vector<double>, 3> task_loadings(const SynthSpec& spec) {
    Rng rng(derive_seed(spec.seed, 0x10ad));
    std::array<std::vector<double>, 3> a;
    for (auto& row : a) {
        row.resize(static_cast<std::size_t>(spec.num_clusters));
        for (auto& v : row) v = standard_normal(rng);
        const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
        double var = 0.0;
        for (auto& v : row) {
            v -= mean;
            var += v * v;
        }
        const double sd = std::sqrt(var / static_cast<double>(row.size()));
        if (sd > 0)
            for (auto& v : row) v /= sd;
    }
    return a;
}

double gumbel(Rng& rng) {
    double u = uniform01(rng);
    if (u < 1e-300) u = 1e-300;
    return -std::log(-std::log(u));
}

Timestamp plus_minutes(Timestamp t, long long m) { return t + std::chrono::minutes(m); }

struct PatientPlan {
    std::vector<double> propensity;
    std::array<double, 3> key{};
};

}  // namespace

void SynthSpec::validate() const {
    require(num_clusters >= 1, "num_clusters must be >= 1");
    require(concepts_per_cluster >= 2, "concepts_per_cluster must be >= 2");
    require(intra_edge_prob >= 0 && intra_edge_prob <= 1 && inter_edge_prob >= 0 && inter_edge_prob <= 1,
            "edge probabilities must lie in [0, 1]");
    require(intra_edge_prob > inter_edge_prob, "intra_edge_prob must exceed inter_edge_prob");
    require(num_patients >= 1, "num_patients must be >= 1");
    require(min_visits >= 1 && min_visits <= max_visits, "visit range must satisfy 1 <= min <= max");
    require(min_events_per_visit >= 1 && min_events_per_visit <= max_events_per_visit,
            "event range must satisfy 1 <= min <= max");
    require(beta >= 0, "beta must be >= 0");
    require(propensity_spread >= 0, "propensity_spread must be >= 0");
    require(shift_rate >= 0 && shift_rate <= 1, "shift_rate must lie in [0, 1]");
    require(holdout_fraction >= 0 && holdout_fraction < 1, "holdout_fraction must lie in [0, 1)");
    require(held_out_count(*this) < concepts_per_cluster, "every cluster needs an internal concept");
    require(text_dim >= 1, "text_dim must be >= 1");
    require(core_tokens >= 1 && core_per_concept >= 1 && core_per_concept <= core_tokens && noise_tokens >= 0,
            "token counts out of range");
    for (double p : incidence) require(p >= 0 && p < 1, "incidence must lie in [0, 1)");
}

SynthVocabulary generate_vocabulary(const SynthSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, 0x70c));
    const int hold = held_out_count(spec);

    std::vector<Concept> concepts;
    std::vector<DescriptionRecord> descriptions;
    for (int c = 0; c < spec.num_clusters; ++c) {
        std::vector<std::string> core;
        for (int i = 0; i < spec.core_tokens; ++i) core.push_back(word(splitmix64(derive_seed(spec.seed, 7919u * c + i))));
        for (int j = 0; j < spec.concepts_per_cluster; ++j) {
            const auto id = synth_id(c, j);
            Concept k;
            k.concept_id = id;
            k.domain = kCycle[j % 4];
            char name[64];
            std::snprintf(name, sizeof name, "%s %s %d", core[0].c_str(), std::string(to_string(k.domain)).c_str(), j);
            k.name = name;
            concepts.push_back(k);

            std::vector<std::string> picked = core;
            shuffle(picked, rng);
            picked.resize(static_cast<std::size_t>(spec.core_per_concept));
            for (int i = 0; i < spec.noise_tokens; ++i) picked.push_back(word(rng()));
            shuffle(picked, rng);
            std::string desc;
            for (const auto& w : picked) desc += (desc.empty() ? "" : " ") + w;
            descriptions.push_back({id, std::nullopt, desc});
        }
    }

    SynthVocabulary out;
    out.catalog = ConceptCatalog::from_concepts(std::move(concepts));
    const auto n = out.catalog.size();
    out.cluster_of.assign(n, -1);
    out.held_out.assign(n, false);
    for (DenseIndex k = special::kCount; k < n; ++k) {
        const auto id = out.catalog[k].concept_id;
        const int c = static_cast<int>((id - 10000) / 1000);
        const int j = static_cast<int>((id - 10000) % 1000);
        out.cluster_of[k] = c;
        out.held_out[k] = j >= spec.concepts_per_cluster - hold;
    }

    std::vector<std::pair<DenseIndex, DenseIndex>> pairs;
    for (DenseIndex i = special::kCount; i < n; ++i)
        for (DenseIndex j = i + 1; j < n; ++j) {
            const double p = out.cluster_of[i] == out.cluster_of[j] ? spec.intra_edge_prob : spec.inter_edge_prob;
            if (bernoulli(rng, p)) pairs.emplace_back(i, j);
        }
    out.graph = RelationGraph::from_pairs(n, pairs);

    EmbeddingSource source;
    source.kind = EmbeddingSource::Kind::Stub;
    source.h = spec.text_dim;
    source.seed = spec.seed;
    out.text = text_representations(out.catalog, descriptions, source);
    out.descriptions = std::move(descriptions);
    return out;
}

SynthCohort generate_cohort(const SynthSpec& spec, const SynthVocabulary& vocab, std::uint64_t stream,
                            const std::string& id_prefix) {
    spec.validate();
    const auto loadings = task_loadings(spec);
    const auto cohort_seed = derive_seed(spec.seed, 0xc0407 + stream);
    const auto nc = static_cast<std::size_t>(spec.num_clusters);

    std::vector<std::vector<DenseIndex>> internal_by_cluster(nc);
    for (DenseIndex k = special::kCount; k < vocab.catalog.size(); ++k)
        if (!vocab.held_out[k]) internal_by_cluster[static_cast<std::size_t>(vocab.cluster_of[k])].push_back(k);

    const auto np = static_cast<std::size_t>(spec.num_patients);
    std::vector<PatientPlan> plans(np);
    for (std::size_t i = 0; i < np; ++i) {
        Rng rng(derive_seed(cohort_seed, 2 * i));
        auto& plan = plans[i];
        plan.propensity.resize(nc);
        double total = 0.0;
        for (auto& g : plan.propensity) total += g = std::exp(spec.propensity_spread * standard_normal(rng));
        for (auto& g : plan.propensity) g /= total;
        for (std::size_t t = 0; t < 3; ++t) {
            double risk = 0.0;
            for (std::size_t c = 0; c < nc; ++c) risk += loadings[t][c] * plan.propensity[c];
            plan.key[t] = spec.beta * risk * static_cast<double>(nc) + gumbel(rng);
        }
    }

    // Gumbel-top-k: exactly round(incidence * n) positives, drawn without
    // replacement with probability proportional to exp(beta * risk).
    std::array<std::vector<int>, 3> outcome;
    for (std::size_t t = 0; t < 3; ++t) {
        outcome[t].assign(np, 0);
        std::vector<std::size_t> order(np);
        std::iota(order.begin(), order.end(), 0);
        if (t == static_cast<std::size_t>(Task::RA))
            order.erase(std::remove_if(order.begin(), order.end(),
                                       [&](std::size_t i) { return outcome[0][i] != 0; }),
                        order.end());
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return plans[a].key[t] > plans[b].key[t]; });
        const auto k = std::min(order.size(), static_cast<std::size_t>(std::lround(spec.incidence[t] * static_cast<double>(np))));
        for (std::size_t j = 0; j < k; ++j) outcome[t][order[j]] = 1;
    }

    SynthCohort cohort;
    const int width = std::max<int>(6, static_cast<int>(std::to_string(np).size()));
    for (std::size_t i = 0; i < np; ++i) {
        Rng rng(derive_seed(cohort_seed, 2 * i + 1));
        auto serial = std::to_string(i + 1);
        const std::string pid = id_prefix + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(width, serial.size()), '0') + serial;
        const auto& plan = plans[i];

        const int birth_year = 1940 + static_cast<int>(uniform_index(rng, 50));
        cohort.patients.push_back({pid, make_timestamp(birth_year, 1 + static_cast<unsigned>(uniform_index(rng, 12)),
                                                       1 + static_cast<unsigned>(uniform_index(rng, 28)))});

        auto draw_concept = [&]() {
            const double u = uniform01(rng);
            std::size_t c = 0;
            double acc = plan.propensity[0];
            while (u >= acc && c + 1 < nc) acc += plan.propensity[++c];
            const auto& pool = internal_by_cluster[c];
            return pool[uniform_index(rng, pool.size())];
        };
        int visit_no = 0;
        auto add_visit = [&](Timestamp admission, Timestamp discharge, bool died, bool is_index) {
            VisitRecord v{pid, pid + "_v" + std::to_string(++visit_no), admission, discharge, died, is_index};
            const int events = spec.min_events_per_visit +
                               static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.max_events_per_visit - spec.min_events_per_visit + 1)));
            const auto span_min = std::max<long long>(1, (discharge - admission).count());
            std::vector<long long> offsets;
            for (int e = 0; e < events; ++e) offsets.push_back(static_cast<long long>(uniform_index(rng, static_cast<std::uint64_t>(span_min))));
            std::sort(offsets.begin(), offsets.end());
            for (auto off : offsets) {
                const auto k = draw_concept();
                ClinicalRecord r;
                r.patient_id = pid;
                r.concept_id = vocab.catalog[k].concept_id;
                r.domain = vocab.catalog.domain(k);
                r.time = plus_minutes(admission, off);
                r.visit_id = v.visit_id;
                cohort.records.push_back(std::move(r));
            }
            cohort.visits.push_back(std::move(v));
        };

        // History visits: short encounters 30-200 days apart.
        Timestamp t = make_timestamp(2015, 1, 1) + std::chrono::days(uniform_index(rng, 365)) +
                      std::chrono::minutes(60 * (7 + static_cast<long long>(uniform_index(rng, 10))));
        const int history = spec.min_visits + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.max_visits - spec.min_visits + 1)));
        for (int v = 0; v < history; ++v) {
            const auto discharge = plus_minutes(t, 60 + static_cast<long long>(uniform_index(rng, 72 * 60)));
            add_visit(t, discharge, false, false);
            t = midnight_of(discharge) + std::chrono::days(30 + uniform_index(rng, 171)) +
                std::chrono::minutes(60 * (7 + static_cast<long long>(uniform_index(rng, 10))));
        }

        // Index admission. Stays are either under 7 days or over 8.
        const bool mt = outcome[0][i] != 0, llos = outcome[1][i] != 0, ra = outcome[2][i] != 0;
        const long long stay = llos ? (8 * 24 * 60 + static_cast<long long>(uniform_index(rng, 12 * 24 * 60)))
                                    : (6 * 60 + static_cast<long long>(uniform_index(rng, 6 * 24 * 60 - 6 * 60)));
        const auto index_admission = t;
        const auto index_discharge = plus_minutes(t, stay);
        add_visit(index_admission, index_discharge, mt, true);
        if (!mt) {
            const bool later_visit = ra || bernoulli(rng, 0.3);
            if (later_visit) {
                const auto gap_days = ra ? 1 + static_cast<long long>(uniform_index(rng, 28))
                                         : 40 + static_cast<long long>(uniform_index(rng, 300));
                const auto readmit = midnight_of(index_discharge) + std::chrono::days(gap_days) +
                                     std::chrono::minutes(60 * (1 + static_cast<long long>(uniform_index(rng, 22))));
                add_visit(readmit, plus_minutes(readmit, 120 + static_cast<long long>(uniform_index(rng, 4 * 24 * 60))), false,
                          false);
            }
        }
    }
    sort_records(cohort.records);
    for (Task task : kAllTasks) cohort.labels[static_cast<std::size_t>(task)] = derive_labels(cohort.visits, task);
    return cohort;
}

std::vector<ClinicalRecord> apply_vocabulary_shift(std::vector<ClinicalRecord> records, const SynthVocabulary& vocab,
                                                   double s, Rng& rng, ShiftStats* stats) {
    if (!(s >= 0 && s <= 1)) throw Error(ErrorCode::ConfigError, "shift rate must lie in [0, 1]");
    // Held-out siblings keyed by (cluster, domain); cluster-wide pool as fallback.
    std::map<std::pair<int, Domain>, std::vector<DenseIndex>> by_domain;
    std::map<int, std::vector<DenseIndex>> by_cluster;
    for (DenseIndex k = special::kCount; k < vocab.catalog.size(); ++k) {
        if (!vocab.held_out[k]) continue;
        by_domain[{vocab.cluster_of[k], vocab.catalog.domain(k)}].push_back(k);
        by_cluster[vocab.cluster_of[k]].push_back(k);
    }
    ShiftStats local;
    for (auto& r : records) {
        ++local.records;
        if (!bernoulli(rng, s)) continue;
        const auto row = vocab.catalog.find(r.concept_id);
        const std::vector<DenseIndex>* pool = nullptr;
        if (row && vocab.cluster_of[*row] >= 0) {
            const int c = vocab.cluster_of[*row];
            if (auto it = by_domain.find({c, r.domain}); it != by_domain.end()) pool = &it->second;
            else if (auto jt = by_cluster.find(c); jt != by_cluster.end()) pool = &jt->second;
        }
        if (!pool) {
            ++local.fallbacks;
            spdlog::debug("no held-out sibling for concept {}", r.concept_id);
            continue;
        }
        const auto k = (*pool)[uniform_index(rng, pool->size())];
        r.concept_id = vocab.catalog[k].concept_id;
        r.domain = vocab.catalog.domain(k);
        ++local.replaced;
    }
    if (stats) *stats = local;
    return records;
}

}  // namespace medrep::synth
