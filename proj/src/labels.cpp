#include "medrep/labels.hpp"

#include <algorithm>
#include <map>

#include "medrep/error.hpp"

namespace medrep {

std::string_view to_string(Task task) {
    switch (task) {
        case Task::MT: return "MT";
        case Task::LLOS: return "LLOS";
        case Task::RA: return "RA";
    }
    return "MT";
}

Task parse_task(std::string_view text) {
    if (text == "MT") return Task::MT;
    if (text == "LLOS") return Task::LLOS;
    if (text == "RA") return Task::RA;
    throw Error(ErrorCode::ConfigError, "unknown task '" + std::string(text) + "'");
}

std::vector<TaskLabel> derive_labels(std::span<const VisitRecord> visits, Task task) {
    using namespace std::chrono;
    std::map<std::string, std::vector<const VisitRecord*>> by_patient;
    for (const auto& v : visits) {
        if (v.discharge < v.admission)
            throw Error(ErrorCode::BadVisit, "visit " + v.visit_id + " of patient " + v.patient_id +
                                                 " ends before it starts");
        by_patient[v.patient_id].push_back(&v);
    }
    std::vector<TaskLabel> out;
    out.reserve(by_patient.size());
    for (auto& [pid, list] : by_patient) {
        std::stable_sort(list.begin(), list.end(),
                         [](const auto* a, const auto* b) { return a->admission < b->admission; });
        const VisitRecord* index = list.back();
        for (const auto* v : list)
            if (v->is_index) {
                index = v;
                break;
            }
        TaskLabel label{task, pid, 0, {}};
        switch (task) {
            case Task::MT:
                label.label = index->died ? 1 : 0;
                label.prediction_time = midnight_of(index->admission);
                break;
            case Task::LLOS:
                label.label = (index->discharge - index->admission) > hours{7 * 24} ? 1 : 0;
                label.prediction_time = midnight_of(index->admission);
                break;
            case Task::RA:
                for (const auto* v : list) {
                    if (v == index) continue;
                    // Calendar-day window: day 30 after discharge still counts.
                    if (v->admission > index->discharge &&
                        floor<days>(v->admission) - floor<days>(index->discharge) <= days{30}) {
                        label.label = 1;
                        break;
                    }
                }
                label.prediction_time = midnight_of(index->discharge);
                break;
        }
        out.push_back(std::move(label));
    }
    return out;
}

}  // namespace medrep
