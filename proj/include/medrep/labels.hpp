#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medrep/records.hpp"

namespace medrep {

enum class Task : std::uint8_t { MT = 0, LLOS = 1, RA = 2 };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);  // throws ConfigError
inline constexpr Task kAllTasks[] = {Task::MT, Task::LLOS, Task::RA};

struct TaskLabel {
    Task task = Task::MT;
    std::string patient_id;
    int label = 0;
    Timestamp prediction_time{};

    bool operator==(const TaskLabel&) const = default;
};

// One label per patient with an index visit:
//   MT   death during the index stay; predicted at midnight of admission date
//   LLOS discharge - admission > 7 x 24 h; predicted at midnight of admission date
//   RA   another admission starting within 30 days (inclusive) after the
//        index discharge; predicted at midnight of discharge date
// Patients without a flagged index visit use their last visit.
std::vector<TaskLabel> derive_labels(std::span<const VisitRecord> visits, Task task);

}  // namespace medrep
