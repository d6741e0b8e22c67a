#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gm/fd.hpp"
#include "gm/mirror.hpp"
#include "gm/sim.hpp"

namespace gm {

// JSON serialization. Selection reports carry: method, q, seed, tau (null
// when nothing is selected), statistics (null for features without one),
// selected (0-based), fdp_estimate, sigma and lambda (null when unused).
// Output is deterministic: keys are sorted and numbers round-trip bitwise.
std::string to_json(const SelectionReport& report);
std::string to_json(const FdInterval& interval);
std::string to_json(const ExperimentTable& table);

// CSV serialization: a block of per-feature rows (feature, statistic,
// selected — statistic left empty when absent) followed by a key,value
// summary block. Numbers use format_number, so re-reading is bitwise.
std::string to_csv(const SelectionReport& report);
// key,value summary followed by the sorted bootstrap counts, one per row.
std::string to_csv(const FdInterval& interval);
// replicate,method,fdp,power,selected_count,seed rows followed by a
// per-method summary block.
std::string to_csv(const ExperimentTable& table);

// Inverse of to_csv(SelectionReport): restores statistics, selected flags,
// and the summary scalars exactly.
SelectionReport read_selection_csv(const std::string& path);

// Long-format aggregate across a parameter sweep: one row per
// (method, design_param, metric) for metric ∈ {fdr, power} with the mean
// (copied from each table's summary) and the sample standard deviation
// across successful replicates.
std::string plot_data(const std::vector<std::pair<double, ExperimentTable>>& sweep);

// Writes text to path, throwing IoError when the file cannot be opened.
void write_text(const std::string& path, const std::string& text);

}  // namespace gm
