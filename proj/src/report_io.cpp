#include "gm/report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "gm/csv.hpp"
#include "gm/errors.hpp"

namespace gm {
namespace {

using nlohmann::json;

json number_or_null(double value) {
    if (!std::isfinite(value)) return nullptr;
    return value;
}

json optional_number(const std::optional<double>& value) {
    if (!value) return nullptr;
    return *value;
}

json selection_json(const SelectionReport& report) {
    json out;
    out["method"] = report.method;
    out["q"] = report.target_fdr;
    out["seed"] = report.seed;
    out["tau"] = report.selected.empty() ? json(nullptr) : number_or_null(report.threshold);
    out["fdp_estimate"] = report.fdp_estimate;
    out["selected"] = report.selected;
    json statistics = json::array();
    for (const auto& statistic : report.statistics)
        statistics.push_back(optional_number(statistic));
    out["statistics"] = std::move(statistics);
    out["sigma"] = optional_number(report.sigma);
    out["lambda"] = optional_number(report.lambda);
    if (!report.diagnostic.empty()) out["diagnostic"] = report.diagnostic;
    return out;
}

std::string dump(const json& value) { return value.dump(2) + "\n"; }

double parse_number(const std::string& text, const std::string& what) {
    double out = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto result = std::from_chars(first, last, out);
    if (result.ec != std::errc() || result.ptr != last)
        throw ParseError("cannot parse " + what + " from '" + text + "'");
    return out;
}

std::uint64_t parse_seed(const std::string& text) {
    std::uint64_t out = 0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto result = std::from_chars(first, last, out);
    if (result.ec != std::errc() || result.ptr != last)
        throw ParseError("cannot parse seed from '" + text + "'");
    return out;
}

}  // namespace

std::string to_json(const SelectionReport& report) { return dump(selection_json(report)); }

std::string to_json(const FdInterval& interval) {
    json out;
    out["k"] = interval.k;
    out["point_estimate"] = interval.point_estimate;
    out["ci_low"] = interval.ci_low;
    out["ci_high"] = interval.ci_high;
    out["upper_bound"] = interval.upper_bound;
    out["alpha"] = interval.alpha;
    out["bootstrap_samples"] = interval.bootstrap_samples;
    out["seed"] = interval.seed;
    out["samples"] = interval.samples;
    if (!interval.diagnostic.empty()) out["diagnostic"] = interval.diagnostic;
    return dump(out);
}

std::string to_json(const ExperimentTable& table) {
    json out;
    out["q"] = table.q;
    out["master_seed"] = table.master_seed;
    json rows = json::array();
    for (const ExperimentRow& row : table.rows)
        rows.push_back({{"replicate", row.replicate},
                        {"method", row.method},
                        {"fdp", row.fdp},
                        {"power", row.power},
                        {"selected_count", row.selected_count},
                        {"seed", row.seed}});
    out["rows"] = std::move(rows);
    json summary = json::array();
    for (const MethodSummary& method : table.summary)
        summary.push_back({{"method", method.method},
                           {"fdr", method.fdr},
                           {"mean_power", method.mean_power},
                           {"replicates", method.replicates},
                           {"failures", method.failures}});
    out["summary"] = std::move(summary);
    return dump(out);
}

std::string to_csv(const SelectionReport& report) {
    std::ostringstream out;
    out << "feature,statistic,selected\n";
    std::vector<char> flags(report.statistics.size(), 0);
    for (const int j : report.selected) flags[static_cast<std::size_t>(j)] = 1;
    for (std::size_t j = 0; j < report.statistics.size(); ++j) {
        out << j << ',';
        if (report.statistics[j]) out << format_number(*report.statistics[j]);
        out << ',' << static_cast<int>(flags[j]) << '\n';
    }
    out << "\nkey,value\n";
    out << "method," << report.method << '\n';
    out << "q," << format_number(report.target_fdr) << '\n';
    out << "seed," << report.seed << '\n';
    out << "tau,";
    if (!report.selected.empty() && std::isfinite(report.threshold))
        out << format_number(report.threshold);
    out << '\n';
    out << "fdp_estimate," << format_number(report.fdp_estimate) << '\n';
    out << "sigma,";
    if (report.sigma) out << format_number(*report.sigma);
    out << '\n';
    out << "lambda,";
    if (report.lambda) out << format_number(*report.lambda);
    out << '\n';
    out << "selected_count," << report.selected.size() << '\n';
    if (!report.diagnostic.empty()) out << "diagnostic," << report.diagnostic << '\n';
    return out.str();
}

std::string to_csv(const FdInterval& interval) {
    std::ostringstream out;
    out << "key,value\n";
    out << "k," << interval.k << '\n';
    out << "point_estimate," << interval.point_estimate << '\n';
    out << "ci_low," << interval.ci_low << '\n';
    out << "ci_high," << interval.ci_high << '\n';
    out << "upper_bound," << interval.upper_bound << '\n';
    out << "alpha," << format_number(interval.alpha) << '\n';
    out << "bootstrap_samples," << interval.bootstrap_samples << '\n';
    out << "seed," << interval.seed << '\n';
    if (!interval.diagnostic.empty()) out << "diagnostic," << interval.diagnostic << '\n';
    out << "\nsample\n";
    for (const int sample : interval.samples) out << sample << '\n';
    return out.str();
}

std::string to_csv(const ExperimentTable& table) {
    std::ostringstream out;
    out << "replicate,method,fdp,power,selected_count,seed\n";
    for (const ExperimentRow& row : table.rows)
        out << row.replicate << ',' << row.method << ',' << format_number(row.fdp)
            << ',' << format_number(row.power) << ',' << row.selected_count << ','
            << row.seed << '\n';
    out << "\nmethod,fdr,mean_power,replicates,failures\n";
    for (const MethodSummary& method : table.summary)
        out << method.method << ',' << format_number(method.fdr) << ','
            << format_number(method.mean_power) << ',' << method.replicates << ','
            << method.failures << '\n';
    return out.str();
}

SelectionReport read_selection_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }

    std::size_t at = 0;
    if (at >= lines.size() || lines[at] != "feature,statistic,selected")
        throw ParseError(path + ": missing feature header");
    ++at;

    SelectionReport report;
    while (at < lines.size() && !lines[at].empty()) {
        const std::string& row = lines[at];
        const std::size_t comma1 = row.find(',');
        const std::size_t comma2 = row.find(',', comma1 + 1);
        if (comma1 == std::string::npos || comma2 == std::string::npos)
            throw ParseError(path + ": malformed feature row '" + row + "'");
        const std::size_t feature =
            static_cast<std::size_t>(parse_number(row.substr(0, comma1), "feature index"));
        if (feature != report.statistics.size())
            throw ParseError(path + ": feature rows out of order");
        const std::string cell = row.substr(comma1 + 1, comma2 - comma1 - 1);
        if (cell.empty())
            report.statistics.push_back(std::nullopt);
        else
            report.statistics.push_back(parse_number(cell, "statistic"));
        if (parse_number(row.substr(comma2 + 1), "selected flag") != 0.0)
            report.selected.push_back(static_cast<int>(feature));
        ++at;
    }

    while (at < lines.size() && lines[at].empty()) ++at;
    if (at >= lines.size() || lines[at] != "key,value")
        throw ParseError(path + ": missing summary block");
    ++at;

    report.threshold = std::numeric_limits<double>::infinity();
    for (; at < lines.size() && !lines[at].empty(); ++at) {
        const std::string& row = lines[at];
        const std::size_t comma = row.find(',');
        if (comma == std::string::npos)
            throw ParseError(path + ": malformed summary row '" + row + "'");
        const std::string key = row.substr(0, comma);
        const std::string value = row.substr(comma + 1);
        if (key == "method")
            report.method = value;
        else if (key == "q")
            report.target_fdr = parse_number(value, key);
        else if (key == "seed")
            report.seed = parse_seed(value);
        else if (key == "tau")
            report.threshold = value.empty() ? std::numeric_limits<double>::infinity()
                                             : parse_number(value, key);
        else if (key == "fdp_estimate")
            report.fdp_estimate = parse_number(value, key);
        else if (key == "sigma" && !value.empty())
            report.sigma = parse_number(value, key);
        else if (key == "lambda" && !value.empty())
            report.lambda = parse_number(value, key);
        else if (key == "diagnostic")
            report.diagnostic = value;
        else if (key != "sigma" && key != "lambda" && key != "selected_count")
            throw ParseError(path + ": unknown summary key '" + key + "'");
    }
    return report;
}

std::string plot_data(const std::vector<std::pair<double, ExperimentTable>>& sweep) {
    std::ostringstream out;
    out << "method,design_param,metric,mean,sd\n";
    for (const auto& [param, table] : sweep) {
        for (const MethodSummary& method : table.summary) {
            double fdp_var = 0.0, power_var = 0.0;
            for (const ExperimentRow& row : table.rows) {
                if (row.method != method.method) continue;
                fdp_var += (row.fdp - method.fdr) * (row.fdp - method.fdr);
                power_var += (row.power - method.mean_power) * (row.power - method.mean_power);
            }
            const int count = method.replicates;
            const double fdp_sd = count > 1 ? std::sqrt(fdp_var / (count - 1)) : 0.0;
            const double power_sd = count > 1 ? std::sqrt(power_var / (count - 1)) : 0.0;
            out << method.method << ',' << format_number(param) << ",fdr,"
                << format_number(method.fdr) << ',' << format_number(fdp_sd) << '\n';
            out << method.method << ',' << format_number(param) << ",power,"
                << format_number(method.mean_power) << ',' << format_number(power_sd)
                << '\n';
        }
    }
    return out.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("cannot write " + path);
}

}  // namespace gm
