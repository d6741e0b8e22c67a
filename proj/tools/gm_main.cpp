#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gm/csv.hpp"
#include "gm/errors.hpp"
#include "gm/fd.hpp"
#include "gm/mirror.hpp"
#include "gm/post_selection.hpp"
#include "gm/report_io.hpp"
#include "gm/sim.hpp"

namespace {

using gm::RegressionProblem;

int default_threads() {
    if (const char* env = std::getenv("GM_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    return 0;  // library picks its worker count
}

struct DataArgs {
    std::string design_path;
    std::string response_path;
    std::string combined_path;
    std::string target;
    bool no_standardize = false;
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
    auto* design = cmd->add_option("--design", args.design_path,
                                   "design matrix CSV (numeric, optional header)");
    auto* response = cmd->add_option("--response", args.response_path,
                                     "response CSV, single column");
    auto* combined = cmd->add_option("--data", args.combined_path,
                                     "combined CSV holding design and response");
    auto* target = cmd->add_option("--target", args.target,
                                   "response column in --data: header name or 0-based index");
    cmd->add_flag("--no-standardize", args.no_standardize,
                  "skip centering/scaling of design columns");
    response->needs(design);
    target->needs(combined);
    combined->excludes(design);
}

RegressionProblem load_problem(const DataArgs& args) {
    if (!args.combined_path.empty()) {
        if (args.target.empty())
            throw gm::InvalidArgumentError("--data requires --target");
        return gm::ingest_csv_combined(args.combined_path, args.target,
                                       !args.no_standardize);
    }
    if (args.design_path.empty() || args.response_path.empty())
        throw gm::InvalidArgumentError(
            "provide --design and --response, or --data with --target");
    return gm::ingest_csv(args.design_path, args.response_path, !args.no_standardize);
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        gm::write_text(out_path, text);
}

gm::DesignKind parse_kind(const std::string& name) {
    if (name == "ar1") return gm::DesignKind::kAr1;
    if (name == "constant_corr") return gm::DesignKind::kConstantCorr;
    if (name == "constant_partial") return gm::DesignKind::kConstantPartial;
    if (name == "student_t") return gm::DesignKind::kStudentT;
    if (name == "bimodal") return gm::DesignKind::kBimodal;
    if (name == "csv") return gm::DesignKind::kCsv;
    throw gm::InvalidArgumentError("unknown design kind '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mirror-based variable selection with FDR control"};
    app.require_subcommand(1);

    // shared knobs
    std::string method = "ols";
    double q = 0.1;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int threads = default_threads();
    std::string out_path;
    std::string format = "json";
    std::optional<double> sigma;
    std::optional<double> fixed_lambda;
    bool recenter = false;
    int cv_folds = 5;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "master RNG seed")->capture_default_str();
        cmd->add_option("--threads", threads,
                        "worker threads (0 = auto); results never depend on it");
        cmd->add_option("--out", out_path, "output file (stdout when omitted)");
        cmd->add_option("--format", format, "output format")
            ->check(CLI::IsMember({"json", "csv"}))
            ->capture_default_str();
    };

    DataArgs select_data;
    auto* select = app.add_subcommand("select", "FDR-controlled variable selection");
    select->add_option("--method", method, "mirror regression backend")
        ->check(CLI::IsMember({"ols", "lasso"}))
        ->capture_default_str();
    select->add_option("--q", q, "target false discovery rate")->capture_default_str();
    select->add_option("--sigma", sigma, "noise scale for the lasso backend");
    select->add_option("--fixed-lambda", fixed_lambda,
                       "lasso penalty; skips cross-validation");
    select->add_option("--cv-folds", cv_folds, "cross-validation folds")
        ->capture_default_str();
    select->add_flag("--recenter", recenter,
                     "center truncated statistics at the refit mean");
    add_data_options(select, select_data);
    add_common(select);

    DataArgs fd_data;
    int top_k = 0;
    int bootstrap_samples = 200;
    auto* fd = app.add_subcommand("fd", "false-discovery count for the top-k features");
    fd->add_option("--k", top_k, "list length to audit")->required();
    fd->add_option("--method", method, "mirror regression backend")
        ->check(CLI::IsMember({"ols", "lasso"}))
        ->capture_default_str();
    fd->add_option("--bootstrap", bootstrap_samples, "bootstrap replicates (min 50)")
        ->capture_default_str();
    fd->add_option("--alpha", alpha, "interval level")->capture_default_str();
    fd->add_option("--sigma", sigma, "noise scale for the lasso backend");
    fd->add_option("--fixed-lambda", fixed_lambda,
                   "lasso penalty; skips cross-validation");
    fd->add_option("--cv-folds", cv_folds, "cross-validation folds")
        ->capture_default_str();
    fd->add_flag("--recenter", recenter, "center the interval at the point estimate");
    add_data_options(fd, fd_data);
    add_common(fd);

    std::string design_kind = "ar1";
    std::string design_csv;
    double design_param = 0.0;
    Eigen::Index sim_n = 0, sim_p = 0;
    int p1 = 0;
    int replicates = 100;
    double amplitude_sd = 1.0, noise_sd = 1.0;
    std::vector<std::string> methods;
    std::string plot_path;
    auto* simulate = app.add_subcommand("simulate", "replicated method comparison");
    simulate->add_option("--design-kind", design_kind, "row distribution")
        ->check(CLI::IsMember({"ar1", "constant_corr", "constant_partial", "student_t",
                               "bimodal", "csv"}))
        ->capture_default_str();
    simulate->add_option("--param", design_param, "correlation knob in [0, 0.95]")
        ->capture_default_str();
    simulate->add_option("--n", sim_n, "rows")->required();
    simulate->add_option("--p", sim_p, "columns")->required();
    simulate->add_option("--p1", p1, "signal count")->capture_default_str();
    simulate->add_option("--amplitude-sd", amplitude_sd, "signal amplitude spread")
        ->capture_default_str();
    simulate->add_option("--noise-sd", noise_sd, "noise level")->capture_default_str();
    simulate->add_option("--replicates", replicates, "independent repetitions")
        ->capture_default_str();
    simulate->add_option("--methods", methods, "comma-separated method list")
        ->delimiter(',')
        ->required();
    simulate->add_option("--q", q, "target false discovery rate")->capture_default_str();
    simulate->add_option("--design-csv", design_csv, "design file for --design-kind csv");
    simulate->add_option("--plot-out", plot_path,
                         "also write a long-format mean/sd summary CSV");
    add_common(simulate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& error) {
        nlohmann::json details;
        details["error"] = "invalid_argument";
        details["message"] = error.what();
        std::cerr << details.dump() << "\n";
        return error.get_exit_code() == 0 ? 1 : error.get_exit_code();
    }

    try {
        if (select->parsed()) {
            const RegressionProblem problem = load_problem(select_data);
            std::cerr << "loaded n=" << problem.design.rows()
                      << ", p=" << problem.design.cols() << "\n";
            gm::SelectionReport report;
            if (method == "ols") {
                report = gm::run_gm_ols(problem, q, seed, threads);
            } else {
                gm::GmLassoOptions options;
                options.fixed_lambda = fixed_lambda;
                options.sigma = sigma;
                options.recenter = recenter;
                options.cv_folds = cv_folds;
                options.threads = threads;
                report = gm::run_gm_lasso(problem, q, seed, options);
            }
            emit(format == "json" ? gm::to_json(report) : gm::to_csv(report), out_path);
        } else if (fd->parsed()) {
            const RegressionProblem problem = load_problem(fd_data);
            std::cerr << "loaded n=" << problem.design.rows()
                      << ", p=" << problem.design.cols() << "\n";
            gm::FdOptions options;
            options.bootstrap_samples = bootstrap_samples;
            options.alpha = alpha;
            options.recenter = recenter;
            options.threads = threads;
            options.fixed_lambda = fixed_lambda;
            options.sigma = sigma;
            options.cv_folds = cv_folds;
            const gm::FdInterval interval = gm::bootstrap_fd(
                problem,
                method == "ols" ? gm::GmMethod::kOls : gm::GmMethod::kLasso, top_k,
                seed, options);
            emit(format == "json" ? gm::to_json(interval) : gm::to_csv(interval),
                 out_path);
        } else {
            gm::DesignSpec design;
            design.kind = parse_kind(design_kind);
            design.n = sim_n;
            design.p = sim_p;
            design.param = design_param;
            design.csv_path = design_csv;
            gm::TruthSpec truth;
            truth.p1 = p1;
            truth.amplitude_sd = amplitude_sd;
            truth.noise_sd = noise_sd;
            const gm::ExperimentTable table =
                gm::run_experiment(design, truth, methods, replicates, q, seed, threads);
            emit(format == "json" ? gm::to_json(table) : gm::to_csv(table), out_path);
            if (!plot_path.empty())
                gm::write_text(plot_path, gm::plot_data({{design_param, table}}));
        }
    } catch (const gm::Error& error) {
        nlohmann::json details;
        details["error"] = error.kind();
        details["message"] = error.what();
        std::cerr << details.dump() << "\n";
        return 1;
    }
    return 0;
}
