#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gm/errors.hpp"
#include "gm/fd.hpp"
#include "gm/linalg.hpp"
#include "gm/mirror.hpp"
#include "gm/post_selection.hpp"
#include "gm/sim.hpp"

namespace py = pybind11;

namespace {

gm::RegressionProblem make_problem(const gm::Matrix& design, const gm::Vector& response,
                                   bool standardize_inputs) {
    gm::RegressionProblem problem;
    problem.design = design;
    problem.response = response;
    return standardize_inputs ? gm::standardize(problem) : problem;
}

gm::SelectionReport select_features(const gm::Matrix& design, const gm::Vector& response,
                           double q, const std::string& method, std::uint64_t seed,
                           int threads, std::optional<double> fixed_lambda,
                           std::optional<double> sigma, bool recenter, int cv_folds,
                           bool standardize_inputs) {
    const gm::RegressionProblem problem =
        make_problem(design, response, standardize_inputs);
    if (method == "ols") return gm::run_gm_ols(problem, q, seed, threads);
    if (method != "lasso")
        throw gm::InvalidArgumentError("method must be 'ols' or 'lasso'");
    gm::GmLassoOptions options;
    options.fixed_lambda = fixed_lambda;
    options.sigma = sigma;
    options.recenter = recenter;
    options.cv_folds = cv_folds;
    options.threads = threads;
    return gm::run_gm_lasso(problem, q, seed, options);
}

gm::FdInterval fd_interval(const gm::Matrix& design, const gm::Vector& response,
                           int k, const std::string& method, std::uint64_t seed,
                           int bootstrap_samples, double alpha, bool recenter,
                           int threads, std::optional<double> fixed_lambda,
                           std::optional<double> sigma, int cv_folds,
                           bool standardize_inputs) {
    if (method != "ols" && method != "lasso")
        throw gm::InvalidArgumentError("method must be 'ols' or 'lasso'");
    const gm::RegressionProblem problem =
        make_problem(design, response, standardize_inputs);
    gm::FdOptions options;
    options.bootstrap_samples = bootstrap_samples;
    options.alpha = alpha;
    options.recenter = recenter;
    options.threads = threads;
    options.fixed_lambda = fixed_lambda;
    options.sigma = sigma;
    options.cv_folds = cv_folds;
    return gm::bootstrap_fd(problem,
                            method == "ols" ? gm::GmMethod::kOls : gm::GmMethod::kLasso,
                            k, seed, options);
}

gm::ExperimentTable simulate(const std::string& design_kind, Eigen::Index n,
                             Eigen::Index p, double param, int p1,
                             double amplitude_sd, double noise_sd,
                             const std::vector<std::string>& methods, int replicates,
                             double q, std::uint64_t seed, int threads,
                             const std::string& csv_path) {
    gm::DesignSpec design;
    if (design_kind == "ar1") design.kind = gm::DesignKind::kAr1;
    else if (design_kind == "constant_corr") design.kind = gm::DesignKind::kConstantCorr;
    else if (design_kind == "constant_partial") design.kind = gm::DesignKind::kConstantPartial;
    else if (design_kind == "student_t") design.kind = gm::DesignKind::kStudentT;
    else if (design_kind == "bimodal") design.kind = gm::DesignKind::kBimodal;
    else if (design_kind == "csv") design.kind = gm::DesignKind::kCsv;
    else throw gm::InvalidArgumentError("unknown design kind '" + design_kind + "'");
    design.n = n;
    design.p = p;
    design.param = param;
    design.csv_path = csv_path;
    gm::TruthSpec truth;
    truth.p1 = p1;
    truth.amplitude_sd = amplitude_sd;
    truth.noise_sd = noise_sd;
    return gm::run_experiment(design, truth, methods, replicates, q, seed, threads);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Mirror-based variable selection with FDR control";

    py::register_exception<gm::Error>(m, "GmError");

    py::class_<gm::SelectionReport>(m, "SelectionReport")
        .def_readonly("statistics", &gm::SelectionReport::statistics)
        .def_readonly("threshold", &gm::SelectionReport::threshold)
        .def_readonly("selected", &gm::SelectionReport::selected)
        .def_readonly("fdp_estimate", &gm::SelectionReport::fdp_estimate)
        .def_readonly("target_fdr", &gm::SelectionReport::target_fdr)
        .def_readonly("seed", &gm::SelectionReport::seed)
        .def_readonly("method", &gm::SelectionReport::method)
        .def_readonly("lambda_", &gm::SelectionReport::lambda)
        .def_readonly("sigma", &gm::SelectionReport::sigma)
        .def_readonly("diagnostic", &gm::SelectionReport::diagnostic)
        .def("__repr__", [](const gm::SelectionReport& r) {
            return "<SelectionReport method='" + r.method + "' selected=" +
                   std::to_string(r.selected.size()) + ">";
        });

    py::class_<gm::FdInterval>(m, "FdInterval")
        .def_readonly("k", &gm::FdInterval::k)
        .def_readonly("point_estimate", &gm::FdInterval::point_estimate)
        .def_readonly("ci_low", &gm::FdInterval::ci_low)
        .def_readonly("ci_high", &gm::FdInterval::ci_high)
        .def_readonly("upper_bound", &gm::FdInterval::upper_bound)
        .def_readonly("alpha", &gm::FdInterval::alpha)
        .def_readonly("bootstrap_samples", &gm::FdInterval::bootstrap_samples)
        .def_readonly("seed", &gm::FdInterval::seed)
        .def_readonly("samples", &gm::FdInterval::samples)
        .def_readonly("diagnostic", &gm::FdInterval::diagnostic)
        .def("__repr__", [](const gm::FdInterval& v) {
            return "<FdInterval k=" + std::to_string(v.k) + " point=" +
                   std::to_string(v.point_estimate) + " ci=[" +
                   std::to_string(v.ci_low) + ", " + std::to_string(v.ci_high) + "]>";
        });

    py::class_<gm::ExperimentRow>(m, "ExperimentRow")
        .def_readonly("replicate", &gm::ExperimentRow::replicate)
        .def_readonly("method", &gm::ExperimentRow::method)
        .def_readonly("fdp", &gm::ExperimentRow::fdp)
        .def_readonly("power", &gm::ExperimentRow::power)
        .def_readonly("selected_count", &gm::ExperimentRow::selected_count)
        .def_readonly("seed", &gm::ExperimentRow::seed);

    py::class_<gm::MethodSummary>(m, "MethodSummary")
        .def_readonly("method", &gm::MethodSummary::method)
        .def_readonly("fdr", &gm::MethodSummary::fdr)
        .def_readonly("mean_power", &gm::MethodSummary::mean_power)
        .def_readonly("replicates", &gm::MethodSummary::replicates)
        .def_readonly("failures", &gm::MethodSummary::failures);

    py::class_<gm::ExperimentTable>(m, "ExperimentTable")
        .def_readonly("rows", &gm::ExperimentTable::rows)
        .def_readonly("summary", &gm::ExperimentTable::summary)
        .def_readonly("q", &gm::ExperimentTable::q)
        .def_readonly("master_seed", &gm::ExperimentTable::master_seed);

    m.def("select", &select_features, py::arg("design"), py::arg("response"),
          py::arg("q") = 0.1, py::arg("method") = "ols", py::arg("seed") = 0,
          py::arg("threads") = 0, py::arg("fixed_lambda") = py::none(),
          py::arg("sigma") = py::none(), py::arg("recenter") = false,
          py::arg("cv_folds") = 5, py::arg("standardize") = true,
          "FDR-controlled variable selection via mirrored regression");

    m.def("fd_interval", &fd_interval, py::arg("design"), py::arg("response"),
          py::arg("k"), py::arg("method") = "ols", py::arg("seed") = 0,
          py::arg("bootstrap_samples") = 200, py::arg("alpha") = 0.05,
          py::arg("recenter") = false, py::arg("threads") = 0,
          py::arg("fixed_lambda") = py::none(), py::arg("sigma") = py::none(),
          py::arg("cv_folds") = 5, py::arg("standardize") = true,
          "Bootstrap interval for the false-discovery count of the top-k list");

    m.def("fd_hat", &gm::fd_hat, py::arg("statistics"), py::arg("k"),
          "Count of statistics below minus the k-th largest");

    m.def("mirror_statistic", &gm::mirror_statistic, py::arg("beta_plus"),
          py::arg("beta_minus"), "Signed agreement of a mirrored coefficient pair");

    m.def("standardize",
          [](const gm::Matrix& design, const gm::Vector& response) {
              const gm::RegressionProblem out = make_problem(design, response, true);
              return py::make_tuple(out.design, out.response);
          },
          py::arg("design"), py::arg("response"),
          "Center and scale design columns to squared norm n");

    m.def("run_experiment", &simulate, py::arg("design_kind"), py::arg("n"),
          py::arg("p"), py::arg("param") = 0.0, py::arg("p1") = 0,
          py::arg("amplitude_sd") = 1.0, py::arg("noise_sd") = 1.0,
          py::arg("methods") = std::vector<std::string>{"gm-ols"},
          py::arg("replicates") = 10, py::arg("q") = 0.1, py::arg("seed") = 0,
          py::arg("threads") = 0, py::arg("csv_path") = std::string{},
          "Replicated comparison of selection methods on synthetic data");
}
