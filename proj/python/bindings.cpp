// Python bindings. Samples are passed as two arrays x (n1 x d) and y (n2 x d);
// one-dimensional arrays are treated as d = 1.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "rbperm/diagnostics.hpp"
#include "rbperm/permtest.hpp"
#include "rbperm/simharness.hpp"

namespace py = pybind11;
using namespace rbperm;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix as_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() == 1) {
        RowMatrix m(a.shape(0), 1);
        for (py::ssize_t i = 0; i < a.shape(0); ++i) m(i, 0) = a.at(i);
        return m;
    }
    if (a.ndim() != 2) throw py::value_error("expected a 1-d or 2-d array");
    RowMatrix m(a.shape(0), a.shape(1));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t j = 0; j < a.shape(1); ++j) m(i, j) = r(i, j);
    return m;
}

struct Pair {
    PooledSample sample;
    LabelState labels;
};

Pair pool(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
          const py::array_t<double, py::array::c_style | py::array::forcecast>& y) {
    const RowMatrix a = as_matrix(x), b = as_matrix(y);
    if (a.cols() != b.cols()) throw py::value_error("x and y must have the same number of columns");
    Eigen::MatrixXd z(a.rows() + b.rows(), a.cols());
    z.topRows(a.rows()) = a;
    z.bottomRows(b.rows()) = b;
    const auto n1 = static_cast<std::size_t>(a.rows()), n2 = static_cast<std::size_t>(b.rows());
    return {PooledSample(std::move(z), n1, n2), LabelState::blocked(n1, n2)};
}

Bandwidth to_bandwidth(std::optional<double> bw) {
    return bw ? Bandwidth::value(*bw) : Bandwidth::median();
}

TestConfig make_config(const std::string& statistic, const std::string& scheme, std::size_t perms, double alpha,
                       double rho, std::size_t blocks, std::optional<double> bandwidth, std::uint64_t seed,
                       const std::string& sided, const std::string& single_mode, std::size_t design_retries,
                       bool verify) {
    TestConfig cfg;
    if (statistic == "mean") cfg.statistic = StatisticKind::mean_diff;
    else if (statistic == "mmd") cfg.statistic = StatisticKind::mmd2;
    else throw py::value_error("statistic must be 'mean' or 'mmd'");
    if (scheme == "block") cfg.scheme = Scheme::block;
    else if (scheme == "single") cfg.scheme = Scheme::single;
    else if (scheme == "full") cfg.scheme = Scheme::full;
    else throw py::value_error("scheme must be 'block', 'single' or 'full'");
    if (sided == "one") cfg.sided = Sidedness::one;
    else if (sided == "two") cfg.sided = Sidedness::two;
    else throw py::value_error("sided must be 'one' or 'two'");
    if (single_mode == "with-identity") cfg.single_mode = SingleSwapMode::with_identity;
    else if (single_mode == "swap-only") cfg.single_mode = SingleSwapMode::swap_only;
    else throw py::value_error("single_mode must be 'with-identity' or 'swap-only'");
    cfg.perms = perms;
    cfg.alpha = alpha;
    cfg.rho = rho;
    cfg.blocks = blocks;
    cfg.bandwidth = to_bandwidth(bandwidth);
    cfg.seed = seed;
    cfg.design_retries = design_retries;
    cfg.verify = verify;
    cfg.validate();
    return cfg;
}

#define RBPERM_TEST_ARGS                                                                                   \
    py::arg("x"), py::arg("y"), py::kw_only(), py::arg("statistic") = "mean", py::arg("scheme") = "block", \
        py::arg("perms") = 100, py::arg("alpha") = 0.05, py::arg("rho") = 0.2, py::arg("blocks") = 4,      \
        py::arg("bandwidth") = py::none(), py::arg("seed") = 0, py::arg("sided") = "two",                  \
        py::arg("single_mode") = "with-identity", py::arg("design_retries") = 0, py::arg("verify") = false

std::string run_experiments(std::vector<ExperimentSpec> specs, const std::string& out_dir,
                            std::optional<std::size_t> threads) {
    if (threads)
        for (auto& s : specs) s.threads = *threads;
    py::gil_scoped_release release;
    run_and_write(specs, out_dir);
    return out_dir;
}

}  // namespace

PYBIND11_MODULE(_rbperm, m) {
    m.doc() = "Block-restricted permutation two-sample tests";

    static py::exception<Error> error(m, "RbpermError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    py::class_<TestResult>(m, "TestResult")
        .def_readonly("observed", &TestResult::observed)
        .def_readonly("p_value", &TestResult::p_value)
        .def_readonly("perm_stats", &TestResult::perm_stats)
        .def_readonly("reject", &TestResult::reject)
        .def_readonly("critical_value", &TestResult::critical_value)
        .def_readonly("n1", &TestResult::n1)
        .def_readonly("n2", &TestResult::n2)
        .def_readonly("l_max", &TestResult::l_max)
        .def_readonly("num_swaps", &TestResult::num_swaps)
        .def_readonly("design_attempts", &TestResult::design_attempts)
        .def_readonly("bandwidth", &TestResult::bandwidth)
        .def("__repr__", [](const TestResult& r) {
            return "TestResult(p_value=" + std::to_string(r.p_value) + ", observed=" + std::to_string(r.observed) +
                   ", reject=" + (r.reject ? "True" : "False") + ")";
        });

    py::class_<DiagnosticsReport>(m, "DiagnosticsReport")
        .def_readonly("v_star", &DiagnosticsReport::v_star)
        .def_readonly("v_star_stress", &DiagnosticsReport::v_star_stress)
        .def_readonly("m_bound", &DiagnosticsReport::m_bound)
        .def_readonly("r", &DiagnosticsReport::r)
        .def_readonly("degenerate", &DiagnosticsReport::degenerate)
        .def_readonly("tau_a2", &DiagnosticsReport::tau_a2)
        .def_readonly("tau_b2", &DiagnosticsReport::tau_b2)
        .def_readonly("num_pairs", &DiagnosticsReport::num_pairs)
        .def_readonly("subsampled", &DiagnosticsReport::subsampled)
        .def_readonly("l_max", &DiagnosticsReport::l_max)
        .def_readonly("rho", &DiagnosticsReport::rho)
        .def_readonly("rho_min", &DiagnosticsReport::rho_min)
        .def_readonly("rho_opt", &DiagnosticsReport::rho_opt)
        .def_readonly("feasible", &DiagnosticsReport::feasible)
        .def_readonly("mean_t", &DiagnosticsReport::mean_t)
        .def_readonly("q_rest_bound", &DiagnosticsReport::q_rest_bound)
        .def_readonly("in_variance_regime", &DiagnosticsReport::in_variance_regime)
        .def_readonly("q_full_chebyshev", &DiagnosticsReport::q_full_chebyshev)
        .def_readonly("var_rest_empirical", &DiagnosticsReport::var_rest_empirical)
        .def_readonly("var_full_empirical", &DiagnosticsReport::var_full_empirical)
        .def_readonly("var_full_formula", &DiagnosticsReport::var_full_formula)
        .def_readonly("variance_ratio", &DiagnosticsReport::variance_ratio)
        .def_readonly("observed", &DiagnosticsReport::observed)
        .def_readonly("p_value", &DiagnosticsReport::p_value);

    py::class_<RhoFeasibility>(m, "RhoFeasibility")
        .def_readonly("rho_min", &RhoFeasibility::rho_min)
        .def_readonly("feasible", &RhoFeasibility::feasible);
    py::class_<FreedmanTail>(m, "FreedmanTail")
        .def_readonly("bound", &FreedmanTail::bound)
        .def_readonly("rho_form", &FreedmanTail::rho_form)
        .def_readonly("min_form", &FreedmanTail::min_form);
    py::class_<QuantileBound>(m, "QuantileBound")
        .def_readonly("bound", &QuantileBound::bound)
        .def_readonly("in_variance_regime", &QuantileBound::in_variance_regime);

    m.def(
        "test",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y, const std::string& statistic,
           const std::string& scheme, std::size_t perms, double alpha, double rho, std::size_t blocks,
           std::optional<double> bandwidth, std::uint64_t seed, const std::string& sided,
           const std::string& single_mode, std::size_t design_retries, bool verify) {
            const auto cfg = make_config(statistic, scheme, perms, alpha, rho, blocks, bandwidth, seed, sided,
                                         single_mode, design_retries, verify);
            const Pair p = pool(x, y);
            py::gil_scoped_release release;
            return run_test(p.sample, p.labels, cfg);
        },
        RBPERM_TEST_ARGS, "Two-sample permutation test of x against y.");

    m.def(
        "diagnose",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y, const std::string& statistic,
           const std::string& scheme, std::size_t perms, double alpha, double rho, std::size_t blocks,
           std::optional<double> bandwidth, std::uint64_t seed, const std::string& sided,
           const std::string& single_mode, std::size_t design_retries, bool verify,
           std::size_t variance_replicates, std::size_t stress_prefixes, double rho_factor) {
            const auto cfg = make_config(statistic, scheme, perms, alpha, rho, blocks, bandwidth, seed, sided,
                                         single_mode, design_retries, verify);
            const Pair p = pool(x, y);
            DiagnosticsOptions opt;
            opt.variance_replicates = variance_replicates;
            opt.stress_prefixes = stress_prefixes;
            opt.rho_factor = rho_factor;
            py::gil_scoped_release release;
            return diagnose(p.sample, p.labels, cfg, opt);
        },
        RBPERM_TEST_ARGS, py::arg("variance_replicates") = 200, py::arg("stress_prefixes") = 100,
        py::arg("rho_factor") = 1.35, "Increment moments and tail-bound diagnostics at the observed labeling.");

    m.def(
        "mean_diff",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y) {
            const Pair p = pool(x, y);
            return Eigen::VectorXd(mean_diff_full(p.sample, p.labels));
        },
        py::arg("x"), py::arg("y"), "Coordinatewise mean(x) - mean(y).");

    m.def(
        "mmd2",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y, std::optional<double> bandwidth) {
            const Pair p = pool(x, y);
            return mmd2_full(gaussian_kernel_matrix(p.sample, to_bandwidth(bandwidth)), p.labels);
        },
        py::arg("x"), py::arg("y"), py::arg("bandwidth") = py::none(),
        "Unbiased Gaussian-kernel MMD^2; the bandwidth defaults to the median heuristic.");

    m.def(
        "median_heuristic",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& y) {
            return median_heuristic(pool(x, y).sample);
        },
        py::arg("x"), py::arg("y"));

    m.def("effective_resolution", &effective_resolution, py::arg("n1"), py::arg("n2"));
    m.def("rho_feasibility", &rho_feasibility, py::arg("r"), py::arg("n"), py::arg("alpha"), py::arg("rho"));
    m.def("rho_recommend", &rho_recommend, py::arg("rho_min"), py::arg("c") = 1.35);
    m.def("freedman_tail", &freedman_tail, py::arg("s"), py::arg("l"), py::arg("v_star"), py::arg("m_bound"),
          py::arg("rho_n") = py::none());
    m.def("quantile_bound", &quantile_bound, py::arg("l"), py::arg("v_star"), py::arg("alpha"), py::arg("mean_t"),
          py::arg("m_bound"));

    m.def(
        "simulate",
        [](const std::string& spec_path, const std::string& out_dir, std::optional<std::size_t> threads) {
            return run_experiments({parse_experiment_spec_file(spec_path)}, out_dir, threads);
        },
        py::arg("spec"), py::arg("out") = ".", py::arg("threads") = py::none(),
        "Run a simulation study from a spec file and write its CSV outputs.");

    m.def(
        "table1",
        [](const std::string& out_dir, std::uint64_t seed, std::size_t n_sim, std::optional<std::size_t> threads) {
            return run_experiments(table1_profile(n_sim, seed), out_dir, threads);
        },
        py::arg("out") = ".", py::arg("seed") = 20240601, py::arg("n_sim") = 200, py::arg("threads") = py::none(),
        "Run the built-in power and variance-sweep profile.");
}
