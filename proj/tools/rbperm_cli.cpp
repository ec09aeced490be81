// rbperm: command-line front end for block-restricted permutation tests.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rbperm/diagnostics.hpp"
#include "rbperm/io.hpp"
#include "rbperm/permtest.hpp"
#include "rbperm/simharness.hpp"

namespace {

using namespace rbperm;

struct TestOptions {
    std::string input;
    std::string statistic = "mean";
    std::string scheme = "block";
    std::string bandwidth = "median";
    std::string sided = "two";
    std::string single_mode = "with-identity";
    TestConfig cfg;
};

void add_test_options(CLI::App* cmd, TestOptions& o) {
    cmd->add_option("--input", o.input, "CSV with numeric columns and a final group column (A/B)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--statistic", o.statistic, "Test statistic")
        ->check(CLI::IsMember({"mean", "mmd"}))
        ->capture_default_str();
    cmd->add_option("--scheme", o.scheme, "Reference distribution")
        ->check(CLI::IsMember({"block", "single", "full"}))
        ->capture_default_str();
    cmd->add_option("--rho", o.cfg.rho, "Representative fraction")->capture_default_str();
    cmd->add_option("--blocks", o.cfg.blocks, "Number of score blocks")->capture_default_str();
    cmd->add_option("--perms", o.cfg.perms, "Reference permutations M")->capture_default_str();
    cmd->add_option("--alpha", o.cfg.alpha, "Significance level")->capture_default_str();
    cmd->add_option("--seed", o.cfg.seed, "Master seed")->capture_default_str();
    cmd->add_option("--bandwidth", o.bandwidth, "Gaussian kernel bandwidth: median or a positive number")
        ->capture_default_str();
    cmd->add_option("--sided", o.sided, "Sidedness of the scalar mean difference")
        ->check(CLI::IsMember({"one", "two"}))
        ->capture_default_str();
    cmd->add_option("--single-mode", o.single_mode, "Law of the single-swap scheme")
        ->check(CLI::IsMember({"with-identity", "swap-only"}))
        ->capture_default_str();
    cmd->add_option("--design-retries", o.cfg.design_retries,
                    "Representative re-draws allowed when the swap set is empty")
        ->capture_default_str();
    cmd->add_flag("--verify", o.cfg.verify, "Check incremental statistics against full recomputation");
}

TestConfig resolve(const TestOptions& o) {
    TestConfig cfg = o.cfg;
    cfg.statistic = o.statistic == "mmd" ? StatisticKind::mmd2 : StatisticKind::mean_diff;
    cfg.scheme = o.scheme == "full" ? Scheme::full : o.scheme == "single" ? Scheme::single : Scheme::block;
    cfg.sided = o.sided == "one" ? Sidedness::one : Sidedness::two;
    cfg.single_mode = o.single_mode == "swap-only" ? SingleSwapMode::swap_only : SingleSwapMode::with_identity;
    if (o.bandwidth == "median") {
        cfg.bandwidth = Bandwidth::median();
    } else {
        double bw = 0.0;
        try {
            bw = std::stod(o.bandwidth);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--bandwidth", "expected 'median' or a positive number");
        }
        if (!(bw > 0.0)) throw CLI::ValidationError("--bandwidth", "must be positive");
        cfg.bandwidth = Bandwidth::value(bw);
    }
    cfg.validate();
    return cfg;
}

const char* bool_str(bool b) { return b ? "true" : "false"; }

std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : "na"; }

int cmd_test(const TestOptions& o, const std::string& dump_path) {
    const TestConfig cfg = resolve(o);
    const LabeledSample data = read_labeled_csv(o.input);
    const TestResult r = run_test(data.sample, data.labels, cfg);
    std::cout << "p_value=" << format_double(r.p_value) << " observed=" << format_double(r.observed)
              << " critical=" << format_double(r.critical_value) << " reject=" << bool_str(r.reject)
              << " n1=" << r.n1 << " n2=" << r.n2 << " L_max=" << r.l_max << '\n';
    if (!dump_path.empty()) {
        std::ofstream out(dump_path);
        if (!out) throw Error(Errc::io, "cannot write " + dump_path);
        write_column_csv(out, "perm_stat", r.perm_stats);
    }
    return 0;
}

int cmd_diagnose(const TestOptions& o, const DiagnosticsOptions& dopt) {
    const TestConfig cfg = resolve(o);
    const LabeledSample data = read_labeled_csv(o.input);
    const DiagnosticsReport r = diagnose(data.sample, data.labels, cfg, dopt);
    std::cout << "v_star=" << format_double(r.v_star) << '\n'
              << "v_star_stress=" << format_double(r.v_star_stress) << '\n'
              << "m_bound=" << format_double(r.m_bound) << '\n'
              << "r=" << format_double(r.r) << '\n'
              << "degenerate=" << bool_str(r.degenerate) << '\n'
              << "tau_a2=" << opt_str(r.tau_a2) << '\n'
              << "tau_b2=" << opt_str(r.tau_b2) << '\n'
              << "num_pairs=" << r.num_pairs << '\n'
              << "subsampled=" << bool_str(r.subsampled) << '\n'
              << "L_max=" << r.l_max << '\n'
              << "rho=" << format_double(r.rho) << '\n'
              << "rho_min=" << format_double(r.rho_min) << '\n'
              << "rho_opt=" << format_double(r.rho_opt) << '\n'
              << "feasible=" << bool_str(r.feasible) << '\n'
              << "mean_t=" << format_double(r.mean_t) << '\n'
              << "q_rest_bound=" << format_double(r.q_rest_bound) << '\n'
              << "in_variance_regime=" << bool_str(r.in_variance_regime) << '\n'
              << "q_full_chebyshev=" << format_double(r.q_full_chebyshev) << '\n'
              << "var_rest_empirical=" << format_double(r.var_rest_empirical) << '\n'
              << "var_full_empirical=" << format_double(r.var_full_empirical) << '\n'
              << "var_full_formula=" << opt_str(r.var_full_formula) << '\n'
              << "variance_ratio=" << format_double(r.variance_ratio) << '\n'
              << "observed=" << format_double(r.observed) << '\n'
              << "p_value=" << format_double(r.p_value) << '\n';
    return 0;
}

void print_summary(const std::vector<ExperimentSpec>& specs, const std::vector<ExperimentResult>& results) {
    for (std::size_t k = 0; k < specs.size(); ++k) {
        for (const auto& c : results[k].cells) {
            std::cerr << to_string(specs[k].statistic) << " d=" << specs[k].d << " n=" << c.n << ' '
                      << to_string(c.scheme) << ' ' << to_string(c.scenario)
                      << " rate=" << format_double(c.rejection_rate) << " design_errors=" << c.design_errors
                      << " runtime_s=" << c.mean_runtime << '\n';
        }
        for (const auto& v : results[k].variance) {
            std::cerr << "variance n=" << v.n << " ratio=" << format_double(v.ratio) << '\n';
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-restricted permutation two-sample tests"};
    app.require_subcommand(1);

    TestOptions test_opts;
    std::string dump_path;
    auto* test_cmd = app.add_subcommand("test", "Run a two-sample permutation test");
    add_test_options(test_cmd, test_opts);
    test_cmd->add_option("--dump-perm-stats", dump_path, "Write the reference statistics to this CSV");

    TestOptions diag_opts;
    DiagnosticsOptions dopt;
    auto* diag_cmd = app.add_subcommand("diagnose", "Report increment moments and tail-bound diagnostics");
    add_test_options(diag_cmd, diag_opts);
    diag_cmd->add_option("--variance-replicates", dopt.variance_replicates, "Monte Carlo draws per scheme")
        ->capture_default_str();
    diag_cmd->add_option("--stress-prefixes", dopt.stress_prefixes, "Random path prefixes for the stress v*")
        ->capture_default_str();
    diag_cmd->add_option("--rho-factor", dopt.rho_factor, "Safety factor c in [1.2, 1.5]")
        ->capture_default_str();

    std::string spec_path, sim_out = ".";
    std::optional<std::size_t> sim_threads;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a Gaussian simulation study from a spec file");
    sim_cmd->add_option("--spec", spec_path, "Experiment spec file")->required()->check(CLI::ExistingFile);
    sim_cmd->add_option("--out", sim_out, "Output directory")->capture_default_str();
    sim_cmd->add_option("--threads", sim_threads, "Worker threads (0: all cores)");

    std::uint64_t t1_seed = 20240601;
    std::size_t t1_nsim = 200;
    std::string t1_out = ".";
    std::optional<std::size_t> t1_threads;
    auto* t1_cmd = app.add_subcommand("table1", "Run the built-in power and variance-sweep profile");
    t1_cmd->add_option("--seed", t1_seed, "Master seed")->capture_default_str();
    t1_cmd->add_option("--n-sim", t1_nsim, "Replicates per cell")->capture_default_str();
    t1_cmd->add_option("--out", t1_out, "Output directory")->capture_default_str();
    t1_cmd->add_option("--threads", t1_threads, "Worker threads (0: all cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*test_cmd) return cmd_test(test_opts, dump_path);
        if (*diag_cmd) return cmd_diagnose(diag_opts, dopt);
        if (*sim_cmd) {
            auto spec = parse_experiment_spec_file(spec_path);
            if (sim_threads) spec.threads = *sim_threads;
            const std::vector<ExperimentSpec> specs{spec};
            print_summary(specs, run_and_write(specs, sim_out));
            return 0;
        }
        if (*t1_cmd) {
            auto specs = table1_profile(t1_nsim, t1_seed);
            if (t1_threads)
                for (auto& s : specs) s.threads = *t1_threads;
            print_summary(specs, run_and_write(specs, t1_out));
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
