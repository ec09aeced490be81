#include "rbperm/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "rbperm/diagnostics.hpp"
#include "rbperm/io.hpp"

namespace rbperm {

const char* to_string(Scenario s) noexcept { return s == Scenario::null ? "null" : "alternative"; }

const char* to_string(Scheme s) noexcept {
    switch (s) {
        case Scheme::block: return "block";
        case Scheme::single: return "single";
        case Scheme::full: return "full";
    }
    return "unknown";
}

const char* to_string(StatisticKind s) noexcept { return s == StatisticKind::mean_diff ? "mean" : "mmd"; }

namespace {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Work is
/// claimed dynamically, so results must be written to slot i.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    pool.clear();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<double> alternative_mean(const ExperimentSpec& spec, Scenario scenario) {
    if (scenario == Scenario::null) return std::vector<double>(spec.d, 0.0);
    return spec.shift;
}

Stream experiment_root(const ExperimentSpec& spec) {
    return Stream(spec.seed).split(static_cast<std::uint64_t>(spec.statistic) * 1000 + spec.d);
}

enum class Outcome : std::uint8_t { accept, reject, design_error };

}  // namespace

std::size_t ExperimentSpec::blocks_for(std::size_t n) const {
    const auto it = blocks_by_n.find(n);
    if (it != blocks_by_n.end()) return it->second;
    return cfg.blocks;
}

void ExperimentSpec::validate() const {
    if (n_grid.empty()) throw Error(Errc::invalid_argument, "n_grid must not be empty");
    if (n_sim < 1) throw Error(Errc::invalid_argument, "n_sim must be at least 1");
    if (d < 1) throw Error(Errc::invalid_argument, "d must be at least 1");
    if (shift.size() != d) throw Error(Errc::invalid_argument, "shift must have d entries");
    if (scenarios.empty() || schemes.empty())
        throw Error(Errc::invalid_argument, "need at least one scenario and one scheme");
    for (std::size_t n : n_grid)
        if (n < 2) throw Error(Errc::invalid_argument, "per-group size must be at least 2");
}

GaussianPair generate_gaussian_pair(std::size_t n, std::size_t d, const std::vector<double>& shift,
                                    Stream& stream) {
    if (shift.size() != d) throw Error(Errc::invalid_argument, "shift must have d entries");
    const auto rows = static_cast<Eigen::Index>(2 * n);
    Eigen::MatrixXd data(rows, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < rows; ++i) {
        const bool group_b = i >= static_cast<Eigen::Index>(n);
        for (Eigen::Index c = 0; c < data.cols(); ++c)
            data(i, c) = stream.normal() + (group_b ? shift[static_cast<std::size_t>(c)] : 0.0);
    }
    return {PooledSample(std::move(data), n, n), LabelState::blocked(n, n)};
}

ExperimentResult run_power_study(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentResult result;
    const Stream root = experiment_root(spec);
    const std::size_t n_schemes = spec.schemes.size();

    for (std::size_t n : spec.n_grid) {
        for (Scenario scenario : spec.scenarios) {
            const std::vector<double> mean_b = alternative_mean(spec, scenario);
            const Stream cell_root = root.split(n).split(static_cast<std::uint64_t>(scenario));
            TestConfig cfg = spec.cfg;
            cfg.blocks = spec.blocks_for(n);

            std::vector<Outcome> outcomes(spec.n_sim * n_schemes, Outcome::accept);
            std::vector<double> runtimes(spec.n_sim * n_schemes, 0.0);
            std::vector<double> bandwidths(spec.n_sim, 0.0);
            parallel_for(spec.n_sim, spec.threads, [&](std::size_t rep) {
                const Stream rep_stream = cell_root.split(rep);
                Stream data_stream = rep_stream.split(0);
                const auto data = generate_gaussian_pair(n, spec.d, mean_b, data_stream);
                TestConfig local = cfg;
                local.seed = rep_stream.split(1).key();
                std::optional<KernelMatrix> kernel;
                if (spec.statistic == StatisticKind::mmd2)
                    kernel = gaussian_kernel_matrix(data.sample, local.bandwidth);
                if (kernel) bandwidths[rep] = kernel->bandwidth;
                for (std::size_t k = 0; k < n_schemes; ++k) {
                    local.scheme = spec.schemes[k];
                    const auto start = std::chrono::steady_clock::now();
                    Outcome outcome;
                    try {
                        const auto res = run_test(data.sample, data.labels, local, kernel ? &*kernel : nullptr);
                        outcome = res.reject ? Outcome::reject : Outcome::accept;
                    } catch (const Error& e) {
                        if (e.code() != Errc::design) throw;
                        outcome = Outcome::design_error;
                    }
                    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
                    outcomes[rep * n_schemes + k] = outcome;
                    runtimes[rep * n_schemes + k] = elapsed.count();
                }
            });

            for (std::size_t k = 0; k < n_schemes; ++k) {
                PowerCell cell;
                cell.n = n;
                cell.scheme = spec.schemes[k];
                cell.scenario = scenario;
                cell.blocks = cfg.blocks;
                double total_time = 0.0;
                for (std::size_t rep = 0; rep < spec.n_sim; ++rep) {
                    switch (outcomes[rep * n_schemes + k]) {
                        case Outcome::reject: ++cell.rejections; break;
                        case Outcome::accept: ++cell.accepts; break;
                        case Outcome::design_error: ++cell.design_errors; break;
                    }
                    total_time += runtimes[rep * n_schemes + k];
                }
                const auto n_sim = static_cast<double>(spec.n_sim);
                cell.rejection_rate = static_cast<double>(cell.rejections) / n_sim;
                cell.std_error = std::sqrt(cell.rejection_rate * (1.0 - cell.rejection_rate) / n_sim);
                cell.mean_runtime = total_time / n_sim;
                if (spec.statistic == StatisticKind::mmd2) {
                    double bw = 0.0;
                    for (double b : bandwidths) bw += b;
                    cell.mean_bandwidth = bw / n_sim;
                }
                result.cells.push_back(cell);
            }
        }
    }
    return result;
}

std::vector<VarianceRow> run_variance_sweep(const ExperimentSpec& spec) {
    spec.validate();
    if (spec.variance_datasets < 1) throw Error(Errc::invalid_argument, "need at least one dataset");
    std::vector<VarianceRow> rows;
    const Stream root = experiment_root(spec).split(0x5eed);
    const std::vector<double> zero(spec.d, 0.0);

    for (std::size_t n : spec.n_grid) {
        TestConfig cfg = spec.cfg;
        cfg.blocks = spec.blocks_for(n);
        cfg.scheme = spec.variance_scheme;
        const Stream n_root = root.split(n);

        std::vector<VarianceComparison> per_dataset(spec.variance_datasets);
        parallel_for(spec.variance_datasets, spec.threads, [&](std::size_t t) {
            const Stream ds = n_root.split(t);
            Stream data_stream = ds.split(0);
            const auto data = generate_gaussian_pair(n, spec.d, zero, data_stream);
            TestConfig local = cfg;
            local.seed = ds.split(1).key();
            per_dataset[t] = variance_comparison(data.sample, data.labels, local, spec.variance_replicates);
        });

        VarianceRow row;
        row.n = n;
        row.h = effective_resolution(n, n);
        row.scheme = spec.variance_scheme;
        double formula = 0.0;
        for (const auto& vc : per_dataset) {
            row.var_rest += vc.var_rest;
            row.var_full += vc.var_full;
            if (vc.var_full_formula) formula += *vc.var_full_formula;
        }
        const auto count = static_cast<double>(per_dataset.size());
        row.var_rest /= count;
        row.var_full /= count;
        if (per_dataset.front().var_full_formula) row.var_full_formula = formula / count;
        row.ratio = row.var_full > 0.0 ? row.var_rest / row.var_full : 0.0;
        rows.push_back(row);
    }
    return rows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    ExperimentResult result;
    if (spec.run_power) result = run_power_study(spec);
    if (spec.variance_sweep) result.variance = run_variance_sweep(spec);
    return result;
}

void write_results_header(std::ostream& out) {
    out << "stat,d,n,scheme,scenario,rejection_rate,stderr,n_sim,blocks,rho,alpha,seed\n";
}

void write_results_rows(std::ostream& out, const ExperimentSpec& spec, const ExperimentResult& result) {
    for (const auto& c : result.cells) {
        out << to_string(spec.statistic) << ',' << spec.d << ',' << c.n << ',' << to_string(c.scheme) << ','
            << to_string(c.scenario) << ',' << format_double(c.rejection_rate) << ','
            << format_double(c.std_error) << ',' << spec.n_sim << ',' << c.blocks << ','
            << format_double(spec.cfg.rho) << ',' << format_double(spec.cfg.alpha) << ',' << spec.seed << '\n';
    }
}

void write_counts_header(std::ostream& out) {
    out << "stat,d,n,scheme,scenario,rejections,accepts,design_errors,n_sim,mean_bandwidth\n";
}

void write_counts_rows(std::ostream& out, const ExperimentSpec& spec, const ExperimentResult& result) {
    for (const auto& c : result.cells) {
        out << to_string(spec.statistic) << ',' << spec.d << ',' << c.n << ',' << to_string(c.scheme) << ','
            << to_string(c.scenario) << ',' << c.rejections << ',' << c.accepts << ',' << c.design_errors << ','
            << spec.n_sim << ',' << (c.mean_bandwidth ? format_double(*c.mean_bandwidth) : std::string{}) << '\n';
    }
}

void write_variance_header(std::ostream& out) {
    out << "stat,d,n,h,scheme,var_rest,var_full,var_full_formula,ratio\n";
}

void write_variance_rows(std::ostream& out, const ExperimentSpec& spec, const ExperimentResult& result) {
    for (const auto& r : result.variance) {
        out << to_string(spec.statistic) << ',' << spec.d << ',' << r.n << ',' << format_double(r.h) << ','
            << to_string(r.scheme) << ',' << format_double(r.var_rest) << ',' << format_double(r.var_full)
            << ',' << (r.var_full_formula ? format_double(*r.var_full_formula) : std::string{}) << ','
            << format_double(r.ratio) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Spec file parsing

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

[[noreturn]] void bad(std::size_t line, const std::string& msg) {
    throw Error(Errc::io, "spec line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) bad(line, "not a number: " + s);
        return v;
    } catch (const std::logic_error&) {
        bad(line, "not a number: " + s);
    }
}

std::uint64_t to_uint(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size() || s.front() == '-') bad(line, "not a nonnegative integer: " + s);
        return v;
    } catch (const std::logic_error&) {
        bad(line, "not a nonnegative integer: " + s);
    }
}

bool to_bool(const std::string& s, std::size_t line) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad(line, "not a boolean: " + s);
}

StatisticKind to_statistic(const std::string& s, std::size_t line) {
    if (s == "mean") return StatisticKind::mean_diff;
    if (s == "mmd") return StatisticKind::mmd2;
    bad(line, "statistic must be mean or mmd");
}

Scheme to_scheme(const std::string& s, std::size_t line) {
    if (s == "block") return Scheme::block;
    if (s == "single") return Scheme::single;
    if (s == "full") return Scheme::full;
    bad(line, "scheme must be block, single or full");
}

Scenario to_scenario(const std::string& s, std::size_t line) {
    if (s == "null") return Scenario::null;
    if (s == "alternative") return Scenario::alternative;
    bad(line, "scenario must be null or alternative");
}

}  // namespace

ExperimentSpec parse_experiment_spec(std::istream& in) {
    ExperimentSpec spec;
    spec.cfg.design_retries = 10;
    std::vector<double> shift;
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "experiment" && section != "test" && section != "blocks" && section != "variance")
                bad(line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) bad(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) bad(line_no, "key outside of a section");

        if (section == "experiment") {
            if (key == "statistic") spec.statistic = to_statistic(value, line_no);
            else if (key == "d") spec.d = to_uint(value, line_no);
            else if (key == "n_grid") {
                spec.n_grid.clear();
                for (const auto& v : split_list(value)) spec.n_grid.push_back(to_uint(v, line_no));
            } else if (key == "shift") {
                shift.clear();
                for (const auto& v : split_list(value)) shift.push_back(to_double(v, line_no));
            } else if (key == "n_sim") spec.n_sim = to_uint(value, line_no);
            else if (key == "scenarios" || key == "scenario") {
                spec.scenarios.clear();
                for (const auto& v : split_list(value)) spec.scenarios.push_back(to_scenario(v, line_no));
            } else if (key == "schemes") {
                spec.schemes.clear();
                for (const auto& v : split_list(value)) spec.schemes.push_back(to_scheme(v, line_no));
            } else if (key == "seed") spec.seed = to_uint(value, line_no);
            else if (key == "threads") spec.threads = to_uint(value, line_no);
            else if (key == "power") spec.run_power = to_bool(value, line_no);
            else bad(line_no, "unknown key " + key);
        } else if (section == "test") {
            if (key == "perms") spec.cfg.perms = to_uint(value, line_no);
            else if (key == "alpha") spec.cfg.alpha = to_double(value, line_no);
            else if (key == "rho") spec.cfg.rho = to_double(value, line_no);
            else if (key == "blocks") spec.cfg.blocks = to_uint(value, line_no);
            else if (key == "bandwidth")
                spec.cfg.bandwidth = value == "median" ? Bandwidth::median() : Bandwidth::value(to_double(value, line_no));
            else if (key == "sided") {
                if (value == "one") spec.cfg.sided = Sidedness::one;
                else if (value == "two") spec.cfg.sided = Sidedness::two;
                else bad(line_no, "sided must be one or two");
            } else if (key == "design_retries") spec.cfg.design_retries = to_uint(value, line_no);
            else bad(line_no, "unknown key " + key);
        } else if (section == "blocks") {
            spec.blocks_by_n[to_uint(key, line_no)] = to_uint(value, line_no);
        } else {
            if (key == "enabled") spec.variance_sweep = to_bool(value, line_no);
            else if (key == "replicates") spec.variance_replicates = to_uint(value, line_no);
            else if (key == "datasets") spec.variance_datasets = to_uint(value, line_no);
            else if (key == "scheme") spec.variance_scheme = to_scheme(value, line_no);
            else bad(line_no, "unknown key " + key);
        }
    }
    // A single shift value means (value, 0, ..., 0).
    if (shift.size() == 1 && spec.d > 1) shift.resize(spec.d, 0.0);
    spec.shift = shift.empty() ? std::vector<double>(spec.d, 0.0) : shift;
    spec.validate();
    return spec;
}

ExperimentSpec parse_experiment_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path);
    return parse_experiment_spec(in);
}

std::vector<ExperimentSpec> table1_profile(std::size_t n_sim, std::uint64_t seed) {
    ExperimentSpec base;
    base.n_grid = {32, 64, 128, 256};
    base.n_sim = n_sim;
    base.seed = seed;
    base.cfg.perms = 100;
    base.cfg.alpha = 0.05;
    base.cfg.rho = 0.2;
    base.cfg.bandwidth = Bandwidth::median();
    base.cfg.design_retries = 10;

    ExperimentSpec mmd = base;
    mmd.statistic = StatisticKind::mmd2;
    mmd.d = 10;
    mmd.shift.assign(10, 0.0);
    mmd.shift[0] = 0.4;
    mmd.blocks_by_n = {{32, 2}, {64, 3}, {128, 4}, {256, 5}};

    ExperimentSpec mean = base;
    mean.statistic = StatisticKind::mean_diff;
    mean.d = 2;
    mean.shift = {0.4, 0.0};
    mean.blocks_by_n = {{32, 3}, {64, 4}, {128, 5}, {256, 6}};
    mean.cfg.sided = Sidedness::two;

    ExperimentSpec sweep = base;
    sweep.statistic = StatisticKind::mean_diff;
    sweep.d = 1;
    sweep.shift = {0.0};
    sweep.blocks_by_n = mean.blocks_by_n;
    sweep.cfg.sided = Sidedness::one;
    sweep.run_power = false;
    sweep.variance_sweep = true;
    sweep.variance_scheme = Scheme::single;
    sweep.variance_replicates = 2000;
    sweep.variance_datasets = 20;

    return {mmd, mean, sweep};
}

std::vector<ExperimentResult> run_and_write(const std::vector<ExperimentSpec>& specs, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<ExperimentResult> results;
    results.reserve(specs.size());
    for (const auto& spec : specs) results.push_back(run_experiment(spec));

    const bool any_power = std::any_of(specs.begin(), specs.end(), [](const auto& s) { return s.run_power; });
    const bool any_sweep = std::any_of(specs.begin(), specs.end(), [](const auto& s) { return s.variance_sweep; });
    const std::filesystem::path dir(out_dir);
    if (any_power) {
        std::ofstream out(dir / "results.csv");
        if (!out) throw Error(Errc::io, "cannot write results.csv in " + out_dir);
        write_results_header(out);
        for (std::size_t k = 0; k < specs.size(); ++k) write_results_rows(out, specs[k], results[k]);
        std::ofstream counts(dir / "counts.csv");
        if (!counts) throw Error(Errc::io, "cannot write counts.csv in " + out_dir);
        write_counts_header(counts);
        for (std::size_t k = 0; k < specs.size(); ++k) write_counts_rows(counts, specs[k], results[k]);
    }
    if (any_sweep) {
        std::ofstream out(dir / "variance.csv");
        if (!out) throw Error(Errc::io, "cannot write variance.csv in " + out_dir);
        write_variance_header(out);
        for (std::size_t k = 0; k < specs.size(); ++k) write_variance_rows(out, specs[k], results[k]);
    }
    return results;
}

}  // namespace rbperm
