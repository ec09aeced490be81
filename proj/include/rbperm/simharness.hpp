#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbperm/core.hpp"
#include "rbperm/permtest.hpp"
#include "rbperm/rng.hpp"

namespace rbperm {

enum class Scenario { null, alternative };

const char* to_string(Scenario s) noexcept;
const char* to_string(Scheme s) noexcept;
const char* to_string(StatisticKind s) noexcept;

/// One Gaussian mean-shift experiment over a grid of per-group sizes.
struct ExperimentSpec {
    StatisticKind statistic = StatisticKind::mean_diff;
    std::size_t d = 1;
    std::vector<std::size_t> n_grid;
    std::vector<double> shift;  // mean of group B under the alternative; length d
    std::size_t n_sim = 100;
    std::vector<Scenario> scenarios{Scenario::null, Scenario::alternative};
    std::vector<Scheme> schemes{Scheme::full, Scheme::block};
    std::map<std::size_t, std::size_t> blocks_by_n;
    /// perms, alpha, rho, bandwidth, sidedness and retries; `blocks` and
    /// `seed` are filled per cell.
    TestConfig cfg;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: hardware concurrency

    bool run_power = true;
    bool variance_sweep = false;
    std::size_t variance_replicates = 1000;
    std::size_t variance_datasets = 20;
    Scheme variance_scheme = Scheme::single;

    [[nodiscard]] std::size_t blocks_for(std::size_t n) const;
    void validate() const;
};

struct GaussianPair {
    PooledSample sample;
    LabelState labels;
};

/// n rows from N(0, I_d) labeled A followed by n rows from N(shift, I_d)
/// labeled B. Variates are drawn row-major, A rows first.
GaussianPair generate_gaussian_pair(std::size_t n, std::size_t d, const std::vector<double>& shift,
                                    Stream& stream);

struct PowerCell {
    std::size_t n = 0;
    Scheme scheme = Scheme::full;
    Scenario scenario = Scenario::null;
    std::size_t blocks = 0;
    std::size_t rejections = 0;
    std::size_t accepts = 0;
    std::size_t design_errors = 0;
    double rejection_rate = 0.0;  // rejections / n_sim
    double std_error = 0.0;       // sqrt(p (1 - p) / n_sim)
    double mean_runtime = 0.0;    // seconds per test
    std::optional<double> mean_bandwidth;  // average resolved Gaussian bandwidth (MMD only)
};

struct VarianceRow {
    std::size_t n = 0;
    double h = 0.0;
    Scheme scheme = Scheme::single;
    double var_rest = 0.0;
    double var_full = 0.0;
    std::optional<double> var_full_formula;
    double ratio = 0.0;
};

struct ExperimentResult {
    std::vector<PowerCell> cells;
    std::vector<VarianceRow> variance;
};

/// Each replicate draws one dataset and runs every configured scheme on it.
ExperimentResult run_power_study(const ExperimentSpec& spec);

/// Per n: Monte Carlo variance of the statistic under the restricted scheme
/// and under full relabeling, averaged over null datasets.
std::vector<VarianceRow> run_variance_sweep(const ExperimentSpec& spec);

/// Power study and/or variance sweep, whichever `spec` enables.
ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_results_header(std::ostream& out);
void write_results_rows(std::ostream& out, const ExperimentSpec& spec, const ExperimentResult& result);
/// Per-cell outcome counts (rejections + accepts + design_errors = n_sim) and
/// the mean kernel bandwidth used.
void write_counts_header(std::ostream& out);
void write_counts_rows(std::ostream& out, const ExperimentSpec& spec, const ExperimentResult& result);
void write_variance_header(std::ostream& out);
void write_variance_rows(std::ostream& out, const ExperimentSpec& spec, const ExperimentResult& result);

/// Parses the key=value spec format with [experiment], [test], [blocks]
/// and [variance] sections.
ExperimentSpec parse_experiment_spec(std::istream& in);
ExperimentSpec parse_experiment_spec_file(const std::string& path);

/// Built-in profile: MMD^2 at d = 10 and mean difference at d = 2 over
/// n in {32, 64, 128, 256}, plus a scalar mean-difference variance sweep.
std::vector<ExperimentSpec> table1_profile(std::size_t n_sim, std::uint64_t seed);

/// Runs a list of experiments and writes results.csv and counts.csv (and
/// variance.csv when any sweep is enabled) into `out_dir`. Returns the per-experiment results.
std::vector<ExperimentResult> run_and_write(const std::vector<ExperimentSpec>& specs, const std::string& out_dir);

}  // namespace rbperm
