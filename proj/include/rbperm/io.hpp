#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "rbperm/core.hpp"

namespace rbperm {

struct LabeledSample {
    PooledSample sample;
    LabelState labels;
};

/// Reads the two-sample CSV format: a header row, d numeric columns, and a
/// final `group` column with values A or B.
LabeledSample read_labeled_csv(std::istream& in);
LabeledSample read_labeled_csv(const std::string& path);

void write_labeled_csv(std::ostream& out, const PooledSample& sample, const LabelState& labels);

/// One value per line under a single header.
void write_column_csv(std::ostream& out, const std::string& header, std::span<const double> values);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace rbperm
