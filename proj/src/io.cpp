#include "rbperm/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace rbperm {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        fields.push_back(first == std::string::npos ? std::string{}
                                                    : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw Error(Errc::io, "line " + std::to_string(line_no) + ": not a number: '" + s + "'");
    return v;
}

}  // namespace

LabeledSample read_labeled_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::io, "empty input: header row required");
    const auto header = split_row(line);
    if (header.size() < 2 || header.back() != "group")
        throw Error(Errc::io, "header must end with a 'group' column after at least one value column");
    const std::size_t d = header.size() - 1;

    std::vector<double> values;
    std::vector<Label> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_row(line);
        if (fields.size() != d + 1)
            throw Error(Errc::io, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(d + 1) + " fields");
        for (std::size_t c = 0; c < d; ++c) values.push_back(parse_double(fields[c], line_no));
        if (fields[d] == "A") {
            labels.push_back(Label::A);
        } else if (fields[d] == "B") {
            labels.push_back(Label::B);
        } else {
            throw Error(Errc::io, "line " + std::to_string(line_no) + ": group must be A or B");
        }
    }

    const auto n = static_cast<Eigen::Index>(labels.size());
    Eigen::MatrixXd data(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < data.cols(); ++c)
            data(i, c) = values[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(c)];

    LabelState state(std::move(labels));
    PooledSample sample(std::move(data), state.n1(), state.n2());
    return {std::move(sample), std::move(state)};
}

LabeledSample read_labeled_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path);
    return read_labeled_csv(in);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, ptr};
}

void write_labeled_csv(std::ostream& out, const PooledSample& sample, const LabelState& labels) {
    for (std::size_t c = 0; c < sample.dim(); ++c) out << 'x' << c << ',';
    out << "group\n";
    for (std::size_t i = 0; i < sample.size(); ++i) {
        for (std::size_t c = 0; c < sample.dim(); ++c)
            out << format_double(sample.data()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)))
                << ',';
        out << (labels[i] == Label::A ? 'A' : 'B') << '\n';
    }
}

void write_column_csv(std::ostream& out, const std::string& header, std::span<const double> values) {
    out << header << '\n';
    for (double v : values) out << format_double(v) << '\n';
}

}  // namespace rbperm
