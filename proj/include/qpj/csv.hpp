#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "qpj/errors.hpp"

namespace qpj {

/// Comma-separated output with '#' metadata lines ahead of the header row.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& meta,
              const std::vector<std::string>& columns)
        : os_(os), width_(columns.size()) {
        for (const auto& [k, v] : meta) os_ << "# " << k << ": " << v << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) os_ << (i ? "," : "") << columns[i];
        os_ << "\n";
    }

    /// Numeric cells use 12 significant digits so reruns are byte-identical.
    static std::string cell(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return buf;
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw Error("InternalError", "CSV row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << "\n";
    }

    void row(std::initializer_list<double> values) {
        std::vector<std::string> cells;
        for (double v : values) cells.push_back(cell(v));
        row(cells);
    }

private:
    std::ostream& os_;
    std::size_t width_;
};

}  // namespace qpj
