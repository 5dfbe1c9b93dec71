#pragma once

#include "mtdc/types.hpp"

#include <string>
#include <vector>

namespace mtdc {

/// Shortest round-trip decimal form of a double; deterministic across runs.
std::string format_double(double v);

struct CsvWriter {
    explicit CsvWriter(const std::string& path);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<std::string>& cells);
    void comment(const std::string& text); // "# ..." header line

private:
    struct Impl;
    Impl* impl_;
};

void write_matrix_csv(const std::string& path, const Mat& m,
                      const std::vector<std::string>& col_labels = {},
                      const std::vector<std::string>& row_labels = {});

} // namespace mtdc
