#include "mtdc/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mtdc {

std::string format_double(double v) {
    char buf[40];
    // Shortest representation that round-trips.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) impl_->out << ',';
        impl_->out << cells[i];
    }
    impl_->out << '\n';
}

void CsvWriter::comment(const std::string& text) { impl_->out << "# " << text << '\n'; }

void write_matrix_csv(const std::string& path, const Mat& m,
                      const std::vector<std::string>& col_labels,
                      const std::vector<std::string>& row_labels) {
    CsvWriter w(path);
    if (!col_labels.empty()) {
        std::vector<std::string> hdr;
        if (!row_labels.empty()) hdr.push_back("state");
        hdr.insert(hdr.end(), col_labels.begin(), col_labels.end());
        w.row(hdr);
    }
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<std::string> cells;
        if (!row_labels.empty()) cells.push_back(row_labels[r]);
        for (Eigen::Index c = 0; c < m.cols(); ++c) cells.push_back(format_double(m(r, c)));
        w.row(cells);
    }
}

} // namespace mtdc
