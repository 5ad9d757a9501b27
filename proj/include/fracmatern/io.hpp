#pragma once

// File formats used by the command-line front end: strict CSV (header row,
// comma separators, '.' decimal, LF line endings), Matrix Market coordinate
// files for sparse matrices, and JSON serialization of the rational
// coefficient bundle.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include <json.hpp>

#include "rational.hpp"

namespace fracmatern {

/// File/parse problem: maps to exit code 1 in the CLI.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows; // rectangular, header.size() wide

    int ncol() const { return static_cast<int>(header.size()); }
    int nrow() const { return static_cast<int>(rows.size()); }

    int find(const std::string& name) const
    {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<double> column(const std::string& name) const
    {
        const int c = find(name);
        if (c < 0) throw IoError("CSV: missing required column '" + name + "'");
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[static_cast<size_t>(c)]);
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double_strict(const std::string& s, int line_no)
{
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw IoError("CSV: line " + std::to_string(line_no) +
                      ": cannot parse numeric field '" + s + "'");
    return v;
}

} // namespace detail

inline CsvTable read_csv(std::istream& in, const std::string& what = "input")
{
    CsvTable t;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back(); // tolerate CRLF
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        const auto fields = detail::split_csv_line(line);
        if (line_no == 1) {
            t.header = fields;
            continue;
        }
        if (fields.size() != t.header.size())
            throw IoError("CSV (" + what + "): line " + std::to_string(line_no) + " has " +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(t.header.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(detail::parse_double_strict(f, line_no));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw IoError("CSV (" + what + "): empty file");
    return t;
}

inline CsvTable read_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    return read_csv(in, path);
}

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const CsvTable& t)
{
    for (size_t i = 0; i < t.header.size(); ++i)
        out << (i ? "," : "") << t.header[i];
    out << '\n';
    for (const auto& r : t.rows) {
        for (size_t i = 0; i < r.size(); ++i)
            out << (i ? "," : "") << format_double(r[i]);
        out << '\n';
    }
}

inline void write_csv_file(const std::string& path, const CsvTable& t)
{
    std::ofstream out(path, std::ios::binary); // binary: keep LF on any platform
    if (!out) throw IoError("cannot open file for writing: " + path);
    write_csv(out, t);
}

// ---------------------------------------------------------------------------
// Matrix Market (coordinate real, general or symmetric, 1-based indices)

inline Eigen::SparseMatrix<double> read_matrix_market(std::istream& in,
                                                      const std::string& what = "input")
{
    std::string line;
    if (!std::getline(in, line))
        throw IoError("MatrixMarket (" + what + "): empty file");
    std::istringstream head(line);
    std::string banner, object, fmt, field, symm;
    head >> banner >> object >> fmt >> field >> symm;
    if (banner != "%%MatrixMarket" || object != "matrix" || fmt != "coordinate" ||
        field != "real" || (symm != "general" && symm != "symmetric"))
        throw IoError("MatrixMarket (" + what +
                      "): expected 'matrix coordinate real general|symmetric'");
    long rows = 0, cols = 0, nnz = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '%') continue;
        std::istringstream sz(line);
        if (!(sz >> rows >> cols >> nnz))
            throw IoError("MatrixMarket (" + what + "): bad size line");
        break;
    }
    if (rows <= 0 || cols <= 0)
        throw IoError("MatrixMarket (" + what + "): bad dimensions");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(symm == "symmetric" ? 2 * nnz : nnz));
    long seen = 0;
    while (seen < nnz && std::getline(in, line)) {
        if (line.empty() || line[0] == '%') continue;
        std::istringstream row(line);
        long i = 0, j = 0;
        double v = 0.0;
        if (!(row >> i >> j >> v))
            throw IoError("MatrixMarket (" + what + "): bad entry line: " + line);
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw IoError("MatrixMarket (" + what + "): index out of range: " + line);
        trip.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
        if (symm == "symmetric" && i != j)
            trip.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
        ++seen;
    }
    if (seen != nnz)
        throw IoError("MatrixMarket (" + what + "): expected " + std::to_string(nnz) +
                      " entries, found " + std::to_string(seen));
    Eigen::SparseMatrix<double> M(static_cast<int>(rows), static_cast<int>(cols));
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

inline Eigen::SparseMatrix<double> read_matrix_market_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    return read_matrix_market(in, path);
}

inline void write_matrix_market(std::ostream& out, const Eigen::SparseMatrix<double>& M,
                                bool symmetric = false)
{
    out << "%%MatrixMarket matrix coordinate real "
        << (symmetric ? "symmetric" : "general") << '\n';
    std::vector<std::string> lines;
    for (int k = 0; k < M.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it) {
            if (symmetric && it.row() < it.col()) continue; // lower triangle only
            lines.push_back(std::to_string(it.row() + 1) + " " +
                            std::to_string(it.col() + 1) + " " + format_double(it.value()));
        }
    out << M.rows() << ' ' << M.cols() << ' ' << lines.size() << '\n';
    for (const auto& l : lines) out << l << '\n';
}

// ---------------------------------------------------------------------------
// JSON for the rational coefficient bundle

inline nlohmann::json to_json(const RationalApprox& ra)
{
    return nlohmann::json{{"phi", ra.phi},
                          {"m", ra.m},
                          {"lb", ra.lb},
                          {"method", to_string(ra.method)},
                          {"numer", ra.numer},
                          {"denom", ra.denom},
                          {"k", ra.k},
                          {"residues", ra.residues},
                          {"poles", ra.poles}};
}

inline RationalApprox rational_from_json(const nlohmann::json& j)
{
    RationalApprox ra;
    ra.phi = j.at("phi").get<double>();
    ra.m = j.at("m").get<int>();
    ra.lb = j.at("lb").get<double>();
    ra.method = rational_method_from_string(j.at("method").get<std::string>());
    ra.numer = j.at("numer").get<std::vector<double>>();
    ra.denom = j.at("denom").get<std::vector<double>>();
    ra.k = j.at("k").get<double>();
    ra.residues = j.at("residues").get<std::vector<double>>();
    ra.poles = j.at("poles").get<std::vector<double>>();
    return ra;
}

} // namespace fracmatern
