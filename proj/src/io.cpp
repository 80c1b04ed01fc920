#include "qsum/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qsum/errors.hpp"

namespace qsum {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open for writing: " + path.string());
    out << content;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string gridfunction_csv(const GridFunction& f) {
    std::ostringstream out;
    out << "re_tau,im_tau,m,re_val,im_val\n";
    for (std::size_t jt = 0; jt < f.nt(); ++jt) {
        cd tau = f.tau.node(jt);
        for (std::size_t jm = 0; jm < f.nm(); ++jm) {
            const cd& v = f.at(jt, jm);
            out << fmt_double(tau.real()) << ',' << fmt_double(tau.imag()) << ','
                << fmt_double(f.m.nodes[jm]) << ',' << fmt_double(v.real()) << ','
                << fmt_double(v.imag()) << '\n';
        }
    }
    return out.str();
}

GridFunction gridfunction_from_csv(const std::string& csv, const TauGrid& tau, const MGrid& m,
                                   GridKind kind) {
    GridFunction f(tau, m, kind);
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "re_tau,im_tau,m,re_val,im_val")
        throw ParseError("gridfunction_from_csv: bad header");
    std::size_t row = 0;
    const std::size_t total = f.nt() * f.nm();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= total) throw ParseError("gridfunction_from_csv: too many rows");
        double a, b, mm, re, im;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &a, &b, &mm, &re, &im) != 5)
            throw ParseError("gridfunction_from_csv: bad row " + std::to_string(row));
        f.values[row] = cd(re, im);
        ++row;
    }
    if (row != total) throw ParseError("gridfunction_from_csv: row count mismatch");
    f.check_finite();
    return f;
}

std::string coefficient_series_csv(const CoefficientSeries& s, const MGrid& grid) {
    std::ostringstream out;
    out << "n,m,re_U,im_U\n";
    for (std::size_t n = 0; n < s.profiles.size(); ++n)
        for (std::size_t jm = 0; jm < grid.size(); ++jm)
            out << n << ',' << fmt_double(grid.nodes[jm]) << ','
                << fmt_double(s.profiles[n][jm].real()) << ','
                << fmt_double(s.profiles[n][jm].imag()) << '\n';
    return out.str();
}

std::string coefficient_norms_csv(const CoefficientSeries& s) {
    std::ostringstream out;
    out << "n,norm_beta_mu\n";
    for (std::size_t n = 0; n < s.norms.size(); ++n)
        out << n << ',' << fmt_double(s.norms[n]) << '\n';
    return out.str();
}

}  // namespace qsum
