#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "qsum/formal.hpp"
#include "qsum/gridfun.hpp"

namespace qsum {

// FNV-1a 64-bit content checksum used by the run manifest.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Deterministic float formatting for all artifacts (round-trip exact).
std::string fmt_double(double v);

// GridFunction CSV: header re_tau,im_tau,m,re_val,im_val, row-major over (tau, m).
std::string gridfunction_csv(const GridFunction& f);
// Reads the values back into a function with the given grids (validates shape).
GridFunction gridfunction_from_csv(const std::string& csv, const TauGrid& tau, const MGrid& m,
                                   GridKind kind);

// CoefficientSeries CSV: n,m,re_U,im_U plus the sidecar n,norm_beta_mu.
std::string coefficient_series_csv(const CoefficientSeries& s, const MGrid& grid);
std::string coefficient_norms_csv(const CoefficientSeries& s);

}  // namespace qsum
