#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "asyncfb/trace.hpp"

namespace asyncfb {

/// Shortest round-trip text for a double (17 significant digits).
std::string format_double(double v);

/// Columns: event_kind, sim_time, agent_id, k, block_checksum.
void write_trace_csv(const Trace& trace, std::ostream& os);
std::vector<TraceEvent> read_trace_csv(std::istream& is);

/// Little-endian float64, one row of `dim` values per iterate.
void write_iterates(const std::vector<Vector<double>>& rows, const std::filesystem::path& path);
std::vector<Vector<double>> read_iterates(const std::filesystem::path& path, Index dim);

/**
 * Writes trace.csv, iterates.bin and trace_meta.json (eta, beta, gamma,
 * block sizes, update mode, density flag, guard interventions) into `dir`.
 */
void save_trace(const Trace& trace, const std::filesystem::path& dir);

/// Inverse of save_trace. Throws FormatError on missing or inconsistent files.
Trace load_trace(const std::filesystem::path& dir);

} // namespace asyncfb
