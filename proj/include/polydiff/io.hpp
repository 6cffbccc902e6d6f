#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "polydiff/grid.hpp"

namespace polydiff {

/// Shortest round-trip decimal representation ("%.17g"); identical runs
/// therefore produce byte-identical text output.
std::string format_double(double x);

/// Writes a rectangular CSV table: header row, then one row per record, all
/// doubles rendered with format_double. Throws on ragged rows or IO failure.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// One named field of a snapshot.
struct SnapshotField {
  std::string name;
  Eigen::VectorXd values;
};

/// A binary state snapshot: grid geometry, the simulation clock and a list of
/// named node fields. Stored little-endian so files are portable and
/// bit-reproducible; a plain-text sidecar (<stem>.txt) describes the layout.
struct Snapshot {
  GridSpec grid;
  double time = 0.0;
  std::vector<SnapshotField> fields;
};

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap,
                    bool sidecar = true);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace polydiff
