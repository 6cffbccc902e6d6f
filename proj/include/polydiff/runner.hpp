#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>

#include "polydiff/config.hpp"
#include "polydiff/diagnostics.hpp"

namespace polydiff {

/// Worker-thread count: `requested` when > 0, else the POLYDIFF_THREADS
/// environment variable, else 1.
int resolve_threads(int requested);

/// Static block partition over [0, n); every index is processed exactly once
/// and results must be written by index, so the outcome is independent of the
/// thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

/// Experiment drivers behind the CLI subcommands. Each writes its artifacts
/// (including the fully resolved config) into `out_dir`, logs progress and
/// pass/fail lines to `log`, and returns the process exit code: 0 on success,
/// 2 on a failed check or divergence.
int run_simulate(const RunConfig& c, const std::filesystem::path& out_dir,
                 int threads, std::ostream& log);
int run_dissipation(const RunConfig& c, const std::filesystem::path& out_dir,
                    int threads, std::ostream& log);
int run_attract(const RunConfig& c, const std::filesystem::path& out_dir,
                int threads, std::ostream& log);
int run_mms(const RunConfig& c, const std::filesystem::path& out_dir,
            int threads, std::ostream& log);
int run_verify(const RunConfig& c, const std::filesystem::path& out_dir,
               int threads, std::ostream& log);

/// The initial state described by the config's `initial` block.
State make_initial_state(const RunConfig& c, const DiscreteOperators& ops);

/// Grid-refinement study on the shipped manufactured problem (imex-cn with a
/// step small enough that the spatial error dominates). `order` is the
/// observed rate between consecutive rows (first row: 0).
struct MmsSpatialRow {
  int n = 0;
  double h = 0.0, error = 0.0, order = 0.0;
};
std::vector<MmsSpatialRow> mms_spatial_study(const RunConfig& c,
                                             std::span<const int> sizes,
                                             double dt, double t_end);

/// Step-refinement study against a dense high-order reference on one fixed
/// grid, for both schemes. `slope_*` are least-squares fits of log error vs
/// log dt.
struct MmsTemporalRow {
  std::string scheme;
  double dt = 0.0, error = 0.0, order = 0.0;
};
struct MmsTemporalStudy {
  std::vector<MmsTemporalRow> rows;
  double slope_euler = 0.0;
  double slope_cn = 0.0;
};
MmsTemporalStudy mms_temporal_study(const RunConfig& c, int n,
                                    std::span<const double> dts,
                                    double t_end);

}  // namespace polydiff
