#include "polydiff/io.hpp"

#include <cstdio>
#include <fstream>

#include "polydiff/binfmt.hpp"
#include "polydiff/errors.hpp"

namespace polydiff {

namespace {
constexpr char kSnapshotMagic[4] = {'P', 'D', 'I', 'F'};
constexpr std::uint32_t kSnapshotVersion = 1;
}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path, std::ios::binary);  // binary: fixed "\n" line ends
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw Error("csv row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
  if (!os) throw Error("write failure on " + path.string());
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap,
                    bool sidecar) {
  snap.grid.validate();
  const int n = snap.grid.total_nodes();
  for (const auto& f : snap.fields)
    if (f.values.size() != n)
      throw Error("snapshot field '" + f.name + "' has the wrong length");

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  binfmt::put_magic(os, kSnapshotMagic);
  binfmt::put_u32(os, kSnapshotVersion);
  binfmt::put_u32(os, static_cast<std::uint32_t>(snap.grid.dimension));
  binfmt::put_u32(os, static_cast<std::uint32_t>(snap.grid.count[0]));
  binfmt::put_u32(os, static_cast<std::uint32_t>(snap.grid.count[1]));
  binfmt::put_f64(os, snap.grid.length[0]);
  binfmt::put_f64(os, snap.grid.length[1]);
  binfmt::put_f64(os, snap.time);
  binfmt::put_u32(os, static_cast<std::uint32_t>(snap.fields.size()));
  for (const auto& f : snap.fields) {
    binfmt::put_u32(os, static_cast<std::uint32_t>(f.name.size()));
    os.write(f.name.data(), static_cast<std::streamsize>(f.name.size()));
    for (int i = 0; i < n; ++i) binfmt::put_f64(os, f.values[i]);
  }
  if (!os) throw Error("write failure on " + path.string());

  if (sidecar) {
    std::filesystem::path txt = path;
    txt.replace_extension(".txt");
    std::ofstream ts(txt, std::ios::binary);
    if (!ts) throw Error("cannot open " + txt.string() + " for writing");
    ts << "snapshot " << path.filename().string() << "\n"
       << "layout: magic 'PDIF', u32 version, u32 dimension, u32 nx, u32 ny,\n"
       << "        f64 Lx, f64 Ly, f64 time, u32 field count, then per field\n"
       << "        u32 name length, name bytes, f64 node values (x fastest).\n"
       << "        All integers and doubles little-endian.\n"
       << "version: " << kSnapshotVersion << "\n"
       << "dimension: " << snap.grid.dimension << "\n"
       << "interior nodes: " << snap.grid.count[0] << " x "
       << snap.grid.count[1] << "\n"
       << "domain: " << format_double(snap.grid.length[0]) << " x "
       << format_double(snap.grid.length[1]) << "\n"
       << "time: " << format_double(snap.time) << "\n";
    for (const auto& f : snap.fields)
      ts << "field: " << f.name << " (" << n << " values)\n";
    if (!ts) throw Error("write failure on " + txt.string());
  }
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  if (!binfmt::check_magic(is, kSnapshotMagic))
    throw Error(path.string() + ": not a snapshot file");
  const std::uint32_t version = binfmt::get_u32(is);
  if (version != kSnapshotVersion)
    throw Error(path.string() + ": unsupported snapshot version " +
                std::to_string(version));
  const auto dim = binfmt::get_u32(is);
  const auto nx = binfmt::get_u32(is);
  const auto ny = binfmt::get_u32(is);
  const double lx = binfmt::get_f64(is);
  const double ly = binfmt::get_f64(is);

  Snapshot snap;
  if (dim == 1)
    snap.grid = GridSpec::line(lx, static_cast<int>(nx));
  else if (dim == 2)
    snap.grid = GridSpec::rectangle(lx, ly, static_cast<int>(nx),
                                    static_cast<int>(ny));
  else
    throw Error(path.string() + ": bad dimension");
  snap.time = binfmt::get_f64(is);

  const auto nfields = binfmt::get_u32(is);
  const int n = snap.grid.total_nodes();
  for (std::uint32_t k = 0; k < nfields; ++k) {
    SnapshotField f;
    const auto len = binfmt::get_u32(is);
    f.name.resize(len);
    is.read(f.name.data(), len);
    if (!is) throw Error(path.string() + ": truncated field name");
    f.values.resize(n);
    for (int i = 0; i < n; ++i) f.values[i] = binfmt::get_f64(is);
    snap.fields.push_back(std::move(f));
  }
  return snap;
}

}  // namespace polydiff
